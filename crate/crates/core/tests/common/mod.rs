//! Hand-derived reference values shared by the integration tests.
#![allow(dead_code)]

/// Diamond 1 -> {2, 3} -> 4, linear with every coefficient `c`:
/// `F[h][i]` as a row-major 4x4 array (paths summed by hand).
pub fn diamond_linear_air(c: f64) -> [[f64; 4]; 4] {
    [
        [1.0, c, c, 2.0 * c * c],
        [0.0, 1.0, 0.0, c],
        [0.0, 0.0, 1.0, c],
        [0.0, 0.0, 0.0, 1.0],
    ]
}

/// Reflexive ancestor relation of the diamond: `AN[h][i]` iff `h ∈ An(i)`.
pub const DIAMOND_AN: [[bool; 4]; 4] = [
    [true, true, true, true],
    [false, true, false, true],
    [false, false, true, true],
    [false, false, false, true],
];

pub const DIAMOND_EDGES: [(usize, usize); 4] = [(1, 2), (1, 3), (2, 4), (3, 4)];

/// `W[h][i] = F[h][i]^α / Σ_k F[k][i]^α`.
pub fn weights(f: &[[f64; 4]; 4], alpha: f64) -> [[f64; 4]; 4] {
    let mut w = [[0.0; 4]; 4];
    for i in 0..4 {
        let norm: f64 = (0..4).map(|k| f[k][i].powf(alpha)).sum();
        for h in 0..4 {
            w[h][i] = f[h][i].powf(alpha) / norm;
        }
    }
    w
}

/// `Γ*[j][i] = Σ_{h ∈ An(i) ∩ An(j)} W[h][j]`.
pub fn gamma(w: &[[f64; 4]; 4], an: &[[bool; 4]; 4]) -> [[f64; 4]; 4] {
    let mut g = [[0.0; 4]; 4];
    for j in 0..4 {
        for i in 0..4 {
            g[j][i] = (0..4).filter(|&h| an[h][i] && an[h][j]).map(|h| w[h][j]).sum();
        }
    }
    g
}

/// Diamond model file text, linear, all coefficients `c`, Pareto noise.
pub fn diamond_model_json(family: &str, c: f64, alpha: f64) -> String {
    format!(
        r#"{{"version":1,"alpha":{alpha},"noise":{{"family":"pareto","scale":1.0}},"nodes":[
{{"id":1,"family":"{family}","parents":[]}},
{{"id":2,"family":"{family}","parents":[{{"id":1,"coef":{c}}}]}},
{{"id":3,"family":"{family}","parents":[{{"id":1,"coef":{c}}}]}},
{{"id":4,"family":"{family}","parents":[{{"id":2,"coef":{c}}},{{"id":3,"coef":{c}}}]}}]}}"#
    )
}

/// Whether `order` puts `j` before `i` for every edge `(j, i)`.
pub fn is_linear_extension(order: &[usize], edges: &[(usize, usize)]) -> bool {
    let pos = |v: usize| order.iter().position(|&x| x == v);
    edges.iter().all(|&(j, i)| matches!((pos(j), pos(i)), (Some(a), Some(b)) if a < b))
}
