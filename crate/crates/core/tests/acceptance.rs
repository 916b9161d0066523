//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

mod common;

use rand::Rng;
use std::collections::BTreeMap;
use std::process::Command;
use std::time::{Duration, Instant};
use tailcausal::dag::Dag;
use tailcausal::discovery::{classify_pair, OrderMode, Verdict, DEFAULT_DELTA_POPULATION};
use tailcausal::model::{random_model, FamilyChoice};
use tailcausal::oracle::{brute_force_ctc, mc_tail_ratio};
use tailcausal::rng::{derive_seed, plain_rng};
use tailcausal::{
    air_by_impulse, air_by_paths, causal_order, check_axioms, empirical_ctc, population_ctc, recover_weights,
    simulate, standardize, FunctionFamily, HscmModel, NoiseSpec, StructuralFunctionSpec,
};

const ALPHAS: [f64; 4] = [0.8, 1.0, 1.5, 2.7];
const FAMILIES: [FunctionFamily; 5] = [
    FunctionFamily::Linear,
    FunctionFamily::MaxLinear,
    FunctionFamily::Lp { p: 0.5 },
    FunctionFamily::Lp { p: 2.0 },
    FunctionFamily::Lp { p: 3.0 },
];
const SEEDS: u64 = 20;
const REQUIRED: usize = 18;

struct Outcome {
    passed: bool,
    detail: String,
}

fn within(elapsed: Duration, limit: Duration) -> bool {
    elapsed <= limit
}

fn diamond(family: FunctionFamily, c: f64, alpha: f64) -> HscmModel {
    let dag = Dag::new(4, &common::DIAMOND_EDGES).unwrap();
    HscmModel::uniform(dag, family, c, NoiseSpec::pareto(alpha).unwrap()).unwrap()
}

fn air_cross_validation() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut bad = 0usize;
    let mut models = 0usize;
    for d in 2..=10usize {
        for (fi, family) in FAMILIES.iter().enumerate() {
            for g in 0..100u64 {
                let seed = derive_seed(1, (d * 10 + fi) as u64, g);
                let edge_prob = plain_rng(seed).random_range(0.1..0.9);
                let noise = NoiseSpec::pareto(1.0).unwrap();
                let m = random_model(d, edge_prob, FamilyChoice::Uniform(*family), (0.1, 2.0), noise, seed).unwrap();
                let a = air_by_impulse(&m);
                let b = air_by_paths(&m).unwrap();
                for (x, y) in a.matrix().as_row_major().iter().zip(b.matrix().as_row_major()) {
                    let rel = (x - y).abs() / 1f64.max(x.abs()).max(y.abs());
                    worst = worst.max(rel);
                    bad += usize::from(rel > 1e-12);
                }
                models += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    Outcome {
        passed: bad == 0 && within(elapsed, Duration::from_secs(30)),
        detail: format!("{models} models, worst scaled difference {worst:.2e}, {bad} entries over 1e-12, {elapsed:.2?}"),
    }
}

fn population_round_trip() -> Outcome {
    let start = Instant::now();
    let mut max_error = 0.0f64;
    let mut support_mismatches = 0usize;
    let mut failures = 0usize;
    for g in 0..200u64 {
        let seed = derive_seed(2, g, 0);
        let d = 1 + (g as usize % 10);
        let alpha = ALPHAS[(g as usize / 10) % 4];
        let edge_prob = plain_rng(seed).random_range(0.2..0.8);
        let m = random_model(d, edge_prob, FamilyChoice::Mixed, (0.1, 2.0), NoiseSpec::pareto(alpha).unwrap(), seed)
            .unwrap();
        let (_, w) = standardize(&air_by_impulse(&m), alpha).unwrap();
        let gamma = population_ctc(&w, m.dag()).unwrap();
        match recover_weights(&gamma, DEFAULT_DELTA_POPULATION) {
            Ok(rec) => {
                max_error = max_error.max(rec.weights.matrix().max_abs_diff(w.matrix()).unwrap());
                for h in 1..=d {
                    for i in 1..=d {
                        if (rec.weights.get(h, i) > 0.0) != m.dag().is_reflexive_ancestor(h, i) {
                            support_mismatches += 1;
                        }
                    }
                }
            }
            Err(_) => failures += 1,
        }
    }
    let elapsed = start.elapsed();
    Outcome {
        passed: failures == 0
            && support_mismatches == 0
            && max_error <= 1e-10
            && within(elapsed, Duration::from_secs(30)),
        detail: format!(
            "200 graphs, max error {max_error:.2e}, {support_mismatches} support mismatches, {failures} failures, {elapsed:.2?}"
        ),
    }
}

fn taxonomy() -> Outcome {
    let cases: [(&str, usize, &[(usize, usize)], Verdict); 4] = [
        ("chain 1->2", 2, &[(1, 2)], Verdict::ICausesJ),
        ("chain 2->1", 2, &[(2, 1)], Verdict::JCausesI),
        ("isolated pair", 2, &[], Verdict::NoLink),
        ("common cause 3->{1,2}", 3, &[(3, 1), (3, 2)], Verdict::CommonCause),
    ];
    let mut wrong = Vec::new();
    let mut checked = 0;
    for (name, d, edges, expected) in cases {
        for family in FAMILIES {
            for alpha in ALPHAS {
                let dag = Dag::new(d, edges).unwrap();
                let m = HscmModel::uniform(dag, family, 0.7, NoiseSpec::pareto(alpha).unwrap()).unwrap();
                let (_, w) = standardize(&air_by_impulse(&m), alpha).unwrap();
                let g = population_ctc(&w, m.dag()).unwrap();
                let got = classify_pair(g.get(1, 2), g.get(2, 1), DEFAULT_DELTA_POPULATION).unwrap();
                checked += 1;
                if got != expected {
                    wrong.push(format!("{name} {family} alpha {alpha}: {}", got.as_str()));
                }
            }
        }
    }
    Outcome { passed: wrong.is_empty(), detail: format!("{checked} configurations, mismatches: {wrong:?}") }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn ordered_pairs() -> impl Iterator<Item = (usize, usize)> {
    (1..=4).flat_map(|j| (1..=4).filter(move |&i| i != j).map(move |i| (j, i)))
}

fn estimator_accuracy() -> Outcome {
    let start = Instant::now();
    let m = diamond(FunctionFamily::Linear, 0.5, 1.5);
    let truth = common::gamma(&common::weights(&common::diamond_linear_air(0.5), 1.5), &common::DIAMOND_AN);
    let mut medians = Vec::new();
    let mut hits: BTreeMap<(usize, usize), usize> = ordered_pairs().map(|p| (p, 0)).collect();
    for n in [1_000usize, 10_000, 100_000] {
        let k = (n as f64).powf(0.4).floor() as usize;
        let mut errors = Vec::new();
        for s in 0..SEEDS {
            let est = empirical_ctc(&simulate(&m, n, derive_seed(4, n as u64, s)), k).unwrap();
            for (j, i) in ordered_pairs() {
                let e = (est.get(j, i) - truth[j - 1][i - 1]).abs();
                errors.push(e);
                if n == 100_000 && e <= 0.1 {
                    *hits.get_mut(&(j, i)).unwrap() += 1;
                }
            }
        }
        medians.push(median(errors));
    }
    let elapsed = start.elapsed();
    let min_hits = *hits.values().min().unwrap();
    let pairs_ok = hits.values().filter(|&&h| h >= REQUIRED).count();
    let monotone = medians.windows(2).all(|w| w[1] <= w[0]);
    Outcome {
        passed: min_hits >= REQUIRED && monotone && within(elapsed, Duration::from_secs(120)),
        detail: format!(
            "{pairs_ok}/12 pairs within 0.1 in at least {REQUIRED}/{SEEDS} runs, worst pair {min_hits}/{SEEDS}; median errors at n=1e3,1e4,1e5: {:.4}, {:.4}, {:.4}; {elapsed:.2?}",
            medians[0], medians[1], medians[2]
        ),
    }
}

fn tail_ratio() -> Outcome {
    let start = Instant::now();
    let chain = HscmModel::uniform(Dag::new(2, &[(1, 2)]).unwrap(), FunctionFamily::Linear, 1.0, NoiseSpec::pareto(1.0).unwrap())
        .unwrap();
    let dia = diamond(FunctionFamily::MaxLinear, 0.5, 1.0);
    let mut chain_hits = 0;
    let mut dia_hits = 0;
    for s in 0..SEEDS {
        let r = mc_tail_ratio(&chain, 2, 0.999, 1_000_000, derive_seed(5, 0, s)).unwrap();
        chain_hits += usize::from((r.ratio - 2.0).abs() <= 0.2 * 2.0);
        let r = mc_tail_ratio(&dia, 4, 0.999, 1_000_000, derive_seed(5, 1, s)).unwrap();
        dia_hits += usize::from((r.ratio - 2.25).abs() <= 0.2 * 2.25);
    }
    let elapsed = start.elapsed();
    Outcome {
        passed: chain_hits >= REQUIRED && dia_hits >= REQUIRED && within(elapsed, Duration::from_secs(120)),
        detail: format!(
            "chain within 20% of 2.0 in {chain_hits}/{SEEDS}, diamond max-linear within 20% of 2.25 in {dia_hits}/{SEEDS}; {elapsed:.2?}"
        ),
    }
}

fn axioms() -> Outcome {
    let families = [
        FunctionFamily::Linear,
        FunctionFamily::MaxLinear,
        FunctionFamily::Lp { p: 0.5 },
        FunctionFamily::Lp { p: 1.0 },
        FunctionFamily::Lp { p: 2.0 },
        FunctionFamily::Lp { p: 3.0 },
    ];
    let mut failed = Vec::new();
    for (k, family) in families.into_iter().enumerate() {
        let coefs = BTreeMap::from([(1, 0.3), (2, 1.7), (3, 0.9)]);
        let spec = StructuralFunctionSpec::new(family, coefs).unwrap();
        let report = check_axioms(&spec, 10_000, 1e-9, derive_seed(6, k as u64, 0));
        if !report.all_passed() {
            failed.push(format!("{family}"));
        }
    }
    Outcome {
        passed: failed.is_empty(),
        detail: format!("{} families x 5 properties x 10^4 instances, failing families: {failed:?}", families.len()),
    }
}

fn estimated_order() -> Outcome {
    let m = diamond(FunctionFamily::Linear, 0.5, 1.5);
    let mut hits = 0;
    for s in 0..SEEDS {
        let est = empirical_ctc(&simulate(&m, 100_000, derive_seed(7, 0, s)), 100).unwrap();
        let order = causal_order(&est, 0.05, OrderMode::Ease).unwrap();
        hits += usize::from(common::is_linear_extension(&order, &common::DIAMOND_EDGES));
    }
    Outcome { passed: hits >= REQUIRED, detail: format!("ease order is a linear extension in {hits}/{SEEDS} runs") }
}

fn oracle_cross_check() -> Outcome {
    let m = diamond(FunctionFamily::Linear, 0.5, 1.5);
    let n = 100_000;
    let mut hits: BTreeMap<(usize, usize), usize> = ordered_pairs().map(|p| (p, 0)).collect();
    let mut joint = 0;
    let mut worst = 0.0f64;
    for s in 0..SEEDS {
        let seed = derive_seed(8, 0, s);
        let est = empirical_ctc(&simulate(&m, n, seed), 100).unwrap();
        let mut all = true;
        for (j, i) in ordered_pairs() {
            let bf = brute_force_ctc(&m, j, i, n, 0.998, seed).unwrap();
            let diff = (bf - est.get(j, i)).abs();
            worst = worst.max(diff);
            all &= diff <= 0.1;
            *hits.get_mut(&(j, i)).unwrap() += usize::from(diff <= 0.1);
        }
        joint += usize::from(all);
    }
    let min_hits = *hits.values().min().unwrap();
    Outcome {
        passed: min_hits >= REQUIRED,
        detail: format!(
            "worst pair agrees within 0.1 in {min_hits}/{SEEDS} runs, all 12 pairs jointly in {joint}/{SEEDS}, largest difference {worst:.4}"
        ),
    }
}

fn reproducibility() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("diamond.json");
    std::fs::write(&model, common::diamond_model_json("linear", 0.5, 1.5)).unwrap();
    let run = |out: &str| {
        let path = dir.path().join(out);
        let status = Command::new(env!("CARGO_BIN_EXE_tailcausal"))
            .args(["pipeline", "--model"])
            .arg(&model)
            .args(["--n", "20000", "--seed", "99", "--no-timestamp", "-o"])
            .arg(&path)
            .status()
            .unwrap();
        (status.success(), std::fs::read(&path).unwrap_or_default())
    };
    let (ok_a, a) = run("a.json");
    let (ok_b, b) = run("b.json");
    Outcome {
        passed: ok_a && ok_b && !a.is_empty() && a == b,
        detail: format!("two pipeline runs with seed 99: {} and {} bytes, identical: {}", a.len(), b.len(), a == b),
    }
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("AIR cross-validation", air_cross_validation),
        ("population round trip", population_round_trip),
        ("pairwise taxonomy", taxonomy),
        ("estimator accuracy", estimator_accuracy),
        ("tail ratio", tail_ratio),
        ("axioms", axioms),
        ("estimated order", estimated_order),
        ("oracle cross-check", oracle_cross_check),
        ("reproducibility", reproducibility),
    ];
    let mut failures = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let outcome = check();
        failures += usize::from(!outcome.passed);
        println!(
            "criterion {} {name}: {} ({})",
            k + 1,
            if outcome.passed { "PASS" } else { "FAIL" },
            outcome.detail
        );
    }
    println!("acceptance: {}/{} criteria passed", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
