//! Versioned interchange formats.

use super::CliError;
use crate::air::{StandardizedAir, WeightMatrix};
use crate::ctc::{CtcKind, CtcMatrix};
use crate::discovery::{DiscoveryReport, OrderMode, PairVerdict};
use crate::matrix::SquareMatrix;
use crate::model::{FunctionFamily, HscmModel, NoiseFamily, NoiseSpec, StructuralFunctionSpec};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::Path;

pub const FORMAT_VERSION: u32 = 1;

/// Index conventions written into every matrix-bearing file.
pub fn conventions() -> BTreeMap<&'static str, &'static str> {
    BTreeMap::from([
        ("ids", "nodes are numbered 1..=d; matrices are flattened row-major"),
        ("gamma", "gamma[j][i]: row j is the conditioning variable, column i the evaluated variable"),
        ("w", "w[h][i] and f_tilde[h][i]: row h is the ancestor, column i the affected node"),
    ])
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InputHash {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub command: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default)]
    pub inputs: Vec<InputHash>,
    pub config: serde_json::Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp_unix: Option<u64>,
}

/// A file read from disk together with its content hash.
pub struct Input {
    pub text: String,
    pub hash: InputHash,
}

pub fn read_input(path: &Path) -> Result<Input, CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
    let sha256 = hex::encode(Sha256::digest(&bytes));
    let text = String::from_utf8(bytes)
        .map_err(|_| CliError::usage(format!("{} is not valid UTF-8", path.display())))?;
    Ok(Input { text, hash: InputHash { path: path.display().to_string(), sha256 } })
}

pub fn parse_json<T: for<'de> Deserialize<'de>>(input: &Input) -> Result<T, CliError> {
    serde_json::from_str(&input.text).map_err(|e| CliError::usage(format!("{}: {e}", input.hash.path)))
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable output");
    s.push('\n');
    s
}

fn flat(m: &SquareMatrix) -> Vec<f64> {
    m.as_row_major().to_vec()
}

fn square(name: &str, d: usize, data: Vec<f64>) -> Result<SquareMatrix, CliError> {
    if let Some(v) = data.iter().find(|v| !v.is_finite()) {
        return Err(CliError::usage(format!("{name} contains non-finite value {v}")));
    }
    let len = data.len();
    SquareMatrix::from_row_major(d, data)
        .ok_or_else(|| CliError::usage(format!("{name} has {len} entries, expected d*d = {}", d * d)))
}

// ---------------------------------------------------------------------------
// model.json

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub version: u32,
    pub alpha: f64,
    pub noise: NoiseFile,
    pub nodes: Vec<NodeFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<Provenance>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseFile {
    pub family: NoiseFamily,
    #[serde(default = "unit_scale")]
    pub scale: f64,
}

fn unit_scale() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeFile {
    pub id: usize,
    pub family: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default)]
    pub parents: Vec<ParentFile>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParentFile {
    pub id: usize,
    pub coef: f64,
}

pub fn parse_family(name: &str, p: Option<f64>) -> Result<FunctionFamily, CliError> {
    match (name, p) {
        ("linear", None) => Ok(FunctionFamily::Linear),
        ("max_linear", None) => Ok(FunctionFamily::MaxLinear),
        ("lp", Some(p)) => Ok(FunctionFamily::Lp { p }),
        ("lp", None) => Err(CliError::usage("family lp requires p")),
        ("linear" | "max_linear", Some(_)) => Err(CliError::usage(format!("family {name} takes no p"))),
        _ => Err(CliError::usage(format!("unknown family {name:?} (expected linear, max_linear or lp)"))),
    }
}

impl ModelFile {
    pub fn from_model(model: &HscmModel, meta: Option<Provenance>) -> Self {
        let nodes = model
            .functions()
            .iter()
            .enumerate()
            .map(|(k, f)| NodeFile {
                id: k + 1,
                family: f.family().name().to_string(),
                p: f.family().p(),
                parents: f.coefficients().iter().map(|(&id, &coef)| ParentFile { id, coef }).collect(),
            })
            .collect();
        let noise = model.noise();
        ModelFile {
            version: FORMAT_VERSION,
            alpha: noise.alpha(),
            noise: NoiseFile { family: noise.family(), scale: noise.scale() },
            nodes,
            meta,
        }
    }

    pub fn to_model(&self) -> Result<HscmModel, CliError> {
        check_version(self.version)?;
        let noise = NoiseSpec::new(self.noise.family, self.alpha, self.noise.scale)?;
        let mut functions = Vec::with_capacity(self.nodes.len());
        for (k, node) in self.nodes.iter().enumerate() {
            if node.id != k + 1 {
                return Err(CliError::usage(format!("node at position {} has id {}; ids must be 1..=d in order", k + 1, node.id)));
            }
            let family = parse_family(&node.family, node.p)?;
            let mut coefs = BTreeMap::new();
            for parent in &node.parents {
                if coefs.insert(parent.id, parent.coef).is_some() {
                    return Err(CliError::usage(format!("node {} lists parent {} twice", node.id, parent.id)));
                }
            }
            functions.push(StructuralFunctionSpec::new(family, coefs)?);
        }
        Ok(HscmModel::new(functions, noise)?)
    }
}

fn check_version(version: u32) -> Result<(), CliError> {
    if version == FORMAT_VERSION {
        Ok(())
    } else {
        Err(CliError::usage(format!("unsupported format version {version} (expected {FORMAT_VERSION})")))
    }
}

// ---------------------------------------------------------------------------
// samples sidecar, air.json

#[derive(Debug, Clone, Serialize)]
pub struct SamplesMeta {
    pub version: u32,
    pub n: usize,
    pub d: usize,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, Serialize)]
pub struct Agreement {
    pub checked: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_abs_diff: Option<f64>,
    pub relative_tolerance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub agrees: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AirFile {
    pub version: u32,
    pub d: usize,
    pub alpha: f64,
    pub f: Vec<f64>,
    pub f_tilde: Vec<f64>,
    pub w: Vec<f64>,
    pub agreement: Agreement,
    pub conventions: BTreeMap<&'static str, &'static str>,
    pub provenance: Provenance,
}

// ---------------------------------------------------------------------------
// gamma.json

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GammaFile {
    pub version: u32,
    pub kind: CtcKind,
    pub d: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_used: Option<usize>,
    pub rows_condition: bool,
    pub gamma: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_unstandardized: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conventions: Option<BTreeMap<String, String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
}

impl GammaFile {
    pub fn from_ctc(ctc: &CtcMatrix, provenance: Option<Provenance>) -> Self {
        GammaFile {
            version: FORMAT_VERSION,
            kind: ctc.kind,
            d: ctc.dim(),
            k_used: ctc.k_used,
            rows_condition: true,
            gamma: flat(&ctc.gamma),
            gamma_unstandardized: Some(flat(&ctc.unstandardized)),
            conventions: Some(conventions().into_iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()),
            provenance,
        }
    }

    pub fn to_ctc(&self) -> Result<CtcMatrix, CliError> {
        check_version(self.version)?;
        if !self.rows_condition {
            return Err(CliError::usage("gamma file must store the conditioning variable as row (rows_condition: true)"));
        }
        let gamma = square("gamma", self.d, self.gamma.clone())?;
        let mut ctc = CtcMatrix::from_gamma(self.kind, gamma, self.k_used);
        if let Some(raw) = &self.gamma_unstandardized {
            ctc.unstandardized = square("gamma_unstandardized", self.d, raw.clone())?;
        }
        Ok(ctc)
    }
}

// ---------------------------------------------------------------------------
// weights.json, report.json

#[derive(Debug, Clone, Serialize)]
pub struct WeightsFile {
    pub version: u32,
    pub d: usize,
    pub delta: f64,
    pub w: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f_tilde: Option<Vec<f64>>,
    pub ancestor_sets: Vec<Vec<usize>>,
    pub diagnostics: Vec<String>,
    pub note: &'static str,
    pub conventions: BTreeMap<&'static str, &'static str>,
    pub provenance: Provenance,
}

pub const F_NOT_RECOVERABLE: &str =
    "only the standardized quantities W and f_tilde are determined by gamma; the raw impulse responses F are not";

impl WeightsFile {
    pub fn new(
        w: &WeightMatrix,
        ft: Option<&StandardizedAir>,
        delta: f64,
        ancestor_sets: &[std::collections::BTreeSet<usize>],
        diagnostics: Vec<String>,
        provenance: Provenance,
    ) -> Self {
        WeightsFile {
            version: FORMAT_VERSION,
            d: w.dim(),
            delta,
            w: flat(w.matrix()),
            alpha: ft.map(|f| f.alpha),
            f_tilde: ft.map(|f| flat(&f.matrix)),
            ancestor_sets: ancestor_sets.iter().map(|s| s.iter().copied().collect()).collect(),
            diagnostics,
            note: F_NOT_RECOVERABLE,
            conventions: conventions(),
            provenance,
        }
    }
}

/// The discovery part shared by `classify` and `pipeline` reports.
#[derive(Debug, Clone, Serialize)]
pub struct DiscoveryBlock {
    pub d: usize,
    pub kind: CtcKind,
    pub delta: f64,
    pub mode: OrderMode,
    pub verdicts: Vec<PairVerdict>,
    /// Entry `j − 1` lists the detected ancestors of node `j`.
    pub ancestor_sets: Vec<Vec<usize>>,
    pub generations: Option<Vec<usize>>,
    pub causal_order: Option<Vec<usize>>,
    pub exact_order: Option<Vec<usize>>,
    pub ease_order: Vec<usize>,
    pub recovered_w: Option<Vec<f64>>,
    pub recovered_f_tilde: Option<Vec<f64>>,
    pub diagnostics: Vec<String>,
}

impl From<DiscoveryReport> for DiscoveryBlock {
    fn from(r: DiscoveryReport) -> Self {
        DiscoveryBlock {
            d: r.d,
            kind: r.kind,
            delta: r.delta,
            mode: r.mode,
            verdicts: r.verdicts,
            ancestor_sets: r.ancestor_sets.iter().map(|s| s.iter().copied().collect()).collect(),
            generations: r.generations,
            causal_order: r.causal_order,
            exact_order: r.exact_order,
            ease_order: r.ease_order,
            recovered_w: r.recovered_weights.map(|w| flat(w.matrix())),
            recovered_f_tilde: r.recovered_standardized_air.map(|f| flat(&f.matrix)),
            diagnostics: r.diagnostics,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassifyReport {
    pub version: u32,
    #[serde(flatten)]
    pub discovery: DiscoveryBlock,
    pub conventions: BTreeMap<&'static str, &'static str>,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, Serialize)]
pub struct PopulationBlock {
    pub gamma: Vec<f64>,
    pub w: Vec<f64>,
    pub ancestor_sets: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Comparison {
    pub gamma_max_abs_error: f64,
    pub ancestor_sets_match: bool,
    pub exact_order_is_linear_extension: Option<bool>,
    pub ease_order_is_linear_extension: bool,
    pub w_max_abs_error: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PipelineReport {
    pub version: u32,
    pub n: usize,
    pub k_used: usize,
    #[serde(flatten)]
    pub discovery: DiscoveryBlock,
    pub estimated_gamma: Vec<f64>,
    pub estimated_gamma_unstandardized: Vec<f64>,
    pub population: PopulationBlock,
    pub comparison: Comparison,
    pub conventions: BTreeMap<&'static str, &'static str>,
    pub provenance: Provenance,
}

pub fn flat_matrix(m: &SquareMatrix) -> Vec<f64> {
    flat(m)
}
