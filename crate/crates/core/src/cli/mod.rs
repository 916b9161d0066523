//! Command-line front end.
//!
//! Every stage reads and writes inspectable files (model JSON, samples CSV,
//! AIR, gamma, weights and report JSON). Exit status is 0 on success, 1 for
//! invalid arguments or files, 2 when the input is well formed but
//! infeasible.

mod files;

use crate::air::{air_by_impulse, air_by_paths_capped, standardize, AirError};
use crate::ctc::{choose_k, empirical_ctc, population_ctc, CtcError, CtcMatrix, KRule};
use crate::dag::{DagError, DEFAULT_MAX_PATHS};
use crate::discovery::{default_delta, discover, recover_weights, DiscoveryError, OrderMode, DEFAULT_DELTA_ESTIMATED};
use crate::model::{random_model, simulate, FamilyChoice, HscmModel, ModelError, NoiseFamily, NoiseSpec, SampleMatrix};
use crate::oracle::{brute_force_ctc, exhaustive_roundtrip, mc_tail_ratio, OracleError};
use crate::rng::derive_seed;
use clap::{Args, Parser, Subcommand};
use files::*;
use serde::Serialize;
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

pub use files::FORMAT_VERSION;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Infeasible(String),
}

impl CliError {
    fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Infeasible(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "error: {m}"),
            CliError::Infeasible(m) => write!(f, "infeasible input: {m}"),
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<DagError> for CliError {
    fn from(e: DagError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<AirError> for CliError {
    fn from(e: AirError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<CtcError> for CliError {
    fn from(e: CtcError) -> Self {
        match e {
            CtcError::SupportMismatch { .. } | CtcError::ConstantColumn(_) => CliError::Infeasible(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<DiscoveryError> for CliError {
    fn from(e: DiscoveryError) -> Self {
        match e {
            DiscoveryError::InvalidDelta(_) | DiscoveryError::InvalidCoefficient { .. } => CliError::Usage(e.to_string()),
            _ => CliError::Infeasible(e.to_string()),
        }
    }
}

impl From<OracleError> for CliError {
    fn from(e: OracleError) -> Self {
        CliError::Usage(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "tailcausal", version, about = "Heavy-tailed homogeneous structural causal models: simulate, estimate tail coefficients, discover causal order")]
struct Cli {
    /// Worker threads for parallel stages.
    #[arg(long, global = true, env = "TAILCAUSAL_THREADS")]
    threads: Option<usize>,
    /// Omit the timestamp from output files.
    #[arg(long, global = true)]
    no_timestamp: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a random model.
    GenModel(GenModelArgs),
    /// Draw samples from a model.
    Simulate(SimulateArgs),
    /// Impulse responses of a model, by impulse and by path enumeration.
    Air(AirArgs),
    /// Tail coefficients: population (from a model) or estimated (from samples).
    Ctc(CtcArgs),
    /// Recover the weight matrix from a gamma file.
    Recover(RecoverArgs),
    /// Pairwise verdicts, ancestor sets and causal order from a gamma file.
    Classify(ClassifyArgs),
    /// Simulate, estimate and discover in one run, compared against the model.
    Pipeline(PipelineArgs),
    /// Monte Carlo and brute-force checks.
    #[command(subcommand)]
    Oracle(OracleCommand),
}

#[derive(Debug, Args, Serialize)]
struct GenModelArgs {
    #[arg(long)]
    d: usize,
    #[arg(long, default_value_t = 0.5)]
    edge_prob: f64,
    /// linear, max_linear, lp or mixed.
    #[arg(long, default_value = "linear")]
    family: String,
    /// Exponent for the lp family.
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    alpha: f64,
    #[arg(long, default_value = "pareto")]
    noise: NoiseFamily,
    #[arg(long, default_value_t = 1.0)]
    scale: f64,
    #[arg(long, default_value_t = 0.1)]
    coef_min: f64,
    #[arg(long, default_value_t = 2.0)]
    coef_max: f64,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(short, long)]
    #[serde(skip)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct SimulateArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    seed: Option<u64>,
    /// Samples CSV; provenance goes to `<output>.meta.json`.
    #[arg(short, long)]
    #[serde(skip)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct AirArgs {
    #[arg(long)]
    model: PathBuf,
    /// Path enumeration limit per node pair.
    #[arg(long, default_value_t = DEFAULT_MAX_PATHS)]
    max_paths: usize,
    /// Also write `<prefix>f.csv`, `<prefix>f_tilde.csv` and `<prefix>w.csv`.
    #[arg(long)]
    #[serde(skip)]
    csv_prefix: Option<PathBuf>,
    #[arg(short, long)]
    #[serde(skip)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct CtcArgs {
    /// Population coefficients from a model file.
    #[arg(long, conflicts_with = "samples", required_unless_present = "samples")]
    model: Option<PathBuf>,
    /// Estimated coefficients from a samples CSV.
    #[arg(long)]
    samples: Option<PathBuf>,
    /// Exceedance count; overrides --k-rule.
    #[arg(long, requires = "samples")]
    k: Option<usize>,
    #[arg(long, default_value = "power:0.4")]
    #[serde(serialize_with = "as_display")]
    k_rule: KRule,
    #[arg(short, long)]
    #[serde(skip)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct RecoverArgs {
    #[arg(long)]
    gamma: PathBuf,
    /// Threshold for "equal to 1"; defaults to 1e-9 for population and 0.05 for estimated input.
    #[arg(long)]
    delta: Option<f64>,
    /// Tail index, to also report the standardized impulse responses.
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(short, long)]
    #[serde(skip)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct ClassifyArgs {
    #[arg(long)]
    gamma: PathBuf,
    #[arg(long)]
    delta: Option<f64>,
    /// exact or ease.
    #[arg(long, default_value = "exact")]
    mode: OrderMode,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(short, long)]
    #[serde(skip)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct PipelineArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, default_value = "power:0.4")]
    #[serde(serialize_with = "as_display")]
    k_rule: KRule,
    #[arg(long, default_value_t = DEFAULT_DELTA_ESTIMATED)]
    delta: f64,
    #[arg(long, default_value = "exact")]
    mode: OrderMode,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(short, long)]
    #[serde(skip)]
    output: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum OracleCommand {
    /// Empirical P(X_node > x) / P(ε > x) against the sum of F^α.
    TailRatio(TailRatioArgs),
    /// Threshold-exceedance estimate of one tail coefficient.
    BruteForceCtc(BruteForceArgs),
    /// Population recovery on many random models.
    Roundtrip(RoundtripArgs),
}

#[derive(Debug, Args, Serialize)]
struct TailRatioArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    node: usize,
    #[arg(long, default_value_t = 0.999)]
    quantile: f64,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(short, long)]
    #[serde(skip)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct BruteForceArgs {
    #[arg(long)]
    model: PathBuf,
    /// Conditioning node.
    #[arg(long)]
    j: usize,
    /// Evaluated node.
    #[arg(long)]
    i: usize,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0.998)]
    quantile: f64,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(short, long)]
    #[serde(skip)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct RoundtripArgs {
    #[arg(long, default_value_t = 10)]
    d_max: usize,
    #[arg(long, default_value_t = 20)]
    graphs_per_size: usize,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(short, long)]
    #[serde(skip)]
    output: Option<PathBuf>,
}

fn as_display<T: std::fmt::Display, S: serde::Serializer>(v: &T, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(v)
}

/// Parses `argv` (including the program name), runs the command and returns
/// the exit status.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}

struct Context {
    timestamp: bool,
}

impl Context {
    fn provenance<C: Serialize>(&self, command: &str, seed: Option<u64>, inputs: Vec<InputHash>, config: &C) -> Provenance {
        Provenance {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            seed,
            inputs,
            config: serde_json::to_value(config).expect("serializable config"),
            timestamp_unix: self
                .timestamp
                .then(|| SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)),
        }
    }
}

fn execute(cli: Cli) -> Result<(), CliError> {
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(CliError::usage("--threads must be at least 1"));
        }
        // A pool built earlier in this process stays in effect.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    let ctx = Context { timestamp: !cli.no_timestamp };
    match cli.command {
        Command::GenModel(a) => gen_model(&ctx, a),
        Command::Simulate(a) => simulate_cmd(&ctx, a),
        Command::Air(a) => air_cmd(&ctx, a),
        Command::Ctc(a) => ctc_cmd(&ctx, a),
        Command::Recover(a) => recover_cmd(&ctx, a),
        Command::Classify(a) => classify_cmd(&ctx, a),
        Command::Pipeline(a) => pipeline_cmd(&ctx, a),
        Command::Oracle(OracleCommand::TailRatio(a)) => tail_ratio_cmd(&ctx, a),
        Command::Oracle(OracleCommand::BruteForceCtc(a)) => brute_force_cmd(&ctx, a),
        Command::Oracle(OracleCommand::Roundtrip(a)) => roundtrip_cmd(&ctx, a),
    }
}

fn resolve_seed(seed: &mut Option<u64>) -> u64 {
    *seed.get_or_insert_with(|| {
        let nanos = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_nanos() as u64).unwrap_or(0);
        let s = derive_seed(nanos, std::process::id() as u64, 0);
        eprintln!("note: no --seed given, using --seed {s}");
        s
    })
}

fn write_output(path: Option<&Path>, content: &str) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, content).map_err(|e| CliError::usage(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn load_model(path: &Path) -> Result<(HscmModel, InputHash), CliError> {
    let input = read_input(path)?;
    let file: ModelFile = parse_json(&input)?;
    Ok((file.to_model()?, input.hash))
}

fn load_gamma(path: &Path) -> Result<(CtcMatrix, InputHash), CliError> {
    let input = read_input(path)?;
    let file: GammaFile = parse_json(&input)?;
    Ok((file.to_ctc()?, input.hash))
}

fn check_unit(name: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(CliError::usage(format!("--{name} must lie in (0, 1), got {v}")))
    }
}

fn gen_model(ctx: &Context, mut a: GenModelArgs) -> Result<(), CliError> {
    let seed = resolve_seed(&mut a.seed);
    let choice = match a.family.as_str() {
        "mixed" => FamilyChoice::Mixed,
        name => FamilyChoice::Uniform(parse_family(name, a.p)?),
    };
    let noise = NoiseSpec::new(a.noise, a.alpha, a.scale)?;
    let model = random_model(a.d, a.edge_prob, choice, (a.coef_min, a.coef_max), noise, seed)?;
    let meta = ctx.provenance("gen-model", Some(seed), vec![], &a);
    write_output(a.output.as_deref(), &to_json(&ModelFile::from_model(&model, Some(meta))))
}

fn simulate_cmd(ctx: &Context, mut a: SimulateArgs) -> Result<(), CliError> {
    if a.n == 0 {
        return Err(CliError::usage("--n must be positive"));
    }
    let seed = resolve_seed(&mut a.seed);
    let (model, hash) = load_model(&a.model)?;
    let samples = simulate(&model, a.n, seed);
    write_output(a.output.as_deref(), &samples.to_csv())?;
    if let Some(out) = &a.output {
        let meta = SamplesMeta {
            version: FORMAT_VERSION,
            n: a.n,
            d: model.node_count(),
            provenance: ctx.provenance("simulate", Some(seed), vec![hash], &a),
        };
        let mut sidecar = out.clone().into_os_string();
        sidecar.push(".meta.json");
        write_output(Some(Path::new(&sidecar)), &to_json(&meta))?;
    }
    Ok(())
}

/// Entrywise agreement at `tol · max(1, |a|, |b|)`.
const AIR_AGREEMENT_TOL: f64 = 1e-12;

fn air_cmd(ctx: &Context, a: AirArgs) -> Result<(), CliError> {
    let (model, hash) = load_model(&a.model)?;
    let f = air_by_impulse(&model);
    let (ft, w) = standardize(&f, model.alpha())?;
    let agreement = match air_by_paths_capped(&model, a.max_paths) {
        Ok(paths) => {
            let (fa, pa) = (f.matrix().as_row_major(), paths.matrix().as_row_major());
            let max_abs_diff = fa.iter().zip(pa).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            let agrees = fa.iter().zip(pa).all(|(x, y)| (x - y).abs() <= AIR_AGREEMENT_TOL * 1f64.max(x.abs()).max(y.abs()));
            if !agrees {
                eprintln!("warning: impulse and path responses differ by up to {max_abs_diff:e}");
            }
            Agreement { checked: true, max_abs_diff: Some(max_abs_diff), relative_tolerance: AIR_AGREEMENT_TOL, agrees: Some(agrees), note: None }
        }
        Err(e) => Agreement { checked: false, max_abs_diff: None, relative_tolerance: AIR_AGREEMENT_TOL, agrees: None, note: Some(e.to_string()) },
    };
    if let Some(prefix) = &a.csv_prefix {
        for (name, m) in [("f", f.matrix()), ("f_tilde", &ft.matrix), ("w", w.matrix())] {
            let mut p = prefix.clone().into_os_string();
            p.push(format!("{name}.csv"));
            write_output(Some(Path::new(&p)), &m.to_csv())?;
        }
    }
    let file = AirFile {
        version: FORMAT_VERSION,
        d: f.dim(),
        alpha: model.alpha(),
        f: flat_matrix(f.matrix()),
        f_tilde: flat_matrix(&ft.matrix),
        w: flat_matrix(w.matrix()),
        agreement,
        conventions: conventions(),
        provenance: ctx.provenance("air", None, vec![hash], &a),
    };
    write_output(a.output.as_deref(), &to_json(&file))
}

fn population_gamma(model: &HscmModel) -> Result<(CtcMatrix, crate::air::WeightMatrix), CliError> {
    let (_, w) = standardize(&air_by_impulse(model), model.alpha())?;
    Ok((population_ctc(&w, model.dag())?, w))
}

fn ctc_cmd(ctx: &Context, a: CtcArgs) -> Result<(), CliError> {
    let (ctc, hash) = match (&a.model, &a.samples) {
        (Some(m), _) => {
            let (model, hash) = load_model(m)?;
            (population_gamma(&model)?.0, hash)
        }
        (None, Some(s)) => {
            let input = read_input(s)?;
            let samples = SampleMatrix::from_csv(&input.text)?;
            let k = a.k.unwrap_or_else(|| choose_k(samples.rows(), a.k_rule));
            (empirical_ctc(&samples, k)?, input.hash)
        }
        (None, None) => return Err(CliError::usage("give --model or --samples")),
    };
    let prov = ctx.provenance("ctc", None, vec![hash], &a);
    write_output(a.output.as_deref(), &to_json(&GammaFile::from_ctc(&ctc, Some(prov))))
}

fn recover_cmd(ctx: &Context, mut a: RecoverArgs) -> Result<(), CliError> {
    let (gamma, hash) = load_gamma(&a.gamma)?;
    let delta = *a.delta.get_or_insert(default_delta(gamma.kind));
    let rec = recover_weights(&gamma, delta)?;
    let ft = a.alpha.map(|al| rec.weights.to_standardized_air(al)).transpose()?;
    for d in &rec.diagnostics {
        eprintln!("note: {d}");
    }
    let prov = ctx.provenance("recover", None, vec![hash], &a);
    let file = WeightsFile::new(&rec.weights, ft.as_ref(), delta, &rec.ancestor_sets.sets, rec.diagnostics.clone(), prov);
    write_output(a.output.as_deref(), &to_json(&file))
}

fn classify_cmd(ctx: &Context, mut a: ClassifyArgs) -> Result<(), CliError> {
    let (gamma, hash) = load_gamma(&a.gamma)?;
    let delta = *a.delta.get_or_insert(default_delta(gamma.kind));
    let report = discover(&gamma, delta, a.mode, a.alpha)?;
    let file = ClassifyReport {
        version: FORMAT_VERSION,
        discovery: report.into(),
        conventions: conventions(),
        provenance: ctx.provenance("classify", None, vec![hash], &a),
    };
    write_output(a.output.as_deref(), &to_json(&file))
}

fn pipeline_cmd(ctx: &Context, mut a: PipelineArgs) -> Result<(), CliError> {
    let seed = resolve_seed(&mut a.seed);
    let (model, hash) = load_model(&a.model)?;
    let dag = model.dag();
    let samples = simulate(&model, a.n, seed);
    let k = a.k.unwrap_or_else(|| choose_k(a.n, a.k_rule));
    let estimated = empirical_ctc(&samples, k)?;
    let report = discover(&estimated, a.delta, a.mode, Some(model.alpha()))?;

    let (population, w) = population_gamma(&model)?;
    let truth: Vec<Vec<usize>> =
        dag.nodes().map(|j| dag.ancestors(j).map(|s| s.into_iter().collect())).collect::<Result<_, _>>()?;
    let discovery = DiscoveryBlock::from(report);
    let comparison = Comparison {
        gamma_max_abs_error: estimated.gamma.max_abs_diff(&population.gamma).unwrap_or(f64::NAN),
        ancestor_sets_match: discovery.ancestor_sets == truth,
        exact_order_is_linear_extension: discovery.exact_order.as_ref().map(|o| dag.is_linear_extension(o)),
        ease_order_is_linear_extension: dag.is_linear_extension(&discovery.ease_order),
        w_max_abs_error: discovery
            .recovered_w
            .as_ref()
            .map(|r| r.iter().zip(w.matrix().as_row_major()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)),
    };
    let file = PipelineReport {
        version: FORMAT_VERSION,
        n: a.n,
        k_used: k,
        discovery,
        estimated_gamma: flat_matrix(&estimated.gamma),
        estimated_gamma_unstandardized: flat_matrix(&estimated.unstandardized),
        population: PopulationBlock { gamma: flat_matrix(&population.gamma), w: flat_matrix(w.matrix()), ancestor_sets: truth },
        comparison,
        conventions: conventions(),
        provenance: ctx.provenance("pipeline", Some(seed), vec![hash], &a),
    };
    write_output(a.output.as_deref(), &to_json(&file))
}

#[derive(Serialize)]
struct OracleFile<T: Serialize> {
    version: u32,
    #[serde(flatten)]
    result: T,
    provenance: Provenance,
}

fn tail_ratio_cmd(ctx: &Context, mut a: TailRatioArgs) -> Result<(), CliError> {
    check_unit("quantile", a.quantile)?;
    let seed = resolve_seed(&mut a.seed);
    let (model, hash) = load_model(&a.model)?;
    let r = mc_tail_ratio(&model, a.node, a.quantile, a.n, seed)?;
    println!(
        "tail-ratio node {}: ratio {:.4} target {:.4} relative error {:.2}% ({} exceedances)",
        r.node,
        r.ratio,
        r.target,
        100.0 * r.relative_error(),
        r.exceedances
    );
    if a.output.is_some() {
        let prov = ctx.provenance("oracle tail-ratio", Some(seed), vec![hash], &a);
        write_output(a.output.as_deref(), &to_json(&OracleFile { version: FORMAT_VERSION, result: r, provenance: prov }))?;
    }
    Ok(())
}

#[derive(Serialize)]
struct BruteForceResult {
    j: usize,
    i: usize,
    brute_force: f64,
    population: f64,
}

fn brute_force_cmd(ctx: &Context, mut a: BruteForceArgs) -> Result<(), CliError> {
    check_unit("quantile", a.quantile)?;
    let seed = resolve_seed(&mut a.seed);
    let (model, hash) = load_model(&a.model)?;
    let value = brute_force_ctc(&model, a.j, a.i, a.n, a.quantile, seed)?;
    let population = population_gamma(&model)?.0.get(a.j, a.i);
    println!(
        "brute-force ctc (j={}, i={}): {value:.4} population {population:.4} difference {:.4}",
        a.j,
        a.i,
        (value - population).abs()
    );
    if a.output.is_some() {
        let result = BruteForceResult { j: a.j, i: a.i, brute_force: value, population };
        let prov = ctx.provenance("oracle brute-force-ctc", Some(seed), vec![hash], &a);
        write_output(a.output.as_deref(), &to_json(&OracleFile { version: FORMAT_VERSION, result, provenance: prov }))?;
    }
    Ok(())
}

fn roundtrip_cmd(ctx: &Context, mut a: RoundtripArgs) -> Result<(), CliError> {
    let seed = resolve_seed(&mut a.seed);
    let report = exhaustive_roundtrip(a.d_max, a.graphs_per_size, seed)?;
    println!(
        "roundtrip d <= {}, {} graphs: max error {:.3e}, support mismatches {}, failures {}: {}",
        report.d_max,
        report.graphs,
        report.max_error,
        report.support_mismatches,
        report.failures,
        if report.passed(a.tol) { "PASS" } else { "FAIL" }
    );
    if a.output.is_some() {
        let prov = ctx.provenance("oracle roundtrip", Some(seed), vec![], &a);
        write_output(a.output.as_deref(), &to_json(&OracleFile { version: FORMAT_VERSION, result: report, provenance: prov }))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn code(args: &[&str]) -> i32 {
        run(std::iter::once("tailcausal").chain(args.iter().copied()))
    }

    #[test]
    fn parse_errors_exit_one() {
        assert_eq!(code(&["gen-model", "--bogus"]), 1);
        assert_eq!(code(&["nonsense"]), 1);
        assert_eq!(code(&["--help"]), 0);
    }

    #[test]
    fn model_file_rejects_bad_schema() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.json");
        std::fs::write(&p, r#"{"version":1,"alpha":1.0,"noise":{"family":"pareto"},"nodes":[],"extra":1}"#).unwrap();
        assert!(load_model(&p).is_err());
        std::fs::write(
            &p,
            r#"{"version":1,"alpha":1.0,"noise":{"family":"pareto"},"nodes":[{"id":1,"family":"lp","parents":[]}]}"#,
        )
        .unwrap();
        assert!(matches!(load_model(&p), Err(CliError::Usage(m)) if m.contains("requires p")));
        std::fs::write(
            &p,
            r#"{"version":1,"alpha":1.0,"noise":{"family":"pareto"},"nodes":[{"id":1,"family":"linear","parents":[{"id":2,"coef":1.0}]},{"id":2,"family":"linear","parents":[{"id":1,"coef":1.0}]}]}"#,
        )
        .unwrap();
        assert!(load_model(&p).is_err());
    }

    #[test]
    fn model_file_round_trip() {
        let m = random_model(6, 0.5, FamilyChoice::Mixed, (0.1, 2.0), NoiseSpec::pareto(1.5).unwrap(), 3).unwrap();
        let text = to_json(&ModelFile::from_model(&m, None));
        let back: ModelFile = serde_json::from_str(&text).unwrap();
        assert_eq!(back.to_model().unwrap(), m);
    }

    #[test]
    fn gamma_orientation_required() {
        let g = GammaFile {
            version: 1,
            kind: crate::ctc::CtcKind::Population,
            d: 1,
            k_used: None,
            rows_condition: false,
            gamma: vec![1.0],
            gamma_unstandardized: None,
            conventions: None,
            provenance: None,
        };
        assert!(g.to_ctc().is_err());
    }

    #[test]
    fn error_classes() {
        assert_eq!(CliError::from(DiscoveryError::Infeasible { j: 1, i: 2, value: -1.0 }).exit_code(), 2);
        assert_eq!(CliError::from(DiscoveryError::InvalidDelta(2.0)).exit_code(), 1);
        assert_eq!(CliError::from(CtcError::ConstantColumn(1)).exit_code(), 2);
    }
}
