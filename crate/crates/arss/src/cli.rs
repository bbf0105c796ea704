//! Command-line front end.
//!
//! Exit codes: 0 success, 2 usage error, 3 data error, 4 solver failure.
//! Failures print a single `error[<kind>]: <message>` line on stderr.

use std::path::{Path, PathBuf};
use std::time::Duration;

use arss_core::{select_exemplars, select_features, Method, RrssConfig, RrssPath, SelectionReport, SolverConfig};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::clock::StdClock;
use crate::dataio::{self, Format, LabeledDataset, NoiseKind, NoiseSpec};
use crate::error::Error;
use crate::evalbench::{self, BenchConfig, EvalConfig, PhaseMillis};
use crate::manifest::{sidecar_path, InputDigest, RunManifest};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_SOLVER: i32 = 4;

#[derive(Parser, Debug)]
#[command(name = "arss", version, about = "Robust exemplar and feature selection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Rank samples or features and write a JSON report.
    Select(SelectArgs),
    /// Time solvers over increasing N and write JSON lines.
    Bench(BenchArgs),
    /// kNN accuracy of selected exemplars against K.
    Eval(EvalArgs),
    /// Corrupt a data file.
    Noise(NoiseArgs),
    /// Convert between csv and bin.
    Convert(ConvertArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum MethodArg {
    Arss,
    RrssAuthorial,
    RrssAccelerated,
    Random,
}

impl MethodArg {
    fn as_str(self) -> &'static str {
        match self {
            MethodArg::Arss => "arss",
            MethodArg::RrssAuthorial => "rrss-authorial",
            MethodArg::RrssAccelerated => "rrss-accelerated",
            MethodArg::Random => "random",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Mode {
    Samples,
    Features,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Csv,
    Bin,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Bin => Format::Bin,
        }
    }
}

#[derive(Args, Debug, Clone, Serialize)]
struct SolverArgs {
    /// Regularization weight; required by every solver method.
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long, default_value_t = 0.5)]
    p: f64,
    #[arg(long, default_value_t = 0.1)]
    mu0: f64,
    #[arg(long, default_value_t = 1.2)]
    rho: f64,
    #[arg(long, default_value_t = 1e-10)]
    eps: f64,
    /// ALM iterations (arss) or outer reweighting iterations (rrss).
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long, default_value_t = 1e-6)]
    feas_tol: f64,
    #[arg(long)]
    deterministic: bool,
}

#[derive(Args, Debug)]
struct SelectArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    #[arg(long, value_enum, default_value = "arss")]
    method: MethodArg,
    #[arg(long, value_enum, default_value = "samples")]
    mode: Mode,
    #[arg(long)]
    k: usize,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[arg(long, value_enum, default_value = "arss")]
    method: MethodArg,
    /// Comma-separated ascending sample counts.
    #[arg(long, value_delimiter = ',', required = true)]
    sizes: Vec<usize>,
    #[arg(long, default_value_t = 16)]
    feature_dim: usize,
    #[arg(long, default_value_t = 3)]
    repeats: usize,
    /// Iteration budget per cell.
    #[arg(long, default_value_t = 5)]
    iters: usize,
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    #[arg(long, default_value_t = 0.5)]
    p: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Cells slower than this are censored and larger sizes skipped.
    #[arg(long)]
    timeout_secs: Option<f64>,
    #[arg(long)]
    exclusive_timing: bool,
    #[arg(long)]
    out: PathBuf,
    /// Optional CSV mirror of the records.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    #[arg(long, value_enum, default_value = "arss")]
    method: MethodArg,
    #[arg(long, value_delimiter = ',', required = true)]
    k_list: Vec<usize>,
    /// Comma-separated seeds, one split per seed.
    #[arg(long, value_delimiter = ',', default_value = "0")]
    seeds: Vec<u64>,
    /// Candidate set size; defaults to half the samples.
    #[arg(long)]
    candidates: Option<usize>,
    #[arg(long, default_value_t = 0.1)]
    noise_fraction: f64,
    #[arg(long, value_delimiter = ',', default_value = "gaussian,laplace,salt_pepper")]
    noise_kinds: Vec<NoiseKind>,
    #[arg(long, default_value_t = evalbench::DEFAULT_KNN_K)]
    knn_k: usize,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct NoiseArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum)]
    out_format: Option<FormatArg>,
    #[arg(long, default_value_t = 0.1)]
    fraction: f64,
    #[arg(long, value_delimiter = ',', default_value = "gaussian,laplace,salt_pepper")]
    kinds: Vec<NoiseKind>,
    #[arg(long, default_value_t = 0.1)]
    gaussian_sigma: f64,
    #[arg(long, default_value_t = 0.1)]
    laplace_scale: f64,
    #[arg(long, default_value_t = 0.1)]
    sp_fraction: f64,
    /// Fail on unlabeled input instead of corrupting globally.
    #[arg(long)]
    require_labels: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
struct ConvertArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum)]
    from: Option<FormatArg>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum)]
    to: Option<FormatArg>,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Data(String),
    Solver(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Solver(arss_core::Error::InvalidConfig(m)) => Failure::Usage(m.into()),
            Error::Solver(err @ arss_core::Error::InvalidK { .. }) => Failure::Usage(err.to_string()),
            Error::Solver(err) => Failure::Solver(err.to_string()),
            Error::InvalidNoise(m) => Failure::Usage(format!("invalid noise spec: {m}")),
            other => Failure::Data(other.to_string()),
        }
    }
}

impl From<arss_core::Error> for Failure {
    fn from(e: arss_core::Error) -> Self {
        Error::Solver(e).into()
    }
}

/// Parses `argv` (including the program name) and runs the command.
pub fn parse_and_run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let argv: Vec<std::ffi::OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return EXIT_OK;
            }
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("invalid arguments");
            eprintln!("error[usage]: {}", first.trim_start_matches("error: "));
            return EXIT_USAGE;
        }
    };
    let argv: Vec<String> = argv.iter().map(|s| s.to_string_lossy().into_owned()).collect();
    let result = match cli.command {
        Command::Select(a) => run_select(a, &argv),
        Command::Bench(a) => run_bench(a, &argv),
        Command::Eval(a) => run_eval(a, &argv),
        Command::Noise(a) => run_noise(a, &argv),
        Command::Convert(a) => run_convert(a, &argv),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let (kind, msg, code) = match f {
                Failure::Usage(m) => ("usage", m, EXIT_USAGE),
                Failure::Data(m) => ("data", m, EXIT_DATA),
                Failure::Solver(m) => ("solver", m, EXIT_SOLVER),
            };
            eprintln!("error[{kind}]: {}", msg.replace('\n', " "));
            code
        }
    }
}

fn resolve_format(explicit: Option<FormatArg>, path: &Path) -> Format {
    explicit.map(Format::from).or_else(|| Format::from_path(path)).unwrap_or(Format::Csv)
}

fn load(path: &Path, format: Option<FormatArg>) -> Result<(LabeledDataset, InputDigest), Failure> {
    let ds = dataio::read_matrix(path, resolve_format(format, path))?;
    Ok((ds, InputDigest::of_file(path)?))
}

fn build_method(method: MethodArg, s: &SolverArgs) -> Result<Method, Failure> {
    if method == MethodArg::Random {
        return Ok(Method::Random);
    }
    let gamma = s
        .gamma
        .ok_or_else(|| Failure::Usage(format!("--gamma is required for method {}", method.as_str())))?;
    let m = match method {
        MethodArg::Arss => {
            let mut c = SolverConfig::new(gamma, s.p);
            c.mu0 = s.mu0;
            c.rho = s.rho;
            c.epsilon = s.eps;
            c.feas_tol = s.feas_tol;
            c.deterministic = s.deterministic;
            if let Some(it) = s.max_iters {
                c.max_iters = it;
            }
            c.validate()?;
            Method::Arss(c)
        }
        _ => {
            let path = if method == MethodArg::RrssAuthorial { RrssPath::Authorial } else { RrssPath::Accelerated };
            let mut c = RrssConfig::new(gamma, path);
            c.epsilon = s.eps;
            if let Some(it) = s.max_iters {
                c.max_outer_iters = it;
            }
            c.validate()?;
            Method::Rrss(c)
        }
    };
    Ok(m)
}

fn method_config(m: &Method) -> serde_json::Value {
    match m {
        Method::Arss(c) => json!({ "method": "arss", "solver": c }),
        Method::Rrss(c) => json!({ "method": m.name(), "solver": c }),
        Method::Random => json!({ "method": "random" }),
    }
}

fn to_json<T: Serialize>(v: &T) -> Result<Vec<u8>, Failure> {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| Failure::Data(e.to_string()))?;
    s.push('\n');
    Ok(s.into_bytes())
}

fn write_out(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    dataio::write_atomic(path, bytes).map_err(Failure::from)
}

fn report_json(manifest: &RunManifest, mode: Mode, rep: &SelectionReport) -> serde_json::Value {
    let indices = rep.selected();
    let scores: Vec<f64> = indices.iter().map(|&i| rep.ranking.scores[i]).collect();
    let trace = rep.outcome.as_ref().map(|o| &o.trace[..]).unwrap_or(&[]);
    let timing = rep.outcome.as_ref().map(|o| PhaseMillis::from(&o.timing)).unwrap_or_default();
    json!({
        "manifest": manifest,
        "selection": {
            "method": rep.method,
            "mode": mode,
            "k": indices.len(),
            "indices": indices,
            "scores": scores,
        },
        "solver": {
            "converged": rep.outcome.as_ref().map(|o| o.converged),
            "iterations": rep.outcome.as_ref().map_or(0, |o| o.iterations),
        },
        "trace": {
            "objective": trace.iter().map(|r| r.objective).collect::<Vec<_>>(),
            "residual": trace.iter().map(|r| r.residual).collect::<Vec<_>>(),
            "mu": trace.iter().map(|r| r.mu).collect::<Vec<_>>(),
        },
        "timing": timing,
    })
}

fn run_select(a: SelectArgs, argv: &[String]) -> Result<(), Failure> {
    let mut manifest = RunManifest::start("select", argv);
    let method = build_method(a.method, &a.solver)?;
    let (ds, digest) = load(&a.input, a.format)?;
    manifest.inputs.push(digest);
    manifest.seeds.push(a.seed);
    manifest.config = json!({
        "k": a.k,
        "mode": a.mode,
        "seed": a.seed,
        "config": method_config(&method),
    });
    let clock = StdClock::new();
    let rep = match a.mode {
        Mode::Samples => select_exemplars(&ds.x, a.k, &method, a.seed, &clock)?,
        Mode::Features => select_features(&ds.x, a.k, &method, a.seed, &clock)?,
    };
    manifest.finish();
    write_out(&a.out, &to_json(&report_json(&manifest, a.mode, &rep))?)
}

fn run_bench(a: BenchArgs, argv: &[String]) -> Result<(), Failure> {
    let mut manifest = RunManifest::start("bench", argv);
    let cfg = BenchConfig {
        method: a.method.as_str().into(),
        sizes: a.sizes.clone(),
        feature_dim: a.feature_dim,
        gamma: a.gamma,
        p: a.p,
        repeats: a.repeats,
        iters: a.iters,
        seed: a.seed,
        timeout: a.timeout_secs.map(Duration::from_secs_f64),
        exclusive_timing: a.exclusive_timing,
    };
    if cfg.sizes.len() < 3 || cfg.sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Failure::Usage("--sizes needs at least three ascending values".into()));
    }
    if cfg.repeats == 0 || cfg.iters == 0 || cfg.feature_dim == 0 {
        return Err(Failure::Usage("--repeats, --iters and --feature-dim must be positive".into()));
    }
    if !a.exclusive_timing {
        log::warn!("timings are only comparable under --exclusive-timing");
    }
    manifest.seeds.push(a.seed);
    manifest.config = serde_json::to_value(&cfg).map_err(|e| Failure::Data(e.to_string()))?;
    let summary = evalbench::bench_scaling(&cfg)?;
    let mut lines = String::new();
    for r in &summary.records {
        lines.push_str(&serde_json::to_string(r).map_err(|e| Failure::Data(e.to_string()))?);
        lines.push('\n');
    }
    if let Some(csv) = &a.csv {
        write_out(csv, bench_csv(&summary.records).as_bytes())?;
    }
    write_out(&a.out, lines.as_bytes())?;
    manifest.finish();
    let side = json!({ "manifest": manifest, "exponent": summary.exponent });
    write_out(&sidecar_path(&a.out), &to_json(&side)?)?;
    match summary.exponent {
        Some(e) => println!("exponent {e:.3}"),
        None => println!("exponent unavailable (fewer than two uncensored sizes)"),
    }
    Ok(())
}

fn bench_csv(records: &[evalbench::BenchRecord]) -> String {
    let mut s = String::from("method,n,l,repeat,seed,iteration_budget,iterations,censored,total_ms,a_step_ms\n");
    for r in records {
        let (total, a_step) = r.wall_time_ms.map_or((String::new(), String::new()), |t| {
            (t.total.to_string(), t.a_step.to_string())
        });
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            r.method, r.n, r.l, r.repeat, r.seed, r.iteration_budget, r.iterations, r.censored, total, a_step
        ));
    }
    s
}

fn run_eval(a: EvalArgs, argv: &[String]) -> Result<(), Failure> {
    let mut manifest = RunManifest::start("eval", argv);
    let method = build_method(a.method, &a.solver)?;
    let (ds, digest) = load(&a.input, a.format)?;
    manifest.inputs.push(digest);
    manifest.seeds = a.seeds.clone();
    let candidate_count = a.candidates.unwrap_or(ds.n_samples() / 2);
    let noise = (a.noise_fraction > 0.0).then(|| NoiseSpec {
        fraction: a.noise_fraction,
        kinds: a.noise_kinds.clone(),
        ..NoiseSpec::default()
    });
    manifest.config = json!({
        "k_list": a.k_list,
        "seeds": a.seeds,
        "candidates": candidate_count,
        "noise": noise,
        "knn_k": a.knn_k,
        "config": method_config(&method),
    });
    let cfg = EvalConfig { candidate_count, seeds: a.seeds.clone(), noise, knn_k: a.knn_k };
    let curve = evalbench::accuracy_vs_k(&ds, &method, &a.k_list, &cfg)?;
    manifest.finish();
    write_out(&a.out, &to_json(&json!({ "manifest": manifest, "curve": curve }))?)
}

fn run_noise(a: NoiseArgs, argv: &[String]) -> Result<(), Failure> {
    let mut manifest = RunManifest::start("noise", argv);
    let (ds, digest) = load(&a.input, a.format)?;
    manifest.inputs.push(digest);
    manifest.seeds.push(a.seed);
    let spec = NoiseSpec {
        fraction: a.fraction,
        kinds: a.kinds.clone(),
        gaussian_sigma_rel: a.gaussian_sigma,
        laplace_scale_rel: a.laplace_scale,
        sp_fraction: a.sp_fraction,
        require_labels: a.require_labels,
        seed: a.seed,
    };
    manifest.config = serde_json::to_value(&spec).map_err(|e| Failure::Data(e.to_string()))?;
    let noisy = dataio::inject_noise(&ds, &spec)?;
    dataio::write_matrix(&noisy, &a.out, resolve_format(a.out_format, &a.out))?;
    manifest.finish();
    let side = json!({ "manifest": manifest, "corrupted": noisy.provenance.corrupted });
    write_out(&sidecar_path(&a.out), &to_json(&side)?)
}

fn run_convert(a: ConvertArgs, argv: &[String]) -> Result<(), Failure> {
    let mut manifest = RunManifest::start("convert", argv);
    let (ds, digest) = load(&a.input, a.from)?;
    manifest.inputs.push(digest);
    let to = resolve_format(a.to, &a.out);
    manifest.config = json!({ "to": to });
    dataio::write_matrix(&ds, &a.out, to)?;
    manifest.finish();
    write_out(&sidecar_path(&a.out), &to_json(&json!({ "manifest": manifest }))?)
}
