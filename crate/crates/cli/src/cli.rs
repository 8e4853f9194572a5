//! Command-line interface: `fuse`, `simulate`, `eval`, `calibrate`,
//! `couple`. Exit code 0 on success, 1 on usage errors (including
//! unreadable input paths), 2 on data or validation errors.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use evfuse::calibration::platt_fit;
use evfuse::coupling::{
    blend_couplings, estimate_rho_for_set, max_mi_coupling, min_mi_coupling, RhoMethod,
};
use evfuse::defs::{parse, resolve, validate_ranges, ResolvedDefinitions};
use evfuse::fusion::{classify, fuse, EvaluationMode, FusionConfig, RhoMode};
use evfuse::model::{FusedReport, PROB_TOL};

use crate::error::CliError;
use crate::io;
use crate::metrics::MetricsReport;
use crate::runner::{class_labels, evaluate, sample_reports, Method};
use crate::scenario::{generate_scenario, ScenarioConfig};

#[derive(Parser)]
#[command(
    name = "evfuse",
    about = "Decision-level sensor fusion over feature event spaces",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fuse per-feature probability reports into object-class probabilities.
    Fuse(FuseArgs),
    /// Generate a synthetic labeled dataset from a scenario config.
    Simulate(SimulateArgs),
    /// Evaluate a fusion method against true labels.
    Eval(EvalArgs),
    /// Fit a Platt sigmoid mapping classifier scores to probabilities.
    Calibrate(CalibrateArgs),
    /// Dump the blended coupling table for a set of marginals.
    Couple(CoupleArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Global,
    Pairwise,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EstimatorArg {
    Pearson,
    #[value(alias = "distance")]
    DistanceCorrelation,
}

impl EstimatorArg {
    fn method(self) -> RhoMethod {
        match self {
            EstimatorArg::Pearson => RhoMethod::Pearson,
            EstimatorArg::DistanceCorrelation => RhoMethod::DistanceCorrelation,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Proposed,
    Independent,
    Dempster,
}

#[derive(Args)]
struct RhoArgs {
    /// Fixed blend weight in [0, 1]; defaults to 0 (independence) when no
    /// estimator is requested.
    #[arg(long, conflicts_with = "estimate_rho")]
    rho: Option<f64>,
    /// Estimate rho from training features instead of fixing it.
    #[arg(long, value_enum, requires = "train")]
    estimate_rho: Option<EstimatorArg>,
    /// Training-feature CSV (header of feature ids, one row per sample).
    #[arg(long)]
    train: Option<PathBuf>,
}

impl RhoArgs {
    fn resolve(&self) -> Result<RhoMode, CliError> {
        if let Some(estimator) = self.estimate_rho {
            let train = self.train.as_ref().expect("clap enforces --train");
            let (_, columns) = io::read_train_matrix(train)?;
            let method = estimator.method();
            let value = estimate_rho_for_set(&columns, method)?;
            eprintln!("estimated rho ({method}) = {value}");
            return Ok(RhoMode::Estimated { method, value });
        }
        let rho = self.rho.unwrap_or(0.0);
        if !(0.0..=1.0).contains(&rho) {
            return Err(CliError::Usage(format!("--rho must be in [0, 1], got {rho}")));
        }
        Ok(RhoMode::Fixed(rho))
    }
}

#[derive(Args)]
struct FuseArgs {
    /// Definition file declaring sensors, features, events and objects.
    #[arg(long)]
    defs: PathBuf,
    /// Reports JSON with per-sample event probabilities.
    #[arg(long)]
    reports: PathBuf,
    #[command(flatten)]
    rho: RhoArgs,
    /// Evaluation mode; `pairwise` needs every object to be a two-event
    /// and/or combination.
    #[arg(long, value_enum, default_value = "global")]
    mode: ModeArg,
    /// Output CSV of fused class probabilities.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    /// Scenario config JSON.
    #[arg(long)]
    config: PathBuf,
    /// Output reports JSON; labels and latent features are written next to
    /// it as `<stem>.labels.csv` and `<stem>.train.csv`.
    #[arg(long)]
    out: PathBuf,
    /// Overrides the seed in the config.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    defs: PathBuf,
    #[arg(long)]
    reports: PathBuf,
    /// Labels CSV (`sample_index,class_label`).
    #[arg(long)]
    labels: PathBuf,
    #[arg(long, value_enum)]
    method: MethodArg,
    #[command(flatten)]
    rho: RhoArgs,
    /// Number of repeated runs aggregated into mean/stddev rows.
    #[arg(long, default_value_t = 1)]
    runs: usize,
    #[arg(long)]
    metrics_out: PathBuf,
    #[arg(long)]
    roc_out: PathBuf,
}

#[derive(Args)]
struct CalibrateArgs {
    /// Scores file, one number per line.
    #[arg(long)]
    scores: PathBuf,
    /// Binary labels file, one `0`/`1` (or `false`/`true`) per line.
    #[arg(long)]
    labels: PathBuf,
    /// Output JSON holding the fitted sigmoid parameters.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CoupleArgs {
    /// Marginals file, one comma-separated probability vector per line.
    #[arg(long)]
    marginals: PathBuf,
    #[arg(long)]
    rho: f64,
    /// Output CSV with one row per joint cell.
    #[arg(long)]
    out: PathBuf,
}

/// Parses and runs a full command line, returning the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Fuse(args) => cmd_fuse(&args),
        Command::Simulate(args) => cmd_simulate(&args),
        Command::Eval(args) => cmd_eval(&args),
        Command::Calibrate(args) => cmd_calibrate(&args),
        Command::Couple(args) => cmd_couple(&args),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("evfuse: {e}");
            e.exit_code()
        }
    }
}

fn load_defs(path: &Path) -> Result<ResolvedDefinitions, CliError> {
    let text = io::open_text(path)?;
    let file = parse(&text)?;
    for warning in validate_ranges(&file) {
        eprintln!("warning: {warning}");
    }
    resolve(&file).map_err(CliError::from)
}

fn cmd_fuse(args: &FuseArgs) -> Result<(), CliError> {
    let defs = load_defs(&args.defs)?;
    let reports_file = io::read_reports(&args.reports)?;
    io::check_spaces_match(&defs.spaces, &reports_file)?;
    let rho_mode = args.rho.resolve()?;
    let mode = match args.mode {
        ModeArg::Global => EvaluationMode::GlobalJoint,
        ModeArg::Pairwise => EvaluationMode::Pairwise,
    };
    let config = FusionConfig::new(
        rho_mode,
        mode,
        defs.objects.iter().map(|(l, _)| l.clone()).collect(),
    )?;
    let classes = class_labels(&defs);
    let mut out = String::from("sample_index");
    for c in &classes {
        out.push_str(&format!(",p_{c}"));
    }
    out.push_str(",predicted\n");
    for (i, sample) in reports_file.samples.iter().enumerate() {
        let reports = sample_reports(&defs.spaces, sample)?;
        let fused: FusedReport = fuse(&reports, &defs.objects, &config)?;
        out.push_str(&format!("{i}"));
        for p in fused.class_probs() {
            out.push_str(&format!(",{p}"));
        }
        out.push_str(&format!(",{}\n", classify(&fused)));
    }
    io::write_text(&args.out, &out)
}

fn derived_path(out: &Path, tag: &str) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".to_string());
    out.with_file_name(format!("{stem}.{tag}"))
}

fn cmd_simulate(args: &SimulateArgs) -> Result<(), CliError> {
    let text = io::open_text(&args.config)?;
    let mut cfg = ScenarioConfig::from_json(&text)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let dataset = generate_scenario(&cfg)?;
    let reports = io::ReportsFile {
        spaces: dataset
            .spaces
            .iter()
            .map(|s| io::SpaceDecl::from_space(s))
            .collect(),
        samples: dataset.samples,
    };
    io::write_reports(&args.out, &reports)?;
    let labels_path = derived_path(&args.out, "labels.csv");
    io::write_text(&labels_path, &io::labels_to_csv(&dataset.labels))?;
    let train_path = derived_path(&args.out, "train.csv");
    let header: Vec<String> = cfg.features.iter().map(|f| f.feature_id.clone()).collect();
    io::write_text(&train_path, &io::train_matrix_to_csv(&header, &dataset.latents))?;
    eprintln!(
        "wrote {} samples to `{}`, labels to `{}`, training features to `{}`",
        dataset.labels.len(),
        args.out.display(),
        labels_path.display(),
        train_path.display()
    );
    Ok(())
}

fn cmd_eval(args: &EvalArgs) -> Result<(), CliError> {
    if args.runs == 0 {
        return Err(CliError::Usage("--runs must be at least 1".into()));
    }
    let defs = load_defs(&args.defs)?;
    let reports_file = io::read_reports(&args.reports)?;
    io::check_spaces_match(&defs.spaces, &reports_file)?;
    let labels = io::read_labels(&args.labels)?;
    let method = match args.method {
        MethodArg::Proposed => Method::Proposed(args.rho.resolve()?),
        MethodArg::Independent => Method::Independent,
        MethodArg::Dempster => Method::Dempster,
    };
    let mut runs: Vec<MetricsReport> = Vec::with_capacity(args.runs);
    for _ in 0..args.runs {
        runs.push(evaluate(&defs, &reports_file.samples, &labels, &method)?);
    }
    io::write_text(&args.metrics_out, &io::metrics_to_csv(&runs))?;
    io::write_text(&args.roc_out, &io::roc_to_csv(&runs))?;
    eprintln!(
        "method {}: accuracy {}",
        method.name(),
        runs[0].accuracy
    );
    Ok(())
}

#[derive(Serialize)]
struct PlattJson {
    a: f64,
    b: f64,
}

fn cmd_calibrate(args: &CalibrateArgs) -> Result<(), CliError> {
    let scores: Vec<f64> = parse_lines(&args.scores, |s| s.parse::<f64>().ok())?;
    let labels: Vec<bool> = parse_lines(&args.labels, |s| match s {
        "0" | "false" => Some(false),
        "1" | "true" => Some(true),
        _ => None,
    })?;
    let model = platt_fit(&scores, &labels)?;
    let mut text = serde_json::to_string_pretty(&PlattJson {
        a: model.a,
        b: model.b,
    })
    .expect("plain struct always serializes");
    text.push('\n');
    io::write_text(&args.out, &text)
}

fn parse_lines<T>(path: &Path, f: impl Fn(&str) -> Option<T>) -> Result<Vec<T>, CliError> {
    let text = io::open_text(path)?;
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(|l| {
            f(l).ok_or_else(|| {
                CliError::Data(format!("bad value `{l}` in `{}`", path.display()))
            })
        })
        .collect()
}

fn cmd_couple(args: &CoupleArgs) -> Result<(), CliError> {
    if !(0.0..=1.0).contains(&args.rho) {
        return Err(CliError::Usage(format!(
            "--rho must be in [0, 1], got {}",
            args.rho
        )));
    }
    let marginals = io::read_marginals(&args.marginals)?;
    if marginals.len() < 2 {
        return Err(CliError::Data(
            "coupling needs at least 2 marginals".into(),
        ));
    }
    for (i, m) in marginals.iter().enumerate() {
        let sum: f64 = m.iter().sum();
        if (sum - 1.0).abs() > PROB_TOL {
            return Err(CliError::Data(format!(
                "marginal {i} sums to {sum}, expected 1"
            )));
        }
    }
    let views: Vec<&[f64]> = marginals.iter().map(|m| m.as_slice()).collect();
    let t_max = max_mi_coupling(&views)?;
    let t_min = min_mi_coupling(&views)?;
    let blended = blend_couplings(&t_max, &t_min, args.rho)?;
    io::write_text(&args.out, &io::coupling_to_csv(&blended))
}
