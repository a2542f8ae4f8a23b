//! Subcommand implementations: train, predict, evaluate, check, benchmark.

use std::fs::File;
use std::path::PathBuf;

use clap::{Args, ValueEnum};

use rkbs_svm::benchmark::{mean_accuracies, run_grid_cells, table_csv, GridSpec};
use rkbs_svm::data::{generate_overlapping_squares, load_csv, Dataset};
use rkbs_svm::kernels::{
    build_feature_matrix, check_rank_assumption, suggested_truncation, FeatureMatrix, KernelFamily,
    KernelSpec, DEFAULT_RANK_TOL,
};
use rkbs_svm::loss::{self, builtin};
use rkbs_svm::solver::{multi_start_solve, write_trace_csv};
use rkbs_svm::{Error, Result, TensorHandle, TrainedModel};

use crate::settings::{self, RawSettings, Settings, SettingsArgs};
use crate::EXIT_CHECK_FAILED;

/// Truncation fallback for training when no --M is given.
const DEFAULT_TRAIN_TERMS: usize = 64;

/// Size cutoff for the train-time rank advisory. Past this many columns the
/// decomposition would dominate the training run, so the advisory is skipped
/// there; the check subcommand always runs it.
const MAX_ADVISORY_COLUMNS: usize = 2000;

/// Report style: key/value lines or a one-row CSV table over the same keys.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Text,
    Csv,
}

fn print_report(format: ReportFormat, fields: &[(String, String)]) {
    match format {
        ReportFormat::Text => {
            for (key, value) in fields {
                println!("{key} {value}");
            }
        }
        ReportFormat::Csv => {
            let keys: Vec<&str> = fields.iter().map(|(k, _)| k.as_str()).collect();
            let values: Vec<&str> = fields.iter().map(|(_, v)| v.as_str()).collect();
            println!("{}", keys.join(","));
            println!("{}", values.join(","));
        }
    }
}

fn field(key: &str, value: impl ToString) -> (String, String) {
    (key.to_string(), value.to_string())
}

/// Loads the training set from --train or synthesizes it from --generate.
/// The second slot carries the generated test split, when there is one.
fn load_train_data(
    train: &Option<PathBuf>,
    generate: &Option<String>,
    settings: &Settings,
) -> Result<(Dataset, Option<Dataset>)> {
    match (train, generate) {
        (Some(path), None) => Ok((load_csv(path, &settings.label_column)?, None)),
        (None, Some(spec)) => {
            let (train, test) = parse_generate_spec(spec, settings.seed)?;
            Ok((train, Some(test)))
        }
        (None, None) => Err(Error::Config(
            "no dataset: pass --train <csv> or --generate <spec>".into(),
        )),
        (Some(_), Some(_)) => Err(Error::Config(
            "--train and --generate are mutually exclusive".into(),
        )),
    }
}

/// Parses a synthetic dataset description of the form
/// `squares:<n_train>:<n_test>`.
fn parse_generate_spec(spec: &str, seed: u64) -> Result<(Dataset, Dataset)> {
    let bad = || {
        Error::Config(format!(
            "bad dataset spec {spec:?}; expected squares:<n_train>:<n_test>"
        ))
    };
    let parts: Vec<&str> = spec.split(':').collect();
    match parts.as_slice() {
        ["squares", n_train, n_test] => {
            let n_train = n_train.parse().map_err(|_| bad())?;
            let n_test = n_test.parse().map_err(|_| bad())?;
            generate_overlapping_squares(n_train, n_test, seed)
        }
        _ => Err(bad()),
    }
}

/// One-line verdict on the feature-rank condition behind the uniqueness
/// guarantee, bounded so training never pays for a huge decomposition.
fn rank_advisory(fm: &FeatureMatrix) -> String {
    let n = fm.n_points();
    let required = n * (n + 1) / 2;
    if fm.m_terms() < required {
        return format!(
            "not satisfiable (M = {} below required rank {required})",
            fm.m_terms()
        );
    }
    if required > MAX_ADVISORY_COLUMNS {
        return format!("skipped (required rank {required} too large; run the check command)");
    }
    let check = check_rank_assumption(fm, DEFAULT_RANK_TOL);
    if check.satisfied {
        format!("satisfied (numeric rank {required})")
    } else {
        format!(
            "not satisfied (numeric rank {} of {required}); minimizer may be non-unique",
            check.numeric_rank.unwrap_or(0)
        )
    }
}

/// Flags for `train`.
#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Training dataset CSV
    #[arg(long, value_name = "PATH")]
    pub train: Option<PathBuf>,

    /// Synthetic dataset instead of --train, e.g. squares:300:120
    #[arg(long, value_name = "SPEC", conflicts_with = "train")]
    pub generate: Option<String>,

    /// Held-out dataset to score after training; with --generate, the
    /// generated test split is scored when this is absent
    #[arg(long, value_name = "PATH")]
    pub test: Option<PathBuf>,

    /// Where to write the trained model
    #[arg(long, value_name = "PATH", default_value = "model.json")]
    pub model: PathBuf,

    /// Where to write the winning restart's iteration trace CSV
    #[arg(long, value_name = "PATH")]
    pub trace: Option<PathBuf>,

    /// Report style for the training summary
    #[arg(long, value_enum, default_value_t = ReportFormat::Text)]
    pub report: ReportFormat,

    #[command(flatten)]
    pub settings: SettingsArgs,
}

pub fn cmd_train(args: &TrainArgs) -> Result<i32> {
    let settings = args.settings.resolve()?;
    let config = settings.solver_config();
    config.validate()?;
    let loss = settings.loss_spec()?;

    let (train, generated_test) = load_train_data(&args.train, &args.generate, &settings)?;
    let kernel = settings.kernel_spec(train.dim());
    kernel.validate()?;
    let m_terms = settings.m_terms_or(DEFAULT_TRAIN_TERMS);

    let fm = build_feature_matrix(&kernel, m_terms, train.points())?;
    let rank_note = rank_advisory(&fm);
    let handle = TensorHandle::from_feature_matrix(&fm, config.m)?;
    let result = multi_start_solve(&handle, &loss, train.labels(), &config)?;
    let model = TrainedModel::from_training(kernel, m_terms, &config, train.points(), &result)?;
    model.save(&args.model)?;

    if let Some(path) = &args.trace {
        let mut out = File::create(path)?;
        write_trace_csv(&result.trace, &mut out)?;
    }

    let mut fields = vec![
        field("model", args.model.display()),
        field("objective", result.objective),
        field("iterations", result.iterations),
        field("converged", result.converged),
        field("restart", result.restart_index),
        field("rank_condition", rank_note),
    ];
    let test = match &args.test {
        Some(path) => Some(load_csv(path, &settings.label_column)?),
        None => generated_test,
    };
    if let Some(test) = &test {
        let accuracy = model.evaluate_accuracy(test)?;
        fields.push(field("test_accuracy", format!("{accuracy:.3}")));
    }
    print_report(args.report, &fields);
    Ok(0)
}

/// Flags for `predict`.
#[derive(Debug, Args)]
pub struct PredictArgs {
    /// Saved model JSON
    #[arg(long, value_name = "PATH")]
    pub model: PathBuf,

    /// Dataset CSV to classify; the label column is read but ignored
    #[arg(long, value_name = "PATH")]
    pub test: PathBuf,

    /// Write the prediction CSV here instead of stdout
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,

    /// Header name of the label column
    #[arg(long, value_name = "NAME", default_value = "label")]
    pub label_column: String,
}

pub fn cmd_predict(args: &PredictArgs) -> Result<i32> {
    let model = TrainedModel::load(&args.model)?;
    let data = load_csv(&args.test, &args.label_column)?;
    let mut table = String::from("decision,prediction\n");
    for p in data.points() {
        let value = model.decision_value(p)?;
        // Same sign rule as TrainedModel::classify: ties at zero go to +1.
        let label = if value >= 0.0 { 1 } else { -1 };
        table.push_str(&format!("{value},{label}\n"));
    }
    match &args.out {
        Some(path) => std::fs::write(path, table)?,
        None => print!("{table}"),
    }
    Ok(0)
}

/// Flags for `evaluate`.
#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Saved model JSON
    #[arg(long, value_name = "PATH")]
    pub model: PathBuf,

    /// Labeled dataset CSV to score
    #[arg(long, value_name = "PATH")]
    pub test: PathBuf,

    /// Header name of the label column
    #[arg(long, value_name = "NAME", default_value = "label")]
    pub label_column: String,

    /// Report style
    #[arg(long, value_enum, default_value_t = ReportFormat::Text)]
    pub report: ReportFormat,
}

pub fn cmd_evaluate(args: &EvaluateArgs) -> Result<i32> {
    let model = TrainedModel::load(&args.model)?;
    let data = load_csv(&args.test, &args.label_column)?;
    // counts[actual][predicted] with index 0 for +1 and 1 for -1.
    let mut counts = [[0usize; 2]; 2];
    for (p, &y) in data.points().iter().zip(data.labels()) {
        let predicted = model.classify(p)?;
        counts[usize::from(y < 0.0)][usize::from(predicted < 0.0)] += 1;
    }
    let accuracy = (counts[0][0] + counts[1][1]) as f64 / data.len() as f64;
    print_report(
        args.report,
        &[
            field("accuracy", format!("{accuracy:.3}")),
            field("actual+1_predicted+1", counts[0][0]),
            field("actual+1_predicted-1", counts[0][1]),
            field("actual-1_predicted+1", counts[1][0]),
            field("actual-1_predicted-1", counts[1][1]),
        ],
    );
    Ok(0)
}

/// Flags for `check`.
#[derive(Debug, Args)]
pub struct CheckArgs {
    /// Dataset CSV whose points define the rank matrix
    #[arg(long, value_name = "PATH")]
    pub train: Option<PathBuf>,

    /// Synthetic dataset instead of --train, e.g. squares:20:10
    #[arg(long, value_name = "SPEC", conflicts_with = "train")]
    pub generate: Option<String>,

    /// Report style
    #[arg(long, value_enum, default_value_t = ReportFormat::Text)]
    pub report: ReportFormat,

    #[command(flatten)]
    pub settings: SettingsArgs,
}

pub fn cmd_check(args: &CheckArgs) -> Result<i32> {
    let settings = args.settings.resolve()?;
    let (data, _) = load_train_data(&args.train, &args.generate, &settings)?;
    let kernel = settings.kernel_spec(data.dim());
    kernel.validate()?;
    let n = data.len();
    let m_terms = settings.m_terms_or(suggested_truncation(n));
    let fm = build_feature_matrix(&kernel, m_terms, data.points())?;
    let check = check_rank_assumption(&fm, DEFAULT_RANK_TOL);
    print_report(
        args.report,
        &[
            field("points", n),
            field("truncation", m_terms),
            field("required_rank", check.required),
            field(
                "numeric_rank",
                check
                    .numeric_rank
                    .map_or_else(|| "skipped".to_string(), |r| r.to_string()),
            ),
            field("satisfied", check.satisfied),
        ],
    );
    if check.satisfied {
        Ok(0)
    } else {
        eprintln!(
            "rank condition not satisfied: M = {m_terms} must supply numeric rank {} \
             for {n} points",
            check.required
        );
        Ok(EXIT_CHECK_FAILED)
    }
}

/// Flags for `benchmark`.
#[derive(Debug, Args)]
pub struct BenchmarkArgs {
    /// Output path for the per-cell CSV table
    #[arg(long, value_name = "PATH", default_value = "benchmark.csv")]
    pub out: PathBuf,

    /// Directory for per-cell winning-restart trace CSVs
    #[arg(long, value_name = "DIR")]
    pub trace_dir: Option<PathBuf>,

    /// Losses to run (comma separated)
    #[arg(long, value_name = "NAMES", value_delimiter = ',',
          default_values_t = [loss::HINGE.to_string(), loss::SQUARED_HINGE.to_string(),
                              loss::LOG_PIECEWISE.to_string(), loss::RAMP2.to_string()])]
    pub losses: Vec<String>,

    /// Norm indices m to run (comma separated)
    #[arg(long = "m-values", value_name = "MS", value_delimiter = ',',
          default_values_t = [1usize, 2, 3])]
    pub m_values: Vec<usize>,

    /// Dataset seeds; each seed also seeds its cell's restarts
    #[arg(long, value_name = "SEEDS", value_delimiter = ',',
          default_values_t = [1u64, 2, 3, 4, 5])]
    pub seeds: Vec<u64>,

    /// Training points per cell
    #[arg(long, value_name = "N", default_value_t = 300)]
    pub n_train: usize,

    /// Test points per cell
    #[arg(long, value_name = "N", default_value_t = 120)]
    pub n_test: usize,

    /// TOML config file; scalar solver keys apply, grid lists come from flags
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Kernel family for the 2-d squares task
    #[arg(long, value_name = "FAMILY")]
    pub kernel: Option<KernelFamily>,

    /// Gaussian width parameter (ignored by the min kernel)
    #[arg(long, value_name = "SIGMA")]
    pub sigma: Option<f64>,

    /// Feature truncation level
    #[arg(long = "M", value_name = "TERMS")]
    pub m_terms: Option<usize>,

    /// Regularization weight lambda > 0
    #[arg(long, value_name = "LAMBDA")]
    pub lambda: Option<f64>,

    /// Splitting penalty beta > 0
    #[arg(long, value_name = "BETA")]
    pub beta: Option<f64>,

    /// Newton stop: gradient norm tolerance
    #[arg(long, value_name = "TOL")]
    pub eps1: Option<f64>,

    /// Outer stop: primal residual tolerance
    #[arg(long, value_name = "TOL")]
    pub eps2: Option<f64>,

    /// Outer iteration cap per restart
    #[arg(long, value_name = "N")]
    pub max_outer: Option<usize>,

    /// Newton iteration cap per outer step
    #[arg(long, value_name = "N")]
    pub max_newton: Option<usize>,

    /// Random restarts per cell
    #[arg(long, value_name = "N")]
    pub restarts: Option<usize>,

    /// Lower edge of the restart initialization box
    #[arg(long, value_name = "LO")]
    pub init_lo: Option<f64>,

    /// Upper edge of the restart initialization box
    #[arg(long, value_name = "HI")]
    pub init_hi: Option<f64>,

    /// Report style for the run summary
    #[arg(long, value_enum, default_value_t = ReportFormat::Text)]
    pub report: ReportFormat,
}

pub fn cmd_benchmark(args: &BenchmarkArgs) -> Result<i32> {
    let file = match &args.config {
        Some(path) => settings::load_file(path)?,
        None => RawSettings::default(),
    };
    let mut spec = GridSpec::reference(args.seeds.clone());
    spec.losses = args
        .losses
        .iter()
        .map(|name| builtin::by_name(name))
        .collect::<Result<Vec<_>>>()?;
    spec.m_values = args.m_values.clone();
    spec.n_train = args.n_train;
    spec.n_test = args.n_test;
    match args.kernel.or(file.kernel).unwrap_or(KernelFamily::Min) {
        KernelFamily::Min => {}
        KernelFamily::Gaussian => {
            let sigma = args.sigma.or(file.sigma).unwrap_or(1.0);
            spec.kernel = KernelSpec::gaussian(2, sigma);
        }
    }
    spec.kernel.validate()?;
    if let Some(v) = args.m_terms.or(file.m_terms) {
        spec.m_terms = v;
    }
    if let Some(v) = args.lambda.or(file.lambda) {
        spec.lambda = v;
    }
    if let Some(v) = args.beta.or(file.beta) {
        spec.beta = v;
    }
    if let Some(v) = args.eps1.or(file.eps1) {
        spec.eps1 = v;
    }
    if let Some(v) = args.eps2.or(file.eps2) {
        spec.eps2 = v;
    }
    if let Some(v) = args.max_outer.or(file.max_outer) {
        spec.max_outer = v;
    }
    if let Some(v) = args.max_newton.or(file.max_newton) {
        spec.max_newton = v;
    }
    if let Some(v) = args.restarts.or(file.restarts) {
        spec.restarts = v;
    }
    if let Some(v) = args.init_lo.or(file.init_lo) {
        spec.init_lo = v;
    }
    if let Some(v) = args.init_hi.or(file.init_hi) {
        spec.init_hi = v;
    }
    if spec.losses.is_empty() || spec.m_values.is_empty() || spec.seeds.is_empty() {
        return Err(Error::Config("benchmark grid is empty".into()));
    }

    let outcomes = run_grid_cells(&spec);
    let mut cells = Vec::new();
    let mut failures = Vec::new();
    for outcome in outcomes {
        match outcome.outcome {
            Ok(cell) => cells.push(cell),
            Err(e) => failures.push((outcome.loss, outcome.m, outcome.seed, e)),
        }
    }
    for (loss_name, m, seed, e) in &failures {
        eprintln!("cell loss={loss_name} m={m} seed={seed}: {e}");
    }
    if cells.is_empty() {
        // Every cell failed; surface the first failure as the run's error.
        let (_, _, _, e) = failures.into_iter().next().expect("grid was non-empty");
        return Err(e);
    }

    std::fs::write(&args.out, table_csv(&cells))?;
    if let Some(dir) = &args.trace_dir {
        std::fs::create_dir_all(dir)?;
        for cell in &cells {
            let path = dir.join(format!(
                "trace_{}_m{}_seed{}.csv",
                cell.loss, cell.m, cell.seed
            ));
            let mut out = File::create(&path)?;
            write_trace_csv(&cell.trace, &mut out)?;
        }
    }

    let mut fields = vec![
        field("table", args.out.display()),
        field("cells_ok", cells.len()),
        field("cells_failed", failures.len()),
    ];
    for (loss_name, m, mean) in mean_accuracies(&cells) {
        fields.push(field(
            &format!("mean_accuracy_{loss_name}_m{m}"),
            format!("{mean:.4}"),
        ));
    }
    print_report(args.report, &fields);
    Ok(0)
}
