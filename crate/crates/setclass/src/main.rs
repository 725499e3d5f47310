//! Command-line front end: `simulate`, `train`, `predict`, `bench`.
//!
//! Exit codes: 0 on success, 1 on runtime failure, 2 on usage or
//! configuration errors. All randomness flows through `--seed`; rerunning a
//! subcommand with the same arguments reproduces its output files byte for
//! byte.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use setclass::core as setclass_core;
use setclass::core::pipeline::{predict, train, ClassifierKind, TrainConfig};
use setclass::core::selection::SelectionStatistic;
use setclass::core::simulate::{generate_dataset, Method, SimulationConfig, SimulationModel};
use setclass::io::{load_collection, load_model, save_collection, save_model, DataFormat};
use setclass::report::{render_benchmark_table, write_benchmark_csv, write_predictions_csv};
use setclass::{bench::run_benchmark_parallel, Error};

#[derive(Parser)]
#[command(
    name = "setclass",
    about = "Set classification: simulate benchmark data, train, predict and benchmark",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a simulated dataset (and optionally its held-out twin).
    Simulate(SimulateArgs),
    /// Train a set classifier on a labeled collection.
    Train(TrainArgs),
    /// Predict labels for a collection of sets with a trained model.
    Predict(PredictArgs),
    /// Run the misclassification benchmark over many replications.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    /// Directory of per-set CSV files plus manifest.json.
    CsvDir,
    /// Single JSON document.
    Json,
}

impl From<FormatArg> for DataFormat {
    fn from(f: FormatArg) -> DataFormat {
        match f {
            FormatArg::CsvDir => DataFormat::CsvDir,
            FormatArg::Json => DataFormat::Json,
        }
    }
}

impl FormatArg {
    fn name(self) -> &'static str {
        match self {
            FormatArg::CsvDir => "csv-dir",
            FormatArg::Json => "json",
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ClassifierArg {
    /// Ridge linear discriminant analysis.
    Lda,
    /// Ridge quadratic discriminant analysis.
    Qda,
    /// Minimum-distance empirical-Bayes rule.
    Mdeb,
    /// Hard-thresholded covariance rule.
    Ya,
}

impl ClassifierArg {
    fn kind(self) -> ClassifierKind {
        match self {
            ClassifierArg::Lda => ClassifierKind::RidgeLda,
            ClassifierArg::Qda => ClassifierKind::RidgeQda,
            ClassifierArg::Mdeb => ClassifierKind::Mdeb,
            ClassifierArg::Ya => ClassifierKind::Ya,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum StatisticArg {
    /// Sum of squared marginal t-statistics (the default).
    T,
    /// Ridged diagonal variant; uses --tau.
    T1,
    /// Ridged full-covariance variant; uses --tau.
    T2,
    /// Dempster's statistic.
    T3,
    /// Within/between summed-distance ratio.
    R1,
}

impl StatisticArg {
    fn kind(self, tau: f64) -> SelectionStatistic {
        match self {
            StatisticArg::T => SelectionStatistic::SumSquaredT,
            StatisticArg::T1 => SelectionStatistic::RidgedDiagonal { tau },
            StatisticArg::T2 => SelectionStatistic::RidgedPooled { tau },
            StatisticArg::T3 => SelectionStatistic::Dempster,
            StatisticArg::R1 => SelectionStatistic::DistanceRatio,
        }
    }
}

/// Scenario flags shared by `simulate` and `bench`.
#[derive(Args)]
struct ScenarioArgs {
    /// Simulation model id (1-4).
    #[arg(long)]
    model: u8,
    /// Observation dimension.
    #[arg(long)]
    p: usize,
    /// Number of training sets (even; classes balanced).
    #[arg(long = "N")]
    n: usize,
    /// Auto-regressive correlation in [0, 1].
    #[arg(long, default_value_t = 0.0)]
    rho: f64,
    /// Class-1 mean shift along the first axis.
    #[arg(long, default_value_t = 1.0)]
    delta: f64,
    /// Scale of the rank-one covariance spike.
    #[arg(long, default_value_t = 3.0)]
    sigma: f64,
    /// Wishart degrees of freedom (model 2).
    #[arg(long, default_value_t = 10)]
    wishart_df: usize,
    /// von Mises-Fisher concentration (model 4).
    #[arg(long, default_value_t = 100.0)]
    kappa: f64,
    /// Number of test sets per replication (defaults to --N).
    #[arg(long = "test-N")]
    test_n: Option<usize>,
    /// Master seed.
    #[arg(long)]
    seed: u64,
}

impl ScenarioArgs {
    fn config(&self, replications: usize) -> Result<SimulationConfig, Error> {
        let model = SimulationModel::try_from(self.model).map_err(setclass::Error::from)?;
        let mut config = SimulationConfig::new(model, self.p, self.n, self.seed);
        config.correlation = self.rho;
        config.mean_shift = self.delta;
        config.spike_scale = self.sigma;
        config.wishart_df = self.wishart_df;
        config.concentration = self.kappa;
        config.test_sets = self.test_n;
        config.replications = replications;
        config.validate().map_err(setclass::Error::from)?;
        Ok(config)
    }

    fn echo(&self) -> String {
        let mut s = format!(
            "--model {} --p {} --N {} --rho {} --delta {} --sigma {} --wishart-df {} --kappa {}",
            self.model, self.p, self.n, self.rho, self.delta, self.sigma, self.wishart_df,
            self.kappa
        );
        if let Some(t) = self.test_n {
            s.push_str(&format!(" --test-N {t}"));
        }
        s.push_str(&format!(" --seed {}", self.seed));
        s
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Where to write the training collection (directory for csv-dir, file
    /// for json).
    #[arg(long)]
    out: PathBuf,
    /// Also write the matched held-out collection here.
    #[arg(long)]
    test_out: Option<PathBuf>,
    /// Data format for the output.
    #[arg(long, value_enum, default_value_t = FormatArg::CsvDir)]
    format: FormatArg,
}

#[derive(Args)]
struct TrainArgs {
    /// Labeled input collection (directory for csv-dir, file for json).
    #[arg(long)]
    data: PathBuf,
    /// Where to write the trained model JSON.
    #[arg(long)]
    out: PathBuf,
    /// Data format of the input.
    #[arg(long, value_enum, default_value_t = FormatArg::CsvDir)]
    format: FormatArg,
    /// Base classifier for the combined features.
    #[arg(long, value_enum, default_value_t = ClassifierArg::Lda)]
    classifier: ClassifierArg,
    /// Ridge for the LDA/QDA families.
    #[arg(long, default_value_t = 0.01)]
    gamma: f64,
    /// Permutation count for the selection test.
    #[arg(long, default_value_t = 1000)]
    permutations: usize,
    /// Level of the selection test.
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Separation statistic for the rank scan.
    #[arg(long, value_enum, default_value_t = StatisticArg::T)]
    statistic: StatisticArg,
    /// Ridge parameter for the t1/t2 statistics.
    #[arg(long, default_value_t = 0.0)]
    tau: f64,
    /// Skip selection and force this subspace rank (0 = means only).
    #[arg(long)]
    r_override: Option<usize>,
    /// Seed for the permutation test.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct PredictArgs {
    /// Trained model JSON produced by `train`.
    #[arg(long)]
    model: PathBuf,
    /// Collection of sets to classify.
    #[arg(long)]
    data: PathBuf,
    /// Where to write the predicted labels CSV.
    #[arg(long)]
    out: PathBuf,
    /// Data format of the input.
    #[arg(long, value_enum, default_value_t = FormatArg::CsvDir)]
    format: FormatArg,
    /// Also print the misclassification rate against the true labels.
    #[arg(long)]
    score: bool,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Number of replications.
    #[arg(long)]
    reps: usize,
    /// Where to write the report CSV.
    #[arg(long)]
    out: PathBuf,
    /// Comma-separated method list (e.g. PCF-LDA,LDA-WV); default all.
    #[arg(long, value_delimiter = ',')]
    methods: Vec<String>,
    /// Also write the resolved scenario configuration as JSON.
    #[arg(long)]
    config_out: Option<PathBuf>,
    /// Worker threads (default: available parallelism, or SETCLASS_THREADS).
    #[arg(long)]
    threads: Option<usize>,
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(args) => cmd_simulate(args),
        Command::Train(args) => cmd_train(args),
        Command::Predict(args) => cmd_predict(args),
        Command::Bench(args) => cmd_bench(args),
    };
    if let Err(error) = result {
        eprintln!("error: {error}");
        std::process::exit(if error.is_config() { 2 } else { 1 });
    }
}

fn cmd_simulate(args: SimulateArgs) -> Result<(), Error> {
    let config = args.scenario.config(1)?;
    let data = generate_dataset(&config)?;
    save_collection(&data.train, &args.out, args.format.into())?;
    if let Some(test_out) = &args.test_out {
        save_collection(&data.test, test_out, args.format.into())?;
    }
    println!(
        "wrote {} training sets to {} ({})",
        data.train.n_sets(),
        args.out.display(),
        args.format.name()
    );
    Ok(())
}

fn cmd_train(args: TrainArgs) -> Result<(), Error> {
    let collection = load_collection(&args.data, args.format.into())?;
    let config = TrainConfig {
        classifier: args.classifier.kind(),
        gamma: args.gamma,
        permutations: args.permutations,
        alpha: args.alpha,
        statistic: args.statistic.kind(args.tau),
        r_override: args.r_override,
        seed: args.seed,
        ..TrainConfig::default()
    };
    let model = train(&collection, &config)?;
    save_model(&model, &args.out)?;
    match model.p_value() {
        Some(p) => println!("selected rank {} (p-value {p:.4})", model.r_hat()),
        None => println!("forced rank {}", model.r_hat()),
    }
    Ok(())
}

fn cmd_predict(args: PredictArgs) -> Result<(), Error> {
    let model = load_model(&args.model)?;
    let collection = load_collection(&args.data, args.format.into())?;

    let mut rows = Vec::with_capacity(collection.n_sets());
    for set in collection.sets() {
        rows.push((set.set_id().to_owned(), predict(&model, set)?));
    }

    let echo = format!(
        "setclass predict --model {} --data {} --format {}",
        args.model.display(),
        args.data.display(),
        args.format.name()
    );
    let file = File::create(&args.out).map_err(|e| Error::io(&args.out, e))?;
    write_predictions_csv(&rows, &echo, BufWriter::new(file))?;

    if args.score {
        let labeled: Vec<_> = collection
            .sets()
            .iter()
            .filter_map(|s| s.label().map(|l| (s.set_id(), l)))
            .collect();
        if labeled.len() != collection.n_sets() {
            return Err(setclass_core::Error::InvalidConfig(
                "--score needs every input set to be labeled".into(),
            )
            .into());
        }
        let wrong = rows
            .iter()
            .zip(labeled.iter())
            .filter(|((_, predicted), (_, truth))| predicted != truth)
            .count();
        println!(
            "misclassification_rate_pct={:.4}",
            100.0 * wrong as f64 / rows.len() as f64
        );
    }
    Ok(())
}

fn cmd_bench(args: BenchArgs) -> Result<(), Error> {
    let config = args.scenario.config(args.reps)?;
    let methods: Vec<Method> = if args.methods.is_empty() {
        Method::all().to_vec()
    } else {
        args.methods
            .iter()
            .map(|name| Method::from_name(name))
            .collect::<setclass_core::Result<_>>()?
    };
    let threads = args.threads.or_else(|| {
        std::env::var("SETCLASS_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
    });

    let report = run_benchmark_parallel(&config, &methods, threads)?;

    let method_names: Vec<&str> = methods.iter().map(|m| m.name()).collect();
    let echo = format!(
        "setclass bench {} --reps {} --methods {}",
        args.scenario.echo(),
        args.reps,
        method_names.join(",")
    );
    let file = File::create(&args.out).map_err(|e| Error::io(&args.out, e))?;
    let mut writer = BufWriter::new(file);
    write_benchmark_csv(&report, &echo, &mut writer)?;
    writer.flush().map_err(|e| Error::io(&args.out, e))?;

    if let Some(config_out) = &args.config_out {
        let file = File::create(config_out).map_err(|e| Error::io(config_out, e))?;
        serde_json::to_writer_pretty(BufWriter::new(file), &report.config)
            .map_err(|e| Error::parse(config_out, e.to_string()))?;
    }

    print!("{}", render_benchmark_table(&report));
    Ok(())
}
