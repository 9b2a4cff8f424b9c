//! # biomeval
//!
//! Command-line front end for evaluating identity-labelled embedding datasets.
//!
//! ```bash
//! # Simulate a 36-identity dataset with 70 variations each
//! biomeval simulate --identities 36 --variations 70 --output data/sim
//!
//! # Mated / non-mated summaries, EER and plot-ready CSVs
//! biomeval evaluate data/sim --seed 7 --group-by ethnicity --output out/sim
//!
//! # KL divergence of a candidate against a reference dataset
//! biomeval compare data/candidate data/reference --output out/cmp
//!
//! # ROC curve and EER only
//! biomeval roc data/sim --output out/roc
//! ```
//!
//! Exit status: 0 success, 1 invalid input or parameters, 2 I/O failure,
//! 3 internal error.

mod error;
mod render;

use std::fs::{self, File};
use std::io::{self, BufWriter};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use biomeval::dataset::{load_dataset, Dataset, GroupKey};
use biomeval::divergence::HistogramAxis;
use biomeval::evaluation::{compare, evaluate, Evaluation, EvaluationParams};
use biomeval::export::{to_json, write_histogram_csv, write_pairs_csv, write_roc_csv};
use biomeval::similarity::NonMatedMode;
use biomeval::simulator::{balanced_demographic_plan, simulate_dataset, SimulationConfig};
use biomeval::stats::StdConvention;
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::CliError;

/// Quality metrics for identity-labelled embedding datasets
#[derive(Parser, Debug)]
#[command(name = "biomeval", version, about, long_about = None)]
struct Cli {
    /// Worker threads for per-identity work (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Score one dataset: summaries, EER, histograms and ROC
    Evaluate {
        /// Dataset directory or manifest.json
        dataset: PathBuf,
        #[command(flatten)]
        eval: EvalArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Compare a candidate dataset against a reference (reference is P in KL)
    Compare {
        candidate: PathBuf,
        reference: PathBuf,
        #[command(flatten)]
        eval: EvalArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Generate a synthetic dataset
    Simulate(SimulateArgs),
    /// ROC curve and EER for one dataset
    Roc {
        dataset: PathBuf,
        #[command(flatten)]
        eval: EvalArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
}

#[derive(Args, Debug)]
struct EvalArgs {
    /// Sampling seed
    #[arg(long, env = "BIOMEVAL_SEED", default_value_t = 0)]
    seed: u64,
    /// Variations drawn per identity before mated pairing
    #[arg(long, default_value_t = 10)]
    variations: usize,
    #[arg(long, default_value_t = 20)]
    mated_pairs: usize,
    #[arg(long, default_value_t = 20)]
    non_mated_pairs: usize,
    /// Histogram bins over [0, 1]
    #[arg(long, default_value_t = 50)]
    bins: usize,
    #[arg(long, value_enum)]
    group_by: Option<GroupBy>,
    /// Histogram on 1 - (s + 1) / 2 instead of (s + 1) / 2
    #[arg(long)]
    distance_axis: bool,
    /// Draw non-mated pairs from one dataset-wide pool
    #[arg(long)]
    global_non_mated: bool,
    /// Divide the variance by N - 1
    #[arg(long)]
    sample_std: bool,
}

impl EvalArgs {
    fn params(&self) -> EvaluationParams {
        EvaluationParams {
            seed: self.seed,
            n_variations: self.variations,
            n_mated: self.mated_pairs,
            n_non_mated: self.non_mated_pairs,
            bins: self.bins,
            group_by: self.group_by.map(GroupKey::from),
            axis: if self.distance_axis {
                HistogramAxis::StandardizedDistance
            } else {
                HistogramAxis::StandardizedSimilarity
            },
            non_mated_mode: if self.global_non_mated {
                NonMatedMode::Global
            } else {
                NonMatedMode::PerIdentity
            },
            std_convention: if self.sample_std {
                StdConvention::Sample
            } else {
                StdConvention::Population
            },
        }
    }
}

#[derive(Args, Debug)]
struct OutputArgs {
    /// Directory for report.json and CSV sidecars
    #[arg(long)]
    output: Option<PathBuf>,
    /// What to print on stdout
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// JSON simulation config; replaces the flags below
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "simulated")]
    name: String,
    #[arg(long, default_value_t = 36)]
    identities: usize,
    /// Variations per identity
    #[arg(long, default_value_t = 70)]
    variations: usize,
    #[arg(long, default_value_t = 512)]
    dimension: usize,
    /// Per-coordinate noise around each identity's mean direction
    #[arg(long, default_value_t = 0.2)]
    spread: f64,
    #[arg(long, env = "BIOMEVAL_SEED", default_value_t = 0)]
    seed: u64,
    /// Balanced ethnicity x gender plan (needs a multiple of 12 identities)
    #[arg(long, value_enum, default_value_t = Demographics::Balanced)]
    demographics: Demographics,
    /// Directory to write manifest.json and embeddings.bev into
    #[arg(long)]
    output: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum GroupBy {
    Ethnicity,
    Gender,
    EthnicityGender,
}

impl From<GroupBy> for GroupKey {
    fn from(g: GroupBy) -> Self {
        match g {
            GroupBy::Ethnicity => GroupKey::Ethnicity,
            GroupBy::Gender => GroupKey::Gender,
            GroupBy::EthnicityGender => GroupKey::EthnicityGender,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Table,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Demographics {
    Balanced,
    None,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(CliError::VALIDATION)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Validation("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Internal(e.to_string()))?;
    }
    match cli.command {
        Command::Evaluate { dataset, eval, out } => cmd_evaluate(&dataset, &eval, &out),
        Command::Compare {
            candidate,
            reference,
            eval,
            out,
        } => cmd_compare(&candidate, &reference, &eval, &out),
        Command::Simulate(args) => cmd_simulate(&args),
        Command::Roc { dataset, eval, out } => cmd_roc(&dataset, &eval, &out),
    }
}

fn load(path: &Path) -> Result<Dataset, CliError> {
    load_dataset(path).map_err(|e| CliError::dataset(path, e))
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

/// Runs a CSV writer against a fresh file at `path`.
fn write_csv<E, F>(path: &Path, f: F) -> Result<(), CliError>
where
    E: Into<io::Error>,
    F: FnOnce(BufWriter<File>) -> Result<(), E>,
{
    f(create(path)?).map_err(|e| CliError::io(path, e.into()))
}

/// Histogram, ROC and pair-audit CSVs for one evaluation.
fn write_sidecars(dir: &Path, eval: &Evaluation) -> Result<(), CliError> {
    ensure_dir(dir)?;
    write_csv(&dir.join("mated_hist.csv"), |w| {
        write_histogram_csv(w, &eval.mated_histogram)
    })?;
    write_csv(&dir.join("nonmated_hist.csv"), |w| {
        write_histogram_csv(w, &eval.non_mated_histogram)
    })?;
    write_csv(&dir.join("roc.csv"), |w| write_roc_csv(w, &eval.roc))?;
    write_csv(&dir.join("pairs_audit.csv"), |w| {
        write_pairs_csv(w, eval.mated.iter().chain(&eval.non_mated))
    })
}

fn run_evaluation(dataset: &Dataset, params: &EvaluationParams) -> Result<Evaluation, CliError> {
    evaluate(dataset, params).map_err(CliError::from)
}

fn cmd_evaluate(path: &Path, args: &EvalArgs, out: &OutputArgs) -> Result<(), CliError> {
    let dataset = load(path)?;
    let eval = run_evaluation(&dataset, &args.params())?;
    let json = to_json(&eval.report).map_err(|e| CliError::Internal(e.to_string()))?;
    if let Some(dir) = &out.output {
        write_sidecars(dir, &eval)?;
        write_text(&dir.join("report.json"), &json)?;
    }
    match out.format {
        Format::Json => print!("{json}"),
        Format::Table => print!("{}", render::evaluation_table(&eval.report)),
    }
    Ok(())
}

fn cmd_compare(
    candidate: &Path,
    reference: &Path,
    args: &EvalArgs,
    out: &OutputArgs,
) -> Result<(), CliError> {
    let params = args.params();
    let c = run_evaluation(&load(candidate)?, &params)?;
    let r = run_evaluation(&load(reference)?, &params)?;
    let report = compare(&c, &r)?;
    let json = to_json(&report).map_err(|e| CliError::Internal(e.to_string()))?;
    if let Some(dir) = &out.output {
        write_sidecars(&dir.join("candidate"), &c)?;
        write_sidecars(&dir.join("reference"), &r)?;
        write_text(&dir.join("report.json"), &json)?;
    }
    match out.format {
        Format::Json => print!("{json}"),
        Format::Table => print!("{}", render::compare_table(&report)),
    }
    Ok(())
}

fn cmd_roc(path: &Path, args: &EvalArgs, out: &OutputArgs) -> Result<(), CliError> {
    let dataset = load(path)?;
    let eval = run_evaluation(&dataset, &args.params())?;
    let json = to_json(&eval.report.eer).map_err(|e| CliError::Internal(e.to_string()))?;
    if let Some(dir) = &out.output {
        ensure_dir(dir)?;
        write_csv(&dir.join("roc.csv"), |w| write_roc_csv(w, &eval.roc))?;
        write_text(&dir.join("eer.json"), &json)?;
    }
    match out.format {
        Format::Json => print!("{json}"),
        Format::Table => print!("{}", render::eer_table(&eval.report)),
    }
    Ok(())
}

fn simulation_config(args: &SimulateArgs) -> Result<SimulationConfig, CliError> {
    if let Some(path) = &args.config {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        return serde_json::from_str(&text)
            .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())));
    }
    let demographic_plan = match args.demographics {
        Demographics::None => None,
        Demographics::Balanced => {
            if !args.identities.is_multiple_of(12) {
                return Err(CliError::Validation(format!(
                    "a balanced plan needs a multiple of 12 identities, got {}; \
                     pass --demographics none",
                    args.identities
                )));
            }
            Some(balanced_demographic_plan(args.identities / 12))
        }
    };
    Ok(SimulationConfig {
        name: args.name.clone(),
        identity_count: args.identities,
        variations_per_identity: args.variations,
        dimension: args.dimension,
        intra_spread: args.spread,
        seed: args.seed,
        demographic_plan,
    })
}

fn cmd_simulate(args: &SimulateArgs) -> Result<(), CliError> {
    let config = simulation_config(args)?;
    let dataset = simulate_dataset(&config)?;
    ensure_dir(&args.output)?;
    let manifest = dataset
        .write_to_dir(&args.output)
        .map_err(|e| CliError::dataset(&args.output, e))?;
    println!(
        "wrote {} identities x {} variations (D = {}) to {}",
        dataset.identities().len(),
        config.variations_per_identity,
        dataset.dimension(),
        manifest.display()
    );
    Ok(())
}
