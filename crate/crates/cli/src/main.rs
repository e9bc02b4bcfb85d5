use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};

use payband_core::environment::BanditDataset;
use payband_core::harness::{
    has_errors, load_dataset, run_experiment_with_dataset, validate_config, validate_dataset, write_outputs,
    Diagnostic, ExperimentConfig, ExperimentError, ExperimentResult,
};
use payband_core::ContextSourceSpec;

const FIG1: &str = include_str!("../../../presets/fig1.json");
const FIG2_LIKE: &str = include_str!("../../../presets/fig2-like.json");
const BUNDLED_DATASET: &str = include_str!("../../../presets/data/synthetic_eeg_like.csv");

const EXIT_INVALID: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

#[derive(Parser)]
#[command(
    name = "payband",
    version,
    about = "Simulate payment-based exploration in linear contextual bandits"
)]
struct Cli {
    /// Overrides the master seed of any config.
    #[arg(long, env = "PAYBAND_SEED", global = true, hide_env_values = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment described by a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Worker threads (default: all cores).
        #[arg(long)]
        jobs: Option<usize>,
        /// Output directory (default: the config's output_dir).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a config without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Load a labelled CSV and print a summary.
    Import {
        #[arg(long)]
        csv: PathBuf,
        #[arg(long)]
        standardize: bool,
        /// The first line holds column names.
        #[arg(long)]
        header: bool,
        #[arg(long)]
        classes: usize,
    },
    /// Run one of the built-in experiments.
    Preset {
        name: PresetName,
        /// Replaces the bundled dataset (fig2-like only). Expects a header row.
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print the preset config instead of running it.
        #[arg(long)]
        print: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum PresetName {
    Fig1,
    #[value(name = "fig2-like")]
    Fig2Like,
}

enum Failure {
    Invalid(String),
    Runtime(String),
}

impl From<ExperimentError> for Failure {
    fn from(e: ExperimentError) -> Self {
        let msg = match &e {
            ExperimentError::Invalid(diags) => render(diags),
            other => other.to_string(),
        };
        if e.is_config_error() {
            Failure::Invalid(msg)
        } else {
            Failure::Runtime(msg)
        }
    }
}

fn render(diags: &[Diagnostic]) -> String {
    diags
        .iter()
        .map(Diagnostic::to_string)
        .collect::<Vec<_>>()
        .join("\n")
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run { config, jobs, out } => cmd_run(&config, jobs, out, cli.seed),
        Command::Validate { config } => cmd_validate(&config, cli.seed),
        Command::Import {
            csv,
            standardize,
            header,
            classes,
        } => cmd_import(&csv, standardize, header, classes),
        Command::Preset {
            name,
            dataset,
            jobs,
            out,
            print,
        } => cmd_preset(name, dataset, jobs, out, print, cli.seed),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invalid(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(EXIT_INVALID)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}

fn load_config(path: &Path, seed: Option<u64>) -> Result<ExperimentConfig, Failure> {
    let mut config = ExperimentConfig::from_path(path)
        .map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))?;
    if let Some(s) = seed {
        config.instance.master_seed = s;
    }
    Ok(config)
}

fn config_dir(path: &Path) -> &Path {
    path.parent().unwrap_or(Path::new("."))
}

fn report_warnings(diags: &[Diagnostic]) {
    for d in diags.iter().filter(|d| !d.is_error()) {
        eprintln!("{d}");
    }
}

fn check(config: &ExperimentConfig) -> Result<(), Failure> {
    let diags = validate_config(config);
    if has_errors(&diags) {
        return Err(Failure::Invalid(render(&diags)));
    }
    report_warnings(&diags);
    Ok(())
}

fn cmd_run(path: &Path, jobs: Option<usize>, out: Option<PathBuf>, seed: Option<u64>) -> Result<(), Failure> {
    let config = load_config(path, seed)?;
    check(&config)?;
    let dataset = load_dataset(&config.instance, config_dir(path))
        .map_err(|e| Failure::from(ExperimentError::from(e)))?;
    execute(&config, dataset, jobs, out)
}

fn execute(
    config: &ExperimentConfig,
    dataset: Option<Arc<BanditDataset>>,
    jobs: Option<usize>,
    out: Option<PathBuf>,
) -> Result<(), Failure> {
    let result = run_experiment_with_dataset(config, dataset, jobs)?;
    let dir = out.unwrap_or_else(|| config.output_dir.clone());
    let written = write_outputs(&result, &dir, config.emit_full_trace)
        .map_err(|e| Failure::Runtime(format!("writing {}: {e}", dir.display())))?;
    summarize(&result);
    for p in written {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn summarize(result: &ExperimentResult) {
    println!(
        "{:<26} {:>5} {:>14} {:>14} {:>14}",
        "policy", "runs", "cum_regret", "cum_paid", "cum_paid_abs"
    );
    for p in &result.policies {
        let c = &p.curves;
        let last = c.horizon() - 1;
        println!(
            "{:<26} {:>5} {:>14.4} {:>14.4} {:>14.4}",
            p.config.label(),
            c.n_runs,
            c.cum_regret.mean[last],
            c.cum_payment.mean[last],
            c.cum_payment_abs.mean[last]
        );
    }
}

fn cmd_validate(path: &Path, seed: Option<u64>) -> Result<(), Failure> {
    let config = load_config(path, seed)?;
    let mut diags = validate_config(&config);
    if !has_errors(&diags) {
        match load_dataset(&config.instance, config_dir(path)) {
            Ok(Some(ds)) => diags.extend(validate_dataset(&config.instance, &ds)),
            Ok(None) => {}
            Err(e) => return Err(Failure::Invalid(e.to_string())),
        }
    }
    if has_errors(&diags) {
        return Err(Failure::Invalid(render(&diags)));
    }
    report_warnings(&diags);
    println!(
        "ok: {} policies, {} runs, horizon {}",
        config.policies.len(),
        config.n_runs,
        config.instance.horizon
    );
    Ok(())
}

fn cmd_import(path: &Path, standardize: bool, header: bool, classes: usize) -> Result<(), Failure> {
    let mut ds = BanditDataset::from_path(path, header, classes)
        .map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))?;
    if standardize {
        ds.standardize();
    }
    println!("rows: {}", ds.len());
    println!("d: {}", ds.dim());
    println!("standardized: {}", ds.standardized);
    for (class, count) in ds.class_histogram().iter().enumerate() {
        println!("class {class}: {count}");
    }
    Ok(())
}

fn cmd_preset(
    name: PresetName,
    dataset: Option<PathBuf>,
    jobs: Option<usize>,
    out: Option<PathBuf>,
    print: bool,
    seed: Option<u64>,
) -> Result<(), Failure> {
    let text = match name {
        PresetName::Fig1 => FIG1,
        PresetName::Fig2Like => FIG2_LIKE,
    };
    let mut config = ExperimentConfig::from_json(text).expect("bundled preset parses");
    if let Some(s) = seed {
        config.instance.master_seed = s;
    }
    if print {
        println!("{}", config.to_json());
        return Ok(());
    }
    check(&config)?;
    let data = match (&config.instance.context_source, dataset) {
        (ContextSourceSpec::DatasetReplay { standardize, .. }, path) => {
            let mut ds = match path {
                Some(p) => BanditDataset::from_path(&p, true, config.instance.n_arms)
                    .map_err(|e| Failure::Invalid(format!("{}: {e}", p.display())))?,
                None => BanditDataset::from_csv(BUNDLED_DATASET.as_bytes(), true, config.instance.n_arms)
                    .expect("bundled dataset parses"),
            };
            if *standardize {
                ds.standardize();
            }
            Some(Arc::new(ds))
        }
        (_, Some(_)) => return Err(Failure::Invalid("--dataset only applies to fig2-like".into())),
        (_, None) => None,
    };
    execute(&config, data, jobs, out)
}
