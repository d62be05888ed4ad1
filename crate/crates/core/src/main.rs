use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::{error, info};

use pufocal::data::{self, Label};
use pufocal::harness::{
    self, aggregate, emit_report, ConfigFile, ExperimentConfig, RunCoord, RunRecord,
};
use pufocal::model::{grad_check, GradCheckSpec, Snapshot};
use pufocal::risk::Estimator;
use pufocal::Result;

/// Positive-unlabeled learning experiments.
#[derive(Parser)]
#[command(name = "pufocal", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment grid and write its report.
    Bench {
        #[command(flatten)]
        grid: GridArgs,
        /// Print the planned runs without training.
        #[arg(long)]
        dry_run: bool,
    },
    /// Train iFPU under scaled class priors.
    Sensitivity {
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Train a single model and save a snapshot.
    Train {
        #[command(flatten)]
        grid: GridArgs,
        /// Where to write the model snapshot.
        #[arg(long)]
        snapshot: PathBuf,
    },
    /// Compare analytic and finite-difference gradients.
    Gradcheck {
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Layer widths, input first and output (1) last.
        #[arg(long, value_delimiter = ',', default_value = "4,6,6,6,6,1")]
        dims: Vec<usize>,
        #[arg(long)]
        estimator: Option<Estimator>,
    },
    /// Write a PU-labeled copy of a dataset as CSV to `--out`.
    Simulate {
        #[command(flatten)]
        grid: GridArgs,
    },
}

#[derive(Args)]
struct GridArgs {
    /// TOML config file; flags override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// CSV path or `synth:key=value,...`; repeatable.
    #[arg(long = "dataset")]
    datasets: Vec<String>,
    #[arg(long = "mechanism", value_delimiter = ',')]
    mechanisms: Vec<String>,
    #[arg(long = "ratio", value_delimiter = ',')]
    labeled_ratios: Vec<f64>,
    #[arg(long = "estimator", value_delimiter = ',')]
    estimators: Vec<String>,
    #[arg(long = "multiplier", value_delimiter = ',')]
    prior_multipliers: Vec<f64>,
    #[arg(long)]
    repetitions: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    train_fraction: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    hidden: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    /// Loss of uPU and nnPU: sigmoid or logistic.
    #[arg(long)]
    baseline_loss: Option<String>,
    #[arg(long)]
    label_column: Option<String>,
    #[arg(long)]
    threads: Option<usize>,
    /// Report directory (`simulate`: output CSV file).
    #[arg(long, short)]
    out: Option<PathBuf>,
}

impl GridArgs {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::from_file(path)?,
            None => ExperimentConfig::default(),
        };
        let nonempty = |v: &Vec<String>| (!v.is_empty()).then(|| v.clone());
        let nonempty_f = |v: &Vec<f64>| (!v.is_empty()).then(|| v.clone());
        ConfigFile {
            datasets: nonempty(&self.datasets),
            mechanisms: nonempty(&self.mechanisms),
            labeled_ratios: nonempty_f(&self.labeled_ratios),
            estimators: nonempty(&self.estimators),
            prior_multipliers: nonempty_f(&self.prior_multipliers),
            repetitions: self.repetitions,
            base_seed: self.seed,
            train_fraction: self.train_fraction,
            max_epochs: self.epochs,
            batch_size: self.batch_size,
            hidden: self.hidden,
            learning_rate: self.learning_rate,
            gamma: self.gamma,
            baseline_loss: self.baseline_loss.clone(),
            label_column: self.label_column.clone(),
            threads: self.threads,
            ..ConfigFile::default()
        }
        .apply(&mut cfg)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// The first cell of the grid, for single-run commands.
    fn single(&self) -> Result<(ExperimentConfig, RunCoord)> {
        let cfg = self.resolve()?;
        let coord = harness::plan(&cfg).swap_remove(0);
        Ok((cfg, coord))
    }
}

fn report(records: &[RunRecord], out: Option<&PathBuf>) -> Result<bool> {
    let summary = aggregate(records);
    println!("{}", summary.to_markdown());
    if let Some(dir) = out {
        emit_report(dir, records, &summary)?;
        info!("report written to {}", dir.display());
    }
    for r in records.iter().filter(|r| r.failed()) {
        error!(
            "{} {} ratio={} {} x{} rep {}: {}",
            r.coord.dataset,
            r.coord.mechanism,
            r.coord.labeled_ratio,
            r.coord.estimator,
            r.coord.prior_multiplier,
            r.coord.repetition,
            r.error.as_deref().unwrap_or_default()
        );
    }
    Ok(records.iter().all(|r| !r.failed()))
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Bench { grid, dry_run } => {
            let cfg = grid.resolve()?;
            if dry_run {
                let coords = harness::plan(&cfg);
                for c in &coords {
                    println!(
                        "{}\t{}\t{}\t{}\t{}\t{}",
                        c.dataset, c.mechanism, c.labeled_ratio, c.estimator, c.prior_multiplier, c.repetition
                    );
                }
                eprintln!("{} runs", coords.len());
                return Ok(true);
            }
            let records = harness::run_grid(&cfg)?;
            report(&records, grid.out.as_ref())
        }
        Command::Sensitivity { mut grid } => {
            grid.estimators = vec!["iFPU".into()];
            let cfg = grid.resolve()?;
            let sweep = harness::sensitivity_sweep(&cfg)?;
            report(&sweep.records, grid.out.as_ref())
        }
        Command::Train { grid, snapshot } => {
            let (cfg, coord) = grid.single()?;
            let ds = harness::load_source(&cfg.datasets[0], &cfg)?;
            let run = harness::fit(&coord, &ds, &cfg)?;
            Snapshot {
                params: run.params,
                seed: run.train_config.seed,
                estimator: run.train_config.estimator,
                loss: run.train_config.loss,
            }
            .save(&snapshot)?;
            println!(
                "{} {} ratio={} {}: roc_auc={:.4} pr_auc={:.4} r_precision={:.4} clamp_rate={:.3}",
                coord.dataset,
                coord.mechanism,
                coord.labeled_ratio,
                coord.estimator,
                run.metrics.roc_auc,
                run.metrics.pr_auc,
                run.metrics.r_precision,
                run.trace.clamp_rate()
            );
            info!("snapshot written to {}", snapshot.display());
            Ok(true)
        }
        Command::Gradcheck {
            trials,
            seed,
            dims,
            estimator,
        } => {
            let spec = GradCheckSpec {
                estimator,
                seed,
                ..GradCheckSpec::default()
            };
            let r = grad_check(&dims, &spec, trials)?;
            println!(
                "{} trials ({} ascent, {} descent), {} parameters, max relative error {:.3e}: {}",
                r.trials,
                r.ascent_trials,
                r.descent_trials,
                r.params_per_trial,
                r.max_rel_error,
                if r.passed { "PASS" } else { "FAIL" }
            );
            Ok(r.passed)
        }
        Command::Simulate { grid } => {
            let output = grid
                .out
                .clone()
                .ok_or_else(|| pufocal::Error::Config("simulate needs --out FILE".into()))?;
            let (cfg, coord) = grid.single()?;
            let ds = harness::load_source(&cfg.datasets[0], &cfg)?;
            let seed = coord.label_seed(cfg.base_seed);
            let pu = data::label(&ds, coord.mechanism, coord.labeled_ratio, seed, &cfg.sar)?;
            write_simulation(&pu, &cfg, &output)?;
            println!(
                "{}: {} rows, {} labeled of {} positives ({}) -> {}",
                ds.name(),
                pu.n(),
                pu.labeled().len(),
                ds.n_positive(),
                coord.mechanism,
                output.display()
            );
            Ok(true)
        }
    }
}

fn write_simulation(pu: &data::PuView, cfg: &ExperimentConfig, path: &PathBuf) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header: Vec<String> = (0..pu.dim()).map(|j| format!("x{j}")).collect();
    header.push(cfg.csv_schema.label_column.clone());
    header.push("labeled".into());
    w.write_record(&header)?;
    let labeled = pu.is_labeled();
    for (i, row) in pu.features().rows().into_iter().enumerate() {
        let mut rec: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        rec.push(match pu.hidden_truth()[i] {
            Label::Positive => cfg.csv_schema.positive_label.clone(),
            Label::Negative => cfg.csv_schema.negative_label.clone(),
        });
        rec.push(u8::from(labeled[i]).to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            error!("{e}");
            ExitCode::from(2)
        }
    }
}


#[cfg(test)]
mod tests {
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        super::Cli::command().debug_assert();
    }
}
