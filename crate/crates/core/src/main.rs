//! Command-line pipeline: generate a synthetic offloading dataset, train
//! collective or per-step estimators, evaluate the full model grid, and
//! compare report rows.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use offload_sim::config::ExperimentConfig;
use offload_sim::dataset::{build_dataset, read_dataset, write_dataset};
use offload_sim::estimators::ModelKind;
use offload_sim::evaluation::{
    best_report, cross_validate, holdout_evaluate, read_report_csv, render_summary,
    train_collective, train_individual, write_report_csv, AccuracyMode, EvalData, EvalReport,
    Method, OffloadEstimator, SplitSpec,
};
use offload_sim::simulator::{read_traces_jsonl, run_experiment_grid, write_traces_jsonl};

#[derive(Parser)]
#[command(
    name = "offload-sim",
    version,
    about = "Simulate container cloud-to-fog offloading and estimate offload times"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate the experiment grid and write the aggregate dataset CSV.
    Generate {
        /// Experiment configuration (JSON).
        #[arg(long)]
        config: PathBuf,
        /// Output dataset CSV path.
        #[arg(long)]
        out: PathBuf,
        /// Also dump raw traces as JSON lines.
        #[arg(long)]
        traces_out: Option<PathBuf>,
        /// Shrink the grid roughly 10x for smoke runs.
        #[arg(long)]
        quick: bool,
        /// Override the config seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Train one estimator on a full dataset and save it as JSON.
    Train {
        #[command(flatten)]
        input: DataInput,
        /// Regression family: mlr | pmr | rfr | svr.
        #[arg(long)]
        kind: ModelKind,
        /// Estimation method: cm (collective) | im (individual).
        #[arg(long)]
        method: Method,
        /// Output model JSON path.
        #[arg(long)]
        out: PathBuf,
        /// Optional experiment config providing hyperparameters.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the evaluation plan and write a report CSV plus a text summary.
    Evaluate {
        #[command(flatten)]
        input: DataInput,
        /// Output report CSV path.
        #[arg(long)]
        out: PathBuf,
        /// Optional experiment config providing hyperparameters and plan.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Evaluate only this k (k-fold cross validation).
        #[arg(long)]
        k: Option<usize>,
        /// Evaluate only this hold-out training fraction.
        #[arg(long)]
        train_fraction: Option<f64>,
        /// Accuracy definition: mape | r2.
        #[arg(long)]
        accuracy_mode: Option<AccuracyMode>,
        #[arg(long)]
        seed: Option<u64>,
        /// Also write the text summary to this path.
        #[arg(long)]
        summary_out: Option<PathBuf>,
    },
    /// Print the best kind per method and the IM-vs-CM deltas of a report.
    Compare {
        /// Report CSV produced by `evaluate`.
        #[arg(long)]
        report: PathBuf,
    },
}

/// Where instances come from: an aggregate CSV, or raw traces (required
/// for per-step-window IM features).
#[derive(Args)]
#[group(required = true, multiple = false)]
struct DataInput {
    /// Dataset CSV produced by `generate`.
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Trace JSON-lines file produced by `generate --traces-out`.
    #[arg(long)]
    traces: Option<PathBuf>,
}

impl DataInput {
    fn load(&self, config: Option<&ExperimentConfig>) -> Result<EvalData> {
        if let Some(path) = &self.dataset {
            let ds = read_dataset(path)
                .with_context(|| format!("reading dataset {}", path.display()))?;
            return Ok(EvalData::new(ds));
        }
        let path = self.traces.as_ref().expect("clap enforces one source");
        let traces =
            read_traces_jsonl(path).with_context(|| format!("reading traces {}", path.display()))?;
        let aggregation = config
            .map(|c| c.evaluation.im_aggregation)
            .unwrap_or_default();
        Ok(EvalData::from_traces(&traces, aggregation)?)
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate {
            config,
            out,
            traces_out,
            quick,
            seed,
        } => cmd_generate(&config, &out, traces_out.as_deref(), quick, seed),
        Command::Train {
            input,
            kind,
            method,
            out,
            config,
            seed,
        } => cmd_train(&input, kind, method, &out, config.as_deref(), seed),
        Command::Evaluate {
            input,
            out,
            config,
            k,
            train_fraction,
            accuracy_mode,
            seed,
            summary_out,
        } => cmd_evaluate(
            &input,
            &out,
            config.as_deref(),
            k,
            train_fraction,
            accuracy_mode,
            seed,
            summary_out.as_deref(),
        ),
        Command::Compare { report } => cmd_compare(&report),
    }
}

fn load_config(path: &std::path::Path) -> Result<ExperimentConfig> {
    ExperimentConfig::load(path).with_context(|| format!("loading config {}", path.display()))
}

fn cmd_generate(
    config_path: &std::path::Path,
    out: &std::path::Path,
    traces_out: Option<&std::path::Path>,
    quick: bool,
    seed: Option<u64>,
) -> Result<()> {
    let config = load_config(config_path)?;
    let seed = seed.unwrap_or(config.seed);
    let grid = config.grid(quick);
    let traces = run_experiment_grid(&grid, &config.ground_truth, seed)?;
    if let Some(path) = traces_out {
        write_traces_jsonl(&traces, path)
            .with_context(|| format!("writing traces {}", path.display()))?;
    }
    let dataset = build_dataset(&traces)?;
    write_dataset(&dataset, out).with_context(|| format!("writing dataset {}", out.display()))?;

    let total_samples: usize = traces.iter().map(|t| t.samples.len()).sum();
    println!("instances: {}", dataset.len());
    println!(
        "mean runtime samples per instance: {:.1}",
        total_samples as f64 / traces.len() as f64
    );
    println!(
        "raw data points (21 parameters x runtime samples): {}",
        21 * total_samples
    );
    println!("dataset written to {}", out.display());
    Ok(())
}

fn cmd_train(
    input: &DataInput,
    kind: ModelKind,
    method: Method,
    out: &std::path::Path,
    config_path: Option<&std::path::Path>,
    seed: Option<u64>,
) -> Result<()> {
    let config = config_path.map(load_config).transpose()?;
    let data = input.load(config.as_ref())?;
    let options = config
        .as_ref()
        .map(|c| c.training.clone())
        .unwrap_or_default();
    let seed = seed.or(config.as_ref().map(|c| c.seed)).unwrap_or(0);
    let estimator = match method {
        Method::Cm => OffloadEstimator::Cm(train_collective(data.dataset(), kind, &options, seed)?),
        Method::Im => OffloadEstimator::Im(train_individual(&data, kind, &options, seed)?),
    };
    estimator
        .save_json(out)
        .with_context(|| format!("writing model {}", out.display()))?;
    println!(
        "trained {} {} on {} instances; model written to {}",
        method,
        kind,
        data.len(),
        out.display()
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_evaluate(
    input: &DataInput,
    out: &std::path::Path,
    config_path: Option<&std::path::Path>,
    k: Option<usize>,
    train_fraction: Option<f64>,
    accuracy_mode: Option<AccuracyMode>,
    seed: Option<u64>,
    summary_out: Option<&std::path::Path>,
) -> Result<()> {
    let config = config_path.map(load_config).transpose()?;
    let data = input.load(config.as_ref())?;
    let options = config
        .as_ref()
        .map(|c| c.training.clone())
        .unwrap_or_default();
    let mode = accuracy_mode
        .or(config.as_ref().map(|c| c.evaluation.accuracy_mode))
        .unwrap_or(AccuracyMode::Mape);
    let seed = seed.or(config.as_ref().map(|c| c.seed)).unwrap_or(0);

    let mut splits: Vec<SplitSpec> = Vec::new();
    if let Some(fraction) = train_fraction {
        splits.push(SplitSpec::Holdout {
            train_fraction: fraction,
        });
    }
    if let Some(k) = k {
        splits.push(SplitSpec::Kfold { k });
    }
    if splits.is_empty() {
        let (fractions, folds) = match &config {
            Some(c) => (
                c.evaluation.holdout_fractions.clone(),
                c.evaluation.kfold_values.clone(),
            ),
            None => (vec![0.5, 0.6, 0.7, 0.8, 0.9], vec![3, 5, 10]),
        };
        splits.extend(
            fractions
                .into_iter()
                .map(|f| SplitSpec::Holdout { train_fraction: f }),
        );
        splits.extend(folds.into_iter().map(|k| SplitSpec::Kfold { k }));
    }

    let mut reports: Vec<EvalReport> = Vec::new();
    for method in Method::ALL {
        for kind in ModelKind::ALL {
            for split in &splits {
                let report = match *split {
                    SplitSpec::Holdout { train_fraction } => holdout_evaluate(
                        &data,
                        kind,
                        method,
                        train_fraction,
                        seed,
                        &options,
                        mode,
                    )?,
                    SplitSpec::Kfold { k } => {
                        cross_validate(&data, kind, method, k, seed, &options, mode)?
                    }
                };
                reports.push(report);
            }
        }
    }
    write_report_csv(&reports, out).with_context(|| format!("writing report {}", out.display()))?;
    let summary = render_summary(&reports);
    print!("{summary}");
    println!("report written to {} ({} rows)", out.display(), reports.len());
    if let Some(path) = summary_out {
        std::fs::write(path, &summary)
            .with_context(|| format!("writing summary {}", path.display()))?;
    }
    Ok(())
}

fn cmd_compare(report_path: &std::path::Path) -> Result<()> {
    let reports = read_report_csv(report_path)
        .with_context(|| format!("reading report {}", report_path.display()))?;
    if reports.is_empty() {
        bail!("report {} contains no rows", report_path.display());
    }
    let best_cm = best_report(reports.iter().filter(|r| r.method == Method::Cm));
    let best_im = best_report(reports.iter().filter(|r| r.method == Method::Im));
    for (label, best) in [("cm", best_cm), ("im", best_im)] {
        match best {
            Some(r) => println!(
                "best {label}: {} (mae {:.3} s, accuracy {:.2}%, {})",
                r.kind, r.mae_seconds, r.accuracy_percent, r.split
            ),
            None => println!("best {label}: no rows"),
        }
    }
    match (best_im, best_cm) {
        (Some(im), Some(cm)) => {
            println!(
                "im-vs-cm: mae {:+.3} s, accuracy {:+.2} points",
                im.mae_seconds - cm.mae_seconds,
                im.accuracy_percent - cm.accuracy_percent
            );
            let overall = best_report([im, cm]).expect("two candidates");
            println!("overall best: {} {}", overall.method, overall.kind);
        }
        (Some(only), None) | (None, Some(only)) => {
            println!("overall best: {} {}", only.method, only.kind);
        }
        (None, None) => unreachable!("reports checked non-empty"),
    }
    Ok(())
}
