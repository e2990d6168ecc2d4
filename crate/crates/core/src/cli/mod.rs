//! Command-line front end. [`run`] parses arguments, executes one
//! subcommand and returns the process exit code.

mod config;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::bench::{run_bench, BenchConfig};
use crate::data::{
    load_wiqa, random_baseline, stats, synth_generate, write_jsonl, FieldMap, Label, LoadOptions,
    MajorityBaseline, SyntheticSpec, WiqaExample,
};
use crate::encoder::Vocabulary;
use crate::error::{Error, ErrorClass, LoadError, Result};
use crate::eval::EvalReport;
use crate::interaction::InteractionMode;
use crate::model::{check_model_gradients, RgnModel, Trainer};
use crate::numerics::GradCheckConfig;

pub use config::{apply_override, data_path, DataPaths, RunConfig, DATA_ROOT_ENV};

/// Exit code when the gradient check finds a mismatch.
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;
pub const EXIT_COMPATIBILITY: i32 = 5;
pub const EXIT_TIE: i32 = 6;

/// Gradient-check attempts before giving up on ties.
const TIE_RESEEDS: u64 = 5;

pub fn exit_code(err: &Error) -> i32 {
    match err.class() {
        ErrorClass::Config => EXIT_CONFIG,
        ErrorClass::Data => EXIT_DATA,
        ErrorClass::Numeric => EXIT_NUMERIC,
        ErrorClass::Compatibility => EXIT_COMPATIBILITY,
        ErrorClass::Tie => EXIT_TIE,
        ErrorClass::Internal => EXIT_FAILURE,
    }
}

#[derive(Debug, Parser)]
#[command(name = "rgn", version, about = "Relational gating network for what-if questions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct ConfigArgs {
    /// Run config JSON; defaults apply when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override a config value, e.g. `--set model.k=4`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

impl ConfigArgs {
    fn resolve(&self, base: RunConfig) -> Result<RunConfig> {
        RunConfig::resolve(self.config.as_deref(), base, &self.overrides)
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum BenchMode {
    Cim,
    MultiHead,
    Both,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Baseline {
    Majority,
    Random,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a model and save the best checkpoint.
    Train {
        #[command(flatten)]
        config: ConfigArgs,
        /// Checkpoint directory.
        #[arg(long)]
        out: PathBuf,
        /// Per-epoch JSON lines.
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Accuracy report with breakdowns by question type and hops.
    Eval {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, required_unless_present = "baseline", conflicts_with = "baseline")]
        model: Option<PathBuf>,
        /// Score a baseline instead of a model.
        #[arg(long, value_enum)]
        baseline: Option<Baseline>,
        /// Labeled data the majority baseline is fitted on; defaults to `--data`.
        #[arg(long, requires = "baseline")]
        fit: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// One prediction per input line.
    Predict {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
        /// Defaults to stdout.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Gate traces: selected entities and relation pairs per example.
    Inspect {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Time the interaction block.
    Bench {
        #[arg(long, value_enum, default_value = "both")]
        mode: BenchMode,
        #[arg(long, default_value_t = 10)]
        k: usize,
        #[arg(long, default_value_t = 768)]
        d: usize,
        #[arg(long, default_value_t = 6)]
        layers: usize,
        #[arg(long, default_value_t = 4)]
        heads: usize,
        #[arg(long, default_value_t = 4)]
        batch: usize,
        #[arg(long, default_value_t = 5)]
        iterations: usize,
        #[arg(long, default_value_t = 1)]
        warmup: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Finite-difference check of all model gradients.
    Gradcheck {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1e-5)]
        epsilon: f64,
        #[arg(long, default_value_t = 5e-3)]
        tolerance: f64,
        #[arg(long, default_value_t = 24)]
        max_entries: usize,
        /// Deliberately corrupt one parameter's analytic gradient.
        #[arg(long)]
        break_param: Option<String>,
    },
    /// Counts by label, question type and hops.
    Stats {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        data: PathBuf,
    },
    /// Generate a synthetic influence-graph dataset.
    Synth {
        /// Synthetic spec JSON; defaults apply when omitted.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the resolved run config (or synthetic spec) as JSON.
    DumpConfig {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        synth: bool,
    },
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { 0 };
        }
    };
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn execute(command: Command) -> Result<i32> {
    match command {
        Command::Train { config, out, log } => {
            train(&config.resolve(RunConfig::default())?, &out, log.as_deref())
        }
        Command::Eval {
            config,
            model,
            baseline,
            fit,
            seed,
            data,
            report,
        } => {
            let cfg = config.resolve(RunConfig::default())?;
            let examples = load(&data, &cfg.field_map, true)?;
            if examples.is_empty() {
                return Err(Error::Data(format!("{} holds no examples", data.display())));
            }
            let (preds, fingerprint) = match (model, baseline) {
                (Some(dir), _) => {
                    let model = load_model(&dir, &config, &cfg)?;
                    let preds = model.predict_all(&examples)?;
                    (preds.iter().map(|p| p.label).collect(), model.fingerprint())
                }
                (None, Some(Baseline::Majority)) => {
                    let fitted = match fit {
                        Some(p) => MajorityBaseline::fit(&load(&p, &cfg.field_map, true)?)?,
                        None => MajorityBaseline::fit(&examples)?,
                    };
                    (vec![fitted.label; examples.len()], "baseline:majority".to_string())
                }
                (None, Some(Baseline::Random)) => (
                    random_baseline(&examples, seed)?.predictions,
                    format!("baseline:random:{seed}"),
                ),
                (None, None) => {
                    return Err(Error::Config("eval needs --model or --baseline".into()))
                }
            };
            let rep = EvalReport::new(&examples, &preds, fingerprint)?;
            let text = serde_json::to_string_pretty(&rep)?;
            match report {
                Some(p) => std::fs::write(&p, text + "\n").map_err(|e| Error::io(&p, e))?,
                None => println!("{text}"),
            }
            Ok(0)
        }
        Command::Predict {
            config,
            model,
            input,
            output,
        } => {
            let cfg = config.resolve(RunConfig::default())?;
            let model = load_model(&model, &config, &cfg)?;
            let examples = load(&input, &cfg.field_map, false)?;
            let preds = model.predict_all(&examples)?;
            let fingerprint = model.fingerprint();
            let lines = examples.iter().zip(&preds).map(|(ex, p)| {
                json!({
                    "id": ex.id,
                    "label": p.label,
                    "probabilities": Label::ALL
                        .iter()
                        .map(|l| (l.as_str().to_string(), json!(p.probabilities[l.index()])))
                        .collect::<serde_json::Map<_, _>>(),
                    "config_fingerprint": fingerprint,
                })
            });
            emit_lines(output.as_deref(), lines)?;
            if !examples.is_empty() && examples.iter().all(|e| e.label.is_some()) {
                let correct = examples
                    .iter()
                    .zip(&preds)
                    .filter(|(e, p)| e.label == Some(p.label))
                    .count();
                eprintln!(
                    "accuracy {:.4} over {} labeled examples",
                    correct as f64 / examples.len() as f64,
                    examples.len()
                );
            }
            Ok(0)
        }
        Command::Inspect {
            config,
            model,
            input,
            output,
        } => {
            let cfg = config.resolve(RunConfig::default())?;
            let model = load_model(&model, &config, &cfg)?;
            let examples = load(&input, &cfg.field_map, false)?;
            emit_lines(output.as_deref(), model.inspect_all(&examples)?)?;
            Ok(0)
        }
        Command::Bench {
            mode,
            k,
            d,
            layers,
            heads,
            batch,
            iterations,
            warmup,
            seed,
        } => {
            let modes: &[InteractionMode] = match mode {
                BenchMode::Cim => &[InteractionMode::Cim],
                BenchMode::MultiHead => &[InteractionMode::MultiHead],
                BenchMode::Both => &[InteractionMode::Cim, InteractionMode::MultiHead],
            };
            let reports = modes
                .iter()
                .map(|&mode| {
                    run_bench(&BenchConfig {
                        mode,
                        k,
                        d,
                        layers,
                        heads,
                        batch,
                        iterations,
                        warmup,
                        seed,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let speedup = match reports.as_slice() {
                [c, m] => Some(m.median_ms / c.median_ms),
                _ => None,
            };
            println!(
                "{}",
                serde_json::to_string_pretty(&json!({ "reports": reports, "speedup": speedup }))?
            );
            Ok(0)
        }
        Command::Gradcheck {
            config,
            seed,
            epsilon,
            tolerance,
            max_entries,
            break_param,
        } => {
            let cfg = config.resolve(RunConfig::gradcheck_preset())?;
            let mut model_cfg = cfg.model;
            if model_cfg.vocab_size == 0 {
                model_cfg.vocab_size = RunConfig::gradcheck_preset().model.vocab_size;
            }
            let check = GradCheckConfig {
                epsilon,
                max_entries_per_param: max_entries,
                seed,
                break_param,
                ..GradCheckConfig::default()
            };
            let mut last_tie = None;
            for attempt in 0..TIE_RESEEDS {
                let s = seed + attempt;
                match check_model_gradients(&model_cfg, s, &check) {
                    Ok(report) => {
                        let passed = report.passes(tolerance);
                        println!(
                            "{}",
                            serde_json::to_string_pretty(&json!({
                                "seed": s,
                                "tolerance": tolerance,
                                "passed": passed,
                                "report": report,
                            }))?
                        );
                        return Ok(if passed { 0 } else { EXIT_FAILURE });
                    }
                    Err(e @ Error::Tie(_)) => {
                        eprintln!("seed {s}: {e}; re-seeding");
                        last_tie = Some(e);
                    }
                    Err(e) => return Err(e),
                }
            }
            Err(last_tie.expect("loop ran at least once"))
        }
        Command::Stats { config, data } => {
            let cfg = config.resolve(RunConfig::default())?;
            let examples = load(&data, &cfg.field_map, false)?;
            println!("{}", serde_json::to_string_pretty(&stats(&examples))?);
            Ok(0)
        }
        Command::Synth {
            spec,
            overrides,
            out,
        } => {
            let mut value = match &spec {
                Some(p) => {
                    let text = std::fs::read_to_string(p)
                        .map_err(|e| Error::Config(format!("cannot read {}: {e}", p.display())))?;
                    serde_json::from_str(&text)
                        .map_err(|e| Error::Config(format!("{}: {e}", p.display())))?
                }
                None => serde_json::to_value(SyntheticSpec::default())?,
            };
            for o in &overrides {
                apply_override(&mut value, o)?;
            }
            let spec: SyntheticSpec = serde_json::from_value(value)
                .map_err(|e| Error::Config(format!("synthetic spec: {e}")))?;
            let examples = synth_generate(&spec)?;
            let fields = FieldMap::default();
            write_jsonl(&out, examples.iter().map(|e| fields.to_record(e)))?;
            eprintln!("{}", serde_json::to_string(&stats(&examples))?);
            Ok(0)
        }
        Command::DumpConfig { config, synth } => {
            let text = if synth {
                serde_json::to_string_pretty(&SyntheticSpec::default())?
            } else {
                serde_json::to_string_pretty(&config.resolve(RunConfig::default())?)?
            };
            println!("{text}");
            Ok(0)
        }
    }
}

fn train(cfg: &RunConfig, out: &Path, log_path: Option<&Path>) -> Result<i32> {
    let train_path = cfg
        .data
        .train
        .as_deref()
        .ok_or_else(|| Error::Config("data.train is not set".into()))?;
    let train = load(train_path, &cfg.field_map, true)?;
    if train.is_empty() {
        return Err(Error::Data(format!("{} holds no examples", train_path.display())));
    }
    let dev = match &cfg.data.dev {
        Some(p) => load(p, &cfg.field_map, true)?,
        None => Vec::new(),
    };
    let vocab = Vocabulary::build(
        train
            .iter()
            .flat_map(|e| [&e.question_tokens, &e.paragraph_tokens]),
        cfg.vocab_min_count,
    )?;
    let mut model = RgnModel::new(&cfg.model, vocab)?;
    if let Some(dir) = &cfg.data.embeddings {
        model.load_embeddings(&data_path(dir))?;
    }
    let fingerprint = model.fingerprint();
    log::info!(
        "training {} parameters on {} examples (dev {})",
        model.num_parameters(),
        train.len(),
        dev.len()
    );

    let mut log_file = match log_path {
        Some(p) => Some((BufWriter::new(File::create(p).map_err(|e| Error::io(p, e))?), p)),
        None => None,
    };
    let mut write_err = None;
    let outcome = Trainer::new(cfg.train.clone())?.train(&mut model, &train, &dev, |entry| {
        let line = json!({ "config_fingerprint": fingerprint, "epoch_log": entry }).to_string();
        println!("{line}");
        if let Some((w, p)) = log_file.as_mut() {
            if let Err(e) = writeln!(w, "{line}").and_then(|_| w.flush()) {
                write_err.get_or_insert(Error::io(*p, e));
            }
        }
    })?;
    if let Some(e) = write_err {
        return Err(e);
    }
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    model.save(out)?;
    println!(
        "{}",
        json!({
            "config_fingerprint": fingerprint,
            "best_epoch": outcome.best_epoch,
            "best_dev_accuracy": outcome.best_dev_accuracy,
            "stopped_early": outcome.stopped_early,
            "checkpoint": out,
        })
    );
    Ok(0)
}

fn load(path: &Path, fields: &FieldMap, labels_required: bool) -> Result<Vec<WiqaExample>> {
    let path = &data_path(path);
    let outcome = load_wiqa(path, fields, &LoadOptions { labels_required })?;
    for w in &outcome.warnings {
        log::warn!("{}: {w}", path.display());
    }
    Ok(outcome.examples)
}

/// Loads a checkpoint; an explicit `--config` must describe the same model.
fn load_model(dir: &Path, args: &ConfigArgs, cfg: &RunConfig) -> Result<RgnModel> {
    let model = RgnModel::load(dir, None)?;
    if args.config.is_some() || !args.overrides.is_empty() {
        let mut runtime = cfg.model.clone();
        if runtime.vocab_size == 0 {
            runtime.vocab_size = model.config().vocab_size;
        }
        if &runtime != model.config() {
            return Err(LoadError::ConfigMismatch(format!(
                "checkpoint fingerprint {} differs from runtime config {}",
                model.fingerprint(),
                runtime.fingerprint()
            ))
            .into());
        }
    }
    Ok(model)
}

fn emit_lines<S: serde::Serialize>(
    output: Option<&Path>,
    lines: impl IntoIterator<Item = S>,
) -> Result<()> {
    match output {
        Some(p) => write_jsonl(p, lines),
        None => {
            let stdout = std::io::stdout();
            let mut w = stdout.lock();
            for line in lines {
                serde_json::to_writer(&mut w, &line)?;
                writeln!(w).map_err(|e| Error::io("<stdout>", e))?;
            }
            Ok(())
        }
    }
}
