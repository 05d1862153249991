//! Command-line interface. Exit codes: 0 ok, 2 bad input, 3 numerical
//! failure.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand, ValueEnum};

use super::evaluate::{chi2_consistency, evaluate, PosteriorRecord};
use super::io::{read_posteriors, read_sequence, write_jsonl};
use super::scenario::{generate, ScenarioConfig};
use super::tracker::{Predictor, Tracker, TrackerConfig};
use super::SequenceFrame;
use crate::body_model::{load_model, synth_model, BodyModel, HumanState};
use crate::error::{Error, Result};
use crate::metrics::posture_correlation;
use crate::motion::GruWeights;

/// Default synthetic model used when `--model` is not given.
const DEFAULT_MODEL_VERTICES: usize = 600;
const DEFAULT_MODEL_SEED: u64 = 7;

#[derive(Parser)]
#[command(
    name = "probody",
    version,
    about = "Probabilistic human body state estimation and tracking on synthetic sequences"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Copy, Clone, Debug, PartialEq, ValueEnum)]
enum PredictorArg {
    Constvel,
    Gru,
    None,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a synthetic sequence (frames as JSONL).
    Simulate {
        /// Scenario config JSON; the built-in default scenario when omitted.
        #[arg(long)]
        scenario: Option<PathBuf>,
        /// Override the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Track a sequence and write per-frame posteriors (JSONL).
    Track {
        #[arg(long)]
        seq: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Body model JSON; a bundled synthetic model when omitted.
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "constvel")]
        predictor: PredictorArg,
        /// GRU weights file (required with --predictor gru).
        #[arg(long)]
        gru_weights: Option<PathBuf>,
    },
    /// Evaluate posteriors against the sequence ground truth.
    Evaluate {
        #[arg(long)]
        seq: PathBuf,
        #[arg(long)]
        posteriors: PathBuf,
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Optional per-frame CSV dump.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        threads: usize,
    },
    /// χ² (NEES) consistency histogram of tracked posteriors.
    Chi2 {
        #[arg(long)]
        seq: PathBuf,
        #[arg(long)]
        posteriors: PathBuf,
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 30)]
        bins: usize,
        #[arg(long, default_value_t = 15.0)]
        max: f64,
    },
    /// Posture correlation matrix over a set of states.
    Corr {
        /// JSONL of states: bare states, posterior records, or sequence
        /// frames (ground truth is used).
        #[arg(long)]
        states: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Per-stage latency sweep over model sizes.
    Bench {
        /// Comma-separated vertex counts.
        #[arg(long, default_value = "600,3000,6890")]
        vertices: String,
        #[arg(long, default_value_t = 15)]
        reps: usize,
        #[arg(long, default_value_t = 1)]
        threads: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

fn resolve_model(path: &Option<PathBuf>) -> Result<BodyModel> {
    match path {
        Some(p) => load_model(p),
        None => synth_model(DEFAULT_MODEL_VERTICES, DEFAULT_MODEL_SEED),
    }
}

fn load_scenario(path: &Option<PathBuf>) -> Result<ScenarioConfig> {
    match path {
        Some(p) => {
            let raw = std::fs::read_to_string(p)?;
            let cfg: ScenarioConfig = serde_json::from_str(&raw)?;
            cfg.validate()?;
            Ok(cfg)
        }
        None => Ok(ScenarioConfig::default()),
    }
}

fn track_sequence(
    frames: &[SequenceFrame],
    predictor: Predictor,
) -> Result<Vec<PosteriorRecord>> {
    let cfg = TrackerConfig {
        predictor,
        ..Default::default()
    };
    let mut tracker = Tracker::new(cfg);
    let mut records = Vec::new();
    for (i, f) in frames.iter().enumerate() {
        if let Some(out) = tracker.step(f)? {
            records.push(PosteriorRecord {
                frame: i,
                t: f.t,
                state: out.posterior,
            });
        }
    }
    Ok(records)
}

/// Parse one line of a `corr` input: a bare state, a posterior record, or a
/// sequence frame with ground truth.
fn state_from_line(line: &str) -> Option<HumanState> {
    if let Ok(s) = serde_json::from_str::<HumanState>(line) {
        if s.validate().is_ok() {
            return Some(s);
        }
    }
    if let Ok(p) = serde_json::from_str::<PosteriorRecord>(line) {
        return Some(p.state.mean);
    }
    if let Ok(f) = serde_json::from_str::<SequenceFrame>(line) {
        if let Some(gt) = f.gt {
            return Some(gt);
        }
        if let Some(obs) = f.observation {
            return Some(obs.mean);
        }
    }
    None
}

fn run(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Simulate { scenario, seed, out } => {
            let mut cfg = load_scenario(&scenario)?;
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            let frames = generate(&cfg)?;
            write_jsonl(&out, &frames)?;
            println!(
                "wrote {} frames ({} occluded) to {}",
                frames.len(),
                frames.iter().filter(|f| f.observation.is_none()).count(),
                out.display()
            );
        }
        Cmd::Track {
            seq,
            out,
            model,
            predictor,
            gru_weights,
        } => {
            // The tracker itself is model-free; resolving the model anyway
            // surfaces a bad --model argument at the start of the run.
            let _ = resolve_model(&model)?;
            let frames = read_sequence(&seq)?;
            let predictor = match predictor {
                PredictorArg::Constvel => Predictor::ConstVelocity,
                PredictorArg::None => Predictor::None,
                PredictorArg::Gru => {
                    let path = gru_weights.ok_or_else(|| {
                        Error::Config("--predictor gru requires --gru-weights".into())
                    })?;
                    Predictor::Gru(GruWeights::load(&path)?)
                }
            };
            let records = track_sequence(&frames, predictor)?;
            write_jsonl(&out, &records)?;
            println!(
                "tracked {} of {} frames to {}",
                records.len(),
                frames.len(),
                out.display()
            );
        }
        Cmd::Evaluate {
            seq,
            posteriors,
            model,
            out,
            csv,
            threads,
        } => {
            let model = resolve_model(&model)?;
            let frames = read_sequence(&seq)?;
            let records = read_posteriors(&posteriors)?;
            let report = evaluate(&model, &frames, &records, threads)?;
            std::fs::write(&out, serde_json::to_string_pretty(&report)?)?;
            if let Some(csv) = csv {
                std::fs::write(&csv, report.to_csv())?;
            }
            println!("{report}");
        }
        Cmd::Chi2 {
            seq,
            posteriors,
            model,
            out,
            bins,
            max,
        } => {
            let model = resolve_model(&model)?;
            let frames = read_sequence(&seq)?;
            let records = read_posteriors(&posteriors)?;
            let report = chi2_consistency(&model, &frames, &records, bins, max)?;
            std::fs::write(&out, serde_json::to_string_pretty(&report)?)?;
            println!(
                "mean NEES {:.3} over {} joint-frames ({} skipped)",
                report.mean_nees, report.n_samples, report.skipped
            );
        }
        Cmd::Corr { states, out } => {
            let raw = std::fs::read_to_string(&states)?;
            let mut parsed = Vec::new();
            for (i, line) in raw.lines().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                match state_from_line(line) {
                    Some(s) => parsed.push(s),
                    None => {
                        return Err(Error::JsonLine {
                            path: states.display().to_string(),
                            line: i + 1,
                            message: "not a state, posterior record, or frame with ground truth"
                                .into(),
                        })
                    }
                }
            }
            let corr = posture_correlation(&parsed)?;
            let rows: Vec<Vec<f64>> = (0..corr.nrows())
                .map(|r| corr.row(r).iter().copied().collect())
                .collect();
            let payload = serde_json::json!({
                "n_states": parsed.len(),
                "dim": corr.nrows(),
                "abs_correlation": rows,
            });
            std::fs::write(&out, serde_json::to_string(&payload)?)?;
            let max_off = (0..corr.nrows())
                .flat_map(|a| (0..a).map(move |b| (a, b)))
                .map(|(a, b)| corr[(a, b)])
                .fold(0.0f64, f64::max);
            println!(
                "correlation over {} states: max |off-diagonal| = {max_off:.4}",
                parsed.len()
            );
        }
        Cmd::Bench {
            vertices,
            reps,
            threads,
            out,
        } => {
            let sizes: Vec<usize> = vertices
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse::<usize>()
                        .map_err(|_| Error::Config(format!("bad vertex count '{s}'")))
                })
                .collect::<Result<_>>()?;
            let report = super::bench::run_bench(&sizes, reps, threads)?;
            std::fs::write(&out, serde_json::to_string_pretty(&report)?)?;
            for s in &report.stages {
                println!(
                    "N={:5}  step {:.3} ms  vertex-blocks {:.3} ms  per-frame {:.3} ms",
                    s.n_vertices, s.track_step_ms, s.vertex_propagation_ms, s.per_frame_total_ms
                );
            }
        }
    }
    Ok(())
}

/// Entry point used by the `probody` binary; returns the process exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
