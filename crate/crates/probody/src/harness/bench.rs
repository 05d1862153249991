//! Per-stage latency measurement across model sizes.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::scenario::{generate, BodyTrajectory, ScenarioConfig};
use super::tracker::{Tracker, TrackerConfig};
use crate::body_model::synth_model;
use crate::error::{Error, Result};
use crate::motion::{default_process_noise, predict_const_velocity, to_body_frame, to_camera_frame, CameraFrameState};
use crate::prob_state::propagate_vertices_threaded;
use crate::{fusion, prob_state};

/// Median per-stage latencies for one model size, milliseconds.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StageTimings {
    pub n_vertices: usize,
    pub forward_ms: f64,
    pub joint_propagation_ms: f64,
    pub vertex_propagation_ms: f64,
    pub motion_transport_ms: f64,
    pub fusion_ms: f64,
    pub track_step_ms: f64,
    /// One tracked frame end to end: motion transport + fusion inside the
    /// step, plus full per-vertex block propagation.
    pub per_frame_total_ms: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BenchReport {
    pub threads: usize,
    pub reps: usize,
    pub stages: Vec<StageTimings>,
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    xs[xs.len() / 2]
}

fn time_ms(f: impl FnOnce()) -> f64 {
    let start = Instant::now();
    f();
    start.elapsed().as_secs_f64() * 1e3
}

pub fn run_bench(sizes: &[usize], reps: usize, threads: usize) -> Result<BenchReport> {
    if sizes.is_empty() || reps == 0 {
        return Err(Error::Config("bench needs at least one size and one rep".into()));
    }
    let mut stages = Vec::new();
    for &n in sizes {
        let model = synth_model(n, 7)?;
        let cfg = ScenarioConfig {
            n_frames: reps + 8,
            body: BodyTrajectory::Walk {
                speed_mps: 1.0,
                swing_amplitude: 0.3,
            },
            ..Default::default()
        };
        let frames = generate(&cfg)?;
        let mut tracker = Tracker::new(TrackerConfig::default());
        let mut history: Vec<CameraFrameState> = Vec::new();
        let mut posterior = None;
        // Warm up the tracker so every measured step runs the full path.
        for f in frames.iter().take(6) {
            let out = tracker.step(f)?.unwrap();
            history.push(CameraFrameState {
                t: f.t,
                t_wc: f.t_wc,
                state: out.posterior.clone(),
            });
            posterior = Some(out.posterior);
            if history.len() > 4 {
                history.remove(0);
            }
        }
        let posterior = posterior.unwrap();

        let mut forward = Vec::with_capacity(reps);
        let mut joint_prop = Vec::with_capacity(reps);
        let mut vertex_prop = Vec::with_capacity(reps);
        let mut motion = Vec::with_capacity(reps);
        let mut fusion_t = Vec::with_capacity(reps);
        let mut step_t = Vec::with_capacity(reps);

        let q = default_process_noise();
        for (i, f) in frames.iter().enumerate().skip(6).take(reps) {
            forward.push(time_ms(|| {
                std::hint::black_box(model.to_camera(&posterior.mean).unwrap());
            }));
            joint_prop.push(time_ms(|| {
                std::hint::black_box(prob_state::propagate_joints(&model, &posterior).unwrap());
            }));
            vertex_prop.push(time_ms(|| {
                std::hint::black_box(
                    propagate_vertices_threaded(&model, &posterior, threads).unwrap(),
                );
            }));
            let t_next = f.t;
            motion.push(time_ms(|| {
                let h = to_body_frame(&history).unwrap();
                let prior = predict_const_velocity(&h, &q, t_next).unwrap();
                let newest = history.last().unwrap();
                let t_wh = newest.t_wc.compose(&newest.state.mean.root_pose());
                std::hint::black_box(to_camera_frame(&prior, &f.t_wc, &t_wh).unwrap());
            }));
            if let Some(obs) = &f.observation {
                let prior = posterior.clone();
                fusion_t.push(time_ms(|| {
                    std::hint::black_box(
                        fusion::fuse(obs, &prior, &fusion::FusionConfig::default()).unwrap(),
                    );
                }));
            }
            step_t.push(time_ms(|| {
                std::hint::black_box(tracker.step(f).unwrap());
            }));
            let _ = i;
        }

        let step = median(step_t);
        let vprop = median(vertex_prop);
        stages.push(StageTimings {
            n_vertices: n,
            forward_ms: median(forward),
            joint_propagation_ms: median(joint_prop),
            vertex_propagation_ms: vprop,
            motion_transport_ms: median(motion),
            fusion_ms: median(fusion_t),
            track_step_ms: step,
            per_frame_total_ms: step + vprop,
        });
    }
    Ok(BenchReport {
        threads,
        reps,
        stages,
    })
}
