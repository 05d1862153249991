//! Sequence evaluation: compare tracked posteriors against ground truth in
//! the world frame and aggregate the metric report.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::SequenceFrame;
use crate::body_model::{BodyModel, HumanState};
use crate::error::{Error, Result};
use crate::geometry::RigidTransform;
use crate::metrics::{
    chi2_samples, g_accel, g_mpjpe, g_pve, pa_mpjpe, Chi2Accumulator, Chi2Report, FrameMetrics,
    MetricsReport,
};
use crate::prob_state::{propagate_joints, GaussianBodyState};

/// One tracked frame as written to the posteriors JSONL stream.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PosteriorRecord {
    pub frame: usize,
    pub t: f64,
    pub state: GaussianBodyState,
}

fn world_points(t_wc: &RigidTransform, camera_points: &[Vector3<f64>]) -> Vec<Vector3<f64>> {
    camera_points.iter().map(|p| t_wc.apply(p)).collect()
}

struct FrameEval {
    metrics: FrameMetrics,
    chi2: Vec<f64>,
    chi2_skipped: usize,
    pred_world_joints: Vec<Vector3<f64>>,
}

fn evaluate_frame(
    model: &BodyModel,
    frame_idx: usize,
    frame: &SequenceFrame,
    gt: &HumanState,
    posterior: &GaussianBodyState,
) -> Result<FrameEval> {
    let pred_joints_c = model.joints_in_camera(&posterior.mean)?;
    let gt_joints_c = model.joints_in_camera(gt)?;
    let pred_vertices_c = model.to_camera(&posterior.mean)?;
    let gt_vertices_c = model.to_camera(gt)?;

    let pred_joints_w = world_points(&frame.t_wc, &pred_joints_c);
    let gt_joints_w = world_points(&frame.t_wc, &gt_joints_c);
    let pred_vertices_w = world_points(&frame.t_wc, &pred_vertices_c);
    let gt_vertices_w = world_points(&frame.t_wc, &gt_vertices_c);

    let joint_cloud = propagate_joints(model, posterior)?;
    let (chi2, chi2_skipped) = chi2_samples(&joint_cloud, &gt_joints_c)?;
    let mean_nees = if chi2.is_empty() {
        0.0
    } else {
        chi2.iter().sum::<f64>() / chi2.len() as f64
    };

    Ok(FrameEval {
        metrics: FrameMetrics {
            frame: frame_idx,
            t: frame.t,
            g_mpjpe_mm: g_mpjpe(&pred_joints_w, &gt_joints_w)?,
            pa_mpjpe_mm: pa_mpjpe(&pred_joints_w, &gt_joints_w)?,
            g_pve_mm: g_pve(&pred_vertices_w, &gt_vertices_w)?,
            mean_nees,
        },
        chi2,
        chi2_skipped,
        pred_world_joints: pred_joints_w,
    })
}

/// Evaluate tracked posteriors against the sequence ground truth. Frames
/// without ground truth or posterior are skipped; acceleration is computed
/// over the contiguous evaluated series. `threads` fans the per-frame work
/// out with a fixed merge order, so the report is identical for any thread
/// count.
pub fn evaluate(
    model: &BodyModel,
    frames: &[SequenceFrame],
    posteriors: &[PosteriorRecord],
    threads: usize,
) -> Result<MetricsReport> {
    let work: Vec<(usize, &SequenceFrame, &HumanState, &GaussianBodyState)> = posteriors
        .iter()
        .filter_map(|p| {
            let frame = frames.get(p.frame)?;
            frame.gt.as_ref().map(|gt| (p.frame, frame, gt, &p.state))
        })
        .collect();
    if work.is_empty() {
        return Err(Error::Config("no overlapping posterior/ground-truth frames".into()));
    }

    let evals: Vec<Result<FrameEval>> = if threads <= 1 {
        work.iter()
            .map(|(idx, frame, gt, post)| evaluate_frame(model, *idx, frame, gt, post))
            .collect()
    } else {
        let chunk = work.len().div_ceil(threads);
        let mut out: Vec<Option<Result<FrameEval>>> = (0..work.len()).map(|_| None).collect();
        let out_chunks: Vec<&mut [Option<Result<FrameEval>>]> = out.chunks_mut(chunk).collect();
        std::thread::scope(|scope| {
            for (ci, slot) in out_chunks.into_iter().enumerate() {
                let work = &work;
                scope.spawn(move || {
                    for (o, (idx, frame, gt, post)) in
                        slot.iter_mut().zip(work[ci * chunk..].iter())
                    {
                        *o = Some(evaluate_frame(model, *idx, frame, gt, post));
                    }
                });
            }
        });
        out.into_iter().map(|o| o.unwrap()).collect()
    };

    let mut frames_out = Vec::with_capacity(evals.len());
    let mut chi2 = Chi2Accumulator::new();
    let mut series = Vec::with_capacity(evals.len());
    let mut sums = [0.0f64; 3];
    for e in evals {
        let e = e?;
        chi2.merge_samples(e.chi2, e.chi2_skipped);
        sums[0] += e.metrics.g_mpjpe_mm;
        sums[1] += e.metrics.pa_mpjpe_mm;
        sums[2] += e.metrics.g_pve_mm;
        series.push(e.pred_world_joints);
        frames_out.push(e.metrics);
    }

    // Uniform spacing check for the acceleration metric.
    let accel = if frames_out.len() >= 3 {
        let dt = frames_out[1].t - frames_out[0].t;
        let uniform = frames_out
            .windows(2)
            .all(|w| ((w[1].t - w[0].t) - dt).abs() < 1e-9);
        if uniform && dt > 0.0 {
            g_accel(&series, dt)?
        } else {
            return Err(Error::Config(
                "evaluated frames are not uniformly spaced; cannot report acceleration".into(),
            ));
        }
    } else {
        0.0
    };

    let n = frames_out.len() as f64;
    let report = chi2.report(30, 15.0);
    Ok(MetricsReport {
        g_mpjpe_mm: sums[0] / n,
        pa_mpjpe_mm: sums[1] / n,
        g_pve_mm: sums[2] / n,
        g_accel_mm_s2: accel,
        mean_nees: report.mean_nees,
        nees_histogram: report.histogram,
        frames: frames_out,
    })
}

/// χ² consistency over a tracked sequence: per-joint NEES of the propagated
/// posterior joint distributions against ground-truth joints.
pub fn chi2_consistency(
    model: &BodyModel,
    frames: &[SequenceFrame],
    posteriors: &[PosteriorRecord],
    bins: usize,
    max: f64,
) -> Result<Chi2Report> {
    let mut acc = Chi2Accumulator::new();
    let mut used = 0usize;
    for p in posteriors {
        let frame = match frames.get(p.frame) {
            Some(f) => f,
            None => continue,
        };
        let gt = match &frame.gt {
            Some(gt) => gt,
            None => continue,
        };
        let cloud = propagate_joints(model, &p.state)?;
        let gt_joints = model.joints_in_camera(gt)?;
        acc.add(&cloud, &gt_joints)?;
        used += 1;
    }
    if used == 0 {
        return Err(Error::Config("no overlapping posterior/ground-truth frames".into()));
    }
    Ok(acc.report(bins, max))
}
