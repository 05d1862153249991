//! Empirical correlation structure of posture coordinates over a motion
//! dataset — the diagnostic behind running the state pipeline with a
//! diagonal covariance.

use probody::harness::{generate, BodyTrajectory, ScenarioConfig};
use probody::metrics::posture_correlation;

fn main() -> probody::Result<()> {
    // An articulated synthetic motion provides correlated joint signals;
    // several scenarios widen the sample.
    let mut states = Vec::new();
    for seed in 0..6 {
        let cfg = ScenarioConfig {
            n_frames: 250,
            seed,
            body: BodyTrajectory::SinusoidalJoints {
                amplitude: 0.5,
                frequency_hz: 0.5 + 0.17 * seed as f64,
            },
            ..Default::default()
        };
        for f in generate(&cfg)? {
            let mut gt = f.gt.unwrap();
            // Keep only the detector-style noisy posture so dimensions are
            // not perfectly deterministic functions of each other.
            gt.theta = f.observation.as_ref().unwrap().mean.theta.clone();
            states.push(gt);
        }
    }
    let corr = posture_correlation(&states)?;

    let dim = corr.nrows();
    let mut off = Vec::new();
    for a in 0..dim {
        for b in 0..a {
            off.push(corr[(a, b)]);
        }
    }
    off.sort_by(|a, b| a.partial_cmp(b).unwrap());
    println!("{} states, {}×{} absolute posture correlation", states.len(), dim, dim);
    println!(
        "off-diagonals: median {:.3}  p90 {:.3}  max {:.3}",
        off[off.len() / 2],
        off[off.len() * 9 / 10],
        off[off.len() - 1]
    );
    let frac_small = off.iter().filter(|v| **v < 0.2).count() as f64 / off.len() as f64;
    println!(
        "{:.1}% of off-diagonal correlations are below 0.2 — the diagonal dominates, \
         which is what justifies the diagonal state covariance",
        100.0 * frac_small
    );
    Ok(())
}
