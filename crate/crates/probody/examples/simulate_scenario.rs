//! Generate a synthetic walking sequence with an occlusion window and print
//! a short summary of what the pseudo-detector saw.

use probody::body_model::ERROR_DIM;
use probody::harness::{
    generate, BodyTrajectory, CameraTrajectory, OcclusionMode, OcclusionWindow, ScenarioConfig,
};

fn main() -> probody::Result<()> {
    let cfg = ScenarioConfig {
        n_frames: 100,
        frame_rate_hz: 20.0,
        seed: 42,
        body: BodyTrajectory::Walk {
            speed_mps: 1.2,
            swing_amplitude: 0.3,
        },
        camera: CameraTrajectory::Orbit {
            radius: 3.5,
            angular_speed: 0.5,
        },
        noise_var: vec![1e-4; ERROR_DIM],
        occlusions: vec![OcclusionWindow {
            start: 40,
            end: 55,
            mode: OcclusionMode::Full,
        }],
        ..Default::default()
    };
    let frames = generate(&cfg)?;

    let occluded = frames.iter().filter(|f| f.observation.is_none()).count();
    println!("generated {} frames, {} fully occluded", frames.len(), occluded);
    for k in [0, 20, 45, 99] {
        let f = &frames[k];
        let gt = f.gt.as_ref().unwrap();
        println!(
            "frame {k:3}  t={:.2}s  body at ({:+.2}, {:+.2}, {:+.2}) m in camera  observed: {}",
            f.t,
            gt.r.x,
            gt.r.y,
            gt.r.z,
            f.observation.is_some()
        );
    }

    let out = std::env::temp_dir().join("probody_example_seq.jsonl");
    probody::harness::write_jsonl(&out, &frames)?;
    println!("wrote {}", out.display());
    Ok(())
}
