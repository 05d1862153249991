//! Per-stage latency sweep: how the per-frame cost scales with mesh size,
//! and how far below the 20 Hz (50 ms) budget a full-resolution mesh sits.

use probody::harness::bench::run_bench;

fn main() -> probody::Result<()> {
    let threads = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(1);
    let report = run_bench(&[600, 3000, 6890], 15, threads)?;
    println!("median per-stage latency, {} thread(s), {} reps:\n", report.threads, report.reps);
    println!(
        "{:>8} {:>10} {:>12} {:>14} {:>10} {:>10} {:>12}",
        "verts", "forward", "joint-prop", "vertex-prop", "motion", "fusion", "per-frame"
    );
    for s in &report.stages {
        println!(
            "{:>8} {:>9.3}ms {:>11.3}ms {:>13.3}ms {:>9.3}ms {:>9.3}ms {:>11.3}ms",
            s.n_vertices,
            s.forward_ms,
            s.joint_propagation_ms,
            s.vertex_propagation_ms,
            s.motion_transport_ms,
            s.fusion_ms,
            s.per_frame_total_ms
        );
    }
    let full = report.stages.last().unwrap();
    println!(
        "\nfull-resolution per-frame cost {:.2} ms → {:.0} Hz ({}x inside the 50 ms budget)",
        full.per_frame_total_ms,
        1000.0 / full.per_frame_total_ms,
        (50.0 / full.per_frame_total_ms).round()
    );
    Ok(())
}
