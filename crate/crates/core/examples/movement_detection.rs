//! Movement detection against a lying-still baseline: 1 s windows whose
//! mean absolute amplitude exceeds the reference mean by three reference
//! standard deviations are flagged and later interpolated over.
//!
//! ```bash
//! cargo run --example movement_detection
//! ```

use vibrovitals::behavior::{build_movement_reference, detect_movements};
use vibrovitals::synth::{synth_scenario, MovementSpec, ScenarioConfig};
use vibrovitals::trace::{IntervalLabel, TimeInterval};

fn main() -> vibrovitals::Result<()> {
    let config = ScenarioConfig {
        duration_s: 120.0,
        sensor_distances_m: vec![0.0],
        snr_db: Some(10.0),
        movements: MovementSpec {
            intervals_s: vec![(30.0, 33.0), (68.0, 71.5), (100.0, 102.0)],
            magnitude_factor_range: (5.0, 10.0),
            ..MovementSpec::default()
        },
        seed: 2,
        ..ScenarioConfig::default()
    };
    let scene = synth_scenario(&config)?;
    let trace = &scene.traces[0];

    println!("injected movements:");
    for iv in &scene.ground_truth.movement_intervals {
        println!("  [{:6.1} s, {:6.1} s)", iv.start_s, iv.end_s);
    }

    // The first 30 s are still; use 10 of them as the baseline.
    let reference_iv = TimeInterval::new(5.0, 15.0, IntervalLabel::LyingLateral)?;
    let reference = build_movement_reference(trace, &reference_iv)?;
    println!(
        "reference: mean |x| {:.4} +- {:.4} per 1 s window",
        reference.stat_mean, reference.stat_std
    );

    let flagged = detect_movements(trace, &reference);
    println!("flagged intervals (mean + 3 sigma rule):");
    for iv in &flagged {
        println!("  [{:6.1} s, {:6.1} s)", iv.start_s, iv.end_s);
    }
    Ok(())
}
