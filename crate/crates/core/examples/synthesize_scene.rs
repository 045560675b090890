//! Generate a synthetic three-sensor vibration scene with exact ground
//! truth and write it to disk in the toolkit's file formats.
//!
//! ```bash
//! cargo run --example synthesize_scene [out_dir]
//! ```

use vibrovitals::io::{annotations, wav, write_json};
use vibrovitals::synth::{synth_scenario, MovementSpec, ScenarioConfig};

fn main() -> vibrovitals::Result<()> {
    let out_dir = std::env::args()
        .nth(1)
        .map(std::path::PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("vibrovitals_scene"));
    std::fs::create_dir_all(&out_dir)?;

    let config = ScenarioConfig {
        duration_s: 180.0,
        hr_bpm: 98.0,
        rr_bpm: 35.0,
        sensor_distances_m: vec![0.0, 1.0, 2.0],
        snr_db: Some(10.0),
        movements: MovementSpec {
            random_fraction: 0.05,
            ..MovementSpec::default()
        },
        seed: 7,
        ..ScenarioConfig::default()
    };
    let scene = synth_scenario(&config)?;

    println!("scene: {:.0} s at {} Hz", config.duration_s, config.sample_rate_hz);
    println!(
        "ground truth: {} heartbeats, {} breaths, {} movement interval(s)",
        scene.ground_truth.heartbeat_times_s.len(),
        scene.ground_truth.respiration_times_s.len(),
        scene.ground_truth.movement_intervals.len()
    );
    println!(
        "per-minute HR {:?}, RR {:?}",
        scene.ground_truth.per_minute_hr, scene.ground_truth.per_minute_rr
    );

    for trace in &scene.traces {
        let path = out_dir.join(format!("{}.wav", trace.sensor_id));
        wav::write_trace(&path, trace)?;
        println!("wrote {}", path.display());
    }
    write_json(&out_dir.join("ground_truth.json"), &scene.ground_truth)?;
    write_json(&out_dir.join("layout.json"), &scene.layout)?;
    annotations::write_annotations(
        &out_dir.join("annotations.csv"),
        &scene.ground_truth.posture_timeline,
    )?;
    println!("ground truth, layout, and annotations in {}", out_dir.display());
    Ok(())
}
