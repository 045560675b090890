//! Heartbeat and respiration event detection on a clean scene: peaks of
//! the 10-100 Hz wavelet band sum give beats; peaks of its 1 s moving sum
//! (the energy trend) give breaths.
//!
//! ```bash
//! cargo run --example heartbeat_respiration
//! ```

use vibrovitals::preprocess::{band_magnitude_sum, cwt_morse, MorseParams};
use vibrovitals::synth::{synth_scenario, ScenarioConfig};
use vibrovitals::trace::TimeInterval;
use vibrovitals::vitals::{detect_heartbeats, detect_respiration, rate_series};

fn main() -> vibrovitals::Result<()> {
    let config = ScenarioConfig {
        duration_s: 120.0,
        hr_bpm: 98.0,
        rr_bpm: 35.0,
        sensor_distances_m: vec![0.0],
        snr_db: Some(10.0),
        seed: 12,
        ..ScenarioConfig::default()
    };
    let scene = synth_scenario(&config)?;
    let trace = &scene.traces[0];
    let truth = &scene.ground_truth;

    let spectrum = cwt_morse(trace, 10.0, 100.0, &MorseParams::default())?;
    let detection = band_magnitude_sum(&spectrum, 10.0, 100.0)?;

    let beats = detect_heartbeats(&detection, trace.sample_rate_hz, 0.5, 0.25);
    let breaths = detect_respiration(&detection, trace.sample_rate_hz, 1.0, 1.0, 0.25);
    println!(
        "beats detected {} (truth {}), breaths detected {} (truth {})",
        beats.len(),
        truth.heartbeat_times_s.len(),
        breaths.len(),
        truth.respiration_times_s.len()
    );

    let empty: Vec<TimeInterval> = Vec::new();
    let hr = rate_series(&beats, trace.duration_s(), 60.0, &empty, vibrovitals::vitals::HR_MEASURED_RANGE);
    let rr = rate_series(&breaths, trace.duration_s(), 60.0, &empty, vibrovitals::vitals::RR_MEASURED_RANGE);
    println!("minute | HR est | HR true | RR est | RR true");
    for k in 0..hr.rate_per_min.len() {
        println!(
            "{k:6} | {:6.1} | {:7.0} | {:6.1} | {:7.0}",
            hr.rate_per_min[k], truth.per_minute_hr[k], rr.rate_per_min[k], truth.per_minute_rr[k]
        );
    }
    Ok(())
}
