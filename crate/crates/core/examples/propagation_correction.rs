//! Distance effects and their correction: exponential spectral attenuation
//! (estimated from a two-sensor pair, then inverted) and dispersion
//! mitigation by a distance-scaled moving average.
//!
//! ```bash
//! cargo run --example propagation_correction
//! ```

use vibrovitals::behavior::{
    correct_attenuation, dispersion_window_samples, estimate_attenuation_coefficient,
    DEFAULT_MAX_GAIN,
};
use vibrovitals::synth::{propagate, synth_vital_force, BeatMorphology, PropagationModel};

fn relative_l2(a: &[f64], b: &[f64]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in a.iter().zip(b) {
        num += (x - y) * (x - y);
        den += y * y;
    }
    (num / den).sqrt()
}

fn main() -> vibrovitals::Result<()> {
    let alpha = 0.001;
    let (source, _) = synth_vital_force(98.0, 35.0, 60.0, &BeatMorphology::default(), 500.0, 8)?;

    // Forward attenuation to two sensor positions.
    let model = PropagationModel::attenuation_only(alpha);
    let near = propagate(&source, 0.0, &model)?;
    let far = propagate(&source, 10.0, &model)?;
    let rms = |x: &[f64]| (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt();
    println!(
        "RMS at 0 m: {:.4}, at 10 m: {:.4} (alpha = {alpha} s/m)",
        rms(&near.samples),
        rms(&far.samples)
    );

    // Recover alpha from the pair, as done during preliminary testing.
    let estimated = estimate_attenuation_coefficient(&near, 0.0, &far, 10.0)?;
    println!("estimated alpha {estimated:.6} s/m (planted {alpha})");

    // Invert the attenuation at the far sensor.
    let corrected = correct_attenuation(&far, 10.0, estimated, DEFAULT_MAX_GAIN)?;
    println!(
        "far-sensor round trip error {:.2e} relative L2 (gain capped: {})",
        relative_l2(&corrected.trace.samples, &source.samples),
        corrected.gain_capped
    );

    // Dispersion mitigation window at a few distances.
    println!("\ndispersion moving-average windows (v_min 100 m/s, 500 Hz):");
    for d in [0.0, 1.0, 2.0, 5.0] {
        println!(
            "  d = {d:3.1} m -> {:2} samples",
            dispersion_window_samples(d, 100.0, 500.0)
        );
    }
    Ok(())
}
