//! Locally adaptive Wiener filtering for white-noise reduction.

use crate::error::{Error, Result};
use crate::trace::{mirror_index, VibrationTrace};

/// Locally adaptive Wiener filter.
///
/// For each sample, local mean and variance are estimated over a centered
/// window (symmetric reflection at the edges) and the sample is shrunk
/// toward the local mean:
///
/// `y = mean + max(var - noise_var, 0) / var * (x - mean)`
///
/// with `noise_var` estimated as the mean of the local variances over the
/// whole trace. Where the local variance is zero the local mean is
/// returned, so a constant trace passes through unchanged.
pub fn wiener_denoise(trace: &VibrationTrace, window_len_samples: usize) -> Result<VibrationTrace> {
    if window_len_samples < 3 || window_len_samples % 2 == 0 {
        return Err(Error::invalid("wiener window must be odd and >= 3"));
    }
    let x = &trace.samples;
    let n = x.len();
    let h = window_len_samples / 2;
    let w = window_len_samples as f64;

    let m = n + 2 * h;
    let mut s1 = vec![0.0; m + 1];
    let mut s2 = vec![0.0; m + 1];
    for i in 0..m {
        let v = x[mirror_index(i as isize - h as isize, n)];
        s1[i + 1] = s1[i] + v;
        s2[i + 1] = s2[i] + v * v;
    }

    let mut means = Vec::with_capacity(n);
    let mut vars = Vec::with_capacity(n);
    for i in 0..n {
        let sum = s1[i + 2 * h + 1] - s1[i];
        let sumsq = s2[i + 2 * h + 1] - s2[i];
        let mean = sum / w;
        means.push(mean);
        vars.push((sumsq / w - mean * mean).max(0.0));
    }
    let noise_var = vars.iter().sum::<f64>() / n as f64;

    let out: Vec<f64> = (0..n)
        .map(|i| {
            if vars[i] <= 0.0 {
                means[i]
            } else {
                means[i] + ((vars[i] - noise_var).max(0.0) / vars[i]) * (x[i] - means[i])
            }
        })
        .collect();
    Ok(trace.with_samples(out))
}
