//! Zero-phase Butterworth low-pass filtering.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::trace::VibrationTrace;

const ORDER: usize = 4;

#[derive(Debug, Clone, Copy)]
struct Biquad {
    b0: f64,
    b1: f64,
    b2: f64,
    a1: f64,
    a2: f64,
}

impl Biquad {
    fn dc_gain(&self) -> f64 {
        (self.b0 + self.b1 + self.b2) / (1.0 + self.a1 + self.a2)
    }

    /// Filter in place (transposed direct form II), with the internal state
    /// pre-loaded to its steady-state response to the first sample.
    fn filter_steady(&self, x: &mut [f64]) {
        if x.is_empty() {
            return;
        }
        let g = self.dc_gain();
        let x0 = x[0];
        let mut z1 = (g - self.b0) * x0;
        let mut z2 = (self.b2 - self.a2 * g) * x0;
        for v in x.iter_mut() {
            let xi = *v;
            let y = self.b0 * xi + z1;
            z1 = self.b1 * xi - self.a1 * y + z2;
            z2 = self.b2 * xi - self.a2 * y;
            *v = y;
        }
    }
}

/// Bilinear-transform Butterworth low-pass of even order as second-order
/// sections.
fn butter_lowpass(order: usize, cutoff_hz: f64, fs: f64) -> Vec<Biquad> {
    debug_assert!(order % 2 == 0);
    let c = 1.0 / (PI * cutoff_hz / fs).tan();
    (0..order / 2)
        .map(|k| {
            // Pole-pair angle from the negative real axis; Q follows from it.
            let phi = PI * (2.0 * k as f64 + 1.0) / (2.0 * order as f64);
            let q = 1.0 / (2.0 * phi.cos());
            let norm = 1.0 / (1.0 + c / q + c * c);
            Biquad {
                b0: norm,
                b1: 2.0 * norm,
                b2: norm,
                a1: 2.0 * (1.0 - c * c) * norm,
                a2: (1.0 - c / q + c * c) * norm,
            }
        })
        .collect()
}

/// Odd (anti-symmetric) extension on both ends, as used by forward-backward
/// filtering to suppress edge transients.
fn odd_extend(x: &[f64], pad: usize) -> Vec<f64> {
    let n = x.len();
    let mut out = Vec::with_capacity(n + 2 * pad);
    for i in (1..=pad).rev() {
        out.push(2.0 * x[0] - x[i]);
    }
    out.extend_from_slice(x);
    for i in 1..=pad {
        out.push(2.0 * x[n - 1] - x[n - 1 - i]);
    }
    out
}

fn filtfilt(sections: &[Biquad], x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let pad = 50.min(n.saturating_sub(1));
    let mut y = odd_extend(x, pad);
    for s in sections {
        s.filter_steady(&mut y);
    }
    y.reverse();
    for s in sections {
        s.filter_steady(&mut y);
    }
    y.reverse();
    y[pad..pad + n].to_vec()
}

/// Zero-phase low-pass: the mean is removed, then a 4th-order Butterworth
/// response is applied forward and backward so peak timing is unbiased.
/// The default analysis band keeps 0-200 Hz at a 500 Hz sample rate.
pub fn lowpass_filter(trace: &VibrationTrace, cutoff_hz: f64) -> Result<VibrationTrace> {
    let fs = trace.sample_rate_hz;
    if !(cutoff_hz > 0.0 && cutoff_hz < fs / 2.0) {
        return Err(Error::invalid(format!(
            "cutoff {cutoff_hz} Hz must lie in (0, {}) for fs {fs}",
            fs / 2.0
        )));
    }
    let mean = trace.samples.iter().sum::<f64>() / trace.len() as f64;
    let centered: Vec<f64> = trace.samples.iter().map(|x| x - mean).collect();
    let sections = butter_lowpass(ORDER, cutoff_hz, fs);
    Ok(trace.with_samples(filtfilt(&sections, &centered)))
}
