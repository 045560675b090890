//! Continuous wavelet transform with generalized Morse wavelets.
//!
//! The Morse family is used because one heartbeat- or respiration-induced
//! impulse maps to a single magnitude peak, so rates can be read off by
//! counting peaks of the band-summed coefficients.

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::fft::next_pow2;
use crate::trace::VibrationTrace;

/// Generalized Morse wavelet parameters. The defaults (gamma 3, beta 20)
/// give a symmetric, single-peaked envelope with time-bandwidth product
/// `P^2 = 60`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct MorseParams {
    pub gamma: f64,
    pub beta: f64,
    pub voices_per_octave: usize,
}

impl Default for MorseParams {
    fn default() -> Self {
        MorseParams {
            gamma: 3.0,
            beta: 20.0,
            voices_per_octave: 10,
        }
    }
}

impl MorseParams {
    pub fn validate(&self) -> Result<()> {
        if self.gamma <= 0.0 || self.beta <= 0.0 {
            return Err(Error::invalid("morse gamma and beta must be positive"));
        }
        if self.voices_per_octave == 0 {
            return Err(Error::invalid("voices_per_octave must be >= 1"));
        }
        Ok(())
    }

    /// Radian frequency of the wavelet's spectral peak: `(beta/gamma)^(1/gamma)`.
    pub fn peak_omega(&self) -> f64 {
        (self.beta / self.gamma).powf(1.0 / self.gamma)
    }

    /// Frequency-domain Morse wavelet, peak-normalized to 2 so a unit tone
    /// produces near-unit magnitude on its matching row. Defined for
    /// `omega > 0` only (analytic wavelet).
    fn psi(&self, omega: f64) -> f64 {
        if omega <= 0.0 {
            return 0.0;
        }
        let r = self.beta / self.gamma;
        let ln_psi =
            std::f64::consts::LN_2 + r * (1.0 + self.gamma.ln() - self.beta.ln())
                + self.beta * omega.ln()
                - omega.powf(self.gamma);
        if ln_psi < -745.0 {
            0.0
        } else {
            ln_psi.exp()
        }
    }
}

/// Time-frequency magnitude matrix from the Morse CWT.
#[derive(Debug, Clone)]
pub struct WaveletSpectrum {
    /// Row center frequencies, descending, log-spaced by voice.
    pub freqs_hz: Vec<f64>,
    /// `magnitudes[row][t]`, nonnegative, one column per input sample.
    pub magnitudes: Vec<Vec<f64>>,
    pub sample_rate_hz: f64,
}

impl WaveletSpectrum {
    /// Row index whose time-averaged magnitude is largest over the central
    /// half of the trace (away from edge effects), or `None` for an empty
    /// spectrum.
    pub fn ridge_row(&self) -> Option<usize> {
        let n = self.magnitudes.first()?.len();
        let (lo, hi) = if n >= 8 { (n / 4, 3 * n / 4) } else { (0, n) };
        let mut best: Option<(usize, f64)> = None;
        for (row, mags) in self.magnitudes.iter().enumerate() {
            let mean: f64 = mags[lo..hi].iter().sum::<f64>() / (hi - lo) as f64;
            if best.is_none_or(|(_, b)| mean > b) {
                best = Some((row, mean));
            }
        }
        best.map(|(row, _)| row)
    }
}

/// Continuous wavelet transform over `[f_lo_hz, f_hi_hz]` with log-spaced
/// scales, computed per scale by frequency-domain multiplication. Returns
/// coefficient magnitudes.
pub fn cwt_morse(
    trace: &VibrationTrace,
    f_lo_hz: f64,
    f_hi_hz: f64,
    params: &MorseParams,
) -> Result<WaveletSpectrum> {
    params.validate()?;
    let fs = trace.sample_rate_hz;
    let n = trace.len();
    if n == 0 {
        return Err(Error::invalid("cannot transform a zero-length trace"));
    }
    if !(f_lo_hz > 0.0 && f_lo_hz < f_hi_hz && f_hi_hz <= fs / 2.0) {
        return Err(Error::invalid(format!(
            "need 0 < f_lo < f_hi <= Nyquist, got [{f_lo_hz}, {f_hi_hz}] at fs {fs}"
        )));
    }

    let v = params.voices_per_octave as f64;
    let octaves = (f_hi_hz / f_lo_hz).log2();
    let n_rows = (v * octaves + 1e-9).floor() as usize + 1;
    let freqs_hz: Vec<f64> = (0..n_rows)
        .map(|j| f_hi_hz * 2f64.powf(-(j as f64) / v))
        .collect();

    // Pad well past the wavelet support at the lowest analyzed frequency so
    // the circular transform does not wrap trace edges into each other.
    let n_fft = next_pow2(n + 2 * fs.round() as usize);
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(n_fft);
    let inv = planner.plan_fft_inverse(n_fft);

    let mut spectrum = vec![Complex64::new(0.0, 0.0); n_fft];
    for (b, &s) in spectrum.iter_mut().zip(trace.samples.iter()) {
        *b = Complex64::new(s, 0.0);
    }
    fwd.process(&mut spectrum);

    let omega_peak = params.peak_omega();
    let half = n_fft / 2;
    let inv_scale = 1.0 / n_fft as f64;
    let mut magnitudes = Vec::with_capacity(n_rows);
    let mut work = vec![Complex64::new(0.0, 0.0); n_fft];
    for &f in &freqs_hz {
        let scale = omega_peak * fs / (2.0 * PI * f);
        work.fill(Complex64::new(0.0, 0.0));
        for k in 1..=half {
            let omega = 2.0 * PI * k as f64 / n_fft as f64;
            let w = params.psi(scale * omega);
            if w > 0.0 {
                work[k] = spectrum[k] * w;
            }
        }
        inv.process(&mut work);
        magnitudes.push(work[..n].iter().map(|c| c.norm() * inv_scale).collect());
    }

    Ok(WaveletSpectrum {
        freqs_hz,
        magnitudes,
        sample_rate_hz: fs,
    })
}

/// Per-sample sum of spectrum magnitudes over rows inside `[f_lo_hz,
/// f_hi_hz]` — the detection function driving heartbeat and respiration
/// peak picking. The heartbeat band defaults to 10-100 Hz elsewhere.
pub fn band_magnitude_sum(
    spectrum: &WaveletSpectrum,
    f_lo_hz: f64,
    f_hi_hz: f64,
) -> Result<Vec<f64>> {
    let rows: Vec<usize> = spectrum
        .freqs_hz
        .iter()
        .enumerate()
        .filter(|(_, &f)| f >= f_lo_hz - 1e-9 && f <= f_hi_hz + 1e-9)
        .map(|(i, _)| i)
        .collect();
    if rows.is_empty() {
        return Err(Error::invalid(format!(
            "band [{f_lo_hz}, {f_hi_hz}] does not intersect the spectrum grid"
        )));
    }
    let n = spectrum.magnitudes[rows[0]].len();
    let mut sum = vec![0.0; n];
    for &r in &rows {
        for (acc, &m) in sum.iter_mut().zip(spectrum.magnitudes[r].iter()) {
            *acc += m;
        }
    }
    Ok(sum)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tone_trace(f: f64, fs: f64, n: usize) -> VibrationTrace {
        let samples = (0..n).map(|i| (2.0 * PI * f * i as f64 / fs).sin()).collect();
        VibrationTrace::new("t", fs, samples).unwrap()
    }

    #[test]
    fn zero_trace_gives_zero_spectrum() {
        let trace = VibrationTrace::new("t", 500.0, vec![0.0; 5000]).unwrap();
        let spec = cwt_morse(&trace, 10.0, 100.0, &MorseParams::default()).unwrap();
        for row in &spec.magnitudes {
            assert!(row.iter().all(|&m| m == 0.0));
        }
    }

    #[test]
    fn ridge_sits_on_tone_frequency_within_one_voice() {
        let params = MorseParams::default();
        let trace = tone_trace(50.0, 500.0, 30_000); // 60 s
        let spec = cwt_morse(&trace, 10.0, 100.0, &params).unwrap();
        let ridge = spec.freqs_hz[spec.ridge_row().unwrap()];
        // One voice spacing = factor 2^(1/10).
        let voice = 2f64.powf(1.0 / params.voices_per_octave as f64);
        assert!(
            ridge / 50.0 < voice && 50.0 / ridge < voice,
            "ridge {ridge} Hz for a 50 Hz tone"
        );
        // Independent oracle for the frequency labeling: the analytic peak
        // (beta/gamma)^(1/gamma) must agree with a numeric maximization of
        // the wavelet's frequency response.
        let mut best = (0.0, 0.0);
        let mut w = 0.01;
        while w < 10.0 {
            let p = params.psi(w);
            if p > best.1 {
                best = (w, p);
            }
            w += 1e-4;
        }
        assert!((best.0 - params.peak_omega()).abs() < 1e-3);
    }

    #[test]
    fn impulse_response_is_single_peaked_at_every_scale() {
        let mut samples = vec![0.0; 10_000];
        samples[5000] = 1.0;
        let trace = VibrationTrace::new("t", 500.0, samples).unwrap();
        let spec = cwt_morse(&trace, 10.0, 100.0, &MorseParams::default()).unwrap();
        for (row, mags) in spec.magnitudes.iter().enumerate() {
            let max = mags.iter().cloned().fold(0.0f64, f64::max);
            assert!(max > 0.0);
            // Samples above half the main peak must form one contiguous run:
            // no sidelobe above 50%, the property peak counting relies on.
            let above: Vec<usize> = (0..mags.len()).filter(|&i| mags[i] > 0.5 * max).collect();
            for pair in above.windows(2) {
                assert!(
                    pair[1] - pair[0] == 1,
                    "row {row} ({} Hz) has disjoint half-max lobes",
                    spec.freqs_hz[row]
                );
            }
        }
    }

    #[test]
    fn magnitudes_scale_linearly() {
        let trace = tone_trace(40.0, 500.0, 4000);
        let scaled = trace.with_samples(trace.samples.iter().map(|x| 3.5 * x).collect());
        let a = cwt_morse(&trace, 10.0, 100.0, &MorseParams::default()).unwrap();
        let b = cwt_morse(&scaled, 10.0, 100.0, &MorseParams::default()).unwrap();
        let mut num = 0.0;
        let mut den = 0.0;
        for (ra, rb) in a.magnitudes.iter().zip(&b.magnitudes) {
            for (&ma, &mb) in ra.iter().zip(rb) {
                num += (mb - 3.5 * ma) * (mb - 3.5 * ma);
                den += (3.5 * ma) * (3.5 * ma);
            }
        }
        assert!((num / den).sqrt() < 1e-9);
    }

    #[test]
    fn band_sum_edge_cases() {
        let trace = tone_trace(40.0, 500.0, 2000);
        let spec = cwt_morse(&trace, 10.0, 100.0, &MorseParams::default()).unwrap();
        // Empty intersection rejected.
        assert!(band_magnitude_sum(&spec, 150.0, 200.0).is_err());
        // A single-row band returns exactly that row.
        let f0 = spec.freqs_hz[3];
        let one = band_magnitude_sum(&spec, f0 - 0.01, f0 + 0.01).unwrap();
        assert_eq!(one, spec.magnitudes[3]);
        // Zero spectrum sums to zero.
        let zero = VibrationTrace::new("t", 500.0, vec![0.0; 2000]).unwrap();
        let zspec = cwt_morse(&zero, 10.0, 100.0, &MorseParams::default()).unwrap();
        assert!(band_magnitude_sum(&zspec, 10.0, 100.0)
            .unwrap()
            .iter()
            .all(|&v| v == 0.0));
    }

    #[test]
    fn widening_band_never_decreases_sum() {
        let trace = tone_trace(30.0, 500.0, 2000);
        let spec = cwt_morse(&trace, 10.0, 100.0, &MorseParams::default()).unwrap();
        let narrow = band_magnitude_sum(&spec, 20.0, 60.0).unwrap();
        let wide = band_magnitude_sum(&spec, 10.0, 100.0).unwrap();
        for (w, n) in wide.iter().zip(&narrow) {
            assert!(w >= n);
        }
    }
}
