//! Shared FFT plumbing for the spectral-domain operations (propagation,
//! attenuation correction, wavelet transform, template correlation).

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

/// Smallest power of two >= `n`.
pub(crate) fn next_pow2(n: usize) -> usize {
    let mut p = 1usize;
    while p < n {
        p <<= 1;
    }
    p
}

/// Forward FFT in place.
pub(crate) fn fft_forward(buf: &mut [Complex64]) {
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(buf.len()).process(buf);
}

/// Inverse FFT in place, scaled by 1/n.
pub(crate) fn fft_inverse(buf: &mut [Complex64]) {
    let n = buf.len();
    let mut planner = FftPlanner::new();
    planner.plan_fft_inverse(n).process(buf);
    let scale = 1.0 / n as f64;
    for v in buf.iter_mut() {
        *v *= scale;
    }
}

/// Apply a frequency response `h(f_hz)` to a real signal and return a real
/// signal of the same length.
///
/// With `min_pad > 0` the signal is zero-padded to a power of two at least
/// `len + min_pad` samples long, so responses containing pure delays up to
/// `min_pad / sample_rate_hz` seconds do not wrap around. With `min_pad == 0`
/// the transform runs on exactly the signal length: a pure gain and its
/// reciprocal then compose to the identity bin-for-bin, with no truncation
/// loss from a pad region. Conjugate symmetry is enforced explicitly, which
/// keeps the output exactly real; the Nyquist bin uses the real part of `h`.
pub(crate) fn apply_frequency_response<F>(
    samples: &[f64],
    sample_rate_hz: f64,
    min_pad: usize,
    h: F,
) -> Vec<f64>
where
    F: Fn(f64) -> Complex64,
{
    let n = samples.len();
    if n == 0 {
        return Vec::new();
    }
    let n_fft = if min_pad == 0 { n } else { next_pow2(n + min_pad) };
    let mut buf = vec![Complex64::new(0.0, 0.0); n_fft];
    for (b, &s) in buf.iter_mut().zip(samples.iter()) {
        *b = Complex64::new(s, 0.0);
    }
    fft_forward(&mut buf);

    let df = sample_rate_hz / n_fft as f64;
    buf[0] *= Complex64::new(h(0.0).re, 0.0);
    let half = n_fft / 2;
    for k in 1..half {
        let hk = h(k as f64 * df);
        buf[k] *= hk;
        buf[n_fft - k] = buf[k].conj();
    }
    if n_fft % 2 == 0 && half >= 1 {
        buf[half] *= Complex64::new(h(half as f64 * df).re, 0.0);
    }

    fft_inverse(&mut buf);
    buf[..n].iter().map(|c| c.re).collect()
}

/// Magnitude spectrum of a real signal: `(bin frequencies, |X|)` for bins
/// 0..=n/2 of an unpadded FFT.
pub(crate) fn magnitude_spectrum(samples: &[f64], sample_rate_hz: f64) -> (Vec<f64>, Vec<f64>) {
    let n = samples.len();
    let mut buf: Vec<Complex64> = samples.iter().map(|&s| Complex64::new(s, 0.0)).collect();
    fft_forward(&mut buf);
    let half = n / 2;
    let df = sample_rate_hz / n as f64;
    let freqs = (0..=half).map(|k| k as f64 * df).collect();
    let mags = buf[..=half].iter().map(|c| c.norm()).collect();
    (freqs, mags)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_response_round_trips() {
        let x: Vec<f64> = (0..777).map(|i| ((i * 37) % 11) as f64 - 5.0).collect();
        let y = apply_frequency_response(&x, 500.0, 0, |_| Complex64::new(1.0, 0.0));
        for (a, b) in x.iter().zip(y.iter()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn pure_delay_shifts_signal() {
        let fs = 500.0;
        let mut x = vec![0.0; 1000];
        x[100] = 1.0;
        let delay_s = 0.05; // 25 samples
        let y = apply_frequency_response(&x, fs, 64, |f| {
            Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * f * delay_s)
        });
        let peak = y
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).unwrap())
            .unwrap()
            .0;
        assert_eq!(peak, 125);
    }

    #[test]
    fn magnitude_spectrum_locates_tone() {
        let fs = 500.0;
        let n = 5000;
        let x: Vec<f64> = (0..n)
            .map(|i| (2.0 * std::f64::consts::PI * 50.0 * i as f64 / fs).sin())
            .collect();
        let (freqs, mags) = magnitude_spectrum(&x, fs);
        let peak = mags
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;
        assert!((freqs[peak] - 50.0).abs() < 0.2);
    }
}
