//! Environmental-event detection by template matching.
//!
//! Events like water flushing, staff walking, or passing tractors have
//! repeatable signatures. Each 10 s window (50% overlap) is aligned against
//! every template via normalized cross-correlation and scored by cosine
//! similarity of the aligned pair; windows above a template's threshold are
//! flagged for removal.

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::fft::next_pow2;
use crate::trace::{sliding_windows, IntervalLabel, TimeInterval, VibrationTrace};

const WINDOW_S: f64 = 10.0;
const OVERLAP_FRAC: f64 = 0.5;

/// A known environmental-event signature.
#[derive(Debug, Clone, PartialEq)]
pub struct EventTemplate {
    pub name: String,
    pub samples: Vec<f64>,
    /// Windows scoring strictly above this cosine similarity are flagged.
    pub similarity_threshold: f64,
}

impl EventTemplate {
    pub fn new(
        name: impl Into<String>,
        samples: Vec<f64>,
        similarity_threshold: f64,
    ) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::invalid("event template must not be empty"));
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("event template must contain finite values"));
        }
        if !(similarity_threshold > 0.0 && similarity_threshold <= 1.0) {
            return Err(Error::invalid("similarity threshold must be in (0, 1]"));
        }
        Ok(EventTemplate {
            name: name.into(),
            samples,
            similarity_threshold,
        })
    }
}

/// Best cosine similarity between `template` and any equally long segment
/// of `window`, using FFT cross-correlation for the alignment search.
fn best_similarity(
    window: &[f64],
    window_fft: &[Complex64],
    seg_sq_prefix: &[f64],
    template_fft: &[Complex64],
    template_norm: f64,
    template_len: usize,
    planner: &mut FftPlanner<f64>,
) -> f64 {
    let n_fft = window_fft.len();
    if template_len > window.len() || template_norm <= 0.0 {
        return 0.0;
    }
    // corr[l] = sum_j window[l + j] * template[j]
    let mut prod: Vec<Complex64> = window_fft
        .iter()
        .zip(template_fft)
        .map(|(w, t)| w * t.conj())
        .collect();
    planner.plan_fft_inverse(n_fft).process(&mut prod);
    let scale = 1.0 / n_fft as f64;

    let mut best = f64::MIN;
    for lag in 0..=window.len() - template_len {
        let seg_energy = seg_sq_prefix[lag + template_len] - seg_sq_prefix[lag];
        if seg_energy <= 0.0 {
            continue;
        }
        let sim = prod[lag].re * scale / (seg_energy.sqrt() * template_norm);
        if sim > best {
            best = sim;
        }
    }
    if best == f64::MIN {
        0.0
    } else {
        best
    }
}

/// Scan a trace in 10 s windows with 50% overlap and return merged
/// intervals whose content matches any template above its similarity
/// threshold. An empty template list yields an empty result. Templates
/// longer than the window are ignored.
pub fn detect_environmental_events(
    trace: &VibrationTrace,
    templates: &[EventTemplate],
) -> Result<Vec<TimeInterval>> {
    if templates.is_empty() {
        return Ok(Vec::new());
    }
    let windows = sliding_windows(trace, WINDOW_S, OVERLAP_FRAC)?;
    if windows.is_empty() {
        return Ok(Vec::new());
    }
    let win_len = windows[0].end_idx - windows[0].start_idx;
    let max_t = templates
        .iter()
        .map(|t| t.samples.len())
        .filter(|&m| m <= win_len)
        .max()
        .unwrap_or(0);
    if max_t == 0 {
        return Ok(Vec::new());
    }
    let n_fft = next_pow2(win_len + max_t);
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(n_fft);

    struct Prepared {
        fft: Vec<Complex64>,
        norm: f64,
        len: usize,
        threshold: f64,
    }
    let prepared: Vec<Prepared> = templates
        .iter()
        .filter(|t| t.samples.len() <= win_len)
        .map(|t| {
            let mut buf = vec![Complex64::new(0.0, 0.0); n_fft];
            for (b, &s) in buf.iter_mut().zip(t.samples.iter()) {
                *b = Complex64::new(s, 0.0);
            }
            fwd.process(&mut buf);
            let norm = t.samples.iter().map(|v| v * v).sum::<f64>().sqrt();
            Prepared {
                fft: buf,
                norm,
                len: t.samples.len(),
                threshold: t.similarity_threshold,
            }
        })
        .collect();

    let mut flagged: Vec<(f64, f64)> = Vec::new();
    let mut win_buf = vec![Complex64::new(0.0, 0.0); n_fft];
    for w in &windows {
        let seg = w.samples(trace);
        win_buf.fill(Complex64::new(0.0, 0.0));
        for (b, &s) in win_buf.iter_mut().zip(seg.iter()) {
            *b = Complex64::new(s, 0.0);
        }
        fwd.process(&mut win_buf);
        let mut sq_prefix = vec![0.0; seg.len() + 1];
        for (i, &s) in seg.iter().enumerate() {
            sq_prefix[i + 1] = sq_prefix[i] + s * s;
        }
        let hit = prepared.iter().any(|p| {
            best_similarity(seg, &win_buf, &sq_prefix, &p.fft, p.norm, p.len, &mut planner)
                > p.threshold
        });
        if hit {
            flagged.push((w.start_s, w.end_s));
        }
    }

    let merged = crate::trace::merge_spans(flagged);
    merged
        .into_iter()
        .map(|(a, b)| TimeInterval::new(a, b, IntervalLabel::EnvironmentalEvent))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn noise(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect()
    }

    #[test]
    fn exact_copy_is_flagged() {
        let fs = 500.0;
        let template = noise(1000, 1); // 2 s burst signature
        let mut samples = vec![0.0; 30_000]; // 60 s of silence
        for (i, &v) in template.iter().enumerate() {
            samples[11_000 + i] = v;
        }
        let trace = VibrationTrace::new("t", fs, samples).unwrap();
        let tpl = EventTemplate::new("flush", template, 0.7).unwrap();
        let events = detect_environmental_events(&trace, &[tpl]).unwrap();
        assert_eq!(events.len(), 1);
        let ev = events[0];
        assert!(ev.start_s <= 22.0 && ev.end_s >= 24.0, "{ev:?}");
        assert_eq!(ev.label, IntervalLabel::EnvironmentalEvent);
    }

    #[test]
    fn empty_template_list_gives_empty_result() {
        let trace = VibrationTrace::new("t", 500.0, noise(30_000, 2)).unwrap();
        assert!(detect_environmental_events(&trace, &[]).unwrap().is_empty());
    }

    #[test]
    fn white_noise_rarely_matches_at_standard_threshold() {
        // Monte Carlo similarity distribution: independent noise windows
        // against an unrelated template must false-flag < 1% of windows.
        let fs = 500.0;
        let template = EventTemplate::new("t", noise(1000, 77), 0.7).unwrap();
        let mut total_windows = 0usize;
        let mut flagged_windows = 0.0f64;
        for seed in 0..8u64 {
            let trace = VibrationTrace::new("t", fs, noise(150_000, 100 + seed)).unwrap();
            let windows = sliding_windows(&trace, 10.0, 0.5).unwrap();
            total_windows += windows.len();
            let events = detect_environmental_events(&trace, std::slice::from_ref(&template)).unwrap();
            // A merged run of k adjacent flagged windows spans 5*(k+1) s.
            flagged_windows += events
                .iter()
                .map(|e| (e.end_s - e.start_s) / 5.0 - 1.0)
                .sum::<f64>();
        }
        let rate = flagged_windows / total_windows as f64;
        assert!(rate < 0.01, "false flag rate {rate}");
    }

    #[test]
    fn shifted_template_in_window_is_still_flagged() {
        // Cross-correlation alignment: the insertion offset inside the
        // window must not matter.
        let fs = 500.0;
        let template = noise(1000, 5);
        for &offset_s in &[12.0, 14.5, 16.9] {
            let mut samples = vec![0.0; 30_000];
            let start = (offset_s * fs) as usize;
            for (i, &v) in template.iter().enumerate() {
                samples[start + i] = v;
            }
            let trace = VibrationTrace::new("t", fs, samples).unwrap();
            let tpl = EventTemplate::new("e", template.clone(), 0.7).unwrap();
            let events = detect_environmental_events(&trace, &[tpl]).unwrap();
            assert!(
                events.iter().any(|e| e.contains(offset_s)),
                "offset {offset_s} not flagged: {events:?}"
            );
        }
    }

    #[test]
    fn template_validation() {
        assert!(EventTemplate::new("x", vec![], 0.7).is_err());
        assert!(EventTemplate::new("x", vec![f64::NAN], 0.7).is_err());
        assert!(EventTemplate::new("x", vec![1.0], 0.0).is_err());
        assert!(EventTemplate::new("x", vec![1.0], 1.5).is_err());
    }
}
