//! Heartbeat/respiration event detection and per-minute rate series.
//!
//! Heartbeats are picked as prominent maxima of the 10-100 Hz wavelet band
//! sum with a 0.5 s minimum separation (the diastole peak trails the main
//! one by less than that, and a sow's HR tops out near 120/min).
//! Respiration modulates the energy trend of those impulses, so breaths are
//! picked from a moving sum of the same detection function with a 1 s
//! separation.

use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

use crate::trace::{centered_window_sum, merge_spans, overlap_measure, TimeInterval};

/// Plausible measured heart-rate range, events/min. The ceiling is also
/// forced mechanically by the 0.5 s separation rule; measured values below
/// the floor mean the detector lost the signal and the minute is flagged
/// for interpolation instead.
pub const HR_MEASURED_RANGE: (f64, f64) = (60.0, 120.0);
/// Plausible measured respiratory-rate range, events/min (ceiling forced
/// by the 1 s separation rule).
pub const RR_MEASURED_RANGE: (f64, f64) = (10.0, 60.0);
/// Clamp range for interpolated heart rates, events/min.
pub const HR_CLAMP: (f64, f64) = (40.0, 200.0);
/// Clamp range for interpolated respiratory rates, events/min.
pub const RR_CLAMP: (f64, f64) = (5.0, 80.0);

/// Indices of strict local maxima; flat-topped peaks report their midpoint.
fn local_maxima(x: &[f64]) -> Vec<usize> {
    let n = x.len();
    let mut peaks = Vec::new();
    let mut i = 1usize;
    while n >= 3 && i < n - 1 {
        if x[i - 1] < x[i] {
            let mut j = i;
            while j + 1 < n && x[j + 1] == x[i] {
                j += 1;
            }
            if j + 1 < n && x[j + 1] < x[i] {
                peaks.push((i + j) / 2);
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    peaks
}

/// Topographic prominence of each peak: height above the higher of the two
/// lowest saddles toward taller terrain (or the signal edge).
fn peak_prominences(x: &[f64], peaks: &[usize]) -> Vec<f64> {
    peaks
        .iter()
        .map(|&p| {
            let h = x[p];
            let mut left_min = h;
            let mut i = p;
            while i > 0 {
                i -= 1;
                if x[i] > h {
                    break;
                }
                left_min = left_min.min(x[i]);
            }
            let mut right_min = h;
            let mut i = p;
            while i + 1 < x.len() {
                i += 1;
                if x[i] > h {
                    break;
                }
                right_min = right_min.min(x[i]);
            }
            h - left_min.max(right_min)
        })
        .collect()
}

/// Keep the taller peak whenever two peaks are closer than `min_dist`
/// samples: peaks are visited tallest-first, each survivor suppressing its
/// shorter neighbors.
fn enforce_min_separation(peaks: &[usize], x: &[f64], min_dist: usize) -> Vec<usize> {
    if min_dist <= 1 || peaks.len() < 2 {
        return peaks.to_vec();
    }
    let mut order: Vec<usize> = (0..peaks.len()).collect();
    order.sort_by(|&a, &b| x[peaks[b]].partial_cmp(&x[peaks[a]]).unwrap());
    let mut keep = vec![true; peaks.len()];
    for &oi in &order {
        if !keep[oi] {
            continue;
        }
        let p = peaks[oi];
        let mut k = oi;
        while k > 0 {
            k -= 1;
            if p - peaks[k] >= min_dist {
                break;
            }
            keep[k] = false;
        }
        let mut k = oi;
        while k + 1 < peaks.len() {
            k += 1;
            if peaks[k] - p >= min_dist {
                break;
            }
            keep[k] = false;
        }
    }
    peaks
        .iter()
        .zip(keep)
        .filter(|(_, kept)| *kept)
        .map(|(&p, _)| p)
        .collect()
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    values[values.len() / 2]
}

fn pick_peaks(
    detection_fn: &[f64],
    sample_rate_hz: f64,
    min_separation_s: f64,
    prominence_frac: f64,
) -> Vec<f64> {
    let peaks = local_maxima(detection_fn);
    if peaks.is_empty() {
        return Vec::new();
    }
    let mut heights: Vec<f64> = peaks.iter().map(|&p| detection_fn[p]).collect();
    let median_height = median(&mut heights);
    let threshold = prominence_frac * median_height;
    let proms = peak_prominences(detection_fn, &peaks);
    let eligible: Vec<usize> = peaks
        .iter()
        .zip(&proms)
        .filter(|(_, &prom)| prom >= threshold)
        .map(|(&p, _)| p)
        .collect();
    let min_dist = (min_separation_s * sample_rate_hz).ceil() as usize;
    let mut kept = enforce_min_separation(&eligible, detection_fn, min_dist);
    kept.sort_unstable();
    kept.iter().map(|&p| p as f64 / sample_rate_hz).collect()
}

/// Pick heartbeat times from the band-summed wavelet detection function.
///
/// A peak qualifies when its prominence reaches `prominence_frac` of the
/// median local-maximum height, and accepted peaks stay at least
/// `min_separation_s` apart (the taller one wins), capping the implied
/// rate at 120/min for the default 0.5 s.
pub fn detect_heartbeats(
    detection_fn: &[f64],
    sample_rate_hz: f64,
    min_separation_s: f64,
    prominence_frac: f64,
) -> Vec<f64> {
    pick_peaks(detection_fn, sample_rate_hz, min_separation_s, prominence_frac)
}

/// Pick respiration times: a centered moving sum over `moving_sum_s` first
/// extracts the energy trend of the heartbeat impulses, then peaks are
/// picked as for heartbeats with a 1 s default separation (rate cap
/// 60/min). A constant detection function yields no peaks.
pub fn detect_respiration(
    detection_fn: &[f64],
    sample_rate_hz: f64,
    moving_sum_s: f64,
    min_separation_s: f64,
    prominence_frac: f64,
) -> Vec<f64> {
    let mut window = (moving_sum_s * sample_rate_hz).round() as usize;
    if window % 2 == 0 {
        window += 1;
    }
    let smoothed = centered_window_sum(detection_fn, window.max(1));
    pick_peaks(&smoothed, sample_rate_hz, min_separation_s, prominence_frac)
}

/// Per-window rate estimates with validity bookkeeping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateSeries {
    /// Rate scaled to the full window (events/min for 60 s windows).
    pub rate_per_min: Vec<f64>,
    /// False where the window cannot stand on its own: more than half of it
    /// removed, or no events detected.
    pub valid: Vec<bool>,
    /// Fraction of each window removed by gating/movement/event intervals.
    pub removed_fraction: Vec<f64>,
}

/// Count events per tumbling window of `window_s` (only full windows are
/// emitted). Events inside removed intervals are excluded; partially
/// removed windows are scaled up by their coverage. A window is flagged
/// invalid for interpolation when more than half its span is removed or
/// when the measured rate falls below `plausible_range.0` (no events, or a
/// collapsed detection function); rates are capped at `plausible_range.1`.
pub fn rate_series(
    event_times_s: &[f64],
    total_duration_s: f64,
    window_s: f64,
    removed: &[TimeInterval],
    plausible_range: (f64, f64),
) -> RateSeries {
    let n_windows = (total_duration_s / window_s + 1e-9).floor() as usize;
    let removed_spans = merge_spans(
        removed
            .iter()
            .map(|iv| (iv.start_s.max(0.0), iv.end_s.min(total_duration_s)))
            .collect(),
    );
    let in_removed =
        |t: f64| removed_spans.iter().any(|&(a, b)| t >= a && t < b);

    let mut rate = Vec::with_capacity(n_windows);
    let mut valid = Vec::with_capacity(n_windows);
    let mut removed_fraction = Vec::with_capacity(n_windows);
    for k in 0..n_windows {
        let lo = k as f64 * window_s;
        let hi = lo + window_s;
        let removed_s = overlap_measure(&removed_spans, lo, hi);
        let covered = window_s - removed_s;
        let count = event_times_s
            .iter()
            .filter(|&&t| t >= lo && t < hi && !in_removed(t))
            .count() as f64;
        let scale_to_min = 60.0 / window_s;
        let r = if covered > 0.0 {
            (count * (window_s / covered) * scale_to_min).min(plausible_range.1)
        } else {
            0.0
        };
        rate.push(r);
        valid.push(removed_s <= window_s / 2.0 && r >= plausible_range.0);
        removed_fraction.push(removed_s / window_s);
    }
    RateSeries {
        rate_per_min: rate,
        valid,
        removed_fraction,
    }
}

/// Per-minute HR and RR for one sensor (or the fused result).
///
/// Values are `None` until measured or filled; `interpolated_fraction` is
/// the share of each minute whose value rests on interpolation rather than
/// measurement (1.0 for spline-filled minutes), which doubles as the
/// per-minute interpolation duration `t_int = fraction * 60 s` feeding the
/// fusion weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VitalSeries {
    pub sensor_id: String,
    pub minute_index: Vec<usize>,
    pub hr_bpm: Vec<Option<f64>>,
    pub rr_bpm: Vec<Option<f64>>,
    pub hr_measured: Vec<bool>,
    pub rr_measured: Vec<bool>,
    pub interpolated_fraction: Vec<f64>,
}

impl VitalSeries {
    /// Assemble a series from the per-signal rate series of one sensor.
    /// Invalid minutes stay empty (to be spline-filled later).
    pub fn from_rates(sensor_id: impl Into<String>, hr: &RateSeries, rr: &RateSeries) -> Self {
        let n = hr.rate_per_min.len().min(rr.rate_per_min.len());
        let mut series = VitalSeries {
            sensor_id: sensor_id.into(),
            minute_index: (0..n).collect(),
            hr_bpm: Vec::with_capacity(n),
            rr_bpm: Vec::with_capacity(n),
            hr_measured: Vec::with_capacity(n),
            rr_measured: Vec::with_capacity(n),
            interpolated_fraction: Vec::with_capacity(n),
        };
        for k in 0..n {
            series.hr_bpm.push(hr.valid[k].then_some(hr.rate_per_min[k]));
            series.rr_bpm.push(rr.valid[k].then_some(rr.rate_per_min[k]));
            series.hr_measured.push(hr.valid[k]);
            series.rr_measured.push(rr.valid[k]);
            let frac = if hr.valid[k] && rr.valid[k] {
                hr.removed_fraction[k].max(rr.removed_fraction[k])
            } else {
                1.0
            };
            series.interpolated_fraction.push(frac);
        }
        series
    }

    pub fn len(&self) -> usize {
        self.minute_index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.minute_index.is_empty()
    }

    /// Minutes currently lacking a measured value in either signal.
    pub fn invalid_minutes(&self) -> BTreeSet<usize> {
        self.minute_index
            .iter()
            .enumerate()
            .filter(|(k, _)| !self.hr_measured[*k] || !self.rr_measured[*k])
            .map(|(_, &m)| m)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::IntervalLabel;

    #[test]
    fn flat_input_yields_no_events() {
        assert!(detect_heartbeats(&vec![0.0; 5000], 500.0, 0.5, 0.25).is_empty());
        assert!(detect_respiration(&vec![3.3; 5000], 500.0, 1.0, 1.0, 0.25).is_empty());
    }

    #[test]
    fn separation_rule_caps_rate_at_120() {
        // Impulse train at 0.4 s spacing = 150/min; output must stay >= 0.5 s
        // apart, i.e. <= 120/min.
        let fs = 500.0;
        let n = 30_000;
        let mut x = vec![0.0; n];
        let mut t = 0.2;
        while t < 60.0 {
            let i = (t * fs) as usize;
            // A small triangular bump so prominences are well defined.
            x[i] = 1.0;
            x[i - 1] = 0.5;
            x[i + 1] = 0.5;
            t += 0.4;
        }
        let beats = detect_heartbeats(&x, fs, 0.5, 0.25);
        for pair in beats.windows(2) {
            assert!(pair[1] - pair[0] >= 0.5 - 1e-9);
        }
        assert!(beats.len() as f64 <= 120.0);
    }

    #[test]
    fn beat_times_strictly_increasing_with_min_gaps() {
        let (trace, _) = crate::synth::synth_vital_force(
            90.0,
            30.0,
            60.0,
            &crate::synth::BeatMorphology::default(),
            500.0,
            3,
        )
        .unwrap();
        let spec =
            crate::preprocess::cwt_morse(&trace, 10.0, 100.0, &Default::default()).unwrap();
        let det = crate::preprocess::band_magnitude_sum(&spec, 10.0, 100.0).unwrap();
        let beats = detect_heartbeats(&det, 500.0, 0.5, 0.25);
        for pair in beats.windows(2) {
            assert!(pair[1] > pair[0]);
            assert!(pair[1] - pair[0] >= 0.5 - 1e-9);
        }
    }

    #[test]
    fn clean_scene_recovers_90_bpm() {
        let (trace, gt) = crate::synth::synth_vital_force(
            90.0,
            30.0,
            60.0,
            &crate::synth::BeatMorphology::default(),
            500.0,
            17,
        )
        .unwrap();
        let spec =
            crate::preprocess::cwt_morse(&trace, 10.0, 100.0, &Default::default()).unwrap();
        let det = crate::preprocess::band_magnitude_sum(&spec, 10.0, 100.0).unwrap();
        let beats = detect_heartbeats(&det, 500.0, 0.5, 0.25);
        assert_eq!(gt.heartbeat_times_s.len(), 90);
        assert!(
            (beats.len() as f64 - 90.0).abs() <= 1.0,
            "detected {} beats",
            beats.len()
        );
    }

    #[test]
    fn clean_scene_recovers_35_breaths() {
        let (trace, gt) = crate::synth::synth_vital_force(
            98.0,
            35.0,
            60.0,
            &crate::synth::BeatMorphology::default(),
            500.0,
            23,
        )
        .unwrap();
        let spec =
            crate::preprocess::cwt_morse(&trace, 10.0, 100.0, &Default::default()).unwrap();
        let det = crate::preprocess::band_magnitude_sum(&spec, 10.0, 100.0).unwrap();
        let breaths = detect_respiration(&det, 500.0, 1.0, 1.0, 0.25);
        assert_eq!(gt.respiration_times_s.len(), 35);
        assert!(
            (breaths.len() as f64 - 35.0).abs() <= 2.0,
            "detected {} breaths",
            breaths.len()
        );
    }

    #[test]
    fn detection_invariant_to_positive_scaling() {
        let (trace, _) = crate::synth::synth_vital_force(
            80.0,
            25.0,
            30.0,
            &crate::synth::BeatMorphology::default(),
            500.0,
            5,
        )
        .unwrap();
        let spec =
            crate::preprocess::cwt_morse(&trace, 10.0, 100.0, &Default::default()).unwrap();
        let det = crate::preprocess::band_magnitude_sum(&spec, 10.0, 100.0).unwrap();
        let scaled: Vec<f64> = det.iter().map(|x| 250.0 * x).collect();
        assert_eq!(
            detect_heartbeats(&det, 500.0, 0.5, 0.25),
            detect_heartbeats(&scaled, 500.0, 0.5, 0.25)
        );
    }

    #[test]
    fn rate_series_arithmetic() {
        // Events every 0.75 s for 60 s -> 80/min.
        let events: Vec<f64> = (0..80).map(|i| i as f64 * 0.75).collect();
        let rs = rate_series(&events, 60.0, 60.0, &[], HR_MEASURED_RANGE);
        assert_eq!(rs.rate_per_min, vec![80.0]);
        assert_eq!(rs.valid, vec![true]);

        // Empty event list -> rate 0, invalid.
        let rs = rate_series(&[], 60.0, 60.0, &[], HR_MEASURED_RANGE);
        assert_eq!(rs.rate_per_min, vec![0.0]);
        assert_eq!(rs.valid, vec![false]);

        // 98 events in one minute -> 98.
        let events: Vec<f64> = (0..98).map(|i| i as f64 * (60.0 / 98.0)).collect();
        let rs = rate_series(&events, 60.0, 60.0, &[], HR_MEASURED_RANGE);
        assert_eq!(rs.rate_per_min, vec![98.0]);
    }

    #[test]
    fn heavily_removed_minutes_are_invalid_and_scaled() {
        let events: Vec<f64> = (0..98).map(|i| i as f64 * (60.0 / 98.0)).collect();
        // Remove 40 s of the minute: invalid, and events there excluded.
        let removed =
            vec![TimeInterval::new(0.0, 40.0, IntervalLabel::Movement).unwrap()];
        let rs = rate_series(&events, 60.0, 60.0, &removed, HR_MEASURED_RANGE);
        assert!(!rs.valid[0]);
        assert!((rs.removed_fraction[0] - 40.0 / 60.0).abs() < 1e-9);

        // Remove 15 s: still valid, count scaled by coverage back near 98.
        let removed =
            vec![TimeInterval::new(10.0, 25.0, IntervalLabel::Movement).unwrap()];
        let rs = rate_series(&events, 60.0, 60.0, &removed, HR_MEASURED_RANGE);
        assert!(rs.valid[0]);
        assert!((rs.rate_per_min[0] - 98.0).abs() <= 3.0, "{}", rs.rate_per_min[0]);
    }

    #[test]
    fn series_assembly_marks_invalid_minutes() {
        let hr = RateSeries {
            rate_per_min: vec![98.0, 50.0, 97.0],
            valid: vec![true, false, true],
            removed_fraction: vec![0.0, 0.6, 0.1],
        };
        let rr = RateSeries {
            rate_per_min: vec![35.0, 20.0, 34.0],
            valid: vec![true, false, true],
            removed_fraction: vec![0.0, 0.6, 0.1],
        };
        let vs = VitalSeries::from_rates("s", &hr, &rr);
        assert_eq!(vs.hr_bpm[0], Some(98.0));
        assert_eq!(vs.hr_bpm[1], None);
        assert_eq!(vs.interpolated_fraction[1], 1.0);
        assert!((vs.interpolated_fraction[2] - 0.1).abs() < 1e-12);
        assert_eq!(vs.invalid_minutes().into_iter().collect::<Vec<_>>(), vec![1]);
    }
}
