//! Core time-series containers, windowing, and interval bookkeeping shared
//! by all pipeline stages.
//!
//! Time is kept in seconds as `f64` throughout; sample indices are derived
//! at a single conversion point ([`VibrationTrace::index_at`]) by rounding
//! half-up, so no other module needs its own seconds-to-samples logic.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Label attached to a [`TimeInterval`]. Lying postures are the only states
/// that carry usable vital information.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntervalLabel {
    LyingLateral,
    LyingSternal,
    Sitting,
    Standing,
    Movement,
    EnvironmentalEvent,
}

impl IntervalLabel {
    pub fn is_lying(self) -> bool {
        matches!(self, IntervalLabel::LyingLateral | IntervalLabel::LyingSternal)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            IntervalLabel::LyingLateral => "lying_lateral",
            IntervalLabel::LyingSternal => "lying_sternal",
            IntervalLabel::Sitting => "sitting",
            IntervalLabel::Standing => "standing",
            IntervalLabel::Movement => "movement",
            IntervalLabel::EnvironmentalEvent => "environmental_event",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "lying_lateral" => IntervalLabel::LyingLateral,
            "lying_sternal" => IntervalLabel::LyingSternal,
            "sitting" => IntervalLabel::Sitting,
            "standing" => IntervalLabel::Standing,
            "movement" => IntervalLabel::Movement,
            "environmental_event" => IntervalLabel::EnvironmentalEvent,
            _ => return None,
        })
    }
}

/// A labeled half-open interval `[start_s, end_s)` on a trace's time axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeInterval {
    pub start_s: f64,
    pub end_s: f64,
    pub label: IntervalLabel,
}

impl TimeInterval {
    pub fn new(start_s: f64, end_s: f64, label: IntervalLabel) -> Result<Self> {
        if !(start_s < end_s) {
            return Err(Error::invalid(format!(
                "interval start ({start_s}) must precede end ({end_s})"
            )));
        }
        Ok(TimeInterval { start_s, end_s, label })
    }

    pub fn duration_s(&self) -> f64 {
        self.end_s - self.start_s
    }

    pub fn contains(&self, t_s: f64) -> bool {
        t_s >= self.start_s && t_s < self.end_s
    }

    pub fn overlaps(&self, start_s: f64, end_s: f64) -> bool {
        self.start_s < end_s && start_s < self.end_s
    }
}

/// Merge possibly-overlapping `(start, end)` spans into a disjoint sorted
/// union. Touching spans are coalesced.
pub(crate) fn merge_spans(mut spans: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    spans.retain(|(a, b)| b > a);
    spans.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(spans.len());
    for (a, b) in spans {
        match out.last_mut() {
            Some(last) if a <= last.1 => last.1 = last.1.max(b),
            _ => out.push((a, b)),
        }
    }
    out
}

/// Total measure of the intersection between `[lo, hi)` and a merged span set.
pub(crate) fn overlap_measure(spans: &[(f64, f64)], lo: f64, hi: f64) -> f64 {
    spans
        .iter()
        .map(|&(a, b)| (b.min(hi) - a.max(lo)).max(0.0))
        .sum()
}

/// Symmetric (whole-sample reflection) extension index: `-1 -> 0`,
/// `-2 -> 1`, `n -> n-1`, and so on, with period `2n`.
pub(crate) fn mirror_index(i: isize, n: usize) -> usize {
    let m = (2 * n) as isize;
    let mut j = i % m;
    if j < 0 {
        j += m;
    }
    let j = j as usize;
    if j < n {
        j
    } else {
        2 * n - 1 - j
    }
}

/// Centered moving sum over an odd `window`, with symmetric reflection at
/// the edges. With this edge policy the sequence mean is preserved exactly
/// (each edge sample and its mirror image together are counted `window`
/// times). `window <= 1` returns the input unchanged.
pub(crate) fn centered_window_sum(x: &[f64], window: usize) -> Vec<f64> {
    let n = x.len();
    if n == 0 || window <= 1 {
        return x.to_vec();
    }
    debug_assert!(window % 2 == 1, "window must be odd");
    let h = window / 2;
    let m = n + 2 * h;
    let mut prefix = vec![0.0; m + 1];
    for i in 0..m {
        prefix[i + 1] = prefix[i] + x[mirror_index(i as isize - h as isize, n)];
    }
    (0..n).map(|i| prefix[i + 2 * h + 1] - prefix[i]).collect()
}

/// Labeled behavior intervals gating which parts of a recording carry vital
/// information.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BehaviorTimeline {
    pub intervals: Vec<TimeInterval>,
    pub total_duration_s: f64,
}

impl BehaviorTimeline {
    /// Build a timeline, sorting intervals by start. Intervals must lie
    /// within `[0, total_duration_s]` and must not overlap another interval
    /// of the same label.
    pub fn new(mut intervals: Vec<TimeInterval>, total_duration_s: f64) -> Result<Self> {
        if total_duration_s <= 0.0 {
            return Err(Error::invalid("timeline duration must be positive"));
        }
        intervals.sort_by(|a, b| a.start_s.partial_cmp(&b.start_s).unwrap());
        for iv in &intervals {
            if iv.start_s < 0.0 || iv.end_s > total_duration_s + 1e-9 {
                return Err(Error::invalid(format!(
                    "interval [{}, {}) outside timeline [0, {})",
                    iv.start_s, iv.end_s, total_duration_s
                )));
            }
        }
        for pair in intervals.windows(2) {
            if pair[0].label == pair[1].label && pair[1].start_s < pair[0].end_s {
                return Err(Error::invalid(format!(
                    "overlapping '{}' intervals at {}s",
                    pair[0].label.as_str(),
                    pair[1].start_s
                )));
            }
        }
        Ok(BehaviorTimeline { intervals, total_duration_s })
    }

    /// Timeline with a single label covering the whole duration.
    pub fn uniform(label: IntervalLabel, total_duration_s: f64) -> Result<Self> {
        let iv = TimeInterval::new(0.0, total_duration_s, label)?;
        BehaviorTimeline::new(vec![iv], total_duration_s)
    }
}

/// Uniformly sampled vertical floor-velocity recording from one sensor.
/// Amplitudes are in arbitrary linear units.
#[derive(Debug, Clone, PartialEq)]
pub struct VibrationTrace {
    pub sensor_id: String,
    pub sample_rate_hz: f64,
    pub start_time_s: f64,
    pub samples: Vec<f64>,
}

impl VibrationTrace {
    pub fn new(
        sensor_id: impl Into<String>,
        sample_rate_hz: f64,
        samples: Vec<f64>,
    ) -> Result<Self> {
        if sample_rate_hz <= 0.0 {
            return Err(Error::invalid("sample rate must be positive"));
        }
        if samples.is_empty() {
            return Err(Error::invalid("trace must contain at least one sample"));
        }
        Ok(VibrationTrace {
            sensor_id: sensor_id.into(),
            sample_rate_hz,
            start_time_s: 0.0,
            samples,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz
    }

    /// Sample index for a time offset, rounded half-up and clamped to
    /// `[0, len]`.
    pub fn index_at(&self, t_s: f64) -> usize {
        let idx = (t_s * self.sample_rate_hz).round();
        if idx <= 0.0 {
            0
        } else {
            (idx as usize).min(self.samples.len())
        }
    }

    /// Replace the sample payload, keeping identity and timing metadata.
    pub fn with_samples(&self, samples: Vec<f64>) -> VibrationTrace {
        VibrationTrace {
            sensor_id: self.sensor_id.clone(),
            sample_rate_hz: self.sample_rate_hz,
            start_time_s: self.start_time_s,
            samples,
        }
    }
}

/// One fixed-length analysis window over a trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub start_s: f64,
    pub end_s: f64,
    pub start_idx: usize,
    pub end_idx: usize,
}

impl Window {
    pub fn samples<'a>(&self, trace: &'a VibrationTrace) -> &'a [f64] {
        &trace.samples[self.start_idx..self.end_idx]
    }
}

/// Fixed-length sliding windows advancing by `window_s * (1 - overlap_frac)`.
/// A trailing partial window shorter than `window_s` is dropped; a window
/// longer than the trace yields an empty result.
pub fn sliding_windows(
    trace: &VibrationTrace,
    window_s: f64,
    overlap_frac: f64,
) -> Result<Vec<Window>> {
    if window_s <= 0.0 {
        return Err(Error::invalid("window length must be positive"));
    }
    if !(0.0..1.0).contains(&overlap_frac) {
        return Err(Error::invalid("overlap fraction must be in [0, 1)"));
    }
    let fs = trace.sample_rate_hz;
    let win_len = (window_s * fs).round() as usize;
    let step = (((window_s * (1.0 - overlap_frac)) * fs).round() as usize).max(1);
    let n = trace.len();
    if win_len == 0 || win_len > n {
        return Ok(Vec::new());
    }
    let mut out = Vec::with_capacity((n - win_len) / step + 1);
    let mut start = 0usize;
    while start + win_len <= n {
        out.push(Window {
            start_s: start as f64 / fs,
            end_s: (start + win_len) as f64 / fs,
            start_idx: start,
            end_idx: start + win_len,
        });
        start += step;
    }
    Ok(out)
}

/// Complement of the interval union within `[0, duration)`: the segments of
/// the trace that survive removal, as `(start_s, end_s)` pairs.
///
/// Kept plus removed duration equals the trace duration to within one sample
/// period; the computation runs on sample indices so no sample can belong to
/// both sides.
pub fn remove_intervals(trace: &VibrationTrace, intervals: &[TimeInterval]) -> Vec<(f64, f64)> {
    let fs = trace.sample_rate_hz;
    let n = trace.len();
    let merged = merge_spans(intervals.iter().map(|iv| (iv.start_s, iv.end_s)).collect());

    let mut kept = Vec::new();
    let mut cursor = 0usize;
    for (a, b) in merged {
        let ia = trace.index_at(a.max(0.0));
        let ib = trace.index_at(b);
        if ia > cursor {
            kept.push((cursor as f64 / fs, ia as f64 / fs));
        }
        cursor = cursor.max(ib);
        if cursor >= n {
            break;
        }
    }
    if cursor < n {
        kept.push((cursor as f64 / fs, n as f64 / fs));
    }
    kept
}
