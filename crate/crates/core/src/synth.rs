//! Synthetic floor-vibration scenes with exact ground truth.
//!
//! Generates the vibration signature of a lying animal — heartbeat impulse
//! trains amplitude-modulated by respiration — then layers on the effects a
//! real pen adds: movement bursts, wave attenuation and dispersion over the
//! pig-to-sensor distance, environmental events, and sensor noise. Every
//! generator is deterministic for a fixed seed, and the returned ground
//! truth lists every event exactly, which makes these scenes usable as an
//! oracle for the analysis pipeline.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::behavior::{SensorLayout, SensorSite};
use crate::error::{Error, Result};
use crate::fft::apply_frequency_response;
use crate::preprocess::EventTemplate;
use crate::trace::{merge_spans, BehaviorTimeline, IntervalLabel, TimeInterval, VibrationTrace};

/// Depth of the respiration amplitude modulation applied to beat impulses.
const RESP_MOD_DEPTH: f64 = 0.5;
/// Beat/breath timing jitter as a fraction of the nominal period.
const TIMING_JITTER_FRAC: f64 = 0.02;
/// Amplitude damping applied to vital impulses while not lying.
const NON_LYING_DAMPING: f64 = 0.1;

/// Shape of one heartbeat-induced ground impulse: a Gaussian-windowed
/// oscillation (systole) followed by a smaller copy (diastole).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BeatMorphology {
    /// Gaussian envelope sigma of each sub-pulse, seconds.
    pub primary_width_s: f64,
    /// Oscillation frequency of the pulse, Hz. With the default width the
    /// pulse energy spans roughly 20-60 Hz.
    pub carrier_hz: f64,
    /// Delay of the secondary peak after the primary, seconds. Must stay
    /// below 0.5 s so it cannot alias into the next beat at <= 120 bpm.
    pub secondary_delay_s: f64,
    /// Secondary peak amplitude as a fraction of the primary, in (0, 1).
    pub secondary_amplitude_ratio: f64,
}

impl Default for BeatMorphology {
    fn default() -> Self {
        BeatMorphology {
            primary_width_s: 0.008,
            carrier_hz: 40.0,
            secondary_delay_s: 0.3,
            secondary_amplitude_ratio: 0.4,
        }
    }
}

impl BeatMorphology {
    pub fn validate(&self) -> Result<()> {
        if self.primary_width_s <= 0.0 {
            return Err(Error::invalid("primary_width_s must be positive"));
        }
        if self.carrier_hz <= 0.0 {
            return Err(Error::invalid("carrier_hz must be positive"));
        }
        if !(0.0..0.5).contains(&self.secondary_delay_s) {
            return Err(Error::invalid("secondary_delay_s must be in [0, 0.5)"));
        }
        if !(0.0..1.0).contains(&self.secondary_amplitude_ratio)
            || self.secondary_amplitude_ratio == 0.0
        {
            return Err(Error::invalid("secondary_amplitude_ratio must be in (0, 1)"));
        }
        Ok(())
    }
}

/// Frequency-dependent propagation through the pen floor: exponential
/// spectral attenuation `exp(-alpha * f * d)` plus dispersion, with the
/// phase velocity ramping linearly from `v_min_mps` at `freq_band_hz.0`
/// to `v_max_mps` at `freq_band_hz.1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PropagationModel {
    pub alpha_s_per_m: f64,
    pub v_min_mps: f64,
    pub v_max_mps: f64,
    pub freq_band_hz: (f64, f64),
}

impl Default for PropagationModel {
    fn default() -> Self {
        PropagationModel {
            alpha_s_per_m: 0.02,
            v_min_mps: 100.0,
            v_max_mps: 200.0,
            freq_band_hz: (0.0, 200.0),
        }
    }
}

impl PropagationModel {
    /// Attenuation with no dispersion delay at all; inverse of
    /// [`crate::behavior::correct_attenuation`] up to the gain cap.
    pub fn attenuation_only(alpha_s_per_m: f64) -> Self {
        PropagationModel {
            alpha_s_per_m,
            v_min_mps: f64::INFINITY,
            v_max_mps: f64::INFINITY,
            freq_band_hz: (0.0, 200.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.alpha_s_per_m < 0.0 {
            return Err(Error::invalid("alpha must be >= 0"));
        }
        if !(self.v_min_mps > 0.0 && self.v_min_mps <= self.v_max_mps) {
            return Err(Error::invalid("need 0 < v_min <= v_max"));
        }
        Ok(())
    }

    /// Phase velocity at `f_hz`, clamped to the configured band.
    pub fn velocity_at(&self, f_hz: f64) -> f64 {
        let (lo, hi) = self.freq_band_hz;
        if hi <= lo {
            return self.v_min_mps;
        }
        let t = ((f_hz - lo) / (hi - lo)).clamp(0.0, 1.0);
        self.v_min_mps + t * (self.v_max_mps - self.v_min_mps)
    }
}

/// Exact event-level ground truth for one synthesized scene.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VitalGroundTruth {
    pub heartbeat_times_s: Vec<f64>,
    pub respiration_times_s: Vec<f64>,
    pub movement_intervals: Vec<TimeInterval>,
    pub environment_intervals: Vec<TimeInterval>,
    pub posture_timeline: BehaviorTimeline,
    pub per_minute_hr: Vec<f64>,
    pub per_minute_rr: Vec<f64>,
}

/// Events per full tumbling minute of `[0, duration_s)`.
pub fn per_minute_counts(event_times_s: &[f64], duration_s: f64) -> Vec<f64> {
    let minutes = (duration_s / 60.0).floor() as usize;
    let mut counts = vec![0.0; minutes];
    for &t in event_times_s {
        let k = (t / 60.0).floor();
        if k >= 0.0 && (k as usize) < minutes {
            counts[k as usize] += 1.0;
        }
    }
    counts
}

impl VitalGroundTruth {
    /// Recompute the stored per-minute rates from the event lists.
    pub fn refresh_per_minute(&mut self) {
        let dur = self.posture_timeline.total_duration_s;
        self.per_minute_hr = per_minute_counts(&self.heartbeat_times_s, dur);
        self.per_minute_rr = per_minute_counts(&self.respiration_times_s, dur);
    }
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    let mut u1: f64 = rng.gen();
    while u1 <= 1e-300 {
        u1 = rng.gen();
    }
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
}

/// Evenly spread event times with a small uniform jitter. The first event
/// sits half a period in, so all `n` events stay inside `[0, duration_s)`.
fn jittered_event_times(n: usize, duration_s: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    if n == 0 {
        return Vec::new();
    }
    let period = duration_s / n as f64;
    (0..n)
        .map(|k| {
            let jitter = (rng.gen::<f64>() * 2.0 - 1.0) * TIMING_JITTER_FRAC * period;
            ((k as f64 + 0.5) * period + jitter).clamp(0.0, duration_s - 1e-9)
        })
        .collect()
}

/// Add one Gaussian-windowed oscillation of amplitude `amp` centered at
/// `t_center` into the sample buffer.
fn add_pulse(samples: &mut [f64], fs: f64, t_center: f64, amp: f64, width_s: f64, carrier_hz: f64) {
    let half = (4.0 * width_s * fs).ceil() as isize;
    let center = (t_center * fs).round() as isize;
    let n = samples.len() as isize;
    for i in (center - half).max(0)..=(center + half).min(n - 1) {
        let dt = (i - center) as f64 / fs;
        samples[i as usize] +=
            amp * (-dt * dt / (2.0 * width_s * width_s)).exp() * (2.0 * PI * carrier_hz * dt).sin();
    }
}

/// Raised-cosine respiration envelope: peaks (value 1) at breath times and
/// dips to `1 - depth` midway between them. Outside the first/last breath
/// the adjacent segment's period is extended virtually.
struct RespirationEnvelope {
    breath_times: Vec<f64>,
    nominal_period: f64,
    depth: f64,
}

impl RespirationEnvelope {
    fn new(breath_times: &[f64], duration_s: f64, depth: f64) -> Self {
        let nominal_period = if breath_times.len() >= 2 {
            (breath_times[breath_times.len() - 1] - breath_times[0])
                / (breath_times.len() - 1) as f64
        } else {
            duration_s.max(1e-9)
        };
        RespirationEnvelope {
            breath_times: breath_times.to_vec(),
            nominal_period,
            depth,
        }
    }

    fn at(&self, t: f64) -> f64 {
        if self.breath_times.is_empty() || self.depth == 0.0 {
            return 1.0;
        }
        let idx = match self
            .breath_times
            .binary_search_by(|b| b.partial_cmp(&t).unwrap())
        {
            Ok(i) => i as isize,
            Err(i) => i as isize - 1,
        };
        let (prev, next) = if idx < 0 {
            let first = self.breath_times[0];
            (first - self.nominal_period, first)
        } else if idx as usize + 1 >= self.breath_times.len() {
            let last = self.breath_times[self.breath_times.len() - 1];
            (last, last + self.nominal_period)
        } else {
            (self.breath_times[idx as usize], self.breath_times[idx as usize + 1])
        };
        let phase = (t - prev) / (next - prev).max(1e-9);
        1.0 - self.depth * 0.5 * (1.0 - (2.0 * PI * phase).cos())
    }
}

/// Generate the vital-force trace of a lying animal at the source location
/// (distance zero), together with exact ground truth.
///
/// Heartbeat impulses fire at `hr_bpm` with +/-2% timing jitter; each is a
/// two-peak pulse per `morphology`, and its amplitude follows a raised-
/// cosine respiration envelope at `rr_bpm`. Deterministic for a fixed seed.
pub fn synth_vital_force(
    hr_bpm: f64,
    rr_bpm: f64,
    duration_s: f64,
    morphology: &BeatMorphology,
    sample_rate_hz: f64,
    seed: u64,
) -> Result<(VibrationTrace, VitalGroundTruth)> {
    if !(0.0..=240.0).contains(&hr_bpm) {
        return Err(Error::invalid("hr_bpm must be in [0, 240]"));
    }
    if !(0.0..=120.0).contains(&rr_bpm) {
        return Err(Error::invalid("rr_bpm must be in [0, 120]"));
    }
    if duration_s <= 0.0 {
        return Err(Error::invalid("duration_s must be positive"));
    }
    if sample_rate_hz <= 0.0 {
        return Err(Error::invalid("sample_rate_hz must be positive"));
    }
    morphology.validate()?;

    let n = (duration_s * sample_rate_hz).round() as usize;
    let mut samples = vec![0.0; n.max(1)];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let n_beats = (hr_bpm * duration_s / 60.0).round() as usize;
    let n_breaths = (rr_bpm * duration_s / 60.0).round() as usize;

    // No observable events at all without a heartbeat source.
    let (beat_times, breath_times) = if n_beats == 0 {
        (Vec::new(), Vec::new())
    } else {
        let beats = jittered_event_times(n_beats, duration_s, &mut rng);
        let breaths = jittered_event_times(n_breaths, duration_s, &mut rng);
        (beats, breaths)
    };

    let envelope = RespirationEnvelope::new(&breath_times, duration_s, RESP_MOD_DEPTH);
    for &t in &beat_times {
        let amp = envelope.at(t);
        add_pulse(
            &mut samples,
            sample_rate_hz,
            t,
            amp,
            morphology.primary_width_s,
            morphology.carrier_hz,
        );
        add_pulse(
            &mut samples,
            sample_rate_hz,
            t + morphology.secondary_delay_s,
            amp * morphology.secondary_amplitude_ratio,
            morphology.primary_width_s,
            morphology.carrier_hz,
        );
    }

    let trace = VibrationTrace::new("source", sample_rate_hz, samples)?;
    let mut gt = VitalGroundTruth {
        heartbeat_times_s: beat_times,
        respiration_times_s: breath_times,
        movement_intervals: Vec::new(),
        environment_intervals: Vec::new(),
        posture_timeline: BehaviorTimeline::uniform(IntervalLabel::LyingLateral, duration_s)?,
        per_minute_hr: Vec::new(),
        per_minute_rr: Vec::new(),
    };
    gt.refresh_per_minute();
    Ok((trace, gt))
}

/// Median of the per-second peak amplitude, used to express movement and
/// environment magnitudes relative to the heartbeat signal. Falls back to
/// 1.0 on an all-zero trace.
pub fn median_beat_peak(trace: &VibrationTrace) -> f64 {
    let fs = trace.sample_rate_hz;
    let win = fs.round() as usize;
    if win == 0 || trace.len() < win {
        let m = trace.samples.iter().fold(0.0f64, |a, &x| a.max(x.abs()));
        return if m > 0.0 { m } else { 1.0 };
    }
    let mut peaks: Vec<f64> = trace
        .samples
        .chunks_exact(win)
        .map(|c| c.iter().fold(0.0f64, |a, &x| a.max(x.abs())))
        .filter(|&m| m > 0.0)
        .collect();
    if peaks.is_empty() {
        return 1.0;
    }
    peaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    peaks[peaks.len() / 2]
}

/// Tukey window: cosine tapers over the first and last `alpha/2` fraction.
fn tukey(n: usize, alpha: f64) -> Vec<f64> {
    if n == 0 {
        return Vec::new();
    }
    let edge = ((alpha * n as f64) / 2.0).floor().max(1.0) as usize;
    (0..n)
        .map(|i| {
            let j = i.min(n - 1 - i);
            if j < edge {
                0.5 * (1.0 - (PI * j as f64 / edge as f64).cos())
            } else {
                1.0
            }
        })
        .collect()
}

/// Band-limited random burst: a mixture of random-phase sinusoids inside
/// `band_hz`, Tukey-tapered, normalized to unit peak.
fn band_limited_burst(n: usize, fs: f64, band_hz: (f64, f64), rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut burst = vec![0.0; n];
    for _ in 0..8 {
        let f = band_hz.0 + rng.gen::<f64>() * (band_hz.1 - band_hz.0);
        let phase = rng.gen::<f64>() * 2.0 * PI;
        let amp = 0.5 + rng.gen::<f64>() * 0.5;
        for (i, b) in burst.iter_mut().enumerate() {
            *b += amp * (2.0 * PI * f * i as f64 / fs + phase).sin();
        }
    }
    let window = tukey(n, 0.2);
    for (b, w) in burst.iter_mut().zip(window.iter()) {
        *b *= w;
    }
    let peak = burst.iter().fold(0.0f64, |a, &x| a.max(x.abs()));
    if peak > 0.0 {
        for b in &mut burst {
            *b /= peak;
        }
    }
    burst
}

/// Add movement bursts inside the given intervals. Burst peak amplitude is
/// a per-interval random factor from `magnitude_factor_range` times the
/// median heartbeat peak of the input trace. Samples outside the intervals
/// are untouched; overlapping intervals are merged before injection.
pub fn inject_movements(
    trace: &VibrationTrace,
    intervals: &[TimeInterval],
    magnitude_factor_range: (f64, f64),
    seed: u64,
) -> Result<(VibrationTrace, Vec<TimeInterval>)> {
    let (lo, hi) = magnitude_factor_range;
    if !(1.0 <= lo && lo <= hi && hi <= 100.0) {
        return Err(Error::invalid("magnitude factor range must satisfy 1 <= lo <= hi <= 100"));
    }
    let dur = trace.duration_s();
    for ivl in intervals {
        if ivl.start_s < 0.0 || ivl.end_s > dur + 1e-9 {
            return Err(Error::invalid(format!(
                "movement interval [{}, {}) outside trace",
                ivl.start_s, ivl.end_s
            )));
        }
    }

    let merged = merge_spans(intervals.iter().map(|iv| (iv.start_s, iv.end_s)).collect());
    let reference = median_beat_peak(trace);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fs = trace.sample_rate_hz;
    let mut samples = trace.samples.clone();
    let mut out_intervals = Vec::with_capacity(merged.len());
    for (a, b) in merged {
        let ia = trace.index_at(a);
        let ib = trace.index_at(b);
        if ib <= ia {
            continue;
        }
        let factor = lo + rng.gen::<f64>() * (hi - lo);
        let burst = band_limited_burst(ib - ia, fs, (3.0, 80.0), &mut rng);
        for (s, v) in samples[ia..ib].iter_mut().zip(burst.iter()) {
            *s += factor * reference * v;
        }
        out_intervals.push(TimeInterval::new(a, b, IntervalLabel::Movement)?);
    }
    Ok((trace.with_samples(samples), out_intervals))
}

/// Result of superimposing an environmental-event template onto a trace.
#[derive(Debug, Clone)]
pub struct EnvironmentInjection {
    pub trace: VibrationTrace,
    pub intervals: Vec<TimeInterval>,
    /// True when an insertion ran past the end of the trace and was cut.
    pub truncated: bool,
}

/// Add `template` starting at each requested time. Insertions past the
/// trace end are truncated and flagged.
pub fn inject_environment(
    trace: &VibrationTrace,
    template: &[f64],
    at_times_s: &[f64],
) -> Result<EnvironmentInjection> {
    let fs = trace.sample_rate_hz;
    if template.len() as f64 / fs >= 10.0 {
        return Err(Error::invalid("environment template must be shorter than 10 s"));
    }
    let n = trace.len();
    let mut samples = trace.samples.clone();
    let mut intervals = Vec::with_capacity(at_times_s.len());
    let mut truncated = false;
    for &t in at_times_s {
        if t < 0.0 || t >= trace.duration_s() {
            truncated = true;
            continue;
        }
        let start = trace.index_at(t);
        let end = (start + template.len()).min(n);
        if start + template.len() > n {
            truncated = true;
        }
        for (i, &v) in template[..end - start].iter().enumerate() {
            samples[start + i] += v;
        }
        if end > start {
            intervals.push(TimeInterval::new(
                start as f64 / fs,
                end as f64 / fs,
                IntervalLabel::EnvironmentalEvent,
            )?);
        }
    }
    Ok(EnvironmentInjection {
        trace: trace.with_samples(samples),
        intervals,
        truncated,
    })
}

/// Propagate a source trace over `distance_m` of floor: every frequency
/// component `f` is scaled by `exp(-alpha * f * d)` and delayed by
/// `d / v(f)`. Output length equals input length; the internal FFT is
/// padded past the largest delay so nothing wraps around.
pub fn propagate(
    trace: &VibrationTrace,
    distance_m: f64,
    model: &PropagationModel,
) -> Result<VibrationTrace> {
    if distance_m < 0.0 {
        return Err(Error::invalid("distance must be >= 0"));
    }
    model.validate()?;
    let fs = trace.sample_rate_hz;
    let alpha = model.alpha_s_per_m;
    // Delays need pad room so nothing wraps; a pure gain runs unpadded so
    // the attenuation inversion can reproduce the source exactly.
    let pad = if model.v_min_mps.is_finite() && distance_m > 0.0 {
        ((distance_m / model.v_min_mps) * fs).ceil() as usize + 16
    } else {
        0
    };
    let out = apply_frequency_response(&trace.samples, fs, pad, |f| {
        let gain = (-alpha * f * distance_m).exp();
        let delay_s = if model.v_min_mps.is_finite() {
            distance_m / model.velocity_at(f)
        } else {
            0.0
        };
        Complex64::from_polar(gain, -2.0 * PI * f * delay_s)
    });
    Ok(trace.with_samples(out))
}

/// Movement placement and magnitude for a scenario.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct MovementSpec {
    /// Explicit movement intervals, seconds.
    pub intervals_s: Vec<(f64, f64)>,
    /// Additionally cover roughly this fraction of the scene with randomly
    /// placed bursts.
    pub random_fraction: f64,
    /// Duration of each randomly placed burst, seconds.
    pub burst_duration_s: f64,
    /// Burst peak amplitude relative to the median heartbeat peak.
    pub magnitude_factor_range: (f64, f64),
}

impl Default for MovementSpec {
    fn default() -> Self {
        MovementSpec {
            intervals_s: Vec::new(),
            random_fraction: 0.0,
            burst_duration_s: 2.0,
            magnitude_factor_range: (5.0, 10.0),
        }
    }
}

/// Environmental-event injection for a scenario. One deterministic
/// band-limited template is generated per scene and inserted at the given
/// times on every sensor.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct EnvironmentSpec {
    pub template_duration_s: f64,
    /// Template peak amplitude relative to the median heartbeat peak.
    pub amplitude_factor: f64,
    pub at_times_s: Vec<f64>,
    /// Similarity threshold carried into the generated [`EventTemplate`].
    pub similarity_threshold: f64,
}

impl Default for EnvironmentSpec {
    fn default() -> Self {
        EnvironmentSpec {
            template_duration_s: 2.0,
            amplitude_factor: 3.0,
            at_times_s: Vec::new(),
            similarity_threshold: 0.7,
        }
    }
}

/// A posture excursion away from lateral lying.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PostureSpec {
    pub start_s: f64,
    pub end_s: f64,
    pub label: IntervalLabel,
}

/// Full description of one synthetic multi-sensor scene.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioConfig {
    pub pen_id: u32,
    pub duration_s: f64,
    pub sample_rate_hz: f64,
    pub hr_bpm: f64,
    pub rr_bpm: f64,
    pub sensor_distances_m: Vec<f64>,
    /// Sensor noise level as the signal-to-noise ratio measured against the
    /// vital force at the source (distance 0). `None` disables noise.
    pub snr_db: Option<f64>,
    pub morphology: BeatMorphology,
    pub propagation: PropagationModel,
    pub movements: MovementSpec,
    pub environment: Option<EnvironmentSpec>,
    pub postures: Vec<PostureSpec>,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            pen_id: 0,
            duration_s: 600.0,
            sample_rate_hz: 500.0,
            hr_bpm: 98.0,
            rr_bpm: 35.0,
            sensor_distances_m: vec![0.0],
            snr_db: Some(10.0),
            morphology: BeatMorphology::default(),
            propagation: PropagationModel::default(),
            movements: MovementSpec::default(),
            environment: None,
            postures: Vec::new(),
            seed: 0,
        }
    }
}

/// Everything a synthesized scene produces.
#[derive(Debug, Clone)]
pub struct ScenarioOutput {
    pub traces: Vec<VibrationTrace>,
    pub ground_truth: VitalGroundTruth,
    pub layout: SensorLayout,
    /// Templates of the injected environmental events, usable directly for
    /// detection.
    pub templates: Vec<EventTemplate>,
}

fn random_movement_intervals(
    spec: &MovementSpec,
    duration_s: f64,
    rng: &mut ChaCha8Rng,
) -> Vec<(f64, f64)> {
    let mut placed: Vec<(f64, f64)> = spec.intervals_s.clone();
    if spec.random_fraction <= 0.0 || spec.burst_duration_s <= 0.0 {
        return placed;
    }
    let target = spec.random_fraction * duration_s;
    let n_bursts = (target / spec.burst_duration_s).round() as usize;
    for _ in 0..n_bursts {
        for _attempt in 0..200 {
            let start = rng.gen::<f64>() * (duration_s - spec.burst_duration_s).max(0.0);
            let end = start + spec.burst_duration_s;
            let clear = placed
                .iter()
                .all(|&(a, b)| end + 1.0 <= a || start >= b + 1.0);
            if clear {
                placed.push((start, end));
                break;
            }
        }
    }
    placed
}

/// Build the posture timeline: lateral lying everywhere except the
/// configured excursions.
fn build_posture_timeline(postures: &[PostureSpec], duration_s: f64) -> Result<BehaviorTimeline> {
    let mut intervals = Vec::new();
    let spans: Vec<(f64, f64)> = postures.iter().map(|p| (p.start_s, p.end_s)).collect();
    let merged = merge_spans(spans);
    let mut cursor = 0.0;
    for &(a, b) in &merged {
        if a > cursor {
            intervals.push(TimeInterval::new(cursor, a, IntervalLabel::LyingLateral)?);
        }
        cursor = cursor.max(b.min(duration_s));
    }
    if cursor < duration_s {
        intervals.push(TimeInterval::new(cursor, duration_s, IntervalLabel::LyingLateral)?);
    }
    for p in postures {
        intervals.push(TimeInterval::new(p.start_s, p.end_s.min(duration_s), p.label)?);
    }
    BehaviorTimeline::new(intervals, duration_s)
}

/// Compose a full multi-sensor scene: vital force, posture damping,
/// movements, per-sensor propagation, environmental events, and white
/// noise at the configured SNR. Ground truth is shared across sensors.
pub fn synth_scenario(config: &ScenarioConfig) -> Result<ScenarioOutput> {
    if config.duration_s <= 0.0 {
        return Err(Error::invalid("scenario duration must be positive"));
    }
    if config.sensor_distances_m.is_empty() {
        return Err(Error::invalid("at least one sensor distance required"));
    }
    config.propagation.validate()?;

    let fs = config.sample_rate_hz;
    let (vital, mut gt) = synth_vital_force(
        config.hr_bpm,
        config.rr_bpm,
        config.duration_s,
        &config.morphology,
        fs,
        config.seed,
    )?;

    // Vital impulses couple far more weakly outside the lying postures.
    gt.posture_timeline = build_posture_timeline(&config.postures, config.duration_s)?;
    let mut damped = vital.samples.clone();
    for iv in &gt.posture_timeline.intervals {
        if !iv.label.is_lying() {
            let (a, b) = (vital.index_at(iv.start_s), vital.index_at(iv.end_s));
            for s in &mut damped[a..b] {
                *s *= NON_LYING_DAMPING;
            }
        }
    }
    let vital_damped = vital.with_samples(damped);
    let signal_power =
        vital.samples.iter().map(|x| x * x).sum::<f64>() / vital.len() as f64;

    let mut placement_rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(1));
    let movement_spans =
        random_movement_intervals(&config.movements, config.duration_s, &mut placement_rng);
    let movement_intervals: Vec<TimeInterval> = movement_spans
        .iter()
        .map(|&(a, b)| TimeInterval::new(a, b.min(config.duration_s), IntervalLabel::Movement))
        .collect::<Result<_>>()?;
    let (source, mov_intervals) = inject_movements(
        &vital_damped,
        &movement_intervals,
        config.movements.magnitude_factor_range,
        config.seed.wrapping_add(2),
    )?;
    gt.movement_intervals = mov_intervals;

    let mut templates = Vec::new();
    let env_template: Option<Vec<f64>> = config.environment.as_ref().map(|spec| {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(3));
        let n = (spec.template_duration_s * fs).round() as usize;
        let mut t = band_limited_burst(n, fs, (8.0, 45.0), &mut rng);
        let scale = spec.amplitude_factor * median_beat_peak(&vital);
        for v in &mut t {
            *v *= scale;
        }
        t
    });
    if let (Some(spec), Some(t)) = (&config.environment, &env_template) {
        templates.push(EventTemplate::new("env", t.clone(), spec.similarity_threshold)?);
    }

    let mut traces = Vec::with_capacity(config.sensor_distances_m.len());
    let mut sensors = Vec::new();
    for (idx, &d) in config.sensor_distances_m.iter().enumerate() {
        let sensor_id = format!("pen{}_sensor{}", config.pen_id, idx);
        let mut prop = propagate(&source, d, &config.propagation)?;
        if let (Some(spec), Some(t)) = (&config.environment, &env_template) {
            let injected = inject_environment(&prop, t, &spec.at_times_s)?;
            prop = injected.trace;
            if idx == 0 {
                gt.environment_intervals = injected.intervals;
            }
        }
        if let Some(snr_db) = config.snr_db {
            if signal_power > 0.0 {
                let sigma = (signal_power / 10f64.powf(snr_db / 10.0)).sqrt();
                let mut rng =
                    ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(100 + idx as u64));
                for s in &mut prop.samples {
                    *s += sigma * gaussian(&mut rng);
                }
            }
        }
        prop.sensor_id = sensor_id.clone();
        traces.push(prop);
        sensors.push(SensorSite { sensor_id, distance_m: d });
    }

    let layout = SensorLayout {
        sensors,
        alpha_s_per_m: config.propagation.alpha_s_per_m,
        v_min_mps: config.propagation.v_min_mps,
    };
    Ok(ScenarioOutput {
        traces,
        ground_truth: gt,
        layout,
        templates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn default_morph() -> BeatMorphology {
        BeatMorphology::default()
    }

    #[test]
    fn event_counts_match_requested_rates() {
        let (_, gt) =
            synth_vital_force(98.0, 35.0, 60.0, &default_morph(), 500.0, 7).unwrap();
        assert_eq!(gt.heartbeat_times_s.len(), 98);
        assert_eq!(gt.respiration_times_s.len(), 35);
        assert_eq!(gt.per_minute_hr, vec![98.0]);
        assert_eq!(gt.per_minute_rr, vec![35.0]);
    }

    #[test]
    fn zero_heart_rate_yields_flat_trace() {
        let (trace, gt) =
            synth_vital_force(0.0, 35.0, 30.0, &default_morph(), 500.0, 1).unwrap();
        assert!(trace.samples.iter().all(|&s| s == 0.0));
        assert!(gt.heartbeat_times_s.is_empty());
        assert!(gt.respiration_times_s.is_empty());
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let (a, _) = synth_vital_force(90.0, 20.0, 45.0, &default_morph(), 500.0, 42).unwrap();
        let (b, _) = synth_vital_force(90.0, 20.0, 45.0, &default_morph(), 500.0, 42).unwrap();
        assert_eq!(a.samples, b.samples);
    }

    #[test]
    fn negative_rates_rejected() {
        assert!(synth_vital_force(-1.0, 35.0, 60.0, &default_morph(), 500.0, 0).is_err());
        assert!(synth_vital_force(98.0, -0.5, 60.0, &default_morph(), 500.0, 0).is_err());
    }

    #[test]
    fn per_minute_counts_consistent_with_events() {
        let (_, gt) = synth_vital_force(77.0, 22.0, 300.0, &default_morph(), 500.0, 11).unwrap();
        let hr = per_minute_counts(&gt.heartbeat_times_s, 300.0);
        let rr = per_minute_counts(&gt.respiration_times_s, 300.0);
        assert_eq!(gt.per_minute_hr, hr);
        assert_eq!(gt.per_minute_rr, rr);
        assert_eq!(hr.iter().sum::<f64>() as usize, gt.heartbeat_times_s.len());
    }

    #[test]
    fn movement_bursts_respect_magnitude_and_locality() {
        let (vital, _) = synth_vital_force(98.0, 35.0, 60.0, &default_morph(), 500.0, 5).unwrap();
        let reference = median_beat_peak(&vital);
        let iv = TimeInterval::new(20.0, 24.0, IntervalLabel::Movement).unwrap();
        let (out, intervals) = inject_movements(&vital, &[iv], (5.0, 10.0), 9).unwrap();
        assert_eq!(intervals.len(), 1);

        let (a, b) = (vital.index_at(20.0), vital.index_at(24.0));
        let burst_peak = out.samples[a..b]
            .iter()
            .zip(&vital.samples[a..b])
            .map(|(o, i)| (o - i).abs())
            .fold(0.0f64, f64::max);
        assert!(burst_peak >= 5.0 * reference - 1e-9);
        assert!(burst_peak <= 10.0 * reference + 1e-9);

        for i in (0..a).chain(b..vital.len()) {
            assert_eq!(out.samples[i], vital.samples[i]);
        }
    }

    #[test]
    fn empty_movement_list_is_identity() {
        let (vital, _) = synth_vital_force(98.0, 35.0, 20.0, &default_morph(), 500.0, 5).unwrap();
        let (out, intervals) = inject_movements(&vital, &[], (5.0, 10.0), 1).unwrap();
        assert_eq!(out.samples, vital.samples);
        assert!(intervals.is_empty());
    }

    #[test]
    fn overlapping_movement_intervals_are_merged() {
        let (vital, _) = synth_vital_force(98.0, 35.0, 30.0, &default_morph(), 500.0, 5).unwrap();
        let a = TimeInterval::new(5.0, 8.0, IntervalLabel::Movement).unwrap();
        let b = TimeInterval::new(7.0, 10.0, IntervalLabel::Movement).unwrap();
        let (_, intervals) = inject_movements(&vital, &[a, b], (5.0, 10.0), 1).unwrap();
        assert_eq!(intervals.len(), 1);
        assert_eq!(intervals[0].start_s, 5.0);
        assert_eq!(intervals[0].end_s, 10.0);
    }

    #[test]
    fn environment_injection_bookkeeping() {
        let (vital, _) = synth_vital_force(98.0, 35.0, 20.0, &default_morph(), 500.0, 5).unwrap();
        let template = vec![0.5; 500]; // 1 s
        let inj = inject_environment(&vital, &template, &[5.0]).unwrap();
        assert_eq!(inj.intervals.len(), 1);
        assert!((inj.intervals[0].start_s - 5.0).abs() < 1e-9);
        assert!((inj.intervals[0].end_s - 6.0).abs() < 1e-9);
        assert!(!inj.truncated);

        let empty = inject_environment(&vital, &template, &[]).unwrap();
        assert_eq!(empty.trace.samples, vital.samples);

        // Additivity of two insertions.
        let one_a = inject_environment(&vital, &template, &[3.0]).unwrap();
        let both = inject_environment(&vital, &template, &[3.0, 12.0]).unwrap();
        let one_b = inject_environment(&one_a.trace, &template, &[12.0]).unwrap();
        assert_eq!(both.trace.samples, one_b.trace.samples);
    }

    #[test]
    fn environment_injection_truncates_past_end() {
        let (vital, _) = synth_vital_force(98.0, 35.0, 20.0, &default_morph(), 500.0, 5).unwrap();
        let template = vec![0.5; 1000]; // 2 s
        let inj = inject_environment(&vital, &template, &[19.0]).unwrap();
        assert!(inj.truncated);
        assert!((inj.intervals[0].end_s - 20.0).abs() < 1e-9);
    }

    #[test]
    fn propagate_at_zero_distance_is_identity() {
        let (vital, _) = synth_vital_force(98.0, 35.0, 20.0, &default_morph(), 500.0, 5).unwrap();
        let out = propagate(&vital, 0.0, &PropagationModel::default()).unwrap();
        let err: f64 = out
            .samples
            .iter()
            .zip(&vital.samples)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-12, "max abs error {err}");
    }

    #[test]
    fn propagate_attenuates_tone_per_exponential_law() {
        let fs = 500.0;
        let n = 10_000;
        let tone: Vec<f64> = (0..n)
            .map(|i| (2.0 * PI * 50.0 * i as f64 / fs).sin())
            .collect();
        let trace = VibrationTrace::new("t", fs, tone).unwrap();
        let model = PropagationModel::attenuation_only(0.001);
        let out = propagate(&trace, 2.0, &model).unwrap();
        let rms_in: f64 = (trace.samples.iter().map(|x| x * x).sum::<f64>() / n as f64).sqrt();
        let rms_out: f64 = (out.samples.iter().map(|x| x * x).sum::<f64>() / n as f64).sqrt();
        let expected = (-0.001f64 * 50.0 * 2.0).exp(); // ~0.9048
        assert!((rms_out / rms_in - expected).abs() < 0.01 * expected);
    }

    #[test]
    fn dispersion_arrival_spread_matches_velocities() {
        // Spread between slowest and fastest band over 5 m with v in
        // [100, 200] m/s is 5/100 - 5/200 = 0.025 s.
        let model = PropagationModel {
            alpha_s_per_m: 0.0,
            ..PropagationModel::default()
        };
        let d = 5.0;
        let t_low = d / model.velocity_at(model.freq_band_hz.0);
        let t_high = d / model.velocity_at(model.freq_band_hz.1);
        assert!((t_low - t_high - 0.025).abs() < 1e-12);

        // A low-frequency tone arrives later than a high-frequency tone.
        let fs = 500.0;
        let n = 4096;
        let mk = |f: f64| -> VibrationTrace {
            let mut s = vec![0.0; n];
            for (i, v) in s.iter_mut().enumerate() {
                *v = (2.0 * PI * f * i as f64 / fs).sin();
            }
            VibrationTrace::new("t", fs, s).unwrap()
        };
        let lo = propagate(&mk(20.0), d, &model).unwrap();
        // Cross-correlate against the input to find the group delay of the
        // 20 Hz component: expected d/v(20) = 5 / 110 = 0.04545 s.
        let input = mk(20.0);
        let mut best = (0usize, f64::MIN);
        for lag in 0..100 {
            let mut acc = 0.0;
            for i in 0..n - lag {
                acc += input.samples[i] * lo.samples[i + lag];
            }
            if acc > best.1 {
                best = (lag, acc);
            }
        }
        let expected_delay = d / model.velocity_at(20.0);
        assert!(
            ((best.0 as f64 / fs) - expected_delay).abs() < 2.0 / fs,
            "lag {} vs expected {expected_delay}",
            best.0
        );
    }

    #[test]
    fn propagate_is_linear() {
        let (x, _) = synth_vital_force(98.0, 35.0, 10.0, &default_morph(), 500.0, 3).unwrap();
        let (y, _) = synth_vital_force(60.0, 20.0, 10.0, &default_morph(), 500.0, 4).unwrap();
        let model = PropagationModel::default();
        let combo_samples: Vec<f64> = x
            .samples
            .iter()
            .zip(&y.samples)
            .map(|(a, b)| 2.0 * a - 3.0 * b)
            .collect();
        let combo = x.with_samples(combo_samples);
        let lhs = propagate(&combo, 1.5, &model).unwrap();
        let px = propagate(&x, 1.5, &model).unwrap();
        let py = propagate(&y, 1.5, &model).unwrap();
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..lhs.len() {
            let rhs = 2.0 * px.samples[i] - 3.0 * py.samples[i];
            num += (lhs.samples[i] - rhs).powi(2);
            den += rhs.powi(2);
        }
        assert!((num / den).sqrt() < 1e-9);
    }

    #[test]
    fn scenario_produces_shared_ground_truth() {
        let config = ScenarioConfig {
            duration_s: 120.0,
            sensor_distances_m: vec![0.0, 1.0, 2.0],
            snr_db: Some(20.0),
            seed: 13,
            ..ScenarioConfig::default()
        };
        let out = synth_scenario(&config).unwrap();
        assert_eq!(out.traces.len(), 3);
        assert_eq!(out.layout.sensors.len(), 3);
        assert_eq!(out.ground_truth.heartbeat_times_s.len(), 196);
        for t in &out.traces {
            assert_eq!(t.len(), 60_000);
        }
        assert_eq!(out.traces[0].sensor_id, "pen0_sensor0");
    }

    #[test]
    fn noiseless_zero_distance_scenario_equals_vital_force() {
        let config = ScenarioConfig {
            duration_s: 60.0,
            sensor_distances_m: vec![0.0],
            snr_db: None,
            seed: 21,
            ..ScenarioConfig::default()
        };
        let out = synth_scenario(&config).unwrap();
        let (vital, _) =
            synth_vital_force(98.0, 35.0, 60.0, &BeatMorphology::default(), 500.0, 21).unwrap();
        let max_err = out.traces[0]
            .samples
            .iter()
            .zip(&vital.samples)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        assert!(max_err < 1e-12);
    }

    #[test]
    fn scenario_is_deterministic() {
        let config = ScenarioConfig {
            duration_s: 60.0,
            sensor_distances_m: vec![0.0, 1.0],
            movements: MovementSpec {
                random_fraction: 0.1,
                ..MovementSpec::default()
            },
            seed: 99,
            ..ScenarioConfig::default()
        };
        let a = synth_scenario(&config).unwrap();
        let b = synth_scenario(&config).unwrap();
        for (ta, tb) in a.traces.iter().zip(&b.traces) {
            assert_eq!(ta.samples, tb.samples);
        }
    }

    #[test]
    fn scenario_rejects_bad_inputs() {
        let bad_duration = ScenarioConfig {
            duration_s: 0.0,
            ..ScenarioConfig::default()
        };
        assert!(synth_scenario(&bad_duration).is_err());
        let no_sensors = ScenarioConfig {
            sensor_distances_m: Vec::new(),
            ..ScenarioConfig::default()
        };
        assert!(synth_scenario(&no_sensors).is_err());
    }
}
