//! End-to-end orchestration per pen: pre-processing, behavior compensation,
//! rate estimation, gap interpolation, and multi-sensor fusion, plus the
//! evaluation metrics used to score results against ground truth.

use serde::{Deserialize, Serialize};

use crate::behavior::{
    build_movement_reference, correct_attenuation, detect_movements, mitigate_dispersion,
    non_lying_spans, SensorLayout, DEFAULT_MAX_GAIN,
};
use crate::error::{Error, Result};
use crate::fusion::{check_liveness, fuse_series, interpolate_gaps};
use crate::preprocess::{
    band_magnitude_sum, cwt_morse, detect_environmental_events, lowpass_filter, wiener_denoise,
    EventTemplate, MorseParams,
};
use crate::synth::VitalGroundTruth;
use crate::trace::{BehaviorTimeline, IntervalLabel, TimeInterval, VibrationTrace};
use crate::vitals::{
    detect_heartbeats, detect_respiration, rate_series, VitalSeries, HR_MEASURED_RANGE,
    RR_MEASURED_RANGE,
};

/// Every tunable of the analysis chain.
#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub wiener_window_samples: usize,
    pub lowpass_cutoff_hz: f64,
    pub morse: MorseParams,
    /// Band summed into the detection function; 10-100 Hz covers
    /// heartbeat-induced vibrations above the sensor sensitivity floor.
    pub heartbeat_band_hz: (f64, f64),
    pub hr_min_separation_s: f64,
    pub rr_min_separation_s: f64,
    pub rr_moving_sum_s: f64,
    pub prominence_frac: f64,
    pub attenuation_max_gain: f64,
    /// Detection-round length; also the rate window (per-minute rates).
    pub t_round_s: f64,
    /// Lying-still span used as the movement baseline. `None` picks the
    /// quietest 10 s stretch automatically.
    pub movement_reference_s: Option<(f64, f64)>,
    pub templates: Vec<EventTemplate>,
    pub layout: SensorLayout,
    /// Behavior compensation: posture gating, movement removal, attenuation
    /// correction, dispersion mitigation, and gap interpolation. Disabled
    /// for ablation baselines.
    pub compensation: bool,
    /// Template-based environmental-event removal.
    pub environmental_removal: bool,
}

impl PipelineConfig {
    pub fn for_layout(layout: SensorLayout) -> Self {
        PipelineConfig {
            wiener_window_samples: 51,
            lowpass_cutoff_hz: 200.0,
            morse: MorseParams::default(),
            heartbeat_band_hz: (10.0, 100.0),
            hr_min_separation_s: 0.5,
            rr_min_separation_s: 1.0,
            rr_moving_sum_s: 1.0,
            prominence_frac: 0.25,
            attenuation_max_gain: DEFAULT_MAX_GAIN,
            t_round_s: 60.0,
            movement_reference_s: None,
            templates: Vec::new(),
            layout,
            compensation: true,
            environmental_removal: true,
        }
    }
}

/// Per-sensor processing report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SensorReport {
    pub sensor_id: String,
    pub active: bool,
    /// Everything excluded from rate counting, labeled by cause.
    pub removed_intervals: Vec<TimeInterval>,
    pub movement_reference_s: Option<(f64, f64)>,
    pub gain_capped: bool,
    pub interpolation_fallback: bool,
    pub interpolated_minutes: Vec<usize>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Diagnostics {
    pub sensors: Vec<SensorReport>,
    pub warnings: Vec<String>,
}

/// Pipeline result: per-sensor series, the fused series (absent when no
/// sensor was usable), and diagnostics.
#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub per_sensor: Vec<VitalSeries>,
    pub fused: Option<VitalSeries>,
    pub diagnostics: Diagnostics,
}

/// Automatic lying-still reference selection when none is configured.
///
/// The reference must be *representative* of quiet lying, not the globally
/// quietest stretch: picking the minimum would underestimate the baseline
/// statistics and flag the ordinary loud half of the respiration cycle as
/// movement. Candidate spans (30 s where available, 10 s minimum) must be
/// free of outlier seconds — judged against the per-second median and MAD —
/// and the span whose mean sits closest to the median wins. If every span
/// contains outliers the quietest span is used instead.
fn auto_reference_span(trace: &VibrationTrace) -> Option<(f64, f64)> {
    let fs = trace.sample_rate_hz;
    let win = fs.round() as usize;
    let stats: Vec<f64> = trace
        .samples
        .chunks_exact(win)
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>() / win as f64)
        .collect();
    if stats.len() < 10 {
        return None;
    }
    let span = 30usize.min(stats.len());

    let mut sorted = stats.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let med = sorted[sorted.len() / 2];
    let mut deviations: Vec<f64> = stats.iter().map(|s| (s - med).abs()).collect();
    deviations.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mad = deviations[deviations.len() / 2];
    let tolerance = (5.0 * 1.4826 * mad).max(0.5 * med).max(1e-12);

    let mut best: Option<(usize, f64)> = None;
    for k in 0..=stats.len() - span {
        let candidate = &stats[k..k + span];
        if candidate.iter().any(|&s| (s - med).abs() > tolerance) {
            continue;
        }
        let mean = candidate.iter().sum::<f64>() / span as f64;
        let score = (mean - med).abs();
        if best.is_none_or(|(_, b)| score < b) {
            best = Some((k, score));
        }
    }
    if let Some((k, _)) = best {
        return Some((k as f64, (k + span) as f64));
    }

    // Every span holds outliers (heavy movement); fall back to the span
    // with the smallest peak statistic.
    let mut quietest = (0usize, f64::MAX);
    for k in 0..=stats.len() - span {
        let peak = stats[k..k + span].iter().cloned().fold(0.0f64, f64::max);
        if peak < quietest.1 {
            quietest = (k, peak);
        }
    }
    Some((quietest.0 as f64, (quietest.0 + span) as f64))
}

fn median_interval(event_times_s: &[f64]) -> Option<f64> {
    if event_times_s.len() < 2 {
        return None;
    }
    let mut gaps: Vec<f64> = event_times_s.windows(2).map(|w| w[1] - w[0]).collect();
    gaps.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Some(gaps[gaps.len() / 2])
}

struct SensorOutcome {
    series: VitalSeries,
    report: SensorReport,
}

fn process_sensor(
    trace: &VibrationTrace,
    timeline: &BehaviorTimeline,
    distance_m: f64,
    config: &PipelineConfig,
    warnings: &mut Vec<String>,
) -> Result<SensorOutcome> {
    let fs = trace.sample_rate_hz;
    let mut report = SensorReport {
        sensor_id: trace.sensor_id.clone(),
        active: true,
        removed_intervals: Vec::new(),
        movement_reference_s: None,
        gain_capped: false,
        interpolation_fallback: false,
        interpolated_minutes: Vec::new(),
    };

    let denoised = wiener_denoise(trace, config.wiener_window_samples)?;
    let filtered = lowpass_filter(&denoised, config.lowpass_cutoff_hz)?;

    let mut removed: Vec<TimeInterval> = Vec::new();
    if config.environmental_removal && !config.templates.is_empty() {
        removed.extend(detect_environmental_events(&filtered, &config.templates)?);
    }

    let analysis = if config.compensation {
        // Posture gating: only lying intervals carry vital information;
        // unannotated time counts as non-lying.
        for (a, b) in non_lying_spans(timeline) {
            removed.push(TimeInterval {
                start_s: a,
                end_s: b,
                label: IntervalLabel::Standing,
            });
        }

        let ref_span = config
            .movement_reference_s
            .or_else(|| auto_reference_span(&filtered));
        match ref_span {
            Some((a, b)) => {
                report.movement_reference_s = Some((a, b));
                let iv = TimeInterval::new(a, b, IntervalLabel::LyingLateral)?;
                let reference = build_movement_reference(&filtered, &iv)?;
                removed.extend(detect_movements(&filtered, &reference));
            }
            None => warnings.push(format!(
                "{}: trace too short for a movement reference; movement detection skipped",
                trace.sensor_id
            )),
        }

        let corrected = correct_attenuation(
            &filtered,
            distance_m,
            config.layout.alpha_s_per_m,
            config.attenuation_max_gain,
        )?;
        report.gain_capped = corrected.gain_capped;
        corrected.trace
    } else {
        filtered
    };

    let band = config.heartbeat_band_hz;
    let spectrum = cwt_morse(&analysis, band.0, band.1, &config.morse)?;
    let mut detection = band_magnitude_sum(&spectrum, band.0, band.1)?;
    drop(spectrum);
    if config.compensation {
        detection = mitigate_dispersion(&detection, distance_m, config.layout.v_min_mps, fs);
    }

    let beats = detect_heartbeats(
        &detection,
        fs,
        config.hr_min_separation_s,
        config.prominence_frac,
    );
    // Respiration rides on the energy trend of the heartbeat impulses, so
    // the moving sum integrates exactly one beat period: that nulls the
    // beat-frequency ripple at any heart rate while keeping the envelope.
    // Without usable beats the configured window is used as-is.
    let rr_window = median_interval(&beats)
        .map(|ibi| ibi.clamp(0.3, 1.5))
        .unwrap_or(config.rr_moving_sum_s);
    let breaths = detect_respiration(
        &detection,
        fs,
        rr_window,
        config.rr_min_separation_s,
        config.prominence_frac,
    );

    let duration = trace.duration_s();
    let hr = rate_series(&beats, duration, config.t_round_s, &removed, HR_MEASURED_RANGE);
    let rr = rate_series(&breaths, duration, config.t_round_s, &removed, RR_MEASURED_RANGE);
    let mut series = VitalSeries::from_rates(trace.sensor_id.clone(), &hr, &rr);

    if config.compensation {
        let invalid = series.invalid_minutes();
        report.interpolated_minutes = invalid.iter().copied().collect();
        let filled = interpolate_gaps(&series, &invalid);
        report.interpolation_fallback = filled.fallback_used;
        series = filled.series;
    }

    report.removed_intervals = removed;
    Ok(SensorOutcome { series, report })
}

/// Run the full chain over all sensors of one pen and fuse the results.
/// Identical inputs and config always produce identical outputs; the
/// analysis path holds no hidden randomness.
pub fn run_pipeline(
    traces: &[VibrationTrace],
    timeline: &BehaviorTimeline,
    config: &PipelineConfig,
) -> Result<PipelineOutput> {
    if traces.is_empty() {
        return Err(Error::data("no traces to analyze"));
    }
    config.layout.validate()?;
    let fs = traces[0].sample_rate_hz;
    for t in traces {
        if (t.sample_rate_hz - fs).abs() > 1e-9 {
            return Err(Error::data(format!(
                "sensor {} sample rate {} differs from {}",
                t.sensor_id, t.sample_rate_hz, fs
            )));
        }
    }
    let max_duration = traces.iter().map(|t| t.duration_s()).fold(0.0, f64::max);
    if (timeline.total_duration_s - max_duration).abs() > 1.0 {
        return Err(Error::data(format!(
            "behavior timeline covers {} s but traces span {} s",
            timeline.total_duration_s, max_duration
        )));
    }

    let mut diagnostics = Diagnostics::default();
    let active = check_liveness(traces, fs);

    let mut per_sensor = Vec::new();
    for trace in traces {
        if !active.contains(&trace.sensor_id) {
            diagnostics.sensors.push(SensorReport {
                sensor_id: trace.sensor_id.clone(),
                active: false,
                removed_intervals: Vec::new(),
                movement_reference_s: None,
                gain_capped: false,
                interpolation_fallback: false,
                interpolated_minutes: Vec::new(),
            });
            diagnostics
                .warnings
                .push(format!("{}: inactive (flatlined or under-delivering)", trace.sensor_id));
            continue;
        }
        let distance = config
            .layout
            .distance_of(&trace.sensor_id)
            .ok_or_else(|| {
                Error::data(format!("sensor {} missing from layout", trace.sensor_id))
            })?;
        let outcome =
            process_sensor(trace, timeline, distance, config, &mut diagnostics.warnings)?;
        per_sensor.push(outcome.series);
        diagnostics.sensors.push(outcome.report);
    }

    let fused = if per_sensor.is_empty() {
        diagnostics
            .warnings
            .push("no active sensors over the whole run; no estimate".to_string());
        None
    } else {
        Some(fuse_series(&per_sensor, &config.layout, config.t_round_s)?)
    };

    Ok(PipelineOutput {
        per_sensor,
        fused,
        diagnostics,
    })
}

/// Per-minute estimation errors against ground truth.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MinuteError {
    pub minute: usize,
    pub hr_est: Option<f64>,
    pub hr_true: f64,
    pub rr_est: Option<f64>,
    pub rr_true: f64,
}

/// MAPE/MAE summary of one series against ground truth.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Metrics {
    /// Mean of |est - true| / true over minutes with true > 0.
    pub hr_mape: f64,
    pub rr_mape: f64,
    /// Mean absolute error, events/min.
    pub hr_mae: f64,
    pub rr_mae: f64,
    pub minutes_compared: usize,
    pub minutes_missing: usize,
    pub per_minute: Vec<MinuteError>,
}

fn summarize(pairs: &[(f64, f64)]) -> (f64, f64) {
    if pairs.is_empty() {
        return (0.0, 0.0);
    }
    let mae = pairs.iter().map(|(e, t)| (e - t).abs()).sum::<f64>() / pairs.len() as f64;
    let positive: Vec<&(f64, f64)> = pairs.iter().filter(|(_, t)| *t > 0.0).collect();
    let mape = if positive.is_empty() {
        0.0
    } else {
        positive.iter().map(|(e, t)| (e - t).abs() / t).sum::<f64>() / positive.len() as f64
    };
    (mape, mae)
}

/// Score an estimated series against scene ground truth on the shared
/// minute grid. Errors out when the grids do not overlap at all.
pub fn compute_metrics(estimated: &VitalSeries, truth: &VitalGroundTruth) -> Result<Metrics> {
    let truth_minutes = truth.per_minute_hr.len().min(truth.per_minute_rr.len());
    let mut hr_pairs = Vec::new();
    let mut rr_pairs = Vec::new();
    let mut per_minute = Vec::new();
    let mut missing = 0usize;
    for (k, &m) in estimated.minute_index.iter().enumerate() {
        if m >= truth_minutes {
            continue;
        }
        let hr_true = truth.per_minute_hr[m];
        let rr_true = truth.per_minute_rr[m];
        match estimated.hr_bpm[k] {
            Some(e) => hr_pairs.push((e, hr_true)),
            None => missing += 1,
        }
        if let Some(e) = estimated.rr_bpm[k] {
            rr_pairs.push((e, rr_true));
        }
        per_minute.push(MinuteError {
            minute: m,
            hr_est: estimated.hr_bpm[k],
            hr_true,
            rr_est: estimated.rr_bpm[k],
            rr_true,
        });
    }
    if per_minute.is_empty() {
        return Err(Error::invalid("estimated series does not overlap the ground-truth minutes"));
    }
    let (hr_mape, hr_mae) = summarize(&hr_pairs);
    let (rr_mape, rr_mae) = summarize(&rr_pairs);
    Ok(Metrics {
        hr_mape,
        rr_mape,
        hr_mae,
        rr_mae,
        minutes_compared: per_minute.len(),
        minutes_missing: missing,
        per_minute,
    })
}
