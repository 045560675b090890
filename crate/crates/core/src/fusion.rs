//! Gap interpolation and adaptive multi-sensor fusion.
//!
//! Minutes removed for movement or posture are filled per sensor with a
//! natural cubic spline (posture changes drive HR up sharply and let it
//! decay slowly; a spline tracks that shape better than a line). Sensors
//! are then combined by a weighted average: closer sensors see more vital
//! energy but also need more interpolation, so the weight
//! `w = ((T - t_int) / T) * exp(-d)` discounts both interpolation time and
//! distance before per-minute normalization.

use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

use crate::behavior::SensorLayout;
use crate::error::{Error, Result};
use crate::trace::VibrationTrace;
use crate::vitals::{VitalSeries, HR_CLAMP, RR_CLAMP};

/// Variance below which a trace counts as flatlined.
const FLATLINE_VARIANCE: f64 = 1e-12;
/// Minimum delivered-sample fraction for a sensor to count as active.
const LIVENESS_MIN_FRACTION: f64 = 0.95;

/// Sensors healthy enough to analyze: a sensor is active when it delivered
/// at least 95% of the samples expected over the longest trace in the set
/// and its amplitude is not flatlined.
pub fn check_liveness(traces: &[VibrationTrace], expected_rate_hz: f64) -> BTreeSet<String> {
    let reference_s = traces.iter().map(|t| t.duration_s()).fold(0.0, f64::max);
    let expected = expected_rate_hz * reference_s;
    traces
        .iter()
        .filter(|t| {
            if expected > 0.0 && (t.len() as f64) < LIVENESS_MIN_FRACTION * expected {
                return false;
            }
            let mean = t.samples.iter().sum::<f64>() / t.len() as f64;
            let var =
                t.samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / t.len() as f64;
            var > FLATLINE_VARIANCE
        })
        .map(|t| t.sensor_id.clone())
        .collect()
}

/// Natural cubic spline (second derivative zero at both ends) through
/// strictly increasing knots.
#[derive(Debug, Clone)]
pub struct NaturalSpline {
    xs: Vec<f64>,
    ys: Vec<f64>,
    second_derivs: Vec<f64>,
}

impl NaturalSpline {
    pub fn fit(xs: &[f64], ys: &[f64]) -> Result<Self> {
        let n = xs.len();
        if n < 2 || ys.len() != n {
            return Err(Error::invalid("spline needs at least two knots"));
        }
        for pair in xs.windows(2) {
            if pair[1] <= pair[0] {
                return Err(Error::invalid("spline knots must be strictly increasing"));
            }
        }
        let mut m = vec![0.0; n];
        if n > 2 {
            // Thomas algorithm on the tridiagonal system for the interior
            // second derivatives, with natural boundaries M_0 = M_{n-1} = 0.
            let k = n - 2;
            let mut diag = vec![0.0; k];
            let mut upper = vec![0.0; k];
            let mut lower = vec![0.0; k];
            let mut rhs = vec![0.0; k];
            for i in 0..k {
                let h0 = xs[i + 1] - xs[i];
                let h1 = xs[i + 2] - xs[i + 1];
                lower[i] = h0;
                diag[i] = 2.0 * (h0 + h1);
                upper[i] = h1;
                rhs[i] = 6.0 * ((ys[i + 2] - ys[i + 1]) / h1 - (ys[i + 1] - ys[i]) / h0);
            }
            for i in 1..k {
                let w = lower[i] / diag[i - 1];
                diag[i] -= w * upper[i - 1];
                rhs[i] -= w * rhs[i - 1];
            }
            m[k] = rhs[k - 1] / diag[k - 1];
            for i in (1..k).rev() {
                m[i] = (rhs[i - 1] - upper[i - 1] * m[i + 1]) / diag[i - 1];
            }
        }
        Ok(NaturalSpline {
            xs: xs.to_vec(),
            ys: ys.to_vec(),
            second_derivs: m,
        })
    }

    /// Evaluate at `t`, clamped to the knot range (constant extension
    /// outside it).
    pub fn eval(&self, t: f64) -> f64 {
        let n = self.xs.len();
        let t = t.clamp(self.xs[0], self.xs[n - 1]);
        let mut i = match self
            .xs
            .binary_search_by(|x| x.partial_cmp(&t).unwrap())
        {
            Ok(i) => i,
            Err(i) => i.saturating_sub(1),
        };
        if i >= n - 1 {
            i = n - 2;
        }
        let h = self.xs[i + 1] - self.xs[i];
        let a = (self.xs[i + 1] - t) / h;
        let b = (t - self.xs[i]) / h;
        a * self.ys[i]
            + b * self.ys[i + 1]
            + ((a * a * a - a) * self.second_derivs[i]
                + (b * b * b - b) * self.second_derivs[i + 1])
                * h
                * h
                / 6.0
    }
}

/// Fill the minutes listed in `invalid` of one scalar per-minute series,
/// leaving every other minute untouched.
///
/// With two or more valid knots a natural cubic spline through them is
/// evaluated at the gaps and clamped to `clamp`; with fewer, gaps take the
/// nearest valid value (quality-flagged via the returned `fallback_used`).
pub fn fill_gaps(
    minute_index: &[usize],
    values: &[Option<f64>],
    invalid: &BTreeSet<usize>,
    clamp: (f64, f64),
) -> (Vec<Option<f64>>, bool) {
    let knots: Vec<(f64, f64)> = minute_index
        .iter()
        .zip(values)
        .filter(|(m, v)| !invalid.contains(m) && v.is_some())
        .map(|(&m, v)| (m as f64, v.unwrap()))
        .collect();
    let mut out = values.to_vec();

    if knots.len() >= 2 {
        let xs: Vec<f64> = knots.iter().map(|k| k.0).collect();
        let ys: Vec<f64> = knots.iter().map(|k| k.1).collect();
        let spline = NaturalSpline::fit(&xs, &ys).expect("knots are strictly increasing");
        for (k, &m) in minute_index.iter().enumerate() {
            if invalid.contains(&m) || values[k].is_none() {
                out[k] = Some(spline.eval(m as f64).clamp(clamp.0, clamp.1));
            }
        }
        (out, false)
    } else if knots.len() == 1 {
        let v = knots[0].1.clamp(clamp.0, clamp.1);
        for (k, &m) in minute_index.iter().enumerate() {
            if invalid.contains(&m) || values[k].is_none() {
                out[k] = Some(v);
            }
        }
        (out, true)
    } else {
        (out, true)
    }
}

/// Outcome of per-sensor gap interpolation.
#[derive(Debug, Clone)]
pub struct GapFilled {
    pub series: VitalSeries,
    /// Set when fewer than two valid knots forced nearest-value filling.
    pub fallback_used: bool,
}

/// Spline-fill the invalid minutes of both signals of a sensor series.
/// Valid knot minutes are never modified; filled minutes get an
/// interpolated fraction of 1.
pub fn interpolate_gaps(series: &VitalSeries, invalid_minutes: &BTreeSet<usize>) -> GapFilled {
    let (hr, hr_fallback) = fill_gaps(
        &series.minute_index,
        &series.hr_bpm,
        invalid_minutes,
        HR_CLAMP,
    );
    let (rr, rr_fallback) = fill_gaps(
        &series.minute_index,
        &series.rr_bpm,
        invalid_minutes,
        RR_CLAMP,
    );
    let mut out = series.clone();
    out.hr_bpm = hr;
    out.rr_bpm = rr;
    for (k, &m) in series.minute_index.iter().enumerate() {
        if invalid_minutes.contains(&m) {
            out.interpolated_fraction[k] = 1.0;
            out.hr_measured[k] = false;
            out.rr_measured[k] = false;
        }
    }
    GapFilled {
        series: out,
        fallback_used: hr_fallback || rr_fallback,
    }
}

/// Raw fusion weight `((T - t_int) / T) * exp(-d)`.
pub fn raw_weight(t_int_s: f64, distance_m: f64, t_round_s: f64) -> f64 {
    ((t_round_s - t_int_s) / t_round_s) * (-distance_m).exp()
}

/// One sensor's weight inputs and raw weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorWeight {
    pub sensor_id: String,
    pub t_int_s: f64,
    pub distance_m: f64,
    pub weight: f64,
}

/// Raw per-sensor weights for one detection round of `t_round_s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusionWeights {
    pub entries: Vec<SensorWeight>,
    pub t_round_s: f64,
}

/// Compute raw weights from per-sensor interpolation durations and
/// distances. Normalization over the active set happens per minute during
/// fusion.
pub fn compute_weights(
    sensors: &[(String, f64, f64)],
    t_round_s: f64,
) -> Result<FusionWeights> {
    if t_round_s <= 0.0 {
        return Err(Error::invalid("t_round_s must be positive"));
    }
    let mut entries = Vec::with_capacity(sensors.len());
    for (sensor_id, t_int_s, distance_m) in sensors {
        if !(0.0..=t_round_s).contains(t_int_s) {
            return Err(Error::invalid(format!(
                "t_int {t_int_s} outside [0, {t_round_s}]"
            )));
        }
        if *distance_m < 0.0 {
            return Err(Error::invalid("distance must be >= 0"));
        }
        entries.push(SensorWeight {
            sensor_id: sensor_id.clone(),
            t_int_s: *t_int_s,
            distance_m: *distance_m,
            weight: raw_weight(*t_int_s, *distance_m, t_round_s),
        });
    }
    Ok(FusionWeights { entries, t_round_s })
}

fn fuse_one_minute(
    values: &[(f64, f64)], // (value, raw weight)
) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let wsum: f64 = values.iter().map(|(_, w)| w).sum();
    if wsum > 0.0 {
        Some(values.iter().map(|(v, w)| v * w).sum::<f64>() / wsum)
    } else {
        // All raw weights zero: fall back to the unweighted mean of the
        // available (interpolated) values.
        Some(values.iter().map(|(v, _)| v).sum::<f64>() / values.len() as f64)
    }
}

/// Weighted per-minute average across sensors, recomputing the raw
/// weights from each minute's interpolation duration. Minutes with no
/// contributing sensor come out as `None`.
pub fn fuse_series(
    per_sensor: &[VitalSeries],
    layout: &SensorLayout,
    t_round_s: f64,
) -> Result<VitalSeries> {
    if per_sensor.is_empty() {
        return Err(Error::invalid("nothing to fuse"));
    }
    let minutes = per_sensor[0].minute_index.clone();
    for s in per_sensor.iter().skip(1) {
        if s.minute_index != minutes {
            return Err(Error::invalid("per-sensor series must share the minute grid"));
        }
    }
    let distances: Vec<f64> = per_sensor
        .iter()
        .map(|s| {
            layout
                .distance_of(&s.sensor_id)
                .ok_or_else(|| Error::data(format!("sensor {} missing from layout", s.sensor_id)))
        })
        .collect::<Result<_>>()?;

    let n = minutes.len();
    let mut fused = VitalSeries {
        sensor_id: "fused".to_string(),
        minute_index: minutes,
        hr_bpm: vec![None; n],
        rr_bpm: vec![None; n],
        hr_measured: vec![false; n],
        rr_measured: vec![false; n],
        interpolated_fraction: vec![1.0; n],
    };

    for k in 0..n {
        let mut hr_vals = Vec::new();
        let mut rr_vals = Vec::new();
        let mut frac_acc = 0.0;
        let mut w_acc = 0.0;
        for (s, &d) in per_sensor.iter().zip(&distances) {
            let t_int = (s.interpolated_fraction[k].clamp(0.0, 1.0)) * t_round_s;
            let w = raw_weight(t_int, d, t_round_s);
            if let Some(v) = s.hr_bpm[k] {
                hr_vals.push((v, w));
            }
            if let Some(v) = s.rr_bpm[k] {
                rr_vals.push((v, w));
            }
            if s.hr_bpm[k].is_some() || s.rr_bpm[k].is_some() {
                frac_acc += w * s.interpolated_fraction[k];
                w_acc += w;
            }
            if s.hr_measured[k] {
                fused.hr_measured[k] = true;
            }
            if s.rr_measured[k] {
                fused.rr_measured[k] = true;
            }
        }
        fused.hr_bpm[k] = fuse_one_minute(&hr_vals);
        fused.rr_bpm[k] = fuse_one_minute(&rr_vals);
        if w_acc > 0.0 {
            fused.interpolated_fraction[k] = frac_acc / w_acc;
        }
    }
    Ok(fused)
}
