//! Tidy CSV output of per-sensor and fused vital series. Fixed column
//! order, decimal points regardless of locale, empty cells for missing
//! estimates.

use std::path::Path;

use crate::behavior::SensorLayout;
use crate::error::Result;
use crate::fusion::raw_weight;
use crate::vitals::VitalSeries;

const HEADER: &str = "minute_index,sensor_id,hr_bpm,rr_bpm,interpolated_fraction,weight";

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.3}")).unwrap_or_default()
}

/// Write all series (sensors first, fused last) as one tidy CSV. The
/// weight column holds each sensor's per-minute raw fusion weight; fused
/// rows carry weight 1.
pub fn write_series_csv(
    path: &Path,
    per_sensor: &[VitalSeries],
    fused: Option<&VitalSeries>,
    layout: &SensorLayout,
    t_round_s: f64,
) -> Result<()> {
    let mut text = String::from(HEADER);
    text.push('\n');
    for series in per_sensor {
        let distance = layout.distance_of(&series.sensor_id).unwrap_or(0.0);
        for (k, &minute) in series.minute_index.iter().enumerate() {
            let t_int = series.interpolated_fraction[k].clamp(0.0, 1.0) * t_round_s;
            let weight = raw_weight(t_int, distance, t_round_s);
            text.push_str(&format!(
                "{},{},{},{},{:.3},{:.6}\n",
                minute,
                series.sensor_id,
                fmt_opt(series.hr_bpm[k]),
                fmt_opt(series.rr_bpm[k]),
                series.interpolated_fraction[k],
                weight
            ));
        }
    }
    if let Some(f) = fused {
        for (k, &minute) in f.minute_index.iter().enumerate() {
            text.push_str(&format!(
                "{},{},{},{},{:.3},{:.6}\n",
                minute,
                f.sensor_id,
                fmt_opt(f.hr_bpm[k]),
                fmt_opt(f.rr_bpm[k]),
                f.interpolated_fraction[k],
                1.0
            ));
        }
    }
    super::atomic_write(path, text.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::behavior::SensorSite;

    #[test]
    fn csv_has_fixed_schema_and_fused_rows() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("vitals.csv");
        let series = VitalSeries {
            sensor_id: "pen0_sensor0".into(),
            minute_index: vec![0, 1],
            hr_bpm: vec![Some(98.0), None],
            rr_bpm: vec![Some(35.0), Some(34.0)],
            hr_measured: vec![true, false],
            rr_measured: vec![true, true],
            interpolated_fraction: vec![0.0, 1.0],
        };
        let fused = VitalSeries {
            sensor_id: "fused".into(),
            ..series.clone()
        };
        let layout = SensorLayout {
            sensors: vec![SensorSite {
                sensor_id: "pen0_sensor0".into(),
                distance_m: 1.0,
            }],
            alpha_s_per_m: 0.001,
            v_min_mps: 100.0,
        };
        write_series_csv(&path, &[series], Some(&fused), &layout, 60.0).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], HEADER);
        assert_eq!(lines.len(), 5);
        assert!(lines[1].starts_with("0,pen0_sensor0,98.000,35.000,0.000,"));
        // Missing HR estimate leaves an empty cell.
        assert!(lines[2].starts_with("1,pen0_sensor0,,34.000,1.000,"));
        assert!(lines[3].starts_with("0,fused,"));
    }
}
