//! Gap interpolation and multi-sensor fusion on per-minute series: invalid
//! minutes are spline-filled per sensor, then sensors are combined with
//! weights w = ((T - t_int)/T) * exp(-d) normalized per minute.
//!
//! ```bash
//! cargo run --example gap_interpolation_fusion
//! ```

use std::collections::BTreeSet;

use vibrovitals::behavior::{SensorLayout, SensorSite};
use vibrovitals::fusion::{fuse_series, interpolate_gaps, raw_weight};
use vibrovitals::vitals::VitalSeries;

fn series(id: &str, hr: Vec<Option<f64>>, frac: Vec<f64>) -> VitalSeries {
    let n = hr.len();
    VitalSeries {
        sensor_id: id.to_string(),
        minute_index: (0..n).collect(),
        rr_bpm: vec![Some(35.0); n],
        rr_measured: vec![true; n],
        hr_measured: hr.iter().map(|v| v.is_some()).collect(),
        hr_bpm: hr,
        interpolated_fraction: frac,
    }
}

fn main() -> vibrovitals::Result<()> {
    // Sensor right under the animal: good values but a movement knocked
    // out minutes 2-3. Farther sensors keep measuring.
    let near = series(
        "near",
        vec![Some(96.0), Some(99.0), None, None, Some(97.0), Some(98.0)],
        vec![0.05, 0.10, 1.0, 1.0, 0.05, 0.0],
    );
    let mid = series(
        "mid",
        vec![Some(95.0), Some(97.0), Some(101.0), Some(100.0), Some(96.0), Some(99.0)],
        vec![0.0; 6],
    );
    let far = series(
        "far",
        vec![Some(92.0), Some(103.0), Some(104.0), Some(95.0), Some(93.0), Some(101.0)],
        vec![0.0; 6],
    );

    let invalid: BTreeSet<usize> = near.invalid_minutes();
    println!("near sensor invalid minutes: {invalid:?}");
    let filled = interpolate_gaps(&near, &invalid);
    println!("after spline fill:");
    for (k, v) in filled.series.hr_bpm.iter().enumerate() {
        println!(
            "  minute {k}: {:6.2} bpm ({})",
            v.unwrap(),
            if filled.series.hr_measured[k] { "measured" } else { "interpolated" }
        );
    }

    let layout = SensorLayout {
        sensors: vec![
            SensorSite { sensor_id: "near".into(), distance_m: 0.0 },
            SensorSite { sensor_id: "mid".into(), distance_m: 1.0 },
            SensorSite { sensor_id: "far".into(), distance_m: 2.0 },
        ],
        alpha_s_per_m: 0.02,
        v_min_mps: 100.0,
    };
    println!("\nraw weights at t_int = 0: near {:.3}, mid {:.3}, far {:.3}",
        raw_weight(0.0, 0.0, 60.0), raw_weight(0.0, 1.0, 60.0), raw_weight(0.0, 2.0, 60.0));

    let fused = fuse_series(&[filled.series, mid, far], &layout, 60.0)?;
    println!("fused HR per minute:");
    for (k, v) in fused.hr_bpm.iter().enumerate() {
        println!("  minute {k}: {:6.2} bpm", v.unwrap());
    }
    Ok(())
}
