//! Multi-seed benchmark through the same path as `vibrovitals bench`:
//! aggregate fused accuracy, error vs distance, and the compensation
//! ablation, written as JSON + tidy CSVs.
//!
//! ```bash
//! cargo run --release --example benchmark [out_dir]
//! ```

use vibrovitals::commands::cmd_bench;

fn main() -> vibrovitals::Result<()> {
    let out_dir = std::env::args()
        .nth(1)
        .map(std::path::PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("vibrovitals_bench"));
    std::fs::create_dir_all(&out_dir)?;

    let config_path = out_dir.join("config.json");
    std::fs::write(
        &config_path,
        r#"{
  "scenario": {
    "duration_s": 180.0,
    "hr_bpm": 98.0,
    "rr_bpm": 35.0,
    "sensor_distances_m": [0.0, 1.0, 2.0],
    "snr_db": 8.0,
    "movements": { "random_fraction": 0.08, "magnitude_factor_range": [5.0, 10.0] }
  }
}"#,
    )?;

    let seeds: Vec<u64> = (0..5).collect();
    let report = cmd_bench(&config_path, &seeds, &out_dir, "benchmark example")?;

    println!(
        "fused over {} seeds: HR MAPE {:.2}% MAE {:.2}/min | RR MAPE {:.2}% MAE {:.2}/min",
        report.seeds.len(),
        100.0 * report.hr_mape,
        report.hr_mae,
        100.0 * report.rr_mape,
        report.rr_mae
    );
    println!("error vs distance:");
    for d in &report.per_distance {
        println!("  d = {:3.1} m: HR MAE {:.2}/min", d.distance_m, d.hr_mae);
    }
    println!(
        "compensation ablation: HR {:.2} -> {:.2} (x{:.2}), RR {:.2} -> {:.2} (x{:.2})",
        report.ablation.hr_mae_baseline,
        report.ablation.hr_mae_compensated,
        report.ablation.hr_error_ratio,
        report.ablation.rr_mae_baseline,
        report.ablation.rr_mae_compensated,
        report.ablation.rr_error_ratio
    );
    println!("full report in {}", out_dir.display());
    Ok(())
}
