//! Batch commands behind the `vibrovitals` binary: scene synthesis,
//! pipeline runs over waveform directories, multi-seed benchmarking, and
//! attenuation-coefficient estimation. All logic lives here so the binary
//! stays a thin argument parser and the examples can drive the same paths.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::behavior::estimate_attenuation_coefficient;
use crate::error::{Error, Result};
use crate::io::config::{load_config, FileConfig};
use crate::io::manifest::RunManifest;
use crate::io::{annotations, series_csv, wav, write_json};
use crate::pipeline::{compute_metrics, run_pipeline, Metrics, PipelineOutput};
use crate::preprocess::EventTemplate;
use crate::synth::{synth_scenario, ScenarioOutput};
use crate::trace::{BehaviorTimeline, IntervalLabel, VibrationTrace};

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    Ok(())
}

/// Files produced by `synth`.
#[derive(Debug, Clone, Serialize)]
pub struct SynthSummary {
    pub waveforms: Vec<PathBuf>,
    pub ground_truth: PathBuf,
    pub layout: PathBuf,
    pub annotations: PathBuf,
    pub templates: Vec<PathBuf>,
}

/// Generate a scene from the config's `scenario` section and write one
/// waveform per sensor plus ground truth, layout, posture annotations,
/// event templates, and a manifest.
pub fn cmd_synth(
    config_path: &Path,
    out_dir: &Path,
    seed: Option<u64>,
    command_echo: &str,
) -> Result<SynthSummary> {
    let mut config = load_config(config_path)?;
    if let Some(s) = seed {
        config.scenario.seed = s;
    }
    ensure_dir(out_dir)?;
    let scene = synth_scenario(&config.scenario)?;

    let mut waveforms = Vec::new();
    for trace in &scene.traces {
        let path = out_dir.join(format!("{}.wav", trace.sensor_id));
        wav::write_trace(&path, trace)?;
        waveforms.push(path);
    }
    let ground_truth = out_dir.join("ground_truth.json");
    write_json(&ground_truth, &scene.ground_truth)?;
    let layout = out_dir.join("layout.json");
    write_json(&layout, &scene.layout)?;
    let annotations_path = out_dir.join("annotations.csv");
    annotations::write_annotations(&annotations_path, &scene.ground_truth.posture_timeline)?;

    let mut template_paths = Vec::new();
    if !scene.templates.is_empty() {
        let tdir = out_dir.join("templates");
        ensure_dir(&tdir)?;
        for t in &scene.templates {
            let path = tdir.join(format!("{}.wav", t.name));
            let trace = VibrationTrace::new(
                t.name.clone(),
                config.scenario.sample_rate_hz,
                t.samples.clone(),
            )?;
            wav::write_trace(&path, &trace)?;
            template_paths.push(path);
        }
    }

    let mut manifest = RunManifest::new(command_echo, out_dir);
    manifest.config_path = Some(config_path.display().to_string());
    manifest.seed = Some(config.scenario.seed);
    manifest.write(out_dir)?;

    Ok(SynthSummary {
        waveforms,
        ground_truth,
        layout,
        annotations: annotations_path,
        templates: template_paths,
    })
}

fn sorted_wavs(data_dir: &Path) -> Result<Vec<PathBuf>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(data_dir)
        .map_err(|e| Error::data(format!("reading {}: {e}", data_dir.display())))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext == "wav"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::data(format!(
            "no .wav files found in {}",
            data_dir.display()
        )));
    }
    Ok(paths)
}

fn load_templates(data_dir: &Path, threshold: f64) -> Result<Vec<EventTemplate>> {
    let tdir = data_dir.join("templates");
    if !tdir.is_dir() {
        return Ok(Vec::new());
    }
    let mut templates = Vec::new();
    for path in sorted_wavs(&tdir)? {
        let trace = wav::read_trace(&path)?;
        templates.push(EventTemplate::new(
            trace.sensor_id.clone(),
            trace.samples,
            threshold,
        )?);
    }
    Ok(templates)
}

/// Options for [`cmd_run`].
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub annotations_path: Option<PathBuf>,
    /// Error out instead of assuming whole-trace lying when annotations are
    /// missing.
    pub strict_annotations: bool,
    /// Disable behavior compensation (ablation baseline).
    pub no_compensation: bool,
}

/// Outcome of `run`: the pipeline output plus where the CSV went.
#[derive(Debug)]
pub struct RunSummary {
    pub output: PipelineOutput,
    pub csv_path: PathBuf,
    pub warnings: Vec<String>,
}

/// Analyze a directory of sensor waveforms and write per-sensor + fused
/// per-minute series CSV, diagnostics, and a manifest.
pub fn cmd_run(
    data_dir: &Path,
    config_path: &Path,
    out_dir: &Path,
    options: &RunOptions,
    command_echo: &str,
) -> Result<RunSummary> {
    let config = load_config(config_path)?;
    let declared_rate = config.scenario.sample_rate_hz;

    // Read every input before writing anything, so a bad file cannot leave
    // partial outputs behind.
    let layout: crate::behavior::SensorLayout =
        crate::io::read_json(&data_dir.join("layout.json"))?;
    layout.validate().map_err(|e| Error::data(format!("layout.json: {e}")))?;

    let mut traces = Vec::new();
    for path in sorted_wavs(data_dir)? {
        let trace = wav::read_trace(&path)?;
        if (trace.sample_rate_hz - declared_rate).abs() > 1e-6 {
            return Err(Error::data(format!(
                "{}: sample rate {} Hz does not match the configured {} Hz",
                path.display(),
                trace.sample_rate_hz,
                declared_rate
            )));
        }
        traces.push(trace);
    }
    let duration = traces.iter().map(|t| t.duration_s()).fold(0.0, f64::max);

    let mut warnings = Vec::new();
    let annotations_path = options
        .annotations_path
        .clone()
        .unwrap_or_else(|| data_dir.join("annotations.csv"));
    let timeline = if annotations_path.is_file() {
        annotations::read_annotations(&annotations_path, duration)?
    } else if options.strict_annotations {
        return Err(Error::data(format!(
            "annotations file {} not found (strict mode)",
            annotations_path.display()
        )));
    } else {
        warnings.push(format!(
            "annotations file {} not found; treating the whole trace as lying",
            annotations_path.display()
        ));
        BehaviorTimeline::uniform(IntervalLabel::LyingLateral, duration)?
    };

    let templates = load_templates(data_dir, config.pipeline.similarity_threshold)?;
    let mut pipeline_config = config.pipeline.to_pipeline_config(layout.clone(), templates);
    pipeline_config.compensation = !options.no_compensation;

    let output = run_pipeline(&traces, &timeline, &pipeline_config)?;

    ensure_dir(out_dir)?;
    let csv_path = out_dir.join("vitals.csv");
    series_csv::write_series_csv(
        &csv_path,
        &output.per_sensor,
        output.fused.as_ref(),
        &layout,
        pipeline_config.t_round_s,
    )?;
    write_json(&out_dir.join("diagnostics.json"), &output.diagnostics)?;
    let mut manifest = RunManifest::new(command_echo, out_dir);
    manifest.config_path = Some(config_path.display().to_string());
    manifest.input_paths = vec![data_dir.display().to_string()];
    manifest.write(out_dir)?;

    warnings.extend(output.diagnostics.warnings.clone());
    Ok(RunSummary {
        output,
        csv_path,
        warnings,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DistanceError {
    pub distance_m: f64,
    pub hr_mae: f64,
    pub rr_mae: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AblationReport {
    pub hr_mae_compensated: f64,
    pub hr_mae_baseline: f64,
    /// baseline / compensated error; > 1 means compensation helps.
    pub hr_error_ratio: f64,
    pub rr_mae_compensated: f64,
    pub rr_mae_baseline: f64,
    pub rr_error_ratio: f64,
}

/// Aggregate benchmark over seeds: fused accuracy, a per-distance error
/// table, and the compensation-on/off ablation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchReport {
    pub seeds: Vec<u64>,
    pub hr_mape: f64,
    pub rr_mape: f64,
    pub hr_mae: f64,
    pub rr_mae: f64,
    pub per_distance: Vec<DistanceError>,
    pub ablation: AblationReport,
}

fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        0.0
    } else {
        values.iter().sum::<f64>() / values.len() as f64
    }
}

/// Run one seed of the bench scene: synth, compensated pipeline, baseline
/// pipeline. Returns fused metrics for both plus per-sensor metrics.
fn bench_one_seed(
    config: &FileConfig,
    seed: u64,
) -> Result<(ScenarioOutput, Metrics, Metrics, Vec<(f64, Metrics)>)> {
    let mut scenario = config.scenario.clone();
    scenario.seed = seed;
    let scene = synth_scenario(&scenario)?;
    let pipeline_config = config
        .pipeline
        .to_pipeline_config(scene.layout.clone(), scene.templates.clone());

    let compensated = run_pipeline(
        &scene.traces,
        &scene.ground_truth.posture_timeline,
        &pipeline_config,
    )?;
    let fused = compensated
        .fused
        .as_ref()
        .ok_or_else(|| Error::data("bench scene produced no estimate"))?;
    let comp_metrics = compute_metrics(fused, &scene.ground_truth)?;
    let mut per_sensor = Vec::new();
    for series in &compensated.per_sensor {
        let d = scene.layout.distance_of(&series.sensor_id).unwrap_or(0.0);
        per_sensor.push((d, compute_metrics(series, &scene.ground_truth)?));
    }

    let mut baseline_config = pipeline_config;
    baseline_config.compensation = false;
    let baseline = run_pipeline(
        &scene.traces,
        &scene.ground_truth.posture_timeline,
        &baseline_config,
    )?;
    let baseline_fused = baseline
        .fused
        .as_ref()
        .ok_or_else(|| Error::data("baseline bench run produced no estimate"))?;
    let base_metrics = compute_metrics(baseline_fused, &scene.ground_truth)?;

    Ok((scene, comp_metrics, base_metrics, per_sensor))
}

/// Benchmark the configured scene across seeds and write
/// `bench_report.json` plus tidy CSVs (per-seed metrics, error vs
/// distance, ablation).
pub fn cmd_bench(
    config_path: &Path,
    seeds: &[u64],
    out_dir: &Path,
    command_echo: &str,
) -> Result<BenchReport> {
    if seeds.is_empty() {
        return Err(Error::config("bench needs at least one seed"));
    }
    let config = load_config(config_path)?;

    let mut hr_mapes = Vec::new();
    let mut rr_mapes = Vec::new();
    let mut hr_maes = Vec::new();
    let mut rr_maes = Vec::new();
    let mut base_hr_maes = Vec::new();
    let mut base_rr_maes = Vec::new();
    let mut by_distance: BTreeMap<u64, (f64, Vec<f64>, Vec<f64>)> = BTreeMap::new();
    let mut per_seed_rows = String::from(
        "seed,hr_mape,rr_mape,hr_mae,rr_mae,baseline_hr_mae,baseline_rr_mae\n",
    );

    for &seed in seeds {
        let (_, comp, base, per_sensor) = bench_one_seed(&config, seed)?;
        hr_mapes.push(comp.hr_mape);
        rr_mapes.push(comp.rr_mape);
        hr_maes.push(comp.hr_mae);
        rr_maes.push(comp.rr_mae);
        base_hr_maes.push(base.hr_mae);
        base_rr_maes.push(base.rr_mae);
        per_seed_rows.push_str(&format!(
            "{seed},{:.6},{:.6},{:.4},{:.4},{:.4},{:.4}\n",
            comp.hr_mape, comp.rr_mape, comp.hr_mae, comp.rr_mae, base.hr_mae, base.rr_mae
        ));
        for (d, m) in per_sensor {
            let key = (d * 1000.0).round() as u64;
            let entry = by_distance.entry(key).or_insert((d, Vec::new(), Vec::new()));
            entry.1.push(m.hr_mae);
            entry.2.push(m.rr_mae);
        }
    }

    let per_distance: Vec<DistanceError> = by_distance
        .values()
        .map(|(d, hr, rr)| DistanceError {
            distance_m: *d,
            hr_mae: mean(hr),
            rr_mae: mean(rr),
        })
        .collect();

    let hr_mae_compensated = mean(&hr_maes);
    let hr_mae_baseline = mean(&base_hr_maes);
    let rr_mae_compensated = mean(&rr_maes);
    let rr_mae_baseline = mean(&base_rr_maes);
    let report = BenchReport {
        seeds: seeds.to_vec(),
        hr_mape: mean(&hr_mapes),
        rr_mape: mean(&rr_mapes),
        hr_mae: hr_mae_compensated,
        rr_mae: rr_mae_compensated,
        per_distance: per_distance.clone(),
        ablation: AblationReport {
            hr_mae_compensated,
            hr_mae_baseline,
            hr_error_ratio: if hr_mae_compensated > 0.0 {
                hr_mae_baseline / hr_mae_compensated
            } else {
                f64::INFINITY
            },
            rr_mae_compensated,
            rr_mae_baseline,
            rr_error_ratio: if rr_mae_compensated > 0.0 {
                rr_mae_baseline / rr_mae_compensated
            } else {
                f64::INFINITY
            },
        },
    };

    ensure_dir(out_dir)?;
    write_json(&out_dir.join("bench_report.json"), &report)?;
    crate::io::atomic_write(&out_dir.join("per_seed.csv"), per_seed_rows.as_bytes())?;
    let mut dist_rows = String::from("distance_m,hr_mae,rr_mae\n");
    for d in &per_distance {
        dist_rows.push_str(&format!("{},{:.4},{:.4}\n", d.distance_m, d.hr_mae, d.rr_mae));
    }
    crate::io::atomic_write(&out_dir.join("per_distance.csv"), dist_rows.as_bytes())?;
    let ablation_rows = format!(
        "signal,mae_compensated,mae_baseline,error_ratio\nhr,{:.4},{:.4},{:.4}\nrr,{:.4},{:.4},{:.4}\n",
        report.ablation.hr_mae_compensated,
        report.ablation.hr_mae_baseline,
        report.ablation.hr_error_ratio,
        report.ablation.rr_mae_compensated,
        report.ablation.rr_mae_baseline,
        report.ablation.rr_error_ratio,
    );
    crate::io::atomic_write(&out_dir.join("ablation.csv"), ablation_rows.as_bytes())?;

    let mut manifest = RunManifest::new(command_echo, out_dir);
    manifest.config_path = Some(config_path.display().to_string());
    manifest.seeds = seeds.to_vec();
    manifest.write(out_dir)?;

    Ok(report)
}

/// Estimate the attenuation coefficient from two simultaneous recordings
/// at known distances.
pub fn cmd_estimate_alpha(
    near_path: &Path,
    d_near_m: f64,
    far_path: &Path,
    d_far_m: f64,
) -> Result<f64> {
    let near = wav::read_trace(near_path)?;
    let far = wav::read_trace(far_path)?;
    estimate_attenuation_coefficient(&near, d_near_m, &far, d_far_m)
}
