//! Waveform files: single-channel 32-bit float little-endian RIFF/WAV,
//! named `pen<P>_sensor<S>.wav`. The sample rate is self-describing.

use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

use crate::error::{Error, Result};
use crate::trace::VibrationTrace;

pub fn write_trace(path: &Path, trace: &VibrationTrace) -> Result<()> {
    let spec = WavSpec {
        channels: 1,
        sample_rate: trace.sample_rate_hz.round() as u32,
        bits_per_sample: 32,
        sample_format: SampleFormat::Float,
    };
    let tmp = path.with_extension("tmp-partial");
    {
        let mut writer = WavWriter::create(&tmp, spec)
            .map_err(|e| Error::data(format!("creating {}: {e}", path.display())))?;
        for &s in &trace.samples {
            writer
                .write_sample(s as f32)
                .map_err(|e| Error::data(format!("writing {}: {e}", path.display())))?;
        }
        writer
            .finalize()
            .map_err(|e| Error::data(format!("finalizing {}: {e}", path.display())))?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// Read a waveform; the sensor id is the file stem.
pub fn read_trace(path: &Path) -> Result<VibrationTrace> {
    let mut reader = WavReader::open(path)
        .map_err(|e| Error::data(format!("opening {}: {e}", path.display())))?;
    let spec = reader.spec();
    if spec.channels != 1 {
        return Err(Error::data(format!(
            "{}: expected 1 channel, found {}",
            path.display(),
            spec.channels
        )));
    }
    if spec.sample_format != SampleFormat::Float || spec.bits_per_sample != 32 {
        return Err(Error::data(format!(
            "{}: expected 32-bit float samples",
            path.display()
        )));
    }
    let samples: std::result::Result<Vec<f32>, _> = reader.samples::<f32>().collect();
    let samples =
        samples.map_err(|e| Error::data(format!("decoding {}: {e}", path.display())))?;
    let sensor_id = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("sensor")
        .to_string();
    VibrationTrace::new(
        sensor_id,
        spec.sample_rate as f64,
        samples.into_iter().map(|s| s as f64).collect(),
    )
}
