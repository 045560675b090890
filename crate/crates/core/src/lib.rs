//! Vibration-based vital sign estimation for livestock pens.
//!
//! Recovers heart rate and respiratory rate from floor-vibration recordings
//! of a lying animal. Heartbeat and respiration exert small time-varying
//! forces on the floor; geophones pick the resulting waves up within a
//! couple of meters. This crate implements the full analysis chain:
//!
//! 1. **Pre-processing** — Wiener denoising, 0–200 Hz band selection, and
//!    template matching to remove environmental events ([`preprocess`]).
//! 2. **Behavior compensation** — posture gating, movement detection,
//!    attenuation inversion and dispersion mitigation for sensors away
//!    from the animal ([`behavior`]).
//! 3. **Estimation and fusion** — Morse-wavelet detection functions, peak
//!    picking into per-minute rates, spline gap filling, and weighted
//!    multi-sensor fusion ([`vitals`], [`fusion`]).
//!
//! Because live-animal recordings are rarely at hand, [`synth`] generates
//! multi-sensor vibration scenes with exact ground truth (event times,
//! postures, movements, propagation effects); the whole pipeline is
//! verified against it. See the `examples/` directory for one runnable
//! demo per capability, and the `vibrovitals` binary for the batch
//! front end (`synth`, `run`, `bench`, `estimate-alpha`).

pub mod behavior;
pub mod commands;
pub mod error;
mod fft;
pub mod fusion;
pub mod io;
pub mod pipeline;
pub mod preprocess;
pub mod synth;
pub mod trace;
pub mod vitals;

pub use error::{Error, Result};
pub use trace::{BehaviorTimeline, IntervalLabel, TimeInterval, VibrationTrace};
