//! Denoising, band selection, environmental-event removal, and the
//! Morse-wavelet time-frequency transform.

mod cwt;
mod events;
mod filter;
mod wiener;

pub use cwt::{band_magnitude_sum, cwt_morse, MorseParams, WaveletSpectrum};
pub use events::{detect_environmental_events, EventTemplate};
pub use filter::lowpass_filter;
pub use wiener::wiener_denoise;
