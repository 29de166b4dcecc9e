//! Simulation and analysis of two-pulse (Hong-Ou-Mandel) interference between
//! independent gain-switched laser pulses.
//!
//! The crate is organised bottom-up:
//!
//! * [`pulse`] – chirped Gaussian pulses, sampled fields and spectra.
//! * [`interference`] – beam-splitter outputs, fringe amplitude and the
//!   phase/jitter averaged two-pulse visibility.
//! * [`filter`] – spectral bandpass filtering, closed form and FFT based.
//! * [`montecarlo`] – seeded pulse-train simulation with threshold detectors,
//!   coincidence histograms and g²(0).
//! * [`keyrate`] – visibility to relative MDI-QKD key-rate fraction.
//! * [`contour`] – marching-squares iso-lines used for key-rate contours.
//!
//! Units throughout: time in ps, chirp in ps⁻² (quadratic phase `β·t²` in
//! radians), optical frequency in THz, spectral widths and filter bandwidths
//! in GHz.

pub mod contour;
pub mod error;
pub mod filter;
pub mod interference;
pub mod keyrate;
pub mod montecarlo;
pub mod pulse;
pub mod sweep;

pub use error::{Error, Result};
pub use filter::{FilterShape, FilterSpec};
pub use interference::{AlignmentParams, PhaseDifference, SplitterSpec};
pub use montecarlo::{CoincidenceHistogram, DetectorSpec, ExperimentConfig};
pub use pulse::{PhaseMode, PulseParams, SampledField, TimeGrid};
pub use sweep::{SweepRecord, SweepResult};

/// Ratio between the FWHM and the standard deviation of a Gaussian, `2·√(2·ln 2)`.
pub const FWHM_PER_SIGMA: f64 = 2.354_820_045_030_949_4;

/// Converts a Gaussian FWHM to its standard deviation.
pub fn fwhm_to_sigma(fwhm: f64) -> f64 {
    fwhm / FWHM_PER_SIGMA
}

/// Converts a Gaussian standard deviation to its FWHM.
pub fn sigma_to_fwhm(sigma: f64) -> f64 {
    sigma * FWHM_PER_SIGMA
}
