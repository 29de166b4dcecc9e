//! Chirped Gaussian pulses.
//!
//! A pulse emitted at time `t_k` with carrier offset `ν`, chirp `β` and phase
//! `φ` has the field
//!
//! ```text
//! E(t) = √I(t − t_k) · exp{i[2πν(t − t_k) + β(t − t_k)² + φ]}
//! I(t) = exp(−t²/2τ_p²) / (τ_p·√(2π))
//! ```
//!
//! `β` is the quadratic phase rate in rad/ps², so the instantaneous angular
//! frequency sweeps as `2βt`. With this convention the spectral FWHM of a
//! chirped pulse grows as `√(1 + 16β²τ_p⁴)`, the same factor that governs the
//! two-pulse fringe amplitude.
//!
//! All numeric grids work at baseband: `nu0` is the carrier *offset* in THz
//! relative to a common reference (normally zero).

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erf;

use crate::error::{Error, Result};
use crate::FWHM_PER_SIGMA;

/// Largest truncated energy fraction tolerated by [`sample_field`].
pub const MAX_TRUNCATED_ENERGY: f64 = 1e-4;

/// Default sampling step of generated grids, ps.
pub const DEFAULT_DT: f64 = 0.25;

/// Default half-span of generated grids, ps.
pub const DEFAULT_HALF_SPAN: f64 = 160.0;

/// Minimum FFT length used for spectra, giving sub-0.1 GHz bins on default grids.
const MIN_SPECTRUM_FFT: usize = 1 << 16;

/// Fraction of the Nyquist band beyond which spectral power counts as aliased.
const ALIAS_EDGE: f64 = 0.75;
const ALIAS_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseMode {
    /// A fresh uniform phase on `[0, 2π)` for every pulse.
    RandomUniform,
    /// A fixed phase, radians.
    Fixed(f64),
}

/// A chirped Gaussian pulse.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseParams {
    /// Standard deviation of the intensity profile `I(t)`, ps.
    pub tau_p: f64,
    /// Chirp, rad/ps².
    pub beta: f64,
    /// Carrier offset from the common baseband reference, THz.
    pub nu0: f64,
    /// Mean photon number per pulse.
    pub mean_photons: f64,
    pub phase_mode: PhaseMode,
}

impl PulseParams {
    /// A baseband, randomly phased pulse with 0.05 photons on average.
    pub fn new(tau_p: f64, beta: f64) -> Result<Self> {
        let p = PulseParams {
            tau_p,
            beta,
            nu0: 0.0,
            mean_photons: 0.05,
            phase_mode: PhaseMode::RandomUniform,
        };
        p.validate()?;
        Ok(p)
    }

    /// Builds a pulse from its intensity FWHM in ps.
    pub fn from_fwhm(fwhm_ps: f64, beta: f64) -> Result<Self> {
        Self::new(fwhm_ps / FWHM_PER_SIGMA, beta)
    }

    pub fn with_mean_photons(mut self, mean_photons: f64) -> Self {
        self.mean_photons = mean_photons;
        self
    }

    pub fn with_nu0(mut self, nu0: f64) -> Self {
        self.nu0 = nu0;
        self
    }

    pub fn with_phase_mode(mut self, phase_mode: PhaseMode) -> Self {
        self.phase_mode = phase_mode;
        self
    }

    pub fn with_beta(mut self, beta: f64) -> Self {
        self.beta = beta;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau_p.is_finite() && self.tau_p > 0.0) {
            return Err(Error::invalid("tau_p", format!("must be positive, got {}", self.tau_p)));
        }
        if !self.beta.is_finite() {
            return Err(Error::invalid("beta", "must be finite"));
        }
        if !self.nu0.is_finite() {
            return Err(Error::invalid("nu0", "must be finite"));
        }
        if !(self.mean_photons.is_finite() && self.mean_photons >= 0.0) {
            return Err(Error::invalid(
                "mean_photons",
                format!("must be non-negative, got {}", self.mean_photons),
            ));
        }
        if let PhaseMode::Fixed(phi) = self.phase_mode {
            if !phi.is_finite() {
                return Err(Error::invalid("phase_mode", "fixed phase must be finite"));
            }
        }
        Ok(())
    }

    /// Intensity FWHM, ps.
    pub fn intensity_fwhm(&self) -> f64 {
        self.tau_p * FWHM_PER_SIGMA
    }

    /// Normalised temporal intensity profile `I(t)`.
    pub fn intensity(&self, t: f64) -> f64 {
        (-t * t / (2.0 * self.tau_p * self.tau_p)).exp() / (self.tau_p * (2.0 * PI).sqrt())
    }

    /// Analytic field at time `t` relative to the pulse centre.
    pub fn field(&self, t: f64, phase: f64) -> Complex64 {
        let arg = 2.0 * PI * self.nu0 * t + self.beta * t * t + phase;
        Complex64::from_polar(self.intensity(t).sqrt(), arg)
    }

    /// Same `tau_p`, `beta` and carrier, so the closed-form overlap applies.
    pub fn same_shape(&self, other: &PulseParams) -> bool {
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1e-300);
        close(self.tau_p, other.tau_p)
            && (self.beta == other.beta || close(self.beta, other.beta))
            && (self.nu0 == other.nu0 || close(self.nu0, other.nu0))
    }
}

/// Uniform sampling grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t_start: f64,
    pub dt: f64,
    pub n_samples: usize,
}

impl TimeGrid {
    pub fn new(t_start: f64, dt: f64, n_samples: usize) -> Result<Self> {
        if !t_start.is_finite() {
            return Err(Error::invalid("t_start", "must be finite"));
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::invalid("dt", format!("must be positive, got {dt}")));
        }
        if n_samples < 2 {
            return Err(Error::invalid("n_samples", "need at least two samples"));
        }
        Ok(TimeGrid {
            t_start,
            dt,
            n_samples,
        })
    }

    /// Grid symmetric about zero covering at least `[-half_span, half_span]`.
    pub fn centered(half_span: f64, dt: f64) -> Result<Self> {
        if !(half_span.is_finite() && half_span > 0.0) {
            return Err(Error::invalid("half_span", "must be positive"));
        }
        let half = (half_span / dt).ceil() as usize;
        Self::new(-(half as f64) * dt, dt, 2 * half + 1)
    }

    /// A default-resolution grid wide enough for `pulses` placed at the
    /// given centres, keeping ±4 FWHM around every pulse.
    pub fn covering(pulses: &[(&PulseParams, f64)]) -> Result<Self> {
        let half_span = pulses
            .iter()
            .map(|(p, t0)| t0.abs() + 4.0 * p.intensity_fwhm())
            .fold(DEFAULT_HALF_SPAN, f64::max);
        Self::centered(half_span, DEFAULT_DT)
    }

    pub fn time(&self, j: usize) -> f64 {
        self.t_start + j as f64 * self.dt
    }

    pub fn t_end(&self) -> f64 {
        self.time(self.n_samples - 1)
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_samples).map(move |j| self.time(j))
    }

    /// Nyquist frequency, THz.
    pub fn nyquist_thz(&self) -> f64 {
        0.5 / self.dt
    }

    pub fn matches(&self, other: &TimeGrid) -> bool {
        self.n_samples == other.n_samples
            && (self.dt - other.dt).abs() <= 1e-12 * self.dt
            && (self.t_start - other.t_start).abs() <= 1e-9 * self.dt
    }
}

impl Default for TimeGrid {
    fn default() -> Self {
        Self::centered(DEFAULT_HALF_SPAN, DEFAULT_DT).expect("default grid is valid")
    }
}

/// Complex field samples on a [`TimeGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct SampledField {
    pub grid: TimeGrid,
    pub amplitude: Vec<Complex64>,
}

impl SampledField {
    pub fn new(grid: TimeGrid, amplitude: Vec<Complex64>) -> Result<Self> {
        if amplitude.len() != grid.n_samples {
            return Err(Error::GridMismatch);
        }
        Ok(SampledField { grid, amplitude })
    }

    /// `Σ|a|²·dt`.
    pub fn energy(&self) -> f64 {
        self.amplitude.iter().map(|a| a.norm_sqr()).sum::<f64>() * self.grid.dt
    }

    pub fn intensity(&self) -> Vec<f64> {
        self.amplitude.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Rescales to unit energy and returns the energy before rescaling.
    pub fn normalize(&mut self) -> f64 {
        let energy = self.energy();
        if energy > 0.0 {
            let scale = energy.sqrt().recip();
            self.amplitude.iter_mut().for_each(|a| *a *= scale);
        }
        energy
    }

    /// Intensity FWHM measured from the samples, ps.
    pub fn intensity_fwhm(&self) -> Option<f64> {
        let times: Vec<f64> = self.grid.times().collect();
        fwhm_of(&times, &self.intensity())
    }
}

/// Samples a pulse centred at `t_offset` with carrier phase `phase`.
///
/// The samples are renormalised to unit energy; the grid must hold all but
/// [`MAX_TRUNCATED_ENERGY`] of the analytic pulse energy.
pub fn sample_field(
    p: &PulseParams,
    grid: &TimeGrid,
    t_offset: f64,
    phase: f64,
) -> Result<SampledField> {
    p.validate()?;
    let phi = |t: f64| 0.5 * (1.0 + erf((t - t_offset) / (p.tau_p * 2f64.sqrt())));
    let lo = grid.t_start - 0.5 * grid.dt;
    let hi = grid.t_end() + 0.5 * grid.dt;
    let lost = 1.0 - (phi(hi) - phi(lo));
    if lost > MAX_TRUNCATED_ENERGY {
        return Err(Error::GridTooNarrow { lost });
    }
    let amplitude = grid.times().map(|t| p.field(t - t_offset, phase)).collect();
    let mut field = SampledField::new(*grid, amplitude)?;
    field.normalize();
    Ok(field)
}

/// Tabulated power spectral density.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    /// Baseband frequency, GHz, ascending.
    pub freq_ghz: Vec<f64>,
    /// Density normalised to unit area over `freq_ghz`, 1/GHz.
    pub density: Vec<f64>,
    /// Field energy computed in the frequency domain (Parseval).
    pub energy: f64,
}

impl Spectrum {
    pub fn fwhm_ghz(&self) -> Option<f64> {
        fwhm_of(&self.freq_ghz, &self.density)
    }

    pub fn bin_ghz(&self) -> f64 {
        self.freq_ghz[1] - self.freq_ghz[0]
    }

    /// Power fraction with `|f| > edge_ghz`.
    pub fn fraction_beyond(&self, edge_ghz: f64) -> f64 {
        let df = self.bin_ghz();
        self.freq_ghz
            .iter()
            .zip(&self.density)
            .filter(|(f, _)| f.abs() > edge_ghz)
            .map(|(_, d)| d * df)
            .sum()
    }
}

pub(crate) fn fft_padded(samples: &[Complex64], n_fft: usize) -> Vec<Complex64> {
    let mut buf = vec![Complex64::new(0.0, 0.0); n_fft];
    buf[..samples.len()].copy_from_slice(samples);
    FftPlanner::new().plan_fft_forward(n_fft).process(&mut buf);
    buf
}

/// Signed FFT bin frequency in THz.
pub(crate) fn bin_frequency_thz(k: usize, n_fft: usize, dt: f64) -> f64 {
    let k = if k < n_fft / 2 { k as f64 } else { k as f64 - n_fft as f64 };
    k / (n_fft as f64 * dt)
}

/// Zero-padded power spectrum without the aliasing check.
pub fn power_spectrum(f: &SampledField) -> Spectrum {
    let n_fft = f.amplitude.len().next_power_of_two().max(MIN_SPECTRUM_FFT);
    let dt = f.grid.dt;
    let bins = fft_padded(&f.amplitude, n_fft);
    let df_ghz = 1e3 / (n_fft as f64 * dt);

    let power: Vec<f64> = bins.iter().map(|x| x.norm_sqr()).collect();
    // Parseval with the continuous-transform scaling A(f) = dt·X_k, df = 1/(N·dt).
    let energy = power.iter().sum::<f64>() * dt / n_fft as f64;

    let half = n_fft / 2;
    let order = (half..n_fft).chain(0..half);
    let total: f64 = power.iter().sum::<f64>() * df_ghz;
    let (freq_ghz, density) = order
        .map(|k| (bin_frequency_thz(k, n_fft, dt) * 1e3, power[k] / total))
        .unzip();
    Spectrum {
        freq_ghz,
        density,
        energy,
    }
}

/// Power spectrum normalised to unit area; rejects fields whose spectrum
/// reaches the edge of the Nyquist band.
pub fn spectral_intensity(f: &SampledField) -> Result<Spectrum> {
    let spectrum = power_spectrum(f);
    let edge_fraction = spectrum.fraction_beyond(ALIAS_EDGE * f.grid.nyquist_thz() * 1e3);
    if edge_fraction > ALIAS_TOLERANCE {
        return Err(Error::Aliasing { edge_fraction });
    }
    Ok(spectrum)
}

/// Spectral FWHM of a transform-limited pulse, GHz.
pub fn transform_limited_fwhm(tau_p: f64) -> f64 {
    FWHM_PER_SIGMA / (4.0 * PI * tau_p) * 1e3
}

/// Closed-form spectral FWHM of a chirped Gaussian, GHz.
///
/// The power spectrum is Gaussian with standard deviation
/// `√(1 + 16β²τ_p⁴) / (4πτ_p)`.
pub fn spectral_fwhm_closed_form(p: &PulseParams) -> f64 {
    let t2 = p.tau_p * p.tau_p;
    transform_limited_fwhm(p.tau_p) * (1.0 + 16.0 * p.beta * p.beta * t2 * t2).sqrt()
}

/// Chirp that broadens a pulse of width `tau_p` to `measured_fwhm_ghz`.
///
/// Returns the non-negative root; the sign of the chirp is not observable in
/// the power spectrum.
pub fn chirp_from_spectrum(tau_p: f64, measured_fwhm_ghz: f64) -> Result<f64> {
    if !(tau_p.is_finite() && tau_p > 0.0) {
        return Err(Error::invalid("tau_p", "must be positive"));
    }
    if !measured_fwhm_ghz.is_finite() {
        return Err(Error::invalid("measured_fwhm", "must be finite"));
    }
    let limit_ghz = transform_limited_fwhm(tau_p);
    let ratio = measured_fwhm_ghz / limit_ghz;
    if ratio < 1.0 - 1e-9 {
        return Err(Error::BelowTransformLimit {
            measured_ghz: measured_fwhm_ghz,
            limit_ghz,
        });
    }
    let excess = (ratio * ratio - 1.0).max(0.0);
    Ok(excess.sqrt() / (4.0 * tau_p * tau_p))
}

/// Full width at half maximum of a sampled single-peaked curve, with linear
/// interpolation of the half-maximum crossings.
pub fn fwhm_of(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let (peak, &max) = ys
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))?;
    if max <= 0.0 {
        return None;
    }
    let half = 0.5 * max;
    let cross = |i: usize, j: usize| {
        let (y0, y1) = (ys[i], ys[j]);
        xs[i] + (half - y0) / (y1 - y0) * (xs[j] - xs[i])
    };
    let left = (0..peak).rev().find(|&j| ys[j] < half).map(|j| cross(j, j + 1))?;
    let right = (peak + 1..ys.len()).find(|&j| ys[j] < half).map(|j| cross(j - 1, j))?;
    Some(right - left)
}
