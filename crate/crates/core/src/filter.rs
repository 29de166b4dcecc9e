//! Spectral bandpass filtering of the pulses.
//!
//! A Gaussian filter acting on a chirped Gaussian pulse keeps it a chirped
//! Gaussian: writing the field as `exp(−a·t²)` with `a = 1/(4τ_p²) − iβ`, the
//! spectrum is `exp(−π²f²/a)`, the filter multiplies it by another real
//! Gaussian, and transforming back gives new `(τ_p′, β′)`. Super-Gaussian
//! (flat-top) filters go through the FFT path.
//!
//! The same filter acts on both lasers.

use std::f64::consts::{LN_2, PI};

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interference::{AlignmentParams, OverlapModel, OverlapTable, SplitterSpec};
use crate::pulse::{
    bin_frequency_thz, fft_padded, sample_field, PulseParams, SampledField, TimeGrid, DEFAULT_DT,
    DEFAULT_HALF_SPAN,
};
use crate::sweep::{SweepRecord, SweepResult};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterShape {
    Gaussian,
    /// Super-Gaussian power response `exp[−(ν/w)^(2n)]`.
    FlatTop { order: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterSpec {
    /// Centre relative to the pulse carrier, GHz.
    pub center_offset_ghz: f64,
    /// FWHM of the power response, GHz.
    pub fwhm_ghz: f64,
    pub shape: FilterShape,
    /// Power ratio of light reflected back towards the splitter, dB. `None`
    /// means no back-reflection.
    pub back_reflection_db: Option<f64>,
}

impl FilterSpec {
    pub fn gaussian(fwhm_ghz: f64) -> Self {
        FilterSpec {
            center_offset_ghz: 0.0,
            fwhm_ghz,
            shape: FilterShape::Gaussian,
            back_reflection_db: None,
        }
    }

    pub fn flat_top(fwhm_ghz: f64, order: u32) -> Self {
        FilterSpec {
            shape: FilterShape::FlatTop { order },
            ..Self::gaussian(fwhm_ghz)
        }
    }

    pub fn with_back_reflection(mut self, db: f64) -> Self {
        self.back_reflection_db = Some(db);
        self
    }

    pub fn with_fwhm(mut self, fwhm_ghz: f64) -> Self {
        self.fwhm_ghz = fwhm_ghz;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fwhm_ghz.is_finite() && self.fwhm_ghz > 0.0) {
            return Err(Error::invalid("fwhm_ghz", format!("must be positive, got {}", self.fwhm_ghz)));
        }
        if !self.center_offset_ghz.is_finite() {
            return Err(Error::invalid("center_offset_ghz", "must be finite"));
        }
        if let FilterShape::FlatTop { order } = self.shape {
            if order == 0 {
                return Err(Error::invalid("order", "flat-top order must be at least 1"));
            }
        }
        if let Some(db) = self.back_reflection_db {
            if db.is_nan() || db <= 0.0 {
                return Err(Error::invalid("back_reflection_db", format!("must be positive, got {db}")));
            }
        }
        Ok(())
    }

    /// Power transmission at baseband frequency `f_ghz`.
    pub fn power_response(&self, f_ghz: f64) -> f64 {
        let half = 0.5 * self.fwhm_ghz;
        let nu = f_ghz - self.center_offset_ghz;
        let n = match self.shape {
            FilterShape::Gaussian => 1,
            FilterShape::FlatTop { order } => order as i32,
        };
        // Scale so that the response is exactly 1/2 at ±FWHM/2.
        (-LN_2 * (nu / half).abs().powi(2 * n)).exp()
    }

    pub fn amplitude_response(&self, f_ghz: f64) -> f64 {
        self.power_response(f_ghz).sqrt()
    }

    /// Reflected power ratio `10^(−dB/10)`, zero without back-reflection.
    pub fn back_reflection_ratio(&self) -> f64 {
        self.back_reflection_db.map_or(0.0, |db| 10f64.powf(-db / 10.0))
    }
}

fn complex_width(p: &PulseParams) -> Complex64 {
    Complex64::new(1.0 / (4.0 * p.tau_p * p.tau_p), -p.beta)
}

/// Filter term `2·ln2/F²` of the amplitude response `exp(−2ln2·f²/F²)`, F in THz.
fn filter_width(f: &FilterSpec) -> f64 {
    let fwhm_thz = f.fwhm_ghz * 1e-3;
    2.0 * LN_2 / (fwhm_thz * fwhm_thz)
}

fn check_closed_form(p: &PulseParams, f: &FilterSpec) -> Result<()> {
    p.validate()?;
    f.validate()?;
    if f.shape != FilterShape::Gaussian || f.center_offset_ghz != 0.0 {
        return Err(Error::UnsupportedShape);
    }
    Ok(())
}

/// Effective pulse after a centred Gaussian filter.
pub fn filter_gaussian_closed_form(p: &PulseParams, f: &FilterSpec) -> Result<PulseParams> {
    check_closed_form(p, f)?;
    let pi2 = PI * PI;
    let b = pi2 / complex_width(p) + filter_width(f);
    let a_out = pi2 / b;
    Ok(PulseParams {
        tau_p: 1.0 / (2.0 * a_out.re.sqrt()),
        beta: -a_out.im,
        ..*p
    })
}

/// Fraction of pulse energy passed by a centred Gaussian filter.
pub fn gaussian_transmission(p: &PulseParams, f: &FilterSpec) -> Result<f64> {
    check_closed_form(p, f)?;
    // |spectrum|² ∝ exp(−2π²·Re(1/a)·f²); |H|² = exp(−4ln2·f²/F²).
    let k = 2.0 * PI * PI * complex_width(p).inv().re;
    Ok((k / (k + 2.0 * filter_width(f))).sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilteredField {
    /// Output field, renormalised to unit energy.
    pub field: SampledField,
    /// Transmitted energy fraction.
    pub transmission: f64,
}

/// Filters a sampled field in the frequency domain.
pub fn filter_numeric(fld: &SampledField, f: &FilterSpec) -> Result<FilteredField> {
    f.validate()?;
    let n = fld.amplitude.len();
    let dt = fld.grid.dt;
    let n_fft = (4 * n).next_power_of_two();
    let mut bins = fft_padded(&fld.amplitude, n_fft);

    let edge = 0.75 * fld.grid.nyquist_thz();
    let (mut total, mut beyond) = (0.0, 0.0);
    for (k, x) in bins.iter().enumerate() {
        let p = x.norm_sqr();
        total += p;
        if bin_frequency_thz(k, n_fft, dt).abs() > edge {
            beyond += p;
        }
    }
    if total > 0.0 && beyond / total > 1e-6 {
        return Err(Error::Aliasing {
            edge_fraction: beyond / total,
        });
    }

    for (k, x) in bins.iter_mut().enumerate() {
        *x *= f.amplitude_response(bin_frequency_thz(k, n_fft, dt) * 1e3);
    }
    FftPlanner::new().plan_fft_inverse(n_fft).process(&mut bins);
    let scale = 1.0 / n_fft as f64;
    let amplitude = bins[..n].iter().map(|x| x * scale).collect();

    let energy_in = fld.energy();
    let mut field = SampledField::new(fld.grid, amplitude)?;
    let energy_out = field.normalize();
    Ok(FilteredField {
        field,
        transmission: if energy_in > 0.0 { energy_out / energy_in } else { 0.0 },
    })
}

/// Grid wide enough for `p` after a filter of bandwidth `fwhm_ghz`.
pub fn grid_for_filtered(p: &PulseParams, fwhm_ghz: f64) -> Result<TimeGrid> {
    let half_span = (4.0 * p.intensity_fwhm())
        .max(3000.0 / fwhm_ghz)
        .max(DEFAULT_HALF_SPAN);
    TimeGrid::centered(half_span, DEFAULT_DT)
}

/// Visibility multiplier for accidental coincidences from back-reflected,
/// phase-uncorrelated light: `1 / (1 + (ρ(1−T)/T)²)`.
pub fn back_reflection_factor(transmission: f64, f: &FilterSpec) -> f64 {
    let rho = f.back_reflection_ratio();
    if rho == 0.0 {
        return 1.0;
    }
    let ratio = rho * (1.0 - transmission) / transmission;
    1.0 / (1.0 + ratio * ratio)
}

/// Model visibility behind the filter, with and without back-reflection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilteredVisibility {
    pub visibility: f64,
    pub visibility_observed: f64,
    pub transmission: f64,
}

/// Overlap model of two copies of `source` behind `f`, and the transmission.
pub fn filtered_overlap(source: &PulseParams, f: &FilterSpec) -> Result<(OverlapModel, f64)> {
    match f.shape {
        FilterShape::Gaussian if f.center_offset_ghz == 0.0 => {
            let out = filter_gaussian_closed_form(source, f)?;
            Ok((
                OverlapModel::ClosedForm {
                    tau_p: out.tau_p,
                    beta: out.beta,
                },
                gaussian_transmission(source, f)?,
            ))
        }
        _ => {
            let grid = grid_for_filtered(source, f.fwhm_ghz)?;
            let input = sample_field(&source.with_nu0(0.0), &grid, 0.0, 0.0)?;
            let out = filter_numeric(&input, f)?;
            let table = OverlapTable::from_fields(&out.field, &out.field)?;
            Ok((OverlapModel::Tabulated(table), out.transmission))
        }
    }
}

pub fn filtered_visibility(
    source: &PulseParams,
    alignment: &AlignmentParams,
    splitter: &SplitterSpec,
    f: &FilterSpec,
) -> Result<FilteredVisibility> {
    let (model, transmission) = filtered_overlap(source, f)?;
    let visibility = model.averaged_visibility(alignment, splitter);
    Ok(FilteredVisibility {
        visibility,
        visibility_observed: visibility * back_reflection_factor(transmission, f),
        transmission,
    })
}

/// Visibility against filter bandwidth. `template` supplies the filter shape
/// and back-reflection; its bandwidth is replaced by each list entry. The
/// model column includes the back-reflection penalty when one is set.
pub fn visibility_vs_bandwidth_sweep(
    source: &PulseParams,
    alignment: &AlignmentParams,
    splitter: &SplitterSpec,
    template: &FilterSpec,
    bandwidths_ghz: &[f64],
) -> Result<SweepResult> {
    let records = bandwidths_ghz
        .par_iter()
        .map(|&bw| {
            let v = filtered_visibility(source, alignment, splitter, &template.with_fwhm(bw))?;
            Ok(SweepRecord::model(bw, v.visibility_observed))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult::new("bandwidth_ghz", records))
}

/// Back-reflection level (dB) at which the observed visibility at
/// `bandwidth_ghz` equals `target`.
pub fn fit_back_reflection_db(
    source: &PulseParams,
    alignment: &AlignmentParams,
    splitter: &SplitterSpec,
    template: &FilterSpec,
    bandwidth_ghz: f64,
    target: f64,
) -> Result<f64> {
    let base = template.with_fwhm(bandwidth_ghz);
    let clean = filtered_visibility(source, alignment, splitter, &FilterSpec {
        back_reflection_db: None,
        ..base
    })?;
    if !(target > 0.0 && target < clean.visibility) {
        return Err(Error::invalid(
            "target",
            format!("must lie in (0, {:.4}) for this configuration", clean.visibility),
        ));
    }
    // factor(T, ρ) is monotone in ρ; solve for ρ directly, then convert.
    let needed = clean.visibility / target - 1.0;
    let t = clean.transmission;
    let rho = needed.sqrt() * t / (1.0 - t);
    Ok(-10.0 * rho.log10())
}
