//! Browser bindings: the misalignment curve, the filter-bandwidth curve and
//! the chirp/misalignment key-rate map, all from the closed-form model.
//!
//! Each binding wraps a plain Rust function returning `Result<_, String>`,
//! which keeps the logic testable off the browser.

use hom_core::filter::{filtered_overlap, visibility_vs_bandwidth_sweep, back_reflection_factor};
use hom_core::interference::{misalignment_sweep_for_model, OverlapModel};
use hom_core::keyrate::{self, visibility_contours, RateModel};
use hom_core::pulse::chirp_from_spectrum;
use hom_core::sweep::{lin_space, log_space};
use hom_core::{fwhm_to_sigma, AlignmentParams, FilterSpec, PulseParams, SplitterSpec};
use wasm_bindgen::prelude::*;

/// A swept curve: parameter values and visibilities of equal length.
#[wasm_bindgen]
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    params: Vec<f64>,
    values: Vec<f64>,
}

#[wasm_bindgen]
impl Curve {
    pub fn params(&self) -> Vec<f64> {
        self.params.clone()
    }

    pub fn values(&self) -> Vec<f64> {
        self.values.clone()
    }
}

/// Visibility and relative key rate on a `(β, Δt)` grid, row-major with one
/// row per delay, plus contour polylines.
#[wasm_bindgen]
#[derive(Debug, Clone, PartialEq)]
pub struct RateMap {
    betas: Vec<f64>,
    delta_ts: Vec<f64>,
    visibility: Vec<f64>,
    r_rel: Vec<f64>,
    contours: Vec<(f64, Vec<f64>)>,
}

#[wasm_bindgen]
impl RateMap {
    pub fn betas(&self) -> Vec<f64> {
        self.betas.clone()
    }

    pub fn delta_ts(&self) -> Vec<f64> {
        self.delta_ts.clone()
    }

    pub fn visibility(&self) -> Vec<f64> {
        self.visibility.clone()
    }

    pub fn r_rel(&self) -> Vec<f64> {
        self.r_rel.clone()
    }

    pub fn levels(&self) -> Vec<f64> {
        self.contours.iter().map(|c| c.0).collect()
    }

    /// Contour `k` as flat `[β, Δt, β, Δt, …]` with `NaN, NaN` between
    /// polylines.
    pub fn contour(&self, k: usize) -> Vec<f64> {
        self.contours.get(k).map(|c| c.1.clone()).unwrap_or_default()
    }
}

fn source(pulse_fwhm_ps: f64, spectral_fwhm_ghz: f64) -> Result<PulseParams, String> {
    let tau = fwhm_to_sigma(pulse_fwhm_ps);
    let beta = chirp_from_spectrum(tau, spectral_fwhm_ghz).map_err(|e| e.to_string())?;
    PulseParams::new(tau, beta).map_err(|e| e.to_string())
}

fn check_points(points: usize) -> Result<(), String> {
    if (2..=2000).contains(&points) {
        Ok(())
    } else {
        Err(format!("points must lie in 2..=2000, got {points}"))
    }
}

/// Jitter-averaged visibility against misalignment. `filter_ghz <= 0` means
/// no filter.
pub fn misalignment(
    pulse_fwhm_ps: f64,
    spectral_fwhm_ghz: f64,
    jitter_fwhm_ps: f64,
    filter_ghz: f64,
    max_delta_t_ps: f64,
    points: usize,
) -> Result<Curve, String> {
    check_points(points)?;
    let p = source(pulse_fwhm_ps, spectral_fwhm_ghz)?;
    let alignment = AlignmentParams::new(0.0, jitter_fwhm_ps).map_err(|e| e.to_string())?;
    let model = if filter_ghz > 0.0 {
        filtered_overlap(&p, &FilterSpec::gaussian(filter_ghz)).map_err(|e| e.to_string())?.0
    } else {
        OverlapModel::for_pulses(&p, &p).map_err(|e| e.to_string())?
    };
    let dts = lin_space(-max_delta_t_ps, max_delta_t_ps, points);
    let sweep = misalignment_sweep_for_model(&model, &alignment, &SplitterSpec::balanced(), &dts);
    Ok(Curve {
        params: dts,
        values: sweep.model_values(),
    })
}

/// Visibility against Gaussian filter bandwidth on a log grid.
/// `back_reflection_db <= 0` disables back-reflection.
pub fn bandwidth(
    pulse_fwhm_ps: f64,
    spectral_fwhm_ghz: f64,
    jitter_fwhm_ps: f64,
    back_reflection_db: f64,
    min_ghz: f64,
    max_ghz: f64,
    points: usize,
) -> Result<Curve, String> {
    check_points(points)?;
    if !(min_ghz > 0.0 && max_ghz > min_ghz) {
        return Err("need 0 < min_ghz < max_ghz".into());
    }
    let p = source(pulse_fwhm_ps, spectral_fwhm_ghz)?;
    let alignment = AlignmentParams::new(0.0, jitter_fwhm_ps).map_err(|e| e.to_string())?;
    let mut template = FilterSpec::gaussian(max_ghz);
    if back_reflection_db > 0.0 {
        template = template.with_back_reflection(back_reflection_db);
    }
    let bws = log_space(min_ghz, max_ghz, points);
    let sweep = visibility_vs_bandwidth_sweep(&p, &alignment, &SplitterSpec::balanced(), &template, &bws)
        .map_err(|e| e.to_string())?;
    Ok(Curve {
        params: bws,
        values: sweep.model_values(),
    })
}

/// Key-rate map for `0 ≤ β ≤ beta_max`, `0 ≤ Δt ≤ delta_t_max` with contours
/// at the relative rates in `levels`.
pub fn rate_map(
    pulse_fwhm_ps: f64,
    jitter_fwhm_ps: f64,
    beta_max_ps2: f64,
    delta_t_max_ps: f64,
    beta_points: usize,
    delta_t_points: usize,
    levels: &[f64],
) -> Result<RateMap, String> {
    check_points(beta_points)?;
    check_points(delta_t_points)?;
    if beta_points * delta_t_points > 250_000 {
        return Err("grid too large".into());
    }
    let betas = lin_space(0.0, beta_max_ps2, beta_points);
    let dts = lin_space(0.0, delta_t_max_ps, delta_t_points);
    let alignment = AlignmentParams::new(0.0, jitter_fwhm_ps).map_err(|e| e.to_string())?;
    let map = visibility_contours(
        levels,
        &betas,
        &dts,
        fwhm_to_sigma(pulse_fwhm_ps),
        &alignment,
        &SplitterSpec::balanced(),
        &RateModel::default(),
    )
    .map_err(|e| e.to_string())?;
    let contours = map
        .contours
        .iter()
        .map(|c| {
            let mut flat = Vec::new();
            for (k, line) in c.polylines.iter().enumerate() {
                if k > 0 {
                    flat.extend([f64::NAN, f64::NAN]);
                }
                flat.extend(line.iter().flat_map(|&(b, t)| [b, t]));
            }
            (c.level, flat)
        })
        .collect();
    Ok(RateMap {
        betas,
        delta_ts: dts,
        visibility: map.cells.iter().map(|c| c.visibility).collect(),
        r_rel: map.cells.iter().map(|c| c.r_rel).collect(),
        contours,
    })
}

/// Visibility penalty factor of back-reflection for a given transmission.
pub fn back_reflection_penalty(transmission: f64, back_reflection_db: f64) -> f64 {
    back_reflection_factor(transmission, &FilterSpec::gaussian(1.0).with_back_reflection(back_reflection_db))
}

#[wasm_bindgen(js_name = misalignmentCurve)]
pub fn misalignment_curve(
    pulse_fwhm_ps: f64,
    spectral_fwhm_ghz: f64,
    jitter_fwhm_ps: f64,
    filter_ghz: f64,
    max_delta_t_ps: f64,
    points: usize,
) -> Result<Curve, JsError> {
    misalignment(pulse_fwhm_ps, spectral_fwhm_ghz, jitter_fwhm_ps, filter_ghz, max_delta_t_ps, points)
        .map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = bandwidthCurve)]
pub fn bandwidth_curve(
    pulse_fwhm_ps: f64,
    spectral_fwhm_ghz: f64,
    jitter_fwhm_ps: f64,
    back_reflection_db: f64,
    min_ghz: f64,
    max_ghz: f64,
    points: usize,
) -> Result<Curve, JsError> {
    bandwidth(pulse_fwhm_ps, spectral_fwhm_ghz, jitter_fwhm_ps, back_reflection_db, min_ghz, max_ghz, points)
        .map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = keyRateMap)]
pub fn key_rate_map(
    pulse_fwhm_ps: f64,
    jitter_fwhm_ps: f64,
    beta_max_ps2: f64,
    delta_t_max_ps: f64,
    beta_points: usize,
    delta_t_points: usize,
    levels: Vec<f64>,
) -> Result<RateMap, JsError> {
    rate_map(pulse_fwhm_ps, jitter_fwhm_ps, beta_max_ps2, delta_t_max_ps, beta_points, delta_t_points, &levels)
        .map_err(|e| JsError::new(&e))
}

/// Relative key rate for a visibility in `[0, 0.5]`; `NaN` outside.
#[wasm_bindgen(js_name = relativeKeyRate)]
pub fn relative_key_rate(visibility: f64) -> f64 {
    keyrate::relative_key_rate(visibility, &RateModel::default()).unwrap_or(f64::NAN)
}

/// Chirp (ps⁻²) matching a measured spectral width; `NaN` below the
/// transform limit.
#[wasm_bindgen(js_name = chirpFromSpectrum)]
pub fn chirp_from_spectrum_js(pulse_fwhm_ps: f64, spectral_fwhm_ghz: f64) -> f64 {
    chirp_from_spectrum(fwhm_to_sigma(pulse_fwhm_ps), spectral_fwhm_ghz).unwrap_or(f64::NAN)
}
