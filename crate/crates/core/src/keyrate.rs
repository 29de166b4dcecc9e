//! Relative MDI-QKD key rate as a function of two-pulse visibility.
//!
//! The visibility sets the phase error rate `e_ph`; the key fraction is
//! `R = max(0, 1 − 2·h₂(e_ph))`, normalised to its value at the ideal
//! visibility 0.5. With the default map `e_ph = 0.5 − V` the rate vanishes
//! below V ≈ 0.389.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::contour::{iso_lines, Polyline};
use crate::error::{Error, Result};
use crate::interference::{averaged_visibility, AlignmentParams, SplitterSpec};
use crate::pulse::PulseParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseErrorMap {
    /// `e_ph = offset + slope·V`.
    Linear { slope: f64, offset: f64 },
    /// Piecewise-linear `(V, e_ph)` table, ascending in V.
    Table(Vec<(f64, f64)>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateModel {
    pub phase_error_map: PhaseErrorMap,
}

impl Default for RateModel {
    fn default() -> Self {
        RateModel {
            phase_error_map: PhaseErrorMap::Linear {
                slope: -1.0,
                offset: 0.5,
            },
        }
    }
}

impl RateModel {
    pub fn validate(&self) -> Result<()> {
        match &self.phase_error_map {
            PhaseErrorMap::Linear { slope, offset } => {
                if !(slope.is_finite() && offset.is_finite()) {
                    return Err(Error::invalid("phase_error_map", "coefficients must be finite"));
                }
            }
            PhaseErrorMap::Table(points) => {
                if points.len() < 2 {
                    return Err(Error::invalid("phase_error_map", "table needs at least two points"));
                }
                if points.windows(2).any(|w| w[1].0.partial_cmp(&w[0].0) != Some(std::cmp::Ordering::Greater)) {
                    return Err(Error::invalid("phase_error_map", "table must be strictly ascending in V"));
                }
            }
        }
        Ok(())
    }

    /// Phase error rate, clamped to `[0, 0.5]`.
    pub fn phase_error(&self, v: f64) -> f64 {
        let e = match &self.phase_error_map {
            PhaseErrorMap::Linear { slope, offset } => offset + slope * v,
            PhaseErrorMap::Table(points) => interpolate(points, v),
        };
        e.clamp(0.0, 0.5)
    }

    fn raw_rate(&self, v: f64) -> f64 {
        (1.0 - 2.0 * binary_entropy(self.phase_error(v))).max(0.0)
    }
}

fn interpolate(points: &[(f64, f64)], v: f64) -> f64 {
    let last = points.len() - 1;
    if v <= points[0].0 {
        return points[0].1;
    }
    if v >= points[last].0 {
        return points[last].1;
    }
    let k = points.partition_point(|p| p.0 <= v) - 1;
    let ((x0, y0), (x1, y1)) = (points[k], points[k + 1]);
    y0 + (v - x0) / (x1 - x0) * (y1 - y0)
}

/// Binary entropy in bits.
pub fn binary_entropy(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        return 0.0;
    }
    -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
}

/// Key rate relative to the rate at perfect interference.
pub fn relative_key_rate(v: f64, m: &RateModel) -> Result<f64> {
    if !(0.0..=0.5 + 1e-12).contains(&v) {
        return Err(Error::invalid("visibility", format!("must lie in [0, 0.5], got {v}")));
    }
    m.validate()?;
    let max = m.raw_rate(0.5);
    if max <= 0.0 {
        return Ok(0.0);
    }
    Ok((m.raw_rate(v.min(0.5)) / max).clamp(0.0, 1.0))
}

/// Largest visibility at which the key rate is still zero.
pub fn zero_rate_visibility(m: &RateModel) -> Result<f64> {
    m.validate()?;
    let (mut lo, mut hi) = (0.0, 0.5);
    if m.raw_rate(lo) > 0.0 {
        return Ok(0.0);
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if m.raw_rate(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(lo)
}

/// Visibility at which the relative rate reaches `level`, assuming the rate
/// does not decrease with visibility.
pub fn visibility_for_rate(level: f64, m: &RateModel) -> Result<f64> {
    if !(0.0..=1.0).contains(&level) {
        return Err(Error::invalid("level", format!("must lie in [0, 1], got {level}")));
    }
    let (mut lo, mut hi) = (zero_rate_visibility(m)?, 0.5);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if relative_key_rate(mid, m)? >= level {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeatmapCell {
    pub beta_ps2: f64,
    pub delta_t_ps: f64,
    pub visibility: f64,
    pub r_rel: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContourLevel {
    pub level: f64,
    /// Polylines of `(beta_ps2, delta_t_ps)` points.
    pub polylines: Vec<Polyline>,
}

/// Visibility and key-rate map over chirp and misalignment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeyRateMap {
    pub betas: Vec<f64>,
    pub delta_ts: Vec<f64>,
    /// Row-major, one row per delay.
    pub cells: Vec<HeatmapCell>,
    pub contours: Vec<ContourLevel>,
}

impl KeyRateMap {
    /// CSV `beta_ps2,delta_t_ps,visibility,r_rel`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("beta_ps2,delta_t_ps,visibility,r_rel\n");
        for c in &self.cells {
            out.push_str(&format!("{},{},{},{}\n", c.beta_ps2, c.delta_t_ps, c.visibility, c.r_rel));
        }
        out
    }

    pub fn contours_json(&self) -> serde_json::Value {
        serde_json::to_value(&self.contours).expect("contours serialise")
    }

    pub fn cell(&self, beta_index: usize, delta_t_index: usize) -> &HeatmapCell {
        &self.cells[delta_t_index * self.betas.len() + beta_index]
    }

    pub fn grid_of(&self, pick: impl Fn(&HeatmapCell) -> f64) -> Vec<Vec<f64>> {
        self.cells.chunks(self.betas.len()).map(|row| row.iter().map(&pick).collect()).collect()
    }
}

/// Evaluates visibility and key rate on the `(β, Δt)` grid and extracts the
/// key-rate iso-lines at `levels`. Jitter and splitter come from `alignment`
/// and `splitter`; the alignment's own delay is replaced by each grid delay.
pub fn visibility_contours(
    levels: &[f64],
    betas: &[f64],
    delta_ts: &[f64],
    tau_p: f64,
    alignment: &AlignmentParams,
    splitter: &SplitterSpec,
    model: &RateModel,
) -> Result<KeyRateMap> {
    if let Some(&bad) = levels.iter().find(|l| !(**l >= 0.0 && **l < 1.0)) {
        return Err(Error::invalid("levels", format!("must lie in [0, 1), got {bad}")));
    }
    alignment.validate()?;
    splitter.validate()?;
    model.validate()?;
    let base = PulseParams::new(tau_p, 0.0)?;
    for &b in betas {
        base.with_beta(b).validate()?;
    }

    let cells: Vec<HeatmapCell> = delta_ts
        .par_iter()
        .flat_map_iter(|&dt| {
            betas.iter().map(move |&beta| {
                let v = averaged_visibility(&base.with_beta(beta), &alignment.with_delay(dt), splitter);
                HeatmapCell {
                    beta_ps2: beta,
                    delta_t_ps: dt,
                    visibility: v,
                    r_rel: relative_key_rate(v.min(0.5), model).unwrap_or(0.0),
                }
            })
        })
        .collect();

    let mut map = KeyRateMap {
        betas: betas.to_vec(),
        delta_ts: delta_ts.to_vec(),
        cells,
        contours: vec![],
    };
    // The visibility surface is smooth where the rate is not, so contours
    // are traced on it at the matching visibility.
    let visibilities = map.grid_of(|c| c.visibility);
    map.contours = levels
        .iter()
        .map(|&level| {
            Ok(ContourLevel {
                level,
                polylines: iso_lines(betas, delta_ts, &visibilities, visibility_for_rate(level, model)?),
            })
        })
        .collect::<Result<_>>()?;
    Ok(map)
}
