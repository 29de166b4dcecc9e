//! Beam-splitter outputs and two-pulse interference visibility.
//!
//! Two unit-energy pulses with overlap `J = ∫E_a*(t)E_b(t)dt` and phase
//! difference `Δφ` leave a lossless splitter of power transmittance `r` with
//! detector-integrated intensities
//!
//! ```text
//! I_c,d = 1 ± 2√(r(1−r)) · Re(J·e^{iΔφ})
//! ```
//!
//! For equal-shape chirped Gaussians `J` is real and equals the fringe
//! amplitude `x(Δt) = exp[−Δt²(1 + 16β²τ_p⁴)/(8τ_p²)]`. Averaging the
//! coincidence rate `⟨I_c·I_d⟩` over a uniform `Δφ` and normalising by the
//! uncorrelated rate gives the visibility `V = 2r(1−r)·x²`, i.e. `x²/2` for a
//! balanced splitter.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pulse::{sample_field, PulseParams, SampledField, TimeGrid};
use crate::sweep::{SweepRecord, SweepResult};
use crate::FWHM_PER_SIGMA;

/// Lossless beam splitter described by its power transmittance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitterSpec {
    pub transmittance: f64,
}

impl SplitterSpec {
    pub fn new(transmittance: f64) -> Result<Self> {
        let s = SplitterSpec { transmittance };
        s.validate()?;
        Ok(s)
    }

    pub fn balanced() -> Self {
        SplitterSpec { transmittance: 0.5 }
    }

    pub fn validate(&self) -> Result<()> {
        let r = self.transmittance;
        if !(r > 0.0 && r < 1.0) {
            return Err(Error::invalid("transmittance", format!("must lie in (0, 1), got {r}")));
        }
        Ok(())
    }

    /// Fringe amplitude scale `2√(r(1−r))`; 1 for a balanced splitter.
    pub fn fringe_scale(&self) -> f64 {
        let r = self.transmittance;
        2.0 * (r * (1.0 - r)).sqrt()
    }

    /// Visibility ceiling `2r(1−r)` for perfectly overlapping pulses.
    pub fn max_visibility(&self) -> f64 {
        let r = self.transmittance;
        2.0 * r * (1.0 - r)
    }
}

impl Default for SplitterSpec {
    fn default() -> Self {
        Self::balanced()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseDifference {
    /// Uniformly random `Δφ`, averaged over.
    Averaged,
    /// Fixed `Δφ`, radians.
    Fixed(f64),
}

/// Temporal alignment of the two pulses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlignmentParams {
    /// Systematic delay `t_b − t_a`, ps.
    pub delta_t_sys: f64,
    /// FWHM of the Gaussian emission-time jitter, ps.
    pub jitter_fwhm_per_laser: f64,
    pub delta_phi: PhaseDifference,
    /// Treat `jitter_fwhm_per_laser` as the FWHM of the delay difference
    /// itself rather than of each laser.
    pub jitter_is_differential: bool,
}

impl AlignmentParams {
    pub fn new(delta_t_sys: f64, jitter_fwhm_per_laser: f64) -> Result<Self> {
        let a = AlignmentParams {
            delta_t_sys,
            jitter_fwhm_per_laser,
            delta_phi: PhaseDifference::Averaged,
            jitter_is_differential: false,
        };
        a.validate()?;
        Ok(a)
    }

    pub fn with_delay(mut self, delta_t_sys: f64) -> Self {
        self.delta_t_sys = delta_t_sys;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !self.delta_t_sys.is_finite() {
            return Err(Error::invalid("delta_t_sys", "must be finite"));
        }
        let j = self.jitter_fwhm_per_laser;
        if !(j.is_finite() && j >= 0.0) {
            return Err(Error::invalid("jitter_fwhm", format!("must be non-negative, got {j}")));
        }
        if let PhaseDifference::Fixed(phi) = self.delta_phi {
            if !phi.is_finite() {
                return Err(Error::invalid("delta_phi", "must be finite"));
            }
        }
        Ok(())
    }

    /// Standard deviation of a single laser's emission time, ps.
    pub fn per_laser_sigma(&self) -> f64 {
        self.jitter_fwhm_per_laser / FWHM_PER_SIGMA
    }

    /// Variance of the delay `Δt` about `delta_t_sys`, ps².
    pub fn delay_variance(&self) -> f64 {
        let s = self.per_laser_sigma();
        if self.jitter_is_differential {
            s * s
        } else {
            2.0 * s * s
        }
    }
}

fn chirp_factor(tau_p: f64, beta: f64) -> f64 {
    let t2 = tau_p * tau_p;
    1.0 + 16.0 * beta * beta * t2 * t2
}

/// Coefficient `c` in `x² = exp(−c·Δt²)`.
fn overlap_decay(tau_p: f64, beta: f64) -> f64 {
    chirp_factor(tau_p, beta) / (4.0 * tau_p * tau_p)
}

/// Fringe amplitude of two equal-shape chirped Gaussians offset by `delta_t`.
pub fn fringe_amplitude(tau_p: f64, beta: f64, delta_t: f64) -> f64 {
    (-delta_t * delta_t * chirp_factor(tau_p, beta) / (8.0 * tau_p * tau_p)).exp()
}

/// Phase-averaged visibility for a balanced splitter, `x²/2`.
pub fn visibility_closed_form(tau_p: f64, beta: f64, delta_t: f64) -> f64 {
    let x = fringe_amplitude(tau_p, beta, delta_t);
    0.5 * x * x
}

/// Phase-averaged visibility for an arbitrary splitter, `2r(1−r)·x²`.
pub fn visibility_with_splitter(tau_p: f64, beta: f64, delta_t: f64, s: &SplitterSpec) -> f64 {
    let x = fringe_amplitude(tau_p, beta, delta_t);
    s.max_visibility() * x * x
}

/// `E[exp(−c·Δt²)]` for `Δt ~ N(mean, variance)`.
pub fn gaussian_mean_of_decay(c: f64, mean: f64, variance: f64) -> f64 {
    let d = 1.0 + 2.0 * c * variance;
    (-c * mean * mean / d).exp() / d.sqrt()
}

/// Visibility averaged over independent Gaussian emission jitter of both
/// lasers (balanced splitter).
pub fn jitter_averaged_visibility(
    tau_p: f64,
    beta: f64,
    delta_t_sys: f64,
    jitter_fwhm_per_laser: f64,
) -> f64 {
    let sigma = jitter_fwhm_per_laser / FWHM_PER_SIGMA;
    0.5 * gaussian_mean_of_decay(overlap_decay(tau_p, beta), delta_t_sys, 2.0 * sigma * sigma)
}

/// Phase- and jitter-averaged visibility of two copies of `pulse`.
pub fn averaged_visibility(pulse: &PulseParams, a: &AlignmentParams, s: &SplitterSpec) -> f64 {
    s.max_visibility()
        * gaussian_mean_of_decay(
            overlap_decay(pulse.tau_p, pulse.beta),
            a.delta_t_sys,
            a.delay_variance(),
        )
}

/// `∫E_a*(t)·E_b(t)dt` on a shared grid.
pub fn field_overlap(fa: &SampledField, fb: &SampledField) -> Result<Complex64> {
    if !fa.grid.matches(&fb.grid) {
        return Err(Error::GridMismatch);
    }
    let sum: Complex64 = fa
        .amplitude
        .iter()
        .zip(&fb.amplitude)
        .map(|(a, b)| a.conj() * b)
        .sum();
    Ok(sum * fa.grid.dt)
}

/// Detector-integrated output energies computed from the output fields
/// `c = √r·a + √(1−r)·b`, `d = √(1−r)·a − √r·b`.
pub fn splitter_outputs_numeric(
    fa: &SampledField,
    fb: &SampledField,
    s: &SplitterSpec,
) -> Result<(f64, f64)> {
    if !fa.grid.matches(&fb.grid) {
        return Err(Error::GridMismatch);
    }
    let (t, u) = (s.transmittance.sqrt(), (1.0 - s.transmittance).sqrt());
    let (ic, id) = fa
        .amplitude
        .iter()
        .zip(&fb.amplitude)
        .fold((0.0, 0.0), |(ic, id), (a, b)| {
            ((a * t + b * u).norm_sqr() + ic, (a * u - b * t).norm_sqr() + id)
        });
    Ok((ic * fa.grid.dt, id * fa.grid.dt))
}

/// Overlap of two pulses with `pb` delayed by `delta_t`, from sampled fields.
pub fn numeric_overlap(pa: &PulseParams, pb: &PulseParams, delta_t: f64) -> Result<Complex64> {
    let grid = TimeGrid::covering(&[(pa, 0.0), (pb, delta_t)])?;
    let reference = pa.nu0;
    let fa = sample_field(&pa.with_nu0(0.0), &grid, 0.0, 0.0)?;
    let fb = sample_field(&pb.with_nu0(pb.nu0 - reference), &grid, delta_t, 0.0)?;
    field_overlap(&fa, &fb)
}

/// Beam-splitter output intensities for unit-energy inputs.
///
/// Equal-shape pulses use the closed-form fringe amplitude; anything else
/// goes through [`numeric_overlap`].
pub fn bs_output_intensities(
    pa: &PulseParams,
    pb: &PulseParams,
    delta_t: f64,
    delta_phi: f64,
    s: &SplitterSpec,
) -> Result<(f64, f64)> {
    pa.validate()?;
    pb.validate()?;
    s.validate()?;
    let overlap = if pa.same_shape(pb) {
        Complex64::new(fringe_amplitude(pa.tau_p, pa.beta, delta_t), 0.0)
    } else {
        numeric_overlap(pa, pb, delta_t)?
    };
    let cross = s.fringe_scale() * (overlap * Complex64::from_polar(1.0, delta_phi)).re;
    Ok((1.0 + cross, 1.0 - cross))
}

/// `J(Δt)` tabulated on a uniform delay grid.
#[derive(Debug, Clone, PartialEq)]
pub struct OverlapTable {
    pub delta_t0: f64,
    pub step: f64,
    pub values: Vec<Complex64>,
}

impl OverlapTable {
    /// Cross-correlates two unit-energy fields on a shared grid. `fb` is the
    /// field of pulse B emitted at `t = 0`; the table holds
    /// `∫E_a*(t)·E_b(t − Δt)dt`.
    pub fn from_fields(fa: &SampledField, fb: &SampledField) -> Result<Self> {
        if !fa.grid.matches(&fb.grid) {
            return Err(Error::GridMismatch);
        }
        let n = fa.amplitude.len();
        let n_fft = (2 * n).next_power_of_two();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n_fft);
        let pad = |x: &[Complex64]| {
            let mut buf = vec![Complex64::new(0.0, 0.0); n_fft];
            buf[..n].copy_from_slice(x);
            forward.process(&mut buf);
            buf
        };
        let spec_a = pad(&fa.amplitude);
        let spec_b = pad(&fb.amplitude);
        let mut corr: Vec<Complex64> = spec_a.iter().zip(&spec_b).map(|(a, b)| a * b.conj()).collect();
        planner.plan_fft_inverse(n_fft).process(&mut corr);

        // corr[m] = N·Σ_i a_{i+m}·conj(b_i); J(m·dt) is its conjugate times dt.
        let dt = fa.grid.dt;
        let scale = dt / n_fft as f64;
        let values = (-(n as isize - 1)..n as isize)
            .map(|m| corr[m.rem_euclid(n_fft as isize) as usize].conj() * scale)
            .collect();
        Ok(OverlapTable {
            delta_t0: -((n - 1) as f64) * dt,
            step: dt,
            values,
        })
    }

    pub fn at(&self, delta_t: f64) -> Complex64 {
        let pos = (delta_t - self.delta_t0) / self.step;
        if pos.is_nan() || pos < 0.0 || pos > (self.values.len() - 1) as f64 {
            return Complex64::new(0.0, 0.0);
        }
        let i = (pos.floor() as usize).min(self.values.len() - 2);
        let frac = pos - i as f64;
        self.values[i] * (1.0 - frac) + self.values[i + 1] * frac
    }
}

/// How the overlap `J(Δt)` is evaluated for a pair of pulses.
#[derive(Debug, Clone, PartialEq)]
pub enum OverlapModel {
    ClosedForm { tau_p: f64, beta: f64 },
    Tabulated(OverlapTable),
}

impl OverlapModel {
    pub fn for_pulses(pa: &PulseParams, pb: &PulseParams) -> Result<Self> {
        if pa.same_shape(pb) {
            return Ok(OverlapModel::ClosedForm {
                tau_p: pa.tau_p,
                beta: pa.beta,
            });
        }
        let grid = TimeGrid::covering(&[(pa, 0.0), (pb, 0.0)])?;
        let fa = sample_field(&pa.with_nu0(0.0), &grid, 0.0, 0.0)?;
        let fb = sample_field(&pb.with_nu0(pb.nu0 - pa.nu0), &grid, 0.0, 0.0)?;
        Ok(OverlapModel::Tabulated(OverlapTable::from_fields(&fa, &fb)?))
    }

    pub fn overlap(&self, delta_t: f64) -> Complex64 {
        match self {
            OverlapModel::ClosedForm { tau_p, beta } => {
                Complex64::new(fringe_amplitude(*tau_p, *beta, delta_t), 0.0)
            }
            OverlapModel::Tabulated(table) => table.at(delta_t),
        }
    }

    /// Phase- and jitter-averaged visibility.
    pub fn averaged_visibility(&self, a: &AlignmentParams, s: &SplitterSpec) -> f64 {
        match self {
            OverlapModel::ClosedForm { tau_p, beta } => s.max_visibility()
                * gaussian_mean_of_decay(overlap_decay(*tau_p, *beta), a.delta_t_sys, a.delay_variance()),
            OverlapModel::Tabulated(_) => {
                let mean_sq = gaussian_average(a.delta_t_sys, a.delay_variance(), |dt| {
                    self.overlap(dt).norm_sqr()
                });
                s.max_visibility() * mean_sq
            }
        }
    }
}

/// `E[g(Δt)]` for `Δt ~ N(mean, variance)` by trapezoidal quadrature over ±10σ.
pub(crate) fn gaussian_average(mean: f64, variance: f64, g: impl Fn(f64) -> f64) -> f64 {
    if variance <= 0.0 {
        return g(mean);
    }
    const NODES: usize = 1601;
    let sigma = variance.sqrt();
    let h = 20.0 * sigma / (NODES - 1) as f64;
    let norm = 1.0 / (sigma * (2.0 * PI).sqrt());
    (0..NODES)
        .map(|k| {
            let z = -10.0 * sigma + k as f64 * h;
            let w = if k == 0 || k == NODES - 1 { 0.5 } else { 1.0 };
            w * g(mean + z) * (-0.5 * z * z / variance).exp()
        })
        .sum::<f64>()
        * h
        * norm
}

/// Visibility against systematic misalignment for two copies of `pulse`.
pub fn visibility_vs_misalignment_sweep(
    pulse: &PulseParams,
    alignment: &AlignmentParams,
    splitter: &SplitterSpec,
    delta_ts: &[f64],
) -> SweepResult {
    let model = OverlapModel::ClosedForm {
        tau_p: pulse.tau_p,
        beta: pulse.beta,
    };
    misalignment_sweep_for_model(&model, alignment, splitter, delta_ts)
}

/// Misalignment sweep for an arbitrary overlap model, e.g. filtered pulses.
pub fn misalignment_sweep_for_model(
    model: &OverlapModel,
    alignment: &AlignmentParams,
    splitter: &SplitterSpec,
    delta_ts: &[f64],
) -> SweepResult {
    let records = delta_ts
        .par_iter()
        .map(|&dt| SweepRecord::model(dt, model.averaged_visibility(&alignment.with_delay(dt), splitter)))
        .collect();
    SweepResult::new("delta_t_ps", records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pulse::TimeGrid;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    const TAU: f64 = 12.7;
    const BETA_70: f64 = 0.007188;

    fn pulse(beta: f64) -> PulseParams {
        PulseParams::new(TAU, beta).unwrap()
    }

    #[test]
    fn complete_interference_when_aligned() {
        for beta in [0.0, 0.007, 0.02] {
            let p = pulse(beta);
            let (c, d) = bs_output_intensities(&p, &p, 0.0, 0.0, &SplitterSpec::balanced()).unwrap();
            assert!((c - 2.0).abs() < 1e-15 && d.abs() < 1e-15);
        }
    }

    #[test]
    fn quadrature_phase_splits_evenly() {
        let p = pulse(0.007);
        for dt in [0.0, 5.0, 30.0] {
            let (c, d) =
                bs_output_intensities(&p, &p, dt, PI / 2.0, &SplitterSpec::balanced()).unwrap();
            assert!((c - 1.0).abs() < 1e-15 && (d - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn ten_ps_offset_unchirped() {
        let p = pulse(0.0);
        let (c, _) = bs_output_intensities(&p, &p, 10.0, 0.0, &SplitterSpec::balanced()).unwrap();
        let exponent: f64 = -100.0 / (8.0 * 161.29);
        assert!((exponent + 0.0775).abs() < 1e-4);
        assert!((c - (1.0 + exponent.exp())).abs() < 1e-14);
    }

    #[test]
    fn fringe_amplitude_examples() {
        assert_eq!(fringe_amplitude(TAU, 0.01, 0.0), 1.0);
        let x = fringe_amplitude(TAU, 0.0, 2.0 * 2f64.sqrt() * TAU);
        assert!((x - (-1f64).exp()).abs() < 1e-15);
        assert_eq!(fringe_amplitude(TAU, 0.01, 7.0), fringe_amplitude(TAU, -0.01, -7.0));
    }

    #[test]
    fn visibility_examples() {
        for beta in [0.0, 0.003, 0.05] {
            assert_eq!(visibility_closed_form(TAU, beta, 0.0), 0.5);
        }
        let v = visibility_closed_form(TAU, 0.0, 2.0 * TAU);
        assert!((v - 0.5 * (-1f64).exp()).abs() < 1e-15);
        assert!((v - 0.1839).abs() < 1e-4);
    }

    #[test]
    fn zero_jitter_reduces_to_closed_form() {
        for dt in [0.0, 4.0, -17.0] {
            let (a, b) = (jitter_averaged_visibility(TAU, BETA_70, dt, 0.0), visibility_closed_form(TAU, BETA_70, dt));
            assert!((a / b - 1.0).abs() < 1e-12, "{a} vs {b}");
        }
    }

    /// Adaptive Simpson quadrature; independent of the closed-form average.
    fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
        #[allow(clippy::too_many_arguments)]
        fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
            let m = 0.5 * (a + b);
            let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
            let (flm, frm) = (f(lm), f(rm));
            let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
            let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
            if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
                return left + right + (left + right - whole) / 15.0;
            }
            rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
                + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
        }
        let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
        let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
        rec(f, a, b, fa, fm, fb, whole, tol, 50)
    }

    #[test]
    fn jitter_average_matches_quadrature() {
        for &(beta, dt_sys, jitter) in &[(BETA_70, 0.0, 9.3), (0.0002, 10.0, 9.3), (0.004, -25.0, 20.0)] {
            let sigma = jitter / FWHM_PER_SIGMA;
            let var = 2.0 * sigma * sigma;
            let s = var.sqrt();
            let integrand = |u: f64| {
                let density = (-(u - dt_sys).powi(2) / (2.0 * var)).exp() / (s * (2.0 * PI).sqrt());
                visibility_closed_form(TAU, beta, u) * density
            };
            let quad = adaptive_simpson(&integrand, dt_sys - 12.0 * s, dt_sys + 12.0 * s, 1e-12);
            let closed = jitter_averaged_visibility(TAU, beta, dt_sys, jitter);
            assert!((quad - closed).abs() < 1e-8, "{quad} vs {closed}");
        }
    }

    #[test]
    fn jitter_average_matches_monte_carlo() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let sigma = 9.3 / FWHM_PER_SIGMA;
        let n = 1_000_000;
        let samples: Vec<f64> = (0..n)
            .map(|_| {
                let ja: f64 = rng.sample(StandardNormal);
                let jb: f64 = rng.sample(StandardNormal);
                visibility_closed_form(TAU, 0.004, 5.0 + sigma * (jb - ja))
            })
            .collect();
        let mean = samples.iter().sum::<f64>() / n as f64;
        let var = samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let se = (var / n as f64).sqrt();
        let closed = jitter_averaged_visibility(TAU, 0.004, 5.0, 9.3);
        assert!((mean - closed).abs() < 3.0 * se, "{mean} vs {closed} ± {se}");
    }

    #[test]
    fn differential_jitter_halves_the_variance() {
        let mut a = AlignmentParams::new(0.0, 9.3).unwrap();
        let per_laser = a.delay_variance();
        a.jitter_is_differential = true;
        assert!((per_laser - 2.0 * a.delay_variance()).abs() < 1e-12);
    }

    #[test]
    fn self_overlap_and_disjoint_pulses() {
        let grid = TimeGrid::centered(400.0, 0.25).unwrap();
        let p = pulse(0.007);
        let fa = sample_field(&p, &grid, -150.0, 0.3).unwrap();
        let j = field_overlap(&fa, &fa).unwrap();
        assert!((j - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        let far = sample_field(&p, &grid, 150.0, 0.3).unwrap();
        assert!(field_overlap(&fa, &far).unwrap().norm() < 1e-6);
        let flipped = sample_field(&p, &grid, -150.0, 0.3 + PI).unwrap();
        assert!((field_overlap(&fa, &flipped).unwrap() + Complex64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn overlap_requires_matching_grids() {
        let p = pulse(0.0);
        let fa = sample_field(&p, &TimeGrid::default(), 0.0, 0.0).unwrap();
        let fb = sample_field(&p, &TimeGrid::centered(200.0, 0.25).unwrap(), 0.0, 0.0).unwrap();
        assert_eq!(field_overlap(&fa, &fb), Err(Error::GridMismatch));
    }

    #[test]
    fn numeric_overlap_matches_fringe_amplitude() {
        for k in 0..=8 {
            let dt = -40.0 + 10.0 * k as f64;
            for m in 0..=4 {
                let beta = 0.005 * m as f64;
                let p = pulse(beta);
                let grid = TimeGrid::covering(&[(&p, 0.0), (&p, dt)]).unwrap();
                let fa = sample_field(&p, &grid, 0.0, 0.0).unwrap();
                let fb = sample_field(&p, &grid, dt, 0.0).unwrap();
                let j = field_overlap(&fa, &fb).unwrap();
                let x = fringe_amplitude(TAU, beta, dt);
                assert!((j.norm() - x).abs() < 1e-4, "Δt={dt} β={beta}: {} vs {x}", j.norm());
            }
        }
    }

    #[test]
    fn splitter_scaling_matches_numeric_fields() {
        let p = pulse(0.006);
        let grid = TimeGrid::default();
        for r in [0.5, 0.53, 0.2] {
            let s = SplitterSpec::new(r).unwrap();
            for (dt, phi) in [(0.0, 0.0), (8.0, 0.7), (-15.0, 2.5)] {
                let fa = sample_field(&p, &grid, 0.0, 0.0).unwrap();
                let fb = sample_field(&p, &grid, dt, phi).unwrap();
                let numeric = splitter_outputs_numeric(&fa, &fb, &s).unwrap();
                let closed = bs_output_intensities(&p, &p, dt, phi, &s).unwrap();
                assert!((numeric.0 - closed.0).abs() < 1e-4, "r={r} {numeric:?} {closed:?}");
                assert!((numeric.1 - closed.1).abs() < 1e-4);
            }
        }
    }

    #[test]
    fn unbalanced_splitter_lowers_the_ceiling() {
        let s = SplitterSpec::new(0.53).unwrap();
        let v = visibility_with_splitter(TAU, 0.0, 0.0, &s);
        assert!(v < 0.5);
        assert!((v - 2.0 * 0.53 * 0.47).abs() < 1e-15);
        let balanced = visibility_with_splitter(TAU, 0.003, 4.0, &SplitterSpec::balanced());
        assert_eq!(balanced, visibility_closed_form(TAU, 0.003, 4.0));
        assert!(SplitterSpec::new(1.0).is_err());
        assert!(SplitterSpec::new(0.0).is_err());
    }

    #[test]
    fn unequal_pulses_use_numeric_overlap() {
        let pa = pulse(0.004);
        let pb = PulseParams::new(15.0, 0.001).unwrap();
        let (c, d) = bs_output_intensities(&pa, &pb, 3.0, 0.0, &SplitterSpec::balanced()).unwrap();
        assert!((c + d - 2.0).abs() < 1e-12);
        // Mismatched shapes cannot interfere completely.
        assert!(c < 2.0 - 1e-3);
    }

    #[test]
    fn overlap_table_matches_direct_overlap() {
        let pa = pulse(0.004);
        let pb = PulseParams::new(15.0, -0.002).unwrap().with_nu0(0.01);
        let table = match OverlapModel::for_pulses(&pa, &pb).unwrap() {
            OverlapModel::Tabulated(t) => t,
            other => panic!("expected a table, got {other:?}"),
        };
        for dt in [-30.0, -7.3, 0.0, 4.1, 22.0] {
            let direct = numeric_overlap(&pa, &pb, dt).unwrap();
            assert!((table.at(dt) - direct).norm() < 1e-4, "{dt}: {} vs {direct}", table.at(dt));
        }
    }

    #[test]
    fn tabulated_average_matches_closed_form() {
        let p = pulse(0.003);
        let grid = TimeGrid::default();
        let f = sample_field(&p, &grid, 0.0, 0.0).unwrap();
        let table = OverlapModel::Tabulated(OverlapTable::from_fields(&f, &f).unwrap());
        let a = AlignmentParams::new(6.0, 9.3).unwrap();
        let s = SplitterSpec::balanced();
        let numeric = table.averaged_visibility(&a, &s);
        let closed = averaged_visibility(&p, &a, &s);
        assert!((numeric - closed).abs() < 1e-4, "{numeric} vs {closed}");
    }

    #[test]
    fn misalignment_sweep_is_symmetric_bell() {
        let p = pulse(0.0002);
        let a = AlignmentParams::new(0.0, 9.3).unwrap();
        let dts: Vec<f64> = (-60..=60).map(|k| k as f64).collect();
        let sweep = visibility_vs_misalignment_sweep(&p, &a, &SplitterSpec::balanced(), &dts);
        let v: Vec<f64> = sweep.records.iter().map(|r| r.visibility_model).collect();
        for k in 0..60 {
            assert!((v[k] - v[120 - k]).abs() < 1e-15);
            assert!(v[k] <= v[k + 1]);
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn energy_conservation(
                dt in -80.0f64..80.0, phi in -10.0f64..10.0,
                beta in -0.03f64..0.03, r in 0.01f64..0.99,
            ) {
                let p = pulse(beta);
                let (c, d) = bs_output_intensities(&p, &p, dt, phi, &SplitterSpec::new(r).unwrap()).unwrap();
                prop_assert!((c + d - 2.0).abs() < 1e-12);
            }

            #[test]
            fn visibility_is_half_fringe_squared(tau in 1.0f64..60.0, beta in -0.05f64..0.05, dt in -100.0f64..100.0) {
                let x = fringe_amplitude(tau, beta, dt);
                prop_assert!((visibility_closed_form(tau, beta, dt) - 0.5 * x * x).abs() < 1e-12);
            }

            #[test]
            fn visibility_bounded_and_symmetric(
                tau in 1.0f64..60.0, beta in -0.05f64..0.05, dt in -100.0f64..100.0, jitter in 0.0f64..40.0,
            ) {
                let v = jitter_averaged_visibility(tau, beta, dt, jitter);
                prop_assert!((0.0..=0.5).contains(&v));
                prop_assert_eq!(v, jitter_averaged_visibility(tau, beta, -dt, jitter));
                prop_assert_eq!(v, jitter_averaged_visibility(tau, -beta, dt, jitter));
                let c = visibility_closed_form(tau, beta, dt);
                prop_assert!((0.0..=0.5).contains(&c));
            }
        }
    }
}
