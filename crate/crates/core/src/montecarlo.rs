//! Seeded Monte-Carlo simulation of the two-laser interference experiment.
//!
//! Every clock cycle gets its own random stream, derived from the run seed
//! and the cycle index, so results do not depend on how cycles are split
//! across threads. Per cycle the simulation draws both optical phases, the
//! emission jitter of both lasers and, optionally, thermal intensity
//! fluctuations; it then evaluates the mean photon number at both splitter
//! outputs and samples threshold-detector clicks. Coincidences are counted
//! between detector C at cycle `n` and detector D at cycle `n + k` for
//! `|k| ≤ K`.
//!
//! Alongside the sampled counts, the simulation accumulates the click
//! probabilities themselves (`Σ p_c(n)·p_d(n+k)`), which gives a low-noise
//! estimate of the histogram the click model converges to.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::filter::{filter_gaussian_closed_form, filter_numeric, grid_for_filtered, FilterShape, FilterSpec};
use crate::interference::{
    AlignmentParams, OverlapModel, OverlapTable, PhaseDifference, SplitterSpec,
};
use crate::pulse::{sample_field, PhaseMode, PulseParams};

/// Cycles per work unit.
const CHUNK: u64 = 1 << 15;

/// Minimum mean side-bin count for a visibility estimate.
pub const MIN_SIDE_COUNTS: f64 = 100.0;

/// Minimum zero-delay coincidences for a g²(0) estimate.
pub const MIN_G2_COINCIDENCES: u64 = 100;

/// Threshold single-photon detector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorSpec {
    pub efficiency: f64,
    /// Dark-count probability per clock cycle.
    pub dark_count_prob: f64,
    /// One-cycle paralyzable dead time: any photon arrival blocks the next
    /// cycle. `false` means no dead time.
    pub paralyzable: bool,
}

impl DetectorSpec {
    pub fn new(efficiency: f64, dark_count_prob: f64) -> Result<Self> {
        let d = DetectorSpec {
            efficiency,
            dark_count_prob,
            paralyzable: false,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.efficiency) {
            return Err(Error::invalid("efficiency", format!("must lie in [0, 1], got {}", self.efficiency)));
        }
        if !(0.0..1.0).contains(&self.dark_count_prob) {
            return Err(Error::invalid(
                "dark_count_prob",
                format!("must lie in [0, 1), got {}", self.dark_count_prob),
            ));
        }
        Ok(())
    }

    /// Click probability for a Poissonian input of `mean_photons`.
    pub fn click_probability(&self, mean_photons: f64) -> f64 {
        1.0 - (1.0 - self.dark_count_prob) * (-self.efficiency * mean_photons.max(0.0)).exp()
    }
}

/// Slow sinusoidal wander of the systematic delay.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimingDrift {
    pub amplitude_ps: f64,
    pub period_cycles: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Laser A; `mean_photons` is counted at the splitter input, after the
    /// filter.
    pub source_a: PulseParams,
    pub source_b: PulseParams,
    pub alignment: AlignmentParams,
    pub splitter: SplitterSpec,
    pub filter: Option<FilterSpec>,
    /// Detectors behind outputs C and D.
    pub detectors: [DetectorSpec; 2],
    pub n_pulses: u64,
    pub seed: u64,
    /// Histogram covers clock delays `-K..=K`.
    pub histogram_span: u32,
    /// Exponentially distributed pulse energies (thermal light) instead of a
    /// fixed mean.
    pub thermal_intensity: bool,
    pub drift: Option<TimingDrift>,
}

impl ExperimentConfig {
    /// Two identical sources with balanced splitter and ideal detectors.
    pub fn symmetric(source: PulseParams, alignment: AlignmentParams, detector: DetectorSpec, n_pulses: u64, seed: u64) -> Self {
        ExperimentConfig {
            source_a: source,
            source_b: source,
            alignment,
            splitter: SplitterSpec::balanced(),
            filter: None,
            detectors: [detector; 2],
            n_pulses,
            seed,
            histogram_span: 10,
            thermal_intensity: false,
            drift: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.source_a.validate()?;
        self.source_b.validate()?;
        self.alignment.validate()?;
        self.splitter.validate()?;
        if let Some(f) = &self.filter {
            f.validate()?;
        }
        for d in &self.detectors {
            d.validate()?;
        }
        if self.n_pulses < 1 {
            return Err(Error::invalid("n_pulses", "must be at least 1"));
        }
        if self.histogram_span < 1 {
            return Err(Error::invalid("histogram_span", "must be at least 1"));
        }
        if let Some(d) = &self.drift {
            if !(d.amplitude_ps.is_finite() && d.period_cycles.is_finite() && d.period_cycles > 0.0) {
                return Err(Error::invalid("drift", "needs a finite amplitude and a positive period"));
            }
        }
        Ok(())
    }

    /// Non-fatal remarks about the configuration.
    pub fn warnings(&self) -> Vec<String> {
        [("A", &self.source_a), ("B", &self.source_b)]
            .iter()
            .filter(|(_, p)| p.mean_photons > 0.2)
            .map(|(name, p)| {
                format!(
                    "source {name}: {} photons per pulse is far from the attenuated regime",
                    p.mean_photons
                )
            })
            .collect()
    }

    /// Overlap model of the pulses as they reach the splitter.
    pub fn overlap_model(&self) -> Result<OverlapModel> {
        let (a, b) = (&self.source_a, &self.source_b);
        match &self.filter {
            None => OverlapModel::for_pulses(a, b),
            Some(f) if f.shape == FilterShape::Gaussian && f.center_offset_ghz == 0.0 => {
                OverlapModel::for_pulses(&filter_gaussian_closed_form(a, f)?, &filter_gaussian_closed_form(b, f)?)
            }
            Some(f) => {
                let wider = if a.tau_p >= b.tau_p { a } else { b };
                let grid = grid_for_filtered(wider, f.fwhm_ghz)?;
                let fa = filter_numeric(&sample_field(&a.with_nu0(0.0), &grid, 0.0, 0.0)?, f)?;
                let fb = filter_numeric(&sample_field(&b.with_nu0(b.nu0 - a.nu0), &grid, 0.0, 0.0)?, f)?;
                Ok(OverlapModel::Tabulated(OverlapTable::from_fields(&fa.field, &fb.field)?))
            }
        }
    }

    /// Visibility the histogram estimate converges to in the weak-pulse
    /// limit, without dark counts or dead time.
    pub fn model_visibility(&self) -> Result<f64> {
        self.validate()?;
        let (ma, mb) = (self.source_a.mean_photons, self.source_b.mean_photons);
        let r = self.splitter.transmittance;
        let uncorrelated = (r * ma + (1.0 - r) * mb) * ((1.0 - r) * ma + r * mb);
        if uncorrelated <= 0.0 {
            return Ok(0.0);
        }
        let model = self.overlap_model()?;
        let balanced = model.averaged_visibility(&self.alignment, &SplitterSpec::balanced());
        // balanced = ⟨|J|²⟩/2
        Ok(4.0 * r * (1.0 - r) * ma * mb * balanced / uncorrelated)
    }
}

/// What happened in one clock cycle.
#[derive(Debug, Clone, Copy)]
struct Cycle {
    /// Normalised output intensities for unit inputs.
    intensity: (f64, f64),
    prob: [f64; 2],
    arrival: [bool; 2],
}

struct Engine<'a> {
    cfg: &'a ExperimentConfig,
    model: OverlapModel,
    base: ChaCha8Rng,
    jitter_sigma: f64,
}

impl<'a> Engine<'a> {
    fn new(cfg: &'a ExperimentConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Engine {
            cfg,
            model: cfg.overlap_model()?,
            base: ChaCha8Rng::seed_from_u64(cfg.seed),
            jitter_sigma: cfg.alignment.per_laser_sigma(),
        })
    }

    fn cycle(&self, n: u64) -> Cycle {
        let cfg = self.cfg;
        let mut rng = self.base.clone();
        rng.set_stream(n);
        rng.set_word_pos(0);

        // Fixed draw order keeps streams aligned across configurations.
        let u_phase: [f64; 2] = [rng.random(), rng.random()];
        let z: [f64; 2] = [rng.sample(StandardNormal), rng.sample(StandardNormal)];
        let u_energy: [f64; 2] = [rng.random(), rng.random()];
        let u_click: [f64; 2] = [rng.random(), rng.random()];

        let phase = |mode: PhaseMode, u: f64| match mode {
            PhaseMode::RandomUniform => 2.0 * PI * u,
            PhaseMode::Fixed(phi) => phi,
        };
        let delta_phi = match cfg.alignment.delta_phi {
            PhaseDifference::Fixed(phi) => phi,
            PhaseDifference::Averaged => {
                phase(cfg.source_b.phase_mode, u_phase[1]) - phase(cfg.source_a.phase_mode, u_phase[0])
            }
        };

        let jitter = if cfg.alignment.jitter_is_differential {
            self.jitter_sigma * z[1]
        } else {
            self.jitter_sigma * (z[1] - z[0])
        };
        let drift = cfg
            .drift
            .map_or(0.0, |d| d.amplitude_ps * (2.0 * PI * n as f64 / d.period_cycles).sin());
        let delta_t = cfg.alignment.delta_t_sys + drift + jitter;

        let (ea, eb) = if cfg.thermal_intensity {
            (-(1.0 - u_energy[0]).ln(), -(1.0 - u_energy[1]).ln())
        } else {
            (1.0, 1.0)
        };
        let r = cfg.splitter.transmittance;
        let fringe = (self.model.overlap(delta_t) * Complex64::from_polar(1.0, delta_phi)).re;
        let ports = |a: f64, b: f64| {
            let cross = 2.0 * (r * (1.0 - r) * a * b).sqrt() * fringe;
            (
                (r * a + (1.0 - r) * b + cross).max(0.0),
                ((1.0 - r) * a + r * b - cross).max(0.0),
            )
        };
        let intensity = ports(ea, eb);
        let photons = ports(ea * cfg.source_a.mean_photons, eb * cfg.source_b.mean_photons);

        let prob = [
            cfg.detectors[0].click_probability(photons.0),
            cfg.detectors[1].click_probability(photons.1),
        ];
        Cycle {
            intensity,
            prob,
            arrival: [u_click[0] < prob[0], u_click[1] < prob[1]],
        }
    }
}

#[derive(Debug, Clone)]
struct Tally {
    counts: Vec<u64>,
    expected: Vec<f64>,
    singles: [u64; 2],
    expected_singles: [f64; 2],
}

impl Tally {
    fn zero(bins: usize) -> Self {
        Tally {
            counts: vec![0; bins],
            expected: vec![0.0; bins],
            singles: [0; 2],
            expected_singles: [0.0; 2],
        }
    }

    fn absorb(&mut self, other: &Tally) {
        self.counts.iter_mut().zip(&other.counts).for_each(|(a, b)| *a += b);
        self.expected.iter_mut().zip(&other.expected).for_each(|(a, b)| *a += b);
        for d in 0..2 {
            self.singles[d] += other.singles[d];
            self.expected_singles[d] += other.expected_singles[d];
        }
    }
}

fn tally_chunk(engine: &Engine, start: u64, end: u64) -> Tally {
    let cfg = engine.cfg;
    let n_total = cfg.n_pulses;
    let span = cfg.histogram_span as u64;
    let lo = start.saturating_sub(span + 1);
    let hi = (end + span).min(n_total);
    let cycles: Vec<Cycle> = (lo..hi).map(|n| engine.cycle(n)).collect();

    // Registered clicks and their probabilities after dead time.
    let mut clicks = vec![[false; 2]; cycles.len()];
    let mut probs = vec![[0.0; 2]; cycles.len()];
    for (i, c) in cycles.iter().enumerate() {
        for d in 0..2 {
            let (blocked, p_free) = match (cfg.detectors[d].paralyzable, i.checked_sub(1)) {
                (true, Some(prev)) => (cycles[prev].arrival[d], 1.0 - cycles[prev].prob[d]),
                _ => (false, 1.0),
            };
            clicks[i][d] = c.arrival[d] && !blocked;
            probs[i][d] = c.prob[d] * p_free;
        }
    }

    let bins = 2 * span as usize + 1;
    let mut t = Tally::zero(bins);
    for n in start..end {
        let i = (n - lo) as usize;
        for d in 0..2 {
            t.singles[d] += clicks[i][d] as u64;
            t.expected_singles[d] += probs[i][d];
        }
        let k_lo = -(span.min(n) as i64);
        let k_hi = span.min(n_total - 1 - n) as i64;
        for k in k_lo..=k_hi {
            let j = (i as i64 + k) as usize;
            let bin = (k + span as i64) as usize;
            t.counts[bin] += (clicks[i][0] && clicks[j][1]) as u64;
            t.expected[bin] += probs[i][0] * probs[j][1];
        }
    }
    t
}

/// Coincidence counts against clock delay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoincidenceHistogram {
    /// `K`: the histogram covers delays `-K..=K` clocks.
    pub span: u32,
    /// Counts indexed by `delay + K`.
    pub counts: Vec<u64>,
    /// Single counts of detectors C and D.
    pub singles: [u64; 2],
    pub n_pulses: u64,
    /// Summed click-probability products per bin.
    pub expected: Vec<f64>,
    pub expected_singles: [f64; 2],
}

impl CoincidenceHistogram {
    /// Builds a histogram from counts alone, e.g. measured data.
    pub fn from_counts(counts: Vec<u64>, singles: [u64; 2], n_pulses: u64) -> Result<Self> {
        if counts.len() < 3 || counts.len().is_multiple_of(2) {
            return Err(Error::invalid("counts", "need an odd number of bins, at least three"));
        }
        let span = (counts.len() / 2) as u32;
        let expected = counts.iter().map(|&c| c as f64).collect();
        Ok(CoincidenceHistogram {
            span,
            counts,
            singles,
            n_pulses,
            expected,
            expected_singles: [singles[0] as f64, singles[1] as f64],
        })
    }

    pub fn delays(&self) -> impl Iterator<Item = i64> + '_ {
        let k = self.span as i64;
        -k..=k
    }

    pub fn at(&self, delay: i64) -> u64 {
        self.counts[(delay + self.span as i64) as usize]
    }

    pub fn zero_delay(&self) -> u64 {
        self.at(0)
    }

    fn side_counts(&self) -> impl Iterator<Item = u64> + '_ {
        let mid = self.span as usize;
        self.counts.iter().enumerate().filter(move |(i, _)| *i != mid).map(|(_, &c)| c)
    }

    /// Visibility from the accumulated click probabilities.
    pub fn expected_visibility(&self) -> f64 {
        let mid = self.span as usize;
        let side: f64 = self.expected.iter().enumerate().filter(|(i, _)| *i != mid).map(|(_, e)| e).sum::<f64>()
            / (self.expected.len() - 1) as f64;
        1.0 - self.expected[mid] / side
    }
}

/// Runs the pulse-train simulation.
pub fn simulate_run(cfg: &ExperimentConfig) -> Result<CoincidenceHistogram> {
    let engine = Engine::new(cfg)?;
    let n_chunks = cfg.n_pulses.div_ceil(CHUNK);
    let tallies: Vec<Tally> = (0..n_chunks)
        .into_par_iter()
        .map(|c| tally_chunk(&engine, c * CHUNK, ((c + 1) * CHUNK).min(cfg.n_pulses)))
        .collect();
    let mut total = Tally::zero(2 * cfg.histogram_span as usize + 1);
    tallies.iter().for_each(|t| total.absorb(t));
    Ok(CoincidenceHistogram {
        span: cfg.histogram_span,
        counts: total.counts,
        singles: total.singles,
        n_pulses: cfg.n_pulses,
        expected: total.expected,
        expected_singles: total.expected_singles,
    })
}

/// How the uncorrelated coincidence level is estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// Mean of the non-zero delay bins.
    SideBins,
    /// Product of the singles rates.
    Singles,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VisibilityEstimate {
    pub visibility: f64,
    pub stderr: f64,
    /// Side-bin flatness statistic and its p-value.
    pub chi_square: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// `V = 1 − C(0)/C̄` with Poisson error propagation.
pub fn visibility_from_histogram(h: &CoincidenceHistogram) -> Result<VisibilityEstimate> {
    visibility_from_histogram_with(h, Normalization::SideBins)
}

pub fn visibility_from_histogram_with(
    h: &CoincidenceHistogram,
    normalization: Normalization,
) -> Result<VisibilityEstimate> {
    let side: Vec<f64> = h.side_counts().map(|c| c as f64).collect();
    let nonzero = side.iter().filter(|&&c| c > 0.0).count();
    if nonzero < 2 {
        return Err(Error::InsufficientCounts(format!("{nonzero} non-empty side bins, need 2")));
    }
    let m = side.len() as f64;
    let mean = side.iter().sum::<f64>() / m;
    if mean < MIN_SIDE_COUNTS {
        return Err(Error::InsufficientCounts(format!(
            "mean side-bin count {mean:.1} is below {MIN_SIDE_COUNTS}"
        )));
    }
    let chi_square: f64 = side.iter().map(|c| (c - mean).powi(2) / mean).sum();
    let dof = side.len() - 1;
    let p_value = 1.0 - ChiSquared::new(dof as f64).expect("dof ≥ 1").cdf(chi_square);

    let zero = h.zero_delay() as f64;
    let (reference, reference_rel_var) = match normalization {
        Normalization::SideBins => (mean, 1.0 / (m * mean)),
        Normalization::Singles => {
            let [sc, sd] = h.singles.map(|s| s as f64);
            (sc * sd / h.n_pulses as f64, 1.0 / sc.max(1.0) + 1.0 / sd.max(1.0))
        }
    };
    let ratio = zero / reference;
    let stderr = if zero > 0.0 {
        ratio * (1.0 / zero + reference_rel_var).sqrt()
    } else {
        1.0 / reference
    };
    Ok(VisibilityEstimate {
        visibility: 1.0 - ratio,
        stderr,
        chi_square,
        dof,
        p_value,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct G2Estimate {
    pub g2: f64,
    pub stderr: f64,
    pub coincidences: u64,
}

/// g²(0) of a single source split on the splitter: `P_cd / (P_c·P_d)`.
pub fn g2_zero(cfg: &ExperimentConfig) -> Result<G2Estimate> {
    let active = [cfg.source_a.mean_photons, cfg.source_b.mean_photons]
        .iter()
        .filter(|&&m| m > 0.0)
        .count();
    if active != 1 {
        return Err(Error::invalid("mean_photons", "g²(0) needs exactly one active source"));
    }
    let h = simulate_run(cfg)?;
    let c = h.zero_delay();
    let [sc, sd] = h.singles;
    if c < MIN_G2_COINCIDENCES || sc == 0 || sd == 0 {
        return Err(Error::InsufficientCounts(format!(
            "{c} zero-delay coincidences, need {MIN_G2_COINCIDENCES}"
        )));
    }
    let n = h.n_pulses as f64;
    let (pcd, pc, pd) = (c as f64 / n, sc as f64 / n, sd as f64 / n);
    let g2 = pcd / (pc * pd);
    // Delta method on ln g with per-cycle Bernoulli (co)variances.
    let var_ln = ((1.0 - pcd) / pcd - (1.0 - pc) / pc - (1.0 - pd) / pd + 2.0 * (pcd - pc * pd) / (pc * pd)) / n;
    Ok(G2Estimate {
        g2,
        stderr: g2 * var_ln.max(0.0).sqrt(),
        coincidences: c,
    })
}

/// Unattenuated output intensities `(I_c, I_d)` for the first `n_cycles`
/// cycles, using the same random streams as [`simulate_run`].
pub fn classical_trace(cfg: &ExperimentConfig, n_cycles: u64) -> Result<Vec<(f64, f64)>> {
    let engine = Engine::new(cfg)?;
    Ok((0..n_cycles)
        .into_par_iter()
        .map(|n| engine.cycle(n).intensity)
        .collect())
}

/// CSV `delay_clocks,coincidences`.
pub fn histogram_csv(h: &CoincidenceHistogram) -> String {
    let mut out = String::from("delay_clocks,coincidences\n");
    for (k, c) in h.delays().zip(&h.counts) {
        out.push_str(&format!("{k},{c}\n"));
    }
    out
}

/// JSON sidecar for an exported histogram.
pub fn histogram_metadata(
    h: &CoincidenceHistogram,
    estimate: Option<&VisibilityEstimate>,
    seed: u64,
    config_echo: serde_json::Value,
) -> serde_json::Value {
    serde_json::json!({
        "config": config_echo,
        "seed": seed,
        "n_pulses": h.n_pulses,
        "histogram_span": h.span,
        "singles": { "c": h.singles[0], "d": h.singles[1] },
        "visibility": estimate.map(|e| e.visibility),
        "stderr": estimate.map(|e| e.stderr),
        "chi_square": estimate.map(|e| e.chi_square),
        "chi_square_p_value": estimate.map(|e| e.p_value),
    })
}
