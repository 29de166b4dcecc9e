//! Run configuration: the TOML/JSON document, flag overrides, and resolution
//! into core types.
//!
//! Durations are FWHM in ps, bandwidths in GHz. Chirp is given either as
//! `beta_ps2` or as the measured `spectral_fwhm_ghz`, never both.

use std::path::Path;

use hom_core::filter::{FilterShape, FilterSpec};
use hom_core::keyrate::{PhaseErrorMap, RateModel};
use hom_core::montecarlo::TimingDrift;
use hom_core::pulse::{chirp_from_spectrum, spectral_fwhm_closed_form};
use hom_core::{
    fwhm_to_sigma, AlignmentParams, DetectorSpec, ExperimentConfig, PhaseDifference, PhaseMode, PulseParams,
    SplitterSpec, FWHM_PER_SIGMA,
};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    pub n_pulses: u64,
    pub histogram_span: u32,
    pub thermal_intensity: bool,
    pub pulse: PulseConfig,
    /// Fields set here override `pulse` for laser B.
    pub source_b: Option<PulseOverride>,
    pub alignment: AlignmentConfig,
    pub splitter: SplitterConfig,
    pub filter: Option<FilterConfig>,
    pub detectors: DetectorConfig,
    pub drift: Option<DriftConfig>,
    pub sweep: SweepConfig,
    pub keyrate: KeyRateConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 1,
            n_pulses: 1_000_000,
            histogram_span: 10,
            thermal_intensity: false,
            pulse: PulseConfig::default(),
            source_b: None,
            alignment: AlignmentConfig::default(),
            splitter: SplitterConfig::default(),
            filter: None,
            detectors: DetectorConfig::default(),
            drift: None,
            sweep: SweepConfig::default(),
            keyrate: KeyRateConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PulseConfig {
    pub pulse_fwhm_ps: f64,
    pub beta_ps2: Option<f64>,
    pub spectral_fwhm_ghz: Option<f64>,
    pub nu0_thz: f64,
    pub mean_photons: f64,
    /// Fixed carrier phase; random per pulse when absent.
    pub fixed_phase_rad: Option<f64>,
}

impl Default for PulseConfig {
    fn default() -> Self {
        PulseConfig {
            pulse_fwhm_ps: 30.0,
            beta_ps2: None,
            spectral_fwhm_ghz: None,
            nu0_thz: 0.0,
            mean_photons: 0.05,
            fixed_phase_rad: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseOverride {
    pub pulse_fwhm_ps: Option<f64>,
    pub beta_ps2: Option<f64>,
    pub spectral_fwhm_ghz: Option<f64>,
    pub nu0_thz: Option<f64>,
    pub mean_photons: Option<f64>,
    pub fixed_phase_rad: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AlignmentConfig {
    pub delta_t_ps: f64,
    pub jitter_fwhm_ps: f64,
    pub jitter_is_differential: bool,
    /// Fixed phase difference; averaged when absent.
    pub delta_phi_rad: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SplitterConfig {
    pub transmittance: f64,
}

impl Default for SplitterConfig {
    fn default() -> Self {
        SplitterConfig { transmittance: 0.5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeName {
    Gaussian,
    FlatTop,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterConfig {
    pub fwhm_ghz: f64,
    #[serde(default = "default_shape")]
    pub shape: ShapeName,
    #[serde(default = "default_order")]
    pub order: u32,
    #[serde(default)]
    pub center_offset_ghz: f64,
    #[serde(default)]
    pub back_reflection_db: Option<f64>,
}

fn default_shape() -> ShapeName {
    ShapeName::Gaussian
}

fn default_order() -> u32 {
    4
}

impl FilterConfig {
    pub fn gaussian(fwhm_ghz: f64) -> Self {
        FilterConfig {
            fwhm_ghz,
            shape: ShapeName::Gaussian,
            order: 4,
            center_offset_ghz: 0.0,
            back_reflection_db: None,
        }
    }

    pub fn to_spec(&self) -> FilterSpec {
        FilterSpec {
            center_offset_ghz: self.center_offset_ghz,
            fwhm_ghz: self.fwhm_ghz,
            shape: match self.shape {
                ShapeName::Gaussian => FilterShape::Gaussian,
                ShapeName::FlatTop => FilterShape::FlatTop { order: self.order },
            },
            back_reflection_db: self.back_reflection_db,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetectorConfig {
    pub efficiency: f64,
    pub dark_count_prob: f64,
    pub paralyzable: bool,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig {
            efficiency: 0.05,
            dark_count_prob: 0.0,
            paralyzable: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriftConfig {
    pub amplitude_ps: f64,
    pub period_cycles: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub bandwidth: BandwidthSweep,
    pub misalignment: MisalignmentSweep,
    pub heatmap: HeatmapSweep,
    /// Adds a Monte-Carlo column to curve sweeps.
    pub monte_carlo: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BandwidthSweep {
    pub min_ghz: f64,
    pub max_ghz: f64,
    pub points: usize,
    pub log_spaced: bool,
}

impl Default for BandwidthSweep {
    fn default() -> Self {
        BandwidthSweep {
            min_ghz: 5.0,
            max_ghz: 2000.0,
            points: 40,
            log_spaced: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MisalignmentSweep {
    pub min_ps: f64,
    pub max_ps: f64,
    pub points: usize,
}

impl Default for MisalignmentSweep {
    fn default() -> Self {
        MisalignmentSweep {
            min_ps: -60.0,
            max_ps: 60.0,
            points: 121,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HeatmapSweep {
    pub beta_min_ps2: f64,
    pub beta_max_ps2: f64,
    pub beta_points: usize,
    pub delta_t_min_ps: f64,
    pub delta_t_max_ps: f64,
    pub delta_t_points: usize,
    /// Relative key-rate levels; 0 traces the zero-rate boundary.
    pub levels: Vec<f64>,
}

impl Default for HeatmapSweep {
    fn default() -> Self {
        HeatmapSweep {
            beta_min_ps2: 0.0,
            beta_max_ps2: 0.01,
            beta_points: 41,
            delta_t_min_ps: 0.0,
            delta_t_max_ps: 30.0,
            delta_t_points: 61,
            levels: vec![0.5, 0.1, 0.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KeyRateConfig {
    pub phase_error_slope: f64,
    pub phase_error_offset: f64,
    /// `[visibility, phase_error]` pairs; replaces the linear map when set.
    pub phase_error_table: Option<Vec<[f64; 2]>>,
    /// Visibilities evaluated by the `keyrate` command.
    pub visibilities: Vec<f64>,
}

impl Default for KeyRateConfig {
    fn default() -> Self {
        KeyRateConfig {
            phase_error_slope: -1.0,
            phase_error_offset: 0.5,
            phase_error_table: None,
            visibilities: (0..=50).map(|k| k as f64 / 100.0).collect(),
        }
    }
}

impl KeyRateConfig {
    pub fn rate_model(&self) -> Result<RateModel, CliError> {
        let map = match &self.phase_error_table {
            Some(t) => PhaseErrorMap::Table(t.iter().map(|p| (p[0], p[1])).collect()),
            None => PhaseErrorMap::Linear {
                slope: self.phase_error_slope,
                offset: self.phase_error_offset,
            },
        };
        let m = RateModel { phase_error_map: map };
        m.validate().map_err(|e| CliError::config(format!("keyrate: {e}")))?;
        Ok(m)
    }
}

/// Which chirp key a flag or document sets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Chirp {
    Beta(f64),
    SpectralFwhm(f64),
}

/// Command-line values that take precedence over the document.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub n_pulses: Option<u64>,
    pub pulse_fwhm_ps: Option<f64>,
    pub chirp: Option<Chirp>,
    pub mean_photons: Option<f64>,
    pub delta_t_ps: Option<f64>,
    pub jitter_fwhm_ps: Option<f64>,
    pub jitter_is_differential: bool,
    pub filter_ghz: Option<f64>,
    pub filter_shape: Option<ShapeName>,
    pub back_reflection_db: Option<f64>,
    pub no_filter: bool,
    pub efficiency: Option<f64>,
    pub dark_count_prob: Option<f64>,
    pub transmittance: Option<f64>,
    pub thermal_intensity: bool,
    pub monte_carlo: bool,
}

impl RunConfig {
    /// Parses a document; `.json` files are JSON, everything else TOML.
    pub fn parse(text: &str, path: &Path) -> Result<Self, CliError> {
        let cfg: RunConfig = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(text).map_err(|e| CliError::Config {
                message: e.to_string(),
                line: Some(e.line()),
            })?
        } else {
            toml::from_str(text).map_err(|e| CliError::Config {
                line: e.span().map(|s| line_of_offset(text, s.start)),
                message: e.message().to_string(),
            })?
        };
        cfg.check_chirp()
            .map_err(|e| e.at_line(line_of_key(text, "beta_ps2").or(line_of_key(text, "spectral_fwhm_ghz"))))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text, path)
    }

    fn check_chirp(&self) -> Result<(), CliError> {
        if self.pulse.beta_ps2.is_some() && self.pulse.spectral_fwhm_ghz.is_some() {
            return Err(CliError::config("pulse: beta_ps2 and spectral_fwhm_ghz are mutually exclusive"));
        }
        if let Some(b) = &self.source_b {
            if b.beta_ps2.is_some() && b.spectral_fwhm_ghz.is_some() {
                return Err(CliError::config("source_b: beta_ps2 and spectral_fwhm_ghz are mutually exclusive"));
            }
        }
        Ok(())
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(v) = o.seed {
            self.seed = v;
        }
        if let Some(v) = o.n_pulses {
            self.n_pulses = v;
        }
        if let Some(v) = o.pulse_fwhm_ps {
            self.pulse.pulse_fwhm_ps = v;
        }
        match o.chirp {
            Some(Chirp::Beta(b)) => {
                self.pulse.beta_ps2 = Some(b);
                self.pulse.spectral_fwhm_ghz = None;
            }
            Some(Chirp::SpectralFwhm(w)) => {
                self.pulse.spectral_fwhm_ghz = Some(w);
                self.pulse.beta_ps2 = None;
            }
            None => {}
        }
        if let Some(v) = o.mean_photons {
            self.pulse.mean_photons = v;
        }
        if let Some(v) = o.delta_t_ps {
            self.alignment.delta_t_ps = v;
        }
        if let Some(v) = o.jitter_fwhm_ps {
            self.alignment.jitter_fwhm_ps = v;
        }
        self.alignment.jitter_is_differential |= o.jitter_is_differential;
        if o.no_filter {
            self.filter = None;
        }
        if let Some(v) = o.filter_ghz {
            match &mut self.filter {
                Some(f) => f.fwhm_ghz = v,
                None => self.filter = Some(FilterConfig::gaussian(v)),
            }
        }
        if let Some(f) = &mut self.filter {
            if let Some(s) = o.filter_shape {
                f.shape = s;
            }
            if let Some(db) = o.back_reflection_db {
                f.back_reflection_db = Some(db);
            }
        }
        if let Some(v) = o.efficiency {
            self.detectors.efficiency = v;
        }
        if let Some(v) = o.dark_count_prob {
            self.detectors.dark_count_prob = v;
        }
        if let Some(v) = o.transmittance {
            self.splitter.transmittance = v;
        }
        self.thermal_intensity |= o.thermal_intensity;
        self.sweep.monte_carlo |= o.monte_carlo;
    }

    /// Resolves into the core experiment description.
    pub fn resolve(&self) -> Result<ExperimentConfig, CliError> {
        self.check_chirp()?;
        let a = resolve_pulse(&self.pulse, "pulse")?;
        let b = match &self.source_b {
            None => a,
            Some(o) => {
                let (beta, spectral) = match (o.beta_ps2, o.spectral_fwhm_ghz) {
                    (None, None) => (self.pulse.beta_ps2, self.pulse.spectral_fwhm_ghz),
                    other => other,
                };
                let merged = PulseConfig {
                    pulse_fwhm_ps: o.pulse_fwhm_ps.unwrap_or(self.pulse.pulse_fwhm_ps),
                    beta_ps2: beta,
                    spectral_fwhm_ghz: spectral,
                    nu0_thz: o.nu0_thz.unwrap_or(self.pulse.nu0_thz),
                    mean_photons: o.mean_photons.unwrap_or(self.pulse.mean_photons),
                    fixed_phase_rad: o.fixed_phase_rad.or(self.pulse.fixed_phase_rad),
                };
                resolve_pulse(&merged, "source_b")?
            }
        };

        let al = &self.alignment;
        let mut alignment = AlignmentParams::new(al.delta_t_ps, al.jitter_fwhm_ps).map_err(section("alignment"))?;
        alignment.jitter_is_differential = al.jitter_is_differential;
        if let Some(phi) = al.delta_phi_rad {
            alignment.delta_phi = PhaseDifference::Fixed(phi);
        }

        let detector = DetectorSpec {
            efficiency: self.detectors.efficiency,
            dark_count_prob: self.detectors.dark_count_prob,
            paralyzable: self.detectors.paralyzable,
        };
        let cfg = ExperimentConfig {
            source_a: a,
            source_b: b,
            alignment,
            splitter: SplitterSpec::new(self.splitter.transmittance).map_err(section("splitter"))?,
            filter: self.filter.as_ref().map(FilterConfig::to_spec),
            detectors: [detector; 2],
            n_pulses: self.n_pulses,
            seed: self.seed,
            histogram_span: self.histogram_span,
            thermal_intensity: self.thermal_intensity,
            drift: self.drift.as_ref().map(|d| TimingDrift {
                amplitude_ps: d.amplitude_ps,
                period_cycles: d.period_cycles,
            }),
        };
        cfg.validate().map_err(|e| CliError::config(e.to_string()))?;
        Ok(cfg)
    }

    /// The document after overrides plus the derived internal quantities.
    pub fn echo(&self, resolved: Option<&ExperimentConfig>) -> serde_json::Value {
        let pulse = |p: &PulseParams| {
            json!({
                "tau_p_ps": p.tau_p,
                "pulse_fwhm_ps": p.tau_p * FWHM_PER_SIGMA,
                "beta_ps2": p.beta,
                "spectral_fwhm_ghz": spectral_fwhm_closed_form(p),
                "nu0_thz": p.nu0,
                "mean_photons": p.mean_photons,
                "phase_mode": p.phase_mode,
            })
        };
        json!({
            "document": self,
            "resolved": resolved.map(|c| json!({
                "source_a": pulse(&c.source_a),
                "source_b": pulse(&c.source_b),
                "alignment": c.alignment,
                "jitter_sigma_per_laser_ps": c.alignment.per_laser_sigma(),
                "splitter": c.splitter,
                "filter": c.filter,
                "detectors": c.detectors,
            })),
        })
    }
}

fn resolve_pulse(p: &PulseConfig, name: &'static str) -> Result<PulseParams, CliError> {
    if !(p.pulse_fwhm_ps > 0.0 && p.pulse_fwhm_ps.is_finite()) {
        return Err(CliError::config(format!("{name}: pulse_fwhm_ps must be positive")));
    }
    let tau = fwhm_to_sigma(p.pulse_fwhm_ps);
    let beta = match (p.beta_ps2, p.spectral_fwhm_ghz) {
        (Some(b), None) => b,
        (None, Some(w)) => chirp_from_spectrum(tau, w).map_err(section(name))?,
        (None, None) => {
            return Err(CliError::config(format!(
                "{name}: specify the chirp with beta_ps2 or spectral_fwhm_ghz"
            )))
        }
        (Some(_), Some(_)) => {
            return Err(CliError::config(format!(
                "{name}: beta_ps2 and spectral_fwhm_ghz are mutually exclusive"
            )))
        }
    };
    let phase_mode = p.fixed_phase_rad.map_or(PhaseMode::RandomUniform, PhaseMode::Fixed);
    let out = PulseParams::new(tau, beta)
        .map_err(section(name))?
        .with_nu0(p.nu0_thz)
        .with_mean_photons(p.mean_photons)
        .with_phase_mode(phase_mode);
    out.validate().map_err(section(name))?;
    Ok(out)
}

fn section(name: &'static str) -> impl Fn(hom_core::Error) -> CliError {
    move |e| CliError::config(format!("{name}: {e}"))
}

fn line_of_offset(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// First line whose key is `key` (TOML `key =` or JSON `"key":`).
fn line_of_key(text: &str, key: &str) -> Option<usize> {
    text.lines().position(|l| {
        let t = l.trim_start().trim_start_matches('"');
        t.strip_prefix(key)
            .is_some_and(|rest| rest.trim_start().trim_start_matches('"').trim_start().starts_with(['=', ':']))
    })
    .map(|i| i + 1)
}
