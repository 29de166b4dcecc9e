use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::{Chirp, Overrides, ShapeName};

#[derive(Debug, Parser)]
#[command(name = "homsim", version, about = "Two-pulse interference simulator for gain-switched lasers")]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
    /// CSV plus an SVG rendering.
    Svg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepKind {
    Bandwidth,
    Misalignment,
    Heatmap,
}

impl SweepKind {
    pub fn name(self) -> &'static str {
        match self {
            SweepKind::Bandwidth => "bandwidth",
            SweepKind::Misalignment => "misalignment",
            SweepKind::Heatmap => "heatmap",
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Model visibility for one configuration.
    Visibility {
        /// Also run the Monte-Carlo simulation.
        #[arg(long)]
        mc: bool,
    },
    /// Visibility against filter bandwidth or misalignment, or the
    /// chirp/misalignment key-rate map.
    Sweep {
        #[arg(value_enum)]
        kind: SweepKind,
        /// Add a Monte-Carlo column to curve sweeps.
        #[arg(long)]
        mc: bool,
    },
    /// Simulate a pulse train and write the coincidence histogram.
    Hom,
    /// Relative key rate against visibility.
    Keyrate {
        /// Visibilities to evaluate (comma separated).
        #[arg(long = "visibility", value_delimiter = ',')]
        visibilities: Vec<f64>,
    },
    /// g²(0) of laser A alone.
    G2,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// TOML or JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; defaults to the machine parallelism.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,

    #[arg(long, global = true)]
    pub n_pulses: Option<u64>,
    #[arg(long, global = true)]
    pub pulse_fwhm_ps: Option<f64>,
    #[arg(long, global = true, conflicts_with = "spectral_fwhm_ghz", allow_negative_numbers = true)]
    pub beta_ps2: Option<f64>,
    #[arg(long, global = true)]
    pub spectral_fwhm_ghz: Option<f64>,
    #[arg(long, global = true)]
    pub mean_photons: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub delta_t_ps: Option<f64>,
    /// Per-laser timing jitter, FWHM.
    #[arg(long, global = true)]
    pub jitter_fwhm_ps: Option<f64>,
    /// Treat the jitter figure as the jitter of the delay difference.
    #[arg(long, global = true)]
    pub jitter_differential: bool,
    /// Filter bandwidth (FWHM); adds a Gaussian filter if none is configured.
    #[arg(long, global = true, conflicts_with = "no_filter")]
    pub filter_ghz: Option<f64>,
    #[arg(long, global = true, value_enum)]
    pub filter_shape: Option<FilterShapeArg>,
    #[arg(long, global = true)]
    pub back_reflection_db: Option<f64>,
    /// Drop any configured filter.
    #[arg(long, global = true)]
    pub no_filter: bool,
    #[arg(long, global = true)]
    pub efficiency: Option<f64>,
    #[arg(long, global = true)]
    pub dark_count_prob: Option<f64>,
    #[arg(long, global = true)]
    pub transmittance: Option<f64>,
    /// Thermal (exponential) pulse-energy statistics.
    #[arg(long, global = true)]
    pub thermal: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FilterShapeArg {
    Gaussian,
    FlatTop,
}

impl CommonArgs {
    pub fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            n_pulses: self.n_pulses,
            pulse_fwhm_ps: self.pulse_fwhm_ps,
            chirp: self
                .beta_ps2
                .map(Chirp::Beta)
                .or(self.spectral_fwhm_ghz.map(Chirp::SpectralFwhm)),
            mean_photons: self.mean_photons,
            delta_t_ps: self.delta_t_ps,
            jitter_fwhm_ps: self.jitter_fwhm_ps,
            jitter_is_differential: self.jitter_differential,
            filter_ghz: self.filter_ghz,
            filter_shape: self.filter_shape.map(|s| match s {
                FilterShapeArg::Gaussian => ShapeName::Gaussian,
                FilterShapeArg::FlatTop => ShapeName::FlatTop,
            }),
            back_reflection_db: self.back_reflection_db,
            no_filter: self.no_filter,
            efficiency: self.efficiency,
            dark_count_prob: self.dark_count_prob,
            transmittance: self.transmittance,
            thermal_intensity: self.thermal,
            monte_carlo: false,
        }
    }
}
