use std::path::{Path, PathBuf};

use hom_core::filter::{back_reflection_factor, filtered_overlap, visibility_vs_bandwidth_sweep};
use hom_core::interference::misalignment_sweep_for_model;
use hom_core::keyrate::{relative_key_rate, visibility_contours, zero_rate_visibility, KeyRateMap};
use hom_core::montecarlo::{
    g2_zero, histogram_csv, histogram_metadata, simulate_run, visibility_from_histogram, G2Estimate,
    VisibilityEstimate,
};
use hom_core::sweep::{lin_space, log_space};
use hom_core::{ExperimentConfig, FilterSpec, SweepResult};
use serde_json::json;

use crate::args::{Format, SweepKind};
use crate::config::RunConfig;
use crate::error::CliError;
use crate::plot::{heatmap_svg, LinePlot, Series};

/// Result of the `visibility` command.
#[derive(Debug, Clone, PartialEq)]
pub struct VisibilityReport {
    /// Fixed-delay visibility without jitter.
    pub model: f64,
    pub jitter_averaged: f64,
    /// Jitter-averaged visibility including the back-reflection penalty.
    pub observed: Option<f64>,
    pub monte_carlo: Option<VisibilityEstimate>,
}

impl VisibilityReport {
    pub fn line(&self) -> String {
        let mut s = format!("V_model={:.6} V_jitter_avg={:.6}", self.model, self.jitter_averaged);
        if let Some(o) = self.observed {
            s.push_str(&format!(" V_observed={o:.6}"));
        }
        if let Some(mc) = &self.monte_carlo {
            s.push_str(&format!(" V_mc={:.6} stderr={:.6}", mc.visibility, mc.stderr));
        }
        s
    }
}

fn back_reflection(cfg: &ExperimentConfig) -> Result<Option<f64>, CliError> {
    match &cfg.filter {
        Some(f) if f.back_reflection_db.is_some() => {
            let (_, t) = filtered_overlap(&cfg.source_a, f)?;
            Ok(Some(back_reflection_factor(t, f)))
        }
        _ => Ok(None),
    }
}

pub fn cmd_visibility(run: &RunConfig, monte_carlo: bool) -> Result<VisibilityReport, CliError> {
    let cfg = run.resolve()?;
    let model = cfg.overlap_model()?;
    let scale = cfg.splitter.max_visibility();
    let jitter_averaged = model.averaged_visibility(&cfg.alignment, &cfg.splitter);
    let monte_carlo = if monte_carlo {
        Some(visibility_from_histogram(&simulate_run(&cfg)?)?)
    } else {
        None
    };
    Ok(VisibilityReport {
        model: scale * model.overlap(cfg.alignment.delta_t_sys).norm_sqr(),
        jitter_averaged,
        observed: back_reflection(&cfg)?.map(|f| f * jitter_averaged),
        monte_carlo,
    })
}

fn write(path: PathBuf, contents: &str) -> Result<PathBuf, CliError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|source| CliError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    std::fs::write(&path, contents).map_err(|source| CliError::Io {
        path: path.clone(),
        source,
    })?;
    Ok(path)
}

fn pretty(v: &serde_json::Value) -> String {
    serde_json::to_string_pretty(v).expect("JSON values serialise") + "\n"
}

/// Writes the metadata sidecar next to the data files.
fn sidecar(
    out: &Path,
    stem: &str,
    run: &RunConfig,
    cfg: Option<&ExperimentConfig>,
    extra: serde_json::Value,
    files: &mut Vec<PathBuf>,
) -> Result<(), CliError> {
    let names: Vec<String> = files
        .iter()
        .filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
        .collect();
    let meta = json!({
        "generator": concat!("homsim ", env!("CARGO_PKG_VERSION")),
        "seed": run.seed,
        "outputs": names,
        "config": run.echo(cfg),
        "result": extra,
    });
    files.push(write(out.join(format!("{stem}.meta.json")), &pretty(&meta))?);
    Ok(())
}

fn curve_files(
    out: &Path,
    stem: &str,
    sweep: &SweepResult,
    format: Format,
    plot: impl FnOnce() -> LinePlot,
) -> Result<Vec<PathBuf>, CliError> {
    let mut files = Vec::new();
    match format {
        Format::Json => {
            let body = serde_json::to_value(sweep).expect("sweep serialises");
            files.push(write(out.join(format!("{stem}.json")), &pretty(&body))?);
        }
        Format::Csv | Format::Svg => files.push(write(out.join(format!("{stem}.csv")), &sweep.to_csv())?),
    }
    if format == Format::Svg {
        files.push(write(out.join(format!("{stem}.svg")), &plot().to_svg())?);
    }
    Ok(files)
}

fn sweep_plot(sweep: &SweepResult, title: &str, x_label: &str, log_x: bool) -> LinePlot {
    let mut series = vec![Series {
        label: "model".into(),
        points: sweep.records.iter().map(|r| (r.param, r.visibility_model)).collect(),
        errors: None,
    }];
    if sweep.has_monte_carlo() {
        let mc: Vec<_> = sweep
            .records
            .iter()
            .filter_map(|r| Some(((r.param, r.visibility_mc?), r.stderr.unwrap_or(0.0))))
            .collect();
        series.push(Series {
            label: "Monte Carlo".into(),
            points: mc.iter().map(|m| m.0).collect(),
            errors: Some(mc.iter().map(|m| m.1).collect()),
        });
    }
    LinePlot {
        title: title.into(),
        x_label: x_label.into(),
        y_label: "visibility".into(),
        log_x,
        series,
    }
}

/// Monte-Carlo column: one run per sweep point, each with its own seed.
fn add_monte_carlo(
    sweep: &mut SweepResult,
    base: &ExperimentConfig,
    configure: impl Fn(&mut ExperimentConfig, f64),
) -> Result<(), CliError> {
    for (i, record) in sweep.records.iter_mut().enumerate() {
        let mut cfg = base.clone();
        cfg.seed = base.seed.wrapping_add(i as u64);
        configure(&mut cfg, record.param);
        let est = visibility_from_histogram(&simulate_run(&cfg)?)?;
        record.visibility_mc = Some(est.visibility);
        record.stderr = Some(est.stderr);
    }
    Ok(())
}

/// Runs a sweep and writes its files into `out`. Returns the written paths.
pub fn cmd_sweep(kind: SweepKind, run: &RunConfig, out: &Path, format: Format) -> Result<Vec<PathBuf>, CliError> {
    let cfg = run.resolve()?;
    let stem = format!("sweep_{}", kind.name());
    let mut files;
    let extra;
    match kind {
        SweepKind::Bandwidth => {
            let s = &run.sweep.bandwidth;
            if s.points == 0 || !(s.min_ghz > 0.0 && s.max_ghz >= s.min_ghz) {
                return Err(CliError::config("sweep.bandwidth: need points ≥ 1 and 0 < min_ghz ≤ max_ghz"));
            }
            let bws = if s.log_spaced {
                log_space(s.min_ghz, s.max_ghz, s.points)
            } else {
                lin_space(s.min_ghz, s.max_ghz, s.points)
            };
            let template = cfg.filter.unwrap_or(FilterSpec::gaussian(s.max_ghz));
            let mut sweep = visibility_vs_bandwidth_sweep(&cfg.source_a, &cfg.alignment, &cfg.splitter, &template, &bws)?;
            if run.sweep.monte_carlo {
                add_monte_carlo(&mut sweep, &cfg, |c, bw| c.filter = Some(template.with_fwhm(bw)))?;
            }
            files = curve_files(out, &stem, &sweep, format, || {
                sweep_plot(&sweep, "Visibility vs filter bandwidth", "filter bandwidth (GHz)", s.log_spaced)
            })?;
            extra = json!({ "points": sweep.records.len(), "filter_template": template });
        }
        SweepKind::Misalignment => {
            let s = &run.sweep.misalignment;
            if s.points == 0 || s.max_ps < s.min_ps {
                return Err(CliError::config("sweep.misalignment: need points ≥ 1 and min_ps ≤ max_ps"));
            }
            let dts = lin_space(s.min_ps, s.max_ps, s.points);
            let model = cfg.overlap_model()?;
            let mut sweep = misalignment_sweep_for_model(&model, &cfg.alignment, &cfg.splitter, &dts);
            if let Some(f) = back_reflection(&cfg)? {
                sweep.records.iter_mut().for_each(|r| r.visibility_model *= f);
            }
            if run.sweep.monte_carlo {
                add_monte_carlo(&mut sweep, &cfg, |c, dt| c.alignment.delta_t_sys = dt)?;
            }
            files = curve_files(out, &stem, &sweep, format, || {
                sweep_plot(&sweep, "Visibility vs misalignment", "Δt (ps)", false)
            })?;
            extra = json!({ "points": sweep.records.len() });
        }
        SweepKind::Heatmap => {
            let map = heatmap(run, &cfg)?;
            files = Vec::new();
            match format {
                Format::Json => {
                    let body = serde_json::to_value(&map).expect("map serialises");
                    files.push(write(out.join(format!("{stem}.json")), &pretty(&body))?);
                }
                Format::Csv | Format::Svg => {
                    files.push(write(out.join(format!("{stem}.csv")), &map.to_csv())?);
                    files.push(write(out.join(format!("{stem}_contours.json")), &pretty(&map.contours_json()))?);
                }
            }
            if format == Format::Svg {
                let svg = heatmap_svg(&map, "Visibility and key-rate contours");
                files.push(write(out.join(format!("{stem}.svg")), &svg)?);
            }
            extra = json!({
                "cells": map.cells.len(),
                "levels": map.contours.iter().map(|c| c.level).collect::<Vec<_>>(),
                "zero_rate_visibility": zero_rate_visibility(&run.keyrate.rate_model()?)?,
            });
        }
    }
    sidecar(out, &stem, run, Some(&cfg), extra, &mut files)?;
    Ok(files)
}

fn heatmap(run: &RunConfig, cfg: &ExperimentConfig) -> Result<KeyRateMap, CliError> {
    let h = &run.sweep.heatmap;
    if h.beta_points < 2 || h.delta_t_points < 2 {
        return Err(CliError::config("sweep.heatmap: need at least two points per axis"));
    }
    let betas = lin_space(h.beta_min_ps2, h.beta_max_ps2, h.beta_points);
    let dts = lin_space(h.delta_t_min_ps, h.delta_t_max_ps, h.delta_t_points);
    Ok(visibility_contours(
        &h.levels,
        &betas,
        &dts,
        cfg.source_a.tau_p,
        &cfg.alignment,
        &cfg.splitter,
        &run.keyrate.rate_model()?,
    )?)
}

/// Result of the `hom` command.
#[derive(Debug, Clone)]
pub struct HomReport {
    pub estimate: VisibilityEstimate,
    pub model: f64,
    pub files: Vec<PathBuf>,
}

pub fn cmd_hom(run: &RunConfig, out: &Path, format: Format) -> Result<HomReport, CliError> {
    let cfg = run.resolve()?;
    let h = simulate_run(&cfg)?;
    let estimate = visibility_from_histogram(&h)?;
    let model = cfg.model_visibility()?;
    let mut files = Vec::new();
    match format {
        Format::Json => {
            let body = serde_json::to_value(&h).expect("histogram serialises");
            files.push(write(out.join("histogram.json"), &pretty(&body))?);
        }
        Format::Csv | Format::Svg => files.push(write(out.join("histogram.csv"), &histogram_csv(&h))?),
    }
    if format == Format::Svg {
        let plot = LinePlot {
            title: "Coincidences vs clock delay".into(),
            x_label: "delay (clock cycles)".into(),
            y_label: "coincidences".into(),
            log_x: false,
            series: vec![Series {
                label: format!("V = {:.4} ± {:.4}", estimate.visibility, estimate.stderr),
                points: h.delays().zip(&h.counts).map(|(k, &c)| (k as f64, c as f64)).collect(),
                errors: Some(h.counts.iter().map(|&c| (c as f64).sqrt()).collect()),
            }],
        };
        files.push(write(out.join("histogram.svg"), &plot.to_svg())?);
    }
    let mut meta = histogram_metadata(&h, Some(&estimate), cfg.seed, serde_json::Value::Null);
    meta["visibility_model"] = json!(model);
    sidecar(out, "histogram", run, Some(&cfg), meta, &mut files)?;
    Ok(HomReport { estimate, model, files })
}

/// Result of the `keyrate` command.
#[derive(Debug, Clone)]
pub struct KeyRateReport {
    pub zero_rate_visibility: f64,
    pub rows: Vec<(f64, f64)>,
    pub files: Vec<PathBuf>,
}

pub fn cmd_keyrate(run: &RunConfig, visibilities: &[f64], out: &Path, format: Format) -> Result<KeyRateReport, CliError> {
    let model = run.keyrate.rate_model()?;
    let vs = if visibilities.is_empty() {
        &run.keyrate.visibilities
    } else {
        visibilities
    };
    let rows = vs
        .iter()
        .map(|&v| {
            relative_key_rate(v, &model)
                .map(|r| (v, r))
                .map_err(|e| CliError::config(format!("keyrate: {e}")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let cutoff = zero_rate_visibility(&model)?;
    let mut files = Vec::new();
    match format {
        Format::Json => {
            let body = json!(rows.iter().map(|(v, r)| json!({"visibility": v, "r_rel": r})).collect::<Vec<_>>());
            files.push(write(out.join("keyrate.json"), &pretty(&body))?);
        }
        Format::Csv | Format::Svg => {
            let mut csv = String::from("visibility,r_rel\n");
            rows.iter().for_each(|(v, r)| csv.push_str(&format!("{v},{r}\n")));
            files.push(write(out.join("keyrate.csv"), &csv)?);
        }
    }
    if format == Format::Svg {
        let plot = LinePlot {
            title: "Relative key rate".into(),
            x_label: "visibility".into(),
            y_label: "R / Rmax".into(),
            log_x: false,
            series: vec![Series {
                label: "R / Rmax".into(),
                points: rows.clone(),
                errors: None,
            }],
        };
        files.push(write(out.join("keyrate.svg"), &plot.to_svg())?);
    }
    sidecar(out, "keyrate", run, None, json!({ "zero_rate_visibility": cutoff }), &mut files)?;
    Ok(KeyRateReport {
        zero_rate_visibility: cutoff,
        rows,
        files,
    })
}

/// g²(0) of laser A; laser B is switched off.
pub fn cmd_g2(run: &RunConfig, out: &Path) -> Result<(G2Estimate, Vec<PathBuf>), CliError> {
    let mut cfg = run.resolve()?;
    cfg.source_b.mean_photons = 0.0;
    let est = g2_zero(&cfg)?;
    let mut files = Vec::new();
    sidecar(out, "g2", run, Some(&cfg), json!(est), &mut files)?;
    Ok((est, files))
}
