//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any criterion fails. Every tolerance is pinned below.

use std::f64::consts::PI;
use std::path::Path;
use std::time::{Duration, Instant};

use hom_cli::args::{Format, SweepKind};
use hom_cli::config::FilterConfig;
use hom_cli::{cmd_sweep, cmd_visibility, RunConfig};
use hom_core::filter::{filter_gaussian_closed_form, fit_back_reflection_db};
use hom_core::interference::{bs_output_intensities, fringe_amplitude, jitter_averaged_visibility};
use hom_core::keyrate::{relative_key_rate, RateModel};
use hom_core::montecarlo::{g2_zero, simulate_run, visibility_from_histogram};
use hom_core::pulse::{
    chirp_from_spectrum, sample_field, spectral_fwhm_closed_form, spectral_intensity, transform_limited_fwhm,
};
use hom_core::{
    fwhm_to_sigma, AlignmentParams, DetectorSpec, ExperimentConfig, FilterSpec, PulseParams, SplitterSpec, TimeGrid,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// Criterion 1
const EQ_TUPLES: usize = 10_000;
const EQ_TOL: f64 = 1e-12;
const EQ_MAX_RUNTIME: Duration = Duration::from_secs(1);
// Criterion 2
const TL_PULSE_FWHM_PS: f64 = 30.0;
const TL_TARGET_GHZ: f64 = 14.7;
const TL_TOL_GHZ: f64 = 0.3;
const TL_MAX_RUNTIME: Duration = Duration::from_secs(1);
// Criterion 3
const CAL_TAU_PS: f64 = 12.7;
const CAL_SPECTRAL_GHZ: f64 = 70.0;
const CAL_BETA_RANGE: (f64, f64) = (0.005, 0.010);
const CAL_FFT_REL_TOL: f64 = 0.01;
// Criterion 4
const HEATMAP_DELTA_T_PS: f64 = 10.0;
const HEATMAP_TARGET: f64 = 0.10;
const HEATMAP_TOL: f64 = 0.02;
// Criterion 5
const JITTER_FWHM_PS: f64 = 9.3;
const FILTER_BAND_GHZ: [f64; 2] = [11.5, 13.8];
const FILTERED_TARGET: f64 = 0.488;
const FILTERED_TOL: f64 = 0.015;
// Criterion 6
const MISALIGNED_TARGET: f64 = 0.41;
const MISALIGNED_TOL: f64 = 0.03;
const FAR_DELTA_T_PS: f64 = 45.0;
const FAR_MAX: f64 = 0.02;
// Criterion 7
const MC_PULSES: u64 = 10_000_000;
const MC_SIGMAS: f64 = 3.0;
const MC_MIN_P_VALUE: f64 = 0.001;
const MC_MEAN_PHOTONS: f64 = 0.05;
const MC_EFFICIENCY: f64 = 0.4;
const MC_GRID: [(f64, Option<f64>); 5] = [
    (0.0, None),
    (5.0, None),
    (0.0, Some(13.8)),
    (10.0, Some(13.8)),
    (20.0, Some(30.0)),
];
const MC_MAX_RUNTIME_PER_POINT: Duration = Duration::from_secs(60);
// Criterion 8
const G2_PULSES: u64 = 10_000_000;
const G2_MEAN_PHOTONS: f64 = 0.2;
const G2_TOL: f64 = 0.01;
// Criterion 9
const RATE_AT_037: f64 = 0.0;
const RATE_AT_040: (f64, f64) = (0.05, 0.15);
const RATE_AT_045: (f64, f64) = (0.35, 0.50);
// Criterion 10
const BR_FIT_BANDWIDTH_GHZ: f64 = 13.8;
const BR_FIT_TARGET: f64 = 0.46;
const BR_MIN_PEAK_GHZ: f64 = 10.0;
// Criterion 11
const DET_PULSES: u64 = 500_000;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn within(x: f64, target: f64, tol: f64) -> bool {
    (x - target).abs() <= tol
}

fn calibrated_run() -> RunConfig {
    let mut run = RunConfig::default();
    run.pulse.pulse_fwhm_ps = TL_PULSE_FWHM_PS;
    run.pulse.spectral_fwhm_ghz = Some(CAL_SPECTRAL_GHZ);
    run
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let phases: Vec<f64> = (0..16).map(|k| 2.0 * PI * k as f64 / 16.0).collect();
    let (mut worst_sum, mut worst_v) = (0.0f64, 0.0f64);
    for _ in 0..EQ_TUPLES {
        let tau = rng.random_range(3.0..40.0);
        let beta = rng.random_range(-0.02..0.02);
        let dt = rng.random_range(-80.0..80.0);
        let p = PulseParams::new(tau, beta).unwrap();
        let r = SplitterSpec::new(rng.random_range(0.05..0.95)).unwrap();
        let phi = rng.random_range(0.0..2.0 * PI);
        let (c, d) = bs_output_intensities(&p, &p, dt, phi, &r).unwrap();
        worst_sum = worst_sum.max((c + d - 2.0).abs());

        // Phase average over equally spaced phases is exact for cos².
        let balanced = SplitterSpec::balanced();
        let (mut mc, mut md, mut mcd) = (0.0, 0.0, 0.0);
        for &phi in &phases {
            let (c, d) = bs_output_intensities(&p, &p, dt, phi, &balanced).unwrap();
            mc += c / 16.0;
            md += d / 16.0;
            mcd += c * d / 16.0;
        }
        let v = 1.0 - mcd / (mc * md);
        let x = fringe_amplitude(tau, beta, dt);
        worst_v = worst_v.max((v - 0.5 * x * x).abs());
    }
    let elapsed = start.elapsed();
    outcome(
        worst_sum <= EQ_TOL && worst_v <= EQ_TOL && elapsed < EQ_MAX_RUNTIME,
        format!(
            "{EQ_TUPLES} tuples, max |Ic+Id-2| = {worst_sum:.1e}, max |V-x²/2| = {worst_v:.1e}, {:.3} s (limits {EQ_TOL:.0e}, {} s)",
            elapsed.as_secs_f64(),
            EQ_MAX_RUNTIME.as_secs()
        ),
    )
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let tau = fwhm_to_sigma(TL_PULSE_FWHM_PS);
    let p = PulseParams::new(tau, 0.0).unwrap();
    let closed = transform_limited_fwhm(tau);
    let closed_general = spectral_fwhm_closed_form(&p);
    let field = sample_field(&p, &TimeGrid::default(), 0.0, 0.0).unwrap();
    let fft = spectral_intensity(&field).unwrap().fwhm_ghz().unwrap();
    let elapsed = start.elapsed();
    let ok = [closed, closed_general, fft].iter().all(|&w| within(w, TL_TARGET_GHZ, TL_TOL_GHZ));
    outcome(
        ok && elapsed < TL_MAX_RUNTIME,
        format!(
            "closed form {closed:.3} GHz, FFT {fft:.3} GHz (target {TL_TARGET_GHZ} ± {TL_TOL_GHZ}), {:.3} s",
            elapsed.as_secs_f64()
        ),
    )
}

fn criterion_3() -> Outcome {
    let beta = chirp_from_spectrum(CAL_TAU_PS, CAL_SPECTRAL_GHZ).unwrap();
    let p = PulseParams::new(CAL_TAU_PS, beta).unwrap();
    let field = sample_field(&p, &TimeGrid::default(), 0.0, 0.0).unwrap();
    let fft = spectral_intensity(&field).unwrap().fwhm_ghz().unwrap();
    let rel = (fft / CAL_SPECTRAL_GHZ - 1.0).abs();
    outcome(
        (CAL_BETA_RANGE.0..=CAL_BETA_RANGE.1).contains(&beta) && rel <= CAL_FFT_REL_TOL,
        format!(
            "beta = {beta:.6} ps⁻² (range {:?}), FFT width {fft:.3} GHz, round-trip error {:.2e} (limit {CAL_FFT_REL_TOL})",
            CAL_BETA_RANGE, rel
        ),
    )
}

fn criterion_4() -> Outcome {
    let mut run = calibrated_run();
    run.alignment.delta_t_ps = HEATMAP_DELTA_T_PS;
    run.alignment.jitter_fwhm_ps = 0.0;
    let v = cmd_visibility(&run, false).unwrap().jitter_averaged;
    outcome(
        within(v, HEATMAP_TARGET, HEATMAP_TOL),
        format!("V(Δt = {HEATMAP_DELTA_T_PS} ps, no jitter) = {v:.4} (target {HEATMAP_TARGET} ± {HEATMAP_TOL})"),
    )
}

fn filtered_run(bw: f64, delta_t: f64) -> RunConfig {
    let mut run = calibrated_run();
    run.filter = Some(FilterConfig::gaussian(bw));
    run.alignment.jitter_fwhm_ps = JITTER_FWHM_PS;
    run.alignment.delta_t_ps = delta_t;
    run
}

fn criterion_5() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for bw in FILTER_BAND_GHZ {
        let run = filtered_run(bw, 0.0);
        let v = cmd_visibility(&run, false).unwrap().jitter_averaged;
        let mut diff = run.clone();
        diff.alignment.jitter_is_differential = true;
        let vd = cmd_visibility(&diff, false).unwrap().jitter_averaged;
        pass &= within(v, FILTERED_TARGET, FILTERED_TOL);
        parts.push(format!("{bw} GHz: {v:.4} (differential jitter {vd:.4})"));
    }
    outcome(
        pass,
        format!("per-laser jitter {JITTER_FWHM_PS} ps; {} (target {FILTERED_TARGET} ± {FILTERED_TOL})", parts.join(", ")),
    )
}

fn criterion_6() -> Outcome {
    let near = cmd_visibility(&filtered_run(13.8, HEATMAP_DELTA_T_PS), false).unwrap().jitter_averaged;
    let far_pos = cmd_visibility(&filtered_run(13.8, FAR_DELTA_T_PS), false).unwrap().jitter_averaged;
    let far_neg = cmd_visibility(&filtered_run(13.8, -FAR_DELTA_T_PS), false).unwrap().jitter_averaged;
    let near_ok = within(near, MISALIGNED_TARGET, MISALIGNED_TOL);
    let far_ok = far_pos < FAR_MAX && far_neg < FAR_MAX;
    outcome(
        near_ok && far_ok,
        format!(
            "13.8 GHz: V(10 ps) = {near:.4} [{}] (target {MISALIGNED_TARGET} ± {MISALIGNED_TOL}); V(±{FAR_DELTA_T_PS} ps) = {far_pos:.4}/{far_neg:.4} [{}] (limit < {FAR_MAX})",
            if near_ok { "ok" } else { "out" },
            if far_ok { "ok" } else { "out" }
        ),
    )
}

fn criterion_7() -> Outcome {
    let tau = fwhm_to_sigma(TL_PULSE_FWHM_PS);
    let source = PulseParams::new(tau, chirp_from_spectrum(tau, CAL_SPECTRAL_GHZ).unwrap())
        .unwrap()
        .with_mean_photons(MC_MEAN_PHOTONS);
    let mut pass = true;
    let mut parts = Vec::new();
    for (k, &(dt, bw)) in MC_GRID.iter().enumerate() {
        let start = Instant::now();
        let mut cfg = ExperimentConfig::symmetric(
            source,
            AlignmentParams::new(dt, JITTER_FWHM_PS).unwrap(),
            DetectorSpec::new(MC_EFFICIENCY, 0.0).unwrap(),
            MC_PULSES,
            100 + k as u64,
        );
        cfg.filter = bw.map(FilterSpec::gaussian);
        let shaped = match &cfg.filter {
            Some(f) => filter_gaussian_closed_form(&source, f).unwrap(),
            None => source,
        };
        let oracle = jitter_averaged_visibility(shaped.tau_p, shaped.beta, dt, JITTER_FWHM_PS);
        let est = visibility_from_histogram(&simulate_run(&cfg).unwrap()).unwrap();
        let elapsed = start.elapsed();
        let z = (est.visibility - oracle) / est.stderr;
        let ok = z.abs() <= MC_SIGMAS && est.p_value > MC_MIN_P_VALUE && elapsed < MC_MAX_RUNTIME_PER_POINT;
        pass &= ok;
        parts.push(format!(
            "(Δt {dt} ps, {}) V = {:.4} ± {:.4} vs {oracle:.4}, z = {z:+.2}, p = {:.3}, {:.1} s",
            bw.map_or("unfiltered".to_string(), |b| format!("{b} GHz")),
            est.visibility,
            est.stderr,
            est.p_value,
            elapsed.as_secs_f64()
        ));
    }
    outcome(
        pass,
        format!(
            "{MC_PULSES} pulses per point, |z| ≤ {MC_SIGMAS}, chi-square p > {MC_MIN_P_VALUE}: {}",
            parts.join("; ")
        ),
    )
}

fn criterion_8() -> Outcome {
    let source = PulseParams::new(12.7, 0.0).unwrap().with_mean_photons(G2_MEAN_PHOTONS);
    let mut cfg = ExperimentConfig::symmetric(
        source,
        AlignmentParams::new(0.0, 0.0).unwrap(),
        DetectorSpec::new(1.0, 0.0).unwrap(),
        G2_PULSES,
        8,
    );
    cfg.source_b.mean_photons = 0.0;
    let est = g2_zero(&cfg).unwrap();
    let dev = (est.g2 - 1.0).abs();
    outcome(
        dev <= G2_TOL && dev <= 3.0 * est.stderr,
        format!(
            "g2(0) = {:.4} ± {:.4} from {} coincidences (target 1.00 ± {G2_TOL})",
            est.g2, est.stderr, est.coincidences
        ),
    )
}

fn criterion_9() -> Outcome {
    let m = RateModel::default();
    let (r37, r40, r45) = (
        relative_key_rate(0.37, &m).unwrap(),
        relative_key_rate(0.40, &m).unwrap(),
        relative_key_rate(0.45, &m).unwrap(),
    );
    outcome(
        r37 == RATE_AT_037
            && (RATE_AT_040.0..=RATE_AT_040.1).contains(&r40)
            && (RATE_AT_045.0..RATE_AT_045.1).contains(&r45),
        format!("R(0.37) = {r37:.4}, R(0.40) = {r40:.4}, R(0.45) = {r45:.4}"),
    )
}

fn read_column(path: &Path, column: usize) -> Vec<f64> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(column).unwrap().parse().unwrap())
        .collect()
}

fn criterion_10() -> Outcome {
    let tau = fwhm_to_sigma(TL_PULSE_FWHM_PS);
    let source = PulseParams::new(tau, chirp_from_spectrum(tau, CAL_SPECTRAL_GHZ).unwrap()).unwrap();
    let alignment = AlignmentParams::new(0.0, JITTER_FWHM_PS).unwrap();
    let db = fit_back_reflection_db(
        &source,
        &alignment,
        &SplitterSpec::balanced(),
        &FilterSpec::gaussian(BR_FIT_BANDWIDTH_GHZ),
        BR_FIT_BANDWIDTH_GHZ,
        BR_FIT_TARGET,
    )
    .unwrap();

    let mut run = filtered_run(BR_FIT_BANDWIDTH_GHZ, 0.0);
    let curve = |run: &RunConfig| {
        let dir = tempfile::tempdir().unwrap();
        cmd_sweep(SweepKind::Bandwidth, run, dir.path(), Format::Csv).unwrap();
        let csv = dir.path().join("sweep_bandwidth.csv");
        (read_column(&csv, 0), read_column(&csv, 1))
    };
    let monotone = |v: &[f64]| v.windows(2).all(|w| w[1] <= w[0]) || v.windows(2).all(|w| w[1] >= w[0]);
    let (_, clean) = curve(&run);
    run.filter.as_mut().unwrap().back_reflection_db = Some(db);
    let (bws, vs) = curve(&run);
    let peak = (0..vs.len()).max_by(|&a, &b| vs[a].total_cmp(&vs[b])).unwrap();
    let downturn = !monotone(&vs) && bws[peak] >= BR_MIN_PEAK_GHZ && vs[0] < vs[peak];
    outcome(
        downturn && monotone(&clean),
        format!(
            "back-reflection {db:.2} dB (fitted to V = {BR_FIT_TARGET} at {BR_FIT_BANDWIDTH_GHZ} GHz): peak {:.4} at {:.2} GHz, {:.4} at {:.1} GHz; curve without back-reflection monotone: {}",
            vs[peak],
            bws[peak],
            vs[0],
            bws[0],
            monotone(&clean)
        ),
    )
}

fn criterion_11() -> Outcome {
    let mut run = filtered_run(13.8, 0.0);
    run.seed = 2024;
    run.n_pulses = DET_PULSES;
    run.detectors.efficiency = MC_EFFICIENCY;
    run.sweep.monte_carlo = true;
    run.sweep.bandwidth.points = 6;
    run.sweep.misalignment.points = 7;
    let sweep = |threads: usize| {
        let dir = tempfile::tempdir().unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        let mut bytes = Vec::new();
        for kind in [SweepKind::Bandwidth, SweepKind::Misalignment, SweepKind::Heatmap] {
            let files = pool.install(|| cmd_sweep(kind, &run, dir.path(), Format::Csv)).unwrap();
            for f in files.iter().filter(|f| f.extension().is_some_and(|e| e == "csv")) {
                bytes.push(std::fs::read(f).unwrap());
            }
        }
        bytes
    };
    let (a, b) = (sweep(1), sweep(4));
    let total: usize = a.iter().map(Vec::len).sum();
    outcome(
        a == b,
        format!("{} CSV files, {total} bytes, identical across runs on 1 and 4 threads: {}", a.len(), a == b),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 11] = [
        ("consistency of output intensities and visibility", criterion_1),
        ("transform-limited spectral width", criterion_2),
        ("chirp calibration", criterion_3),
        ("heatmap anchor at 10 ps", criterion_4),
        ("filtered jitter-averaged visibility", criterion_5),
        ("misalignment anchors", criterion_6),
        ("Monte-Carlo vs closed form", criterion_7),
        ("g2(0) of a coherent source", criterion_8),
        ("key-rate calibration", criterion_9),
        ("back-reflection downturn", criterion_10),
        ("sweep determinism", criterion_11),
    ];
    let mut failed = Vec::new();
    for (i, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        println!(
            "criterion {:>2} {} {name}: {}",
            i + 1,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        if !o.pass {
            failed.push(i + 1);
        }
    }
    println!(
        "acceptance: {}/{} criteria passed{}",
        criteria.len() - failed.len(),
        criteria.len(),
        if failed.is_empty() {
            String::new()
        } else {
            format!("; failed: {failed:?}")
        }
    );
    if !failed.is_empty() {
        std::process::exit(1);
    }
}
