//! Named experiments. Each one sweeps the simulator over a configured range,
//! writes one or more CSV tables and a JSON summary into an output
//! directory, and returns the summary.
//!
//! Every file starts with `#` comment lines carrying the experiment name,
//! the config hash and the seed. The summary also holds the normalized
//! config, so any output can be regenerated from it. Numbers are written in
//! scientific notation with 12 significant digits.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::baseline::RdbfsConfig;
use crate::channel::{dominant_mode, FieldVector};
use crate::config::Config;
use crate::engine::{Engine, EngineState, ResonanceReport, Scenario, LEDGER_HEADER};
use crate::error::{Error, Result};
use crate::fieldmap::{element_power_map, phase_center, phase_map, sample_power, FieldGrid, GridSpec, Source};
use crate::geometry::Vec3;
use crate::multiaccess::{allocate_fdma, allocate_tdma, Demand, LinkSummary};
use crate::report::{downlink, resonant_link, retrodirective_link, LinkReport, Receiver};

/// Experiment names with one-line descriptions.
pub const EXPERIMENTS: &[(&str, &str)] = &[
    ("iterations-vs-distance", "mean convergence iterations against distance for each array size"),
    ("iteration-dynamics", "per-iteration power, efficiency and gain/loss ledger at the trace distances"),
    ("sweep-z", "efficiency, radiated and DC power against on-axis distance, with the retro-directive baseline"),
    ("sweep-x", "efficiency, radiated and DC power against lateral offset at fixed height"),
    ("spatial-maps", "normalized power density on the xOz plane, in front of the target, and on both apertures"),
    ("phase-maps", "transmit and receive aperture phase with fitted isophase centers"),
    ("snr-vs-iterations", "downlink SNR and spectral efficiency per iteration at the trace distances"),
    ("snr-vs-z", "downlink SNR and spectral efficiency against on-axis distance"),
    ("max-distance-vs-size", "maximum working distance against array side, target fixed and both scaled"),
    ("tdma", "time-division plan over the configured targets"),
    ("fdma", "frequency-division plan over base-station sub-arrays"),
];

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub files: Vec<PathBuf>,
    pub summary: Value,
}

fn e(x: f64) -> String {
    format!("{x:.11e}")
}

struct Table {
    header: String,
    rows: Vec<String>,
}

impl Table {
    fn new(header: &str) -> Self {
        Self { header: header.into(), rows: Vec::new() }
    }
}

fn preamble(experiment: &str, cfg: &Config) -> String {
    format!("# experiment={experiment}\n# config_hash={}\n# seed={}\n", cfg.hash(), cfg.seed)
}

fn write_table(dir: &Path, experiment: &str, cfg: &Config, t: &Table) -> Result<PathBuf> {
    let path = dir.join(format!("{experiment}.csv"));
    let mut text = preamble(experiment, cfg);
    text.push_str(&t.header);
    text.push('\n');
    for r in &t.rows {
        text.push_str(r);
        text.push('\n');
    }
    fs::write(&path, text)?;
    Ok(path)
}

fn write_grid(dir: &Path, experiment: &str, suffix: &str, cfg: &Config, grid: &FieldGrid) -> Result<PathBuf> {
    let path = dir.join(format!("{experiment}-{suffix}.csv"));
    let mut buf = preamble(experiment, cfg).into_bytes();
    grid.write_csv(&mut buf)?;
    fs::write(&path, buf)?;
    Ok(path)
}

/// Runs experiment `name` and writes its files into `out`.
pub fn run_experiment(name: &str, cfg: &Config, out: &Path) -> Result<ExperimentOutput> {
    cfg.validate()?;
    if !EXPERIMENTS.iter().any(|(n, _)| *n == name) {
        return Err(Error::UnknownExperiment(name.into()));
    }
    fs::create_dir_all(out)?;
    let (tables, grids, metrics) = match name {
        "iterations-vs-distance" => iterations_vs_distance(cfg)?,
        "iteration-dynamics" => iteration_dynamics(cfg)?,
        "sweep-z" => sweep_z(cfg, false)?,
        "snr-vs-z" => sweep_z(cfg, true)?,
        "sweep-x" => sweep_x(cfg)?,
        "spatial-maps" => spatial_maps(cfg)?,
        "phase-maps" => phase_maps(cfg)?,
        "snr-vs-iterations" => snr_vs_iterations(cfg)?,
        "max-distance-vs-size" => max_distance_vs_size(cfg)?,
        "tdma" => tdma(cfg)?,
        "fdma" => fdma(cfg)?,
        _ => unreachable!(),
    };
    let mut files = Vec::new();
    for t in &tables {
        files.push(write_table(out, name, cfg, t)?);
    }
    for (suffix, g) in &grids {
        files.push(write_grid(out, name, suffix, cfg, g)?);
    }
    let summary = json!({
        "experiment": name,
        "config_hash": cfg.hash(),
        "seed": cfg.seed,
        "files": files.iter().map(|f| f.file_name().unwrap().to_string_lossy().into_owned()).collect::<Vec<_>>(),
        "metrics": metrics,
        "config": cfg.normalized().to_toml(),
    });
    let json_path = out.join(format!("{name}.json"));
    fs::write(&json_path, serde_json::to_string_pretty(&summary).expect("summary serializes") + "\n")?;
    files.push(json_path);
    Ok(ExperimentOutput { files, summary })
}

type Outcome = (Vec<Table>, Vec<(String, FieldGrid)>, Value);

fn mean(xs: impl IntoIterator<Item = f64>) -> f64 {
    let (s, n) = xs.into_iter().fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        s / n as f64
    }
}

fn std_dev(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs.iter().copied());
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

/// Run-averaged resonant link at one geometry, with the baseline fed the
/// same radiated power.
#[derive(Debug, Clone, Serialize)]
pub struct LinkPoint {
    pub runs: usize,
    pub converged_fraction: f64,
    /// Mean over converged runs.
    pub iterations: f64,
    pub iterations_std: f64,
    pub time_to_converge: f64,
    /// The remaining means are over all runs.
    pub eta_ct: f64,
    pub p_bs: f64,
    pub initial_p_bs: f64,
    pub p_mt: f64,
    pub p_dc: f64,
    pub p_center: f64,
    pub snr_db: f64,
    pub spectral_efficiency: f64,
    pub baseline: LinkReport,
}

fn receiver(cfg: &Config, engine: &Engine) -> Receiver {
    Receiver::for_engine(engine, cfg.harvest_params(), cfg.comms_params())
}

/// Monte Carlo over `scenario.runs` runs at one geometry.
pub fn evaluate_link(cfg: &Config, scenario: Scenario) -> Result<LinkPoint> {
    let engine = Engine::new(scenario)?;
    let rx = receiver(cfg, &engine);
    let runs = engine.monte_carlo()?;
    let links = runs
        .iter()
        .map(|(r, s)| resonant_link(&engine, r, s, &rx))
        .collect::<Result<Vec<_>>>()?;
    let reports: Vec<&ResonanceReport> = runs.iter().map(|(r, _)| r).collect();
    let conv: Vec<&ResonanceReport> = reports.iter().copied().filter(|r| r.converged).collect();
    let iters: Vec<f64> = conv.iter().map(|r| r.iterations as f64).collect();
    let p_total = cfg.baseline.total_power.unwrap_or(if conv.is_empty() {
        engine.scenario().bs_chain.amplifier.saturation_power
    } else {
        mean(conv.iter().map(|r| r.p_bs))
    });
    let base_cfg = RdbfsConfig {
        total_power: p_total,
        pilot_power: cfg.baseline.pilot_power,
        taper: cfg.baseline.taper,
        ..RdbfsConfig::default()
    };
    let (baseline, _) = retrodirective_link(&engine, &base_cfg, 0, &rx)?;
    Ok(LinkPoint {
        runs: reports.len(),
        converged_fraction: conv.len() as f64 / reports.len() as f64,
        iterations: mean(iters.iter().copied()),
        iterations_std: std_dev(&iters),
        time_to_converge: mean(conv.iter().map(|r| r.time_to_converge)),
        eta_ct: mean(links.iter().map(|l| l.eta_ct)),
        p_bs: mean(links.iter().map(|l| l.p_bs)),
        initial_p_bs: mean(reports.iter().map(|r| r.initial_p_bs)),
        p_mt: mean(links.iter().map(|l| l.p_mt)),
        p_dc: mean(links.iter().map(|l| l.p_dc)),
        p_center: mean(links.iter().map(|l| l.p_center)),
        snr_db: mean(links.iter().map(|l| l.snr_db)),
        spectral_efficiency: mean(links.iter().map(|l| l.spectral_efficiency)),
        baseline,
    })
}

fn square(side: usize) -> (usize, usize) {
    (side, side)
}

fn bs_size(cfg: &Config) -> (usize, usize) {
    (cfg.geometry.bs.rows, cfg.geometry.bs.cols)
}

fn mt_size(cfg: &Config) -> (usize, usize) {
    (cfg.geometry.mt.rows, cfg.geometry.mt.cols)
}

fn mt_at(cfg: &Config, z: f64) -> Vec3 {
    let c = cfg.geometry.mt_center();
    Vec3::new(c[0], c[1], z)
}

fn iterations_vs_distance(cfg: &Config) -> Result<Outcome> {
    let mut t = Table::new("side,z,runs,converged_fraction,mean_iterations,std_iterations,time_to_converge,eta_cT");
    let mut last = serde_json::Map::new();
    for &side in &cfg.sweep.iteration_sizes {
        let mut reach = None;
        for z in cfg.sweep.iteration_z.values() {
            let p = evaluate_link(cfg, cfg.scenario_with(square(side), square(side), mt_at(cfg, z))?)?;
            t.rows.push(format!(
                "{side},{},{},{},{},{},{},{}",
                e(z),
                p.runs,
                e(p.converged_fraction),
                e(p.iterations),
                e(p.iterations_std),
                e(p.time_to_converge),
                e(p.eta_ct)
            ));
            if p.converged_fraction == 0.0 {
                break;
            }
            reach = Some(z);
        }
        last.insert(side.to_string(), json!(reach));
    }
    Ok((vec![t], vec![], json!({ "last_converged_distance": last })))
}

fn iteration_dynamics(cfg: &Config) -> Result<Outcome> {
    let mut t = Table::new(&format!("z,{LEDGER_HEADER},eta_cR,pa_gain,limiter_ratio"));
    let mut metrics = Vec::new();
    for &z in &cfg.sweep.trace_distances {
        let engine = Engine::new(cfg.scenario_with(bs_size(cfg), mt_size(cfg), mt_at(cfg, z))?)?;
        let (report, state) = engine.run_to_convergence(0)?;
        for r in &state.history {
            t.rows.push(format!("{},{},{},{},{}", e(z), r.csv(), e(r.eta_cr), e(r.pa_gain), e(r.limiter_ratio)));
        }
        metrics.push(json!({ "z": z, "report": report }));
    }
    Ok((vec![t], vec![], json!({ "traces": metrics })))
}

const SWEEP_HEADER: &str = "converged_fraction,iterations,eta_cT,P_BS,P_BS_init,P_MT,P_dc,rdbfs_eta_cT,rdbfs_P_BS,rdbfs_P_dc";
const SNR_HEADER: &str = "converged_fraction,p_center,snr_dB,spectral_efficiency,rdbfs_p_center,rdbfs_snr_dB,rdbfs_spectral_efficiency";

fn sweep_row(p: &LinkPoint) -> String {
    [
        p.converged_fraction,
        p.iterations,
        p.eta_ct,
        p.p_bs,
        p.initial_p_bs,
        p.p_mt,
        p.p_dc,
        p.baseline.eta_ct,
        p.baseline.p_bs,
        p.baseline.p_dc,
    ]
    .map(e)
    .join(",")
}

fn snr_row(p: &LinkPoint) -> String {
    [
        p.converged_fraction,
        p.p_center,
        p.snr_db,
        p.spectral_efficiency,
        p.baseline.p_center,
        p.baseline.snr_db,
        p.baseline.spectral_efficiency,
    ]
    .map(e)
    .join(",")
}

fn sweep_metrics(coord: &str, xs: &[f64], points: &[LinkPoint]) -> Value {
    let converged: Vec<(f64, &LinkPoint)> = xs
        .iter()
        .copied()
        .zip(points)
        .filter(|(_, p)| p.converged_fraction > 0.5)
        .collect();
    let best_gain = converged
        .iter()
        .map(|(x, p)| (*x, p.eta_ct - p.baseline.eta_ct))
        .fold(None, |best: Option<(f64, f64)>, c| match best {
            Some(b) if b.1 >= c.1 => Some(b),
            _ => Some(c),
        });
    json!({
        format!("max_converged_{coord}"): converged.last().map(|c| c.0),
        "min_snr_dB_converged": converged.iter().map(|c| c.1.snr_db).reduce(f64::min),
        "min_spectral_efficiency_converged": converged.iter().map(|c| c.1.spectral_efficiency).reduce(f64::min),
        "peak_eta_gain_over_baseline": best_gain.map(|b| json!({ coord: b.0, "gain": b.1 })),
    })
}

fn sweep_z(cfg: &Config, snr: bool) -> Result<Outcome> {
    let zs = cfg.sweep.z.values();
    let points = zs
        .iter()
        .map(|&z| evaluate_link(cfg, cfg.scenario_with(bs_size(cfg), mt_size(cfg), mt_at(cfg, z))?))
        .collect::<Result<Vec<_>>>()?;
    let mut t = Table::new(&format!("z,{}", if snr { SNR_HEADER } else { SWEEP_HEADER }));
    for (z, p) in zs.iter().zip(&points) {
        t.rows.push(format!("{},{}", e(*z), if snr { snr_row(p) } else { sweep_row(p) }));
    }
    Ok((vec![t], vec![], sweep_metrics("z", &zs, &points)))
}

fn sweep_x(cfg: &Config) -> Result<Outcome> {
    let xs = cfg.sweep.x.values();
    let y = cfg.geometry.mt_center()[1];
    let points = xs
        .iter()
        .map(|&x| {
            let c = Vec3::new(x, y, cfg.sweep.x_height);
            evaluate_link(cfg, cfg.scenario_with(bs_size(cfg), mt_size(cfg), c)?)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut t = Table::new(&format!("x,{SWEEP_HEADER},snr_dB,spectral_efficiency"));
    for (x, p) in xs.iter().zip(&points) {
        t.rows.push(format!("{},{},{},{}", e(*x), sweep_row(p), e(p.snr_db), e(p.spectral_efficiency)));
    }
    Ok((vec![t], vec![], sweep_metrics("x", &xs, &points)))
}

fn converged_engine(cfg: &Config) -> Result<(Engine, ResonanceReport, EngineState)> {
    let engine = Engine::new(cfg.scenario()?)?;
    let (report, state) = engine.run_to_convergence(0)?;
    Ok((engine, report, state))
}

fn spatial_maps(cfg: &Config) -> Result<Outcome> {
    let (engine, report, state) = converged_engine(cfg)?;
    let sc = engine.scenario();
    let res = cfg.sweep.map_resolution;
    let mt_c = sc.mt.center;
    let half = 0.75 * sc.bs.extent().0.max(sc.mt.extent().0).max(sc.bs.extent().1) + mt_c.x.abs();
    let bs_src = Source { layout: &sc.bs, field: &state.s_bs_out };
    let xoz = sample_power(
        &[bs_src],
        &GridSpec::xoz((-half, half), (sc.bs.center.z, mt_c.z), (res, res)),
        &sc.carrier,
        &sc.channel,
    )?;
    // just in front of the target aperture, clear of the element mask
    let front = mt_c.z - sc.carrier.wavelength;
    let xoy = sample_power(
        &[bs_src],
        &GridSpec::xoy(front, (mt_c.x - half, mt_c.x + half), (mt_c.y - half, mt_c.y + half), (res, res)),
        &sc.carrier,
        &sc.channel,
    )?;
    let z0 = sc.channel.impedance;
    let bs_ap = element_power_map(&sc.bs, &state.s_bs_out, z0);
    let mt_ap = element_power_map(&sc.mt, &state.s_mt, z0);
    let (ax, az) = xoz.argmax();
    let metrics = json!({
        "converged": report.converged,
        "xoz_argmax": { "x": ax, "z": az },
        "midpoint_z": 0.5 * (sc.bs.center.z + mt_c.z),
        "xoz_mirror_asymmetry": xoz.mirror_asymmetry(),
        "xoz_masked_points": xoz.masked.iter().filter(|m| **m).count(),
    });
    Ok((
        vec![],
        vec![("xoz".into(), xoz), ("xoy".into(), xoy), ("bs-aperture".into(), bs_ap), ("mt-aperture".into(), mt_ap)],
        metrics,
    ))
}

fn phase_maps(cfg: &Config) -> Result<Outcome> {
    let (engine, report, state) = converged_engine(cfg)?;
    let sc = engine.scenario();
    let bs = phase_map(&sc.bs, &state.s_bs_out);
    let mt = phase_map(&sc.mt, &state.s_mt);
    let (bu, bv) = phase_center(&bs)?;
    let (mu, mv) = phase_center(&mt)?;
    let metrics = json!({
        "converged": report.converged,
        "bs_phase_center": { "u": bu, "v": bv },
        "mt_phase_center": { "u": mu, "v": mv },
        "mt_offset": { "x": sc.mt.center.x - sc.bs.center.x, "y": sc.mt.center.y - sc.bs.center.y },
    });
    Ok((vec![], vec![("bs".into(), bs), ("mt".into(), mt)], metrics))
}

fn snr_vs_iterations(cfg: &Config) -> Result<Outcome> {
    let mut t = Table::new("z,k,P_BS,P_MT,p_center,P_dc,snr_dB,spectral_efficiency");
    let mut metrics = Vec::new();
    for &z in &cfg.sweep.trace_distances {
        let engine = Engine::new(cfg.scenario_with(bs_size(cfg), mt_size(cfg), mt_at(cfg, z))?)?;
        let rx = receiver(cfg, &engine);
        let (report, end) = engine.run_to_convergence(0)?;
        // replay the same run, which is bit-identical, to see every iterate
        let mut state = engine.initialize(0);
        let center = engine.scenario().mt.central_index();
        let rows: Vec<(usize, f64, f64, (FieldVector, f64))> = (0..end.k)
            .map(|_| {
                engine.step(&mut state)?;
                let last = state.history.last().expect("stepped");
                Ok((last.k, last.p_bs, last.p_mt, (state.s_mt.clone(), last.pa_gain)))
            })
            .collect::<Result<_>>()?;
        let evaluated = rows
            .par_iter()
            .map(|(k, p_bs, p_mt, (field, gain))| {
                downlink(field, *gain, engine.channel(), center, &rx).map(|d| (*k, *p_bs, *p_mt, d))
            })
            .collect::<Result<Vec<_>>>()?;
        for (k, p_bs, p_mt, d) in &evaluated {
            t.rows.push(format!(
                "{},{k},{},{},{},{},{},{}",
                e(z),
                e(*p_bs),
                e(*p_mt),
                e(d.p_center),
                e(d.p_dc),
                e(d.snr_db),
                e(d.spectral_efficiency)
            ));
        }
        let last = evaluated.last().map(|(_, _, _, d)| (d.snr_db, d.spectral_efficiency));
        metrics.push(json!({
            "z": z,
            "converged": report.converged,
            "final_snr_dB": last.map(|l| l.0),
            "final_spectral_efficiency": last.map(|l| l.1),
        }));
    }
    Ok((vec![t], vec![], json!({ "traces": metrics })))
}

/// Working and failing distances around the resonance boundary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DistanceBracket {
    /// Largest probed distance that resonated.
    pub lower: f64,
    /// Smallest probed distance above `lower` that did not.
    pub upper: f64,
    /// One-way efficiency of the dominant channel mode at each end.
    pub lower_mode_eta: f64,
    pub upper_mode_eta: f64,
    pub probes: usize,
}

/// Whether most of `runs` runs resonate with the target at distance `z`.
pub fn resonates(cfg: &Config, bs: (usize, usize), mt: (usize, usize), z: f64, runs: usize) -> Result<bool> {
    let mut sc = cfg.scenario_with(bs, mt, mt_at(cfg, z))?;
    sc.runs = runs;
    let engine = Engine::new(sc)?;
    let ok = engine.monte_carlo()?.iter().filter(|(r, _)| r.converged).count();
    Ok(2 * ok > runs)
}

fn mode_eta(cfg: &Config, bs: (usize, usize), mt: (usize, usize), z: f64) -> Result<f64> {
    let sc = cfg.scenario_with(bs, mt, mt_at(cfg, z))?;
    let engine = Engine::new(sc)?;
    Ok(dominant_mode(engine.channel(), 2000, 1e-12).0)
}

/// Brackets the largest on-axis distance at which the loop resonates, to
/// relative width `cfg.sweep.distance_tolerance`.
pub fn max_distance(cfg: &Config, bs: (usize, usize), mt: (usize, usize), runs: usize) -> Result<DistanceBracket> {
    let lambda = cfg.wavelength();
    let d = cfg.spacing();
    let aperture = |s: (usize, usize)| (s.0.max(s.1) as f64) * d;
    // starting guess from the aperture product; only sets where probing starts
    let guess = (0.85 * aperture(bs) * aperture(mt) / lambda).max(4.0 * lambda);
    let min = 2.0 * lambda;
    let mut probes = 0;
    let mut probe = |z: f64| {
        probes += 1;
        resonates(cfg, bs, mt, z, runs)
    };
    let (mut lo, mut hi);
    if probe(guess)? {
        lo = guess;
        hi = guess * 1.25;
        while probe(hi)? {
            lo = hi;
            hi *= 1.25;
        }
    } else {
        hi = guess;
        lo = guess / 1.25;
        while !probe(lo)? {
            hi = lo;
            lo /= 1.25;
            if lo < min {
                return Err(Error::Infeasible(format!("no resonance beyond {min:.3e} m")));
            }
        }
    }
    while (hi - lo) / lo > cfg.sweep.distance_tolerance {
        let mid = 0.5 * (lo + hi);
        if probe(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(DistanceBracket {
        lower: lo,
        upper: hi,
        lower_mode_eta: mode_eta(cfg, bs, mt, lo)?,
        upper_mode_eta: mode_eta(cfg, bs, mt, hi)?,
        probes,
    })
}

/// Least-squares line `y = a + b x` and its coefficient of determination.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let mx = mean(xs.iter().copied());
    let my = mean(ys.iter().copied());
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let b = sxy / sxx;
    let a = my - b * mx;
    let r2 = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    (a, b, r2)
}

fn max_distance_vs_size(cfg: &Config) -> Result<Outcome> {
    let mut t = Table::new("series,bs_side,mt_side,max_distance,upper_distance,lower_mode_eta,upper_mode_eta");
    let runs = cfg.sweep.search_runs;
    let mut series = serde_json::Map::new();
    for (label, fixed) in [("mt-fixed", true), ("both", false)] {
        let mut sides = Vec::new();
        let mut dists = Vec::new();
        for &s in &cfg.sweep.sizes {
            let mt = if fixed { cfg.sweep.fixed_mt_side } else { s };
            let b = max_distance(cfg, square(s), square(mt), runs)?;
            t.rows.push(format!(
                "{label},{s},{mt},{},{},{},{}",
                e(b.lower),
                e(b.upper),
                e(b.lower_mode_eta),
                e(b.upper_mode_eta)
            ));
            sides.push(s as f64);
            dists.push(b.lower);
        }
        let (a, slope, r2) = linear_fit(&sides, &dists);
        let logs: (Vec<f64>, Vec<f64>) = (sides.iter().map(|x| x.ln()).collect(), dists.iter().map(|y| y.ln()).collect());
        let (_, exponent, _) = linear_fit(&logs.0, &logs.1);
        let squares: Vec<f64> = sides.iter().map(|x| x * x).collect();
        let (_, _, r2_quadratic) = linear_fit(&squares, &dists);
        series.insert(
            label.into(),
            json!({
                "sides": sides, "max_distance": dists,
                "linear_intercept": a, "linear_slope": slope, "linear_r2": r2,
                "power_law_exponent": exponent, "quadratic_r2": r2_quadratic,
            }),
        );
    }
    Ok((vec![t], vec![], Value::Object(series)))
}

fn target_demands(cfg: &Config) -> Vec<Demand> {
    cfg.multiaccess
        .targets
        .iter()
        .enumerate()
        .map(|(i, t)| Demand { mt_id: i, priority: t.priority, requested: t.requested })
        .collect()
}

fn tdma(cfg: &Config) -> Result<Outcome> {
    let ma = &cfg.multiaccess;
    let points = ma
        .targets
        .iter()
        .map(|t| evaluate_link(cfg, cfg.scenario_with(bs_size(cfg), mt_size(cfg), Vec3::from(t.center))?))
        .collect::<Result<Vec<_>>>()?;
    let links: Vec<LinkSummary> = points
        .iter()
        .map(|p| {
            if p.converged_fraction > 0.5 {
                LinkSummary { eta_c: p.eta_ct, p_bs: p.p_bs }
            } else {
                LinkSummary { eta_c: 0.0, p_bs: 0.0 }
            }
        })
        .collect();
    let t_res = ma
        .t_res
        .unwrap_or_else(|| points.iter().map(|p| p.time_to_converge).filter(|t| t.is_finite()).fold(0.0, f64::max));
    let plan = allocate_tdma(&target_demands(cfg), &links, ma.frame, t_res)?;
    let mut t = Table::new("mt_id,x,y,z,priority,requested,converged_fraction,eta_c,P_BS,t_on,avg_power");
    for ((slot, target), (link, p)) in plan.slots.iter().zip(&ma.targets).zip(links.iter().zip(&points)) {
        t.rows.push(format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            slot.mt_id,
            e(target.center[0]),
            e(target.center[1]),
            e(target.center[2]),
            e(target.priority),
            e(target.requested),
            e(p.converged_fraction),
            e(link.eta_c),
            e(link.p_bs),
            e(slot.t_on),
            e(slot.avg_power)
        ));
    }
    let metrics = json!({
        "frame": plan.frame,
        "t_res": plan.t_res,
        "occupied": plan.occupied(),
        "slots": plan.slots,
    });
    Ok((vec![t], vec![], metrics))
}

fn fdma(cfg: &Config) -> Result<Outcome> {
    let ma = &cfg.multiaccess;
    let base = cfg.scenario()?;
    let subs = base.bs.subarrays(ma.sub_rows, ma.sub_cols)?;
    let demands: Vec<f64> = ma.targets.iter().map(|t| t.priority * t.requested).collect();
    let plan = allocate_fdma(
        base.bs_chain.amplifier.saturation_power,
        &demands,
        subs.len(),
        cfg.carrier.frequency,
        ma.band_spacing,
    )?;
    let points = plan
        .bands
        .iter()
        .zip(&ma.targets)
        .map(|(band, target)| {
            let mut c = cfg.clone();
            c.carrier.frequency = band.frequency;
            // keep the physical pitch of the shared aperture
            c.geometry.spacing = Some(cfg.spacing());
            let mut sc = c.scenario_with(bs_size(cfg), mt_size(cfg), Vec3::from(target.center))?;
            sc.bs = subs[band.band_id].clone();
            sc.bs_chain.amplifier.saturation_power = band.power;
            evaluate_link(&c, sc)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut t = Table::new("band_id,frequency,mt_id,P_BS_alloc,converged_fraction,eta_cT,P_BS,P_MT,P_dc");
    for ((band, p), mt_id) in plan.bands.iter().zip(&points).zip(0..) {
        t.rows.push(format!(
            "{},{},{mt_id},{},{},{},{},{},{}",
            band.band_id,
            e(band.frequency),
            e(band.power),
            e(p.converged_fraction),
            e(p.eta_ct),
            e(p.p_bs),
            e(p.p_mt),
            e(p.p_dc)
        ));
    }
    let metrics = json!({
        "p_total": plan.p_total,
        "bands": plan.bands,
        "converged": points.iter().map(|p| p.converged_fraction > 0.5).collect::<Vec<_>>(),
    });
    Ok((vec![t], vec![], metrics))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> Config {
        let mut c = Config::default();
        c.runs = 2;
        for a in [&mut c.geometry.bs, &mut c.geometry.mt] {
            a.rows = 8;
            a.cols = 8;
        }
        c.geometry.mt.center = Some([0.0, 0.0, 0.15]);
        c.engine.max_iter = 400;
        c.sweep.z = crate::config::Range { start: 0.1, stop: 0.2, step: 0.05 };
        c.sweep.trace_distances = vec![0.15];
        c.sweep.map_resolution = 9;
        c
    }

    #[test]
    fn unknown_experiment_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            run_experiment("nope", &small(), dir.path()),
            Err(Error::UnknownExperiment(_))
        ));
    }

    #[test]
    fn output_embeds_hash_and_seed_and_replays() {
        let cfg = small();
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let out = run_experiment("sweep-z", &cfg, a.path()).unwrap();
        run_experiment("sweep-z", &cfg, b.path()).unwrap();
        let csv = fs::read_to_string(a.path().join("sweep-z.csv")).unwrap();
        assert!(csv.contains(&format!("# config_hash={}", cfg.hash())));
        assert!(csv.contains("# seed=1"));
        assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 1 + 3);
        for f in &out.files {
            let name = f.file_name().unwrap();
            assert_eq!(fs::read(f).unwrap(), fs::read(b.path().join(name)).unwrap());
        }
        let embedded = Config::from_toml(out.summary["config"].as_str().unwrap()).unwrap();
        assert_eq!(embedded.hash(), cfg.hash());
    }

    #[test]
    fn linear_fit_recovers_line() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys: Vec<f64> = xs.iter().map(|x| 0.5 + 2.0 * x).collect();
        let (a, b, r2) = linear_fit(&xs, &ys);
        assert!((a - 0.5).abs() < 1e-12 && (b - 2.0).abs() < 1e-12 && (r2 - 1.0).abs() < 1e-12);
    }
}
