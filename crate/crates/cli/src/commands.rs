//! One function per subcommand. Each writes its CSV and JSON files into the
//! output directory and returns whether its checks passed.

use std::path::Path;

use anyhow::{bail, ensure, Result};
use serde::Serialize;

use ipsd_core::diffusion::{simulate_with, DiffusionParams, DiffusionState};
use ipsd_core::dualspin::{bernoulli_parity_identity, evolve_dual_replay, parity, parity_duality_mc, DualSimulator};
use ipsd_core::exact::{build_generator_from_events, build_generator_np, feynman_kac_max_residual};
use ipsd_core::meanfield::{equilibrium, integrate_density, meanfield_comparator};
use ipsd_core::momdual::{
    coexistence_probe, extinction_probe, generator_duality_battery, moment_duality_mc, CoexistenceSetup, ExtinctionSetup, MomentSetup, Pairing,
};
use ipsd_core::replicate::replicates;
use ipsd_core::spin::{evolve_graphical, simulate_gillespie, EventSampler, NpParams};
use ipsd_core::walkers::{simulate_walker, survival_probability, ParticleState, WalkerOutcome};
use ipsd_core::{Kernel, McEstimate, SpinConfig};

use crate::config::{parse_scheme, RunConfig};
use crate::output::{grid, write_report, Csv};

fn estimates_by_time(times: &[f64], samples: &[Vec<f64>], seed: u64) -> Result<Vec<(f64, McEstimate)>> {
    times
        .iter()
        .enumerate()
        .map(|(j, &t)| Ok((t, McEstimate::from_samples(&samples.iter().map(|s| s[j]).collect::<Vec<_>>(), seed)?)))
        .collect()
}

/// Value of a right-continuous step path `(time, value)` at `t`.
fn step_value(path: &[(f64, f64)], t: f64) -> f64 {
    let i = path.partition_point(|&(s, _)| s <= t);
    path[i.saturating_sub(1)].1
}

#[derive(Serialize)]
struct TimeRow {
    t: f64,
    estimate: McEstimate,
}

fn time_rows(rows: Vec<(f64, McEstimate)>) -> Vec<TimeRow> {
    rows.into_iter().map(|(t, estimate)| TimeRow { t, estimate }).collect()
}

/// The `(t, estimate, stderr, reps)` table shared by Monte Carlo summaries.
fn write_mc_table(out: &Path, name: &str, rows: &[TimeRow]) -> Result<()> {
    let mut csv = Csv::new(&["t", "estimate", "stderr", "reps"]);
    for r in rows {
        csv.row(vec![r.t.into(), r.estimate.mean.into(), r.estimate.stderr.into(), r.estimate.reps.into()]);
    }
    csv.write(out, name)?;
    Ok(())
}

pub fn spin_run(cfg: &RunConfig, out: &Path) -> Result<bool> {
    let k = cfg.kernel()?;
    let p = cfg.np_params()?;
    let init = cfg.initial_condition()?;
    let seed = cfg.seed();
    let times = grid(cfg.spin.horizon, cfg.spin.record_step);
    let per_site = cfg.spin.per_site;
    let runs: Vec<Result<(Vec<f64>, Vec<SpinConfig>)>> = replicates(seed, "cli/spin-run", cfg.reps, |_, rng| {
        let eta0 = init.realize(k.len(), rng)?;
        let tr = simulate_gillespie(&p, &k, &eta0, cfg.spin.horizon, rng)?;
        let path = tr.density_path();
        let configs = if per_site { times.iter().map(|&t| tr.config_at(t)).collect() } else { Vec::new() };
        Ok((times.iter().map(|&t| step_value(&path, t)).collect(), configs))
    });
    let (runs, configs): (Vec<_>, Vec<_>) = runs.into_iter().collect::<Result<Vec<_>>>()?.into_iter().unzip();
    if per_site {
        let mut sites = Csv::new(&["replicate", "t", "site", "value"]);
        for (r, cs) in configs.iter().enumerate() {
            for (&t, c) in times.iter().zip(cs) {
                for (x, &v) in c.as_slice().iter().enumerate() {
                    sites.row(vec![r.into(), t.into(), x.into(), u64::from(v).into()]);
                }
            }
        }
        sites.write(out, "spin-sites.csv")?;
    }
    let mut csv = Csv::new(&["replicate", "t", "density"]);
    for (r, row) in runs.iter().enumerate() {
        for (&t, &d) in times.iter().zip(row) {
            csv.row(vec![r.into(), t.into(), d.into()]);
        }
    }
    csv.write(out, "spin-run.csv")?;
    let summary = time_rows(estimates_by_time(&times, &runs, seed)?);
    write_mc_table(out, "spin-run-summary.csv", &summary)?;
    write_report(out, "spin-run", cfg, None, &summary)?;
    Ok(true)
}

#[derive(Serialize)]
struct DualRunResult {
    survival: McEstimate,
    mean_size: Vec<TimeRow>,
}

pub fn dual_run(cfg: &RunConfig, out: &Path) -> Result<bool> {
    let k = cfg.kernel()?;
    let p = cfg.np_params()?;
    let seed = cfg.seed();
    SpinConfig::indicator(k.len(), &cfg.spin.b)?;
    let dual = DualSimulator::new(&p, &k)?;
    let times = grid(cfg.spin.horizon, cfg.spin.record_step);
    let runs: Vec<Vec<f64>> = replicates(seed, "cli/dual-run", cfg.reps, |_, rng| {
        let tr = dual.run(&cfg.spin.b, cfg.spin.horizon, rng).expect("validated start set");
        times.iter().map(|&t| tr.at(t).count_ones() as f64).collect()
    });
    let mut csv = Csv::new(&["replicate", "t", "size"]);
    for (r, row) in runs.iter().enumerate() {
        for (&t, &s) in times.iter().zip(row) {
            csv.row(vec![r.into(), t.into(), (s as u64).into()]);
        }
    }
    csv.write(out, "dual-run.csv")?;
    let alive: Vec<bool> = runs.iter().map(|r| *r.last().expect("nonempty grid") > 0.0).collect();
    let result = DualRunResult {
        survival: McEstimate::proportion(&alive, seed)?,
        mean_size: time_rows(estimates_by_time(&times, &runs, seed)?),
    };
    write_mc_table(out, "dual-run-summary.csv", &result.mean_size)?;
    write_report(out, "dual-run", cfg, None, &result)?;
    Ok(true)
}

#[derive(Serialize)]
struct ParityResult {
    pathwise_logs: usize,
    pathwise_violations: usize,
    mc: ipsd_core::dualspin::ParityDualityReport,
    bernoulli: Option<ipsd_core::dualspin::BernoulliParityReport>,
}

/// Pathwise identity on shared event logs plus the independent-run comparison.
pub fn parity_check(cfg: &RunConfig, out: &Path) -> Result<bool> {
    let k = cfg.kernel()?;
    let p = cfg.np_params()?;
    let seed = cfg.seed();
    let (a, b, t) = (&cfg.parity.a, &cfg.parity.b, cfg.parity.t);
    ensure!(t > 0.0, "parity.t must be positive");
    SpinConfig::indicator(k.len(), a)?;
    SpinConfig::indicator(k.len(), b)?;
    let sampler = EventSampler::new(&p, &k)?;
    let pairs: Vec<(u8, u8)> = replicates(seed, "cli/parity/pathwise", cfg.reps, |_, rng| {
        let log = sampler.sample(t, rng).expect("positive horizon");
        let fwd = parity(&evolve_graphical(a, &log, t).expect("checked"), b);
        let dual = parity(&evolve_dual_replay(b, &log, t).expect("checked"), a);
        (fwd, dual)
    });
    let mut csv = Csv::new(&["replicate", "t", "parity_forward", "parity_dual"]);
    for (r, &(f, d)) in pairs.iter().enumerate() {
        csv.row(vec![r.into(), t.into(), u64::from(f).into(), u64::from(d).into()]);
    }
    csv.write(out, "parity-check.csv")?;
    let violations = pairs.iter().filter(|(f, d)| f != d).count();
    let mc = parity_duality_mc(&p, &k, a, b, t, cfg.reps, seed)?;
    let bernoulli = if cfg.parity.bernoulli {
        ensure!(p.is_symmetric() && p.alpha()? == 0.0, "the Bernoulli identity needs spin.alpha = 0");
        Some(bernoulli_parity_identity(&p, &k, b, t, cfg.reps, seed)?)
    } else {
        None
    };
    let pass = violations == 0 && mc.passes() && bernoulli.as_ref().is_none_or(|r| r.z.abs() < 4.0);
    let result = ParityResult { pathwise_logs: cfg.reps, pathwise_violations: violations, mc, bernoulli };
    write_report(out, "parity-check", cfg, Some(pass), &result)?;
    Ok(pass)
}

#[derive(Serialize)]
struct ExactEntry {
    kernel: String,
    alpha: f64,
    generator_gap: f64,
    fk_residual: Option<f64>,
}

#[derive(Serialize)]
struct ExactResult {
    max_generator_gap: f64,
    max_fk_residual: f64,
    battery: Vec<ExactEntry>,
}

pub const GENERATOR_TOL: f64 = 1e-12;
pub const FK_TOL: f64 = 1e-9;

pub fn exact_check(cfg: &RunConfig, out: &Path) -> Result<bool> {
    let e = &cfg.exact;
    let mut kernels: Vec<(String, Kernel<f64>)> = Vec::new();
    for &l in &e.torus_sides {
        kernels.push((format!("torus d=1 L={l}"), Kernel::torus(1, l)?));
    }
    for &n in &e.complete_sizes {
        kernels.push((format!("complete N={n}"), Kernel::complete(n)?));
    }
    let mut battery = Vec::new();
    for (name, k) in &kernels {
        for &alpha in &e.alphas {
            let p = NpParams::symmetric(alpha)?;
            let gap = build_generator_from_events(&p, k)?.max_abs_diff(&build_generator_np(&p, k)?);
            let fk = if k.len() <= e.fk_max_sites {
                let mut worst: f64 = 0.0;
                for &t in &e.times {
                    worst = worst.max(feynman_kac_max_residual(&p, k, t)?);
                }
                Some(worst)
            } else {
                None
            };
            battery.push(ExactEntry { kernel: name.clone(), alpha, generator_gap: gap, fk_residual: fk });
        }
    }
    let max_generator_gap = battery.iter().map(|b| b.generator_gap).fold(0.0, f64::max);
    let max_fk_residual = battery.iter().filter_map(|b| b.fk_residual).fold(0.0, f64::max);
    let pass = max_generator_gap < GENERATOR_TOL && max_fk_residual < FK_TOL;
    let mut csv = Csv::new(&["kernel_index", "alpha", "generator_gap", "fk_residual"]);
    for (i, b) in battery.iter().enumerate() {
        csv.row(vec![(i / e.alphas.len().max(1)).into(), b.alpha.into(), b.generator_gap.into(), b.fk_residual.unwrap_or(f64::NAN).into()]);
    }
    csv.write(out, "exact-check.csv")?;
    write_report(out, "exact-check", cfg, Some(pass), &ExactResult { max_generator_gap, max_fk_residual, battery })?;
    Ok(pass)
}

#[derive(Serialize)]
struct MeanfieldResult {
    equilibrium: Option<f64>,
    terminal_p0: f64,
    error_estimate: f64,
    comparator: Option<ipsd_core::meanfield::ComparatorReport>,
}

pub fn meanfield(cfg: &RunConfig, out: &Path) -> Result<bool> {
    let m = &cfg.meanfield;
    let path = integrate_density(1.0 - m.density0, m.lambda, m.alpha01, m.alpha10, m.horizon, m.dt)?;
    let mut csv = Csv::new(&["t", "p0", "density1"]);
    for t in grid(m.horizon, m.record_step) {
        let p0 = path.at(t)[0];
        csv.row(vec![t.into(), p0.into(), (1.0 - p0).into()]);
    }
    csv.write(out, "meanfield.csv")?;
    let comparator = if m.compare {
        let p = NpParams::general(m.lambda, m.alpha01, m.alpha10)?;
        let report = meanfield_comparator(cfg.lattice.sites, &p, m.density0, m.horizon, cfg.reps, cfg.seed())?;
        let mut sup = Csv::new(&["replicate", "sup_distance"]);
        for (r, &d) in report.sup_distances.iter().enumerate() {
            sup.row(vec![r.into(), d.into()]);
        }
        sup.write(out, "meanfield-sup.csv")?;
        Some(report)
    } else {
        None
    };
    let result = MeanfieldResult {
        equilibrium: equilibrium(m.lambda, m.alpha01, m.alpha10).ok(),
        terminal_p0: path.terminal()[0],
        error_estimate: path.error_estimate,
        comparator,
    };
    write_report(out, "meanfield", cfg, None, &result)?;
    Ok(true)
}

#[derive(Serialize)]
struct DiffusionRow {
    t: f64,
    mean_p: f64,
    var_p: f64,
    het_stat: McEstimate,
}

pub fn diffusion_run(cfg: &RunConfig, out: &Path) -> Result<bool> {
    let d = &cfg.diffusion;
    let mig = cfg.migration()?;
    ensure!(d.site < mig.len(), "diffusion.site {} out of range", d.site);
    let params = DiffusionParams::new(d.s, d.mu, d.noise, mig)?;
    let p0 = DiffusionState::constant(params.sites(), d.init)?;
    let scheme = parse_scheme(&d.scheme)?;
    let times = grid(d.horizon, d.record_step);
    let seed = cfg.seed();
    let paths: Vec<Result<_>> = replicates(seed, "cli/diffusion-run", cfg.reps, |_, rng| Ok(simulate_with(&params, &p0, d.dt, &times, scheme, rng)?));
    let paths = paths.into_iter().collect::<Result<Vec<_>>>()?;
    let het = ipsd_core::diffusion::heterozygosity_stat(&paths, d.kappa, d.site, seed)?;
    let mut rows = Vec::with_capacity(times.len());
    let mut csv = Csv::new(&["t", "mean_p", "var_p", "het_stat"]);
    for (j, h) in het.into_iter().enumerate() {
        let v: Vec<f64> = paths.iter().map(|p| p.states[j].values()[d.site]).collect();
        let est = McEstimate::from_samples(&v, seed)?;
        let var = est.stderr * est.stderr * v.len() as f64;
        csv.row(vec![times[j].into(), est.mean.into(), var.into(), h.estimate.mean.into()]);
        rows.push(DiffusionRow { t: times[j], mean_p: est.mean, var_p: var, het_stat: h.estimate });
    }
    csv.write(out, "diffusion-run.csv")?;
    if d.per_site {
        let mut all = Csv::new(&["replicate", "t", "site", "p"]);
        for (r, p) in paths.iter().enumerate() {
            for (j, st) in p.states.iter().enumerate() {
                for (x, &v) in st.values().iter().enumerate() {
                    all.row(vec![r.into(), times[j].into(), x.into(), v.into()]);
                }
            }
        }
        all.write(out, "diffusion-sites.csv")?;
    }
    write_report(out, "diffusion-run", cfg, None, &rows)?;
    Ok(true)
}

#[derive(Serialize)]
struct WalkerResult {
    survival: ipsd_core::walkers::SurvivalReport,
    extinct: usize,
    horizon: usize,
    cap_hits: usize,
}

pub fn walker_run(cfg: &RunConfig, out: &Path) -> Result<bool> {
    let w = &cfg.walkers;
    let mig = cfg.migration()?;
    let kind = cfg.walker_kind()?;
    let xi0 = ParticleState::from_sites(mig.len(), &w.init)?;
    let times = grid(w.horizon, w.record_step);
    let seed = cfg.seed();
    let runs: Vec<Result<_>> = replicates(seed, "cli/walker-run", cfg.reps, |_, rng| Ok(simulate_walker(&kind, &mig, &xi0, w.horizon, w.cap, &times, rng)?));
    let runs = runs.into_iter().collect::<Result<Vec<_>>>()?;
    let mut csv = Csv::new(&["replicate", "t", "total", "occupied"]);
    for (r, run) in runs.iter().enumerate() {
        for g in &run.grid {
            csv.row(vec![r.into(), g.t.into(), g.total.into(), g.occupied.into()]);
        }
    }
    csv.write(out, "walker-run.csv")?;
    let count = |f: fn(&WalkerOutcome) -> bool| runs.iter().filter(|r| f(&r.outcome)).count();
    let result = WalkerResult {
        survival: survival_probability(&kind, &mig, &xi0, w.horizon, w.cap, cfg.reps, seed)?,
        extinct: count(|o| matches!(o, WalkerOutcome::Extinct { .. })),
        horizon: count(|o| matches!(o, WalkerOutcome::Horizon)),
        cap_hits: count(|o| matches!(o, WalkerOutcome::Cap { .. })),
    };
    write_report(out, "walker-run", cfg, None, &result)?;
    Ok(true)
}

pub const BATTERY_TOL: f64 = 1e-10;

#[derive(Serialize)]
struct MomentResult {
    battery: ipsd_core::momdual::BatteryReport,
    rows: Vec<ipsd_core::momdual::MomentRow>,
}

pub fn pairing(cfg: &RunConfig) -> Result<Pairing> {
    let m = &cfg.moment;
    Ok(match m.pairing.as_str() {
        "sigma" => {
            ensure!(m.mu == 2.0, "the sigma pairing needs moment.mu = 2");
            Pairing::Sigma { s: m.s }
        }
        "p" => Pairing::P { s: m.s, mu: m.mu },
        other => bail!("unknown pairing {other:?}"),
    })
}

pub fn moment_check(cfg: &RunConfig, out: &Path) -> Result<bool> {
    let m = &cfg.moment;
    let mig = cfg.migration()?;
    let battery = generator_duality_battery(&mig, m.battery_max_particles, &m.battery_dbarw_s, &m.battery_bcrw, m.battery_count, cfg.seed())?;
    let setup = MomentSetup {
        pairing: pairing(cfg)?,
        p0: DiffusionState::constant(mig.len(), m.p0)?,
        xi0: ParticleState::from_sites(mig.len(), &m.xi0)?,
        migration: mig,
        times: m.times.clone(),
        dt: m.dt,
        reps: cfg.reps,
        seed: cfg.seed(),
    };
    let rows = moment_duality_mc(&setup)?;
    let mut csv = Csv::new(&["t", "forward_dt", "se_dt", "forward_dt2", "se_dt2", "dual", "se_dual", "z_dt", "z_dt2", "pass"]);
    for r in &rows {
        csv.row(vec![
            r.t.into(),
            r.forward_dt.mean.into(),
            r.forward_dt.stderr.into(),
            r.forward_dt2.mean.into(),
            r.forward_dt2.stderr.into(),
            r.dual.mean.into(),
            r.dual.stderr.into(),
            r.z_dt.into(),
            r.z_dt2.into(),
            r.pass.into(),
        ]);
    }
    csv.write(out, "moment-check.csv")?;
    let pass = battery.max_gap < BATTERY_TOL && rows.iter().all(|r| r.pass);
    write_report(out, "moment-check", cfg, Some(pass), &MomentResult { battery, rows })?;
    Ok(pass)
}

pub fn coexist_probe(cfg: &RunConfig, out: &Path) -> Result<bool> {
    let c = &cfg.coexist;
    let report = coexistence_probe(&CoexistenceSetup {
        s: c.s,
        migration: cfg.migration()?,
        kappa: c.kappa,
        het_time: c.het_time,
        walker_horizon: c.walker_horizon,
        dt: c.dt,
        scheme: parse_scheme(&c.scheme)?,
        het_reps: cfg.reps,
        walker_reps: c.walker_reps.unwrap_or(cfg.reps),
        seed: cfg.seed(),
    })?;
    let pass = report.bound_holds && !report.inconsistent;
    write_report(out, "coexist-probe", cfg, Some(pass), &report)?;
    Ok(pass)
}

pub fn extinct_probe(cfg: &RunConfig, out: &Path) -> Result<bool> {
    let e = &cfg.extinct;
    let report = extinction_probe(&ExtinctionSetup {
        s: e.s,
        mu: e.mu,
        eps: e.eps,
        p0: e.p0,
        xi0: e.xi0.clone(),
        migration: cfg.migration()?,
        times: e.times.clone(),
        dt: e.dt,
        scheme: parse_scheme(&e.scheme)?,
        reps: cfg.reps,
        seed: cfg.seed(),
    })?;
    let mut csv = Csv::new(&["t", "forward", "se_forward", "dual_bound", "se_dual", "forward_le_dual"]);
    for r in &report.rows {
        csv.row(vec![
            r.t.into(),
            r.forward.mean.into(),
            r.forward.stderr.into(),
            r.dual_bound.mean.into(),
            r.dual_bound.stderr.into(),
            r.forward_le_dual.into(),
        ]);
    }
    csv.write(out, "extinct-probe.csv")?;
    write_report(out, "extinct-probe", cfg, Some(report.pass), &report)?;
    Ok(report.pass)
}
