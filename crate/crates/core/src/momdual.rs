//! Moment dualities between lattice Wright-Fisher diffusions and the walker
//! systems: exact generator identities, Monte Carlo semigroup checks, and the
//! coexistence and extinction probes.
//!
//! Generators are evaluated in polynomial form: each term multiplies explicit
//! powers of the focal site by the product over the other sites, so states
//! with zero entries need no division.

use rand::Rng;
use serde::Serialize;

use crate::diffusion::{simulate_coupled, simulate_with, DiffusionParams, DiffusionState, Migration, Scheme};
use crate::error::{Error, Result};
use crate::replicate::replicates;
use crate::scalar::{powu, Scalar};
use crate::stats::{wilson_lower, McEstimate, Z_ONE_SIDED_99};
use crate::stream::derive_stream;
use crate::walkers::{simulate_walker, ParticleState, WalkerKind, DEFAULT_CAP};

/// `prod_x v(x)^{xi(x)}` with `0^0 = 1`.
pub fn moment_eval<T: Scalar>(values: &[T], xi: &ParticleState) -> T {
    values
        .iter()
        .zip(xi.counts())
        .fold(T::one(), |acc, (&v, &k)| acc * powu(v, k))
}

fn check_len(values: usize, xi: &ParticleState, sites: usize) -> Result<()> {
    if values != sites {
        return Err(Error::DimensionMismatch { expected: sites, got: values });
    }
    if xi.len() != sites {
        return Err(Error::DimensionMismatch { expected: sites, got: xi.len() });
    }
    Ok(())
}

/// Product of `v(y)^{xi(y)}` over `y != x`.
fn rest<T: Scalar>(values: &[T], xi: &ParticleState, x: usize) -> T {
    values
        .iter()
        .zip(xi.counts())
        .enumerate()
        .filter(|&(y, _)| y != x)
        .fold(T::one(), |acc, (_, (&v, &k))| acc * powu(v, k))
}

/// Migration part shared by both coordinate systems:
/// `xi(x) sum_y m_xy (v(y) v(x)^{xi(x)-1} - v(x)^{xi(x)}) * rest`.
fn migration_term<T: Scalar>(v: &[T], xi: &ParticleState, mig: &Migration<T>, x: usize, r: T) -> T {
    let k = xi.get(x);
    let (lower, own) = (powu(v[x], k - 1), powu(v[x], k));
    let inner = mig
        .neighbors(x)
        .iter()
        .fold(T::zero(), |acc, &(y, w)| acc + w * (v[y] * lower - own));
    T::lit(k as f64) * inner * r
}

/// Generator of the sigma-process (`mu = 2`, `N = 1`) applied to `H(., xi)` at `sigma`.
pub fn gen_sigma_on_h<T: Scalar>(sigma: &[T], xi: &ParticleState, s: T, mig: &Migration<T>) -> Result<T> {
    check_len(sigma.len(), xi, mig.len())?;
    let half = T::lit(0.5);
    let mut total = T::zero();
    for x in 0..sigma.len() {
        let k = xi.get(x);
        if k == 0 {
            continue;
        }
        let r = rest(sigma, xi, x);
        let kf = T::lit(k as f64);
        let own = powu(sigma[x], k);
        total = total + migration_term(sigma, xi, mig, x, r);
        total = total + half * s * kf * (powu(sigma[x], k + 2) - own) * r;
        if k >= 2 {
            total = total + half * kf * (kf - T::one()) * (powu(sigma[x], k - 2) - own) * r;
        }
    }
    Ok(total)
}

/// Generator of the p-process (`N = 1`) applied to `H(., xi)` at `p`.
pub fn gen_p_on_h<T: Scalar>(p: &[T], xi: &ParticleState, s: T, mu: T, mig: &Migration<T>) -> Result<T> {
    check_len(p.len(), xi, mig.len())?;
    let half = T::lit(0.5);
    let mut total = T::zero();
    for x in 0..p.len() {
        let k = xi.get(x);
        if k == 0 {
            continue;
        }
        let r = rest(p, xi, x);
        let kf = T::lit(k as f64);
        let own = powu(p[x], k);
        total = total + migration_term(p, xi, mig, x, r);
        total = total + s * kf * (own - (mu + T::one()) * powu(p[x], k + 1) + mu * powu(p[x], k + 2)) * r;
        if k >= 2 {
            total = total + half * kf * (kf - T::one()) * (powu(p[x], k - 1) - own) * r;
        }
    }
    Ok(total)
}

/// `sum rate * (H(v, xi') - H(v, xi))` over the walker's rate table.
pub fn gen_walker_on_h<T: Scalar>(values: &[T], xi: &ParticleState, kind: &WalkerKind, mig: &Migration<f64>) -> Result<T> {
    check_len(values.len(), xi, mig.len())?;
    let before = moment_eval(values, xi);
    let mut total = T::zero();
    for (tr, rate) in crate::walkers::walker_rates(kind, xi, mig)? {
        let mut after = xi.clone();
        tr.apply(&mut after);
        total = total + T::lit(rate) * (moment_eval(values, &after) - before);
    }
    Ok(total)
}

#[derive(Debug, Clone, Serialize)]
pub struct BatteryReport {
    pub sites: usize,
    pub pairs_per_setting: usize,
    pub max_particles: u32,
    /// `(s, max gap)` for the sigma-process against DBARW at branch rate `s/2`.
    pub dbarw: Vec<(f64, f64)>,
    /// `(s, mu, max gap)` for the p-process against BCRW.
    pub bcrw: Vec<(f64, f64, f64)>,
    pub max_gap: f64,
}

fn random_particles<R: Rng + ?Sized>(rng: &mut R, n: usize, max: u32) -> ParticleState {
    let total = rng.random_range(0..=max);
    let mut counts = vec![0u32; n];
    for _ in 0..total {
        counts[rng.random_range(0..n)] += 1;
    }
    ParticleState::from_counts(counts)
}

/// Values in `[lo, 1]` with atoms at `lo`, `0` and `1` so that zero entries are exercised.
fn random_values<R: Rng + ?Sized>(rng: &mut R, n: usize, lo: f64) -> Vec<f64> {
    (0..n)
        .map(|_| match rng.random_range(0..10) {
            0 => 0.0,
            1 => 1.0,
            2 => lo,
            _ => rng.random_range(lo..=1.0),
        })
        .collect()
}

/// Max generator gap over `count` random `(state, xi)` pairs per parameter setting.
pub fn generator_duality_battery(
    mig: &Migration<f64>,
    max_particles: u32,
    dbarw_s: &[f64],
    bcrw: &[(f64, f64)],
    count: usize,
    seed: u64,
) -> Result<BatteryReport> {
    let side = mig.len();
    let mut dbarw = Vec::new();
    for (i, &s) in dbarw_s.iter().enumerate() {
        let kind = WalkerKind::Dbarw { branch_rate: s / 2.0 };
        kind.validate()?;
        let mut rng = derive_stream(seed, i as u64, "momdual/battery/dbarw");
        let mut worst: f64 = 0.0;
        for _ in 0..count {
            let sigma = random_values(&mut rng, side, -1.0);
            let xi = random_particles(&mut rng, side, max_particles);
            let lhs = gen_sigma_on_h(&sigma, &xi, s, mig)?;
            let rhs = gen_walker_on_h(&sigma, &xi, &kind, mig)?;
            worst = worst.max((lhs - rhs).abs());
        }
        dbarw.push((s, worst));
    }
    let mut bc = Vec::new();
    for (i, &(s, mu)) in bcrw.iter().enumerate() {
        let kind = WalkerKind::Bcrw { s, mu };
        kind.validate()?;
        let mut rng = derive_stream(seed, i as u64, "momdual/battery/bcrw");
        let mut worst: f64 = 0.0;
        for _ in 0..count {
            let p = random_values(&mut rng, side, 0.0);
            let xi = random_particles(&mut rng, side, max_particles);
            let lhs = gen_p_on_h(&p, &xi, s, mu, mig)?;
            let rhs = gen_walker_on_h(&p, &xi, &kind, mig)?;
            worst = worst.max((lhs - rhs).abs());
        }
        bc.push((s, mu, worst));
    }
    let max_gap = dbarw.iter().map(|d| d.1).chain(bc.iter().map(|b| b.2)).fold(0.0, f64::max);
    Ok(BatteryReport { sites: side, pairs_per_setting: count, max_particles, dbarw, bcrw: bc, max_gap })
}

/// Which coordinates and which walker system are paired.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Pairing {
    /// `sigma = 1 - 2p` with `mu = 2`, dual DBARW at branch rate `s/2` (`s >= 0`).
    Sigma { s: f64 },
    /// `p` itself with `s <= 0`, `mu` in `[-1, 0]`, dual BCRW; CRW when `s = 0`.
    P { s: f64, mu: f64 },
}

impl Pairing {
    pub fn walker_kind(&self) -> Result<WalkerKind> {
        let kind = match *self {
            Pairing::Sigma { s } => WalkerKind::Dbarw { branch_rate: s / 2.0 },
            Pairing::P { s, .. } if s == 0.0 => WalkerKind::Crw,
            Pairing::P { s, mu } => WalkerKind::Bcrw { s, mu },
        };
        kind.validate()?;
        Ok(kind)
    }

    pub fn diffusion_params(&self, mig: &Migration<f64>) -> Result<DiffusionParams<f64>> {
        self.walker_kind()?;
        let (s, mu) = match *self {
            Pairing::Sigma { s } => (s, 2.0),
            Pairing::P { s, mu } => (s, mu),
        };
        DiffusionParams::new(s, mu, 1.0, mig.clone())
    }

    /// Coordinates in which `H` is evaluated.
    pub fn coords(&self, p: &DiffusionState<f64>) -> Vec<f64> {
        match self {
            Pairing::Sigma { .. } => p.sigma_transform().values().to_vec(),
            Pairing::P { .. } => p.values().to_vec(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct MomentSetup {
    pub pairing: Pairing,
    pub migration: Migration<f64>,
    pub p0: DiffusionState<f64>,
    pub xi0: ParticleState,
    pub times: Vec<f64>,
    pub dt: f64,
    pub reps: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MomentRow {
    pub t: f64,
    pub forward_dt: McEstimate,
    pub forward_dt2: McEstimate,
    pub dual: McEstimate,
    pub z_dt: f64,
    pub z_dt2: f64,
    /// `|forward_dt - forward_dt2|`.
    pub halving_shift: f64,
    /// `sqrt(se_dt^2 + se_dt2^2)`.
    pub halving_stderr: f64,
    pub pass: bool,
}

pub const Z_THRESHOLD: f64 = 4.0;

/// Forward side `E[H(x_t, xi0)]` by diffusion at `dt` and `dt/2` on shared
/// Brownian paths; dual side `E[H(x_0, xi_t)]` by walker simulation. A row
/// passes when both `|z| < 4` and the halving shift is within one combined
/// standard error.
pub fn moment_duality_mc(setup: &MomentSetup) -> Result<Vec<MomentRow>> {
    let MomentSetup { pairing, migration, p0, xi0, times, dt, reps, seed } = setup;
    if *reps < 2 {
        return Err(Error::TooFewReplicates(*reps));
    }
    let params = pairing.diffusion_params(migration)?;
    let kind = pairing.walker_kind()?;
    if p0.len() != migration.len() || xi0.len() != migration.len() {
        return Err(Error::DimensionMismatch { expected: migration.len(), got: p0.len().min(xi0.len()) });
    }
    let horizon = times.iter().copied().fold(0.0, f64::max);
    let fwd: Vec<Result<Vec<(f64, f64)>>> = replicates(*seed, "momdual/forward", *reps, |_, rng| {
        let (c, f) = simulate_coupled(&params, p0, *dt, times, rng)?;
        Ok(c.states
            .iter()
            .zip(&f.states)
            .map(|(a, b)| (moment_eval(&pairing.coords(a), xi0), moment_eval(&pairing.coords(b), xi0)))
            .collect())
    });
    let fwd = fwd.into_iter().collect::<Result<Vec<_>>>()?;
    let x0 = pairing.coords(p0);
    let dual: Vec<Result<Vec<f64>>> = replicates(*seed, "momdual/dual", *reps, |_, rng| {
        let run = simulate_walker(&kind, migration, xi0, horizon, DEFAULT_CAP, times, rng)?;
        if run.snapshots.len() != times.len() {
            return Err(Error::InvalidParameter("walker hit the cap before the last record time".into()));
        }
        Ok(run.snapshots.iter().map(|xi| moment_eval(&x0, xi)).collect())
    });
    let dual = dual.into_iter().collect::<Result<Vec<_>>>()?;
    times
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let a: Vec<f64> = fwd.iter().map(|r| r[i].0).collect();
            let b: Vec<f64> = fwd.iter().map(|r| r[i].1).collect();
            let d: Vec<f64> = dual.iter().map(|r| r[i]).collect();
            let forward_dt = McEstimate::from_samples(&a, *seed)?.with_dt(*dt);
            let forward_dt2 = McEstimate::from_samples(&b, *seed)?.with_dt(dt / 2.0);
            let dual = McEstimate::from_samples(&d, *seed)?;
            let z_dt = forward_dt.z_against(&dual);
            let z_dt2 = forward_dt2.z_against(&dual);
            let halving_shift = (forward_dt.mean - forward_dt2.mean).abs();
            let halving_stderr = forward_dt.combined_stderr(&forward_dt2);
            let pass = z_dt.abs() < Z_THRESHOLD && z_dt2.abs() < Z_THRESHOLD && halving_shift <= halving_stderr;
            Ok(MomentRow { t, forward_dt, forward_dt2, dual, z_dt, z_dt2, halving_shift, halving_stderr, pass })
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct CoexistenceSetup {
    pub s: f64,
    pub migration: Migration<f64>,
    pub kappa: f64,
    /// Time at which heterozygosity is measured.
    pub het_time: f64,
    /// Horizon of the DBARW survival run.
    pub walker_horizon: f64,
    pub dt: f64,
    pub scheme: Scheme,
    pub het_reps: usize,
    pub walker_reps: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CoexistenceReport {
    pub heterozygosity: McEstimate,
    pub heterozygosity_lower_99: f64,
    pub survival: McEstimate,
    pub survival_lower_99: f64,
    pub cap_hits: usize,
    /// `E[sigma_t(0)^2]` from the heterozygosity runs.
    pub sigma_sq: McEstimate,
    /// `(1 - 2 kappa)^2 delta + (1 - delta)` with `delta` the heterozygosity estimate.
    pub sigma_sq_bound: f64,
    pub bound_holds: bool,
    /// Heterozygosity bounded away from zero while no DBARW run survived.
    pub inconsistent: bool,
}

pub fn coexistence_probe(c: &CoexistenceSetup) -> Result<CoexistenceReport> {
    if !(c.s >= 0.0) {
        return Err(Error::InvalidParameter(format!("coexistence probe needs s >= 0, got {}", c.s)));
    }
    if !(0.0..0.5).contains(&c.kappa) {
        return Err(Error::InvalidParameter(format!("kappa = {} must lie in [0, 1/2)", c.kappa)));
    }
    let mig = &c.migration;
    let params = DiffusionParams::new(c.s, 2.0, 1.0, mig.clone())?;
    let p0 = DiffusionState::constant(mig.len(), 0.5)?;
    let samples: Vec<Result<f64>> = replicates(c.seed, "momdual/coexist/forward", c.het_reps, |_, rng| {
        Ok(simulate_with(&params, &p0, c.dt, &[c.het_time], c.scheme, rng)?.states[0].values()[0])
    });
    let p_at: Vec<f64> = samples.into_iter().collect::<Result<_>>()?;
    let inside: Vec<bool> = p_at.iter().map(|&p| p > c.kappa && p < 1.0 - c.kappa).collect();
    let hits = inside.iter().filter(|&&b| b).count();
    let heterozygosity = McEstimate::proportion(&inside, c.seed)?.with_dt(c.dt);
    let sig: Vec<f64> = p_at.iter().map(|&p| (1.0 - 2.0 * p).powi(2)).collect();
    let sigma_sq = McEstimate::from_samples(&sig, c.seed)?.with_dt(c.dt);
    let delta = heterozygosity.mean;
    let sigma_sq_bound = (1.0 - 2.0 * c.kappa).powi(2) * delta + (1.0 - delta);
    let surv = crate::walkers::survival_probability(
        &WalkerKind::Dbarw { branch_rate: c.s / 2.0 },
        mig,
        &ParticleState::point(mig.len(), 0, 2)?,
        c.walker_horizon,
        DEFAULT_CAP,
        c.walker_reps,
        c.seed,
    )?;
    let heterozygosity_lower_99 = wilson_lower(hits, c.het_reps, Z_ONE_SIDED_99);
    Ok(CoexistenceReport {
        heterozygosity,
        heterozygosity_lower_99,
        inconsistent: heterozygosity_lower_99 > 0.0 && surv.survivors == 0,
        survival: surv.survival,
        survival_lower_99: surv.lower_99,
        cap_hits: surv.cap_hits,
        bound_holds: sigma_sq.mean <= sigma_sq_bound + 1e-12,
        sigma_sq,
        sigma_sq_bound,
    })
}

#[derive(Debug, Clone)]
pub struct ExtinctionSetup {
    pub s: f64,
    pub mu: f64,
    pub eps: f64,
    /// Constant initial density; must not exceed `1 - eps`.
    pub p0: f64,
    pub xi0: Vec<usize>,
    pub migration: Migration<f64>,
    pub times: Vec<f64>,
    pub dt: f64,
    pub scheme: Scheme,
    pub reps: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExtinctionRow {
    pub t: f64,
    /// `E[prod p_t^{xi0}]`.
    pub forward: McEstimate,
    /// `E[(1 - eps)^{|xi_t|}]` under BCRW.
    pub dual_bound: McEstimate,
    pub forward_le_dual: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExtinctionReport {
    pub rows: Vec<ExtinctionRow>,
    pub forward_decreasing: bool,
    pub dual_decreasing: bool,
    pub pass: bool,
}

/// Comparisons use three combined standard errors.
pub const PROBE_SIGMAS: f64 = 3.0;

fn nonincreasing(est: &[McEstimate]) -> bool {
    est.windows(2).all(|w| w[1].mean <= w[0].mean + PROBE_SIGMAS * w[0].combined_stderr(&w[1]))
}

pub fn extinction_probe(e: &ExtinctionSetup) -> Result<ExtinctionReport> {
    let kind = WalkerKind::Bcrw { s: e.s, mu: e.mu };
    kind.validate()?;
    if !(e.eps > 0.0 && e.eps < 1.0) {
        return Err(Error::InvalidParameter(format!("eps = {} must lie in (0, 1)", e.eps)));
    }
    if !(0.0..=1.0 - e.eps).contains(&e.p0) {
        return Err(Error::InvalidParameter(format!("p0 = {} must lie in [0, 1 - eps]", e.p0)));
    }
    if e.reps < 2 {
        return Err(Error::TooFewReplicates(e.reps));
    }
    let mig = &e.migration;
    let params = DiffusionParams::new(e.s, e.mu, 1.0, mig.clone())?;
    let p0 = DiffusionState::constant(mig.len(), e.p0)?;
    let xi0 = ParticleState::from_sites(mig.len(), &e.xi0)?;
    let horizon = e.times.iter().copied().fold(0.0, f64::max);
    let fwd: Vec<Result<Vec<f64>>> = replicates(e.seed, "momdual/extinct/forward", e.reps, |_, rng| {
        Ok(simulate_with(&params, &p0, e.dt, &e.times, e.scheme, rng)?.states.iter().map(|st| moment_eval(st.values(), &xi0)).collect())
    });
    let fwd = fwd.into_iter().collect::<Result<Vec<_>>>()?;
    let base = 1.0 - e.eps;
    let dual: Vec<Result<Vec<f64>>> = replicates(e.seed, "momdual/extinct/dual", e.reps, |_, rng| {
        let run = simulate_walker(&kind, mig, &xi0, horizon, DEFAULT_CAP, &e.times, rng)?;
        // a cap hit leaves (1 - eps)^{|xi|} below (1 - eps)^cap, which is 0 in double precision
        Ok((0..e.times.len()).map(|i| run.grid.get(i).map_or(0.0, |g| base.powf(g.total as f64))).collect())
    });
    let dual = dual.into_iter().collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::with_capacity(e.times.len());
    for (i, &t) in e.times.iter().enumerate() {
        let forward = McEstimate::from_samples(&fwd.iter().map(|r| r[i]).collect::<Vec<_>>(), e.seed)?.with_dt(e.dt);
        let dual_bound = McEstimate::from_samples(&dual.iter().map(|r| r[i]).collect::<Vec<_>>(), e.seed)?;
        let forward_le_dual = forward.mean <= dual_bound.mean + PROBE_SIGMAS * forward.combined_stderr(&dual_bound);
        rows.push(ExtinctionRow { t, forward, dual_bound, forward_le_dual });
    }
    let forward_decreasing = nonincreasing(&rows.iter().map(|r| r.forward.clone()).collect::<Vec<_>>());
    let dual_decreasing = nonincreasing(&rows.iter().map(|r| r.dual_bound.clone()).collect::<Vec<_>>());
    let pass = forward_decreasing && dual_decreasing && rows.iter().all(|r| r.forward_le_dual);
    Ok(ExtinctionReport { rows, forward_decreasing, dual_decreasing, pass })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffusion::{drift, Stencil};
    use proptest::prelude::*;
    use rand::Rng;

    fn ring(side: usize, rho: f64) -> Migration<f64> {
        Migration::torus(1, side, &Stencil::NearestNeighbor { rate: rho }).unwrap()
    }

    #[test]
    fn moment_examples() {
        assert_eq!(moment_eval(&[0.3, -0.2], &ParticleState::empty(2)), 1.0);
        assert_eq!(moment_eval(&[1.0, 1.0], &ParticleState::from_counts(vec![4, 7])), 1.0);
        assert_eq!(moment_eval(&[-1.0, 0.5], &ParticleState::from_counts(vec![3, 0])), -1.0);
        assert_eq!(moment_eval(&[0.0, 0.5], &ParticleState::from_counts(vec![0, 1])), 0.5);
    }

    #[test]
    fn single_site_generator_examples() {
        let iso = Migration::<f64>::isolated(1);
        let xi = ParticleState::point(1, 0, 2).unwrap();
        let a: f64 = gen_sigma_on_h(&[0.5], &xi, 1.0, &iso).unwrap();
        let b: f64 = gen_walker_on_h(&[0.5], &xi, &WalkerKind::Dbarw { branch_rate: 0.5 }, &iso).unwrap();
        assert!((a - 0.5625).abs() < 1e-15 && (b - 0.5625).abs() < 1e-15);
        let a: f64 = gen_p_on_h(&[0.5], &xi, -1.0, -0.5, &iso).unwrap();
        let b = gen_walker_on_h(&[0.5], &xi, &WalkerKind::Bcrw { s: -1.0, mu: -0.5 }, &iso).unwrap();
        assert!((a - b).abs() < 1e-12);
        let m = ring(6, 1.0);
        let empty = ParticleState::empty(6);
        assert_eq!(gen_sigma_on_h(&[0.3; 6], &empty, 2.0, &m).unwrap(), 0.0);
        assert_eq!(gen_walker_on_h(&[0.3; 6], &empty, &WalkerKind::Crw, &m).unwrap(), 0.0);
        let xi = ParticleState::from_counts(vec![2, 0, 1, 3, 0, 0]);
        assert_eq!(gen_sigma_on_h(&[1.0; 6], &xi, 2.0, &m).unwrap(), 0.0);
    }

    /// Diffusion generator from the SDE coefficients, in p coordinates, applied
    /// to `prod (a + b p)^{xi}` by the chain rule.
    fn sde_generator(params: &DiffusionParams<f64>, p: &[f64], xi: &ParticleState, a: f64, b: f64) -> f64 {
        let v: Vec<f64> = p.iter().map(|&q| a + b * q).collect();
        let mut total = 0.0;
        for x in 0..p.len() {
            let k = xi.get(x);
            if k == 0 {
                continue;
            }
            let r = rest(&v, xi, x);
            let d1 = k as f64 * b * powu(v[x], k - 1) * r;
            let d2 = if k >= 2 { (k * (k - 1)) as f64 * b * b * powu(v[x], k - 2) * r } else { 0.0 };
            total += drift(params, p, x) * d1 + 0.5 * p[x] * (1.0 - p[x]) * d2;
        }
        total
    }

    proptest! {
        #[test]
        fn closed_forms_match_sde_generator(
            p in prop::collection::vec(0.0f64..=1.0, 6),
            counts in prop::collection::vec(0u32..4, 6),
            s in -3.0f64..3.0,
            mu in -1.0f64..0.0,
        ) {
            let m = ring(6, 1.3);
            let xi = ParticleState::from_counts(counts);
            let sig: Vec<f64> = p.iter().map(|q| 1.0 - 2.0 * q).collect();
            let two = DiffusionParams::new(s, 2.0, 1.0, m.clone()).unwrap();
            let lhs = gen_sigma_on_h(&sig, &xi, s, &m).unwrap();
            prop_assert!((lhs - sde_generator(&two, &p, &xi, 1.0, -2.0)).abs() < 1e-9);
            let gen = DiffusionParams::new(s, mu, 1.0, m.clone()).unwrap();
            let lhs = gen_p_on_h(&p, &xi, s, mu, &m).unwrap();
            prop_assert!((lhs - sde_generator(&gen, &p, &xi, 0.0, 1.0)).abs() < 1e-9);
        }

        #[test]
        fn moment_bounded_by_one(v in prop::collection::vec(-1.0f64..=1.0, 5), c in prop::collection::vec(0u32..6, 5)) {
            prop_assert!(moment_eval(&v, &ParticleState::from_counts(c)).abs() <= 1.0);
        }
    }

    #[test]
    fn battery_small() {
        let r = generator_duality_battery(&ring(8, 1.0), 6, &[0.5, 5.0], &[(-1.0, -0.5), (-0.5, 0.0), (-1.0, -1.0)], 500, 3).unwrap();
        assert!(r.max_gap < 1e-10, "{r:?}");
        assert!(generator_duality_battery(&ring(8, 1.0), 6, &[-1.0], &[], 5, 3).is_err());
        assert!(generator_duality_battery(&ring(8, 1.0), 6, &[], &[(1.0, -0.5)], 5, 3).is_err());
    }

    #[test]
    fn battery_catches_wrong_branch_rate() {
        let m = ring(8, 1.0);
        let mut rng = derive_stream(1, 0, "wrong");
        let mut worst: f64 = 0.0;
        for _ in 0..100 {
            let sigma: Vec<f64> = (0..8).map(|_| rng.random_range(-1.0..1.0)).collect();
            let xi = random_particles(&mut rng, 8, 6);
            let a = gen_sigma_on_h(&sigma, &xi, 1.0, &m).unwrap();
            let b = gen_walker_on_h(&sigma, &xi, &WalkerKind::Dbarw { branch_rate: 1.0 }, &m).unwrap();
            worst = worst.max((a - b).abs());
        }
        assert!(worst > 1e-3);
    }

    #[test]
    fn single_precision_generators() {
        let iso = Migration::<f32>::isolated(1);
        let xi = ParticleState::point(1, 0, 2).unwrap();
        assert!((gen_sigma_on_h(&[0.5f32], &xi, 1.0, &iso).unwrap() - 0.5625).abs() < 1e-6);
    }

    #[test]
    fn time_zero_is_exact() {
        let m = ring(8, 1.0);
        let setup = MomentSetup {
            pairing: Pairing::Sigma { s: 1.0 },
            migration: m.clone(),
            p0: DiffusionState::constant(8, 0.25).unwrap(),
            xi0: ParticleState::from_sites(8, &[0, 1]).unwrap(),
            times: vec![0.0],
            dt: 1e-3,
            reps: 10,
            seed: 1,
        };
        let rows = moment_duality_mc(&setup).unwrap();
        assert_eq!(rows[0].forward_dt.mean, 0.25);
        assert_eq!(rows[0].dual.mean, 0.25);
        assert!(rows[0].pass);
    }

    #[test]
    fn small_mc_crw_case() {
        let setup = MomentSetup {
            pairing: Pairing::P { s: 0.0, mu: 0.0 },
            migration: ring(8, 1.0),
            p0: DiffusionState::constant(8, 0.25).unwrap(),
            xi0: ParticleState::from_sites(8, &[0, 1]).unwrap(),
            times: vec![0.5],
            dt: 1e-2,
            reps: 4000,
            seed: 2,
        };
        let rows = moment_duality_mc(&setup).unwrap();
        assert!(rows[0].z_dt2.abs() < 4.0, "{rows:?}");
    }

    #[test]
    fn extinction_trivial_cases() {
        let base = ExtinctionSetup {
            s: -1.0,
            mu: -0.5,
            eps: 0.25,
            p0: 0.0,
            xi0: vec![0],
            migration: ring(8, 1.0),
            times: vec![0.5, 1.0],
            dt: 1e-2,
            scheme: Scheme::WrightFisher,
            reps: 20,
            seed: 4,
        };
        let r = extinction_probe(&base).unwrap();
        assert!(r.rows.iter().all(|row| row.forward.mean == 0.0));
        let r = extinction_probe(&ExtinctionSetup { xi0: vec![], p0: 0.5, ..base.clone() }).unwrap();
        assert!(r.rows.iter().all(|row| row.forward.mean == 1.0 && row.dual_bound.mean == 1.0));
        assert!(extinction_probe(&ExtinctionSetup { p0: 0.9, ..base.clone() }).is_err());
        assert!(extinction_probe(&ExtinctionSetup { s: 1.0, ..base }).is_err());
    }
}
