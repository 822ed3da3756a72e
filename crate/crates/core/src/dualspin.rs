//! The parity dual of the symmetric spin system: branching with pairwise
//! annihilation plus annihilating random walk, obtained by transposing every
//! update matrix of the graphical construction.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernel::{Kernel, SpinConfig};
use crate::replicate::replicates;
use crate::scalar::{powu, Scalar};
use crate::spin::{evolve_graphical, evolve_graphical_from, EventKind, EventLog, EventSampler, NpParams};
use crate::stats::McEstimate;

/// Dual configuration; 1 marks an occupied site.
pub type DualConfig = SpinConfig;

/// `xi <- (Id + J^T) xi` over Z_2.
#[inline]
pub fn apply_event_dual(xi: &mut DualConfig, kind: &EventKind) {
    match *kind {
        EventKind::Annihilation { focal, pair: (y, z) } => {
            if xi.get(focal) == 1 {
                xi.flip(y);
                xi.flip(z);
            }
        }
        EventKind::Voter { focal, source } => {
            if xi.get(focal) == 1 {
                xi.flip(source);
                xi.set(focal, 0);
            }
        }
    }
}

/// `eta_hat_t^{t,B}`: the log's events up to `t`, transposed and applied
/// latest first, starting from `1_B`.
pub fn evolve_dual_replay(b: &[usize], log: &EventLog, t: f64) -> Result<DualConfig> {
    if t > log.horizon() {
        return Err(Error::BeyondHorizon { t, horizon: log.horizon() });
    }
    let mut xi = SpinConfig::indicator(log.sites(), b)?;
    for e in log.up_to(t).iter().rev() {
        apply_event_dual(&mut xi, &e.kind);
    }
    Ok(xi)
}

/// `<1_B, eta> mod 2`, i.e. `|B ∩ eta| mod 2`. `b` lists distinct sites.
#[inline]
pub fn parity(eta: &SpinConfig, b: &[usize]) -> u8 {
    debug_assert!(b.iter().enumerate().all(|(i, x)| !b[..i].contains(x)));
    b.iter().fold(0, |acc, &x| acc ^ eta.get(x))
}

/// Change-point record of a dual trajectory.
#[derive(Debug, Clone)]
pub struct DualTrajectory {
    initial: DualConfig,
    horizon: f64,
    changes: Vec<(f64, DualConfig)>,
}

impl DualTrajectory {
    pub fn initial(&self) -> &DualConfig {
        &self.initial
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// `(time, configuration after the change)` for every effective event.
    pub fn changes(&self) -> &[(f64, DualConfig)] {
        &self.changes
    }

    pub fn at(&self, t: f64) -> &DualConfig {
        let n = self.changes.partition_point(|c| c.0 <= t);
        if n == 0 {
            &self.initial
        } else {
            &self.changes[n - 1].1
        }
    }

    pub fn final_config(&self) -> &DualConfig {
        self.at(f64::INFINITY)
    }
}

/// Dual chain simulated on its own clock, with `r_hat(J^T) = r(J)`.
#[derive(Debug, Clone)]
pub struct DualSimulator {
    sampler: EventSampler,
    sites: usize,
}

impl DualSimulator {
    pub fn new<T: Scalar>(p: &NpParams<T>, k: &Kernel<T>) -> Result<Self> {
        Ok(Self { sampler: EventSampler::new(p, k)?, sites: k.len() })
    }

    pub fn run<R: Rng + ?Sized>(&self, b: &[usize], horizon: f64, rng: &mut R) -> Result<DualTrajectory> {
        let initial = SpinConfig::indicator(self.sites, b)?;
        let mut xi = initial.clone();
        let mut changes = Vec::new();
        if horizon > 0.0 {
            self.sampler.stream(horizon, rng, |t, kind| {
                if xi.get(kind.focal()) == 1 {
                    apply_event_dual(&mut xi, kind);
                    changes.push((t, xi.clone()));
                }
            });
        } else if horizon < 0.0 {
            return Err(Error::NonPositiveHorizon(horizon));
        }
        Ok(DualTrajectory { initial, horizon, changes })
    }

    /// Configuration at `horizon` only.
    pub fn run_to<R: Rng + ?Sized>(&self, b: &[usize], horizon: f64, rng: &mut R) -> Result<DualConfig> {
        let mut xi = SpinConfig::indicator(self.sites, b)?;
        if horizon < 0.0 {
            return Err(Error::NonPositiveHorizon(horizon));
        }
        if horizon > 0.0 {
            self.sampler.stream(horizon, rng, |_, kind| apply_event_dual(&mut xi, kind));
        }
        Ok(xi)
    }
}

pub fn simulate_dual_fresh<T: Scalar, R: Rng + ?Sized>(
    p: &NpParams<T>,
    k: &Kernel<T>,
    b: &[usize],
    horizon: f64,
    rng: &mut R,
) -> Result<DualTrajectory> {
    DualSimulator::new(p, k)?.run(b, horizon, rng)
}

/// Forward and dual estimates of `P(<1_B, eta_t^A> odd)`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ParityDualityReport {
    pub forward: McEstimate,
    pub dual: McEstimate,
    pub z: f64,
}

impl ParityDualityReport {
    pub fn passes(&self) -> bool {
        self.z.abs() < 4.0
    }
}

/// Independent forward runs against independent fresh dual runs.
pub fn parity_duality_mc<T: Scalar>(
    p: &NpParams<T>,
    k: &Kernel<T>,
    a: &[usize],
    b: &[usize],
    t: f64,
    reps: usize,
    seed: u64,
) -> Result<ParityDualityReport> {
    if t < 0.0 {
        return Err(Error::NonPositiveHorizon(t));
    }
    let sampler = EventSampler::new(p, k)?;
    let dual = DualSimulator::new(p, k)?;
    let n = k.len();
    SpinConfig::indicator(n, a)?;
    SpinConfig::indicator(n, b)?;
    let fwd = replicates(seed, "parity/forward", reps, |_, rng| {
        if t == 0.0 {
            let eta = SpinConfig::indicator(n, a).expect("checked");
            return parity(&eta, b) == 1;
        }
        let log = sampler.sample(t, rng).expect("positive horizon");
        parity(&evolve_graphical(a, &log, t).expect("checked"), b) == 1
    });
    let dl = replicates(seed, "parity/dual", reps, |_, rng| {
        parity(&dual.run_to(b, t, rng).expect("checked"), a) == 1
    });
    let forward = McEstimate::proportion(&fwd, seed)?;
    let dual = McEstimate::proportion(&dl, seed)?;
    Ok(ParityDualityReport { forward, dual, z: forward.z_against(&dual) })
}

/// Both sides of `P_{beta_1/2}(<1_B, eta_t> odd) = P(eta_hat_t^B != 0) / 2`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BernoulliParityReport {
    /// Parity frequency from Bernoulli(1/2) starts.
    pub direct: McEstimate,
    /// Dual survival frequency.
    pub survival: McEstimate,
    /// Half the survival frequency.
    pub half_survival: McEstimate,
    pub z: f64,
}

pub fn bernoulli_parity_identity<T: Scalar>(
    p: &NpParams<T>,
    k: &Kernel<T>,
    b: &[usize],
    t: f64,
    reps: usize,
    seed: u64,
) -> Result<BernoulliParityReport> {
    if t < 0.0 {
        return Err(Error::NonPositiveHorizon(t));
    }
    let sampler = EventSampler::new(p, k)?;
    let dual = DualSimulator::new(p, k)?;
    let n = k.len();
    SpinConfig::indicator(n, b)?;
    let direct = replicates(seed, "bernoulli/direct", reps, |_, rng| {
        let eta0 = SpinConfig::from_values((0..n).map(|_| u8::from(rng.random::<bool>())).collect()).expect("bits");
        if t == 0.0 {
            return parity(&eta0, b) == 1;
        }
        let log = sampler.sample(t, rng).expect("positive horizon");
        parity(&evolve_graphical_from(&eta0, &log, t).expect("checked"), b) == 1
    });
    let surv = replicates(seed, "bernoulli/dual", reps, |_, rng| !dual.run_to(b, t, rng).expect("checked").is_zero());
    let direct = McEstimate::proportion(&direct, seed)?;
    let survival = McEstimate::proportion(&surv, seed)?;
    let half_survival = survival.affine(0.5, 0.0);
    Ok(BernoulliParityReport { direct, survival, half_survival, z: direct.z_against(&half_survival) })
}

/// Law of the dual population size at a horizon, with sizes above `cap`
/// lumped into the `infinite` atom.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZbDistribution<T> {
    finite: Vec<T>,
    infinite: T,
}

impl<T: Scalar> ZbDistribution<T> {
    /// `finite[k] = P(Z = k)` for `k <= cap`, plus `P(Z = inf)`.
    pub fn new(finite: Vec<T>, infinite: T) -> Result<Self> {
        if finite.iter().chain(std::iter::once(&infinite)).any(|&w| !(w >= T::zero())) {
            return Err(Error::InvalidParameter("negative probability in Z_B law".into()));
        }
        let total: T = finite.iter().copied().sum::<T>() + infinite;
        if (total - T::one()).abs() > T::row_sum_tol() {
            return Err(Error::InvalidParameter(format!("Z_B law sums to {total}, not 1")));
        }
        Ok(Self { finite, infinite })
    }

    pub fn point_mass(k: usize) -> Self {
        let mut finite = vec![T::zero(); k + 1];
        finite[k] = T::one();
        Self { finite, infinite: T::zero() }
    }

    /// Empirical law of observed sizes.
    pub fn from_sizes(sizes: &[usize], cap: usize) -> Result<Self> {
        if sizes.is_empty() {
            return Err(Error::TooFewReplicates(0));
        }
        let n = T::lit(sizes.len() as f64);
        let mut counts = vec![0usize; cap + 1];
        let mut over = 0usize;
        for &s in sizes {
            if s > cap {
                over += 1;
            } else {
                counts[s] += 1;
            }
        }
        Ok(Self {
            finite: counts.into_iter().map(|c| T::lit(c as f64) / n).collect(),
            infinite: T::lit(over as f64) / n,
        })
    }

    pub fn finite(&self) -> &[T] {
        &self.finite
    }

    pub fn infinite(&self) -> T {
        self.infinite
    }

    pub fn survival(&self) -> T {
        T::one() - self.finite.first().copied().unwrap_or_else(T::zero)
    }
}

/// `E[1 - (1 - 2u)^Z] / 2` with `0^0 = 1` and `(1 - 2u)^inf = 0`.
pub fn limit_formula<T: Scalar>(u: T, zb: &ZbDistribution<T>) -> Result<T> {
    if !(u > T::zero() && u < T::one()) {
        return Err(Error::InvalidParameter(format!("density {u} not in (0,1)")));
    }
    let base = T::one() - T::lit(2.0) * u;
    let half = T::lit(0.5);
    let finite: T = zb
        .finite
        .iter()
        .enumerate()
        .map(|(k, &w)| w * (T::one() - powu(base, k as u32)))
        .sum();
    Ok(half * (finite + zb.infinite))
}

/// Empirical `Z_B` law at `t` from fresh dual runs.
pub fn zb_at_horizon<T: Scalar>(
    p: &NpParams<T>,
    k: &Kernel<T>,
    b: &[usize],
    t: f64,
    cap: usize,
    reps: usize,
    seed: u64,
) -> Result<ZbDistribution<T>> {
    let dual = DualSimulator::new(p, k)?;
    SpinConfig::indicator(k.len(), b)?;
    let sizes = replicates(seed, "zb/dual", reps, |_, rng| dual.run_to(b, t, rng).expect("checked").count_ones());
    ZbDistribution::from_sizes(&sizes, cap)
}

/// One row of the extinction-versus-unbounded-growth table.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct EvugRow {
    pub t: f64,
    /// `P(1 <= |eta_hat_t^B| <= cap)`.
    pub intermediate: McEstimate,
    /// `P(|eta_hat_t^B| >= 1)`.
    pub survival: McEstimate,
}

pub fn evug_statistic<T: Scalar>(
    p: &NpParams<T>,
    k: &Kernel<T>,
    b: &[usize],
    grid: &[f64],
    cap: usize,
    reps: usize,
    seed: u64,
) -> Result<Vec<EvugRow>> {
    if grid.iter().any(|&t| !(t >= 0.0)) {
        return Err(Error::InvalidParameter("horizon grid must be nonnegative".into()));
    }
    let dual = DualSimulator::new(p, k)?;
    SpinConfig::indicator(k.len(), b)?;
    let horizon = grid.iter().copied().fold(0.0, f64::max);
    let sizes: Vec<Vec<usize>> = replicates(seed, "evug/dual", reps, |_, rng| {
        let tr = dual.run(b, horizon, rng).expect("checked");
        grid.iter().map(|&t| tr.at(t).count_ones()).collect()
    });
    grid.iter()
        .enumerate()
        .map(|(j, &t)| {
            let mid: Vec<bool> = sizes.iter().map(|s| (1..=cap).contains(&s[j])).collect();
            let alive: Vec<bool> = sizes.iter().map(|s| s[j] >= 1).collect();
            Ok(EvugRow {
                t,
                intermediate: McEstimate::proportion(&mid, seed)?,
                survival: McEstimate::proportion(&alive, seed)?,
            })
        })
        .collect()
}
