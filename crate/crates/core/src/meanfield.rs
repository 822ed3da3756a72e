//! Mean-field reduction: the two-species Lotka-Volterra system, the closed
//! equation for the density of type 0 after the time change, its interior
//! equilibrium, and a comparator against the spin system on complete graphs.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernel::{Kernel, SpinConfig};
use crate::replicate::replicates;
use crate::scalar::Scalar;
use crate::spin::{simulate_gillespie, NpParams};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LvParams<T> {
    pub r0: T,
    pub r1: T,
    pub k0: T,
    pub k1: T,
    pub alpha01: T,
    pub alpha10: T,
}

impl<T: Scalar> LvParams<T> {
    pub fn new(r0: T, r1: T, k0: T, k1: T, alpha01: T, alpha10: T) -> Result<Self> {
        for (name, v) in [("r0", r0), ("r1", r1), ("K0", k0), ("K1", k1)] {
            if !(v > T::zero()) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [("alpha01", alpha01), ("alpha10", alpha10)] {
            if !(v >= T::zero()) {
                return Err(Error::InvalidParameter(format!("{name} must be nonnegative, got {v}")));
            }
        }
        Ok(Self { r0, r1, k0, k1, alpha01, alpha10 })
    }

    /// `K1 / K0`.
    pub fn lambda(&self) -> T {
        self.k1 / self.k0
    }
}

/// `(dN0, dN1)` with `dN_i = r_i N_i (1 - (N_i + alpha_ij N_j) / K_i)`.
pub fn lv_rhs<T: Scalar>(n0: T, n1: T, p: &LvParams<T>) -> (T, T) {
    (
        p.r0 * n0 * (T::one() - (n0 + p.alpha01 * n1) / p.k0),
        p.r1 * n1 * (T::one() - (n1 + p.alpha10 * n0) / p.k1),
    )
}

/// `F(p0) = p0 (1 - p0) {(1 - lambda a01) - p0 [(1 - lambda a01) + (lambda - a10)]}`.
pub fn density_polynomial<T: Scalar>(p0: T, lambda: T, alpha01: T, alpha10: T) -> T {
    let c0 = T::one() - lambda * alpha01;
    let c1 = lambda - alpha10;
    p0 * (T::one() - p0) * (c0 - p0 * (c0 + c1))
}

/// Time-changed density equation `dp0/dt = F(p0) / (lambda (1 - p0) + p0)`.
pub fn density_rhs<T: Scalar>(p0: T, lambda: T, alpha01: T, alpha10: T) -> T {
    density_polynomial(p0, lambda, alpha01, alpha10) / (lambda * (T::one() - p0) + p0)
}

/// Interior equilibrium `(1 - lambda a01) / ((1 - lambda a01) + (lambda - a10))`.
pub fn equilibrium<T: Scalar>(lambda: T, alpha01: T, alpha10: T) -> Result<T> {
    if !(lambda > T::zero()) {
        return Err(Error::InvalidParameter(format!("lambda must be positive, got {lambda}")));
    }
    if !(alpha10 >= T::zero() && alpha10 < lambda) {
        return Err(Error::InvalidParameter(format!(
            "interior equilibrium needs 0 <= alpha10 < lambda, got alpha10 = {alpha10}, lambda = {lambda}"
        )));
    }
    if !(alpha01 >= T::zero() && alpha01 < T::one() / lambda) {
        return Err(Error::InvalidParameter(format!(
            "interior equilibrium needs 0 <= alpha01 < 1/lambda, got alpha01 = {alpha01}, lambda = {lambda}"
        )));
    }
    let c0 = T::one() - lambda * alpha01;
    Ok(c0 / (c0 + (lambda - alpha10)))
}

/// Sampled ODE solution with a step-halving estimate of the terminal error.
#[derive(Debug, Clone)]
pub struct OdePath<T, const D: usize> {
    pub times: Vec<T>,
    pub states: Vec<[T; D]>,
    pub error_estimate: T,
}

impl<T: Scalar, const D: usize> OdePath<T, D> {
    pub fn terminal(&self) -> [T; D] {
        *self.states.last().expect("nonempty path")
    }

    /// Linear interpolation at `t` within the sampled range.
    pub fn at(&self, t: T) -> [T; D] {
        let i = self.times.partition_point(|&s| s <= t);
        if i == 0 {
            return self.states[0];
        }
        if i >= self.times.len() {
            return self.terminal();
        }
        let (t0, t1) = (self.times[i - 1], self.times[i]);
        let w = (t - t0) / (t1 - t0);
        let mut out = self.states[i - 1];
        for (o, &b) in out.iter_mut().zip(&self.states[i]) {
            *o = *o + w * (b - *o);
        }
        out
    }
}

fn rk4_step<T: Scalar, const D: usize, F: Fn(&[T; D]) -> [T; D]>(f: &F, x: &[T; D], h: T) -> [T; D] {
    let two = T::lit(2.0);
    let half = T::lit(0.5);
    let shift = |base: &[T; D], k: &[T; D], c: T| {
        let mut out = *base;
        for (o, &ki) in out.iter_mut().zip(k) {
            *o = *o + c * ki;
        }
        out
    };
    let k1 = f(x);
    let k2 = f(&shift(x, &k1, half * h));
    let k3 = f(&shift(x, &k2, half * h));
    let k4 = f(&shift(x, &k3, h));
    let mut out = *x;
    for i in 0..D {
        out[i] = out[i] + h / T::lit(6.0) * (k1[i] + two * k2[i] + two * k3[i] + k4[i]);
    }
    out
}

/// Classical RK4 on `[0, horizon]` with about `dt` per step. The path is
/// sampled on the coarse grid from a run at half the step; the error
/// estimate is the Richardson bound `|x_h - x_{h/2}| / 15` at the horizon.
pub fn integrate_ode<T: Scalar, const D: usize, F: Fn(&[T; D]) -> [T; D]>(
    rhs: F,
    x0: [T; D],
    horizon: T,
    dt: T,
) -> Result<OdePath<T, D>> {
    if !(horizon > T::zero()) {
        return Err(Error::NonPositiveHorizon(horizon.as_f64()));
    }
    if !(dt > T::zero()) {
        return Err(Error::InvalidParameter(format!("step {dt} must be positive")));
    }
    let steps = (horizon / dt).ceil().as_f64().max(1.0) as usize;
    let h = horizon / T::lit(steps as f64);
    let half = h / T::lit(2.0);
    let mut coarse = x0;
    let mut fine = x0;
    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    times.push(T::zero());
    states.push(x0);
    for i in 1..=steps {
        coarse = rk4_step(&rhs, &coarse, h);
        fine = rk4_step(&rhs, &fine, half);
        fine = rk4_step(&rhs, &fine, half);
        times.push(T::lit(i as f64) * h);
        states.push(fine);
    }
    let gap = coarse.iter().zip(&fine).fold(T::zero(), |m, (&a, &b)| m.max((a - b).abs()));
    Ok(OdePath { times, states, error_estimate: gap / T::lit(15.0) })
}

/// Integrates the density equation for type 0.
pub fn integrate_density<T: Scalar>(
    p0: T,
    lambda: T,
    alpha01: T,
    alpha10: T,
    horizon: T,
    dt: T,
) -> Result<OdePath<T, 1>> {
    if !(p0 >= T::zero() && p0 <= T::one()) {
        return Err(Error::InvalidParameter(format!("density {p0} not in [0,1]")));
    }
    integrate_ode(|x: &[T; 1]| [density_rhs(x[0], lambda, alpha01, alpha10)], [p0], horizon, dt)
}

/// Distribution of `sup_{t <= T} |density of 1's - ODE|` over replicates.
#[derive(Debug, Clone, Serialize)]
pub struct ComparatorReport {
    pub sites: usize,
    pub initial_density: f64,
    pub horizon: f64,
    pub sup_distances: Vec<f64>,
    pub median: f64,
    pub mean: f64,
}

/// Runs the spin system on the complete graph over `n` vertices from a
/// configuration with `round(density0 * n)` ones and compares its density of
/// 1's with `1 - p0(t)` from the density equation started at the same density.
pub fn meanfield_comparator(
    n: usize,
    params: &NpParams<f64>,
    density0: f64,
    horizon: f64,
    reps: usize,
    seed: u64,
) -> Result<ComparatorReport> {
    if !(0.0..=1.0).contains(&density0) {
        return Err(Error::InvalidParameter(format!("density {density0} not in [0,1]")));
    }
    if reps == 0 {
        return Err(Error::TooFewReplicates(0));
    }
    let k = Kernel::<f64>::complete(n)?;
    let ones = (density0 * n as f64).round() as usize;
    let eta0 = SpinConfig::indicator(n, &(0..ones).collect::<Vec<_>>())?;
    let rho0 = ones as f64 / n as f64;
    let dt = 1e-3;
    let ode = integrate_density(1.0 - rho0, params.lambda, params.alpha01, params.alpha10, horizon, dt)?;
    let sup_distances = replicates(seed, "meanfield/spin", reps, |_, rng| {
        let tr = simulate_gillespie(params, &k, &eta0, horizon, rng).expect("validated inputs");
        let path = tr.density_path();
        let mut worst: f64 = 0.0;
        let mut j = 0;
        for (i, &t) in ode.times.iter().enumerate() {
            while j + 1 < path.len() && path[j + 1].0 <= t {
                j += 1;
                // compare just before and at the jump
                let ode_here = 1.0 - ode.at(path[j].0)[0];
                worst = worst.max((path[j - 1].1 - ode_here).abs()).max((path[j].1 - ode_here).abs());
            }
            worst = worst.max((path[j].1 - (1.0 - ode.states[i][0])).abs());
        }
        worst
    });
    let mut sorted = sup_distances.clone();
    sorted.sort_by(f64::total_cmp);
    let m = sorted.len();
    let median = if m % 2 == 1 { sorted[m / 2] } else { 0.5 * (sorted[m / 2 - 1] + sorted[m / 2]) };
    let mean = sorted.iter().sum::<f64>() / m as f64;
    Ok(ComparatorReport { sites: n, initial_density: rho0, horizon, sup_distances, median, mean })
}
