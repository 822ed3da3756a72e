//! Lattice Wright-Fisher diffusions on finite tori, discretized by
//! Euler-Maruyama with clamping to `[0, 1]`.

use std::str::FromStr;

use rand::Rng;
use rand_distr::{Binomial, Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernel::{torus_coords, torus_index};
use crate::scalar::Scalar;
use crate::stats::McEstimate;

/// Homogeneous migration stencil: weight per displacement.
#[derive(Debug, Clone, PartialEq)]
pub enum Stencil {
    /// Total rate `rate` spread evenly over the `2d` nearest neighbours.
    NearestNeighbor { rate: f64 },
    /// Total rate `rate` spread evenly over displacements with `0 < |z|_inf <= range`.
    Uniform { range: usize, rate: f64 },
    /// Explicit `(displacement, weight)` list.
    Explicit(Vec<(Vec<i64>, f64)>),
    None,
}

impl Stencil {
    /// Concrete displacement list in dimension `dim`.
    pub fn displacements(&self, dim: usize) -> Result<Vec<(Vec<i64>, f64)>> {
        let list = match self {
            Stencil::None => Vec::new(),
            Stencil::NearestNeighbor { rate } => {
                let w = rate / (2 * dim) as f64;
                let mut v = Vec::with_capacity(2 * dim);
                for axis in 0..dim {
                    for sign in [-1i64, 1] {
                        let mut z = vec![0i64; dim];
                        z[axis] = sign;
                        v.push((z, w));
                    }
                }
                v
            }
            Stencil::Uniform { range, rate } => {
                if *range == 0 {
                    return Err(Error::InvalidParameter("stencil range must be positive".into()));
                }
                let r = *range as i64;
                let width = (2 * r + 1) as usize;
                let count = width.pow(dim as u32) - 1;
                let w = rate / count as f64;
                let mut v = Vec::with_capacity(count);
                for code in 0..width.pow(dim as u32) {
                    let mut c = code;
                    let z: Vec<i64> = (0..dim)
                        .map(|_| {
                            let d = (c % width) as i64 - r;
                            c /= width;
                            d
                        })
                        .collect();
                    if z.iter().any(|&d| d != 0) {
                        v.push((z, w));
                    }
                }
                v
            }
            Stencil::Explicit(v) => v.clone(),
        };
        for (z, w) in &list {
            if z.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: z.len() });
            }
            if !(w.is_finite() && *w >= 0.0) {
                return Err(Error::InvalidParameter(format!("stencil weight {w} must be finite and nonnegative")));
            }
            if z.iter().all(|&d| d == 0) && *w != 0.0 {
                return Err(Error::InvalidParameter("stencil has weight on the zero displacement".into()));
            }
        }
        Ok(list)
    }

    /// Largest `|z|_inf` with nonzero weight.
    pub fn range(&self, dim: usize) -> Result<usize> {
        Ok(self
            .displacements(dim)?
            .iter()
            .filter(|(_, w)| *w > 0.0)
            .map(|(z, _)| z.iter().map(|d| d.unsigned_abs() as usize).max().unwrap_or(0))
            .max()
            .unwrap_or(0))
    }
}

impl FromStr for Stencil {
    type Err = Error;

    /// Accepts `none`, `nn:RATE`, `uniform:RANGE:RATE`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("cannot parse migration stencil {s:?}"));
        let parts: Vec<&str> = s.trim().split(':').collect();
        let rate = |t: &str| -> Result<f64> {
            let r: f64 = t.trim().parse().map_err(|_| bad())?;
            if !(r.is_finite() && r >= 0.0) {
                return Err(Error::InvalidParameter(format!("migration rate {r} must be finite and nonnegative")));
            }
            Ok(r)
        };
        match parts.as_slice() {
            ["none"] => Ok(Stencil::None),
            ["nn", r] => Ok(Stencil::NearestNeighbor { rate: rate(r)? }),
            ["uniform", range, r] => Ok(Stencil::Uniform { range: range.trim().parse().map_err(|_| bad())?, rate: rate(r)? }),
            _ => Err(bad()),
        }
    }
}

/// Migration rates `m_xy` on a finite set of sites.
#[derive(Debug, Clone, PartialEq)]
pub struct Migration<T> {
    out: Vec<Vec<(usize, T)>>,
    totals: Vec<T>,
}

impl<T: Scalar> Migration<T> {
    /// Stencil wrapped on the torus `{0..side}^dim`; needs `side > 2 * range`
    /// so distinct displacements land on distinct sites.
    pub fn torus(dim: usize, side: usize, stencil: &Stencil) -> Result<Self> {
        if dim == 0 || side < 1 {
            return Err(Error::InvalidParameter(format!("torus needs dim >= 1 and side >= 1, got d={dim} L={side}")));
        }
        let list = stencil.displacements(dim)?;
        let range = stencil.range(dim)?;
        if range > 0 && side <= 2 * range {
            return Err(Error::InvalidParameter(format!("torus side {side} too small for stencil range {range}")));
        }
        let n = side
            .checked_pow(dim as u32)
            .ok_or_else(|| Error::InvalidParameter("torus too large".into()))?;
        let mut out = vec![Vec::new(); n];
        for (x, row) in out.iter_mut().enumerate() {
            let c = torus_coords(x, dim, side);
            for (z, w) in &list {
                if *w == 0.0 {
                    continue;
                }
                let y: Vec<usize> = c
                    .iter()
                    .zip(z)
                    .map(|(&ci, &zi)| (ci as i64 + zi).rem_euclid(side as i64) as usize)
                    .collect();
                row.push((torus_index(&y, side), T::lit(*w)));
            }
        }
        Ok(Self::from_rows(out))
    }

    /// `n` sites without migration.
    pub fn isolated(n: usize) -> Self {
        Self::from_rows(vec![Vec::new(); n])
    }

    fn from_rows(out: Vec<Vec<(usize, T)>>) -> Self {
        let totals = out.iter().map(|r| r.iter().map(|&(_, w)| w).sum()).collect();
        Self { out, totals }
    }

    pub fn len(&self) -> usize {
        self.out.len()
    }

    pub fn is_empty(&self) -> bool {
        self.out.is_empty()
    }

    /// `(y, m_xy)` for `m_xy > 0`.
    pub fn neighbors(&self, x: usize) -> &[(usize, T)] {
        &self.out[x]
    }

    /// `sum_y m_xy`.
    pub fn total_out(&self, x: usize) -> T {
        self.totals[x]
    }

    pub fn cast<U: Scalar>(&self) -> Migration<U> {
        Migration::from_rows(
            self.out
                .iter()
                .map(|r| r.iter().map(|&(y, w)| (y, U::lit(w.as_f64()))).collect())
                .collect(),
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionParams<T> {
    pub s: T,
    pub mu: T,
    /// Noise scale `N`; the diffusion coefficient is `p (1 - p) / N`.
    pub noise: T,
    pub migration: Migration<T>,
}

impl<T: Scalar> DiffusionParams<T> {
    pub fn new(s: T, mu: T, noise: T, migration: Migration<T>) -> Result<Self> {
        if !(s.is_finite() && mu.is_finite()) {
            return Err(Error::InvalidParameter(format!("s = {s} and mu = {mu} must be finite")));
        }
        if !(noise > T::zero() && noise.is_finite()) {
            return Err(Error::InvalidParameter(format!("noise scale N = {noise} must be positive")));
        }
        Ok(Self { s, mu, noise, migration })
    }

    /// Parameters under which `1 - p` evolves as `p` does here: `((-s)(1 - mu), mu / (mu - 1))`.
    pub fn mirrored(&self) -> Result<Self> {
        if self.mu == T::one() {
            return Err(Error::InvalidParameter("mirror map undefined at mu = 1".into()));
        }
        Self::new(-self.s * (T::one() - self.mu), self.mu / (self.mu - T::one()), self.noise, self.migration.clone())
    }

    pub fn sites(&self) -> usize {
        self.migration.len()
    }
}

/// Type-1 densities `p(x)` in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionState<T>(Vec<T>);

impl<T: Scalar> DiffusionState<T> {
    pub fn constant(n: usize, c: T) -> Result<Self> {
        Self::from_values(vec![c; n])
    }

    pub fn from_values(v: Vec<T>) -> Result<Self> {
        if let Some(bad) = v.iter().find(|&&p| !(p >= T::zero() && p <= T::one())) {
            return Err(Error::InvalidParameter(format!("density {bad} not in [0,1]")));
        }
        Ok(Self(v))
    }

    pub fn values(&self) -> &[T] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn mean(&self) -> T {
        self.0.iter().copied().sum::<T>() / T::lit(self.0.len() as f64)
    }

    /// `sigma = 1 - 2p`.
    pub fn sigma_transform(&self) -> SigmaState<T> {
        SigmaState(self.0.iter().map(|&p| T::one() - T::lit(2.0) * p).collect())
    }
}

/// Transformed coordinates `sigma(x) = 1 - 2 p(x)` in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SigmaState<T>(Vec<T>);

impl<T: Scalar> SigmaState<T> {
    pub fn from_values(v: Vec<T>) -> Result<Self> {
        if let Some(bad) = v.iter().find(|&&s| !(s >= -T::one() && s <= T::one())) {
            return Err(Error::InvalidParameter(format!("sigma value {bad} not in [-1,1]")));
        }
        Ok(Self(v))
    }

    pub fn values(&self) -> &[T] {
        &self.0
    }

    /// `p = (1 - sigma) / 2`.
    pub fn inverse(&self) -> DiffusionState<T> {
        DiffusionState(self.0.iter().map(|&s| (T::one() - s) / T::lit(2.0)).collect())
    }
}

/// `sum_y m_xy (p(y) - p(x)) + s p(x) (1 - p(x)) (1 - mu p(x))`.
pub fn drift<T: Scalar>(params: &DiffusionParams<T>, p: &[T], x: usize) -> T {
    let px = p[x];
    let mig = params
        .migration
        .neighbors(x)
        .iter()
        .fold(T::zero(), |acc, &(y, w)| acc + w * (p[y] - px));
    mig + params.s * px * (T::one() - px) * (T::one() - params.mu * px)
}

fn check_step<T: Scalar>(params: &DiffusionParams<T>, len: usize, dt: f64) -> Result<()> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidParameter(format!("time step {dt} must be positive")));
    }
    if len != params.sites() {
        return Err(Error::DimensionMismatch { expected: params.sites(), got: len });
    }
    Ok(())
}

/// One synchronous step driven by the supplied standard normals.
fn step_into<T: Scalar>(params: &DiffusionParams<T>, cur: &[T], next: &mut [T], dt: T, z: &[T]) {
    let sqdt = dt.sqrt();
    for x in 0..cur.len() {
        let px = cur[x];
        let var = (px * (T::one() - px) / params.noise).max(T::zero());
        let v = px + drift(params, cur, x) * dt + var.sqrt() * sqdt * z[x];
        next[x] = v.max(T::zero()).min(T::one());
    }
}

/// Euler-Maruyama step with explicit normals `z`.
pub fn em_step_with_noise<T: Scalar>(params: &DiffusionParams<T>, state: &DiffusionState<T>, dt: f64, z: &[T]) -> Result<DiffusionState<T>> {
    check_step(params, state.len(), dt)?;
    if z.len() != state.len() {
        return Err(Error::DimensionMismatch { expected: state.len(), got: z.len() });
    }
    let mut next = vec![T::zero(); state.len()];
    step_into(params, &state.0, &mut next, T::lit(dt), z);
    Ok(DiffusionState(next))
}

pub fn em_step<T: Scalar, R: Rng + ?Sized>(params: &DiffusionParams<T>, state: &DiffusionState<T>, dt: f64, rng: &mut R) -> Result<DiffusionState<T>> {
    let mut z = vec![T::zero(); state.len()];
    fill_normals(rng, &mut z);
    em_step_with_noise(params, state, dt, &z)
}

pub fn fill_normals<T: Scalar, R: Rng + ?Sized>(rng: &mut R, out: &mut [T]) {
    for v in out {
        *v = T::lit(rng.sample::<f64, _>(StandardNormal));
    }
}

/// Time-stepping scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Scheme {
    /// Gaussian Euler-Maruyama step clamped to `[0, 1]`.
    EulerClamp,
    /// Euler drift step, then binomial resampling `Bin(M, p) / M` with
    /// `M = N / dt`. Same mean and variance per step as the Gaussian step,
    /// but the boundaries absorb as they do for the diffusion.
    WrightFisher,
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "em" => Ok(Scheme::EulerClamp),
            "wf" => Ok(Scheme::WrightFisher),
            other => Err(Error::InvalidParameter(format!("unknown scheme {other:?}; expected em or wf"))),
        }
    }
}

/// Resampling size `N / dt`, required to be an integer.
fn resample_size<T: Scalar>(params: &DiffusionParams<T>, dt: f64) -> Result<u64> {
    let m = params.noise.as_f64() / dt;
    let r = m.round();
    if r < 1.0 || (m - r).abs() > 1e-6 * r {
        return Err(Error::InvalidParameter(format!("N / dt = {m} must be a positive integer for the wf scheme")));
    }
    Ok(r as u64)
}

fn wf_step_into<T: Scalar, R: Rng + ?Sized>(params: &DiffusionParams<T>, cur: &[T], next: &mut [T], dt: T, m: u64, rng: &mut R) {
    let mf = m as f64;
    for x in 0..cur.len() {
        let q = (cur[x] + drift(params, cur, x) * dt).max(T::zero()).min(T::one()).as_f64();
        next[x] = if q == 0.0 || q == 1.0 {
            T::lit(q)
        } else {
            let k = Binomial::new(m, q).expect("probability in (0,1)").sample(rng);
            T::lit(k as f64 / mf)
        };
    }
}

/// Drift step followed by Wright-Fisher resampling.
pub fn wf_step<T: Scalar, R: Rng + ?Sized>(params: &DiffusionParams<T>, state: &DiffusionState<T>, dt: f64, rng: &mut R) -> Result<DiffusionState<T>> {
    check_step(params, state.len(), dt)?;
    let m = resample_size(params, dt)?;
    let mut next = vec![T::zero(); state.len()];
    wf_step_into(params, &state.0, &mut next, T::lit(dt), m, rng);
    Ok(DiffusionState(next))
}

/// States recorded at the requested times.
#[derive(Debug, Clone)]
pub struct DiffusionPath<T> {
    pub dt: f64,
    pub times: Vec<f64>,
    pub states: Vec<DiffusionState<T>>,
}

/// Number of steps of size `dt` that reach each record time. Record times
/// must be nondecreasing, nonnegative and (to 1e-9 relative) multiples of `dt`.
fn record_steps(record: &[f64], dt: f64) -> Result<Vec<usize>> {
    let mut prev = 0usize;
    record
        .iter()
        .map(|&t| {
            if !(t >= 0.0 && t.is_finite()) {
                return Err(Error::InvalidParameter(format!("record time {t} must be finite and nonnegative")));
            }
            let k = (t / dt).round();
            if (k * dt - t).abs() > 1e-9 * t.max(dt) {
                return Err(Error::InvalidParameter(format!("record time {t} is not a multiple of dt = {dt}")));
            }
            let k = k as usize;
            if k < prev {
                return Err(Error::InvalidParameter("record times must be nondecreasing".into()));
            }
            prev = k;
            Ok(k)
        })
        .collect()
}

/// Simulates with normals supplied by `noise`, which fills one vector per step.
pub fn simulate_driven<T: Scalar, F: FnMut(&mut [T])>(
    params: &DiffusionParams<T>,
    p0: &DiffusionState<T>,
    dt: f64,
    record: &[f64],
    mut noise: F,
) -> Result<DiffusionPath<T>> {
    check_step(params, p0.len(), dt)?;
    let steps = record_steps(record, dt)?;
    let n = p0.len();
    let mut cur = p0.0.clone();
    let mut next = vec![T::zero(); n];
    let mut z = vec![T::zero(); n];
    let mut states = Vec::with_capacity(record.len());
    let dt_t = T::lit(dt);
    let mut done = 0usize;
    for &k in &steps {
        while done < k {
            noise(&mut z);
            step_into(params, &cur, &mut next, dt_t, &z);
            std::mem::swap(&mut cur, &mut next);
            done += 1;
        }
        states.push(DiffusionState(cur.clone()));
    }
    Ok(DiffusionPath { dt, times: record.to_vec(), states })
}

pub fn simulate<T: Scalar, R: Rng + ?Sized>(
    params: &DiffusionParams<T>,
    p0: &DiffusionState<T>,
    dt: f64,
    record: &[f64],
    rng: &mut R,
) -> Result<DiffusionPath<T>> {
    simulate_driven(params, p0, dt, record, |z| fill_normals(rng, z))
}

/// Simulates with the chosen scheme.
pub fn simulate_with<T: Scalar, R: Rng + ?Sized>(
    params: &DiffusionParams<T>,
    p0: &DiffusionState<T>,
    dt: f64,
    record: &[f64],
    scheme: Scheme,
    rng: &mut R,
) -> Result<DiffusionPath<T>> {
    match scheme {
        Scheme::EulerClamp => simulate(params, p0, dt, record, rng),
        Scheme::WrightFisher => {
            check_step(params, p0.len(), dt)?;
            let m = resample_size(params, dt)?;
            let steps = record_steps(record, dt)?;
            let mut cur = p0.0.clone();
            let mut next = vec![T::zero(); cur.len()];
            let mut states = Vec::with_capacity(record.len());
            let mut done = 0usize;
            for &k in &steps {
                while done < k {
                    wf_step_into(params, &cur, &mut next, T::lit(dt), m, rng);
                    std::mem::swap(&mut cur, &mut next);
                    done += 1;
                }
                states.push(DiffusionState(cur.clone()));
            }
            Ok(DiffusionPath { dt, times: record.to_vec(), states })
        }
    }
}

/// Runs step `dt` and step `dt / 2` on the same Brownian path: each coarse
/// increment is the sum of the two fine increments it covers.
pub fn simulate_coupled<T: Scalar, R: Rng + ?Sized>(
    params: &DiffusionParams<T>,
    p0: &DiffusionState<T>,
    dt: f64,
    record: &[f64],
    rng: &mut R,
) -> Result<(DiffusionPath<T>, DiffusionPath<T>)> {
    check_step(params, p0.len(), dt)?;
    let steps = record_steps(record, dt)?;
    let n = p0.len();
    let (mut coarse, mut fine) = (p0.0.clone(), p0.0.clone());
    let mut next = vec![T::zero(); n];
    let (mut z1, mut z2, mut zc) = (vec![T::zero(); n], vec![T::zero(); n], vec![T::zero(); n]);
    let (dt_c, dt_f) = (T::lit(dt), T::lit(dt / 2.0));
    let inv_sqrt2 = T::lit(std::f64::consts::FRAC_1_SQRT_2);
    let (mut rec_c, mut rec_f) = (Vec::with_capacity(record.len()), Vec::with_capacity(record.len()));
    let mut done = 0usize;
    for &k in &steps {
        while done < k {
            fill_normals(rng, &mut z1);
            fill_normals(rng, &mut z2);
            for i in 0..n {
                zc[i] = (z1[i] + z2[i]) * inv_sqrt2;
            }
            step_into(params, &fine, &mut next, dt_f, &z1);
            step_into(params, &next, &mut fine, dt_f, &z2);
            step_into(params, &coarse, &mut next, dt_c, &zc);
            std::mem::swap(&mut coarse, &mut next);
            done += 1;
        }
        rec_c.push(DiffusionState(coarse.clone()));
        rec_f.push(DiffusionState(fine.clone()));
    }
    Ok((
        DiffusionPath { dt, times: record.to_vec(), states: rec_c },
        DiffusionPath { dt: dt / 2.0, times: record.to_vec(), states: rec_f },
    ))
}

/// One row per recorded time of `P(kappa < p_t(x0) < 1 - kappa)`.
#[derive(Debug, Clone, Serialize)]
pub struct HeterozygosityRow {
    pub t: f64,
    pub estimate: McEstimate,
    pub hits: usize,
}

pub fn heterozygosity_stat<T: Scalar>(paths: &[DiffusionPath<T>], kappa: f64, x0: usize, seed: u64) -> Result<Vec<HeterozygosityRow>> {
    if !(0.0..0.5).contains(&kappa) {
        return Err(Error::InvalidParameter(format!("kappa = {kappa} must lie in [0, 1/2)")));
    }
    let first = paths.first().ok_or(Error::TooFewReplicates(0))?;
    let (lo, hi) = (T::lit(kappa), T::lit(1.0 - kappa));
    (0..first.times.len())
        .map(|i| {
            let inside: Vec<bool> = paths
                .iter()
                .map(|path| {
                    let st = path.states.get(i).ok_or_else(|| Error::InvalidParameter("paths recorded on different grids".into()))?;
                    let p = *st.values().get(x0).ok_or(Error::SiteOutOfRange { site: x0, len: st.len() })?;
                    Ok(p > lo && p < hi)
                })
                .collect::<Result<_>>()?;
            let hits = inside.iter().filter(|&&b| b).count();
            Ok(HeterozygosityRow {
                t: first.times[i],
                estimate: McEstimate::proportion(&inside, seed)?.with_dt(first.dt),
                hits,
            })
        })
        .collect()
}
