//! Brute-force oracles on small site sets: dense generators over all `2^|E|`
//! configurations, their semigroups, the Feynman-Kac form of parity duality,
//! the parity-deviation product and measure reconstruction from parities.
//!
//! Configurations are `|E|`-bit integers with site `x` at bit `x`.

use crate::error::{Error, Result};
use crate::kernel::{Kernel, SpinConfig};
use crate::scalar::Scalar;
use crate::spin::{event_channels, flip_rate_unchecked, EventKind, NpParams};

pub const MAX_EXACT_SITES: usize = 12;

/// Rate matrix of a finite continuous-time chain, stored dense and row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseGenerator<T> {
    dim: usize,
    rates: Vec<T>,
}

impl<T: Scalar> DenseGenerator<T> {
    /// Builds from off-diagonal `(from, to, rate)` triples; diagonals are
    /// set to minus the row sums. Repeated and self transitions are merged or dropped.
    pub fn from_transitions(dim: usize, transitions: impl IntoIterator<Item = (usize, usize, T)>) -> Result<Self> {
        let mut rates = vec![T::zero(); dim * dim];
        for (i, j, r) in transitions {
            if i >= dim || j >= dim {
                return Err(Error::SiteOutOfRange { site: i.max(j), len: dim });
            }
            if !(r >= T::zero()) {
                return Err(Error::InvalidParameter(format!("negative rate {r} for {i} -> {j}")));
            }
            if i != j {
                rates[i * dim + j] = rates[i * dim + j] + r;
            }
        }
        for i in 0..dim {
            let row = &mut rates[i * dim..(i + 1) * dim];
            let out: T = row.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, &r)| r).sum();
            row[i] = -out;
        }
        Ok(Self { dim, rates })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.rates[i * self.dim + j]
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.rates[i * self.dim..(i + 1) * self.dim]
    }

    /// Largest `|row sum|`; zero up to rounding for a valid generator.
    pub fn max_row_sum(&self) -> T {
        (0..self.dim)
            .map(|i| self.row(i).iter().copied().sum::<T>().abs())
            .fold(T::zero(), T::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        assert_eq!(self.dim, other.dim);
        self.rates
            .iter()
            .zip(&other.rates)
            .map(|(&a, &b)| (a - b).abs())
            .fold(T::zero(), T::max)
    }

    pub fn max_exit_rate(&self) -> T {
        (0..self.dim).map(|i| -self.get(i, i)).fold(T::zero(), T::max)
    }

    /// `y = G v`.
    pub fn apply(&self, v: &[T]) -> Vec<T> {
        (0..self.dim)
            .map(|i| self.row(i).iter().zip(v).map(|(&g, &x)| g * x).sum())
            .collect()
    }
}

fn check_sites<T: Scalar>(k: &Kernel<T>) -> Result<usize> {
    if k.len() > MAX_EXACT_SITES {
        Err(Error::TooManySites(k.len(), MAX_EXACT_SITES))
    } else {
        Ok(k.len())
    }
}

/// Generator of the spin system from its flip rates: `(eta, eta^x)` carries
/// the rate at which `x` flips in `eta`.
pub fn build_generator_np<T: Scalar>(p: &NpParams<T>, k: &Kernel<T>) -> Result<DenseGenerator<T>> {
    let n = check_sites(k)?;
    let dim = 1usize << n;
    let mut tr = Vec::with_capacity(dim * n);
    for s in 0..dim {
        let eta = SpinConfig::from_bits(n, s as u64);
        for x in 0..n {
            tr.push((s, s ^ (1 << x), flip_rate_unchecked(p, k, &eta, x)));
        }
    }
    DenseGenerator::from_transitions(dim, tr)
}

#[inline]
fn bit(s: usize, x: usize) -> usize {
    (s >> x) & 1
}

/// Image of state `s` under `Id + J`.
#[inline]
pub fn forward_bits(s: usize, kind: &EventKind) -> usize {
    match *kind {
        EventKind::Annihilation { focal, pair: (y, z) } => s ^ ((bit(s, y) ^ bit(s, z)) << focal),
        EventKind::Voter { focal, source } => (s & !(1 << focal)) | (bit(s, source) << focal),
    }
}

/// Image of state `s` under `Id + J^T`.
#[inline]
pub fn dual_bits(s: usize, kind: &EventKind) -> usize {
    match *kind {
        EventKind::Annihilation { focal, pair: (y, z) } => {
            if bit(s, focal) == 1 {
                s ^ (1 << y) ^ (1 << z)
            } else {
                s
            }
        }
        EventKind::Voter { focal, source } => {
            if bit(s, focal) == 1 {
                (s ^ (1 << source)) & !(1 << focal)
            } else {
                s
            }
        }
    }
}

fn from_channels<T: Scalar>(
    p: &NpParams<T>,
    k: &Kernel<T>,
    map: fn(usize, &EventKind) -> usize,
) -> Result<DenseGenerator<T>> {
    let n = check_sites(k)?;
    let dim = 1usize << n;
    let channels = event_channels(p, k)?;
    let mut tr = Vec::with_capacity(dim * channels.len());
    for s in 0..dim {
        for (kind, r) in &channels {
            let s2 = map(s, kind);
            if s2 != s {
                tr.push((s, s2, *r));
            }
        }
    }
    DenseGenerator::from_transitions(dim, tr)
}

/// Generator accumulated channel by channel: rate `r(J)` onto `eta -> (Id + J) eta`.
pub fn build_generator_from_events<T: Scalar>(p: &NpParams<T>, k: &Kernel<T>) -> Result<DenseGenerator<T>> {
    from_channels(p, k, forward_bits)
}

/// Dual generator: `xi -> (Id + J^T) xi` at rate `r(J)`.
pub fn build_generator_dual<T: Scalar>(p: &NpParams<T>, k: &Kernel<T>) -> Result<DenseGenerator<T>> {
    from_channels(p, k, dual_bits)
}

fn self_check_tol<T: Scalar>() -> T {
    T::lit(1e-10).max(T::epsilon() * T::lit(1e3))
}

/// `exp(tG) v` by uniformization, split into steps with `Lambda h <= 8`,
/// each series truncated once the Poisson tail mass is below `1e-14`.
fn uniformized<T: Scalar>(g: &DenseGenerator<T>, t: T, v: &[T], steps: usize) -> Vec<T> {
    let lambda = g.max_exit_rate() * T::lit(1.01);
    if lambda == T::zero() || t == T::zero() {
        return v.to_vec();
    }
    let h = t / T::lit(steps as f64);
    let lh = lambda * h;
    let tail_tol = T::lit(1e-14).max(T::epsilon());
    let mut cur = v.to_vec();
    for _ in 0..steps {
        let mut weight = (-lh).exp();
        let mut cum = weight;
        let mut term = cur.clone();
        let mut acc: Vec<T> = term.iter().map(|&x| weight * x).collect();
        let mut j = 0usize;
        while T::one() - cum > tail_tol && j < 10_000 {
            j += 1;
            let gt = g.apply(&term);
            for (a, b) in term.iter_mut().zip(&gt) {
                *a = *a + *b / lambda;
            }
            weight = weight * lh / T::lit(j as f64);
            cum = cum + weight;
            for (a, &b) in acc.iter_mut().zip(&term) {
                *a = *a + weight * b;
            }
        }
        cur = acc;
    }
    cur
}

/// `exp(tG) v`, the semigroup acting on the function `v`, with a
/// halved-step self-check at relative tolerance `1e-10`.
pub fn semigroup_apply<T: Scalar>(g: &DenseGenerator<T>, t: T, v: &[T]) -> Result<Vec<T>> {
    if v.len() != g.dim() {
        return Err(Error::DimensionMismatch { expected: g.dim(), got: v.len() });
    }
    if !(t >= T::zero()) {
        return Err(Error::InvalidParameter(format!("semigroup time {t} is negative")));
    }
    let lambda = g.max_exit_rate() * T::lit(1.01);
    let steps = ((lambda * t / T::lit(8.0)).ceil().as_f64() as usize).max(1);
    let coarse = uniformized(g, t, v, steps);
    let fine = uniformized(g, t, v, 2 * steps);
    let scale = fine.iter().fold(T::zero(), |m, &x| m.max(x.abs())).max(T::min_positive_value());
    let gap = coarse.iter().zip(&fine).fold(T::zero(), |m, (&a, &b)| m.max((a - b).abs())) / scale;
    if gap > self_check_tol() {
        return Err(Error::SelfCheck(format!("uniformization halving gap {gap}")));
    }
    Ok(fine)
}

fn parity_vector<T: Scalar>(dim: usize, mask: usize) -> Vec<T> {
    (0..dim).map(|s| if (s & mask).count_ones() % 2 == 1 { T::one() } else { T::zero() }).collect()
}

fn mask_of(n: usize, set: &[usize]) -> Result<usize> {
    set.iter().try_fold(0usize, |m, &x| {
        if x < n {
            Ok(m | (1 << x))
        } else {
            Err(Error::SiteOutOfRange { site: x, len: n })
        }
    })
}

/// `|P_t phi_B(A) - Q_t phi_A(B)|` with `phi_A(B) = 1{<1_B, 1_A> odd}`.
pub fn feynman_kac_check<T: Scalar>(p: &NpParams<T>, k: &Kernel<T>, t: T, a: &[usize], b: &[usize]) -> Result<T> {
    let n = check_sites(k)?;
    let (am, bm) = (mask_of(n, a)?, mask_of(n, b)?);
    let dim = 1 << n;
    let fwd = semigroup_apply(&build_generator_np(p, k)?, t, &parity_vector(dim, bm))?;
    let dual = semigroup_apply(&build_generator_dual(p, k)?, t, &parity_vector(dim, am))?;
    Ok((fwd[am] - dual[bm]).abs())
}

/// Largest Feynman-Kac residual over all `(A, B)` pairs.
pub fn feynman_kac_max_residual<T: Scalar>(p: &NpParams<T>, k: &Kernel<T>, t: T) -> Result<T> {
    let n = check_sites(k)?;
    let dim = 1 << n;
    let gf = build_generator_np(p, k)?;
    let gd = build_generator_dual(p, k)?;
    // fwd[b][a] = P_t phi_B(A), dual[a][b] = Q_t phi_A(B)
    let fwd = (0..dim).map(|m| semigroup_apply(&gf, t, &parity_vector(dim, m))).collect::<Result<Vec<_>>>()?;
    let dual = (0..dim).map(|m| semigroup_apply(&gd, t, &parity_vector(dim, m))).collect::<Result<Vec<_>>>()?;
    let mut worst = T::zero();
    for a in 0..dim {
        for b in 0..dim {
            worst = worst.max((fwd[b][a] - dual[a][b]).abs());
        }
    }
    Ok(worst)
}

/// `P(sum even) - P(sum odd) = prod (1 - 2 u_m)` for independent Bernoulli(u_m).
pub fn parity_deviation<T: Scalar>(u: &[T]) -> Result<T> {
    check_probabilities(u)?;
    Ok(u.iter().fold(T::one(), |acc, &um| acc * (T::one() - T::lit(2.0) * um)))
}

/// Same quantity by summing over all `2^N` outcomes.
pub fn parity_deviation_by_enumeration<T: Scalar>(u: &[T]) -> Result<T> {
    check_probabilities(u)?;
    if u.len() > 24 {
        return Err(Error::TooManySites(u.len(), 24));
    }
    let mut even = T::zero();
    let mut odd = T::zero();
    for outcome in 0usize..(1 << u.len()) {
        let prob = u.iter().enumerate().fold(T::one(), |acc, (m, &um)| {
            acc * if bit(outcome, m) == 1 { um } else { T::one() - um }
        });
        if outcome.count_ones() % 2 == 0 {
            even = even + prob;
        } else {
            odd = odd + prob;
        }
    }
    Ok(even - odd)
}

fn check_probabilities<T: Scalar>(u: &[T]) -> Result<()> {
    match u.iter().find(|&&x| !(x >= T::zero() && x <= T::one())) {
        Some(x) => Err(Error::InvalidParameter(format!("{x} is not a probability"))),
        None => Ok(()),
    }
}

/// `nu{<1_B, eta> odd}` for the measure `nu` indexed by configuration bits.
pub fn parity_functional<T: Scalar>(nu: &[T], b_mask: usize) -> T {
    nu.iter()
        .enumerate()
        .filter(|&(s, _)| (s & b_mask).count_ones() % 2 == 1)
        .map(|(_, &w)| w)
        .sum()
}

/// Rebuilds a measure on `{0,1}^n` from its total mass and all parity
/// functionals: first the signed moments `int prod_{x in A} (2 eta(x) - 1)`,
/// then the moments `int prod_{x in A} eta(x)` by induction on `|A|`, then
/// the atoms by inclusion-exclusion.
pub fn reconstruct_from_parities<T: Scalar>(n: usize, mass: T, parities: &[T]) -> Result<Vec<T>> {
    let dim = 1usize << n;
    if parities.len() != dim {
        return Err(Error::DimensionMismatch { expected: dim, got: parities.len() });
    }
    let two = T::lit(2.0);
    let sign = |k: u32| if k % 2 == 0 { T::one() } else { -T::one() };
    // prod_{x in A}(2 eta - 1) = (-1)^{|A|} (1 - 2 * 1{<1_A, eta> odd})
    let signed: Vec<T> = (0..dim).map(|a| sign(a.count_ones()) * (mass - two * parities[a])).collect();
    // 2^{|A|} m(A) = signed(A) - sum_{B ⊊ A} 2^{|B|} (-1)^{|A - B|} m(B); subsets of A are numerically smaller
    let mut moment = vec![T::zero(); dim];
    for a in 0..dim {
        let mut acc = signed[a];
        let mut b = (a.wrapping_sub(1)) & a;
        if a != 0 {
            loop {
                acc = acc - T::lit((1u64 << b.count_ones()) as f64) * sign((a & !b).count_ones()) * moment[b];
                if b == 0 {
                    break;
                }
                b = (b - 1) & a;
            }
        }
        moment[a] = acc / T::lit((1u64 << a.count_ones()) as f64);
    }
    // nu{eta = 1_S} = sum_{A ⊇ S} (-1)^{|A - S|} m(A)
    let full = dim - 1;
    Ok((0..dim)
        .map(|s| {
            let rest = full & !s;
            let mut acc = T::zero();
            let mut extra = rest;
            loop {
                acc = acc + sign(extra.count_ones()) * moment[s | extra];
                if extra == 0 {
                    break;
                }
                extra = (extra - 1) & rest;
            }
            acc
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub enum MeasureComparison<T> {
    Equal,
    MassMismatch { mass1: T, mass2: T },
    /// A set `B` whose parity functionals differ by `gap`.
    Witness { b: Vec<usize>, gap: T },
}

/// Decides whether two measures on `{0,1}^n` coincide using only masses and
/// parity functionals; agreement is confirmed by reconstructing the atoms.
pub fn measure_determination_check<T: Scalar>(n: usize, nu1: &[T], nu2: &[T], tol: T) -> Result<MeasureComparison<T>> {
    if n > 10 {
        return Err(Error::TooManySites(n, 10));
    }
    let dim = 1usize << n;
    for nu in [nu1, nu2] {
        if nu.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: nu.len() });
        }
    }
    let mass1: T = nu1.iter().copied().sum();
    let mass2: T = nu2.iter().copied().sum();
    if (mass1 - mass2).abs() > tol {
        return Ok(MeasureComparison::MassMismatch { mass1, mass2 });
    }
    let par1: Vec<T> = (0..dim).map(|b| parity_functional(nu1, b)).collect();
    let par2: Vec<T> = (0..dim).map(|b| parity_functional(nu2, b)).collect();
    let worst = (0..dim)
        .map(|b| (b, (par1[b] - par2[b]).abs()))
        .fold((0, T::zero()), |best, cur| if cur.1 > best.1 { cur } else { best });
    if worst.1 > tol {
        let b = (0..n).filter(|&x| bit(worst.0, x) == 1).collect();
        return Ok(MeasureComparison::Witness { b, gap: worst.1 });
    }
    let rebuilt = reconstruct_from_parities(n, mass1, &par1)?;
    let gap = rebuilt
        .iter()
        .zip(nu2)
        .fold(T::zero(), |m, (&a, &b)| m.max((a - b).abs()));
    if gap > tol * T::lit(dim as f64) {
        return Err(Error::SelfCheck(format!("parities agree but reconstruction differs by {gap}")));
    }
    Ok(MeasureComparison::Equal)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin::apply_event_forward;
    use crate::dualspin::apply_event_dual;

    fn battery() -> Vec<Kernel<f64>> {
        let mut ks: Vec<_> = (3..=5).map(|l| Kernel::torus(1, l).unwrap()).collect();
        ks.extend((3..=5).map(|n| Kernel::complete(n).unwrap()));
        ks
    }

    #[test]
    fn bit_maps_agree_with_config_updates() {
        let kinds = [
            EventKind::Annihilation { focal: 1, pair: (0, 3) },
            EventKind::Voter { focal: 2, source: 0 },
            EventKind::Annihilation { focal: 0, pair: (2, 1) },
        ];
        for s in 0..16usize {
            for kind in &kinds {
                let mut eta = SpinConfig::from_bits(4, s as u64);
                apply_event_forward(&mut eta, kind);
                assert_eq!(eta.to_bits() as usize, forward_bits(s, kind));
                let mut xi = SpinConfig::from_bits(4, s as u64);
                apply_event_dual(&mut xi, kind);
                assert_eq!(xi.to_bits() as usize, dual_bits(s, kind));
            }
        }
    }

    #[test]
    fn two_site_generator_by_hand() {
        // complete graph on 2 sites: f1 at x is the other site's type.
        // (0,1) -> (1,1) at (f0 + a f1) f1 = a; (0,1) -> (0,0) at (f1 + a f0) f0 = a
        let k = Kernel::<f64>::complete(2).unwrap();
        let a = 0.3;
        let g = build_generator_np(&NpParams::symmetric(a).unwrap(), &k).unwrap();
        let s01 = 0b10; // site 0 = 0, site 1 = 1
        assert!((g.get(s01, 0b11) - a).abs() < 1e-15);
        assert!((g.get(s01, 0b00) - a).abs() < 1e-15);
        assert!((g.get(s01, s01) + 2.0 * a).abs() < 1e-15);
        assert!(g.row(0).iter().all(|&r| r == 0.0));
        assert!(g.row(3).iter().all(|&r| r == 0.0));
    }

    #[test]
    fn event_generator_equals_flip_rate_generator() {
        for k in battery() {
            for alpha in [0.0, 0.3, 0.7] {
                let p = NpParams::symmetric(alpha).unwrap();
                let g1 = build_generator_np(&p, &k).unwrap();
                let g2 = build_generator_from_events(&p, &k).unwrap();
                assert!(g1.max_abs_diff(&g2) < 1e-12);
                assert!(g1.max_row_sum() < 1e-12);
                assert!(build_generator_dual(&p, &k).unwrap().max_row_sum() < 1e-12);
            }
        }
    }

    #[test]
    fn voter_part_is_scaled_voter_generator() {
        // generator(alpha) - (1 - alpha) generator(0) = alpha * voter generator
        let k = Kernel::<f64>::torus(1, 4).unwrap();
        let alpha = 0.4;
        let g = build_generator_from_events(&NpParams::symmetric(alpha).unwrap(), &k).unwrap();
        let g0 = build_generator_from_events(&NpParams::symmetric(0.0).unwrap(), &k).unwrap();
        let mut tr = Vec::new();
        for s in 0..16usize {
            let eta = SpinConfig::from_bits(4, s as u64);
            for x in 0..4 {
                // voter flip rate at x: fraction of neighbours with the other type
                let f_other: f64 = k.neighbors(x).iter().filter(|&&(y, _)| eta.get(y) != eta.get(x)).map(|e| e.1).sum();
                tr.push((s, s ^ (1 << x), f_other));
            }
        }
        let voter = DenseGenerator::from_transitions(16, tr).unwrap();
        for i in 0..16 {
            for j in 0..16 {
                let lhs = g.get(i, j) - (1.0 - alpha) * g0.get(i, j);
                assert!((lhs - alpha * voter.get(i, j)).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn alpha_zero_has_only_annihilation_channels() {
        let k = Kernel::<f64>::torus(1, 5).unwrap();
        let ch = event_channels(&NpParams::symmetric(0.0).unwrap(), &k).unwrap();
        assert!(ch.iter().all(|c| matches!(c.0, EventKind::Annihilation { .. })));
    }

    #[test]
    fn two_state_semigroup_closed_form() {
        let (a, b) = (0.7f64, 1.9f64);
        let g = DenseGenerator::from_transitions(2, [(0, 1, a), (1, 0, b)]).unwrap();
        let t = 1.3f64;
        let v = [1.0, 0.0];
        let got = semigroup_apply(&g, t, &v).unwrap();
        // P_t(0,0) = b/(a+b) + a/(a+b) e^{-(a+b)t}
        let s = a + b;
        let p00 = b / s + a / s * (-s * t).exp();
        let p10 = b / s - b / s * (-s * t).exp();
        assert!((got[0] - p00).abs() < 1e-13);
        assert!((got[1] - p10).abs() < 1e-13);
    }

    #[test]
    fn semigroup_long_time_and_zero_time() {
        let g = DenseGenerator::from_transitions(2, [(0, 1, 3.0), (1, 0, 1.0)]).unwrap();
        let v = [2.0f64, -1.0];
        assert_eq!(semigroup_apply(&g, 0.0, &v).unwrap(), v.to_vec());
        let far = semigroup_apply(&g, 200.0, &v).unwrap();
        // stationary law (1/4, 3/4)
        let mean = 0.25f64 * 2.0 - 0.75;
        assert!((far[0] - mean).abs() < 1e-10 && (far[1] - mean).abs() < 1e-10);
        assert!(semigroup_apply(&g, -1.0, &v).is_err());
        assert!(semigroup_apply(&g, 1.0, &[1.0]).is_err());
    }

    #[test]
    fn feynman_kac_examples() {
        let k = Kernel::<f64>::torus(1, 3).unwrap();
        let p = NpParams::symmetric(0.5).unwrap();
        assert_eq!(feynman_kac_check(&p, &k, 0.0, &[0, 1], &[1, 2]).unwrap(), 0.0);
        assert!(feynman_kac_max_residual(&p, &k, 0.7).unwrap() < 1e-9);
        let p0 = NpParams::symmetric(0.0).unwrap();
        assert!(feynman_kac_check(&p0, &k, 0.7, &[1], &[1]).unwrap() < 1e-9);
    }

    #[test]
    fn parity_deviation_examples() {
        assert_eq!(parity_deviation(&[0.5f64]).unwrap(), 0.0);
        assert_eq!(parity_deviation(&[0.0f64, 0.0, 0.0]).unwrap(), 1.0);
        assert!((parity_deviation(&[0.3f64, 0.2]).unwrap() - 0.24).abs() < 1e-15);
        // (0.06 + 0.56) - (0.24 + 0.14)
        assert!((parity_deviation_by_enumeration(&[0.3f64, 0.2]).unwrap() - 0.24).abs() < 1e-15);
        assert!(parity_deviation(&[1.2f64]).is_err());
    }

    #[test]
    fn measure_witness_for_two_sites() {
        let beta = [0.25f64, 0.25, 0.25, 0.25];
        let diag = [0.5, 0.0, 0.0, 0.5];
        match measure_determination_check(2, &beta, &diag, 1e-12).unwrap() {
            MeasureComparison::Witness { b, gap } => {
                assert_eq!(b, vec![0, 1]);
                assert!((gap - 0.5).abs() < 1e-15);
            }
            other => panic!("expected witness, got {other:?}"),
        }
        assert_eq!(measure_determination_check(2, &beta, &beta, 1e-12).unwrap(), MeasureComparison::Equal);
    }

    #[test]
    fn perturbed_atom_is_detected() {
        let nu: Vec<f64> = (0..16).map(|s| (1 + s) as f64 / 136.0).collect();
        let mut nu2 = nu.clone();
        nu2[5] += 1e-3;
        nu2[9] -= 1e-3;
        assert!(matches!(
            measure_determination_check(4, &nu, &nu2, 1e-12).unwrap(),
            MeasureComparison::Witness { .. }
        ));
        nu2[9] += 1e-3;
        assert!(matches!(
            measure_determination_check(4, &nu, &nu2, 1e-12).unwrap(),
            MeasureComparison::MassMismatch { .. }
        ));
    }

    #[test]
    fn reconstruction_recovers_atoms() {
        let n = 5;
        let nu: Vec<f64> = (0..32).map(|s| ((s * 7 + 3) % 11) as f64 / 10.0).collect();
        let mass: f64 = nu.iter().sum();
        let par: Vec<f64> = (0..32).map(|b| parity_functional(&nu, b)).collect();
        let rebuilt = reconstruct_from_parities(n, mass, &par).unwrap();
        for (a, b) in rebuilt.iter().zip(&nu) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn too_many_sites() {
        let k = Kernel::<f64>::torus(1, 13).unwrap();
        assert!(build_generator_np(&NpParams::symmetric(0.1).unwrap(), &k).is_err());
    }

    #[test]
    fn single_precision_generators() {
        let k = Kernel::<f32>::torus(1, 4).unwrap();
        let p = NpParams::<f32>::symmetric(0.3).unwrap();
        let g1 = build_generator_np(&p, &k).unwrap();
        let g2 = build_generator_from_events(&p, &k).unwrap();
        assert!(g1.max_abs_diff(&g2) < 1e-6);
    }
}
