//! Finite site sets with a zero-trace, irreducible transition kernel, and
//! {0,1}-valued configurations on them.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// How the site set was built. Torus sites are row-major coordinates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Geometry {
    Torus { dim: usize, side: usize },
    Complete,
    Explicit,
}

/// Sparse transition kernel `q` on sites `0..len`.
#[derive(Debug, Clone)]
pub struct Kernel<T> {
    geometry: Geometry,
    out: Vec<Vec<(usize, T)>>,
    into: Vec<Vec<usize>>,
}

impl<T: Scalar> Kernel<T> {
    /// Nearest-neighbour random walk on the `dim`-dimensional torus of side `side`.
    pub fn torus(dim: usize, side: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidKernel("torus dimension must be at least 1".into()));
        }
        if side < 3 {
            return Err(Error::InvalidKernel(format!(
                "torus side {side} < 3 makes neighbours coincide or self-loop"
            )));
        }
        let n = side
            .checked_pow(dim as u32)
            .ok_or_else(|| Error::InvalidKernel("torus too large".into()))?;
        let w = T::one() / T::lit((2 * dim) as f64);
        let mut edges = Vec::with_capacity(n * 2 * dim);
        for x in 0..n {
            let c = torus_coords(x, dim, side);
            for axis in 0..dim {
                for step in [1, side - 1] {
                    let mut c2 = c.clone();
                    c2[axis] = (c2[axis] + step) % side;
                    edges.push((x, torus_index(&c2, side), w));
                }
            }
        }
        Self::build(n, &edges, Geometry::Torus { dim, side })
    }

    /// Uniform kernel on the complete graph over `n` vertices.
    pub fn complete(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidKernel(format!("complete graph needs N >= 2, got {n}")));
        }
        let w = T::one() / T::lit((n - 1) as f64);
        let mut edges = Vec::with_capacity(n * (n - 1));
        for x in 0..n {
            for y in 0..n {
                if x != y {
                    edges.push((x, y, w));
                }
            }
        }
        Self::build(n, &edges, Geometry::Complete)
    }

    /// Kernel from weighted directed edges `(x, y, q(x,y))`. Repeated edges add up.
    pub fn from_edges(n: usize, edges: &[(usize, usize, T)]) -> Result<Self> {
        Self::build(n, edges, Geometry::Explicit)
    }

    fn build(n: usize, edges: &[(usize, usize, T)], geometry: Geometry) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidKernel("empty site set".into()));
        }
        let mut rows: Vec<BTreeMap<usize, T>> = vec![BTreeMap::new(); n];
        for &(x, y, w) in edges {
            if x >= n || y >= n {
                return Err(Error::SiteOutOfRange { site: x.max(y), len: n });
            }
            if !(w >= T::zero()) || !w.is_finite() {
                return Err(Error::InvalidKernel(format!("weight q({x},{y}) = {w} is not a probability")));
            }
            if w == T::zero() {
                continue;
            }
            if x == y {
                return Err(Error::InvalidKernel(format!("q({x},{x}) > 0 violates zero trace")));
            }
            let e = rows[x].entry(y).or_insert_with(T::zero);
            *e = *e + w;
        }
        let out: Vec<Vec<(usize, T)>> = rows.into_iter().map(|r| r.into_iter().collect()).collect();
        for (x, row) in out.iter().enumerate() {
            let s: T = row.iter().map(|&(_, w)| w).sum();
            if (s - T::one()).abs() > T::row_sum_tol() {
                return Err(Error::InvalidKernel(format!("row {x} sums to {s}, not 1")));
            }
        }
        let mut into = vec![Vec::new(); n];
        for (x, row) in out.iter().enumerate() {
            for &(y, _) in row {
                into[y].push(x);
            }
        }
        let k = Self { geometry, out, into };
        if !k.is_irreducible() {
            return Err(Error::InvalidKernel("kernel is not irreducible".into()));
        }
        Ok(k)
    }

    fn is_irreducible(&self) -> bool {
        let n = self.len();
        let reach = |adj: &dyn Fn(usize) -> Vec<usize>| {
            let mut seen = vec![false; n];
            let mut stack = vec![0];
            seen[0] = true;
            while let Some(x) = stack.pop() {
                for y in adj(x) {
                    if !seen[y] {
                        seen[y] = true;
                        stack.push(y);
                    }
                }
            }
            seen.into_iter().all(|b| b)
        };
        reach(&|x| self.out[x].iter().map(|&(y, _)| y).collect())
            && reach(&|x| self.into[x].clone())
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.out.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.out.is_empty()
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    /// Sites `y` with `q(x,y) > 0`, with their weights, sorted by `y`.
    #[inline]
    pub fn neighbors(&self, x: usize) -> &[(usize, T)] {
        &self.out[x]
    }

    /// Sites `x` with `q(x,y) > 0`.
    #[inline]
    pub fn in_neighbors(&self, y: usize) -> &[usize] {
        &self.into[y]
    }

    pub fn q(&self, x: usize, y: usize) -> T {
        let row = &self.out[x];
        match row.binary_search_by_key(&y, |&(s, _)| s) {
            Ok(i) => row[i].1,
            Err(_) => T::zero(),
        }
    }

    pub fn check_site(&self, x: usize) -> Result<()> {
        if x < self.len() {
            Ok(())
        } else {
            Err(Error::SiteOutOfRange { site: x, len: self.len() })
        }
    }

    pub fn check_config(&self, eta: &SpinConfig) -> Result<()> {
        if eta.len() == self.len() {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { expected: self.len(), got: eta.len() })
        }
    }

    /// Converts to another scalar type.
    pub fn cast<U: Scalar>(&self) -> Kernel<U> {
        Kernel {
            geometry: self.geometry.clone(),
            out: self
                .out
                .iter()
                .map(|row| row.iter().map(|&(y, w)| (y, U::lit(w.as_f64()))).collect())
                .collect(),
            into: self.into.clone(),
        }
    }
}

pub fn torus_coords(x: usize, dim: usize, side: usize) -> Vec<usize> {
    let mut c = vec![0; dim];
    let mut r = x;
    for i in (0..dim).rev() {
        c[i] = r % side;
        r /= side;
    }
    c
}

pub fn torus_index(c: &[usize], side: usize) -> usize {
    c.iter().fold(0, |acc, &ci| acc * side + ci)
}

/// Assignment of a type in {0,1} to every site. Also used for dual
/// configurations, where 1 means occupied.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SpinConfig(Vec<u8>);

impl SpinConfig {
    pub fn zeros(n: usize) -> Self {
        Self(vec![0; n])
    }

    pub fn ones(n: usize) -> Self {
        Self(vec![1; n])
    }

    /// `1_A` on `n` sites. Repeated sites are allowed and count once.
    pub fn indicator(n: usize, set: &[usize]) -> Result<Self> {
        let mut v = vec![0; n];
        for &x in set {
            if x >= n {
                return Err(Error::SiteOutOfRange { site: x, len: n });
            }
            v[x] = 1;
        }
        Ok(Self(v))
    }

    /// Values must be 0 or 1.
    pub fn from_values(values: Vec<u8>) -> Result<Self> {
        if let Some(v) = values.iter().find(|&&v| v > 1) {
            return Err(Error::InvalidParameter(format!("spin value {v} is not in {{0,1}}")));
        }
        Ok(Self(values))
    }

    /// Low `n` bits of `bits`, site `x` at bit `x`.
    pub fn from_bits(n: usize, bits: u64) -> Self {
        Self((0..n).map(|x| ((bits >> x) & 1) as u8).collect())
    }

    pub fn to_bits(&self) -> u64 {
        assert!(self.0.len() <= 64);
        self.0.iter().enumerate().fold(0, |acc, (x, &v)| acc | ((v as u64) << x))
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.0.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    #[inline]
    pub fn get(&self, x: usize) -> u8 {
        self.0[x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, v: u8) {
        debug_assert!(v <= 1);
        self.0[x] = v;
    }

    #[inline]
    pub fn flip(&mut self, x: usize) {
        self.0[x] ^= 1;
    }

    pub fn count_ones(&self) -> usize {
        self.0.iter().filter(|&&v| v == 1).count()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&v| v == 0)
    }

    pub fn density(&self) -> f64 {
        self.count_ones() as f64 / self.len() as f64
    }

    pub fn support(&self) -> Vec<usize> {
        self.0.iter().enumerate().filter(|(_, &v)| v == 1).map(|(x, _)| x).collect()
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.0
    }
}

/// `f_sigma(x, eta) = sum_y q(x,y) 1{eta(y) = sigma}`.
pub fn local_frequency<T: Scalar>(k: &Kernel<T>, eta: &SpinConfig, x: usize, sigma: u8) -> Result<T> {
    k.check_site(x)?;
    k.check_config(eta)?;
    if sigma > 1 {
        return Err(Error::InvalidParameter(format!("type {sigma} is not in {{0,1}}")));
    }
    Ok(frequency_unchecked(k, eta, x, sigma))
}

#[inline]
pub(crate) fn frequency_unchecked<T: Scalar>(k: &Kernel<T>, eta: &SpinConfig, x: usize, sigma: u8) -> T {
    k.neighbors(x)
        .iter()
        .filter(|&&(y, _)| eta.get(y) == sigma)
        .map(|&(_, w)| w)
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ring_of_four() {
        let k = Kernel::<f64>::torus(1, 4).unwrap();
        assert_eq!(k.q(0, 1), 0.5);
        assert_eq!(k.q(0, 3), 0.5);
        assert_eq!(k.q(0, 2), 0.0);
        assert_eq!(k.q(0, 0), 0.0);
    }

    #[test]
    fn torus_2d_side_3_has_degree_four() {
        let k = Kernel::<f64>::torus(2, 3).unwrap();
        assert_eq!(k.len(), 9);
        for x in 0..9 {
            assert_eq!(k.neighbors(x).len(), 4);
            assert!(k.neighbors(x).iter().all(|&(_, w)| w == 0.25));
        }
    }

    #[test]
    fn ring_of_three_is_irreducible() {
        let k = Kernel::<f64>::torus(1, 3).unwrap();
        for x in 0..3 {
            assert_eq!(k.neighbors(x).len(), 2);
            assert!(k.neighbors(x).iter().all(|&(_, w)| w == 0.5));
        }
    }

    #[test]
    fn small_tori_rejected() {
        assert!(Kernel::<f64>::torus(1, 2).is_err());
        assert!(Kernel::<f64>::torus(3, 1).is_err());
        assert!(Kernel::<f64>::torus(0, 5).is_err());
    }

    #[test]
    fn complete_graphs() {
        let k2 = Kernel::<f64>::complete(2).unwrap();
        assert_eq!(k2.q(0, 1), 1.0);
        assert_eq!(k2.q(1, 0), 1.0);
        let k5 = Kernel::<f64>::complete(5).unwrap();
        for x in 0..5 {
            for y in 0..5 {
                assert_eq!(k5.q(x, y), if x == y { 0.0 } else { 0.25 });
            }
        }
        let k3 = Kernel::<f64>::complete(3).unwrap();
        for x in 0..3 {
            assert_eq!(k3.neighbors(x).iter().map(|e| e.1).sum::<f64>(), 1.0);
        }
        assert!(Kernel::<f64>::complete(1).is_err());
    }

    #[test]
    fn explicit_kernel_validation() {
        // directed 3-cycle is irreducible
        assert!(Kernel::<f64>::from_edges(3, &[(0, 1, 1.0), (1, 2, 1.0), (2, 0, 1.0)]).is_ok());
        // self loop
        assert!(Kernel::<f64>::from_edges(2, &[(0, 0, 1.0), (1, 0, 1.0)]).is_err());
        // not stochastic
        assert!(Kernel::<f64>::from_edges(2, &[(0, 1, 0.5), (1, 0, 1.0)]).is_err());
        // reducible: 2 is absorbing-ish component
        assert!(Kernel::<f64>::from_edges(3, &[(0, 1, 1.0), (1, 0, 1.0), (2, 0, 1.0)]).is_err());
        // repeated edges accumulate
        let k = Kernel::<f64>::from_edges(2, &[(0, 1, 0.5), (0, 1, 0.5), (1, 0, 1.0)]).unwrap();
        assert_eq!(k.q(0, 1), 1.0);
    }

    #[test]
    fn frequency_examples() {
        let k = Kernel::<f64>::torus(1, 4).unwrap();
        let ones = SpinConfig::ones(4);
        assert_eq!(local_frequency(&k, &ones, 2, 1).unwrap(), 1.0);
        let eta = SpinConfig::from_values(vec![1, 0, 1, 0]).unwrap();
        assert_eq!(local_frequency(&k, &eta, 0, 1).unwrap(), 0.0);

        let k5 = Kernel::<f64>::complete(5).unwrap();
        let eta = SpinConfig::from_values(vec![0, 1, 0, 1, 0]).unwrap();
        assert_eq!(local_frequency(&k5, &eta, 0, 1).unwrap(), 0.5);
    }

    #[test]
    fn frequency_domain_checks() {
        let k = Kernel::<f64>::torus(1, 4).unwrap();
        assert!(local_frequency(&k, &SpinConfig::zeros(4), 4, 0).is_err());
        assert!(local_frequency(&k, &SpinConfig::zeros(5), 0, 0).is_err());
        assert!(local_frequency(&k, &SpinConfig::zeros(4), 0, 2).is_err());
    }

    #[test]
    fn single_precision_kernel() {
        let k = Kernel::<f32>::torus(2, 4).unwrap();
        assert_eq!(k.q(0, 1), 0.25f32);
    }

    proptest! {
        #[test]
        fn frequencies_sum_to_one(bits in 0u64..(1 << 16), x in 0usize..16) {
            let k = Kernel::<f64>::torus(2, 4).unwrap();
            let eta = SpinConfig::from_bits(16, bits);
            let f0 = local_frequency(&k, &eta, x, 0).unwrap();
            let f1 = local_frequency(&k, &eta, x, 1).unwrap();
            prop_assert!((f0 + f1 - 1.0).abs() < 1e-14);
        }

        #[test]
        fn lattice_rows_exact(dim in 1usize..4, side in 3usize..7) {
            let k = Kernel::<f64>::torus(dim, side).unwrap();
            for x in 0..k.len() {
                prop_assert_eq!(k.q(x, x), 0.0);
                let s: f64 = k.neighbors(x).iter().map(|e| e.1).sum();
                if dim <= 2 {
                    prop_assert_eq!(s, 1.0);
                } else {
                    prop_assert!((s - 1.0).abs() <= 1e-15);
                }
            }
        }
    }
}
