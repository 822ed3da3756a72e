//! Forward dynamics of the Neuhauser-Pacala spin system.
//!
//! Two constructions are provided. [`simulate_gillespie`] samples the chain
//! directly from the flip rates and works for any admissible parameters.
//! For the symmetric model, [`sample_event_log`] draws the Poisson field of
//! annihilation and voter events, and [`evolve_graphical`] applies it as a
//! product of `Id + J` matrices over Z_2.

use std::str::FromStr;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand_distr::Exp;

use crate::error::{Error, Result};
use crate::kernel::{frequency_unchecked, Kernel, SpinConfig};
use crate::scalar::Scalar;
use crate::sumtree::SumTree;

/// Competition parameters: `lambda = K1/K0` and the interaction strengths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NpParams<T> {
    pub lambda: T,
    pub alpha01: T,
    pub alpha10: T,
    symmetric: bool,
}

impl<T: Scalar> NpParams<T> {
    /// General rates. The voter point `lambda = alpha01 = alpha10 = 1` is rejected.
    pub fn general(lambda: T, alpha01: T, alpha10: T) -> Result<Self> {
        if !(lambda > T::zero()) || !lambda.is_finite() {
            return Err(Error::InvalidParameter(format!("lambda must be positive, got {lambda}")));
        }
        for (name, a) in [("alpha01", alpha01), ("alpha10", alpha10)] {
            if !(a >= T::zero()) || !a.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} must be nonnegative, got {a}")));
            }
        }
        if lambda == T::one() && alpha01 == T::one() && alpha10 == T::one() {
            return Err(Error::InvalidParameter(
                "lambda = alpha01 = alpha10 = 1 is the voter model, not a competition model".into(),
            ));
        }
        let symmetric = lambda == T::one() && alpha01 == alpha10 && alpha01 < T::one();
        Ok(Self { lambda, alpha01, alpha10, symmetric })
    }

    /// Symmetric model: `lambda = 1`, `alpha01 = alpha10 = alpha` in `[0, 1)`.
    pub fn symmetric(alpha: T) -> Result<Self> {
        if !(alpha >= T::zero() && alpha < T::one()) {
            return Err(Error::InvalidParameter(format!(
                "symmetric model needs alpha in [0, 1), got {alpha}"
            )));
        }
        Ok(Self { lambda: T::one(), alpha01: alpha, alpha10: alpha, symmetric: true })
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    /// The common `alpha` of a symmetric model.
    pub fn alpha(&self) -> Result<T> {
        if self.symmetric {
            Ok(self.alpha01)
        } else {
            Err(Error::InvalidParameter(
                "the graphical construction needs symmetric parameters".into(),
            ))
        }
    }
}

/// Rate at which `x` changes type in configuration `eta`.
pub fn flip_rate_general<T: Scalar>(p: &NpParams<T>, k: &Kernel<T>, eta: &SpinConfig, x: usize) -> Result<T> {
    k.check_site(x)?;
    k.check_config(eta)?;
    Ok(flip_rate_unchecked(p, k, eta, x))
}

#[inline]
pub(crate) fn flip_rate_unchecked<T: Scalar>(p: &NpParams<T>, k: &Kernel<T>, eta: &SpinConfig, x: usize) -> T {
    let f1 = frequency_unchecked(k, eta, x, 1);
    let f0 = T::one() - f1;
    let den = p.lambda * f1 + f0;
    if den <= T::zero() {
        // only reachable with f1 = f0 = 0, which a stochastic kernel excludes
        return T::zero();
    }
    if eta.get(x) == 0 {
        (f0 + p.alpha01 * f1) * (p.lambda * f1) / den
    } else {
        (f1 + p.alpha10 * f0) * f0 / den
    }
}

/// Flip-instant record of a continuous-time spin trajectory.
#[derive(Debug, Clone)]
pub struct SpinTrajectory {
    initial: SpinConfig,
    horizon: f64,
    flips: Vec<(f64, usize)>,
}

impl SpinTrajectory {
    pub fn initial(&self) -> &SpinConfig {
        &self.initial
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// `(time, site)` for every flip, in time order.
    pub fn flips(&self) -> &[(f64, usize)] {
        &self.flips
    }

    pub fn config_at(&self, t: f64) -> SpinConfig {
        let mut eta = self.initial.clone();
        for &(_, x) in self.flips.iter().take_while(|f| f.0 <= t) {
            eta.flip(x);
        }
        eta
    }

    pub fn final_config(&self) -> SpinConfig {
        self.config_at(f64::INFINITY)
    }

    /// Density of 1's right after each flip, starting with `(0, initial density)`.
    pub fn density_path(&self) -> Vec<(f64, f64)> {
        let n = self.initial.len() as f64;
        let mut ones = self.initial.count_ones() as i64;
        let mut eta = self.initial.clone();
        let mut path = Vec::with_capacity(self.flips.len() + 1);
        path.push((0.0, ones as f64 / n));
        for &(t, x) in &self.flips {
            ones += if eta.get(x) == 0 { 1 } else { -1 };
            eta.flip(x);
            path.push((t, ones as f64 / n));
        }
        path
    }
}

/// Direct (Gillespie) simulation from the flip rates on `[0, horizon]`.
///
/// Rates are cached per site; after a flip at `x` only `x` and the sites
/// that have `x` as a neighbour are recomputed.
pub fn simulate_gillespie<T: Scalar, R: Rng + ?Sized>(
    p: &NpParams<T>,
    k: &Kernel<T>,
    eta0: &SpinConfig,
    horizon: f64,
    rng: &mut R,
) -> Result<SpinTrajectory> {
    if !(horizon > 0.0) {
        return Err(Error::NonPositiveHorizon(horizon));
    }
    k.check_config(eta0)?;
    let mut eta = eta0.clone();
    let rates: Vec<f64> = (0..k.len()).map(|x| flip_rate_unchecked(p, k, &eta, x).as_f64()).collect();
    let mut tree = SumTree::from_weights(&rates);
    let mut flips = Vec::new();
    let mut t = 0.0;
    loop {
        let total = tree.total();
        if total <= 0.0 {
            break;
        }
        t += rng.sample(Exp::new(total).expect("positive rate"));
        if t > horizon {
            break;
        }
        let x = tree.find(rng.random::<f64>() * total);
        eta.flip(x);
        flips.push((t, x));
        tree.set(x, flip_rate_unchecked(p, k, &eta, x).as_f64());
        for &z in k.in_neighbors(x) {
            tree.set(z, flip_rate_unchecked(p, k, &eta, z).as_f64());
        }
    }
    Ok(SpinTrajectory { initial: eta0.clone(), horizon, flips })
}

/// Update matrix `Id + J` of the graphical construction, without its time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EventKind {
    /// `J = {x} x {y, z}`: the two neighbours' children invade `x`, with annihilation.
    Annihilation { focal: usize, pair: (usize, usize) },
    /// `J = {x} x {x, y}`: `x` adopts the type of `y`.
    Voter { focal: usize, source: usize },
}

impl EventKind {
    pub fn focal(&self) -> usize {
        match *self {
            EventKind::Annihilation { focal, .. } | EventKind::Voter { focal, .. } => focal,
        }
    }

    fn max_site(&self) -> usize {
        match *self {
            EventKind::Annihilation { focal, pair } => focal.max(pair.0).max(pair.1),
            EventKind::Voter { focal, source } => focal.max(source),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateEvent {
    pub time: f64,
    pub kind: EventKind,
}

/// `eta <- (Id + J) eta` over Z_2. Only the focal site can change.
#[inline]
pub fn apply_event_forward(eta: &mut SpinConfig, kind: &EventKind) {
    match *kind {
        EventKind::Annihilation { focal, pair: (y, z) } => {
            eta.set(focal, eta.get(focal) ^ eta.get(y) ^ eta.get(z));
        }
        EventKind::Voter { focal, source } => eta.set(focal, eta.get(source)),
    }
}

/// Time-ordered events on `(0, horizon]` over a fixed number of sites.
#[derive(Debug, Clone, PartialEq)]
pub struct EventLog {
    sites: usize,
    horizon: f64,
    events: Vec<UpdateEvent>,
}

impl EventLog {
    /// Validates strict time order, times in `(0, horizon]` and the event shapes.
    pub fn new(sites: usize, horizon: f64, events: Vec<UpdateEvent>) -> Result<Self> {
        if !(horizon > 0.0) {
            return Err(Error::NonPositiveHorizon(horizon));
        }
        let mut last = 0.0;
        for e in &events {
            if !(e.time > last) || e.time > horizon {
                return Err(Error::InvalidParameter(format!(
                    "event time {} breaks strict order in (0, {horizon}]",
                    e.time
                )));
            }
            last = e.time;
            if e.kind.max_site() >= sites {
                return Err(Error::SiteOutOfRange { site: e.kind.max_site(), len: sites });
            }
            match e.kind {
                EventKind::Annihilation { focal, pair: (y, z) } if y == z || y == focal || z == focal => {
                    return Err(Error::InvalidParameter(format!(
                        "annihilation at {focal} needs two distinct neighbours, got ({y}, {z})"
                    )));
                }
                EventKind::Voter { focal, source } if focal == source => {
                    return Err(Error::InvalidParameter(format!("voter event at {focal} copies itself")));
                }
                _ => {}
            }
        }
        Ok(Self { sites, horizon, events })
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn events(&self) -> &[UpdateEvent] {
        &self.events
    }

    /// Events with time `<= t`.
    pub fn up_to(&self, t: f64) -> &[UpdateEvent] {
        let n = self.events.partition_point(|e| e.time <= t);
        &self.events[..n]
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if t > self.horizon {
            Err(Error::BeyondHorizon { t, horizon: self.horizon })
        } else {
            Ok(())
        }
    }
}

/// All Poisson channels of the symmetric model with their rates.
///
/// Annihilation channels are unordered pairs `{y, z}`, `y != z`, with rate
/// `(1 - alpha) q(x,y) q(x,z)`; voter channels are ordered `(x, y)` with rate
/// `alpha q(x,y)`. Zero-rate channels are omitted.
pub fn event_channels<T: Scalar>(p: &NpParams<T>, k: &Kernel<T>) -> Result<Vec<(EventKind, T)>> {
    let alpha = p.alpha()?;
    let mut out = Vec::new();
    for x in 0..k.len() {
        let nb = k.neighbors(x);
        if alpha < T::one() {
            for (i, &(y, qy)) in nb.iter().enumerate() {
                for &(z, qz) in &nb[i + 1..] {
                    let r = (T::one() - alpha) * qy * qz;
                    if r > T::zero() {
                        out.push((EventKind::Annihilation { focal: x, pair: (y, z) }, r));
                    }
                }
            }
        }
        if alpha > T::zero() {
            for &(y, qy) in nb {
                out.push((EventKind::Voter { focal: x, source: y }, alpha * qy));
            }
        }
    }
    Ok(out)
}

/// Superposed Poisson event stream for a fixed kernel and `alpha`.
#[derive(Debug, Clone)]
pub struct EventSampler {
    sites: usize,
    kinds: Vec<EventKind>,
    pick: Option<WeightedIndex<f64>>,
    total_rate: f64,
}

impl EventSampler {
    pub fn new<T: Scalar>(p: &NpParams<T>, k: &Kernel<T>) -> Result<Self> {
        let channels = event_channels(p, k)?;
        let weights: Vec<f64> = channels.iter().map(|c| c.1.as_f64()).collect();
        let total_rate = weights.iter().sum();
        let pick = if weights.is_empty() { None } else { Some(WeightedIndex::new(&weights).expect("positive weights")) };
        Ok(Self { sites: k.len(), kinds: channels.into_iter().map(|c| c.0).collect(), pick, total_rate })
    }

    pub fn total_rate(&self) -> f64 {
        self.total_rate
    }

    /// Feeds each event on `(0, horizon]` to `f` in time order without storing the log.
    pub fn stream<R: Rng + ?Sized, F: FnMut(f64, &EventKind)>(&self, horizon: f64, rng: &mut R, mut f: F) {
        let Some(pick) = &self.pick else { return };
        let clock = Exp::new(self.total_rate).expect("positive rate");
        let mut t = 0.0;
        loop {
            t += rng.sample(clock);
            if t > horizon {
                return;
            }
            f(t, &self.kinds[pick.sample(rng)]);
        }
    }

    /// Draws a log on `[0, horizon]`. A log with a repeated time is redrawn.
    pub fn sample<R: Rng + ?Sized>(&self, horizon: f64, rng: &mut R) -> Result<EventLog> {
        if !(horizon > 0.0) {
            return Err(Error::NonPositiveHorizon(horizon));
        }
        let Some(pick) = &self.pick else {
            return Ok(EventLog { sites: self.sites, horizon, events: Vec::new() });
        };
        let clock = Exp::new(self.total_rate).expect("positive rate");
        'redraw: loop {
            let mut events = Vec::new();
            let mut t = 0.0;
            loop {
                let next = t + rng.sample(clock);
                if next > horizon {
                    break;
                }
                if next == t {
                    continue 'redraw;
                }
                t = next;
                events.push(UpdateEvent { time: t, kind: self.kinds[pick.sample(rng)] });
            }
            return Ok(EventLog { sites: self.sites, horizon, events });
        }
    }
}

pub fn sample_event_log<T: Scalar, R: Rng + ?Sized>(
    p: &NpParams<T>,
    k: &Kernel<T>,
    horizon: f64,
    rng: &mut R,
) -> Result<EventLog> {
    EventSampler::new(p, k)?.sample(horizon, rng)
}

/// `eta_t^A = (Id + J_n) ... (Id + J_1) 1_A` over the events up to `t`.
pub fn evolve_graphical(a: &[usize], log: &EventLog, t: f64) -> Result<SpinConfig> {
    let start = SpinConfig::indicator(log.sites, a)?;
    evolve_graphical_from(&start, log, t)
}

/// Same product applied to an arbitrary starting configuration.
pub fn evolve_graphical_from(eta0: &SpinConfig, log: &EventLog, t: f64) -> Result<SpinConfig> {
    log.check_time(t)?;
    if eta0.len() != log.sites {
        return Err(Error::DimensionMismatch { expected: log.sites, got: eta0.len() });
    }
    let mut eta = eta0.clone();
    for e in log.up_to(t) {
        apply_event_forward(&mut eta, &e.kind);
    }
    Ok(eta)
}

/// Initial condition: `all0`, `all1`, `bernoulli:u` or `indicator:x1,x2,...`.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialCondition {
    AllZero,
    AllOne,
    Bernoulli(f64),
    Indicator(Vec<usize>),
}

impl FromStr for InitialCondition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "all0" => return Ok(Self::AllZero),
            "all1" => return Ok(Self::AllOne),
            _ => {}
        }
        if let Some(u) = s.strip_prefix("bernoulli:") {
            let u: f64 = u
                .trim()
                .parse()
                .map_err(|_| Error::InvalidParameter(format!("bad bernoulli density in {s:?}")))?;
            if !(0.0..=1.0).contains(&u) {
                return Err(Error::InvalidParameter(format!("bernoulli density {u} not in [0,1]")));
            }
            return Ok(Self::Bernoulli(u));
        }
        if let Some(list) = s.strip_prefix("indicator:") {
            let sites = list
                .split(',')
                .map(str::trim)
                .filter(|t| !t.is_empty())
                .map(|t| t.parse::<usize>().map_err(|_| Error::InvalidParameter(format!("bad site {t:?}"))))
                .collect::<Result<Vec<_>>>()?;
            return Ok(Self::Indicator(sites));
        }
        Err(Error::InvalidParameter(format!("unknown initial condition {s:?}")))
    }
}

impl InitialCondition {
    pub fn realize<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<SpinConfig> {
        match self {
            Self::AllZero => Ok(SpinConfig::zeros(n)),
            Self::AllOne => Ok(SpinConfig::ones(n)),
            Self::Bernoulli(u) => SpinConfig::from_values((0..n).map(|_| u8::from(rng.random::<f64>() < *u)).collect()),
            Self::Indicator(sites) => SpinConfig::indicator(n, sites),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stream::derive_stream;

    fn at_x(eta: Vec<u8>, k: &Kernel<f64>, p: &NpParams<f64>) -> f64 {
        flip_rate_general(p, k, &SpinConfig::from_values(eta).unwrap(), 0).unwrap()
    }

    #[test]
    fn params_gates() {
        assert!(NpParams::<f64>::symmetric(1.0).is_err());
        assert!(NpParams::<f64>::symmetric(-0.1).is_err());
        assert!(NpParams::<f64>::general(1.0, 1.0, 1.0).is_err());
        assert!(NpParams::<f64>::general(0.0, 0.5, 0.5).is_err());
        assert!(NpParams::<f64>::general(2.0, 1.0, 1.0).is_ok());
        assert!(NpParams::<f64>::general(1.0, 0.4, 0.4).unwrap().is_symmetric());
        assert!(!NpParams::<f64>::general(2.0, 0.4, 0.4).unwrap().is_symmetric());
        assert!(NpParams::<f64>::general(2.0, 0.4, 0.4).unwrap().alpha().is_err());
    }

    #[test]
    fn quiescent_when_no_ones_nearby() {
        let k = Kernel::torus(1, 4).unwrap();
        let p = NpParams::general(2.0, 0.3, 0.7).unwrap();
        assert_eq!(at_x(vec![0, 0, 1, 0], &k, &p), 0.0);
    }

    #[test]
    fn symmetric_rate_at_half_frequency() {
        // f0 = f1 = 1/2, alpha = 0: (1 - alpha) f0 f1 + alpha f1 = 1/4
        let k = Kernel::torus(1, 4).unwrap();
        let p = NpParams::symmetric(0.0).unwrap();
        assert!((at_x(vec![0, 1, 0, 0], &k, &p) - 0.25).abs() < 1e-15);
        // 1 -> 0 direction is symmetric
        assert!((at_x(vec![1, 0, 1, 1], &k, &p) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn general_rate_hand_value() {
        // (f0 + a01 f1) * lambda f1 / (lambda f1 + f0) = 0.625 / 1.5
        let k = Kernel::torus(1, 4).unwrap();
        let p = NpParams::general(2.0, 0.25, 0.9).unwrap();
        assert!((at_x(vec![0, 1, 0, 0], &k, &p) - 0.625 / 1.5).abs() < 1e-15);
        // 1 -> 0: (f1 + a10 f0) f0 / (lambda f1 + f0) = (0.5 + 0.45) * 0.5 / 1.5
        assert!((at_x(vec![1, 1, 0, 0], &k, &p) - 0.95 * 0.5 / 1.5).abs() < 1e-15);
    }

    #[test]
    fn simplified_symmetric_rates_match_general_display() {
        let k = Kernel::<f64>::complete(5).unwrap();
        for alpha in [0.0, 0.3, 0.9] {
            let p = NpParams::symmetric(alpha).unwrap();
            for bits in 0..32u64 {
                let eta = SpinConfig::from_bits(5, bits);
                for x in 0..5 {
                    let f1 = frequency_unchecked(&k, &eta, x, 1);
                    let f0 = 1.0 - f1;
                    let expect = if eta.get(x) == 0 {
                        (1.0 - alpha) * f0 * f1 + alpha * f1
                    } else {
                        (1.0 - alpha) * f0 * f1 + alpha * f0
                    };
                    assert!((flip_rate_general(&p, &k, &eta, x).unwrap() - expect).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn absorbing_states_stay_put() {
        let k = Kernel::torus(2, 4).unwrap();
        let p = NpParams::general(1.5, 0.2, 0.4).unwrap();
        let mut rng = derive_stream(1, 0, "test");
        for eta0 in [SpinConfig::zeros(16), SpinConfig::ones(16)] {
            let tr = simulate_gillespie(&p, &k, &eta0, 50.0, &mut rng).unwrap();
            assert!(tr.flips().is_empty());
            assert_eq!(tr.final_config(), eta0);
        }
    }

    #[test]
    fn gillespie_rejects_bad_horizon() {
        let k = Kernel::torus(1, 4).unwrap();
        let p = NpParams::symmetric(0.1).unwrap();
        let mut rng = derive_stream(1, 0, "test");
        assert!(simulate_gillespie(&p, &k, &SpinConfig::zeros(4), 0.0, &mut rng).is_err());
        assert!(simulate_gillespie(&p, &k, &SpinConfig::zeros(5), 1.0, &mut rng).is_err());
    }

    #[test]
    fn trajectory_bookkeeping() {
        let k = Kernel::torus(1, 6).unwrap();
        let p = NpParams::symmetric(0.4).unwrap();
        let mut rng = derive_stream(3, 0, "test");
        let eta0 = SpinConfig::indicator(6, &[0, 1, 2]).unwrap();
        let tr = simulate_gillespie(&p, &k, &eta0, 5.0, &mut rng).unwrap();
        let path = tr.density_path();
        assert_eq!(path.len(), tr.flips().len() + 1);
        let last = path.last().unwrap().1;
        assert_eq!(last, tr.final_config().density());
        assert!(tr.flips().windows(2).all(|w| w[0].0 < w[1].0));
    }

    #[test]
    fn forward_event_diagrams() {
        let ann = EventKind::Annihilation { focal: 0, pair: (1, 2) };
        // resident 1 at x annihilates with the invading child from z; y's 0 takes over
        let mut eta = SpinConfig::from_values(vec![1, 0, 1]).unwrap();
        apply_event_forward(&mut eta, &ann);
        assert_eq!(eta.as_slice(), &[0, 0, 1]);
        // three 1's: two annihilate, one survives
        let mut eta = SpinConfig::ones(3);
        apply_event_forward(&mut eta, &ann);
        assert_eq!(eta.as_slice(), &[1, 1, 1]);
        // a 0 replaces the resident 1
        let mut eta = SpinConfig::from_values(vec![1, 0]).unwrap();
        apply_event_forward(&mut eta, &EventKind::Voter { focal: 0, source: 1 });
        assert_eq!(eta.as_slice(), &[0, 0]);
    }

    #[test]
    fn channel_rates_reproduce_annihilation_flip_rate() {
        // summing q(x,y) q(x,z) over unordered pairs with exactly one 1 gives f0 f1
        let k = Kernel::<f64>::torus(2, 3).unwrap();
        let p = NpParams::symmetric(0.0).unwrap();
        let ch = event_channels(&p, &k).unwrap();
        let eta = SpinConfig::from_bits(9, 0b1_0110_1001);
        for x in 0..9 {
            let induced: f64 = ch
                .iter()
                .filter_map(|(kind, r)| match *kind {
                    EventKind::Annihilation { focal, pair: (y, z) } if focal == x && eta.get(y) != eta.get(z) => Some(*r),
                    _ => None,
                })
                .sum();
            let f1 = frequency_unchecked(&k, &eta, x, 1);
            assert!((induced - f1 * (1.0 - f1)).abs() < 1e-15);
        }
    }

    #[test]
    fn event_rates_on_ring_of_four() {
        let k = Kernel::<f64>::torus(1, 4).unwrap();
        // per site (1 - sum q^2)/2 = 1/4
        let s0 = EventSampler::new(&NpParams::symmetric(0.0).unwrap(), &k).unwrap();
        assert!((s0.total_rate() - 1.0).abs() < 1e-15);
        // 0.7 * 0.25 + 0.3 per site
        let s3 = EventSampler::new(&NpParams::symmetric(0.3).unwrap(), &k).unwrap();
        assert!((s3.total_rate() - 4.0 * (0.7 * 0.25 + 0.3)).abs() < 1e-15);
    }

    #[test]
    fn event_counts_match_poisson_means() {
        let k = Kernel::<f64>::torus(1, 4).unwrap();
        for (alpha, expected) in [(0.0, 10.0), (0.3, 19.0)] {
            let s = EventSampler::new(&NpParams::symmetric(alpha).unwrap(), &k).unwrap();
            let n = 10_000;
            let counts: Vec<f64> = (0..n)
                .map(|i| {
                    let mut rng = derive_stream(11, i, "count");
                    s.sample(10.0, &mut rng).unwrap().events().len() as f64
                })
                .collect();
            let mean = counts.iter().sum::<f64>() / n as f64;
            let se = (expected / n as f64).sqrt();
            assert!((mean - expected).abs() < 3.0 * se, "alpha {alpha}: mean {mean}");
        }
    }

    #[test]
    fn logs_are_strictly_ordered() {
        let k = Kernel::<f64>::torus(2, 4).unwrap();
        let p = NpParams::symmetric(0.5).unwrap();
        let mut rng = derive_stream(5, 0, "log");
        let log = sample_event_log(&p, &k, 5.0, &mut rng).unwrap();
        assert!(!log.events().is_empty());
        assert!(log.events().windows(2).all(|w| w[0].time < w[1].time));
        assert!(log.events().iter().all(|e| e.time > 0.0 && e.time <= 5.0));
        assert!(EventLog::new(16, 5.0, log.events().to_vec()).is_ok());
    }

    #[test]
    fn log_validation() {
        let ann = EventKind::Annihilation { focal: 0, pair: (1, 2) };
        let e = |t| UpdateEvent { time: t, kind: ann };
        assert!(EventLog::new(3, 1.0, vec![e(0.5), e(0.5)]).is_err());
        assert!(EventLog::new(3, 1.0, vec![e(0.5), e(1.5)]).is_err());
        assert!(EventLog::new(3, 1.0, vec![e(0.0)]).is_err());
        assert!(EventLog::new(2, 1.0, vec![e(0.5)]).is_err());
        let bad = UpdateEvent { time: 0.1, kind: EventKind::Annihilation { focal: 0, pair: (1, 1) } };
        assert!(EventLog::new(3, 1.0, vec![bad]).is_err());
    }

    #[test]
    fn graphical_edge_cases() {
        let empty = EventLog::new(4, 1.0, vec![]).unwrap();
        assert_eq!(evolve_graphical(&[1, 3], &empty, 1.0).unwrap().as_slice(), &[0, 1, 0, 1]);
        let k = Kernel::<f64>::torus(1, 4).unwrap();
        let mut rng = derive_stream(2, 0, "log");
        let log = sample_event_log(&NpParams::symmetric(0.3).unwrap(), &k, 3.0, &mut rng).unwrap();
        for t in [0.0, 1.0, 3.0] {
            assert!(evolve_graphical(&[], &log, t).unwrap().is_zero());
        }
        assert!(matches!(evolve_graphical(&[0], &log, 3.5), Err(Error::BeyondHorizon { .. })));
    }

    #[test]
    fn initial_condition_parsing() {
        assert_eq!("all0".parse::<InitialCondition>().unwrap(), InitialCondition::AllZero);
        assert_eq!("all1".parse::<InitialCondition>().unwrap(), InitialCondition::AllOne);
        assert_eq!("bernoulli:0.25".parse::<InitialCondition>().unwrap(), InitialCondition::Bernoulli(0.25));
        assert_eq!(
            "indicator:1, 4,7".parse::<InitialCondition>().unwrap(),
            InitialCondition::Indicator(vec![1, 4, 7])
        );
        assert!("bernoulli:1.5".parse::<InitialCondition>().is_err());
        assert!("indicator:a".parse::<InitialCondition>().is_err());
        assert!("half".parse::<InitialCondition>().is_err());
        let mut rng = derive_stream(0, 0, "ic");
        assert!(InitialCondition::Indicator(vec![9]).realize(4, &mut rng).is_err());
    }
}
