//! Run configuration: a TOML file with one section per model, overridden by
//! `--set section.key=value` pairs and the global flags.

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};

use ipsd_core::diffusion::{Migration, Scheme, Stencil};
use ipsd_core::spin::{InitialCondition, NpParams};
use ipsd_core::walkers::WalkerKind;
use ipsd_core::Kernel;

pub const SEED_ENV: &str = "IPSD_SEED";

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub reps: usize,
    pub lattice: LatticeSection,
    pub spin: SpinSection,
    pub parity: ParitySection,
    pub exact: ExactSection,
    pub meanfield: MeanfieldSection,
    pub diffusion: DiffusionSection,
    pub walkers: WalkerSection,
    pub moment: MomentSection,
    pub coexist: CoexistSection,
    pub extinct: ExtinctSection,
    pub sweep: SweepSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: None,
            reps: 1000,
            lattice: Default::default(),
            spin: Default::default(),
            parity: Default::default(),
            exact: Default::default(),
            meanfield: Default::default(),
            diffusion: Default::default(),
            walkers: Default::default(),
            moment: Default::default(),
            coexist: Default::default(),
            extinct: Default::default(),
            sweep: Default::default(),
        }
    }
}

/// Site set shared by every model.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LatticeSection {
    /// `torus`, `complete` or `explicit`.
    pub geometry: String,
    pub dim: usize,
    pub side: usize,
    /// Vertex count of the complete graph or the explicit edge list.
    pub sites: usize,
    /// Weighted directed edges `[x, y, q]` for `explicit`.
    pub edges: Vec<(usize, usize, f64)>,
    /// Diffusion and walker migration stencil: `nn:RATE`, `uniform:R:RATE` or `none`.
    pub migration: String,
}

impl Default for LatticeSection {
    fn default() -> Self {
        Self { geometry: "torus".into(), dim: 1, side: 8, sites: 200, edges: Vec::new(), migration: "nn:1".into() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpinSection {
    /// Symmetric competition parameter; ignored when `lambda` is set.
    pub alpha: f64,
    pub lambda: Option<f64>,
    pub alpha01: f64,
    pub alpha10: f64,
    /// `all0`, `all1`, `bernoulli:U` or `indicator:i,j,...`.
    pub init: String,
    pub horizon: f64,
    pub record_step: f64,
    /// Dual start set for `dual-run`.
    pub b: Vec<usize>,
    /// Also write every site of every recorded configuration.
    pub per_site: bool,
}

impl Default for SpinSection {
    fn default() -> Self {
        Self {
            alpha: 0.3,
            lambda: None,
            alpha01: 0.3,
            alpha10: 0.3,
            init: "bernoulli:0.5".into(),
            horizon: 5.0,
            record_step: 0.5,
            b: vec![0],
            per_site: false,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParitySection {
    pub a: Vec<usize>,
    pub b: Vec<usize>,
    pub t: f64,
    /// Also run the Bernoulli(1/2) identity (requires `spin.alpha = 0`).
    pub bernoulli: bool,
}

impl Default for ParitySection {
    fn default() -> Self {
        Self { a: vec![0], b: vec![1], t: 1.0, bernoulli: false }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExactSection {
    pub alphas: Vec<f64>,
    pub torus_sides: Vec<usize>,
    pub complete_sizes: Vec<usize>,
    pub times: Vec<f64>,
    /// Largest site count for the Feynman-Kac sweep over all `(A, B)`.
    pub fk_max_sites: usize,
}

impl Default for ExactSection {
    fn default() -> Self {
        Self {
            alphas: vec![0.0, 0.3, 0.7],
            torus_sides: vec![3, 4, 5],
            complete_sizes: vec![3, 4, 5],
            times: vec![0.1, 1.0, 5.0],
            fk_max_sites: 4,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeanfieldSection {
    pub lambda: f64,
    pub alpha01: f64,
    pub alpha10: f64,
    /// Initial density of type 1; the ODE starts from `p0 = 1 - density0`.
    pub density0: f64,
    pub horizon: f64,
    pub dt: f64,
    pub record_step: f64,
    /// Also run the complete-graph comparator on `lattice.sites` vertices.
    pub compare: bool,
}

impl Default for MeanfieldSection {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            alpha01: 0.5,
            alpha10: 0.5,
            density0: 0.3,
            horizon: 3.0,
            dt: 1e-3,
            record_step: 0.1,
            compare: false,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiffusionSection {
    pub s: f64,
    pub mu: f64,
    pub noise: f64,
    pub dt: f64,
    pub horizon: f64,
    pub record_step: f64,
    /// Constant initial density.
    pub init: f64,
    /// `em` or `wf`.
    pub scheme: String,
    pub kappa: f64,
    pub site: usize,
    /// Also write every site of every replicate.
    pub per_site: bool,
}

impl Default for DiffusionSection {
    fn default() -> Self {
        Self {
            s: 0.0,
            mu: 2.0,
            noise: 1.0,
            dt: 1e-3,
            horizon: 1.0,
            record_step: 0.1,
            init: 0.5,
            scheme: "em".into(),
            kappa: 0.1,
            site: 0,
            per_site: false,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WalkerSection {
    /// `crw`, `dbarw` or `bcrw`.
    pub kind: String,
    pub branch_rate: f64,
    pub s: f64,
    pub mu: f64,
    /// One particle per listed site.
    pub init: Vec<usize>,
    pub horizon: f64,
    pub cap: u64,
    pub record_step: f64,
}

impl Default for WalkerSection {
    fn default() -> Self {
        Self {
            kind: "crw".into(),
            branch_rate: 0.5,
            s: -1.0,
            mu: -0.5,
            init: vec![0, 0],
            horizon: 10.0,
            cap: ipsd_core::walkers::DEFAULT_CAP,
            record_step: 1.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MomentSection {
    /// `sigma` (mu = 2, DBARW at rate s/2) or `p` (BCRW, CRW when s = 0).
    pub pairing: String,
    pub s: f64,
    pub mu: f64,
    pub p0: f64,
    pub xi0: Vec<usize>,
    pub times: Vec<f64>,
    pub dt: f64,
    pub battery_count: usize,
    pub battery_max_particles: u32,
    pub battery_dbarw_s: Vec<f64>,
    pub battery_bcrw: Vec<(f64, f64)>,
}

impl Default for MomentSection {
    fn default() -> Self {
        Self {
            pairing: "sigma".into(),
            s: 1.0,
            mu: 2.0,
            p0: 0.5,
            xi0: vec![0, 0],
            times: vec![0.25, 0.5],
            dt: 1e-3,
            battery_count: 1000,
            battery_max_particles: 6,
            battery_dbarw_s: vec![0.5, 1.0, 5.0],
            battery_bcrw: vec![(-0.5, -1.0), (-0.5, -0.5), (-0.5, 0.0), (-1.0, -1.0), (-1.0, -0.5), (-1.0, 0.0)],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoexistSection {
    pub s: f64,
    pub kappa: f64,
    pub het_time: f64,
    pub walker_horizon: f64,
    pub dt: f64,
    pub scheme: String,
    /// DBARW replicates; defaults to `reps`.
    pub walker_reps: Option<usize>,
}

impl Default for CoexistSection {
    fn default() -> Self {
        Self { s: 20.0, kappa: 0.1, het_time: 10.0, walker_horizon: 50.0, dt: 1e-3, scheme: "wf".into(), walker_reps: None }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtinctSection {
    pub s: f64,
    pub mu: f64,
    pub eps: f64,
    pub p0: f64,
    pub xi0: Vec<usize>,
    pub times: Vec<f64>,
    pub dt: f64,
    pub scheme: String,
}

impl Default for ExtinctSection {
    fn default() -> Self {
        Self { s: -1.0, mu: -0.5, eps: 0.25, p0: 0.5, xi0: vec![0], times: vec![1.0, 2.0, 5.0, 10.0], dt: 1e-3, scheme: "wf".into() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    /// Subcommand run once per value.
    pub command: String,
    /// Dotted key, e.g. `coexist.s`.
    pub key: String,
    pub values: Vec<toml::Value>,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self { command: "coexist-probe".into(), key: "coexist.s".into(), values: Vec::new() }
    }
}

/// Parses the right-hand side of an override as a TOML value, falling back to a string.
fn parse_value(raw: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

/// Sets `a.b.c = value` inside `table`, creating intermediate tables.
pub fn set_path(table: &mut toml::Table, key: &str, value: toml::Value) -> Result<()> {
    let mut parts: Vec<&str> = key.split('.').collect();
    let last = parts.pop().filter(|k| !k.is_empty()).ok_or_else(|| anyhow!("empty override key {key:?}"))?;
    let mut cur = table;
    for p in parts {
        let entry = cur.entry(p.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry.as_table_mut().ok_or_else(|| anyhow!("override key {key:?}: {p} is not a section"))?;
    }
    cur.insert(last.to_string(), value);
    Ok(())
}

pub fn apply_override(table: &mut toml::Table, spec: &str) -> Result<()> {
    let (k, v) = spec.split_once('=').ok_or_else(|| anyhow!("override {spec:?} is not key=value"))?;
    set_path(table, k.trim(), parse_value(v.trim()))
}

pub fn load_table(path: Option<&std::path::Path>) -> Result<toml::Table> {
    match path {
        None => Ok(toml::Table::new()),
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
            toml::from_str(&text).with_context(|| format!("parsing config {}", p.display()))
        }
    }
}

impl RunConfig {
    pub fn from_table(table: toml::Table) -> Result<Self> {
        let cfg: RunConfig = toml::Value::Table(table).try_into().context("invalid configuration")?;
        Ok(cfg)
    }

    /// Seed from the flag, else the file, else the environment; there is no clock fallback.
    pub fn resolve_seed(&mut self, flag: Option<u64>, env: Option<&str>) -> Result<u64> {
        let seed = match (flag, self.seed, env) {
            (Some(s), _, _) | (None, Some(s), _) => s,
            (None, None, Some(v)) => v.trim().parse().with_context(|| format!("{SEED_ENV}={v:?} is not a u64"))?,
            (None, None, None) => bail!("a master seed is required: pass --seed, set `seed` in the config, or export {SEED_ENV}"),
        };
        self.seed = Some(seed);
        Ok(seed)
    }

    pub fn seed(&self) -> u64 {
        self.seed.expect("seed resolved before dispatch")
    }

    pub fn check_reps(&self) -> Result<()> {
        if self.reps < 2 {
            bail!("reps must be at least 2, got {}", self.reps);
        }
        Ok(())
    }

    pub fn kernel(&self) -> Result<Kernel<f64>> {
        let l = &self.lattice;
        Ok(match l.geometry.as_str() {
            "torus" => Kernel::torus(l.dim, l.side)?,
            "complete" => Kernel::complete(l.sites)?,
            "explicit" => Kernel::from_edges(l.sites, &l.edges)?,
            other => bail!("unknown geometry {other:?}; expected torus, complete or explicit"),
        })
    }

    pub fn migration(&self) -> Result<Migration<f64>> {
        let l = &self.lattice;
        if l.geometry != "torus" {
            bail!("diffusions and walkers need lattice.geometry = \"torus\"");
        }
        let stencil: Stencil = l.migration.parse()?;
        Ok(Migration::torus(l.dim, l.side, &stencil)?)
    }

    pub fn np_params(&self) -> Result<NpParams<f64>> {
        let s = &self.spin;
        Ok(match s.lambda {
            Some(l) => NpParams::general(l, s.alpha01, s.alpha10)?,
            None => NpParams::symmetric(s.alpha)?,
        })
    }

    pub fn initial_condition(&self) -> Result<InitialCondition> {
        Ok(self.spin.init.parse()?)
    }

    pub fn walker_kind(&self) -> Result<WalkerKind> {
        let w = &self.walkers;
        let kind = match w.kind.as_str() {
            "crw" => WalkerKind::Crw,
            "dbarw" => WalkerKind::Dbarw { branch_rate: w.branch_rate },
            "bcrw" => WalkerKind::Bcrw { s: w.s, mu: w.mu },
            other => bail!("unknown walker kind {other:?}; expected crw, dbarw or bcrw"),
        };
        kind.validate()?;
        Ok(kind)
    }

    /// Enforces the gates of every model section, so bad input fails before any work starts.
    pub fn validate(&self) -> Result<()> {
        self.check_reps()?;
        self.kernel()?;
        if self.lattice.geometry == "torus" {
            self.migration()?;
        }
        self.np_params()?;
        self.initial_condition()?;
        self.walker_kind()?;
        parse_scheme(&self.diffusion.scheme)?;
        parse_scheme(&self.coexist.scheme)?;
        parse_scheme(&self.extinct.scheme)?;
        if !matches!(self.moment.pairing.as_str(), "sigma" | "p") {
            bail!("moment.pairing must be sigma or p, got {:?}", self.moment.pairing);
        }
        for (name, v) in [
            ("spin.horizon", self.spin.horizon),
            ("diffusion.dt", self.diffusion.dt),
            ("moment.dt", self.moment.dt),
            ("meanfield.dt", self.meanfield.dt),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                bail!("{name} must be positive, got {v}");
            }
        }
        Ok(())
    }
}

pub fn parse_scheme(s: &str) -> Result<Scheme> {
    Ok(s.parse()?)
}
