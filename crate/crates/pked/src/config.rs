//! Flat `key = value` experiment configuration.
//!
//! Blank lines and text after `#` are ignored. Every key may appear at most
//! once and unknown keys are rejected. Lists are comma separated.
//!
//! | key | default | meaning |
//! |---|---|---|
//! | `kind` | required | `quench`, `eigenstates`, `pairwise`, `models` or `theory` |
//! | `name` | kind | base name of the output tables |
//! | `model` | `qimf` | `qimf`, `random_coupling` or `random_hopping` |
//! | `n` | per kind | system sizes, each at most 14 |
//! | `n_a` | 3 | qubits in subsystem A (the first `n_a` qubits) |
//! | `hx`, `hy`, `j` | 0.8090, 0.9045, 1 | mixed-field Ising couplings |
//! | `seed` | 0 | top-level seed for every random stream |
//! | `disorder_seed` | `seed` | seed of the disordered couplings |
//! | `k_max` | 3 | highest moment order, at most 4 |
//! | `t_start`, `t_stop`, `t_points` | 0.1, 1000, 61 | log-spaced time grid |
//! | `include_t0` | true, false for `models` | prepend a `t = 0` row |
//! | `epsilon` | 0.02 | design-time threshold |
//! | `em_repeats` | 20 | empirical Haar ensembles per baseline |
//! | `saturation_points` | 5 | late-time points averaged for saturation |
//! | `fit_lo`, `fit_hi` | 1, 30 | power-law fit window |
//! | `count` | 100 | eigenstates per selection |
//! | `sweep` | `selected` | `selected` or `all` eigenstates |
//! | `energy_cut`, `cut_width` | -0.6, 0.02 | pair cut `(E_i + E_j)/N` |
//! | `bin_width` | 0.02 | bin width in `abs(E_i - E_j)/N` |
//! | `near_diag` | 0.02 | near-diagonal window in `abs(E_i - E_j)/N` |
//! | `pairs_output` | `cut` | `cut` or `all` pair rows |
//! | `models` | `random_coupling,random_hopping` | models campaign members |
//! | `postselect` | true | add the sector ensemble for the hopping model |
//! | `sector_n_a`, `s_a`, `s_b` | 5, -0.5, 0.5 | post-selection partition and sectors |
//! | `theory_samples` | 100000 | Monte Carlo samples for the moment identity |
//! | `theory_states` | 100 | Haar states per residual-bound check |
//! | `cache_dir` | none | directory for cached spectra |
//! | `out` | `out` | output root |
//! | `threads` | all cores | worker threads |
//!
//! `cache_dir`, `out` and `threads` do not change any result and are left out
//! of the config hash.

use crate::error::{config_err, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Quench,
    Eigenstates,
    Pairwise,
    Models,
    Theory,
}

impl Kind {
    pub fn as_str(&self) -> &'static str {
        match self {
            Kind::Quench => "quench",
            Kind::Eigenstates => "eigenstates",
            Kind::Pairwise => "pairwise",
            Kind::Models => "models",
            Kind::Theory => "theory",
        }
    }
}

impl FromStr for Kind {
    type Err = crate::error::ExpError;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "quench" => Kind::Quench,
            "eigenstates" => Kind::Eigenstates,
            "pairwise" => Kind::Pairwise,
            "models" => Kind::Models,
            "theory" | "theory_checks" => Kind::Theory,
            _ => return Err(config_err(format!("unknown kind `{s}`"))),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Qimf,
    RandomCoupling,
    RandomHopping,
}

impl ModelKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ModelKind::Qimf => "qimf",
            ModelKind::RandomCoupling => "random_coupling",
            ModelKind::RandomHopping => "random_hopping",
        }
    }
}

impl FromStr for ModelKind {
    type Err = crate::error::ExpError;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "qimf" => ModelKind::Qimf,
            "random_coupling" => ModelKind::RandomCoupling,
            "random_hopping" => ModelKind::RandomHopping,
            _ => return Err(config_err(format!("unknown model `{s}`"))),
        })
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub kind: Kind,
    pub name: String,
    pub model: ModelKind,
    pub sizes: Vec<usize>,
    pub n_a: usize,
    pub hx: f64,
    pub hy: f64,
    pub j: f64,
    pub seed: u64,
    pub disorder_seed: u64,
    pub k_max: usize,
    pub t_start: f64,
    pub t_stop: f64,
    pub t_points: usize,
    pub include_t0: bool,
    pub epsilon: f64,
    pub em_repeats: usize,
    pub saturation_points: usize,
    pub fit_lo: f64,
    pub fit_hi: f64,
    pub count: usize,
    pub sweep_all: bool,
    pub energy_cut: f64,
    pub cut_width: f64,
    pub bin_width: f64,
    pub near_diag: f64,
    pub all_pairs: bool,
    pub models: Vec<ModelKind>,
    pub postselect: bool,
    pub sector_n_a: usize,
    pub s_a: f64,
    pub s_b: f64,
    pub theory_samples: usize,
    pub theory_states: usize,
    pub cache_dir: Option<PathBuf>,
    pub out: PathBuf,
    pub threads: Option<usize>,
}

/// Largest system size accepted.
pub const MAX_N: usize = 14;

/// Largest system size for all-pairs campaigns.
pub const MAX_PAIRWISE_N: usize = 11;

const KEYS: &[&str] = &[
    "kind",
    "name",
    "model",
    "n",
    "n_a",
    "hx",
    "hy",
    "j",
    "seed",
    "disorder_seed",
    "k_max",
    "t_start",
    "t_stop",
    "t_points",
    "include_t0",
    "epsilon",
    "em_repeats",
    "saturation_points",
    "fit_lo",
    "fit_hi",
    "count",
    "sweep",
    "energy_cut",
    "cut_width",
    "bin_width",
    "near_diag",
    "pairs_output",
    "models",
    "postselect",
    "sector_n_a",
    "s_a",
    "s_b",
    "theory_samples",
    "theory_states",
    "cache_dir",
    "out",
    "threads",
];

fn parse<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| config_err(format!("`{key}`: cannot parse `{v}`")))
}

fn parse_list<T: FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse(key, s))
        .collect()
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(config_err(format!("`{key}`: expected true or false, got `{v}`"))),
    }
}

impl ExperimentConfig {
    /// Defaults for `kind`.
    pub fn defaults(kind: Kind) -> Self {
        let sizes = match kind {
            Kind::Quench | Kind::Eigenstates => vec![10, 12],
            Kind::Pairwise => vec![9],
            Kind::Models => vec![12],
            Kind::Theory => vec![],
        };
        Self {
            kind,
            name: kind.as_str().to_string(),
            model: ModelKind::Qimf,
            sizes,
            n_a: 3,
            hx: 0.8090,
            hy: 0.9045,
            j: 1.0,
            seed: 0,
            disorder_seed: 0,
            k_max: 3,
            t_start: 0.1,
            t_stop: 1000.0,
            t_points: 61,
            include_t0: kind != Kind::Models,
            epsilon: 0.02,
            em_repeats: 20,
            saturation_points: 5,
            fit_lo: 1.0,
            fit_hi: 30.0,
            count: 100,
            sweep_all: false,
            energy_cut: -0.6,
            cut_width: 0.02,
            bin_width: 0.02,
            near_diag: 0.02,
            all_pairs: false,
            models: vec![ModelKind::RandomCoupling, ModelKind::RandomHopping],
            postselect: true,
            sector_n_a: 5,
            s_a: -0.5,
            s_b: 0.5,
            theory_samples: 100_000,
            theory_states: 100,
            cache_dir: None,
            out: PathBuf::from("out"),
            threads: None,
        }
    }

    /// Parses and validates a config file body.
    pub fn parse_str(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| config_err(format!("line {}: expected `key = value`", no + 1)))?;
            let (k, v) = (k.trim(), v.trim());
            if !KEYS.contains(&k) {
                return Err(config_err(format!("line {}: unknown key `{k}`", no + 1)));
            }
            if map.insert(k.to_string(), v.to_string()).is_some() {
                return Err(config_err(format!("line {}: duplicate key `{k}`", no + 1)));
            }
        }
        let kind: Kind = map
            .get("kind")
            .ok_or_else(|| config_err("missing `kind`"))?
            .parse()?;
        let mut c = Self::defaults(kind);
        let mut disorder_seed = None;
        for (k, v) in &map {
            let v = v.as_str();
            match k.as_str() {
                "kind" => {}
                "name" => {
                    if v.is_empty() || v.contains(['/', '\\']) {
                        return Err(config_err(format!("`name`: invalid `{v}`")));
                    }
                    c.name = v.to_string();
                }
                "model" => c.model = v.parse()?,
                "n" => c.sizes = parse_list(k, v)?,
                "n_a" => c.n_a = parse(k, v)?,
                "hx" => c.hx = parse(k, v)?,
                "hy" => c.hy = parse(k, v)?,
                "j" => c.j = parse(k, v)?,
                "seed" => c.seed = parse(k, v)?,
                "disorder_seed" => disorder_seed = Some(parse(k, v)?),
                "k_max" => c.k_max = parse(k, v)?,
                "t_start" => c.t_start = parse(k, v)?,
                "t_stop" => c.t_stop = parse(k, v)?,
                "t_points" => c.t_points = parse(k, v)?,
                "include_t0" => c.include_t0 = parse_bool(k, v)?,
                "epsilon" => c.epsilon = parse(k, v)?,
                "em_repeats" => c.em_repeats = parse(k, v)?,
                "saturation_points" => c.saturation_points = parse(k, v)?,
                "fit_lo" => c.fit_lo = parse(k, v)?,
                "fit_hi" => c.fit_hi = parse(k, v)?,
                "count" => c.count = parse(k, v)?,
                "sweep" => {
                    c.sweep_all = match v {
                        "all" => true,
                        "selected" => false,
                        _ => return Err(config_err(format!("`sweep`: expected all or selected, got `{v}`"))),
                    }
                }
                "energy_cut" => c.energy_cut = parse(k, v)?,
                "cut_width" => c.cut_width = parse(k, v)?,
                "bin_width" => c.bin_width = parse(k, v)?,
                "near_diag" => c.near_diag = parse(k, v)?,
                "pairs_output" => {
                    c.all_pairs = match v {
                        "all" => true,
                        "cut" => false,
                        _ => return Err(config_err(format!("`pairs_output`: expected all or cut, got `{v}`"))),
                    }
                }
                "models" => c.models = parse_list(k, v)?,
                "postselect" => c.postselect = parse_bool(k, v)?,
                "sector_n_a" => c.sector_n_a = parse(k, v)?,
                "s_a" => c.s_a = parse(k, v)?,
                "s_b" => c.s_b = parse(k, v)?,
                "theory_samples" => c.theory_samples = parse(k, v)?,
                "theory_states" => c.theory_states = parse(k, v)?,
                "cache_dir" => c.cache_dir = Some(PathBuf::from(v)),
                "out" => c.out = PathBuf::from(v),
                "threads" => c.threads = Some(parse(k, v)?),
                _ => unreachable!("key list checked above"),
            }
        }
        c.disorder_seed = disorder_seed.unwrap_or(c.seed);
        c.validate()?;
        Ok(c)
    }

    /// Replaces the top-level seed. The disorder seed follows unless it was
    /// set explicitly.
    pub fn with_seed(mut self, seed: u64) -> Self {
        if self.disorder_seed == self.seed {
            self.disorder_seed = seed;
        }
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(config_err(m));
        if self.kind != Kind::Theory && self.sizes.is_empty() {
            return bad("`n` must list at least one size".into());
        }
        for &n in &self.sizes {
            if n > MAX_N {
                return bad(format!("N = {n} above the limit {MAX_N}"));
            }
            if n <= self.n_a {
                return bad(format!("N = {n} leaves no qubits in B for n_a = {}", self.n_a));
            }
            if self.kind == Kind::Pairwise && n > MAX_PAIRWISE_N {
                return bad(format!("pairwise campaigns are limited to N <= {MAX_PAIRWISE_N}"));
            }
            if self.kind == Kind::Models && self.postselect && n <= self.sector_n_a {
                return bad(format!("N = {n} leaves no qubits in B for sector_n_a = {}", self.sector_n_a));
            }
        }
        if self.n_a == 0 {
            return bad("`n_a` must be positive".into());
        }
        if !(1..=4).contains(&self.k_max) {
            return bad(format!("k_max = {} outside 1..=4", self.k_max));
        }
        if !(self.t_start > 0.0 && self.t_stop > self.t_start && self.t_points >= 2) {
            return bad("time grid needs 0 < t_start < t_stop and t_points >= 2".into());
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return bad(format!("epsilon = {} outside (0, 1)", self.epsilon));
        }
        if self.em_repeats < 2 {
            return bad("em_repeats must be at least 2".into());
        }
        if self.saturation_points == 0 || self.saturation_points > self.t_points {
            return bad("saturation_points must lie in 1..=t_points".into());
        }
        if !(self.fit_lo > 0.0 && self.fit_hi > self.fit_lo) {
            return bad("fit window needs 0 < fit_lo < fit_hi".into());
        }
        if self.count == 0 {
            return bad("count must be positive".into());
        }
        if !(self.cut_width > 0.0 && self.bin_width > 0.0 && self.near_diag > 0.0) {
            return bad("cut_width, bin_width and near_diag must be positive".into());
        }
        if self.kind == Kind::Models && self.models.is_empty() {
            return bad("`models` must list at least one model".into());
        }
        if self.kind == Kind::Models
            && self.postselect
            && self.include_t0
            && self.models.contains(&ModelKind::RandomHopping)
        {
            return bad("include_t0 is not allowed with postselect: the product state has no weight in the B sector".into());
        }
        if self.theory_samples < 1000 || self.theory_states == 0 {
            return bad("theory_samples must be at least 1000 and theory_states positive".into());
        }
        if self.threads == Some(0) {
            return bad("threads must be positive".into());
        }
        Ok(())
    }

    /// Canonical text of every result-affecting field.
    pub fn canonical(&self) -> String {
        let list = |v: &[usize]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        let models = self.models.iter().map(|m| m.as_str()).collect::<Vec<_>>().join(",");
        let fields: Vec<(&str, String)> = vec![
            ("kind", self.kind.as_str().into()),
            ("name", self.name.clone()),
            ("model", self.model.as_str().into()),
            ("n", list(&self.sizes)),
            ("n_a", self.n_a.to_string()),
            ("hx", format!("{:?}", self.hx)),
            ("hy", format!("{:?}", self.hy)),
            ("j", format!("{:?}", self.j)),
            ("seed", self.seed.to_string()),
            ("disorder_seed", self.disorder_seed.to_string()),
            ("k_max", self.k_max.to_string()),
            ("t_start", format!("{:?}", self.t_start)),
            ("t_stop", format!("{:?}", self.t_stop)),
            ("t_points", self.t_points.to_string()),
            ("include_t0", self.include_t0.to_string()),
            ("epsilon", format!("{:?}", self.epsilon)),
            ("em_repeats", self.em_repeats.to_string()),
            ("saturation_points", self.saturation_points.to_string()),
            ("fit_lo", format!("{:?}", self.fit_lo)),
            ("fit_hi", format!("{:?}", self.fit_hi)),
            ("count", self.count.to_string()),
            ("sweep", if self.sweep_all { "all" } else { "selected" }.into()),
            ("energy_cut", format!("{:?}", self.energy_cut)),
            ("cut_width", format!("{:?}", self.cut_width)),
            ("bin_width", format!("{:?}", self.bin_width)),
            ("near_diag", format!("{:?}", self.near_diag)),
            ("pairs_output", if self.all_pairs { "all" } else { "cut" }.into()),
            ("models", models),
            ("postselect", self.postselect.to_string()),
            ("sector_n_a", self.sector_n_a.to_string()),
            ("s_a", format!("{:?}", self.s_a)),
            ("s_b", format!("{:?}", self.s_b)),
            ("theory_samples", self.theory_samples.to_string()),
            ("theory_states", self.theory_states.to_string()),
        ];
        fields
            .into_iter()
            .map(|(k, v)| format!("{k}={v}\n"))
            .collect()
    }

    /// First 16 hex digits of the SHA-256 of [`canonical`](Self::canonical).
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical().as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Time grid: optional `0`, then `t_points` log-spaced values.
    pub fn times(&self) -> Vec<f64> {
        let mut t = Vec::with_capacity(self.t_points + 1);
        if self.include_t0 {
            t.push(0.0);
        }
        let ratio = (self.t_stop / self.t_start).ln();
        let last = (self.t_points - 1) as f64;
        t.extend((0..self.t_points).map(|i| {
            if i == self.t_points - 1 {
                self.t_stop
            } else {
                self.t_start * (ratio * i as f64 / last).exp()
            }
        }));
        t
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config() {
        let c = ExperimentConfig::parse_str("kind = quench\n").unwrap();
        assert_eq!(c.kind, Kind::Quench);
        assert_eq!(c.sizes, vec![10, 12]);
        assert_eq!(c.times().len(), 62);
        assert_eq!(c.times()[0], 0.0);
        assert_eq!(*c.times().last().unwrap(), 1000.0);
        assert!((c.times()[1] - 0.1).abs() < 1e-15);
    }

    #[test]
    fn full_config() {
        let text = "kind = models  # comment\nn = 10, 12\nmodels = random_hopping\nseed = 7\n\nk_max=2\n";
        let c = ExperimentConfig::parse_str(text).unwrap();
        assert_eq!(c.sizes, vec![10, 12]);
        assert_eq!(c.models, vec![ModelKind::RandomHopping]);
        assert_eq!(c.disorder_seed, 7);
        assert_eq!(c.k_max, 2);
    }

    #[test]
    fn rejects_bad_input() {
        for text in [
            "n = 10\n",
            "kind = quench\nfoo = 1\n",
            "kind = quench\nn = 16\n",
            "kind = quench\nk_max = 5\n",
            "kind = quench\nn_a = 3\nn = 3\n",
            "kind = pairwise\nn = 12\n",
            "kind = quench\nseed = 1\nseed = 2\n",
            "kind = quench\nt_points = 1\n",
            "kind = quench\nhx = abc\n",
            "kind = quench\njunk\n",
            "kind = bogus\n",
        ] {
            assert!(ExperimentConfig::parse_str(text).is_err(), "{text}");
        }
    }

    #[test]
    fn hash_ignores_runtime_keys() {
        let a = ExperimentConfig::parse_str("kind = quench\n").unwrap();
        let b = ExperimentConfig::parse_str("kind = quench\nthreads = 3\nout = elsewhere\ncache_dir = /tmp/x\n").unwrap();
        let c = ExperimentConfig::parse_str("kind = quench\nseed = 1\n").unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), c.hash());
        assert_eq!(a.hash().len(), 16);
        assert_eq!(a.clone().with_seed(1).hash(), c.hash());
    }
}
