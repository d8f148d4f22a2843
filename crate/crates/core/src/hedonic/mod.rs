//! Pixels as agents in an additively separable hedonic game.
//!
//! A node `v` values community `C` (evaluated as if `v` were a member) by
//! `(1 - gamma) d(v, C) - gamma dbar(v, C)`, where `d` is the edge weight from
//! `v` into `C` and `dbar = |C| - 1 - d`. Best-response moves on this utility
//! are exactly the moves that increase the Constant Potts Model quality, so
//! asynchronous best-response dynamics terminate at a partition in which no
//! node can strictly gain by switching communities or leaving to be alone.

mod dynamics;
mod partition;

pub use dynamics::{
    best_move, cpm_quality, run_to_equilibrium, run_with_observer, verify_equilibrium,
    EquilibriumRun, Init, MoveEvent, DEFAULT_MAX_SWEEPS, STRICT_TOLERANCE,
};
pub use partition::Partition;

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::pixelgraph::{graph_density, WeightedGraph};

/// Resolution `gamma` in `[0, 1]`, optionally carried as an exact ratio `b / kappa`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Resolution {
    gamma: f64,
    ratio: Option<(u64, u64)>,
}

impl Resolution {
    pub fn new(gamma: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&gamma) {
            return Err(Error::ResolutionOutOfRange(gamma));
        }
        Ok(Self { gamma, ratio: None })
    }

    pub fn from_ratio(b: u64, kappa: u64) -> Result<Self> {
        if kappa == 0 {
            return Err(Error::InvalidParameter("kappa must be positive".into()));
        }
        if b > kappa {
            return Err(Error::ResolutionOutOfRange(b as f64 / kappa as f64));
        }
        Ok(Self {
            gamma: b as f64 / kappa as f64,
            ratio: Some((b, kappa)),
        })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn ratio(&self) -> Option<(u64, u64)> {
        self.ratio
    }
}

/// `gamma = density(G) / c`. With integer `c` the ratio
/// `2|E| / (c |V| (|V| - 1))` is recorded exactly.
pub fn resolution_from_density(g: &WeightedGraph, c: f64) -> Result<Resolution> {
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::InvalidParameter(format!("c must be positive, got {c}")));
    }
    let density = graph_density(g)?;
    let gamma = density / c;
    if gamma > 1.0 {
        return Err(Error::ResolutionOutOfRange(gamma));
    }
    if c.fract() == 0.0 && c <= u64::MAX as f64 {
        let n = g.node_count() as u64;
        let kappa = n
            .checked_mul(n - 1)
            .and_then(|p| p.checked_mul(c as u64));
        if let Some(kappa) = kappa {
            return Resolution::from_ratio(2 * g.edge_count() as u64, kappa);
        }
    }
    Resolution::new(gamma)
}

/// What node `v` sees when evaluating community `C`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CommunityView {
    /// Total edge weight from `v` into `C`, excluding `v` itself.
    pub d: f64,
    /// `|C|` counting `v` as a member.
    pub size: usize,
}

impl CommunityView {
    pub fn new(d: f64, size: usize) -> Self {
        debug_assert!(size >= 1);
        Self { d, size }
    }

    /// Weighted non-neighbors: `|C| - 1 - d`.
    pub fn dbar(&self) -> f64 {
        (self.size - 1) as f64 - self.d
    }
}

/// Node utility `(1 - gamma) d - gamma dbar`.
pub fn potential(view: CommunityView, res: Resolution) -> f64 {
    let g = res.gamma();
    (1.0 - g) * view.d - g * view.dbar()
}

/// Same utility in the form `d - gamma (|C| - 1)`.
pub fn potential_by_size(view: CommunityView, res: Resolution) -> f64 {
    view.d - res.gamma() * (view.size - 1) as f64
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum InitMode {
    Singleton,
    OneCoalition,
}

impl InitMode {
    pub fn build(self, n: usize) -> Partition {
        match self {
            InitMode::Singleton => Partition::singletons(n),
            InitMode::OneCoalition => Partition::one_coalition(n),
        }
    }
}

impl fmt::Display for InitMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InitMode::Singleton => "singleton",
            InitMode::OneCoalition => "one",
        })
    }
}

impl FromStr for InitMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "singleton" | "singletons" => Ok(InitMode::Singleton),
            "one" | "one_coalition" | "one-coalition" => Ok(InitMode::OneCoalition),
            other => Err(Error::InvalidParameter(format!(
                "unknown init mode `{other}` (expected singleton or one)"
            ))),
        }
    }
}
