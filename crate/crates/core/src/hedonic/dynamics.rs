use std::collections::HashMap;

use super::{potential, CommunityView, InitMode, Partition, Resolution};
use crate::error::{Error, Result};
use crate::pixelgraph::WeightedGraph;

/// A candidate must beat the current utility by more than this to trigger a move.
pub const STRICT_TOLERANCE: f64 = 1e-9;

pub const DEFAULT_MAX_SWEEPS: usize = 10_000;

/// Starting partition for the dynamics.
#[derive(Clone, Debug)]
pub enum Init {
    Mode(InitMode),
    Given(Partition),
}

impl From<InitMode> for Init {
    fn from(mode: InitMode) -> Self {
        Init::Mode(mode)
    }
}

impl From<Partition> for Init {
    fn from(p: Partition) -> Self {
        Init::Given(p)
    }
}

#[derive(Clone, Debug)]
pub struct EquilibriumRun {
    pub partition: Partition,
    /// Full sweeps performed, including the final sweep without moves.
    pub sweeps: usize,
    pub converged: bool,
    pub moves: u64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MoveEvent {
    pub node: usize,
    pub from: usize,
    pub to: usize,
    /// Utility at the target minus utility at the source.
    pub gain: f64,
}

/// Accumulates per-community weights around one node. The scratch buffers are
/// indexed by community id and reset through the `touched` list.
struct Scanner {
    weight_into: Vec<f64>,
    seen: Vec<bool>,
    touched: Vec<usize>,
}

impl Scanner {
    fn new() -> Self {
        Self {
            weight_into: Vec::new(),
            seen: Vec::new(),
            touched: Vec::new(),
        }
    }

    /// Best strictly improving target for `v`, or `None` to stay.
    fn best_move(
        &mut self,
        v: usize,
        part: &Partition,
        g: &WeightedGraph,
        res: Resolution,
    ) -> Option<(usize, f64)> {
        let cap = part.id_capacity();
        if self.weight_into.len() < cap {
            self.weight_into.resize(cap, 0.0);
            self.seen.resize(cap, false);
        }
        for (u, w) in g.neighbors(v) {
            let c = part.community_of(u);
            if !self.seen[c] {
                self.seen[c] = true;
                self.touched.push(c);
            }
            self.weight_into[c] += w;
        }

        let current = part.community_of(v);
        let current_size = part.size_of(current);
        let current_d = if self.seen[current] {
            self.weight_into[current]
        } else {
            0.0
        };
        let stay = potential(CommunityView::new(current_d, current_size), res);

        let mut best: Option<(f64, usize)> = None;
        let mut consider = |p: f64, id: usize| match best {
            Some((bp, bid)) if bp > p || (bp == p && bid < id) => {}
            _ => best = Some((p, id)),
        };
        for &c in &self.touched {
            if c != current {
                let view = CommunityView::new(self.weight_into[c], part.size_of(c) + 1);
                consider(potential(view, res), c);
            }
        }
        if current_size > 1 {
            consider(
                potential(CommunityView::new(0.0, 1), res),
                part.next_fresh_id(),
            );
        }

        for &c in &self.touched {
            self.weight_into[c] = 0.0;
            self.seen[c] = false;
        }
        self.touched.clear();

        match best {
            Some((p, id)) if p > stay + STRICT_TOLERANCE => Some((id, p - stay)),
            _ => None,
        }
    }
}

fn check_consistent(part: &Partition, g: &WeightedGraph) -> Result<()> {
    if part.node_count() != g.node_count() {
        return Err(Error::InconsistentPartition {
            partition: part.node_count(),
            graph: g.node_count(),
        });
    }
    Ok(())
}

/// Target community for `v` under best response, or `None` if staying is a
/// best response. Candidates are the current community, every community with
/// a neighbor of `v`, and a fresh singleton; ties keep `v` in place, and ties
/// among alternatives go to the smallest id.
pub fn best_move(
    v: usize,
    part: &Partition,
    g: &WeightedGraph,
    res: Resolution,
) -> Result<Option<usize>> {
    check_consistent(part, g)?;
    if v >= g.node_count() {
        return Err(Error::InvalidParameter(format!("node {v} out of range")));
    }
    Ok(Scanner::new().best_move(v, part, g, res).map(|(id, _)| id))
}

pub fn run_to_equilibrium(
    g: &WeightedGraph,
    res: Resolution,
    init: impl Into<Init>,
    max_sweeps: usize,
) -> Result<EquilibriumRun> {
    run_with_observer(g, res, init, max_sweeps, |_, _| {})
}

/// Asynchronous best-response sweeps in ascending node order. `observer` is
/// called after each accepted move with the updated partition.
pub fn run_with_observer(
    g: &WeightedGraph,
    res: Resolution,
    init: impl Into<Init>,
    max_sweeps: usize,
    mut observer: impl FnMut(&MoveEvent, &Partition),
) -> Result<EquilibriumRun> {
    if max_sweeps == 0 {
        return Err(Error::InvalidParameter("max_sweeps must be positive".into()));
    }
    if g.node_count() == 0 {
        return Err(Error::InvalidParameter("graph has no nodes".into()));
    }
    let mut part = match init.into() {
        Init::Mode(mode) => mode.build(g.node_count()),
        Init::Given(p) => p,
    };
    check_consistent(&part, g)?;

    let mut scanner = Scanner::new();
    let mut moves = 0u64;
    let mut sweeps = 0;
    let mut converged = false;
    while sweeps < max_sweeps {
        sweeps += 1;
        let mut changed = false;
        for v in 0..g.node_count() {
            if let Some((to, gain)) = scanner.best_move(v, &part, g, res) {
                let from = part.community_of(v);
                part.move_node(v, to);
                moves += 1;
                changed = true;
                observer(
                    &MoveEvent {
                        node: v,
                        from,
                        to,
                        gain,
                    },
                    &part,
                );
            }
        }
        if !changed {
            converged = true;
            break;
        }
    }
    Ok(EquilibriumRun {
        partition: part,
        sweeps,
        converged,
        moves,
    })
}

/// Nodes that could strictly gain (beyond [`STRICT_TOLERANCE`]) by joining a
/// neighboring community or leaving to be alone. Empty iff the partition is
/// an equilibrium.
pub fn verify_equilibrium(part: &Partition, g: &WeightedGraph, res: Resolution) -> Vec<usize> {
    let mut violating = Vec::new();
    let mut into: HashMap<usize, f64> = HashMap::new();
    for v in 0..g.node_count() {
        into.clear();
        for (u, w) in g.neighbors(v) {
            *into.entry(part.community_of(u)).or_insert(0.0) += w;
        }
        let own = part.community_of(v);
        let own_size = part.size_of(own);
        let current = potential(
            CommunityView::new(into.get(&own).copied().unwrap_or(0.0), own_size),
            res,
        );
        // leaving to be alone is worth exactly 0
        let mut best_alt = if own_size > 1 { 0.0 } else { f64::NEG_INFINITY };
        for (&c, &d) in &into {
            if c != own {
                let p = potential(CommunityView::new(d, part.size_of(c) + 1), res);
                best_alt = best_alt.max(p);
            }
        }
        if best_alt > current + STRICT_TOLERANCE {
            violating.push(v);
        }
    }
    violating
}

/// Constant Potts Model quality: sum over communities of internal edge weight
/// minus `gamma * |C| (|C| - 1) / 2`.
pub fn cpm_quality(part: &Partition, g: &WeightedGraph, res: Resolution) -> f64 {
    let internal: f64 = g
        .edges()
        .filter(|&(u, v, _)| part.community_of(u) == part.community_of(v))
        .map(|(_, _, w)| w)
        .sum();
    let pairs: f64 = part
        .communities()
        .map(|(_, s)| (s * (s - 1)) as f64 / 2.0)
        .sum();
    internal - res.gamma() * pairs
}

#[cfg(test)]
mod tests {
    use super::*;

    fn res(g: f64) -> Resolution {
        Resolution::new(g).unwrap()
    }

    fn edge() -> WeightedGraph {
        WeightedGraph::from_edges(2, &[(0, 1, 1.0)]).unwrap()
    }

    #[test]
    fn isolated_node_never_moves() {
        let g = WeightedGraph::from_edges(3, &[(1, 2, 1.0)]).unwrap();
        let p = Partition::singletons(3);
        for gamma in [0.0, 0.5, 1.0] {
            assert_eq!(best_move(0, &p, &g, res(gamma)).unwrap(), None);
        }
    }

    #[test]
    fn singleton_joins_neighbor_at_low_gamma() {
        let p = Partition::singletons(2);
        assert_eq!(best_move(0, &p, &edge(), res(0.1)).unwrap(), Some(1));
        let mut violating = verify_equilibrium(&p, &edge(), res(0.1));
        violating.sort();
        assert_eq!(violating, vec![0, 1]);
    }

    #[test]
    fn inconsistent_partition_is_an_error() {
        let p = Partition::singletons(3);
        assert!(matches!(
            best_move(0, &p, &edge(), res(0.1)),
            Err(Error::InconsistentPartition { .. })
        ));
        assert!(run_to_equilibrium(&edge(), res(0.1), p, 10).is_err());
    }

    #[test]
    fn zero_sweeps_rejected() {
        assert!(run_to_equilibrium(&edge(), res(0.1), InitMode::Singleton, 0).is_err());
    }

    #[test]
    fn extreme_gamma_fixed_points() {
        let g = WeightedGraph::from_edges(
            4,
            &[(0, 1, 1.0), (1, 2, 0.5), (2, 3, 0.25), (0, 3, 1.0)],
        )
        .unwrap();
        let run = run_to_equilibrium(&g, res(0.0), InitMode::OneCoalition, 100).unwrap();
        assert_eq!(run.partition.community_count(), 1);
        assert_eq!((run.sweeps, run.moves, run.converged), (1, 0, true));

        let run = run_to_equilibrium(&g, res(1.0), InitMode::Singleton, 100).unwrap();
        assert_eq!(run.partition.community_count(), 4);
        assert_eq!((run.sweeps, run.moves, run.converged), (1, 0, true));
        assert!(verify_equilibrium(&run.partition, &g, res(1.0)).is_empty());
    }

    #[test]
    fn cpm_examples() {
        let tri = WeightedGraph::from_edges(3, &[(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)]).unwrap();
        for gamma in [0.0, 0.4, 1.0] {
            assert_eq!(cpm_quality(&Partition::singletons(3), &tri, res(gamma)), 0.0);
        }
        assert_eq!(cpm_quality(&Partition::one_coalition(3), &tri, res(0.0)), 3.0);
        assert_eq!(cpm_quality(&Partition::one_coalition(3), &tri, res(0.5)), 1.5);
    }

    #[test]
    fn leaving_to_fresh_singleton_when_current_is_negative() {
        // node 2 hangs on by a weak edge; at gamma = 0.5 it prefers isolation
        let g = WeightedGraph::from_edges(3, &[(0, 1, 1.0), (1, 2, 0.1)]).unwrap();
        let p = Partition::one_coalition(3);
        let r = res(0.5);
        assert_eq!(best_move(2, &p, &g, r).unwrap(), Some(p.next_fresh_id()));
        let run = run_to_equilibrium(&g, r, InitMode::OneCoalition, 50).unwrap();
        assert!(run.converged);
        assert!(verify_equilibrium(&run.partition, &g, r).is_empty());
        assert_ne!(run.partition.community_of(2), run.partition.community_of(1));
    }

    #[test]
    fn non_convergence_is_reported() {
        let mut edges = Vec::new();
        for u in 0..6 {
            edges.push((u, u + 1, 1.0));
        }
        let g = WeightedGraph::from_edges(7, &edges).unwrap();
        let run = run_to_equilibrium(&g, res(0.05), InitMode::Singleton, 1).unwrap();
        assert_eq!(run.sweeps, 1);
        assert!(!run.converged);
    }

    #[test]
    fn deterministic_runs() {
        let g = WeightedGraph::from_edges(
            5,
            &[(0, 1, 0.9), (1, 2, 0.8), (2, 3, 0.3), (3, 4, 0.9), (0, 2, 0.7)],
        )
        .unwrap();
        let a = run_to_equilibrium(&g, res(0.2), InitMode::Singleton, 100).unwrap();
        let b = run_to_equilibrium(&g, res(0.2), InitMode::Singleton, 100).unwrap();
        assert_eq!(a.partition.assignment(), b.partition.assignment());
        assert_eq!((a.sweeps, a.moves), (b.sweeps, b.moves));
    }
}
