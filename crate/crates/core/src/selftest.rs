//! Embedded verification suite. Each check compares the implementation under
//! test, bundled as a [`Subject`], against exact values or brute force.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::hedonic::{
    potential, run_to_equilibrium, verify_equilibrium, CommunityView, InitMode, Partition,
    Resolution, DEFAULT_MAX_SWEEPS, STRICT_TOLERANCE,
};
use crate::pixelgraph::WeightedGraph;
use crate::projection::{
    f1_single_tallies, f1_union_greedy_tallies, pathological_instance, union_oracle_tallies,
    Tallies, Tally, UnionSelection,
};
use crate::synthetic::{random_connected_graph, random_graph, random_labeling};

pub type PotentialFn = fn(CommunityView, Resolution) -> f64;
pub type GreedyFn = fn(&Tallies, Option<usize>) -> Result<UnionSelection>;

/// The functions exercised by the suite; swapped out in tests to confirm the
/// suite notices faults.
#[derive(Clone, Copy)]
pub struct Subject {
    pub potential: PotentialFn,
    pub greedy: GreedyFn,
}

impl Default for Subject {
    fn default() -> Self {
        Self {
            potential,
            greedy: f1_union_greedy_tallies,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SelftestReport {
    pub checks: Vec<CheckResult>,
}

impl SelftestReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

impl fmt::Display for SelftestReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(
                f,
                "{} {:<22} {}",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.detail
            )?;
        }
        let failed = self.checks.iter().filter(|c| !c.passed).count();
        write!(f, "{} checks, {} failed", self.checks.len(), failed)
    }
}

const SEED: u64 = 0x5E1F_7E57;
const EXACT: f64 = 1e-12;

fn toy(s: &Subject) -> CheckResult {
    let t = Tallies::new(
        vec![
            Tally { label: 0, size: 40, overlap: 30 },
            Tally { label: 1, size: 35, overlap: 25 },
            Tally { label: 2, size: 50, overlap: 10 },
        ],
        100,
    );
    let individual: Vec<f64> = t.communities.iter().map(|c| t.report(c).f1).collect();
    let expected = [60.0 / 140.0, 50.0 / 135.0, 20.0 / 150.0];
    let union = (s.greedy)(&t, None);
    let ok_individual = individual.iter().zip(expected).all(|(a, b)| (a - b).abs() < EXACT);
    let (passed, detail) = match union {
        Ok(u) => {
            let ok = ok_individual
                && (u.score - 110.0 / 175.0).abs() < EXACT
                && u.labels == [0, 1];
            (ok, format!("union {:?} -> {:.6}", u.labels, u.score))
        }
        Err(e) => (false, e.to_string()),
    };
    CheckResult {
        name: "toy example",
        passed,
        detail,
    }
}

fn pathology(s: &Subject) -> CheckResult {
    let mut failures = Vec::new();
    for m in [1usize, 3, 9, 99] {
        let outcome = pathological_instance(m, 4 * m).and_then(|(part, gt)| {
            let t = Tallies::from_partition(&part, &gt)?;
            Ok((f1_single_tallies(&t)?.1.f1, (s.greedy)(&t, None)?.score))
        });
        match outcome {
            Ok((single, union)) => {
                if (single - 2.0 / (m as f64 + 1.0)).abs() >= EXACT || union != 1.0 {
                    failures.push(format!("m={m}: single {single:.6}, union {union:.6}"));
                }
            }
            Err(e) => failures.push(format!("m={m}: {e}")),
        }
    }
    CheckResult {
        name: "fragmented object",
        passed: failures.is_empty(),
        detail: if failures.is_empty() {
            "m in {1,3,9,99}".into()
        } else {
            failures.join("; ")
        },
    }
}

fn extremes() -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut failures = 0;
    for _ in 0..20 {
        let n = rng.gen_range(5..30);
        let g = random_connected_graph(&mut rng, n, 0.2, true);
        let zero = Resolution::new(0.0).unwrap();
        let one = Resolution::new(1.0).unwrap();
        let a = run_to_equilibrium(&g, zero, InitMode::OneCoalition, DEFAULT_MAX_SWEEPS);
        let b = run_to_equilibrium(&g, one, InitMode::Singleton, DEFAULT_MAX_SWEEPS);
        let ok = matches!(a, Ok(ref r) if r.partition.community_count() == 1)
            && matches!(b, Ok(ref r) if r.partition.community_count() == n);
        failures += usize::from(!ok);
    }
    CheckResult {
        name: "extreme resolutions",
        passed: failures == 0,
        detail: format!("{failures}/20 graphs failed"),
    }
}

/// Nodes that could strictly improve under `pot`, checking every community
/// and a fresh singleton.
fn brute_force_violations(part: &Partition, g: &WeightedGraph, res: Resolution, pot: PotentialFn) -> usize {
    let communities: Vec<usize> = part.communities().map(|(c, _)| c).collect();
    (0..g.node_count())
        .filter(|&v| {
            let into = |c: usize| {
                g.neighbors(v)
                    .filter(|&(u, _)| part.community_of(u) == c)
                    .map(|(_, w)| w)
                    .sum::<f64>()
            };
            let own = part.community_of(v);
            let current = pot(CommunityView::new(into(own), part.size_of(own)), res);
            let fresh = if part.size_of(own) > 1 {
                pot(CommunityView::new(0.0, 1), res)
            } else {
                f64::NEG_INFINITY
            };
            let best = communities
                .iter()
                .filter(|&&c| c != own)
                .map(|&c| pot(CommunityView::new(into(c), part.size_of(c) + 1), res))
                .fold(fresh, f64::max);
            best > current + STRICT_TOLERANCE
        })
        .count()
}

fn equilibria(s: &Subject) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 1);
    let gammas = [0.05, 0.2, 0.5];
    let mut bad_graphs = 0;
    let mut non_converged = 0;
    for i in 0..50 {
        let g = random_graph(&mut rng, 30, 0.3, true);
        let res = Resolution::new(gammas[i % 3]).unwrap();
        let init = if i % 2 == 0 { InitMode::Singleton } else { InitMode::OneCoalition };
        match run_to_equilibrium(&g, res, init, DEFAULT_MAX_SWEEPS) {
            Ok(run) if run.converged => {
                let brute = brute_force_violations(&run.partition, &g, res, s.potential);
                let fast = verify_equilibrium(&run.partition, &g, res).len();
                if brute > 0 || fast > 0 {
                    bad_graphs += 1;
                }
            }
            _ => non_converged += 1,
        }
    }
    CheckResult {
        name: "equilibria",
        passed: bad_graphs == 0 && non_converged == 0,
        detail: format!("50 graphs: {bad_graphs} with violations, {non_converged} not converged"),
    }
}

/// Share of random instances on which greedy must match the oracle.
pub const ORACLE_AGREEMENT_MIN: f64 = 0.95;

fn greedy_vs_oracle(s: &Subject) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 2);
    let (mut above_oracle, mut below_single, mut equal, mut errors) = (0, 0, 0, 0);
    const CASES: usize = 200;
    for _ in 0..CASES {
        let k = rng.gen_range(1..=12);
        let (labels, mask) = random_labeling(&mut rng, 16, 12, k);
        let Ok(t) = Tallies::from_labels(&labels, &mask) else {
            errors += 1;
            continue;
        };
        let (Ok(g), Ok(o), Ok((_, single))) = ((s.greedy)(&t, None), union_oracle_tallies(&t), f1_single_tallies(&t))
        else {
            errors += 1;
            continue;
        };
        let recomputed = t.union_report(&g.labels).f1;
        if g.score > o.score + EXACT || (recomputed - g.score).abs() > EXACT {
            above_oracle += 1;
        }
        if g.score + EXACT < single.f1 {
            below_single += 1;
        }
        if g.score + EXACT >= o.score {
            equal += 1;
        }
    }
    let rate = equal as f64 / CASES as f64;
    CheckResult {
        name: "greedy vs oracle",
        passed: above_oracle == 0 && below_single == 0 && errors == 0 && rate >= ORACLE_AGREEMENT_MIN,
        detail: format!(
            "{CASES} partitions: agreement {:.1}%, {above_oracle} above oracle, {below_single} below single, {errors} errors",
            100.0 * rate
        ),
    }
}

pub fn run_selftest(subject: &Subject) -> SelftestReport {
    SelftestReport {
        checks: vec![
            toy(subject),
            pathology(subject),
            extremes(),
            equilibria(subject),
            greedy_vs_oracle(subject),
        ],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_build_passes() {
        let report = run_selftest(&Subject::default());
        assert!(report.passed(), "{report}");
        assert_eq!(report.checks.len(), 5);
    }

    #[test]
    fn flipped_potential_is_caught() {
        fn flipped(v: CommunityView, r: Resolution) -> f64 {
            -potential(v, r)
        }
        let report = run_selftest(&Subject {
            potential: flipped,
            ..Subject::default()
        });
        let eq = report.checks.iter().find(|c| c.name == "equilibria").unwrap();
        assert!(!eq.passed, "{}", eq.detail);
        assert!(!report.passed());
    }
}
