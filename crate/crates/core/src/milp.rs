//! LP-relaxation branch-and-bound over binary variables.
//!
//! Nodes are explored best-first by their LP bound. Branching picks the most
//! fractional binary, lowest index on ties, and the search is deterministic.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::{solve_lp, LpProblem, LpSolution, LpStatus, Sense};

pub const TOL_INT: f64 = 1e-6;
/// Nodes whose bound is not better than the incumbent by this much are pruned.
pub const TOL_PRUNE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MilpProblem {
    pub base: LpProblem,
    pub binary_vars: Vec<usize>,
}

impl MilpProblem {
    pub fn check(&self) -> Result<()> {
        self.base.check()?;
        let n = self.base.n_vars();
        for &j in &self.binary_vars {
            if j >= n {
                return Err(Error::Index { index: j, len: n });
            }
            let (lo, hi) = self.base.bounds[j];
            if lo < 0.0 || hi > 1.0 {
                return Err(Error::Config(format!(
                    "binary variable {j} has bounds [{lo}, {hi}] outside [0, 1]"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MilpOptions {
    pub node_limit: usize,
}

impl Default for MilpOptions {
    fn default() -> Self {
        Self {
            node_limit: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct BnbStats {
    pub nodes_explored: usize,
    pub lp_solves: usize,
    /// Seconds.
    pub wall_time: f64,
}

struct Node {
    /// Bound in minimization orientation.
    key: f64,
    seq: usize,
    bounds: Vec<(f64, f64)>,
    solution: LpSolution,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    // BinaryHeap is a max-heap; the smallest key (then oldest node) pops first.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .key
            .total_cmp(&self.key)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

struct Search<'a> {
    problem: &'a MilpProblem,
    orient: f64,
    stats: BnbStats,
}

impl Search<'_> {
    fn relax(&mut self, bounds: &[(f64, f64)]) -> Result<LpSolution> {
        let mut lp = self.problem.base.clone();
        lp.bounds.copy_from_slice(bounds);
        self.stats.lp_solves += 1;
        solve_lp(&lp)
    }

    fn most_fractional(&self, x: &[f64]) -> Option<usize> {
        let mut pick: Option<(usize, f64)> = None;
        for &j in &self.problem.binary_vars {
            let frac = (x[j] - x[j].round()).abs();
            if frac <= TOL_INT {
                continue;
            }
            if pick.is_none_or(|(pj, pf)| frac > pf + 1e-12 || (frac >= pf - 1e-12 && j < pj)) {
                pick = Some((j, frac));
            }
        }
        pick.map(|(j, _)| j)
    }
}

pub fn solve_milp(p: &MilpProblem) -> Result<(LpSolution, BnbStats)> {
    solve_milp_with(p, &MilpOptions::default())
}

pub fn solve_milp_with(p: &MilpProblem, opts: &MilpOptions) -> Result<(LpSolution, BnbStats)> {
    p.check()?;
    let start = Instant::now();
    let mut search = Search {
        problem: p,
        orient: match p.base.sense {
            Sense::Min => 1.0,
            Sense::Max => -1.0,
        },
        stats: BnbStats::default(),
    };

    let mut incumbent: Option<(f64, LpSolution)> = None;
    let mut heap = BinaryHeap::new();
    let mut seq = 0usize;

    let root_bounds = p.base.bounds.clone();
    let root = search.relax(&root_bounds)?;
    search.stats.nodes_explored += 1;
    match root.status {
        LpStatus::Infeasible => {
            search.stats.wall_time = start.elapsed().as_secs_f64();
            return Ok((root, search.stats));
        }
        LpStatus::Unbounded => {
            // Reported as unbounded even if no integer point exists; telling
            // the two apart needs a feasibility search that bounded UC
            // problems never require.
            search.stats.wall_time = start.elapsed().as_secs_f64();
            return Ok((root, search.stats));
        }
        LpStatus::Optimal => {}
    }
    heap.push(Node {
        key: search.orient * root.objective_value,
        seq,
        bounds: root_bounds,
        solution: root,
    });
    seq += 1;

    while let Some(node) = heap.pop() {
        if let Some((best, _)) = &incumbent {
            if node.key >= best - TOL_PRUNE {
                continue;
            }
        }
        let Some(j) = search.most_fractional(&node.solution.x) else {
            // Integral relaxation: re-solve with the binaries pinned for a clean point.
            let mut pinned = node.bounds.clone();
            for &b in &p.binary_vars {
                let v = node.solution.x[b].round().clamp(0.0, 1.0);
                pinned[b] = (v, v);
            }
            let clean = search.relax(&pinned)?;
            let sol = if clean.is_optimal() { clean } else { node.solution };
            let key = search.orient * sol.objective_value;
            if incumbent.as_ref().is_none_or(|(best, _)| key < best - TOL_PRUNE) {
                incumbent = Some((key, sol));
            }
            continue;
        };

        for v in [0.0, 1.0] {
            if search.stats.nodes_explored >= opts.node_limit {
                return Err(Error::NodeLimitExceeded(opts.node_limit));
            }
            let mut bounds = node.bounds.clone();
            bounds[j] = (v, v);
            let child = search.relax(&bounds)?;
            search.stats.nodes_explored += 1;
            if !child.is_optimal() {
                continue;
            }
            let key = search.orient * child.objective_value;
            if let Some((best, _)) = &incumbent {
                if key >= best - TOL_PRUNE {
                    continue;
                }
            }
            heap.push(Node {
                key,
                seq,
                bounds,
                solution: child,
            });
            seq += 1;
        }
    }

    search.stats.wall_time = start.elapsed().as_secs_f64();
    let sol = match incumbent {
        Some((_, sol)) => sol,
        None => LpSolution {
            status: LpStatus::Infeasible,
            x: vec![f64::NAN; p.base.n_vars()],
            objective_value: f64::NAN,
            iterations: 0,
        },
    };
    Ok((sol, search.stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::Relation;

    fn knapsack() -> MilpProblem {
        // max 5a + 4b + 3c s.t. 2a + 3b + c <= 5, 4a + b + 2c <= 11, 3a + 4b + 2c <= 8
        let mut base = LpProblem::new(Sense::Max, vec![5.0, 4.0, 3.0]);
        base.add(vec![2.0, 3.0, 1.0], Relation::Le, 5.0);
        base.add(vec![4.0, 1.0, 2.0], Relation::Le, 11.0);
        base.add(vec![3.0, 4.0, 2.0], Relation::Le, 8.0);
        base.bounds = vec![(0.0, 1.0); 3];
        MilpProblem {
            base,
            binary_vars: vec![0, 1, 2],
        }
    }

    #[test]
    fn binary_knapsack() {
        let (sol, stats) = solve_milp(&knapsack()).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        // a + b + c breaks row 1; a + b is the best feasible pattern.
        assert!((sol.objective_value - 9.0).abs() < 1e-9, "{sol:?}");
        assert!(stats.nodes_explored >= 1);
    }

    #[test]
    fn fixed_binaries_equal_lp() {
        let mut p = knapsack();
        p.base.bounds = vec![(1.0, 1.0), (0.0, 0.0), (1.0, 1.0)];
        let (sol, _) = solve_milp(&p).unwrap();
        let lp = solve_lp(&p.base).unwrap();
        assert_eq!(sol.objective_value, lp.objective_value);
    }

    #[test]
    fn infeasible_integer_set() {
        // 0.4 <= a <= 0.6 has a relaxation point but no binary point.
        let mut base = LpProblem::new(Sense::Min, vec![1.0]);
        base.add(vec![1.0], Relation::Ge, 0.4);
        base.add(vec![1.0], Relation::Le, 0.6);
        base.bounds = vec![(0.0, 1.0)];
        let (sol, _) = solve_milp(&MilpProblem {
            base,
            binary_vars: vec![0],
        })
        .unwrap();
        assert_eq!(sol.status, LpStatus::Infeasible);
    }

    #[test]
    fn node_limit() {
        let opts = MilpOptions { node_limit: 1 };
        assert!(matches!(
            solve_milp_with(&knapsack(), &opts),
            Err(Error::NodeLimitExceeded(1))
        ));
    }

    #[test]
    fn bad_binary_bounds() {
        let mut p = knapsack();
        p.base.bounds[0] = (0.0, 2.0);
        assert!(solve_milp(&p).is_err());
    }
}
