//! Exhaustive mapper for small instances.
//!
//! Enumerates every complete assignment (and optionally every commitment
//! order), evaluates each with the same cost model and locality passes as the
//! heuristic mapper, and returns the fastest.

use crate::error::{Error, Result};
use crate::graph::ModelGraph;
use crate::mapper::evaluate_assignment;
use crate::schedule::{full_schedule, Instance, MappingState, Schedule};

pub const DEFAULT_BUDGET: u128 = 1_000_000;

#[derive(Debug, Clone, Copy)]
pub struct OracleOptions {
    /// Run weight pinning and activation fusion on every candidate.
    pub with_locality: bool,
    pub max_candidates: u128,
    /// Also enumerate every topological commitment order (factorial blow-up).
    pub enumerate_orderings: bool,
}

impl Default for OracleOptions {
    fn default() -> Self {
        OracleOptions {
            with_locality: true,
            max_candidates: DEFAULT_BUDGET,
            enumerate_orderings: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct OracleResult {
    /// Accelerator index per layer (layers in id order).
    pub assignment: Vec<usize>,
    pub state: MappingState,
    pub schedule: Schedule,
    pub latency: f64,
    pub evaluated: u128,
}

/// Number of assignments: product of eligible-accelerator counts.
pub fn assignment_count(inst: &Instance) -> u128 {
    (0..inst.graph.len())
        .map(|l| inst.eligible(l).len() as u128)
        .try_fold(1u128, |acc, k| acc.checked_mul(k))
        .unwrap_or(u128::MAX)
}

/// The commitment order used by the mapper: frontier groups in turn, ids ascending within a group.
pub fn commitment_order(g: &ModelGraph) -> Vec<usize> {
    g.frontier_groups().concat()
}

/// All topological orders, stopping early once more than `limit` are found.
pub fn linear_extensions(g: &ModelGraph, limit: u128) -> Vec<Vec<usize>> {
    fn rec(g: &ModelGraph, indeg: &mut [usize], prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>, limit: u128) {
        if out.len() as u128 > limit {
            return;
        }
        if prefix.len() == g.len() {
            out.push(prefix.clone());
            return;
        }
        for v in 0..g.len() {
            if indeg[v] == 0 && !prefix.contains(&v) {
                for &(w, _) in g.succs(v) {
                    indeg[w] -= 1;
                }
                prefix.push(v);
                rec(g, indeg, prefix, out, limit);
                prefix.pop();
                for &(w, _) in g.succs(v) {
                    indeg[w] += 1;
                }
            }
        }
    }
    let mut indeg: Vec<usize> = (0..g.len()).map(|v| g.preds(v).len()).collect();
    let mut out = Vec::new();
    rec(g, &mut indeg, &mut Vec::new(), &mut out, limit);
    out
}

fn build(inst: &Instance, order: &[usize], assignment: &[usize]) -> MappingState {
    let mut m = MappingState::empty(inst);
    for &l in order {
        m.commit(l, assignment[l]);
    }
    m
}

/// Exhaustive search. Ties keep the lexicographically smallest assignment
/// vector (then the earliest commitment order).
pub fn exhaustive_map(inst: &Instance, opts: OracleOptions) -> Result<OracleResult> {
    let g = inst.graph;
    let assignments = assignment_count(inst);
    let orders = if opts.enumerate_orderings {
        let per = opts.max_candidates / assignments.max(1);
        let found = linear_extensions(g, per);
        let total = assignments.saturating_mul(found.len() as u128);
        if found.len() as u128 > per || total > opts.max_candidates {
            return Err(Error::BudgetExceeded {
                candidates: total,
                budget: opts.max_candidates,
            });
        }
        found
    } else {
        if assignments > opts.max_candidates {
            return Err(Error::BudgetExceeded {
                candidates: assignments,
                budget: opts.max_candidates,
            });
        }
        vec![commitment_order(g)]
    };

    let choices: Vec<&[usize]> = (0..g.len()).map(|l| inst.eligible(l)).collect();
    let mut digits = vec![0usize; g.len()];
    let mut assignment = vec![0usize; g.len()];
    let mut best: Option<(f64, Vec<usize>, MappingState, Schedule)> = None;
    let mut evaluated = 0u128;
    'outer: loop {
        for (l, &d) in digits.iter().enumerate() {
            assignment[l] = choices[l][d];
        }
        for order in &orders {
            let m = build(inst, order, &assignment);
            let (m, s) = if opts.with_locality {
                evaluate_assignment(inst, &m)?
            } else {
                let s = full_schedule(inst, &m)?;
                (m, s)
            };
            evaluated += 1;
            if best.as_ref().is_none_or(|b| s.sys_latency < b.0) {
                best = Some((s.sys_latency, assignment.clone(), m, s));
            }
        }
        let mut j = g.len();
        loop {
            if j == 0 {
                break 'outer;
            }
            j -= 1;
            digits[j] += 1;
            if digits[j] < choices[j].len() {
                break;
            }
            digits[j] = 0;
        }
    }
    let (latency, assignment, state, schedule) = best.expect("at least one candidate");
    Ok(OracleResult {
        assignment,
        state,
        schedule,
        latency,
        evaluated,
    })
}
