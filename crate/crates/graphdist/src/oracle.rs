//! Brute-force reference implementations: explicit enumeration of hitting
//! walks with certified truncation bounds, and the per-destination rank-one
//! update for the hitting partition functions. These validate the closed-form
//! batch computations on small graphs and back the `oracle-check` command.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::graph::{transition_matrix, CostedGraph};
use crate::rsp::RspCore;

/// Hard cap on the number of enumerated paths.
pub const PATH_CAP: usize = 10_000_000;

/// All hitting walks from a source to a target up to a length cap, stored as
/// flat node sequences with their natural-walk probability and cost.
///
/// A hitting walk may revisit any node except the target, which appears
/// exactly once, at the end. The zero-length walk is included when
/// source == target.
#[derive(Debug, Clone)]
pub struct PathEnsemble {
    source: usize,
    target: usize,
    t_max: usize,
    arena: Vec<u32>,
    paths: Vec<PathRecord>,
}

#[derive(Debug, Clone, Copy)]
struct PathRecord {
    offset: usize,
    len: usize,
    ref_prob: f64,
    cost: f64,
}

impl PathEnsemble {
    pub fn source(&self) -> usize {
        self.source
    }

    pub fn target(&self) -> usize {
        self.target
    }

    pub fn t_max(&self) -> usize {
        self.t_max
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    /// Node sequence, reference probability, and cost of path `i`.
    pub fn path(&self, i: usize) -> (&[u32], f64, f64) {
        let r = &self.paths[i];
        (&self.arena[r.offset..r.offset + r.len], r.ref_prob, r.cost)
    }

    /// Truncated partition function: sum of refProb * exp(-beta cost) over
    /// the enumerated paths. Compare against the closed form with the tail
    /// bound added to the tolerance.
    pub fn partition_function(&self, beta: f64) -> f64 {
        self.paths
            .iter()
            .map(|r| r.ref_prob * (-beta * r.cost).exp())
            .sum()
    }

    /// Expected cost under the Boltzmann distribution restricted to the
    /// enumerated paths.
    pub fn expected_cost(&self, beta: f64) -> Result<f64> {
        if self.paths.is_empty() {
            return Err(Error::DegenerateEnsemble);
        }
        let z = self.partition_function(beta);
        let num: f64 = self
            .paths
            .iter()
            .map(|r| r.ref_prob * (-beta * r.cost).exp() * r.cost)
            .sum();
        Ok(num / z)
    }

    /// Relative entropy of the Boltzmann path distribution against the
    /// natural-walk reference, summed path by path.
    pub fn relative_entropy(&self, beta: f64) -> Result<f64> {
        if self.paths.is_empty() {
            return Err(Error::DegenerateEnsemble);
        }
        let z = self.partition_function(beta);
        let log_z = z.ln();
        let mut j = 0.0;
        for r in &self.paths {
            let p = r.ref_prob * (-beta * r.cost).exp() / z;
            // log(p / ref_prob) = -beta * cost - log z
            j += p * (-beta * r.cost - log_z);
        }
        Ok(j)
    }
}

/// Depth-first enumeration of every hitting walk of length <= `t_max`.
/// Refuses up front (via the counting recurrence) when the ensemble would
/// exceed [`PATH_CAP`] paths.
pub fn enumerate_hitting_paths(
    g: &CostedGraph,
    source: usize,
    target: usize,
    t_max: usize,
) -> Result<PathEnsemble> {
    let n = g.node_count();
    if source >= n {
        return Err(Error::NodeOutOfRange { id: source, n });
    }
    if target >= n {
        return Err(Error::NodeOutOfRange { id: target, n });
    }
    if count_hitting_paths(g, source, target, t_max) > PATH_CAP as u128 {
        return Err(Error::EnsembleTooLarge {
            cap: PATH_CAP,
            t_max,
        });
    }
    let p = transition_matrix(g)?;
    let mut ens = PathEnsemble {
        source,
        target,
        t_max,
        arena: Vec::new(),
        paths: Vec::new(),
    };
    if source == target {
        ens.arena.push(target as u32);
        ens.paths.push(PathRecord {
            offset: 0,
            len: 1,
            ref_prob: 1.0,
            cost: 0.0,
        });
        return Ok(ens);
    }
    let mut stack: Vec<u32> = vec![source as u32];
    dfs(g, p.matrix(), target, t_max, &mut stack, 1.0, 0.0, &mut ens)?;
    Ok(ens)
}

#[allow(clippy::too_many_arguments)]
fn dfs(
    g: &CostedGraph,
    p: &DMatrix<f64>,
    target: usize,
    t_max: usize,
    stack: &mut Vec<u32>,
    ref_prob: f64,
    cost: f64,
    ens: &mut PathEnsemble,
) -> Result<()> {
    let depth = stack.len() - 1;
    if depth >= t_max {
        return Ok(());
    }
    let u = *stack.last().unwrap() as usize;
    for &(v, _, c) in g.neighbors(u) {
        let prob = ref_prob * p[(u, v)];
        if v == target {
            if ens.paths.len() >= PATH_CAP {
                return Err(Error::EnsembleTooLarge {
                    cap: PATH_CAP,
                    t_max,
                });
            }
            let offset = ens.arena.len();
            ens.arena.extend_from_slice(stack);
            ens.arena.push(v as u32);
            ens.paths.push(PathRecord {
                offset,
                len: stack.len() + 1,
                ref_prob: prob,
                cost: cost + c,
            });
        } else {
            stack.push(v as u32);
            dfs(g, p, target, t_max, stack, prob, cost + c, ens)?;
            stack.pop();
        }
    }
    Ok(())
}

/// Number of hitting walks from `source` to `target` of length <= `t_max`,
/// saturating at `u128::MAX`. Used to budget enumeration before running it.
pub fn count_hitting_paths(g: &CostedGraph, source: usize, target: usize, t_max: usize) -> u128 {
    let n = g.node_count();
    if source == target {
        return 1;
    }
    // walk counts over the graph with the target removed, stepped once into it
    let mut current = vec![0u128; n];
    current[source] = 1;
    let mut total: u128 = 0;
    for _ in 1..=t_max {
        for (u, cu) in current.iter().enumerate() {
            if u != target && *cu > 0 && g.neighbors(u).iter().any(|&(v, _, _)| v == target) {
                total = total.saturating_add(*cu);
            }
        }
        let mut next = vec![0u128; n];
        for (u, cu) in current.iter().enumerate() {
            if u == target || *cu == 0 {
                continue;
            }
            for &(v, _, _) in g.neighbors(u) {
                if v != target {
                    next[v] = next[v].saturating_add(*cu);
                }
            }
        }
        current = next;
    }
    total
}

/// Largest `t_max <= hard_cap` whose enumeration stays within `budget` paths.
pub fn max_length_within_budget(
    g: &CostedGraph,
    source: usize,
    target: usize,
    budget: u128,
    hard_cap: usize,
) -> usize {
    let mut best = 1;
    for t in 1..=hard_cap {
        if count_hitting_paths(g, source, target, t) <= budget {
            best = t;
        } else {
            break;
        }
    }
    best
}

/// Rigorous overestimates of the path mass omitted by truncating at `t_max`.
#[derive(Debug, Clone, Copy)]
pub struct TailBounds {
    /// Bound on the partition-function mass of walks longer than `t_max`.
    pub mass: f64,
    /// Bound on the length-weighted mass sum_{tau > t_max} tau * mass(tau);
    /// multiply by the maximum edge cost to bound the omitted cost sum.
    pub weighted: f64,
}

/// Tail bounds for the killed walk absorbed at `target`, truncated at `t_max`.
///
/// With `Wh` the killed-walk matrix whose target row is zeroed, the omitted
/// mass from `source` is bounded by `[Wh^(T+1) (I - Wh)^-1 e]_source` and the
/// length-weighted analogue follows from the geometric series.
pub fn tail_bounds(
    g: &CostedGraph,
    beta: f64,
    source: usize,
    target: usize,
    t_max: usize,
) -> Result<TailBounds> {
    let n = g.node_count();
    let core = crate::rsp::build_core(g, beta)?;
    let mut wh = core.w().clone();
    for j in 0..n {
        wh[(target, j)] = 0.0;
    }
    let identity = DMatrix::<f64>::identity(n, n);
    let lu = (&identity - &wh).lu();
    let ones = DVector::from_element(n, 1.0);
    let e1 = lu
        .solve(&ones)
        .ok_or_else(|| Error::SingularSystem("I - Wh".into()))?;
    let e2 = lu
        .solve(&e1)
        .ok_or_else(|| Error::SingularSystem("I - Wh".into()))?;

    let mut mass_vec = e1.clone();
    let mut weighted_vec = &e1 * ((t_max + 1) as f64) + &wh * &e2;
    for _ in 0..=t_max {
        mass_vec = &wh * mass_vec;
        weighted_vec = &wh * weighted_vec;
    }
    Ok(TailBounds {
        mass: mass_vec[source],
        weighted: weighted_vec[source],
    })
}

/// Hitting partition functions toward one destination via the rank-one
/// update of the fundamental matrix, returned as the column `zh[., t]`.
///
/// This is the looping per-destination route; agreement with the diagonal
/// collapse used by [`RspCore`] is an executable proof of that shortcut.
pub fn sherman_morrison_zh(g: &CostedGraph, beta: f64, target: usize) -> Result<DVector<f64>> {
    if !g.is_connected() {
        return Err(Error::Disconnected);
    }
    let n = g.node_count();
    let p = transition_matrix(g)?;
    let mut w = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for &(j, _, cost) in g.neighbors(i) {
            w[(i, j)] = p.matrix()[(i, j)] * (-beta * cost).exp();
        }
    }
    let identity = DMatrix::<f64>::identity(n, n);
    let z = (&identity - &w)
        .clone()
        .lu()
        .solve(&identity)
        .ok_or_else(|| Error::SingularSystem("I - W".into()))?;
    let wt = w.row(target).transpose();
    let z_et = z.column(target).clone_owned();
    let wt_z = z.transpose() * &wt;
    let denom = 1.0 + wt_z[target];
    // column t of Z - Z e_t wt^T Z / denom
    let mut col = DVector::zeros(n);
    for s in 0..n {
        col[s] = z[(s, target)] - z_et[s] * wt_z[target] / denom;
    }
    Ok(col)
}

/// Convenience wrapper: compare the closed-form `zh` column against the
/// enumeration oracle and the rank-one route for one pair, as used by the
/// `oracle-check` command.
#[derive(Debug, Clone, Copy)]
pub struct PairCheck {
    pub source: usize,
    pub target: usize,
    pub closed_form: f64,
    pub oracle: f64,
    pub tail_bound: f64,
    pub diff: f64,
}

pub fn check_pair(
    g: &CostedGraph,
    core: &RspCore,
    source: usize,
    target: usize,
    t_max: usize,
) -> Result<PairCheck> {
    let ens = enumerate_hitting_paths(g, source, target, t_max)?;
    let oracle = ens.partition_function(core.beta());
    let closed = core.zh()[(source, target)];
    let tails = tail_bounds(g, core.beta(), source, target, t_max)?;
    Ok(PairCheck {
        source,
        target,
        closed_form: closed,
        oracle,
        tail_bound: tails.mass,
        diff: (closed - oracle).abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::fixtures;
    use crate::rsp::build_core;

    #[test]
    fn k2_single_path() {
        let ens = enumerate_hitting_paths(&fixtures::k2(), 0, 1, 5).unwrap();
        assert_eq!(ens.len(), 1);
        let (nodes, prob, cost) = ens.path(0);
        assert_eq!(nodes, &[0, 1]);
        assert_eq!(prob, 1.0);
        assert_eq!(cost, 1.0);
        for beta in [0.25, 1.0, 4.0] {
            assert_eq!(ens.partition_function(beta), (-beta).exp());
        }
    }

    #[test]
    fn path3_parity_forced_walks() {
        let ens = enumerate_hitting_paths(&fixtures::path3(), 0, 2, 5).unwrap();
        assert_eq!(ens.len(), 2);
        let seqs: Vec<&[u32]> = (0..2).map(|i| ens.path(i).0).collect();
        assert!(seqs.contains(&&[0u32, 1, 2][..]));
        assert!(seqs.contains(&&[0u32, 1, 0, 1, 2][..]));
    }

    #[test]
    fn zero_length_path_when_source_is_target() {
        let ens = enumerate_hitting_paths(&fixtures::ext_triangle(), 2, 2, 30).unwrap();
        assert_eq!(ens.len(), 1);
        let (nodes, prob, cost) = ens.path(0);
        assert_eq!(nodes, &[2]);
        assert_eq!(prob, 1.0);
        assert_eq!(cost, 0.0);
        assert_eq!(ens.partition_function(1.0), 1.0);
    }

    #[test]
    fn counts_match_enumeration() {
        let g = fixtures::ext_triangle();
        for (s, t) in [(0, 2), (1, 2), (0, 1)] {
            for t_max in [3, 8, 12] {
                let ens = enumerate_hitting_paths(&g, s, t, t_max).unwrap();
                assert_eq!(ens.len() as u128, count_hitting_paths(&g, s, t, t_max));
            }
        }
    }

    #[test]
    fn ext_triangle_partition_function_matches_zh() {
        let g = fixtures::ext_triangle();
        let core = build_core(&g, 1.0).unwrap();
        let ens = enumerate_hitting_paths(&g, 0, 2, 40).unwrap();
        let z = ens.partition_function(1.0);
        assert!((z - core.zh()[(0, 2)]).abs() < 1e-10);
    }

    #[test]
    fn ext_triangle_cost_and_entropy_match_closed_form() {
        let g = fixtures::ext_triangle();
        let core = build_core(&g, 1.0).unwrap();
        let ens = enumerate_hitting_paths(&g, 0, 2, 40).unwrap();
        let cbar = ens.expected_cost(1.0).unwrap();
        let j = ens.relative_entropy(1.0).unwrap();
        assert!((cbar - core.expected_costs()[(0, 2)]).abs() < 1e-8);
        assert!((j - core.relative_entropy_matrix()[(0, 2)]).abs() < 1e-8);
        assert!(j >= 0.0);
    }

    #[test]
    fn k2_expected_cost_and_zero_entropy() {
        let ens = enumerate_hitting_paths(&fixtures::k2(), 0, 1, 5).unwrap();
        for beta in [0.25, 1.0, 4.0] {
            assert_eq!(ens.expected_cost(beta).unwrap(), 1.0);
            assert!(ens.relative_entropy(beta).unwrap().abs() < 1e-15);
        }
    }

    #[test]
    fn derivative_of_log_partition_function_is_expected_cost() {
        let g = fixtures::ext_triangle();
        let ens = enumerate_hitting_paths(&g, 0, 2, 40).unwrap();
        let beta = 1.0;
        let h = 1e-4;
        let fd = -(ens.partition_function(beta + h).ln() - ens.partition_function(beta - h).ln())
            / (2.0 * h);
        let cbar = ens.expected_cost(beta).unwrap();
        assert!((fd - cbar).abs() < 1e-5, "fd {fd} vs cbar {cbar}");
    }

    #[test]
    fn sherman_morrison_agrees_with_batch_zh() {
        for g in [
            fixtures::k2(),
            fixtures::path3(),
            fixtures::ext_triangle(),
            fixtures::hub_4_3(),
        ] {
            let n = g.node_count();
            for beta in [0.25, 1.0, 4.0] {
                let core = build_core(&g, beta).unwrap();
                for t in 0..n {
                    let col = sherman_morrison_zh(&g, beta, t).unwrap();
                    assert!((col[t] - 1.0).abs() < 1e-10);
                    for s in 0..n {
                        assert!(
                            (col[s] - core.zh()[(s, t)]).abs() < 1e-10,
                            "pair ({s},{t}) beta {beta}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn sherman_morrison_k2_column() {
        let beta = 0.7;
        let col = sherman_morrison_zh(&fixtures::k2(), beta, 1).unwrap();
        assert!((col[0] - (-beta).exp()).abs() < 1e-14);
        assert!((col[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn tail_bound_certifies_truncation() {
        let g = fixtures::ext_triangle();
        let core = build_core(&g, 0.25).unwrap();
        for t_max in [10, 20, 40] {
            let ens = enumerate_hitting_paths(&g, 0, 2, t_max).unwrap();
            let z = ens.partition_function(0.25);
            let tails = tail_bounds(&g, 0.25, 0, 2, t_max).unwrap();
            let diff = (core.zh()[(0, 2)] - z).abs();
            assert!(
                diff <= tails.mass + 1e-12,
                "t_max {t_max}: diff {diff} > bound {}",
                tails.mass
            );
        }
    }

    #[test]
    fn budget_helper_stays_under_budget() {
        let g = fixtures::hub_4_3();
        let t = max_length_within_budget(&g, 0, 5, 100_000, 40);
        assert!(count_hitting_paths(&g, 0, 5, t) <= 100_000);
        assert!(count_hitting_paths(&g, 0, 5, t + 1) > 100_000);
    }

    #[test]
    fn oversized_ensembles_are_rejected_up_front() {
        let g = fixtures::hub_4_3();
        assert!(matches!(
            enumerate_hitting_paths(&g, 0, 5, 40),
            Err(Error::EnsembleTooLarge { .. })
        ));
    }
}
