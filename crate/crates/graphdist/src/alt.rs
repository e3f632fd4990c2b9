//! The two surveyed competitor families: the logarithmic forest distance
//! (elementwise log of the regularized Laplacian inverse) and the flow-based
//! p-resistance (minimum sum of r |i|^p over unit flows).

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::dist::{finish_distance, DistanceMatrix, Method, Params};
use crate::error::{Error, Result};
use crate::graph::CostedGraph;

/// Default cap on the node count for all-pairs p-resistance; each pair is a
/// separate convex program, so this grows fast.
pub const PRES_DEFAULT_CAP: usize = 200;

/// Default stopping tolerance for the flow solver (gradient two-norm).
pub const PRES_DEFAULT_TOL: f64 = 1e-9;

/// Logarithmic forest distance with accessibility parameter `alpha` and
/// scale `gamma` (conventionally 1).
///
/// Works on affinities only; edge costs play no role in this family.
pub fn log_forest(g: &CostedGraph, alpha: f64, gamma: f64) -> Result<DistanceMatrix> {
    if !alpha.is_finite() || alpha <= 0.0 {
        return Err(Error::ParamOutOfRange {
            name: "alpha",
            value: alpha,
            expected: "alpha > 0",
        });
    }
    if !gamma.is_finite() || gamma <= 0.0 {
        return Err(Error::ParamOutOfRange {
            name: "gamma",
            value: gamma,
            expected: "gamma > 0",
        });
    }
    if !g.is_connected() {
        return Err(Error::Disconnected);
    }
    let n = g.node_count();
    let a = g.affinity_matrix();
    let mut reg = -a * alpha;
    for i in 0..n {
        reg[(i, i)] += 1.0 + alpha * g.degree(i);
    }
    let q = crate::matrix::lu_inverse(&reg, "I + alpha L")?;
    for v in q.iter() {
        if !(v.is_finite() && *v > 0.0) {
            return Err(Error::SingularSystem(
                "forest accessibility matrix lost positivity".into(),
            ));
        }
    }
    // elementwise log base alpha, scaled; the alpha = 1 singularity of
    // (alpha - 1) / ln alpha has limit 1
    let scale = if alpha == 1.0 {
        gamma
    } else {
        gamma * (alpha - 1.0) / alpha.ln()
    };
    let m = q.map(|v| scale * v.ln());
    let mut out = DMatrix::zeros(n, n);
    for s in 0..n {
        for t in 0..n {
            out[(s, t)] = 0.5 * (m[(s, s)] + m[(t, t)]) - m[(s, t)];
        }
    }
    Ok(finish_distance(
        out,
        Method::LogFor,
        Params::alpha_gamma(alpha, gamma),
    ))
}

/// A unit flow from `source` to `target`: one signed current per edge,
/// oriented from the smaller to the larger endpoint as stored in the graph.
#[derive(Debug, Clone)]
pub struct FlowAssignment {
    pub source: usize,
    pub target: usize,
    currents: Vec<f64>,
}

impl FlowAssignment {
    /// Signed current on edge `idx` (positive in the stored u -> v direction).
    pub fn current(&self, idx: usize) -> f64 {
        self.currents[idx]
    }

    pub fn currents(&self) -> &[f64] {
        &self.currents
    }

    /// Flow objective sum_e r_e |i_e|^p with r = cost.
    pub fn objective(&self, g: &CostedGraph, p: f64) -> f64 {
        g.edges()
            .iter()
            .zip(&self.currents)
            .map(|(e, i)| e.cost * i.abs().powf(p))
            .sum()
    }

    /// Worst absolute deviation from flow conservation: net outflow should be
    /// +1 at the source, -1 at the target and 0 elsewhere.
    pub fn kirchhoff_residual(&self, g: &CostedGraph) -> f64 {
        let n = g.node_count();
        let mut net = vec![0.0f64; n];
        for (e, i) in g.edges().iter().zip(&self.currents) {
            net[e.u] += i;
            net[e.v] -= i;
        }
        let mut worst = 0.0f64;
        for (v, flow) in net.iter().enumerate() {
            let expect = if v == self.source {
                1.0
            } else if v == self.target {
                -1.0
            } else {
                0.0
            };
            worst = worst.max((flow - expect).abs());
        }
        worst
    }
}

struct CycleSpace {
    /// Fixed unit flow from source to target along the spanning tree.
    base: Vec<f64>,
    /// One basis circulation per chord as (edge index, sign) pairs.
    cycles: Vec<Vec<(usize, f64)>>,
}

fn cycle_space(g: &CostedGraph, source: usize, target: usize) -> CycleSpace {
    let n = g.node_count();
    let m = g.edge_count();
    let mut edge_of = std::collections::HashMap::new();
    for (idx, e) in g.edges().iter().enumerate() {
        edge_of.insert((e.u, e.v), idx);
    }
    let edge_idx = |a: usize, b: usize| edge_of[&(a.min(b), a.max(b))];

    // BFS spanning tree rooted at 0; neighbor lists are sorted, so the tree
    // and hence the whole parametrization is deterministic.
    let mut parent = vec![usize::MAX; n];
    let mut in_tree = vec![false; m];
    let mut seen = vec![false; n];
    seen[0] = true;
    let mut queue = std::collections::VecDeque::from([0usize]);
    while let Some(u) = queue.pop_front() {
        for &(v, _, _) in g.neighbors(u) {
            if !seen[v] {
                seen[v] = true;
                parent[v] = u;
                in_tree[edge_idx(u, v)] = true;
                queue.push_back(v);
            }
        }
    }

    // unit flow x -> root expressed on tree edges
    let flow_to_root = |x: usize, out: &mut Vec<f64>, scale: f64| {
        let mut v = x;
        while parent[v] != usize::MAX {
            let pu = parent[v];
            let idx = edge_idx(v, pu);
            let sign = if g.edges()[idx].u == v { 1.0 } else { -1.0 };
            out[idx] += scale * sign;
            v = pu;
        }
    };

    let mut base = vec![0.0; m];
    flow_to_root(source, &mut base, 1.0);
    flow_to_root(target, &mut base, -1.0);

    let mut cycles = Vec::new();
    for (idx, e) in g.edges().iter().enumerate() {
        if in_tree[idx] {
            continue;
        }
        let mut dense = vec![0.0; m];
        dense[idx] = 1.0;
        // close the loop through the tree: v back to u
        flow_to_root(e.v, &mut dense, 1.0);
        flow_to_root(e.u, &mut dense, -1.0);
        let sparse: Vec<(usize, f64)> = dense
            .iter()
            .enumerate()
            .filter(|(_, &s)| s != 0.0)
            .map(|(i, &s)| (i, s))
            .collect();
        cycles.push(sparse);
    }
    CycleSpace { base, cycles }
}

/// Minimize sum_e r_e |i_e|^p over unit flows from `source` to `target`.
///
/// Flows are parametrized on the cycle space of a spanning tree, which makes
/// conservation implicit and leaves a smooth unconstrained convex problem for
/// p > 1. The |i|^p kink is smoothed as (i^2 + eps^2)^(p/2) with a shrinking
/// eps schedule; each stage is minimized by damped Newton steps with
/// backtracking line search. First-order descent is not enough here: near
/// p = 1 the smoothed Hessian has condition number ~eps^(p-2) on currents the
/// optimum sends to zero, so curvature information is required to reach tight
/// gradient tolerances. p = 1 exactly is answered by Dijkstra.
pub fn p_resistance_pair(
    g: &CostedGraph,
    source: usize,
    target: usize,
    p: f64,
    tol: f64,
) -> Result<(f64, FlowAssignment)> {
    if !(1.0..=2.0).contains(&p) {
        return Err(Error::ParamOutOfRange {
            name: "p",
            value: p,
            expected: "1 <= p <= 2",
        });
    }
    if !g.is_connected() {
        return Err(Error::Disconnected);
    }
    if source == target {
        return Err(Error::ParamOutOfRange {
            name: "target",
            value: target as f64,
            expected: "source != target",
        });
    }

    if p == 1.0 {
        return shortest_path_flow(g, source, target);
    }

    let m = g.edge_count();
    let costs: Vec<f64> = g.edges().iter().map(|e| e.cost).collect();
    let space = cycle_space(g, source, target);
    let k = space.cycles.len();

    let flow = |x: &nalgebra::DVector<f64>, out: &mut Vec<f64>| {
        out.copy_from_slice(&space.base);
        for (j, cyc) in space.cycles.iter().enumerate() {
            for &(e, s) in cyc {
                out[e] += x[j] * s;
            }
        }
    };

    let mut x = nalgebra::DVector::<f64>::zeros(k);
    let mut f = vec![0.0; m];

    if k > 0 {
        let objective = |f: &[f64], eps2: f64| -> f64 {
            f.iter()
                .zip(&costs)
                .map(|(i, r)| r * (i * i + eps2).powf(p / 2.0))
                .sum()
        };
        // dF/dx_j = sum over the cycle of r p i (i^2+eps^2)^(p/2-1) sign
        let gradient = |f: &[f64], eps2: f64, out: &mut nalgebra::DVector<f64>| {
            for (j, cyc) in space.cycles.iter().enumerate() {
                let mut acc = 0.0;
                for &(e, s) in cyc {
                    let i = f[e];
                    acc += s * costs[e] * p * i * (i * i + eps2).powf(p / 2.0 - 1.0);
                }
                out[j] = acc;
            }
        };
        // per-edge second derivative of the smoothed term; positive for p > 1
        let edge_curvature = |i: f64, r: f64, eps2: f64| -> f64 {
            let q = i * i + eps2;
            r * p * q.powf(p / 2.0 - 2.0) * ((p - 1.0) * i * i + eps2)
        };

        // edge -> basis cycles through it, for Hessian assembly
        let mut edge_cycles: Vec<Vec<(usize, f64)>> = vec![Vec::new(); m];
        for (j, cyc) in space.cycles.iter().enumerate() {
            for &(e, s) in cyc {
                edge_cycles[e].push((j, s));
            }
        }

        let mut grad = nalgebra::DVector::<f64>::zeros(k);
        let schedule = [1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8, 1e-9];
        let max_iters = 200usize;
        for (stage, &eps) in schedule.iter().enumerate() {
            let eps2 = eps * eps;
            let final_stage = stage + 1 == schedule.len();
            let stage_tol = if final_stage { tol } else { tol.max(1e-8) };
            flow(&x, &mut f);
            let mut fx = objective(&f, eps2);
            gradient(&f, eps2, &mut grad);
            let mut gnorm = grad.norm();
            let mut iters = 0;
            while gnorm > stage_tol && iters < max_iters {
                iters += 1;
                // Newton system on the cycle space: H = B diag(h) B^T
                let mut h = DMatrix::<f64>::zeros(k, k);
                for (e, touching) in edge_cycles.iter().enumerate() {
                    if touching.is_empty() {
                        continue;
                    }
                    let he = edge_curvature(f[e], costs[e], eps2);
                    for &(j1, s1) in touching {
                        for &(j2, s2) in touching {
                            if j2 >= j1 {
                                h[(j1, j2)] += he * s1 * s2;
                            }
                        }
                    }
                }
                for j1 in 0..k {
                    for j2 in (j1 + 1)..k {
                        h[(j2, j1)] = h[(j1, j2)];
                    }
                }
                let step = match h.clone().cholesky() {
                    Some(chol) => chol.solve(&grad),
                    None => {
                        // fall back to a ridge if curvature rounds to singular
                        for j in 0..k {
                            h[(j, j)] += 1e-12 * (1.0 + h[(j, j)].abs());
                        }
                        h.clone().cholesky().map(|c| c.solve(&grad)).ok_or(
                            Error::SolverNotConverged {
                                grad_norm: gnorm,
                                iters,
                            },
                        )?
                    }
                };
                let descent = grad.dot(&step);
                // Armijo is meaningful only while the predicted decrease is
                // resolvable in f64; past that point line-search tests compare
                // rounding noise and can accept sub-ulp steps forever
                let measurable = descent > 1e2 * f64::EPSILON * (1.0 + fx.abs());
                let mut advanced = false;
                if measurable {
                    let mut alpha = 1.0;
                    for _ in 0..60 {
                        let trial = &x - &step * alpha;
                        if trial == x {
                            break;
                        }
                        flow(&trial, &mut f);
                        let ft = objective(&f, eps2);
                        if ft <= fx - 1e-4 * alpha * descent {
                            x = trial;
                            fx = ft;
                            advanced = true;
                            break;
                        }
                        alpha *= 0.5;
                    }
                }
                if !advanced {
                    // endgame: take the pure Newton step if it at least halves
                    // the gradient (near the optimum it does far better)
                    let trial = &x - &step;
                    flow(&trial, &mut f);
                    let mut gtrial = nalgebra::DVector::<f64>::zeros(k);
                    gradient(&f, eps2, &mut gtrial);
                    if gtrial.norm() <= 0.5 * gnorm {
                        x = trial;
                        grad = gtrial;
                        gnorm = grad.norm();
                        flow(&x, &mut f);
                        fx = objective(&f, eps2);
                        continue;
                    }
                    break;
                }
                flow(&x, &mut f);
                gradient(&f, eps2, &mut grad);
                gnorm = grad.norm();
            }
            if final_stage && gnorm > tol {
                // the representable floor of the gradient scales with the
                // stiffest smoothed curvature; below it the stall is
                // rounding, not lack of convergence
                flow(&x, &mut f);
                let h_max = f
                    .iter()
                    .zip(&costs)
                    .map(|(&i, &r)| edge_curvature(i, r, eps2))
                    .fold(0.0f64, f64::max);
                let floor = 64.0 * f64::EPSILON * (1.0 + h_max);
                if gnorm > floor {
                    return Err(Error::SolverNotConverged {
                        grad_norm: gnorm,
                        iters,
                    });
                }
            }
        }
    }

    flow(&x, &mut f);
    let assignment = FlowAssignment {
        source,
        target,
        currents: f,
    };
    let value = assignment.objective(g, p);
    Ok((value, assignment))
}

/// p = 1 degenerates to the shortest path; route the unit flow along one
/// minimal-cost path found by Dijkstra with deterministic tie-breaking.
fn shortest_path_flow(
    g: &CostedGraph,
    source: usize,
    target: usize,
) -> Result<(f64, FlowAssignment)> {
    use ordered_float::OrderedFloat;
    use std::cmp::Reverse;
    let n = g.node_count();
    let mut dist = vec![f64::INFINITY; n];
    let mut prev = vec![usize::MAX; n];
    dist[source] = 0.0;
    let mut heap = std::collections::BinaryHeap::new();
    heap.push(Reverse((OrderedFloat(0.0), source)));
    while let Some(Reverse((OrderedFloat(d), u))) = heap.pop() {
        if d > dist[u] {
            continue;
        }
        for &(v, _, c) in g.neighbors(u) {
            let nd = d + c;
            if nd < dist[v] {
                dist[v] = nd;
                prev[v] = u;
                heap.push(Reverse((OrderedFloat(nd), v)));
            }
        }
    }
    let mut edge_of = std::collections::HashMap::new();
    for (idx, e) in g.edges().iter().enumerate() {
        edge_of.insert((e.u, e.v), idx);
    }
    let mut currents = vec![0.0; g.edge_count()];
    let mut v = target;
    while v != source {
        let u = prev[v];
        let idx = edge_of[&(u.min(v), u.max(v))];
        currents[idx] += if g.edges()[idx].u == u { 1.0 } else { -1.0 };
        v = u;
    }
    let assignment = FlowAssignment {
        source,
        target,
        currents,
    };
    Ok((dist[target], assignment))
}

/// All-pairs p-resistance matrix; pairs are independent convex programs and
/// run in parallel.
pub fn p_resistance(g: &CostedGraph, p: f64, tol: f64, cap: usize) -> Result<DistanceMatrix> {
    let n = g.node_count();
    if n > cap {
        return Err(Error::GraphTooLarge { n, cap });
    }
    if !g.is_connected() {
        return Err(Error::Disconnected);
    }
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|s| ((s + 1)..n).map(move |t| (s, t)))
        .collect();
    let results: Vec<Result<(usize, usize, f64)>> = pairs
        .par_iter()
        .map(|&(s, t)| p_resistance_pair(g, s, t, p, tol).map(|(v, _)| (s, t, v)))
        .collect();
    let mut out = DMatrix::zeros(n, n);
    for r in results {
        let (s, t, v) = r?;
        out[(s, t)] = v;
        out[(t, s)] = v;
    }
    Ok(finish_distance(out, Method::Pres, Params::p(p)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classic::{resistance, shortest_path};
    use crate::graph::{fixtures, laplacian_pair, CostedGraph};

    #[test]
    fn log_forest_k2_alpha_one() {
        let d = log_forest(&fixtures::k2(), 1.0, 1.0).unwrap();
        assert!((d.get(0, 1) - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn log_forest_rejects_bad_params() {
        assert!(matches!(
            log_forest(&fixtures::k2(), 0.0, 1.0),
            Err(Error::ParamOutOfRange { .. })
        ));
        assert!(matches!(
            log_forest(&fixtures::k2(), 1.0, -2.0),
            Err(Error::ParamOutOfRange { .. })
        ));
    }

    #[test]
    fn log_forest_ct_regime_at_large_alpha() {
        // large alpha: proportional to commute time
        let g = fixtures::ext_triangle();
        let d = log_forest(&g, 500.0, 1.0).unwrap();
        let ct = crate::classic::commute_time(&laplacian_pair(&g).unwrap());
        let mut ratios = Vec::new();
        for s in 0..4 {
            for t in 0..4 {
                if s != t {
                    ratios.push(d.get(s, t) / ct.get(s, t));
                }
            }
        }
        let mean: f64 = ratios.iter().sum::<f64>() / ratios.len() as f64;
        let spread = ratios
            .iter()
            .fold(0.0f64, |acc, r| acc.max((r - mean).abs()))
            / mean;
        assert!(spread < 1e-2, "ratio spread {spread}");
    }

    #[test]
    fn log_forest_hop_rank_order_at_small_alpha() {
        // small alpha: rank order follows the unweighted shortest path
        let g = fixtures::ext_triangle();
        let d = log_forest(&g, 1e-4, 1.0).unwrap();
        let spu = crate::classic::shortest_path_unweighted(&g).unwrap();
        for a in 0..4 {
            for b in 0..4 {
                for c in 0..4 {
                    for e in 0..4 {
                        if a != b && c != e && spu.get(a, b) < spu.get(c, e) {
                            assert!(d.get(a, b) < d.get(c, e));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn log_forest_metric_and_geodetic() {
        let d = log_forest(&fixtures::barbell7(), 1.0, 1.0).unwrap();
        assert!(d.max_triangle_violation() <= 1e-8);
        for s in [0usize, 1, 2] {
            for t in [4usize, 5, 6] {
                let gap = (d.get(s, t) - d.get(s, 3) - d.get(3, t)).abs();
                assert!(gap < 1e-8, "geodetic gap {gap} at ({s},{t})");
            }
        }
    }

    #[test]
    fn pres_pair_extended_triangle() {
        let g = fixtures::ext_triangle();
        let (v2, flow) = p_resistance_pair(&g, 1, 2, 2.0, 1e-9).unwrap();
        assert!((v2 - 2.0 / 3.0).abs() < 1e-6, "p=2 value {v2}");
        // current divider: two thirds on the direct edge, one third via node 3
        for (idx, e) in g.edges().iter().enumerate() {
            let want = match (e.u, e.v) {
                (1, 2) => 2.0 / 3.0,
                (1, 3) => 1.0 / 3.0,
                (2, 3) => -1.0 / 3.0,
                _ => 0.0,
            };
            assert!(
                (flow.current(idx) - want).abs() < 1e-6,
                "edge ({},{}) current {}",
                e.u,
                e.v,
                flow.current(idx)
            );
        }
        assert!(flow.kirchhoff_residual(&g) < 1e-8);

        let (v1, _) = p_resistance_pair(&g, 1, 2, 1.0, 1e-9).unwrap();
        assert_eq!(v1, 1.0);

        let (v15, _) = p_resistance_pair(&g, 1, 2, 1.5, 1e-9).unwrap();
        assert!(v15 < v1 && v15 > v2);
    }

    #[test]
    fn pres_p2_matches_laplacian_currents() {
        let g = fixtures::ext_triangle();
        let lp = laplacian_pair(&g).unwrap();
        let (_, flow) = p_resistance_pair(&g, 0, 2, 2.0, 1e-9).unwrap();
        // solve L v = e_s - e_t and compare i = a (v_u - v_v)
        let n = g.node_count();
        let mut rhs = nalgebra::DVector::zeros(n);
        rhs[0] = 1.0;
        rhs[2] = -1.0;
        let v = &lp.lplus * rhs;
        for (idx, e) in g.edges().iter().enumerate() {
            let want = e.affinity * (v[e.u] - v[e.v]);
            assert!(
                (flow.current(idx) - want).abs() < 1e-6,
                "edge ({},{})",
                e.u,
                e.v
            );
        }
    }

    #[test]
    fn pres_on_tree_equals_path_cost_for_any_p() {
        let g =
            CostedGraph::new(4, &[(0, 1, 1.0, 0.5), (1, 2, 1.0, 2.0), (1, 3, 1.0, 1.0)]).unwrap();
        for p in [1.0, 1.3, 1.7, 2.0] {
            let (v, flow) = p_resistance_pair(&g, 0, 2, p, 1e-9).unwrap();
            assert!((v - 2.5).abs() < 1e-9, "p {p} value {v}");
            assert!(flow.kirchhoff_residual(&g) < 1e-12);
        }
    }

    #[test]
    fn pres_matrix_p2_equals_resistance() {
        let g = fixtures::hub_4_3();
        let d = p_resistance(&g, 2.0, 1e-9, PRES_DEFAULT_CAP).unwrap();
        let r = resistance(&laplacian_pair(&g).unwrap());
        for s in 0..8 {
            for t in 0..8 {
                assert!((d.get(s, t) - r.get(s, t)).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn pres_matrix_p1_equals_sp() {
        let g = fixtures::ext_triangle();
        let d = p_resistance(&g, 1.0, 1e-9, PRES_DEFAULT_CAP).unwrap();
        let sp = shortest_path(&g).unwrap();
        for s in 0..4 {
            for t in 0..4 {
                assert_eq!(d.get(s, t), sp.get(s, t));
            }
        }
    }

    #[test]
    fn pres_cap_enforced() {
        let g = fixtures::hub_4_3();
        assert!(matches!(
            p_resistance(&g, 1.5, 1e-9, 4),
            Err(Error::GraphTooLarge { .. })
        ));
    }

    #[test]
    fn pres_objective_reported_matches_flow() {
        let g = fixtures::hub_4_3();
        let (v, flow) = p_resistance_pair(&g, 0, 5, 1.5, 1e-9).unwrap();
        assert!((v - flow.objective(&g, 1.5)).abs() < 1e-12);
        assert!(flow.kirchhoff_residual(&g) < 1e-8);
    }
}
