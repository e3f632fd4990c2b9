//! Randomized-shortest-path machinery: the killed random walk, its
//! fundamental matrix, and the closed-form batch computation of the RSP
//! dissimilarity and the free energy distance for all node pairs at once.
//!
//! Everything is driven by one inverse-temperature parameter `beta`. Large
//! `beta` concentrates the walk on cheap paths (shortest-path regime), small
//! `beta` approaches the natural random walk (commute-time regime).

use nalgebra::DMatrix;

use crate::dist::{finish_distance, DistanceMatrix, Method, Params};
use crate::error::{Error, Result};
use crate::graph::{transition_matrix, CostedGraph};
use crate::matrix::frobenius;

/// Largest allowed beta * cost on any edge. Beyond this the per-step factor
/// exp(-beta c) underflows and paths silently vanish from the walk, so we
/// refuse rather than clamp.
pub const MAX_BETA_COST: f64 = 700.0;

/// Batch state for one `(graph, beta)` pair: the substochastic killed-walk
/// matrix `W`, its fundamental matrix `Z = (I - W)^-1`, the hitting
/// partition-function matrix `Zh` with `zh[s][t] = z[s][t] / z[t][t]`, the
/// non-hitting expected-cost matrix `S`, and the directed expected hitting
/// costs derived from them.
#[derive(Debug, Clone)]
pub struct RspCore {
    beta: f64,
    w: DMatrix<f64>,
    z: DMatrix<f64>,
    zh: DMatrix<f64>,
    s: DMatrix<f64>,
    cbar: DMatrix<f64>,
}

/// Build the batch state for a connected graph at inverse temperature `beta`.
///
/// One LU factorization of `I - W` is reused for every column of `Z`; the
/// solve residual is checked before anything downstream is computed.
pub fn build_core(g: &CostedGraph, beta: f64) -> Result<RspCore> {
    if !g.is_connected() {
        return Err(Error::Disconnected);
    }
    if !beta.is_finite() || beta <= 0.0 {
        return Err(Error::ParamOutOfRange {
            name: "beta",
            value: beta,
            expected: "beta > 0",
        });
    }
    let max_beta_cost = g
        .edges()
        .iter()
        .map(|e| beta * e.cost)
        .fold(0.0f64, f64::max);
    if max_beta_cost > MAX_BETA_COST {
        return Err(Error::BetaTooLarge(max_beta_cost));
    }

    let n = g.node_count();
    let p = transition_matrix(g)?;
    let c = g.cost_matrix();
    let mut w = DMatrix::zeros(n, n);
    for i in 0..n {
        for &(j, _, cost) in g.neighbors(i) {
            w[(i, j)] = p.matrix()[(i, j)] * (-beta * cost).exp();
        }
    }

    let identity = DMatrix::<f64>::identity(n, n);
    let i_minus_w = &identity - &w;
    let lu = i_minus_w.clone().lu();
    let z = lu
        .solve(&identity)
        .ok_or_else(|| Error::SingularSystem("I - W is not invertible".into()))?;
    let residual = frobenius(&(&i_minus_w * &z - &identity)) / (n as f64).sqrt();
    if !(residual.is_finite() && residual <= 1e-8) {
        return Err(Error::SingularSystem(format!(
            "solve residual {residual:.3e} exceeds 1e-8"
        )));
    }
    for s in 0..n {
        for t in 0..n {
            if !(z[(s, t)].is_finite() && z[(s, t)] > 0.0) {
                return Err(Error::UnderflowZ {
                    s,
                    t,
                    value: z[(s, t)],
                });
            }
        }
    }

    let mut zh = z.clone();
    for t in 0..n {
        let ztt = z[(t, t)];
        for s in 0..n {
            zh[(s, t)] /= ztt;
        }
        zh[(t, t)] = 1.0;
    }

    let cw = c.component_mul(&w);
    let numer = &z * cw * &z;
    let s_mat = numer.component_div(&z);
    let mut cbar = s_mat.clone();
    for t in 0..n {
        let stt = s_mat[(t, t)];
        for s in 0..n {
            cbar[(s, t)] -= stt;
        }
    }

    Ok(RspCore {
        beta,
        w,
        z,
        zh,
        s: s_mat,
        cbar,
    })
}

impl RspCore {
    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn n(&self) -> usize {
        self.w.nrows()
    }

    pub fn w(&self) -> &DMatrix<f64> {
        &self.w
    }

    pub fn z(&self) -> &DMatrix<f64> {
        &self.z
    }

    /// Hitting partition functions: `zh[s][t]` is the probability-like mass
    /// of the killed walk reaching `t` from `s` before dying. Diagonal is
    /// exactly 1 (zero-length paths are included).
    pub fn zh(&self) -> &DMatrix<f64> {
        &self.zh
    }

    /// Expected costs of the non-hitting killed walk.
    pub fn s_matrix(&self) -> &DMatrix<f64> {
        &self.s
    }

    /// Directed expected costs of hitting walks, `cbar[s][t]` for s -> t.
    pub fn expected_costs(&self) -> &DMatrix<f64> {
        &self.cbar
    }

    /// The RSP dissimilarity: symmetrized expected hitting cost. A semimetric;
    /// the triangle inequality may fail at intermediate beta.
    pub fn rsp_dissimilarity(&self) -> DistanceMatrix {
        let sym = (&self.cbar + self.cbar.transpose()) * 0.5;
        finish_distance(sym, Method::Rsp, Params::beta(self.beta))
    }

    /// The free energy distance: symmetrized -log(zh)/beta. A graph-geodetic
    /// metric for every beta.
    pub fn free_energy_distance(&self) -> Result<DistanceMatrix> {
        let n = self.n();
        for s in 0..n {
            for t in 0..n {
                if !(self.zh[(s, t)].is_finite() && self.zh[(s, t)] > 0.0) {
                    return Err(Error::UnderflowZ {
                        s,
                        t,
                        value: self.zh[(s, t)],
                    });
                }
            }
        }
        let mut phi = DMatrix::zeros(n, n);
        for s in 0..n {
            for t in 0..n {
                phi[(s, t)] = -self.zh[(s, t)].ln() / self.beta;
            }
        }
        let sym = (&phi + phi.transpose()) * 0.5;
        Ok(finish_distance(sym, Method::Fe, Params::beta(self.beta)))
    }

    /// Relative entropy of the walk's Boltzmann path distribution against the
    /// natural random walk, per source-destination pair:
    /// `J[s][t] = -beta * cbar[s][t] - log zh[s][t]`.
    ///
    /// Uses the un-symmetrized directed expected costs; entries are
    /// nonnegative up to rounding.
    pub fn relative_entropy_matrix(&self) -> DMatrix<f64> {
        let n = self.n();
        let mut j = DMatrix::zeros(n, n);
        for s in 0..n {
            for t in 0..n {
                j[(s, t)] = -self.beta * self.cbar[(s, t)] - self.zh[(s, t)].ln();
            }
        }
        j
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classic::{commute_time, shortest_path};
    use crate::graph::{fixtures, laplacian_pair, CostedGraph};

    #[test]
    fn k2_partition_function_closed_form() {
        for beta in [0.25, 1.0, 4.0] {
            let core = build_core(&fixtures::k2(), beta).unwrap();
            let q = (-beta).exp();
            // hand expansion of the 2x2 inverse
            let z11 = 1.0 / (1.0 - q * q);
            assert!((core.z()[(1, 1)] - z11).abs() < 1e-12 * z11);
            assert!((core.zh()[(0, 1)] - q).abs() < 1e-14);
            assert_eq!(core.zh()[(0, 0)], 1.0);
            assert_eq!(core.zh()[(1, 1)], 1.0);
        }
    }

    #[test]
    fn zh_diagonal_is_one_and_entries_in_unit_interval() {
        for g in [fixtures::ext_triangle(), fixtures::hub_4_3()] {
            for beta in [0.25, 1.0, 4.0] {
                let core = build_core(&g, beta).unwrap();
                for s in 0..g.node_count() {
                    assert_eq!(core.zh()[(s, s)], 1.0);
                    for t in 0..g.node_count() {
                        let v = core.zh()[(s, t)];
                        assert!(v > 0.0 && v <= 1.0, "zh[{s}][{t}] = {v}");
                    }
                }
            }
        }
    }

    #[test]
    fn w_is_substochastic() {
        let core = build_core(&fixtures::hub_4_3(), 0.25).unwrap();
        for i in 0..8 {
            let row: f64 = core.w().row(i).iter().sum();
            assert!(row < 1.0);
        }
    }

    #[test]
    fn k2_rsp_and_fe_are_one_for_every_beta() {
        for beta in [0.01, 0.25, 1.0, 4.0, 50.0] {
            let core = build_core(&fixtures::k2(), beta).unwrap();
            let rsp = core.rsp_dissimilarity();
            let fe = core.free_energy_distance().unwrap();
            assert!((rsp.get(0, 1) - 1.0).abs() < 1e-10, "beta {beta}");
            assert!((fe.get(0, 1) - 1.0).abs() < 1e-10, "beta {beta}");
        }
    }

    #[test]
    fn rsp_matches_sp_at_large_beta() {
        let g = fixtures::ext_triangle();
        let sp = shortest_path(&g).unwrap();
        let rsp = build_core(&g, 20.0).unwrap().rsp_dissimilarity();
        for s in 0..4 {
            for t in 0..4 {
                assert!((rsp.get(s, t) - sp.get(s, t)).abs() < 1e-3);
            }
        }
    }

    #[test]
    fn rsp_proportional_to_ct_at_small_beta() {
        let g = fixtures::ext_triangle();
        let ct = commute_time(&laplacian_pair(&g).unwrap());
        let rsp = build_core(&g, 1e-6).unwrap().rsp_dissimilarity();
        let mut ratios = Vec::new();
        for s in 0..4 {
            for t in 0..4 {
                if s != t {
                    ratios.push(rsp.get(s, t) / ct.get(s, t));
                }
            }
        }
        let mean: f64 = ratios.iter().sum::<f64>() / ratios.len() as f64;
        for r in ratios {
            assert!((r - mean).abs() / mean < 1e-4);
        }
    }

    #[test]
    fn fe_is_half_ct_at_small_beta_on_unit_costs() {
        let g = fixtures::ext_triangle();
        let ct = commute_time(&laplacian_pair(&g).unwrap());
        let fe = build_core(&g, 1e-6)
            .unwrap()
            .free_energy_distance()
            .unwrap();
        for s in 0..4 {
            for t in 0..4 {
                if s != t {
                    let rel = (fe.get(s, t) / (ct.get(s, t) / 2.0) - 1.0).abs();
                    assert!(rel < 1e-3, "pair ({s},{t}) off by {rel}");
                }
            }
        }
    }

    #[test]
    fn relative_entropy_nonnegative_and_zero_on_k2() {
        for beta in [0.25, 1.0, 4.0] {
            let core = build_core(&fixtures::k2(), beta).unwrap();
            let j = core.relative_entropy_matrix();
            assert!(j[(0, 1)].abs() < 1e-12);
        }
        let core = build_core(&fixtures::hub_4_3(), 1.0).unwrap();
        let j = core.relative_entropy_matrix();
        for v in j.iter() {
            assert!(*v >= -1e-9);
        }
    }

    #[test]
    fn free_energy_decomposition_identity() {
        // phi = cbar + J / beta, entry by entry
        let beta = 1.0;
        let core = build_core(&fixtures::ext_triangle(), beta).unwrap();
        let j = core.relative_entropy_matrix();
        for s in 0..4 {
            for t in 0..4 {
                let phi = -core.zh()[(s, t)].ln() / beta;
                let rhs = core.expected_costs()[(s, t)] + j[(s, t)] / beta;
                assert!((phi - rhs).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn beta_guard_trips() {
        let g = CostedGraph::new(2, &[(0, 1, 1.0, 10.0)]).unwrap();
        assert!(matches!(build_core(&g, 100.0), Err(Error::BetaTooLarge(_))));
        assert!(matches!(
            build_core(&fixtures::k2(), -1.0),
            Err(Error::ParamOutOfRange { .. })
        ));
    }

    #[test]
    fn disconnected_rejected() {
        let g = CostedGraph::new(4, &[(0, 1, 1.0, 1.0), (2, 3, 1.0, 1.0)]).unwrap();
        assert!(matches!(build_core(&g, 1.0), Err(Error::Disconnected)));
    }

    #[test]
    fn rsp_triangle_inequality_genuinely_fails_somewhere() {
        // Direct expensive edge plus three cheap parallel two-hop detours:
        // the symmetrized expected cost between the endpoints overshoots the
        // sum through a middle node by a solid margin at moderate beta.
        let mut edges = vec![(0usize, 1usize, 1.0, 2.2)];
        for t in 0..3usize {
            edges.push((0, 2 + t, 1.0, 1.0));
            edges.push((1, 2 + t, 1.0, 1.0));
        }
        let g = CostedGraph::new(5, &edges).unwrap();
        let rsp = build_core(&g, 3.0).unwrap().rsp_dissimilarity();
        assert!(
            rsp.max_triangle_violation() > 0.01,
            "expected a genuine semimetric violation, got {}",
            rsp.max_triangle_violation()
        );
        // while the free energy distance stays metric on the same graph
        let fe = build_core(&g, 3.0).unwrap().free_energy_distance().unwrap();
        assert!(fe.max_triangle_violation() <= 1e-9);
    }

    #[test]
    fn diagonals_exactly_zero() {
        let core = build_core(&fixtures::hub_4_3(), 0.7).unwrap();
        let rsp = core.rsp_dissimilarity();
        let fe = core.free_energy_distance().unwrap();
        for i in 0..8 {
            assert_eq!(rsp.get(i, i), 0.0);
            assert_eq!(fe.get(i, i), 0.0);
        }
    }
}
