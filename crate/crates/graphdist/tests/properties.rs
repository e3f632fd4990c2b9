//! Property tests for the structural invariants: stochasticity, pseudoinverse
//! identities, centering algebra, partition-function ranges, and format
//! round-trips.

use graphdist::analysis;
use graphdist::classic;
use graphdist::dist::{DistanceMatrix, Method, Params};
use graphdist::graph::CostedGraph;
use graphdist::io;
use graphdist::matrix::frobenius;
use graphdist::{build_core, laplacian_pair, transition_matrix};
use nalgebra::DMatrix;
use proptest::prelude::*;

/// Connected weighted graph: a path backbone plus random extra edges.
fn arb_connected_graph() -> impl Strategy<Value = CostedGraph> {
    (2usize..12)
        .prop_flat_map(|n| {
            let backbone = proptest::collection::vec((0.1f64..10.0, 0.1f64..10.0), n - 1);
            let extras = proptest::collection::vec(
                ((0usize..n), (0usize..n), 0.1f64..10.0, 0.1f64..10.0),
                0..2 * n,
            );
            (Just(n), backbone, extras)
        })
        .prop_map(|(n, backbone, extras)| {
            let mut seen = std::collections::HashSet::new();
            let mut edges = Vec::new();
            for (i, (a, c)) in backbone.into_iter().enumerate() {
                seen.insert((i, i + 1));
                edges.push((i, i + 1, a, c));
            }
            for (u, v, a, c) in extras {
                let (u, v) = (u.min(v), u.max(v));
                if u != v && seen.insert((u, v)) {
                    edges.push((u, v, a, c));
                }
            }
            CostedGraph::new(n, &edges).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn transition_rows_are_stochastic(g in arb_connected_graph()) {
        let p = transition_matrix(&g).unwrap();
        for i in 0..g.node_count() {
            let sum: f64 = p.matrix().row(i).iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-12);
            for j in 0..g.node_count() {
                let positive = p.matrix()[(i, j)] > 0.0;
                let adjacent = g.neighbors(i).iter().any(|&(v, _, _)| v == j);
                prop_assert_eq!(positive, adjacent);
            }
        }
    }

    #[test]
    fn pseudoinverse_satisfies_penrose_conditions(g in arb_connected_graph()) {
        let lp = laplacian_pair(&g).unwrap();
        let l = &lp.l;
        let lpl = l * &lp.lplus * l;
        let plp = &lp.lplus * l * &lp.lplus;
        prop_assert!(frobenius(&(lpl - l)) <= 1e-8 * frobenius(l));
        prop_assert!(frobenius(&(plp - &lp.lplus)) <= 1e-8 * frobenius(&lp.lplus));
        let ones = nalgebra::DVector::from_element(g.node_count(), 1.0);
        prop_assert!((&lp.lplus * ones).amax() <= 1e-8);
    }

    #[test]
    fn centering_restores_distances_on_the_diagonal_gap(
        vals in proptest::collection::vec(0.0f64..10.0, 10)
    ) {
        // symmetric zero-diagonal 5x5 from 10 upper entries
        let n = 5;
        let mut d = DMatrix::zeros(n, n);
        let mut it = vals.into_iter();
        for i in 0..n {
            for j in (i + 1)..n {
                let v = it.next().unwrap();
                d[(i, j)] = v;
                d[(j, i)] = v;
            }
        }
        let dm = DistanceMatrix::from_values(d.clone(), Method::Sp, Params::default());
        let k = analysis::center_kernel(&dm);
        for i in 0..n {
            let row: f64 = k.matrix().row(i).iter().sum();
            prop_assert!(row.abs() < 1e-8);
            for j in 0..n {
                let recon = k.matrix()[(i, i)] + k.matrix()[(j, j)] - 2.0 * k.matrix()[(i, j)];
                prop_assert!((recon - d[(i, j)]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn nmi_is_symmetric_and_in_range(
        x in proptest::collection::vec(0usize..4, 12),
        y in proptest::collection::vec(0usize..4, 12),
    ) {
        let a = analysis::nmi(&x, &y);
        let b = analysis::nmi(&y, &x);
        prop_assert_eq!(a, b);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&a));
    }

    #[test]
    fn killed_walk_partition_functions_behave(
        g in arb_connected_graph(),
        beta in 0.05f64..3.0,
    ) {
        // keep the underflow guard quiet for the largest random costs
        prop_assume!(g.edges().iter().all(|e| beta * e.cost < 600.0));
        let core = build_core(&g, beta).unwrap();
        let n = g.node_count();
        for s in 0..n {
            prop_assert_eq!(core.zh()[(s, s)], 1.0);
            for t in 0..n {
                let z = core.zh()[(s, t)];
                prop_assert!(z > 0.0 && z <= 1.0);
            }
        }
        let rsp = core.rsp_dissimilarity();
        let fe = core.free_energy_distance().unwrap();
        for i in 0..n {
            prop_assert_eq!(rsp.get(i, i), 0.0);
            prop_assert_eq!(fe.get(i, i), 0.0);
        }
        prop_assert!(rsp.asymmetry() < 1e-12);
        let j = core.relative_entropy_matrix();
        for v in j.iter() {
            prop_assert!(*v >= -1e-9);
        }
    }

    #[test]
    fn graph_tsv_roundtrip_is_bit_identical(g in arb_connected_graph()) {
        let text = io::graph_to_tsv(&g);
        let back = io::parse_graph(&text, "roundtrip").unwrap();
        prop_assert_eq!(g.edges(), back.edges());
    }

    #[test]
    fn spct_is_monotone_in_lambda_entrywise(g in arb_connected_graph()) {
        let lambdas = [0.0, 0.25, 0.5, 0.75, 1.0];
        let mats: Vec<_> = lambdas
            .iter()
            .map(|&l| classic::spct_combination(&g, l).unwrap())
            .collect();
        let n = g.node_count();
        for s in 0..n {
            for t in 0..n {
                if s == t {
                    continue;
                }
                let sp_end = mats[4].get(s, t);
                let res_end = mats[0].get(s, t);
                for w in mats.windows(2) {
                    let lo = w[0].get(s, t);
                    let hi = w[1].get(s, t);
                    // moves monotonically from the resistance value to the
                    // shortest-path value
                    if sp_end >= res_end {
                        prop_assert!(hi >= lo - 1e-12);
                    } else {
                        prop_assert!(hi <= lo + 1e-12);
                    }
                    let (min, max) = if sp_end >= res_end { (res_end, sp_end) } else { (sp_end, res_end) };
                    prop_assert!(lo >= min - 1e-12 && lo <= max + 1e-12);
                }
            }
        }
    }
}

/// Penrose conditions at the spec's largest scale, deterministic seeds.
#[test]
fn pseudoinverse_penrose_up_to_n50() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(50);
    for trial in 0..5 {
        let n = 10 + trial * 10;
        let mut edges = Vec::new();
        for u in 0..n {
            for v in (u + 1)..n {
                if u + 1 == v || rng.gen::<f64>() < 0.15 {
                    edges.push((u, v, rng.gen_range(0.1..5.0), rng.gen_range(0.1..5.0)));
                }
            }
        }
        let g = CostedGraph::new(n, &edges).unwrap();
        assert!(g.is_connected());
        let lp = laplacian_pair(&g).unwrap();
        let l = &lp.l;
        let lpl = l * &lp.lplus * l;
        assert!(frobenius(&(lpl - l)) <= 1e-8 * frobenius(l), "n = {n}");
    }
}
