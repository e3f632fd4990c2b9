//! The classic distances: shortest path (weighted and hop count), commute
//! time, commute cost, resistance, and the convex shortest-path/resistance
//! combination used as a baseline.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use nalgebra::DMatrix;
use ordered_float::OrderedFloat;

use crate::dist::{finish_distance, DistanceMatrix, Method, Params};
use crate::error::{Error, Result};
use crate::graph::{CostedGraph, LaplacianPair};

/// All-pairs minimal path cost over the edge costs, one Dijkstra run per source.
pub fn shortest_path(g: &CostedGraph) -> Result<DistanceMatrix> {
    if !g.is_connected() {
        return Err(Error::Disconnected);
    }
    let n = g.node_count();
    let mut out = DMatrix::zeros(n, n);
    for s in 0..n {
        let dist = dijkstra(g, s);
        for t in 0..n {
            out[(s, t)] = dist[t];
        }
    }
    Ok(finish_distance(out, Method::Sp, Params::default()))
}

/// All-pairs minimal path length in hops, ignoring costs.
pub fn shortest_path_unweighted(g: &CostedGraph) -> Result<DistanceMatrix> {
    if !g.is_connected() {
        return Err(Error::Disconnected);
    }
    let n = g.node_count();
    let mut out = DMatrix::zeros(n, n);
    for s in 0..n {
        let mut dist = vec![usize::MAX; n];
        dist[s] = 0;
        let mut queue = std::collections::VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for &(v, _, _) in g.neighbors(u) {
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        for t in 0..n {
            out[(s, t)] = dist[t] as f64;
        }
    }
    Ok(finish_distance(out, Method::Spu, Params::default()))
}

fn dijkstra(g: &CostedGraph, source: usize) -> Vec<f64> {
    let n = g.node_count();
    let mut dist = vec![f64::INFINITY; n];
    dist[source] = 0.0;
    let mut heap = BinaryHeap::new();
    heap.push(Reverse((OrderedFloat(0.0), source)));
    while let Some(Reverse((OrderedFloat(d), u))) = heap.pop() {
        if d > dist[u] {
            continue;
        }
        for &(v, _, c) in g.neighbors(u) {
            let nd = d + c;
            if nd < dist[v] {
                dist[v] = nd;
                heap.push(Reverse((OrderedFloat(nd), v)));
            }
        }
    }
    dist
}

fn gram_distance(lp: &LaplacianPair, scale: f64, method: Method) -> DistanceMatrix {
    let n = lp.lplus.nrows();
    let mut out = DMatrix::zeros(n, n);
    for s in 0..n {
        for t in 0..n {
            out[(s, t)] = (lp.lplus[(s, s)] + lp.lplus[(t, t)] - 2.0 * lp.lplus[(s, t)]) * scale;
        }
    }
    finish_distance(out, method, Params::default())
}

/// Commute time distance: (l+_ss + l+_tt - 2 l+_st) times the affinity volume.
pub fn commute_time(lp: &LaplacianPair) -> DistanceMatrix {
    gram_distance(lp, lp.volume, Method::Ct)
}

/// Commute cost distance: same quadratic form scaled by the cost volume
/// e^T (A o C) e, so it is the commute time up to the constant factor
/// cost_volume / volume.
pub fn commute_cost(lp: &LaplacianPair) -> DistanceMatrix {
    gram_distance(lp, lp.cost_volume, Method::Cc)
}

/// Effective resistance: commute time divided by the volume.
pub fn resistance(lp: &LaplacianPair) -> DistanceMatrix {
    gram_distance(lp, 1.0, Method::Res)
}

/// Convex combination lambda * SP + (1 - lambda) * resistance.
///
/// The resistance endpoint is used rather than raw commute time so both terms
/// live on the same scale.
pub fn spct_combination(g: &CostedGraph, lambda: f64) -> Result<DistanceMatrix> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::ParamOutOfRange {
            name: "lambda",
            value: lambda,
            expected: "0 <= lambda <= 1",
        });
    }
    let sp = shortest_path(g)?;
    let lp = crate::graph::laplacian_pair(g)?;
    let res = resistance(&lp);
    let vals = sp.matrix() * lambda + res.matrix() * (1.0 - lambda);
    Ok(finish_distance(vals, Method::Spct, Params::lambda(lambda)))
}
