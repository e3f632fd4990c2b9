//! Python bindings: the graph type, every distance family, and the main
//! analysis operations, with dense matrices passed as lists of lists.

// the pyfunction macro expansion trips useless_conversion on every signature
#![allow(clippy::useless_conversion)]

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use graphdist::analysis::{self, KernelKind, LabelSet};
use graphdist::{alt, classic, fixtures, io, CostedGraph, Error};

fn pyerr(e: Error) -> PyErr {
    if e.is_numerical() {
        PyRuntimeError::new_err(e.to_string())
    } else {
        PyValueError::new_err(e.to_string())
    }
}

fn to_rows(m: &graphdist::nalgebra::DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

/// Undirected graph with per-edge affinities and costs.
#[pyclass(name = "Graph")]
#[derive(Clone)]
struct PyGraph {
    inner: CostedGraph,
}

#[pymethods]
impl PyGraph {
    /// Build from (u, v, affinity) or (u, v, affinity, cost) tuples; missing
    /// costs default to reciprocal affinities.
    #[new]
    fn new(n: usize, edges: Vec<Py<PyAny>>, py: Python<'_>) -> PyResult<Self> {
        let mut parsed = Vec::with_capacity(edges.len());
        for e in edges {
            let e = e.bind(py);
            if let Ok((u, v, a, c)) = e.extract::<(usize, usize, f64, f64)>() {
                parsed.push((u, v, a, c));
            } else {
                let (u, v, a) = e.extract::<(usize, usize, f64)>()?;
                parsed.push((u, v, a, 1.0 / a));
            }
        }
        Ok(PyGraph {
            inner: CostedGraph::new(n, &parsed).map_err(pyerr)?,
        })
    }

    /// Load an edge-list TSV.
    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(PyGraph {
            inner: io::load_graph(path).map_err(pyerr)?,
        })
    }

    /// One of the built-in fixtures: k2, path-3, ext-triangle, hub-4-3, barbell-7.
    #[staticmethod]
    fn fixture(name: &str) -> PyResult<Self> {
        fixtures::by_name(name)
            .map(|inner| PyGraph { inner })
            .ok_or_else(|| PyValueError::new_err(format!("unknown fixture {name:?}")))
    }

    fn save(&self, path: &str) -> PyResult<()> {
        io::save_graph(&self.inner, path).map_err(pyerr)
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.node_count()
    }

    #[getter]
    fn connected(&self) -> bool {
        self.inner.is_connected()
    }

    fn edges(&self) -> Vec<(usize, usize, f64, f64)> {
        self.inner
            .edges()
            .iter()
            .map(|e| (e.u, e.v, e.affinity, e.cost))
            .collect()
    }

    fn __repr__(&self) -> String {
        format!(
            "Graph(n={}, edges={}, connected={})",
            self.inner.node_count(),
            self.inner.edge_count(),
            self.inner.is_connected()
        )
    }
}

#[pyfunction]
fn shortest_path(g: &PyGraph) -> PyResult<Vec<Vec<f64>>> {
    Ok(to_rows(
        classic::shortest_path(&g.inner).map_err(pyerr)?.matrix(),
    ))
}

#[pyfunction]
fn shortest_path_unweighted(g: &PyGraph) -> PyResult<Vec<Vec<f64>>> {
    Ok(to_rows(
        classic::shortest_path_unweighted(&g.inner)
            .map_err(pyerr)?
            .matrix(),
    ))
}

#[pyfunction]
fn commute_time(g: &PyGraph) -> PyResult<Vec<Vec<f64>>> {
    let lp = graphdist::laplacian_pair(&g.inner).map_err(pyerr)?;
    Ok(to_rows(classic::commute_time(&lp).matrix()))
}

#[pyfunction]
fn commute_cost(g: &PyGraph) -> PyResult<Vec<Vec<f64>>> {
    let lp = graphdist::laplacian_pair(&g.inner).map_err(pyerr)?;
    Ok(to_rows(classic::commute_cost(&lp).matrix()))
}

#[pyfunction]
fn resistance(g: &PyGraph) -> PyResult<Vec<Vec<f64>>> {
    let lp = graphdist::laplacian_pair(&g.inner).map_err(pyerr)?;
    Ok(to_rows(classic::resistance(&lp).matrix()))
}

#[pyfunction]
fn spct_combination(g: &PyGraph, lam: f64) -> PyResult<Vec<Vec<f64>>> {
    Ok(to_rows(
        classic::spct_combination(&g.inner, lam)
            .map_err(pyerr)?
            .matrix(),
    ))
}

#[pyfunction]
fn rsp_dissimilarity(g: &PyGraph, beta: f64) -> PyResult<Vec<Vec<f64>>> {
    let core = graphdist::build_core(&g.inner, beta).map_err(pyerr)?;
    Ok(to_rows(core.rsp_dissimilarity().matrix()))
}

#[pyfunction]
fn free_energy_distance(g: &PyGraph, beta: f64) -> PyResult<Vec<Vec<f64>>> {
    let core = graphdist::build_core(&g.inner, beta).map_err(pyerr)?;
    Ok(to_rows(
        core.free_energy_distance().map_err(pyerr)?.matrix(),
    ))
}

/// Hitting partition functions zh[s][t] of the killed walk at inverse
/// temperature beta.
#[pyfunction]
fn hitting_partition_functions(g: &PyGraph, beta: f64) -> PyResult<Vec<Vec<f64>>> {
    let core = graphdist::build_core(&g.inner, beta).map_err(pyerr)?;
    Ok(to_rows(core.zh()))
}

#[pyfunction]
#[pyo3(signature = (g, alpha, gamma = 1.0))]
fn log_forest(g: &PyGraph, alpha: f64, gamma: f64) -> PyResult<Vec<Vec<f64>>> {
    Ok(to_rows(
        alt::log_forest(&g.inner, alpha, gamma)
            .map_err(pyerr)?
            .matrix(),
    ))
}

#[pyfunction]
#[pyo3(signature = (g, p, tol = alt::PRES_DEFAULT_TOL, cap = alt::PRES_DEFAULT_CAP))]
fn p_resistance(g: &PyGraph, p: f64, tol: f64, cap: usize) -> PyResult<Vec<Vec<f64>>> {
    Ok(to_rows(
        alt::p_resistance(&g.inner, p, tol, cap)
            .map_err(pyerr)?
            .matrix(),
    ))
}

#[pyfunction]
#[pyo3(signature = (g, s, t, p, tol = alt::PRES_DEFAULT_TOL))]
fn p_resistance_pair(
    g: &PyGraph,
    s: usize,
    t: usize,
    p: f64,
    tol: f64,
) -> PyResult<(f64, Vec<f64>)> {
    let (value, flow) = alt::p_resistance_pair(&g.inner, s, t, p, tol).map_err(pyerr)?;
    Ok((value, flow.currents().to_vec()))
}

/// Truncated-enumeration oracle for one pair: (partition function sum,
/// certified tail bound on the omitted mass).
#[pyfunction]
fn oracle_partition_function(
    g: &PyGraph,
    beta: f64,
    s: usize,
    t: usize,
    t_max: usize,
) -> PyResult<(f64, f64)> {
    let ens = graphdist::oracle::enumerate_hitting_paths(&g.inner, s, t, t_max).map_err(pyerr)?;
    let tails = graphdist::oracle::tail_bounds(&g.inner, beta, s, t, t_max).map_err(pyerr)?;
    Ok((ens.partition_function(beta), tails.mass))
}

fn dist_from_rows(rows: Vec<Vec<f64>>) -> PyResult<graphdist::DistanceMatrix> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(PyValueError::new_err("distance matrix must be square"));
    }
    let m = graphdist::nalgebra::DMatrix::from_fn(n, n, |i, j| rows[i][j]);
    Ok(graphdist::DistanceMatrix::from_values(
        m,
        graphdist::Method::Sp,
        Default::default(),
    ))
}

#[pyfunction]
fn center_kernel(distances: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
    let d = dist_from_rows(distances)?;
    Ok(to_rows(analysis::center_kernel(&d).matrix()))
}

#[pyfunction]
fn sigmoid_ct_kernel(g: &PyGraph, a: f64) -> PyResult<Vec<Vec<f64>>> {
    let lp = graphdist::laplacian_pair(&g.inner).map_err(pyerr)?;
    Ok(to_rows(
        analysis::sigmoid_ct_kernel(&lp, a).map_err(pyerr)?.matrix(),
    ))
}

/// Kernel k-means over a precomputed kernel; returns (assignment, inertia).
#[pyfunction]
#[pyo3(signature = (kernel, k, restarts = 20, seed = 0, centered = true))]
fn kernel_kmeans(
    kernel: Vec<Vec<f64>>,
    k: usize,
    restarts: usize,
    seed: u64,
    centered: bool,
) -> PyResult<(Vec<usize>, f64)> {
    let n = kernel.len();
    if kernel.iter().any(|r| r.len() != n) {
        return Err(PyValueError::new_err("kernel must be square"));
    }
    let m = graphdist::nalgebra::DMatrix::from_fn(n, n, |i, j| kernel[i][j]);
    let km = analysis::KernelMatrix::from_matrix(
        m,
        if centered {
            KernelKind::Centered
        } else {
            KernelKind::SigmoidCt
        },
    );
    let part = analysis::kernel_kmeans(&km, k, restarts, seed).map_err(pyerr)?;
    Ok((part.assignment().to_vec(), part.inertia()))
}

/// Classical MDS coordinates; returns (coords, positive_dims).
#[pyfunction]
fn cmds_coordinates(distances: Vec<Vec<f64>>, dims: usize) -> PyResult<(Vec<Vec<f64>>, usize)> {
    let d = dist_from_rows(distances)?;
    let out = analysis::cmds_coordinates(&d, dims).map_err(pyerr)?;
    Ok((to_rows(&out.coords), out.positive_dims))
}

/// Propagating 1-NN from seed labels given as {node: label}; returns the full
/// labeling.
#[pyfunction]
fn propagate_1nn(
    distances: Vec<Vec<f64>>,
    seeds: std::collections::HashMap<usize, usize>,
) -> PyResult<Vec<usize>> {
    let d = dist_from_rows(distances)?;
    let mut pairs: Vec<(usize, usize)> = seeds.into_iter().collect();
    pairs.sort();
    let labels = LabelSet::from_pairs(d.n(), &pairs).map_err(pyerr)?;
    let out = analysis::propagate_1nn(&d, &labels).map_err(pyerr)?;
    Ok((0..d.n()).map(|u| out.get(u).unwrap()).collect())
}

#[pyfunction]
fn nmi(x: Vec<usize>, y: Vec<usize>) -> PyResult<f64> {
    if x.len() != y.len() {
        return Err(PyValueError::new_err(
            "partitions must have the same length",
        ));
    }
    Ok(analysis::nmi(&x, &y))
}

/// Connected planted-partition graph; returns (Graph, labels).
#[pyfunction]
fn gen_sbm(
    blocks: Vec<usize>,
    p_in: f64,
    p_out: f64,
    seed: u64,
) -> PyResult<(PyGraph, Vec<usize>)> {
    let (g, labels) = analysis::gen_sbm(&blocks, p_in, p_out, seed).map_err(pyerr)?;
    Ok((PyGraph { inner: g }, labels))
}

#[pymodule]
fn graphdist_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGraph>()?;
    m.add_function(wrap_pyfunction!(shortest_path, m)?)?;
    m.add_function(wrap_pyfunction!(shortest_path_unweighted, m)?)?;
    m.add_function(wrap_pyfunction!(commute_time, m)?)?;
    m.add_function(wrap_pyfunction!(commute_cost, m)?)?;
    m.add_function(wrap_pyfunction!(resistance, m)?)?;
    m.add_function(wrap_pyfunction!(spct_combination, m)?)?;
    m.add_function(wrap_pyfunction!(rsp_dissimilarity, m)?)?;
    m.add_function(wrap_pyfunction!(free_energy_distance, m)?)?;
    m.add_function(wrap_pyfunction!(hitting_partition_functions, m)?)?;
    m.add_function(wrap_pyfunction!(log_forest, m)?)?;
    m.add_function(wrap_pyfunction!(p_resistance, m)?)?;
    m.add_function(wrap_pyfunction!(p_resistance_pair, m)?)?;
    m.add_function(wrap_pyfunction!(oracle_partition_function, m)?)?;
    m.add_function(wrap_pyfunction!(center_kernel, m)?)?;
    m.add_function(wrap_pyfunction!(sigmoid_ct_kernel, m)?)?;
    m.add_function(wrap_pyfunction!(kernel_kmeans, m)?)?;
    m.add_function(wrap_pyfunction!(cmds_coordinates, m)?)?;
    m.add_function(wrap_pyfunction!(propagate_1nn, m)?)?;
    m.add_function(wrap_pyfunction!(nmi, m)?)?;
    m.add_function(wrap_pyfunction!(gen_sbm, m)?)?;
    Ok(())
}
