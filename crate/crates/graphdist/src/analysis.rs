//! Everything downstream of a distance matrix: kernel construction, kernel
//! k-means, classical MDS coordinates, propagating 1-NN classification, NMI,
//! Copeland ranking with Welch t-tests, planted-partition generation, and
//! cross-validated parameter tuning.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::dist::DistanceMatrix;
use crate::error::{Error, Result};
use crate::graph::{CostedGraph, LaplacianPair};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelKind {
    /// Double-centered distance matrix, -H D H / 2.
    Centered,
    /// Sigmoid transform of the commute-time kernel (Laplacian pseudoinverse).
    SigmoidCt,
}

/// Symmetric similarity matrix. Positive definiteness is not required and
/// not repaired by default; see [`psd_clip`].
#[derive(Debug, Clone)]
pub struct KernelMatrix {
    values: DMatrix<f64>,
    kind: KernelKind,
}

impl KernelMatrix {
    /// Wrap a precomputed similarity matrix, symmetrizing it.
    pub fn from_matrix(values: DMatrix<f64>, kind: KernelKind) -> KernelMatrix {
        let mut values = values;
        let n = values.nrows();
        for i in 0..n {
            for j in (i + 1)..n {
                let s = 0.5 * (values[(i, j)] + values[(j, i)]);
                values[(i, j)] = s;
                values[(j, i)] = s;
            }
        }
        KernelMatrix { values, kind }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }
}

/// K = -1/2 H D H with the centering matrix H = I - ee^T/n. Distances are
/// used as they are, not squared.
pub fn center_kernel(d: &DistanceMatrix) -> KernelMatrix {
    KernelMatrix {
        values: double_center(d.matrix()),
        kind: KernelKind::Centered,
    }
}

pub(crate) fn double_center(d: &DMatrix<f64>) -> DMatrix<f64> {
    let n = d.nrows();
    let nf = n as f64;
    let row_means: Vec<f64> = (0..n).map(|i| d.row(i).sum() / nf).collect();
    let grand = row_means.iter().sum::<f64>() / nf;
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            k[(i, j)] = -0.5 * (d[(i, j)] - row_means[i] - row_means[j] + grand);
        }
    }
    k
}

/// Sigmoid commute-time kernel: entries 1 / (1 + exp(-a l+_st / sigma)), with
/// sigma the population standard deviation of all n^2 pseudoinverse entries.
pub fn sigmoid_ct_kernel(lp: &LaplacianPair, a: f64) -> Result<KernelMatrix> {
    if !a.is_finite() || a <= 0.0 {
        return Err(Error::ParamOutOfRange {
            name: "a",
            value: a,
            expected: "a > 0",
        });
    }
    let n = lp.lplus.nrows();
    let nn = (n * n) as f64;
    let mean = lp.lplus.sum() / nn;
    let var = lp
        .lplus
        .iter()
        .map(|v| (v - mean) * (v - mean))
        .sum::<f64>()
        / nn;
    let sigma = var.sqrt();
    if sigma == 0.0 {
        return Err(Error::DegenerateSigma);
    }
    let values = lp.lplus.map(|v| 1.0 / (1.0 + (-a * v / sigma).exp()));
    Ok(KernelMatrix {
        values,
        kind: KernelKind::SigmoidCt,
    })
}

/// Zero out negative eigenvalues of a kernel. Off by default; offered for
/// experimentation with indefinite similarity matrices.
pub fn psd_clip(k: &KernelMatrix) -> KernelMatrix {
    let (vals, vecs) = crate::matrix::symmetric_eigen_sorted(&k.values);
    let n = k.n();
    let mut out = DMatrix::zeros(n, n);
    for (idx, &lambda) in vals.iter().enumerate() {
        if lambda > 0.0 {
            let v = vecs.column(idx);
            out += v * v.transpose() * lambda;
        }
    }
    KernelMatrix {
        values: out,
        kind: k.kind,
    }
}

/// Node-to-cluster assignment with its within-cluster inertia.
#[derive(Debug, Clone)]
pub struct Partition {
    assignment: Vec<usize>,
    k: usize,
    inertia: f64,
}

impl Partition {
    pub fn from_assignment(assignment: Vec<usize>, k: usize) -> Partition {
        Partition {
            assignment,
            k,
            inertia: 0.0,
        }
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn inertia(&self) -> f64 {
        self.inertia
    }

    pub fn cluster_of(&self, node: usize) -> usize {
        self.assignment[node]
    }
}

/// Relabel clusters by order of first appearance, so label permutations of
/// the same partition compare equal.
fn canonicalize(assignment: &[usize], k: usize) -> Vec<usize> {
    let mut map = vec![usize::MAX; k];
    let mut next = 0;
    let mut out = Vec::with_capacity(assignment.len());
    for &c in assignment {
        if map[c] == usize::MAX {
            map[c] = next;
            next += 1;
        }
        out.push(map[c]);
    }
    out
}

struct KmeansRun {
    assignment: Vec<usize>,
    inertia: f64,
    inertia_trace: Vec<f64>,
}

/// Kernel k-means in the sample space: prototypes are implicit cluster means
/// in the embedding induced by the kernel, so the squared distance of point i
/// to cluster c is K_ii - (2/|c|) sum_{j in c} K_ij + (1/|c|^2) sum_{j,l in c} K_jl.
///
/// Runs `restarts` seeded random-assignment initializations and keeps the
/// partition with the smallest inertia; exact inertia ties are broken by the
/// lexicographically smallest canonical assignment, which keeps the result
/// deterministic and independent of restart order.
pub fn kernel_kmeans(
    kernel: &KernelMatrix,
    k: usize,
    restarts: usize,
    seed: u64,
) -> Result<Partition> {
    let (partition, _) = kernel_kmeans_traced(kernel, k, restarts, seed)?;
    Ok(partition)
}

/// As [`kernel_kmeans`], also returning the per-iteration inertia trace of
/// every restart (used to check that Lloyd iterations never increase inertia).
pub fn kernel_kmeans_traced(
    kernel: &KernelMatrix,
    k: usize,
    restarts: usize,
    seed: u64,
) -> Result<(Partition, Vec<Vec<f64>>)> {
    let n = kernel.n();
    if k == 0 || k > n {
        return Err(Error::ParamOutOfRange {
            name: "k",
            value: k as f64,
            expected: "1 <= k <= n",
        });
    }
    if restarts == 0 {
        return Err(Error::ParamOutOfRange {
            name: "restarts",
            value: 0.0,
            expected: "restarts >= 1",
        });
    }
    let mut master = ChaCha8Rng::seed_from_u64(seed);
    let restart_seeds: Vec<u64> = (0..restarts).map(|_| master.gen()).collect();
    let runs: Vec<Result<KmeansRun>> = restart_seeds
        .par_iter()
        .map(|&s| lloyd_run(kernel, k, s))
        .collect();

    let mut best: Option<KmeansRun> = None;
    let mut traces = Vec::with_capacity(restarts);
    for run in runs {
        let run = run?;
        traces.push(run.inertia_trace.clone());
        best = Some(match best {
            None => run,
            Some(cur) => {
                if run.inertia < cur.inertia
                    || (run.inertia == cur.inertia && run.assignment < cur.assignment)
                {
                    run
                } else {
                    cur
                }
            }
        });
    }
    let best = best.unwrap();
    Ok((
        Partition {
            assignment: best.assignment,
            k,
            inertia: best.inertia,
        },
        traces,
    ))
}

fn lloyd_run(kernel: &KernelMatrix, k: usize, seed: u64) -> Result<KmeansRun> {
    let n = kernel.n();
    let kv = &kernel.values;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assign: Vec<usize> = (0..n).map(|_| rng.gen_range(0..k)).collect();
    let mut trace = Vec::new();

    let inertia_of = |assign: &[usize]| -> f64 {
        let mut within = vec![0.0f64; k];
        let mut size = vec![0usize; k];
        for i in 0..n {
            size[assign[i]] += 1;
        }
        for i in 0..n {
            for j in 0..n {
                if assign[i] == assign[j] {
                    within[assign[i]] += kv[(i, j)];
                }
            }
        }
        let diag: f64 = (0..n).map(|i| kv[(i, i)]).sum();
        let mut total = diag;
        for c in 0..k {
            if size[c] > 0 {
                total -= within[c] / size[c] as f64;
            }
        }
        total
    };

    for _ in 0..300 {
        // cluster sums needed for the implicit prototypes
        let mut size = vec![0usize; k];
        let mut within = vec![0.0f64; k];
        for i in 0..n {
            size[assign[i]] += 1;
        }
        let mut col_sum = DMatrix::<f64>::zeros(n, k);
        for j in 0..n {
            let c = assign[j];
            for i in 0..n {
                col_sum[(i, c)] += kv[(i, j)];
            }
        }
        for i in 0..n {
            within[assign[i]] += col_sum[(i, assign[i])];
        }

        let mut next = vec![0usize; n];
        for i in 0..n {
            let mut best_c = usize::MAX;
            let mut best_d = f64::INFINITY;
            for c in 0..k {
                if size[c] == 0 {
                    continue;
                }
                let sc = size[c] as f64;
                let d = kv[(i, i)] - 2.0 * col_sum[(i, c)] / sc + within[c] / (sc * sc);
                if d < best_d {
                    best_d = d;
                    best_c = c;
                }
            }
            next[i] = best_c;
        }

        // repair empty clusters by stealing the farthest point from a
        // cluster that can spare one
        let mut repairs = 0;
        loop {
            let mut next_size = vec![0usize; k];
            for &c in &next {
                next_size[c] += 1;
            }
            let empty = (0..k).find(|&c| next_size[c] == 0);
            let Some(empty_c) = empty else { break };
            if repairs >= k {
                return Err(Error::EmptyClusterUnrecoverable(k));
            }
            repairs += 1;
            let mut worst: Option<(f64, usize)> = None;
            for i in 0..n {
                let c = next[i];
                if next_size[c] < 2 {
                    continue;
                }
                let sc = next_size[c] as f64;
                // distance to the prototype of the cluster it just joined,
                // computed against the pre-update sums
                let d = kv[(i, i)] - 2.0 * col_sum[(i, c)] / sc.max(1.0)
                    + within[c] / (sc * sc).max(1.0);
                if worst.is_none_or(|(wd, wi)| d > wd || (d == wd && i < wi)) {
                    worst = Some((d, i));
                }
            }
            let (_, steal) = worst.ok_or(Error::EmptyClusterUnrecoverable(k))?;
            next[steal] = empty_c;
        }

        let changed = next != assign;
        assign = next;
        trace.push(inertia_of(&assign));
        if !changed {
            break;
        }
    }

    let assignment = canonicalize(&assign, k);
    let inertia = inertia_of(&assignment);
    Ok(KmeansRun {
        assignment,
        inertia,
        inertia_trace: trace,
    })
}

/// Classical MDS output: one row of coordinates per node. Dimensions whose
/// eigenvalues are not positive are zero-filled; `positive_dims` says how
/// many of the requested axes carry signal.
#[derive(Debug, Clone)]
pub struct CmdsCoordinates {
    pub coords: DMatrix<f64>,
    pub positive_dims: usize,
}

/// Classical multidimensional scaling: eigendecompose the centered kernel and
/// scale the top eigenvectors by the square roots of their eigenvalues.
pub fn cmds_coordinates(d: &DistanceMatrix, dims: usize) -> Result<CmdsCoordinates> {
    let n = d.n();
    if dims + 1 > n {
        return Err(Error::ParamOutOfRange {
            name: "dims",
            value: dims as f64,
            expected: "dims <= n - 1",
        });
    }
    let kernel = double_center(d.matrix());
    let (vals, vecs) = crate::matrix::symmetric_eigen_sorted(&kernel);
    let mut coords = DMatrix::zeros(n, dims);
    let mut positive = 0;
    for j in 0..dims {
        if vals[j] > 0.0 {
            positive += 1;
            let scale = vals[j].sqrt();
            for i in 0..n {
                coords[(i, j)] = vecs[(i, j)] * scale;
            }
        }
    }
    Ok(CmdsCoordinates {
        coords,
        positive_dims: positive,
    })
}

/// Per-node class labels with an explicit known/unknown mask.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelSet {
    labels: Vec<Option<usize>>,
}

impl LabelSet {
    pub fn unlabeled(n: usize) -> LabelSet {
        LabelSet {
            labels: vec![None; n],
        }
    }

    pub fn from_full(labels: &[usize]) -> LabelSet {
        LabelSet {
            labels: labels.iter().map(|&l| Some(l)).collect(),
        }
    }

    pub fn from_pairs(n: usize, pairs: &[(usize, usize)]) -> Result<LabelSet> {
        let mut labels = vec![None; n];
        for &(node, label) in pairs {
            if node >= n {
                return Err(Error::NodeOutOfRange { id: node, n });
            }
            labels[node] = Some(label);
        }
        Ok(LabelSet { labels })
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn get(&self, node: usize) -> Option<usize> {
        self.labels[node]
    }

    pub fn set(&mut self, node: usize, label: usize) {
        self.labels[node] = Some(label);
    }

    pub fn clear(&mut self, node: usize) {
        self.labels[node] = None;
    }

    pub fn labeled_count(&self) -> usize {
        self.labels.iter().filter(|l| l.is_some()).count()
    }

    pub fn iter_labeled(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.labels
            .iter()
            .enumerate()
            .filter_map(|(i, l)| l.map(|v| (i, v)))
    }
}

/// Propagating 1-nearest-neighbor: repeatedly give the unlabeled node closest
/// to any labeled node that node's label, until everything is labeled.
///
/// Ties are broken by smaller distance, then smaller unlabeled id, then
/// smaller labeled id, so the result is a deterministic function of the input.
pub fn propagate_1nn(d: &DistanceMatrix, seed_labels: &LabelSet) -> Result<LabelSet> {
    let n = d.n();
    if seed_labels.n() != n {
        return Err(Error::InvalidLabels(format!(
            "label set size {} does not match n = {}",
            seed_labels.n(),
            n
        )));
    }
    if seed_labels.labeled_count() == 0 {
        return Err(Error::InvalidLabels("no labeled nodes".into()));
    }
    let mut out = seed_labels.clone();
    // best[u] = (distance, labeled node) for the closest labeled neighbor
    let mut best: Vec<Option<(f64, usize)>> = vec![None; n];
    let labeled: Vec<usize> = (0..n).filter(|&u| out.get(u).is_some()).collect();
    for (u, slot) in best.iter_mut().enumerate() {
        if out.get(u).is_some() {
            continue;
        }
        for &v in &labeled {
            let cand = (d.get(u, v), v);
            if slot.is_none_or(|cur| cand.0 < cur.0 || (cand.0 == cur.0 && cand.1 < cur.1)) {
                *slot = Some(cand);
            }
        }
    }
    let mut remaining: Vec<usize> = (0..n).filter(|&u| out.get(u).is_none()).collect();
    while !remaining.is_empty() {
        let mut pick: Option<(f64, usize, usize)> = None;
        for &u in &remaining {
            let (dist, v) = best[u].unwrap();
            let cand = (dist, u, v);
            if pick.is_none_or(|cur| cand < cur) {
                pick = Some(cand);
            }
        }
        let (_, u, v) = pick.unwrap();
        let label = out.get(v).unwrap();
        out.set(u, label);
        remaining.retain(|&x| x != u);
        for &w in &remaining {
            let cand = (d.get(w, u), u);
            if best[w].is_none_or(|cur| cand.0 < cur.0 || (cand.0 == cur.0 && cand.1 < cur.1)) {
                best[w] = Some(cand);
            }
        }
    }
    Ok(out)
}

/// Normalized mutual information of two assignments over the same node set,
/// I(X,Y) / sqrt(H(X) H(Y)) with natural logarithms. Returns 0 when either
/// partition has zero entropy.
pub fn nmi(x: &[usize], y: &[usize]) -> f64 {
    assert_eq!(x.len(), y.len(), "partitions must cover the same nodes");
    let n = x.len() as f64;
    let kx = x.iter().max().map_or(0, |m| m + 1);
    let ky = y.iter().max().map_or(0, |m| m + 1);
    let mut joint = vec![vec![0usize; ky]; kx];
    let mut cx = vec![0usize; kx];
    let mut cy = vec![0usize; ky];
    for (&a, &b) in x.iter().zip(y) {
        joint[a][b] += 1;
        cx[a] += 1;
        cy[b] += 1;
    }
    let entropy = |counts: &[usize]| -> f64 {
        counts
            .iter()
            .filter(|&&c| c > 0)
            .map(|&c| {
                let p = c as f64 / n;
                -p * p.ln()
            })
            .sum()
    };
    let hx = entropy(&cx);
    let hy = entropy(&cy);
    if hx == 0.0 || hy == 0.0 {
        return 0.0;
    }
    // summing the cell terms in sorted order makes nmi(x, y) == nmi(y, x) exact
    let mut terms = Vec::new();
    for a in 0..kx {
        for b in 0..ky {
            let c = joint[a][b];
            if c > 0 {
                let p = c as f64 / n;
                let px = cx[a] as f64 / n;
                let py = cy[b] as f64 / n;
                terms.push(p * (p / (px * py)).ln());
            }
        }
    }
    terms.sort_by(|a, b| a.total_cmp(b));
    let info: f64 = terms.iter().sum();
    info / (hx * hy).sqrt()
}

/// One method's score samples on one dataset.
#[derive(Debug, Clone)]
pub struct MethodScores {
    pub method: String,
    pub samples: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct CopelandEntry {
    pub method: String,
    pub score: i64,
    pub rank: usize,
}

/// One-sided Welch two-sample test: p-value for "mean of a exceeds mean of b".
/// Returns `None` when both samples are degenerate (zero variance), in which
/// case the caller falls back to strict mean comparison.
fn welch_one_sided_p(a: &[f64], b: &[f64]) -> Option<f64> {
    let na = a.len() as f64;
    let nb = b.len() as f64;
    let ma = a.iter().sum::<f64>() / na;
    let mb = b.iter().sum::<f64>() / nb;
    let var = |s: &[f64], m: f64| -> f64 {
        if s.len() < 2 {
            0.0
        } else {
            s.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (s.len() as f64 - 1.0)
        }
    };
    let va = var(a, ma);
    let vb = var(b, mb);
    let se2 = va / na + vb / nb;
    if se2 == 0.0 {
        return None;
    }
    let t = (ma - mb) / se2.sqrt();
    let mut df_den = 0.0;
    if va > 0.0 && a.len() > 1 {
        df_den += (va / na) * (va / na) / (na - 1.0);
    }
    if vb > 0.0 && b.len() > 1 {
        df_den += (vb / nb) * (vb / nb) / (nb - 1.0);
    }
    let df = if df_den > 0.0 {
        se2 * se2 / df_den
    } else {
        1e6
    };
    let dist = StudentsT::new(0.0, 1.0, df).ok()?;
    Some(1.0 - dist.cdf(t))
}

/// Copeland ranking: every ordered method pair is compared on every dataset
/// with a one-sided Welch t-test at level `alpha`; the significantly better
/// method gets +1 and the worse -1. Scores are summed and ranked descending,
/// ties sharing a rank.
pub fn copeland_rank(tables: &[Vec<MethodScores>], alpha: f64) -> Result<Vec<CopelandEntry>> {
    if tables.is_empty() {
        return Err(Error::InvalidLabels("no datasets".into()));
    }
    let methods: Vec<String> = tables[0].iter().map(|m| m.method.clone()).collect();
    if methods.len() < 2 {
        return Err(Error::InvalidLabels("need at least two methods".into()));
    }
    for table in tables {
        if table.len() != methods.len()
            || table
                .iter()
                .zip(&methods)
                .any(|(m, name)| &m.method != name)
        {
            return Err(Error::InvalidLabels(
                "datasets disagree on the method list".into(),
            ));
        }
        if table.iter().any(|m| m.samples.is_empty()) {
            return Err(Error::InvalidLabels("empty score sample".into()));
        }
    }
    let k = methods.len();
    let mut scores = vec![0i64; k];
    for table in tables {
        for i in 0..k {
            for j in 0..k {
                if i == j {
                    continue;
                }
                let a = &table[i].samples;
                let b = &table[j].samples;
                let better = match welch_one_sided_p(a, b) {
                    Some(p) => p < alpha,
                    None => {
                        let ma = a.iter().sum::<f64>() / a.len() as f64;
                        let mb = b.iter().sum::<f64>() / b.len() as f64;
                        ma > mb
                    }
                };
                if better {
                    scores[i] += 1;
                    scores[j] -= 1;
                }
            }
        }
    }
    let mut entries: Vec<CopelandEntry> = methods
        .into_iter()
        .zip(&scores)
        .map(|(method, &score)| CopelandEntry {
            method,
            score,
            rank: 0,
        })
        .collect();
    for i in 0..entries.len() {
        entries[i].rank = 1 + entries
            .iter()
            .filter(|e| e.score > entries[i].score)
            .count();
    }
    entries.sort_by(|a, b| a.rank.cmp(&b.rank).then(a.method.cmp(&b.method)));
    Ok(entries)
}

/// Planted-partition (stochastic block model) generator: within-block edges
/// appear with probability `p_in`, cross-block with `p_out`, unit affinities
/// and costs. Redraws with a fresh seed stream until connected, at most 100
/// attempts. Returns the graph and the planted block labels.
pub fn gen_sbm(
    block_sizes: &[usize],
    p_in: f64,
    p_out: f64,
    seed: u64,
) -> Result<(CostedGraph, Vec<usize>)> {
    if !(0.0..=1.0).contains(&p_in) || !(0.0..=1.0).contains(&p_out) || p_out > p_in {
        return Err(Error::ParamOutOfRange {
            name: "p_out",
            value: p_out,
            expected: "0 <= p_out <= p_in <= 1",
        });
    }
    let n: usize = block_sizes.iter().sum();
    if n == 0 {
        return Err(Error::ParamOutOfRange {
            name: "blocks",
            value: 0.0,
            expected: "at least one non-empty block",
        });
    }
    let mut labels = Vec::with_capacity(n);
    for (b, &size) in block_sizes.iter().enumerate() {
        labels.extend(std::iter::repeat_n(b, size));
    }
    let max_attempts = 100;
    for attempt in 0..max_attempts {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(attempt as u64));
        let mut edges = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                let p = if labels[i] == labels[j] { p_in } else { p_out };
                if rng.gen::<f64>() < p {
                    edges.push((i, j, 1.0, 1.0));
                }
            }
        }
        let g = CostedGraph::new(n, &edges)?;
        if g.is_connected() {
            return Ok((g, labels));
        }
    }
    Err(Error::CouldNotConnect(max_attempts))
}

/// Inner cross-validation over a parameter grid: for each grid value, labeled
/// nodes are split into stratified folds, each fold is hidden in turn, and
/// propagating 1-NN accuracy on the hidden fold is averaged. Returns the
/// parameter with the best mean accuracy, ties to the smaller value.
pub fn tune_by_cv<F>(
    dist_for: F,
    labels: &LabelSet,
    folds: usize,
    grid: &[f64],
    seed: u64,
) -> Result<f64>
where
    F: Fn(f64) -> Result<DistanceMatrix> + Sync,
{
    if folds < 2 {
        return Err(Error::ParamOutOfRange {
            name: "folds",
            value: folds as f64,
            expected: "folds >= 2",
        });
    }
    if grid.is_empty() {
        return Err(Error::ParamOutOfRange {
            name: "grid",
            value: 0.0,
            expected: "non-empty grid",
        });
    }
    let fold_of = stratified_folds(labels, folds, seed)?;
    let mut best: Option<(f64, f64)> = None; // (accuracy, param)
    for &param in grid {
        let d = dist_for(param)?;
        let mut accs = Vec::new();
        for fold in 0..folds {
            let mut train = labels.clone();
            let mut held: Vec<(usize, usize)> = Vec::new();
            for (node, label) in labels.iter_labeled() {
                if fold_of[node] == Some(fold) {
                    train.clear(node);
                    held.push((node, label));
                }
            }
            if held.is_empty() || train.labeled_count() == 0 {
                continue;
            }
            let predicted = propagate_1nn(&d, &train)?;
            let correct = held
                .iter()
                .filter(|&&(node, label)| predicted.get(node) == Some(label))
                .count();
            accs.push(correct as f64 / held.len() as f64);
        }
        let mean = if accs.is_empty() {
            0.0
        } else {
            accs.iter().sum::<f64>() / accs.len() as f64
        };
        best = Some(match best {
            None => (mean, param),
            Some((bm, bp)) => {
                if mean > bm || (mean == bm && param < bp) {
                    (mean, param)
                } else {
                    (bm, bp)
                }
            }
        });
    }
    Ok(best.unwrap().1)
}

/// Assign each labeled node to a fold, stratified by class: labels of each
/// class are shuffled and dealt round-robin.
fn stratified_folds(labels: &LabelSet, folds: usize, seed: u64) -> Result<Vec<Option<usize>>> {
    let mut by_class: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for (node, label) in labels.iter_labeled() {
        by_class.entry(label).or_default().push(node);
    }
    if by_class.is_empty() {
        return Err(Error::InvalidLabels("no labeled nodes".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fold_of = vec![None; labels.n()];
    for (_, mut nodes) in by_class {
        // Fisher-Yates
        for i in (1..nodes.len()).rev() {
            let j = rng.gen_range(0..=i);
            nodes.swap(i, j);
        }
        for (pos, node) in nodes.into_iter().enumerate() {
            fold_of[node] = Some(pos % folds);
        }
    }
    Ok(fold_of)
}
