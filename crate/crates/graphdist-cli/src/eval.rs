//! The evaluation harness: for each dataset and labeling rate, repeatedly
//! hide labels, tune each distance family by inner cross-validation on the
//! revealed labels, classify the hidden nodes with propagating 1-NN, and
//! rank the families with Copeland scores from pairwise one-sided Welch
//! tests.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::Args;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use graphdist::analysis::{self, LabelSet, MethodScores};
use graphdist::curves;
use graphdist::io;
use graphdist::{CostedGraph, DistanceMatrix, Error, Method, Params, Result};

#[derive(Args)]
pub struct EvalArgs {
    /// Input graphs (repeatable; each needs a matching --labels)
    #[arg(short = 'i', long = "input", required = true)]
    inputs: Vec<String>,

    /// Ground-truth labels TSV for each input, in the same order
    #[arg(long = "labels", required = true)]
    labels: Vec<PathBuf>,

    /// Labeling rates in percent
    #[arg(long, value_delimiter = ',', default_values_t = vec![10usize, 30, 50, 70, 90])]
    rates: Vec<usize>,

    /// Randomized label deletions per rate
    #[arg(long, default_value_t = 3)]
    repeats: usize,

    /// Inner cross-validation folds for parameter tuning
    #[arg(long, default_value_t = 10)]
    folds: usize,

    /// Distance families to compare
    #[arg(long, value_delimiter = ',', default_value = "rsp,fe,logfor,spct")]
    methods: Vec<String>,

    /// Grid points per parametrized family
    #[arg(long, default_value_t = 7)]
    grid_points: usize,

    /// RNG seed
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Significance level of the pairwise Welch tests
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,

    /// Output directory for score tables and the Copeland ranking
    #[arg(short, long)]
    outdir: PathBuf,
}

fn sub_seed(seed: u64, parts: &[u64]) -> u64 {
    let mut s = seed.wrapping_mul(0x9E3779B97F4A7C15).wrapping_add(1);
    for &p in parts {
        s ^= p.wrapping_mul(0xBF58476D1CE4E5B9).rotate_left(17);
        s = s.wrapping_mul(0x94D049BB133111EB);
    }
    s
}

fn params_for(method: Method, value: f64) -> Params {
    match method {
        Method::Rsp | Method::Fe => Params::beta(value),
        Method::LogFor => Params::alpha_gamma(value, 1.0),
        Method::Spct => Params::lambda(value),
        Method::Pres => Params::p(value),
        _ => Params::default(),
    }
}

struct DatasetCache {
    name: String,
    truth: Vec<usize>,
    classes: usize,
    /// per method: the grid and one distance matrix per grid value
    grids: Vec<Vec<f64>>,
    matrices: Vec<Vec<DistanceMatrix>>,
}

/// Stratified reveal of `rate` percent of the nodes, at least one per class.
fn reveal(truth: &[usize], classes: usize, rate: usize, rng: &mut ChaCha8Rng) -> LabelSet {
    let n = truth.len();
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); classes];
    for (node, &label) in truth.iter().enumerate() {
        by_class[label].push(node);
    }
    let mut out = LabelSet::unlabeled(n);
    for nodes in &mut by_class {
        for i in (1..nodes.len()).rev() {
            let j = rng.gen_range(0..=i);
            nodes.swap(i, j);
        }
        let keep = (nodes.len() * rate).div_ceil(100).max(1);
        for &node in nodes.iter().take(keep) {
            out.set(node, truth[node]);
        }
    }
    out
}

pub fn cmd_eval(args: &EvalArgs) -> Result<()> {
    if args.inputs.len() != args.labels.len() {
        return Err(Error::InvalidLabels(format!(
            "{} inputs but {} label files",
            args.inputs.len(),
            args.labels.len()
        )));
    }
    let methods: Vec<Method> = args
        .methods
        .iter()
        .map(|m| {
            Method::parse(m).ok_or(Error::ParamOutOfRange {
                name: "methods",
                value: f64::NAN,
                expected: "known method tags",
            })
        })
        .collect::<Result<_>>()?;
    std::fs::create_dir_all(&args.outdir)?;

    // load every dataset and precompute the distance matrices of every grid
    // value once; the sweep below only reshuffles labels
    let mut datasets = Vec::new();
    for (input, labels_path) in args.inputs.iter().zip(&args.labels) {
        let g = load_input(input)?;
        let pairs = io::read_labels_tsv(labels_path)?;
        let labels = LabelSet::from_pairs(g.node_count(), &pairs)?;
        if labels.labeled_count() != g.node_count() {
            return Err(Error::InvalidLabels(format!(
                "{}: ground truth must label every node",
                labels_path.display()
            )));
        }
        let truth: Vec<usize> = (0..g.node_count())
            .map(|u| labels.get(u).unwrap())
            .collect();
        let classes = truth.iter().max().unwrap() + 1;
        let mut grids = Vec::new();
        let mut matrices = Vec::new();
        for &method in &methods {
            let grid = match curves::default_grid(method, args.grid_points) {
                Ok(g) => g,
                // families without a parameter sweep a single dummy value
                Err(_) => vec![0.0],
            };
            let mats: Vec<DistanceMatrix> = grid
                .iter()
                .map(|&v| {
                    graphdist::compute_distance(
                        &g,
                        method,
                        &params_for(method, v),
                        graphdist::alt::PRES_DEFAULT_TOL,
                        graphdist::alt::PRES_DEFAULT_CAP,
                    )
                })
                .collect::<Result<_>>()?;
            grids.push(grid);
            matrices.push(mats);
        }
        let name = PathBuf::from(input)
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| input.clone());
        datasets.push(DatasetCache {
            name,
            truth,
            classes,
            grids,
            matrices,
        });
    }

    // samples[dataset][method][rate] -> per-repeat accuracies
    let mut samples: Vec<Vec<Vec<Vec<f64>>>> = datasets
        .iter()
        .map(|_| vec![vec![Vec::new(); args.rates.len()]; methods.len()])
        .collect();

    for (di, ds) in datasets.iter().enumerate() {
        for (ri, &rate) in args.rates.iter().enumerate() {
            for repeat in 0..args.repeats {
                let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(
                    args.seed,
                    &[di as u64, rate as u64, repeat as u64],
                ));
                let revealed = reveal(&ds.truth, ds.classes, rate, &mut rng);
                for (mi, _) in methods.iter().enumerate() {
                    let grid = &ds.grids[mi];
                    let mats = &ds.matrices[mi];
                    let lookup = |param: f64| -> Result<DistanceMatrix> {
                        let idx = grid
                            .iter()
                            .position(|&g| g == param)
                            .expect("tuner stays on the grid");
                        Ok(mats[idx].clone())
                    };
                    let best = if grid.len() == 1 {
                        grid[0]
                    } else {
                        analysis::tune_by_cv(
                            lookup,
                            &revealed,
                            args.folds,
                            grid,
                            sub_seed(
                                args.seed,
                                &[di as u64, rate as u64, repeat as u64, mi as u64],
                            ),
                        )?
                    };
                    let idx = grid.iter().position(|&g| g == best).unwrap();
                    let predicted = analysis::propagate_1nn(&mats[idx], &revealed)?;
                    let mut hidden = 0usize;
                    let mut correct = 0usize;
                    for node in 0..ds.truth.len() {
                        if revealed.get(node).is_none() {
                            hidden += 1;
                            if predicted.get(node) == Some(ds.truth[node]) {
                                correct += 1;
                            }
                        }
                    }
                    let acc = if hidden == 0 {
                        1.0
                    } else {
                        correct as f64 / hidden as f64
                    };
                    samples[di][mi][ri].push(acc);
                }
            }
        }
    }

    // per-dataset score tables
    for (di, ds) in datasets.iter().enumerate() {
        let mut out = String::from("method,rate,repeat,accuracy\n");
        for (mi, method) in methods.iter().enumerate() {
            for (ri, &rate) in args.rates.iter().enumerate() {
                for (repeat, acc) in samples[di][mi][ri].iter().enumerate() {
                    writeln!(
                        out,
                        "{},{rate},{repeat},{}",
                        method.tag(),
                        io::format_f64(*acc)
                    )
                    .unwrap();
                }
            }
        }
        std::fs::write(args.outdir.join(format!("scores-{}.csv", ds.name)), out)?;
    }

    // Copeland ranking per rate plus the overall sum
    let mut out = String::from("rate,method,rank,score\n");
    let mut overall: Vec<i64> = vec![0; methods.len()];
    for (ri, &rate) in args.rates.iter().enumerate() {
        let tables: Vec<Vec<MethodScores>> = datasets
            .iter()
            .enumerate()
            .map(|(di, _)| {
                methods
                    .iter()
                    .enumerate()
                    .map(|(mi, m)| MethodScores {
                        method: m.tag().to_string(),
                        samples: samples[di][mi][ri].clone(),
                    })
                    .collect()
            })
            .collect();
        let entries = analysis::copeland_rank(&tables, args.alpha)?;
        for e in &entries {
            writeln!(out, "{rate},{},{},{}", e.method, e.rank, e.score).unwrap();
            let mi = methods.iter().position(|m| m.tag() == e.method).unwrap();
            overall[mi] += e.score;
        }
    }
    let mut order: Vec<usize> = (0..methods.len()).collect();
    order.sort_by_key(|&mi| (-overall[mi], methods[mi].tag()));
    for &mi in &order {
        let rank = 1 + order
            .iter()
            .filter(|&&other| overall[other] > overall[mi])
            .count();
        writeln!(out, "overall,{},{rank},{}", methods[mi].tag(), overall[mi]).unwrap();
    }
    std::fs::write(args.outdir.join("copeland.csv"), out)?;
    Ok(())
}

fn load_input(input: &str) -> Result<CostedGraph> {
    let path = std::path::Path::new(input);
    if path.exists() {
        io::load_graph(path)
    } else {
        graphdist::fixtures::by_name(input).ok_or_else(|| Error::Parse {
            path: input.into(),
            line: 0,
            msg: "not a file or fixture".into(),
        })
    }
}
