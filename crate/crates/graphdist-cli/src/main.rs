//! Command line driver: distance computation, kernels, clustering,
//! classification, MDS coordinates, ratio curves, oracle certification,
//! planted-partition generation, and the evaluation harness.
//!
//! Exit codes: 0 success, 2 usage or validation failure, 3 numerical failure.

mod eval;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use graphdist::analysis::{self, KernelMatrix, LabelSet};
use graphdist::curves;
use graphdist::io;
use graphdist::{fixtures, CostedGraph, Error, Method, Params};

#[derive(Parser)]
#[command(
    name = "graphdist",
    version,
    about = "Parametrized graph node distances and the analysis pipeline on top of them"
)]
struct Cli {
    /// Bound internal parallelism to this many threads
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Report errors as one JSON object per line on standard error
    #[arg(long, global = true)]
    json_errors: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute one distance matrix and write it as CSV plus a meta sidecar
    Dist(DistArgs),
    /// Sweep a family over its parameter grid and report d(0,1)/d(1,2)
    RatioCurve(RatioCurveArgs),
    /// Kernel k-means clustering of graph nodes
    Cluster(ClusterArgs),
    /// Semisupervised propagating 1-NN classification from seed labels
    Classify(ClassifyArgs),
    /// Classical MDS coordinates from a distance matrix
    Mds(MdsArgs),
    /// Certify closed-form hitting partition functions against the
    /// path-enumeration oracle
    OracleCheck(OracleCheckArgs),
    /// Generate a connected planted-partition graph
    GenSbm(GenSbmArgs),
    /// Labeling-rate sweep with inner CV tuning and Copeland ranking
    Eval(eval::EvalArgs),
}

/// Optional JSON file holding the same knobs as the flags; explicit flags win.
#[derive(Debug, Default, serde::Deserialize)]
struct ConfigFile {
    method: Option<String>,
    beta: Option<f64>,
    alpha: Option<f64>,
    gamma: Option<f64>,
    lambda: Option<f64>,
    p: Option<f64>,
    a: Option<f64>,
    k: Option<usize>,
    restarts: Option<usize>,
    seed: Option<u64>,
    dims: Option<usize>,
    pres_tol: Option<f64>,
    pres_cap: Option<usize>,
}

fn load_config(path: &Option<PathBuf>) -> Result<ConfigFile, CliError> {
    match path {
        None => Ok(ConfigFile::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", p.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| CliError::usage(format!("bad config {}: {e}", p.display())))
        }
    }
}

#[derive(Debug, Clone, Args)]
struct MethodArgs {
    /// Distance family: sp, spu, ct, cc, res, spct, rsp, fe, logfor, pres
    #[arg(long)]
    method: Option<String>,

    /// Inverse temperature (rsp, fe)
    #[arg(long)]
    beta: Option<f64>,

    /// Forest accessibility parameter (logfor)
    #[arg(long)]
    alpha: Option<f64>,

    /// Forest distance scale (logfor)
    #[arg(long)]
    gamma: Option<f64>,

    /// Shortest-path weight in the SP/resistance combination (spct)
    #[arg(long)]
    lambda: Option<f64>,

    /// Flow exponent (pres)
    #[arg(long)]
    p: Option<f64>,

    /// Gradient-norm tolerance of the flow solver (default 1e-9)
    #[arg(long)]
    pres_tol: Option<f64>,

    /// Node-count cap for all-pairs p-resistance (default 200)
    #[arg(long)]
    pres_cap: Option<usize>,
}

impl MethodArgs {
    fn merged(&self, cfg: &ConfigFile) -> MethodArgs {
        MethodArgs {
            method: self.method.clone().or_else(|| cfg.method.clone()),
            beta: self.beta.or(cfg.beta),
            alpha: self.alpha.or(cfg.alpha),
            gamma: self.gamma.or(cfg.gamma),
            lambda: self.lambda.or(cfg.lambda),
            p: self.p.or(cfg.p),
            pres_tol: self.pres_tol.or(cfg.pres_tol),
            pres_cap: self.pres_cap.or(cfg.pres_cap),
        }
    }

    /// Resolve the method tag and build its parameter record, rejecting
    /// parameters that do not belong to the method and filling the tuned
    /// defaults (rsp beta 0.02, fe beta 0.07, logfor alpha 0.95 gamma 1,
    /// spct lambda 1, pres p 1.5).
    fn resolve(&self) -> Result<(Method, Params), CliError> {
        let tag = self
            .method
            .as_deref()
            .ok_or_else(|| CliError::usage("--method is required".into()))?;
        let method =
            Method::parse(tag).ok_or_else(|| CliError::usage(format!("unknown method {tag:?}")))?;
        let reject = |given: bool, name: &str| -> Result<(), CliError> {
            if given {
                Err(CliError::usage(format!(
                    "--{name} does not apply to method {tag}"
                )))
            } else {
                Ok(())
            }
        };
        let params = match method {
            Method::Sp | Method::Spu | Method::Ct | Method::Cc | Method::Res => {
                reject(self.beta.is_some(), "beta")?;
                reject(self.alpha.is_some(), "alpha")?;
                reject(self.gamma.is_some(), "gamma")?;
                reject(self.lambda.is_some(), "lambda")?;
                reject(self.p.is_some(), "p")?;
                Params::default()
            }
            Method::Rsp | Method::Fe => {
                reject(self.alpha.is_some(), "alpha")?;
                reject(self.gamma.is_some(), "gamma")?;
                reject(self.lambda.is_some(), "lambda")?;
                reject(self.p.is_some(), "p")?;
                let default = if method == Method::Rsp { 0.02 } else { 0.07 };
                Params::beta(self.beta.unwrap_or(default))
            }
            Method::LogFor => {
                reject(self.beta.is_some(), "beta")?;
                reject(self.lambda.is_some(), "lambda")?;
                reject(self.p.is_some(), "p")?;
                Params::alpha_gamma(self.alpha.unwrap_or(0.95), self.gamma.unwrap_or(1.0))
            }
            Method::Spct => {
                reject(self.beta.is_some(), "beta")?;
                reject(self.alpha.is_some(), "alpha")?;
                reject(self.gamma.is_some(), "gamma")?;
                reject(self.p.is_some(), "p")?;
                Params::lambda(self.lambda.unwrap_or(1.0))
            }
            Method::Pres => {
                reject(self.beta.is_some(), "beta")?;
                reject(self.alpha.is_some(), "alpha")?;
                reject(self.gamma.is_some(), "gamma")?;
                reject(self.lambda.is_some(), "lambda")?;
                Params::p(self.p.unwrap_or(1.5))
            }
        };
        Ok((method, params))
    }
}

#[derive(Args)]
struct DistArgs {
    /// Input graph: an edge-list TSV path or a fixture name
    #[arg(short, long)]
    input: String,

    /// Output CSV path; a `<output>.meta.json` sidecar is written next to it
    #[arg(short, long)]
    output: PathBuf,

    #[command(flatten)]
    method: MethodArgs,

    /// JSON config file supplying any of the flags above
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct RatioCurveArgs {
    /// Fixture to sweep: ext-triangle or hub-4-3
    #[arg(long, default_value = "ext-triangle")]
    fixture: String,

    /// Family to sweep: rsp, fe, logfor, spct, pres
    #[arg(long)]
    method: String,

    /// Number of grid points
    #[arg(long, default_value_t = 20)]
    points: usize,

    /// Output CSV path (param, d01, d12, ratio)
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct ClusterArgs {
    /// Input graph: an edge-list TSV path or a fixture name
    #[arg(short, long)]
    input: String,

    /// Kernel: "centered" (from --method distances) or "sigct"
    #[arg(long, default_value = "centered")]
    kernel: String,

    /// Sigmoid smoothing for the sigct kernel
    #[arg(long)]
    a: Option<f64>,

    /// Clip negative kernel eigenvalues to zero before clustering
    #[arg(long)]
    psd_clip: bool,

    #[command(flatten)]
    method: MethodArgs,

    /// Number of clusters
    #[arg(long)]
    k: Option<usize>,

    /// Random restarts of kernel k-means
    #[arg(long)]
    restarts: Option<usize>,

    /// RNG seed
    #[arg(long)]
    seed: Option<u64>,

    /// Output partition TSV (node, cluster)
    #[arg(short, long)]
    output: PathBuf,

    /// JSON config file supplying any of the flags above
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct ClassifyArgs {
    /// Input graph: an edge-list TSV path or a fixture name
    #[arg(short, long)]
    input: String,

    /// Seed labels TSV (node, label); unlisted nodes are unlabeled
    #[arg(long)]
    labels: PathBuf,

    #[command(flatten)]
    method: MethodArgs,

    /// Output TSV with every node labeled
    #[arg(short, long)]
    output: PathBuf,

    /// JSON config file supplying any of the flags above
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct MdsArgs {
    /// Input graph: an edge-list TSV path or a fixture name
    #[arg(short, long)]
    input: String,

    #[command(flatten)]
    method: MethodArgs,

    /// Embedding dimension (default 2)
    #[arg(long)]
    dims: Option<usize>,

    /// Output coordinates CSV (n rows, dims columns)
    #[arg(short, long)]
    output: PathBuf,

    /// JSON config file supplying any of the flags above
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct OracleCheckArgs {
    /// Input graph: an edge-list TSV path or a fixture name
    #[arg(short, long)]
    input: String,

    /// Inverse temperature
    #[arg(long, default_value_t = 1.0)]
    beta: f64,

    /// Length ceiling for enumerated hitting walks; clamped per pair so the
    /// ensemble stays enumerable (the tail bound certifies the truncation
    /// either way)
    #[arg(long, default_value_t = 20)]
    tmax: usize,

    /// Output CSV path; standard output when omitted
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct GenSbmArgs {
    /// Comma-separated block sizes, e.g. 30,30,30
    #[arg(long)]
    blocks: String,

    /// Within-block edge probability
    #[arg(long)]
    pin: f64,

    /// Cross-block edge probability
    #[arg(long)]
    pout: f64,

    /// RNG seed
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Output graph TSV
    #[arg(short, long)]
    output: PathBuf,

    /// Output labels TSV (default: <output>.labels.tsv)
    #[arg(long)]
    labels_out: Option<PathBuf>,
}

/// Error wrapper distinguishing usage problems (exit 2) from numerical
/// failures (exit 3).
#[derive(Debug)]
struct CliError {
    kind: &'static str,
    message: String,
    code: u8,
}

impl CliError {
    fn usage(message: String) -> CliError {
        CliError {
            kind: "Usage",
            message,
            code: 2,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> CliError {
        CliError {
            kind: e.kind(),
            code: if e.is_numerical() { 3 } else { 2 },
            message: e.to_string(),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        // ignore failure if a pool was already installed
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    let result = match &cli.command {
        Command::Dist(args) => cmd_dist(args),
        Command::RatioCurve(args) => cmd_ratio_curve(args),
        Command::Cluster(args) => cmd_cluster(args),
        Command::Classify(args) => cmd_classify(args),
        Command::Mds(args) => cmd_mds(args),
        Command::OracleCheck(args) => cmd_oracle_check(args),
        Command::GenSbm(args) => cmd_gen_sbm(args),
        Command::Eval(args) => eval::cmd_eval(args).map_err(CliError::from),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            if cli.json_errors {
                eprintln!(
                    "{}",
                    serde_json::json!({"error": {"kind": err.kind, "message": err.message}})
                );
            } else {
                eprintln!("error: {}", err.message);
            }
            ExitCode::from(err.code)
        }
    }
}

/// Resolve `-i`: an existing path is loaded as edge-list TSV, otherwise the
/// name is looked up among the built-in fixtures. Returns the graph together
/// with the bytes hashed into meta sidecars.
fn resolve_graph(input: &str) -> Result<(CostedGraph, Vec<u8>), CliError> {
    let path = Path::new(input);
    if path.exists() {
        let bytes = std::fs::read(path).map_err(Error::from)?;
        let text = String::from_utf8_lossy(&bytes);
        let g = io::parse_graph(&text, input)?;
        return Ok((g, bytes));
    }
    match fixtures::by_name(input) {
        Some(g) => {
            let bytes = io::graph_to_tsv(&g).into_bytes();
            Ok((g, bytes))
        }
        None => Err(CliError::usage(format!(
            "input {input:?} is neither a file nor a known fixture \
             (k2, path-3, ext-triangle, hub-4-3, barbell-7)"
        ))),
    }
}

fn compute(g: &CostedGraph, args: &MethodArgs) -> Result<graphdist::DistanceMatrix, CliError> {
    let (method, params) = args.resolve()?;
    Ok(graphdist::compute_distance(
        g,
        method,
        &params,
        args.pres_tol.unwrap_or(graphdist::alt::PRES_DEFAULT_TOL),
        args.pres_cap.unwrap_or(graphdist::alt::PRES_DEFAULT_CAP),
    )?)
}

fn cmd_dist(args: &DistArgs) -> Result<(), CliError> {
    let cfg = load_config(&args.config)?;
    let margs = args.method.merged(&cfg);
    let (g, bytes) = resolve_graph(&args.input)?;
    let d = compute(&g, &margs)?;
    io::write_distance_csv(&args.output, &d, &bytes)?;
    Ok(())
}

fn cmd_ratio_curve(args: &RatioCurveArgs) -> Result<(), CliError> {
    if !matches!(args.fixture.as_str(), "ext-triangle" | "hub-4-3") {
        return Err(CliError::usage(format!(
            "ratio-curve fixture must be ext-triangle or hub-4-3, got {:?}",
            args.fixture
        )));
    }
    let g = fixtures::by_name(&args.fixture).expect("validated fixture");
    let method = Method::parse(&args.method)
        .ok_or_else(|| CliError::usage(format!("unknown method {:?}", args.method)))?;
    let grid = curves::default_grid(method, args.points)?;
    let pts = curves::ratio_curve(&g, method, &grid)?;
    let mut out = String::from("param,d01,d12,ratio\n");
    for p in &pts {
        writeln!(
            out,
            "{},{},{},{}",
            io::format_f64(p.param),
            io::format_f64(p.d01),
            io::format_f64(p.d12),
            io::format_f64(p.ratio)
        )
        .unwrap();
    }
    std::fs::write(&args.output, out).map_err(Error::from)?;
    Ok(())
}

fn cmd_cluster(args: &ClusterArgs) -> Result<(), CliError> {
    let cfg = load_config(&args.config)?;
    let margs = args.method.merged(&cfg);
    let k = args
        .k
        .or(cfg.k)
        .ok_or_else(|| CliError::usage("--k is required".into()))?;
    let restarts = args.restarts.or(cfg.restarts).unwrap_or(20);
    let seed = args.seed.or(cfg.seed).unwrap_or(0);
    let a = args.a.or(cfg.a).unwrap_or(26.0);
    let (g, _) = resolve_graph(&args.input)?;
    let kernel: KernelMatrix = match args.kernel.as_str() {
        "centered" => analysis::center_kernel(&compute(&g, &margs)?),
        "sigct" => analysis::sigmoid_ct_kernel(&graphdist::laplacian_pair(&g)?, a)?,
        other => {
            return Err(CliError::usage(format!(
                "unknown kernel {other:?}: expected centered or sigct"
            )))
        }
    };
    let kernel = if args.psd_clip {
        analysis::psd_clip(&kernel)
    } else {
        kernel
    };
    let part = analysis::kernel_kmeans(&kernel, k, restarts, seed)?;
    io::write_labels_tsv(&args.output, part.assignment())?;
    println!("inertia: {}", io::format_f64(part.inertia()));
    Ok(())
}

fn cmd_classify(args: &ClassifyArgs) -> Result<(), CliError> {
    let cfg = load_config(&args.config)?;
    let margs = args.method.merged(&cfg);
    let (g, _) = resolve_graph(&args.input)?;
    let pairs = io::read_labels_tsv(&args.labels)?;
    let seeds = LabelSet::from_pairs(g.node_count(), &pairs)?;
    let d = compute(&g, &margs)?;
    let full = analysis::propagate_1nn(&d, &seeds)?;
    let labels: Vec<usize> = (0..g.node_count())
        .map(|u| full.get(u).expect("propagation labels everything"))
        .collect();
    io::write_labels_tsv(&args.output, &labels)?;
    Ok(())
}

fn cmd_mds(args: &MdsArgs) -> Result<(), CliError> {
    let cfg = load_config(&args.config)?;
    let margs = args.method.merged(&cfg);
    let dims = args.dims.or(cfg.dims).unwrap_or(2);
    let (g, _) = resolve_graph(&args.input)?;
    let d = compute(&g, &margs)?;
    let out = analysis::cmds_coordinates(&d, dims)?;
    io::write_matrix_csv(&args.output, &out.coords)?;
    eprintln!(
        "{} of {} axes carry positive eigenvalues",
        out.positive_dims, dims
    );
    Ok(())
}

fn cmd_oracle_check(args: &OracleCheckArgs) -> Result<(), CliError> {
    let (g, _) = resolve_graph(&args.input)?;
    let core = graphdist::build_core(&g, args.beta)?;
    let n = g.node_count();
    let mut out = String::from("s,t,closed_form,oracle,tail_bound,diff\n");
    let mut worst_excess = f64::NEG_INFINITY;
    for s in 0..n {
        for t in 0..n {
            if s == t {
                continue;
            }
            let t_max = graphdist::oracle::max_length_within_budget(&g, s, t, 2_000_000, args.tmax);
            let check = graphdist::oracle::check_pair(&g, &core, s, t, t_max)?;
            worst_excess = worst_excess.max(check.diff - check.tail_bound);
            writeln!(
                out,
                "{s},{t},{},{},{},{}",
                io::format_f64(check.closed_form),
                io::format_f64(check.oracle),
                io::format_f64(check.tail_bound),
                io::format_f64(check.diff)
            )
            .unwrap();
        }
    }
    match &args.output {
        Some(path) => std::fs::write(path, out).map_err(Error::from)?,
        None => print!("{out}"),
    }
    eprintln!(
        "worst diff minus tail bound: {} (certified when <= ~1e-12)",
        io::format_f64(worst_excess)
    );
    Ok(())
}

fn cmd_gen_sbm(args: &GenSbmArgs) -> Result<(), CliError> {
    let blocks: Vec<usize> = args
        .blocks
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| CliError::usage(format!("bad block size {s:?}")))
        })
        .collect::<Result<_, _>>()?;
    let (g, labels) = analysis::gen_sbm(&blocks, args.pin, args.pout, args.seed)?;
    io::save_graph(&g, &args.output)?;
    let labels_path = args
        .labels_out
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("{}.labels.tsv", args.output.display())));
    io::write_labels_tsv(labels_path, &labels)?;
    Ok(())
}
