//! Command-line front end: reproducible experiments over the library,
//! emitting JSON results and CSV curves.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::Rng;

use omega_gnn::data::{erdos_renyi, load_bundle, load_tu_dataset, planetoid_split, write_bundle, NodeDataset};
use omega_gnn::graph::{normalized_propagator, omega_propagator_apply, parse_edge_list, SparseGraph};
use omega_gnn::layers::{GnnKind, GraphContext, ModelSpec, NodeClassifierModel, OmegaMode};
use omega_gnn::rng::{stream, Stream};
use omega_gnn::spectral::{
    euler_vs_exact, impulse_response, leading_eigvec_check, omega_zero, random_normalized_spd,
    EnergyKind, EnergyTrace,
};
use omega_gnn::tape::Tape;
use omega_gnn::tensor::Tensor;
use omega_gnn::train::{
    checkpoint_load, checkpoint_save, mode_name, omega_scan, spec_hash, train_graph_classification,
    train_node_classification, train_synthetic_regression, RunConfig, SyntheticConfig,
};
use omega_gnn::Error;

#[derive(Parser)]
#[command(name = "omega-gnn", about = "Train and probe GNNs with learnable propagation operators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Global,
    PerLayer,
    PerChannel,
}

impl From<ModeArg> for OmegaMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Global => OmegaMode::Global,
            ModeArg::PerLayer => OmegaMode::PerLayer,
            ModeArg::PerChannel => OmegaMode::PerLayerChannel,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModelArg {
    Wgcn,
    Wgat,
    Gcn,
    Gat,
}

impl ModelArg {
    fn kind(self) -> GnnKind {
        match self {
            ModelArg::Wgcn | ModelArg::Gcn => GnnKind::Gcn,
            ModelArg::Wgat | ModelArg::Gat => GnnKind::Gat,
        }
    }

    /// The non-omega baselines freeze omega at 1.
    fn frozen(self) -> bool {
        matches!(self, ModelArg::Gcn | ModelArg::Gat)
    }
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Dataset directory (bundle or TU folder); falls back to OMEGA_GNN_DATA
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Flat key-value config file; explicit flags win over file values
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory for result files
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    layers: Option<usize>,
    #[arg(long)]
    channels: Option<usize>,
    #[arg(long)]
    dropout: Option<f64>,
    #[arg(long, value_enum)]
    omega_mode: Option<ModeArg>,
    #[arg(long, value_enum, default_value = "wgcn")]
    model: ModelArg,
    /// Force single-threaded fully reproducible execution
    #[arg(long)]
    deterministic: bool,
    /// Concurrent folds/scan points (training within a run stays sequential)
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long)]
    epochs: Option<usize>,
}

impl CommonArgs {
    /// Defaults <- config file <- explicit flags.
    fn run_config(&self) -> Result<RunConfig, Error> {
        let mut cfg = RunConfig::default();
        if let Some(path) = &self.config {
            let text = fs::read_to_string(path)?;
            cfg.apply_text(&text)?;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(l) = self.layers {
            cfg.layers = l;
        }
        if let Some(c) = self.channels {
            cfg.channels = c;
        }
        if let Some(d) = self.dropout {
            cfg.dropout = d;
        }
        if let Some(m) = self.omega_mode {
            cfg.omega_mode = m.into();
        }
        if let Some(e) = self.epochs {
            cfg.epochs = e;
        }
        if self.model.frozen() {
            cfg.omega_mode = OmegaMode::Global;
        }
        Ok(cfg)
    }

    fn dataset_dir(&self) -> Result<PathBuf, Error> {
        if let Some(d) = &self.dataset {
            return Ok(d.clone());
        }
        if let Ok(root) = std::env::var("OMEGA_GNN_DATA") {
            return Ok(PathBuf::from(root));
        }
        Err(Error::InvalidArgument(
            "no dataset: pass --dataset or set OMEGA_GNN_DATA".into(),
        ))
    }

    fn jobs(&self) -> usize {
        if self.deterministic {
            1
        } else {
            self.jobs.max(1)
        }
    }

    fn node_spec(&self, cfg: &RunConfig, in_channels: usize, out_channels: usize) -> ModelSpec {
        ModelSpec {
            kind: self.model.kind(),
            mode: cfg.omega_mode,
            in_channels,
            hidden_channels: cfg.channels,
            out_channels,
            num_layers: cfg.layers,
            dropout: cfg.dropout,
            linear_output: false,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Semi-supervised node classification on a bundle dataset
    TrainNode(CommonArgs),
    /// k-fold graph classification on a TU-format dataset
    TrainGraph {
        #[command(flatten)]
        common: CommonArgs,
        /// TU dataset name (defaults to the dataset directory name)
        #[arg(long)]
        name: Option<String>,
        #[arg(long, default_value_t = 10)]
        folds: usize,
        #[arg(long)]
        batch_size: Option<usize>,
    },
    /// Upwind-gradient regression on a random graph
    SyntheticGrad {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, default_value_t = 8)]
        nodes: usize,
        #[arg(long, default_value_t = 0.3)]
        edge_rate: f64,
        #[arg(long, default_value_t = 1)]
        in_channels: usize,
        #[arg(long, default_value_t = 5000)]
        iterations: usize,
        #[arg(long, default_value_t = 1e-4)]
        lr: f64,
    },
    /// Per-layer feature-energy decay curves for fixed and learnt omegas
    EnergyTrace {
        #[command(flatten)]
        common: CommonArgs,
        /// dirichlet or gat energy
        #[arg(long, default_value = "dirichlet")]
        kind: String,
        /// Load a trained model instead of training
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Forward-Euler vs matrix-exponential error across depths
    EulerCheck {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, default_value_t = 100)]
        size: usize,
    },
    /// Smoothing threshold and leading-eigenvector probe
    EigCheck {
        #[command(flatten)]
        common: CommonArgs,
        /// omega values to probe
        #[arg(long, value_delimiter = ',', default_value = "0.5,1.5")]
        omega: Vec<f64>,
        #[arg(long, default_value_t = 20)]
        nodes: usize,
        #[arg(long, default_value_t = 0.3)]
        edge_rate: f64,
    },
    /// Trained mean omega across depths and sharing modes
    OmegaScan {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, value_delimiter = ',', default_value = "4,8,16")]
        depths: Vec<usize>,
    },
    /// Single application of the omega propagator to a node indicator
    Impulse {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, default_value_t = 1.0)]
        omega: f64,
        #[arg(long, default_value_t = 0)]
        node: usize,
        #[arg(long, default_value_t = 20)]
        nodes: usize,
        #[arg(long, default_value_t = 0.3)]
        edge_rate: f64,
    },
    /// Train, then dump the layers x channels omega matrix as CSV
    DumpOmega(CommonArgs),
    /// Validate and normalize a raw edges/features/labels triple into a bundle
    Convert {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        input: PathBuf,
    },
}

fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::Numerical(_) | Error::NonFinite(_) => 1,
        _ => 2,
    }
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<(), Error> {
    fs::write(path, serde_json::to_string_pretty(value).expect("json") + "\n")?;
    Ok(())
}

fn write_csv(path: &Path, header: &str, rows: impl IntoIterator<Item = String>) -> Result<(), Error> {
    let mut text = String::from(header);
    text.push('\n');
    for row in rows {
        text.push_str(&row);
        text.push('\n');
    }
    fs::write(path, text)?;
    Ok(())
}

fn load_node_dataset(dir: &Path, seed: u64) -> Result<NodeDataset, Error> {
    let ds = load_bundle(dir)?;
    // standard split sizes, clamped so small bundles remain usable
    let mut class_count = vec![0usize; ds.num_classes];
    for &l in &ds.labels {
        if l >= 0 {
            class_count[l as usize] += 1;
        }
    }
    let smallest = class_count.iter().copied().min().unwrap_or(0);
    let per_class = 20.min((smallest / 2).max(1));
    let labeled: usize = class_count.iter().sum();
    let rest = labeled.saturating_sub(per_class * ds.num_classes);
    let val = 500.min(rest / 2);
    let test = 1000.min(rest - val);
    planetoid_split(&ds, per_class, val, test, seed)
}

/// Graph from the dataset's edges.tsv when given, otherwise a random
/// connected graph.
fn graph_for_probe(common: &CommonArgs, nodes: usize, rate: f64, seed: u64) -> Result<SparseGraph, Error> {
    let path = match &common.dataset {
        Some(dir) => Some(dir.join("edges.tsv")),
        None => std::env::var("OMEGA_GNN_DATA")
            .ok()
            .map(|root| PathBuf::from(root).join("edges.tsv"))
            .filter(|p| p.exists()),
    };
    if let Some(p) = path {
        let edges = parse_edge_list(&fs::read_to_string(p)?)?;
        let n = edges.iter().map(|&(i, j)| i.max(j)).max().map_or(0, |m| m + 1);
        return SparseGraph::from_edge_list(&edges, n);
    }
    erdos_renyi(nodes, rate, seed)
}

fn cmd_train_node(common: &CommonArgs) -> Result<(), Error> {
    let cfg = common.run_config()?;
    let ds = load_node_dataset(&common.dataset_dir()?, cfg.seed)?;
    let mut optim = cfg.optim();
    if common.model.frozen() {
        optim.omega.lr = 0.0;
    }
    let spec = common.node_spec(&cfg, ds.features.cols(), ds.num_classes);
    let (model, result) = train_node_classification(&ds, spec.clone(), &optim, cfg.seed)?;

    fs::create_dir_all(&common.out)?;
    let mut json = serde_json::to_value(&result).expect("result json");
    json["seed"] = cfg.seed.into();
    json["layers"] = cfg.layers.into();
    json["omega_mode"] = mode_name(cfg.omega_mode).into();
    write_json(&common.out.join("result.json"), &json)?;
    write_csv(
        &common.out.join("loss.csv"),
        "epoch,train_loss,val_accuracy",
        result
            .train_loss
            .iter()
            .zip(&result.val_curve)
            .enumerate()
            .map(|(e, (l, v))| format!("{},{},{}", e, l, v)),
    )?;
    write_csv(
        &common.out.join("omega_history.csv"),
        "epoch,layer,omega_mean",
        result.omega_history.iter().enumerate().flat_map(|(e, row)| {
            row.iter()
                .enumerate()
                .map(move |(l, v)| format!("{},{},{}", e, l, v))
                .collect::<Vec<_>>()
        }),
    )?;

    // energy trace of the trained model in eval mode
    let ctx = GraphContext::new(ds.graph.clone());
    let mut tape = Tape::new();
    let mut rng = stream(cfg.seed, Stream::Probe);
    let fwd = model.forward(&mut tape, &ctx, &ds.features, false, &mut rng)?;
    let feats: Vec<Tensor> = fwd.layer_features.iter().map(|&id| tape.value(id).clone()).collect();
    let trace = EnergyTrace::from_features(&feats, &ds.graph, EnergyKind::Dirichlet)?;
    fs::write(common.out.join("energy_trace.csv"), trace.to_csv())?;

    checkpoint_save(&model.params, spec_hash(&spec), &common.out.join("model.ckpt"))?;
    println!(
        "test_accuracy {:.4} (best epoch {}, {} epochs run)",
        result.test_accuracy, result.best_epoch, result.epochs_run
    );
    Ok(())
}

fn cmd_train_graph(
    common: &CommonArgs,
    name: &Option<String>,
    folds: usize,
    batch_size: Option<usize>,
) -> Result<(), Error> {
    let mut cfg = common.run_config()?;
    // TU defaults differ from node-classification defaults
    if common.config.is_none() {
        cfg.wd_gnn = 0.0;
        cfg.wd_oc = 0.0;
        cfg.wd_omega = 0.0;
    }
    if common.channels.is_none() {
        cfg.channels = 32;
    }
    if common.dropout.is_none() {
        cfg.dropout = 0.0;
    }
    if common.epochs.is_none() {
        cfg.epochs = 350;
    }
    let dir = common.dataset_dir()?;
    let name = match name {
        Some(n) => n.clone(),
        None => dir
            .file_name()
            .and_then(|s| s.to_str())
            .ok_or_else(|| Error::InvalidArgument("cannot infer TU dataset name from path".into()))?
            .to_string(),
    };
    let ds = load_tu_dataset(&dir, &name)?;
    let spec = common.node_spec(&cfg, ds.feature_width(), ds.num_classes);
    let mut optim = cfg.optim();
    if common.model.frozen() {
        optim.omega.lr = 0.0;
    }
    let batch = batch_size.unwrap_or(cfg.batch_size);
    let result = train_graph_classification(&ds, spec, &optim, folds, batch, cfg.seed, common.jobs())?;

    fs::create_dir_all(&common.out)?;
    let mut json = serde_json::to_value(&result).expect("result json");
    json["seed"] = cfg.seed.into();
    json["dataset"] = name.clone().into();
    write_json(&common.out.join("result.json"), &json)?;
    write_csv(
        &common.out.join("folds.csv"),
        "fold,accuracy",
        result.fold_accuracy.iter().enumerate().map(|(f, a)| format!("{},{}", f, a)),
    )?;
    println!("mean_accuracy {:.4} +- {:.4} over {} folds", result.mean, result.std, folds);
    Ok(())
}

fn cmd_synthetic_grad(
    common: &CommonArgs,
    nodes: usize,
    edge_rate: f64,
    in_channels: usize,
    iterations: usize,
    lr: f64,
) -> Result<(), Error> {
    let cfg = common.run_config()?;
    let synth = SyntheticConfig {
        nodes,
        edge_rate,
        in_channels,
        hidden_channels: if common.channels.is_some() { cfg.channels } else { 64 },
        num_layers: if common.layers.is_some() { cfg.layers } else { 2 },
        lr,
        iterations,
    };
    let result = train_synthetic_regression(&synth, cfg.seed)?;
    fs::create_dir_all(&common.out)?;
    let mut json = serde_json::to_value(&result).expect("result json");
    json["seed"] = cfg.seed.into();
    write_json(&common.out.join("result.json"), &json)?;
    println!("wgcn_mse {:.3e} gcn_mse {:.3e}", result.wgcn_mse, result.gcn_mse);
    Ok(())
}

const FIXED_OMEGAS: [f64; 4] = [1.0, 0.1, 0.001, 0.0001];

fn cmd_energy_trace(common: &CommonArgs, kind: &str, checkpoint: &Option<PathBuf>) -> Result<(), Error> {
    let kind = match kind {
        "dirichlet" => EnergyKind::Dirichlet,
        "gat" => EnergyKind::Gat,
        other => {
            return Err(Error::InvalidArgument(format!(
                "unknown energy kind {:?} (expected dirichlet or gat)",
                other
            )))
        }
    };
    let cfg = common.run_config()?;
    let ds = load_node_dataset(&common.dataset_dir()?, cfg.seed)?;
    let g = &ds.graph;
    let p = normalized_propagator(g);
    let depth = cfg.layers;

    // fixed-omega baselines: pure propagation with K = I on raw features
    let mut fixed_traces = Vec::new();
    for &omega in &FIXED_OMEGAS {
        let mut feats = Vec::with_capacity(depth + 1);
        let mut x = ds.features.clone();
        feats.push(x.clone());
        for _ in 0..depth {
            x = omega_propagator_apply(&p, omega, &x)?;
            feats.push(x.clone());
        }
        fixed_traces.push(EnergyTrace::from_features(&feats, g, kind)?);
    }

    // learnt curve: trained (or checkpointed) model's per-layer features
    let spec = common.node_spec(&cfg, ds.features.cols(), ds.num_classes);
    let model = match checkpoint {
        Some(path) => {
            let mut rng = stream(cfg.seed, Stream::Init);
            let mut m = NodeClassifierModel::new(spec.clone(), &mut rng);
            checkpoint_load(&mut m.params, spec_hash(&spec), path)?;
            m
        }
        None => train_node_classification(&ds, spec, &cfg.optim(), cfg.seed)?.0,
    };
    let ctx = GraphContext::new(g.clone());
    let mut tape = Tape::new();
    let mut rng = stream(cfg.seed, Stream::Probe);
    let fwd = model.forward(&mut tape, &ctx, &ds.features, false, &mut rng)?;
    let feats: Vec<Tensor> = fwd.layer_features.iter().map(|&id| tape.value(id).clone()).collect();
    let learnt = EnergyTrace::from_features(&feats, g, kind)?;

    fs::create_dir_all(&common.out)?;
    let rows = (0..=depth).map(|l| {
        let mut row = l.to_string();
        for t in &fixed_traces {
            row.push_str(&format!(",{}", t.ratios[l]));
        }
        let lr = learnt.ratios.get(l.min(learnt.ratios.len() - 1)).unwrap();
        row.push_str(&format!(",{}", lr));
        row
    });
    write_csv(
        &common.out.join("energy_trace.csv"),
        "layer,omega_1,omega_0.1,omega_0.001,omega_0.0001,learnt",
        rows,
    )?;
    println!("wrote {} layers of energy ratios", depth + 1);
    Ok(())
}

const EULER_DEPTHS: [usize; 7] = [4, 8, 16, 32, 64, 128, 256];

fn cmd_euler_check(common: &CommonArgs, size: usize) -> Result<(), Error> {
    let cfg = common.run_config()?;
    let mut rng = stream(cfg.seed, Stream::Probe);
    let a = random_normalized_spd(size, &mut rng);
    let f0 = Tensor::new(size, 1, (0..size).map(|_| rng.gen_range(-1.0..1.0)).collect())?;
    fs::create_dir_all(&common.out)?;
    let mut rows = Vec::new();
    for &l in &EULER_DEPTHS {
        let err = euler_vs_exact(&a, 1.0, l, &f0)?;
        println!("L {:3}  error {:.6e}", l, err);
        rows.push(format!("{},{}", l, err));
    }
    write_csv(&common.out.join("euler.csv"), "L,error", rows)?;
    Ok(())
}

fn cmd_eig_check(common: &CommonArgs, omegas: &[f64], nodes: usize, rate: f64) -> Result<(), Error> {
    let cfg = common.run_config()?;
    let g = graph_for_probe(common, nodes, rate, cfg.seed)?;
    let w0 = omega_zero(&g)?;
    println!("omega_zero {:.6}", w0);
    for &omega in omegas {
        let check = leading_eigvec_check(&g, omega)?;
        println!(
            "omega {:8.4} cosine {:.8} leading {} degenerate {}",
            omega, check.cosine, check.is_leading, check.degenerate
        );
    }
    Ok(())
}

fn cmd_omega_scan(common: &CommonArgs, depths: &[usize]) -> Result<(), Error> {
    let cfg = common.run_config()?;
    let ds = load_node_dataset(&common.dataset_dir()?, cfg.seed)?;
    let base = common.node_spec(&cfg, ds.features.cols(), ds.num_classes);
    let modes = [OmegaMode::Global, OmegaMode::PerLayer];
    let rows = omega_scan(&ds, &base, &cfg.optim(), depths, &modes, cfg.seed)?;
    fs::create_dir_all(&common.out)?;
    write_csv(
        &common.out.join("omega_scan.csv"),
        "L,mode,omega_bar,omega_sum",
        rows.iter().map(|r| format!("{},{},{},{}", r.layers, r.mode, r.omega_bar, r.omega_sum)),
    )?;
    for r in &rows {
        println!("L {:3} {:10} omega_bar {:.6} sum {:.6}", r.layers, r.mode, r.omega_bar, r.omega_sum);
    }
    Ok(())
}

fn cmd_impulse(common: &CommonArgs, omega: f64, node: usize, nodes: usize, rate: f64) -> Result<(), Error> {
    let cfg = common.run_config()?;
    let g = graph_for_probe(common, nodes, rate, cfg.seed)?;
    let v = impulse_response(&g, omega, node)?;
    let text: Vec<String> = v.iter().map(|x| format!("{}", x)).collect();
    println!("{}", text.join(","));
    Ok(())
}

fn cmd_dump_omega(common: &CommonArgs) -> Result<(), Error> {
    let cfg = common.run_config()?;
    let ds = load_node_dataset(&common.dataset_dir()?, cfg.seed)?;
    let spec = common.node_spec(&cfg, ds.features.cols(), ds.num_classes);
    let (model, _) = train_node_classification(&ds, spec, &cfg.optim(), cfg.seed)?;
    let om = model.omega_matrix();
    fs::create_dir_all(&common.out)?;
    let rows = (0..om.rows()).map(|l| {
        let vals: Vec<String> = om.row(l).iter().map(|v| format!("{}", v)).collect();
        format!("{},{}", l, vals.join(","))
    });
    let header: String = std::iter::once("layer".to_string())
        .chain((0..om.cols()).map(|c| format!("c{}", c)))
        .collect::<Vec<_>>()
        .join(",");
    write_csv(&common.out.join("omega_matrix.csv"), &header, rows)?;
    println!("wrote {}x{} omega matrix", om.rows(), om.cols());
    Ok(())
}

fn cmd_convert(common: &CommonArgs, input: &Path) -> Result<(), Error> {
    // accept 0- or 1-based edge indices; symmetry comes from the loader's
    // undirected representation
    let edges_text = fs::read_to_string(input.join("edges.tsv"))?;
    let features_text = fs::read_to_string(input.join("features.csv"))?;
    let n = features_text.lines().filter(|l| !l.trim().is_empty()).count();
    let mut edges = parse_edge_list(&edges_text)?;
    let max = edges.iter().map(|&(i, j)| i.max(j)).max();
    let min = edges.iter().map(|&(i, j)| i.min(j)).min();
    if max == Some(n) && min.map_or(false, |m| m >= 1) {
        // 1-based input: shift down
        edges = edges.iter().map(|&(i, j)| (i - 1, j - 1)).collect();
    }
    let tmp = common.out.join("_convert_tmp");
    fs::create_dir_all(&tmp)?;
    fs::write(
        tmp.join("edges.tsv"),
        edges.iter().map(|(i, j)| format!("{}\t{}\n", i, j)).collect::<String>(),
    )?;
    fs::copy(input.join("features.csv"), tmp.join("features.csv"))?;
    fs::copy(input.join("labels.csv"), tmp.join("labels.csv"))?;
    for mask in ["mask_train.txt", "mask_val.txt", "mask_test.txt"] {
        if input.join(mask).exists() {
            fs::copy(input.join(mask), tmp.join(mask))?;
        }
    }
    // validate through the loader, then write the canonical bundle
    let ds = load_bundle(&tmp)?;
    write_bundle(&ds, &common.out)?;
    fs::remove_dir_all(&tmp)?;
    println!(
        "bundle: {} nodes, {} edges, {} features, {} classes",
        ds.num_nodes(),
        ds.graph.num_edges(),
        ds.features.cols(),
        ds.num_classes
    );
    Ok(())
}

fn run(cli: &Cli) -> Result<(), Error> {
    match &cli.command {
        Command::TrainNode(common) => cmd_train_node(common),
        Command::TrainGraph { common, name, folds, batch_size } => {
            cmd_train_graph(common, name, *folds, *batch_size)
        }
        Command::SyntheticGrad { common, nodes, edge_rate, in_channels, iterations, lr } => {
            cmd_synthetic_grad(common, *nodes, *edge_rate, *in_channels, *iterations, *lr)
        }
        Command::EnergyTrace { common, kind, checkpoint } => cmd_energy_trace(common, kind, checkpoint),
        Command::EulerCheck { common, size } => cmd_euler_check(common, *size),
        Command::EigCheck { common, omega, nodes, edge_rate } => {
            cmd_eig_check(common, omega, *nodes, *edge_rate)
        }
        Command::OmegaScan { common, depths } => cmd_omega_scan(common, depths),
        Command::Impulse { common, omega, node, nodes, edge_rate } => {
            cmd_impulse(common, *omega, *node, *nodes, *edge_rate)
        }
        Command::DumpOmega(common) => cmd_dump_omega(common),
        Command::Convert { common, input } => cmd_convert(common, input),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e);
            ExitCode::from(exit_code_for(&e))
        }
    }
}
