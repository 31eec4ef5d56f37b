//! The omega-GCN / omega-GAT layers, their omega-sharing modes, and the two
//! full architectures (node classifier, graph classifier).
//!
//! A layer computes sigma((I - Omega (I - S)) f K) where S is either the
//! fixed normalized propagator (GCN) or the attention operator built from
//! the current features (GAT). Omega is a scalar shared across the network
//! (Global), a scalar per layer (PerLayer), or a vector per layer and
//! channel (PerLayerChannel).

use std::collections::HashMap;
use std::rc::Rc;

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::graph::{normalized_propagator, SparseGraph, SparseMatrix};
use crate::rng::Rng;
use crate::tape::{Gradients, NodeId, ParamGroup, Parameter, Tape};
use crate::tensor::Tensor;

pub const LEAKY_RELU_SLOPE: f64 = 0.2;
pub const BN_EPS: f64 = 1e-5;
pub const BN_MOMENTUM: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OmegaMode {
    /// One omega shared by every layer.
    Global,
    /// One omega per layer.
    PerLayer,
    /// A vector of per-channel omegas per layer.
    PerLayerChannel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GnnKind {
    Gcn,
    Gat,
}

/// Registers parameter leaves on the tape, once per parameter, so shared
/// parameters (the Global omega) accumulate gradients at a single node.
pub struct Binder {
    map: HashMap<usize, NodeId>,
    order: Vec<(usize, NodeId)>,
}

impl Binder {
    pub fn new() -> Self {
        Binder { map: HashMap::new(), order: Vec::new() }
    }

    pub fn bind(&mut self, tape: &mut Tape, params: &[Parameter], idx: usize) -> NodeId {
        if let Some(&id) = self.map.get(&idx) {
            return id;
        }
        let id = tape.leaf(params[idx].value.clone());
        self.map.insert(idx, id);
        self.order.push((idx, id));
        id
    }

    /// Adds the backward-sweep gradients into the parameters' grad buffers.
    pub fn accumulate(&self, tape: &Tape, grads: &Gradients, params: &mut [Parameter]) {
        for &(idx, node) in &self.order {
            let g = grads.get(tape, node);
            params[idx].grad.add_assign(&g).expect("parameter gradient shape");
        }
    }
}

impl Default for Binder {
    fn default() -> Self {
        Self::new()
    }
}

/// Directed edge structure for attention: every edge (j -> i) plus the
/// self-loop (i -> i), grouped by target node.
#[derive(Debug, Clone)]
pub struct AttentionEdges {
    pub src: Rc<Vec<usize>>,
    pub tgt: Rc<Vec<usize>>,
    pub num_nodes: usize,
}

impl AttentionEdges {
    pub fn from_graph(g: &SparseGraph) -> Self {
        let n = g.num_nodes();
        let mut src = Vec::new();
        let mut tgt = Vec::new();
        for i in 0..n {
            src.push(i);
            tgt.push(i);
            for &j in g.neighbors(i) {
                src.push(j);
                tgt.push(i);
            }
        }
        AttentionEdges { src: Rc::new(src), tgt: Rc::new(tgt), num_nodes: n }
    }

    pub fn num_edges(&self) -> usize {
        self.src.len()
    }
}

/// Everything a forward pass needs of a graph, precomputed once.
#[derive(Debug, Clone)]
pub struct GraphContext {
    pub graph: SparseGraph,
    pub propagator: Rc<SparseMatrix>,
    pub attention: AttentionEdges,
}

impl GraphContext {
    pub fn new(graph: SparseGraph) -> Self {
        let propagator = Rc::new(normalized_propagator(&graph));
        let attention = AttentionEdges::from_graph(&graph);
        GraphContext { graph, propagator, attention }
    }
}

fn glorot(rows: usize, cols: usize, rng: &mut Rng) -> Tensor {
    let bound = (6.0 / (rows + cols) as f64).sqrt();
    let data = (0..rows * cols).map(|_| rng.gen_range(-bound..bound)).collect();
    Tensor::new(rows, cols, data).expect("glorot shape")
}

/// Index layout of one omega layer's weights inside a model's flat
/// parameter vector.
#[derive(Debug, Clone)]
pub struct LayerParams {
    pub k: usize,
    pub omega: usize,
    /// GAT only.
    pub w: Option<usize>,
    /// GAT only, shape (2c, 1).
    pub a: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct ModelSpec {
    pub kind: GnnKind,
    pub mode: OmegaMode,
    pub in_channels: usize,
    pub hidden_channels: usize,
    pub out_channels: usize,
    pub num_layers: usize,
    pub dropout: f64,
    /// Regression head: the last omega layer skips its activation.
    pub linear_output: bool,
}

fn omega_params(spec: &ModelSpec, params: &mut Vec<Parameter>) -> Vec<usize> {
    let c = spec.hidden_channels;
    let width = match spec.mode {
        OmegaMode::PerLayerChannel => c,
        _ => 1,
    };
    match spec.mode {
        OmegaMode::Global => {
            params.push(Parameter::new("omega", Tensor::ones(1, width), ParamGroup::Omega));
            vec![params.len() - 1; spec.num_layers]
        }
        _ => (0..spec.num_layers)
            .map(|l| {
                params.push(Parameter::new(
                    format!("layer{}.omega", l),
                    Tensor::ones(1, width),
                    ParamGroup::Omega,
                ));
                params.len() - 1
            })
            .collect(),
    }
}

fn layer_weights(spec: &ModelSpec, omega_idx: &[usize], params: &mut Vec<Parameter>, rng: &mut Rng) -> Vec<LayerParams> {
    let c = spec.hidden_channels;
    (0..spec.num_layers)
        .map(|l| {
            params.push(Parameter::new(format!("layer{}.K", l), Tensor::identity(c), ParamGroup::Gnn));
            let k = params.len() - 1;
            let (w, a) = match spec.kind {
                GnnKind::Gcn => (None, None),
                GnnKind::Gat => {
                    params.push(Parameter::new(format!("layer{}.W", l), glorot(c, c, rng), ParamGroup::Gnn));
                    let w = params.len() - 1;
                    params.push(Parameter::new(format!("layer{}.a", l), glorot(2 * c, 1, rng), ParamGroup::Gnn));
                    (Some(w), Some(params.len() - 1))
                }
            };
            LayerParams { k, omega: omega_idx[l], w, a }
        })
        .collect()
}

/// One omega layer applied inside a tape. Returns the post-activation
/// features.
#[allow(clippy::too_many_arguments)]
fn omega_layer_forward(
    tape: &mut Tape,
    binder: &mut Binder,
    params: &[Parameter],
    layer: &LayerParams,
    ctx: &GraphContext,
    x: NodeId,
    kind: GnnKind,
    linear: bool,
) -> Result<NodeId> {
    let propagated = match kind {
        GnnKind::Gcn => tape.spmm(ctx.propagator.clone(), x)?,
        GnnKind::Gat => {
            let w = binder.bind(tape, params, layer.w.expect("GAT layer has W"));
            let a = binder.bind(tape, params, layer.a.expect("GAT layer has a"));
            let alpha = attention_weights(tape, ctx, x, w, a)?;
            let gathered = tape.gather_rows(x, ctx.attention.src.clone())?;
            let weighted = tape.scale_rows(gathered, alpha)?;
            tape.scatter_add(weighted, ctx.attention.tgt.clone(), ctx.attention.num_nodes)?
        }
    };
    let diff = tape.sub(x, propagated)?;
    let omega = binder.bind(tape, params, layer.omega);
    let scaled = tape.channel_scale(diff, omega)?;
    let mixed = tape.sub(x, scaled)?;
    let k = binder.bind(tape, params, layer.k);
    let out = tape.matmul(mixed, k)?;
    if linear {
        Ok(out)
    } else {
        tape.relu(out)
    }
}

/// Attention coefficients alpha over each target node's neighborhood
/// (self-loop included): softmax of LeakyReLU(a^T [W x_i || W x_j]).
pub fn attention_weights(
    tape: &mut Tape,
    ctx: &GraphContext,
    x: NodeId,
    w: NodeId,
    a: NodeId,
) -> Result<NodeId> {
    let h = tape.matmul(x, w)?;
    let h_tgt = tape.gather_rows(h, ctx.attention.tgt.clone())?;
    let h_src = tape.gather_rows(h, ctx.attention.src.clone())?;
    let pairs = tape.concat_channels(h_tgt, h_src)?;
    let logits = tape.matmul(pairs, a)?;
    let logits = tape.leaky_relu(logits, LEAKY_RELU_SLOPE)?;
    tape.segment_softmax(logits, ctx.attention.tgt.clone(), ctx.attention.num_nodes)
}

/// Result of one architecture forward: the output node, the per-layer
/// features (entry 0 is the post-embedding f^(0), then one per omega
/// layer), and the parameter bindings for gradient routing.
pub struct Forward {
    pub output: NodeId,
    pub layer_features: Vec<NodeId>,
    pub binder: Binder,
}

/// The node-classification stack: dropout, opening conv, ReLU, L omega
/// layers, dropout, closing conv.
#[derive(Debug, Clone)]
pub struct NodeClassifierModel {
    pub spec: ModelSpec,
    pub params: Vec<Parameter>,
    pub open: usize,
    pub close: usize,
    pub layers: Vec<LayerParams>,
}

impl NodeClassifierModel {
    pub fn new(spec: ModelSpec, seed_rng: &mut Rng) -> Self {
        let mut params = Vec::new();
        params.push(Parameter::new(
            "open",
            glorot(spec.in_channels, spec.hidden_channels, seed_rng),
            ParamGroup::OpenClose,
        ));
        let open = 0;
        params.push(Parameter::new(
            "close",
            glorot(spec.hidden_channels, spec.out_channels, seed_rng),
            ParamGroup::OpenClose,
        ));
        let close = 1;
        let omega_idx = omega_params(&spec, &mut params);
        let layers = layer_weights(&spec, &omega_idx, &mut params, seed_rng);
        NodeClassifierModel { spec, params, open, close, layers }
    }

    pub fn forward(
        &self,
        tape: &mut Tape,
        ctx: &GraphContext,
        features: &Tensor,
        training: bool,
        rng: &mut Rng,
    ) -> Result<Forward> {
        if features.cols() != self.spec.in_channels {
            return Err(Error::ShapeMismatch(format!(
                "model expects {} input channels, got {}",
                self.spec.in_channels,
                features.cols()
            )));
        }
        let mut binder = Binder::new();
        let x = tape.leaf(features.clone());
        let x = tape.dropout(x, self.spec.dropout, training, rng)?;
        let open = binder.bind(tape, &self.params, self.open);
        let x = tape.matmul(x, open)?;
        let mut x = tape.relu(x)?;
        let mut layer_features = vec![x];
        for (l, layer) in self.layers.iter().enumerate() {
            let linear = self.spec.linear_output && l + 1 == self.layers.len();
            x = omega_layer_forward(tape, &mut binder, &self.params, layer, ctx, x, self.spec.kind, linear)?;
            layer_features.push(x);
        }
        let x = tape.dropout(x, self.spec.dropout, training, rng)?;
        let close = binder.bind(tape, &self.params, self.close);
        let output = tape.matmul(x, close)?;
        Ok(Forward { output, layer_features, binder })
    }

    pub fn zero_grads(&mut self) {
        for p in &mut self.params {
            p.zero_grad();
        }
    }

    /// Materialized L x c omega matrix (Global/PerLayer broadcast across
    /// channels).
    pub fn omega_matrix(&self) -> Tensor {
        omega_matrix(&self.params, &self.layers, self.spec.hidden_channels)
    }

    /// Mean omega across layers and channels.
    pub fn omega_bar(&self) -> f64 {
        let m = self.omega_matrix();
        m.sum() / m.len() as f64
    }
}

/// One graph-classification block: omega layer, batch norm, a mixing conv,
/// ReLU. Running statistics live outside the parameter vector.
pub struct GraphBlock {
    pub layer: LayerParams,
    pub gamma: usize,
    pub beta: usize,
    pub mix: usize,
}

/// The graph-classification stack (GIN-style): opening conv, ReLU, L
/// blocks, add-pool, conv, dropout, conv.
pub struct GraphClassifierModel {
    pub spec: ModelSpec,
    pub params: Vec<Parameter>,
    pub open: usize,
    pub head1: usize,
    pub head2: usize,
    pub blocks: Vec<GraphBlock>,
    pub running_stats: Vec<(Vec<f64>, Vec<f64>)>,
}

impl GraphClassifierModel {
    pub fn new(spec: ModelSpec, seed_rng: &mut Rng) -> Self {
        let c = spec.hidden_channels;
        let mut params = Vec::new();
        params.push(Parameter::new("open", glorot(spec.in_channels, c, seed_rng), ParamGroup::OpenClose));
        let open = 0;
        params.push(Parameter::new("head1", glorot(c, c, seed_rng), ParamGroup::OpenClose));
        let head1 = 1;
        params.push(Parameter::new("head2", glorot(c, spec.out_channels, seed_rng), ParamGroup::OpenClose));
        let head2 = 2;
        let omega_idx = omega_params(&spec, &mut params);
        let layers = layer_weights(&spec, &omega_idx, &mut params, seed_rng);
        let mut blocks = Vec::new();
        let mut running_stats = Vec::new();
        for (l, layer) in layers.into_iter().enumerate() {
            params.push(Parameter::new(format!("layer{}.bn_gamma", l), Tensor::ones(1, c), ParamGroup::OpenClose));
            let gamma = params.len() - 1;
            params.push(Parameter::new(format!("layer{}.bn_beta", l), Tensor::zeros(1, c), ParamGroup::OpenClose));
            let beta = params.len() - 1;
            params.push(Parameter::new(format!("layer{}.mix", l), glorot(c, c, seed_rng), ParamGroup::OpenClose));
            let mix = params.len() - 1;
            blocks.push(GraphBlock { layer, gamma, beta, mix });
            running_stats.push((vec![0.0; c], vec![1.0; c]));
        }
        GraphClassifierModel { spec, params, open, head1, head2, blocks, running_stats }
    }

    /// Forward over a (possibly batched block-diagonal) graph. `gids` maps
    /// each node to its graph slot; output has one row per graph.
    pub fn forward(
        &mut self,
        tape: &mut Tape,
        ctx: &GraphContext,
        features: &Tensor,
        gids: Rc<Vec<usize>>,
        num_graphs: usize,
        training: bool,
        rng: &mut Rng,
    ) -> Result<Forward> {
        let mut binder = Binder::new();
        let x = tape.leaf(features.clone());
        let open = binder.bind(tape, &self.params, self.open);
        let x = tape.matmul(x, open)?;
        let mut x = tape.relu(x)?;
        let mut layer_features = vec![x];
        for i in 0..self.blocks.len() {
            let block = &self.blocks[i];
            let (layer, gamma_idx, beta_idx, mix_idx) = (block.layer.clone(), block.gamma, block.beta, block.mix);
            x = omega_layer_forward(tape, &mut binder, &self.params, &layer, ctx, x, self.spec.kind, false)?;
            layer_features.push(x);
            let gamma = binder.bind(tape, &self.params, gamma_idx);
            let beta = binder.bind(tape, &self.params, beta_idx);
            let (rm, rv) = &mut self.running_stats[i];
            x = tape.batch_norm(x, gamma, beta, rm, rv, training, BN_EPS, BN_MOMENTUM)?;
            let mix = binder.bind(tape, &self.params, mix_idx);
            x = tape.matmul(x, mix)?;
            x = tape.relu(x)?;
        }
        let pooled = tape.global_add_pool(x, gids, num_graphs)?;
        let head1 = binder.bind(tape, &self.params, self.head1);
        let x = tape.matmul(pooled, head1)?;
        let x = tape.dropout(x, self.spec.dropout, training, rng)?;
        let head2 = binder.bind(tape, &self.params, self.head2);
        let output = tape.matmul(x, head2)?;
        Ok(Forward { output, layer_features, binder })
    }

    pub fn zero_grads(&mut self) {
        for p in &mut self.params {
            p.zero_grad();
        }
    }

    pub fn omega_matrix(&self) -> Tensor {
        let layers: Vec<LayerParams> = self.blocks.iter().map(|b| b.layer.clone()).collect();
        omega_matrix(&self.params, &layers, self.spec.hidden_channels)
    }
}

fn omega_matrix(params: &[Parameter], layers: &[LayerParams], c: usize) -> Tensor {
    let mut out = Tensor::zeros(layers.len(), c);
    for (l, layer) in layers.iter().enumerate() {
        let w = &params[layer.omega].value;
        for j in 0..c {
            let v = if w.cols() == 1 { w.get(0, 0) } else { w.get(0, j) };
            out.set(l, j, v);
        }
    }
    out
}
