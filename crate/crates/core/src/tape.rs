//! Tape-based reverse-mode differentiation over dense f64 tensors.
//!
//! Forward operations record onto a [`Tape`]; [`Tape::backward`] sweeps the
//! recorded nodes in reverse and returns per-node gradients. The operator
//! set is exactly what the network architectures need: matmul, sparse
//! propagation, per-channel scaling, activations, dropout, segment softmax
//! with gather/scatter for attention, batch norm, pooling and the losses.

use std::rc::Rc;

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::graph::{spmm, SparseMatrix};
use crate::rng::Rng;
use crate::tensor::Tensor;

/// Optimizer group a trainable parameter belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ParamGroup {
    /// GNN layer weights: K, and for GAT also W and a.
    Gnn,
    /// Opening/closing (and any classifier head) convolutions.
    OpenClose,
    /// The omega propagation weights.
    Omega,
}

/// A trainable tensor with its accumulated gradient.
#[derive(Debug, Clone)]
pub struct Parameter {
    pub value: Tensor,
    pub grad: Tensor,
    pub group: ParamGroup,
    pub name: String,
}

impl Parameter {
    pub fn new(name: impl Into<String>, value: Tensor, group: ParamGroup) -> Self {
        let grad = Tensor::zeros(value.rows(), value.cols());
        Parameter { value, grad, group, name: name.into() }
    }

    pub fn zero_grad(&mut self) {
        self.grad.fill(0.0);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct NodeId(usize);

enum Op {
    Leaf,
    Add { a: NodeId, b: NodeId },
    Sub { a: NodeId, b: NodeId },
    Matmul { a: NodeId, b: NodeId },
    Spmm { m: Rc<SparseMatrix>, x: NodeId },
    ChannelScale { x: NodeId, w: NodeId },
    Relu { x: NodeId },
    LeakyRelu { x: NodeId, slope: f64 },
    Dropout { x: NodeId, mask: Vec<f64> },
    GatherRows { x: NodeId, idx: Rc<Vec<usize>> },
    ScatterAdd { x: NodeId, idx: Rc<Vec<usize>> },
    ScaleRows { x: NodeId, v: NodeId },
    Concat { a: NodeId, b: NodeId },
    SegmentSoftmax { x: NodeId, segments: Rc<Vec<usize>> },
    BatchNorm { x: NodeId, gamma: NodeId, inv_std: Vec<f64>, xhat: Tensor, training: bool },
    AddPool { x: NodeId, gids: Rc<Vec<usize>> },
    CrossEntropy { logits: NodeId, labels: Rc<Vec<usize>>, mask: Rc<Vec<usize>>, probs: Tensor },
    BceWithLogits { logits: NodeId, targets: Tensor, mask: Rc<Vec<usize>> },
    Mse { pred: NodeId, target: Tensor },
    SumAll { x: NodeId },
}

struct Node {
    value: Tensor,
    op: Op,
    // second output-side dependency for ops with two gradient sinks
    extra: Option<NodeId>,
}

/// Recorded computation graph. Node ids are topological by construction.
pub struct Tape {
    nodes: Vec<Node>,
}

/// Per-node gradients produced by one backward sweep. Sweeps are
/// independent: summing the results of two sweeps equals the sweep of the
/// summed loss.
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
}

impl Gradients {
    /// Gradient at `id`, zeros if the node did not influence the loss.
    pub fn get(&self, tape: &Tape, id: NodeId) -> Tensor {
        match &self.grads[id.0] {
            Some(g) => g.clone(),
            None => {
                let v = &tape.nodes[id.0].value;
                Tensor::zeros(v.rows(), v.cols())
            }
        }
    }
}

impl Default for Tape {
    fn default() -> Self {
        Self::new()
    }
}

impl Tape {
    pub fn new() -> Self {
        Tape { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, id: NodeId) -> &Tensor {
        &self.nodes[id.0].value
    }

    fn push(&mut self, value: Tensor, op: Op) -> Result<NodeId> {
        self.push_extra(value, op, None)
    }

    fn push_extra(&mut self, value: Tensor, op: Op, extra: Option<NodeId>) -> Result<NodeId> {
        if !value.is_finite() {
            return Err(Error::NonFinite(format!("op output at node {}", self.nodes.len())));
        }
        self.nodes.push(Node { value, op, extra });
        Ok(NodeId(self.nodes.len() - 1))
    }

    /// Inserts a constant or parameter value as a leaf.
    pub fn leaf(&mut self, value: Tensor) -> NodeId {
        self.nodes.push(Node { value, op: Op::Leaf, extra: None });
        NodeId(self.nodes.len() - 1)
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let v = self.value(a).add(self.value(b))?;
        self.push(v, Op::Add { a, b })
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let v = self.value(a).sub(self.value(b))?;
        self.push(v, Op::Sub { a, b })
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let v = self.value(a).matmul(self.value(b))?;
        self.push(v, Op::Matmul { a, b })
    }

    /// Applies a non-trainable sparse matrix: y = m x.
    pub fn spmm(&mut self, m: Rc<SparseMatrix>, x: NodeId) -> Result<NodeId> {
        let v = spmm(&m, self.value(x))?;
        self.push(v, Op::Spmm { m, x })
    }

    /// Scales column j of x by w_j. `w` is a (1, c) node, or (1, 1) which
    /// broadcasts a single weight across all channels.
    pub fn channel_scale(&mut self, x: NodeId, w: NodeId) -> Result<NodeId> {
        let xv = self.value(x);
        let wv = self.value(w);
        if wv.rows() != 1 || (wv.cols() != xv.cols() && wv.cols() != 1) {
            return Err(Error::ShapeMismatch(format!(
                "channel_scale weights (1, {}) against {} columns",
                wv.cols(),
                xv.cols()
            )));
        }
        let broadcast = wv.cols() == 1;
        let mut out = Tensor::zeros(xv.rows(), xv.cols());
        for i in 0..xv.rows() {
            for j in 0..xv.cols() {
                let w_j = if broadcast { wv.get(0, 0) } else { wv.get(0, j) };
                out.set(i, j, w_j * xv.get(i, j));
            }
        }
        self.push(out, Op::ChannelScale { x, w })
    }

    pub fn relu(&mut self, x: NodeId) -> Result<NodeId> {
        let v = self.value(x);
        let out = Tensor::new(
            v.rows(),
            v.cols(),
            v.data().iter().map(|&a| a.max(0.0)).collect(),
        )?;
        self.push(out, Op::Relu { x })
    }

    pub fn leaky_relu(&mut self, x: NodeId, slope: f64) -> Result<NodeId> {
        let v = self.value(x);
        let out = Tensor::new(
            v.rows(),
            v.cols(),
            v.data().iter().map(|&a| if a >= 0.0 { a } else { slope * a }).collect(),
        )?;
        self.push(out, Op::LeakyRelu { x, slope })
    }

    /// Inverted dropout: at train time survivors are scaled by 1/(1-p); at
    /// eval time the op is the identity.
    pub fn dropout(&mut self, x: NodeId, p: f64, training: bool, rng: &mut Rng) -> Result<NodeId> {
        if !(0.0..1.0).contains(&p) {
            return Err(Error::InvalidArgument(format!("dropout p = {}", p)));
        }
        if !training || p == 0.0 {
            let v = self.value(x).clone();
            let n = v.len();
            return self.push(v, Op::Dropout { x, mask: vec![1.0; n] });
        }
        let keep = 1.0 / (1.0 - p);
        let v = self.value(x);
        let mask: Vec<f64> = (0..v.len())
            .map(|_| if rng.gen::<f64>() < p { 0.0 } else { keep })
            .collect();
        let out = Tensor::new(
            v.rows(),
            v.cols(),
            v.data().iter().zip(&mask).map(|(&a, &m)| a * m).collect(),
        )?;
        self.push(out, Op::Dropout { x, mask })
    }

    pub fn gather_rows(&mut self, x: NodeId, idx: Rc<Vec<usize>>) -> Result<NodeId> {
        let v = self.value(x);
        let c = v.cols();
        let mut out = Tensor::zeros(idx.len(), c);
        for (r, &i) in idx.iter().enumerate() {
            if i >= v.rows() {
                return Err(Error::IndexOutOfRange(format!("gather row {}", i)));
            }
            out.data_mut()[r * c..(r + 1) * c].copy_from_slice(v.row(i));
        }
        self.push(out, Op::GatherRows { x, idx })
    }

    /// Sums rows of `x` into `n` output rows keyed by `idx`.
    pub fn scatter_add(&mut self, x: NodeId, idx: Rc<Vec<usize>>, n: usize) -> Result<NodeId> {
        let v = self.value(x);
        if idx.len() != v.rows() {
            return Err(Error::ShapeMismatch("scatter_add index length".into()));
        }
        let c = v.cols();
        let mut out = Tensor::zeros(n, c);
        for (r, &i) in idx.iter().enumerate() {
            if i >= n {
                return Err(Error::IndexOutOfRange(format!("scatter target {}", i)));
            }
            let src = v.row(r);
            let dst = &mut out.data_mut()[i * c..(i + 1) * c];
            for k in 0..c {
                dst[k] += src[k];
            }
        }
        self.push(out, Op::ScatterAdd { x, idx })
    }

    /// Scales row e of x by v_e; `v` is an (E, 1) node.
    pub fn scale_rows(&mut self, x: NodeId, v: NodeId) -> Result<NodeId> {
        let xv = self.value(x);
        let vv = self.value(v);
        if vv.cols() != 1 || vv.rows() != xv.rows() {
            return Err(Error::ShapeMismatch("scale_rows weights".into()));
        }
        let c = xv.cols();
        let mut out = Tensor::zeros(xv.rows(), c);
        for i in 0..xv.rows() {
            let s = vv.get(i, 0);
            let src = xv.row(i);
            let dst = &mut out.data_mut()[i * c..(i + 1) * c];
            for k in 0..c {
                dst[k] = s * src[k];
            }
        }
        self.push(out, Op::ScaleRows { x, v })
    }

    pub fn concat_channels(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let (av, bv) = (self.value(a), self.value(b));
        if av.rows() != bv.rows() {
            return Err(Error::ShapeMismatch("concat_channels row counts".into()));
        }
        let (ca, cb) = (av.cols(), bv.cols());
        let mut out = Tensor::zeros(av.rows(), ca + cb);
        for i in 0..av.rows() {
            out.data_mut()[i * (ca + cb)..i * (ca + cb) + ca].copy_from_slice(av.row(i));
            out.data_mut()[i * (ca + cb) + ca..(i + 1) * (ca + cb)].copy_from_slice(bv.row(i));
        }
        self.push(out, Op::Concat { a, b })
    }

    /// Softmax over entries sharing a segment id: for logits x (E, 1) and
    /// per-entry segment ids < n, the output within each segment sums to 1.
    /// Computed with per-segment max subtraction.
    pub fn segment_softmax(&mut self, x: NodeId, segments: Rc<Vec<usize>>, n: usize) -> Result<NodeId> {
        let v = self.value(x);
        if v.cols() != 1 || v.rows() != segments.len() {
            return Err(Error::ShapeMismatch("segment_softmax expects (E, 1) logits".into()));
        }
        if let Some(&bad) = segments.iter().find(|&&s| s >= n) {
            return Err(Error::IndexOutOfRange(format!("segment id {}", bad)));
        }
        let mut seg_max = vec![f64::NEG_INFINITY; n];
        for (e, &s) in segments.iter().enumerate() {
            seg_max[s] = seg_max[s].max(v.get(e, 0));
        }
        let exps: Vec<f64> = segments
            .iter()
            .enumerate()
            .map(|(e, &s)| (v.get(e, 0) - seg_max[s]).exp())
            .collect();
        let mut seg_sum = vec![0.0; n];
        for (e, &s) in segments.iter().enumerate() {
            seg_sum[s] += exps[e];
        }
        let out = Tensor::new(
            segments.len(),
            1,
            segments.iter().enumerate().map(|(e, &s)| exps[e] / seg_sum[s]).collect(),
        )?;
        self.push(out, Op::SegmentSoftmax { x, segments })
    }

    /// Per-column batch normalization. In training mode the batch mean and
    /// (biased) variance standardize x and the caller-owned running stats
    /// are updated in place; in eval mode the running stats are used.
    #[allow(clippy::too_many_arguments)]
    pub fn batch_norm(
        &mut self,
        x: NodeId,
        gamma: NodeId,
        beta: NodeId,
        running_mean: &mut [f64],
        running_var: &mut [f64],
        training: bool,
        eps: f64,
        momentum: f64,
    ) -> Result<NodeId> {
        let v = self.value(x);
        let (n, c) = v.shape();
        if n == 0 {
            return Err(Error::InvalidArgument("batch_norm on zero rows".into()));
        }
        let gv = self.value(gamma);
        let bv = self.value(beta);
        if gv.cols() != c || bv.cols() != c || running_mean.len() != c || running_var.len() != c {
            return Err(Error::ShapeMismatch("batch_norm parameter widths".into()));
        }
        let (mean, var) = if training {
            let mut mean = vec![0.0; c];
            for i in 0..n {
                for j in 0..c {
                    mean[j] += v.get(i, j);
                }
            }
            mean.iter_mut().for_each(|m| *m /= n as f64);
            let mut var = vec![0.0; c];
            for i in 0..n {
                for j in 0..c {
                    let d = v.get(i, j) - mean[j];
                    var[j] += d * d;
                }
            }
            var.iter_mut().for_each(|s| *s /= n as f64);
            for j in 0..c {
                running_mean[j] = (1.0 - momentum) * running_mean[j] + momentum * mean[j];
                running_var[j] = (1.0 - momentum) * running_var[j] + momentum * var[j];
            }
            (mean, var)
        } else {
            (running_mean.to_vec(), running_var.to_vec())
        };
        let inv_std: Vec<f64> = var.iter().map(|&s| 1.0 / (s + eps).sqrt()).collect();
        let mut xhat = Tensor::zeros(n, c);
        let mut out = Tensor::zeros(n, c);
        for i in 0..n {
            for j in 0..c {
                let h = (v.get(i, j) - mean[j]) * inv_std[j];
                xhat.set(i, j, h);
                out.set(i, j, gv.get(0, j) * h + bv.get(0, j));
            }
        }
        self.push_extra(out, Op::BatchNorm { x, gamma, inv_std, xhat, training }, Some(beta))
    }

    /// Sums node rows per graph id into one row per graph. `gids` must be
    /// nondecreasing with values < g.
    pub fn global_add_pool(&mut self, x: NodeId, gids: Rc<Vec<usize>>, g: usize) -> Result<NodeId> {
        let v = self.value(x);
        if gids.len() != v.rows() {
            return Err(Error::ShapeMismatch("global_add_pool id length".into()));
        }
        if gids.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidArgument("graph ids must be nondecreasing".into()));
        }
        if let Some(&bad) = gids.iter().find(|&&s| s >= g) {
            return Err(Error::IndexOutOfRange(format!("graph id {}", bad)));
        }
        let c = v.cols();
        let mut out = Tensor::zeros(g, c);
        for (i, &k) in gids.iter().enumerate() {
            let src = v.row(i);
            let dst = &mut out.data_mut()[k * c..(k + 1) * c];
            for j in 0..c {
                dst[j] += src[j];
            }
        }
        self.push(out, Op::AddPool { x, gids })
    }

    /// Mean over masked rows of -log softmax(logits)[label].
    pub fn cross_entropy(
        &mut self,
        logits: NodeId,
        labels: Rc<Vec<usize>>,
        mask: Rc<Vec<usize>>,
    ) -> Result<NodeId> {
        let v = self.value(logits);
        let (n, k) = v.shape();
        if labels.len() != n {
            return Err(Error::ShapeMismatch("cross_entropy label count".into()));
        }
        if mask.is_empty() {
            return Err(Error::InvalidArgument("cross_entropy with empty mask".into()));
        }
        let mut probs = Tensor::zeros(n, k);
        let mut loss = 0.0;
        for &i in mask.iter() {
            if i >= n {
                return Err(Error::IndexOutOfRange(format!("mask row {}", i)));
            }
            if labels[i] >= k {
                return Err(Error::IndexOutOfRange(format!(
                    "label {} with {} classes",
                    labels[i], k
                )));
            }
            let row = v.row(i);
            let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let sum: f64 = row.iter().map(|&z| (z - max).exp()).sum();
            for j in 0..k {
                probs.set(i, j, (row[j] - max).exp() / sum);
            }
            loss += max + sum.ln() - row[labels[i]];
        }
        loss /= mask.len() as f64;
        self.push(Tensor::scalar(loss), Op::CrossEntropy { logits, labels, mask, probs })
    }

    /// Mean elementwise binary cross-entropy with logits over masked rows,
    /// in the stable form max(z,0) - z t + ln(1 + exp(-|z|)).
    pub fn bce_with_logits(
        &mut self,
        logits: NodeId,
        targets: &Tensor,
        mask: Rc<Vec<usize>>,
    ) -> Result<NodeId> {
        let v = self.value(logits);
        if v.shape() != targets.shape() {
            return Err(Error::ShapeMismatch("bce targets shape".into()));
        }
        if mask.is_empty() {
            return Err(Error::InvalidArgument("bce with empty mask".into()));
        }
        let c = v.cols();
        let mut loss = 0.0;
        for &i in mask.iter() {
            if i >= v.rows() {
                return Err(Error::IndexOutOfRange(format!("mask row {}", i)));
            }
            for j in 0..c {
                let z = v.get(i, j);
                let t = targets.get(i, j);
                loss += z.max(0.0) - z * t + (-z.abs()).exp().ln_1p();
            }
        }
        loss /= (mask.len() * c) as f64;
        self.push(Tensor::scalar(loss), Op::BceWithLogits { logits, targets: targets.clone(), mask })
    }

    /// Mean squared error against a constant target.
    pub fn mse(&mut self, pred: NodeId, target: &Tensor) -> Result<NodeId> {
        let v = self.value(pred);
        if v.shape() != target.shape() {
            return Err(Error::ShapeMismatch("mse target shape".into()));
        }
        let loss = v
            .data()
            .iter()
            .zip(target.data())
            .map(|(&a, &b)| (a - b) * (a - b))
            .sum::<f64>()
            / v.len() as f64;
        self.push(Tensor::scalar(loss), Op::Mse { pred, target: target.clone() })
    }

    pub fn sum_all(&mut self, x: NodeId) -> Result<NodeId> {
        let s = self.value(x).sum();
        self.push(Tensor::scalar(s), Op::SumAll { x })
    }

    /// Reverse sweep from a scalar loss node. Gradients accumulate
    /// additively across multiple uses of a node.
    pub fn backward(&self, loss: NodeId) -> Result<Gradients> {
        if self.value(loss).shape() != (1, 1) {
            return Err(Error::InvalidArgument("backward from a non-scalar node".into()));
        }
        let mut grads: Vec<Option<Tensor>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[loss.0] = Some(Tensor::scalar(1.0));
        for id in (0..=loss.0).rev() {
            let Some(g) = grads[id].take() else { continue };
            if !g.is_finite() {
                return Err(Error::NonFinite(format!("gradient at op index {}", id)));
            }
            self.backprop_node(id, &g, &mut grads)?;
            grads[id] = Some(g);
        }
        Ok(Gradients { grads })
    }

    fn accumulate(&self, grads: &mut [Option<Tensor>], id: NodeId, contrib: Tensor) {
        match &mut grads[id.0] {
            Some(g) => g.add_assign(&contrib).expect("gradient shape"),
            slot @ None => *slot = Some(contrib),
        }
    }

    fn backprop_node(&self, id: usize, g: &Tensor, grads: &mut [Option<Tensor>]) -> Result<()> {
        let node = &self.nodes[id];
        match &node.op {
            Op::Leaf => {}
            Op::Add { a, b } => {
                self.accumulate(grads, *a, g.clone());
                self.accumulate(grads, *b, g.clone());
            }
            Op::Sub { a, b } => {
                self.accumulate(grads, *a, g.clone());
                self.accumulate(grads, *b, g.scale(-1.0));
            }
            Op::Matmul { a, b } => {
                let da = g.matmul(&self.value(*b).transpose())?;
                let db = self.value(*a).transpose().matmul(g)?;
                self.accumulate(grads, *a, da);
                self.accumulate(grads, *b, db);
            }
            Op::Spmm { m, x } => {
                let dx = spmm(&m.transpose(), g)?;
                self.accumulate(grads, *x, dx);
            }
            Op::ChannelScale { x, w } => {
                let xv = self.value(*x);
                let wv = self.value(*w);
                let broadcast = wv.cols() == 1;
                let mut dx = Tensor::zeros(xv.rows(), xv.cols());
                let mut dw = Tensor::zeros(1, wv.cols());
                for i in 0..xv.rows() {
                    for j in 0..xv.cols() {
                        let w_j = if broadcast { wv.get(0, 0) } else { wv.get(0, j) };
                        dx.set(i, j, w_j * g.get(i, j));
                        let slot = if broadcast { 0 } else { j };
                        dw.set(0, slot, dw.get(0, slot) + g.get(i, j) * xv.get(i, j));
                    }
                }
                self.accumulate(grads, *x, dx);
                self.accumulate(grads, *w, dw);
            }
            Op::Relu { x } => {
                let xv = self.value(*x);
                let dx = Tensor::new(
                    xv.rows(),
                    xv.cols(),
                    xv.data()
                        .iter()
                        .zip(g.data())
                        .map(|(&a, &gg)| if a > 0.0 { gg } else { 0.0 })
                        .collect(),
                )?;
                self.accumulate(grads, *x, dx);
            }
            Op::LeakyRelu { x, slope } => {
                let xv = self.value(*x);
                let dx = Tensor::new(
                    xv.rows(),
                    xv.cols(),
                    xv.data()
                        .iter()
                        .zip(g.data())
                        .map(|(&a, &gg)| if a >= 0.0 { gg } else { slope * gg })
                        .collect(),
                )?;
                self.accumulate(grads, *x, dx);
            }
            Op::Dropout { x, mask } => {
                let xv = self.value(*x);
                let dx = Tensor::new(
                    xv.rows(),
                    xv.cols(),
                    g.data().iter().zip(mask).map(|(&gg, &m)| gg * m).collect(),
                )?;
                self.accumulate(grads, *x, dx);
            }
            Op::GatherRows { x, idx } => {
                let xv = self.value(*x);
                let c = xv.cols();
                let mut dx = Tensor::zeros(xv.rows(), c);
                for (r, &i) in idx.iter().enumerate() {
                    let src = g.row(r);
                    let dst = &mut dx.data_mut()[i * c..(i + 1) * c];
                    for k in 0..c {
                        dst[k] += src[k];
                    }
                }
                self.accumulate(grads, *x, dx);
            }
            Op::ScatterAdd { x, idx } => {
                let xv = self.value(*x);
                let c = xv.cols();
                let mut dx = Tensor::zeros(xv.rows(), c);
                for (r, &i) in idx.iter().enumerate() {
                    dx.data_mut()[r * c..(r + 1) * c].copy_from_slice(g.row(i));
                }
                self.accumulate(grads, *x, dx);
            }
            Op::ScaleRows { x, v } => {
                let xv = self.value(*x);
                let vv = self.value(*v);
                let c = xv.cols();
                let mut dx = Tensor::zeros(xv.rows(), c);
                let mut dv = Tensor::zeros(vv.rows(), 1);
                for i in 0..xv.rows() {
                    let s = vv.get(i, 0);
                    let mut dot = 0.0;
                    for k in 0..c {
                        dx.set(i, k, s * g.get(i, k));
                        dot += g.get(i, k) * xv.get(i, k);
                    }
                    dv.set(i, 0, dot);
                }
                self.accumulate(grads, *x, dx);
                self.accumulate(grads, *v, dv);
            }
            Op::Concat { a, b } => {
                let (av, bv) = (self.value(*a), self.value(*b));
                let (ca, cb) = (av.cols(), bv.cols());
                let mut da = Tensor::zeros(av.rows(), ca);
                let mut db = Tensor::zeros(bv.rows(), cb);
                for i in 0..av.rows() {
                    da.data_mut()[i * ca..(i + 1) * ca].copy_from_slice(&g.row(i)[..ca]);
                    db.data_mut()[i * cb..(i + 1) * cb].copy_from_slice(&g.row(i)[ca..]);
                }
                self.accumulate(grads, *a, da);
                self.accumulate(grads, *b, db);
            }
            Op::SegmentSoftmax { x, segments } => {
                let y = &node.value;
                let n_seg = segments.iter().copied().max().map_or(0, |m| m + 1);
                let mut seg_dot = vec![0.0; n_seg];
                for (e, &s) in segments.iter().enumerate() {
                    seg_dot[s] += g.get(e, 0) * y.get(e, 0);
                }
                let dx = Tensor::new(
                    segments.len(),
                    1,
                    segments
                        .iter()
                        .enumerate()
                        .map(|(e, &s)| y.get(e, 0) * (g.get(e, 0) - seg_dot[s]))
                        .collect(),
                )?;
                self.accumulate(grads, *x, dx);
            }
            Op::BatchNorm { x, gamma, inv_std, xhat, training } => {
                let beta = node.extra.expect("batch_norm beta node");
                let (n, c) = xhat.shape();
                let gv = self.value(*gamma);
                let mut dgamma = Tensor::zeros(1, c);
                let mut dbeta = Tensor::zeros(1, c);
                for i in 0..n {
                    for j in 0..c {
                        dgamma.set(0, j, dgamma.get(0, j) + g.get(i, j) * xhat.get(i, j));
                        dbeta.set(0, j, dbeta.get(0, j) + g.get(i, j));
                    }
                }
                let mut dx = Tensor::zeros(n, c);
                if *training {
                    // full backward through batch mean and variance
                    for j in 0..c {
                        let mut sum_g = 0.0;
                        let mut sum_gh = 0.0;
                        for i in 0..n {
                            sum_g += g.get(i, j);
                            sum_gh += g.get(i, j) * xhat.get(i, j);
                        }
                        let coef = gv.get(0, j) * inv_std[j] / n as f64;
                        for i in 0..n {
                            let v = n as f64 * g.get(i, j) - sum_g - xhat.get(i, j) * sum_gh;
                            dx.set(i, j, coef * v);
                        }
                    }
                } else {
                    for j in 0..c {
                        let coef = gv.get(0, j) * inv_std[j];
                        for i in 0..n {
                            dx.set(i, j, coef * g.get(i, j));
                        }
                    }
                }
                self.accumulate(grads, *x, dx);
                self.accumulate(grads, *gamma, dgamma);
                self.accumulate(grads, beta, dbeta);
            }
            Op::AddPool { x, gids } => {
                let xv = self.value(*x);
                let c = xv.cols();
                let mut dx = Tensor::zeros(xv.rows(), c);
                for (i, &k) in gids.iter().enumerate() {
                    dx.data_mut()[i * c..(i + 1) * c].copy_from_slice(g.row(k));
                }
                self.accumulate(grads, *x, dx);
            }
            Op::CrossEntropy { logits, labels, mask, probs } => {
                let v = self.value(*logits);
                let (n, k) = v.shape();
                let scale = g.item() / mask.len() as f64;
                let mut dl = Tensor::zeros(n, k);
                for &i in mask.iter() {
                    for j in 0..k {
                        let one = if labels[i] == j { 1.0 } else { 0.0 };
                        dl.set(i, j, scale * (probs.get(i, j) - one));
                    }
                }
                self.accumulate(grads, *logits, dl);
            }
            Op::BceWithLogits { logits, targets, mask } => {
                let v = self.value(*logits);
                let (n, c) = v.shape();
                let scale = g.item() / (mask.len() * c) as f64;
                let mut dl = Tensor::zeros(n, c);
                for &i in mask.iter() {
                    for j in 0..c {
                        let z = v.get(i, j);
                        let sig = 1.0 / (1.0 + (-z).exp());
                        dl.set(i, j, scale * (sig - targets.get(i, j)));
                    }
                }
                self.accumulate(grads, *logits, dl);
            }
            Op::Mse { pred, target } => {
                let v = self.value(*pred);
                let scale = 2.0 * g.item() / v.len() as f64;
                let dp = Tensor::new(
                    v.rows(),
                    v.cols(),
                    v.data()
                        .iter()
                        .zip(target.data())
                        .map(|(&a, &b)| scale * (a - b))
                        .collect(),
                )?;
                self.accumulate(grads, *pred, dp);
            }
            Op::SumAll { x } => {
                let xv = self.value(*x);
                self.accumulate(grads, *x, Tensor::filled(xv.rows(), xv.cols(), g.item()));
            }
        }
        Ok(())
    }
}
