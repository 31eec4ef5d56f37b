//! Finite-difference gradient checks: every tape op and both full
//! architectures against a central-difference oracle.

use std::rc::Rc;

use omega_gnn::graph::{normalized_propagator, SparseGraph};
use omega_gnn::layers::{
    GnnKind, GraphClassifierModel, GraphContext, ModelSpec, NodeClassifierModel, OmegaMode,
};
use omega_gnn::rng::{stream, Stream};
use omega_gnn::tape::{NodeId, Tape};
use omega_gnn::tensor::Tensor;

const H: f64 = 1e-5;
const TOL: f64 = 1e-5;

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / (a.abs() + b.abs()).max(1.0)
}

/// Checks d(loss)/d(inputs) for a scalar-valued tape program against
/// central differences, perturbing every entry of every input.
fn check<F>(inputs: &[Tensor], build: F) -> f64
where
    F: Fn(&mut Tape, &[NodeId]) -> NodeId,
{
    let run = |tensors: &[Tensor]| -> (f64, Vec<Tensor>) {
        let mut tape = Tape::new();
        let leaves: Vec<NodeId> = tensors.iter().map(|t| tape.leaf(t.clone())).collect();
        let loss = build(&mut tape, &leaves);
        let value = tape.value(loss).item();
        let grads = tape.backward(loss).unwrap();
        let g = leaves.iter().map(|&l| grads.get(&tape, l)).collect();
        (value, g)
    };
    let (_, analytic) = run(inputs);
    let mut worst: f64 = 0.0;
    for (ti, t) in inputs.iter().enumerate() {
        for k in 0..t.len() {
            let mut plus = inputs.to_vec();
            plus[ti].data_mut()[k] = t.data()[k] + H;
            let mut minus = inputs.to_vec();
            minus[ti].data_mut()[k] = t.data()[k] - H;
            let numeric = (run(&plus).0 - run(&minus).0) / (2.0 * H);
            let a = analytic[ti].data()[k];
            worst = worst.max(rel_err(a, numeric));
        }
    }
    worst
}

fn rand_tensor(rows: usize, cols: usize, seed: u64) -> Tensor {
    use rand::Rng;
    let mut rng = stream(seed, Stream::Probe);
    Tensor::new(rows, cols, (0..rows * cols).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
}

/// Random tensor bounded away from zero so ReLU-family kinks are not
/// crossed by the finite-difference step.
fn rand_tensor_off_kink(rows: usize, cols: usize, seed: u64) -> Tensor {
    let mut t = rand_tensor(rows, cols, seed);
    for v in t.data_mut() {
        if v.abs() < 0.05 {
            *v += 0.1_f64.copysign(*v);
        }
    }
    t
}

/// Moves parameters off special points (identity K, all-ones omega): those
/// let exact zeros from one ReLU propagate onto the next ReLU's kink,
/// where the finite-difference oracle is invalid.
fn jitter_params(params: &mut [omega_gnn::tape::Parameter], seed: u64) {
    use rand::Rng;
    let mut rng = stream(seed, Stream::Probe);
    for p in params {
        for v in p.value.data_mut() {
            *v += rng.gen_range(0.05..0.15) * if rng.gen::<bool>() { 1.0 } else { -1.0 };
        }
    }
}

fn path_graph(n: usize) -> SparseGraph {
    let edges: Vec<(usize, usize)> = (0..n - 1).map(|i| (i, i + 1)).collect();
    SparseGraph::from_edge_list(&edges, n).unwrap()
}

#[test]
fn gradcheck_add_sub() {
    let a = rand_tensor(3, 4, 1);
    let b = rand_tensor(3, 4, 2);
    let target = rand_tensor(3, 4, 3);
    let err = check(&[a, b], |t, l| {
        let s = t.add(l[0], l[1]).unwrap();
        let d = t.sub(s, l[1]).unwrap();
        let s2 = t.add(d, l[1]).unwrap();
        t.mse(s2, &target).unwrap()
    });
    assert!(err < TOL, "rel err {}", err);
}

#[test]
fn gradcheck_matmul() {
    let a = rand_tensor(3, 4, 4);
    let b = rand_tensor(4, 2, 5);
    let target = rand_tensor(3, 2, 6);
    let err = check(&[a, b], |t, l| {
        let m = t.matmul(l[0], l[1]).unwrap();
        t.mse(m, &target).unwrap()
    });
    assert!(err < TOL, "rel err {}", err);
}

#[test]
fn gradcheck_spmm() {
    let g = path_graph(5);
    let p = Rc::new(normalized_propagator(&g));
    let x = rand_tensor(5, 3, 7);
    let target = rand_tensor(5, 3, 8);
    let err = check(&[x], |t, l| {
        let y = t.spmm(p.clone(), l[0]).unwrap();
        t.mse(y, &target).unwrap()
    });
    assert!(err < TOL, "rel err {}", err);
}

#[test]
fn gradcheck_channel_scale_broadcast_and_full() {
    let x = rand_tensor(4, 3, 9);
    let target = rand_tensor(4, 3, 10);
    for w_cols in [1usize, 3] {
        let w = rand_tensor(1, w_cols, 11);
        let err = check(&[x.clone(), w], |t, l| {
            let y = t.channel_scale(l[0], l[1]).unwrap();
            t.mse(y, &target).unwrap()
        });
        assert!(err < TOL, "width {} rel err {}", w_cols, err);
    }
}

#[test]
fn gradcheck_relu_and_leaky_relu() {
    let x = rand_tensor_off_kink(4, 3, 12);
    let target = rand_tensor(4, 3, 13);
    let err = check(&[x.clone()], |t, l| {
        let y = t.relu(l[0]).unwrap();
        t.mse(y, &target).unwrap()
    });
    assert!(err < TOL, "relu rel err {}", err);
    let err = check(&[x], |t, l| {
        let y = t.leaky_relu(l[0], 0.2).unwrap();
        t.mse(y, &target).unwrap()
    });
    assert!(err < TOL, "leaky relu rel err {}", err);
}

#[test]
fn gradcheck_dropout_fixed_mask() {
    let x = rand_tensor(5, 4, 14);
    let target = rand_tensor(5, 4, 15);
    // the mask must be identical across oracle evaluations: re-seed inside
    let err = check(&[x], |t, l| {
        let mut rng = stream(77, Stream::Dropout);
        let y = t.dropout(l[0], 0.4, true, &mut rng).unwrap();
        t.mse(y, &target).unwrap()
    });
    assert!(err < TOL, "rel err {}", err);
}

#[test]
fn gradcheck_gather_scatter_scale_rows() {
    let x = rand_tensor(4, 3, 16);
    let v = rand_tensor(6, 1, 17);
    let idx = Rc::new(vec![0usize, 2, 2, 3, 1, 0]);
    let target = rand_tensor(4, 3, 18);
    let err = check(&[x, v], |t, l| {
        let gathered = t.gather_rows(l[0], idx.clone()).unwrap();
        let scaled = t.scale_rows(gathered, l[1]).unwrap();
        let y = t.scatter_add(scaled, idx.clone(), 4).unwrap();
        t.mse(y, &target).unwrap()
    });
    assert!(err < TOL, "rel err {}", err);
}

#[test]
fn gradcheck_concat_channels() {
    let a = rand_tensor(3, 2, 19);
    let b = rand_tensor(3, 3, 20);
    let target = rand_tensor(3, 5, 21);
    let err = check(&[a, b], |t, l| {
        let y = t.concat_channels(l[0], l[1]).unwrap();
        t.mse(y, &target).unwrap()
    });
    assert!(err < TOL, "rel err {}", err);
}

#[test]
fn gradcheck_segment_softmax() {
    let x = rand_tensor(7, 1, 22);
    let segments = Rc::new(vec![0usize, 0, 0, 1, 1, 2, 2]);
    let target = rand_tensor(7, 1, 23);
    let err = check(&[x], |t, l| {
        let y = t.segment_softmax(l[0], segments.clone(), 3).unwrap();
        t.mse(y, &target).unwrap()
    });
    assert!(err < TOL, "rel err {}", err);
}

#[test]
fn gradcheck_batch_norm_train_and_eval() {
    let x = rand_tensor(6, 3, 24);
    let gamma = rand_tensor(1, 3, 25);
    let beta = rand_tensor(1, 3, 26);
    let target = rand_tensor(6, 3, 27);
    for training in [true, false] {
        let err = check(&[x.clone(), gamma.clone(), beta.clone()], |t, l| {
            let mut rm = vec![0.1, -0.2, 0.3];
            let mut rv = vec![1.1, 0.9, 1.3];
            let y = t.batch_norm(l[0], l[1], l[2], &mut rm, &mut rv, training, 1e-5, 0.1).unwrap();
            t.mse(y, &target).unwrap()
        });
        assert!(err < TOL, "training={} rel err {}", training, err);
    }
}

#[test]
fn gradcheck_global_add_pool() {
    let x = rand_tensor(5, 3, 28);
    let gids = Rc::new(vec![0usize, 0, 1, 1, 1]);
    let target = rand_tensor(2, 3, 29);
    let err = check(&[x], |t, l| {
        let y = t.global_add_pool(l[0], gids.clone(), 2).unwrap();
        t.mse(y, &target).unwrap()
    });
    assert!(err < TOL, "rel err {}", err);
}

#[test]
fn gradcheck_cross_entropy() {
    let logits = rand_tensor(5, 3, 30);
    let labels = Rc::new(vec![0usize, 2, 1, 0, 2]);
    let mask = Rc::new(vec![0usize, 1, 3]);
    let err = check(&[logits], |t, l| {
        t.cross_entropy(l[0], labels.clone(), mask.clone()).unwrap()
    });
    assert!(err < TOL, "rel err {}", err);
}

#[test]
fn gradcheck_bce_with_logits() {
    let logits = rand_tensor(4, 2, 31);
    let mut targets = rand_tensor(4, 2, 32);
    for v in targets.data_mut() {
        *v = if *v > 0.0 { 1.0 } else { 0.0 };
    }
    let mask = Rc::new(vec![0usize, 2, 3]);
    let err = check(&[logits], |t, l| {
        t.bce_with_logits(l[0], &targets, mask.clone()).unwrap()
    });
    assert!(err < TOL, "rel err {}", err);
}

#[test]
fn gradcheck_sum_all_and_mse() {
    let x = rand_tensor(3, 3, 33);
    let target = rand_tensor(3, 3, 34);
    let err = check(&[x.clone()], |t, l| t.sum_all(l[0]).unwrap());
    assert!(err < TOL, "sum rel err {}", err);
    let err = check(&[x], |t, l| t.mse(l[0], &target).unwrap());
    assert!(err < TOL, "mse rel err {}", err);
}

/// Full-model check: perturbs every model parameter entry and compares the
/// training-mode loss gradient against central differences.
fn check_model_params(kind: GnnKind, mode: OmegaMode) -> f64 {
    let spec = ModelSpec {
        kind,
        mode,
        in_channels: 2,
        hidden_channels: 4,
        out_channels: 3,
        num_layers: 2,
        dropout: 0.3,
        linear_output: false,
    };
    let mut init_rng = stream(3, Stream::Init);
    let mut model = NodeClassifierModel::new(spec, &mut init_rng);
    jitter_params(&mut model.params, 40);
    let g = SparseGraph::from_edge_list(&[(0, 1), (1, 2), (2, 3), (3, 4), (0, 4), (1, 3)], 5).unwrap();
    let ctx = GraphContext::new(g);
    let features = rand_tensor(5, 2, 35);
    let labels = Rc::new(vec![0usize, 1, 2, 0, 1]);
    let mask = Rc::new(vec![0usize, 1, 2, 3, 4]);

    let loss_of = |model: &NodeClassifierModel| -> f64 {
        let mut tape = Tape::new();
        let mut rng = stream(55, Stream::Dropout);
        let fwd = model.forward(&mut tape, &ctx, &features, true, &mut rng).unwrap();
        let loss = tape.cross_entropy(fwd.output, labels.clone(), mask.clone()).unwrap();
        tape.value(loss).item()
    };

    model.zero_grads();
    let mut tape = Tape::new();
    let mut rng = stream(55, Stream::Dropout);
    let fwd = model.forward(&mut tape, &ctx, &features, true, &mut rng).unwrap();
    let loss = tape.cross_entropy(fwd.output, labels.clone(), mask.clone()).unwrap();
    let grads = tape.backward(loss).unwrap();
    fwd.binder.accumulate(&tape, &grads, &mut model.params);

    let mut worst: f64 = 0.0;
    for pi in 0..model.params.len() {
        for k in 0..model.params[pi].value.len() {
            let orig = model.params[pi].value.data()[k];
            model.params[pi].value.data_mut()[k] = orig + H;
            let plus = loss_of(&model);
            model.params[pi].value.data_mut()[k] = orig - H;
            let minus = loss_of(&model);
            model.params[pi].value.data_mut()[k] = orig;
            let numeric = (plus - minus) / (2.0 * H);
            let analytic = model.params[pi].grad.data()[k];
            worst = worst.max(rel_err(analytic, numeric));
        }
    }
    worst
}

#[test]
fn gradcheck_node_classifier_wgcn_all_modes() {
    for mode in [OmegaMode::Global, OmegaMode::PerLayer, OmegaMode::PerLayerChannel] {
        let err = check_model_params(GnnKind::Gcn, mode);
        assert!(err < TOL, "mode {:?} rel err {}", mode, err);
    }
}

#[test]
fn gradcheck_node_classifier_wgat() {
    let err = check_model_params(GnnKind::Gat, OmegaMode::PerLayerChannel);
    assert!(err < TOL, "rel err {}", err);
}

#[test]
fn gradcheck_graph_classifier() {
    let spec = ModelSpec {
        kind: GnnKind::Gcn,
        mode: OmegaMode::PerLayer,
        in_channels: 2,
        hidden_channels: 4,
        out_channels: 2,
        num_layers: 2,
        dropout: 0.2,
        linear_output: false,
    };
    let mut init_rng = stream(5, Stream::Init);
    let mut model = GraphClassifierModel::new(spec, &mut init_rng);
    jitter_params(&mut model.params, 41);
    // two graphs batched block-diagonally
    let g = SparseGraph::from_edge_list(&[(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (5, 6)], 7).unwrap();
    let ctx = GraphContext::new(g);
    let features = rand_tensor(7, 2, 36);
    let gids = Rc::new(vec![0usize, 0, 0, 1, 1, 1, 1]);
    let labels = Rc::new(vec![0usize, 1]);
    let mask = Rc::new(vec![0usize, 1]);

    // batch-norm running stats mutate during forward; snapshot and restore
    // around every evaluation so each call sees identical state
    let stats0 = model.running_stats.clone();
    let loss_of = |model: &mut GraphClassifierModel| -> f64 {
        model.running_stats = stats0.clone();
        let mut tape = Tape::new();
        let mut rng = stream(66, Stream::Dropout);
        let fwd = model
            .forward(&mut tape, &ctx, &features, gids.clone(), 2, true, &mut rng)
            .unwrap();
        let loss = tape.cross_entropy(fwd.output, labels.clone(), mask.clone()).unwrap();
        tape.value(loss).item()
    };

    model.zero_grads();
    model.running_stats = stats0.clone();
    let mut tape = Tape::new();
    let mut rng = stream(66, Stream::Dropout);
    let fwd = model
        .forward(&mut tape, &ctx, &features, gids.clone(), 2, true, &mut rng)
        .unwrap();
    let loss = tape.cross_entropy(fwd.output, labels.clone(), mask.clone()).unwrap();
    let grads = tape.backward(loss).unwrap();
    fwd.binder.accumulate(&tape, &grads, &mut model.params);
    let analytic: Vec<Tensor> = model.params.iter().map(|p| p.grad.clone()).collect();

    let mut worst: f64 = 0.0;
    for pi in 0..model.params.len() {
        for k in 0..model.params[pi].value.len() {
            let orig = model.params[pi].value.data()[k];
            model.params[pi].value.data_mut()[k] = orig + H;
            let plus = loss_of(&mut model);
            model.params[pi].value.data_mut()[k] = orig - H;
            let minus = loss_of(&mut model);
            model.params[pi].value.data_mut()[k] = orig;
            let numeric = (plus - minus) / (2.0 * H);
            worst = worst.max(rel_err(analytic[pi].data()[k], numeric));
        }
    }
    assert!(worst < TOL, "rel err {}", worst);
}
