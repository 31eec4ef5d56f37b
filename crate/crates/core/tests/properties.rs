//! Randomized structural invariants: graph-operator identities, energy
//! identities, segment-softmax normalization, and tape linearity.

use std::rc::Rc;

use proptest::prelude::*;

use omega_gnn::graph::{
    incidence_matrix, normalized_laplacian, normalized_propagator, spmm, SparseGraph, SparseMatrix,
};
use omega_gnn::rng::{stream, Stream};
use omega_gnn::spectral::{dirichlet_energy, gat_energy};
use omega_gnn::tape::Tape;
use omega_gnn::tensor::Tensor;

/// A random graph from a seed: n in 2..=12, each pair kept with the given
/// per-mille rate.
fn seeded_graph(seed: u64, n: usize, rate_pm: u64) -> SparseGraph {
    use rand::Rng;
    let mut rng = stream(seed, Stream::Data);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.gen_range(0..1000) < rate_pm {
                edges.push((i, j));
            }
        }
    }
    SparseGraph::from_edge_list(&edges, n).unwrap()
}

fn seeded_tensor(seed: u64, rows: usize, cols: usize) -> Tensor {
    use rand::Rng;
    let mut rng = stream(seed, Stream::Probe);
    Tensor::new(rows, cols, (0..rows * cols).map(|_| rng.gen_range(-2.0..2.0)).collect()).unwrap()
}

fn dense_laplacian(g: &SparseGraph) -> Tensor {
    // D - A, the unnormalized graph Laplacian
    let n = g.num_nodes();
    let mut l = Tensor::zeros(n, n);
    for i in 0..n {
        l.set(i, i, g.degree(i) as f64);
        for &j in g.neighbors(i) {
            l.set(i, j, -1.0);
        }
    }
    l
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn incidence_squares_to_laplacian(seed in 0u64..1000, n in 2usize..12, rate in 100u64..900) {
        let g = seeded_graph(seed, n, rate);
        let gm = incidence_matrix(&g).to_dense();
        let gtg = gm.transpose().matmul(&gm).unwrap();
        prop_assert!(gtg.max_abs_diff(&dense_laplacian(&g)) < 1e-12);
    }

    #[test]
    fn propagator_is_identity_minus_laplacian(seed in 0u64..1000, n in 2usize..12, rate in 100u64..900) {
        let g = seeded_graph(seed, n, rate);
        let p = normalized_propagator(&g).to_dense();
        let l = normalized_laplacian(&g).to_dense();
        let sum = p.add(&l).unwrap();
        prop_assert!(sum.max_abs_diff(&Tensor::identity(n)) < 1e-12);
    }

    #[test]
    fn dirichlet_energy_equals_laplacian_quadratic_form(
        seed in 0u64..1000, n in 2usize..12, rate in 100u64..900, c in 1usize..4
    ) {
        let g = seeded_graph(seed, n, rate);
        let f = seeded_tensor(seed ^ 0xabc, n, c);
        let e = dirichlet_energy(&f, &g).unwrap();
        let l = normalized_laplacian(&g);
        let lf = spmm(&l, &f).unwrap();
        let quad: f64 = (0..n).flat_map(|i| (0..c).map(move |j| (i, j)))
            .map(|(i, j)| f.get(i, j) * lf.get(i, j))
            .sum();
        prop_assert!((e - quad).abs() < 1e-10 * e.abs().max(1.0), "{} vs {}", e, quad);
    }

    #[test]
    fn gat_energy_equals_unnormalized_quadratic_form(
        seed in 0u64..1000, n in 2usize..12, rate in 100u64..900, c in 1usize..4
    ) {
        let g = seeded_graph(seed, n, rate);
        let f = seeded_tensor(seed ^ 0xdef, n, c);
        let e = gat_energy(&f, &g).unwrap();
        let lf = dense_laplacian(&g).matmul(&f).unwrap();
        let quad: f64 = (0..n).flat_map(|i| (0..c).map(move |j| (i, j)))
            .map(|(i, j)| f.get(i, j) * lf.get(i, j))
            .sum();
        prop_assert!((e - quad).abs() < 1e-10 * e.abs().max(1.0), "{} vs {}", e, quad);
    }

    #[test]
    fn segment_softmax_rows_sum_to_one(seed in 0u64..1000, segs in 1usize..5, per in 1usize..5) {
        let total = segs * per;
        let segments: Rc<Vec<usize>> = Rc::new((0..total).map(|i| i / per).collect());
        let x = seeded_tensor(seed ^ 0x123, total, 1);
        let mut tape = Tape::new();
        let leaf = tape.leaf(x);
        let y = tape.segment_softmax(leaf, segments.clone(), segs).unwrap();
        let yv = tape.value(y);
        for s in 0..segs {
            let sum: f64 = (0..total).filter(|&i| segments[i] == s).map(|i| yv.get(i, 0)).sum();
            prop_assert!((sum - 1.0).abs() < 1e-12, "segment {} sums to {}", s, sum);
        }
        prop_assert!(yv.data().iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn backward_is_replayable_and_linear(seed in 0u64..1000) {
        // two backward passes over the same tape agree exactly, and the
        // gradient of a doubled loss is exactly twice the gradient
        let g = seeded_graph(seed, 6, 500);
        let p = Rc::new(normalized_propagator(&g));
        let x = seeded_tensor(seed ^ 0x777, 6, 3);
        let w = seeded_tensor(seed ^ 0x888, 3, 2);
        let target = seeded_tensor(seed ^ 0x999, 6, 2);

        let mut tape = Tape::new();
        let xl = tape.leaf(x);
        let wl = tape.leaf(w);
        let prop = tape.spmm(p.clone(), xl).unwrap();
        let h = tape.matmul(prop, wl).unwrap();
        let act = tape.leaky_relu(h, 0.2).unwrap();
        let loss = tape.mse(act, &target).unwrap();
        let doubled = tape.add(loss, loss).unwrap();

        let g1 = tape.backward(loss).unwrap();
        let g2 = tape.backward(loss).unwrap();
        let (ax1, ax2) = (g1.get(&tape, xl), g2.get(&tape, xl));
        let (aw1, aw2) = (g1.get(&tape, wl), g2.get(&tape, wl));
        prop_assert_eq!(ax1.data(), ax2.data());
        prop_assert_eq!(aw1.data(), aw2.data());

        let gd = tape.backward(doubled).unwrap();
        let gx1 = g1.get(&tape, xl);
        let gxd = gd.get(&tape, xl);
        for (a, b) in gx1.data().iter().zip(gxd.data()) {
            prop_assert_eq!(2.0 * a, *b);
        }
    }

    #[test]
    fn propagator_rows_near_stochastic_in_degree_scaling(seed in 0u64..500, n in 2usize..10) {
        // D^{1/2} 1 is a fixed point: P (D^{1/2} 1) = D^{1/2} 1 exactly
        let g = seeded_graph(seed, n, 400);
        let p = normalized_propagator(&g);
        let v = Tensor::new(
            n, 1,
            (0..n).map(|i| ((1 + g.degree(i)) as f64).sqrt()).collect(),
        ).unwrap();
        let pv = spmm(&p, &v).unwrap();
        prop_assert!(pv.max_abs_diff(&v) < 1e-12);
    }
}

#[test]
fn sparse_transpose_is_involution() {
    let g = seeded_graph(17, 9, 400);
    let p = normalized_propagator(&g);
    let ptt = p.transpose().transpose();
    assert_eq!(ptt.to_dense().data(), p.to_dense().data());
    let i = SparseMatrix::identity(4);
    assert_eq!(i.transpose().to_dense().data(), Tensor::identity(4).data());
}
