//! Energies, eigen-structure probes and matrix-exponential machinery for
//! the over-smoothing diagnostics.

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::graph::{normalized_laplacian, normalized_propagator, omega_propagator_apply, spmm, SparseGraph, SparseMatrix};
use crate::rng::{stream, Rng, Stream};
use crate::tensor::Tensor;

pub const POWER_ITER_CAP: usize = 10_000;
pub const POWER_ITER_TOL: f64 = 1e-12;

/// Per-layer feature energies and their ratios to the layer-0 energy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnergyKind {
    Dirichlet,
    Gat,
}

#[derive(Debug, Clone)]
pub struct EnergyTrace {
    pub kind: EnergyKind,
    pub energies: Vec<f64>,
    pub ratios: Vec<f64>,
}

impl EnergyTrace {
    /// Builds a trace from the per-layer feature tensors (entry 0 is the
    /// post-embedding features).
    pub fn from_features(features: &[Tensor], g: &SparseGraph, kind: EnergyKind) -> Result<Self> {
        let energies: Vec<f64> = features
            .iter()
            .map(|f| match kind {
                EnergyKind::Dirichlet => dirichlet_energy(f, g),
                EnergyKind::Gat => gat_energy(f, g),
            })
            .collect::<Result<_>>()?;
        let e0 = energies[0];
        let ratios = energies.iter().map(|&e| if e0 > 0.0 { e / e0 } else { 0.0 }).collect();
        Ok(EnergyTrace { kind, energies, ratios })
    }

    /// CSV with a `layer,energy,ratio` header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("layer,energy,ratio\n");
        for (l, (e, r)) in self.energies.iter().zip(&self.ratios).enumerate() {
            out.push_str(&format!("{},{},{}\n", l, e, r));
        }
        out
    }
}

/// Dirichlet energy: the double sum over directed neighbor pairs of
/// 1/2 || f_i / sqrt(1+d_i) - f_j / sqrt(1+d_j) ||^2. Each undirected edge
/// contributes twice.
pub fn dirichlet_energy(f: &Tensor, g: &SparseGraph) -> Result<f64> {
    if f.rows() != g.num_nodes() {
        return Err(Error::ShapeMismatch(format!(
            "features have {} rows for {} nodes",
            f.rows(),
            g.num_nodes()
        )));
    }
    let inv_sqrt: Vec<f64> = (0..g.num_nodes())
        .map(|i| 1.0 / ((1 + g.degree(i)) as f64).sqrt())
        .collect();
    let mut total = 0.0;
    for i in 0..g.num_nodes() {
        for &j in g.neighbors(i) {
            let fi = f.row(i);
            let fj = f.row(j);
            let mut s = 0.0;
            for k in 0..f.cols() {
                let d = fi[k] * inv_sqrt[i] - fj[k] * inv_sqrt[j];
                s += d * d;
            }
            total += 0.5 * s;
        }
    }
    Ok(total)
}

/// Un-normalized edge-difference energy: double sum of 1/2 ||f_i - f_j||^2.
/// Zero iff features are constant on each connected component.
pub fn gat_energy(f: &Tensor, g: &SparseGraph) -> Result<f64> {
    if f.rows() != g.num_nodes() {
        return Err(Error::ShapeMismatch("gat_energy feature rows".into()));
    }
    let mut total = 0.0;
    for i in 0..g.num_nodes() {
        for &j in g.neighbors(i) {
            let fi = f.row(i);
            let fj = f.row(j);
            let mut s = 0.0;
            for k in 0..f.cols() {
                let d = fi[k] - fj[k];
                s += d * d;
            }
            total += 0.5 * s;
        }
    }
    Ok(total)
}

/// A converged eigenpair; the vector has unit 2-norm.
#[derive(Debug, Clone)]
pub struct EigPair {
    pub value: f64,
    pub vector: Vec<f64>,
    pub converged: bool,
    /// Set when the two largest magnitudes are too close to separate.
    pub degenerate: bool,
}

fn normalize(v: &mut [f64]) -> f64 {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    norm
}

fn power_iterate<F: Fn(&[f64]) -> Vec<f64>>(
    apply: F,
    n: usize,
    iters: usize,
    tol: f64,
    seed: u64,
    deflate: Option<&[f64]>,
) -> EigPair {
    let mut rng = stream(seed, Stream::Probe);
    let mut v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    if let Some(d) = deflate {
        let dot: f64 = v.iter().zip(d).map(|(a, b)| a * b).sum();
        for (x, y) in v.iter_mut().zip(d) {
            *x -= dot * y;
        }
    }
    normalize(&mut v);
    let mut lambda = 0.0;
    let mut converged = false;
    for _ in 0..iters {
        let mut w = apply(&v);
        if let Some(d) = deflate {
            let dot: f64 = w.iter().zip(d).map(|(a, b)| a * b).sum();
            for (x, y) in w.iter_mut().zip(d) {
                *x -= dot * y;
            }
        }
        let rayleigh: f64 = w.iter().zip(&v).map(|(a, b)| a * b).sum();
        let norm = normalize(&mut w);
        if norm == 0.0 {
            return EigPair { value: 0.0, vector: v, converged: true, degenerate: false };
        }
        let delta = (rayleigh - lambda).abs();
        lambda = rayleigh;
        v = w;
        if delta < tol {
            converged = true;
            break;
        }
    }
    EigPair { value: lambda, vector: v, converged, degenerate: false }
}

/// Dominant-magnitude eigenpair of a symmetric sparse matrix by power
/// iteration with a fixed-seed start vector.
pub fn power_iteration(m: &SparseMatrix, iters: usize, tol: f64, seed: u64) -> Result<EigPair> {
    if m.rows() != m.cols() {
        return Err(Error::InvalidArgument("power_iteration needs a square matrix".into()));
    }
    let n = m.rows();
    let apply = |v: &[f64]| {
        let x = Tensor::new(n, 1, v.to_vec()).unwrap();
        spmm(m, &x).unwrap().into_data()
    };
    let pair = power_iterate(apply, n, iters, tol, seed, None);
    if !pair.converged {
        return Err(Error::Numerical(format!(
            "power iteration did not converge in {} iterations (last estimate {})",
            iters, pair.value
        )));
    }
    Ok(pair)
}

/// Second dominant eigenpair by deflating against a converged first pair.
pub fn power_iteration_deflated(
    m: &SparseMatrix,
    first: &EigPair,
    iters: usize,
    tol: f64,
    seed: u64,
) -> Result<EigPair> {
    let n = m.rows();
    let apply = |v: &[f64]| {
        let x = Tensor::new(n, 1, v.to_vec()).unwrap();
        spmm(m, &x).unwrap().into_data()
    };
    let pair = power_iterate(apply, n, iters, tol, seed, Some(&first.vector));
    Ok(pair)
}

/// The smoothing threshold 2 / rho(L_sym). At least 1 for any graph since
/// rho(L_sym) <= 2. Requires a connected graph.
pub fn omega_zero(g: &SparseGraph) -> Result<f64> {
    if !g.is_connected() {
        return Err(Error::InvalidArgument("omega_zero requires a connected graph".into()));
    }
    let l = normalized_laplacian(g);
    let rho = power_iteration(&l, POWER_ITER_CAP, POWER_ITER_TOL, 42)?.value;
    Ok(2.0 / rho)
}

/// Result of probing the leading eigenvector of I - omega (I - P).
#[derive(Debug, Clone)]
pub struct LeadingEigvecCheck {
    /// |cos angle| between the converged vector and normalized D^{1/2} 1.
    pub cosine: f64,
    /// Whether the smoothing eigenvector is still leading.
    pub is_leading: bool,
    /// Eigenvalue tie detected; cosine is unreliable.
    pub degenerate: bool,
}

/// Power-iterates the matrix-free operator x -> (I - omega (I - P)) x and
/// compares the converged direction against D^{1/2} 1.
pub fn leading_eigvec_check(g: &SparseGraph, omega: f64) -> Result<LeadingEigvecCheck> {
    if !g.is_connected() {
        return Err(Error::InvalidArgument("leading_eigvec_check requires a connected graph".into()));
    }
    let n = g.num_nodes();
    let p = normalized_propagator(g);
    let apply = |v: &[f64]| {
        let x = Tensor::new(n, 1, v.to_vec()).unwrap();
        omega_propagator_apply(&p, omega, &x).unwrap().into_data()
    };
    let pair = power_iterate(apply, n, POWER_ITER_CAP, POWER_ITER_TOL, 42, None);
    // tie detection: compare against the deflated second magnitude
    let second = power_iterate(apply, n, POWER_ITER_CAP, POWER_ITER_TOL, 43, Some(&pair.vector));
    let degenerate = (pair.value.abs() - second.value.abs()).abs() < 1e-8 * pair.value.abs().max(1.0);
    let mut smooth: Vec<f64> = (0..n).map(|i| ((1 + g.degree(i)) as f64).sqrt()).collect();
    normalize(&mut smooth);
    let cosine = pair
        .vector
        .iter()
        .zip(&smooth)
        .map(|(a, b)| a * b)
        .sum::<f64>()
        .abs();
    Ok(LeadingEigvecCheck { cosine, is_leading: cosine > 1.0 - 1e-8, degenerate })
}

/// Cyclic Jacobi eigendecomposition of a dense symmetric matrix. Returns
/// (Q, eigenvalues) with a = Q diag(lambda) Q^T, eigenvalues ascending and
/// Q's columns the matching eigenvectors.
pub fn jacobi_eigendecomposition(a: &Tensor, tol: f64) -> Result<(Tensor, Vec<f64>)> {
    let n = a.rows();
    if a.cols() != n {
        return Err(Error::InvalidArgument("jacobi needs a square matrix".into()));
    }
    for i in 0..n {
        for j in 0..i {
            if (a.get(i, j) - a.get(j, i)).abs() > 1e-12 * a.frobenius_norm().max(1.0) {
                return Err(Error::InvalidArgument("jacobi needs a symmetric matrix".into()));
            }
        }
    }
    let mut m = a.clone();
    let mut q = Tensor::identity(n);
    let off = |m: &Tensor| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += m.get(i, j) * m.get(i, j);
                }
            }
        }
        s.sqrt()
    };
    let scale = a.frobenius_norm().max(1.0);
    for _sweep in 0..100 {
        if off(&m) <= tol * scale {
            break;
        }
        for p in 0..n {
            for r in (p + 1)..n {
                let apq = m.get(p, r);
                if apq.abs() <= tol * scale * 1e-3 {
                    continue;
                }
                let app = m.get(p, p);
                let aqq = m.get(r, r);
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m.get(k, p);
                    let mkq = m.get(k, r);
                    m.set(k, p, c * mkp - s * mkq);
                    m.set(k, r, s * mkp + c * mkq);
                }
                for k in 0..n {
                    let mpk = m.get(p, k);
                    let mqk = m.get(r, k);
                    m.set(p, k, c * mpk - s * mqk);
                    m.set(r, k, s * mpk + c * mqk);
                }
                for k in 0..n {
                    let qkp = q.get(k, p);
                    let qkq = q.get(k, r);
                    q.set(k, p, c * qkp - s * qkq);
                    q.set(k, r, s * qkp + c * qkq);
                }
            }
        }
    }
    let mut idx: Vec<usize> = (0..n).collect();
    let eig: Vec<f64> = (0..n).map(|i| m.get(i, i)).collect();
    idx.sort_by(|&i, &j| eig[i].partial_cmp(&eig[j]).unwrap());
    let values: Vec<f64> = idx.iter().map(|&i| eig[i]).collect();
    let mut qs = Tensor::zeros(n, n);
    for (new, &old) in idx.iter().enumerate() {
        for k in 0..n {
            qs.set(k, new, q.get(k, old));
        }
    }
    Ok((qs, values))
}

/// exp(-t a) f0 for symmetric a via full eigendecomposition.
pub fn matrix_exponential_apply(a: &Tensor, t: f64, f0: &Tensor) -> Result<Tensor> {
    if a.rows() != f0.rows() {
        return Err(Error::ShapeMismatch("matrix_exponential_apply shapes".into()));
    }
    let (q, lambda) = jacobi_eigendecomposition(a, 1e-12)?;
    let qt_f0 = q.transpose().matmul(f0)?;
    let mut scaled = qt_f0;
    for i in 0..scaled.rows() {
        let e = (-t * lambda[i]).exp();
        for j in 0..scaled.cols() {
            scaled.set(i, j, scaled.get(i, j) * e);
        }
    }
    q.matmul(&scaled)
}

/// Error norm || exp(-T a) f0 - (I - omega a)^L f0 ||_2 of forward-Euler
/// integration with omega = T / L against the exact heat-kernel solution.
pub fn euler_vs_exact(a: &Tensor, t_final: f64, layers: usize, f0: &Tensor) -> Result<f64> {
    let omega = t_final / layers as f64;
    let exact = matrix_exponential_apply(a, t_final, f0)?;
    let mut f = f0.clone();
    let start_norm = f0.frobenius_norm();
    for _ in 0..layers {
        let af = a.matmul(&f)?;
        f = f.sub(&af.scale(omega))?;
        if f.frobenius_norm() > 1e6 * start_norm.max(1.0) {
            return Err(Error::Numerical("forward Euler iteration blew up".into()));
        }
    }
    Ok(exact.sub(&f)?.frobenius_norm())
}

/// The fixed random diagonally-normalized SPD matrix used in the Euler
/// experiment: A = D^{-1/2} (B^T B + eps I) D^{-1/2} with B standard
/// Gaussian and D the diagonal of B^T B + eps I.
pub fn random_normalized_spd(n: usize, rng: &mut Rng) -> Tensor {
    let eps = 0.1;
    let gauss = |rng: &mut Rng| {
        // Box-Muller
        let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
        let u2: f64 = rng.gen_range(0.0..1.0);
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    };
    let b = Tensor::new(n, n, (0..n * n).map(|_| gauss(rng)).collect()).unwrap();
    let mut m = b.transpose().matmul(&b).unwrap();
    for i in 0..n {
        m.set(i, i, m.get(i, i) + eps);
    }
    let inv_sqrt: Vec<f64> = (0..n).map(|i| 1.0 / m.get(i, i).sqrt()).collect();
    let mut a = Tensor::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            a.set(i, j, m.get(i, j) * inv_sqrt[i] * inv_sqrt[j]);
        }
    }
    a
}

/// One application of I - omega (I - P) to the indicator of `node`:
/// column `node` of the omega propagator.
pub fn impulse_response(g: &SparseGraph, omega: f64, node: usize) -> Result<Vec<f64>> {
    if node >= g.num_nodes() {
        return Err(Error::IndexOutOfRange(format!("impulse node {}", node)));
    }
    let p = normalized_propagator(g);
    let mut e = Tensor::zeros(g.num_nodes(), 1);
    e.set(node, 0, 1.0);
    Ok(omega_propagator_apply(&p, omega, &e)?.into_data())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::SparseGraph;
    use crate::rng::{stream, Stream};

    fn edge2() -> SparseGraph {
        SparseGraph::from_edge_list(&[(0, 1)], 2).unwrap()
    }

    #[test]
    fn dirichlet_null_vector_energy_zero() {
        let g = SparseGraph::from_edge_list(&[(0, 1), (1, 2)], 3).unwrap();
        let f = Tensor::new(
            3,
            1,
            (0..3).map(|i| 0.7 * ((1 + g.degree(i)) as f64).sqrt()).collect(),
        )
        .unwrap();
        assert!(dirichlet_energy(&f, &g).unwrap().abs() < 1e-12);
    }

    #[test]
    fn dirichlet_two_node_value() {
        let f = Tensor::new(2, 1, vec![1.0, 0.0]).unwrap();
        let e = dirichlet_energy(&f, &edge2()).unwrap();
        assert!((e - 0.5).abs() < 1e-12);
    }

    #[test]
    fn gat_energy_values() {
        let g = edge2();
        assert!(gat_energy(&Tensor::filled(2, 3, 0.4), &g).unwrap().abs() < 1e-15);
        let f = Tensor::new(2, 1, vec![1.0, 0.0]).unwrap();
        assert!((gat_energy(&f, &g).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dirichlet_matches_quadratic_form() {
        let mut rng = stream(5, Stream::Probe);
        let g = SparseGraph::from_edge_list(&[(0, 1), (1, 2), (2, 3), (0, 3), (1, 3)], 4).unwrap();
        let f = Tensor::new(4, 2, (0..8).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
        let e = dirichlet_energy(&f, &g).unwrap();
        let l = normalized_laplacian(&g).to_dense();
        let quad = f.transpose().matmul(&l).unwrap().matmul(&f).unwrap();
        let trace: f64 = (0..2).map(|i| quad.get(i, i)).sum();
        assert!((e - trace).abs() < 1e-10 * e.abs().max(1.0));
    }

    #[test]
    fn power_iteration_identity() {
        let pair = power_iteration(&SparseMatrix::identity(4), 100, 1e-12, 1).unwrap();
        assert!((pair.value - 1.0).abs() < 1e-10);
    }

    #[test]
    fn power_iteration_two_node_laplacian() {
        let l = normalized_laplacian(&edge2());
        let pair = power_iteration(&l, POWER_ITER_CAP, POWER_ITER_TOL, 1).unwrap();
        assert!((pair.value - 1.0).abs() < 1e-9);
        // eigenvector proportional to (1, -1)/sqrt(2)
        let v = &pair.vector;
        assert!((v[0] + v[1]).abs() < 1e-6);
    }

    #[test]
    fn omega_zero_two_node() {
        assert!((omega_zero(&edge2()).unwrap() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn omega_zero_triangle_at_least_one() {
        let g = SparseGraph::from_edge_list(&[(0, 1), (1, 2), (0, 2)], 3).unwrap();
        let w0 = omega_zero(&g).unwrap();
        assert!(w0 >= 1.0 - 1e-9);
    }

    #[test]
    fn omega_zero_rejects_disconnected() {
        let g = SparseGraph::from_edge_list(&[(0, 1)], 3).unwrap();
        assert!(omega_zero(&g).is_err());
    }

    #[test]
    fn jacobi_known_2x2() {
        let a = Tensor::new(2, 2, vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        let (_, vals) = jacobi_eigendecomposition(&a, 1e-12).unwrap();
        assert!((vals[0] + 1.0).abs() < 1e-12);
        assert!((vals[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn jacobi_diagonal_input() {
        let a = Tensor::new(3, 3, vec![3.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 2.0]).unwrap();
        let (q, vals) = jacobi_eigendecomposition(&a, 1e-12).unwrap();
        assert_eq!(vals, vec![1.0, 2.0, 3.0]);
        // Q orthogonal
        let qtq = q.transpose().matmul(&q).unwrap();
        assert!(qtq.max_abs_diff(&Tensor::identity(3)) < 1e-10);
    }

    #[test]
    fn jacobi_reconstruction_random() {
        let mut rng = stream(3, Stream::Probe);
        let n = 20;
        let mut a = Tensor::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let v = rng.gen_range(-1.0..1.0);
                a.set(i, j, v);
                a.set(j, i, v);
            }
        }
        let (q, vals) = jacobi_eigendecomposition(&a, 1e-12).unwrap();
        let mut lam = Tensor::zeros(n, n);
        for i in 0..n {
            lam.set(i, i, vals[i]);
        }
        let rec = q.matmul(&lam).unwrap().matmul(&q.transpose()).unwrap();
        assert!(rec.max_abs_diff(&a) < 1e-10 * a.frobenius_norm());
    }

    #[test]
    fn jacobi_rejects_asymmetric() {
        let a = Tensor::new(2, 2, vec![0.0, 1.0, 0.0, 0.0]).unwrap();
        assert!(jacobi_eigendecomposition(&a, 1e-12).is_err());
    }

    #[test]
    fn matrix_exp_t_zero_and_identity() {
        let mut rng = stream(4, Stream::Probe);
        let f0 = Tensor::new(3, 2, (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
        let a = Tensor::identity(3);
        let y0 = matrix_exponential_apply(&a, 0.0, &f0).unwrap();
        assert!(y0.max_abs_diff(&f0) < 1e-12);
        let y1 = matrix_exponential_apply(&a, 1.0, &f0).unwrap();
        assert!(y1.max_abs_diff(&f0.scale((-1.0f64).exp())) < 1e-12);
    }

    #[test]
    fn matrix_exp_matches_taylor() {
        let mut rng = stream(9, Stream::Probe);
        let a = random_normalized_spd(5, &mut rng);
        let f0 = Tensor::new(5, 1, (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
        let exact = matrix_exponential_apply(&a, 1.0, &f0).unwrap();
        // truncated Taylor series of exp(-A) f0, 30 terms
        let mut sum = f0.clone();
        let mut term = f0.clone();
        for k in 1..=30 {
            term = a.matmul(&term).unwrap().scale(-1.0 / k as f64);
            sum.add_assign(&term).unwrap();
        }
        assert!(exact.max_abs_diff(&sum) < 1e-10);
    }

    #[test]
    fn euler_error_zero_matrix() {
        let a = Tensor::zeros(4, 4);
        let f0 = Tensor::ones(4, 1);
        for l in [1, 8, 64] {
            assert!(euler_vs_exact(&a, 1.0, l, &f0).unwrap().abs() < 1e-14);
        }
    }

    #[test]
    fn euler_error_decreases() {
        let mut rng = stream(2, Stream::Probe);
        let a = random_normalized_spd(20, &mut rng);
        let f0 = Tensor::new(20, 1, (0..20).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
        let e32 = euler_vs_exact(&a, 1.0, 32, &f0).unwrap();
        let e64 = euler_vs_exact(&a, 1.0, 64, &f0).unwrap();
        assert!(e64 < e32);
    }

    #[test]
    fn impulse_response_signs() {
        // path graph: middle node has P_ii = 1/3, omega = 2 flips it
        let g = SparseGraph::from_edge_list(&[(0, 1), (1, 2)], 3).unwrap();
        for omega in [0.5, 1.0] {
            let v = impulse_response(&g, omega, 1).unwrap();
            assert!(v.iter().all(|&x| x >= -1e-15), "omega {}", omega);
        }
        let v = impulse_response(&g, 2.0, 1).unwrap();
        assert!(v[1] < 0.0);
        // isolated node keeps its indicator
        let iso = SparseGraph::from_edge_list(&[], 1).unwrap();
        assert_eq!(impulse_response(&iso, 2.0, 0).unwrap(), vec![1.0]);
    }

    #[test]
    fn leading_eigvec_dichotomy_small() {
        let g = SparseGraph::from_edge_list(&[(0, 1), (1, 2), (2, 3), (3, 0), (0, 2)], 4).unwrap();
        let w0 = omega_zero(&g).unwrap();
        let low = leading_eigvec_check(&g, 0.5).unwrap();
        assert!(low.cosine > 1.0 - 1e-8, "cosine {}", low.cosine);
        let high = leading_eigvec_check(&g, 1.5 * w0).unwrap();
        assert!(high.cosine < 0.99, "cosine {}", high.cosine);
        let neg = leading_eigvec_check(&g, -0.5).unwrap();
        assert!(neg.cosine < 0.99, "cosine {}", neg.cosine);
    }
}
