//! Sparse undirected graphs in CSR form and the fixed operators derived
//! from them: the normalized propagator P = D^{-1/2} (A+I) D^{-1/2}, the
//! symmetrically normalized Laplacian I - P, and the incidence matrix G
//! with G^T G = D - A.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Unweighted undirected graph, CSR storage of both edge directions.
/// No self-loops in the base graph; derived operators add them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparseGraph {
    num_nodes: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
}

impl SparseGraph {
    /// Builds a symmetric CSR graph from an edge list. Duplicate pairs and
    /// self-loops in the input are dropped; layout is deterministic for
    /// identical edge sets.
    pub fn from_edge_list(edges: &[(usize, usize)], n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("graph must have at least one node".into()));
        }
        let mut set = BTreeSet::new();
        for &(i, j) in edges {
            if i >= n || j >= n {
                return Err(Error::IndexOutOfRange(format!(
                    "edge ({}, {}) with n = {}",
                    i, j, n
                )));
            }
            if i == j {
                continue;
            }
            set.insert((i.min(j), i.max(j)));
        }
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
        for &(i, j) in &set {
            adj[i].push(j);
            adj[j].push(i);
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        row_ptr.push(0);
        for mut neigh in adj {
            neigh.sort_unstable();
            col_idx.extend_from_slice(&neigh);
            row_ptr.push(col_idx.len());
        }
        Ok(SparseGraph { num_nodes: n, row_ptr, col_idx })
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    /// Number of undirected edges.
    pub fn num_edges(&self) -> usize {
        self.col_idx.len() / 2
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.col_idx[self.row_ptr[i]..self.row_ptr[i + 1]]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.row_ptr[i + 1] - self.row_ptr[i]
    }

    /// Undirected edges as (i, j) with i < j, lexicographic order.
    pub fn edge_list(&self) -> Vec<(usize, usize)> {
        let mut edges = Vec::with_capacity(self.num_edges());
        for i in 0..self.num_nodes {
            for &j in self.neighbors(i) {
                if i < j {
                    edges.push((i, j));
                }
            }
        }
        edges
    }

    pub fn is_connected(&self) -> bool {
        if self.num_nodes == 0 {
            return false;
        }
        let mut seen = vec![false; self.num_nodes];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(i) = stack.pop() {
            for &j in self.neighbors(i) {
                if !seen[j] {
                    seen[j] = true;
                    count += 1;
                    stack.push(j);
                }
            }
        }
        count == self.num_nodes
    }
}

/// General CSR matrix with f64 values.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    pub fn new(
        rows: usize,
        cols: usize,
        row_ptr: Vec<usize>,
        col_idx: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if row_ptr.len() != rows + 1 || col_idx.len() != values.len() {
            return Err(Error::ShapeMismatch("CSR structure lengths".into()));
        }
        if row_ptr.windows(2).any(|w| w[0] > w[1]) || *row_ptr.last().unwrap() != col_idx.len() {
            return Err(Error::InvalidArgument("row_ptr not monotone".into()));
        }
        if col_idx.iter().any(|&c| c >= cols) {
            return Err(Error::IndexOutOfRange("column index".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("sparse value".into()));
        }
        Ok(SparseMatrix { rows, cols, row_ptr, col_idx, values })
    }

    pub fn identity(n: usize) -> Self {
        SparseMatrix {
            rows: n,
            cols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_entries(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    pub fn to_dense(&self) -> Tensor {
        let mut out = Tensor::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            for (j, v) in self.row_entries(i) {
                out.set(i, j, v);
            }
        }
        out
    }

    pub fn transpose(&self) -> SparseMatrix {
        let mut counts = vec![0usize; self.cols];
        for &c in &self.col_idx {
            counts[c] += 1;
        }
        let mut row_ptr = vec![0usize; self.cols + 1];
        for c in 0..self.cols {
            row_ptr[c + 1] = row_ptr[c] + counts[c];
        }
        let mut next = row_ptr.clone();
        let mut col_idx = vec![0usize; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for i in 0..self.rows {
            for (j, v) in self.row_entries(i) {
                let slot = next[j];
                col_idx[slot] = i;
                values[slot] = v;
                next[j] += 1;
            }
        }
        SparseMatrix { rows: self.cols, cols: self.rows, row_ptr, col_idx, values }
    }
}

/// P = D^{-1/2} (A + I) D^{-1/2} where D counts self-loops: entry (i, j)
/// is 1 / sqrt((1 + d_i)(1 + d_j)) for j in N_i and for j = i.
pub fn normalized_propagator(g: &SparseGraph) -> SparseMatrix {
    let n = g.num_nodes();
    let inv_sqrt: Vec<f64> = (0..n).map(|i| 1.0 / ((1 + g.degree(i)) as f64).sqrt()).collect();
    let mut row_ptr = Vec::with_capacity(n + 1);
    let mut col_idx = Vec::new();
    let mut values = Vec::new();
    row_ptr.push(0);
    for i in 0..n {
        let mut inserted_self = false;
        for &j in g.neighbors(i) {
            if !inserted_self && j > i {
                col_idx.push(i);
                values.push(inv_sqrt[i] * inv_sqrt[i]);
                inserted_self = true;
            }
            col_idx.push(j);
            values.push(inv_sqrt[i] * inv_sqrt[j]);
        }
        if !inserted_self {
            col_idx.push(i);
            values.push(inv_sqrt[i] * inv_sqrt[i]);
        }
        row_ptr.push(col_idx.len());
    }
    SparseMatrix { rows: n, cols: n, row_ptr, col_idx, values }
}

/// The symmetrically normalized Laplacian I - P.
pub fn normalized_laplacian(g: &SparseGraph) -> SparseMatrix {
    let mut p = normalized_propagator(g);
    for i in 0..p.rows {
        for k in p.row_ptr[i]..p.row_ptr[i + 1] {
            if p.col_idx[k] == i {
                p.values[k] = 1.0 - p.values[k];
            } else {
                p.values[k] = -p.values[k];
            }
        }
    }
    p
}

/// Signed edge-node incidence matrix: one row per undirected edge (i, j),
/// i < j, with +1 at column i and -1 at column j; rows in lexicographic
/// edge order. Satisfies G^T G = D - A.
pub fn incidence_matrix(g: &SparseGraph) -> SparseMatrix {
    let edges = g.edge_list();
    let m = edges.len();
    let mut row_ptr = Vec::with_capacity(m + 1);
    let mut col_idx = Vec::with_capacity(2 * m);
    let mut values = Vec::with_capacity(2 * m);
    row_ptr.push(0);
    for (i, j) in edges {
        col_idx.push(i);
        values.push(1.0);
        col_idx.push(j);
        values.push(-1.0);
        row_ptr.push(col_idx.len());
    }
    SparseMatrix { rows: m, cols: g.num_nodes(), row_ptr, col_idx, values }
}

/// Sparse-dense product m * x. Accumulation within a row is sequential
/// left-to-right, so results are deterministic.
pub fn spmm(m: &SparseMatrix, x: &Tensor) -> Result<Tensor> {
    if m.cols != x.rows() {
        return Err(Error::ShapeMismatch(format!(
            "spmm {}x{} by {}x{}",
            m.rows,
            m.cols,
            x.rows(),
            x.cols()
        )));
    }
    let c = x.cols();
    let mut out = Tensor::zeros(m.rows, c);
    for i in 0..m.rows {
        for (j, v) in m.row_entries(i) {
            let xrow = x.row(j);
            let orow = &mut out.data_mut()[i * c..(i + 1) * c];
            for k in 0..c {
                orow[k] += v * xrow[k];
            }
        }
    }
    Ok(out)
}

/// Applies the omega-mixed propagator (I - omega (I - P)) x without
/// materializing it: x - omega x + omega P x.
pub fn omega_propagator_apply(p: &SparseMatrix, omega: f64, x: &Tensor) -> Result<Tensor> {
    if p.rows != p.cols {
        return Err(Error::ShapeMismatch("omega propagator needs a square matrix".into()));
    }
    let px = spmm(p, x)?;
    let mut out = px.scale(omega);
    for (o, xv) in out.data_mut().iter_mut().zip(x.data()) {
        *o += (1.0 - omega) * xv;
    }
    Ok(out)
}

/// Parses the edge-list text format: one `i<TAB>j` pair per line, 0-based,
/// `#` starts a comment. Whitespace-separated pairs are tolerated.
pub fn parse_edge_list(text: &str) -> Result<Vec<(usize, usize)>> {
    let mut edges = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut it = line.split_whitespace();
        let parse = |tok: Option<&str>| -> Result<usize> {
            tok.ok_or_else(|| Error::Data(format!("edge list line {}: missing index", lineno + 1)))?
                .parse()
                .map_err(|_| Error::Data(format!("edge list line {}: bad index", lineno + 1)))
        };
        let i = parse(it.next())?;
        let j = parse(it.next())?;
        if it.next().is_some() {
            return Err(Error::Data(format!("edge list line {}: extra tokens", lineno + 1)));
        }
        edges.push((i, j));
    }
    Ok(edges)
}
