//! Dataset ingestion: node-classification bundles, TU-format graph
//! collections, split generation, synthetic data and block-diagonal
//! batching.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng as _;

use crate::error::{Error, Result};
use crate::graph::{parse_edge_list, SparseGraph};
use crate::rng::{stream, Stream};
use crate::tensor::Tensor;

#[derive(Debug, Clone)]
pub struct NodeDataset {
    pub graph: SparseGraph,
    pub features: Tensor,
    /// Per-node class id, -1 for unlabeled.
    pub labels: Vec<i64>,
    pub num_classes: usize,
    pub train_mask: Vec<bool>,
    pub val_mask: Vec<bool>,
    pub test_mask: Vec<bool>,
}

impl NodeDataset {
    pub fn num_nodes(&self) -> usize {
        self.graph.num_nodes()
    }

    fn validate(&self) -> Result<()> {
        let n = self.graph.num_nodes();
        if self.features.rows() != n {
            return Err(Error::Data(format!(
                "features have {} rows but the graph has {} nodes",
                self.features.rows(),
                n
            )));
        }
        if self.labels.len() != n {
            return Err(Error::Data(format!("{} labels for {} nodes", self.labels.len(), n)));
        }
        for (mask, name) in [(&self.train_mask, "train"), (&self.val_mask, "val"), (&self.test_mask, "test")] {
            if mask.len() != n {
                return Err(Error::Data(format!("{} mask length {} for {} nodes", name, mask.len(), n)));
            }
        }
        for i in 0..n {
            let overlaps = (self.train_mask[i] && self.val_mask[i])
                || (self.train_mask[i] && self.test_mask[i])
                || (self.val_mask[i] && self.test_mask[i]);
            if overlaps {
                return Err(Error::Data(format!("node {} is in more than one split", i)));
            }
            if self.labels[i] >= self.num_classes as i64 {
                return Err(Error::Data(format!(
                    "node {} has label {} but only {} classes",
                    i, self.labels[i], self.num_classes
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct GraphDataset {
    pub graphs: Vec<SparseGraph>,
    pub features: Vec<Tensor>,
    pub labels: Vec<usize>,
    pub num_classes: usize,
}

impl GraphDataset {
    pub fn len(&self) -> usize {
        self.graphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graphs.is_empty()
    }

    pub fn feature_width(&self) -> usize {
        self.features.first().map_or(0, |f| f.cols())
    }
}

#[derive(Debug, Clone)]
pub struct GraphBatch {
    pub graph: SparseGraph,
    pub features: Tensor,
    /// Nondecreasing per-node graph index within the batch.
    pub graph_ids: Vec<usize>,
    pub labels: Vec<usize>,
}

impl GraphBatch {
    pub fn num_graphs(&self) -> usize {
        self.labels.len()
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path)
        .map_err(|e| Error::Data(format!("cannot read {}: {}", path.display(), e)))
}

fn mask_from_ids(path: &Path, n: usize) -> Result<Vec<bool>> {
    let mut mask = vec![false; n];
    if !path.exists() {
        return Ok(mask);
    }
    for tok in read_text(path)?.split_whitespace() {
        let id: usize = tok
            .parse()
            .map_err(|_| Error::Data(format!("bad node id {:?} in {}", tok, path.display())))?;
        if id >= n {
            return Err(Error::Data(format!("node id {} out of range in {}", id, path.display())));
        }
        mask[id] = true;
    }
    Ok(mask)
}

/// Loads a plain-text node-classification bundle: `edges.tsv`,
/// `features.csv`, `labels.csv` and optional `mask_{train,val,test}.txt`
/// node-id lists.
pub fn load_bundle(dir: &Path) -> Result<NodeDataset> {
    let edges_text = read_text(&dir.join("edges.tsv"))?;
    let feat_text = read_text(&dir.join("features.csv"))?;
    let label_text = read_text(&dir.join("labels.csv"))?;

    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in feat_text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let row: Vec<f64> = line
            .split(',')
            .map(|t| {
                t.trim()
                    .parse()
                    .map_err(|_| Error::Data(format!("bad feature value {:?} on line {}", t, lineno + 1)))
            })
            .collect::<Result<_>>()?;
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(Error::Data(format!(
                    "feature row {} has {} columns, expected {}",
                    lineno + 1,
                    row.len(),
                    first.len()
                )));
            }
        }
        rows.push(row);
    }
    let n = rows.len();
    let c = rows.first().map_or(0, |r| r.len());
    let features = Tensor::new(n, c, rows.into_iter().flatten().collect())?;

    let labels: Vec<i64> = label_text
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| Error::Data(format!("bad label {:?}", t))))
        .collect::<Result<_>>()?;
    if labels.len() != n {
        return Err(Error::Data(format!(
            "labels.csv has {} rows but features.csv has {} rows",
            labels.len(),
            n
        )));
    }
    let num_classes = labels.iter().copied().max().map_or(0, |m| (m + 1).max(0) as usize);

    let edges = parse_edge_list(&edges_text)?;
    if let Some(m) = edges.iter().map(|&(i, j)| i.max(j)).max() {
        if m >= n {
            return Err(Error::Data(format!(
                "edges.tsv references node {} but features.csv has only {} rows",
                m, n
            )));
        }
    }
    let graph = SparseGraph::from_edge_list(&edges, n)?;

    let ds = NodeDataset {
        graph,
        features,
        labels,
        num_classes,
        train_mask: mask_from_ids(&dir.join("mask_train.txt"), n)?,
        val_mask: mask_from_ids(&dir.join("mask_val.txt"), n)?,
        test_mask: mask_from_ids(&dir.join("mask_test.txt"), n)?,
    };
    ds.validate()?;
    Ok(ds)
}

/// Writes a dataset back out in the bundle format; inverse of `load_bundle`.
pub fn write_bundle(ds: &NodeDataset, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut edges = String::new();
    for (i, j) in ds.graph.edge_list() {
        edges.push_str(&format!("{}\t{}\n", i, j));
    }
    fs::write(dir.join("edges.tsv"), edges)?;

    let mut feats = String::new();
    for i in 0..ds.features.rows() {
        let row: Vec<String> = ds.features.row(i).iter().map(|v| format!("{:?}", v)).collect();
        feats.push_str(&row.join(","));
        feats.push('\n');
    }
    fs::write(dir.join("features.csv"), feats)?;

    let labels: String = ds.labels.iter().map(|l| format!("{}\n", l)).collect();
    fs::write(dir.join("labels.csv"), labels)?;

    for (mask, name) in [
        (&ds.train_mask, "mask_train.txt"),
        (&ds.val_mask, "mask_val.txt"),
        (&ds.test_mask, "mask_test.txt"),
    ] {
        let ids: String = mask
            .iter()
            .enumerate()
            .filter(|(_, &m)| m)
            .map(|(i, _)| format!("{}\n", i))
            .collect();
        fs::write(dir.join(name), ids)?;
    }
    Ok(())
}

/// Produces the fixed-size split: `per_class` training nodes sampled per
/// class, then `val` and `test` nodes from the remaining labeled pool. When
/// the dataset already ships all three masks they are kept verbatim.
pub fn planetoid_split(
    ds: &NodeDataset,
    per_class: usize,
    val: usize,
    test: usize,
    seed: u64,
) -> Result<NodeDataset> {
    let has_masks = ds.train_mask.iter().any(|&m| m)
        && ds.val_mask.iter().any(|&m| m)
        && ds.test_mask.iter().any(|&m| m);
    if has_masks {
        return Ok(ds.clone());
    }
    let n = ds.num_nodes();
    let mut by_class: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
    for i in 0..n {
        if ds.labels[i] >= 0 {
            by_class.entry(ds.labels[i]).or_default().push(i);
        }
    }
    let mut rng = stream(seed, Stream::Data);
    let mut out = ds.clone();
    out.train_mask = vec![false; n];
    out.val_mask = vec![false; n];
    out.test_mask = vec![false; n];
    let mut rest: Vec<usize> = Vec::new();
    for (class, mut ids) in by_class {
        if ids.len() < per_class {
            return Err(Error::Data(format!(
                "class {} has only {} labeled nodes, need {}",
                class,
                ids.len(),
                per_class
            )));
        }
        ids.shuffle(&mut rng);
        for &i in &ids[..per_class] {
            out.train_mask[i] = true;
        }
        rest.extend_from_slice(&ids[per_class..]);
    }
    if rest.len() < val + test {
        return Err(Error::Data(format!(
            "only {} labeled nodes left for {} val + {} test",
            rest.len(),
            val,
            test
        )));
    }
    rest.sort_unstable();
    rest.shuffle(&mut rng);
    for &i in &rest[..val] {
        out.val_mask[i] = true;
    }
    for &i in &rest[val..val + test] {
        out.test_mask[i] = true;
    }
    out.validate()?;
    Ok(out)
}

fn parse_int_lines(text: &str, what: &str) -> Result<Vec<i64>> {
    text.split_whitespace()
        .map(|t| {
            t.trim_matches(',')
                .parse()
                .map_err(|_| Error::Data(format!("bad {} value {:?}", what, t)))
        })
        .collect()
}

/// Parses TU-format text files: `{name}_A.txt` (1-based `i, j` pairs),
/// `{name}_graph_indicator.txt`, `{name}_graph_labels.txt` and the
/// optional `{name}_node_labels.txt` (one-hot encoded as features; absent
/// labels yield a constant-1 feature).
pub fn load_tu_dataset(dir: &Path, name: &str) -> Result<GraphDataset> {
    let a_text = read_text(&dir.join(format!("{}_A.txt", name)))?;
    let ind_text = read_text(&dir.join(format!("{}_graph_indicator.txt", name)))?;
    let glab_text = read_text(&dir.join(format!("{}_graph_labels.txt", name)))?;

    let indicator = parse_int_lines(&ind_text, "graph indicator")?;
    let total_nodes = indicator.len();
    let num_graphs = indicator.iter().copied().max().unwrap_or(0) as usize;
    if num_graphs == 0 {
        return Err(Error::Data("empty graph indicator".into()));
    }
    // node id -> (graph id, local index); indicator must be 1-based and gapless
    let mut graph_of = vec![0usize; total_nodes];
    let mut local = vec![0usize; total_nodes];
    let mut sizes = vec![0usize; num_graphs];
    for (i, &g) in indicator.iter().enumerate() {
        if g < 1 || g as usize > num_graphs {
            return Err(Error::Data(format!("graph indicator {} out of range", g)));
        }
        let g = g as usize - 1;
        graph_of[i] = g;
        local[i] = sizes[g];
        sizes[g] += 1;
    }
    if sizes.iter().any(|&s| s == 0) {
        return Err(Error::Data("graph indicator has gaps".into()));
    }

    let mut edge_lists: Vec<Vec<(usize, usize)>> = vec![Vec::new(); num_graphs];
    let mut a_lines = 0usize;
    for line in a_text.lines() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        a_lines += 1;
        let mut parts = line.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty());
        let (i, j) = match (parts.next(), parts.next()) {
            (Some(a), Some(b)) => {
                let i: usize = a.parse().map_err(|_| Error::Data(format!("bad edge {:?}", line)))?;
                let j: usize = b.parse().map_err(|_| Error::Data(format!("bad edge {:?}", line)))?;
                (i, j)
            }
            _ => return Err(Error::Data(format!("bad edge line {:?}", line))),
        };
        if i < 1 || j < 1 || i > total_nodes || j > total_nodes {
            return Err(Error::Data(format!("edge ({}, {}) out of node range", i, j)));
        }
        let (i, j) = (i - 1, j - 1);
        if graph_of[i] != graph_of[j] {
            return Err(Error::Data(format!(
                "edge ({}, {}) crosses graphs {} and {}",
                i + 1,
                j + 1,
                graph_of[i] + 1,
                graph_of[j] + 1
            )));
        }
        edge_lists[graph_of[i]].push((local[i], local[j]));
    }
    let _ = a_lines;

    let raw_glabels = parse_int_lines(&glab_text, "graph label")?;
    if raw_glabels.len() != num_graphs {
        return Err(Error::Data(format!(
            "{} graph labels for {} graphs",
            raw_glabels.len(),
            num_graphs
        )));
    }
    // remap to 0..K-1 in sorted raw-label order
    let mut class_map: BTreeMap<i64, usize> = BTreeMap::new();
    for &l in &raw_glabels {
        class_map.entry(l).or_insert(0);
    }
    for (rank, (_, v)) in class_map.iter_mut().enumerate() {
        *v = rank;
    }
    let labels: Vec<usize> = raw_glabels.iter().map(|l| class_map[l]).collect();

    let node_label_path = dir.join(format!("{}_node_labels.txt", name));
    let node_labels: Option<Vec<i64>> = if node_label_path.exists() {
        let v = parse_int_lines(&read_text(&node_label_path)?, "node label")?;
        if v.len() != total_nodes {
            return Err(Error::Data(format!(
                "{} node labels for {} nodes",
                v.len(),
                total_nodes
            )));
        }
        Some(v)
    } else {
        None
    };
    let (min_nl, width) = match &node_labels {
        Some(v) => {
            let min = v.iter().copied().min().unwrap();
            let max = v.iter().copied().max().unwrap();
            (min, (max - min + 1) as usize)
        }
        None => (0, 1),
    };

    let mut graphs = Vec::with_capacity(num_graphs);
    let mut features = Vec::with_capacity(num_graphs);
    for g in 0..num_graphs {
        graphs.push(SparseGraph::from_edge_list(&edge_lists[g], sizes[g])?);
        let mut f = Tensor::zeros(sizes[g], width);
        for i in 0..total_nodes {
            if graph_of[i] != g {
                continue;
            }
            let col = match &node_labels {
                Some(v) => (v[i] - min_nl) as usize,
                None => 0,
            };
            f.set(local[i], col, 1.0);
        }
        features.push(f);
    }

    Ok(GraphDataset { graphs, features, labels, num_classes: class_map.len() })
}

/// Class-stratified k-fold splits; returns (train ids, test ids) per fold.
pub fn kfold_splits(ds: &GraphDataset, k: usize, seed: u64) -> Result<Vec<(Vec<usize>, Vec<usize>)>> {
    if k == 0 || k > ds.len() {
        return Err(Error::InvalidArgument(format!("k = {} for {} graphs", k, ds.len())));
    }
    let mut rng = stream(seed, Stream::Data);
    let mut by_class: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &l) in ds.labels.iter().enumerate() {
        by_class.entry(l).or_default().push(i);
    }
    let mut folds: Vec<Vec<usize>> = vec![Vec::new(); k];
    let mut next = 0usize;
    for ids in by_class.values_mut() {
        ids.shuffle(&mut rng);
        for &id in ids.iter() {
            folds[next % k].push(id);
            next += 1;
        }
    }
    let mut out = Vec::with_capacity(k);
    for f in 0..k {
        let mut test = folds[f].clone();
        test.sort_unstable();
        let mut train: Vec<usize> = folds
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != f)
            .flat_map(|(_, v)| v.iter().copied())
            .collect();
        train.sort_unstable();
        out.push((train, test));
    }
    Ok(out)
}

/// Connected Erdős–Rényi graph: each pair kept with probability `rate`,
/// resampled until connected (up to 1000 attempts).
pub fn erdos_renyi(n: usize, rate: f64, seed: u64) -> Result<SparseGraph> {
    if n < 2 {
        return Err(Error::InvalidArgument("erdos_renyi needs n >= 2".into()));
    }
    if !(0.0..=1.0).contains(&rate) {
        return Err(Error::InvalidArgument(format!("edge rate {} outside [0, 1]", rate)));
    }
    let mut rng = stream(seed, Stream::Data);
    for _ in 0..1000 {
        let mut edges = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if rng.gen::<f64>() < rate {
                    edges.push((i, j));
                }
            }
        }
        let g = SparseGraph::from_edge_list(&edges, n)?;
        if g.is_connected() {
            return Ok(g);
        }
    }
    Err(Error::Data(format!(
        "no connected graph after 1000 draws (n = {}, rate = {})",
        n, rate
    )))
}

/// Upwind gradient target: entry (i, k) is max over neighbors j of
/// f_{i,k} - f_{j,k}. The max excludes i itself, so all-negative
/// differences survive.
pub fn synthetic_gradient_target(f: &Tensor, g: &SparseGraph) -> Result<Tensor> {
    if f.rows() != g.num_nodes() {
        return Err(Error::ShapeMismatch("gradient target feature rows".into()));
    }
    let mut out = Tensor::zeros(f.rows(), f.cols());
    for i in 0..g.num_nodes() {
        let nbrs = g.neighbors(i);
        if nbrs.is_empty() {
            return Err(Error::Data(format!("node {} has no neighbors", i)));
        }
        for k in 0..f.cols() {
            let mut best = f64::NEG_INFINITY;
            for &j in nbrs {
                best = best.max(f.get(i, k) - f.get(j, k));
            }
            out.set(i, k, best);
        }
    }
    Ok(out)
}

/// Block-diagonal batch of the selected graphs with cumulative node
/// offsets.
pub fn batch_graphs(ds: &GraphDataset, ids: &[usize]) -> Result<GraphBatch> {
    if ids.is_empty() {
        return Err(Error::InvalidArgument("batch_graphs needs at least one graph".into()));
    }
    for &id in ids {
        if id >= ds.len() {
            return Err(Error::IndexOutOfRange(format!("graph id {}", id)));
        }
    }
    let width = ds.feature_width();
    let total: usize = ids.iter().map(|&id| ds.graphs[id].num_nodes()).sum();
    let mut edges = Vec::new();
    let mut feats = Vec::with_capacity(total * width);
    let mut graph_ids = Vec::with_capacity(total);
    let mut labels = Vec::with_capacity(ids.len());
    let mut offset = 0usize;
    for (b, &id) in ids.iter().enumerate() {
        let g = &ds.graphs[id];
        for (i, j) in g.edge_list() {
            edges.push((i + offset, j + offset));
        }
        feats.extend_from_slice(ds.features[id].data());
        graph_ids.extend(std::iter::repeat(b).take(g.num_nodes()));
        labels.push(ds.labels[id]);
        offset += g.num_nodes();
    }
    Ok(GraphBatch {
        graph: SparseGraph::from_edge_list(&edges, total)?,
        features: Tensor::new(total, width, feats)?,
        graph_ids,
        labels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::PathBuf;

    fn write_minimal_bundle(dir: &Path) {
        fs::write(dir.join("edges.tsv"), "0\t1\n").unwrap();
        fs::write(dir.join("features.csv"), "1.5\n-2.0\n").unwrap();
        fs::write(dir.join("labels.csv"), "0\n1\n").unwrap();
    }

    #[test]
    fn minimal_bundle_loads() {
        let dir = tempfile::tempdir().unwrap();
        write_minimal_bundle(dir.path());
        let ds = load_bundle(dir.path()).unwrap();
        assert_eq!(ds.features.shape(), (2, 1));
        assert_eq!(ds.num_classes, 2);
        assert_eq!(ds.graph.num_edges(), 1);
        assert!(!ds.train_mask.iter().any(|&m| m));
    }

    #[test]
    fn bundle_row_mismatch_errors() {
        let dir = tempfile::tempdir().unwrap();
        write_minimal_bundle(dir.path());
        fs::write(dir.path().join("labels.csv"), "0\n1\n0\n").unwrap();
        let err = load_bundle(dir.path()).unwrap_err().to_string();
        assert!(err.contains('3') && err.contains('2'), "{}", err);
    }

    #[test]
    fn bundle_round_trip_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let graph = SparseGraph::from_edge_list(&[(0, 1), (1, 2), (0, 3)], 4).unwrap();
        let ds = NodeDataset {
            graph,
            features: Tensor::new(4, 2, vec![0.1, -7.25, 1e-17, 3.0, 0.3333333333333333, 2.0, 0.0, -0.0]).unwrap(),
            labels: vec![0, 1, 1, -1],
            num_classes: 2,
            train_mask: vec![true, false, false, false],
            val_mask: vec![false, true, false, false],
            test_mask: vec![false, false, true, false],
        };
        write_bundle(&ds, dir.path()).unwrap();
        let back = load_bundle(dir.path()).unwrap();
        assert_eq!(back.features.data(), ds.features.data());
        assert_eq!(back.labels, ds.labels);
        assert_eq!(back.train_mask, ds.train_mask);
        assert_eq!(back.val_mask, ds.val_mask);
        assert_eq!(back.test_mask, ds.test_mask);
        assert_eq!(back.graph.edge_list(), ds.graph.edge_list());
    }

    fn labeled_dataset(per_class: usize, classes: usize) -> NodeDataset {
        let n = per_class * classes;
        let edges: Vec<(usize, usize)> = (0..n - 1).map(|i| (i, i + 1)).collect();
        NodeDataset {
            graph: SparseGraph::from_edge_list(&edges, n).unwrap(),
            features: Tensor::ones(n, 1),
            labels: (0..n).map(|i| (i % classes) as i64).collect(),
            num_classes: classes,
            train_mask: vec![false; n],
            val_mask: vec![false; n],
            test_mask: vec![false; n],
        }
    }

    #[test]
    fn planetoid_split_sizes_and_determinism() {
        let ds = labeled_dataset(40, 3);
        let s1 = planetoid_split(&ds, 5, 20, 30, 7).unwrap();
        assert_eq!(s1.train_mask.iter().filter(|&&m| m).count(), 15);
        assert_eq!(s1.val_mask.iter().filter(|&&m| m).count(), 20);
        assert_eq!(s1.test_mask.iter().filter(|&&m| m).count(), 30);
        let s2 = planetoid_split(&ds, 5, 20, 30, 7).unwrap();
        assert_eq!(s1.train_mask, s2.train_mask);
        assert_eq!(s1.test_mask, s2.test_mask);
        // per-class count
        for c in 0..3 {
            let count = (0..ds.num_nodes())
                .filter(|&i| s1.train_mask[i] && ds.labels[i] == c as i64)
                .count();
            assert_eq!(count, 5);
        }
    }

    #[test]
    fn planetoid_split_keeps_shipped_masks() {
        let mut ds = labeled_dataset(10, 2);
        ds.train_mask[0] = true;
        ds.val_mask[1] = true;
        ds.test_mask[2] = true;
        let s = planetoid_split(&ds, 3, 4, 5, 0).unwrap();
        assert_eq!(s.train_mask, ds.train_mask);
        assert_eq!(s.test_mask, ds.test_mask);
    }

    #[test]
    fn planetoid_split_too_few_errors() {
        let ds = labeled_dataset(4, 2);
        assert!(planetoid_split(&ds, 5, 1, 1, 0).is_err());
    }

    fn write_tu_fixture(dir: &Path) {
        // graph 1: triangle on nodes 1..3; graph 2: edge on nodes 4..5
        fs::write(
            dir.join("TOY_A.txt"),
            "1, 2\n2, 1\n2, 3\n3, 2\n1, 3\n3, 1\n4, 5\n5, 4\n",
        )
        .unwrap();
        fs::write(dir.join("TOY_graph_indicator.txt"), "1\n1\n1\n2\n2\n").unwrap();
        fs::write(dir.join("TOY_graph_labels.txt"), "1\n-1\n").unwrap();
        fs::write(dir.join("TOY_node_labels.txt"), "0\n1\n0\n2\n1\n").unwrap();
    }

    #[test]
    fn tu_fixture_parses() {
        let dir = tempfile::tempdir().unwrap();
        write_tu_fixture(dir.path());
        let ds = load_tu_dataset(dir.path(), "TOY").unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.num_classes, 2);
        assert_eq!(ds.graphs[0].num_edges(), 3);
        assert_eq!(ds.graphs[1].num_edges(), 1);
        assert_eq!(ds.feature_width(), 3);
        // one-hot features: node 2 (label 1) -> column 1
        assert_eq!(ds.features[0].row(1), &[0.0, 1.0, 0.0]);
        assert_eq!(ds.features[1].row(0), &[0.0, 0.0, 1.0]);
        // labels remapped in sorted raw-label order: -1 -> 0, 1 -> 1
        assert_eq!(ds.labels, vec![1, 0]);
    }

    #[test]
    fn tu_cross_graph_edge_errors() {
        let dir = tempfile::tempdir().unwrap();
        write_tu_fixture(dir.path());
        fs::write(dir.path().join("TOY_A.txt"), "1, 2\n2, 1\n3, 4\n4, 3\n").unwrap();
        assert!(load_tu_dataset(dir.path(), "TOY").is_err());
    }

    #[test]
    fn tu_without_node_labels_constant_feature() {
        let dir = tempfile::tempdir().unwrap();
        write_tu_fixture(dir.path());
        fs::remove_file(dir.path().join("TOY_node_labels.txt")).unwrap();
        let ds = load_tu_dataset(dir.path(), "TOY").unwrap();
        assert_eq!(ds.feature_width(), 1);
        assert!(ds.features.iter().all(|f| f.data().iter().all(|&v| v == 1.0)));
    }

    fn toy_graph_dataset(n: usize) -> GraphDataset {
        let graphs: Vec<SparseGraph> = (0..n)
            .map(|_| SparseGraph::from_edge_list(&[(0, 1), (1, 2), (0, 2)], 3).unwrap())
            .collect();
        let features = (0..n).map(|i| Tensor::filled(3, 2, i as f64)).collect();
        let labels = (0..n).map(|i| i % 2).collect();
        GraphDataset { graphs, features, labels, num_classes: 2 }
    }

    #[test]
    fn kfold_partitions_and_is_deterministic() {
        let ds = toy_graph_dataset(10);
        let folds = kfold_splits(&ds, 10, 1).unwrap();
        assert_eq!(folds.len(), 10);
        let mut seen: Vec<usize> = folds.iter().flat_map(|(_, t)| t.iter().copied()).collect();
        seen.sort_unstable();
        assert_eq!(seen, (0..10).collect::<Vec<_>>());
        for (train, test) in &folds {
            assert_eq!(test.len(), 1);
            assert_eq!(train.len(), 9);
            assert!(!train.contains(&test[0]));
        }
        assert_eq!(folds, kfold_splits(&ds, 10, 1).unwrap());
    }

    #[test]
    fn kfold_k_too_large_errors() {
        assert!(kfold_splits(&toy_graph_dataset(3), 4, 0).is_err());
    }

    #[test]
    fn erdos_renyi_complete_and_expected_count() {
        let g = erdos_renyi(5, 1.0, 0).unwrap();
        assert_eq!(g.num_edges(), 10);
        // rate 0 can never be connected
        assert!(erdos_renyi(4, 0.0, 0).is_err());
        // Unconditioned mean is C(8,2) * 0.3 = 8.4; conditioning on
        // connectivity discards sparse draws and shifts it up by ~1.5.
        let mean: f64 = (0..200)
            .map(|s| erdos_renyi(8, 0.3, s).unwrap().num_edges() as f64)
            .sum::<f64>()
            / 200.0;
        assert!(mean > 8.4 && mean < 11.5, "mean {}", mean);
    }

    #[test]
    fn gradient_target_examples() {
        let edge = SparseGraph::from_edge_list(&[(0, 1)], 2).unwrap();
        let f = Tensor::new(2, 1, vec![1.0, 0.0]).unwrap();
        let t = synthetic_gradient_target(&f, &edge).unwrap();
        assert_eq!(t.data(), &[1.0, -1.0]);

        let path = SparseGraph::from_edge_list(&[(0, 1), (1, 2)], 3).unwrap();
        let f = Tensor::new(3, 1, vec![0.0, 1.0, 3.0]).unwrap();
        let t = synthetic_gradient_target(&f, &path).unwrap();
        assert_eq!(t.data(), &[-1.0, 1.0, 2.0]);

        let c = Tensor::filled(3, 2, 0.37);
        assert!(synthetic_gradient_target(&c, &path).unwrap().data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn gradient_target_matches_brute_force() {
        let g = erdos_renyi(12, 0.4, 3).unwrap();
        let mut rng = stream(11, Stream::Data);
        let f = Tensor::new(12, 3, (0..36).map(|_| rng.gen_range(-2.0..2.0)).collect()).unwrap();
        let fast = synthetic_gradient_target(&f, &g).unwrap();
        for i in 0..12 {
            for k in 0..3 {
                let mut best = f64::NEG_INFINITY;
                for j in 0..12 {
                    if g.neighbors(i).contains(&j) {
                        best = best.max(f.get(i, k) - f.get(j, k));
                    }
                }
                assert_eq!(fast.get(i, k), best);
            }
        }
    }

    #[test]
    fn gradient_target_isolated_node_errors() {
        let g = SparseGraph::from_edge_list(&[(0, 1)], 3).unwrap();
        assert!(synthetic_gradient_target(&Tensor::ones(3, 1), &g).is_err());
    }

    #[test]
    fn batch_two_triangles_block_diagonal() {
        let ds = toy_graph_dataset(4);
        let b = batch_graphs(&ds, &[1, 3]).unwrap();
        assert_eq!(b.graph.num_nodes(), 6);
        assert_eq!(b.graph.num_edges(), 6);
        assert_eq!(b.graph_ids, vec![0, 0, 0, 1, 1, 1]);
        assert_eq!(b.labels, vec![1, 1]);
        // no cross-block edges
        for (i, j) in b.graph.edge_list() {
            assert_eq!(i / 3, j / 3);
        }
        assert_eq!(b.features.rows(), 6);
        assert_eq!(b.features.row(0), &[1.0, 1.0]);
        assert_eq!(b.features.row(3), &[3.0, 3.0]);
    }

    #[test]
    fn batch_single_graph_identity() {
        let ds = toy_graph_dataset(2);
        let b = batch_graphs(&ds, &[0]).unwrap();
        assert_eq!(b.graph.edge_list(), ds.graphs[0].edge_list());
        assert!(b.graph_ids.iter().all(|&g| g == 0));
    }

    #[test]
    fn batch_empty_errors() {
        let ds = toy_graph_dataset(2);
        assert!(batch_graphs(&ds, &[]).is_err());
        let _ = PathBuf::new();
    }
}
