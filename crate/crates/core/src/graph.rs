//! Sparse undirected graphs in compressed adjacency form, their
//! symmetric-normalized adjacency operators, and basic structural statistics.

use std::collections::VecDeque;
use std::fmt::Write as _;
use std::path::Path;

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::labels::LabelSet;

/// Simple undirected graph stored as per-node sorted neighbor lists.
///
/// No self-loops, no duplicate edges, and `v` is in `neighbors(u)` iff `u`
/// is in `neighbors(v)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparseGraph {
    offsets: Vec<usize>,
    targets: Vec<u32>,
}

impl SparseGraph {
    /// Build a graph from arbitrary node pairs. Self-loops are dropped,
    /// duplicates merged and both directions inserted.
    pub fn from_edges<I>(num_nodes: usize, pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut directed = Vec::new();
        for (u, v) in pairs {
            if u >= num_nodes || v >= num_nodes {
                return Err(Error::input(format!(
                    "edge ({u}, {v}) references a node outside [0, {num_nodes})"
                )));
            }
            if u != v {
                directed.push((u as u32, v as u32));
                directed.push((v as u32, u as u32));
            }
        }
        Ok(Self::from_directed(num_nodes, directed))
    }

    /// `directed` must already contain both directions of every edge.
    fn from_directed(num_nodes: usize, mut directed: Vec<(u32, u32)>) -> Self {
        directed.sort_unstable();
        directed.dedup();
        let mut offsets = vec![0usize; num_nodes + 1];
        for &(u, _) in &directed {
            offsets[u as usize + 1] += 1;
        }
        for i in 0..num_nodes {
            offsets[i + 1] += offsets[i];
        }
        let targets = directed.into_iter().map(|(_, v)| v).collect();
        SparseGraph { offsets, targets }
    }

    pub fn empty(num_nodes: usize) -> Self {
        SparseGraph {
            offsets: vec![0; num_nodes + 1],
            targets: Vec::new(),
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Number of undirected edges.
    pub fn num_edges(&self) -> usize {
        self.targets.len() / 2
    }

    /// Number of stored directed entries (twice the edge count).
    pub fn num_entries(&self) -> usize {
        self.targets.len()
    }

    pub fn degree(&self, u: usize) -> usize {
        self.offsets[u + 1] - self.offsets[u]
    }

    pub fn degrees(&self) -> Vec<usize> {
        (0..self.num_nodes()).map(|u| self.degree(u)).collect()
    }

    pub fn neighbors(&self, u: usize) -> &[u32] {
        &self.targets[self.offsets[u]..self.offsets[u + 1]]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.num_nodes() && self.neighbors(u).binary_search(&(v as u32)).is_ok()
    }

    /// Undirected edges as `(u, v)` with `u < v`, in ascending order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.num_nodes()).flat_map(move |u| {
            self.neighbors(u)
                .iter()
                .map(|&v| v as usize)
                .filter(move |&v| u < v)
                .map(move |v| (u, v))
        })
    }

    /// Union of this graph with extra edges (self-loops and duplicates skipped).
    pub fn with_added_edges<I>(&self, extra: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        Self::from_edges(self.num_nodes(), self.edges().chain(extra))
    }

    /// Keep only the edges accepted by `keep`. Node ids are unchanged.
    pub fn filter_edges(&self, mut keep: impl FnMut(usize, usize) -> bool) -> Self {
        let mut directed = Vec::with_capacity(self.targets.len());
        for (u, v) in self.edges() {
            if keep(u, v) {
                directed.push((u as u32, v as u32));
                directed.push((v as u32, u as u32));
            }
        }
        Self::from_directed(self.num_nodes(), directed)
    }

    /// Subgraph induced by `nodes`, re-indexed so that `nodes[i]` becomes node `i`.
    pub fn induced_subgraph(&self, nodes: &[usize]) -> Self {
        let mut index = vec![u32::MAX; self.num_nodes()];
        for (i, &u) in nodes.iter().enumerate() {
            index[u] = i as u32;
        }
        let mut directed = Vec::new();
        for (i, &u) in nodes.iter().enumerate() {
            for &v in self.neighbors(u) {
                let j = index[v as usize];
                if j != u32::MAX {
                    directed.push((i as u32, j));
                }
            }
        }
        Self::from_directed(nodes.len(), directed)
    }

    pub fn is_subgraph_of(&self, other: &SparseGraph) -> bool {
        self.num_nodes() == other.num_nodes() && self.edges().all(|(u, v)| other.has_edge(u, v))
    }
}

/// Weighted operator with the sparsity pattern of a graph, usually
/// `D^{-1/2} A D^{-1/2}` or its self-loop renormalized variant.
#[derive(Debug, Clone)]
pub struct NormalizedAdjacency {
    offsets: Vec<usize>,
    cols: Vec<u32>,
    weights: Vec<f64>,
}

impl NormalizedAdjacency {
    /// `D^{-1/2} A D^{-1/2}`. Isolated nodes get empty rows.
    pub fn new(g: &SparseGraph) -> Self {
        let inv_sqrt: Vec<f64> = g
            .degrees()
            .into_iter()
            .map(|d| if d == 0 { 0.0 } else { 1.0 / (d as f64).sqrt() })
            .collect();
        let mut weights = Vec::with_capacity(g.num_entries());
        for u in 0..g.num_nodes() {
            for &v in g.neighbors(u) {
                weights.push(inv_sqrt[u] * inv_sqrt[v as usize]);
            }
        }
        NormalizedAdjacency {
            offsets: g.offsets.clone(),
            cols: g.targets.clone(),
            weights,
        }
    }

    /// `D̂^{-1/2} (A + I) D̂^{-1/2}` with `D̂ = D + I`, the GCN propagation rule.
    pub fn with_self_loops(g: &SparseGraph) -> Self {
        let n = g.num_nodes();
        let inv_sqrt: Vec<f64> = (0..n)
            .map(|u| 1.0 / ((g.degree(u) + 1) as f64).sqrt())
            .collect();
        let mut offsets = Vec::with_capacity(n + 1);
        let mut cols = Vec::with_capacity(g.num_entries() + n);
        let mut weights = Vec::with_capacity(g.num_entries() + n);
        offsets.push(0);
        for u in 0..n {
            let mut self_done = false;
            for &v in g.neighbors(u) {
                if !self_done && v as usize > u {
                    cols.push(u as u32);
                    weights.push(inv_sqrt[u] * inv_sqrt[u]);
                    self_done = true;
                }
                cols.push(v);
                weights.push(inv_sqrt[u] * inv_sqrt[v as usize]);
            }
            if !self_done {
                cols.push(u as u32);
                weights.push(inv_sqrt[u] * inv_sqrt[u]);
            }
            offsets.push(cols.len());
        }
        NormalizedAdjacency {
            offsets,
            cols,
            weights,
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn nnz(&self) -> usize {
        self.weights.len()
    }

    /// `(column, weight)` pairs of row `u`, columns ascending.
    pub fn row(&self, u: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.offsets[u]..self.offsets[u + 1];
        self.cols[r.clone()]
            .iter()
            .zip(&self.weights[r])
            .map(|(&c, &w)| (c as usize, w))
    }

    /// Weight of entry `(u, v)`, zero when absent.
    pub fn weight(&self, u: usize, v: usize) -> f64 {
        let r = self.offsets[u]..self.offsets[u + 1];
        match self.cols[r.clone()].binary_search(&(v as u32)) {
            Ok(i) => self.weights[r.start + i],
            Err(_) => 0.0,
        }
    }

    /// Dense copy, for tests and small oracles.
    pub fn to_dense(&self) -> Array2<f64> {
        let n = self.num_nodes();
        let mut out = Array2::zeros((n, n));
        for u in 0..n {
            for (v, w) in self.row(u) {
                out[[u, v]] = w;
            }
        }
        out
    }

    /// Sparse-dense product `self · x`.
    pub fn spmm(&self, x: &ArrayView2<f64>) -> Result<Array2<f64>> {
        let mut out = Array2::zeros(x.raw_dim());
        self.spmm_into(x, &mut out)?;
        Ok(out)
    }

    /// Writes `self · x` into `out`. Rows are summed in ascending column order.
    pub fn spmm_into(&self, x: &ArrayView2<f64>, out: &mut Array2<f64>) -> Result<()> {
        if x.nrows() != self.num_nodes() || out.dim() != x.dim() {
            return Err(Error::input(format!(
                "spmm shape mismatch: operator has {} rows, input {:?}, output {:?}",
                self.num_nodes(),
                x.dim(),
                out.dim()
            )));
        }
        let width = x.ncols();
        out.fill(0.0);
        match (x.as_slice(), out.as_slice_mut()) {
            (Some(xs), Some(os)) => {
                for u in 0..self.num_nodes() {
                    let orow = &mut os[u * width..(u + 1) * width];
                    for k in self.offsets[u]..self.offsets[u + 1] {
                        let w = self.weights[k];
                        let c = self.cols[k] as usize;
                        let xrow = &xs[c * width..(c + 1) * width];
                        for (o, &xv) in orow.iter_mut().zip(xrow) {
                            *o += w * xv;
                        }
                    }
                }
            }
            _ => {
                for u in 0..self.num_nodes() {
                    let mut orow = out.row_mut(u);
                    for (c, w) in self.row(u) {
                        orow.scaled_add(w, &x.row(c));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Component id per node, dense from 0 in order of the smallest node id.
pub fn connected_components(g: &SparseGraph) -> Vec<usize> {
    let n = g.num_nodes();
    let mut comp = vec![usize::MAX; n];
    let mut next = 0;
    let mut queue = VecDeque::new();
    for start in 0..n {
        if comp[start] != usize::MAX {
            continue;
        }
        comp[start] = next;
        queue.push_back(start);
        while let Some(u) = queue.pop_front() {
            for &v in g.neighbors(u) {
                let v = v as usize;
                if comp[v] == usize::MAX {
                    comp[v] = next;
                    queue.push_back(v);
                }
            }
        }
        next += 1;
    }
    comp
}

pub fn count_components(g: &SparseGraph) -> usize {
    connected_components(g).into_iter().max().map_or(0, |m| m + 1)
}

/// Edge homophily: the fraction of edges whose endpoints share a label.
///
/// Edges touching a node with unknown label are ignored. With no countable
/// edge the graph is vacuously homophilous and 1.0 is returned.
pub fn homophily_index(g: &SparseGraph, labels: &LabelSet) -> f64 {
    let (same, total) = homophily_counts(g, labels);
    if total == 0 {
        1.0
    } else {
        same as f64 / total as f64
    }
}

/// `(homophilous edges, countable edges)`.
pub fn homophily_counts(g: &SparseGraph, labels: &LabelSet) -> (usize, usize) {
    let mut same = 0;
    let mut total = 0;
    for (u, v) in g.edges() {
        if let (Some(a), Some(b)) = (labels.label(u), labels.label(v)) {
            total += 1;
            if a == b {
                same += 1;
            }
        }
    }
    (same, total)
}

/// Parse a tab/whitespace separated edge list; `#` starts a comment.
pub fn read_edge_list(path: &Path) -> Result<Vec<(usize, usize)>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_edge_list(&text, path)
}

pub(crate) fn parse_edge_list(text: &str, path: &Path) -> Result<Vec<(usize, usize)>> {
    let mut pairs = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message,
        };
        let mut fields = line.split_whitespace();
        let (Some(a), Some(b), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(parse_err(format!("expected `src<TAB>dst`, got `{line}`")));
        };
        let u = a
            .parse()
            .map_err(|_| parse_err(format!("bad node id `{a}`")))?;
        let v = b
            .parse()
            .map_err(|_| parse_err(format!("bad node id `{b}`")))?;
        pairs.push((u, v));
    }
    Ok(pairs)
}

/// Read an edge list and build the graph over `num_nodes` nodes.
pub fn load_graph(path: &Path, num_nodes: usize) -> Result<SparseGraph> {
    SparseGraph::from_edges(num_nodes, read_edge_list(path)?)
}

pub fn edge_list_string(g: &SparseGraph) -> String {
    let mut s = format!("# nodes={} edges={}\n", g.num_nodes(), g.num_edges());
    for (u, v) in g.edges() {
        let _ = writeln!(s, "{u}\t{v}");
    }
    s
}

pub fn write_edge_list(path: &Path, g: &SparseGraph) -> Result<()> {
    std::fs::write(path, edge_list_string(g)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::labels::Split;
    use ndarray::array;
    use proptest::prelude::*;

    fn path3() -> SparseGraph {
        SparseGraph::from_edges(3, [(0, 1), (1, 2)]).unwrap()
    }

    #[test]
    fn build_dedups_and_drops_self_loops() {
        let g = SparseGraph::from_edges(3, [(0, 1), (1, 0), (2, 2)]).unwrap();
        assert_eq!(g.num_edges(), 1);
        assert_eq!(g.neighbors(0), &[1]);
        assert_eq!(g.neighbors(1), &[0]);
        assert!(g.neighbors(2).is_empty());
    }

    #[test]
    fn build_empty_and_path() {
        let g = SparseGraph::from_edges(4, []).unwrap();
        assert_eq!((g.num_nodes(), g.num_edges()), (4, 0));
        assert_eq!(path3().degrees(), vec![1, 2, 1]);
    }

    #[test]
    fn build_rejects_out_of_range() {
        assert!(matches!(
            SparseGraph::from_edges(2, [(0, 2)]),
            Err(Error::Input(_))
        ));
    }

    #[test]
    fn normalized_weights() {
        let single = SparseGraph::from_edges(2, [(0, 1)]).unwrap();
        assert_eq!(NormalizedAdjacency::new(&single).weight(0, 1), 1.0);
        let a = NormalizedAdjacency::new(&path3());
        assert!((a.weight(0, 1) - 1.0 / 2f64.sqrt()).abs() < 1e-15);
        let star = SparseGraph::from_edges(5, (1..5).map(|i| (0, i))).unwrap();
        assert!((NormalizedAdjacency::new(&star).weight(0, 3) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn self_loop_operator_keeps_isolated_rows() {
        let g = SparseGraph::from_edges(3, [(0, 1)]).unwrap();
        let a = NormalizedAdjacency::with_self_loops(&g);
        assert_eq!(a.weight(2, 2), 1.0);
        assert!((a.weight(0, 0) - 0.5).abs() < 1e-15);
        assert!((a.weight(0, 1) - 0.5).abs() < 1e-15);
        let cols: Vec<usize> = a.row(1).map(|(c, _)| c).collect();
        assert_eq!(cols, vec![0, 1]);
    }

    #[test]
    fn spmm_examples() {
        let single = SparseGraph::from_edges(2, [(0, 1)]).unwrap();
        let a = NormalizedAdjacency::new(&single);
        let y = a.spmm(&array![[3.0], [5.0]].view()).unwrap();
        assert_eq!(y, array![[5.0], [3.0]]);

        let g = SparseGraph::from_edges(3, [(0, 1)]).unwrap();
        let y = NormalizedAdjacency::new(&g)
            .spmm(&array![[1.0, 2.0], [3.0, 4.0], [7.0, 7.0]].view())
            .unwrap();
        assert_eq!(y.row(2).to_vec(), vec![0.0, 0.0]);

        // Path 0-1-2 by hand: row 1 = w10*1 + w12*1 = 2/sqrt(2).
        let y = NormalizedAdjacency::new(&path3())
            .spmm(&array![[1.0], [0.0], [1.0]].view())
            .unwrap();
        assert!(y[[0, 0]].abs() < 1e-15 && y[[2, 0]].abs() < 1e-15);
        assert!((y[[1, 0]] - 2.0 / 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn spmm_shape_mismatch() {
        let a = NormalizedAdjacency::new(&path3());
        assert!(a.spmm(&Array2::<f64>::zeros((2, 1)).view()).is_err());
    }

    #[test]
    fn components_examples() {
        assert_eq!(count_components(&path3()), 1);
        let two = SparseGraph::from_edges(4, [(0, 1), (2, 3)]).unwrap();
        assert_eq!(connected_components(&two), vec![0, 0, 1, 1]);
        assert_eq!(count_components(&SparseGraph::empty(4)), 4);
    }

    fn labelled(labels: &[u32]) -> LabelSet {
        LabelSet::new(
            labels.iter().map(|&l| Some(l)).collect(),
            vec![Split::Train; labels.len()],
        )
        .unwrap()
    }

    #[test]
    fn homophily_examples() {
        let tri = SparseGraph::from_edges(3, [(0, 1), (1, 2), (0, 2)]).unwrap();
        assert_eq!(homophily_index(&tri, &labelled(&[4, 4, 4])), 1.0);
        let e = SparseGraph::from_edges(2, [(0, 1)]).unwrap();
        assert_eq!(homophily_index(&e, &labelled(&[0, 1])), 0.0);
        let c4 = SparseGraph::from_edges(4, [(0, 1), (1, 2), (2, 3), (3, 0)]).unwrap();
        assert_eq!(homophily_index(&c4, &labelled(&[0, 0, 1, 1])), 0.5);
        assert_eq!(homophily_index(&SparseGraph::empty(3), &labelled(&[0, 1, 2])), 1.0);
    }

    #[test]
    fn homophily_skips_unknown_labels() {
        let g = SparseGraph::from_edges(3, [(0, 1), (1, 2)]).unwrap();
        let labels = LabelSet::new(
            vec![Some(0), Some(0), None],
            vec![Split::Train, Split::Train, Split::Test],
        )
        .unwrap();
        assert_eq!(homophily_counts(&g, &labels), (1, 1));
    }

    #[test]
    fn edge_list_parsing() {
        let text = "# header\n0\t1\n\n2 3 # trailing\n";
        let pairs = parse_edge_list(text, Path::new("x")).unwrap();
        assert_eq!(pairs, vec![(0, 1), (2, 3)]);
        let err = parse_edge_list("0\t1\n0\tx\n", Path::new("x")).unwrap_err();
        assert!(err.to_string().contains("x:2"), "{err}");
    }

    fn arb_graph() -> impl Strategy<Value = SparseGraph> {
        (2usize..30).prop_flat_map(|n| {
            proptest::collection::vec((0..n, 0..n), 0..80)
                .prop_map(move |pairs| SparseGraph::from_edges(n, pairs).unwrap())
        })
    }

    proptest! {
        #[test]
        fn structure_invariants(g in arb_graph()) {
            let mut entries = 0;
            for u in 0..g.num_nodes() {
                let nb = g.neighbors(u);
                prop_assert!(nb.windows(2).all(|w| w[0] < w[1]));
                for &v in nb {
                    prop_assert!(v as usize != u);
                    prop_assert!(g.has_edge(v as usize, u));
                }
                entries += nb.len();
            }
            prop_assert_eq!(entries, 2 * g.num_edges());
        }

        #[test]
        fn normalized_adjacency_symmetric_and_bounded(g in arb_graph()) {
            let a = NormalizedAdjacency::new(&g);
            for (u, v) in g.edges() {
                let w = a.weight(u, v);
                prop_assert!(w > 0.0 && w <= 1.0);
                prop_assert_eq!(w, a.weight(v, u));
            }
        }

        #[test]
        fn components_never_increase(g in arb_graph(), extra in proptest::collection::vec((0usize..30, 0usize..30), 1..10)) {
            let n = g.num_nodes();
            let before = count_components(&g);
            let h = g.with_added_edges(extra.into_iter().map(|(u, v)| (u % n, v % n))).unwrap();
            prop_assert!(count_components(&h) <= before);
        }

        #[test]
        fn homophily_permutation_invariant(g in arb_graph(), seed in 0u64..1000) {
            let n = g.num_nodes();
            let raw: Vec<u32> = (0..n as u64).map(|i| (crate::rng::derive(seed, i) % 3) as u32).collect();
            let perm = [2u32, 0, 1];
            let permuted: Vec<u32> = raw.iter().map(|&l| perm[l as usize]).collect();
            prop_assert_eq!(homophily_index(&g, &labelled(&raw)), homophily_index(&g, &labelled(&permuted)));
        }
    }

    #[test]
    fn regular_graph_row_sums_are_one() {
        // 6-cycle is 2-regular.
        let g = SparseGraph::from_edges(6, (0..6).map(|i| (i, (i + 1) % 6))).unwrap();
        let ones = Array2::ones((6, 1));
        let y = NormalizedAdjacency::new(&g).spmm(&ones.view()).unwrap();
        assert!(y.iter().all(|&v| (v - 1.0).abs() < 1e-15));
    }
}
