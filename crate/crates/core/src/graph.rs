//! Weighted undirected graphs, Laplacians and their spectra.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::scalar::Real;

/// Laplacian eigenvalues below this magnitude are reported as exactly zero.
/// Connectivity decisions made from a spectrum use the same constant.
pub const ZERO_EIGENVALUE_TOL: f64 = 1e-11;

/// Largest node count accepted by [`enumerate_connected_unweighted`].
pub const MAX_ENUMERATION_NODES: usize = 7;

/// Undirected graph on `n_nodes` nodes with positive edge weights.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph<T> {
    n_nodes: usize,
    edges: Vec<(usize, usize, T)>,
}

/// Standard topologies with uniform edge weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphKind {
    Path,
    Cycle,
    Complete,
    Star,
}

impl GraphKind {
    pub fn name(self) -> &'static str {
        match self {
            GraphKind::Path => "path",
            GraphKind::Cycle => "cycle",
            GraphKind::Complete => "complete",
            GraphKind::Star => "star",
        }
    }
}

impl std::str::FromStr for GraphKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "path" => Ok(GraphKind::Path),
            "cycle" => Ok(GraphKind::Cycle),
            "complete" => Ok(GraphKind::Complete),
            "star" => Ok(GraphKind::Star),
            other => Err(Error::Invalid(format!(
                "unknown graph kind '{other}' (expected path, cycle, complete or star)"
            ))),
        }
    }
}

impl<T: Real> WeightedGraph<T> {
    /// Validating constructor: indices in range, no self-loops, no repeated
    /// unordered pair, finite positive weights.
    pub fn new(n_nodes: usize, edges: Vec<(usize, usize, T)>) -> Result<Self> {
        if n_nodes == 0 {
            return Err(Error::Invalid("graph needs at least one node".into()));
        }
        let mut seen = BTreeSet::new();
        for &(i, j, w) in &edges {
            if i >= n_nodes || j >= n_nodes {
                return Err(Error::Invalid(format!(
                    "edge ({i}, {j}) references a node outside 0..{n_nodes}"
                )));
            }
            if i == j {
                return Err(Error::Invalid(format!("self-loop at node {i}")));
            }
            if !(w > T::zero()) || !w.is_finite() {
                return Err(Error::Invalid(format!(
                    "edge ({i}, {j}) has non-positive or non-finite weight {w}"
                )));
            }
            if !seen.insert((i.min(j), i.max(j))) {
                return Err(Error::Invalid(format!("duplicate edge ({i}, {j})")));
            }
        }
        Ok(Self { n_nodes, edges })
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn edges(&self) -> &[(usize, usize, T)] {
        &self.edges
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn total_weight(&self) -> T {
        self.edges.iter().fold(T::zero(), |s, e| s + e.2)
    }

    /// Largest number of incident edges at any node.
    pub fn max_degree(&self) -> usize {
        let mut deg = vec![0usize; self.n_nodes];
        for &(i, j, _) in &self.edges {
            deg[i] += 1;
            deg[j] += 1;
        }
        deg.into_iter().max().unwrap_or(0)
    }

    /// Copy with every weight multiplied by `factor > 0`.
    pub fn scaled(&self, factor: T) -> Result<Self> {
        Self::new(
            self.n_nodes,
            self.edges.iter().map(|&(i, j, w)| (i, j, w * factor)).collect(),
        )
    }

    pub fn laplacian(&self) -> Mat<T> {
        laplacian(self)
    }

    pub fn is_connected(&self) -> bool {
        is_connected(self)
    }
}

/// Symmetric Laplacian with off-diagonal entries `-w_ij` and zero row sums.
pub fn laplacian<T: Real>(g: &WeightedGraph<T>) -> Mat<T> {
    let n = g.n_nodes;
    let mut l = Mat::zeros(n, n);
    for &(i, j, w) in &g.edges {
        l[(i, j)] -= w;
        l[(j, i)] -= w;
        l[(i, i)] += w;
        l[(j, j)] += w;
    }
    l
}

/// Eigendecomposition `L = U Λ Uᵀ` with ascending eigenvalues.
#[derive(Debug, Clone)]
pub struct LaplacianSpectrum<T: Real> {
    pub eigenvalues: Vec<T>,
    /// Orthonormal eigenvectors, one per column, in eigenvalue order.
    pub eigenvectors: Mat<T>,
}

impl<T: Real> LaplacianSpectrum<T> {
    /// Eigenvalues `λ₂, …, λ_N`, the ones that enter spectral sums.
    pub fn nonzero_index(&self) -> &[T] {
        if self.eigenvalues.is_empty() {
            &[]
        } else {
            &self.eigenvalues[1..]
        }
    }

    /// Algebraic connectivity `λ₂` (zero for a single node).
    pub fn algebraic_connectivity(&self) -> T {
        self.eigenvalues.get(1).copied().unwrap_or(T::zero())
    }
}

/// Spectrum of a symmetric Laplacian; eigenvalues with magnitude below
/// [`ZERO_EIGENVALUE_TOL`] are set to exactly zero.
pub fn spectrum<T: Real>(l: &Mat<T>) -> Result<LaplacianSpectrum<T>> {
    crate::linalg::ensure_square(l, "Laplacian")?;
    crate::linalg::ensure_finite(l, "Laplacian")?;
    let asym = (l - l.transpose()).amax();
    if asym > T::lit(1e-12) * (T::one() + l.amax()) {
        return Err(Error::Invalid(format!(
            "Laplacian is not symmetric (max asymmetry {asym})"
        )));
    }
    let n = l.nrows();
    let eig = l.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[a]
            .partial_cmp(&eig.eigenvalues[b])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let tol = zero_tolerance::<T>(l.amax());
    let eigenvalues = order
        .iter()
        .map(|&k| {
            let v = eig.eigenvalues[k];
            if v.abs() < tol {
                T::zero()
            } else {
                v
            }
        })
        .collect();
    let mut eigenvectors = Mat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        eigenvectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok(LaplacianSpectrum {
        eigenvalues,
        eigenvectors,
    })
}

/// Zero-clamp threshold: the declared constant, widened for low-precision
/// scalar types where round-off exceeds it.
fn zero_tolerance<T: Real>(scale: T) -> T {
    T::lit(ZERO_EIGENVALUE_TOL).max(T::machine_eps() * T::lit(64.0) * scale)
}

/// Uniform-weight standard topology on `n` nodes. Stars use node 0 as hub.
pub fn generate<T: Real>(kind: GraphKind, n: usize, weight: T) -> Result<WeightedGraph<T>> {
    let min = if kind == GraphKind::Cycle { 3 } else { 2 };
    if n < min {
        return Err(Error::Invalid(format!(
            "{} graph needs at least {min} nodes, got {n}",
            kind.name()
        )));
    }
    let edges = match kind {
        GraphKind::Path => (0..n - 1).map(|i| (i, i + 1, weight)).collect(),
        GraphKind::Cycle => (0..n).map(|i| (i, (i + 1) % n, weight)).collect(),
        GraphKind::Complete => (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j, weight)))
            .collect(),
        GraphKind::Star => (1..n).map(|j| (0, j, weight)).collect(),
    };
    WeightedGraph::new(n, edges)
}

/// True iff the graph has a single connected component.
pub fn is_connected<T: Real>(g: &WeightedGraph<T>) -> bool {
    let n = g.n_nodes;
    let mut adj = vec![Vec::new(); n];
    for &(i, j, _) in &g.edges {
        adj[i].push(j);
        adj[j].push(i);
    }
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    let mut count = 1;
    while let Some(v) = stack.pop() {
        for &u in &adj[v] {
            if !seen[u] {
                seen[u] = true;
                count += 1;
                stack.push(u);
            }
        }
    }
    count == n
}

/// Every labeled connected simple graph on `n` nodes, unit weights, each
/// exactly once. Edge subsets are visited in increasing bitmask order over
/// the pairs `(i, j), i < j` in lexicographic order.
pub fn enumerate_connected_unweighted<T: Real>(
    n: usize,
) -> Result<impl Iterator<Item = WeightedGraph<T>>> {
    if !(2..=MAX_ENUMERATION_NODES).contains(&n) {
        return Err(Error::Invalid(format!(
            "enumeration supports 2 to {MAX_ENUMERATION_NODES} nodes, got {n}"
        )));
    }
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .collect();
    let total: u64 = 1 << pairs.len();
    Ok((0..total).filter_map(move |mask| {
        if !mask_connected(n, &pairs, mask) {
            return None;
        }
        let edges = pairs
            .iter()
            .enumerate()
            .filter(|(b, _)| mask >> b & 1 == 1)
            .map(|(_, &(i, j))| (i, j, T::one()))
            .collect();
        Some(WeightedGraph { n_nodes: n, edges })
    }))
}

fn mask_connected(n: usize, pairs: &[(usize, usize)], mask: u64) -> bool {
    let mut reach: u32 = 1;
    loop {
        let before = reach;
        for (b, &(i, j)) in pairs.iter().enumerate() {
            if mask >> b & 1 == 1 && ((reach >> i) & 1 == 1 || (reach >> j) & 1 == 1) {
                reach |= (1 << i) | (1 << j);
            }
        }
        if reach == before {
            return reach.count_ones() as usize == n;
        }
    }
}
