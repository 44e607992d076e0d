//! Gabriel graph construction.
//!
//! Two points are joined iff no third point lies strictly inside the ball
//! that has them as diameter. With squared Euclidean distances `d`, the
//! pair `(i, j)` is blocked by `k` iff `d(i,k) + d(j,k) < d(i,j)`; a point on
//! the sphere does not block.

use std::collections::VecDeque;
use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::dataset::Dataset;
use crate::error::{Error, Result};

/// Borrowed row-major coordinates.
#[derive(Debug, Clone, Copy)]
pub struct Points<'a> {
    coords: &'a [f64],
    dim: usize,
}

impl<'a> Points<'a> {
    pub fn new(coords: &'a [f64], dim: usize) -> Result<Self> {
        if dim == 0 || !coords.len().is_multiple_of(dim) {
            return Err(Error::Shape(format!(
                "{} coordinates do not split into rows of {dim}",
                coords.len()
            )));
        }
        if coords.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite coordinate".into()));
        }
        Ok(Self { coords, dim })
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &'a [f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn sq_dist(&self, i: usize, j: usize) -> f64 {
        sq_dist(self.row(i), self.row(j))
    }
}

impl<'a> From<&'a Dataset> for Points<'a> {
    fn from(data: &'a Dataset) -> Self {
        Points {
            coords: data.features(),
            dim: data.dim(),
        }
    }
}

pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    sq_dist(a, b).sqrt()
}

/// Why a pair is (or is not) a Gabriel edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct EdgeCertificate {
    pub i: usize,
    pub j: usize,
    /// A point strictly inside the diametral ball, when the edge is absent.
    pub blocked_by: Option<usize>,
}

/// Tests a single pair against every other point.
pub fn is_gabriel_edge(i: usize, j: usize, points: Points<'_>) -> Result<(bool, EdgeCertificate)> {
    if i == j {
        return Err(Error::InvalidArgument(format!("self pair ({i}, {j})")));
    }
    let n = points.len();
    if i >= n || j >= n {
        return Err(Error::InvalidArgument(format!("pair ({i}, {j}) out of range for {n} points")));
    }
    let dij = points.sq_dist(i, j);
    let blocked_by = (0..n)
        .filter(|&k| k != i && k != j)
        .find(|&k| points.sq_dist(i, k) + points.sq_dist(j, k) < dij);
    Ok((blocked_by.is_none(), EdgeCertificate { i, j, blocked_by }))
}

/// Undirected Gabriel graph over point indices `0..n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GabrielGraph {
    n: usize,
    adjacency: Vec<Vec<usize>>,
    edges: Vec<(usize, usize)>,
}

impl GabrielGraph {
    /// Assembles a graph from an edge list; edges are normalized to `i < j`,
    /// sorted and deduplicated.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut list: Vec<(usize, usize)> = Vec::new();
        for (a, b) in edges {
            if a == b || a >= n || b >= n {
                return Err(Error::InvalidArgument(format!("bad edge ({a}, {b}) for {n} vertices")));
            }
            list.push((a.min(b), a.max(b)));
        }
        list.sort_unstable();
        list.dedup();
        let mut adjacency = vec![Vec::new(); n];
        for &(a, b) in &list {
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
        for nb in &mut adjacency {
            nb.sort_unstable();
        }
        Ok(Self {
            n,
            adjacency,
            edges: list,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Edges as `(i, j)` with `i < j`, ascending.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adjacency[i]
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adjacency
            .get(i)
            .is_some_and(|nb| nb.binary_search(&j).is_ok())
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adjacency[i].len()
    }

    pub fn is_connected(&self) -> bool {
        if self.n == 0 {
            return true;
        }
        let mut seen = vec![false; self.n];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        let mut reached = 1;
        while let Some(v) = queue.pop_front() {
            for &w in &self.adjacency[v] {
                if !seen[w] {
                    seen[w] = true;
                    reached += 1;
                    queue.push_back(w);
                }
            }
        }
        reached == self.n
    }

    /// Two whitespace-separated columns `i j`, one edge per line.
    pub fn write_edge_list<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for (i, j) in &self.edges {
            writeln!(w, "{i}\t{j}")?;
        }
        Ok(())
    }

    /// `{"n": .., "adjacency": [[..], ..]}`
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({ "n": self.n, "adjacency": self.adjacency })
    }
}

pub fn vertex_degrees(graph: &GabrielGraph) -> Vec<usize> {
    (0..graph.n()).map(|i| graph.degree(i)).collect()
}

/// Builds the Gabriel graph. Rejects fewer than two points and duplicate
/// points.
///
/// For each `i` the other points are visited by increasing distance; only
/// points strictly closer to `i` than `j` can block `(i, j)`, so the scan
/// for a pair stops at `j`'s own rank.
pub fn build_gabriel(points: Points<'_>) -> Result<GabrielGraph> {
    let n = points.len();
    if n < 2 {
        return Err(Error::Shape(format!("need at least 2 points, got {n}")));
    }
    check_distinct(points)?;

    let per_vertex: Vec<Vec<usize>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let d_i: Vec<f64> = (0..n).map(|k| points.sq_dist(i, k)).collect();
            let mut order: Vec<usize> = (0..n).filter(|&k| k != i).collect();
            order.sort_by(|&a, &b| d_i[a].total_cmp(&d_i[b]).then(a.cmp(&b)));
            let mut out = Vec::new();
            for j in (i + 1)..n {
                let dij = d_i[j];
                let blocked = order
                    .iter()
                    .take_while(|&&k| d_i[k] < dij)
                    .any(|&k| k != j && d_i[k] + points.sq_dist(j, k) < dij);
                if !blocked {
                    out.push(j);
                }
            }
            out
        })
        .collect();

    let edges = per_vertex
        .into_iter()
        .enumerate()
        .flat_map(|(i, js)| js.into_iter().map(move |j| (i, j)));
    GabrielGraph::from_edges(n, edges)
}

pub fn build_gabriel_for(data: &Dataset) -> Result<GabrielGraph> {
    build_gabriel(Points::from(data))
}

fn check_distinct(points: Points<'_>) -> Result<()> {
    use std::collections::HashMap;
    let mut seen: HashMap<Vec<u64>, usize> = HashMap::with_capacity(points.len());
    for i in 0..points.len() {
        // +0.0 folds -0.0 into 0.0
        let key: Vec<u64> = points.row(i).iter().map(|v| (v + 0.0).to_bits()).collect();
        if let Some(&first) = seen.get(&key) {
            return Err(Error::DuplicatePoints { first, second: i });
        }
        seen.insert(key, i);
    }
    Ok(())
}
