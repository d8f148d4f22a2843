use std::fmt::Write as _;
use std::io::BufRead;

use super::{EdgeMap, GraphParams, RgbImage};
use crate::error::{Error, Result};

/// Sparse undirected weighted graph in compressed adjacency form.
///
/// Every undirected edge is stored twice (once per endpoint); `edge_count`
/// counts it once. Neighbor lists are sorted by node id.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedGraph {
    offsets: Vec<usize>,
    neighbors: Vec<u32>,
    weights: Vec<f64>,
    edge_count: usize,
}

impl WeightedGraph {
    /// Builds a graph from an undirected edge list. Self-loops, duplicate
    /// pairs, and weights outside `(0, 1]` are rejected.
    pub fn from_edges(node_count: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        if node_count > u32::MAX as usize {
            return Err(Error::InvalidParameter(format!(
                "{node_count} nodes exceed the u32 id space"
            )));
        }
        let mut degree = vec![0usize; node_count];
        for &(u, v, w) in edges {
            if u >= node_count || v >= node_count {
                return Err(Error::InvalidParameter(format!(
                    "edge ({u}, {v}) references a node outside 0..{node_count}"
                )));
            }
            if u == v {
                return Err(Error::InvalidParameter(format!("self-loop on node {u}")));
            }
            if !(w > 0.0 && w <= 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "edge ({u}, {v}) has weight {w} outside (0, 1]"
                )));
            }
            degree[u] += 1;
            degree[v] += 1;
        }
        let mut offsets = Vec::with_capacity(node_count + 1);
        offsets.push(0);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let mut cursor = offsets[..node_count].to_vec();
        let total = offsets[node_count];
        let mut neighbors = vec![0u32; total];
        let mut weights = vec![0.0; total];
        for &(u, v, w) in edges {
            neighbors[cursor[u]] = v as u32;
            weights[cursor[u]] = w;
            cursor[u] += 1;
            neighbors[cursor[v]] = u as u32;
            weights[cursor[v]] = w;
            cursor[v] += 1;
        }
        for u in 0..node_count {
            let range = offsets[u]..offsets[u + 1];
            let mut pairs: Vec<(u32, f64)> = neighbors[range.clone()]
                .iter()
                .copied()
                .zip(weights[range.clone()].iter().copied())
                .collect();
            pairs.sort_by_key(|p| p.0);
            if pairs.windows(2).any(|p| p[0].0 == p[1].0) {
                return Err(Error::InvalidParameter(format!(
                    "duplicate edge at node {u}"
                )));
            }
            for (slot, (n, w)) in range.zip(pairs) {
                neighbors[slot] = n;
                weights[slot] = w;
            }
        }
        Ok(Self {
            offsets,
            neighbors,
            weights,
            edge_count: edges.len(),
        })
    }

    pub fn node_count(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    /// `(neighbor, weight)` pairs of `v`, sorted by neighbor id.
    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.offsets[v]..self.offsets[v + 1];
        self.neighbors[range.clone()]
            .iter()
            .map(|&n| n as usize)
            .zip(self.weights[range].iter().copied())
    }

    pub fn weighted_degree(&self, v: usize) -> f64 {
        self.weights[self.offsets[v]..self.offsets[v + 1]].iter().sum()
    }

    pub fn weight(&self, u: usize, v: usize) -> Option<f64> {
        let range = self.offsets[u]..self.offsets[u + 1];
        let slice = &self.neighbors[range.clone()];
        slice
            .binary_search(&(v as u32))
            .ok()
            .map(|i| self.weights[range.start + i])
    }

    /// Each undirected edge once, as `(u, v, w)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.node_count())
            .flat_map(move |u| self.neighbors(u).map(move |(v, w)| (u, v, w)))
            .filter(|&(u, v, _)| u < v)
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn adjacency(&self) -> (&[u32], &[f64]) {
        (&self.neighbors, &self.weights)
    }

    /// `u v w` lines with `w` at 9 decimals; the first line is `# nodes N`.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::with_capacity(self.edge_count * 24 + 16);
        writeln!(out, "# nodes {}", self.node_count()).unwrap();
        for (u, v, w) in self.edges() {
            writeln!(out, "{u} {v} {w:.9}").unwrap();
        }
        out
    }

    /// Parses the edge-list dump. Without a `# nodes` header the node count is
    /// one past the largest id seen.
    pub fn read_edge_list(reader: impl BufRead) -> Result<Self> {
        let mut declared = None;
        let mut edges = Vec::new();
        let mut max_id = None;
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::Parse {
                line: i + 1,
                message: e.to_string(),
            })?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                let mut parts = rest.split_whitespace();
                if parts.next() == Some("nodes") {
                    let n = parts.next().and_then(|s| s.parse::<usize>().ok()).ok_or(
                        Error::Parse {
                            line: i + 1,
                            message: "malformed node count header".into(),
                        },
                    )?;
                    declared = Some(n);
                }
                continue;
            }
            let bad = |message: &str| Error::Parse {
                line: i + 1,
                message: message.to_string(),
            };
            let mut parts = line.split_whitespace();
            let u: usize = parts
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| bad("bad source id"))?;
            let v: usize = parts
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| bad("bad target id"))?;
            let w: f64 = parts
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| bad("bad weight"))?;
            if parts.next().is_some() {
                return Err(bad("trailing fields"));
            }
            max_id = Some(max_id.unwrap_or(0).max(u).max(v));
            edges.push((u, v, w));
        }
        let n = declared.unwrap_or(max_id.map_or(0, |m| m + 1));
        Self::from_edges(n, &edges)
    }
}

/// Offsets of the four "forward" 8-neighbors; together with their mirrors they
/// cover the whole neighborhood, so each undirected pair is visited once.
const FORWARD: [(isize, isize); 4] = [(1, 0), (-1, 1), (0, 1), (1, 1)];

/// Affinity between two pixels given the larger of their boundary strengths.
pub fn affinity(a: [u8; 3], b: [u8; 3], boundary: f64, params: &GraphParams) -> f64 {
    let dist2: f64 = a
        .iter()
        .zip(&b)
        .map(|(&p, &q)| {
            let d = p as f64 - q as f64;
            d * d
        })
        .sum();
    let color = (-dist2 / (params.sigma_color * params.sigma_color)).exp();
    let edge = (-boundary / (params.sigma_edge * params.sigma_edge)).exp();
    color * edge
}

/// Builds the 8-neighborhood affinity graph. Node `y * W + x` is pixel `(x, y)`.
pub fn build_graph(img: &RgbImage, edges: &EdgeMap, params: &GraphParams) -> Result<WeightedGraph> {
    params.validate()?;
    let (w, h) = (img.width(), img.height());
    if (edges.width(), edges.height()) != (w, h) {
        return Err(Error::DimensionMismatch {
            expected: (w, h),
            actual: (edges.width(), edges.height()),
        });
    }
    let boundary = edges.values();
    let mut list = Vec::with_capacity(4 * w * h);
    for y in 0..h {
        for x in 0..w {
            let u = y * w + x;
            for (dx, dy) in FORWARD {
                let (nx, ny) = (x as isize + dx, y as isize + dy);
                if nx < 0 || nx >= w as isize || ny >= h as isize {
                    continue;
                }
                let v = ny as usize * w + nx as usize;
                let b = boundary[u].max(boundary[v]);
                let wt = affinity(img.pixels()[u], img.pixels()[v], b, params);
                if wt > params.eps_discard {
                    list.push((u, v, wt));
                }
            }
        }
    }
    WeightedGraph::from_edges(w * h, &list)
}

/// `2|E| / (|V| (|V| - 1))`, counting edges regardless of weight.
pub fn graph_density(g: &WeightedGraph) -> Result<f64> {
    let n = g.node_count();
    if n < 2 {
        return Err(Error::GraphTooSmall(n));
    }
    Ok(2.0 * g.edge_count() as f64 / (n as f64 * (n as f64 - 1.0)))
}

/// Number of 8-neighborhood pairs on an `h x w` grid.
pub fn grid_pair_count(width: usize, height: usize) -> usize {
    (4 * width * height + 2).saturating_sub(3 * height + 3 * width)
}
