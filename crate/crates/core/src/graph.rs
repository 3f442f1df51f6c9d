//! Sparse graph storage with a distinguished origin (vertex 0), breadth-first
//! annuli and induced subgraphs.

use std::collections::VecDeque;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Features;

/// Adjacency as sorted out-neighbour lists. Vertex 0 is the origin.
#[derive(Clone, Debug, PartialEq)]
pub struct Graph {
    adjacency: Vec<Vec<usize>>,
    directed: bool,
    features: Option<Features>,
}

impl Graph {
    /// Builds a graph on `vertices` vertices. For undirected graphs each
    /// pair is stored in both lists. Duplicate edges are merged; self-loops
    /// are rejected.
    pub fn from_edges(vertices: usize, edges: &[(usize, usize)], directed: bool) -> Result<Self> {
        if vertices == 0 {
            return Err(Error::invalid("a graph needs at least the origin"));
        }
        let mut adjacency = vec![Vec::new(); vertices];
        for &(u, v) in edges {
            for w in [u, v] {
                if w >= vertices {
                    return Err(Error::VertexOutOfRange { index: w, len: vertices });
                }
            }
            if u == v {
                return Err(Error::invalid(format!("self-loop at vertex {u}")));
            }
            adjacency[u].push(v);
            if !directed {
                adjacency[v].push(u);
            }
        }
        for list in &mut adjacency {
            list.sort_unstable();
            list.dedup();
        }
        Ok(Graph { adjacency, directed, features: None })
    }

    /// The origin alone.
    pub fn isolated_origin() -> Self {
        Graph { adjacency: vec![Vec::new()], directed: false, features: None }
    }

    pub fn set_features(&mut self, features: Features) {
        self.features = Some(features);
    }

    pub fn features(&self) -> Option<&Features> {
        self.features.as_ref()
    }

    pub fn vertex_count(&self) -> usize {
        self.adjacency.len()
    }

    /// Number of non-origin vertices.
    pub fn n_other(&self) -> usize {
        self.adjacency.len() - 1
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    /// Stored edges: ordered pairs for directed graphs, unordered otherwise.
    pub fn edge_count(&self) -> usize {
        let total: usize = self.adjacency.iter().map(Vec::len).sum();
        if self.directed {
            total
        } else {
            total / 2
        }
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adjacency[i]
    }

    /// Out-degree `B_i`.
    pub fn out_degree(&self, i: usize) -> Result<usize> {
        self.adjacency.get(i).map(Vec::len).ok_or(Error::VertexOutOfRange { index: i, len: self.adjacency.len() })
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.adjacency.iter().map(Vec::len).collect()
    }

    /// Edge list, each undirected edge once with `src < dst`.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.edge_count());
        for (u, list) in self.adjacency.iter().enumerate() {
            for &v in list {
                if self.directed || u < v {
                    out.push((u, v));
                }
            }
        }
        out
    }

    /// Adjacency used for geodesic distances.
    fn traversal_adjacency(&self, geodesic: Geodesic) -> Option<Vec<Vec<usize>>> {
        if !self.directed || geodesic == Geodesic::OutEdges {
            return None;
        }
        let mut sym = self.adjacency.clone();
        for (u, list) in self.adjacency.iter().enumerate() {
            for &v in list {
                sym[v].push(u);
            }
        }
        for list in &mut sym {
            list.sort_unstable();
            list.dedup();
        }
        Some(sym)
    }

    /// Subgraph induced by `keep` (which must contain 0). Vertices are
    /// relabelled in ascending original order, so the origin stays at 0.
    /// Returns the subgraph and the map new index -> original index.
    pub fn induced_subgraph(&self, keep: &[usize]) -> Result<(Graph, Vec<usize>)> {
        let mut kept: Vec<usize> = keep.to_vec();
        kept.sort_unstable();
        kept.dedup();
        if kept.first() != Some(&0) {
            return Err(Error::invalid("induced subgraph must keep the origin"));
        }
        if let Some(&last) = kept.last() {
            if last >= self.vertex_count() {
                return Err(Error::VertexOutOfRange { index: last, len: self.vertex_count() });
            }
        }
        let mut new_index = vec![usize::MAX; self.vertex_count()];
        for (new, &old) in kept.iter().enumerate() {
            new_index[old] = new;
        }
        // neighbour lists stay sorted because relabelling is monotone
        let adjacency = kept
            .iter()
            .map(|&old| {
                self.adjacency[old]
                    .iter()
                    .filter_map(|&v| (new_index[v] != usize::MAX).then_some(new_index[v]))
                    .collect()
            })
            .collect();
        let features = self.features.as_ref().map(|f| {
            let mut sub = Features::with_capacity(f.dim(), kept.len());
            for &old in &kept {
                sub.push(f.point(old)).expect("same dimension");
            }
            sub
        });
        Ok((Graph { adjacency, directed: self.directed, features }, kept))
    }

    /// Writes the `src,dst` edge-list CSV.
    pub fn write_edge_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["src", "dst"])?;
        for (u, v) in self.edges() {
            wtr.write_record([u.to_string(), v.to_string()])?;
        }
        wtr.flush()?;
        Ok(())
    }

    /// Reads a `src,dst` edge-list CSV. The vertex count is the larger of
    /// `min_vertices` and one past the largest index seen.
    pub fn read_edge_csv<R: Read>(r: R, directed: bool, min_vertices: usize) -> Result<Graph> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
        let headers = rdr.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["src", "dst"] {
            return Err(Error::Parse { path: "<edges>".into(), line: 1, msg: "header must be `src,dst`".into() });
        }
        let mut edges = Vec::new();
        let mut max = 0usize;
        for rec in rdr.deserialize::<EdgeRow>() {
            let row = rec.map_err(|e| Error::Parse {
                path: "<edges>".into(),
                line: e.position().map(|p| p.line()).unwrap_or(0),
                msg: e.to_string(),
            })?;
            max = max.max(row.src).max(row.dst);
            edges.push((row.src, row.dst));
        }
        let n = min_vertices.max(if edges.is_empty() { 1 } else { max + 1 });
        Graph::from_edges(n, &edges, directed)
    }
}

#[derive(Deserialize)]
struct EdgeRow {
    src: usize,
    dst: usize,
}

/// Which edges count when measuring geodesic distance on a directed graph.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Geodesic {
    /// An edge in either direction links the pair.
    #[default]
    Symmetrized,
    OutEdges,
}

/// Breadth-first layers around the origin: `layers[l]` holds the vertices
/// at geodesic distance exactly `l`, in ascending index order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Annuli {
    layers: Vec<Vec<usize>>,
}

impl Annuli {
    pub fn layers(&self) -> &[Vec<usize>] {
        &self.layers
    }

    pub fn layer(&self, l: usize) -> &[usize] {
        &self.layers[l]
    }

    pub fn eccentricity(&self) -> usize {
        self.layers.len() - 1
    }

    /// `|V_l \ V_{l-1}|` for every `l`.
    pub fn sizes(&self) -> Vec<usize> {
        self.layers.iter().map(Vec::len).collect()
    }

    /// `|V_l|` for every `l`.
    pub fn cumulative_sizes(&self) -> Vec<usize> {
        self.layers
            .iter()
            .scan(0, |acc, l| {
                *acc += l.len();
                Some(*acc)
            })
            .collect()
    }

    pub fn reachable(&self) -> usize {
        self.layers.iter().map(Vec::len).sum()
    }

    /// Geodesic distance of every vertex, `None` when unreachable.
    pub fn distances(&self, vertices: usize) -> Vec<Option<usize>> {
        let mut d = vec![None; vertices];
        for (l, layer) in self.layers.iter().enumerate() {
            for &v in layer {
                d[v] = Some(l);
            }
        }
        d
    }
}

pub fn bfs_annuli(g: &Graph) -> Annuli {
    bfs_annuli_with(g, Geodesic::default())
}

pub fn bfs_annuli_with(g: &Graph, geodesic: Geodesic) -> Annuli {
    let sym = g.traversal_adjacency(geodesic);
    let adj = sym.as_deref().unwrap_or(&g.adjacency);
    let mut dist = vec![usize::MAX; g.vertex_count()];
    dist[0] = 0;
    let mut layers: Vec<Vec<usize>> = vec![vec![0]];
    let mut queue = VecDeque::from([0usize]);
    while let Some(u) = queue.pop_front() {
        let d = dist[u] + 1;
        for &v in &adj[u] {
            if dist[v] == usize::MAX {
                dist[v] = d;
                if layers.len() <= d {
                    layers.push(Vec::new());
                }
                layers[d].push(v);
                queue.push_back(v);
            }
        }
    }
    for layer in &mut layers {
        layer.sort_unstable();
    }
    Annuli { layers }
}
