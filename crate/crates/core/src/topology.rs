//! Planar device topologies, their duals, cuts and odd-vertex pairings.
//!
//! A topology carries an explicit planar embedding as a list of faces (each a
//! closed walk of edge indices, outer face included). From it the dual graph
//! is derived directly: one dual vertex per face and one dual edge per primal
//! edge, with dual edge `i` always corresponding to primal edge `i`.
//!
//! Cuts and pairings are linked by the classical duality: an edge set `D`
//! contains the remaining-set of some cut exactly when contracting `D*` in the
//! dual leaves no vertex of odd degree. [`cut_from_pairing`] turns such a
//! pairing back into a cut by 2-colouring `G - D`.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest vertex count accepted by the generators.
pub const MAX_GENERATED_VERTICES: usize = 1 << 16;

/// Device coupling graph with a planar embedding and per-edge ZZ strengths.
///
/// Strengths are stored as angular frequencies (rad/s); files carry λ/2π in Hz.
#[derive(Debug, Clone, PartialEq)]
pub struct TopologyGraph {
    n: usize,
    edges: Vec<(usize, usize)>,
    faces: Vec<Vec<usize>>,
    lambda: Vec<f64>,
    adjacency: Vec<Vec<(usize, usize)>>,
    edge_lookup: HashMap<(usize, usize), usize>,
}

impl TopologyGraph {
    /// Builds and validates a topology. Edge endpoints are normalised so that
    /// `u < v`; edge order is preserved because faces refer to edge indices.
    pub fn new(
        n: usize,
        edges: Vec<(usize, usize)>,
        faces: Vec<Vec<usize>>,
        lambda: Vec<f64>,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::Topology("topology has no vertices".into()));
        }
        if lambda.len() != edges.len() {
            return Err(Error::Topology(format!(
                "{} strengths given for {} edges",
                lambda.len(),
                edges.len()
            )));
        }
        let mut normalized = Vec::with_capacity(edges.len());
        let mut edge_lookup = HashMap::with_capacity(edges.len());
        let mut adjacency = vec![Vec::new(); n];
        for (i, &(a, b)) in edges.iter().enumerate() {
            if a >= n || b >= n {
                return Err(Error::Topology(format!("edge ({a},{b}) refers to a missing vertex")));
            }
            if a == b {
                return Err(Error::Topology(format!("self-loop on vertex {a}")));
            }
            let e = (a.min(b), a.max(b));
            if edge_lookup.insert(e, i).is_some() {
                return Err(Error::Topology(format!("parallel edge ({},{})", e.0, e.1)));
            }
            normalized.push(e);
            adjacency[e.0].push((e.1, i));
            adjacency[e.1].push((e.0, i));
        }
        for adj in &mut adjacency {
            adj.sort_unstable();
        }
        for (i, &l) in lambda.iter().enumerate() {
            if !l.is_finite() || l < 0.0 {
                return Err(Error::Topology(format!("edge {i} has invalid strength {l}")));
            }
        }
        let g = TopologyGraph {
            n,
            edges: normalized,
            faces,
            lambda,
            adjacency,
            edge_lookup,
        };
        g.check_connected()?;
        g.check_embedding()?;
        Ok(g)
    }

    fn check_connected(&self) -> Result<()> {
        let dist = self.distances_from(0);
        if dist.iter().any(Option::is_none) {
            return Err(Error::Topology("topology is not connected".into()));
        }
        Ok(())
    }

    fn check_embedding(&self) -> Result<()> {
        let mut incidences = vec![0usize; self.edges.len()];
        for (fi, face) in self.faces.iter().enumerate() {
            if face.is_empty() {
                return Err(Error::Embedding(format!("face {fi} is empty")));
            }
            for &e in face {
                if e >= self.edges.len() {
                    return Err(Error::Embedding(format!("face {fi} refers to missing edge {e}")));
                }
                incidences[e] += 1;
            }
            if !self.is_closed_walk(face) {
                return Err(Error::Embedding(format!("face {fi} is not a closed walk")));
            }
        }
        if let Some(e) = incidences.iter().position(|&c| c != 2) {
            return Err(Error::Embedding(format!(
                "edge {e} has {} face incidences, expected 2",
                incidences[e]
            )));
        }
        let euler = self.n as i64 - self.edges.len() as i64 + self.faces.len() as i64;
        if euler != 2 {
            return Err(Error::Embedding(format!(
                "Euler characteristic is {euler}, expected 2 (graph is not planar or faces are missing)"
            )));
        }
        Ok(())
    }

    fn is_closed_walk(&self, face: &[usize]) -> bool {
        let (a, b) = self.edges[face[0]];
        [a, b].iter().any(|&start| {
            let mut cur = if start == a { b } else { a };
            for &e in &face[1..] {
                let (u, v) = self.edges[e];
                if u == cur {
                    cur = v;
                } else if v == cur {
                    cur = u;
                } else {
                    return false;
                }
            }
            cur == start
        })
    }

    pub fn num_vertices(&self) -> usize {
        self.n
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge(&self, e: usize) -> (usize, usize) {
        self.edges[e]
    }

    pub fn faces(&self) -> &[Vec<usize>] {
        &self.faces
    }

    /// ZZ strength of edge `e` in rad/s.
    pub fn lambda(&self, e: usize) -> f64 {
        self.lambda[e]
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambda
    }

    /// Returns a copy with new per-edge strengths (rad/s).
    pub fn with_lambdas(&self, lambda: Vec<f64>) -> Result<Self> {
        TopologyGraph::new(self.n, self.edges.clone(), self.faces.clone(), lambda)
    }

    pub fn edge_between(&self, u: usize, v: usize) -> Option<usize> {
        self.edge_lookup.get(&(u.min(v), u.max(v))).copied()
    }

    /// Neighbours of `v` with the connecting edge index, sorted by neighbour id.
    pub fn neighbors(&self, v: usize) -> &[(usize, usize)] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    pub fn max_degree(&self) -> usize {
        (0..self.n).map(|v| self.degree(v)).max().unwrap_or(0)
    }

    /// Breadth-first hop distances from `src`.
    pub fn distances_from(&self, src: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.n];
        let mut queue = VecDeque::new();
        dist[src] = Some(0);
        queue.push_back(src);
        while let Some(v) = queue.pop_front() {
            let d = dist[v].unwrap();
            for &(w, _) in &self.adjacency[v] {
                if dist[w].is_none() {
                    dist[w] = Some(d + 1);
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    /// All-pairs hop distances. The graph is connected, so every entry is finite.
    pub fn all_pairs_distances(&self) -> Vec<Vec<usize>> {
        (0..self.n)
            .map(|s| self.distances_from(s).into_iter().map(|d| d.unwrap_or(usize::MAX)).collect())
            .collect()
    }

    /// Loads a topology from its JSON file representation.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let file: TopologyFile = serde_json::from_str(&text)?;
        file.into_topology()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let text = serde_json::to_string_pretty(&TopologyFile::from_topology(self))?;
        std::fs::write(path, text + "\n")?;
        Ok(())
    }
}

/// Strengths as written in topology files: a scalar applied to every edge, or
/// a map keyed `"u-v"` with an optional `"default"` entry.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LambdaHz {
    Uniform(f64),
    PerEdge(BTreeMap<String, f64>),
}

/// On-disk topology format.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TopologyFile {
    pub vertices: usize,
    pub edges: Vec<[usize; 2]>,
    pub faces: Vec<Vec<usize>>,
    pub lambda_hz: LambdaHz,
}

impl TopologyFile {
    pub fn into_topology(self) -> Result<TopologyGraph> {
        let edges: Vec<(usize, usize)> = self.edges.iter().map(|e| (e[0], e[1])).collect();
        let lambda_hz: Vec<f64> = match &self.lambda_hz {
            LambdaHz::Uniform(l) => vec![*l; edges.len()],
            LambdaHz::PerEdge(map) => {
                let default = map.get("default").copied();
                edges
                    .iter()
                    .map(|&(u, v)| {
                        let (a, b) = (u.min(v), u.max(v));
                        map.get(&format!("{a}-{b}"))
                            .or_else(|| map.get(&format!("{b}-{a}")))
                            .copied()
                            .or(default)
                            .ok_or_else(|| Error::Topology(format!("no strength for edge {a}-{b}")))
                    })
                    .collect::<Result<_>>()?
            }
        };
        let lambda = lambda_hz.iter().map(|l| l * 2.0 * PI).collect();
        TopologyGraph::new(self.vertices, edges, self.faces, lambda)
    }

    pub fn from_topology(g: &TopologyGraph) -> Self {
        let hz: Vec<f64> = g.lambda.iter().map(|l| l / (2.0 * PI)).collect();
        let lambda_hz = if hz.windows(2).all(|w| w[0] == w[1]) && !hz.is_empty() {
            LambdaHz::Uniform(hz[0])
        } else {
            LambdaHz::PerEdge(
                g.edges
                    .iter()
                    .zip(&hz)
                    .map(|(&(u, v), &l)| (format!("{u}-{v}"), l))
                    .collect(),
            )
        };
        TopologyFile {
            vertices: g.n,
            edges: g.edges.iter().map(|&(u, v)| [u, v]).collect(),
            faces: g.faces.clone(),
            lambda_hz,
        }
    }
}

/// Rectangular grid with row-major vertex ids. Faces are the unit squares plus
/// the outer face.
pub fn grid_topology(rows: usize, cols: usize, lambda_hz: f64) -> Result<TopologyGraph> {
    let n = rows
        .checked_mul(cols)
        .filter(|&n| n <= MAX_GENERATED_VERTICES)
        .ok_or_else(|| Error::Topology(format!("grid {rows}x{cols} is too large")))?;
    if rows == 0 || cols == 0 || n < 2 {
        return Err(Error::Topology(format!("grid {rows}x{cols} needs at least 2 vertices")));
    }
    let id = |r: usize, c: usize| r * cols + c;
    let mut edges = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            if c + 1 < cols {
                edges.push((id(r, c), id(r, c + 1)));
            }
            if r + 1 < rows {
                edges.push((id(r, c), id(r + 1, c)));
            }
        }
    }
    edges.sort_unstable();
    let lookup: HashMap<(usize, usize), usize> =
        edges.iter().enumerate().map(|(i, &e)| (e, i)).collect();
    let e = |a: usize, b: usize| lookup[&(a.min(b), a.max(b))];

    let mut faces = Vec::new();
    for r in 0..rows.saturating_sub(1) {
        for c in 0..cols.saturating_sub(1) {
            let (v00, v01, v11, v10) = (id(r, c), id(r, c + 1), id(r + 1, c + 1), id(r + 1, c));
            faces.push(vec![e(v00, v01), e(v01, v11), e(v11, v10), e(v10, v00)]);
        }
    }
    let outer = if rows == 1 || cols == 1 {
        let path: Vec<usize> = (0..n - 1).map(|i| e(i, i + 1)).collect();
        out_and_back(&path)
    } else {
        let mut walk = Vec::new();
        let mut ring = Vec::new();
        ring.extend((0..cols).map(|c| id(0, c)));
        ring.extend((1..rows).map(|r| id(r, cols - 1)));
        ring.extend((0..cols - 1).rev().map(|c| id(rows - 1, c)));
        ring.extend((1..rows - 1).rev().map(|r| id(r, 0)));
        for i in 0..ring.len() {
            walk.push(e(ring[i], ring[(i + 1) % ring.len()]));
        }
        walk
    };
    faces.push(outer);
    let lambda = vec![lambda_hz * 2.0 * PI; edges.len()];
    TopologyGraph::new(n, edges, faces, lambda)
}

fn out_and_back(path: &[usize]) -> Vec<usize> {
    path.iter().chain(path.iter().rev()).copied().collect()
}

/// Linear chain `0-1-...-(n-1)`.
pub fn line_topology(n: usize, lambda_hz: f64) -> Result<TopologyGraph> {
    grid_topology(1, n, lambda_hz)
}

/// Five-qubit T-shaped device (couplings 0-1, 1-2, 1-3, 3-4).
pub fn vigo_topology(lambda_hz: f64) -> Result<TopologyGraph> {
    let edges = vec![(0, 1), (1, 2), (1, 3), (3, 4)];
    // Euler tour of the tree: every edge bounds the outer face twice.
    let outer = vec![0, 1, 1, 2, 3, 3, 2, 0];
    TopologyGraph::new(5, edges, vec![outer], vec![lambda_hz * 2.0 * PI; 4])
}

/// Boustrophedon ordering of a grid's vertices. Consecutive entries are
/// always coupled, so a linear-nearest-neighbour circuit can be laid onto the
/// grid without routing.
pub fn snake_layout(rows: usize, cols: usize) -> Vec<usize> {
    let mut order = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        if r % 2 == 0 {
            order.extend((0..cols).map(|c| r * cols + c));
        } else {
            order.extend((0..cols).rev().map(|c| r * cols + c));
        }
    }
    order
}

/// Planar dual. Dual vertex `f` is face `f` of the primal; dual edge `i`
/// corresponds to primal edge `i`. Bridges become self-loops.
#[derive(Debug, Clone)]
pub struct DualGraph {
    num_faces: usize,
    edges: Vec<(usize, usize)>,
    adjacency: Vec<Vec<(usize, usize)>>,
}

impl DualGraph {
    pub fn num_vertices(&self) -> usize {
        self.num_faces
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Endpoints `(f, g)` with `f <= g`.
    pub fn edge(&self, e: usize) -> (usize, usize) {
        self.edges[e]
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn is_self_loop(&self, e: usize) -> bool {
        let (a, b) = self.edges[e];
        a == b
    }

    /// Primal edge of dual edge `e` (the identity map on indices).
    pub fn primal_edge(&self, e: usize) -> usize {
        e
    }

    /// Dual edge of primal edge `e` (the identity map on indices).
    pub fn dual_edge(&self, e: usize) -> usize {
        e
    }

    /// Incident `(other endpoint, edge)` pairs sorted by endpoint then edge;
    /// self-loops are listed once.
    pub fn incident(&self, v: usize) -> &[(usize, usize)] {
        &self.adjacency[v]
    }

    /// Degree with self-loops counted twice.
    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v]
            .iter()
            .map(|&(w, _)| if w == v { 2 } else { 1 })
            .sum()
    }

    /// Odd-degree vertices, ignoring the dual edges flagged in `removed`.
    pub fn odd_vertices(&self, removed: &[bool]) -> Vec<usize> {
        let mut parity = vec![false; self.num_faces];
        for (e, &(a, b)) in self.edges.iter().enumerate() {
            if removed.get(e).copied().unwrap_or(false) || a == b {
                continue;
            }
            parity[a] ^= true;
            parity[b] ^= true;
        }
        (0..self.num_faces).filter(|&v| parity[v]).collect()
    }
}

pub fn dual_graph(g: &TopologyGraph) -> Result<DualGraph> {
    let mut owners: Vec<Vec<usize>> = vec![Vec::new(); g.num_edges()];
    for (f, face) in g.faces().iter().enumerate() {
        for &e in face {
            owners.get_mut(e)
                .ok_or_else(|| Error::Embedding(format!("face {f} refers to missing edge {e}")))?
                .push(f);
        }
    }
    let mut edges = Vec::with_capacity(owners.len());
    let mut adjacency = vec![Vec::new(); g.faces().len()];
    for (e, own) in owners.iter().enumerate() {
        if own.len() != 2 {
            return Err(Error::Embedding(format!(
                "edge {e} has {} face incidences, expected 2",
                own.len()
            )));
        }
        let (a, b) = (own[0].min(own[1]), own[0].max(own[1]));
        edges.push((a, b));
        adjacency[a].push((b, e));
        if a != b {
            adjacency[b].push((a, e));
        }
    }
    for adj in &mut adjacency {
        adj.sort_unstable();
    }
    Ok(DualGraph { num_faces: g.faces().len(), edges, adjacency })
}

/// Partition of the qubits into `S` (pulsed) and `T` (idle).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Cut {
    in_s: Vec<bool>,
}

impl Cut {
    pub fn from_sides(in_s: Vec<bool>) -> Self {
        Cut { in_s }
    }

    /// Cut of an `n`-vertex graph with the given `S` side.
    pub fn from_partition_s(n: usize, s: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut in_s = vec![false; n];
        for v in s {
            *in_s
                .get_mut(v)
                .ok_or_else(|| Error::InvalidCut(format!("vertex {v} is not in the topology")))? = true;
        }
        Ok(Cut { in_s })
    }

    pub fn num_vertices(&self) -> usize {
        self.in_s.len()
    }

    pub fn in_s(&self, v: usize) -> bool {
        self.in_s[v]
    }

    pub fn sides(&self) -> &[bool] {
        &self.in_s
    }

    pub fn partition_s(&self) -> Vec<usize> {
        (0..self.in_s.len()).filter(|&v| self.in_s[v]).collect()
    }

    pub fn partition_t(&self) -> Vec<usize> {
        (0..self.in_s.len()).filter(|&v| !self.in_s[v]).collect()
    }

    /// The same cut with `S` and `T` exchanged.
    pub fn flipped(&self) -> Cut {
        Cut { in_s: self.in_s.iter().map(|&b| !b).collect() }
    }

    /// True when every vertex of `q` lies on one side.
    pub fn keeps_together(&self, q: &[usize]) -> bool {
        q.windows(2).all(|w| self.in_s[w[0]] == self.in_s[w[1]])
    }
}

/// Dual edge ids forming an odd-vertex pairing. May repeat ids; only parity
/// of multiplicity matters.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct OddVertexPairing {
    pub dual_edges: Vec<usize>,
}

impl OddVertexPairing {
    pub fn new(mut dual_edges: Vec<usize>) -> Self {
        dual_edges.sort_unstable();
        OddVertexPairing { dual_edges }
    }
}

/// Edges whose endpoints lie on the same side of the cut.
pub fn remaining_set(g: &TopologyGraph, c: &Cut) -> Result<Vec<usize>> {
    if c.num_vertices() != g.num_vertices() {
        return Err(Error::InvalidCut(format!(
            "cut covers {} vertices, topology has {}",
            c.num_vertices(),
            g.num_vertices()
        )));
    }
    Ok(remaining_edges(g, c.sides()))
}

pub(crate) fn remaining_edges(g: &TopologyGraph, in_s: &[bool]) -> Vec<usize> {
    g.edges()
        .iter()
        .enumerate()
        .filter(|(_, &(u, v))| in_s[u] == in_s[v])
        .map(|(i, _)| i)
        .collect()
}

/// True iff contracting `s` in `d` leaves every vertex with even degree.
///
/// Contraction merges each connected component of `(V*, s)` into one vertex
/// whose degree parity is the number of odd-degree vertices it absorbed, so
/// the test reduces to every such component holding an even number of them.
pub fn is_odd_vertex_pairing(d: &DualGraph, s: &[usize]) -> bool {
    let n = d.num_vertices();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for &e in s {
        if e >= d.num_edges() {
            return false;
        }
        let (a, b) = d.edge(e);
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra] = rb;
        }
    }
    let mut odd_count = vec![0usize; n];
    for v in d.odd_vertices(&[]) {
        let r = find(&mut parent, v);
        odd_count[r] += 1;
    }
    odd_count.iter().all(|c| c % 2 == 0)
}

/// Removes the primal edges of `p` and 2-colours what is left. Vertices are
/// visited in id order and each component's lowest vertex goes to `S`.
pub fn cut_from_pairing(g: &TopologyGraph, p: &OddVertexPairing) -> Result<Cut> {
    let mut removed = vec![false; g.num_edges()];
    for &e in &p.dual_edges {
        *removed
            .get_mut(e)
            .ok_or_else(|| Error::Topology(format!("pairing refers to missing dual edge {e}")))? = true;
    }
    two_color_without(g, &removed).map(Cut::from_sides).ok_or(Error::NotBipartite)
}

/// 2-colouring of `g` minus the flagged edges, or `None` if an odd cycle remains.
pub(crate) fn two_color_without(g: &TopologyGraph, removed: &[bool]) -> Option<Vec<bool>> {
    let n = g.num_vertices();
    let mut color: Vec<Option<bool>> = vec![None; n];
    let mut queue = VecDeque::new();
    for root in 0..n {
        if color[root].is_some() {
            continue;
        }
        color[root] = Some(true);
        queue.push_back(root);
        while let Some(v) = queue.pop_front() {
            let cv = color[v].unwrap();
            for &(w, e) in g.neighbors(v) {
                if removed[e] {
                    continue;
                }
                match color[w] {
                    None => {
                        color[w] = Some(!cv);
                        queue.push_back(w);
                    }
                    Some(cw) if cw == cv => return None,
                    Some(_) => {}
                }
            }
        }
    }
    Some(color.into_iter().map(Option::unwrap).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_counts() {
        let g = grid_topology(1, 2, 200e3).unwrap();
        assert_eq!((g.num_vertices(), g.num_edges(), g.faces().len()), (2, 1, 1));
        let g = grid_topology(3, 4, 200e3).unwrap();
        assert_eq!((g.num_vertices(), g.num_edges(), g.faces().len()), (12, 17, 7));
        let g = grid_topology(2, 2, 200e3).unwrap();
        assert_eq!((g.num_vertices(), g.num_edges(), g.faces().len()), (4, 4, 2));
        assert!((g.lambda(0) - 2.0 * PI * 200e3).abs() < 1e-6);
    }

    #[test]
    fn grid_rejects_bad_dimensions() {
        assert!(grid_topology(1, 1, 0.0).is_err());
        assert!(grid_topology(0, 4, 0.0).is_err());
        assert!(grid_topology(usize::MAX, 3, 0.0).is_err());
    }

    #[test]
    fn embedding_errors_are_reported() {
        // Square with the outer face missing one incidence.
        let edges = vec![(0, 1), (1, 2), (2, 3), (0, 3)];
        let bad = TopologyGraph::new(4, edges.clone(), vec![vec![0, 1, 2, 3], vec![0, 1, 2]], vec![0.0; 4]);
        assert!(matches!(bad, Err(Error::Embedding(_))));
        // K4 drawn with only two faces fails the Euler check.
        let k4 = vec![(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
        let r = TopologyGraph::new(4, k4, vec![vec![0, 3, 1, 2, 5, 4], vec![0, 3, 1, 2, 5, 4]], vec![0.0; 6]);
        assert!(r.is_err());
        let disconnected = TopologyGraph::new(3, vec![(0, 1)], vec![vec![0, 0]], vec![0.0]);
        assert!(disconnected.is_err());
    }

    #[test]
    fn dual_of_square_and_path() {
        let g = grid_topology(2, 2, 0.0).unwrap();
        let d = dual_graph(&g).unwrap();
        assert_eq!(d.num_vertices(), 2);
        assert!(d.edges().iter().all(|&(a, b)| (a, b) == (0, 1)));
        assert_eq!(d.num_edges(), 4);

        let p = grid_topology(1, 2, 0.0).unwrap();
        let d = dual_graph(&p).unwrap();
        assert_eq!(d.num_vertices(), 1);
        assert!(d.is_self_loop(0));
        assert_eq!(d.degree(0), 2);
    }

    #[test]
    fn dual_degree_matches_face_length() {
        for (r, c) in [(2, 3), (3, 3), (3, 5)] {
            let g = grid_topology(r, c, 0.0).unwrap();
            let d = dual_graph(&g).unwrap();
            for (f, face) in g.faces().iter().enumerate() {
                assert_eq!(d.degree(f), face.len());
            }
        }
        let v = vigo_topology(0.0).unwrap();
        let d = dual_graph(&v).unwrap();
        assert_eq!(d.degree(0), 8);
    }

    #[test]
    fn remaining_set_basics() {
        let g = grid_topology(3, 3, 0.0).unwrap();
        let all = Cut::from_partition_s(9, 0..9).unwrap();
        assert_eq!(remaining_set(&g, &all).unwrap().len(), g.num_edges());
        let checker = Cut::from_partition_s(9, [0, 2, 4, 6, 8]).unwrap();
        assert!(remaining_set(&g, &checker).unwrap().is_empty());
        assert!(Cut::from_partition_s(9, [9]).is_err());
        let short = Cut::from_partition_s(4, [0]).unwrap();
        assert!(remaining_set(&g, &short).is_err());
    }

    #[test]
    fn all_dual_edges_pair_trivially() {
        let g = grid_topology(3, 3, 0.0).unwrap();
        let p = OddVertexPairing::new((0..g.num_edges()).collect());
        let cut = cut_from_pairing(&g, &p).unwrap();
        assert_eq!(cut.num_vertices(), 9);
    }

    #[test]
    fn vigo_is_a_valid_tree_embedding() {
        let g = vigo_topology(200e3).unwrap();
        assert_eq!(g.max_degree(), 3);
        assert!(dual_graph(&g).unwrap().odd_vertices(&[]).is_empty());
    }

    #[test]
    fn snake_layout_is_a_path() {
        let g = grid_topology(3, 4, 0.0).unwrap();
        let order = snake_layout(3, 4);
        assert_eq!(order.len(), 12);
        for w in order.windows(2) {
            assert!(g.edge_between(w[0], w[1]).is_some());
        }
    }

    #[test]
    fn file_round_trip() {
        let g = grid_topology(2, 3, 150e3).unwrap();
        let file = TopologyFile::from_topology(&g);
        let json = serde_json::to_string(&file).unwrap();
        let back: TopologyFile = serde_json::from_str(&json).unwrap();
        let h = back.into_topology().unwrap();
        assert_eq!(h.edges(), g.edges());
        for e in 0..g.num_edges() {
            assert!((h.lambda(e) - g.lambda(e)).abs() < 1e-6);
        }
        let per_edge = r#"{"vertices":2,"edges":[[0,1]],"faces":[[0,0]],"lambda_hz":{"0-1":100000.0}}"#;
        let t: TopologyFile = serde_json::from_str(per_edge).unwrap();
        let t = t.into_topology().unwrap();
        assert!((t.lambda(0) - 2.0 * PI * 1e5).abs() < 1e-6);
        let missing = r#"{"vertices":2,"edges":[[0,1]],"faces":[[0,0]],"lambda_hz":{}}"#;
        let t: TopologyFile = serde_json::from_str(missing).unwrap();
        assert!(t.into_topology().is_err());
    }
}
