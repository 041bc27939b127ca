//! Unit-weight shortest paths on the dual multigraph.
//!
//! Paths are sequences of edge ids so that parallel dual edges give distinct
//! paths. Self-loops never appear in a path. Edges can be masked out, which is
//! how the constrained suppression search hides the dual of the gate edges.

use std::collections::{BTreeSet, VecDeque};

use crate::topology::DualGraph;

/// A simple path between two dual vertices.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct DualPath {
    pub edges: Vec<usize>,
    pub vertices: Vec<usize>,
}

impl DualPath {
    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }
}

/// Hop distances from `src`, ignoring masked edges and self-loops.
pub fn bfs_distances(d: &DualGraph, masked: &[bool], src: usize) -> Vec<Option<usize>> {
    let mut dist = vec![None; d.num_vertices()];
    let mut queue = VecDeque::new();
    dist[src] = Some(0);
    queue.push_back(src);
    while let Some(v) = queue.pop_front() {
        let dv = dist[v].unwrap();
        for &(w, e) in d.incident(v) {
            if w == v || masked[e] || dist[w].is_some() {
                continue;
            }
            dist[w] = Some(dv + 1);
            queue.push_back(w);
        }
    }
    dist
}

/// One shortest path avoiding the masked edges and banned vertices. Among
/// equal lengths the path found first by a BFS over sorted incidence lists
/// is returned.
fn shortest_path(
    d: &DualGraph,
    masked: &[bool],
    banned_vertices: &[bool],
    src: usize,
    dst: usize,
) -> Option<DualPath> {
    if banned_vertices[src] || banned_vertices[dst] {
        return None;
    }
    let n = d.num_vertices();
    let mut parent: Vec<Option<(usize, usize)>> = vec![None; n];
    let mut seen = vec![false; n];
    let mut queue = VecDeque::new();
    seen[src] = true;
    queue.push_back(src);
    while let Some(v) = queue.pop_front() {
        if v == dst {
            break;
        }
        for &(w, e) in d.incident(v) {
            if w == v || masked[e] || seen[w] || banned_vertices[w] {
                continue;
            }
            seen[w] = true;
            parent[w] = Some((v, e));
            queue.push_back(w);
        }
    }
    if !seen[dst] {
        return None;
    }
    let mut edges = Vec::new();
    let mut vertices = vec![dst];
    let mut cur = dst;
    while let Some((p, e)) = parent[cur] {
        edges.push(e);
        vertices.push(p);
        cur = p;
    }
    edges.reverse();
    vertices.reverse();
    Some(DualPath { edges, vertices })
}

/// Up to `k` shortest simple paths from `src` to `dst` (Yen's algorithm),
/// ordered by length and then by edge sequence.
pub fn k_shortest_paths(
    d: &DualGraph,
    masked: &[bool],
    src: usize,
    dst: usize,
    k: usize,
) -> Vec<DualPath> {
    let n = d.num_vertices();
    let mut accepted: Vec<DualPath> = Vec::new();
    if k == 0 {
        return accepted;
    }
    match shortest_path(d, masked, &vec![false; n], src, dst) {
        Some(p) => accepted.push(p),
        None => return accepted,
    }
    let mut pool: BTreeSet<(usize, Vec<usize>, Vec<usize>)> = BTreeSet::new();
    while accepted.len() < k {
        let prev = accepted.last().unwrap().clone();
        for i in 0..prev.edges.len() {
            let spur = prev.vertices[i];
            let root_edges = &prev.edges[..i];
            let mut edge_mask = masked.to_vec();
            for p in &accepted {
                if p.edges.len() > i && p.edges[..i] == *root_edges {
                    edge_mask[p.edges[i]] = true;
                }
            }
            let mut banned = vec![false; n];
            for &v in &prev.vertices[..i] {
                banned[v] = true;
            }
            if let Some(spur_path) = shortest_path(d, &edge_mask, &banned, spur, dst) {
                let mut edges = root_edges.to_vec();
                edges.extend(&spur_path.edges);
                let mut vertices = prev.vertices[..i].to_vec();
                vertices.extend(&spur_path.vertices);
                if !accepted.iter().any(|p| p.edges == edges) {
                    pool.insert((edges.len(), edges, vertices));
                }
            }
        }
        match pool.pop_first() {
            Some((_, edges, vertices)) => accepted.push(DualPath { edges, vertices }),
            None => break,
        }
    }
    accepted
}
