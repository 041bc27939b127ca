//! Choosing which qubits to pulse so that the remaining ZZ couplings are few
//! and split into small regions.
//!
//! A cut `(S, T)` leaves the couplings inside `S` and inside `T` active. Its
//! cost is `α·N_Q + N_C`, where `N_C` counts active couplings and `N_Q` is the
//! size of the largest connected region they form. [`alpha_optimal`] searches
//! cuts through odd-vertex pairings of the dual graph: odd faces are matched
//! by exact maximum-weight matching, each matched pair is joined by one of its
//! `k` shortest dual paths, and the paths are relaxed greedily one pair at a
//! time. Gate qubits `q` are forced onto one side by removing their internal
//! couplings from the dual before the search and adding them back before the
//! cut is induced.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matching::max_weight_perfect_matchings;
use crate::paths::{bfs_distances, k_shortest_paths, DualPath};
use crate::topology::{dual_graph, remaining_edges, Cut, OddVertexPairing, TopologyGraph};

/// Largest vertex count accepted by [`brute_force_optimal`].
pub const BRUTE_FORCE_LIMIT: usize = 20;

/// Tied maximum-weight matchings explored by [`alpha_optimal`].
pub const MAX_TIED_MATCHINGS: usize = 8;

/// How a returned cut was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CutOrigin {
    /// Induced from a pairing that passed the check.
    Pairing,
    /// A pairing's cut that failed the check, repaired by moving gate qubits.
    Repaired,
    /// No candidate could be made feasible; every qubit is pulsed.
    Fallback,
    /// Exhaustive enumeration.
    Exhaustive,
}

/// Counters describing one run of the path-relaxing search.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchStats {
    pub odd_vertices: usize,
    pub iterations: usize,
    pub candidates: usize,
    pub passed_check: usize,
    pub failed_check: usize,
}

#[derive(Debug, Clone)]
pub struct SuppressionResult {
    pub cut: Cut,
    pub n_q: usize,
    pub n_c: usize,
    pub objective: f64,
    /// Dual edges of the remaining-set; an odd-vertex pairing by duality.
    pub pairing: OddVertexPairing,
    pub origin: CutOrigin,
    pub stats: SearchStats,
    /// Objective of the best cut known after each relaxing iteration.
    pub trace: Vec<f64>,
}

impl SuppressionResult {
    fn from_cut(g: &TopologyGraph, cut: Cut, alpha: f64, origin: CutOrigin) -> Self {
        let (n_q, n_c) = metrics(g, &cut);
        let pairing = OddVertexPairing::new(remaining_edges(g, cut.sides()));
        SuppressionResult {
            cut,
            n_q,
            n_c,
            objective: objective(alpha, n_q, n_c),
            pairing,
            origin,
            stats: SearchStats::default(),
            trace: Vec::new(),
        }
    }
}

pub fn objective(alpha: f64, n_q: usize, n_c: usize) -> f64 {
    alpha * n_q as f64 + n_c as f64
}

/// `(N_Q, N_C)` of a cut: largest region size and number of active couplings.
pub fn metrics(g: &TopologyGraph, c: &Cut) -> (usize, usize) {
    side_metrics(g, c.sides())
}

fn side_metrics(g: &TopologyGraph, in_s: &[bool]) -> (usize, usize) {
    let n = g.num_vertices();
    let mut parent: Vec<usize> = (0..n).collect();
    let mut size = vec![1usize; n];
    let mut n_c = 0;
    let mut n_q = 1;
    for &(u, v) in g.edges() {
        if in_s[u] != in_s[v] {
            continue;
        }
        n_c += 1;
        let (ru, rv) = (find(&mut parent, u), find(&mut parent, v));
        if ru != rv {
            let (big, small) = if size[ru] >= size[rv] { (ru, rv) } else { (rv, ru) };
            parent[small] = big;
            size[big] += size[small];
            n_q = n_q.max(size[big]);
        }
    }
    (n_q, n_c)
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

fn validate_inputs(g: &TopologyGraph, q: &[usize], alpha: f64) -> Result<Vec<usize>> {
    if !alpha.is_finite() || alpha < 0.0 {
        return Err(Error::Suppression(format!("alpha must be finite and non-negative, got {alpha}")));
    }
    let mut q = q.to_vec();
    q.sort_unstable();
    q.dedup();
    if let Some(&v) = q.iter().find(|&&v| v >= g.num_vertices()) {
        return Err(Error::Suppression(format!("qubit {v} is not in the topology")));
    }
    Ok(q)
}

/// Exact optimum by enumerating every cut with `q` inside `S`. With `q` empty,
/// vertex 0 is fixed in `S` since a cut and its flip cost the same.
pub fn brute_force_optimal(g: &TopologyGraph, q: &[usize], alpha: f64) -> Result<SuppressionResult> {
    let n = g.num_vertices();
    if n > BRUTE_FORCE_LIMIT {
        return Err(Error::TooLarge(n));
    }
    let q = validate_inputs(g, q, alpha)?;
    let fixed: u32 = if q.is_empty() { 1 } else { q.iter().fold(0, |m, &v| m | (1 << v)) };
    let mut in_s = vec![false; n];
    let mut best: Option<(f64, u32)> = None;
    for mask in 0u32..(1u32 << n) {
        if mask & fixed != fixed {
            continue;
        }
        for (v, s) in in_s.iter_mut().enumerate() {
            *s = mask & (1 << v) != 0;
        }
        let (n_q, n_c) = side_metrics(g, &in_s);
        let obj = objective(alpha, n_q, n_c);
        if best.is_none_or(|(b, _)| obj < b - 1e-12) {
            best = Some((obj, mask));
        }
    }
    let (_, mask) = best.expect("at least one cut satisfies the constraint");
    let sides = (0..n).map(|v| mask & (1 << v) != 0).collect();
    Ok(SuppressionResult::from_cut(g, Cut::from_sides(sides), alpha, CutOrigin::Exhaustive))
}

struct Candidate {
    sides: Vec<bool>,
    objective: f64,
    passed: bool,
}

struct Search<'a> {
    g: &'a TopologyGraph,
    q: &'a [usize],
    alpha: f64,
    gate_edges: Vec<usize>,
    paths: Vec<Vec<DualPath>>,
    dist: Vec<Vec<usize>>,
}

impl Search<'_> {
    /// XOR of the chosen paths plus the gate edges, then a 2-colouring of the
    /// topology with those edges removed. Every component containing gate
    /// qubits is oriented so they land in `S`; the check fails if a component
    /// colours two gate qubits differently.
    fn induce(&self, choice: &[usize]) -> Candidate {
        let g = self.g;
        let mut removed = vec![false; g.num_edges()];
        for (pair, &i) in choice.iter().enumerate() {
            for &e in &self.paths[pair][i].edges {
                removed[e] ^= true;
            }
        }
        for &e in &self.gate_edges {
            removed[e] = true;
        }
        let (color, comp) = color_components(g, &removed)
            .expect("a valid pairing always leaves a bipartite graph");
        let mut orient: Vec<Option<bool>> = vec![None; g.num_vertices()];
        let mut passed = true;
        for &v in self.q {
            match orient[comp[v]] {
                None => orient[comp[v]] = Some(color[v]),
                Some(c) if c != color[v] => passed = false,
                Some(_) => {}
            }
        }
        let mut sides: Vec<bool> = (0..g.num_vertices())
            .map(|v| match orient[comp[v]] {
                Some(c) => color[v] == c,
                None => color[v],
            })
            .collect();
        if !passed {
            sides = self.repair(&sides);
        }
        let (n_q, n_c) = side_metrics(g, &sides);
        Candidate { sides, objective: objective(self.alpha, n_q, n_c), passed }
    }

    /// Greedy path relaxing from the shortest paths of every matched pair.
    fn relax(&self, stats: &mut SearchStats, best: &mut Option<(Candidate, CutOrigin)>, trace: &mut Vec<f64>) {
        let mut consider = |cand: Candidate| {
            stats.candidates += 1;
            if cand.passed {
                stats.passed_check += 1;
            } else {
                stats.failed_check += 1;
            }
            let (objective, passed) = (cand.objective, cand.passed);
            if best.as_ref().is_none_or(|(b, _)| objective < b.objective - 1e-12) {
                let origin = if passed { CutOrigin::Pairing } else { CutOrigin::Repaired };
                *best = Some((cand, origin));
            }
            (objective, passed, best.as_ref().unwrap().0.objective)
        };

        let mut choice = vec![0usize; self.paths.len()];
        let (mut current, _, kept) = consider(self.induce(&choice));
        trace.push(kept);
        loop {
            let mut winner: Option<(f64, usize)> = None;
            let mut kept = f64::INFINITY;
            for pair in 0..self.paths.len() {
                if choice[pair] + 1 >= self.paths[pair].len() {
                    continue;
                }
                let mut next = choice.clone();
                next[pair] += 1;
                let (obj, passed, k) = consider(self.induce(&next));
                kept = k;
                if passed && winner.is_none_or(|(w, _)| obj < w - 1e-12) {
                    winner = Some((obj, pair));
                }
            }
            stats.iterations += 1;
            if kept.is_finite() {
                trace.push(kept);
            }
            let Some((obj, pair)) = winner else { break };
            choice[pair] += 1;
            if (obj - current).abs() < 1e-12 {
                break;
            }
            current = obj;
        }
    }

    /// Makes a failing cut feasible by moving a vertex set `W` across the cut,
    /// which toggles the couplings on the boundary of `W`. With `X` one group
    /// of gate qubits and `Y` the rest, the sets tried are `X` alone and the
    /// vertices strictly or weakly closer to `X` than to `Y`, and the source
    /// sides of minimum `X`-`Y` edge cuts (counting either every coupling or
    /// only couplings that would become active). Both choices of
    /// `X` are tried and the cheapest feasible cut wins.
    fn repair(&self, sides: &[bool]) -> Vec<bool> {
        let (in_s, in_t): (Vec<usize>, Vec<usize>) = self.q.iter().partition(|&&v| sides[v]);
        let mut best: Option<(f64, Vec<bool>)> = None;
        for (x, y) in [(&in_t, &in_s), (&in_s, &in_t)] {
            let dx = self.nearest(x);
            let dy = self.nearest(y);
            let fresh: Vec<u32> = self.g.edges().iter().map(|&(u, v)| u32::from(sides[u] != sides[v])).collect();
            let regions = [
                x.to_vec(),
                (0..sides.len()).filter(|&v| dx[v] < dy[v]).collect::<Vec<_>>(),
                (0..sides.len()).filter(|&v| dx[v] <= dy[v] && dy[v] > 0).collect::<Vec<_>>(),
                min_cut_source_side(self.g, x, y, &fresh),
                min_cut_source_side(self.g, x, y, &vec![1; self.g.num_edges()]),
            ];
            for w in regions {
                let mut moved = sides.to_vec();
                for &v in &w {
                    moved[v] = !moved[v];
                }
                if !self.q.iter().all(|&v| moved[v] == moved[self.q[0]]) {
                    continue;
                }
                if !moved[self.q[0]] {
                    moved.iter_mut().for_each(|s| *s = !*s);
                }
                let (n_q, n_c) = side_metrics(self.g, &moved);
                let obj = objective(self.alpha, n_q, n_c);
                if best.as_ref().is_none_or(|(b, _)| obj < b - 1e-12) {
                    best = Some((obj, moved));
                }
            }
        }
        let mut sides = best.expect("moving one gate group always reunites the gate qubits").1;
        self.polish(&mut sides);
        sides
    }

    /// Single-vertex moves that lower the objective, applied until none is
    /// left. Gate qubits stay in `S`.
    fn polish(&self, sides: &mut [bool]) {
        let (n_q, n_c) = side_metrics(self.g, sides);
        let mut current = objective(self.alpha, n_q, n_c);
        let mut improved = true;
        while improved {
            improved = false;
            for v in 0..sides.len() {
                if self.q.binary_search(&v).is_ok() {
                    continue;
                }
                sides[v] = !sides[v];
                let (n_q, n_c) = side_metrics(self.g, sides);
                let obj = objective(self.alpha, n_q, n_c);
                if obj < current - 1e-12 {
                    current = obj;
                    improved = true;
                } else {
                    sides[v] = !sides[v];
                }
            }
        }
    }

    /// Hop distance from every vertex to the nearest vertex of `set`.
    fn nearest(&self, set: &[usize]) -> Vec<usize> {
        (0..self.g.num_vertices())
            .map(|v| set.iter().map(|&u| self.dist[u][v]).min().unwrap_or(usize::MAX))
            .collect()
    }
}

/// Source side of a minimum edge cut separating `sources` from `sinks`
/// (Edmonds-Karp on unit-scale integer capacities).
fn min_cut_source_side(g: &TopologyGraph, sources: &[usize], sinks: &[usize], cap: &[u32]) -> Vec<usize> {
    let n = g.num_vertices();
    let (src, dst) = (n, n + 1);
    let mut arcs: Vec<(usize, i64)> = Vec::new();
    let mut out: Vec<Vec<usize>> = vec![Vec::new(); n + 2];
    let mut add = |arcs: &mut Vec<(usize, i64)>, a: usize, b: usize, c: i64, back: i64| {
        out[a].push(arcs.len());
        arcs.push((b, c));
        out[b].push(arcs.len());
        arcs.push((a, back));
    };
    let big = g.num_edges() as i64 + 1;
    for (e, &(u, v)) in g.edges().iter().enumerate() {
        add(&mut arcs, u, v, cap[e] as i64, cap[e] as i64);
    }
    for &s in sources {
        add(&mut arcs, src, s, big, 0);
    }
    for &t in sinks {
        add(&mut arcs, t, dst, big, 0);
    }
    loop {
        let mut prev: Vec<Option<usize>> = vec![None; n + 2];
        let mut seen = vec![false; n + 2];
        let mut queue = std::collections::VecDeque::from([src]);
        seen[src] = true;
        while let Some(v) = queue.pop_front() {
            for &a in &out[v] {
                let (w, c) = arcs[a];
                if c > 0 && !seen[w] {
                    seen[w] = true;
                    prev[w] = Some(a);
                    queue.push_back(w);
                }
            }
        }
        if !seen[dst] {
            return (0..n).filter(|&v| seen[v]).collect();
        }
        let mut push = i64::MAX;
        let mut v = dst;
        while let Some(a) = prev[v] {
            push = push.min(arcs[a].1);
            v = arcs[a ^ 1].0;
        }
        let mut v = dst;
        while let Some(a) = prev[v] {
            arcs[a].1 -= push;
            arcs[a ^ 1].1 += push;
            v = arcs[a ^ 1].0;
        }
    }
}

/// BFS 2-colouring with component ids. Components are rooted at their lowest
/// vertex, which gets colour `true`.
fn color_components(g: &TopologyGraph, removed: &[bool]) -> Option<(Vec<bool>, Vec<usize>)> {
    let n = g.num_vertices();
    let mut color = vec![false; n];
    let mut comp = vec![usize::MAX; n];
    let mut queue = std::collections::VecDeque::new();
    let mut next = 0;
    for root in 0..n {
        if comp[root] != usize::MAX {
            continue;
        }
        comp[root] = next;
        color[root] = true;
        queue.push_back(root);
        while let Some(v) = queue.pop_front() {
            for &(w, e) in g.neighbors(v) {
                if removed[e] {
                    continue;
                }
                if comp[w] == usize::MAX {
                    comp[w] = next;
                    color[w] = !color[v];
                    queue.push_back(w);
                } else if color[w] == color[v] {
                    return None;
                }
            }
        }
        next += 1;
    }
    Some((color, comp))
}

/// Greedy α-optimal suppression with gate qubits `q` forced into `S`.
///
/// Each tied maximum-weight matching of the odd faces (at most
/// [`MAX_TIED_MATCHINGS`]) seeds its own search. Every evaluated pairing
/// contributes its induced cut; pairings that fail the check contribute a
/// repaired cut. The search itself only moves between pairings that pass the
/// check and stops once the objective of the current pairing no longer
/// changes. The best cut seen is returned, so its objective
/// never increases over the iterations (see `trace`).
pub fn alpha_optimal(g: &TopologyGraph, q: &[usize], alpha: f64, k: usize) -> Result<SuppressionResult> {
    let q = validate_inputs(g, q, alpha)?;
    if k == 0 {
        return Err(Error::Suppression("k must be at least 1".into()));
    }
    let d = dual_graph(g)?;
    let mut in_q = vec![false; g.num_vertices()];
    for &v in &q {
        in_q[v] = true;
    }
    let gate_edges: Vec<usize> = (0..g.num_edges())
        .filter(|&e| {
            let (u, v) = g.edge(e);
            in_q[u] && in_q[v]
        })
        .collect();
    let mut masked = vec![false; d.num_edges()];
    for &e in &gate_edges {
        masked[d.dual_edge(e)] = true;
    }

    let odd = d.odd_vertices(&masked);
    let dist: Vec<Vec<Option<usize>>> = odd
        .iter()
        .map(|&u| {
            let all = bfs_distances(&d, &masked, u);
            odd.iter().map(|&v| all[v]).collect()
        })
        .collect();
    let longest = dist.iter().flatten().flatten().copied().max().unwrap_or(0);
    let matchings = max_weight_perfect_matchings(
        odd.len(),
        |i, j| dist[i][j].map(|dij| (longest + 1 - dij) as f64),
        MAX_TIED_MATCHINGS,
    )?;
    if matchings.is_empty() {
        return Err(Error::Suppression("odd faces cannot be paired in the dual graph".into()));
    }

    let all_dist = g.all_pairs_distances();
    let mut stats = SearchStats { odd_vertices: odd.len(), ..SearchStats::default() };
    let mut best: Option<(Candidate, CutOrigin)> = None;
    let mut trace = Vec::new();
    for pairs in &matchings {
        let paths: Vec<Vec<DualPath>> = pairs
            .iter()
            .map(|&(i, j)| k_shortest_paths(&d, &masked, odd[i], odd[j], k))
            .collect();
        let search = Search { g, q: &q, alpha, gate_edges: gate_edges.clone(), paths, dist: all_dist.clone() };
        search.relax(&mut stats, &mut best, &mut trace);
    }

    let mut result = match best {
        Some((cand, origin)) => SuppressionResult::from_cut(g, Cut::from_sides(cand.sides), alpha, origin),
        None => {
            log::warn!("no feasible suppression cut found; pulsing every qubit");
            SuppressionResult::from_cut(g, Cut::from_sides(vec![true; g.num_vertices()]), alpha, CutOrigin::Fallback)
        }
    };
    result.stats = stats;
    result.trace = trace;
    Ok(result)
}
