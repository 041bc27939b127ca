//! Exact maximum-weight perfect matching on small complete graphs.
//!
//! Dynamic programming over vertex subsets: the lowest vertex of a subset is
//! paired with every other member in turn. `O(m 2^m)` time and memory, so the
//! number of vertices is capped. Tied optima can be enumerated.

use crate::error::{Error, Result};

/// Largest vertex count accepted by [`max_weight_perfect_matching`].
pub const MAX_MATCHING_VERTICES: usize = 20;

/// Maximum-weight perfect matching. `weight(i, j)` returns `None` for pairs
/// that may not be matched. Returns pairs `(i, j)` with `i < j`, sorted, or
/// `None` if no perfect matching exists.
pub fn max_weight_perfect_matching(
    m: usize,
    weight: impl Fn(usize, usize) -> Option<f64>,
) -> Result<Option<Vec<(usize, usize)>>> {
    Ok(max_weight_perfect_matchings(m, weight, 1)?.into_iter().next())
}

/// Every maximum-weight perfect matching, up to `limit` of them, in
/// lexicographic order of partner choices. Empty if none exists.
pub fn max_weight_perfect_matchings(
    m: usize,
    weight: impl Fn(usize, usize) -> Option<f64>,
    limit: usize,
) -> Result<Vec<Vec<(usize, usize)>>> {
    if m > MAX_MATCHING_VERTICES {
        return Err(Error::Suppression(format!(
            "{m} odd-degree dual vertices exceed the matching limit of {MAX_MATCHING_VERTICES}"
        )));
    }
    if m % 2 == 1 || limit == 0 {
        return Ok(Vec::new());
    }
    let mut w = vec![None; m * m];
    for i in 0..m {
        for j in i + 1..m {
            w[i * m + j] = weight(i, j);
        }
    }
    // best[r]: heaviest perfect matching of the vertex subset r.
    let full = (1usize << m) - 1;
    let mut best = vec![f64::NEG_INFINITY; 1 << m];
    best[0] = 0.0;
    for r in 1..=full {
        if r.count_ones() % 2 == 1 {
            continue;
        }
        let i = r.trailing_zeros() as usize;
        for j in i + 1..m {
            if r & (1 << j) == 0 {
                continue;
            }
            if let Some(wij) = w[i * m + j] {
                let rest = r & !(1 << i) & !(1 << j);
                best[r] = best[r].max(best[rest] + wij);
            }
        }
    }
    let mut out = Vec::new();
    if best[full] > f64::NEG_INFINITY {
        let mut stack = Vec::new();
        enumerate(full, m, &w, &best, &mut stack, &mut out, limit);
    }
    Ok(out)
}

fn enumerate(
    r: usize,
    m: usize,
    w: &[Option<f64>],
    best: &[f64],
    stack: &mut Vec<(usize, usize)>,
    out: &mut Vec<Vec<(usize, usize)>>,
    limit: usize,
) {
    if r == 0 {
        out.push(stack.clone());
        return;
    }
    let i = r.trailing_zeros() as usize;
    for j in i + 1..m {
        if out.len() >= limit {
            return;
        }
        if r & (1 << j) == 0 {
            continue;
        }
        if let Some(wij) = w[i * m + j] {
            let rest = r & !(1 << i) & !(1 << j);
            if best[rest] + wij == best[r] {
                stack.push((i, j));
                enumerate(rest, m, w, best, stack, out, limit);
                stack.pop();
            }
        }
    }
}
