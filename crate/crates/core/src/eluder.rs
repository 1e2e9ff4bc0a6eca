//! Exhaustive eluder-dimension computation for small tabulated classes.
//!
//! `x` is ε-dependent on a prefix if every pair of members within ε of each
//! other on the prefix (Euclidean distance of their prediction vectors) also
//! differs by at most ε at `x`. The ε-eluder dimension is the longest
//! sequence in which, for a single ε' > ε, every element is ε'-independent
//! of its predecessors.
//!
//! For a fixed prefix and element, the set of ε' witnessing independence is
//! the union over ordered pairs of `[dist_prefix, diff_at_x)`. A sequence is
//! valid when the intersection of these sets with `(ε, ∞)` is nonempty, which
//! the search tracks as a union of half-open intervals.
//!
//! A class of identical members has dimension 0: no pair ever differs, so
//! even the first element is dependent on the empty prefix.

use crate::error::{Error, Result};

pub const MAX_CONTEXTS: usize = 8;
pub const MAX_MEMBERS: usize = 16;

/// Half-open intervals `[lo, hi)`, sorted and disjoint.
type IntervalSet = Vec<(f64, f64)>;

/// `values[m][x]` is the prediction of member `m` at context `x`.
pub fn eluder_dimension_bruteforce(values: &[Vec<f64>], epsilon: f64) -> Result<usize> {
    let members = values.len();
    let contexts = values.first().map_or(0, Vec::len);
    if members > MAX_MEMBERS || contexts > MAX_CONTEXTS || values.iter().any(|v| v.len() != contexts) {
        return Err(Error::EnvelopeExceeded {
            contexts,
            members,
            max_contexts: MAX_CONTEXTS,
            max_members: MAX_MEMBERS,
        });
    }
    let start = vec![(epsilon, f64::INFINITY)];
    let mut used = vec![false; contexts];
    let mut sq_dist = vec![0.0; members * members];
    Ok(search(values, &start, &mut used, &mut sq_dist, 0))
}

fn search(values: &[Vec<f64>], feasible: &IntervalSet, used: &mut [bool], sq_dist: &mut [f64], depth: usize) -> usize {
    let members = values.len();
    let mut best = depth;
    for x in 0..used.len() {
        // a repeated element is always dependent on a prefix containing it
        if used[x] {
            continue;
        }
        let witness = independence_witness(values, sq_dist, x);
        let next = intersect(feasible, &witness);
        if next.is_empty() {
            continue;
        }
        used[x] = true;
        for a in 0..members {
            for b in 0..members {
                let d = values[a][x] - values[b][x];
                sq_dist[a * members + b] += d * d;
            }
        }
        best = best.max(search(values, &next, used, sq_dist, depth + 1));
        for a in 0..members {
            for b in 0..members {
                let d = values[a][x] - values[b][x];
                sq_dist[a * members + b] -= d * d;
            }
        }
        used[x] = false;
        if best == used.len() {
            break;
        }
    }
    best
}

/// ε' values for which `x` is ε'-independent of the current prefix.
fn independence_witness(values: &[Vec<f64>], sq_dist: &[f64], x: usize) -> IntervalSet {
    let members = values.len();
    let mut intervals: IntervalSet = Vec::new();
    for a in 0..members {
        for b in 0..members {
            let lo = sq_dist[a * members + b].max(0.0).sqrt();
            let hi = values[a][x] - values[b][x];
            if lo < hi {
                intervals.push((lo, hi));
            }
        }
    }
    normalize(intervals)
}

fn normalize(mut intervals: IntervalSet) -> IntervalSet {
    intervals.sort_by(|p, q| p.0.total_cmp(&q.0));
    let mut merged: IntervalSet = Vec::with_capacity(intervals.len());
    for (lo, hi) in intervals {
        match merged.last_mut() {
            Some(last) if lo <= last.1 => last.1 = last.1.max(hi),
            _ => merged.push((lo, hi)),
        }
    }
    merged
}

fn intersect(a: &IntervalSet, b: &IntervalSet) -> IntervalSet {
    let mut out = Vec::new();
    for &(alo, ahi) in a {
        for &(blo, bhi) in b {
            let lo = alo.max(blo);
            let hi = ahi.min(bhi);
            if lo < hi {
                out.push((lo, hi));
            }
        }
    }
    normalize(out)
}
