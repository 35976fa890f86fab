//! Rectangular min-cost assignment (rows ≤ columns) with forbidden cells.
//!
//! Shortest augmenting path formulation of the Hungarian method, O(n² m).
//! Forbidden cells carry `f64::INFINITY` and are never relaxed. Callers must
//! check that a row-perfect matching exists first ([`has_perfect_matching`]),
//! which keeps every augmentation step finite.
//!
//! Rows are inserted in order and columns scanned in ascending order with a
//! strict comparison, so among equal-cost alternatives the lower column wins.

pub(crate) fn solve(costs: &[f64], rows: usize, cols: usize) -> Option<Vec<usize>> {
    debug_assert_eq!(costs.len(), rows * cols);
    if rows == 0 {
        return Some(Vec::new());
    }
    if rows > cols {
        return None;
    }
    let cost = |r: usize, c: usize| costs[r * cols + c];

    // 1-based potentials; index 0 is the virtual root column.
    let mut u = vec![0.0f64; rows + 1];
    let mut v = vec![0.0f64; cols + 1];
    let mut owner = vec![0usize; cols + 1];
    let mut way = vec![0usize; cols + 1];

    for r in 1..=rows {
        owner[0] = r;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; cols + 1];
        let mut used = vec![false; cols + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = usize::MAX;
            for j in 1..=cols {
                if used[j] {
                    continue;
                }
                let c = cost(i0 - 1, j - 1);
                if c.is_finite() {
                    let cur = c - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            if j1 == usize::MAX || !delta.is_finite() {
                return None;
            }
            for j in 0..=cols {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut choice = vec![usize::MAX; rows];
    for j in 1..=cols {
        if owner[j] > 0 {
            choice[owner[j] - 1] = j - 1;
        }
    }
    Some(choice)
}

/// Whether every row can be matched to a distinct allowed column
/// (Kuhn's augmenting paths).
pub(crate) fn has_perfect_matching(allowed: &[bool], rows: usize, cols: usize) -> bool {
    fn augment(
        r: usize,
        allowed: &[bool],
        cols: usize,
        seen: &mut [bool],
        matched: &mut [Option<usize>],
    ) -> bool {
        for c in 0..cols {
            if allowed[r * cols + c] && !seen[c] {
                seen[c] = true;
                let free = match matched[c] {
                    None => true,
                    Some(other) => augment(other, allowed, cols, seen, matched),
                };
                if free {
                    matched[c] = Some(r);
                    return true;
                }
            }
        }
        false
    }

    if rows > cols {
        return false;
    }
    let mut matched = vec![None; cols];
    (0..rows).all(|r| {
        let mut seen = vec![false; cols];
        augment(r, allowed, cols, &mut seen, &mut matched)
    })
}
