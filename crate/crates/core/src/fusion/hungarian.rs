//! Rectangular minimum-cost assignment.
//!
//! The solve is the O(n^3) shortest-augmenting-path Hungarian method on the
//! zero-padded square matrix. A second pass walks rows in order and, among
//! all optimal assignments (perfect matchings of the tight-edge graph under
//! the final dual potentials), moves each row to its smallest feasible column.
//! The result is the lexicographically smallest optimal pair list.

use serde::{Deserialize, Serialize};

use crate::{Error, Real, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assignment<T> {
    /// `(row, col)` pairs sorted by row.
    pub pairs: Vec<(usize, usize)>,
    pub total_cost: T,
}

pub fn hungarian<T: Real>(cost: &[Vec<T>]) -> Result<Assignment<T>> {
    let rows = cost.len();
    let cols = cost.first().map_or(0, Vec::len);
    if rows == 0 || cols == 0 {
        return Err(Error::EmptyMatrix);
    }
    if cost.iter().any(|r| r.len() != cols) {
        return Err(Error::MalformedMatrix("rows of unequal length".into()));
    }
    if cost.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::MalformedMatrix("non-finite cost".into()));
    }

    let n = rows.max(cols);
    let at = |i: usize, j: usize| if i < rows && j < cols { cost[i][j] } else { T::zero() };

    // 1-indexed potentials; col_owner[j] = row matched to column j (0 = none).
    let mut u = vec![T::zero(); n + 1];
    let mut v = vec![T::zero(); n + 1];
    let mut col_owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        col_owner[0] = i;
        let mut j0 = 0;
        let mut minv = vec![T::infinity(); n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = col_owner[j0];
            let mut delta = T::infinity();
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = at(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[col_owner[j]] = u[col_owner[j]] + delta;
                    v[j] = v[j] - delta;
                } else {
                    minv[j] = minv[j] - delta;
                }
            }
            j0 = j1;
            if col_owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            col_owner[j0] = col_owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    // Back to 0-indexed, row -> col and col -> row.
    let mut col_of = vec![0usize; n];
    let mut row_of = vec![0usize; n];
    for j in 1..=n {
        col_of[col_owner[j] - 1] = j - 1;
        row_of[j - 1] = col_owner[j] - 1;
    }

    let scale = cost.iter().flatten().fold(T::one(), |m, v| m.max(v.abs()));
    let tol = T::epsilon() * T::from_count(1024 * n) * scale;
    let tight = |i: usize, j: usize, col_of: &[usize]| col_of[i] == j || at(i, j) - u[i + 1] - v[j + 1] <= tol;

    for i in 0..rows {
        for j in 0..n {
            if col_of[i] == j || (j >= cols && col_of[i] >= cols) {
                break;
            }
            if !tight(i, j, &col_of) || row_of[j] < i {
                continue;
            }
            if let Some(moves) = alternating_path(i, j, n, &col_of, &row_of, |r, c| tight(r, c, &col_of)) {
                for (r, c) in moves {
                    col_of[r] = c;
                    row_of[c] = r;
                }
                col_of[i] = j;
                row_of[j] = i;
                break;
            }
        }
    }

    let pairs: Vec<(usize, usize)> = (0..rows).filter(|&i| col_of[i] < cols).map(|i| (i, col_of[i])).collect();
    let total_cost = pairs.iter().fold(T::zero(), |acc, &(i, j)| acc + cost[i][j]);
    Ok(Assignment { pairs, total_cost })
}

/// Searches for a way to hand column `j` to row `i` while rows `< i` keep their
/// columns: the current owner of `j` must reach `i`'s current column through
/// tight edges, displacing owners along the way. Returns the `(row, new column)`
/// moves that realise it.
fn alternating_path(
    i: usize,
    j: usize,
    n: usize,
    col_of: &[usize],
    row_of: &[usize],
    tight: impl Fn(usize, usize) -> bool,
) -> Option<Vec<(usize, usize)>> {
    let target = col_of[i];
    let start = row_of[j];
    // parent[row] = (row that takes this row's column, that column)
    let mut parent: Vec<Option<(usize, usize)>> = vec![None; n];
    let mut seen_col = vec![false; n];
    seen_col[j] = true;
    let mut visited_row = vec![false; n];
    visited_row[start] = true;
    let mut queue = std::collections::VecDeque::from([start]);
    while let Some(r) = queue.pop_front() {
        for c in 0..n {
            if seen_col[c] || !tight(r, c) {
                continue;
            }
            if c == target {
                let mut moves = vec![(r, c)];
                let mut cur = r;
                while let Some((prev, via)) = parent[cur] {
                    moves.push((prev, via));
                    cur = prev;
                }
                return Some(moves);
            }
            let owner = row_of[c];
            if owner <= i || visited_row[owner] {
                continue;
            }
            seen_col[c] = true;
            visited_row[owner] = true;
            parent[owner] = Some((r, c));
            queue.push_back(owner);
        }
    }
    None
}
