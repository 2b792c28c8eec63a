//! Independent oracles used by the acceptance suite. These deliberately
//! avoid the implementation paths they check.

// Simplex tableau arithmetic is written with explicit row/column indices.
#![allow(clippy::needless_range_loop)]

use auv_mission::graph::OperationGraph;

/// Total times of every edge-simple walk from `start` to `target`, found by
/// exhaustive depth-first search.
///
/// A walk ends at its first arrival at the target: reaching the target ends
/// the mission, so walks that would pass through it and continue are not
/// executable routes.
pub fn enumerate_walk_times(graph: &OperationGraph, start: usize, target: usize) -> Vec<f64> {
    fn dfs(
        graph: &OperationGraph,
        node: usize,
        target: usize,
        used: &mut Vec<bool>,
        elapsed: f64,
        times: &mut Vec<f64>,
    ) {
        if node == target && elapsed > 0.0 {
            times.push(elapsed);
            return;
        }
        for &e in graph.incident_edges(node) {
            if used[e] {
                continue;
            }
            let edge = &graph.edges()[e];
            used[e] = true;
            dfs(graph, edge.other(node), target, used, elapsed + edge.expected_time, times);
            used[e] = false;
        }
    }
    let mut times = Vec::new();
    let mut used = vec![false; graph.edges().len()];
    dfs(graph, start, target, &mut used, 0.0, &mut times);
    times
}

/// Whether `point` lies in the convex hull of `points`, within `tol`.
///
/// Solves the phase-one linear program: find lambda >= 0 with
/// sum(lambda) = 1 and sum(lambda_i * P_i) = point, via a dense simplex
/// with Bland's rule. Feasible (objective ~ 0) means containment.
pub fn in_convex_hull(points: &[[f64; 3]], point: [f64; 3], tol: f64) -> bool {
    let n = points.len();
    let m = 4; // three coordinates + the affine row
    // Shift so the query point is the origin; rows then have rhs (0,0,0,1).
    let column = |i: usize, row: usize| -> f64 {
        if row < 3 {
            points[i][row] - point[row]
        } else {
            1.0
        }
    };

    // Tableau: columns = n structural + m artificial + rhs.
    let cols = n + m + 1;
    let mut tab = vec![vec![0.0f64; cols]; m];
    let mut rhs = [0.0, 0.0, 0.0, 1.0];
    for row in 0..m {
        let flip = if rhs[row] < 0.0 { -1.0 } else { 1.0 };
        rhs[row] *= flip;
        for i in 0..n {
            tab[row][i] = flip * column(i, row);
        }
        tab[row][n + row] = 1.0;
        tab[row][cols - 1] = rhs[row];
    }
    let mut basis: Vec<usize> = (n..n + m).collect();

    // Objective: minimize the sum of artificials. Reduced costs start as the
    // negated column sums; basic artificials carry zero reduced cost and are
    // never allowed to re-enter.
    let mut objective = vec![0.0f64; cols];
    for row in 0..m {
        for c in 0..cols {
            objective[c] -= tab[row][c];
        }
    }
    for row in 0..m {
        objective[n + row] = 0.0;
    }

    for _ in 0..10_000 {
        // Bland's rule over structural columns: smallest index with a
        // negative reduced cost.
        let Some(pivot_col) = (0..n).find(|&c| objective[c] < -1e-12) else {
            break;
        };
        let mut pivot_row = None;
        let mut best_ratio = f64::INFINITY;
        for row in 0..m {
            if tab[row][pivot_col] > 1e-12 {
                let ratio = tab[row][cols - 1] / tab[row][pivot_col];
                if ratio < best_ratio - 1e-15
                    || (ratio < best_ratio + 1e-15
                        && pivot_row.is_none_or(|r: usize| basis[row] < basis[r]))
                {
                    best_ratio = ratio;
                    pivot_row = Some(row);
                }
            }
        }
        let Some(pivot_row) = pivot_row else {
            break; // unbounded: cannot happen with artificials present
        };
        let scale = tab[pivot_row][pivot_col];
        for c in 0..cols {
            tab[pivot_row][c] /= scale;
        }
        for row in 0..m {
            if row != pivot_row {
                let factor = tab[row][pivot_col];
                if factor != 0.0 {
                    for c in 0..cols {
                        tab[row][c] -= factor * tab[pivot_row][c];
                    }
                }
            }
        }
        let factor = objective[pivot_col];
        if factor != 0.0 {
            for c in 0..cols {
                objective[c] -= factor * tab[pivot_row][c];
            }
        }
        basis[pivot_row] = pivot_col;
    }

    // Any artificial left in the basis carries the remaining infeasibility.
    let infeasibility: f64 = basis
        .iter()
        .zip(0..m)
        .filter(|(b, _)| **b >= n)
        .map(|(_, row)| tab[row][cols - 1])
        .sum();
    infeasibility.abs() <= tol
}

#[cfg(test)]
mod self_checks {
    use super::*;

    #[test]
    fn hull_oracle_agrees_on_simple_cases() {
        let cube = [
            [0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, 0.0, 1.0],
            [1.0, 1.0, 1.0],
        ];
        assert!(in_convex_hull(&cube, [0.5, 0.5, 0.5], 1e-9));
        assert!(in_convex_hull(&cube, [0.0, 0.0, 0.0], 1e-9));
        assert!(!in_convex_hull(&cube, [1.5, 0.0, 0.0], 1e-9));
        assert!(!in_convex_hull(&cube, [-0.01, 0.5, 0.5], 1e-9));
        // Degenerate hull: a segment.
        let segment = [[0.0, 0.0, 0.0], [2.0, 0.0, 0.0]];
        assert!(in_convex_hull(&segment, [1.0, 0.0, 0.0], 1e-9));
        assert!(!in_convex_hull(&segment, [1.0, 0.1, 0.0], 1e-9));
    }
}
