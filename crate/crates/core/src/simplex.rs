//! Phase-1 simplex for small equality-form feasibility problems.
//!
//! Degradedness checks reduce to "does a row-stochastic matrix exist
//! satisfying these linear equations", which is exactly a phase-1
//! question: minimize the artificial mass of A w = b, w >= 0. Problems
//! here are tiny (tens of variables), so the solver favors clarity:
//! dense tableau, Bland's rule, reduced costs recomputed per pivot.

const PIVOT_TOL: f64 = 1e-11;
const FEAS_TOL: f64 = 1e-9;

/// Finds any w >= 0 with A w = b, or None when the system is
/// infeasible at tolerance.
pub fn solve_feasible(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let m = a.len();
    assert_eq!(b.len(), m, "one rhs entry per row");
    if m == 0 {
        return Some(Vec::new());
    }
    let n = a[0].len();
    assert!(a.iter().all(|r| r.len() == n), "ragged constraint matrix");

    // tableau [A | I | b] with b >= 0; basis starts on the artificials
    let mut t = vec![vec![0.0; n + m + 1]; m];
    for i in 0..m {
        let flip = if b[i] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n {
            t[i][j] = flip * a[i][j];
        }
        t[i][n + i] = 1.0;
        t[i][n + m] = flip * b[i];
    }
    let mut basis: Vec<usize> = (n..n + m).collect();

    // Bland's rule terminates without cycling; the cap is a safety net.
    for _ in 0..100_000 {
        // reduced cost of column j is -sum of rows whose basic variable
        // is still artificial (phase-1 costs are 1 on artificials)
        let mut entering = None;
        for j in 0..n {
            let mut score = 0.0;
            for i in 0..m {
                if basis[i] >= n {
                    score += t[i][j];
                }
            }
            if score > FEAS_TOL {
                entering = Some(j);
                break;
            }
        }
        let Some(col) = entering else { break };

        let mut leaving: Option<usize> = None;
        let mut best = f64::INFINITY;
        for i in 0..m {
            if t[i][col] > PIVOT_TOL {
                let ratio = t[i][n + m] / t[i][col];
                let better = ratio < best - PIVOT_TOL
                    || (ratio < best + PIVOT_TOL
                        && leaving.is_none_or(|l| basis[i] < basis[l]));
                if better {
                    best = ratio;
                    leaving = Some(i);
                }
            }
        }
        let row = leaving?;

        let pivot = t[row][col];
        for v in t[row].iter_mut() {
            *v /= pivot;
        }
        for i in 0..m {
            if i != row && t[i][col].abs() > 0.0 {
                let f = t[i][col];
                for j in 0..=n + m {
                    t[i][j] -= f * t[row][j];
                }
            }
        }
        basis[row] = col;
    }

    let residual: f64 = (0..m)
        .filter(|&i| basis[i] >= n)
        .map(|i| t[i][n + m])
        .sum();
    if residual > FEAS_TOL {
        return None;
    }
    let mut w = vec![0.0; n];
    for i in 0..m {
        if basis[i] < n {
            w[basis[i]] = t[i][n + m].max(0.0);
        }
    }
    Some(w)
}
