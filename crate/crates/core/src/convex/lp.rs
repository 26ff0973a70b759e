//! A small dense two-phase simplex over free variables, used for the
//! feasibility, redundancy, recession-cone, and Chebyshev solves. Instances
//! here are tiny (a handful of variables, a few dozen rows), so clarity wins
//! over sparsity. Bland's rule guards against cycling.

const EPS: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub enum Lp {
    Infeasible,
    Unbounded,
    Optimal { x: Vec<f64>, value: f64 },
}

/// Maximize `obj . x` subject to `rows[i].0 . x <= rows[i].1`, `x` free.
pub fn maximize(obj: &[f64], rows: &[(Vec<f64>, f64)]) -> Lp {
    let n = obj.len();
    let m = rows.len();
    // Free variables split as x = u - v, u, v >= 0.
    let nv = 2 * n;

    // Tableau columns: [u | v | slack | artificial | rhs].
    let mut flipped = vec![false; m];
    let mut art_of_row = vec![usize::MAX; m];
    let mut n_art = 0;
    for (i, row) in rows.iter().enumerate() {
        debug_assert_eq!(row.0.len(), n);
        if row.1 < 0.0 {
            flipped[i] = true;
            art_of_row[i] = n_art;
            n_art += 1;
        }
    }
    let ncols = nv + m + n_art + 1;
    let rhs = ncols - 1;
    let mut t = vec![vec![0.0; ncols]; m];
    let mut basis = vec![0usize; m];
    for (i, row) in rows.iter().enumerate() {
        let sign = if flipped[i] { -1.0 } else { 1.0 };
        for j in 0..n {
            t[i][j] = sign * row.0[j];
            t[i][n + j] = -sign * row.0[j];
        }
        t[i][nv + i] = sign; // slack
        t[i][rhs] = sign * row.1;
        if flipped[i] {
            let a = nv + m + art_of_row[i];
            t[i][a] = 1.0;
            basis[i] = a;
        } else {
            basis[i] = nv + i;
        }
    }

    if n_art > 0 {
        // Phase 1: maximize -sum(artificials).
        let mut cost = vec![0.0; ncols - 1];
        for a in 0..n_art {
            cost[nv + m + a] = -1.0;
        }
        if pivot_to_optimum(&mut t, &mut basis, &cost, ncols) == Step::Unbounded {
            unreachable!("phase 1 objective is bounded above by 0");
        }
        let attained: f64 = basis
            .iter()
            .enumerate()
            .map(|(i, &b)| if cost[b] != 0.0 { -t[i][rhs] } else { 0.0 })
            .sum::<f64>();
        if attained < -1e-7 {
            return Lp::Infeasible;
        }
        // Drive leftover artificials out of the basis, dropping redundant rows.
        let art_start = nv + m;
        let mut i = 0;
        while i < t.len() {
            if basis[i] >= art_start {
                if let Some(j) = (0..art_start).find(|&j| t[i][j].abs() > EPS) {
                    pivot(&mut t, &mut basis, i, j);
                } else {
                    t.remove(i);
                    basis.remove(i);
                    continue;
                }
            }
            i += 1;
        }
        // Remove artificial columns.
        for row in &mut t {
            row.drain(art_start..art_start + n_art);
        }
    }

    let ncols = nv + m + 1;
    let rhs = ncols - 1;
    let mut cost = vec![0.0; ncols - 1];
    for j in 0..n {
        cost[j] = obj[j];
        cost[n + j] = -obj[j];
    }
    if pivot_to_optimum(&mut t, &mut basis, &cost, ncols) == Step::Unbounded {
        return Lp::Unbounded;
    }

    let mut x = vec![0.0; n];
    for (i, &b) in basis.iter().enumerate() {
        if b < n {
            x[b] += t[i][rhs];
        } else if b < nv {
            x[b - n] -= t[i][rhs];
        }
    }
    let value = obj.iter().zip(&x).map(|(c, v)| c * v).sum();
    Lp::Optimal { x, value }
}

#[derive(PartialEq)]
enum Step {
    Optimal,
    Unbounded,
}

fn pivot_to_optimum(
    t: &mut Vec<Vec<f64>>,
    basis: &mut Vec<usize>,
    cost: &[f64],
    ncols: usize,
) -> Step {
    let rhs = ncols - 1;
    loop {
        // Reduced costs r_j = c_j - c_B . T_j; Bland: smallest improving j.
        let mut entering = None;
        for j in 0..ncols - 1 {
            let z: f64 = basis
                .iter()
                .enumerate()
                .map(|(i, &b)| cost[b] * t[i][j])
                .sum();
            if cost[j] - z > EPS {
                entering = Some(j);
                break;
            }
        }
        let Some(j) = entering else {
            return Step::Optimal;
        };
        let mut leaving: Option<usize> = None;
        let mut best = f64::INFINITY;
        for i in 0..t.len() {
            if t[i][j] > EPS {
                let ratio = t[i][rhs] / t[i][j];
                if ratio < best - EPS
                    || (ratio < best + EPS
                        && leaving.map_or(true, |l| basis[i] < basis[l]))
                {
                    best = ratio;
                    leaving = Some(i);
                }
            }
        }
        let Some(i) = leaving else {
            return Step::Unbounded;
        };
        pivot(t, basis, i, j);
    }
}

fn pivot(t: &mut [Vec<f64>], basis: &mut [usize], i: usize, j: usize) {
    let p = t[i][j];
    for v in &mut t[i] {
        *v /= p;
    }
    for r in 0..t.len() {
        if r != i && t[r][j].abs() > 0.0 {
            let f = t[r][j];
            for c in 0..t[r].len() {
                t[r][c] -= f * t[i][c];
            }
        }
    }
    basis[i] = j;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chebyshev_of_unit_square() {
        // max R st x + R <= 1, -x + R <= 0, y + R <= 1, -y + R <= 0.
        let rows = vec![
            (vec![1.0, 0.0, 1.0], 1.0),
            (vec![-1.0, 0.0, 1.0], 0.0),
            (vec![0.0, 1.0, 1.0], 1.0),
            (vec![0.0, -1.0, 1.0], 0.0),
        ];
        match maximize(&[0.0, 0.0, 1.0], &rows) {
            Lp::Optimal { x, value } => {
                assert!((value - 0.5).abs() < 1e-9);
                assert!((x[0] - 0.5).abs() < 1e-9);
                assert!((x[1] - 0.5).abs() < 1e-9);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unbounded_growth_detected() {
        // max x st -x <= 0.
        let rows = vec![(vec![-1.0], 0.0)];
        assert_eq!(maximize(&[1.0], &rows), Lp::Unbounded);
    }

    #[test]
    fn infeasible_detected() {
        // x <= 0 and x >= 1.
        let rows = vec![(vec![1.0], 0.0), (vec![-1.0], -1.0)];
        assert_eq!(maximize(&[1.0], &rows), Lp::Infeasible);
    }

    #[test]
    fn negative_rhs_feasible() {
        // x <= -1, -x <= 3  => x in [-3, -1]; max x = -1.
        let rows = vec![(vec![1.0], -1.0), (vec![-1.0], 3.0)];
        match maximize(&[1.0], &rows) {
            Lp::Optimal { value, .. } => assert!((value + 1.0).abs() < 1e-9),
            other => panic!("{other:?}"),
        }
    }
}
