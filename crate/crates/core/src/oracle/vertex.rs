use upmr_lp::LinearProgram;

use super::OracleError;

const MAX_VARS: usize = 8;
const MAX_BASES: u64 = 2_000_000;
const TOL: f64 = 1e-9;

/// Solves `a x = b` in place by Gaussian elimination with partial pivoting.
/// Returns `None` for a (numerically) singular system.
fn solve_square(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-10 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            if f != 0.0 {
                for c in col..n {
                    a[r][c] -= f * a[col][c];
                }
                b[r] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

fn next_combination(idx: &mut [usize], total: usize) -> bool {
    let k = idx.len();
    for i in (0..k).rev() {
        if idx[i] < total - k + i {
            idx[i] += 1;
            for j in i + 1..k {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

fn binomial(n: usize, k: usize) -> u64 {
    (0..k).fold(1u64, |acc, i| acc.saturating_mul((n - i) as u64) / (i as u64 + 1))
}

/// Optimum of a small bounded LP found by trying every basis: each choice
/// of `n` tight constraints (rows or bounds) is solved and kept if
/// feasible. `None` when no vertex is feasible.
///
/// Every variable needs a finite upper bound so that the feasible set is a
/// polytope and its optimum sits at a vertex.
pub fn lp_vertex_oracle(lp: &LinearProgram) -> Result<Option<f64>, OracleError> {
    let n = lp.num_vars();
    if n > MAX_VARS {
        return Err(OracleError::TooLarge(format!("{n} variables")));
    }
    if let Some(v) = lp.vars().iter().find(|v| !v.upper.is_finite()) {
        return Err(OracleError::InvalidInput(format!("variable {} has no upper bound", v.name)));
    }

    let mut planes: Vec<(Vec<f64>, f64)> = Vec::new();
    for (j, v) in lp.vars().iter().enumerate() {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        planes.push((e.clone(), v.lower));
        planes.push((e, v.upper));
    }
    for r in lp.rows() {
        let mut a = vec![0.0; n];
        for &(v, c) in &r.coeffs {
            a[v.0] = c;
        }
        planes.push((a, r.rhs));
    }
    let total = planes.len();
    if n == 0 {
        return Ok((lp.max_violation(&[]) <= TOL).then_some(0.0));
    }
    if binomial(total, n) > MAX_BASES {
        return Err(OracleError::TooLarge(format!("{} candidate bases", binomial(total, n))));
    }

    let mut best: Option<f64> = None;
    let mut idx: Vec<usize> = (0..n).collect();
    loop {
        let a: Vec<Vec<f64>> = idx.iter().map(|&i| planes[i].0.clone()).collect();
        let b: Vec<f64> = idx.iter().map(|&i| planes[i].1).collect();
        if let Some(x) = solve_square(a, b) {
            if lp.max_violation(&x) <= TOL {
                let z = lp.objective_value(&x);
                if best.is_none_or(|b| z > b) {
                    best = Some(z);
                }
            }
        }
        if !next_combination(&mut idx, total) {
            break;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use upmr_lp::Comparator;

    #[test]
    fn two_variable_example() {
        // max 3x + 2y  s.t. x + y ≤ 4, x + 3y ≤ 6, 0 ≤ x ≤ 3, 0 ≤ y ≤ 10
        let mut lp = LinearProgram::new();
        let x = lp.add_var("x", 0.0, 3.0, 3.0);
        let y = lp.add_var("y", 0.0, 10.0, 2.0);
        lp.add_row("a", [(x, 1.0), (y, 1.0)], Comparator::Le, 4.0);
        lp.add_row("b", [(x, 1.0), (y, 3.0)], Comparator::Le, 6.0);
        assert_eq!(lp_vertex_oracle(&lp).unwrap(), Some(11.0));
    }

    #[test]
    fn infeasible_program_has_no_vertex() {
        let mut lp = LinearProgram::new();
        let x = lp.add_var("x", 0.0, 1.0, 1.0);
        lp.add_row("a", [(x, 1.0)], Comparator::Ge, 2.0);
        assert_eq!(lp_vertex_oracle(&lp).unwrap(), None);
    }

    #[test]
    fn equality_rows_stay_tight() {
        let mut lp = LinearProgram::new();
        let x = lp.add_var("x", 0.0, 5.0, 1.0);
        let y = lp.add_var("y", 0.0, 5.0, 1.0);
        lp.add_row("e", [(x, 1.0), (y, -1.0)], Comparator::Eq, 1.0);
        assert_eq!(lp_vertex_oracle(&lp).unwrap(), Some(9.0));
    }

    #[test]
    fn unbounded_variables_are_refused() {
        let mut lp = LinearProgram::new();
        lp.add_var("x", 0.0, f64::INFINITY, 1.0);
        assert!(lp_vertex_oracle(&lp).is_err());
    }
}
