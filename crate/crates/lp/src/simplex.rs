//! Dense bounded-variable primal simplex.
//!
//! The program is equilibrated (rows, then columns), every variable is
//! shifted to a zero lower bound, and each inequality row gets a logical
//! column. Rows whose logical cannot start basic get an implicit artificial
//! that is never stored as a column: once it leaves the basis it can never
//! come back, so its column is never needed.
//!
//! Pricing is Dantzig's largest reduced cost. After a run of degenerate
//! pivots the solver switches to Bland's rule until the objective moves
//! again, which rules out cycling. The ratio test is the two-pass Harris
//! test. The tableau is rebuilt from the original rows whenever drift shows
//! up and once more at the end, and the final point is checked against the
//! unscaled program.

use crate::error::LpError;
use crate::problem::{Comparator, LinearProgram};
use crate::{FEASIBILITY_TOL, PIVOT_TOL};

const ARTIFICIAL: usize = usize::MAX;
const NONBASIC: usize = usize::MAX;
/// Internal primal tolerance on the scaled program.
const PRIMAL_TOL: f64 = 1e-9;
/// Reduced-cost tolerance on the scaled objective.
const DUAL_TOL: f64 = 1e-9;
const DROP_TOL: f64 = 1e-13;
/// Results this small relative to the operands they came from are treated
/// as exact cancellation.
const CANCEL_TOL: f64 = 1e-11;
const DEGENERATE_STREAK_FOR_BLAND: usize = 50;
/// Iterations between drift checks.
const DRIFT_CHECK_EVERY: usize = 100;
const MAX_REBUILDS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Objective value; NaN unless optimal.
    pub objective: f64,
    /// One value per program variable; empty unless optimal.
    pub values: Vec<f64>,
    pub iterations: usize,
}

#[derive(Debug, Clone, Default)]
pub struct SolverOptions {
    /// Defaults to `20 · (rows + columns) + 10_000`.
    pub max_iterations: Option<usize>,
    /// Use Bland's rule for every pivot instead of only after degeneracy.
    pub bland_only: bool,
}

pub fn solve_lp(lp: &LinearProgram) -> Result<LpSolution, LpError> {
    solve_lp_with(lp, &SolverOptions::default())
}

pub fn solve_lp_with(lp: &LinearProgram, opts: &SolverOptions) -> Result<LpSolution, LpError> {
    lp.validate()?;
    let mut tab = Tableau::build(lp, opts.bland_only);
    let limit = opts
        .max_iterations
        .unwrap_or(20 * (tab.m + tab.ncols) + 10_000);

    tab.init_phase1();
    let outcome = tab.run(limit)?;
    debug_assert_eq!(outcome, Outcome::Optimal, "phase 1 is bounded");
    if tab.artificial_infeasibility() > PRIMAL_TOL * (1.0 + tab.rhs_norm) {
        return Ok(LpSolution {
            status: LpStatus::Infeasible,
            objective: f64::NAN,
            values: Vec::new(),
            iterations: tab.iterations,
        });
    }

    tab.init_phase2();
    if tab.run(limit)? == Outcome::Unbounded {
        return Ok(LpSolution {
            status: LpStatus::Unbounded,
            objective: f64::NAN,
            values: Vec::new(),
            iterations: tab.iterations,
        });
    }

    let mut values = tab.structural_values();
    let residual = lp.max_violation(&values);
    if residual > FEASIBILITY_TOL {
        return Err(LpError::Numerical { residual });
    }
    for (x, v) in values.iter_mut().zip(lp.vars()) {
        *x = x.clamp(v.lower, v.upper);
    }
    Ok(LpSolution {
        status: LpStatus::Optimal,
        objective: lp.objective_value(&values),
        values,
        iterations: tab.iterations,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Outcome {
    Optimal,
    Unbounded,
}

struct Tableau {
    m: usize,
    n_struct: usize,
    /// Structural plus logical columns.
    ncols: usize,
    /// Row-major `m × ncols`, always equal to `B⁻¹ A`.
    t: Vec<f64>,
    /// Values of the basic variables.
    beta: Vec<f64>,
    basis: Vec<usize>,
    basic_row: Vec<usize>,
    /// Upper bound of each column after shifting to a zero lower bound.
    upper: Vec<f64>,
    at_upper: Vec<bool>,
    /// Reduced costs of the current phase (maximization).
    d: Vec<f64>,
    /// Phase-2 objective, scaled.
    cost: Vec<f64>,
    artificial_upper: f64,

    // Data needed to map back and to refactor.
    col_scale: Vec<f64>,
    shifted_lower: Vec<f64>,
    /// Normalized rows before any pivot: (column, coefficient).
    rows0: Vec<Vec<(usize, f64)>>,
    rhs0: Vec<f64>,
    rhs_norm: f64,

    iterations: usize,
    degenerate_streak: usize,
    bland_only: bool,
    pivot_buf: Vec<(usize, f64)>,
}

impl Tableau {
    fn build(lp: &LinearProgram, bland_only: bool) -> Self {
        let m = lp.num_rows();
        let n = lp.num_vars();

        let row_scale: Vec<f64> = lp
            .rows()
            .iter()
            .map(|r| {
                let big = r.coeffs.iter().fold(0.0_f64, |acc, &(_, a)| acc.max(a.abs()));
                if big > 0.0 {
                    1.0 / big
                } else {
                    1.0
                }
            })
            .collect();
        let mut col_big = vec![0.0_f64; n];
        for (r, rs) in lp.rows().iter().zip(&row_scale) {
            for &(v, a) in &r.coeffs {
                col_big[v.0] = col_big[v.0].max((a * rs).abs());
            }
        }
        let col_scale: Vec<f64> = col_big
            .iter()
            .map(|&b| if b > 0.0 { 1.0 / b } else { 1.0 })
            .collect();

        let shifted_lower: Vec<f64> = lp
            .vars()
            .iter()
            .zip(&col_scale)
            .map(|(v, s)| v.lower / s)
            .collect();

        let n_logical = lp.rows().iter().filter(|r| r.cmp != Comparator::Eq).count();
        let ncols = n + n_logical;
        let mut upper = Vec::with_capacity(ncols);
        for (v, s) in lp.vars().iter().zip(&col_scale) {
            upper.push(if v.upper.is_finite() {
                (v.upper / s - v.lower / s).max(0.0)
            } else {
                f64::INFINITY
            });
        }
        upper.resize(ncols, f64::INFINITY);

        // Objective scaled so the median nonzero cost is 1.
        let mut magnitudes: Vec<f64> = lp
            .vars()
            .iter()
            .zip(&col_scale)
            .map(|(v, s)| (v.objective * s).abs())
            .filter(|&c| c > 0.0)
            .collect();
        magnitudes.sort_by(f64::total_cmp);
        let cnorm = magnitudes.get(magnitudes.len() / 2).map_or(1.0, |&c| 1.0 / c);
        let mut cost: Vec<f64> = lp
            .vars()
            .iter()
            .zip(&col_scale)
            .map(|(v, s)| v.objective * s * cnorm)
            .collect();
        cost.resize(ncols, 0.0);

        let mut rows0 = Vec::with_capacity(m);
        let mut rhs0 = Vec::with_capacity(m);
        let mut logical = n;
        for (r, rs) in lp.rows().iter().zip(&row_scale) {
            let mut coeffs: Vec<(usize, f64)> = r
                .coeffs
                .iter()
                .map(|&(v, a)| (v.0, a * rs * col_scale[v.0]))
                .collect();
            let mut b = r.rhs * rs;
            for &(j, a) in &coeffs {
                b -= a * shifted_lower[j];
            }
            match r.cmp {
                Comparator::Le => {
                    coeffs.push((logical, 1.0));
                    logical += 1;
                }
                Comparator::Ge => {
                    coeffs.push((logical, -1.0));
                    logical += 1;
                }
                Comparator::Eq => {}
            }
            if b < 0.0 {
                b = -b;
                for c in coeffs.iter_mut() {
                    c.1 = -c.1;
                }
            }
            rows0.push(coeffs);
            rhs0.push(b);
        }
        let rhs_norm = rhs0.iter().fold(0.0_f64, |acc, b| acc.max(b.abs()));

        let mut t = vec![0.0; m * ncols];
        for (i, row) in rows0.iter().enumerate() {
            for &(j, a) in row {
                t[i * ncols + j] = a;
            }
        }

        Tableau {
            m,
            n_struct: n,
            ncols,
            t,
            beta: rhs0.clone(),
            basis: vec![ARTIFICIAL; m],
            basic_row: vec![NONBASIC; ncols],
            upper,
            at_upper: vec![false; ncols],
            d: vec![0.0; ncols],
            cost,
            artificial_upper: f64::INFINITY,
            col_scale,
            shifted_lower,
            rows0,
            rhs0,
            rhs_norm,
            iterations: 0,
            degenerate_streak: 0,
            bland_only,
            pivot_buf: Vec::new(),
        }
    }

    /// Chooses the starting basis: logicals with a +1 coefficient, then
    /// column singletons for the remaining rows, then artificials.
    fn init_phase1(&mut self) {
        let mut col_count = vec![0usize; self.ncols];
        for row in &self.rows0 {
            for &(j, _) in row {
                col_count[j] += 1;
            }
        }
        for i in 0..self.m {
            let logical = self.rows0[i]
                .iter()
                .find(|&&(j, a)| j >= self.n_struct && a == 1.0)
                .map(|&(j, _)| j);
            if let Some(j) = logical {
                self.set_basic(i, j);
                continue;
            }
            let b = self.rhs0[i];
            let singleton = self.rows0[i]
                .iter()
                .filter(|&&(j, a)| {
                    j < self.n_struct
                        && col_count[j] == 1
                        && self.basic_row[j] == NONBASIC
                        && a > 0.0
                        && b / a <= self.upper[j]
                })
                .max_by(|x, y| x.1.total_cmp(&y.1))
                .copied();
            if let Some((j, a)) = singleton {
                let row = &mut self.t[i * self.ncols..(i + 1) * self.ncols];
                for v in row.iter_mut() {
                    *v /= a;
                }
                row[j] = 1.0;
                self.beta[i] = b / a;
                self.set_basic(i, j);
            }
        }

        // Phase-1 objective: maximize minus the sum of artificials.
        self.d.iter_mut().for_each(|d| *d = 0.0);
        for i in 0..self.m {
            if self.basis[i] == ARTIFICIAL {
                let row = &self.t[i * self.ncols..(i + 1) * self.ncols];
                for (d, &v) in self.d.iter_mut().zip(row) {
                    *d += v;
                }
            }
        }
        for j in 0..self.ncols {
            if self.basic_row[j] != NONBASIC {
                self.d[j] = 0.0;
            }
        }
        self.artificial_upper = f64::INFINITY;
    }

    fn set_basic(&mut self, row: usize, col: usize) {
        self.basis[row] = col;
        self.basic_row[col] = row;
    }

    fn artificial_infeasibility(&self) -> f64 {
        (0..self.m)
            .filter(|&i| self.basis[i] == ARTIFICIAL)
            .map(|i| self.beta[i].max(0.0))
            .sum()
    }

    fn init_phase2(&mut self) {
        self.artificial_upper = 0.0;
        for i in 0..self.m {
            if self.basis[i] == ARTIFICIAL {
                self.beta[i] = 0.0;
            }
        }
        self.d.copy_from_slice(&self.cost);
        for i in 0..self.m {
            let b = self.basis[i];
            if b == ARTIFICIAL {
                continue;
            }
            let cb = self.cost[b];
            if cb == 0.0 {
                continue;
            }
            let row = &self.t[i * self.ncols..(i + 1) * self.ncols];
            for (d, &v) in self.d.iter_mut().zip(row) {
                *d -= cb * v;
            }
        }
        for j in 0..self.ncols {
            if self.basic_row[j] != NONBASIC {
                self.d[j] = 0.0;
            }
        }
        self.degenerate_streak = 0;
    }

    fn basic_upper(&self, row: usize) -> f64 {
        match self.basis[row] {
            ARTIFICIAL => self.artificial_upper,
            j => self.upper[j],
        }
    }

    fn use_bland(&self) -> bool {
        self.bland_only || self.degenerate_streak >= DEGENERATE_STREAK_FOR_BLAND
    }

    fn choose_entering(&self) -> Option<usize> {
        let bland = self.use_bland();
        let mut best: Option<(usize, f64)> = None;
        for j in 0..self.ncols {
            if self.basic_row[j] != NONBASIC || self.upper[j] == 0.0 {
                continue;
            }
            let dj = self.d[j];
            let gain = if self.at_upper[j] { -dj } else { dj };
            if gain <= DUAL_TOL {
                continue;
            }
            if bland {
                return Some(j);
            }
            if best.is_none_or(|(_, g)| gain > g) {
                best = Some((j, gain));
            }
        }
        best.map(|(j, _)| j)
    }

    /// Harris two-pass ratio test. Returns the leaving row and step length.
    fn choose_leaving(&self, col: usize, dir: f64) -> Option<(usize, f64)> {
        let nc = self.ncols;
        let mut relaxed = f64::INFINITY;
        for i in 0..self.m {
            let a = self.t[i * nc + col];
            if a.abs() <= PIVOT_TOL {
                continue;
            }
            let delta = -dir * a;
            let room = if delta < 0.0 {
                (self.beta[i] + PRIMAL_TOL) / -delta
            } else {
                let ub = self.basic_upper(i);
                if ub.is_infinite() {
                    continue;
                }
                (ub - self.beta[i] + PRIMAL_TOL) / delta
            };
            // A basic value already outside its bounds by more than the
            // tolerance blocks at zero rather than at a negative step.
            relaxed = relaxed.min(room.max(0.0));
        }
        if relaxed.is_infinite() {
            return None;
        }

        let bland = self.use_bland();
        let mut best: Option<(usize, f64, f64)> = None;
        for i in 0..self.m {
            let a = self.t[i * nc + col];
            if a.abs() <= PIVOT_TOL {
                continue;
            }
            let delta = -dir * a;
            let ratio = if delta < 0.0 {
                self.beta[i].max(0.0) / -delta
            } else {
                let ub = self.basic_upper(i);
                if ub.is_infinite() {
                    continue;
                }
                (ub - self.beta[i]).max(0.0) / delta
            };
            if ratio > relaxed {
                continue;
            }
            let better = match best {
                None => true,
                Some((bi, br, ba)) => {
                    if bland {
                        ratio < br - 1e-12
                            || (ratio <= br + 1e-12 && bland_key(self.basis[i]) < bland_key(self.basis[bi]))
                    } else {
                        a.abs() > ba
                    }
                }
            };
            if better {
                best = Some((i, ratio, a.abs()));
            }
        }
        best.map(|(i, r, _)| (i, r))
    }

    fn iterate(&mut self, limit: usize) -> Result<Outcome, LpError> {
        loop {
            if self.iterations > 0
                && self.iterations.is_multiple_of(DRIFT_CHECK_EVERY)
                && (self.drift() > PRIMAL_TOL * (1.0 + self.rhs_norm)
                    || self.primal_infeasibility() > FEASIBILITY_TOL)
                && !self.reinvert()
            {
                return Err(LpError::Numerical {
                    residual: self.drift(),
                });
            }
            let Some(col) = self.choose_entering() else {
                return Ok(Outcome::Optimal);
            };
            if self.iterations >= limit {
                return Err(LpError::IterationLimit { limit });
            }
            self.iterations += 1;

            let dir = if self.at_upper[col] { -1.0 } else { 1.0 };
            let leaving = self.choose_leaving(col, dir);
            let flip = self.upper[col];
            let (step, pivot_row) = match leaving {
                Some((r, ratio)) if ratio < flip => (ratio, Some(r)),
                _ if flip.is_finite() => (flip, None),
                _ => return Ok(Outcome::Unbounded),
            };

            if step <= 1e-12 {
                self.degenerate_streak += 1;
            } else {
                self.degenerate_streak = 0;
            }

            let nc = self.ncols;
            if step != 0.0 {
                for i in 0..self.m {
                    let a = self.t[i * nc + col];
                    if a != 0.0 {
                        self.beta[i] -= dir * a * step;
                    }
                }
            }

            match pivot_row {
                None => self.at_upper[col] = !self.at_upper[col],
                Some(r) => {
                    let hit_upper = -dir * self.t[r * nc + col] > 0.0;
                    let entering_value = if dir > 0.0 { step } else { self.upper[col] - step };
                    let leaving = self.basis[r];
                    if leaving != ARTIFICIAL {
                        self.basic_row[leaving] = NONBASIC;
                        self.at_upper[leaving] = hit_upper;
                    }
                    self.at_upper[col] = false;
                    self.pivot(r, col);
                    self.set_basic(r, col);
                    self.beta[r] = entering_value;
                }
            }
        }
    }

    fn pivot(&mut self, r: usize, col: usize) {
        let nc = self.ncols;
        let inv = 1.0 / self.t[r * nc + col];
        self.pivot_buf.clear();
        {
            let row = &mut self.t[r * nc..(r + 1) * nc];
            for (k, v) in row.iter_mut().enumerate() {
                if *v != 0.0 {
                    *v *= inv;
                    if v.abs() < DROP_TOL {
                        *v = 0.0;
                    } else {
                        self.pivot_buf.push((k, *v));
                    }
                }
            }
            row[col] = 1.0;
        }
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.t[i * nc + col];
            if f == 0.0 {
                continue;
            }
            let row = &mut self.t[i * nc..(i + 1) * nc];
            for &(k, v) in &self.pivot_buf {
                let old = row[k];
                let x = old - f * v;
                row[k] = if x.abs() < DROP_TOL || x.abs() <= CANCEL_TOL * old.abs() {
                    0.0
                } else {
                    x
                };
            }
            row[col] = 0.0;
        }
        let f = self.d[col];
        if f != 0.0 {
            for &(k, v) in &self.pivot_buf {
                self.d[k] -= f * v;
            }
        }
        self.d[col] = 0.0;
    }

    fn column_value(&self, j: usize) -> f64 {
        match self.basic_row[j] {
            NONBASIC => {
                if self.at_upper[j] {
                    self.upper[j]
                } else {
                    0.0
                }
            }
            i => self.beta[i],
        }
    }

    fn structural_values(&self) -> Vec<f64> {
        (0..self.n_struct)
            .map(|j| (self.column_value(j) + self.shifted_lower[j]) * self.col_scale[j])
            .collect()
    }

    /// Iterates to optimality, rebuilding the tableau from the original rows
    /// whenever accumulated rounding shows up, and once more at the end so
    /// the reported point is checked against a clean factorization.
    fn run(&mut self, limit: usize) -> Result<Outcome, LpError> {
        for _ in 0..MAX_REBUILDS {
            let outcome = self.iterate(limit)?;
            if !self.reinvert() {
                return Err(LpError::Numerical {
                    residual: self.drift(),
                });
            }
            if self.primal_infeasibility() > FEASIBILITY_TOL {
                return Err(LpError::Numerical {
                    residual: self.primal_infeasibility(),
                });
            }
            // A clean tableau can reveal an improving column or a blocking
            // row the drifted one missed.
            if self.choose_entering().is_none() {
                return Ok(outcome);
            }
        }
        self.iterate(limit)
    }

    /// Largest gap between the original rows and the current point.
    fn drift(&self) -> f64 {
        let mut worst = 0.0_f64;
        for (i, row) in self.rows0.iter().enumerate() {
            let mut lhs = if self.basis[i] == ARTIFICIAL { self.beta[i] } else { 0.0 };
            for &(j, a) in row {
                lhs += a * self.column_value(j);
            }
            worst = worst.max((lhs - self.rhs0[i]).abs());
        }
        worst
    }

    /// How far any basic value lies outside its bounds.
    fn primal_infeasibility(&self) -> f64 {
        (0..self.m)
            .map(|i| {
                let b = self.beta[i];
                (-b).max(b - self.basic_upper(i)).max(0.0)
            })
            .fold(0.0, f64::max)
    }

    /// Rebuilds `B⁻¹ A`, the basic values and the reduced costs of the
    /// current basis from the original rows by Gauss-Jordan elimination with
    /// partial pivoting. Rows still held by an artificial keep it. Returns
    /// false if the basis has become numerically singular.
    fn reinvert(&mut self) -> bool {
        let m = self.m;
        let nc = self.ncols;
        let mut t = vec![0.0; m * nc];
        for (i, row) in self.rows0.iter().enumerate() {
            for &(j, a) in row {
                t[i * nc + j] = a;
            }
        }
        let mut rhs = self.rhs0.clone();

        let mut new_basis = vec![NONBASIC; m];
        let mut taken = vec![false; m];
        for i in 0..m {
            if self.basis[i] == ARTIFICIAL {
                new_basis[i] = ARTIFICIAL;
                taken[i] = true;
            }
        }
        let mut cols: Vec<usize> = self.basis.iter().copied().filter(|&j| j != ARTIFICIAL).collect();
        cols.sort_unstable();

        let mut buf: Vec<(usize, f64)> = Vec::new();
        for &col in &cols {
            let Some((r, big)) = (0..m)
                .filter(|&i| !taken[i])
                .map(|i| (i, t[i * nc + col].abs()))
                .max_by(|x, y| x.1.total_cmp(&y.1))
            else {
                return false;
            };
            if big <= PIVOT_TOL {
                return false;
            }
            taken[r] = true;
            new_basis[r] = col;

            let inv = 1.0 / t[r * nc + col];
            buf.clear();
            for k in 0..nc {
                let v = &mut t[r * nc + k];
                if *v != 0.0 {
                    *v *= inv;
                    if v.abs() < DROP_TOL {
                        *v = 0.0;
                    } else {
                        buf.push((k, *v));
                    }
                }
            }
            t[r * nc + col] = 1.0;
            rhs[r] *= inv;
            let br = rhs[r];
            for i in 0..m {
                if i == r {
                    continue;
                }
                let f = t[i * nc + col];
                if f == 0.0 {
                    continue;
                }
                let row = &mut t[i * nc..(i + 1) * nc];
                for &(k, v) in &buf {
                    let old = row[k];
                    let x = old - f * v;
                    row[k] = if x.abs() < DROP_TOL || x.abs() <= CANCEL_TOL * old.abs() {
                        0.0
                    } else {
                        x
                    };
                }
                row[col] = 0.0;
                rhs[i] -= f * br;
            }
        }

        self.t = t;
        self.basic_row.iter_mut().for_each(|r| *r = NONBASIC);
        for (i, &j) in new_basis.iter().enumerate() {
            self.basis[i] = j;
            if j != ARTIFICIAL {
                self.basic_row[j] = i;
                self.at_upper[j] = false;
            }
        }
        for j in 0..nc {
            if self.basic_row[j] == NONBASIC && self.at_upper[j] {
                let u = self.upper[j];
                for i in 0..m {
                    let a = self.t[i * nc + j];
                    if a != 0.0 {
                        rhs[i] -= a * u;
                    }
                }
            }
        }
        self.beta = rhs;

        let phase1 = self.artificial_upper.is_infinite();
        if phase1 {
            self.d.iter_mut().for_each(|d| *d = 0.0);
            for i in 0..m {
                if self.basis[i] == ARTIFICIAL {
                    let row = &self.t[i * nc..(i + 1) * nc];
                    for (d, &v) in self.d.iter_mut().zip(row) {
                        *d += v;
                    }
                }
            }
        } else {
            self.d.copy_from_slice(&self.cost);
            for i in 0..m {
                let b = self.basis[i];
                if b == ARTIFICIAL || self.cost[b] == 0.0 {
                    continue;
                }
                let cb = self.cost[b];
                let row = &self.t[i * nc..(i + 1) * nc];
                for (d, &v) in self.d.iter_mut().zip(row) {
                    *d -= cb * v;
                }
            }
        }
        for j in 0..nc {
            if self.basic_row[j] != NONBASIC {
                self.d[j] = 0.0;
            }
        }
        true
    }
}

fn bland_key(col: usize) -> usize {
    // Artificials leave first.
    if col == ARTIFICIAL {
        0
    } else {
        col + 1
    }
}
