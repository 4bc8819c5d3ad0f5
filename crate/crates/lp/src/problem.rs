//! Linear program representation.
//!
//! Programs are always maximization problems over variables with a finite
//! lower bound and an optional upper bound. Rows are sparse.

use std::fmt;
use std::io::{self, Write};

use crate::error::LpError;

/// Index of a variable inside a [`LinearProgram`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub usize);

/// Index of a constraint row inside a [`LinearProgram`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RowId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Comparator {
    Le,
    Ge,
    Eq,
}

impl fmt::Display for Comparator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Comparator::Le => "<=",
            Comparator::Ge => ">=",
            Comparator::Eq => "=",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub lower: f64,
    /// `f64::INFINITY` when unbounded above.
    pub upper: f64,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub name: String,
    /// Sorted by variable, no duplicates.
    pub coeffs: Vec<(VarId, f64)>,
    pub cmp: Comparator,
    pub rhs: f64,
}

impl Constraint {
    pub fn activity(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(v, a)| a * x[v.0]).sum()
    }

    /// Amount by which `x` violates this row (zero when satisfied).
    pub fn violation(&self, x: &[f64]) -> f64 {
        let lhs = self.activity(x);
        match self.cmp {
            Comparator::Le => (lhs - self.rhs).max(0.0),
            Comparator::Ge => (self.rhs - lhs).max(0.0),
            Comparator::Eq => (lhs - self.rhs).abs(),
        }
    }
}

/// A maximization problem `max c·x  s.t.  rows, lower ≤ x ≤ upper`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinearProgram {
    vars: Vec<Variable>,
    rows: Vec<Constraint>,
}

impl LinearProgram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_var(
        &mut self,
        name: impl Into<String>,
        lower: f64,
        upper: f64,
        objective: f64,
    ) -> VarId {
        self.vars.push(Variable {
            name: name.into(),
            lower,
            upper,
            objective,
        });
        VarId(self.vars.len() - 1)
    }

    /// Adds a row. Repeated variables are summed and exact zeros dropped.
    pub fn add_row<I>(&mut self, name: impl Into<String>, coeffs: I, cmp: Comparator, rhs: f64) -> RowId
    where
        I: IntoIterator<Item = (VarId, f64)>,
    {
        let mut coeffs: Vec<(VarId, f64)> = coeffs.into_iter().collect();
        coeffs.sort_by_key(|&(v, _)| v);
        let mut merged: Vec<(VarId, f64)> = Vec::with_capacity(coeffs.len());
        for (v, a) in coeffs {
            match merged.last_mut() {
                Some((last, acc)) if *last == v => *acc += a,
                _ => merged.push((v, a)),
            }
        }
        merged.retain(|&(_, a)| a != 0.0);
        self.rows.push(Constraint {
            name: name.into(),
            coeffs: merged,
            cmp,
            rhs,
        });
        RowId(self.rows.len() - 1)
    }

    pub fn set_objective(&mut self, var: VarId, coeff: f64) {
        self.vars[var.0].objective = coeff;
    }

    pub fn set_bounds(&mut self, var: VarId, lower: f64, upper: f64) {
        let v = &mut self.vars[var.0];
        v.lower = lower;
        v.upper = upper;
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn vars(&self) -> &[Variable] {
        &self.vars
    }

    pub fn rows(&self) -> &[Constraint] {
        &self.rows
    }

    pub fn var(&self, id: VarId) -> &Variable {
        &self.vars[id.0]
    }

    pub fn row(&self, id: RowId) -> &Constraint {
        &self.rows[id.0]
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.vars.iter().zip(x).map(|(v, &xi)| v.objective * xi).sum()
    }

    /// Largest row or bound violation of `x`, in absolute terms.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let bounds = self
            .vars
            .iter()
            .zip(x)
            .map(|(v, &xi)| (v.lower - xi).max(xi - v.upper).max(0.0))
            .fold(0.0, f64::max);
        self.rows
            .iter()
            .map(|r| r.violation(x))
            .fold(bounds, f64::max)
    }

    pub fn validate(&self) -> Result<(), LpError> {
        for v in &self.vars {
            if !v.lower.is_finite() {
                return Err(LpError::InvalidProgram(format!(
                    "variable {} needs a finite lower bound",
                    v.name
                )));
            }
            if v.upper.is_nan() || v.upper == f64::NEG_INFINITY || v.upper < v.lower {
                return Err(LpError::InvalidProgram(format!(
                    "variable {} has bounds [{}, {}]",
                    v.name, v.lower, v.upper
                )));
            }
            if !v.objective.is_finite() {
                return Err(LpError::InvalidProgram(format!(
                    "variable {} has non-finite objective coefficient",
                    v.name
                )));
            }
        }
        for r in &self.rows {
            if !r.rhs.is_finite() {
                return Err(LpError::InvalidProgram(format!(
                    "row {} has non-finite right-hand side",
                    r.name
                )));
            }
            for &(v, a) in &r.coeffs {
                if v.0 >= self.vars.len() {
                    return Err(LpError::InvalidProgram(format!(
                        "row {} references undeclared variable {}",
                        r.name, v.0
                    )));
                }
                if !a.is_finite() {
                    return Err(LpError::InvalidProgram(format!(
                        "row {} has non-finite coefficient on {}",
                        r.name, self.vars[v.0].name
                    )));
                }
            }
        }
        Ok(())
    }

    /// Writes the program in fixed-column MPS format for cross-checking with
    /// external solvers, with columns named `C<n>` and rows `R<n>`.
    pub fn write_mps<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "NAME          UPMR")?;
        writeln!(w, "OBJSENSE")?;
        writeln!(w, "    MAX")?;
        writeln!(w, "ROWS")?;
        writeln!(w, " N  OBJ")?;
        for (i, r) in self.rows.iter().enumerate() {
            let kind = match r.cmp {
                Comparator::Le => 'L',
                Comparator::Ge => 'G',
                Comparator::Eq => 'E',
            };
            writeln!(w, " {kind}  R{i}")?;
        }

        let mut columns: Vec<Vec<(usize, f64)>> = vec![Vec::new(); self.vars.len()];
        for (i, r) in self.rows.iter().enumerate() {
            for &(v, a) in &r.coeffs {
                columns[v.0].push((i, a));
            }
        }
        writeln!(w, "COLUMNS")?;
        for (j, v) in self.vars.iter().enumerate() {
            let col = format!("C{j}");
            if v.objective != 0.0 {
                writeln!(w, "    {:<8}  {:<8}  {:>12}", col, "OBJ", fmt_num(v.objective))?;
            }
            for &(i, a) in &columns[j] {
                writeln!(w, "    {:<8}  {:<8}  {:>12}", col, format!("R{i}"), fmt_num(a))?;
            }
        }
        writeln!(w, "RHS")?;
        for (i, r) in self.rows.iter().enumerate() {
            if r.rhs != 0.0 {
                writeln!(w, "    {:<8}  {:<8}  {:>12}", "RHS", format!("R{i}"), fmt_num(r.rhs))?;
            }
        }
        writeln!(w, "BOUNDS")?;
        for (j, v) in self.vars.iter().enumerate() {
            let col = format!("C{j}");
            if v.lower == v.upper {
                writeln!(w, " FX {:<8}  {:<8}  {:>12}", "BND", col, fmt_num(v.lower))?;
                continue;
            }
            if v.lower != 0.0 {
                writeln!(w, " LO {:<8}  {:<8}  {:>12}", "BND", col, fmt_num(v.lower))?;
            }
            if v.upper.is_finite() {
                writeln!(w, " UP {:<8}  {:<8}  {:>12}", "BND", col, fmt_num(v.upper))?;
            }
        }
        writeln!(w, "ENDATA")
    }
}

fn fmt_num(x: f64) -> String {
    let s = format!("{x}");
    if s.len() <= 12 {
        s
    } else {
        format!("{x:.6e}")
    }
}
