//! Linear and mixed 0/1 programming.
//!
//! [`solve_lp`] runs a bounded primal simplex (composite phase one, Dantzig
//! pricing with a Bland fallback on long degenerate runs, Harris ratio test)
//! over an explicit basis inverse. [`solve_milp`] adds best-first
//! branch-and-bound on the declared binary variables.
//!
//! Every solver call is deterministic for a fixed input.

mod milp;
mod mps;
mod simplex;

use alloc::vec::Vec;

pub use milp::{solve_milp, solve_milp_with, MilpOptions};
pub use mps::to_mps;

/// Primal feasibility tolerance.
pub const FEASIBILITY_TOL: f64 = 1e-7;
/// Integrality tolerance for binary variables.
pub const INTEGRALITY_TOL: f64 = 1e-6;
/// Tolerance on primal/dual objective agreement.
pub const DUALITY_GAP_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub coeffs: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var(pub usize);

#[derive(Clone, Debug, PartialEq)]
pub struct LinearProgram {
    pub sense: Sense,
    pub objective: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub binary: Vec<bool>,
    pub rows: Vec<Row>,
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum LpError {
    #[error("variable {var}: lower bound {lower} exceeds upper bound {upper}")]
    InvertedBounds { var: usize, lower: f64, upper: f64 },
    #[error("binary variable {0} has bounds outside [0, 1]")]
    BinaryBounds(usize),
    #[error("row {row} references variable {var} of {num_vars}")]
    UnknownVariable { row: usize, var: usize, num_vars: usize },
    #[error("row {0} has a non-finite coefficient or right-hand side")]
    NonFinite(usize),
    #[error("solve_lp called on a program with binary variables")]
    HasBinaries,
    #[error("solve_milp called on a program without binary variables")]
    NoBinaries,
}

impl LinearProgram {
    pub fn new(sense: Sense) -> Self {
        LinearProgram {
            sense,
            objective: Vec::new(),
            lower: Vec::new(),
            upper: Vec::new(),
            binary: Vec::new(),
            rows: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn add_var(&mut self, cost: f64, lower: f64, upper: f64) -> Var {
        self.objective.push(cost);
        self.lower.push(lower);
        self.upper.push(upper);
        self.binary.push(false);
        Var(self.objective.len() - 1)
    }

    /// Unbounded variable.
    pub fn add_free(&mut self, cost: f64) -> Var {
        self.add_var(cost, f64::NEG_INFINITY, f64::INFINITY)
    }

    /// Variable in `[0, inf)`.
    pub fn add_nonneg(&mut self, cost: f64) -> Var {
        self.add_var(cost, 0.0, f64::INFINITY)
    }

    pub fn add_binary(&mut self, cost: f64) -> Var {
        let v = self.add_var(cost, 0.0, 1.0);
        self.binary[v.0] = true;
        v
    }

    pub fn add_row(&mut self, coeffs: Vec<(Var, f64)>, relation: Relation, rhs: f64) -> usize {
        self.rows.push(Row {
            coeffs: coeffs.into_iter().map(|(v, c)| (v.0, c)).collect(),
            relation,
            rhs,
        });
        self.rows.len() - 1
    }

    pub fn has_binaries(&self) -> bool {
        self.binary.iter().any(|&b| b)
    }

    /// Drops the integrality requirement on every variable.
    pub fn relaxation(&self) -> LinearProgram {
        let mut lp = self.clone();
        lp.binary.iter_mut().for_each(|b| *b = false);
        lp
    }

    pub fn validate(&self) -> Result<(), LpError> {
        let n = self.num_vars();
        for j in 0..n {
            if self.lower[j] > self.upper[j] {
                return Err(LpError::InvertedBounds {
                    var: j,
                    lower: self.lower[j],
                    upper: self.upper[j],
                });
            }
            if self.binary[j] && (self.lower[j] < 0.0 || self.upper[j] > 1.0) {
                return Err(LpError::BinaryBounds(j));
            }
        }
        for (i, row) in self.rows.iter().enumerate() {
            if !row.rhs.is_finite() {
                return Err(LpError::NonFinite(i));
            }
            for &(j, c) in &row.coeffs {
                if j >= n {
                    return Err(LpError::UnknownVariable {
                        row: i,
                        var: j,
                        num_vars: n,
                    });
                }
                if !c.is_finite() {
                    return Err(LpError::NonFinite(i));
                }
            }
        }
        Ok(())
    }

    /// Objective value of `x` in the program's own sense.
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Largest bound or row violation of `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for j in 0..self.num_vars() {
            worst = worst.max(self.lower[j] - x[j]).max(x[j] - self.upper[j]);
        }
        for row in &self.rows {
            let lhs: f64 = row.coeffs.iter().map(|&(j, c)| c * x[j]).sum();
            let v = match row.relation {
                Relation::Le => lhs - row.rhs,
                Relation::Ge => row.rhs - lhs,
                Relation::Eq => (lhs - row.rhs).abs(),
            };
            worst = worst.max(v);
        }
        worst
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Optimal,
    Infeasible,
    Unbounded,
    /// Iteration or node limit hit; for MILPs the incumbent (if any) is
    /// reported.
    IterationLimit,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MPSolution {
    pub status: Status,
    pub objective: f64,
    pub values: Vec<f64>,
    /// `d objective / d rhs` per row, in the program's own sense. Empty for
    /// MILPs.
    pub duals: Vec<f64>,
    /// Reduced costs of the structural variables, in the program's sense.
    pub reduced_costs: Vec<f64>,
    pub iterations: usize,
    pub nodes: usize,
    /// Best bound proven by branch-and-bound (equals `objective` when
    /// optimal).
    pub bound: f64,
}

impl MPSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == Status::Optimal
    }
}

/// Solves a continuous LP.
pub fn solve_lp(lp: &LinearProgram) -> Result<MPSolution, LpError> {
    lp.validate()?;
    if lp.has_binaries() {
        return Err(LpError::HasBinaries);
    }
    let mut engine = simplex::Simplex::new(lp);
    let status = engine.solve(simplex::default_iteration_limit(lp));
    Ok(engine.solution(lp, status))
}
