//! Bounded-variable linear programming with exact dual extraction.
//!
//! The solver is a dense two-phase primal simplex that treats variable
//! bounds natively (no extra rows for boxes). At an optimal point the
//! solution carries one dual value per constraint row and one reduced
//! cost per variable, under the convention that the dual of row `i` is
//! the derivative of the minimized objective with respect to `rhs_i`.

mod kkt;
mod simplex;

pub use kkt::{check_kkt, KktReport};
pub use simplex::solve;

use serde::{Deserialize, Serialize};

/// Constraint relation between the coefficient row and the right-hand side.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    Eq,
    Le,
    Ge,
}

/// One linear constraint: `sum(coeff * x) relation rhs`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Constraint {
    /// Sparse row as (variable index, coefficient) pairs.
    pub coeffs: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

/// A minimization LP over box-bounded variables.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct LpProblem {
    /// Infinite bounds serialize as None so JSON round-trips them.
    #[serde(with = "lower_bounds")]
    lower: Vec<f64>,
    #[serde(with = "upper_bounds")]
    upper: Vec<f64>,
    cost: Vec<f64>,
    constraints: Vec<Constraint>,
}

macro_rules! bound_serde {
    ($name:ident, $inf:expr) => {
        mod $name {
            use serde::{Deserialize, Deserializer, Serialize, Serializer};

            pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
                let opts: Vec<Option<f64>> =
                    v.iter().map(|&b| b.is_finite().then_some(b)).collect();
                opts.serialize(s)
            }

            pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
                let opts = Vec::<Option<f64>>::deserialize(d)?;
                Ok(opts.into_iter().map(|b| b.unwrap_or($inf)).collect())
            }
        }
    };
}

bound_serde!(lower_bounds, f64::NEG_INFINITY);
bound_serde!(upper_bounds, f64::INFINITY);

impl LpProblem {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a variable with bounds `[lower, upper]` (either may be
    /// infinite) and objective coefficient `cost`; returns its index.
    pub fn add_var(&mut self, lower: f64, upper: f64, cost: f64) -> usize {
        self.lower.push(lower);
        self.upper.push(upper);
        self.cost.push(cost);
        self.lower.len() - 1
    }

    pub fn add_constraint(
        &mut self,
        coeffs: Vec<(usize, f64)>,
        relation: Relation,
        rhs: f64,
    ) -> usize {
        self.constraints.push(Constraint {
            coeffs,
            relation,
            rhs,
        });
        self.constraints.len() - 1
    }

    pub fn num_vars(&self) -> usize {
        self.lower.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn bounds(&self, var: usize) -> (f64, f64) {
        (self.lower[var], self.upper[var])
    }

    pub fn cost(&self, var: usize) -> f64 {
        self.cost[var]
    }

    pub fn costs(&self) -> &[f64] {
        &self.cost
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    /// Objective value of an arbitrary point (not necessarily feasible).
    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.cost.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    pub fn validate(&self) -> Result<(), LpError> {
        for (j, (&lo, &hi)) in self.lower.iter().zip(&self.upper).enumerate() {
            if lo > hi {
                return Err(LpError::BadBounds { var: j, lo, hi });
            }
            if lo.is_nan() || hi.is_nan() {
                return Err(LpError::NonFinite(format!("bounds of variable {j}")));
            }
            if !self.cost[j].is_finite() {
                return Err(LpError::NonFinite(format!("cost of variable {j}")));
            }
        }
        for (i, con) in self.constraints.iter().enumerate() {
            if !con.rhs.is_finite() {
                return Err(LpError::NonFinite(format!("rhs of constraint {i}")));
            }
            for &(j, a) in &con.coeffs {
                if j >= self.num_vars() {
                    return Err(LpError::BadIndex {
                        constraint: i,
                        var: j,
                    });
                }
                if !a.is_finite() {
                    return Err(LpError::NonFinite(format!(
                        "coefficient of variable {j} in constraint {i}"
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

/// Solver output. `duals` and `reduced_costs` are populated only at
/// `Optimal`; at `Infeasible` the primal point is the phase-1 optimum and
/// `infeasibility` carries the residual that could not be driven to zero.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LpSolution {
    pub status: LpStatus,
    pub primal: Vec<f64>,
    pub objective: f64,
    pub duals: Vec<f64>,
    pub reduced_costs: Vec<f64>,
    pub iterations: usize,
    pub infeasibility: f64,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SolverOptions {
    pub tol_feas: f64,
    pub tol_opt: f64,
    pub max_iterations: usize,
    /// Rebuild the basis inverse from scratch every this many pivots.
    pub refactor_interval: usize,
    /// Switch to Bland's rule after this many consecutive degenerate pivots.
    pub bland_threshold: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol_feas: 1e-9,
            tol_opt: 1e-9,
            max_iterations: 10_000,
            refactor_interval: 64,
            bland_threshold: 50,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum LpError {
    #[error("variable {var}: lower bound {lo} exceeds upper bound {hi}")]
    BadBounds { var: usize, lo: f64, hi: f64 },
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("constraint {constraint} references unknown variable {var}")]
    BadIndex { constraint: usize, var: usize },
    #[error("numerical failure: {0}")]
    Numerical(String),
}
