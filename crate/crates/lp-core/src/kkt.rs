//! Independent optimality certification for a primal/dual pair.
//!
//! Everything here is recomputed from the problem data and the candidate
//! solution; nothing is read from solver internals, so a passing report
//! certifies the solver output rather than restating it.

use crate::{LpProblem, LpSolution, Relation};

#[derive(Clone, Copy, Debug)]
pub struct KktReport {
    pub max_primal_violation: f64,
    pub max_dual_violation: f64,
    pub max_complementarity_violation: f64,
    /// |c'x - dual objective| / (1 + |c'x|).
    pub duality_gap: f64,
}

impl KktReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.max_primal_violation <= tol
            && self.max_dual_violation <= tol
            && self.max_complementarity_violation <= tol
            && self.duality_gap <= tol
    }

    pub fn worst(&self) -> f64 {
        self.max_primal_violation
            .max(self.max_dual_violation)
            .max(self.max_complementarity_violation)
            .max(self.duality_gap)
    }
}

/// Checks primal feasibility, dual feasibility, complementary slackness,
/// and strong duality for an allegedly optimal solution. `tol` only
/// classifies whether a variable sits strictly inside its bounds.
pub fn check_kkt(problem: &LpProblem, solution: &LpSolution, tol: f64) -> KktReport {
    let x = &solution.primal;
    let y = &solution.duals;
    let n = problem.num_vars();

    let mut primal: f64 = 0.0;
    let mut dual: f64 = 0.0;
    let mut comp: f64 = 0.0;

    for j in 0..n {
        let (lo, hi) = problem.bounds(j);
        primal = primal.max(lo - x[j]).max(x[j] - hi);
    }

    for (i, con) in problem.constraints().iter().enumerate() {
        let act: f64 = con.coeffs.iter().map(|&(j, a)| a * x[j]).sum();
        match con.relation {
            Relation::Eq => primal = primal.max((act - con.rhs).abs()),
            Relation::Le => {
                primal = primal.max(act - con.rhs);
                // At a minimum, relaxing a <= row cannot raise the objective.
                dual = dual.max(y[i]);
                comp = comp.max((y[i] * (con.rhs - act)).abs());
            }
            Relation::Ge => {
                primal = primal.max(con.rhs - act);
                dual = dual.max(-y[i]);
                comp = comp.max((y[i] * (act - con.rhs)).abs());
            }
        }
    }

    // Reduced costs recomputed from scratch: d_j = c_j - y'A_j.
    let mut dual_obj: f64 = problem
        .constraints()
        .iter()
        .enumerate()
        .map(|(i, c)| y[i] * c.rhs)
        .sum();
    for j in 0..n {
        let mut d = problem.cost(j);
        for (i, con) in problem.constraints().iter().enumerate() {
            for &(jj, a) in &con.coeffs {
                if jj == j {
                    d -= y[i] * a;
                }
            }
        }
        let (lo, hi) = problem.bounds(j);
        if d > 0.0 {
            if lo.is_finite() {
                dual_obj += d * lo;
                comp = comp.max((d * (x[j] - lo)).abs().min(d.abs()));
            } else {
                dual = dual.max(d);
            }
        } else if d < 0.0 {
            if hi.is_finite() {
                dual_obj += d * hi;
                comp = comp.max((d * (hi - x[j])).abs().min(d.abs()));
            } else {
                dual = dual.max(-d);
            }
        }
        // Strictly interior variables must have zero reduced cost.
        if x[j] > lo + tol && x[j] < hi - tol {
            comp = comp.max(d.abs());
        }
    }

    let primal_obj = problem.objective_value(x);
    let gap = (primal_obj - dual_obj).abs() / (1.0 + primal_obj.abs());

    KktReport {
        max_primal_violation: primal,
        max_dual_violation: dual,
        max_complementarity_violation: comp,
        duality_gap: gap,
    }
}
