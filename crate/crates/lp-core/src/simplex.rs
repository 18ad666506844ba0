//! Two-phase bounded-variable primal simplex with a dense basis inverse.

use crate::{LpError, LpProblem, LpSolution, LpStatus, Relation, SolverOptions};

const PIVOT_TOL: f64 = 1e-10;
const DEGEN_TOL: f64 = 1e-10;
const RATIO_TIE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum VState {
    Basic,
    AtLower,
    AtUpper,
    /// Nonbasic free variable parked at zero.
    Free,
}

enum RunOutcome {
    Optimal,
    Unbounded,
    IterationLimit,
}

struct Tableau {
    m: usize,
    n_struct: usize,
    /// Dense column per variable (structural, then slack, then artificial).
    cols: Vec<Vec<f64>>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    state: Vec<VState>,
    x: Vec<f64>,
    basis: Vec<usize>,
    /// Row-major m x m basis inverse.
    binv: Vec<f64>,
    rhs: Vec<f64>,
    artificials: Vec<usize>,
    iterations: usize,
    pivots_since_refactor: usize,
}

impl Tableau {
    fn build(p: &LpProblem) -> Tableau {
        let m = p.num_constraints();
        let n = p.num_vars();

        let mut cols: Vec<Vec<f64>> = (0..n).map(|_| vec![0.0; m]).collect();
        for (i, con) in p.constraints().iter().enumerate() {
            for &(j, a) in &con.coeffs {
                cols[j][i] += a;
            }
        }

        let mut lo = Vec::with_capacity(n + 2 * m);
        let mut hi = Vec::with_capacity(n + 2 * m);
        let mut state = Vec::with_capacity(n + 2 * m);
        let mut x = Vec::with_capacity(n + 2 * m);
        for j in 0..n {
            let (l, u) = p.bounds(j);
            lo.push(l);
            hi.push(u);
            let (st, v) = if l.is_finite() && u.is_finite() {
                if l.abs() <= u.abs() {
                    (VState::AtLower, l)
                } else {
                    (VState::AtUpper, u)
                }
            } else if l.is_finite() {
                (VState::AtLower, l)
            } else if u.is_finite() {
                (VState::AtUpper, u)
            } else {
                (VState::Free, 0.0)
            };
            state.push(st);
            x.push(v);
        }

        let rhs: Vec<f64> = p.constraints().iter().map(|c| c.rhs).collect();
        let mut residual = rhs.clone();
        for j in 0..n {
            if x[j] != 0.0 {
                for i in 0..m {
                    residual[i] -= cols[j][i] * x[j];
                }
            }
        }

        let mut t = Tableau {
            m,
            n_struct: n,
            cols,
            lo,
            hi,
            state,
            x,
            basis: vec![0; m],
            binv: vec![0.0; m * m],
            rhs,
            artificials: Vec::new(),
            iterations: 0,
            pivots_since_refactor: 0,
        };

        for i in 0..m {
            t.binv[i * m + i] = 1.0;
        }

        let relations: Vec<Relation> = p.constraints().iter().map(|c| c.relation).collect();
        for i in 0..m {
            let r = residual[i];
            match relations[i] {
                Relation::Le => {
                    let slack = t.push_var(0.0, f64::INFINITY, unit_col(m, i, 1.0));
                    if r >= 0.0 {
                        t.make_basic(slack, i, r);
                    } else {
                        t.state[slack] = VState::AtLower;
                        t.x[slack] = 0.0;
                        t.push_artificial(i, -1.0, -r);
                    }
                }
                Relation::Ge => {
                    let slack = t.push_var(f64::NEG_INFINITY, 0.0, unit_col(m, i, 1.0));
                    if r <= 0.0 {
                        t.make_basic(slack, i, r);
                    } else {
                        t.state[slack] = VState::AtUpper;
                        t.x[slack] = 0.0;
                        t.push_artificial(i, 1.0, r);
                    }
                }
                Relation::Eq => {
                    if r >= 0.0 {
                        t.push_artificial(i, 1.0, r);
                    } else {
                        t.push_artificial(i, -1.0, -r);
                    }
                }
            }
        }
        t
    }

    fn push_var(&mut self, lo: f64, hi: f64, col: Vec<f64>) -> usize {
        self.cols.push(col);
        self.lo.push(lo);
        self.hi.push(hi);
        self.state.push(VState::AtLower);
        self.x.push(0.0);
        self.cols.len() - 1
    }

    fn push_artificial(&mut self, row: usize, sign: f64, value: f64) {
        let j = self.push_var(0.0, f64::INFINITY, unit_col(self.m, row, sign));
        self.make_basic(j, row, value);
        // Basis column is sign * e_row, so the inverse diagonal is 1/sign.
        self.binv[row * self.m + row] = sign;
        self.artificials.push(j);
    }

    fn make_basic(&mut self, var: usize, row: usize, value: f64) {
        self.state[var] = VState::Basic;
        self.x[var] = value;
        self.basis[row] = var;
    }

    fn duals(&self, cost: &[f64]) -> Vec<f64> {
        let m = self.m;
        let mut y = vec![0.0; m];
        for (k, &b) in self.basis.iter().enumerate() {
            let cb = cost[b];
            if cb != 0.0 {
                for i in 0..m {
                    y[i] += cb * self.binv[k * m + i];
                }
            }
        }
        y
    }

    fn ftran(&self, var: usize) -> Vec<f64> {
        let m = self.m;
        let col = &self.cols[var];
        let mut w = vec![0.0; m];
        for i in 0..m {
            let mut s = 0.0;
            for k in 0..m {
                s += self.binv[i * m + k] * col[k];
            }
            w[i] = s;
        }
        w
    }

    /// Rebuilds the basis inverse by Gauss-Jordan elimination with partial
    /// pivoting and recomputes the basic variable values.
    fn refactor(&mut self) -> Result<(), LpError> {
        let m = self.m;
        if m == 0 {
            return Ok(());
        }
        let mut a = vec![0.0; m * m]; // basis matrix, row-major
        for (k, &b) in self.basis.iter().enumerate() {
            for i in 0..m {
                a[i * m + k] = self.cols[b][i];
            }
        }
        let mut inv = vec![0.0; m * m];
        for i in 0..m {
            inv[i * m + i] = 1.0;
        }
        for col in 0..m {
            let mut piv_row = col;
            let mut piv_val = a[col * m + col].abs();
            for r in col + 1..m {
                let v = a[r * m + col].abs();
                if v > piv_val {
                    piv_val = v;
                    piv_row = r;
                }
            }
            if piv_val < 1e-12 {
                return Err(LpError::Numerical("singular basis during refactor".into()));
            }
            if piv_row != col {
                for c in 0..m {
                    a.swap(piv_row * m + c, col * m + c);
                    inv.swap(piv_row * m + c, col * m + c);
                }
            }
            let p = a[col * m + col];
            for c in 0..m {
                a[col * m + c] /= p;
                inv[col * m + c] /= p;
            }
            for r in 0..m {
                if r != col {
                    let f = a[r * m + col];
                    if f != 0.0 {
                        for c in 0..m {
                            a[r * m + c] -= f * a[col * m + c];
                            inv[r * m + c] -= f * inv[col * m + c];
                        }
                    }
                }
            }
        }
        self.binv = inv;
        self.pivots_since_refactor = 0;

        // Recompute x_B = B^-1 (rhs - N x_N).
        let mut t = self.rhs.clone();
        for j in 0..self.cols.len() {
            if self.state[j] != VState::Basic && self.x[j] != 0.0 {
                for i in 0..m {
                    t[i] -= self.cols[j][i] * self.x[j];
                }
            }
        }
        for i in 0..m {
            let mut s = 0.0;
            for k in 0..m {
                s += self.binv[i * m + k] * t[k];
            }
            self.x[self.basis[i]] = s;
        }
        Ok(())
    }

    fn run(&mut self, cost: &[f64], opts: &SolverOptions) -> Result<RunOutcome, LpError> {
        let mut degen_streak = 0usize;
        let mut bland = false;
        loop {
            if self.iterations >= opts.max_iterations {
                return Ok(RunOutcome::IterationLimit);
            }
            if self.pivots_since_refactor >= opts.refactor_interval {
                self.refactor()?;
            }

            let y = self.duals(cost);

            // Pricing: Dantzig (largest |reduced cost|), Bland when cycling.
            let mut entering: Option<(usize, f64, f64)> = None; // (var, |d|, dir)
            for j in 0..self.cols.len() {
                let st = self.state[j];
                if st == VState::Basic || self.hi[j] - self.lo[j] <= 0.0 {
                    continue;
                }
                let mut d = cost[j];
                for i in 0..self.m {
                    d -= y[i] * self.cols[j][i];
                }
                let thresh = opts.tol_opt * (1.0 + cost[j].abs());
                let dir = match st {
                    VState::AtLower if d < -thresh => 1.0,
                    VState::AtUpper if d > thresh => -1.0,
                    VState::Free if d < -thresh => 1.0,
                    VState::Free if d > thresh => -1.0,
                    _ => continue,
                };
                if bland {
                    entering = Some((j, d.abs(), dir));
                    break;
                }
                if entering.map_or(true, |(_, best, _)| d.abs() > best) {
                    entering = Some((j, d.abs(), dir));
                }
            }
            let Some((j, _, dir)) = entering else {
                return Ok(RunOutcome::Optimal);
            };

            let w = self.ftran(j);

            // Limit from the entering variable's own opposite bound.
            let own = if self.lo[j].is_finite() && self.hi[j].is_finite() {
                self.hi[j] - self.lo[j]
            } else {
                f64::INFINITY
            };

            // Ratio test over the basic variables.
            let mut t_row = f64::INFINITY;
            let mut leave: Option<(usize, bool)> = None; // (row, leaves at upper)
            for i in 0..self.m {
                let wd = w[i] * dir;
                let k = self.basis[i];
                let (t_i, to_upper) = if wd > PIVOT_TOL {
                    if !self.lo[k].is_finite() {
                        continue;
                    }
                    (((self.x[k] - self.lo[k]) / wd).max(0.0), false)
                } else if wd < -PIVOT_TOL {
                    if !self.hi[k].is_finite() {
                        continue;
                    }
                    (((self.hi[k] - self.x[k]) / -wd).max(0.0), true)
                } else {
                    continue;
                };
                let take = match leave {
                    None => t_i < t_row,
                    Some((r, _)) => {
                        if t_i < t_row - RATIO_TIE {
                            true
                        } else if t_i <= t_row + RATIO_TIE {
                            if bland {
                                self.basis[i] < self.basis[r]
                            } else {
                                w[i].abs() > w[r].abs()
                            }
                        } else {
                            false
                        }
                    }
                };
                if take {
                    t_row = t_row.min(t_i);
                    leave = Some((i, to_upper));
                }
            }

            if own.is_infinite() && t_row.is_infinite() {
                return Ok(RunOutcome::Unbounded);
            }

            let step;
            if own <= t_row {
                // Bound flip: the entering variable crosses its box.
                step = own;
                for i in 0..self.m {
                    self.x[self.basis[i]] -= w[i] * dir * step;
                }
                if dir > 0.0 {
                    self.x[j] = self.hi[j];
                    self.state[j] = VState::AtUpper;
                } else {
                    self.x[j] = self.lo[j];
                    self.state[j] = VState::AtLower;
                }
            } else {
                step = t_row;
                let (r, to_upper) = leave.expect("finite ratio without leaving row");
                self.x[j] += dir * step;
                for i in 0..self.m {
                    self.x[self.basis[i]] -= w[i] * dir * step;
                }
                let k = self.basis[r];
                if to_upper {
                    self.x[k] = self.hi[k];
                    self.state[k] = VState::AtUpper;
                } else {
                    self.x[k] = self.lo[k];
                    self.state[k] = VState::AtLower;
                }
                self.state[j] = VState::Basic;
                self.basis[r] = j;

                // Product-form update of the basis inverse.
                let m = self.m;
                let piv = w[r];
                for c in 0..m {
                    self.binv[r * m + c] /= piv;
                }
                for i in 0..m {
                    if i != r && w[i] != 0.0 {
                        let f = w[i];
                        for c in 0..m {
                            self.binv[i * m + c] -= f * self.binv[r * m + c];
                        }
                    }
                }
                self.pivots_since_refactor += 1;
            }

            self.iterations += 1;
            if step <= DEGEN_TOL {
                degen_streak += 1;
                if degen_streak >= opts.bland_threshold {
                    bland = true;
                }
            } else {
                degen_streak = 0;
                bland = false;
            }
        }
    }

    fn phase1_cost(&self) -> Vec<f64> {
        let mut c = vec![0.0; self.cols.len()];
        for &a in &self.artificials {
            c[a] = 1.0;
        }
        c
    }

    fn phase2_cost(&self, p: &LpProblem) -> Vec<f64> {
        let mut c = vec![0.0; self.cols.len()];
        c[..self.n_struct].copy_from_slice(p.costs());
        c
    }
}

fn unit_col(m: usize, row: usize, value: f64) -> Vec<f64> {
    let mut col = vec![0.0; m];
    col[row] = value;
    col
}

/// Solves a minimization LP. Returns `Err` only for structurally invalid
/// problems; infeasibility, unboundedness, and iteration exhaustion are
/// reported through the solution status.
pub fn solve(problem: &LpProblem, options: &SolverOptions) -> Result<LpSolution, LpError> {
    problem.validate()?;
    let mut t = Tableau::build(problem);

    if !t.artificials.is_empty() {
        let c1 = t.phase1_cost();
        let outcome = t.run(&c1, options)?;
        let infeas: f64 = t.artificials.iter().map(|&a| t.x[a]).sum();
        match outcome {
            RunOutcome::Optimal => {}
            RunOutcome::Unbounded => {
                return Err(LpError::Numerical("phase 1 reported unbounded".into()));
            }
            RunOutcome::IterationLimit => {
                return Ok(partial_solution(problem, &t, LpStatus::IterationLimit, infeas));
            }
        }
        if infeas > options.tol_feas {
            return Ok(partial_solution(problem, &t, LpStatus::Infeasible, infeas));
        }
        // Pin artificials at zero for phase 2.
        for &a in &t.artificials.clone() {
            t.lo[a] = 0.0;
            t.hi[a] = 0.0;
            if t.state[a] != VState::Basic {
                t.state[a] = VState::AtLower;
                t.x[a] = 0.0;
            }
        }
    }

    let c2 = t.phase2_cost(problem);
    let outcome = t.run(&c2, options)?;
    match outcome {
        RunOutcome::Optimal => {
            t.refactor()?;
            let y = t.duals(&c2);
            let mut reduced = vec![0.0; t.n_struct];
            for (j, red) in reduced.iter_mut().enumerate() {
                if t.state[j] != VState::Basic {
                    let mut d = c2[j];
                    for i in 0..t.m {
                        d -= y[i] * t.cols[j][i];
                    }
                    *red = d;
                }
            }
            let primal = t.x[..t.n_struct].to_vec();
            let objective = problem.objective_value(&primal);
            Ok(LpSolution {
                status: LpStatus::Optimal,
                primal,
                objective,
                duals: y,
                reduced_costs: reduced,
                iterations: t.iterations,
                infeasibility: 0.0,
            })
        }
        RunOutcome::Unbounded => {
            let mut s = partial_solution(problem, &t, LpStatus::Unbounded, 0.0);
            s.objective = f64::NEG_INFINITY;
            Ok(s)
        }
        RunOutcome::IterationLimit => {
            Ok(partial_solution(problem, &t, LpStatus::IterationLimit, 0.0))
        }
    }
}

fn partial_solution(
    problem: &LpProblem,
    t: &Tableau,
    status: LpStatus,
    infeasibility: f64,
) -> LpSolution {
    let primal = t.x[..t.n_struct].to_vec();
    let objective = problem.objective_value(&primal);
    LpSolution {
        status,
        primal,
        objective,
        duals: Vec::new(),
        reduced_costs: Vec::new(),
        iterations: t.iterations,
        infeasibility,
    }
}
