//! Basic-feasible-solution enumeration over small generic LPs, used as
//! an independent check of the solver objective.

#![allow(dead_code)]

use lp_core::{LpProblem, Relation};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Equality standard form: A x = b with box bounds, slacks appended.
pub struct StdForm {
    pub m: usize,
    pub cols: Vec<Vec<f64>>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub cost: Vec<f64>,
    pub b: Vec<f64>,
}

pub fn to_standard_form(p: &LpProblem) -> StdForm {
    let m = p.num_constraints();
    let n = p.num_vars();
    let mut cols: Vec<Vec<f64>> = (0..n).map(|_| vec![0.0; m]).collect();
    let mut lo: Vec<f64> = (0..n).map(|j| p.bounds(j).0).collect();
    let mut hi: Vec<f64> = (0..n).map(|j| p.bounds(j).1).collect();
    let mut cost: Vec<f64> = p.costs().to_vec();
    let mut b = vec![0.0; m];
    for (i, con) in p.constraints().iter().enumerate() {
        for &(j, a) in &con.coeffs {
            cols[j][i] += a;
        }
        b[i] = con.rhs;
        match con.relation {
            Relation::Eq => {}
            Relation::Le => {
                let mut c = vec![0.0; m];
                c[i] = 1.0;
                cols.push(c);
                lo.push(0.0);
                hi.push(f64::INFINITY);
                cost.push(0.0);
            }
            Relation::Ge => {
                let mut c = vec![0.0; m];
                c[i] = 1.0;
                cols.push(c);
                lo.push(f64::NEG_INFINITY);
                hi.push(0.0);
                cost.push(0.0);
            }
        }
    }
    StdForm {
        m,
        cols,
        lo,
        hi,
        cost,
        b,
    }
}

fn gauss_solve(a: &mut [f64], b: &mut [f64], m: usize) -> bool {
    for col in 0..m {
        let mut piv = col;
        for r in col + 1..m {
            if a[r * m + col].abs() > a[piv * m + col].abs() {
                piv = r;
            }
        }
        if a[piv * m + col].abs() < 1e-10 {
            return false;
        }
        if piv != col {
            for c in 0..m {
                a.swap(piv * m + c, col * m + c);
            }
            b.swap(piv, col);
        }
        let d = a[col * m + col];
        for c in 0..m {
            a[col * m + c] /= d;
        }
        b[col] /= d;
        for r in 0..m {
            if r != col {
                let f = a[r * m + col];
                if f != 0.0 {
                    for c in 0..m {
                        a[r * m + c] -= f * a[col * m + c];
                    }
                    b[r] -= f * b[col];
                }
            }
        }
    }
    true
}

/// Minimum objective over all basic feasible solutions; `None` when no
/// vertex is feasible (infeasible problem, for bounded feasible sets).
pub fn enumerate_best(sf: &StdForm, feas_tol: f64) -> Option<f64> {
    let total = sf.cols.len();
    let m = sf.m;
    let mut basis = Vec::with_capacity(m);
    let mut best: Option<f64> = None;
    enumerate_rec(sf, 0, &mut basis, m, total, feas_tol, &mut best);
    best
}

fn enumerate_rec(
    sf: &StdForm,
    start: usize,
    basis: &mut Vec<usize>,
    m: usize,
    total: usize,
    feas_tol: f64,
    best: &mut Option<f64>,
) {
    if basis.len() == m {
        try_basis(sf, basis, feas_tol, best);
        return;
    }
    for j in start..total {
        basis.push(j);
        enumerate_rec(sf, j + 1, basis, m, total, feas_tol, best);
        basis.pop();
    }
}

fn try_basis(sf: &StdForm, basis: &[usize], feas_tol: f64, best: &mut Option<f64>) {
    let m = sf.m;
    let total = sf.cols.len();
    let nonbasic: Vec<usize> = (0..total).filter(|j| !basis.contains(j)).collect();

    // Each nonbasic variable sits at one of its finite bounds.
    let mut choices: Vec<Vec<f64>> = Vec::with_capacity(nonbasic.len());
    for &j in &nonbasic {
        let mut c = Vec::new();
        if sf.lo[j].is_finite() {
            c.push(sf.lo[j]);
        }
        if sf.hi[j].is_finite() && sf.hi[j] != sf.lo[j] {
            c.push(sf.hi[j]);
        }
        if c.is_empty() {
            return; // a free variable cannot be nonbasic at a vertex
        }
        choices.push(c);
    }

    let mut assignment = vec![0usize; nonbasic.len()];
    loop {
        let mut rhs = sf.b.clone();
        for (k, &j) in nonbasic.iter().enumerate() {
            let v = choices[k][assignment[k]];
            if v != 0.0 {
                for i in 0..m {
                    rhs[i] -= sf.cols[j][i] * v;
                }
            }
        }
        let mut a = vec![0.0; m * m];
        for (k, &j) in basis.iter().enumerate() {
            for i in 0..m {
                a[i * m + k] = sf.cols[j][i];
            }
        }
        if gauss_solve(&mut a, &mut rhs, m) {
            let feasible = basis
                .iter()
                .enumerate()
                .all(|(k, &j)| rhs[k] >= sf.lo[j] - feas_tol && rhs[k] <= sf.hi[j] + feas_tol);
            if feasible {
                let mut obj = 0.0;
                for (k, &j) in basis.iter().enumerate() {
                    obj += sf.cost[j] * rhs[k];
                }
                for (k, &j) in nonbasic.iter().enumerate() {
                    obj += sf.cost[j] * choices[k][assignment[k]];
                }
                if best.map_or(true, |b| obj < b) {
                    *best = Some(obj);
                }
            }
        }
        // Advance the mixed-radix assignment counter.
        let mut pos = 0;
        loop {
            if pos == nonbasic.len() {
                return;
            }
            assignment[pos] += 1;
            if assignment[pos] < choices[pos].len() {
                break;
            }
            assignment[pos] = 0;
            pos += 1;
        }
    }
}

pub fn random_problem(rng: &mut ChaCha8Rng, nmax: usize, mmax: usize) -> LpProblem {
    let n = rng.gen_range(2..=nmax);
    let m = rng.gen_range(1..=mmax);
    let mut p = LpProblem::new();
    for _ in 0..n {
        let hi = rng.gen_range(0.5..10.0);
        let cost = rng.gen_range(-5.0..5.0);
        p.add_var(0.0, hi, cost);
    }
    for _ in 0..m {
        let coeffs: Vec<(usize, f64)> = (0..n)
            .map(|j| (j, rng.gen_range(-3.0..3.0)))
            .collect();
        let relation = match rng.gen_range(0..3) {
            0 => Relation::Eq,
            1 => Relation::Le,
            _ => Relation::Ge,
        };
        let rhs = rng.gen_range(-5.0..10.0);
        p.add_constraint(coeffs, relation, rhs);
    }
    p
}
