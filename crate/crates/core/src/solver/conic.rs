//! Interior-point backend for problems with quadratic terms, built on the
//! Clarabel conic solver. Quadratic `<=` rows become second-order cones.

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettingsBuilder, DefaultSolver, IPSolver, SolverStatus, SupportedConeT,
};

use super::{primal_residual, ConvexProblem, Relation, Sense, Solution, Status};
use crate::error::{Error, Result};

const TOL: f64 = 1e-10;

struct Rows {
    i: Vec<usize>,
    j: Vec<usize>,
    v: Vec<f64>,
    b: Vec<f64>,
}

impl Rows {
    fn push(&mut self, coeffs: impl IntoIterator<Item = (usize, f64)>, rhs: f64) -> usize {
        let r = self.b.len();
        for (j, v) in coeffs {
            if v != 0.0 {
                self.i.push(r);
                self.j.push(j);
                self.v.push(v);
            }
        }
        self.b.push(rhs);
        r
    }
}

pub(super) fn solve(p: &ConvexProblem) -> Result<Solution> {
    let n = p.n_vars();
    let flip = if p.sense == Sense::Maximize { -1.0 } else { 1.0 };

    // Fixed variables are substituted out.
    let mut col = vec![usize::MAX; n];
    let mut free = Vec::new();
    for j in 0..n {
        if p.lower[j] != p.upper[j] {
            col[j] = free.len();
            free.push(j);
        }
    }
    let nf = free.len();
    let fixed_value = |j: usize| p.lower[j];
    let reduce = |coeffs: &[f64]| -> (Vec<(usize, f64)>, f64) {
        let mut shift = 0.0;
        let mut out = Vec::new();
        for (j, &a) in coeffs.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            if col[j] == usize::MAX {
                shift += a * fixed_value(j);
            } else {
                out.push((col[j], a));
            }
        }
        (out, shift)
    };

    let mut rows = Rows {
        i: Vec::new(),
        j: Vec::new(),
        v: Vec::new(),
        b: Vec::new(),
    };
    let mut row_of = vec![usize::MAX; p.constraints.len()];
    let mut eq_rows = Vec::new();
    let mut ineq_rows = Vec::new();
    for (r, c) in p.constraints.iter().enumerate() {
        match c.relation {
            Relation::Eq => eq_rows.push(r),
            _ => ineq_rows.push(r),
        }
    }
    for &r in &eq_rows {
        let c = &p.constraints[r];
        let (coeffs, shift) = reduce(&c.coeffs);
        row_of[r] = rows.push(coeffs, c.rhs - shift);
    }
    let n_eq = rows.b.len();
    for &r in &ineq_rows {
        let c = &p.constraints[r];
        let (coeffs, shift) = reduce(&c.coeffs);
        let s = if c.relation == Relation::Ge { -1.0 } else { 1.0 };
        row_of[r] = rows.push(coeffs.into_iter().map(|(j, a)| (j, s * a)), s * (c.rhs - shift));
    }
    for (k, &j) in free.iter().enumerate() {
        if p.upper[j].is_finite() {
            rows.push([(k, 1.0)], p.upper[j]);
        }
        if p.lower[j].is_finite() {
            rows.push([(k, -1.0)], -p.lower[j]);
        }
    }
    let n_nonneg = rows.b.len() - n_eq;
    let mut cones = Vec::new();
    if n_eq > 0 {
        cones.push(SupportedConeT::ZeroConeT(n_eq));
    }
    if n_nonneg > 0 {
        cones.push(SupportedConeT::NonnegativeConeT(n_nonneg));
    }
    for q in &p.quadratic_constraints {
        // 0.5 sum q v^2 + a.v <= r  <=>  ||(sqrt(q) v, t - 1/2)|| <= t + 1/2, t = r - a.v
        let mut rhs = q.rhs;
        for j in 0..n {
            if col[j] == usize::MAX {
                let v = fixed_value(j);
                rhs -= q.coeffs[j] * v + 0.5 * q.quad_diag[j] * v * v;
            }
        }
        let (lin, _) = reduce(&q.coeffs);
        rows.push(lin.clone(), rhs + 0.5);
        let mut dim = 2;
        for (k, &j) in free.iter().enumerate() {
            if q.quad_diag[j] > 0.0 {
                rows.push([(k, -q.quad_diag[j].sqrt())], 0.0);
                dim += 1;
            }
        }
        rows.push(lin, rhs - 0.5);
        cones.push(SupportedConeT::SecondOrderConeT(dim));
    }

    // objective, minimization form
    let mut qvec = vec![0.0; nf];
    let mut pdiag = Vec::new();
    for j in 0..n {
        if col[j] != usize::MAX {
            qvec[col[j]] = flip * p.linear_cost[j];
            if p.quadratic_diag[j] != 0.0 {
                pdiag.push((col[j], flip * p.quadratic_diag[j]));
            }
        }
    }

    let assemble = |x: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|j| if col[j] == usize::MAX { fixed_value(j) } else { x[col[j]] })
            .collect()
    };

    if nf == 0 {
        let x = assemble(&[]);
        if primal_residual(p, &x) > 1e-9 {
            return Ok(infeasible(p));
        }
        return Ok(Solution {
            status: Status::Optimal,
            objective: p.objective_at(&x),
            primal: x,
            duals: vec![0.0; p.constraints.len()],
            ray: None,
            solve_time: 0.0,
        });
    }

    let pmat = CscMatrix::new_from_triplets(
        nf,
        nf,
        pdiag.iter().map(|e| e.0).collect(),
        pdiag.iter().map(|e| e.0).collect(),
        pdiag.iter().map(|e| e.1).collect(),
    );
    let amat = CscMatrix::new_from_triplets(rows.b.len(), nf, rows.i, rows.j, rows.v);
    // Retry ladder for runs that stall short of full accuracy.
    let attempts: [(f64, u32, bool); 3] = [(TOL, 10, true), (1e-8, 50, true), (1e-8, 50, false)];
    let mut solver = None;
    for (k, &(tol, refine, equilibrate)) in attempts.iter().enumerate() {
        let settings = DefaultSettingsBuilder::default()
            .verbose(false)
            .tol_gap_abs(tol)
            .tol_gap_rel(tol)
            .tol_feas(TOL)
            .tol_ktratio(1e-8)
            .max_iter(400)
            .iterative_refinement_max_iter(refine)
            .equilibrate_enable(equilibrate)
            .build()
            .map_err(|e| Error::numerical("interior point", format!("{e:?}")))?;
        let mut s = DefaultSolver::new(&pmat, &qvec, &amat, &rows.b, &cones, settings)
            .map_err(|e| Error::numerical("interior point", format!("{e:?}")))?;
        s.solve();
        let st = s.solution.status;
        let done = match st {
            SolverStatus::AlmostSolved => scaled_residual(p, &assemble(&s.solution.x)) <= 1e-7,
            SolverStatus::Solved
            | SolverStatus::PrimalInfeasible
            | SolverStatus::DualInfeasible => true,
            _ => false,
        };
        solver = Some(s);
        if done {
            break;
        }
        log::debug!("interior point attempt {k} ended with {st:?}, retrying");
    }
    let solver = solver.expect("at least one attempt");
    let sol = &solver.solution;
    let x = assemble(&sol.x);
    let duals: Vec<f64> = p
        .constraints
        .iter()
        .enumerate()
        .map(|(r, c)| {
            let z = sol.z[row_of[r]];
            let y = if c.relation == Relation::Ge { z } else { -z };
            flip * y
        })
        .collect();
    match sol.status {
        SolverStatus::Solved | SolverStatus::AlmostSolved => {
            let res = scaled_residual(p, &x);
            if sol.status == SolverStatus::AlmostSolved && res > 1e-7 {
                return Err(Error::numerical(
                    "interior point",
                    format!("reduced-accuracy solution with residual {res:e}"),
                ));
            }
            Ok(Solution {
                status: Status::Optimal,
                objective: p.objective_at(&x),
                primal: x,
                duals,
                ray: None,
                solve_time: 0.0,
            })
        }
        SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => Ok(infeasible(p)),
        SolverStatus::DualInfeasible | SolverStatus::AlmostDualInfeasible => {
            let ray = (0..n)
                .map(|j| if col[j] == usize::MAX { 0.0 } else { sol.x[col[j]] })
                .collect();
            Ok(Solution {
                status: Status::Unbounded,
                objective: -flip * f64::INFINITY,
                primal: vec![0.0; n],
                duals: vec![0.0; p.constraints.len()],
                ray: Some(ray),
                solve_time: 0.0,
            })
        }
        other => Err(Error::numerical("interior point", format!("{other:?}"))),
    }
}

/// Worst row or bound violation, each relative to `1 + |rhs|`.
fn scaled_residual(p: &ConvexProblem, x: &[f64]) -> f64 {
    let dot = |a: &[f64]| -> f64 { a.iter().zip(x).map(|(u, v)| u * v).sum() };
    let mut worst = 0.0f64;
    for c in &p.constraints {
        let act = dot(&c.coeffs);
        let viol = match c.relation {
            Relation::Le => act - c.rhs,
            Relation::Ge => c.rhs - act,
            Relation::Eq => (act - c.rhs).abs(),
        };
        worst = worst.max(viol / (1.0 + c.rhs.abs()));
    }
    for q in &p.quadratic_constraints {
        let act = dot(&q.coeffs) + q.quad_diag.iter().zip(x).map(|(d, v)| 0.5 * d * v * v).sum::<f64>();
        worst = worst.max((act - q.rhs) / (1.0 + q.rhs.abs()));
    }
    for j in 0..p.n_vars() {
        worst = worst
            .max((p.lower[j] - x[j]) / (1.0 + p.lower[j].abs()))
            .max((x[j] - p.upper[j]) / (1.0 + p.upper[j].abs()));
    }
    worst
}

fn infeasible(p: &ConvexProblem) -> Solution {
    Solution {
        status: Status::Infeasible,
        primal: vec![0.0; p.n_vars()],
        objective: f64::NAN,
        duals: vec![0.0; p.constraints.len()],
        ray: None,
        solve_time: 0.0,
    }
}
