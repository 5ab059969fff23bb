//! Dense LP and convex-QP layer.
//!
//! Every subproblem in the toolkit is expressed as a [`ConvexProblem`]: a
//! separable convex quadratic (possibly zero) objective, linear rows, simple
//! variable bounds and, optionally, separable convex quadratic `<=` rows.
//! Pure LPs go through a bounded-variable two-phase simplex
//! ([`simplex`]), everything with a quadratic term goes through the conic
//! interior-point backend ([`conic`]).
//!
//! Dual multipliers follow the shadow-price convention `y_r = d(objective)/d(rhs_r)`:
//! in a minimization `>=` rows carry `y >= 0` and `<=` rows carry `y <= 0`.

mod conic;
mod dump;
pub mod simplex;

use std::time::Instant;

use crate::error::{Error, Result};

pub use dump::{dump_lp, write_lp};
pub use simplex::LpSession;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

/// Identity of a row inside a ramp-loss formulation. Tightening code looks
/// up multipliers by tag rather than by row position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RowTag {
    /// Big-M (or plain) margin constraint of instance `i`.
    Margin(usize),
    /// `xi_i <= 2 (1 - z_i)`.
    ValidIneq(usize),
    /// Objective-value cut against a known upper bound.
    UpperBoundCut,
    /// `w_k^+ + w_k^- <= bound`.
    PairBound(usize),
    /// `-w_k <= v_k`.
    AbsLower(usize),
    /// `w_k <= v_k`.
    AbsUpper(usize),
    Other,
}

#[derive(Debug, Clone)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
    pub tag: RowTag,
}

/// `sum_j 0.5 * quad_diag[j] * v_j^2 + coeffs . v <= rhs`.
#[derive(Debug, Clone)]
pub struct QuadConstraint {
    pub quad_diag: Vec<f64>,
    pub coeffs: Vec<f64>,
    pub rhs: f64,
    pub tag: RowTag,
}

#[derive(Debug, Clone)]
pub struct ConvexProblem {
    pub sense: Sense,
    /// `q_j` contributes `0.5 * q_j * v_j^2`.
    pub quadratic_diag: Vec<f64>,
    pub linear_cost: Vec<f64>,
    pub objective_constant: f64,
    pub constraints: Vec<Constraint>,
    pub quadratic_constraints: Vec<QuadConstraint>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub variable_names: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub status: Status,
    pub primal: Vec<f64>,
    pub objective: f64,
    /// One multiplier per linear row, shadow-price sign convention.
    pub duals: Vec<f64>,
    /// Improving direction when `status == Unbounded`.
    pub ray: Option<Vec<f64>>,
    pub solve_time: f64,
}

impl ConvexProblem {
    pub fn new(sense: Sense, n_vars: usize) -> Self {
        ConvexProblem {
            sense,
            quadratic_diag: vec![0.0; n_vars],
            linear_cost: vec![0.0; n_vars],
            objective_constant: 0.0,
            constraints: Vec::new(),
            quadratic_constraints: Vec::new(),
            lower: vec![f64::NEG_INFINITY; n_vars],
            upper: vec![f64::INFINITY; n_vars],
            variable_names: (0..n_vars).map(|j| format!("x{}", j + 1)).collect(),
        }
    }

    pub fn n_vars(&self) -> usize {
        self.linear_cost.len()
    }

    pub fn add_row(&mut self, coeffs: Vec<f64>, relation: Relation, rhs: f64, tag: RowTag) {
        self.constraints.push(Constraint {
            coeffs,
            relation,
            rhs,
            tag,
        });
    }

    pub fn is_linear(&self) -> bool {
        self.quadratic_diag.iter().all(|&q| q == 0.0) && self.quadratic_constraints.is_empty()
    }

    pub fn rows_with_tag(&self, tag: RowTag) -> impl Iterator<Item = usize> + '_ {
        self.constraints
            .iter()
            .enumerate()
            .filter(move |(_, c)| c.tag == tag)
            .map(|(r, _)| r)
    }

    pub fn row_index(&self, tag: RowTag) -> Option<usize> {
        self.rows_with_tag(tag).next()
    }

    /// Objective value at `x` including the constant term.
    pub fn objective_at(&self, x: &[f64]) -> f64 {
        let mut v = self.objective_constant;
        for j in 0..self.n_vars() {
            v += self.linear_cost[j] * x[j] + 0.5 * self.quadratic_diag[j] * x[j] * x[j];
        }
        v
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.n_vars();
        let dims = [
            ("quadratic_diag", self.quadratic_diag.len()),
            ("lower", self.lower.len()),
            ("upper", self.upper.len()),
            ("variable_names", self.variable_names.len()),
        ];
        for (what, len) in dims {
            if len != m {
                return Err(Error::Dimension(format!("{what} has length {len}, expected {m}")));
            }
        }
        if self.quadratic_diag.iter().any(|&q| q < 0.0 || !q.is_finite()) {
            return Err(Error::InvalidArgument("quadratic_diag must be finite and >= 0".into()));
        }
        if self.sense == Sense::Maximize && self.quadratic_diag.iter().any(|&q| q > 0.0) {
            return Err(Error::InvalidArgument("a quadratic objective must be minimized".into()));
        }
        for (r, c) in self.constraints.iter().enumerate() {
            if c.coeffs.len() != m {
                return Err(Error::Dimension(format!(
                    "row {r} has {} coefficients, expected {m}",
                    c.coeffs.len()
                )));
            }
            if !c.rhs.is_finite() || c.coeffs.iter().any(|a| !a.is_finite()) {
                return Err(Error::InvalidArgument(format!("row {r} is not finite")));
            }
        }
        for (r, q) in self.quadratic_constraints.iter().enumerate() {
            if q.coeffs.len() != m || q.quad_diag.len() != m {
                return Err(Error::Dimension(format!("quadratic row {r} has wrong length")));
            }
            if q.quad_diag.iter().any(|&v| v < 0.0) {
                return Err(Error::InvalidArgument(format!("quadratic row {r} is not convex")));
            }
        }
        for j in 0..m {
            if self.lower[j] > self.upper[j] || self.lower[j] == f64::INFINITY || self.upper[j] == f64::NEG_INFINITY {
                return Err(Error::InvalidArgument(format!(
                    "variable {} has bounds [{}, {}]",
                    self.variable_names[j], self.lower[j], self.upper[j]
                )));
            }
        }
        Ok(())
    }
}

/// Solve a problem without quadratic terms with the simplex engine.
pub fn solve_lp(p: &ConvexProblem) -> Result<Solution> {
    if !p.is_linear() {
        return Err(Error::InvalidArgument("solve_lp called with quadratic terms".into()));
    }
    let start = Instant::now();
    let (_, mut sol) = LpSession::new(p)?;
    sol.solve_time = start.elapsed().as_secs_f64();
    Ok(sol)
}

/// Solve any convex problem of this layer; linear problems are routed to the
/// simplex engine, the rest to the interior-point backend.
pub fn solve_qp(p: &ConvexProblem) -> Result<Solution> {
    if p.is_linear() {
        return solve_lp(p);
    }
    solve_interior(p)
}

/// Solve with the interior-point backend regardless of the problem class.
pub fn solve_interior(p: &ConvexProblem) -> Result<Solution> {
    p.validate()?;
    let start = Instant::now();
    let mut sol = conic::solve(p)?;
    sol.solve_time = start.elapsed().as_secs_f64();
    Ok(sol)
}

/// Residuals of a claimed optimal primal/dual pair. Only meaningful for
/// problems without quadratic rows.
#[derive(Debug, Clone, Copy, Default)]
pub struct Certificate {
    /// Largest absolute violation of a row or bound.
    pub primal_residual: f64,
    /// Largest violation of dual sign conditions and stationarity.
    pub dual_residual: f64,
    /// Largest product multiplier * slack.
    pub complementarity: f64,
    /// Primal objective minus dual objective (minimization form).
    pub duality_gap: f64,
    /// Primal objective minus the Lagrangian at (primal, duals).
    pub lagrangian_gap: f64,
}

impl Certificate {
    pub fn passes(&self, tol: f64, objective: f64) -> bool {
        self.primal_residual <= tol
            && self.dual_residual <= tol
            && self.complementarity <= tol
            && self.duality_gap.abs() <= tol * (1.0 + objective.abs())
    }
}

/// Largest violation of the linear rows, quadratic rows and bounds at `x`.
pub fn primal_residual(p: &ConvexProblem, x: &[f64]) -> f64 {
    let mut worst = 0.0f64;
    for c in &p.constraints {
        let act: f64 = dot(&c.coeffs, x);
        let viol = match c.relation {
            Relation::Le => act - c.rhs,
            Relation::Ge => c.rhs - act,
            Relation::Eq => (act - c.rhs).abs(),
        };
        worst = worst.max(viol);
    }
    for q in &p.quadratic_constraints {
        let act: f64 = dot(&q.coeffs, x)
            + q.quad_diag.iter().zip(x).map(|(d, v)| 0.5 * d * v * v).sum::<f64>();
        worst = worst.max(act - q.rhs);
    }
    for j in 0..p.n_vars() {
        worst = worst.max(p.lower[j] - x[j]).max(x[j] - p.upper[j]);
    }
    worst
}

/// KKT residuals and duality gap for an `Optimal` solution of a problem
/// without quadratic rows.
pub fn certify(p: &ConvexProblem, sol: &Solution) -> Certificate {
    let m = p.n_vars();
    let x = &sol.primal;
    // Work in minimization form.
    let flip = if p.sense == Sense::Maximize { -1.0 } else { 1.0 };
    let y: Vec<f64> = sol.duals.iter().map(|v| flip * v).collect();

    let mut cert = Certificate {
        primal_residual: primal_residual(p, x),
        ..Default::default()
    };

    // reduced cost r = Qx + c - A^T y
    let mut reduced: Vec<f64> = (0..m)
        .map(|j| flip * (p.linear_cost[j] + p.quadratic_diag[j] * x[j]))
        .collect();
    let mut dual_obj = flip * p.objective_constant;
    for (c, &yr) in p.constraints.iter().zip(&y) {
        for (rj, a) in reduced.iter_mut().zip(&c.coeffs) {
            *rj -= yr * a;
        }
        dual_obj += yr * c.rhs;
        let sign_viol = match c.relation {
            Relation::Ge => (-yr).max(0.0),
            Relation::Le => yr.max(0.0),
            Relation::Eq => 0.0,
        };
        cert.dual_residual = cert.dual_residual.max(sign_viol);
        if c.relation != Relation::Eq {
            let slack = (dot(&c.coeffs, x) - c.rhs).abs();
            cert.complementarity = cert.complementarity.max(yr.abs() * slack);
        }
    }
    let mut quad = 0.0;
    for j in 0..m {
        quad += flip * p.quadratic_diag[j] * x[j] * x[j];
        let r = reduced[j];
        let (lo, hi) = (p.lower[j], p.upper[j]);
        if r > 0.0 {
            if lo.is_finite() {
                dual_obj += r * lo;
                cert.complementarity = cert.complementarity.max(r * (x[j] - lo).abs());
            } else {
                cert.dual_residual = cert.dual_residual.max(r);
            }
        } else if r < 0.0 {
            if hi.is_finite() {
                dual_obj += r * hi;
                cert.complementarity = cert.complementarity.max(-r * (hi - x[j]).abs());
            } else {
                cert.dual_residual = cert.dual_residual.max(-r);
            }
        }
    }
    dual_obj -= 0.5 * quad;
    let primal_obj = flip * p.objective_at(x);
    cert.duality_gap = primal_obj - dual_obj;

    let mut lagrangian = primal_obj;
    for (c, &yr) in p.constraints.iter().zip(&y) {
        lagrangian -= yr * (dot(&c.coeffs, x) - c.rhs);
    }
    cert.lagrangian_gap = primal_obj - lagrangian;
    cert
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
