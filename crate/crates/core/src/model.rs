//! Ramp-loss formulations as [`ConvexProblem`]s: the plain SVMs, the
//! restricted SVM for a fixed outlier set, the big-M mixed-integer model and
//! its continuous relaxation, shifted models, and feasible-point handling.

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::solver::{
    dot, primal_residual, solve_qp, ConvexProblem, QuadConstraint, Relation, RowTag, Sense,
    Solution, Status,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Norm {
    L1,
    L2,
}

impl Norm {
    pub fn as_str(self) -> &'static str {
        match self {
            Norm::L1 => "l1",
            Norm::L2 => "l2",
        }
    }
}

impl std::str::FromStr for Norm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Norm> {
        match s.to_ascii_lowercase().as_str() {
            "l1" | "1" => Ok(Norm::L1),
            "l2" | "2" => Ok(Norm::L2),
            _ => Err(Error::InvalidArgument(format!("unknown norm {s:?} (use l1 or l2)"))),
        }
    }
}

/// Column layout of every formulation.
///
/// l1: `[w+ (d), w- (d), b, xi (n), z (n)]`;
/// l2: `[w (d), b, xi (n), z (n), v (d)]`. The `z` block is absent in the
/// SVM models and the `v` block only exists in the clustered l2 subproblems.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layout {
    pub norm: Norm,
    pub n: usize,
    pub d: usize,
    pub with_z: bool,
    pub with_v: bool,
}

impl Layout {
    pub fn new(norm: Norm, n: usize, d: usize, with_z: bool) -> Layout {
        Layout {
            norm,
            n,
            d,
            with_z,
            with_v: false,
        }
    }

    fn w_cols(&self) -> usize {
        match self.norm {
            Norm::L1 => 2 * self.d,
            Norm::L2 => self.d,
        }
    }

    pub fn wplus(&self, k: usize) -> usize {
        k
    }

    pub fn wminus(&self, k: usize) -> usize {
        debug_assert_eq!(self.norm, Norm::L1);
        self.d + k
    }

    pub fn w(&self, k: usize) -> usize {
        k
    }

    pub fn b(&self) -> usize {
        self.w_cols()
    }

    pub fn xi(&self, i: usize) -> usize {
        self.b() + 1 + i
    }

    pub fn z(&self, i: usize) -> usize {
        debug_assert!(self.with_z);
        self.b() + 1 + self.n + i
    }

    pub fn v(&self, k: usize) -> usize {
        debug_assert!(self.with_v);
        self.b() + 1 + self.n + if self.with_z { self.n } else { 0 } + k
    }

    pub fn n_vars(&self) -> usize {
        self.w_cols()
            + 1
            + self.n
            + if self.with_z { self.n } else { 0 }
            + if self.with_v { self.d } else { 0 }
    }

    pub fn names(&self) -> Vec<String> {
        let mut names = Vec::with_capacity(self.n_vars());
        match self.norm {
            Norm::L1 => {
                names.extend((1..=self.d).map(|k| format!("wp_{k}")));
                names.extend((1..=self.d).map(|k| format!("wm_{k}")));
            }
            Norm::L2 => names.extend((1..=self.d).map(|k| format!("w_{k}"))),
        }
        names.push("b".into());
        names.extend((1..=self.n).map(|i| format!("xi_{i}")));
        if self.with_z {
            names.extend((1..=self.n).map(|i| format!("z_{i}")));
        }
        if self.with_v {
            names.extend((1..=self.d).map(|k| format!("v_{k}")));
        }
        names
    }

    /// The weight vector `w` (`w+ - w-` for l1).
    pub fn w_value(&self, x: &[f64]) -> Vec<f64> {
        (0..self.d)
            .map(|k| match self.norm {
                Norm::L1 => x[self.wplus(k)] - x[self.wminus(k)],
                Norm::L2 => x[self.w(k)],
            })
            .collect()
    }

    /// Coefficients of `y_i (w . x_i + b)` in this layout.
    pub fn margin_coeffs(&self, ds: &Dataset, i: usize) -> Vec<f64> {
        let mut a = vec![0.0; self.n_vars()];
        let yi = ds.y[i];
        for k in 0..self.d {
            let v = yi * ds.x[i][k];
            match self.norm {
                Norm::L1 => {
                    a[self.wplus(k)] = v;
                    a[self.wminus(k)] = -v;
                }
                Norm::L2 => a[self.w(k)] = v,
            }
        }
        a[self.b()] = yi;
        a
    }

    /// Objective `norm term + C (sum xi + 2 sum z)` as (quadratic diag, linear cost).
    fn objective(&self, c: f64) -> (Vec<f64>, Vec<f64>) {
        let m = self.n_vars();
        let mut q = vec![0.0; m];
        let mut lin = vec![0.0; m];
        for k in 0..self.d {
            match self.norm {
                Norm::L1 => {
                    lin[self.wplus(k)] = 1.0;
                    lin[self.wminus(k)] = 1.0;
                }
                Norm::L2 => q[self.w(k)] = 1.0,
            }
        }
        for i in 0..self.n {
            lin[self.xi(i)] = c;
            if self.with_z {
                lin[self.z(i)] = 2.0 * c;
            }
        }
        (q, lin)
    }
}

/// Norm term `sum |w_k|` (l1) or `0.5 sum w_k^2` (l2).
pub fn norm_term(norm: Norm, w: &[f64]) -> f64 {
    match norm {
        Norm::L1 => w.iter().map(|v| v.abs()).sum(),
        Norm::L2 => 0.5 * w.iter().map(|v| v * v).sum::<f64>(),
    }
}

/// Configuration of the big-M model and the cuts installed by tightening.
#[derive(Debug, Clone, PartialEq)]
pub struct RampLossModel {
    pub norm: Norm,
    pub c: f64,
    pub big_m: Vec<f64>,
    /// l1 upper bounds on `w+_k` and `w-_k`.
    pub wplus_ub: Vec<f64>,
    pub wminus_ub: Vec<f64>,
    /// l1 bounds `w+_k + w-_k <= pair_ub[k]` (omitted when infinite).
    pub pair_ub: Vec<f64>,
    /// l2 box on `w`.
    pub w_lb: Vec<f64>,
    pub w_ub: Vec<f64>,
    pub b_lb: f64,
    pub b_ub: f64,
    /// Include `xi_i <= 2 (1 - z_i)`.
    pub use_valid_ineq: bool,
}

impl RampLossModel {
    /// Model with the given M vector and no further bounds.
    pub fn new(norm: Norm, c: f64, big_m: Vec<f64>, d: usize) -> RampLossModel {
        RampLossModel {
            norm,
            c,
            big_m,
            wplus_ub: vec![f64::INFINITY; d],
            wminus_ub: vec![f64::INFINITY; d],
            pair_ub: vec![f64::INFINITY; d],
            w_lb: vec![f64::NEG_INFINITY; d],
            w_ub: vec![f64::INFINITY; d],
            b_lb: f64::NEG_INFINITY,
            b_ub: f64::INFINITY,
            use_valid_ineq: true,
        }
    }

    pub fn layout(&self, ds: &Dataset) -> Layout {
        Layout::new(self.norm, ds.n(), ds.d(), true)
    }

    fn check(&self, ds: &Dataset) -> Result<()> {
        if self.big_m.len() != ds.n() {
            return Err(Error::Dimension(format!(
                "M has {} entries for n = {}",
                self.big_m.len(),
                ds.n()
            )));
        }
        if let Some(i) = self.big_m.iter().position(|m| !m.is_finite()) {
            return Err(Error::NonFiniteBigM(i));
        }
        let d = ds.d();
        for (what, v) in [
            ("wplus_ub", &self.wplus_ub),
            ("wminus_ub", &self.wminus_ub),
            ("pair_ub", &self.pair_ub),
            ("w_lb", &self.w_lb),
            ("w_ub", &self.w_ub),
        ] {
            if v.len() != d {
                return Err(Error::Dimension(format!("{what} has {} entries for d = {d}", v.len())));
            }
        }
        if !(self.c >= 0.0 && self.c.is_finite()) {
            return Err(Error::InvalidArgument(format!("C must be finite and >= 0, got {}", self.c)));
        }
        Ok(())
    }
}

/// The big-M model with integrality marks.
#[derive(Debug, Clone)]
pub struct MipProblem {
    pub problem: ConvexProblem,
    pub layout: Layout,
    /// Columns that must take values in {0, 1}.
    pub integer: Vec<usize>,
}

fn check_c(c: f64) -> Result<()> {
    if !(c >= 0.0 && c.is_finite()) {
        return Err(Error::InvalidArgument(format!("C must be finite and >= 0, got {c}")));
    }
    Ok(())
}

fn base_problem(layout: Layout, c: f64) -> ConvexProblem {
    let mut p = ConvexProblem::new(Sense::Minimize, layout.n_vars());
    let (q, lin) = layout.objective(c);
    p.quadratic_diag = q;
    p.linear_cost = lin;
    p.variable_names = layout.names();
    if layout.norm == Norm::L1 {
        for k in 0..layout.d {
            p.lower[layout.wplus(k)] = 0.0;
            p.lower[layout.wminus(k)] = 0.0;
        }
    }
    for i in 0..layout.n {
        p.lower[layout.xi(i)] = 0.0;
        if layout.with_z {
            p.lower[layout.z(i)] = 0.0;
            p.upper[layout.z(i)] = 1.0;
        }
    }
    p
}

/// The soft-margin SVM: `norm term + C sum xi`, `y_i (w.x_i + b) >= 1 - xi_i`, `xi >= 0`.
pub fn build_svm(ds: &Dataset, norm: Norm, c: f64) -> Result<(ConvexProblem, Layout)> {
    check_c(c)?;
    let layout = Layout::new(norm, ds.n(), ds.d(), false);
    let mut p = base_problem(layout, c);
    for i in 0..ds.n() {
        let mut a = layout.margin_coeffs(ds, i);
        a[layout.xi(i)] = 1.0;
        p.add_row(a, Relation::Ge, 1.0, RowTag::Margin(i));
    }
    Ok((p, layout))
}

/// SVM over the instances with `ztilde_i = false`, with `0 <= xi <= 2`.
/// Removed instances keep their `xi` column fixed at 0 so the layout matches
/// [`build_svm`].
pub fn restricted_svm(
    ds: &Dataset,
    norm: Norm,
    c: f64,
    ztilde: &[bool],
) -> Result<(ConvexProblem, Layout)> {
    check_c(c)?;
    if ztilde.len() != ds.n() {
        return Err(Error::Dimension(format!("z has {} entries for n = {}", ztilde.len(), ds.n())));
    }
    let layout = Layout::new(norm, ds.n(), ds.d(), false);
    let mut p = base_problem(layout, c);
    for i in 0..ds.n() {
        if ztilde[i] {
            p.upper[layout.xi(i)] = 0.0;
            continue;
        }
        p.upper[layout.xi(i)] = 2.0;
        let mut a = layout.margin_coeffs(ds, i);
        a[layout.xi(i)] = 1.0;
        p.add_row(a, Relation::Ge, 1.0, RowTag::Margin(i));
    }
    Ok((p, layout))
}

/// A point of the conditional ramp-loss model.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasiblePoint {
    pub w: Vec<f64>,
    pub b: f64,
    pub xi: Vec<f64>,
    pub z: Vec<bool>,
    pub objective: f64,
}

impl FeasiblePoint {
    /// Build a point and compute its objective.
    pub fn new(norm: Norm, c: f64, w: Vec<f64>, b: f64, xi: Vec<f64>, z: Vec<bool>) -> FeasiblePoint {
        let mut pt = FeasiblePoint {
            w,
            b,
            xi,
            z,
            objective: 0.0,
        };
        pt.objective = pt.objective_value(norm, c);
        pt
    }

    /// `norm term + C (sum xi + 2 sum z)`.
    pub fn objective_value(&self, norm: Norm, c: f64) -> f64 {
        let nz = self.z.iter().filter(|&&z| z).count() as f64;
        norm_term(norm, &self.w) + c * (self.xi.iter().sum::<f64>() + 2.0 * nz)
    }

    /// Largest violation of the conditional model: margin rows of the
    /// instances with `z_i = 0` and `0 <= xi <= 2`.
    pub fn conditional_violation(&self, ds: &Dataset) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..ds.n() {
            worst = worst.max(-self.xi[i]).max(self.xi[i] - 2.0);
            if !self.z[i] {
                let m = ds.y[i] * (dot(&self.w, &ds.x[i]) + self.b);
                worst = worst.max(1.0 - self.xi[i] - m);
            }
        }
        worst
    }

    /// Column vector in a big-M model layout. For l1, `w+ = max(w, 0)`, `w- = max(-w, 0)`.
    pub fn to_vector(&self, layout: &Layout) -> Vec<f64> {
        let mut x = vec![0.0; layout.n_vars()];
        for k in 0..layout.d {
            match layout.norm {
                Norm::L1 => {
                    x[layout.wplus(k)] = self.w[k].max(0.0);
                    x[layout.wminus(k)] = (-self.w[k]).max(0.0);
                }
                Norm::L2 => x[layout.w(k)] = self.w[k],
            }
        }
        x[layout.b()] = self.b;
        for i in 0..layout.n {
            x[layout.xi(i)] = self.xi[i];
            if layout.with_z {
                x[layout.z(i)] = if self.z[i] { 1.0 } else { 0.0 };
            }
        }
        x
    }

    /// Read a point back from a big-M model column vector (`z` rounded).
    pub fn from_vector(layout: &Layout, x: &[f64], c: f64) -> FeasiblePoint {
        let w = layout.w_value(x);
        let xi = (0..layout.n).map(|i| x[layout.xi(i)]).collect();
        let z = (0..layout.n)
            .map(|i| layout.with_z && x[layout.z(i)] > 0.5)
            .collect();
        FeasiblePoint::new(layout.norm, c, w, x[layout.b()], xi, z)
    }

    /// Largest violation of the rows and bounds of `model` at this point.
    pub fn model_violation(&self, ds: &Dataset, model: &RampLossModel) -> Result<f64> {
        let mip = build_rl_mip(ds, model)?;
        Ok(primal_residual(&mip.problem, &self.to_vector(&mip.layout)))
    }
}

/// Slack above `2 + TRUNCATION_TOL` marks an outlier; the tolerance keeps
/// solver noise on exact ties at 2 from flagging instances.
pub const TRUNCATION_TOL: f64 = 1e-7;

/// Turn an optimal SVM solution into a ramp-loss point: instances with
/// `xi > 2` become outliers (`z = 1`, `xi = 0`).
pub fn feasible_from_svm(sol: &Solution, layout: &Layout, norm: Norm, c: f64) -> FeasiblePoint {
    let w = layout.w_value(&sol.primal);
    let b = sol.primal[layout.b()];
    let mut xi = Vec::with_capacity(layout.n);
    let mut z = Vec::with_capacity(layout.n);
    for i in 0..layout.n {
        let v = sol.primal[layout.xi(i)].max(0.0);
        if v <= 2.0 + TRUNCATION_TOL {
            xi.push(v.min(2.0));
            z.push(false);
        } else {
            xi.push(0.0);
            z.push(true);
        }
    }
    FeasiblePoint::new(norm, c, w, b, xi, z)
}

fn expect_optimal(sol: &Solution, what: &str) -> Result<()> {
    match sol.status {
        Status::Optimal => Ok(()),
        s => Err(Error::numerical("model", format!("{what} returned {s:?}"))),
    }
}

/// SVM solve, truncation to a ramp-loss point, restricted re-solve. Returns
/// the better of the two points.
pub fn improved_feasible_point(ds: &Dataset, norm: Norm, c: f64) -> Result<FeasiblePoint> {
    let (svm, layout) = build_svm(ds, norm, c)?;
    let sol = solve_qp(&svm)?;
    expect_optimal(&sol, "svm")?;
    let first = feasible_from_svm(&sol, &layout, norm, c);
    let (restricted, rl) = restricted_svm(ds, norm, c, &first.z)?;
    let rsol = solve_qp(&restricted)?;
    expect_optimal(&rsol, "restricted svm")?;
    let xi = (0..ds.n()).map(|i| rsol.primal[rl.xi(i)].clamp(0.0, 2.0)).collect();
    let second = FeasiblePoint::new(
        norm,
        c,
        rl.w_value(&rsol.primal),
        rsol.primal[rl.b()],
        xi,
        first.z.clone(),
    );
    Ok(if second.objective <= first.objective {
        second
    } else {
        first
    })
}

fn install_rows(ds: &Dataset, cfg: &RampLossModel, layout: Layout, p: &mut ConvexProblem) {
    for i in 0..ds.n() {
        let mut a = layout.margin_coeffs(ds, i);
        a[layout.xi(i)] = 1.0;
        a[layout.z(i)] = cfg.big_m[i];
        p.add_row(a, Relation::Ge, 1.0, RowTag::Margin(i));
    }
    if cfg.use_valid_ineq {
        for i in 0..ds.n() {
            let mut a = vec![0.0; layout.n_vars()];
            a[layout.xi(i)] = 1.0;
            a[layout.z(i)] = 2.0;
            p.add_row(a, Relation::Le, 2.0, RowTag::ValidIneq(i));
        }
    }
    for i in 0..ds.n() {
        p.upper[layout.xi(i)] = 2.0;
    }
    match layout.norm {
        Norm::L1 => {
            for k in 0..ds.d() {
                p.upper[layout.wplus(k)] = cfg.wplus_ub[k];
                p.upper[layout.wminus(k)] = cfg.wminus_ub[k];
                if cfg.pair_ub[k].is_finite() {
                    let mut a = vec![0.0; layout.n_vars()];
                    a[layout.wplus(k)] = 1.0;
                    a[layout.wminus(k)] = 1.0;
                    p.add_row(a, Relation::Le, cfg.pair_ub[k], RowTag::PairBound(k));
                }
            }
        }
        Norm::L2 => {
            for k in 0..ds.d() {
                p.lower[layout.w(k)] = cfg.w_lb[k];
                p.upper[layout.w(k)] = cfg.w_ub[k];
            }
        }
    }
    p.lower[layout.b()] = cfg.b_lb;
    p.upper[layout.b()] = cfg.b_ub;
}

/// The big-M model: margin rows `y_i (w.x_i + b) >= 1 - xi_i - M_i z_i`,
/// the valid inequality, installed bounds, `0 <= xi <= 2`, `z` binary.
pub fn build_rl_mip(ds: &Dataset, cfg: &RampLossModel) -> Result<MipProblem> {
    cfg.check(ds)?;
    let layout = cfg.layout(ds);
    let mut p = base_problem(layout, cfg.c);
    install_rows(ds, cfg, layout, &mut p);
    let integer = (0..ds.n()).map(|i| layout.z(i)).collect();
    Ok(MipProblem {
        problem: p,
        layout,
        integer,
    })
}

/// Continuous relaxation (`0 <= z <= 1`) of [`build_rl_mip`].
pub fn build_relaxation(ds: &Dataset, cfg: &RampLossModel) -> Result<(ConvexProblem, Layout)> {
    let mip = build_rl_mip(ds, cfg)?;
    Ok((mip.problem, mip.layout))
}

/// Append the objective cut `objective <= ub` (a linear row for l1, a
/// convex quadratic row for l2).
pub fn add_upper_bound_cut(p: &mut ConvexProblem, ub: f64) {
    if p.quadratic_diag.iter().all(|&q| q == 0.0) {
        p.add_row(
            p.linear_cost.clone(),
            Relation::Le,
            ub - p.objective_constant,
            RowTag::UpperBoundCut,
        );
    } else {
        p.quadratic_constraints.push(QuadConstraint {
            quad_diag: p.quadratic_diag.clone(),
            coeffs: p.linear_cost.clone(),
            rhs: ub - p.objective_constant,
            tag: RowTag::UpperBoundCut,
        });
    }
}

/// Substitute `x_col = xbar_col + shift` into every part of `p`.
pub fn shift_variable(p: &ConvexProblem, col: usize, shift: f64) -> ConvexProblem {
    let mut q = p.clone();
    if shift == 0.0 {
        return q;
    }
    let qd = p.quadratic_diag[col];
    q.objective_constant += p.linear_cost[col] * shift + 0.5 * qd * shift * shift;
    q.linear_cost[col] += qd * shift;
    for c in q.constraints.iter_mut() {
        c.rhs -= c.coeffs[col] * shift;
    }
    for c in q.quadratic_constraints.iter_mut() {
        let qd = c.quad_diag[col];
        c.rhs -= c.coeffs[col] * shift + 0.5 * qd * shift * shift;
        c.coeffs[col] += qd * shift;
    }
    q.lower[col] -= shift;
    q.upper[col] -= shift;
    q
}

/// Which weight column a shifted model recentres.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShiftSign {
    /// `w+_k` (l1).
    Plus,
    /// `w-_k` (l1).
    Minus,
    /// `w_k` (l2).
    None,
}

/// Relaxation with the chosen weight column recentred at `shift`.
pub fn build_shifted(
    ds: &Dataset,
    cfg: &RampLossModel,
    k0: usize,
    sign: ShiftSign,
    shift: f64,
) -> Result<(ConvexProblem, Layout)> {
    let (p, layout) = build_relaxation(ds, cfg)?;
    let col = shifted_column(&layout, k0, sign)?;
    Ok((shift_variable(&p, col, shift), layout))
}

/// Column of the weight variable named by `(k0, sign)`.
pub fn shifted_column(layout: &Layout, k0: usize, sign: ShiftSign) -> Result<usize> {
    if k0 >= layout.d {
        return Err(Error::InvalidArgument(format!("coordinate {k0} out of range")));
    }
    match (layout.norm, sign) {
        (Norm::L1, ShiftSign::Plus) => Ok(layout.wplus(k0)),
        (Norm::L1, ShiftSign::Minus) => Ok(layout.wminus(k0)),
        (Norm::L2, ShiftSign::None) => Ok(layout.w(k0)),
        _ => Err(Error::InvalidArgument(format!(
            "shift sign {sign:?} does not match norm {:?}",
            layout.norm
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::solve_qp;

    fn ex1() -> Dataset {
        let raw = Dataset::new(
            vec![
                vec![-2.0, 1.0],
                vec![-1.0, -1.0],
                vec![-5.0, -3.0],
                vec![1.0, 3.0],
                vec![1.0, 0.0],
            ],
            vec![1.0, 1.0, -1.0, -1.0, -1.0],
            "ex1",
        )
        .unwrap();
        raw.scale_to_unit_box()
    }

    #[test]
    fn singleton_svm() {
        let ds = Dataset::new_relaxed(vec![vec![0.0]], vec![1.0], "one").unwrap();
        let (p, layout) = build_svm(&ds, Norm::L1, 1.0).unwrap();
        let s = solve_qp(&p).unwrap();
        assert!(s.objective.abs() < 1e-12);
        assert!(layout.w_value(&s.primal)[0].abs() < 1e-12);
        assert!(s.primal[layout.xi(0)].abs() < 1e-12);
        assert!(s.primal[layout.b()] >= 1.0 - 1e-12);
    }

    #[test]
    fn restricted_all_outliers() {
        let ds = ex1();
        let (p, _) = restricted_svm(&ds, Norm::L2, 10.0, &[true; 5]).unwrap();
        assert!(p.constraints.is_empty());
        let s = solve_qp(&p).unwrap();
        assert!(s.objective.abs() < 1e-9);
    }

    #[test]
    fn restricted_example1_gives_23() {
        let ds = ex1();
        let z = [false, false, true, false, false];
        let (p, _) = restricted_svm(&ds, Norm::L1, 10.0, &z).unwrap();
        let s = solve_qp(&p).unwrap();
        assert!((s.objective + 2.0 * 10.0 - 23.0).abs() < 1e-9, "{}", s.objective);
    }

    #[test]
    fn truncation_rule() {
        let layout = Layout::new(Norm::L1, 3, 1, false);
        let mut primal = vec![0.0; layout.n_vars()];
        primal[layout.wplus(0)] = 1.5;
        primal[layout.xi(0)] = 1.0;
        primal[layout.xi(2)] = 5.0;
        let sol = Solution {
            status: Status::Optimal,
            primal,
            objective: 0.0,
            duals: vec![],
            ray: None,
            solve_time: 0.0,
        };
        let pt = feasible_from_svm(&sol, &layout, Norm::L1, 2.0);
        assert_eq!(pt.z, vec![false, false, true]);
        assert_eq!(pt.xi, vec![1.0, 0.0, 0.0]);
        assert!((pt.objective - (1.5 + 2.0 * (1.0 + 2.0))).abs() < 1e-12);
    }

    #[test]
    fn improved_point_example1() {
        // The SVM optimum here is w = 0, b = -1, xi = (2, 2, 0, 0, 0): no slack
        // exceeds 2, so no instance is flagged and the bound stays at 40.
        let ds = ex1();
        for norm in [Norm::L1, Norm::L2] {
            let pt = improved_feasible_point(&ds, norm, 10.0).unwrap();
            assert!((pt.objective - 40.0).abs() < 1e-6, "{}", pt.objective);
            assert!(pt.z.iter().all(|&z| !z));
            assert!(pt.conditional_violation(&ds) < 1e-7);
        }
    }

    #[test]
    fn mip_rejects_nonfinite_m() {
        let ds = ex1();
        let cfg = RampLossModel::new(Norm::L1, 10.0, vec![1.0, f64::NAN, 1.0, 1.0, 1.0], 2);
        assert!(matches!(build_rl_mip(&ds, &cfg), Err(Error::NonFiniteBigM(1))));
    }

    #[test]
    fn relaxation_with_zero_m_has_zero_z() {
        let ds = ex1();
        for norm in [Norm::L1, Norm::L2] {
            let cfg = RampLossModel::new(norm, 10.0, vec![0.0; 5], 2);
            let (p, layout) = build_relaxation(&ds, &cfg).unwrap();
            let s = solve_qp(&p).unwrap();
            for i in 0..5 {
                assert!(s.primal[layout.z(i)].abs() < 1e-7);
            }
        }
    }

    #[test]
    fn shifted_objective_matches() {
        let ds = ex1();
        let cfg = RampLossModel::new(Norm::L2, 10.0, vec![41.0; 5], 2);
        let (p, layout) = build_relaxation(&ds, &cfg).unwrap();
        let base = solve_qp(&p).unwrap();
        let w0 = base.primal[layout.w(0)];
        let (q, _) = build_shifted(&ds, &cfg, 0, ShiftSign::None, w0).unwrap();
        let shifted = solve_qp(&q).unwrap();
        assert!((shifted.objective - base.objective).abs() < 1e-7);
        assert!(shifted.primal[layout.w(0)].abs() < 1e-5);
        let (same, _) = build_shifted(&ds, &cfg, 0, ShiftSign::None, 0.0).unwrap();
        assert_eq!(same.lower, p.lower);
        assert!(build_shifted(&ds, &cfg, 0, ShiftSign::Plus, 1.0).is_err());
    }
}
