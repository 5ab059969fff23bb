//! Bounded-variable two-phase revised simplex.
//!
//! Variables are shifted so every column has lower bound 0 and an optional
//! finite upper bound, which the ratio test handles directly (no extra rows).
//! The constraint matrix is kept by sparse columns next to a dense basis
//! inverse that is updated in product form and refactored periodically.
//! Pricing is Dantzig's rule, switching to Bland's rule after a run of
//! degenerate pivots. Every optimal basis is checked against the original
//! matrix before values are returned.

use nalgebra::{DMatrix, DVector};

use super::{dot, ConvexProblem, Relation, Sense, Solution, Status};
use crate::error::{Error, Result};

const PIVOT_TOL: f64 = 1e-9;
const OPT_TOL: f64 = 1e-9;
const FEAS_TOL: f64 = 1e-9;
const DEGENERATE_RUN: usize = 50;

#[derive(Debug, Clone, Copy)]
enum ColMap {
    /// `x = lo + col`
    Shift { col: usize, lo: f64 },
    /// `x = hi - col`
    Negate { col: usize, hi: f64 },
    /// `x = pos - neg`
    Split { pos: usize, neg: usize },
}

#[derive(Debug, Clone)]
struct Tableau {
    m: usize,
    ncols: usize,
    /// Structural columns, then slacks/surplus, then artificials from here on.
    first_art: usize,
    /// Sparse columns of the standard-form matrix.
    cols: Vec<Vec<(usize, f64)>>,
    b: Vec<f64>,
    /// Basis inverse, column-major: entry `(r, c)` at `c * m + r`.
    binv: Vec<f64>,
    beta: Vec<f64>,
    d: Vec<f64>,
    cost: Vec<f64>,
    upper: Vec<f64>,
    at_upper: Vec<bool>,
    basis: Vec<usize>,
    /// Row of a basic column, `usize::MAX` when nonbasic.
    pos: Vec<usize>,
    iterations: usize,
    since_invert: usize,
}

enum Outcome {
    Optimal,
    Unbounded { col: usize, dir: f64 },
}

impl Tableau {
    fn binv(&self, r: usize, c: usize) -> f64 {
        self.binv[c * self.m + r]
    }

    fn col_value(&self, j: usize) -> f64 {
        if self.pos[j] != usize::MAX {
            self.beta[self.pos[j]]
        } else if self.at_upper[j] {
            self.upper[j]
        } else {
            0.0
        }
    }

    /// `B^-1 a_j`
    fn ftran(&self, j: usize) -> Vec<f64> {
        let m = self.m;
        let mut out = vec![0.0; m];
        for &(r, v) in &self.cols[j] {
            let col = &self.binv[r * m..(r + 1) * m];
            for (o, c) in out.iter_mut().zip(col) {
                *o += v * c;
            }
        }
        out
    }

    /// Row `r` of `B^-1 A`, for every column.
    fn row_alpha(&self, r: usize) -> Vec<f64> {
        let rho: Vec<f64> = (0..self.m).map(|c| self.binv(r, c)).collect();
        self.cols
            .iter()
            .map(|col| col.iter().map(|&(i, v)| v * rho[i]).sum())
            .collect()
    }

    fn set_cost(&mut self, cost: Vec<f64>) {
        self.cost = cost;
        self.recompute_reduced_costs();
    }

    fn duals(&self) -> Vec<f64> {
        let m = self.m;
        let cb: Vec<f64> = self.basis.iter().map(|&j| self.cost[j]).collect();
        (0..m)
            .map(|c| dot(&cb, &self.binv[c * m..(c + 1) * m]))
            .collect()
    }

    fn reduced(&self, y: &[f64], j: usize) -> f64 {
        self.cost[j] - self.cols[j].iter().map(|&(i, v)| v * y[i]).sum::<f64>()
    }

    fn recompute_reduced_costs(&mut self) {
        let y = self.duals();
        let mut d: Vec<f64> = (0..self.ncols).map(|j| self.reduced(&y, j)).collect();
        for &j in &self.basis {
            d[j] = 0.0;
        }
        self.d = d;
    }

    fn choose_entering(&self, bland: bool) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        let mut best_score = 0.0;
        for j in 0..self.ncols {
            if self.pos[j] != usize::MAX || self.upper[j] <= 0.0 {
                continue;
            }
            let dj = self.d[j];
            let dir = if !self.at_upper[j] && dj < -OPT_TOL {
                1.0
            } else if self.at_upper[j] && dj > OPT_TOL {
                -1.0
            } else {
                continue;
            };
            if bland {
                return Some((j, dir));
            }
            if dj.abs() > best_score {
                best_score = dj.abs();
                best = Some((j, dir));
            }
        }
        best
    }

    /// Returns `(theta, Some(row))` for a pivot or `(theta, None)` for a
    /// bound flip of the entering column; `None` if the ray is unbounded.
    /// `col` is the entering column of `B^-1 A`.
    fn ratio_test(&self, j: usize, col: &[f64], dir: f64, bland: bool) -> Option<(f64, Option<usize>)> {
        let alpha = |r: usize| dir * col[r];
        let limit = |r: usize, a: f64, slack: f64| -> Option<f64> {
            if a > PIVOT_TOL {
                Some((self.beta[r] + slack) / a)
            } else if a < -PIVOT_TOL {
                let u = self.upper[self.basis[r]];
                if u.is_finite() {
                    Some((u - self.beta[r] + slack) / -a)
                } else {
                    None
                }
            } else {
                None
            }
        };

        let mut chosen: Option<usize> = None;
        if bland {
            let mut best = f64::INFINITY;
            for r in 0..self.m {
                if let Some(ratio) = limit(r, alpha(r), 0.0) {
                    let ratio = ratio.max(0.0);
                    let better = ratio < best - 1e-12
                        || (ratio <= best + 1e-12
                            && chosen.is_some_and(|c| self.basis[r] < self.basis[c]));
                    if better {
                        best = ratio;
                        chosen = Some(r);
                    }
                }
            }
        } else {
            // Harris two-pass: relaxed bound, then the largest pivot within it.
            let mut theta_max = f64::INFINITY;
            for r in 0..self.m {
                if let Some(ratio) = limit(r, alpha(r), FEAS_TOL) {
                    theta_max = theta_max.min(ratio);
                }
            }
            if theta_max.is_finite() {
                let mut best_abs = 0.0;
                for r in 0..self.m {
                    let a = alpha(r);
                    if let Some(ratio) = limit(r, a, 0.0) {
                        if ratio <= theta_max && a.abs() > best_abs {
                            best_abs = a.abs();
                            chosen = Some(r);
                        }
                    }
                }
            }
        }

        let row_theta = chosen.map(|r| limit(r, alpha(r), 0.0).unwrap().max(0.0));
        let flip = self.upper[j];
        match row_theta {
            Some(theta) if theta < flip => Some((theta, chosen)),
            _ if flip.is_finite() => Some((flip, None)),
            Some(theta) => Some((theta, chosen)),
            None => None,
        }
    }

    fn step(&mut self, j: usize, col: &[f64], dir: f64, theta: f64, row: Option<usize>) {
        if theta != 0.0 {
            for (b, &a) in self.beta.iter_mut().zip(col) {
                if a != 0.0 {
                    *b -= theta * dir * a;
                }
            }
        }
        let Some(r) = row else {
            self.at_upper[j] = !self.at_upper[j];
            return;
        };
        let leaving = self.basis[r];
        // leaving column ends at the bound it was driven to
        self.at_upper[leaving] = dir * col[r] < 0.0;
        let entering_value = if self.at_upper[j] {
            self.upper[j] - theta
        } else {
            theta
        };
        self.at_upper[j] = false;
        self.pivot(r, j, col);
        self.beta[r] = entering_value;
    }

    fn pivot(&mut self, r: usize, j: usize, col: &[f64]) {
        let m = self.m;
        let p = col[r];
        let f = self.d[j];
        if f != 0.0 {
            let alpha_r = self.row_alpha(r);
            for (dk, ak) in self.d.iter_mut().zip(&alpha_r) {
                if *ak != 0.0 {
                    *dk -= f * ak / p;
                }
            }
        }
        for c in 0..m {
            let bc = &mut self.binv[c * m..(c + 1) * m];
            let v = bc[r] / p;
            if v != 0.0 {
                for (b, &a) in bc.iter_mut().zip(col) {
                    *b -= a * v;
                }
            }
            bc[r] = v;
        }
        let leaving = self.basis[r];
        self.pos[leaving] = usize::MAX;
        self.basis[r] = j;
        self.pos[j] = r;
        for &k in &self.basis {
            self.d[k] = 0.0;
        }
        self.since_invert += 1;
    }

    fn run(&mut self) -> Result<Outcome> {
        let max_iter = self.iterations + 50 * (self.m + self.ncols) + 1000;
        let refactor_every = 8 * self.m + 100;
        let mut degenerate = 0usize;
        loop {
            if self.iterations > max_iter {
                return Err(Error::numerical("simplex", "iteration limit reached"));
            }
            if self.since_invert >= refactor_every && !self.reinvert() {
                return Err(Error::numerical("simplex", "singular basis"));
            }
            self.iterations += 1;
            let bland = degenerate >= DEGENERATE_RUN;
            let Some((j, dir)) = self.choose_entering(bland) else {
                return Ok(Outcome::Optimal);
            };
            let col = self.ftran(j);
            let Some((theta, row)) = self.ratio_test(j, &col, dir, bland) else {
                return Ok(Outcome::Unbounded { col: j, dir });
            };
            if theta <= 1e-12 {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
            self.step(j, &col, dir, theta, row);
        }
    }

    /// Drive artificials out of the basis after phase 1 and fix them at 0.
    fn retire_artificials(&mut self) {
        for r in 0..self.m {
            let j = self.basis[r];
            if j < self.first_art {
                continue;
            }
            let row = self.row_alpha(r);
            let mut best = None;
            let mut best_abs = 1e-7;
            for (k, &v) in row[..self.first_art].iter().enumerate() {
                if self.pos[k] == usize::MAX && v.abs() > best_abs {
                    best_abs = v.abs();
                    best = Some(k);
                }
            }
            if let Some(k) = best {
                let value = self.col_value(k);
                let col = self.ftran(k);
                self.pivot(r, k, &col);
                self.beta[r] = value;
                self.at_upper[j] = false;
                self.at_upper[k] = false;
            }
        }
        for j in self.first_art..self.ncols {
            self.upper[j] = 0.0;
            self.at_upper[j] = false;
        }
    }

    /// Nonbasic columns at their upper bound moved to the right-hand side.
    fn shifted_rhs(&self) -> Vec<f64> {
        let mut rhs = self.b.clone();
        for j in 0..self.ncols {
            if self.pos[j] == usize::MAX && self.at_upper[j] {
                for &(r, v) in &self.cols[j] {
                    rhs[r] -= v * self.upper[j];
                }
            }
        }
        rhs
    }

    /// Verify the basis against the original matrix, with one step of
    /// iterative refinement on the primal and dual values. Returns the
    /// column values and row multipliers of the standard-form problem, or
    /// `None` when the refined point violates a bound or an optimality
    /// condition.
    fn refine(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        let m = self.m;
        let nc = self.ncols;
        if m == 0 {
            let x: Vec<f64> = (0..nc).map(|j| self.col_value(j)).collect();
            let ok = (0..nc).all(|j| reduced_ok(self.cost[j], self.at_upper[j], self.upper[j]));
            return ok.then_some((x, Vec::new()));
        }
        let mut x: Vec<f64> = (0..nc).map(|j| self.col_value(j)).collect();
        let mut res = self.b.clone();
        for (j, col) in self.cols.iter().enumerate() {
            if x[j] != 0.0 {
                for &(r, v) in col {
                    res[r] -= v * x[j];
                }
            }
        }
        let mut worst = 0.0f64;
        for r in 0..m {
            let dx: f64 = (0..m).map(|k| self.binv(r, k) * res[k]).sum();
            x[self.basis[r]] += dx;
            worst = worst.max(dx.abs());
        }
        let scale = 1.0 + x.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if worst > 1e-6 * scale {
            return None;
        }
        for &j in &self.basis {
            let v = x[j];
            if !v.is_finite() || v < -1e-8 * scale || v > self.upper[j] + 1e-8 * scale {
                return None;
            }
            x[j] = v.clamp(0.0, self.upper[j]);
        }

        let mut y = self.duals();
        let res_y: Vec<f64> = self.basis.iter().map(|&j| self.reduced(&y, j)).collect();
        for (k, yk) in y.iter_mut().enumerate() {
            *yk += dot(&res_y, &self.binv[k * m..(k + 1) * m]);
        }
        let yscale = 1.0 + y.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        for j in 0..nc {
            if self.pos[j] != usize::MAX || self.upper[j] <= 0.0 {
                continue;
            }
            if !reduced_ok(self.reduced(&y, j) / yscale, self.at_upper[j], self.upper[j]) {
                return None;
            }
        }
        Some((x, y))
    }

    /// Refactor the basis inverse from the original matrix.
    fn reinvert(&mut self) -> bool {
        let m = self.m;
        self.since_invert = 0;
        if m == 0 {
            return true;
        }
        let mut bmat = DMatrix::zeros(m, m);
        for (c, &j) in self.basis.iter().enumerate() {
            for &(r, v) in &self.cols[j] {
                bmat[(r, c)] = v;
            }
        }
        let Some(inv) = bmat.try_inverse() else {
            return false;
        };
        if inv.iter().any(|v| !v.is_finite()) {
            return false;
        }
        self.binv.copy_from_slice(inv.as_slice());
        let beta = &inv * DVector::from_vec(self.shifted_rhs());
        for r in 0..m {
            let u = self.upper[self.basis[r]];
            self.beta[r] = beta[r].clamp(0.0, u);
        }
        self.recompute_reduced_costs();
        true
    }
}

fn reduced_ok(dj: f64, at_upper: bool, upper: f64) -> bool {
    if upper <= 0.0 {
        return true;
    }
    if at_upper {
        dj <= 1e-7
    } else {
        dj >= -1e-7
    }
}

/// A solved LP whose feasible basis can be reused for further objectives over
/// the same feasible region.
#[derive(Debug, Clone)]
pub struct LpSession {
    tab: Tableau,
    maps: Vec<ColMap>,
    row_sign: Vec<f64>,
    problem: ConvexProblem,
    feasible: bool,
}

impl LpSession {
    /// Solve `p` and keep the final basis.
    pub fn new(p: &ConvexProblem) -> Result<(LpSession, Solution)> {
        p.validate()?;
        if !p.is_linear() {
            return Err(Error::InvalidArgument("simplex requires a linear problem".into()));
        }
        let mut session = build(p);
        session.feasible = session.phase1()?;
        if !session.feasible {
            let sol = infeasible_solution(p);
            return Ok((session, sol));
        }
        let cost = session.std_cost(&p.linear_cost, p.sense);
        session.tab.set_cost(cost);
        let sol = session.phase2()?;
        Ok((session, sol))
    }

    /// Optimize a different linear objective over the same region, starting
    /// from the last basis.
    pub fn reoptimize(&mut self, linear_cost: &[f64], constant: f64, sense: Sense) -> Result<Solution> {
        if linear_cost.len() != self.problem.n_vars() {
            return Err(Error::Dimension(format!(
                "objective has {} entries, expected {}",
                linear_cost.len(),
                self.problem.n_vars()
            )));
        }
        self.problem.linear_cost = linear_cost.to_vec();
        self.problem.objective_constant = constant;
        self.problem.sense = sense;
        if !self.feasible {
            return Ok(infeasible_solution(&self.problem));
        }
        let cost = self.std_cost(linear_cost, sense);
        self.tab.set_cost(cost);
        self.phase2()
    }

    pub fn problem(&self) -> &ConvexProblem {
        &self.problem
    }

    pub fn iterations(&self) -> usize {
        self.tab.iterations
    }

    fn std_cost(&self, c: &[f64], sense: Sense) -> Vec<f64> {
        let s = if sense == Sense::Maximize { -1.0 } else { 1.0 };
        let mut cost = vec![0.0; self.tab.ncols];
        for (j, map) in self.maps.iter().enumerate() {
            let cj = s * c[j];
            match *map {
                ColMap::Shift { col, .. } => cost[col] = cj,
                ColMap::Negate { col, .. } => cost[col] = -cj,
                ColMap::Split { pos, neg } => {
                    cost[pos] = cj;
                    cost[neg] = -cj;
                }
            }
        }
        cost
    }

    fn phase1(&mut self) -> Result<bool> {
        let tab = &mut self.tab;
        if tab.first_art == tab.ncols {
            return Ok(true);
        }
        let mut cost = vec![0.0; tab.ncols];
        for c in cost.iter_mut().skip(tab.first_art) {
            *c = 1.0;
        }
        tab.set_cost(cost);
        tab.run()?;
        let infeas: f64 = (tab.first_art..tab.ncols).map(|j| tab.col_value(j)).sum();
        let scale = 1.0 + tab.b.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if infeas > 1e-9 * scale {
            // confirm on a fresh inverse before declaring infeasibility
            if tab.reinvert() {
                tab.run()?;
            }
            let infeas: f64 = (tab.first_art..tab.ncols).map(|j| tab.col_value(j)).sum();
            if infeas > 1e-9 * scale {
                return Ok(false);
            }
        }
        tab.retire_artificials();
        Ok(true)
    }

    fn phase2(&mut self) -> Result<Solution> {
        let mut outcome = self.tab.run()?;
        let mut refined = None;
        if let Outcome::Optimal = outcome {
            refined = self.tab.refine();
            if refined.is_none() {
                if !self.tab.reinvert() {
                    return Err(Error::numerical("simplex", "singular basis"));
                }
                outcome = self.tab.run()?;
                if let Outcome::Optimal = outcome {
                    refined = self.tab.refine();
                    if refined.is_none() {
                        return Err(Error::numerical(
                            "simplex",
                            "basis failed verification after reinversion",
                        ));
                    }
                }
            }
        }
        match outcome {
            Outcome::Optimal => {
                let (xs, ys) = refined.expect("refined when optimal");
                Ok(self.assemble_optimal(&xs, &ys))
            }
            Outcome::Unbounded { col, dir } => Ok(self.assemble_unbounded(col, dir)),
        }
    }

    fn to_original(&self, xs: &[f64]) -> Vec<f64> {
        self.maps
            .iter()
            .map(|map| match *map {
                ColMap::Shift { col, lo } => lo + xs[col],
                ColMap::Negate { col, hi } => hi - xs[col],
                ColMap::Split { pos, neg } => xs[pos] - xs[neg],
            })
            .collect()
    }

    fn assemble_optimal(&self, xs: &[f64], ys: &[f64]) -> Solution {
        let primal = self.to_original(xs);
        let s = if self.problem.sense == Sense::Maximize { -1.0 } else { 1.0 };
        let duals = ys.iter().zip(&self.row_sign).map(|(y, rs)| s * rs * y).collect();
        Solution {
            status: Status::Optimal,
            objective: self.problem.objective_at(&primal),
            primal,
            duals,
            ray: None,
            solve_time: 0.0,
        }
    }

    fn assemble_unbounded(&self, col: usize, dir: f64) -> Solution {
        let tab = &self.tab;
        let xs: Vec<f64> = (0..tab.ncols).map(|j| tab.col_value(j)).collect();
        let mut dxs = vec![0.0; tab.ncols];
        dxs[col] = dir;
        for (r, a) in tab.ftran(col).iter().enumerate() {
            dxs[tab.basis[r]] = -dir * a;
        }
        let primal = self.to_original(&xs);
        let ray = self
            .maps
            .iter()
            .map(|map| match *map {
                ColMap::Shift { col, .. } => dxs[col],
                ColMap::Negate { col, .. } => -dxs[col],
                ColMap::Split { pos, neg } => dxs[pos] - dxs[neg],
            })
            .collect();
        let s = if self.problem.sense == Sense::Maximize { 1.0 } else { -1.0 };
        Solution {
            status: Status::Unbounded,
            objective: s * f64::INFINITY,
            primal,
            duals: vec![0.0; self.problem.constraints.len()],
            ray: Some(ray),
            solve_time: 0.0,
        }
    }
}

fn infeasible_solution(p: &ConvexProblem) -> Solution {
    Solution {
        status: Status::Infeasible,
        primal: vec![0.0; p.n_vars()],
        objective: f64::NAN,
        duals: vec![0.0; p.constraints.len()],
        ray: None,
        solve_time: 0.0,
    }
}

fn build(p: &ConvexProblem) -> LpSession {
    let n = p.n_vars();
    let mut maps = Vec::with_capacity(n);
    let mut upper = Vec::new();
    for j in 0..n {
        let (lo, hi) = (p.lower[j], p.upper[j]);
        if lo.is_finite() {
            maps.push(ColMap::Shift { col: upper.len(), lo });
            upper.push(hi - lo);
        } else if hi.is_finite() {
            maps.push(ColMap::Negate { col: upper.len(), hi });
            upper.push(f64::INFINITY);
        } else {
            maps.push(ColMap::Split {
                pos: upper.len(),
                neg: upper.len() + 1,
            });
            upper.push(f64::INFINITY);
            upper.push(f64::INFINITY);
        }
    }
    let n_struct = upper.len();

    // Rows in shifted coordinates with nonnegative right-hand sides.
    let m = p.constraints.len();
    let mut rows = Vec::with_capacity(m);
    let mut row_sign = Vec::with_capacity(m);
    let mut rels = Vec::with_capacity(m);
    let mut rhs = Vec::with_capacity(m);
    for c in &p.constraints {
        let mut coeffs = vec![0.0; n_struct];
        let mut r = c.rhs;
        for (j, map) in maps.iter().enumerate() {
            let a = c.coeffs[j];
            if a == 0.0 {
                continue;
            }
            match *map {
                ColMap::Shift { col, lo } => {
                    coeffs[col] = a;
                    r -= a * lo;
                }
                ColMap::Negate { col, hi } => {
                    coeffs[col] = -a;
                    r -= a * hi;
                }
                ColMap::Split { pos, neg } => {
                    coeffs[pos] = a;
                    coeffs[neg] = -a;
                }
            }
        }
        let mut rel = c.relation;
        let mut sign = 1.0;
        let flip = r < 0.0 || (r == 0.0 && rel == Relation::Ge);
        if flip {
            sign = -1.0;
            r = -r;
            for v in coeffs.iter_mut() {
                *v = -*v;
            }
            rel = match rel {
                Relation::Le => Relation::Ge,
                Relation::Ge => Relation::Le,
                Relation::Eq => Relation::Eq,
            };
        }
        rows.push(coeffs);
        row_sign.push(sign);
        rels.push(rel);
        rhs.push(r);
    }

    let n_slack = rels.iter().filter(|&&r| r != Relation::Eq).count();
    let n_art = rels.iter().filter(|&&r| r != Relation::Le).count();
    let first_art = n_struct + n_slack;
    let ncols = first_art + n_art;
    upper.resize(ncols, f64::INFINITY);

    let mut a = vec![0.0; m * ncols];
    let mut unit_col = vec![0; m];
    let mut next_slack = n_struct;
    let mut next_art = first_art;
    for r in 0..m {
        a[r * ncols..r * ncols + n_struct].copy_from_slice(&rows[r]);
        match rels[r] {
            Relation::Le => {
                a[r * ncols + next_slack] = 1.0;
                unit_col[r] = next_slack;
                next_slack += 1;
            }
            Relation::Ge => {
                a[r * ncols + next_slack] = -1.0;
                next_slack += 1;
                a[r * ncols + next_art] = 1.0;
                unit_col[r] = next_art;
                next_art += 1;
            }
            Relation::Eq => {
                a[r * ncols + next_art] = 1.0;
                unit_col[r] = next_art;
                next_art += 1;
            }
        }
    }

    let mut pos = vec![usize::MAX; ncols];
    for (r, &j) in unit_col.iter().enumerate() {
        pos[j] = r;
    }
    let mut cols = vec![Vec::new(); ncols];
    for r in 0..m {
        for (j, col) in cols.iter_mut().enumerate() {
            let v = a[r * ncols + j];
            if v != 0.0 {
                col.push((r, v));
            }
        }
    }
    let mut binv = vec![0.0; m * m];
    for r in 0..m {
        binv[r * m + r] = 1.0;
    }
    let tab = Tableau {
        m,
        ncols,
        first_art,
        cols,
        binv,
        beta: rhs.clone(),
        b: rhs,
        d: vec![0.0; ncols],
        cost: vec![0.0; ncols],
        upper,
        at_upper: vec![false; ncols],
        basis: unit_col,
        pos,
        iterations: 0,
        since_invert: 0,
    };
    LpSession {
        tab,
        maps,
        row_sign,
        problem: p.clone(),
        feasible: false,
    }
}

/// Check that `x` satisfies every row of `p` within `tol`.
pub fn rows_satisfied(p: &ConvexProblem, x: &[f64], tol: f64) -> bool {
    p.constraints.iter().all(|c| {
        let act = dot(&c.coeffs, x);
        match c.relation {
            Relation::Le => act <= c.rhs + tol,
            Relation::Ge => act >= c.rhs - tol,
            Relation::Eq => (act - c.rhs).abs() <= tol,
        }
    })
}
