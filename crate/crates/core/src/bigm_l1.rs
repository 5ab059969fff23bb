//! Big-M tightening for the l1-norm model.
//!
//! Every bound computed here holds for all points of the relaxation that
//! also satisfy the objective cut `objective <= UB`, so the optimal solutions
//! of the big-M model survive each update.

use log::debug;

use crate::cluster::{cluster_per_class, Clustering};
use crate::data::{Dataset, DistNorm};
use crate::error::Result;
use crate::model::{
    add_upper_bound_cut, build_relaxation, build_shifted, improved_feasible_point, FeasiblePoint,
    Layout, Norm, RampLossModel, ShiftSign,
};
use crate::solver::{solve_lp, ConvexProblem, RowTag, Solution, Status};
use crate::tighten::{
    cut_rhs, improved, maximize_all, ClusterConfig, LinearObjective, Recorder, Snapshot, StrategyReport,
    TightenOptions, LP_PAD,
};

#[derive(Debug, Clone, PartialEq)]
pub struct BoundsStateL1 {
    pub c: f64,
    pub ub_global: f64,
    pub incumbent: FeasiblePoint,
    pub big_m: Vec<f64>,
    pub m_initial: Vec<f64>,
    /// `w+_k + w-_k <= pair_ub[k]`.
    pub pair_ub: Vec<f64>,
    /// Bound on `sum (w+ + w-)` from the aggregate subproblem.
    pub ub_w: f64,
    pub wplus_ub: Vec<f64>,
    pub wminus_ub: Vec<f64>,
    pub b_lb: f64,
    pub b_ub: f64,
}

impl BoundsStateL1 {
    /// Upper bound from the SVM heuristic and the initial M vector.
    pub fn new(ds: &Dataset, c: f64) -> Result<BoundsStateL1> {
        let (ub, point) = initial_upper_bound(ds, c)?;
        let big_m = initial_bigm(ds, ub);
        let d = ds.d();
        Ok(BoundsStateL1 {
            c,
            ub_global: ub,
            incumbent: point,
            m_initial: big_m.clone(),
            big_m,
            pair_ub: vec![f64::INFINITY; d],
            ub_w: f64::INFINITY,
            wplus_ub: vec![f64::INFINITY; d],
            wminus_ub: vec![f64::INFINITY; d],
            b_lb: f64::NEG_INFINITY,
            b_ub: f64::INFINITY,
        })
    }

    /// The big-M model with every installed bound.
    pub fn model(&self) -> RampLossModel {
        let mut m = RampLossModel::new(Norm::L1, self.c, self.big_m.clone(), self.pair_ub.len());
        m.wplus_ub = self.wplus_ub.clone();
        m.wminus_ub = self.wminus_ub.clone();
        m.pair_ub = self.pair_ub.clone();
        m.b_lb = self.b_lb;
        m.b_ub = self.b_ub;
        m
    }

    pub fn snapshot(&self) -> Snapshot {
        let mut bounds = Vec::with_capacity(3 * self.pair_ub.len() + 2);
        bounds.extend(&self.pair_ub);
        bounds.extend(&self.wplus_ub);
        bounds.extend(&self.wminus_ub);
        bounds.push(self.b_ub);
        bounds.push(-self.b_lb);
        Snapshot {
            big_m: self.big_m.clone(),
            bounds,
        }
    }

    fn region(&self, ds: &Dataset) -> Result<(ConvexProblem, Layout)> {
        let (mut p, layout) = build_relaxation(ds, &self.model())?;
        add_upper_bound_cut(&mut p, cut_rhs(self.ub_global));
        Ok((p, layout))
    }

    fn lower_m(&mut self, i: usize, v: f64) {
        if v < self.big_m[i] {
            self.big_m[i] = v;
        }
    }
}

/// SVM solve, truncation and restricted re-solve; the objective of the
/// resulting point is the global upper bound.
pub fn initial_upper_bound(ds: &Dataset, c: f64) -> Result<(f64, FeasiblePoint)> {
    let point = improved_feasible_point(ds, Norm::L1, c)?;
    Ok((point.objective, point))
}

/// `M_i = dist_inf(i) * UB`.
pub fn initial_bigm(ds: &Dataset, ub: f64) -> Vec<f64> {
    ds.same_class_max_distances(DistNorm::LInf).iter().map(|d| d * ub).collect()
}

fn pair_objective(layout: &Layout, k: usize) -> LinearObjective {
    let mut o = LinearObjective::zero(layout.n_vars());
    o.coeffs[layout.wplus(k)] = 1.0;
    o.coeffs[layout.wminus(k)] = 1.0;
    o
}

/// Per coordinate, maximise `w+_k + w-_k` and install the pair bounds; then
/// `M_i = min(dist_1(i) * max_k UB_wk, dist_inf(i) * UB)`.
pub fn tighten_w_variant1(ds: &Dataset, state: &mut BoundsStateL1, opts: &TightenOptions) -> Result<()> {
    let (region, layout) = state.region(ds)?;
    let objs: Vec<_> = (0..ds.d()).map(|k| pair_objective(&layout, k)).collect();
    let vals = maximize_all(&region, &objs, opts.jobs, "w bounds")?;
    for (k, v) in vals.into_iter().enumerate() {
        if let Some(v) = v {
            state.pair_ub[k] = state.pair_ub[k].min(v);
        }
    }
    let wmax = state.pair_ub.iter().cloned().fold(0.0, f64::max);
    let d1 = ds.same_class_max_distances(DistNorm::L1);
    let dinf = ds.same_class_max_distances(DistNorm::LInf);
    for i in 0..ds.n() {
        let cand = (d1[i] * wmax).min(dinf[i] * state.ub_global);
        state.lower_m(i, cand);
    }
    Ok(())
}

/// Maximise `sum (w+ + w-)` once; `M_i = dist_inf(i) * UB_w` and every pair
/// bound becomes `UB_w`.
pub fn tighten_w_variant2(ds: &Dataset, state: &mut BoundsStateL1, opts: &TightenOptions) -> Result<()> {
    let (region, layout) = state.region(ds)?;
    let mut obj = LinearObjective::zero(layout.n_vars());
    for k in 0..ds.d() {
        obj.coeffs[layout.wplus(k)] = 1.0;
        obj.coeffs[layout.wminus(k)] = 1.0;
    }
    let v = maximize_all(&region, &[obj], opts.jobs, "w bound")?[0];
    let Some(v) = v else { return Ok(()) };
    state.ub_w = state.ub_w.min(v);
    for k in 0..ds.d() {
        state.pair_ub[k] = state.pair_ub[k].min(state.ub_w);
    }
    let dinf = ds.same_class_max_distances(DistNorm::LInf);
    for i in 0..ds.n() {
        state.lower_m(i, dinf[i] * state.ub_w);
    }
    Ok(())
}

/// Minimise and maximise `b` over the bounding region.
pub fn b_bounds(ds: &Dataset, state: &mut BoundsStateL1, opts: &TightenOptions) -> Result<(f64, f64)> {
    let (region, layout) = state.region(ds)?;
    let n = layout.n_vars();
    let objs = [
        LinearObjective::unit(n, layout.b(), 1.0),
        LinearObjective::unit(n, layout.b(), -1.0),
    ];
    let v = maximize_all(&region, &objs, opts.jobs, "b bounds")?;
    if let Some(hi) = v[0] {
        state.b_ub = state.b_ub.min(hi);
    }
    if let Some(neg_lo) = v[1] {
        state.b_lb = state.b_lb.max(-neg_lo);
    }
    Ok((state.b_lb, state.b_ub))
}

/// Relaxation optimum and the multipliers of its margin rows.
#[derive(Debug, Clone)]
pub struct RelaxationDuals {
    pub objective: f64,
    pub primal: Vec<f64>,
    /// One multiplier per instance (the margin rows are `>=` rows of a
    /// minimisation, so these are nonnegative).
    pub alpha: Vec<f64>,
    pub layout: Layout,
}

fn margin_duals(ds: &Dataset, p: &ConvexProblem, sol: &Solution) -> Vec<f64> {
    (0..ds.n())
        .map(|i| p.row_index(RowTag::Margin(i)).map_or(0.0, |r| sol.duals[r].max(0.0)))
        .collect()
}

/// Solve the relaxation (no objective cut) of the current model.
pub fn relaxation_duals(ds: &Dataset, model: &RampLossModel) -> Result<RelaxationDuals> {
    let (p, layout) = build_relaxation(ds, model)?;
    let sol = solve_lp(&p)?;
    if sol.status != Status::Optimal {
        return Err(crate::Error::numerical("tighten", format!("relaxation returned {:?}", sol.status)));
    }
    Ok(RelaxationDuals {
        objective: sol.objective,
        alpha: margin_duals(ds, &p, &sol),
        primal: sol.primal,
        layout,
    })
}

/// `sum_i alpha_i y_i x_ik`.
pub fn weighted_feature_sum(ds: &Dataset, alpha: &[f64], k: usize) -> f64 {
    (0..ds.n()).map(|i| alpha[i] * ds.y[i] * ds.x[i][k]).sum()
}

/// `(UB - Z) / slope + shift`, inflated against rounding, or `None` when
/// the slope is not safely positive.
pub fn lagrangian_bound(ub: f64, z: f64, slope: f64, shift: f64, eps_pos: f64, scale: f64) -> Option<f64> {
    if slope <= eps_pos {
        return None;
    }
    let tol_z = LP_PAD * (1.0 + z.abs());
    let tol_c = 1e-10 * (1.0 + scale);
    let denom = slope - tol_c;
    if denom <= 0.0 {
        return None;
    }
    let num = (ub - z + tol_z).max(0.0);
    Some(num / denom + shift + LP_PAD * (1.0 + shift.abs()))
}

/// Upper bounds on `w+_k` and `w-_k` from the Lagrangian relaxation of the
/// margin rows. Returns the number of skipped bounds.
pub fn lagrangian_w_bounds(ds: &Dataset, state: &mut BoundsStateL1, opts: &TightenOptions) -> Result<usize> {
    let model = state.model();
    let base = relaxation_duals(ds, &model)?;
    let layout = base.layout;
    let mut skipped = 0;
    for k in 0..ds.d() {
        for sign in [ShiftSign::Plus, ShiftSign::Minus] {
            let col = match sign {
                ShiftSign::Plus => layout.wplus(k),
                _ => layout.wminus(k),
            };
            let shift = base.primal[col];
            let (z, alpha) = if opts.explicit_shifted {
                shifted_duals(ds, &model, k, sign, shift)?.unwrap_or((base.objective, base.alpha.clone()))
            } else {
                (base.objective, base.alpha.clone())
            };
            let s = weighted_feature_sum(ds, &alpha, k);
            let scale: f64 = (0..ds.n()).map(|i| (alpha[i] * ds.x[i][k]).abs()).sum();
            let slope = match sign {
                ShiftSign::Plus => 1.0 - s,
                _ => 1.0 + s,
            };
            match lagrangian_bound(state.ub_global, z, slope, shift, opts.eps_pos, scale) {
                Some(bound) => {
                    let slot = match sign {
                        ShiftSign::Plus => &mut state.wplus_ub[k],
                        _ => &mut state.wminus_ub[k],
                    };
                    *slot = slot.min(bound);
                }
                None => {
                    debug!("w bound ({k}, {sign:?}) skipped: slope {slope:e}");
                    skipped += 1;
                }
            }
        }
    }
    Ok(skipped)
}

/// Optimum and margin multipliers of the model recentred at `shift`, or
/// `None` if its optimum does not sit at the recentred origin.
fn shifted_duals(
    ds: &Dataset,
    model: &RampLossModel,
    k: usize,
    sign: ShiftSign,
    shift: f64,
) -> Result<Option<(f64, Vec<f64>)>> {
    let (p, layout) = build_shifted(ds, model, k, sign, shift)?;
    let sol = solve_lp(&p)?;
    if sol.status != Status::Optimal {
        return Ok(None);
    }
    let col = crate::model::shifted_column(&layout, k, sign)?;
    if sol.primal[col].abs() > 1e-9 * (1.0 + shift.abs()) {
        return Ok(None);
    }
    Ok(Some((sol.objective, margin_duals(ds, &p, &sol))))
}

/// `1 - xi_i - y_i (w.x_i + b)` for each instance.
fn instance_objective(ds: &Dataset, layout: &Layout, i: usize) -> LinearObjective {
    let mut coeffs: Vec<f64> = layout.margin_coeffs(ds, i).into_iter().map(|a| -a).collect();
    coeffs[layout.xi(i)] = -1.0;
    LinearObjective { coeffs, constant: 1.0 }
}

/// Per-instance subproblems. Returns the new M vector.
pub fn update_m_variant_i(ds: &Dataset, state: &mut BoundsStateL1, opts: &TightenOptions) -> Result<Vec<f64>> {
    let (region, layout) = state.region(ds)?;
    let objs: Vec<_> = (0..ds.n()).map(|i| instance_objective(ds, &layout, i)).collect();
    let vals = maximize_all(&region, &objs, opts.jobs, "M update")?;
    for (i, v) in vals.into_iter().enumerate() {
        if let Some(v) = v {
            state.lower_m(i, v);
        }
    }
    Ok(state.big_m.clone())
}

/// Group subproblem for a set of same-class instances: the margin term is
/// bounded coordinatewise with the group's feature extremes.
fn group_objective(ds: &Dataset, layout: &Layout, members: &[usize], label: f64) -> LinearObjective {
    let mut o = LinearObjective::zero(layout.n_vars());
    o.constant = 1.0;
    for k in 0..ds.d() {
        let lo = members.iter().map(|&i| ds.x[i][k]).fold(f64::INFINITY, f64::min);
        let hi = members.iter().map(|&i| ds.x[i][k]).fold(f64::NEG_INFINITY, f64::max);
        if label > 0.0 {
            o.coeffs[layout.wplus(k)] = -lo;
            o.coeffs[layout.wminus(k)] = hi;
        } else {
            o.coeffs[layout.wplus(k)] = hi;
            o.coeffs[layout.wminus(k)] = -lo;
        }
    }
    o.coeffs[layout.b()] = -label;
    o
}

/// One subproblem per cluster; every member receives the cluster's value.
pub fn update_m_clustered(
    ds: &Dataset,
    state: &mut BoundsStateL1,
    clusters: &Clustering,
    opts: &TightenOptions,
) -> Result<Vec<f64>> {
    let (region, layout) = state.region(ds)?;
    let members = clusters.members();
    let objs: Vec<_> = members
        .iter()
        .enumerate()
        .map(|(c, m)| match m.as_slice() {
            // a lone member keeps its own slack term: the per-instance problem
            [i] => instance_objective(ds, &layout, *i),
            _ => group_objective(ds, &layout, m, clusters.class_of[c]),
        })
        .collect();
    let vals = maximize_all(&region, &objs, opts.jobs, "M update")?;
    for (c, v) in vals.into_iter().enumerate() {
        if let Some(v) = v {
            for &i in &members[c] {
                state.lower_m(i, v);
            }
        }
    }
    Ok(state.big_m.clone())
}

/// One subproblem per class.
pub fn update_m_variant_ii(ds: &Dataset, state: &mut BoundsStateL1, opts: &TightenOptions) -> Result<Vec<f64>> {
    update_m_clustered(ds, state, &Clustering::by_class(ds), opts)
}

pub fn update_m_variant_iii(
    ds: &Dataset,
    state: &mut BoundsStateL1,
    clusters: &Clustering,
    opts: &TightenOptions,
) -> Result<Vec<f64>> {
    update_m_clustered(ds, state, clusters, opts)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WVariant {
    /// One subproblem per coordinate.
    PerCoordinate,
    /// A single aggregate subproblem.
    Aggregate,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MVariantL1 {
    PerInstance,
    PerClass,
    PerCluster(ClusterConfig),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Alg2Config {
    pub w_variant: WVariant,
    pub m_variant: MVariantL1,
    pub options: TightenOptions,
}

fn w_step(ds: &Dataset, state: &mut BoundsStateL1, cfg: &Alg2Config) -> Result<()> {
    match cfg.w_variant {
        WVariant::PerCoordinate => tighten_w_variant1(ds, state, &cfg.options),
        WVariant::Aggregate => tighten_w_variant2(ds, state, &cfg.options),
    }
}

/// Setup phase (w bounds, b bounds) followed by the outer loop.
pub fn tighten_l1(ds: &Dataset, state: &mut BoundsStateL1, cfg: &Alg2Config) -> Result<StrategyReport> {
    run_phases(ds, state, cfg, true)
}

/// Only the outer loop, continuing from `state`.
pub fn resume_algorithm2(ds: &Dataset, state: &mut BoundsStateL1, cfg: &Alg2Config) -> Result<StrategyReport> {
    run_phases(ds, state, cfg, false)
}

fn run_phases(ds: &Dataset, state: &mut BoundsStateL1, cfg: &Alg2Config, setup: bool) -> Result<StrategyReport> {
    let mut rec = Recorder::new();
    let opts = &cfg.options;
    let clusters = match cfg.m_variant {
        MVariantL1::PerCluster(cc) => {
            let t = std::time::Instant::now();
            let c = cluster_per_class(ds, cc.fraction, cc.algo, cc.seed)?;
            rec.report.t_cluster = t.elapsed().as_secs_f64();
            Some(c)
        }
        _ => None,
    };
    let m0 = state.m_initial.clone();
    rec.record("initial", 0, &m0, state.snapshot());
    if setup {
        w_step(ds, state, cfg)?;
        rec.report.subproblems += match cfg.w_variant {
            WVariant::PerCoordinate => ds.d(),
            WVariant::Aggregate => 1,
        };
        rec.record("w_bounds", 0, &m0, state.snapshot());
        b_bounds(ds, state, opts)?;
        rec.report.subproblems += 2;
        rec.record("b_bounds", 0, &m0, state.snapshot());
    }
    let mut iter = 0;
    loop {
        iter += 1;
        let before = state.snapshot();
        rec.report.skipped_bounds += lagrangian_w_bounds(ds, state, opts)?;
        rec.record("lagrangian_w", iter, &m0, state.snapshot());
        if opts.rerun_w_lps {
            w_step(ds, state, cfg)?;
            rec.record("w_bounds", iter, &m0, state.snapshot());
        }
        b_bounds(ds, state, opts)?;
        rec.record("b_bounds", iter, &m0, state.snapshot());
        match (&cfg.m_variant, &clusters) {
            (MVariantL1::PerInstance, _) => {
                update_m_variant_i(ds, state, opts)?;
                rec.report.subproblems += ds.n();
            }
            (MVariantL1::PerClass, _) => {
                update_m_variant_ii(ds, state, opts)?;
                rec.report.subproblems += 2;
            }
            (MVariantL1::PerCluster(_), Some(c)) => {
                update_m_variant_iii(ds, state, c, opts)?;
                rec.report.subproblems += c.n_clusters();
            }
            (MVariantL1::PerCluster(_), None) => unreachable!(),
        }
        rec.record("m_update", iter, &m0, state.snapshot());
        if !improved(&before, &state.snapshot(), opts.eps_impr) || iter >= opts.max_iter {
            break;
        }
    }
    rec.report.iterations = iter;
    Ok(rec.finish())
}

/// Initial bounds followed by the full tightening loop.
pub fn run_algorithm2(
    ds: &Dataset,
    c: f64,
    cfg: &Alg2Config,
) -> Result<(RampLossModel, BoundsStateL1, StrategyReport)> {
    let start = std::time::Instant::now();
    let mut state = BoundsStateL1::new(ds, c)?;
    let mut report = tighten_l1(ds, &mut state, cfg)?;
    report.t_strategy = start.elapsed().as_secs_f64();
    Ok((state.model(), state, report))
}
