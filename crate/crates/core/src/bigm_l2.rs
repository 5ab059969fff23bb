//! Big-M tightening for the l2-norm model. The bounding region carries the
//! convex quadratic objective cut, so every auxiliary problem goes through
//! the interior-point backend.

use log::debug;

use crate::cluster::{cluster_per_class, Clustering};
use crate::data::{Dataset, DistNorm};
use crate::error::{Error, Result};
use crate::model::{
    add_upper_bound_cut, build_relaxation, build_shifted, improved_feasible_point, FeasiblePoint,
    Layout, Norm, RampLossModel, ShiftSign,
};
use crate::solver::{solve_qp, ConvexProblem, Relation, RowTag, Solution, Status};
use crate::tighten::{
    cut_rhs, improved, maximize_all, ClusterConfig, LinearObjective, Recorder, Snapshot, StrategyReport,
    TightenOptions, CONIC_PAD, LP_PAD,
};

#[derive(Debug, Clone, PartialEq)]
pub struct BoundsStateL2 {
    pub c: f64,
    pub ub_global: f64,
    pub incumbent: FeasiblePoint,
    pub big_m: Vec<f64>,
    pub m_initial: Vec<f64>,
    pub w_lb: Vec<f64>,
    pub w_ub: Vec<f64>,
    pub b_lb: f64,
    pub b_ub: f64,
}

impl BoundsStateL2 {
    pub fn new(ds: &Dataset, c: f64) -> Result<BoundsStateL2> {
        let (ub, point) = initial_upper_bound_l2(ds, c)?;
        let (big_m, w_lb, w_ub) = initial_bigm_l2(ds, ub);
        Ok(BoundsStateL2 {
            c,
            ub_global: ub,
            incumbent: point,
            m_initial: big_m.clone(),
            big_m,
            w_lb,
            w_ub,
            b_lb: f64::NEG_INFINITY,
            b_ub: f64::INFINITY,
        })
    }

    pub fn model(&self) -> RampLossModel {
        let mut m = RampLossModel::new(Norm::L2, self.c, self.big_m.clone(), self.w_lb.len());
        m.w_lb = self.w_lb.clone();
        m.w_ub = self.w_ub.clone();
        m.b_lb = self.b_lb;
        m.b_ub = self.b_ub;
        m
    }

    /// `max(|LB_wk|, |UB_wk|)`.
    pub fn v_ub(&self) -> Vec<f64> {
        self.w_lb.iter().zip(&self.w_ub).map(|(l, u)| l.abs().max(u.abs())).collect()
    }

    pub fn snapshot(&self) -> Snapshot {
        let mut bounds: Vec<f64> = self.w_ub.clone();
        bounds.extend(self.w_lb.iter().map(|v| -v));
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

    fn shrink_box(&mut self, k: usize, lo: f64, hi: f64) {
        self.w_lb[k] = self.w_lb[k].max(lo);
        self.w_ub[k] = self.w_ub[k].min(hi);
    }
}

pub fn initial_upper_bound_l2(ds: &Dataset, c: f64) -> Result<(f64, FeasiblePoint)> {
    let point = improved_feasible_point(ds, Norm::L2, c)?;
    Ok((point.objective, point))
}

/// `M_i = dist_2(i) sqrt(2 UB)` and the box `|w_k| <= sqrt(2 UB)`.
pub fn initial_bigm_l2(ds: &Dataset, ub: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let r = (2.0 * ub.max(0.0)).sqrt();
    let m = ds.same_class_max_distances(DistNorm::L2).iter().map(|d| d * r).collect();
    (m, vec![-r; ds.d()], vec![r; ds.d()])
}

/// Maximise and minimise each `w_k` over the bounding region.
pub fn tighten_w_box(ds: &Dataset, state: &mut BoundsStateL2, opts: &TightenOptions) -> Result<()> {
    let (region, layout) = state.region(ds)?;
    let n = layout.n_vars();
    let mut objs = Vec::with_capacity(2 * ds.d());
    for k in 0..ds.d() {
        objs.push(LinearObjective::unit(n, layout.w(k), 1.0));
        objs.push(LinearObjective::unit(n, layout.w(k), -1.0));
    }
    let vals = maximize_all(&region, &objs, opts.jobs, "w box")?;
    for k in 0..ds.d() {
        let hi = vals[2 * k].unwrap_or(f64::INFINITY);
        let lo = vals[2 * k + 1].map_or(f64::NEG_INFINITY, |v| -v);
        state.shrink_box(k, lo, hi);
    }
    Ok(())
}

pub fn b_bounds_l2(ds: &Dataset, state: &mut BoundsStateL2, opts: &TightenOptions) -> Result<(f64, f64)> {
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

/// Relaxation optimum with margin multipliers.
#[derive(Debug, Clone)]
pub struct RelaxationDualsL2 {
    pub objective: f64,
    pub primal: Vec<f64>,
    pub alpha: Vec<f64>,
    pub layout: Layout,
}

fn margin_duals(ds: &Dataset, p: &ConvexProblem, sol: &Solution) -> Vec<f64> {
    (0..ds.n())
        .map(|i| p.row_index(RowTag::Margin(i)).map_or(0.0, |r| sol.duals[r].max(0.0)))
        .collect()
}

pub fn relaxation_duals_l2(ds: &Dataset, model: &RampLossModel) -> Result<RelaxationDualsL2> {
    let (p, layout) = build_relaxation(ds, model)?;
    let sol = solve_qp(&p)?;
    if sol.status != Status::Optimal {
        return Err(Error::numerical("tighten", format!("relaxation returned {:?}", sol.status)));
    }
    Ok(RelaxationDualsL2 {
        objective: sol.objective,
        alpha: margin_duals(ds, &p, &sol),
        primal: sol.primal,
        layout,
    })
}

/// Interval `s -+ sqrt((w~ - s)^2 - 2 (Z - UB))` with a rounding margin.
/// The flag reports a negative discriminant clamped to zero.
pub fn lagrangian_interval(ub: f64, z: f64, w_tilde: f64, s: f64) -> (f64, f64, bool) {
    let tol = LP_PAD * (1.0 + z.abs());
    let raw = (w_tilde - s).powi(2) - 2.0 * (z - ub);
    let clamped = raw < 0.0;
    let r = (raw.max(0.0) + 2.0 * tol).sqrt();
    let pad = CONIC_PAD * (1.0 + s.abs() + r);
    (s - r - pad, s + r + pad, clamped)
}

/// Box update from the Lagrangian relaxation of the margin rows. Returns
/// the number of clamped discriminants.
pub fn lagrangian_w_bounds_l2(ds: &Dataset, state: &mut BoundsStateL2, opts: &TightenOptions) -> Result<usize> {
    let model = state.model();
    let base = relaxation_duals_l2(ds, &model)?;
    let mut clamped = 0;
    for k in 0..ds.d() {
        let w_tilde = base.primal[base.layout.w(k)];
        let (z, alpha) = if opts.explicit_shifted {
            shifted_duals(ds, &model, k, w_tilde)?.unwrap_or((base.objective, base.alpha.clone()))
        } else {
            (base.objective, base.alpha.clone())
        };
        let s: f64 = (0..ds.n()).map(|i| alpha[i] * ds.y[i] * ds.x[i][k]).sum();
        let (lo, hi, was_clamped) = lagrangian_interval(state.ub_global, z, w_tilde, s);
        if was_clamped {
            debug!("negative discriminant clamped for coordinate {k}");
            clamped += 1;
        }
        state.shrink_box(k, lo, hi);
    }
    Ok(clamped)
}

fn shifted_duals(ds: &Dataset, model: &RampLossModel, k: usize, shift: f64) -> Result<Option<(f64, Vec<f64>)>> {
    let (p, layout) = build_shifted(ds, model, k, ShiftSign::None, shift)?;
    let sol = solve_qp(&p)?;
    if sol.status != Status::Optimal || sol.primal[layout.w(k)].abs() > 1e-6 * (1.0 + shift.abs()) {
        return Ok(None);
    }
    Ok(Some((sol.objective, margin_duals(ds, &p, &sol))))
}

/// Which instances a per-instance update touches.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InstanceFilter {
    All,
    /// Only `M_i` strictly above the median of the current M vector.
    AboveMedian,
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let m = v.len();
    if m % 2 == 1 {
        v[m / 2]
    } else {
        0.5 * (v[m / 2 - 1] + v[m / 2])
    }
}

/// Instances selected by `filter` for the current M vector.
pub fn selected_instances(big_m: &[f64], filter: InstanceFilter) -> Vec<usize> {
    match filter {
        InstanceFilter::All => (0..big_m.len()).collect(),
        InstanceFilter::AboveMedian => {
            let med = median(big_m);
            (0..big_m.len()).filter(|&i| big_m[i] > med).collect()
        }
    }
}

/// Per-instance subproblems `max 1 - xi_i - y_i (w.x_i + b)`.
pub fn update_m_variant_i_l2(
    ds: &Dataset,
    state: &mut BoundsStateL2,
    filter: InstanceFilter,
    opts: &TightenOptions,
) -> Result<Vec<f64>> {
    let (region, layout) = state.region(ds)?;
    let chosen = selected_instances(&state.big_m, filter);
    let objs: Vec<_> = chosen
        .iter()
        .map(|&i| {
            let mut coeffs: Vec<f64> = layout.margin_coeffs(ds, i).into_iter().map(|a| -a).collect();
            coeffs[layout.xi(i)] = -1.0;
            LinearObjective { coeffs, constant: 1.0 }
        })
        .collect();
    let vals = maximize_all(&region, &objs, opts.jobs, "M update")?;
    for (&i, v) in chosen.iter().zip(vals) {
        if let Some(v) = v {
            state.lower_m(i, v);
        }
    }
    Ok(state.big_m.clone())
}

/// Append the `v` block with `-w <= v`, `w <= v`, `0 <= v <= v_ub`.
pub fn with_abs_block(p: &ConvexProblem, layout: &Layout, v_ub: &[f64]) -> (ConvexProblem, Layout) {
    let d = layout.d;
    let mut q = p.clone();
    let pad = |v: &mut Vec<f64>| v.extend(std::iter::repeat_n(0.0, d));
    pad(&mut q.linear_cost);
    pad(&mut q.quadratic_diag);
    for c in q.constraints.iter_mut() {
        pad(&mut c.coeffs);
    }
    for c in q.quadratic_constraints.iter_mut() {
        pad(&mut c.coeffs);
        pad(&mut c.quad_diag);
    }
    let mut ext = *layout;
    ext.with_v = true;
    q.variable_names = ext.names();
    q.lower.extend(std::iter::repeat_n(0.0, d));
    q.upper.extend(v_ub.iter().copied());
    let m = ext.n_vars();
    for k in 0..d {
        let mut a = vec![0.0; m];
        a[ext.v(k)] = 1.0;
        a[ext.w(k)] = 1.0;
        q.add_row(a, Relation::Ge, 0.0, RowTag::AbsLower(k));
        let mut a = vec![0.0; m];
        a[ext.v(k)] = 1.0;
        a[ext.w(k)] = -1.0;
        q.add_row(a, Relation::Ge, 0.0, RowTag::AbsUpper(k));
    }
    (q, ext)
}

/// Group subproblems `max 1 + sum_k v_k max_{i in c} |x_ik| -+ b`.
pub fn update_m_clustered_l2(
    ds: &Dataset,
    state: &mut BoundsStateL2,
    clusters: &Clustering,
    opts: &TightenOptions,
) -> Result<Vec<f64>> {
    let (base, layout) = state.region(ds)?;
    let (region, ext) = with_abs_block(&base, &layout, &state.v_ub());
    let members = clusters.members();
    let objs: Vec<_> = members
        .iter()
        .enumerate()
        .map(|(c, m)| {
            let mut o = LinearObjective::zero(ext.n_vars());
            o.constant = 1.0;
            for k in 0..ds.d() {
                o.coeffs[ext.v(k)] = m.iter().map(|&i| ds.x[i][k].abs()).fold(0.0, f64::max);
            }
            o.coeffs[ext.b()] = -clusters.class_of[c];
            o
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

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MVariantL2 {
    PerInstance,
    /// Per instance, restricted to M above the median.
    PerInstanceAboveMedian,
    PerClass,
    PerCluster(ClusterConfig),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Alg3Config {
    pub m_variant: MVariantL2,
    pub options: TightenOptions,
}

/// The outer loop on an existing state: box subproblems, b bounds,
/// Lagrangian box, M update, repeated while the bounds improve.
pub fn tighten_l2(ds: &Dataset, state: &mut BoundsStateL2, cfg: &Alg3Config) -> Result<StrategyReport> {
    let mut rec = Recorder::new();
    let opts = &cfg.options;
    let clusters = match cfg.m_variant {
        MVariantL2::PerCluster(cc) => {
            let t = std::time::Instant::now();
            let c = cluster_per_class(ds, cc.fraction, cc.algo, cc.seed)?;
            rec.report.t_cluster = t.elapsed().as_secs_f64();
            Some(c)
        }
        MVariantL2::PerClass => Some(Clustering::by_class(ds)),
        _ => None,
    };
    let m0 = state.m_initial.clone();
    rec.record("initial", 0, &m0, state.snapshot());
    let mut iter = 0;
    loop {
        iter += 1;
        let before = state.snapshot();
        tighten_w_box(ds, state, opts)?;
        rec.report.subproblems += 2 * ds.d();
        rec.record("w_box", iter, &m0, state.snapshot());
        b_bounds_l2(ds, state, opts)?;
        rec.report.subproblems += 2;
        rec.record("b_bounds", iter, &m0, state.snapshot());
        rec.report.clamped += lagrangian_w_bounds_l2(ds, state, opts)?;
        rec.report.subproblems += 1;
        rec.record("lagrangian_w", iter, &m0, state.snapshot());
        match (&cfg.m_variant, &clusters) {
            (MVariantL2::PerInstance, _) => {
                update_m_variant_i_l2(ds, state, InstanceFilter::All, opts)?;
                rec.report.subproblems += ds.n();
            }
            (MVariantL2::PerInstanceAboveMedian, _) => {
                rec.report.subproblems += selected_instances(&state.big_m, InstanceFilter::AboveMedian).len();
                update_m_variant_i_l2(ds, state, InstanceFilter::AboveMedian, opts)?;
            }
            (_, Some(c)) => {
                update_m_clustered_l2(ds, state, c, opts)?;
                rec.report.subproblems += c.n_clusters();
            }
            (_, None) => unreachable!(),
        }
        rec.record("m_update", iter, &m0, state.snapshot());
        if !improved(&before, &state.snapshot(), opts.eps_impr) || iter >= opts.max_iter {
            break;
        }
    }
    rec.report.iterations = iter;
    Ok(rec.finish())
}

pub fn run_algorithm3(
    ds: &Dataset,
    c: f64,
    cfg: &Alg3Config,
) -> Result<(RampLossModel, BoundsStateL2, StrategyReport)> {
    let start = std::time::Instant::now();
    let mut state = BoundsStateL2::new(ds, c)?;
    let mut report = tighten_l2(ds, &mut state, cfg)?;
    report.t_strategy = start.elapsed().as_secs_f64();
    Ok((state.model(), state, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raw_ex1() -> Dataset {
        Dataset::new(
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
        .unwrap()
    }

    fn ex1() -> Dataset {
        raw_ex1().scale_to_unit_box()
    }

    fn opts() -> TightenOptions {
        TightenOptions::default()
    }

    #[test]
    fn initial_values() {
        let raw = raw_ex1();
        let (m, lo, hi) = initial_bigm_l2(&raw, 23.6);
        assert!((m[2] - 72f64.sqrt() * 47.2f64.sqrt()).abs() < 1e-9);
        assert_eq!(lo, vec![-(47.2f64.sqrt()); 2]);
        assert_eq!(hi, vec![47.2f64.sqrt(); 2]);
        let (m0, lo0, hi0) = initial_bigm_l2(&raw, 0.0);
        assert!(m0.iter().chain(&lo0).chain(&hi0).all(|&v| v == 0.0));
    }

    #[test]
    fn box_shrinks_and_is_idempotent() {
        let ds = ex1();
        let mut s = BoundsStateL2::new(&ds, 10.0).unwrap();
        let r = (2.0 * s.ub_global).sqrt();
        tighten_w_box(&ds, &mut s, &opts()).unwrap();
        assert!((0..2).any(|k| s.w_ub[k] < r - 1e-6 || s.w_lb[k] > -r + 1e-6));
        for k in 0..2 {
            assert!(s.w_ub[k] <= r && s.w_lb[k] >= -r);
        }
        let before = s.clone();
        tighten_w_box(&ds, &mut s, &opts()).unwrap();
        for k in 0..2 {
            assert!((s.w_ub[k] - before.w_ub[k]).abs() < 1e-5);
            assert!(s.w_ub[k] <= before.w_ub[k]);
        }
    }

    #[test]
    fn interval_pins_at_zero_discriminant() {
        let (lo, hi, clamped) = lagrangian_interval(5.0, 5.0, 0.3, 0.3);
        assert!(!clamped);
        assert!((lo - 0.3).abs() < 1e-3 && (hi - 0.3).abs() < 1e-3);
        let (_, _, clamped) = lagrangian_interval(5.0, 5.1, 0.0, 0.0);
        assert!(clamped);
    }

    #[test]
    fn median_filter() {
        let m = [1.0, 5.0, 3.0, 4.0, 2.0];
        assert_eq!(selected_instances(&m, InstanceFilter::AboveMedian), vec![1, 3]);
        assert_eq!(selected_instances(&[1.0, 2.0, 3.0, 4.0], InstanceFilter::AboveMedian), vec![2, 3]);
        assert_eq!(selected_instances(&m, InstanceFilter::All).len(), 5);
    }

    #[test]
    fn variant_orderings() {
        let ds = ex1();
        let mut s = BoundsStateL2::new(&ds, 10.0).unwrap();
        tighten_w_box(&ds, &mut s, &opts()).unwrap();
        b_bounds_l2(&ds, &mut s, &opts()).unwrap();
        let m1 = update_m_variant_i_l2(&ds, &mut s.clone(), InstanceFilter::All, &opts()).unwrap();
        let m2 = update_m_clustered_l2(&ds, &mut s.clone(), &Clustering::by_class(&ds), &opts()).unwrap();
        let singles = update_m_clustered_l2(&ds, &mut s.clone(), &Clustering::singletons(&ds), &opts()).unwrap();
        for i in 0..5 {
            assert!(m1[i] <= m2[i] + 1e-6 && m1[i] <= singles[i] + 1e-6);
        }
        assert!((0..5).any(|i| singles[i] > m1[i] + 1e-4), "{singles:?} vs {m1:?}");
        let before = s.big_m.clone();
        let half = update_m_variant_i_l2(&ds, &mut s, InstanceFilter::AboveMedian, &opts()).unwrap();
        let chosen = selected_instances(&before, InstanceFilter::AboveMedian);
        for i in 0..5 {
            if !chosen.contains(&i) {
                assert_eq!(half[i], before[i]);
            }
        }
    }

    #[test]
    fn loop_keeps_optimum_feasible() {
        let ds = ex1();
        for m in [MVariantL2::PerInstance, MVariantL2::PerInstanceAboveMedian, MVariantL2::PerClass] {
            let cfg = Alg3Config {
                m_variant: m,
                options: opts(),
            };
            let (model, state, report) = run_algorithm3(&ds, 10.0, &cfg).unwrap();
            assert!(report.iterations >= 1);
            let (_, opt) =
                crate::bnb::brute_force_oracle(&ds, Norm::L2, 10.0, 14, crate::bnb::OracleEngine::Default).unwrap();
            assert!(opt.model_violation(&ds, &model).unwrap() < 1e-5, "{m:?}");
            for i in 0..5 {
                assert!(state.big_m[i] <= state.m_initial[i]);
            }
            for k in 0..2 {
                assert!(state.w_lb[k] <= state.w_ub[k]);
            }
        }
    }
}
