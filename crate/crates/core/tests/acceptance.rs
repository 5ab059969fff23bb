//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! `cargo test -p rampsvm --test acceptance` runs everything; pass criterion
//! numbers (`-- 1 4`) to run a subset. The desk-scale timing criterion runs
//! a reduced MIP sweep unless `RAMPSVM_ACCEPTANCE_FULL` is set.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rampsvm::bigm_l1::{
    b_bounds, tighten_w_variant1, tighten_w_variant2, update_m_clustered, update_m_variant_i, update_m_variant_ii,
    update_m_variant_iii, BoundsStateL1,
};
use rampsvm::bigm_l2::{
    b_bounds_l2, tighten_w_box, update_m_clustered_l2, update_m_variant_i_l2, BoundsStateL2, InstanceFilter,
};
use rampsvm::bnb::{brute_force_oracle, relative_gap, solve_mip, BnbOptions, MipStatus, OracleEngine, ORACLE_MAX_N};
use rampsvm::cluster::{cluster_per_class, ClusterAlgo, Clustering};
use rampsvm::data::Dataset;
use rampsvm::model::{build_relaxation, build_rl_mip, build_shifted, shifted_column, FeasiblePoint, Norm, RampLossModel, ShiftSign};
use rampsvm::report::{m_improvement, read_results, write_results};
use rampsvm::solver::{
    certify, solve_interior, solve_lp, solve_qp, ConvexProblem, Relation, RowTag, Sense, Solution, Status,
};
use rampsvm::strategy::{run_experiment, run_strategy, StrategySpec};
use rampsvm::tighten::TightenOptions;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)*) => {
        {
            let holds: bool = $cond;
            if !holds {
                return Err(format!($($msg)*));
            }
        }
    };
}

fn ok<T, E: std::fmt::Display>(r: Result<T, E>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

fn ids_for(norm: Norm) -> Vec<StrategySpec> {
    let mut all = vec!["init".parse::<StrategySpec>().unwrap()];
    all.extend(StrategySpec::all_for(norm, 0.1));
    all.extend(StrategySpec::all_for(norm, 0.4).into_iter().filter(|s| s.to_string().contains("III")));
    all
}

fn mip_value(ds: &Dataset, model: &RampLossModel, warm: Option<&FeasiblePoint>) -> Result<(f64, MipStatus), String> {
    let r = ok(solve_mip(ds, model, &BnbOptions::default(), warm))?;
    Ok((r.objective(), r.status))
}

/// Enumerate every z vector of a big-M model and solve the continuous part
/// with the interior-point backend.
fn enumerate_model(ds: &Dataset, model: &RampLossModel) -> Result<f64, String> {
    let mip = ok(build_rl_mip(ds, model))?;
    let n = ds.n();
    let mut best = f64::INFINITY;
    for mask in 0u32..(1 << n) {
        let mut p = mip.problem.clone();
        for i in 0..n {
            let v = f64::from((mask >> i) & 1);
            p.lower[mip.layout.z(i)] = v;
            p.upper[mip.layout.z(i)] = v;
        }
        let s = ok(solve_interior(&p))?;
        if s.status == Status::Optimal {
            best = best.min(s.objective);
        }
    }
    Ok(best)
}

// 1 -------------------------------------------------------------------------

fn criterion1() -> Outcome {
    let ds = common::example1();
    let (oracle, _) = ok(brute_force_oracle(&ds, Norm::L1, 10.0, ORACLE_MAX_N, OracleEngine::Interior))?;
    ensure!(close(oracle, 23.0, 1e-6), "oracle gives {oracle}, expected 23");
    let reference = FeasiblePoint::new(
        Norm::L1,
        10.0,
        vec![-3.0, 0.0],
        2.0,
        vec![0.0; 5],
        vec![false, false, true, false, false],
    );
    ensure!(close(reference.objective, 23.0, 1e-12), "reference point objective {}", reference.objective);
    let mut slowest: f64 = 0.0;
    let mut count = 0;
    for spec in ids_for(Norm::L1).into_iter().filter(|s| s.norm() == Some(Norm::L1)) {
        let start = Instant::now();
        let (row, mip, outcome) = ok(run_experiment(&ds, Norm::L1, 10.0, &spec, &BnbOptions::default()))?;
        let elapsed = start.elapsed().as_secs_f64();
        slowest = slowest.max(elapsed);
        ensure!(mip.status == MipStatus::Optimal, "{spec}: status {:?}", mip.status);
        ensure!(close(row.objective, 23.0, 1e-6), "{spec}: objective {}", row.objective);
        let viol = ok(reference.model_violation(&ds, &outcome.model))?;
        ensure!(viol <= 1e-6, "{spec}: reference point violates the strengthened model by {viol}");
        ensure!(elapsed < 1.0, "{spec}: took {elapsed:.3} s");
        count += 1;
    }
    Ok(format!("oracle 23, {count} Algorithm 2 variants give 23, reference point feasible, slowest {slowest:.3} s"))
}

// 2 -------------------------------------------------------------------------

fn criterion2() -> Outcome {
    let ds = common::example1();
    let (oracle, _) = ok(brute_force_oracle(&ds, Norm::L2, 10.0, ORACLE_MAX_N, OracleEngine::Default))?;
    ensure!(close(oracle, 23.6, 1e-5), "oracle gives {oracle}, expected 23.6");
    let mut slowest: f64 = 0.0;
    let mut count = 0;
    for spec in ids_for(Norm::L2).into_iter().filter(|s| s.norm() == Some(Norm::L2)) {
        let start = Instant::now();
        let (row, mip, _) = ok(run_experiment(&ds, Norm::L2, 10.0, &spec, &BnbOptions::default()))?;
        let elapsed = start.elapsed().as_secs_f64();
        slowest = slowest.max(elapsed);
        ensure!(mip.status == MipStatus::Optimal, "{spec}: status {:?}", mip.status);
        ensure!(close(row.objective, 23.6, 1e-5), "{spec}: objective {}", row.objective);
        ensure!(elapsed < 5.0, "{spec}: took {elapsed:.3} s");
        count += 1;
    }
    Ok(format!("oracle 23.6, {count} Algorithm 3 variants give 23.6, slowest {slowest:.3} s"))
}

// 3 -------------------------------------------------------------------------

fn criterion3() -> Outcome {
    let ds = common::example1();
    let mut notes = Vec::new();
    for (norm, reported) in [(Norm::L1, 25.8333), (Norm::L2, 25.9333)] {
        let (truth, _) = ok(brute_force_oracle(&ds, norm, 10.0, ORACLE_MAX_N, OracleEngine::Default))?;
        let model = RampLossModel::new(norm, 10.0, vec![5.0; 5], 2);
        let (bnb, status) = mip_value(&ds, &model, None)?;
        ensure!(status == MipStatus::Optimal, "{norm:?}: status {status:?}");
        let enumerated = enumerate_model(&ds, &model)?;
        ensure!(
            close(bnb, enumerated, 1e-5),
            "{norm:?}: branch-and-bound {bnb} vs enumeration {enumerated}"
        );
        ensure!(bnb > truth + 1e-6, "{norm:?}: M=5 optimum {bnb} is not above the true optimum {truth}");
        ensure!(close(bnb, reported, 1e-4), "{norm:?}: M=5 optimum {bnb}, reported {reported}");
        notes.push(format!("{}: {:.6} > {}", norm.as_str(), bnb, truth));
    }
    Ok(format!("M=5 optima {}", notes.join(", ")))
}

// 4 -------------------------------------------------------------------------

fn criterion4() -> Outcome {
    let start = Instant::now();
    let mut runs = 0;
    for seed in 0..50u64 {
        let ds = common::small_instance(1000 + seed, 10, 3);
        let c = [0.1, 1.0, 10.0][(seed % 3) as usize];
        for norm in [Norm::L1, Norm::L2] {
            let engine = match norm {
                Norm::L1 => OracleEngine::Interior,
                Norm::L2 => OracleEngine::Default,
            };
            let (truth, _) = ok(brute_force_oracle(&ds, norm, c, ORACLE_MAX_N, engine))?;
            let tol = match norm {
                Norm::L1 => 1e-6,
                Norm::L2 => 1e-5,
            } * (1.0 + truth.abs());
            for spec in ids_for(norm).into_iter().map(|s| s.with_seed(seed)) {
                if spec.norm().is_some_and(|n| n != norm) {
                    continue;
                }
                let (row, mip, _) = ok(run_experiment(&ds, norm, c, &spec, &BnbOptions::default()))
                    .map_err(|e| format!("{} C={c} {spec}: {e}", ds.name))?;
                ensure!(mip.status == MipStatus::Optimal, "{} C={c} {spec}: {:?}", ds.name, mip.status);
                ensure!(
                    close(row.objective, truth, tol),
                    "{} (n={}, d={}) C={c} {} {spec}: MIP {} vs oracle {truth}",
                    ds.name,
                    ds.n(),
                    ds.d(),
                    norm.as_str(),
                    row.objective
                );
                runs += 1;
            }
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    ensure!(elapsed < 300.0, "suite took {elapsed:.1} s");
    Ok(format!("50 instances, {runs} strategy runs match the oracle, {elapsed:.1} s"))
}

// 5 -------------------------------------------------------------------------

fn check_monotone(label: &str, spec: &StrategySpec, ds: &Dataset, norm: Norm, c: f64) -> Result<usize, String> {
    let outcome = ok(run_strategy(ds, norm, c, spec))?;
    let phases = &outcome.report.phases;
    let tol = |v: f64| 1e-9 * v.abs().max(1.0);
    for pair in phases.windows(2) {
        let (a, b) = (&pair[0].snapshot, &pair[1].snapshot);
        let (sa, sb): (f64, f64) = (a.big_m.iter().sum(), b.big_m.iter().sum());
        ensure!(
            sb <= sa + tol(sa),
            "{label} {spec}: sum M rose from {sa} to {sb} ({} -> {})",
            pair[0].phase,
            pair[1].phase
        );
        for (j, (x, y)) in a.bounds.iter().zip(&b.bounds).enumerate() {
            ensure!(
                *y <= *x + tol(*x) || x.is_infinite() && *x > 0.0,
                "{label} {spec}: bound {j} loosened from {x} to {y} ({} -> {})",
                pair[0].phase,
                pair[1].phase
            );
        }
        for (i, (x, y)) in a.big_m.iter().zip(&b.big_m).enumerate() {
            ensure!(*y <= *x + tol(*x), "{label} {spec}: M_{i} rose from {x} to {y}");
        }
    }
    for (i, (m0, m1)) in outcome.m_initial.iter().zip(&outcome.model.big_m).enumerate() {
        ensure!(*m1 <= *m0 + tol(*m0), "{label} {spec}: final M_{i} = {m1} above initial {m0}");
    }
    Ok(phases.len())
}

fn criterion5() -> Outcome {
    let mut cases = vec![(common::example1(), 10.0)];
    for seed in 0..6u64 {
        let ds = common::synthetic(12 + 4 * seed as usize, 2 + (seed % 2) as usize, 50 + seed);
        cases.push((ds, [0.1, 1.0, 10.0][(seed % 3) as usize]));
    }
    let mut checked = 0;
    let mut records = 0;
    for (ds, c) in &cases {
        for norm in [Norm::L1, Norm::L2] {
            for spec in ids_for(norm).into_iter().filter(|s| s.norm() == Some(norm)) {
                records += check_monotone(&ds.name, &spec, ds, norm, *c)?;
                checked += 1;
            }
        }
    }
    Ok(format!("{checked} strategy runs, {records} phase records, no bound ever loosened"))
}

// 6 -------------------------------------------------------------------------

fn le_all(a: &[f64], b: &[f64], tol: f64) -> Option<usize> {
    a.iter().zip(b).position(|(x, y)| *x > *y + tol * (1.0 + y.abs()))
}

fn criterion6() -> Outcome {
    let opts = TightenOptions::default();
    let mut datasets = vec![common::example1()];
    for seed in 0..4u64 {
        datasets.push(common::synthetic(20, 2 + (seed % 2) as usize, 70 + seed));
    }
    let mut l2_singleton_differs = false;
    for ds in &datasets {
        let c = 1.0;
        // l1
        let mut base = ok(BoundsStateL1::new(ds, c))?;
        ok(tighten_w_variant2(ds, &mut base, &opts))?;
        ok(b_bounds(ds, &mut base, &opts))?;
        let clusters = ok(cluster_per_class(ds, 0.3, ClusterAlgo::KMeans, 1))?;
        let m1 = ok(update_m_variant_i(ds, &mut base.clone(), &opts))?;
        let m3 = ok(update_m_variant_iii(ds, &mut base.clone(), &clusters, &opts))?;
        let m2 = ok(update_m_variant_ii(ds, &mut base.clone(), &opts))?;
        let ms = ok(update_m_clustered(ds, &mut base.clone(), &Clustering::singletons(ds), &opts))?;
        if let Some(i) = le_all(&m1, &m3, 1e-9) {
            return Err(format!("{} l1: M_I[{i}] = {} > M_III[{i}] = {}", ds.name, m1[i], m3[i]));
        }
        if let Some(i) = le_all(&m3, &m2, 1e-9) {
            return Err(format!("{} l1: M_III[{i}] = {} > M_II[{i}] = {}", ds.name, m3[i], m2[i]));
        }
        for i in 0..ds.n() {
            ensure!(
                close(m1[i], ms[i], 1e-7 * (1.0 + m1[i].abs())),
                "{} l1: singleton clusters give M_{i} = {} vs Variant I {}",
                ds.name,
                ms[i],
                m1[i]
            );
        }
        // l2
        let mut base = ok(BoundsStateL2::new(ds, c))?;
        ok(tighten_w_box(ds, &mut base, &opts))?;
        ok(b_bounds_l2(ds, &mut base, &opts))?;
        let m1 = ok(update_m_variant_i_l2(ds, &mut base.clone(), InstanceFilter::All, &opts))?;
        for (what, cl) in [
            ("II", Clustering::by_class(ds)),
            ("III", clusters.clone()),
            ("singletons", Clustering::singletons(ds)),
        ] {
            let mc = ok(update_m_clustered_l2(ds, &mut base.clone(), &cl, &opts))?;
            if let Some(i) = le_all(&m1, &mc, 1e-7) {
                return Err(format!("{} l2: M_I[{i}] = {} > M_{what}[{i}] = {}", ds.name, m1[i], mc[i]));
            }
            if what == "singletons" && m1.iter().zip(&mc).any(|(a, b)| *b > *a + 1e-6 * (1.0 + a.abs())) {
                l2_singleton_differs = true;
            }
        }
    }
    ensure!(
        l2_singleton_differs,
        "l2 singleton clusters matched Variant I on every instance; expected a strict gap somewhere"
    );
    Ok(format!(
        "{} datasets: l1 I <= III <= II and singletons == I; l2 I <= clustered, singletons strictly looser somewhere",
        datasets.len()
    ))
}

// 7 -------------------------------------------------------------------------

fn margin_alpha(ds: &Dataset, p: &ConvexProblem, sol: &Solution) -> Vec<f64> {
    (0..ds.n())
        .map(|i| p.row_index(RowTag::Margin(i)).map_or(0.0, |r| sol.duals[r].max(0.0)))
        .collect()
}

fn fixed(p: &ConvexProblem, col: usize, v: f64) -> ConvexProblem {
    let mut q = p.clone();
    q.lower[col] = v;
    q.upper[col] = v;
    q
}

fn criterion7() -> Outcome {
    let ds = common::example1();
    let c = 10.0;
    let opts = TightenOptions::default();
    let mut checks = 0;
    let mut worst = f64::NEG_INFINITY;

    // l1, both shifted models per coordinate
    let mut s1 = ok(BoundsStateL1::new(&ds, c))?;
    ok(tighten_w_variant1(&ds, &mut s1, &opts))?;
    let model = s1.model();
    let (relax, layout) = ok(build_relaxation(&ds, &model))?;
    let base = ok(solve_lp(&relax))?;
    ensure!(base.status == Status::Optimal, "l1 relaxation {:?}", base.status);
    for k in 0..ds.d() {
        for (sign, dir) in [(ShiftSign::Plus, 1.0), (ShiftSign::Minus, -1.0)] {
            let col = ok(shifted_column(&layout, k, sign))?;
            let w_tilde = base.primal[col];
            let (p, _) = ok(build_shifted(&ds, &model, k, sign, w_tilde))?;
            let sol = ok(solve_lp(&p))?;
            ensure!(sol.status == Status::Optimal, "l1 shifted model {:?}", sol.status);
            ensure!(sol.primal[col].abs() <= 1e-9, "shifted optimum not at zero: {}", sol.primal[col]);
            let alpha = margin_alpha(&ds, &p, &sol);
            let s: f64 = (0..ds.n()).map(|i| alpha[i] * ds.y[i] * ds.x[i][k]).sum();
            let slope = 1.0 - dir * s;
            let span = model.pair_ub[k];
            ensure!(span.is_finite(), "pair bound {k} not finite");
            for t in [0.1, 0.3, 0.5, 0.7, 0.9] {
                let w_hat = -w_tilde + t * (span + w_tilde);
                let r = ok(solve_lp(&fixed(&p, col, w_hat)))?;
                if r.status != Status::Optimal {
                    continue;
                }
                let lhs = sol.objective + w_hat * slope;
                worst = worst.max(lhs - r.objective);
                ensure!(
                    lhs <= r.objective + 1e-7,
                    "l1 Lagrangian bound: k={k} {sign:?} w^={w_hat}: {lhs} > {}",
                    r.objective
                );
                checks += 1;
            }
        }
    }

    // l2
    let mut s2 = ok(BoundsStateL2::new(&ds, c))?;
    ok(tighten_w_box(&ds, &mut s2, &opts))?;
    ok(b_bounds_l2(&ds, &mut s2, &opts))?;
    let model = s2.model();
    let (relax, layout) = ok(build_relaxation(&ds, &model))?;
    let base = ok(solve_qp(&relax))?;
    ensure!(base.status == Status::Optimal, "l2 relaxation {:?}", base.status);
    for k in 0..ds.d() {
        let col = layout.w(k);
        let w_tilde = base.primal[col];
        let (p, _) = ok(build_shifted(&ds, &model, k, ShiftSign::None, w_tilde))?;
        let sol = ok(solve_qp(&p))?;
        ensure!(sol.status == Status::Optimal, "l2 shifted model {:?}", sol.status);
        ensure!(sol.primal[col].abs() <= 1e-6, "shifted optimum not at zero: {}", sol.primal[col]);
        let alpha = margin_alpha(&ds, &p, &sol);
        let s: f64 = (0..ds.n()).map(|i| alpha[i] * ds.y[i] * ds.x[i][k]).sum();
        let (lo, hi) = (model.w_lb[k] - w_tilde, model.w_ub[k] - w_tilde);
        for t in [0.1, 0.3, 0.5, 0.7, 0.9] {
            let w_hat = lo + t * (hi - lo);
            let r = ok(solve_qp(&fixed(&p, col, w_hat)))?;
            if r.status != Status::Optimal {
                continue;
            }
            let lhs = sol.objective + w_hat * (0.5 * w_hat + w_tilde - s);
            worst = worst.max(lhs - r.objective);
            ensure!(lhs <= r.objective + 1e-7, "l2 Lagrangian bound: k={k} w^={w_hat}: {lhs} > {}", r.objective);
            checks += 1;
        }
    }
    ensure!(checks == 30, "only {checks} of 30 restricted solves were feasible");
    Ok(format!("{checks} restricted solves, largest lhs - rhs = {worst:.3e}"))
}

// 8 -------------------------------------------------------------------------

fn random_problem(rng: &mut ChaCha8Rng, quadratic: bool) -> ConvexProblem {
    let n = rng.random_range(2..=12);
    let m = rng.random_range(1..=12);
    let sense = if quadratic || rng.random_bool(0.5) { Sense::Minimize } else { Sense::Maximize };
    let mut p = ConvexProblem::new(sense, n);
    let x0: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
    for j in 0..n {
        match rng.random_range(0..4) {
            0 => {
                p.lower[j] = x0[j] - rng.random_range(0.0..2.0);
                p.upper[j] = x0[j] + rng.random_range(0.0..2.0);
            }
            1 => p.lower[j] = x0[j] - rng.random_range(0.0..2.0),
            2 => p.upper[j] = x0[j] + rng.random_range(0.0..2.0),
            _ => {
                p.lower[j] = x0[j] - rng.random_range(0.0..2.0);
                p.upper[j] = x0[j] + rng.random_range(0.0..2.0);
            }
        }
    }
    for _ in 0..m {
        let a: Vec<f64> = (0..n)
            .map(|_| if rng.random_bool(0.7) { rng.random_range(-2.0..2.0) } else { 0.0 })
            .collect();
        let act: f64 = a.iter().zip(&x0).map(|(u, v)| u * v).sum();
        let (rel, rhs) = match rng.random_range(0..5) {
            0 => (Relation::Eq, act),
            1 | 2 => (Relation::Le, act + rng.random_range(0.0..1.0)),
            _ => (Relation::Ge, act - rng.random_range(0.0..1.0)),
        };
        p.add_row(a, rel, rhs, RowTag::Other);
    }
    p.linear_cost = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    if quadratic {
        p.quadratic_diag = (0..n)
            .map(|_| if rng.random_bool(0.8) { rng.random_range(0.1..2.0) } else { 0.0 })
            .collect();
    }
    p
}

/// `ray` keeps every row and bound satisfied and improves a linear objective.
fn valid_ray(p: &ConvexProblem, ray: &[f64]) -> bool {
    let scale = ray.iter().map(|v| v.abs()).fold(0.0, f64::max);
    if scale == 0.0 {
        return false;
    }
    let tol = 1e-9 * scale;
    let rows_ok = p.constraints.iter().all(|c| {
        let a: f64 = c.coeffs.iter().zip(ray).map(|(u, v)| u * v).sum();
        match c.relation {
            Relation::Le => a <= tol,
            Relation::Ge => a >= -tol,
            Relation::Eq => a.abs() <= tol,
        }
    });
    let bounds_ok = (0..p.n_vars()).all(|j| {
        (p.upper[j].is_infinite() || ray[j] <= tol) && (p.lower[j].is_infinite() || ray[j] >= -tol)
    });
    let gain: f64 = p.linear_cost.iter().zip(ray).map(|(u, v)| u * v).sum();
    let improving = match p.sense {
        Sense::Minimize => gain < -tol,
        Sense::Maximize => gain > tol,
    };
    rows_ok && bounds_ok && improving
}

fn criterion8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut optimal = 0;
    let mut unbounded = 0;
    let mut worst_gap: f64 = 0.0;
    for idx in 0..200 {
        let quadratic = idx % 2 == 1;
        let p = random_problem(&mut rng, quadratic);
        let mut sols = vec![("default", ok(solve_qp(&p))?)];
        if !quadratic {
            sols.push(("interior", ok(solve_interior(&p))?));
        }
        ensure!(
            sols.iter().all(|(_, s)| s.status == sols[0].1.status),
            "problem {idx}: backends disagree on status"
        );
        for (route, s) in &sols {
            match s.status {
                Status::Optimal => {
                    let cert = certify(&p, s);
                    ensure!(
                        cert.passes(1e-7, s.objective),
                        "problem {idx} ({route}): residuals {cert:?}"
                    );
                    worst_gap = worst_gap.max(cert.duality_gap.abs());
                }
                Status::Unbounded => {
                    if let Some(ray) = &s.ray {
                        ensure!(valid_ray(&p, ray), "problem {idx} ({route}): ray is not an improving recession direction");
                    } else {
                        ensure!(*route == "interior", "problem {idx} ({route}): unbounded without a ray");
                    }
                }
                Status::Infeasible => return Err(format!("problem {idx} ({route}): reported infeasible")),
            }
        }
        if sols.len() == 2 && sols[0].1.status == Status::Optimal {
            let (a, b) = (sols[0].1.objective, sols[1].1.objective);
            ensure!(close(a, b, 1e-6 * (1.0 + a.abs())), "problem {idx}: simplex {a} vs interior {b}");
        }
        match sols[0].1.status {
            Status::Optimal => optimal += 1,
            _ => unbounded += 1,
        }
    }
    ensure!(optimal >= 150, "only {optimal} of 200 problems were bounded");
    Ok(format!("{optimal} optimal returns certified (+{unbounded} unbounded), largest duality gap {worst_gap:.2e}"))
}

// 9 -------------------------------------------------------------------------

fn criterion9() -> Outcome {
    let full = std::env::var_os("RAMPSVM_ACCEPTANCE_FULL").is_some();
    let dims: &[usize] = if full { &[2, 5, 10] } else { &[2, 10] };
    let c = 1.0;
    let bnb = BnbOptions {
        time_limit: 120.0,
        ..BnbOptions::default()
    };
    let mut slowest = (0.0, String::new());
    let mut mips = Vec::new();
    for &d in dims {
        let ds = common::synthetic(160, d, 1);
        for norm in [Norm::L1, Norm::L2] {
            for spec in ids_for(norm).into_iter().filter(|s| !s.to_string().contains("-0.4")) {
                if spec.norm().is_some_and(|n| n != norm) {
                    continue;
                }
                let outcome = ok(run_strategy(&ds, norm, c, &spec))?;
                let t = outcome.report.t_strategy;
                if t > slowest.0 {
                    slowest = (t, format!("d={d} {spec}"));
                }
                ensure!(t < 60.0, "d={d} {spec}: strategy took {t:.1} s");
                let id = spec.to_string();
                let run_mip = full || id == "alg2-2-I" || id == "alg3-I_v2";
                if !run_mip {
                    continue;
                }
                let r = ok(solve_mip(&ds, &outcome.model, &bnb, Some(&outcome.incumbent)))?;
                ensure!(r.solve_time <= 125.0, "d={d} {spec}: MIP ran {:.1} s", r.solve_time);
                let inc = r.incumbent.as_ref().ok_or(format!("d={d} {spec}: no incumbent"))?;
                let viol = ok(inc.model_violation(&ds, &outcome.model))?;
                ensure!(viol <= 1e-6, "d={d} {spec}: incumbent violates the model by {viol}");
                ensure!(r.best_bound <= inc.objective + 1e-9, "d={d} {spec}: bound above incumbent");
                ensure!(
                    (0.0..=1.0).contains(&r.gap) && close(r.gap, relative_gap(inc.objective, r.best_bound), 1e-12),
                    "d={d} {spec}: invalid gap {}",
                    r.gap
                );
                match r.status {
                    MipStatus::Optimal => ensure!(r.gap <= 1e-9, "d={d} {spec}: optimal with gap {}", r.gap),
                    MipStatus::TimeLimit => {}
                    MipStatus::Infeasible => return Err(format!("d={d} {spec}: infeasible")),
                }
                mips.push(format!("d={d} {id} {:?} gap {:.3}", r.status, r.gap));
            }
        }
    }
    let scope = if full { "full sweep" } else { "reduced MIP sweep" };
    Ok(format!(
        "n=160, d in {dims:?}: every strategy < 60 s (slowest {:.1} s, {}); {scope}: {}",
        slowest.0,
        slowest.1,
        mips.join("; ")
    ))
}

// 10 ------------------------------------------------------------------------

/// `(1/n) sum (a_i - b_i) / a_i` over integer fixtures as an exact fraction.
fn exact_improvement(a: &[i64], b: &[i64]) -> (i128, i128) {
    let (mut num, mut den) = (0i128, 1i128);
    let mut count = 0i128;
    for (&x, &y) in a.iter().zip(b) {
        if x == 0 {
            continue;
        }
        // num/den + (x - y)/x
        num = num * x as i128 + (x - y) as i128 * den;
        den *= x as i128;
        count += 1;
    }
    (num, den * count.max(1))
}

fn criterion10() -> Outcome {
    let fixtures: [(&[i64], &[i64]); 5] = [
        (&[10, 10], &[5, -5]),
        (&[4, 8, 2], &[1, 2, 2]),
        (&[3, 7], &[3, 7]),
        (&[3, 7], &[0, 0]),
        (&[0, 6, 9], &[0, 5, 1]),
    ];
    for (a, b) in fixtures {
        let (num, den) = exact_improvement(a, b);
        let expected = num as f64 / den as f64;
        let af: Vec<f64> = a.iter().map(|&v| v as f64).collect();
        let bf: Vec<f64> = b.iter().map(|&v| v as f64).collect();
        let got = m_improvement(&af, &bf).value;
        ensure!(close(got, expected, 1e-15), "{a:?} -> {b:?}: {got} vs {num}/{den}");
    }
    // report rows agree with a recomputation from the model they describe
    let ds = common::synthetic(24, 2, 3);
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = dir.path().join("results.csv");
    let mut rows = Vec::new();
    for id in ["alg2-2-I", "alg2-1-III-kmedian-0.3", "alg3-I_v2"] {
        let spec: StrategySpec = id.parse().unwrap();
        let norm = spec.norm().unwrap();
        let (row, _, outcome) = ok(run_experiment(&ds, norm, 1.0, &spec, &BnbOptions::default()))?;
        let m0 = &outcome.m_initial;
        let m1 = &outcome.model.big_m;
        let mut sum = 0.0;
        let mut k = 0.0;
        for i in 0..m0.len() {
            if m0[i] != 0.0 {
                sum += 1.0 - m1[i] / m0[i];
                k += 1.0;
            }
        }
        let expected = sum / k;
        ensure!(close(row.m_improvement, expected, 1e-12), "{id}: row {} vs {expected}", row.m_improvement);
        rows.push(row);
    }
    ok(write_results(&rows, &path))?;
    let back = ok(read_results(&path))?;
    for r in &back {
        let orig = rows.iter().find(|o| o.strategy == r.strategy).unwrap();
        ensure!(
            close(r.m_improvement, orig.m_improvement, 5e-6 * orig.m_improvement.abs().max(1e-12)),
            "{}: written {} vs {}",
            r.strategy,
            r.m_improvement,
            orig.m_improvement
        );
    }
    Ok(format!("{} exact fixtures and {} report rows agree with the formula", fixtures.len(), rows.len()))
}

// ---------------------------------------------------------------------------

fn main() {
    let criteria: [(u32, &str, fn() -> Outcome); 10] = [
        (1, "Example 1, l1 optimum 23", criterion1),
        (2, "Example 1, l2 optimum 23.6", criterion2),
        (3, "M=5 is not equivalent", criterion3),
        (4, "oracle equivalence on random instances", criterion4),
        (5, "monotone tightening", criterion5),
        (6, "sandwich and singleton clusters", criterion6),
        (7, "Lagrangian inequalities", criterion7),
        (8, "solver certification", criterion8),
        (9, "desk-scale timing", criterion9),
        (10, "M-improvement metric", criterion10),
    ];
    let selected: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = Vec::new();
    for (id, name, f) in criteria {
        if !selected.is_empty() && !selected.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panic: {msg}"))
        });
        let t = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("criterion {id:>2} PASS  {name} ({t:.1} s): {detail}"),
            Err(why) => {
                println!("criterion {id:>2} FAIL  {name} ({t:.1} s): {why}");
                failed.push(id);
            }
        }
    }
    if !failed.is_empty() {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
