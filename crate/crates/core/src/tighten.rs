//! Plumbing shared by the l1 and l2 tightening procedures: options, the
//! per-phase report, and batched evaluation of auxiliary subproblems.

use std::ops::Range;
use std::time::Instant;

use crate::cluster::ClusterAlgo;
use crate::error::{Error, Result};
use crate::solver::{solve_qp, ConvexProblem, LpSession, Sense, Solution, Status};
use log::warn;

/// Safety margin added to LP optimal values before they are used as bounds.
pub const LP_PAD: f64 = 1e-9;
/// Same for values returned by the conic solver.
pub const CONIC_PAD: f64 = 1e-7;

/// Slack added to the objective cut so points with objective exactly `ub`
/// are not cut off by rounding.
pub fn cut_rhs(ub: f64) -> f64 {
    ub + LP_PAD * (1.0 + ub.abs())
}

#[derive(Debug, Clone, PartialEq)]
pub struct TightenOptions {
    /// Relative improvement below which the outer loop stops.
    pub eps_impr: f64,
    pub max_iter: usize,
    /// Lagrangian bounds are skipped unless the slope exceeds this.
    pub eps_pos: f64,
    /// Re-solve the w-bound subproblems in every outer iteration.
    pub rerun_w_lps: bool,
    /// Obtain the Lagrangian multipliers from explicitly shifted models
    /// rather than from the unshifted relaxation.
    pub explicit_shifted: bool,
    /// Worker threads for independent subproblems.
    pub jobs: usize,
}

impl Default for TightenOptions {
    fn default() -> Self {
        TightenOptions {
            eps_impr: 1e-6,
            max_iter: 20,
            eps_pos: 1e-7,
            rerun_w_lps: false,
            explicit_shifted: false,
            jobs: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterConfig {
    pub algo: ClusterAlgo,
    pub fraction: f64,
    pub seed: u64,
}

/// State of the bounds after one phase.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub big_m: Vec<f64>,
    /// Every other bound written so that smaller means tighter
    /// (upper bounds as is, lower bounds negated).
    pub bounds: Vec<f64>,
}

impl Snapshot {
    /// `sum M + sum of finite bound widths`, and the number of finite bounds.
    pub fn measure(&self) -> (f64, usize) {
        let mut total: f64 = self.big_m.iter().sum();
        let mut finite = 0;
        for v in &self.bounds {
            if v.is_finite() {
                total += v;
                finite += 1;
            }
        }
        (total, finite)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseRecord {
    pub phase: String,
    pub iteration: usize,
    /// Seconds since the strategy started.
    pub wall_time: f64,
    pub m_improvement: f64,
    /// Sum of the finite bound widths.
    pub bound_width: f64,
    pub snapshot: Snapshot,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct StrategyReport {
    pub phases: Vec<PhaseRecord>,
    pub iterations: usize,
    pub t_cluster: f64,
    /// Wall time of the whole strategy, clustering included.
    pub t_strategy: f64,
    /// Lagrangian bounds skipped because of a non-positive slope.
    pub skipped_bounds: usize,
    /// Negative discriminants clamped to zero (l2 only).
    pub clamped: usize,
    pub subproblems: usize,
}

pub(crate) struct Recorder {
    start: Instant,
    pub report: StrategyReport,
}

impl Recorder {
    pub fn new() -> Recorder {
        Recorder {
            start: Instant::now(),
            report: StrategyReport::default(),
        }
    }

    pub fn record(&mut self, phase: &str, iteration: usize, m_initial: &[f64], snapshot: Snapshot) {
        let width = snapshot.bound_widths();
        self.report.phases.push(PhaseRecord {
            phase: phase.to_string(),
            iteration,
            wall_time: self.start.elapsed().as_secs_f64(),
            m_improvement: crate::report::m_improvement(m_initial, &snapshot.big_m).value,
            bound_width: width,
            snapshot,
        });
    }

    pub fn finish(mut self) -> StrategyReport {
        self.report.t_strategy = self.start.elapsed().as_secs_f64();
        self.report
    }
}

impl Snapshot {
    fn bound_widths(&self) -> f64 {
        self.bounds.iter().filter(|v| v.is_finite()).sum()
    }
}

/// True when `cur` improves on `prev` enough to run another iteration.
pub(crate) fn improved(prev: &Snapshot, cur: &Snapshot, eps: f64) -> bool {
    let (a, fa) = prev.measure();
    let (b, fb) = cur.measure();
    fb > fa || a - b > eps * a.abs().max(1.0)
}

/// Apply `f` to contiguous chunks of `0..count` on up to `jobs` threads and
/// concatenate the results in index order.
pub(crate) fn par_chunks<T, F>(count: usize, jobs: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(Range<usize>) -> Result<Vec<T>> + Sync,
{
    let jobs = jobs.clamp(1, count.max(1));
    if jobs == 1 {
        return f(0..count);
    }
    let chunk = count.div_ceil(jobs);
    let parts: Vec<Result<Vec<T>>> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..jobs)
            .map(|j| {
                let range = (j * chunk).min(count)..((j + 1) * chunk).min(count);
                let f = &f;
                s.spawn(move || f(range))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("subproblem worker panicked"))
            .collect()
    });
    let mut out = Vec::with_capacity(count);
    for part in parts {
        out.extend(part?);
    }
    Ok(out)
}

/// `constant + coeffs . x`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearObjective {
    pub coeffs: Vec<f64>,
    pub constant: f64,
}

impl LinearObjective {
    pub fn zero(n: usize) -> LinearObjective {
        LinearObjective {
            coeffs: vec![0.0; n],
            constant: 0.0,
        }
    }

    pub fn unit(n: usize, col: usize, sign: f64) -> LinearObjective {
        let mut o = LinearObjective::zero(n);
        o.coeffs[col] = sign;
        o
    }
}

fn padded(sol: &Solution, pad: f64, what: &str) -> Result<Option<f64>> {
    match sol.status {
        Status::Optimal => {
            let v = sol.objective;
            Ok(Some(v + pad * (1.0 + v.abs())))
        }
        Status::Unbounded => Ok(None),
        Status::Infeasible => Err(Error::numerical(
            "tighten",
            format!("{what}: bounding region reported infeasible"),
        )),
    }
}

/// Visit objectives nearest-neighbour first so each warm start begins close
/// to the next optimum.
fn chain_order(objs: &[LinearObjective], range: std::ops::Range<usize>) -> Vec<usize> {
    let mut left: Vec<usize> = range.collect();
    let mut order = Vec::with_capacity(left.len());
    let Some(first) = left.first().copied() else {
        return order;
    };
    left.swap_remove(0);
    order.push(first);
    let mut cur = first;
    while !left.is_empty() {
        let dist = |k: usize| -> f64 {
            objs[cur].coeffs.iter().zip(&objs[k].coeffs).map(|(a, b)| (a - b).powi(2)).sum()
        };
        let (at, _) = left
            .iter()
            .enumerate()
            .map(|(at, &k)| (at, dist(k)))
            .fold((0, f64::INFINITY), |best, cand| if cand.1 < best.1 { cand } else { best });
        cur = left.swap_remove(at);
        order.push(cur);
    }
    order
}

/// Maximise every objective over the feasible set of `region` (its own
/// objective is ignored). Returns padded optimal values, `None` when
/// unbounded.
pub(crate) fn maximize_all(
    region: &ConvexProblem,
    objs: &[LinearObjective],
    jobs: usize,
    what: &str,
) -> Result<Vec<Option<f64>>> {
    par_chunks(objs.len(), jobs, |range| {
        if range.is_empty() {
            return Ok(Vec::new());
        }
        if region.is_linear() {
            let (mut session, first) = LpSession::new(region)?;
            if first.status == Status::Infeasible {
                return Err(Error::numerical(
                    "tighten",
                    format!("{what}: bounding region reported infeasible"),
                ));
            }
            let n = range.len();
            let order = chain_order(objs, range.clone());
            let mut out = vec![None; n];
            for j in order {
                let s = session.reoptimize(&objs[j].coeffs, objs[j].constant, Sense::Maximize)?;
                out[j - range.start] = padded(&s, LP_PAD, what)?;
            }
            Ok(out)
        } else {
            range
                .map(|j| {
                    let mut p = region.clone();
                    p.sense = Sense::Maximize;
                    p.quadratic_diag = vec![0.0; p.n_vars()];
                    p.linear_cost = objs[j].coeffs.clone();
                    p.objective_constant = objs[j].constant;
                    match solve_qp(&p) {
                        Ok(s) => padded(&s, CONIC_PAD, what),
                        // a stalled subproblem only forgoes its own tightening
                        Err(Error::Numerical { message, .. }) => {
                            warn!("{what}: subproblem {j} skipped after solver failure: {message}");
                            Ok(None)
                        }
                        Err(e) => Err(e),
                    }
                })
                .collect()
        }
    })
}
