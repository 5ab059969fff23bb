//! Branch-and-bound over the binary `z` columns of the big-M model, and the
//! brute-force enumeration oracle.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::Instant;

use log::{debug, warn};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::model::{build_rl_mip, restricted_svm, FeasiblePoint, MipProblem, Norm, RampLossModel};
use crate::solver::{solve_interior, solve_qp, ConvexProblem, Solution, Status};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MipStatus {
    Optimal,
    TimeLimit,
    Infeasible,
}

impl MipStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            MipStatus::Optimal => "Optimal",
            MipStatus::TimeLimit => "TimeLimit",
            MipStatus::Infeasible => "Infeasible",
        }
    }
}

impl std::str::FromStr for MipStatus {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "Optimal" => Ok(MipStatus::Optimal),
            "TimeLimit" => Ok(MipStatus::TimeLimit),
            "Infeasible" => Ok(MipStatus::Infeasible),
            _ => Err(Error::InvalidArgument(format!("unknown status {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BnbOptions {
    /// Seconds.
    pub time_limit: f64,
    /// A relaxation value within this distance of 0 or 1 counts as integral.
    pub int_tol: f64,
    /// Relative gap at which the search stops.
    pub gap_tol: f64,
    /// Run the rounding heuristic every this many nodes (0 disables it; the
    /// root is always tried).
    pub heuristic_every: usize,
    pub node_log: bool,
}

impl Default for BnbOptions {
    fn default() -> Self {
        BnbOptions {
            time_limit: 7200.0,
            int_tol: 1e-9,
            gap_tol: 1e-9,
            heuristic_every: 50,
            node_log: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MipResult {
    pub status: MipStatus,
    pub incumbent: Option<FeasiblePoint>,
    pub best_bound: f64,
    pub gap: f64,
    /// Relaxations solved.
    pub nodes: usize,
    /// Nodes split into two children.
    pub branched: usize,
    pub solve_time: f64,
    /// One line per processed node when requested.
    pub log: Vec<String>,
}

impl MipResult {
    pub fn objective(&self) -> f64 {
        self.incumbent.as_ref().map_or(f64::NAN, |p| p.objective)
    }
}

/// `(incumbent - bound) / (1e-10 + |incumbent|)`.
pub fn relative_gap(incumbent: f64, bound: f64) -> f64 {
    if !incumbent.is_finite() {
        return f64::INFINITY;
    }
    ((incumbent - bound) / (1e-10 + incumbent.abs())).max(0.0)
}

#[derive(Debug, Clone)]
struct Node {
    id: usize,
    depth: usize,
    bound: f64,
    /// -1 free, 0 or 1 fixed, per integer column.
    fixed: Vec<i8>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    // reversed so the max-heap pops the smallest bound, then the smallest id
    fn cmp(&self, other: &Self) -> Ordering {
        other.bound.total_cmp(&self.bound).then(other.id.cmp(&self.id))
    }
}

struct Search<'a> {
    mip: &'a MipProblem,
    c: f64,
    opts: &'a BnbOptions,
    incumbent: Option<FeasiblePoint>,
}

impl Search<'_> {
    fn node_problem(&self, fixed: &[i8]) -> ConvexProblem {
        let mut p = self.mip.problem.clone();
        let layout = &self.mip.layout;
        for (i, &f) in fixed.iter().enumerate() {
            let col = self.mip.integer[i];
            match f {
                0 => p.upper[col] = 0.0,
                1 => {
                    p.lower[col] = 1.0;
                    p.upper[layout.xi(i)] = 0.0;
                }
                _ => {}
            }
        }
        p
    }

    fn solve(&self, fixed: &[i8], id: usize) -> Result<Solution> {
        let p = self.node_problem(fixed);
        let sol = solve_qp(&p).map_err(|e| Error::numerical("bnb", format!("node {id}: {e}")))?;
        if sol.status == Status::Unbounded {
            return Err(Error::numerical("bnb", format!("node {id}: relaxation unbounded")));
        }
        Ok(sol)
    }

    fn inc_obj(&self) -> f64 {
        self.incumbent.as_ref().map_or(f64::INFINITY, |p| p.objective)
    }

    fn prunable(&self, bound: f64) -> bool {
        let inc = self.inc_obj();
        inc.is_finite() && (bound >= inc || relative_gap(inc, bound) <= self.opts.gap_tol)
    }

    fn offer(&mut self, pt: FeasiblePoint) -> bool {
        if pt.objective < self.inc_obj() {
            debug!("new incumbent {}", pt.objective);
            self.incumbent = Some(pt);
            true
        } else {
            false
        }
    }

    /// Fix every z to `values` and solve; the optimum is a feasible point.
    fn complete(&mut self, values: &[bool], id: usize) -> Result<bool> {
        let fixed: Vec<i8> = values.iter().map(|&v| i8::from(v)).collect();
        let sol = self.solve(&fixed, id)?;
        if sol.status != Status::Optimal {
            return Ok(false);
        }
        let mut pt = FeasiblePoint::from_vector(&self.mip.layout, &sol.primal, self.c);
        for (i, &v) in values.iter().enumerate() {
            pt.z[i] = v;
            pt.xi[i] = if v { 0.0 } else { pt.xi[i].clamp(0.0, 2.0) };
        }
        pt.objective = pt.objective_value(self.mip.layout.norm, self.c);
        Ok(self.offer(pt))
    }

    fn z_values(&self, sol: &Solution) -> Vec<f64> {
        self.mip.integer.iter().map(|&c| sol.primal[c]).collect()
    }
}

/// Branch-and-bound on a big-M model. `incumbent`, when feasible for the
/// model, seeds the search.
pub fn solve_mip(
    ds: &Dataset,
    model: &RampLossModel,
    opts: &BnbOptions,
    incumbent: Option<&FeasiblePoint>,
) -> Result<MipResult> {
    let start = Instant::now();
    let mip = build_rl_mip(ds, model)?;
    let mut search = Search {
        mip: &mip,
        c: model.c,
        opts,
        incumbent: None,
    };
    if let Some(pt) = incumbent {
        let viol = pt.model_violation(ds, model)?;
        if viol <= 1e-6 {
            search.incumbent = Some(pt.clone());
        } else {
            warn!("warm start rejected: violation {viol:e}");
        }
    }
    let n = mip.integer.len();
    let mut heap = BinaryHeap::new();
    heap.push(Node {
        id: 0,
        depth: 0,
        bound: f64::NEG_INFINITY,
        fixed: vec![-1; n],
    });
    let mut next_id = 1;
    let mut nodes = 0;
    let mut branched = 0;
    let mut log = Vec::new();
    let mut running_bound = f64::NEG_INFINITY;
    let mut pruned_min = f64::INFINITY;
    let mut timed_out = false;

    while let Some(node) = heap.pop() {
        if start.elapsed().as_secs_f64() > opts.time_limit {
            pruned_min = pruned_min.min(node.bound);
            timed_out = true;
            break;
        }
        running_bound = running_bound.max(node.bound);
        if search.prunable(node.bound) {
            pruned_min = pruned_min.min(node.bound);
            continue;
        }
        let sol = search.solve(&node.fixed, node.id)?;
        nodes += 1;
        let decision;
        if sol.status == Status::Infeasible {
            decision = "infeasible".to_string();
        } else {
            let bound = sol.objective.max(node.bound);
            let z = search.z_values(&sol);
            if node.id == 0 || (opts.heuristic_every > 0 && nodes % opts.heuristic_every == 0) {
                let rounded: Vec<bool> = z.iter().map(|&v| v > 0.5).collect();
                search.complete(&rounded, node.id)?;
            }
            let frac = (0..n)
                .filter(|&i| node.fixed[i] < 0)
                .map(|i| (i, z[i].min(1.0 - z[i])))
                .filter(|&(_, f)| f > opts.int_tol)
                .fold(None, |best: Option<(usize, f64)>, cur| match best {
                    Some(b) if b.1 >= cur.1 => Some(b),
                    _ => Some(cur),
                });
            if search.prunable(bound) {
                pruned_min = pruned_min.min(bound);
                decision = format!("pruned at {bound:.9}");
            } else if let Some((i, _)) = frac {
                branched += 1;
                for v in [0i8, 1] {
                    let mut fixed = node.fixed.clone();
                    fixed[i] = v;
                    heap.push(Node {
                        id: next_id,
                        depth: node.depth + 1,
                        bound,
                        fixed,
                    });
                    next_id += 1;
                }
                decision = format!("branch z_{}", i + 1);
            } else {
                let values: Vec<bool> = z.iter().map(|&v| v > 0.5).collect();
                let exact = z.iter().all(|&v| v == 0.0 || v == 1.0);
                let better = if exact {
                    let mut pt = FeasiblePoint::from_vector(&mip.layout, &sol.primal, model.c);
                    for i in 0..n {
                        if pt.z[i] {
                            pt.xi[i] = 0.0;
                        }
                        pt.xi[i] = pt.xi[i].clamp(0.0, 2.0);
                    }
                    pt.objective = pt.objective_value(mip.layout.norm, model.c);
                    search.offer(pt)
                } else {
                    search.complete(&values, node.id)?
                };
                decision = if better { "integral, new incumbent" } else { "integral" }.to_string();
            }
        }
        if opts.node_log {
            log.push(format!(
                "node {} depth {} bound {:.9} incumbent {:.9} {}",
                node.id,
                node.depth,
                if sol.status == Status::Infeasible { f64::INFINITY } else { sol.objective },
                search.inc_obj(),
                decision
            ));
        }
    }

    let inc = search.inc_obj();
    let (status, best_bound) = if timed_out {
        let open = heap.iter().map(|n| n.bound).fold(pruned_min, f64::min);
        (MipStatus::TimeLimit, open.min(inc).max(running_bound))
    } else if search.incumbent.is_none() {
        (MipStatus::Infeasible, f64::INFINITY)
    } else {
        (MipStatus::Optimal, pruned_min.min(inc).max(running_bound.min(inc)))
    };
    let gap = if search.incumbent.is_some() { relative_gap(inc, best_bound) } else { f64::INFINITY };
    Ok(MipResult {
        status,
        incumbent: search.incumbent,
        best_bound,
        gap,
        nodes,
        branched,
        solve_time: start.elapsed().as_secs_f64(),
        log,
    })
}

/// Which engine the oracle uses for its convex subproblems.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OracleEngine {
    /// Simplex for LPs, interior point for QPs.
    #[default]
    Default,
    /// Interior point for everything.
    Interior,
}

pub const ORACLE_MAX_N: usize = 14;

/// Exact optimum of the conditional ramp-loss model by enumerating every
/// outlier set. Assignments are visited by increasing size so that the
/// `2 C |z|` term alone prunes the tail.
pub fn brute_force_oracle(
    ds: &Dataset,
    norm: Norm,
    c: f64,
    max_n: usize,
    engine: OracleEngine,
) -> Result<(f64, FeasiblePoint)> {
    let n = ds.n();
    if n > max_n {
        return Err(Error::OracleTooLarge { n, max_n });
    }
    let mut masks: Vec<u32> = (0..(1u32 << n)).collect();
    masks.sort_by_key(|m| (m.count_ones(), *m));
    let mut best: Option<FeasiblePoint> = None;
    for mask in masks {
        let nz = mask.count_ones() as f64;
        if let Some(b) = &best {
            if 2.0 * c * nz >= b.objective {
                break;
            }
        }
        let z: Vec<bool> = (0..n).map(|i| mask >> i & 1 == 1).collect();
        let (p, layout) = restricted_svm(ds, norm, c, &z)?;
        let sol = match engine {
            OracleEngine::Default => solve_qp(&p)?,
            OracleEngine::Interior => solve_interior(&p)?,
        };
        if sol.status != Status::Optimal {
            return Err(Error::numerical("oracle", format!("restricted problem returned {:?}", sol.status)));
        }
        let xi = (0..n).map(|i| sol.primal[layout.xi(i)].clamp(0.0, 2.0)).collect();
        let pt = FeasiblePoint::new(norm, c, layout.w_value(&sol.primal), sol.primal[layout.b()], xi, z);
        if best.as_ref().is_none_or(|b| pt.objective < b.objective) {
            best = Some(pt);
        }
    }
    let best = best.expect("at least the empty outlier set is evaluated");
    Ok((best.objective, best))
}
