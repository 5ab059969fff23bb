//! Strategy identifiers (`alg2-2-I`, `alg3-III-kmeans-0.2`, ...) and the
//! strategy -> branch-and-bound -> result row pipeline.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use crate::bigm_l1::{run_algorithm2, Alg2Config, BoundsStateL1, MVariantL1, WVariant};
use crate::bigm_l2::{run_algorithm3, Alg3Config, BoundsStateL2, MVariantL2};
use crate::bnb::{solve_mip, BnbOptions, MipResult};
use crate::cluster::ClusterAlgo;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::model::{FeasiblePoint, Norm, RampLossModel};
use crate::report::{cap_gap, m_improvement, ExperimentRow};
use crate::tighten::{ClusterConfig, StrategyReport, TightenOptions};

pub const VALID_SPECS: &str = "\
valid strategies:
  init                              initial M only (no tightening)
  alg2-<1|2>-<I|II>                 l1: w-bound variant 1 or 2, M update I or II
  alg2-<1|2>-III[-<kmeans|kmedian>-<fraction>]
  alg3-<I|I_v2|II>                  l2: M update I, I restricted to M above the median, or II
  alg3-III[-<kmeans|kmedian>-<fraction>]
clusters default to kmeans with fraction 0.1";

#[derive(Debug, Clone, PartialEq)]
pub enum Strategy {
    Initial,
    Alg2(Alg2Config),
    Alg3(Alg3Config),
}

#[derive(Debug, Clone, PartialEq)]
pub struct StrategySpec {
    pub strategy: Strategy,
}

fn invalid(s: &str) -> Error {
    Error::InvalidArgument(format!("invalid strategy {s:?}\n{VALID_SPECS}"))
}

fn parse_clusters(s: &str, rest: &[&str]) -> Result<ClusterConfig> {
    match rest {
        [] => Ok(ClusterConfig {
            algo: ClusterAlgo::KMeans,
            fraction: 0.1,
            seed: 0,
        }),
        [algo, frac] => {
            let algo: ClusterAlgo = algo.parse().map_err(|_| invalid(s))?;
            let fraction: f64 = frac.parse().map_err(|_| invalid(s))?;
            if !(fraction > 0.0 && fraction <= 1.0) {
                return Err(invalid(s));
            }
            Ok(ClusterConfig { algo, fraction, seed: 0 })
        }
        _ => Err(invalid(s)),
    }
}

impl FromStr for StrategySpec {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split('-').collect();
        let options = TightenOptions::default();
        let strategy = match parts.as_slice() {
            ["init"] => Strategy::Initial,
            ["alg2", w, m, rest @ ..] => {
                let w_variant = match *w {
                    "1" => WVariant::PerCoordinate,
                    "2" => WVariant::Aggregate,
                    _ => return Err(invalid(s)),
                };
                let m_variant = match (*m, rest) {
                    ("I", []) => MVariantL1::PerInstance,
                    ("II", []) => MVariantL1::PerClass,
                    ("III", rest) => MVariantL1::PerCluster(parse_clusters(s, rest)?),
                    _ => return Err(invalid(s)),
                };
                Strategy::Alg2(Alg2Config {
                    w_variant,
                    m_variant,
                    options,
                })
            }
            ["alg3", m, rest @ ..] => {
                let m_variant = match (*m, rest) {
                    ("I", []) => MVariantL2::PerInstance,
                    ("I_v2", []) => MVariantL2::PerInstanceAboveMedian,
                    ("II", []) => MVariantL2::PerClass,
                    ("III", rest) => MVariantL2::PerCluster(parse_clusters(s, rest)?),
                    _ => return Err(invalid(s)),
                };
                Strategy::Alg3(Alg3Config { m_variant, options })
            }
            _ => return Err(invalid(s)),
        };
        Ok(StrategySpec { strategy })
    }
}

fn cluster_suffix(c: &ClusterConfig) -> String {
    format!("-{}-{}", c.algo.as_str(), c.fraction)
}

impl fmt::Display for StrategySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.strategy {
            Strategy::Initial => write!(f, "init"),
            Strategy::Alg2(cfg) => {
                let w = match cfg.w_variant {
                    WVariant::PerCoordinate => 1,
                    WVariant::Aggregate => 2,
                };
                match &cfg.m_variant {
                    MVariantL1::PerInstance => write!(f, "alg2-{w}-I"),
                    MVariantL1::PerClass => write!(f, "alg2-{w}-II"),
                    MVariantL1::PerCluster(c) => write!(f, "alg2-{w}-III{}", cluster_suffix(c)),
                }
            }
            Strategy::Alg3(cfg) => match &cfg.m_variant {
                MVariantL2::PerInstance => write!(f, "alg3-I"),
                MVariantL2::PerInstanceAboveMedian => write!(f, "alg3-I_v2"),
                MVariantL2::PerClass => write!(f, "alg3-II"),
                MVariantL2::PerCluster(c) => write!(f, "alg3-III{}", cluster_suffix(c)),
            },
        }
    }
}

impl StrategySpec {
    /// The norm a strategy is tied to (`init` works with both).
    pub fn norm(&self) -> Option<Norm> {
        match self.strategy {
            Strategy::Initial => None,
            Strategy::Alg2(_) => Some(Norm::L1),
            Strategy::Alg3(_) => Some(Norm::L2),
        }
    }

    pub fn with_options(mut self, options: TightenOptions) -> Self {
        match &mut self.strategy {
            Strategy::Initial => {}
            Strategy::Alg2(c) => c.options = options,
            Strategy::Alg3(c) => c.options = options,
        }
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        match &mut self.strategy {
            Strategy::Alg2(Alg2Config {
                m_variant: MVariantL1::PerCluster(c),
                ..
            })
            | Strategy::Alg3(Alg3Config {
                m_variant: MVariantL2::PerCluster(c),
                ..
            }) => c.seed = seed,
            _ => {}
        }
        self
    }

    /// Every strategy for `norm`, with clustered variants at `fraction`.
    pub fn all_for(norm: Norm, fraction: f64) -> Vec<StrategySpec> {
        let ids: Vec<String> = match norm {
            Norm::L1 => ["1", "2"]
                .iter()
                .flat_map(|w| {
                    [
                        format!("alg2-{w}-I"),
                        format!("alg2-{w}-II"),
                        format!("alg2-{w}-III-kmeans-{fraction}"),
                        format!("alg2-{w}-III-kmedian-{fraction}"),
                    ]
                })
                .collect(),
            Norm::L2 => vec![
                "alg3-I".into(),
                "alg3-I_v2".into(),
                "alg3-II".into(),
                format!("alg3-III-kmeans-{fraction}"),
                format!("alg3-III-kmedian-{fraction}"),
            ],
        };
        ids.iter().map(|s| s.parse().expect("valid id")).collect()
    }
}

/// Model produced by a strategy, with the heuristic point for warm start.
#[derive(Debug, Clone)]
pub struct StrategyOutcome {
    pub model: RampLossModel,
    pub incumbent: FeasiblePoint,
    pub ub_global: f64,
    pub m_initial: Vec<f64>,
    pub report: StrategyReport,
}

pub fn run_strategy(ds: &Dataset, norm: Norm, c: f64, spec: &StrategySpec) -> Result<StrategyOutcome> {
    if let Some(n) = spec.norm() {
        if n != norm {
            return Err(Error::InvalidArgument(format!(
                "strategy {spec} applies to the {} model, not {}",
                n.as_str(),
                norm.as_str()
            )));
        }
    }
    match &spec.strategy {
        Strategy::Initial => {
            let start = Instant::now();
            let (model, incumbent, ub, m0) = match norm {
                Norm::L1 => {
                    let s = BoundsStateL1::new(ds, c)?;
                    (s.model(), s.incumbent, s.ub_global, s.m_initial)
                }
                Norm::L2 => {
                    let s = BoundsStateL2::new(ds, c)?;
                    (s.model(), s.incumbent, s.ub_global, s.m_initial)
                }
            };
            let report = StrategyReport {
                t_strategy: start.elapsed().as_secs_f64(),
                ..StrategyReport::default()
            };
            Ok(StrategyOutcome {
                model,
                incumbent,
                ub_global: ub,
                m_initial: m0,
                report,
            })
        }
        Strategy::Alg2(cfg) => {
            let (model, state, report) = run_algorithm2(ds, c, cfg)?;
            Ok(StrategyOutcome {
                model,
                incumbent: state.incumbent,
                ub_global: state.ub_global,
                m_initial: state.m_initial,
                report,
            })
        }
        Strategy::Alg3(cfg) => {
            let (model, state, report) = run_algorithm3(ds, c, cfg)?;
            Ok(StrategyOutcome {
                model,
                incumbent: state.incumbent,
                ub_global: state.ub_global,
                m_initial: state.m_initial,
                report,
            })
        }
    }
}

/// Strategy, warm-started branch-and-bound and the result row.
pub fn run_experiment(
    ds: &Dataset,
    norm: Norm,
    c: f64,
    spec: &StrategySpec,
    bnb: &BnbOptions,
) -> Result<(ExperimentRow, MipResult, StrategyOutcome)> {
    let outcome = run_strategy(ds, norm, c, spec)?;
    let mip = solve_mip(ds, &outcome.model, bnb, Some(&outcome.incumbent))?;
    let row = ExperimentRow {
        dataset: ds.name.clone(),
        c,
        norm,
        strategy: spec.to_string(),
        m_improvement: m_improvement(&outcome.m_initial, &outcome.model.big_m).value,
        t_cluster: outcome.report.t_cluster,
        t_strategy: outcome.report.t_strategy,
        t_total: outcome.report.t_strategy + mip.solve_time,
        gap: cap_gap(if mip.gap.is_finite() { mip.gap } else { 1.0 }),
        objective: mip.objective(),
        status: mip.status,
    };
    Ok((row, mip, outcome))
}
