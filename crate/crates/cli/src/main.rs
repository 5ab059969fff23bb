use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use rampsvm::bnb::{brute_force_oracle, BnbOptions, MipStatus, OracleEngine, ORACLE_MAX_N};
use rampsvm::data::{generate_synthetic, load_csv, load_sparse, write_csv, Dataset, SyntheticSpec};
use rampsvm::model::{build_rl_mip, Norm};
use rampsvm::report::{fmt_sig, m_improvement, write_results, write_strategy_report, ExperimentRow};
use rampsvm::solver::write_lp;
use rampsvm::strategy::{run_experiment, run_strategy, StrategySpec};
use rampsvm::tighten::TightenOptions;

const DEFAULT_C: [f64; 5] = [0.01, 0.1, 1.0, 10.0, 100.0];

#[derive(Parser)]
#[command(name = "rampsvm", version, about = "Exact ramp-loss SVM training with big-M tightening")]
struct Cli {
    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tighten the big-M values with a strategy, then solve the MIP.
    Solve(SolveArgs),
    /// Exact optimum by enumerating outlier sets (small n only).
    Oracle(OracleArgs),
    /// Run a strategy only and write the strengthened model.
    Tighten(TightenArgs),
    /// Write a synthetic dataset as CSV.
    Gen(GenArgs),
}

#[derive(Args)]
struct DataArgs {
    /// Dataset file: CSV, or LIBSVM-style `label idx:val ...` lines.
    #[arg(long, conflicts_with = "synthetic", required_unless_present = "synthetic")]
    data: Option<PathBuf>,
    /// Synthetic data, e.g. `n=160,d=2,balance=0.5,outliers=0.1,sep=2`.
    #[arg(long)]
    synthetic: Option<String>,
    #[arg(long, value_enum, default_value_t = Format::Auto)]
    format: Format,
    /// 0-based label column of a CSV file.
    #[arg(long, default_value_t = 0)]
    label_column: usize,
    #[arg(long, value_enum, default_value_t = Scale::None)]
    scale: Scale,
    /// Seed for synthetic data and clustering.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    /// CSV for `.csv` files, LIBSVM otherwise.
    Auto,
    Csv,
    Libsvm,
}

#[derive(Clone, Copy, ValueEnum)]
enum Scale {
    None,
    /// Map every feature onto [-1, 1].
    Minmax,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, value_parser = parse_norm)]
    norm: Norm,
    /// Comma-separated values of C, or `all` for 0.01,0.1,1,10,100.
    #[arg(long = "C", default_value = "all")]
    c: String,
    /// Comma-separated strategy ids, or `all` for every strategy of the norm.
    #[arg(long, default_value = "init")]
    strategy: String,
    /// Cluster fraction used by `--strategy all`.
    #[arg(long, default_value_t = 0.1)]
    cluster_fraction: f64,
    /// Seconds per MIP.
    #[arg(long, default_value_t = 7200.0)]
    time_limit: f64,
    /// Results CSV.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Threads for strategy subproblems.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, value_parser = parse_norm)]
    norm: Norm,
    #[arg(long = "C", default_value = "all")]
    c: String,
    /// Solve every subproblem with the interior-point backend.
    #[arg(long)]
    interior: bool,
    #[arg(long, default_value_t = ORACLE_MAX_N)]
    max_n: usize,
}

#[derive(Args)]
struct TightenArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, value_parser = parse_norm)]
    norm: Norm,
    #[arg(long = "C")]
    c: f64,
    #[arg(long)]
    strategy: String,
    /// Strengthened model in LP text format.
    #[arg(long)]
    output: PathBuf,
    /// Per-phase strategy log as CSV.
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Args)]
struct GenArgs {
    /// e.g. `n=160,d=2,balance=0.5,outliers=0.1,sep=2`
    #[arg(long)]
    synthetic: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    output: PathBuf,
}

fn parse_norm(s: &str) -> std::result::Result<Norm, String> {
    s.parse::<Norm>().map_err(|e| e.to_string())
}

fn parse_c_list(s: &str) -> Result<Vec<f64>> {
    if s == "all" {
        return Ok(DEFAULT_C.to_vec());
    }
    let mut out = Vec::new();
    for part in s.split(',') {
        let v: f64 = part
            .trim()
            .parse()
            .with_context(|| format!("invalid value of C: {part:?}"))?;
        if !(v >= 0.0 && v.is_finite()) {
            bail!("C must be finite and >= 0, got {v}");
        }
        out.push(v);
    }
    Ok(out)
}

/// `n=..,d=..[,balance=..][,outliers=..][,sep=..][,seed=..]`
fn parse_synthetic(s: &str, seed: u64) -> Result<SyntheticSpec> {
    let mut spec = SyntheticSpec {
        n: 0,
        d: 0,
        class_balance: 0.5,
        outlier_rate: 0.1,
        separation: 2.0,
        seed,
    };
    let (mut has_n, mut has_d) = (false, false);
    for part in s.split(',').filter(|p| !p.trim().is_empty()) {
        let (k, v) = part
            .split_once('=')
            .with_context(|| format!("synthetic spec entry {part:?} is not key=value"))?;
        let v = v.trim();
        let bad = || format!("invalid synthetic value {part:?}");
        match k.trim() {
            "n" => {
                spec.n = v.parse().with_context(bad)?;
                has_n = true;
            }
            "d" => {
                spec.d = v.parse().with_context(bad)?;
                has_d = true;
            }
            "balance" => spec.class_balance = v.parse().with_context(bad)?,
            "outliers" => spec.outlier_rate = v.parse().with_context(bad)?,
            "sep" | "separation" => spec.separation = v.parse().with_context(bad)?,
            "seed" => spec.seed = v.parse().with_context(bad)?,
            other => bail!("unknown synthetic key {other:?} (expected n, d, balance, outliers, sep, seed)"),
        }
    }
    if !has_n || !has_d {
        bail!("synthetic spec needs n and d");
    }
    spec.validate()?;
    Ok(spec)
}

fn synthetic_name(spec: &SyntheticSpec) -> String {
    format!(
        "synthetic-n{}-d{}-b{}-o{}-s{}-seed{}",
        spec.n, spec.d, spec.class_balance, spec.outlier_rate, spec.separation, spec.seed
    )
}

fn load(args: &DataArgs) -> Result<Dataset> {
    let ds = match (&args.data, &args.synthetic) {
        (Some(path), _) => load_file(path, args.format, args.label_column)?,
        (None, Some(s)) => {
            let spec = parse_synthetic(s, args.seed)?;
            let mut ds = generate_synthetic(&spec)?;
            ds.name = synthetic_name(&spec);
            ds
        }
        (None, None) => bail!("one of --data or --synthetic is required"),
    };
    Ok(match args.scale {
        Scale::None => ds,
        Scale::Minmax => ds.scale_to_unit_box(),
    })
}

fn load_file(path: &Path, format: Format, label_column: usize) -> Result<Dataset> {
    let csv = match format {
        Format::Csv => true,
        Format::Libsvm => false,
        Format::Auto => path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("csv")),
    };
    let ds = if csv {
        load_csv(path, label_column)
    } else {
        load_sparse(path)
    };
    ds.with_context(|| format!("loading {}", path.display()))
}

fn parse_strategies(s: &str, norm: Norm, fraction: f64, seed: u64, jobs: usize) -> Result<Vec<StrategySpec>> {
    let specs = if s == "all" {
        let mut all = vec!["init".parse::<StrategySpec>()?];
        all.extend(StrategySpec::all_for(norm, fraction));
        all
    } else {
        s.split(',')
            .map(|id| id.trim().parse::<StrategySpec>())
            .collect::<rampsvm::Result<Vec<_>>>()?
    };
    let options = TightenOptions {
        jobs: jobs.max(1),
        ..TightenOptions::default()
    };
    let mut out = Vec::with_capacity(specs.len());
    for spec in specs {
        if let Some(n) = spec.norm() {
            if n != norm {
                bail!("strategy {spec} applies to --norm {}, not {}", n.as_str(), norm.as_str());
            }
        }
        out.push(spec.with_options(options.clone()).with_seed(seed));
    }
    Ok(out)
}

fn solve(args: &SolveArgs) -> Result<ExitCode> {
    let ds = load(&args.data)?;
    let cs = parse_c_list(&args.c)?;
    let specs = parse_strategies(&args.strategy, args.norm, args.cluster_fraction, args.data.seed, args.jobs)?;
    if !(args.time_limit > 0.0) {
        bail!("--time-limit must be positive");
    }
    let bnb = BnbOptions {
        time_limit: args.time_limit,
        ..BnbOptions::default()
    };
    let mut rows: Vec<ExperimentRow> = Vec::new();
    for &c in &cs {
        for spec in &specs {
            log::info!("{} C={} {}", ds.name, c, spec);
            let (row, _, _) = run_experiment(&ds, args.norm, c, spec, &bnb)
                .with_context(|| format!("{} C={} {}", ds.name, c, spec))?;
            println!(
                "{} C={} {} {} objective={} gap={} M_impr={} t_strategy={} t_total={}",
                row.dataset,
                fmt_sig(row.c),
                row.norm.as_str(),
                row.strategy,
                fmt_sig(row.objective),
                fmt_sig(row.gap),
                fmt_sig(row.m_improvement),
                fmt_sig(row.t_strategy),
                fmt_sig(row.t_total),
            );
            rows.push(row);
        }
    }
    if let Some(path) = &args.output {
        write_results(&rows, path)?;
    }
    Ok(exit_for(rows.iter().map(|r| r.status)))
}

fn exit_for(statuses: impl Iterator<Item = MipStatus>) -> ExitCode {
    let mut code = 0;
    for s in statuses {
        match s {
            MipStatus::Optimal => {}
            MipStatus::TimeLimit => code = code.max(2),
            MipStatus::Infeasible => return ExitCode::from(1),
        }
    }
    ExitCode::from(code)
}

fn oracle(args: &OracleArgs) -> Result<ExitCode> {
    let ds = load(&args.data)?;
    let cs = parse_c_list(&args.c)?;
    let engine = if args.interior {
        OracleEngine::Interior
    } else {
        OracleEngine::Default
    };
    for &c in &cs {
        let (value, _) = brute_force_oracle(&ds, args.norm, c, args.max_n, engine)?;
        if cs.len() == 1 {
            println!("{}", fmt_sig(value));
        } else {
            println!("C={} {}", fmt_sig(c), fmt_sig(value));
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn tighten(args: &TightenArgs) -> Result<ExitCode> {
    let ds = load(&args.data)?;
    let mut specs = parse_strategies(&args.strategy, args.norm, 0.1, args.data.seed, args.jobs)?;
    if specs.len() != 1 {
        bail!("tighten takes a single strategy");
    }
    let spec = specs.remove(0);
    let outcome = run_strategy(&ds, args.norm, args.c, &spec)?;
    let mip = build_rl_mip(&ds, &outcome.model)?;
    write_lp(&mip.problem, &args.output)?;
    if let Some(path) = &args.report {
        write_strategy_report(&outcome.report, path)?;
    }
    let impr = m_improvement(&outcome.m_initial, &outcome.model.big_m);
    println!(
        "{} C={} {} iterations={} subproblems={} M_impr={} upper_bound={} t_strategy={}",
        ds.name,
        fmt_sig(args.c),
        spec,
        outcome.report.iterations,
        outcome.report.subproblems,
        fmt_sig(impr.value),
        fmt_sig(outcome.ub_global),
        fmt_sig(outcome.report.t_strategy),
    );
    Ok(ExitCode::SUCCESS)
}

fn gen(args: &GenArgs) -> Result<ExitCode> {
    let spec = parse_synthetic(&args.synthetic, args.seed)?;
    let mut ds = generate_synthetic(&spec)?;
    ds.name = synthetic_name(&spec);
    write_csv(&ds, &args.output)?;
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).init();
    let result = match &cli.command {
        Command::Solve(a) => solve(a),
        Command::Oracle(a) => oracle(a),
        Command::Tighten(a) => tighten(a),
        Command::Gen(a) => gen(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn c_lists() {
        assert_eq!(parse_c_list("all").unwrap(), DEFAULT_C.to_vec());
        assert_eq!(parse_c_list("10").unwrap(), vec![10.0]);
        assert_eq!(parse_c_list("0.1, 1").unwrap(), vec![0.1, 1.0]);
        assert!(parse_c_list("x").is_err());
        assert!(parse_c_list("-1").is_err());
    }

    #[test]
    fn synthetic_specs() {
        let s = parse_synthetic("n=160,d=2,outliers=0,sep=4", 3).unwrap();
        assert_eq!((s.n, s.d, s.seed), (160, 2, 3));
        assert_eq!(s.outlier_rate, 0.0);
        assert_eq!(s.separation, 4.0);
        assert!(parse_synthetic("n=160", 0).is_err());
        assert!(parse_synthetic("n=160,d=2,foo=1", 0).is_err());
        assert!(parse_synthetic("n=2,d=2", 0).is_err());
    }

    #[test]
    fn exit_codes() {
        let all = [MipStatus::Optimal, MipStatus::Optimal];
        assert_eq!(exit_for(all.into_iter()), ExitCode::SUCCESS);
        let some = [MipStatus::Optimal, MipStatus::TimeLimit];
        assert_eq!(exit_for(some.into_iter()), ExitCode::from(2));
    }
}
