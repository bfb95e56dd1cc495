// `!(x > 0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use bulkresv::experiment::{csv_rows, parse_settings, write_csv, CsvRow, ExperimentKind, ExperimentSpec};
use bulkresv::reservation::{combined_constraint, decide, PathSnapshot, Request, RequestId, SchemeKind, SiteId};
use bulkresv::sim::{oracle_check, TopologyKind};
use bulkresv::StepFn;
use clap::{Args, Parser, Subcommand};

/// Advance bandwidth reservation experiments.
#[derive(Parser, Debug)]
#[command(name = "bulkresv", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Transport settings on one link: NoAC at two rate caps, admission with
    /// ideal and with dull transport.
    Motivation(SweepArgs),
    /// The five evaluated schemes and the ideal reference on one link.
    SingleLink(SweepArgs),
    /// The five evaluated schemes on a star (default n = 10).
    Star(SweepArgs),
    /// Multi-Interval pieces per flow over star sizes.
    Intervals(SweepArgs),
    /// A sweep described entirely by --config and flags.
    Custom(SweepArgs),
    /// Decisions of every scheme on the small worked example.
    DemoFig2,
    /// Simulated dull admission blocking against Erlang-B with m = 10.
    OracleCheck(OracleArgs),
}

#[derive(Args, Debug)]
struct SweepArgs {
    /// Config file with [experiment], [topology] and [workload] sections.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma separated loads.
    #[arg(long, value_delimiter = ',')]
    loads: Option<Vec<f64>>,
    /// Comma separated schemes or transport settings.
    #[arg(long, value_delimiter = ',')]
    schemes: Option<Vec<String>>,
    /// Comma separated star sizes.
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<usize>>,
    #[arg(long)]
    arrivals: Option<usize>,
    #[arg(long)]
    reps: Option<usize>,
    /// Master seed.
    #[arg(long, env = "BULKRESV_SEED")]
    seed: Option<u64>,
    /// CSV path (default results/<name>.csv).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct OracleArgs {
    #[arg(long, value_delimiter = ',', default_value = "0.5,0.8,1.0")]
    loads: Vec<f64>,
    #[arg(long, default_value_t = 100_000)]
    arrivals: usize,
    #[arg(long, default_value_t = 10)]
    reps: usize,
    #[arg(long, env = "BULKRESV_SEED", default_value_t = 1)]
    seed: u64,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    let (kind, args) = match cli.command {
        Command::Motivation(a) => (ExperimentKind::Motivation, a),
        Command::SingleLink(a) => (ExperimentKind::SingleLink, a),
        Command::Star(a) => (ExperimentKind::StarNetwork, a),
        Command::Intervals(a) => (ExperimentKind::IntervalCount, a),
        Command::Custom(a) => (ExperimentKind::Custom, a),
        Command::DemoFig2 => {
            print!("{}", demo_worked_example());
            return Ok(ExitCode::SUCCESS);
        }
        Command::OracleCheck(a) => return oracle(&a),
    };
    let spec = build_spec(kind, &args)?;
    let results = spec.run();
    let mut errors = 0;
    for r in &results {
        if let Err(e) = &r.outcome {
            errors += 1;
            let c = &r.cell;
            eprintln!("cell n={} load={} {} rep={}: {e}", c.n, c.load, c.setting, c.replication);
        }
    }
    let rows = csv_rows(&spec, &results);
    let out = spec.output.clone().unwrap_or_else(|| PathBuf::from(format!("results/{}.csv", spec.name)));
    write_csv(&rows, &out).with_context(|| format!("writing {}", out.display()))?;
    print!("{}", summary(&spec, &rows));
    println!("wrote {} rows to {}", rows.len(), out.display());
    if errors > 0 {
        eprintln!("{errors} of {} cells failed", results.len());
    }
    Ok(ExitCode::SUCCESS)
}

fn build_spec(kind: ExperimentKind, args: &SweepArgs) -> Result<ExperimentSpec> {
    let mut spec = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            ExperimentSpec::parse_over(&text, kind).with_context(|| format!("in {}", path.display()))?
        }
        None => ExperimentSpec::defaults(kind),
    };
    if let Some(v) = &args.loads {
        spec.loads = v.clone();
    }
    if let Some(v) = &args.schemes {
        spec.settings = parse_settings(v)?;
    }
    if let Some(v) = &args.n {
        if spec.topology == TopologyKind::SingleLink {
            bail!("--n applies to star topologies only");
        }
        spec.sizes = v.clone();
    }
    if let Some(v) = args.arrivals {
        spec.arrivals = v;
    }
    if let Some(v) = args.reps {
        spec.replications = v;
    }
    if let Some(v) = args.seed {
        spec.seed = v;
    }
    if let Some(v) = &args.out {
        spec.output = Some(v.clone());
    }
    spec.validate()?;
    Ok(spec)
}

fn summary(spec: &ExperimentSpec, rows: &[CsvRow]) -> String {
    let mut s = format!(
        "{} ({} arrivals x {} replications, seed {})\n{:>4} {:>6} {:<18} {:>10} {:>10} {:>10} {:>10}\n",
        spec.name,
        spec.arrivals,
        spec.replications,
        spec.seed,
        "n",
        "load",
        "setting",
        "blocking",
        "fail",
        "flow_time",
        "intervals"
    );
    for r in rows.iter().filter(|r| r.replication.is_none()) {
        s += &format!(
            "{:>4} {:>6.3} {:<18} {:>10.4} {:>10.4} {:>10.4} {:>10.4}\n",
            r.topology_n, r.load, r.scheme, r.blocking_prob, r.fail_prob, r.mean_flow_time, r.mean_intervals
        );
    }
    s
}

fn oracle(args: &OracleArgs) -> Result<ExitCode> {
    if args.loads.is_empty() || args.loads.iter().any(|l| !(*l > 0.0)) || args.arrivals == 0 || args.reps == 0 {
        bail!("loads, arrivals and reps must be positive");
    }
    let rows = oracle_check(&args.loads, 10, args.arrivals, args.reps, args.seed);
    println!(
        "{:>6} {:>10} {:>10} {:>10} {:>10} {:>10}  result",
        "load", "simulated", "std_err", "erlang_b", "abs_diff", "tolerance"
    );
    let mut all = true;
    for r in &rows {
        let pass = r.passes();
        all &= pass;
        println!(
            "{:>6.3} {:>10.5} {:>10.5} {:>10.5} {:>10.5} {:>10.5}  {}",
            r.load,
            r.simulated.mean,
            r.simulated.std_error(),
            r.erlang_b,
            (r.simulated.mean - r.erlang_b).abs(),
            r.tolerance,
            if pass { "PASS" } else { "FAIL" }
        );
    }
    Ok(if all { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

/// Link with 0 free on [0,1), 1 on [1,3), 2 afterwards; capacity 4; requests
/// arrive at 0 with maximum rate 2.
fn demo_worked_example() -> String {
    let link = StepFn::from_levels([(1.0, 1.0), (3.0, 2.0)]);
    let snapshot = PathSnapshot::from_links([(link.evaluate(0.0), 4.0)]);
    let mut schemes = vec![
        SchemeKind::FixTimeFixRate(bulkresv::reservation::RateRule::MinRate),
        SchemeKind::FixTimeFixRate(bulkresv::reservation::RateRule::MaxRate),
    ];
    schemes.extend(SchemeKind::evaluated().into_iter().skip(2));
    let mut out = format!("link remaining: {link}\n");
    for (id, (volume, deadline)) in [(4.0, 4.0), (6.0, 6.0)].into_iter().enumerate() {
        let r = Request::new(RequestId(id as u64), SiteId(0), SiteId(1), volume, 0.0, deadline, 2.0)
            .expect("valid request");
        out += &format!("\nrequest v={volume} deadline={deadline} max_rate=2\n");
        let c = combined_constraint(&r, [&link]);
        for scheme in &schemes {
            let d = decide(scheme, &r, &c, &snapshot);
            match d.reservation() {
                None => out += &format!("  {:<18} reject\n", scheme.to_string()),
                Some(f) => {
                    let pieces: Vec<String> = f
                        .pieces()
                        .filter(|p| p.value > 0.0)
                        .map(|p| format!("{}/[{},{})", p.value, p.start, p.end))
                        .collect();
                    out += &format!(
                        "  {:<18} accept {}  completion={}\n",
                        scheme.to_string(),
                        pieces.join(" + "),
                        d.completion_time().expect("accepted")
                    );
                }
            }
        }
    }
    out
}
