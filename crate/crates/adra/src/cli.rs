//! The `adra` command-line front end.
//!
//! Subcommands: `solve`, `simulate`, `sweep-delta`, `optimize`, `compare`.
//! File-emitting commands write CSVs with stable schemas plus a `key=value`
//! manifest capturing the fully resolved parameter set, so any run can be
//! reproduced byte-identically from its manifest.
//!
//! Exit codes: 0 success, 2 invalid arguments, 3 solver failure, 4 I/O
//! failure.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};

use crate::analytic::{
    average_aoi_adra, average_aoi_aira, solve_success_probability, FixedPointSolution,
    ProtocolConfig, StationaryAgeDistribution,
};
use crate::error::{Error, Result};
use crate::opt::{self, SearchSpace, SweepRecord};
use crate::sim::{self, CapPolicy, SimConfig};

/// Overrides the default output directory (`.`) when set; the `--out-dir`
/// flag wins over both.
pub const OUT_DIR_ENV: &str = "ADRA_OUT_DIR";

const SOLVER_TOL: f64 = 1e-12;

#[derive(Debug, Parser)]
#[command(
    name = "adra",
    version,
    about = "Threshold-based age-dependent random access: AoI analytics, optimization and simulation"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve the success-probability fixed point and print q, eta and the
    /// average AoI
    Solve(SolveArgs),
    /// Simulate a policy; emits an age-distribution CSV and a summary CSV
    Simulate(SimulateArgs),
    /// Sweep the age threshold at a fixed access probability
    SweepDelta(SweepDeltaArgs),
    /// Exhaustive (p, delta) search for the minimum analytic average AoI
    Optimize(OptimizeArgs),
    /// Optimized threshold policy vs the age-independent baseline across
    /// network sizes
    Compare(CompareArgs),
}

#[derive(Debug, Args)]
struct SolveArgs {
    /// Number of devices
    #[arg(long)]
    n: u32,
    /// Access probability; absolute ("0.04") or relative ("2/N")
    #[arg(long)]
    p: String,
    /// Age threshold (slots)
    #[arg(long)]
    delta: u32,
    /// Residual tolerance for the bisection
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
}

#[derive(Debug, Args)]
struct OutputArgs {
    /// Output directory (default: $ADRA_OUT_DIR, else ".")
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Basename prefix for emitted files (default: the subcommand name)
    #[arg(long)]
    prefix: Option<String>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Number of devices
    #[arg(long)]
    n: u32,
    /// Access probability; absolute ("0.04") or relative ("2/N")
    #[arg(long)]
    p: Option<String>,
    /// Age threshold for the default threshold policy
    #[arg(long)]
    delta: Option<u32>,
    /// Age-independent policy (transmit with --p at every age)
    #[arg(long)]
    aira: bool,
    /// General age-indexed CAP table, e.g. "0,0,0.3"; the last entry repeats
    #[arg(long)]
    cap_table: Option<String>,
    /// Slots per replication, warmup included
    #[arg(long, default_value_t = 1_000_000)]
    horizon: u64,
    /// Leading slots excluded from statistics
    #[arg(long, default_value_t = 10_000)]
    warmup: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    replications: u32,
    /// Largest individually reported age bucket (default: max(100*delta, 1000))
    #[arg(long)]
    pmf_cap: Option<u64>,
    /// Worker threads for replications (default: all cores)
    #[arg(long)]
    threads: Option<usize>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct SweepDeltaArgs {
    /// Number of devices
    #[arg(long)]
    n: u32,
    /// Access probability; absolute or relative ("1.5/N")
    #[arg(long)]
    p: String,
    /// Threshold grid: a single value ("25") or an inclusive range ("1..100")
    #[arg(long)]
    delta: String,
    /// Attach simulated columns to every row
    #[arg(long)]
    simulate: bool,
    #[arg(long, default_value_t = 1_000_000)]
    horizon: u64,
    #[arg(long, default_value_t = 10_000)]
    warmup: u64,
    /// Base seed; row r simulates with seed + delta_r
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    replications: u32,
    #[arg(long)]
    threads: Option<usize>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct OptimizeArgs {
    /// Number of devices
    #[arg(long)]
    n: u32,
    /// Number of p grid points in (0, p-max]
    #[arg(long, default_value_t = 200)]
    p_points: u32,
    /// Upper end of the p grid; absolute or relative (default "2/N")
    #[arg(long)]
    p_max: Option<String>,
    /// Largest threshold searched (default 5*N)
    #[arg(long)]
    delta_max: Option<u32>,
    /// Also write the full (p, delta, avg AoI) surface as CSV
    #[arg(long)]
    surface: bool,
    #[arg(long)]
    threads: Option<usize>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct CompareArgs {
    /// Network sizes: comma-separated values and/or inclusive ranges,
    /// e.g. "10,20,50,100" or "2..8,16"
    #[arg(long)]
    n_list: String,
    #[arg(long)]
    threads: Option<usize>,
    #[command(flatten)]
    output: OutputArgs,
}

/// Parses the command line, dispatches, and maps failures to exit codes.
pub fn run() -> i32 {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err}");
            exit_code(&err)
        }
    }
}

fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InvalidArgument(_)
        | Error::Domain(_)
        | Error::NoAttempts
        | Error::AgeCapTooSmall { .. } => 2,
        Error::NoSignChange { .. } | Error::AllPointsFailed(_) => 3,
        Error::Io(_) => 4,
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Solve(args) => cmd_solve(&args),
        Command::Simulate(args) => cmd_simulate(&args),
        Command::SweepDelta(args) => cmd_sweep_delta(&args),
        Command::Optimize(args) => cmd_optimize(&args),
        Command::Compare(args) => cmd_compare(&args),
    }
}

/// Accepts an absolute probability ("0.04") or the `c/N` shorthand the
/// experiments are parameterized with ("1.5/N").
fn resolve_p(raw: &str, n_devices: u32) -> Result<f64> {
    let raw = raw.trim();
    let parse = |s: &str| -> Result<f64> {
        s.parse::<f64>()
            .map_err(|_| Error::InvalidArgument(format!("cannot parse probability '{raw}'")))
    };
    if let Some(num) = raw.strip_suffix("/N").or_else(|| raw.strip_suffix("/n")) {
        if n_devices == 0 {
            return Err(Error::InvalidArgument("n must be >= 1 for c/N".into()));
        }
        Ok(parse(num)? / f64::from(n_devices))
    } else {
        parse(raw)
    }
}

/// "a..b" (inclusive) or a single "a".
fn parse_delta_range(raw: &str) -> Result<Vec<u32>> {
    let raw = raw.trim();
    let parse = |s: &str| -> Result<u32> {
        s.parse::<u32>()
            .map_err(|_| Error::InvalidArgument(format!("cannot parse threshold range '{raw}'")))
    };
    if let Some((a, b)) = raw.split_once("..") {
        let (a, b) = (parse(a)?, parse(b)?);
        if a > b {
            return Err(Error::InvalidArgument(format!(
                "empty threshold range '{raw}'"
            )));
        }
        Ok((a..=b).collect())
    } else {
        Ok(vec![parse(raw)?])
    }
}

fn parse_n_list(raw: &str) -> Result<Vec<u32>> {
    let mut out = Vec::new();
    for item in raw.split(',') {
        out.extend(parse_delta_range(item)?);
    }
    if out.is_empty() {
        return Err(Error::InvalidArgument("empty n list".into()));
    }
    Ok(out)
}

fn parse_cap_table(raw: &str) -> Result<Vec<f64>> {
    raw.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidArgument(format!("cannot parse CAP table entry '{s}'")))
        })
        .collect()
}

fn init_threads(threads: Option<usize>) {
    if let Some(t) = threads {
        // A second init in the same process is harmless; the first pool wins
        // and results are identical either way.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global();
    }
}

fn out_dir(output: &OutputArgs) -> PathBuf {
    output
        .out_dir
        .clone()
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

fn open_out(dir: &Path, name: &str) -> Result<(PathBuf, BufWriter<File>)> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(name);
    let file = File::create(&path)?;
    Ok((path, BufWriter::new(file)))
}

/// Reproducibility manifest: `key=value` lines, one per parameter.
struct Manifest {
    entries: Vec<(String, String)>,
}

impl Manifest {
    fn new(command: &str, command_line: String) -> Self {
        let timestamp = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        let mut m = Self {
            entries: Vec::new(),
        };
        m.push("command", command);
        m.push("version", env!("CARGO_PKG_VERSION"));
        m.push("timestamp_unix", timestamp);
        m.push("command_line", command_line);
        m
    }

    fn push(&mut self, key: &str, value: impl ToString) {
        self.entries.push((key.to_string(), value.to_string()));
    }

    fn write(&self, dir: &Path, name: &str) -> Result<PathBuf> {
        let (path, mut w) = open_out(dir, name)?;
        for (key, value) in &self.entries {
            writeln!(w, "{key}={value}")?;
        }
        w.flush()?;
        Ok(path)
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

// ---------------------------------------------------------------------------
// solve
// ---------------------------------------------------------------------------

fn cmd_solve(args: &SolveArgs) -> Result<()> {
    let p = resolve_p(&args.p, args.n)?;
    let config = ProtocolConfig::new(args.n, p, args.delta)?;
    let solution = solve_success_probability(&config, args.tol)?;
    let aoi = average_aoi_adra(&config, &solution);
    println!("n = {}", args.n);
    println!("p = {p}");
    println!("delta = {}", args.delta);
    println!("q = {}", solution.q);
    println!("eta = {}", solution.eta);
    println!("average_aoi = {}", aoi.average_aoi);
    println!("iterations = {}", solution.iterations);
    println!("residual = {:e}", solution.residual);
    println!("regime_warning = {}", solution.regime_warning);
    Ok(())
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

fn build_policy(args: &SimulateArgs) -> Result<CapPolicy> {
    if let Some(raw) = &args.cap_table {
        if args.aira || args.delta.is_some() || args.p.is_some() {
            return Err(Error::InvalidArgument(
                "--cap-table cannot be combined with --p/--delta/--aira".into(),
            ));
        }
        return Ok(CapPolicy::General {
            table: parse_cap_table(raw)?,
        });
    }
    let p_raw = args
        .p
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("--p is required".into()))?;
    let cap = resolve_p(p_raw, args.n)?;
    if args.aira {
        if args.delta.is_some() {
            return Err(Error::InvalidArgument(
                "--aira and --delta are mutually exclusive".into(),
            ));
        }
        Ok(CapPolicy::Aira { cap })
    } else {
        let threshold = args.delta.ok_or_else(|| {
            Error::InvalidArgument(
                "--delta is required for the threshold policy (or pass --aira / --cap-table)"
                    .into(),
            )
        })?;
        Ok(CapPolicy::Adra { threshold, cap })
    }
}

/// Decoupled-model overlay for policies the analytics cover. `None` for
/// general tables, single-device runs, and degenerate fixed points.
fn analytic_overlay(n: u32, policy: &CapPolicy) -> Option<(ProtocolConfig, FixedPointSolution)> {
    let (cap, threshold) = match policy {
        CapPolicy::Adra { threshold, cap } => (*cap, *threshold),
        CapPolicy::Aira { cap } => (*cap, 1),
        CapPolicy::General { .. } => return None,
    };
    let config = ProtocolConfig::new(n, cap, threshold).ok()?;
    let solution = solve_success_probability(&config, SOLVER_TOL).ok()?;
    (solution.q > 0.0).then_some((config, solution))
}

fn cmd_simulate(args: &SimulateArgs) -> Result<()> {
    init_threads(args.threads);
    let policy = build_policy(args)?;
    let pmf_cap = args
        .pmf_cap
        .unwrap_or_else(|| SimConfig::default_pmf_cap(&policy));
    let sim_cfg = SimConfig {
        horizon: args.horizon,
        warmup: args.warmup,
        seed: args.seed,
        replications: args.replications,
        pmf_cap,
    };
    let report = sim::run(args.n as usize, &policy, &sim_cfg)?;
    let overlay = analytic_overlay(args.n, &policy);

    let dir = out_dir(&args.output);
    let prefix = args.output.prefix.as_deref().unwrap_or("simulate");

    // age,analytic_pmf,empirical_pmf with a final overflow row
    let (pmf_path, mut w) = open_out(&dir, &format!("{prefix}_pmf.csv"))?;
    writeln!(w, "age,analytic_pmf,empirical_pmf")?;
    let dist = overlay
        .as_ref()
        .map(|(c, s)| StationaryAgeDistribution::new(c, s));
    for l in 1..=pmf_cap {
        let analytic = match &dist {
            Some(d) => d.pmf(l)?.to_string(),
            None => String::new(),
        };
        writeln!(
            w,
            "{l},{analytic},{}",
            report.empirical_pmf[(l - 1) as usize]
        )?;
    }
    let analytic_tail = match &dist {
        Some(d) => d.tail_mass_beyond(pmf_cap).to_string(),
        None => String::new(),
    };
    writeln!(w, "overflow,{analytic_tail},{}", report.pmf_overflow)?;
    w.flush()?;

    let (summary_path, mut w) = open_out(&dir, &format!("{prefix}_summary.csv"))?;
    writeln!(
        w,
        "n,policy,p,delta,horizon,warmup,replications,seed,pmf_cap,network_avg_aoi,\
         avg_aoi_stderr,success_rate,collision_rate,idle_rate,empirical_q,analytic_q,\
         analytic_avg_aoi,regime_warning"
    )?;
    let (p_col, delta_col) = match &policy {
        CapPolicy::Adra { threshold, cap } => (cap.to_string(), threshold.to_string()),
        CapPolicy::Aira { cap } => (cap.to_string(), String::new()),
        CapPolicy::General { .. } => (String::new(), String::new()),
    };
    let empirical_q = fmt_opt(sim::empirical_success_probability(&report).ok());
    let (analytic_q, analytic_aoi, warning) = match &overlay {
        Some((c, s)) => (
            s.q.to_string(),
            average_aoi_adra(c, s).average_aoi.to_string(),
            s.regime_warning.to_string(),
        ),
        None => (String::new(), String::new(), String::new()),
    };
    writeln!(
        w,
        "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
        args.n,
        policy.kind_name(),
        p_col,
        delta_col,
        args.horizon,
        args.warmup,
        args.replications,
        args.seed,
        pmf_cap,
        report.network_avg_aoi,
        report.avg_aoi_stderr,
        report.success_rate,
        report.collision_rate,
        report.idle_rate,
        empirical_q,
        analytic_q,
        analytic_aoi,
        warning,
    )?;
    w.flush()?;

    let mut command_line = format!("adra simulate --n {}", args.n);
    match &policy {
        CapPolicy::Adra { threshold, cap } => {
            command_line.push_str(&format!(" --p {cap} --delta {threshold}"));
        }
        CapPolicy::Aira { cap } => command_line.push_str(&format!(" --p {cap} --aira")),
        CapPolicy::General { table } => {
            let joined: Vec<String> = table.iter().map(|p| p.to_string()).collect();
            command_line.push_str(&format!(" --cap-table {}", joined.join(",")));
        }
    }
    command_line.push_str(&format!(
        " --horizon {} --warmup {} --seed {} --replications {} --pmf-cap {pmf_cap}",
        args.horizon, args.warmup, args.seed, args.replications
    ));
    let mut manifest = Manifest::new("simulate", command_line);
    manifest.push("n", args.n);
    manifest.push("policy", policy.kind_name());
    if !p_col.is_empty() {
        manifest.push("p", &p_col);
    }
    if !delta_col.is_empty() {
        manifest.push("delta", &delta_col);
    }
    if let CapPolicy::General { table } = &policy {
        let joined: Vec<String> = table.iter().map(|p| p.to_string()).collect();
        manifest.push("cap_table", joined.join(","));
    }
    manifest.push("horizon", args.horizon);
    manifest.push("warmup", args.warmup);
    manifest.push("seed", args.seed);
    manifest.push("replications", args.replications);
    manifest.push("pmf_cap", pmf_cap);
    manifest.push("out_pmf", pmf_path.display());
    manifest.push("out_summary", summary_path.display());
    let manifest_path = manifest.write(&dir, &format!("{prefix}_manifest.txt"))?;

    println!("network_avg_aoi = {}", report.network_avg_aoi);
    println!("empirical_q = {empirical_q}");
    println!("wrote {}", pmf_path.display());
    println!("wrote {}", summary_path.display());
    println!("wrote {}", manifest_path.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// sweep-delta
// ---------------------------------------------------------------------------

const SWEEP_HEADER: &str =
    "n,p,delta,analytic_q,analytic_avg_aoi,sim_avg_aoi,sim_stderr,empirical_q";

fn write_sweep_rows<W: Write>(w: &mut W, records: &[SweepRecord]) -> Result<()> {
    writeln!(w, "{SWEEP_HEADER}")?;
    for r in records {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            r.n,
            r.p,
            r.delta,
            r.analytic_q,
            r.analytic_avg_aoi,
            fmt_opt(r.sim_avg_aoi),
            fmt_opt(r.sim_stderr),
            fmt_opt(r.empirical_q),
        )?;
    }
    Ok(())
}

fn cmd_sweep_delta(args: &SweepDeltaArgs) -> Result<()> {
    init_threads(args.threads);
    let p = resolve_p(&args.p, args.n)?;
    let deltas = parse_delta_range(&args.delta)?;
    let mut records = opt::sweep_delta(args.n, p, &deltas)?;

    if args.simulate {
        use rayon::prelude::*;
        let results: Vec<Result<(f64, f64, Option<f64>)>> = records
            .par_iter()
            .map(|rec| {
                let policy = CapPolicy::Adra {
                    threshold: rec.delta,
                    cap: rec.p,
                };
                let sim_cfg = SimConfig {
                    horizon: args.horizon,
                    warmup: args.warmup,
                    // decorrelate rows while staying reproducible
                    seed: args.seed.wrapping_add(u64::from(rec.delta)),
                    replications: args.replications,
                    pmf_cap: SimConfig::default_pmf_cap(&policy),
                };
                let report = sim::run(args.n as usize, &policy, &sim_cfg)?;
                let q_hat = sim::empirical_success_probability(&report).ok();
                Ok((report.network_avg_aoi, report.avg_aoi_stderr, q_hat))
            })
            .collect();
        for (rec, result) in records.iter_mut().zip(results) {
            let (avg, stderr, q_hat) = result?;
            rec.sim_avg_aoi = Some(avg);
            rec.sim_stderr = Some(stderr);
            rec.empirical_q = q_hat;
        }
    }

    let dir = out_dir(&args.output);
    let prefix = args.output.prefix.as_deref().unwrap_or("sweep_delta");
    let (csv_path, mut w) = open_out(&dir, &format!("{prefix}.csv"))?;
    write_sweep_rows(&mut w, &records)?;
    w.flush()?;

    let mut command_line = format!(
        "adra sweep-delta --n {} --p {p} --delta {}",
        args.n, args.delta
    );
    if args.simulate {
        command_line.push_str(&format!(
            " --simulate --horizon {} --warmup {} --seed {} --replications {}",
            args.horizon, args.warmup, args.seed, args.replications
        ));
    }
    let mut manifest = Manifest::new("sweep-delta", command_line);
    manifest.push("n", args.n);
    manifest.push("p", p);
    manifest.push("delta_grid", &args.delta);
    manifest.push("simulate", args.simulate);
    if args.simulate {
        manifest.push("horizon", args.horizon);
        manifest.push("warmup", args.warmup);
        manifest.push("seed", args.seed);
        manifest.push("row_seed_rule", "seed + delta");
        manifest.push("replications", args.replications);
    }
    manifest.push("out_csv", csv_path.display());
    let manifest_path = manifest.write(&dir, &format!("{prefix}_manifest.txt"))?;

    println!("rows = {}", records.len());
    println!("wrote {}", csv_path.display());
    println!("wrote {}", manifest_path.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// optimize
// ---------------------------------------------------------------------------

fn build_space(args: &OptimizeArgs) -> Result<SearchSpace> {
    if args.p_points < 1 {
        return Err(Error::InvalidArgument("--p-points must be >= 1".into()));
    }
    let p_max = match &args.p_max {
        Some(raw) => resolve_p(raw, args.n)?,
        None => 2.0 / f64::from(args.n),
    };
    if !(p_max > 0.0 && p_max <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "--p-max must lie in (0, 1], got {p_max}"
        )));
    }
    let delta_max = args.delta_max.unwrap_or(5 * args.n);
    if delta_max < 1 {
        return Err(Error::InvalidArgument("--delta-max must be >= 1".into()));
    }
    Ok(SearchSpace {
        p_grid: (1..=args.p_points)
            .map(|i| p_max * f64::from(i) / f64::from(args.p_points))
            .collect(),
        delta_grid: (1..=delta_max).collect(),
    })
}

fn cmd_optimize(args: &OptimizeArgs) -> Result<()> {
    init_threads(args.threads);
    let space = build_space(args)?;
    let report = opt::optimize(args.n, &space)?;

    println!("n = {}", args.n);
    println!("best_p = {}", report.best_p);
    println!("best_delta = {}", report.best_delta);
    println!("best_avg_aoi = {}", report.best_avg_aoi);
    println!(
        "evaluated = {}",
        report.full_surface.as_ref().map_or(0, Vec::len)
    );
    println!("skipped = {}", report.skipped.len());

    if args.surface {
        let dir = out_dir(&args.output);
        let prefix = args.output.prefix.as_deref().unwrap_or("optimize");
        let (csv_path, mut w) = open_out(&dir, &format!("{prefix}_surface.csv"))?;
        write_sweep_rows(&mut w, report.full_surface.as_deref().unwrap_or(&[]))?;
        w.flush()?;

        let command_line = format!(
            "adra optimize --n {} --p-points {} --p-max {} --delta-max {} --surface",
            args.n,
            args.p_points,
            space.p_grid.last().unwrap(),
            space.delta_grid.last().unwrap(),
        );
        let mut manifest = Manifest::new("optimize", command_line);
        manifest.push("n", args.n);
        manifest.push("p_points", args.p_points);
        manifest.push("p_max", space.p_grid.last().unwrap());
        manifest.push("delta_max", space.delta_grid.last().unwrap());
        manifest.push("best_p", report.best_p);
        manifest.push("best_delta", report.best_delta);
        manifest.push("best_avg_aoi", report.best_avg_aoi);
        manifest.push("out_csv", csv_path.display());
        let manifest_path = manifest.write(&dir, &format!("{prefix}_manifest.txt"))?;
        println!("wrote {}", csv_path.display());
        println!("wrote {}", manifest_path.display());
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// compare
// ---------------------------------------------------------------------------

fn cmd_compare(args: &CompareArgs) -> Result<()> {
    init_threads(args.threads);
    let ns = parse_n_list(&args.n_list)?;

    let dir = out_dir(&args.output);
    let prefix = args.output.prefix.as_deref().unwrap_or("compare");
    let (csv_path, mut w) = open_out(&dir, &format!("{prefix}.csv"))?;
    writeln!(
        w,
        "n,aira_p,aira_avg_aoi,adra_p,adra_delta,adra_q,adra_avg_aoi,gap,regime_warning"
    )?;
    for &n in &ns {
        let aira_p = 1.0 / f64::from(n);
        let aira = average_aoi_aira(n, aira_p)?;
        let report = opt::optimize(n, &SearchSpace::default_for(n))?;
        let config = ProtocolConfig::new(n, report.best_p, report.best_delta)?;
        let solution = solve_success_probability(&config, SOLVER_TOL)?;
        let gap = aira.average_aoi - report.best_avg_aoi;
        writeln!(
            w,
            "{n},{aira_p},{},{},{},{},{},{gap},{}",
            aira.average_aoi,
            report.best_p,
            report.best_delta,
            solution.q,
            report.best_avg_aoi,
            solution.regime_warning,
        )?;
    }
    w.flush()?;

    let command_line = format!("adra compare --n-list {}", args.n_list);
    let mut manifest = Manifest::new("compare", command_line);
    manifest.push("n_list", &args.n_list);
    manifest.push("aira_p_rule", "1/N");
    manifest.push(
        "search",
        "default grid: 200 p points in (0,2/N], delta in 1..=5N",
    );
    manifest.push("out_csv", csv_path.display());
    let manifest_path = manifest.write(&dir, &format!("{prefix}_manifest.txt"))?;

    println!("rows = {}", ns.len());
    println!("wrote {}", csv_path.display());
    println!("wrote {}", manifest_path.display());
    Ok(())
}
