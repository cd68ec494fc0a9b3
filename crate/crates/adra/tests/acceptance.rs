//! Acceptance gate.
//!
//! Every criterion runs at its stated tolerance and prints one pass/fail
//! line (visible with `--nocapture`). Criteria keep running after a failure
//! so a red run reports everything at once.

use std::time::{Duration, Instant};

use adra::analytic::{
    average_aoi_adra, average_aoi_aira, exact_small_n_average_aoi, g_eval,
    solve_success_probability, stationary_pmf, tail_rule_age_cap, ProtocolConfig,
    StationaryAgeDistribution,
};
use adra::opt::{optimize, sweep_delta, SearchSpace};
use adra::sim::{self, CapPolicy, SimConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const AIRA_10_01: f64 = 25.811747917131967; // 1 / (0.1 * 0.9^9)

struct Gate {
    failures: Vec<String>,
}

impl Gate {
    fn new() -> Self {
        Self {
            failures: Vec::new(),
        }
    }

    fn criterion(
        &mut self,
        id: u32,
        name: &str,
        budget: Option<Duration>,
        check: impl FnOnce() -> Result<String, String>,
    ) {
        let start = Instant::now();
        let result = check();
        let elapsed = start.elapsed();
        let mut verdict = match &result {
            Ok(_) => "PASS",
            Err(_) => "FAIL",
        };
        let mut note = match result {
            Ok(detail) => detail,
            Err(msg) => msg,
        };
        if let Some(budget) = budget {
            if elapsed > budget {
                verdict = "FAIL";
                note = format!("runtime {elapsed:?} exceeded budget {budget:?}; {note}");
            }
        }
        println!("criterion {id} {verdict} [{elapsed:.2?}] {name}: {note}");
        if verdict == "FAIL" {
            self.failures
                .push(format!("criterion {id} ({name}): {note}"));
        }
    }

    fn finish(self) {
        assert!(
            self.failures.is_empty(),
            "acceptance criteria failed:\n{}",
            self.failures.join("\n")
        );
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn kahan_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut c = 0.0;
    for v in values {
        let y = v - c;
        let t = sum + y;
        c = (t - sum) - y;
        sum = t;
    }
    sum
}

/// The 20-point access-probability grid `{0.1/N .. 2/N}`.
fn p_grid(n: u32) -> impl Iterator<Item = f64> {
    (0..20).map(move |j| (0.1 + 1.9 * j as f64 / 19.0) / f64::from(n))
}

// --------------------------------------------------------------------------
// 1. delta = 1 reduction: solver equals (1-p)^(N-1), threshold formula
//    equals the baseline formula.
// --------------------------------------------------------------------------
fn delta_one_reduction() -> Result<String, String> {
    let mut max_q_err = 0.0f64;
    let mut max_aoi_err = 0.0f64;
    let mut points = 0u32;
    for n in 2..=100u32 {
        for p in p_grid(n) {
            let config = ProtocolConfig::new(n, p, 1).map_err(|e| e.to_string())?;
            let sol = solve_success_probability(&config, 1e-12).map_err(|e| e.to_string())?;
            let q_ref = (1.0 - p).powi(n as i32 - 1);
            let q_err = (sol.q - q_ref).abs();
            ensure(q_err <= 1e-12, || {
                format!("|q - (1-p)^(N-1)| = {q_err:.3e} at N={n} p={p}")
            })?;
            max_q_err = max_q_err.max(q_err);

            let threshold_formula = average_aoi_adra(&config, &sol).average_aoi;
            let baseline_formula = 1.0 / (p * q_ref);
            if threshold_formula.is_infinite() && baseline_formula.is_infinite() {
                // the p = 2/N = 1 corner at N = 2: both sides diverge together
                points += 1;
                continue;
            }
            let aoi_err = (threshold_formula - baseline_formula).abs();
            ensure(aoi_err <= 1e-9, || {
                format!("|avg15 - avg3| = {aoi_err:.3e} at N={n} p={p}")
            })?;
            max_aoi_err = max_aoi_err.max(aoi_err);
            points += 1;
        }
    }
    Ok(format!(
        "{points} grid points; max q error {max_q_err:.1e}, max AoI error {max_aoi_err:.1e}"
    ))
}

// --------------------------------------------------------------------------
// 2. Lemma suite: bracket signs and monotonicity of g on the lemma interval.
// --------------------------------------------------------------------------
fn lemma_suite() -> Result<String, String> {
    let mut configs = 0u32;
    for n in 3..=100u32 {
        for p in p_grid(n) {
            for delta in [1, (n / 2).max(2), n] {
                let config = ProtocolConfig::new(n, p, delta).map_err(|e| e.to_string())?;
                let lo = config.lemma_lower_bound();
                let g_lo = g_eval(&config, lo).map_err(|e| e.to_string())?;
                ensure(g_lo <= 1e-12, || {
                    format!("g(lower) = {g_lo:.3e} > 0 at N={n} p={p} delta={delta}")
                })?;
                let g_hi = g_eval(&config, 1.0).map_err(|e| e.to_string())?;
                ensure(g_hi >= -1e-12, || {
                    format!("g(1) = {g_hi:.3e} < 0 at N={n} p={p} delta={delta}")
                })?;
                let mut prev = f64::NEG_INFINITY;
                for i in 0..1000 {
                    let q = lo + (1.0 - lo) * i as f64 / 999.0;
                    let g = g_eval(&config, q).map_err(|e| e.to_string())?;
                    ensure(g >= prev - 1e-12, || {
                        format!(
                            "g not nondecreasing at N={n} p={p} delta={delta} q={q}: {g} < {prev}"
                        )
                    })?;
                    prev = g;
                }
                configs += 1;
            }
        }
    }
    Ok(format!("{configs} configs x 1000 bracket samples"))
}

// --------------------------------------------------------------------------
// 3. Stationary-law identities on 50 random valid configs.
// --------------------------------------------------------------------------
fn stationary_identities() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for trial in 0..50u32 {
        let n: u32 = rng.random_range(3..=100);
        let p = rng.random_range(0.05..=1.0) * 2.0 / f64::from(n);
        let delta: u32 = rng.random_range(1..=3 * n);
        let config = ProtocolConfig::new(n, p, delta).map_err(|e| e.to_string())?;
        let sol = solve_success_probability(&config, 1e-12).map_err(|e| e.to_string())?;
        let dist = StationaryAgeDistribution::new(&config, &sol);
        let pq = p * sol.q;
        let label = || format!("(trial {trial}: N={n} p={p} delta={delta})");

        // closed-form normalization identity
        let identity = dist.head_mass() * (f64::from(delta) + (1.0 - pq) / pq);
        ensure((identity - 1.0).abs() <= 1e-12, || {
            format!("closed-form mass {identity} != 1 {}", label())
        })?;

        // truncated numeric mass plus the closed tail
        let l_max = u64::from(delta) + (50.0 / pq).ceil() as u64;
        let mass = kahan_sum((1..=l_max).map(|l| stationary_pmf(&config, &sol, l).unwrap()))
            + dist.tail_mass_beyond(l_max);
        ensure((mass - 1.0).abs() <= 1e-12, || {
            format!("numeric mass {mass} != 1 {}", label())
        })?;

        // flat head
        let head1 = stationary_pmf(&config, &sol, 1).map_err(|e| e.to_string())?;
        let head_d = stationary_pmf(&config, &sol, u64::from(delta)).map_err(|e| e.to_string())?;
        ensure(head1 == head_d, || format!("head not flat {}", label()))?;

        // geometric tail ratio
        for l in [u64::from(delta), u64::from(delta) + 9] {
            let a = stationary_pmf(&config, &sol, l).unwrap();
            let b = stationary_pmf(&config, &sol, l + 1).unwrap();
            ensure((b / a - (1.0 - pq)).abs() <= 1e-12, || {
                format!("tail ratio {} != {} {}", b / a, 1.0 - pq, label())
            })?;
        }

        // first moment: truncated series plus closed geometric remainder
        let series =
            kahan_sum((1..=l_max).map(|l| l as f64 * stationary_pmf(&config, &sol, l).unwrap()))
                + {
                    let m = (l_max + 1 - u64::from(delta)) as f64;
                    let r = 1.0 - pq;
                    dist.head_mass()
                        * r.powf(m)
                        * (f64::from(delta) / pq + (m * pq + r) / (pq * pq))
                };
        let closed = average_aoi_adra(&config, &sol).average_aoi;
        ensure((series - closed).abs() <= 1e-9, || {
            format!("series {series} vs closed {closed} {}", label())
        })?;
    }
    Ok("50 random configs: normalization, head flatness, tail ratio, first moment".into())
}

// --------------------------------------------------------------------------
// 4. Simulation vs analytics for the age-independent baseline.
// --------------------------------------------------------------------------
fn simulation_matches_baseline() -> Result<String, String> {
    let report = sim::run(
        10,
        &CapPolicy::Aira { cap: 0.1 },
        &SimConfig {
            horizon: 1_000_000,
            warmup: 10_000,
            seed: 4242,
            replications: 10,
            pmf_cap: 1000,
        },
    )
    .map_err(|e| e.to_string())?;
    let avg_rel = (report.network_avg_aoi - AIRA_10_01).abs() / AIRA_10_01;
    ensure(avg_rel <= 0.02, || {
        format!(
            "average AoI {} deviates {avg_rel:.4} from {AIRA_10_01}",
            report.network_avg_aoi
        )
    })?;
    let q_hat = sim::empirical_success_probability(&report).map_err(|e| e.to_string())?;
    let q_ref = 0.9f64.powi(9);
    let q_rel = (q_hat - q_ref).abs() / q_ref;
    ensure(q_rel <= 0.01, || {
        format!("empirical q {q_hat} deviates {q_rel:.4} from {q_ref}")
    })?;
    Ok(format!(
        "avg {:.4} (rel err {avg_rel:.4}), empirical q {q_hat:.5} (rel err {q_rel:.4})",
        report.network_avg_aoi
    ))
}

// --------------------------------------------------------------------------
// 5. Simulated age distribution vs the stationary law for the threshold
//    policy at N = 50.
// --------------------------------------------------------------------------
fn simulation_matches_age_distribution() -> Result<String, String> {
    let mut details = Vec::new();
    for (p, delta) in [(0.04f64, 50u32), (0.03, 25)] {
        let config = ProtocolConfig::new(50, p, delta).map_err(|e| e.to_string())?;
        let sol = solve_success_probability(&config, 1e-12).map_err(|e| e.to_string())?;
        let dist = StationaryAgeDistribution::new(&config, &sol);
        let policy = CapPolicy::Adra {
            threshold: delta,
            cap: p,
        };
        let pmf_cap = SimConfig::default_pmf_cap(&policy);
        let report = sim::run(
            50,
            &policy,
            &SimConfig {
                horizon: 1_000_000,
                warmup: 10_000,
                seed: 20_2020,
                replications: 1,
                pmf_cap,
            },
        )
        .map_err(|e| e.to_string())?;

        let mut tv = (report.pmf_overflow - dist.tail_mass_beyond(pmf_cap)).abs();
        for l in 1..=pmf_cap {
            tv += (report.empirical_pmf[(l - 1) as usize] - dist.pmf(l).unwrap()).abs();
        }
        tv *= 0.5;
        ensure(tv <= 0.05, || {
            format!("TV distance {tv:.4} > 0.05 at p={p} delta={delta}")
        })?;

        let q_hat = sim::empirical_success_probability(&report).map_err(|e| e.to_string())?;
        let q_rel = (q_hat - sol.q).abs() / sol.q;
        ensure(q_rel <= 0.05, || {
            format!(
                "empirical q {q_hat} deviates {q_rel:.4} from solved {}",
                sol.q
            )
        })?;
        details.push(format!(
            "(p={p}, delta={delta}): TV {tv:.4}, q rel err {q_rel:.4}"
        ));
    }
    Ok(details.join("; "))
}

// --------------------------------------------------------------------------
// 6. Interior optimum of the threshold sweep.
// --------------------------------------------------------------------------
fn interior_threshold_optimum() -> Result<String, String> {
    let mut details = Vec::new();
    for n in [10u32, 20, 50] {
        let p = 1.5 / f64::from(n);
        let grid: Vec<u32> = (1..=5 * n).collect();
        let records = sweep_delta(n, p, &grid).map_err(|e| e.to_string())?;
        ensure(records.len() == grid.len(), || {
            format!("sweep dropped points at N={n}")
        })?;
        let best = records
            .iter()
            .min_by(|a, b| a.analytic_avg_aoi.total_cmp(&b.analytic_avg_aoi))
            .unwrap();
        let at_one = records.iter().find(|r| r.delta == 1).unwrap();
        ensure(best.delta > 1 && best.delta < 5 * n, || {
            format!("optimum delta* = {} not interior at N={n}", best.delta)
        })?;
        ensure(best.analytic_avg_aoi < at_one.analytic_avg_aoi, || {
            format!(
                "minimum {} not below the delta=1 value {} at N={n}",
                best.analytic_avg_aoi, at_one.analytic_avg_aoi
            )
        })?;
        details.push(format!("N={n}: delta*={}", best.delta));
    }
    Ok(details.join(", "))
}

// --------------------------------------------------------------------------
// 7. Optimized threshold policy beats the baseline, with a gap that widens
//    as the network grows.
// --------------------------------------------------------------------------
fn optimized_policy_beats_baseline() -> Result<String, String> {
    let mut prev_gap = 0.0f64;
    let mut details = Vec::new();
    for n in [10u32, 20, 50, 100] {
        let baseline = average_aoi_aira(n, 1.0 / f64::from(n))
            .map_err(|e| e.to_string())?
            .average_aoi;
        let report = optimize(n, &SearchSpace::default_for(n)).map_err(|e| e.to_string())?;
        ensure(report.best_avg_aoi < baseline, || {
            format!(
                "optimized {} not below baseline {baseline} at N={n}",
                report.best_avg_aoi
            )
        })?;
        let gap = baseline - report.best_avg_aoi;
        ensure(gap >= prev_gap, || {
            format!("gap {gap:.3} shrank from {prev_gap:.3} at N={n}")
        })?;
        prev_gap = gap;
        details.push(format!("N={n}: gap {gap:.2}"));
    }
    Ok(details.join(", "))
}

// --------------------------------------------------------------------------
// 8. Exact coupled chain vs simulation; decoupling error reported.
// --------------------------------------------------------------------------
fn exact_chain_cross_check() -> Result<String, String> {
    let config = ProtocolConfig::new(3, 0.4, 3).map_err(|e| e.to_string())?;
    let age_cap = tail_rule_age_cap(&config).map_err(|e| e.to_string())?;
    let exact = exact_small_n_average_aoi(&config, age_cap).map_err(|e| e.to_string())?;
    ensure(!exact.degenerate, || {
        "exact chain flagged degenerate".into()
    })?;

    let report = sim::run(
        3,
        &CapPolicy::Adra {
            threshold: 3,
            cap: 0.4,
        },
        &SimConfig {
            horizon: 1_010_000, // 10 replications x 1e6 measured slots
            warmup: 10_000,
            seed: 99,
            replications: 10,
            pmf_cap: 1000,
        },
    )
    .map_err(|e| e.to_string())?;

    let diff = (exact.average_aoi - report.network_avg_aoi).abs();
    let limit = 3.0 * report.avg_aoi_stderr;
    ensure(diff <= limit, || {
        format!(
            "exact {} vs simulated {} differs by {diff:.5} > 3 stderr = {limit:.5}",
            exact.average_aoi, report.network_avg_aoi
        )
    })?;

    let sol = solve_success_probability(&config, 1e-12).map_err(|e| e.to_string())?;
    let decoupled = average_aoi_adra(&config, &sol).average_aoi;
    let decoupling_error = decoupled - exact.average_aoi;
    Ok(format!(
        "cap {age_cap}, exact {:.6}, simulated {:.6} (3 stderr {limit:.5}); decoupled {decoupled:.6}, decoupling error {decoupling_error:+.6} (reported, no threshold)",
        exact.average_aoi, report.network_avg_aoi
    ))
}

// --------------------------------------------------------------------------
// 9. CLI determinism: identical commands produce byte-identical CSVs.
// --------------------------------------------------------------------------
fn rerun_byte_identical(args: &[&str], files: &[&str]) -> Result<(), String> {
    let dirs = [
        tempfile::tempdir().map_err(|e| e.to_string())?,
        tempfile::tempdir().map_err(|e| e.to_string())?,
    ];
    for dir in &dirs {
        let output = std::process::Command::new(env!("CARGO_BIN_EXE_adra"))
            .args(args)
            .arg("--out-dir")
            .arg(dir.path())
            .output()
            .map_err(|e| e.to_string())?;
        if !output.status.success() {
            return Err(format!(
                "command failed: {}",
                String::from_utf8_lossy(&output.stderr)
            ));
        }
    }
    for name in files {
        let a = std::fs::read(dirs[0].path().join(name)).map_err(|e| e.to_string())?;
        let b = std::fs::read(dirs[1].path().join(name)).map_err(|e| e.to_string())?;
        if a != b {
            return Err(format!("{name} differs between identical runs"));
        }
    }
    Ok(())
}

fn cli_determinism() -> Result<String, String> {
    rerun_byte_identical(
        &[
            "simulate",
            "--n",
            "20",
            "--p",
            "0.08",
            "--delta",
            "12",
            "--horizon",
            "50000",
            "--warmup",
            "2000",
            "--seed",
            "31",
            "--replications",
            "2",
        ],
        &["simulate_pmf.csv", "simulate_summary.csv"],
    )?;
    rerun_byte_identical(
        &[
            "sweep-delta",
            "--n",
            "10",
            "--p",
            "0.12",
            "--delta",
            "1..8",
            "--simulate",
            "--horizon",
            "30000",
            "--warmup",
            "1000",
            "--seed",
            "5",
        ],
        &["sweep_delta.csv"],
    )?;
    Ok("simulate and sweep-delta re-runs byte-identical".into())
}

#[test]
fn acceptance_gate() {
    let mut gate = Gate::new();
    let s = Duration::from_secs;
    gate.criterion(1, "delta-1 reduction", Some(s(1)), delta_one_reduction);
    gate.criterion(2, "lemma suite", Some(s(5)), lemma_suite);
    gate.criterion(
        3,
        "stationary-law identities",
        Some(s(1)),
        stationary_identities,
    );
    gate.criterion(
        4,
        "simulation vs baseline analytics",
        Some(s(10)),
        simulation_matches_baseline,
    );
    gate.criterion(
        5,
        "simulated age distribution",
        Some(s(30)),
        simulation_matches_age_distribution,
    );
    gate.criterion(
        6,
        "interior threshold optimum",
        Some(s(5)),
        interior_threshold_optimum,
    );
    gate.criterion(
        7,
        "optimized policy beats baseline",
        Some(s(30)),
        optimized_policy_beats_baseline,
    );
    gate.criterion(
        8,
        "exact coupled-chain cross-check",
        Some(s(60)),
        exact_chain_cross_check,
    );
    gate.criterion(9, "CLI determinism", None, cli_determinism);
    gate.finish();
}
