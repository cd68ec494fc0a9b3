//! Exact discrete-time simulation of N devices on a collision channel.
//!
//! Each slot, every device draws one uniform variate and transmits iff the
//! draw falls below its age-indexed channel access probability. A slot
//! delivers exactly when a single device transmits; that device's age resets
//! to 1 and every other age increments. Collisions destroy all packets
//! (interference-limited, no capture).
//!
//! Replications are statistically independent: replication `r` draws from
//! ChaCha stream `r` of the run seed, and devices consume draws in index
//! order within a slot, so results are bit-reproducible regardless of how
//! replications are scheduled across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Age-indexed channel access probability function.
#[derive(Debug, Clone, PartialEq)]
pub enum CapPolicy {
    /// Transmit with probability `cap` while the age is at least `threshold`,
    /// stay silent below it.
    Adra { threshold: u32, cap: f64 },
    /// Age-independent access (classic slotted ALOHA).
    Aira { cap: f64 },
    /// Arbitrary age-indexed table; the final entry repeats for all larger
    /// ages.
    General { table: Vec<f64> },
}

impl CapPolicy {
    /// Access probability at instantaneous age `aoi` (ages start at 1).
    pub fn access_probability(&self, aoi: u64) -> f64 {
        match self {
            CapPolicy::Adra { threshold, cap } => {
                if aoi >= u64::from(*threshold) {
                    *cap
                } else {
                    0.0
                }
            }
            CapPolicy::Aira { cap } => *cap,
            CapPolicy::General { table } => table[((aoi - 1) as usize).min(table.len() - 1)],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let check = |p: f64| -> Result<()> {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidArgument(format!(
                    "access probability must lie in [0, 1], got {p}"
                )));
            }
            Ok(())
        };
        match self {
            CapPolicy::Adra { threshold, cap } => {
                if *threshold < 1 {
                    return Err(Error::InvalidArgument("threshold must be >= 1".into()));
                }
                check(*cap)
            }
            CapPolicy::Aira { cap } => check(*cap),
            CapPolicy::General { table } => {
                if table.is_empty() {
                    return Err(Error::InvalidArgument(
                        "general CAP table must not be empty".into(),
                    ));
                }
                table.iter().try_for_each(|&p| check(p))
            }
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            CapPolicy::Adra { .. } => "adra",
            CapPolicy::Aira { .. } => "aira",
            CapPolicy::General { .. } => "general",
        }
    }
}

/// Per-device simulation state: the instantaneous age, always >= 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DeviceState {
    pub aoi: u64,
}

/// What happened on the channel in one slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlotOutcome {
    Idle,
    /// Exactly one device transmitted; it holds the device index.
    Success(usize),
    /// Two or more transmitters; holds the transmitter count.
    Collision(usize),
}

/// Horizon, warmup, seeding and reporting knobs for a simulation run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimConfig {
    /// Total slots per replication, warmup included.
    pub horizon: u64,
    /// Leading slots excluded from all statistics.
    pub warmup: u64,
    pub seed: u64,
    pub replications: u32,
    /// Ages above this bucket are pooled into the overflow mass.
    pub pmf_cap: u64,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.horizon <= self.warmup {
            return Err(Error::InvalidArgument(format!(
                "horizon ({}) must exceed warmup ({})",
                self.horizon, self.warmup
            )));
        }
        if self.replications < 1 {
            return Err(Error::InvalidArgument("replications must be >= 1".into()));
        }
        if self.pmf_cap < 1 {
            return Err(Error::InvalidArgument("pmf_cap must be >= 1".into()));
        }
        Ok(())
    }

    /// Default reporting cap: `max(100 * threshold, 1000)`.
    pub fn default_pmf_cap(policy: &CapPolicy) -> u64 {
        match policy {
            CapPolicy::Adra { threshold, .. } => (100 * u64::from(*threshold)).max(1000),
            _ => 1000,
        }
    }
}

/// Aggregated simulation output.
#[derive(Debug, Clone, PartialEq)]
pub struct SimReport {
    /// Time-average AoI per device, pooled over replications.
    pub per_device_avg_aoi: Vec<f64>,
    /// Mean of the per-device averages.
    pub network_avg_aoi: f64,
    /// Standard error of the per-replication network averages
    /// (0 when only one replication ran).
    pub avg_aoi_stderr: f64,
    /// Age frequencies for ages `1..=pmf_cap`, pooled over devices, measured
    /// slots and replications.
    pub empirical_pmf: Vec<f64>,
    /// Frequency mass of ages above `pmf_cap`; never silently dropped.
    pub pmf_overflow: f64,
    pub pmf_cap: u64,
    pub success_rate: f64,
    pub collision_rate: f64,
    pub idle_rate: f64,
    /// Successes per transmission attempt (the empirical success
    /// probability `q`); NaN when no attempt occurred.
    pub conditional_success_rate: f64,
    pub attempts: u64,
    pub successes: u64,
    /// Measured slots per replication (horizon minus warmup).
    pub measured_slots: u64,
    pub replications: u32,
}

/// Advances all devices by one slot.
///
/// `draws` carries exactly one uniform [0,1) variate per device; device `i`
/// transmits iff `draws[i] < policy(age_i)`. On a success the winner's age
/// becomes 1; every other age increments by exactly 1.
pub fn step(states: &mut [DeviceState], policy: &CapPolicy, draws: &[f64]) -> SlotOutcome {
    assert_eq!(
        states.len(),
        draws.len(),
        "one uniform draw required per device"
    );
    let mut transmitters = 0usize;
    let mut winner = 0usize;
    for (i, (state, draw)) in states.iter().zip(draws).enumerate() {
        if *draw < policy.access_probability(state.aoi) {
            transmitters += 1;
            winner = i;
        }
    }
    let outcome = match transmitters {
        0 => SlotOutcome::Idle,
        1 => SlotOutcome::Success(winner),
        k => SlotOutcome::Collision(k),
    };
    for (i, state) in states.iter_mut().enumerate() {
        match outcome {
            SlotOutcome::Success(j) if j == i => state.aoi = 1,
            _ => state.aoi += 1,
        }
    }
    outcome
}

#[derive(Debug, Clone)]
struct RepStats {
    age_sums: Vec<u64>,
    pmf_counts: Vec<u64>,
    overflow: u64,
    idle: u64,
    success: u64,
    collision: u64,
    attempts: u64,
}

fn simulate_replication(
    n_devices: usize,
    policy: &CapPolicy,
    sim: &SimConfig,
    replication: u32,
) -> RepStats {
    let mut rng = ChaCha8Rng::seed_from_u64(sim.seed);
    rng.set_stream(u64::from(replication));

    let mut states = vec![DeviceState { aoi: 1 }; n_devices];
    let mut draws = vec![0.0f64; n_devices];
    let mut stats = RepStats {
        age_sums: vec![0; n_devices],
        pmf_counts: vec![0; sim.pmf_cap as usize],
        overflow: 0,
        idle: 0,
        success: 0,
        collision: 0,
        attempts: 0,
    };

    for slot in 0..sim.horizon {
        for d in draws.iter_mut() {
            *d = rng.random::<f64>();
        }
        let measured = slot >= sim.warmup;
        if measured {
            for (i, state) in states.iter().enumerate() {
                stats.age_sums[i] += state.aoi;
                if state.aoi <= sim.pmf_cap {
                    stats.pmf_counts[(state.aoi - 1) as usize] += 1;
                } else {
                    stats.overflow += 1;
                }
            }
        }
        let outcome = step(&mut states, policy, &draws);
        if measured {
            match outcome {
                SlotOutcome::Idle => stats.idle += 1,
                SlotOutcome::Success(_) => {
                    stats.success += 1;
                    stats.attempts += 1;
                }
                SlotOutcome::Collision(k) => {
                    stats.collision += 1;
                    stats.attempts += k as u64;
                }
            }
        }
    }
    stats
}

/// Runs `sim.replications` independent replications and pools the results.
///
/// All ages start at 1. Statistics cover only the slots after warmup.
pub fn run(n_devices: usize, policy: &CapPolicy, sim: &SimConfig) -> Result<SimReport> {
    if n_devices < 1 {
        return Err(Error::InvalidArgument("n_devices must be >= 1".into()));
    }
    policy.validate()?;
    sim.validate()?;

    let reps: Vec<RepStats> = (0..sim.replications)
        .into_par_iter()
        .map(|r| simulate_replication(n_devices, policy, sim, r))
        .collect();

    let measured = sim.horizon - sim.warmup;
    let r_count = f64::from(sim.replications);
    let slots_per_rep = measured as f64;

    let mut per_device_avg_aoi = vec![0.0f64; n_devices];
    for rep in &reps {
        for (acc, &sum) in per_device_avg_aoi.iter_mut().zip(&rep.age_sums) {
            *acc += sum as f64 / slots_per_rep;
        }
    }
    for avg in per_device_avg_aoi.iter_mut() {
        *avg /= r_count;
    }

    let rep_means: Vec<f64> = reps
        .iter()
        .map(|rep| rep.age_sums.iter().sum::<u64>() as f64 / (slots_per_rep * n_devices as f64))
        .collect();
    let network_avg_aoi = rep_means.iter().sum::<f64>() / r_count;
    let avg_aoi_stderr = if sim.replications >= 2 {
        let var = rep_means
            .iter()
            .map(|m| (m - network_avg_aoi).powi(2))
            .sum::<f64>()
            / (r_count - 1.0);
        (var / r_count).sqrt()
    } else {
        0.0
    };

    let total_slots = slots_per_rep * r_count;
    let idle: u64 = reps.iter().map(|r| r.idle).sum();
    let success: u64 = reps.iter().map(|r| r.success).sum();
    let collision: u64 = reps.iter().map(|r| r.collision).sum();
    let attempts: u64 = reps.iter().map(|r| r.attempts).sum();

    let samples = total_slots * n_devices as f64;
    let mut empirical_pmf = vec![0.0f64; sim.pmf_cap as usize];
    for rep in &reps {
        for (acc, &count) in empirical_pmf.iter_mut().zip(&rep.pmf_counts) {
            *acc += count as f64;
        }
    }
    for mass in empirical_pmf.iter_mut() {
        *mass /= samples;
    }
    let pmf_overflow = reps.iter().map(|r| r.overflow).sum::<u64>() as f64 / samples;

    Ok(SimReport {
        per_device_avg_aoi,
        network_avg_aoi,
        avg_aoi_stderr,
        empirical_pmf,
        pmf_overflow,
        pmf_cap: sim.pmf_cap,
        success_rate: success as f64 / total_slots,
        collision_rate: collision as f64 / total_slots,
        idle_rate: idle as f64 / total_slots,
        conditional_success_rate: success as f64 / attempts as f64,
        attempts,
        successes: success,
        measured_slots: measured,
        replications: sim.replications,
    })
}

/// Successes divided by transmission attempts, the empirical counterpart of
/// the success probability `q`.
pub fn empirical_success_probability(report: &SimReport) -> Result<f64> {
    if report.attempts == 0 {
        return Err(Error::NoAttempts);
    }
    Ok(report.successes as f64 / report.attempts as f64)
}
