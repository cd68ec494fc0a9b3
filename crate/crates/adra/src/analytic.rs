//! Analytic average-AoI model for threshold-based age-dependent random access.
//!
//! Each device transmits with probability `p` in a slot only while its
//! instantaneous age is at least a threshold `delta`; a transmission delivers
//! iff no other device transmits in the same slot. Treating the conditional
//! success probability `q` as a constant decouples the devices, and each
//! device's age then evolves as a discrete-time Markov chain whose stationary
//! law is flat up to `delta` and geometric beyond it:
//!
//! ```text
//! pi_l = pq / (delta*pq + 1 - pq)                      for l <= delta
//! pi_l = pq (1-pq)^(l-delta) / (delta*pq + 1 - pq)     for l >  delta
//! ```
//!
//! Consistency between the per-slot transmit probability
//! `eta = p / (delta*pq + 1 - pq)` and `q = (1 - eta)^(N-1)` pins `q` as the
//! root of
//!
//! ```text
//! g(q) = 1/f(q) + q^(1/(N-1)) - 1,     f(q) = delta*q + 1/p - q,
//! ```
//!
//! which is unique on [((N-2)/N)^(N-1), 1] when N >= 3 and p <= 2/N. The
//! average age follows in closed form:
//!
//! ```text
//! avg = delta/2 + 1/(pq) - delta / (2 (delta*pq + 1 - pq))
//! ```
//!
//! For `delta = 1` this collapses to the classic age-independent (slotted
//! ALOHA) expression `1 / (p (1-p)^(N-1))`.
//!
//! [`exact_small_n_average_aoi`] additionally solves the *coupled* joint
//! chain over all device ages for N <= 3, quantifying the error of the
//! decoupling approximation on networks small enough to enumerate.

use crate::error::{Error, Result};

/// Threshold-policy parameters: network size, channel access probability,
/// and age threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolConfig {
    n_devices: u32,
    cap: f64,
    threshold: u32,
}

impl ProtocolConfig {
    /// Validates `n_devices >= 2`, `0 < cap <= 1`, `threshold >= 1`.
    ///
    /// Configurations outside the lemma-guaranteed regime (`n_devices >= 3`
    /// and `cap <= 2/N`) are accepted and flagged downstream, not rejected.
    pub fn new(n_devices: u32, cap: f64, threshold: u32) -> Result<Self> {
        if n_devices < 2 {
            return Err(Error::InvalidArgument(format!(
                "n_devices must be >= 2, got {n_devices}"
            )));
        }
        if !(cap > 0.0 && cap <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "cap must satisfy 0 < p <= 1, got {cap}"
            )));
        }
        if threshold < 1 {
            return Err(Error::InvalidArgument(format!(
                "threshold must be >= 1, got {threshold}"
            )));
        }
        Ok(Self {
            n_devices,
            cap,
            threshold,
        })
    }

    pub fn n_devices(&self) -> u32 {
        self.n_devices
    }

    pub fn cap(&self) -> f64 {
        self.cap
    }

    pub fn threshold(&self) -> u32 {
        self.threshold
    }

    /// True iff the uniqueness lemmas apply: `N >= 3` and `p <= 2/N`.
    pub fn in_lemma_regime(&self) -> bool {
        self.n_devices >= 3 && self.cap <= 2.0 / f64::from(self.n_devices)
    }

    /// Lower bracket end for the root search: `(1-p)^(N-1)`, valid because
    /// the per-slot transmit probability never exceeds `p`.
    pub fn q_lower_bound(&self) -> f64 {
        (1.0 - self.cap).powi(self.n_devices as i32 - 1)
    }

    /// Lemma lower bound `((N-2)/N)^(N-1)` on `q` for `p <= 2/N`.
    pub fn lemma_lower_bound(&self) -> f64 {
        let n = f64::from(self.n_devices);
        ((n - 2.0) / n).powi(self.n_devices as i32 - 1)
    }
}

/// Root of the fixed-point equation plus solver diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPointSolution {
    /// Success probability given a transmission.
    pub q: f64,
    /// Unconditional per-slot transmit probability, `p / (delta*pq + 1 - pq)`.
    pub eta: f64,
    /// Bisection iterations performed (0 for the delta = 1 closed form).
    pub iterations: u32,
    /// `|g(q)|` at return.
    pub residual: f64,
    /// Set when `N < 3` or `p > 2/N`: uniqueness is not guaranteed there.
    pub regime_warning: bool,
}

/// Aggregate age statistic (slots).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AoiStatistics {
    pub average_aoi: f64,
}

/// Stationary age law of the decoupled chain: flat head, geometric tail.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationaryAgeDistribution {
    threshold: u32,
    head_mass: f64,
    decay: f64,
}

impl StationaryAgeDistribution {
    pub fn new(config: &ProtocolConfig, solution: &FixedPointSolution) -> Self {
        let pq = config.cap() * solution.q;
        let denom = f64::from(config.threshold()) * pq + 1.0 - pq;
        Self {
            threshold: config.threshold(),
            head_mass: pq / denom,
            decay: 1.0 - pq,
        }
    }

    /// Common value of `pi_1 .. pi_delta`.
    pub fn head_mass(&self) -> f64 {
        self.head_mass
    }

    /// Geometric tail ratio `1 - pq`.
    pub fn decay(&self) -> f64 {
        self.decay
    }

    pub fn threshold(&self) -> u32 {
        self.threshold
    }

    /// Stationary probability that the age equals `l`.
    pub fn pmf(&self, l: u64) -> Result<f64> {
        if l < 1 {
            return Err(Error::Domain(format!("age must be >= 1, got {l}")));
        }
        if l <= u64::from(self.threshold) {
            Ok(self.head_mass)
        } else {
            Ok(self.head_mass * self.decay.powf((l - u64::from(self.threshold)) as f64))
        }
    }

    /// Total mass at ages strictly greater than `l` (closed form).
    pub fn tail_mass_beyond(&self, l: u64) -> f64 {
        let delta = u64::from(self.threshold);
        if l < delta {
            1.0 - l as f64 * self.head_mass
        } else {
            // sum_{m>l} head * decay^(m-delta) = head * decay^(l+1-delta) / (1-decay)
            self.head_mass * self.decay.powf((l + 1 - delta) as f64) / (1.0 - self.decay)
        }
    }
}

fn nth_root(q: f64, n_minus_one: f64) -> f64 {
    // exp(ln(q)/(N-1)) stays stable for N in the thousands where powf on the
    // reciprocal exponent would not.
    (q.ln() / n_minus_one).exp()
}

/// Evaluates the fixed-point function `g(q) = 1/f(q) + q^(1/(N-1)) - 1`
/// with `f(q) = delta*q + 1/p - q`.
pub fn g_eval(config: &ProtocolConfig, q: f64) -> Result<f64> {
    if q <= 0.0 || q.is_nan() {
        return Err(Error::Domain(format!("g(q) requires q > 0, got {q}")));
    }
    let f = f64::from(config.threshold()) * q + 1.0 / config.cap() - q;
    Ok(1.0 / f + nth_root(q, f64::from(config.n_devices() - 1)) - 1.0)
}

const MAX_BISECTION_ITERS: u32 = 200;
const SCAN_POINTS: usize = 256;
const Q_FLOOR: f64 = 1e-15;

/// Solves `g(q) = 0` for the success probability.
///
/// For `delta = 1` the root is `(1-p)^(N-1)` in closed form. Otherwise a
/// bracketed bisection runs on `[max((1-p)^(N-1), 1e-15), 1]`; if the ends
/// do not straddle zero (possible outside the lemma regime), a 256-point
/// sign scan over `[1e-15, 1]` looks for a bracket and the smallest root is
/// taken.
pub fn solve_success_probability(config: &ProtocolConfig, tol: f64) -> Result<FixedPointSolution> {
    if tol <= 0.0 || tol.is_nan() {
        return Err(Error::InvalidArgument(format!(
            "tolerance must be > 0, got {tol}"
        )));
    }
    let regime_warning = !config.in_lemma_regime();

    if config.threshold() == 1 {
        let q = config.q_lower_bound();
        let residual = if q > 0.0 {
            g_eval(config, q)?.abs()
        } else {
            0.0
        };
        return Ok(FixedPointSolution {
            q,
            eta: config.cap(),
            iterations: 0,
            residual,
            regime_warning,
        });
    }

    let lo0 = config.q_lower_bound().max(Q_FLOOR);
    let g_lo0 = g_eval(config, lo0)?;
    let g_hi0 = g_eval(config, 1.0)?;

    let bracket = if g_lo0 == 0.0 {
        return Ok(finish(config, lo0, 0, regime_warning));
    } else if g_hi0 == 0.0 {
        return Ok(finish(config, 1.0, 0, regime_warning));
    } else if g_lo0.signum() != g_hi0.signum() {
        Some((lo0, 1.0, g_lo0))
    } else {
        scan_for_bracket(config)?
    };

    let Some((mut lo, mut hi, mut g_lo)) = bracket else {
        return Err(Error::NoSignChange { lo: lo0, hi: 1.0 });
    };

    let mut iterations = 0;
    let mut mid;
    loop {
        mid = 0.5 * (lo + hi);
        let g_mid = g_eval(config, mid)?;
        iterations += 1;
        // |g| is the primary stop; the width checks only guard against a
        // tolerance finer than f64 can honor.
        if g_mid.abs() <= tol || iterations >= MAX_BISECTION_ITERS || mid <= lo || mid >= hi {
            break;
        }
        if g_mid.signum() == g_lo.signum() {
            lo = mid;
            g_lo = g_mid;
        } else {
            hi = mid;
        }
    }
    Ok(finish(config, mid, iterations, regime_warning))
}

fn finish(
    config: &ProtocolConfig,
    q: f64,
    iterations: u32,
    regime_warning: bool,
) -> FixedPointSolution {
    let pq = config.cap() * q;
    let denom = f64::from(config.threshold()) * pq + 1.0 - pq;
    FixedPointSolution {
        q,
        eta: config.cap() / denom,
        iterations,
        residual: g_eval(config, q).map_or(0.0, f64::abs),
        regime_warning,
    }
}

/// Grid scan for the leftmost sign change of `g` on `[1e-15, 1]`.
fn scan_for_bracket(config: &ProtocolConfig) -> Result<Option<(f64, f64, f64)>> {
    let step = (1.0 - Q_FLOOR) / SCAN_POINTS as f64;
    let mut x_prev = Q_FLOOR;
    let mut g_prev = g_eval(config, x_prev)?;
    for i in 1..=SCAN_POINTS {
        let x = Q_FLOOR + step * i as f64;
        let g_x = g_eval(config, x)?;
        if g_x == 0.0 {
            return Ok(Some((x, x, g_prev)));
        }
        if g_x.signum() != g_prev.signum() {
            return Ok(Some((x_prev, x, g_prev)));
        }
        x_prev = x;
        g_prev = g_x;
    }
    Ok(None)
}

/// Stationary probability of the age being `l` under the solved chain.
pub fn stationary_pmf(
    config: &ProtocolConfig,
    solution: &FixedPointSolution,
    l: u64,
) -> Result<f64> {
    StationaryAgeDistribution::new(config, solution).pmf(l)
}

/// Closed-form average AoI of the threshold policy:
/// `delta/2 + 1/(pq) - delta / (2 (delta*pq + 1 - pq))`.
pub fn average_aoi_adra(config: &ProtocolConfig, solution: &FixedPointSolution) -> AoiStatistics {
    let delta = f64::from(config.threshold());
    let pq = config.cap() * solution.q;
    let denom = delta * pq + 1.0 - pq;
    AoiStatistics {
        average_aoi: delta / 2.0 + 1.0 / pq - delta / (2.0 * denom),
    }
}

/// Average AoI of the age-independent baseline: `1 / (p' (1-p')^(N-1))`.
pub fn average_aoi_aira(n_devices: u32, cap: f64) -> Result<AoiStatistics> {
    if n_devices < 2 {
        return Err(Error::InvalidArgument(format!(
            "n_devices must be >= 2, got {n_devices}"
        )));
    }
    if !(cap > 0.0 && cap < 1.0) {
        return Err(Error::Domain(format!(
            "baseline access probability must satisfy 0 < p' < 1, got {cap}"
        )));
    }
    Ok(AoiStatistics {
        average_aoi: 1.0 / (cap * (1.0 - cap).powi(n_devices as i32 - 1)),
    })
}

/// Decoupled-model tail mass that must stay below the age cap of the exact
/// coupled chain.
pub const EXACT_TAIL_LIMIT: f64 = 1e-8;

/// Smallest age cap whose decoupled tail mass is below [`EXACT_TAIL_LIMIT`].
pub fn tail_rule_age_cap(config: &ProtocolConfig) -> Result<u64> {
    let solution = solve_success_probability(config, 1e-12)?;
    if solution.q <= 0.0 {
        return Err(Error::Domain(
            "tail rule undefined: solved success probability is zero".into(),
        ));
    }
    let dist = StationaryAgeDistribution::new(config, &solution);
    let delta = u64::from(config.threshold());
    // tail(cap) = head * decay^(cap+1-delta) / pq < limit, so the smallest
    // admissible cap is delta - 1 + ceil(ln(limit*pq/head) / ln(decay));
    // nudge around the closed-form candidate to absorb rounding.
    let target = EXACT_TAIL_LIMIT * (1.0 - dist.decay()) / dist.head_mass();
    let m = (target.ln() / dist.decay().ln()).ceil().max(2.0) as u64;
    let mut cap = delta - 1 + m;
    while dist.tail_mass_beyond(cap) >= EXACT_TAIL_LIMIT {
        cap += 1;
    }
    while cap > delta + 1 && dist.tail_mass_beyond(cap - 1) < EXACT_TAIL_LIMIT {
        cap -= 1;
    }
    Ok(cap)
}

/// Exact stationary mean age of the coupled joint chain, with diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactChainReport {
    /// Mean stationary age, averaged over devices.
    pub average_aoi: f64,
    /// Power-iteration sweeps performed.
    pub iterations: u32,
    /// Final L1 change between successive iterates.
    pub residual: f64,
    /// Stationary probability of a device sitting at the saturation cap.
    pub boundary_mass: f64,
    /// Set when `boundary_mass` shows the truncation is absorbing real mass,
    /// i.e. the untruncated mean diverges with the cap.
    pub degenerate: bool,
    pub age_cap: u64,
}

const EXACT_MAX_STATES: u64 = 70_000_000;
const EXACT_POWER_TOL: f64 = 1e-12;
const EXACT_MAX_ITERS: u32 = 50_000;
const EXACT_DEGENERATE_MASS: f64 = 1e-6;

/// Solves the joint age chain `(age_1, .., age_N)` exactly for tiny networks.
///
/// States live on `{1..age_cap}^N` with ages saturating at the cap. Every
/// device with age at or above the threshold transmits independently with
/// probability `p`; a device resets to age 1 iff it transmitted alone. The
/// stationary law is found by power iteration and the marginal mean age is
/// returned.
///
/// The cap must satisfy the decoupled tail rule when the decoupled model is
/// solvable; configurations whose truncated chain piles mass onto the cap
/// (e.g. `p = 1` collision deadlock) come back flagged as degenerate.
pub fn exact_small_n_average_aoi(
    config: &ProtocolConfig,
    age_cap: u64,
) -> Result<ExactChainReport> {
    let n = config.n_devices() as usize;
    if n > 3 {
        return Err(Error::InvalidArgument(format!(
            "exact chain supports n_devices <= 3 (state space grows as cap^N), got {n}"
        )));
    }
    if age_cap < u64::from(config.threshold()) + 1 {
        return Err(Error::AgeCapTooSmall {
            cap: age_cap,
            tail: 1.0,
            limit: EXACT_TAIL_LIMIT,
        });
    }
    // Reject caps the decoupled model says truncate too much mass. When the
    // fixed point itself is unsolvable (degenerate configs) there is nothing
    // to check against; the boundary-mass flag below covers those.
    if let Ok(solution) = solve_success_probability(config, 1e-12) {
        if solution.q > 0.0 {
            let tail = StationaryAgeDistribution::new(config, &solution).tail_mass_beyond(age_cap);
            if tail >= EXACT_TAIL_LIMIT {
                return Err(Error::AgeCapTooSmall {
                    cap: age_cap,
                    tail,
                    limit: EXACT_TAIL_LIMIT,
                });
            }
        }
    }

    let cap = age_cap as usize;
    let states = (age_cap as u128).pow(n as u32);
    if states > u128::from(EXACT_MAX_STATES) {
        return Err(Error::InvalidArgument(format!(
            "state space {states} exceeds the {EXACT_MAX_STATES} limit; lower the age cap"
        )));
    }
    let states = states as usize;

    let p = config.cap();
    let delta = config.threshold() as usize;

    // Strides of the mixed-radix encoding index = sum (age_i - 1) * cap^i.
    let mut stride = [0usize; 3];
    for (i, s) in stride.iter_mut().take(n).enumerate() {
        *s = cap.pow(i as u32);
    }

    let mut cur = vec![1.0 / states as f64; states];
    let mut next = vec![0.0f64; states];
    let mut ages = [0usize; 3];

    let mut iterations = 0;
    let mut residual = f64::INFINITY;
    while iterations < EXACT_MAX_ITERS {
        next.iter_mut().for_each(|x| *x = 0.0);
        for (idx, &mass) in cur.iter().enumerate() {
            if mass == 0.0 {
                continue;
            }
            let mut rem = idx;
            let mut eligible = 0u32;
            let mut inc_all = 0usize;
            for i in 0..n {
                let age = rem % cap + 1;
                rem /= cap;
                ages[i] = age;
                if age >= delta {
                    eligible += 1;
                }
                // saturating increment
                inc_all += (age.min(cap - 1)) * stride[i];
            }
            if eligible == 0 {
                next[inc_all] += mass;
                continue;
            }
            let p_single = p * (1.0 - p).powi(eligible as i32 - 1);
            let p_no_reset = 1.0 - f64::from(eligible) * p_single;
            next[inc_all] += mass * p_no_reset;
            if p_single > 0.0 {
                for i in 0..n {
                    if ages[i] >= delta {
                        // device i resets to 1, everyone else increments
                        let reset = inc_all - (ages[i].min(cap - 1)) * stride[i];
                        next[reset] += mass * p_single;
                    }
                }
            }
        }
        iterations += 1;
        residual = cur
            .iter()
            .zip(next.iter())
            .map(|(a, b)| (a - b).abs())
            .sum();
        std::mem::swap(&mut cur, &mut next);
        if residual < EXACT_POWER_TOL {
            break;
        }
    }
    if residual >= EXACT_POWER_TOL {
        return Err(Error::Domain(format!(
            "power iteration stalled at residual {residual:.3e} after {iterations} sweeps"
        )));
    }

    let mut mean = 0.0;
    let mut boundary = 0.0;
    for (idx, &mass) in cur.iter().enumerate() {
        if mass == 0.0 {
            continue;
        }
        let mut rem = idx;
        let mut age_sum = 0usize;
        let mut at_cap = 0u32;
        for _ in 0..n {
            let age = rem % cap + 1;
            rem /= cap;
            age_sum += age;
            if age == cap {
                at_cap += 1;
            }
        }
        mean += mass * age_sum as f64 / n as f64;
        boundary += mass * f64::from(at_cap) / n as f64;
    }

    Ok(ExactChainReport {
        average_aoi: mean,
        iterations,
        residual,
        boundary_mass: boundary,
        degenerate: boundary > EXACT_DEGENERATE_MASS,
        age_cap,
    })
}
