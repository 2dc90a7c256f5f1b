//! Saturated-channel model of the 802.11 DCF: attempt-probability fixed
//! point, slot probabilities, and renewal-reward aggregate capacity.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// PHY/MAC timing and backoff constants.
///
/// All durations are in seconds, the data rate in bits per second.
/// `header_bits` is the total per-frame overhead that rides on the air at
/// `data_rate_bps` (PHY preamble expressed in bit-times plus MAC, LLC and
/// network headers). `collision_time` is the slot cost charged to a
/// collision by the renewal-reward capacity formula.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MacParams {
    /// Initial contention window W (slots), >= 2.
    pub cw_min: u32,
    /// Maximum backoff stage m; the window at stage k is `2^k * cw_min`.
    pub max_stage: u32,
    /// Idle slot duration T_I.
    pub slot_time: f64,
    pub difs: f64,
    pub sifs: f64,
    /// Full ACK frame duration including its preamble.
    pub ack_time: f64,
    /// Per-frame header overhead H, in bit-times at `data_rate_bps`.
    pub header_bits: f64,
    pub data_rate_bps: f64,
    /// Collision slot duration T_C used by [`aggregate_capacity`].
    pub collision_time: f64,
}

impl MacParams {
    /// Parameter set mimicking 802.11b DSSS at 1 Mbps with long preambles.
    ///
    /// Header bit budget: 192 (preamble+PLCP at 1 Mbps) + 272 (MAC+FCS)
    /// + 64 (LLC/SNAP) + 160 (IP) + 64 (UDP) = 752 bits. The default
    /// collision time is a 1500-byte frame plus DIFS.
    pub fn mimic_802_11b_1mbps() -> Self {
        let header_bits = 752.0;
        let data_rate_bps = 1e6;
        let difs = 50e-6;
        MacParams {
            cw_min: 32,
            max_stage: 5,
            slot_time: 20e-6,
            difs,
            sifs: 10e-6,
            ack_time: 304e-6,
            header_bits,
            data_rate_bps,
            collision_time: (header_bits + 1500.0 * 8.0) / data_rate_bps + difs,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.cw_min < 2 {
            return Err(Error::InvalidParameter(format!(
                "cw_min must be >= 2, got {}",
                self.cw_min
            )));
        }
        for (name, v) in [
            ("slot_time", self.slot_time),
            ("difs", self.difs),
            ("sifs", self.sifs),
            ("ack_time", self.ack_time),
            ("data_rate_bps", self.data_rate_bps),
            ("collision_time", self.collision_time),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if !(self.header_bits >= 0.0) || !self.header_bits.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "header_bits must be nonnegative, got {}",
                self.header_bits
            )));
        }
        Ok(())
    }

    /// Time on air for a frame carrying `bytes` of payload.
    pub fn frame_time(&self, bytes: f64) -> f64 {
        (self.header_bits + 8.0 * bytes) / self.data_rate_bps
    }

    /// Channel occupancy of a successful exchange beyond the data frame:
    /// SIFS + ACK + DIFS.
    pub fn success_overhead(&self) -> f64 {
        self.sifs + self.ack_time + self.difs
    }

    /// Duration of a success slot T_S for mean payload `mean_packet_bits`.
    pub fn success_slot_time(&self, mean_packet_bits: f64) -> f64 {
        (self.header_bits + mean_packet_bits) / self.data_rate_bps + self.success_overhead()
    }
}

impl Default for MacParams {
    fn default() -> Self {
        Self::mimic_802_11b_1mbps()
    }
}

/// Solution of the attempt-probability fixed point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPointResult {
    /// Per-slot attempt probability beta.
    pub beta: f64,
    /// Conditional collision probability p.
    pub p: f64,
    /// Absolute gap between the two beta curves at the solution.
    pub residual: f64,
    pub iterations: u32,
}

/// Per-slot outcome probabilities under attempt probability beta.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotProbabilities {
    pub success: f64,
    pub idle: f64,
    pub collision: f64,
}

/// Aggregate saturated capacity of the shared channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Capacity {
    /// Payload throughput S(n) in bits per second.
    pub throughput_bps: f64,
    /// S(n) divided by the mean packet length, in packets per second.
    pub pkts_per_s: f64,
    pub fixed_point: FixedPointResult,
    pub slots: SlotProbabilities,
    /// Expected slot duration in seconds.
    pub mean_slot_s: f64,
}

/// Attempt probability as a function of the collision probability, from the
/// backoff chain. Uses the geometric-sum form of the denominator, which is
/// smooth at p = 1/2.
fn beta_from_backoff(p: f64, cw_min: u32, max_stage: u32) -> f64 {
    let w = cw_min as f64;
    let mut geom = 0.0;
    let mut term = 1.0;
    for _ in 0..max_stage {
        geom += term;
        term *= 2.0 * p;
    }
    2.0 / (w + 1.0 + p * w * geom)
}

/// Attempt probability implied by collision probability p among n stations:
/// a tagged attempt collides unless all n-1 others stay silent.
fn beta_from_collision(p: f64, n: u32) -> f64 {
    1.0 - (1.0 - p).powf(1.0 / (n as f64 - 1.0))
}

const MAX_BISECTION_ITERS: u32 = 200;

/// Solves the attempt-probability fixed point for `n` contending stations.
///
/// The backoff curve decreases in p from 2/(W+1) to 2/(2^m W + 1) while the
/// collision curve increases from 0 to 1, so they cross exactly once;
/// bisection on p over [0, 1) always converges. A lone station never
/// collides, so n = 1 returns p = 0 directly.
pub fn solve_fixed_point(params: &MacParams, n: u32, tol: f64) -> Result<FixedPointResult> {
    params.validate()?;
    if n < 1 {
        return Err(Error::InvalidParameter("node count must be >= 1".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    if n == 1 {
        return Ok(FixedPointResult {
            beta: beta_from_backoff(0.0, params.cw_min, params.max_stage),
            p: 0.0,
            residual: 0.0,
            iterations: 0,
        });
    }

    let gap = |p: f64| {
        beta_from_backoff(p, params.cw_min, params.max_stage) - beta_from_collision(p, n)
    };
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    let mut mid = 0.5;
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    for i in 1..=MAX_BISECTION_ITERS {
        mid = 0.5 * (lo + hi);
        let g = gap(mid);
        iterations = i;
        residual = g.abs();
        if residual <= tol {
            break;
        }
        if g > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if residual > tol {
        return Err(Error::ModelOutOfRange(format!(
            "fixed point did not reach tolerance {tol}: residual {residual}"
        )));
    }
    Ok(FixedPointResult {
        beta: beta_from_backoff(mid, params.cw_min, params.max_stage),
        p: mid,
        residual,
        iterations,
    })
}

/// Per-slot success/idle/collision probabilities for `n` stations attempting
/// independently with probability `beta`.
pub fn slot_probabilities(beta: f64, n: u32) -> Result<SlotProbabilities> {
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::InvalidParameter(format!(
            "beta must lie in [0, 1], got {beta}"
        )));
    }
    if n < 1 {
        return Err(Error::InvalidParameter("node count must be >= 1".into()));
    }
    let nf = n as f64;
    let success = nf * beta * (1.0 - beta).powi(n as i32 - 1);
    let idle = (1.0 - beta).powi(n as i32);
    // complement keeps success + idle + collision == 1 exactly
    let collision = 1.0 - (success + idle);
    Ok(SlotProbabilities {
        success,
        idle,
        collision,
    })
}

/// Renewal-reward throughput given slot probabilities: expected payload per
/// slot over expected slot duration.
pub fn throughput_from_slots(
    params: &MacParams,
    slots: &SlotProbabilities,
    mean_packet_bits: f64,
) -> f64 {
    let t_s = params.success_slot_time(mean_packet_bits);
    let mean_slot = slots.idle * params.slot_time
        + slots.success * t_s
        + slots.collision * params.collision_time;
    slots.success * mean_packet_bits / mean_slot
}

/// Saturated aggregate capacity for `n` stations sending packets of mean
/// length `mean_packet_bits`.
pub fn aggregate_capacity(
    params: &MacParams,
    n: u32,
    mean_packet_bits: f64,
    tol: f64,
) -> Result<Capacity> {
    if !(mean_packet_bits > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "mean packet length must be positive, got {mean_packet_bits}"
        )));
    }
    let fixed_point = solve_fixed_point(params, n, tol)?;
    let slots = slot_probabilities(fixed_point.beta, n)?;
    let t_s = params.success_slot_time(mean_packet_bits);
    let mean_slot_s = slots.idle * params.slot_time
        + slots.success * t_s
        + slots.collision * params.collision_time;
    let throughput_bps = slots.success * mean_packet_bits / mean_slot_s;
    Ok(Capacity {
        throughput_bps,
        pkts_per_s: throughput_bps / mean_packet_bits,
        fixed_point,
        slots,
        mean_slot_s,
    })
}
