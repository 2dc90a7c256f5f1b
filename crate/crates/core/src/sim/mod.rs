//! Discrete-event validation engines and their shared bookkeeping.
//!
//! Two engines measure the same quantity, the delay from an application
//! packet's arrival to the delivery of its last fragment:
//!
//! * [`dcf`]: slot-level CSMA/CA with binary exponential backoff,
//! * [`oracle`]: the abstract 1-limited random polling server.
//!
//! A single run is strictly sequential; replications are independent and may
//! run in parallel, each owning its generator, and are merged in index order
//! so results do not depend on scheduling.

pub mod dcf;
pub mod oracle;

use rayon::prelude::*;

use crate::error::{Error, Result};

/// When to stop a run. At least one bound must be set; the run stops at
/// whichever is hit first.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunBudget {
    /// Stop once simulated time passes this point.
    pub horizon_s: Option<f64>,
    /// Stop once this many packets have been delivered in total.
    pub max_packets: Option<u64>,
}

impl RunBudget {
    pub fn horizon(seconds: f64) -> Self {
        RunBudget {
            horizon_s: Some(seconds),
            max_packets: None,
        }
    }

    pub fn packets(count: u64) -> Self {
        RunBudget {
            horizon_s: None,
            max_packets: Some(count),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match (self.horizon_s, self.max_packets) {
            (None, None) => Err(Error::Config(
                "run budget needs a horizon or a packet count".into(),
            )),
            (Some(h), _) if !(h > 0.0) => {
                Err(Error::Config(format!("horizon must be positive, got {h}")))
            }
            (_, Some(0)) => Err(Error::Config("packet budget must be positive".into())),
            _ => Ok(()),
        }
    }
}

/// Configuration of one simulation run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub seed: u64,
    pub budget: RunBudget,
    /// Fraction of the run discarded as warmup (of the horizon when
    /// time-bounded, of the packet budget otherwise).
    pub warmup_frac: f64,
}

impl SimConfig {
    pub fn new(seed: u64, budget: RunBudget) -> Self {
        SimConfig {
            seed,
            budget,
            warmup_frac: 0.1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.budget.validate()?;
        if !(0.0..1.0).contains(&self.warmup_frac) {
            return Err(Error::Config(format!(
                "warmup fraction must lie in [0, 1), got {}",
                self.warmup_frac
            )));
        }
        Ok(())
    }
}

/// One record per delivered application packet.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub node: usize,
    pub arrival_s: f64,
    pub delivery_s: f64,
    pub bytes: f64,
    pub fragments: u32,
}

/// Per-node counters and samples from a single run.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeRunStats {
    /// Application packets that arrived over the whole run.
    pub arrived: u64,
    /// Application packets fully delivered over the whole run.
    pub delivered: u64,
    /// Packets still in the system when the run stopped.
    pub in_system_at_end: u64,
    /// Delay samples kept after warmup.
    pub measured: u64,
    pub mean_delay_s: f64,
    /// Population variance of the kept delay samples.
    pub delay_var_s2: f64,
    /// Arrivals inside the measurement window.
    pub window_arrivals: u64,
    /// Time-average number of packets in the system over the window.
    pub mean_in_system: f64,
    /// Delivered packets per second over the window.
    pub throughput_pkts_s: f64,
}

/// Everything measured in one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunStats {
    pub per_node: Vec<NodeRunStats>,
    pub seed: u64,
    pub end_time_s: f64,
    /// Length of the post-warmup measurement window.
    pub window_s: f64,
    pub total_delivered: u64,
}

impl RunStats {
    /// Exact conservation: arrived == delivered + still queued, per node.
    pub fn conservation_holds(&self) -> bool {
        self.per_node
            .iter()
            .all(|n| n.arrived == n.delivered + n.in_system_at_end)
    }

    /// Relative gap of Little's law, |L - lambda_hat * W| / L, over the
    /// measurement window. `None` when the window saw no traffic.
    pub fn little_law_rel_gap(&self, node: usize) -> Option<f64> {
        let n = &self.per_node[node];
        if n.measured == 0 || self.window_s <= 0.0 || n.mean_in_system <= 0.0 {
            return None;
        }
        let lambda_hat = n.window_arrivals as f64 / self.window_s;
        let expected = lambda_hat * n.mean_delay_s;
        Some((n.mean_in_system - expected).abs() / n.mean_in_system)
    }
}

/// Replication summary for one node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeDelayStats {
    /// Mean over replication means.
    pub mean_delay_s: f64,
    /// Standard error of the replication means.
    pub std_err_s: f64,
    /// 95% confidence half-width (normal approximation).
    pub ci95_half_s: f64,
    pub throughput_pkts_s: f64,
    /// Delay samples per replication, averaged.
    pub mean_samples: f64,
}

/// Merged statistics over independent replications.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayStats {
    pub per_node: Vec<NodeDelayStats>,
    /// Delivered packets per second summed over nodes, averaged over
    /// replications.
    pub aggregate_pkts_s: f64,
    pub replications: usize,
    pub base_seed: u64,
}

/// Seeds for `n` replications derived from a base seed.
pub fn replication_seeds(base: u64, n: usize) -> Vec<u64> {
    (0..n as u64).map(|k| base.wrapping_add(k)).collect()
}

/// Rejects duplicate seeds: replications sharing a seed would produce
/// correlated runs and understate the confidence interval.
pub fn check_distinct_seeds(seeds: &[u64]) -> Result<()> {
    let mut sorted: Vec<u64> = seeds.to_vec();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Config(
            "replication seeds must be distinct within one experiment".into(),
        ));
    }
    Ok(())
}

/// Runs `runner` once per seed (in parallel) and merges the results.
pub fn replicate<F>(seeds: &[u64], runner: F) -> Result<DelayStats>
where
    F: Fn(u64) -> Result<RunStats> + Sync,
{
    if seeds.is_empty() {
        return Err(Error::Config("need at least one replication".into()));
    }
    check_distinct_seeds(seeds)?;
    let runs: Result<Vec<RunStats>> = seeds.par_iter().map(|&s| runner(s)).collect();
    summarize(&runs?, seeds[0])
}

fn summarize(runs: &[RunStats], base_seed: u64) -> Result<DelayStats> {
    let n = runs[0].per_node.len();
    let reps = runs.len() as f64;
    let mut per_node = Vec::with_capacity(n);
    for i in 0..n {
        for r in runs {
            if r.per_node[i].measured == 0 {
                return Err(Error::Config(format!(
                    "replication with seed {} delivered no measurable packets on node {i}; \
                     increase the budget or lower the warmup fraction",
                    r.seed
                )));
            }
        }
        let means: Vec<f64> = runs.iter().map(|r| r.per_node[i].mean_delay_s).collect();
        let mean = means.iter().sum::<f64>() / reps;
        let var = if runs.len() > 1 {
            means.iter().map(|m| (m - mean) * (m - mean)).sum::<f64>() / (reps - 1.0)
        } else {
            0.0
        };
        let std_err = (var / reps).sqrt();
        let throughput = runs
            .iter()
            .map(|r| r.per_node[i].throughput_pkts_s)
            .sum::<f64>()
            / reps;
        let samples = runs.iter().map(|r| r.per_node[i].measured as f64).sum::<f64>() / reps;
        per_node.push(NodeDelayStats {
            mean_delay_s: mean,
            std_err_s: std_err,
            ci95_half_s: 1.96 * std_err,
            throughput_pkts_s: throughput,
            mean_samples: samples,
        });
    }
    let aggregate = runs
        .iter()
        .map(|r| {
            r.per_node
                .iter()
                .map(|nd| nd.throughput_pkts_s)
                .sum::<f64>()
        })
        .sum::<f64>()
        / reps;
    Ok(DelayStats {
        per_node,
        aggregate_pkts_s: aggregate,
        replications: runs.len(),
        base_seed,
    })
}

/// Warmup bookkeeping plus per-node counters shared by both engines.
pub(crate) struct Collector {
    warmup: Warmup,
    window_start: Option<f64>,
    arrived: Vec<u64>,
    delivered: Vec<u64>,
    in_system: Vec<u64>,
    measured: Vec<u64>,
    delay_sum: Vec<f64>,
    delay_sq_sum: Vec<f64>,
    window_arrivals: Vec<u64>,
    q_integral: Vec<f64>,
    last_change: Vec<f64>,
    total_delivered: u64,
}

pub(crate) enum Warmup {
    /// Measure packets arriving at or after this time.
    Time(f64),
    /// Discard the first k delivered packets, measure afterwards.
    Packets(u64),
}

impl Collector {
    pub fn new(nodes: usize, warmup: Warmup) -> Self {
        let window_start = match warmup {
            Warmup::Time(t) => Some(t),
            Warmup::Packets(0) => Some(0.0),
            Warmup::Packets(_) => None,
        };
        Collector {
            warmup,
            window_start,
            arrived: vec![0; nodes],
            delivered: vec![0; nodes],
            in_system: vec![0; nodes],
            measured: vec![0; nodes],
            delay_sum: vec![0.0; nodes],
            delay_sq_sum: vec![0.0; nodes],
            window_arrivals: vec![0; nodes],
            q_integral: vec![0.0; nodes],
            last_change: vec![0.0; nodes],
            total_delivered: 0,
        }
    }

    fn integrate(&mut self, node: usize, now: f64) {
        if let Some(ws) = self.window_start {
            let lo = self.last_change[node].max(ws);
            if now > lo {
                self.q_integral[node] += self.in_system[node] as f64 * (now - lo);
            }
        }
        self.last_change[node] = now;
    }

    pub fn on_arrival(&mut self, node: usize, now: f64) {
        self.integrate(node, now);
        self.arrived[node] += 1;
        self.in_system[node] += 1;
        let in_window = match self.warmup {
            Warmup::Time(t0) => now >= t0,
            Warmup::Packets(_) => self.window_start.is_some(),
        };
        if in_window {
            self.window_arrivals[node] += 1;
        }
    }

    /// Records a fully reassembled packet. Returns true when the sample
    /// landed in the measurement window.
    pub fn on_packet_delivered(&mut self, node: usize, now: f64, arrival: f64) -> bool {
        self.integrate(node, now);
        self.delivered[node] += 1;
        self.in_system[node] -= 1;
        self.total_delivered += 1;
        let sample = match self.warmup {
            Warmup::Time(t0) => arrival >= t0,
            Warmup::Packets(k0) => {
                if self.window_start.is_none() && self.total_delivered >= k0 {
                    self.window_start = Some(now);
                    false
                } else {
                    self.window_start.is_some()
                }
            }
        };
        if sample {
            let d = now - arrival;
            self.measured[node] += 1;
            self.delay_sum[node] += d;
            self.delay_sq_sum[node] += d * d;
        }
        sample
    }

    pub fn total_delivered(&self) -> u64 {
        self.total_delivered
    }

    pub fn finish(mut self, seed: u64, end_time: f64) -> RunStats {
        for i in 0..self.arrived.len() {
            self.integrate(i, end_time);
        }
        let window_s = match self.window_start {
            Some(ws) if end_time > ws => end_time - ws,
            _ => 0.0,
        };
        let per_node = (0..self.arrived.len())
            .map(|i| {
                let m = self.measured[i];
                let mean = if m > 0 {
                    self.delay_sum[i] / m as f64
                } else {
                    0.0
                };
                let var = if m > 0 {
                    (self.delay_sq_sum[i] / m as f64 - mean * mean).max(0.0)
                } else {
                    0.0
                };
                NodeRunStats {
                    arrived: self.arrived[i],
                    delivered: self.delivered[i],
                    in_system_at_end: self.in_system[i],
                    measured: m,
                    mean_delay_s: mean,
                    delay_var_s2: var,
                    window_arrivals: self.window_arrivals[i],
                    mean_in_system: if window_s > 0.0 {
                        self.q_integral[i] / window_s
                    } else {
                        0.0
                    },
                    throughput_pkts_s: if window_s > 0.0 {
                        m as f64 / window_s
                    } else {
                        0.0
                    },
                }
            })
            .collect();
        RunStats {
            per_node,
            seed,
            end_time_s: end_time,
            window_s,
            total_delivered: self.total_delivered,
        }
    }
}
