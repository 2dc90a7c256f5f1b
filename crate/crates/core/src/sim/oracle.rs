//! Abstract 1-limited random-polling-server oracle.
//!
//! Ground truth for the closed-form delay chain, independent of any MAC
//! detail: a single server picks a nonempty queue uniformly at random,
//! serves exactly one fragment, and switches instantaneously. In the
//! sub-MTU regime a packet is one fragment served in `omega * P/C`
//! seconds; in the super-MTU regime a packet arrives as a batch of
//! ceil(bytes/MTU) fragments, each served in exactly `P/C`.

use std::collections::VecDeque;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::appdelay::{Regime, Scenario};
use crate::dist::next_interarrival;
use crate::error::Result;
use crate::sim::{
    replicate, replication_seeds, Collector, DelayStats, RunBudget, RunStats, SimConfig,
    TraceRecord, Warmup,
};

#[derive(Debug, Clone, Copy)]
struct Customer {
    arrival_s: f64,
    service_s: f64,
    last: bool,
    pkt_bytes: f64,
    pkt_fragments: u32,
}

/// Runs the polling oracle once over `scenario`.
pub fn run_rps_oracle(
    scenario: &Scenario,
    cfg: &SimConfig,
    mut trace: Option<&mut Vec<TraceRecord>>,
) -> Result<RunStats> {
    scenario.validate()?;
    cfg.validate()?;

    let n = scenario.nodes.len();
    let mtu = scenario.mtu_bytes as f64;
    let unit = scenario.mtu_service_s();
    let horizon = cfg.budget.horizon_s.unwrap_or(f64::INFINITY);
    let max_packets = cfg.budget.max_packets.unwrap_or(u64::MAX);
    let warmup = match (cfg.budget.horizon_s, cfg.budget.max_packets) {
        (Some(h), _) => Warmup::Time(cfg.warmup_frac * h),
        (None, Some(p)) => Warmup::Packets((cfg.warmup_frac * p as f64).ceil() as u64),
        (None, None) => unreachable!("validated"),
    };

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut queues: Vec<VecDeque<Customer>> = (0..n).map(|_| VecDeque::new()).collect();
    let mut next_arrival: Vec<f64> = scenario
        .nodes
        .iter()
        .map(|node| next_interarrival(node.lambda, &mut rng))
        .collect();
    let mut serving: Option<(f64, usize, Customer)> = None;
    let mut collector = Collector::new(n, warmup);

    let end_time = loop {
        // next event: earliest arrival or the service completion;
        // arrivals win ties
        let (arr_t, arr_node) = next_arrival
            .iter()
            .copied()
            .zip(0..)
            .map(|(t, i)| (t, i))
            .min_by(|a, b| a.partial_cmp(b).expect("finite times"))
            .expect("at least one node");
        let service_t = serving.as_ref().map(|(t, _, _)| *t).unwrap_or(f64::INFINITY);

        if arr_t <= service_t {
            if arr_t > horizon {
                break horizon;
            }
            let now = arr_t;
            let bytes = scenario.nodes[arr_node].length.sample(mtu, &mut rng);
            let fragments = match scenario.regime {
                Regime::SubMtu => 1,
                Regime::SuperMtu => (bytes / mtu).ceil().max(1.0) as u32,
            };
            for k in 0..fragments {
                let service_s = match scenario.regime {
                    Regime::SubMtu => bytes / mtu * unit,
                    Regime::SuperMtu => unit,
                };
                queues[arr_node].push_back(Customer {
                    arrival_s: now,
                    service_s,
                    last: k + 1 == fragments,
                    pkt_bytes: bytes,
                    pkt_fragments: fragments,
                });
            }
            collector.on_arrival(arr_node, now);
            next_arrival[arr_node] =
                now + next_interarrival(scenario.nodes[arr_node].lambda, &mut rng);
            if serving.is_none() {
                // server was idle, so this queue is the only nonempty one
                let cust = queues[arr_node].pop_front().expect("just pushed");
                serving = Some((now + cust.service_s, arr_node, cust));
            }
        } else {
            if service_t > horizon {
                break horizon;
            }
            let now = service_t;
            let (_, node, cust) = serving.take().expect("service end implies a customer");
            if cust.last {
                collector.on_packet_delivered(node, now, cust.arrival_s);
                if let Some(out) = trace.as_deref_mut() {
                    out.push(TraceRecord {
                        node,
                        arrival_s: cust.arrival_s,
                        delivery_s: now,
                        bytes: cust.pkt_bytes,
                        fragments: cust.pkt_fragments,
                    });
                }
                if collector.total_delivered() >= max_packets {
                    break now;
                }
            }
            // 1-limited service: pick the next nonempty queue uniformly
            let nonempty: Vec<usize> = (0..n).filter(|&i| !queues[i].is_empty()).collect();
            if !nonempty.is_empty() {
                let pick = nonempty[rng.random_range(0..nonempty.len())];
                let cust = queues[pick].pop_front().expect("nonempty");
                serving = Some((now + cust.service_s, pick, cust));
            }
        }
    };

    Ok(collector.finish(cfg.seed, end_time))
}

/// Runs independent replications of [`run_rps_oracle`] and merges them.
pub fn run_rps_oracle_replicated(
    scenario: &Scenario,
    replications: usize,
    base_seed: u64,
    budget: RunBudget,
    warmup_frac: f64,
) -> Result<DelayStats> {
    let seeds = replication_seeds(base_seed, replications);
    replicate(&seeds, |seed| {
        let cfg = SimConfig {
            seed,
            budget,
            warmup_frac,
        };
        run_rps_oracle(scenario, &cfg, None)
    })
}
