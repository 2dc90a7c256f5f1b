//! Slot-level CSMA/CA simulator.
//!
//! Time advances by idle backoff slots, success exchanges and collision
//! windows, mirroring the renewal view of the saturated-channel analysis.
//! Stations with queued fragments count down integer backoff slots on a
//! shared grid anchored at the end of the last busy period; counters freeze
//! while the medium is busy and resume after it clears (the busy window
//! already includes the trailing DIFS). A success costs the frame plus
//! SIFS + ACK + DIFS, a collision the longest colliding frame plus DIFS.
//! There is no retry limit; stages cap at `max_stage`.

use std::collections::VecDeque;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::appdelay::Scenario;
use crate::dist::next_interarrival;
use crate::error::{Error, Result};
use crate::mac::MacParams;
use crate::sim::{
    replicate, replication_seeds, Collector, DelayStats, RunBudget, RunStats, SimConfig,
    TraceRecord, Warmup,
};

#[derive(Debug, Clone, Copy)]
struct Fragment {
    arrival_s: f64,
    bytes: f64,
    last: bool,
    pkt_bytes: f64,
    pkt_fragments: u32,
}

struct Station {
    queue: VecDeque<Fragment>,
    stage: u32,
    /// Absolute slot index (from the current idle-period anchor) at which
    /// this station transmits; `None` while not contending.
    fire_slot: Option<u64>,
    /// Became backlogged during a busy period; joins the grid when it ends.
    pending_join: bool,
    next_arrival_s: f64,
}

fn draw_backoff<R: Rng>(rng: &mut R, mac: &MacParams, stage: u32) -> u64 {
    let window = (1u64 << stage) * mac.cw_min as u64;
    rng.random_range(0..window)
}

/// Runs the DCF simulator once over `scenario`.
///
/// Packets longer than the MTU are split into ceil(bytes/MTU) fragments;
/// the packet's delay ends when its final fragment finishes its data frame.
/// Pass `trace` to receive one record per delivered packet.
pub fn run_dcf(
    scenario: &Scenario,
    mac: &MacParams,
    cfg: &SimConfig,
    mut trace: Option<&mut Vec<TraceRecord>>,
) -> Result<RunStats> {
    scenario.validate()?;
    mac.validate()?;
    cfg.validate()?;

    let n = scenario.nodes.len();
    let mtu = scenario.mtu_bytes as f64;
    let horizon = cfg.budget.horizon_s.unwrap_or(f64::INFINITY);
    let max_packets = cfg.budget.max_packets.unwrap_or(u64::MAX);
    let warmup = match (cfg.budget.horizon_s, cfg.budget.max_packets) {
        (Some(h), _) => Warmup::Time(cfg.warmup_frac * h),
        (None, Some(p)) => Warmup::Packets((cfg.warmup_frac * p as f64).ceil() as u64),
        (None, None) => unreachable!("validated"),
    };

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut stations: Vec<Station> = scenario
        .nodes
        .iter()
        .map(|node| Station {
            queue: VecDeque::new(),
            stage: 0,
            fire_slot: None,
            pending_join: false,
            next_arrival_s: next_interarrival(node.lambda, &mut rng),
        })
        .collect();
    let mut collector = Collector::new(n, warmup);

    // channel state
    let mut anchor = 0.0_f64; // start of the current idle period's slot grid
    let mut busy_until: Option<f64> = None;
    // data frame in flight: (data end, station, fragment)
    let mut in_flight: Option<(f64, usize, Fragment)> = None;

    // event ranks: arrival < slot fire < frame end < busy end
    const RANK_ARRIVAL: u8 = 0;
    const RANK_FIRE: u8 = 1;
    const RANK_DELIVERY: u8 = 2;
    const RANK_BUSY_END: u8 = 3;

    let end_time = loop {
        let mut best: Option<(f64, u8, usize)> = None;
        let mut consider = |t: f64, rank: u8, node: usize| {
            let cand = (t, rank, node);
            if best.is_none_or(|b| cand < b) {
                best = Some(cand);
            }
        };
        for (i, st) in stations.iter().enumerate() {
            consider(st.next_arrival_s, RANK_ARRIVAL, i);
        }
        if let Some((t, i, _)) = in_flight {
            consider(t, RANK_DELIVERY, i);
        }
        if let Some(t) = busy_until {
            consider(t, RANK_BUSY_END, 0);
        } else {
            let next_fire = stations
                .iter()
                .enumerate()
                .filter_map(|(i, st)| st.fire_slot.map(|f| (f, i)))
                .min();
            if let Some((k, i)) = next_fire {
                consider(anchor + k as f64 * mac.slot_time, RANK_FIRE, i);
            }
        }

        let (now, rank, node) = best.expect("arrival streams never run dry");
        if now > horizon {
            break horizon;
        }

        match rank {
            RANK_ARRIVAL => {
                let st = &mut stations[node];
                let bytes = scenario.nodes[node].length.sample(mtu, &mut rng);
                let fragments = (bytes / mtu).ceil().max(1.0) as u32;
                let was_empty = st.queue.is_empty();
                for k in 0..fragments {
                    let frag_bytes = if k + 1 < fragments {
                        mtu
                    } else {
                        bytes - mtu * (fragments - 1) as f64
                    };
                    st.queue.push_back(Fragment {
                        arrival_s: now,
                        bytes: frag_bytes,
                        last: k + 1 == fragments,
                        pkt_bytes: bytes,
                        pkt_fragments: fragments,
                    });
                }
                st.next_arrival_s = now + next_interarrival(scenario.nodes[node].lambda, &mut rng);
                collector.on_arrival(node, now);
                if was_empty {
                    if busy_until.is_some() {
                        st.pending_join = true;
                    } else {
                        let has_grid = stations.iter().any(|s| s.fire_slot.is_some());
                        let stage = stations[node].stage;
                        if has_grid {
                            // sense DIFS, then count on the existing grid
                            let elapsed =
                                ((now + mac.difs - anchor) / mac.slot_time).ceil().max(0.0);
                            stations[node].fire_slot =
                                Some(elapsed as u64 + draw_backoff(&mut rng, mac, stage));
                        } else {
                            anchor = now + mac.difs;
                            stations[node].fire_slot =
                                Some(draw_backoff(&mut rng, mac, stage));
                        }
                    }
                }
            }
            RANK_FIRE => {
                let k = stations
                    .iter()
                    .filter_map(|s| s.fire_slot)
                    .min()
                    .expect("fire event implies a contender");
                let transmitters: Vec<usize> = (0..n)
                    .filter(|&i| stations[i].fire_slot == Some(k))
                    .collect();
                for (i, st) in stations.iter_mut().enumerate() {
                    if let Some(f) = st.fire_slot {
                        if !transmitters.contains(&i) {
                            st.fire_slot = Some(f - k); // consumed idle slots
                        }
                    }
                }
                if transmitters.len() == 1 {
                    let i = transmitters[0];
                    let frag = stations[i].queue.pop_front().expect("contender has work");
                    let data_end = now + mac.frame_time(frag.bytes);
                    busy_until = Some(data_end + mac.sifs + mac.ack_time + mac.difs);
                    in_flight = Some((data_end, i, frag));
                    stations[i].stage = 0;
                    stations[i].fire_slot = if stations[i].queue.is_empty() {
                        None
                    } else {
                        Some(draw_backoff(&mut rng, mac, 0))
                    };
                } else {
                    let longest = transmitters
                        .iter()
                        .map(|&i| mac.frame_time(stations[i].queue[0].bytes))
                        .fold(0.0, f64::max);
                    busy_until = Some(now + longest + mac.difs);
                    for &i in &transmitters {
                        let st = &mut stations[i];
                        st.stage = (st.stage + 1).min(mac.max_stage);
                        st.fire_slot = Some(draw_backoff(&mut rng, mac, st.stage));
                    }
                }
            }
            RANK_DELIVERY => {
                let (_, i, frag) = in_flight.take().expect("delivery implies a frame");
                if frag.last {
                    collector.on_packet_delivered(i, now, frag.arrival_s);
                    if let Some(out) = trace.as_deref_mut() {
                        out.push(TraceRecord {
                            node: i,
                            arrival_s: frag.arrival_s,
                            delivery_s: now,
                            bytes: frag.pkt_bytes,
                            fragments: frag.pkt_fragments,
                        });
                    }
                    if collector.total_delivered() >= max_packets {
                        break now;
                    }
                }
            }
            RANK_BUSY_END => {
                busy_until = None;
                anchor = now;
                for st in stations.iter_mut() {
                    if st.pending_join {
                        st.pending_join = false;
                        let stage = st.stage;
                        st.fire_slot = Some(draw_backoff(&mut rng, mac, stage));
                    }
                }
            }
            _ => unreachable!(),
        }
    };

    Ok(collector.finish(cfg.seed, end_time))
}

/// Runs independent replications of [`run_dcf`] and merges them.
pub fn run_dcf_replicated(
    scenario: &Scenario,
    mac: &MacParams,
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
        run_dcf(scenario, mac, &cfg, None)
    })
}

/// Saturated-channel capacity estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct CapacityEstimate {
    /// Delivered packets per second, all stations combined.
    pub pkts_per_s: f64,
    pub per_node_pkts_per_s: Vec<f64>,
}

/// Measures the channel's packet capacity with every station permanently
/// backlogged with `packet_bytes`-sized packets.
pub fn estimate_capacity(
    mac: &MacParams,
    nodes: u32,
    packet_bytes: f64,
    cfg: &SimConfig,
) -> Result<CapacityEstimate> {
    mac.validate()?;
    cfg.validate()?;
    if nodes == 0 {
        return Err(Error::InvalidParameter("node count must be >= 1".into()));
    }
    if !(packet_bytes > 0.0) {
        return Err(Error::InvalidParameter(
            "packet length must be positive".into(),
        ));
    }
    let horizon = cfg
        .budget
        .horizon_s
        .ok_or_else(|| Error::Config("capacity estimation needs a time horizon".into()))?;
    let warmup_end = cfg.warmup_frac * horizon;

    let n = nodes as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut stage = vec![0u32; n];
    let mut fire: Vec<u64> = (0..n).map(|_| draw_backoff(&mut rng, mac, 0)).collect();
    let mut anchor = mac.difs;
    let mut delivered = vec![0u64; n];
    let frame = mac.frame_time(packet_bytes);

    loop {
        let k = *fire.iter().min().expect("nonempty");
        let fire_time = anchor + k as f64 * mac.slot_time;
        if fire_time > horizon {
            break;
        }
        let transmitters: Vec<usize> = (0..n).filter(|&i| fire[i] == k).collect();
        for (i, f) in fire.iter_mut().enumerate() {
            if !transmitters.contains(&i) {
                *f -= k;
            }
        }
        if transmitters.len() == 1 {
            let i = transmitters[0];
            if fire_time >= warmup_end {
                delivered[i] += 1;
            }
            stage[i] = 0;
            fire[i] = draw_backoff(&mut rng, mac, 0);
            anchor = fire_time + frame + mac.sifs + mac.ack_time + mac.difs;
        } else {
            for &i in &transmitters {
                stage[i] = (stage[i] + 1).min(mac.max_stage);
                fire[i] = draw_backoff(&mut rng, mac, stage[i]);
            }
            anchor = fire_time + frame + mac.difs;
        }
    }

    let window = horizon - warmup_end;
    let per_node: Vec<f64> = delivered.iter().map(|&d| d as f64 / window).collect();
    Ok(CapacityEstimate {
        pkts_per_s: per_node.iter().sum(),
        per_node_pkts_per_s: per_node,
    })
}
