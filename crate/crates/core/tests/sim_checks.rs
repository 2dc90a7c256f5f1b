//! Independent discrete-event oracles for the closed-form chain.
//!
//! Each test builds its own miniature simulator from scratch, deliberately
//! sharing no code with the library engines, and checks a formula path
//! against it.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Gamma};

use delaylab_core::appdelay::{
    fragment_delay, mean_delay_super_mtu, NodeSpec, Regime, Scenario,
};
use delaylab_core::dist::PacketLengthDist;
use delaylab_core::rps::{
    batch_poisson_moments, mean_wait_nonzero_switchover, QueueMoments, RpsParams, RpsQueue,
    ServiceMoments, Switchover,
};
use delaylab_core::sim::oracle::run_rps_oracle_replicated;
use delaylab_core::sim::RunBudget;

fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// M/G/1 with 1-limited service and a constant switchover after every
/// period, simulated directly, against the general closed form.
#[test]
fn single_queue_vacation_sim_matches_general_form() {
    let (lambda, service, switch) = (20.0, 0.02, 0.005);
    let params = RpsParams::new(
        vec![RpsQueue {
            arrivals: QueueMoments::from_batch_poisson(lambda, 1.0, 1.0).unwrap(),
            service: ServiceMoments::new(service, service * service).unwrap(),
        }],
        vec![1.0],
        vec![Switchover::constant(switch)],
    )
    .unwrap();
    let analytic = mean_wait_nonzero_switchover(&params).unwrap().mean_wait[0];

    let mut rep_means = Vec::new();
    for rep in 0..10u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(900 + rep);
        let arrivals = Exp::new(lambda).unwrap();
        let mut t = 0.0_f64;
        let mut next_arrival = arrivals.sample(&mut rng);
        let mut queue: std::collections::VecDeque<f64> = Default::default();
        let mut done = 0u64;
        let mut sum = 0.0;
        let total = 120_000u64;
        let warm = total / 10;
        while done < total {
            while next_arrival <= t {
                queue.push_back(next_arrival);
                next_arrival += arrivals.sample(&mut rng);
            }
            if let Some(arrived) = queue.pop_front() {
                t += service;
                done += 1;
                if done > warm {
                    sum += t - arrived;
                }
            }
            t += switch;
        }
        rep_means.push(sum / (total - warm) as f64);
    }
    let (sim, se) = mean_and_se(&rep_means);
    assert!(
        (sim - analytic).abs() < 3.0 * se,
        "vacation sim {sim} vs closed form {analytic} (se {se})"
    );
}

/// Generic memoryless-polling simulator: pick a queue by `gamma`, serve one
/// customer if it has any, then incur that queue's switchover.
fn polling_sim(
    lambdas: &[f64],
    services: &[(f64, f64)], // (mean, squared CV); CV 0 means deterministic
    gamma: &[f64],
    switch: &[f64],
    total: u64,
    seed: u64,
) -> Vec<f64> {
    let n = lambdas.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let service_dist: Vec<Option<Gamma<f64>>> = services
        .iter()
        .map(|&(p, cv2)| {
            if cv2 == 0.0 {
                None
            } else {
                let shape = 1.0 / cv2;
                Some(Gamma::new(shape, p / shape).unwrap())
            }
        })
        .collect();
    let cumulative: Vec<f64> = gamma
        .iter()
        .scan(0.0, |acc, g| {
            *acc += g;
            Some(*acc)
        })
        .collect();
    let mut t = 0.0_f64;
    let mut next_arrival: Vec<f64> = lambdas
        .iter()
        .map(|&l| Exp::new(l).unwrap().sample(&mut rng))
        .collect();
    let mut queues: Vec<std::collections::VecDeque<f64>> = vec![Default::default(); n];
    let mut sums = vec![0.0_f64; n];
    let mut counts = vec![0u64; n];
    let mut done = 0u64;
    let warm = total / 10;
    while done < total {
        for i in 0..n {
            while next_arrival[i] <= t {
                queues[i].push_back(next_arrival[i]);
                next_arrival[i] += Exp::new(lambdas[i]).unwrap().sample(&mut rng);
            }
        }
        let u: f64 = rng.random();
        let pick = cumulative.iter().position(|c| u < *c).unwrap_or(n - 1);
        if let Some(arrived) = queues[pick].pop_front() {
            let s = match &service_dist[pick] {
                Some(d) => d.sample(&mut rng),
                None => services[pick].0,
            };
            t += s;
            done += 1;
            if done > warm {
                sums[pick] += t - arrived;
                counts[pick] += 1;
            }
        }
        t += switch[pick];
    }
    (0..n).map(|i| sums[i] / counts[i] as f64).collect()
}

/// Three identical queues under fair polling with nonzero switchover: the
/// multi-queue nabla/psi machinery against a from-scratch simulation.
#[test]
fn symmetric_three_queue_polling_sim_matches_general_form() {
    let (lambda, p, cv2, sw) = (7.0, 0.014, 0.5, 0.0025);
    let queues = vec![
        RpsQueue {
            arrivals: QueueMoments::from_batch_poisson(lambda, 1.0, 1.0).unwrap(),
            service: ServiceMoments::new(p, p * p * (1.0 + cv2)).unwrap(),
        };
        3
    ];
    let params = RpsParams::new(
        queues,
        vec![1.0 / 3.0; 3],
        vec![Switchover::constant(sw); 3],
    )
    .unwrap();
    let analytic = mean_wait_nonzero_switchover(&params).unwrap().mean_wait;

    let mut rep_means: Vec<Vec<f64>> = vec![Vec::new(); 3];
    for rep in 0..12u64 {
        let sim = polling_sim(
            &[lambda; 3],
            &[(p, cv2); 3],
            &[1.0 / 3.0; 3],
            &[sw; 3],
            180_000,
            4_000 + rep,
        );
        for i in 0..3 {
            rep_means[i].push(sim[i]);
        }
    }
    for i in 0..3 {
        let (sim, se) = mean_and_se(&rep_means[i]);
        assert!(
            (sim - analytic[i]).abs() < 3.0 * se.max(1e-6),
            "queue {i}: sim {sim} vs closed form {} (se {se})",
            analytic[i]
        );
    }
}

/// Heterogeneous queues at nonzero switchover: the closed form is a
/// model-level approximation (it tracks the busiest queue best), so it gets
/// a bounded-error check rather than a statistical one.
#[test]
fn heterogeneous_polling_closed_form_stays_within_documented_bound() {
    let lambdas = [14.0, 5.0];
    let services = [(0.012, 0.6), (0.025, 0.0)];
    let switch = [0.003, 0.005];
    let queues: Vec<RpsQueue> = (0..2)
        .map(|i| RpsQueue {
            arrivals: QueueMoments::from_batch_poisson(lambdas[i], 1.0, 1.0).unwrap(),
            service: ServiceMoments::new(
                services[i].0,
                services[i].0 * services[i].0 * (1.0 + services[i].1),
            )
            .unwrap(),
        })
        .collect();
    let params = RpsParams::new(
        queues,
        vec![0.5, 0.5],
        switch.iter().map(|s| Switchover::constant(*s)).collect(),
    )
    .unwrap();
    let analytic = mean_wait_nonzero_switchover(&params).unwrap().mean_wait;

    let sim = polling_sim(&lambdas, &services, &[0.5, 0.5], &switch, 400_000, 9_100);
    for i in 0..2 {
        let rel = (analytic[i] - sim[i]).abs() / sim[i];
        assert!(
            rel < 0.10,
            "queue {i}: closed form {} vs sim {}: rel {rel}",
            analytic[i],
            sim[i]
        );
    }
}

/// The linear-quadratic arrival model: counting simulation of a batch
/// Poisson process recovers a = lambda*b and e = lambda*b2 as the slopes of
/// E[A(t)] and the linear part of E[A(t)^2].
#[test]
fn batch_poisson_counting_recovers_moments() {
    // (batch law, lambda, b, b2); two-point and exponential batch sizes
    struct Case {
        lambda: f64,
        b: f64,
        b2: f64,
        sample: fn(&mut ChaCha8Rng) -> f64,
    }
    let cases = [
        Case {
            lambda: 5.0,
            b: 2.0,
            b2: 5.0,
            // batch of 1 or 3 with equal probability
            sample: |rng| if rng.random::<f64>() < 0.5 { 1.0 } else { 3.0 },
        },
        Case {
            lambda: 10.0,
            b: 0.75,
            b2: 1.125,
            // exponential batch size, mean 0.75 (continuous batches)
            sample: |rng| Exp::new(1.0 / 0.75).unwrap().sample(rng),
        },
    ];

    for case in &cases {
        let (a, e) = batch_poisson_moments(case.lambda, case.b, case.b2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(777);
        for window in [0.05_f64, 0.2] {
            let reps = 400_000usize;
            let (mut s1, mut s2, mut s4) = (0.0, 0.0, 0.0);
            for _ in 0..reps {
                let mut t = Exp::new(case.lambda).unwrap().sample(&mut rng);
                let mut total = 0.0;
                while t <= window {
                    total += (case.sample)(&mut rng);
                    t += Exp::new(case.lambda).unwrap().sample(&mut rng);
                }
                s1 += total;
                s2 += total * total;
                s4 += total * total * total * total;
            }
            let n = reps as f64;
            let (m1, m2, m4) = (s1 / n, s2 / n, s4 / n);
            let se1 = ((m2 - m1 * m1).max(0.0) / n).sqrt();
            let se2 = ((m4 - m2 * m2).max(0.0) / n).sqrt();
            let expect1 = a * window;
            let expect2 = e * window + a * a * window * window;
            assert!(
                (m1 - expect1).abs() < 4.0 * se1,
                "E[A({window})] = {m1}, expected {expect1}"
            );
            assert!(
                (m2 - expect2).abs() < 4.0 * se2,
                "E[A({window})^2] = {m2}, expected {expect2}"
            );
        }
    }
}

/// Deterministic 3000-byte packets over a 1500-byte MTU make the
/// continuous-batch model exact (every packet is exactly two MTU
/// fragments), so the fragment formula must match simulation tightly;
/// the packet formula is a documented approximation.
#[test]
fn super_mtu_deterministic_batches() {
    let scenario = Scenario {
        nodes: vec![
            NodeSpec {
                lambda: 3.4,
                length: PacketLengthDist::det(3000.0),
            };
            4
        ],
        mtu_bytes: 1500,
        capacity_pkts_per_s: 68.9,
        regime: Regime::SuperMtu,
    };
    let frag_analytic = fragment_delay(&scenario).unwrap()[0];
    let pkt_analytic = mean_delay_super_mtu(&scenario).unwrap().per_node_s[0];

    // from-scratch 1-limited polling simulation over MTU fragments
    let unit = 1.0 / 68.9;
    let n = 4;
    let mut frag_means = Vec::new();
    let mut last_means = Vec::new();
    for rep in 0..10u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(31_000 + rep);
        let mut next_arrival: Vec<f64> = (0..n)
            .map(|_| Exp::new(3.4).unwrap().sample(&mut rng))
            .collect();
        // queue entries: (arrival time, is_last_fragment)
        let mut queues: Vec<std::collections::VecDeque<(f64, bool)>> =
            vec![Default::default(); n];
        let mut t = 0.0_f64;
        let (mut frag_sum, mut frag_count) = (0.0, 0u64);
        let (mut last_sum, mut last_count) = (0.0, 0u64);
        let total_frags = 300_000u64;
        let mut done = 0u64;
        let warm = total_frags / 10;
        while done < total_frags {
            let horizon = next_arrival
                .iter()
                .cloned()
                .fold(f64::INFINITY, f64::min);
            // admit arrivals up to now; if idle, jump to next arrival
            let nonempty: Vec<usize> = (0..n).filter(|&i| !queues[i].is_empty()).collect();
            if nonempty.is_empty() {
                t = t.max(horizon);
            }
            for i in 0..n {
                while next_arrival[i] <= t {
                    let at = next_arrival[i];
                    queues[i].push_back((at, false));
                    queues[i].push_back((at, true));
                    next_arrival[i] += Exp::new(3.4).unwrap().sample(&mut rng);
                }
            }
            let nonempty: Vec<usize> = (0..n).filter(|&i| !queues[i].is_empty()).collect();
            if nonempty.is_empty() {
                continue;
            }
            let pick = nonempty[rng.random_range(0..nonempty.len())];
            let (arrived, last) = queues[pick].pop_front().unwrap();
            t += unit;
            done += 1;
            if done > warm {
                frag_sum += t - arrived;
                frag_count += 1;
                if last {
                    last_sum += t - arrived;
                    last_count += 1;
                }
            }
        }
        frag_means.push(frag_sum / frag_count as f64);
        last_means.push(last_sum / last_count as f64);
    }

    let (frag_sim, frag_se) = mean_and_se(&frag_means);
    assert!(
        (frag_sim - frag_analytic).abs() < 3.0 * frag_se,
        "fragment delay: sim {frag_sim} vs formula {frag_analytic} (se {frag_se})"
    );

    // the last-fragment (packet) expression is approximate; it should sit
    // within 15% of the truth here
    let (last_sim, _) = mean_and_se(&last_means);
    let rel = (pkt_analytic - last_sim).abs() / last_sim;
    assert!(
        rel < 0.15,
        "packet delay formula {pkt_analytic} vs sim {last_sim}: rel {rel}"
    );

    // the shipped oracle engine measures the same last-fragment delay
    let oracle = run_rps_oracle_replicated(&scenario, 10, 5_500, RunBudget::packets(40_000), 0.1)
        .unwrap();
    let node = &oracle.per_node[0];
    assert!(
        (node.mean_delay_s - last_sim).abs() < 4.0 * node.std_err_s.max(1e-5),
        "oracle packet delay {} vs reference sim {last_sim}",
        node.mean_delay_s
    );
}
