//! 1-limited random polling system: general nonzero-switchover mean waits,
//! the zero-switchover limit, and batch-Poisson arrival moments.
//!
//! A single server visits `n` infinite-buffer queues. After each period it
//! picks queue `j` with probability `gamma_j`, serves at most one customer,
//! and incurs that queue's switchover time. Arrivals at queue `i` form a
//! batch Poisson process summarized by the linear-quadratic pair
//! `E[A_i(t)] = a_i t`, `E[A_i(t)^2] = e_ii t + a_i^2 t^2`. Cross
//! correlations `e_ij`, `i != j`, are zero throughout (uncorrelated inputs).

use crate::error::{Error, Result};
use crate::numeric::csum;

/// Arrival moments of one queue under the linear-quadratic model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QueueMoments {
    /// Packet arrival rate a = lambda * b (packets/s).
    pub a: f64,
    /// Linear second-moment coefficient e = lambda * b2 (packets^2/s).
    pub e: f64,
    /// Mean batch size b.
    pub b: f64,
    /// Second moment of the batch size b2.
    pub b2: f64,
    /// Batch arrival rate (batches/s).
    pub lambda: f64,
}

impl QueueMoments {
    /// Builds the moments from a batch Poisson description; `a` and `e`
    /// follow from the batch-size MGF as `lambda*b` and `lambda*b2`.
    pub fn from_batch_poisson(lambda: f64, b: f64, b2: f64) -> Result<Self> {
        let (a, e) = batch_poisson_moments(lambda, b, b2)?;
        Ok(QueueMoments { a, e, b, b2, lambda })
    }
}

/// Packet arrival moments `(a, e)` of a Poisson(lambda) stream of batches
/// with batch-size moments `(b, b2)`.
pub fn batch_poisson_moments(lambda: f64, b: f64, b2: f64) -> Result<(f64, f64)> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "batch rate must be positive, got {lambda}"
        )));
    }
    if !(b > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "mean batch size must be positive, got {b}"
        )));
    }
    if b2 < b * b {
        return Err(Error::InvalidDistribution(format!(
            "batch second moment {b2} below squared mean {}",
            b * b
        )));
    }
    Ok((lambda * b, lambda * b2))
}

/// Service-time moments of one queue.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ServiceMoments {
    pub p: f64,
    pub p2: f64,
}

impl ServiceMoments {
    pub fn new(p: f64, p2: f64) -> Result<Self> {
        if !(p > 0.0) || p2 < p * p {
            return Err(Error::InvalidParameter(format!(
                "service moments need p > 0 and p2 >= p^2, got p={p}, p2={p2}"
            )));
        }
        Ok(ServiceMoments { p, p2 })
    }
}

/// Switchover-time moments after serving one queue.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Switchover {
    pub s: f64,
    pub s2: f64,
}

impl Switchover {
    pub const ZERO: Switchover = Switchover { s: 0.0, s2: 0.0 };

    pub fn constant(s: f64) -> Self {
        Switchover { s, s2: s * s }
    }
}

/// One queue of the polling system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RpsQueue {
    pub arrivals: QueueMoments,
    pub service: ServiceMoments,
}

/// Full parameter set of the polling system.
#[derive(Debug, Clone, PartialEq)]
pub struct RpsParams {
    queues: Vec<RpsQueue>,
    gamma: Vec<f64>,
    switchover: Vec<Switchover>,
}

impl RpsParams {
    /// Validates and assembles the system; rejects unstable loads.
    pub fn new(
        queues: Vec<RpsQueue>,
        gamma: Vec<f64>,
        switchover: Vec<Switchover>,
    ) -> Result<Self> {
        if queues.is_empty() {
            return Err(Error::InvalidParameter("need at least one queue".into()));
        }
        if gamma.len() != queues.len() || switchover.len() != queues.len() {
            return Err(Error::InvalidParameter(format!(
                "length mismatch: {} queues, {} gammas, {} switchovers",
                queues.len(),
                gamma.len(),
                switchover.len()
            )));
        }
        for (i, g) in gamma.iter().enumerate() {
            if !(*g > 0.0 && *g <= 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "gamma[{i}] must lie in (0, 1], got {g}"
                )));
            }
        }
        let total: f64 = csum(gamma.iter().copied());
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "polling probabilities must sum to 1, got {total}"
            )));
        }
        for (i, sw) in switchover.iter().enumerate() {
            if sw.s < 0.0 || sw.s2 < sw.s * sw.s {
                return Err(Error::InvalidParameter(format!(
                    "switchover[{i}] needs s >= 0 and s2 >= s^2"
                )));
            }
        }
        let rho = csum(queues.iter().map(|q| q.arrivals.a * q.service.p));
        if rho >= 1.0 {
            return Err(Error::Unstable { rho });
        }
        Ok(RpsParams {
            queues,
            gamma,
            switchover,
        })
    }

    /// Fair polling (gamma = 1/n) with zero switchover times.
    pub fn uniform_polling(queues: Vec<RpsQueue>) -> Result<Self> {
        let n = queues.len();
        let gamma = vec![1.0 / n as f64; n];
        let switchover = vec![Switchover::ZERO; n];
        Self::new(queues, gamma, switchover)
    }

    /// Same system with every switchover replaced by the constant `eps`.
    pub fn with_constant_switchover(&self, eps: f64) -> Result<Self> {
        Self::new(
            self.queues.clone(),
            self.gamma.clone(),
            vec![Switchover::constant(eps); self.queues.len()],
        )
    }

    pub fn len(&self) -> usize {
        self.queues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queues.is_empty()
    }

    pub fn queues(&self) -> &[RpsQueue] {
        &self.queues
    }

    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    pub fn switchover(&self) -> &[Switchover] {
        &self.switchover
    }

    /// Mean switchover per period, s = sum_j s_j gamma_j.
    pub fn mean_switchover(&self) -> f64 {
        csum(
            self.switchover
                .iter()
                .zip(&self.gamma)
                .map(|(sw, g)| sw.s * g),
        )
    }
}

/// Per-queue and total offered load, rho_i = a_i p_i.
pub fn offered_load(params: &RpsParams) -> (Vec<f64>, f64) {
    let per_queue: Vec<f64> = params
        .queues
        .iter()
        .map(|q| q.arrivals.a * q.service.p)
        .collect();
    let total = csum(per_queue.iter().copied());
    (per_queue, total)
}

/// Intermediate quantities of the nonzero-switchover solution.
#[derive(Debug, Clone, PartialEq)]
pub struct RpsIntermediates {
    pub chi: Vec<f64>,
    /// nabla[i][j]
    pub nabla: Vec<Vec<f64>>,
    pub psi: Vec<f64>,
    pub mean_switchover: f64,
    pub rho: f64,
}

/// chi_i, nabla_ij and psi_i for a system with nonzero switchover times.
pub fn rps_intermediates(params: &RpsParams) -> Result<RpsIntermediates> {
    if params.switchover.iter().any(|sw| sw.s <= 0.0) {
        return Err(Error::ModelOutOfRange(
            "general polling solution needs strictly positive switchover times; \
             use the zero-switchover limit instead"
                .into(),
        ));
    }
    Ok(intermediates_unchecked(params))
}

fn intermediates_unchecked(params: &RpsParams) -> RpsIntermediates {
    let n = params.len();
    let qs = &params.queues;
    let gamma = &params.gamma;
    let sw = &params.switchover;
    let (_, rho) = offered_load(params);
    let s = params.mean_switchover();
    let one_less = 1.0 - rho;

    let chi: Vec<f64> = (0..n)
        .map(|i| {
            let ai = qs[i].arrivals.a;
            1.0 - s * ai / gamma[i] - rho * s * ai / (2.0 * gamma[i] * one_less)
        })
        .collect();

    // shared sum over queues inside nabla
    let k_sum = csum((0..n).map(|l| {
        gamma[l] * sw[l].s2
            + (qs[l].service.p2 + 2.0 * sw[l].s * qs[l].service.p) * qs[l].arrivals.a * s
                / one_less
    }));

    let nabla_at = |i: usize, j: usize| {
        let ai = qs[i].arrivals.a;
        let aj = qs[j].arrivals.a;
        let e_ij = if i == j { qs[i].arrivals.e } else { 0.0 };
        let indicator = if i == j { ai } else { 0.0 };
        ai * aj * k_sum + s * (e_ij + indicator) / one_less
            - ai * aj * s * (sw[i].s + sw[j].s + qs[i].service.p + qs[j].service.p) / one_less
    };

    let nabla: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| nabla_at(i, j)).collect())
        .collect();

    let psi: Vec<f64> = (0..n)
        .map(|i| {
            let ai = qs[i].arrivals.a;
            let weighted = csum((0..n).map(|l| qs[l].service.p * nabla[i][l]));
            nabla[i][i] / (2.0 * gamma[i]) + ai * weighted / (2.0 * gamma[i] * one_less)
        })
        .collect();

    RpsIntermediates {
        chi,
        nabla,
        psi,
        mean_switchover: s,
        rho,
    }
}

/// Stationary solution of the nonzero-switchover system.
#[derive(Debug, Clone, PartialEq)]
pub struct RpsSolution {
    /// E[Q_i]: mean queue length at period starts.
    pub mean_queue_len: Vec<f64>,
    /// P{Q_i >= 1}.
    pub prob_nonempty: Vec<f64>,
    /// E[W_i]: mean packet sojourn time (wait plus service).
    pub mean_wait: Vec<f64>,
    pub rho: f64,
}

/// Mean waits of the 1-limited random polling system with nonzero
/// switchover times.
pub fn mean_wait_nonzero_switchover(params: &RpsParams) -> Result<RpsSolution> {
    let inter = rps_intermediates(params)?;
    let n = params.len();
    let qs = &params.queues;
    let gamma = params.gamma();
    let s = inter.mean_switchover;
    let rho = inter.rho;
    let one_less = 1.0 - rho;

    let prob_nonempty: Vec<f64> = (0..n)
        .map(|i| s * qs[i].arrivals.a / (gamma[i] * one_less))
        .collect();
    for (i, p) in prob_nonempty.iter().enumerate() {
        if *p > 1.0 {
            return Err(Error::ModelOutOfRange(format!(
                "P{{Q_{i} >= 1}} = {p} exceeds 1: switchover too large for these loads"
            )));
        }
    }
    if inter.chi.iter().any(|c| *c <= 0.0) {
        return Err(Error::ModelOutOfRange(
            "chi became nonpositive: switchover too large for these loads".into(),
        ));
    }

    let denom = 1.0
        - csum((0..n).map(|l| {
            let al = qs[l].arrivals.a;
            qs[l].service.p * al * al * s / (2.0 * gamma[l] * one_less * inter.chi[l])
        }));
    if denom <= 0.0 {
        return Err(Error::ModelOutOfRange(format!(
            "queue-length denominator {denom} is nonpositive"
        )));
    }
    let psi_over_chi = csum((0..n).map(|l| qs[l].service.p * inter.psi[l] / inter.chi[l]));

    let mean_queue_len: Vec<f64> = (0..n)
        .map(|i| {
            let ai = qs[i].arrivals.a;
            inter.psi[i] / inter.chi[i]
                + s * ai * ai / (2.0 * gamma[i] * one_less * inter.chi[i]) * psi_over_chi / denom
        })
        .collect();

    let mean_wait: Vec<f64> = (0..n)
        .map(|i| {
            let ai = qs[i].arrivals.a;
            let rho_i = ai * qs[i].service.p;
            let batch = (qs[i].arrivals.b2 - qs[i].arrivals.b) / (2.0 * ai * qs[i].arrivals.b);
            mean_queue_len[i] / (ai * prob_nonempty[i]) - (1.0 - rho_i) / ai - batch
        })
        .collect();

    Ok(RpsSolution {
        mean_queue_len,
        prob_nonempty,
        mean_wait,
        rho,
    })
}

/// Mean packet sojourn times in the zero-switchover limit.
///
/// The limit is independent of the polling probabilities, so `gamma` and
/// the switchover entries of `params` are ignored.
pub fn mean_delay_zero_switchover(params: &RpsParams) -> Result<Vec<f64>> {
    let (_, rho) = offered_load(params);
    if rho >= 1.0 {
        return Err(Error::Unstable { rho });
    }
    let one_less = 1.0 - rho;
    let qs = params.queues();
    let shared = csum(
        qs.iter()
            .map(|q| (q.service.p2 - q.service.p * q.service.p) * q.arrivals.a),
    ) / (2.0 * one_less);
    Ok(qs
        .iter()
        .map(|q| {
            let (a, e) = (q.arrivals.a, q.arrivals.e);
            shared
                + q.service.p / 2.0 * (1.0 + e / (a * one_less))
                + e / (2.0 * a) * (e / a - q.arrivals.b2 / q.arrivals.b)
        })
        .collect())
}

/// Convergence record of the switchover limit.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub epsilons: Vec<f64>,
    /// gaps[k][i]: |E[W_i](eps_k) - E[W0_i]|
    pub gaps: Vec<Vec<f64>>,
    /// The zero-switchover delays the sequence approaches.
    pub limit: Vec<f64>,
    /// True when every queue's gap is nonincreasing along the sequence.
    pub monotone: bool,
}

/// Evaluates the general solution at constant switchover `eps` for each
/// entry of `epsilons` and reports the gap to the zero-switchover limit.
pub fn switchover_limit_check(params: &RpsParams, epsilons: &[f64]) -> Result<ConvergenceReport> {
    if epsilons.is_empty() {
        return Err(Error::Config("need at least one epsilon".into()));
    }
    if epsilons.iter().any(|e| !(*e > 0.0)) {
        return Err(Error::Config("epsilons must be positive".into()));
    }
    if epsilons.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Config("epsilons must be strictly decreasing".into()));
    }
    let limit = mean_delay_zero_switchover(params)?;
    let mut gaps: Vec<Vec<f64>> = Vec::with_capacity(epsilons.len());
    for &eps in epsilons {
        let sol = mean_wait_nonzero_switchover(&params.with_constant_switchover(eps)?)?;
        gaps.push(
            sol.mean_wait
                .iter()
                .zip(&limit)
                .map(|(w, w0)| (w - w0).abs())
                .collect(),
        );
    }
    let monotone = (1..gaps.len()).all(|k| {
        gaps[k]
            .iter()
            .zip(&gaps[k - 1])
            .all(|(cur, prev)| cur <= prev)
    });
    Ok(ConvergenceReport {
        epsilons: epsilons.to_vec(),
        gaps,
        limit,
        monotone,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_batch_queue(lambda: f64, p: f64, p2: f64) -> RpsQueue {
        RpsQueue {
            arrivals: QueueMoments::from_batch_poisson(lambda, 1.0, 1.0).unwrap(),
            service: ServiceMoments::new(p, p2).unwrap(),
        }
    }

    #[test]
    fn batch_poisson_examples() {
        assert_eq!(batch_poisson_moments(10.0, 1.0, 1.0).unwrap(), (10.0, 10.0));
        assert_eq!(batch_poisson_moments(5.0, 2.0, 5.0).unwrap(), (10.0, 25.0));
        let (a, e) = batch_poisson_moments(10.0, 0.75, 1.125).unwrap();
        assert!((a - 7.5).abs() < 1e-15 && (e - 11.25).abs() < 1e-15);
    }

    #[test]
    fn batch_second_moment_below_square_rejected() {
        assert!(matches!(
            batch_poisson_moments(5.0, 2.0, 3.9),
            Err(Error::InvalidDistribution(_))
        ));
    }

    #[test]
    fn offered_load_table_values() {
        // four queues at a=10, p = 0.75/70 -> rho = 30/70
        let queues = vec![unit_batch_queue(10.0, 0.75 / 70.0, (0.75 / 70.0) * (0.75 / 70.0)); 4];
        let params = RpsParams::uniform_polling(queues).unwrap();
        let (per, rho) = offered_load(&params);
        assert!((rho - 30.0 / 70.0).abs() < 1e-12);
        assert!(per.iter().all(|r| (r - 7.5 / 70.0).abs() < 1e-12));

        let queues = vec![unit_batch_queue(16.7, 0.75 / 70.0, (0.75 / 70.0) * (0.75 / 70.0)); 4];
        let params = RpsParams::uniform_polling(queues).unwrap();
        let (_, rho) = offered_load(&params);
        assert!((rho - 16.7 * 4.0 * 0.75 / 70.0).abs() < 1e-12);
        assert!((rho - 0.7157).abs() < 1e-3);
    }

    #[test]
    fn offered_load_vanishes_with_rate() {
        let queues = vec![unit_batch_queue(1e-9, 0.01, 1e-4)];
        let params = RpsParams::uniform_polling(queues).unwrap();
        let (_, rho) = offered_load(&params);
        assert!(rho < 1e-10);
    }

    #[test]
    fn constructor_rejects_unstable_load() {
        let queues = vec![unit_batch_queue(100.0, 0.02, 0.02 * 0.02)];
        match RpsParams::uniform_polling(queues) {
            Err(Error::Unstable { rho }) => assert!(rho >= 1.0),
            other => panic!("expected instability, got {other:?}"),
        }
    }

    #[test]
    fn constructor_rejects_bad_gamma() {
        let q = unit_batch_queue(1.0, 0.01, 1e-4);
        assert!(RpsParams::new(
            vec![q; 2],
            vec![0.7, 0.7],
            vec![Switchover::ZERO; 2]
        )
        .is_err());
        assert!(RpsParams::new(
            vec![q; 2],
            vec![1.2, -0.2],
            vec![Switchover::ZERO; 2]
        )
        .is_err());
    }

    #[test]
    fn intermediates_symmetric_system() {
        let q = unit_batch_queue(5.0, 0.02, 5e-4);
        let params = RpsParams::new(
            vec![q; 2],
            vec![0.5, 0.5],
            vec![Switchover::constant(0.001); 2],
        )
        .unwrap();
        let inter = rps_intermediates(&params).unwrap();
        assert!((inter.chi[0] - inter.chi[1]).abs() < 1e-15);
        assert!((inter.psi[0] - inter.psi[1]).abs() < 1e-12);
        assert!((inter.nabla[0][1] - inter.nabla[1][0]).abs() < 1e-12);
        assert!((inter.nabla[0][0] - inter.nabla[1][1]).abs() < 1e-12);
    }

    #[test]
    fn chi_tends_to_one_as_switchover_vanishes() {
        let q = unit_batch_queue(5.0, 0.02, 5e-4);
        let params = RpsParams::new(
            vec![q; 2],
            vec![0.5, 0.5],
            vec![Switchover::constant(1e-9); 2],
        )
        .unwrap();
        let inter = rps_intermediates(&params).unwrap();
        for c in &inter.chi {
            assert!((c - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn intermediates_require_positive_switchover() {
        let q = unit_batch_queue(5.0, 0.02, 5e-4);
        let params = RpsParams::uniform_polling(vec![q; 2]).unwrap();
        assert!(matches!(
            rps_intermediates(&params),
            Err(Error::ModelOutOfRange(_))
        ));
    }

    #[test]
    fn symmetric_waits_equal() {
        let q = unit_batch_queue(4.0, 0.03, 1.2e-3);
        let params = RpsParams::new(
            vec![q; 3],
            vec![1.0 / 3.0; 3],
            vec![Switchover::constant(0.002); 3],
        )
        .unwrap();
        let sol = mean_wait_nonzero_switchover(&params).unwrap();
        assert!((sol.mean_wait[0] - sol.mean_wait[1]).abs() < 1e-12);
        assert!((sol.mean_wait[1] - sol.mean_wait[2]).abs() < 1e-12);
        assert!(sol.prob_nonempty.iter().all(|p| (0.0..=1.0).contains(p)));
    }

    #[test]
    fn oversized_switchover_is_out_of_range() {
        let q = unit_batch_queue(5.0, 0.05, 0.05 * 0.05);
        let params = RpsParams::new(
            vec![q; 2],
            vec![0.5, 0.5],
            vec![Switchover::constant(0.2); 2],
        )
        .unwrap();
        assert!(matches!(
            mean_wait_nonzero_switchover(&params),
            Err(Error::ModelOutOfRange(_))
        ));
    }

    #[test]
    fn epsilon_sequence_converges_geometrically() {
        let queues = vec![
            unit_batch_queue(8.0, 0.03, 1.1e-3),
            RpsQueue {
                arrivals: QueueMoments::from_batch_poisson(3.0, 2.0, 5.0).unwrap(),
                service: ServiceMoments::new(0.05, 2.6e-3).unwrap(),
            },
        ];
        let params = RpsParams::new(
            queues,
            vec![0.6, 0.4],
            vec![Switchover::ZERO; 2],
        )
        .unwrap();
        let eps: Vec<f64> = (2..=7).map(|k| 10f64.powi(-k)).collect();
        let report = switchover_limit_check(&params, &eps).unwrap();
        assert!(report.monotone);
        // successive gaps shrink by roughly the epsilon ratio
        for i in 0..report.gaps.len() - 1 {
            for q in 0..2 {
                assert!(report.gaps[i + 1][q] < 0.2 * report.gaps[i][q]);
            }
        }
        // final gap essentially at the limit
        for q in 0..2 {
            assert!(report.gaps.last().unwrap()[q] / report.limit[q] < 1e-4);
        }
    }

    #[test]
    fn zero_switchover_reduces_to_pollaczek_khinchine() {
        // single queue, unit batches: E[W0] = lam*p2/(2(1-rho)) + p
        let (lambda, p, p2) = (12.0, 0.05, 4e-3);
        let params = RpsParams::uniform_polling(vec![unit_batch_queue(lambda, p, p2)]).unwrap();
        let w = mean_delay_zero_switchover(&params).unwrap()[0];
        let rho = lambda * p;
        let pk = lambda * p2 / (2.0 * (1.0 - rho)) + p;
        assert!((w - pk).abs() / pk < 1e-14);
    }

    #[test]
    fn empty_system_delay_is_service_time() {
        let p = 0.0123;
        let params =
            RpsParams::uniform_polling(vec![unit_batch_queue(1e-9, p, p * p)]).unwrap();
        let w = mean_delay_zero_switchover(&params).unwrap()[0];
        assert!((w - p).abs() / p < 1e-6);
    }

    #[test]
    fn limit_check_rejects_bad_sequences() {
        let params =
            RpsParams::uniform_polling(vec![unit_batch_queue(5.0, 0.02, 4e-4)]).unwrap();
        assert!(switchover_limit_check(&params, &[]).is_err());
        assert!(switchover_limit_check(&params, &[1e-3, 1e-2]).is_err());
        assert!(switchover_limit_check(&params, &[1e-3, -1.0]).is_err());
    }
}
