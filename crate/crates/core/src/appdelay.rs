//! Closed-form application-level mean delay for the two packet-size
//! regimes: bounded above by the MTU and bounded below by it.
//!
//! Both regimes reduce to the zero-switchover polling system of [`crate::rps`]
//! served at a fixed rate: one MTU takes `1/C` seconds where `C` is the
//! cell's capacity in MTU-sized packets per second.

use serde::{Deserialize, Serialize};

use crate::dist::{normalized_moments, PacketLengthDist};
use crate::error::{Error, Result};
use crate::numeric::csum;
use crate::rps::{self, QueueMoments, RpsParams, RpsQueue, ServiceMoments};

/// Which side of the MTU the packet-length law lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    SubMtu,
    SuperMtu,
}

/// One node's traffic description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeSpec {
    /// Application-packet arrival rate (packets/s).
    pub lambda: f64,
    /// Packet-length distribution.
    pub length: PacketLengthDist,
}

/// A single-cell workload: per-node traffic, the MTU, and the channel
/// capacity the polling server runs at.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub nodes: Vec<NodeSpec>,
    pub mtu_bytes: u32,
    /// Channel capacity in MTU-sized packets per second (measured or
    /// computed; see [`crate::mac::aggregate_capacity`]).
    pub capacity_pkts_per_s: f64,
    pub regime: Regime,
}

/// Closed-form per-node delays.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticDelays {
    /// Mean application-packet delay per node, seconds.
    pub per_node_s: Vec<f64>,
    /// Mean fragment delay per node (super-MTU regime only).
    pub fragment_delay_s: Option<Vec<f64>>,
    /// Server cycle-time estimate w_i = d_i - P/C (super-MTU regime only).
    pub cycle_time_s: Option<Vec<f64>>,
    pub rho: f64,
}

/// How to read the second moment of the normalized length in the super-MTU
/// formulas.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OmegaConvention {
    /// Use E[Omega^2] of the configured distribution.
    #[default]
    Literal,
    /// Substitute omega^2 for E[Omega^2], i.e. treat the batch size as
    /// deterministic at its mean.
    MeanSquared,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if self.nodes.is_empty() {
            return Err(Error::InvalidParameter(
                "scenario needs at least one node".into(),
            ));
        }
        if self.mtu_bytes == 0 {
            return Err(Error::InvalidParameter("MTU must be positive".into()));
        }
        if !(self.capacity_pkts_per_s > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "capacity must be positive, got {}",
                self.capacity_pkts_per_s
            )));
        }
        let mtu = self.mtu_bytes as f64;
        for (i, node) in self.nodes.iter().enumerate() {
            if !(node.lambda > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "nodes[{i}].lambda must be positive, got {}",
                    node.lambda
                )));
            }
            node.length.validate()?;
            if let Some((lo, hi)) = node.length.bounded_support() {
                match self.regime {
                    Regime::SubMtu if hi > mtu && !node.length.truncate_at_mtu => {
                        return Err(Error::InvalidParameter(format!(
                            "nodes[{i}]: length support reaches {hi} B, above the \
                             {mtu} B MTU, but the regime is sub_mtu"
                        )));
                    }
                    Regime::SuperMtu if lo < mtu => {
                        return Err(Error::InvalidParameter(format!(
                            "nodes[{i}]: length support starts at {lo} B, below the \
                             {mtu} B MTU, but the regime is super_mtu"
                        )));
                    }
                    _ => {}
                }
            }
        }
        let rho = self.rho()?;
        if rho >= 1.0 {
            return Err(Error::Unstable { rho });
        }
        Ok(())
    }

    /// Service time of one MTU, P/C in seconds.
    pub fn mtu_service_s(&self) -> f64 {
        1.0 / self.capacity_pkts_per_s
    }

    /// Normalized length moments per node.
    pub fn node_moments(&self) -> Result<Vec<crate::dist::NormalizedMoments>> {
        self.nodes
            .iter()
            .map(|n| normalized_moments(&n.length, self.mtu_bytes))
            .collect()
    }

    /// Offered load rho = sum_i lambda_i omega_i / C.
    pub fn rho(&self) -> Result<f64> {
        let moments = self.node_moments()?;
        Ok(csum(
            self.nodes
                .iter()
                .zip(&moments)
                .map(|(n, m)| n.lambda * m.omega / self.capacity_pkts_per_s),
        ))
    }

    /// A copy with every node's arrival rate replaced.
    pub fn with_lambdas(&self, lambdas: &[f64]) -> Result<Scenario> {
        if lambdas.len() != self.nodes.len() {
            return Err(Error::Config(format!(
                "expected {} arrival rates, got {}",
                self.nodes.len(),
                lambdas.len()
            )));
        }
        let mut out = self.clone();
        for (node, l) in out.nodes.iter_mut().zip(lambdas) {
            node.lambda = *l;
        }
        Ok(out)
    }

    /// The polling-system parameters this scenario maps to.
    pub(crate) fn rps_params(&self, convention: OmegaConvention) -> Result<RpsParams> {
        let moments = self.node_moments()?;
        let unit = self.mtu_service_s();
        let queues: Result<Vec<RpsQueue>> = self
            .nodes
            .iter()
            .zip(&moments)
            .map(|(node, m)| {
                let omega2 = match convention {
                    OmegaConvention::Literal => m.omega2,
                    OmegaConvention::MeanSquared => m.omega * m.omega,
                };
                let (arrivals, service) = match self.regime {
                    // one customer per packet, service scales with length
                    Regime::SubMtu => (
                        QueueMoments::from_batch_poisson(node.lambda, 1.0, 1.0)?,
                        ServiceMoments::new(m.omega * unit, omega2 * unit * unit)?,
                    ),
                    // one batch of omega MTU-units per packet, constant service
                    Regime::SuperMtu => (
                        QueueMoments::from_batch_poisson(node.lambda, m.omega, omega2)?,
                        ServiceMoments::new(unit, unit * unit)?,
                    ),
                };
                Ok(RpsQueue { arrivals, service })
            })
            .collect();
        RpsParams::uniform_polling(queues?)
    }
}

/// Mean packet delay when lengths stay at or below the MTU.
pub fn mean_delay_sub_mtu(scenario: &Scenario) -> Result<AnalyticDelays> {
    if scenario.regime != Regime::SubMtu {
        return Err(Error::Config("scenario regime is not sub_mtu".into()));
    }
    scenario.validate()?;
    let params = scenario.rps_params(OmegaConvention::Literal)?;
    let per_node_s = rps::mean_delay_zero_switchover(&params)?;
    let (_, rho) = rps::offered_load(&params);
    Ok(AnalyticDelays {
        per_node_s,
        fragment_delay_s: None,
        cycle_time_s: None,
        rho,
    })
}

/// Mean delay of a single fragment in the super-MTU regime.
pub fn fragment_delay(scenario: &Scenario) -> Result<Vec<f64>> {
    fragment_delay_with(scenario, OmegaConvention::Literal)
}

fn fragment_delay_with(
    scenario: &Scenario,
    convention: OmegaConvention,
) -> Result<Vec<f64>> {
    if scenario.regime != Regime::SuperMtu {
        return Err(Error::Config("scenario regime is not super_mtu".into()));
    }
    scenario.validate()?;
    let params = scenario.rps_params(convention)?;
    rps::mean_delay_zero_switchover(&params)
}

/// Super-MTU per-packet delay as a plain function of the normalized length
/// moments, the MTU service time, and the offered load.
pub fn super_mtu_delay_at(omega: f64, omega2: f64, mtu_service_s: f64, rho: f64) -> f64 {
    mtu_service_s / 4.0 * (3.0 - omega + omega2 * (1.0 + omega) / (omega * (1.0 - rho)))
}

/// Mean packet delay when lengths start at the MTU and packets are
/// fragmented on air.
pub fn mean_delay_super_mtu(scenario: &Scenario) -> Result<AnalyticDelays> {
    mean_delay_super_mtu_with(scenario, OmegaConvention::Literal)
}

/// Same as [`mean_delay_super_mtu`] with an explicit second-moment
/// convention (see [`OmegaConvention`]).
pub fn mean_delay_super_mtu_with(
    scenario: &Scenario,
    convention: OmegaConvention,
) -> Result<AnalyticDelays> {
    let fragment = fragment_delay_with(scenario, convention)?;
    let moments = scenario.node_moments()?;
    let unit = scenario.mtu_service_s();
    let rho = scenario.rho()?;
    let per_node_s: Vec<f64> = moments
        .iter()
        .map(|m| {
            let omega2 = match convention {
                OmegaConvention::Literal => m.omega2,
                OmegaConvention::MeanSquared => m.omega * m.omega,
            };
            super_mtu_delay_at(m.omega, omega2, unit, rho)
        })
        .collect();
    let cycle_time_s = fragment.iter().map(|d| d - unit).collect();
    Ok(AnalyticDelays {
        per_node_s,
        fragment_delay_s: Some(fragment),
        cycle_time_s: Some(cycle_time_s),
        rho,
    })
}

/// Dispatches on the scenario's regime.
pub fn analytic_delays(scenario: &Scenario) -> Result<AnalyticDelays> {
    match scenario.regime {
        Regime::SubMtu => mean_delay_sub_mtu(scenario),
        Regime::SuperMtu => mean_delay_super_mtu(scenario),
    }
}
