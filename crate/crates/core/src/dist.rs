//! Packet-length distributions, arrival sampling, and the normalized
//! moments used by the delay formulas.

use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::csum;

/// One support point of an empirical length distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LengthPoint {
    pub bytes: f64,
    pub weight: f64,
}

/// Packet-length law, in bytes.
///
/// `Uniform` is half-open `[lo, hi)`. `Exp` is never clipped at the MTU
/// unless `truncate_at_mtu` is set on the wrapper; the reported moments of a
/// truncated law account for the point mass at the MTU.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LengthLaw {
    Det { bytes: f64 },
    Uniform { lo: f64, hi: f64 },
    Exp { mean: f64 },
    Empirical { points: Vec<LengthPoint> },
}

/// A packet-length distribution plus the optional MTU clipping switch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PacketLengthDist {
    #[serde(flatten)]
    pub law: LengthLaw,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub truncate_at_mtu: bool,
}

/// First two moments of the MTU-normalized packet length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizedMoments {
    /// omega = E[P_i] / P_mtu
    pub omega: f64,
    /// omega2 = E[P_i^2] / P_mtu^2
    pub omega2: f64,
}

impl PacketLengthDist {
    pub fn det(bytes: f64) -> Self {
        LengthLaw::Det { bytes }.into()
    }

    pub fn uniform(lo: f64, hi: f64) -> Self {
        LengthLaw::Uniform { lo, hi }.into()
    }

    pub fn exp(mean: f64) -> Self {
        LengthLaw::Exp { mean }.into()
    }

    pub fn validate(&self) -> Result<()> {
        match &self.law {
            LengthLaw::Det { bytes } => {
                if !(*bytes > 0.0) {
                    return Err(Error::InvalidDistribution(format!(
                        "deterministic length must be positive, got {bytes}"
                    )));
                }
            }
            LengthLaw::Uniform { lo, hi } => {
                if !(*lo > 0.0) || !(hi > lo) {
                    return Err(Error::InvalidDistribution(format!(
                        "uniform bounds must satisfy 0 < lo < hi, got [{lo}, {hi})"
                    )));
                }
            }
            LengthLaw::Exp { mean } => {
                if !(*mean > 0.0) {
                    return Err(Error::InvalidDistribution(format!(
                        "exponential mean must be positive, got {mean}"
                    )));
                }
            }
            LengthLaw::Empirical { points } => {
                if points.is_empty() {
                    return Err(Error::InvalidDistribution(
                        "empirical distribution needs at least one point".into(),
                    ));
                }
                if points.iter().any(|p| !(p.bytes > 0.0) || !(p.weight > 0.0)) {
                    return Err(Error::InvalidDistribution(
                        "empirical points need positive bytes and weights".into(),
                    ));
                }
                let total = csum(points.iter().map(|p| p.weight));
                if (total - 1.0).abs() > 1e-9 {
                    return Err(Error::InvalidDistribution(format!(
                        "empirical weights must sum to 1, got {total}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Raw first and second moments in bytes, honoring `truncate_at_mtu`.
    pub fn raw_moments(&self, mtu_bytes: f64) -> (f64, f64) {
        let m = mtu_bytes;
        match (&self.law, self.truncate_at_mtu) {
            (LengthLaw::Det { bytes }, false) => (*bytes, bytes * bytes),
            (LengthLaw::Det { bytes }, true) => {
                let b = bytes.min(m);
                (b, b * b)
            }
            (LengthLaw::Uniform { lo, hi }, trunc) => {
                if !trunc || *hi <= m {
                    let mean = 0.5 * (lo + hi);
                    let var = (hi - lo) * (hi - lo) / 12.0;
                    (mean, var + mean * mean)
                } else if *lo >= m {
                    (m, m * m)
                } else {
                    // density part on [lo, m), point mass (hi-m)/(hi-lo) at m
                    let width = hi - lo;
                    let mass = (hi - m) / width;
                    let m1 = (m * m - lo * lo) / (2.0 * width) + m * mass;
                    let m2 = (m * m * m - lo * lo * lo) / (3.0 * width) + m * m * mass;
                    (m1, m2)
                }
            }
            (LengthLaw::Exp { mean }, false) => (*mean, 2.0 * mean * mean),
            (LengthLaw::Exp { mean }, true) => {
                // min(X, m) for X ~ Exp(mean): tail mass folded onto m
                let tail = (-m / mean).exp();
                let m1 = mean * (1.0 - tail);
                let m2 = 2.0 * mean * mean - tail * (2.0 * mean * m + 2.0 * mean * mean);
                (m1, m2)
            }
            (LengthLaw::Empirical { points }, trunc) => {
                let val = |b: f64| if trunc { b.min(m) } else { b };
                let m1 = csum(points.iter().map(|p| p.weight * val(p.bytes)));
                let m2 = csum(points.iter().map(|p| {
                    let v = val(p.bytes);
                    p.weight * v * v
                }));
                (m1, m2)
            }
        }
    }

    /// Hard support bounds, when the law has them. `Exp` returns `None`:
    /// its support is unbounded, so regime checks cannot reject it.
    pub fn bounded_support(&self) -> Option<(f64, f64)> {
        match &self.law {
            LengthLaw::Det { bytes } => Some((*bytes, *bytes)),
            LengthLaw::Uniform { lo, hi } => Some((*lo, *hi)),
            LengthLaw::Exp { .. } => None,
            LengthLaw::Empirical { points } => {
                let lo = points.iter().map(|p| p.bytes).fold(f64::INFINITY, f64::min);
                let hi = points
                    .iter()
                    .map(|p| p.bytes)
                    .fold(f64::NEG_INFINITY, f64::max);
                Some((lo, hi))
            }
        }
    }

    /// Draws one packet length in bytes.
    pub fn sample<R: Rng + ?Sized>(&self, mtu_bytes: f64, rng: &mut R) -> f64 {
        let raw = match &self.law {
            LengthLaw::Det { bytes } => *bytes,
            LengthLaw::Uniform { lo, hi } => rng.random_range(*lo..*hi),
            LengthLaw::Exp { mean } => Exp::new(1.0 / mean).expect("validated").sample(rng),
            LengthLaw::Empirical { points } => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                let mut chosen = points[points.len() - 1].bytes;
                for p in points {
                    acc += p.weight;
                    if u < acc {
                        chosen = p.bytes;
                        break;
                    }
                }
                chosen
            }
        };
        if self.truncate_at_mtu {
            raw.min(mtu_bytes)
        } else {
            raw
        }
    }
}

impl From<LengthLaw> for PacketLengthDist {
    fn from(law: LengthLaw) -> Self {
        PacketLengthDist {
            law,
            truncate_at_mtu: false,
        }
    }
}

/// MTU-normalized moments omega, omega2 of the packet length.
pub fn normalized_moments(dist: &PacketLengthDist, mtu_bytes: u32) -> Result<NormalizedMoments> {
    dist.validate()?;
    if mtu_bytes == 0 {
        return Err(Error::InvalidParameter("MTU must be positive".into()));
    }
    let p = mtu_bytes as f64;
    let (m1, m2) = dist.raw_moments(p);
    Ok(NormalizedMoments {
        omega: m1 / p,
        omega2: m2 / (p * p),
    })
}

/// Next inter-arrival gap of a Poisson process with rate `lambda`.
pub fn next_interarrival<R: Rng + ?Sized>(lambda: f64, rng: &mut R) -> f64 {
    debug_assert!(lambda > 0.0);
    Exp::new(lambda).expect("positive rate").sample(rng)
}
