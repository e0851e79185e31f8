//! Jackson-network delay model.
//!
//! Every edge is an M/M/1 queue with service rate `c_v mu_v` and arrival
//! rate `(F lambda)_v`, so a single hop's sojourn is exponential with rate
//! equal to the stability gap. [`simulate`] checks this empirically.

mod sim;
mod stats;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::topology::NetworkMatrices;

pub use sim::{simulate, write_delay_csv, DelaySample, SimOptions, SimReport, Splitting};
pub use stats::{empirical_cdf_at, ks_distance_exponential, mean, std_dev};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QueueSpec {
    pub edge: usize,
    /// `c_v mu_v`, packets/second.
    pub service_rate: f64,
    /// `(F lambda)_v`, packets/second.
    pub arrival_rate: f64,
}

impl QueueSpec {
    pub fn gap(&self) -> f64 {
        self.service_rate - self.arrival_rate
    }

    pub fn utilization(&self) -> f64 {
        self.arrival_rate / self.service_rate
    }

    pub fn check_stable(&self) -> Result<()> {
        if self.arrival_rate < 0.0 || !(self.service_rate > self.arrival_rate) {
            return Err(Error::UnstableQueue {
                edge: self.edge,
                service: self.service_rate,
                arrival: self.arrival_rate,
            });
        }
        Ok(())
    }
}

/// One queue per edge at the operating point `(lambda, mu)`.
pub fn queue_specs(matrices: &NetworkMatrices, lambda: &[f64], mu: &[f64]) -> Vec<QueueSpec> {
    let arrivals = matrices.arrivals(lambda);
    (0..matrices.num_edges())
        .map(|v| QueueSpec {
            edge: v,
            service_rate: matrices.capacity()[v] * mu[v],
            arrival_rate: arrivals[v],
        })
        .collect()
}

/// `P[sojourn <= d] = 1 - exp(-(service - arrival) d)`.
pub fn hop_delay_cdf(spec: &QueueSpec, d: f64) -> Result<f64> {
    spec.check_stable()?;
    if d <= 0.0 {
        return Ok(0.0);
    }
    Ok(-(-spec.gap() * d).exp_m1())
}

/// CDF of `h_m` times the largest per-hop sojourn on a route, at `d`.
pub fn route_max_delay_cdf(route: &[QueueSpec], h_m: usize, d: f64) -> Result<f64> {
    let mut p = 1.0;
    for s in route {
        p *= hop_delay_cdf(s, d / h_m as f64)?;
    }
    Ok(p)
}

/// `sum_route ln(1 - exp(-gap delta / h_m))`; the latency constraint holds
/// iff this is at least `ln eta`.
pub fn latency_constraint_lhs(route: &[QueueSpec], h_m: usize, delta: f64) -> Result<f64> {
    for s in route {
        s.check_stable()?;
    }
    let gaps: Vec<f64> = route.iter().map(QueueSpec::gap).collect();
    Ok(latency_constraint_lhs_raw(&gaps, h_m, delta))
}

/// As [`latency_constraint_lhs`] from bare stability gaps; `-inf` if any gap
/// is not positive.
pub fn latency_constraint_lhs_raw(gaps: &[f64], h_m: usize, delta: f64) -> f64 {
    gaps.iter()
        .map(|&g| {
            if g > 0.0 {
                log1m_exp(g * delta / h_m as f64)
            } else {
                f64::NEG_INFINITY
            }
        })
        .sum()
}

/// `ln(1 - exp(-x))` for `x > 0`, accurate at both ends.
pub(crate) fn log1m_exp(x: f64) -> f64 {
    if x > std::f64::consts::LN_2 {
        (-(-x).exp()).ln_1p()
    } else {
        (-(-x).exp_m1()).ln()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(gap: f64) -> QueueSpec {
        QueueSpec {
            edge: 0,
            service_rate: 100.0 + gap,
            arrival_rate: 100.0,
        }
    }

    #[test]
    fn hop_cdf_values() {
        assert_eq!(hop_delay_cdf(&spec(100.0), 0.0).unwrap(), 0.0);
        let p = hop_delay_cdf(&spec(100.0), 0.01).unwrap();
        assert!((p - (1.0 - (-1.0f64).exp())).abs() < 1e-15);
        assert!((p - 0.63212).abs() < 1e-5);
        assert!((hop_delay_cdf(&spec(100.0), 1e3).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn unstable_queue_is_rejected() {
        let s = QueueSpec {
            edge: 3,
            service_rate: 50.0,
            arrival_rate: 50.0,
        };
        assert!(matches!(
            hop_delay_cdf(&s, 1.0),
            Err(Error::UnstableQueue { edge: 3, .. })
        ));
        assert!(latency_constraint_lhs(&[s], 1, 1.0).is_err());
    }

    #[test]
    fn route_cdf_cases() {
        let s = spec(80.0);
        let single = route_max_delay_cdf(&[s], 1, 0.02).unwrap();
        assert_eq!(single, hop_delay_cdf(&s, 0.02).unwrap());
        let d = 0.03;
        let two = route_max_delay_cdf(&[s, s], 2, d).unwrap();
        assert!((two - (1.0 - (-80.0 * d / 2.0f64).exp()).powi(2)).abs() < 1e-15);
        let route = [spec(20.0), spec(300.0), spec(45.0)];
        let p = route_max_delay_cdf(&route, 3, d).unwrap();
        for r in &route {
            assert!(p <= hop_delay_cdf(r, d / 3.0).unwrap());
        }
    }

    #[test]
    fn latency_lhs_at_threshold() {
        let delta = 0.01;
        let s = spec(10f64.ln() / delta);
        let lhs = latency_constraint_lhs(&[s], 1, delta).unwrap();
        assert!((lhs - 0.9f64.ln()).abs() < 1e-14);
        assert!(latency_constraint_lhs(&[spec(1e9)], 1, delta).unwrap().abs() < 1e-300);
        assert_eq!(latency_constraint_lhs_raw(&[0.0], 1, delta), f64::NEG_INFINITY);
    }

    #[test]
    fn log1m_exp_is_accurate() {
        for x in [1e-3f64, 0.3, 0.7, 1.0, 5.0] {
            let naive = (1.0 - (-x).exp()).ln();
            assert!((log1m_exp(x) - naive).abs() <= 1e-9 * naive.abs().max(1e-12));
        }
        assert!((log1m_exp(50.0) + (-50.0f64).exp()).abs() < 1e-30);
    }
}
