//! Latency-constrained resource allocation.
//!
//! Two problems share the constraint set `0 <= mu <= 1`, `G mu <= 1` and a
//! per-UE delivery requirement:
//!
//! * the minimum-feasible-delay LP over `(t, mu)` at a fixed per-UE rate,
//!   whose optimum `t*` gives the smallest delay `-ln(1 - eta) / t*`;
//! * utility maximization over `(lambda, mu)` with the end-to-end latency
//!   constraint `sum_route ln(1 - exp(-(c mu - F lambda) delta / h)) >= ln eta`.

mod barrier;
mod min_delay;
pub mod simplex;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::queueing::latency_constraint_lhs_raw;
use crate::topology::NetworkMatrices;

pub use barrier::{solve_utility_max, solve_utility_max_with, BarrierOptions};
pub(crate) use min_delay::infeasibility_margin;
pub use min_delay::{
    closed_form_t_star, min_feasible_delay, rate_margin_lp, solve_min_delay_lp, solve_min_delay_lp_with, ClosedForm,
    LpOptions, RateMargin,
};

/// Per-UE utility `U(lambda)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Utility {
    #[default]
    Log,
    Linear,
    /// `lambda^(1 - alpha) / (1 - alpha)`; `alpha = 1` is `Log`.
    AlphaFair(f64),
}

impl Utility {
    pub fn value(&self, lambda: f64) -> f64 {
        match *self {
            Utility::Log => lambda.ln(),
            Utility::Linear => lambda,
            Utility::AlphaFair(1.0) => lambda.ln(),
            Utility::AlphaFair(a) => lambda.powf(1.0 - a) / (1.0 - a),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Utility::AlphaFair(a) if !(a.is_finite() && a >= 0.0) => Err(Error::InvalidParameter(format!(
                "alpha-fair exponent must be finite and >= 0, got {a}"
            ))),
            _ => Ok(()),
        }
    }
}

/// The QoS half of a problem: a delay threshold (utility problem) or a
/// per-UE minimum rate (minimum-delay problem).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Requirement {
    Delay { delta_s: f64 },
    MinRate { lambda_min_pps: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    pub matrices: NetworkMatrices,
    pub eta: f64,
    pub requirement: Requirement,
    pub utility: Utility,
}

impl ProblemInstance {
    pub fn min_delay(matrices: NetworkMatrices, eta: f64, lambda_min_pps: f64) -> Result<Self> {
        let p = ProblemInstance {
            matrices,
            eta,
            requirement: Requirement::MinRate { lambda_min_pps },
            utility: Utility::Log,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn utility(matrices: NetworkMatrices, eta: f64, delta_s: f64, utility: Utility) -> Result<Self> {
        let p = ProblemInstance {
            matrices,
            eta,
            requirement: Requirement::Delay { delta_s },
            utility,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "eta must lie in (0, 1), got {}",
                self.eta
            )));
        }
        if self.matrices.num_ues() == 0 {
            return Err(Error::InvalidMatrices("network has no UEs".into()));
        }
        match self.requirement {
            Requirement::Delay { delta_s } if !(delta_s > 0.0 && delta_s.is_finite()) => Err(Error::InvalidParameter(
                format!("delay threshold must be positive, got {delta_s}"),
            )),
            Requirement::MinRate { lambda_min_pps } if !(lambda_min_pps >= 0.0 && lambda_min_pps.is_finite()) => Err(
                Error::InvalidParameter(format!("minimum rate must be >= 0, got {lambda_min_pps}")),
            ),
            _ => self.utility.validate(),
        }
    }

    pub fn delta_s(&self) -> Result<f64> {
        match self.requirement {
            Requirement::Delay { delta_s } => Ok(delta_s),
            _ => Err(Error::InvalidParameter("instance has no delay threshold".into())),
        }
    }

    pub fn lambda_min(&self) -> Result<f64> {
        match self.requirement {
            Requirement::MinRate { lambda_min_pps } => Ok(lambda_min_pps),
            _ => Err(Error::InvalidParameter("instance has no minimum rate".into())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Optimal,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub status: Status,
    pub t_star: Option<f64>,
    pub delta_star_s: Option<f64>,
    pub lambda: Vec<f64>,
    pub mu: Vec<f64>,
    pub objective: f64,
    pub kkt_residual: f64,
    pub bottleneck_bs: Option<usize>,
}

impl Solution {
    pub fn is_optimal(&self) -> bool {
        self.status == Status::Optimal
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("solution serializes")
    }
}

/// Worst violations of the problem constraints at a point, in the units of
/// each constraint (positive means violated).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConstraintReport {
    /// Bounds `0 <= mu <= 1` and `lambda >= 0`.
    pub bounds: f64,
    /// `G mu <= 1`.
    pub scheduling: f64,
    /// Smallest stability gap `c mu - F lambda` (must be positive).
    pub min_gap: f64,
    /// `ln eta - lhs` of the worst UE latency constraint.
    pub latency: f64,
}

impl ConstraintReport {
    pub fn max_violation(&self) -> f64 {
        self.bounds.max(self.scheduling).max(self.latency).max(0.0)
    }

    pub fn is_feasible(&self, tol: f64) -> bool {
        self.min_gap > 0.0 && self.max_violation() <= tol
    }
}

/// Evaluate every constraint of the utility problem at `(lambda, mu)`.
pub fn check_constraints(
    matrices: &NetworkMatrices,
    eta: f64,
    delta_s: f64,
    lambda: &[f64],
    mu: &[f64],
) -> ConstraintReport {
    let mut bounds: f64 = 0.0;
    for &m in mu {
        bounds = bounds.max(-m).max(m - 1.0);
    }
    for &l in lambda {
        bounds = bounds.max(-l);
    }
    let g = matrices.scheduling();
    let scheduling = (0..g.nrows())
        .map(|k| (0..mu.len()).map(|v| g[(k, v)] * mu[v]).sum::<f64>() - 1.0)
        .fold(f64::NEG_INFINITY, f64::max);
    let arrivals = matrices.arrivals(lambda);
    let gaps: Vec<f64> = (0..mu.len())
        .map(|v| matrices.capacity()[v] * mu[v] - arrivals[v])
        .collect();
    let min_gap = (0..gaps.len())
        .filter(|v| matrices.max_hops()[*v] > 0)
        .map(|v| gaps[v])
        .fold(f64::INFINITY, f64::min);
    let mut latency = f64::NEG_INFINITY;
    for (m, route) in matrices.routes().iter().enumerate() {
        let route_gaps: Vec<f64> = route.iter().map(|&v| gaps[v]).collect();
        let lhs = latency_constraint_lhs_raw(&route_gaps, matrices.hops()[m], delta_s);
        latency = latency.max(eta.ln() - lhs);
    }
    ConstraintReport {
        bounds,
        scheduling,
        min_gap,
        latency,
    }
}
