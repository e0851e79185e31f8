//! Closed-form results for line networks and the general latency gain.
//!
//! A line network has a donor and `K` IAB nodes in a chain, each BS serving
//! `w` UEs, with backhaul capacity `R_b` and access capacity `R_a`. The
//! piecewise expressions here are evaluated as published; [`t_star_line_exact`]
//! and [`k_max_exact`] evaluate the general closed form on the actual
//! line-network matrices instead.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optimizer::{closed_form_t_star, min_feasible_delay};
use crate::topology::{line_network, DuplexMode, NetworkMatrices};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineNetworkParams {
    /// Number of IAB nodes.
    pub k: usize,
    /// UEs per BS.
    pub w: usize,
    /// Backhaul capacity, packets/second.
    pub r_b: f64,
    /// Access capacity, packets/second.
    pub r_a: f64,
    pub lambda_min: f64,
}

impl LineNetworkParams {
    pub fn validate(&self) -> Result<()> {
        if self.k < 1 || self.w < 1 {
            return Err(Error::InvalidParameter("need K >= 1 and w >= 1".into()));
        }
        if !(self.r_a > 0.0 && self.r_b > 0.0 && self.r_a.is_finite() && self.r_b.is_finite()) {
            return Err(Error::InvalidParameter("capacities must be positive".into()));
        }
        if !(self.lambda_min >= 0.0 && self.lambda_min.is_finite()) {
            return Err(Error::InvalidParameter("lambda_min must be >= 0".into()));
        }
        Ok(())
    }

    pub fn with_k(&self, k: usize) -> Self {
        LineNetworkParams { k, ..*self }
    }

    pub fn with_lambda(&self, lambda_min: f64) -> Self {
        LineNetworkParams { lambda_min, ..*self }
    }

    /// Matrices of the corresponding line network.
    pub fn matrices(&self, mode: DuplexMode) -> Result<NetworkMatrices> {
        NetworkMatrices::two_rate(&line_network(self.k, self.w), mode, self.r_b, self.r_a)
    }
}

/// Value of a piecewise `t*` expression and which branch produced it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineTStar {
    pub t_star: f64,
    /// 1 or 2, in the order the branches are written.
    pub branch: u8,
    pub feasible: bool,
}

/// Largest `lambda_min` for which the first branch applies.
pub fn branch_threshold(p: &LineNetworkParams, mode: DuplexMode) -> f64 {
    let (k, w, r) = (p.k as f64, p.w as f64, p.r_a / p.r_b);
    match mode {
        DuplexMode::HalfDuplex => p.r_a / (4.0 * (k + 1.0) * r * r + (2.0 * k + 3.0) * w * r + w),
        DuplexMode::FullDuplex => p.r_a / ((k + 1.0) * r * r + (k + 1.0) * w * r + w),
    }
}

fn line_branches(p: &LineNetworkParams, mode: DuplexMode, k: f64) -> (f64, f64) {
    let (w, lam, ra, rb) = (p.w as f64, p.lambda_min, p.r_a, p.r_b);
    match mode {
        DuplexMode::HalfDuplex => (
            (1.0 - w * lam * (3.0 / rb + 1.0 / ra)) / (2.0 * (k + 1.0) / rb + k * w / ra),
            (1.0 - w * lam * ((2.0 * k - 1.0) / rb + 1.0 / ra)) / (2.0 * (k + 1.0) / rb + 2.0 * w / ra),
        ),
        DuplexMode::FullDuplex => (
            (1.0 - w * lam * (1.0 / rb + 1.0 / ra)) / ((k + 1.0) / rb + k * w / ra),
            (1.0 - w * lam * (k / rb + 1.0 / ra)) / ((k + 1.0) / rb + w / ra),
        ),
    }
}

/// Two-branch line-network `t*`, branch chosen by `lambda_min`.
pub fn t_star_line(p: &LineNetworkParams, mode: DuplexMode) -> LineTStar {
    let (b1, b2) = line_branches(p, mode, p.k as f64);
    let (t_star, branch) = if p.lambda_min <= branch_threshold(p, mode) {
        (b1, 1)
    } else {
        (b2, 2)
    };
    LineTStar {
        t_star,
        branch,
        feasible: t_star > 0.0,
    }
}

/// The same expressions with the branch chosen by comparing a real-valued
/// `K` with the break point.
pub fn t_star_line_at(p: &LineNetworkParams, mode: DuplexMode, k: f64) -> LineTStar {
    let (b1, b2) = line_branches(p, mode, k);
    let (kappa_hd, kappa_fd) = break_points(p);
    let kappa = match mode {
        DuplexMode::HalfDuplex => kappa_hd,
        DuplexMode::FullDuplex => kappa_fd,
    };
    let (t_star, branch) = if k <= kappa { (b1, 1) } else { (b2, 2) };
    LineTStar {
        t_star,
        branch,
        feasible: t_star > 0.0,
    }
}

/// `t*` from the general closed form on the line network's matrices.
pub fn t_star_line_exact(p: &LineNetworkParams, mode: DuplexMode) -> Result<f64> {
    p.validate()?;
    Ok(closed_form_t_star(&p.matrices(mode)?, p.lambda_min).t_star)
}

/// Three-branch latency gain for a line network; `+inf` when the HD factor
/// of the active branch is not positive.
pub fn latency_gain_line(p: &LineNetworkParams) -> f64 {
    let (k, w, lam, ra, rb) = (p.k as f64, p.w as f64, p.lambda_min, p.r_a, p.r_b);
    let lambda1 = branch_threshold(p, DuplexMode::HalfDuplex);
    let lambda2 = branch_threshold(p, DuplexMode::FullDuplex);
    let fd_num = 1.0 - w * lam * (1.0 / rb + 1.0 / ra);
    let fd_den = (k + 1.0) / rb + k * w / ra;
    let (num, den) = if lam <= lambda1 {
        let hd = 1.0 - w * lam * (3.0 / rb + 1.0 / ra);
        (fd_num * (2.0 * (k + 1.0) / rb + k * w / ra), hd * fd_den)
    } else if lam <= lambda2 {
        let hd = 1.0 - w * lam * ((2.0 * k - 1.0) / rb + 1.0 / ra);
        (fd_num * (2.0 * (k + 1.0) / rb + 2.0 * w / ra), hd * fd_den)
    } else {
        let hd = 1.0 - w * lam * ((2.0 * k - 1.0) / rb + 1.0 / ra);
        (2.0 * (1.0 - w * lam * (k / rb + 1.0 / ra)), hd)
    };
    if den <= 0.0 {
        f64::INFINITY
    } else {
        num / den
    }
}

/// Break points `(kappa_HD, kappa_FD)` in `K` between the two branches.
pub fn break_points(p: &LineNetworkParams) -> (f64, f64) {
    let (w, r) = (p.w as f64, p.r_a / p.r_b);
    let x = p.r_a / p.lambda_min - w;
    let hd = (x - r * (4.0 * r + 3.0 * w)) / (2.0 * r * (2.0 * r + w));
    let fd = x / (r * (r + w)) - 1.0;
    (hd, fd)
}

/// `zeta = -ln(1 - eta) / delta`: the `t` needed to meet `delta`.
pub fn zeta(eta: f64, delta_s: f64) -> f64 {
    -(-eta).ln_1p() / delta_s
}

/// Floor expression for `K_max` as published; may be negative.
pub fn k_max_raw(p: &LineNetworkParams, delta_s: f64, eta: f64, mode: DuplexMode) -> i64 {
    let (w, lam, ra, rb) = (p.w as f64, p.lambda_min, p.r_a, p.r_b);
    let z = zeta(eta, delta_s);
    let (kappa_hd, kappa_fd) = break_points(p);
    let value = match mode {
        DuplexMode::HalfDuplex => {
            if z <= t_star_line_at(p, mode, kappa_hd).t_star {
                (1.0 - w * lam * (3.0 / rb + 1.0 / ra) - 2.0 * z / rb) / (2.0 * z * (2.0 / rb + w / ra))
            } else {
                (1.0 - w * lam * (1.0 / ra - 1.0 / rb) - 2.0 * z * (1.0 / rb + w / ra))
                    / (2.0 * z / rb + 2.0 * w * lam / rb)
            }
        }
        DuplexMode::FullDuplex => {
            if z <= t_star_line_at(p, mode, kappa_fd).t_star {
                (1.0 - w * lam * (1.0 / rb + 1.0 / ra) - z / rb) / (z * (1.0 / rb + w / ra))
            } else {
                (1.0 - w * lam / ra - z * (1.0 / rb + w / ra)) / (z / rb + w * lam / rb)
            }
        }
    };
    value.floor() as i64
}

/// `K_max` as published; `InfeasibleTarget` when it is below 1.
pub fn k_max(p: &LineNetworkParams, delta_s: f64, eta: f64, mode: DuplexMode) -> Result<usize> {
    match k_max_raw(p, delta_s, eta, mode) {
        k if k >= 1 => Ok(k as usize),
        _ => Err(Error::InfeasibleTarget),
    }
}

/// Largest `K` whose line network meets `delta_s`, by scanning the general
/// closed form. `InfeasibleTarget` if `K = 1` already fails.
pub fn k_max_exact(p: &LineNetworkParams, delta_s: f64, eta: f64, mode: DuplexMode, k_limit: usize) -> Result<usize> {
    let z = zeta(eta, delta_s);
    let mut k = 0;
    while k < k_limit && t_star_line_exact(&p.with_k(k + 1), mode)? >= z {
        k += 1;
    }
    if k == 0 {
        Err(Error::InfeasibleTarget)
    } else {
        Ok(k)
    }
}

/// Per-BS quotients `f(k)`, `k = 0..=K`, whose minimum is `t*`.
pub fn bottleneck_profile(p: &LineNetworkParams, mode: DuplexMode) -> Vec<f64> {
    let (kk, w, lam, ra, rb) = (p.k as f64, p.w as f64, p.lambda_min, p.r_a, p.r_b);
    (0..=p.k)
        .map(|k| {
            let kf = k as f64;
            match (mode, k) {
                (_, 0) => (1.0 - w * lam * (1.0 / ra + kk / rb)) / ((kk + 1.0) / rb + w / ra),
                (DuplexMode::HalfDuplex, k) if k == p.k => {
                    (1.0 - w * lam * (1.0 / ra + 1.0 / rb)) / ((kk + 1.0) / rb + w * (kk + 1.0) / ra)
                }
                (DuplexMode::HalfDuplex, _) => {
                    (1.0 - w * lam * (1.0 / ra + (2.0 * (kk - kf) + 1.0) / rb))
                        / (2.0 * (kk + 1.0) / rb + w * (kf + 1.0) / ra)
                }
                (DuplexMode::FullDuplex, k) if k == p.k => (1.0 - w * lam / ra) / (w * (kk + 1.0) / ra),
                (DuplexMode::FullDuplex, _) => {
                    (1.0 - w * lam * (1.0 / ra + (kk - kf) / rb)) / ((kk + 1.0) / rb + w * (kf + 1.0) / ra)
                }
            }
        })
        .collect()
}

/// Latency gain `t*_FD / t*_HD`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatencyGain {
    pub gain: f64,
    pub t_star_hd: f64,
    pub t_star_fd: f64,
    pub hd_feasible: bool,
    pub fd_feasible: bool,
}

impl LatencyGain {
    pub fn delta_star_hd(&self, eta: f64) -> Option<f64> {
        min_feasible_delay(self.t_star_hd, eta)
            .ok()
            .filter(|_| self.hd_feasible)
    }

    pub fn delta_star_fd(&self, eta: f64) -> Option<f64> {
        min_feasible_delay(self.t_star_fd, eta)
            .ok()
            .filter(|_| self.fd_feasible)
    }
}

/// `t*_FD / t*_HD` from the general closed form; `+inf` when only FD is
/// feasible.
pub fn latency_gain(hd: &NetworkMatrices, fd: &NetworkMatrices, lambda_min: f64) -> Result<LatencyGain> {
    if hd.routing() != fd.routing() || hd.max_hops() != fd.max_hops() {
        return Err(Error::InvalidMatrices("HD and FD instances must share F and h~".into()));
    }
    let h = closed_form_t_star(hd, lambda_min);
    let f = closed_form_t_star(fd, lambda_min);
    let gain = match (h.feasible, f.feasible) {
        (true, _) => f.t_star / h.t_star,
        (false, true) => f64::INFINITY,
        (false, false) => return Err(Error::BothInfeasible),
    };
    Ok(LatencyGain {
        gain,
        t_star_hd: h.t_star,
        t_star_fd: f.t_star,
        hd_feasible: h.feasible,
        fd_feasible: f.feasible,
    })
}
