use serde::{Deserialize, Serialize};

use super::simplex::{LinearProgram, Relation};
use super::{ProblemInstance, Solution, Status};
use crate::error::{Error, Result};
use crate::topology::NetworkMatrices;

/// Closed-form optimum of the minimum-delay LP.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosedForm {
    pub t_star: f64,
    /// Scheduling row achieving the minimum (smallest index on ties).
    pub bottleneck_bs: usize,
    pub feasible: bool,
}

/// `t* = min_k (1 - lambda_min G_k C^-1 F 1) / (G_k C^-1 h~)`.
///
/// Rows whose denominator vanishes carry no traffic and are skipped.
pub fn closed_form_t_star(m: &NetworkMatrices, lambda_min: f64) -> ClosedForm {
    let g = m.scheduling();
    let load = m.edge_load();
    let mut best: Option<(f64, usize)> = None;
    for k in 0..g.nrows() {
        let (mut num, mut den) = (0.0, 0.0);
        for v in 0..m.num_edges() {
            if g[(k, v)] != 0.0 {
                let c = m.capacity()[v];
                num += g[(k, v)] * load[v] / c;
                den += g[(k, v)] * m.max_hops()[v] as f64 / c;
            }
        }
        if den <= 0.0 {
            continue;
        }
        let t = (1.0 - lambda_min * num) / den;
        if best.is_none_or(|(b, _)| t < b) {
            best = Some((t, k));
        }
    }
    let (t_star, k) = best.expect("at least one scheduling row carries traffic");
    ClosedForm {
        t_star,
        bottleneck_bs: k,
        feasible: t_star > infeasibility_margin(m),
    }
}

/// `t <= eps` is treated as infeasible, with `eps = 1e-9 max(C)`.
pub(crate) fn infeasibility_margin(m: &NetworkMatrices) -> f64 {
    1e-9 * m.capacity().iter().fold(0.0f64, |a, b| a.max(*b))
}

/// `delta* = -ln(1 - eta) / t*`.
pub fn min_feasible_delay(t_star: f64, eta: f64) -> Result<f64> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::InvalidParameter(format!("eta must lie in (0, 1), got {eta}")));
    }
    if !(t_star > 0.0) {
        return Err(Error::InfeasibleRate { t_star });
    }
    Ok(-(-eta).ln_1p() / t_star)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LpOptions {
    /// Keep one latency row per edge (using h~) instead of one per (edge, UE).
    pub prune: bool,
}

impl Default for LpOptions {
    fn default() -> Self {
        LpOptions { prune: true }
    }
}

/// Raw LP optimum; `t` may be negative.
#[derive(Debug, Clone, PartialEq)]
pub struct RateMargin {
    pub t: f64,
    pub mu: Vec<f64>,
    /// Scheduling row with the largest shadow price.
    pub bottleneck_bs: usize,
    /// Largest constraint violation of the returned point.
    pub residual: f64,
}

/// Maximize `t` over `(t, mu)` with `lambda = lambda_min 1`:
/// `G mu <= 1`, `0 <= mu <= 1`, `c_v mu_v - lambda_min (F 1)_v >= t h_m` for
/// every edge `v` on the route of every UE `m`.
pub fn rate_margin_lp(m: &NetworkMatrices, lambda_min: f64, opts: &LpOptions) -> Result<RateMargin> {
    let n_e = m.num_edges();
    let mut lp = LinearProgram::new(1 + n_e);
    lp.set_bounds(0, f64::NEG_INFINITY, f64::INFINITY);
    lp.set_cost(0, -1.0);
    for v in 0..n_e {
        lp.set_bounds(1 + v, 0.0, 1.0);
    }
    let g = m.scheduling();
    let n_sched = g.nrows();
    for k in 0..n_sched {
        let row: Vec<(usize, f64)> = m.row_edges(k).iter().map(|&v| (1 + v, g[(k, v)])).collect();
        lp.add_row(&row, Relation::Le, 1.0);
    }
    let load = m.edge_load();
    let cap = m.capacity();
    if opts.prune {
        for v in 0..n_e {
            let h = m.max_hops()[v];
            if h > 0 {
                lp.add_row(&[(0, h as f64), (1 + v, -cap[v])], Relation::Le, -lambda_min * load[v]);
            }
        }
    } else {
        for (ue, route) in m.routes().iter().enumerate() {
            let h = m.hops()[ue] as f64;
            for &v in route {
                lp.add_row(&[(0, h), (1 + v, -cap[v])], Relation::Le, -lambda_min * load[v]);
            }
        }
    }
    let sol = lp.solve()?;
    // duals of <= rows in a minimization are <= 0; the bottleneck binds hardest
    let mut bottleneck = 0;
    for k in 1..n_sched {
        if -sol.duals[k] > -sol.duals[bottleneck] * (1.0 + 1e-9) + 1e-12 {
            bottleneck = k;
        }
    }
    Ok(RateMargin {
        t: sol.x[0],
        mu: sol.x[1..].to_vec(),
        bottleneck_bs: bottleneck,
        residual: lp.max_violation(&sol.x),
    })
}

pub fn solve_min_delay_lp(inst: &ProblemInstance) -> Result<Solution> {
    solve_min_delay_lp_with(inst, &LpOptions::default())
}

/// Minimum-delay LP; `InfeasibleRate` when `t* <= 1e-9 max(C)`.
pub fn solve_min_delay_lp_with(inst: &ProblemInstance, opts: &LpOptions) -> Result<Solution> {
    inst.validate()?;
    let lambda_min = inst.lambda_min()?;
    let m = &inst.matrices;
    let r = rate_margin_lp(m, lambda_min, opts)?;
    if r.t <= infeasibility_margin(m) {
        return Err(Error::InfeasibleRate { t_star: r.t });
    }
    Ok(Solution {
        status: Status::Optimal,
        t_star: Some(r.t),
        delta_star_s: Some(min_feasible_delay(r.t, inst.eta)?),
        lambda: vec![lambda_min; m.num_ues()],
        mu: r.mu,
        objective: r.t,
        kkt_residual: r.residual,
        bottleneck_bs: Some(r.bottleneck_bs),
    })
}
