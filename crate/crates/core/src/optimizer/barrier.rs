//! Log-barrier interior-point method for latency-constrained utility
//! maximization.
//!
//! Rates are normalized by `S = max(C)` so every variable is O(1). Phase I
//! starts from a point strictly inside the minimum-delay LP's optimum at
//! `lambda = lambda_floor` and minimizes the worst latency-constraint
//! shortfall `r`; phase II follows the central path with damped Newton steps.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::min_delay::{rate_margin_lp, LpOptions};
use super::{ProblemInstance, Solution, Status, Utility};
use crate::error::{Error, Result};
use crate::queueing::log1m_exp;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BarrierOptions {
    /// Lower bound on every `lambda_m`, packets/second.
    pub lambda_floor: f64,
    /// Stop when the duality gap is below `gap_rel_tol * |objective|`.
    pub gap_rel_tol: f64,
    /// Barrier parameter growth per outer iteration.
    pub growth: f64,
    pub max_newton: usize,
    pub max_outer: usize,
}

impl Default for BarrierOptions {
    fn default() -> Self {
        BarrierOptions {
            lambda_floor: 1e-6,
            gap_rel_tol: 1e-9,
            growth: 10.0,
            max_newton: 200,
            max_outer: 60,
        }
    }
}

/// `(weight, sparse vector)` term of a rank-one Hessian sum.
type RankOne = (f64, Vec<(usize, f64)>);

fn dpsi(x: f64) -> f64 {
    1.0 / x.exp_m1()
}

fn d2psi(x: f64) -> f64 {
    -1.0 / (x.exp_m1() * -(-x).exp_m1())
}

/// `ln(1 - exp(-(x + dx))) - ln(1 - exp(-x))` without cancellation.
fn psi_diff(x: f64, dx: f64) -> f64 {
    ((-x).exp() * (-dx).exp_m1() / (-x).exp_m1()).ln_1p()
}

/// Sparse affine constraint `a'x + b > 0`.
struct Affine {
    terms: Vec<(usize, f64)>,
    b: f64,
}

impl Affine {
    fn eval(&self, x: &[f64]) -> f64 {
        self.b + self.terms.iter().map(|&(j, a)| a * x[j]).sum::<f64>()
    }

    fn dot(&self, d: &[f64]) -> f64 {
        self.terms.iter().map(|&(j, a)| a * d[j]).sum()
    }
}

/// Normalized problem. Variables: `lambda` (M), `mu` (E), then `r` in phase I.
struct Model {
    n_ue: usize,
    n_edge: usize,
    phase1: bool,
    cap: Vec<f64>,
    edge_ues: Vec<Vec<usize>>,
    routes: Vec<Vec<usize>>,
    /// `S delta / h_m`.
    a: Vec<f64>,
    log_eta: f64,
    linear: Vec<Affine>,
    utility: Utility,
}

impl Model {
    fn n(&self) -> usize {
        self.n_ue + self.n_edge + usize::from(self.phase1)
    }

    fn r_index(&self) -> usize {
        self.n_ue + self.n_edge
    }

    fn num_constraints(&self) -> usize {
        self.linear.len() + self.n_ue
    }

    fn gaps(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n_edge)
            .map(|v| self.cap[v] * x[self.n_ue + v] - self.edge_ues[v].iter().map(|&m| x[m]).sum::<f64>())
            .collect()
    }

    fn gap_dir(&self, d: &[f64], v: usize) -> f64 {
        self.cap[v] * d[self.n_ue + v] - self.edge_ues[v].iter().map(|&m| d[m]).sum::<f64>()
    }

    /// Slack of latency constraint `m`; `None` outside the domain.
    fn latency_slack(&self, x: &[f64], gaps: &[f64], m: usize) -> Option<f64> {
        let mut s = -self.log_eta;
        for &v in &self.routes[m] {
            if gaps[v] <= 0.0 {
                return None;
            }
            s += log1m_exp(self.a[m] * gaps[v]);
        }
        if self.phase1 {
            s += x[self.r_index()];
        }
        Some(s)
    }

    fn slacks(&self, x: &[f64]) -> Option<Vec<f64>> {
        let gaps = self.gaps(x);
        let mut s: Vec<f64> = self.linear.iter().map(|c| c.eval(x)).collect();
        for m in 0..self.n_ue {
            s.push(self.latency_slack(x, &gaps, m)?);
        }
        s.iter().all(|v| *v > 0.0).then_some(s)
    }

    fn objective_diff(&self, x: &[f64], d: &[f64]) -> f64 {
        if self.phase1 {
            return -d[self.r_index()];
        }
        (0..self.n_ue)
            .map(|m| match self.utility {
                Utility::Linear => d[m],
                Utility::Log => (d[m] / x[m]).ln_1p(),
                Utility::AlphaFair(1.0) => (d[m] / x[m]).ln_1p(),
                u => u.value(x[m] + d[m]) - u.value(x[m]),
            })
            .sum()
    }

    /// First and second derivative of the per-UE utility.
    fn utility_derivs(&self, l: f64) -> (f64, f64) {
        match self.utility {
            Utility::Linear => (1.0, 0.0),
            Utility::Log => (1.0 / l, -1.0 / (l * l)),
            Utility::AlphaFair(a) => (l.powf(-a), -a * l.powf(-a - 1.0)),
        }
    }

    /// Gradient of latency slack `m` and its (negative semidefinite) Hessian
    /// as a list of rank-one terms `(weight, sparse vector)`.
    fn latency_derivs(&self, gaps: &[f64], m: usize) -> (DVector<f64>, Vec<RankOne>) {
        let n = self.n();
        let mut g = DVector::zeros(n);
        let mut curv = Vec::with_capacity(self.routes[m].len());
        for &v in &self.routes[m] {
            let xv = self.a[m] * gaps[v];
            let mut dgap = vec![(self.n_ue + v, self.cap[v])];
            dgap.extend(self.edge_ues[v].iter().map(|&k| (k, -1.0)));
            let c1 = self.a[m] * dpsi(xv);
            for &(j, w) in &dgap {
                g[j] += c1 * w;
            }
            curv.push((self.a[m] * self.a[m] * d2psi(xv), dgap));
        }
        if self.phase1 {
            g[self.r_index()] = 1.0;
        }
        (g, curv)
    }

    /// Gradient and Hessian of `phi = -t f - sum ln s`.
    fn grad_hess(&self, x: &[f64], t: f64, s: &[f64]) -> (DVector<f64>, DMatrix<f64>) {
        let n = self.n();
        let mut grad = DVector::zeros(n);
        let mut hess = DMatrix::zeros(n, n);
        if self.phase1 {
            grad[self.r_index()] = t;
        } else {
            for m in 0..self.n_ue {
                let (d1, d2) = self.utility_derivs(x[m]);
                grad[m] -= t * d1;
                hess[(m, m)] -= t * d2;
            }
        }
        for (i, c) in self.linear.iter().enumerate() {
            let si = s[i];
            for &(j, a) in &c.terms {
                grad[j] -= a / si;
                for &(k, b) in &c.terms {
                    hess[(j, k)] += a * b / (si * si);
                }
            }
        }
        let gaps = self.gaps(x);
        let off = self.linear.len();
        for m in 0..self.n_ue {
            let si = s[off + m];
            let (g, curv) = self.latency_derivs(&gaps, m);
            grad -= &g / si;
            hess.ger(1.0 / (si * si), &g, &g, 1.0);
            for (w, vec) in curv {
                for &(j, a) in &vec {
                    for &(k, b) in &vec {
                        hess[(j, k)] -= w * a * b / si;
                    }
                }
            }
        }
        (grad, hess)
    }

    /// `phi(x + d) - phi(x)`, or `None` if `x + d` leaves the domain.
    fn phi_diff(&self, x: &[f64], s: &[f64], d: &[f64], t: f64) -> Option<f64> {
        let mut diff = -t * self.objective_diff(x, d);
        for (i, c) in self.linear.iter().enumerate() {
            let ds = c.dot(d);
            if s[i] + ds <= 0.0 {
                return None;
            }
            diff -= (ds / s[i]).ln_1p();
        }
        let gaps = self.gaps(x);
        let off = self.linear.len();
        for m in 0..self.n_ue {
            let mut ds = if self.phase1 { d[self.r_index()] } else { 0.0 };
            for &v in &self.routes[m] {
                let x0 = self.a[m] * gaps[v];
                let dx = self.a[m] * self.gap_dir(d, v);
                if x0 + dx <= 0.0 {
                    return None;
                }
                ds += psi_diff(x0, dx);
            }
            let si = s[off + m];
            if si + ds <= 0.0 || !ds.is_finite() {
                return None;
            }
            diff -= (ds / si).ln_1p();
        }
        Some(diff)
    }

    fn newton_step(&self, x: &[f64], t: f64, s: &[f64]) -> Result<(DVector<f64>, DVector<f64>)> {
        let (grad, hess) = self.grad_hess(x, t, s);
        let n = self.n();
        let scale: Vec<f64> = (0..n).map(|i| 1.0 / hess[(i, i)].max(1e-300).sqrt()).collect();
        let mut h = DMatrix::from_fn(n, n, |i, j| hess[(i, j)] * scale[i] * scale[j]);
        let rhs = DVector::from_fn(n, |i, _| -grad[i] * scale[i]);
        let mut reg = 0.0;
        loop {
            if let Some(ch) = h.clone().cholesky() {
                let y = ch.solve(&rhs);
                let dx = DVector::from_fn(n, |i, _| y[i] * scale[i]);
                return Ok((grad, dx));
            }
            reg = if reg == 0.0 { 1e-14 } else { reg * 100.0 };
            if reg > 1e-2 {
                return Err(Error::NumericalFailure(
                    "barrier Hessian is not positive definite".into(),
                ));
            }
            for i in 0..n {
                h[(i, i)] += reg;
            }
        }
    }

    /// Objective in normalized units (phase I: `r`).
    fn objective(&self, x: &[f64]) -> f64 {
        if self.phase1 {
            return x[self.r_index()];
        }
        (0..self.n_ue).map(|m| self.utility.value(x[m])).sum()
    }

    /// Damped Newton on `phi` at fixed `t`. Returns the final Newton decrement
    /// squared.
    ///
    /// Centering stops once `dec2 / 2`, which bounds `t` times the objective
    /// error, is below `max(1e-10, 1e-14 t |f|)`.
    fn center(&self, x: &mut [f64], t: f64, opts: &BarrierOptions) -> Result<f64> {
        let mut dec2 = f64::INFINITY;
        for _ in 0..opts.max_newton {
            let s = self
                .slacks(x)
                .ok_or_else(|| Error::NumericalFailure("iterate left the barrier domain".into()))?;
            let (grad, dx) = self.newton_step(x, t, &s)?;
            dec2 = -grad.dot(&dx);
            let tol = 1e-10f64.max(1e-14 * t * self.objective(x).abs().max(1.0));
            if dec2 / 2.0 <= tol {
                return Ok(dec2);
            }
            let mut step = 1.0;
            let mut accepted = false;
            for _ in 0..80 {
                let d: Vec<f64> = dx.iter().map(|v| v * step).collect();
                if let Some(df) = self.phi_diff(x, &s, &d, t) {
                    if df <= -0.01 * step * dec2 {
                        for (xi, di) in x.iter_mut().zip(&d) {
                            *xi += di;
                        }
                        accepted = true;
                        break;
                    }
                }
                step *= 0.5;
            }
            if !accepted {
                if dec2 < 1e-6 {
                    return Ok(dec2);
                }
                return Err(Error::NumericalFailure(format!(
                    "line search failed (Newton decrement {dec2:.3e})"
                )));
            }
            if self.phase1 && x[self.r_index()] < 0.0 {
                return Ok(dec2);
            }
        }
        if dec2 < 1e-6 {
            Ok(dec2)
        } else {
            Err(Error::NumericalFailure("Newton iteration limit reached".into()))
        }
    }

    /// Stationarity residual (inf-norm) plus complementarity, using the
    /// multipliers implied by one more Newton step.
    fn kkt_residual(&self, x: &[f64], t: f64) -> Result<f64> {
        let s = self
            .slacks(x)
            .ok_or_else(|| Error::NumericalFailure("final iterate infeasible".into()))?;
        let (_, dx) = self.newton_step(x, t, &s)?;
        let dx: Vec<f64> = dx.iter().copied().collect();
        let n = self.n();
        let mut r = DVector::zeros(n);
        for m in 0..self.n_ue {
            r[m] += self.utility_derivs(x[m]).0;
        }
        let mut comp = 0.0;
        for (i, c) in self.linear.iter().enumerate() {
            let nu = (1.0 - c.dot(&dx) / s[i]).max(0.0) / (t * s[i]);
            comp += nu * s[i];
            for &(j, a) in &c.terms {
                r[j] += nu * a;
            }
        }
        let gaps = self.gaps(x);
        let off = self.linear.len();
        for m in 0..self.n_ue {
            let si = s[off + m];
            let (g, _) = self.latency_derivs(&gaps, m);
            let ds: f64 = g.iter().zip(&dx).map(|(a, b)| a * b).sum();
            let nu = (1.0 - ds / si).max(0.0) / (t * si);
            comp += nu * si;
            r += g * nu;
        }
        Ok(r.amax() + comp)
    }
}

pub fn solve_utility_max(inst: &ProblemInstance) -> Result<Solution> {
    solve_utility_max_with(inst, &BarrierOptions::default())
}

/// Maximize `sum U(lambda_m)` subject to the latency constraint at `delta`.
///
/// Errors with `InfeasibleDelay` when no point satisfies the latency
/// constraints even at `lambda = lambda_floor`.
pub fn solve_utility_max_with(inst: &ProblemInstance, opts: &BarrierOptions) -> Result<Solution> {
    inst.validate()?;
    let delta = inst.delta_s()?;
    let mats = &inst.matrices;
    let n_ue = mats.num_ues();
    let n_edge = mats.num_edges();
    let scale = mats.capacity().iter().fold(0.0f64, |a, b| a.max(*b));
    let floor = opts.lambda_floor / scale;

    // start strictly inside the LP optimum at the rate floor
    let lp = rate_margin_lp(mats, opts.lambda_floor, &LpOptions::default())?;
    if lp.t <= 2.0 * opts.lambda_floor {
        return Err(Error::InfeasibleDelay { delta_s: delta });
    }
    let g = mats.scheduling();
    let max_row = (0..g.nrows()).map(|k| g.row(k).sum()).fold(1.0f64, f64::max);
    let mut x: Vec<f64> = vec![2.0 * floor; n_ue];
    x.extend(lp.mu.iter().map(|m| 0.98 * m + 0.01 / max_row));

    let mut edge_ues = vec![Vec::new(); n_edge];
    for (m, route) in mats.routes().iter().enumerate() {
        for &v in route {
            edge_ues[v].push(m);
        }
    }
    let mut linear = Vec::new();
    for m in 0..n_ue {
        linear.push(Affine {
            terms: vec![(m, 1.0)],
            b: -floor,
        });
    }
    for v in 0..n_edge {
        linear.push(Affine {
            terms: vec![(n_ue + v, 1.0)],
            b: 0.0,
        });
        linear.push(Affine {
            terms: vec![(n_ue + v, -1.0)],
            b: 1.0,
        });
    }
    for k in 0..g.nrows() {
        let terms: Vec<(usize, f64)> = mats.row_edges(k).iter().map(|&v| (n_ue + v, -g[(k, v)])).collect();
        if !terms.is_empty() {
            linear.push(Affine { terms, b: 1.0 });
        }
    }
    let mut model = Model {
        n_ue,
        n_edge,
        phase1: true,
        cap: mats.capacity().iter().map(|c| c / scale).collect(),
        edge_ues,
        routes: mats.routes().to_vec(),
        a: mats.hops().iter().map(|&h| scale * delta / h as f64).collect(),
        log_eta: inst.eta.ln(),
        linear,
        utility: match inst.utility {
            Utility::AlphaFair(0.0) => Utility::Linear,
            Utility::AlphaFair(1.0) => Utility::Log,
            u => u,
        },
    };

    phase_one(&mut model, &mut x, delta, opts)?;

    model.phase1 = false;
    let m_c = model.num_constraints() as f64;
    let obj_scale = match model.utility {
        Utility::Log => 1.0,
        Utility::Linear => scale,
        Utility::AlphaFair(a) => scale.powf(1.0 - a),
    };
    let unscaled_obj = |x: &[f64]| -> f64 { (0..n_ue).map(|m| inst.utility.value(x[m] * scale)).sum() };
    // balance objective and barrier at the phase-I point
    let mut t = (m_c / model.objective(&x).abs().max(1e-12)).min(1.0);
    let mut converged = false;
    for _ in 0..opts.max_outer {
        model.center(&mut x, t, opts)?;
        let obj = unscaled_obj(&x);
        if m_c / t * obj_scale <= opts.gap_rel_tol * obj.abs().max(1e-12) {
            converged = true;
            break;
        }
        t *= opts.growth;
    }
    if !converged {
        return Err(Error::NumericalFailure(
            "barrier did not reach the gap tolerance".into(),
        ));
    }
    let kkt = model.kkt_residual(&x, t)? * obj_scale;
    let lambda: Vec<f64> = x[..n_ue].iter().map(|l| l * scale).collect();
    let mu = x[n_ue..n_ue + n_edge].to_vec();
    Ok(Solution {
        status: Status::Optimal,
        t_star: None,
        delta_star_s: None,
        objective: unscaled_obj(&x),
        lambda,
        mu,
        kkt_residual: kkt,
        bottleneck_bs: None,
    })
}

/// Drive the worst latency shortfall below zero, or prove it cannot be.
fn phase_one(model: &mut Model, x: &mut Vec<f64>, delta: f64, opts: &BarrierOptions) -> Result<()> {
    model.phase1 = false;
    let gaps = model.gaps(x);
    let mut worst = f64::NEG_INFINITY;
    for m in 0..model.n_ue {
        let s = model
            .latency_slack(x, &gaps, m)
            .ok_or(Error::InfeasibleDelay { delta_s: delta })?;
        worst = worst.max(-s);
    }
    if worst < 0.0 {
        return Ok(());
    }
    model.phase1 = true;
    x.push(worst + 1.0);
    let r = model.r_index();
    let m_c = model.num_constraints() as f64;
    let mut t = 1.0;
    for _ in 0..opts.max_outer {
        model.center(x, t, opts)?;
        if x[r] < 0.0 {
            x.pop();
            return Ok(());
        }
        if m_c / t < 1e-10 {
            break;
        }
        t *= opts.growth;
    }
    Err(Error::InfeasibleDelay { delta_s: delta })
}
