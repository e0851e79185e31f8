//! Dense bounded-variable primal simplex.
//!
//! Solves `min c'x` subject to linear rows `a'x {<=, =, >=} b` and
//! `l <= x <= u`, where bounds may be infinite. Two phases with artificial
//! variables; nonbasic variables sit at either bound (upper-bounding
//! technique). Dantzig pricing, switching to Bland's rule on stalls.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

const PIVOT_TOL: f64 = 1e-11;
const COST_TOL: f64 = 1e-10;
const FEAS_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    cost: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    rows: Vec<(Vec<f64>, Relation, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    /// One multiplier per row, sign convention `c = A'y + reduced costs`.
    pub duals: Vec<f64>,
    pub iterations: usize,
}

impl LinearProgram {
    /// `n` variables, all in `[0, inf)` with zero cost.
    pub fn new(n: usize) -> Self {
        LinearProgram {
            cost: vec![0.0; n],
            lower: vec![0.0; n],
            upper: vec![f64::INFINITY; n],
            rows: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.cost.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn set_cost(&mut self, j: usize, c: f64) {
        self.cost[j] = c;
    }

    pub fn set_bounds(&mut self, j: usize, lower: f64, upper: f64) {
        assert!(lower <= upper, "empty bound interval for variable {j}");
        assert!(lower < f64::INFINITY && upper > f64::NEG_INFINITY);
        self.lower[j] = lower;
        self.upper[j] = upper;
    }

    /// Add a row from `(column, coefficient)` pairs.
    pub fn add_row(&mut self, coefs: &[(usize, f64)], rel: Relation, rhs: f64) {
        let mut a = vec![0.0; self.num_vars()];
        for &(j, v) in coefs {
            a[j] += v;
        }
        self.rows.push((a, rel, rhs));
    }

    /// Largest violation of rows and bounds at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (a, rel, b) in &self.rows {
            let ax: f64 = a.iter().zip(x).map(|(ai, xi)| ai * xi).sum();
            let v = match rel {
                Relation::Le => ax - b,
                Relation::Ge => b - ax,
                Relation::Eq => (ax - b).abs(),
            };
            worst = worst.max(v);
        }
        for (j, xj) in x.iter().enumerate() {
            worst = worst.max(self.lower[j] - xj).max(xj - self.upper[j]);
        }
        worst
    }

    pub fn solve(&self) -> Result<LpSolution> {
        Standard::build(self).solve(self)
    }
}

/// How an original variable maps to nonnegative standard-form columns.
#[derive(Debug, Clone, Copy)]
enum VarMap {
    /// `x = l + y`, `0 <= y <= u - l`.
    Shift(usize, f64),
    /// `x = u - y`, `y >= 0`.
    Flip(usize, f64),
    /// `x = y1 - y2`.
    Split(usize, usize),
}

/// Standard form `A y = b`, `0 <= y <= u`, `b >= 0`.
struct Standard {
    a: DMatrix<f64>,
    b: DVector<f64>,
    cost: Vec<f64>,
    upper: Vec<f64>,
    map: Vec<VarMap>,
    /// Per-row factor turning a standard-form dual into an original-row dual.
    row_factor: Vec<f64>,
    /// Column that forms the initial identity basis in each row.
    init_basis: Vec<usize>,
    artificial_from: usize,
}

impl Standard {
    fn build(lp: &LinearProgram) -> Self {
        let n = lp.num_vars();
        let m = lp.num_rows();
        let mut map = Vec::with_capacity(n);
        let mut cost = Vec::new();
        let mut upper = Vec::new();
        for j in 0..n {
            let (l, u, c) = (lp.lower[j], lp.upper[j], lp.cost[j]);
            let col = cost.len();
            if l.is_finite() {
                map.push(VarMap::Shift(col, l));
                cost.push(c);
                upper.push(u - l);
            } else if u.is_finite() {
                map.push(VarMap::Flip(col, u));
                cost.push(-c);
                upper.push(f64::INFINITY);
            } else {
                map.push(VarMap::Split(col, col + 1));
                cost.extend([c, -c]);
                upper.extend([f64::INFINITY, f64::INFINITY]);
            }
        }
        let n_struct = cost.len();

        // Rows in structural columns, equilibrated and with b >= 0.
        let mut rows = Vec::with_capacity(m);
        let mut row_factor = Vec::with_capacity(m);
        for (a, rel, rhs) in &lp.rows {
            let mut r = vec![0.0; n_struct];
            let mut b = *rhs;
            for (j, &aj) in a.iter().enumerate() {
                if aj == 0.0 {
                    continue;
                }
                match map[j] {
                    VarMap::Shift(c, l) => {
                        r[c] += aj;
                        b -= aj * l;
                    }
                    VarMap::Flip(c, u) => {
                        r[c] -= aj;
                        b -= aj * u;
                    }
                    VarMap::Split(c1, c2) => {
                        r[c1] += aj;
                        r[c2] -= aj;
                    }
                }
            }
            let scale = r.iter().fold(0.0f64, |s, v| s.max(v.abs()));
            let scale = if scale > 0.0 { 1.0 / scale } else { 1.0 };
            let mut rel = *rel;
            let mut sign = 1.0;
            if b * scale < 0.0 {
                sign = -1.0;
                rel = match rel {
                    Relation::Le => Relation::Ge,
                    Relation::Ge => Relation::Le,
                    Relation::Eq => Relation::Eq,
                };
            }
            let f = scale * sign;
            r.iter_mut().for_each(|v| *v *= f);
            rows.push((r, rel, b * f));
            row_factor.push(f);
        }

        let n_slack = rows.iter().filter(|r| r.1 != Relation::Eq).count();
        let n_art = rows.iter().filter(|r| r.1 != Relation::Le).count();
        let n_total = n_struct + n_slack + n_art;
        let mut a = DMatrix::zeros(m, n_total);
        let mut b = DVector::zeros(m);
        let mut init_basis = vec![0; m];
        let mut slack = n_struct;
        let artificial_from = n_struct + n_slack;
        let mut art = artificial_from;
        for (i, (r, rel, rhs)) in rows.iter().enumerate() {
            for (j, v) in r.iter().enumerate() {
                a[(i, j)] = *v;
            }
            b[i] = *rhs;
            match rel {
                Relation::Le => {
                    a[(i, slack)] = 1.0;
                    init_basis[i] = slack;
                    slack += 1;
                }
                Relation::Ge => {
                    a[(i, slack)] = -1.0;
                    slack += 1;
                    a[(i, art)] = 1.0;
                    init_basis[i] = art;
                    art += 1;
                }
                Relation::Eq => {
                    a[(i, art)] = 1.0;
                    init_basis[i] = art;
                    art += 1;
                }
            }
        }
        cost.resize(n_total, 0.0);
        upper.resize(n_total, f64::INFINITY);
        Standard {
            a,
            b,
            cost,
            upper,
            map,
            row_factor,
            init_basis,
            artificial_from,
        }
    }

    fn solve(mut self, lp: &LinearProgram) -> Result<LpSolution> {
        let n = self.a.ncols();
        let mut tab = Tableau::new(&self.a, &self.b, &self.init_basis);
        let mut iterations = 0;

        if self.artificial_from < n {
            let phase1: Vec<f64> = (0..n)
                .map(|j| if j >= self.artificial_from { 1.0 } else { 0.0 })
                .collect();
            tab.set_cost(&phase1);
            iterations += tab.run(&self.upper, n)?;
            let infeas: f64 = (self.artificial_from..n).map(|j| tab.value(j, &self.upper)).sum();
            if infeas > FEAS_TOL {
                return Err(Error::LpInfeasible);
            }
            // pin artificials at zero for phase II
            for j in self.artificial_from..n {
                self.upper[j] = 0.0;
            }
        }
        tab.set_cost(&self.cost);
        iterations += tab.run(&self.upper, self.artificial_from)?;
        tab.refine(&self.a, &self.b, &self.upper);

        let y: Vec<f64> = (0..n).map(|j| tab.value(j, &self.upper)).collect();
        let x: Vec<f64> = self
            .map
            .iter()
            .map(|m| match *m {
                VarMap::Shift(c, l) => l + y[c],
                VarMap::Flip(c, u) => u - y[c],
                VarMap::Split(c1, c2) => y[c1] - y[c2],
            })
            .collect();
        let objective = lp.cost.iter().zip(&x).map(|(c, x)| c * x).sum();
        // reduced cost of an initial identity column is -y_i (its cost is 0)
        let duals = (0..self.a.nrows())
            .map(|i| -tab.reduced[self.init_basis[i]] * self.row_factor[i])
            .collect();
        Ok(LpSolution {
            x,
            objective,
            duals,
            iterations,
        })
    }
}

struct Tableau {
    /// `B^-1 A`.
    t: DMatrix<f64>,
    /// Values of basic variables.
    xb: Vec<f64>,
    basis: Vec<usize>,
    is_basic: Vec<bool>,
    at_upper: Vec<bool>,
    cost: Vec<f64>,
    reduced: Vec<f64>,
}

impl Tableau {
    fn new(a: &DMatrix<f64>, b: &DVector<f64>, basis: &[usize]) -> Self {
        let n = a.ncols();
        let mut is_basic = vec![false; n];
        for &j in basis {
            is_basic[j] = true;
        }
        Tableau {
            t: a.clone(),
            xb: b.iter().copied().collect(),
            basis: basis.to_vec(),
            is_basic,
            at_upper: vec![false; n],
            cost: vec![0.0; n],
            reduced: vec![0.0; n],
        }
    }

    fn value(&self, j: usize, upper: &[f64]) -> f64 {
        if self.is_basic[j] {
            let r = self.basis.iter().position(|&b| b == j).expect("basic");
            self.xb[r]
        } else if self.at_upper[j] {
            upper[j]
        } else {
            0.0
        }
    }

    fn set_cost(&mut self, cost: &[f64]) {
        self.cost = cost.to_vec();
        let m = self.t.nrows();
        for j in 0..self.t.ncols() {
            let cb: f64 = (0..m).map(|r| self.cost[self.basis[r]] * self.t[(r, j)]).sum();
            self.reduced[j] = self.cost[j] - cb;
        }
    }

    fn objective(&self, upper: &[f64]) -> f64 {
        (0..self.cost.len()).map(|j| self.cost[j] * self.value(j, upper)).sum()
    }

    /// Iterate to optimality; only columns below `n_enter` may enter.
    fn run(&mut self, upper: &[f64], n_enter: usize) -> Result<usize> {
        let m = self.t.nrows();
        let max_iter = 50 * (m + self.t.ncols()) + 1000;
        let mut stall = 0usize;
        let mut last_obj = self.objective(upper);
        for it in 0..max_iter {
            let bland = stall > 2 * (m + 10);
            let Some((j, dir)) = self.entering(n_enter, upper, bland) else {
                return Ok(it);
            };

            // ratio test: basic var i moves by -dir * t[i,j] per unit step
            let mut step = upper[j];
            let mut leave: Option<(usize, bool)> = None;
            for i in 0..m {
                let alpha = dir * self.t[(i, j)];
                let bi = self.basis[i];
                let limit = if alpha > PIVOT_TOL {
                    (self.xb[i].max(0.0) / alpha, false)
                } else if alpha < -PIVOT_TOL && upper[bi].is_finite() {
                    ((upper[bi] - self.xb[i]).max(0.0) / -alpha, true)
                } else {
                    continue;
                };
                let better = match leave {
                    _ if limit.0 < step - 1e-12 => true,
                    Some((r, _)) if limit.0 <= step + 1e-12 => {
                        // ties: Bland picks the smallest basic index, Dantzig the largest pivot
                        if bland {
                            bi < self.basis[r]
                        } else {
                            self.t[(i, j)].abs() > self.t[(r, j)].abs()
                        }
                    }
                    _ => false,
                };
                if better {
                    step = limit.0;
                    leave = Some((i, limit.1));
                }
            }
            if step == f64::INFINITY {
                return Err(Error::LpUnbounded);
            }

            for i in 0..m {
                self.xb[i] -= dir * step * self.t[(i, j)];
            }
            match leave {
                None => {
                    self.at_upper[j] = !self.at_upper[j];
                }
                Some((r, to_upper)) => {
                    let entering_value = if self.at_upper[j] { upper[j] } else { 0.0 } + dir * step;
                    let old = self.basis[r];
                    self.is_basic[old] = false;
                    self.at_upper[old] = to_upper;
                    self.pivot(r, j);
                    self.xb[r] = entering_value;
                    self.is_basic[j] = true;
                    self.at_upper[j] = false;
                }
            }

            let obj = self.objective(upper);
            if obj < last_obj - 1e-12 * (1.0 + last_obj.abs()) {
                stall = 0;
            } else {
                stall += 1;
            }
            last_obj = obj;
        }
        Err(Error::NumericalFailure("simplex iteration limit reached".into()))
    }

    fn entering(&self, n_enter: usize, upper: &[f64], bland: bool) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64, f64)> = None;
        for j in 0..n_enter {
            if self.is_basic[j] || upper[j] == 0.0 {
                continue;
            }
            let d = self.reduced[j];
            let dir = if !self.at_upper[j] && d < -COST_TOL {
                1.0
            } else if self.at_upper[j] && d > COST_TOL {
                -1.0
            } else {
                continue;
            };
            if bland {
                return Some((j, dir));
            }
            if best.is_none_or(|b| d.abs() > b.2) {
                best = Some((j, dir, d.abs()));
            }
        }
        best.map(|b| (b.0, b.1))
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let p = self.t[(r, j)];
        let n = self.t.ncols();
        for k in 0..n {
            self.t[(r, k)] /= p;
        }
        for i in 0..self.t.nrows() {
            if i == r {
                continue;
            }
            let f = self.t[(i, j)];
            if f == 0.0 {
                continue;
            }
            for k in 0..n {
                let v = self.t[(r, k)];
                if v != 0.0 {
                    self.t[(i, k)] -= f * v;
                }
            }
        }
        let d = self.reduced[j];
        for k in 0..n {
            self.reduced[k] -= d * self.t[(r, k)];
        }
        self.basis[r] = j;
    }

    /// Recompute basic values from the original data to shed pivot drift.
    fn refine(&mut self, a: &DMatrix<f64>, b: &DVector<f64>, upper: &[f64]) {
        let m = a.nrows();
        let mut rhs = b.clone();
        for j in 0..a.ncols() {
            if !self.is_basic[j] && self.at_upper[j] {
                rhs -= a.column(j) * upper[j];
            }
        }
        let bm = DMatrix::from_fn(m, m, |i, k| a[(i, self.basis[k])]);
        if let Some(sol) = bm.lu().solve(&rhs) {
            if sol.iter().all(|v| v.is_finite()) {
                for (i, v) in sol.iter().enumerate() {
                    let bi = self.basis[i];
                    self.xb[i] = v.clamp(0.0, upper[bi]);
                }
            }
        }
    }
}
