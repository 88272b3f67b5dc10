//! Bounded-variable primal revised simplex.
//!
//! Every row `a·x (cmp) b` becomes `a·x - s = 0` with a logical `s` whose
//! bounds encode the comparison, so the working system is homogeneous and the
//! initial basis is made of logicals or, where the starting point violates a
//! row, of artificials driven out in phase one.

use crate::{Cmp, LpError, Problem, Sense};

#[derive(Clone, Debug)]
pub struct SimplexOptions {
    pub feasibility_tol: f64,
    pub optimality_tol: f64,
    pub pivot_tol: f64,
    pub max_iterations: usize,
    /// Consecutive degenerate pivots before switching to Bland's rule.
    pub degenerate_switch: usize,
    /// Iterations between recomputations of the basic values.
    pub refresh_interval: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        SimplexOptions {
            feasibility_tol: 1e-9,
            optimality_tol: 1e-9,
            pivot_tol: 1e-9,
            max_iterations: 1_000_000,
            degenerate_switch: 50,
            refresh_interval: 200,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Solution {
    pub objective: f64,
    pub x: Vec<f64>,
    pub iterations: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Status {
    Basic(usize),
    AtLower,
    AtUpper,
    /// Nonbasic free variable sitting at zero.
    Zero,
}

pub struct Simplex {
    m: usize,
    n: usize,
    // structural columns in compressed sparse column form
    col_start: Vec<usize>,
    col_row: Vec<usize>,
    col_val: Vec<f64>,
    // artificial column j = n + m + k has sign art_sign[k] in row art_row[k]
    art_row: Vec<usize>,
    art_sign: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    cost: Vec<f64>,
    x: Vec<f64>,
    status: Vec<Status>,
    basis: Vec<usize>,
    /// Dense column-major basis inverse.
    binv: Vec<f64>,
    phase_one_done: bool,
    sense: Sense,
    objective: Vec<f64>,
    opts: SimplexOptions,
    iterations: usize,
    // scratch
    alpha: Vec<f64>,
    pi: Vec<f64>,
}

enum StepOutcome {
    Optimal,
    Progress,
}

impl Simplex {
    pub fn new(problem: &Problem, opts: SimplexOptions) -> Result<Self, LpError> {
        problem.validate()?;
        let m = problem.num_constraints();
        let n = problem.num_variables();

        let mut counts = vec![0usize; n];
        for c in &problem.constraints {
            for &(j, _) in &c.terms {
                counts[j] += 1;
            }
        }
        let mut col_start = vec![0usize; n + 1];
        for j in 0..n {
            col_start[j + 1] = col_start[j] + counts[j];
        }
        let nnz = col_start[n];
        let mut col_row = vec![0usize; nnz];
        let mut col_val = vec![0.0; nnz];
        let mut fill = col_start.clone();
        for (i, c) in problem.constraints.iter().enumerate() {
            for &(j, a) in &c.terms {
                col_row[fill[j]] = i;
                col_val[fill[j]] = a;
                fill[j] += 1;
            }
        }

        let mut lower = Vec::with_capacity(n + 2 * m);
        let mut upper = Vec::with_capacity(n + 2 * m);
        let mut x = Vec::with_capacity(n + 2 * m);
        let mut status = Vec::with_capacity(n + 2 * m);
        for v in &problem.variables {
            lower.push(v.lower);
            upper.push(v.upper);
            let (val, st) = if v.lower.is_finite() {
                (v.lower, Status::AtLower)
            } else if v.upper.is_finite() {
                (v.upper, Status::AtUpper)
            } else {
                (0.0, Status::Zero)
            };
            x.push(val);
            status.push(st);
        }

        let mut basis = vec![0usize; m];
        let mut art_row = Vec::new();
        let mut art_sign = Vec::new();
        let mut binv = vec![0.0; m * m];
        for (i, c) in problem.constraints.iter().enumerate() {
            let activity = problem.row_activity(i, &x[..n]);
            let (lo, hi) = match c.cmp {
                Cmp::Le => (f64::NEG_INFINITY, c.rhs),
                Cmp::Ge => (c.rhs, f64::INFINITY),
                Cmp::Eq => (c.rhs, c.rhs),
            };
            lower.push(lo);
            upper.push(hi);
            let j = n + i;
            if activity >= lo && activity <= hi {
                // logical column is -e_i, so its inverse entry is -1
                x.push(activity);
                status.push(Status::Basic(i));
                basis[i] = j;
                binv[i * m + i] = -1.0;
            } else {
                let target = if activity < lo { lo } else { hi };
                x.push(target);
                status.push(if activity < lo {
                    Status::AtLower
                } else {
                    Status::AtUpper
                });
                // a·x - s + sign·art = 0 with art = |activity - target| >= 0
                let sign = if activity > target { -1.0 } else { 1.0 };
                art_row.push(i);
                art_sign.push(sign);
                basis[i] = usize::MAX; // filled below
                binv[i * m + i] = sign;
            }
        }
        for (k, &i) in art_row.iter().enumerate() {
            let j = n + m + k;
            let activity = problem.row_activity(i, &x[..n]);
            let val = (activity - x[n + i]).abs();
            lower.push(0.0);
            upper.push(f64::INFINITY);
            x.push(val);
            status.push(Status::Basic(i));
            basis[i] = j;
        }

        let total = n + m + art_row.len();
        let phase_one_done = art_row.is_empty();
        let mut s = Simplex {
            m,
            n,
            col_start,
            col_row,
            col_val,
            art_row,
            art_sign,
            lower,
            upper,
            cost: vec![0.0; total],
            x,
            status,
            basis,
            binv,
            phase_one_done,
            sense: problem.sense,
            objective: problem.objective.clone(),
            opts,
            iterations: 0,
            alpha: vec![0.0; m],
            pi: vec![0.0; m],
        };
        s.load_phase_costs();
        Ok(s)
    }

    /// Replaces the objective, keeping the current basis as a warm start.
    pub fn set_objective(&mut self, sense: Sense, objective: &[f64]) -> Result<(), LpError> {
        if objective.len() != self.n {
            return Err(LpError::InvalidModel("objective length mismatch".into()));
        }
        self.sense = sense;
        self.objective = objective.to_vec();
        self.load_phase_costs();
        Ok(())
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    fn load_phase_costs(&mut self) {
        let total = self.cost.len();
        self.cost.iter_mut().for_each(|c| *c = 0.0);
        if self.phase_one_done {
            let flip = if self.sense == Sense::Maximize { -1.0 } else { 1.0 };
            for j in 0..self.n {
                self.cost[j] = flip * self.objective[j];
            }
        } else {
            for j in self.n + self.m..total {
                self.cost[j] = 1.0;
            }
        }
    }

    fn for_column(&self, j: usize, mut f: impl FnMut(usize, f64)) {
        if j < self.n {
            for k in self.col_start[j]..self.col_start[j + 1] {
                f(self.col_row[k], self.col_val[k]);
            }
        } else if j < self.n + self.m {
            f(j - self.n, -1.0);
        } else {
            let k = j - self.n - self.m;
            f(self.art_row[k], self.art_sign[k]);
        }
    }

    fn compute_duals(&mut self) {
        let m = self.m;
        let nz: Vec<(usize, f64)> = (0..m)
            .map(|i| (i, self.cost[self.basis[i]]))
            .filter(|&(_, c)| c != 0.0)
            .collect();
        for j in 0..m {
            let col = &self.binv[j * m..(j + 1) * m];
            self.pi[j] = nz.iter().map(|&(i, c)| c * col[i]).sum();
        }
    }

    fn reduced_cost(&self, j: usize) -> f64 {
        let mut d = self.cost[j];
        self.for_column(j, |i, a| d -= self.pi[i] * a);
        d
    }

    fn compute_alpha(&mut self, q: usize) {
        let m = self.m;
        self.alpha.iter_mut().for_each(|a| *a = 0.0);
        let mut entries = Vec::new();
        self.for_column(q, |i, a| entries.push((i, a)));
        for (k, a) in entries {
            let col = &self.binv[k * m..(k + 1) * m];
            for i in 0..m {
                self.alpha[i] += a * col[i];
            }
        }
    }

    /// Recomputes basic values from the nonbasic ones: `B x_B = -N x_N`.
    fn refresh_basic_values(&mut self) {
        let m = self.m;
        let mut rhs = vec![0.0; m];
        for j in 0..self.x.len() {
            if matches!(self.status[j], Status::Basic(_)) || self.x[j] == 0.0 {
                continue;
            }
            let v = self.x[j];
            self.for_column(j, |i, a| rhs[i] -= a * v);
        }
        let mut xb = vec![0.0; m];
        for (k, &r) in rhs.iter().enumerate() {
            if r == 0.0 {
                continue;
            }
            let col = &self.binv[k * m..(k + 1) * m];
            for i in 0..m {
                xb[i] += r * col[i];
            }
        }
        for i in 0..m {
            self.x[self.basis[i]] = xb[i];
        }
    }

    /// Rebuilds the basis inverse from scratch by Gauss-Jordan elimination.
    fn reinvert(&mut self) -> Result<(), LpError> {
        let m = self.m;
        let mut b = vec![0.0; m * m]; // row-major copy of B
        for pos in 0..m {
            let j = self.basis[pos];
            self.for_column(j, |i, a| b[i * m + pos] = a);
        }
        let mut inv = vec![0.0; m * m]; // row-major
        for i in 0..m {
            inv[i * m + i] = 1.0;
        }
        for c in 0..m {
            let piv = (c..m)
                .max_by(|&a, &b2| b[a * m + c].abs().total_cmp(&b[b2 * m + c].abs()))
                .unwrap();
            if b[piv * m + c].abs() < 1e-12 {
                return Err(LpError::Numerical("singular basis during reinversion".into()));
            }
            if piv != c {
                for k in 0..m {
                    b.swap(piv * m + k, c * m + k);
                    inv.swap(piv * m + k, c * m + k);
                }
            }
            let p = b[c * m + c];
            for k in 0..m {
                b[c * m + k] /= p;
                inv[c * m + k] /= p;
            }
            for r in 0..m {
                if r == c {
                    continue;
                }
                let f = b[r * m + c];
                if f == 0.0 {
                    continue;
                }
                for k in 0..m {
                    b[r * m + k] -= f * b[c * m + k];
                    inv[r * m + k] -= f * inv[c * m + k];
                }
            }
        }
        // B^{-1}[i][j] in row-major -> column-major storage
        for i in 0..m {
            for j in 0..m {
                self.binv[j * m + i] = inv[i * m + j];
            }
        }
        Ok(())
    }

    fn primal_infeasibility(&self) -> f64 {
        let mut worst = 0.0f64;
        for &j in &self.basis {
            worst = worst
                .max(self.lower[j] - self.x[j])
                .max(self.x[j] - self.upper[j]);
        }
        worst
    }

    fn choose_entering(&self, bland: bool) -> Option<(usize, f64)> {
        let tol = self.opts.optimality_tol;
        let mut best: Option<(usize, f64, f64)> = None;
        for j in 0..self.x.len() {
            let dir = match self.status[j] {
                Status::Basic(_) => continue,
                _ if self.lower[j] == self.upper[j] => continue,
                Status::AtLower => {
                    let d = self.reduced_cost(j);
                    if d < -tol {
                        (1.0, -d)
                    } else {
                        continue;
                    }
                }
                Status::AtUpper => {
                    let d = self.reduced_cost(j);
                    if d > tol {
                        (-1.0, d)
                    } else {
                        continue;
                    }
                }
                Status::Zero => {
                    let d = self.reduced_cost(j);
                    if d.abs() > tol {
                        (-d.signum(), d.abs())
                    } else {
                        continue;
                    }
                }
            };
            if bland {
                return Some((j, dir.0));
            }
            if best.is_none_or(|(_, _, score)| dir.1 > score) {
                best = Some((j, dir.0, dir.1));
            }
        }
        best.map(|(j, d, _)| (j, d))
    }

    fn iterate(&mut self, bland: bool) -> Result<(StepOutcome, f64), LpError> {
        self.compute_duals();
        let Some((q, dir)) = self.choose_entering(bland) else {
            return Ok((StepOutcome::Optimal, 0.0));
        };
        self.compute_alpha(q);
        let m = self.m;
        let ftol = self.opts.feasibility_tol;
        let ptol = self.opts.pivot_tol;

        // x_B(theta) = x_B - theta * dir * alpha
        let mut theta_max = f64::INFINITY;
        for i in 0..m {
            let delta = -dir * self.alpha[i];
            if delta.abs() <= ptol {
                continue;
            }
            let j = self.basis[i];
            let r = if delta < 0.0 {
                if self.lower[j] == f64::NEG_INFINITY {
                    continue;
                }
                (self.x[j] - self.lower[j] + ftol) / -delta
            } else {
                if self.upper[j] == f64::INFINITY {
                    continue;
                }
                (self.upper[j] - self.x[j] + ftol) / delta
            };
            theta_max = theta_max.min(r);
        }

        let span = self.upper[q] - self.lower[q];
        let mut leave: Option<(usize, f64, bool)> = None;
        if theta_max.is_finite() {
            let mut best_piv = 0.0;
            let mut best_ratio = f64::INFINITY;
            for i in 0..m {
                let delta = -dir * self.alpha[i];
                if delta.abs() <= ptol {
                    continue;
                }
                let j = self.basis[i];
                let (r, to_upper) = if delta < 0.0 {
                    if self.lower[j] == f64::NEG_INFINITY {
                        continue;
                    }
                    ((self.x[j] - self.lower[j]) / -delta, false)
                } else {
                    if self.upper[j] == f64::INFINITY {
                        continue;
                    }
                    ((self.upper[j] - self.x[j]) / delta, true)
                };
                let r = r.max(0.0);
                if bland {
                    let better = match leave {
                        None => true,
                        Some((li, lr, _)) => {
                            r < lr - 1e-12 || (r <= lr + 1e-12 && j < self.basis[li])
                        }
                    };
                    if better && r <= theta_max {
                        leave = Some((i, r, to_upper));
                    }
                } else if r <= theta_max
                    && (delta.abs() > best_piv
                        || (delta.abs() == best_piv && r < best_ratio))
                {
                    best_piv = delta.abs();
                    best_ratio = r;
                    leave = Some((i, r, to_upper));
                }
            }
        }

        let flip = span.is_finite() && leave.is_none_or(|(_, r, _)| span <= r);
        if leave.is_none() && !flip {
            return Err(LpError::Unbounded);
        }
        let theta = if flip { span } else { leave.unwrap().1 };

        if theta != 0.0 {
            self.x[q] += dir * theta;
            for i in 0..m {
                if self.alpha[i] != 0.0 {
                    let j = self.basis[i];
                    self.x[j] -= theta * dir * self.alpha[i];
                }
            }
        }

        if flip {
            self.status[q] = if dir > 0.0 {
                Status::AtUpper
            } else {
                Status::AtLower
            };
            self.x[q] = if dir > 0.0 { self.upper[q] } else { self.lower[q] };
            return Ok((StepOutcome::Progress, theta));
        }

        let (r, _, to_upper) = leave.unwrap();
        let l = self.basis[r];
        if to_upper {
            self.x[l] = self.upper[l];
            self.status[l] = Status::AtUpper;
        } else {
            self.x[l] = self.lower[l];
            self.status[l] = Status::AtLower;
        }
        self.basis[r] = q;
        self.status[q] = Status::Basic(r);

        // eta update of the inverse: row r /= p, other rows -= alpha_i * new row r
        let p = self.alpha[r];
        let nz: Vec<(usize, f64)> = (0..m)
            .filter(|&i| i != r && self.alpha[i] != 0.0)
            .map(|i| (i, self.alpha[i]))
            .collect();
        for j in 0..m {
            let col = &mut self.binv[j * m..(j + 1) * m];
            let v = col[r];
            if v == 0.0 {
                continue;
            }
            let v = v / p;
            col[r] = v;
            for &(i, a) in &nz {
                col[i] -= a * v;
            }
        }
        Ok((StepOutcome::Progress, theta))
    }

    fn run_phase(&mut self) -> Result<(), LpError> {
        let mut degenerate = 0usize;
        let mut since_refresh = 0usize;
        let mut reinverted = false;
        loop {
            if self.iterations >= self.opts.max_iterations {
                return Err(LpError::IterationLimit(self.opts.max_iterations));
            }
            let bland = degenerate >= self.opts.degenerate_switch;
            let (outcome, theta) = self.iterate(bland)?;
            match outcome {
                StepOutcome::Optimal => {
                    self.refresh_basic_values();
                    if self.primal_infeasibility() <= 1e3 * self.opts.feasibility_tol {
                        return Ok(());
                    }
                    if reinverted {
                        return Err(LpError::Numerical(format!(
                            "basic values drift {:e} beyond bounds",
                            self.primal_infeasibility()
                        )));
                    }
                    self.reinvert()?;
                    self.refresh_basic_values();
                    self.clamp_basics_if_close();
                    reinverted = true;
                }
                StepOutcome::Progress => {
                    self.iterations += 1;
                    if theta <= 1e-12 {
                        degenerate += 1;
                    } else {
                        degenerate = 0;
                    }
                    since_refresh += 1;
                    if since_refresh >= self.opts.refresh_interval {
                        self.refresh_basic_values();
                        since_refresh = 0;
                    }
                }
            }
        }
    }

    fn clamp_basics_if_close(&mut self) {
        for &j in &self.basis {
            let tol = 1e-7;
            if self.x[j] < self.lower[j] && self.x[j] > self.lower[j] - tol {
                self.x[j] = self.lower[j];
            } else if self.x[j] > self.upper[j] && self.x[j] < self.upper[j] + tol {
                self.x[j] = self.upper[j];
            }
        }
    }

    pub fn solve(&mut self) -> Result<Solution, LpError> {
        if !self.phase_one_done {
            self.run_phase()?;
            let infeas: f64 = (self.n + self.m..self.x.len()).map(|j| self.x[j]).sum();
            if infeas > 1e-7 {
                return Err(LpError::Infeasible(infeas));
            }
            // pin artificials at zero; any still basic are degenerate
            for j in self.n + self.m..self.x.len() {
                self.lower[j] = 0.0;
                self.upper[j] = 0.0;
                if !matches!(self.status[j], Status::Basic(_)) {
                    self.x[j] = 0.0;
                    self.status[j] = Status::AtLower;
                }
            }
            self.phase_one_done = true;
            self.load_phase_costs();
        }
        self.run_phase()?;
        let x = self.x[..self.n].to_vec();
        let objective: f64 = self.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
        Ok(Solution {
            objective,
            x,
            iterations: self.iterations,
        })
    }
}

/// Solves `problem` from scratch and checks the returned point against it.
pub fn solve(problem: &Problem) -> Result<Solution, LpError> {
    let mut s = Simplex::new(problem, SimplexOptions::default())?;
    let sol = s.solve()?;
    let viol = problem.max_violation(&sol.x);
    if viol > 1e-7 {
        return Err(LpError::Numerical(format!(
            "solution violates the model by {viol:e}"
        )));
    }
    Ok(sol)
}
