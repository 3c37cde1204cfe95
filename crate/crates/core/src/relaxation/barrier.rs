//! Primal log-barrier interior-point method for small dense convex programs.
//!
//! Solves `min c'x` subject to strict box bounds, linear equalities, linear
//! inequalities and "rate" inequalities of the form
//! `k + sum_i d_i x_i - x_t log2(1 + gain * x_a / x_t) <= 0`, whose last term is
//! the (concave) perspective of a Shannon rate.

use std::f64::consts::LN_2;

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, PartialEq)]
pub enum Constraint {
    /// `sum terms <= rhs`.
    Linear { terms: Vec<(usize, f64)>, rhs: f64 },
    /// `constant + sum demand - time * log2(1 + gain * energy / time) <= 0`.
    Rate { constant: f64, demand: Vec<(usize, f64)>, time: usize, energy: usize, gain: f64 },
}

/// `time * log2(1 + gain * energy / time)` and its gradient and Hessian in `(time, energy)`.
#[derive(Debug, Clone, Copy)]
struct PerspectiveEval {
    value: f64,
    d_time: f64,
    d_energy: f64,
    /// Hessian is `-curv * v v'` with `v = (u, -gain)`.
    curv: f64,
    u: f64,
}

fn perspective(tau: f64, a: f64, gain: f64) -> PerspectiveEval {
    let u = gain * a / tau;
    let l = u.ln_1p();
    PerspectiveEval {
        value: tau * l / LN_2,
        d_time: (l - u / (1.0 + u)) / LN_2,
        d_energy: gain / ((1.0 + u) * LN_2),
        curv: 1.0 / (LN_2 * tau * (1.0 + u) * (1.0 + u)),
        u,
    }
}

impl Constraint {
    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            Constraint::Linear { terms, rhs } => terms.iter().map(|&(i, c)| c * x[i]).sum::<f64>() - rhs,
            Constraint::Rate { constant, demand, time, energy, gain } => {
                constant + demand.iter().map(|&(i, c)| c * x[i]).sum::<f64>()
                    - perspective(x[*time], x[*energy], *gain).value
            }
        }
    }

    /// Adds the barrier term's gradient and Hessian, given `slack = -g(x) > 0`.
    fn accumulate(&self, x: &[f64], slack: f64, grad: &mut DVector<f64>, hess: &mut DMatrix<f64>) {
        let mut dg: Vec<(usize, f64)> = match self {
            Constraint::Linear { terms, .. } => terms.clone(),
            Constraint::Rate { demand, .. } => demand.clone(),
        };
        let mut curvature = None;
        if let Constraint::Rate { time, energy, gain, .. } = self {
            let p = perspective(x[*time], x[*energy], *gain);
            dg.push((*time, -p.d_time));
            dg.push((*energy, -p.d_energy));
            curvature = Some((*time, *energy, p.curv, p.u, *gain));
        }
        let inv = 1.0 / slack;
        for &(i, c) in &dg {
            grad[i] += c * inv;
        }
        let inv2 = inv * inv;
        for &(i, ci) in &dg {
            for &(j, cj) in &dg {
                hess[(i, j)] += ci * cj * inv2;
            }
        }
        // -h is convex with Hessian curv * v v'
        if let Some((t, a, curv, u, gain)) = curvature {
            let w = curv * inv;
            hess[(t, t)] += w * u * u;
            hess[(t, a)] -= w * u * gain;
            hess[(a, t)] -= w * u * gain;
            hess[(a, a)] += w * gain * gain;
        }
    }

    /// The same constraint with `-x[shift]` added to its left-hand side.
    fn shifted(&self, shift: usize) -> Constraint {
        match self {
            Constraint::Linear { terms, rhs } => {
                let mut terms = terms.clone();
                terms.push((shift, -1.0));
                Constraint::Linear { terms, rhs: *rhs }
            }
            Constraint::Rate { constant, demand, time, energy, gain } => {
                let mut demand = demand.clone();
                demand.push((shift, -1.0));
                Constraint::Rate { constant: *constant, demand, time: *time, energy: *energy, gain: *gain }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Equality {
    pub terms: Vec<(usize, f64)>,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Program {
    pub cost: Vec<f64>,
    /// Strict lower bounds; every variable needs one.
    pub lower: Vec<f64>,
    /// Strict upper bounds; `+inf` allowed.
    pub upper: Vec<f64>,
    pub constraints: Vec<Constraint>,
    pub equalities: Vec<Equality>,
    pub names: Vec<String>,
}

impl Program {
    pub fn num_vars(&self) -> usize {
        self.cost.len()
    }

    pub fn add_var(&mut self, name: String, cost: f64, lower: f64, upper: f64) -> usize {
        self.cost.push(cost);
        self.lower.push(lower);
        self.upper.push(upper);
        self.names.push(name);
        self.cost.len() - 1
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        self.cost.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Number of logarithmic barrier terms (the duality-gap multiplier).
    fn barrier_terms(&self) -> usize {
        self.constraints.len() + self.lower.len() + self.upper.iter().filter(|u| u.is_finite()).count()
    }

    fn strictly_feasible(&self, x: &[f64]) -> bool {
        x.iter().enumerate().all(|(i, &v)| v > self.lower[i] && v < self.upper[i])
            && self.constraints.iter().all(|c| c.value(x) < 0.0)
    }

    /// Barrier function `t c'x - sum log(slacks)`; `+inf` outside the interior.
    fn barrier(&self, x: &[f64], t: f64) -> f64 {
        let mut phi = t * self.objective(x);
        for (i, &v) in x.iter().enumerate() {
            let lo = v - self.lower[i];
            let hi = self.upper[i] - v;
            if !(lo > 0.0 && hi > 0.0) {
                return f64::INFINITY;
            }
            phi -= lo.ln();
            if hi.is_finite() {
                phi -= hi.ln();
            }
        }
        for c in &self.constraints {
            let s = -c.value(x);
            if !(s > 0.0) {
                return f64::INFINITY;
            }
            phi -= s.ln();
        }
        phi
    }

    fn derivatives(&self, x: &[f64], t: f64) -> (DVector<f64>, DMatrix<f64>) {
        let n = x.len();
        let mut grad = DVector::from_iterator(n, self.cost.iter().map(|c| t * c));
        let mut hess = DMatrix::zeros(n, n);
        for (i, &v) in x.iter().enumerate() {
            let lo = v - self.lower[i];
            grad[i] -= 1.0 / lo;
            hess[(i, i)] += 1.0 / (lo * lo);
            if self.upper[i].is_finite() {
                let hi = self.upper[i] - v;
                grad[i] += 1.0 / hi;
                hess[(i, i)] += 1.0 / (hi * hi);
            }
        }
        for c in &self.constraints {
            c.accumulate(x, -c.value(x), &mut grad, &mut hess);
        }
        (grad, hess)
    }

    fn equality_matrix(&self) -> DMatrix<f64> {
        let mut e = DMatrix::zeros(self.equalities.len(), self.num_vars());
        for (r, eq) in self.equalities.iter().enumerate() {
            for &(i, c) in &eq.terms {
                e[(r, i)] += c;
            }
        }
        e
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarrierOptions {
    /// Relative duality-gap target.
    pub tol: f64,
    /// Barrier parameter growth per outer iteration.
    pub mu: f64,
    pub max_outer: usize,
    pub max_newton: usize,
    /// Centering stops once half the squared Newton decrement is below this.
    pub centering_tol: f64,
}

impl Default for BarrierOptions {
    fn default() -> Self {
        Self { tol: 1e-6, mu: 20.0, max_outer: 80, max_newton: 2000, centering_tol: 1e-10 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Optimal,
    Infeasible,
    MaxIter,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BarrierResult {
    pub status: Status,
    pub x: Vec<f64>,
    pub objective: f64,
    /// `objective - m / t`: a lower bound on the optimum once centered.
    pub lower_bound: f64,
    /// Duality gap `m / t` relative to `max(|objective|, 1e-3)`.
    pub relative_gap: f64,
    pub newton_iterations: usize,
}

enum Stop {
    Converged,
    Early,
    Exhausted,
}

struct Run {
    x: Vec<f64>,
    t: f64,
    newton: usize,
    stop: Stop,
}

/// Damped Newton step for `min phi(x)` s.t. `E dx = 0`, with Jacobi scaling.
fn newton_direction(grad: &DVector<f64>, hess: &DMatrix<f64>, e: &DMatrix<f64>) -> Option<DVector<f64>> {
    let n = grad.len();
    let d = DVector::from_iterator(n, (0..n).map(|i| 1.0 / hess[(i, i)].max(1e-300).sqrt()));
    let mut h = hess.clone();
    for i in 0..n {
        for j in 0..n {
            h[(i, j)] *= d[i] * d[j];
        }
    }
    let g = grad.component_mul(&d);
    let mut ridge = 0.0;
    let chol = loop {
        let mut hr = h.clone();
        for i in 0..n {
            hr[(i, i)] += ridge;
        }
        if let Some(c) = hr.cholesky() {
            break c;
        }
        ridge = if ridge == 0.0 { 1e-12 } else { ridge * 100.0 };
        if ridge > 1.0 {
            return None;
        }
    };
    let mut dx = -chol.solve(&g);
    if e.nrows() > 0 {
        let es = e * DMatrix::from_diagonal(&d);
        let hinv_et = chol.solve(&es.transpose());
        let schur = &es * &hinv_et;
        let rhs = &es * &dx;
        let nu = schur.lu().solve(&rhs)?;
        dx -= hinv_et * nu;
    }
    Some(dx.component_mul(&d))
}

fn run_barrier(prog: &Program, x0: &[f64], t0: f64, opts: &BarrierOptions, early: Option<(usize, f64)>) -> Run {
    let e = prog.equality_matrix();
    let m = prog.barrier_terms() as f64;
    let mut x = x0.to_vec();
    let mut t = t0;
    let mut newton = 0;
    for _ in 0..opts.max_outer {
        loop {
            if newton >= opts.max_newton {
                return Run { x, t, newton, stop: Stop::Exhausted };
            }
            let (grad, hess) = prog.derivatives(&x, t);
            let Some(dx) = newton_direction(&grad, &hess, &e) else { break };
            let slope = grad.dot(&dx);
            if -slope / 2.0 <= opts.centering_tol || !slope.is_finite() {
                break;
            }
            newton += 1;
            let phi0 = prog.barrier(&x, t);
            let mut step = 1.0;
            for (i, &v) in x.iter().enumerate() {
                if dx[i] < 0.0 {
                    step = f64::min(step, 0.99 * (prog.lower[i] - v) / dx[i]);
                } else if dx[i] > 0.0 && prog.upper[i].is_finite() {
                    step = f64::min(step, 0.99 * (prog.upper[i] - v) / dx[i]);
                }
            }
            let mut accepted = false;
            let mut trial = x.clone();
            while step > 1e-16 {
                for (i, v) in trial.iter_mut().enumerate() {
                    *v = x[i] + step * dx[i];
                }
                let phi = prog.barrier(&trial, t);
                if phi.is_finite() && phi <= phi0 + 0.01 * step * slope {
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            if !accepted {
                break;
            }
            x = trial;
            if let Some((idx, below)) = early {
                if x[idx] < below {
                    return Run { x, t, newton, stop: Stop::Early };
                }
            }
        }
        let obj = prog.objective(&x);
        if m / t <= opts.tol * obj.abs().max(1e-3) {
            return Run { x, t, newton, stop: Stop::Converged };
        }
        t *= opts.mu;
    }
    Run { x, t, newton, stop: Stop::Exhausted }
}

/// Finds a strictly feasible point by minimizing the largest constraint value.
fn phase_one(prog: &Program, x0: &[f64], opts: &BarrierOptions) -> (Option<Vec<f64>>, usize) {
    let worst = prog.constraints.iter().map(|c| c.value(x0)).fold(f64::NEG_INFINITY, f64::max);
    let mut aux = prog.clone();
    aux.cost = vec![0.0; prog.num_vars()];
    let s = aux.add_var("phase1_slack".into(), 1.0, -1.0 - worst.abs(), f64::INFINITY);
    aux.constraints = prog.constraints.iter().map(|c| c.shifted(s)).collect();
    let mut start = x0.to_vec();
    start.push(worst + 1.0f64.max(worst.abs()));
    let aux_opts = BarrierOptions { tol: 1e-9, ..*opts };
    let run = run_barrier(&aux, &start, 1.0, &aux_opts, Some((s, 0.0)));
    let mut x = run.x;
    x.truncate(prog.num_vars());
    match run.stop {
        Stop::Early if prog.strictly_feasible(&x) => (Some(x), run.newton),
        _ => (None, run.newton),
    }
}

/// Solves the program from `x0`, which must satisfy the equalities and lie
/// strictly inside the box; inequality feasibility is not required.
pub fn solve(prog: &Program, x0: &[f64], opts: &BarrierOptions) -> BarrierResult {
    let mut newton = 0;
    let start = if prog.strictly_feasible(x0) {
        x0.to_vec()
    } else {
        let (found, iters) = phase_one(prog, x0, opts);
        newton += iters;
        match found {
            Some(x) => x,
            None => {
                return BarrierResult {
                    status: Status::Infeasible,
                    objective: f64::INFINITY,
                    lower_bound: f64::INFINITY,
                    relative_gap: f64::INFINITY,
                    x: x0.to_vec(),
                    newton_iterations: newton,
                }
            }
        }
    };
    let m = prog.barrier_terms() as f64;
    let t0 = m / prog.objective(&start).abs().max(1e-6);
    let run = run_barrier(prog, &start, t0, opts, None);
    let objective = prog.objective(&run.x);
    let gap = m / run.t;
    BarrierResult {
        status: if matches!(run.stop, Stop::Converged) { Status::Optimal } else { Status::MaxIter },
        lower_bound: objective - gap,
        relative_gap: gap / objective.abs().max(1e-3),
        objective,
        x: run.x,
        newton_iterations: newton + run.newton,
    }
}
