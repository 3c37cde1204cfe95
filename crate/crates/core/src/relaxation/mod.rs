//! Continuous relaxation of the joint relay-selection and scheduling problem.
//!
//! Binary relay choices `b[i][j]` become fractions in `(0, 1)`. Energies
//! replace powers as variables, which turns each rate constraint into the
//! perspective `tau * log2(1 + gamma * a / tau)`, jointly concave. The power
//! cap `A <= Pmax * b * tau` is bilinear; its McCormick envelope over
//! `0 <= tau <= tau_ub` reduces, after eliminating the product variable, to the
//! two linear cuts `A <= Pmax * tau` and `A <= Pmax * tau_ub * b`.
//!
//! All quantities are scaled: times by `T_ref` (the largest slot bound) and
//! each node's energy by what it harvests in `T_ref` seconds, so the harvesting
//! constraints read `a <= tau0`.

pub mod barrier;

use std::fmt;

use thiserror::Error;

use crate::net_model::NetworkInstance;
pub use barrier::{BarrierOptions, Status};
use barrier::{Constraint, Equality, Program};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RelaxError {
    #[error("fixed mask has {got} rows, expected {expected}")]
    MaskLength { expected: usize, got: usize },
    #[error("source {source_index} is forced to relay {relay}, but only {k} relays exist")]
    MaskRange { source_index: usize, relay: usize, k: usize },
    #[error("slot bound `{0}` must be positive and finite")]
    Bound(&'static str),
}

/// `tau * W * log2(1 + (a / tau) * g / (W * N0))`: bits a slot of `tau` seconds
/// carries with `a` joules. Jointly concave, and 0 at `tau = 0`.
pub fn perspective_rate(tau: f64, a: f64, g: f64, w: f64, n0: f64) -> f64 {
    if tau <= 0.0 {
        return 0.0;
    }
    tau * w * (a * g / (tau * w * n0)).ln_1p() / std::f64::consts::LN_2
}

/// Range of `w = b * tau` allowed by the McCormick envelope with `0 <= tau <= tau_ub`, `0 <= b <= 1`.
pub fn mccormick_interval(tau: f64, b: f64, tau_ub: f64) -> (f64, f64) {
    let lo = f64::max(0.0, tau + tau_ub * (b - 1.0));
    let hi = f64::min(tau, tau_ub * b);
    (lo, hi)
}

/// Upper bounds on every slot, in seconds.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotBounds {
    pub tau0: f64,
    /// `src[i][j]`, `j = 0` for the direct link.
    pub src: Vec<Vec<f64>>,
    pub relay: Vec<f64>,
}

impl SlotBounds {
    /// Every slot bounded by the same value, typically an incumbent schedule length.
    pub fn uniform(n: usize, k: usize, ub: f64) -> Self {
        Self { tau0: ub, src: vec![vec![ub; k + 1]; n], relay: vec![ub; k] }
    }

    fn max(&self) -> f64 {
        self.src.iter().flatten().chain(&self.relay).fold(self.tau0, |m, &v| m.max(v))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct EntryVars {
    tau: usize,
    energy: usize,
    /// Fraction variable, absent when the entry is forced to 1.
    frac: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct RelayVars {
    tau: usize,
    energy: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelaxedModel {
    pub n: usize,
    pub k: usize,
    /// Per source: `Some(j)` if forced to relay `j` (0 = direct), either by
    /// the mask or because no other relay is admissible.
    pub fixed: Vec<Option<usize>>,
    /// Seconds per unit of scaled time.
    pub time_scale: f64,
    /// Some source has no admissible relay, so the relaxation is infeasible.
    empty_row: bool,
    tau0: usize,
    src: Vec<Vec<Option<EntryVars>>>,
    relay: Vec<Option<RelayVars>>,
    program: Program,
    start: Vec<f64>,
}

/// Builds the relaxation with the given sources forced to relays.
///
/// With no relays every source is necessarily direct, so rows are forced.
pub fn build_relaxation(
    inst: &NetworkInstance<f64>,
    fixed: &[Option<usize>],
    bounds: &SlotBounds,
) -> Result<RelaxedModel, RelaxError> {
    let n = inst.num_sources();
    let k = inst.num_relays();
    if fixed.len() != n {
        return Err(RelaxError::MaskLength { expected: n, got: fixed.len() });
    }
    for (i, f) in fixed.iter().enumerate() {
        if let Some(j) = *f {
            if j > k {
                return Err(RelaxError::MaskRange { source_index: i, relay: j, k });
            }
        }
    }
    let ok = |v: f64| v > 0.0 && v.is_finite();
    if !ok(bounds.tau0) || bounds.src.iter().flatten().any(|&v| !ok(v)) || bounds.relay.iter().any(|&v| !ok(v)) {
        return Err(RelaxError::Bound("tau_ub"));
    }
    if bounds.src.len() != n || bounds.src.iter().any(|r| r.len() != k + 1) || bounds.relay.len() != k {
        return Err(RelaxError::Bound("tau_ub dimensions"));
    }
    let fixed: Vec<Option<usize>> = fixed.iter().map(|f| if k == 0 { Some(0) } else { *f }).collect();

    let p = &inst.params;
    let c = &inst.channels;
    let scale = bounds.max();
    let noise = p.bandwidth_hz * p.noise_psd_w_per_hz;
    let demand = |i: usize| p.demands_bits[i] / (p.bandwidth_hz * scale);
    let src_harvest = |i: usize| p.zeta_src[i] * p.ap_power_w * c.h_ap_src[i];
    let rel_harvest = |r: usize| p.zeta_rel[r] * p.ap_power_w * c.h_ap_rel[r];
    let (allowed, fixed) = admissible_entries(inst, &fixed, bounds, scale);
    let mut prog = Program::default();
    let mut start = Vec::new();
    let tau0_ub = bounds.tau0 / scale;
    let tau0 = prog.add_var("tau0".into(), 1.0, 0.0, tau0_ub);
    start.push(0.5 * tau0_ub);

    let mut src = vec![vec![None; k + 1]; n];
    for i in 0..n {
        let harvest = src_harvest(i);
        let cap = p.max_ul_power_w / harvest;
        let candidates = &allowed[i];
        let share = 1.0 / candidates.len() as f64;
        for &j in candidates {
            let g = if j == 0 { c.g_src_ap[i] } else { c.g_src_rel[i][j - 1] };
            let gamma = g * harvest / noise;
            let t_ub = bounds.src[i][j] / scale;
            let tau = prog.add_var(format!("tau[{i}][{j}]"), 1.0, 0.0, t_ub);
            let energy = prog.add_var(format!("a[{i}][{j}]"), 0.0, 0.0, tau0_ub);
            let frac = fixed[i].is_none().then(|| prog.add_var(format!("b[{i}][{j}]"), 0.0, 0.0, 1.0));
            let t_start = 0.5 * t_ub;
            start.push(t_start);
            let mut a_start = 0.25 * tau0_ub;
            if cap.is_finite() {
                a_start = a_start.min(0.5 * cap * t_start);
            }
            if frac.is_some() {
                a_start = a_start.min(0.5 * cap * t_ub * share);
            }
            start.push(a_start);
            if frac.is_some() {
                start.push(share);
            }

            prog.constraints.push(Constraint::Linear { terms: vec![(energy, 1.0), (tau0, -1.0)], rhs: 0.0 });
            if cap.is_finite() {
                prog.constraints
                    .push(Constraint::Linear { terms: vec![(energy, 1.0), (tau, -cap)], rhs: 0.0 });
                if let Some(b) = frac {
                    prog.constraints
                        .push(Constraint::Linear { terms: vec![(energy, 1.0), (b, -cap * t_ub)], rhs: 0.0 });
                }
            }
            let (constant, terms) = match frac {
                Some(b) => (0.0, vec![(b, demand(i))]),
                None => (demand(i), vec![]),
            };
            prog.constraints.push(Constraint::Rate { constant, demand: terms, time: tau, energy, gain: gamma });
            src[i][j] = Some(EntryVars { tau, energy, frac });
        }
        if fixed[i].is_none() && !candidates.is_empty() {
            let terms = src[i].iter().flatten().map(|e| (e.frac.expect("free row"), 1.0)).collect();
            prog.equalities.push(Equality { terms, rhs: 1.0 });
        }
    }

    let mut relay = vec![None; k];
    for r in 0..k {
        let j = r + 1;
        let forced: Vec<usize> = (0..n).filter(|&i| fixed[i] == Some(j)).collect();
        let free: Vec<(usize, usize)> =
            (0..n).filter_map(|i| src[i][j].and_then(|e| e.frac.map(|b| (i, b)))).collect();
        if forced.is_empty() && free.is_empty() {
            continue;
        }
        let harvest = rel_harvest(r);
        let cap = p.max_ul_power_w / harvest;
        let gamma = c.g_rel_ap[r] * harvest / noise;
        let t_ub = bounds.relay[r] / scale;
        let tau = prog.add_var(format!("tau_r[{j}]"), 1.0, 0.0, t_ub);
        let energy = prog.add_var(format!("a_r[{j}]"), 0.0, 0.0, tau0_ub);
        let t_start = 0.5 * t_ub;
        start.push(t_start);
        let load_start = forced.len() as f64 + free.iter().map(|_| 1.0 / (k + 1) as f64).sum::<f64>();
        let mut a_start = 0.25 * tau0_ub;
        if cap.is_finite() {
            a_start = a_start.min(0.5 * cap * t_start);
            if forced.is_empty() {
                a_start = a_start.min(0.5 * cap * t_ub * load_start);
            }
        }
        start.push(a_start);

        prog.constraints.push(Constraint::Linear { terms: vec![(energy, 1.0), (tau0, -1.0)], rhs: 0.0 });
        if cap.is_finite() {
            prog.constraints.push(Constraint::Linear { terms: vec![(energy, 1.0), (tau, -cap)], rhs: 0.0 });
            if forced.is_empty() {
                let mut terms = vec![(energy, 1.0)];
                terms.extend(free.iter().map(|&(_, b)| (b, -cap * t_ub)));
                prog.constraints.push(Constraint::Linear { terms, rhs: 0.0 });
            }
        }
        let constant: f64 = forced.iter().map(|&i| demand(i)).sum();
        let terms = free.iter().map(|&(i, b)| (b, demand(i))).collect();
        prog.constraints.push(Constraint::Rate { constant, demand: terms, time: tau, energy, gain: gamma });
        relay[r] = Some(RelayVars { tau, energy });
    }

    let empty_row = allowed.iter().any(|a| a.is_empty());
    Ok(RelaxedModel { n, k, fixed, time_scale: scale, empty_row, tau0, src, relay, program: prog, start })
}

/// Initial slope in `b` of the best rate an entry can reach under the cut
/// `a <= cap * t_ub * b`; a fraction with `demand >= slope` must be zero.
fn rate_slope(gamma: f64, cap: f64, t_ub: f64) -> f64 {
    gamma * cap * t_ub / std::f64::consts::LN_2
}

/// Per source, the relays whose fraction can be positive in the relaxation,
/// and the mask extended by rows left with a single choice.
///
/// A free entry on a path whose cut-limited rate grows no faster than its
/// demand admits only `b = 0`, which leaves the feasible set without an
/// interior. No integral assignment uses such an entry, since concavity puts
/// the rate at `b = 1` below the initial slope.
fn admissible_entries(
    inst: &NetworkInstance<f64>,
    fixed: &[Option<usize>],
    bounds: &SlotBounds,
    scale: f64,
) -> (Vec<Vec<usize>>, Vec<Option<usize>>) {
    let p = &inst.params;
    let c = &inst.channels;
    let (n, k) = (inst.num_sources(), inst.num_relays());
    let noise = p.bandwidth_hz * p.noise_psd_w_per_hz;
    let demand = |i: usize| p.demands_bits[i] / (p.bandwidth_hz * scale);
    let mut allowed: Vec<Vec<usize>> =
        fixed.iter().map(|f| f.map_or_else(|| (0..=k).collect(), |j| vec![j])).collect();
    for i in (0..n).filter(|&i| fixed[i].is_none()) {
        let harvest = p.zeta_src[i] * p.ap_power_w * c.h_ap_src[i];
        let cap = p.max_ul_power_w / harvest;
        if !cap.is_finite() {
            continue;
        }
        allowed[i].retain(|&j| {
            let g = if j == 0 { c.g_src_ap[i] } else { c.g_src_rel[i][j - 1] };
            rate_slope(g * harvest / noise, cap, bounds.src[i][j] / scale) > demand(i)
        });
    }
    loop {
        let mut changed = false;
        for r in 0..k {
            let j = r + 1;
            let carries = |a: &Vec<usize>| a.contains(&j);
            if allowed.iter().any(|a| a.len() == 1 && a[0] == j) || !allowed.iter().any(carries) {
                continue;
            }
            let harvest = p.zeta_rel[r] * p.ap_power_w * c.h_ap_rel[r];
            let cap = p.max_ul_power_w / harvest;
            if !cap.is_finite() {
                continue;
            }
            let slope = rate_slope(c.g_rel_ap[r] * harvest / noise, cap, bounds.relay[r] / scale);
            if (0..n).filter(|&i| carries(&allowed[i])).all(|i| demand(i) >= slope) {
                for a in allowed.iter_mut() {
                    a.retain(|&x| x != j);
                }
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let fixed = allowed.iter().map(|a| if a.len() == 1 { Some(a[0]) } else { None }).collect();
    (allowed, fixed)
}

impl RelaxedModel {
    pub fn num_vars(&self) -> usize {
        self.program.num_vars()
    }

    pub fn num_constraints(&self) -> usize {
        self.program.constraints.len() + self.program.equalities.len()
    }

    pub fn program(&self) -> &Program {
        &self.program
    }
}

impl fmt::Display for RelaxedModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = &self.program;
        let name = |i: usize| p.names[i].as_str();
        let lin = |terms: &[(usize, f64)]| {
            terms.iter().map(|&(i, c)| format!("{c:+.6e}*{}", name(i))).collect::<Vec<_>>().join(" ")
        };
        writeln!(f, "# time scale {:.6e} s, {} sources, {} relays", self.time_scale, self.n, self.k)?;
        let obj: Vec<&str> = (0..p.num_vars()).filter(|&i| p.cost[i] != 0.0).map(name).collect();
        writeln!(f, "minimize {}", obj.join(" + "))?;
        writeln!(f, "subject to")?;
        for c in &p.constraints {
            match c {
                Constraint::Linear { terms, rhs } => writeln!(f, "  {} <= {rhs:.6e}", lin(terms))?,
                Constraint::Rate { constant, demand, time, energy, gain } => writeln!(
                    f,
                    "  {constant:.6e} {} - {t}*log2(1 + {gain:.6e}*{a}/{t}) <= 0",
                    lin(demand),
                    t = name(*time),
                    a = name(*energy)
                )?,
            }
        }
        for e in &p.equalities {
            writeln!(f, "  {} = {:.6e}", lin(&e.terms), e.rhs)?;
        }
        writeln!(f, "bounds")?;
        for i in 0..p.num_vars() {
            writeln!(f, "  {:.6e} < {} < {:.6e}", p.lower[i], name(i), p.upper[i])?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelaxedSolution {
    pub status: Status,
    /// Lower bound on the schedule length of every completion of the mask, in seconds.
    pub objective: f64,
    /// Objective at the returned primal point, in seconds.
    pub primal_objective: f64,
    pub kkt_residual: f64,
    pub tau0: f64,
    /// `b[i][j]`; forced rows are exactly 0/1.
    pub b: Vec<Vec<f64>>,
    pub tau_src: Vec<Vec<f64>>,
    /// Energies in joules.
    pub energy_src: Vec<Vec<f64>>,
    pub tau_relay: Vec<f64>,
    pub energy_relay: Vec<f64>,
    pub newton_iterations: usize,
}

impl RelaxedSolution {
    /// Largest `b` strictly between the integrality thresholds, with its position.
    pub fn most_fractional(&self, fixed: &[Option<usize>], integral_tol: f64) -> Option<(usize, usize, f64)> {
        let mut best: Option<(usize, usize, f64)> = None;
        for (i, row) in self.b.iter().enumerate() {
            if fixed[i].is_some() || row.iter().any(|&v| v >= 1.0 - integral_tol) {
                continue;
            }
            for (j, &v) in row.iter().enumerate() {
                if best.map_or(true, |(_, _, bv)| v > bv) {
                    best = Some((i, j, v));
                }
            }
        }
        best
    }

    /// Per source, the relay with the largest fraction (ties to the smaller index).
    pub fn argmax_assignment(&self) -> Vec<usize> {
        self.b
            .iter()
            .map(|row| {
                row.iter().enumerate().fold((0, f64::NEG_INFINITY), |best, (j, &v)| if v > best.1 { (j, v) } else { best }).0
            })
            .collect()
    }

    pub fn is_integral(&self, tol: f64) -> bool {
        self.b.iter().all(|row| row.iter().any(|&v| v >= 1.0 - tol))
    }
}

/// Slot values below this many seconds are reported as zero.
const ZERO_TIME: f64 = 1e-9;

pub fn solve_relaxation(model: &RelaxedModel, inst: &NetworkInstance<f64>, opts: &BarrierOptions) -> RelaxedSolution {
    let res = if model.empty_row {
        barrier::BarrierResult {
            status: Status::Infeasible,
            x: model.start.clone(),
            objective: f64::INFINITY,
            lower_bound: f64::INFINITY,
            relative_gap: f64::INFINITY,
            newton_iterations: 0,
        }
    } else {
        barrier::solve(&model.program, &model.start, opts)
    };
    let (n, k) = (model.n, model.k);
    let scale = model.time_scale;
    let p = &inst.params;
    let c = &inst.channels;
    let time = |v: f64| {
        let s = v * scale;
        if s < ZERO_TIME {
            0.0
        } else {
            s
        }
    };
    let x = &res.x;
    let mut b = vec![vec![0.0; k + 1]; n];
    let mut tau_src = vec![vec![0.0; k + 1]; n];
    let mut energy_src = vec![vec![0.0; k + 1]; n];
    for i in 0..n {
        let harvest = p.zeta_src[i] * p.ap_power_w * c.h_ap_src[i] * scale;
        for j in 0..=k {
            if let Some(e) = model.src[i][j] {
                b[i][j] = e.frac.map_or(1.0, |v| x[v]);
                tau_src[i][j] = time(x[e.tau]);
                energy_src[i][j] = x[e.energy] * harvest;
            }
        }
    }
    let mut tau_relay = vec![0.0; k];
    let mut energy_relay = vec![0.0; k];
    for r in 0..k {
        if let Some(v) = model.relay[r] {
            tau_relay[r] = time(x[v.tau]);
            energy_relay[r] = x[v.energy] * p.zeta_rel[r] * p.ap_power_w * c.h_ap_rel[r] * scale;
        }
    }
    RelaxedSolution {
        status: res.status,
        objective: res.lower_bound * scale,
        primal_objective: res.objective * scale,
        kkt_residual: res.relative_gap,
        tau0: time(x[model.tau0]),
        b,
        tau_src,
        energy_src,
        tau_relay,
        energy_relay,
        newton_iterations: res.newton_iterations,
    }
}
