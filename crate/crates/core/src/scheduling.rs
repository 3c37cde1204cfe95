//! Shortest TDMA schedule for a fixed set of links sharing one harvesting slot.
//!
//! For a fixed harvesting time `t0`, each link independently takes the
//! shortest uplink slot it can fund, so the total is
//! `g(t0) = t0 + sum_i tau_i(t0)`, a convex function of `t0`. [`powmu`] bisects
//! on the sign of `g'` between the largest individual optimum (below which
//! some link is always worse off) and the largest max-power corner (above
//! which every slot is already at its floor).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::net_model::ModelError;
use crate::numerics::{self, NumericsError};
use crate::single_source::{self, ddot_solution, optimal_single, v_curve, v_curve_derivative, LinkSolution, SourceLink};
use crate::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScheduleError {
    #[error("harvesting time {tau0} s cannot fund link {link}: needs more than {min} s")]
    Infeasible { link: usize, tau0: f64, min: f64 },
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchedulingInstance<T> {
    pub links: Vec<SourceLink<T>>,
    pub pmax: T,
}

impl<T: Scalar> SchedulingInstance<T> {
    pub fn new(links: Vec<SourceLink<T>>, pmax: T) -> Result<Self, ModelError> {
        if links.is_empty() {
            return Err(ModelError::InvalidParam { name: "links", reason: "at least one link is required".into() });
        }
        if !(pmax > T::zero()) {
            return Err(ModelError::InvalidParam { name: "pmax", reason: format!("must be positive, got {pmax}") });
        }
        Ok(Self { links, pmax })
    }

    pub fn len(&self) -> usize {
        self.links.len()
    }

    pub fn is_empty(&self) -> bool {
        self.links.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule<T> {
    pub tau0_s: T,
    pub tau_it_s: Vec<T>,
    pub p_tx_w: Vec<T>,
    pub total_s: T,
}

impl<T: Scalar> Schedule<T> {
    fn empty(n: usize) -> Self {
        Self { tau0_s: T::zero(), tau_it_s: vec![T::zero(); n], p_tx_w: vec![T::zero(); n], total_s: T::zero() }
    }
}

/// Shortest uplink slot for a link given the harvesting time `tau0`.
///
/// The slot is pinned at the max-power corner once `tau0` reaches the
/// corner's harvesting time; below it the slot solves `V(tau) = tau0`.
pub fn subproblem_it_time<T: Scalar>(tau0: T, link: &SourceLink<T>, pmax: T) -> Result<T, ScheduleError> {
    if link.demand == T::zero() {
        return Ok(T::zero());
    }
    let corner = ddot_solution(link, pmax);
    if tau0 >= corner.tau0 {
        return Ok(corner.tau_it);
    }
    let tangent = single_source::dot_solution(link)?;
    if tau0 == tangent.tau0 {
        return Ok(tangent.tau_it);
    }
    let floor = link.min_harvest_time();
    if !(tau0 > floor) {
        return Err(ScheduleError::Infeasible { link: 0, tau0: tau0.as_f64(), min: floor.as_f64() });
    }
    let f = |tau: T| (v_curve(tau, link) - tau0, v_curve_derivative(tau, link));
    let two = T::lit(2.0);
    let mut lo = corner.tau_it;
    if !(lo > T::zero()) {
        lo = link.demand_nats();
        while !(f(lo).0 > T::zero()) {
            lo = lo / two;
        }
    }
    let mut hi = lo.max(tangent.tau_it) * two;
    while f(hi).0 > T::zero() {
        lo = hi;
        hi = hi * two;
    }
    Ok(numerics::newton_bracketed(f, lo, hi, T::lit(4.0) * T::epsilon(), 200)?)
}

fn relabel<T>(r: Result<T, ScheduleError>, index: usize) -> Result<T, ScheduleError> {
    r.map_err(|e| match e {
        ScheduleError::Infeasible { tau0, min, .. } => ScheduleError::Infeasible { link: index, tau0, min },
        other => other,
    })
}

/// Total schedule length when the harvesting slot lasts `tau0`.
pub fn g_value<T: Scalar>(tau0: T, inst: &SchedulingInstance<T>) -> Result<T, ScheduleError> {
    let mut total = tau0;
    for (i, link) in inst.links.iter().enumerate() {
        total += relabel(subproblem_it_time(tau0, link, inst.pmax), i)?;
    }
    Ok(total)
}

/// Right-hand derivative of [`g_value`].
pub fn g_derivative<T: Scalar>(tau0: T, inst: &SchedulingInstance<T>) -> Result<T, ScheduleError> {
    let mut d = T::one();
    for (i, link) in inst.links.iter().enumerate() {
        if link.demand == T::zero() || tau0 >= ddot_solution(link, inst.pmax).tau0 {
            continue;
        }
        let tau = relabel(subproblem_it_time(tau0, link, inst.pmax), i)?;
        d += T::one() / v_curve_derivative(tau, link);
    }
    Ok(d)
}

/// Search interval for the optimal harvesting time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarvestBounds<T> {
    /// Largest individually optimal harvesting time.
    pub lower: T,
    /// Largest max-power corner harvesting time (may be `+inf`).
    pub upper: T,
}

pub fn harvest_bounds<T: Scalar>(inst: &SchedulingInstance<T>) -> Result<HarvestBounds<T>, ScheduleError> {
    let mut lower = T::zero();
    let mut upper = T::zero();
    for link in inst.links.iter().filter(|l| l.demand > T::zero()) {
        lower = lower.max(optimal_single(link, inst.pmax)?.tau0);
        upper = upper.max(ddot_solution(link, inst.pmax).tau0);
    }
    Ok(HarvestBounds { lower, upper })
}

/// Bisection tolerance on the harvesting time for a bracket ending at `ub`.
///
/// One nanosecond, tightened for schedules so short that a nanosecond
/// would be a visible fraction of them.
pub fn harvest_tolerance<T: Scalar>(ub: T) -> T {
    T::lit(1e-9).min(T::lit(1e-6) * ub).max(T::tol_floor(ub))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowmuReport<T> {
    pub schedule: Schedule<T>,
    pub iterations: usize,
    pub lower: T,
    pub upper: T,
    pub tolerance: T,
}

fn build_schedule<T: Scalar>(tau0: T, inst: &SchedulingInstance<T>) -> Result<Schedule<T>, ScheduleError> {
    let mut tau_it_s = Vec::with_capacity(inst.len());
    let mut p_tx_w = Vec::with_capacity(inst.len());
    for (i, link) in inst.links.iter().enumerate() {
        let tau = relabel(subproblem_it_time(tau0, link, inst.pmax), i)?;
        let p = if tau > T::zero() { inst.pmax.min(link.harvest_power() * tau0 / tau) } else { T::zero() };
        tau_it_s.push(tau);
        p_tx_w.push(p);
    }
    let total_s = tau0 + tau_it_s.iter().copied().sum::<T>();
    Ok(Schedule { tau0_s: tau0, tau_it_s, p_tx_w, total_s })
}

fn from_single<T: Scalar>(n: usize, index: usize, sol: &LinkSolution<T>) -> Schedule<T> {
    let mut s = Schedule::empty(n);
    s.tau0_s = sol.tau0;
    s.tau_it_s[index] = sol.tau_it;
    s.p_tx_w[index] = sol.p_tx;
    s.total_s = sol.total();
    s
}

/// Optimal schedule for the link set.
pub fn powmu<T: Scalar>(inst: &SchedulingInstance<T>) -> Result<Schedule<T>, ScheduleError> {
    powmu_detailed(inst).map(|r| r.schedule)
}

pub fn powmu_detailed<T: Scalar>(inst: &SchedulingInstance<T>) -> Result<PowmuReport<T>, ScheduleError> {
    let n = inst.len();
    let active: Vec<usize> = (0..n).filter(|&i| inst.links[i].demand > T::zero()).collect();
    match active.as_slice() {
        [] => {
            return Ok(PowmuReport {
                schedule: Schedule::empty(n),
                iterations: 0,
                lower: T::zero(),
                upper: T::zero(),
                tolerance: T::zero(),
            })
        }
        [i] => {
            let sol = optimal_single(&inst.links[*i], inst.pmax)?;
            return Ok(PowmuReport {
                schedule: from_single(n, *i, &sol),
                iterations: 0,
                lower: sol.tau0,
                upper: sol.tau0,
                tolerance: T::zero(),
            });
        }
        _ => {}
    }

    let bounds = harvest_bounds(inst)?;
    let lb0 = bounds.lower;
    let mut ub = bounds.upper;
    let two = T::lit(2.0);
    if ub.is_infinite() {
        ub = lb0 * two;
        while g_derivative(ub, inst)? < T::zero() {
            ub = ub * two;
        }
    }
    let eps = harvest_tolerance(ub);
    let mut lb = lb0;
    let mut iterations = 0;
    while ub - lb > two * eps {
        let mid = (lb + ub) / two;
        if mid <= lb || mid >= ub {
            break;
        }
        iterations += 1;
        if g_derivative(mid, inst)? < T::zero() {
            lb = mid;
        } else {
            ub = mid;
        }
    }
    let mid = (lb + ub) / two;
    let at_mid = build_schedule(mid, inst)?;
    let at_lb = build_schedule(lb0, inst)?;
    let schedule = if at_lb.total_s <= at_mid.total_s { at_lb } else { at_mid };
    Ok(PowmuReport { schedule, iterations, lower: lb0, upper: bounds.upper, tolerance: eps })
}

/// Harvests for the largest individually optimal time, then gives each link
/// its shortest slot for that harvesting time.
pub fn max_eh<T: Scalar>(inst: &SchedulingInstance<T>) -> Result<Schedule<T>, ScheduleError> {
    let bounds = harvest_bounds(inst)?;
    let active: Vec<usize> = (0..inst.len()).filter(|&i| inst.links[i].demand > T::zero()).collect();
    if let [i] = active.as_slice() {
        let sol = optimal_single(&inst.links[*i], inst.pmax)?;
        return Ok(from_single(inst.len(), *i, &sol));
    }
    build_schedule(bounds.lower, inst)
}

/// First violated constraint of a schedule, if any, at relative tolerance `rel_tol`.
pub fn check_schedule<T: Scalar>(inst: &SchedulingInstance<T>, s: &Schedule<T>, rel_tol: T) -> Result<(), String> {
    let one = T::one();
    if s.tau_it_s.len() != inst.len() || s.p_tx_w.len() != inst.len() {
        return Err("schedule length does not match the link count".into());
    }
    if s.tau0_s < T::zero() {
        return Err(format!("negative harvesting time {}", s.tau0_s));
    }
    let sum = s.tau0_s + s.tau_it_s.iter().copied().sum::<T>();
    if (sum - s.total_s).abs() > rel_tol * s.total_s.abs().max(T::min_positive_value()) {
        return Err(format!("total {} differs from slot sum {}", s.total_s, sum));
    }
    for (i, link) in inst.links.iter().enumerate() {
        let (tau, p) = (s.tau_it_s[i], s.p_tx_w[i]);
        if tau < T::zero() || p < T::zero() {
            return Err(format!("link {i}: negative slot or power"));
        }
        if p > inst.pmax * (one + rel_tol) {
            return Err(format!("link {i}: power {p} exceeds cap {}", inst.pmax));
        }
        let spent = p * tau;
        let harvested = link.harvest_power() * s.tau0_s;
        if spent > harvested * (one + rel_tol) {
            return Err(format!("link {i}: spends {spent} J but harvests {harvested} J"));
        }
        let bits = link.bits(tau, p);
        if bits < link.demand * (one - rel_tol) {
            return Err(format!("link {i}: delivers {bits} of {} bits", link.demand));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net_model::Radio;
    use crate::single_source::dot_solution;
    use approx::assert_relative_eq;

    fn radio() -> Radio<f64> {
        Radio { bandwidth: 1e6, noise_psd: 1e-12, ap_power: 4.0 }
    }

    fn link(h: f64, g: f64, d: f64) -> SourceLink<f64> {
        SourceLink::new(h, g, d, 0.5, radio()).unwrap()
    }

    fn three_links(pmax: f64) -> SchedulingInstance<f64> {
        SchedulingInstance::new(vec![link(1e-3, 2e-3, 50.0), link(4e-4, 6e-4, 50.0), link(8e-4, 3e-4, 80.0)], pmax)
            .unwrap()
    }

    #[test]
    fn subproblem_at_corner_and_tangent() {
        let l = link(1e-3, 2e-3, 50.0);
        let pmax = 0.01;
        let corner = ddot_solution(&l, pmax);
        assert_eq!(subproblem_it_time(corner.tau0, &l, pmax).unwrap(), corner.tau_it);
        let tan = dot_solution(&l).unwrap();
        assert_eq!(subproblem_it_time(tan.tau0, &l, f64::INFINITY).unwrap(), tan.tau_it);
    }

    #[test]
    fn subproblem_residual() {
        let l = link(1e-3, 2e-3, 50.0);
        let pmax = 1e-2;
        let lo = dot_solution(&l).unwrap().tau0;
        let hi = ddot_solution(&l, pmax).tau0;
        for k in 1..20 {
            let t0 = lo + (hi - lo) * k as f64 / 20.0;
            let tau = subproblem_it_time(t0, &l, pmax).unwrap();
            assert!((v_curve(tau, &l) - t0).abs() <= 1e-12 * t0);
        }
    }

    #[test]
    fn subproblem_infeasible_below_floor() {
        let l = link(1e-3, 2e-3, 50.0);
        let err = subproblem_it_time(0.5 * l.min_harvest_time(), &l, 0.01).unwrap_err();
        assert!(matches!(err, ScheduleError::Infeasible { .. }));
    }

    #[test]
    fn single_link_reduces_to_single_source() {
        let l = link(1e-3, 2e-3, 50.0);
        let inst = SchedulingInstance::new(vec![l], 0.01).unwrap();
        let s = powmu(&inst).unwrap();
        let o = optimal_single(&l, 0.01).unwrap();
        assert_eq!(s.total_s, o.total());
        assert_eq!(max_eh(&inst).unwrap(), s);
        assert_relative_eq!(g_value(o.tau0, &inst).unwrap(), o.total(), max_relative = 1e-15);
    }

    #[test]
    fn derivative_is_one_past_every_corner() {
        let inst = three_links(0.01);
        let b = harvest_bounds(&inst).unwrap();
        assert_eq!(g_derivative(b.upper, &inst).unwrap(), 1.0);
        assert_eq!(g_derivative(b.upper * 3.0, &inst).unwrap(), 1.0);
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let inst = three_links(1e-2);
        let b = harvest_bounds(&inst).unwrap();
        assert!(b.lower < b.upper);
        for k in 1..10 {
            let t = b.lower + (b.upper - b.lower) * k as f64 / 10.0;
            let h = t * 1e-6;
            let fd = (g_value(t + h, &inst).unwrap() - g_value(t - h, &inst).unwrap()) / (2.0 * h);
            let d = g_derivative(t, &inst).unwrap();
            assert!((d - fd).abs() <= 1e-5 * d.abs().max(1.0), "t={t} d={d} fd={fd}");
        }
    }

    #[test]
    fn powmu_not_worse_than_max_eh() {
        for pmax in [1e-4, 1e-3, 1e-2, 1.0, f64::INFINITY] {
            let inst = three_links(pmax);
            let r = powmu_detailed(&inst).unwrap();
            let m = max_eh(&inst).unwrap();
            assert!(r.schedule.total_s <= m.total_s);
            check_schedule(&inst, &r.schedule, 1e-9).unwrap();
            check_schedule(&inst, &m, 1e-9).unwrap();
        }
    }

    #[test]
    fn zero_demand_links_are_dropped() {
        let mut inst = three_links(0.01);
        inst.links[1] = inst.links[1].with_demand(0.0);
        let s = powmu(&inst).unwrap();
        assert_eq!(s.tau_it_s[1], 0.0);
        assert_eq!(s.p_tx_w[1], 0.0);
        let all_zero = SchedulingInstance::new(vec![link(1e-3, 1e-3, 0.0)], 0.01).unwrap();
        assert_eq!(powmu(&all_zero).unwrap().total_s, 0.0);
    }

    #[test]
    fn schedule_json_fields() {
        let s = powmu(&three_links(0.01)).unwrap();
        let v: serde_json::Value = serde_json::to_value(&s).unwrap();
        for key in ["tau0_s", "tau_it_s", "p_tx_w", "total_s"] {
            assert!(v.get(key).is_some());
        }
    }

    #[test]
    fn generic_f32_close_to_f64() {
        let inst = three_links(1e-3);
        let r32 = Radio { bandwidth: 1e6_f32, noise_psd: 1e-12, ap_power: 4.0 };
        let links32 = inst
            .links
            .iter()
            .map(|l| SourceLink::new(l.h_dl as f32, l.g_ul as f32, l.demand as f32, 0.5, r32).unwrap())
            .collect();
        let inst32 = SchedulingInstance::new(links32, 1e-3_f32).unwrap();
        let a = powmu(&inst32).unwrap().total_s as f64;
        let b = powmu(&inst).unwrap().total_s;
        assert_relative_eq!(a, b, max_relative = 1e-4);
    }
}
