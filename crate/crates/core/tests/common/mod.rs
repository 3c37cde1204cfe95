//! Brute-force references that share no code with the library solvers.
#![allow(dead_code)]

use std::f64::consts::LN_2;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wpccn_core::net_model::{NetworkInstance, Radio, Scenario};
use wpccn_core::relay_select::{solve_assignment, RelayAssignment};
use wpccn_core::scheduling::SchedulingInstance;
use wpccn_core::single_source::SourceLink;

/// Plain link parameters, read straight from the physical model.
#[derive(Debug, Clone, Copy)]
pub struct RawLink {
    pub h: f64,
    pub g: f64,
    pub bits: f64,
    pub zeta: f64,
    pub w: f64,
    pub n0: f64,
    pub pa: f64,
}

impl RawLink {
    pub fn of(link: &SourceLink<f64>) -> Self {
        Self {
            h: link.h_dl,
            g: link.g_ul,
            bits: link.demand,
            zeta: link.zeta,
            w: link.radio.bandwidth,
            n0: link.radio.noise_psd,
            pa: link.radio.ap_power,
        }
    }

    /// Joules harvested per second of harvesting.
    pub fn harvest_rate(&self) -> f64 {
        self.zeta * self.pa * self.h
    }

    /// Energy needed to send the demand in `tau` seconds: `tau * P(tau)`.
    pub fn energy_needed(&self, tau: f64) -> f64 {
        let c = self.bits * LN_2 / self.w;
        tau * (c / tau).exp_m1() * self.w * self.n0 / self.g
    }

    fn energy_needed_slope(&self, tau: f64) -> f64 {
        let c = self.bits * LN_2 / self.w;
        let y = c / tau;
        (y.exp_m1() - y * y.exp()) * self.w * self.n0 / self.g
    }

    /// Energy needed as `tau -> inf`.
    pub fn energy_floor(&self) -> f64 {
        self.bits * LN_2 * self.n0 / self.g
    }

    /// Shortest slot at full power.
    pub fn tau_at_power(&self, p: f64) -> f64 {
        self.bits / (self.w * (1.0 + p * self.g / (self.w * self.n0)).log2())
    }

    /// Shortest slot with at most `energy` joules and at most `pmax` watts.
    pub fn min_slot(&self, energy: f64, pmax: f64) -> Option<f64> {
        if self.bits == 0.0 {
            return Some(0.0);
        }
        if energy <= self.energy_floor() {
            return None;
        }
        let lo = self.tau_at_power(pmax);
        if self.energy_needed(lo) <= energy {
            return Some(lo);
        }
        // energy_needed is convex and decreasing, so Newton from the left never overshoots
        let mut tau = lo;
        for _ in 0..200 {
            let f = self.energy_needed(tau) - energy;
            let step = f / self.energy_needed_slope(tau);
            let next = tau - step;
            if !(next > tau) || (next - tau) <= 1e-15 * next {
                return Some(next.max(tau));
            }
            tau = next;
        }
        Some(tau)
    }
}

pub fn log_uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    (rng.random_range(lo.ln()..hi.ln())).exp()
}

pub fn random_radio<R: Rng>(rng: &mut R) -> Radio<f64> {
    Radio { bandwidth: 1e6, noise_psd: 10f64.powf(rng.random_range(-13.0..-11.0)), ap_power: 4.0 }
}

pub fn random_link<R: Rng>(rng: &mut R, radio: Radio<f64>) -> SourceLink<f64> {
    SourceLink::new(
        log_uniform(rng, 1e-6, 3e-3),
        log_uniform(rng, 1e-6, 3e-3),
        log_uniform(rng, 10.0, 1000.0),
        rng.random_range(0.2..0.9),
        radio,
    )
    .unwrap()
}

/// Two-dimensional grid search over `(tau0, tau)` for a single link.
///
/// Each level scans a `points x points` grid and keeps, per `tau` row, the
/// first harvesting time that funds the slot. The next window is centred on
/// the best cell with half the `tau` span, and its harvesting-time span
/// follows the feasibility frontier across it.
pub fn grid_single(link: &SourceLink<f64>, pmax: f64, points: usize, levels: usize) -> f64 {
    let raw = RawLink::of(link);
    let rate = raw.harvest_rate();
    let tau_min = raw.tau_at_power(pmax);
    // any feasible total bounds both slots of the optimum; take the best point
    // of the frontier on a log-spaced scan of slot lengths
    let corner = tau_min + pmax * tau_min / rate;
    let hi = (0..points)
        .map(|j| tau_min * (corner / tau_min).powf(j as f64 / (points - 1) as f64))
        .map(|tau| tau + raw.energy_needed(tau) / rate)
        .fold(corner, f64::min);
    let (mut t0_lo, mut t0_hi) = (0.0, hi);
    let (mut t_lo, mut t_hi) = (tau_min, hi);
    let mut best = f64::INFINITY;
    let at = |lo: f64, hi: f64, i: usize| lo + (hi - lo) * i as f64 / (points - 1) as f64;
    for _ in 0..levels {
        let t0s: Vec<f64> = (0..points).map(|i| at(t0_lo, t0_hi, i)).collect();
        let mut cell = None;
        for j in 0..points {
            let tau = at(t_lo, t_hi, j);
            let need = raw.energy_needed(tau);
            // larger harvesting times on this row only add length
            let i = t0s.partition_point(|&t0| rate * t0 < need);
            if i < points && cell.is_none_or(|(_, _, v)| t0s[i] + tau < v) {
                cell = Some((i, j, t0s[i] + tau));
            }
        }
        let Some((_, j, v)) = cell else { break };
        best = best.min(v);
        let c = at(t_lo, t_hi, j);
        let half = 0.25 * (t_hi - t_lo);
        let d0 = (t0_hi - t0_lo) / (points - 1) as f64;
        t_lo = (c - half).max(tau_min);
        t_hi = c + half;
        t0_lo = (raw.energy_needed(t_hi) / rate - d0).max(0.0);
        t0_hi = raw.energy_needed(t_lo) / rate + d0;
    }
    best
}

/// Total schedule length for a fixed harvesting time, or `inf` if some link cannot finish.
pub fn total_at(raws: &[RawLink], pmax: f64, tau0: f64) -> f64 {
    let mut total = tau0;
    for r in raws {
        match r.min_slot(r.harvest_rate() * tau0, pmax) {
            Some(t) => total += t,
            None => return f64::INFINITY,
        }
    }
    total
}

/// Range of harvesting times worth searching: from where every link becomes
/// feasible to where every link can transmit at full power.
pub fn harvest_range(raws: &[RawLink], pmax: f64) -> (f64, f64) {
    let active = raws.iter().filter(|r| r.bits > 0.0);
    let lo = active.clone().map(|r| r.energy_floor() / r.harvest_rate()).fold(0.0, f64::max);
    let hi = active.map(|r| pmax * r.tau_at_power(pmax) / r.harvest_rate()).fold(0.0, f64::max);
    (lo, hi)
}

/// Grid search over the harvesting time; returns `(best total, argmin tau0)`.
pub fn grid_tau0(inst: &SchedulingInstance<f64>, points: usize) -> (f64, f64) {
    let raws: Vec<RawLink> = inst.links.iter().map(RawLink::of).collect();
    let (lo, hi) = harvest_range(&raws, inst.pmax);
    let mut best = (f64::INFINITY, f64::NAN);
    for s in 1..=points {
        let tau0 = lo + (hi - lo) * s as f64 / points as f64;
        let t = total_at(&raws, inst.pmax, tau0);
        if t < best.0 {
            best = (t, tau0);
        }
    }
    best
}

pub fn random_scheduling_instance<R: Rng>(rng: &mut R, n: usize) -> SchedulingInstance<f64> {
    let radio = random_radio(rng);
    let links = (0..n).map(|_| random_link(rng, radio)).collect();
    SchedulingInstance::new(links, log_uniform(rng, 1e-4, 1.0)).unwrap()
}

/// Every assignment in `{0..=k}^n`, in lexicographic order.
pub fn all_assignments(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..n {
        out = out.into_iter().flat_map(|a| (0..=k).map(move |j| [a.clone(), vec![j]].concat())).collect();
    }
    out
}

/// Every assignment with its optimal schedule length.
pub fn enumerate(inst: &NetworkInstance<f64>) -> Vec<(Vec<usize>, f64)> {
    all_assignments(inst.num_sources(), inst.num_relays())
        .into_iter()
        .map(|a| {
            let t = solve_assignment(inst, &RelayAssignment { assign: a.clone() }).unwrap().total_s;
            (a, t)
        })
        .collect()
}

/// Best total among assignments agreeing with `mask` on its fixed rows.
pub fn subtree_optimum(table: &[(Vec<usize>, f64)], mask: &[Option<usize>]) -> f64 {
    table
        .iter()
        .filter(|(a, _)| mask.iter().zip(a).all(|(m, &j)| m.is_none_or(|f| f == j)))
        .map(|(_, t)| *t)
        .fold(f64::INFINITY, f64::min)
}

/// Small random network from the reference geometry.
pub fn small_network(seed: u64, n: usize, k: usize, pmax: f64) -> NetworkInstance<f64> {
    let scenario = Scenario { n, k, pmax_w: pmax, ..Scenario::default() };
    scenario.realize(&mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
}

pub mod props;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
