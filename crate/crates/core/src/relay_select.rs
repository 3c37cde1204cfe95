//! Relay assignment: exact branch-and-bound, relaxation heuristics, a
//! criterion-driven local search and the harvest-then-cooperate baseline.
//!
//! Relay indices run `0..=K` with `0` meaning "direct to the AP"; channel
//! arrays indexed by relay use `j - 1`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::net_model::{ModelError, NetworkInstance};
use crate::relaxation::{build_relaxation, solve_relaxation, BarrierOptions, RelaxError, SlotBounds, Status};
use crate::scheduling::{max_eh, powmu, ScheduleError, SchedulingInstance};
use crate::single_source::SourceLink;
use crate::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SelectError {
    #[error("assignment has {got} entries for {expected} sources")]
    AssignmentLength { expected: usize, got: usize },
    #[error("source {source_index} assigned to relay {relay}, but only {k} relays exist")]
    AssignmentRange { source_index: usize, relay: usize, k: usize },
    #[error("relay index {0} is out of range")]
    RelayIndex(usize),
    #[error("unknown algorithm `{0}`")]
    UnknownAlgorithm(String),
    #[error("HTC requires 0 < rho < 1, got {0}")]
    Rho(f64),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Relax(#[from] RelaxError),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RelayAssignment {
    pub assign: Vec<usize>,
}

impl RelayAssignment {
    pub fn direct(n: usize) -> Self {
        Self { assign: vec![0; n] }
    }

    pub fn validate(&self, n: usize, k: usize) -> Result<(), SelectError> {
        if self.assign.len() != n {
            return Err(SelectError::AssignmentLength { expected: n, got: self.assign.len() });
        }
        for (i, &j) in self.assign.iter().enumerate() {
            if j > k {
                return Err(SelectError::AssignmentRange { source_index: i, relay: j, k });
            }
        }
        Ok(())
    }

    /// Sources assigned to each relay, `groups[j]` for `j = 0..=k`.
    pub fn groups(&self, k: usize) -> Vec<Vec<usize>> {
        let mut g = vec![Vec::new(); k + 1];
        for (i, &j) in self.assign.iter().enumerate() {
            g[j].push(i);
        }
        g
    }
}

/// Complete schedule for an assignment: one harvesting slot, one slot per
/// source, one slot per loaded relay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FullSchedule<T> {
    pub assignment: RelayAssignment,
    pub tau0_s: T,
    pub tau_src_s: Vec<T>,
    pub p_src_w: Vec<T>,
    /// Zero for idle relays.
    pub tau_relay_s: Vec<T>,
    pub p_relay_w: Vec<T>,
    pub total_s: T,
    /// Unused template time (HTC only).
    #[serde(default)]
    pub idle_s: T,
    /// A heuristic hit an infeasible relaxation and completed the assignment with direct links.
    #[serde(default)]
    pub fallback: bool,
}

/// Which transmitter each scheduling link stands for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkOwner {
    Source(usize),
    /// Relay index `j >= 1`.
    Relay(usize),
}

/// Scheduling links for an assignment: every source, then every loaded relay
/// (in index order) carrying the summed demand of its sources.
pub fn assignment_to_links<T: Scalar>(
    inst: &NetworkInstance<T>,
    assignment: &RelayAssignment,
) -> Result<(SchedulingInstance<T>, Vec<LinkOwner>), SelectError> {
    let (n, k) = (inst.num_sources(), inst.num_relays());
    assignment.validate(n, k)?;
    let p = &inst.params;
    let c = &inst.channels;
    let radio = p.radio();
    let mut links = Vec::with_capacity(n + k);
    let mut owners = Vec::with_capacity(n + k);
    for (i, &j) in assignment.assign.iter().enumerate() {
        let g = if j == 0 { c.g_src_ap[i] } else { c.g_src_rel[i][j - 1] };
        links.push(SourceLink::new(c.h_ap_src[i], g, p.demands_bits[i], p.zeta_src[i], radio)?);
        owners.push(LinkOwner::Source(i));
    }
    for (j, group) in assignment.groups(k).iter().enumerate().skip(1) {
        if group.is_empty() {
            continue;
        }
        let load = group.iter().map(|&i| p.demands_bits[i]).sum::<T>();
        links.push(SourceLink::new(c.h_ap_rel[j - 1], c.g_rel_ap[j - 1], load, p.zeta_rel[j - 1], radio)?);
        owners.push(LinkOwner::Relay(j));
    }
    Ok((SchedulingInstance::new(links, p.max_ul_power_w)?, owners))
}

/// Optimal schedule for a fixed assignment.
pub fn solve_assignment<T: Scalar>(
    inst: &NetworkInstance<T>,
    assignment: &RelayAssignment,
) -> Result<FullSchedule<T>, SelectError> {
    schedule_with(inst, assignment, |s| powmu(s))
}

/// [`solve_assignment`] with the cheaper harvesting rule of [`max_eh`].
pub fn solve_assignment_max_eh<T: Scalar>(
    inst: &NetworkInstance<T>,
    assignment: &RelayAssignment,
) -> Result<FullSchedule<T>, SelectError> {
    schedule_with(inst, assignment, |s| max_eh(s))
}

fn schedule_with<T: Scalar>(
    inst: &NetworkInstance<T>,
    assignment: &RelayAssignment,
    solver: impl Fn(&SchedulingInstance<T>) -> Result<crate::scheduling::Schedule<T>, ScheduleError>,
) -> Result<FullSchedule<T>, SelectError> {
    let (n, k) = (inst.num_sources(), inst.num_relays());
    let (sched_inst, owners) = assignment_to_links(inst, assignment)?;
    let s = solver(&sched_inst)?;
    let mut out = FullSchedule {
        assignment: assignment.clone(),
        tau0_s: s.tau0_s,
        tau_src_s: vec![T::zero(); n],
        p_src_w: vec![T::zero(); n],
        tau_relay_s: vec![T::zero(); k],
        p_relay_w: vec![T::zero(); k],
        total_s: s.total_s,
        idle_s: T::zero(),
        fallback: false,
    };
    for (l, owner) in owners.iter().enumerate() {
        match *owner {
            LinkOwner::Source(i) => {
                out.tau_src_s[i] = s.tau_it_s[l];
                out.p_src_w[i] = s.p_tx_w[l];
            }
            LinkOwner::Relay(j) => {
                out.tau_relay_s[j - 1] = s.tau_it_s[l];
                out.p_relay_w[j - 1] = s.p_tx_w[l];
            }
        }
    }
    Ok(out)
}

/// First violated constraint of the joint problem, if any.
///
/// Relays must forward the full demand of their sources within their own
/// slot time and the energy they harvested.
pub fn check_full_schedule<T: Scalar>(inst: &NetworkInstance<T>, s: &FullSchedule<T>, rel_tol: T) -> Result<(), String> {
    let (n, k) = (inst.num_sources(), inst.num_relays());
    s.assignment.validate(n, k).map_err(|e| e.to_string())?;
    let p = &inst.params;
    let c = &inst.channels;
    let one = T::one();
    let radio = p.radio();
    let rate_bits = |tau: T, pw: T, g: T| {
        if tau <= T::zero() {
            T::zero()
        } else {
            tau * radio.bandwidth * (pw * g / (radio.bandwidth * radio.noise_psd)).ln_1p() / T::ln2()
        }
    };
    let sum = s.tau0_s + s.tau_src_s.iter().copied().sum::<T>() + s.tau_relay_s.iter().copied().sum::<T>() + s.idle_s;
    if (sum - s.total_s).abs() > rel_tol * s.total_s.abs().max(T::min_positive_value()) {
        return Err(format!("total {} differs from slot sum {sum}", s.total_s));
    }
    let cap = p.max_ul_power_w * (one + rel_tol);
    for i in 0..n {
        let j = s.assignment.assign[i];
        let (tau, pw) = (s.tau_src_s[i], s.p_src_w[i]);
        if pw > cap || pw < T::zero() || tau < T::zero() {
            return Err(format!("source {i}: power {pw} or slot {tau} out of range"));
        }
        let harvested = p.zeta_src[i] * p.ap_power_w * c.h_ap_src[i] * s.tau0_s;
        if pw * tau > harvested * (one + rel_tol) {
            return Err(format!("source {i}: spends more than it harvests"));
        }
        let g = if j == 0 { c.g_src_ap[i] } else { c.g_src_rel[i][j - 1] };
        if rate_bits(tau, pw, g) < p.demands_bits[i] * (one - rel_tol) {
            return Err(format!("source {i}: demand not delivered"));
        }
    }
    let groups = s.assignment.groups(k);
    for r in 0..k {
        let load = groups[r + 1].iter().map(|&i| p.demands_bits[i]).sum::<T>();
        let (tau, pw) = (s.tau_relay_s[r], s.p_relay_w[r]);
        if pw > cap || pw < T::zero() || tau < T::zero() {
            return Err(format!("relay {}: power {pw} or slot {tau} out of range", r + 1));
        }
        let harvested = p.zeta_rel[r] * p.ap_power_w * c.h_ap_rel[r] * s.tau0_s;
        if pw * tau > harvested * (one + rel_tol) {
            return Err(format!("relay {}: spends more than it harvests", r + 1));
        }
        if rate_bits(tau, pw, c.g_rel_ap[r]) < load * (one - rel_tol) {
            return Err(format!("relay {}: forwards less than its sources' demand", r + 1));
        }
    }
    Ok(())
}

/// Score of routing source `i` through `j`: the weaker hop's gain product,
/// or the direct link's product for `j = 0`.
pub fn relay_score<T: Scalar>(inst: &NetworkInstance<T>, i: usize, j: usize) -> T {
    let c = &inst.channels;
    if j == 0 {
        c.g_src_ap[i] * c.h_ap_src[i]
    } else {
        (c.g_src_rel[i][j - 1] * c.h_ap_src[i]).min(c.g_rel_ap[j - 1] * c.h_ap_rel[j - 1])
    }
}

/// Opportunistic relaying: each source takes its best-scoring route, ties to the smaller index.
pub fn or_criterion<T: Scalar>(inst: &NetworkInstance<T>) -> RelayAssignment {
    let k = inst.num_relays();
    let assign = (0..inst.num_sources())
        .map(|i| {
            (1..=k).fold(0, |best, j| if relay_score(inst, i, j) > relay_score(inst, i, best) { j } else { best })
        })
        .collect();
    RelayAssignment { assign }
}

/// Whether relay `j` beats the direct link of source `i` on the gain-product test.
pub fn relay_benefit<T: Scalar>(inst: &NetworkInstance<T>, i: usize, j: usize) -> Result<bool, SelectError> {
    if j == 0 || j > inst.num_relays() {
        return Err(SelectError::RelayIndex(j));
    }
    if i >= inst.num_sources() {
        return Err(SelectError::AssignmentRange { source_index: i, relay: j, k: inst.num_relays() });
    }
    Ok(relay_score(inst, i, j) > relay_score(inst, i, 0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RstmaReport<T> {
    pub schedule: FullSchedule<T>,
    /// Accepted reassignments.
    pub moves: usize,
    /// Schedules evaluated, including the initial one.
    pub evaluations: usize,
}

/// Local search from the opportunistic assignment: moves one source out of a
/// shared group at a time, accepting the first strict improvement.
pub fn rstma<T: Scalar>(inst: &NetworkInstance<T>) -> Result<FullSchedule<T>, SelectError> {
    rstma_detailed(inst).map(|r| r.schedule)
}

pub fn rstma_detailed<T: Scalar>(inst: &NetworkInstance<T>) -> Result<RstmaReport<T>, SelectError> {
    let k = inst.num_relays();
    let mut assignment = or_criterion(inst);
    let mut best = solve_assignment(inst, &assignment)?;
    let mut moves = 0;
    let mut evaluations = 1;
    let accept = T::one() - T::lit(1e-12);
    'restart: loop {
        let groups = assignment.groups(k);
        let mut order: Vec<usize> = (0..=k).filter(|&j| groups[j].len() > 1).collect();
        order.sort_by(|&a, &b| groups[b].len().cmp(&groups[a].len()));
        for &j in &order {
            for &i in &groups[j] {
                let mut candidates: Vec<usize> = (0..=k).filter(|&c| c != j).collect();
                candidates.sort_by(|&a, &b| {
                    relay_score(inst, i, b).partial_cmp(&relay_score(inst, i, a)).unwrap_or(Ordering::Equal)
                });
                for c in candidates {
                    assignment.assign[i] = c;
                    let trial = solve_assignment(inst, &assignment)?;
                    evaluations += 1;
                    if trial.total_s < best.total_s * accept {
                        best = trial;
                        moves += 1;
                        continue 'restart;
                    }
                    assignment.assign[i] = j;
                }
            }
        }
        break;
    }
    Ok(RstmaReport { schedule: best, moves, evaluations })
}

pub const HTC_DEFAULT_RHO: f64 = 0.8;

/// Harvest-then-cooperate: a fixed template of `rho T` harvesting followed by
/// `2N` equal slots, one per source and one per relay hop.
///
/// Each source spends its whole harvest in its slot; a relay splits its
/// harvest evenly over the slots of the sources it forwards. Powers are
/// capped at `pmax`. With the template fixed, every slot's rate is
/// independent of `T`, so the shortest feasible block length is the largest
/// per-slot requirement. Relay slots of direct sources stay idle.
pub fn htc_baseline<T: Scalar>(inst: &NetworkInstance<T>, rho: T) -> Result<FullSchedule<T>, SelectError> {
    if !(rho > T::zero() && rho < T::one()) {
        return Err(SelectError::Rho(rho.as_f64()));
    }
    let (n, k) = (inst.num_sources(), inst.num_relays());
    let p = &inst.params;
    let c = &inst.channels;
    let assignment = or_criterion(inst);
    let groups = assignment.groups(k);
    let slot = (T::one() - rho) / T::lit(2.0 * n as f64);
    let noise = p.bandwidth_hz * p.noise_psd_w_per_hz;
    // slot power when the harvest of rho*T funds `share` slots of slot*T
    let power = |zeta: T, h: T, share: usize| p.max_ul_power_w.min(zeta * p.ap_power_w * h * rho / (slot * T::lit(share as f64)));
    // block length at which `bits` fit in one slot
    let need = |bits: T, pw: T, g: T| {
        if bits == T::zero() {
            T::zero()
        } else {
            bits * T::ln2() / (slot * p.bandwidth_hz * (pw * g / noise).ln_1p())
        }
    };
    let mut block = T::zero();
    let mut p_src = vec![T::zero(); n];
    for i in 0..n {
        let j = assignment.assign[i];
        let g = if j == 0 { c.g_src_ap[i] } else { c.g_src_rel[i][j - 1] };
        p_src[i] = power(p.zeta_src[i], c.h_ap_src[i], 1);
        block = block.max(need(p.demands_bits[i], p_src[i], g));
    }
    let mut p_rel = vec![T::zero(); k];
    for r in 0..k {
        let members = &groups[r + 1];
        if members.is_empty() {
            continue;
        }
        p_rel[r] = power(p.zeta_rel[r], c.h_ap_rel[r], members.len());
        for &i in members {
            block = block.max(need(p.demands_bits[i], p_rel[r], c.g_rel_ap[r]));
        }
    }
    let direct = groups[0].len();
    Ok(FullSchedule {
        assignment,
        tau0_s: rho * block,
        tau_src_s: vec![slot * block; n],
        p_src_w: p_src,
        tau_relay_s: (0..k).map(|r| slot * block * T::lit(groups[r + 1].len() as f64)).collect(),
        p_relay_w: p_rel,
        total_s: block,
        idle_s: slot * block * T::lit(direct as f64),
        fallback: false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BbaOptions {
    pub barrier: BarrierOptions,
    /// A row counts as integral once some fraction reaches `1 - integral_tol`.
    pub integral_tol: f64,
    /// Nodes whose bound is within this relative margin of the incumbent are pruned.
    pub prune_rel: f64,
    pub max_nodes: usize,
    pub trace: bool,
}

impl Default for BbaOptions {
    fn default() -> Self {
        Self { barrier: BarrierOptions::default(), integral_tol: 1e-5, prune_rel: 1e-9, max_nodes: 200_000, trace: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeAction {
    /// Split on a source into one child per relay.
    Branched { source: usize },
    /// Bound not below the incumbent.
    PrunedBound,
    /// No completion shorter than the incumbent.
    PrunedInfeasible,
    /// Every source fixed; solved exactly.
    Solved,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BbNode {
    pub id: usize,
    pub parent: Option<usize>,
    pub depth: usize,
    pub mask: Vec<Option<usize>>,
    /// Relaxation bound of this node in seconds (`inf` when infeasible);
    /// for fully fixed nodes, the exact optimum.
    pub lower_bound: f64,
    pub action: NodeAction,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BbaReport {
    pub schedule: FullSchedule<f64>,
    /// Nodes whose relaxation was solved, in processing order (only with `trace`).
    pub nodes: Vec<BbNode>,
    pub relaxations: usize,
    pub nodes_processed: usize,
    /// False if the node limit stopped the search.
    pub complete: bool,
}

impl BbaReport {
    /// Trace as line-delimited JSON.
    pub fn trace_jsonl(&self) -> String {
        self.nodes.iter().map(|n| serde_json::to_string(n).expect("node serializes") + "\n").collect()
    }
}

struct Pending {
    bound: f64,
    id: usize,
    parent: Option<usize>,
    depth: usize,
    mask: Vec<Option<usize>>,
}

impl PartialEq for Pending {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Pending {}
impl PartialOrd for Pending {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Pending {
    // max-heap: smallest bound first, then oldest node
    fn cmp(&self, other: &Self) -> Ordering {
        other.bound.total_cmp(&self.bound).then(other.id.cmp(&self.id))
    }
}

fn complete_mask(mask: &[Option<usize>], fill: impl Fn(usize) -> usize) -> RelayAssignment {
    RelayAssignment { assign: mask.iter().enumerate().map(|(i, f)| f.unwrap_or_else(|| fill(i))).collect() }
}

/// Slot bound handed to the relaxation: a schedule length known to be achievable.
fn slot_bounds(inst: &NetworkInstance<f64>, achievable: f64) -> SlotBounds {
    SlotBounds::uniform(inst.num_sources(), inst.num_relays(), achievable * (1.0 + 1e-6))
}

/// Best-first branch and bound over relay assignments.
pub fn bba(inst: &NetworkInstance<f64>) -> Result<FullSchedule<f64>, SelectError> {
    bba_detailed(inst, &BbaOptions::default()).map(|r| r.schedule)
}

pub fn bba_detailed(inst: &NetworkInstance<f64>, opts: &BbaOptions) -> Result<BbaReport, SelectError> {
    let (n, k) = (inst.num_sources(), inst.num_relays());
    let mut incumbent = solve_assignment(inst, &RelayAssignment::direct(n))?;
    let mut report = BbaReport { schedule: incumbent.clone(), nodes: Vec::new(), relaxations: 0, nodes_processed: 0, complete: true };
    if k == 0 {
        return Ok(report);
    }
    let mut heap = BinaryHeap::new();
    let mut next_id = 1;
    heap.push(Pending { bound: 0.0, id: 0, parent: None, depth: 0, mask: vec![None; n] });
    let record = |report: &mut BbaReport, node: &Pending, lower_bound: f64, action: NodeAction| {
        if opts.trace {
            report.nodes.push(BbNode {
                id: node.id,
                parent: node.parent,
                depth: node.depth,
                mask: node.mask.clone(),
                lower_bound,
                action,
            });
        }
    };
    while let Some(node) = heap.pop() {
        let cutoff = incumbent.total_s * (1.0 - opts.prune_rel);
        if node.bound >= cutoff {
            continue;
        }
        if report.nodes_processed >= opts.max_nodes {
            report.complete = false;
            break;
        }
        report.nodes_processed += 1;
        if node.mask.iter().all(Option::is_some) {
            let s = solve_assignment(inst, &complete_mask(&node.mask, |_| 0))?;
            record(&mut report, &node, s.total_s, NodeAction::Solved);
            if s.total_s < incumbent.total_s {
                incumbent = s;
            }
            continue;
        }
        let model = build_relaxation(inst, &node.mask, &slot_bounds(inst, incumbent.total_s))?;
        let sol = solve_relaxation(&model, inst, &opts.barrier);
        report.relaxations += 1;
        if sol.status == Status::Infeasible {
            record(&mut report, &node, f64::INFINITY, NodeAction::PrunedInfeasible);
            continue;
        }
        let own = if sol.status == Status::Optimal { sol.objective } else { node.bound };
        let bound = own.max(node.bound);
        let rounded = complete_mask(&node.mask, |i| sol.argmax_assignment()[i]);
        let s = solve_assignment(inst, &rounded)?;
        if s.total_s < incumbent.total_s {
            incumbent = s;
        }
        if bound >= incumbent.total_s * (1.0 - opts.prune_rel) {
            record(&mut report, &node, own, NodeAction::PrunedBound);
            continue;
        }
        let source = match sol.most_fractional(&node.mask, opts.integral_tol) {
            Some((i, _, _)) => i,
            // rounding not certified although every row looks integral: split the least decided row
            None => (0..n)
                .filter(|&i| node.mask[i].is_none())
                .min_by(|&a, &b| {
                    let ma = sol.b[a].iter().copied().fold(0.0, f64::max);
                    let mb = sol.b[b].iter().copied().fold(0.0, f64::max);
                    ma.total_cmp(&mb)
                })
                .expect("a free row exists"),
        };
        record(&mut report, &node, own, NodeAction::Branched { source });
        for j in 0..=k {
            let mut mask = node.mask.clone();
            mask[source] = Some(j);
            heap.push(Pending { bound, id: next_id, parent: Some(node.id), depth: node.depth + 1, mask });
            next_id += 1;
        }
    }
    report.schedule = incumbent;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeuristicReport {
    pub schedule: FullSchedule<f64>,
    pub relaxations: usize,
}

/// One-branch heuristic: repeatedly force the largest relaxed fraction.
pub fn obh(inst: &NetworkInstance<f64>) -> Result<FullSchedule<f64>, SelectError> {
    obh_detailed(inst, &BarrierOptions::default()).map(|r| r.schedule)
}

pub fn obh_detailed(inst: &NetworkInstance<f64>, opts: &BarrierOptions) -> Result<HeuristicReport, SelectError> {
    let (n, k) = (inst.num_sources(), inst.num_relays());
    let mut mask: Vec<Option<usize>> = vec![if k == 0 { Some(0) } else { None }; n];
    let mut achievable = solve_assignment(inst, &RelayAssignment::direct(n))?.total_s;
    let mut relaxations = 0;
    let mut fallback = false;
    while mask.iter().any(Option::is_none) {
        let model = build_relaxation(inst, &mask, &slot_bounds(inst, achievable))?;
        let sol = solve_relaxation(&model, inst, opts);
        relaxations += 1;
        if sol.status == Status::Infeasible {
            fallback = true;
            break;
        }
        if sol.is_integral(BbaOptions::default().integral_tol) {
            let argmax = sol.argmax_assignment();
            for (i, m) in mask.iter_mut().enumerate() {
                m.get_or_insert(argmax[i]);
            }
            break;
        }
        let (i, j, _) = sol
            .most_fractional(&mask, BbaOptions::default().integral_tol)
            .expect("a non-integral solution has a fractional row");
        mask[i] = Some(j);
        // the slot bound must admit a completion of the new mask
        let argmax = sol.argmax_assignment();
        achievable = solve_assignment(inst, &complete_mask(&mask, |r| argmax[r]))?.total_s;
    }
    let mut schedule = solve_assignment(inst, &complete_mask(&mask, |_| 0))?;
    schedule.fallback = fallback;
    Ok(HeuristicReport { schedule, relaxations })
}

/// Rounds the root relaxation row by row.
pub fn rph(inst: &NetworkInstance<f64>) -> Result<FullSchedule<f64>, SelectError> {
    rph_detailed(inst, &BarrierOptions::default()).map(|r| r.schedule)
}

pub fn rph_detailed(inst: &NetworkInstance<f64>, opts: &BarrierOptions) -> Result<HeuristicReport, SelectError> {
    let (n, k) = (inst.num_sources(), inst.num_relays());
    let direct = solve_assignment(inst, &RelayAssignment::direct(n))?;
    if k == 0 {
        return Ok(HeuristicReport { schedule: direct, relaxations: 0 });
    }
    let model = build_relaxation(inst, &vec![None; n], &slot_bounds(inst, direct.total_s))?;
    let sol = solve_relaxation(&model, inst, opts);
    if sol.status == Status::Infeasible {
        let mut s = direct;
        s.fallback = true;
        return Ok(HeuristicReport { schedule: s, relaxations: 1 });
    }
    let schedule = solve_assignment(inst, &RelayAssignment { assign: sol.argmax_assignment() })?;
    Ok(HeuristicReport { schedule, relaxations: 1 })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Bba,
    Obh,
    Rph,
    Rstma,
    OrPowmu,
    Htc,
    /// All sources direct, optimal scheduling.
    Powmu,
    /// All sources direct, max-harvest scheduling.
    MaxEh,
}

impl Algorithm {
    pub const ALL: [Algorithm; 8] = [
        Algorithm::Bba,
        Algorithm::Obh,
        Algorithm::Rph,
        Algorithm::Rstma,
        Algorithm::OrPowmu,
        Algorithm::Htc,
        Algorithm::Powmu,
        Algorithm::MaxEh,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Bba => "bba",
            Algorithm::Obh => "obh",
            Algorithm::Rph => "rph",
            Algorithm::Rstma => "rstma",
            Algorithm::OrPowmu => "or_powmu",
            Algorithm::Htc => "htc",
            Algorithm::Powmu => "powmu",
            Algorithm::MaxEh => "max_eh",
        }
    }

    pub fn run(self, inst: &NetworkInstance<f64>) -> Result<FullSchedule<f64>, SelectError> {
        let n = inst.num_sources();
        match self {
            Algorithm::Bba => bba(inst),
            Algorithm::Obh => obh(inst),
            Algorithm::Rph => rph(inst),
            Algorithm::Rstma => rstma(inst),
            Algorithm::OrPowmu => solve_assignment(inst, &or_criterion(inst)),
            Algorithm::Htc => htc_baseline(inst, HTC_DEFAULT_RHO),
            Algorithm::Powmu => solve_assignment(inst, &RelayAssignment::direct(n)),
            Algorithm::MaxEh => solve_assignment_max_eh(inst, &RelayAssignment::direct(n)),
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = SelectError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Algorithm::ALL.into_iter().find(|a| a.name() == s).ok_or_else(|| SelectError::UnknownAlgorithm(s.to_string()))
    }
}
