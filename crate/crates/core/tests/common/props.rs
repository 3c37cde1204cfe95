//! Property checks shared by the property suite and the acceptance target.

use proptest::prelude::*;
use proptest::test_runner::TestCaseError;
use wpccn_core::experiment::{run_experiment, ExperimentConfig, ExperimentKind, TrialRecord};
use wpccn_core::net_model::{Radio, Scenario};
use wpccn_core::relay_select::{check_full_schedule, Algorithm};
use wpccn_core::scheduling::{g_value, harvest_bounds, powmu, SchedulingInstance};
use wpccn_core::single_source::{v_curve, v_curve_derivative, SourceLink};

use super::{grid_tau0, harvest_range, RawLink};

pub fn radio() -> impl Strategy<Value = Radio<f64>> {
    (-13.0..-11.0f64).prop_map(|e| Radio { bandwidth: 1e6, noise_psd: 10f64.powf(e), ap_power: 4.0 })
}

pub fn link_with(radio: Radio<f64>) -> impl Strategy<Value = SourceLink<f64>> {
    (-6.0..-2.5f64, -6.0..-2.5f64, 1.0..3.0f64, 0.2..0.9f64).prop_map(move |(h, g, d, z)| {
        SourceLink::new(10f64.powf(h), 10f64.powf(g), 10f64.powf(d), z, radio).unwrap()
    })
}

pub fn link() -> impl Strategy<Value = SourceLink<f64>> {
    radio().prop_flat_map(link_with)
}

pub fn pmax() -> impl Strategy<Value = f64> {
    (-4.0..0.0f64).prop_map(|e| 10f64.powf(e))
}

pub fn scheduling_instance(max_n: usize) -> impl Strategy<Value = SchedulingInstance<f64>> {
    (radio(), 2..=max_n, pmax()).prop_flat_map(|(r, n, p)| {
        prop::collection::vec(link_with(r), n).prop_map(move |links| SchedulingInstance::new(links, p).unwrap())
    })
}

/// `V` falls strictly between two slot lengths a relative step apart.
pub fn v_curve_strictly_decreasing(link: &SourceLink<f64>, y: f64, step: f64) -> Result<(), TestCaseError> {
    // slot lengths where the exponent y = D ln2 / (W tau) is of order one
    let tau = link.demand_nats() / y;
    let (a, b) = (v_curve(tau, link), v_curve(tau * (1.0 + step), link));
    prop_assert!(b < a, "V({}) = {a} but V({}) = {b}", tau, tau * (1.0 + step));
    prop_assert!(v_curve_derivative(tau, link) < 0.0);
    Ok(())
}

/// Midpoint convexity of the total length as a function of the harvesting time.
pub fn g_midpoint_convex(inst: &SchedulingInstance<f64>, u: f64, v: f64) -> Result<(), TestCaseError> {
    let raws: Vec<RawLink> = inst.links.iter().map(RawLink::of).collect();
    let (lo, hi) = harvest_range(&raws, inst.pmax);
    // a little past both ends of the range, but never at the infeasible floor
    let at = |s: f64| lo + (1.5 * hi - lo) * (1e-3 + s);
    let (a, b) = (at(u), at(v));
    let ga = g_value(a, inst).unwrap();
    let gb = g_value(b, inst).unwrap();
    let gm = g_value(0.5 * (a + b), inst).unwrap();
    let slack = 1e-12 * ga.max(gb);
    prop_assert!(gm <= 0.5 * (ga + gb) + slack, "g({}) = {gm} above chord {}", 0.5 * (a + b), 0.5 * (ga + gb));
    Ok(())
}

/// The brute-force minimiser over the harvesting time lies between the
/// largest individual optimum and the largest max-power corner.
pub fn grid_optimum_sandwiched(inst: &SchedulingInstance<f64>, points: usize) -> Result<(), TestCaseError> {
    let raws: Vec<RawLink> = inst.links.iter().map(RawLink::of).collect();
    let (lo, hi) = harvest_range(&raws, inst.pmax);
    let cell = (hi - lo) / points as f64;
    let (best, argmin) = grid_tau0(inst, points);
    let bounds = harvest_bounds(inst).unwrap();
    prop_assert!(
        argmin >= bounds.lower - cell && argmin <= bounds.upper + cell,
        "grid minimiser {argmin} outside [{}, {}]",
        bounds.lower,
        bounds.upper
    );
    let exact = powmu(inst).unwrap().total_s;
    prop_assert!(exact <= best * (1.0 + 1e-9), "powmu {exact} above grid {best}");
    Ok(())
}

/// Every schedule an algorithm returns meets demand, energy and cap constraints.
pub fn schedule_feasible(seed: u64, n: usize, k: usize, pmax: f64, algorithm: Algorithm) -> Result<(), TestCaseError> {
    let inst = super::small_network(seed, n, k, pmax);
    let s = algorithm.run(&inst).map_err(|e| TestCaseError::fail(format!("{algorithm}: {e}")))?;
    if let Err(e) = check_full_schedule(&inst, &s, 1e-6) {
        return Err(TestCaseError::fail(format!("{algorithm} on seed {seed}: {e}")));
    }
    Ok(())
}

fn without_times(records: &[TrialRecord]) -> Vec<TrialRecord> {
    records.iter().cloned().map(|r| TrialRecord { wall_time_s: 0.0, ..r }).collect()
}

/// Two runs with the same seed give identical records apart from wall times.
pub fn harness_deterministic(seed: u64, trials: usize) -> Result<(), TestCaseError> {
    let mut config = ExperimentConfig::new(ExperimentKind::SweepN, vec![2.0, 3.0]);
    config.trials = trials;
    config.seed = seed;
    config.scenario = Scenario { k: 1, ..Scenario::default() };
    config.algorithms = Some(vec![Algorithm::Rstma, Algorithm::OrPowmu, Algorithm::Htc]);
    let a = run_experiment(&config).unwrap();
    let b = run_experiment(&config).unwrap();
    let (ra, rb) = (without_times(&a.records), without_times(&b.records));
    prop_assert_eq!(ra.len(), rb.len());
    for (x, y) in ra.iter().zip(&rb) {
        // NaN totals compare by bit pattern
        prop_assert!(
            x.total_s.to_bits() == y.total_s.to_bits() && x.trial == y.trial && x.algorithm == y.algorithm,
            "records differ: {x:?} vs {y:?}"
        );
    }
    Ok(())
}
