//! Monte-Carlo harness: parameter sweeps over random networks and the
//! deterministic three-node relay-position study.
//!
//! Every trial owns an RNG stream keyed by `(seed, sweep index, trial)`, so
//! results do not depend on thread count or execution order.

use std::io::Write;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::net_model::{ChannelModelConfig, ChannelSet, ModelError, NetworkInstance, Point, Scenario, Topology};
use crate::numerics::{bisect_root, RootFindConfig};
use crate::relay_select::{
    check_full_schedule, relay_benefit, relay_score, solve_assignment, Algorithm, RelayAssignment, SelectError,
};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid experiment config: {0}")]
    Config(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Select(#[from] SelectError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    /// Number of sources.
    SweepN,
    /// Number of relays.
    SweepK,
    /// Uplink power cap in watts.
    SweepPmax,
    /// Relay distance from the AP in meters.
    SweepRelayPos,
    /// Number of sources; compares MAX-EH with POWMU on direct links.
    OptgapMaxeh,
    /// Number of sources; wall time is the quantity of interest.
    Runtime,
}

impl ExperimentKind {
    /// Column label of the swept quantity.
    pub fn param_name(self) -> &'static str {
        match self {
            ExperimentKind::SweepN | ExperimentKind::OptgapMaxeh | ExperimentKind::Runtime => "n",
            ExperimentKind::SweepK => "k",
            ExperimentKind::SweepPmax => "pmax_w",
            ExperimentKind::SweepRelayPos => "relay_radius_m",
        }
    }

    pub fn default_algorithms(self) -> Vec<Algorithm> {
        match self {
            ExperimentKind::OptgapMaxeh => vec![Algorithm::Powmu, Algorithm::MaxEh],
            _ => vec![
                Algorithm::Bba,
                Algorithm::Obh,
                Algorithm::Rph,
                Algorithm::Rstma,
                Algorithm::OrPowmu,
                Algorithm::Htc,
            ],
        }
    }

    /// The base scenario with the swept quantity set to `value`.
    pub fn apply(self, base: &Scenario, value: f64) -> Result<Scenario, ExperimentError> {
        let count = |v: f64| {
            if v >= 0.0 && v.fract() == 0.0 && v <= u32::MAX as f64 {
                Ok(v as usize)
            } else {
                Err(ExperimentError::Config(format!("{} must be a non-negative integer, got {v}", self.param_name())))
            }
        };
        let mut s = base.clone();
        match self {
            ExperimentKind::SweepN | ExperimentKind::OptgapMaxeh | ExperimentKind::Runtime => s.n = count(value)?,
            ExperimentKind::SweepK => s.k = count(value)?,
            ExperimentKind::SweepPmax => s.pmax_w = value,
            ExperimentKind::SweepRelayPos => s.relay_radius_m = value,
        }
        s.validate()?;
        Ok(s)
    }
}

fn default_trials() -> usize {
    1000
}
fn default_bba_max_n() -> usize {
    5
}

/// One Monte-Carlo study, as read from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    #[serde(default = "default_trials")]
    pub trials: usize,
    /// Parameters held fixed across the sweep.
    #[serde(default)]
    pub scenario: Scenario,
    pub grid: Vec<f64>,
    /// Defaults to the kind's standard set.
    #[serde(default)]
    pub algorithms: Option<Vec<Algorithm>>,
    #[serde(default)]
    pub seed: u64,
    /// BBA is skipped at sweep points with more sources than this.
    #[serde(default = "default_bba_max_n")]
    pub bba_max_n: usize,
}

impl ExperimentConfig {
    pub fn new(kind: ExperimentKind, grid: Vec<f64>) -> Self {
        Self {
            kind,
            trials: default_trials(),
            scenario: Scenario::default(),
            grid,
            algorithms: None,
            seed: 0,
            bba_max_n: default_bba_max_n(),
        }
    }

    pub fn algorithms(&self) -> Vec<Algorithm> {
        self.algorithms.clone().unwrap_or_else(|| self.kind.default_algorithms())
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.trials == 0 {
            return Err(ExperimentError::Config("trials must be at least 1".into()));
        }
        if self.grid.is_empty() {
            return Err(ExperimentError::Config("grid must not be empty".into()));
        }
        if self.algorithms.as_ref().is_some_and(Vec::is_empty) {
            return Err(ExperimentError::Config("algorithm list must not be empty".into()));
        }
        for &v in &self.grid {
            self.kind.apply(&self.scenario, v)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub sweep_param: String,
    pub sweep_value: f64,
    pub trial: usize,
    pub algorithm: Algorithm,
    /// `NaN` when infeasible.
    pub total_s: f64,
    pub wall_time_s: f64,
    pub feasible: bool,
}

/// Mean and 95% normal-approximation confidence half-width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanCi {
    pub mean: f64,
    pub ci95: f64,
}

impl MeanCi {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        if values.is_empty() {
            return Self { mean: f64::NAN, ci95: f64::NAN };
        }
        let mean = values.iter().sum::<f64>() / n;
        if values.len() < 2 {
            return Self { mean, ci95: 0.0 };
        }
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        Self { mean, ci95: 1.96 * (var / n).sqrt() }
    }
}

/// Aggregate of one algorithm at one sweep point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub sweep_param: String,
    pub sweep_value: f64,
    pub algorithm: Algorithm,
    pub trials: usize,
    pub feasible: usize,
    pub total_s_mean: f64,
    pub total_s_ci95: f64,
    pub wall_time_s_mean: f64,
    /// Mean over trials of `total / best total of the trial - 1`, in percent.
    pub gap_vs_best_pct: f64,
    pub gap_vs_best_ci95: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub records: Vec<TrialRecord>,
    pub summary: Vec<SummaryRow>,
}

/// RNG for one trial; streams are disjoint across sweep points and trials.
pub fn trial_rng(seed: u64, sweep_index: usize, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((sweep_index as u64) << 32) | trial as u64);
    rng
}

/// The network of one trial, shared by every algorithm.
pub fn trial_instance(
    config: &ExperimentConfig,
    sweep_index: usize,
    trial: usize,
) -> Result<NetworkInstance<f64>, ExperimentError> {
    let scenario = config.kind.apply(&config.scenario, config.grid[sweep_index])?;
    Ok(scenario.realize(&mut trial_rng(config.seed, sweep_index, trial))?)
}

fn run_trial(config: &ExperimentConfig, algorithms: &[Algorithm], sweep_index: usize, trial: usize) -> Vec<TrialRecord> {
    let value = config.grid[sweep_index];
    let record = |algorithm, total_s, wall_time_s, feasible| TrialRecord {
        sweep_param: config.kind.param_name().to_string(),
        sweep_value: value,
        trial,
        algorithm,
        total_s,
        wall_time_s,
        feasible,
    };
    let inst = match trial_instance(config, sweep_index, trial) {
        Ok(inst) => inst,
        Err(_) => return algorithms.iter().map(|&a| record(a, f64::NAN, 0.0, false)).collect(),
    };
    algorithms
        .iter()
        .filter(|&&a| a != Algorithm::Bba || inst.num_sources() <= config.bba_max_n)
        .map(|&a| {
            let start = Instant::now();
            let result = a.run(&inst);
            let wall = start.elapsed().as_secs_f64();
            match result {
                Ok(s) if check_full_schedule(&inst, &s, 1e-6).is_ok() => record(a, s.total_s, wall, true),
                _ => record(a, f64::NAN, wall, false),
            }
        })
        .collect()
}

/// Runs every (sweep point, trial) pair on the current rayon pool.
///
/// Records come back ordered by sweep point, trial and the configured
/// algorithm order, whatever the degree of parallelism.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutput, ExperimentError> {
    config.validate()?;
    let algorithms = config.algorithms();
    let jobs: Vec<(usize, usize)> =
        (0..config.grid.len()).flat_map(|s| (0..config.trials).map(move |t| (s, t))).collect();
    let records: Vec<TrialRecord> =
        jobs.par_iter().map(|&(s, t)| run_trial(config, &algorithms, s, t)).collect::<Vec<_>>().concat();
    let summary = summarize(&records, &algorithms);
    Ok(ExperimentOutput { records, summary })
}

/// Per-(sweep value, algorithm) aggregates; gaps are paired within each trial.
pub fn summarize(records: &[TrialRecord], algorithms: &[Algorithm]) -> Vec<SummaryRow> {
    let mut values: Vec<f64> = Vec::new();
    for r in records {
        if !values.contains(&r.sweep_value) {
            values.push(r.sweep_value);
        }
    }
    let mut rows = Vec::new();
    for &v in &values {
        let at: Vec<&TrialRecord> = records.iter().filter(|r| r.sweep_value == v).collect();
        let max_trial = at.iter().map(|r| r.trial).max().unwrap_or(0);
        let mut best = vec![f64::INFINITY; max_trial + 1];
        for r in at.iter().filter(|r| r.feasible) {
            best[r.trial] = best[r.trial].min(r.total_s);
        }
        for &a in algorithms {
            let mine: Vec<&&TrialRecord> = at.iter().filter(|r| r.algorithm == a).collect();
            if mine.is_empty() {
                continue;
            }
            let ok: Vec<&&TrialRecord> = mine.iter().copied().filter(|r| r.feasible).collect();
            let totals: Vec<f64> = ok.iter().map(|r| r.total_s).collect();
            let gaps: Vec<f64> = ok.iter().map(|r| 100.0 * (r.total_s / best[r.trial] - 1.0)).collect();
            let t = MeanCi::of(&totals);
            let g = MeanCi::of(&gaps);
            rows.push(SummaryRow {
                sweep_param: mine[0].sweep_param.clone(),
                sweep_value: v,
                algorithm: a,
                trials: mine.len(),
                feasible: ok.len(),
                total_s_mean: t.mean,
                total_s_ci95: t.ci95,
                wall_time_s_mean: mine.iter().map(|r| r.wall_time_s).sum::<f64>() / mine.len() as f64,
                gap_vs_best_pct: g.mean,
                gap_vs_best_ci95: g.ci95,
            });
        }
    }
    rows
}

/// Serializes rows with a header line.
pub fn write_csv<W: Write, R: Serialize>(writer: W, rows: &[R]) -> Result<(), ExperimentError> {
    let mut w = csv::Writer::from_writer(writer);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

fn default_source() -> Point {
    Point::new(4.0, 0.0)
}
fn default_relay_y() -> f64 {
    2.0
}
fn default_x_min() -> f64 {
    -2.0
}
fn default_x_max() -> f64 {
    5.0
}
fn default_steps() -> usize {
    701
}
fn default_pmax_list() -> Vec<f64> {
    vec![1e3, 1e-2]
}

/// One source, one relay moved along a horizontal line, distance-only channels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThreeNodeConfig {
    /// Radio, demand and path-loss parameters; `n`, `k`, geometry, shadowing
    /// and fading keys are ignored.
    #[serde(default)]
    pub scenario: Scenario,
    #[serde(default = "default_source")]
    pub source: Point,
    #[serde(default = "default_relay_y")]
    pub relay_y: f64,
    #[serde(default = "default_x_min")]
    pub x_min: f64,
    #[serde(default = "default_x_max")]
    pub x_max: f64,
    /// Grid points including both ends.
    #[serde(default = "default_steps")]
    pub steps: usize,
    /// One sweep per cap, in watts.
    #[serde(default = "default_pmax_list")]
    pub pmax_w: Vec<f64>,
}

impl Default for ThreeNodeConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all three-node keys have defaults")
    }
}

impl ThreeNodeConfig {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.steps < 2 || !(self.x_max > self.x_min) {
            return Err(ExperimentError::Config("need x_min < x_max and at least 2 steps".into()));
        }
        if self.pmax_w.is_empty() || self.pmax_w.iter().any(|&p| !(p > 0.0)) {
            return Err(ExperimentError::Config("pmax_w must list positive caps".into()));
        }
        self.scenario.radio::<f64>().validate()?;
        Ok(())
    }

    /// Network with the relay at `(x, relay_y)` and the given cap.
    pub fn instance(&self, x: f64, pmax: f64) -> Result<NetworkInstance<f64>, ExperimentError> {
        let s = Scenario { n: 1, k: 1, pmax_w: pmax, ..self.scenario.clone() };
        let model = ChannelModelConfig::deterministic(s.pl_d0_db, s.exponent);
        let relay = Point::new(x, self.relay_y);
        let ap = Point::ORIGIN;
        let gain = |a: &Point, b: &Point| -> Result<f64, ModelError> {
            let d = a.dist(b);
            if !(d > 0.0) {
                return Err(ModelError::CoLocated { a: *a, b: *b });
            }
            Ok(model.mean_gain(d))
        };
        let src = self.source;
        let channels = ChannelSet {
            h_ap_src: vec![gain(&ap, &src)?],
            h_ap_rel: vec![gain(&ap, &relay)?],
            g_src_ap: vec![gain(&src, &ap)?],
            g_src_rel: vec![vec![gain(&src, &relay)?]],
            g_rel_ap: vec![gain(&relay, &ap)?],
        };
        let mut inst = NetworkInstance::new(s.params(), channels)?;
        inst.positions = Some(Topology { ap, sources: vec![src], relays: vec![relay] });
        Ok(inst)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThreeNodeRow {
    pub pmax_w: f64,
    pub relay_x: f64,
    pub direct_s: f64,
    pub relayed_s: f64,
    pub relay_benefit: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThreeNodeResult {
    pub rows: Vec<ThreeNodeRow>,
    /// Per cap: relay positions where the relayed and direct totals cross.
    pub crossovers: Vec<(f64, Vec<f64>)>,
    /// Positions where the gain-product test flips (independent of the cap).
    pub benefit_boundaries: Vec<f64>,
}

/// Sign changes of `f` on the grid, refined by bisection.
fn grid_roots(
    xs: &[f64],
    mut f: impl FnMut(f64) -> Result<f64, ExperimentError>,
) -> Result<Vec<f64>, ExperimentError> {
    let vals: Vec<f64> = xs.iter().map(|&x| f(x)).collect::<Result<_, _>>()?;
    let cfg = RootFindConfig { abs_tol: 1e-12, max_iter: 200 };
    let mut roots = Vec::new();
    for w in 0..xs.len() - 1 {
        if vals[w] == 0.0 {
            roots.push(xs[w]);
        } else if vals[w] * vals[w + 1] < 0.0 {
            let mut err = None;
            let root = bisect_root(
                |x: f64| {
                    f(x).unwrap_or_else(|e| {
                        err.get_or_insert(e);
                        f64::NAN
                    })
                },
                xs[w],
                xs[w + 1],
                &cfg,
            );
            if let Some(e) = err {
                return Err(e);
            }
            roots.push(root.map_err(|e| ExperimentError::Config(e.to_string()))?);
        }
    }
    Ok(roots)
}

/// Sweeps the relay along its line for each cap.
pub fn three_node_sweep(config: &ThreeNodeConfig) -> Result<ThreeNodeResult, ExperimentError> {
    config.validate()?;
    let xs: Vec<f64> = (0..config.steps)
        .map(|s| config.x_min + (config.x_max - config.x_min) * s as f64 / (config.steps - 1) as f64)
        .collect();
    let direct = RelayAssignment::direct(1);
    let relayed = RelayAssignment { assign: vec![1] };
    let mut rows = Vec::new();
    let mut crossovers = Vec::new();
    for &pmax in &config.pmax_w {
        for &x in &xs {
            let inst = config.instance(x, pmax)?;
            rows.push(ThreeNodeRow {
                pmax_w: pmax,
                relay_x: x,
                direct_s: solve_assignment(&inst, &direct)?.total_s,
                relayed_s: solve_assignment(&inst, &relayed)?.total_s,
                relay_benefit: relay_benefit(&inst, 0, 1)?,
            });
        }
        let roots = grid_roots(&xs, |x| {
            let inst = config.instance(x, pmax)?;
            Ok(solve_assignment(&inst, &relayed)?.total_s - solve_assignment(&inst, &direct)?.total_s)
        })?;
        crossovers.push((pmax, roots));
    }
    let benefit_boundaries = grid_roots(&xs, |x| {
        let inst = config.instance(x, config.pmax_w[0])?;
        Ok(relay_score(&inst, 0, 1) - relay_score(&inst, 0, 0))
    })?;
    Ok(ThreeNodeResult { rows, crossovers, benefit_boundaries })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_defaults_and_rejections() {
        let c: ExperimentConfig = serde_json::from_str(r#"{"kind": "sweep_k", "grid": [0, 2]}"#).unwrap();
        assert_eq!(c.trials, 1000);
        assert_eq!(c.bba_max_n, 5);
        assert!(c.validate().is_ok());
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"kind": "sweep_k", "grid": [1], "bogus": 1}"#).is_err());
        let mut bad = c.clone();
        bad.grid.clear();
        assert!(bad.validate().is_err());
        let mut bad = c.clone();
        bad.grid = vec![1.5];
        assert!(bad.validate().is_err());
        let mut bad = c;
        bad.trials = 0;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn trial_streams_differ() {
        use rand::Rng;
        let a: u64 = trial_rng(1, 0, 0).random();
        let b: u64 = trial_rng(1, 0, 1).random();
        let c: u64 = trial_rng(1, 1, 0).random();
        let d: u64 = trial_rng(1, 0, 0).random();
        assert!(a != b && a != c && b != c);
        assert_eq!(a, d);
    }

    #[test]
    fn mean_ci_examples() {
        let m = MeanCi::of(&[1.0, 2.0, 3.0]);
        assert_eq!(m.mean, 2.0);
        assert!((m.ci95 - 1.96 / 3f64.sqrt()).abs() < 1e-12);
        assert_eq!(MeanCi::of(&[5.0]).ci95, 0.0);
        assert!(MeanCi::of(&[]).mean.is_nan());
    }

    #[test]
    fn small_sweep_records_every_algorithm() {
        let mut c = ExperimentConfig::new(ExperimentKind::SweepN, vec![2.0, 6.0]);
        c.trials = 2;
        let out = run_experiment(&c).unwrap();
        // BBA skipped at n = 6
        assert_eq!(out.records.len(), 2 * 6 + 2 * 5);
        assert!(out.records.iter().all(|r| r.feasible && r.total_s > 0.0));
        let bba_rows: Vec<_> = out.summary.iter().filter(|r| r.algorithm == Algorithm::Bba).collect();
        assert_eq!(bba_rows.len(), 1);
        assert!(bba_rows[0].gap_vs_best_pct.abs() < 1e-9);
    }

    #[test]
    fn three_node_finds_two_crossovers() {
        let c = ThreeNodeConfig { steps: 71, pmax_w: vec![1e3], ..Default::default() };
        let r = three_node_sweep(&c).unwrap();
        assert_eq!(r.rows.len(), 71);
        assert_eq!(r.crossovers[0].1.len(), 2);
        assert_eq!(r.benefit_boundaries.len(), 2);
        // far beyond the source the relay only hurts
        let last = r.rows.last().unwrap();
        assert!(last.relayed_s > last.direct_s && !last.relay_benefit);
    }
}
