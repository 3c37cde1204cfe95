//! Physical system: harvesting and rate laws, random topologies and channel draws.

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParam { name: &'static str, reason: String },
    #[error("nodes at {a:?} and {b:?} are co-located; path loss is undefined at zero distance")]
    CoLocated { a: Point, b: Point },
    #[error("dimension mismatch in `{name}`: expected {expected}, got {got}")]
    Dimension { name: &'static str, expected: usize, got: usize },
}

fn invalid(name: &'static str, reason: impl Into<String>) -> ModelError {
    ModelError::InvalidParam { name, reason: reason.into() }
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0) / 1000.0
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Energy harvested during `tau0` seconds of AP broadcast: `zeta * tau0 * pa * h`.
#[inline]
pub fn harvested_energy<T: Scalar>(zeta: T, tau0: T, pa: T, h_dl: T) -> T {
    zeta * tau0 * pa * h_dl
}

/// Shannon rate in bits/s of an uplink transmitting at `p_tx` watts.
#[inline]
pub fn link_rate<T: Scalar>(p_tx: T, g_ul: T, bandwidth: T, noise_psd: T) -> T {
    bandwidth * (p_tx * g_ul / (bandwidth * noise_psd)).ln_1p() / T::ln2()
}

/// Radio constants shared by every link of an instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Radio<T> {
    pub bandwidth: T,
    pub noise_psd: T,
    pub ap_power: T,
}

impl<T: Scalar> Radio<T> {
    pub fn validate(&self) -> Result<(), ModelError> {
        positive("bandwidth_hz", self.bandwidth)?;
        positive("noise_psd_w_per_hz", self.noise_psd)?;
        positive("ap_power_w", self.ap_power)
    }
}

fn positive<T: Scalar>(name: &'static str, v: T) -> Result<(), ModelError> {
    if v > T::zero() && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(name, format!("must be positive and finite, got {v}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemParams<T> {
    pub bandwidth_hz: T,
    pub noise_psd_w_per_hz: T,
    pub ap_power_w: T,
    /// Uplink power cap shared by sources and relays; may be `+inf`.
    pub max_ul_power_w: T,
    pub zeta_src: Vec<T>,
    pub zeta_rel: Vec<T>,
    pub demands_bits: Vec<T>,
}

impl<T: Scalar> SystemParams<T> {
    /// Homogeneous nodes: same efficiency everywhere, same demand for every source.
    pub fn uniform(n: usize, k: usize, radio: Radio<T>, pmax: T, zeta: T, demand_bits: T) -> Self {
        Self {
            bandwidth_hz: radio.bandwidth,
            noise_psd_w_per_hz: radio.noise_psd,
            ap_power_w: radio.ap_power,
            max_ul_power_w: pmax,
            zeta_src: vec![zeta; n],
            zeta_rel: vec![zeta; k],
            demands_bits: vec![demand_bits; n],
        }
    }

    pub fn num_sources(&self) -> usize {
        self.demands_bits.len()
    }

    pub fn num_relays(&self) -> usize {
        self.zeta_rel.len()
    }

    pub fn radio(&self) -> Radio<T> {
        Radio { bandwidth: self.bandwidth_hz, noise_psd: self.noise_psd_w_per_hz, ap_power: self.ap_power_w }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        self.radio().validate()?;
        if !(self.max_ul_power_w > T::zero()) {
            return Err(invalid("max_ul_power_w", "must be positive"));
        }
        if self.num_sources() == 0 {
            return Err(invalid("demands_bits", "at least one source is required"));
        }
        if self.zeta_src.len() != self.num_sources() {
            return Err(ModelError::Dimension {
                name: "zeta_src",
                expected: self.num_sources(),
                got: self.zeta_src.len(),
            });
        }
        for &z in self.zeta_src.iter().chain(&self.zeta_rel) {
            if !(z > T::zero() && z <= T::one()) {
                return Err(invalid("zeta", format!("efficiency must lie in (0, 1], got {z}")));
            }
        }
        for &d in &self.demands_bits {
            if !(d >= T::zero() && d.is_finite()) {
                return Err(invalid("demands_bits", format!("demand must be non-negative, got {d}")));
            }
        }
        Ok(())
    }
}

/// Linear power gains for one channel realization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelSet<T> {
    pub h_ap_src: Vec<T>,
    pub h_ap_rel: Vec<T>,
    pub g_src_ap: Vec<T>,
    /// `g_src_rel[i][j]`: source `i` to relay `j` (relays indexed from 0 here).
    pub g_src_rel: Vec<Vec<T>>,
    pub g_rel_ap: Vec<T>,
}

impl<T: Scalar> ChannelSet<T> {
    pub fn validate(&self, n: usize, k: usize) -> Result<(), ModelError> {
        let dims = [
            ("h_ap_src", self.h_ap_src.len(), n),
            ("g_src_ap", self.g_src_ap.len(), n),
            ("g_src_rel", self.g_src_rel.len(), n),
            ("h_ap_rel", self.h_ap_rel.len(), k),
            ("g_rel_ap", self.g_rel_ap.len(), k),
        ];
        for (name, got, expected) in dims {
            if got != expected {
                return Err(ModelError::Dimension { name, expected, got });
            }
        }
        for row in &self.g_src_rel {
            if row.len() != k {
                return Err(ModelError::Dimension { name: "g_src_rel[i]", expected: k, got: row.len() });
            }
        }
        let all = self
            .h_ap_src
            .iter()
            .chain(&self.h_ap_rel)
            .chain(&self.g_src_ap)
            .chain(&self.g_rel_ap)
            .chain(self.g_src_rel.iter().flatten());
        for &g in all {
            if !(g > T::zero() && g.is_finite()) {
                return Err(invalid("channels", format!("gains must be positive and finite, got {g}")));
            }
        }
        Ok(())
    }

    pub fn map<U, F: Fn(T) -> U>(&self, f: F) -> ChannelSet<U> {
        let v = |xs: &Vec<T>| xs.iter().map(|&x| f(x)).collect::<Vec<U>>();
        ChannelSet {
            h_ap_src: v(&self.h_ap_src),
            h_ap_rel: v(&self.h_ap_rel),
            g_src_ap: v(&self.g_src_ap),
            g_src_rel: self.g_src_rel.iter().map(|r| v(r)).collect(),
            g_rel_ap: v(&self.g_rel_ap),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn polar(r: f64, theta: f64) -> Self {
        Self { x: r * theta.cos(), y: r * theta.sin() }
    }

    pub fn dist(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn radius(&self) -> f64 {
        self.dist(&Self::ORIGIN)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    pub ap: Point,
    pub sources: Vec<Point>,
    pub relays: Vec<Point>,
}

/// Sources uniform (by area) in an annular sector, relays on a ring at evenly spaced angles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometryConfig {
    pub r_min: f64,
    pub r_max: f64,
    pub relay_radius: f64,
    pub angle_min: f64,
    pub angle_max: f64,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        Self { r_min: 3.0, r_max: 4.0, relay_radius: 2.0, angle_min: 0.0, angle_max: std::f64::consts::FRAC_PI_2 }
    }
}

impl GeometryConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.r_min > 0.0 && self.r_min < self.r_max && self.r_max.is_finite()) {
            return Err(invalid("r_min_m/r_max_m", format!("need 0 < r_min < r_max, got [{}, {}]", self.r_min, self.r_max)));
        }
        if !(self.relay_radius > 0.0 && self.relay_radius.is_finite()) {
            return Err(invalid("relay_radius_m", "must be positive"));
        }
        if !(self.angle_min <= self.angle_max) {
            return Err(invalid("angle", "angle_min must not exceed angle_max"));
        }
        Ok(())
    }
}

pub fn generate_topology<R: Rng + ?Sized>(n: usize, k: usize, geometry: &GeometryConfig, rng: &mut R) -> Topology {
    let g = geometry;
    let span = g.angle_max - g.angle_min;
    let sources = (0..n)
        .map(|_| {
            let u: f64 = rng.random();
            let theta = g.angle_min + span * rng.random::<f64>();
            let r = (g.r_min * g.r_min + u * (g.r_max * g.r_max - g.r_min * g.r_min)).sqrt();
            Point::polar(r, theta)
        })
        .collect();
    let relays = (0..k)
        .map(|j| Point::polar(g.relay_radius, g.angle_min + span * (j + 1) as f64 / (k + 1) as f64))
        .collect();
    Topology { ap: Point::ORIGIN, sources, relays }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Fading {
    Rayleigh,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelModelConfig {
    pub pl_d0_db: f64,
    pub shadowing_sigma_db: f64,
    pub pathloss_exponent: f64,
    pub fading: Fading,
}

impl Default for ChannelModelConfig {
    fn default() -> Self {
        Self { pl_d0_db: 31.67, shadowing_sigma_db: 2f64.sqrt(), pathloss_exponent: 2.0, fading: Fading::Rayleigh }
    }
}

impl ChannelModelConfig {
    /// Distance-only channels: no shadowing, no fading.
    pub fn deterministic(pl_d0_db: f64, exponent: f64) -> Self {
        Self { pl_d0_db, shadowing_sigma_db: 0.0, pathloss_exponent: exponent, fading: Fading::None }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.pathloss_exponent >= 0.0) {
            return Err(invalid("exponent", "path-loss exponent must be non-negative"));
        }
        if !(self.shadowing_sigma_db >= 0.0) {
            return Err(invalid("sigma_z_db", "shadowing deviation must be non-negative"));
        }
        Ok(())
    }

    /// Mean linear gain at distance `d` (d0 = 1 m), before shadowing and fading.
    pub fn mean_gain(&self, d: f64) -> f64 {
        db_to_linear(-(self.pl_d0_db + 10.0 * self.pathloss_exponent * d.log10()))
    }

    /// One power-gain draw for a link of length `d`.
    pub fn draw_gain<R: Rng + ?Sized>(&self, a: &Point, b: &Point, rng: &mut R) -> Result<f64, ModelError> {
        let d = a.dist(b);
        if !(d > 0.0) {
            return Err(ModelError::CoLocated { a: *a, b: *b });
        }
        let z: f64 = if self.shadowing_sigma_db > 0.0 {
            let n: f64 = StandardNormal.sample(rng);
            self.shadowing_sigma_db * n
        } else {
            0.0
        };
        let omega = db_to_linear(-(self.pl_d0_db + 10.0 * self.pathloss_exponent * d.log10()) + z);
        Ok(match self.fading {
            Fading::None => omega,
            Fading::Rayleigh => {
                let e: f64 = Exp1.sample(rng);
                omega * e
            }
        })
    }
}

/// Draws every DL and UL gain independently.
///
/// Direct links are drawn first, so realizations that differ only in their
/// relays share the same direct channels for a given RNG state.
pub fn sample_channels<T: Scalar, R: Rng + ?Sized>(
    topo: &Topology,
    cfg: &ChannelModelConfig,
    rng: &mut R,
) -> Result<ChannelSet<T>, ModelError> {
    let n = topo.sources.len();
    let k = topo.relays.len();
    let mut h_ap_src = Vec::with_capacity(n);
    let mut g_src_ap = Vec::with_capacity(n);
    for s in &topo.sources {
        h_ap_src.push(T::lit(cfg.draw_gain(&topo.ap, s, rng)?));
        g_src_ap.push(T::lit(cfg.draw_gain(s, &topo.ap, rng)?));
    }
    let mut h_ap_rel = Vec::with_capacity(k);
    let mut g_rel_ap = Vec::with_capacity(k);
    for r in &topo.relays {
        h_ap_rel.push(T::lit(cfg.draw_gain(&topo.ap, r, rng)?));
        g_rel_ap.push(T::lit(cfg.draw_gain(r, &topo.ap, rng)?));
    }
    let mut g_src_rel = vec![Vec::with_capacity(k); n];
    for r in &topo.relays {
        for (i, s) in topo.sources.iter().enumerate() {
            g_src_rel[i].push(T::lit(cfg.draw_gain(s, r, rng)?));
        }
    }
    Ok(ChannelSet { h_ap_src, h_ap_rel, g_src_ap, g_src_rel, g_rel_ap })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkInstance<T> {
    pub params: SystemParams<T>,
    pub channels: ChannelSet<T>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub positions: Option<Topology>,
}

impl<T: Scalar> NetworkInstance<T> {
    pub fn new(params: SystemParams<T>, channels: ChannelSet<T>) -> Result<Self, ModelError> {
        let inst = Self { params, channels, positions: None };
        inst.validate()?;
        Ok(inst)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        self.params.validate()?;
        self.channels.validate(self.num_sources(), self.num_relays())
    }

    pub fn num_sources(&self) -> usize {
        self.params.num_sources()
    }

    pub fn num_relays(&self) -> usize {
        self.params.num_relays()
    }

    pub fn with_pmax(mut self, pmax: T) -> Self {
        self.params.max_ul_power_w = pmax;
        self
    }

    /// Same instance in another precision.
    pub fn cast<U: Scalar>(&self) -> NetworkInstance<U> {
        let c = |x: T| U::lit(x.as_f64());
        let p = &self.params;
        NetworkInstance {
            params: SystemParams {
                bandwidth_hz: c(p.bandwidth_hz),
                noise_psd_w_per_hz: c(p.noise_psd_w_per_hz),
                ap_power_w: c(p.ap_power_w),
                max_ul_power_w: c(p.max_ul_power_w),
                zeta_src: p.zeta_src.iter().map(|&x| c(x)).collect(),
                zeta_rel: p.zeta_rel.iter().map(|&x| c(x)).collect(),
                demands_bits: p.demands_bits.iter().map(|&x| c(x)).collect(),
            },
            channels: self.channels.map(c),
            positions: self.positions.clone(),
        }
    }
}

fn default_n() -> usize {
    5
}
fn default_k() -> usize {
    2
}
fn default_r_min() -> f64 {
    3.0
}
fn default_r_max() -> f64 {
    4.0
}
fn default_relay_radius() -> f64 {
    2.0
}
fn default_pl_d0() -> f64 {
    31.67
}
fn default_sigma() -> f64 {
    2f64.sqrt()
}
fn default_exponent() -> f64 {
    2.0
}
fn default_fading() -> Fading {
    Fading::Rayleigh
}
fn default_bandwidth() -> f64 {
    1e6
}
fn default_n0_dbm() -> f64 {
    -90.0
}
fn default_ap_power() -> f64 {
    4.0
}
fn default_pmax() -> f64 {
    0.01
}
fn default_zeta() -> f64 {
    0.5
}
fn default_demand() -> f64 {
    50.0
}
fn default_angle_max() -> f64 {
    std::f64::consts::FRAC_PI_2
}

/// Topology, channel and radio configuration as read from JSON.
///
/// Every key is optional; missing keys take the defaults of the reference
/// simulation setup (5 sources, 2 relays, 1 MHz, -90 dBm/Hz, 4 W AP, 10 mW cap).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_r_min")]
    pub r_min_m: f64,
    #[serde(default = "default_r_max")]
    pub r_max_m: f64,
    #[serde(default = "default_relay_radius")]
    pub relay_radius_m: f64,
    #[serde(default)]
    pub angle_min_rad: f64,
    #[serde(default = "default_angle_max")]
    pub angle_max_rad: f64,
    #[serde(default = "default_pl_d0")]
    pub pl_d0_db: f64,
    /// Shadowing standard deviation in dB.
    #[serde(default = "default_sigma")]
    pub sigma_z_db: f64,
    #[serde(default = "default_exponent")]
    pub exponent: f64,
    #[serde(default = "default_fading")]
    pub fading: Fading,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_bandwidth")]
    pub bandwidth_hz: f64,
    #[serde(default = "default_n0_dbm")]
    pub n0_dbm_per_hz: f64,
    #[serde(default = "default_ap_power")]
    pub ap_power_w: f64,
    #[serde(default = "default_pmax")]
    pub pmax_w: f64,
    #[serde(default = "default_zeta")]
    pub zeta: f64,
    #[serde(default = "default_demand")]
    pub demand_bits: f64,
}

impl Default for Scenario {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all scenario keys have defaults")
    }
}

impl Scenario {
    pub fn geometry(&self) -> GeometryConfig {
        GeometryConfig {
            r_min: self.r_min_m,
            r_max: self.r_max_m,
            relay_radius: self.relay_radius_m,
            angle_min: self.angle_min_rad,
            angle_max: self.angle_max_rad,
        }
    }

    pub fn channel_model(&self) -> ChannelModelConfig {
        ChannelModelConfig {
            pl_d0_db: self.pl_d0_db,
            shadowing_sigma_db: self.sigma_z_db,
            pathloss_exponent: self.exponent,
            fading: self.fading,
        }
    }

    pub fn radio<T: Scalar>(&self) -> Radio<T> {
        Radio {
            bandwidth: T::lit(self.bandwidth_hz),
            noise_psd: T::lit(dbm_to_watts(self.n0_dbm_per_hz)),
            ap_power: T::lit(self.ap_power_w),
        }
    }

    pub fn params<T: Scalar>(&self) -> SystemParams<T> {
        SystemParams::uniform(self.n, self.k, self.radio(), T::lit(self.pmax_w), T::lit(self.zeta), T::lit(self.demand_bits))
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        self.geometry().validate()?;
        self.channel_model().validate()?;
        self.params::<f64>().validate()
    }

    /// One random realization: topology first, then channels, from the same stream.
    pub fn realize<T: Scalar, R: Rng + ?Sized>(&self, rng: &mut R) -> Result<NetworkInstance<T>, ModelError> {
        self.validate()?;
        let topo = generate_topology(self.n, self.k, &self.geometry(), rng);
        let channels = sample_channels(&topo, &self.channel_model(), rng)?;
        let mut inst = NetworkInstance::new(self.params(), channels)?;
        inst.positions = Some(topo);
        Ok(inst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn harvested_energy_examples() {
        assert_eq!(harvested_energy(0.5, 0.0, 4.0, 1e-3), 0.0);
        assert!((harvested_energy(0.5_f64, 1e-3, 4.0, 1e-3) - 2e-6).abs() < 1e-20);
        let a = harvested_energy(0.5_f64, 1e-3, 4.0, 1e-3);
        let b = harvested_energy(0.5_f64, 2e-3, 4.0, 1e-3);
        assert!((b - 2.0 * a).abs() < 1e-20);
    }

    #[test]
    fn link_rate_examples() {
        let (w, n0) = (1e6_f64, 1e-12);
        assert_eq!(link_rate(0.0, 1e-3, w, n0), 0.0);
        // snr = p g / (w n0) = 1 and 3
        let g = w * n0;
        assert!((link_rate(1.0, g, w, n0) - w).abs() < 1e-6);
        assert!((link_rate(3.0, g, w, n0) - 2.0 * w).abs() < 1e-6);
    }

    #[test]
    fn topology_respects_geometry() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let g = GeometryConfig::default();
        let topo = generate_topology(5, 2, &g, &mut rng);
        assert_eq!(topo.sources.len(), 5);
        for s in &topo.sources {
            let r = s.radius();
            assert!((3.0..=4.0).contains(&r));
            assert!(s.x >= 0.0 && s.y >= 0.0);
        }
        for r in &topo.relays {
            assert!((r.radius() - 2.0).abs() < 1e-12);
        }
        assert!(generate_topology(3, 0, &g, &mut rng).relays.is_empty());
    }

    #[test]
    fn degenerate_angle_puts_source_on_x_axis() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g = GeometryConfig { angle_min: 0.0, angle_max: 0.0, ..Default::default() };
        let topo = generate_topology(1, 0, &g, &mut rng);
        let s = topo.sources[0];
        assert!(s.y.abs() < 1e-15 && s.x >= 3.0 && s.x <= 4.0);
    }

    #[test]
    fn deterministic_path_loss() {
        let cfg = ChannelModelConfig::deterministic(31.67, 2.0);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let g1 = cfg.draw_gain(&Point::ORIGIN, &Point::new(1.0, 0.0), &mut rng).unwrap();
        assert!((g1 - 10f64.powf(-3.167)).abs() < 1e-18);
        let g2 = cfg.draw_gain(&Point::ORIGIN, &Point::new(2.0, 0.0), &mut rng).unwrap();
        assert!((g1 / g2 - 4.0).abs() < 1e-12);
    }

    #[test]
    fn zero_distance_is_an_error() {
        let cfg = ChannelModelConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let err = cfg.draw_gain(&Point::new(1.0, 1.0), &Point::new(1.0, 1.0), &mut rng).unwrap_err();
        assert!(matches!(err, ModelError::CoLocated { .. }));
    }

    #[test]
    fn seeded_channels_are_reproducible() {
        let sc = Scenario::default();
        let a: NetworkInstance<f64> = sc.realize(&mut ChaCha8Rng::seed_from_u64(42)).unwrap();
        let b: NetworkInstance<f64> = sc.realize(&mut ChaCha8Rng::seed_from_u64(42)).unwrap();
        assert_eq!(a, b);
        let c: NetworkInstance<f64> = sc.realize(&mut ChaCha8Rng::seed_from_u64(43)).unwrap();
        assert_ne!(a.channels, c.channels);
    }

    #[test]
    fn direct_channels_do_not_depend_on_relay_count() {
        let base = Scenario { k: 0, ..Default::default() };
        let more = Scenario { k: 6, ..Default::default() };
        let a: NetworkInstance<f64> = base.realize(&mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b: NetworkInstance<f64> = more.realize(&mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a.channels.h_ap_src, b.channels.h_ap_src);
        assert_eq!(a.channels.g_src_ap, b.channels.g_src_ap);
    }

    #[test]
    fn rayleigh_mean_matches_omega() {
        let cfg = ChannelModelConfig { shadowing_sigma_db: 0.0, ..Default::default() };
        let (a, b) = (Point::ORIGIN, Point::new(3.0, 0.0));
        let omega = cfg.mean_gain(3.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 100_000;
        let draws: Vec<f64> = (0..n).map(|_| cfg.draw_gain(&a, &b, &mut rng).unwrap()).collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let se = (var / n as f64).sqrt();
        assert!((mean - omega).abs() <= 3.0 * se, "mean {mean} omega {omega} se {se}");
    }

    #[test]
    fn scenario_json_defaults_and_keys() {
        let sc: Scenario = serde_json::from_str(r#"{"n": 3, "k": 1, "fading": "none", "sigma_z_db": 0.0}"#).unwrap();
        assert_eq!(sc.n, 3);
        assert_eq!(sc.fading, Fading::None);
        assert_eq!(sc.pl_d0_db, 31.67);
        assert!(serde_json::from_str::<Scenario>(r#"{"bogus": 1}"#).is_err());
        let bad = Scenario { r_min_m: 5.0, ..Default::default() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn instance_json_round_trip() {
        let sc = Scenario::default();
        let inst: NetworkInstance<f64> = sc.realize(&mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let text = serde_json::to_string(&inst).unwrap();
        let back: NetworkInstance<f64> = serde_json::from_str(&text).unwrap();
        assert_eq!(inst, back);
    }

    #[test]
    fn params_validation() {
        let radio = Radio { bandwidth: 1e6, noise_psd: 1e-12, ap_power: 4.0 };
        let mut p = SystemParams::uniform(2, 1, radio, 0.01, 0.5, 50.0);
        assert!(p.validate().is_ok());
        p.zeta_src[0] = 1.5;
        assert!(p.validate().is_err());
        let empty = SystemParams::uniform(0, 1, radio, 0.01, 0.5, 50.0);
        assert!(empty.validate().is_err());
    }
}
