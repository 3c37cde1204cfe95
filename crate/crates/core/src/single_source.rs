//! Optimal harvesting and transmission times for a single link.
//!
//! A link funds its uplink slot entirely from energy harvested during the
//! harvesting slot. With `y = D ln2 / (W tau)`, the least harvesting time that
//! lets a slot of length `tau` carry the demand is
//! `V(tau) = tau / gamma * (e^y - 1)`, which is strictly decreasing and convex.
//! Without a power cap the optimum is the point where `V' = -1`; with a cap it
//! may instead sit at the corner where the cap and the demand are both tight.

use serde::{Deserialize, Serialize};

use crate::net_model::{ModelError, Radio};
use crate::numerics::{self, NumericsError};
use crate::Scalar;

/// One uplink transmitter powered by the AP: a source, or a relay carrying
/// the aggregated demand of its sources.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourceLink<T> {
    pub h_dl: T,
    pub g_ul: T,
    pub demand: T,
    pub zeta: T,
    pub radio: Radio<T>,
    /// `g * zeta * P_A * h / (W * N0)`.
    pub gamma: T,
}

impl<T: Scalar> SourceLink<T> {
    pub fn new(h_dl: T, g_ul: T, demand: T, zeta: T, radio: Radio<T>) -> Result<Self, ModelError> {
        radio.validate()?;
        for (name, v) in [("h_dl", h_dl), ("g_ul", g_ul)] {
            if !(v > T::zero() && v.is_finite()) {
                return Err(ModelError::InvalidParam { name, reason: format!("gain must be positive, got {v}") });
            }
        }
        if !(zeta > T::zero() && zeta <= T::one()) {
            return Err(ModelError::InvalidParam { name: "zeta", reason: format!("must lie in (0, 1], got {zeta}") });
        }
        if !(demand >= T::zero() && demand.is_finite()) {
            return Err(ModelError::InvalidParam { name: "demand", reason: format!("must be non-negative, got {demand}") });
        }
        let gamma = g_ul * zeta * radio.ap_power * h_dl / (radio.bandwidth * radio.noise_psd);
        if !(gamma > T::zero() && gamma.is_finite()) {
            return Err(ModelError::InvalidParam { name: "gamma", reason: format!("link SNR factor is {gamma}") });
        }
        Ok(Self { h_dl, g_ul, demand, zeta, radio, gamma })
    }

    pub fn with_demand(&self, demand: T) -> Self {
        Self { demand, ..*self }
    }

    /// Power harvested per second of harvesting slot: `zeta * P_A * h`.
    #[inline]
    pub fn harvest_power(&self) -> T {
        self.zeta * self.radio.ap_power * self.h_dl
    }

    /// `D ln2 / W`: the demand expressed in nats-seconds per Hz.
    #[inline]
    pub fn demand_nats(&self) -> T {
        self.demand * T::ln2() / self.radio.bandwidth
    }

    /// Receive SNR of a transmission at `p_tx` watts.
    #[inline]
    pub fn snr(&self, p_tx: T) -> T {
        p_tx * self.g_ul / (self.radio.bandwidth * self.radio.noise_psd)
    }

    /// Bits delivered in `tau` seconds at `p_tx` watts.
    pub fn bits(&self, tau: T, p_tx: T) -> T {
        if tau <= T::zero() {
            return T::zero();
        }
        tau * self.radio.bandwidth * self.snr(p_tx).ln_1p() / T::ln2()
    }

    /// Infimum of `V`: harvesting times at or below it cannot fund the demand
    /// with any slot length.
    pub fn min_harvest_time(&self) -> T {
        self.demand_nats() / self.gamma
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// Interior tangent point; the power cap is slack.
    Unconstrained,
    /// Corner with the power cap tight.
    PmaxBound,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkSolution<T> {
    pub tau0: T,
    pub tau_it: T,
    pub p_tx: T,
    pub regime: Regime,
}

impl<T: Scalar> LinkSolution<T> {
    pub fn total(&self) -> T {
        self.tau0 + self.tau_it
    }

    fn zero(regime: Regime) -> Self {
        Self { tau0: T::zero(), tau_it: T::zero(), p_tx: T::zero(), regime }
    }
}

/// Minimum harvesting time that funds an uplink slot of length `tau`.
pub fn v_curve<T: Scalar>(tau: T, link: &SourceLink<T>) -> T {
    if link.demand == T::zero() {
        return T::zero();
    }
    if tau <= T::zero() {
        return T::infinity();
    }
    let y = link.demand_nats() / tau;
    tau / link.gamma * y.exp_m1()
}

/// `e^y - 1 - y e^y` for `y = D ln2 / (W tau)`; negative for every `y > 0`.
fn v_slope_numerator<T: Scalar>(y: T) -> T {
    if y < T::lit(0.05) {
        // -sum_{n>=2} (n-1) y^n / n!
        let mut term = y * y / T::lit(2.0);
        let mut sum = term;
        for n in 3..16 {
            term = term * y / T::lit(n as f64);
            sum += term * T::lit((n - 1) as f64);
        }
        -sum
    } else {
        -(y.exp_m1() * (y - T::one()) + y)
    }
}

/// `dV/dtau`; strictly negative for positive demand, tending to `0-` as `tau` grows.
pub fn v_curve_derivative<T: Scalar>(tau: T, link: &SourceLink<T>) -> T {
    if link.demand == T::zero() {
        return T::zero();
    }
    if tau <= T::zero() {
        return T::neg_infinity();
    }
    v_slope_numerator(link.demand_nats() / tau) / link.gamma
}

/// Tangent point of `V` with slope `-1`: the optimum when power is uncapped.
pub fn dot_solution<T: Scalar>(link: &SourceLink<T>) -> Result<LinkSolution<T>, NumericsError> {
    if link.demand == T::zero() {
        return Ok(LinkSolution::zero(Regime::Unconstrained));
    }
    let alpha = numerics::shifted_lambert(link.gamma)?;
    let tau_it = link.demand_nats() / alpha;
    let ratio = alpha.exp_m1() / link.gamma;
    Ok(LinkSolution {
        tau0: tau_it * ratio,
        tau_it,
        p_tx: link.harvest_power() * ratio,
        regime: Regime::Unconstrained,
    })
}

/// Corner where the cap, the energy budget and the demand are all tight.
///
/// For an infinite cap the slot length tends to 0 and the harvesting time to
/// infinity; that limit is returned as `(inf, 0)`.
pub fn ddot_solution<T: Scalar>(link: &SourceLink<T>, pmax: T) -> LinkSolution<T> {
    if link.demand == T::zero() {
        return LinkSolution::zero(Regime::PmaxBound);
    }
    if pmax.is_infinite() {
        return LinkSolution { tau0: T::infinity(), tau_it: T::zero(), p_tx: pmax, regime: Regime::PmaxBound };
    }
    let tau_it = link.demand_nats() / link.snr(pmax).ln_1p();
    LinkSolution { tau0: pmax * tau_it / link.harvest_power(), tau_it, p_tx: pmax, regime: Regime::PmaxBound }
}

/// Relative slack on the cap before the tangent point counts as infeasible.
pub const PMAX_REL_SLACK: f64 = 1e-9;

/// Shortest single-link schedule under the power cap.
pub fn optimal_single<T: Scalar>(link: &SourceLink<T>, pmax: T) -> Result<LinkSolution<T>, NumericsError> {
    let dot = dot_solution(link)?;
    if dot.p_tx <= pmax * (T::one() + T::lit(PMAX_REL_SLACK)) {
        Ok(dot)
    } else {
        Ok(ddot_solution(link, pmax))
    }
}
