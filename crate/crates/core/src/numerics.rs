//! Special functions and scalar root finding shared by the solvers.

use thiserror::Error;

use crate::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericsError {
    #[error("argument {x} is outside the domain of the principal Lambert W branch (x >= -1/e)")]
    Domain { x: f64 },
    #[error("no sign change on the bracket: f(lb) = {f_lb}, f(ub) = {f_ub}")]
    Bracketing { f_lb: f64, f_ub: f64 },
    #[error("invalid root-finding configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("root finder did not converge in {iterations} iterations")]
    NoConvergence { iterations: usize },
}

pub type Result<T> = std::result::Result<T, NumericsError>;

/// Tolerances for the scalar root finders.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootFindConfig {
    pub abs_tol: f64,
    pub max_iter: usize,
}

impl RootFindConfig {
    pub fn new(abs_tol: f64, max_iter: usize) -> Result<Self> {
        if !(abs_tol > 0.0) {
            return Err(NumericsError::InvalidConfig("abs_tol must be positive"));
        }
        if max_iter == 0 {
            return Err(NumericsError::InvalidConfig("max_iter must be at least 1"));
        }
        Ok(Self { abs_tol, max_iter })
    }

    /// Residual tolerance used by [`lambert_w0`].
    pub const fn lambert() -> Self {
        Self { abs_tol: 1e-12, max_iter: 200 }
    }

    /// Time-domain tolerance (seconds).
    pub const fn time() -> Self {
        Self { abs_tol: 1e-9, max_iter: 200 }
    }

    /// Tolerance in `T`, never finer than what `T` can resolve at `scale`.
    pub fn tol_at<T: Scalar>(&self, scale: T) -> T {
        T::lit(self.abs_tol).max(T::tol_floor(scale))
    }
}

impl Default for RootFindConfig {
    fn default() -> Self {
        Self::lambert()
    }
}

/// Principal branch of the Lambert W function: the `w >= -1` solving `w e^w = x`.
pub fn lambert_w0<T: Scalar>(x: T) -> Result<T> {
    let cfg = RootFindConfig::lambert();
    let one = T::one();
    let e = T::lit(std::f64::consts::E);
    let branch = -one / e;
    if x.is_nan() {
        return Err(NumericsError::Domain { x: f64::NAN });
    }
    if x < branch {
        if branch - x <= T::tol_floor(branch) {
            return Ok(-one);
        }
        return Err(NumericsError::Domain { x: x.as_f64() });
    }
    if x == T::zero() {
        return Ok(T::zero());
    }
    if x.is_infinite() {
        return Ok(x);
    }

    let mut w = if x < T::lit(-0.25) {
        // branch-point series in p = sqrt(2(ex + 1))
        let p = (T::lit(2.0) * (e * x + one)).max(T::zero()).sqrt();
        let w = -one + p - p * p / T::lit(3.0) + T::lit(11.0 / 72.0) * p * p * p;
        if p < T::lit(1e-4) {
            return Ok(w);
        }
        w
    } else if x < T::lit(3.0) {
        (one + x).ln()
    } else {
        let l1 = x.ln();
        let l2 = l1.ln();
        l1 - l2 + l2 / l1
    };

    let tol = T::lit(cfg.abs_tol).max(T::epsilon() * T::lit(4.0));
    let mut converged = false;
    for _ in 0..cfg.max_iter {
        let ew = w.exp();
        let f = w * ew - x;
        if f == T::zero() {
            converged = true;
            break;
        }
        let wp1 = w + one;
        let denom = ew * wp1 - (w + T::lit(2.0)) * f / (T::lit(2.0) * wp1);
        let dw = f / denom;
        if !dw.is_finite() {
            break;
        }
        w -= dw;
        if dw.abs() <= tol * (one + w.abs()) {
            converged = true;
            break;
        }
    }
    if converged && w.is_finite() && w >= -one {
        return Ok(w);
    }

    // Halley went astray; w e^w is increasing on [-1, inf) so bisection is safe.
    let hi = x.ln().max(one) + one;
    let w = bisect_root(|w: T| w * w.exp() - x, -one, hi, &RootFindConfig { abs_tol: 1e-15, max_iter: 400 })?;
    Ok(w)
}

/// `1 + W0((gamma - 1) / e)`, i.e. the positive root of `e^a (a - 1) + 1 = gamma`.
///
/// Close to the branch point (small `gamma`) the subtraction `1 + W0` cancels
/// badly, so the root is refined directly from the defining equation there.
pub fn shifted_lambert<T: Scalar>(gamma: T) -> Result<T> {
    if !(gamma > T::zero()) {
        return Err(NumericsError::Domain { x: gamma.as_f64() });
    }
    if gamma > T::lit(0.25) {
        let e = T::lit(std::f64::consts::E);
        return Ok(T::one() + lambert_w0((gamma - T::one()) / e)?);
    }
    // F(a) = a e^a - expm1(a) = sum_{n>=2} (n-1) a^n / n!,  F'(a) = a e^a
    let f = |a: T| -> T {
        if a < T::lit(0.05) {
            let mut term = a * a / T::lit(2.0);
            let mut sum = term;
            for n in 3..16 {
                term = term * a / T::lit(n as f64);
                sum += term * T::lit((n - 1) as f64);
            }
            sum
        } else {
            a * a.exp() - a.exp_m1()
        }
    };
    let s = (T::lit(2.0) * gamma).sqrt();
    let mut a = s - s * s / T::lit(3.0);
    for _ in 0..60 {
        let step = (f(a) - gamma) / (a * a.exp());
        a -= step;
        if step.abs() <= T::epsilon() * a {
            break;
        }
    }
    Ok(a)
}

/// Bisection on a bracket with `f(lb) * f(ub) <= 0`.
pub fn bisect_root<T: Scalar, F: FnMut(T) -> T>(f: F, lb: T, ub: T, cfg: &RootFindConfig) -> Result<T> {
    bisect_root_counted(f, lb, ub, cfg).map(|(x, _)| x)
}

/// [`bisect_root`] that also reports the number of halvings performed.
pub fn bisect_root_counted<T: Scalar, F: FnMut(T) -> T>(
    mut f: F,
    lb: T,
    ub: T,
    cfg: &RootFindConfig,
) -> Result<(T, usize)> {
    let (mut lb, mut ub) = if lb <= ub { (lb, ub) } else { (ub, lb) };
    let mut f_lb = f(lb);
    let f_ub = f(ub);
    if f_lb == T::zero() {
        return Ok((lb, 0));
    }
    if f_ub == T::zero() {
        return Ok((ub, 0));
    }
    if f_lb.signum() == f_ub.signum() || f_lb.is_nan() || f_ub.is_nan() {
        return Err(NumericsError::Bracketing { f_lb: f_lb.as_f64(), f_ub: f_ub.as_f64() });
    }
    let tol = cfg.tol_at(lb.abs().max(ub.abs()));
    let two = T::lit(2.0);
    let mut iterations = 0;
    while ub - lb > two * tol && iterations < cfg.max_iter {
        let mid = (lb + ub) / two;
        if mid <= lb || mid >= ub {
            break;
        }
        let f_mid = f(mid);
        iterations += 1;
        if f_mid == T::zero() {
            return Ok((mid, iterations));
        }
        if f_mid.signum() == f_lb.signum() {
            lb = mid;
            f_lb = f_mid;
        } else {
            ub = mid;
        }
    }
    Ok(((lb + ub) / two, iterations))
}

/// Newton's method kept inside a sign-change bracket, falling back to
/// bisection whenever a step leaves the bracket or stalls.
///
/// `f` returns `(value, derivative)`. Stops once the step is below
/// `rel_tol * |x|` or the bracket collapses.
pub fn newton_bracketed<T: Scalar, F: FnMut(T) -> (T, T)>(
    mut f: F,
    lb: T,
    ub: T,
    rel_tol: T,
    max_iter: usize,
) -> Result<T> {
    let (mut lo, mut hi) = if lb <= ub { (lb, ub) } else { (ub, lb) };
    let (f_lo, _) = f(lo);
    let (f_hi, _) = f(hi);
    if f_lo == T::zero() {
        return Ok(lo);
    }
    if f_hi == T::zero() {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() || f_lo.is_nan() || f_hi.is_nan() {
        return Err(NumericsError::Bracketing { f_lb: f_lo.as_f64(), f_ub: f_hi.as_f64() });
    }
    let lo_sign = f_lo.signum();
    let two = T::lit(2.0);
    let mut x = lo;
    let mut fx = f_lo;
    let mut dfx = f(lo).1;
    let tol = rel_tol.max(T::epsilon());
    for _ in 0..max_iter {
        let newton = x - fx / dfx;
        let candidate = if newton.is_finite() && newton > lo && newton < hi { newton } else { (lo + hi) / two };
        let step = (candidate - x).abs();
        x = candidate;
        let (v, d) = f(x);
        fx = v;
        dfx = d;
        if fx == T::zero() {
            return Ok(x);
        }
        if fx.signum() == lo_sign {
            lo = x;
        } else {
            hi = x;
        }
        if step <= tol * x.abs() || hi - lo <= tol * x.abs() {
            return Ok(x);
        }
    }
    Err(NumericsError::NoConvergence { iterations: max_iter })
}
