use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Floating-point scalar used by the analytic solvers.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + NumAssign + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal. Panics only for values the type cannot hold at all (NaN is fine).
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    #[inline]
    fn ln2() -> Self {
        Self::lit(std::f64::consts::LN_2)
    }

    /// Absolute tolerance floor for quantities of magnitude `scale`.
    #[inline]
    fn tol_floor(scale: Self) -> Self {
        Self::lit(8.0) * Self::epsilon() * scale.abs()
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
