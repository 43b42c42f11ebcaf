//! Scalar abstraction for the dense-math layer.
//!
//! Everything in [`crate::numerics`] is generic over [`Scalar`] so the same
//! kernels serve f32 and f64. The pipeline itself runs on f64 (see the
//! crate-root aliases): gradient checks at rtol 1e-4 need the headroom.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Floating-point scalar usable by the matrix kernels.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + NumAssign + Sum + Debug + Display + Default + 'static
{
    /// Lossless-enough conversion from f64 (used for constants and RNG draws).
    fn from_f64_lossy(v: f64) -> Self {
        Self::from_f64(v).expect("f64 conversion")
    }

    /// Conversion to f64 for reporting and serialization.
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().expect("f64 conversion")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
