//! Scalar abstraction for the feature-space math.
//!
//! Everything that touches network weights, dataset features, or gradients is
//! generic over [`Scalar`] so the engine runs on `f32` or `f64`. The crate
//! root pins `f64` aliases for the pipeline (finite-difference checks need
//! double precision).

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, NumAssignOps, ToPrimitive};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};

/// Floating-point scalar usable as network weight / feature element.
///
/// The sampling hooks exist so generic code can draw noise without dragging
/// `rand_distr` bounds through every signature.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + NumAssignOps + Debug + Display + Send + Sync + 'static
{
    /// Uniform draw from `[lo, hi)`.
    fn sample_uniform<R: Rng + ?Sized>(rng: &mut R, lo: Self, hi: Self) -> Self;

    /// Standard normal draw.
    fn sample_standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Infallible conversion from `f64` (fine for the constant range we use).
    fn from_f64_lossy(v: f64) -> Self {
        Self::from_f64(v).expect("constant representable in scalar type")
    }

    /// Infallible widening to `f64`.
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().expect("scalar widens to f64")
    }
}

macro_rules! impl_scalar {
    ($($t:ty)*) => {$(
        impl Scalar for $t {
            fn sample_uniform<R: Rng + ?Sized>(rng: &mut R, lo: Self, hi: Self) -> Self {
                Uniform::new(lo, hi).sample(rng)
            }

            fn sample_standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
                StandardNormal.sample(rng)
            }
        }
    )*};
}

impl_scalar!(f32 f64);
