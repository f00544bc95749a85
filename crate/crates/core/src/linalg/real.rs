use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar used by every kernel. Implemented for `f32` and `f64`.
pub trait Real:
    Float
    + FromPrimitive
    + ToPrimitive
    + Sum
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Debug
    + Display
    + LowerExp
    + Default
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal into this precision (rounding for `f32`).
    fn lit(x: f64) -> Self;

    fn as_f64(self) -> f64;
}

impl Real for f64 {
    #[inline]
    fn lit(x: f64) -> Self {
        x
    }
    #[inline]
    fn as_f64(self) -> f64 {
        self
    }
}

impl Real for f32 {
    #[inline]
    fn lit(x: f64) -> Self {
        x as f32
    }
    #[inline]
    fn as_f64(self) -> f64 {
        self as f64
    }
}

/// Dense vector helpers on slices.
pub mod vec_ops {
    use super::Real;

    pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
        debug_assert_eq!(a.len(), b.len());
        a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
    }

    /// Euclidean norm with scaling against overflow.
    pub fn norm2<T: Real>(a: &[T]) -> T {
        let scale = a.iter().fold(T::zero(), |m, &x| m.max(x.abs()));
        if scale == T::zero() || !scale.is_finite() {
            return scale;
        }
        let ss = a.iter().fold(T::zero(), |acc, &x| {
            let y = x / scale;
            acc + y * y
        });
        scale * ss.sqrt()
    }

    pub fn norm2_sq<T: Real>(a: &[T]) -> T {
        dot(a, a)
    }

    pub fn sub<T: Real>(a: &[T], b: &[T]) -> Vec<T> {
        debug_assert_eq!(a.len(), b.len());
        a.iter().zip(b).map(|(&x, &y)| x - y).collect()
    }

    pub fn add<T: Real>(a: &[T], b: &[T]) -> Vec<T> {
        debug_assert_eq!(a.len(), b.len());
        a.iter().zip(b).map(|(&x, &y)| x + y).collect()
    }

    /// `y += alpha * x`
    pub fn axpy<T: Real>(alpha: T, x: &[T], y: &mut [T]) {
        debug_assert_eq!(x.len(), y.len());
        for (yi, &xi) in y.iter_mut().zip(x) {
            *yi += alpha * xi;
        }
    }

    pub fn scale<T: Real>(alpha: T, x: &[T]) -> Vec<T> {
        x.iter().map(|&v| alpha * v).collect()
    }

    pub fn max_abs<T: Real>(x: &[T]) -> T {
        x.iter().fold(T::zero(), |m, &v| m.max(v.abs()))
    }

    pub fn cast<S: Real, T: Real>(x: &[S]) -> Vec<T> {
        x.iter().map(|&v| T::lit(v.as_f64())).collect()
    }
}
