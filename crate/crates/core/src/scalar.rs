//! Scalar abstraction shared by every numeric module.

use nalgebra::RealField;
use num_traits::ToPrimitive;

/// Floating-point scalar the pipeline is generic over (`f32` or `f64`).
///
/// Arithmetic, transcendental functions and `pi()` come from
/// [`RealField`]; conversion to and from `f64` goes through `num-traits`.
pub trait Scalar: RealField + Copy + ToPrimitive {
    /// Converts an `f64` literal into this scalar type.
    #[inline]
    fn of(x: f64) -> Self {
        <Self as num_traits::FromPrimitive>::from_f64(x).expect("f64 literal representable")
    }

    /// Converts an integer count into this scalar type.
    #[inline]
    fn of_usize(n: usize) -> Self {
        Self::of(n as f64)
    }

    /// Lossy conversion back to `f64`, used for logging and RNG plumbing.
    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    #[inline]
    #[allow(clippy::eq_op)]
    fn is_nan(self) -> bool {
        self != self
    }

    /// Machine epsilon of the concrete type.
    fn epsilon() -> Self;
}

impl Scalar for f64 {
    fn epsilon() -> Self {
        f64::EPSILON
    }
}

impl Scalar for f32 {
    fn epsilon() -> Self {
        f32::EPSILON
    }
}

/// Wraps an angle into the half-open interval `(-pi, pi]`.
pub fn wrap_angle<T: Scalar>(angle: T) -> T {
    let two_pi = T::two_pi();
    let mut a = angle % two_pi;
    if a > T::pi() {
        a -= two_pi;
    } else if a <= -T::pi() {
        a += two_pi;
    }
    a
}

/// Euclidean remainder of `angle` by `2 pi`, in `[0, 2 pi)`.
pub fn rem_two_pi<T: Scalar>(angle: T) -> T {
    let two_pi = T::two_pi();
    let r = angle % two_pi;
    if r < T::zero() {
        r + two_pi
    } else {
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn wrap_is_half_open() {
        assert_eq!(wrap_angle(PI), PI);
        assert!((wrap_angle(-PI) - PI).abs() < 1e-15);
        assert!((wrap_angle(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-15);
        assert!((wrap_angle(-350f64.to_radians()) - 10f64.to_radians()).abs() < 1e-12);
        assert_eq!(wrap_angle(0.0f32), 0.0);
    }

    #[test]
    fn rem_is_non_negative() {
        assert!((rem_two_pi(-PI / 2.0) - 1.5 * PI).abs() < 1e-15);
        assert!((rem_two_pi(5.0 * PI) - PI).abs() < 1e-12);
    }
}
