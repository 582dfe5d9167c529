//! The signed power transform and its inverse.

/// `|x|^delta` with fast paths for the common exponents.
#[inline]
pub(crate) fn abs_pow(x_abs: f64, delta: f64) -> f64 {
    if delta == 2.0 {
        x_abs * x_abs
    } else if delta == 1.0 {
        x_abs
    } else {
        x_abs.powf(delta)
    }
}

/// Signed power transform `|x|^delta * sgn(x)`.
///
/// Strictly increasing and odd for every `delta > 0`.
#[inline]
pub fn transform(x: f64, delta: f64) -> f64 {
    debug_assert!(delta > 0.0);
    if x == 0.0 {
        return 0.0;
    }
    abs_pow(x.abs(), delta).copysign(x)
}

/// Inverse of [`transform`]: `|x|^(1/delta) * sgn(x)`.
#[inline]
pub fn inverse_transform(x: f64, delta: f64) -> f64 {
    debug_assert!(delta > 0.0);
    if x == 0.0 {
        return 0.0;
    }
    abs_pow(x.abs(), 1.0 / delta).copysign(x)
}

/// Positive part raised to `delta`: `(x^+)^delta`.
#[inline]
pub(crate) fn pos_pow(x: f64, delta: f64) -> f64 {
    if x > 0.0 {
        abs_pow(x, delta)
    } else {
        0.0
    }
}

/// Negative part raised to `delta`: `(-(x^-))^delta`.
#[inline]
pub(crate) fn neg_pow(x: f64, delta: f64) -> f64 {
    if x < 0.0 {
        abs_pow(-x, delta)
    } else {
        0.0
    }
}
