//! Float math shim: `std` intrinsics when available, `libm` otherwise.
//!
//! Only the handful of transcendental functions the solver actually needs.
//! `abs`, `max`, `min` and `clamp` are `core`-stable and used directly.

#[cfg(feature = "std")]
#[inline]
pub fn exp(x: f64) -> f64 {
    x.exp()
}

#[cfg(all(not(feature = "std"), feature = "libm"))]
#[inline]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[cfg(feature = "std")]
#[inline]
pub fn sqrt(x: f64) -> f64 {
    x.sqrt()
}

#[cfg(all(not(feature = "std"), feature = "libm"))]
#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[cfg(feature = "std")]
#[inline]
pub fn ln(x: f64) -> f64 {
    x.ln()
}

#[cfg(all(not(feature = "std"), feature = "libm"))]
#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[cfg(feature = "std")]
#[inline]
pub fn ceil(x: f64) -> f64 {
    x.ceil()
}

#[cfg(all(not(feature = "std"), feature = "libm"))]
#[inline]
pub fn ceil(x: f64) -> f64 {
    libm::ceil(x)
}

/// Base-2 logarithm, used by convergence-order estimation.
#[inline]
pub fn log2(x: f64) -> f64 {
    ln(x) / core::f64::consts::LN_2
}
