//! Error function and the soft-split decision function built on it.

/// Gauss error function, odd and monotone, `|erf(z)| < 1` for finite z.
///
/// Backed by libm's double-precision rational approximation; absolute
/// error is far below the 1e-7 this crate requires.
#[inline]
pub fn erf(z: f64) -> f64 {
    libm::erf(z)
}

/// Soft splitting probability `0.5 * erf(alpha * pre) + 0.5`, where `pre`
/// is the node pre-activation `w . x`. Output lies in (0, 1); `alpha`
/// controls the hardness of the split.
#[inline]
pub fn decision(alpha: f64, pre: f64) -> f64 {
    0.5 * erf(alpha * pre) + 0.5
}

/// Derivative of [`decision`] with respect to the pre-activation:
/// `alpha * exp(-(alpha*pre)^2) / sqrt(pi)`.
#[inline]
pub fn decision_slope(alpha: f64, pre: f64) -> f64 {
    let t = alpha * pre;
    alpha * libm::exp(-t * t) / libm::sqrt(core::f64::consts::PI)
}
