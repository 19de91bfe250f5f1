//! Float helpers that work without `std`.

pub(crate) fn log2(x: f64) -> f64 {
    libm::log2(x)
}

pub(crate) fn exp(x: f64) -> f64 {
    libm::exp(x)
}

pub(crate) fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

pub(crate) fn ceil(x: f64) -> f64 {
    libm::ceil(x)
}

pub(crate) fn acosh(x: f64) -> f64 {
    libm::acosh(x)
}

pub(crate) fn cos(x: f64) -> f64 {
    libm::cos(x)
}

pub(crate) fn acos(x: f64) -> f64 {
    libm::acos(x)
}

pub(crate) fn powi(x: f64, k: i32) -> f64 {
    libm::pow(x, k as f64)
}

pub(crate) fn hypot(x: f64, y: f64) -> f64 {
    libm::hypot(x, y)
}

/// Euclidean norm with overflow-safe accumulation.
pub(crate) fn norm2(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |acc, &v| hypot(acc, v))
}

/// `ln(cosh(t))` for `t >= 0` without overflow.
pub(crate) fn ln_cosh(t: f64) -> f64 {
    t + libm::log1p(libm::exp(-2.0 * t)) - core::f64::consts::LN_2
}
