//! Float math routed through `libm` so the crate stays `no_std` and results
//! do not depend on platform intrinsics.

pub(crate) fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

pub(crate) fn hypot(x: f64, y: f64) -> f64 {
    libm::hypot(x, y)
}

pub(crate) fn exp(x: f64) -> f64 {
    libm::exp(x)
}

pub(crate) fn log2(x: f64) -> f64 {
    libm::log2(x)
}

pub(crate) fn log10(x: f64) -> f64 {
    libm::log10(x)
}

pub(crate) fn powf(base: f64, exponent: f64) -> f64 {
    libm::pow(base, exponent)
}

pub(crate) fn atan(x: f64) -> f64 {
    libm::atan(x)
}

pub(crate) fn abs(x: f64) -> f64 {
    libm::fabs(x)
}

/// 10^(x/10): dB → linear power ratio.
pub(crate) fn db_to_linear(x_db: f64) -> f64 {
    powf(10.0, x_db / 10.0)
}
