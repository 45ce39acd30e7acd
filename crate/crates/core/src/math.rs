// Float helpers routed through libm so the crate stays `no_std`.

use crate::C64;

#[inline]
pub(crate) fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub(crate) fn cos(x: f64) -> f64 {
    libm::cos(x)
}

#[inline]
pub(crate) fn sin(x: f64) -> f64 {
    libm::sin(x)
}

#[inline]
pub(crate) fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub(crate) fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub(crate) fn ceil(x: f64) -> f64 {
    libm::ceil(x)
}

#[inline]
pub(crate) fn powf(x: f64, e: f64) -> f64 {
    libm::pow(x, e)
}

/// `e^{iθ}`
#[inline]
pub(crate) fn cis(theta: f64) -> C64 {
    C64::new(cos(theta), sin(theta))
}

#[inline]
pub(crate) fn abs_c(z: C64) -> f64 {
    libm::hypot(z.re, z.im)
}
