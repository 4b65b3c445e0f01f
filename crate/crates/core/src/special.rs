//! Gamma-family special functions.
//!
//! The scalar functions are self-contained: `ln_gamma` uses a Lanczos
//! approximation (g = 671/128, 14 terms), `digamma` and `trigamma` shift the
//! argument upward with the recurrence and finish with the asymptotic series.
//! The multivariate versions are sums of shifted scalar evaluations.

use std::f64::consts::PI;

use crate::error::{Error, Result};

const LANCZOS_G_SHIFT: f64 = 5.242_187_5;
const LANCZOS_SERIES_ORIGIN: f64 = 0.999_999_999_999_997_1;
const SQRT_TWO_PI: f64 = 2.506_628_274_631_000_5;
const LANCZOS_COEFFS: [f64; 14] = [
    57.156_235_665_862_923_5,
    -59.597_960_355_475_491_2,
    14.136_097_974_741_747_1,
    -0.491_913_816_097_620_199,
    0.339_946_499_848_118_887e-4,
    0.465_236_289_270_485_756e-4,
    -0.983_744_753_048_795_646e-4,
    0.158_088_703_224_912_494e-3,
    -0.210_264_441_724_104_883e-3,
    0.217_439_618_115_212_643e-3,
    -0.164_318_106_536_763_890e-3,
    0.844_182_239_838_527_433e-4,
    -0.261_908_384_015_814_087e-4,
    0.368_991_826_595_316_234e-5,
];

/// Below this argument the asymptotic series is not used directly.
const ASYMPTOTIC_CUTOFF: f64 = 10.0;

fn check_positive(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} requires a finite x > 0, got {x}")))
    }
}

/// Natural log of the gamma function for `x > 0`.
pub fn log_gamma(x: f64) -> Result<f64> {
    check_positive("log_gamma", x)?;
    Ok(ln_gamma_unchecked(x))
}

/// Digamma function ψ(x) = d/dx log Γ(x) for `x > 0`.
pub fn digamma(x: f64) -> Result<f64> {
    check_positive("digamma", x)?;
    Ok(digamma_unchecked(x))
}

/// Trigamma function ψ'(x) for `x > 0`.
pub fn trigamma(x: f64) -> Result<f64> {
    check_positive("trigamma", x)?;
    Ok(trigamma_unchecked(x))
}

pub(crate) fn ln_gamma_unchecked(x: f64) -> f64 {
    if x == 1.0 || x == 2.0 {
        return 0.0;
    }
    let mut tmp = x + LANCZOS_G_SHIFT;
    tmp = (x + 0.5) * tmp.ln() - tmp;
    let mut series = LANCZOS_SERIES_ORIGIN;
    let mut y = x;
    for c in LANCZOS_COEFFS {
        y += 1.0;
        series += c / y;
    }
    tmp + (SQRT_TWO_PI * series / x).ln()
}

pub(crate) fn digamma_unchecked(mut x: f64) -> f64 {
    let mut acc = 0.0;
    while x < ASYMPTOTIC_CUTOFF {
        acc -= 1.0 / x;
        x += 1.0;
    }
    let inv2 = 1.0 / (x * x);
    // Bernoulli-number tail: B_2k / (2k x^2k), k = 1..7
    let tail = inv2
        * (1.0 / 12.0
            - inv2
                * (1.0 / 120.0
                    - inv2
                        * (1.0 / 252.0
                            - inv2
                                * (1.0 / 240.0
                                    - inv2
                                        * (1.0 / 132.0
                                            - inv2 * (691.0 / 32_760.0 - inv2 / 12.0))))));
    acc + x.ln() - 0.5 / x - tail
}

pub(crate) fn trigamma_unchecked(mut x: f64) -> f64 {
    let mut acc = 0.0;
    while x < ASYMPTOTIC_CUTOFF {
        acc += 1.0 / (x * x);
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let tail = inv
        + 0.5 * inv2
        + inv
            * inv2
            * (1.0 / 6.0
                - inv2
                    * (1.0 / 30.0
                        - inv2
                            * (1.0 / 42.0
                                - inv2 * (1.0 / 30.0 - inv2 * (5.0 / 66.0 - inv2 * 691.0 / 2730.0)))));
    acc + tail
}

fn check_multivariate(name: &str, p: usize, a: f64) -> Result<()> {
    if p == 0 {
        return Err(Error::Domain(format!("{name} requires p >= 1")));
    }
    let bound = (p as f64 - 1.0) / 2.0;
    if a > bound && a.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "{name}(p = {p}) requires a > {bound}, got {a}"
        )))
    }
}

/// log Γ_p(a) = p(p-1)/4 · log π + Σ_{i=1}^{p} log Γ(a - (i-1)/2), defined for a > (p-1)/2.
pub fn log_multigamma(p: usize, a: f64) -> Result<f64> {
    check_multivariate("log_multigamma", p, a)?;
    Ok(log_multigamma_unchecked(p, a))
}

pub(crate) fn log_multigamma_unchecked(p: usize, a: f64) -> f64 {
    let pf = p as f64;
    let mut acc = pf * (pf - 1.0) / 4.0 * PI.ln();
    for i in 0..p {
        acc += ln_gamma_unchecked(a - i as f64 / 2.0);
    }
    acc
}

/// ψ_p(x) = Σ_{i=1}^{p} ψ(x - (i-1)/2), the derivative of `log_multigamma`.
pub fn multidigamma(p: usize, x: f64) -> Result<f64> {
    check_multivariate("multidigamma", p, x)?;
    Ok((0..p).map(|i| digamma_unchecked(x - i as f64 / 2.0)).sum())
}

/// ψ'_p(x) = Σ_{i=1}^{p} ψ'(x - (i-1)/2).
pub fn multitrigamma(p: usize, x: f64) -> Result<f64> {
    check_multivariate("multitrigamma", p, x)?;
    Ok((0..p).map(|i| trigamma_unchecked(x - i as f64 / 2.0)).sum())
}
