//! Bessel functions J0 and J1 of real argument.

use std::f64::consts::{FRAC_PI_4, PI};

use crate::error::{Error, Result};

/// Switch point from the power series to the Hankel expansion.
const SERIES_LIMIT: f64 = 12.0;

fn series(nu: u32, x: f64) -> f64 {
    let h = 0.5 * x;
    let mut term = h.powi(nu as i32) / (1..=nu).map(f64::from).product::<f64>();
    let mut sum = term;
    let h2 = h * h;
    for m in 1..200u32 {
        term *= -h2 / (m as f64 * (m + nu) as f64);
        sum += term;
        if term.abs() < 1e-17 * sum.abs().max(1e-300) {
            break;
        }
    }
    sum
}

/// J_ν(x) ≈ √(2/(πx)) (P cos χ − Q sin χ), χ = x − νπ/2 − π/4, summing the
/// asymptotic P and Q series until their terms stop decreasing.
fn hankel(nu: u32, x: f64) -> f64 {
    let mu = 4.0 * (nu * nu) as f64;
    let z = 8.0 * x;
    let mut p = 1.0;
    let mut q = 0.0;
    let mut term = 1.0f64;
    let mut last = f64::INFINITY;
    for k in 1..40u32 {
        let odd = (2 * k - 1) as f64;
        term *= (mu - odd * odd) / (k as f64 * z);
        if term.abs() >= last {
            break;
        }
        last = term.abs();
        // k odd feeds Q with sign (+, −, +, …); k even feeds P with (−, +, …).
        match k % 4 {
            1 => q += term,
            2 => p -= term,
            3 => q -= term,
            _ => p += term,
        }
    }
    let chi = x - nu as f64 * PI / 2.0 - FRAC_PI_4;
    (2.0 / (PI * x)).sqrt() * (p * chi.cos() - q * chi.sin())
}

/// (J0(x), J1(x)) for x ≥ 0, absolute error below 1e−8.
pub fn bessel_j01(x: f64) -> Result<(f64, f64)> {
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::InvalidArgument(format!("Bessel argument must be finite and >= 0, got {x}")));
    }
    Ok(if x < SERIES_LIMIT {
        (series(0, x), series(1, x))
    } else {
        (hankel(0, x), hankel(1, x))
    })
}
