//! Weighted Delannoy numbers: power-series coefficients ψ_{n,k} of
//! 1/(1 − φ1 z1 − φ2 z2 − φ3 z1 z2), i.e. weighted counts of lattice paths
//! with steps (1,0), (0,1), (1,1).

mod bessel;
mod dd;
mod exact;
mod jacobi;

pub use bessel::bessel_j01;
pub use jacobi::{asymptotic_decay_diagnostic, jacobi_poly, AsymptoticRow, AsymptoticTable, JacobiEvalRequest};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use self::dd::Dd;
use crate::error::{Error, Result};
use crate::existence::{bidisc_zero_free_bilinear, BidiscResult};
use crate::poly::IndexBox;
use crate::spectral::{CoefficientField, SupportKind};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DelannoyParams {
    pub phi1: f64,
    pub phi2: f64,
    pub phi3: f64,
}

impl DelannoyParams {
    pub fn new(phi1: f64, phi2: f64, phi3: f64) -> Self {
        DelannoyParams { phi1, phi2, phi3 }
    }

    /// Weights with z1 and z2 exchanged.
    pub fn swapped(&self) -> Self {
        DelannoyParams::new(self.phi2, self.phi1, self.phi3)
    }

    fn abs(&self) -> Self {
        DelannoyParams::new(self.phi1.abs(), self.phi2.abs(), self.phi3.abs())
    }

    fn nonzero_count(&self) -> usize {
        [self.phi1, self.phi2, self.phi3].iter().filter(|&&x| x != 0.0).count()
    }
}

fn check_indices(n: i64, k: i64) -> Result<(usize, usize)> {
    if n < 0 || k < 0 {
        return Err(Error::InvalidArgument(format!("negative Delannoy index ({n}, {k})")));
    }
    Ok((n as usize, k as usize))
}

/// Row-major (n_max+1)×(k_max+1) table of ψ filled by
/// ψ_{n,k} = φ1ψ_{n−1,k} + φ2ψ_{n,k−1} + φ3ψ_{n−1,k−1}, ψ_{0,0} = 1.
pub fn delannoy_table(p: DelannoyParams, n_max: usize, k_max: usize) -> Vec<f64> {
    let w = k_max + 1;
    let mut t = vec![0.0; (n_max + 1) * w];
    for n in 0..=n_max {
        for k in 0..=k_max {
            t[n * w + k] = if n == 0 && k == 0 {
                1.0
            } else {
                let a = if n > 0 { p.phi1 * t[(n - 1) * w + k] } else { 0.0 };
                let b = if k > 0 { p.phi2 * t[n * w + k - 1] } else { 0.0 };
                let c = if n > 0 && k > 0 { p.phi3 * t[(n - 1) * w + k - 1] } else { 0.0 };
                a + b + c
            };
        }
    }
    t
}

pub fn delannoy_recursive(p: DelannoyParams, n: i64, k: i64) -> Result<f64> {
    let (n, k) = check_indices(n, k)?;
    Ok(delannoy_table(p, n, k)[n * (k + 1) + k])
}

/// C(n, r); the running product stays integral at every step.
fn binom_u128(n: usize, r: usize) -> u128 {
    if r > n {
        return 0;
    }
    let r = r.min(n - r);
    (1..=r as u128).fold(1u128, |acc, i| acc * (n as u128 - r as u128 + i) / i)
}

fn binom(n: usize, r: usize) -> Dd {
    Dd::from_u128(binom_u128(n, r))
}

/// Σ_j w_j a^{n−j} b^{k−j} c^j in double-double; the closed forms are
/// alternating for mixed-sign weights and lose every f64 digit otherwise.
fn closed_sum(n: usize, k: usize, a: Dd, b: Dd, c: Dd, weight: impl Fn(usize) -> Dd) -> Dd {
    (0..=n.min(k))
        .map(|j| weight(j) * a.powi((n - j) as u32) * b.powi((k - j) as u32) * c.powi(j as u32))
        .fold(Dd::ZERO, |acc, t| acc + t)
}

/// Σ_j C(k,j) C(n+k−j,k) φ1^{n−j} φ2^{k−j} φ3^j.
pub fn delannoy_closed_a(p: DelannoyParams, n: i64, k: i64) -> Result<f64> {
    let (n, k) = check_indices(n, k)?;
    let (a, b, c) = (Dd::from(p.phi1), Dd::from(p.phi2), Dd::from(p.phi3));
    Ok(closed_sum(n, k, a, b, c, |j| binom(k, j) * binom(n + k - j, k)).to_f64())
}

/// Σ_j C(n,j) C(k,j) φ1^{n−j} φ2^{k−j} (φ1φ2+φ3)^j.
pub fn delannoy_closed_b(p: DelannoyParams, n: i64, k: i64) -> Result<f64> {
    let (n, k) = check_indices(n, k)?;
    Ok(closed_b_dd(p, n, k).to_f64())
}

fn closed_b_dd(p: DelannoyParams, n: usize, k: usize) -> Dd {
    let (a, b) = (Dd::from(p.phi1), Dd::from(p.phi2));
    let s = a * b + Dd::from(p.phi3);
    closed_sum(n, k, a, b, s, |j| binom(n, j) * binom(k, j))
}

/// Largest index for which the exact integer path is available.
pub const EXACT_LIMIT: usize = 20;

/// Exact ψ_{n,k} for integer weights, or None outside the overflow-safe window.
pub fn delannoy_exact(phi: [i64; 3], n: usize, k: usize) -> Option<i128> {
    if n > EXACT_LIMIT || k > EXACT_LIMIT || phi.iter().any(|x| x.abs() > 16) {
        return None;
    }
    let w = k + 1;
    let mut t = vec![0i128; (n + 1) * w];
    for i in 0..=n {
        for j in 0..=k {
            t[i * w + j] = if i == 0 && j == 0 {
                1
            } else {
                let a = if i > 0 { phi[0] as i128 * t[(i - 1) * w + j] } else { 0 };
                let b = if j > 0 { phi[1] as i128 * t[i * w + j - 1] } else { 0 };
                let c = if i > 0 && j > 0 { phi[2] as i128 * t[(i - 1) * w + j - 1] } else { 0 };
                a.checked_add(b)?.checked_add(c)?
            };
        }
    }
    Some(t[n * w + k])
}

/// ψ on {0..n}×{0..n} as a causal coefficient field with its decay fit.
pub fn delannoy_field(p: DelannoyParams, n: usize) -> CoefficientField {
    let values = delannoy_table(p, n, n)
        .into_iter()
        .map(|v| Complex64::new(v, 0.0))
        .collect();
    CoefficientField::new(IndexBox::orthant(&[n, n]), values, SupportKind::CausalOrthant)
        .expect("table matches box")
        .fit_decay()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct IdentityRow {
    pub beta: u32,
    pub k: u32,
    pub lhs: f64,
    pub rhs: f64,
    pub abs_diff: f64,
    /// Σ_j |term_j| of the closed form, the scale of its rounding error.
    pub term_scale: f64,
}

/// ψ_{k+β,k} against φ1^β (−φ3)^k P_k^{(0,β)}(−2φ1φ2/φ3 − 1).
pub fn jacobi_delannoy_identity(p: DelannoyParams, beta: u32, k: u32) -> Result<IdentityRow> {
    if p.phi3 == 0.0 {
        return Err(Error::InvalidArgument("the Jacobi identity needs phi3 != 0".into()));
    }
    let n = (k + beta) as usize;
    let term_scale = closed_b_dd(p.abs_closed_b_weights(), n, k as usize).to_f64();
    // ψ reaches 1e28 for weights in (−1,1), beyond any floating resolution
    // of an absolute 1e−8, so both sides are evaluated exactly.
    let (lhs, rhs, abs_diff) = exact::identity_values([p.phi1, p.phi2, p.phi3], beta, k);
    Ok(IdentityRow {
        beta,
        k,
        lhs,
        rhs,
        abs_diff,
        term_scale,
    })
}

impl DelannoyParams {
    /// Weights (|φ1|, |φ2|, |φ1φ2+φ3| − |φ1φ2|) whose closed form b sums the
    /// absolute values of the terms of closed form b for `self`.
    fn abs_closed_b_weights(&self) -> DelannoyParams {
        let a = self.phi1.abs();
        let b = self.phi2.abs();
        let s = (self.phi1 * self.phi2 + self.phi3).abs();
        DelannoyParams::new(a, b, s - a * b)
    }
}

/// Smallest B such that every ψ_{n,k} outside {0..B}² has |ψ_{n,k}| < 1/x.
///
/// Two certificates are tried. When |φ1|+|φ2|+|φ3| ≤ 1 the absolute-weight
/// field is dominated outside the box by its maximum on the box's outer edge.
/// When Φ has no zero on a closed bidisc of radius r > 1, Cauchy's estimate
/// gives |ψ_{n,k}| ≤ r^{−(n+k)} / min_{|z_i|=r} |Φ|.
pub fn counting_box(p: DelannoyParams, x: f64) -> Result<usize> {
    if !(x > 1.0) || !x.is_finite() {
        return Err(Error::InvalidArgument(format!("counting level must exceed 1, got {x}")));
    }
    let level = 1.0 / x;
    let mut best: Option<usize> = None;

    let sigma = p.phi1.abs() + p.phi2.abs() + p.phi3.abs();
    if sigma <= 1.0 {
        let mut size = 64usize;
        while size <= 4096 && best.is_none() {
            let a = delannoy_table(p.abs(), size, size);
            let w = size + 1;
            // Maximum of the absolute field on {n = b or k = b} ∩ box(b).
            for b in 0..=size {
                let mut edge_max = 0.0f64;
                for i in 0..=b {
                    edge_max = edge_max.max(a[b * w + i]).max(a[i * w + b]);
                }
                if edge_max < level {
                    best = Some(b);
                    break;
                }
            }
            size *= 2;
        }
    }

    if let Some((r_max, _)) = cauchy_radius(p) {
        for i in 1..20 {
            let r = 1.0 + (r_max - 1.0) * i as f64 / 20.0;
            let scaled = DelannoyParams::new(r * p.phi1, r * p.phi2, r * r * p.phi3);
            if let Ok(BidiscResult::ZeroFree { min_modulus }) =
                bidisc_zero_free_bilinear(scaled.phi1, scaled.phi2, scaled.phi3)
            {
                // Safety margin for the sampled minimum.
                let m = 0.9 * min_modulus;
                let need = ((x / m).ln() / r.ln()).floor().max(0.0);
                if need.is_finite() && need < 1e7 {
                    let mut b = need as usize;
                    if r.powf(-((b + 1) as f64)) / m >= level {
                        b += 1;
                    }
                    best = Some(best.map_or(b, |c| c.min(b)));
                }
            }
        }
    }
    best.ok_or_else(|| {
        Error::InvalidArgument(
            "no decay certificate: Phi has a zero on the closed bidisc and the weights exceed 1 in total".into(),
        )
    })
}

/// Largest r ≤ 16 (to bisection accuracy) with Φ(r·) zero-free on the closed
/// bidisc, when Φ itself is zero-free there.
fn cauchy_radius(p: DelannoyParams) -> Option<(f64, f64)> {
    let zero_free = |r: f64| {
        matches!(
            bidisc_zero_free_bilinear(r * p.phi1, r * p.phi2, r * r * p.phi3),
            Ok(BidiscResult::ZeroFree { .. })
        )
    };
    if !zero_free(1.0) {
        return None;
    }
    let (mut lo, mut hi) = (1.0, 16.0);
    if zero_free(hi) {
        return Some((hi, hi));
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if zero_free(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some((lo, hi))
}

/// f(x) = #{(n,k) ∈ box : ψ_{n,k} ≠ 0, |ψ_{n,k}| ≥ 1/x}, after checking that
/// no qualifying index lies outside the box.
pub fn counting_function(p: DelannoyParams, x: f64, box_size: usize) -> Result<u64> {
    let needed = counting_box(p, x)?;
    if box_size < needed {
        return Err(Error::InsufficientBox {
            given: box_size,
            needed,
        });
    }
    let level = 1.0 / x;
    Ok(delannoy_table(p, box_size, box_size)
        .iter()
        .filter(|v| **v != 0.0 && v.abs() >= level)
        .count() as u64)
}

/// #{k ∈ Z^d : |k_1|+…+|k_d| = n}, by h_d(n) = Σ_{|j|≤n} h_{d−1}(n−|j|).
pub fn l1_sphere_count(d: usize, n: usize) -> u128 {
    assert!(d >= 1, "dimension must be positive");
    // h[m] = h_e(m) for the current dimension e, m = 0..=n.
    let mut h: Vec<u128> = (0..=n).map(|m| if m == 0 { 1 } else { 2 }).collect();
    for _ in 1..d {
        h = (0..=n)
            .map(|m| h[m] + 2 * (1..=m).map(|j| h[m - j]).sum::<u128>())
            .collect();
    }
    h[n]
}

/// C_d with h_d(n) ≤ C_d n^{d−1} for n ≥ 1: C_1 = 2, C_{d+1} = 2C_d + 2.
pub fn l1_sphere_constant(d: usize) -> u128 {
    (1..d).fold(2, |c, _| 2 * c + 2)
}

/// Whether the first-order model needs the second log-moment (at least two
/// nonzero weights) or only the first.
pub fn required_log_moment(p: DelannoyParams) -> u32 {
    if p.nonzero_count() >= 2 {
        2
    } else {
        1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(a: f64, b: f64, c: f64) -> DelannoyParams {
        DelannoyParams::new(a, b, c)
    }

    #[test]
    fn classical_delannoy_numbers() {
        let p = d(1.0, 1.0, 1.0);
        assert_eq!(delannoy_recursive(p, 1, 1).unwrap(), 3.0);
        assert_eq!(delannoy_recursive(p, 2, 2).unwrap(), 13.0);
        assert_eq!(delannoy_closed_a(p, 3, 3).unwrap(), 63.0);
        assert_eq!(delannoy_exact([1, 1, 1], 20, 20), Some(260_543_813_797_441));
    }

    #[test]
    fn boundary_values() {
        let p = d(0.7, -0.4, 0.2);
        for n in 0..10 {
            assert!((delannoy_recursive(p, n, 0).unwrap() / 0.7f64.powi(n as i32) - 1.0).abs() < 1e-15);
            assert!((delannoy_closed_a(p, 0, n).unwrap() - (-0.4f64).powi(n as i32)).abs() < 1e-15);
        }
        assert!(delannoy_recursive(p, -1, 0).is_err());
    }

    #[test]
    fn hand_expansion_of_closed_b() {
        let v = delannoy_closed_b(d(0.5, 0.3, 0.1), 1, 1).unwrap();
        assert!((v - 0.40).abs() < 1e-15);
        let p = d(0.5, 0.3, -0.15);
        for (n, k) in [(3, 4), (6, 2), (5, 5)] {
            let v = delannoy_closed_b(p, n, k).unwrap();
            assert!((v - 0.5f64.powi(n as i32) * 0.3f64.powi(k as i32)).abs() < 1e-15);
        }
    }

    #[test]
    fn no_diagonal_step_is_binomial() {
        let p = d(0.6, -0.3, 0.0);
        for n in 0..=12i64 {
            for k in 0..=(12 - n) {
                let want = binom((n + k) as usize, n as usize).to_f64() * 0.6f64.powi(n as i32) * (-0.3f64).powi(k as i32);
                assert!((delannoy_recursive(p, n, k).unwrap() - want).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn integer_weights_agree_with_exact_path() {
        for phi in [[1i64, 2, 3], [2, -1, 1], [-3, 1, 0]] {
            let p = d(phi[0] as f64, phi[1] as f64, phi[2] as f64);
            for (n, k) in [(0, 0), (5, 7), (12, 12), (20, 3)] {
                let exact = delannoy_exact(phi, n, k).unwrap() as f64;
                let a = delannoy_closed_a(p, n as i64, k as i64).unwrap();
                let r = delannoy_recursive(p, n as i64, k as i64).unwrap();
                assert!((a - exact).abs() <= 1e-12 * exact.abs().max(1.0));
                assert!((r - exact).abs() <= 1e-12 * exact.abs().max(1.0));
            }
        }
    }

    #[test]
    fn identity_examples() {
        let r = jacobi_delannoy_identity(d(0.5, 0.3, 0.1), 0, 0).unwrap();
        assert_eq!((r.lhs, r.rhs), (1.0, 1.0));
        let r = jacobi_delannoy_identity(d(0.5, 0.3, 0.1), 2, 5).unwrap();
        assert!(r.abs_diff <= 1e-9);
        let r = jacobi_delannoy_identity(d(1.0, 1.0, 1.0), 0, 2).unwrap();
        assert!((r.lhs - 13.0).abs() < 1e-12 && (r.rhs - 13.0).abs() < 1e-12);
        assert!(jacobi_delannoy_identity(d(0.5, 0.3, 0.0), 1, 1).is_err());
    }

    #[test]
    fn sphere_counts() {
        assert_eq!(l1_sphere_count(1, 5), 2);
        assert_eq!(l1_sphere_count(4, 0), 1);
        assert_eq!(l1_sphere_count(2, 3), 12);
        assert_eq!(l1_sphere_count(3, 2), 18);
        for dim in 1..=4usize {
            for n in 0..=6usize {
                let brute = (0..(2 * n + 1).pow(dim as u32))
                    .filter(|&f| {
                        let mut f = f;
                        let mut s = 0;
                        for _ in 0..dim {
                            s += ((f % (2 * n + 1)) as i64 - n as i64).unsigned_abs() as usize;
                            f /= 2 * n + 1;
                        }
                        s == n
                    })
                    .count();
                assert_eq!(l1_sphere_count(dim, n), brute as u128);
            }
        }
    }

    #[test]
    fn counting_near_one() {
        assert_eq!(counting_function(d(0.5, 0.5, 0.0), 1.0001, 10).unwrap(), 1);
        let need = counting_box(d(0.5, 0.3, 0.1), 1e3).unwrap();
        assert!(matches!(
            counting_function(d(0.5, 0.3, 0.1), 1e3, need.saturating_sub(1)),
            Err(Error::InsufficientBox { .. })
        ));
    }
}
