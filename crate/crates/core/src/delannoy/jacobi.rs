//! Jacobi polynomials by the three-term recurrence.

use serde::{Deserialize, Serialize};

use super::bessel::bessel_j01;
use super::dd::Dd;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JacobiEvalRequest {
    pub n: u32,
    pub alpha: f64,
    pub beta: f64,
    pub x: f64,
}

/// P_n^{(α,β)}(x), α, β > −1.
pub fn jacobi_poly(req: JacobiEvalRequest) -> Result<f64> {
    let JacobiEvalRequest { n, alpha: a, beta: b, x } = req;
    if !(a > -1.0 && b > -1.0) {
        return Err(Error::InvalidArgument(format!(
            "Jacobi parameters must exceed -1, got alpha = {a}, beta = {b}"
        )));
    }
    Ok(jacobi_poly_dd(n, a, b, Dd::from(x)).to_f64())
}

/// Three-term recurrence in double-double; a, b > −1 are assumed checked.
pub(crate) fn jacobi_poly_dd(n: u32, a: f64, b: f64, x: Dd) -> Dd {
    if n == 0 {
        return Dd::ONE;
    }
    let (ad, bd) = (Dd::from(a), Dd::from(b));
    let half = Dd::from(0.5);
    let mut p0 = Dd::ONE;
    let mut p1 = (ad + Dd::ONE) + half * (ad + bd + Dd::from(2.0)) * (x - Dd::ONE);
    for m in 2..=n {
        let m = Dd::from(m as f64);
        let two = Dd::from(2.0);
        let s = two * m + ad + bd;
        let c0 = two * m * (m + ad + bd) * (s - two);
        let c1 = (s - Dd::ONE) * (s * (s - two) * x + ad * ad - bd * bd);
        let c2 = two * (m + ad - Dd::ONE) * (m + bd - Dd::ONE) * s;
        let p2 = (c1 * p1 - c2 * p0) / c0;
        p0 = p1;
        p1 = p2;
    }
    p1
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AsymptoticRow {
    pub n: u32,
    /// N = n + (β+1)/2.
    pub big_n: f64,
    pub residual: f64,
    /// residual · N.
    pub scaled: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AsymptoticTable {
    pub theta: f64,
    pub beta: u32,
    pub rows: Vec<AsymptoticRow>,
    /// Least-squares slope of ln residual against ln N over rows with a
    /// positive residual.
    pub loglog_slope: Option<f64>,
    pub max_scaled: f64,
}

/// Residuals |(cos θ/2)^β P_n^{(0,β)}(cos θ) − √(θ/sin θ) J0(Nθ)| over n.
///
/// The leading term is taken with a positive sign; the alternative negative
/// convention for the leading coefficient would not vanish asymptotically.
pub fn asymptotic_decay_diagnostic(
    theta: f64,
    beta: u32,
    n_range: std::ops::RangeInclusive<u32>,
) -> Result<AsymptoticTable> {
    if !(theta > 0.0 && theta < std::f64::consts::PI) {
        return Err(Error::InvalidArgument(format!("theta must lie in (0, pi), got {theta}")));
    }
    let amp = (theta / theta.sin()).sqrt();
    let c = (0.5 * theta).cos().powi(beta as i32);
    let mut rows = Vec::new();
    for n in n_range {
        let big_n = n as f64 + (beta as f64 + 1.0) / 2.0;
        let p = jacobi_poly(JacobiEvalRequest {
            n,
            alpha: 0.0,
            beta: beta as f64,
            x: theta.cos(),
        })?;
        let (j0, _) = bessel_j01(big_n * theta)?;
        let residual = (c * p - amp * j0).abs();
        rows.push(AsymptoticRow {
            n,
            big_n,
            residual,
            scaled: residual * big_n,
        });
    }
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.residual > 0.0)
        .map(|r| (r.big_n.ln(), r.residual.ln()))
        .collect();
    let loglog_slope = (pts.len() >= 2).then(|| {
        let k = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        sxy / sxx
    });
    let max_scaled = rows.iter().map(|r| r.scaled).fold(0.0, f64::max);
    Ok(AsymptoticTable {
        theta,
        beta,
        rows,
        loglog_slope,
        max_scaled,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gbinom(top: f64, r: u32) -> f64 {
        (0..r).map(|i| (top - i as f64) / (i + 1) as f64).product()
    }

    /// Expansion of the Rodrigues formula by the Leibniz rule.
    fn rodrigues(n: u32, a: f64, b: f64, x: f64) -> f64 {
        (0..=n)
            .map(|s| {
                gbinom(n as f64 + a, n - s)
                    * gbinom(n as f64 + b, s)
                    * ((x - 1.0) / 2.0).powi(s as i32)
                    * ((x + 1.0) / 2.0).powi((n - s) as i32)
            })
            .sum()
    }

    fn p(n: u32, alpha: f64, beta: f64, x: f64) -> f64 {
        jacobi_poly(JacobiEvalRequest { n, alpha, beta, x }).unwrap()
    }

    #[test]
    fn low_degrees() {
        assert_eq!(p(0, 0.3, 2.0, 0.7), 1.0);
        for x in [-0.9, 0.0, 0.4, 2.5] {
            assert!((p(1, 0.0, 0.0, x) - x).abs() < 1e-15);
        }
        assert!((p(2, 0.0, 0.0, -3.0) - 13.0).abs() < 1e-12);
        let want = rodrigues(2, 0.0, 1.0, 0.3);
        assert!((p(2, 0.0, 1.0, 0.3) - want).abs() < 1e-12);
    }

    #[test]
    fn recurrence_matches_rodrigues_expansion() {
        for n in 0..=5 {
            for &(a, b) in &[(0.0, 0.0), (0.0, 3.0), (0.5, -0.5), (-0.7, 2.2), (4.0, 1.0)] {
                for &x in &[-1.0, -0.35, 0.0, 0.8, 1.0, -4.0] {
                    let want = rodrigues(n, a, b, x);
                    let got = p(n, a, b, x);
                    assert!((got - want).abs() <= 1e-12 * want.abs().max(1.0), "n={n} a={a} b={b} x={x}");
                }
            }
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(jacobi_poly(JacobiEvalRequest { n: 2, alpha: -1.0, beta: 0.0, x: 0.0 }).is_err());
        assert!(asymptotic_decay_diagnostic(0.0, 0, 1..=3).is_err());
    }
}
