//! Zero search on the torus and on the closed unit polydisc.
//!
//! Both searches can certify a zero (a point where |p| ≤ tol) but never
//! zero-freeness: an empty result only means nothing was found at the final
//! resolution.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::quadrature::smallest_nodes;
use crate::error::{Error, Result};
use crate::existence::{bidisc_zero_free_bilinear, BidiscResult};
use crate::poly::{IndexBox, LaurentPoly, MultiIndex};

/// Outcome of [`zero_search_torus`]. Points are angles t with p(e^{−it}) ≈ 0,
/// wrapped to (−π, π].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TorusZeroReport {
    pub zeros: Vec<Vec<f64>>,
    pub min_modulus: f64,
    pub argmin: Vec<f64>,
    pub resolution: Vec<usize>,
}

impl TorusZeroReport {
    pub fn found(&self) -> bool {
        !self.zeros.is_empty()
    }
}

const CANDIDATES: usize = 64;
const DEDUP: f64 = 1e-6;

/// Per-axis resolution of the coarse torus grid (about 2^20 nodes in total).
pub fn torus_search_resolution(dim: usize) -> usize {
    1 << (20 / dim.max(1)).clamp(1, 12)
}

fn wrap_angle(x: f64) -> f64 {
    let y = x.rem_euclid(TAU);
    if y > PI {
        y - TAU
    } else {
        y
    }
}

fn torus_value_grad(p: &LaurentPoly, t: &[f64]) -> (Complex64, Vec<Complex64>) {
    let mut val = Complex64::new(0.0, 0.0);
    let mut grad = vec![Complex64::new(0.0, 0.0); t.len()];
    for (k, c) in p.terms() {
        let phase: f64 = k.as_slice().iter().zip(t).map(|(&n, &x)| n as f64 * x).sum();
        let term = c * Complex64::from_polar(1.0, -phase);
        val += term;
        for (g, &n) in grad.iter_mut().zip(k.as_slice()) {
            *g += term * Complex64::new(0.0, -(n as f64));
        }
    }
    (val, grad)
}

/// Levenberg–Marquardt descent of |p(e^{−it})|² over real t.
fn refine_torus(p: &LaurentPoly, mut t: Vec<f64>) -> (Vec<f64>, f64) {
    let (mut val, mut grad) = torus_value_grad(p, &t);
    let mut mu = 1e-8;
    for _ in 0..80 {
        if val.norm() == 0.0 {
            break;
        }
        // J is 2×d with rows (Re, Im); A = J Jᵀ + μI.
        let (mut a11, mut a12, mut a22) = (mu, 0.0, mu);
        for g in &grad {
            a11 += g.re * g.re;
            a12 += g.re * g.im;
            a22 += g.im * g.im;
        }
        let det = a11 * a22 - a12 * a12;
        if det.abs() < 1e-300 {
            break;
        }
        let y1 = (a22 * val.re - a12 * val.im) / det;
        let y2 = (a11 * val.im - a12 * val.re) / det;
        let trial: Vec<f64> = t
            .iter()
            .zip(&grad)
            .map(|(&x, g)| x - (g.re * y1 + g.im * y2))
            .collect();
        let (tv, tg) = torus_value_grad(p, &trial);
        if tv.norm() < val.norm() {
            t = trial;
            val = tv;
            grad = tg;
            mu = (mu * 0.3).max(1e-15);
        } else {
            mu *= 10.0;
            if mu > 1e8 {
                break;
            }
        }
    }
    (t, val.norm())
}

/// Coarse grid minimization of |p(e^{−it})| followed by local refinement of
/// the smallest nodes.
pub fn zero_search_torus(p: &LaurentPoly, tol: f64) -> Result<TorusZeroReport> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    let d = p.dim();
    let m = torus_search_resolution(d);
    let res = vec![m; d];
    let nodes = IndexBox::orthant(&vec![m - 1; d]);
    let mut zeros: Vec<Vec<f64>> = Vec::new();
    let mut min_modulus = f64::INFINITY;
    let mut argmin = vec![0.0; d];
    for (a, flat) in smallest_nodes(p, &res, CANDIDATES) {
        let t0: Vec<f64> = nodes
            .unflatten(flat)
            .iter()
            .map(|&j| TAU * j as f64 / m as f64)
            .collect();
        let (t, v) = if a == 0.0 { (t0, 0.0) } else { refine_torus(p, t0) };
        let t: Vec<f64> = t.into_iter().map(wrap_angle).collect();
        if v < min_modulus {
            min_modulus = v;
            argmin = t.clone();
        }
        if v <= tol
            && !zeros.iter().any(|z| {
                z.iter().zip(&t).all(|(a, b)| wrap_angle(a - b).abs() < DEDUP)
            })
        {
            zeros.push(t);
        }
    }
    if p.is_zero() {
        min_modulus = 0.0;
    }
    Ok(TorusZeroReport {
        zeros,
        min_modulus,
        argmin,
        resolution: res,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "result")]
pub enum PolydiscSearch {
    ZeroFreeLikely { min_modulus: f64 },
    ZeroFound { point: Vec<[f64; 2]>, modulus: f64 },
}

impl PolydiscSearch {
    pub fn zero_found(&self) -> bool {
        matches!(self, PolydiscSearch::ZeroFound { .. })
    }
}

const POLYDISC_RANDOM_POINTS: usize = 2000;
const POLYDISC_REFINED: usize = 64;
const POLYDISC_SEED: u64 = 0x5eed_d15c;

fn value_grad(p: &LaurentPoly, z: &[Complex64]) -> (Complex64, Vec<Complex64>) {
    let mut val = Complex64::new(0.0, 0.0);
    let mut grad = vec![Complex64::new(0.0, 0.0); z.len()];
    for (k, c) in p.terms() {
        let e = k.as_slice();
        let mono: Complex64 = c * z.iter().zip(e).map(|(zi, &n)| zi.powi(n as i32)).product::<Complex64>();
        val += mono;
        for j in 0..z.len() {
            if e[j] > 0 {
                let mut g = c * (e[j] as f64);
                for (i, (&zi, &n)) in z.iter().zip(e).enumerate() {
                    let pw = if i == j { n - 1 } else { n };
                    g *= zi.powi(pw as i32);
                }
                grad[j] += g;
            }
        }
    }
    (val, grad)
}

/// Coordinatewise Newton steps, projected back into the closed polydisc.
fn refine_polydisc(p: &LaurentPoly, mut z: Vec<Complex64>, tol: f64) -> (Vec<Complex64>, f64) {
    let (mut val, mut grad) = value_grad(p, &z);
    let mut best = (z.clone(), val.norm());
    for _ in 0..60 {
        if val.norm() <= 1e-3 * tol {
            break;
        }
        let (j, g) = grad
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
            .map(|(j, g)| (j, *g))
            .unwrap();
        if g.norm() == 0.0 {
            break;
        }
        z[j] -= val / g;
        if z[j].norm() > 1.0 {
            let r = z[j].norm();
            z[j] /= r;
        }
        let (v, gr) = value_grad(p, &z);
        val = v;
        grad = gr;
        if val.norm() < best.1 {
            best = (z.clone(), val.norm());
        }
    }
    best
}

fn bilinear_params(p: &LaurentPoly) -> Option<(f64, f64, f64)> {
    if p.dim() != 2 {
        return None;
    }
    let one = Complex64::new(1.0, 0.0);
    if p.coeff(&MultiIndex::zeros(2)) != one {
        return None;
    }
    let mut phi = [0.0; 3];
    for (k, c) in p.terms() {
        if c.im != 0.0 {
            return None;
        }
        match k.as_slice() {
            [0, 0] => {}
            [1, 0] => phi[0] = -c.re,
            [0, 1] => phi[1] = -c.re,
            [1, 1] => phi[2] = -c.re,
            _ => return None,
        }
    }
    if phi == [0.0; 3] {
        None
    } else {
        Some((phi[0], phi[1], phi[2]))
    }
}

/// Searches the closed unit polydisc for a zero of p. The first-order planar
/// shape 1 − φ1z1 − φ2z2 − φ3z1z2 is decided by the exact bidisc reduction;
/// everything else by torus grids at radii 1, 0.95, …, 0.05, the origin and
/// 2000 seeded interior points, with local Newton refinement of the best
/// candidates.
pub fn zero_free_closed_polydisc(p: &LaurentPoly, tol: f64) -> Result<PolydiscSearch> {
    if !p.is_polynomial() {
        return Err(Error::LaurentInput);
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    if let Some((a, b, c)) = bilinear_params(p) {
        return Ok(match bidisc_zero_free_bilinear(a, b, c)? {
            BidiscResult::ZeroFree { min_modulus } => PolydiscSearch::ZeroFreeLikely { min_modulus },
            BidiscResult::ZeroAt { z1, z2 } => {
                let modulus = p.eval(&[z1, z2])?.norm();
                PolydiscSearch::ZeroFound {
                    point: vec![[z1.re, z1.im], [z2.re, z2.im]],
                    modulus,
                }
            }
        });
    }
    let d = p.dim();
    let mut cands: Vec<(f64, Vec<Complex64>)> = Vec::new();
    let origin = vec![Complex64::new(0.0, 0.0); d];
    cands.push((p.eval(&origin)?.norm(), origin));

    let m = 1usize << (16 / d).clamp(1, 10);
    let res = vec![m; d];
    let nodes = IndexBox::orthant(&vec![m - 1; d]);
    for step in 0..20 {
        let r = 1.0 - 0.05 * step as f64;
        let scaled = p.scaled(&vec![r; d]);
        for (a, flat) in smallest_nodes(&scaled, &res, 8) {
            let z = nodes
                .unflatten(flat)
                .iter()
                .map(|&j| Complex64::from_polar(r, -TAU * j as f64 / m as f64))
                .collect();
            cands.push((a, z));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(POLYDISC_SEED);
    for _ in 0..POLYDISC_RANDOM_POINTS {
        let z: Vec<Complex64> = (0..d)
            .map(|_| {
                let u: f64 = rng.random();
                let r = if u < 1.0 / 3.0 { 1.0 } else { rng.random::<f64>().sqrt() };
                Complex64::from_polar(r, TAU * rng.random::<f64>())
            })
            .collect();
        cands.push((p.eval(&z)?.norm(), z));
    }

    cands.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut best = cands[0].clone();
    for (a, z) in cands.into_iter().take(POLYDISC_REFINED) {
        let (z, v) = if a <= 1e-3 * tol {
            (z, a)
        } else {
            refine_polydisc(p, z, tol)
        };
        if v < best.0 {
            best = (v, z);
        }
    }
    Ok(if best.0 <= tol {
        PolydiscSearch::ZeroFound {
            point: best.1.iter().map(|z| [z.re, z.im]).collect(),
            modulus: best.0,
        }
    } else {
        PolydiscSearch::ZeroFreeLikely { min_modulus: best.0 }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly(dim: usize, terms: &[(&[i64], Complex64)]) -> LaurentPoly {
        LaurentPoly::from_terms(dim, terms.iter().map(|(k, c)| (MultiIndex::from(*k), *c))).unwrap()
    }

    fn re(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn planar_ar_zero_at_origin_angle() {
        let p = poly(2, &[(&[0, 0], re(1.0)), (&[1, 0], re(-0.5)), (&[0, 1], re(-0.5))]);
        let r = zero_search_torus(&p, 1e-9).unwrap();
        assert!(r.found());
        assert!(r.zeros.iter().any(|z| z.iter().all(|x| x.abs() < 1e-6)));
    }

    #[test]
    fn contraction_has_no_torus_zero() {
        let p = poly(2, &[(&[0, 0], re(1.0)), (&[1, 0], re(-0.25)), (&[0, 1], re(-0.25))]);
        let r = zero_search_torus(&p, 1e-9).unwrap();
        assert!(!r.found());
        assert!(r.min_modulus >= 0.5 - 1e-12);
        let one = zero_search_torus(&LaurentPoly::one(3), 1e-9).unwrap();
        assert!(!one.found());
        assert_eq!(one.min_modulus, 1.0);
    }

    #[test]
    fn planted_factor_is_located() {
        let lambda = 1.234_f64;
        let w = Complex64::from_polar(1.0, lambda);
        let a = poly(2, &[(&[0, 0], re(1.0)), (&[1, 0], -w)]);
        let b = poly(2, &[(&[0, 0], re(1.0)), (&[0, 1], re(0.3)), (&[1, 1], re(-0.2))]);
        let p = a.mul(&b).unwrap();
        let r = zero_search_torus(&p, 1e-9).unwrap();
        let spacing = TAU / r.resolution[0] as f64;
        assert!(r.found());
        for z in &r.zeros {
            assert!(wrap_angle(z[0] - lambda).abs() <= spacing, "{z:?}");
        }
    }

    #[test]
    fn polydisc_rejects_laurent() {
        let p = poly(1, &[(&[0], re(1.0)), (&[-1], re(0.1))]);
        assert!(matches!(
            zero_free_closed_polydisc(&p, 1e-9),
            Err(Error::LaurentInput)
        ));
    }

    #[test]
    fn polydisc_examples() {
        let p = poly(2, &[(&[0, 0], re(1.0)), (&[1, 1], re(-0.9))]);
        match zero_free_closed_polydisc(&p, 1e-9).unwrap() {
            PolydiscSearch::ZeroFreeLikely { min_modulus } => {
                assert!((min_modulus - 0.1).abs() < 1e-9, "{min_modulus}")
            }
            other => panic!("{other:?}"),
        }
        let q = poly(2, &[(&[0, 0], re(1.0)), (&[1, 0], re(-0.5)), (&[0, 1], re(-0.5))]);
        match zero_free_closed_polydisc(&q, 1e-9).unwrap() {
            PolydiscSearch::ZeroFound { point, .. } => {
                assert!((point[0][0] - 1.0).abs() < 1e-9 && (point[1][0] - 1.0).abs() < 1e-9)
            }
            other => panic!("{other:?}"),
        }
        let s = poly(2, &[(&[0, 0], re(1.0)), (&[1, 0], re(-0.25)), (&[0, 1], re(-0.25))]);
        match zero_free_closed_polydisc(&s, 1e-9).unwrap() {
            PolydiscSearch::ZeroFreeLikely { min_modulus } => assert!(min_modulus >= 0.5 - 1e-12),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn polydisc_finds_interior_zero() {
        // 1 − 2 z1 z2² vanishes at |z1| = 1, |z2| = 1/√2.
        let p = poly(2, &[(&[0, 0], re(1.0)), (&[1, 2], re(-2.0))]);
        assert!(zero_free_closed_polydisc(&p, 1e-9).unwrap().zero_found());
        let five = LaurentPoly::from_terms(
            5,
            std::iter::once((MultiIndex::zeros(5), re(1.0))).chain((0..5).map(|i| {
                let mut k = vec![0; 5];
                k[i] = 1;
                (MultiIndex::new(k), re(-0.2))
            })),
        )
        .unwrap();
        assert!(zero_free_closed_polydisc(&five, 1e-9).unwrap().zero_found());
    }
}
