//! Multi-indices, finitely supported Laurent polynomials and ARMA models.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::{self, ComplexGrid};

/// Largest admissible |n_i| for a stored exponent.
pub const MAX_EXPONENT: i64 = 1 << 20;

/// Integer lattice offset. Ordered lexicographically.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiIndex(Vec<i64>);

impl MultiIndex {
    pub fn new(entries: Vec<i64>) -> Self {
        MultiIndex(entries)
    }

    pub fn zeros(dim: usize) -> Self {
        MultiIndex(vec![0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[i64] {
        &self.0
    }

    /// |k| = Σ|k_i|.
    pub fn l1_norm(&self) -> u64 {
        self.0.iter().map(|x| x.unsigned_abs()).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&x| x == 0)
    }

    pub fn is_nonnegative(&self) -> bool {
        self.0.iter().all(|&x| x >= 0)
    }

    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &MultiIndex) -> MultiIndex {
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    /// Componentwise `self <= other`.
    pub fn le_componentwise(&self, other: &MultiIndex) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }
}

impl From<Vec<i64>> for MultiIndex {
    fn from(v: Vec<i64>) -> Self {
        MultiIndex(v)
    }
}

impl From<&[i64]> for MultiIndex {
    fn from(v: &[i64]) -> Self {
        MultiIndex(v.to_vec())
    }
}

impl std::ops::Index<usize> for MultiIndex {
    type Output = i64;
    fn index(&self, i: usize) -> &i64 {
        &self.0[i]
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, x) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{x}")?;
        }
        write!(f, ")")
    }
}

/// Inclusive axis-aligned box of multi-indices, iterated in row-major
/// (lexicographic) order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexBox {
    pub lower: Vec<i64>,
    pub upper: Vec<i64>,
}

impl IndexBox {
    pub fn new(lower: Vec<i64>, upper: Vec<i64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch {
                expected: lower.len(),
                found: upper.len(),
            });
        }
        if lower.is_empty() {
            return Err(Error::InvalidArgument("box of dimension 0".into()));
        }
        if lower.iter().zip(&upper).any(|(l, u)| l > u) {
            return Err(Error::InvalidArgument(
                "box lower bound exceeds upper bound".into(),
            ));
        }
        Ok(IndexBox { lower, upper })
    }

    /// {0..n_1} × … × {0..n_d}.
    pub fn orthant(n: &[usize]) -> Self {
        IndexBox {
            lower: vec![0; n.len()],
            upper: n.iter().map(|&x| x as i64).collect(),
        }
    }

    /// {−n..n}^d.
    pub fn symmetric(dim: usize, n: usize) -> Self {
        IndexBox {
            lower: vec![-(n as i64); dim],
            upper: vec![n as i64; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn extents(&self) -> Vec<usize> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| (u - l + 1) as usize)
            .collect()
    }

    pub fn len(&self) -> usize {
        self.extents().iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, k: &[i64]) -> bool {
        k.len() == self.dim()
            && k.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(x, (l, u))| l <= x && x <= u)
    }

    pub fn contains_box(&self, other: &IndexBox) -> bool {
        self.contains(&other.lower) && self.contains(&other.upper)
    }

    /// Row-major strides.
    pub fn strides(&self) -> Vec<usize> {
        let ext = self.extents();
        let mut s = vec![1usize; ext.len()];
        for i in (0..ext.len().saturating_sub(1)).rev() {
            s[i] = s[i + 1] * ext[i + 1];
        }
        s
    }

    pub fn flat_index(&self, k: &[i64]) -> Option<usize> {
        if !self.contains(k) {
            return None;
        }
        let ext = self.extents();
        let mut idx = 0usize;
        for i in 0..k.len() {
            idx = idx * ext[i] + (k[i] - self.lower[i]) as usize;
        }
        Some(idx)
    }

    pub fn unflatten(&self, mut flat: usize) -> Vec<i64> {
        let ext = self.extents();
        let mut k = vec![0i64; ext.len()];
        for i in (0..ext.len()).rev() {
            k[i] = self.lower[i] + (flat % ext[i]) as i64;
            flat /= ext[i];
        }
        k
    }

    /// Shrinks each axis by `lo[i]` from below and `hi[i]` from above.
    pub fn shrink(&self, lo: &[i64], hi: &[i64]) -> Option<IndexBox> {
        let lower: Vec<i64> = self.lower.iter().zip(lo).map(|(a, b)| a + b).collect();
        let upper: Vec<i64> = self.upper.iter().zip(hi).map(|(a, b)| a - b).collect();
        if lower.iter().zip(&upper).any(|(l, u)| l > u) {
            None
        } else {
            Some(IndexBox { lower, upper })
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = Vec<i64>> + '_ {
        (0..self.len()).map(move |f| self.unflatten(f))
    }
}

/// Finitely supported complex Laurent polynomial on Z^d. Zero coefficients
/// are never stored.
#[derive(Clone, Debug, PartialEq)]
pub struct LaurentPoly {
    dim: usize,
    terms: BTreeMap<MultiIndex, Complex64>,
}

impl LaurentPoly {
    pub fn zero(dim: usize) -> Self {
        LaurentPoly {
            dim,
            terms: BTreeMap::new(),
        }
    }

    pub fn one(dim: usize) -> Self {
        let mut p = Self::zero(dim);
        p.terms.insert(MultiIndex::zeros(dim), Complex64::new(1.0, 0.0));
        p
    }

    /// Builds a polynomial, summing repeated exponents.
    pub fn from_terms<I>(dim: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (MultiIndex, Complex64)>,
    {
        if dim == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        let mut map: BTreeMap<MultiIndex, Complex64> = BTreeMap::new();
        for (k, c) in terms {
            check_index(dim, &k)?;
            if !(c.re.is_finite() && c.im.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "non-finite coefficient at {k}"
                )));
            }
            *map.entry(k).or_insert(Complex64::new(0.0, 0.0)) += c;
        }
        map.retain(|_, c| *c != Complex64::new(0.0, 0.0));
        Ok(LaurentPoly { dim, terms: map })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &Complex64)> {
        self.terms.iter()
    }

    pub fn coeff(&self, k: &MultiIndex) -> Complex64 {
        self.terms.get(k).copied().unwrap_or_default()
    }

    /// True when every exponent is nonnegative.
    pub fn is_polynomial(&self) -> bool {
        self.terms.keys().all(|k| k.is_nonnegative())
    }

    /// Per-axis minimum and maximum exponent; zeros for the zero polynomial.
    pub fn exponent_bounds(&self) -> (Vec<i64>, Vec<i64>) {
        let mut lo = vec![0i64; self.dim];
        let mut hi = vec![0i64; self.dim];
        for k in self.terms.keys() {
            for i in 0..self.dim {
                lo[i] = lo[i].min(k[i]);
                hi[i] = hi[i].max(k[i]);
            }
        }
        (lo, hi)
    }

    pub fn mul(&self, other: &LaurentPoly) -> Result<LaurentPoly> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        let mut out = Vec::with_capacity(self.len() * other.len());
        for (a, ca) in &self.terms {
            for (b, cb) in &other.terms {
                out.push((a.add(b), ca * cb));
            }
        }
        LaurentPoly::from_terms(self.dim, out)
    }

    /// p(z) with each coefficient c_n replaced by c_n · Π r_i^{n_i}.
    pub fn scaled(&self, radii: &[f64]) -> LaurentPoly {
        let terms = self
            .terms
            .iter()
            .map(|(k, c)| {
                let s: f64 = k
                    .as_slice()
                    .iter()
                    .zip(radii)
                    .map(|(&n, &r)| r.powi(n as i32))
                    .product();
                (k.clone(), c * s)
            })
            .filter(|(_, c)| *c != Complex64::new(0.0, 0.0))
            .collect();
        LaurentPoly {
            dim: self.dim,
            terms,
        }
    }

    /// Σ c_n z^n.
    pub fn eval(&self, z: &[Complex64]) -> Result<Complex64> {
        if z.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: z.len(),
            });
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for (k, c) in &self.terms {
            let mut m = *c;
            for (i, &n) in k.as_slice().iter().enumerate() {
                if n < 0 && z[i] == Complex64::new(0.0, 0.0) {
                    return Err(Error::ZeroToNegativePower);
                }
                if n != 0 {
                    m *= z[i].powi(n as i32);
                }
            }
            acc += m;
        }
        Ok(acc)
    }

    /// p(e^{−it}).
    pub fn eval_torus(&self, t: &[f64]) -> Complex64 {
        debug_assert_eq!(t.len(), self.dim);
        let mut acc = Complex64::new(0.0, 0.0);
        for (k, c) in &self.terms {
            let phase: f64 = k
                .as_slice()
                .iter()
                .zip(t)
                .map(|(&n, &ti)| n as f64 * ti)
                .sum();
            acc += c * Complex64::from_polar(1.0, -phase);
        }
        acc
    }
}

fn check_index(dim: usize, k: &MultiIndex) -> Result<()> {
    if k.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: k.dim(),
        });
    }
    if let Some(&n) = k.as_slice().iter().find(|n| n.abs() > MAX_EXPONENT) {
        return Err(Error::ExponentOutOfRange(n));
    }
    Ok(())
}

/// Samples p(e^{−it_j}) on t_j = 2πj/M by zero-embedding the coefficients
/// (exponents wrapped mod M_i) and a forward multidimensional DFT.
pub fn eval_torus_grid(p: &LaurentPoly, resolution: &[usize]) -> Result<ComplexGrid> {
    if resolution.len() != p.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            found: resolution.len(),
        });
    }
    if resolution.iter().any(|&m| m < 1) {
        return Err(Error::InvalidArgument("resolution must be at least 1".into()));
    }
    let mut grid = ComplexGrid::zeros(resolution.to_vec());
    for (k, c) in p.terms() {
        let idx: Vec<usize> = k
            .as_slice()
            .iter()
            .zip(resolution)
            .map(|(&n, &m)| n.rem_euclid(m as i64) as usize)
            .collect();
        let f = grid.flat_index(&idx);
        grid.data_mut()[f] += c;
    }
    fft::fft_nd(&mut grid, fft::Direction::Forward);
    Ok(grid)
}

/// Coefficient value as it appears in model JSON: `[re, im]` or a bare real.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum JsonComplex {
    Pair([f64; 2]),
    Real(f64),
}

impl From<JsonComplex> for Complex64 {
    fn from(v: JsonComplex) -> Self {
        match v {
            JsonComplex::Pair([re, im]) => Complex64::new(re, im),
            JsonComplex::Real(re) => Complex64::new(re, 0.0),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelJson {
    d: usize,
    #[serde(rename = "R", default)]
    r: Vec<Vec<i64>>,
    #[serde(default)]
    phi: Vec<JsonComplex>,
    #[serde(rename = "S", default)]
    s: Vec<Vec<i64>>,
    #[serde(default)]
    theta: Vec<JsonComplex>,
}

/// Spatial ARMA model Y_t − Σ_R φ_n Y_{t−n} = Z_t + Σ_S θ_n Z_{t−n}.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelSpec {
    dim: usize,
    ar: BTreeMap<MultiIndex, Complex64>,
    ma: BTreeMap<MultiIndex, Complex64>,
}

impl ModelSpec {
    pub fn new(
        dim: usize,
        ar: Vec<(Vec<i64>, Complex64)>,
        ma: Vec<(Vec<i64>, Complex64)>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidModel("dimension must be positive".into()));
        }
        let build = |terms: Vec<(Vec<i64>, Complex64)>, name: &str| {
            let mut map = BTreeMap::new();
            for (k, c) in terms {
                let k = MultiIndex::new(k);
                check_index(dim, &k)?;
                if k.is_zero() {
                    return Err(Error::InvalidModel(format!("0 is not allowed in {name}")));
                }
                if !(c.re.is_finite() && c.im.is_finite()) {
                    return Err(Error::InvalidModel(format!(
                        "non-finite coefficient at {k} in {name}"
                    )));
                }
                if map.insert(k.clone(), c).is_some() {
                    return Err(Error::InvalidModel(format!("duplicate index {k} in {name}")));
                }
            }
            Ok(map)
        };
        Ok(ModelSpec {
            dim,
            ar: build(ar, "R")?,
            ma: build(ma, "S")?,
        })
    }

    /// Pure autoregression with real coefficients.
    pub fn ar_real(dim: usize, terms: &[(&[i64], f64)]) -> Result<Self> {
        Self::new(
            dim,
            terms
                .iter()
                .map(|(k, c)| (k.to_vec(), Complex64::new(*c, 0.0)))
                .collect(),
            vec![],
        )
    }

    /// Φ = 1 − φ1 z1 − φ2 z2 − φ3 z1 z2, Θ ≡ 1. Zero weights are omitted.
    pub fn first_order(phi1: f64, phi2: f64, phi3: f64) -> Result<Self> {
        let terms: Vec<(Vec<i64>, Complex64)> = [
            (vec![1, 0], phi1),
            (vec![0, 1], phi2),
            (vec![1, 1], phi3),
        ]
        .into_iter()
        .filter(|(_, c)| *c != 0.0)
        .map(|(k, c)| (k, Complex64::new(c, 0.0)))
        .collect();
        Self::new(2, terms, vec![])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ar_terms(&self) -> impl Iterator<Item = (&MultiIndex, &Complex64)> {
        self.ar.iter()
    }

    pub fn ma_terms(&self) -> impl Iterator<Item = (&MultiIndex, &Complex64)> {
        self.ma.iter()
    }

    pub fn phi(&self, k: &MultiIndex) -> Option<Complex64> {
        self.ar.get(k).copied()
    }

    pub fn theta(&self, k: &MultiIndex) -> Option<Complex64> {
        self.ma.get(k).copied()
    }

    pub fn is_trivial(&self) -> bool {
        self.ar.is_empty() && self.ma.is_empty()
    }

    /// R, S ⊂ N_0^d \ {0}.
    pub fn is_causal_mode(&self) -> bool {
        self.ar.keys().chain(self.ma.keys()).all(|k| k.is_nonnegative())
    }

    /// (φ1, φ2, φ3) when the model has the real first-order planar shape
    /// with at least one nonzero weight and no MA part.
    pub fn first_order_params(&self) -> Option<(f64, f64, f64)> {
        if self.dim != 2 || !self.ma.is_empty() || self.ar.is_empty() {
            return None;
        }
        let mut p = [0.0f64; 3];
        for (k, c) in &self.ar {
            let slot = match k.as_slice() {
                [1, 0] => 0,
                [0, 1] => 1,
                [1, 1] => 2,
                _ => return None,
            };
            if c.im != 0.0 {
                return None;
            }
            p[slot] = c.re;
        }
        Some((p[0], p[1], p[2]))
    }

    /// Per-axis (most negative, most positive) shift over R ∪ S, clamped to
    /// include 0.
    pub fn shift_bounds(&self) -> (Vec<i64>, Vec<i64>) {
        let mut lo = vec![0i64; self.dim];
        let mut hi = vec![0i64; self.dim];
        for k in self.ar.keys().chain(self.ma.keys()) {
            for i in 0..self.dim {
                lo[i] = lo[i].min(k[i]);
                hi[i] = hi[i].max(k[i]);
            }
        }
        (lo, hi)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let j: ModelJson = serde_json::from_str(s)?;
        if j.r.len() != j.phi.len() {
            return Err(Error::InvalidModel(format!(
                "R has {} entries but phi has {}",
                j.r.len(),
                j.phi.len()
            )));
        }
        if j.s.len() != j.theta.len() {
            return Err(Error::InvalidModel(format!(
                "S has {} entries but theta has {}",
                j.s.len(),
                j.theta.len()
            )));
        }
        Self::new(
            j.d,
            j.r.into_iter().zip(j.phi.into_iter().map(Into::into)).collect(),
            j.s.into_iter().zip(j.theta.into_iter().map(Into::into)).collect(),
        )
    }

    pub fn to_json_string(&self) -> String {
        let pair = |c: &Complex64| JsonComplex::Pair([c.re, c.im]);
        let j = ModelJson {
            d: self.dim,
            r: self.ar.keys().map(|k| k.as_slice().to_vec()).collect(),
            phi: self.ar.values().map(pair).collect(),
            s: self.ma.keys().map(|k| k.as_slice().to_vec()).collect(),
            theta: self.ma.values().map(pair).collect(),
        };
        serde_json::to_string(&j).expect("model serializes")
    }
}

/// (Φ, Θ) with Φ(z) = 1 − Σ_R φ_n z^n and Θ(z) = 1 + Σ_S θ_n z^n.
pub fn arma_polys(model: &ModelSpec) -> (LaurentPoly, LaurentPoly) {
    let d = model.dim();
    let one = (MultiIndex::zeros(d), Complex64::new(1.0, 0.0));
    let phi = LaurentPoly::from_terms(
        d,
        std::iter::once(one.clone()).chain(model.ar_terms().map(|(k, c)| (k.clone(), -c))),
    )
    .expect("validated model");
    let theta = LaurentPoly::from_terms(
        d,
        std::iter::once(one).chain(model.ma_terms().map(|(k, c)| (k.clone(), *c))),
    )
    .expect("validated model");
    (phi, theta)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn trivial_model_gives_unit_polys() {
        let m = ModelSpec::new(3, vec![], vec![]).unwrap();
        let (phi, theta) = arma_polys(&m);
        assert_eq!(phi, LaurentPoly::one(3));
        assert_eq!(theta, LaurentPoly::one(3));
    }

    #[test]
    fn planar_ar_vanishes_at_one_one() {
        let m = ModelSpec::ar_real(2, &[(&[1, 0], 0.5), (&[0, 1], 0.5)]).unwrap();
        let (phi, _) = arma_polys(&m);
        assert_eq!(phi.coeff(&vec![1, 0].into()), c(-0.5));
        assert_eq!(phi.eval(&[c(1.0), c(1.0)]).unwrap(), c(0.0));
    }

    #[test]
    fn first_order_constant_term() {
        let m = ModelSpec::first_order(0.3, 0.2, 0.1).unwrap();
        let (phi, _) = arma_polys(&m);
        assert_eq!(phi.eval(&[c(0.0), c(0.0)]).unwrap(), c(1.0));
        assert_eq!(phi.coeff(&vec![1, 1].into()), c(-0.1));
        assert_eq!(m.first_order_params(), Some((0.3, 0.2, 0.1)));
    }

    #[test]
    fn negative_power_of_zero_is_an_error() {
        let p = LaurentPoly::from_terms(1, [(vec![-1].into(), c(1.0))]).unwrap();
        assert!(matches!(
            p.eval(&[c(0.0)]),
            Err(Error::ZeroToNegativePower)
        ));
    }

    #[test]
    fn zero_coefficients_are_dropped() {
        let p = LaurentPoly::from_terms(
            1,
            [(vec![1].into(), c(1.0)), (vec![1].into(), c(-1.0))],
        )
        .unwrap();
        assert!(p.is_zero());
    }

    #[test]
    fn exponent_range_is_enforced() {
        let err = LaurentPoly::from_terms(1, [(vec![MAX_EXPONENT + 1].into(), c(1.0))]);
        assert!(matches!(err, Err(Error::ExponentOutOfRange(_))));
    }

    #[test]
    fn model_rejects_origin_and_dimension_mismatch() {
        assert!(ModelSpec::ar_real(2, &[(&[0, 0], 0.5)]).is_err());
        assert!(matches!(
            ModelSpec::ar_real(2, &[(&[1, 0, 0], 0.5)]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn monomial_on_four_point_grid() {
        let p = LaurentPoly::from_terms(1, [(vec![1].into(), c(1.0))]).unwrap();
        let g = eval_torus_grid(&p, &[4]).unwrap();
        for j in 0..4 {
            let want = Complex64::from_polar(1.0, -std::f64::consts::TAU * j as f64 / 4.0);
            assert!((g.data()[j] - want).norm() < 1e-15);
        }
    }

    #[test]
    fn json_round_trip() {
        let s = r#"{"d":2,"R":[[1,0],[0,1]],"phi":[[0.5,0],[0.5,0]],"S":[[1,1]],"theta":[[0.25,-0.5]]}"#;
        let m = ModelSpec::from_json_str(s).unwrap();
        let back = ModelSpec::from_json_str(&m.to_json_string()).unwrap();
        assert_eq!(m, back);
        assert_eq!(m.theta(&vec![1, 1].into()), Some(Complex64::new(0.25, -0.5)));
    }

    #[test]
    fn json_length_mismatch_is_invalid_model() {
        let s = r#"{"d":2,"R":[[1,0]],"phi":[],"S":[],"theta":[]}"#;
        assert!(matches!(
            ModelSpec::from_json_str(s),
            Err(Error::InvalidModel(_))
        ));
    }

    #[test]
    fn box_flatten_round_trip() {
        let b = IndexBox::new(vec![-2, 0, 1], vec![1, 3, 2]).unwrap();
        for (f, k) in b.iter().enumerate() {
            assert_eq!(b.flat_index(&k), Some(f));
        }
        assert_eq!(b.len(), 4 * 4 * 2);
    }
}
