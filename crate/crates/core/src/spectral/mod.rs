//! Torus quadrature, coefficient extraction and H² membership.

mod quadrature;
pub mod zeros;

pub use zeros::{zero_free_closed_polydisc, zero_search_torus, PolydiscSearch, TorusZeroReport};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::{self, ComplexGrid};
use crate::par::CompensatedSum;
use crate::poly::{arma_polys, eval_torus_grid, IndexBox, ModelSpec};

/// Nodes where |Φ| falls below this are excluded from quotients.
pub const NODE_FLOOR: f64 = 1e-13;

/// Fraction of skipped nodes above which a quadrature level is untrusted.
pub const MAX_SKIPPED_FRACTION: f64 = 1e-3;

/// Uniform grid t_j = 2πj/M on T^d.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TorusGrid {
    resolution: Vec<usize>,
}

impl TorusGrid {
    pub fn new(resolution: Vec<usize>) -> Result<Self> {
        if resolution.is_empty() {
            return Err(Error::InvalidArgument("grid of dimension 0".into()));
        }
        if resolution.iter().any(|&m| m < 2) {
            return Err(Error::InvalidArgument("grid resolution must be at least 2".into()));
        }
        Ok(TorusGrid { resolution })
    }

    pub fn cube(dim: usize, m: usize) -> Result<Self> {
        Self::new(vec![m; dim])
    }

    pub fn dim(&self) -> usize {
        self.resolution.len()
    }

    pub fn resolution(&self) -> &[usize] {
        &self.resolution
    }

    pub fn nodes(&self) -> usize {
        self.resolution.iter().product()
    }

    pub fn refined(&self) -> Self {
        TorusGrid {
            resolution: self.resolution.iter().map(|m| 2 * m).collect(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SupportKind {
    FullLattice,
    CausalOrthant,
}

/// Envelope |ψ_k| ≤ scale · e^{−rate·|k|}. `rate = ∞` encodes a field
/// supported at the origin only.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub scale: f64,
    pub rate: f64,
}

impl DecayFit {
    pub fn bound(&self, l1: f64) -> f64 {
        if self.rate.is_infinite() {
            if l1 == 0.0 {
                self.scale
            } else {
                0.0
            }
        } else {
            self.scale * (-self.rate * l1).exp()
        }
    }
}

/// Complex coefficients stored densely on an index box; entries outside the
/// box are zero.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientField {
    index_box: IndexBox,
    values: Vec<Complex64>,
    support_kind: SupportKind,
    decay_fit: Option<DecayFit>,
}

impl CoefficientField {
    pub fn new(index_box: IndexBox, values: Vec<Complex64>, support_kind: SupportKind) -> Result<Self> {
        if values.len() != index_box.len() {
            return Err(Error::InvalidArgument(format!(
                "{} values for a box of {} entries",
                values.len(),
                index_box.len()
            )));
        }
        if support_kind == SupportKind::CausalOrthant && index_box.lower.iter().any(|&l| l < 0) {
            return Err(Error::InvalidArgument(
                "causal-orthant field must live in the nonnegative orthant".into(),
            ));
        }
        Ok(CoefficientField {
            index_box,
            values,
            support_kind,
            decay_fit: None,
        })
    }

    /// Field from sparse entries; the box is the bounding box of the keys
    /// (and of the origin).
    pub fn from_entries(
        dim: usize,
        entries: &[(Vec<i64>, Complex64)],
        support_kind: SupportKind,
    ) -> Result<Self> {
        let mut lo = vec![0i64; dim];
        let mut hi = vec![0i64; dim];
        for (k, _) in entries {
            if k.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: k.len(),
                });
            }
            for i in 0..dim {
                lo[i] = lo[i].min(k[i]);
                hi[i] = hi[i].max(k[i]);
            }
        }
        let b = IndexBox::new(lo, hi)?;
        let mut values = vec![Complex64::new(0.0, 0.0); b.len()];
        for (k, v) in entries {
            values[b.flat_index(k).unwrap()] += v;
        }
        Self::new(b, values, support_kind)
    }

    pub fn dim(&self) -> usize {
        self.index_box.dim()
    }

    pub fn index_box(&self) -> &IndexBox {
        &self.index_box
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn support_kind(&self) -> SupportKind {
        self.support_kind
    }

    pub fn decay_fit(&self) -> Option<DecayFit> {
        self.decay_fit
    }

    pub fn get(&self, k: &[i64]) -> Complex64 {
        self.index_box
            .flat_index(k)
            .map(|f| self.values[f])
            .unwrap_or_default()
    }

    /// Entries in lexicographic order.
    pub fn iter(&self) -> impl Iterator<Item = (Vec<i64>, Complex64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .map(move |(f, v)| (self.index_box.unflatten(f), *v))
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Restriction to a sub-box.
    pub fn restrict(&self, b: &IndexBox) -> Result<CoefficientField> {
        if !self.index_box.contains_box(b) {
            return Err(Error::TruncationExceedsBox);
        }
        let values = b.iter().map(|k| self.get(&k)).collect();
        let mut out = CoefficientField::new(b.clone(), values, self.support_kind)?;
        out.decay_fit = self.decay_fit;
        Ok(out)
    }

    /// Computes and stores the exponential envelope.
    pub fn fit_decay(mut self) -> Self {
        self.decay_fit = decay_fit(&self);
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", content = "value")]
pub enum Verdict {
    Finite(f64),
    Divergent,
    Inconclusive,
}

impl Verdict {
    pub fn is_finite(&self) -> bool {
        matches!(self, Verdict::Finite(_))
    }
}

/// Refinement sequence with its verdict.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralClassification {
    pub verdict: Verdict,
    pub estimates: Vec<f64>,
    pub increments: Vec<f64>,
    /// Successive increment ratios; NaN where the previous increment is 0.
    pub growth_ratios: Vec<f64>,
    /// Grid resolution or shell radius per estimate.
    pub levels: Vec<usize>,
    pub skipped_fraction: Vec<f64>,
    pub diagnostic: Option<String>,
}

impl Serialize for SpectralClassification {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let (name, value) = match self.verdict {
            Verdict::Finite(v) => ("Finite", Some(v)),
            Verdict::Divergent => ("Divergent", None),
            Verdict::Inconclusive => ("Inconclusive", None),
        };
        let mut m = s.serialize_map(None)?;
        m.serialize_entry("verdict", name)?;
        m.serialize_entry("value", &value)?;
        m.serialize_entry("estimates", &self.estimates)?;
        m.serialize_entry("increments", &self.increments)?;
        m.serialize_entry("ratios", &self.growth_ratios)?;
        m.serialize_entry("levels", &self.levels)?;
        m.serialize_entry("skipped_fraction", &self.skipped_fraction)?;
        m.serialize_entry("diagnostic", &self.diagnostic)?;
        m.end()
    }
}

/// Increments at or below this fraction of the running value count as 0.
const CONVERGED_REL: f64 = 1e-12;

/// Labels a refinement sequence. Uses the last (up to) three increments:
/// Finite when each is at most half the previous one, Divergent when all are
/// positive and each is at least 0.9 times the previous one.
pub fn classify_sequence(estimates: &[f64], levels: Vec<usize>) -> SpectralClassification {
    let raw: Vec<f64> = estimates.windows(2).map(|w| w[1] - w[0]).collect();
    let increments: Vec<f64> = raw
        .iter()
        .zip(estimates.iter().skip(1))
        .map(|(&inc, &e)| {
            if inc.abs() <= CONVERGED_REL * e.abs().max(1.0) {
                0.0
            } else {
                inc
            }
        })
        .collect();
    let growth_ratios: Vec<f64> = increments
        .windows(2)
        .map(|w| if w[0] == 0.0 { f64::NAN } else { w[1] / w[0] })
        .collect();
    let verdict = if increments.len() < 2 || estimates.iter().any(|e| !e.is_finite()) {
        Verdict::Inconclusive
    } else {
        let tail = &increments[increments.len().saturating_sub(3)..];
        let finite = tail.windows(2).all(|w| w[1].abs() <= 0.5 * w[0].abs());
        let divergent =
            tail.iter().all(|&x| x > 0.0) && tail.windows(2).all(|w| w[1] >= 0.9 * w[0]);
        if finite {
            Verdict::Finite(*estimates.last().unwrap())
        } else if divergent {
            Verdict::Divergent
        } else {
            Verdict::Inconclusive
        }
    };
    SpectralClassification {
        verdict,
        estimates: estimates.to_vec(),
        increments,
        growth_ratios,
        levels,
        skipped_fraction: vec![],
        diagnostic: None,
    }
}

/// Base resolution and number of refinements used when none are given.
pub fn default_quadrature(dim: usize) -> (usize, usize) {
    match dim {
        0..=3 => (32, 4),
        4 => (32, 2),
        5 => (16, 2),
        _ => (8, 2),
    }
}

/// Normalized torus mean of |Θ/Φ|² at resolutions M0·2^ℓ, ℓ = 0..=levels,
/// with the default base resolution for the model's dimension.
pub fn l2_spectral_sequence(model: &ModelSpec, levels: usize) -> Result<SpectralClassification> {
    let (base, _) = default_quadrature(model.dim());
    l2_spectral_sequence_from(model, base, levels)
}

/// As [`l2_spectral_sequence`] with an explicit base resolution.
pub fn l2_spectral_sequence_from(
    model: &ModelSpec,
    base: usize,
    levels: usize,
) -> Result<SpectralClassification> {
    if levels < 2 {
        return Err(Error::InvalidArgument("at least 2 refinement levels are needed".into()));
    }
    if base < 2 {
        return Err(Error::InvalidArgument("base resolution must be at least 2".into()));
    }
    let (phi, theta) = arma_polys(model);
    let mut grid = TorusGrid::cube(model.dim(), base)?;
    let mut estimates = Vec::with_capacity(levels + 1);
    let mut skipped = Vec::with_capacity(levels + 1);
    let mut res_log = Vec::with_capacity(levels + 1);
    for _ in 0..=levels {
        let pass = quadrature::mean_ratio_squared(&phi, &theta, grid.resolution(), NODE_FLOOR);
        estimates.push(pass.mean);
        skipped.push(pass.skipped as f64 / pass.nodes as f64);
        res_log.push(grid.resolution()[0]);
        grid = grid.refined();
    }
    let mut out = classify_sequence(&estimates, res_log);
    if skipped.iter().all(|&f| f > MAX_SKIPPED_FRACTION) {
        out.verdict = Verdict::Inconclusive;
        out.diagnostic = Some(format!(
            "Phi vanishes on more than {MAX_SKIPPED_FRACTION} of the nodes at every level"
        ));
    }
    out.skipped_fraction = skipped;
    Ok(out)
}

/// Fourier coefficients ψ_k of Θ/Φ(e^{−it}) on `keep`, by sampling the
/// quotient on `grid` and inverting the DFT. Indices wrap to the signed range.
pub fn fourier_psi(model: &ModelSpec, grid: &TorusGrid, keep: &IndexBox) -> Result<CoefficientField> {
    let d = model.dim();
    if grid.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: grid.dim(),
        });
    }
    if keep.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: keep.dim(),
        });
    }
    for i in 0..d {
        let m = grid.resolution()[i] as i64;
        let reach = keep.lower[i].abs().max(keep.upper[i].abs());
        let extent = keep.upper[i] - keep.lower[i] + 1;
        if m < 4 * reach || m < 2 * extent {
            return Err(Error::InvalidArgument(format!(
                "grid axis {i} has {m} nodes; the keep box needs at least {}",
                (4 * reach).max(2 * extent)
            )));
        }
    }
    let (phi, theta) = arma_polys(model);
    let a = eval_torus_grid(&phi, grid.resolution())?;
    let mut q: ComplexGrid = eval_torus_grid(&theta, grid.resolution())?;
    let min_modulus = a.data().iter().map(|v| v.norm()).fold(f64::INFINITY, f64::min);
    if min_modulus < NODE_FLOOR {
        return Err(Error::AliasingRefused { min_modulus });
    }
    for (x, y) in q.data_mut().iter_mut().zip(a.data()) {
        *x /= y;
    }
    fft::fft_nd(&mut q, fft::Direction::Inverse);
    let scale = 1.0 / grid.nodes() as f64;
    let res = grid.resolution();
    let values = keep
        .iter()
        .map(|k| {
            let idx: Vec<usize> = k
                .iter()
                .zip(res)
                .map(|(&x, &m)| x.rem_euclid(m as i64) as usize)
                .collect();
            q.get(&idx) * scale
        })
        .collect();
    Ok(CoefficientField::new(keep.clone(), values, SupportKind::FullLattice)?.fit_decay())
}

/// Power-series coefficients α_k of Θ/Φ on {0..N_1}×…×{0..N_d} via
/// α_k = [k=0] + θ_k + Σ_{n∈R, n≤k} φ_n α_{k−n}. The summands of each α_k are
/// added in ascending (re, im) order, so the result does not depend on the
/// labelling of axes.
pub fn causal_alpha(model: &ModelSpec, n: &[usize]) -> Result<CoefficientField> {
    let d = model.dim();
    if n.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: n.len(),
        });
    }
    if !model.is_causal_mode() {
        return Err(Error::NotCausal);
    }
    let b = IndexBox::orthant(n);
    let strides = b.strides();
    let ar: Vec<(Vec<i64>, usize, Complex64)> = model
        .ar_terms()
        .map(|(k, c)| {
            let off = k
                .as_slice()
                .iter()
                .zip(&strides)
                .map(|(&x, &s)| x as usize * s)
                .sum();
            (k.as_slice().to_vec(), off, *c)
        })
        .collect();
    let ma: std::collections::HashMap<usize, Complex64> = model
        .ma_terms()
        .filter_map(|(k, c)| b.flat_index(k.as_slice()).map(|f| (f, *c)))
        .collect();
    let total = b.len();
    let mut alpha = vec![Complex64::new(0.0, 0.0); total];
    let mut k = vec![0i64; d];
    let mut summands: Vec<Complex64> = Vec::with_capacity(ar.len() + 2);
    for f in 0..total {
        summands.clear();
        if f == 0 {
            summands.push(Complex64::new(1.0, 0.0));
        }
        if let Some(t) = ma.get(&f) {
            summands.push(*t);
        }
        for (shift, off, c) in &ar {
            if shift.iter().zip(&k).all(|(s, x)| s <= x) {
                summands.push(c * alpha[f - off]);
            }
        }
        summands.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));
        alpha[f] = summands.iter().sum();
        for i in (0..d).rev() {
            k[i] += 1;
            if k[i] <= n[i] as i64 {
                break;
            }
            k[i] = 0;
        }
    }
    Ok(CoefficientField::new(b, alpha, SupportKind::CausalOrthant)?.fit_decay())
}

/// Partial sums Σ_{|k|≤s} |α_k|² for s = 0..shells−1. Shells beyond the
/// smallest box extent are only partially stored.
pub fn h2_partial_norms(c: &CoefficientField, shells: usize) -> Result<Vec<f64>> {
    if c.support_kind() != SupportKind::CausalOrthant {
        return Err(Error::InvalidArgument(
            "H² norms need a causal-orthant field".into(),
        ));
    }
    let mut shell = vec![CompensatedSum::default(); shells];
    for (k, v) in c.iter() {
        let s: i64 = k.iter().sum();
        if (s as usize) < shells {
            shell[s as usize].add(v.norm_sqr());
        }
    }
    let mut acc = CompensatedSum::default();
    Ok(shell
        .iter()
        .map(|x| {
            acc.add(x.value());
            acc.value()
        })
        .collect())
}

/// Square-summability verdict from partial norms at dyadic shell radii up to
/// the largest complete shell.
pub fn classify_h2(c: &CoefficientField) -> Result<SpectralClassification> {
    let complete = *c.index_box().upper.iter().min().unwrap() as usize;
    let norms = h2_partial_norms(c, complete + 1)?;
    let mut radii: Vec<usize> = (0..=4).rev().map(|j| complete >> j).filter(|&s| s >= 1).collect();
    radii.dedup();
    let estimates: Vec<f64> = radii.iter().map(|&s| norms[s]).collect();
    Ok(classify_sequence(&estimates, radii))
}

/// Default box for [`classify_h2`].
pub fn default_h2_box(dim: usize) -> usize {
    match dim {
        1 => 1024,
        2 => 128,
        3 => 32,
        _ => 16,
    }
}

fn least_squares_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

/// Relative magnitude below which coefficients count as numerical zero.
pub const DECAY_FLOOR_REL: f64 = 1e-13;

/// Exponential envelope |ψ_k| ≤ M e^{−c|k|} fitted to the per-shell maxima of
/// log|ψ_k|. Rejected (None) when the rate is not positive or when the outer
/// half of the shells decays at less than half the overall rate, which is the
/// signature of polynomial decay. M is the smallest dominating constant,
/// inflated by 1.05.
pub fn decay_fit(c: &CoefficientField) -> Option<DecayFit> {
    let max = c.max_abs();
    if max == 0.0 || !max.is_finite() {
        return None;
    }
    let floor = DECAY_FLOOR_REL * max;
    let mut shell_max: std::collections::BTreeMap<u64, f64> = Default::default();
    for (k, v) in c.iter() {
        let a = v.norm();
        if a > floor {
            let s: u64 = k.iter().map(|x| x.unsigned_abs()).sum();
            let e = shell_max.entry(s).or_insert(0.0);
            *e = e.max(a);
        }
    }
    if shell_max.len() == 1 && shell_max.contains_key(&0) {
        return Some(DecayFit {
            scale: shell_max[&0],
            rate: f64::INFINITY,
        });
    }
    if shell_max.len() < 2 {
        return None;
    }
    let pts: Vec<(f64, f64)> = shell_max.iter().map(|(&s, &m)| (s as f64, m.ln())).collect();
    let rate = -least_squares_slope(&pts);
    if !(rate > 0.0 && rate.is_finite()) {
        return None;
    }
    if pts.len() >= 6 {
        let tail = -least_squares_slope(&pts[pts.len() / 2..]);
        if !(tail >= 0.5 * rate) {
            return None;
        }
    }
    let log_scale = c
        .iter()
        .filter(|(_, v)| v.norm() > floor)
        .map(|(k, v)| {
            let s: u64 = k.iter().map(|x| x.unsigned_abs()).sum();
            v.norm().ln() + rate * s as f64
        })
        .fold(f64::NEG_INFINITY, f64::max);
    Some(DecayFit {
        scale: 1.05 * log_scale.exp(),
        rate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn classification_rules() {
        let fin = classify_sequence(&[1.0, 1.5, 1.7, 1.75, 1.76], vec![]);
        assert_eq!(fin.verdict, Verdict::Finite(1.76));
        let div = classify_sequence(&[1.0, 2.0, 3.0, 4.1, 5.1], vec![]);
        assert_eq!(div.verdict, Verdict::Divergent);
        let inc = classify_sequence(&[1.0, 2.0, 2.5, 2.6, 3.0], vec![]);
        assert_eq!(inc.verdict, Verdict::Inconclusive);
        let flat = classify_sequence(&[2.0, 2.0, 2.0 + 1e-15], vec![]);
        assert_eq!(flat.verdict, Verdict::Finite(2.0 + 1e-15));
        assert_eq!(classify_sequence(&[1.0, 2.0], vec![]).verdict, Verdict::Inconclusive);
    }

    #[test]
    fn geometric_alpha_and_h2() {
        let m = ModelSpec::ar_real(2, &[(&[1, 0], 0.5)]).unwrap();
        let a = causal_alpha(&m, &[20, 20]).unwrap();
        for n in 0..=20 {
            assert_eq!(a.get(&[n, 0]), c(0.5f64.powi(n as i32)));
            assert_eq!(a.get(&[n, 3]), c(0.0));
        }
        let norms = h2_partial_norms(&a, 21).unwrap();
        assert!((norms[20] - 4.0 / 3.0).abs() < 1e-6);
        assert!(norms.windows(2).all(|w| w[1] >= w[0]));
        let fit = a.decay_fit().unwrap();
        assert!((fit.rate - 2f64.ln()).abs() < 0.05 * 2f64.ln());
    }

    #[test]
    fn origin_only_field_fit() {
        let f = CoefficientField::from_entries(2, &[(vec![0, 0], c(1.0))], SupportKind::CausalOrthant)
            .unwrap();
        let fit = decay_fit(&f).unwrap();
        assert_eq!(fit.scale, 1.0);
        assert!(fit.rate.is_infinite());
        assert_eq!(h2_partial_norms(&f, 5).unwrap(), vec![1.0; 5]);
    }

    #[test]
    fn polynomial_decay_has_no_envelope() {
        let b = IndexBox::orthant(&[20, 20]);
        let vals = b
            .iter()
            .map(|k| {
                let s = (k[0] + k[1]) as f64;
                c(1.0 / ((1.0 + s) * (1.0 + s)))
            })
            .collect();
        let f = CoefficientField::new(b, vals, SupportKind::CausalOrthant).unwrap();
        assert!(decay_fit(&f).is_none());
    }

    #[test]
    fn quotient_of_equal_polys_is_delta() {
        let m = ModelSpec::new(
            2,
            vec![(vec![1, 0], c(-0.3)), (vec![0, 2], c(0.2))],
            vec![(vec![1, 0], c(0.3)), (vec![0, 2], c(-0.2))],
        )
        .unwrap();
        let grid = TorusGrid::cube(2, 64).unwrap();
        let psi = fourier_psi(&m, &grid, &IndexBox::symmetric(2, 8)).unwrap();
        for (k, v) in psi.iter() {
            let want = if k == [0, 0] { 1.0 } else { 0.0 };
            assert!((v - c(want)).norm() < 1e-12, "{k:?} {v}");
        }
    }

    #[test]
    fn fft_refuses_torus_zero() {
        let m = ModelSpec::ar_real(2, &[(&[1, 0], 0.5), (&[0, 1], 0.5)]).unwrap();
        let grid = TorusGrid::cube(2, 64).unwrap();
        assert!(matches!(
            fourier_psi(&m, &grid, &IndexBox::orthant(&[4, 4])),
            Err(Error::AliasingRefused { .. })
        ));
    }

    #[test]
    fn causal_alpha_rejects_negative_support() {
        let m = ModelSpec::ar_real(2, &[(&[1, -1], 0.5)]).unwrap();
        assert!(matches!(causal_alpha(&m, &[3, 3]), Err(Error::NotCausal)));
    }
}
