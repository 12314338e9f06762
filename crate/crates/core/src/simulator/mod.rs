//! Seeded noise fields, truncated solution fields, residual verification and
//! convergence diagnostics.

mod diagnostics;
pub mod rng;

pub use diagnostics::{
    klesov_field, klesov_rectangle_sum, klesov_row_path, klesov_steps_to_exceed, rectangular_partial_sums,
    three_series_report, KlesovStep, PartialSumReport, SeriesEstimate, SeriesVerdict, ThreeSeriesReport,
};

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::noise::NoiseSpec;
use crate::par;
use crate::poly::{IndexBox, ModelSpec, MultiIndex};
use crate::spectral::{CoefficientField, SupportKind};
use rng::{CounterRng, DOMAIN_SITE};

/// Finite view of Z^d with inclusive bounds.
pub type LatticeWindow = IndexBox;

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Provenance {
    Noise { noise: String },
    Linear { noise: String, truncation: IndexBox },
    Perturbed { lambda: Vec<f64>, u: f64, base: Box<Provenance> },
}

/// Field values on a window, row-major in the window's index order.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FieldSample {
    pub window: LatticeWindow,
    #[serde(skip)]
    pub values: Vec<Complex64>,
    pub seed: u64,
    pub provenance: Provenance,
}

impl FieldSample {
    pub fn dim(&self) -> usize {
        self.window.dim()
    }

    /// Value at `t`, if inside the window.
    pub fn get(&self, t: &[i64]) -> Option<Complex64> {
        self.window.flat_index(t).map(|i| self.values[i])
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

/// Noise at site `t`; depends only on (noise, seed, t).
pub fn noise_at(noise: &NoiseSpec, rng: &CounterRng, t: &[i64]) -> Complex64 {
    noise.sample(&mut rng.stream(DOMAIN_SITE, t))
}

pub fn sample_noise(noise: &NoiseSpec, window: &LatticeWindow, seed: u64) -> FieldSample {
    let rng = CounterRng::new(seed);
    let values = par::map_indexed(window.len(), |i| noise_at(noise, &rng, &window.unflatten(i)));
    FieldSample {
        window: window.clone(),
        values,
        seed,
        provenance: Provenance::Noise {
            noise: noise.to_string(),
        },
    }
}

/// Coefficient box used for truncation level `n`.
pub fn truncation_box(kind: SupportKind, dim: usize, n: usize) -> IndexBox {
    match kind {
        SupportKind::CausalOrthant => IndexBox::orthant(&vec![n; dim]),
        SupportKind::FullLattice => IndexBox::symmetric(dim, n),
    }
}

/// Sites t − k for t in `window` and k in `trunc`.
pub fn dilated_window(window: &LatticeWindow, trunc: &IndexBox) -> LatticeWindow {
    IndexBox {
        lower: window.lower.iter().zip(&trunc.upper).map(|(a, b)| a - b).collect(),
        upper: window.upper.iter().zip(&trunc.lower).map(|(a, b)| a - b).collect(),
    }
}

fn check_window(window: &LatticeWindow, dim: usize) -> Result<()> {
    if window.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: window.dim(),
        });
    }
    if window.is_empty() {
        return Err(Error::InvalidArgument("empty window".into()));
    }
    Ok(())
}

/// Y_t = Σ_{k ∈ box(N)} ψ_k Z_{t−k}, summed in lexicographic k order.
pub fn linear_field(
    coeffs: &CoefficientField,
    noise: &NoiseSpec,
    window: &LatticeWindow,
    n: usize,
    seed: u64,
) -> Result<FieldSample> {
    let d = coeffs.dim();
    check_window(window, d)?;
    let trunc = truncation_box(coeffs.support_kind(), d, n);
    if !coeffs.index_box().contains_box(&trunc) {
        return Err(Error::TruncationExceedsBox);
    }
    let dil = dilated_window(window, &trunc);
    let z = sample_noise(noise, &dil, seed);
    let strides = dil.strides();
    // Offsets of Z_{t−k} relative to Z_t in the dilated array.
    let terms: Vec<(Complex64, i64)> = trunc
        .iter()
        .filter_map(|k| {
            let psi = coeffs.get(&k);
            (psi != Complex64::new(0.0, 0.0)).then(|| {
                let off: i64 = k.iter().zip(&strides).map(|(a, s)| a * *s as i64).sum();
                (psi, off)
            })
        })
        .collect();
    let values = par::map_indexed(window.len(), |i| {
        let t = window.unflatten(i);
        let base = dil.flat_index(&t).expect("window inside dilation") as i64;
        let mut acc = Complex64::new(0.0, 0.0);
        for &(psi, off) in &terms {
            acc += psi * z.values[(base - off) as usize];
        }
        acc
    });
    Ok(FieldSample {
        window: window.clone(),
        values,
        seed,
        provenance: Provenance::Linear {
            noise: noise.to_string(),
            truncation: trunc,
        },
    })
}

/// Residual Φ(B)Y − Θ(B)Z on the interior of both windows.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResidualReport {
    pub max_abs: f64,
    pub argmax: Vec<i64>,
    pub interior: IndexBox,
    #[serde(skip)]
    pub values: Vec<Complex64>,
}

pub fn arma_residual(model: &ModelSpec, y: &FieldSample, z: &FieldSample) -> Result<ResidualReport> {
    let d = model.dim();
    check_window(&y.window, d)?;
    check_window(&z.window, d)?;
    let (lo, hi) = model.shift_bounds();
    let neg_lo: Vec<i64> = lo.iter().map(|x| -x).collect();
    let shrink = |w: &IndexBox| w.shrink(&hi, &neg_lo);
    let (ya, za) = match (shrink(&y.window), shrink(&z.window)) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(Error::EmptyInterior),
    };
    let lower: Vec<i64> = ya.lower.iter().zip(&za.lower).map(|(a, b)| *a.max(b)).collect();
    let upper: Vec<i64> = ya.upper.iter().zip(&za.upper).map(|(a, b)| *a.min(b)).collect();
    if lower.iter().zip(&upper).any(|(l, u)| l > u) {
        return Err(Error::EmptyInterior);
    }
    let interior = IndexBox { lower, upper };
    let ar: Vec<(Vec<i64>, Complex64)> = model.ar_terms().map(|(k, c)| (k.as_slice().to_vec(), *c)).collect();
    let ma: Vec<(Vec<i64>, Complex64)> = model.ma_terms().map(|(k, c)| (k.as_slice().to_vec(), *c)).collect();
    let at = |f: &FieldSample, t: &[i64], n: &[i64]| {
        let s: Vec<i64> = t.iter().zip(n).map(|(a, b)| a - b).collect();
        f.get(&s).expect("interior shift stays in window")
    };
    let values = par::map_indexed(interior.len(), |i| {
        let t = interior.unflatten(i);
        let mut r = y.get(&t).expect("interior") - z.get(&t).expect("interior");
        for (n, phi) in &ar {
            r -= phi * at(y, &t, n);
        }
        for (n, theta) in &ma {
            r -= theta * at(z, &t, n);
        }
        r
    });
    let (mut max_abs, mut arg) = (0.0, 0usize);
    for (i, v) in values.iter().enumerate() {
        if v.norm() > max_abs {
            max_abs = v.norm();
            arg = i;
        }
    }
    Ok(ResidualReport {
        max_abs,
        argmax: interior.unflatten(arg),
        interior,
        values,
    })
}

/// Componentwise a-posteriori bound on the residual of an N-truncated field.
///
/// With the truncated filter ψᴺ, Φ(B)Yᴺ − Θ(B)Z = Σ_k r_k Z_{t−k} where
/// r = ψᴺ − Σ_n φ_n τ_n ψᴺ − θ. Inside the truncation box r is the numerical
/// defect of the coefficients; outside it is a strip along the outer faces,
/// dominated by the decay envelope.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TailBound {
    pub truncation: usize,
    pub sup_noise: f64,
    /// Σ |r_k| over the truncation box.
    pub in_box_defect: f64,
    /// Σ |r_k| outside the truncation box, from the computed coefficients.
    pub strip_exact: f64,
    /// Envelope majorant of the strip, when a decay fit exists.
    pub strip_envelope: Option<f64>,
    /// Floating-point error bound of the summations.
    pub rounding: f64,
    pub bound: f64,
}

fn gamma(n: usize) -> f64 {
    let u = f64::EPSILON / 2.0;
    let nu = n as f64 * u;
    nu / (1.0 - nu)
}

pub fn truncation_tail_bound(
    model: &ModelSpec,
    coeffs: &CoefficientField,
    noise: &NoiseSpec,
    window: &LatticeWindow,
    n: usize,
    seed: u64,
) -> Result<TailBound> {
    let d = model.dim();
    if coeffs.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: coeffs.dim(),
        });
    }
    check_window(window, d)?;
    let trunc = truncation_box(coeffs.support_kind(), d, n);
    if !coeffs.index_box().contains_box(&trunc) {
        return Err(Error::TruncationExceedsBox);
    }
    let sup_noise = sample_noise(noise, &dilated_window(window, &trunc), seed).max_abs();
    let (lo, hi) = model.shift_bounds();
    let ext = IndexBox {
        lower: trunc.lower.iter().zip(&lo).map(|(a, b)| a + b.min(&0)).collect(),
        upper: trunc.upper.iter().zip(&hi).map(|(a, b)| a + b.max(&0)).collect(),
    };
    let ar: Vec<(Vec<i64>, Complex64)> = model.ar_terms().map(|(k, c)| (k.as_slice().to_vec(), *c)).collect();
    let psi_n = |k: &[i64]| {
        if trunc.contains(k) {
            coeffs.get(k)
        } else {
            Complex64::new(0.0, 0.0)
        }
    };
    let r_abs = par::map_indexed(ext.len(), |i| {
        let k = ext.unflatten(i);
        let theta0 = if k.iter().all(|&x| x == 0) { 1.0 } else { 0.0 };
        let theta = model.theta(&MultiIndex::from(k.as_slice())).unwrap_or_default() + theta0;
        let mut r = psi_n(&k) - theta;
        for (m, phi) in &ar {
            let s: Vec<i64> = k.iter().zip(m).map(|(a, b)| a - b).collect();
            r -= phi * psi_n(&s);
        }
        (trunc.contains(&k), r.norm())
    });
    let mut defect = par::CompensatedSum::default();
    let mut strip = par::CompensatedSum::default();
    for (inside, a) in r_abs {
        if inside {
            defect.add(a);
        } else {
            strip.add(a);
        }
    }
    let theta_out: f64 = model
        .ma_terms()
        .filter(|(k, _)| !trunc.contains(k.as_slice()))
        .map(|(_, c)| c.norm())
        .sum();
    let envelope = coeffs.decay_fit().map(|fit| {
        let mut s = theta_out;
        for (m_shift, phi) in &ar {
            for k in trunc.iter() {
                let moved: Vec<i64> = k.iter().zip(m_shift).map(|(a, b)| a + b).collect();
                if !trunc.contains(&moved) {
                    let l1: i64 = k.iter().map(|x| x.abs()).sum();
                    s += phi.norm() * fit.bound(l1 as f64);
                }
            }
        }
        s
    });
    let abs_phi: f64 = ar.iter().map(|(_, c)| c.norm()).sum();
    let abs_theta: f64 = model.ma_terms().map(|(_, c)| c.norm()).sum();
    let (nonzero, abs_psi) = trunc.iter().fold((0usize, 0.0), |(c, s), k| {
        let v = coeffs.get(&k).norm();
        (c + (v > 0.0) as usize, s + v)
    });
    let y_err = 2.0 * gamma(nonzero + 2) * sup_noise * abs_psi;
    let y_max = sup_noise * abs_psi * (1.0 + gamma(nonzero + 2));
    let terms = ar.len() + model.ma_terms().count() + 4;
    let rounding = (1.0 + abs_phi) * y_err
        + 2.0 * gamma(terms) * ((1.0 + abs_phi) * (y_max + y_err) + (1.0 + abs_theta) * sup_noise);
    let strip_exact = strip.value();
    let in_box_defect = defect.value();
    let strip_major = envelope.map_or(strip_exact, |e| e.max(strip_exact));
    Ok(TailBound {
        truncation: n,
        sup_noise,
        in_box_defect,
        strip_exact,
        strip_envelope: envelope,
        rounding,
        bound: sup_noise * (in_box_defect + strip_major) + rounding,
    })
}

/// Adds W_t = e^{i2πU} e^{i t·λ}. When Φ(e^{−iλ}) = 0 the sum solves the same
/// equation, which breaks uniqueness of stationary solutions.
pub fn nonunique_perturbation(y: &FieldSample, lambda: &[f64], u: f64) -> Result<FieldSample> {
    if lambda.len() != y.dim() {
        return Err(Error::DimensionMismatch {
            expected: y.dim(),
            found: lambda.len(),
        });
    }
    if !(0.0..1.0).contains(&u) || lambda.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument("need U in [0,1) and finite λ".into()));
    }
    let values = par::map_indexed(y.values.len(), |i| {
        let t = y.window.unflatten(i);
        let phase = TAU * u + t.iter().zip(lambda).map(|(a, b)| *a as f64 * b).sum::<f64>();
        y.values[i] + Complex64::from_polar(1.0, phase)
    });
    Ok(FieldSample {
        window: y.window.clone(),
        values,
        seed: y.seed,
        provenance: Provenance::Perturbed {
            lambda: lambda.to_vec(),
            u,
            base: Box::new(y.provenance.clone()),
        },
    })
}

/// Mean-square truncation error Σ_{k ∉ box(N)} |α_k|² Var Z over the computed
/// coefficients. Without a geometric envelope this is the only available
/// measure, and it is not an almost-sure bound.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ParsevalTail {
    pub truncation: usize,
    pub variance: Option<f64>,
    pub value: Option<f64>,
    pub label: &'static str,
}

pub fn parseval_tail(coeffs: &CoefficientField, noise: &NoiseSpec, n: usize) -> ParsevalTail {
    let trunc = truncation_box(coeffs.support_kind(), coeffs.dim(), n);
    let mut s = par::CompensatedSum::default();
    for (k, v) in coeffs.iter() {
        if !trunc.contains(&k) {
            s.add(v.norm_sqr());
        }
    }
    let variance = noise.variance();
    ParsevalTail {
        truncation: n,
        variance,
        value: variance.map(|v| v * s.value()),
        label: "mean-square, not a.s.",
    }
}
