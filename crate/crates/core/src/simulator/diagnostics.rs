//! Rectangular-convergence and three-series diagnostics.

use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use super::noise_at;
use super::rng::{CounterRng, DOMAIN_PATH};
use crate::error::{Error, Result};
use crate::noise::NoiseSpec;
use crate::par;
use crate::spectral::{CoefficientField, SupportKind};

/// Partial sums Σ_{k ≤ N} ψ_k Z_{t−k} along random monotone box sequences,
/// all on one noise realization.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PartialSumReport {
    pub t: Vec<i64>,
    pub paths: usize,
    /// Partial sum after every step, per path.
    pub traces: Vec<Vec<Complex64>>,
    pub finals: Vec<Complex64>,
    /// Entry m: max pairwise distance between paths at their first box with
    /// min N ≥ m.
    pub spread: Vec<f64>,
    /// Entry m: Σ |ψ_k Z_{t−k}| over the coefficient box minus [0, m]^d,
    /// which dominates `spread[m]`.
    pub spread_bound: Vec<f64>,
}

fn max_pairwise(v: &[Complex64]) -> f64 {
    let mut m: f64 = 0.0;
    for i in 0..v.len() {
        for j in i + 1..v.len() {
            m = m.max((v[i] - v[j]).norm());
        }
    }
    m
}

pub fn rectangular_partial_sums(
    coeffs: &CoefficientField,
    noise: &NoiseSpec,
    t: &[i64],
    paths: usize,
    seed: u64,
) -> Result<PartialSumReport> {
    if coeffs.support_kind() != SupportKind::CausalOrthant {
        return Err(Error::NotCausal);
    }
    let d = coeffs.dim();
    if t.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: t.len(),
        });
    }
    if paths == 0 {
        return Err(Error::InvalidArgument("need at least one path".into()));
    }
    let b = coeffs.index_box().clone();
    let top = b.upper.clone();
    let rng = CounterRng::new(seed);
    // Summands ψ_k Z_{t−k} in the coefficient box's flat order.
    let terms: Vec<Complex64> = par::map_indexed(b.len(), |i| {
        let k = b.unflatten(i);
        let psi = coeffs.get(&k);
        let s: Vec<i64> = t.iter().zip(&k).map(|(a, b)| a - b).collect();
        psi * noise_at(noise, &rng, &s)
    });
    let levels = top.iter().copied().min().unwrap_or(0) as usize + 1;

    let runs: Vec<(Vec<Complex64>, Vec<Complex64>)> = par::map_indexed(paths, |p| {
        let mut prng = rng.stream(DOMAIN_PATH, &[p as i64]);
        let mut corner = vec![0i64; d];
        let mut sum = terms[0];
        let mut trace = vec![sum];
        let mut at_level = vec![Complex64::new(0.0, 0.0); levels];
        at_level[0] = sum;
        let mut reached = 1usize;
        loop {
            let open: Vec<usize> = (0..d).filter(|&i| corner[i] < top[i]).collect();
            if open.is_empty() {
                break;
            }
            let axis = open[prng.random_range(0..open.len())];
            corner[axis] += 1;
            // New slab: k_axis = corner[axis], other coordinates up to the corner.
            let slab_upper = corner.clone();
            let mut slab_lower = vec![0i64; d];
            slab_lower[axis] = corner[axis];
            let slab = crate::poly::IndexBox {
                lower: slab_lower,
                upper: slab_upper,
            };
            for k in slab.iter() {
                sum += terms[b.flat_index(&k).expect("slab inside box")];
            }
            trace.push(sum);
            let m = corner.iter().copied().min().unwrap_or(0) as usize;
            while reached <= m && reached < levels {
                at_level[reached] = sum;
                reached += 1;
            }
        }
        (trace, at_level)
    });

    let mut spread = Vec::with_capacity(levels);
    let mut spread_bound = Vec::with_capacity(levels);
    for m in 0..levels {
        let vals: Vec<Complex64> = runs.iter().map(|(_, l)| l[m]).collect();
        spread.push(max_pairwise(&vals));
        let mut s = par::CompensatedSum::default();
        for (i, k) in b.iter().enumerate() {
            if k.iter().any(|&x| x > m as i64) {
                s.add(terms[i].norm());
            }
        }
        spread_bound.push(s.value());
    }
    let finals = runs.iter().map(|(tr, _)| *tr.last().expect("nonempty trace")).collect();
    Ok(PartialSumReport {
        t: t.to_vec(),
        paths,
        traces: runs.into_iter().map(|(tr, _)| tr).collect(),
        finals,
        spread,
        spread_bound,
    })
}

/// X(i, j) = (−1)^j i for j ∈ {1, 2} and i ≥ 1, zero elsewhere (1-based).
pub fn klesov_field(i: i64, j: i64) -> i64 {
    if i >= 1 && (1..=2).contains(&j) {
        if j % 2 == 0 {
            i
        } else {
            -i
        }
    } else {
        0
    }
}

/// Σ_{i ≤ n1, j ≤ n2} X(i, j), summed term by term in exact arithmetic.
pub fn klesov_rectangle_sum(n1: u64, n2: u64) -> i128 {
    let mut s: i128 = 0;
    for j in 1..=n2.min(2) as i64 {
        for i in 1..=n1 as i64 {
            s += klesov_field(i, j) as i128;
        }
    }
    s
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct KlesovStep {
    pub n1: u64,
    pub n2: u64,
    pub sum: i128,
}

/// Row-truncated path (n, 1), n = 1..=steps, with running exact sums.
pub fn klesov_row_path(steps: u64) -> Vec<KlesovStep> {
    let mut sum: i128 = 0;
    (1..=steps)
        .map(|n| {
            sum += klesov_field(n as i64, 1) as i128;
            KlesovStep { n1: n, n2: 1, sum }
        })
        .collect()
}

/// Least n with |S(n, 1)| = n(n+1)/2 > bound.
pub fn klesov_steps_to_exceed(bound: u64) -> u64 {
    let b = bound as u128;
    let mut n = ((2.0 * bound as f64).sqrt() as u128).saturating_sub(2);
    while n * (n + 1) / 2 <= b {
        n += 1;
    }
    n as u64
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SeriesVerdict {
    Convergent,
    Divergent,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeriesEstimate {
    /// Exact sum over the coefficient box.
    pub in_box: f64,
    /// Envelope extrapolation beyond the box, when convergent.
    pub extrapolated: Option<f64>,
    /// Ratios of consecutive dyadic shell blocks of the extrapolation.
    pub block_ratios: Vec<f64>,
    pub verdict: SeriesVerdict,
}

impl SeriesEstimate {
    pub fn total(&self) -> Option<f64> {
        self.extrapolated.map(|e| e + self.in_box)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ThreeSeriesReport {
    pub c: f64,
    /// Exponent γ with #{k : |k|₁ ≤ L, ψ_k ≠ 0} ≈ κ L^γ.
    pub support_growth: Option<f64>,
    #[serde(rename = "A")]
    pub a: SeriesEstimate,
    #[serde(rename = "C")]
    pub c_series: SeriesEstimate,
    pub verdict: SeriesVerdict,
}

const CONVERGENT_RATIO: f64 = 0.8;
const DIVERGENT_RATIO: f64 = 0.95;
/// Envelope values stay above e^{−600}·M.
const MAX_ENVELOPE_EXPONENT: f64 = 600.0;
const MAX_SHELL: usize = 1 << 20;

fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Dyadic blocks Σ_{L ∈ [2^j, 2^{j+1})} f(L) restricted to (l0, l_max], with
/// the terms in (l0, first block) returned separately.
fn dyadic_blocks(l0: usize, l_max: usize, f: impl Fn(usize) -> f64) -> (f64, Vec<f64>) {
    let mut j = 0;
    while (1usize << j) <= l0 {
        j += 1;
    }
    let start = 1usize << j;
    let head: f64 = (l0 + 1..start.min(l_max + 1)).map(&f).sum();
    let mut blocks = Vec::new();
    while (1usize << (j + 1)) - 1 <= l_max {
        blocks.push(((1usize << j)..(1usize << (j + 1))).map(&f).sum());
        j += 1;
    }
    (head, blocks)
}

fn classify_blocks(in_box: f64, head: f64, blocks: &[f64]) -> SeriesEstimate {
    let ratios: Vec<f64> = blocks
        .windows(2)
        .map(|w| if w[0] > 0.0 { w[1] / w[0] } else { 0.0 })
        .collect();
    let listed: f64 = head + blocks.iter().sum::<f64>();
    let last = blocks.last().copied().unwrap_or(0.0);
    let (verdict, extrapolated) = if !blocks.is_empty() && last == 0.0 {
        (SeriesVerdict::Convergent, Some(listed))
    } else {
        match ratios.last() {
            Some(&r) if r < CONVERGENT_RATIO => (SeriesVerdict::Convergent, Some(listed + last * r / (1.0 - r))),
            Some(&r) if r >= DIVERGENT_RATIO => (SeriesVerdict::Divergent, None),
            _ => (SeriesVerdict::Inconclusive, None),
        }
    };
    SeriesEstimate {
        in_box,
        extrapolated,
        block_ratios: ratios,
        verdict,
    }
}

/// Series (A) Σ P(|ψ_k Z| ≥ c) and (C) Σ Var(ψ_k Z 1{|ψ_k Z| < c}) for
/// symmetric noise, where series (B) vanishes.
///
/// Inside the coefficient box the sums use the exact tail and truncated
/// moment of the law. Beyond it |ψ_k| is replaced by the decay envelope and
/// the number of nonzero coefficients per shell by the fitted support growth;
/// the verdict comes from the ratio of far dyadic blocks. Both majorize the
/// true tail only heuristically.
pub fn three_series_report(coeffs: &CoefficientField, noise: &NoiseSpec, c: f64) -> Result<ThreeSeriesReport> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidArgument(format!("c must be positive, got {c}")));
    }
    if !noise.declared().symmetric {
        return Err(Error::InvalidNoise(
            "three-series diagnostics need symmetric noise; series (B) is not evaluated".into(),
        ));
    }
    let term_a = |x: f64| noise.tail(x);
    let term_c = |x: f64| c * c * noise.truncated_second_moment_ratio(x);
    let mut a_in = par::CompensatedSum::default();
    let mut c_in = par::CompensatedSum::default();
    for v in coeffs.values() {
        let m = v.norm();
        if m > 0.0 {
            a_in.add(term_a(c / m));
            c_in.add(term_c(c / m));
        }
    }

    let b = coeffs.index_box();
    let d = coeffs.dim();
    let l0 = match coeffs.support_kind() {
        SupportKind::CausalOrthant => b.upper.iter().copied().min().unwrap_or(0),
        SupportKind::FullLattice => b.upper.iter().chain(b.lower.iter().map(|x| x.abs()).collect::<Vec<_>>().iter()).copied().min().unwrap_or(0),
    }
    .max(0) as usize;

    let mut counts = vec![0usize; l0 + 1];
    for (k, v) in coeffs.iter() {
        let l1 = k.iter().map(|x| x.unsigned_abs() as usize).sum::<usize>();
        if l1 <= l0 && v.norm() > 0.0 {
            counts[l1] += 1;
        }
    }
    for l in 1..=l0 {
        counts[l] += counts[l - 1];
    }
    let growth = if l0 >= 4 && counts[l0] > 0 {
        let lo = l0.div_ceil(2);
        let xs: Vec<f64> = (lo..=l0).map(|l| ((l + 1) as f64).ln()).collect();
        let ys: Vec<f64> = (lo..=l0).map(|l| (counts[l].max(1) as f64).ln()).collect();
        Some(least_squares_slope(&xs, &ys).clamp(0.0, d as f64))
    } else {
        None
    };

    let inconclusive = |in_box: f64| SeriesEstimate {
        in_box,
        extrapolated: None,
        block_ratios: vec![],
        verdict: SeriesVerdict::Inconclusive,
    };
    let (a, cs) = match (coeffs.decay_fit(), growth) {
        (Some(fit), Some(g)) if fit.rate.is_finite() => {
            let kappa = counts[l0] as f64 / ((l0 + 1) as f64).powf(g);
            let shell = |l: usize| kappa * (((l + 1) as f64).powf(g) - (l as f64).powf(g));
            // x(L) = c / (M e^{−rL}), evaluated in log form.
            let arg = |l: usize| ((c / fit.scale).ln() + fit.rate * l as f64).exp();
            let l_max = ((MAX_ENVELOPE_EXPONENT / fit.rate) as usize).min(l0 + MAX_SHELL);
            let (ha, ba) = dyadic_blocks(l0, l_max, |l| shell(l) * term_a(arg(l)));
            let (hc, bc) = dyadic_blocks(l0, l_max, |l| {
                let x = arg(l);
                shell(l) * (term_c(x) + c * c * noise.tail(x))
            });
            (classify_blocks(a_in.value(), ha, &ba), classify_blocks(c_in.value(), hc, &bc))
        }
        (Some(fit), _) if fit.rate.is_infinite() => {
            // Finite support: nothing beyond the box.
            let done = |in_box: f64| SeriesEstimate {
                in_box,
                extrapolated: Some(0.0),
                block_ratios: vec![],
                verdict: SeriesVerdict::Convergent,
            };
            (done(a_in.value()), done(c_in.value()))
        }
        _ => (inconclusive(a_in.value()), inconclusive(c_in.value())),
    };
    let verdict = match (a.verdict, cs.verdict) {
        (SeriesVerdict::Divergent, _) | (_, SeriesVerdict::Divergent) => SeriesVerdict::Divergent,
        (SeriesVerdict::Convergent, SeriesVerdict::Convergent) => SeriesVerdict::Convergent,
        _ => SeriesVerdict::Inconclusive,
    };
    Ok(ThreeSeriesReport {
        c,
        support_growth: growth,
        a,
        c_series: cs,
        verdict,
    })
}
