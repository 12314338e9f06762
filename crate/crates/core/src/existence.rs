//! Existence verdicts assembled from spectral evidence and noise moments.
//!
//! Each check evaluates a list of conditions. Necessary conditions that fail
//! give `NotExists`; a sufficient leg whose conditions all pass gives
//! `Exists`; anything else is `Unknown`, with the full evidence attached.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::Serialize;
use serde_json::{json, Value};

use crate::delannoy::{delannoy_field, required_log_moment, DelannoyParams};
use crate::error::{Error, Result};
use crate::noise::NoiseSpec;
use crate::poly::{arma_polys, IndexBox, ModelSpec};
use crate::spectral::{
    causal_alpha, classify_h2, default_h2_box, default_quadrature, fourier_psi, l2_spectral_sequence,
    zero_free_closed_polydisc, zero_search_torus, CoefficientField, TorusGrid, Verdict,
};

/// Tolerance for zero searches and the bidisc decision.
pub const ZERO_TOL: f64 = 1e-9;
/// Tolerance of the exact bidisc reduction.
pub const BIDISC_TOL: f64 = 1e-10;

pub const CITE_LINEAR: &str = "linear stationarity characterization: L2 spectral condition plus a.s. absolute convergence";
pub const CITE_TORUS: &str = "zero-free torus with finite log-moment of order d implies a linear solution";
pub const CITE_H2: &str = "causal necessity: Theta/Phi in H2";
pub const CITE_CAUSAL_I: &str = "causal sufficiency (i): Phi zero-free on the closed polydisc and finite log-moment of order d";
pub const CITE_CAUSAL_II: &str = "causal sufficiency (ii): finite variance, zero mean and Theta/Phi in H2";
pub const CITE_BIDISC: &str = "planar autoregression: Phi zero-free on the closed bidisc is necessary";
pub const CITE_FIRST_ORDER: &str = "first-order planar characterization: zero-free closed bidisc and the matching log-moment";
pub const CITE_MA: &str = "finite moving average: Y = Theta(B)Z is a solution";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Mode {
    LinearStationary,
    Causal,
    FirstOrder2D,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ExistenceVerdict {
    Exists,
    NotExists,
    Unknown,
}

impl ExistenceVerdict {
    /// CLI exit code.
    pub fn exit_code(&self) -> i32 {
        match self {
            ExistenceVerdict::Exists => 0,
            ExistenceVerdict::NotExists => 1,
            ExistenceVerdict::Unknown => 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ConditionKind {
    Necessary,
    Sufficient { leg: String },
    /// Part of an if-and-only-if characterization.
    Characterizing,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Status {
    Pass,
    Fail,
    Undetermined,
}

impl Status {
    fn from_bool(b: bool) -> Self {
        if b {
            Status::Pass
        } else {
            Status::Fail
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Condition {
    pub name: String,
    #[serde(flatten)]
    pub kind: ConditionKind,
    pub status: Status,
    pub evidence: Value,
    pub citation: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExistenceReport {
    pub mode: Mode,
    pub verdict: ExistenceVerdict,
    /// Sufficient leg that established existence.
    pub leg: Option<String>,
    pub conditions: Vec<Condition>,
    pub citations: Vec<String>,
    #[serde(skip)]
    pub coefficients: Option<CoefficientField>,
}

impl ExistenceReport {
    fn assemble(mode: Mode, conditions: Vec<Condition>, coefficients: Option<CoefficientField>) -> Self {
        let necessary_fail = conditions.iter().any(|c| {
            matches!(c.kind, ConditionKind::Necessary | ConditionKind::Characterizing) && c.status == Status::Fail
        });
        let mut legs: Vec<String> = Vec::new();
        for c in &conditions {
            let leg = match &c.kind {
                ConditionKind::Sufficient { leg } => leg.clone(),
                ConditionKind::Characterizing => "characterization".to_string(),
                ConditionKind::Necessary => continue,
            };
            if !legs.contains(&leg) {
                legs.push(leg);
            }
        }
        let leg_of = |c: &Condition| match &c.kind {
            ConditionKind::Sufficient { leg } => Some(leg.clone()),
            ConditionKind::Characterizing => Some("characterization".to_string()),
            ConditionKind::Necessary => None,
        };
        let fired = legs.into_iter().find(|l| {
            conditions
                .iter()
                .filter(|c| leg_of(c).as_deref() == Some(l.as_str()))
                .all(|c| c.status == Status::Pass)
        });
        let verdict = if necessary_fail {
            ExistenceVerdict::NotExists
        } else if fired.is_some() {
            ExistenceVerdict::Exists
        } else {
            ExistenceVerdict::Unknown
        };
        let mut citations: Vec<String> = Vec::new();
        for c in &conditions {
            if !citations.contains(&c.citation) {
                citations.push(c.citation.clone());
            }
        }
        let leg = if verdict == ExistenceVerdict::Exists { fired } else { None };
        ExistenceReport {
            mode,
            verdict,
            leg,
            conditions,
            citations,
            coefficients: if verdict == ExistenceVerdict::Exists { coefficients } else { None },
        }
    }

    /// JSON document including a summary of the coefficient field.
    pub fn to_json(&self) -> Value {
        let mut v = serde_json::to_value(self).expect("report serializes");
        if let Some(c) = &self.coefficients {
            v["coefficients"] = json!({
                "support_kind": c.support_kind(),
                "box": c.index_box(),
                "decay_fit": c.decay_fit(),
            });
        }
        v
    }
}

fn cond(name: &str, kind: ConditionKind, status: Status, evidence: Value, citation: &str) -> Condition {
    Condition {
        name: name.to_string(),
        kind,
        status,
        evidence,
        citation: citation.to_string(),
    }
}

fn sufficient(leg: &str) -> ConditionKind {
    ConditionKind::Sufficient { leg: leg.to_string() }
}

fn require_nondeterministic(noise: &NoiseSpec) -> Result<()> {
    if noise.is_deterministic() {
        Err(Error::DeterministicNoise)
    } else {
        Ok(())
    }
}

/// Models without an autoregressive part always have the moving-average
/// solution.
fn moving_average_report(model: &ModelSpec, mode: Mode) -> Result<ExistenceReport> {
    let d = model.dim();
    let mut entries = vec![(vec![0i64; d], Complex64::new(1.0, 0.0))];
    entries.extend(model.ma_terms().map(|(k, c)| (k.as_slice().to_vec(), *c)));
    let kind = if model.is_causal_mode() {
        crate::spectral::SupportKind::CausalOrthant
    } else {
        crate::spectral::SupportKind::FullLattice
    };
    let field = CoefficientField::from_entries(d, &entries, kind)?.fit_decay();
    let c = cond(
        "no autoregressive part",
        sufficient("moving average"),
        Status::Pass,
        json!({"R": [], "S_terms": model.ma_terms().count()}),
        if model.is_trivial() {
            "trivial model: Y = Z is the solution"
        } else {
            CITE_MA
        },
    );
    Ok(ExistenceReport::assemble(mode, vec![c], Some(field)))
}

fn log_moment_condition(noise: &NoiseSpec, m: u32, kind: ConditionKind, citation: &str) -> Condition {
    cond(
        &format!("E log+^{m} |Z| finite"),
        kind,
        Status::from_bool(noise.log_moment_finite(m)),
        json!({"noise": noise.to_string(), "order": m}),
        citation,
    )
}

/// Box and grid used for ψ once a linear solution is known to exist.
fn linear_psi_geometry(d: usize) -> Option<(usize, usize)> {
    match d {
        1 => Some((64, 1024)),
        2 => Some((16, 256)),
        3 => Some((6, 32)),
        4 | 5 => Some((3, 16)),
        6 => Some((2, 8)),
        _ => None,
    }
}

/// Linear strictly stationary solutions.
pub fn check_linear_stationary(model: &ModelSpec, noise: &NoiseSpec) -> Result<ExistenceReport> {
    require_nondeterministic(noise)?;
    if model.ar_terms().next().is_none() {
        return moving_average_report(model, Mode::LinearStationary);
    }
    let d = model.dim();
    let (phi, _) = arma_polys(model);
    let (_, levels) = default_quadrature(d);
    let l2 = l2_spectral_sequence(model, levels)?;
    let l2_status = match l2.verdict {
        Verdict::Finite(_) => Status::Pass,
        Verdict::Divergent => Status::Fail,
        Verdict::Inconclusive => Status::Undetermined,
    };
    let torus = zero_search_torus(&phi, ZERO_TOL)?;
    let conditions = vec![
        cond(
            "L2 spectral condition",
            ConditionKind::Necessary,
            l2_status,
            serde_json::to_value(&l2)?,
            CITE_LINEAR,
        ),
        cond(
            "Phi zero-free on the torus",
            sufficient("zero-free torus"),
            Status::from_bool(!torus.found()),
            serde_json::to_value(&torus)?,
            CITE_TORUS,
        ),
        log_moment_condition(noise, d as u32, sufficient("zero-free torus"), CITE_TORUS),
    ];
    let mut report = ExistenceReport::assemble(Mode::LinearStationary, conditions, None);
    if report.verdict == ExistenceVerdict::Exists {
        if let Some((n, m)) = linear_psi_geometry(d) {
            let grid = TorusGrid::cube(d, m)?;
            report.coefficients = Some(fourier_psi(model, &grid, &IndexBox::symmetric(d, n))?);
        }
    }
    Ok(report)
}

/// Causal solutions; R and S must lie in the nonnegative orthant.
pub fn check_causal(model: &ModelSpec, noise: &NoiseSpec) -> Result<ExistenceReport> {
    if !model.is_causal_mode() {
        return Err(Error::NotCausal);
    }
    require_nondeterministic(noise)?;
    if model.ar_terms().next().is_none() {
        return moving_average_report(model, Mode::Causal);
    }
    let d = model.dim();
    let (phi, _) = arma_polys(model);
    let alpha = causal_alpha(model, &vec![default_h2_box(d); d])?;
    let h2 = classify_h2(&alpha)?;
    let disc = zero_free_closed_polydisc(&phi, ZERO_TOL)?;
    let flags = noise.declared();

    let h2_suff = match h2.verdict {
        Verdict::Finite(_) => Status::Pass,
        Verdict::Divergent => Status::Fail,
        Verdict::Inconclusive => Status::Undetermined,
    };
    // Partial-norm growth alone is a heuristic; a located zero of Phi in the
    // closed polydisc corroborates it before the necessity leg fails.
    let h2_nec = match (h2.verdict, disc.zero_found()) {
        (Verdict::Finite(_), _) => Status::Pass,
        (Verdict::Divergent, true) => Status::Fail,
        _ => Status::Undetermined,
    };
    let h2_evidence = serde_json::to_value(&h2)?;
    let disc_evidence = serde_json::to_value(&disc)?;

    let mut conditions = vec![
        cond("Theta/Phi in H2", ConditionKind::Necessary, h2_nec, h2_evidence.clone(), CITE_H2),
        cond(
            "Phi zero-free on the closed polydisc",
            sufficient("(i)"),
            Status::from_bool(!disc.zero_found()),
            disc_evidence.clone(),
            CITE_CAUSAL_I,
        ),
        log_moment_condition(noise, d as u32, sufficient("(i)"), CITE_CAUSAL_I),
        cond(
            "E|Z|^2 finite",
            sufficient("(ii)"),
            Status::from_bool(flags.finite_second_moment),
            json!({"noise": noise.to_string()}),
            CITE_CAUSAL_II,
        ),
        cond(
            "E Z = 0",
            sufficient("(ii)"),
            Status::from_bool(flags.zero_mean),
            json!({"noise": noise.to_string()}),
            CITE_CAUSAL_II,
        ),
        cond("Theta/Phi in H2", sufficient("(ii)"), h2_suff, h2_evidence, CITE_CAUSAL_II),
    ];
    if d == 2 && model.ma_terms().next().is_none() {
        conditions.push(cond(
            "Phi zero-free on the closed bidisc",
            ConditionKind::Necessary,
            Status::from_bool(!disc.zero_found()),
            disc_evidence,
            CITE_BIDISC,
        ));
    }
    Ok(ExistenceReport::assemble(Mode::Causal, conditions, Some(alpha)))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "result")]
pub enum BidiscResult {
    /// No zero on the closed bidisc; `min_modulus` is min |Φ| there.
    ZeroFree { min_modulus: f64 },
    ZeroAt { z1: Complex64, z2: Complex64 },
}

impl BidiscResult {
    pub fn is_zero_free(&self) -> bool {
        matches!(self, BidiscResult::ZeroFree { .. })
    }
}

const BOUNDARY_SAMPLES: usize = 4096;

/// Maximizes `f` over the circle: dense sampling (including 0 and π) and a
/// golden-section search around the best sample. Returns (argmax, max).
fn circle_max(f: impl Fn(f64) -> f64) -> (f64, f64) {
    let h = TAU / BOUNDARY_SAMPLES as f64;
    let (mut best_w, mut best) = (0.0, f(0.0));
    for j in 1..BOUNDARY_SAMPLES {
        let w = j as f64 * h;
        let v = f(w);
        if v > best {
            best = v;
            best_w = w;
        }
    }
    let (mut a, mut b) = (best_w - h, best_w + h);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..80 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    let w = 0.5 * (a + b);
    let v = f(w);
    if v > best {
        (w, v)
    } else {
        (best_w, best)
    }
}

/// Zero-freeness of Φ = 1 − φ1z1 − φ2z2 − φ3z1z2 on the closed bidisc.
///
/// For fixed z1 the only zero in z2 is g(z1) = (1 − φ1z1)/(φ2 + φ3z1). With
/// |φ1| < 1 the ratio |φ2 + φ3z1|/|1 − φ1z1| is the modulus of a function
/// holomorphic on the closed disc, so its maximum sits on |z1| = 1 and Φ is
/// zero-free iff that maximum is below 1.
pub fn bidisc_zero_free_bilinear(phi1: f64, phi2: f64, phi3: f64) -> Result<BidiscResult> {
    if phi1 == 0.0 && phi2 == 0.0 && phi3 == 0.0 {
        return Err(Error::InvalidArgument("all first-order weights are zero".into()));
    }
    if ![phi1, phi2, phi3].iter().all(|x| x.is_finite()) {
        return Err(Error::InvalidArgument("weights must be finite".into()));
    }
    let c = |x: f64| Complex64::new(x, 0.0);
    let on_disc = |x: f64| if x.abs() <= 1.0 { c(x) } else { c(x.signum()) };
    if phi1.abs() >= 1.0 - BIDISC_TOL {
        return Ok(BidiscResult::ZeroAt {
            z1: on_disc(1.0 / phi1),
            z2: c(0.0),
        });
    }
    if phi2.abs() >= 1.0 - BIDISC_TOL {
        return Ok(BidiscResult::ZeroAt {
            z1: c(0.0),
            z2: on_disc(1.0 / phi2),
        });
    }
    let a = |w: f64| c(1.0) - phi1 * Complex64::from_polar(1.0, w);
    let b = |w: f64| c(phi2) + phi3 * Complex64::from_polar(1.0, w);
    let (w, hmax) = circle_max(|w| b(w).norm() / a(w).norm());
    if hmax >= 1.0 - BIDISC_TOL {
        let z1 = Complex64::from_polar(1.0, w);
        let mut z2 = a(w) / b(w);
        if z2.norm() > 1.0 {
            z2 /= z2.norm();
        }
        return Ok(BidiscResult::ZeroAt { z1, z2 });
    }
    // On the torus min_{|z2|=1} |a + b z2| = |a| − |b|; by the minimum-modulus
    // principle this is also the minimum over the closed bidisc.
    let (_, neg_min) = circle_max(|w| b(w).norm() - a(w).norm());
    Ok(BidiscResult::ZeroFree { min_modulus: -neg_min })
}

/// Full characterization for Φ = 1 − φ1z1 − φ2z2 − φ3z1z2, Θ ≡ 1: a causal
/// solution exists iff Φ has no zero on the closed bidisc and E log₊^m |Z| < ∞,
/// with m = 2 when at least two weights are nonzero and m = 1 otherwise.
pub fn check_first_order_2d(phi1: f64, phi2: f64, phi3: f64, noise: &NoiseSpec) -> Result<ExistenceReport> {
    let bidisc = bidisc_zero_free_bilinear(phi1, phi2, phi3)?;
    require_nondeterministic(noise)?;
    let p = DelannoyParams::new(phi1, phi2, phi3);
    let m = required_log_moment(p);
    let conditions = vec![
        cond(
            "Phi zero-free on the closed bidisc",
            ConditionKind::Characterizing,
            Status::from_bool(bidisc.is_zero_free()),
            serde_json::to_value(bidisc)?,
            CITE_FIRST_ORDER,
        ),
        log_moment_condition(noise, m, ConditionKind::Characterizing, CITE_FIRST_ORDER),
    ];
    let field = bidisc.is_zero_free().then(|| delannoy_field(p, 30));
    Ok(ExistenceReport::assemble(Mode::FirstOrder2D, conditions, field))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bidisc_examples() {
        assert!(bidisc_zero_free_bilinear(0.2, 0.2, 0.1).unwrap().is_zero_free());
        match bidisc_zero_free_bilinear(0.5, 0.5, 0.0).unwrap() {
            BidiscResult::ZeroAt { z1, z2 } => {
                assert!((z1 - Complex64::new(1.0, 0.0)).norm() < 1e-9);
                assert!((z2 - Complex64::new(1.0, 0.0)).norm() < 1e-9);
            }
            r => panic!("{r:?}"),
        }
        match bidisc_zero_free_bilinear(0.9, 0.0, 0.0).unwrap() {
            BidiscResult::ZeroFree { min_modulus } => assert!((min_modulus - 0.1).abs() < 1e-12),
            r => panic!("{r:?}"),
        }
        assert!(bidisc_zero_free_bilinear(0.0, 0.0, 0.0).is_err());
        assert!(!bidisc_zero_free_bilinear(1.2, 0.0, 0.0).unwrap().is_zero_free());
    }

    #[test]
    fn first_order_examples() {
        let g = NoiseSpec::gaussian(1.0);
        let lp = NoiseSpec::log_pareto(1.5, true);
        let r = check_first_order_2d(0.2, 0.2, 0.1, &g).unwrap();
        assert_eq!(r.verdict, ExistenceVerdict::Exists);
        let psi = r.coefficients.unwrap();
        assert!((psi.get(&[1, 1]).re - (0.2 * 0.2 * 2.0 + 0.1)).abs() < 1e-15);
        assert_eq!(check_first_order_2d(0.2, 0.2, 0.1, &lp).unwrap().verdict, ExistenceVerdict::NotExists);
        assert_eq!(check_first_order_2d(0.9, 0.0, 0.0, &lp).unwrap().verdict, ExistenceVerdict::Exists);
        assert!(matches!(
            check_first_order_2d(0.2, 0.2, 0.1, &NoiseSpec::deterministic(Complex64::new(1.0, 0.0))),
            Err(Error::DeterministicNoise)
        ));
    }
}
