//! Innovation laws with exact tails and analytically declared moment facts.

use std::f64::consts::{E, PI};
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Cauchy, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum NoiseFamily {
    /// Independent N(0, σ²) real and imaginary parts.
    Gaussian { sigma: f64 },
    /// P(|Z| > x) = x^{−a} for x ≥ 1; random sign when symmetric.
    Pareto { exponent: f64, symmetric: bool },
    /// |Z| = e^W with P(W > y) = y^{−q} for y ≥ 1, so P(|Z| > x) = (ln x)^{−q}
    /// for x ≥ e; random sign when symmetric.
    LogPareto { exponent: f64, symmetric: bool },
    /// Standard real Cauchy.
    Cauchy,
    /// ±1 with probability ½ each.
    TwoPoint,
    /// P(Z = K) = 1.
    Deterministic { re: f64, im: f64 },
}

/// Moment facts consumed by the existence checks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MomentFlags {
    pub symmetric: bool,
    pub nondeterministic: bool,
    pub finite_second_moment: bool,
    pub zero_mean: bool,
    /// Entry m−1 states E log₊^m |Z| < ∞, m = 1..=5.
    pub log_moments: [bool; 5],
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    family: NoiseFamily,
    declared: MomentFlags,
}

fn check_positive(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidNoise(format!("{name} must be positive and finite, got {x}")))
    }
}

impl NoiseSpec {
    /// Validates the parameters and derives the moment flags.
    pub fn new(family: NoiseFamily) -> Result<Self> {
        match family {
            NoiseFamily::Gaussian { sigma } => check_positive("sigma", sigma)?,
            NoiseFamily::Pareto { exponent, .. } | NoiseFamily::LogPareto { exponent, .. } => {
                check_positive("tail exponent", exponent)?
            }
            NoiseFamily::Deterministic { re, im } => {
                if !(re.is_finite() && im.is_finite()) {
                    return Err(Error::InvalidNoise("deterministic value must be finite".into()));
                }
            }
            NoiseFamily::Cauchy | NoiseFamily::TwoPoint => {}
        }
        let mut spec = NoiseSpec {
            family,
            declared: MomentFlags {
                symmetric: false,
                nondeterministic: false,
                finite_second_moment: false,
                zero_mean: false,
                log_moments: [false; 5],
            },
        };
        spec.declared = MomentFlags {
            symmetric: spec.is_symmetric(),
            nondeterministic: !matches!(family, NoiseFamily::Deterministic { .. }),
            finite_second_moment: spec.second_moment_finite(),
            zero_mean: spec.mean_is_zero(),
            log_moments: std::array::from_fn(|i| spec.log_moment_finite(i as u32 + 1)),
        };
        Ok(spec)
    }

    /// As [`NoiseSpec::new`], rejecting declarations that contradict the family.
    pub fn with_declared(family: NoiseFamily, declared: MomentFlags) -> Result<Self> {
        let spec = Self::new(family)?;
        if spec.declared != declared {
            return Err(Error::InvalidNoise(format!(
                "declared moment flags {declared:?} contradict the family, which has {:?}",
                spec.declared
            )));
        }
        Ok(spec)
    }

    pub fn gaussian(sigma: f64) -> Self {
        Self::new(NoiseFamily::Gaussian { sigma }).expect("valid sigma")
    }

    pub fn cauchy() -> Self {
        Self::new(NoiseFamily::Cauchy).unwrap()
    }

    pub fn two_point() -> Self {
        Self::new(NoiseFamily::TwoPoint).unwrap()
    }

    pub fn log_pareto(exponent: f64, symmetric: bool) -> Self {
        Self::new(NoiseFamily::LogPareto { exponent, symmetric }).expect("valid exponent")
    }

    pub fn pareto(exponent: f64, symmetric: bool) -> Self {
        Self::new(NoiseFamily::Pareto { exponent, symmetric }).expect("valid exponent")
    }

    pub fn deterministic(k: Complex64) -> Self {
        Self::new(NoiseFamily::Deterministic { re: k.re, im: k.im }).expect("finite value")
    }

    /// Reference laws used across the diagnostics.
    pub fn catalog() -> Vec<NoiseSpec> {
        vec![
            Self::gaussian(1.0),
            Self::cauchy(),
            Self::log_pareto(1.5, true),
            Self::two_point(),
        ]
    }

    pub fn family(&self) -> NoiseFamily {
        self.family
    }

    pub fn declared(&self) -> MomentFlags {
        self.declared
    }

    pub fn is_deterministic(&self) -> bool {
        !self.declared.nondeterministic
    }

    fn is_symmetric(&self) -> bool {
        match self.family {
            NoiseFamily::Pareto { symmetric, .. } | NoiseFamily::LogPareto { symmetric, .. } => symmetric,
            NoiseFamily::Deterministic { re, im } => re == 0.0 && im == 0.0,
            _ => true,
        }
    }

    fn second_moment_finite(&self) -> bool {
        match self.family {
            NoiseFamily::Pareto { exponent, .. } => exponent > 2.0,
            NoiseFamily::LogPareto { .. } | NoiseFamily::Cauchy => false,
            _ => true,
        }
    }

    fn mean_is_zero(&self) -> bool {
        match self.family {
            NoiseFamily::Gaussian { .. } | NoiseFamily::TwoPoint => true,
            NoiseFamily::Pareto { exponent, symmetric } => symmetric && exponent > 1.0,
            NoiseFamily::LogPareto { .. } | NoiseFamily::Cauchy => false,
            NoiseFamily::Deterministic { re, im } => re == 0.0 && im == 0.0,
        }
    }

    /// E log₊^m |Z| < ∞.
    pub fn log_moment_finite(&self, m: u32) -> bool {
        match self.family {
            NoiseFamily::LogPareto { exponent, .. } => (m as f64) < exponent,
            _ => true,
        }
    }

    /// P(|Z| > x).
    pub fn tail(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 1.0;
        }
        match self.family {
            NoiseFamily::Gaussian { sigma } => (-x * x / (2.0 * sigma * sigma)).exp(),
            NoiseFamily::Pareto { exponent, .. } => {
                if x < 1.0 {
                    1.0
                } else {
                    x.powf(-exponent)
                }
            }
            NoiseFamily::LogPareto { exponent, .. } => {
                if x < E {
                    1.0
                } else {
                    x.ln().powf(-exponent)
                }
            }
            NoiseFamily::Cauchy => 1.0 - 2.0 / PI * x.atan(),
            NoiseFamily::TwoPoint => {
                if x < 1.0 {
                    1.0
                } else {
                    0.0
                }
            }
            NoiseFamily::Deterministic { re, im } => {
                if Complex64::new(re, im).norm() > x {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// E[|Z|² 1{|Z| < x}] / x², which stays finite where the moment itself
    /// overflows.
    pub fn truncated_second_moment_ratio(&self, x: f64) -> f64 {
        // Every family has E[|Z|² 1{|Z| < x}] = o(x²).
        if x <= 0.0 || x * x == f64::INFINITY {
            return 0.0;
        }
        let x2 = x * x;
        match self.family {
            NoiseFamily::Gaussian { sigma } => {
                let mu = 2.0 * sigma * sigma;
                let u = x2 / mu;
                // 1 − e^{−u}(1+u), written to avoid cancellation for small u.
                let g = if u < 1e-3 {
                    u * u / 2.0 - u * u * u / 3.0 + u.powi(4) / 8.0
                } else {
                    1.0 - (-u).exp() * (1.0 + u)
                };
                mu * g / x2
            }
            NoiseFamily::Pareto { exponent: a, .. } => {
                if x <= 1.0 {
                    0.0
                } else if (a - 2.0).abs() < 1e-12 {
                    a * x.ln() / x2
                } else {
                    a * (x.powf(2.0 - a) - 1.0) / ((2.0 - a) * x2)
                }
            }
            NoiseFamily::LogPareto { exponent: q, .. } => {
                if x <= E {
                    0.0
                } else {
                    log_pareto_ratio(q, x.ln())
                }
            }
            NoiseFamily::Cauchy => 2.0 / PI * (x - x.atan()) / x2,
            NoiseFamily::TwoPoint => {
                if x > 1.0 {
                    1.0 / x2
                } else {
                    0.0
                }
            }
            NoiseFamily::Deterministic { re, im } => {
                let k = Complex64::new(re, im).norm();
                if k < x {
                    k * k / x2
                } else {
                    0.0
                }
            }
        }
    }

    /// E[|Z|² 1{|Z| < x}].
    pub fn truncated_second_moment(&self, x: f64) -> f64 {
        self.truncated_second_moment_ratio(x) * x * x
    }

    /// E|Z|² when finite.
    pub fn second_moment(&self) -> Option<f64> {
        match self.family {
            NoiseFamily::Gaussian { sigma } => Some(2.0 * sigma * sigma),
            NoiseFamily::Pareto { exponent: a, .. } if a > 2.0 => Some(a / (a - 2.0)),
            NoiseFamily::TwoPoint => Some(1.0),
            NoiseFamily::Deterministic { re, im } => Some(re * re + im * im),
            _ => None,
        }
    }

    /// Var Z = E|Z − EZ|² when finite.
    pub fn variance(&self) -> Option<f64> {
        match self.family {
            NoiseFamily::Pareto { exponent: a, symmetric: false } if a > 2.0 => {
                let mean = a / (a - 1.0);
                Some(a / (a - 2.0) - mean * mean)
            }
            NoiseFamily::Deterministic { .. } => Some(0.0),
            _ => self.second_moment(),
        }
    }

    /// Essential supremum of |Z| when finite.
    pub fn bounded_support(&self) -> Option<f64> {
        match self.family {
            NoiseFamily::TwoPoint => Some(1.0),
            NoiseFamily::Deterministic { re, im } => Some(Complex64::new(re, im).norm()),
            _ => None,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Complex64 {
        let sign = |rng: &mut R, symmetric: bool| {
            if symmetric && rng.random::<bool>() {
                -1.0
            } else {
                1.0
            }
        };
        match self.family {
            NoiseFamily::Gaussian { sigma } => {
                let re: f64 = StandardNormal.sample(rng);
                let im: f64 = StandardNormal.sample(rng);
                Complex64::new(sigma * re, sigma * im)
            }
            NoiseFamily::Pareto { exponent, symmetric } => {
                let u: f64 = 1.0 - rng.random::<f64>();
                let s = sign(rng, symmetric);
                Complex64::new(s * u.powf(-1.0 / exponent), 0.0)
            }
            NoiseFamily::LogPareto { exponent, symmetric } => {
                let u: f64 = 1.0 - rng.random::<f64>();
                let w = u.powf(-1.0 / exponent);
                let s = sign(rng, symmetric);
                Complex64::new(s * w.exp().min(f64::MAX), 0.0)
            }
            NoiseFamily::Cauchy => {
                let c = Cauchy::new(0.0, 1.0).expect("unit scale");
                Complex64::new(c.sample(rng), 0.0)
            }
            NoiseFamily::TwoPoint => Complex64::new(sign(rng, true), 0.0),
            NoiseFamily::Deterministic { re, im } => Complex64::new(re, im),
        }
    }
}

/// E[|Z|²1{|Z|<x}]/x² for the log-Pareto law with L = ln x > 1. With
/// v = L − ln|Z| the integrand is q e^{−2v} (L−v)^{−q−1} on [0, L−1].
fn log_pareto_ratio(q: f64, l: f64) -> f64 {
    let upper = (l - 1.0).min(40.0);
    let n = 4000usize;
    let h = upper / n as f64;
    let f = |v: f64| q * (-2.0 * v).exp() * (l - v).powf(-q - 1.0);
    let mut s = f(0.0) + f(upper);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(i as f64 * h);
    }
    s * h / 3.0
}

impl fmt::Display for NoiseSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let pos = |s: bool| if s { "" } else { ":pos" };
        match self.family {
            NoiseFamily::Gaussian { sigma } => write!(f, "gaussian:{sigma}"),
            NoiseFamily::Pareto { exponent, symmetric } => {
                write!(f, "pareto:{exponent}{}", pos(symmetric))
            }
            NoiseFamily::LogPareto { exponent, symmetric } => {
                write!(f, "logpareto:{exponent}{}", pos(symmetric))
            }
            NoiseFamily::Cauchy => write!(f, "cauchy"),
            NoiseFamily::TwoPoint => write!(f, "twopoint"),
            NoiseFamily::Deterministic { re, im } => {
                if im == 0.0 {
                    write!(f, "deterministic:{re}")
                } else {
                    write!(f, "deterministic:{re},{im}")
                }
            }
        }
    }
}

/// Parses `gaussian[:σ]`, `pareto:a[:pos]`, `logpareto:q[:pos]`, `cauchy`,
/// `twopoint`, `deterministic:K` or `deterministic:re,im`.
impl FromStr for NoiseSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        let num = |t: &str| {
            t.parse::<f64>()
                .map_err(|_| Error::InvalidNoise(format!("not a number: {t:?}")))
        };
        let symmetric = |rest: &[&str]| match rest {
            [] => Ok(true),
            ["pos"] => Ok(false),
            ["sym"] => Ok(true),
            _ => Err(Error::InvalidNoise(format!("unexpected suffix in {s:?}"))),
        };
        let family = match parts.as_slice() {
            ["gaussian"] => NoiseFamily::Gaussian { sigma: 1.0 },
            ["gaussian", sig] => NoiseFamily::Gaussian { sigma: num(sig)? },
            ["pareto", a, rest @ ..] => NoiseFamily::Pareto {
                exponent: num(a)?,
                symmetric: symmetric(rest)?,
            },
            ["logpareto", q, rest @ ..] => NoiseFamily::LogPareto {
                exponent: num(q)?,
                symmetric: symmetric(rest)?,
            },
            ["cauchy"] => NoiseFamily::Cauchy,
            ["twopoint"] => NoiseFamily::TwoPoint,
            ["deterministic", k] => {
                let v: Vec<&str> = k.split(',').collect();
                match v.as_slice() {
                    [re] => NoiseFamily::Deterministic { re: num(re)?, im: 0.0 },
                    [re, im] => NoiseFamily::Deterministic {
                        re: num(re)?,
                        im: num(im)?,
                    },
                    _ => return Err(Error::InvalidNoise(format!("bad constant {k:?}"))),
                }
            }
            _ => return Err(Error::InvalidNoise(format!("unknown noise {s:?}"))),
        };
        NoiseSpec::new(family)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn flags_per_family() {
        let lp = NoiseSpec::log_pareto(1.5, true);
        assert_eq!(lp.declared().log_moments, [true, false, false, false, false]);
        assert!(!lp.declared().finite_second_moment);
        let g = NoiseSpec::gaussian(1.0);
        assert!(g.declared().zero_mean && g.declared().finite_second_moment);
        let k = NoiseSpec::deterministic(Complex64::new(2.0, 0.0));
        assert!(!k.declared().nondeterministic);
        assert!(!k.declared().symmetric);
        assert!(NoiseSpec::deterministic(Complex64::new(0.0, 0.0)).declared().symmetric);
        assert!(!NoiseSpec::pareto(1.5, true).declared().finite_second_moment);
        assert!(NoiseSpec::pareto(1.5, true).declared().zero_mean);
        assert!(!NoiseSpec::pareto(3.0, false).declared().zero_mean);
    }

    #[test]
    fn contradicting_declaration_is_rejected() {
        let mut flags = NoiseSpec::cauchy().declared();
        flags.finite_second_moment = true;
        assert!(NoiseSpec::with_declared(NoiseFamily::Cauchy, flags).is_err());
        assert!(NoiseSpec::new(NoiseFamily::Gaussian { sigma: -1.0 }).is_err());
    }

    #[test]
    fn parse_round_trip() {
        for s in ["gaussian:2", "pareto:1.5", "pareto:3:pos", "logpareto:1.5", "cauchy", "twopoint", "deterministic:0"] {
            let n: NoiseSpec = s.parse().unwrap();
            assert_eq!(n.to_string().parse::<NoiseSpec>().unwrap(), n);
        }
        assert!("student:3".parse::<NoiseSpec>().is_err());
        assert_eq!("gaussian".parse::<NoiseSpec>().unwrap(), NoiseSpec::gaussian(1.0));
    }

    fn numeric_m2(n: &NoiseSpec, x: f64, samples: usize) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut s = 0.0;
        for _ in 0..samples {
            let a = n.sample(&mut rng).norm();
            if a < x {
                s += a * a;
            }
        }
        s / samples as f64
    }

    #[test]
    fn truncated_moments_match_sampling() {
        for (n, x) in [
            (NoiseSpec::gaussian(1.0), 1.5),
            (NoiseSpec::cauchy(), 3.0),
            (NoiseSpec::pareto(1.5, true), 5.0),
            (NoiseSpec::log_pareto(1.5, true), 50.0),
        ] {
            let exact = n.truncated_second_moment(x);
            let mc = numeric_m2(&n, x, 200_000);
            assert!((exact - mc).abs() < 0.03 * exact.max(0.1), "{n}: {exact} vs {mc}");
        }
    }

    #[test]
    fn tails_match_sampling() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for (n, x) in [
            (NoiseSpec::gaussian(1.0), 1.0),
            (NoiseSpec::cauchy(), 2.0),
            (NoiseSpec::log_pareto(1.5, false), 20.0),
            (NoiseSpec::pareto(2.5, true), 1.7),
        ] {
            let k = 100_000;
            let hits = (0..k).filter(|_| n.sample(&mut rng).norm() > x).count();
            let p = n.tail(x);
            let sd = (p * (1.0 - p) / k as f64).sqrt();
            assert!((hits as f64 / k as f64 - p).abs() < 5.0 * sd, "{n}");
        }
    }
}
