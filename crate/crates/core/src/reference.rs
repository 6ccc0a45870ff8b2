//! Ground-truth distributions used as fit targets and audit oracles.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, ChiSquared, Distribution, Gamma, LogNormal, Normal, StandardNormal, StudentT};
use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::numerics::special::{
    beta_inc_complement_inv, beta_inc_inv, beta_inc_pair, gamma_p_inv, gamma_pq,
    ln_beta, ln_gamma_unchecked, normal_cdf, normal_pdf, normal_quantile,
};

/// Identifier of a reference distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DistributionId {
    Normal,
    Lognormal,
    Gamma,
    Beta,
    Rayleigh,
    Chisquare,
    StudentT,
    NormalBernoulliMixture,
}

/// The distributions the quantile approximation is tested against.
///
/// Gamma's `b` is a scale; Rayleigh's `nu` is the scale σ. The mixture is
/// `x_c + a·x_d` with `x_c ~ N(0, 1)` and `x_d ~ Bernoulli(p)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum ReferenceDistribution {
    Normal { mu: f64, sigma: f64 },
    Lognormal { mu: f64, sigma: f64 },
    Gamma { a: f64, b: f64 },
    Beta { a: f64, b: f64 },
    Rayleigh { nu: f64 },
    Chisquare { nu: f64 },
    StudentT { nu: f64 },
    Mixture { a: f64, p: f64 },
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(domain(format!("parameter {name} must be finite and > 0, got {v}")))
    }
}

fn finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(domain(format!("parameter {name} must be finite, got {v}")))
    }
}

fn check_open_unit(u: f64) -> Result<()> {
    if u > 0.0 && u < 1.0 {
        Ok(())
    } else {
        Err(domain(format!("probability must lie in (0, 1), got {u}")))
    }
}

impl ReferenceDistribution {
    pub fn normal(mu: f64, sigma: f64) -> Result<Self> {
        finite("mu", mu)?;
        positive("sigma", sigma)?;
        Ok(Self::Normal { mu, sigma })
    }

    pub fn lognormal(mu: f64, sigma: f64) -> Result<Self> {
        finite("mu", mu)?;
        positive("sigma", sigma)?;
        Ok(Self::Lognormal { mu, sigma })
    }

    pub fn gamma(a: f64, b: f64) -> Result<Self> {
        positive("a", a)?;
        positive("b", b)?;
        Ok(Self::Gamma { a, b })
    }

    pub fn beta(a: f64, b: f64) -> Result<Self> {
        positive("a", a)?;
        positive("b", b)?;
        Ok(Self::Beta { a, b })
    }

    pub fn rayleigh(nu: f64) -> Result<Self> {
        positive("nu", nu)?;
        Ok(Self::Rayleigh { nu })
    }

    pub fn chisquare(nu: f64) -> Result<Self> {
        positive("nu", nu)?;
        Ok(Self::Chisquare { nu })
    }

    pub fn student_t(nu: f64) -> Result<Self> {
        positive("nu", nu)?;
        Ok(Self::StudentT { nu })
    }

    pub fn mixture(a: f64, p: f64) -> Result<Self> {
        finite("a", a)?;
        if !(p > 0.0 && p < 1.0) {
            return Err(domain(format!("mixture weight p must lie in (0, 1), got {p}")));
        }
        Ok(Self::Mixture { a, p })
    }

    /// Re-validates parameters (useful after constructing a variant directly).
    pub fn validated(self) -> Result<Self> {
        match self {
            Self::Normal { mu, sigma } => Self::normal(mu, sigma),
            Self::Lognormal { mu, sigma } => Self::lognormal(mu, sigma),
            Self::Gamma { a, b } => Self::gamma(a, b),
            Self::Beta { a, b } => Self::beta(a, b),
            Self::Rayleigh { nu } => Self::rayleigh(nu),
            Self::Chisquare { nu } => Self::chisquare(nu),
            Self::StudentT { nu } => Self::student_t(nu),
            Self::Mixture { a, p } => Self::mixture(a, p),
        }
    }

    pub fn id(&self) -> DistributionId {
        match self {
            Self::Normal { .. } => DistributionId::Normal,
            Self::Lognormal { .. } => DistributionId::Lognormal,
            Self::Gamma { .. } => DistributionId::Gamma,
            Self::Beta { .. } => DistributionId::Beta,
            Self::Rayleigh { .. } => DistributionId::Rayleigh,
            Self::Chisquare { .. } => DistributionId::Chisquare,
            Self::StudentT { .. } => DistributionId::StudentT,
            Self::Mixture { .. } => DistributionId::NormalBernoulliMixture,
        }
    }

    /// Closed support [lo, hi] (possibly infinite).
    pub fn support(&self) -> (f64, f64) {
        match self {
            Self::Normal { .. } | Self::StudentT { .. } | Self::Mixture { .. } => {
                (f64::NEG_INFINITY, f64::INFINITY)
            }
            Self::Lognormal { .. } | Self::Gamma { .. } | Self::Rayleigh { .. } | Self::Chisquare { .. } => {
                (0.0, f64::INFINITY)
            }
            Self::Beta { .. } => (0.0, 1.0),
        }
    }

    fn check_support(&self, x: f64) -> Result<()> {
        let (lo, hi) = self.support();
        if x.is_nan() || x < lo || x > hi {
            return Err(domain(format!("x = {x} lies outside the support [{lo}, {hi}] of {self}")));
        }
        Ok(())
    }

    /// Exact inverse CDF.
    pub fn quantile(&self, u: f64) -> Result<f64> {
        check_open_unit(u)?;
        match *self {
            Self::Normal { mu, sigma } => Ok(mu + sigma * normal_quantile(u)?),
            Self::Lognormal { mu, sigma } => Ok((mu + sigma * normal_quantile(u)?).exp()),
            Self::Gamma { a, b } => Ok(b * gamma_p_inv(a, u)?),
            Self::Chisquare { nu } => Ok(2.0 * gamma_p_inv(0.5 * nu, u)?),
            Self::Beta { a, b } => beta_inc_inv(a, b, u),
            Self::Rayleigh { nu } => Ok(nu * (-2.0 * (-u).ln_1p()).sqrt()),
            Self::StudentT { nu } => student_t_quantile(nu, u),
            Self::Mixture { .. } => Err(Error::Unsupported(
                "the normal-Bernoulli mixture has no closed-form quantile".into(),
            )),
        }
    }

    pub fn cdf(&self, x: f64) -> Result<f64> {
        self.check_support(x)?;
        Ok(match *self {
            Self::Normal { mu, sigma } => normal_cdf((x - mu) / sigma),
            Self::Lognormal { mu, sigma } => {
                if x == 0.0 {
                    0.0
                } else {
                    normal_cdf((x.ln() - mu) / sigma)
                }
            }
            Self::Gamma { a, b } => gamma_pq(a, x / b)?.0,
            Self::Chisquare { nu } => gamma_pq(0.5 * nu, 0.5 * x)?.0,
            Self::Beta { a, b } => beta_inc_pair(a, b, x)?.0,
            Self::Rayleigh { nu } => -(-0.5 * (x / nu).powi(2)).exp_m1(),
            Self::StudentT { nu } => student_t_cdf(nu, x)?,
            Self::Mixture { a, p } => (1.0 - p) * normal_cdf(x) + p * normal_cdf(x - a),
        })
    }

    pub fn pdf(&self, x: f64) -> Result<f64> {
        self.check_support(x)?;
        Ok(match *self {
            Self::Normal { mu, sigma } => normal_pdf((x - mu) / sigma) / sigma,
            Self::Lognormal { mu, sigma } => {
                if x == 0.0 {
                    0.0
                } else {
                    normal_pdf((x.ln() - mu) / sigma) / (x * sigma)
                }
            }
            Self::Gamma { a, b } => gamma_density(a, x / b) / b,
            Self::Chisquare { nu } => 0.5 * gamma_density(0.5 * nu, 0.5 * x),
            Self::Beta { a, b } => {
                if (x == 0.0 && a < 1.0) || (x == 1.0 && b < 1.0) {
                    f64::INFINITY
                } else if (x == 0.0 && a > 1.0) || (x == 1.0 && b > 1.0) {
                    0.0
                } else {
                    ((a - 1.0) * x.ln() + (b - 1.0) * (-x).ln_1p() - ln_beta(a, b)).exp()
                }
            }
            Self::Rayleigh { nu } => x / (nu * nu) * (-0.5 * (x / nu).powi(2)).exp(),
            Self::StudentT { nu } => {
                let ln_norm = ln_gamma_unchecked(0.5 * (nu + 1.0))
                    - ln_gamma_unchecked(0.5 * nu)
                    - 0.5 * (nu * PI).ln();
                (ln_norm - 0.5 * (nu + 1.0) * (x * x / nu).ln_1p()).exp()
            }
            Self::Mixture { a, p } => (1.0 - p) * normal_pdf(x) + p * normal_pdf(x - a),
        })
    }

    /// Seeded, deterministic variates.
    pub fn sample_seeded(&self, count: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.sample(count, &mut rng)
    }

    pub fn sample<R: Rng + ?Sized>(&self, count: usize, rng: &mut R) -> Vec<f64> {
        // parameters are validated at construction, so the rand_distr
        // constructors cannot fail here
        match *self {
            Self::Normal { mu, sigma } => draw(Normal::new(mu, sigma).expect("valid"), count, rng),
            Self::Lognormal { mu, sigma } => draw(LogNormal::new(mu, sigma).expect("valid"), count, rng),
            Self::Gamma { a, b } => draw(Gamma::new(a, b).expect("valid"), count, rng),
            Self::Chisquare { nu } => draw(ChiSquared::new(nu).expect("valid"), count, rng),
            Self::Beta { a, b } => draw(Beta::new(a, b).expect("valid"), count, rng),
            Self::StudentT { nu } => draw(StudentT::new(nu).expect("valid"), count, rng),
            Self::Rayleigh { nu } => (0..count)
                .map(|_| {
                    let u: f64 = rng.random();
                    nu * (-2.0 * (-u).ln_1p()).sqrt()
                })
                .collect(),
            Self::Mixture { a, p } => (0..count)
                .map(|_| {
                    let xc: f64 = rng.sample(StandardNormal);
                    let xd = if rng.random::<f64>() < p { 1.0 } else { 0.0 };
                    xc + a * xd
                })
                .collect(),
        }
    }
}

fn draw<D: Distribution<f64>, R: Rng + ?Sized>(d: D, count: usize, rng: &mut R) -> Vec<f64> {
    (0..count).map(|_| d.sample(rng)).collect()
}

fn gamma_density(a: f64, x: f64) -> f64 {
    if x == 0.0 {
        return match a {
            a if a < 1.0 => f64::INFINITY,
            a if a == 1.0 => 1.0,
            _ => 0.0,
        };
    }
    ((a - 1.0) * x.ln() - x - ln_gamma_unchecked(a)).exp()
}

fn student_t_cdf(nu: f64, t: f64) -> Result<f64> {
    if t.is_infinite() {
        return Ok(if t > 0.0 { 1.0 } else { 0.0 });
    }
    let t2 = t * t;
    // two-sided tail mass P(|T| > |t|) = I_{ν/(ν+t²)}(ν/2, ½)
    let tail = if t2 < nu {
        let y = t2 / (nu + t2);
        beta_inc_pair(0.5, 0.5 * nu, y)?.1
    } else {
        let x = nu / (nu + t2);
        beta_inc_pair(0.5 * nu, 0.5, x)?.0
    };
    Ok(if t < 0.0 { 0.5 * tail } else { 1.0 - 0.5 * tail })
}

fn student_t_quantile(nu: f64, u: f64) -> Result<f64> {
    if u == 0.5 {
        return Ok(0.0);
    }
    let (tail, sign) = if u < 0.5 { (2.0 * u, -1.0) } else { (2.0 * (1.0 - u), 1.0) };
    let t2 = if tail < 0.5 {
        let x = beta_inc_inv(0.5 * nu, 0.5, tail)?;
        nu * (1.0 - x) / x
    } else {
        // 1 − tail = I_y(½, ν/2) with y = t²/(ν+t²); stays accurate near the centre
        let y = beta_inc_complement_inv(0.5, 0.5 * nu, tail)?;
        nu * y / (1.0 - y)
    };
    Ok(sign * t2.sqrt())
}

impl fmt::Display for ReferenceDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Normal { mu, sigma } => write!(f, "normal(mu={mu},sigma={sigma})"),
            Self::Lognormal { mu, sigma } => write!(f, "lognormal(mu={mu},sigma={sigma})"),
            Self::Gamma { a, b } => write!(f, "gamma(a={a},b={b})"),
            Self::Beta { a, b } => write!(f, "beta(a={a},b={b})"),
            Self::Rayleigh { nu } => write!(f, "rayleigh(nu={nu})"),
            Self::Chisquare { nu } => write!(f, "chisquare(nu={nu})"),
            Self::StudentT { nu } => write!(f, "t(nu={nu})"),
            Self::Mixture { a, p } => write!(f, "mixture(a={a},p={p})"),
        }
    }
}

/// Parses `name(p1=v1,p2=v2)`, e.g. `gamma(a=10,b=1)`, `t(nu=5)`,
/// `mixture(a=2.4,p=0.5)`. Normal and lognormal default to (0, 1), gamma's
/// scale to 1 and the mixture weight to ½.
impl FromStr for ReferenceDistribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, args) = match s.find('(') {
            Some(open) => {
                let close = s
                    .rfind(')')
                    .filter(|&c| c == s.len() - 1 && c > open)
                    .ok_or_else(|| Error::Input(format!("unbalanced parentheses in '{s}'")))?;
                (&s[..open], &s[open + 1..close])
            }
            None => (s, ""),
        };
        let mut params: Vec<(String, f64)> = Vec::new();
        for part in args.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| Error::Input(format!("expected key=value, got '{part}'")))?;
            let key = key.trim().to_ascii_lowercase();
            let value: f64 = value
                .trim()
                .parse()
                .map_err(|_| Error::Input(format!("parameter {key} is not a number: '{}'", value.trim())))?;
            if params.iter().any(|(k, _)| *k == key) {
                return Err(Error::Input(format!("parameter {key} given twice")));
            }
            params.push((key, value));
        }
        let name = name.trim().to_ascii_lowercase();
        let mut take = Params { name: &name, params };
        let dist = match name.as_str() {
            "normal" | "norm" => Self::normal(take.get("mu", Some(0.0))?, take.get("sigma", Some(1.0))?),
            "lognormal" | "lognorm" => {
                Self::lognormal(take.get("mu", Some(0.0))?, take.get("sigma", Some(1.0))?)
            }
            "gamma" => Self::gamma(take.get("a", None)?, take.get("b", Some(1.0))?),
            "beta" => Self::beta(take.get("a", None)?, take.get("b", None)?),
            "rayleigh" => Self::rayleigh(take.get("nu", None)?),
            "chisquare" | "chi2" => Self::chisquare(take.get("nu", None)?),
            "t" | "student_t" | "studentt" => Self::student_t(take.get("nu", None)?),
            "mixture" => Self::mixture(take.get("a", None)?, take.get("p", Some(0.5))?),
            _ => return Err(Error::UnknownDistribution(name.clone())),
        }?;
        take.finish()?;
        Ok(dist)
    }
}

struct Params<'a> {
    name: &'a str,
    params: Vec<(String, f64)>,
}

impl Params<'_> {
    fn get(&mut self, key: &str, default: Option<f64>) -> Result<f64> {
        match self.params.iter().position(|(k, _)| k == key) {
            Some(i) => Ok(self.params.remove(i).1),
            None => default.ok_or_else(|| {
                Error::Input(format!("{} requires parameter {key}", self.name))
            }),
        }
    }

    fn finish(self) -> Result<()> {
        match self.params.first() {
            Some((k, _)) => Err(Error::Input(format!("{} has no parameter {k}", self.name))),
            None => Ok(()),
        }
    }
}
