//! Polynomial quantile model x = Σ aᵢ zⁱ with z = λ(−ln(1−u))^{1/k}.

use std::fmt::Write as _;
use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::weibull::{neg_log1m, WeibullBase};

/// Lower end of the default certified probability range.
pub const DEFAULT_U_LO: f64 = 1e-4;
/// Upper end of the default certified probability range.
pub const DEFAULT_U_HI: f64 = 1.0 - 1e-4;

/// Grid used for the cached monotonicity check guarding inversion and sampling.
pub const MONOTONE_GRID: usize = 10_000;

const BISECTION_CAP: usize = 200;

/// Probability interval [lo, hi] ⊂ (0, 1) over which a model is certified.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityRange {
    lo: f64,
    hi: f64,
}

impl Default for ProbabilityRange {
    fn default() -> Self {
        Self {
            lo: DEFAULT_U_LO,
            hi: DEFAULT_U_HI,
        }
    }
}

impl ProbabilityRange {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo > 0.0 && hi < 1.0 && lo < hi) {
            return Err(domain(format!(
                "valid range must satisfy 0 < lo < hi < 1, got [{lo}, {hi}]"
            )));
        }
        Ok(Self { lo, hi })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn contains(&self, u: f64) -> bool {
        u >= self.lo && u <= self.hi
    }

    /// `count` evenly spaced points, both endpoints included.
    pub(crate) fn grid(&self, count: usize) -> Vec<f64> {
        even_grid(count, self.lo, self.hi)
    }
}

pub(crate) fn even_grid(count: usize, lo: f64, hi: f64) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    let step = (hi - lo) / (count - 1) as f64;
    (0..count)
        .map(|j| if j + 1 == count { hi } else { lo + j as f64 * step })
        .collect()
}

/// A quantile value together with whether u lay inside the certified range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuantileValue {
    pub value: f64,
    pub in_range: bool,
}

/// Result of inverting the model: the probability and whether it was clamped
/// to an end of the certified range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CdfValue {
    pub u: f64,
    pub clamped: bool,
}

/// Sub-interval [lo, hi] of u where the quantile derivative is not positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonotoneReport {
    pub grid_size: usize,
    pub violating_points: usize,
    pub violations: Vec<Interval>,
}

impl MonotoneReport {
    pub fn is_monotone(&self) -> bool {
        self.violations.is_empty()
    }

    fn as_error(&self) -> Option<Error> {
        self.violations.first().map(|v| Error::NonMonotone { lo: v.lo, hi: v.hi })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ModelFile {
    lambda: f64,
    k: f64,
    degree: usize,
    coeffs: Vec<f64>,
    u_lo: f64,
    u_hi: f64,
}

/// Closed-form quantile function over a Weibull basis.
#[derive(Debug, Clone)]
pub struct PolynomialQuantileModel {
    base: WeibullBase,
    coeffs: Vec<f64>,
    range: ProbabilityRange,
    monotone: OnceLock<MonotoneReport>,
}

impl PartialEq for PolynomialQuantileModel {
    fn eq(&self, other: &Self) -> bool {
        self.base == other.base && self.coeffs == other.coeffs && self.range == other.range
    }
}

impl PolynomialQuantileModel {
    pub fn new(base: WeibullBase, coeffs: Vec<f64>, range: ProbabilityRange) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(domain("a model needs at least one coefficient"));
        }
        if let Some(i) = coeffs.iter().position(|a| !a.is_finite()) {
            return Err(domain(format!("coefficient a_{i} is not finite")));
        }
        Ok(Self {
            base,
            coeffs,
            range,
            monotone: OnceLock::new(),
        })
    }

    pub fn with_default_range(base: WeibullBase, coeffs: Vec<f64>) -> Result<Self> {
        Self::new(base, coeffs, ProbabilityRange::default())
    }

    pub fn base(&self) -> WeibullBase {
        self.base
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn valid_range(&self) -> ProbabilityRange {
        self.range
    }

    fn check_probability(u: f64) -> Result<()> {
        if !(0.0..1.0).contains(&u) {
            return Err(domain(format!("probability must lie in [0, 1), got {u}")));
        }
        Ok(())
    }

    fn horner(&self, z: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, a| acc * z + a)
    }

    /// Quantile with an out-of-range flag.
    pub fn evaluate(&self, u: f64) -> Result<QuantileValue> {
        Self::check_probability(u)?;
        Ok(QuantileValue {
            value: self.horner(self.base.quantile_unchecked(u)),
            in_range: self.range.contains(u),
        })
    }

    /// F⁻¹(u). Values outside the certified range are computed but not
    /// flagged; use [`evaluate`](Self::evaluate) when the flag matters.
    pub fn quantile(&self, u: f64) -> Result<f64> {
        self.evaluate(u).map(|q| q.value)
    }

    /// Σ aᵢ zⁱ with explicit powers, for cross-checking the Horner path.
    pub fn quantile_power_sum(&self, u: f64) -> Result<f64> {
        Self::check_probability(u)?;
        let z = self.base.quantile_unchecked(u);
        Ok(self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, a)| a * z.powi(i as i32))
            .sum())
    }

    /// dF⁻¹/du = Σ_{i≥1} aᵢ λ^i (i/k) t^{i/k−1} / (1−u), t = −ln(1−u).
    pub fn quantile_derivative(&self, u: f64) -> Result<f64> {
        Self::check_probability(u)?;
        if self.degree() == 0 {
            return Ok(0.0);
        }
        let k = self.base.k();
        let lambda = self.base.lambda();
        if u == 0.0 {
            let singular = self
                .coeffs
                .iter()
                .enumerate()
                .skip(1)
                .any(|(i, a)| *a != 0.0 && (i as f64) < k);
            if singular {
                return Err(Error::InfiniteDerivative { u });
            }
            // only the i = k term survives at t = 0
            return Ok(self
                .coeffs
                .iter()
                .enumerate()
                .skip(1)
                .filter(|(i, _)| *i as f64 == k)
                .map(|(i, a)| a * lambda.powi(i as i32) * (i as f64 / k))
                .sum());
        }
        let t = neg_log1m(u);
        let z = lambda * t.powf(1.0 / k);
        let dz_du = lambda / k * t.powf(1.0 / k - 1.0) / (1.0 - u);
        let n = self.degree();
        let mut dq_dz = 0.0;
        for i in (1..=n).rev() {
            dq_dz = dq_dz * z + i as f64 * self.coeffs[i];
        }
        Ok(dq_dz * dz_du)
    }

    /// Scans `grid_size` evenly spaced u in the valid range for points where
    /// the quantile derivative is not positive.
    pub fn check_monotone(&self, grid_size: usize) -> Result<MonotoneReport> {
        if grid_size < 2 {
            return Err(domain(format!("monotonicity grid needs >= 2 points, got {grid_size}")));
        }
        let grid = self.range.grid(grid_size);
        let mut violations = Vec::new();
        let mut violating_points = 0;
        let mut run: Option<Interval> = None;
        for &u in &grid {
            let d = self.quantile_derivative(u)?;
            if !(d > 0.0) {
                violating_points += 1;
                run = Some(match run {
                    Some(iv) => Interval { lo: iv.lo, hi: u },
                    None => Interval { lo: u, hi: u },
                });
            } else if let Some(iv) = run.take() {
                violations.push(iv);
            }
        }
        if let Some(iv) = run {
            violations.push(iv);
        }
        Ok(MonotoneReport {
            grid_size,
            violating_points,
            violations,
        })
    }

    /// Monotonicity over the valid range at [`MONOTONE_GRID`] points, cached.
    pub fn monotone_report(&self) -> &MonotoneReport {
        self.monotone.get_or_init(|| {
            self.check_monotone(MONOTONE_GRID)
                .expect("grid points lie inside (0, 1)")
        })
    }

    fn ensure_monotone(&self) -> Result<()> {
        match self.monotone_report().as_error() {
            Some(e) => Err(e),
            None => Ok(()),
        }
    }

    /// Inverts the model by bisection over the valid range. Values of x beyond
    /// the model's range clamp to the nearest end and are flagged.
    pub fn cdf_at(&self, x: f64) -> Result<CdfValue> {
        if x.is_nan() {
            return Err(domain("cannot invert at NaN"));
        }
        self.ensure_monotone()?;
        let (u_lo, u_hi) = (self.range.lo, self.range.hi);
        let q_lo = self.horner(self.base.quantile_unchecked(u_lo));
        let q_hi = self.horner(self.base.quantile_unchecked(u_hi));
        if x <= q_lo {
            return Ok(CdfValue {
                u: u_lo,
                clamped: x < q_lo,
            });
        }
        if x >= q_hi {
            return Ok(CdfValue {
                u: u_hi,
                clamped: x > q_hi,
            });
        }
        let (mut lo, mut hi) = (u_lo, u_hi);
        for _ in 0..BISECTION_CAP {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.horner(self.base.quantile_unchecked(mid)) < x {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(CdfValue {
            u: 0.5 * (lo + hi),
            clamped: false,
        })
    }

    /// Density 1 / (dF⁻¹/du) at the u solving F⁻¹(u) = x.
    pub fn pdf_at(&self, x: f64) -> Result<f64> {
        self.ensure_monotone()?;
        let q_lo = self.quantile(self.range.lo)?;
        let q_hi = self.quantile(self.range.hi)?;
        if !(x >= q_lo && x <= q_hi) {
            return Err(domain(format!(
                "x = {x} lies outside the model range [{q_lo}, {q_hi}]"
            )));
        }
        let u = self.cdf_at(x)?.u;
        Ok(1.0 / self.quantile_derivative(u)?)
    }

    /// Inverse-transform variates with u drawn uniformly on the valid range.
    pub fn sample<R: Rng + ?Sized>(&self, count: usize, rng: &mut R) -> Result<Vec<f64>> {
        self.ensure_monotone()?;
        let (lo, hi) = (self.range.lo, self.range.hi);
        Ok((0..count)
            .map(|_| {
                let u = lo + (hi - lo) * rng.random::<f64>();
                self.horner(self.base.quantile_unchecked(u))
            })
            .collect())
    }

    /// [`sample`](Self::sample) with a ChaCha8 generator seeded from `seed`.
    pub fn sample_seeded(&self, count: usize, seed: u64) -> Result<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.sample(count, &mut rng)
    }

    /// JSON document `{lambda, k, degree, coeffs, u_lo, u_hi}` with every
    /// real written to 17 significant digits.
    pub fn to_json(&self) -> String {
        let mut s = String::from("{\n");
        let _ = writeln!(s, "  \"lambda\": {},", fmt17(self.base.lambda()));
        let _ = writeln!(s, "  \"k\": {},", fmt17(self.base.k()));
        let _ = writeln!(s, "  \"degree\": {},", self.degree());
        s.push_str("  \"coeffs\": [\n");
        for (i, a) in self.coeffs.iter().enumerate() {
            let sep = if i + 1 == self.coeffs.len() { "" } else { "," };
            let _ = writeln!(s, "    {}{sep}", fmt17(*a));
        }
        s.push_str("  ],\n");
        let _ = writeln!(s, "  \"u_lo\": {},", fmt17(self.range.lo));
        let _ = writeln!(s, "  \"u_hi\": {}", fmt17(self.range.hi));
        s.push_str("}\n");
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text)
            .map_err(|e| Error::Input(format!("malformed model JSON: {e}")))?;
        if file.coeffs.len() != file.degree + 1 {
            return Err(Error::Input(format!(
                "model declares degree {} but lists {} coefficients",
                file.degree,
                file.coeffs.len()
            )));
        }
        let base = WeibullBase::new(file.lambda, file.k)?;
        let range = ProbabilityRange::new(file.u_lo, file.u_hi)?;
        Self::new(base, file.coeffs, range)
    }
}

/// Scientific notation with 17 significant digits (valid JSON number syntax).
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}
