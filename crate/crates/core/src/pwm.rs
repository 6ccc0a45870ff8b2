//! Probability-weighted moments: sample estimates, the Weibull moment matrix
//! and data fitting by moment matching.

use std::collections::HashMap;
use std::path::Path;
use std::sync::{Arc, Mutex, OnceLock};

use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::model::{MonotoneReport, PolynomialQuantileModel};
use crate::numerics::special::ln_gamma_unchecked;
use crate::numerics::{condition_estimate, gauss_legendre, solve_linear, CompensatedSum, DenseMatrix};
use crate::weibull::WeibullBase;

/// Relative agreement required between the two evaluations of a moment.
pub const MOMENT_TOLERANCE: f64 = 1e-8;
/// Largest relative residual accepted from the PWM solve.
pub const RESIDUAL_TOLERANCE: f64 = 1e-8;
/// Largest PWM order [`model_pwm`] will compute.
pub const MAX_MODEL_ORDER: usize = 50;

const QUADRATURE_ORDER: usize = 24;
const TRUNCATION: f64 = 50.0;
const GEOMETRIC_PANELS: i32 = 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PwmSource {
    Sample { m: usize },
    Model,
}

/// β_0..β_n of a dataset or a model.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PwmVector {
    pub order: usize,
    pub values: Vec<f64>,
    pub source: PwmSource,
}

/// Unbiased sample estimates of β_0..β_order.
pub fn sample_pwm(data: &[f64], order: usize) -> Result<PwmVector> {
    let m = data.len();
    if m <= order {
        return Err(Error::InsufficientData { needed: order + 1, got: m });
    }
    if let Some(pos) = data.iter().position(|x| !x.is_finite()) {
        return Err(Error::Input(format!("value #{} is not finite", pos + 1)));
    }
    let mut sorted = data.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(PwmVector {
        order,
        values: pwm_of_sorted(&sorted, order),
        source: PwmSource::Sample { m },
    })
}

fn pwm_of_sorted(sorted: &[f64], order: usize) -> Vec<f64> {
    let m = sorted.len();
    // weights[s-1] = Π_{j=1}^{r} (s−j)/(m−j), updated one r at a time
    let mut weights = vec![1.0; m];
    let mut out = Vec::with_capacity(order + 1);
    for r in 0..=order {
        if r > 0 {
            let denom = (m - r) as f64;
            for (idx, w) in weights.iter_mut().enumerate() {
                let s = idx + 1;
                *w = if s <= r { 0.0 } else { *w * (s - r) as f64 / denom };
            }
        }
        let sum: CompensatedSum = weights.iter().zip(sorted).map(|(w, x)| w * x).collect();
        out.push(sum.value() / m as f64);
    }
    out
}

fn binomial_row(r: usize) -> Vec<f64> {
    let mut row = vec![1.0; r + 1];
    for j in 1..=r {
        row[j] = row[j - 1] * (r + 1 - j) as f64 / j as f64;
        row[j] = row[j].round();
    }
    row
}

/// Closed form of M_{r,i} together with a bound on its rounding error.
fn closed_form_with_bound(base: WeibullBase, r: usize, i: usize) -> (f64, f64) {
    let s = i as f64 / base.k();
    let scale = base.lambda().powi(i as i32) * ln_gamma_unchecked(s + 1.0).exp();
    let mut sum = CompensatedSum::new();
    let mut magnitude = 0.0;
    for (j, c) in binomial_row(r).into_iter().enumerate() {
        let term = c * ((j + 1) as f64).powf(-(s + 1.0));
        magnitude += term;
        sum.add(if j % 2 == 0 { term } else { -term });
    }
    let value = scale * sum.value();
    let bound = 16.0 * f64::EPSILON * scale * magnitude + 4.0 * f64::EPSILON * value.abs();
    (value, bound)
}

/// λ^i Σ_j C(r,j)(−1)^j Γ(i/k+1)/(j+1)^{i/k+1}.
pub fn weibull_moment_closed_form(base: WeibullBase, r: usize, i: usize) -> f64 {
    closed_form_with_bound(base, r, i).0
}

/// λ^i ∫₀^50 t^{i/k}(1−e^{−t})^r e^{−t} dt by panelled Gauss-Legendre.
pub fn weibull_moment_quadrature(base: WeibullBase, r: usize, i: usize) -> f64 {
    static RULE: OnceLock<crate::numerics::QuadratureRule> = OnceLock::new();
    let rule = RULE.get_or_init(|| gauss_legendre(QUADRATURE_ORDER).expect("valid order"));
    let s = i as f64 / base.k();
    let f = |t: f64| {
        let body = if s == 0.0 { 1.0 } else { t.powf(s) };
        body * (-(-t).exp_m1()).powi(r as i32) * (-t).exp()
    };
    let mut sum = CompensatedSum::new();
    // geometric panels [2^-(j+1), 2^-j] towards the origin
    sum.add(rule.integrate(0.0, 2f64.powi(-GEOMETRIC_PANELS), f));
    for j in (0..GEOMETRIC_PANELS).rev() {
        sum.add(rule.integrate(2f64.powi(-(j + 1)), 2f64.powi(-j), f));
    }
    let mut a = 1.0;
    while a < TRUNCATION {
        sum.add(rule.integrate(a, a + 1.0, f));
        a += 1.0;
    }
    base.lambda().powi(i as i32) * sum.value()
}

/// M_{r,i} = ∫₀¹ z(u)^i u^r du, evaluated in closed form and by quadrature.
///
/// Fails with [`Error::Integrity`] when the two disagree by more than
/// [`MOMENT_TOLERANCE`] relative (widened by the closed form's own rounding
/// bound, which only matters for large r). Returns the quadrature value.
pub fn weibull_moment(base: WeibullBase, r: usize, i: usize) -> Result<f64> {
    let (closed_form, bound) = closed_form_with_bound(base, r, i);
    let quadrature = weibull_moment_quadrature(base, r, i);
    let ok = closed_form.is_finite()
        && quadrature.is_finite()
        && (closed_form - quadrature).abs() <= MOMENT_TOLERANCE * quadrature.abs() + bound;
    if !ok {
        return Err(Error::Integrity { r, i, closed_form, quadrature });
    }
    Ok(if i == 0 { 1.0 / (r + 1) as f64 } else { quadrature })
}

/// The (n+1)×(n+1) matrix of M_{r,i}, row r and column i.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentMatrix {
    base: WeibullBase,
    degree: usize,
    entries: DenseMatrix,
    condition_estimate: f64,
}

impl MomentMatrix {
    fn build(base: WeibullBase, degree: usize) -> Result<Self> {
        let n = degree + 1;
        let mut data = Vec::with_capacity(n * n);
        for r in 0..n {
            for i in 0..n {
                data.push(weibull_moment(base, r, i)?);
            }
        }
        let entries = DenseMatrix::new(n, n, data)?;
        let condition_estimate = condition_estimate(&entries).unwrap_or(f64::INFINITY);
        Ok(Self { base, degree, entries, condition_estimate })
    }

    pub fn base(&self) -> WeibullBase {
        self.base
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn get(&self, r: usize, i: usize) -> f64 {
        self.entries.get(r, i)
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.entries
    }

    pub fn condition_estimate(&self) -> f64 {
        self.condition_estimate
    }
}

type CacheKey = (u64, u64, usize);
type CacheSlot = Arc<OnceLock<Result<Arc<MomentMatrix>>>>;

fn cache() -> &'static Mutex<HashMap<CacheKey, CacheSlot>> {
    static CACHE: OnceLock<Mutex<HashMap<CacheKey, CacheSlot>>> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

/// Moment matrix for `base` and `degree`, built at most once per process.
pub fn moment_matrix(base: WeibullBase, degree: usize) -> Result<Arc<MomentMatrix>> {
    let key = (base.lambda().to_bits(), base.k().to_bits(), degree);
    let slot = {
        let mut map = cache().lock().unwrap_or_else(|e| e.into_inner());
        Arc::clone(map.entry(key).or_default())
    };
    slot.get_or_init(|| MomentMatrix::build(base, degree).map(Arc::new)).clone()
}

/// Diagnostics of a PWM fit, serialized as the data-fit JSON report.
#[derive(Debug, Clone, Serialize)]
pub struct PwmDiagnostics {
    pub degree: usize,
    pub sample_size: usize,
    pub condition_estimate: f64,
    pub residual: f64,
    pub residual_tolerance: f64,
    pub sample_pwm: PwmVector,
    pub monotone: MonotoneReport,
}

#[derive(Debug, Clone)]
pub struct PwmFit {
    pub model: PolynomialQuantileModel,
    pub diagnostics: PwmDiagnostics,
}

/// Solves M·a = β for the coefficients of a degree-`degree` model whose
/// PWMs match those of `data`.
pub fn fit_pwm(data: &[f64], base: WeibullBase, degree: usize) -> Result<PwmFit> {
    let pwm = sample_pwm(data, degree)?;
    if degree > 0 && data.iter().all(|x| *x == data[0]) {
        return Err(Error::DegenerateData(format!("all {} values equal {}", data.len(), data[0])));
    }
    let moments = moment_matrix(base, degree)?;
    let solved = solve_linear(moments.matrix(), &pwm.values)?;
    let scale = pwm.values.iter().map(|b| b * b).sum::<f64>().sqrt();
    let absolute = moments.matrix().residual_norm(&solved.solution, &pwm.values);
    let residual = if scale > 0.0 { absolute / scale } else { absolute };
    if !(residual <= RESIDUAL_TOLERANCE) {
        return Err(Error::Conditioning {
            degree,
            residual,
            tolerance: RESIDUAL_TOLERANCE,
            condition: solved.condition_estimate,
        });
    }
    let model = PolynomialQuantileModel::with_default_range(base, solved.solution)?;
    let monotone = model.monotone_report().clone();
    Ok(PwmFit {
        model,
        diagnostics: PwmDiagnostics {
            degree,
            sample_size: data.len(),
            condition_estimate: solved.condition_estimate,
            residual,
            residual_tolerance: RESIDUAL_TOLERANCE,
            sample_pwm: pwm,
            monotone,
        },
    })
}

/// β_0..β_order of a model: Σᵢ aᵢ M_{r,i}.
pub fn model_pwm(model: &PolynomialQuantileModel, order: usize) -> Result<PwmVector> {
    if order > MAX_MODEL_ORDER {
        return Err(domain(format!("PWM order {order} exceeds the cap of {MAX_MODEL_ORDER}")));
    }
    let moments = moment_matrix(model.base(), order.max(model.degree()))?;
    let values = (0..=order)
        .map(|r| {
            model
                .coeffs()
                .iter()
                .enumerate()
                .map(|(i, a)| a * moments.get(r, i))
                .collect::<CompensatedSum>()
                .value()
        })
        .collect();
    Ok(PwmVector { order, values, source: PwmSource::Model })
}

/// Parses sample data: one value per line, `#` comments, blank lines
/// ignored. A single-column CSV with an optional header line is accepted.
pub fn parse_samples(text: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    let mut seen_data = false;
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() > 1 && !(fields.len() == 2 && fields[1].is_empty()) {
            return Err(Error::Input(format!(
                "line {}: expected a single column, found {}",
                idx + 1,
                fields.len()
            )));
        }
        let field = fields[0].trim_matches('"');
        match field.parse::<f64>() {
            Ok(x) if x.is_finite() => out.push(x),
            Ok(_) => return Err(Error::Input(format!("line {}: value is not finite", idx + 1))),
            Err(_) if !seen_data => {}
            Err(_) => return Err(Error::Input(format!("line {}: cannot parse '{field}'", idx + 1))),
        }
        seen_data = true;
    }
    Ok(out)
}

pub fn read_samples(path: &Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Input(format!("cannot read {}: {e}", path.display())))?;
    parse_samples(&text)
}
