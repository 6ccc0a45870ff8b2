//! Percentile matching: least-squares construction of a quantile model from
//! a target quantile function, and the relative-error audit of the result.

use std::io::{self, Write};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::model::{even_grid, fmt17, PolynomialQuantileModel, ProbabilityRange, DEFAULT_U_HI, DEFAULT_U_LO};
use crate::numerics::{solve_least_squares, DenseMatrix};
use crate::reference::ReferenceDistribution;
use crate::weibull::{powers, WeibullBase};

/// Targets with |x| below this are scored by absolute error in the audit.
pub const ZERO_TOLERANCE: f64 = 1e-8;

pub const DEFAULT_DEGREE: usize = 20;
pub const DEFAULT_GRID: usize = 21;
pub const STUDENT_T_GRID: usize = 141;
pub const DEFAULT_AUDIT_GRID: usize = 10_000;

/// `count` probabilities evenly spaced over [lo, hi], endpoints included.
pub fn pm_grid(count: usize, lo: f64, hi: f64) -> Result<Vec<f64>> {
    if count < 2 {
        return Err(domain(format!("grid needs at least 2 points, got {count}")));
    }
    ProbabilityRange::new(lo, hi)?;
    Ok(even_grid(count, lo, hi))
}

/// A percentile-matched model with its solver diagnostics.
#[derive(Debug, Clone)]
pub struct PmFit {
    pub model: PolynomialQuantileModel,
    pub residual_norm: f64,
    pub condition_estimate: f64,
}

/// Fits x = Σ aᵢ z(u)ⁱ through the points (u_k, target(u_k)) by least
/// squares; with `degree + 1` grid points this is interpolation.
pub fn fit_pm<F>(target: F, base: WeibullBase, degree: usize, grid: &[f64]) -> Result<PmFit>
where
    F: Fn(f64) -> f64,
{
    if grid.len() < degree + 1 {
        return Err(domain(format!(
            "degree {degree} needs at least {} grid points, got {}",
            degree + 1,
            grid.len()
        )));
    }
    if let Some(u) = grid.iter().find(|u| !(**u > 0.0 && **u < 1.0)) {
        return Err(domain(format!("grid point {u} lies outside (0, 1)")));
    }
    let lo = grid.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = grid.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let range = ProbabilityRange::new(lo, hi)?;

    let mut rhs = Vec::with_capacity(grid.len());
    for &u in grid {
        let x = target(u);
        if !x.is_finite() {
            return Err(Error::Input(format!("target quantile is not finite at u = {u}")));
        }
        rhs.push(x);
    }
    let mut data = Vec::with_capacity(grid.len() * (degree + 1));
    for &u in grid {
        data.extend(powers(base.quantile_unchecked(u), degree));
    }
    let matrix = DenseMatrix::new(grid.len(), degree + 1, data)?;
    let ls = solve_least_squares(&matrix, &rhs)?;
    Ok(PmFit {
        model: PolynomialQuantileModel::new(base, ls.solution, range)?,
        residual_norm: ls.residual_norm,
        condition_estimate: ls.condition_estimate,
    })
}

/// Average, minimum and maximum of the relative errors (percent) over the
/// points scored relatively.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorSummary {
    pub average: f64,
    pub min: f64,
    pub max: f64,
    pub scored: usize,
    pub skipped: usize,
    /// Largest absolute error among the near-zero targets.
    pub max_abs_err_skipped: f64,
}

/// Per-point comparison of model and target quantiles.
///
/// For targets with |x| < [`ZERO_TOLERANCE`] the `rel_err_pct` entry holds
/// 100·|x* − x| instead of a relative error, and the point is excluded from
/// the summary statistics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitReport {
    pub grid: Vec<f64>,
    pub target: Vec<f64>,
    pub model: Vec<f64>,
    pub rel_err_pct: Vec<f64>,
    pub absolute: Vec<bool>,
    pub summary: ErrorSummary,
}

impl FitReport {
    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// CSV with header `u,x_target,x_model,rel_err_pct`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "u,x_target,x_model,rel_err_pct")?;
        for i in 0..self.len() {
            writeln!(
                out,
                "{},{},{},{}",
                fmt17(self.grid[i]),
                fmt17(self.target[i]),
                fmt17(self.model[i]),
                fmt17(self.rel_err_pct[i])
            )?;
        }
        Ok(())
    }
}

/// Scores `model` against `target` on `grid_count` evenly spaced points of
/// the model's valid range.
pub fn audit<F>(model: &PolynomialQuantileModel, target: F, grid_count: usize) -> Result<FitReport>
where
    F: Fn(f64) -> f64 + Sync,
{
    let range = model.valid_range();
    let grid = pm_grid(grid_count, range.lo(), range.hi())?;
    let scored: Vec<(f64, f64)> = grid
        .par_iter()
        .map(|&u| (target(u), model.quantile(u).unwrap_or(f64::NAN)))
        .collect();
    if let Some(i) = scored.iter().position(|(x, _)| !x.is_finite()) {
        return Err(Error::Input(format!("target quantile is not finite at u = {}", grid[i])));
    }

    let mut target_vals = Vec::with_capacity(grid.len());
    let mut model_vals = Vec::with_capacity(grid.len());
    let mut errs = Vec::with_capacity(grid.len());
    let mut absolute = Vec::with_capacity(grid.len());
    let (mut sum, mut min, mut max) = (0.0, f64::INFINITY, 0.0_f64);
    let (mut n_scored, mut n_skipped, mut max_abs) = (0usize, 0usize, 0.0_f64);
    for (x, xm) in scored {
        let diff = (xm - x).abs();
        if x.abs() < ZERO_TOLERANCE {
            n_skipped += 1;
            max_abs = max_abs.max(diff);
            errs.push(100.0 * diff);
            absolute.push(true);
        } else {
            let e = 100.0 * diff / x.abs();
            n_scored += 1;
            sum += e;
            min = min.min(e);
            max = max.max(e);
            errs.push(e);
            absolute.push(false);
        }
        target_vals.push(x);
        model_vals.push(xm);
    }
    let summary = if n_scored == 0 {
        ErrorSummary {
            average: f64::NAN,
            min: f64::NAN,
            max: f64::NAN,
            scored: 0,
            skipped: n_skipped,
            max_abs_err_skipped: max_abs,
        }
    } else {
        ErrorSummary {
            average: sum / n_scored as f64,
            min,
            max,
            scored: n_scored,
            skipped: n_skipped,
            max_abs_err_skipped: max_abs,
        }
    };
    Ok(FitReport {
        grid,
        target: target_vals,
        model: model_vals,
        rel_err_pct: errs,
        absolute,
        summary,
    })
}

/// Knobs of the percentile-matching procedure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FitSettings {
    pub base: WeibullBase,
    pub degree: usize,
    pub grid_count: usize,
    pub audit_count: usize,
    pub range_lo: f64,
    pub range_hi: f64,
}

impl Default for FitSettings {
    /// W(1, 4), degree 20, 21 grid points over [1e-4, 1 − 1e-4], 10⁴ audit points.
    fn default() -> Self {
        Self {
            base: WeibullBase::default(),
            degree: DEFAULT_DEGREE,
            grid_count: DEFAULT_GRID,
            audit_count: DEFAULT_AUDIT_GRID,
            range_lo: DEFAULT_U_LO,
            range_hi: DEFAULT_U_HI,
        }
    }
}

impl FitSettings {
    /// Defaults for a distribution: Student's t switches to W(1, 6) with 141
    /// grid points.
    pub fn for_distribution(dist: &ReferenceDistribution) -> Self {
        match dist {
            ReferenceDistribution::StudentT { .. } => Self {
                base: WeibullBase::student_t_default(),
                grid_count: STUDENT_T_GRID,
                ..Self::default()
            },
            _ => Self::default(),
        }
    }
}

/// Outcome of fitting and auditing a named distribution.
#[derive(Debug, Clone)]
pub struct NamedFit {
    pub distribution: ReferenceDistribution,
    pub settings: FitSettings,
    pub model: PolynomialQuantileModel,
    pub residual_norm: f64,
    pub condition_estimate: f64,
    pub report: FitReport,
}

/// Percentile-matched model of `dist` with the default settings, plus its audit.
pub fn fit_named(dist: &ReferenceDistribution) -> Result<NamedFit> {
    fit_named_with(dist, FitSettings::for_distribution(dist))
}

pub fn fit_named_with(dist: &ReferenceDistribution, settings: FitSettings) -> Result<NamedFit> {
    let dist = dist.validated()?;
    if let ReferenceDistribution::Mixture { .. } = dist {
        return Err(Error::Unsupported(
            "percentile matching needs a closed-form quantile; the mixture has none".into(),
        ));
    }
    let grid = pm_grid(settings.grid_count, settings.range_lo, settings.range_hi)?;
    let target = |u: f64| dist.quantile(u).unwrap_or(f64::NAN);
    let fit = fit_pm(target, settings.base, settings.degree, &grid)?;
    let report = audit(&fit.model, target, settings.audit_count)?;
    Ok(NamedFit {
        distribution: dist,
        settings,
        model: fit.model,
        residual_norm: fit.residual_norm,
        condition_estimate: fit.condition_estimate,
        report,
    })
}
