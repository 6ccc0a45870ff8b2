//! Closed-form polynomial quantile functions over a Weibull basis.
//!
//! A model is x = Σ aᵢ zⁱ with z = λ(−ln(1−u))^{1/k}. Coefficients come
//! either from percentile matching against a known quantile function
//! ([`percentile`]) or from probability-weighted moments of raw data
//! ([`pwm`]). The fitted model then provides quantiles, CDF and PDF
//! values, and inverse-transform sampling.

pub mod error;
pub mod model;
pub mod numerics;
pub mod percentile;
pub mod pwm;
pub mod reference;
pub mod weibull;

pub use error::{Error, Result};
pub use model::{MonotoneReport, PolynomialQuantileModel, ProbabilityRange};
pub use percentile::{audit, fit_named, fit_named_with, fit_pm, pm_grid, FitReport, FitSettings, NamedFit, PmFit};
pub use pwm::{fit_pwm, model_pwm, moment_matrix, sample_pwm, weibull_moment, MomentMatrix, PwmFit, PwmVector};
pub use reference::ReferenceDistribution;
pub use weibull::WeibullBase;
