//! The basis-generating Weibull distribution W(λ, k).

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Weibull distribution with scale λ and shape k used to generate the
/// polynomial basis z(u)^i.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeibullBase {
    lambda: f64,
    k: f64,
}

impl Default for WeibullBase {
    /// W(1, 4).
    fn default() -> Self {
        Self { lambda: 1.0, k: 4.0 }
    }
}

/// −ln(1 − u), accurate for u near 0.
pub(crate) fn neg_log1m(u: f64) -> f64 {
    -(-u).ln_1p()
}

fn check_u(u: f64) -> Result<()> {
    if !(0.0..1.0).contains(&u) {
        return Err(domain(format!("probability must lie in [0, 1), got {u}")));
    }
    Ok(())
}

fn check_z(z: f64) -> Result<()> {
    if !(z >= 0.0) {
        return Err(domain(format!("Weibull variate must be >= 0, got {z}")));
    }
    Ok(())
}

impl WeibullBase {
    pub fn new(lambda: f64, k: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(domain(format!("Weibull scale must be finite and > 0, got {lambda}")));
        }
        if !(k.is_finite() && k > 0.0) {
            return Err(domain(format!("Weibull shape must be finite and > 0, got {k}")));
        }
        Ok(Self { lambda, k })
    }

    /// W(1, 6), the base used for Student's t targets.
    pub fn student_t_default() -> Self {
        Self { lambda: 1.0, k: 6.0 }
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    /// z = λ(−ln(1 − u))^{1/k}.
    pub fn quantile(&self, u: f64) -> Result<f64> {
        check_u(u)?;
        Ok(self.quantile_unchecked(u))
    }

    pub(crate) fn quantile_unchecked(&self, u: f64) -> f64 {
        self.lambda * neg_log1m(u).powf(1.0 / self.k)
    }

    pub fn cdf(&self, z: f64) -> Result<f64> {
        check_z(z)?;
        Ok(-(-(z / self.lambda).powf(self.k)).exp_m1())
    }

    pub fn pdf(&self, z: f64) -> Result<f64> {
        check_z(z)?;
        let s = z / self.lambda;
        if z == 0.0 {
            // limit of (k/λ) s^{k-1}
            return Ok(match self.k {
                k if k < 1.0 => f64::INFINITY,
                k if k == 1.0 => 1.0 / self.lambda,
                _ => 0.0,
            });
        }
        Ok(self.k / self.lambda * s.powf(self.k - 1.0) * (-s.powf(self.k)).exp())
    }

    /// (1, z, z², …, zⁿ) at z = quantile(u).
    pub fn basis_vector(&self, u: f64, degree: usize) -> Result<Vec<f64>> {
        let z = self.quantile(u)?;
        Ok(powers(z, degree))
    }
}

pub(crate) fn powers(z: f64, degree: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(degree + 1);
    let mut p = 1.0;
    out.push(p);
    for _ in 0..degree {
        p *= z;
        out.push(p);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::E;

    #[test]
    fn quantile_known_points() {
        let w = WeibullBase::default();
        assert!((w.quantile(1.0 - E.recip()).unwrap() - 1.0).abs() < 1e-15);
        // 1 − e^{-16} is only representable to ~1e-16 absolute, which moves z by ~5e-10
        assert!((w.quantile(1.0 - (-16f64).exp()).unwrap() - 2.0).abs() < 1e-9);
        assert_eq!(w.quantile(0.0).unwrap(), 0.0);
        // mpmath: (-log1p(-1e-4))**0.25 for the double nearest 1e-4
        let z = w.quantile(1e-4).unwrap();
        assert!((z - 0.10000125005989964).abs() < 1e-16, "{z}");
    }

    #[test]
    fn quantile_domain() {
        let w = WeibullBase::default();
        assert!(w.quantile(1.0).is_err());
        assert!(w.quantile(-0.1).is_err());
        assert!(w.quantile(f64::NAN).is_err());
    }

    #[test]
    fn parameter_validation() {
        assert!(WeibullBase::new(0.0, 4.0).is_err());
        assert!(WeibullBase::new(1.0, -1.0).is_err());
        assert!(WeibullBase::new(1.0, f64::INFINITY).is_err());
        assert!(WeibullBase::new(2.5, 3.0).is_ok());
    }

    #[test]
    fn cdf_and_pdf_values() {
        let w = WeibullBase::default();
        assert_eq!(w.cdf(0.0).unwrap(), 0.0);
        assert!((w.cdf(1.0).unwrap() - (1.0 - E.recip())).abs() < 1e-16);
        assert_eq!(w.pdf(0.0).unwrap(), 0.0);
        let expo = WeibullBase::new(1.0, 1.0).unwrap();
        assert_eq!(expo.pdf(0.0).unwrap(), 1.0);
        assert!(w.cdf(-1.0).is_err());
        assert!(w.pdf(-1.0).is_err());
        assert!((w.pdf(1.0).unwrap() - 4.0 / E).abs() < 1e-15);
    }

    #[test]
    fn pdf_integrates_to_one() {
        let rule = crate::numerics::gauss_legendre(64).unwrap();
        for base in [WeibullBase::default(), WeibullBase::student_t_default(), WeibullBase::new(2.0, 2.0).unwrap()] {
            // the mass beyond 8λ is below e^{-8^2} for every base tested
            let mut total = 0.0;
            let edges: Vec<f64> = (0..=32).map(|j| base.lambda() * 8.0 * j as f64 / 32.0).collect();
            for p in edges.windows(2) {
                total += rule.integrate(p[0], p[1], |z| base.pdf(z).unwrap());
            }
            assert!((total - 1.0).abs() < 1e-10, "{base:?}: {total}");
        }
    }

    #[test]
    fn basis_vectors() {
        let w = WeibullBase::default();
        assert_eq!(w.basis_vector(0.3, 0).unwrap(), vec![1.0]);
        let v = w.basis_vector(1.0 - E.recip(), 3).unwrap();
        for x in v {
            assert!((x - 1.0).abs() < 1e-15);
        }
        let v = w.basis_vector(1.0 - (-16f64).exp(), 2).unwrap();
        assert!(v[0] == 1.0 && (v[1] - 2.0).abs() < 1e-9 && (v[2] - 4.0).abs() < 4e-9);
    }

    proptest! {
        #[test]
        fn quantile_strictly_increasing(a in 0.0f64..0.999999, b in 0.0f64..0.999999) {
            prop_assume!((a - b).abs() > 1e-9);
            let w = WeibullBase::default();
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assert!(w.quantile(lo).unwrap() < w.quantile(hi).unwrap());
        }

        #[test]
        fn cdf_inverts_quantile(u in 0.0f64..(1.0 - 1e-12), k in 0.5f64..8.0, lambda in 0.1f64..10.0) {
            let w = WeibullBase::new(lambda, k).unwrap();
            let back = w.cdf(w.quantile(u).unwrap()).unwrap();
            prop_assert!((back - u).abs() <= 1e-12);
        }

        #[test]
        fn basis_components_are_powers(u in 0.0f64..0.99999) {
            let w = WeibullBase::default();
            let v = w.basis_vector(u, 20).unwrap();
            prop_assert_eq!(v[0], 1.0);
            for (i, x) in v.iter().enumerate() {
                let want = v[1].powi(i as i32);
                prop_assert!((x - want).abs() <= 1e-12 * want.abs().max(f64::MIN_POSITIVE));
            }
        }
    }
}
