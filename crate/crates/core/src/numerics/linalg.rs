use serde::Serialize;

use super::dot_compensated;
use crate::error::{domain, Error, Result};

/// Dense real matrix, row-major.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(domain(format!("matrix must be non-empty, got {rows}x{cols}")));
        }
        if data.len() != rows * cols {
            return Err(domain(format!(
                "matrix {rows}x{cols} needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(domain(format!(
                "matrix entry ({}, {}) is not finite",
                pos / cols,
                pos % cols
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn<F: FnMut(usize, usize) -> f64>(rows: usize, cols: usize, mut f: F) -> Result<Self> {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self::new(rows, cols, data)
    }

    pub fn identity(n: usize) -> Result<Self> {
        Self::from_fn(n, n, |r, c| if r == c { 1.0 } else { 0.0 })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// A·x with compensated row dot products.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols, "dimension mismatch");
        (0..self.rows).map(|r| dot_compensated(self.row(r), x)).collect()
    }

    /// ‖A·x − b‖₂, with A·x accumulated in extended precision.
    pub fn residual_norm(&self, x: &[f64], b: &[f64]) -> f64 {
        assert_eq!(b.len(), self.rows, "dimension mismatch");
        let ax = self.mul_vec(x);
        ax.iter()
            .zip(b)
            .map(|(p, q)| (p - q) * (p - q))
            .sum::<f64>()
            .sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinearSolution {
    pub solution: Vec<f64>,
    pub condition_estimate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LeastSquaresSolution {
    pub solution: Vec<f64>,
    pub residual_norm: f64,
    pub condition_estimate: f64,
}

/// Householder QR with column pivoting, A·P = Q·R.
///
/// Column-major storage. Each reflector H = I − τ·v·vᵀ keeps v below the
/// diagonal with an implicit leading 1; R occupies the upper triangle.
struct Qr {
    m: usize,
    n: usize,
    qr: Vec<f64>,
    tau: Vec<f64>,
    rdiag: Vec<f64>,
    perm: Vec<usize>,
}

fn norm2(v: &[f64]) -> f64 {
    let scale = v.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()));
    if scale == 0.0 || !scale.is_finite() {
        return scale;
    }
    scale * v.iter().map(|x| (x / scale) * (x / scale)).sum::<f64>().sqrt()
}

impl Qr {
    fn factor(a: &DenseMatrix) -> Result<Self> {
        let (m, n) = (a.rows, a.cols);
        let mut qr = vec![0.0; m * n];
        for c in 0..n {
            for r in 0..m {
                qr[c * m + r] = a.get(r, c);
            }
        }
        let mut perm: Vec<usize> = (0..n).collect();
        let mut tau = vec![0.0; n];
        let mut rdiag = vec![0.0; n];
        for k in 0..n {
            // pivot on the largest remaining column norm; ties keep the lowest index
            let mut best = k;
            let mut best_norm = -1.0;
            for j in k..n {
                let nrm = norm2(&qr[j * m + k..(j + 1) * m]);
                if nrm > best_norm {
                    best = j;
                    best_norm = nrm;
                }
            }
            if best != k {
                for r in 0..m {
                    qr.swap(k * m + r, best * m + r);
                }
                perm.swap(k, best);
            }

            let (head, tail) = qr.split_at_mut((k + 1) * m);
            let col = &mut head[k * m..];
            let alpha = col[k];
            let xnorm = norm2(&col[k + 1..]);
            let beta = if xnorm == 0.0 {
                alpha
            } else {
                let beta = -alpha.hypot(xnorm).copysign(alpha);
                tau[k] = (beta - alpha) / beta;
                let scale = 1.0 / (alpha - beta);
                for v in &mut col[k + 1..] {
                    *v *= scale;
                }
                beta
            };
            col[k] = beta;
            rdiag[k] = beta;
            if tau[k] != 0.0 {
                for j in 0..(n - k - 1) {
                    let other = &mut tail[j * m..(j + 1) * m];
                    let mut s = other[k];
                    for (p, q) in col[k + 1..].iter().zip(&other[k + 1..]) {
                        s += p * q;
                    }
                    s *= tau[k];
                    other[k] -= s;
                    for (o, p) in other[k + 1..].iter_mut().zip(&col[k + 1..]) {
                        *o -= s * p;
                    }
                }
            }
        }
        if rdiag.iter().any(|&d| d == 0.0 || !d.is_finite()) {
            return Err(Error::Singular {
                condition: f64::INFINITY,
            });
        }
        Ok(Self {
            m,
            n,
            qr,
            tau,
            rdiag,
            perm,
        })
    }

    /// max|R_jj| / min|R_jj|.
    fn condition_estimate(&self) -> f64 {
        let (lo, hi) = self
            .rdiag
            .iter()
            .fold((f64::INFINITY, 0.0_f64), |(lo, hi), d| (lo.min(d.abs()), hi.max(d.abs())));
        hi / lo
    }

    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let (m, n) = (self.m, self.n);
        let mut y = b.to_vec();
        for k in 0..n {
            if self.tau[k] == 0.0 {
                continue;
            }
            let col = &self.qr[k * m..(k + 1) * m];
            let mut s = y[k];
            for (p, q) in col[k + 1..].iter().zip(&y[k + 1..]) {
                s += p * q;
            }
            s *= self.tau[k];
            y[k] -= s;
            for (yi, p) in y[k + 1..].iter_mut().zip(&col[k + 1..]) {
                *yi -= s * p;
            }
        }
        let mut z = vec![0.0; n];
        for k in (0..n).rev() {
            let mut acc = y[k];
            for (j, zj) in z.iter().enumerate().skip(k + 1) {
                acc -= self.qr[j * m + k] * zj;
            }
            z[k] = acc / self.rdiag[k];
        }
        let mut x = vec![0.0; n];
        for (k, &p) in self.perm.iter().enumerate() {
            x[p] = z[k];
        }
        x
    }
}

fn check_rhs(a: &DenseMatrix, b: &[f64]) -> Result<()> {
    if b.len() != a.rows {
        return Err(domain(format!(
            "right-hand side has length {}, matrix has {} rows",
            b.len(),
            a.rows
        )));
    }
    if b.iter().any(|v| !v.is_finite()) {
        return Err(domain("right-hand side contains non-finite values"));
    }
    Ok(())
}

/// Solves the square system A·x = b by column-pivoted Householder QR.
pub fn solve_linear(a: &DenseMatrix, b: &[f64]) -> Result<LinearSolution> {
    if a.rows != a.cols {
        return Err(domain(format!("solve_linear needs a square matrix, got {}x{}", a.rows, a.cols)));
    }
    check_rhs(a, b)?;
    let qr = Qr::factor(a)?;
    let condition_estimate = qr.condition_estimate();
    if !condition_estimate.is_finite() {
        return Err(Error::Singular {
            condition: condition_estimate,
        });
    }
    Ok(LinearSolution {
        solution: qr.solve(b),
        condition_estimate,
    })
}

/// Ratio of the largest to smallest |R_jj| of the pivoted QR factorization of A.
pub fn condition_estimate(a: &DenseMatrix) -> Result<f64> {
    if a.rows < a.cols {
        return Err(domain(format!("condition estimate needs rows >= cols, got {}x{}", a.rows, a.cols)));
    }
    Ok(Qr::factor(a)?.condition_estimate())
}

/// Minimizes ‖A·x − b‖₂ for rows ≥ cols by column-pivoted Householder QR.
pub fn solve_least_squares(a: &DenseMatrix, b: &[f64]) -> Result<LeastSquaresSolution> {
    if a.rows < a.cols {
        return Err(domain(format!(
            "least squares needs rows >= cols, got {}x{}",
            a.rows, a.cols
        )));
    }
    check_rhs(a, b)?;
    let qr = Qr::factor(a)?;
    let condition_estimate = qr.condition_estimate();
    if !condition_estimate.is_finite() {
        return Err(Error::Singular {
            condition: condition_estimate,
        });
    }
    let solution = qr.solve(b);
    let residual_norm = a.residual_norm(&solution, b);
    Ok(LeastSquaresSolution {
        solution,
        residual_norm,
        condition_estimate,
    })
}
