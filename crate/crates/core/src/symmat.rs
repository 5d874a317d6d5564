//! Small dense symmetric-matrix algebra: positive-definiteness tests, the
//! one-measurement covariance update, and the Gaussian attenuation pair used
//! throughout the filter, objective and bound modules.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Relative symmetry tolerance accepted at construction.
const SYM_TOL: f64 = 1e-12;

/// Pivot threshold scale for positive-definiteness: smallest factorization
/// pivot must exceed `PD_PIVOT_SCALE * trace / dim`.
const PD_PIVOT_SCALE: f64 = 1e-14;

/// Dense n-by-n symmetric matrix. Stored exactly symmetric: constructors
/// validate near-symmetry and then replace the entries with (M + M')/2.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMat {
    m: DMatrix<f64>,
}

impl SymMat {
    /// Builds from a square matrix, checking |m_ij - m_ji| <= 1e-12 * max(1, |m_ij|).
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "expected square matrix, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        for i in 0..m.nrows() {
            for j in (i + 1)..m.ncols() {
                let delta = (m[(i, j)] - m[(j, i)]).abs();
                if delta > SYM_TOL * m[(i, j)].abs().max(1.0) {
                    return Err(Error::NotSymmetric { i, j, delta });
                }
            }
        }
        Ok(Self::symmetrize(m))
    }

    /// Builds from row-major nested slices.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::DimensionMismatch(
                "ragged rows in symmetric matrix".into(),
            ));
        }
        let m = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
        Self::new(m)
    }

    /// (M + M')/2 without the symmetry check; for results of arithmetic that
    /// drift by round-off.
    pub fn symmetrize(m: DMatrix<f64>) -> Self {
        let half_sum = (&m + m.transpose()) * 0.5;
        Self { m: half_sum }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            m: DMatrix::identity(n, n),
        }
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            m: DMatrix::zeros(n, n),
        }
    }

    /// s * I, the isotropic matrix.
    pub fn scaled_identity(n: usize, s: f64) -> Self {
        Self {
            m: DMatrix::identity(n, n) * s,
        }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.m
    }

    pub fn trace(&self) -> f64 {
        self.m.trace()
    }

    pub fn determinant(&self) -> f64 {
        self.m.determinant()
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.m[(i, j)]
    }

    /// True iff this matrix is isotropic (s * I) within `tol` relative to s.
    pub fn isotropic_scale(&self, tol: f64) -> Option<f64> {
        let n = self.dim();
        let s = self.trace() / n as f64;
        let scale = s.abs().max(1.0);
        for i in 0..n {
            for j in 0..n {
                let want = if i == j { s } else { 0.0 };
                if (self.m[(i, j)] - want).abs() > tol * scale {
                    return None;
                }
            }
        }
        Some(s)
    }

    /// Lower Cholesky factor with a trace-scaled pivot gate: every pivot
    /// (the diagonal residual before the square root) must exceed
    /// 1e-14 * trace / dim, otherwise the matrix is reported non-PD rather
    /// than silently regularized.
    pub fn cholesky_lower(&self) -> Result<DMatrix<f64>> {
        let n = self.dim();
        let threshold = PD_PIVOT_SCALE * self.trace() / n as f64;
        let mut l = DMatrix::<f64>::zeros(n, n);
        for j in 0..n {
            let mut pivot = self.m[(j, j)];
            for k in 0..j {
                pivot -= l[(j, k)] * l[(j, k)];
            }
            if !(pivot > threshold) {
                return Err(Error::NotPositiveDefinite(format!(
                    "pivot {pivot:e} at column {j} below threshold {threshold:e}"
                )));
            }
            let ljj = pivot.sqrt();
            l[(j, j)] = ljj;
            for i in (j + 1)..n {
                let mut s = self.m[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / ljj;
            }
        }
        Ok(l)
    }

    pub fn is_positive_definite(&self) -> bool {
        self.cholesky_lower().is_ok()
    }

    /// Smallest eigenvalue, via symmetric eigendecomposition. Diagnostic use.
    pub fn min_eigenvalue(&self) -> f64 {
        self.m
            .clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .fold(f64::INFINITY, |a, &b| a.min(b))
    }
}

/// Inverse of a 2x2 matrix in closed form; `None` when the determinant is
/// negligible relative to the entries.
pub fn inv_2x2(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    debug_assert_eq!((m.nrows(), m.ncols()), (2, 2));
    let (a, b, c, d) = (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
    let det = a * d - b * c;
    let scale = a.abs().max(b.abs()).max(c.abs()).max(d.abs()).max(1.0);
    if det.abs() <= 1e-14 * scale * scale {
        return None;
    }
    let inv_det = 1.0 / det;
    Some(DMatrix::from_row_slice(
        2,
        2,
        &[d * inv_det, -b * inv_det, -c * inv_det, a * inv_det],
    ))
}

/// Covariance shrink from one Gaussian position measurement:
/// Sigma - Sigma C' (C Sigma C' + R)^-1 C Sigma.
///
/// Maps PD to PD and never increases the matrix (result <= Sigma in the
/// semidefinite order).
pub fn covariance_update(sigma: &SymMat, c: &DMatrix<f64>, r: &SymMat) -> Result<SymMat> {
    check_measurement_dims(sigma, c, r)?;
    let cs = c * sigma.matrix(); // 2 x n
    let innov = &cs * c.transpose() + r.matrix(); // 2 x 2
    let w = inv_2x2(&innov).ok_or(Error::SingularInnovation)?;
    let res = sigma.matrix() - cs.transpose() * w * cs;
    Ok(SymMat::symmetrize(res))
}

/// Inverse square root of a 2x2 symmetric positive definite matrix: the PD
/// matrix X with X X = M^-1, via the closed-form rotation eigendecomposition.
pub fn inv_sqrt_2x2(m: &SymMat) -> Result<SymMat> {
    if m.dim() != 2 {
        return Err(Error::DimensionMismatch(format!(
            "inv_sqrt_2x2 needs a 2x2 matrix, got {}x{}",
            m.dim(),
            m.dim()
        )));
    }
    let (a, b, d) = (m.entry(0, 0), m.entry(0, 1), m.entry(1, 1));
    let spread = (a - d).hypot(2.0 * b);
    let mean = 0.5 * (a + d);
    let lam1 = mean + 0.5 * spread; // eigenvalue along (cos t, sin t)
    let lam2 = mean - 0.5 * spread;
    if !(lam2 > 0.0) {
        return Err(Error::Domain(format!(
            "inv_sqrt_2x2: matrix not positive definite (eigenvalues {lam1}, {lam2})"
        )));
    }
    let p1 = 1.0 / lam1.sqrt();
    let p2 = 1.0 / lam2.sqrt();
    let theta = 0.5 * (2.0 * b).atan2(a - d);
    let (s, c) = theta.sin_cos();
    let x11 = c * c * p1 + s * s * p2;
    let x22 = s * s * p1 + c * c * p2;
    let x12 = c * s * (p1 - p2);
    Ok(SymMat::symmetrize(DMatrix::from_row_slice(
        2,
        2,
        &[x11, x12, x12, x22],
    )))
}

/// Conditional attenuation pair (Q, q) of a Gaussian state estimate:
/// Q = (I + 2 rho C Sigma C')^-1/2 and q = det Q, so that
/// E[exp(-rho |C x|^2)] = q exp(-rho |Q C xhat|^2) for x ~ N(xhat, Sigma).
pub fn conditional_attenuation(
    sigma: &SymMat,
    c: &DMatrix<f64>,
    rho: f64,
) -> Result<(SymMat, f64)> {
    if rho < 0.0 {
        return Err(Error::Domain(format!("rho must be nonnegative, got {rho}")));
    }
    let p = SymMat::symmetrize(c * sigma.matrix() * c.transpose());
    let g = SymMat::symmetrize(DMatrix::identity(2, 2) + p.matrix() * (2.0 * rho));
    let q_mat = inv_sqrt_2x2(&g)?;
    let q_det = q_mat.determinant();
    Ok((q_mat, q_det))
}

/// Expected attenuation of a centered estimate: 1 / sqrt(det(I + 2 rho C Sigma C')).
/// Strictly decreasing in Sigma (PD ordering) for full-rank C, and always in (0, 1].
pub fn attenuation_scale(sigma: &SymMat, c: &DMatrix<f64>, rho: f64) -> f64 {
    let p = c * sigma.matrix() * c.transpose();
    let det = (1.0 + 2.0 * rho * p[(0, 0)]) * (1.0 + 2.0 * rho * p[(1, 1)])
        - (2.0 * rho) * (2.0 * rho) * p[(0, 1)] * p[(1, 0)];
    1.0 / det.sqrt()
}

fn check_measurement_dims(sigma: &SymMat, c: &DMatrix<f64>, r: &SymMat) -> Result<()> {
    if c.nrows() != 2 || c.ncols() != sigma.dim() {
        return Err(Error::DimensionMismatch(format!(
            "C must be 2x{}, got {}x{}",
            sigma.dim(),
            c.nrows(),
            c.ncols()
        )));
    }
    if r.dim() != 2 {
        return Err(Error::DimensionMismatch(format!(
            "R must be 2x2, got {0}x{0}",
            r.dim()
        )));
    }
    Ok(())
}
