//! Linear regression model, orthogonal-complement projector and residuals.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Diagonal entries of the projector below this are treated as exact zeros.
///
/// A meter whose row lies entirely in `col(H)` has `P_mm = 0` in exact
/// arithmetic; after orthogonalization it shows up as a few ulps.
const ZERO_ROW_TOL: f64 = 64.0 * f64::EPSILON;

/// `x(t) = H θ(t) + n(t)` with `n(t) ~ N(0, σ² I)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    h: DMatrix<f64>,
    sigma2: f64,
}

impl LinearModel {
    /// Validates `H` (more rows than columns, full column rank) and `σ²`.
    pub fn new(h: DMatrix<f64>, sigma2: f64) -> Result<Self> {
        let (m, n) = h.shape();
        if n == 0 || m <= n {
            return Err(Error::BadDimensions(format!(
                "need more observations than parameters (M > N >= 1), got {m}x{n}"
            )));
        }
        if !(sigma2 > 0.0 && sigma2.is_finite()) {
            return Err(Error::NonPositiveVariance(sigma2));
        }
        if h.iter().any(|v| !v.is_finite()) {
            return Err(Error::BadDimensions("model matrix has non-finite entries".into()));
        }
        let rank = numerical_rank(&h);
        if rank < n {
            return Err(Error::RankDeficient { rank, expected: n });
        }
        Ok(Self { h, sigma2 })
    }

    /// Builds a model from row-major nested vectors.
    pub fn from_rows(rows: &[Vec<f64>], sigma2: f64) -> Result<Self> {
        Self::new(matrix_from_rows(rows)?, sigma2)
    }

    pub fn h(&self) -> &DMatrix<f64> {
        &self.h
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn sigma(&self) -> f64 {
        self.sigma2.sqrt()
    }

    /// Number of observations `M`.
    pub fn num_meters(&self) -> usize {
        self.h.nrows()
    }

    /// Number of unknown parameters `N`.
    pub fn num_params(&self) -> usize {
        self.h.ncols()
    }

    /// Same matrix, different noise level.
    pub fn with_sigma2(&self, sigma2: f64) -> Result<Self> {
        if !(sigma2 > 0.0 && sigma2.is_finite()) {
            return Err(Error::NonPositiveVariance(sigma2));
        }
        Ok(Self { h: self.h.clone(), sigma2 })
    }

    /// Projector onto the orthogonal complement of `col(H)`.
    ///
    /// Computed as `I - Q Qᵀ` from an orthonormal basis `Q` of the column
    /// space (left singular vectors), never through `(HᵀH)⁻¹`.
    pub fn projector(&self) -> Projector {
        let m = self.num_meters();
        let basis = column_basis(&self.h);
        let mut p = DMatrix::<f64>::identity(m, m) - &basis * basis.transpose();
        // Symmetrize away the rounding asymmetry of the rank-N update.
        for i in 0..m {
            for j in (i + 1)..m {
                let avg = 0.5 * (p[(i, j)] + p[(j, i)]);
                p[(i, j)] = avg;
                p[(j, i)] = avg;
            }
        }
        let row_norms = (0..m)
            .map(|i| {
                let d = 1.0 - basis.row(i).norm_squared();
                if d <= ZERO_ROW_TOL {
                    0.0
                } else {
                    d.min(1.0).sqrt()
                }
            })
            .collect();
        Projector { p, row_norms, basis }
    }
}

/// The matrix `P = I - H(HᵀH)⁻¹Hᵀ` and its row norms `‖p_m‖₂`.
#[derive(Debug, Clone, PartialEq)]
pub struct Projector {
    p: DMatrix<f64>,
    row_norms: Vec<f64>,
    basis: DMatrix<f64>,
}

/// Max-abs violations of the projector identities.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ProjectorDiagnostics {
    pub symmetry: f64,
    pub idempotence: f64,
    pub annihilation: f64,
}

impl Projector {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.p
    }

    /// `‖p_m‖₂` for every row; `‖p_m‖₂² = P_mm`.
    pub fn row_norms(&self) -> &[f64] {
        &self.row_norms
    }

    /// Orthonormal basis of `col(H)` the projector was built from.
    pub fn column_basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.p.nrows()
    }

    /// `x̃ = P x`.
    pub fn residual(&self, x: &[f64]) -> Result<Residual> {
        let mut out = vec![0.0; self.dim()];
        self.residual_into(x, &mut out)?;
        Ok(Residual(out))
    }

    /// Allocation-free `out = P x` for hot loops.
    pub fn residual_into(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        let m = self.dim();
        if x.len() != m {
            return Err(Error::DimensionMismatch { expected: m, actual: x.len() });
        }
        if out.len() != m {
            return Err(Error::DimensionMismatch { expected: m, actual: out.len() });
        }
        out.iter_mut().for_each(|v| *v = 0.0);
        // Column-major storage: accumulate column by column.
        for (j, &xj) in x.iter().enumerate() {
            if xj == 0.0 {
                continue;
            }
            let col = self.p.column(j);
            for (o, &pij) in out.iter_mut().zip(col.iter()) {
                *o += pij * xj;
            }
        }
        Ok(())
    }

    /// Projector invariants measured against the model's `H`.
    pub fn diagnostics(&self, h: &DMatrix<f64>) -> ProjectorDiagnostics {
        let pt = self.p.transpose();
        let p2 = &self.p * &self.p;
        let ph = &self.p * h;
        ProjectorDiagnostics {
            symmetry: max_abs(&(&self.p - pt)),
            idempotence: max_abs(&(p2 - &self.p)),
            annihilation: max_abs(&ph),
        }
    }
}

/// `x̃(t) = P x(t)`, the part of an observation outside `col(H)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Residual(Vec<f64>);

impl Residual {
    /// Wraps a vector already known to lie in the residual space.
    pub fn from_projected(v: Vec<f64>) -> Self {
        Self(v)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl AsRef<[f64]> for Residual {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// Singular values below `σ_max · max(M, N) · ε` count as zero.
pub fn numerical_rank(a: &DMatrix<f64>) -> usize {
    if a.is_empty() {
        return 0;
    }
    let sv = a.clone().svd(false, false).singular_values;
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    let tol = smax * a.nrows().max(a.ncols()) as f64 * f64::EPSILON;
    sv.iter().filter(|&&s| s > tol).count()
}

/// Orthonormal basis of `col(a)` (columns), dropping numerically null
/// directions.
pub fn column_basis(a: &DMatrix<f64>) -> DMatrix<f64> {
    let (rows, cols) = a.shape();
    if rows == 0 || cols == 0 {
        return DMatrix::zeros(rows, 0);
    }
    let svd = a.clone().svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let sv = svd.singular_values;
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    let tol = smax * rows.max(cols) as f64 * f64::EPSILON;
    let keep: Vec<usize> = (0..sv.len()).filter(|&i| sv[i] > tol && smax > 0.0).collect();
    DMatrix::from_fn(rows, keep.len(), |i, k| u[(i, keep[k])])
}

pub fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let m = rows.len();
    let n = rows.first().map_or(0, Vec::len);
    if let Some(bad) = rows.iter().find(|r| r.len() != n) {
        return Err(Error::DimensionMismatch { expected: n, actual: bad.len() });
    }
    Ok(DMatrix::from_fn(m, n, |i, j| rows[i][j]))
}

pub(crate) fn max_abs(a: &DMatrix<f64>) -> f64 {
    a.iter().fold(0.0, |acc: f64, v| acc.max(v.abs()))
}

/// `H θ` as a plain vector.
pub fn apply(h: &DMatrix<f64>, theta: &[f64]) -> Result<Vec<f64>> {
    if theta.len() != h.ncols() {
        return Err(Error::DimensionMismatch { expected: h.ncols(), actual: theta.len() });
    }
    let out = h * DVector::from_column_slice(theta);
    Ok(out.as_slice().to_vec())
}
