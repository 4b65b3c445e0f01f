//! Symmetric positive-definite matrices and the handful of dense linear
//! algebra routines the model needs.
//!
//! Dimensions are small (p ≤ ~64), so everything is unblocked and written
//! directly against `nalgebra::DMatrix`.

mod distance;
mod sampling;

pub use distance::{riemannian_distance, SpdMetric};
pub use sampling::{sample_inverse_wishart, sample_wishart};

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Relative tolerance on |a_ij - a_ji| / max|a| accepted before symmetrizing.
pub const SYMMETRY_TOLERANCE: f64 = 1e-8;

/// A validated p×p SPD matrix together with its lower Cholesky factor.
///
/// Construction symmetrizes the input, so `entries` is exactly symmetric.
/// The factor and log-determinant are computed once and never change.
#[derive(Debug, Clone, PartialEq)]
pub struct SpdMatrix {
    entries: DMatrix<f64>,
    chol: DMatrix<f64>,
    log_det: f64,
}

impl SpdMatrix {
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        let sym = symmetrize_checked(&entries)?;
        let chol = cholesky(&sym)?;
        let log_det = 2.0 * chol.diagonal().iter().map(|d| d.ln()).sum::<f64>();
        Ok(SpdMatrix {
            entries: sym,
            chol,
            log_det,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let p = rows.len();
        for row in rows {
            if row.len() != p {
                return Err(Error::NotSquare {
                    rows: p,
                    cols: row.len(),
                });
            }
        }
        Self::new(DMatrix::from_fn(p, p, |i, j| rows[i][j]))
    }

    pub fn identity(p: usize) -> Self {
        Self::scaled_identity(p, 1.0)
    }

    /// `c · I_p`; panics unless `c > 0`.
    pub fn scaled_identity(p: usize, c: f64) -> Self {
        assert!(c > 0.0, "scaled identity needs a positive factor");
        Self::new(DMatrix::from_diagonal_element(p, p, c)).expect("c·I is SPD")
    }

    pub fn diagonal(values: &[f64]) -> Result<Self> {
        let n = values.len();
        Self::new(DMatrix::from_fn(n, n, |i, j| if i == j { values[i] } else { 0.0 }))
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.entries
    }

    /// Lower-triangular L with L·Lᵀ = self.
    pub fn cholesky_factor(&self) -> &DMatrix<f64> {
        &self.chol
    }

    /// log|A| = 2 Σ log L_ii.
    pub fn log_det(&self) -> f64 {
        self.log_det
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }

    pub fn inverse(&self) -> SpdMatrix {
        let p = self.dim();
        let inv = solve_with_factor(&self.chol, &DMatrix::identity(p, p));
        SpdMatrix::new(inv).expect("inverse of an SPD matrix is SPD")
    }

    pub fn vech(&self) -> HalfVector {
        vech(&self.entries).expect("SpdMatrix is square")
    }

    /// Entrywise sum with another matrix of the same dimension.
    pub fn add(&self, other: &SpdMatrix) -> Result<SpdMatrix> {
        check_dims(self.dim(), other.dim())?;
        SpdMatrix::new(&self.entries + &other.entries)
    }

    pub fn scale(&self, c: f64) -> Result<SpdMatrix> {
        SpdMatrix::new(&self.entries * c)
    }

    /// M · A · Mᵀ for an arbitrary conformable M.
    pub fn congruence(&self, m: &DMatrix<f64>) -> Result<SpdMatrix> {
        if m.ncols() != self.dim() {
            return Err(Error::DimMismatch {
                expected: self.dim(),
                found: m.ncols(),
            });
        }
        SpdMatrix::new(m * &self.entries * m.transpose())
    }
}

pub(crate) fn check_dims(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimMismatch { expected, found })
    }
}

fn symmetrize_checked(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if a.nrows() != a.ncols() {
        return Err(Error::NotSquare {
            rows: a.nrows(),
            cols: a.ncols(),
        });
    }
    if a.nrows() == 0 {
        return Err(Error::Domain("matrix dimension must be positive".into()));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("matrix has non-finite entries".into()));
    }
    let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let p = a.nrows();
    let mut asym = 0.0f64;
    for j in 0..p {
        for i in (j + 1)..p {
            asym = asym.max((a[(i, j)] - a[(j, i)]).abs());
        }
    }
    let rel = if scale > 0.0 { asym / scale } else { 0.0 };
    if rel > SYMMETRY_TOLERANCE {
        return Err(Error::NotSymmetric { asymmetry: rel });
    }
    Ok(DMatrix::from_fn(p, p, |i, j| 0.5 * (a[(i, j)] + a[(j, i)])))
}

/// Lower Cholesky factor of a symmetric matrix.
///
/// Only the lower triangle of `a` is read after the symmetry check.
pub fn cholesky(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let a = symmetrize_checked(a)?;
    let p = a.nrows();
    let mut l = DMatrix::<f64>::zeros(p, p);
    for j in 0..p {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > 0.0) {
            return Err(Error::NotPositiveDefinite { pivot: j });
        }
        let d = d.sqrt();
        l[(j, j)] = d;
        for i in (j + 1)..p {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / d;
        }
    }
    Ok(l)
}

/// log|a| for a validated SPD matrix.
pub fn log_det(a: &SpdMatrix) -> f64 {
    a.log_det()
}

/// tr(a·b) = Σ_ij a_ij b_ij for symmetric a, b.
pub fn trace_product(a: &SpdMatrix, b: &SpdMatrix) -> Result<f64> {
    check_dims(a.dim(), b.dim())?;
    Ok(a.matrix().component_mul(b.matrix()).sum())
}

/// Solves a · X = rhs through the cached Cholesky factor of `a`.
pub fn solve_spd(a: &SpdMatrix, rhs: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_dims(a.dim(), rhs.nrows())?;
    Ok(solve_with_factor(a.cholesky_factor(), rhs))
}

fn solve_with_factor(l: &DMatrix<f64>, rhs: &DMatrix<f64>) -> DMatrix<f64> {
    let p = l.nrows();
    let mut x = rhs.clone();
    for c in 0..x.ncols() {
        // L y = b
        for i in 0..p {
            let mut s = x[(i, c)];
            for k in 0..i {
                s -= l[(i, k)] * x[(k, c)];
            }
            x[(i, c)] = s / l[(i, i)];
        }
        // Lᵀ x = y
        for i in (0..p).rev() {
            let mut s = x[(i, c)];
            for k in (i + 1)..p {
                s -= l[(k, i)] * x[(k, c)];
            }
            x[(i, c)] = s / l[(i, i)];
        }
    }
    x
}

/// Log-determinant of `a + b` for symmetric `a`, `b` stored in flat
/// column-major buffers, reusing `scratch`. Returns `None` when the sum is not
/// positive definite. This is the hot path of the label update.
pub(crate) fn log_det_of_sum(p: usize, a: &[f64], b: &[f64], scratch: &mut Vec<f64>) -> Option<f64> {
    scratch.clear();
    scratch.extend(a.iter().zip(b).map(|(x, y)| x + y));
    let m = scratch.as_mut_slice();
    let mut acc = 0.0;
    for j in 0..p {
        let mut d = m[j * p + j];
        for k in 0..j {
            let v = m[k * p + j];
            d -= v * v;
        }
        if !(d > 0.0) {
            return None;
        }
        let d = d.sqrt();
        acc += d.ln();
        // L overwrites the lower triangle in place, column by column
        m[j * p + j] = d;
        for i in (j + 1)..p {
            let mut s = m[j * p + i];
            for k in 0..j {
                s -= m[k * p + i] * m[k * p + j];
            }
            m[j * p + i] = s / d;
        }
    }
    Some(2.0 * acc)
}

/// Half-vectorization of a symmetric p×p matrix: the lower triangle stacked
/// column by column, length p(p+1)/2.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfVector {
    dim: usize,
    values: Vec<f64>,
}

impl HalfVector {
    pub fn new(dim: usize, values: Vec<f64>) -> Result<Self> {
        let expected = dim * (dim + 1) / 2;
        if values.len() != expected {
            return Err(Error::LengthMismatch {
                expected,
                found: values.len(),
            });
        }
        Ok(HalfVector { dim, values })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Position of entry (i, j), i ≥ j, in the half-vector of a p×p matrix.
pub fn vech_index(p: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i >= j { (i, j) } else { (j, i) };
    j * p - j * (j + 1) / 2 + i
}

pub fn vech(a: &DMatrix<f64>) -> Result<HalfVector> {
    if a.nrows() != a.ncols() {
        return Err(Error::NotSquare {
            rows: a.nrows(),
            cols: a.ncols(),
        });
    }
    let p = a.nrows();
    let mut values = Vec::with_capacity(p * (p + 1) / 2);
    for j in 0..p {
        for i in j..p {
            values.push(a[(i, j)]);
        }
    }
    HalfVector::new(p, values)
}

pub fn vech_inverse(v: &HalfVector) -> DMatrix<f64> {
    let p = v.dim();
    DMatrix::from_fn(p, p, |i, j| v.values[vech_index(p, i, j)])
}

/// D_p, the p²×p(p+1)/2 duplication matrix with vec(S) = D_p vech(S).
pub fn duplication_matrix(p: usize) -> DMatrix<f64> {
    let d = p * (p + 1) / 2;
    let mut m = DMatrix::zeros(p * p, d);
    for j in 0..p {
        for i in 0..p {
            m[(j * p + i, vech_index(p, i, j))] = 1.0;
        }
    }
    m
}

/// D^{-1/2} A D^{-1/2} with D = diag(A).
pub fn standardize_to_correlation(a: &DMatrix<f64>) -> Result<SpdMatrix> {
    let sym = symmetrize_checked(a)?;
    let p = sym.nrows();
    let mut scale = Vec::with_capacity(p);
    for i in 0..p {
        let d = sym[(i, i)];
        if !(d > 0.0) {
            return Err(Error::ZeroDiagonal { index: i });
        }
        scale.push(d.sqrt());
    }
    let mut r = DMatrix::from_fn(p, p, |i, j| {
        (sym[(i, j)] / (scale[i] * scale[j])).clamp(-1.0, 1.0)
    });
    r.fill_diagonal(1.0);
    SpdMatrix::new(r)
}
