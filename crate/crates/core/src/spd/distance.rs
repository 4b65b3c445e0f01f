use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::{check_dims, SpdMatrix};
use crate::error::Result;

/// Distance on the SPD cone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpdMetric {
    /// ‖log(A^{-1/2} B A^{-1/2})‖_F, invariant under A ↦ M A Mᵀ.
    #[default]
    AffineInvariant,
    /// ‖log A − log B‖_F.
    LogEuclidean,
}

/// Riemannian distance between two SPD matrices of equal dimension.
///
/// The affine-invariant variant uses the generalized eigenvalues λ of (B, A),
/// d = sqrt(Σ log² λ), obtained from the symmetric matrix L⁻¹ B L⁻ᵀ where
/// A = L Lᵀ. No matrix square roots are formed.
pub fn riemannian_distance(a: &SpdMatrix, b: &SpdMatrix, metric: SpdMetric) -> Result<f64> {
    check_dims(a.dim(), b.dim())?;
    if a == b {
        return Ok(0.0);
    }
    let d = match metric {
        SpdMetric::AffineInvariant => {
            let l = a.cholesky_factor();
            let x = lower_solve(l, b.matrix());
            let c = lower_solve(l, &x.transpose());
            let c = 0.5 * (&c + c.transpose());
            SymmetricEigen::new(c)
                .eigenvalues
                .iter()
                .map(|lam| lam.ln().powi(2))
                .sum::<f64>()
                .sqrt()
        }
        SpdMetric::LogEuclidean => (log_spd(a.matrix()) - log_spd(b.matrix())).norm(),
    };
    Ok(d)
}

/// L⁻¹ M for lower-triangular L.
fn lower_solve(l: &DMatrix<f64>, m: &DMatrix<f64>) -> DMatrix<f64> {
    let p = l.nrows();
    let mut x = m.clone();
    for c in 0..x.ncols() {
        for i in 0..p {
            let mut s = x[(i, c)];
            for k in 0..i {
                s -= l[(i, k)] * x[(k, c)];
            }
            x[(i, c)] = s / l[(i, i)];
        }
    }
    x
}

fn log_spd(a: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(a.clone());
    let logs = eig.eigenvalues.map(f64::ln);
    &eig.eigenvectors * DMatrix::from_diagonal(&logs) * eig.eigenvectors.transpose()
}
