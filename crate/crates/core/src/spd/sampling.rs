use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use super::SpdMatrix;
use crate::error::{Error, Result};

fn chi_squared<R: Rng + ?Sized>(dof: f64, rng: &mut R) -> f64 {
    Gamma::new(dof / 2.0, 2.0)
        .expect("positive chi-squared dof")
        .sample(rng)
}

/// Draw W ~ W_p(scale, nu) by the Bartlett decomposition.
///
/// With scale = L Lᵀ, W = L A Aᵀ Lᵀ where A is lower triangular,
/// A_ii² ~ χ²(nu − i) (i = 0-based row) and A_ij ~ N(0, 1) below the
/// diagonal. Non-integer nu is fine since χ² is drawn as a gamma variate.
/// Random numbers are consumed column by column: the diagonal entry first,
/// then the entries below it.
pub fn sample_wishart<R: Rng + ?Sized>(scale: &SpdMatrix, nu: f64, rng: &mut R) -> Result<SpdMatrix> {
    let p = scale.dim();
    if !(nu > p as f64 - 1.0) || !nu.is_finite() {
        return Err(Error::InvalidDof { dof: nu, dim: p });
    }
    let mut a = DMatrix::<f64>::zeros(p, p);
    for j in 0..p {
        a[(j, j)] = chi_squared(nu - j as f64, rng).sqrt();
        for i in (j + 1)..p {
            a[(i, j)] = StandardNormal.sample(rng);
        }
    }
    let la = scale.cholesky_factor() * a;
    SpdMatrix::new(&la * la.transpose())
}

/// Draw Σ ~ IW_p(psi, kappa) as the inverse of a W_p(psi⁻¹, kappa) draw.
pub fn sample_inverse_wishart<R: Rng + ?Sized>(
    psi: &SpdMatrix,
    kappa: f64,
    rng: &mut R,
) -> Result<SpdMatrix> {
    let p = psi.dim();
    if !(kappa > p as f64 - 1.0) || !kappa.is_finite() {
        return Err(Error::InvalidDof { dof: kappa, dim: p });
    }
    let w = sample_wishart(&psi.inverse(), kappa, rng)?;
    Ok(w.inverse())
}
