//! Derivatives of the Wishart log-density and density in the precision
//! parameterization θ = (η, ν) with η = vech(Λ), Λ = Σ⁻¹.
//!
//! Written out, with D_p the duplication matrix:
//!
//! ```text
//! l(θ; W)  = −(νp/2) log 2 + (ν/2) log|Λ| − log Γ_p(ν/2) + ((ν−p−1)/2) log|W| − tr(ΛW)/2
//! ∇_ν l    = ½ log|Λ| − (p/2) log 2 − ½ ψ_p(ν/2) + ½ log|W|
//! ∇_η l    = D_pᵀ g,  g = ½ vec(νΛ⁻¹ − W)
//! ∇²_νν l  = −¼ ψ′_p(ν/2)
//! ∇²_ην l  = ½ D_pᵀ vec(Λ⁻¹)
//! ∇²_ηη l  = −(ν/2) D_pᵀ (Λ⁻¹ ⊗ Λ⁻¹) D_p
//! ∇² f     = f (∇² l + ∇l ∇lᵀ)
//! ```

use std::f64::consts::LN_2;

use nalgebra::{DMatrix, DVector};

use super::check_dof;
use crate::error::{Error, Result};
use crate::spd::{check_dims, duplication_matrix, vech_inverse, HalfVector, SpdMatrix};
use crate::special::{log_multigamma_unchecked, multidigamma, multitrigamma};

/// A point θ = (η, ν) where Λ = vech⁻¹(η) is SPD.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaPoint {
    eta: HalfVector,
    nu: f64,
    precision: SpdMatrix,
}

impl ThetaPoint {
    pub fn new(eta: HalfVector, nu: f64) -> Result<Self> {
        let precision = SpdMatrix::new(vech_inverse(&eta))
            .map_err(|e| Error::Domain(format!("vech_inverse(eta) is not SPD: {e}")))?;
        check_dof(nu, precision.dim())
            .map_err(|_| Error::Domain(format!("nu = {nu} is outside the interior")))?;
        Ok(ThetaPoint { eta, nu, precision })
    }

    pub fn from_precision(precision: &SpdMatrix, nu: f64) -> Result<Self> {
        Self::new(precision.vech(), nu)
    }

    pub fn eta(&self) -> &HalfVector {
        &self.eta
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn precision(&self) -> &SpdMatrix {
        &self.precision
    }

    pub fn dim(&self) -> usize {
        self.precision.dim()
    }
}

/// Hessian split into the (η, η), (η, ν) and (ν, ν) blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct HessianBlocks {
    pub eta_eta: DMatrix<f64>,
    pub eta_nu: DVector<f64>,
    pub nu_nu: f64,
}

impl HessianBlocks {
    /// The full symmetric matrix with η coordinates first and ν last.
    pub fn to_full(&self) -> DMatrix<f64> {
        let d = self.eta_nu.len();
        let mut h = DMatrix::zeros(d + 1, d + 1);
        h.view_mut((0, 0), (d, d)).copy_from(&self.eta_eta);
        for k in 0..d {
            h[(k, d)] = self.eta_nu[k];
            h[(d, k)] = self.eta_nu[k];
        }
        h[(d, d)] = self.nu_nu;
        h
    }
}

/// Wishart log-density l(θ; W).
pub fn log_density(theta: &ThetaPoint, w: &SpdMatrix) -> Result<f64> {
    let p = theta.dim();
    check_dims(p, w.dim())?;
    let lam = theta.precision();
    let nu = theta.nu;
    let pf = p as f64;
    let tr = lam.matrix().component_mul(w.matrix()).sum();
    Ok(-0.5 * nu * pf * LN_2 + 0.5 * nu * lam.log_det() - log_multigamma_unchecked(p, nu / 2.0)
        + 0.5 * (nu - pf - 1.0) * w.log_det()
        - 0.5 * tr)
}

/// D_pᵀ vec(M) for symmetric M: diagonal entries once, off-diagonals doubled.
fn dup_transpose_vec(m: &DMatrix<f64>) -> DVector<f64> {
    let p = m.nrows();
    let mut out = Vec::with_capacity(p * (p + 1) / 2);
    for j in 0..p {
        out.push(m[(j, j)]);
        for i in j + 1..p {
            out.push(m[(i, j)] + m[(j, i)]);
        }
    }
    DVector::from_vec(out)
}

/// ∇l stacked as (∇_η l, ∇_ν l), length p(p+1)/2 + 1.
pub fn grad_log_density(theta: &ThetaPoint, w: &SpdMatrix) -> Result<DVector<f64>> {
    let p = theta.dim();
    check_dims(p, w.dim())?;
    let nu = theta.nu;
    let lam = theta.precision();
    let sigma = lam.inverse();
    let g = (sigma.matrix() * nu - w.matrix()) * 0.5;
    let grad_eta = dup_transpose_vec(&g);
    let grad_nu = 0.5 * lam.log_det() - 0.5 * p as f64 * LN_2 - 0.5 * multidigamma(p, nu / 2.0)?
        + 0.5 * w.log_det();
    let d = grad_eta.len();
    let mut out = DVector::zeros(d + 1);
    out.rows_mut(0, d).copy_from(&grad_eta);
    out[d] = grad_nu;
    Ok(out)
}

/// ∇f = f ∇l.
pub fn grad_density(theta: &ThetaPoint, w: &SpdMatrix) -> Result<DVector<f64>> {
    let f = log_density(theta, w)?.exp();
    Ok(grad_log_density(theta, w)? * f)
}

pub fn hessian_log_density_blocks(theta: &ThetaPoint, w: &SpdMatrix) -> Result<HessianBlocks> {
    let p = theta.dim();
    check_dims(p, w.dim())?;
    let nu = theta.nu;
    let sigma = theta.precision().inverse();
    let dp = duplication_matrix(p);
    let kron = sigma.matrix().kronecker(sigma.matrix());
    let eta_eta = dp.transpose() * kron * &dp * (-0.5 * nu);
    let eta_nu = dup_transpose_vec(sigma.matrix()) * 0.5;
    let nu_nu = -0.25 * multitrigamma(p, nu / 2.0)?;
    Ok(HessianBlocks {
        eta_eta,
        eta_nu,
        nu_nu,
    })
}

/// Blocks of ∇²f = f (∇²l + ∇l ∇lᵀ).
pub fn hessian_density_blocks(theta: &ThetaPoint, w: &SpdMatrix) -> Result<HessianBlocks> {
    let f = log_density(theta, w)?.exp();
    let h = hessian_log_density_blocks(theta, w)?;
    let g = grad_log_density(theta, w)?;
    let d = g.len() - 1;
    let ge = g.rows(0, d);
    let gn = g[d];
    Ok(HessianBlocks {
        eta_eta: (h.eta_eta + ge * ge.transpose()) * f,
        eta_nu: (h.eta_nu + ge * gn) * f,
        nu_nu: (h.nu_nu + gn * gn) * f,
    })
}
