//! Wishart likelihood, inverse-Wishart prior and everything obtained by
//! integrating the cluster scale matrices out.
//!
//! Sampler-facing code works with the scale Σ; the calculus in [`calculus`]
//! works with the precision Λ = Σ⁻¹ and its half-vectorization.

pub mod calculus;
mod collapsed;
mod density;

pub use collapsed::{
    log_collapsed_cluster_marginal, log_posterior_predictive, log_prior_predictive,
    nu_log_full_conditional, posterior_iw_params,
};
pub use density::{inverse_wishart_log_density, wishart_log_density};
pub(crate) use collapsed::nu_log_fc_parts;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::spd::{log_det_of_sum, SpdMatrix};

/// Hyperparameters of Σ_k ~ IW_p(Ψ₀, κ₀) and ν ~ Uniform(ν_L, ν_U).
#[derive(Debug, Clone, PartialEq)]
pub struct PriorHyper {
    psi0: SpdMatrix,
    kappa0: f64,
    nu_lo: f64,
    nu_hi: f64,
}

impl PriorHyper {
    pub fn new(psi0: SpdMatrix, kappa0: f64, nu_lo: f64, nu_hi: f64) -> Result<Self> {
        let bound = psi0.dim() as f64 - 1.0;
        if !(kappa0 > bound) || !kappa0.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "kappa0 = {kappa0} must exceed p - 1 = {bound}"
            )));
        }
        if !(nu_lo > bound) {
            return Err(Error::InvalidConfig(format!(
                "nu_lo = {nu_lo} must exceed p - 1 = {bound}"
            )));
        }
        if !(nu_hi > nu_lo) || !nu_hi.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "nu_hi = {nu_hi} must be finite and exceed nu_lo = {nu_lo}"
            )));
        }
        Ok(PriorHyper {
            psi0,
            kappa0,
            nu_lo,
            nu_hi,
        })
    }

    /// Ψ₀ = I_p, κ₀ = p + 2, ν ∈ [p + 2, 50]: the simulation-study settings.
    pub fn simulation_defaults(p: usize) -> Self {
        let pf = p as f64;
        PriorHyper::new(SpdMatrix::identity(p), pf + 2.0, pf + 2.0, 50.0)
            .expect("defaults are valid for p < 48")
    }

    pub fn dim(&self) -> usize {
        self.psi0.dim()
    }

    pub fn psi0(&self) -> &SpdMatrix {
        &self.psi0
    }

    pub fn kappa0(&self) -> f64 {
        self.kappa0
    }

    pub fn nu_lo(&self) -> f64 {
        self.nu_lo
    }

    pub fn nu_hi(&self) -> f64 {
        self.nu_hi
    }

    pub fn nu_support_contains(&self, nu: f64) -> bool {
        nu >= self.nu_lo && nu <= self.nu_hi
    }
}

pub(crate) fn check_dof(nu: f64, p: usize) -> Result<()> {
    if nu > p as f64 - 1.0 && nu.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidDof { dof: nu, dim: p })
    }
}

/// Sufficient statistics of one cluster: its size n_c, the scatter
/// S_c = Σ W_i over members, and the cached log|Ψ₀ + S_c|.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterSuffStat {
    count: usize,
    scatter: DMatrix<f64>,
    log_det_posterior: f64,
}

impl ClusterSuffStat {
    pub fn empty(hyper: &PriorHyper) -> Self {
        let p = hyper.dim();
        ClusterSuffStat {
            count: 0,
            scatter: DMatrix::zeros(p, p),
            log_det_posterior: hyper.psi0().log_det(),
        }
    }

    pub fn from_members<'a, I>(members: I, hyper: &PriorHyper) -> Result<Self>
    where
        I: IntoIterator<Item = &'a SpdMatrix>,
    {
        let mut stat = Self::empty(hyper);
        for w in members {
            stat.add(w, hyper)?;
        }
        Ok(stat)
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn scatter(&self) -> &DMatrix<f64> {
        &self.scatter
    }

    /// log|Ψ₀ + S_c|.
    pub fn log_det_posterior(&self) -> f64 {
        self.log_det_posterior
    }

    pub fn add(&mut self, w: &SpdMatrix, hyper: &PriorHyper) -> Result<()> {
        crate::spd::check_dims(self.scatter.nrows(), w.dim())?;
        self.scatter += w.matrix();
        self.count += 1;
        self.refresh(hyper)
    }

    /// Removes a member. An emptied cluster has its scatter reset to exactly 0.
    pub fn remove(&mut self, w: &SpdMatrix, hyper: &PriorHyper) -> Result<()> {
        crate::spd::check_dims(self.scatter.nrows(), w.dim())?;
        if self.count == 0 {
            return Err(Error::Domain("cannot remove from an empty cluster".into()));
        }
        self.count -= 1;
        if self.count == 0 {
            self.scatter.fill(0.0);
        } else {
            self.scatter -= w.matrix();
        }
        self.refresh(hyper)
    }

    fn refresh(&mut self, hyper: &PriorHyper) -> Result<()> {
        let p = self.scatter.nrows();
        let mut scratch = Vec::with_capacity(p * p);
        self.log_det_posterior = log_det_of_sum(
            p,
            hyper.psi0().matrix().as_slice(),
            self.scatter.as_slice(),
            &mut scratch,
        )
        .ok_or(Error::NotPositiveDefinite { pivot: 0 })?;
        Ok(())
    }
}
