use super::{check_dof, ClusterSuffStat, PriorHyper};
use crate::error::Result;
use crate::spd::{check_dims, SpdMatrix};
use crate::special::log_multigamma_unchecked as lmg;

/// log m(W | ν): the Wishart likelihood with Σ integrated against IW(Ψ₀, κ₀).
pub fn log_prior_predictive(w: &SpdMatrix, nu: f64, hyper: &PriorHyper) -> Result<f64> {
    let p = hyper.dim();
    check_dims(p, w.dim())?;
    check_dof(nu, p)?;
    let k0 = hyper.kappa0();
    let post = hyper.psi0().add(w)?;
    Ok(lmg(p, (nu + k0) / 2.0) - lmg(p, nu / 2.0) - lmg(p, k0 / 2.0)
        + 0.5 * (nu - p as f64 - 1.0) * w.log_det()
        + 0.5 * k0 * hyper.psi0().log_det()
        - 0.5 * (nu + k0) * post.log_det())
}

/// log p(W | cluster, ν) where `stat` holds the other members of the cluster
/// (n_{c,−i} and S_{c,−i}). An empty `stat` gives the prior predictive.
pub fn log_posterior_predictive(
    w: &SpdMatrix,
    stat: &ClusterSuffStat,
    nu: f64,
    hyper: &PriorHyper,
) -> Result<f64> {
    if stat.count() == 0 {
        return log_prior_predictive(w, nu, hyper);
    }
    let p = hyper.dim();
    check_dims(p, w.dim())?;
    check_dof(nu, p)?;
    let k0 = hyper.kappa0();
    let n = stat.count() as f64;
    let a_old = (k0 + n * nu) / 2.0;
    let a_new = (k0 + (n + 1.0) * nu) / 2.0;
    let updated = SpdMatrix::new(hyper.psi0().matrix() + stat.scatter() + w.matrix())?;
    Ok(lmg(p, a_new) - lmg(p, a_old) - lmg(p, nu / 2.0)
        + 0.5 * (nu - p as f64 - 1.0) * w.log_det()
        + a_old * stat.log_det_posterior()
        - a_new * updated.log_det())
}

/// log m({W_i}_{i ∈ c} | ν), the joint collapsed likelihood of one cluster.
/// `sum_log_det_members` is Σ log|W_i| over the members. Empty clusters give 0.
pub fn log_collapsed_cluster_marginal(
    stat: &ClusterSuffStat,
    sum_log_det_members: f64,
    nu: f64,
    hyper: &PriorHyper,
) -> Result<f64> {
    let p = hyper.dim();
    check_dof(nu, p)?;
    if stat.count() == 0 {
        return Ok(0.0);
    }
    let k0 = hyper.kappa0();
    let n = stat.count() as f64;
    let a_post = (k0 + n * nu) / 2.0;
    Ok(lmg(p, a_post) - lmg(p, k0 / 2.0) - n * lmg(p, nu / 2.0)
        + 0.5 * k0 * hyper.psi0().log_det()
        + 0.5 * (nu - p as f64 - 1.0) * sum_log_det_members
        - a_post * stat.log_det_posterior())
}

/// Conjugate update: Σ_c | cluster data, ν ~ IW(Ψ₀ + S_c, κ₀ + n_c ν).
pub fn posterior_iw_params(
    stat: &ClusterSuffStat,
    nu: f64,
    hyper: &PriorHyper,
) -> Result<(SpdMatrix, f64)> {
    let scale = SpdMatrix::new(hyper.psi0().matrix() + stat.scatter())?;
    Ok((scale, hyper.kappa0() + stat.count() as f64 * nu))
}

/// Log of the collapsed full conditional of ν up to an additive constant.
/// Returns −∞ outside [ν_L, ν_U].
pub fn nu_log_full_conditional(
    nu: f64,
    clusters: &[ClusterSuffStat],
    sum_log_det_all: f64,
    hyper: &PriorHyper,
) -> f64 {
    nu_log_fc_parts(
        nu,
        clusters.iter().map(|c| (c.count(), c.log_det_posterior())),
        sum_log_det_all,
        hyper,
    )
}

/// Same as [`nu_log_full_conditional`] over (n_c, log|Ψ₀ + S_c|) pairs.
pub(crate) fn nu_log_fc_parts(
    nu: f64,
    parts: impl Iterator<Item = (usize, f64)>,
    sum_log_det_all: f64,
    hyper: &PriorHyper,
) -> f64 {
    if !hyper.nu_support_contains(nu) {
        return f64::NEG_INFINITY;
    }
    let p = hyper.dim();
    let k0 = hyper.kappa0();
    let mut n = 0usize;
    let mut gamma_terms = 0.0;
    let mut weighted_log_det = 0.0;
    for (count, ld) in parts.filter(|c| c.0 > 0) {
        n += count;
        gamma_terms += lmg(p, (k0 + count as f64 * nu) / 2.0);
        weighted_log_det += count as f64 * ld;
    }
    gamma_terms - n as f64 * lmg(p, nu / 2.0) + 0.5 * nu * (sum_log_det_all - weighted_log_det)
}
