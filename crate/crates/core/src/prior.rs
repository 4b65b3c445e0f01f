//! Partition priors: the mixture-of-finite-mixtures prior with its V_n(t)
//! coefficients, and the Dirichlet-process (Chinese restaurant) prior.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::ln_gamma_unchecked as lgamma;

pub const DEFAULT_VN_TOL: f64 = 1e-12;
const STOP_RUN: usize = 30;
const MAX_K: usize = 1_000_000;

/// K − 1 ~ Poisson(λ), π | K ~ Dirichlet_K(γ, …, γ).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MfmPriorSpec {
    pub gamma: f64,
    pub lambda: f64,
}

impl Default for MfmPriorSpec {
    fn default() -> Self {
        MfmPriorSpec {
            gamma: 1.0,
            lambda: 1.0,
        }
    }
}

impl MfmPriorSpec {
    pub fn new(gamma: f64, lambda: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) || !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "MFM prior needs gamma > 0 and lambda > 0, got gamma = {gamma}, lambda = {lambda}"
            )));
        }
        Ok(MfmPriorSpec { gamma, lambda })
    }

    /// log p_K(k) for the shifted Poisson: −λ + (k−1) log λ − log Γ(k).
    pub fn log_pk(&self, k: usize) -> Result<f64> {
        if k < 1 {
            return Err(Error::Domain("p_K is supported on k >= 1".into()));
        }
        Ok(self.log_pk_unchecked(k))
    }

    fn log_pk_unchecked(&self, k: usize) -> f64 {
        let kf = k as f64;
        -self.lambda + (kf - 1.0) * self.lambda.ln() - lgamma(kf)
    }

    /// The log V_n table for this prior with the default tolerance.
    pub fn log_vn_table(&self, n: usize) -> Result<LogVnTable> {
        compute_log_vn(n, self.gamma, |k| self.log_pk_unchecked(k), DEFAULT_VN_TOL)
    }
}

/// Concentration α of the Chinese restaurant process.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DpmPriorSpec {
    pub alpha: f64,
}

impl Default for DpmPriorSpec {
    fn default() -> Self {
        DpmPriorSpec { alpha: 1.0 }
    }
}

impl DpmPriorSpec {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidConfig(format!("DPM alpha must be > 0, got {alpha}")));
        }
        Ok(DpmPriorSpec { alpha })
    }
}

/// log V_n(t) for t = 1..=n+1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogVnTable {
    pub n: usize,
    pub values: Vec<f64>,
    /// Largest k reached by any of the truncated series.
    pub truncation_k: usize,
    /// Largest relative size of the last summed term over all t.
    pub tail_bound: f64,
}

impl LogVnTable {
    pub fn log_vn(&self, t: usize) -> Result<f64> {
        if t == 0 || t > self.values.len() {
            return Err(Error::TableMissing {
                t,
                max: self.values.len(),
            });
        }
        Ok(self.values[t - 1])
    }
}

/// V_n(t) = Σ_{k ≥ t} k_(t) / (γk)^(n) · p_K(k), summed in log space.
///
/// Each series stops once `STOP_RUN` consecutive terms are below `tol`
/// relative to the running total.
pub fn compute_log_vn(
    n: usize,
    gamma: f64,
    log_pk: impl Fn(usize) -> f64,
    tol: f64,
) -> Result<LogVnTable> {
    if n == 0 {
        return Err(Error::Domain("V_n needs n >= 1".into()));
    }
    if !(gamma > 0.0) {
        return Err(Error::Domain(format!("gamma must be > 0, got {gamma}")));
    }
    let log_tol = tol.ln();
    let nf = n as f64;
    let mut values = Vec::with_capacity(n + 1);
    let mut truncation_k = 0;
    let mut tail_bound: f64 = 0.0;
    for t in 1..=n + 1 {
        let tf = t as f64;
        let mut total = f64::NEG_INFINITY;
        let mut small_run = 0;
        let mut k = t;
        let mut last_rel;
        loop {
            if k > MAX_K {
                return Err(Error::NonConvergence(format!(
                    "V_{n}({t}) series still contributing at k = {k}"
                )));
            }
            let kf = k as f64;
            let term = lgamma(kf + 1.0) - lgamma(kf - tf + 1.0) + lgamma(gamma * kf)
                - lgamma(gamma * kf + nf)
                + log_pk(k);
            total = log_add(total, term);
            last_rel = term - total;
            if last_rel < log_tol || term == f64::NEG_INFINITY {
                small_run += 1;
                if small_run >= STOP_RUN {
                    break;
                }
            } else {
                small_run = 0;
            }
            k += 1;
        }
        if !total.is_finite() {
            return Err(Error::NonConvergence(format!("log V_{n}({t}) is not finite")));
        }
        truncation_k = truncation_k.max(k);
        tail_bound = tail_bound.max(last_rel.exp());
        values.push(total);
    }
    Ok(LogVnTable {
        n,
        values,
        truncation_k,
        tail_bound,
    })
}

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// Prior part of the label full conditional.
///
/// `size` is n_{c,−i} for an existing cluster and `k_star` the number of
/// occupied clusters once observation i has been removed.
pub trait LabelWeights {
    fn log_existing(&self, size: usize) -> f64;
    fn log_new(&self, k_star: usize) -> Result<f64>;
}

impl<T: LabelWeights + ?Sized> LabelWeights for &T {
    fn log_existing(&self, size: usize) -> f64 {
        (**self).log_existing(size)
    }
    fn log_new(&self, k_star: usize) -> Result<f64> {
        (**self).log_new(k_star)
    }
}

/// Existing clusters ∝ n_{c,−i} + γ, new cluster ∝ γ V_n(K*+1)/V_n(K*).
#[derive(Debug, Clone)]
pub struct MfmWeights {
    gamma: f64,
    log_gamma: f64,
    table: LogVnTable,
}

impl MfmWeights {
    pub fn new(spec: &MfmPriorSpec, table: LogVnTable) -> Self {
        MfmWeights {
            gamma: spec.gamma,
            log_gamma: spec.gamma.ln(),
            table,
        }
    }

    pub fn table(&self) -> &LogVnTable {
        &self.table
    }
}

impl LabelWeights for MfmWeights {
    fn log_existing(&self, size: usize) -> f64 {
        (size as f64 + self.gamma).ln()
    }

    fn log_new(&self, k_star: usize) -> Result<f64> {
        if k_star == 0 {
            // nothing else to choose from; any finite value normalizes to 1
            return Ok(0.0);
        }
        Ok(self.log_gamma + self.table.log_vn(k_star + 1)? - self.table.log_vn(k_star)?)
    }
}

/// Existing clusters ∝ n_{c,−i}, new cluster ∝ α.
#[derive(Debug, Clone, Copy)]
pub struct DpmWeights {
    log_alpha: f64,
}

impl DpmWeights {
    pub fn new(spec: &DpmPriorSpec) -> Self {
        DpmWeights {
            log_alpha: spec.alpha.ln(),
        }
    }
}

impl LabelWeights for DpmWeights {
    fn log_existing(&self, size: usize) -> f64 {
        (size as f64).ln()
    }

    fn log_new(&self, _k_star: usize) -> Result<f64> {
        Ok(self.log_alpha)
    }
}

/// Unnormalized log weights for `existing` (cluster id, n_{c,−i}) pairs,
/// followed by one entry for a new cluster. `k_star` must equal
/// `existing.len()`.
pub fn mfm_label_weights(
    existing: &[(usize, usize)],
    k_star: usize,
    spec: &MfmPriorSpec,
    table: &LogVnTable,
) -> Result<Vec<f64>> {
    if k_star != existing.len() {
        return Err(Error::LengthMismatch {
            expected: existing.len(),
            found: k_star,
        });
    }
    let mut out: Vec<f64> = existing
        .iter()
        .map(|&(_, s)| (s as f64 + spec.gamma).ln())
        .collect();
    let new = if k_star == 0 {
        0.0
    } else {
        spec.gamma.ln() + table.log_vn(k_star + 1)? - table.log_vn(k_star)?
    };
    out.push(new);
    Ok(out)
}

pub fn dpm_label_weights(existing: &[(usize, usize)], spec: &DpmPriorSpec) -> Vec<f64> {
    let w = DpmWeights::new(spec);
    let mut out: Vec<f64> = existing.iter().map(|&(_, s)| w.log_existing(s)).collect();
    out.push(spec.alpha.ln());
    out
}
