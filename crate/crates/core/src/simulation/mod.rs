//! Synthetic data: Wishart mixtures, the 12×12 block design and VAR(1)
//! lag-0 covariances, plus the moment formulas used to calibrate them.

mod scales;
mod var1;

pub use scales::{bundled_scales, load_scale_set, ScaleSet, BUNDLED_SCALE_NAMES};
pub use var1::{
    choose_t_for_target_nu, effective_nu, generate_var1_dataset, sample_cov_cov_oracle, Var1Spec,
};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spd::{sample_wishart, standardize_to_correlation, SpdMatrix};

/// How n observations are split across components.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Balance {
    Balanced,
    Proportions(Vec<f64>),
}

/// Sizes differing by at most one; the first n mod k clusters get the extra one.
pub fn balanced_sizes(n: usize, k: usize) -> Result<Vec<usize>> {
    if k == 0 || k > n {
        return Err(Error::BadK { k, n });
    }
    Ok((0..k).map(|c| n / k + usize::from(c < n % k)).collect())
}

/// floor(n·πₖ) per cluster, then the leftover units go to the largest
/// remainders (lowest index first on ties).
pub fn proportional_sizes(n: usize, proportions: &[f64]) -> Result<Vec<usize>> {
    let total: f64 = proportions.iter().sum();
    if proportions.is_empty()
        || proportions.iter().any(|&p| !(p > 0.0) || !p.is_finite())
        || (total - 1.0).abs() > 1e-9
    {
        return Err(Error::InvalidConfig(format!(
            "proportions must be positive and sum to 1, got {proportions:?}"
        )));
    }
    let exact: Vec<f64> = proportions.iter().map(|p| p * n as f64).collect();
    let mut sizes: Vec<usize> = exact.iter().map(|x| (x + 1e-9).floor() as usize).collect();
    let assigned: usize = sizes.iter().sum();
    let mut order: Vec<usize> = (0..sizes.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = exact[a] - sizes[a] as f64;
        let rb = exact[b] - sizes[b] as f64;
        rb.partial_cmp(&ra).unwrap().then(a.cmp(&b))
    });
    for &c in order.iter().take(n.saturating_sub(assigned)) {
        sizes[c] += 1;
    }
    Ok(sizes)
}

/// Components Σₖ with a shared ν.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureSpec {
    pub components: Vec<SpdMatrix>,
    pub nu: f64,
    pub balance: Balance,
    pub n: usize,
}

impl MixtureSpec {
    pub fn sizes(&self) -> Result<Vec<usize>> {
        let k = self.components.len();
        match &self.balance {
            Balance::Balanced => balanced_sizes(self.n, k),
            Balance::Proportions(pr) => {
                if pr.len() != k {
                    return Err(Error::LengthMismatch {
                        expected: k,
                        found: pr.len(),
                    });
                }
                proportional_sizes(self.n, pr)
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let p = self
            .components
            .first()
            .ok_or_else(|| Error::InvalidConfig("mixture has no components".into()))?
            .dim();
        if let Some((index, c)) = self.components.iter().enumerate().find(|(_, c)| c.dim() != p) {
            return Err(Error::HeterogeneousDims {
                index,
                expected: p,
                found: c.dim(),
            });
        }
        if !(self.nu > p as f64 - 1.0) {
            return Err(Error::InvalidDof { dof: self.nu, dim: p });
        }
        Ok(())
    }
}

/// Draws the sized clusters component by component, then shuffles the
/// observation order. Returns (data, true labels).
pub fn generate_wishart_mixture<R: Rng + ?Sized>(
    spec: &MixtureSpec,
    rng: &mut R,
) -> Result<(Vec<SpdMatrix>, Vec<usize>)> {
    spec.validate()?;
    let sizes = spec.sizes()?;
    let mut pairs = Vec::with_capacity(spec.n);
    for (k, (&size, scale)) in sizes.iter().zip(&spec.components).enumerate() {
        for _ in 0..size {
            pairs.push((sample_wishart(scale, spec.nu, rng)?, k));
        }
    }
    pairs.shuffle(rng);
    Ok(pairs.into_iter().unzip())
}

/// The 12×12 design: two fixed block-sparse scales and a third redrawn per
/// replicate as the correlation of a W₁₂(I, 24) draw.
#[derive(Debug, Clone, PartialEq)]
pub struct LargeSetting {
    pub sigma1: Option<SpdMatrix>,
    pub sigma2: Option<SpdMatrix>,
    pub nu: f64,
    pub sigma3_dof: f64,
}

impl LargeSetting {
    /// Scales from the bundled `large-block` set, ν = 15, Σ₃ from W(I, 24).
    pub fn bundled() -> Self {
        let mut set = bundled_scales("large-block").expect("bundled scales parse");
        let sigma2 = set.pop();
        let sigma1 = set.pop();
        LargeSetting {
            sigma1,
            sigma2,
            nu: 15.0,
            sigma3_dof: 24.0,
        }
    }
}

pub fn generate_large_setting<R: Rng + ?Sized>(
    n: usize,
    setting: &LargeSetting,
    rng: &mut R,
) -> Result<(Vec<SpdMatrix>, Vec<usize>, SpdMatrix)> {
    let s1 = setting
        .sigma1
        .clone()
        .ok_or_else(|| Error::MissingScaleConfig("sigma1 of the large setting".into()))?;
    let s2 = setting
        .sigma2
        .clone()
        .ok_or_else(|| Error::MissingScaleConfig("sigma2 of the large setting".into()))?;
    if n < 3 {
        return Err(Error::BadK { k: 3, n });
    }
    let p = s1.dim();
    let raw = sample_wishart(&SpdMatrix::identity(p), setting.sigma3_dof, rng)?;
    let s3 = standardize_to_correlation(raw.matrix())?;
    let spec = MixtureSpec {
        components: vec![s1, s2, s3.clone()],
        nu: setting.nu,
        balance: Balance::Balanced,
        n,
    };
    let (data, labels) = generate_wishart_mixture(&spec, rng)?;
    Ok((data, labels, s3))
}
