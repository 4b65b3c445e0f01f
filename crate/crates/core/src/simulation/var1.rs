use nalgebra::DVector;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

use super::{Balance, MixtureSpec};
use crate::error::{Error, Result};
use crate::spd::SpdMatrix;

/// One VAR(1) component: xₜ = φxₜ₋₁ + εₜ with stationary covariance `scale`.
#[derive(Debug, Clone, PartialEq)]
pub struct Var1Spec {
    pub phi: f64,
    pub scale: SpdMatrix,
    pub t: usize,
    pub nu0: f64,
}

impl Var1Spec {
    pub fn new(phi: f64, scale: SpdMatrix, t: usize, nu0: f64) -> Result<Self> {
        check_phi(phi)?;
        if t < scale.dim() {
            return Err(Error::TooShortSeries { t, p: scale.dim() });
        }
        if !(nu0 > 0.0 && nu0.is_finite()) {
            return Err(Error::InvalidConfig(format!("nu0 must be positive, got {nu0}")));
        }
        Ok(Var1Spec { phi, scale, t, nu0 })
    }

    /// W = (ν₀/T) Σₜ xₜxₜᵀ from one simulated series; E(W) = ν₀Σ.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<SpdMatrix> {
        check_phi(self.phi)?;
        let p = self.scale.dim();
        if self.t < p {
            return Err(Error::TooShortSeries { t: self.t, p });
        }
        let chol = self.scale.cholesky_factor();
        let innov_sd = (1.0 - self.phi * self.phi).sqrt();
        let mut z = DVector::zeros(p);
        let normal = |z: &mut DVector<f64>, rng: &mut R| {
            for v in z.iter_mut() {
                *v = rng.sample(StandardNormal);
            }
        };
        normal(&mut z, rng);
        let mut x = chol * &z;
        let mut scatter = &x * x.transpose();
        for _ in 1..self.t {
            normal(&mut z, rng);
            x = self.phi * x + innov_sd * (chol * &z);
            scatter.ger(1.0, &x, &x, 1.0);
        }
        scatter *= self.nu0 / self.t as f64;
        let sym = (&scatter + scatter.transpose()) * 0.5;
        SpdMatrix::new(sym)
    }
}

fn check_phi(phi: f64) -> Result<()> {
    if phi.abs() < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("|phi| must be < 1, got {phi}")))
    }
}

/// n observations from VAR(1) components sharing φ, T and ν₀, shuffled.
pub fn generate_var1_dataset<R: Rng + ?Sized>(
    scales: &[SpdMatrix],
    phi: f64,
    t: usize,
    nu0: f64,
    balance: Balance,
    n: usize,
    rng: &mut R,
) -> Result<(Vec<SpdMatrix>, Vec<usize>)> {
    let specs = scales
        .iter()
        .map(|s| Var1Spec::new(phi, s.clone(), t, nu0))
        .collect::<Result<Vec<_>>>()?;
    let sizes = MixtureSpec {
        components: scales.to_vec(),
        nu: nu0,
        balance,
        n,
    }
    .sizes()?;
    let mut pairs = Vec::with_capacity(n);
    for (k, (spec, &size)) in specs.iter().zip(&sizes).enumerate() {
        for _ in 0..size {
            pairs.push((spec.draw(rng)?, k));
        }
    }
    pairs.shuffle(rng);
    Ok(pairs.into_iter().unzip())
}

/// ν_eff = T / (1 + 2 Σ_{h=1}^{T−1} (1 − h/T) φ^{2h}).
pub fn effective_nu(t: usize, phi: f64) -> Result<f64> {
    check_phi(phi)?;
    if t == 0 {
        return Err(Error::Domain("series length must be at least 1".into()));
    }
    let tf = t as f64;
    let rho = phi * phi;
    let mut power = 1.0;
    let mut sum = 0.0;
    for h in 1..t {
        power *= rho;
        sum += (1.0 - h as f64 / tf) * power;
    }
    Ok(tf / (1.0 + 2.0 * sum))
}

/// The T whose ν_eff lies nearest to ν₀; a tie goes to the larger T.
pub fn choose_t_for_target_nu(nu0: f64, phi: f64) -> Result<usize> {
    check_phi(phi)?;
    if !(nu0 >= 1.0 && nu0.is_finite()) {
        return Err(Error::Domain(format!("target nu0 must be >= 1, got {nu0}")));
    }
    let mut prev = effective_nu(1, phi)?;
    if prev >= nu0 {
        return Ok(1);
    }
    let mut t = 1usize;
    loop {
        t += 1;
        let cur = effective_nu(t, phi)?;
        if cur >= nu0 {
            return Ok(if cur - nu0 <= nu0 - prev { t } else { t - 1 });
        }
        if t > 100_000_000 {
            return Err(Error::NonConvergence(format!(
                "no series length reaches nu_eff = {nu0} at phi = {phi}"
            )));
        }
        prev = cur;
    }
}

/// Cov(Σ̂ᵢⱼ, Σ̂ᵣₛ) for the lag-0 sample covariance of a Gaussian VAR(1) series:
/// (ΣᵢᵣΣⱼₛ + ΣᵢₛΣⱼᵣ) / ν_eff(T, φ).
pub fn sample_cov_cov_oracle(
    sigma: &SpdMatrix,
    phi: f64,
    t: usize,
    (i, j, r, s): (usize, usize, usize, usize),
) -> Result<f64> {
    let p = sigma.dim();
    if let Some(&bad) = [i, j, r, s].iter().find(|&&x| x >= p) {
        return Err(Error::IndexOutOfRange(format!("index {bad} for dimension {p}")));
    }
    let pairing = sigma.get(i, r) * sigma.get(j, s) + sigma.get(i, s) * sigma.get(j, r);
    Ok(pairing / effective_nu(t, phi)?)
}
