use std::f64::consts::LN_2;

use super::check_dof;
use crate::error::Result;
use crate::spd::{check_dims, trace_product, SpdMatrix};
use crate::special::log_multigamma_unchecked;

/// log f(W | Σ, ν) for W ~ W_p(Σ, ν).
pub fn wishart_log_density(w: &SpdMatrix, sigma: &SpdMatrix, nu: f64) -> Result<f64> {
    let p = sigma.dim();
    check_dims(p, w.dim())?;
    check_dof(nu, p)?;
    let pf = p as f64;
    Ok(-0.5 * nu * pf * LN_2 - 0.5 * nu * sigma.log_det() - log_multigamma_unchecked(p, nu / 2.0)
        + 0.5 * (nu - pf - 1.0) * w.log_det()
        - 0.5 * trace_product(&sigma.inverse(), w)?)
}

/// log p(Σ | Ψ, κ) for Σ ~ IW_p(Ψ, κ).
pub fn inverse_wishart_log_density(sigma: &SpdMatrix, psi: &SpdMatrix, kappa: f64) -> Result<f64> {
    let p = psi.dim();
    check_dims(p, sigma.dim())?;
    check_dof(kappa, p)?;
    let pf = p as f64;
    Ok(0.5 * kappa * psi.log_det() - 0.5 * kappa * pf * LN_2 - log_multigamma_unchecked(p, kappa / 2.0)
        - 0.5 * (kappa + pf + 1.0) * sigma.log_det()
        - 0.5 * trace_product(psi, &sigma.inverse())?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::random::rng_from_seed;
    use crate::spd::sample_wishart;
    use std::f64::consts::PI;

    #[test]
    fn chi_squared_reduction() {
        let one = SpdMatrix::identity(1);
        let v = wishart_log_density(&one, &one, 1.0).unwrap();
        let expected = (-0.5f64).exp() / (2.0 * PI).sqrt();
        assert!((v - expected.ln()).abs() < 1e-13);
        assert!((v + 1.41894).abs() < 1e-5);
    }

    #[test]
    fn closed_form_p2() {
        let i2 = SpdMatrix::identity(2);
        let v = wishart_log_density(&i2, &i2, 3.0).unwrap();
        let expected = ((-1.0f64).exp() / (4.0 * PI)).ln();
        assert!((v - expected).abs() < 1e-13);
        assert!((v + 3.53102).abs() < 1e-5);
    }

    #[test]
    fn errors() {
        let i2 = SpdMatrix::identity(2);
        let i3 = SpdMatrix::identity(3);
        assert!(matches!(
            wishart_log_density(&i2, &i3, 5.0),
            Err(Error::DimMismatch { .. })
        ));
        assert!(matches!(
            wishart_log_density(&i2, &i2, 1.0),
            Err(Error::InvalidDof { .. })
        ));
        assert!(matches!(
            inverse_wishart_log_density(&i3, &i2, 5.0),
            Err(Error::DimMismatch { .. })
        ));
    }

    #[test]
    fn importance_sampling_normalization() {
        // E_q[f/q] = 1 with q a wider Wishart proposal.
        let mut rng = rng_from_seed(17);
        let sigma = SpdMatrix::from_rows(&[vec![1.0, 0.4], vec![0.4, 0.8]]).unwrap();
        let nu = 6.0;
        let q_scale = SpdMatrix::from_rows(&[vec![1.5, 0.3], vec![0.3, 1.2]]).unwrap();
        let q_nu = 5.0;
        let n = 40_000;
        let ratios: Vec<f64> = (0..n)
            .map(|_| {
                let w = sample_wishart(&q_scale, q_nu, &mut rng).unwrap();
                (wishart_log_density(&w, &sigma, nu).unwrap()
                    - wishart_log_density(&w, &q_scale, q_nu).unwrap())
                .exp()
            })
            .collect();
        let mean = ratios.iter().sum::<f64>() / n as f64;
        let var = ratios.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        let se = (var / n as f64).sqrt();
        assert!((mean - 1.0).abs() < 4.0 * se, "mean {mean} se {se}");
    }

    #[test]
    fn inverse_gamma_reduction() {
        let psi = SpdMatrix::diagonal(&[2.0]).unwrap();
        let v = inverse_wishart_log_density(&SpdMatrix::identity(1), &psi, 3.0).unwrap();
        // IG(shape 1.5, rate 1) at 1: e^{-1} / Γ(1.5)
        let expected = -1.0 - crate::special::log_gamma(1.5).unwrap();
        assert!((v - expected).abs() < 1e-13);
        assert!((v + 0.8792178).abs() < 1e-6);
    }

    #[test]
    fn change_of_variables_against_wishart() {
        // Σ ~ IW(Ψ, κ)  <=>  Σ⁻¹ ~ W(Ψ⁻¹, κ), Jacobian |Σ|^{-(p+1)}
        let mut rng = rng_from_seed(4);
        for p in [1usize, 3] {
            let psi = sample_wishart(&SpdMatrix::identity(p), p as f64 + 3.0, &mut rng).unwrap();
            let sigma = sample_wishart(&SpdMatrix::identity(p), p as f64 + 1.0, &mut rng).unwrap();
            let kappa = p as f64 + 2.5;
            let lhs = inverse_wishart_log_density(&sigma, &psi, kappa).unwrap();
            let rhs = wishart_log_density(&sigma.inverse(), &psi.inverse(), kappa).unwrap()
                - (p as f64 + 1.0) * sigma.log_det();
            assert!((lhs - rhs).abs() < 1e-9 * lhs.abs().max(1.0), "p={p}: {lhs} vs {rhs}");
        }
    }
}
