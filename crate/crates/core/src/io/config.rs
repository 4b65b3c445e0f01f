use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::PriorHyper;
use crate::prior::{DpmPriorSpec, MfmPriorSpec};
use crate::sampler::{Init, ModelKind, SamplerConfig, ScanOrder};
use crate::simulation::{
    bundled_scales, choose_t_for_target_nu, load_scale_set, Balance, LargeSetting, MixtureSpec,
    Var1Spec,
};
use crate::spd::SpdMatrix;

/// Prior mean of ν behind the application Ψ₀ = (κ₀ − p − 1)/ν₀ · I.
pub const APPLICATION_NU_REF: f64 = 55.0;

/// Parses TOML, reporting `location:line` and the offending field on failure.
pub fn parse_toml<T: DeserializeOwned>(text: &str, location: &str) -> Result<T> {
    toml::from_str(text).map_err(|e| {
        let loc = match e.span() {
            Some(span) => {
                let line = text[..span.start.min(text.len())].matches('\n').count() + 1;
                format!("{location}:{line}")
            }
            None => location.to_string(),
        };
        Error::config(loc, e.message().trim().to_string())
    })
}

pub fn read_toml<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_toml(&text, &path.display().to_string())
}

fn missing(location: &str, field: &str) -> Error {
    Error::config(location, format!("missing field `{field}`"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelName {
    Mfm,
    Dpm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    /// 10000/4000 iterations, σ_ν = 1, Ψ₀ = I, κ₀ = ν_L = p + 2, ν_U = 50.
    Simulation,
    /// 20000/8000 iterations, σ_ν = 3, κ₀ = 12, ν ∈ (10, 100), Ψ₀ = (κ₀ − p − 1)/55 · I.
    Application,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitName {
    Singletons,
    RandomK,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScanName {
    Sequential,
    Random,
}

/// Sampler settings as read from a `fit` config. Every key is optional
/// except `seed`; [`FitConfig::resolve`] fills the rest from the preset.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelName>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<Preset>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub burn_in: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub thin: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub proposal_sd: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nu_lo: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nu_hi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub psi0: Option<Vec<Vec<f64>>>,
    /// Ψ₀ = c·I; ignored when `psi0` is given.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub psi0_scale: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nu_init: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub init: Option<InitName>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub init_k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scan: Option<ScanName>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
}

macro_rules! overlay {
    ($base:expr, $over:expr, $($f:ident),*) => {{
        let mut out = $base.clone();
        $( if $over.$f.is_some() { out.$f = $over.$f.clone(); } )*
        out
    }};
}

impl FitConfig {
    pub fn from_toml(text: &str, location: &str) -> Result<Self> {
        parse_toml(text, location)
    }

    /// Keys set in `over` replace those in `self`.
    pub fn overlay(&self, over: &FitConfig) -> FitConfig {
        overlay!(
            self, over, seed, model, preset, iterations, burn_in, thin, proposal_sd, kappa0,
            nu_lo, nu_hi, psi0, psi0_scale, nu_init, init, init_k, scan, gamma, lambda, alpha
        )
    }

    /// Builds the sampler configuration for dimension `p` and returns it
    /// with a fully explicit copy of the settings (every key filled in,
    /// Ψ₀ written out), which resolves to the same sampler configuration.
    pub fn resolve(&self, p: usize) -> Result<(SamplerConfig, FitConfig)> {
        let loc = "fit config";
        let seed = self.seed.ok_or_else(|| missing(loc, "seed"))?;
        let preset = self.preset.unwrap_or(Preset::Simulation);
        let pf = p as f64;
        let (iters, burn, sd, kappa0, lo, hi) = match preset {
            Preset::Simulation => (10_000, 4_000, 1.0, pf + 2.0, pf + 2.0, 50.0),
            Preset::Application => (20_000, 8_000, 3.0, 12.0, 10.0, 100.0),
        };
        let kappa0 = self.kappa0.unwrap_or(kappa0);
        let psi0 = match (&self.psi0, self.psi0_scale) {
            (Some(rows), _) => {
                if rows.len() != p {
                    return Err(Error::config(loc, format!("psi0 must be {p}x{p}")));
                }
                SpdMatrix::from_rows(rows).map_err(|e| Error::config(loc, format!("psi0: {e}")))?
            }
            (None, scale) => {
                let c = scale.unwrap_or(match preset {
                    Preset::Simulation => 1.0,
                    Preset::Application => (kappa0 - pf - 1.0) / APPLICATION_NU_REF,
                });
                if !(c > 0.0 && c.is_finite()) {
                    return Err(Error::config(loc, format!("psi0 scale must be positive, got {c}")));
                }
                SpdMatrix::scaled_identity(p, c)
            }
        };
        let prior = PriorHyper::new(
            psi0.clone(),
            kappa0,
            self.nu_lo.unwrap_or(lo),
            self.nu_hi.unwrap_or(hi),
        )?;
        let model_name = self.model.unwrap_or(ModelName::Mfm);
        let model = match model_name {
            ModelName::Mfm => ModelKind::Mfm(MfmPriorSpec::new(
                self.gamma.unwrap_or(1.0),
                self.lambda.unwrap_or(1.0),
            )?),
            ModelName::Dpm => ModelKind::Dpm(DpmPriorSpec::new(self.alpha.unwrap_or(1.0))?),
        };
        let init_name = self.init.unwrap_or(InitName::Singletons);
        let init = match init_name {
            InitName::Singletons => Init::Singletons,
            InitName::RandomK => {
                Init::KClusters(self.init_k.ok_or_else(|| missing(loc, "init_k"))?)
            }
        };
        let scan_name = self.scan.unwrap_or(ScanName::Sequential);
        let config = SamplerConfig {
            iterations: self.iterations.unwrap_or(iters),
            burn_in: self.burn_in.unwrap_or(burn),
            thin: self.thin.unwrap_or(1),
            proposal_sd: self.proposal_sd.unwrap_or(sd),
            seed,
            prior,
            model,
            init,
            nu_init: self.nu_init,
            scan: match scan_name {
                ScanName::Sequential => ScanOrder::Sequential,
                ScanName::Random => ScanOrder::Random,
            },
        };
        config.validate()?;
        let m = psi0.matrix();
        let explicit = FitConfig {
            seed: Some(seed),
            model: Some(model_name),
            preset: Some(preset),
            iterations: Some(config.iterations),
            burn_in: Some(config.burn_in),
            thin: Some(config.thin),
            proposal_sd: Some(config.proposal_sd),
            kappa0: Some(kappa0),
            nu_lo: Some(config.prior.nu_lo()),
            nu_hi: Some(config.prior.nu_hi()),
            psi0: Some((0..p).map(|i| m.row(i).iter().copied().collect()).collect()),
            psi0_scale: None,
            nu_init: Some(config.initial_nu()),
            init: Some(init_name),
            init_k: match config.init {
                Init::KClusters(k) => Some(k),
                _ => None,
            },
            scan: Some(scan_name),
            gamma: match model {
                ModelKind::Mfm(s) => Some(s.gamma),
                _ => None,
            },
            lambda: match model {
                ModelKind::Mfm(s) => Some(s.lambda),
                _ => None,
            },
            alpha: match model {
                ModelKind::Dpm(s) => Some(s.alpha),
                _ => None,
            },
        };
        Ok((config, explicit))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SettingName {
    #[default]
    Mixture,
    Large,
    Var1,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BalanceName {
    #[default]
    Balanced,
    Unbalanced,
}

/// A `simulate` config.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default)]
    pub setting: SettingName,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// Number of components; checked against the scale set.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k0: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nu: Option<f64>,
    #[serde(default)]
    pub balance: BalanceName,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub proportions: Option<Vec<f64>>,
    /// Name of a bundled scale set.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scales: Option<String>,
    /// Path to a scale-set file, relative to the config file.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scales_file: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma3_dof: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nu0: Option<f64>,
    /// Series length; chosen from `nu0` and `phi` when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<usize>,
}

/// What a resolved `simulate` config will generate.
#[derive(Debug, Clone, PartialEq)]
pub enum SimulationPlan {
    Mixture(MixtureSpec),
    Large { n: usize, setting: LargeSetting },
    Var1 {
        scales: Vec<SpdMatrix>,
        phi: f64,
        t: usize,
        nu0: f64,
        balance: Balance,
        n: usize,
    },
}

impl SimulateConfig {
    pub fn from_toml(text: &str, location: &str) -> Result<Self> {
        parse_toml(text, location)
    }

    pub fn overlay(&self, over: &SimulateConfig) -> SimulateConfig {
        let mut out = overlay!(self, over, seed, n, k0, nu, proportions, scales, scales_file, sigma3_dof, phi, nu0, t);
        if over.setting != SettingName::default() {
            out.setting = over.setting;
        }
        if over.balance != BalanceName::default() {
            out.balance = over.balance;
        }
        out
    }

    pub fn seed(&self) -> Result<u64> {
        self.seed.ok_or_else(|| missing("simulate config", "seed"))
    }

    /// Loads the scale matrices and checks the settings. `base_dir` anchors
    /// a relative `scales_file`.
    pub fn plan(&self, base_dir: &Path) -> Result<SimulationPlan> {
        let loc = "simulate config";
        self.seed()?;
        let n = self.n.unwrap_or(50);
        let default_set = match (self.setting, self.k0) {
            (SettingName::Large, _) => "large-block".to_string(),
            (_, Some(k)) => format!("small-k{k}"),
            _ => "small-k3".to_string(),
        };
        let scales = match (&self.scales_file, &self.scales) {
            (Some(_), Some(_)) => {
                return Err(Error::config(loc, "give either `scales` or `scales_file`, not both"))
            }
            (Some(file), None) => {
                let path = base_dir.join(file);
                let text = std::fs::read_to_string(&path)
                    .map_err(|e| Error::config(loc, format!("scales_file {}: {e}", path.display())))?;
                load_scale_set(&text)?.to_spd()?
            }
            (None, name) => bundled_scales(name.as_deref().unwrap_or(&default_set))?,
        };
        let k = scales.len();
        if self.setting != SettingName::Large {
            if let Some(k0) = self.k0 {
                if k0 != k {
                    return Err(Error::config(loc, format!("k0 = {k0} but the scale set has {k} matrices")));
                }
            }
        }
        let balance = match self.balance {
            BalanceName::Balanced => {
                if self.proportions.is_some() {
                    return Err(Error::config(loc, "`proportions` needs balance = \"unbalanced\""));
                }
                Balance::Balanced
            }
            BalanceName::Unbalanced => Balance::Proportions(match &self.proportions {
                Some(p) => p.clone(),
                None => match k {
                    3 => vec![0.2, 0.4, 0.4],
                    5 => vec![0.1, 0.1, 0.2, 0.3, 0.3],
                    _ => return Err(missing(loc, "proportions")),
                },
            }),
        };
        Ok(match self.setting {
            SettingName::Mixture => SimulationPlan::Mixture(MixtureSpec {
                components: scales,
                nu: self.nu.unwrap_or(10.0),
                balance,
                n,
            }),
            SettingName::Large => {
                if k < 2 {
                    return Err(Error::MissingScaleConfig(
                        "the large setting needs two fixed scale matrices".into(),
                    ));
                }
                let mut it = scales.into_iter();
                SimulationPlan::Large {
                    n,
                    setting: LargeSetting {
                        sigma1: it.next(),
                        sigma2: it.next(),
                        nu: self.nu.unwrap_or(15.0),
                        sigma3_dof: self.sigma3_dof.unwrap_or(24.0),
                    },
                }
            }
            SettingName::Var1 => {
                let phi = self.phi.ok_or_else(|| missing(loc, "phi"))?;
                let nu0 = self.nu0.unwrap_or(10.0);
                let t = match self.t {
                    Some(t) => t,
                    None => choose_t_for_target_nu(nu0, phi)?,
                };
                for s in &scales {
                    Var1Spec::new(phi, s.clone(), t, nu0)?;
                }
                SimulationPlan::Var1 { scales, phi, t, nu0, balance, n }
            }
        })
    }
}
