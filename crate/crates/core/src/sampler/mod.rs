//! Collapsed Metropolis–Hastings-within-Gibbs sampler.
//!
//! Each iteration sweeps the labels with the cluster scales and mixing
//! weights integrated out, then takes one random-walk step on the shared ν.
//! The partition prior only enters through a [`LabelWeights`] provider, so
//! MFM and DPM runs share every other line of code.

mod chain;
mod state;

pub use chain::Chain;
pub use state::{canonicalize, validate_observations, ClusterState, Init};

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{posterior_iw_params, PriorHyper};
use crate::prior::{DpmPriorSpec, DpmWeights, LabelWeights, MfmPriorSpec, MfmWeights};
use crate::random::rng_from_seed;
use crate::spd::{sample_inverse_wishart, SpdMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelKind {
    Mfm(MfmPriorSpec),
    Dpm(DpmPriorSpec),
}

impl ModelKind {
    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::Mfm(_) => "mfm",
            ModelKind::Dpm(_) => "dpm",
        }
    }
}

/// Order in which labels are visited within a sweep.
#[derive(Debug, Clone, PartialEq)]
pub enum ScanOrder {
    /// i = 0, 1, …, n−1 every sweep.
    Sequential,
    /// A fresh uniform permutation every sweep.
    Random,
    /// The same explicit permutation every sweep.
    Fixed(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplerConfig {
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub proposal_sd: f64,
    pub seed: u64,
    pub prior: PriorHyper,
    pub model: ModelKind,
    pub init: Init,
    /// Starting ν; the midpoint of the prior support when absent.
    pub nu_init: Option<f64>,
    pub scan: ScanOrder,
}

impl SamplerConfig {
    /// 10000 iterations, 4000 burn-in, σ_ν = 1, singletons, Ψ₀ = I, κ₀ = ν_L = p + 2, ν_U = 50.
    pub fn simulation_defaults(p: usize, seed: u64) -> Self {
        SamplerConfig {
            iterations: 10_000,
            burn_in: 4_000,
            thin: 1,
            proposal_sd: 1.0,
            seed,
            prior: PriorHyper::simulation_defaults(p),
            model: ModelKind::Mfm(MfmPriorSpec::default()),
            init: Init::Singletons,
            nu_init: None,
            scan: ScanOrder::Sequential,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::InvalidConfig("iterations must be positive".into()));
        }
        if self.burn_in >= self.iterations {
            return Err(Error::InvalidConfig(format!(
                "burn_in = {} must be smaller than iterations = {}",
                self.burn_in, self.iterations
            )));
        }
        if self.thin == 0 {
            return Err(Error::InvalidConfig("thin must be at least 1".into()));
        }
        if !(self.proposal_sd > 0.0 && self.proposal_sd.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "proposal_sd must be positive, got {}",
                self.proposal_sd
            )));
        }
        if let Some(nu) = self.nu_init {
            if !self.prior.nu_support_contains(nu) {
                return Err(Error::InvalidConfig(format!(
                    "nu_init = {nu} lies outside [{}, {}]",
                    self.prior.nu_lo(),
                    self.prior.nu_hi()
                )));
            }
        }
        Ok(())
    }

    pub fn initial_nu(&self) -> f64 {
        self.nu_init
            .unwrap_or(0.5 * (self.prior.nu_lo() + self.prior.nu_hi()))
    }

    /// Number of draws the run will retain.
    pub fn retained(&self) -> usize {
        (self.iterations - self.burn_in) / self.thin
    }
}

/// Wall-clock timing of a run. Kept apart from the draws so that traces of
/// identical runs compare equal.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub total_seconds: f64,
    pub seconds_per_iteration: f64,
}

/// Retained draws of one chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McmcTrace {
    pub seed: u64,
    pub model: String,
    pub n: usize,
    /// 1-based iteration number of each retained draw.
    pub iterations: Vec<usize>,
    /// Canonical labels (first-appearance order) per retained draw.
    pub labels: Vec<Vec<usize>>,
    pub nu: Vec<f64>,
    pub k_plus: Vec<usize>,
    pub nu_accepted: usize,
    pub nu_proposed: usize,
    #[serde(skip)]
    pub timing: Timing,
}

impl McmcTrace {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.nu_proposed == 0 {
            0.0
        } else {
            self.nu_accepted as f64 / self.nu_proposed as f64
        }
    }

    /// Same draws, ignoring timing.
    pub fn same_draws(&self, other: &McmcTrace) -> bool {
        let strip = |t: &McmcTrace| McmcTrace {
            timing: Timing::default(),
            ..t.clone()
        };
        strip(self) == strip(other)
    }
}

/// Builds the chain state for `data` under `config` (validation and
/// initialization only, no updates).
pub fn init_state(data: &[SpdMatrix], config: &SamplerConfig) -> Result<ClusterState> {
    config.validate()?;
    let mut rng = rng_from_seed(config.seed);
    ClusterState::new(data, &config.prior, &config.init, config.initial_nu(), &mut rng)
}

/// Runs the sampler with the weight rule selected by `config.model`.
pub fn run(data: &[SpdMatrix], config: &SamplerConfig) -> Result<McmcTrace> {
    match config.model {
        ModelKind::Mfm(spec) => {
            let table = spec.log_vn_table(data.len().max(1))?;
            run_with_weights(data, config, MfmWeights::new(&spec, table))
        }
        ModelKind::Dpm(spec) => run_with_weights(data, config, DpmWeights::new(&spec)),
    }
}

/// Runs the sampler with an explicit weight provider; `config.model` is only
/// recorded in the trace.
pub fn run_with_weights<W: LabelWeights>(
    data: &[SpdMatrix],
    config: &SamplerConfig,
    weights: W,
) -> Result<McmcTrace> {
    config.validate()?;
    let n = data.len();
    if let ScanOrder::Fixed(order) = &config.scan {
        let mut sorted = order.clone();
        sorted.sort_unstable();
        if sorted != (0..n).collect::<Vec<_>>() {
            return Err(Error::InvalidConfig("fixed scan order is not a permutation of 0..n".into()));
        }
    }
    let start = Instant::now();
    let mut rng = rng_from_seed(config.seed);
    let mut chain = Chain::new(
        data,
        &config.prior,
        weights,
        &config.init,
        config.initial_nu(),
        &mut rng,
    )?;
    let mut order: Vec<usize> = match &config.scan {
        ScanOrder::Fixed(o) => o.clone(),
        _ => (0..n).collect(),
    };
    let retained = config.retained();
    let mut trace = McmcTrace {
        seed: config.seed,
        model: config.model.name().to_string(),
        n,
        iterations: Vec::with_capacity(retained),
        labels: Vec::with_capacity(retained),
        nu: Vec::with_capacity(retained),
        k_plus: Vec::with_capacity(retained),
        nu_accepted: 0,
        nu_proposed: 0,
        timing: Timing::default(),
    };
    for l in 1..=config.iterations {
        if config.scan == ScanOrder::Random {
            order.shuffle(&mut rng);
        }
        chain.sweep(&order, &mut rng)?;
        if chain.update_nu(config.proposal_sd, &mut rng) {
            trace.nu_accepted += 1;
        }
        trace.nu_proposed += 1;
        if cfg!(debug_assertions) && l % 100 == 0 {
            let drift = chain.state().audit(data, &config.prior)?;
            debug_assert!(drift < 1e-9, "sufficient statistics drifted by {drift}");
        }
        if l > config.burn_in && (l - config.burn_in) % config.thin == 0 {
            let state = chain.state();
            trace.iterations.push(l);
            trace.labels.push(state.canonical_labels());
            trace.nu.push(state.nu());
            trace.k_plus.push(state.k_plus());
        }
    }
    let total = start.elapsed().as_secs_f64();
    trace.timing = Timing {
        total_seconds: total,
        seconds_per_iteration: total / config.iterations as f64,
    };
    Ok(trace)
}

/// One draw Σ_c ~ IW(Ψ₀ + S_c, κ₀ + n_c ν) per live cluster, indexed by
/// canonical label.
pub fn draw_sigma_posteriors<R: Rng + ?Sized>(
    state: &ClusterState,
    hyper: &PriorHyper,
    rng: &mut R,
) -> Result<Vec<SpdMatrix>> {
    let canonical = state.canonical_labels();
    let mut by_canonical: Vec<Option<SpdMatrix>> = vec![None; state.k_plus()];
    let mut slot_to_canonical = std::collections::HashMap::new();
    for (i, &c) in canonical.iter().enumerate() {
        slot_to_canonical.entry(state.labels()[i]).or_insert(c);
    }
    for (id, stat) in state.clusters() {
        let (scale, kappa) = posterior_iw_params(stat, state.nu(), hyper)?;
        by_canonical[slot_to_canonical[&id]] = Some(sample_inverse_wishart(&scale, kappa, rng)?);
    }
    Ok(by_canonical.into_iter().map(|s| s.expect("every live cluster has a member")).collect())
}
