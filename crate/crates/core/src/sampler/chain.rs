use rand::Rng;
use rand_distr::StandardNormal;

use super::state::{Cluster, ClusterState, Init};
use crate::error::{Error, Result};
use crate::model::{nu_log_fc_parts, ClusterSuffStat, PriorHyper};
use crate::prior::LabelWeights;
use crate::spd::{log_det_of_sum, SpdMatrix};
use crate::special::log_multigamma_unchecked as lmg;

/// ν-dependent constants of the posterior predictive, rebuilt whenever ν moves.
#[derive(Debug, Clone)]
struct PredictiveCache {
    /// log Γ_p((κ₀ + mν)/2) for m = 0..=n+1.
    lmg_post: Vec<f64>,
    lmg_half_nu: f64,
}

impl PredictiveCache {
    fn new(n: usize, nu: f64, hyper: &PriorHyper) -> Self {
        let p = hyper.dim();
        let k0 = hyper.kappa0();
        PredictiveCache {
            lmg_post: (0..=n + 1)
                .map(|m| lmg(p, (k0 + m as f64 * nu) / 2.0))
                .collect(),
            lmg_half_nu: lmg(p, nu / 2.0),
        }
    }
}

/// One collapsed Gibbs chain: data, prior, weight rule and mutable state.
pub struct Chain<'a, W: LabelWeights> {
    data: &'a [SpdMatrix],
    hyper: &'a PriorHyper,
    weights: W,
    state: ClusterState,
    cache: PredictiveCache,
    /// log|Ψ₀ + Wᵢ| per observation.
    log_det_prior_post: Vec<f64>,
    log_det_psi0: f64,
    scratch: Vec<f64>,
    log_w: Vec<f64>,
    candidates: Vec<usize>,
}

impl<'a, W: LabelWeights> Chain<'a, W> {
    pub fn new<R: Rng + ?Sized>(
        data: &'a [SpdMatrix],
        hyper: &'a PriorHyper,
        weights: W,
        init: &Init,
        nu: f64,
        rng: &mut R,
    ) -> Result<Self> {
        let state = ClusterState::new(data, hyper, init, nu, rng)?;
        let p = hyper.dim();
        let psi = hyper.psi0().matrix().as_slice();
        let mut scratch = Vec::with_capacity(p * p);
        let log_det_prior_post = data
            .iter()
            .enumerate()
            .map(|(index, w)| {
                log_det_of_sum(p, psi, w.matrix().as_slice(), &mut scratch).ok_or(
                    Error::NonSpdObservation {
                        index,
                        reason: "Ψ₀ + W is not positive definite".into(),
                    },
                )
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Chain {
            data,
            hyper,
            weights,
            cache: PredictiveCache::new(data.len(), nu, hyper),
            state,
            log_det_prior_post,
            log_det_psi0: hyper.psi0().log_det(),
            scratch,
            log_w: Vec::new(),
            candidates: Vec::new(),
        })
    }

    pub fn state(&self) -> &ClusterState {
        &self.state
    }

    pub fn into_state(self) -> ClusterState {
        self.state
    }

    pub fn weights(&self) -> &W {
        &self.weights
    }

    /// log p(Wᵢ | cluster with `count` other members and Ψ₀ + S = `post`).
    pub(crate) fn log_predictive(&mut self, i: usize, count: usize, log_det_post: f64, post: Option<&[f64]>) -> f64 {
        let p = self.hyper.dim();
        let nu = self.state.nu;
        let k0 = self.hyper.kappa0();
        let a_old = 0.5 * (k0 + count as f64 * nu);
        let a_new = a_old + 0.5 * nu;
        let ld_new = match post {
            None => self.log_det_prior_post[i],
            Some(post) => {
                // Ψ₀ + S + W is SPD whenever Ψ₀ + S is
                log_det_of_sum(p, post, self.data[i].matrix().as_slice(), &mut self.scratch)
                    .unwrap_or(f64::NAN)
            }
        };
        self.cache.lmg_post[count + 1] - self.cache.lmg_post[count] - self.cache.lmg_half_nu
            + 0.5 * (nu - p as f64 - 1.0) * self.state.log_det_obs[i]
            + a_old * log_det_post
            - a_new * ld_new
    }

    /// Resamples zᵢ from its collapsed full conditional. Consumes exactly one
    /// uniform from `rng`.
    pub fn update_label<R: Rng + ?Sized>(&mut self, i: usize, rng: &mut R) -> Result<()> {
        let hyper = self.hyper;
        let w = &self.data[i];
        let old = self.state.labels[i];
        {
            let cl = self.state.slots[old].as_mut().expect("label refers to a live cluster");
            cl.stat.remove(w, hyper)?;
            if cl.stat.count() == 0 {
                self.state.slots[old] = None;
                self.state.free.push(old);
                self.state.live -= 1;
            } else {
                for (a, b) in cl.post.iter_mut().zip(w.matrix().as_slice()) {
                    *a -= b;
                }
            }
        }

        let k_star = self.state.live;
        let mut log_w = std::mem::take(&mut self.log_w);
        let mut candidates = std::mem::take(&mut self.candidates);
        log_w.clear();
        candidates.clear();
        let slots = std::mem::take(&mut self.state.slots);
        for (id, slot) in slots.iter().enumerate() {
            if let Some(cl) = slot {
                let count = cl.stat.count();
                let lp = self.log_predictive(i, count, cl.stat.log_det_posterior(), Some(&cl.post));
                log_w.push(self.weights.log_existing(count) + lp);
                candidates.push(id);
            }
        }
        self.state.slots = slots;
        let lp_new = self.log_predictive(i, 0, self.log_det_psi0, None);
        log_w.push(self.weights.log_new(k_star)? + lp_new);

        let u: f64 = rng.random();
        let pick = categorical(&log_w, u).ok_or_else(|| {
            Error::Domain(format!("label weights for observation {i} are not finite"))
        })?;

        if pick < candidates.len() {
            let id = candidates[pick];
            let cl = self.state.slots[id].as_mut().expect("candidate is live");
            cl.stat.add(w, hyper)?;
            for (a, b) in cl.post.iter_mut().zip(w.matrix().as_slice()) {
                *a += b;
            }
            self.state.labels[i] = id;
        } else {
            let mut stat = ClusterSuffStat::empty(hyper);
            stat.add(w, hyper)?;
            let post: Vec<f64> = hyper
                .psi0()
                .matrix()
                .as_slice()
                .iter()
                .zip(w.matrix().as_slice())
                .map(|(a, b)| a + b)
                .collect();
            let cluster = Some(Cluster { stat, post });
            let id = match self.state.free.pop() {
                Some(id) => {
                    self.state.slots[id] = cluster;
                    id
                }
                None => {
                    self.state.slots.push(cluster);
                    self.state.slots.len() - 1
                }
            };
            self.state.live += 1;
            self.state.labels[i] = id;
        }
        self.log_w = log_w;
        self.candidates = candidates;
        Ok(())
    }

    /// One pass of label updates in the given order.
    pub fn sweep<R: Rng + ?Sized>(&mut self, order: &[usize], rng: &mut R) -> Result<()> {
        for &i in order {
            self.update_label(i, rng)?;
        }
        Ok(())
    }

    fn nu_log_target(&self, nu: f64) -> f64 {
        let parts = self
            .state
            .slots
            .iter()
            .flatten()
            .map(|c| (c.stat.count(), c.stat.log_det_posterior()));
        nu_log_fc_parts(nu, parts, self.state.sum_log_det, self.hyper)
    }

    /// Random-walk Metropolis–Hastings step for ν. Always consumes one normal
    /// and one uniform. Returns whether the proposal was accepted.
    pub fn update_nu<R: Rng + ?Sized>(&mut self, proposal_sd: f64, rng: &mut R) -> bool {
        let eps: f64 = rng.sample(StandardNormal);
        let u: f64 = rng.random();
        let current = self.state.nu;
        let proposal = current + proposal_sd * eps;
        if !self.hyper.nu_support_contains(proposal) {
            return false;
        }
        let delta = self.nu_log_target(proposal) - self.nu_log_target(current);
        if u.ln() < delta {
            self.state.nu = proposal;
            self.cache = PredictiveCache::new(self.data.len(), proposal, self.hyper);
            true
        } else {
            false
        }
    }

    /// Overrides ν, keeping the predictive cache consistent.
    pub fn set_nu(&mut self, nu: f64) -> Result<()> {
        if !self.hyper.nu_support_contains(nu) {
            return Err(Error::Domain(format!("nu = {nu} lies outside the prior support")));
        }
        self.state.nu = nu;
        self.cache = PredictiveCache::new(self.data.len(), nu, self.hyper);
        Ok(())
    }
}

/// Index drawn from normalized exp(log_w) by inverse CDF at `u` ∈ [0, 1).
pub(crate) fn categorical(log_w: &[f64], u: f64) -> Option<usize> {
    let max = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return None;
    }
    let total: f64 = log_w.iter().map(|l| (l - max).exp()).sum();
    if !total.is_finite() {
        return None;
    }
    let target = u * total;
    let mut acc = 0.0;
    for (k, l) in log_w.iter().enumerate() {
        acc += (l - max).exp();
        if acc > target {
            return Some(k);
        }
    }
    log_w.iter().rposition(|l| l.is_finite())
}
