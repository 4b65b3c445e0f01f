use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::model::{ClusterSuffStat, PriorHyper};
use crate::spd::SpdMatrix;

/// How the chain's labels start out.
#[derive(Debug, Clone, PartialEq)]
pub enum Init {
    /// Every observation in its own cluster.
    Singletons,
    /// `k` non-empty clusters with uniformly random membership.
    KClusters(usize),
    /// Explicit labels. Distinct values are mapped to cluster ids by sorted rank.
    Given(Vec<usize>),
}

#[derive(Debug, Clone)]
pub(crate) struct Cluster {
    pub(crate) stat: ClusterSuffStat,
    /// Ψ₀ + S_c, column-major.
    pub(crate) post: Vec<f64>,
}

/// Labels, per-cluster sufficient statistics and the shared ν.
///
/// Clusters live in slots; a slot freed by an emptied cluster is reused
/// last-in first-out by the next new cluster.
#[derive(Debug, Clone)]
pub struct ClusterState {
    pub(crate) labels: Vec<usize>,
    pub(crate) slots: Vec<Option<Cluster>>,
    pub(crate) free: Vec<usize>,
    pub(crate) live: usize,
    pub(crate) nu: f64,
    pub(crate) log_det_obs: Vec<f64>,
    pub(crate) sum_log_det: f64,
}

/// Checks that raw matrices form a valid data set of SPD observations.
pub fn validate_observations(raw: Vec<DMatrix<f64>>) -> Result<Vec<SpdMatrix>> {
    let p = raw.first().map(|m| m.nrows()).unwrap_or(0);
    raw.into_iter()
        .enumerate()
        .map(|(index, m)| {
            if m.nrows() != p || m.ncols() != p {
                return Err(Error::HeterogeneousDims {
                    index,
                    expected: p,
                    found: m.nrows().max(m.ncols()),
                });
            }
            SpdMatrix::new(m).map_err(|e| Error::NonSpdObservation {
                index,
                reason: e.to_string(),
            })
        })
        .collect()
}

pub(crate) fn check_data(data: &[SpdMatrix], hyper: &PriorHyper) -> Result<()> {
    if data.is_empty() {
        return Err(Error::Data("data set is empty".into()));
    }
    let p = hyper.dim();
    for (index, w) in data.iter().enumerate() {
        if w.dim() != p {
            return Err(Error::HeterogeneousDims {
                index,
                expected: p,
                found: w.dim(),
            });
        }
    }
    Ok(())
}

impl ClusterState {
    pub fn new<R: Rng + ?Sized>(
        data: &[SpdMatrix],
        hyper: &PriorHyper,
        init: &Init,
        nu: f64,
        rng: &mut R,
    ) -> Result<Self> {
        check_data(data, hyper)?;
        if !hyper.nu_support_contains(nu) {
            return Err(Error::InvalidConfig(format!(
                "initial nu = {nu} lies outside [{}, {}]",
                hyper.nu_lo(),
                hyper.nu_hi()
            )));
        }
        let n = data.len();
        let labels = initial_labels(n, init, rng)?;
        let k = labels.iter().max().map_or(0, |&m| m + 1);
        let empty = Cluster {
            stat: ClusterSuffStat::empty(hyper),
            post: hyper.psi0().matrix().as_slice().to_vec(),
        };
        let mut slots: Vec<Option<Cluster>> = vec![Some(empty); k];
        for (i, &c) in labels.iter().enumerate() {
            let cl = slots[c].as_mut().expect("slot exists");
            cl.stat.add(&data[i], hyper)?;
            for (a, b) in cl.post.iter_mut().zip(data[i].matrix().as_slice()) {
                *a += b;
            }
        }
        let log_det_obs: Vec<f64> = data.iter().map(|w| w.log_det()).collect();
        let sum_log_det = log_det_obs.iter().sum();
        Ok(ClusterState {
            labels,
            slots,
            free: Vec::new(),
            live: k,
            nu,
            log_det_obs,
            sum_log_det,
        })
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    /// Current cluster ids (slot indices, not canonical).
    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    /// Number of occupied clusters K₊.
    pub fn k_plus(&self) -> usize {
        self.live
    }

    /// Labels renumbered 0, 1, … in order of first appearance.
    pub fn canonical_labels(&self) -> Vec<usize> {
        canonicalize(&self.labels)
    }

    /// Live clusters as (cluster id, statistics), by increasing id.
    pub fn clusters(&self) -> impl Iterator<Item = (usize, &ClusterSuffStat)> {
        self.slots
            .iter()
            .enumerate()
            .filter_map(|(id, s)| s.as_ref().map(|c| (id, &c.stat)))
    }

    /// Σᵢ log|Wᵢ|.
    pub fn sum_log_det(&self) -> f64 {
        self.sum_log_det
    }

    /// Recomputes every cluster from the labels and returns the largest
    /// relative discrepancy against the incremental statistics.
    pub fn audit(&self, data: &[SpdMatrix], hyper: &PriorHyper) -> Result<f64> {
        let mut worst: f64 = 0.0;
        let mut counted = 0;
        for (id, stat) in self.clusters() {
            let members: Vec<&SpdMatrix> = self
                .labels
                .iter()
                .zip(data)
                .filter(|(&l, _)| l == id)
                .map(|(_, w)| w)
                .collect();
            let fresh = ClusterSuffStat::from_members(members.iter().copied(), hyper)?;
            if fresh.count() != stat.count() || fresh.count() == 0 {
                return Ok(f64::INFINITY);
            }
            counted += fresh.count();
            let scale = fresh.scatter().abs().max().max(1.0);
            worst = worst.max((fresh.scatter() - stat.scatter()).abs().max() / scale);
            let ld = fresh.log_det_posterior();
            worst = worst.max((ld - stat.log_det_posterior()).abs() / ld.abs().max(1.0));
        }
        if counted != self.n() || self.labels.iter().any(|&l| self.slots.get(l).map_or(true, |s| s.is_none())) {
            return Ok(f64::INFINITY);
        }
        Ok(worst)
    }
}

fn initial_labels<R: Rng + ?Sized>(n: usize, init: &Init, rng: &mut R) -> Result<Vec<usize>> {
    match init {
        Init::Singletons => Ok((0..n).collect()),
        Init::KClusters(k) => {
            let k = *k;
            if k == 0 || k > n {
                return Err(Error::BadK { k, n });
            }
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(rng);
            let mut labels = vec![0; n];
            for (pos, &i) in order.iter().enumerate() {
                labels[i] = if pos < k { pos } else { rng.random_range(0..k) };
            }
            Ok(labels)
        }
        Init::Given(given) => {
            if given.len() != n {
                return Err(Error::LengthMismatch {
                    expected: n,
                    found: given.len(),
                });
            }
            let mut distinct = given.clone();
            distinct.sort_unstable();
            distinct.dedup();
            Ok(given
                .iter()
                .map(|l| distinct.binary_search(l).expect("present"))
                .collect())
        }
    }
}

/// Renumbers labels 0, 1, … in order of first appearance.
pub fn canonicalize(labels: &[usize]) -> Vec<usize> {
    let mut map = std::collections::HashMap::new();
    labels
        .iter()
        .map(|&l| {
            let next = map.len();
            *map.entry(l).or_insert(next)
        })
        .collect()
}
