//! Distance-based comparison methods on SPD data: Ward hierarchical
//! clustering and partitioning around medoids.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampler::canonicalize;
use crate::spd::{riemannian_distance, SpdMatrix, SpdMetric};

/// Symmetric, non-negative, finite, zero-diagonal n×n matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    values: DMatrix<f64>,
}

impl DistanceMatrix {
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        let n = values.nrows();
        if values.ncols() != n {
            return Err(Error::NotSquare {
                rows: n,
                cols: values.ncols(),
            });
        }
        for i in 0..n {
            if values[(i, i)] != 0.0 {
                return Err(Error::Data(format!("distance matrix diagonal {i} is not zero")));
            }
            for j in 0..i {
                let v = values[(i, j)];
                if !(v.is_finite() && v >= 0.0) || v != values[(j, i)] {
                    return Err(Error::Data(format!(
                        "distance entry ({i}, {j}) is negative, non-finite or asymmetric"
                    )));
                }
            }
        }
        Ok(DistanceMatrix { values })
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[(i, j)]
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.values
    }
}

/// All pairwise distances d(Wᵢ, Wⱼ), computed in parallel over rows.
pub fn pairwise_riemannian(data: &[SpdMatrix], metric: SpdMetric) -> Result<DistanceMatrix> {
    let n = data.len();
    if let Some(first) = data.first() {
        let p = first.dim();
        if let Some((index, w)) = data.iter().enumerate().find(|(_, w)| w.dim() != p) {
            return Err(Error::HeterogeneousDims {
                index,
                expected: p,
                found: w.dim(),
            });
        }
    }
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (i + 1..n)
                .map(|j| riemannian_distance(&data[i], &data[j], metric))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let mut m = DMatrix::zeros(n, n);
    for (i, row) in rows.iter().enumerate() {
        for (off, &d) in row.iter().enumerate() {
            let j = i + 1 + off;
            m[(i, j)] = d;
            m[(j, i)] = d;
        }
    }
    DistanceMatrix::new(m)
}

/// Which quantity the Lance–Williams Ward recurrence is applied to.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WardVariant {
    /// Squared dissimilarities (exact Ward for Euclidean input).
    #[default]
    D2,
    /// The dissimilarities themselves.
    D,
}

fn check_k(k: usize, n: usize) -> Result<()> {
    if k == 0 || k > n {
        Err(Error::BadK { k, n })
    } else {
        Ok(())
    }
}

/// Agglomerative Ward clustering cut at `k` clusters. Ties merge the
/// lexicographically smallest pair.
pub fn hierarchical_ward(d: &DistanceMatrix, k: usize, variant: WardVariant) -> Result<Vec<usize>> {
    let n = d.n();
    check_k(k, n)?;
    let mut m = DMatrix::from_fn(n, n, |i, j| match variant {
        WardVariant::D2 => d.get(i, j).powi(2),
        WardVariant::D => d.get(i, j),
    });
    let mut size = vec![1usize; n];
    let mut active = vec![true; n];
    let mut assign: Vec<usize> = (0..n).collect();
    for _ in 0..n - k {
        let mut best = (f64::INFINITY, 0, 0);
        for j in 0..n {
            if !active[j] {
                continue;
            }
            for i in 0..j {
                if active[i] && m[(i, j)] < best.0 {
                    best = (m[(i, j)], i, j);
                }
            }
        }
        let (dij, a, b) = best;
        let (na, nb) = (size[a] as f64, size[b] as f64);
        for c in 0..n {
            if !active[c] || c == a || c == b {
                continue;
            }
            let nc = size[c] as f64;
            let v = ((na + nc) * m[(a, c)] + (nb + nc) * m[(b, c)] - nc * dij) / (na + nb + nc);
            m[(a, c)] = v;
            m[(c, a)] = v;
        }
        size[a] += size[b];
        active[b] = false;
        for z in assign.iter_mut() {
            if *z == b {
                *z = a;
            }
        }
    }
    Ok(canonicalize(&assign))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PamResult {
    pub labels: Vec<usize>,
    /// Medoid indices in increasing order; cluster c has medoid `medoids[c]`
    /// before canonical relabeling.
    pub medoids: Vec<usize>,
    pub cost: f64,
    /// Total cost after BUILD and after each accepted swap.
    pub cost_history: Vec<f64>,
}

pub const PAM_MAX_SWAPS: usize = 200;

fn pam_cost(d: &DistanceMatrix, medoids: &[usize]) -> f64 {
    (0..d.n())
        .map(|i| medoids.iter().map(|&m| d.get(i, m)).fold(f64::INFINITY, f64::min))
        .sum()
}

/// Partitioning around medoids: greedy BUILD, then best-improvement SWAP
/// until no swap lowers the cost (at most [`PAM_MAX_SWAPS`] swaps).
pub fn pam(d: &DistanceMatrix, k: usize) -> Result<PamResult> {
    let n = d.n();
    check_k(k, n)?;
    let mut medoids: Vec<usize> = Vec::with_capacity(k);
    while medoids.len() < k {
        let mut best = (f64::INFINITY, 0);
        for cand in 0..n {
            if medoids.contains(&cand) {
                continue;
            }
            medoids.push(cand);
            let c = pam_cost(d, &medoids);
            medoids.pop();
            if c < best.0 {
                best = (c, cand);
            }
        }
        medoids.push(best.1);
    }
    let mut cost = pam_cost(d, &medoids);
    let mut history = vec![cost];
    for _ in 0..PAM_MAX_SWAPS {
        let mut best = (cost, usize::MAX, 0);
        for slot in 0..k {
            for cand in 0..n {
                if medoids.contains(&cand) {
                    continue;
                }
                let old = medoids[slot];
                medoids[slot] = cand;
                let c = pam_cost(d, &medoids);
                medoids[slot] = old;
                if c < best.0 - 1e-12 * cost.abs().max(1e-300) {
                    best = (c, slot, cand);
                }
            }
        }
        if best.1 == usize::MAX {
            break;
        }
        medoids[best.1] = best.2;
        cost = best.0;
        history.push(cost);
    }
    medoids.sort_unstable();
    let assign: Vec<usize> = (0..n)
        .map(|i| {
            let mut b = (f64::INFINITY, 0);
            for (c, &m) in medoids.iter().enumerate() {
                if d.get(i, m) < b.0 {
                    b = (d.get(i, m), c);
                }
            }
            b.1
        })
        .collect();
    Ok(PamResult {
        labels: canonicalize(&assign),
        medoids,
        cost,
        cost_history: history,
    })
}
