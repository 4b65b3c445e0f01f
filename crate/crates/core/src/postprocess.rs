//! Summaries of a sampler trace and clustering metrics.

use std::collections::{BTreeMap, HashMap};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampler::{canonicalize, McmcTrace};
use crate::special::ln_gamma_unchecked as lgamma;

/// Posterior co-clustering frequencies Ā_ij.
#[derive(Debug, Clone, PartialEq)]
pub struct CoMembershipMatrix {
    pub values: DMatrix<f64>,
}

/// Dahl's representative partition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionEstimate {
    pub labels: Vec<usize>,
    /// 0-based position of the selected draw in the trace.
    pub draw_index: usize,
    pub k_plus: usize,
    pub k_plus_histogram: BTreeMap<usize, f64>,
}

/// Number of draws in which each pair shares a label.
fn co_counts(draws: &[Vec<usize>]) -> Result<(usize, Vec<u32>)> {
    let n = draws.first().ok_or(Error::EmptyTrace)?.len();
    let mut counts = vec![0u32; n * n];
    for z in draws {
        if z.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                found: z.len(),
            });
        }
        for j in 0..n {
            for i in 0..j {
                if z[i] == z[j] {
                    counts[j * n + i] += 1;
                }
            }
        }
    }
    Ok((n, counts))
}

pub fn co_membership(trace: &McmcTrace) -> Result<CoMembershipMatrix> {
    let (n, counts) = co_counts(&trace.labels)?;
    let l = trace.labels.len() as f64;
    let values = DMatrix::from_fn(n, n, |i, j| match i.cmp(&j) {
        std::cmp::Ordering::Equal => 1.0,
        std::cmp::Ordering::Less => counts[j * n + i] as f64 / l,
        std::cmp::Ordering::Greater => counts[i * n + j] as f64 / l,
    });
    Ok(CoMembershipMatrix { values })
}

/// l* = argmin_l Σ_ij (A⁽ˡ⁾_ij − Ā_ij)², ties to the earliest draw.
///
/// Distances are evaluated exactly as the integer Σ (L·A⁽ˡ⁾_ij − C_ij)²,
/// where C holds co-clustering counts and L the number of draws. The
/// diagonal contributes zero and the off-diagonal is counted once per pair.
pub fn dahl_partition(trace: &McmcTrace) -> Result<PartitionEstimate> {
    let draws = &trace.labels;
    let (n, counts) = co_counts(draws)?;
    let big_l = draws.len() as i64;
    let mut cache: HashMap<&[usize], i64> = HashMap::new();
    let mut best: Option<(i64, usize)> = None;
    for (l, z) in draws.iter().enumerate() {
        let d = *cache.entry(z.as_slice()).or_insert_with(|| {
            let mut acc = 0i64;
            for j in 0..n {
                for i in 0..j {
                    let a = if z[i] == z[j] { big_l } else { 0 };
                    let diff = a - counts[j * n + i] as i64;
                    acc += diff * diff;
                }
            }
            acc
        });
        if best.is_none_or(|(b, _)| d < b) {
            best = Some((d, l));
        }
    }
    let (_, draw_index) = best.expect("non-empty trace");
    let labels = canonicalize(&draws[draw_index]);
    let k_plus = labels.iter().max().map_or(0, |m| m + 1);
    Ok(PartitionEstimate {
        labels,
        draw_index,
        k_plus,
        k_plus_histogram: k_plus_posterior(trace)?,
    })
}

/// Posterior mass of each observed K₊ value.
pub fn k_plus_posterior(trace: &McmcTrace) -> Result<BTreeMap<usize, f64>> {
    if trace.k_plus.is_empty() {
        return Err(Error::EmptyTrace);
    }
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for &k in &trace.k_plus {
        *counts.entry(k).or_default() += 1;
    }
    let total = trace.k_plus.len() as f64;
    Ok(counts.into_iter().map(|(k, c)| (k, c as f64 / total)).collect())
}

/// Most frequent K₊, smallest value on ties.
pub fn modal_k_plus(trace: &McmcTrace) -> Result<usize> {
    let hist = k_plus_posterior(trace)?;
    let mut best = (0, -1.0);
    for (k, m) in hist {
        if m > best.1 {
            best = (k, m);
        }
    }
    Ok(best.0)
}

fn choose2(x: u64) -> f64 {
    (x * x.saturating_sub(1)) as f64 / 2.0
}

/// Hubert–Arabie adjusted Rand index. Returns 1 when both partitions are
/// trivial in the same way (the index is 0/0 there).
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    let n = a.len();
    if n < 2 {
        return Err(Error::TooShort { len: n, min: 2 });
    }
    let mut table: HashMap<(usize, usize), u64> = HashMap::new();
    let mut rows: HashMap<usize, u64> = HashMap::new();
    let mut cols: HashMap<usize, u64> = HashMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *table.entry((x, y)).or_default() += 1;
        *rows.entry(x).or_default() += 1;
        *cols.entry(y).or_default() += 1;
    }
    let index: f64 = table.values().map(|&c| choose2(c)).sum();
    let sum_a: f64 = rows.values().map(|&c| choose2(c)).sum();
    let sum_b: f64 = cols.values().map(|&c| choose2(c)).sum();
    let expected = sum_a * sum_b / choose2(n as u64);
    let max = 0.5 * (sum_a + sum_b);
    let denom = max - expected;
    if denom == 0.0 {
        return Ok(1.0);
    }
    Ok((index - expected) / denom)
}

/// Fraction of estimates equal to `k0`.
pub fn k_recovery_accuracy(estimates: &[usize], k0: usize) -> Result<f64> {
    if estimates.is_empty() {
        return Err(Error::Data("no estimates to score".into()));
    }
    Ok(estimates.iter().filter(|&&k| k == k0).count() as f64 / estimates.len() as f64)
}

/// Effective sample size with Geyer's initial positive sequence: the
/// autocorrelation sum is truncated at the first pair ρ_{2m} + ρ_{2m+1} ≤ 0.
/// A constant series has ESS equal to its length; the result never exceeds it.
pub fn ess(series: &[f64]) -> Result<f64> {
    let n = series.len();
    if n < 10 {
        return Err(Error::TooShort { len: n, min: 10 });
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = series.iter().map(|x| x - mean).collect();
    let autocov = |lag: usize| -> f64 {
        centered[..n - lag]
            .iter()
            .zip(&centered[lag..])
            .map(|(a, b)| a * b)
            .sum::<f64>()
            / n as f64
    };
    let gamma0 = autocov(0);
    if gamma0 <= 0.0 {
        return Ok(n as f64);
    }
    let mut tau = -1.0;
    let mut m = 0;
    while 2 * m + 1 < n {
        let pair = (autocov(2 * m) + autocov(2 * m + 1)) / gamma0;
        if pair <= 0.0 {
            break;
        }
        tau += 2.0 * pair;
        m += 1;
    }
    Ok((n as f64 / tau).min(n as f64))
}

/// Equal-tailed interval from inverse-CDF quantiles: q(u) = x_(⌈u·n⌉),
/// with q(0) = x_(1).
pub fn credible_interval(series: &[f64], level: f64) -> Result<(f64, f64)> {
    if series.is_empty() {
        return Err(Error::EmptyTrace);
    }
    if !(0.0..1.0).contains(&level) {
        return Err(Error::Domain(format!("level must lie in [0, 1), got {level}")));
    }
    let mut sorted = series.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let n = sorted.len();
    let q = |u: f64| -> f64 {
        // ε guards against u·n landing a hair above an integer
        let rank = ((u * n as f64) - 1e-9).ceil().max(1.0) as usize;
        sorted[rank.min(n) - 1]
    };
    let tail = 0.5 * (1.0 - level);
    Ok((q(tail), q(1.0 - tail)))
}

pub fn mean_and_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContingencyTable2x2 {
    pub cells: [[u64; 2]; 2],
}

impl ContingencyTable2x2 {
    pub fn new(a: u64, b: u64, c: u64, d: u64) -> Self {
        ContingencyTable2x2 {
            cells: [[a, b], [c, d]],
        }
    }
}

fn ln_choose(n: u64, k: u64) -> f64 {
    lgamma(n as f64 + 1.0) - lgamma(k as f64 + 1.0) - lgamma((n - k) as f64 + 1.0)
}

/// Two-sided Fisher exact test: total probability of the tables with the
/// observed margins that are no more likely than the observed one.
pub fn fisher_exact_2x2(t: &ContingencyTable2x2) -> Result<f64> {
    let [[a, b], [c, d]] = t.cells;
    let (r1, r2, c1, c2) = (a + b, c + d, a + c, b + d);
    if r1 == 0 || r2 == 0 || c1 == 0 || c2 == 0 {
        return Err(Error::DegenerateMargins);
    }
    let total = r1 + r2;
    let log_denominator = ln_choose(total, c1);
    let log_p = |x: u64| ln_choose(r1, x) + ln_choose(r2, c1 - x) - log_denominator;
    let observed = log_p(a);
    let lo = c1.saturating_sub(r2);
    let hi = r1.min(c1);
    let threshold = observed + 1e-7;
    let p: f64 = (lo..=hi)
        .map(log_p)
        .filter(|&lp| lp <= threshold)
        .map(f64::exp)
        .sum();
    Ok(p.min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::rng_from_seed;
    use crate::sampler::Timing;
    use proptest::prelude::*;
    use rand::seq::SliceRandom;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn trace_of(labels: Vec<Vec<usize>>) -> McmcTrace {
        let k_plus = labels
            .iter()
            .map(|z| z.iter().max().map_or(0, |m| m + 1))
            .collect();
        McmcTrace {
            seed: 0,
            model: "mfm".into(),
            n: labels.first().map_or(0, |z| z.len()),
            iterations: (1..=labels.len()).collect(),
            nu: vec![0.0; labels.len()],
            labels,
            k_plus,
            nu_accepted: 0,
            nu_proposed: 0,
            timing: Timing::default(),
        }
    }

    #[test]
    fn dahl_examples() {
        let single = trace_of(vec![vec![0, 1, 1]]);
        let est = dahl_partition(&single).unwrap();
        assert_eq!((est.labels.clone(), est.draw_index), (vec![0, 1, 1], 0));

        let tie = trace_of(vec![vec![0, 0, 1], vec![0, 1, 1]]);
        assert_eq!(dahl_partition(&tie).unwrap().draw_index, 0);

        let dup = trace_of(vec![vec![0, 0, 1], vec![0, 1, 1], vec![0, 1, 1]]);
        let est = dahl_partition(&dup).unwrap();
        assert_eq!(est.draw_index, 1);
        assert_eq!(est.k_plus, 2);

        assert!(matches!(dahl_partition(&trace_of(vec![])), Err(Error::EmptyTrace)));
    }

    #[test]
    fn dahl_tie_distances_are_one() {
        let tie = trace_of(vec![vec![0, 0, 1], vec![0, 1, 1]]);
        let a_bar = co_membership(&tie).unwrap().values;
        for z in &tie.labels {
            let d: f64 = (0..3)
                .flat_map(|i| (0..3).map(move |j| (i, j)))
                .map(|(i, j)| {
                    let a = if z[i] == z[j] { 1.0 } else { 0.0 };
                    (a - a_bar[(i, j)]).powi(2)
                })
                .sum();
            assert_eq!(d, 1.0);
        }
    }

    #[test]
    fn co_membership_matches_recount() {
        let mut rng = rng_from_seed(10);
        for _ in 0..50 {
            let n = rng.random_range(2..9);
            let l = rng.random_range(1..15);
            let draws: Vec<Vec<usize>> = (0..l)
                .map(|_| (0..n).map(|_| rng.random_range(0..3)).collect())
                .collect();
            let t = trace_of(draws.clone());
            let a = co_membership(&t).unwrap().values;
            for i in 0..n {
                for j in 0..n {
                    let c = draws.iter().filter(|z| z[i] == z[j]).count();
                    assert_eq!(a[(i, j)], c as f64 / l as f64);
                }
            }
            assert_eq!(a, a.transpose());
        }
    }

    #[test]
    fn dahl_invariant_to_draw_order_up_to_ties() {
        let mut rng = rng_from_seed(5);
        for _ in 0..30 {
            let draws: Vec<Vec<usize>> = (0..12)
                .map(|_| canonicalize(&(0..7).map(|_| rng.random_range(0..3)).collect::<Vec<_>>()))
                .collect();
            let est = dahl_partition(&trace_of(draws.clone())).unwrap();
            let mut shuffled = draws.clone();
            shuffled.shuffle(&mut rng);
            let est2 = dahl_partition(&trace_of(shuffled.clone())).unwrap();
            if est.labels != est2.labels {
                // a different minimizer may only win through the earliest-draw rule
                let a_bar = co_membership(&trace_of(draws)).unwrap().values;
                let dist = |z: &[usize]| -> f64 {
                    (0..7)
                        .flat_map(|i| (0..7).map(move |j| (i, j)))
                        .map(|(i, j)| ((z[i] == z[j]) as u8 as f64 - a_bar[(i, j)]).powi(2))
                        .sum()
                };
                assert!((dist(&est.labels) - dist(&est2.labels)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn k_plus_histogram() {
        let t = trace_of(vec![vec![0, 1, 0], vec![0, 1, 1], vec![0, 1, 2]]);
        let h = k_plus_posterior(&t).unwrap();
        assert_eq!(h.len(), 2);
        assert!((h[&2] - 2.0 / 3.0).abs() < 1e-15);
        assert!((h[&3] - 1.0 / 3.0).abs() < 1e-15);
        let mean: f64 = h.iter().map(|(k, m)| *k as f64 * m).sum();
        assert!((2.0..=3.0).contains(&mean));
        let point = trace_of(vec![vec![0, 1]; 4]);
        assert_eq!(k_plus_posterior(&point).unwrap(), BTreeMap::from([(2, 1.0)]));
        assert_eq!(modal_k_plus(&t).unwrap(), 2);
    }

    #[test]
    fn ari_examples() {
        assert_eq!(adjusted_rand_index(&[0, 0, 1, 1], &[5, 5, 3, 3]).unwrap(), 1.0);
        assert!((adjusted_rand_index(&[1, 1, 2, 2], &[1, 2, 1, 2]).unwrap() + 0.5).abs() < 1e-15);
        assert_eq!(adjusted_rand_index(&[0, 1, 2, 3], &[0, 0, 0, 0]).unwrap(), 0.0);
        assert!(matches!(
            adjusted_rand_index(&[0, 1], &[0]),
            Err(Error::LengthMismatch { .. })
        ));
    }

    proptest! {
        #[test]
        fn ari_relabeling_invariance(a in proptest::collection::vec(0usize..4, 2..30), seed in any::<u64>()) {
            let mut rng = rng_from_seed(seed);
            let b: Vec<usize> = a.iter().map(|_| rng.random_range(0..3)).collect();
            let mut perm: Vec<usize> = (0..4).collect();
            perm.shuffle(&mut rng);
            let a2: Vec<usize> = a.iter().map(|&x| perm[x] + 10).collect();
            let base = adjusted_rand_index(&a, &b).unwrap();
            prop_assert_eq!(base, adjusted_rand_index(&a2, &b).unwrap());
            prop_assert!((base - adjusted_rand_index(&b, &a2).unwrap()).abs() < 1e-12);
            prop_assert!(base <= 1.0 && base > -1.0);
            prop_assert_eq!(adjusted_rand_index(&a, &a2).unwrap(), 1.0);
        }
    }

    #[test]
    fn recovery_accuracy() {
        assert_eq!(k_recovery_accuracy(&[3, 3, 3], 3).unwrap(), 1.0);
        assert_eq!(k_recovery_accuracy(&[1, 2], 3).unwrap(), 0.0);
        assert!((k_recovery_accuracy(&[3, 3, 2], 3).unwrap() - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn ess_examples() {
        let mut rng = rng_from_seed(1);
        let iid: Vec<f64> = (0..10_000).map(|_| rng.sample(StandardNormal)).collect();
        let e = ess(&iid).unwrap();
        assert!((9_000.0..=11_000.0).contains(&e), "{e}");

        let mut x = 0.0;
        let phi = 0.5;
        let ar: Vec<f64> = (0..100_000)
            .map(|_| {
                x = phi * x + rng.sample::<f64, _>(StandardNormal);
                x
            })
            .collect();
        let ratio = ess(&ar).unwrap() / ar.len() as f64;
        assert!((ratio - 1.0 / 3.0).abs() < 0.2 / 3.0, "{ratio}");

        assert_eq!(ess(&[2.5; 50]).unwrap(), 50.0);
        assert!(matches!(ess(&[1.0; 9]), Err(Error::TooShort { len: 9, min: 10 })));
    }

    #[test]
    fn credible_interval_examples() {
        let xs: Vec<f64> = (1..=100).map(|i| i as f64).collect();
        assert_eq!(credible_interval(&xs, 0.95).unwrap(), (3.0, 98.0));
        assert_eq!(credible_interval(&[4.0; 20], 0.95).unwrap(), (4.0, 4.0));
        assert_eq!(credible_interval(&xs, 0.0).unwrap(), (50.0, 50.0));
        let mut rev = xs.clone();
        rev.reverse();
        assert_eq!(credible_interval(&rev, 0.9).unwrap(), (5.0, 95.0));
        assert!(credible_interval(&[], 0.9).is_err());
        assert!(credible_interval(&xs, 1.0).is_err());
    }

    #[test]
    fn fisher_examples() {
        let p = fisher_exact_2x2(&ContingencyTable2x2::new(26, 29, 25, 19)).unwrap();
        assert!((p - 0.420).abs() < 0.0005, "{p}");
        assert!((fisher_exact_2x2(&ContingencyTable2x2::new(1, 0, 0, 1)).unwrap() - 1.0).abs() < 1e-12);
        assert!(matches!(
            fisher_exact_2x2(&ContingencyTable2x2::new(0, 0, 3, 4)),
            Err(Error::DegenerateMargins)
        ));
        assert!(matches!(
            fisher_exact_2x2(&ContingencyTable2x2::new(2, 0, 3, 0)),
            Err(Error::DegenerateMargins)
        ));
    }

    #[test]
    fn fisher_symmetric_under_swaps() {
        let mut rng = rng_from_seed(2);
        for _ in 0..100 {
            let c: Vec<u64> = (0..4).map(|_| rng.random_range(1..30)).collect();
            let p = fisher_exact_2x2(&ContingencyTable2x2::new(c[0], c[1], c[2], c[3])).unwrap();
            let rows = fisher_exact_2x2(&ContingencyTable2x2::new(c[2], c[3], c[0], c[1])).unwrap();
            let cols = fisher_exact_2x2(&ContingencyTable2x2::new(c[1], c[0], c[3], c[2])).unwrap();
            let tr = fisher_exact_2x2(&ContingencyTable2x2::new(c[0], c[2], c[1], c[3])).unwrap();
            assert!((p - rows).abs() < 1e-12 && (p - cols).abs() < 1e-12 && (p - tr).abs() < 1e-12);
            assert!(p > 0.0 && p <= 1.0);
        }
    }
}
