//! Set partitions and the MFM partition prior by direct summation over K.

/// All set partitions of {0..n} as restricted-growth label vectors, in
/// lexicographic order.
pub fn set_partitions(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if n == 0 {
        out.push(Vec::new());
        return out;
    }
    let mut labels = vec![0usize; n];
    fn rec(i: usize, max: usize, labels: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if i == labels.len() {
            out.push(labels.clone());
            return;
        }
        for l in 0..=max + 1 {
            labels[i] = l;
            rec(i + 1, max.max(l), labels, out);
        }
    }
    labels[0] = 0;
    rec(1, 0, &mut labels, &mut out);
    out
}

pub fn block_sizes(labels: &[usize]) -> Vec<usize> {
    let k = labels.iter().map(|&l| l + 1).max().unwrap_or(0);
    let mut sizes = vec![0; k];
    for &l in labels {
        sizes[l] += 1;
    }
    sizes
}

/// Blocks of a label vector, each a sorted list of member indices.
pub fn blocks(labels: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new(); block_sizes(labels).len()];
    for (i, &l) in labels.iter().enumerate() {
        out[l].push(i);
    }
    out
}

/// Prior mass of an unlabeled partition with the given block sizes under
///
/// K ~ p_K, π | K ~ Dirichlet(γ, …, γ), z_i | π ~ π,
///
/// computed by summing over k = t..k_max the Dirichlet–multinomial mass of a
/// labeled assignment times the k!/(k−t)! labelings of the t blocks.
pub fn mfm_partition_prior(
    sizes: &[usize],
    gamma: f64,
    log_pk: impl Fn(usize) -> f64,
    ln_gamma: impl Fn(f64) -> f64,
    k_max: usize,
) -> f64 {
    let n: usize = sizes.iter().sum();
    let t = sizes.len();
    let block_term: f64 = sizes
        .iter()
        .map(|&s| ln_gamma(gamma + s as f64) - ln_gamma(gamma))
        .sum();
    let mut total = 0.0;
    for k in t.max(1)..=k_max {
        let kf = k as f64;
        let falling = ln_gamma(kf + 1.0) - ln_gamma(kf - t as f64 + 1.0);
        let dirichlet = ln_gamma(gamma * kf) - ln_gamma(gamma * kf + n as f64);
        total += (log_pk(k) + falling + dirichlet + block_term).exp();
    }
    total
}
