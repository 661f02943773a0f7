//! Goodness-of-fit helpers: a two-sample χ² for an unweighted against a
//! weighted histogram, and Kolmogorov–Smirnov tests.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Bins are merged until both samples expect at least this many counts.
pub const MIN_EXPECTED: f64 = 5.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChiSquare {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
}

pub fn chi_square_sf(x: f64, df: usize) -> f64 {
    if df == 0 {
        return 1.0;
    }
    let d = ChiSquared::new(df as f64).expect("positive df");
    d.sf(x.max(0.0))
}

/// Per-bin summary of a weighted sample: normalized mass and the
/// delta-method variance of that mass.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedBins {
    pub mass: Vec<f64>,
    pub variance: Vec<f64>,
}

/// Bin index of `x` for increasing `edges`; values outside go to the end
/// bins.
pub fn bin_index(edges: &[f64], x: f64) -> usize {
    let nb = edges.len() - 1;
    match edges[1..nb].iter().position(|&e| x < e) {
        Some(i) => i,
        None => nb - 1,
    }
}

pub fn weighted_bins(edges: &[f64], values: &[f64], weights: &[f64]) -> WeightedBins {
    let nb = edges.len() - 1;
    let total: f64 = weights.iter().sum();
    let mut mass = vec![0.0; nb];
    let idx: Vec<usize> = values.iter().map(|&v| bin_index(edges, v)).collect();
    for (&i, &w) in idx.iter().zip(weights) {
        mass[i] += w;
    }
    if total > 0.0 {
        mass.iter_mut().for_each(|m| *m /= total);
    }
    // Var(r̂_i) ≈ Σ_j w_j² (1[j ∈ i] − r̂_i)² / (Σ w)²
    let mut variance = vec![0.0; nb];
    let sum_w2: f64 = weights.iter().map(|w| w * w).sum();
    let mut in_bin_w2 = vec![0.0; nb];
    for (&i, &w) in idx.iter().zip(weights) {
        in_bin_w2[i] += w * w;
    }
    if total > 0.0 {
        for b in 0..nb {
            let r = mass[b];
            // split the sum into members and non-members of bin b
            let v = in_bin_w2[b] * (1.0 - r).powi(2) + (sum_w2 - in_bin_w2[b]) * r * r;
            variance[b] = v / (total * total);
        }
    }
    WeightedBins { mass, variance }
}

/// Kish effective sample size `(Σw)²/Σw²`.
pub fn kish_n_eff(weights: &[f64]) -> f64 {
    let s: f64 = weights.iter().sum();
    let s2: f64 = weights.iter().map(|w| w * w).sum();
    if s2 == 0.0 {
        0.0
    } else {
        s * s / s2
    }
}

/// Result of [`two_sample_chi_square`] after bin merging.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistogramTest {
    pub edges: Vec<f64>,
    pub empirical: Vec<f64>,
    pub reference: Vec<f64>,
    pub test: ChiSquare,
    pub merged_bins: usize,
}

/// Compares an unweighted sample (`n` draws) against a weighted one.
///
/// Bin `i` contributes `(p̂_i − r̂_i)² / (π_i/n + π_i/m_i)` with `π_i` the
/// pooled mass and `m_i = π_i(1−π_i)/Var(r̂_i)` the bin's effective size.
/// Adjacent bins are merged until `min(n, m_i)·π_i ≥ 5`.
pub fn two_sample_chi_square(edges: &[f64], sample: &[f64], ref_values: &[f64], ref_weights: &[f64]) -> HistogramTest {
    let n = sample.len() as f64;
    let nb = edges.len() - 1;
    let mut counts = vec![0.0; nb];
    for &x in sample {
        counts[bin_index(edges, x)] += 1.0;
    }
    let refb = weighted_bins(edges, ref_values, ref_weights);
    let n_eff_total = kish_n_eff(ref_weights);

    // greedy left-to-right merging on (count, ref mass, ref variance)
    let mut groups: Vec<(f64, f64, f64, f64, f64)> = Vec::new(); // lo, hi, count, mass, var
    let mut cur: Option<(f64, f64, f64, f64, f64)> = None;
    let enough = |c: f64, m: f64, v: f64| {
        let pi = 0.5 * (c / n.max(1.0) + m);
        let m_eff = if v > 0.0 { (m * (1.0 - m) / v).max(0.0) } else { n_eff_total };
        n.min(m_eff) * pi >= MIN_EXPECTED
    };
    for b in 0..nb {
        let (lo, hi) = (edges[b], edges[b + 1]);
        let mut g = match cur.take() {
            Some((l, _, c, m, v)) => (l, hi, c + counts[b], m + refb.mass[b], v + refb.variance[b]),
            None => (lo, hi, counts[b], refb.mass[b], refb.variance[b]),
        };
        if enough(g.2, g.3, g.4) {
            groups.push(g);
        } else {
            g.1 = hi;
            cur = Some(g);
        }
    }
    if let Some(g) = cur {
        match groups.last_mut() {
            Some(last) => {
                last.1 = g.1;
                last.2 += g.2;
                last.3 += g.3;
                last.4 += g.4;
            }
            None => groups.push(g),
        }
    }
    // variances of merged bins were added as if independent; recompute
    let merged_edges: Vec<f64> = std::iter::once(groups[0].0).chain(groups.iter().map(|g| g.1)).collect();
    let exact = weighted_bins(&merged_edges, ref_values, ref_weights);
    let empirical: Vec<f64> = groups.iter().map(|g| g.2 / n.max(1.0)).collect();
    let mut stat = 0.0;
    for i in 0..groups.len() {
        let (p, r, v) = (empirical[i], exact.mass[i], exact.variance[i]);
        let pi = 0.5 * (p + r);
        if pi <= 0.0 {
            continue;
        }
        let var = pi * (1.0 - pi) / n.max(1.0) + v;
        if var > 0.0 {
            // (1 − π) restores the multinomial normalization of Pearson's form
            stat += (p - r).powi(2) / var * (1.0 - pi);
        }
    }
    let df = groups.len().saturating_sub(1);
    HistogramTest {
        edges: merged_edges,
        empirical,
        reference: exact.mass,
        test: ChiSquare {
            statistic: stat,
            df,
            p_value: chi_square_sf(stat, df),
        },
        merged_bins: nb - groups.len(),
    }
}

/// Upper tail of the Kolmogorov distribution, `P(K > λ)`.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 0.2 {
        return 1.0;
    }
    let mut s = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let t = (-2.0 * kf * kf * lambda * lambda).exp();
        s += if k % 2 == 1 { t } else { -t };
        if t < 1e-16 {
            break;
        }
    }
    (2.0 * s).clamp(0.0, 1.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KsTest {
    pub statistic: f64,
    pub p_value: f64,
}

/// One-sample KS test against a continuous CDF.
pub fn ks_one_sample<F: Fn(f64) -> f64>(sample: &[f64], cdf: F) -> KsTest {
    let mut xs = sample.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    let en = n.sqrt();
    KsTest {
        statistic: d,
        p_value: kolmogorov_sf((en + 0.12 + 0.11 / en) * d),
    }
}

/// Two-sample KS test.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> KsTest {
    let mut xa = a.to_vec();
    let mut xb = b.to_vec();
    xa.sort_by(f64::total_cmp);
    xb.sort_by(f64::total_cmp);
    let (na, nb) = (xa.len() as f64, xb.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < xa.len() && j < xb.len() {
        let x = xa[i].min(xb[j]);
        while i < xa.len() && xa[i] <= x {
            i += 1;
        }
        while j < xb.len() && xb[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    let en = (na * nb / (na + nb)).sqrt();
    KsTest {
        statistic: d,
        p_value: kolmogorov_sf((en + 0.12 + 0.11 / en) * d),
    }
}

/// Quantile edges of `sample` with `bins` bins, deduplicated. The outer
/// edges are widened to `lo`/`hi`.
pub fn quantile_edges(sample: &[f64], bins: usize, lo: f64, hi: f64) -> Vec<f64> {
    let mut xs = sample.to_vec();
    xs.sort_by(f64::total_cmp);
    let mut edges = vec![lo];
    if !xs.is_empty() {
        for b in 1..bins.max(1) {
            let q = xs[(b * xs.len() / bins).min(xs.len() - 1)];
            if q > *edges.last().unwrap() && q < hi {
                edges.push(q);
            }
        }
    }
    if hi > *edges.last().unwrap() {
        edges.push(hi);
    } else {
        edges.push(edges.last().unwrap() + 1.0);
    }
    edges
}
