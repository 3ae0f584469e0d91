//! Goodness-of-fit statistics and the binned total-variation estimator.

use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Asymptotic Kolmogorov survival function `Q(x) = 2 sum (-1)^{k-1} e^{-2 k^2 x^2}`.
pub fn kolmogorov_q(x: f64) -> f64 {
    // the series equals 1 to double precision below 0.2 and converges slowly there
    if x < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=200 {
        let kf = f64::from(k);
        let term = (-2.0 * kf * kf * x * x).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-18 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

fn ks_p_value(d: f64, n_eff: f64) -> f64 {
    let root = n_eff.sqrt();
    kolmogorov_q((root + 0.12 + 0.11 / root) * d)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestOutcome {
    pub statistic: f64,
    pub p_value: f64,
}

/// One-sample Kolmogorov-Smirnov test against a continuous CDF.
pub fn ks_one_sample<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> TestOutcome {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i + 1) as f64 / n - f).max(f - i as f64 / n);
    }
    TestOutcome { statistic: d, p_value: ks_p_value(d, n) }
}

/// Two-sample Kolmogorov-Smirnov test; ties are stepped over together.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> TestOutcome {
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_by(f64::total_cmp);
    ys.sort_by(f64::total_cmp);
    let (n, m) = (xs.len(), ys.len());
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < n && j < m {
        let v = xs[i].min(ys[j]);
        while i < n && xs[i] <= v {
            i += 1;
        }
        while j < m && ys[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let n_eff = (n * m) as f64 / (n + m) as f64;
    TestOutcome { statistic: d, p_value: ks_p_value(d, n_eff) }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChiSquareOutcome {
    pub statistic: f64,
    pub degrees_of_freedom: usize,
    pub p_value: f64,
    /// Observed and expected counts after pooling.
    pub cells: Vec<(f64, f64)>,
}

/// Pearson goodness of fit. Adjacent cells are pooled from the right until
/// every expected count reaches `min_expected`.
pub fn chi_square_gof(observed: &[f64], expected_prob: &[f64], min_expected: f64) -> ChiSquareOutcome {
    assert_eq!(observed.len(), expected_prob.len());
    let total: f64 = observed.iter().sum();
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let mut acc = (0.0, 0.0);
    for (&o, &p) in observed.iter().zip(expected_prob).rev() {
        acc.0 += o;
        acc.1 += p * total;
        if acc.1 >= min_expected {
            cells.push(acc);
            acc = (0.0, 0.0);
        }
    }
    if acc.1 > 0.0 || acc.0 > 0.0 {
        match cells.last_mut() {
            Some(last) => {
                last.0 += acc.0;
                last.1 += acc.1;
            }
            None => cells.push(acc),
        }
    }
    cells.reverse();
    let statistic: f64 = cells.iter().map(|&(o, e)| if e > 0.0 { (o - e).powi(2) / e } else { 0.0 }).sum();
    let df = cells.len().saturating_sub(1);
    let p_value = if df == 0 {
        1.0
    } else {
        let dist = ChiSquared::new(df as f64).expect("positive degrees of freedom");
        1.0 - dist.cdf(statistic)
    };
    ChiSquareOutcome { statistic, degrees_of_freedom: df, p_value, cells }
}

/// Bin index of `x` for sorted interior edges (cell `b` is `[edge_{b-1}, edge_b)`).
pub fn bin_index(edges: &[f64], x: f64) -> usize {
    edges.partition_point(|&e| e <= x)
}

/// Relative frequencies over the `edges.len() + 1` cells.
pub fn histogram(samples: &[f64], edges: &[f64]) -> Vec<f64> {
    let mut counts = vec![0u64; edges.len() + 1];
    for &x in samples {
        counts[bin_index(edges, x)] += 1;
    }
    let n = samples.len() as f64;
    counts.into_iter().map(|c| c as f64 / n).collect()
}

/// `sum |p_b - q_b|`, the total-variation distance on the 0-to-2 scale.
pub fn l1_distance(p: &[f64], q: &[f64]) -> f64 {
    p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum()
}

/// TV estimate against a reference that puts mass `1/B` in each cell.
pub fn tv_equiprobable(samples: &[f64], edges: &[f64]) -> f64 {
    let p = histogram(samples, edges);
    let q = 1.0 / p.len() as f64;
    p.iter().map(|a| (a - q).abs()).sum()
}

/// Noise allowance `3 sqrt(B / M)` of the binned estimator.
pub fn tv_allowance(bins: usize, samples: usize) -> f64 {
    3.0 * (bins as f64 / samples as f64).sqrt()
}

/// Mean and standard error of the mean.
pub fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Standard error of a statistic from its values on equal-sized batches.
pub fn batch_se(batch_values: &[f64]) -> f64 {
    mean_and_se(batch_values).1
}
