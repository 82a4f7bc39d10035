//! Small statistics helpers: order-statistic quantiles and the one-sample
//! Kolmogorov-Smirnov test.

/// Order statistic at 1-based rank `ceil(level * n)`, clamped to `[1, n]`.
/// `sorted` must be ascending.
pub fn order_statistic_index(level: f64, n: usize) -> usize {
    let k = (level * n as f64 - 1e-10).ceil();
    (k.max(1.0) as usize).min(n) - 1
}

/// Inverse-CDF empirical quantile of unsorted data.
pub fn quantile(values: &[f64], level: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v[order_statistic_index(level, v.len())]
}

/// Linear-interpolation quantile (type 7) of ascending data.
pub fn quantile_interp(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Unbiased sample variance.
pub fn variance(v: &[f64]) -> f64 {
    let m = mean(v);
    v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() as f64 - 1.0)
}

/// `sup |F_n - F|` for a sample against a continuous CDF.
pub fn ks_statistic(sample: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut v = sample.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    v.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i as f64 + 1.0) / n - f)
        })
        .fold(0.0, f64::max)
}

/// Asymptotic p-value of the KS statistic `d` for sample size `n`, with
/// Stephens' small-sample adjustment.
pub fn ks_pvalue(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let term = (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Unit Frechet CDF `exp(-1/x)`.
pub fn frechet_cdf(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        (-1.0 / x).exp()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_statistics() {
        let v: Vec<f64> = (1..=100).map(f64::from).collect();
        assert_eq!(quantile(&v, 0.96), 96.0);
        assert_eq!(quantile(&[3.0, 1.0, 2.0], 1e-6), 1.0);
        assert_eq!(quantile(&[3.0, 1.0, 2.0], 0.999), 3.0);
        assert_eq!(quantile_interp(&[0.0, 10.0], 0.25), 2.5);
    }

    #[test]
    fn kolmogorov_tail() {
        // P(K > 1.36) is the classical 5% point
        let p = ks_pvalue(1.358 / (1e6f64).sqrt(), 1_000_000);
        assert!((p - 0.05).abs() < 1e-3, "{p}");
        assert_eq!(ks_pvalue(0.0, 10), 1.0);
    }

    #[test]
    fn ks_of_exact_quantiles_is_small() {
        let n = 1000;
        let sample: Vec<f64> = (0..n)
            .map(|i| -1.0 / ((i as f64 + 0.5) / n as f64).ln())
            .collect();
        let d = ks_statistic(&sample, frechet_cdf);
        assert!((d - 0.5 / n as f64).abs() < 1e-12);
    }
}
