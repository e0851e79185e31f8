/// Kolmogorov-Smirnov distance between a sample and `Exp(rate)`.
pub fn ks_distance_exponential(samples: &[f64], rate: f64) -> f64 {
    let mut x = samples.to_vec();
    x.sort_by(f64::total_cmp);
    let n = x.len() as f64;
    let mut d: f64 = 0.0;
    for (i, xi) in x.iter().enumerate() {
        let f = -(-rate * xi.max(0.0)).exp_m1();
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    d
}

/// Fraction of samples `<= d`.
pub fn empirical_cdf_at(samples: &[f64], d: f64) -> f64 {
    if samples.is_empty() {
        return f64::NAN;
    }
    samples.iter().filter(|x| **x <= d).count() as f64 / samples.len() as f64
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Sample standard deviation (n - 1 denominator).
pub fn std_dev(x: &[f64]) -> f64 {
    let m = mean(x);
    (x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() as f64 - 1.0)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ks_of_exact_quantiles_is_small() {
        let n = 1000;
        let rate = 4.0;
        let q: Vec<f64> = (0..n)
            .map(|i| -(1.0 - (i as f64 + 0.5) / n as f64).ln() / rate)
            .collect();
        assert!((ks_distance_exponential(&q, rate) - 0.5 / n as f64).abs() < 1e-12);
        assert!(ks_distance_exponential(&q, 2.0 * rate) > 0.2);
    }

    #[test]
    fn summary_stats() {
        let x = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(mean(&x), 2.5);
        assert!((std_dev(&x) - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(empirical_cdf_at(&x, 2.0), 0.5);
    }
}
