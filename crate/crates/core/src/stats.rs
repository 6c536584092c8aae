//! Small descriptive statistics used across the analytics.

use statrs::distribution::{ContinuousCDF, StudentsT};

pub fn mean(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        None
    } else {
        Some(xs.iter().sum::<f64>() / xs.len() as f64)
    }
}

/// Linear-interpolation quantile (Hyndman-Fan type 7, the R/NumPy default).
pub fn quantile(xs: &[f64], q: f64) -> Option<f64> {
    if xs.is_empty() || !(0.0..=1.0).contains(&q) {
        return None;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let h = (v.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    Some(v[lo] + (h - lo as f64) * (v[hi] - v[lo]))
}

pub fn median(xs: &[f64]) -> Option<f64> {
    quantile(xs, 0.5)
}

/// Sample Pearson correlation. `None` when lengths differ, fewer than two
/// points are given, or either input has zero variance.
pub fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return None;
    }
    let ma = mean(a)?;
    let mb = mean(b)?;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let dx = x - ma;
        let dy = y - mb;
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return None;
    }
    Some((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0))
}

/// Two-sided p-value of `r` over `n` points via the t transform with n - 2
/// degrees of freedom.
pub fn pearson_p_value(r: f64, n: usize) -> Option<f64> {
    if n < 3 || !r.is_finite() {
        return None;
    }
    if r.abs() >= 1.0 {
        return Some(0.0);
    }
    let df = (n - 2) as f64;
    let t = r * (df / (1.0 - r * r)).sqrt();
    let dist = StudentsT::new(0.0, 1.0, df).ok()?;
    Some((2.0 * (1.0 - dist.cdf(t.abs()))).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantiles_type7() {
        let xs = [1.0, 1.0, 1.0, 1.0, 10.0];
        assert_eq!(quantile(&xs, 0.25), Some(1.0));
        assert_eq!(quantile(&xs, 0.75), Some(1.0));
        // numpy.percentile([1, 2, 3, 4], 25) == 1.75
        assert_eq!(quantile(&[4.0, 2.0, 1.0, 3.0], 0.25), Some(1.75));
        assert_eq!(median(&[3.0, 1.0, 2.0, 10.0]), Some(2.5));
        assert_eq!(quantile(&[], 0.5), None);
    }

    #[test]
    fn pearson_identities() {
        let x = [1.0, 4.0, 2.0, 8.0, 5.0];
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert_eq!(pearson(&x, &x), Some(1.0));
        assert_eq!(pearson(&x, &neg), Some(-1.0));
        assert_eq!(pearson(&x, &[3.0; 5]), None);
        assert_eq!(pearson(&x, &[1.0, 2.0]), None);
    }

    #[test]
    fn pearson_closed_form() {
        // x = 1..6, y = (2, 1, 4, 3, 7, 5): sxy = 16, sxx = 17.5, syy = 70 / 3
        let x = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let y = [2.0, 1.0, 4.0, 3.0, 7.0, 5.0];
        let expected = 16.0 / (17.5f64 * 70.0 / 3.0).sqrt();
        assert!((expected - 0.791_794_654_888_629_7).abs() < 1e-12);
        assert!((pearson(&x, &y).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn p_values() {
        // scipy.stats.pearsonr with r = 0.5, n = 10 gives p = 0.141...
        let p = pearson_p_value(0.5, 10).unwrap();
        assert!((p - 0.14111328).abs() < 1e-6, "{p}");
        assert_eq!(pearson_p_value(0.5, 2), None);
        assert_eq!(pearson_p_value(1.0, 5), Some(0.0));
    }
}
