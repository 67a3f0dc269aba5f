//! Sample statistics for the Monte Carlo tables.

use statrs::distribution::{ContinuousCDF, StudentsT};
use statrs::statistics::Statistics;

/// Sample mean with the half-width of its two-sided 95% t interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub n: usize,
    pub mean: f64,
    /// Absent with fewer than two samples.
    pub ci95: Option<f64>,
}

impl Estimate {
    pub fn of(xs: &[f64]) -> Option<Self> {
        if xs.is_empty() {
            return None;
        }
        let mean = xs.iter().mean();
        let ci95 = (xs.len() >= 2).then(|| {
            let sd = xs.iter().std_dev();
            t_975(xs.len() - 1) * sd / (xs.len() as f64).sqrt()
        });
        Some(Self {
            n: xs.len(),
            mean,
            ci95,
        })
    }

    pub fn lower(&self) -> f64 {
        self.mean - self.ci95.unwrap_or(f64::INFINITY)
    }

    pub fn upper(&self) -> f64 {
        self.mean + self.ci95.unwrap_or(f64::INFINITY)
    }
}

/// 97.5% quantile of Student's t with `df` degrees of freedom.
pub fn t_975(df: usize) -> f64 {
    StudentsT::new(0.0, 1.0, df as f64)
        .expect("degrees of freedom are positive")
        .inverse_cdf(0.975)
}

pub fn median(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    Some(if v.len() % 2 == 0 { 0.5 * (v[mid - 1] + v[mid]) } else { v[mid] })
}

/// Coefficient of determination of the least-squares line through
/// `(xs, ys)`.
pub fn linear_fit_r2(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let mx = xs.iter().mean();
    let my = ys.iter().mean();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if syy == 0.0 {
        return 1.0;
    }
    sxy * sxy / (sxx * syy)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn t_quantile_matches_tables() {
        assert!((t_975(1) - 12.706).abs() < 1e-3);
        assert!((t_975(10) - 2.228).abs() < 1e-3);
        assert!((t_975(999) - 1.962).abs() < 1e-3);
    }

    #[test]
    fn estimate_of_known_sample() {
        let e = Estimate::of(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(e.n, 4);
        assert_eq!(e.mean, 2.5);
        let sd = (5.0f64 / 3.0).sqrt();
        assert!((e.ci95.unwrap() - t_975(3) * sd / 2.0).abs() < 1e-12);
        assert!(Estimate::of(&[]).is_none());
        assert_eq!(Estimate::of(&[7.0]).unwrap().ci95, None);
    }

    #[test]
    fn medians() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), Some(2.5));
        assert_eq!(median(&[]), None);
    }

    #[test]
    fn r2_of_exact_and_noisy_lines() {
        let xs = [0.2, 0.4, 0.6, 0.8];
        assert!((linear_fit_r2(&xs, &[1.0, 2.0, 3.0, 4.0]) - 1.0).abs() < 1e-12);
        assert!(linear_fit_r2(&xs, &[1.0, 3.0, 1.0, 3.0]) < 0.5);
    }
}
