//! Chi-squared tests used for distributional verdicts.

use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Pooled category counts below this are merged into one bin.
pub const MIN_POOLED_COUNT: u64 = 10;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ChiSquareTest {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
}

impl ChiSquareTest {
    fn new(statistic: f64, df: usize) -> Self {
        let p_value = if df == 0 {
            1.0
        } else {
            ChiSquared::new(df as f64).expect("df > 0").sf(statistic)
        };
        Self { statistic, df, p_value }
    }

    pub fn passes(&self, significance: f64) -> bool {
        self.p_value >= significance
    }
}

/// Goodness of fit of counts against category probabilities.
pub fn goodness_of_fit(observed: &[u64], probs: &[f64]) -> ChiSquareTest {
    assert_eq!(observed.len(), probs.len());
    let total: u64 = observed.iter().sum();
    let statistic = observed
        .iter()
        .zip(probs)
        .filter(|(_, &p)| p > 0.0)
        .map(|(&o, &p)| {
            let e = p * total as f64;
            (o as f64 - e).powi(2) / e
        })
        .sum();
    let df = probs.iter().filter(|&&p| p > 0.0).count().saturating_sub(1);
    ChiSquareTest::new(statistic, df)
}

/// Homogeneity test of two samples over shared categories. Categories
/// whose pooled count is below [`MIN_POOLED_COUNT`] are merged.
pub fn two_sample(a: &[u64], b: &[u64]) -> ChiSquareTest {
    assert_eq!(a.len(), b.len());
    let mut bins: Vec<(u64, u64)> = Vec::new();
    let mut rare = (0u64, 0u64);
    for (&x, &y) in a.iter().zip(b) {
        if x + y >= MIN_POOLED_COUNT {
            bins.push((x, y));
        } else {
            rare.0 += x;
            rare.1 += y;
        }
    }
    if rare.0 + rare.1 > 0 {
        bins.push(rare);
    }
    let na: u64 = bins.iter().map(|b| b.0).sum();
    let nb: u64 = bins.iter().map(|b| b.1).sum();
    if bins.len() < 2 || na == 0 || nb == 0 {
        return ChiSquareTest::new(0.0, 0);
    }
    let total = (na + nb) as f64;
    let mut statistic = 0.0;
    for &(x, y) in &bins {
        let pooled = (x + y) as f64;
        for (obs, n) in [(x, na), (y, nb)] {
            let e = pooled * n as f64 / total;
            statistic += (obs as f64 - e).powi(2) / e;
        }
    }
    ChiSquareTest::new(statistic, bins.len() - 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn critical_values() {
        // chi2.ppf(0.999, 2) = 13.8155...
        let t = ChiSquareTest::new(13.815510557964274, 2);
        assert!((t.p_value - 1e-3).abs() < 1e-9);
    }

    #[test]
    fn fit_and_homogeneity() {
        let t = goodness_of_fit(&[100, 100, 100], &[1.0 / 3.0; 3]);
        assert_eq!((t.statistic, t.df, t.p_value), (0.0, 2, 1.0));
        let t = goodness_of_fit(&[300, 0, 0], &[1.0 / 3.0; 3]);
        assert!(!t.passes(1e-3));

        let t = two_sample(&[50, 50, 3], &[50, 50, 2]);
        assert_eq!(t.df, 2);
        assert!(t.passes(1e-3));
        let t = two_sample(&[100, 0], &[0, 100]);
        assert!(!t.passes(1e-3));
        assert_eq!(two_sample(&[10], &[20]).df, 0);
    }
}
