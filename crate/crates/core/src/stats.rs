//! Small statistical helpers shared by the diagnostics: chi-square uniformity
//! tests and a permutation test for serial correlation.

use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::rng::UniformStream;

/// Pearson chi-square statistic of `counts` against the uniform law.
pub fn chi_square_stat(counts: &[u64]) -> f64 {
    let n: u64 = counts.iter().sum();
    let expected = n as f64 / counts.len() as f64;
    counts
        .iter()
        .map(|&c| {
            let d = c as f64 - expected;
            d * d / expected
        })
        .sum()
}

/// Upper critical value of the chi-square law with `df` degrees of freedom.
pub fn chi_square_critical(df: usize, significance: f64) -> Result<f64> {
    if df == 0 {
        return Err(Error::Domain("chi-square needs at least 1 degree of freedom".into()));
    }
    if !(significance > 0.0 && significance < 1.0) {
        return Err(Error::Domain(format!("significance {significance} outside (0,1)")));
    }
    let chi = ChiSquared::new(df as f64)
        .map_err(|e| Error::Domain(format!("chi-square setup: {e}")))?;
    Ok(chi.inverse_cdf(1.0 - significance))
}

/// Result of a uniformity test over a finite alphabet.
#[derive(Debug, Clone)]
pub struct ChiSquareReport {
    pub statistic: f64,
    pub critical: f64,
    pub df: usize,
    pub rejected: bool,
}

/// Tests `counts` against uniformity at the given significance level.
pub fn chi_square_uniform(counts: &[u64], significance: f64) -> Result<ChiSquareReport> {
    if counts.len() < 2 {
        return Err(Error::Domain("need at least two cells".into()));
    }
    let statistic = chi_square_stat(counts);
    let df = counts.len() - 1;
    let critical = chi_square_critical(df, significance)?;
    Ok(ChiSquareReport { statistic, critical, df, rejected: statistic > critical })
}

/// Sample lag-1 Pearson correlation.
pub fn lag1_correlation(xs: &[f64]) -> f64 {
    if xs.len() < 3 {
        return 0.0;
    }
    let n = xs.len();
    let mean = xs.iter().sum::<f64>() / n as f64;
    let var = xs.iter().map(|&x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
    if var <= 0.0 {
        return 0.0;
    }
    let cov = xs
        .windows(2)
        .map(|w| (w[0] - mean) * (w[1] - mean))
        .sum::<f64>()
        / (n - 1) as f64;
    cov / var
}

/// Permutation-test z-score of the observed lag-1 correlation: how many null
/// standard deviations the statistic sits from the shuffled-null mean.
pub fn lag1_permutation_z(xs: &[f64], permutations: usize, seed: u64) -> Result<f64> {
    if xs.len() < 10 || permutations < 100 {
        return Err(Error::Domain("need >= 10 samples and >= 100 permutations".into()));
    }
    let observed = lag1_correlation(xs);
    let stream = UniformStream::new(seed);
    let mut shuffled = xs.to_vec();
    let mut null = Vec::with_capacity(permutations);
    let mut ctr = 0u64;
    for _ in 0..permutations {
        // Fisher-Yates with counter-addressed uniforms
        for i in (1..shuffled.len()).rev() {
            let j = stream.below(ctr, i as u64 + 1) as usize;
            ctr += 1;
            shuffled.swap(i, j);
        }
        null.push(lag1_correlation(&shuffled));
    }
    let mean = null.iter().sum::<f64>() / permutations as f64;
    let var = null.iter().map(|&x| (x - mean) * (x - mean)).sum::<f64>()
        / (permutations - 1) as f64;
    let sd = var.sqrt().max(1e-12);
    Ok((observed - mean) / sd)
}
