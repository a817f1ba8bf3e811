//! Summary statistics and goodness-of-fit tests used by the experiments.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Discrete, Poisson};

use crate::error::{Error, Result};
use crate::linalg;

/// Largest number of coefficients `weighted_least_squares` fits.
pub const MAX_COEFFICIENTS: usize = 8;

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance (`n - 1` denominator).
pub fn variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return f64::NAN;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

/// Standard error of the mean.
pub fn std_error(xs: &[f64]) -> f64 {
    (variance(xs) / xs.len() as f64).sqrt()
}

/// Variance over mean.
pub fn dispersion(xs: &[f64]) -> Result<f64> {
    let m = mean(xs);
    if !(m > 0.0) {
        return Err(Error::UndefinedDispersion);
    }
    Ok(variance(xs) / m)
}

/// A point estimate with a standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
}

/// Delete-one jackknife of the dispersion index.
pub fn dispersion_jackknife(xs: &[f64]) -> Result<Estimate> {
    let value = dispersion(xs)?;
    let n = xs.len() as f64;
    let (s1, s2) = xs.iter().fold((0.0, 0.0), |(a, b), x| (a + x, b + x * x));
    let mut reps = Vec::with_capacity(xs.len());
    for x in xs {
        let m = n - 1.0;
        let t1 = s1 - x;
        let t2 = s2 - x * x;
        let mu = t1 / m;
        if !(mu > 0.0) {
            return Err(Error::UndefinedDispersion);
        }
        reps.push(((t2 - m * mu * mu) / (m - 1.0)) / mu);
    }
    let rbar = mean(&reps);
    let var = (n - 1.0) / n * reps.iter().map(|r| (r - rbar) * (r - rbar)).sum::<f64>();
    Ok(Estimate { value, std_error: var.sqrt() })
}

/// Outcome of a hypothesis test.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
}

fn chi_square_p(stat: f64, df: usize) -> f64 {
    if df == 0 {
        return f64::NAN;
    }
    let dist = ChiSquared::new(df as f64).expect("positive degrees of freedom");
    dist.sf(stat)
}

/// Pearson chi-square of observed bin counts against expected counts.
pub fn chi_square(observed: &[f64], expected: &[f64], fitted_params: usize) -> TestResult {
    let statistic = observed
        .iter()
        .zip(expected)
        .map(|(o, e)| (o - e) * (o - e) / e)
        .sum::<f64>();
    let df = observed.len().saturating_sub(1 + fitted_params);
    TestResult { statistic, p_value: chi_square_p(statistic, df) }
}

/// Chi-square of integer counts against Poisson(`mean`) over the bins
/// `{0, 1, ..., last - 1, >= last}`, with the mean counted as fitted.
pub fn poisson_chi_square(counts: &[u64], mean: f64, last: u64) -> TestResult {
    let law = Poisson::new(mean).expect("positive Poisson mean");
    let t = counts.len() as f64;
    let bins = last as usize + 1;
    let mut observed = vec![0.0; bins];
    for &c in counts {
        observed[(c.min(last)) as usize] += 1.0;
    }
    let mut expected: Vec<f64> = (0..last).map(|j| t * law.pmf(j)).collect();
    let head: f64 = expected.iter().sum();
    expected.push((t - head).max(0.0));
    chi_square(&observed, &expected, 1)
}

/// Chi-square of bin counts against equal expected counts.
pub fn uniform_chi_square(observed: &[u64]) -> TestResult {
    let total: u64 = observed.iter().sum();
    let e = total as f64 / observed.len() as f64;
    let obs: Vec<f64> = observed.iter().map(|&o| o as f64).collect();
    chi_square(&obs, &vec![e; observed.len()], 0)
}

/// Survival function of the Kolmogorov distribution, `P(K > x)`.
pub fn kolmogorov_sf(x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x < 0.3 {
        // The alternating series converges slowly here; the dual theta series
        // for the CDF does not.
        let t = std::f64::consts::PI * std::f64::consts::PI / (8.0 * x * x);
        let c = (2.0 * std::f64::consts::PI).sqrt() / x;
        let cdf: f64 = (1..=20).map(|j| (-((2 * j - 1) as f64).powi(2) * t).exp()).sum::<f64>() * c;
        return (1.0 - cdf).clamp(0.0, 1.0);
    }
    let mut sum = 0.0;
    for j in 1..=100 {
        let term = (-2.0 * (j * j) as f64 * x * x).exp();
        sum += if j % 2 == 1 { term } else { -term };
        if term < 1e-18 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// One-sample Kolmogorov-Smirnov test, with the small-sample correction
/// `(sqrt(n) + 0.12 + 0.11/sqrt(n)) D`.
pub fn ks_test(samples: &[f64], cdf: impl Fn(f64) -> f64) -> TestResult {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    if xs.is_empty() {
        return TestResult { statistic: f64::NAN, p_value: f64::NAN };
    }
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    let sn = n.sqrt();
    TestResult { statistic: d, p_value: kolmogorov_sf((sn + 0.12 + 0.11 / sn) * d) }
}

/// Weighted least-squares fit of `y ~ sum_j beta_j f_j(x)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<f64>,
    /// Weighted residual sum of squares.
    pub chi2: f64,
    pub dof: usize,
}

/// `design[i]` holds the basis values at observation `i`; `sigma[i]` is the
/// observation's standard error. Standard errors come from `(X' W X)^-1`.
pub fn weighted_least_squares(design: &[Vec<f64>], y: &[f64], sigma: &[f64]) -> Result<LinearFit> {
    let p = design.first().map_or(0, Vec::len);
    if p == 0 || p > MAX_COEFFICIENTS || design.len() < p || y.len() != design.len() || sigma.len() != design.len() {
        return Err(Error::config(format!(
            "least squares needs 1..={MAX_COEFFICIENTS} coefficients and at least as many observations"
        )));
    }
    let mut a = [[0.0; MAX_COEFFICIENTS]; MAX_COEFFICIENTS];
    let mut b = [0.0; MAX_COEFFICIENTS];
    for ((row, &yi), &si) in design.iter().zip(y).zip(sigma) {
        if !(si > 0.0) {
            return Err(Error::config("observation standard errors must be positive"));
        }
        let w = 1.0 / (si * si);
        for i in 0..p {
            b[i] += w * row[i] * yi;
            for j in 0..p {
                a[i][j] += w * row[i] * row[j];
            }
        }
    }
    let inv = linalg::invert(&a, p).ok_or_else(|| Error::config("singular least-squares design"))?;
    let coefficients: Vec<f64> = (0..p).map(|i| (0..p).map(|j| inv[i][j] * b[j]).sum()).collect();
    let std_errors = (0..p).map(|i| inv[i][i].sqrt()).collect();
    let chi2 = design
        .iter()
        .zip(y)
        .zip(sigma)
        .map(|((row, yi), si)| {
            let fit: f64 = row.iter().zip(&coefficients).map(|(f, c)| f * c).sum();
            ((yi - fit) / si).powi(2)
        })
        .sum();
    Ok(LinearFit { coefficients, std_errors, chi2, dof: design.len() - p })
}

/// Binomial proportion with its standard error.
pub fn proportion(successes: usize, trials: usize) -> Estimate {
    let p = successes as f64 / trials as f64;
    Estimate { value: p, std_error: (p * (1.0 - p) / trials as f64).sqrt() }
}
