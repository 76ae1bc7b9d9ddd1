//! Exploratory statistics: jitter and scaling, correlation functions, the
//! augmented Dickey–Fuller test, finite-level extremal correlation and a
//! Mann–Kendall trend test.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{mean, normal_cdf, ols, variance};
use crate::rng::substream;

/// 1% critical value of the constant-only Dickey–Fuller t statistic.
pub const ADF_CRITICAL_1PCT: f64 = -3.43;

/// Minimum number of conditioning exceedances for extremal correlation.
pub const MIN_EXTREMAL_EXCEEDANCES: usize = 20;

fn sd_checked(x: &[f64], what: &str) -> Result<f64> {
    if x.len() < 2 {
        return Err(Error::InsufficientData(format!("{what}: fewer than two observations")));
    }
    let sd = variance(x).sqrt();
    if !(sd > 0.0) || !sd.is_finite() {
        return Err(Error::ZeroVariance(what.to_string()));
    }
    Ok(sd)
}

/// Adds `N(0, (noise_fraction * sd)^2)` noise, then scales to unit variance.
pub fn jitter_and_normalize(series: &[f64], noise_fraction: f64, seed: u64) -> Result<Vec<f64>> {
    if !(noise_fraction >= 0.0) {
        return Err(Error::Precondition(format!("noise fraction {noise_fraction} must be nonnegative")));
    }
    let sd = sd_checked(series, "series to jitter")?;
    let mut rng = substream(seed, "jitter", 0);
    let noisy: Vec<f64> = series
        .iter()
        .map(|&x| {
            let e: f64 = StandardNormal.sample(&mut rng);
            x + noise_fraction * sd * e
        })
        .collect();
    let s = sd_checked(&noisy, "jittered series")?;
    Ok(noisy.into_iter().map(|x| x / s).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorrelationKind {
    Acf,
    Pacf,
    Ccf,
    Pccf,
}

impl std::fmt::Display for CorrelationKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CorrelationKind::Acf => "acf",
            CorrelationKind::Pacf => "pacf",
            CorrelationKind::Ccf => "ccf",
            CorrelationKind::Pccf => "pccf",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationSeries {
    pub kind: CorrelationKind,
    pub lags: Vec<usize>,
    pub values: Vec<f64>,
    /// `1.96 / sqrt(n)`.
    pub ci_halfwidth: f64,
}

/// `corr(x_t, y_{t+h})` for `h = 0..=max_lag`, normalized by the full-sample
/// variances.
fn cross_correlations(x: &[f64], y: &[f64], max_lag: usize) -> Vec<f64> {
    let n = x.len();
    let (mx, my) = (mean(x), mean(y));
    let cxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let cyy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let norm = (cxx * cyy).sqrt();
    (0..=max_lag)
        .map(|h| {
            let c: f64 = (0..n - h).map(|t| (x[t] - mx) * (y[t + h] - my)).sum();
            (c / norm).clamp(-1.0, 1.0)
        })
        .collect()
}

/// Partial autocorrelations `phi_{h,h}` for `h = 1..=max_lag` from the
/// autocorrelations `acf[0..=max_lag]` (Durbin–Levinson).
fn durbin_levinson(acf: &[f64]) -> Vec<f64> {
    let max_lag = acf.len() - 1;
    let mut out = Vec::with_capacity(max_lag);
    let mut phi: Vec<f64> = Vec::new();
    let mut v = 1.0;
    for h in 1..=max_lag {
        let num = acf[h] - (1..h).map(|j| phi[j - 1] * acf[h - j]).sum::<f64>();
        let a = if v > 0.0 { num / v } else { 0.0 };
        let mut next: Vec<f64> = (1..h).map(|j| phi[j - 1] - a * phi[h - j - 1]).collect();
        next.push(a);
        phi = next;
        v *= 1.0 - a * a;
        out.push(a.clamp(-1.0, 1.0));
    }
    out
}

fn residuals(design: &[Vec<f64>], y: &[f64]) -> Option<Vec<f64>> {
    let fit = ols(design, y)?;
    Some(
        design
            .iter()
            .zip(y)
            .map(|(row, &v)| v - row.iter().zip(&fit.coefficients).map(|(a, b)| a * b).sum::<f64>())
            .collect(),
    )
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let (ma, mb) = (mean(a), mean(b));
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    if va > 0.0 && vb > 0.0 {
        (cov / (va * vb).sqrt()).clamp(-1.0, 1.0)
    } else {
        0.0
    }
}

/// `corr(x_t, y_{t+h} | y_{t+1}, ..., y_{t+h-1})`: both sides are regressed
/// (with intercept) on the intermediate values of `y`.
fn partial_cross_correlations(x: &[f64], y: &[f64], max_lag: usize) -> Vec<f64> {
    let n = x.len();
    (0..=max_lag)
        .map(|h| {
            let rows = n - h;
            let xs = &x[..rows];
            let ys: Vec<f64> = (0..rows).map(|t| y[t + h]).collect();
            if h <= 1 {
                return pearson(xs, &ys);
            }
            let design: Vec<Vec<f64>> = (0..rows)
                .map(|t| std::iter::once(1.0).chain((1..h).map(|l| y[t + l])).collect())
                .collect();
            match (residuals(&design, xs), residuals(&design, &ys)) {
                (Some(rx), Some(ry)) => pearson(&rx, &ry),
                _ => f64::NAN,
            }
        })
        .collect()
}

/// Sample correlation function of the requested kind for lags `0..=max_lag`
/// (`1..=max_lag` for the PACF). Cross kinds need `y`.
pub fn correlation_functions(x: &[f64], y: Option<&[f64]>, max_lag: usize, kind: CorrelationKind) -> Result<CorrelationSeries> {
    let n = x.len();
    if max_lag >= n {
        return Err(Error::OutOfRange(format!("lag {max_lag} not below series length {n}")));
    }
    sd_checked(x, "x")?;
    let y = match (kind, y) {
        (CorrelationKind::Ccf | CorrelationKind::Pccf, None) => {
            return Err(Error::Precondition(format!("{kind} needs a second series")));
        }
        (_, Some(y)) if y.len() != n => {
            return Err(Error::Precondition(format!("series lengths {n} and {} differ", y.len())));
        }
        (_, y) => y,
    };
    if let Some(y) = y {
        sd_checked(y, "y")?;
    }
    let (lags, values): (Vec<usize>, Vec<f64>) = match kind {
        CorrelationKind::Acf => ((0..=max_lag).collect(), cross_correlations(x, x, max_lag)),
        CorrelationKind::Pacf => ((1..=max_lag).collect(), durbin_levinson(&cross_correlations(x, x, max_lag))),
        CorrelationKind::Ccf => ((0..=max_lag).collect(), cross_correlations(x, y.unwrap(), max_lag)),
        CorrelationKind::Pccf => ((0..=max_lag).collect(), partial_cross_correlations(x, y.unwrap(), max_lag)),
    };
    Ok(CorrelationSeries {
        kind,
        lags,
        values,
        ci_halfwidth: 1.96 / (n as f64).sqrt(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdfResult {
    pub statistic: f64,
    pub lags_used: usize,
    pub n_obs: usize,
    pub reject_at_1pct: bool,
}

/// Regresses `dx_t` on `(1, x_{t-1}, dx_{t-1}, ..., dx_{t-max_lag})`; the
/// statistic is the t ratio of the `x_{t-1}` coefficient.
pub fn adf_test(series: &[f64], max_lag: usize) -> Result<AdfResult> {
    let n = series.len();
    let k = 2 + max_lag;
    if n < max_lag + 2 + k + 1 {
        return Err(Error::InsufficientData(format!("{n} observations for an ADF regression with {max_lag} lags")));
    }
    sd_checked(series, "ADF series")?;
    let dx: Vec<f64> = series.windows(2).map(|w| w[1] - w[0]).collect();
    // dx[s] = x[s+1] - x[s]; the response dx_t uses t = s + 1
    let start = max_lag;
    let mut design = Vec::with_capacity(dx.len() - start);
    let mut y = Vec::with_capacity(dx.len() - start);
    for s in start..dx.len() {
        let mut row = vec![1.0, series[s]];
        row.extend((1..=max_lag).map(|l| dx[s - l]));
        design.push(row);
        y.push(dx[s]);
    }
    let fit = ols(&design, &y)
        .ok_or_else(|| Error::ConvergenceFailure("singular ADF regression".into()))?;
    let statistic = fit.coefficients[1] / fit.std_errors[1];
    if !statistic.is_finite() {
        return Err(Error::ConvergenceFailure("non-finite ADF statistic".into()));
    }
    Ok(AdfResult {
        statistic,
        lags_used: max_lag,
        n_obs: y.len(),
        reject_at_1pct: statistic < ADF_CRITICAL_1PCT,
    })
}

/// Order-statistic quantile `x_(ceil(u n))`, so exceedance sets depend on
/// ranks only.
fn rank_quantile(x: &[f64], u: f64) -> f64 {
    let mut s = x.to_vec();
    s.sort_by(f64::total_cmp);
    let k = ((u * s.len() as f64).ceil() as usize).clamp(1, s.len());
    s[k - 1]
}

/// Fraction of times `t` with `x_i(t)` above its `u` quantile at which
/// `x_j(t + h)` is above its own `u` quantile.
pub fn empirical_extremal_correlation(x_i: &[f64], x_j: &[f64], h: usize, u: f64) -> Result<f64> {
    let n = x_i.len();
    if x_j.len() != n {
        return Err(Error::Precondition(format!("series lengths {n} and {} differ", x_j.len())));
    }
    if !(u > 0.0 && u < 1.0) {
        return Err(Error::Precondition(format!("quantile level {u} outside (0,1)")));
    }
    if h >= n {
        return Err(Error::OutOfRange(format!("lag {h} not below series length {n}")));
    }
    let (qi, qj) = (rank_quantile(x_i, u), rank_quantile(x_j, u));
    let cond: Vec<usize> = (0..n - h).filter(|&t| x_i[t] > qi).collect();
    if cond.len() < MIN_EXTREMAL_EXCEEDANCES {
        return Err(Error::InsufficientExceedances {
            found: cond.len(),
            required: MIN_EXTREMAL_EXCEEDANCES,
        });
    }
    let joint = cond.iter().filter(|&&t| x_j[t + h] > qj).count();
    Ok(joint as f64 / cond.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrendTest {
    pub s: f64,
    pub tau: f64,
    pub z: f64,
    /// One-sided p-value for an increasing trend.
    pub p_increasing: f64,
    /// One-sided p-value for a decreasing trend.
    pub p_decreasing: f64,
}

/// Mann–Kendall test of `values` against their index (tie-corrected variance,
/// continuity-corrected normal approximation).
pub fn mann_kendall(values: &[f64]) -> Result<TrendTest> {
    let n = values.len();
    if n < 3 {
        return Err(Error::InsufficientData(format!("{n} values for a trend test")));
    }
    let mut s = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            s += (values[j] - values[i]).signum() * ((values[j] != values[i]) as u8 as f64);
        }
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        tie_term += t * (t - 1.0) * (2.0 * t + 5.0);
        i = j + 1;
    }
    let nf = n as f64;
    let var = (nf * (nf - 1.0) * (2.0 * nf + 5.0) - tie_term) / 18.0;
    let z = if var <= 0.0 {
        0.0
    } else if s > 0.0 {
        (s - 1.0) / var.sqrt()
    } else if s < 0.0 {
        (s + 1.0) / var.sqrt()
    } else {
        0.0
    };
    Ok(TrendTest {
        s,
        tau: s / (nf * (nf - 1.0) / 2.0),
        z,
        p_increasing: 1.0 - normal_cdf(z),
        p_decreasing: normal_cdf(z),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub lower: f64,
    pub upper: f64,
    pub count: usize,
}

/// Equal-width bins over `[min, max]`; the last bin is closed.
pub fn histogram(x: &[f64], bins: usize) -> Result<Vec<HistogramBin>> {
    if bins == 0 || x.is_empty() {
        return Err(Error::Precondition("histogram needs data and at least one bin".into()));
    }
    let lo = x.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
    let mut counts = vec![0usize; bins];
    for &v in x {
        let b = (((v - lo) / width) as usize).min(bins - 1);
        counts[b] += 1;
    }
    Ok(counts
        .into_iter()
        .enumerate()
        .map(|(b, count)| HistogramBin {
            lower: lo + b as f64 * width,
            upper: lo + (b + 1) as f64 * width,
            count,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn durbin_levinson_on_ar1_acf() {
        let acf: Vec<f64> = (0..6).map(|h| 0.6f64.powi(h)).collect();
        let pacf = durbin_levinson(&acf);
        assert!((pacf[0] - 0.6).abs() < 1e-15);
        assert!(pacf[1..].iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn mann_kendall_hand_example() {
        let t = mann_kendall(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert_eq!(t.s, 10.0);
        assert_eq!(t.tau, 1.0);
        let var: f64 = 5.0 * 4.0 * 15.0 / 18.0;
        assert!((t.z - 9.0 / var.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn histogram_counts_everything() {
        let h = histogram(&[0.0, 0.5, 1.0, 1.0, 2.0], 2).unwrap();
        assert_eq!(h[0].count, 2);
        assert_eq!(h[1].count, 3);
    }
}
