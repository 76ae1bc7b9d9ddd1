use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::brent_minimize;

/// Shapes within this distance of zero use the exponential limit forms.
const SHAPE_EPS: f64 = 1e-6;

/// Minimum number of exceedances accepted by [`fit_gpd_mle`].
pub const MIN_EXCEEDANCES: usize = 30;

/// Generalized Pareto tail above `threshold`.
///
/// `threshold_quantile` records the probability level of the threshold
/// within the full sample the tail was spliced onto.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GpdParams {
    pub shape: f64,
    pub scale: f64,
    pub threshold: f64,
    pub threshold_quantile: f64,
}

impl GpdParams {
    pub fn new(shape: f64, scale: f64, threshold: f64, threshold_quantile: f64) -> Result<Self> {
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::Domain(format!("GPD scale must be positive, got {scale}")));
        }
        if !shape.is_finite() || !threshold.is_finite() {
            return Err(Error::Domain("GPD parameters must be finite".into()));
        }
        if !(threshold_quantile > 0.0 && threshold_quantile < 1.0) {
            return Err(Error::Domain(format!(
                "threshold quantile must lie in (0,1), got {threshold_quantile}"
            )));
        }
        Ok(Self {
            shape,
            scale,
            threshold,
            threshold_quantile,
        })
    }

    /// Upper end of the support; infinite unless `shape < 0`.
    pub fn upper_endpoint(&self) -> f64 {
        if self.shape < 0.0 {
            self.threshold + self.scale / -self.shape
        } else {
            f64::INFINITY
        }
    }

    /// `P(X > x | X > threshold)`.
    pub fn survival(&self, x: f64) -> f64 {
        let z = (x - self.threshold) / self.scale;
        if z <= 0.0 {
            return 1.0;
        }
        if self.shape.abs() <= SHAPE_EPS {
            return (-z).exp();
        }
        let t = self.shape * z;
        if t <= -1.0 {
            return 0.0;
        }
        (-(t.ln_1p()) / self.shape).exp()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        1.0 - self.survival(x)
    }

    /// Inverse of [`GpdParams::cdf`] on `[0, 1)`.
    pub fn quantile(&self, u: f64) -> Result<f64> {
        if !(0.0..1.0).contains(&u) {
            return Err(Error::Domain(format!("GPD quantile level {u} outside [0,1)")));
        }
        Ok(self.threshold + self.scale * excess_quantile(u, self.shape))
    }

    pub fn log_density(&self, x: f64) -> f64 {
        log_density(x - self.threshold, self.shape, self.scale)
    }
}

/// Standardized excess quantile `((1-u)^(-shape) - 1) / shape`.
fn excess_quantile(u: f64, shape: f64) -> f64 {
    let log_tail = (-u).ln_1p();
    if shape.abs() <= SHAPE_EPS {
        -log_tail
    } else {
        (-shape * log_tail).exp_m1() / shape
    }
}

/// Log density of an excess `y = x - threshold`, with exponent `-(1 + 1/shape)`.
fn log_density(y: f64, shape: f64, scale: f64) -> f64 {
    if y < 0.0 || scale <= 0.0 {
        return f64::NEG_INFINITY;
    }
    let z = y / scale;
    if shape.abs() <= SHAPE_EPS {
        return -scale.ln() - z;
    }
    let t = shape * z;
    if t <= -1.0 {
        return f64::NEG_INFINITY;
    }
    -scale.ln() - (1.0 + 1.0 / shape) * t.ln_1p()
}

/// Log-likelihood of excesses (values already shifted by the threshold).
pub fn gpd_loglik(excesses: &[f64], shape: f64, scale: f64) -> f64 {
    excesses.iter().map(|&y| log_density(y, shape, scale)).sum()
}

/// Maximum-likelihood GPD fit with asymptotic standard errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GpdFit {
    pub shape: f64,
    pub scale: f64,
    pub threshold: f64,
    pub shape_se: f64,
    pub scale_se: f64,
    pub loglik: f64,
    pub iterations: usize,
}

impl GpdFit {
    pub fn params(&self, threshold_quantile: f64) -> Result<GpdParams> {
        GpdParams::new(self.shape, self.scale, self.threshold, threshold_quantile)
    }
}

/// Fits `(shape, scale)` to exceedances of `threshold` by maximum likelihood.
///
/// The likelihood is profiled over `theta = shape / scale` (a grid scan then
/// Brent refinement), which keeps `1 + shape * (x - threshold) / scale > 0`
/// for every point; `shape <= -1`, where the likelihood is unbounded, is
/// excluded.
pub fn fit_gpd_mle(exceedances: &[f64], threshold: f64) -> Result<GpdFit> {
    if exceedances.len() < MIN_EXCEEDANCES {
        return Err(Error::InsufficientData(format!(
            "{} exceedances, at least {MIN_EXCEEDANCES} required",
            exceedances.len()
        )));
    }
    let mut excesses: Vec<f64> = Vec::with_capacity(exceedances.len());
    for &x in exceedances {
        if !(x > threshold) || !x.is_finite() {
            return Err(Error::Domain(format!(
                "exceedance {x} is not strictly above threshold {threshold}"
            )));
        }
        excesses.push(x - threshold);
    }
    excesses.sort_by(f64::total_cmp);
    let (ymin, ymax) = (excesses[0], excesses[excesses.len() - 1]);
    if ymax - ymin <= 1e-12 * ymax.abs().max(1e-300) {
        return Err(Error::ConvergenceFailure(
            "degenerate likelihood: all exceedances equal".into(),
        ));
    }

    // Profile likelihood in theta = shape / scale: for fixed theta the
    // optimal shape is mean(ln(1 + theta y)) and scale = shape / theta.
    let n = excesses.len() as f64;
    let mean = excesses.iter().sum::<f64>() / n;
    let profile = |theta: f64| -> (f64, f64, f64) {
        if theta.abs() * ymax < 1e-12 {
            return (0.0, mean, -n * (mean.ln() + 1.0));
        }
        let k = excesses.iter().map(|&y| (theta * y).ln_1p()).sum::<f64>() / n;
        let scale = k / theta;
        if !(k > -1.0) || !(scale > 0.0) {
            return (k, scale, f64::NEG_INFINITY);
        }
        (k, scale, -n * (scale.ln() + k + 1.0))
    };
    // search coordinate psi = theta * ymax in (-1, inf)
    let at = |psi: f64| profile(psi / ymax).2;
    let mut grid: Vec<f64> = (1..=12).map(|i| -1.0 + (1e-9f64).powf(i as f64 / 12.0)).collect();
    grid.push(0.0);
    grid.extend((0..=24).map(|i| 10f64.powf(-4.0 + 8.0 * i as f64 / 24.0)));
    grid.sort_by(f64::total_cmp);
    let values: Vec<f64> = grid.iter().map(|&psi| at(psi)).collect();
    let mut iterations = grid.len();
    let i_best = (0..grid.len()).fold(0, |b, i| if values[i] > values[b] { i } else { b });
    if !values[i_best].is_finite() {
        return Err(Error::ConvergenceFailure("GPD profile likelihood is not finite".into()));
    }
    let lo = grid[i_best.saturating_sub(1)];
    let hi = grid[(i_best + 1).min(grid.len() - 1)];
    let (psi, _, evals) = brent_minimize(|psi| -at(psi), lo, hi, 1e-12, 200);
    iterations += evals;
    let psi = if at(psi) >= values[i_best] { psi } else { grid[i_best] };
    if i_best == grid.len() - 1 {
        return Err(Error::ConvergenceFailure(
            "GPD profile likelihood still increasing at the search boundary".into(),
        ));
    }
    let (shape, scale, _) = profile(psi / ymax);
    let (shape, scale) = if shape.abs() <= SHAPE_EPS { (0.0, mean) } else { (shape, scale) };
    let loglik = gpd_loglik(&excesses, shape, scale);
    let (shape_se, scale_se) = standard_errors(&excesses, shape, scale);
    Ok(GpdFit {
        shape,
        scale,
        threshold,
        shape_se,
        scale_se,
        loglik,
        iterations,
    })
}

/// Standard errors from the inverse observed information in `(shape, scale)`,
/// using central finite differences of the negative log-likelihood.
fn standard_errors(excesses: &[f64], shape: f64, scale: f64) -> (f64, f64) {
    let nll = |s: f64, c: f64| -gpd_loglik(excesses, s, c);
    let hs = 1e-4 * shape.abs().max(0.05);
    let hc = 1e-4 * scale;
    let f0 = nll(shape, scale);
    let fss = (nll(shape + hs, scale) - 2.0 * f0 + nll(shape - hs, scale)) / (hs * hs);
    let fcc = (nll(shape, scale + hc) - 2.0 * f0 + nll(shape, scale - hc)) / (hc * hc);
    let fsc = (nll(shape + hs, scale + hc) - nll(shape + hs, scale - hc) - nll(shape - hs, scale + hc)
        + nll(shape - hs, scale - hc))
        / (4.0 * hs * hc);
    let det = fss * fcc - fsc * fsc;
    if !(det > 0.0) || !(fss > 0.0) {
        return (f64::NAN, f64::NAN);
    }
    ((fcc / det).sqrt(), (fss / det).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{open_uniform, substream};

    fn params(shape: f64, scale: f64, threshold: f64) -> GpdParams {
        GpdParams::new(shape, scale, threshold, 0.9).unwrap()
    }

    fn simulate(p: &GpdParams, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = substream(seed, "gpd-test", 0);
        (0..n)
            .map(|_| p.quantile(1.0 - open_uniform(&mut rng)).unwrap())
            .filter(|&x| x > p.threshold)
            .collect()
    }

    #[test]
    fn survival_examples() {
        let p = params(0.3, 2.0, 1.5);
        assert_eq!(p.survival(1.5), 1.0);
        let e = params(0.0, 1.0, 0.0);
        assert!((e.survival(-(0.2f64).ln()) - 0.2).abs() < 1e-15);
        assert!((e.survival(1.6094) - 0.2).abs() < 1e-4);
        let bounded = params(-0.5, 1.0, 0.0);
        assert_eq!(bounded.upper_endpoint(), 2.0);
        assert_eq!(bounded.survival(2.5), 0.0);
    }

    #[test]
    fn shape_zero_limit_is_continuous() {
        for &s in &[1e-6, -1e-6, 1e-9, -1e-9] {
            let p = params(s, 1.3, 0.2);
            let e = params(0.0, 1.3, 0.2);
            for &x in &[0.3, 1.0, 4.0, 9.0] {
                assert!((p.survival(x) - e.survival(x)).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn quantile_examples() {
        let e = params(0.0, 1.0, 0.0);
        assert_eq!(e.quantile(0.0).unwrap(), 0.0);
        assert!((e.quantile(0.8).unwrap() - 1.609_437_912_434_100_3).abs() < 1e-12);
        let p = params(0.5, 2.0, 1.0);
        let q = p.quantile(0.75).unwrap();
        assert!((q - 5.0).abs() < 1e-12);
        // bisection on the survival function as an independent check
        let b = crate::numerics::bisect_increasing(|x| p.cdf(x), 0.75, 1.0, 100.0, 1e-13);
        assert!((b - 5.0).abs() < 1e-9);
        assert!(e.quantile(1.0).is_err());
        assert!(e.quantile(-0.1).is_err());
    }

    #[test]
    fn mle_recovers_heavy_and_light_tails() {
        let truth = params(0.2, 1.0, 0.0);
        let x = simulate(&truth, 10_000, 11);
        let fit = fit_gpd_mle(&x, 0.0).unwrap();
        assert!((fit.shape - 0.2).abs() < 0.06, "{fit:?}");
        assert!((fit.scale - 1.0).abs() < 0.08, "{fit:?}");
        assert!(fit.shape_se > 0.0 && fit.shape_se < 0.05);

        let expo = simulate(&params(0.0, 1.0, 0.0), 10_000, 12);
        let fit = fit_gpd_mle(&expo, 0.0).unwrap();
        assert!(fit.shape.abs() < 0.05, "{fit:?}");
    }

    #[test]
    fn mle_dominates_true_parameters() {
        for seed in 0..20 {
            let truth = params(-0.2 + 0.05 * seed as f64, 1.5, 2.0);
            let x = simulate(&truth, 500, 100 + seed);
            let fit = fit_gpd_mle(&x, 2.0).unwrap();
            let excess: Vec<f64> = x.iter().map(|v| v - 2.0).collect();
            assert!(fit.loglik >= gpd_loglik(&excess, truth.shape, truth.scale) - 1e-9);
        }
    }

    #[test]
    fn mle_error_paths() {
        let equal = vec![3.0; 50];
        assert!(matches!(fit_gpd_mle(&equal, 1.0), Err(Error::ConvergenceFailure(_))));
        let few: Vec<f64> = (1..20).map(f64::from).collect();
        assert!(matches!(fit_gpd_mle(&few, 0.0), Err(Error::InsufficientData(_))));
    }
}
