use std::sync::OnceLock;

use super::family::{CopulaFamily, PairCopula};
use crate::error::{Error, Result};
use crate::numerics::{bisect_increasing, integrate};

const QUAD_TOL: f64 = 1e-9;

/// Debye function of order one, `(1/x) * integral_0^x t / (e^t - 1) dt`, for `x > 0`.
fn debye1(x: f64) -> f64 {
    let f = |t: f64| if t < 1e-12 { 1.0 - 0.5 * t } else { t / t.exp_m1() };
    integrate(f, 0.0, x, QUAD_TOL) / x
}

fn frank_tau(theta: f64) -> f64 {
    let a = theta.abs();
    if a < 1e-8 {
        return theta / 9.0;
    }
    let t = 1.0 - 4.0 / a * (1.0 - debye1(a));
    t.copysign(theta)
}

/// `1 + 4 * integral_0^1 phi(t) / phi'(t) dt` for the Joe generator
/// `phi(t) = -ln(1 - (1 - t)^theta)`, written in `s = 1 - t`.
fn joe_tau_exact(theta: f64) -> f64 {
    if theta <= 1.0 {
        return 0.0;
    }
    let f = |s: f64| {
        let st = s.powf(theta);
        (-st).ln_1p() * (1.0 - st) / (theta * s.powf(theta - 1.0))
    };
    1.0 + 4.0 * integrate(f, 0.0, 1.0, QUAD_TOL)
}

struct TauGrid {
    thetas: Vec<f64>,
    taus: Vec<f64>,
}

impl TauGrid {
    fn build(lo: f64, hi: f64, f: impl Fn(f64) -> f64) -> Self {
        let n = 256;
        let (llo, lhi) = (lo.ln(), hi.ln());
        let thetas: Vec<f64> = (0..=n)
            .map(|i| (llo + (lhi - llo) * i as f64 / n as f64).exp())
            .collect();
        let taus = thetas.iter().map(|&t| f(t)).collect();
        Self { thetas, taus }
    }

    /// Bracket from the grid, then bisection on the exact map.
    fn invert(&self, tau: f64, f: impl Fn(f64) -> f64) -> f64 {
        let j = self.taus.partition_point(|&t| t < tau).clamp(1, self.taus.len() - 1);
        bisect_increasing(f, tau, self.thetas[j - 1], self.thetas[j], 1e-12)
    }
}

fn frank_grid() -> &'static TauGrid {
    static GRID: OnceLock<TauGrid> = OnceLock::new();
    GRID.get_or_init(|| TauGrid::build(1e-4, 35.0, frank_tau))
}

fn joe_grid() -> &'static TauGrid {
    static GRID: OnceLock<TauGrid> = OnceLock::new();
    GRID.get_or_init(|| TauGrid::build(1.0 + 1e-6, 50.0, joe_tau_exact))
}

/// Kendall's tau of an unrotated family at parameter `theta`.
pub(crate) fn family_tau(family: CopulaFamily, theta: f64) -> f64 {
    match family {
        CopulaFamily::Independence => 0.0,
        CopulaFamily::Clayton => theta / (theta + 2.0),
        CopulaFamily::Gumbel => 1.0 - 1.0 / theta,
        CopulaFamily::Frank => frank_tau(theta),
        CopulaFamily::Joe => joe_tau_exact(theta),
    }
}

/// Population Kendall's tau, negated for the 90 and 270 degree rotations.
pub fn kendall_tau(pc: &PairCopula) -> f64 {
    let t = family_tau(pc.family, pc.theta);
    if pc.rotation.is_negative() {
        -t
    } else {
        t
    }
}

/// Parameter of the unrotated family with Kendall's tau `tau`.
pub fn theta_from_tau(tau: f64, family: CopulaFamily) -> Result<f64> {
    let infeasible = || Error::OutOfRange(format!("tau {tau} infeasible for {family}"));
    if !tau.is_finite() || tau.abs() >= 1.0 {
        return Err(infeasible());
    }
    match family {
        CopulaFamily::Independence => Ok(0.0),
        CopulaFamily::Clayton if tau > 0.0 => Ok(2.0 * tau / (1.0 - tau)),
        CopulaFamily::Gumbel if tau >= 0.0 => Ok(1.0 / (1.0 - tau)),
        CopulaFamily::Frank => {
            if tau == 0.0 {
                return Ok(0.0);
            }
            let a = tau.abs();
            let grid = frank_grid();
            if a >= *grid.taus.last().unwrap() {
                return Ok(35.0f64.copysign(tau));
            }
            if a <= grid.taus[0] {
                return Ok((9.0 * a).copysign(tau));
            }
            Ok(grid.invert(a, frank_tau).copysign(tau))
        }
        CopulaFamily::Joe if tau >= 0.0 => {
            let grid = joe_grid();
            if tau <= grid.taus[0] {
                return Ok(1.0);
            }
            if tau >= *grid.taus.last().unwrap() {
                return Ok(50.0);
            }
            Ok(grid.invert(tau, joe_tau_exact))
        }
        _ => Err(infeasible()),
    }
}

/// Merge sort that counts exchanges (discordant pairs) in `O(n log n)`.
fn sort_count_swaps(v: &mut [f64], buf: &mut [f64]) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let (left, right) = v.split_at_mut(mid);
    let mut swaps = sort_count_swaps(left, &mut buf[..mid]) + sort_count_swaps(right, &mut buf[mid..]);
    let (mut i, mut j, mut k) = (0, mid, 0);
    while i < mid && j < n {
        if v[j] < v[i] {
            buf[k] = v[j];
            swaps += (mid - i) as u64;
            j += 1;
        } else {
            buf[k] = v[i];
            i += 1;
        }
        k += 1;
    }
    buf[k..k + mid - i].copy_from_slice(&v[i..mid]);
    let k2 = k + mid - i;
    buf[k2..n].copy_from_slice(&v[j..n]);
    v.copy_from_slice(&buf[..n]);
    swaps
}

fn tied_pairs<T: PartialEq>(sorted: impl Iterator<Item = T>) -> u64 {
    let mut total = 0u64;
    let mut run = 0u64;
    let mut prev: Option<T> = None;
    for x in sorted {
        if prev.as_ref() == Some(&x) {
            run += 1;
        } else {
            total += run * (run.saturating_sub(1)) / 2;
            run = 1;
        }
        prev = Some(x);
    }
    total + run * run.saturating_sub(1) / 2
}

/// Sample Kendall's tau-b (Knight's algorithm).
pub fn kendall_tau_b(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::Precondition(format!(
            "Kendall's tau needs two equal-length sequences of at least 2 points ({} vs {})",
            x.len(),
            y.len()
        )));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::Domain("non-finite value in Kendall's tau input".into()));
    }
    let n = x.len() as u64;
    let mut pairs: Vec<(f64, f64)> = x.iter().copied().zip(y.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let n0 = n * (n - 1) / 2;
    let n1 = tied_pairs(pairs.iter().map(|p| p.0));
    let n3 = tied_pairs(pairs.iter().copied());
    let mut ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let mut buf = vec![0.0; ys.len()];
    let swaps = sort_count_swaps(&mut ys, &mut buf);
    let n2 = tied_pairs(ys.iter().copied());
    if n1 == n0 || n2 == n0 {
        return Err(Error::ZeroVariance("constant sequence in Kendall's tau".into()));
    }
    let s = n0 as i128 - n1 as i128 - n2 as i128 + n3 as i128 - 2 * swaps as i128;
    let denom = ((n0 - n1) as f64).sqrt() * ((n0 - n2) as f64).sqrt();
    Ok((s as f64 / denom).clamp(-1.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_tau_b(x: &[f64], y: &[f64]) -> f64 {
        let n = x.len();
        let (mut s, mut tx, mut ty, mut n0) = (0i64, 0i64, 0i64, 0i64);
        for i in 0..n {
            for j in i + 1..n {
                n0 += 1;
                let dx = (x[i] - x[j]).signum() * f64::from(u8::from(x[i] != x[j]));
                let dy = (y[i] - y[j]).signum() * f64::from(u8::from(y[i] != y[j]));
                s += (dx * dy) as i64;
                tx += i64::from(x[i] == x[j]);
                ty += i64::from(y[i] == y[j]);
            }
        }
        s as f64 / (((n0 - tx) as f64) * ((n0 - ty) as f64)).sqrt()
    }

    #[test]
    fn tau_b_matches_quadratic_count_with_ties() {
        let x: Vec<f64> = (0..200).map(|i| ((i * 37 % 101) as f64 / 7.0).floor()).collect();
        let y: Vec<f64> = (0..200).map(|i| ((i * 53 % 89) as f64 / 5.0).floor() + (i % 3) as f64).collect();
        assert_eq!(kendall_tau_b(&x, &y).unwrap(), brute_tau_b(&x, &y));
    }

    #[test]
    fn tau_b_extremes_and_errors() {
        let x: Vec<f64> = (0..50).map(f64::from).collect();
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert_eq!(kendall_tau_b(&x, &x).unwrap(), 1.0);
        assert_eq!(kendall_tau_b(&x, &neg).unwrap(), -1.0);
        assert!(matches!(kendall_tau_b(&x, &[1.0; 50]), Err(Error::ZeroVariance(_))));
    }

    #[test]
    fn closed_form_inversions() {
        assert!((theta_from_tau(0.5, CopulaFamily::Clayton).unwrap() - 2.0).abs() < 1e-15);
        assert!((theta_from_tau(0.5, CopulaFamily::Gumbel).unwrap() - 2.0).abs() < 1e-15);
        assert!(theta_from_tau(-0.2, CopulaFamily::Gumbel).is_err());
        assert!(theta_from_tau(-0.2, CopulaFamily::Clayton).is_err());
        assert!(theta_from_tau(1e-7, CopulaFamily::Frank).unwrap().abs() < 1e-5);
    }

    #[test]
    fn frank_and_joe_round_trip() {
        for &tau in &[0.05, 0.2, 0.5, 0.8] {
            let f = theta_from_tau(tau, CopulaFamily::Frank).unwrap();
            assert!((frank_tau(f) - tau).abs() < 1e-9);
            let fneg = theta_from_tau(-tau, CopulaFamily::Frank).unwrap();
            assert!((fneg + f).abs() < 1e-12);
            let j = theta_from_tau(tau, CopulaFamily::Joe).unwrap();
            assert!((joe_tau_exact(j) - tau).abs() < 1e-9);
        }
    }

    #[test]
    fn joe_series_agrees_with_quadrature() {
        for &theta in &[1.5, 2.0, 4.0, 9.0] {
            let series: f64 = (1..200_000)
                .map(|k| {
                    let k = k as f64;
                    1.0 / (k * (theta * k + 2.0) * (theta * (k - 1.0) + 2.0))
                })
                .sum();
            assert!((1.0 - 4.0 * series - joe_tau_exact(theta)).abs() < 1e-8, "{theta}");
        }
    }
}
