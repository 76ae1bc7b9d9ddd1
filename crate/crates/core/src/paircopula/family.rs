//! Closed-form bivariate Archimedean copulas and their rotations.
//!
//! Base (unrotated) functions take the parameter of a positively dependent
//! copula, except Frank which also accepts negative parameters. `h(u | v)`
//! denotes `dC(u, v) / dv`; by exchangeability `dC(u, v) / du = h(v | u)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::bisect_increasing;

/// Interior clamp for densities and conditional distributions.
pub const CLAMP: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CopulaFamily {
    Independence,
    Clayton,
    Gumbel,
    Frank,
    Joe,
}

impl CopulaFamily {
    pub const ALL: [CopulaFamily; 5] = [
        CopulaFamily::Independence,
        CopulaFamily::Clayton,
        CopulaFamily::Gumbel,
        CopulaFamily::Frank,
        CopulaFamily::Joe,
    ];

    /// Open search interval for the parameter of an unrotated copula with
    /// positive dependence.
    pub fn search_bounds(self) -> (f64, f64) {
        match self {
            CopulaFamily::Independence => (0.0, 0.0),
            CopulaFamily::Clayton => (1e-4, 28.0),
            CopulaFamily::Gumbel | CopulaFamily::Joe => (1.0 + 1e-6, 50.0),
            CopulaFamily::Frank => (1e-4, 35.0),
        }
    }

    /// Rotations in which the family is used.
    pub fn rotations(self) -> &'static [Rotation] {
        match self {
            CopulaFamily::Independence | CopulaFamily::Frank => &[Rotation::R0],
            _ => &Rotation::ALL,
        }
    }
}

impl std::fmt::Display for CopulaFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            CopulaFamily::Independence => "independence",
            CopulaFamily::Clayton => "clayton",
            CopulaFamily::Gumbel => "gumbel",
            CopulaFamily::Frank => "frank",
            CopulaFamily::Joe => "joe",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for CopulaFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "independence" | "indep" => Ok(CopulaFamily::Independence),
            "clayton" => Ok(CopulaFamily::Clayton),
            "gumbel" => Ok(CopulaFamily::Gumbel),
            "frank" => Ok(CopulaFamily::Frank),
            "joe" => Ok(CopulaFamily::Joe),
            other => Err(Error::Precondition(format!("unknown copula family '{other}'"))),
        }
    }
}

/// Counter-clockwise rotation; 90 and 270 degrees give negative dependence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "u16", try_from = "u16")]
pub enum Rotation {
    R0,
    R90,
    R180,
    R270,
}

impl Rotation {
    pub const ALL: [Rotation; 4] = [Rotation::R0, Rotation::R90, Rotation::R180, Rotation::R270];

    pub fn degrees(self) -> u16 {
        match self {
            Rotation::R0 => 0,
            Rotation::R90 => 90,
            Rotation::R180 => 180,
            Rotation::R270 => 270,
        }
    }

    /// Whether the rotated copula has negative concordance.
    pub fn is_negative(self) -> bool {
        matches!(self, Rotation::R90 | Rotation::R270)
    }
}

impl From<Rotation> for u16 {
    fn from(r: Rotation) -> u16 {
        r.degrees()
    }
}

impl TryFrom<u16> for Rotation {
    type Error = String;

    fn try_from(d: u16) -> std::result::Result<Self, String> {
        match d {
            0 => Ok(Rotation::R0),
            90 => Ok(Rotation::R90),
            180 => Ok(Rotation::R180),
            270 => Ok(Rotation::R270),
            other => Err(format!("rotation must be 0, 90, 180 or 270, got {other}")),
        }
    }
}

/// Which argument of the copula is conditioned on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Conditioning {
    /// `dC(u, v) / du`: distribution of the second argument given the first.
    First,
    /// `dC(u, v) / dv`: distribution of the first argument given the second.
    Second,
}

/// One bivariate building block.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairCopula {
    pub family: CopulaFamily,
    pub rotation: Rotation,
    pub theta: f64,
}

fn clamp(x: f64) -> f64 {
    x.clamp(CLAMP, 1.0 - CLAMP)
}

impl PairCopula {
    pub fn independence() -> Self {
        Self {
            family: CopulaFamily::Independence,
            rotation: Rotation::R0,
            theta: 0.0,
        }
    }

    /// Validates the parameter against the family domain.
    pub fn new(family: CopulaFamily, rotation: Rotation, theta: f64) -> Result<Self> {
        let ok = match family {
            CopulaFamily::Independence => rotation == Rotation::R0,
            CopulaFamily::Clayton => theta > 0.0 && theta.is_finite(),
            CopulaFamily::Gumbel | CopulaFamily::Joe => theta >= 1.0 && theta.is_finite(),
            CopulaFamily::Frank => rotation == Rotation::R0 && theta != 0.0 && theta.is_finite(),
        };
        if !ok {
            return Err(Error::OutOfRange(format!(
                "parameter {theta} with rotation {} invalid for {family}",
                rotation.degrees()
            )));
        }
        let theta = if family == CopulaFamily::Independence { 0.0 } else { theta };
        Ok(Self {
            family,
            rotation,
            theta,
        })
    }

    pub fn is_independence(&self) -> bool {
        self.family == CopulaFamily::Independence
    }

    /// Number of free parameters (0 or 1).
    pub fn parameter_count(&self) -> usize {
        usize::from(!self.is_independence())
    }

    pub fn cdf(&self, u: f64, v: f64) -> f64 {
        let (u, v) = (u.clamp(0.0, 1.0), v.clamp(0.0, 1.0));
        let c = |a: f64, b: f64| base_cdf(self.family, self.theta, a, b);
        let value = match self.rotation {
            Rotation::R0 => c(u, v),
            Rotation::R90 => v - c(1.0 - u, v),
            Rotation::R180 => u + v - 1.0 + c(1.0 - u, 1.0 - v),
            Rotation::R270 => u - c(u, 1.0 - v),
        };
        value.clamp(0.0, 1.0)
    }

    pub fn log_pdf(&self, u: f64, v: f64) -> f64 {
        let (u, v) = (clamp(u), clamp(v));
        let (a, b) = match self.rotation {
            Rotation::R0 => (u, v),
            Rotation::R90 => (1.0 - u, v),
            Rotation::R180 => (1.0 - u, 1.0 - v),
            Rotation::R270 => (u, 1.0 - v),
        };
        base_log_pdf(self.family, self.theta, a, b)
    }

    pub fn pdf(&self, u: f64, v: f64) -> f64 {
        self.log_pdf(u, v).exp()
    }

    /// Conditional distribution: `dC/dv` for [`Conditioning::Second`],
    /// `dC/du` for [`Conditioning::First`].
    pub fn hfunc(&self, u: f64, v: f64, cond: Conditioning) -> f64 {
        let (u, v) = (clamp(u), clamp(v));
        let h = |a: f64, b: f64| base_h(self.family, self.theta, a, b);
        let value = match (self.rotation, cond) {
            (Rotation::R0, Conditioning::Second) => h(u, v),
            (Rotation::R0, Conditioning::First) => h(v, u),
            (Rotation::R90, Conditioning::Second) => 1.0 - h(1.0 - u, v),
            (Rotation::R90, Conditioning::First) => h(v, 1.0 - u),
            (Rotation::R180, Conditioning::Second) => 1.0 - h(1.0 - u, 1.0 - v),
            (Rotation::R180, Conditioning::First) => 1.0 - h(1.0 - v, 1.0 - u),
            (Rotation::R270, Conditioning::Second) => h(u, 1.0 - v),
            (Rotation::R270, Conditioning::First) => 1.0 - h(1.0 - v, u),
        };
        clamp(value)
    }

    /// `dC(u, v) / dv` (distribution of `u` given `v`).
    pub fn h_given_second(&self, u: f64, v: f64) -> f64 {
        self.hfunc(u, v, Conditioning::Second)
    }

    /// `dC(u, v) / du` (distribution of `v` given `u`).
    pub fn h_given_first(&self, u: f64, v: f64) -> f64 {
        self.hfunc(u, v, Conditioning::First)
    }

    /// Inverts [`PairCopula::hfunc`] in its free argument: returns `u` with
    /// `hfunc(u, given, Second) = w`, or `v` with `hfunc(given, v, First) = w`.
    pub fn hinv(&self, w: f64, given: f64, cond: Conditioning) -> f64 {
        let (w, g) = (clamp(w), clamp(given));
        let hi = |p: f64, q: f64| base_hinv(self.family, self.theta, p, q);
        let value = match (self.rotation, cond) {
            (Rotation::R0, _) => hi(w, g),
            (Rotation::R90, Conditioning::Second) => 1.0 - hi(1.0 - w, g),
            (Rotation::R90, Conditioning::First) => hi(w, 1.0 - g),
            (Rotation::R180, _) => 1.0 - hi(1.0 - w, 1.0 - g),
            (Rotation::R270, Conditioning::Second) => hi(w, 1.0 - g),
            (Rotation::R270, Conditioning::First) => 1.0 - hi(1.0 - w, g),
        };
        clamp(value)
    }

    /// Inverse of [`PairCopula::h_given_second`] in `u`.
    pub fn hinv_given_second(&self, w: f64, v: f64) -> f64 {
        self.hinv(w, v, Conditioning::Second)
    }

    /// Inverse of [`PairCopula::h_given_first`] in `v`.
    pub fn hinv_given_first(&self, w: f64, u: f64) -> f64 {
        self.hinv(w, u, Conditioning::First)
    }
}

fn base_cdf(family: CopulaFamily, theta: f64, u: f64, v: f64) -> f64 {
    if u <= 0.0 || v <= 0.0 {
        return 0.0;
    }
    if u >= 1.0 {
        return v;
    }
    if v >= 1.0 {
        return u;
    }
    match family {
        CopulaFamily::Independence => u * v,
        CopulaFamily::Clayton => {
            let s = (-theta * u.ln()).exp_m1() + (-theta * v.ln()).exp();
            (-s.ln() / theta).exp()
        }
        CopulaFamily::Gumbel => (-gumbel_a(theta, -u.ln(), -v.ln())).exp(),
        CopulaFamily::Frank => {
            let num = (-theta * u).exp_m1() * (-theta * v).exp_m1();
            -(num / (-theta).exp_m1()).ln_1p() / theta
        }
        CopulaFamily::Joe => {
            let a = (1.0 - u).powf(theta);
            let b = (1.0 - v).powf(theta);
            1.0 - (a + b - a * b).powf(1.0 / theta)
        }
    }
}

/// `(x^θ + y^θ)^(1/θ)` without overflow.
fn gumbel_a(theta: f64, x: f64, y: f64) -> f64 {
    let (lo, hi) = if x < y { (x, y) } else { (y, x) };
    if hi == 0.0 {
        return 0.0;
    }
    hi * (1.0 + (lo / hi).powf(theta)).powf(1.0 / theta)
}

fn base_log_pdf(family: CopulaFamily, theta: f64, u: f64, v: f64) -> f64 {
    match family {
        CopulaFamily::Independence => 0.0,
        CopulaFamily::Clayton => {
            let (lu, lv) = (u.ln(), v.ln());
            let s = (-theta * lu).exp_m1() + (-theta * lv).exp();
            theta.ln_1p() - (theta + 1.0) * (lu + lv) - (1.0 / theta + 2.0) * s.ln()
        }
        CopulaFamily::Gumbel => {
            let (x, y) = (-u.ln(), -v.ln());
            let a = gumbel_a(theta, x, y);
            -a - u.ln() - v.ln() + (theta - 1.0) * (x.ln() + y.ln()) + (1.0 - 2.0 * theta) * a.ln()
                + (a + theta - 1.0).ln()
        }
        CopulaFamily::Frank => {
            let g = (-theta).exp_m1();
            let a = (-theta * u).exp_m1();
            (-theta * g).ln() + theta * (v - u) - 2.0 * a.abs().ln() - 2.0 * frank_z(theta, u, v).ln_1p()
        }
        CopulaFamily::Joe => {
            let (lu, lv) = ((-u).ln_1p(), (-v).ln_1p());
            let a = (theta * lu).exp();
            let b = (theta * lv).exp();
            let s = a + b - a * b;
            (1.0 / theta - 2.0) * s.ln() + (theta - 1.0) * (lu + lv) + (theta - 1.0 + s).ln()
        }
    }
}

/// Frank `h(u | v) = 1 / (1 + z)`; this form keeps every term positive.
fn frank_z(theta: f64, u: f64, v: f64) -> f64 {
    (theta * (v - u)).exp() * (-theta * (1.0 - u)).exp_m1() / (-theta * u).exp_m1()
}

/// `h(u | v) = dC(u, v) / dv`.
fn base_h(family: CopulaFamily, theta: f64, u: f64, v: f64) -> f64 {
    match family {
        CopulaFamily::Independence => u,
        CopulaFamily::Clayton => {
            let (lu, lv) = (u.ln(), v.ln());
            let s = (-theta * lu).exp_m1() + (-theta * lv).exp();
            (-(theta + 1.0) * lv - (1.0 / theta + 1.0) * s.ln()).exp()
        }
        CopulaFamily::Gumbel => {
            let (x, y) = (-u.ln(), -v.ln());
            let a = gumbel_a(theta, x, y);
            (-a + (1.0 - theta) * a.ln() + (theta - 1.0) * y.ln() - v.ln()).exp()
        }
        CopulaFamily::Frank => 1.0 / (1.0 + frank_z(theta, u, v)),
        CopulaFamily::Joe => {
            let (lu, lv) = ((-u).ln_1p(), (-v).ln_1p());
            let a = (theta * lu).exp();
            let b = (theta * lv).exp();
            let s = a + b - a * b;
            ((1.0 / theta - 1.0) * s.ln() + (theta - 1.0) * lv).exp() * (1.0 - a)
        }
    }
}

/// Solves `h(u | v) = w` for `u`: closed form where one exists, with the
/// iterative solver taking over when cancellation spoils it.
fn base_hinv(family: CopulaFamily, theta: f64, w: f64, v: f64) -> f64 {
    let u = closed_form_hinv(family, theta, w, v);
    if u > 0.0 && u < 1.0 && (base_h(family, theta, clamp(u), v) - w).abs() <= 1e-12 {
        return u;
    }
    solve_h(family, theta, w, v)
}

fn closed_form_hinv(family: CopulaFamily, theta: f64, w: f64, v: f64) -> f64 {
    match family {
        CopulaFamily::Independence => w,
        CopulaFamily::Clayton => {
            let lv = v.ln();
            let t = (-theta / (1.0 + theta)) * (w.ln() + (theta + 1.0) * lv);
            let s = t.exp() - (-theta * lv).exp() + 1.0;
            if s > 0.0 && s.is_finite() {
                (-s.ln() / theta).exp()
            } else {
                f64::NAN
            }
        }
        CopulaFamily::Frank => {
            let b = (-theta * v).exp_m1();
            let g = (-theta).exp_m1();
            let a = w * g / (1.0 + b * (1.0 - w));
            -a.ln_1p() / theta
        }
        CopulaFamily::Gumbel | CopulaFamily::Joe => f64::NAN,
    }
}

/// Safeguarded Newton iteration for `h(u | v) = w`, using the density as the
/// derivative of `h` in `u`.
fn solve_h(family: CopulaFamily, theta: f64, w: f64, v: f64) -> f64 {
    let (mut lo, mut hi) = (CLAMP, 1.0 - CLAMP);
    let h = |u: f64| base_h(family, theta, u, v);
    if h(lo) >= w {
        return lo;
    }
    if h(hi) <= w {
        return hi;
    }
    let mut u = w.clamp(lo, hi);
    for _ in 0..100 {
        let f = h(u) - w;
        if f.abs() < 1e-15 {
            return u;
        }
        if f < 0.0 {
            lo = u;
        } else {
            hi = u;
        }
        if hi - lo < 1e-16 {
            return 0.5 * (lo + hi);
        }
        let slope = base_log_pdf(family, theta, u, v).exp();
        let newton = u - f / slope;
        u = if newton.is_finite() && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
    }
    bisect_increasing(h, w, lo, hi, 1e-16)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cop(f: CopulaFamily, r: Rotation, t: f64) -> PairCopula {
        PairCopula::new(f, r, t).unwrap()
    }

    fn samples() -> Vec<PairCopula> {
        let mut out = vec![PairCopula::independence()];
        for r in Rotation::ALL {
            out.push(cop(CopulaFamily::Clayton, r, 2.3));
            out.push(cop(CopulaFamily::Gumbel, r, 1.8));
            out.push(cop(CopulaFamily::Joe, r, 2.1));
        }
        out.push(cop(CopulaFamily::Frank, Rotation::R0, 5.0));
        out.push(cop(CopulaFamily::Frank, Rotation::R0, -4.0));
        out
    }

    #[test]
    fn worked_values() {
        assert!((PairCopula::independence().cdf(0.3, 0.5) - 0.15).abs() < 1e-15);
        let c = cop(CopulaFamily::Clayton, Rotation::R0, 2.0);
        assert!((c.cdf(0.5, 0.5) - 7f64.powf(-0.5)).abs() < 1e-14);
        assert!((c.h_given_second(0.5, 0.5) - 8.0 * 7f64.powf(-1.5)).abs() < 1e-12);
        assert_eq!(PairCopula::independence().pdf(0.2, 0.9), 1.0);
        assert_eq!(PairCopula::independence().h_given_second(0.2, 0.9), 0.2);
        assert_eq!(PairCopula::independence().hinv_given_second(0.2, 0.9), 0.2);
    }

    #[test]
    fn uniform_margins_and_survival_rotation() {
        for c in samples() {
            for i in 1..100 {
                let u = i as f64 / 100.0;
                assert!((c.cdf(u, 1.0) - u).abs() < 1e-12, "{c:?}");
                assert!((c.cdf(1.0, u) - u).abs() < 1e-12, "{c:?}");
            }
            if c.rotation == Rotation::R0 && c.family != CopulaFamily::Frank {
                let s = PairCopula { rotation: Rotation::R180, ..c };
                for i in 1..20 {
                    for j in 1..20 {
                        let (u, v) = (i as f64 / 20.0, j as f64 / 20.0);
                        let expect = u + v - 1.0 + c.cdf(1.0 - u, 1.0 - v);
                        assert!((s.cdf(u, v) - expect).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn h_matches_finite_differences_of_cdf() {
        let eps = 1e-6;
        for c in samples() {
            for i in 1..10 {
                for j in 1..10 {
                    let (u, v) = (i as f64 / 10.0, j as f64 / 10.0);
                    let dv = (c.cdf(u, v + eps) - c.cdf(u, v - eps)) / (2.0 * eps);
                    let du = (c.cdf(u + eps, v) - c.cdf(u - eps, v)) / (2.0 * eps);
                    assert!((c.h_given_second(u, v) - dv).abs() < 1e-5, "{c:?} {u} {v}");
                    assert!((c.h_given_first(u, v) - du).abs() < 1e-5, "{c:?} {u} {v}");
                    let dd = (c.h_given_second(u + eps, v) - c.h_given_second(u - eps, v)) / (2.0 * eps);
                    assert!((c.pdf(u, v) - dd).abs() < 1e-4 * c.pdf(u, v).max(1.0), "{c:?}");
                }
            }
        }
    }

    #[test]
    fn clayton_closed_form_inverse_matches_bisection() {
        let c = cop(CopulaFamily::Clayton, Rotation::R0, 2.0);
        for i in 1..20 {
            for j in 1..20 {
                let (w, v) = (i as f64 / 20.0, j as f64 / 20.0);
                let closed = c.hinv_given_second(w, v);
                let bis = bisect_increasing(|u| c.h_given_second(u, v), w, 0.0, 1.0, 1e-14);
                assert!((closed - bis).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn out_of_domain_parameters_rejected() {
        assert!(PairCopula::new(CopulaFamily::Gumbel, Rotation::R0, 0.5).is_err());
        assert!(PairCopula::new(CopulaFamily::Clayton, Rotation::R0, -0.5).is_err());
        assert!(PairCopula::new(CopulaFamily::Frank, Rotation::R0, 0.0).is_err());
        assert!(PairCopula::new(CopulaFamily::Frank, Rotation::R90, 2.0).is_err());
    }

    #[test]
    fn serializes_as_family_rotation_theta() {
        let c = cop(CopulaFamily::Gumbel, Rotation::R270, 1.5);
        let s = serde_json::to_string(&c).unwrap();
        assert_eq!(s, r#"{"family":"gumbel","rotation":270,"theta":1.5}"#);
        let back: PairCopula = serde_json::from_str(&s).unwrap();
        assert_eq!(back, c);
    }
}
