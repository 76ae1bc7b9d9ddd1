use eep_core::numerics::{bisect_increasing, gauss_legendre};
use eep_core::paircopula::{
    fit_pair, independence_test, kendall_tau, kendall_tau_b, sample_pair, select_pair, theta_from_tau, CopulaFamily,
    PairCopula, Rotation, SelectionOptions,
};
use eep_core::rng::{open_uniform, substream};
use proptest::prelude::*;

fn pc(f: CopulaFamily, r: Rotation, t: f64) -> PairCopula {
    PairCopula::new(f, r, t).unwrap()
}

fn unzip(p: Vec<(f64, f64)>) -> (Vec<f64>, Vec<f64>) {
    p.into_iter().unzip()
}

/// Kendall's tau as `1 - 4 * E[dC/du * dC/dv]` under Lebesgue measure.
fn tau_by_quadrature(c: &PairCopula) -> f64 {
    let (x, w) = gauss_legendre(200, 0.0, 1.0);
    let mut acc = 0.0;
    for i in 0..x.len() {
        for j in 0..x.len() {
            acc += w[i] * w[j] * c.h_given_first(x[i], x[j]) * c.h_given_second(x[i], x[j]);
        }
    }
    1.0 - 4.0 * acc
}

#[test]
fn frank_density_integrates_to_one() {
    let c = pc(CopulaFamily::Frank, Rotation::R0, 5.0);
    let (x, w) = gauss_legendre(64, 0.0, 1.0);
    let mut total = 0.0;
    for i in 0..64 {
        for j in 0..64 {
            total += w[i] * w[j] * c.pdf(x[i], x[j]);
        }
    }
    assert!((total - 1.0).abs() < 1e-6, "{total}");
}

#[test]
fn clayton_density_matches_mixed_difference_of_cdf() {
    let c = pc(CopulaFamily::Clayton, Rotation::R0, 2.0);
    let e = 1e-4;
    let (u, v) = (0.5, 0.5);
    let fd = (c.cdf(u + e, v + e) - c.cdf(u + e, v - e) - c.cdf(u - e, v + e) + c.cdf(u - e, v - e)) / (4.0 * e * e);
    assert!((c.pdf(u, v) - fd).abs() < 1e-5);
    assert!((c.h_given_second(0.5, 0.5) - 0.4320).abs() < 1e-4);
}

#[test]
fn tau_inversions_agree_with_integration_oracle() {
    for (family, tau) in [
        (CopulaFamily::Clayton, 0.5),
        (CopulaFamily::Gumbel, 0.5),
        (CopulaFamily::Frank, 0.4),
        (CopulaFamily::Frank, -0.3),
        (CopulaFamily::Joe, 0.35),
    ] {
        let theta = theta_from_tau(tau, family).unwrap();
        let c = pc(family, Rotation::R0, theta);
        let q = tau_by_quadrature(&c);
        assert!((q - tau).abs() < 2e-3, "{family} {theta} {q}");
        assert!((kendall_tau(&c) - tau).abs() < 1e-9);
    }
    assert_eq!(theta_from_tau(0.5, CopulaFamily::Clayton).unwrap(), 2.0);
    assert_eq!(theta_from_tau(0.5, CopulaFamily::Gumbel).unwrap(), 2.0);
}

fn random_copula(rng: &mut impl rand::Rng, family: CopulaFamily) -> PairCopula {
    let rots = family.rotations();
    let r = rots[rng.random_range(0..rots.len())];
    let (lo, hi) = match family {
        CopulaFamily::Independence => return PairCopula::independence(),
        CopulaFamily::Clayton => (0.05, 15.0),
        CopulaFamily::Gumbel | CopulaFamily::Joe => (1.01, 12.0),
        CopulaFamily::Frank => (0.05, 30.0),
    };
    let mut theta = lo + (hi - lo) * open_uniform(rng);
    if family == CopulaFamily::Frank && rng.random_bool(0.5) {
        theta = -theta;
    }
    pc(family, r, theta)
}

#[test]
fn hinv_round_trips_on_random_triples() {
    let mut rng = substream(3, "hinv-triples", 0);
    for family in CopulaFamily::ALL {
        let mut worst: f64 = 0.0;
        for _ in 0..1000 {
            let c = random_copula(&mut rng, family);
            let (w, g) = (open_uniform(&mut rng), open_uniform(&mut rng));
            let u = c.hinv_given_second(w, g);
            let v = c.hinv_given_first(w, g);
            // only meaningful where the h-function is not saturated at the clamp
            if u > 1e-9 && u < 1.0 - 1e-9 {
                worst = worst.max((c.h_given_second(u, g) - w).abs());
            }
            if v > 1e-9 && v < 1.0 - 1e-9 {
                worst = worst.max((c.h_given_first(g, v) - w).abs());
            }
        }
        assert!(worst < 1e-8, "{family}: {worst}");
    }
}

#[test]
fn gumbel_hinv_matches_bisection() {
    let c = pc(CopulaFamily::Gumbel, Rotation::R0, 2.7);
    for i in 1..20 {
        for j in 1..20 {
            let (w, v) = (i as f64 / 20.0, j as f64 / 20.0);
            let b = bisect_increasing(|u| c.h_given_second(u, v), w, 0.0, 1.0, 1e-14);
            assert!((c.hinv_given_second(w, v) - b).abs() < 1e-9);
        }
    }
}

#[test]
fn independence_test_size_and_power() {
    let indep = PairCopula::independence();
    let clay = pc(CopulaFamily::Clayton, Rotation::R0, 2.0);
    let mut accepted = 0;
    let mut detected = 0;
    for run in 0..100 {
        let (u, v) = unzip(sample_pair(1000, &indep, 1000 + run));
        accepted += usize::from(!independence_test(&u, &v, 0.05).unwrap().dependent);
        let (u, v) = unzip(sample_pair(1000, &clay, 2000 + run));
        detected += usize::from(independence_test(&u, &v, 0.05).unwrap().dependent);
    }
    assert!((88..=100).contains(&accepted), "{accepted}");
    assert!(detected >= 99, "{detected}");
}

#[test]
fn gumbel_selected_from_gumbel_data() {
    let g = pc(CopulaFamily::Gumbel, Rotation::R0, 3.0);
    let opts = SelectionOptions::default();
    let hits = (0..100)
        .filter(|&run| {
            let (u, v) = unzip(sample_pair(2000, &g, 500 + run));
            let fit = select_pair(&u, &v, &opts).unwrap();
            fit.copula.family == CopulaFamily::Gumbel && fit.copula.rotation == Rotation::R0
        })
        .count();
    assert!(hits >= 95, "{hits}");
}

#[test]
fn independence_selected_from_independent_data() {
    let opts = SelectionOptions::default();
    let hits = (0..100)
        .filter(|&run| {
            let (u, v) = unzip(sample_pair(500, &PairCopula::independence(), 700 + run));
            select_pair(&u, &v, &opts).unwrap().copula.is_independence()
        })
        .count();
    assert!((88..=100).contains(&hits), "{hits}");
}

#[test]
fn negative_clayton_never_selects_unrotated_gumbel() {
    let c = pc(CopulaFamily::Clayton, Rotation::R90, 2.0);
    let opts = SelectionOptions::default();
    for run in 0..20 {
        let (u, v) = unzip(sample_pair(1000, &c, 900 + run));
        let fit = select_pair(&u, &v, &opts).unwrap();
        assert!(!(fit.copula.family == CopulaFamily::Gumbel && fit.copula.rotation == Rotation::R0));
        assert!(kendall_tau(&fit.copula) < 0.0);
    }
}

#[test]
fn clayton_sample_tau() {
    let c = pc(CopulaFamily::Clayton, Rotation::R0, 2.0);
    let (u, v) = unzip(sample_pair(10_000, &c, 77));
    let tau = kendall_tau_b(&u, &v).unwrap();
    assert!((tau - 0.5).abs() < 0.03, "{tau}");
}

/// Kolmogorov–Smirnov distance to the uniform law.
fn ks_uniform(x: &[f64]) -> f64 {
    let mut s = x.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &v)| (v - i as f64 / n).abs().max(((i + 1) as f64 / n - v).abs()))
        .fold(0.0, f64::max)
}

#[test]
fn independence_sample_has_uniform_columns() {
    let mut pass = 0;
    for run in 0..100 {
        let (u, v) = unzip(sample_pair(500, &PairCopula::independence(), 3000 + run));
        let crit = 1.358 / (500f64).sqrt();
        pass += usize::from(ks_uniform(&u) < crit && ks_uniform(&v) < crit);
    }
    assert!(pass >= 85, "{pass}");
}

fn observed_information(c: &PairCopula, u: &[f64], v: &[f64]) -> f64 {
    let ll = |t: f64| -> f64 {
        let p = PairCopula { theta: t, ..*c };
        u.iter().zip(v).map(|(&a, &b)| p.log_pdf(a, b)).sum()
    };
    let h = 1e-4 * c.theta.abs().max(1.0);
    -(ll(c.theta + h) - 2.0 * ll(c.theta) + ll(c.theta - h)) / (h * h)
}

#[test]
fn refit_within_three_standard_errors() {
    let truth = [
        pc(CopulaFamily::Clayton, Rotation::R0, 2.0),
        pc(CopulaFamily::Gumbel, Rotation::R0, 1.8),
        pc(CopulaFamily::Frank, Rotation::R0, 5.0),
        pc(CopulaFamily::Joe, Rotation::R0, 2.0),
    ];
    for c in truth {
        let mut ok = 0;
        for run in 0..100 {
            let (u, v) = unzip(sample_pair(5000, &c, 10_000 + run));
            let fit = fit_pair(&u, &v, c.family, c.rotation).unwrap();
            let se = 1.0 / observed_information(&fit.copula, &u, &v).sqrt();
            ok += usize::from((fit.copula.theta - c.theta).abs() <= 3.0 * se);
        }
        assert!(ok >= 95, "{:?}: {ok}", c.family);
    }
}

#[test]
fn pair_copula_json_shape() {
    let c = pc(CopulaFamily::Frank, Rotation::R0, -3.5);
    let j: serde_json::Value = serde_json::to_value(c).unwrap();
    assert_eq!(j["family"], "frank");
    assert_eq!(j["rotation"], 0);
    assert_eq!(j["theta"], -3.5);
}

fn any_copula() -> impl Strategy<Value = PairCopula> {
    (0usize..5, 0usize..4, 0.0f64..1.0, any::<bool>()).prop_map(|(fi, ri, t, neg)| {
        let family = CopulaFamily::ALL[fi];
        let rots = family.rotations();
        let r = rots[ri % rots.len()];
        let theta = match family {
            CopulaFamily::Independence => 0.0,
            CopulaFamily::Clayton => 0.01 + 20.0 * t,
            CopulaFamily::Gumbel | CopulaFamily::Joe => 1.0 + 15.0 * t,
            CopulaFamily::Frank => (0.01 + 30.0 * t) * if neg { -1.0 } else { 1.0 },
        };
        PairCopula::new(family, r, theta).unwrap()
    })
}

proptest! {
    #[test]
    fn density_nonnegative_on_grid(c in any_copula()) {
        for i in 1..50 {
            for j in 1..50 {
                let d = c.pdf(i as f64 / 50.0, j as f64 / 50.0);
                prop_assert!(d >= 0.0 && d.is_finite());
            }
        }
    }

    #[test]
    fn uniform_margins(c in any_copula(), u in 0.0f64..=1.0) {
        prop_assert!((c.cdf(u, 1.0) - u).abs() < 1e-12);
        prop_assert!((c.cdf(1.0, u) - u).abs() < 1e-12);
    }

    #[test]
    fn frechet_bounds(c in any_copula(), u in 0.0f64..=1.0, v in 0.0f64..=1.0) {
        let x = c.cdf(u, v);
        prop_assert!(x <= u.min(v) + 1e-12);
        prop_assert!(x >= (u + v - 1.0).max(0.0) - 1e-12);
    }

    #[test]
    fn h_monotone_in_free_argument(c in any_copula(), v in 0.01f64..0.99) {
        let mut last = 0.0;
        for i in 1..100 {
            let h = c.h_given_second(i as f64 / 100.0, v);
            prop_assert!(h >= last - 1e-12);
            last = h;
        }
    }

    #[test]
    fn hinv_round_trip(c in any_copula(), w in 0.001f64..0.999, g in 0.001f64..0.999) {
        let u = c.hinv_given_second(w, g);
        if u > 1e-9 && u < 1.0 - 1e-9 {
            prop_assert!((c.h_given_second(u, g) - w).abs() < 1e-8);
        }
    }
}
