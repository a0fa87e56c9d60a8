use hitlab_core::corr::*;
use hitlab_core::flow::*;
use hitlab_core::indicator::Schedule;
use hitlab_core::trig::TrigPoly;
use hitlab_core::{sampling, Angle, ContinuedFraction, Translation};
use proptest::prelude::*;
use rug::{Integer, Rational};

fn golden() -> Angle {
    Angle::truncation(ContinuedFraction::golden(40))
}

fn silver() -> Angle {
    Angle::truncation(ContinuedFraction::from_u64(0, &[2; 40]).unwrap())
}

fn flow3() -> TranslationFlow {
    TranslationFlow::from_angles(&[golden(), silver()]).unwrap()
}

fn cosine_speed(dim: usize) -> Reparametrization {
    let mut freq = vec![0; dim];
    freq[0] = 1;
    Reparametrization::new(TrigPoly::cosine(dim, 1.0, freq, 0.5).unwrap(), 3.0).unwrap()
}

fn unit() -> impl Strategy<Value = f64> {
    (0u64..1 << 40).prop_map(|k| k as f64 / (1u64 << 40) as f64)
}

fn in_ball(p: &[f64], y: &[f64], r: f64) -> bool {
    p.iter().zip(y).all(|(a, b)| {
        let f = (a - b) - (a - b).floor();
        f.min(1.0 - f) < r
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    // Dense time sampling never sees the ball before the swept entry time, and
    // the orbit is inside just after it.
    #[test]
    fn flow_hit_matches_dense_sampling(x in prop::array::uniform3(unit()), y in prop::array::uniform3(unit())) {
        let f = flow3();
        let r = 0.1;
        let t = flow_hit(&f, &x, &y, r, 500.0).unwrap().time.unwrap();
        let dt = 1e-4;
        let mut k = 0u64;
        while (k as f64) * dt < t - 1e-9 {
            prop_assert!(!in_ball(&f.position(&x, k as f64 * dt), &y, r), "inside at {} < {}", k as f64 * dt, t);
            k += 1;
        }
        prop_assert!(in_ball(&f.position(&x, t + 1e-9), &y, r));
    }

    #[test]
    fn reparametrized_times_are_sandwiched(x in prop::array::uniform3(unit()), y in prop::array::uniform3(unit())) {
        let f = flow3();
        let rep = cosine_speed(3);
        let base = flow_hit(&f, &x, &y, 0.08, 1e4).unwrap().time.unwrap();
        let h = reparam_flow_hit(&f, &rep, &x, &y, 0.08, 1e4).unwrap();
        let t = h.time.unwrap();
        let tol = h.error_estimate + 1e-9;
        prop_assert!(base / 3.0 <= t + tol && t <= 3.0 * base + tol);
        if let Some(n) = time1_hit(&f, &rep, &x, &y, 0.08, 5000).unwrap() {
            prop_assert!(n as f64 + tol >= t);
        }
    }

    #[test]
    fn section_map_is_the_translation(xk in prop::array::uniform3(0u64..1 << 32), c in 0u64..1 << 32) {
        let f = flow3();
        let x: Vec<Rational> = std::iter::once(c).chain(xk[1..].iter().copied())
            .map(|k| Rational::from((k, 1u64 << 32))).collect();
        let (p, s) = exact_section_map(&f, &x).unwrap();
        prop_assert_eq!(s, 1);
        let t = Translation::torus2(golden(), silver());
        prop_assert_eq!(&p[1..], &t.apply(&x[1..], &Integer::from(1)).unwrap()[..]);
        prop_assert_eq!(&p[0], &x[0]);
        let p1 = exact_time1_map(&f, &x).unwrap();
        prop_assert_eq!(p1, p);
    }

    #[test]
    fn theorem1_bound_is_monotone(d in 0.5f64..4.0, up in 0.0f64..2.0, p in 0.1f64..10.0, dp in 0.01f64..5.0) {
        let b = theorem1_bound(d, d + up, p).unwrap();
        prop_assert!(theorem1_bound(d, d + up, p + dp).unwrap() < b);
        prop_assert!(theorem1_bound(d, d + up + dp, p).unwrap() > b);
    }

    // Uniform midpoint sums integrate low-degree trigonometric products exactly.
    #[test]
    fn fourier_pairing_matches_grid_sum(n in 0u64..10_000, a in -1.0f64..1.0, b in -1.0f64..1.0) {
        let alpha = golden();
        let af = alpha.frac().to_f64();
        let sys = System::Translation { translation: Translation::circle(alpha) };
        let f = Observable::trig(TrigPoly::new(1, vec![
            hitlab_core::trig::TrigTerm { freq: vec![1], cos: a, sin: b },
            hitlab_core::trig::TrigTerm { freq: vec![3], cos: 0.5, sin: 0.0 },
        ]).unwrap());
        let g = Observable::trig(TrigPoly::new(1, vec![
            hitlab_core::trig::TrigTerm { freq: vec![1], cos: 1.0, sin: 0.25 },
            hitlab_core::trig::TrigTerm { freq: vec![3], cos: 0.0, sin: 1.0 },
        ]).unwrap());
        let v = correlation(&sys, &f, &g, n).unwrap();
        let m = 64;
        let shift = (n as f64 * af).fract();
        let sum: f64 = (0..m).map(|j| {
            let x = (j as f64 + 0.5) / m as f64;
            f.eval(&[(x + shift).fract()]) * g.eval(&[x])
        }).sum::<f64>() / m as f64;
        prop_assert!((v.value - sum.abs()).abs() < 1e-9);
    }
}

#[test]
fn time1_map_of_unreparametrized_flow() {
    let f = flow3();
    let x = [0.25, 0.5, 0.75];
    let p = time1_map(&f, &Reparametrization::identity(3), &x).unwrap();
    let exact = exact_time1_map(&f, &x.map(|v| Rational::from_f64(v).unwrap())).unwrap();
    for (a, b) in p.iter().zip(&exact) {
        assert!((a - b.to_f64()).abs() < 1e-12);
    }
}

#[test]
fn section_return_times() {
    let f = flow3();
    let x = [0.0, 0.3, 0.6];
    let one = poincare_section(&f, &Reparametrization::identity(3), 0.0, &x).unwrap();
    assert!((one.return_time - 1.0).abs() < 1e-9);
    let rep = cosine_speed(3);
    let mut rng = sampling::rng(5, sampling::streams::FLOW);
    for _ in 0..20 {
        let x: Vec<f64> = (0..3).map(|_| sampling::unit_f64(&mut rng)).collect();
        let s = poincare_section(&f, &rep, x[0], &x).unwrap();
        assert!(s.return_time >= 1.0 / rep.c - 1e-9 && s.return_time <= rep.c + 1e-9);
        // The speed depends on x_1 only, so every return takes the same time.
        assert!((s.return_time - 1.0 / (1.0f64 - 0.25).sqrt()).abs() < 1e-6, "{}", s.return_time);
    }
}

#[test]
fn time1_map_preserves_the_weighted_volume() {
    let f = TranslationFlow::from_angles(&[golden()]).unwrap();
    let m = measure_preservation(&f, &cosine_speed(2), &[0.2, 0.1], &[0.7, 0.6], 100_000).unwrap();
    assert!(m.relative_error < 1e-3, "{m:?}");
}

#[test]
fn section_comparison_measures_constants() {
    let f = flow3();
    let rep = cosine_speed(3);
    let y = [0.0, 0.4, 0.1];
    let c = section_comparison(&f, &rep, &[0.3, 0.9, 0.5], &y, 0.05, 1.0, 1e4, 20_000).unwrap();
    let (ft, n) = (c.flow_time.unwrap(), c.section_steps.unwrap());
    assert!(c.flow_ratio.unwrap() > 0.0);
    assert!((c.flow_ratio.unwrap() - ft / n as f64).abs() < 1e-15);
}

#[test]
fn rotation_does_not_mix() {
    let cf = ContinuedFraction::golden(40);
    let sys = System::Translation {
        translation: Translation::circle(Angle::truncation(cf.clone())),
    };
    let mut witnessed = 0;
    for k in 1..=8 {
        if cf.norm_q_alpha(k).unwrap() < (1, 20) {
            let n = cf.q(k).to_u64().unwrap();
            let v = correlation(&sys, &Observable::cos1(), &Observable::cos1(), n).unwrap();
            assert!(v.value >= 0.4, "k={k}");
            witnessed += 1;
        }
    }
    assert_eq!(witnessed, 3);
    let ns: Vec<u64> = (1..=40).collect();
    let fit = decay_exponent_fit(&correlation_series(&sys, &Observable::cos1(), &Observable::cos1(), &ns).unwrap()).unwrap();
    assert!(fit.p.unwrap().abs() < 0.3 || fit.r_squared.unwrap() < 0.5);
}

#[test]
fn decay_fits_on_synthetic_series() {
    let ns: Vec<u64> = (1..=40).collect();
    let fit = decay_exponent_fit(&CorrelationSeries::synthetic(|n| (n as f64).powi(-3), &ns, 1e-12)).unwrap();
    assert!((fit.p.unwrap() - 3.0).abs() < 0.1);
    let geo: Vec<u64> = (0..12).map(|k| 1u64 << k).collect();
    let fit = decay_exponent_fit(&CorrelationSeries::synthetic(|n| (-(n as f64)).exp(), &geo, 1e-12)).unwrap();
    assert!(fit.p.is_none());
    assert!(fit.p_at_least.unwrap() > 5.0);
    let dead = decay_exponent_fit(&CorrelationSeries::synthetic(|_| 0.0, &ns, 1e-12)).unwrap_err();
    assert!(matches!(dead, hitlab_core::Error::Estimation(_)));
}

#[test]
fn doubling_hitting_indicator_is_near_dimension() {
    let s = Schedule::new(2.0, 4, 20).unwrap();
    let mut rng = sampling::rng(7, sampling::streams::TARGET_POINTS);
    for i in 0..10 {
        let o = DoublingOrbit::sample(7, i, 12_000_000);
        let x0 = sampling::unit_f64(&mut rng);
        let e = doubling_indicators(&o, x0, &s, 8).unwrap();
        let up = e.r_up.unwrap();
        assert!((0.8..=1.3).contains(&up), "point {i}: {up}");
    }
}
