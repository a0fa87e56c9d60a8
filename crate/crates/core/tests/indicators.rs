use hitlab_core::indicator::*;
use hitlab_core::sampling;
use hitlab_core::{Angle, ContinuedFraction, Translation};
use proptest::prelude::*;
use rug::{Integer, Rational};

const CAP: u64 = 1 << 62;

fn golden(depth: usize) -> Translation {
    Translation::circle(Angle::truncation(ContinuedFraction::golden(depth)))
}

fn type2(depth: usize) -> Translation {
    let mut cf = ContinuedFraction::new(Integer::new(), vec![Integer::from(2)]).unwrap();
    while cf.depth() < depth {
        let q = cf.q(cf.depth()).clone();
        cf.push(q).unwrap();
    }
    Translation::circle(Angle::truncation(cf))
}

fn dyadic(k: u64) -> Rational {
    Rational::from((k, 1u64 << 40))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    // Lower bound by the dimension, at radii deep enough for the slack 0.3.
    #[test]
    fn indicator_is_at_least_dimension_minus_slack(xk in 0u64..1 << 40, yk in 0u64..1 << 40) {
        let t = golden(120);
        let s = Schedule::exponential(30, 40).unwrap();
        let e = translation_indicators(&t, &[dyadic(xk)], &[dyadic(yk)], &s, 8, CAP).unwrap();
        prop_assume!(e.censored_count == 0);
        prop_assert!(e.r_low >= 1.0 - 0.3, "r_low {}", e.r_low);
    }

    #[test]
    fn schedule_base_does_not_matter_for_golden(xk in 0u64..1 << 40, yk in 0u64..1 << 40) {
        let t = golden(120);
        let (x, y) = ([dyadic(xk)], [dyadic(yk)]);
        let a = translation_indicators(&t, &x, &y, &Schedule::exponential(30, 37).unwrap(), 8, CAP).unwrap();
        let b = translation_indicators(&t, &x, &y, &Schedule::new(2.0, 43, 53).unwrap(), 11, CAP).unwrap();
        prop_assert!((a.r_low - b.r_low).abs() < 0.1);
        prop_assert!((a.r_up.unwrap() - b.r_up.unwrap()).abs() < 0.1);
    }

    // Entering B(y, r) from x under alpha is entering B(x, r) from y under -alpha.
    #[test]
    fn hitting_is_reciprocal(xk in 0u64..1 << 40, yk in 0u64..1 << 40, rk in 3u32..5000) {
        let cf = ContinuedFraction::golden(40);
        let alpha = Angle::truncation(cf.clone());
        let minus = Angle::rational(Rational::from(1) - alpha.frac());
        let r = Rational::from((1, rk));
        let (x, y) = (dyadic(xk), dyadic(yk));
        let h = 200_000;
        let a = Translation::circle(alpha).hit(std::slice::from_ref(&x), std::slice::from_ref(&y), &r, h).unwrap();
        let b = Translation::circle(minus).hit(&[y], &[x], &r, h).unwrap();
        prop_assert_eq!(a.tau, b.tau);
    }

    #[test]
    fn loglaw_sides_agree_on_golden(xk in 0u64..1 << 40, yk in 0u64..1 << 40) {
        let rep = loglaw_crosscheck(&golden(60), &[dyadic(xk)], &[dyadic(yk)], 20_000).unwrap();
        prop_assume!(!rep.degenerate);
        prop_assert!(rep.gap < 0.01, "{rep:?}");
    }
}

#[test]
fn golden_recurrence_is_near_one() {
    let t = golden(60);
    let s = Schedule::exponential(2, 20).unwrap();
    let x = [Rational::from((3, 7))];
    let e = recurrence_indicators(&t, &x, &s, 8, CAP).unwrap();
    assert!((e.r_low - 1.0).abs() < 0.15, "{}", e.r_low);
    assert!((e.r_up.unwrap() - 1.0).abs() < 0.15);
}

#[test]
fn type2_recurrence_is_near_one_half() {
    let t = type2(9);
    let s = Schedule::exponential(2, 20).unwrap();
    let e = recurrence_indicators(&t, &[Rational::from((3, 7))], &s, 8, CAP).unwrap();
    assert!(e.r_low <= 0.65, "{}", e.r_low);
}

#[test]
fn loglaw_agrees_on_golden_and_degenerates_on_rationals() {
    let rep = loglaw_crosscheck(&golden(60), &[Rational::from((1, 7))], &[Rational::new()], 100_000).unwrap();
    assert!(!rep.degenerate);
    assert!(rep.gap < 0.05, "gap {}", rep.gap);
    let rat = Translation::circle(Angle::rational(Rational::from((355, 1131))));
    let rep = loglaw_crosscheck(&rat, &[Rational::from((1, 7))], &[Rational::new()], 100_000).unwrap();
    assert!(rep.degenerate);
    assert_eq!(rep.gap, 0.0);
}

#[test]
fn exponent_identities_on_power_and_log_sequences() {
    let f: Vec<f64> = (1..=100_000).map(|n| (n as f64).powi(-2)).collect();
    let id = exponent_identities(&f).unwrap();
    assert!((id.limsup_ratio - 2.0).abs() < 0.05);
    assert!((id.sup_beta_liminf - 2.0).abs() < 0.05);
    assert!((id.liminf_ratio - 2.0).abs() < 0.05);
    assert!((id.sup_beta_limsup - 2.0).abs() < 0.05);
    let g: Vec<f64> = (1..=100_000).map(|n| 1.0 / ((n as f64) + 2.0).ln()).collect();
    let id = exponent_identities(&g).unwrap();
    assert!(id.limsup_ratio < 0.25 && id.sup_beta_liminf < 0.25, "{id:?}");
    assert!(id.gap_limsup < 0.15, "{id:?}");
}

#[test]
fn distance_identity_on_golden() {
    let mut rng = sampling::rng(3, sampling::streams::START_POINTS);
    for _ in 0..5 {
        let x = sampling::point(&mut rng, 1, 32);
        let id = distance_identity(&golden(60), &x, &[Rational::new()], 20_000).unwrap();
        assert!(id.agree || id.boundary_record, "{id:?}");
    }
}

#[test]
fn all_censored_is_an_estimation_error() {
    let t = golden(60);
    let s = Schedule::exponential(10, 12).unwrap();
    let e = translation_indicators(&t, &[Rational::from((1, 3))], &[Rational::new()], &s, 8, 2).unwrap_err();
    assert!(matches!(e, hitlab_core::Error::Estimation(_)));
}
