use hitlab_core::angle::circle_norm;
use hitlab_core::orbit::{hit_circle, hit_torus2, next_entries, recurrence_time};
use hitlab_core::{Angle, CirclePoint, ContinuedFraction, TorusPoint, Translation};
use proptest::prelude::*;
use rug::Rational;

/// Naive iteration with exact rationals.
fn brute_entries(alphas: &[Rational], x: &[Rational], x0: &[Rational], r: &Rational, horizon: u64, count: usize) -> Vec<u64> {
    let mut y: Vec<Rational> = x.to_vec();
    let mut out = Vec::new();
    for n in 1..=horizon {
        let mut inside = true;
        for i in 0..y.len() {
            y[i] += &alphas[i];
            if y[i] >= 1 {
                y[i] -= 1;
            }
            let diff = Rational::from(&y[i] - &x0[i]);
            if circle_norm(&diff) >= *r {
                inside = false;
            }
        }
        if inside {
            out.push(n);
            if out.len() == count {
                break;
            }
        }
    }
    out
}

fn dyadic(k: u32, bits: u32) -> Rational {
    Rational::from((k, 1u64 << bits))
}

fn angle_strategy() -> impl Strategy<Value = Angle> {
    prop_oneof![
        (1u32..40, 2u32..41).prop_filter_map("proper fraction", |(n, d)| {
            (n < d).then(|| Angle::rational(Rational::from((n, d))))
        }),
        prop::collection::vec(1u64..6, 12..18)
            .prop_map(|q| Angle::truncation(ContinuedFraction::from_u64(0, &q).unwrap())),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn circle_hits_match_iteration(alpha in angle_strategy(), xk in 0u32..1024, yk in 0u32..1024, rk in 2u32..60) {
        let x = dyadic(xk, 10);
        let x0 = dyadic(yk, 10);
        let r = Rational::from((1, rk + 2));
        let horizon = 2000;
        prop_assume!(alpha.check_horizon(horizon, &r).is_ok());
        let a = alpha.frac().clone();
        let rec = hit_circle(&alpha, &CirclePoint::new(x.clone()).unwrap(), &CirclePoint::new(x0.clone()).unwrap(), &r, horizon).unwrap();
        let brute = brute_entries(&[a.clone()], &[x.clone()], &[x0.clone()], &r, horizon, 12);
        prop_assert_eq!(rec.tau, brute.first().copied());
        let entries = next_entries(&alpha, &CirclePoint::new(x.clone()).unwrap(), &CirclePoint::new(x0.clone()).unwrap(), &r, 12, horizon).unwrap();
        prop_assert_eq!(&entries, &brute);
        let gaps: std::collections::BTreeSet<u64> = entries.windows(2).map(|w| w[1] - w[0]).collect();
        prop_assert!(gaps.len() <= 3);
        let rec = recurrence_time(&alpha, &CirclePoint::new(x.clone()).unwrap(), &r, horizon).unwrap();
        let brute = brute_entries(&[a], &[x.clone()], &[x], &r, horizon, 1);
        prop_assert_eq!(rec.tau, brute.first().copied());
    }

    #[test]
    fn torus_hits_match_iteration(a1 in angle_strategy(), a2 in angle_strategy(), xs in prop::array::uniform4(0u32..256), rk in 3u32..12) {
        let x = vec![dyadic(xs[0], 8), dyadic(xs[1], 8)];
        let x0 = vec![dyadic(xs[2], 8), dyadic(xs[3], 8)];
        let r = Rational::from((1, rk));
        let horizon = 3000;
        prop_assume!(a1.check_horizon(horizon, &r).is_ok() && a2.check_horizon(horizon, &r).is_ok());
        let rec = hit_torus2(&a1, &a2, &TorusPoint::new(x.clone()).unwrap(), &TorusPoint::new(x0.clone()).unwrap(), &r, horizon).unwrap();
        let brute = brute_entries(&[a1.frac().clone(), a2.frac().clone()], &x, &x0, &r, horizon, 1);
        prop_assert_eq!(rec.tau, brute.first().copied());
        if let Some(t) = rec.tau {
            let t1 = hit_circle(&a1, &CirclePoint::new(x[0].clone()).unwrap(), &CirclePoint::new(x0[0].clone()).unwrap(), &r, horizon).unwrap().tau.unwrap();
            let t2 = hit_circle(&a2, &CirclePoint::new(x[1].clone()).unwrap(), &CirclePoint::new(x0[1].clone()).unwrap(), &r, horizon).unwrap().tau.unwrap();
            prop_assert!(t >= t1.max(t2));
        }
    }

    #[test]
    fn hitting_time_is_monotone_in_radius(xk in 0u32..1024, yk in 0u32..1024, r1 in 3u32..200, r2 in 3u32..200) {
        let alpha = Angle::truncation(ContinuedFraction::golden(40));
        let x = CirclePoint::new(dyadic(xk, 10)).unwrap();
        let y = CirclePoint::new(dyadic(yk, 10)).unwrap();
        let (small, big) = (r1.max(r2), r1.min(r2));
        let t_small = hit_circle(&alpha, &x, &y, &Rational::from((1, small)), 1 << 20).unwrap().tau.unwrap();
        let t_big = hit_circle(&alpha, &x, &y, &Rational::from((1, big)), 1 << 20).unwrap().tau.unwrap();
        prop_assert!(t_big <= t_small);
    }

    #[test]
    fn hitting_time_is_shift_equivariant(xk in 0u32..1024, yk in 0u32..1024, sk in 0u32..1024, rk in 3u32..200) {
        let alpha = Angle::truncation(ContinuedFraction::golden(40));
        let r = Rational::from((1, rk));
        let s = dyadic(sk, 10);
        let x = dyadic(xk, 10);
        let y = dyadic(yk, 10);
        let t0 = hit_circle(&alpha, &CirclePoint::new(x.clone()).unwrap(), &CirclePoint::new(y.clone()).unwrap(), &r, 1 << 20).unwrap();
        let t1 = hit_circle(&alpha, &CirclePoint::wrap(&(x + &s)), &CirclePoint::wrap(&(y + &s)), &r, 1 << 20).unwrap();
        prop_assert_eq!(t0.tau, t1.tau);
    }

    #[test]
    fn d_n_agrees_with_hitting_times(xk in 0u32..1024, yk in 0u32..1024, rk in 3u32..100, n in 1u64..400) {
        let alpha = Angle::truncation(ContinuedFraction::golden(40));
        let t = Translation::circle(alpha.clone());
        let x = dyadic(xk, 10);
        let y = dyadic(yk, 10);
        let d = t.d_n_sequence(&[x.clone()], &[y.clone()], 400).unwrap();
        let r = Rational::from((1, rk));
        let tau = hit_circle(&alpha, &CirclePoint::new(x).unwrap(), &CirclePoint::new(y).unwrap(), &r, 1 << 20).unwrap().tau.unwrap();
        prop_assert_eq!(d[(n - 1) as usize] < r, tau <= n);
    }
}

#[test]
fn golden_next_entries_have_three_gaps() {
    let alpha = Angle::truncation(ContinuedFraction::golden(40));
    let x = CirclePoint::new(Rational::from((123, 1024))).unwrap();
    let y = CirclePoint::new(Rational::from((7, 10))).unwrap();
    let r = Rational::from((1, 30));
    let e = next_entries(&alpha, &x, &y, &r, 10, 10_000).unwrap();
    let brute = brute_entries(&[alpha.frac().clone()], &[x.value().clone()], &[y.value().clone()], &r, 10_000, 10);
    assert_eq!(e, brute);
}

#[test]
fn golden_recurrence_times_are_denominators() {
    let cf = ContinuedFraction::golden(40);
    let alpha = Angle::truncation(cf.clone());
    let x = CirclePoint::new(Rational::from((1, 3))).unwrap();
    let rec = recurrence_time(&alpha, &x, &Rational::from((1, 50)), 1 << 20).unwrap();
    let qs: Vec<u64> = (0..20).map(|k| cf.q(k).to_u64().unwrap()).collect();
    assert!(qs.contains(&rec.tau.unwrap()));
    // ||21 alpha|| ~ 0.0213 >= 1/50 > ||34 alpha|| ~ 0.0131
    assert_eq!(rec.tau, Some(34));
    let rec = recurrence_time(&alpha, &x, &Rational::from((2, 5)), 10).unwrap();
    assert_eq!(rec.tau, Some(1));
}

#[test]
fn golden_d_n_decreases_at_denominators() {
    let cf = ContinuedFraction::golden(40);
    let t = Translation::circle(Angle::truncation(cf.clone()));
    let x = Rational::from((1, 3));
    let d = t.d_n_sequence(&[x.clone()], &[x], 1000).unwrap();
    for k in 2..14 {
        let q = cf.q(k).to_usize().unwrap();
        assert!(d[q - 1] < d[q - 2], "no decrease at q_{k} = {q}");
    }
}
