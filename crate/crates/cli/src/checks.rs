//! Invariant checks shared by `verify-all` and the acceptance run. Each check
//! is exact or states its tolerance in its detail line.

use crate::config::{FlowParams, KeyLemmaParams};
use crate::experiments::{flow_instances, key_lemma_rows};
use crate::RunError;
use hitlab_core::angle::circle_norm;
use hitlab_core::builder::{build_pair, build_pair_with_budget, greedy_minimality, verify_membership};
use hitlab_core::corr::{corollary_bound, correlation, theorem1_bound, Observable, System};
use hitlab_core::flow::{exact_section_map, TranslationFlow};
use hitlab_core::indicator::{exponent_identities, loglaw_crosscheck};
use hitlab_core::measure::{borel_cantelli_report, level_set_report};
use hitlab_core::orbit::{hit_circle, hit_torus2, next_entries, recurrence_time};
use hitlab_core::sampling::{self, int_in, streams, SampleRng};
use hitlab_core::{Angle, CirclePoint, ContinuedFraction, TorusPoint, Translation};
use rayon::prelude::*;
use rug::{Integer, Rational};
use serde::Serialize;

#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    fn new(name: &str, passed: bool, detail: String) -> CheckResult {
        CheckResult {
            name: name.to_string(),
            passed,
            detail,
        }
    }
}

/// Random `[a_1, ..., a_depth]` with `a_i <= max_q` and a last quotient of at least 2.
pub fn random_quotients(rng: &mut SampleRng, depth: usize, max_q: u64) -> Vec<u64> {
    let mut q: Vec<u64> = (0..depth).map(|_| int_in(rng, 1, max_q)).collect();
    if let Some(last) = q.last_mut() {
        *last = int_in(rng, 2, max_q.max(2));
    }
    q
}

/// One coordinate of a rotation over a common denominator `l`.
struct Scaled {
    l: u128,
    a: u128,
    y: u128,
    c: u128,
    rl: u128,
}

impl Scaled {
    fn new(alpha: &Rational, x: &Rational, x0: &Rational, r: &Rational) -> Option<Scaled> {
        let mut l = Integer::from(1);
        for q in [alpha, x, x0, r] {
            l.lcm_mut(q.denom());
        }
        if l.significant_bits() > 120 {
            return None;
        }
        let at = |q: &Rational| -> u128 {
            let v = Rational::from(q * &l);
            let mut n = v.numer().clone() % &l;
            if n < 0 {
                n += &l;
            }
            n.to_u128().expect("reduced below l")
        };
        Some(Scaled {
            a: at(alpha),
            y: at(x),
            c: at(x0),
            rl: Rational::from(r * &l).numer().to_u128().expect("below l"),
            l: l.to_u128().expect("checked size"),
        })
    }

    fn step(&mut self) -> bool {
        self.y += self.a;
        if self.y >= self.l {
            self.y -= self.l;
        }
        let d = if self.y >= self.c { self.y - self.c } else { self.y + self.l - self.c };
        d.min(self.l - d) < self.rl
    }
}

/// First `count` times `n` in `1..=horizon` with `x + n alpha` in the sup-ball
/// `B(x0, r)`, by direct iteration.
pub fn brute_entries(alphas: &[Rational], x: &[Rational], x0: &[Rational], r: &Rational, horizon: u64, count: usize) -> Vec<u64> {
    let scaled: Option<Vec<Scaled>> = (0..alphas.len()).map(|i| Scaled::new(&alphas[i], &x[i], &x0[i], r)).collect();
    let mut out = Vec::new();
    if let Some(mut cs) = scaled {
        for n in 1..=horizon {
            let mut inside = true;
            for c in cs.iter_mut() {
                inside &= c.step();
            }
            if inside {
                out.push(n);
                if out.len() == count {
                    break;
                }
            }
        }
        return out;
    }
    let mut y = x.to_vec();
    for n in 1..=horizon {
        let mut inside = true;
        for i in 0..y.len() {
            y[i] += &alphas[i];
            if y[i] >= 1 {
                y[i] -= 1;
            }
            inside &= circle_norm(&Rational::from(&y[i] - &x0[i])) < *r;
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

/// Counts for the chain `1/(2 q_{n+1}) < 1/(q_n + q_{n+1}) < ||q_n a|| < 1/q_{n+1}`.
#[derive(Clone, Debug, Default, Serialize)]
pub struct ChainStats {
    pub expansions: usize,
    pub chains: usize,
    /// Failures at `n >= 1`, or at `n = 0` with `a_1 >= 2`.
    pub failures: usize,
    /// Expansions with `a_1 = 1`, where `q_0 = q_1` forces `1/(2 q_1) = 1/(q_0 + q_1)`.
    pub unit_first: usize,
    /// Of those, how many break the chain at `n = 0`.
    pub unit_first_broken: usize,
}

/// The chain for `n <= 18` on `count` random depth-20 expansions with quotients
/// at most 10, compared exactly.
pub fn chain_stats(seed: u64, count: usize) -> Result<ChainStats, RunError> {
    let mut rng = sampling::rng(seed, streams::INSTANCES);
    let mut st = ChainStats {
        expansions: count,
        ..ChainStats::default()
    };
    for _ in 0..count {
        let q = random_quotients(&mut rng, 20, 10);
        let cf = ContinuedFraction::from_u64(0, &q)?;
        let unit = q[0] == 1;
        st.unit_first += usize::from(unit);
        for n in 0..=18 {
            let (qn, qn1) = (cf.q(n), cf.q(n + 1));
            let d = cf.norm_q_alpha(n)?;
            let a = Rational::from((1, Integer::from(qn1 * 2u32)));
            let b = Rational::from((1, Integer::from(qn + qn1)));
            let c = Rational::from((1, qn1.clone()));
            st.chains += 1;
            if !(a < b && b < d && d < c) {
                if n == 0 && unit {
                    st.unit_first_broken += 1;
                } else {
                    st.failures += 1;
                }
            }
        }
    }
    Ok(st)
}

/// Passes when the chain holds everywhere except at `n = 0` with `a_1 = 1`,
/// where it must break.
pub fn convergent_bounds(seed: u64, count: usize) -> Result<CheckResult, RunError> {
    let st = chain_stats(seed, count)?;
    Ok(CheckResult::new(
        "convergent_bounds",
        st.failures == 0 && st.unit_first_broken == st.unit_first,
        format!(
            "{} expansions, {} exact chains, {} failures; n = 0 with a_1 = 1 (q_0 = q_1) breaks the chain in {} of {} expansions",
            st.expansions, st.chains, st.failures, st.unit_first_broken, st.unit_first
        ),
    ))
}

/// Greedy pairs for each `gamma`: every level verified exactly, every quotient minimal.
pub fn pair_membership(gammas: &[f64], levels: usize, bit_budget: u64) -> Result<CheckResult, RunError> {
    let mut parts = Vec::new();
    let mut ok = true;
    for &g in gammas {
        let pair = build_pair_with_budget(g, levels, None, bit_budget)?;
        let rep = verify_membership(&pair)?;
        let min = greedy_minimality(&pair)?;
        let broken = min
            .iter()
            .filter(|m| m.prime_minimal == Some(false) || m.next_minimal == Some(false))
            .count();
        let unit = min
            .iter()
            .map(|m| usize::from(m.prime_minimal.is_none()) + usize::from(m.next_minimal.is_none()))
            .sum::<usize>();
        ok &= rep.all_pass && rep.levels.len() == levels && broken == 0;
        parts.push(format!(
            "gamma {g}: {}/{} levels pass, {broken} non-minimal, {unit} unit quotients",
            rep.levels.iter().filter(|l| l.prime_ok && l.next_ok).count(),
            levels
        ));
    }
    Ok(CheckResult::new("pair_membership", ok, parts.join("; ")))
}

#[derive(Clone, Copy, Debug)]
enum HitKind {
    Circle,
    Entries,
    Torus,
    Recurrence,
}

fn random_angle(rng: &mut SampleRng) -> Result<Angle, RunError> {
    if int_in(rng, 0, 1) == 0 {
        let d = int_in(rng, 2, 1000);
        let n = int_in(rng, 1, d - 1);
        Ok(Angle::rational(Rational::from((n, d))))
    } else {
        let q = random_quotients(rng, 30, 5);
        Ok(Angle::truncation(ContinuedFraction::from_u64(0, &q)?))
    }
}

/// `hit_circle`, `next_entries`, `hit_torus2` and `recurrence_time` against
/// direct iteration on mixed rational and truncated angles.
pub fn hitting_oracle(seed: u64, count: usize, max_horizon: u64) -> Result<CheckResult, RunError> {
    struct Inst {
        kind: HitKind,
        angles: Vec<Angle>,
        x: Vec<Rational>,
        x0: Vec<Rational>,
        r: Rational,
        horizon: u64,
    }
    let mut rng = sampling::rng(seed, streams::INSTANCES);
    let mut insts = Vec::with_capacity(count);
    let horizons: Vec<u64> = [1_000u64, 10_000, 100_000, 1_000_000].into_iter().filter(|&h| h <= max_horizon).collect();
    let horizons = if horizons.is_empty() { vec![max_horizon] } else { horizons };
    for i in 0..count {
        let kind = [HitKind::Circle, HitKind::Entries, HitKind::Torus, HitKind::Recurrence][i % 4];
        let dim = if matches!(kind, HitKind::Torus) { 2 } else { 1 };
        let angles = (0..dim).map(|_| random_angle(&mut rng)).collect::<Result<Vec<_>, _>>()?;
        let x = sampling::point(&mut rng, dim, 16);
        let x0 = sampling::point(&mut rng, dim, 16);
        let decades = if dim == 2 { 3 } else { 5 };
        let top = 10u64.pow(int_in(&mut rng, 1, decades) as u32);
        let m = int_in(&mut rng, 3, top);
        let r = Rational::from((1, m));
        let h = horizons[int_in(&mut rng, 0, horizons.len() as u64 - 1) as usize];
        let t = Translation { angles: angles.clone() };
        let horizon = t.max_horizon(&r, h);
        insts.push(Inst {
            kind,
            angles,
            x,
            x0,
            r,
            horizon,
        });
    }
    let results: Vec<Result<(bool, u64, bool), RunError>> = insts
        .par_iter()
        .map(|it| {
            let alphas: Vec<Rational> = it.angles.iter().map(|a| a.frac().clone()).collect();
            let cp = |q: &Rational| CirclePoint::new(q.clone());
            let pair = match it.kind {
                HitKind::Circle => {
                    let rec = hit_circle(&it.angles[0], &cp(&it.x[0])?, &cp(&it.x0[0])?, &it.r, it.horizon)?;
                    (rec.tau, brute_entries(&alphas, &it.x, &it.x0, &it.r, it.horizon, 1).first().copied())
                }
                HitKind::Entries => {
                    let e = next_entries(&it.angles[0], &cp(&it.x[0])?, &cp(&it.x0[0])?, &it.r, 5, it.horizon)?;
                    let b = brute_entries(&alphas, &it.x, &it.x0, &it.r, it.horizon, 5);
                    let first = if e == b { e.first().copied() } else { Some(u64::MAX) };
                    (first, b.first().copied())
                }
                HitKind::Torus => {
                    let rec = hit_torus2(
                        &it.angles[0],
                        &it.angles[1],
                        &TorusPoint::new(it.x.clone())?,
                        &TorusPoint::new(it.x0.clone())?,
                        &it.r,
                        it.horizon,
                    )?;
                    (rec.tau, brute_entries(&alphas, &it.x, &it.x0, &it.r, it.horizon, 1).first().copied())
                }
                HitKind::Recurrence => {
                    let rec = recurrence_time(&it.angles[0], &cp(&it.x[0])?, &it.r, it.horizon)?;
                    (rec.tau, brute_entries(&alphas, &it.x, &it.x, &it.r, it.horizon, 1).first().copied())
                }
            };
            Ok((pair.0 == pair.1, it.horizon, pair.1.is_some()))
        })
        .collect();
    let mut mismatches = 0;
    let mut hits = 0;
    let mut max_h = 0;
    for r in results {
        let (ok, h, hit) = r?;
        mismatches += usize::from(!ok);
        hits += usize::from(hit);
        max_h = max_h.max(h);
    }
    Ok(CheckResult::new(
        "hitting_oracle",
        mismatches == 0,
        format!(
            "{count} instances (circle, entries, torus, recurrence), horizons up to {max_h}, {hits} hit within the horizon, {mismatches} mismatches"
        ),
    ))
}

/// Level-set measures on the golden truncation: `mu{tau = k} = 2r` for
/// `k <= q_n` and `<= ||q_n a||` beyond, for several radii in each window.
pub fn level_sets(seed: u64, depth: usize, windows: std::ops::RangeInclusive<usize>) -> Result<CheckResult, RunError> {
    let cf = ContinuedFraction::golden(depth);
    let alpha = Angle::truncation(cf.clone());
    let mut rng = sampling::rng(seed, streams::TARGET_POINTS);
    let mut tasks = Vec::new();
    for n in windows {
        let lo = cf.norm_q_alpha(n)?;
        let hi = cf.norm_q_alpha(n - 1)?;
        let mut two_rs = vec![Rational::from(&lo + &hi) / 2u32, hi.clone()];
        for _ in 0..3 {
            let t = int_in(&mut rng, 1, 99);
            two_rs.push(&lo + Rational::from(&hi - &lo) * Rational::from((t, 100)));
        }
        let x0 = sampling::unit_rational(&mut rng, 32);
        for two_r in two_rs {
            tasks.push((n, x0.clone(), two_r / 2u32));
        }
    }
    let results: Vec<Result<(bool, usize), RunError>> = tasks
        .par_iter()
        .map(|(n, x0, r)| {
            let qn = cf.q(*n).to_u64().expect("small");
            let rep = level_set_report(&alpha, x0, r, 3 * qn)?;
            Ok((rep.window == *n && rep.all_hold, rep.levels.len()))
        })
        .collect();
    let (mut bad, mut levels) = (0, 0);
    for r in results {
        let (ok, l) = r?;
        bad += usize::from(!ok);
        levels += l;
    }
    Ok(CheckResult::new(
        "level_sets",
        bad == 0,
        format!("{} radii, {levels} exact level measures (k <= 3 q_n), {bad} failures", tasks.len()),
    ))
}

/// Exact tail measures against the certified `1/N + 1/M^beta` on a grid of queries.
pub fn key_lemma(p: &KeyLemmaParams) -> Result<CheckResult, RunError> {
    let grid = key_lemma_rows(p)?;
    let violations = grid.rows.iter().filter(|r| !r.outcome.holds).count();
    Ok(CheckResult::new(
        "key_lemma",
        violations == 0 && grid.rows.len() >= p.min_valid,
        format!(
            "{} valid queries (need {}), {} outside their window, {} beyond the horizon, {violations} violations",
            grid.rows.len(),
            p.min_valid,
            grid.rejected,
            grid.horizon
        ),
    ))
}

pub fn borel_cantelli(gamma: f64, levels: usize, beta: f64, report_levels: usize) -> Result<CheckResult, RunError> {
    let pair = build_pair(gamma, levels, None)?;
    let rep = borel_cantelli_report(&pair, beta, report_levels)?;
    let used = rep.windows.iter().filter(|w| !w.excluded).count();
    Ok(CheckResult::new(
        "borel_cantelli",
        rep.within_beta_bound && used > 0,
        format!(
            "{used} windows, partial sums {:?} below series bounds {:?}",
            rep.partial_sums.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>(),
            rep.partial_bounds_beta.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>()
        ),
    ))
}

/// `log tau / -log r` against `log d_n / -log n` on the golden rotation.
pub fn loglaw(seed: u64, instances: usize, n_max: u64) -> Result<CheckResult, RunError> {
    let t = Translation::circle(Angle::truncation(ContinuedFraction::golden(60)));
    let mut rs = sampling::rng(seed, streams::START_POINTS);
    let mut rt = sampling::rng(seed, streams::TARGET_POINTS);
    let pts: Vec<(Vec<Rational>, Vec<Rational>)> = (0..instances)
        .map(|_| (sampling::point(&mut rs, 1, 32), sampling::point(&mut rt, 1, 32)))
        .collect();
    let reps: Vec<_> = pts
        .par_iter()
        .map(|(x, x0)| loglaw_crosscheck(&t, x, x0, n_max))
        .collect::<Result<Vec<_>, _>>()?;
    let worst = reps.iter().map(|r| r.gap).fold(0.0, f64::max);
    let degenerate = reps.iter().filter(|r| r.degenerate).count();
    Ok(CheckResult::new(
        "loglaw",
        worst < 0.05 && degenerate == 0,
        format!("{instances} golden instances, n_max {n_max}, largest gap {worst:.4} (tolerance 0.05)"),
    ))
}

pub fn exponent_identity_check() -> Result<CheckResult, RunError> {
    let f: Vec<f64> = (1..=100_000).map(|n| (n as f64).powi(-2)).collect();
    let id = exponent_identities(&f)?;
    let vals = [id.limsup_ratio, id.sup_beta_liminf, id.liminf_ratio, id.sup_beta_limsup];
    let ok = vals.iter().all(|v| (v - 2.0).abs() < 0.05);
    Ok(CheckResult::new(
        "exponent_identities",
        ok,
        format!(
            "f(n) = n^-2: limsup {:.4} / sup-beta {:.4}, liminf {:.4} / sup-beta {:.4} (target 2 +- 0.05)",
            vals[0], vals[1], vals[2], vals[3]
        ),
    ))
}

/// Discrete-versus-continuous hitting and the reparametrization sandwich.
pub fn flow_inequalities(seed: u64, instances: usize) -> Result<CheckResult, RunError> {
    let p = FlowParams {
        instances,
        section_checks: 0,
        ..FlowParams::default()
    };
    let (rows, _) = flow_instances(&p, seed)?;
    let map1 = rows.iter().filter(|r| !r.map1_ok).count();
    let sandwich = rows.iter().filter(|r| !r.sandwich_ok).count();
    let hits = rows.iter().filter(|r| r.reparam_time.is_some()).count();
    let err = rows.iter().map(|r| r.error_estimate).fold(0.0, f64::max);
    Ok(CheckResult::new(
        "flow_inequalities",
        map1 == 0 && sandwich == 0,
        format!(
            "{instances} instances ({hits} hit), phi = 1 + 0.5 cos(2 pi x_1), C = {}: {map1} time-1 violations, {sandwich} sandwich violations, largest integrator error estimate {err:.2e}",
            p.c.unwrap_or(3.0)
        ),
    ))
}

/// The section map of the unreparametrized flow equals the translation by `(alpha, alpha')`, exactly.
pub fn section_map(seed: u64, count: usize) -> Result<CheckResult, RunError> {
    let p = FlowParams::default();
    let angles = p.angles.iter().map(|a| a.build()).collect::<Result<Vec<_>, _>>()?;
    let flow = TranslationFlow::from_angles(&angles)?;
    let t = Translation { angles };
    let mut rng = sampling::rng(seed, streams::FLOW);
    let mut bad = 0;
    for _ in 0..count {
        let x = sampling::point(&mut rng, flow.dim(), 32);
        let (img, s) = exact_section_map(&flow, &x)?;
        let expect = t.apply(&x[1..], &Integer::from(1))?;
        if s != 1 || img[0] != x[0] || img[1..] != expect[..] {
            bad += 1;
        }
    }
    Ok(CheckResult::new(
        "section_map",
        bad == 0,
        format!("{count} dyadic points, {bad} differences from the translation (exact)"),
    ))
}

/// Rotation non-mixing witness, doubling-map orthogonality and the bound evaluators.
pub fn correlation_controls() -> Result<CheckResult, RunError> {
    let cf = ContinuedFraction::golden(40);
    let rot = System::Translation {
        translation: Translation::circle(Angle::truncation(cf.clone())),
    };
    let f = Observable::cos1();
    let mut witnesses = Vec::new();
    let mut ok = true;
    for k in 1..=8 {
        if cf.norm_q_alpha(k)? < (1, 20) {
            let n = cf.q(k).to_u64().expect("small");
            let v = correlation(&rot, &f, &f, n)?;
            ok &= v.value >= 0.4;
            witnesses.push(format!("q_{k}={n}: {:.4}", v.value));
        }
    }
    ok &= !witnesses.is_empty();
    let mut nonzero = 0;
    for n in 1..=64 {
        if correlation(&System::Doubling, &f, &f, n)?.value != 0.0 {
            nonzero += 1;
        }
    }
    let t1 = theorem1_bound(1.0, 1.0, 2.0)?;
    let c1 = corollary_bound(2.0, 4.0)?;
    let c2 = corollary_bound(1.0, f64::INFINITY)?;
    ok &= nonzero == 0 && t1 == 3.0 && c1 == 3.0 && c2 == 0.0;
    Ok(CheckResult::new(
        "correlation_controls",
        ok,
        format!(
            "rotation witnesses [{}]; doubling cos correlations nonzero for {nonzero} of n = 1..64; theorem1(1,1,2) = {t1}, corollary(2,4) = {c1}, corollary(1,inf) = {c2}",
            witnesses.join(", ")
        ),
    ))
}
