//! One runner per experiment kind. Instances are sampled sequentially from
//! the seed, evaluated in parallel and emitted in instance order.

use crate::checks::{self, brute_entries};
use crate::config::*;
use crate::output::{Artifacts, Table};
use crate::{Outcome, RunError};
use hitlab_core::builder::{build_pair, greedy_minimality, verify_membership, DEFAULT_BIT_BUDGET};
use hitlab_core::corr::{
    corollary_bound, correlation, correlation_series, decay_exponent_fit, doubling_indicators, theorem1_bound,
    DoublingOrbit, Method, Observable, System,
};
use hitlab_core::flow::{
    flow_hit, reparam_flow_hit, time1_hit, Reparametrization, TranslationFlow,
};
use hitlab_core::indicator::{recurrence_indicators, translation_indicators, IndicatorEstimate};
use hitlab_core::io::{fmt_f64, fmt_rational};
use hitlab_core::measure::{
    borel_cantelli_report, evaluate_key_lemma, key_lemma_midpoint, level_set_report, KeyLemmaOutcome, NormTable,
};
use hitlab_core::orbit::next_entries;
use hitlab_core::sampling::{self, streams};
use hitlab_core::trig::TrigPoly;
use hitlab_core::{Angle, CirclePoint, Error, Translation};
use rayon::prelude::*;
use rug::{Integer, Rational};
use serde::Serialize;
use std::time::Instant;

pub fn run(params: &Params, seed: u64) -> Result<Outcome, RunError> {
    match params {
        Params::BuildPair(p) => build_pair_run(p),
        Params::Hit(p) => hit_run(p, seed),
        Params::Indicators(p) => indicators_run(p, seed),
        Params::LevelMeasure(p) => level_measure_run(p),
        Params::KeyLemma(p) => key_lemma_run(p),
        Params::BorelCantelli(p) => borel_cantelli_run(p),
        Params::Flow(p) => flow_run(p, seed),
        Params::Corr(p) => corr_run(p),
        Params::VerifyAll(p) => verify_all_run(p, seed),
    }
}

fn flag(b: bool) -> &'static str {
    if b {
        "1"
    } else {
        "0"
    }
}

fn opt_flag(b: Option<bool>) -> &'static str {
    match b {
        Some(v) => flag(v),
        None => "",
    }
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn opt_f64(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

fn point_str(x: &[Rational]) -> String {
    x.iter().map(fmt_rational).collect::<Vec<_>>().join(";")
}

fn median(v: &[f64]) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let m = s.len() / 2;
    Some(if s.len() % 2 == 1 { s[m] } else { 0.5 * (s[m - 1] + s[m]) })
}

fn translation_of(specs: &[AngleSpec]) -> Result<Translation, RunError> {
    if !(1..=3).contains(&specs.len()) {
        return Err(RunError::Config(format!("params.angles: need 1 to 3 angles, got {}", specs.len())));
    }
    Ok(Translation {
        angles: specs.iter().map(|s| s.build()).collect::<Result<_, _>>()?,
    })
}

fn build_pair_run(p: &BuildPairParams) -> Result<Outcome, RunError> {
    let pair = p.build()?;
    let membership = verify_membership(&pair)?;
    let minimality = greedy_minimality(&pair)?;
    let minimal = minimality
        .iter()
        .all(|m| m.prime_minimal != Some(false) && m.next_minimal != Some(false));
    let mut t = Table::new(
        "exact integer arithmetic; q columns are bit lengths of the exact denominators (decimal values in pair.json); margins are float logarithms",
        &[
            "level",
            "n",
            "q_n_bits",
            "q_prime_n_bits",
            "q_next_bits",
            "prime_ok",
            "prime_margin",
            "next_ok",
            "next_margin",
            "prime_minimal",
            "next_minimal",
        ],
    );
    for (l, m) in membership.levels.iter().zip(&minimality) {
        t.row([
            l.level.to_string(),
            l.n.to_string(),
            pair.alpha.q(l.n).significant_bits().to_string(),
            pair.alpha_prime.q(l.n).significant_bits().to_string(),
            pair.alpha.q(l.n + 1).significant_bits().to_string(),
            flag(l.prime_ok).to_string(),
            fmt_f64(l.prime_margin),
            flag(l.next_ok).to_string(),
            fmt_f64(l.next_margin),
            opt_flag(m.prime_minimal).to_string(),
            opt_flag(m.next_minimal).to_string(),
        ]);
    }
    #[derive(Serialize)]
    struct PairFile<'a> {
        pair: &'a hitlab_core::builder::IntertwinedPair,
        membership: &'a hitlab_core::builder::MembershipReport,
        minimality: &'a [hitlab_core::builder::MinimalityCheck],
        type_estimate_alpha: Option<f64>,
        type_estimate_alpha_prime: Option<f64>,
    }
    let mut art = Artifacts::default();
    art.add("levels.csv", t.into_bytes());
    art.add_json(
        "pair.json",
        &PairFile {
            pair: &pair,
            membership: &membership,
            minimality: &minimality,
            type_estimate_alpha: pair.alpha.type_estimate().ok(),
            type_estimate_alpha_prime: pair.alpha_prime.type_estimate().ok(),
        },
    );
    let passed = membership.all_pass && minimal;
    let summary = format!(
        "pair gamma {} with {} levels: membership {}, greedy minimality {}",
        pair.gamma,
        pair.levels,
        if membership.all_pass { "ok" } else { "FAILED" },
        if minimal { "ok" } else { "FAILED" }
    );
    Ok(Outcome::new(art, passed, summary))
}

struct HitRow {
    x: Vec<Rational>,
    x0: Vec<Rational>,
    entries: Vec<u64>,
    horizon: u64,
    oracle: Option<bool>,
}

fn hit_run(p: &HitParams, seed: u64) -> Result<Outcome, RunError> {
    let t = translation_of(&p.angles)?;
    let r = rational(&p.radius, "params.radius")?;
    if p.entries == 0 {
        return Err(RunError::Config("params.entries: must be at least 1".into()));
    }
    if p.entries > 1 && t.dim() != 1 {
        return Err(RunError::Config("params.entries: several entries are only listed on the circle".into()));
    }
    if !(1..=64).contains(&p.point_bits) {
        return Err(RunError::Config("params.point_bits: must lie in 1..=64".into()));
    }
    let d = t.dim();
    let mut rs = sampling::rng(seed, streams::START_POINTS);
    let mut rt = sampling::rng(seed, streams::TARGET_POINTS);
    let pts: Vec<(Vec<Rational>, Vec<Rational>)> = (0..p.instances)
        .map(|_| {
            let x = sampling::point(&mut rs, d, p.point_bits);
            let x0 = sampling::point(&mut rt, d, p.point_bits);
            if p.recurrence {
                (x.clone(), x)
            } else {
                (x, x0)
            }
        })
        .collect();
    let rows: Vec<HitRow> = pts
        .into_par_iter()
        .map(|(x, x0)| -> Result<HitRow, RunError> {
            let horizon = if p.clamp_horizon { t.max_horizon(&r, p.horizon) } else { p.horizon };
            let entries = if p.entries > 1 {
                next_entries(
                    &t.angles[0],
                    &CirclePoint::new(x[0].clone())?,
                    &CirclePoint::new(x0[0].clone())?,
                    &r,
                    p.entries,
                    horizon,
                )?
            } else {
                t.hit(&x, &x0, &r, horizon)?.tau.into_iter().collect()
            };
            let oracle = p.oracle.then(|| {
                let alphas: Vec<Rational> = t.angles.iter().map(|a| a.frac().clone()).collect();
                brute_entries(&alphas, &x, &x0, &r, horizon, p.entries) == entries
            });
            Ok(HitRow {
                x,
                x0,
                entries,
                horizon,
                oracle,
            })
        })
        .collect::<Result<_, _>>()?;
    let mut tab = Table::new(
        "exact; x, x0 and r are rationals num/den (coordinates separated by ';'), tau and entries are exact integers, censored_flag = 1 when no entry occurs within horizon",
        &["instance_id", "x", "x0", "r_num", "r_den", "tau", "horizon", "censored_flag", "entries", "oracle_ok"],
    );
    let mut hits = 0;
    let mut oracle_bad = 0;
    for (i, row) in rows.iter().enumerate() {
        let tau = row.entries.first().copied();
        hits += usize::from(tau.is_some());
        oracle_bad += usize::from(row.oracle == Some(false));
        tab.row([
            i.to_string(),
            point_str(&row.x),
            point_str(&row.x0),
            r.numer().to_string(),
            r.denom().to_string(),
            opt(tau),
            row.horizon.to_string(),
            flag(tau.is_none()).to_string(),
            row.entries.iter().map(|e| e.to_string()).collect::<Vec<_>>().join(";"),
            opt_flag(row.oracle).to_string(),
        ]);
    }
    let mut art = Artifacts::default();
    art.add("hits.csv", tab.into_bytes());
    let summary = format!(
        "{} instances at r = {}: {hits} entered, {} censored{}",
        rows.len(),
        fmt_rational(&r),
        rows.len() - hits,
        if p.oracle { format!(", {oracle_bad} oracle mismatches") } else { String::new() }
    );
    Ok(Outcome::new(art, oracle_bad == 0, summary))
}

/// A sampled point and its indicator estimate.
pub struct PointEstimate {
    pub x: Vec<Rational>,
    pub estimate: IndicatorEstimate,
}

/// Indicator estimates for `p.instances` sampled start points, in instance order.
pub fn indicator_estimates(p: &IndicatorParams, seed: u64) -> Result<Vec<PointEstimate>, RunError> {
    if p.tail == 0 {
        return Err(RunError::Config("params.tail: must be positive".into()));
    }
    if !(1..=64).contains(&p.point_bits) {
        return Err(RunError::Config("params.point_bits: must lie in 1..=64".into()));
    }
    let schedule = p.schedule.build()?;
    if p.doubling {
        let r_min = schedule.radius(schedule.n_end).to_f64();
        let bits = (10.0 / r_min).ceil() as u64 + 64;
        let mut rt = sampling::rng(seed, streams::TARGET_POINTS);
        let x0 = match &p.target {
            Some(t) => rational(&t[0], "params.target")?.to_f64(),
            None => sampling::unit_f64(&mut rt),
        };
        return (0..p.instances as u64)
            .into_par_iter()
            .map(|i| {
                let orbit = DoublingOrbit::sample(seed, i, bits);
                Ok(PointEstimate {
                    x: Vec::new(),
                    estimate: doubling_indicators(&orbit, x0, &schedule, p.tail)?,
                })
            })
            .collect();
    }
    let t = translation_of(&p.angles)?;
    let d = t.dim();
    let x0 = match &p.target {
        Some(v) => {
            if v.len() != d {
                return Err(RunError::Config(format!("params.target: need {d} coordinates")));
            }
            v.iter().map(|s| rational(s, "params.target")).collect::<Result<Vec<_>, _>>()?
        }
        None => sampling::point(&mut sampling::rng(seed, streams::TARGET_POINTS), d, p.point_bits),
    };
    let mut rs = sampling::rng(seed, streams::START_POINTS);
    let xs: Vec<Vec<Rational>> = (0..p.instances).map(|_| sampling::point(&mut rs, d, p.point_bits)).collect();
    xs.into_par_iter()
        .map(|x| {
            let estimate = if p.recurrence {
                recurrence_indicators(&t, &x, &schedule, p.tail, p.cap)?
            } else {
                translation_indicators(&t, &x, &x0, &schedule, p.tail, p.cap)?
            };
            Ok(PointEstimate { x, estimate })
        })
        .collect()
}

fn indicators_run(p: &IndicatorParams, seed: u64) -> Result<Outcome, RunError> {
    let pts = indicator_estimates(p, seed)?;
    let mut tab = Table::new(
        "r is an exact rational num/den (base^-n rounded down to a 64-bit dyadic); tau exact integer; ratio = ln tau / -ln r as float, for censored entries the lower bound ln(horizon + 1) / -ln r",
        &["instance_id", "n", "r_num", "r_den", "tau", "horizon", "censored_flag", "ratio"],
    );
    #[derive(Serialize)]
    struct PointSummary {
        instance_id: usize,
        x: String,
        r_low: f64,
        r_up: Option<f64>,
        censored_count: usize,
    }
    let mut points = Vec::new();
    for (i, pe) in pts.iter().enumerate() {
        for e in &pe.estimate.ratios {
            tab.row([
                i.to_string(),
                e.n.to_string(),
                e.radius.numer().to_string(),
                e.radius.denom().to_string(),
                opt(e.tau),
                e.horizon.to_string(),
                flag(e.censored).to_string(),
                fmt_f64(e.ratio),
            ]);
        }
        points.push(PointSummary {
            instance_id: i,
            x: point_str(&pe.x),
            r_low: pe.estimate.r_low,
            r_up: pe.estimate.r_up,
            censored_count: pe.estimate.censored_count,
        });
    }
    let lows: Vec<f64> = points.iter().map(|p| p.r_low).collect();
    let ups: Vec<f64> = points.iter().filter_map(|p| p.r_up).collect();
    let passing = p.min_r_low.map(|th| lows.iter().filter(|&&v| v >= th).count());
    let needed = p.min_pass.unwrap_or(p.instances);
    let passed = passing.is_none_or(|c| c >= needed);
    #[derive(Serialize)]
    struct Summary<'a> {
        instances: usize,
        tail_window: usize,
        median_r_low: Option<f64>,
        median_r_up: Option<f64>,
        min_r_low: Option<f64>,
        passing: Option<usize>,
        needed: Option<usize>,
        points: &'a [PointSummary],
    }
    let (ml, mu) = (median(&lows), median(&ups));
    let mut art = Artifacts::default();
    art.add("ratios.csv", tab.into_bytes());
    art.add_json(
        "summary.json",
        &Summary {
            instances: points.len(),
            tail_window: p.tail,
            median_r_low: ml,
            median_r_up: mu,
            min_r_low: p.min_r_low,
            passing,
            needed: p.min_r_low.map(|_| needed),
            points: &points,
        },
    );
    let mut summary = format!(
        "{} points: median R_low {}, median R_up {}",
        points.len(),
        opt_f64(ml),
        opt_f64(mu)
    );
    if let (Some(c), Some(th)) = (passing, p.min_r_low) {
        summary += &format!(", {c} with R_low >= {th} (need {needed})");
    }
    Ok(Outcome::new(art, passed, summary))
}

fn level_measure_run(p: &LevelMeasureParams) -> Result<Outcome, RunError> {
    let alpha = p.angle.build()?;
    let cf = alpha.continued_fraction();
    let n = p.window;
    if n == 0 {
        return Err(RunError::Config("params.window: must be at least 1".into()));
    }
    let lo = cf.norm_q_alpha(n)?;
    let hi = cf.norm_q_alpha(n - 1)?;
    let two_r = match &p.two_r {
        Some(s) => rational(s, "params.two_r")?,
        None => Rational::from(&lo + &hi) / 2u32,
    };
    let r = two_r / 2u32;
    let x0 = rational(&p.x0, "params.x0")?;
    let k_max = match p.k_max {
        Some(k) => k,
        None => Integer::from(cf.q(n) * 3u32)
            .to_u64()
            .ok_or_else(|| RunError::Core(Error::Resource("3 q_n exceeds 64 bits".into())))?,
    };
    let rep = level_set_report(&alpha, &x0, &r, k_max)?;
    let mut tab = Table::new(
        "exact; measures are rationals num/den; predicted is 2r for k <= q_n and the bound ||q_n alpha|| beyond",
        &["k", "measure_num", "measure_den", "predicted", "holds"],
    );
    for l in &rep.levels {
        let pred = if rep.q_n >= l.k { "= 2r" } else { "<= eta_n" };
        tab.row([
            l.k.to_string(),
            l.measure.numer().to_string(),
            l.measure.denom().to_string(),
            pred.to_string(),
            flag(l.holds).to_string(),
        ]);
    }
    let mut art = Artifacts::default();
    art.add("levels.csv", tab.into_bytes());
    art.add_json("levels.json", &rep);
    let passed = rep.all_hold && rep.window == n;
    let summary = format!(
        "window n = {} (asked {n}), r = {}, {} levels, all predictions {}",
        rep.window,
        fmt_rational(&r),
        rep.levels.len(),
        if rep.all_hold { "hold" } else { "FAIL" }
    );
    Ok(Outcome::new(art, passed, summary))
}

#[derive(Clone, Debug, Serialize)]
pub struct KeyLemmaRow {
    pub component: &'static str,
    pub outcome: KeyLemmaOutcome,
}

pub struct KeyLemmaGrid {
    pub rows: Vec<KeyLemmaRow>,
    /// Grid points whose window is empty or too deep for the expansion.
    pub rejected: usize,
    /// Valid queries whose `K` exceeds the truncation horizon.
    pub horizon: usize,
}

/// Every `(component, n, beta, M, N)` of the grid whose window holds `2r`, with
/// `2r` at the window's geometric middle.
pub fn key_lemma_rows(p: &KeyLemmaParams) -> Result<KeyLemmaGrid, RunError> {
    let pair = build_pair(p.gamma, p.levels, None)?;
    let x0 = rational(&p.x0, "params.x0")?;
    let ms = p.ms.iter().map(|s| rational(s, "params.ms")).collect::<Result<Vec<_>, _>>()?;
    let ns = p.ns.iter().map(|s| rational(s, "params.ns")).collect::<Result<Vec<_>, _>>()?;
    let comps = [
        ("alpha", Angle::truncation(pair.alpha.clone())),
        ("alpha_prime", Angle::truncation(pair.alpha_prime.clone())),
    ];
    let mut tasks = Vec::new();
    for (ci, (_, a)) in comps.iter().enumerate() {
        let depth = a.continued_fraction().depth();
        for n in 1..depth {
            for &b in &p.betas {
                for m in &ms {
                    for nn in &ns {
                        tasks.push((ci, n, b, m.clone(), nn.clone()));
                    }
                }
            }
        }
    }
    enum Res {
        Row(KeyLemmaRow),
        Rejected,
        Horizon,
    }
    let results: Vec<Result<Res, RunError>> = tasks
        .into_par_iter()
        .map(|(ci, n, b, m, nn)| {
            let (name, angle) = &comps[ci];
            let table = NormTable::new(angle);
            let q = match key_lemma_midpoint(&table, b, m, nn, n) {
                Ok(q) => q,
                Err(Error::Window(_) | Error::InsufficientDepth { .. }) => return Ok(Res::Rejected),
                Err(e) => return Err(e.into()),
            };
            match evaluate_key_lemma(angle, &x0, &q) {
                Ok(outcome) => Ok(Res::Row(KeyLemmaRow { component: name, outcome })),
                Err(Error::Horizon { .. }) => Ok(Res::Horizon),
                Err(e) => Err(e.into()),
            }
        })
        .collect();
    let mut grid = KeyLemmaGrid {
        rows: Vec::new(),
        rejected: 0,
        horizon: 0,
    };
    for r in results {
        match r? {
            Res::Row(row) => grid.rows.push(row),
            Res::Rejected => grid.rejected += 1,
            Res::Horizon => grid.horizon += 1,
        }
    }
    Ok(grid)
}

fn key_lemma_run(p: &KeyLemmaParams) -> Result<Outcome, RunError> {
    let grid = key_lemma_rows(p)?;
    let mut tab = Table::new(
        "r, M, N exact rationals num/den; K exact integer; tail = exact measure of {tau < K} as float rounding (exact num/den in queries.json); bound_lo = certified lower end of 1/N + 1/M^beta",
        &["component", "n", "beta", "m", "n_big", "r_num", "r_den", "k_bits", "tail", "bound_lo", "holds"],
    );
    for row in &grid.rows {
        let o = &row.outcome;
        tab.row([
            row.component.to_string(),
            o.query.index.to_string(),
            fmt_f64(o.query.beta),
            fmt_rational(&o.query.m),
            fmt_rational(&o.query.n_),
            o.query.r.numer().to_string(),
            o.query.r.denom().to_string(),
            o.k.significant_bits().to_string(),
            fmt_f64(o.tail.to_f64()),
            fmt_f64(o.bound_lo),
            flag(o.holds).to_string(),
        ]);
    }
    let violations = grid.rows.iter().filter(|r| !r.outcome.holds).count();
    let mut art = Artifacts::default();
    art.add("queries.csv", tab.into_bytes());
    art.add_json("queries.json", &grid.rows);
    let passed = violations == 0 && grid.rows.len() >= p.min_valid;
    let summary = format!(
        "{} valid queries (need {}), {} outside their window, {} beyond the horizon, {violations} violations",
        grid.rows.len(),
        p.min_valid,
        grid.rejected,
        grid.horizon
    );
    Ok(Outcome::new(art, passed, summary))
}

fn borel_cantelli_run(p: &BorelCantelliParams) -> Result<Outcome, RunError> {
    let pair = build_pair(p.gamma, p.levels, None)?;
    let rep = borel_cantelli_report(&pair, p.beta, p.report_levels)?;
    let mut tab = Table::new(
        "r exact rational num/den; K exact (bit length shown); measures are float roundings of exact rationals (exact values in report.json); lemma_bound certified lower end",
        &["window_n", "primed", "excluded", "i", "r_num", "r_den", "k_bits", "own", "other", "bound", "lemma_bound"],
    );
    for w in &rep.windows {
        for r in &w.radii {
            tab.row([
                w.window.n.to_string(),
                flag(w.window.primed).to_string(),
                flag(w.excluded).to_string(),
                r.i.to_string(),
                r.r.numer().to_string(),
                r.r.denom().to_string(),
                r.k.significant_bits().to_string(),
                fmt_f64(r.own.to_f64()),
                opt_f64(r.other.as_ref().map(|o| o.to_f64())),
                fmt_f64(r.bound.to_f64()),
                opt_f64(r.lemma_bound),
            ]);
        }
    }
    let mut art = Artifacts::default();
    art.add("windows.csv", tab.into_bytes());
    art.add_json("report.json", &rep);
    let summary = format!(
        "beta {}: {} windows, partial sums within the beta series bound: {}, within the gamma form: {}",
        p.beta,
        rep.windows.iter().filter(|w| !w.excluded).count(),
        rep.within_beta_bound,
        rep.within_gamma_bound
    );
    Ok(Outcome::new(art, rep.within_beta_bound, summary))
}

#[derive(Clone, Debug, Serialize)]
pub struct FlowRow {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub flow_time: Option<f64>,
    pub reparam_time: Option<f64>,
    pub error_estimate: f64,
    pub step: f64,
    pub time1_steps: Option<u64>,
    /// The first time-1 iterate in the ball comes no earlier than the flow's entry.
    pub map1_ok: bool,
    /// `T / C <= T_phi <= C T` within the integrator tolerance.
    pub sandwich_ok: bool,
}

/// Hitting times of the unreparametrized flow, the reparametrized flow and
/// its time-1 map, for `p.instances` sampled pairs of points.
pub fn flow_instances(p: &FlowParams, seed: u64) -> Result<(Vec<FlowRow>, Reparametrization), RunError> {
    let angles = p.angles.iter().map(|a| a.build()).collect::<Result<Vec<_>, _>>()?;
    let flow = TranslationFlow::from_angles(&angles)?;
    let speed = TrigPoly::new(p.speed.dim, p.speed.terms.clone())?;
    let rep = match p.c {
        Some(c) => Reparametrization::new(speed, c)?,
        None => Reparametrization::certified(speed)?,
    };
    let d = flow.dim();
    let mut rng = sampling::rng(seed, streams::FLOW);
    let pts: Vec<(Vec<f64>, Vec<f64>)> = (0..p.instances)
        .map(|_| {
            let x: Vec<f64> = (0..d).map(|_| sampling::unit_f64(&mut rng)).collect();
            let y: Vec<f64> = (0..d).map(|_| sampling::unit_f64(&mut rng)).collect();
            (x, y)
        })
        .collect();
    let c = rep.c;
    let rows = pts
        .into_par_iter()
        .map(|(x, y)| -> Result<FlowRow, RunError> {
            let base = flow_hit(&flow, &x, &y, p.radius, p.t_max)?.time;
            let h = reparam_flow_hit(&flow, &rep, &x, &y, p.radius, p.t_max)?;
            let n = time1_hit(&flow, &rep, &x, &y, p.radius, p.n_max)?;
            let tol = h.error_estimate + 1e-9;
            let map1_ok = match (n, h.time) {
                (Some(n), Some(t)) => n as f64 + tol >= t,
                (Some(n), None) => n as f64 > p.t_max,
                (None, _) => true,
            };
            let sandwich_ok = match (base, h.time) {
                (Some(b), Some(t)) => b / c <= t + tol && t <= c * b + tol,
                (Some(b), None) => c * b > p.t_max,
                (None, Some(t)) => t * c > p.t_max,
                (None, None) => true,
            };
            Ok(FlowRow {
                x,
                y,
                flow_time: base,
                reparam_time: h.time,
                error_estimate: h.error_estimate,
                step: h.step,
                time1_steps: n,
                map1_ok,
                sandwich_ok,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok((rows, rep))
}

fn flow_run(p: &FlowParams, seed: u64) -> Result<Outcome, RunError> {
    let (rows, rep) = flow_instances(p, seed)?;
    let fmt_pt = |v: &[f64]| v.iter().map(|c| fmt_f64(*c)).collect::<Vec<_>>().join(";");
    let mut tab = Table::new(
        "float; times in flow time units, flow_time exact up to f64 rounding (interval sweep), reparam_time by RK4 with error_estimate = |T(h) - T(h/2)|; time1_steps exact count of time-1 iterates",
        &[
            "instance_id",
            "x",
            "y",
            "radius",
            "flow_time",
            "reparam_time",
            "error_estimate",
            "step",
            "time1_steps",
            "map1_ok",
            "sandwich_ok",
        ],
    );
    for (i, r) in rows.iter().enumerate() {
        tab.row([
            i.to_string(),
            fmt_pt(&r.x),
            fmt_pt(&r.y),
            fmt_f64(p.radius),
            opt_f64(r.flow_time),
            opt_f64(r.reparam_time),
            fmt_f64(r.error_estimate),
            fmt_f64(r.step),
            opt(r.time1_steps),
            flag(r.map1_ok).to_string(),
            flag(r.sandwich_ok).to_string(),
        ]);
    }
    let section = checks::section_map(seed, p.section_checks)?;
    let map1 = rows.iter().filter(|r| !r.map1_ok).count();
    let sandwich = rows.iter().filter(|r| !r.sandwich_ok).count();
    #[derive(Serialize)]
    struct Summary<'a> {
        c: f64,
        instances: usize,
        map1_violations: usize,
        sandwich_violations: usize,
        max_error_estimate: f64,
        section_map: &'a checks::CheckResult,
    }
    let mut art = Artifacts::default();
    art.add("flow.csv", tab.into_bytes());
    art.add_json(
        "summary.json",
        &Summary {
            c: rep.c,
            instances: rows.len(),
            map1_violations: map1,
            sandwich_violations: sandwich,
            max_error_estimate: rows.iter().map(|r| r.error_estimate).fold(0.0, f64::max),
            section_map: &section,
        },
    );
    let passed = map1 == 0 && sandwich == 0 && section.passed;
    let summary = format!(
        "{} instances with C = {}: {map1} time-1 violations, {sandwich} sandwich violations; {}",
        rows.len(),
        rep.c,
        section.detail
    );
    Ok(Outcome::new(art, passed, summary))
}

fn observable(spec: &ObservableSpec) -> Result<Observable, RunError> {
    Ok(match spec {
        ObservableSpec::Cos1 => Observable::cos1(),
        ObservableSpec::Hat { center, width, centered } => {
            let o = Observable::hat(center.clone(), *width)?;
            if *centered {
                o.centered()
            } else {
                o
            }
        }
        ObservableSpec::Trig { poly, centered } => {
            let o = Observable::trig(TrigPoly::new(poly.dim, poly.terms.clone())?);
            if *centered {
                o.centered()
            } else {
                o
            }
        }
    })
}

fn corr_run(p: &CorrParams) -> Result<Outcome, RunError> {
    if p.n_min > p.n_max {
        return Err(RunError::Config("params.n_min: exceeds n_max".into()));
    }
    let f = observable(&p.f)?;
    let g = observable(&p.g)?;
    let angle = p.angle.build()?;
    let system = match p.system {
        CorrSystem::Rotation => System::Translation {
            translation: Translation::circle(angle.clone()),
        },
        CorrSystem::Doubling => System::Doubling,
    };
    let ns: Vec<u64> = (p.n_min..=p.n_max).collect();
    let series = correlation_series(&system, &f, &g, &ns)?;
    let fit = decay_exponent_fit(&series);
    let mut tab = Table::new(
        "float; value = |int f(T^n x) g(x) dx - int f int g|, error_bound = rigorous bound on |value - exact| (closed form: rounding; quadrature: Lipschitz bound)",
        &["n", "value", "error_bound", "method"],
    );
    for v in &series.values {
        tab.row([
            v.n.to_string(),
            fmt_f64(v.value),
            fmt_f64(v.error_bound),
            match v.method {
                Method::ClosedForm => "closed_form",
                Method::Quadrature => "quadrature",
            }
            .to_string(),
        ]);
    }
    #[derive(Serialize)]
    struct Witness {
        k: usize,
        q_k: u64,
        norm: f64,
        value: f64,
        ok: bool,
    }
    let mut witnesses = Vec::new();
    let mut ok = true;
    if p.system == CorrSystem::Rotation {
        let cf = angle.continued_fraction();
        let th = rational(&p.witness_norm, "params.witness_norm")?;
        for k in 1..=p.witness_levels {
            let norm = cf.norm_q_alpha(k)?;
            if norm < th {
                let q_k = cf
                    .q(k)
                    .to_u64()
                    .ok_or_else(|| RunError::Core(Error::Resource(format!("q_{k} exceeds 64 bits"))))?;
                let v = correlation(&system, &f, &g, q_k)?;
                let w_ok = v.value >= p.witness_min;
                ok &= w_ok;
                witnesses.push(Witness {
                    k,
                    q_k,
                    norm: norm.to_f64(),
                    value: v.value,
                    ok: w_ok,
                });
            }
        }
    }
    let orthogonal = (p.system == CorrSystem::Doubling && p.f == ObservableSpec::Cos1 && p.g == ObservableSpec::Cos1)
        .then(|| series.values.iter().filter(|v| v.n >= 1).all(|v| v.value == 0.0));
    ok &= orthogonal != Some(false);
    #[derive(Serialize)]
    struct Bounds {
        theorem1_d1_p2: f64,
        corollary_d2_r4: f64,
        corollary_d1_rinf: f64,
    }
    let bounds = Bounds {
        theorem1_d1_p2: theorem1_bound(1.0, 1.0, 2.0)?,
        corollary_d2_r4: corollary_bound(2.0, 4.0)?,
        corollary_d1_rinf: corollary_bound(1.0, f64::INFINITY)?,
    };
    ok &= bounds.theorem1_d1_p2 == 3.0 && bounds.corollary_d2_r4 == 3.0 && bounds.corollary_d1_rinf == 0.0;
    #[derive(Serialize)]
    struct Summary<'a> {
        quadrature: &'a str,
        fit: Option<&'a hitlab_core::corr::DecayFit>,
        fit_error: Option<String>,
        witnesses: &'a [Witness],
        orthogonal: Option<bool>,
        bounds: &'a Bounds,
    }
    let mut art = Artifacts::default();
    art.add("series.csv", tab.into_bytes());
    art.add_json(
        "summary.json",
        &Summary {
            quadrature: &series.quadrature,
            fit: fit.as_ref().ok(),
            fit_error: fit.as_ref().err().map(|e| e.to_string()),
            witnesses: &witnesses,
            orthogonal,
            bounds: &bounds,
        },
    );
    let fit_str = match &fit {
        Ok(f) => match f.p {
            Some(v) => format!("fitted p = {v:.3}"),
            None => format!("no fit ({} usable entries)", f.used),
        },
        Err(e) => e.to_string(),
    };
    let summary = format!(
        "{} values, {fit_str}; {} witnesses{}",
        series.values.len(),
        witnesses.len(),
        match orthogonal {
            Some(true) => ", all doubling correlations exactly 0",
            Some(false) => ", NONZERO doubling correlations",
            None => "",
        }
    );
    Ok(Outcome::new(art, ok, summary))
}

fn verify_all_run(p: &VerifyAllParams, seed: u64) -> Result<Outcome, RunError> {
    let mut stages = std::collections::BTreeMap::new();
    let mut results = Vec::new();
    let steps: Vec<(&str, Box<dyn Fn() -> Result<checks::CheckResult, RunError> + '_>)> = vec![
        ("convergent_bounds", Box::new(|| checks::convergent_bounds(seed, p.convergent_instances))),
        ("pair_membership", Box::new(|| checks::pair_membership(&[1.5, 2.0, 3.0], p.pair_levels, DEFAULT_BIT_BUDGET))),
        ("hitting_oracle", Box::new(|| checks::hitting_oracle(seed, p.hit_instances, 100_000))),
        ("level_sets", Box::new(|| checks::level_sets(seed, 30, 4..=9))),
        ("key_lemma", Box::new(|| checks::key_lemma(&KeyLemmaParams::default()))),
        ("borel_cantelli", Box::new(|| checks::borel_cantelli(2.0, 6, 1.8, 5))),
        ("loglaw", Box::new(|| checks::loglaw(seed, 5, 100_000))),
        ("exponent_identities", Box::new(checks::exponent_identity_check)),
        ("flow_inequalities", Box::new(|| checks::flow_inequalities(seed, p.flow_instances))),
        ("section_map", Box::new(|| checks::section_map(seed, 20))),
        ("correlation_controls", Box::new(checks::correlation_controls)),
    ];
    for (name, f) in steps {
        let t = Instant::now();
        results.push(f()?);
        stages.insert(name.to_string(), t.elapsed().as_secs_f64());
    }
    let mut tab = Table::new(
        "check outcomes; exact checks have zero tolerance, others state theirs in detail",
        &["check", "passed", "detail"],
    );
    for r in &results {
        tab.row([r.name.clone(), flag(r.passed).to_string(), r.detail.clone()]);
    }
    let failed: Vec<&str> = results.iter().filter(|r| !r.passed).map(|r| r.name.as_str()).collect();
    let mut art = Artifacts::default();
    art.add("verify.csv", tab.into_bytes());
    art.add_json("verify.json", &results);
    let summary = if failed.is_empty() {
        format!("all {} checks passed", results.len())
    } else {
        format!("{} of {} checks failed: {}", failed.len(), results.len(), failed.join(", "))
    };
    let mut out = Outcome::new(art, failed.is_empty(), summary);
    out.stages = stages;
    Ok(out)
}
