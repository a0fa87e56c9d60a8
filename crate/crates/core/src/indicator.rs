//! Finite-scale hitting-time indicators `log tau_r / -log r` over geometric
//! radius schedules, and the log-law cross-checks between hitting times and
//! minimal distances.

use crate::certified::{exp_neg_rational, ln_rational, pow_neg_rational};
use crate::error::{Error, Result};
use crate::io::rational_str;
use crate::orbit::{HittingRecord, Translation};
use rug::{Integer, Rational};
use serde::{Deserialize, Serialize};

/// Default number of trailing schedule entries used for `R_low`/`R_up`.
pub const DEFAULT_TAIL_WINDOW: usize = 8;

/// Geometric radii `r_n = base^-n` for `n = n_start..=n_end`, rounded down to
/// 64-bit dyadic rationals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub base: f64,
    pub n_start: u32,
    pub n_end: u32,
}

impl Schedule {
    pub fn new(base: f64, n_start: u32, n_end: u32) -> Result<Self> {
        if !(base.is_finite() && base > 1.0) {
            return Err(Error::Precondition(format!("schedule base must be > 1, got {base}")));
        }
        if n_start > n_end {
            return Err(Error::Precondition(format!("empty schedule {n_start}..={n_end}")));
        }
        Ok(Schedule { base, n_start, n_end })
    }

    /// `r_n = e^-n`.
    pub fn exponential(n_start: u32, n_end: u32) -> Result<Self> {
        Schedule::new(std::f64::consts::E, n_start, n_end)
    }

    pub fn radius(&self, n: u32) -> Rational {
        if self.base == std::f64::consts::E {
            exp_neg_rational(n)
        } else {
            pow_neg_rational(self.base, n)
        }
    }

    pub fn radii(&self) -> Vec<(u32, Rational)> {
        (self.n_start..=self.n_end)
            .map(|n| (n, self.radius(n)))
            .filter(|(_, r)| *r > 0 && Rational::from(r * 2u32) < 1)
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioEntry {
    pub n: u32,
    #[serde(with = "rational_str")]
    pub radius: Rational,
    pub tau: Option<u64>,
    pub horizon: u64,
    /// `ln tau / -ln r`; for censored entries the lower bound `ln(horizon + 1) / -ln r`.
    pub ratio: f64,
    pub censored: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndicatorEstimate {
    pub ratios: Vec<RatioEntry>,
    /// Minimum over the tail window, censored entries counted as lower bounds.
    pub r_low: f64,
    /// Maximum over the non-censored entries of the tail window.
    pub r_up: Option<f64>,
    pub schedule: Schedule,
    pub tail_window: usize,
    pub censored_count: usize,
}

fn entry(n: u32, rec: HittingRecord) -> RatioEntry {
    let neg_ln_r = -ln_rational(&rec.radius);
    let (ratio, censored) = match rec.tau {
        Some(t) => ((t as f64).ln() / neg_ln_r, false),
        None => (((rec.horizon as f64) + 1.0).ln() / neg_ln_r, true),
    };
    RatioEntry {
        n,
        radius: rec.radius,
        tau: rec.tau,
        horizon: rec.horizon,
        ratio,
        censored,
    }
}

/// Indicators from a hitting-time source evaluated on every radius of the schedule.
pub fn estimate_indicators<F>(mut hit: F, schedule: &Schedule, tail_window: usize) -> Result<IndicatorEstimate>
where
    F: FnMut(&Rational) -> Result<HittingRecord>,
{
    if tail_window == 0 {
        return Err(Error::Precondition("tail window must be positive".into()));
    }
    let mut ratios = Vec::new();
    for (n, r) in schedule.radii() {
        ratios.push(entry(n, hit(&r)?));
    }
    summarize(ratios, schedule.clone(), tail_window)
}

fn summarize(ratios: Vec<RatioEntry>, schedule: Schedule, tail_window: usize) -> Result<IndicatorEstimate> {
    let censored_count = ratios.iter().filter(|e| e.censored).count();
    if ratios.is_empty() || censored_count == ratios.len() {
        return Err(Error::Estimation(format!(
            "all {} schedule entries are censored",
            ratios.len()
        )));
    }
    let tail = &ratios[ratios.len().saturating_sub(tail_window)..];
    let r_low = tail.iter().map(|e| e.ratio).fold(f64::INFINITY, f64::min);
    let r_up = tail
        .iter()
        .filter(|e| !e.censored)
        .map(|e| e.ratio)
        .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.max(v))));
    Ok(IndicatorEstimate {
        ratios,
        r_low,
        r_up,
        schedule,
        tail_window,
        censored_count,
    })
}

/// Hitting indicators of a translation; each radius uses the largest admissible horizon up to `cap`.
pub fn translation_indicators(
    t: &Translation,
    x: &[Rational],
    x0: &[Rational],
    schedule: &Schedule,
    tail_window: usize,
    cap: u64,
) -> Result<IndicatorEstimate> {
    let smallest = schedule
        .radii()
        .last()
        .map(|(_, r)| r.clone())
        .ok_or_else(|| Error::Precondition("schedule has no radius in (0, 1/2)".into()))?;
    if t.max_horizon(&smallest, cap) == 0 {
        return Err(Error::Horizon {
            iterates: "1".into(),
            radius: crate::io::fmt_rational(&smallest),
            needed: "positive horizon".into(),
            available: "0".into(),
        });
    }
    estimate_indicators(|r| t.hit(x, x0, r, t.max_horizon(r, cap)), schedule, tail_window)
}

/// Recurrence indicators `log tau_r(x, x) / -log r`.
pub fn recurrence_indicators(
    t: &Translation,
    x: &[Rational],
    schedule: &Schedule,
    tail_window: usize,
    cap: u64,
) -> Result<IndicatorEstimate> {
    translation_indicators(t, x, x, schedule, tail_window, cap)
}

/// Both pipelines of the log-law cross-check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoglawReport {
    pub n_max: u64,
    /// First record time of `d_n` at or after `ceil(sqrt(n_max))`, or the one
    /// before it if only one record follows.
    pub n_lo: u64,
    /// `1 / max(-ln d_n / ln n)` and `1 / min(...)` from `n_lo` to the last
    /// record time up to `n_max`.
    pub d_low: f64,
    pub d_up: f64,
    /// Extremes of `ln tau_r / -ln r` over `r` between the same two records.
    pub tau_low: f64,
    pub tau_up: f64,
    pub radii_used: usize,
    pub gap: f64,
    /// Gap recomputed on prefixes `n_max / 100`, `n_max / 10`, `n_max`.
    pub gap_history: Vec<(u64, f64)>,
    /// The orbit reaches `x0` exactly, or is periodic within `n_max` so the
    /// distances stop decreasing, or fewer than two record times exist.
    pub degenerate: bool,
}

fn log_ratio_minmax(d: &[Rational], lo: u64, hi: u64) -> Option<(f64, f64)> {
    let mut mn = f64::INFINITY;
    let mut mx = f64::NEG_INFINITY;
    for n in lo.max(2)..=hi {
        let v = &d[(n - 1) as usize];
        if *v <= 0 {
            return None;
        }
        let e = -ln_rational(v) / (n as f64).ln();
        mn = mn.min(e);
        mx = mx.max(e);
    }
    (mn <= mx).then_some((mn, mx))
}

type PrefixExtremes = (f64, f64, f64, f64, usize);

/// `ln tau_r / -ln r` is constant in `tau` on each interval between
/// consecutive record values of `d_n`, so its extremes sit at those values
/// (supremum) and just above them (infimum). Both sides use the scales between
/// the first and last record times in `[sqrt(m), m]` (extended back to the
/// previous record when there is only one): `n` in that range and
/// `r` in `(d_last, d_first]`. `tau` is recomputed by the hitting-time engine,
/// not read off `d`.
fn loglaw_on_prefix(
    t: &Translation,
    x: &[Rational],
    x0: &[Rational],
    d: &[Rational],
    m: u64,
) -> Result<(u64, Option<PrefixExtremes>)> {
    let n_lo = ((m as f64).sqrt().ceil() as u64).clamp(2, m);
    let all: Vec<u64> = (2..=m).filter(|&n| d[(n - 1) as usize] < d[(n - 2) as usize]).collect();
    let late = all.partition_point(|&n| n < n_lo);
    let records = &all[late.min(all.len().saturating_sub(2))..];
    let (Some(&first), Some(&last)) = (records.first(), records.last()) else {
        return Ok((n_lo, None));
    };
    if first == last {
        return Ok((first, None));
    }
    let Some((emin, emax)) = log_ratio_minmax(d, first, last) else {
        return Ok((first, None));
    };
    if emin <= 0.0 {
        return Ok((first, None));
    }
    let (d_low, d_up) = (1.0 / emax, 1.0 / emin);
    let half = Rational::from((1, 2));
    let bump = Rational::from((Integer::from(1) << 32u32) + 1u32) >> 32u32;
    let mut probes = Vec::new();
    for &n in records {
        let v = &d[(n - 1) as usize];
        if n != last {
            probes.push(v.clone());
        }
        let up = Rational::from(v * &bump);
        if up < half {
            probes.push(up);
        }
    }
    let mut tmin = f64::INFINITY;
    let mut tmax = f64::NEG_INFINITY;
    let mut used = 0usize;
    for r in &probes {
        if let Some(tau) = t.hit(x, x0, r, m)?.tau {
            let v = (tau as f64).ln() / -ln_rational(r);
            tmin = tmin.min(v);
            tmax = tmax.max(v);
            used += 1;
        }
    }
    if used == 0 {
        return Ok((first, None));
    }
    Ok((first, Some((d_low, d_up, tmin, tmax, used))))
}

/// Compares indicators computed from hitting times with the reciprocal
/// log-law exponents of the distance sequence `d_n`, on the same orbit prefix.
pub fn loglaw_crosscheck(t: &Translation, x: &[Rational], x0: &[Rational], n_max: u64) -> Result<LoglawReport> {
    if n_max < 4 {
        return Err(Error::Precondition("log-law cross-check needs n_max >= 4".into()));
    }
    let d = t.d_n_sequence(x, x0, n_max)?;
    let mut gap_history = Vec::new();
    if periodic_within(t, n_max) {
        return Ok(degenerate_report(n_max, 0, gap_history));
    }
    for m in [n_max / 100, n_max / 10] {
        if m >= 4 {
            if let (_, Some((a, b, c, e, _))) = loglaw_on_prefix(t, x, x0, &d[..m as usize], m)? {
                gap_history.push((m, (a - c).abs().max((b - e).abs())));
            }
        }
    }
    let (n_lo, res) = loglaw_on_prefix(t, x, x0, &d, n_max)?;
    Ok(match res {
        Some((d_low, d_up, tau_low, tau_up, used)) => {
            let gap = (d_low - tau_low).abs().max((d_up - tau_up).abs());
            gap_history.push((n_max, gap));
            LoglawReport {
                n_max,
                n_lo,
                d_low,
                d_up,
                tau_low,
                tau_up,
                radii_used: used,
                gap,
                gap_history,
                degenerate: false,
            }
        }
        None => degenerate_report(n_max, n_lo, gap_history),
    })
}

/// Every angle exact with joint period at most `n`: `d_n` is constant after one period.
fn periodic_within(t: &Translation, n: u64) -> bool {
    let mut period = Integer::from(1);
    for a in &t.angles {
        if a.is_truncation() {
            return false;
        }
        period.lcm_mut(a.frac().denom());
    }
    period <= n
}

fn degenerate_report(n_max: u64, n_lo: u64, gap_history: Vec<(u64, f64)>) -> LoglawReport {
    LoglawReport {
        n_max,
        n_lo,
        d_low: f64::NAN,
        d_up: f64::NAN,
        tau_low: f64::NAN,
        tau_up: f64::NAN,
        radii_used: 0,
        gap: 0.0,
        gap_history,
        degenerate: true,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentIdentities {
    pub n: usize,
    /// Tail window `[n/2, n]` extremes of `-ln f(k) / ln k`.
    pub limsup_ratio: f64,
    pub liminf_ratio: f64,
    /// `sup { beta : liminf k^beta f(k) = 0 }`, finite-window surrogate.
    pub sup_beta_liminf: f64,
    /// `sup { beta : limsup k^beta f(k) = 0 }`, finite-window surrogate.
    pub sup_beta_limsup: f64,
    pub gap_limsup: f64,
    pub gap_liminf: f64,
}

/// `f[k-1] = f(k)` for `k = 1..=n`, all positive.
pub fn exponent_identities(f: &[f64]) -> Result<ExponentIdentities> {
    let n = f.len();
    if n < 16 {
        return Err(Error::Precondition("exponent identities need at least 16 samples".into()));
    }
    if f.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::Precondition("f must be positive and finite".into()));
    }
    let ratio = |k: usize| -f[k - 1].ln() / (k as f64).ln();
    let lo = n / 2;
    let (mut mx, mut mn) = (f64::NEG_INFINITY, f64::INFINITY);
    for k in lo.max(2)..=n {
        mx = mx.max(ratio(k));
        mn = mn.min(ratio(k));
    }
    // ln(k^beta f(k)) over a window, extreme by `pick`.
    let window = |a: usize, b: usize, beta: f64, pick: fn(f64, f64) -> f64, init: f64| {
        (a.max(1)..b).fold(init, |acc, k| pick(acc, beta * (k as f64).ln() + f[k - 1].ln()))
    };
    // "tends to 0": the late window reaches lower than the earlier one.
    let liminf_zero = |beta: f64| {
        window(n / 2, n + 1, beta, f64::min, f64::INFINITY) < window(n / 4, n / 2, beta, f64::min, f64::INFINITY)
    };
    let limsup_zero = |beta: f64| {
        window(n / 2, n + 1, beta, f64::max, f64::NEG_INFINITY)
            < window(n / 4, n / 2, beta, f64::max, f64::NEG_INFINITY)
    };
    let sup_beta = |pred: &dyn Fn(f64) -> bool| {
        if !pred(0.0) {
            return 0.0;
        }
        let mut hi = 1.0;
        while pred(hi) && hi < 1e6 {
            hi *= 2.0;
        }
        let mut lo = hi / 2.0;
        if hi == 1.0 {
            lo = 0.0;
        }
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if pred(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    };
    let a = sup_beta(&liminf_zero);
    let b = sup_beta(&limsup_zero);
    Ok(ExponentIdentities {
        n,
        limsup_ratio: mx,
        liminf_ratio: mn,
        sup_beta_liminf: a,
        sup_beta_limsup: b,
        gap_limsup: (a - mx).abs(),
        gap_liminf: (b - mn).abs(),
    })
}

/// Tail-window comparison of `-ln d_n / ln n` with `-ln dist(T^n x, x0) / ln n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistanceIdentity {
    pub n_max: u64,
    pub window_start: u64,
    pub d_ratio: f64,
    pub pointwise_ratio: f64,
    /// The minimum `d_(window_start)` was attained before the window.
    pub boundary_record: bool,
    pub agree: bool,
}

pub fn distance_identity(t: &Translation, x: &[Rational], x0: &[Rational], n_max: u64) -> Result<DistanceIdentity> {
    if n_max < 4 {
        return Err(Error::Precondition("distance identity needs n_max >= 4".into()));
    }
    let dist = t.distances(x, x0, n_max)?;
    let d = t.d_n_sequence(x, x0, n_max)?;
    let start = n_max / 2;
    let ratio = |v: &Rational, n: u64| {
        if *v <= 0 {
            f64::INFINITY
        } else {
            -ln_rational(v) / (n as f64).ln()
        }
    };
    let mut dr = f64::NEG_INFINITY;
    let mut pr = f64::NEG_INFINITY;
    for n in start..=n_max {
        dr = dr.max(ratio(&d[(n - 1) as usize], n));
        pr = pr.max(ratio(&dist[(n - 1) as usize], n));
    }
    let first = &d[(start - 1) as usize];
    let boundary_record = !dist[(start - 1) as usize..].iter().any(|v| v == first);
    Ok(DistanceIdentity {
        n_max,
        window_start: start,
        d_ratio: dr,
        pointwise_ratio: pr,
        boundary_record,
        agree: (dr - pr).abs() <= 1e-12 * dr.abs().max(1.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::angle::Angle;
    use crate::cf::ContinuedFraction;

    #[test]
    fn schedule_radii_are_decreasing_dyadics() {
        let s = Schedule::exponential(1, 10).unwrap();
        let r = s.radii();
        assert_eq!(r.len(), 10);
        assert!(r.windows(2).all(|w| w[0].1 > w[1].1));
        assert!(Schedule::new(1.0, 1, 3).is_err());
        assert!(Schedule::new(2.0, 5, 3).is_err());
    }

    #[test]
    fn censoring_rules() {
        let s = Schedule::new(2.0, 2, 6).unwrap();
        let all = estimate_indicators(
            |r| {
                Ok(HittingRecord {
                    radius: r.clone(),
                    tau: None,
                    horizon: 10,
                })
            },
            &s,
            3,
        );
        assert!(matches!(all, Err(Error::Estimation(_))));
        let mut k = 0;
        let est = estimate_indicators(
            |r| {
                k += 1;
                Ok(HittingRecord {
                    radius: r.clone(),
                    tau: if k == 5 { None } else { Some(1 << (k + 1)) },
                    horizon: 1 << 20,
                })
            },
            &s,
            3,
        )
        .unwrap();
        assert_eq!(est.censored_count, 1);
        // Censored last entry only lowers-bounds R_low; R_up comes from the rest.
        let up = est.r_up.unwrap();
        assert!((up - 1.0).abs() < 1e-9);
        assert!(est.r_low <= up);
    }

    #[test]
    fn quarter_rotation_recurrence_ratios_vanish() {
        let t = Translation::circle(Angle::rational(Rational::from((1, 4))));
        let x = [Rational::from((1, 3))];
        let est = recurrence_indicators(&t, &x, &Schedule::exponential(2, 20).unwrap(), 8, 1 << 20).unwrap();
        assert!(est.ratios.iter().all(|e| e.tau == Some(4)));
        assert!(est.ratios.last().unwrap().ratio < 0.07);
    }

    #[test]
    fn power_law_identities() {
        let f: Vec<f64> = (1..=10_000).map(|k| (k as f64).powi(-2)).collect();
        let rep = exponent_identities(&f).unwrap();
        assert!((rep.limsup_ratio - 2.0).abs() < 1e-9);
        assert!((rep.sup_beta_liminf - 2.0).abs() < 0.05);
        assert!((rep.sup_beta_limsup - 2.0).abs() < 0.05);
    }

    #[test]
    fn golden_loglaw() {
        let t = Translation::circle(Angle::truncation(ContinuedFraction::golden(40)));
        let rep = loglaw_crosscheck(&t, &[Rational::from((1, 3))], &[Rational::from((2, 7))], 20_000).unwrap();
        assert!(!rep.degenerate);
        assert!(rep.gap < 0.05, "{rep:?}");
    }
}
