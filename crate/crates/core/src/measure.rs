//! Exact Lebesgue measures of hitting-time level sets for circle rotations,
//! the key-lemma window machinery and the Borel–Cantelli bookkeeping for
//! intertwined pairs.
//!
//! Arcs are half-open `[l, r)`; open balls and their closures differ by a
//! null set, so every measure below is exact.

use crate::angle::{Angle, AngleSource};
use std::borrow::Cow;
use std::cell::OnceCell;
use crate::builder::IntertwinedPair;
use crate::certified::{ceil_rational_pow, exp_neg_rational, ln_rational, Interval};
use crate::cf::ContinuedFraction;
use crate::error::{Error, Result};
use crate::io::{fmt_rational, rational_str};
use rug::float::Round;
use rug::ops::Pow;
use rug::{Float, Integer, Rational};
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

/// Finite union of half-open arcs of the circle `[0, 1)`.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct ArcUnion {
    arcs: Vec<(Rational, Rational)>,
    total: Rational,
}

impl Serialize for ArcUnion {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let arcs: Vec<[String; 2]> = self
            .arcs
            .iter()
            .map(|(l, r)| [fmt_rational(l), fmt_rational(r)])
            .collect();
        let mut st = s.serialize_struct("ArcUnion", 2)?;
        st.serialize_field("arcs", &arcs)?;
        st.serialize_field("total_measure", &fmt_rational(&self.total))?;
        st.end()
    }
}

fn wrap01(x: &Rational) -> Rational {
    let f = x.clone().floor();
    x - f
}

impl ArcUnion {
    pub fn empty() -> Self {
        ArcUnion::default()
    }

    pub fn full() -> Self {
        ArcUnion::from_sorted(vec![(Rational::new(), Rational::from(1))])
    }

    /// Canonical form from sorted, possibly touching or overlapping arcs.
    fn from_sorted(arcs: Vec<(Rational, Rational)>) -> Self {
        let mut out: Vec<(Rational, Rational)> = Vec::with_capacity(arcs.len());
        for (l, r) in arcs {
            if l >= r {
                continue;
            }
            if let Some(last) = out.last_mut() {
                if l <= last.1 {
                    if r > last.1 {
                        last.1 = r;
                    }
                    continue;
                }
            }
            out.push((l, r));
        }
        let total = out.iter().fold(Rational::new(), |acc, (l, r)| acc + Rational::from(r - l));
        ArcUnion { arcs: out, total }
    }

    fn from_unsorted(mut arcs: Vec<(Rational, Rational)>) -> Self {
        arcs.sort();
        ArcUnion::from_sorted(arcs)
    }

    /// The arc `[start, start + len)` taken mod 1; `len >= 1` gives the full circle.
    pub fn arc(start: &Rational, len: &Rational) -> Self {
        if *len <= 0 {
            return ArcUnion::empty();
        }
        if *len >= 1 {
            return ArcUnion::full();
        }
        let l = wrap01(start);
        let r = Rational::from(&l + len);
        if r <= 1 {
            ArcUnion::from_sorted(vec![(l, r)])
        } else {
            let r = r - 1u32;
            ArcUnion::from_sorted(vec![(Rational::new(), r), (l, Rational::from(1))])
        }
    }

    /// The ball `B_r(center)` up to its two endpoints.
    pub fn ball(center: &Rational, r: &Rational) -> Self {
        ArcUnion::arc(&Rational::from(center - r), &Rational::from(r * 2u32))
    }

    pub fn arcs(&self) -> &[(Rational, Rational)] {
        &self.arcs
    }

    pub fn total_measure(&self) -> &Rational {
        &self.total
    }

    pub fn is_empty(&self) -> bool {
        self.arcs.is_empty()
    }

    pub fn contains(&self, x: &Rational) -> bool {
        let x = wrap01(x);
        let i = self.arcs.partition_point(|(l, _)| *l <= x);
        i > 0 && x < self.arcs[i - 1].1
    }

    pub fn union(&self, other: &ArcUnion) -> ArcUnion {
        let mut all = Vec::with_capacity(self.arcs.len() + other.arcs.len());
        let (mut i, mut j) = (0, 0);
        while i < self.arcs.len() || j < other.arcs.len() {
            let take_self = j >= other.arcs.len() || (i < self.arcs.len() && self.arcs[i] <= other.arcs[j]);
            if take_self {
                all.push(self.arcs[i].clone());
                i += 1;
            } else {
                all.push(other.arcs[j].clone());
                j += 1;
            }
        }
        ArcUnion::from_sorted(all)
    }

    pub fn complement(&self) -> ArcUnion {
        let mut out = Vec::with_capacity(self.arcs.len() + 1);
        let mut cursor = Rational::new();
        for (l, r) in &self.arcs {
            if *l > cursor {
                out.push((cursor.clone(), l.clone()));
            }
            cursor = r.clone();
        }
        if cursor < 1 {
            out.push((cursor, Rational::from(1)));
        }
        ArcUnion::from_sorted(out)
    }

    pub fn intersection(&self, other: &ArcUnion) -> ArcUnion {
        let mut out = Vec::new();
        let (mut i, mut j) = (0, 0);
        while i < self.arcs.len() && j < other.arcs.len() {
            let (a0, a1) = &self.arcs[i];
            let (b0, b1) = &other.arcs[j];
            let lo = if a0 > b0 { a0 } else { b0 };
            let hi = if a1 < b1 { a1 } else { b1 };
            if lo < hi {
                out.push((lo.clone(), hi.clone()));
            }
            if a1 < b1 {
                i += 1;
            } else {
                j += 1;
            }
        }
        ArcUnion::from_sorted(out)
    }

    pub fn difference(&self, other: &ArcUnion) -> ArcUnion {
        self.intersection(&other.complement())
    }

    /// Rotation image `self + t`.
    pub fn shift(&self, t: &Rational) -> ArcUnion {
        let mut out = Vec::with_capacity(self.arcs.len() + 1);
        for (l, r) in &self.arcs {
            let len = Rational::from(r - l);
            out.extend(ArcUnion::arc(&Rational::from(l + t), &len).arcs);
        }
        ArcUnion::from_unsorted(out)
    }
}

fn check_radius(r: &Rational) -> Result<()> {
    if *r <= 0 || Rational::from(r * 2u32) >= 1 {
        return Err(Error::DegenerateBall(fmt_rational(r)));
    }
    Ok(())
}

/// Largest `k` accepted by the arc-union level-set construction.
pub const MAX_LEVEL_SET_K: u64 = 200_000;

/// Level sets `{x : tau_r(x, x0) = k}` for `k = 1..=k_max`, in order.
pub fn level_sets(alpha: &Angle, x0: &Rational, r: &Rational, k_max: u64) -> Result<Vec<ArcUnion>> {
    check_radius(r)?;
    if k_max > MAX_LEVEL_SET_K {
        return Err(Error::Resource(format!(
            "level sets up to k = {k_max} exceed the limit {MAX_LEVEL_SET_K}"
        )));
    }
    alpha.check_horizon(k_max, r)?;
    let ball = ArcUnion::ball(x0, r);
    let mut seen = ArcUnion::empty();
    let mut out = Vec::with_capacity(k_max as usize);
    for k in 1..=k_max {
        let shift = -Rational::from(alpha.frac() * Integer::from(k));
        let pre = ball.shift(&shift);
        out.push(pre.difference(&seen));
        seen = seen.union(&pre);
    }
    Ok(out)
}

/// The exact set `{x : tau_r(x, x0) = k}`.
pub fn level_set(alpha: &Angle, x0: &Rational, r: &Rational, k: u64) -> Result<ArcUnion> {
    if k == 0 {
        return Ok(ArcUnion::empty());
    }
    Ok(level_sets(alpha, x0, r, k)?.pop().expect("k >= 1"))
}

/// The angle's expansion, borrowed when stored.
fn expansion(alpha: &Angle) -> Cow<'_, ContinuedFraction> {
    match alpha.source() {
        AngleSource::Exact(cf) | AngleSource::Truncation(cf) => Cow::Borrowed(cf),
        AngleSource::Rational(_) => Cow::Owned(ContinuedFraction::from_rational(alpha.frac())),
    }
}

/// Memoized `eta_k = |q_k alpha - p_k|` of one angle, with the conventions
/// `eta_{-1} = 1`, `q_{-1} = 0`.
pub struct NormTable<'a> {
    cf: Cow<'a, ContinuedFraction>,
    truncation: bool,
    etas: Vec<OnceCell<Integer>>,
    reduced: Vec<OnceCell<Rational>>,
}

impl<'a> NormTable<'a> {
    pub fn new(alpha: &'a Angle) -> Self {
        let cf = expansion(alpha);
        let etas = (0..=cf.depth()).map(|_| OnceCell::new()).collect();
        let reduced = (0..=cf.depth()).map(|_| OnceCell::new()).collect();
        NormTable {
            cf,
            truncation: alpha.is_truncation(),
            etas,
            reduced,
        }
    }

    /// `q_N eta_k = |q_k p_N - p_k q_N|`, an integer.
    fn scaled_eta(&self, k: isize) -> Integer {
        let n = self.cf.depth();
        if k < 0 {
            return self.cf.q(n).clone();
        }
        let k = k as usize;
        self.etas[k]
            .get_or_init(|| {
                let num = Integer::from(self.cf.q(k) * self.cf.p(n)) - Integer::from(self.cf.p(k) * self.cf.q(n));
                num.abs()
            })
            .clone()
    }

    fn raw_eta(&self, k: isize) -> Rational {
        if k < 0 {
            Rational::from(1)
        } else {
            self.reduced[k as usize]
                .get_or_init(|| Rational::from((self.scaled_eta(k), self.cf.q(self.cf.depth()).clone())))
                .clone()
        }
    }

    fn q(&self, k: isize) -> Integer {
        if k < 0 {
            Integer::new()
        } else {
            self.cf.q(k as usize).clone()
        }
    }

    /// `||q_n alpha||` as used in window statements: truncations need `n + 2 <= depth`,
    /// exact angles read zero beyond their depth.
    pub fn eta(&self, n: isize) -> Result<Rational> {
        if n < 0 {
            return Ok(Rational::from(1));
        }
        let depth = self.cf.depth();
        let nu = n as usize;
        if self.truncation {
            if nu + 2 > depth {
                return Err(Error::InsufficientDepth {
                    index: nu,
                    needed: nu + 2,
                    depth,
                });
            }
            Ok(self.raw_eta(n))
        } else if nu <= depth {
            Ok(self.raw_eta(n))
        } else {
            Ok(Rational::new())
        }
    }

    pub fn expansion(&self) -> &ContinuedFraction {
        &self.cf
    }

    /// Exact `mu(union_{1 <= n < k} T^{-n} B_r)`.
    pub fn tail_measure(&self, r: &Rational, k: &Integer) -> Result<Rational> {
        check_radius(r)?;
        if *k < 1 {
            return Err(Error::Precondition("tail measure needs K >= 1".into()));
        }
        if self.truncation {
            self.cf.check_horizon(k, r)?;
        }
        let n = Integer::from(k - 1u32);
        Ok(orbit_arc_union_measure(self, &n, &Rational::from(r * 2u32)))
    }
}

/// Measure of the union of `n` arcs of length `len` starting at
/// `x, x + alpha, ..., x + (n-1) alpha`, by the three-distance theorem.
/// Gaps are handled as integers scaled by the period `q_N`.
fn orbit_arc_union_measure(e: &NormTable, n: &Integer, len: &Rational) -> Rational {
    if *n <= 0 {
        return Rational::new();
    }
    let depth = e.cf.depth() as isize;
    let period = e.q(depth);
    if *n >= period {
        let gap = Rational::from((Integer::from(1), period.clone()));
        let g = if gap < *len { gap } else { len.clone() };
        return g * period;
    }
    // q_k + q_{k-1} <= n < q_{k+1} + q_k
    let mut k = 0isize;
    while k < depth && (e.q(k + 1) + e.q(k)) <= *n {
        k += 1;
    }
    let qk = e.q(k);
    let rest = n - e.q(k - 1);
    let (m, s) = rest.div_rem_floor(qk.clone());
    let ek = e.scaled_eta(k);
    let ekm1 = e.scaled_eta(k - 1);
    let g1 = ek.clone();
    let g2 = ekm1 - Integer::from(&ek * &m);
    let g3 = Integer::from(&g2 + &ek);
    let c1 = Integer::from(n - &qk);
    let c3 = Integer::from(&qk - &s);
    let scaled_len = Rational::from(len * &period);
    let mut whole = Integer::new();
    let mut capped = Integer::new();
    for (g, c) in [(g1, c1), (g2, s), (g3, c3)] {
        if c == 0 {
            continue;
        }
        if g < scaled_len {
            whole += g * c;
        } else {
            capped += c;
        }
    }
    (scaled_len * capped + whole) / Rational::from(period)
}

/// Exact `mu(union_{1 <= n < k} T^{-n} B_r(x0))`.
pub fn tail_measure(alpha: &Angle, x0: &Rational, r: &Rational, k: &Integer) -> Result<Rational> {
    let _ = x0;
    NormTable::new(alpha).tail_measure(r, k)
}

fn eta_of(alpha: &Angle, n: isize) -> Result<Rational> {
    NormTable::new(alpha).eta(n)
}

/// Index `n` with `||q_n alpha|| < 2r <= ||q_{n-1} alpha||`.
pub fn locate_window(alpha: &Angle, r: &Rational) -> Result<usize> {
    check_radius(r)?;
    let two_r = Rational::from(r * 2u32);
    let table = NormTable::new(alpha);
    let mut n = 0isize;
    loop {
        let eta = table.eta(n).map_err(|_| {
            Error::Window(format!(
                "2r = {} lies below every window available at this depth",
                fmt_rational(&two_r)
            ))
        })?;
        if eta < two_r {
            return Ok(n as usize);
        }
        n += 1;
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LevelMeasure {
    pub k: u64,
    #[serde(with = "rational_str")]
    pub measure: Rational,
    /// `= 2r` for `k <= q_n`, `<= ||q_n alpha||` beyond.
    pub holds: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct LevelSetReport {
    pub window: usize,
    #[serde(with = "crate::io::dec_integer")]
    pub q_n: Integer,
    #[serde(with = "rational_str")]
    pub eta_n: Rational,
    #[serde(with = "rational_str")]
    pub radius: Rational,
    pub levels: Vec<LevelMeasure>,
    /// Measure of `{tau_r > k_max}` (including never hitting).
    #[serde(with = "rational_str")]
    pub remainder: Rational,
    pub all_hold: bool,
}

/// Level-set measures `k = 1..=k_max` checked against their window predictions.
pub fn level_set_report(alpha: &Angle, x0: &Rational, r: &Rational, k_max: u64) -> Result<LevelSetReport> {
    let n = locate_window(alpha, r)?;
    let eta_n = eta_of(alpha, n as isize)?;
    let q_n = expansion(alpha).q(n).clone();
    let sets = level_sets(alpha, x0, r, k_max)?;
    let two_r = Rational::from(r * 2u32);
    let mut covered = Rational::new();
    let levels: Vec<LevelMeasure> = sets
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let k = i as u64 + 1;
            let m = s.total_measure().clone();
            covered += &m;
            let holds = if q_n >= k { m == two_r } else { m <= eta_n };
            LevelMeasure { k, measure: m, holds }
        })
        .collect();
    Ok(LevelSetReport {
        window: n,
        q_n,
        eta_n,
        radius: r.clone(),
        all_hold: levels.iter().all(|l| l.holds),
        levels,
        remainder: Rational::from(1) - covered,
    })
}

/// Parameters of one application of the key lemma, window checked at construction.
#[derive(Clone, Debug, Serialize)]
pub struct KeyLemmaQuery {
    pub beta: f64,
    #[serde(with = "rational_str")]
    pub m: Rational,
    #[serde(with = "rational_str")]
    pub n_: Rational,
    pub index: usize,
    #[serde(with = "rational_str")]
    pub r: Rational,
}

fn eta_root(eta: &Rational, beta: f64) -> Interval {
    let inv = Interval::from_f64(1.0).div_pos(&Interval::from_f64(beta));
    Interval::from_rational(eta).pow_pos(&inv)
}

impl KeyLemmaQuery {
    /// Checks `||q_n a|| < M ||q_n a||^(1/beta) <= 2r <= ||q_{n-1} a|| / N < ||q_{n-1} a||`
    /// with certified arithmetic.
    pub fn new(alpha: &Angle, beta: f64, m: Rational, n_: Rational, index: usize, r: Rational) -> Result<Self> {
        KeyLemmaQuery::new_with(&NormTable::new(alpha), beta, m, n_, index, r)
    }

    pub fn new_with(table: &NormTable, beta: f64, m: Rational, n_: Rational, index: usize, r: Rational) -> Result<Self> {
        if !(beta.is_finite() && beta >= 1.0) || m < 1 || n_ < 1 {
            return Err(Error::Precondition("key lemma needs beta, M, N >= 1".into()));
        }
        if index == 0 {
            return Err(Error::Precondition("key lemma window index must be >= 1".into()));
        }
        check_radius(&r)?;
        let eta = table.eta(index as isize)?;
        let eta_prev = table.eta(index as isize - 1)?;
        let two_r = Rational::from(&r * 2u32);
        if eta <= 0 {
            return Err(Error::Window(format!("||q_{index} alpha|| = 0")));
        }
        let lower = Interval::from_rational(&m).mul_pos(&eta_root(&eta, beta));
        let strict_low = Interval::from_rational(&eta).certainly_lt_interval(&lower);
        let ok = strict_low && lower.certainly_le(&two_r) && Rational::from(&two_r * &n_) <= eta_prev && n_ > 1;
        if !ok {
            return Err(Error::Window(format!(
                "2r = {} outside [M ||q_n a||^(1/beta), ||q_(n-1) a||/N] = [{:.6e}, {:.6e}] at n = {index}",
                fmt_rational(&two_r),
                lower.to_f64(),
                eta_prev.to_f64() / n_.to_f64()
            )));
        }
        Ok(KeyLemmaQuery {
            beta,
            m,
            n_,
            index,
            r,
        })
    }

    /// `1/N + 1/M^beta`, certified.
    pub fn bound(&self) -> Interval {
        let m_beta = Interval::from_rational(&self.m).pow_pos(&Interval::from_f64(self.beta));
        Interval::from_rational(&self.n_).recip_pos().add(&m_beta.recip_pos())
    }

    /// `K = ceil((2r)^(-beta))`, the least integer with `{tau < (2r)^-beta} = {tau < K}`.
    pub fn k_bound(&self) -> Result<Integer> {
        ceil_rational_pow(&Rational::from(&self.r * 2u32), -self.beta)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct KeyLemmaOutcome {
    pub query: KeyLemmaQuery,
    #[serde(with = "crate::io::dec_integer")]
    pub k: Integer,
    #[serde(with = "rational_str")]
    pub tail: Rational,
    /// Certified lower end of `1/N + 1/M^beta`.
    pub bound_lo: f64,
    /// Exact tail measure `<=` the certified lower end of the bound.
    pub holds: bool,
}

pub fn evaluate_key_lemma(alpha: &Angle, x0: &Rational, q: &KeyLemmaQuery) -> Result<KeyLemmaOutcome> {
    let k = q.k_bound()?;
    let tail = tail_measure(alpha, x0, &q.r, &k)?;
    let b = q.bound();
    let holds = *b.lo() >= tail;
    Ok(KeyLemmaOutcome {
        query: q.clone(),
        k,
        tail,
        bound_lo: b.lo().to_f64(),
        holds,
    })
}

/// Query with `2r` at the geometric middle of `[M ||q_n a||^(1/beta), ||q_{n-1} a|| / N]`,
/// rounded to a 53-bit float; `Window` if that interval is empty or underflows.
pub fn key_lemma_midpoint(table: &NormTable, beta: f64, m: Rational, n_: Rational, index: usize) -> Result<KeyLemmaQuery> {
    if !(beta.is_finite() && beta >= 1.0) || m < 1 || n_ < 1 || index == 0 {
        return Err(Error::Precondition("key lemma needs beta, M, N, n >= 1".into()));
    }
    let eta = table.eta(index as isize)?;
    let eta_prev = table.eta(index as isize - 1)?;
    if eta <= 0 {
        return Err(Error::Window(format!("||q_{index} alpha|| = 0")));
    }
    let ln_lo = ln_rational(&m) + ln_rational(&eta) / beta;
    let ln_hi = ln_rational(&eta_prev) - ln_rational(&n_);
    let mid = 0.5 * (ln_lo + ln_hi);
    if !(ln_lo < ln_hi) || mid < -700.0 {
        return Err(Error::Window(format!("empty or underflowing window at n = {index}")));
    }
    let r = Rational::from_f64(0.5 * mid.exp()).expect("finite");
    KeyLemmaQuery::new_with(table, beta, m, n_, index, r)
}

/// Rounds a positive interval's upper end up to a rational.
fn rational_up(x: &Interval) -> Rational {
    let f = Float::with_val_round(64, x.hi(), Round::Up).0;
    Rational::try_from(&f).expect("finite")
}

/// One interval `I_n` (unprimed) or `I'_n` (primed) of radii `2r`.
#[derive(Clone, Debug, Serialize)]
pub struct ScheduleWindow {
    pub primed: bool,
    pub n: usize,
    /// `M_n` (or `M'_n`) = n.
    pub m: u64,
    /// `N_n` (or `N'_n`), rounded up.
    #[serde(with = "rational_str")]
    pub n_: Rational,
    /// Endpoints for `2r`, certified enclosures as `f64`.
    pub lower: f64,
    pub upper: f64,
    /// Ratio of endpoints (`upper / lower`).
    pub coverage_ratio: f64,
    pub nonempty: bool,
    /// `N <= 1`: the lemma's bound is vacuous.
    pub degenerate: bool,
    /// Indices `i` with `2 e^(-i)` (rationalized) inside the window.
    pub radii: Vec<u32>,
    #[serde(skip)]
    lower_iv: Option<Interval>,
    #[serde(skip)]
    upper_iv: Option<Interval>,
}

fn pair_angles(pair: &IntertwinedPair) -> (Angle, Angle) {
    (
        Angle::truncation(pair.alpha.clone()),
        Angle::truncation(pair.alpha_prime.clone()),
    )
}

fn radius_indices(lower: &Interval, upper: &Interval) -> Vec<u32> {
    // 2 e^-i in [lower, upper]  <=>  i in [ln(2/upper), ln(2/lower)].
    let two = Interval::from_f64(2.0);
    let i_lo = two.div_pos(upper).ln_pos().to_f64().floor() - 1.0;
    let i_hi = two.div_pos(lower).ln_pos().to_f64().ceil() + 1.0;
    let i_lo = i_lo.max(1.0) as u32;
    if !(i_hi.is_finite()) || i_hi < i_lo as f64 {
        return Vec::new();
    }
    let i_hi = i_hi.min(u32::MAX as f64) as u32;
    (i_lo..=i_hi)
        .filter(|&i| {
            let two_r = exp_neg_rational(i) * 2u32;
            lower.certainly_le(&two_r) && upper.certainly_ge(&two_r)
        })
        .collect()
}

/// The interleaved windows `I_n = [L_n, L'_{n-1}]`, `I'_n = [L'_n, L_n]` with
/// `L_n = n ||q_n a||^(1/beta)`, `L'_n = n ||q'_n a'||^(1/beta)`, in order of
/// decreasing radius, for every level whose norms are available.
pub fn window_schedule(pair: &IntertwinedPair, beta: f64) -> Result<Vec<ScheduleWindow>> {
    if !(beta >= 1.0 && beta < pair.gamma) {
        return Err(Error::Precondition(format!(
            "beta must satisfy 1 <= beta < gamma = {}, got {beta}",
            pair.gamma
        )));
    }
    let (a, ap) = pair_angles(pair);
    let l_of = |angle: &Angle, n: usize| -> Option<(Interval, Rational)> {
        let eta = eta_of(angle, n as isize).ok()?;
        (eta > 0).then(|| (Interval::from_f64(n as f64).mul_pos(&eta_root(&eta, beta)), eta))
    };
    let mut out = Vec::new();
    let mut n = 2usize;
    loop {
        let mut any = false;
        // I_n: lower L_n, upper L'_{n-1} = ||q_{n-1} a|| / N_n.
        if let (Some((ln, _)), Some((lpm, _)), Ok(eta_prev)) =
            (l_of(&a, n), l_of(&ap, n - 1), eta_of(&a, n as isize - 1))
        {
            any = true;
            let n_iv = Interval::from_rational(&eta_prev).div_pos(&lpm);
            out.push(make_window(false, n, ln, lpm, &n_iv));
        }
        // I'_n: lower L'_n, upper L_n = ||q'_{n-1} a'|| / N'_n.
        if let (Some((lpn, _)), Some((ln, _)), Ok(eta_prev)) =
            (l_of(&ap, n), l_of(&a, n), eta_of(&ap, n as isize - 1))
        {
            any = true;
            let n_iv = Interval::from_rational(&eta_prev).div_pos(&ln);
            out.push(make_window(true, n, lpn, ln, &n_iv));
        }
        if !any {
            break;
        }
        n += 1;
    }
    Ok(out)
}

fn make_window(primed: bool, n: usize, lower: Interval, upper: Interval, n_iv: &Interval) -> ScheduleWindow {
    let n_up = rational_up(n_iv);
    let nonempty = lower.certainly_le_interval(&upper);
    let degenerate = !n_iv.certainly_gt(&Rational::from(1));
    let ratio = upper.div_pos(&lower);
    let radii = if nonempty { radius_indices(&lower, &upper) } else { Vec::new() };
    ScheduleWindow {
        primed,
        n,
        m: n as u64,
        n_: n_up,
        lower: lower.to_f64(),
        upper: upper.to_f64(),
        coverage_ratio: ratio.to_f64(),
        nonempty,
        degenerate,
        radii,
        lower_iv: Some(lower),
        upper_iv: Some(upper),
    }
}

impl ScheduleWindow {
    /// Key-lemma queries for every radius in the window, with
    /// `M = M_n r_i / r_max` and `N = N_n r_min / r_i` (the `e^j` scaling).
    pub fn queries(&self, pair: &IntertwinedPair, beta: f64) -> Vec<Result<KeyLemmaQuery>> {
        let (a, ap) = pair_angles(pair);
        let angle = if self.primed { ap } else { a };
        let table = NormTable::new(&angle);
        let Some((&i_first, &i_last)) = self.radii.first().zip(self.radii.last()) else {
            return Vec::new();
        };
        let r_max = exp_neg_rational(i_first);
        let r_min = exp_neg_rational(i_last);
        let m_n = Rational::from(self.m);
        self.radii
            .iter()
            .map(|&i| {
                let r = exp_neg_rational(i);
                let m = Rational::from(&m_n * &r) / &r_min;
                let m = if m < 1 { Rational::from(1) } else { m };
                let nn = Rational::from(&self.n_ * &r_max) / &r;
                KeyLemmaQuery::new_with(&table, beta, m, nn, self.n, r)
            })
            .collect()
    }

    pub fn lower_interval(&self) -> Option<&Interval> {
        self.lower_iv.as_ref()
    }

    pub fn upper_interval(&self) -> Option<&Interval> {
        self.upper_iv.as_ref()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RadiusMeasure {
    pub i: u32,
    #[serde(with = "rational_str")]
    pub r: Rational,
    #[serde(with = "crate::io::dec_integer")]
    pub k: Integer,
    /// `mu(A_i)` for the window's own coordinate.
    #[serde(with = "rational_str")]
    pub own: Rational,
    /// `mu(A'_i)` for the other coordinate, when its horizon allows.
    #[serde(with = "crate::io::option_rational_str")]
    pub other: Option<Rational>,
    /// `min(own, other)`, an upper bound for the torus set.
    #[serde(with = "rational_str")]
    pub bound: Rational,
    /// Certified lower end of `1/N + 1/M^beta` for this radius, if the window check passed.
    pub lemma_bound: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct WindowSum {
    pub window: ScheduleWindow,
    pub radii: Vec<RadiusMeasure>,
    #[serde(with = "rational_str")]
    pub sum: Rational,
    /// `(1/N)/(1 - e^-1) + (1/M^beta)/(1 - e^-beta)`, certified lower end.
    pub series_bound_beta: f64,
    /// Same with `gamma` in place of `beta`, as displayed in the proof.
    pub series_bound_gamma: f64,
    pub excluded: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct BorelCantelliReport {
    pub beta: f64,
    pub gamma: f64,
    pub windows: Vec<WindowSum>,
    /// Running sums of the exact window sums over non-excluded windows.
    pub partial_sums: Vec<f64>,
    pub partial_bounds_beta: Vec<f64>,
    pub partial_bounds_gamma: Vec<f64>,
    /// Every partial sum below the corresponding partial series bound (beta form).
    pub within_beta_bound: bool,
    pub within_gamma_bound: bool,
}

fn series_bound(n_: &Rational, m: u64, e: f64) -> f64 {
    let one = Interval::from_f64(1.0);
    let e_iv = Interval::e();
    let geo1 = one.sub(&e_iv.recip_pos()).recip_pos();
    let exp_iv = Interval::from_f64(e);
    let geo2 = one.sub(&e_iv.pow_pos(&exp_iv).recip_pos()).recip_pos();
    let t1 = Interval::from_rational(n_).recip_pos().mul_pos(&geo1);
    let t2 = Interval::from_f64(m as f64).pow_pos(&exp_iv).recip_pos().mul_pos(&geo2);
    t1.add(&t2).lo().to_f64()
}

/// Exact per-radius measures over the first `levels` window levels.
pub fn borel_cantelli_report(pair: &IntertwinedPair, beta: f64, levels: usize) -> Result<BorelCantelliReport> {
    let windows = window_schedule(pair, beta)?;
    let (a, ap) = pair_angles(pair);
    let mut out = Vec::new();
    for w in windows.into_iter().filter(|w| w.n < 2 + levels) {
        let (own_angle, other_angle) = if w.primed { (&ap, &a) } else { (&a, &ap) };
        let (own_t, other_t) = (NormTable::new(own_angle), NormTable::new(other_angle));
        let queries = w.queries(pair, beta);
        let mut radii = Vec::new();
        let mut sum = Rational::new();
        for (idx, &i) in w.radii.iter().enumerate() {
            let r = exp_neg_rational(i);
            let k = ceil_rational_pow(&Rational::from(&r * 2u32), -beta)?;
            let own = own_t.tail_measure(&r, &k)?;
            let other = other_t.tail_measure(&r, &k).ok();
            let bound = match &other {
                Some(o) if *o < own => o.clone(),
                _ => own.clone(),
            };
            sum += &bound;
            let lemma_bound = queries[idx].as_ref().ok().map(|q| q.bound().lo().to_f64());
            radii.push(RadiusMeasure {
                i,
                r,
                k,
                own,
                other,
                bound,
                lemma_bound,
            });
        }
        let excluded = w.degenerate || !w.nonempty;
        let series_bound_beta = series_bound(&w.n_, w.m, beta);
        let series_bound_gamma = series_bound(&w.n_, w.m, pair.gamma);
        out.push(WindowSum {
            window: w,
            radii,
            sum,
            series_bound_beta,
            series_bound_gamma,
            excluded,
        });
    }
    let mut partial_sums = Vec::new();
    let mut partial_bounds_beta = Vec::new();
    let mut partial_bounds_gamma = Vec::new();
    let (mut s, mut bb, mut bg) = (Rational::new(), 0.0, 0.0);
    for w in out.iter().filter(|w| !w.excluded) {
        s += &w.sum;
        bb += w.series_bound_beta;
        bg += w.series_bound_gamma;
        partial_sums.push(s.to_f64());
        partial_bounds_beta.push(bb);
        partial_bounds_gamma.push(bg);
    }
    let within = |b: &[f64]| partial_sums.iter().zip(b).all(|(s, b)| s <= b);
    Ok(BorelCantelliReport {
        beta,
        gamma: pair.gamma,
        within_beta_bound: within(&partial_bounds_beta),
        within_gamma_bound: within(&partial_bounds_gamma),
        windows: out,
        partial_sums,
        partial_bounds_beta,
        partial_bounds_gamma,
    })
}

/// Lebesgue measure `(2r)^d` of a sup-metric ball in `T^d`, `0 < r < 1/2`.
pub fn ball_measure(d: usize, r: &Rational) -> Rational {
    let two_r = Rational::from(r * 2u32);
    Rational::from((&two_r).pow(d as u32))
}

/// `log mu(B_r) / log r` for each radius of the schedule.
pub fn local_dimension_probe(x0: &crate::angle::TorusPoint, radii: &[Rational]) -> Result<Vec<f64>> {
    local_dimension_probe_dim(x0.dim(), radii)
}

/// Circle (`d = 1`) and torus variants share the closed form.
pub fn local_dimension_probe_dim(d: usize, radii: &[Rational]) -> Result<Vec<f64>> {
    if !(1..=3).contains(&d) {
        return Err(Error::Unsupported(format!("dimension {d}")));
    }
    radii
        .iter()
        .map(|r| {
            check_radius(r)?;
            let mu = Interval::from_rational(&ball_measure(d, r)).ln_pos();
            let lr = Interval::from_rational(r).ln_pos();
            Ok(mu.to_f64() / lr.to_f64())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from((n, d))
    }

    #[test]
    fn arc_wraps_and_splits() {
        let a = ArcUnion::arc(&q(9, 10), &q(1, 5));
        assert_eq!(a.arcs(), &[(q(0, 1), q(1, 10)), (q(9, 10), q(1, 1))]);
        assert_eq!(a.total_measure(), &q(1, 5));
        assert!(a.contains(&q(0, 1)));
        assert!(!a.contains(&q(1, 10)));
        assert_eq!(a.complement().total_measure(), &q(4, 5));
    }

    #[test]
    fn union_intersection_difference() {
        let a = ArcUnion::arc(&q(0, 1), &q(1, 2));
        let b = ArcUnion::arc(&q(1, 4), &q(1, 2));
        assert_eq!(a.union(&b).total_measure(), &q(3, 4));
        assert_eq!(a.intersection(&b).total_measure(), &q(1, 4));
        assert_eq!(a.difference(&b).arcs(), &[(q(0, 1), q(1, 4))]);
        assert_eq!(a.union(&b.shift(&q(1, 2))).total_measure(), &q(3, 4));
        assert_eq!(a.union(&b.shift(&q(1, 4))), ArcUnion::full());
    }

    #[test]
    fn quarter_rotation_partitions_circle() {
        let alpha = Angle::rational(q(1, 4));
        let sets = level_sets(&alpha, &q(0, 1), &q(1, 10), 6).unwrap();
        for k in 0..4 {
            assert_eq!(sets[k].total_measure(), &q(1, 5));
        }
        assert!(sets[4].is_empty() && sets[5].is_empty());
    }

    #[test]
    fn tail_measure_small_k() {
        let alpha = Angle::truncation(ContinuedFraction::golden(30));
        let r = q(1, 100);
        assert_eq!(tail_measure(&alpha, &q(0, 1), &r, &Integer::from(1)).unwrap(), 0);
        assert_eq!(tail_measure(&alpha, &q(0, 1), &r, &Integer::from(2)).unwrap(), q(1, 50));
    }

    #[test]
    fn tail_measure_matches_level_sets() {
        let alpha = Angle::truncation(ContinuedFraction::golden(30));
        let r = q(3, 200);
        let sets = level_sets(&alpha, &q(1, 3), &r, 150).unwrap();
        let mut acc = Rational::new();
        for k in 1..=150u64 {
            let t = tail_measure(&alpha, &q(1, 3), &r, &Integer::from(k)).unwrap();
            assert_eq!(t, acc, "K = {k}");
            acc += sets[k as usize - 1].total_measure();
        }
    }

    #[test]
    fn window_located_for_golden() {
        let cf = ContinuedFraction::golden(30);
        let alpha = Angle::truncation(cf.clone());
        let eta6 = cf.norm_q_alpha(6).unwrap();
        let eta5 = cf.norm_q_alpha(5).unwrap();
        let two_r = (eta6 + eta5) / 2u32;
        let r = two_r / 2u32;
        assert_eq!(locate_window(&alpha, &r).unwrap(), 6);
        let rep = level_set_report(&alpha, &q(0, 1), &r, 40).unwrap();
        assert!(rep.all_hold);
    }

    #[test]
    fn local_dimension_closed_forms() {
        let v = local_dimension_probe_dim(2, &[q(1, 8)]).unwrap();
        assert!((v[0] - 4.0 / 3.0).abs() < 1e-12);
        let r5 = exp_neg_rational(5);
        let v = local_dimension_probe_dim(3, &[r5]).unwrap();
        assert!((v[0] - 3.0).abs() < 0.15 * 3.0);
        assert_eq!(ball_measure(1, &q(1, 7)), q(2, 7));
    }
}
