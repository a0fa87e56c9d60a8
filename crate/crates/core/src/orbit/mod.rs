//! Exact orbits of circle rotations and torus translations: hitting times,
//! entry enumeration, recurrence and minimal-distance sequences.

pub mod lattice;

use crate::angle::{Angle, CirclePoint, TorusPoint};
use crate::error::{Error, Result};
use crate::io::{fmt_rational, rational_str};
use lattice::{centered, first_in_cyclic, modulo, Coord};
use rug::{Integer, Rational};
use serde::{Deserialize, Serialize};

/// First entrance of an orbit into a ball, or censoring at `horizon`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HittingRecord {
    #[serde(with = "rational_str")]
    pub radius: Rational,
    /// `None` when no time in `1..=horizon` enters the ball.
    pub tau: Option<u64>,
    pub horizon: u64,
}

impl HittingRecord {
    pub fn is_censored(&self) -> bool {
        self.tau.is_none()
    }
}

/// A translation of `T^d`, `d` in 1..=3, given by one angle per coordinate.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Translation {
    pub angles: Vec<Angle>,
}

impl Translation {
    pub fn circle(alpha: Angle) -> Self {
        Translation { angles: vec![alpha] }
    }

    pub fn torus2(alpha: Angle, alpha_prime: Angle) -> Self {
        Translation {
            angles: vec![alpha, alpha_prime],
        }
    }

    pub fn dim(&self) -> usize {
        self.angles.len()
    }

    pub fn check_horizon(&self, iterates: u64, r: &Rational) -> Result<()> {
        for a in &self.angles {
            a.check_horizon(iterates, r)?;
        }
        Ok(())
    }

    /// Largest horizon usable at radius `r`, at most `cap`.
    ///
    /// Truncations allow the largest `K` with `10 K < r q_N q_(N-1)`. When every
    /// angle is exact the joint period suffices: an orbit that has not entered
    /// the ball by then never will.
    pub fn max_horizon(&self, r: &Rational, cap: u64) -> u64 {
        let mut h = Integer::from(cap);
        let mut period = Integer::from(1);
        let mut all_exact = true;
        for a in &self.angles {
            if a.is_truncation() {
                all_exact = false;
                let cf = a.stored_expansion().expect("truncations carry an expansion");
                let n = cf.depth();
                if n == 0 {
                    return 0;
                }
                let avail = Rational::from(cf.q(n) * cf.q(n - 1)) * r / 10u32;
                let k = avail.ceil().into_numer_denom().0 - 1u32;
                if k < h {
                    h = k;
                }
            } else {
                period.lcm_mut(a.frac().denom());
            }
        }
        if all_exact && period < h {
            h = period;
        }
        if h < 0 {
            0
        } else {
            h.to_u64().unwrap_or(cap)
        }
    }

    /// `T^n x`, reduced to `[0, 1)^d`.
    pub fn apply(&self, x: &[Rational], n: &Integer) -> Result<Vec<Rational>> {
        if x.len() != self.dim() {
            return Err(Error::Precondition(format!(
                "point of dimension {} for a translation of dimension {}",
                x.len(),
                self.dim()
            )));
        }
        Ok(self
            .angles
            .iter()
            .zip(x)
            .map(|(a, xi)| {
                let y = Rational::from(a.frac() * n) + xi;
                let f = y.clone().floor();
                y - f
            })
            .collect())
    }

    /// Hitting time of the open sup-ball `B(x0, r)`.
    pub fn hit(&self, x: &[Rational], x0: &[Rational], r: &Rational, horizon: u64) -> Result<HittingRecord> {
        self.check_points(x, x0)?;
        match self.dim() {
            1 => hit_circle(
                &self.angles[0],
                &CirclePoint::new(x[0].clone())?,
                &CirclePoint::new(x0[0].clone())?,
                r,
                horizon,
            ),
            2 => hit_torus2(
                &self.angles[0],
                &self.angles[1],
                &TorusPoint::new(x.to_vec())?,
                &TorusPoint::new(x0.to_vec())?,
                r,
                horizon,
            ),
            d => Err(Error::Unsupported(format!("hitting times in dimension {d}"))),
        }
    }

    fn check_points(&self, x: &[Rational], x0: &[Rational]) -> Result<()> {
        if x.len() != self.dim() || x0.len() != self.dim() {
            return Err(Error::Precondition(format!(
                "points of dimension {}/{} for a translation of dimension {}",
                x.len(),
                x0.len(),
                self.dim()
            )));
        }
        Ok(())
    }

    /// Pointwise distances `dist(T^n x, x0)` for `n = 1..=n_max` (no horizon check).
    pub fn distances(&self, x: &[Rational], x0: &[Rational], n_max: u64) -> Result<Vec<Rational>> {
        self.check_points(x, x0)?;
        let lat: Vec<(Integer, Integer, Integer)> = self
            .angles
            .iter()
            .zip(x.iter().zip(x0))
            .map(|(a, (xi, x0i))| {
                let c = Coord::new(a.frac(), xi, x0i, &Rational::from((1, 4)));
                (c.d, c.a, c.b)
            })
            .collect();
        let mut pos: Vec<Integer> = lat.iter().map(|(_, _, b)| b.clone()).collect();
        let mut out = Vec::with_capacity(n_max as usize);
        for _ in 0..n_max {
            let mut best: Option<Rational> = None;
            for (i, (d, a, _)) in lat.iter().enumerate() {
                pos[i] += a;
                if pos[i] >= *d {
                    pos[i] -= d;
                }
                let c = centered(pos[i].clone(), d).abs();
                let v = Rational::from((c, d.clone()));
                best = Some(match best {
                    Some(b) if b >= v => b,
                    _ => v,
                });
            }
            out.push(best.expect("dimension >= 1"));
        }
        Ok(out)
    }

    /// `d_n = min_{1<=i<=n} dist(T^i x, x0)` for `n = 1..=n_max`.
    ///
    /// The horizon invariant is checked against the smallest positive distance reached.
    pub fn d_n_sequence(&self, x: &[Rational], x0: &[Rational], n_max: u64) -> Result<Vec<Rational>> {
        let mut d = self.distances(x, x0, n_max)?;
        for i in 1..d.len() {
            if d[i] > d[i - 1] {
                d[i] = d[i - 1].clone();
            }
        }
        let resolution = d.iter().rev().find(|v| **v > 0);
        if let Some(res) = resolution {
            self.check_horizon(n_max, res)?;
        }
        Ok(d)
    }
}

fn check_radius(r: &Rational) -> Result<()> {
    if *r <= 0 || *r >= Rational::from((1, 2)) {
        return Err(Error::DegenerateBall(fmt_rational(r)));
    }
    Ok(())
}

fn to_tau(n: Option<Integer>, horizon: u64) -> Option<u64> {
    n.filter(|v| *v <= horizon).map(|v| v.to_u64().expect("bounded by horizon"))
}

/// `tau_r(x, x0) = min { n >= 1 : ||x + n alpha - x0|| < r }`.
pub fn hit_circle(
    alpha: &Angle,
    x: &CirclePoint,
    x0: &CirclePoint,
    r: &Rational,
    horizon: u64,
) -> Result<HittingRecord> {
    check_radius(r)?;
    alpha.check_horizon(horizon, r)?;
    let c = Coord::new(alpha.frac(), x.value(), x0.value(), r);
    let n = c.first_from(&Integer::from(1));
    Ok(HittingRecord {
        radius: r.clone(),
        tau: to_tau(n, horizon),
        horizon,
    })
}

/// `tau_r(x, x)`.
pub fn recurrence_time(alpha: &Angle, x: &CirclePoint, r: &Rational, horizon: u64) -> Result<HittingRecord> {
    hit_circle(alpha, x, x, r, horizon)
}

/// First `count` entry times into `B(x0, r)` within `1..=horizon`.
pub fn next_entries(
    alpha: &Angle,
    x: &CirclePoint,
    x0: &CirclePoint,
    r: &Rational,
    count: usize,
    horizon: u64,
) -> Result<Vec<u64>> {
    check_radius(r)?;
    alpha.check_horizon(horizon, r)?;
    let mut out = Vec::with_capacity(count.min(1 << 16));
    if count == 0 {
        return Ok(out);
    }
    let c = Coord::new(alpha.frac(), x.value(), x0.value(), r);
    let Some(mut n) = c.first_from(&Integer::from(1)) else {
        return Ok(out);
    };
    let gaps = c.gap_candidates();
    let steps: Vec<Integer> = gaps.iter().map(|g| modulo(Integer::from(g * &c.a), &c.d)).collect();
    let mut p = c.pos(&n);
    while out.len() < count && n <= horizon {
        out.push(n.to_u64().expect("bounded by horizon"));
        let mut next = None;
        for (g, st) in gaps.iter().zip(&steps) {
            let q = modulo(Integer::from(&p + st), &c.d);
            if c.contains(&q) {
                next = Some((Integer::from(&n + g), q));
                break;
            }
        }
        let (nn, q) = match next {
            Some(v) => v,
            None => {
                let nn = c.first_from(&Integer::from(&n + 1u32)).expect("periodic orbit returns");
                let q = c.pos(&nn);
                (nn, q)
            }
        };
        debug_assert_eq!(Some(&nn), c.first_from(&Integer::from(&n + 1u32)).as_ref());
        n = nn;
        p = q;
    }
    Ok(out)
}

/// Enumerates the entries of one coordinate as strands `n, n+T, n+2T, ...`
/// whose positions drift by a fixed displacement, and tests the other
/// coordinate along a whole strand with one modular solve.
struct StrandWalker<'a> {
    me: &'a Coord,
    other: &'a Coord,
    step: Option<(Integer, Integer)>,
    other_step: Integer,
    sub: Option<(Integer, Integer)>,
    cursor: Integer,
    in_tail: bool,
}

impl<'a> StrandWalker<'a> {
    fn new(me: &'a Coord, other: &'a Coord, horizon: u64) -> Self {
        let h = Integer::from(horizon);
        let mut best_cost = Integer::from(&me.len * &h);
        let mut step = None;
        for (q, delta) in me.convergent_steps() {
            let ad = delta.clone().abs();
            if ad >= me.len {
                continue;
            }
            let cost = Integer::from(&me.len * &q) + Integer::from(&ad * &h);
            if cost < best_cost {
                best_cost = cost;
                step = Some((q, delta));
            }
        }
        let sub = step.as_ref().and_then(|(_, delta)| {
            if *delta > 0 {
                Some((me.s.clone(), delta.clone()))
            } else if *delta < 0 {
                let ad = Integer::from(delta.abs_ref());
                let s = modulo(Integer::from(&me.s + &me.len) - &ad, &me.d);
                Some((s, ad))
            } else {
                None
            }
        });
        let other_step = match &step {
            Some((t, _)) => modulo(Integer::from(t * &other.a), &other.d),
            None => Integer::new(),
        };
        StrandWalker {
            me,
            other,
            step,
            other_step,
            sub,
            cursor: Integer::from(1),
            in_tail: false,
        }
    }

    /// Next strand start `<= bound`, with the strand length (`None` = unbounded).
    fn next_start(&mut self, bound: &Integer) -> Option<(Integer, Option<Integer>)> {
        let n = match &self.step {
            None => self.me.first_from(&self.cursor)?,
            Some((t, _)) => {
                let mut found = None;
                if !self.in_tail {
                    match self.me.first_from(&self.cursor) {
                        Some(n) if n <= *t => found = Some(n),
                        _ => {
                            self.in_tail = true;
                            self.cursor = Integer::from(t + 1u32);
                        }
                    }
                }
                match found {
                    Some(n) => n,
                    None => {
                        let (s, len) = self.sub.as_ref()?;
                        if self.cursor > *bound {
                            return None;
                        }
                        self.me.first_from_in(&self.cursor, s, len)?
                    }
                }
            }
        };
        if n > *bound {
            return None;
        }
        self.cursor = Integer::from(&n + 1u32);
        let len = match &self.step {
            None => Some(Integer::from(1)),
            Some((_, delta)) => {
                let u = modulo(Integer::from(&self.me.pos(&n) - &self.me.s), &self.me.d);
                if *delta > 0 {
                    Some((Integer::from(&self.me.len - 1u32) - u) / delta + 1u32)
                } else if *delta < 0 {
                    Some(u / Integer::from(delta.abs_ref()) + 1u32)
                } else {
                    None
                }
            }
        };
        Some((n, len))
    }

    /// Earliest time on the strand starting at `n` where the other coordinate is inside.
    fn check(&self, n: &Integer, len: &Option<Integer>) -> Option<Integer> {
        let b = self.other.pos(n);
        match &self.step {
            None => self.other.contains(&b).then(|| n.clone()),
            Some((t, _)) => {
                let j = first_in_cyclic(
                    &self.other_step,
                    &b,
                    &self.other.d,
                    &self.other.s,
                    &self.other.len,
                    &Integer::new(),
                )?;
                if let Some(l) = len {
                    if j >= *l {
                        return None;
                    }
                }
                Some(Integer::from(&j * t) + n)
            }
        }
    }
}

/// Hitting time of the sup-ball on `T^2` under translation by `(alpha, alpha')`.
///
/// Both coordinates are enumerated as strands in lockstep; the first side to
/// exhaust its strands below the best joint time found certifies the minimum.
pub fn hit_torus2(
    alpha: &Angle,
    alpha_prime: &Angle,
    x: &TorusPoint,
    x0: &TorusPoint,
    r: &Rational,
    horizon: u64,
) -> Result<HittingRecord> {
    check_radius(r)?;
    if x.dim() != 2 || x0.dim() != 2 {
        return Err(Error::Precondition("hit_torus2 needs 2-dimensional points".into()));
    }
    alpha.check_horizon(horizon, r)?;
    alpha_prime.check_horizon(horizon, r)?;
    let c1 = Coord::new(alpha.frac(), &x.coords()[0], &x0.coords()[0], r);
    let c2 = Coord::new(alpha_prime.frac(), &x.coords()[1], &x0.coords()[1], r);
    let mut walkers = [StrandWalker::new(&c1, &c2, horizon), StrandWalker::new(&c2, &c1, horizon)];
    let h = Integer::from(horizon);
    let mut best: Option<Integer> = None;
    'race: loop {
        for w in walkers.iter_mut() {
            let bound = match &best {
                Some(b) => Integer::from(b - 1u32),
                None => h.clone(),
            };
            match w.next_start(&bound) {
                None => break 'race,
                Some((n, len)) => {
                    if let Some(t) = w.check(&n, &len) {
                        if t <= bound {
                            best = Some(t);
                        }
                    }
                }
            }
        }
    }
    let tau = to_tau(best, horizon);
    #[cfg(debug_assertions)]
    {
        let t1 = c1.first_from(&Integer::from(1));
        let t2 = c2.first_from(&Integer::from(1));
        if let Some(t) = tau {
            for ti in [t1, t2].into_iter().flatten() {
                debug_assert!(t >= ti, "torus time below a circle factor time");
            }
        }
    }
    Ok(HittingRecord {
        radius: r.clone(),
        tau,
        horizon,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cf::ContinuedFraction;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from((n, d))
    }

    fn cp(n: i64, d: i64) -> CirclePoint {
        CirclePoint::new(q(n, d)).unwrap()
    }

    #[test]
    fn quarter_rotation_examples() {
        let a = Angle::exact(ContinuedFraction::from_u64(0, &[4]).unwrap());
        let rec = hit_circle(&a, &cp(0, 1), &cp(1, 2), &q(1, 10), 100).unwrap();
        assert_eq!(rec.tau, Some(2));
        assert_eq!(next_entries(&a, &cp(0, 1), &cp(1, 2), &q(1, 10), 3, 100).unwrap(), vec![2, 6, 10]);
        assert!(next_entries(&a, &cp(0, 1), &cp(1, 2), &q(1, 10), 0, 100).unwrap().is_empty());
        assert_eq!(recurrence_time(&a, &cp(1, 3), &q(1, 10), 100).unwrap().tau, Some(4));
    }

    #[test]
    fn near_full_ball_hits_immediately() {
        let a = Angle::truncation(ContinuedFraction::golden(30));
        let rec = hit_circle(&a, &cp(0, 1), &cp(1, 2), &q(49, 100), 10).unwrap();
        assert_eq!(rec.tau, Some(1));
    }

    #[test]
    fn radius_and_horizon_errors() {
        let a = Angle::truncation(ContinuedFraction::golden(10));
        assert!(matches!(
            hit_circle(&a, &cp(0, 1), &cp(1, 2), &q(1, 2), 10),
            Err(Error::DegenerateBall(_))
        ));
        assert!(matches!(
            hit_circle(&a, &cp(0, 1), &cp(1, 2), &q(1, 20), 1_000_000),
            Err(Error::Horizon { .. })
        ));
    }

    #[test]
    fn rational_torus_examples() {
        let a = Angle::rational(q(1, 4));
        let b = Angle::rational(q(1, 6));
        let x = TorusPoint::new(vec![q(0, 1), q(0, 1)]).unwrap();
        let y = TorusPoint::new(vec![q(1, 2), q(1, 2)]).unwrap();
        assert_eq!(hit_torus2(&a, &b, &x, &y, &q(1, 10), 10_000).unwrap().tau, None);
        let y = TorusPoint::new(vec![q(1, 2), q(1, 3)]).unwrap();
        assert_eq!(hit_torus2(&a, &b, &x, &y, &q(1, 10), 10_000).unwrap().tau, Some(2));
    }

    #[test]
    fn d_n_for_quarter_rotation() {
        let t = Translation::circle(Angle::rational(q(1, 4)));
        let d = t.d_n_sequence(&[q(0, 1)], &[q(1, 2)], 5).unwrap();
        assert_eq!(d, vec![q(1, 4), q(0, 1), q(0, 1), q(0, 1), q(0, 1)]);
    }
}
