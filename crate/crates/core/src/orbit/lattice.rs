//! Integer lattice model of a rotation and the modular-interval solver.
//!
//! A rotation of rational angle `A/D` started at `B/D` (relative to the target
//! centre) visits residues `(n A + B) mod D`. The open ball of radius `r`
//! corresponds to the cyclic residue interval `[-W, W]` with `W = ceil(r D) - 1`.

use crate::cf::ContinuedFraction;
use rug::{Integer, Rational};

fn ceil_div(n: &Integer, d: &Integer) -> Integer {
    n.clone().div_rem_ceil(d.clone()).0
}

/// Minimal `x >= 0` with `L <= (A x) mod M <= R`, for `1 <= L <= R < M`.
fn min_in_range(m: Integer, a: Integer, l: Integer, r: Integer) -> Option<Integer> {
    // Each frame stores (L, M, A) after reflection; the answer of the inner
    // problem y lifts to x = ceil((L + M y) / A).
    let mut frames: Vec<(Integer, Integer, Integer)> = Vec::new();
    let (mut m, mut a, mut l, mut r) = (m, a, l, r);
    a %= &m;
    let mut y = loop {
        if l == 0 {
            break Integer::new();
        }
        if a == 0 {
            return None;
        }
        if Integer::from(&a * 2u32) > m {
            a = Integer::from(&m - &a);
            let nl = Integer::from(&m - &r);
            let nr = Integer::from(&m - &l);
            l = nl;
            r = nr;
        }
        let t = ceil_div(&l, &a);
        if Integer::from(&t * &a) <= r {
            break t;
        }
        let mm = Integer::from(&m % &a);
        let na = if mm == 0 { Integer::new() } else { Integer::from(&a - &mm) };
        let nl = Integer::from(&l % &a);
        let nr = Integer::from(&r % &a);
        let nm = a.clone();
        frames.push((l, m, a));
        m = nm;
        a = na;
        l = nl;
        r = nr;
    };
    while let Some((l, m, a)) = frames.pop() {
        let num = Integer::from(&m * &y) + l;
        y = ceil_div(&num, &a);
    }
    Some(y)
}

/// Minimal `y >= y_min` with `(a y + b) mod m` in the cyclic interval
/// `[s, s + len)`; `len` may equal `m` (full circle).
pub fn first_in_cyclic(
    a: &Integer,
    b: &Integer,
    m: &Integer,
    s: &Integer,
    len: &Integer,
    y_min: &Integer,
) -> Option<Integer> {
    if *len <= 0 {
        return None;
    }
    if len >= m {
        return Some(y_min.clone());
    }
    let start = Integer::from(a * y_min) + b;
    let start = start.modulo(m);
    let l = Integer::from(s - &start).modulo(m);
    let end = Integer::from(&l + len);
    if l == 0 || end > *m {
        return Some(y_min.clone());
    }
    let r = end - 1u32;
    let a = a.modulo_ref(m);
    min_in_range(m.clone(), a, l, r).map(|y| y + y_min)
}

/// One coordinate of a rotation orbit against one target ball.
#[derive(Clone, Debug)]
pub struct Coord {
    pub d: Integer,
    pub a: Integer,
    pub b: Integer,
    pub s: Integer,
    pub len: Integer,
}

trait ModuloExt {
    fn modulo(self, m: &Integer) -> Integer;
    fn modulo_ref(&self, m: &Integer) -> Integer;
}

impl ModuloExt for Integer {
    fn modulo(self, m: &Integer) -> Integer {
        let (_, r) = self.div_rem_euc(m.clone());
        r
    }
    fn modulo_ref(&self, m: &Integer) -> Integer {
        self.clone().modulo(m)
    }
}

/// `x mod m` in `[0, m)`.
pub fn modulo(x: Integer, m: &Integer) -> Integer {
    x.modulo(m)
}

/// Centered residue of `x mod m` in `(-m/2, m/2]`.
pub fn centered(x: Integer, m: &Integer) -> Integer {
    let r = x.modulo(m);
    if Integer::from(&r * 2u32) > *m {
        r - m
    } else {
        r
    }
}

impl Coord {
    /// Lattice model of `x + n alpha` against the open ball `B(x0, r)`, `0 < r < 1/2`.
    pub fn new(alpha: &Rational, x: &Rational, x0: &Rational, r: &Rational) -> Coord {
        let d = Integer::from(alpha.denom().lcm_ref(x.denom()));
        let d = d.lcm(x0.denom());
        let scale = |q: &Rational| -> Integer {
            let v = Rational::from(q * &d);
            debug_assert!(*v.denom() == 1);
            v.into_numer_denom().0
        };
        let a = scale(alpha).modulo(&d);
        let b = (scale(x) - scale(x0)).modulo(&d);
        let w = Rational::from(r * &d).ceil().into_numer_denom().0 - 1u32;
        let len = Integer::from(&w * 2u32) + 1u32;
        let len = if len > d { d.clone() } else { len };
        let s = (-w).modulo(&d);
        Coord { d, a, b, s, len }
    }

    /// Residue at time `n`.
    pub fn pos(&self, n: &Integer) -> Integer {
        (Integer::from(&self.a * n) + &self.b).modulo(&self.d)
    }

    pub fn contains(&self, p: &Integer) -> bool {
        Integer::from(p - &self.s).modulo(&self.d) < self.len
    }

    /// First time `>= n_min` inside the target interval.
    pub fn first_from(&self, n_min: &Integer) -> Option<Integer> {
        first_in_cyclic(&self.a, &self.b, &self.d, &self.s, &self.len, n_min)
    }

    /// First time `>= n_min` inside the sub-interval `[s', s' + len')`.
    pub fn first_from_in(&self, n_min: &Integer, s: &Integer, len: &Integer) -> Option<Integer> {
        first_in_cyclic(&self.a, &self.b, &self.d, s, len, n_min)
    }

    /// Exact period `D / gcd(A, D)`.
    pub fn period(&self) -> Integer {
        let g = Integer::from(self.a.gcd_ref(&self.d));
        Integer::from(&self.d / &g)
    }

    /// Candidate return times `{t+, t-, t+ + t-, P}` of the three-gap structure, ascending.
    pub fn gap_candidates(&self) -> Vec<Integer> {
        let p = self.period();
        let mut out = vec![p.clone()];
        if self.len >= 2 && self.len < self.d {
            let one = Integer::from(1);
            let inner = Integer::from(&self.len - 1u32);
            let zero = Integer::new();
            let tp = first_in_cyclic(&self.a, &zero, &self.d, &one, &inner, &one);
            let lo = Integer::from(&self.d - &inner);
            let tm = first_in_cyclic(&self.a, &zero, &self.d, &lo, &inner, &one);
            if let Some(t) = &tp {
                out.push(t.clone());
            }
            if let Some(t) = &tm {
                out.push(t.clone());
            }
            if let (Some(a), Some(b)) = (&tp, &tm) {
                out.push(Integer::from(a + b));
            }
        } else if self.len >= self.d {
            out.push(Integer::from(1));
        }
        out.retain(|t| *t <= p);
        out.sort();
        out.dedup();
        out
    }

    /// Denominators of the canonical expansion of `A/D` with their signed displacement.
    pub fn convergent_steps(&self) -> Vec<(Integer, Integer)> {
        let cf = ContinuedFraction::from_rational(&Rational::from((self.a.clone(), self.d.clone())));
        (0..=cf.depth())
            .map(|k| {
                let q = cf.q(k).clone();
                let delta = centered(Integer::from(&q * &self.a), &self.d);
                (q, delta)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute(a: i64, b: i64, m: i64, s: i64, len: i64, y_min: i64) -> Option<i64> {
        (y_min..y_min + m).find(|&y| ((a * y + b - s).rem_euclid(m)) < len)
    }

    #[test]
    fn solver_matches_brute_force_on_small_moduli() {
        for m in 1..40i64 {
            for a in 0..m {
                for b in [0, 1, m / 2, m - 1] {
                    for s in 0..m {
                        for len in 1..=m.min(5) {
                            let got = first_in_cyclic(
                                &Integer::from(a),
                                &Integer::from(b),
                                &Integer::from(m),
                                &Integer::from(s),
                                &Integer::from(len),
                                &Integer::from(1),
                            )
                            .map(|v| v.to_i64().unwrap());
                            assert_eq!(got, brute(a, b, m, s, len, 1), "a={a} b={b} m={m} s={s} len={len}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn coord_model_for_quarter_rotation() {
        let c = Coord::new(
            &Rational::from((1, 4)),
            &Rational::new(),
            &Rational::from((1, 2)),
            &Rational::from((1, 10)),
        );
        assert_eq!(c.first_from(&Integer::from(1)).unwrap(), 2);
        assert_eq!(c.period(), 4);
    }
}
