//! Certified real arithmetic on top of MPFR directed rounding.
//!
//! An [`Interval`] always contains the real number it stands for. Comparisons
//! against exact rationals only succeed when they hold for the whole interval.

use crate::error::{Error, Result};
use rug::float::{Constant, Round};
use rug::ops::Pow;
use rug::{Float, Integer, Rational};
use std::cmp::Ordering;

/// Working precision (bits) for interval endpoints.
pub const PREC: u32 = 160;

/// Closed interval `[lo, hi]` with MPFR endpoints.
#[derive(Clone, Debug)]
pub struct Interval {
    lo: Float,
    hi: Float,
}

fn down<T>(src: T) -> Float
where
    Float: rug::ops::AssignRound<T, Round = Round, Ordering = Ordering>,
{
    Float::with_val_round(PREC, src, Round::Down).0
}

fn up<T>(src: T) -> Float
where
    Float: rug::ops::AssignRound<T, Round = Round, Ordering = Ordering>,
{
    Float::with_val_round(PREC, src, Round::Up).0
}

impl Interval {
    pub fn from_rational(q: &Rational) -> Self {
        Interval {
            lo: down(q),
            hi: up(q),
        }
    }

    pub fn from_integer(q: &Integer) -> Self {
        Interval {
            lo: down(q),
            hi: up(q),
        }
    }

    /// The exact binary value of `x`.
    pub fn from_f64(x: f64) -> Self {
        Interval {
            lo: down(x),
            hi: up(x),
        }
    }

    pub fn e() -> Self {
        let one = Float::with_val(PREC, 1);
        Interval {
            lo: down(one.exp_ref()),
            hi: up(one.exp_ref()),
        }
    }

    pub fn lo(&self) -> &Float {
        &self.lo
    }

    pub fn hi(&self) -> &Float {
        &self.hi
    }

    /// Midpoint as `f64`, for reporting only.
    pub fn to_f64(&self) -> f64 {
        let mid = Float::with_val(PREC, &self.lo + &self.hi) / 2u32;
        mid.to_f64()
    }

    pub fn is_positive(&self) -> bool {
        self.lo > 0
    }

    pub fn add(&self, o: &Interval) -> Interval {
        Interval {
            lo: down(&self.lo + &o.lo),
            hi: up(&self.hi + &o.hi),
        }
    }

    pub fn sub(&self, o: &Interval) -> Interval {
        Interval {
            lo: down(&self.lo - &o.hi),
            hi: up(&self.hi - &o.lo),
        }
    }

    /// Product of two intervals with non-negative lower ends.
    pub fn mul_pos(&self, o: &Interval) -> Interval {
        debug_assert!(self.lo >= 0 && o.lo >= 0);
        Interval {
            lo: down(&self.lo * &o.lo),
            hi: up(&self.hi * &o.hi),
        }
    }

    /// Quotient of a non-negative interval by a positive one.
    pub fn div_pos(&self, o: &Interval) -> Interval {
        debug_assert!(self.lo >= 0 && o.lo > 0);
        Interval {
            lo: down(&self.lo / &o.hi),
            hi: up(&self.hi / &o.lo),
        }
    }

    pub fn recip_pos(&self) -> Interval {
        let one = Interval::from_f64(1.0);
        one.div_pos(self)
    }

    /// `self^e` for a positive base and an arbitrary exponent interval.
    pub fn pow_pos(&self, e: &Interval) -> Interval {
        debug_assert!(self.lo > 0);
        let bases = [&self.lo, &self.hi];
        let exps = [&e.lo, &e.hi];
        let mut lo: Option<Float> = None;
        let mut hi: Option<Float> = None;
        for b in bases {
            for x in exps {
                let l = down(b.pow(x));
                let h = up(b.pow(x));
                lo = Some(match lo {
                    Some(v) if v <= l => v,
                    _ => l,
                });
                hi = Some(match hi {
                    Some(v) if v >= h => v,
                    _ => h,
                });
            }
        }
        Interval {
            lo: lo.unwrap(),
            hi: hi.unwrap(),
        }
    }

    pub fn ln_pos(&self) -> Interval {
        debug_assert!(self.lo > 0);
        Interval {
            lo: down(self.lo.ln_ref()),
            hi: up(self.hi.ln_ref()),
        }
    }

    pub fn exp(&self) -> Interval {
        Interval {
            lo: down(self.lo.exp_ref()),
            hi: up(self.hi.exp_ref()),
        }
    }

    /// Certified `self <= q`.
    pub fn certainly_le(&self, q: &Rational) -> bool {
        self.hi <= *q
    }

    /// Certified `self >= q`.
    pub fn certainly_ge(&self, q: &Rational) -> bool {
        self.lo >= *q
    }

    /// Certified `self > q`.
    pub fn certainly_gt(&self, q: &Rational) -> bool {
        self.lo > *q
    }

    /// Certified `self < q`.
    pub fn certainly_lt(&self, q: &Rational) -> bool {
        self.hi < *q
    }

    pub fn certainly_lt_interval(&self, o: &Interval) -> bool {
        self.hi < o.lo
    }

    pub fn certainly_le_interval(&self, o: &Interval) -> bool {
        self.hi <= o.lo
    }
}

/// `ceil(q^gamma)` for a positive integer `q` and real `gamma >= 0`, certified.
///
/// Integer exponents use exact powers, dyadic exponents with small
/// denominators use exact integer roots, and everything else refines MPFR
/// enclosures until the ceiling is unambiguous.
pub fn ceil_pow(q: &Integer, gamma: f64) -> Result<Integer> {
    if *q <= 0 {
        return Err(Error::Precondition(format!("ceil_pow needs q > 0, got {q}")));
    }
    if !(gamma.is_finite() && gamma >= 0.0) {
        return Err(Error::Precondition(format!("exponent {gamma} must be finite and >= 0")));
    }
    let g = Rational::from_f64(gamma).expect("finite");
    let (num, den) = g.into_numer_denom();
    if den == 1 {
        let e = num.to_u32().ok_or_else(|| Error::Resource(format!("exponent {gamma} too large")))?;
        return Ok(Integer::from(q.pow(e)));
    }
    if den <= 64 {
        // ceil(q^(n/d)) = smallest m with m^d >= q^n.
        let n = num.to_u32().ok_or_else(|| Error::Resource(format!("exponent {gamma} too large")))?;
        let d = den.to_u32().expect("small");
        let base = Integer::from(q.pow(n));
        let (root, rem) = base.root_rem(Integer::new(), d);
        return Ok(if rem == 0 { root } else { root + 1u32 });
    }
    let bits = q.significant_bits() as f64 * gamma;
    let mut prec = (bits as u32).saturating_add(64);
    for _ in 0..6 {
        let qf = Float::with_val(prec, q);
        let gf = Float::with_val(prec, gamma);
        let lo = Float::with_val_round(prec, (&qf).pow(&gf), Round::Down).0;
        let hi = Float::with_val_round(prec, (&qf).pow(&gf), Round::Up).0;
        let cl = lo.to_integer_round(Round::Up).expect("finite").0;
        let ch = hi.to_integer_round(Round::Up).expect("finite").0;
        if cl == ch {
            return Ok(cl);
        }
        prec = prec.saturating_mul(2);
    }
    Err(Error::Resource(format!(
        "could not certify ceil({q}^{gamma}) at {prec} bits"
    )))
}

/// `ceil(exp(k * q))`, certified. Fails if the result would exceed `bit_budget` bits.
pub fn ceil_exp(k: u32, q: &Integer, bit_budget: u64) -> Result<Integer> {
    let est_bits = q.to_f64() * k as f64 * std::f64::consts::LOG2_E;
    if !(est_bits.is_finite()) || est_bits > bit_budget as f64 {
        return Err(Error::Resource(format!(
            "ceil(e^({k}*{q})) needs about {est_bits:.3e} bits, budget is {bit_budget}"
        )));
    }
    let mut prec = est_bits as u32 + 96;
    for _ in 0..6 {
        let x = Float::with_val(prec, q) * k;
        let lo = Float::with_val_round(prec, x.exp_ref(), Round::Down).0;
        let hi = Float::with_val_round(prec, x.exp_ref(), Round::Up).0;
        let cl = lo.to_integer_round(Round::Up).expect("finite").0;
        let ch = hi.to_integer_round(Round::Up).expect("finite").0;
        if cl == ch {
            return Ok(cl);
        }
        prec = prec.saturating_mul(2);
    }
    Err(Error::Resource(format!("could not certify ceil(e^({k}*{q}))")))
}

/// `ceil(x^e)` for a positive rational `x` and real exponent `e`, certified.
pub fn ceil_rational_pow(x: &Rational, e: f64) -> Result<Integer> {
    if *x <= 0 {
        return Err(Error::Precondition("ceil_rational_pow needs x > 0".into()));
    }
    let est = ln_rational(x) * e / std::f64::consts::LN_2;
    if !est.is_finite() || est > (1u64 << 22) as f64 {
        return Err(Error::Resource(format!("power of about 2^{est:.1} too large")));
    }
    let mut prec = est.max(0.0) as u32 + 128;
    for _ in 0..6 {
        let xl = Float::with_val_round(prec, x, Round::Down).0;
        let xh = Float::with_val_round(prec, x, Round::Up).0;
        let ef = Float::with_val(prec, e);
        let (a, b) = if (*x >= 1) == (e >= 0.0) { (xl, xh) } else { (xh, xl) };
        let lo = Float::with_val_round(prec, (&a).pow(&ef), Round::Down).0;
        let hi = Float::with_val_round(prec, (&b).pow(&ef), Round::Up).0;
        let cl = lo.to_integer_round(Round::Up).expect("finite").0;
        let ch = hi.to_integer_round(Round::Up).expect("finite").0;
        if cl == ch {
            return Ok(cl);
        }
        prec = prec.saturating_mul(2);
    }
    Err(Error::Resource("could not certify rational power ceiling".into()))
}

/// Natural logarithm of a positive integer as `f64`, valid beyond the `f64` range.
pub fn ln_integer(q: &Integer) -> f64 {
    assert!(*q > 0, "ln_integer of non-positive value");
    let bits = q.significant_bits();
    if bits <= 1000 {
        q.to_f64().ln()
    } else {
        let shift = bits - 64;
        let top = Integer::from(q >> shift);
        top.to_f64().ln() + shift as f64 * std::f64::consts::LN_2
    }
}

/// Natural logarithm of a positive rational as `f64`.
pub fn ln_rational(x: &Rational) -> f64 {
    ln_integer(x.numer()) - ln_integer(x.denom())
}

/// `e^(-i)` rounded down to a 64-bit dyadic rational (relative error below 2^-63).
pub fn exp_neg_rational(i: u32) -> Rational {
    let x = Float::with_val(128, i);
    let v = Float::with_val_round(64, (-x).exp_ref(), Round::Down).0;
    Rational::try_from(&v).expect("finite")
}

/// `base^(-i)` rounded down to a 64-bit dyadic rational, for real `base > 1`.
pub fn pow_neg_rational(base: f64, i: u32) -> Rational {
    let b = Float::with_val(128, base);
    let v = Float::with_val_round(64, b.pow(-(i as i64)), Round::Down).0;
    Rational::try_from(&v).expect("finite")
}

/// `ln 2` as a certified interval.
pub fn ln2() -> Interval {
    Interval {
        lo: Float::with_val_round(PREC, Constant::Log2, Round::Down).0,
        hi: Float::with_val_round(PREC, Constant::Log2, Round::Up).0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integer_and_dyadic_powers() {
        assert_eq!(ceil_pow(&Integer::from(17), 2.0).unwrap(), 289);
        assert_eq!(ceil_pow(&Integer::from(4), 1.5).unwrap(), 8);
        assert_eq!(ceil_pow(&Integer::from(5), 1.5).unwrap(), 12); // 11.18..
        assert_eq!(ceil_pow(&Integer::from(1), 3.7).unwrap(), 1);
    }

    #[test]
    fn irrational_power_matches_float_estimate() {
        let c = ceil_pow(&Integer::from(10), 1.1).unwrap();
        assert_eq!(c, 13); // 10^1.1 = 12.589...
    }

    #[test]
    fn exp_ceilings() {
        assert_eq!(ceil_exp(3, &Integer::from(1), 1 << 20).unwrap(), 21);
        let c = ceil_exp(3, &Integer::from(21), 1 << 20).unwrap();
        assert_eq!(c.to_string().len(), 28);
        assert!(ceil_exp(3, &c, 1 << 20).is_err());
    }

    #[test]
    fn rational_power_ceiling() {
        let x = Rational::from((1, 4));
        assert_eq!(ceil_rational_pow(&x, -1.0).unwrap(), 4);
        assert_eq!(ceil_rational_pow(&x, -1.5).unwrap(), 8);
    }

    #[test]
    fn exp_neg_is_below_and_close() {
        for i in 0..20 {
            let r = exp_neg_rational(i);
            let f = (-(i as f64)).exp();
            assert!(r.to_f64() <= f * (1.0 + 1e-15));
            assert!((r.to_f64() - f).abs() / f < 1e-15);
        }
    }

    #[test]
    fn logs_of_huge_integers() {
        let q = Integer::from(Integer::u_pow_u(3, 5000));
        let l = ln_integer(&q);
        assert!((l - 5000.0 * 3f64.ln()).abs() < 1e-9 * l);
    }

    #[test]
    fn interval_pow_encloses() {
        let b = Interval::from_f64(3.0);
        let e = Interval::from_f64(-1.8);
        let p = b.pow_pos(&e);
        let v = 3f64.powf(-1.8);
        assert!(p.lo().to_f64() <= v && v <= p.hi().to_f64());
        assert!(p.lo() < p.hi());
    }
}
