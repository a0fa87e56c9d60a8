//! Finite continued fractions with exact convergents.
//!
//! Convergents follow the fractional-part convention: `p_{-1} = 1, p_0 = 0,
//! q_{-1} = 0, q_0 = 1`, so `p_n / q_n` approaches `frac(alpha)` and the
//! integer part `a0` is only re-added by [`ContinuedFraction::value`].

use crate::certified::ln_integer;
use crate::error::{Error, Result};
use crate::io::dec_integer;
use rug::{Integer, Rational};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContinuedFraction {
    a0: Integer,
    a: Vec<Integer>,
    p: Vec<Integer>,
    q: Vec<Integer>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Convergent {
    #[serde(with = "dec_integer")]
    pub p: Integer,
    #[serde(with = "dec_integer")]
    pub q: Integer,
    pub index: usize,
}

impl ContinuedFraction {
    /// Builds `[a0; a_1, ..., a_N]`; every `a_k` must be at least 1.
    pub fn new(a0: Integer, quotients: Vec<Integer>) -> Result<Self> {
        if let Some(k) = quotients.iter().position(|a| *a < 1) {
            return Err(Error::Precondition(format!(
                "partial quotient a_{} = {} is not positive",
                k + 1,
                quotients[k]
            )));
        }
        let n = quotients.len();
        let mut p = Vec::with_capacity(n + 1);
        let mut q = Vec::with_capacity(n + 1);
        p.push(Integer::from(0));
        q.push(Integer::from(1));
        let (mut pm, mut qm) = (Integer::from(1), Integer::from(0));
        for a in &quotients {
            let pk = Integer::from(a * &p[p.len() - 1]) + &pm;
            let qk = Integer::from(a * &q[q.len() - 1]) + &qm;
            pm = p[p.len() - 1].clone();
            qm = q[q.len() - 1].clone();
            p.push(pk);
            q.push(qk);
        }
        Ok(ContinuedFraction {
            a0,
            a: quotients,
            p,
            q,
        })
    }

    pub fn from_u64(a0: i64, quotients: &[u64]) -> Result<Self> {
        Self::new(
            Integer::from(a0),
            quotients.iter().map(|&a| Integer::from(a)).collect(),
        )
    }

    /// `[0; 1, 1, ..., 1]`, truncation of the golden-ratio fractional part.
    pub fn golden(depth: usize) -> Self {
        Self::from_u64(0, &vec![1; depth]).expect("valid")
    }

    /// Canonical expansion of a rational (last quotient at least 2 unless the depth is 1).
    pub fn from_rational(x: &Rational) -> Self {
        let a0 = x.clone().floor().into_numer_denom().0;
        let mut num = x.numer() - Integer::from(&a0 * x.denom());
        let mut den = x.denom().clone();
        let mut quotients = Vec::new();
        // frac = num/den in [0,1); expand den/num repeatedly.
        while num != 0 {
            let (qt, rem) = den.div_rem_floor(num.clone());
            quotients.push(qt);
            den = num;
            num = rem;
        }
        Self::new(a0, quotients).expect("Euclid quotients are positive")
    }

    /// Appends one partial quotient.
    pub fn push(&mut self, a: Integer) -> Result<()> {
        if a < 1 {
            return Err(Error::Precondition(format!("partial quotient {a} is not positive")));
        }
        let k = self.a.len();
        let (pm, qm) = if k == 0 {
            (Integer::from(1), Integer::from(0))
        } else {
            (self.p[k - 1].clone(), self.q[k - 1].clone())
        };
        let pk = Integer::from(&a * &self.p[k]) + pm;
        let qk = Integer::from(&a * &self.q[k]) + qm;
        self.p.push(pk);
        self.q.push(qk);
        self.a.push(a);
        Ok(())
    }

    /// Number of stored partial quotients `N`.
    pub fn depth(&self) -> usize {
        self.a.len()
    }

    pub fn a0(&self) -> &Integer {
        &self.a0
    }

    pub fn quotients(&self) -> &[Integer] {
        &self.a
    }

    /// `a_k` for `1 <= k <= N`.
    pub fn quotient(&self, k: usize) -> Result<&Integer> {
        if k == 0 || k > self.depth() {
            return Err(Error::OutOfRange {
                index: k,
                depth: self.depth(),
            });
        }
        Ok(&self.a[k - 1])
    }

    /// `p_k`; panics if `k > N`.
    pub fn p(&self, k: usize) -> &Integer {
        &self.p[k]
    }

    /// `q_k`; panics if `k > N`.
    pub fn q(&self, k: usize) -> &Integer {
        &self.q[k]
    }

    pub fn convergent(&self, k: usize) -> Result<Convergent> {
        if k > self.depth() {
            return Err(Error::OutOfRange {
                index: k,
                depth: self.depth(),
            });
        }
        Ok(Convergent {
            p: self.p[k].clone(),
            q: self.q[k].clone(),
            index: k,
        })
    }

    /// Convergents `(p_k, q_k)` for `k = 0..=n`.
    pub fn convergents(&self, n: usize) -> Result<Vec<Convergent>> {
        (0..=n).map(|k| self.convergent(k)).collect()
    }

    /// `p_N / q_N`, the fractional part of the truncation.
    pub fn frac_value(&self) -> Rational {
        let n = self.depth();
        Rational::from((self.p[n].clone(), self.q[n].clone()))
    }

    /// `a0 + p_N / q_N`.
    pub fn value(&self) -> Rational {
        self.frac_value() + &self.a0
    }

    /// `|q_k frac(value) - p_k|` for any `0 <= k <= N` (zero at `k = N`).
    pub fn distance_at(&self, k: usize) -> Rational {
        let n = self.depth();
        let num = Integer::from(&self.q[k] * &self.p[n]) - Integer::from(&self.p[k] * &self.q[n]);
        Rational::from((num.abs(), self.q[n].clone()))
    }

    /// `||q_n alpha||` (distance to the nearest integer) for `n <= N - 2`.
    /// Equals `|q_n alpha - p_n|` except at `n = 0` with `a_1 = 1`.
    pub fn norm_q_alpha(&self, n: usize) -> Result<Rational> {
        if n + 2 > self.depth() {
            return Err(Error::InsufficientDepth {
                index: n,
                needed: n + 2,
                depth: self.depth(),
            });
        }
        let d = self.distance_at(n);
        if Rational::from(&d * 2u32) > 1 {
            Ok(Rational::from(1) - d)
        } else {
            Ok(d)
        }
    }

    /// Finite-depth type surrogate: max of `log q_{n+1} / log q_n` over the
    /// trailing half `n in [ceil(N/2), N-1]`, skipping `q_n = 1`.
    pub fn type_estimate(&self) -> Result<f64> {
        let n = self.depth();
        if n < 3 {
            return Err(Error::Precondition(format!("type estimate needs depth >= 3, got {n}")));
        }
        let mut best: f64 = 1.0;
        for k in n.div_ceil(2)..n {
            if self.q[k] <= 1 {
                continue;
            }
            let ratio = ln_integer(&self.q[k + 1]) / ln_integer(&self.q[k]);
            best = best.max(ratio);
        }
        Ok(best)
    }

    /// Checks `10 K < r q_N q_{N-1}`, i.e. `K / (q_N q_{N-1}) < r / 10`.
    pub fn check_horizon(&self, iterates: &Integer, r: &Rational) -> Result<()> {
        let n = self.depth();
        if n == 0 {
            return Err(Error::InsufficientDepth {
                index: 0,
                needed: 1,
                depth: 0,
            });
        }
        let avail = Integer::from(&self.q[n] * &self.q[n - 1]);
        let needed = Rational::from(iterates * Integer::from(10)) / r;
        if avail.clone() > needed {
            Ok(())
        } else {
            Err(Error::Horizon {
                iterates: iterates.to_string(),
                radius: crate::io::fmt_rational(r),
                needed: needed.ceil().to_string(),
                available: avail.to_string(),
            })
        }
    }
}

#[derive(Serialize, Deserialize)]
struct CfRepr {
    #[serde(with = "dec_integer")]
    a0: Integer,
    #[serde(with = "crate::io::dec_integer_vec")]
    quotients: Vec<Integer>,
}

impl Serialize for ContinuedFraction {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        CfRepr {
            a0: self.a0.clone(),
            quotients: self.a.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ContinuedFraction {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = CfRepr::deserialize(d)?;
        ContinuedFraction::new(r.a0, r.quotients).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn qs(cf: &ContinuedFraction, n: usize) -> Vec<u64> {
        cf.convergents(n).unwrap().iter().map(|c| c.q.to_u64().unwrap()).collect()
    }

    #[test]
    fn fibonacci_denominators() {
        let cf = ContinuedFraction::golden(5);
        assert_eq!(qs(&cf, 5), vec![1, 1, 2, 3, 5, 8]);
        assert_eq!(cf.value(), Rational::from((5, 8)));
    }

    #[test]
    fn single_step() {
        let cf = ContinuedFraction::from_u64(0, &[7]).unwrap();
        let c = cf.convergent(1).unwrap();
        assert_eq!((c.p.to_u64().unwrap(), c.q.to_u64().unwrap()), (1, 7));
        assert_eq!(ContinuedFraction::from_u64(0, &[2]).unwrap().value(), Rational::from((1, 2)));
    }

    #[test]
    fn sqrt2_convergents() {
        let cf = ContinuedFraction::from_u64(1, &[2, 2, 2]).unwrap();
        assert_eq!(qs(&cf, 3), vec![1, 2, 5, 12]);
        assert_eq!(cf.value(), Rational::from((17, 12)));
    }

    #[test]
    fn depth_errors() {
        let cf = ContinuedFraction::golden(3);
        assert!(matches!(cf.convergents(4), Err(Error::OutOfRange { .. })));
        assert!(matches!(cf.norm_q_alpha(2), Err(Error::InsufficientDepth { .. })));
        assert!(ContinuedFraction::from_u64(0, &[1, 0]).is_err());
    }

    #[test]
    fn norm_example() {
        let cf = ContinuedFraction::golden(7);
        assert_eq!(cf.value(), Rational::from((13, 21)));
        assert_eq!(cf.norm_q_alpha(2).unwrap(), Rational::from((5, 21)));
    }

    #[test]
    fn norm_at_zero_with_unit_first_quotient() {
        let cf = ContinuedFraction::golden(10);
        let f = cf.frac_value();
        assert_eq!(cf.norm_q_alpha(0).unwrap(), Rational::from(1) - f);
        assert_eq!(cf.distance_at(0), cf.frac_value());
    }

    #[test]
    fn norm_at_zero_is_distance_to_nearest_integer_when_a1_exceeds_one() {
        let cf = ContinuedFraction::from_u64(0, &[3, 1, 4, 1, 5, 9, 2, 6]).unwrap();
        let f = cf.frac_value();
        let nearest = if f < (1, 2) { f.clone() } else { Rational::from(1) - f.clone() };
        assert_eq!(cf.norm_q_alpha(0).unwrap(), nearest);
    }

    #[test]
    fn norm_bounds_on_pi_like_expansion() {
        let cf = ContinuedFraction::from_u64(0, &[3, 1, 4, 1, 5, 9, 2, 6]).unwrap();
        for n in 0..=4 {
            let qn = cf.q(n).clone();
            let qn1 = cf.q(n + 1).clone();
            let v = cf.norm_q_alpha(n).unwrap();
            assert!(Rational::from((1, Integer::from(&qn + &qn1))) < v);
            assert!(v < Rational::from((1, qn1)));
        }
    }

    #[test]
    fn type_estimates() {
        let g = ContinuedFraction::golden(20);
        assert!((g.type_estimate().unwrap() - 1.0).abs() < 0.15);
        let fast = ContinuedFraction::from_u64(0, &[2, 4, 16, 256]).unwrap();
        assert!(fast.type_estimate().unwrap() >= 1.8);
        let c = ContinuedFraction::from_u64(0, &[3; 10]).unwrap();
        assert!(c.type_estimate().unwrap() >= 1.0);
    }

    #[test]
    fn horizon_check() {
        let cf = ContinuedFraction::golden(30);
        let r = Rational::from((1, 100));
        assert!(cf.check_horizon(&Integer::from(1000), &r).is_ok());
        assert!(cf.check_horizon(&Integer::from(10u64.pow(12)), &r).is_err());
    }

    #[test]
    fn rational_expansion_round_trips() {
        for (n, d) in [(17i64, 12i64), (-7, 3), (0, 1), (5, 8), (355, 113)] {
            let x = Rational::from((n, d));
            let cf = ContinuedFraction::from_rational(&x);
            assert_eq!(cf.value(), x);
        }
        assert_eq!(
            ContinuedFraction::from_rational(&Rational::from((5, 8))),
            ContinuedFraction::from_u64(0, &[1, 1, 1, 2]).unwrap()
        );
    }

    #[test]
    fn push_matches_new() {
        let mut a = ContinuedFraction::from_u64(0, &[2]).unwrap();
        a.push(Integer::from(8)).unwrap();
        a.push(Integer::from(3)).unwrap();
        assert_eq!(a, ContinuedFraction::from_u64(0, &[2, 8, 3]).unwrap());
    }

    #[test]
    fn json_uses_decimal_strings() {
        let cf = ContinuedFraction::from_u64(1, &[2, 2]).unwrap();
        let s = serde_json::to_string(&cf).unwrap();
        assert_eq!(s, r#"{"a0":"1","quotients":["2","2"]}"#);
        let back: ContinuedFraction = serde_json::from_str(&s).unwrap();
        assert_eq!(back, cf);
        assert!(serde_json::from_str::<ContinuedFraction>(r#"{"a0":"0","quotients":["0"]}"#).is_err());
    }
}
