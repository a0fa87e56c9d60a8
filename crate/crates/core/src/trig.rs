//! Real trigonometric polynomials on `T^d`.
//!
//! A term is `cos * cos(2 pi k.x) + sin * sin(2 pi k.x)`. Bounds are computed
//! from the exact binary values of the coefficients, so they are certified.

use crate::error::{Error, Result};
use rug::Rational;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Rational upper bound for pi.
fn pi_upper() -> Rational {
    Rational::from((355, 113))
}

/// Smallest `f64` not below `q`.
pub fn f64_up(q: &Rational) -> f64 {
    let x = q.to_f64();
    if Rational::from_f64(x).is_some_and(|v| v >= *q) {
        x
    } else {
        x.next_up()
    }
}

/// Largest `f64` not above `q`.
pub fn f64_down(q: &Rational) -> f64 {
    let x = q.to_f64();
    if Rational::from_f64(x).is_some_and(|v| v <= *q) {
        x
    } else {
        x.next_down()
    }
}

fn exact(x: f64) -> Rational {
    Rational::from_f64(x).expect("finite coefficient")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrigTerm {
    pub freq: Vec<i64>,
    pub cos: f64,
    pub sin: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrigPoly {
    pub dim: usize,
    pub terms: Vec<TrigTerm>,
}

impl TrigPoly {
    pub fn new(dim: usize, terms: Vec<TrigTerm>) -> Result<TrigPoly> {
        if dim == 0 {
            return Err(Error::Precondition("dimension must be positive".into()));
        }
        for t in &terms {
            if t.freq.len() != dim {
                return Err(Error::Precondition(format!(
                    "frequency {:?} has the wrong dimension (expected {dim})",
                    t.freq
                )));
            }
            if !t.cos.is_finite() || !t.sin.is_finite() {
                return Err(Error::Precondition("non-finite coefficient".into()));
            }
        }
        Ok(TrigPoly { dim, terms })
    }

    pub fn constant(dim: usize, c: f64) -> TrigPoly {
        TrigPoly {
            dim,
            terms: vec![TrigTerm {
                freq: vec![0; dim],
                cos: c,
                sin: 0.0,
            }],
        }
    }

    /// `c + amp * cos(2 pi k.x)`.
    pub fn cosine(dim: usize, c: f64, freq: Vec<i64>, amp: f64) -> Result<TrigPoly> {
        TrigPoly::new(
            dim,
            vec![
                TrigTerm {
                    freq: vec![0; dim],
                    cos: c,
                    sin: 0.0,
                },
                TrigTerm { freq, cos: amp, sin: 0.0 },
            ],
        )
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let tau = 2.0 * std::f64::consts::PI;
        self.terms
            .iter()
            .map(|t| {
                if t.freq.iter().all(|&k| k == 0) {
                    return t.cos;
                }
                let phase: f64 = t.freq.iter().zip(x).map(|(&k, &xi)| k as f64 * xi).sum();
                let phase = tau * (phase - phase.floor());
                t.cos * phase.cos() + t.sin * phase.sin()
            })
            .sum()
    }

    pub fn scaled(&self, c: f64) -> TrigPoly {
        TrigPoly {
            dim: self.dim,
            terms: self
                .terms
                .iter()
                .map(|t| TrigTerm {
                    freq: t.freq.clone(),
                    cos: t.cos * c,
                    sin: t.sin * c,
                })
                .collect(),
        }
    }

    /// Exact mean (sum of the constant terms).
    pub fn mean_exact(&self) -> Rational {
        self.terms
            .iter()
            .filter(|t| t.freq.iter().all(|&k| k == 0))
            .fold(Rational::new(), |acc, t| acc + exact(t.cos))
    }

    pub fn mean(&self) -> f64 {
        self.mean_exact().to_f64()
    }

    /// `sum (|cos| + |sin|)` over the non-constant terms.
    fn oscillation(&self) -> Rational {
        self.terms
            .iter()
            .filter(|t| t.freq.iter().any(|&k| k != 0))
            .fold(Rational::new(), |acc, t| acc + exact(t.cos.abs()) + exact(t.sin.abs()))
    }

    /// Certified lower bound for the minimum.
    pub fn lower_bound(&self) -> Rational {
        self.mean_exact() - self.oscillation()
    }

    /// Certified upper bound for the maximum.
    pub fn upper_bound(&self) -> Rational {
        self.mean_exact() + self.oscillation()
    }

    /// Certified bound for `sup |f|`.
    pub fn sup_bound(&self) -> f64 {
        f64_up(&(self.mean_exact().abs() + self.oscillation()))
    }

    /// Certified Lipschitz constant with respect to the sup distance on `T^d`.
    pub fn lipschitz_bound(&self) -> f64 {
        let s = self.terms.iter().fold(Rational::new(), |acc, t| {
            let l1: i64 = t.freq.iter().map(|k| k.abs()).sum();
            acc + (exact(t.cos.abs()) + exact(t.sin.abs())) * l1
        });
        f64_up(&(s * pi_upper() * 2u32))
    }

    /// Complex Fourier coefficients `c_k` with `f = sum c_k e^{2 pi i k.x}`.
    pub fn fourier(&self) -> BTreeMap<Vec<i64>, (f64, f64)> {
        let mut m: BTreeMap<Vec<i64>, (f64, f64)> = BTreeMap::new();
        let mut add = |k: Vec<i64>, re: f64, im: f64| {
            let e = m.entry(k).or_insert((0.0, 0.0));
            e.0 += re;
            e.1 += im;
        };
        for t in &self.terms {
            if t.freq.iter().all(|&k| k == 0) {
                add(t.freq.clone(), t.cos, 0.0);
            } else {
                let neg: Vec<i64> = t.freq.iter().map(|k| -k).collect();
                add(t.freq.clone(), t.cos / 2.0, -t.sin / 2.0);
                add(neg, t.cos / 2.0, t.sin / 2.0);
            }
        }
        m.retain(|_, v| v.0 != 0.0 || v.1 != 0.0);
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bounds_of_a_cosine_speed() {
        let p = TrigPoly::cosine(2, 1.0, vec![1, 0], 0.5).unwrap();
        assert_eq!(p.lower_bound(), Rational::from((1, 2)));
        assert_eq!(p.upper_bound(), Rational::from((3, 2)));
        assert!(p.lipschitz_bound() >= std::f64::consts::PI);
        assert!((p.eval(&[0.5, 0.3]) - 0.5).abs() < 1e-15);
        let f = p.fourier();
        assert_eq!(f[&vec![1, 0]], (0.25, -0.0));
        assert_eq!(f[&vec![0, 0]], (1.0, 0.0));
    }

    #[test]
    fn rounding_helpers_bracket() {
        let third = Rational::from((1, 3));
        assert!(Rational::from_f64(f64_up(&third)).unwrap() >= third);
        assert!(Rational::from_f64(f64_down(&third)).unwrap() <= third);
        assert_eq!(f64_up(&Rational::from((1, 2))), 0.5);
    }
}
