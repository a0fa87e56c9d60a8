//! Intertwined pairs `(alpha, alpha')` whose convergent denominators satisfy
//! `q'_n >= q_n^gamma` and `q_{n+1} >= (q'_n)^gamma` (power regime), or
//! `q'_n >= e^{3 q_n}` and `q_{n+1} >= e^{3 q'_n}` (exponential regime).
//!
//! Quotients are chosen greedily: the smallest `a` whose new denominator
//! reaches the certified ceiling of the threshold.

use crate::certified::{ceil_exp, ceil_pow, ln_integer};
use crate::cf::ContinuedFraction;
use crate::error::{Error, Result};
use rug::Integer;
use serde::{Deserialize, Serialize};

/// Default cap on the size of any denominator, in bits.
pub const DEFAULT_BIT_BUDGET: u64 = 1 << 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Power,
    Exponential,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntertwinedPair {
    pub alpha: ContinuedFraction,
    pub alpha_prime: ContinuedFraction,
    pub gamma: f64,
    /// Number of enforced levels.
    pub levels: usize,
    pub regime: Regime,
    /// Index `n` of the first enforced level.
    pub first_level: usize,
}

/// Quotients preceding the enforced levels: `alpha` gets `a_1..a_m` and
/// `alpha'` gets `a'_1..a'_{m-1}`; enforcement starts at `n = m`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedPrefix {
    #[serde(with = "crate::io::dec_integer_vec")]
    pub alpha: Vec<Integer>,
    #[serde(with = "crate::io::dec_integer_vec", default)]
    pub alpha_prime: Vec<Integer>,
}

impl SeedPrefix {
    pub fn default_power() -> Self {
        SeedPrefix {
            alpha: vec![Integer::from(2)],
            alpha_prime: vec![],
        }
    }

    pub fn default_exponential() -> Self {
        SeedPrefix {
            alpha: vec![Integer::from(1)],
            alpha_prime: vec![],
        }
    }

    fn validate(&self) -> Result<()> {
        if self.alpha.is_empty() {
            return Err(Error::Precondition("seed prefix for alpha must be non-empty".into()));
        }
        if self.alpha_prime.len() + 1 != self.alpha.len() {
            return Err(Error::Precondition(format!(
                "seed prefix lengths must be m and m-1, got {} and {}",
                self.alpha.len(),
                self.alpha_prime.len()
            )));
        }
        if self.alpha.iter().chain(&self.alpha_prime).any(|a| *a < 1) {
            return Err(Error::Precondition("seed quotients must be positive".into()));
        }
        Ok(())
    }
}

/// Smallest quotient `a >= 1` with `a q_{k-1} + q_{k-2} >= target`.
fn greedy_quotient(cf: &ContinuedFraction, target: &Integer) -> Integer {
    let k = cf.depth();
    let q1 = cf.q(k);
    let q2 = if k == 0 { Integer::new() } else { cf.q(k - 1).clone() };
    let need = Integer::from(target - &q2);
    if need <= 0 {
        return Integer::from(1);
    }
    let a = need.div_rem_ceil(q1.clone()).0;
    if a < 1 {
        Integer::from(1)
    } else {
        a
    }
}

struct Threshold {
    regime: Regime,
    gamma: f64,
    bit_budget: u64,
}

impl Threshold {
    fn estimate_bits(&self, q: &Integer) -> f64 {
        match self.regime {
            Regime::Power => q.significant_bits() as f64 * self.gamma,
            Regime::Exponential => q.to_f64() * 3.0 * std::f64::consts::LOG2_E,
        }
    }

    fn ceil(&self, q: &Integer) -> Result<Integer> {
        match self.regime {
            Regime::Power => ceil_pow(q, self.gamma),
            Regime::Exponential => ceil_exp(3, q, self.bit_budget),
        }
    }

    /// Exact test `v >= threshold(q)` and the margin `ln(v / ceil(threshold(q)))`.
    fn check(&self, q: &Integer, v: &Integer) -> Result<(bool, f64)> {
        let est = self.estimate_bits(q);
        let vb = v.significant_bits() as f64;
        if est > vb + 2.0 && est > self.bit_budget as f64 {
            // Far out of reach: the comparison is decided by size alone.
            let margin = match self.regime {
                Regime::Power => ln_integer(v) - self.gamma * ln_integer(q),
                Regime::Exponential => ln_integer(v) - 3.0 * q.to_f64(),
            };
            return Ok((false, margin));
        }
        let t = self.ceil(q)?;
        Ok((*v >= t, ln_integer(v) - ln_integer(&t)))
    }
}

fn build(
    gamma: f64,
    levels: usize,
    regime: Regime,
    seed: &SeedPrefix,
    bit_budget: u64,
) -> Result<IntertwinedPair> {
    seed.validate()?;
    if levels == 0 {
        return Err(Error::Precondition("levels must be at least 1".into()));
    }
    let mut alpha = ContinuedFraction::new(Integer::new(), seed.alpha.clone())?;
    let mut alpha_prime = ContinuedFraction::new(Integer::new(), seed.alpha_prime.clone())?;
    let m = seed.alpha.len();
    let th = Threshold {
        regime,
        gamma,
        bit_budget,
    };
    for level in 1..=levels {
        let n = m + level - 1;
        for (which, q) in [("q'", alpha.q(n).clone()), ("q", Integer::new())] {
            let (cf, base) = if which == "q'" {
                (&mut alpha_prime, q)
            } else {
                let qp = alpha_prime.q(n).clone();
                (&mut alpha, qp)
            };
            let est = th.estimate_bits(&base);
            if !est.is_finite() || est > bit_budget as f64 {
                return Err(Error::Resource(format!(
                    "level {level} (n = {n}) needs a denominator of about {est:.3e} bits, budget {bit_budget}; completed {} levels",
                    level - 1
                )));
            }
            let target = th.ceil(&base)?;
            let a = greedy_quotient(cf, &target);
            cf.push(a)?;
        }
    }
    let pair = IntertwinedPair {
        alpha,
        alpha_prime,
        gamma,
        levels,
        regime,
        first_level: m,
    };
    let report = verify_membership_with_budget(&pair, bit_budget)?;
    if !report.all_pass {
        return Err(Error::Inconsistent(format!(
            "greedy construction failed post-hoc verification at level {:?}",
            report.first_failure
        )));
    }
    Ok(pair)
}

/// Greedy pair in `Y_gamma` with `levels` enforced levels.
pub fn build_pair(gamma: f64, levels: usize, seed: Option<&SeedPrefix>) -> Result<IntertwinedPair> {
    build_pair_with_budget(gamma, levels, seed, DEFAULT_BIT_BUDGET)
}

pub fn build_pair_with_budget(
    gamma: f64,
    levels: usize,
    seed: Option<&SeedPrefix>,
    bit_budget: u64,
) -> Result<IntertwinedPair> {
    if !(gamma.is_finite() && gamma > 1.0) {
        return Err(Error::Precondition(format!("gamma must be > 1, got {gamma}")));
    }
    let default = SeedPrefix::default_power();
    build(gamma, levels, Regime::Power, seed.unwrap_or(&default), bit_budget)
}

/// Greedy pair in the exponential class, truncated at `levels <= 3`.
pub fn build_exponential_pair(levels: usize) -> Result<IntertwinedPair> {
    build_exponential_pair_with_budget(levels, DEFAULT_BIT_BUDGET)
}

pub fn build_exponential_pair_with_budget(levels: usize, bit_budget: u64) -> Result<IntertwinedPair> {
    if levels == 0 {
        return Err(Error::Precondition("levels must be at least 1".into()));
    }
    if levels > 3 {
        return Err(Error::Resource(format!("exponential pairs support at most 3 levels, asked {levels}")));
    }
    build(f64::INFINITY, levels, Regime::Exponential, &SeedPrefix::default_exponential(), bit_budget)
}

impl IntertwinedPair {
    /// Wraps two fractions, enforcing as many levels from `first_level` as their depths allow.
    pub fn from_parts(
        alpha: ContinuedFraction,
        alpha_prime: ContinuedFraction,
        gamma: f64,
        regime: Regime,
        first_level: usize,
    ) -> Result<Self> {
        if first_level == 0 {
            return Err(Error::Precondition("first level must be at least 1".into()));
        }
        let by_alpha = alpha.depth().saturating_sub(first_level);
        let by_prime = (alpha_prime.depth() + 1).saturating_sub(first_level);
        Ok(IntertwinedPair {
            alpha,
            alpha_prime,
            gamma,
            levels: by_alpha.min(by_prime),
            regime,
            first_level,
        })
    }

    /// Level index `n` for each enforced level.
    pub fn level_indices(&self) -> impl Iterator<Item = usize> {
        let f = self.first_level;
        (0..self.levels).map(move |l| f + l)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelCheck {
    pub level: usize,
    pub n: usize,
    /// `q'_n >= threshold(q_n)`.
    pub prime_ok: bool,
    /// `ln(q'_n / ceil(threshold(q_n)))`.
    pub prime_margin: f64,
    /// `q_{n+1} >= threshold(q'_n)`.
    pub next_ok: bool,
    pub next_margin: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MembershipReport {
    pub levels: Vec<LevelCheck>,
    pub all_pass: bool,
    /// First level with a failing inequality.
    pub first_failure: Option<usize>,
}

/// Exact re-check of every enforced level.
pub fn verify_membership(pair: &IntertwinedPair) -> Result<MembershipReport> {
    verify_membership_with_budget(pair, DEFAULT_BIT_BUDGET.max(1 << 27))
}

pub fn verify_membership_with_budget(pair: &IntertwinedPair, bit_budget: u64) -> Result<MembershipReport> {
    let th = Threshold {
        regime: pair.regime,
        gamma: pair.gamma,
        bit_budget,
    };
    let mut levels = Vec::new();
    for (i, n) in pair.level_indices().enumerate() {
        let q = pair.alpha.q(n);
        let qp = pair.alpha_prime.q(n);
        let qn1 = pair.alpha.q(n + 1);
        let (prime_ok, prime_margin) = th.check(q, qp)?;
        let (next_ok, next_margin) = th.check(qp, qn1)?;
        levels.push(LevelCheck {
            level: i + 1,
            n,
            prime_ok,
            prime_margin,
            next_ok,
            next_margin,
        });
    }
    let first_failure = levels.iter().find(|l| !(l.prime_ok && l.next_ok)).map(|l| l.level);
    Ok(MembershipReport {
        all_pass: first_failure.is_none(),
        first_failure,
        levels,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MinimalityCheck {
    pub level: usize,
    /// Decrementing `a'_n` breaks `q'_n >= threshold(q_n)`; `None` if `a'_n = 1`.
    pub prime_minimal: Option<bool>,
    /// Decrementing `a_{n+1}` breaks `q_{n+1} >= threshold(q'_n)`; `None` if `a_{n+1} = 1`.
    pub next_minimal: Option<bool>,
}

/// Checks that every chosen quotient is the smallest admissible one.
pub fn greedy_minimality(pair: &IntertwinedPair) -> Result<Vec<MinimalityCheck>> {
    let th = Threshold {
        regime: pair.regime,
        gamma: pair.gamma,
        bit_budget: DEFAULT_BIT_BUDGET.max(1 << 27),
    };
    let mut out = Vec::new();
    for (i, n) in pair.level_indices().enumerate() {
        let dec = |cf: &ContinuedFraction, k: usize, base: &Integer| -> Result<Option<bool>> {
            let a = cf.quotient(k)?;
            if *a == 1 {
                return Ok(None);
            }
            let lowered = Integer::from(cf.q(k) - cf.q(k - 1));
            let (ok, _) = th.check(base, &lowered)?;
            Ok(Some(!ok))
        };
        let prime_minimal = dec(&pair.alpha_prime, n, pair.alpha.q(n))?;
        let next_minimal = dec(&pair.alpha, n + 1, pair.alpha_prime.q(n))?;
        out.push(MinimalityCheck {
            level: i + 1,
            prime_minimal,
            next_minimal,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_two_example() {
        let pair = build_pair(2.0, 2, None).unwrap();
        let qp: Vec<u64> = (0..=2).map(|k| pair.alpha_prime.q(k).to_u64().unwrap()).collect();
        let q: Vec<u64> = (0..=3).map(|k| pair.alpha.q(k).to_u64().unwrap()).collect();
        assert_eq!(&qp[1..], &[4, 289]);
        assert_eq!(&q[1..3], &[2, 17]);
        assert_eq!(pair.alpha_prime.quotient(1).unwrap(), &4);
        assert_eq!(pair.alpha.quotient(2).unwrap(), &8);
        assert_eq!(pair.alpha_prime.quotient(2).unwrap(), &72);
        let rep = verify_membership(&pair).unwrap();
        assert!(rep.all_pass);
        // 289 = 17^2 exactly: zero margin.
        assert_eq!(rep.levels[1].prime_margin, 0.0);
    }

    #[test]
    fn round_trip_and_minimality() {
        for gamma in [1.05, 1.5, 2.0, 2.5] {
            let pair = build_pair(gamma, 5, None).unwrap();
            assert!(verify_membership(&pair).unwrap().all_pass);
            for m in greedy_minimality(&pair).unwrap() {
                assert_ne!(m.prime_minimal, Some(false));
                assert_ne!(m.next_minimal, Some(false));
            }
        }
    }

    #[test]
    fn preconditions() {
        assert!(matches!(build_pair(2.0, 0, None), Err(Error::Precondition(_))));
        assert!(matches!(build_pair(1.0, 3, None), Err(Error::Precondition(_))));
        assert!(matches!(build_exponential_pair(0), Err(Error::Precondition(_))));
        assert!(matches!(build_exponential_pair(4), Err(Error::Resource(_))));
    }

    #[test]
    fn bit_budget_names_level() {
        let err = build_pair_with_budget(3.0, 8, None, 1 << 12).unwrap_err();
        match err {
            Error::Resource(msg) => assert!(msg.contains("level")),
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn exponential_first_level() {
        let pair = build_exponential_pair(1).unwrap();
        assert_eq!(pair.alpha.q(1), &1);
        assert_eq!(pair.alpha_prime.quotient(1).unwrap(), &21);
        let q2 = pair.alpha.q(2);
        assert_eq!(q2.to_string().len(), 28);
        assert!(verify_membership(&pair).unwrap().all_pass);
        assert!(matches!(build_exponential_pair(2), Err(Error::Resource(_))));
    }

    #[test]
    fn golden_pair_fails_membership() {
        let g = ContinuedFraction::golden(10);
        let pair = IntertwinedPair::from_parts(g.clone(), g, 1.5, Regime::Power, 1).unwrap();
        let rep = verify_membership(&pair).unwrap();
        assert!(!rep.all_pass);
        assert_eq!(rep.first_failure, Some(2));
    }

    #[test]
    fn custom_seed() {
        let seed = SeedPrefix {
            alpha: vec![Integer::from(1), Integer::from(2)],
            alpha_prime: vec![Integer::from(3)],
        };
        let pair = build_pair(2.0, 3, Some(&seed)).unwrap();
        assert_eq!(pair.first_level, 2);
        assert_eq!(pair.alpha.depth(), 5);
        assert_eq!(pair.alpha_prime.depth(), 4);
        assert!(verify_membership(&pair).unwrap().all_pass);
        let bad = SeedPrefix {
            alpha: vec![Integer::from(1)],
            alpha_prime: vec![Integer::from(3)],
        };
        assert!(build_pair(2.0, 3, Some(&bad)).is_err());
    }

    #[test]
    fn type_of_components_grows_like_gamma_squared() {
        let pair = build_pair(2.0, 5, None).unwrap();
        assert!(pair.alpha.type_estimate().unwrap() >= 0.9 * 4.0);
        assert!(pair.alpha_prime.type_estimate().unwrap() >= 0.9 * 4.0);
    }
}
