//! Rotation angles and points on the circle and torus.

use crate::cf::ContinuedFraction;
use crate::error::{Error, Result};
use crate::io::{fmt_rational, rational_str, rational_vec};
use rug::{Integer, Rational};
use serde::{Deserialize, Serialize};

/// Where an angle comes from. Only truncations stand in for an irrational,
/// so only truncations are subject to the horizon invariant.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AngleSource {
    /// An exact rational angle.
    Rational(#[serde(with = "rational_str")] Rational),
    /// A finite continued fraction used as an exact rational.
    Exact(ContinuedFraction),
    /// A finite truncation standing in for an irrational.
    Truncation(ContinuedFraction),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Angle {
    frac: Rational,
    source: AngleSource,
}

fn frac_of(q: &Rational) -> Rational {
    let f = q.clone().floor();
    q - f
}

impl Angle {
    pub fn rational(q: Rational) -> Angle {
        Angle {
            frac: frac_of(&q),
            source: AngleSource::Rational(q),
        }
    }

    pub fn exact(cf: ContinuedFraction) -> Angle {
        Angle {
            frac: frac_of(&cf.value()),
            source: AngleSource::Exact(cf),
        }
    }

    pub fn truncation(cf: ContinuedFraction) -> Angle {
        Angle {
            frac: frac_of(&cf.value()),
            source: AngleSource::Truncation(cf),
        }
    }

    pub fn from_source(source: AngleSource) -> Angle {
        match source {
            AngleSource::Rational(q) => Angle::rational(q),
            AngleSource::Exact(cf) => Angle::exact(cf),
            AngleSource::Truncation(cf) => Angle::truncation(cf),
        }
    }

    /// Fractional part in `[0, 1)`.
    pub fn frac(&self) -> &Rational {
        &self.frac
    }

    pub fn source(&self) -> &AngleSource {
        &self.source
    }

    pub fn is_truncation(&self) -> bool {
        matches!(self.source, AngleSource::Truncation(_))
    }

    /// The stored continued fraction, or the canonical expansion of a rational.
    pub fn continued_fraction(&self) -> ContinuedFraction {
        match &self.source {
            AngleSource::Rational(q) => ContinuedFraction::from_rational(q),
            AngleSource::Exact(cf) | AngleSource::Truncation(cf) => cf.clone(),
        }
    }

    /// The stored continued fraction, if the angle came with one.
    pub fn stored_expansion(&self) -> Option<&ContinuedFraction> {
        match &self.source {
            AngleSource::Rational(_) => None,
            AngleSource::Exact(cf) | AngleSource::Truncation(cf) => Some(cf),
        }
    }

    /// Horizon invariant for `iterates` steps at radius `r` (truncations only).
    pub fn check_horizon(&self, iterates: u64, r: &Rational) -> Result<()> {
        match &self.source {
            AngleSource::Truncation(cf) => cf.check_horizon(&Integer::from(iterates), r),
            _ => Ok(()),
        }
    }

    pub fn to_f64(&self) -> f64 {
        self.frac.to_f64()
    }
}

impl Serialize for Angle {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.source.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Angle {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        AngleSource::deserialize(d).map(Angle::from_source)
    }
}

fn check_unit(q: &Rational) -> Result<()> {
    if *q < 0 || *q >= 1 {
        return Err(Error::Precondition(format!(
            "coordinate {} not in [0, 1)",
            fmt_rational(q)
        )));
    }
    Ok(())
}

/// Exact point of the circle `R/Z`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CirclePoint(#[serde(with = "rational_str")] Rational);

impl CirclePoint {
    pub fn new(q: Rational) -> Result<Self> {
        check_unit(&q)?;
        Ok(CirclePoint(q))
    }

    /// Reduces any rational modulo 1.
    pub fn wrap(q: &Rational) -> Self {
        CirclePoint(frac_of(q))
    }

    pub fn value(&self) -> &Rational {
        &self.0
    }
}

/// Exact point of `T^2` or `T^3`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TorusPoint(#[serde(with = "rational_vec")] Vec<Rational>);

impl TorusPoint {
    pub fn new(coords: Vec<Rational>) -> Result<Self> {
        if !(2..=3).contains(&coords.len()) {
            return Err(Error::Precondition(format!(
                "torus dimension must be 2 or 3, got {}",
                coords.len()
            )));
        }
        for c in &coords {
            check_unit(c)?;
        }
        Ok(TorusPoint(coords))
    }

    pub fn wrap(coords: &[Rational]) -> Self {
        TorusPoint(coords.iter().map(frac_of).collect())
    }

    pub fn coords(&self) -> &[Rational] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

/// `||x|| = min_n |x - n|` for a rational.
pub fn circle_norm(x: &Rational) -> Rational {
    let f = frac_of(x);
    let g = Rational::from(1) - &f;
    if f <= g {
        f
    } else {
        g
    }
}
