//! Text formats shared by reports: big integers as decimal strings,
//! rationals as `num/den`, floats with 17 significant digits.

use rug::{Integer, Rational};
use serde::{Deserialize, Deserializer, Serializer};

/// Formats a float with 17 significant digits in scientific notation.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{x:.16e}")
    }
}

/// `num/den` with the denominator always present.
pub fn fmt_rational(q: &Rational) -> String {
    format!("{}/{}", q.numer(), q.denom())
}

pub fn parse_rational(s: &str) -> Option<Rational> {
    let s = s.trim();
    match s.split_once('/') {
        Some((n, d)) => {
            let n = Integer::parse(n.trim()).ok()?;
            let d = Integer::parse(d.trim()).ok()?;
            let (n, d) = (Integer::from(n), Integer::from(d));
            if d == 0 {
                None
            } else {
                Some(Rational::from((n, d)))
            }
        }
        None => Integer::parse(s).ok().map(|n| Rational::from(Integer::from(n))),
    }
}

pub fn parse_integer(s: &str) -> Option<Integer> {
    Integer::parse(s.trim()).ok().map(Integer::from)
}

/// Serde adapter: `Integer` as a decimal string.
pub mod dec_integer {
    use super::*;

    pub fn serialize<S: Serializer>(v: &Integer, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&v.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Integer, D::Error> {
        let s = String::deserialize(d)?;
        parse_integer(&s).ok_or_else(|| serde::de::Error::custom(format!("not an integer: {s:?}")))
    }
}

/// Serde adapter: `Vec<Integer>` as decimal strings.
pub mod dec_integer_vec {
    use super::*;
    use serde::ser::SerializeSeq;

    pub fn serialize<S: Serializer>(v: &[Integer], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(v.len()))?;
        for x in v {
            seq.serialize_element(&x.to_string())?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Integer>, D::Error> {
        let v = Vec::<String>::deserialize(d)?;
        v.iter()
            .map(|s| parse_integer(s).ok_or_else(|| serde::de::Error::custom(format!("not an integer: {s:?}"))))
            .collect()
    }
}

/// Serde adapter: `Rational` as a `num/den` string.
pub mod rational_str {
    use super::*;

    pub fn serialize<S: Serializer>(v: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&fmt_rational(v))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let s = String::deserialize(d)?;
        parse_rational(&s).ok_or_else(|| serde::de::Error::custom(format!("not a rational: {s:?}")))
    }
}

/// Serde adapter: `Vec<Rational>` as `num/den` strings.
pub mod rational_vec {
    use super::*;
    use serde::ser::SerializeSeq;

    pub fn serialize<S: Serializer>(v: &[Rational], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(v.len()))?;
        for x in v {
            seq.serialize_element(&fmt_rational(x))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Rational>, D::Error> {
        let v = Vec::<String>::deserialize(d)?;
        v.iter()
            .map(|s| parse_rational(s).ok_or_else(|| serde::de::Error::custom(format!("not a rational: {s:?}"))))
            .collect()
    }
}

/// Serde adapter: `Option<Rational>` as a `num/den` string or null.
pub mod option_rational_str {
    use super::*;

    pub fn serialize<S: Serializer>(v: &Option<Rational>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(q) => s.serialize_some(&fmt_rational(q)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Rational>, D::Error> {
        let s = Option::<String>::deserialize(d)?;
        s.map(|s| parse_rational(&s).ok_or_else(|| serde::de::Error::custom(format!("not a rational: {s:?}"))))
            .transpose()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_has_17_digits() {
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_f64(2.0), "2.0000000000000000e0");
    }

    #[test]
    fn rational_round_trip() {
        let q = Rational::from((-6, 4));
        assert_eq!(fmt_rational(&q), "-3/2");
        assert_eq!(parse_rational("-3/2").unwrap(), q);
        assert_eq!(parse_rational("7").unwrap(), 7);
        assert!(parse_rational("1/0").is_none());
    }
}
