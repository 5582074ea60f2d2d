//! Exact rational lengths and their string form (`"num/den"`).

use num_rational::Ratio;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serializer};

use crate::error::{Error, Result};

/// An exact non-negative length.
pub type Length = Ratio<i64>;

pub fn int(n: i64) -> Length {
    Ratio::from_integer(n)
}

pub fn frac(num: i64, den: i64) -> Length {
    Ratio::new(num, den)
}

/// Formats a length as `"num/den"`; integers keep the `/1` suffix so every
/// serialized length has the same shape.
pub fn format_length(x: &Length) -> String {
    format!("{}/{}", x.numer(), x.denom())
}

/// Parses `"num/den"` or a bare integer.
pub fn parse_length(s: &str) -> Result<Length> {
    let bad = |m: &str| Error::Parse {
        location: format!("length `{s}`"),
        message: m.to_string(),
    };
    let s = s.trim();
    let (n, d) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let n: i64 = n.parse().map_err(|_| bad("numerator is not an integer"))?;
    let d: i64 = d.parse().map_err(|_| bad("denominator is not an integer"))?;
    if d == 0 {
        return Err(bad("zero denominator"));
    }
    Ok(Ratio::new(n, d))
}

pub fn to_f64(x: &Length) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

pub fn max_len(a: Length, b: Length) -> Length {
    if a >= b {
        a
    } else {
        b
    }
}

pub fn is_zero(x: &Length) -> bool {
    x.is_zero()
}

/// Serde adapter for `Length` fields stored as fraction strings.
pub mod serde_frac {
    use super::*;

    pub fn serialize<S: Serializer>(x: &Length, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format_length(x))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Length, D::Error> {
        let s = String::deserialize(d)?;
        parse_length(&s).map_err(serde::de::Error::custom)
    }
}

/// Serde adapter for `Option<Length>`.
pub mod serde_frac_opt {
    use super::*;

    pub fn serialize<S: Serializer>(
        x: &Option<Length>,
        s: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        match x {
            Some(x) => s.serialize_some(&format_length(x)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<Option<Length>, D::Error> {
        let s = Option::<String>::deserialize(d)?;
        s.map(|s| parse_length(&s).map_err(serde::de::Error::custom))
            .transpose()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_fraction_strings() {
        assert_eq!(format_length(&frac(2, 4)), "1/2");
        assert_eq!(format_length(&int(3)), "3/1");
        assert_eq!(parse_length("6/4").unwrap(), frac(3, 2));
        assert_eq!(parse_length(" 7 ").unwrap(), int(7));
        assert!(parse_length("1/0").is_err());
        assert!(parse_length("x/2").is_err());
    }
}
