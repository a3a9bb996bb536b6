//! Exact rational scalars. Coordinates of box sets are rationals; the hot
//! paths work on `u64` numerators over a per-set common denominator with an
//! `f64` shadow, and only fall back to `BigRational` when an `f64` comparison
//! is too close to call.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rat = BigRational;

/// Largest common denominator accepted for box-set coordinates. Keeps exact
/// integer kernels inside `i128` head-room.
pub const MAX_DENOM: u64 = 1 << 40;

pub fn rat(num: i64, den: i64) -> Rat {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

pub fn rat_u64(num: u64, den: u64) -> Rat {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

pub fn rat_zero() -> Rat {
    BigRational::zero()
}

pub fn rat_one() -> Rat {
    BigRational::one()
}

/// Parses "p/q" or "p" (integers, optional sign) into an exact rational.
pub fn parse_rat(s: &str) -> Result<Rat> {
    let s = s.trim();
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let num: BigInt = num
        .parse()
        .map_err(|_| Error::Format(format!("bad rational numerator in {s:?}")))?;
    let den: BigInt = den
        .parse()
        .map_err(|_| Error::Format(format!("bad rational denominator in {s:?}")))?;
    if den.is_zero() {
        return Err(Error::Format(format!("zero denominator in {s:?}")));
    }
    Ok(BigRational::new(num, den))
}

/// Like [`parse_rat`], but also accepts decimal literals such as "1.5".
pub fn parse_rat_flexible(s: &str) -> Result<Rat> {
    let s = s.trim();
    if let Some((int_part, frac_part)) = s.split_once('.') {
        if frac_part.is_empty() || !frac_part.bytes().all(|b| b.is_ascii_digit()) {
            return Err(Error::Format(format!("bad decimal literal {s:?}")));
        }
        let neg = int_part.starts_with('-');
        let int_part = if int_part.is_empty() || int_part == "-" || int_part == "+" {
            "0"
        } else {
            int_part.trim_start_matches(['+', '-'])
        };
        let int: BigInt = int_part
            .parse()
            .map_err(|_| Error::Format(format!("bad decimal literal {s:?}")))?;
        let frac: BigInt = frac_part
            .parse()
            .map_err(|_| Error::Format(format!("bad decimal literal {s:?}")))?;
        let scale = BigInt::from(10u32).pow(frac_part.len() as u32);
        let mut v = BigRational::new(int * &scale + frac, scale);
        if neg {
            v = -v;
        }
        return Ok(v);
    }
    parse_rat(s)
}

/// Formats a rational as "p/q" ("p" when the denominator is 1), fully reduced.
pub fn format_rat(r: &Rat) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn rat_to_f64(r: &Rat) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        if r.is_negative() {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_format_round_trip() {
        for s in ["1/4", "-3/7", "0", "12", "355/113"] {
            let r = parse_rat(s).unwrap();
            assert_eq!(format_rat(&r), s.trim_start_matches('+'));
        }
        assert_eq!(format_rat(&parse_rat("2/4").unwrap()), "1/2");
        assert!(parse_rat("1/0").is_err());
        assert!(parse_rat("a/b").is_err());
    }

    #[test]
    fn converts_to_f64() {
        assert_eq!(rat_to_f64(&rat(1, 4)), 0.25);
        assert_eq!(rat_to_f64(&rat(-1, 2)), -0.5);
    }

    #[test]
    fn flexible_parser_accepts_decimals() {
        assert_eq!(parse_rat_flexible("1.5").unwrap(), rat(3, 2));
        assert_eq!(parse_rat_flexible("-0.25").unwrap(), rat(-1, 4));
        assert_eq!(parse_rat_flexible(".5").unwrap(), rat(1, 2));
        assert_eq!(parse_rat_flexible("3/2").unwrap(), rat(3, 2));
        assert!(parse_rat_flexible("1.").is_err());
        assert!(parse_rat_flexible("1.2.3").is_err());
    }
}
