//! Exact rational scalars: parsing, formatting, small helpers.
//!
//! All algebraic modules of the crate compute over `Rat` (arbitrary
//! precision rationals).  Serialized form is always the string `p/q` or a
//! plain integer, never a float.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, ToPrimitive, Zero};

/// The exact scalar type used throughout the crate.
pub type Rat = BigRational;

/// Shorthand for a rational from an integer pair. Panics on `q == 0`.
pub fn rat(p: i64, q: i64) -> Rat {
    assert!(q != 0, "zero denominator");
    Rat::new(BigInt::from(p), BigInt::from(q))
}

/// Rational from an integer.
pub fn rat_int(p: i64) -> Rat {
    Rat::from_integer(BigInt::from(p))
}

/// `x^n` for small non-negative exponents.
pub fn rat_pow(x: &Rat, n: u32) -> Rat {
    let mut acc = Rat::one();
    for _ in 0..n {
        acc *= x;
    }
    acc
}

/// Parses `p`, `-p`, `p/q` with optional surrounding whitespace.
///
/// Unlike `BigRational::from_str` this rejects a zero denominator with an
/// error instead of panicking.
pub fn parse_rat(s: &str) -> Result<Rat, String> {
    let s = s.trim();
    if s.is_empty() {
        return Err("empty rational literal".to_string());
    }
    let (numer, denom) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), Some(d.trim())),
        None => (s, None),
    };
    let n: BigInt = numer
        .parse()
        .map_err(|_| format!("invalid integer `{numer}`"))?;
    let d: BigInt = match denom {
        Some(d) => d
            .parse()
            .map_err(|_| format!("invalid denominator `{d}`"))?,
        None => BigInt::one(),
    };
    if d.is_zero() {
        return Err(format!("zero denominator in `{s}`"));
    }
    Ok(Rat::new(n, d))
}

/// Canonical string form: `p` if integral, else `p/q` with positive `q`.
pub fn format_rat(x: &Rat) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

/// Parses a comma-separated vector of rationals, e.g. `1,0,-1/2`.
pub fn parse_rat_vec(s: &str) -> Result<Vec<Rat>, String> {
    s.split(',').map(parse_rat).collect()
}

/// Lossy conversion to binary64 for the numeric modules.
pub fn rat_to_f64(x: &Rat) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Exact absolute value.
pub fn rat_abs(x: &Rat) -> Rat {
    x.abs()
}
