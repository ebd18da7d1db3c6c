//! Rational exponents and their text form.

use num_rational::Ratio;
use num_traits::{One, Zero};

use crate::error::{Error, Result};

pub type Q = Ratio<i64>;

pub fn q(n: i64) -> Q {
    Q::from_integer(n)
}

pub fn qf(n: i64, d: i64) -> Q {
    Q::new(n, d)
}

pub fn fmt_q(x: &Q) -> String {
    if x.is_integer() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

/// Parses `a` or `a/b` with an optional leading minus sign.
pub fn parse_q(s: &str) -> Option<Q> {
    let s = s.trim();
    let (num, den) = match s.split_once('/') {
        Some((a, b)) => (a, b),
        None => (s, "1"),
    };
    let valid = |t: &str, signed: bool| {
        let body = if signed { t.strip_prefix('-').unwrap_or(t) } else { t };
        !body.is_empty() && body.len() <= 15 && body.bytes().all(|c| c.is_ascii_digit())
    };
    if !valid(num, true) || !valid(den, false) {
        return None;
    }
    let n: i64 = num.parse().ok()?;
    let d: i64 = den.parse().ok()?;
    if d.is_zero() {
        return None;
    }
    Some(Q::new(n, d))
}

pub fn check_den(x: &Q, cap: i64) -> Result<()> {
    if cap % x.denom() != 0 {
        return Err(Error::DenominatorCapExceeded { den: *x.denom(), cap });
    }
    Ok(())
}

/// Smallest element of (1/cap)Z that is >= x.
pub fn ceil_to(x: &Q, cap: i64) -> Q {
    (*x * q(cap)).ceil() / q(cap)
}

pub fn qmin(a: Option<Q>, b: Option<Q>) -> Option<Q> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (x, None) => x,
        (None, y) => y,
    }
}

pub fn is_unit_q(x: &Q) -> bool {
    x.is_one()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        for s in ["0", "-1/2", "7", "3/64", "-12"] {
            assert_eq!(fmt_q(&parse_q(s).unwrap()), s);
        }
        assert!(parse_q("1/0").is_none());
        assert!(parse_q("1/-2").is_none());
        assert!(parse_q("--1").is_none());
        assert!(parse_q("").is_none());
    }
}
