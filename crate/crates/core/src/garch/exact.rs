//! Long-run variance in exact rational arithmetic.
//!
//! Decimal coefficients such as `0.1` have no finite binary expansion, so
//! `ω / (1 − α − β)` evaluated in `f64` can land an ulp or two away from the
//! decimal answer. Parsing the decimals into rationals avoids that.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

/// Parses `"0.125"`, `"-3"`, `"1e-2"` or `"1/8"` into an exact rational.
pub fn parse_decimal(s: &str) -> Result<BigRational> {
    let bad = || Error::Config(format!("`{s}` is not a decimal number"));
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(n, d));
    }
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let (neg, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int, frac) = digits.split_once('.').unwrap_or((digits, ""));
    if int.is_empty() && frac.is_empty() || !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let all: BigInt = format!("{int}{frac}0").parse::<BigInt>().map_err(|_| bad())? / 10;
    let scale = exp - frac.len() as i32;
    let ten = BigInt::from(10);
    let mut value = BigRational::from_integer(all);
    if scale >= 0 {
        value *= BigRational::from_integer(num_traits::pow(ten, scale as usize));
    } else {
        value /= BigRational::from_integer(num_traits::pow(ten, (-scale) as usize));
    }
    Ok(if neg { -value } else { value })
}

/// `ω / (1 − Σα − Σγ/2 − Σβ)`. `gamma` is empty for the symmetric model.
pub fn unconditional_variance(
    omega: &BigRational,
    alpha: &[BigRational],
    beta: &[BigRational],
    gamma: &[BigRational],
) -> Result<BigRational> {
    let two = BigRational::from_integer(BigInt::from(2));
    let mut denom = BigRational::one();
    for a in alpha.iter().chain(beta) {
        denom -= a;
    }
    for g in gamma {
        denom -= g / &two;
    }
    if !denom.is_positive() {
        return Err(Error::Constraint(format!(
            "non-stationary parameters: 1 − persistence = {denom}"
        )));
    }
    Ok(omega / denom)
}
