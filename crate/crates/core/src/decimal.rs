//! Exact decimal rendering of rationals.

use rug::{Integer, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rounding {
    Floor,
    Ceil,
    HalfUp,
}

fn round_div(num: &Integer, den: &Integer, mode: Rounding) -> Integer {
    match mode {
        Rounding::Floor => num.clone().div_rem_floor(den.clone()).0,
        Rounding::Ceil => num.clone().div_rem_ceil(den.clone()).0,
        Rounding::HalfUp => {
            let twice = Integer::from(num * 2u32) + den;
            twice.div_rem_floor(Integer::from(den * 2u32)).0
        }
    }
}

/// `r` rendered with exactly `decimals` digits after the point.
pub fn to_fixed(r: &Rational, decimals: usize, mode: Rounding) -> String {
    let scale = Integer::from(Integer::u_pow_u(10, decimals as u32));
    let scaled = round_div(&Integer::from(r.numer() * &scale), r.denom(), mode);
    let negative = scaled < 0;
    let digits = scaled.abs().to_string();
    let digits = if digits.len() <= decimals {
        format!("{}{}", "0".repeat(decimals + 1 - digits.len()), digits)
    } else {
        digits
    };
    let (int_part, frac_part) = digits.split_at(digits.len() - decimals);
    let sign = if negative { "-" } else { "" };
    if decimals == 0 {
        format!("{sign}{int_part}")
    } else {
        format!("{sign}{int_part}.{frac_part}")
    }
}

/// Scientific notation with `significant` digits, truncated toward zero:
/// `2.9314187260027917698243e-76`.
pub fn to_scientific(r: &Rational, significant: usize) -> String {
    assert!(significant >= 1);
    if *r == 0 {
        return format!("0.{}e0", "0".repeat(significant - 1));
    }
    let negative = *r < 0;
    let abs = Rational::from(r.abs_ref());
    // Decimal exponent e with 10^e ≤ |r| < 10^(e+1).
    let mut e = estimate_exponent(&abs);
    loop {
        let lo = pow10(e);
        let hi = pow10(e + 1);
        if abs < lo {
            e -= 1;
        } else if abs >= hi {
            e += 1;
        } else {
            break;
        }
    }
    let shift = significant as i64 - 1 - e;
    let scaled = abs * pow10(shift);
    let digits = scaled
        .numer()
        .clone()
        .div_rem_floor(scaled.denom().clone())
        .0
        .to_string();
    let (lead, rest) = digits.split_at(1);
    let sign = if negative { "-" } else { "" };
    if rest.is_empty() {
        format!("{sign}{lead}e{e}")
    } else {
        format!("{sign}{lead}.{rest}e{e}")
    }
}

fn estimate_exponent(abs: &Rational) -> i64 {
    let n = abs.numer().significant_bits() as f64;
    let d = abs.denom().significant_bits() as f64;
    ((n - d) * std::f64::consts::LOG10_2).floor() as i64
}

fn pow10(e: i64) -> Rational {
    let p = Integer::from(Integer::u_pow_u(10, e.unsigned_abs() as u32));
    if e >= 0 {
        Rational::from(p)
    } else {
        Rational::from((Integer::from(1), p))
    }
}

/// Parses a plain decimal string (optional sign, optional fraction) exactly.
pub fn parse_decimal(s: &str) -> Option<Rational> {
    let s = s.trim();
    let (negative, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    let (int_part, frac_part) = match body.split_once('.') {
        Some((i, f)) => (i, f),
        None => (body, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part
        .bytes()
        .chain(frac_part.bytes())
        .all(|b| b.is_ascii_digit())
    {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let num = Integer::from_str_radix(if digits.is_empty() { "0" } else { &digits }, 10).ok()?;
    let den = Integer::from(Integer::u_pow_u(10, frac_part.len() as u32));
    let r = Rational::from((num, den));
    Some(if negative { -r } else { r })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_rounding() {
        let r = Rational::from((9, 8)); // 1.125
        assert_eq!(to_fixed(&r, 2, Rounding::HalfUp), "1.13");
        assert_eq!(to_fixed(&r, 2, Rounding::Floor), "1.12");
        assert_eq!(to_fixed(&r, 2, Rounding::Ceil), "1.13");
        assert_eq!(
            to_fixed(&Rational::from((7, 6)), 5, Rounding::Floor),
            "1.16666"
        );
        assert_eq!(
            to_fixed(&Rational::from((1, 40)), 1, Rounding::Floor),
            "0.0"
        );
        assert_eq!(to_fixed(&Rational::from((3, 1)), 0, Rounding::Floor), "3");
    }

    #[test]
    fn scientific() {
        assert_eq!(to_scientific(&Rational::from((6, 2310)), 5), "2.5974e-3");
        assert_eq!(to_scientific(&Rational::from(12345), 3), "1.23e4");
        assert_eq!(to_scientific(&Rational::from(1), 1), "1e0");
        assert_eq!(to_scientific(&Rational::from((-1, 3)), 2), "-3.3e-1");
    }

    #[test]
    fn parsing() {
        assert_eq!(parse_decimal("1.25"), Some(Rational::from((5, 4))));
        assert_eq!(parse_decimal("-0.5"), Some(Rational::from((-1, 2))));
        assert_eq!(parse_decimal("42"), Some(Rational::from(42)));
        assert_eq!(parse_decimal("1.2.3"), None);
        assert_eq!(parse_decimal(""), None);
        assert_eq!(parse_decimal("1e5"), None);
    }
}
