//! Exact rational values with decimal parsing and shortest-decimal rendering.
//!
//! Arithmetic-puzzle semantics are exact: `10 / 3` is the rational `10/3`,
//! never a float. Model output, however, renders such values as floats
//! (`3.3333333333333335`), so parsing snaps a decimal literal to the nearest
//! rational with denominator at most [`MAX_SNAP_DENOMINATOR`] when that
//! rational lies within relative tolerance [`SNAP_RELATIVE_TOLERANCE`] of the
//! literal. Short literals like `0.5` have small denominators already and
//! pass through unchanged.

use alloc::string::{String, ToString};
use core::cmp::Ordering;
use core::fmt;

use num_bigint::{BigInt, Sign};
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// Largest denominator a parsed decimal may snap to.
pub const MAX_SNAP_DENOMINATOR: u64 = 1_000_000;

/// Relative tolerance for accepting a snapped rational, scaled by
/// `max(1, |literal|)`.
pub const SNAP_RELATIVE_TOLERANCE_NUMER: u64 = 1;
pub const SNAP_RELATIVE_TOLERANCE_DENOM: u64 = 1_000_000_000;

/// An exact rational number.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rational(BigRational);

impl Rational {
    pub fn from_integer(v: i64) -> Self {
        Rational(BigRational::from_integer(BigInt::from(v)))
    }

    pub fn new(numer: i64, denom: i64) -> Self {
        Rational(BigRational::new(BigInt::from(numer), BigInt::from(denom)))
    }

    pub fn zero() -> Self {
        Rational(BigRational::zero())
    }

    pub fn is_integer(&self) -> bool {
        self.0.is_integer()
    }

    pub fn checked_add(&self, rhs: &Rational) -> Rational {
        Rational(&self.0 + &rhs.0)
    }

    pub fn checked_sub(&self, rhs: &Rational) -> Rational {
        Rational(&self.0 - &rhs.0)
    }

    pub fn checked_mul(&self, rhs: &Rational) -> Rational {
        Rational(&self.0 * &rhs.0)
    }

    /// Division; `None` when `rhs` is zero.
    pub fn checked_div(&self, rhs: &Rational) -> Option<Rational> {
        if rhs.0.is_zero() {
            None
        } else {
            Some(Rational(&self.0 / &rhs.0))
        }
    }

    /// Parses a decimal literal (`-12`, `3.25`, `1.3333333333333335`) and
    /// snaps it as described in the module docs. Returns `None` for anything
    /// that is not a plain decimal number.
    pub fn parse_decimal(text: &str) -> Option<Rational> {
        let text = text.trim();
        let (sign, digits) = match text.strip_prefix('-') {
            Some(rest) => (-1i64, rest),
            None => (1i64, text.strip_prefix('+').unwrap_or(text)),
        };
        if digits.is_empty() {
            return None;
        }
        let (int_part, frac_part) = match digits.split_once('.') {
            Some((i, f)) => (i, f),
            None => (digits, ""),
        };
        if int_part.is_empty() && frac_part.is_empty() {
            return None;
        }
        if !int_part.bytes().all(|b| b.is_ascii_digit())
            || !frac_part.bytes().all(|b| b.is_ascii_digit())
        {
            return None;
        }
        let mut numer = BigInt::zero();
        for b in int_part.bytes().chain(frac_part.bytes()) {
            numer = numer * 10 + (b - b'0');
        }
        let denom = BigInt::from(10u32).pow(frac_part.len() as u32);
        let exact = BigRational::new(BigInt::from(sign) * numer, denom);
        Some(Rational(snap(&exact)))
    }

    /// Renders the shortest decimal literal that parses back (via
    /// [`Rational::parse_decimal`]) to exactly this value. Integers render
    /// without a decimal point.
    pub fn render(&self) -> String {
        if self.0.is_integer() {
            return self.0.numer().to_string();
        }
        for digits in 1..=40u32 {
            let candidate = render_with_digits(&self.0, digits);
            if candidate.ends_with('0') {
                // equivalent to a shorter rendering already tried
                continue;
            }
            if let Some(back) = Rational::parse_decimal(&candidate) {
                if back == *self {
                    return candidate;
                }
            }
        }
        // Values this deep into the snap-failure corner cannot round-trip;
        // emit a best-effort long rendering.
        render_with_digits(&self.0, 40)
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

impl fmt::Debug for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Rational({}/{})", self.0.numer(), self.0.denom())
    }
}

/// Correctly-rounded decimal rendering with exactly `digits` fractional
/// digits (round half away from zero).
fn render_with_digits(v: &BigRational, digits: u32) -> String {
    let scale = BigInt::from(10u32).pow(digits);
    // round(v * scale) with ties away from zero
    let scaled_num = v.numer() * &scale;
    let denom = v.denom();
    let (q, r) = (&scaled_num / denom, &scaled_num % denom);
    let mut rounded = q;
    if &r.abs() * 2 >= *denom {
        if scaled_num.sign() == Sign::Minus {
            rounded -= 1;
        } else {
            rounded += 1;
        }
    }
    let negative = rounded.sign() == Sign::Minus;
    let abs = rounded.abs().to_string();
    let padded = if abs.len() <= digits as usize {
        let mut s = String::new();
        for _ in 0..(digits as usize + 1 - abs.len()) {
            s.push('0');
        }
        s + &abs
    } else {
        abs
    };
    let split = padded.len() - digits as usize;
    let mut out = String::new();
    if negative {
        out.push('-');
    }
    out.push_str(&padded[..split]);
    out.push('.');
    out.push_str(&padded[split..]);
    out
}

/// Snaps `exact` to the nearest rational with denominator at most
/// [`MAX_SNAP_DENOMINATOR`] when within tolerance; otherwise returns `exact`.
fn snap(exact: &BigRational) -> BigRational {
    let max_den = BigInt::from(MAX_SNAP_DENOMINATOR);
    if *exact.denom() <= max_den {
        return exact.clone();
    }
    let best = best_approximation(exact, &max_den);
    // |best - exact| <= tol * max(1, |exact|)
    let diff = (&best - exact).abs();
    let scale = if exact.abs() > BigRational::one() {
        exact.abs()
    } else {
        BigRational::one()
    };
    let tol = BigRational::new(
        BigInt::from(SNAP_RELATIVE_TOLERANCE_NUMER),
        BigInt::from(SNAP_RELATIVE_TOLERANCE_DENOM),
    ) * scale;
    if diff <= tol {
        best
    } else {
        exact.clone()
    }
}

/// Best rational approximation to `target` among all rationals with
/// denominator `<= max_den`, by the classic continued-fraction walk over
/// convergents and semiconvergents.
fn best_approximation(target: &BigRational, max_den: &BigInt) -> BigRational {
    let negative = target.numer().sign() == Sign::Minus;
    let t = target.abs();
    let (mut num, mut den) = (t.numer().clone(), t.denom().clone());

    // convergents p/q built from the continued-fraction terms of num/den
    let (mut p0, mut q0) = (BigInt::one(), BigInt::zero());
    let (mut p1, mut q1) = (&num / &den, BigInt::one());
    let mut rem = &num % &den;

    while !rem.is_zero() && q1 <= *max_den {
        num = den;
        den = rem;
        let a = &num / &den;
        rem = &num % &den;
        let p2 = &a * &p1 + &p0;
        let q2 = &a * &q1 + &q0;
        if q2 > *max_den {
            // take the largest semiconvergent still within the bound
            let k = (max_den - &q0) / &q1;
            let sp = &k * &p1 + &p0;
            let sq = &k * &q1 + &q0;
            let conv = BigRational::new(p1.clone(), q1.clone());
            let semi = BigRational::new(sp, sq.clone());
            // the semiconvergent competes only when k >= a/2
            let better = if sq.is_zero() {
                conv.clone()
            } else {
                match (&semi - &t).abs().cmp(&(&conv - &t).abs()) {
                    Ordering::Less => semi,
                    _ => conv.clone(),
                }
            };
            let result = if negative { -better } else { better };
            return result;
        }
        p0 = p1;
        q0 = q1;
        p1 = p2;
        q1 = q2;
    }
    let best = BigRational::new(p1, q1);
    if negative {
        -best
    } else {
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_integers_and_short_decimals() {
        assert_eq!(Rational::parse_decimal("16"), Some(Rational::from_integer(16)));
        assert_eq!(Rational::parse_decimal("-5"), Some(Rational::from_integer(-5)));
        assert_eq!(Rational::parse_decimal("0.5"), Some(Rational::new(1, 2)));
        assert_eq!(Rational::parse_decimal("3.25"), Some(Rational::new(13, 4)));
        assert_eq!(Rational::parse_decimal(""), None);
        assert_eq!(Rational::parse_decimal("1.2.3"), None);
        assert_eq!(Rational::parse_decimal("abc"), None);
    }

    #[test]
    fn snaps_float_renderings_of_thirds() {
        // the float rendering of 4/3 from real model output
        assert_eq!(
            Rational::parse_decimal("1.3333333333333335"),
            Some(Rational::new(4, 3))
        );
        assert_eq!(
            Rational::parse_decimal("3.3333333333333335"),
            Some(Rational::new(10, 3))
        );
        assert_eq!(
            Rational::parse_decimal("1.6666666666666667"),
            Some(Rational::new(5, 3))
        );
        assert_eq!(
            Rational::parse_decimal("-0.3333333333333333"),
            Some(Rational::new(-1, 3))
        );
    }

    #[test]
    fn render_round_trips_exactly() {
        for r in [
            Rational::from_integer(16),
            Rational::from_integer(-3),
            Rational::new(1, 2),
            Rational::new(10, 3),
            Rational::new(-4, 3),
            Rational::new(5, 7),
            Rational::new(22, 7),
            Rational::new(1, 999_983), // large prime denominator within bound
        ] {
            let text = r.render();
            assert_eq!(Rational::parse_decimal(&text), Some(r.clone()), "text {text}");
        }
    }

    #[test]
    fn integers_render_without_point() {
        assert_eq!(Rational::from_integer(16).render(), "16");
        assert_eq!(Rational::new(8, 2).render(), "4");
        assert_eq!(Rational::new(1, 2).render(), "0.5");
    }

    #[test]
    fn exact_arithmetic() {
        let ten = Rational::from_integer(10);
        let three = Rational::from_integer(3);
        let third = ten.checked_div(&three).unwrap();
        assert_eq!(third, Rational::new(10, 3));
        assert_eq!(third.checked_mul(&three), ten);
        assert!(Rational::from_integer(1)
            .checked_div(&Rational::zero())
            .is_none());
    }
}
