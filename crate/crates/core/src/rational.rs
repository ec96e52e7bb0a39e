//! Exact rational numbers.
//!
//! Every variance, weight and criterion value in the exact part of the crate is a
//! [`Rational`]. Values are kept in lowest terms with a positive denominator, and the
//! textual form is `p/q` (or `p` for integers).

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Rational(BigRational);

impl Rational {
    pub fn new(numerator: i64, denominator: i64) -> Result<Self, Error> {
        if denominator == 0 {
            return Err(Error::Parse(format!("zero denominator in {numerator}/0")));
        }
        Ok(Rational(BigRational::new(BigInt::from(numerator), BigInt::from(denominator))))
    }

    pub fn integer(value: i64) -> Self {
        Rational(BigRational::from_integer(BigInt::from(value)))
    }

    pub fn zero() -> Self {
        Rational(BigRational::zero())
    }

    pub fn one() -> Self {
        Rational(BigRational::one())
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_positive(&self) -> bool {
        self.0.is_positive()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn is_integer(&self) -> bool {
        self.0.is_integer()
    }

    pub fn abs(&self) -> Self {
        Rational(self.0.abs())
    }

    pub fn recip(&self) -> Self {
        Rational(self.0.recip())
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    /// 2^exp for a possibly negative exponent.
    pub fn pow2(exp: i32) -> Self {
        let base = BigRational::from_integer(BigInt::from(2));
        Rational(num_traits::pow::Pow::pow(&base, exp))
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_integer() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl fmt::Debug for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for Rational {
    type Err = Error;

    /// Accepts `p/q`, `p`, and plain decimals such as `2.5` or `-0.125`.
    fn from_str(s: &str) -> Result<Self, Error> {
        let s = s.trim();
        let bad = || Error::Parse(format!("invalid rational `{s}`"));
        if let Some((p, q)) = s.split_once('/') {
            let p: BigInt = p.trim().parse().map_err(|_| bad())?;
            let q: BigInt = q.trim().parse().map_err(|_| bad())?;
            if q.is_zero() {
                return Err(bad());
            }
            return Ok(Rational(BigRational::new(p, q)));
        }
        if let Some((int_part, frac_part)) = s.split_once('.') {
            if frac_part.is_empty() || !frac_part.bytes().all(|b| b.is_ascii_digit()) {
                return Err(bad());
            }
            let negative = int_part.starts_with('-');
            let int_digits = int_part.trim_start_matches(['-', '+']);
            let int_value: BigInt =
                if int_digits.is_empty() { BigInt::zero() } else { int_digits.parse().map_err(|_| bad())? };
            let frac_value: BigInt = frac_part.parse().map_err(|_| bad())?;
            let scale = num_traits::pow(BigInt::from(10), frac_part.len());
            let magnitude = BigRational::new(int_value * &scale + frac_value, scale);
            return Ok(Rational(if negative { -magnitude } else { magnitude }));
        }
        let p: BigInt = s.parse().map_err(|_| bad())?;
        Ok(Rational(BigRational::from_integer(p)))
    }
}

impl Serialize for Rational {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Rational {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl From<i64> for Rational {
    fn from(value: i64) -> Self {
        Rational::integer(value)
    }
}

macro_rules! forward_binop {
    ($trait:ident, $method:ident) => {
        impl $trait for Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                Rational(self.0.$method(rhs.0))
            }
        }
        impl<'a> $trait<&'a Rational> for Rational {
            type Output = Rational;
            fn $method(self, rhs: &'a Rational) -> Rational {
                Rational(self.0.$method(&rhs.0))
            }
        }
        impl<'a> $trait<&'a Rational> for &'a Rational {
            type Output = Rational;
            fn $method(self, rhs: &'a Rational) -> Rational {
                Rational((&self.0).$method(&rhs.0))
            }
        }
    };
}

forward_binop!(Add, add);
forward_binop!(Sub, sub);
forward_binop!(Mul, mul);
forward_binop!(Div, div);

impl Neg for Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-self.0)
    }
}

impl Neg for &Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-&self.0)
    }
}

impl AddAssign<&Rational> for Rational {
    fn add_assign(&mut self, rhs: &Rational) {
        self.0 += &rhs.0;
    }
}

impl SubAssign<&Rational> for Rational {
    fn sub_assign(&mut self, rhs: &Rational) {
        self.0 -= &rhs.0;
    }
}

impl MulAssign<&Rational> for Rational {
    fn mul_assign(&mut self, rhs: &Rational) {
        self.0 *= &rhs.0;
    }
}

impl Sum for Rational {
    fn sum<I: Iterator<Item = Rational>>(iter: I) -> Rational {
        iter.fold(Rational::zero(), |acc, x| acc + x)
    }
}

impl<'a> Sum<&'a Rational> for Rational {
    fn sum<I: Iterator<Item = &'a Rational>>(iter: I) -> Rational {
        iter.fold(Rational::zero(), |acc, x| acc + x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn lowest_terms_and_sign() {
        let q = Rational::new(10, -24).unwrap();
        assert_eq!(q.to_string(), "-5/12");
        assert_eq!(q.denom(), &BigInt::from(12));
        assert_eq!(Rational::new(6, 3).unwrap().to_string(), "2");
    }

    #[test]
    fn parse_forms() {
        assert_eq!("5/12".parse::<Rational>().unwrap(), Rational::new(5, 12).unwrap());
        assert_eq!("3".parse::<Rational>().unwrap(), Rational::integer(3));
        assert_eq!("2.5".parse::<Rational>().unwrap(), Rational::new(5, 2).unwrap());
        assert_eq!("-0.125".parse::<Rational>().unwrap(), Rational::new(-1, 8).unwrap());
        assert!("1/0".parse::<Rational>().is_err());
        assert!("abc".parse::<Rational>().is_err());
        assert!("1.".parse::<Rational>().is_err());
    }

    #[test]
    fn powers_of_two() {
        assert_eq!(Rational::pow2(-1), Rational::new(1, 2).unwrap());
        assert_eq!(Rational::pow2(3), Rational::integer(8));
        assert_eq!(Rational::pow2(0), Rational::one());
    }

    proptest! {
        #[test]
        fn print_parse_round_trip(p in -10_000i64..10_000, q in 1i64..10_000) {
            let x = Rational::new(p, q).unwrap();
            let back: Rational = x.to_string().parse().unwrap();
            prop_assert_eq!(back, x);
        }

        #[test]
        fn field_identities(a in -500i64..500, b in 1i64..500, c in -500i64..500, d in 1i64..500) {
            let x = Rational::new(a, b).unwrap();
            let y = Rational::new(c, d).unwrap();
            prop_assert_eq!(&(&x + &y) - &y, x.clone());
            if !y.is_zero() {
                prop_assert_eq!(&(&x * &y) / &y, x);
            }
        }
    }
}
