//! Exact rational scalars.
//!
//! Every quantity in this crate is a `Rat`: an arbitrary-precision rational
//! kept in lowest terms with a positive denominator. There is no floating
//! point anywhere; equality is equality.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};
use std::str::FromStr;

use num::bigint::BigInt;
use num::rational::BigRational;
use num::traits::{One, Signed, Zero};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::Error;

/// An exact rational number.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Rat(BigRational);

impl Rat {
    pub fn zero() -> Self {
        Rat(BigRational::zero())
    }

    pub fn one() -> Self {
        Rat(BigRational::one())
    }

    pub fn from_int(n: i64) -> Self {
        Rat(BigRational::from_integer(BigInt::from(n)))
    }

    /// `num/den`, reduced. Panics on a zero denominator.
    pub fn new(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        Rat(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn from_big(num: BigInt, den: BigInt) -> Self {
        assert!(!den.is_zero(), "zero denominator");
        Rat(BigRational::new(num, den))
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.0.is_one()
    }

    pub fn is_integer(&self) -> bool {
        self.0.is_integer()
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn recip(&self) -> Self {
        assert!(!self.is_zero(), "division by zero");
        Rat(self.0.clone().recip())
    }

    pub fn abs(&self) -> Self {
        Rat(self.0.abs())
    }

    pub fn pow(&self, exp: u32) -> Self {
        let mut out = Rat::one();
        for _ in 0..exp {
            out = &out * self;
        }
        out
    }

    /// Decimal rendering for human-facing CSV output; not used in computation.
    pub fn to_f64(&self) -> f64 {
        let n = self.0.numer();
        let d = self.0.denom();
        str::parse::<f64>(&n.to_string()).unwrap_or(f64::NAN)
            / str::parse::<f64>(&d.to_string()).unwrap_or(f64::NAN)
    }

    /// Serialized form: `"num/den"` with the denominator omitted when 1.
    pub fn to_frac_string(&self) -> String {
        if self.0.denom().is_one() {
            self.0.numer().to_string()
        } else {
            format!("{}/{}", self.0.numer(), self.0.denom())
        }
    }

    pub fn parse_frac(s: &str) -> Result<Self, Error> {
        let bad = || Error::Parse(format!("invalid rational `{s}`"));
        match s.split_once('/') {
            None => {
                let n = BigInt::from_str(s.trim()).map_err(|_| bad())?;
                Ok(Rat(BigRational::from_integer(n)))
            }
            Some((n, d)) => {
                let n = BigInt::from_str(n.trim()).map_err(|_| bad())?;
                let d = BigInt::from_str(d.trim()).map_err(|_| bad())?;
                if d.is_zero() {
                    return Err(bad());
                }
                Ok(Rat(BigRational::new(n, d)))
            }
        }
    }
}

impl fmt::Display for Rat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_frac_string())
    }
}

impl fmt::Debug for Rat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_frac_string())
    }
}

impl FromStr for Rat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        Rat::parse_frac(s)
    }
}

impl Serialize for Rat {
    fn serialize<S: Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        ser.serialize_str(&self.to_frac_string())
    }
}

impl<'de> Deserialize<'de> for Rat {
    fn deserialize<D: Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        let s = String::deserialize(de)?;
        Rat::parse_frac(&s).map_err(D::Error::custom)
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident) => {
        impl $trait for &Rat {
            type Output = Rat;
            fn $method(self, rhs: &Rat) -> Rat {
                Rat((&self.0).$method(&rhs.0))
            }
        }
        impl $trait for Rat {
            type Output = Rat;
            fn $method(self, rhs: Rat) -> Rat {
                Rat(self.0.$method(rhs.0))
            }
        }
    };
}

binop!(Add, add);
binop!(Sub, sub);
binop!(Mul, mul);

impl Div for &Rat {
    type Output = Rat;
    fn div(self, rhs: &Rat) -> Rat {
        assert!(!rhs.is_zero(), "division by zero");
        Rat(&self.0 / &rhs.0)
    }
}

impl Neg for &Rat {
    type Output = Rat;
    fn neg(self) -> Rat {
        Rat(-&self.0)
    }
}

impl Neg for Rat {
    type Output = Rat;
    fn neg(self) -> Rat {
        Rat(-self.0)
    }
}

impl AddAssign<&Rat> for Rat {
    fn add_assign(&mut self, rhs: &Rat) {
        self.0 += &rhs.0;
    }
}

impl SubAssign<&Rat> for Rat {
    fn sub_assign(&mut self, rhs: &Rat) {
        self.0 -= &rhs.0;
    }
}

impl Sum for Rat {
    fn sum<I: Iterator<Item = Rat>>(iter: I) -> Rat {
        let mut acc = Rat::zero();
        for x in iter {
            acc += &x;
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reduced_and_positive_denominator() {
        let r = Rat::new(4, -6);
        assert_eq!(r.to_frac_string(), "-2/3");
        assert_eq!(r.denom(), &BigInt::from(3));
    }

    #[test]
    fn frac_string_roundtrip() {
        for s in ["0", "7", "-3", "1/2", "-5/17"] {
            assert_eq!(Rat::parse_frac(s).unwrap().to_frac_string(), s);
        }
        // denominator 1 collapses
        assert_eq!(Rat::parse_frac("3/1").unwrap().to_frac_string(), "3");
        assert!(Rat::parse_frac("1/0").is_err());
        assert!(Rat::parse_frac("x").is_err());
    }

    #[test]
    fn exact_arithmetic() {
        let a = Rat::new(1, 3);
        let b = Rat::new(1, 6);
        assert_eq!(&a + &b, Rat::new(1, 2));
        assert_eq!(&a - &b, Rat::new(1, 6));
        assert_eq!(&a * &b, Rat::new(1, 18));
        assert_eq!(&a / &b, Rat::from_int(2));
        assert_eq!(a.pow(3), Rat::new(1, 27));
    }
}
