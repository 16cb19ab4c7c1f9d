//! Exact arbitrary-precision rationals, stored in lowest terms.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

/// An exact rational number. Always in lowest terms with positive denominator.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rational(BigRational);

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ParseRationalError {
    #[error("empty rational literal")]
    Empty,
    #[error("zero denominator in `{0}`")]
    ZeroDenominator(String),
    #[error("cannot parse `{0}` as p/q, integer or terminating decimal")]
    Malformed(String),
}

impl Rational {
    pub fn new(num: i64, den: i64) -> Rational {
        assert!(den != 0, "rational with zero denominator");
        Rational(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn from_bigint(n: BigInt) -> Rational {
        Rational(BigRational::from_integer(n))
    }

    pub fn from_big(num: BigInt, den: BigInt) -> Rational {
        assert!(!den.is_zero(), "rational with zero denominator");
        Rational(BigRational::new(num, den))
    }

    pub fn from_integer(n: i64) -> Rational {
        Rational(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn zero() -> Rational {
        Rational(BigRational::zero())
    }

    pub fn one() -> Rational {
        Rational(BigRational::one())
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn is_positive(&self) -> bool {
        self.0.is_positive()
    }

    pub fn is_integer(&self) -> bool {
        self.0.is_integer()
    }

    pub fn abs(&self) -> Rational {
        Rational(self.0.abs())
    }

    pub fn recip(&self) -> Rational {
        assert!(!self.is_zero(), "reciprocal of zero");
        Rational(self.0.recip())
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    /// True when the denominator is a power of two, i.e. the value is exactly
    /// representable as a dyadic number.
    pub fn is_dyadic(&self) -> bool {
        let d = self.0.denom();
        d.magnitude().count_ones() == 1
    }

    /// Renders the value rounded to `sig` significant decimal digits.
    ///
    /// Values with |v| in [1e-4, 1e30) print in plain positional notation,
    /// anything else in `d.dd...e<exp>` form.
    pub fn decimal_string(&self, sig: usize) -> String {
        let sig = sig.max(1);
        if self.is_zero() {
            return "0".to_string();
        }
        let neg = self.is_negative();
        let a = self.0.numer().magnitude().clone();
        let b = self.0.denom().magnitude().clone();

        // Decimal exponent e with 10^e <= a/b < 10^(e+1).
        let la = a.to_string().len() as i64;
        let lb = b.to_string().len() as i64;
        let mut e = la - lb;
        let ten = num_bigint::BigUint::from(10u32);
        // a/b >= 10^e  <=>  a >= b * 10^e
        let ge_pow = |e: i64| -> bool {
            if e >= 0 {
                a >= &b * ten.pow(e as u32)
            } else {
                &a * ten.pow((-e) as u32) >= b
            }
        };
        while !ge_pow(e) {
            e -= 1;
        }
        while ge_pow(e + 1) {
            e += 1;
        }

        // digits = round(a/b * 10^(sig-1-e)), an integer with `sig` digits.
        let shift = sig as i64 - 1 - e;
        let (num, den) = if shift >= 0 {
            (&a * ten.pow(shift as u32), b.clone())
        } else {
            (a.clone(), &b * ten.pow((-shift) as u32))
        };
        let mut digits = (&num + (&den >> 1u32)) / &den; // round half up
        let mut ds = digits.to_string();
        if ds.len() > sig {
            // rounding carried into an extra digit, e.g. 999.9 -> 1000
            e += 1;
            digits /= &ten;
            ds = digits.to_string();
        }
        while ds.len() < sig {
            ds.insert(0, '0');
        }
        // strip trailing zeros but keep at least one digit
        let trimmed = ds.trim_end_matches('0');
        let keep = trimmed.len().max(1);

        let mut out = String::new();
        if neg {
            out.push('-');
        }
        if (-4..30).contains(&e) {
            if e >= 0 {
                let e = e as usize;
                if e + 1 >= ds.len() {
                    // pure integer, possibly needing trailing zeros
                    out.push_str(&ds);
                    for _ in 0..(e + 1 - ds.len()) {
                        out.push('0');
                    }
                } else if e + 1 >= keep {
                    out.push_str(&ds[..e + 1]);
                } else {
                    out.push_str(&ds[..e + 1]);
                    out.push('.');
                    out.push_str(&ds[e + 1..keep]);
                }
            } else {
                out.push_str("0.");
                for _ in 0..(-e - 1) {
                    out.push('0');
                }
                out.push_str(&ds[..keep]);
            }
        } else {
            out.push_str(&ds[..1]);
            if keep > 1 {
                out.push('.');
                out.push_str(&ds[1..keep]);
            }
            out.push('e');
            out.push_str(&e.to_string());
        }
        out
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
        write!(f, "{}", self)
    }
}

impl FromStr for Rational {
    type Err = ParseRationalError;

    /// Accepts `p/q`, plain integers and terminating decimals (`1.25`), all
    /// converted exactly.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.is_empty() {
            return Err(ParseRationalError::Empty);
        }
        if let Some((num, den)) = s.split_once('/') {
            let n = BigInt::from_str(num.trim())
                .map_err(|_| ParseRationalError::Malformed(s.to_string()))?;
            let d = BigInt::from_str(den.trim())
                .map_err(|_| ParseRationalError::Malformed(s.to_string()))?;
            if d.is_zero() {
                return Err(ParseRationalError::ZeroDenominator(s.to_string()));
            }
            return Ok(Rational(BigRational::new(n, d)));
        }
        if let Some((int_part, frac_part)) = s.split_once('.') {
            if frac_part.is_empty() || !frac_part.chars().all(|c| c.is_ascii_digit()) {
                return Err(ParseRationalError::Malformed(s.to_string()));
            }
            let digits = format!("{}{}", int_part, frac_part);
            let n = BigInt::from_str(&digits)
                .map_err(|_| ParseRationalError::Malformed(s.to_string()))?;
            let d = BigInt::from(10u32).pow(frac_part.len() as u32);
            return Ok(Rational(BigRational::new(n, d)));
        }
        let n = BigInt::from_str(s).map_err(|_| ParseRationalError::Malformed(s.to_string()))?;
        Ok(Rational(BigRational::from_integer(n)))
    }
}

macro_rules! impl_binop {
    ($trait:ident, $method:ident) => {
        impl $trait for &Rational {
            type Output = Rational;
            fn $method(self, rhs: &Rational) -> Rational {
                Rational((&self.0).$method(&rhs.0))
            }
        }
        impl $trait for Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                (&self).$method(&rhs)
            }
        }
    };
}

impl_binop!(Add, add);
impl_binop!(Sub, sub);
impl_binop!(Mul, mul);

impl Div for &Rational {
    type Output = Rational;
    fn div(self, rhs: &Rational) -> Rational {
        assert!(!rhs.is_zero(), "rational division by zero");
        Rational(&self.0 / &rhs.0)
    }
}

impl Div for Rational {
    type Output = Rational;
    fn div(self, rhs: Rational) -> Rational {
        (&self) / (&rhs)
    }
}

impl Neg for &Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-(&self.0))
    }
}

impl Neg for Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-self.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fraction_integer_and_decimal() {
        assert_eq!("3/10".parse::<Rational>().unwrap(), Rational::new(3, 10));
        assert_eq!("-7".parse::<Rational>().unwrap(), Rational::from_integer(-7));
        assert_eq!("1.25".parse::<Rational>().unwrap(), Rational::new(5, 4));
        assert_eq!("-0.5".parse::<Rational>().unwrap(), Rational::new(-1, 2));
        assert!("1/0".parse::<Rational>().is_err());
        assert!("1.2.3".parse::<Rational>().is_err());
        assert!("abc".parse::<Rational>().is_err());
    }

    #[test]
    fn lowest_terms_and_display() {
        let r = Rational::new(6, -4);
        assert_eq!(r.to_string(), "-3/2");
        assert_eq!(Rational::new(8, 2).to_string(), "4");
    }

    #[test]
    fn decimal_rendering() {
        assert_eq!(Rational::new(1, 3).decimal_string(5), "0.33333");
        assert_eq!(Rational::new(2, 1).decimal_string(5), "2");
        assert_eq!(Rational::new(5, 6).decimal_string(6), "0.833333");
        assert_eq!(Rational::new(-1, 8).decimal_string(3), "-0.125");
        assert_eq!(Rational::new(9999, 10).decimal_string(3), "1000");
        assert_eq!(Rational::new(1, 100000).decimal_string(3), "1e-5");
    }
}
