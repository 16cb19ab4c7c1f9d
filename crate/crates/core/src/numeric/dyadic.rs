//! Dyadic numbers (mantissa × 2^exponent) and outward-rounded intervals.
//!
//! All rounding is directed: every interval operation rounds the lower
//! endpoint down and the upper endpoint up to an absolute granularity of
//! 2^-(bits + GUARD_BITS), so enclosures are sound by construction.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};

use super::rational::Rational;

/// Extra bits of granularity below the requested precision, absorbing
/// accumulated rounding across the nodes of an expression tree.
pub(crate) const GUARD_BITS: u32 = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Round {
    Down,
    Up,
}

/// A dyadic rational `mant * 2^exp`, normalized so `mant` is odd or zero.
#[derive(Clone, PartialEq, Eq)]
pub struct Dyadic {
    mant: BigInt,
    exp: i64,
}

impl Dyadic {
    pub fn zero() -> Dyadic {
        Dyadic { mant: BigInt::zero(), exp: 0 }
    }

    pub fn new(mant: BigInt, exp: i64) -> Dyadic {
        Dyadic { mant, exp }.normalized()
    }

    pub fn from_i64(v: i64) -> Dyadic {
        Dyadic::new(BigInt::from(v), 0)
    }

    /// 2^exp.
    pub fn pow2(exp: i64) -> Dyadic {
        Dyadic { mant: BigInt::from(1), exp }
    }

    fn normalized(mut self) -> Dyadic {
        if self.mant.is_zero() {
            self.exp = 0;
            return self;
        }
        if let Some(tz) = self.mant.trailing_zeros() {
            if tz > 0 {
                self.mant >>= tz;
                self.exp += tz as i64;
            }
        }
        self
    }

    pub fn is_zero(&self) -> bool {
        self.mant.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.mant.is_negative()
    }

    pub fn is_positive(&self) -> bool {
        self.mant.is_positive()
    }

    pub fn neg(&self) -> Dyadic {
        Dyadic { mant: -&self.mant, exp: self.exp }
    }

    pub fn add(&self, other: &Dyadic) -> Dyadic {
        if self.is_zero() {
            return other.clone();
        }
        if other.is_zero() {
            return self.clone();
        }
        let e = self.exp.min(other.exp);
        let a = &self.mant << (self.exp - e) as u64;
        let b = &other.mant << (other.exp - e) as u64;
        Dyadic::new(a + b, e)
    }

    pub fn sub(&self, other: &Dyadic) -> Dyadic {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Dyadic) -> Dyadic {
        Dyadic::new(&self.mant * &other.mant, self.exp + other.exp)
    }

    pub fn cmp_value(&self, other: &Dyadic) -> Ordering {
        match (self.mant.sign(), other.mant.sign()) {
            (num_bigint::Sign::Minus, num_bigint::Sign::Plus | num_bigint::Sign::NoSign) => {
                return Ordering::Less
            }
            (num_bigint::Sign::Plus | num_bigint::Sign::NoSign, num_bigint::Sign::Minus) => {
                return Ordering::Greater
            }
            (num_bigint::Sign::NoSign, num_bigint::Sign::NoSign) => return Ordering::Equal,
            _ => {}
        }
        let e = self.exp.min(other.exp);
        let a = &self.mant << (self.exp - e) as u64;
        let b = &other.mant << (other.exp - e) as u64;
        a.cmp(&b)
    }

    /// Exact comparison against a rational (cross-multiplication).
    pub fn cmp_rational(&self, r: &Rational) -> Ordering {
        // mant * 2^exp  vs  p/q  <=>  mant * q * 2^exp  vs  p
        let lhs0 = &self.mant * r.denom();
        let (lhs, rhs) = if self.exp >= 0 {
            (lhs0 << self.exp as u64, r.numer().clone())
        } else {
            (lhs0, r.numer() << (-self.exp) as u64)
        };
        lhs.cmp(&rhs)
    }

    /// Drops the bits below `2^granularity`, rounding in the given direction.
    pub(crate) fn round_to(&self, granularity: i64, dir: Round) -> Dyadic {
        if self.exp >= granularity || self.is_zero() {
            return self.clone();
        }
        let shift = (granularity - self.exp) as u64;
        let q = &self.mant >> shift;
        let exact = (&q << shift) == self.mant;
        let q = match (dir, exact) {
            (Round::Down, _) | (Round::Up, true) => q,
            (Round::Up, false) => q + 1,
        };
        Dyadic::new(q, granularity)
    }

    /// Directed-rounding division at absolute granularity `2^granularity`.
    pub(crate) fn div(num: &Dyadic, den: &Dyadic, granularity: i64, dir: Round) -> Dyadic {
        assert!(!den.is_zero(), "dyadic division by zero");
        let s = num.exp - den.exp - granularity;
        let (n, d) = if s >= 0 {
            (&num.mant << s as u64, den.mant.clone())
        } else {
            (num.mant.clone(), &den.mant << (-s) as u64)
        };
        let q = match dir {
            Round::Down => n.div_floor(&d),
            Round::Up => n.div_ceil(&d),
        };
        Dyadic::new(q, granularity)
    }

    /// Directed-rounding square root at absolute granularity `2^granularity`.
    /// Requires a nonnegative input.
    pub(crate) fn sqrt(&self, granularity: i64, dir: Round) -> Dyadic {
        assert!(!self.is_negative(), "dyadic sqrt of negative value");
        if self.is_zero() {
            return Dyadic::zero();
        }
        // want round(sqrt(mant * 2^(exp - 2g))) * 2^g
        let k = self.exp - 2 * granularity;
        if k >= 0 {
            let n = &self.mant << k as u64;
            let s = n.sqrt();
            let q = match dir {
                Round::Down => s,
                Round::Up => {
                    if (&s * &s) == n {
                        s
                    } else {
                        s + 1
                    }
                }
            };
            Dyadic::new(q, granularity)
        } else {
            let n = &self.mant >> (-k) as u64;
            match dir {
                // floor(sqrt(floor(x))) <= sqrt(x)
                Round::Down => Dyadic::new(n.sqrt(), granularity),
                // ceil(sqrt(n+1)) >= sqrt(x) since x <= (n+1) * 2^(2g)
                Round::Up => {
                    let n1: BigInt = n + 1u32;
                    let s = n1.sqrt();
                    let q = if (&s * &s) >= n1 { s } else { s + 1 };
                    Dyadic::new(q, granularity)
                }
            }
        }
    }

    pub fn to_f64(&self) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        let bits = self.mant.bits();
        let (m, e) = if bits > 64 {
            let shift = (bits - 64) as i64;
            ((&self.mant >> shift as u64).to_f64().unwrap(), self.exp + shift)
        } else {
            (self.mant.to_f64().unwrap(), self.exp)
        };
        let e = e.clamp(-2000, 2000) as i32;
        m * f64::exp2(e as f64)
    }

    pub fn to_rational(&self) -> Rational {
        if self.exp >= 0 {
            Rational::from_bigint(&self.mant << self.exp as u64)
        } else {
            Rational::from_big(self.mant.clone(), BigInt::from(1) << (-self.exp) as u64)
        }
    }
}

impl fmt::Debug for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}*2^{}", self.mant, self.exp)
    }
}

/// A closed interval with dyadic endpoints; the represented real always lies
/// within `[lo, hi]`. `bits` records the precision the interval was computed
/// at (granularity 2^-(bits + GUARD_BITS)).
#[derive(Clone, Debug)]
pub struct DyadicInterval {
    lo: Dyadic,
    hi: Dyadic,
    bits: u32,
}

impl DyadicInterval {
    pub fn new(lo: Dyadic, hi: Dyadic, bits: u32) -> DyadicInterval {
        debug_assert!(lo.cmp_value(&hi) != Ordering::Greater, "inverted interval");
        DyadicInterval { lo, hi, bits }
    }

    pub fn point(d: Dyadic, bits: u32) -> DyadicInterval {
        DyadicInterval { lo: d.clone(), hi: d, bits }
    }

    fn granularity(bits: u32) -> i64 {
        -((bits + GUARD_BITS) as i64)
    }

    pub fn from_rational(r: &Rational, bits: u32) -> DyadicInterval {
        if r.is_dyadic() {
            let den_bits = r.denom().bits() - 1;
            let d = Dyadic::new(r.numer().clone(), -(den_bits as i64));
            return DyadicInterval::point(d, bits);
        }
        let g = Self::granularity(bits);
        let num = Dyadic::new(r.numer().clone(), 0);
        let den = Dyadic::new(r.denom().clone(), 0);
        DyadicInterval::new(
            Dyadic::div(&num, &den, g, Round::Down),
            Dyadic::div(&num, &den, g, Round::Up),
            bits,
        )
    }

    pub fn lo(&self) -> &Dyadic {
        &self.lo
    }

    pub fn hi(&self) -> &Dyadic {
        &self.hi
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn width(&self) -> Dyadic {
        self.hi.sub(&self.lo)
    }

    pub fn midpoint(&self) -> Dyadic {
        Dyadic::new(
            {
                let e = self.lo.exp.min(self.hi.exp) - 1;
                let a = &self.lo.mant << (self.lo.exp - e) as u64;
                let b = &self.hi.mant << (self.hi.exp - e) as u64;
                (a + b) >> 1u64
            },
            self.lo.exp.min(self.hi.exp) - 1,
        )
    }

    pub fn contains_zero(&self) -> bool {
        !self.lo.is_positive() && !self.hi.is_negative()
    }

    pub fn is_strictly_positive(&self) -> bool {
        self.lo.is_positive()
    }

    pub fn is_strictly_negative(&self) -> bool {
        self.hi.is_negative()
    }

    pub fn contains(&self, other: &DyadicInterval) -> bool {
        self.lo.cmp_value(&other.lo) != Ordering::Greater
            && self.hi.cmp_value(&other.hi) != Ordering::Less
    }

    /// Intersection of two enclosures of the same real value.
    pub fn intersect(&self, other: &DyadicInterval, bits: u32) -> DyadicInterval {
        let lo = if self.lo.cmp_value(&other.lo) == Ordering::Less {
            other.lo.clone()
        } else {
            self.lo.clone()
        };
        let hi = if self.hi.cmp_value(&other.hi) == Ordering::Greater {
            other.hi.clone()
        } else {
            self.hi.clone()
        };
        // Both contain the true value, so the intersection is nonempty.
        DyadicInterval::new(lo, hi, bits)
    }

    pub fn add(&self, other: &DyadicInterval, bits: u32) -> DyadicInterval {
        let g = Self::granularity(bits);
        DyadicInterval::new(
            self.lo.add(&other.lo).round_to(g, Round::Down),
            self.hi.add(&other.hi).round_to(g, Round::Up),
            bits,
        )
    }

    pub fn sub(&self, other: &DyadicInterval, bits: u32) -> DyadicInterval {
        let g = Self::granularity(bits);
        DyadicInterval::new(
            self.lo.sub(&other.hi).round_to(g, Round::Down),
            self.hi.sub(&other.lo).round_to(g, Round::Up),
            bits,
        )
    }

    pub fn mul(&self, other: &DyadicInterval, bits: u32) -> DyadicInterval {
        let g = Self::granularity(bits);
        let cands = [
            self.lo.mul(&other.lo),
            self.lo.mul(&other.hi),
            self.hi.mul(&other.lo),
            self.hi.mul(&other.hi),
        ];
        let mut lo = cands[0].clone();
        let mut hi = cands[0].clone();
        for c in &cands[1..] {
            if c.cmp_value(&lo) == Ordering::Less {
                lo = c.clone();
            }
            if c.cmp_value(&hi) == Ordering::Greater {
                hi = c.clone();
            }
        }
        DyadicInterval::new(lo.round_to(g, Round::Down), hi.round_to(g, Round::Up), bits)
    }

    /// Interval division; the divisor must not contain zero.
    pub fn div(&self, other: &DyadicInterval, bits: u32) -> Option<DyadicInterval> {
        if other.contains_zero() {
            return None;
        }
        let g = Self::granularity(bits);
        let pairs = [
            (&self.lo, &other.lo),
            (&self.lo, &other.hi),
            (&self.hi, &other.lo),
            (&self.hi, &other.hi),
        ];
        let mut lo: Option<Dyadic> = None;
        let mut hi: Option<Dyadic> = None;
        for (n, d) in pairs {
            let down = Dyadic::div(n, d, g, Round::Down);
            let up = Dyadic::div(n, d, g, Round::Up);
            lo = Some(match lo {
                None => down,
                Some(cur) => {
                    if down.cmp_value(&cur) == Ordering::Less {
                        down
                    } else {
                        cur
                    }
                }
            });
            hi = Some(match hi {
                None => up,
                Some(cur) => {
                    if up.cmp_value(&cur) == Ordering::Greater {
                        up
                    } else {
                        cur
                    }
                }
            });
        }
        Some(DyadicInterval::new(lo.unwrap(), hi.unwrap(), bits))
    }

    /// Interval square root. The lower endpoint is clamped to zero; callers
    /// must have certified the represented value nonnegative.
    pub fn sqrt(&self, bits: u32) -> Option<DyadicInterval> {
        if self.hi.is_negative() {
            return None;
        }
        let g = Self::granularity(bits);
        let lo = if self.lo.is_negative() { Dyadic::zero() } else { self.lo.clone() };
        Some(DyadicInterval::new(
            lo.sqrt(g, Round::Down),
            self.hi.sqrt(g, Round::Up),
            bits,
        ))
    }

    pub fn to_f64_mid(&self) -> f64 {
        self.midpoint().to_f64()
    }
}
