//! Radical expression trees with certified interval enclosures.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use super::dyadic::DyadicInterval;
use super::rational::Rational;
use super::NumericError;

/// Default precision (bits) for enclosures computed at construction time.
pub const DEFAULT_WORKING_BITS: u32 = 64;
/// Default maximum precision for sign determination and comparisons.
pub const DEFAULT_MAX_BITS: u32 = 256;
/// Two values are reported equal when |a - b| is enclosed within 2^-TAU_EQ_EXP
/// at maximum precision and the sign of the difference cannot be certified.
pub const TAU_EQ_EXP: u32 = 80;

/// Hard ceiling for internal precision escalation when a divisor enclosure
/// still straddles zero (divisors are certified nonzero at construction, so
/// escalation terminates far below this).
const ESCALATION_CAP: u32 = 4096;

#[derive(Debug)]
enum Expr {
    Rat(Rational),
    Add(Arc<Expr>, Arc<Expr>),
    Sub(Arc<Expr>, Arc<Expr>),
    Mul(Arc<Expr>, Arc<Expr>),
    Div(Arc<Expr>, Arc<Expr>),
    Sqrt(Arc<Expr>),
}

/// Verdict of a certified comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cmp {
    Less,
    Equal,
    Greater,
}

impl Cmp {
    pub fn reverse(self) -> Cmp {
        match self {
            Cmp::Less => Cmp::Greater,
            Cmp::Greater => Cmp::Less,
            Cmp::Equal => Cmp::Equal,
        }
    }
}

/// The four field operations, as data (mirrors the operation surface of the
/// expression language).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
}

/// An exact real value: an expression tree over rationals closed under
/// (+, -, *, /, sqrt), an outward-rounded dyadic enclosure, and the exact
/// rational value whenever the expression happens to be rational.
///
/// Values are immutable; [`RealScalar::refine`] returns a new value whose
/// enclosure is nested inside the old one. Rational values never involve the
/// interval machinery in arithmetic or comparisons. The enclosure of a
/// rational with a non-power-of-two denominator is the tightest
/// working-precision interval around it (a true point interval is kept
/// whenever the value is dyadic); the `exact` field is authoritative in
/// either case.
#[derive(Clone)]
pub struct RealScalar {
    expr: Arc<Expr>,
    exact: Option<Rational>,
    enclosure: DyadicInterval,
    bits: u32,
}

struct Evaluator {
    memo: HashMap<(usize, u32), DyadicInterval>,
}

/// Divisor enclosure still straddles zero at the escalation cap.
struct Straddle;

impl Evaluator {
    fn new() -> Evaluator {
        Evaluator { memo: HashMap::new() }
    }

    fn eval(&mut self, e: &Arc<Expr>, bits: u32) -> Result<DyadicInterval, Straddle> {
        let key = (Arc::as_ptr(e) as usize, bits);
        if let Some(iv) = self.memo.get(&key) {
            return Ok(iv.clone());
        }
        let iv = match &**e {
            Expr::Rat(r) => DyadicInterval::from_rational(r, bits),
            Expr::Add(a, b) => self.eval(a, bits)?.add(&self.eval(b, bits)?, bits),
            Expr::Sub(a, b) => self.eval(a, bits)?.sub(&self.eval(b, bits)?, bits),
            Expr::Mul(a, b) => self.eval(a, bits)?.mul(&self.eval(b, bits)?, bits),
            Expr::Div(a, b) => {
                let num = self.eval(a, bits)?;
                let mut db = bits;
                let mut den = self.eval(b, bits)?;
                loop {
                    match num.div(&den, bits) {
                        Some(q) => break q,
                        None => {
                            if db >= ESCALATION_CAP {
                                return Err(Straddle);
                            }
                            db = (db * 2).min(ESCALATION_CAP);
                            den = self.eval(b, db)?;
                        }
                    }
                }
            }
            Expr::Sqrt(a) => {
                // construction certifies the radicand nonnegative, so the
                // upper endpoint is >= the true value >= 0
                self.eval(a, bits)?
                    .sqrt(bits)
                    .expect("sqrt radicand certified nonnegative")
            }
        };
        self.memo.insert(key, iv.clone());
        Ok(iv)
    }
}

fn eval_expr(e: &Arc<Expr>, bits: u32) -> Result<DyadicInterval, Straddle> {
    Evaluator::new().eval(e, bits)
}

impl RealScalar {
    pub fn from_rational(r: Rational) -> RealScalar {
        let enclosure = DyadicInterval::from_rational(&r, DEFAULT_WORKING_BITS);
        RealScalar {
            expr: Arc::new(Expr::Rat(r.clone())),
            exact: Some(r),
            enclosure,
            bits: DEFAULT_WORKING_BITS,
        }
    }

    pub fn from_integer(n: i64) -> RealScalar {
        RealScalar::from_rational(Rational::from_integer(n))
    }

    pub fn zero() -> RealScalar {
        RealScalar::from_integer(0)
    }

    pub fn exact(&self) -> Option<&Rational> {
        self.exact.as_ref()
    }

    pub fn is_exact(&self) -> bool {
        self.exact.is_some()
    }

    pub fn enclosure(&self) -> &DyadicInterval {
        &self.enclosure
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    fn compose(expr: Expr, exact: Option<Rational>, bits: u32) -> RealScalar {
        let expr = Arc::new(expr);
        let enclosure = match &exact {
            Some(r) => DyadicInterval::from_rational(r, bits),
            None => eval_expr(&expr, bits)
                .unwrap_or_else(|_| panic!("divisor certified nonzero at construction")),
        };
        RealScalar { expr, exact, enclosure, bits }
    }

    pub fn add(&self, other: &RealScalar) -> RealScalar {
        let bits = self.bits.max(other.bits);
        let exact = match (&self.exact, &other.exact) {
            (Some(a), Some(b)) => Some(a + b),
            _ => None,
        };
        Self::compose(Expr::Add(self.expr.clone(), other.expr.clone()), exact, bits)
    }

    pub fn sub(&self, other: &RealScalar) -> RealScalar {
        let bits = self.bits.max(other.bits);
        let exact = match (&self.exact, &other.exact) {
            (Some(a), Some(b)) => Some(a - b),
            _ => None,
        };
        Self::compose(Expr::Sub(self.expr.clone(), other.expr.clone()), exact, bits)
    }

    pub fn mul(&self, other: &RealScalar) -> RealScalar {
        let bits = self.bits.max(other.bits);
        let exact = match (&self.exact, &other.exact) {
            (Some(a), Some(b)) => Some(a * b),
            _ => None,
        };
        Self::compose(Expr::Mul(self.expr.clone(), other.expr.clone()), exact, bits)
    }

    pub fn neg(&self) -> RealScalar {
        RealScalar::zero().sub(self)
    }

    /// Division with certified-nonzero divisor.
    pub fn div(&self, other: &RealScalar) -> Result<RealScalar, NumericError> {
        self.div_at(other, DEFAULT_MAX_BITS)
    }

    pub fn div_at(&self, other: &RealScalar, max_bits: u32) -> Result<RealScalar, NumericError> {
        match &other.exact {
            Some(r) if r.is_zero() => return Err(NumericError::DivisionByZero),
            Some(_) => {}
            None => {
                if other.cmp_at(&RealScalar::zero(), max_bits) == Cmp::Equal {
                    return Err(NumericError::AmbiguousSign {
                        context: other.to_string(),
                        max_bits,
                    });
                }
            }
        }
        let bits = self.bits.max(other.bits);
        let exact = match (&self.exact, &other.exact) {
            (Some(a), Some(b)) => Some(a / b),
            _ => None,
        };
        Ok(Self::compose(
            Expr::Div(self.expr.clone(), other.expr.clone()),
            exact,
            bits,
        ))
    }

    /// Square root of a value certified nonnegative. A rational perfect
    /// square stays exact.
    pub fn sqrt(&self) -> Result<RealScalar, NumericError> {
        self.sqrt_at(DEFAULT_MAX_BITS)
    }

    pub fn sqrt_at(&self, max_bits: u32) -> Result<RealScalar, NumericError> {
        if let Some(r) = &self.exact {
            if r.is_negative() {
                return Err(NumericError::NegativeRadicand { context: self.to_string() });
            }
            let exact = exact_sqrt(r);
            return Ok(Self::compose(Expr::Sqrt(self.expr.clone()), exact, self.bits));
        }
        match self.cmp_at(&RealScalar::zero(), max_bits) {
            Cmp::Less => Err(NumericError::NegativeRadicand { context: self.to_string() }),
            Cmp::Equal => Err(NumericError::AmbiguousSign {
                context: self.to_string(),
                max_bits,
            }),
            Cmp::Greater => Ok(Self::compose(Expr::Sqrt(self.expr.clone()), None, self.bits)),
        }
    }

    /// Arithmetic dispatch by operation tag: `add`/`sub`/`mul` cannot fail,
    /// `div` requires a certified-nonzero divisor.
    pub fn arith(op: ArithOp, a: &RealScalar, b: &RealScalar) -> Result<RealScalar, NumericError> {
        match op {
            ArithOp::Add => Ok(a.add(b)),
            ArithOp::Sub => Ok(a.sub(b)),
            ArithOp::Mul => Ok(a.mul(b)),
            ArithOp::Div => a.div(b),
        }
    }

    /// Certified three-way comparison. `Less`/`Greater` are certified;
    /// `Equal` is the fallback verdict when the difference cannot be
    /// separated from zero at `max_bits`. When `Equal` is returned the
    /// difference is enclosed within roughly 2^-(max_bits + 16 - depth),
    /// far inside 2^-[`TAU_EQ_EXP`] at the default precision; raising
    /// `max_bits` sharpens the equality threshold.
    pub fn cmp_at(&self, other: &RealScalar, max_bits: u32) -> Cmp {
        if let (Some(a), Some(b)) = (&self.exact, &other.exact) {
            return match a.cmp(b) {
                Ordering::Less => Cmp::Less,
                Ordering::Equal => Cmp::Equal,
                Ordering::Greater => Cmp::Greater,
            };
        }
        let diff = Arc::new(Expr::Sub(self.expr.clone(), other.expr.clone()));
        let mut bits = DEFAULT_WORKING_BITS;
        loop {
            if let Ok(iv) = eval_expr(&diff, bits) {
                if iv.is_strictly_positive() {
                    return Cmp::Greater;
                }
                if iv.is_strictly_negative() {
                    return Cmp::Less;
                }
            }
            if bits >= max_bits {
                return Cmp::Equal;
            }
            bits = (bits * 2).min(max_bits);
        }
    }

    #[allow(clippy::should_implement_trait)] // semantic comparison, not Ord
    pub fn cmp(&self, other: &RealScalar) -> Cmp {
        self.cmp_at(other, DEFAULT_MAX_BITS)
    }

    pub fn is_certified_nonnegative(&self, max_bits: u32) -> bool {
        match &self.exact {
            Some(r) => !r.is_negative(),
            None => self.cmp_at(&RealScalar::zero(), max_bits) != Cmp::Less,
        }
    }

    /// Returns the same value with an enclosure of width <= 2^-(bits - c) for
    /// a small structural constant c, nested inside the current enclosure.
    pub fn refine(&self, bits: u32) -> RealScalar {
        let target = bits.max(self.bits);
        let enclosure = match &self.exact {
            Some(r) => DyadicInterval::from_rational(r, target),
            None => {
                let fresh = eval_expr(&self.expr, target)
                    .unwrap_or_else(|_| panic!("divisor certified nonzero at construction"));
                fresh.intersect(&self.enclosure, target)
            }
        };
        RealScalar { expr: self.expr.clone(), exact: self.exact.clone(), enclosure, bits: target }
    }

    pub fn to_f64(&self) -> f64 {
        match &self.exact {
            Some(r) => r.to_f64(),
            None => {
                if self.bits >= 64 {
                    self.enclosure.to_f64_mid()
                } else {
                    self.refine(64).enclosure.to_f64_mid()
                }
            }
        }
    }

    /// Decimal rendering of the value to `sig` significant digits.
    pub fn decimal_string(&self, sig: usize) -> String {
        match &self.exact {
            Some(r) => r.decimal_string(sig),
            None => {
                let need = (sig as u32) * 4 + 64;
                let refined = self.refine(need.max(self.bits));
                refined.enclosure.midpoint().to_rational().decimal_string(sig)
            }
        }
    }

    /// Expression in the prefix mini-language, e.g. `(- 5 (sqrt 13))`.
    pub fn expr_prefix(&self) -> String {
        fn rec(e: &Expr, out: &mut String) {
            match e {
                Expr::Rat(r) => out.push_str(&r.to_string()),
                Expr::Add(a, b) => bin(out, "+", a, b),
                Expr::Sub(a, b) => bin(out, "-", a, b),
                Expr::Mul(a, b) => bin(out, "*", a, b),
                Expr::Div(a, b) => bin(out, "/", a, b),
                Expr::Sqrt(a) => {
                    out.push_str("(sqrt ");
                    rec(a, out);
                    out.push(')');
                }
            }
        }
        fn bin(out: &mut String, op: &str, a: &Expr, b: &Expr) {
            out.push('(');
            out.push_str(op);
            out.push(' ');
            rec(a, out);
            out.push(' ');
            rec(b, out);
            out.push(')');
        }
        let mut s = String::new();
        rec(&self.expr, &mut s);
        s
    }

    /// Parses the prefix mini-language back into a value, re-deriving the
    /// exact rational part and the enclosure.
    pub fn parse_prefix(s: &str) -> Result<RealScalar, ParseExprError> {
        let tokens = tokenize(s)?;
        let mut pos = 0usize;
        let v = parse_tokens(&tokens, &mut pos)?;
        if pos != tokens.len() {
            return Err(ParseExprError::TrailingTokens);
        }
        Ok(v)
    }
}

fn exact_sqrt(r: &Rational) -> Option<Rational> {
    if r.is_zero() {
        return Some(Rational::zero());
    }
    let pn = r.numer().magnitude();
    let pd = r.denom().magnitude();
    let sn = pn.sqrt();
    let sd = pd.sqrt();
    if &(&sn * &sn) == pn && &(&sd * &sd) == pd {
        Some(Rational::from_big(sn.into(), sd.into()))
    } else {
        None
    }
}

impl fmt::Display for RealScalar {
    /// Infix rendering; exact rationals print as `p/q`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(r) = &self.exact {
            return write!(f, "{}", r);
        }
        fn rec(e: &Expr, parent: u8, out: &mut fmt::Formatter<'_>) -> fmt::Result {
            let prec = match e {
                Expr::Add(..) | Expr::Sub(..) => 1,
                Expr::Mul(..) | Expr::Div(..) => 2,
                Expr::Sqrt(..) | Expr::Rat(..) => 3,
            };
            let parens = prec < parent;
            if parens {
                write!(out, "(")?;
            }
            match e {
                Expr::Rat(r) => {
                    if r.is_negative() && parent > 0 {
                        write!(out, "({})", r)?;
                    } else {
                        write!(out, "{}", r)?;
                    }
                }
                Expr::Add(a, b) => {
                    rec(a, 1, out)?;
                    write!(out, " + ")?;
                    rec(b, 2, out)?;
                }
                Expr::Sub(a, b) => {
                    rec(a, 1, out)?;
                    write!(out, " - ")?;
                    rec(b, 2, out)?;
                }
                Expr::Mul(a, b) => {
                    rec(a, 2, out)?;
                    write!(out, "*")?;
                    rec(b, 3, out)?;
                }
                Expr::Div(a, b) => {
                    rec(a, 2, out)?;
                    write!(out, "/")?;
                    rec(b, 3, out)?;
                }
                Expr::Sqrt(a) => {
                    write!(out, "sqrt(")?;
                    rec(a, 0, out)?;
                    write!(out, ")")?;
                }
            }
            if parens {
                write!(out, ")")?;
            }
            Ok(())
        }
        rec(&self.expr, 0, f)
    }
}

impl fmt::Debug for RealScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (~{})", self, self.decimal_string(12))
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ParseExprError {
    #[error("unbalanced parentheses")]
    Unbalanced,
    #[error("unexpected end of expression")]
    UnexpectedEnd,
    #[error("unexpected token `{0}`")]
    UnexpectedToken(String),
    #[error("trailing tokens after expression")]
    TrailingTokens,
    #[error(transparent)]
    Numeric(#[from] NumericError),
}

fn tokenize(s: &str) -> Result<Vec<String>, ParseExprError> {
    let mut tokens = Vec::new();
    let mut cur = String::new();
    for c in s.chars() {
        match c {
            '(' | ')' => {
                if !cur.is_empty() {
                    tokens.push(std::mem::take(&mut cur));
                }
                tokens.push(c.to_string());
            }
            c if c.is_whitespace() => {
                if !cur.is_empty() {
                    tokens.push(std::mem::take(&mut cur));
                }
            }
            _ => cur.push(c),
        }
    }
    if !cur.is_empty() {
        tokens.push(cur);
    }
    Ok(tokens)
}

fn parse_tokens(tokens: &[String], pos: &mut usize) -> Result<RealScalar, ParseExprError> {
    let tok = tokens.get(*pos).ok_or(ParseExprError::UnexpectedEnd)?;
    if tok == "(" {
        *pos += 1;
        let op = tokens.get(*pos).ok_or(ParseExprError::UnexpectedEnd)?.clone();
        *pos += 1;
        let result = match op.as_str() {
            "sqrt" => {
                let a = parse_tokens(tokens, pos)?;
                a.sqrt()?
            }
            "+" | "-" | "*" | "/" => {
                let a = parse_tokens(tokens, pos)?;
                let b = parse_tokens(tokens, pos)?;
                match op.as_str() {
                    "+" => a.add(&b),
                    "-" => a.sub(&b),
                    "*" => a.mul(&b),
                    _ => a.div(&b)?,
                }
            }
            other => return Err(ParseExprError::UnexpectedToken(other.to_string())),
        };
        match tokens.get(*pos) {
            Some(t) if t == ")" => {
                *pos += 1;
                Ok(result)
            }
            _ => Err(ParseExprError::Unbalanced),
        }
    } else if tok == ")" {
        Err(ParseExprError::UnexpectedToken(")".into()))
    } else {
        let r: Rational = tok
            .parse()
            .map_err(|_| ParseExprError::UnexpectedToken(tok.clone()))?;
        *pos += 1;
        Ok(RealScalar::from_rational(r))
    }
}

/// Serialized as `{"expr": prefix form, "decimal": 30 significant digits,
/// "exact": "p/q" when the value is rational}`.
#[derive(Serialize, Deserialize)]
struct RealScalarRepr {
    expr: String,
    decimal: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    exact: Option<String>,
}

impl Serialize for RealScalar {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        RealScalarRepr {
            expr: self.expr_prefix(),
            decimal: self.decimal_string(30),
            exact: self.exact.as_ref().map(|r| r.to_string()),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for RealScalar {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let repr = RealScalarRepr::deserialize(deserializer)?;
        let v = RealScalar::parse_prefix(&repr.expr)
            .map_err(|e| D::Error::custom(format!("bad expr `{}`: {}", repr.expr, e)))?;
        if let Some(ex) = repr.exact {
            let r: Rational = ex
                .parse()
                .map_err(|e| D::Error::custom(format!("bad exact `{}`: {}", ex, e)))?;
            match v.exact() {
                Some(have) if *have == r => {}
                _ => {
                    return Err(D::Error::custom(format!(
                        "exact field `{}` does not match expression `{}`",
                        ex, repr.expr
                    )))
                }
            }
        }
        Ok(v)
    }
}

#[cfg(test)]
mod tests {
    use super::super::dyadic::Dyadic;
    use super::*;
    use std::cmp::Ordering;

    fn rat(p: i64, q: i64) -> RealScalar {
        RealScalar::from_rational(Rational::new(p, q))
    }

    fn sqrt_int(n: i64) -> RealScalar {
        RealScalar::from_integer(n).sqrt().unwrap()
    }

    #[test]
    fn rational_fast_path() {
        let sum = rat(1, 2).add(&rat(1, 3));
        assert_eq!(sum.exact(), Some(&Rational::new(5, 6)));
        let prod = rat(2, 3).mul(&rat(9, 4));
        assert_eq!(prod.exact(), Some(&Rational::new(3, 2)));
        let quot = rat(1, 2).div(&rat(1, 3)).unwrap();
        assert_eq!(quot.exact(), Some(&Rational::new(3, 2)));
    }

    #[test]
    fn sqrt_exactness() {
        assert_eq!(sqrt_int(4).exact(), Some(&Rational::from_integer(2)));
        assert_eq!(sqrt_int(0).exact(), Some(&Rational::zero()));
        assert_eq!(
            rat(4, 9).sqrt().unwrap().exact(),
            Some(&Rational::new(2, 3))
        );
        assert!(sqrt_int(13).exact().is_none());
        assert!(matches!(
            RealScalar::from_integer(-1).sqrt(),
            Err(NumericError::NegativeRadicand { .. })
        ));
    }

    #[test]
    fn sqrt13_squared_contains_13_tightly() {
        let s = sqrt_int(13);
        let sq = s.mul(&s).refine(128);
        let thirteen = Rational::from_integer(13);
        assert_eq!(sq.enclosure().lo().cmp_rational(&thirteen), Ordering::Less);
        assert_eq!(sq.enclosure().hi().cmp_rational(&thirteen), Ordering::Greater);
        let width = sq.enclosure().width();
        assert!(width.cmp_value(&Dyadic::pow2(-100)) != Ordering::Greater);
    }

    #[test]
    fn five_minus_sqrt13_enclosure() {
        // 5 - sqrt(13) = 1.39444872...
        let v = RealScalar::from_integer(5).sub(&sqrt_int(13)).refine(64);
        let lo_bound = Rational::new(13944, 10000);
        let hi_bound = Rational::new(13945, 10000);
        assert_eq!(v.enclosure().lo().cmp_rational(&lo_bound), Ordering::Greater);
        assert_eq!(v.enclosure().hi().cmp_rational(&hi_bound), Ordering::Less);
    }

    #[test]
    fn sqrt13_enclosure_bounds() {
        let v = sqrt_int(13).refine(64);
        assert_eq!(
            v.enclosure().lo().cmp_rational(&Rational::new(360555, 100000)),
            Ordering::Greater
        );
        assert_eq!(
            v.enclosure().hi().cmp_rational(&Rational::new(360556, 100000)),
            Ordering::Less
        );
    }

    #[test]
    fn certified_comparisons() {
        let five_minus = RealScalar::from_integer(5).sub(&sqrt_int(13));
        assert_eq!(five_minus.cmp(&RealScalar::zero()), Cmp::Greater);
        assert_eq!(rat(1, 3).cmp(&rat(1, 3)), Cmp::Equal);

        // 2 + 4*sqrt(3)/3 = 4.3094010767... > 4.30940
        let v = RealScalar::from_integer(2).add(
            &RealScalar::from_integer(4)
                .mul(&sqrt_int(3))
                .div(&RealScalar::from_integer(3))
                .unwrap(),
        );
        let probe = rat(430940, 100000);
        assert_eq!(v.cmp(&probe), Cmp::Greater);
        assert_eq!(probe.cmp(&v), Cmp::Less);
    }

    #[test]
    fn equal_verdict_for_coincident_irrationals() {
        // sqrt(2)*sqrt(2) vs 2: not structurally exact, but numerically equal
        let s2 = sqrt_int(2);
        let four = s2.mul(&s2);
        assert_eq!(four.cmp(&RealScalar::from_integer(2)), Cmp::Equal);
    }

    #[test]
    fn refine_nests_and_narrows() {
        let v = RealScalar::from_integer(5).sub(&sqrt_int(13));
        let a = v.refine(128);
        let b = a.refine(256);
        assert!(a.enclosure().contains(b.enclosure()));
        assert!(b.enclosure().width().cmp_value(&Dyadic::pow2(-240)) != Ordering::Greater);

        let r = rat(1, 2).refine(200);
        assert!(r.enclosure().width().is_zero());

        let s2 = sqrt_int(2).refine(200);
        assert!(s2.enclosure().width().cmp_value(&Dyadic::pow2(-198)) != Ordering::Greater);
    }

    #[test]
    fn division_errors() {
        assert!(matches!(
            rat(1, 1).div(&RealScalar::zero()),
            Err(NumericError::DivisionByZero)
        ));
        // sqrt(2)*sqrt(2) - 2 is exactly zero but not structurally rational:
        // its sign is undecidable, so division reports ambiguity
        let s2 = sqrt_int(2);
        let zeroish = s2.mul(&s2).sub(&RealScalar::from_integer(2));
        assert!(matches!(
            rat(1, 1).div(&zeroish),
            Err(NumericError::AmbiguousSign { .. })
        ));
        assert!(matches!(
            zeroish.sqrt(),
            Err(NumericError::AmbiguousSign { .. })
        ));
    }

    #[test]
    fn display_and_prefix_roundtrip() {
        let v = RealScalar::from_integer(5).sub(&sqrt_int(13));
        assert_eq!(v.to_string(), "5 - sqrt(13)");
        assert_eq!(v.expr_prefix(), "(- 5 (sqrt 13))");
        let parsed = RealScalar::parse_prefix("(- 5 (sqrt 13))").unwrap();
        assert_eq!(parsed.cmp(&v), Cmp::Equal);

        let json = serde_json::to_string(&v).unwrap();
        let back: RealScalar = serde_json::from_str(&json).unwrap();
        assert_eq!(back.cmp(&v), Cmp::Equal);
        assert!(!back.is_exact());

        let r = rat(-3, 4);
        let json = serde_json::to_string(&r).unwrap();
        assert!(json.contains("\"exact\":\"-3/4\""));
        let back: RealScalar = serde_json::from_str(&json).unwrap();
        assert_eq!(back.exact(), Some(&Rational::new(-3, 4)));
    }

    #[test]
    fn decimal_output() {
        let v = RealScalar::from_integer(5).sub(&sqrt_int(13));
        assert_eq!(&v.decimal_string(12), "1.39444872454");
        assert_eq!(&rat(5, 6).decimal_string(6), "0.833333");
    }
}
