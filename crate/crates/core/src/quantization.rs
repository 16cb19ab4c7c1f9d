//! Cartan-matrix energy algebra for general SU(n+1): the quadratic energy
//! identity, the fully-bubbling energies, and the gap form whose positivity
//! forces energy uniqueness.
//!
//! Everything here is exact: inputs are rational (or [`RealScalar`] values
//! whose rational parts propagate), outputs of the identities are exact
//! rational zeros, not small floats.

#![allow(clippy::needless_range_loop)]

use thiserror::Error;

use crate::numeric::{Rational, RealScalar};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum QuantizationError {
    #[error("dimension must be at least 1")]
    ZeroDimension,
    #[error("gamma[{index}] = {value} violates gamma > -1")]
    GammaOutOfRange { index: usize, value: String },
    #[error("expected {expected} entries, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// The tridiagonal Cartan matrix Aₙ (2 on the diagonal, -1 off) together with
/// its exact rational inverse a^{ij} = min(i,j)·(n+1-max(i,j))/(n+1).
#[derive(Debug, Clone)]
pub struct CartanMatrix {
    n: usize,
    entries: Vec<Vec<i64>>,
    inverse: Vec<Vec<Rational>>,
}

pub fn cartan(n: usize) -> Result<CartanMatrix, QuantizationError> {
    if n == 0 {
        return Err(QuantizationError::ZeroDimension);
    }
    let mut entries = vec![vec![0i64; n]; n];
    for i in 0..n {
        entries[i][i] = 2;
        if i + 1 < n {
            entries[i][i + 1] = -1;
            entries[i + 1][i] = -1;
        }
    }
    let np1 = (n + 1) as i64;
    let mut inverse = vec![vec![Rational::zero(); n]; n];
    for i in 0..n {
        for j in 0..n {
            let (lo, hi) = if i <= j { (i + 1, j + 1) } else { (j + 1, i + 1) };
            inverse[i][j] = Rational::new((lo as i64) * (np1 - hi as i64), np1);
        }
    }
    let m = CartanMatrix { n, entries, inverse };
    debug_assert!(m.inverse_checks_out());
    Ok(m)
}

impl CartanMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn entry(&self, i: usize, j: usize) -> i64 {
        self.entries[i][j]
    }

    pub fn entries(&self) -> &[Vec<i64>] {
        &self.entries
    }

    pub fn inverse(&self) -> &[Vec<Rational>] {
        &self.inverse
    }

    fn inverse_checks_out(&self) -> bool {
        for i in 0..self.n {
            for j in 0..self.n {
                let mut acc = Rational::zero();
                for k in 0..self.n {
                    acc = &acc
                        + &(&Rational::from_integer(self.entries[i][k]) * &self.inverse[k][j]);
                }
                let want = if i == j { Rational::one() } else { Rational::zero() };
                if acc != want {
                    return false;
                }
            }
        }
        true
    }

    /// Exact determinant by cofactor recurrence along the tridiagonal band
    /// (det Aₖ = k + 1).
    pub fn det(&self) -> Rational {
        let mut prev = Rational::one(); // det of 0x0
        let mut cur = Rational::from_integer(2);
        for _ in 1..self.n {
            let next = &(&Rational::from_integer(2) * &cur) - &prev;
            prev = cur;
            cur = next;
        }
        cur
    }

    /// A·v in exact rationals.
    pub fn apply(&self, v: &[Rational]) -> Result<Vec<Rational>, QuantizationError> {
        self.check_len(v.len())?;
        Ok((0..self.n)
            .map(|i| {
                let mut acc = Rational::zero();
                for j in 0..self.n {
                    if self.entries[i][j] != 0 {
                        acc = &acc + &(&Rational::from_integer(self.entries[i][j]) * &v[j]);
                    }
                }
                acc
            })
            .collect())
    }

    /// Solves A·x = b exactly through the closed-form inverse.
    pub fn solve(&self, b: &[Rational]) -> Result<Vec<Rational>, QuantizationError> {
        self.check_len(b.len())?;
        Ok((0..self.n)
            .map(|i| {
                let mut acc = Rational::zero();
                for j in 0..self.n {
                    acc = &acc + &(&self.inverse[i][j] * &b[j]);
                }
                acc
            })
            .collect())
    }

    fn check_len(&self, got: usize) -> Result<(), QuantizationError> {
        if got == self.n {
            Ok(())
        } else {
            Err(QuantizationError::DimensionMismatch { expected: self.n, got })
        }
    }
}

/// The singular-source strengths γᵢ > -1; μᵢ = 1 + γᵢ.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GammaVector(Vec<Rational>);

impl GammaVector {
    pub fn new(gamma: Vec<Rational>) -> Result<GammaVector, QuantizationError> {
        if gamma.is_empty() {
            return Err(QuantizationError::ZeroDimension);
        }
        for (index, g) in gamma.iter().enumerate() {
            if g.cmp(&Rational::from_integer(-1)) != std::cmp::Ordering::Greater {
                return Err(QuantizationError::GammaOutOfRange {
                    index,
                    value: g.to_string(),
                });
            }
        }
        Ok(GammaVector(gamma))
    }

    pub fn zeros(n: usize) -> GammaVector {
        GammaVector(vec![Rational::zero(); n])
    }

    pub fn n(&self) -> usize {
        self.0.len()
    }

    pub fn gamma(&self) -> &[Rational] {
        &self.0
    }

    pub fn mu(&self, i: usize) -> Rational {
        &Rational::one() + &self.0[i]
    }
}

/// A vector of running or limiting energies σᵢ ≥ 0.
#[derive(Debug, Clone)]
pub struct EnergyVector(pub Vec<RealScalar>);

impl EnergyVector {
    /// Energies are nonnegative by definition.
    pub fn from_rationals(v: Vec<Rational>) -> EnergyVector {
        assert!(v.iter().all(|s| !s.is_negative()), "negative energy");
        EnergyVector(v.into_iter().map(RealScalar::from_rational).collect())
    }

    pub fn as_rationals(&self) -> Option<Vec<Rational>> {
        self.0.iter().map(|s| s.exact().cloned()).collect()
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(|s| s.to_f64()).collect()
    }
}

/// Σᵢⱼ aᵢⱼ σᵢσⱼ − 4 Σᵢ (1 + γᵢ) σᵢ — zero exactly when σ satisfies the blowup
/// energy identity. For n = 2 this equals twice the conic residual.
pub fn pohozaev_residual(
    a: &CartanMatrix,
    sigma: &EnergyVector,
    gamma: &GammaVector,
) -> Result<RealScalar, QuantizationError> {
    a.check_len(sigma.0.len())?;
    a.check_len(gamma.n())?;
    let mut acc = RealScalar::zero();
    for i in 0..a.n() {
        for j in 0..a.n() {
            let c = a.entry(i, j);
            if c != 0 {
                let term = RealScalar::from_integer(c).mul(&sigma.0[i]).mul(&sigma.0[j]);
                acc = acc.add(&term);
            }
        }
    }
    for i in 0..a.n() {
        let coeff = &Rational::from_integer(4) * &gamma.mu(i);
        acc = acc.sub(&RealScalar::from_rational(coeff).mul(&sigma.0[i]));
    }
    Ok(acc)
}

/// The unique fully-bubbling energy: the exact solution of
/// A·σ = b with bᵢ = 2(2 + γᵢ + γ_{n+1-i}).
pub fn fully_bubbling_energy(gamma: &GammaVector) -> Result<EnergyVector, QuantizationError> {
    let n = gamma.n();
    let a = cartan(n)?;
    let b: Vec<Rational> = (0..n)
        .map(|i| {
            let sum = &(&Rational::from_integer(2) + &gamma.gamma()[i]) + &gamma.gamma()[n - 1 - i];
            &Rational::from_integer(2) * &sum
        })
        .collect();
    Ok(EnergyVector::from_rationals(a.solve(&b)?))
}

/// The quadratic form controlling the energy gap s = σ − σᵥ:
/// Σ aᵢⱼ sᵢsⱼ + 2 Σᵢ (Σⱼ aᵢⱼ σᵥⱼ − 2 − 2γᵢ) sᵢ.
pub fn gap_form(
    a: &CartanMatrix,
    sigma_v: &EnergyVector,
    gamma: &GammaVector,
    s: &[RealScalar],
) -> Result<RealScalar, QuantizationError> {
    a.check_len(sigma_v.0.len())?;
    a.check_len(gamma.n())?;
    a.check_len(s.len())?;
    let mut acc = RealScalar::zero();
    for i in 0..a.n() {
        for j in 0..a.n() {
            let c = a.entry(i, j);
            if c != 0 {
                acc = acc.add(&RealScalar::from_integer(c).mul(&s[i]).mul(&s[j]));
            }
        }
    }
    let margins = margin_check(a, sigma_v, gamma)?;
    for i in 0..a.n() {
        acc = acc.add(&RealScalar::from_integer(2).mul(&margins[i]).mul(&s[i]));
    }
    Ok(acc)
}

/// The linear margins mᵢ = Σⱼ aᵢⱼ σᵥⱼ − 2 − 2γᵢ; for the fully-bubbling
/// energy they reduce to 2 + 2γ_{n+1-i} > 0.
pub fn margin_check(
    a: &CartanMatrix,
    sigma_v: &EnergyVector,
    gamma: &GammaVector,
) -> Result<Vec<RealScalar>, QuantizationError> {
    a.check_len(sigma_v.0.len())?;
    a.check_len(gamma.n())?;
    let mut out = Vec::with_capacity(a.n());
    for i in 0..a.n() {
        let mut acc = RealScalar::zero();
        for j in 0..a.n() {
            let c = a.entry(i, j);
            if c != 0 {
                acc = acc.add(&RealScalar::from_integer(c).mul(&sigma_v.0[j]));
            }
        }
        let sub = &Rational::from_integer(2) + &(&Rational::from_integer(2) * &gamma.gamma()[i]);
        out.push(acc.sub(&RealScalar::from_rational(sub)));
    }
    Ok(out)
}
