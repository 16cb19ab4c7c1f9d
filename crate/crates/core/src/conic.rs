//! The energy curve Γ: σ₁² − σ₁σ₂ + σ₂² = 2μ₁σ₁ + 2μ₂σ₂ in the closed first
//! quadrant, for a rational parameter pair μ = (μ₁, μ₂) with μᵢ > 0.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numeric::{Cmp, NumericError, Rational, RealScalar, DEFAULT_MAX_BITS};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ConicError {
    #[error("mu must be positive, got {0}")]
    NonpositiveMu(String),
}

/// Which coordinate a generating line fixes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    /// Vertical line σ₁ = const.
    Sigma1,
    /// Horizontal line σ₂ = const.
    Sigma2,
}

impl Axis {
    pub fn label(self) -> &'static str {
        match self {
            Axis::Sigma1 => "sigma1",
            Axis::Sigma2 => "sigma2",
        }
    }
}

/// How a point of Σ arose.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Provenance {
    /// One of the six closed-form points on Γ (index 0..6).
    Seed(usize),
    /// Intersection of Γ with the line `axis = parent coordinate + 2*shift`.
    /// `parent` is the index of the generating member within its
    /// [`crate::closure::SigmaSet`]; it is `None` for a bare call to
    /// [`Conic::intersect_line`].
    Intersection {
        parent: Option<usize>,
        axis: Axis,
        shift: u32,
    },
}

impl std::fmt::Display for Provenance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Provenance::Seed(i) => write!(f, "seed:{}", i),
            Provenance::Intersection { parent, axis, shift } => match parent {
                Some(p) => write!(f, "parent={},axis={},N={}", p, axis.label(), shift),
                None => write!(f, "axis={},N={}", axis.label(), shift),
            },
        }
    }
}

impl Provenance {
    pub fn parse(s: &str) -> Option<Provenance> {
        if let Some(i) = s.strip_prefix("seed:") {
            return Some(Provenance::Seed(i.parse().ok()?));
        }
        let mut parent = None;
        let mut axis = None;
        let mut shift = None;
        for field in s.split(',') {
            let (k, v) = field.split_once('=')?;
            match k {
                "parent" => parent = Some(v.parse().ok()?),
                "axis" => {
                    axis = Some(match v {
                        "sigma1" => Axis::Sigma1,
                        "sigma2" => Axis::Sigma2,
                        _ => return None,
                    })
                }
                "N" => shift = Some(v.parse().ok()?),
                _ => return None,
            }
        }
        Some(Provenance::Intersection { parent, axis: axis?, shift: shift? })
    }
}

/// A point on Γ with the record of how it was generated.
#[derive(Debug, Clone)]
pub struct SigmaPoint {
    pub s1: RealScalar,
    pub s2: RealScalar,
    pub provenance: Provenance,
}

impl SigmaPoint {
    pub fn to_f64(&self) -> (f64, f64) {
        (self.s1.to_f64(), self.s2.to_f64())
    }
}

/// Γ for a fixed parameter pair μ = (μ₁, μ₂), μᵢ = 1 + γᵢ > 0.
#[derive(Debug, Clone)]
pub struct Conic {
    mu1: Rational,
    mu2: Rational,
}

impl Conic {
    pub fn new(mu1: Rational, mu2: Rational) -> Result<Conic, ConicError> {
        if !mu1.is_positive() {
            return Err(ConicError::NonpositiveMu(mu1.to_string()));
        }
        if !mu2.is_positive() {
            return Err(ConicError::NonpositiveMu(mu2.to_string()));
        }
        Ok(Conic { mu1, mu2 })
    }

    pub fn mu1(&self) -> &Rational {
        &self.mu1
    }

    pub fn mu2(&self) -> &Rational {
        &self.mu2
    }

    /// Swaps the two parameters (Γ is invariant under swapping both the
    /// parameters and the coordinates).
    pub fn swapped(&self) -> Conic {
        Conic { mu1: self.mu2.clone(), mu2: self.mu1.clone() }
    }

    /// Q(σ) = σ₁² − σ₁σ₂ + σ₂² − 2μ₁σ₁ − 2μ₂σ₂; zero exactly on Γ.
    pub fn residual(&self, s1: &RealScalar, s2: &RealScalar) -> RealScalar {
        let two_mu1 = RealScalar::from_rational(&self.mu1 + &self.mu1);
        let two_mu2 = RealScalar::from_rational(&self.mu2 + &self.mu2);
        s1.mul(s1)
            .sub(&s1.mul(s2))
            .add(&s2.mul(s2))
            .sub(&two_mu1.mul(s1))
            .sub(&two_mu2.mul(s2))
    }

    pub fn residual_at_point(&self, p: &SigmaPoint) -> RealScalar {
        self.residual(&p.s1, &p.s2)
    }

    pub fn residual_rational(&self, s1: &Rational, s2: &Rational) -> Rational {
        let q = s1 * s1;
        let q = &q - &(s1 * s2);
        let q = &q + &(s2 * s2);
        let q = &q - &(&(&self.mu1 + &self.mu1) * s1);
        &q - &(&(&self.mu2 + &self.mu2) * s2)
    }

    /// The six closed-form points on Γ, all exact rationals:
    /// (0,0), (2μ₁,0), (0,2μ₂), (2μ₁,2(μ₁+μ₂)), (2(μ₁+μ₂),2μ₂),
    /// (2(μ₁+μ₂),2(μ₁+μ₂)).
    pub fn seed_points(&self) -> Vec<SigmaPoint> {
        let zero = Rational::zero();
        let two_mu1 = &self.mu1 + &self.mu1;
        let two_mu2 = &self.mu2 + &self.mu2;
        let two_sum = &two_mu1 + &two_mu2;
        let coords = [
            (zero.clone(), zero.clone()),
            (two_mu1.clone(), zero.clone()),
            (zero, two_mu2.clone()),
            (two_mu1, two_sum.clone()),
            (two_sum.clone(), two_mu2),
            (two_sum.clone(), two_sum),
        ];
        coords
            .into_iter()
            .enumerate()
            .map(|(i, (a, b))| SigmaPoint {
                s1: RealScalar::from_rational(a),
                s2: RealScalar::from_rational(b),
                provenance: Provenance::Seed(i),
            })
            .collect()
    }

    /// Intersects Γ with the line `axis = value` (`value >= 0`).
    ///
    /// Returns 0, 1 or 2 points with nonnegative coordinates; a tangency is
    /// listed once. Roots with a coordinate certified negative are dropped; a
    /// root whose sign cannot be decided is snapped to exactly zero only when
    /// zero is exactly a root, otherwise the ambiguity is reported.
    pub fn intersect_line(
        &self,
        axis: Axis,
        value: &RealScalar,
    ) -> Result<Vec<SigmaPoint>, NumericError> {
        self.intersect_line_at(axis, value, DEFAULT_MAX_BITS)
    }

    pub fn intersect_line_at(
        &self,
        axis: Axis,
        value: &RealScalar,
        max_bits: u32,
    ) -> Result<Vec<SigmaPoint>, NumericError> {
        // lines at negative coordinates never meet the first-quadrant curve
        match value.exact() {
            Some(r) if r.is_negative() => return Ok(Vec::new()),
            None if value.cmp_at(&RealScalar::zero(), max_bits) == Cmp::Less => {
                return Ok(Vec::new())
            }
            _ => {}
        }
        // For sigma1 = c the free coordinate solves
        //   t^2 - (c + 2 mu2) t + (c^2 - 2 mu1 c) = 0,
        // and symmetrically with mu1, mu2 swapped for sigma2 = c.
        let (mu_line, mu_other) = match axis {
            Axis::Sigma1 => (&self.mu1, &self.mu2),
            Axis::Sigma2 => (&self.mu2, &self.mu1),
        };
        let c = value;
        let two = RealScalar::from_integer(2);
        let b = c.add(&RealScalar::from_rational(mu_other + mu_other));
        let q0 = c.mul(c).sub(&RealScalar::from_rational(mu_line + mu_line).mul(c));
        let disc = b.mul(&b).sub(&RealScalar::from_integer(4).mul(&q0));

        let mut roots: Vec<RealScalar> = Vec::new();
        if let Some(d) = disc.exact() {
            if d.is_negative() {
                return Ok(Vec::new());
            }
            if d.is_zero() {
                roots.push(b.div_at(&two, max_bits)?);
            } else {
                let r = disc.sqrt_at(max_bits)?;
                roots.push(b.sub(&r).div_at(&two, max_bits)?);
                roots.push(b.add(&r).div_at(&two, max_bits)?);
            }
        } else {
            match disc.cmp_at(&RealScalar::zero(), max_bits) {
                Cmp::Less => return Ok(Vec::new()),
                Cmp::Equal => {
                    return Err(NumericError::AmbiguousSign {
                        context: format!("discriminant of {} = {}", axis.label(), c),
                        max_bits,
                    })
                }
                Cmp::Greater => {
                    let r = disc.sqrt_at(max_bits)?;
                    roots.push(b.sub(&r).div_at(&two, max_bits)?);
                    roots.push(b.add(&r).div_at(&two, max_bits)?);
                }
            }
        }

        let mut points = Vec::new();
        for t in roots {
            let t = match t.exact() {
                Some(r) if r.is_negative() => continue,
                Some(_) => t,
                None => match t.cmp_at(&RealScalar::zero(), max_bits) {
                    Cmp::Less => continue,
                    Cmp::Greater => t,
                    Cmp::Equal => {
                        // t = 0 is a root iff the constant term is exactly 0
                        match q0.exact() {
                            Some(r) if r.is_zero() => RealScalar::zero(),
                            _ => {
                                return Err(NumericError::AmbiguousSign {
                                    context: format!(
                                        "root sign on {} = {}",
                                        axis.label(),
                                        c
                                    ),
                                    max_bits,
                                })
                            }
                        }
                    }
                },
            };
            let (s1, s2) = match axis {
                Axis::Sigma1 => (c.clone(), t),
                Axis::Sigma2 => (t, c.clone()),
            };
            points.push(SigmaPoint {
                s1,
                s2,
                provenance: Provenance::Intersection { parent: None, axis, shift: 0 },
            });
        }
        Ok(points)
    }

    /// The tight coordinate bounds of Γ:
    /// max σ₁ = (4μ₁ + 2μ₂)/3 + (4/3)√(μ₁² + μ₁μ₂ + μ₂²), and max σ₂ with the
    /// rational coefficients exchanged.
    pub fn bounding_box(&self) -> (RealScalar, RealScalar) {
        let root = {
            let m1 = &self.mu1;
            let m2 = &self.mu2;
            let s = &(&(m1 * m1) + &(m1 * m2)) + &(m2 * m2);
            RealScalar::from_rational(s)
                .sqrt()
                .expect("mu1^2 + mu1 mu2 + mu2^2 > 0")
        };
        let four_thirds = RealScalar::from_rational(Rational::new(4, 3));
        let scaled_root = four_thirds.mul(&root);
        let lin = |a: Rational, b: Rational| {
            RealScalar::from_rational(&(&a * &self.mu1) + &(&b * &self.mu2))
        };
        let s1_max = lin(Rational::new(4, 3), Rational::new(2, 3)).add(&scaled_root);
        let s2_max = lin(Rational::new(2, 3), Rational::new(4, 3)).add(&scaled_root);
        (s1_max, s2_max)
    }
}
