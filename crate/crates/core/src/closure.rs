//! Worklist closure producing the finite set Σ(μ₁, μ₂) of admissible blowup
//! energy pairs, plus an independent floating-point oracle for cross-checks.
//!
//! Starting from the six closed-form seed points, every member (a, b)
//! spawns the lines σ₁ = a + 2N and σ₂ = b + 2N inside the bounding box of
//! Γ; intersection points that lie in the (weak) upper-right part of (a, b)
//! and are not already present join the set, and the rule is re-applied
//! until a fixed point. Lines are generated for N = 1, 2, ... by default:
//! the N = 0 line through a member's own coordinate can pick up the opposite
//! intersection on the curve, which grows the set beyond the reference
//! six- and twenty-point configurations; set
//! [`ClosureOptions::include_self_lines`] to chase those as well.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::conic::{Axis, Conic, Provenance, SigmaPoint};
use crate::numeric::{Cmp, NumericError, Rational, RealScalar, DEFAULT_MAX_BITS};

#[derive(Debug, Clone, Error)]
pub enum ClosureError {
    #[error("closure did not reach a fixed point within {steps} worklist steps")]
    BudgetExceeded { steps: u64 },
    #[error("ambiguous intersection on {axis} = {value}: {source}")]
    Ambiguous {
        axis: &'static str,
        value: String,
        source: NumericError,
    },
}

#[derive(Debug, Clone, Copy)]
pub struct ClosureOptions {
    /// Maximum number of worklist pops before giving up.
    pub budget: u64,
    /// Maximum precision for all certified comparisons.
    pub max_bits: u32,
    /// Also intersect with the N = 0 line through each member's own
    /// coordinates (adds opposite intersections; off by default).
    pub include_self_lines: bool,
}

impl Default for ClosureOptions {
    fn default() -> Self {
        ClosureOptions {
            budget: 1_000_000,
            max_bits: DEFAULT_MAX_BITS,
            include_self_lines: false,
        }
    }
}

/// One generation event: `child` was found on the line
/// `axis = coordinate(parent) + 2*shift`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenRecord {
    pub parent: usize,
    pub axis: Axis,
    pub shift: u32,
    pub child: usize,
}

/// The closed set Σ(μ₁, μ₂), canonically ordered by (σ₁, σ₂).
#[derive(Debug, Clone)]
pub struct SigmaSet {
    pub conic: Conic,
    pub points: Vec<SigmaPoint>,
    pub generation_log: Vec<GenRecord>,
    max_bits: u32,
}

/// Weak upper-right order: q is upper-right of p iff q.σ₁ ≥ p.σ₁ and
/// q.σ₂ ≥ p.σ₂ (ties count).
pub fn upper_right(p: &SigmaPoint, q: &SigmaPoint) -> bool {
    upper_right_at(p, q, DEFAULT_MAX_BITS)
}

pub fn upper_right_at(p: &SigmaPoint, q: &SigmaPoint, max_bits: u32) -> bool {
    q.s1.cmp_at(&p.s1, max_bits) != Cmp::Less && q.s2.cmp_at(&p.s2, max_bits) != Cmp::Less
}

fn points_equal(a: &SigmaPoint, b: &SigmaPoint, max_bits: u32) -> bool {
    a.s1.cmp_at(&b.s1, max_bits) == Cmp::Equal && a.s2.cmp_at(&b.s2, max_bits) == Cmp::Equal
}

/// Runs the generation rule to its fixed point from the six seeds.
pub fn enumerate(conic: &Conic, options: ClosureOptions) -> Result<SigmaSet, ClosureError> {
    let mut points: Vec<SigmaPoint> = Vec::new();
    let mut log: Vec<GenRecord> = Vec::new();
    let mut queue: VecDeque<usize> = VecDeque::new();

    for seed in conic.seed_points() {
        if !points.iter().any(|m| points_equal(m, &seed, options.max_bits)) {
            points.push(seed);
            queue.push_back(points.len() - 1);
        }
    }

    let (b1, b2) = conic.bounding_box();
    let mut steps: u64 = 0;
    while let Some(idx) = queue.pop_front() {
        steps += 1;
        if steps > options.budget {
            return Err(ClosureError::BudgetExceeded { steps });
        }
        for axis in [Axis::Sigma1, Axis::Sigma2] {
            let (coord, bound) = match axis {
                Axis::Sigma1 => (points[idx].s1.clone(), &b1),
                Axis::Sigma2 => (points[idx].s2.clone(), &b2),
            };
            let mut shift: u32 = if options.include_self_lines { 0 } else { 1 };
            loop {
                let value = coord.add(&RealScalar::from_integer(2 * shift as i64));
                if value.cmp_at(bound, options.max_bits) == Cmp::Greater {
                    break;
                }
                let candidates = conic
                    .intersect_line_at(axis, &value, options.max_bits)
                    .map_err(|source| ClosureError::Ambiguous {
                        axis: axis.label(),
                        value: value.decimal_string(20),
                        source,
                    })?;
                for mut cand in candidates {
                    if !upper_right_at(&points[idx], &cand, options.max_bits) {
                        continue;
                    }
                    if points.iter().any(|m| points_equal(m, &cand, options.max_bits)) {
                        continue;
                    }
                    cand.provenance =
                        Provenance::Intersection { parent: Some(idx), axis, shift };
                    points.push(cand);
                    let child = points.len() - 1;
                    log.push(GenRecord { parent: idx, axis, shift, child });
                    queue.push_back(child);
                }
                shift += 1;
            }
        }
    }

    // canonical order: sort by (s1, s2) under certified comparison and remap
    // the indices carried by the log and the provenance records
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&i, &j| {
        match points[i].s1.cmp_at(&points[j].s1, options.max_bits) {
            Cmp::Less => std::cmp::Ordering::Less,
            Cmp::Greater => std::cmp::Ordering::Greater,
            Cmp::Equal => match points[i].s2.cmp_at(&points[j].s2, options.max_bits) {
                Cmp::Less => std::cmp::Ordering::Less,
                Cmp::Greater => std::cmp::Ordering::Greater,
                Cmp::Equal => std::cmp::Ordering::Equal,
            },
        }
    });
    let mut new_index = vec![0usize; points.len()];
    for (new, &old) in order.iter().enumerate() {
        new_index[old] = new;
    }
    let mut sorted: Vec<SigmaPoint> = order
        .iter()
        .map(|&old| points[old].clone())
        .collect();
    for p in &mut sorted {
        if let Provenance::Intersection { parent: Some(old), .. } = &mut p.provenance {
            *old = new_index[*old];
        }
    }
    for rec in &mut log {
        rec.parent = new_index[rec.parent];
        rec.child = new_index[rec.child];
    }
    log.sort_by_key(|r| (r.child, r.parent, r.shift));

    Ok(SigmaSet {
        conic: conic.clone(),
        points: sorted,
        generation_log: log,
        max_bits: options.max_bits,
    })
}

impl SigmaSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// True iff some member equals (s1, s2) in both coordinates.
    pub fn is_member(&self, s1: &RealScalar, s2: &RealScalar) -> bool {
        self.points.iter().any(|p| {
            p.s1.cmp_at(s1, self.max_bits) == Cmp::Equal
                && p.s2.cmp_at(s2, self.max_bits) == Cmp::Equal
        })
    }

    /// Re-applies the generation rule to every member and reports how many
    /// new points it would add; a closed set reports zero.
    pub fn count_missing(&self, options: ClosureOptions) -> Result<usize, ClosureError> {
        let (b1, b2) = self.conic.bounding_box();
        let mut missing = 0usize;
        for p in &self.points {
            for axis in [Axis::Sigma1, Axis::Sigma2] {
                let (coord, bound) = match axis {
                    Axis::Sigma1 => (&p.s1, &b1),
                    Axis::Sigma2 => (&p.s2, &b2),
                };
                let mut shift: u32 = if options.include_self_lines { 0 } else { 1 };
                loop {
                    let value = coord.add(&RealScalar::from_integer(2 * shift as i64));
                    if value.cmp_at(bound, options.max_bits) == Cmp::Greater {
                        break;
                    }
                    let candidates = self
                        .conic
                        .intersect_line_at(axis, &value, options.max_bits)
                        .map_err(|source| ClosureError::Ambiguous {
                            axis: axis.label(),
                            value: value.decimal_string(20),
                            source,
                        })?;
                    for cand in candidates {
                        if upper_right_at(p, &cand, options.max_bits)
                            && !self
                                .points
                                .iter()
                                .any(|m| points_equal(m, &cand, options.max_bits))
                        {
                            missing += 1;
                        }
                    }
                    shift += 1;
                }
            }
        }
        Ok(missing)
    }

    pub fn to_json(&self) -> SigmaSetJson {
        SigmaSetJson {
            mu1: self.conic.mu1().to_string(),
            mu2: self.conic.mu2().to_string(),
            count: self.points.len(),
            points: self
                .points
                .iter()
                .map(|p| SigmaPointJson {
                    s1: p.s1.clone(),
                    s2: p.s2.clone(),
                    provenance: p.provenance.to_string(),
                })
                .collect(),
        }
    }

    /// Rebuilds a set from its JSON form (coordinates are re-derived from the
    /// expression strings; the conic is re-validated).
    pub fn from_json(json: &SigmaSetJson) -> Result<SigmaSet, String> {
        let mu1: Rational = json.mu1.parse().map_err(|e| format!("mu1: {}", e))?;
        let mu2: Rational = json.mu2.parse().map_err(|e| format!("mu2: {}", e))?;
        let conic = Conic::new(mu1, mu2).map_err(|e| e.to_string())?;
        if json.count != json.points.len() {
            return Err(format!(
                "count {} does not match {} points",
                json.count,
                json.points.len()
            ));
        }
        let points = json
            .points
            .iter()
            .map(|p| {
                let provenance = Provenance::parse(&p.provenance)
                    .ok_or_else(|| format!("bad provenance `{}`", p.provenance))?;
                Ok(SigmaPoint { s1: p.s1.clone(), s2: p.s2.clone(), provenance })
            })
            .collect::<Result<Vec<_>, String>>()?;
        Ok(SigmaSet {
            conic,
            points,
            generation_log: Vec::new(),
            max_bits: DEFAULT_MAX_BITS,
        })
    }
}

/// Wire format of a point: coordinates as RealScalar JSON plus the
/// provenance string.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SigmaPointJson {
    pub s1: RealScalar,
    pub s2: RealScalar,
    pub provenance: String,
}

/// Wire format of Σ.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SigmaSetJson {
    pub mu1: String,
    pub mu2: String,
    pub count: usize,
    pub points: Vec<SigmaPointJson>,
}

/// Absolute tolerance of the floating-point oracle.
pub const ORACLE_TOL: f64 = 1e-9;

/// Independent hardware-float rerun of the same closure, used only to
/// cross-validate [`enumerate`]. Shares no code with the exact path.
pub fn float_oracle_enumerate(conic: &Conic, include_self_lines: bool) -> Vec<(f64, f64)> {
    let m1 = conic.mu1().to_f64();
    let m2 = conic.mu2().to_f64();
    let b1 = (4.0 / 3.0) * m1 + (2.0 / 3.0) * m2 + (4.0 / 3.0) * (m1 * m1 + m1 * m2 + m2 * m2).sqrt();
    let b2 = (2.0 / 3.0) * m1 + (4.0 / 3.0) * m2 + (4.0 / 3.0) * (m1 * m1 + m1 * m2 + m2 * m2).sqrt();

    let isect = |axis: usize, c: f64| -> Vec<(f64, f64)> {
        let (ml, mo) = if axis == 0 { (m1, m2) } else { (m2, m1) };
        let b = c + 2.0 * mo;
        let q0 = c * c - 2.0 * ml * c;
        let disc = b * b - 4.0 * q0;
        let scale = (b * b).max(q0.abs()).max(1.0);
        let mut ts = Vec::new();
        if disc < -1e-12 * scale {
            return Vec::new();
        } else if disc <= 1e-12 * scale {
            ts.push(b / 2.0);
        } else {
            let r = disc.sqrt();
            ts.push((b - r) / 2.0);
            ts.push((b + r) / 2.0);
        }
        ts.retain(|t| *t >= -ORACLE_TOL);
        ts.iter()
            .map(|t| {
                let t = t.max(0.0);
                if axis == 0 {
                    (c, t)
                } else {
                    (t, c)
                }
            })
            .collect()
    };

    let mut pts: Vec<(f64, f64)> = Vec::new();
    let mut queue: VecDeque<(f64, f64)> = VecDeque::new();
    let seeds = [
        (0.0, 0.0),
        (2.0 * m1, 0.0),
        (0.0, 2.0 * m2),
        (2.0 * m1, 2.0 * (m1 + m2)),
        (2.0 * (m1 + m2), 2.0 * m2),
        (2.0 * (m1 + m2), 2.0 * (m1 + m2)),
    ];
    let member = |pts: &[(f64, f64)], p: (f64, f64)| {
        pts.iter()
            .any(|q| (p.0 - q.0).abs() <= ORACLE_TOL && (p.1 - q.1).abs() <= ORACLE_TOL)
    };
    for s in seeds {
        if !member(&pts, s) {
            pts.push(s);
            queue.push_back(s);
        }
    }
    while let Some((a, b)) = queue.pop_front() {
        for axis in 0..2usize {
            let (coord, bound) = if axis == 0 { (a, b1) } else { (b, b2) };
            let mut n = if include_self_lines { 0u32 } else { 1u32 };
            while coord + 2.0 * n as f64 <= bound + ORACLE_TOL {
                for p in isect(axis, coord + 2.0 * n as f64) {
                    let ur = p.0 >= a - ORACLE_TOL && p.1 >= b - ORACLE_TOL;
                    if ur && !member(&pts, p) {
                        pts.push(p);
                        queue.push_back(p);
                    }
                }
                n += 1;
            }
        }
    }
    pts.sort_by(|x, y| {
        x.0.partial_cmp(&y.0)
            .unwrap()
            .then(x.1.partial_cmp(&y.1).unwrap())
    });
    pts
}
