//! Adaptive integrator for radial singular SU(n+1) Toda solutions in
//! log-radius coordinates t = log r, with the running energies σᵢ carried as
//! state, conservation-law residual reports, fast/slow decay classification,
//! plateau detection and scale-gap group clustering.
//!
//! In t-coordinates the regular part ũᵢ solves
//!
//! ```text
//! d²ũᵢ/dt² + Σⱼ aᵢⱼ hⱼ exp(ũⱼ + 2(1+γⱼ) t) = 0,
//! dσᵢ/dt = hᵢ exp(ũᵢ + 2(1+γᵢ) t),
//! ```
//!
//! which has two structural identities used as integrator diagnostics: the
//! Neumann identity dũᵢ/dt + Σⱼ aᵢⱼ σⱼ = 0 (a linear first integral,
//! preserved by Runge-Kutta steps to rounding) and the radial conservation
//! law Σᵢ dσᵢ/dt = 2 Σᵢ (1+γᵢ)σᵢ − ½ Σᵢⱼ aᵢⱼ σᵢσⱼ.

// negated float comparisons below are deliberate NaN guards
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::io::{BufRead, Write};

use thiserror::Error;

use crate::numeric::Rational;

#[derive(Debug, Clone, Error)]
pub enum RadialError {
    #[error("invalid radial problem: {0}")]
    Invalid(String),
    #[error("step size underflow at t = {t}")]
    NonConvergence { t: f64 },
    #[error("component {component} exponent overflow at t = {t}: solution not continuable")]
    Overflow { t: f64, component: usize },
}

#[derive(Debug, Clone, Error)]
pub enum TrajectoryCsvError {
    #[error("malformed trajectory CSV: {0}")]
    Malformed(String),
    #[error("io: {0}")]
    Io(String),
}

/// Start radius must satisfy r₀ ≤ 1e-3 so the series initialization is in
/// its convergence regime.
pub const MAX_START_RADIUS: f64 = 1e-3;

/// An n-component radial problem with constant coefficients hᵢ > 0, source
/// strengths γᵢ > −1 and initial heights ηᵢ = ũᵢ(0).
#[derive(Debug, Clone)]
pub struct RadialProblem {
    pub gamma: Vec<Rational>,
    pub h: Vec<f64>,
    pub eta: Vec<f64>,
    pub t_start: f64,
    pub t_end: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
}

impl RadialProblem {
    pub fn new(
        gamma: Vec<Rational>,
        h: Vec<f64>,
        eta: Vec<f64>,
        t_start: f64,
        t_end: f64,
    ) -> Result<RadialProblem, RadialError> {
        let p = RadialProblem {
            gamma,
            h,
            eta,
            t_start,
            t_end,
            rel_tol: 1e-10,
            abs_tol: 1e-10,
            max_step: 0.5,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_tolerances(mut self, rel: f64, abs: f64) -> RadialProblem {
        self.rel_tol = rel;
        self.abs_tol = abs;
        self
    }

    pub fn n(&self) -> usize {
        self.gamma.len()
    }

    fn validate(&self) -> Result<(), RadialError> {
        let n = self.gamma.len();
        if n == 0 {
            return Err(RadialError::Invalid("empty problem".into()));
        }
        if self.h.len() != n || self.eta.len() != n {
            return Err(RadialError::Invalid(format!(
                "length mismatch: gamma {}, h {}, eta {}",
                n,
                self.h.len(),
                self.eta.len()
            )));
        }
        for (i, g) in self.gamma.iter().enumerate() {
            if g.to_f64() <= -1.0 {
                return Err(RadialError::Invalid(format!("gamma[{}] <= -1", i)));
            }
        }
        if self.h.iter().any(|&h| !(h > 0.0)) {
            return Err(RadialError::Invalid("h must be positive".into()));
        }
        if !(self.t_start < self.t_end) {
            return Err(RadialError::Invalid("t_start must be below t_end".into()));
        }
        if self.t_start.exp() > MAX_START_RADIUS * (1.0 + 1e-12) {
            return Err(RadialError::Invalid(format!(
                "start radius e^{} exceeds {}",
                self.t_start, MAX_START_RADIUS
            )));
        }
        if !(self.rel_tol > 0.0) || !(self.abs_tol > 0.0) || !(self.max_step > 0.0) {
            return Err(RadialError::Invalid("tolerances must be positive".into()));
        }
        Ok(())
    }
}

/// Fast/slow decay verdict for one component at one grid time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decay {
    Fast,
    Slow,
}

/// An accepted-step record of the integration, stored per component.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub gamma: Vec<f64>,
    pub h: Vec<f64>,
    pub t: Vec<f64>,
    /// ũᵢ(t) rows.
    pub u: Vec<Vec<f64>>,
    /// dũᵢ/dt rows.
    pub du: Vec<Vec<f64>>,
    /// σᵢ(t) rows.
    pub sigma: Vec<Vec<f64>>,
}

fn cartan_row(n: usize, i: usize) -> impl Iterator<Item = (usize, f64)> {
    let lo = i.saturating_sub(1);
    let hi = (i + 1).min(n - 1);
    (lo..=hi).map(move |j| {
        let c = if i == j { 2.0 } else { -1.0 };
        (j, c)
    })
}

impl Trajectory {
    pub fn n(&self) -> usize {
        self.gamma.len()
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// dσᵢ/dt at grid index k, recomputed from the state.
    pub fn sigma_rate(&self, i: usize, k: usize) -> f64 {
        let q = 2.0 + 2.0 * self.gamma[i];
        self.h[i] * (self.u[i][k] + q * self.t[k]).exp()
    }

    pub fn sigma_at(&self, k: usize) -> Vec<f64> {
        (0..self.n()).map(|i| self.sigma[i][k]).collect()
    }
}

const P5_C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const P5_A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
// difference between the 5th- and 4th-order weights
const P5_E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

struct Rhs {
    n: usize,
    gamma: Vec<f64>,
    h: Vec<f64>,
}

impl Rhs {
    /// State layout: [ũ₀..ũₙ₋₁, p₀..pₙ₋₁, σ₀..σₙ₋₁] with p = dũ/dt.
    fn eval(&self, t: f64, y: &[f64], dy: &mut [f64]) -> Result<(), usize> {
        let n = self.n;
        let mut w = vec![0.0; n];
        for j in 0..n {
            let x = y[j] + (2.0 + 2.0 * self.gamma[j]) * t;
            if x > 700.0 {
                return Err(j);
            }
            w[j] = self.h[j] * x.exp();
        }
        for i in 0..n {
            dy[i] = y[n + i];
            let mut force = 0.0;
            for (j, c) in cartan_row(n, i) {
                force += c * w[j];
            }
            dy[n + i] = -force;
            dy[2 * n + i] = w[i];
        }
        Ok(())
    }
}

/// Integrates the problem with an embedded Dormand–Prince 5(4) pair under PI
/// step control. The series expansion of the integral equation provides
/// second-order-accurate state at the start radius.
pub fn integrate(p: &RadialProblem) -> Result<Trajectory, RadialError> {
    p.validate()?;
    let n = p.n();
    let gamma: Vec<f64> = p.gamma.iter().map(|g| g.to_f64()).collect();
    let rhs = Rhs { n, gamma: gamma.clone(), h: p.h.clone() };

    // series start: u_i = eta_i - sum_j a_ij c_j / q_j^2,
    //               p_i = -sum_j a_ij c_j / q_j,
    //               sigma_i = (c_i/q_i) (1 - sum_j a_ij (c_j/q_j^2) q_i/(q_i+q_j))
    // with c_i = h_i e^{eta_i} r0^{q_i}, q_i = 2 + 2 gamma_i.
    let r0 = p.t_start.exp();
    let q: Vec<f64> = gamma.iter().map(|g| 2.0 + 2.0 * g).collect();
    let c: Vec<f64> = (0..n)
        .map(|i| p.h[i] * p.eta[i].exp() * r0.powf(q[i]))
        .collect();
    for j in 0..n {
        // the series start is only valid while the first correction is small;
        // a hot component has already bubbled below the start radius
        if !c[j].is_finite() || c[j] / (q[j] * q[j]) > 0.5 {
            return Err(RadialError::Overflow { t: p.t_start, component: j });
        }
    }
    let mut y = vec![0.0; 3 * n];
    for i in 0..n {
        let mut du_corr = 0.0;
        let mut u_corr = 0.0;
        let mut s_corr = 0.0;
        for (j, a) in cartan_row(n, i) {
            u_corr += a * c[j] / (q[j] * q[j]);
            du_corr += a * c[j] / q[j];
            s_corr += a * (c[j] / (q[j] * q[j])) * (q[i] / (q[i] + q[j]));
        }
        y[i] = p.eta[i] - u_corr;
        y[n + i] = -du_corr;
        y[2 * n + i] = (c[i] / q[i]) * (1.0 - s_corr);
    }

    let mut traj = Trajectory {
        gamma,
        h: p.h.clone(),
        t: Vec::new(),
        u: vec![Vec::new(); n],
        du: vec![Vec::new(); n],
        sigma: vec![Vec::new(); n],
    };
    let mut record = |t: f64, y: &[f64]| {
        traj.t.push(t);
        for i in 0..n {
            traj.u[i].push(y[i]);
            traj.du[i].push(y[n + i]);
            traj.sigma[i].push(y[2 * n + i]);
        }
    };

    let dim = 3 * n;
    let mut t = p.t_start;
    record(t, &y);

    let overflow = |t: f64, component: usize| RadialError::Overflow { t, component };
    let mut k = vec![vec![0.0; dim]; 7];
    rhs.eval(t, &y, &mut k[0]).map_err(|c| overflow(t, c))?;

    let safe = 0.9;
    let beta = 0.04;
    let expo1 = 0.2 - beta * 0.75;
    let mut facold = 1e-4f64;
    let mut h = 1e-4f64.min(p.t_end - p.t_start);
    let mut rejected = false;
    let mut ytmp = vec![0.0; dim];
    let mut ynew = vec![0.0; dim];

    while t < p.t_end {
        h = h.min(p.max_step).min(p.t_end - t);
        if h < 1e-13 * t.abs().max(1.0) {
            return Err(RadialError::NonConvergence { t });
        }
        // stages 2..7 (stage 7 state is the 5th-order solution: FSAL)
        let mut failed_component = None;
        for s in 1..7 {
            for d in 0..dim {
                let mut acc = 0.0;
                for (j, kj) in k.iter().enumerate().take(s) {
                    let a = P5_A[s - 1][j];
                    if a != 0.0 {
                        acc += a * kj[d];
                    }
                }
                ytmp[d] = y[d] + h * acc;
            }
            if s == 6 {
                ynew.copy_from_slice(&ytmp);
            }
            if let Err(c) = rhs.eval(t + P5_C[s] * h, &ytmp, &mut k[s]) {
                failed_component = Some(c);
                break;
            }
        }
        if let Some(c) = failed_component {
            // an exploding exponent inside the attempted step: shrink, and if
            // the step is already tiny the solution is not continuable
            if h <= 1e-10 {
                return Err(overflow(t, c));
            }
            h *= 0.25;
            rejected = true;
            continue;
        }

        let mut err = 0.0;
        for d in 0..dim {
            let mut e = 0.0;
            for (j, kj) in k.iter().enumerate() {
                if P5_E[j] != 0.0 {
                    e += P5_E[j] * kj[d];
                }
            }
            e *= h;
            let sc = p.abs_tol + p.rel_tol * y[d].abs().max(ynew[d].abs());
            err += (e / sc) * (e / sc);
        }
        err = (err / dim as f64).sqrt();

        if err <= 1.0 {
            t += h;
            y.copy_from_slice(&ynew);
            k.swap(0, 6); // FSAL
            record(t, &y);
            let fac11 = err.max(1e-12).powf(expo1);
            let mut fac = fac11 / facold.powf(beta);
            fac = (fac / safe).clamp(0.2, 5.0);
            let mut hnew = h / fac;
            if rejected {
                hnew = hnew.min(h);
            }
            facold = err.max(1e-4);
            rejected = false;
            h = hnew;
        } else {
            let fac11 = err.powf(expo1);
            h /= (fac11 / safe).min(10.0);
            rejected = true;
        }
    }
    Ok(traj)
}

/// Closed-form scalar (n = 1) solution and running energy:
/// ũ(r) = log(4μ²λ²/h) − 2 log(1 + λ² r^{2μ}),
/// σ(r) = 2μ λ² r^{2μ} / (1 + λ² r^{2μ}).
pub fn liouville_exact(mu: &Rational, lambda: f64, h: f64, r: f64) -> (f64, f64) {
    let mu = mu.to_f64();
    let amp = (4.0 * mu * mu * lambda * lambda / h).ln();
    if r == 0.0 {
        return (amp, 0.0);
    }
    // z = log(lambda^2 r^{2 mu}), evaluated in log space to survive huge r
    let z = 2.0 * mu * r.ln() + 2.0 * lambda.ln();
    let log1p_ez = if z > 0.0 { z + (-z).exp().ln_1p() } else { z.exp().ln_1p() };
    let sigma = 2.0 * mu / (1.0 + (-z).exp());
    (amp - 2.0 * log1p_ez, sigma)
}

/// Per-grid-point residuals of the two structural identities, raw and
/// relative (relative to max(1, scale of the participating terms)).
#[derive(Debug, Clone)]
pub struct ResidualReport {
    pub t: Vec<f64>,
    /// neumannᵢ(t) = dũᵢ/dt + Σⱼ aᵢⱼ σⱼ, per component.
    pub neumann: Vec<Vec<f64>>,
    pub neumann_rel: Vec<Vec<f64>>,
    /// pohozaev(t) = Σᵢ rσᵢ′ − 2Σᵢ(1+γᵢ)σᵢ + ½Σᵢⱼ aᵢⱼ σᵢσⱼ.
    pub pohozaev: Vec<f64>,
    pub pohozaev_rel: Vec<f64>,
}

impl ResidualReport {
    pub fn max_neumann_rel(&self) -> f64 {
        self.neumann_rel
            .iter()
            .flat_map(|row| row.iter().copied())
            .fold(0.0, f64::max)
    }

    pub fn max_pohozaev_rel(&self) -> f64 {
        self.pohozaev_rel.iter().copied().fold(0.0, f64::max)
    }
}

pub fn residual_report(traj: &Trajectory) -> ResidualReport {
    let n = traj.n();
    let len = traj.len();
    let mut neumann = vec![vec![0.0; len]; n];
    let mut neumann_rel = vec![vec![0.0; len]; n];
    let mut pohozaev = vec![0.0; len];
    let mut pohozaev_rel = vec![0.0; len];
    for k in 0..len {
        for i in 0..n {
            let mut coupling = 0.0;
            for (j, c) in cartan_row(n, i) {
                coupling += c * traj.sigma[j][k];
            }
            let res = traj.du[i][k] + coupling;
            neumann[i][k] = res;
            neumann_rel[i][k] = res.abs() / traj.du[i][k].abs().max(1.0);
        }
        let mut rate = 0.0;
        let mut linear = 0.0;
        let mut quad = 0.0;
        for i in 0..n {
            rate += traj.sigma_rate(i, k);
            linear += 2.0 * (1.0 + traj.gamma[i]) * traj.sigma[i][k];
            for (j, c) in cartan_row(n, i) {
                quad += 0.5 * c * traj.sigma[i][k] * traj.sigma[j][k];
            }
        }
        let res = rate - linear + quad;
        pohozaev[k] = res;
        pohozaev_rel[k] = res.abs() / (rate.abs() + linear.abs() + quad.abs()).max(1.0);
    }
    ResidualReport { t: traj.t.clone(), neumann, neumann_rel, pohozaev, pohozaev_rel }
}

/// Σᵢⱼ aᵢⱼ σᵢσⱼ − 4 Σᵢ (1+γᵢ) σᵢ in hardware floats, for trajectory
/// endpoints.
pub fn pohozaev_residual_f64(gamma: &[f64], sigma: &[f64]) -> f64 {
    let n = gamma.len();
    let mut acc = 0.0;
    for i in 0..n {
        for (j, c) in cartan_row(n, i) {
            acc += c * sigma[i] * sigma[j];
        }
        acc -= 4.0 * (1.0 + gamma[i]) * sigma[i];
    }
    acc
}

/// Default threshold for [`classify_decay`].
pub const DEFAULT_FAST_THRESHOLD: f64 = 5.0;

/// A component is `Fast` at grid index k when it sits at least `threshold`
/// below the harmonic profile −2 log r, i.e. ũᵢ + 2(1+γᵢ)t ≤ −M, and is not
/// ascending towards it (dũᵢ/dt + 2(1+γᵢ) ≤ 0, equivalently
/// Σⱼ aᵢⱼ σⱼ ≥ 2+2γᵢ). A component far below the profile but rising is a
/// bubble in formation, not a fast-decay component.
pub fn classify_decay(traj: &Trajectory, k: usize, threshold: f64) -> Vec<Decay> {
    (0..traj.n())
        .map(|i| {
            let q = 2.0 + 2.0 * traj.gamma[i];
            let below = traj.u[i][k] + q * traj.t[k] <= -threshold;
            let descending = traj.du[i][k] + q <= 0.0;
            if below && descending {
                Decay::Fast
            } else {
                Decay::Slow
            }
        })
        .collect()
}

/// A detected plateau: a maximal grid interval of length >= `min_length`
/// where every |dσᵢ/dt| stays within `slope_tol` and at least one component
/// is a fast-decay component.
#[derive(Debug, Clone)]
pub struct Plateau {
    pub t_start: f64,
    pub t_end: f64,
    pub sigma: Vec<f64>,
}

pub const DEFAULT_SLOPE_TOL: f64 = 1e-3;
pub const DEFAULT_MIN_LENGTH: f64 = 2.0;

pub fn detect_plateaus(
    traj: &Trajectory,
    slope_tol: f64,
    min_length: f64,
    fast_threshold: f64,
) -> Vec<Plateau> {
    let len = traj.len();
    let max_rate = |k: usize| {
        (0..traj.n())
            .map(|i| traj.sigma_rate(i, k).abs())
            .fold(0.0, f64::max)
    };
    let calm: Vec<bool> = (0..len).map(|k| max_rate(k) <= slope_tol).collect();
    let flat: Vec<bool> = (0..len)
        .map(|k| {
            calm[k] && classify_decay(traj, k, fast_threshold).contains(&Decay::Fast)
        })
        .collect();
    // the slope crosses the tolerance between grid points; log-linear
    // interpolation recovers the crossing time so plateau lengths do not
    // depend on where accepted steps happen to land
    let cross = |inside: usize, outside: usize| -> f64 {
        let (wi, wo) = (max_rate(inside), max_rate(outside));
        if !(wo > slope_tol && wi > 0.0 && wi <= slope_tol) {
            return traj.t[inside];
        }
        let frac = (wo / slope_tol).ln() / (wo / wi).ln();
        traj.t[outside] + (traj.t[inside] - traj.t[outside]) * frac.clamp(0.0, 1.0)
    };
    let mut out = Vec::new();
    let mut k = 0;
    while k < len {
        if !flat[k] {
            k += 1;
            continue;
        }
        let start = k;
        while k + 1 < len && flat[k + 1] {
            k += 1;
        }
        let t0 = if start > 0 && !calm[start - 1] {
            cross(start, start - 1)
        } else {
            traj.t[start]
        };
        let t1 = if k + 1 < len && !calm[k + 1] {
            cross(k, k + 1)
        } else {
            traj.t[k]
        };
        if t1 - t0 >= min_length {
            let mid = 0.5 * (t0 + t1);
            let mid_idx = (start..=k)
                .min_by(|&a, &b| {
                    (traj.t[a] - mid)
                        .abs()
                        .partial_cmp(&(traj.t[b] - mid).abs())
                        .unwrap()
                })
                .unwrap();
            out.push(Plateau { t_start: t0, t_end: t1, sigma: traj.sigma_at(mid_idx) });
        }
        k += 1;
    }
    out
}

/// Partitions planar points into groups of mutually comparable distances.
///
/// Pairwise distances are sorted; the first multiplicative gap exceeding
/// `ratio` splits "internal" from "external" scales, and single-linkage
/// merging below the split yields the groups. Without such a gap all points
/// form one group. Singletons are allowed.
pub fn detect_groups(points: &[(f64, f64)], ratio: f64) -> Vec<Vec<usize>> {
    assert!(ratio > 1.0, "ratio must exceed 1");
    let m = points.len();
    if m == 0 {
        return Vec::new();
    }
    let mut dists: Vec<f64> = Vec::with_capacity(m * (m - 1) / 2);
    for i in 0..m {
        for j in (i + 1)..m {
            let dx = points[i].0 - points[j].0;
            let dy = points[i].1 - points[j].1;
            dists.push((dx * dx + dy * dy).sqrt());
        }
    }
    dists.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut threshold = f64::INFINITY;
    for w in dists.windows(2) {
        let (a, b) = (w[0], w[1]);
        if (a == 0.0 && b > 0.0) || (a > 0.0 && b / a > ratio) {
            threshold = a;
            break;
        }
    }
    // union-find over pairs within the internal scale
    let mut parent: Vec<usize> = (0..m).collect();
    fn find(parent: &mut Vec<usize>, i: usize) -> usize {
        if parent[i] != i {
            let r = find(parent, parent[i]);
            parent[i] = r;
        }
        parent[i]
    }
    for i in 0..m {
        for j in (i + 1)..m {
            let dx = points[i].0 - points[j].0;
            let dy = points[i].1 - points[j].1;
            let d = (dx * dx + dy * dy).sqrt();
            if d <= threshold {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri] = rj;
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut root_of: Vec<Option<usize>> = vec![None; m];
    for i in 0..m {
        let r = find(&mut parent, i);
        match root_of[r] {
            Some(g) => groups[g].push(i),
            None => {
                root_of[r] = Some(groups.len());
                groups.push(vec![i]);
            }
        }
    }
    groups
}

/// Writes the trajectory as CSV: `t,r,u1..un,du1..dun,sigma1..sigman,
/// pohozaev_residual` with 17 significant digits.
pub fn write_trajectory_csv<W: Write>(w: &mut W, traj: &Trajectory) -> std::io::Result<()> {
    let n = traj.n();
    let mut header = String::from("t,r");
    for i in 1..=n {
        header.push_str(&format!(",u{}", i));
    }
    for i in 1..=n {
        header.push_str(&format!(",du{}", i));
    }
    for i in 1..=n {
        header.push_str(&format!(",sigma{}", i));
    }
    header.push_str(",pohozaev_residual");
    writeln!(w, "{}", header)?;
    let report = residual_report(traj);
    for k in 0..traj.len() {
        let mut row = format!("{:.16e},{:.16e}", traj.t[k], traj.t[k].exp());
        for i in 0..n {
            row.push_str(&format!(",{:.16e}", traj.u[i][k]));
        }
        for i in 0..n {
            row.push_str(&format!(",{:.16e}", traj.du[i][k]));
        }
        for i in 0..n {
            row.push_str(&format!(",{:.16e}", traj.sigma[i][k]));
        }
        row.push_str(&format!(",{:.16e}", report.pohozaev_rel[k]));
        writeln!(w, "{}", row)?;
    }
    Ok(())
}

/// Reads a trajectory CSV back; `gamma` and `h` supply the problem constants
/// the file does not carry.
pub fn read_trajectory_csv<R: BufRead>(
    r: R,
    gamma: &[Rational],
    h: &[f64],
) -> Result<Trajectory, TrajectoryCsvError> {
    let mut lines = r.lines();
    let header = lines
        .next()
        .ok_or_else(|| TrajectoryCsvError::Malformed("empty file".into()))?
        .map_err(|e| TrajectoryCsvError::Io(e.to_string()))?;
    let cols: Vec<&str> = header.trim().split(',').collect();
    if cols.len() < 6 || cols[0] != "t" || cols[1] != "r" {
        return Err(TrajectoryCsvError::Malformed(format!(
            "unexpected header `{}`",
            header
        )));
    }
    if !(cols.len() - 3).is_multiple_of(3) {
        return Err(TrajectoryCsvError::Malformed(
            "column count does not decompose as t,r,u*,du*,sigma*,residual".into(),
        ));
    }
    let n = (cols.len() - 3) / 3;
    for i in 0..n {
        if cols[2 + i] != format!("u{}", i + 1)
            || cols[2 + n + i] != format!("du{}", i + 1)
            || cols[2 + 2 * n + i] != format!("sigma{}", i + 1)
        {
            return Err(TrajectoryCsvError::Malformed(format!(
                "unexpected column layout in `{}`",
                header
            )));
        }
    }
    if *cols.last().unwrap() != "pohozaev_residual" {
        return Err(TrajectoryCsvError::Malformed(
            "missing pohozaev_residual column".into(),
        ));
    }
    if gamma.len() != n || h.len() != n {
        return Err(TrajectoryCsvError::Malformed(format!(
            "file has {} components but {} gamma / {} h values were supplied",
            n,
            gamma.len(),
            h.len()
        )));
    }
    let mut traj = Trajectory {
        gamma: gamma.iter().map(|g| g.to_f64()).collect(),
        h: h.to_vec(),
        t: Vec::new(),
        u: vec![Vec::new(); n],
        du: vec![Vec::new(); n],
        sigma: vec![Vec::new(); n],
    };
    for (lineno, line) in lines.enumerate() {
        let line = line.map_err(|e| TrajectoryCsvError::Io(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let vals: Vec<f64> = line
            .trim()
            .split(',')
            .map(|s| s.parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| {
                TrajectoryCsvError::Malformed(format!("line {}: {}", lineno + 2, e))
            })?;
        if vals.len() != cols.len() {
            return Err(TrajectoryCsvError::Malformed(format!(
                "line {}: expected {} fields, got {}",
                lineno + 2,
                cols.len(),
                vals.len()
            )));
        }
        traj.t.push(vals[0]);
        for i in 0..n {
            traj.u[i].push(vals[2 + i]);
            traj.du[i].push(vals[2 + n + i]);
            traj.sigma[i].push(vals[2 + 2 * n + i]);
        }
    }
    if traj.t.is_empty() {
        return Err(TrajectoryCsvError::Malformed("no data rows".into()));
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_problem() -> RadialProblem {
        RadialProblem::new(
            vec![Rational::zero()],
            vec![1.0],
            vec![0.0],
            -7.0,
            7.0,
        )
        .unwrap()
    }

    #[test]
    fn liouville_exact_examples() {
        let mu = Rational::one();
        let (u0, s0) = liouville_exact(&mu, 0.5, 1.0, 0.0);
        assert!(u0.abs() < 1e-15);
        assert_eq!(s0, 0.0);
        let (_, s2) = liouville_exact(&mu, 0.5, 1.0, 2.0);
        assert!((s2 - 1.0).abs() < 1e-14);
        let (_, sinf) = liouville_exact(&mu, 0.5, 1.0, 1e12);
        assert!((sinf - 2.0).abs() < 1e-9);
    }

    #[test]
    fn liouville_sigma_agrees_with_quadrature() {
        // independent check of the closed form: integrate d sigma/dt by
        // Simpson's rule on a fine grid
        let mu = Rational::one();
        let (t0, t1) = (-20.0f64, 1.0f64);
        let steps = 8000;
        let dt = (t1 - t0) / steps as f64;
        let rate = |t: f64| {
            let (u, _) = liouville_exact(&mu, 0.5, 1.0, t.exp());
            (u + 2.0 * t).exp()
        };
        let mut acc = 0.0;
        for k in 0..steps {
            let a = t0 + k as f64 * dt;
            acc += dt / 6.0 * (rate(a) + 4.0 * rate(a + dt / 2.0) + rate(a + dt));
        }
        let (_, sig) = liouville_exact(&mu, 0.5, 1.0, t1.exp());
        assert!((acc - sig).abs() < 1e-9, "{} vs {}", acc, sig);
    }

    #[test]
    fn scalar_integration_matches_closed_form() {
        let traj = integrate(&scalar_problem()).unwrap();
        let mu = Rational::one();
        let mut sup_u: f64 = 0.0;
        let mut sup_s: f64 = 0.0;
        for k in 0..traj.len() {
            let (u, s) = liouville_exact(&mu, 0.5, 1.0, traj.t[k].exp());
            sup_u = sup_u.max((traj.u[0][k] - u).abs());
            sup_s = sup_s.max((traj.sigma[0][k] - s).abs());
        }
        assert!(sup_u <= 1e-8, "sup |u - exact| = {}", sup_u);
        assert!(sup_s <= 1e-6, "sup |sigma - exact| = {}", sup_s);
    }

    #[test]
    fn sigma_is_nondecreasing() {
        let traj = integrate(&scalar_problem()).unwrap();
        for i in 0..traj.n() {
            for k in 1..traj.len() {
                assert!(traj.sigma[i][k] >= traj.sigma[i][k - 1] - 1e-12);
            }
        }
    }

    #[test]
    fn residuals_vanish_on_analytic_trajectory() {
        // sample the closed form onto a synthetic trajectory
        let mu = Rational::one();
        let mut traj = Trajectory {
            gamma: vec![0.0],
            h: vec![1.0],
            t: Vec::new(),
            u: vec![Vec::new()],
            du: vec![Vec::new()],
            sigma: vec![Vec::new()],
        };
        for k in 0..200 {
            let t = -6.0 + k as f64 * 0.05;
            let (u, s) = liouville_exact(&mu, 0.5, 1.0, t.exp());
            traj.t.push(t);
            traj.u[0].push(u);
            traj.du[0].push(-2.0 * s);
            traj.sigma[0].push(s);
        }
        let rep = residual_report(&traj);
        assert!(rep.max_neumann_rel() < 1e-13);
        assert!(rep.max_pohozaev_rel() < 1e-13);
    }

    #[test]
    fn residuals_vanish_identically_at_zero_energy() {
        let traj = Trajectory {
            gamma: vec![0.0, 0.0],
            h: vec![1.0, 1.0],
            t: vec![-400.0, -390.0],
            u: vec![vec![1.0, 1.0], vec![-2.0, -2.0]],
            du: vec![vec![0.0, 0.0], vec![0.0, 0.0]],
            sigma: vec![vec![0.0, 0.0], vec![0.0, 0.0]],
        };
        let rep = residual_report(&traj);
        assert_eq!(rep.max_neumann_rel(), 0.0);
        assert_eq!(rep.max_pohozaev_rel(), 0.0);
    }

    #[test]
    fn integrated_residuals_stay_small() {
        let p = RadialProblem::new(
            vec![Rational::zero(), Rational::zero()],
            vec![1.0, 1.0],
            vec![0.0, -30.0],
            -7.0,
            40.0,
        )
        .unwrap();
        let traj = integrate(&p).unwrap();
        let rep = residual_report(&traj);
        assert!(rep.max_neumann_rel() <= 1e-6, "{}", rep.max_neumann_rel());
        assert!(rep.max_pohozaev_rel() <= 1e-6, "{}", rep.max_pohozaev_rel());
    }

    #[test]
    fn symmetric_run_collapses_to_scalar() {
        let p = RadialProblem::new(
            vec![Rational::zero(), Rational::zero()],
            vec![1.0, 1.0],
            vec![0.0, 0.0],
            -7.0,
            12.0,
        )
        .unwrap();
        let traj = integrate(&p).unwrap();
        for k in 0..traj.len() {
            assert!((traj.sigma[0][k] - traj.sigma[1][k]).abs() <= 1e-9);
        }
        let last = traj.len() - 1;
        assert!((traj.sigma[0][last] - 4.0).abs() <= 1e-3);
        assert!((traj.sigma[1][last] - 4.0).abs() <= 1e-3);
    }

    #[test]
    fn tower_run_hits_three_plateaus() {
        let p = RadialProblem::new(
            vec![Rational::zero(), Rational::zero()],
            vec![1.0, 1.0],
            vec![0.0, -30.0],
            -7.0,
            40.0,
        )
        .unwrap();
        let traj = integrate(&p).unwrap();
        let plateaus = detect_plateaus(&traj, 1e-3, 1.0, DEFAULT_FAST_THRESHOLD);
        let expect = [(2.0, 0.0), (2.0, 4.0), (4.0, 4.0)];
        assert_eq!(plateaus.len(), 3, "{:?}", plateaus);
        for (p, e) in plateaus.iter().zip(&expect) {
            assert!((p.sigma[0] - e.0).abs() <= 0.05, "{:?} vs {:?}", p.sigma, e);
            assert!((p.sigma[1] - e.1).abs() <= 0.05, "{:?} vs {:?}", p.sigma, e);
        }
    }

    #[test]
    fn scalar_run_has_one_plateau_at_two() {
        let traj = integrate(&scalar_problem()).unwrap();
        let plateaus =
            detect_plateaus(&traj, DEFAULT_SLOPE_TOL, DEFAULT_MIN_LENGTH, DEFAULT_FAST_THRESHOLD);
        assert_eq!(plateaus.len(), 1, "{:?}", plateaus);
        assert!((plateaus[0].sigma[0] - 2.0).abs() <= 1e-3);
    }

    #[test]
    fn decay_classification_on_the_tower() {
        let p = RadialProblem::new(
            vec![Rational::zero(), Rational::zero()],
            vec![1.0, 1.0],
            vec![0.0, -30.0],
            -7.0,
            40.0,
        )
        .unwrap();
        let traj = integrate(&p).unwrap();
        let at = |t: f64| {
            (0..traj.len())
                .min_by(|&a, &b| {
                    (traj.t[a] - t).abs().partial_cmp(&(traj.t[b] - t).abs()).unwrap()
                })
                .unwrap()
        };
        // start: both bounded, neither decaying
        assert_eq!(
            classify_decay(&traj, 0, DEFAULT_FAST_THRESHOLD),
            vec![Decay::Slow, Decay::Slow]
        );
        // after the first bubble: component 1 done, component 2 rising
        assert_eq!(
            classify_decay(&traj, at(5.0), DEFAULT_FAST_THRESHOLD),
            vec![Decay::Fast, Decay::Slow]
        );
        // terminal plateau: both fast
        assert_eq!(
            classify_decay(&traj, traj.len() - 1, DEFAULT_FAST_THRESHOLD),
            vec![Decay::Fast, Decay::Fast]
        );
    }

    #[test]
    fn symmetric_run_ends_fast_fast() {
        let p = RadialProblem::new(
            vec![Rational::zero(), Rational::zero()],
            vec![1.0, 1.0],
            vec![0.0, 0.0],
            -7.0,
            12.0,
        )
        .unwrap();
        let traj = integrate(&p).unwrap();
        assert_eq!(
            classify_decay(&traj, traj.len() - 1, DEFAULT_FAST_THRESHOLD),
            vec![Decay::Fast, Decay::Fast]
        );
    }

    #[test]
    fn halving_tolerances_halves_the_error() {
        let base = scalar_problem().with_tolerances(2e-6, 2e-6);
        let tight = scalar_problem().with_tolerances(1e-6, 1e-6);
        let mu = Rational::one();
        let sup = |p: &RadialProblem| {
            let traj = integrate(p).unwrap();
            let mut sup: f64 = 0.0;
            for k in 0..traj.len() {
                let (u, _) = liouville_exact(&mu, 0.5, 1.0, traj.t[k].exp());
                sup = sup.max((traj.u[0][k] - u).abs());
            }
            sup
        };
        let e_base = sup(&base);
        let e_tight = sup(&tight);
        assert!(
            e_base >= 2.0 * e_tight,
            "expected >= 2x improvement: {} vs {}",
            e_base,
            e_tight
        );
    }

    #[test]
    fn group_detection_examples() {
        let g = detect_groups(&[(0.0, 0.0), (1e-6, 0.0), (1.0, 0.0)], 100.0);
        assert_eq!(g.len(), 2);
        assert_eq!(g[0], vec![0, 1]);
        assert_eq!(g[1], vec![2]);

        let g = detect_groups(&[(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)], 100.0);
        assert_eq!(g.len(), 1);

        let e = 1e-4;
        let pts: Vec<(f64, f64)> = [0.0, e, 2.0 * e, 1.0, 1.0 + e, 1e6]
            .iter()
            .map(|&x| (x, 0.0))
            .collect();
        let g = detect_groups(&pts, 100.0);
        assert_eq!(g.len(), 3, "{:?}", g);
    }

    #[test]
    fn csv_roundtrip() {
        let traj = integrate(&scalar_problem()).unwrap();
        let mut buf = Vec::new();
        write_trajectory_csv(&mut buf, &traj).unwrap();
        let back = read_trajectory_csv(&buf[..], &[Rational::zero()], &[1.0]).unwrap();
        assert_eq!(back.len(), traj.len());
        let k = traj.len() / 2;
        assert_eq!(back.t[k], traj.t[k]);
        assert_eq!(back.u[0][k], traj.u[0][k]);
        assert_eq!(back.sigma[0][k], traj.sigma[0][k]);

        assert!(read_trajectory_csv(&b"bogus\n1,2\n"[..], &[], &[]).is_err());
    }

    #[test]
    fn problem_validation() {
        assert!(RadialProblem::new(vec![], vec![], vec![], -7.0, 1.0).is_err());
        assert!(
            RadialProblem::new(vec![Rational::zero()], vec![1.0], vec![0.0], -2.0, 7.0).is_err()
        );
        assert!(RadialProblem::new(
            vec![Rational::from_integer(-1)],
            vec![1.0],
            vec![0.0],
            -7.0,
            7.0
        )
        .is_err());
    }

    #[test]
    fn overflow_is_reported() {
        // a component this hot has already bubbled below the start radius,
        // so the run is not continuable from t_start
        let p =
            RadialProblem::new(vec![Rational::zero()], vec![1.0], vec![800.0], -7.0, 7.0).unwrap();
        assert!(matches!(
            integrate(&p),
            Err(RadialError::Overflow { component: 0, .. })
        ));
    }
}
