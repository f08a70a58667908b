//! Mean-field consistency equations.
//!
//! The constrained free-energy minimizer with discretization image `nu'`
//! has arc-wise Gibbs form with a shared magnetization `M`, which solves
//! the planar fixed-point equation `M = sum_k nu'(k) m_k(beta M)`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ArcMoments, Magnetization, Model, Vec2};
use crate::simplex::SimplexVector;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Target for `|M - G(M)|`.
    pub tol: f64,
    pub max_iter: usize,
    /// Residual below which Newton steps replace damped Picard steps.
    pub newton_below: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-12,
            max_iter: 10_000,
            newton_below: 1e-4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedPointReport {
    pub m: Magnetization,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
}

/// Reusable scratch space for repeated magnetization solves.
#[derive(Debug, Clone)]
pub struct MagnetizationSolver {
    pub options: SolverOptions,
    moments: Vec<ArcMoments>,
}

struct Eval {
    g: Vec2,
    // I - beta sum_k nu(k) Cov_k, symmetric
    jac: [f64; 3],
}

impl MagnetizationSolver {
    pub fn new(q: usize, options: SolverOptions) -> Self {
        MagnetizationSolver {
            options,
            moments: vec![ArcMoments::default(); q],
        }
    }

    fn eval(&mut self, model: &Model, nu: &[f64], m: Vec2) -> Eval {
        let beta = model.beta();
        model.moments_into(m * beta, &mut self.moments);
        let mut g = Vec2::ZERO;
        let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
        for (w, mo) in nu.iter().zip(&self.moments) {
            if *w == 0.0 {
                continue;
            }
            g += mo.mean * *w;
            a += w * mo.cov.a;
            b += w * mo.cov.b;
            c += w * mo.cov.c;
        }
        Eval {
            g,
            jac: [1.0 - beta * a, -beta * b, 1.0 - beta * c],
        }
    }

    /// Solves `M = sum_k nu(k) m_k(beta M)` starting from `start`.
    pub fn solve(&mut self, model: &Model, nu: &[f64], start: Vec2) -> Result<FixedPointReport> {
        let opts = self.options;
        let mut m = start;
        let mut ev = self.eval(model, nu, m);
        let mut res = (m - ev.g).norm();
        let mut lambda = 1.0;
        let mut newton_ok = true;
        for it in 0..opts.max_iter {
            if res <= opts.tol {
                return Ok(FixedPointReport {
                    m,
                    iterations: it,
                    residual: res,
                    converged: true,
                });
            }
            let r = m - ev.g;
            let mut used_newton = false;
            let mut cand = m + (ev.g - m) * lambda;
            if newton_ok && res < opts.newton_below {
                let [a, b, c] = ev.jac;
                let det = a * c - b * b;
                if det.abs() > 1e-14 {
                    let step = Vec2::new(-(c * r.x - b * r.y) / det, -(a * r.y - b * r.x) / det);
                    let trial = m + step;
                    if trial.norm() < 1.0 {
                        cand = trial;
                        used_newton = true;
                    }
                }
            }
            let next = self.eval(model, nu, cand);
            let next_res = (cand - next.g).norm();
            if next_res > res && !used_newton && lambda > 1e-6 {
                lambda *= 0.5;
                continue;
            }
            if used_newton && next_res > res {
                newton_ok = false;
                continue;
            }
            if used_newton {
                newton_ok = true;
            }
            m = cand;
            ev = next;
            res = next_res;
        }
        if res <= opts.tol {
            return Ok(FixedPointReport {
                m,
                iterations: opts.max_iter,
                residual: res,
                converged: true,
            });
        }
        Err(Error::NoConvergence {
            iterations: opts.max_iter,
            residual: res,
            last: m,
        })
    }
}

/// `M_0 = sum_k nu(k) m_k(0)`, the magnetization at beta = 0.
pub fn default_start(model: &Model, nu: &[f64]) -> Vec2 {
    nu.iter()
        .enumerate()
        .fold(Vec2::ZERO, |acc, (i, w)| acc + model.mean_at_zero(i) * *w)
}

fn check_len(model: &Model, nu: &SimplexVector) -> Result<()> {
    if nu.len() != model.q() {
        return Err(Error::invalid(format!(
            "simplex vector has {} entries, model has q = {}",
            nu.len(),
            model.q()
        )));
    }
    Ok(())
}

/// The right-hand side `G(M) = sum_k nu(k) m_k(beta M)` of the consistency equation.
pub fn consistency_map(model: &Model, nu: &SimplexVector, m: Magnetization) -> Result<Vec2> {
    check_len(model, nu)?;
    if !m.is_finite() {
        return Err(Error::invalid("magnetization must be finite"));
    }
    let mut solver = MagnetizationSolver::new(model.q(), model.solver_options());
    Ok(solver.eval(model, nu.weights(), m).g)
}

/// `|M - G(M)|`.
pub fn magnetization_residual(model: &Model, nu: &SimplexVector, m: Magnetization) -> Result<f64> {
    Ok((m - consistency_map(model, nu, m)?).norm())
}

/// Solves for `M_beta(nu')` with the model's solver options.
pub fn solve_magnetization(
    model: &Model,
    nu: &SimplexVector,
    warm_start: Option<Magnetization>,
) -> Result<FixedPointReport> {
    solve_magnetization_with(model, nu, warm_start, model.solver_options())
}

pub fn solve_magnetization_with(
    model: &Model,
    nu: &SimplexVector,
    warm_start: Option<Magnetization>,
    options: SolverOptions,
) -> Result<FixedPointReport> {
    check_len(model, nu)?;
    let start = match warm_start {
        Some(m) if m.is_finite() && m.norm() < 1.0 => m,
        Some(_) => return Err(Error::invalid("warm start must lie inside the unit disk")),
        None => default_start(model, nu.weights()),
    };
    MagnetizationSolver::new(model.q(), options).solve(model, nu.weights(), start)
}

/// Multi-start sweep: the default start plus eight starts on the circle of
/// radius 0.9. Returns the distinct fixed points found (separation > 1e-6),
/// in order of discovery. Starts that fail to converge are skipped.
pub fn magnetization_fixed_points(model: &Model, nu: &SimplexVector) -> Result<Vec<FixedPointReport>> {
    check_len(model, nu)?;
    let mut starts = vec![default_start(model, nu.weights())];
    starts.extend((0..8).map(|j| Vec2::polar(0.9, 2.0 * PI * j as f64 / 8.0)));
    let mut solver = MagnetizationSolver::new(model.q(), model.solver_options());
    let mut found: Vec<FixedPointReport> = Vec::new();
    for s in starts {
        if let Ok(rep) = solver.solve(model, nu.weights(), s) {
            if found.iter().all(|f| (f.m - rep.m).norm() > 1e-6) {
                found.push(rep);
            }
        }
    }
    if found.is_empty() {
        return Err(Error::NoConvergence {
            iterations: solver.options.max_iter,
            residual: f64::NAN,
            last: Vec2::ZERO,
        });
    }
    Ok(found)
}

/// Periodic trapezoid moments of `exp(x cos w)` over the full circle:
/// returns `(A(x), A'(x))` where `A = I1/I0`.
fn bessel_ratio(x: f64, resolution: usize) -> (f64, f64) {
    let n = resolution.max(16);
    let (mut s0, mut s1, mut s2) = (0.0, 0.0, 0.0);
    for j in 0..n {
        let c = (2.0 * PI * j as f64 / n as f64).cos();
        // shift by x keeps the exponent nonpositive
        let f = (x * (c - 1.0)).exp();
        s0 += f;
        s1 += f * c;
        s2 += f * c * c;
    }
    let a = s1 / s0;
    (a, s2 / s0 - a * a)
}

pub const DEFAULT_CIRCLE_RESOLUTION: usize = 512;

/// Order parameter `m*` of the continuous rotator model: `0` for `beta <= 2`,
/// otherwise the positive root of `m = A(beta m)`.
pub fn continuous_mstar(beta: f64, resolution: usize) -> Result<f64> {
    if !(beta.is_finite() && beta > 0.0) {
        return Err(Error::invalid(format!("beta must be positive, got {beta}")));
    }
    if beta <= 2.0 {
        return Ok(0.0);
    }
    let g = |m: f64| {
        let (a, da) = bessel_ratio(beta * m, resolution);
        (m - a, 1.0 - beta * da)
    };
    let (mut lo, mut hi) = (1e-8, 1.0);
    if g(lo).0 >= 0.0 {
        // beta is so close to 2 that the root sits below the bracket
        return Ok(0.0);
    }
    let mut m = 0.5 * (lo + hi);
    for _ in 0..200 {
        let (r, d) = g(m);
        if r.abs() <= 1e-15 {
            break;
        }
        if r < 0.0 {
            lo = m;
        } else {
            hi = m;
        }
        let newton = m - r / d;
        m = if d > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo < 1e-16 {
            break;
        }
    }
    Ok(m)
}

/// `F_q(x)`: mean of `sin w` under `exp(x sin w)` on `[-pi/q, pi/q]`.
pub fn checkerboard_map(model: &Model, x: f64) -> f64 {
    let q = model.q();
    let h = PI / q as f64;
    let n = model.params().nodes_per_arc.max(32);
    let r = x.abs().max(1.0);
    let panels = ((2.0 * h * (r.sqrt() / 10.0).max(r / 24.0)).ceil() as usize).max(1);
    let (gx, gw) = crate::quadrature::gauss_legendre(n);
    let pw = 2.0 * h / panels as f64;
    let (mut s0, mut s1) = (0.0, 0.0);
    for p in 0..panels {
        let lo = -h + pw * p as f64;
        for (t, w) in gx.iter().zip(&gw) {
            let s = (lo + 0.5 * pw * (t + 1.0)).sin();
            let f = w * (x * s).exp();
            s0 += f;
            s1 += f * s;
        }
    }
    s1 / s0
}

/// `F_q'(0) = 1/2 - (q / 4pi) sin(2pi/q)`.
pub fn checkerboard_slope_at_zero(q: usize) -> f64 {
    let qf = q as f64;
    0.5 - qf / (4.0 * PI) * (2.0 * PI / qf).sin()
}

/// Roots of `m = F_q(beta m)` in `[-1, 1]`, ascending. Always contains 0.
pub fn checkerboard_fixed_points(model: &Model) -> Result<Vec<f64>> {
    let q = model.q();
    if !q.is_multiple_of(2) {
        return Err(Error::invalid(format!("checkerboard needs even q, got {q}")));
    }
    let beta = model.beta();
    let h = |m: f64| m - checkerboard_map(model, beta * m);
    let step = 1e-3;
    let mut positive = Vec::new();
    let mut prev_m = step;
    let mut prev_h = h(prev_m);
    let n = (1.0 / step).round() as usize;
    for i in 2..=n {
        let m = step * i as f64;
        let hm = h(m);
        if hm == 0.0 {
            positive.push(m);
        } else if prev_h != 0.0 && prev_h.signum() != hm.signum() {
            let (mut a, mut b, mut ha) = (prev_m, m, prev_h);
            for _ in 0..100 {
                let c = 0.5 * (a + b);
                let hc = h(c);
                if hc == 0.0 || b - a < 1e-16 {
                    a = c;
                    b = c;
                    break;
                }
                if hc.signum() == ha.signum() {
                    a = c;
                    ha = hc;
                } else {
                    b = c;
                }
            }
            positive.push(0.5 * (a + b));
        }
        prev_m = m;
        prev_h = hm;
    }
    let mut roots: Vec<f64> = positive.iter().rev().map(|m| -m).collect();
    roots.push(0.0);
    roots.extend(positive);
    Ok(roots)
}

/// Which constrained-minimizer regime a `(beta, q)` pair falls in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    UniquenessGuaranteed,
    NonUniqueness,
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeLabel {
    pub beta: f64,
    pub q: usize,
    pub regime: Regime,
    /// `beta sin^2(pi/q) < 1`
    pub uniqueness: bool,
    /// `beta (1 - (q/2pi) sin(2pi/q)) > 2`
    pub non_uniqueness: bool,
    /// `beta (1 - (q/pi)^2 sin^2(pi/q)) > 2`
    pub equidistribution_attractive: bool,
}

pub fn classify_regime(beta: f64, q: usize) -> RegimeLabel {
    let qf = q as f64;
    let s = (PI / qf).sin();
    let uniqueness = beta * s * s < 1.0;
    let non_uniqueness = beta * (1.0 - qf / (2.0 * PI) * (2.0 * PI / qf).sin()) > 2.0;
    let equidistribution_attractive = beta * (1.0 - (qf / PI).powi(2) * s * s) > 2.0;
    let regime = if uniqueness {
        Regime::UniquenessGuaranteed
    } else if non_uniqueness {
        Regime::NonUniqueness
    } else {
        Regime::Unknown
    };
    RegimeLabel {
        beta,
        q,
        regime,
        uniqueness,
        non_uniqueness,
        equidistribution_attractive,
    }
}

/// Inclusive, evenly spaced beta grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaGrid {
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl BetaGrid {
    pub fn values(&self) -> Vec<f64> {
        if self.steps <= 1 {
            return vec![self.min];
        }
        (0..self.steps)
            .map(|i| self.min + (self.max - self.min) * i as f64 / (self.steps - 1) as f64)
            .collect()
    }
}

/// Labels every cell of a `(beta, q)` grid, ordered by q then beta.
/// Only the phase-transition region `beta > 2` is accepted.
pub fn regime_grid(betas: BetaGrid, q_min: usize, q_max: usize) -> Result<Vec<RegimeLabel>> {
    if !(betas.min > 2.0) || betas.max < betas.min || !betas.max.is_finite() {
        return Err(Error::Regime(format!(
            "beta range [{}, {}] must lie in (2, inf)",
            betas.min, betas.max
        )));
    }
    if q_min < 3 || q_max < q_min {
        return Err(Error::invalid(format!("q range {q_min}..={q_max} must start at 3 or above")));
    }
    let bs = betas.values();
    Ok((q_min..=q_max)
        .flat_map(|q| bs.iter().map(move |&b| classify_regime(b, q)))
        .collect())
}
