//! The discrete free energy, its derivative along the flow, and the
//! periodic orbit of discretized Gibbs measures.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::consistency::{continuous_mstar, solve_magnetization, DEFAULT_CIRCLE_RESOLUTION};
use crate::dynamics::FieldEvaluator;
use crate::error::{Error, Result};
use crate::model::{Magnetization, Model, Vec2};
use crate::simplex::{tv_distance, SimplexVector};

/// `psi'(nu) = entropy_term + magnetization_term - log_partition_term`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FreeEnergyValue {
    pub value: f64,
    /// `sum_k nu(k) log(q nu(k))`
    pub entropy_term: f64,
    /// `(beta/2) |M|^2`
    pub magnetization_term: f64,
    /// `sum_k nu(k) log(q Z_k(beta M))`
    pub log_partition_term: f64,
    pub m: Magnetization,
}

/// Time derivative of the free energy; `MinusInfinity` when mass sits
/// directly behind an empty arc.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum RateValue {
    Finite(f64),
    MinusInfinity,
}

impl RateValue {
    pub fn as_f64(self) -> f64 {
        match self {
            RateValue::Finite(v) => v,
            RateValue::MinusInfinity => f64::NEG_INFINITY,
        }
    }

    pub fn is_minus_infinity(self) -> bool {
        matches!(self, RateValue::MinusInfinity)
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            RateValue::Finite(v) => Some(v),
            RateValue::MinusInfinity => None,
        }
    }
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

fn assemble(model: &Model, nu: &[f64], m: Vec2, z: &[f64]) -> FreeEnergyValue {
    let q = model.q() as f64;
    let mut entropy_term = 0.0;
    let mut log_partition_term = 0.0;
    for (w, zk) in nu.iter().zip(z) {
        if *w > 0.0 {
            entropy_term += w * (q * w).ln();
            log_partition_term += w * (q * zk).ln();
        }
    }
    let magnetization_term = 0.5 * model.beta() * m.dot(m);
    FreeEnergyValue {
        value: entropy_term + magnetization_term - log_partition_term,
        entropy_term,
        magnetization_term,
        log_partition_term,
        m,
    }
}

/// Unnormalized `psi'(nu)`; subtract [`orbit_free_energy`] to get the
/// normalized value.
pub fn free_energy(model: &Model, nu: &SimplexVector) -> Result<FreeEnergyValue> {
    check_len(model, nu)?;
    let m = solve_magnetization(model, nu, None)?.m;
    let mut z = vec![0.0; model.q()];
    model.partitions_into(m * model.beta(), &mut z);
    Ok(assemble(model, nu.weights(), m, &z))
}

/// Free energy evaluator that warm-starts the magnetization between calls.
pub(crate) fn free_energy_warm(ev: &mut FieldEvaluator<'_>, nu: &[f64]) -> Result<FreeEnergyValue> {
    let model = ev.model();
    let m = ev.magnetization(nu)?;
    let mut z = vec![0.0; model.q()];
    model.partitions_into(m * model.beta(), &mut z);
    Ok(assemble(model, nu, m, &z))
}

/// `d psi'/dt = sum_k c(k) nu(k) log[nu(k+1) Z_k / (nu(k) Z_{k+1})]`.
pub fn free_energy_rate(model: &Model, nu: &SimplexVector) -> Result<RateValue> {
    check_len(model, nu)?;
    let mut ev = FieldEvaluator::new(model);
    rate_with(&mut ev, nu.weights())
}

pub(crate) fn rate_with(ev: &mut FieldEvaluator<'_>, nu: &[f64]) -> Result<RateValue> {
    let q = nu.len();
    let mut c = vec![0.0; q];
    ev.rates(nu, &mut c)?;
    let z = ev.last_partitions();
    let mut total = 0.0;
    for k in 0..q {
        let next = (k + 1) % q;
        if nu[k] == 0.0 {
            continue;
        }
        if nu[next] == 0.0 {
            return Ok(RateValue::MinusInfinity);
        }
        total += c[k] * nu[k] * ((nu[next] / nu[k]).ln() + (z[k] / z[next]).ln());
    }
    Ok(RateValue::Finite(total))
}

/// A point of the discretized Gibbs orbit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitPoint {
    pub theta: f64,
    pub nu: SimplexVector,
    pub m: Magnetization,
}

/// The circle of discretized continuous Gibbs minimizers at one `beta`.
#[derive(Debug, Clone)]
pub struct Orbit<'a> {
    model: &'a Model,
    m_star: f64,
}

impl<'a> Orbit<'a> {
    pub fn new(model: &'a Model) -> Result<Self> {
        let m_star = continuous_mstar(model.beta(), DEFAULT_CIRCLE_RESOLUTION)?;
        Ok(Orbit { model, m_star })
    }

    pub fn m_star(&self) -> f64 {
        self.m_star
    }

    fn weights(&self, theta: f64, z: &mut [f64]) {
        let x = Vec2::polar(self.model.beta() * self.m_star, theta);
        self.model.partitions_into(x, z);
        let s: f64 = z.iter().sum();
        for v in z.iter_mut() {
            *v /= s;
        }
    }

    /// `nu(k) = int_{S_k} exp(beta m* cos(w - theta)) dw / int_0^{2pi} (same)`.
    pub fn point(&self, theta: f64) -> OrbitPoint {
        let mut z = vec![0.0; self.model.q()];
        self.weights(theta, &mut z);
        OrbitPoint {
            theta: theta.rem_euclid(2.0 * PI),
            nu: SimplexVector::project(z),
            m: Vec2::polar(self.m_star, theta),
        }
    }

    /// `min_j TV(nu, nu_{theta_j})` over `samples` equally spaced angles.
    pub fn distance_sampled(&self, nu: &SimplexVector, samples: usize) -> Result<(f64, f64)> {
        check_len(self.model, nu)?;
        if samples < self.model.q() {
            return Err(Error::invalid(format!(
                "need at least q = {} orbit samples, got {samples}",
                self.model.q()
            )));
        }
        let mut z = vec![0.0; self.model.q()];
        let mut best = (f64::INFINITY, 0.0);
        for j in 0..samples {
            let th = 2.0 * PI * j as f64 / samples as f64;
            self.weights(th, &mut z);
            let d = tv_distance(nu.weights(), &z);
            if d < best.0 {
                best = (d, th);
            }
        }
        Ok(best)
    }

    /// Sampled minimum followed by a golden-section search over the
    /// neighbouring sample interval. Returns `(distance, theta)`.
    pub fn distance(&self, nu: &SimplexVector, samples: usize) -> Result<(f64, f64)> {
        let (d0, th0) = self.distance_sampled(nu, samples)?;
        let step = 2.0 * PI / samples as f64;
        let mut z = vec![0.0; self.model.q()];
        let mut f = |th: f64| {
            self.weights(th, &mut z);
            tv_distance(nu.weights(), &z)
        };
        let g = 0.5 * (5f64.sqrt() - 1.0);
        let (mut a, mut b) = (th0 - step, th0 + step);
        let mut x1 = b - g * (b - a);
        let mut x2 = a + g * (b - a);
        let (mut f1, mut f2) = (f(x1), f(x2));
        while b - a > 1e-13 {
            if f1 < f2 {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - g * (b - a);
                f1 = f(x1);
            } else {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + g * (b - a);
                f2 = f(x2);
            }
        }
        let (d, th) = if f1 < f2 { (f1, x1) } else { (f2, x2) };
        Ok(if d < d0 { (d, th.rem_euclid(2.0 * PI)) } else { (d0, th0) })
    }
}

/// Default number of orbit samples, `64 q`.
pub fn default_theta_samples(q: usize) -> usize {
    64 * q
}

pub fn discretize_gibbs(model: &Model, theta: f64) -> Result<OrbitPoint> {
    Ok(Orbit::new(model)?.point(theta))
}

/// TV distance from `nu` to the discretized orbit (refined, see [`Orbit::distance`]).
pub fn orbit_distance(model: &Model, nu: &SimplexVector, theta_samples: usize) -> Result<f64> {
    Ok(Orbit::new(model)?.distance(nu, theta_samples)?.0)
}

/// `psi'` on the orbit, the global minimum and the normalization offset.
pub fn orbit_free_energy(model: &Model) -> Result<f64> {
    Ok(free_energy(model, &discretize_gibbs(model, 0.0)?.nu)?.value)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LyapunovSample {
    pub s: f64,
    pub psi: f64,
    pub rate: RateValue,
}

/// Largest `s >= 0` for which `from + s (to - from)` stays in the simplex.
pub fn segment_limit(from: &SimplexVector, to: &SimplexVector) -> f64 {
    from.weights()
        .iter()
        .zip(to.weights())
        .filter(|(a, b)| b < a)
        .map(|(a, b)| a / (a - b))
        .fold(f64::INFINITY, f64::min)
}

/// Free energy and its rate along `from + s (to - from)` for `samples`
/// equally spaced `s` in `[0, s_end]`. `s_end` may exceed 1 as long as the
/// segment stays in the simplex.
pub fn lyapunov_scan(
    model: &Model,
    from: &SimplexVector,
    to: &SimplexVector,
    s_end: f64,
    samples: usize,
) -> Result<Vec<LyapunovSample>> {
    check_len(model, from)?;
    check_len(model, to)?;
    if samples < 2 {
        return Err(Error::invalid("a scan needs at least two samples"));
    }
    let limit = segment_limit(from, to);
    if !(s_end > 0.0) || s_end > limit * (1.0 + 1e-12) {
        return Err(Error::invalid(format!(
            "segment end {s_end} outside (0, {limit}] where the segment leaves the simplex"
        )));
    }
    let mut ev = FieldEvaluator::new(model);
    let mut out = Vec::with_capacity(samples);
    for i in 0..samples {
        let s = if i + 1 == samples { s_end } else { s_end * i as f64 / (samples - 1) as f64 };
        let w: Vec<f64> = from
            .weights()
            .iter()
            .zip(to.weights())
            .map(|(a, b)| {
                let v = a + s * (b - a);
                // snap roundoff at the boundary
                if v.abs() < 1e-15 {
                    0.0
                } else {
                    v
                }
            })
            .collect();
        let nu = SimplexVector::project(w);
        let psi = free_energy_warm(&mut ev, nu.weights())?.value;
        let rate = rate_with(&mut ev, nu.weights())?;
        out.push(LyapunovSample { s, psi, rate });
    }
    Ok(out)
}
