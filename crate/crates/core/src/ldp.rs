//! Hamiltonian and Lagrangian of the path large-deviation principle.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dynamics::FieldEvaluator;
use crate::error::{Error, Result};
use crate::model::Model;
use crate::simplex::SimplexVector;

/// Momentum differences beyond this make `exp` overflow-prone.
pub const MAX_EXPONENT: f64 = 700.0;

/// Dual variable `p`, gauge-fixed so that its last entry is 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentumVector(Vec<f64>);

impl MomentumVector {
    /// Shifts `p` by a constant so that `p(q) = 0`.
    pub fn new(mut p: Vec<f64>) -> Result<Self> {
        let Some(&last) = p.last() else {
            return Err(Error::invalid("empty momentum vector"));
        };
        if p.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("momentum entries must be finite"));
        }
        for v in p.iter_mut() {
            *v -= last;
        }
        Ok(MomentumVector(p))
    }

    pub fn zeros(q: usize) -> Self {
        MomentumVector(vec![0.0; q])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LagrangianValue {
    pub value: f64,
    pub maximizer: MomentumVector,
    pub converged: bool,
    pub iterations: usize,
    pub grad_norm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LdpOptions {
    pub grad_tol: f64,
    pub max_iter: usize,
    /// Weight pulled toward the equidistribution when `nu` touches the boundary.
    pub boundary_eps: f64,
}

impl Default for LdpOptions {
    fn default() -> Self {
        LdpOptions {
            grad_tol: 1e-10,
            max_iter: 500,
            boundary_eps: 1e-12,
        }
    }
}

/// Edge weights `w_k = nu(k) c(k)` of the jump `k -> k+1`.
pub fn edge_weights(model: &Model, nu: &SimplexVector) -> Result<Vec<f64>> {
    if nu.len() != model.q() {
        return Err(Error::invalid(format!(
            "simplex vector has {} entries, model has q = {}",
            nu.len(),
            model.q()
        )));
    }
    let mut c = vec![0.0; model.q()];
    FieldEvaluator::new(model).rates(nu.weights(), &mut c)?;
    Ok(c.iter().zip(nu.weights()).map(|(c, w)| c * w).collect())
}

fn differences(p: &[f64]) -> Vec<f64> {
    let q = p.len();
    (0..q).map(|k| p[(k + 1) % q] - p[k]).collect()
}

fn check_exponents(d: &[f64]) -> Result<()> {
    match d.iter().find(|v| v.abs() > MAX_EXPONENT) {
        Some(v) => Err(Error::Overflow(*v)),
        None => Ok(()),
    }
}

/// `H = sum_k w_k (exp(p(k+1) - p(k)) - 1)` for given edge weights.
pub fn hamiltonian_from_weights(w: &[f64], p: &[f64]) -> Result<f64> {
    if w.len() != p.len() {
        return Err(Error::invalid("momentum and weights differ in length"));
    }
    let d = differences(p);
    check_exponents(&d)?;
    Ok(w.iter().zip(&d).map(|(w, d)| w * d.exp_m1()).sum())
}

/// Feng–Kurtz Hamiltonian `H(nu, p)`.
pub fn hamiltonian(model: &Model, nu: &SimplexVector, p: &[f64]) -> Result<f64> {
    hamiltonian_from_weights(&edge_weights(model, nu)?, p)
}

/// `dH/dp(l) = w_{l-1} e^{D_{l-1}} - w_l e^{D_l}`: the velocity generated by `p`.
pub fn hamiltonian_gradient(w: &[f64], p: &[f64]) -> Result<Vec<f64>> {
    let q = w.len();
    let d = differences(p);
    check_exponents(&d)?;
    let j: Vec<f64> = w.iter().zip(&d).map(|(w, d)| w * d.exp()).collect();
    Ok((0..q).map(|l| j[(l + q - 1) % q] - j[l]).collect())
}

/// `L(nu, u) = sup_p <p, u> - H(nu, p)` by damped Newton.
pub fn lagrangian(model: &Model, nu: &SimplexVector, u: &[f64]) -> Result<LagrangianValue> {
    lagrangian_with(model, nu, u, LdpOptions::default())
}

pub fn lagrangian_with(model: &Model, nu: &SimplexVector, u: &[f64], opts: LdpOptions) -> Result<LagrangianValue> {
    check_velocity(model.q(), u)?;
    let q = model.q() as f64;
    let interior = if nu.min_weight() > 0.0 {
        nu.clone()
    } else {
        let e = opts.boundary_eps;
        SimplexVector::project(nu.weights().iter().map(|w| (1.0 - e) * w + e / q).collect())
    };
    let w = edge_weights(model, &interior)?;
    maximize(&w, u, opts)
}

fn check_velocity(q: usize, u: &[f64]) -> Result<()> {
    if u.len() != q {
        return Err(Error::invalid(format!("velocity has {} entries, expected {q}", u.len())));
    }
    if u.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("velocity entries must be finite"));
    }
    let s: f64 = u.iter().sum();
    let scale = u.iter().map(|v| v.abs()).sum::<f64>().max(1.0);
    if s.abs() > 1e-12 * scale {
        return Err(Error::invalid(format!("velocity must sum to zero, sums to {s:e}")));
    }
    Ok(())
}

fn objective(w: &[f64], u: &[f64], p: &[f64]) -> Option<f64> {
    let d = differences(p);
    if d.iter().any(|v| v.abs() > MAX_EXPONENT) {
        return None;
    }
    let h: f64 = w.iter().zip(&d).map(|(w, d)| w * d.exp_m1()).sum();
    Some(p.iter().zip(u).map(|(a, b)| a * b).sum::<f64>() - h)
}

/// Maximizes `<p, u> - H(p)` for edge weights `w` with `p(q) = 0`.
pub fn maximize(w: &[f64], u: &[f64], opts: LdpOptions) -> Result<LagrangianValue> {
    let q = w.len();
    check_velocity(q, u)?;
    if w.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::invalid("edge weights must be positive"));
    }
    let n = q - 1;
    let mut p = vec![0.0; q];
    let mut val = 0.0f64;
    for it in 0..opts.max_iter {
        let d = differences(&p);
        let a: Vec<f64> = w.iter().zip(&d).map(|(w, d)| w * d.exp()).collect();
        let grad: Vec<f64> = (0..q).map(|l| u[l] - a[(l + q - 1) % q] + a[l]).collect();
        let gnorm = grad[..n].iter().map(|g| g * g).sum::<f64>().sqrt();
        if gnorm <= opts.grad_tol {
            return Ok(LagrangianValue {
                value: val.max(0.0),
                maximizer: MomentumVector(p),
                converged: true,
                iterations: it,
                grad_norm: gnorm,
            });
        }
        // reduced Laplacian with edge weights a, dropping node q
        let mut hess = DMatrix::<f64>::zeros(n, n);
        for k in 0..q {
            let (i, j) = (k, (k + 1) % q);
            if i < n {
                hess[(i, i)] += a[k];
            }
            if j < n {
                hess[(j, j)] += a[k];
            }
            if i < n && j < n {
                hess[(i, j)] -= a[k];
                hess[(j, i)] -= a[k];
            }
        }
        let g = DVector::from_column_slice(&grad[..n]);
        let dir: Vec<f64> = match hess.cholesky() {
            Some(ch) => ch.solve(&g).iter().copied().collect(),
            None => grad[..n].to_vec(),
        };
        let slope: f64 = dir.iter().zip(&grad).map(|(a, b)| a * b).sum();
        let dir = if slope > 0.0 { dir } else { grad[..n].to_vec() };
        let slope: f64 = dir.iter().zip(&grad).map(|(a, b)| a * b).sum();
        // below this predicted gain the objective cannot resolve progress
        let flat = slope <= 1e-13 * (1.0 + val.abs());
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let mut trial = p.clone();
            for i in 0..n {
                trial[i] += t * dir[i];
            }
            if let Some(v) = objective(w, u, &trial) {
                if flat || v >= val + 1e-4 * t * slope {
                    p = trial;
                    val = v;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted {
            return Err(Error::AscentStalled {
                iterations: it,
                grad_norm: gnorm,
            });
        }
    }
    let d = differences(&p);
    check_exponents(&d)?;
    let a: Vec<f64> = w.iter().zip(&d).map(|(w, d)| w * d.exp()).collect();
    let gnorm = (0..n)
        .map(|l| (u[l] - a[(l + q - 1) % q] + a[l]).powi(2))
        .sum::<f64>()
        .sqrt();
    Err(Error::AscentStalled {
        iterations: opts.max_iter,
        grad_norm: gnorm,
    })
}
