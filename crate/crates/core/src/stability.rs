//! Linearization of the vector field.

use std::f64::consts::PI;

use nalgebra::{Complex, DMatrix};

use crate::dynamics::FieldEvaluator;
use crate::error::{Error, Result};
use crate::model::{ArcMoments, Model, Vec2};
use crate::simplex::SimplexVector;

/// Largest accepted condition number of `I - beta sum_k nu(k) Cov_k`.
pub const MAX_CONDITION: f64 = 1e12;

/// `q x q` linearization `dF`; entry `(k, l)` is `dF(k) / d nu(l)` (0-based).
#[derive(Debug, Clone, PartialEq)]
pub struct JacobianMatrix {
    pub entries: DMatrix<f64>,
}

impl JacobianMatrix {
    pub fn q(&self) -> usize {
        self.entries.nrows()
    }

    pub fn apply(&self, rho: &[f64]) -> Vec<f64> {
        let v = &self.entries * nalgebra::DVector::from_column_slice(rho);
        v.iter().copied().collect()
    }

    pub fn max_abs_diff(&self, other: &JacobianMatrix) -> f64 {
        (&self.entries - &other.entries).amax()
    }

    /// Unordered eigenvalues from a real Schur decomposition.
    pub fn numeric_eigenvalues(&self) -> Vec<Complex<f64>> {
        self.entries.complex_eigenvalues().iter().copied().collect()
    }
}

/// Jacobian of `F` at `nu` via the implicit-function derivative of the
/// magnetization, `dM/dnu(l) = A^{-1} m_l` with `A = I - beta sum nu(k) Cov_k`.
pub fn jacobian_at(model: &Model, nu: &SimplexVector) -> Result<JacobianMatrix> {
    let q = model.q();
    if nu.len() != q {
        return Err(Error::invalid(format!("simplex vector has {} entries, model has q = {q}", nu.len())));
    }
    let beta = model.beta();
    let w = nu.weights();
    let mut ev = FieldEvaluator::new(model);
    let mut c = vec![0.0; q];
    let m = ev.rates(w, &mut c)?;
    let mut mo = vec![ArcMoments::default(); q];
    model.moments_into(m * beta, &mut mo);

    let (mut a, mut b, mut cc) = (0.0, 0.0, 0.0);
    for (wk, mk) in w.iter().zip(&mo) {
        a += wk * mk.cov.a;
        b += wk * mk.cov.b;
        cc += wk * mk.cov.c;
    }
    let (a, b, cc) = (1.0 - beta * a, -beta * b, 1.0 - beta * cc);
    let det = a * cc - b * b;
    let half_tr = 0.5 * (a + cc);
    let disc = (0.25 * (a - cc).powi(2) + b * b).sqrt();
    let (e1, e2) = ((half_tr + disc).abs(), (half_tr - disc).abs());
    if e1.min(e2) * MAX_CONDITION < e1.max(e2).max(1.0) {
        return Err(Error::Singular { determinant: det });
    }
    // dM/dnu(l) = A^{-1} m_l
    let dm: Vec<Vec2> = mo
        .iter()
        .map(|mk| Vec2::new((cc * mk.mean.x - b * mk.mean.y) / det, (a * mk.mean.y - b * mk.mean.x) / det))
        .collect();
    // sensitivity of the outflux c(k) nu(k) through the rate
    let g: Vec<Vec2> = (0..q)
        .map(|k| (model.boundary_dir(k) - mo[k].mean) * (beta * c[k] * w[k]))
        .collect();
    let mut j = DMatrix::zeros(q, q);
    for k in 0..q {
        let prev = (k + q - 1) % q;
        for l in 0..q {
            j[(k, l)] = g[prev].dot(dm[l]) - g[k].dot(dm[l]);
        }
        j[(k, prev)] += c[prev];
        j[(k, k)] -= c[k];
    }
    Ok(JacobianMatrix { entries: j })
}

/// `c1`, `c2` and the denominator shared by both.
fn eq_constants(model: &Model) -> Result<(f64, f64)> {
    let beta = model.beta();
    let q = model.q() as f64;
    let s2 = (PI / q).sin().powi(2);
    let gap = 2.0 - beta * (1.0 - (q / PI).powi(2) * s2);
    if gap.abs() <= 1e-12 * beta.max(1.0) {
        return Err(Error::Singular { determinant: gap / 2.0 });
    }
    let d = 2.0 * PI * PI - beta * PI * PI + beta * q * q * s2;
    Ok((4.0 * beta * PI * s2 / d, 2.0 * beta * q * s2 / d))
}

/// The circulant linearization at the equidistribution.
pub fn eq_matrix(model: &Model) -> Result<JacobianMatrix> {
    let (c1, c2) = eq_constants(model)?;
    let q = model.q();
    let qf = q as f64;
    let pre = qf / (2.0 * PI);
    let row: Vec<f64> = (0..q)
        .map(|d| {
            let th = 2.0 * PI * d as f64 / qf;
            let th1 = 2.0 * PI * (d as f64 - 1.0) / qf;
            let mut v = c1 * th.sin() + c2 * (th.cos() - th1.cos());
            if d == 1 {
                v += 1.0;
            }
            if d == 0 {
                v -= 1.0;
            }
            pre * v
        })
        .collect();
    let entries = DMatrix::from_fn(q, q, |i, j| row[(i + q - j) % q]);
    Ok(JacobianMatrix { entries })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumResult {
    /// `eigenvalues[j-1]` belongs to the Fourier vector `exp(i 2pi j l / q)`.
    pub eigenvalues: Vec<Complex<f64>>,
    pub c1: f64,
    pub c2: f64,
}

/// Closed-form eigenvalues of [`eq_matrix`].
pub fn eq_eigenvalues(model: &Model) -> Result<SpectrumResult> {
    let (c1, c2) = eq_constants(model)?;
    let q = model.q();
    let qf = q as f64;
    let pre = qf / (2.0 * PI);
    let phi = 2.0 * PI / qf;
    let damp = 1.0 - 0.5 * qf * c2;
    let lambda1 = Complex::new(
        pre * (phi.cos() - 1.0) * damp,
        -pre * (phi.sin() * damp + 0.5 * qf * c1),
    );
    let eigenvalues = (1..=q)
        .map(|j| {
            if j == 1 {
                lambda1
            } else if j == q - 1 {
                lambda1.conj()
            } else if j == q {
                Complex::new(0.0, 0.0)
            } else {
                let th = phi * j as f64;
                Complex::new(pre * (th.cos() - 1.0), -pre * th.sin())
            }
        })
        .collect();
    Ok(SpectrumResult { eigenvalues, c1, c2 })
}

/// Numeric eigenvalues reordered to align with an analytic list, and the
/// largest pairwise distance.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumMatch {
    pub matched: Vec<Complex<f64>>,
    pub max_mismatch: f64,
}

/// Minimum-total-distance assignment of `numeric` onto `analytic`.
pub fn match_spectra(analytic: &[Complex<f64>], numeric: &[Complex<f64>]) -> Result<SpectrumMatch> {
    if analytic.len() != numeric.len() {
        return Err(Error::invalid("spectra have different sizes"));
    }
    let cost: Vec<Vec<f64>> = analytic
        .iter()
        .map(|a| numeric.iter().map(|b| (a - b).norm()).collect())
        .collect();
    let assign = hungarian(&cost);
    let matched: Vec<Complex<f64>> = assign.iter().map(|&j| numeric[j]).collect();
    let max_mismatch = analytic
        .iter()
        .zip(&matched)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    Ok(SpectrumMatch { matched, max_mismatch })
}

/// Square assignment problem; returns the column chosen for each row.
fn hungarian(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    let inf = f64::INFINITY;
    // 1-based potentials, column 0 is a sentinel
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut row_to_col = vec![0; n];
    for j in 1..=n {
        if p[j] > 0 {
            row_to_col[p[j] - 1] = j - 1;
        }
    }
    row_to_col
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct UnstableModeReport {
    /// Whether the equidistribution has a non-attractive direction.
    pub unstable: bool,
    /// `(q/2) c2`; the mode-1 pair grows iff this exceeds 1.
    pub half_q_c2: f64,
    /// `2 > beta (1 - (q/pi)^2 sin^2(pi/q))`
    pub closed_form: bool,
    /// `Re lambda_1 > 0` from the analytic spectrum.
    pub spectral: bool,
    pub re_lambda1: f64,
}

/// Sign of `Re lambda_1` at the equidistribution, by closed form and by spectrum.
pub fn unstable_mode_check(model: &Model) -> Result<UnstableModeReport> {
    let beta = model.beta();
    if beta <= 2.0 {
        return Err(Error::Regime(format!("unstable-mode criterion assumes beta > 2, got {beta}")));
    }
    let q = model.q() as f64;
    let spec = eq_eigenvalues(model)?;
    let closed_form = 2.0 > beta * (1.0 - (q / PI).powi(2) * (PI / q).sin().powi(2));
    let re_lambda1 = spec.eigenvalues[0].re;
    let spectral = re_lambda1 > 0.0;
    Ok(UnstableModeReport {
        unstable: closed_form,
        half_q_c2: 0.5 * q * spec.c2,
        closed_form,
        spectral,
        re_lambda1,
    })
}

/// Splits zero-sum perturbations into the Fourier modes `{1, q-1}` and
/// `{2, ..., q-2}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModeProjector {
    q: usize,
}

pub fn stable_manifold_projector(q: usize) -> Result<ModeProjector> {
    if q < 5 {
        return Err(Error::invalid(format!("mode splitting needs q >= 5, got {q}")));
    }
    Ok(ModeProjector { q })
}

impl ModeProjector {
    /// Component along modes 1 and q-1 (the non-attractive plane).
    pub fn unstable_part(&self, rho: &[f64]) -> Vec<f64> {
        let q = self.q;
        let phi = 2.0 * PI / q as f64;
        let (mut cs, mut sn) = (0.0, 0.0);
        for (l, r) in rho.iter().enumerate() {
            let th = phi * (l + 1) as f64;
            cs += r * th.cos();
            sn += r * th.sin();
        }
        let scale = 2.0 / q as f64;
        (1..=q)
            .map(|k| {
                let th = phi * k as f64;
                scale * (cs * th.cos() + sn * th.sin())
            })
            .collect()
    }

    /// Component along modes 2..q-2 (the attractive subspace).
    pub fn stable_part(&self, rho: &[f64]) -> Vec<f64> {
        let mean = rho.iter().sum::<f64>() / self.q as f64;
        rho.iter()
            .zip(self.unstable_part(rho))
            .map(|(r, u)| r - mean - u)
            .collect()
    }
}
