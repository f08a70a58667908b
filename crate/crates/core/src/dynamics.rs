//! Limiting jump rates, the simplex vector field and its flow.

use serde::{Deserialize, Serialize};

use crate::consistency::{default_start, MagnetizationSolver, SolverOptions};
use crate::error::{Error, Result};
use crate::model::{Magnetization, Model, Vec2};
use crate::ode::{self, OdeOptions, OdeStats};
use crate::simplex::{tv_distance, SimplexVector};

/// Residual above which a supplied magnetization is considered stale.
pub const STALE_RESIDUAL: f64 = 1e-10;

/// `c(k, nu')` for `k = 1..q`, stored 0-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatesVector(pub Vec<f64>);

impl RatesVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Evaluates rates and the vector field with a warm-started magnetization
/// solver. Cheap to call repeatedly on nearby states.
#[derive(Debug, Clone)]
pub struct FieldEvaluator<'a> {
    model: &'a Model,
    solver: MagnetizationSolver,
    last_m: Option<Vec2>,
    z: Vec<f64>,
}

impl<'a> FieldEvaluator<'a> {
    pub fn new(model: &'a Model) -> Self {
        Self::with_options(model, model.solver_options())
    }

    pub fn with_options(model: &'a Model, options: SolverOptions) -> Self {
        FieldEvaluator {
            model,
            solver: MagnetizationSolver::new(model.q(), options),
            last_m: None,
            z: vec![0.0; model.q()],
        }
    }

    pub fn model(&self) -> &'a Model {
        self.model
    }

    /// Solves for `M_beta(nu)`, seeding with the previous solution.
    pub fn magnetization(&mut self, nu: &[f64]) -> Result<Magnetization> {
        let start = self.last_m.unwrap_or_else(|| default_start(self.model, nu));
        let rep = self.solver.solve(self.model, nu, start)?;
        self.last_m = Some(rep.m);
        Ok(rep.m)
    }

    /// Rates at a known magnetization; `z` is left holding `Z_k(beta M)`.
    pub(crate) fn rates_at(&mut self, m: Vec2, out: &mut [f64]) {
        let beta = self.model.beta();
        self.model.partitions_into(m * beta, &mut self.z);
        for (i, c) in out.iter_mut().enumerate() {
            *c = (beta * self.model.boundary_dir(i).dot(m)).exp() / self.z[i];
        }
    }

    /// Solves the magnetization and fills `out` with the rates.
    pub fn rates(&mut self, nu: &[f64], out: &mut [f64]) -> Result<Magnetization> {
        let m = self.magnetization(nu)?;
        self.rates_at(m, out);
        Ok(m)
    }

    /// `F(nu)(k) = c(k-1) nu(k-1) - c(k) nu(k)`, written into `out`.
    pub fn field(&mut self, nu: &[f64], out: &mut [f64]) -> Result<Magnetization> {
        let m = self.rates(nu, out)?;
        flux_to_field(nu, out);
        Ok(m)
    }

    /// Partition values from the most recent rate evaluation.
    pub fn last_partitions(&self) -> &[f64] {
        &self.z
    }
}

/// Turns rates `c` (in place) into the vector field for `nu`.
fn flux_to_field(nu: &[f64], c: &mut [f64]) {
    let q = nu.len();
    let last_flux = c[q - 1] * nu[q - 1];
    let mut prev = last_flux;
    for i in 0..q {
        let flux = c[i] * nu[i];
        c[i] = prev - flux;
        prev = flux;
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

/// Jump rates at `nu` given its solved magnetization `m`.
pub fn rates(model: &Model, nu: &SimplexVector, m: Magnetization) -> Result<RatesVector> {
    check_len(model, nu)?;
    let res = crate::consistency::magnetization_residual(model, nu, m)?;
    if !(res <= STALE_RESIDUAL) {
        return Err(Error::invalid(format!(
            "magnetization does not solve the consistency equation (residual {res:.3e})"
        )));
    }
    let mut ev = FieldEvaluator::new(model);
    let mut c = vec![0.0; model.q()];
    ev.rates_at(m, &mut c);
    Ok(RatesVector(c))
}

/// Vector field `F(nu)`; solves the magnetization internally.
pub fn vector_field(model: &Model, nu: &SimplexVector) -> Result<Vec<f64>> {
    check_len(model, nu)?;
    let mut out = vec![0.0; model.q()];
    FieldEvaluator::new(model).field(nu.weights(), &mut out)?;
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowOptions {
    pub output_dt: f64,
    pub rtol: f64,
    pub atol: f64,
}

impl Default for FlowOptions {
    fn default() -> Self {
        FlowOptions {
            output_dt: 0.1,
            rtol: 1e-9,
            atol: 1e-9,
        }
    }
}

/// Sampled solution of the flow.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<SimplexVector>,
    pub magnetizations: Vec<Magnetization>,
    #[serde(skip)]
    pub stats: OdeStats,
}

impl FlowTrajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_state(&self) -> &SimplexVector {
        self.states.last().expect("trajectory has at least the initial state")
    }

    /// Piecewise-linear interpolation between output samples; clamps to the
    /// end points outside the time range.
    pub fn interpolate(&self, t: f64) -> Vec<f64> {
        let idx = self.times.partition_point(|&s| s <= t);
        if idx == 0 {
            return self.states[0].weights().to_vec();
        }
        if idx >= self.times.len() {
            return self.final_state().weights().to_vec();
        }
        let (t0, t1) = (self.times[idx - 1], self.times[idx]);
        let s = (t - t0) / (t1 - t0);
        let (a, b) = (self.states[idx - 1].weights(), self.states[idx].weights());
        a.iter().zip(b).map(|(x, y)| x + s * (y - x)).collect()
    }

    /// Largest TV distance between consecutive samples.
    pub fn max_step_tv(&self) -> f64 {
        self.states
            .windows(2)
            .map(|w| tv_distance(w[0].weights(), w[1].weights()))
            .fold(0.0, f64::max)
    }
}

/// Output grid `0, dt, 2dt, ..., t_final` (the last point is `t_final` even
/// when it is not a multiple of `dt`).
pub fn output_grid(t_final: f64, output_dt: f64) -> Vec<f64> {
    let n = (t_final / output_dt * (1.0 + 1e-12)).floor() as usize;
    let mut ts: Vec<f64> = (0..=n).map(|i| i as f64 * output_dt).collect();
    if t_final - ts[n] > 1e-12 * t_final.max(1.0) {
        ts.push(t_final);
    } else {
        ts[n] = t_final;
    }
    ts
}

/// Integrates `d nu / dt = F(nu)` on `[0, t_final]`.
pub fn integrate_flow(
    model: &Model,
    nu0: &SimplexVector,
    t_final: f64,
    options: FlowOptions,
) -> Result<FlowTrajectory> {
    check_len(model, nu0)?;
    if !(t_final > 0.0 && t_final.is_finite()) {
        return Err(Error::invalid(format!("t_final must be positive, got {t_final}")));
    }
    if !(options.output_dt > 0.0 && options.rtol > 0.0 && options.atol > 0.0) {
        return Err(Error::invalid("output_dt and tolerances must be positive"));
    }
    let times = output_grid(t_final, options.output_dt);
    integrate_flow_at(model, nu0, &times, options.rtol, options.atol)
}

/// Integrates the flow and samples it at the given ascending times (the
/// first of which must be 0).
pub fn integrate_flow_at(
    model: &Model,
    nu0: &SimplexVector,
    times: &[f64],
    rtol: f64,
    atol: f64,
) -> Result<FlowTrajectory> {
    check_len(model, nu0)?;
    if times.first() != Some(&0.0) || times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("sample times must start at 0 and increase strictly"));
    }
    let mut ev = FieldEvaluator::new(model);
    let opts = OdeOptions {
        rtol,
        atol,
        // the linearization has spectral radius at most q/pi
        h_max: 2.5 * std::f64::consts::PI / model.q() as f64,
        simplex: true,
        ..OdeOptions::default()
    };
    let (raw, stats) = ode::integrate(
        |_, y, dy| ev.field(y, dy).map(|_| ()),
        nu0.weights(),
        0.0,
        times,
        &opts,
    )?;
    let mut ev = FieldEvaluator::new(model);
    let mut states = Vec::with_capacity(raw.len());
    let mut magnetizations = Vec::with_capacity(raw.len());
    for y in raw {
        let s = SimplexVector::project(y);
        magnetizations.push(ev.magnetization(s.weights())?);
        states.push(s);
    }
    Ok(FlowTrajectory {
        times: times.to_vec(),
        states,
        magnetizations,
        stats,
    })
}
