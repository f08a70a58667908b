//! Discrete mean-field rotator dynamics.
//!
//! Rotators on the circle are observed only through which of `q` equal arcs
//! they occupy. In the mean-field limit the arc occupations follow an ODE on
//! the probability simplex whose rates come from constrained free-energy
//! minimization. This crate computes those rates, integrates the flow,
//! evaluates the free energy that decreases along it, linearizes it at the
//! equidistribution, evaluates the large-deviation Lagrangian and simulates
//! the finite-N jump process.

pub mod cli;
pub mod consistency;
pub mod dynamics;
pub mod energy;
pub mod error;
pub mod io;
pub mod ldp;
pub mod model;
pub mod ode;
pub mod quadrature;
pub mod simplex;
pub mod stability;
pub mod stochastic;

pub use consistency::{
    checkerboard_fixed_points, classify_regime, continuous_mstar, magnetization_fixed_points, regime_grid,
    solve_magnetization, BetaGrid, FixedPointReport, Regime, RegimeLabel, SolverOptions,
};
pub use dynamics::{integrate_flow, rates, vector_field, FlowOptions, FlowTrajectory, RatesVector};
pub use energy::{
    discretize_gibbs, free_energy, free_energy_rate, orbit_distance, orbit_free_energy, FreeEnergyValue, Orbit,
    OrbitPoint, RateValue,
};
pub use error::{Error, Result};
pub use ldp::{hamiltonian, lagrangian, LagrangianValue, MomentumVector};
pub use model::{ArcCovariance, Magnetization, Model, ModelParams, Vec2};
pub use simplex::SimplexVector;
pub use stability::{
    eq_eigenvalues, eq_matrix, jacobian_at, stable_manifold_projector, unstable_mode_check, JacobianMatrix,
    SpectrumResult,
};
pub use stochastic::{lln_error, simulate_path, JumpPath, LlnTable, OccupationState, SimOptions};
