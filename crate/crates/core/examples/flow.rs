//! Integrating the simplex flow: rotation along the orbit and attraction
//! toward it.
//!
//!     cargo run --example flow

use std::f64::consts::PI;

use rotator_dynamics::energy::default_theta_samples;
use rotator_dynamics::{integrate_flow, FlowOptions, Model, Orbit, SimplexVector};

fn main() -> rotator_dynamics::Result<()> {
    let model = Model::with(3.0, 10)?;
    let orbit = Orbit::new(&model)?;
    let samples = default_theta_samples(model.q());

    let start = orbit.point(0.0).nu;
    let step = 2.0 * PI / model.q() as f64;
    let opts = FlowOptions { output_dt: step, ..FlowOptions::default() };
    let tr = integrate_flow(&model, &start, 2.0 * PI, opts)?;
    println!(
        "after one arc: TV to shifted start {:.2e}; after a full turn: TV to start {:.2e}",
        tr.states[1].tv_distance(&start.cyclic_shift(1)),
        tr.final_state().tv_distance(&start)
    );

    let tr = integrate_flow(&model, &SimplexVector::dirac(10, 1)?, 50.0, FlowOptions { output_dt: 5.0, ..opts })?;
    println!("   t   orbit distance   angle of M");
    for ((t, s), m) in tr.times.iter().zip(&tr.states).zip(&tr.magnetizations) {
        let (d, _) = orbit.distance(s, samples)?;
        println!("{t:>5.1}   {d:>14.3e}   {:>10.6}", m.angle());
    }
    Ok(())
}
