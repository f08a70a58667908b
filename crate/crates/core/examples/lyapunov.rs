//! Free energy and its time derivative along the segment from the
//! equidistribution to an orbit point and beyond, up to the simplex boundary.
//!
//!     cargo run --example lyapunov > lyapunov.csv

use rotator_dynamics::energy::{lyapunov_scan, segment_limit};
use rotator_dynamics::{discretize_gibbs, orbit_free_energy, Model, SimplexVector};

fn main() -> rotator_dynamics::Result<()> {
    println!("beta,s,psi,dpsi_dt");
    for beta in [2.3, 3.0] {
        let model = Model::with(beta, 10)?;
        let eq = SimplexVector::uniform(10);
        let orbit = discretize_gibbs(&model, 0.0)?.nu;
        let end = segment_limit(&eq, &orbit);
        for s in lyapunov_scan(&model, &eq, &orbit, end, 201)? {
            println!("{beta},{},{},{}", s.s, s.psi, s.rate.as_f64());
        }
        eprintln!("beta = {beta}: orbit free energy {:.12}", orbit_free_energy(&model)?);
    }
    Ok(())
}
