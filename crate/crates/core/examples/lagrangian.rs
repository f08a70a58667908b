//! Large-deviation cost of velocities: zero along the flow, positive otherwise.
//!
//!     cargo run --example lagrangian

use rotator_dynamics::simplex::fourier_mode;
use rotator_dynamics::{discretize_gibbs, hamiltonian, lagrangian, vector_field, Model};

fn main() -> rotator_dynamics::Result<()> {
    let model = Model::with(3.0, 10)?;
    let nu = discretize_gibbs(&model, 0.0)?.nu.mix(&rotator_dynamics::SimplexVector::uniform(10), 0.3)?;
    let f = vector_field(&model, &nu)?;
    println!("L(nu, F(nu)) = {:.3e}", lagrangian(&model, &nu, &f)?.value);
    let mode = fourier_mode(10, 2);
    for delta in [0.01, 0.05, 0.1, 0.2] {
        let u: Vec<f64> = f.iter().zip(&mode).map(|(a, b)| a + delta * b).collect();
        let l = lagrangian(&model, &nu, &u)?;
        println!("L(nu, F + {delta} * mode2) = {:.6e}  ({} Newton steps)", l.value, l.iterations);
    }
    println!("H(nu, mode1) = {:.12}", hamiltonian(&model, &nu, &fourier_mode(10, 1))?);
    Ok(())
}
