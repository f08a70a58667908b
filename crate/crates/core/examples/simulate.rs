//! Finite-N jump process against its law-of-large-numbers limit.
//!
//!     cargo run --release --example simulate

use rotator_dynamics::{discretize_gibbs, lln_error, simulate_path, Model, OccupationState, SimOptions, SimplexVector};

fn main() -> rotator_dynamics::Result<()> {
    let model = Model::with(3.0, 10)?;
    let start = discretize_gibbs(&model, 0.0)?.nu.mix(&SimplexVector::uniform(10), 0.2)?;

    let occ = OccupationState::from_simplex(&start, 1000)?;
    let path = simulate_path(&model, &occ, 1.0, 7, SimOptions::default())?;
    println!("N = 1000: {} jumps by t = 1, final counts {:?}", path.len(), path.final_state().counts);

    let seeds: Vec<u64> = (0..8).collect();
    let table = lln_error(&model, &start, &[100, 1000, 10000], 5.0, &seeds, SimOptions::default())?;
    for (n, med) in table.medians() {
        println!("N = {n:>6}: median sup-TV error {med:.4}");
    }
    Ok(())
}
