//! Spectrum of the linearization at the equidistribution: closed forms
//! against a numeric eigen-solve.
//!
//!     cargo run --example spectrum

use rotator_dynamics::stability::match_spectra;
use rotator_dynamics::{eq_eigenvalues, eq_matrix, unstable_mode_check, Model};

fn main() -> rotator_dynamics::Result<()> {
    for (beta, q) in [(3.0, 10), (50.0, 100)] {
        let model = Model::with(beta, q)?;
        let spec = eq_eigenvalues(&model)?;
        let numeric = eq_matrix(&model)?.numeric_eigenvalues();
        let m = match_spectra(&spec.eigenvalues, &numeric)?;
        let growing: Vec<_> = spec.eigenvalues.iter().filter(|l| l.re > 0.0).collect();
        let check = unstable_mode_check(&model)?;
        println!("beta = {beta}, q = {q}");
        println!("  c1 = {:.6}, c2 = {:.6}, (q/2) c2 = {:.6}", spec.c1, spec.c2, check.half_q_c2);
        println!("  largest analytic/numeric mismatch {:.2e}", m.max_mismatch);
        println!("  eigenvalues with positive real part: {growing:?}");
        println!("  equidistribution has a non-attractive direction: {}", check.unstable);
    }
    Ok(())
}
