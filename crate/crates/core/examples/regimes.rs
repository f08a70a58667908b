//! Regime diagram over (beta, q): where uniqueness of constrained minimizers
//! is guaranteed, where it fails, and where the equidistribution attracts.
//!
//!     cargo run --example regimes > regimes.csv

use rotator_dynamics::{classify_regime, regime_grid, BetaGrid};

fn main() -> rotator_dynamics::Result<()> {
    let grid = BetaGrid { min: 2.5, max: 100.0, steps: 40 };
    let cells = regime_grid(grid, 3, 100)?;
    println!("beta,q,uniqueness,non_uniqueness,eq_attractive");
    for c in &cells {
        println!(
            "{},{},{},{},{}",
            c.beta, c.q, c.uniqueness as u8, c.non_uniqueness as u8, c.equidistribution_attractive as u8
        );
    }
    let violations = cells
        .iter()
        .filter(|c| c.equidistribution_attractive && !c.non_uniqueness)
        .count();
    eprintln!("{} cells, {} where attraction holds without non-uniqueness", cells.len(), violations);
    eprintln!("(3, 10) -> {:?}", classify_regime(3.0, 10).regime);
    Ok(())
}
