//! Solving the consistency equation for the magnetization.
//!
//!     cargo run --example magnetization

use rotator_dynamics::consistency::checkerboard_slope_at_zero;
use rotator_dynamics::{
    checkerboard_fixed_points, continuous_mstar, magnetization_fixed_points, solve_magnetization, Model,
    SimplexVector,
};

fn main() -> rotator_dynamics::Result<()> {
    let model = Model::with(3.0, 10)?;
    for (name, nu) in [
        ("equidistribution", SimplexVector::uniform(10)),
        ("point mass on arc 1", SimplexVector::dirac(10, 1)?),
        ("two neighbours", SimplexVector::new(vec![0.5, 0.5, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0])?),
    ] {
        let rep = solve_magnetization(&model, &nu, None)?;
        println!(
            "{name:<20} M = ({:+.12}, {:+.12})  |M| = {:.12}  iterations {}  residual {:.1e}",
            rep.m.x,
            rep.m.y,
            rep.m.norm(),
            rep.iterations,
            rep.residual
        );
    }

    for beta in [1.5, 2.3, 3.0, 10.0] {
        println!("m*({beta}) = {:.15}", continuous_mstar(beta, 512)?);
    }

    // coarse discretization: the checkerboard constraint has several minimizers
    let coarse = Model::with(6.0, 4)?;
    println!("checkerboard roots at beta = 6, q = 4: {:?}", checkerboard_fixed_points(&coarse)?);
    println!("F_4'(0) = {:.15}", checkerboard_slope_at_zero(4));
    let board = SimplexVector::new(vec![0.5, 0.0, 0.5, 0.0])?;
    for fp in magnetization_fixed_points(&coarse, &board)? {
        println!("  fixed point ({:+.10}, {:+.10}), |M| = {:.10}", fp.m.x, fp.m.y, fp.m.norm());
    }
    Ok(())
}
