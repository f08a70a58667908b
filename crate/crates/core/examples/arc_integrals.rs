//! Per-arc Gibbs integrals: partition values, means and covariances.
//!
//!     cargo run --example arc_integrals

use rotator_dynamics::{Model, Vec2};

fn main() -> rotator_dynamics::Result<()> {
    let model = Model::with(3.0, 10)?;
    let field = Vec2::new(3.0, 0.0);
    println!("arc      Z_k        |m_k|      angle(m_k)   trace(Cov_k)");
    for k in 1..=model.q() {
        let mo = model.arc_moments(k, field)?;
        println!(
            "{k:>3}  {:>10.6}  {:>9.6}  {:>11.6}  {:>12.3e}",
            mo.z,
            mo.mean.norm(),
            mo.mean.angle(),
            mo.cov.trace()
        );
    }
    println!("sum of Z_k = {:.12}", model.total_partition(field));
    Ok(())
}
