//! Bisection for the edge of the reachable set along several rays, and the
//! value just inside it.
//!
//! ```bash
//! cargo run --release --example reachable_boundary
//! ```

use soav::analysis::{boundary_on_ray, ValueFunction};
use soav::numerics::Matrix;
use soav::plant::{Alphabet, Plant};

fn main() -> soav::Result<()> {
    let plant = Plant::new(Matrix::from_rows(&[[0.0, 1.0], [-2.0, -1.0]])?, vec![0.0, 1.0])?;
    let alphabet = Alphabet::new(vec![0.0, 0.2, 0.6, 1.0], vec![0.1, 0.2, 0.3, 0.4])?;
    let vf = ValueFunction::new(&plant, &alphabet, 5.0, 200)?;

    println!("{:>8}  {:>10}  {:>10}  {:>10}", "angle", "c_inside", "c_outside", "V inside");
    for k in 0..8 {
        let theta = std::f64::consts::PI * k as f64 / 8.0;
        let dir = [theta.cos(), theta.sin()];
        let b = boundary_on_ray(&vf, &dir, 1e-4)?;
        println!(
            "{:>8.1}  {:>10.5}  {:>10.5}  {:>10.5}",
            theta.to_degrees(),
            b.c_inside,
            b.c_outside,
            b.value_inside
        );
    }
    Ok(())
}
