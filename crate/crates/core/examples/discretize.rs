//! Zero-order-hold discretization of a damped oscillator and a check that
//! the stacked map `Φ z + ζ` agrees with stepping the recursion.
//!
//! ```bash
//! cargo run --example discretize
//! ```

use soav::numerics::Matrix;
use soav::plant::{discretize, zoh, Alphabet, Plant};

fn main() -> soav::Result<()> {
    let plant = Plant::new(Matrix::from_rows(&[[0.0, 1.0], [-2.0, -1.0]])?, vec![0.0, 1.0])?;
    let alphabet = Alphabet::new(vec![0.0, 0.2, 0.6, 1.0], vec![0.1, 0.2, 0.3, 0.4])?;

    let (a_d, b_d) = zoh(&plant, 0.01)?;
    println!("A_d (h = 0.01):");
    for i in 0..2 {
        println!("  {:>12.9} {:>12.9}", a_d[(i, 0)], a_d[(i, 1)]);
    }
    println!("B_d: {:.9?}", b_d);

    let problem = discretize(&plant, &alphabet, 5.0, 500, &[5.0, 5.0])?;
    println!("\nT = {}, nu = {}, h = {}", problem.horizon, problem.nu, problem.h);
    println!("zeta = A_d^nu xi = {:.6?}", problem.zeta);
    println!("shifts r = {:?}", problem.r);
    println!("weights p = {:?}", problem.p);

    // any control: the terminal state from Φ must match direct simulation
    let z: Vec<f64> = (0..problem.nu).map(|l| (l as f64 * 0.05).sin()).collect();
    let stacked = problem.terminal_state(&z)?;
    let stepped = problem.simulate(&z)?;
    let last = stepped.last().expect("simulation returns nu + 1 states");
    let gap = stacked.iter().zip(last).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    println!("\nx[nu] via Phi z + zeta: {:.9?}", stacked);
    println!("x[nu] via recursion:    {:.9?}", last);
    println!("max difference: {gap:.2e}");
    Ok(())
}
