//! Switch counting against the eigenvalue-based bound, for a normal plant
//! and for one whose `A` is singular.
//!
//! ```bash
//! cargo run --release --example switching_analysis
//! ```

use soav::cost::{switch_analysis, CostProfile, DEFAULT_SNAP_TOL};
use soav::lp::solve_reference;
use soav::numerics::Matrix;
use soav::plant::{discretize, Alphabet, Plant};

fn report(name: &str, plant: &Plant, alphabet: &Alphabet, horizon: f64, xi: &[f64]) -> soav::Result<()> {
    let problem = discretize(plant, alphabet, horizon, 500, xi)?;
    let res = solve_reference(&problem)?;
    let profile = CostProfile::new(alphabet)?;
    let rep = switch_analysis(&res.z, &profile, plant, horizon, DEFAULT_SNAP_TOL, None)?;
    println!("{name}");
    println!("  V = {:.6}, Omega = {:.4}", res.objective, rep.omega);
    println!("  switches {} (bound {:.2}, hypotheses hold: {})", rep.count, rep.bound, rep.bound_applies);
    println!("  off-alphabet samples {}", rep.off_alphabet);
    let times: Vec<String> = rep.switch_indices.iter().map(|&l| format!("{:.2}", l as f64 * problem.h)).collect();
    println!("  switch times {}", times.join(" "));
    Ok(())
}

fn main() -> soav::Result<()> {
    let alphabet = Alphabet::new(vec![0.0, 0.2, 0.6, 1.0], vec![0.1, 0.2, 0.3, 0.4])?;
    let oscillator = Plant::new(Matrix::from_rows(&[[0.0, 1.0], [-2.0, -1.0]])?, vec![0.0, 1.0])?;
    report("damped oscillator, xi = (5, 5)", &oscillator, &alphabet, 5.0, &[5.0, 5.0])?;
    let integrator = Plant::new(Matrix::from_rows(&[[0.0, 1.0], [0.0, 0.0]])?, vec![0.0, 1.0])?;
    report("double integrator, xi = (1, 0)", &integrator, &alphabet, 4.0, &[1.0, 0.0])?;
    Ok(())
}
