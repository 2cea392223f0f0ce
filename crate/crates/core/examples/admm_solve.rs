//! One open-loop solve with ADMM: iteration count, residual history and the
//! discreteness of the returned control.
//!
//! ```bash
//! cargo run --release --example admm_solve
//! ```

use soav::admm::{self, AdmmParams};
use soav::analysis::discreteness_report;
use soav::cost::DEFAULT_SNAP_TOL;
use soav::numerics::Matrix;
use soav::plant::{discretize, Alphabet, Plant};

fn main() -> soav::Result<()> {
    let plant = Plant::new(Matrix::from_rows(&[[0.0, 1.0], [-2.0, -1.0]])?, vec![0.0, 1.0])?;
    let alphabet = Alphabet::new(vec![0.0, 0.2, 0.6, 1.0], vec![0.1, 0.2, 0.3, 0.4])?;
    let problem = discretize(&plant, &alphabet, 5.0, 500, &[5.0, 5.0])?;

    let params = AdmmParams::default();
    println!("gamma = {}, terminal scale = {:.3e}", params.gamma, params.resolved_scale(&problem));
    let res = admm::solve(&problem, &params)?;
    println!("status {} after {} iterations", res.status.as_str(), res.iterations);
    println!("objective {:.6}, |Phi z + zeta| = {:.2e}", res.objective, res.terminal_residual);

    let stride = (res.residuals.len() / 8).max(1);
    println!("\n{:>8}  {:>10}  {:>10}", "iter", "primal", "dual");
    for (k, (p, d)) in res.residuals.iter().enumerate().step_by(stride) {
        println!("{:>8}  {p:>10.3e}  {d:>10.3e}", k + 1);
    }

    let disc = discreteness_report(&res.z, &alphabet, DEFAULT_SNAP_TOL);
    println!("\n{:.1}% of samples on the alphabet", 100.0 * disc.fraction);
    for (level, count) in disc.occupancy.iter().filter(|(_, c)| *c > 0) {
        println!("  {level:>5}: {count}");
    }
    Ok(())
}
