//! The exact LP reformulation solved by the bounded simplex, compared with
//! ADMM, plus an unreachable initial state.
//!
//! ```bash
//! cargo run --release --example lp_oracle
//! ```

use soav::admm::{self, AdmmParams, SolveStatus};
use soav::lp::{reformulate, segment_form, simplex, solve_reference};
use soav::numerics::Matrix;
use soav::plant::{discretize, Alphabet, Plant};

fn main() -> soav::Result<()> {
    let plant = Plant::new(Matrix::from_rows(&[[0.0, 1.0], [-2.0, -1.0]])?, vec![0.0, 1.0])?;
    let alphabet = Alphabet::new(vec![0.0, 0.2, 0.6, 1.0], vec![0.1, 0.2, 0.3, 0.4])?;

    // small instance: epigraph and segment forms agree
    let small = discretize(&plant, &alphabet, 5.0, 20, &[0.5, -0.5])?;
    let epi = reformulate(&small);
    let seg = segment_form(&small);
    let epi_res = simplex(&epi)?;
    let seg_res = simplex(&seg.lp)?;
    println!("nu = 20: epigraph LP {} vars x {} rows, value {:.9}", epi.num_vars(), epi.num_rows(), epi_res.value);
    println!(
        "         segment LP  {} vars x {} rows, value {:.9}",
        seg.lp.num_vars(),
        seg.lp.num_rows(),
        seg.program_value(seg_res.value)
    );

    let problem = discretize(&plant, &alphabet, 5.0, 500, &[5.0, 5.0])?;
    let lp = solve_reference(&problem)?;
    let fast = admm::solve(&problem, &AdmmParams::default())?;
    println!("\nnu = 500: LP objective   {:.9} ({} pivots)", lp.objective, lp.iterations);
    println!("          ADMM objective {:.9} ({} iterations)", fast.objective, fast.iterations);
    println!("          relative gap   {:.2e}", (fast.objective - lp.objective).abs() / lp.objective);

    let far = problem.with_initial_state(&[1e6, 1e6])?;
    let verdict = solve_reference(&far)?;
    let guess = admm::solve(&far, &AdmmParams::default())?;
    println!("\nxi = (1e6, 1e6): LP {}, ADMM {}", verdict.status.as_str(), guess.status.as_str());
    assert_eq!(verdict.status, SolveStatus::Infeasible);
    Ok(())
}
