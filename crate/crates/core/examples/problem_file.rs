//! Loading a TOML problem description and running the solver it configures.
//!
//! ```bash
//! cargo run --release --example problem_file -- problems/damped_oscillator.toml
//! ```

use soav::admm;
use soav::io::ProblemFile;
use soav::plant::{discretize, normalize};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/problems/damped_oscillator.toml").to_string());
    let p = ProblemFile::load(std::path::Path::new(&path))?;
    println!("{path}: n = {}, T = {}, nu = {}", p.plant.dim(), p.horizon, p.nu);
    if let Some(m) = &p.mpc {
        println!("mpc instants {:?} until t = {}", m.schedule.instants(), m.end_time);
    }

    let norm = normalize(&p.plant, &p.alphabet)?;
    let problem = discretize(&norm.plant, &norm.alphabet, p.horizon, p.nu, &p.x0)?;
    let res = admm::solve(&problem, &p.admm)?;
    println!(
        "ADMM: {} in {} iterations, V = {:.6}",
        res.status.as_str(),
        res.iterations,
        res.objective
    );
    Ok(())
}
