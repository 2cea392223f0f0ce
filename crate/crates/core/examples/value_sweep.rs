//! The value function on a grid of initial states, with a randomized chord
//! test for convexity and a symmetry check.
//!
//! ```bash
//! SOAV_THREADS=4 cargo run --release --example value_sweep
//! ```

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use soav::analysis::{convexity_check, value_sweep, Grid, ValueFunction};
use soav::numerics::Matrix;
use soav::plant::{Alphabet, Plant};

fn main() -> soav::Result<()> {
    let plant = Plant::new(Matrix::from_rows(&[[0.0, 1.0], [-2.0, -1.0]])?, vec![0.0, 1.0])?;
    let alphabet = Alphabet::new(vec![0.0, 0.2, 0.6, 1.0], vec![0.1, 0.2, 0.3, 0.4])?;
    let vf = ValueFunction::new(&plant, &alphabet, 5.0, 200)?;
    let grid = Grid::new(vec![-6.0, -6.0], vec![6.0, 6.0], vec![9, 9])?;

    let samples = value_sweep(&vf, &grid)?;
    println!("V on a 9x9 grid over [-6, 6]^2 (rows x1, columns x2; '-' = unreachable):");
    for row in samples.chunks(9) {
        let line: Vec<String> = row
            .iter()
            .map(|s| s.value.map_or(format!("{:>6}", "-"), |v| format!("{v:>6.3}")))
            .collect();
        println!("  {}", line.join(" "));
    }

    let worst_asym = samples
        .iter()
        .zip(samples.iter().rev())
        .filter_map(|(a, b)| Some((a.value? - b.value?).abs()))
        .fold(0.0, f64::max);
    println!("J_min = {:.6}; max |V(x) - V(-x)| = {worst_asym:.2e}", vf.jmin());

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let report = convexity_check(&vf, &samples, 50, 1e-6, &mut rng)?;
    println!(
        "convexity: {} of {} chords violated, worst gap {:.2e}",
        report.violations, report.trials, report.worst_violation
    );
    Ok(())
}
