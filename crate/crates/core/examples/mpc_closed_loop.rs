//! Receding-horizon control of the damped oscillator with sampling instants
//! 4, 8, 9, 10; writes the trajectory CSV and two SVG plots to a temp dir.
//!
//! ```bash
//! cargo run --release --example mpc_closed_loop
//! ```

use std::fs::File;
use std::io::BufWriter;

use soav::admm::AdmmParams;
use soav::io::{control_plot, state_plot, write_trajectory_csv};
use soav::mpc::{run_mpc, MpcConfig, Schedule, SolverChoice};
use soav::numerics::Matrix;
use soav::plant::{Alphabet, Plant};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let plant = Plant::new(Matrix::from_rows(&[[0.0, 1.0], [-2.0, -1.0]])?, vec![0.0, 1.0])?;
    let alphabet = Alphabet::new(vec![0.0, 0.2, 0.6, 1.0], vec![0.1, 0.2, 0.3, 0.4])?;
    let (horizon, nu) = (5.0, 500);
    let h = horizon / nu as f64;
    let schedule = Schedule::new(&[4.0, 8.0, 9.0, 10.0], h, horizon, h)?;
    let config = MpcConfig {
        horizon,
        nu,
        end_time: 10.0,
        solver: SolverChoice::Lp,
        admm: AdmmParams::default(),
    };
    let traj = run_mpc(&plant, &alphabet, &schedule, &[5.0, 5.0], &config)?;

    println!("{:>6}  {:>12}  {:>10}  {:>10}", "t", "V", "x1", "x2");
    for s in &traj.steps {
        println!("{:>6.2}  {:>12.6}  {:>10.4}  {:>10.4}", s.time, s.value, s.state[0], s.state[1]);
    }
    let x = traj.final_state();
    println!("final state at t = 10: ({:.4}, {:.4})", x[0], x[1]);

    let mut levels: Vec<f64> = Vec::new();
    for &u in &traj.controls {
        let r = (u * 1e3).round() / 1e3;
        if !levels.contains(&r) {
            levels.push(r);
        }
    }
    levels.sort_by(f64::total_cmp);
    println!("distinct control values (3 d.p.): {levels:?}");

    let dir = std::env::temp_dir().join("soav-mpc-example");
    std::fs::create_dir_all(&dir)?;
    write_trajectory_csv(&traj, &mut BufWriter::new(File::create(dir.join("trajectory.csv"))?))?;
    std::fs::write(dir.join("control.svg"), control_plot(&traj, "MPC control"))?;
    std::fs::write(dir.join("state.svg"), state_plot(&traj, "MPC state"))?;
    println!("wrote trajectory.csv, control.svg, state.svg to {}", dir.display());
    Ok(())
}
