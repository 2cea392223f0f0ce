use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use soav::admm::AdmmParams;
use soav::cost::{snap, DEFAULT_SNAP_TOL};
use soav::mpc::{run_mpc, MpcConfig, Schedule, SolverChoice, Trajectory};
use soav::numerics::Matrix;
use soav::plant::{zoh, Alphabet, Plant};

fn oscillator() -> (Plant, Alphabet) {
    let plant = Plant::new(Matrix::from_rows(&[[0.0, 1.0], [-2.0, -1.0]]).unwrap(), vec![0.0, 1.0]).unwrap();
    let alphabet = Alphabet::new(vec![0.0, 0.2, 0.6, 1.0], vec![0.1, 0.2, 0.3, 0.4]).unwrap();
    (plant, alphabet)
}

fn config(solver: SolverChoice, end_time: f64, nu: usize) -> MpcConfig {
    MpcConfig {
        horizon: 5.0,
        nu,
        end_time,
        solver,
        admm: AdmmParams::default(),
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Recursion residual, box, and value monotonicity.
fn check_invariants(plant: &Plant, traj: &Trajectory) {
    let (a_d, b_d) = zoh(plant, traj.h).unwrap();
    assert_eq!(traj.states.len(), traj.controls.len() + 1);
    for (l, u) in traj.controls.iter().enumerate() {
        assert!(u.abs() <= 1.0 + 1e-9, "sample {l} = {u}");
        let next = a_d.mul_vec(&traj.states[l]).unwrap();
        for i in 0..next.len() {
            let expected = next[i] + b_d[i] * u;
            assert!((traj.states[l + 1][i] - expected).abs() <= 1e-10);
        }
    }
    for w in traj.times.windows(2) {
        assert!(w[1] > w[0]);
    }
    let values = traj.step_values();
    for w in values.windows(2) {
        assert!(w[1] <= w[0] + 1e-6, "V rose from {} to {}", w[0], w[1]);
    }
}

#[test]
fn example_closed_loop_with_the_lp_solver() {
    let (plant, alphabet) = oscillator();
    let schedule = Schedule::new(&[4.0, 8.0, 9.0, 10.0], 0.01, 5.0, 0.01).unwrap();
    let traj = run_mpc(&plant, &alphabet, &schedule, &[5.0, 5.0], &config(SolverChoice::Lp, 10.0, 500)).unwrap();
    assert!(traj.aborted.is_none());
    assert_eq!(traj.steps.len(), 4);
    assert_eq!(traj.controls.len(), 1000);
    check_invariants(&plant, &traj);
    let allowed = [0.0, 0.2, -0.2, -0.6, -1.0];
    let levels = alphabet.symmetric_levels();
    for &u in &traj.controls {
        if let Some(l) = snap(u, &levels, DEFAULT_SNAP_TOL) {
            assert!(allowed.contains(&l), "unexpected level {l}");
        }
    }
    assert!(traj.states.iter().all(|x| norm(x) <= 1.5 * norm(&[5.0, 5.0])));
    assert!(norm(traj.final_state()) < norm(&[5.0, 5.0]));
}

#[test]
fn example_closed_loop_with_admm() {
    let (plant, alphabet) = oscillator();
    let schedule = Schedule::new(&[4.0, 8.0, 9.0, 10.0], 0.01, 5.0, 0.01).unwrap();
    let traj = run_mpc(&plant, &alphabet, &schedule, &[5.0, 5.0], &config(SolverChoice::Admm, 10.0, 500)).unwrap();
    assert!(traj.aborted.is_none());
    check_invariants(&plant, &traj);
    assert!(norm(traj.final_state()) <= 0.1 * norm(&[5.0, 5.0]));
}

#[test]
fn single_instant_schedule_reaches_the_origin() {
    let (plant, alphabet) = oscillator();
    let schedule = Schedule::new(&[5.0], 0.01, 5.0, 0.01).unwrap();
    let traj = run_mpc(&plant, &alphabet, &schedule, &[2.0, -1.0], &config(SolverChoice::Lp, 5.0, 500)).unwrap();
    assert_eq!(traj.steps.len(), 1);
    assert!(norm(traj.final_state()) <= 1e-5);
}

#[test]
fn origin_stays_at_rest() {
    let (plant, alphabet) = oscillator();
    let schedule = Schedule::new(&[1.0, 2.0, 3.0], 0.05, 5.0, 0.05).unwrap();
    let traj = run_mpc(&plant, &alphabet, &schedule, &[0.0, 0.0], &config(SolverChoice::Lp, 3.0, 100)).unwrap();
    assert!(traj.controls.iter().all(|&u| u == 0.0));
    assert!(traj.states.iter().all(|x| x.iter().all(|&v| v == 0.0)));
}

#[test]
fn any_valid_schedule_keeps_the_value_from_rising() {
    let (plant, alphabet) = oscillator();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let h = 0.05;
    for _ in 0..4 {
        let mut instants = Vec::new();
        let mut t = 0.0;
        while t < 8.0 {
            t += (rng.gen_range(1..=100) as f64) * h;
            instants.push((t / h).round() * h);
        }
        let end = *instants.last().unwrap();
        let schedule = Schedule::new(&instants, h, 5.0, h).unwrap();
        let xi = [rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0)];
        let traj = run_mpc(&plant, &alphabet, &schedule, &xi, &config(SolverChoice::Lp, end, 100)).unwrap();
        assert!(traj.aborted.is_none());
        check_invariants(&plant, &traj);
        let v0 = traj.steps[0].value;
        assert!(traj.step_values().iter().all(|&v| v <= v0 + 1e-6));
    }
}

#[test]
fn schedule_rejects_gaps_outside_the_window() {
    assert!(Schedule::new(&[6.0], 0.01, 5.0, 0.01).is_err());
    assert!(Schedule::new(&[2.0, 2.0], 0.01, 5.0, 0.01).is_err());
    assert!(Schedule::new(&[0.5], 0.01, 5.0, 1.0).is_err());
    assert!(Schedule::new(&[1.005], 0.01, 5.0, 0.01).is_err());
}
