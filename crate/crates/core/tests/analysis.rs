use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use soav::analysis::{
    boundary_on_ray, chord_gap, discreteness_report, random_reachable_state, value_sweep, Grid, ValueFunction,
};
use soav::cost::{switch_analysis, CostProfile, DEFAULT_SNAP_TOL};
use soav::lp::solve_reference;
use soav::numerics::Matrix;
use soav::plant::{discretize, Alphabet, Plant};

fn oscillator() -> (Plant, Alphabet) {
    let plant = Plant::new(Matrix::from_rows(&[[0.0, 1.0], [-2.0, -1.0]]).unwrap(), vec![0.0, 1.0]).unwrap();
    let alphabet = Alphabet::new(vec![0.0, 0.2, 0.6, 1.0], vec![0.1, 0.2, 0.3, 0.4]).unwrap();
    (plant, alphabet)
}

#[test]
fn sweep_values_respect_floor_ceiling_and_symmetry() {
    let (plant, alphabet) = oscillator();
    let vf = ValueFunction::new(&plant, &alphabet, 3.0, 120).unwrap();
    let grid = Grid::new(vec![-8.0, -8.0], vec![8.0, 8.0], vec![9, 9]).unwrap();
    let samples = value_sweep(&vf, &grid).unwrap();
    assert_eq!(samples.len(), 81);
    let feasible: Vec<f64> = samples.iter().filter_map(|s| s.value).collect();
    assert!(feasible.len() < samples.len(), "grid should straddle the reachable set");
    assert!(feasible.len() > 1);
    for &v in &feasible {
        assert!(v >= vf.jmin() - 1e-8 && v <= 2.0 * vf.horizon() + 1e-6);
    }
    for (a, b) in samples.iter().zip(samples.iter().rev()) {
        assert_eq!(a.xi, b.xi.iter().map(|v| -v).collect::<Vec<_>>());
        match (a.value, b.value) {
            (Some(x), Some(y)) => assert!((x - y).abs() <= 1e-6),
            (None, None) => {}
            _ => panic!("feasibility differs at {:?}", a.xi),
        }
    }
    let origin = &samples[40];
    assert!((origin.value.unwrap() - vf.jmin()).abs() <= 1e-9);
}

#[test]
fn sweep_order_does_not_depend_on_threads() {
    let (plant, alphabet) = oscillator();
    let vf = ValueFunction::new(&plant, &alphabet, 5.0, 100).unwrap();
    let grid = Grid::new(vec![-3.0, -3.0], vec![3.0, 3.0], vec![5, 4]).unwrap();
    let parallel = value_sweep(&vf, &grid).unwrap();
    let serial: Vec<_> = grid.points().iter().map(|xi| vf.sample(xi).unwrap()).collect();
    assert_eq!(parallel, serial);
}

#[test]
fn collinear_midpoint_through_the_origin() {
    let (plant, alphabet) = oscillator();
    let vf = ValueFunction::new(&plant, &alphabet, 5.0, 200).unwrap();
    let a = vf.sample(&[3.0, 1.0]).unwrap();
    let b = vf.sample(&[-1.5, -0.5]).unwrap();
    // 1/3 of the way from a to b is (1.5, 0.5)
    let gap = chord_gap(&vf, &a, &b, 2.0 / 3.0).unwrap();
    assert!(gap <= 1e-6);
    let mid = vf.value(&[1.5, 0.5]).unwrap().unwrap();
    assert!(mid <= (a.value.unwrap() + b.value.unwrap()) / 2.0 + 1e-6);
}

#[test]
fn boundary_values_approach_the_ceiling() {
    let (plant, alphabet) = oscillator();
    let vf = ValueFunction::new(&plant, &alphabet, 5.0, 200).unwrap();
    for dir in [[1.0, 0.0], [0.0, 1.0], [-1.0, 1.0]] {
        let b = boundary_on_ray(&vf, &dir, 1e-4).unwrap();
        assert!(b.c_inside < b.c_outside);
        assert!(b.c_outside - b.c_inside <= 1e-4 * b.c_outside);
        let ceiling = 2.0 * vf.horizon();
        assert!(b.value_inside <= ceiling + 1e-6 && b.value_inside >= ceiling - 0.2);
        let outside: Vec<f64> = dir.iter().map(|d| d * b.c_outside).collect();
        assert!(vf.value(&outside).unwrap().is_none());
    }
}

#[test]
fn lp_solutions_meet_the_discreteness_budget() {
    let (plant, alphabet) = oscillator();
    let profile = CostProfile::new(&alphabet).unwrap();
    let base = discretize(&plant, &alphabet, 5.0, 500, &[0.0, 0.0]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..6 {
        let xi = random_reachable_state(&base, &mut rng).unwrap();
        let res = solve_reference(&base.with_initial_state(&xi).unwrap()).unwrap();
        let rep = discreteness_report(&res.z, &alphabet, DEFAULT_SNAP_TOL);
        let bound = switch_analysis(&res.z, &profile, &plant, 5.0, DEFAULT_SNAP_TOL, None).unwrap().bound;
        assert!(rep.fraction >= 1.0 - (bound + 4.0) / 500.0);
    }
}

#[test]
fn minimum_cost_set_controls_stay_inside_the_smallest_level() {
    // U_min > 0: states steered by |z| ≤ U_min cost exactly J_min
    let (plant, _) = oscillator();
    let alphabet = Alphabet::new(vec![0.3, 1.0], vec![0.5, 0.5]).unwrap();
    let profile = CostProfile::new(&alphabet).unwrap();
    let base = discretize(&plant, &alphabet, 4.0, 200, &[0.0, 0.0]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    for _ in 0..5 {
        let z: Vec<f64> = (0..200).map(|_| rng.gen_range(-0.3..=0.3)).collect();
        let xi = base.initial_state_steered_by(&z).unwrap();
        let res = solve_reference(&base.with_initial_state(&xi).unwrap()).unwrap();
        assert!((res.objective - profile.jmin(4.0)).abs() <= 1e-8);
        assert!(res.z.iter().all(|v| v.abs() <= 0.3 + DEFAULT_SNAP_TOL));
    }
    // far outside that set the optimum is discrete again
    let xi = base.initial_state_steered_by(&vec![1.0; 200]).unwrap();
    let res = solve_reference(&base.with_initial_state(&xi).unwrap()).unwrap();
    let rep = discreteness_report(&res.z, &alphabet, DEFAULT_SNAP_TOL);
    let bound = switch_analysis(&res.z, &profile, &plant, 4.0, DEFAULT_SNAP_TOL, None).unwrap().bound;
    assert!(res.objective > profile.jmin(4.0));
    assert!(rep.fraction >= 1.0 - (bound + 4.0) / 200.0);
}
