use proptest::prelude::*;
use soav::admm::{self, AdmmState, GramFactor};
use soav::analysis::discreteness_report;
use soav::cost::CostProfile;
use soav::numerics::{eigenvalues, expm, factor, Matrix};
use soav::plant::{discretize, Alphabet, Plant};

fn square(n: usize, scale: f64) -> impl Strategy<Value = Matrix> {
    prop::collection::vec(-scale..scale, n * n).prop_map(move |d| Matrix::from_row_major(n, n, d).unwrap())
}

fn sized_square(scale: f64) -> impl Strategy<Value = Matrix> {
    (1usize..=5).prop_flat_map(move |n| square(n, scale))
}

/// Ascending levels ending at 1, weights summing to 1.
fn alphabet() -> impl Strategy<Value = Alphabet> {
    (2usize..=5, any::<bool>())
        .prop_flat_map(|(n, zero)| {
            (
                prop::collection::vec(0.01f64..0.99, n - 1),
                prop::collection::vec(0.05f64..1.0, n),
                Just(zero),
            )
        })
        .prop_filter_map("levels must be distinct", |(mut inner, raw, zero)| {
            if zero {
                inner[0] = 0.0;
            }
            inner.push(1.0);
            inner.sort_by(f64::total_cmp);
            if inner.windows(2).any(|w| w[1] - w[0] < 1e-3) {
                return None;
            }
            let total: f64 = raw.iter().sum();
            Alphabet::new(inner, raw.iter().map(|w| w / total).collect()).ok()
        })
}

fn oscillator() -> (Plant, Alphabet) {
    let plant = Plant::new(Matrix::from_rows(&[[0.0, 1.0], [-2.0, -1.0]]).unwrap(), vec![0.0, 1.0]).unwrap();
    let alphabet = Alphabet::new(vec![0.0, 0.2, 0.6, 1.0], vec![0.1, 0.2, 0.3, 0.4]).unwrap();
    (plant, alphabet)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn diff_norm(a: &[f64], b: &[f64]) -> f64 {
    norm(&a.iter().zip(b).map(|(x, y)| x - y).collect::<Vec<_>>())
}

fn det(m: &Matrix) -> f64 {
    let n = m.rows();
    let mut a: Vec<Vec<f64>> = (0..n).map(|i| m.row(i).to_vec()).collect();
    let mut d = 1.0;
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
        if a[p][c] == 0.0 {
            return 0.0;
        }
        if p != c {
            a.swap(p, c);
            d = -d;
        }
        d *= a[c][c];
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            let pivot_row = a[c].clone();
            for (x, p) in a[r][c..].iter_mut().zip(&pivot_row[c..]) {
                *x -= f * p;
            }
        }
    }
    d
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn expm_inverse_pair(m in sized_square(2.0)) {
        prop_assume!(m.norm_1() <= 5.0);
        let prod = expm(&m).unwrap().matmul(&expm(&m.scale(-1.0)).unwrap()).unwrap();
        prop_assert!(prod.max_abs_diff(&Matrix::identity(m.rows())) <= 1e-8);
    }

    #[test]
    fn expm_semigroup(m in sized_square(1.0), s in -1.0f64..1.0, t in -1.0f64..1.0) {
        let whole = expm(&m.scale(s + t)).unwrap();
        let split = expm(&m.scale(s)).unwrap().matmul(&expm(&m.scale(t)).unwrap()).unwrap();
        prop_assert!(whole.max_abs_diff(&split) <= 1e-8);
    }

    #[test]
    fn eigenvalues_match_trace_and_determinant(m in sized_square(3.0)) {
        let ev = eigenvalues(&m).unwrap();
        prop_assert_eq!(ev.len(), m.rows());
        let sum: f64 = ev.iter().map(|e| e.re).sum();
        let imag: f64 = ev.iter().map(|e| e.im).sum();
        prop_assert!((sum - m.trace()).abs() <= 1e-8);
        prop_assert!(imag.abs() <= 1e-8);
        let prod = ev.iter().skip(1).fold(ev[0], |acc, e| acc * e);
        let d = det(&m);
        prop_assert!((prod.re - d).abs() <= 1e-6 * d.abs().max(1.0));
    }

    #[test]
    fn spd_round_trip(g in sized_square(2.0), x in prop::collection::vec(-5.0f64..5.0, 5)) {
        let n = g.rows();
        let mut m = g.transpose().matmul(&g).unwrap();
        for i in 0..n {
            m[(i, i)] += 1.0;
        }
        let x = &x[..n];
        let v = m.mul_vec(x).unwrap();
        let solved = factor(&m).unwrap().solve(&v).unwrap();
        let residual = diff_norm(&m.mul_vec(&solved).unwrap(), &v);
        prop_assert!(residual <= 1e-10 * norm(&v).max(1.0));
        prop_assert!(diff_norm(&solved, x) <= 1e-9 * norm(x).max(1.0));
    }

    #[test]
    fn stacked_map_matches_recursion(
        z in prop::collection::vec(-1.0f64..=1.0, 60),
        xi in prop::collection::vec(-5.0f64..5.0, 2),
    ) {
        let (plant, alphabet) = oscillator();
        let p = discretize(&plant, &alphabet, 3.0, 60, &xi).unwrap();
        let stacked = p.terminal_state(&z).unwrap();
        let stepped = p.simulate(&z).unwrap();
        prop_assert!(diff_norm(&stacked, stepped.last().unwrap()) <= 1e-10);
    }

    #[test]
    fn zeta_is_linear_in_xi(xi in prop::collection::vec(-5.0f64..5.0, 2), alpha in -4.0f64..4.0) {
        let (plant, alphabet) = oscillator();
        let base = discretize(&plant, &alphabet, 5.0, 50, &xi).unwrap();
        let scaled_xi: Vec<f64> = xi.iter().map(|v| alpha * v).collect();
        let scaled = base.with_initial_state(&scaled_xi).unwrap();
        for (a, b) in scaled.zeta.iter().zip(&base.zeta) {
            prop_assert!((a - alpha * b).abs() <= 1e-12 * (1.0 + b.abs() * alpha.abs()));
        }
    }

    #[test]
    fn shifts_are_odd_and_weights_even(a in alphabet()) {
        let (r, p) = a.shifts();
        let l = r.len();
        prop_assert_eq!(l, 2 * a.len());
        for i in 0..l {
            prop_assert_eq!(r[i], -r[l - 1 - i]);
            prop_assert_eq!(p[i], p[l - 1 - i]);
        }
    }

    #[test]
    fn integrand_is_convex_even_and_floored(a in alphabet(), u in -1.0f64..=1.0, v in -1.0f64..=1.0, t in 0.0f64..=1.0) {
        let profile = CostProfile::new(&a).unwrap();
        let l = |x: f64| profile.integrand(x).unwrap();
        prop_assert!((l(u) - l(-u)).abs() <= 1e-12);
        prop_assert!(l(u) >= profile.plateau() - 1e-12);
        if u.abs() <= a.u_min() {
            prop_assert!((l(u) - profile.plateau()).abs() <= 1e-12);
        } else {
            prop_assert!(l(u) > profile.plateau());
        }
        let mid = t * u + (1.0 - t) * v;
        prop_assert!(l(mid) <= t * l(u) + (1.0 - t) * l(v) + 1e-12);
        prop_assert!((l(u) - profile.integrand_piecewise(u).unwrap()).abs() <= 1e-12);
    }

    #[test]
    fn pointwise_minimizer_matches_breakpoints(a in alphabet(), q in -4.0f64..4.0) {
        let profile = CostProfile::new(&a).unwrap();
        let levels = a.symmetric_levels();
        let mut scored: Vec<(f64, f64)> = levels
            .iter()
            .map(|&u| (profile.integrand(u).unwrap() + q * u, u))
            .collect();
        scored.sort_by(|x, y| x.0.total_cmp(&y.0));
        prop_assume!(levels.len() == 1 || scored[1].0 - scored[0].0 > 1e-9);
        let m = profile.pointwise_minimizer(q);
        prop_assert_eq!(m.value, scored[0].1);
        prop_assert!(levels.contains(&m.value));
        prop_assert_eq!(profile.pointwise_minimizer(-q).value, -m.value);
    }

    #[test]
    fn cost_forms_agree_and_respect_the_floor(a in alphabet(), z in prop::collection::vec(-1.0f64..=1.0, 1..80)) {
        let profile = CostProfile::new(&a).unwrap();
        let h = 5.0 / z.len() as f64;
        let c = profile.cost(&z, h).unwrap();
        prop_assert!((c - profile.cost_by_levels(&z, h).unwrap()).abs() <= 1e-12 * c.max(1.0));
        prop_assert!(c >= profile.jmin(5.0) - 1e-9);
        let neg: Vec<f64> = z.iter().map(|v| -v).collect();
        prop_assert!((c - profile.cost(&neg, h).unwrap()).abs() <= 1e-12 * c.max(1.0));
    }

    #[test]
    fn prox_is_nonexpansive(
        a in prop::collection::vec(-3.0f64..3.0, 1..30),
        shift in prop::collection::vec(-1.0f64..1.0, 30),
        r in -1.0f64..1.0,
        tau in 1e-6f64..2.0,
    ) {
        let b: Vec<f64> = a.iter().zip(&shift).map(|(x, s)| x + s).collect();
        let pa = admm::prox_shifted_l1(&a, r, tau);
        let pb = admm::prox_shifted_l1(&b, r, tau);
        prop_assert!(diff_norm(&pa, &pb) <= diff_norm(&a, &b) + 1e-12);
    }

    #[test]
    fn projections_are_idempotent_and_nonexpansive(
        a in prop::collection::vec(-3.0f64..3.0, 1..30),
        b in prop::collection::vec(-3.0f64..3.0, 30),
        zeta in prop::collection::vec(-3.0f64..3.0, 3),
    ) {
        let b = &b[..a.len()];
        let pa = admm::project_box(&a);
        prop_assert_eq!(admm::project_box(&pa), pa.clone());
        prop_assert!(pa.iter().all(|v| v.abs() <= 1.0));
        prop_assert!(diff_norm(&pa, &admm::project_box(b)) <= diff_norm(&a, b) + 1e-12);
        let t = admm::project_terminal(&a[..a.len().min(3)], &zeta);
        prop_assert_eq!(admm::project_terminal(&t, &zeta), t);
    }

    #[test]
    fn z_update_minimizes_the_quadratic(
        yw in prop::collection::vec(-2.0f64..2.0, 2 * (9 * 12 + 2)),
        sigma in prop::sample::select(vec![1.0, 10.0, 300.0]),
        trial in prop::collection::vec(-1.0f64..1.0, 12),
    ) {
        let (plant, alphabet) = oscillator();
        let problem = discretize(&plant, &alphabet, 2.0, 12, &[0.4, -0.1]).unwrap();
        let gram = GramFactor::new(&problem, sigma).unwrap();
        let psi = admm::stacked_operator(&problem, sigma);
        let mut state = AdmmState::cold(&problem);
        let total = state.y.len();
        state.y.copy_from_slice(&yw[..total]);
        state.w.copy_from_slice(&yw[total..2 * total]);
        let objective = |z: &[f64]| {
            let pz = psi.mul_vec(z).unwrap();
            pz.iter().zip(&state.y).zip(&state.w).map(|((p, y), w)| (y - p - w).powi(2)).sum::<f64>()
        };
        let z = admm::z_update(&state, &problem, &gram).unwrap();
        let best = objective(&z);
        prop_assert!(best <= objective(&state.z) + 1e-9 * best.max(1.0));
        prop_assert!(best <= objective(&trial) + 1e-9 * best.max(1.0));
    }

    #[test]
    fn discreteness_fraction_is_a_share(a in alphabet(), z in prop::collection::vec(-1.0f64..=1.0, 0..60), tol in 0.0f64..0.1) {
        let rep = discreteness_report(&z, &a, tol);
        prop_assert!((0.0..=1.0).contains(&rep.fraction));
        let counted: usize = rep.occupancy.iter().map(|o| o.1).sum();
        prop_assert_eq!(counted as f64, (rep.fraction * z.len() as f64).round());
        prop_assert!(rep.worst_deviation >= 0.0);
    }
}
