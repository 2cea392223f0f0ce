//! Empirical checks on the value function `V(ξ)` and on optimal controls:
//! grid sweeps, convexity sampling, discreteness measurement and
//! reachable-set boundary probing.

use log::{debug, warn};
use rand::Rng;
use rayon::prelude::*;

use crate::admm::SolveStatus;
use crate::cost::{nearest_level, CostProfile};
use crate::error::{invalid, Result};
use crate::lp;
use crate::plant::{discretize, normalize, Alphabet, DiscreteProblem, Plant};

/// Environment variable that caps sweep parallelism.
pub const THREADS_ENV: &str = "SOAV_THREADS";

/// Value function on a fixed horizon and grid, evaluated with the LP
/// route so readings carry no solver tolerance.
#[derive(Debug, Clone)]
pub struct ValueFunction {
    base: DiscreteProblem,
    profile: CostProfile,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValueSample {
    pub xi: Vec<f64>,
    /// `None` when `ξ` is outside the reachable set or the solve failed.
    pub value: Option<f64>,
    pub iterations: usize,
    pub error: Option<String>,
}

impl ValueSample {
    pub fn is_feasible(&self) -> bool {
        self.value.is_some()
    }
}

impl ValueFunction {
    pub fn new(plant: &Plant, alphabet: &Alphabet, horizon: f64, nu: usize) -> Result<Self> {
        let norm = normalize(plant, alphabet)?;
        let base = discretize(&norm.plant, &norm.alphabet, horizon, nu, &vec![0.0; plant.dim()])?;
        Ok(ValueFunction {
            base,
            profile: CostProfile::new(&norm.alphabet)?,
        })
    }

    pub fn problem(&self) -> &DiscreteProblem {
        &self.base
    }

    pub fn profile(&self) -> &CostProfile {
        &self.profile
    }

    pub fn horizon(&self) -> f64 {
        self.base.horizon
    }

    pub fn dim(&self) -> usize {
        self.base.state_dim()
    }

    /// Lower bound `2TΣw_iU_i`.
    pub fn jmin(&self) -> f64 {
        self.profile.jmin(self.base.horizon)
    }

    /// Solves at `xi`; infeasibility and solver failures land in the sample.
    pub fn sample(&self, xi: &[f64]) -> Result<ValueSample> {
        let problem = self.base.with_initial_state(xi)?;
        Ok(match lp::solve_reference(&problem) {
            Ok(res) if res.status == SolveStatus::Converged => ValueSample {
                xi: xi.to_vec(),
                value: Some(res.objective),
                iterations: res.iterations,
                error: None,
            },
            Ok(res) => ValueSample {
                xi: xi.to_vec(),
                value: None,
                iterations: res.iterations,
                error: None,
            },
            Err(e) => {
                warn!("value solve at {xi:?} failed: {e}");
                ValueSample {
                    xi: xi.to_vec(),
                    value: None,
                    iterations: 0,
                    error: Some(e.to_string()),
                }
            }
        })
    }

    /// `V(ξ)`, or `None` outside the reachable set.
    pub fn value(&self, xi: &[f64]) -> Result<Option<f64>> {
        let s = self.sample(xi)?;
        match s.error {
            Some(e) => Err(crate::Error::Domain(e)),
            None => Ok(s.value),
        }
    }
}

/// Rectangular grid with `counts[i]` points per axis, endpoints included.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Grid {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, counts: Vec<usize>) -> Result<Self> {
        if lower.len() != upper.len() || lower.len() != counts.len() || lower.is_empty() {
            return invalid("grid bounds and counts must have one entry per state");
        }
        for i in 0..lower.len() {
            if !lower[i].is_finite() || !upper[i].is_finite() || lower[i] > upper[i] {
                return invalid(format!("grid axis {} has bad bounds [{}, {}]", i + 1, lower[i], upper[i]));
            }
            if counts[i] == 0 {
                return invalid(format!("grid axis {} has zero points", i + 1));
            }
            if counts[i] == 1 && lower[i] != upper[i] {
                return invalid(format!("grid axis {} has one point but distinct bounds", i + 1));
            }
        }
        Ok(Grid { lower, upper, counts })
    }

    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn axis(&self, i: usize, k: usize) -> f64 {
        if self.counts[i] == 1 {
            self.lower[i]
        } else {
            let t = k as f64 / (self.counts[i] - 1) as f64;
            // exact endpoints; symmetric grids stay symmetric
            if k == self.counts[i] - 1 {
                self.upper[i]
            } else {
                self.lower[i] + t * (self.upper[i] - self.lower[i])
            }
        }
    }

    /// Point `index` with the first coordinate varying slowest.
    pub fn point(&self, index: usize) -> Vec<f64> {
        let mut rem = index;
        let mut out = vec![0.0; self.counts.len()];
        for i in (0..self.counts.len()).rev() {
            out[i] = self.axis(i, rem % self.counts[i]);
            rem /= self.counts[i];
        }
        out
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|k| self.point(k)).collect()
    }
}

/// Thread cap from [`THREADS_ENV`], if set to a positive integer.
pub fn thread_cap() -> Option<usize> {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
}

/// Evaluates `V` on every grid point. Points run in parallel; the output
/// keeps grid order.
pub fn value_sweep(vf: &ValueFunction, grid: &Grid) -> Result<Vec<ValueSample>> {
    if grid.lower.len() != vf.dim() {
        return invalid(format!("grid has {} axes, plant has {} states", grid.lower.len(), vf.dim()));
    }
    let points = grid.points();
    let run = || -> Result<Vec<ValueSample>> { points.par_iter().map(|xi| vf.sample(xi)).collect() };
    match thread_cap() {
        Some(n) => {
            debug!("sweeping {} points on {n} threads", points.len());
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| crate::Error::Domain(format!("thread pool: {e}")))?;
            pool.install(run)
        }
        None => run(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvexityReport {
    pub trials: usize,
    pub violations: usize,
    /// Largest `V(λξ+(1−λ)η) − λV(ξ) − (1−λ)V(η)` seen.
    pub worst_violation: f64,
    pub tolerance: f64,
}

impl ConvexityReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// Draws random feasible pairs from `samples` and a random `λ ∈ (0, 1)`,
/// solves afresh at the combination and compares against the chord.
pub fn convexity_check<R: Rng>(
    vf: &ValueFunction,
    samples: &[ValueSample],
    trials: usize,
    tolerance: f64,
    rng: &mut R,
) -> Result<ConvexityReport> {
    let feasible: Vec<&ValueSample> = samples.iter().filter(|s| s.is_feasible()).collect();
    if feasible.len() < 3 {
        return invalid(format!(
            "convexity check needs at least 3 feasible samples, got {}",
            feasible.len()
        ));
    }
    let mut report = ConvexityReport {
        trials,
        violations: 0,
        worst_violation: f64::NEG_INFINITY,
        tolerance,
    };
    for _ in 0..trials {
        let a = feasible[rng.gen_range(0..feasible.len())];
        let mut b = feasible[rng.gen_range(0..feasible.len())];
        while std::ptr::eq(a, b) {
            b = feasible[rng.gen_range(0..feasible.len())];
        }
        let lambda: f64 = rng.gen_range(f64::EPSILON..1.0);
        let gap = chord_gap(vf, a, b, lambda)?;
        report.worst_violation = report.worst_violation.max(gap);
        if gap > tolerance {
            debug!("convexity violated by {gap:e} between {:?} and {:?}", a.xi, b.xi);
            report.violations += 1;
        }
    }
    Ok(report)
}

/// `V(λξ + (1−λ)η) − λV(ξ) − (1−λ)V(η)`; infinite when the combination
/// comes back infeasible.
pub fn chord_gap(vf: &ValueFunction, a: &ValueSample, b: &ValueSample, lambda: f64) -> Result<f64> {
    let (Some(va), Some(vb)) = (a.value, b.value) else {
        return invalid("chord endpoints must be feasible");
    };
    let mid: Vec<f64> = a.xi.iter().zip(&b.xi).map(|(x, y)| lambda * x + (1.0 - lambda) * y).collect();
    Ok(match vf.value(&mid)? {
        Some(v) => v - (lambda * va + (1.0 - lambda) * vb),
        None => f64::INFINITY,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscretenessReport {
    pub samples: usize,
    /// Share of samples within `snap_tol` of a level in `{±U_i}`.
    pub fraction: f64,
    pub worst_deviation: f64,
    /// `(level, samples snapped to it)` in ascending level order.
    pub occupancy: Vec<(f64, usize)>,
}

pub fn discreteness_report(z: &[f64], alphabet: &Alphabet, snap_tol: f64) -> DiscretenessReport {
    let levels = alphabet.symmetric_levels();
    let mut occupancy: Vec<(f64, usize)> = levels.iter().map(|&l| (l, 0)).collect();
    let mut on = 0usize;
    let mut worst: f64 = 0.0;
    for &v in z {
        let (level, dist) = nearest_level(v, &levels);
        worst = worst.max(dist);
        if dist <= snap_tol {
            on += 1;
            if let Some(slot) = occupancy.iter_mut().find(|(l, _)| *l == level) {
                slot.1 += 1;
            }
        }
    }
    DiscretenessReport {
        samples: z.len(),
        fraction: if z.is_empty() { 1.0 } else { on as f64 / z.len() as f64 },
        worst_deviation: worst,
        occupancy,
    }
}

/// Bracket of the reachable-set boundary along a ray `c·d`, `c ≥ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryBracket {
    pub c_inside: f64,
    pub c_outside: f64,
    pub value_inside: f64,
}

/// Bisects on feasibility of `c·direction` until the bracket is narrower
/// than `rel_tol·c_outside`.
pub fn boundary_on_ray(vf: &ValueFunction, direction: &[f64], rel_tol: f64) -> Result<BoundaryBracket> {
    if direction.iter().all(|&d| d == 0.0) || direction.iter().any(|d| !d.is_finite()) {
        return invalid("ray direction must be finite and nonzero");
    }
    let at = |c: f64| -> Vec<f64> { direction.iter().map(|d| c * d).collect() };
    let mut lo = 0.0;
    let mut v_lo = vf.value(&at(0.0))?.ok_or_else(|| crate::Error::Domain("origin not reachable".into()))?;
    let mut hi = 1.0;
    let mut expansions = 0;
    while let Some(v) = vf.value(&at(hi))? {
        lo = hi;
        v_lo = v;
        hi *= 2.0;
        expansions += 1;
        if expansions > 200 {
            return Err(crate::Error::Domain("reachable set looks unbounded along this ray".into()));
        }
    }
    while hi - lo > rel_tol * hi {
        let mid = 0.5 * (lo + hi);
        match vf.value(&at(mid))? {
            Some(v) => {
                lo = mid;
                v_lo = v;
            }
            None => hi = mid,
        }
    }
    Ok(BoundaryBracket {
        c_inside: lo,
        c_outside: hi,
        value_inside: v_lo,
    })
}

/// Initial state that a uniformly random box control steers to the origin,
/// so the program at that state is feasible.
pub fn random_reachable_state<R: Rng>(problem: &DiscreteProblem, rng: &mut R) -> Result<Vec<f64>> {
    let z: Vec<f64> = (0..problem.nu).map(|_| rng.gen_range(-1.0..=1.0)).collect();
    problem.initial_state_steered_by(&z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Matrix;
    use rand::SeedableRng;

    fn example() -> (Plant, Alphabet) {
        (
            Plant::new(
                Matrix::from_rows(&[[0.0, 1.0], [-2.0, -1.0]]).unwrap(),
                vec![0.0, 1.0],
            )
            .unwrap(),
            Alphabet::new(vec![0.0, 0.2, 0.6, 1.0], vec![0.1, 0.2, 0.3, 0.4]).unwrap(),
        )
    }

    #[test]
    fn grid_order_and_endpoints() {
        let g = Grid::new(vec![-1.0, 0.0], vec![1.0, 2.0], vec![3, 2]).unwrap();
        assert_eq!(
            g.points(),
            vec![
                vec![-1.0, 0.0],
                vec![-1.0, 2.0],
                vec![0.0, 0.0],
                vec![0.0, 2.0],
                vec![1.0, 0.0],
                vec![1.0, 2.0]
            ]
        );
        assert!(Grid::new(vec![0.0], vec![1.0], vec![1]).is_err());
        assert!(Grid::new(vec![1.0], vec![0.0], vec![2]).is_err());
        assert_eq!(Grid::new(vec![0.0], vec![0.0], vec![1]).unwrap().points(), vec![vec![0.0]]);
    }

    #[test]
    fn value_at_origin_is_the_floor() {
        let (plant, alpha) = example();
        let vf = ValueFunction::new(&plant, &alpha, 5.0, 100).unwrap();
        let v = vf.value(&[0.0, 0.0]).unwrap().unwrap();
        assert!((v - 6.2).abs() < 1e-12);
        assert!((vf.jmin() - 6.2).abs() < 1e-12);
    }

    #[test]
    fn discreteness_examples() {
        let (_, alpha) = example();
        let r = discreteness_report(&[0.0, 0.2, -0.6, 1.0], &alpha, 1e-3);
        assert_eq!(r.fraction, 1.0);
        assert_eq!(r.worst_deviation, 0.0);
        let r = discreteness_report(&[0.5; 10], &alpha, 1e-3);
        assert_eq!(r.fraction, 0.0);
        assert!((r.worst_deviation - 0.1).abs() < 1e-12);
        assert!(r.occupancy.iter().all(|o| o.1 == 0));
    }

    #[test]
    fn chord_endpoints_are_exact() {
        let (plant, alpha) = example();
        let vf = ValueFunction::new(&plant, &alpha, 5.0, 50).unwrap();
        let a = vf.sample(&[1.0, -1.0]).unwrap();
        let b = vf.sample(&[-2.0, 0.5]).unwrap();
        for lambda in [0.0, 1.0] {
            assert!(chord_gap(&vf, &a, &b, lambda).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn convexity_needs_three_feasible_samples() {
        let (plant, alpha) = example();
        let vf = ValueFunction::new(&plant, &alpha, 5.0, 20).unwrap();
        let s = vec![vf.sample(&[0.0, 0.0]).unwrap(), vf.sample(&[0.1, 0.0]).unwrap()];
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        assert!(convexity_check(&vf, &s, 5, 1e-6, &mut rng).is_err());
    }
}
