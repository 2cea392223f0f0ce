//! Receding-horizon control: re-solve from the current state at every
//! sampling instant, apply the head of the optimal control, repeat.

use log::{debug, info, warn};

use crate::admm::{self, AdmmParams, GramFactor, SolveResult, SolveStatus, WarmStart};
use crate::error::{invalid, Result};
use crate::lp;
use crate::plant::{discretize, normalize, Alphabet, DiscreteProblem, Plant};

/// Sampling instants on the grid `h·ℤ`, starting at `t_0 = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    steps: Vec<usize>,
    h: f64,
    horizon: f64,
    min_gap: f64,
}

impl Schedule {
    /// Builds a schedule from instants in time units. A leading `0` is
    /// added when missing. Every instant must be a multiple of `h`, and
    /// consecutive gaps must lie in `[min_gap, horizon]`.
    pub fn new(instants: &[f64], h: f64, horizon: f64, min_gap: f64) -> Result<Self> {
        if !(h > 0.0) || !h.is_finite() {
            return invalid(format!("grid step must be positive, got {h}"));
        }
        if !(horizon > 0.0) || !horizon.is_finite() {
            return invalid(format!("horizon must be positive, got {horizon}"));
        }
        if !(min_gap > 0.0) || min_gap > horizon {
            return invalid(format!("minimum gap must lie in (0, T], got {min_gap}"));
        }
        let mut steps = Vec::with_capacity(instants.len() + 1);
        if instants.first().is_none_or(|&t| t != 0.0) {
            steps.push(0);
        }
        for &t in instants {
            steps.push(to_step(t, h).ok_or_else(|| {
                crate::Error::Validation(format!(
                    "sampling instant {t} is not a nonnegative multiple of the grid step {h}"
                ))
            })?);
        }
        for pair in steps.windows(2) {
            let gap = (pair[1] as f64 - pair[0] as f64) * h;
            if pair[1] <= pair[0] {
                return invalid(format!(
                    "sampling instants must be strictly increasing ({} then {})",
                    pair[0] as f64 * h,
                    pair[1] as f64 * h
                ));
            }
            let tol = 1e-9 * horizon;
            if gap < min_gap - tol || gap > horizon + tol {
                return invalid(format!(
                    "gap {gap} between instants {} and {} is outside [{min_gap}, {horizon}]",
                    pair[0] as f64 * h,
                    pair[1] as f64 * h
                ));
            }
        }
        Ok(Schedule {
            steps,
            h,
            horizon,
            min_gap,
        })
    }

    /// Instants as grid indices.
    pub fn steps(&self) -> &[usize] {
        &self.steps
    }

    pub fn instants(&self) -> Vec<f64> {
        self.steps.iter().map(|&s| s as f64 * self.h).collect()
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn min_gap(&self) -> f64 {
        self.min_gap
    }
}

/// Grid index of `t`, if `t` sits on the grid.
pub fn to_step(t: f64, h: f64) -> Option<usize> {
    if !t.is_finite() || t < 0.0 {
        return None;
    }
    let s = (t / h).round();
    ((s * h - t).abs() <= 1e-9 * t.abs().max(1.0)).then_some(s as usize)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverChoice {
    Admm,
    Lp,
}

impl SolverChoice {
    pub fn as_str(self) -> &'static str {
        match self {
            SolverChoice::Admm => "admm",
            SolverChoice::Lp => "lp",
        }
    }
}

/// Diagnostics for the solve at one sampling instant.
#[derive(Debug, Clone)]
pub struct StepRecord {
    pub time: f64,
    pub state: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub status: SolveStatus,
    pub terminal_residual: f64,
    pub applied: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum AbortReason {
    Infeasible,
    Solver(SolveStatus),
    Numerical(String),
}

#[derive(Debug, Clone)]
pub struct Abort {
    pub time: f64,
    pub reason: AbortReason,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub h: f64,
    /// `t_l = l·h` for every recorded state.
    pub times: Vec<f64>,
    /// Applied input on `[t_l, t_{l+1})`, in the plant's original units.
    pub controls: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    /// Value reading in force at each recorded state.
    pub values: Vec<f64>,
    pub steps: Vec<StepRecord>,
    pub aborted: Option<Abort>,
}

impl Trajectory {
    fn start(h: f64, xi: &[f64]) -> Self {
        Trajectory {
            h,
            times: vec![0.0],
            controls: Vec::new(),
            states: vec![xi.to_vec()],
            values: vec![f64::NAN],
            steps: Vec::new(),
            aborted: None,
        }
    }

    /// `V_k` at each solved sampling instant.
    pub fn step_values(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.value).collect()
    }

    pub fn final_state(&self) -> &[f64] {
        self.states.last().expect("trajectory holds the initial state")
    }
}

/// Single open-loop solve laid out like a closed-loop run: `controls` is
/// `z` times `u_scale`, states follow the discrete recursion and `V` is
/// `value` throughout.
pub fn open_loop(problem: &DiscreteProblem, z: &[f64], value: f64, u_scale: f64) -> Result<Trajectory> {
    let states = problem.simulate(z)?;
    Ok(Trajectory {
        h: problem.h,
        times: (0..states.len()).map(|l| l as f64 * problem.h).collect(),
        controls: z.iter().map(|v| v * u_scale).collect(),
        values: vec![value; states.len()],
        states,
        steps: Vec::new(),
        aborted: None,
    })
}

/// Everything `run_mpc` needs besides the plant and alphabet.
#[derive(Debug, Clone)]
pub struct MpcConfig {
    pub horizon: f64,
    pub nu: usize,
    pub end_time: f64,
    pub solver: SolverChoice,
    pub admm: AdmmParams,
}

/// Runs the closed loop from `xi` until `end_time`.
///
/// The horizon length and grid count stay fixed, so every solve uses the
/// same `Φ` and only `ζ` moves. A failed solve stops the run; the
/// trajectory up to that instant is returned with `aborted` set.
pub fn run_mpc(
    plant: &Plant,
    alphabet: &Alphabet,
    schedule: &Schedule,
    xi: &[f64],
    config: &MpcConfig,
) -> Result<Trajectory> {
    config.admm.validate()?;
    let norm = normalize(plant, alphabet)?;
    let u_scale = alphabet.u_max();
    let base = discretize(&norm.plant, &norm.alphabet, config.horizon, config.nu, xi)?;
    let h = base.h;
    if (schedule.h() - h).abs() > 1e-12 * h || (schedule.horizon() - config.horizon).abs() > 1e-12 {
        return invalid("schedule grid does not match the horizon discretization");
    }
    let end = to_step(config.end_time, h).ok_or_else(|| {
        crate::Error::Validation(format!(
            "end time {} is not a nonnegative multiple of the grid step {h}",
            config.end_time
        ))
    })?;
    let last = *schedule.steps().last().expect("schedule starts at 0");
    if last < end {
        return invalid(format!(
            "sampling instants stop at {} before the end time {}",
            last as f64 * h,
            config.end_time
        ));
    }

    let gram = match config.solver {
        SolverChoice::Admm => Some(GramFactor::new(&base, config.admm.resolved_scale(&base))?),
        SolverChoice::Lp => None,
    };
    let mut traj = Trajectory::start(h, xi);
    let mut warm: Option<WarmStart> = None;
    let mut state = xi.to_vec();

    for (k, pair) in schedule.steps().windows(2).enumerate() {
        let (s0, s1) = (pair[0], pair[1]);
        if s0 >= end {
            break;
        }
        let t = s0 as f64 * h;
        let problem = base.with_initial_state(&state)?;

        if k == 0 && config.solver == SolverChoice::Admm {
            let check = lp::solve_reference(&problem)?;
            if check.status == SolveStatus::Infeasible {
                traj.aborted = Some(Abort {
                    time: t,
                    reason: AbortReason::Infeasible,
                });
                return Ok(traj);
            }
        }
        let solved: Result<SolveResult> = match config.solver {
            SolverChoice::Lp => lp::solve_reference(&problem),
            SolverChoice::Admm => {
                let mut params = config.admm.clone();
                params.warm_start = warm.take();
                admm::solve_with(&problem, &params, gram.as_ref().expect("factor built for ADMM"))
            }
        };
        let result = match solved {
            Ok(r) => r,
            Err(e) => {
                warn!("solve at t = {t} failed: {e}");
                traj.aborted = Some(Abort {
                    time: t,
                    reason: AbortReason::Numerical(e.to_string()),
                });
                return Ok(traj);
            }
        };
        if result.status != SolveStatus::Converged {
            warn!("solve at t = {t} ended with status {}", result.status.as_str());
            traj.aborted = Some(Abort {
                time: t,
                reason: match result.status {
                    SolveStatus::Infeasible | SolveStatus::InfeasibleSuspected => AbortReason::Infeasible,
                    other => AbortReason::Solver(other),
                },
            });
            return Ok(traj);
        }

        let applied = (s1.min(end) - s0).min(config.nu);
        debug!(
            "t = {t}: V = {}, {} iterations, applying {applied} samples",
            result.objective, result.iterations
        );
        if let Some(v) = traj.values.last_mut() {
            *v = result.objective;
        }
        for &z in &result.z[..applied] {
            let mut next = problem.a_d.mul_vec(&state)?;
            for (x, b) in next.iter_mut().zip(&problem.b_d) {
                *x += b * z;
            }
            traj.controls.push(z * u_scale);
            state = next;
            traj.states.push(state.clone());
            traj.times.push(traj.times.len() as f64 * h);
            traj.values.push(result.objective);
        }
        traj.steps.push(StepRecord {
            time: t,
            state: problem.xi.clone(),
            value: result.objective,
            iterations: result.iterations,
            status: result.status,
            terminal_residual: result.terminal_residual,
            applied,
        });
        if config.solver == SolverChoice::Admm {
            if let Some(w) = &result.warm {
                warm = Some(admm::shift_warm_start(w, &problem, applied));
            }
        }
    }
    info!(
        "closed loop finished at t = {} after {} solves",
        traj.times.last().copied().unwrap_or(0.0),
        traj.steps.len()
    );
    Ok(traj)
}
