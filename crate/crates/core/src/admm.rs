//! ADMM for the discretized SOAV program.
//!
//! The program is split as `min g(y)` subject to `y = Ψ z` with
//! `Ψ = [I; …; I; σΦ]` (`L + 1` identity blocks). The z-update is a linear
//! solve against the fixed Gram matrix `(L+1) I + σ²ΦᵀΦ`, and the y-update
//! splits into shifted soft-thresholding for the `L` cost blocks, a box
//! projection, and the singleton projection onto `−σζ`.
//!
//! `σ` rescales the terminal rows `Φz = −ζ`, which leaves the feasible set
//! and the optimum unchanged. With `σ = 1` the iteration is the plain
//! splitting; the default picks `σ` from `‖Φ‖_F` because the terminal rows
//! are otherwise tiny next to the identity blocks and convergence stalls.

use crate::error::{invalid, Error, Result};
use crate::numerics::{factor, norm2, Factorization, Matrix};
use crate::plant::DiscreteProblem;

#[derive(Debug, Clone)]
pub struct AdmmParams {
    /// Proximal scale γ (inverse penalty).
    pub gamma: f64,
    pub max_iter: usize,
    pub eps_primal: f64,
    pub eps_dual: f64,
    /// Terminal row scale `σ`; `None` selects [`auto_terminal_scale`].
    pub terminal_scale: Option<f64>,
    pub warm_start: Option<WarmStart>,
}

impl Default for AdmmParams {
    fn default() -> Self {
        AdmmParams {
            gamma: 1.0,
            max_iter: 100_000,
            eps_primal: 1e-6,
            eps_dual: 1e-6,
            terminal_scale: None,
            warm_start: None,
        }
    }
}

impl AdmmParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0) || !self.gamma.is_finite() {
            return invalid(format!("gamma must be positive, got {}", self.gamma));
        }
        if self.max_iter == 0 {
            return invalid("max_iter must be at least 1");
        }
        if !(self.eps_primal > 0.0) || !(self.eps_dual > 0.0) {
            return invalid("ADMM tolerances must be positive");
        }
        if let Some(sigma) = self.terminal_scale {
            if !(sigma > 0.0) || !sigma.is_finite() {
                return invalid(format!("terminal_scale must be positive, got {sigma}"));
            }
        }
        Ok(())
    }

    /// `σ` for `problem`: the explicit override or the automatic choice.
    pub fn resolved_scale(&self, problem: &DiscreteProblem) -> f64 {
        self.terminal_scale.unwrap_or_else(|| auto_terminal_scale(problem))
    }
}

/// `1000·√(L+1) / ‖Φ‖_F`, or 1 when `Φ = 0`.
pub fn auto_terminal_scale(problem: &DiscreteProblem) -> f64 {
    let norm = problem.phi.norm_fro();
    if norm > 0.0 && norm.is_finite() {
        1e3 * ((problem.num_shifts() + 1) as f64).sqrt() / norm
    } else {
        1.0
    }
}

/// Stacked `(y, w)` iterates used to seed a solve.
#[derive(Debug, Clone, PartialEq)]
pub struct WarmStart {
    pub y: Vec<f64>,
    pub w: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Converged,
    MaxIter,
    /// ADMM stalled with a large primal residual; only the LP oracle
    /// certifies infeasibility.
    InfeasibleSuspected,
    /// Certified by the LP oracle's phase 1.
    Infeasible,
}

impl SolveStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SolveStatus::Converged => "converged",
            SolveStatus::MaxIter => "max_iter",
            SolveStatus::InfeasibleSuspected => "infeasible_suspected",
            SolveStatus::Infeasible => "infeasible",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub z: Vec<f64>,
    /// `h Σ p_i ‖z − r_i‖₁`, comparable with the continuous-time cost.
    pub objective: f64,
    /// `‖Φ z + ζ‖₂`.
    pub terminal_residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub status: SolveStatus,
    /// Final `(y, w)` when produced by ADMM.
    pub warm: Option<WarmStart>,
    /// `(primal, dual)` residual per iteration (ADMM only).
    pub residuals: Vec<(f64, f64)>,
}

/// Iterates of one ADMM run.
#[derive(Debug, Clone)]
pub struct AdmmState {
    pub z: Vec<f64>,
    /// `L + 2` blocks: `L + 1` of length ν, then one of length n.
    pub y: Vec<f64>,
    pub w: Vec<f64>,
    pub iteration: usize,
    pub history: Vec<(f64, f64)>,
}

impl AdmmState {
    /// Cold start: `y = Ψ·0` except the terminal block, which is set to
    /// `−ζ`; `w = 0`.
    pub fn cold(problem: &DiscreteProblem) -> Self {
        let layout = Layout::of(problem);
        let mut y = vec![0.0; layout.total()];
        for (yi, zi) in y[layout.terminal()].iter_mut().zip(&problem.zeta) {
            *yi = -zi;
        }
        AdmmState {
            z: vec![0.0; problem.nu],
            w: vec![0.0; layout.total()],
            y,
            iteration: 0,
            history: Vec::new(),
        }
    }

    pub fn from_warm(problem: &DiscreteProblem, warm: &WarmStart) -> Result<Self> {
        let layout = Layout::of(problem);
        if warm.y.len() != layout.total() || warm.w.len() != layout.total() {
            return invalid(format!(
                "warm start has {}/{} entries, problem needs {}",
                warm.y.len(),
                warm.w.len(),
                layout.total()
            ));
        }
        Ok(AdmmState {
            z: vec![0.0; problem.nu],
            y: warm.y.clone(),
            w: warm.w.clone(),
            iteration: 0,
            history: Vec::new(),
        })
    }
}

/// Offsets of the stacked blocks inside `y` and `w`.
#[derive(Debug, Clone, Copy)]
pub struct Layout {
    pub nu: usize,
    pub shifts: usize,
    pub n: usize,
}

impl Layout {
    pub fn of(problem: &DiscreteProblem) -> Self {
        Layout {
            nu: problem.nu,
            shifts: problem.num_shifts(),
            n: problem.state_dim(),
        }
    }

    /// `N₂ = (L+1)ν + n`.
    pub fn total(&self) -> usize {
        (self.shifts + 1) * self.nu + self.n
    }

    /// Block `i` for `i ≤ L` (0-based; block `L` is the box block).
    pub fn block(&self, i: usize) -> std::ops::Range<usize> {
        i * self.nu..(i + 1) * self.nu
    }

    pub fn terminal(&self) -> std::ops::Range<usize> {
        let start = (self.shifts + 1) * self.nu;
        start..start + self.n
    }
}

/// Inverse of the Gram matrix `c I + ΦₛᵀΦₛ` with `c = L + 1` and `Φₛ = σΦ`.
///
/// `ΦₛᵀΦₛ` has rank at most `n`, so the solve goes through the Woodbury
/// identity `(cI + ΦₛᵀΦₛ)⁻¹ = (I − Φₛᵀ(cI + ΦₛΦₛᵀ)⁻¹Φₛ)/c` and only the
/// `n × n` capacitance matrix is factored.
#[derive(Debug, Clone)]
pub struct GramFactor {
    sigma: f64,
    capacitance: Factorization,
    phi: Matrix,
    diag: f64,
    shifts: usize,
    nu: usize,
}

impl GramFactor {
    pub fn new(problem: &DiscreteProblem, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return invalid(format!("terminal scale must be positive, got {sigma}"));
        }
        let diag = (problem.num_shifts() + 1) as f64;
        let phi = problem.phi.scale(sigma);
        let mut cap = phi.matmul(&phi.transpose())?;
        for i in 0..phi.rows() {
            cap[(i, i)] += diag;
        }
        Ok(GramFactor {
            sigma,
            capacitance: factor(&cap)?,
            phi,
            diag,
            shifts: problem.num_shifts(),
            nu: problem.nu,
        })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Scaled terminal block `σΦ`.
    pub fn scaled_phi(&self) -> &Matrix {
        &self.phi
    }

    /// Overwrites `v` with `(cI + ΦᵀΦ)⁻¹ v`.
    pub fn solve_in_place(&self, v: &mut [f64]) -> Result<()> {
        let mut t = self.phi.mul_vec(v)?;
        self.capacitance.solve_in_place(&mut t)?;
        let correction = self.phi.tr_mul_vec(&t)?;
        for (vl, c) in v.iter_mut().zip(correction) {
            *vl = (*vl - c) / self.diag;
        }
        Ok(())
    }

    fn check(&self, problem: &DiscreteProblem) -> Result<()> {
        if self.shifts != problem.num_shifts() || self.nu != problem.nu {
            return invalid("Gram factorization does not match the problem");
        }
        Ok(())
    }
}

/// Exact minimizer of `‖y − Ψ z − w‖²` over `z`.
pub fn z_update(state: &AdmmState, problem: &DiscreteProblem, gram: &GramFactor) -> Result<Vec<f64>> {
    gram.check(problem)?;
    let layout = Layout::of(problem);
    if state.y.len() != layout.total() || state.w.len() != layout.total() {
        return Err(Error::Numerics(crate::numerics::NumericsError::Dimension(format!(
            "iterates have {} entries, layout needs {}",
            state.y.len(),
            layout.total()
        ))));
    }
    let mut v = vec![0.0; layout.nu];
    for i in 0..=layout.shifts {
        let range = layout.block(i);
        for ((vl, y), w) in v.iter_mut().zip(&state.y[range.clone()]).zip(&state.w[range]) {
            *vl += y - w;
        }
    }
    let term: Vec<f64> = state.y[layout.terminal()]
        .iter()
        .zip(&state.w[layout.terminal()])
        .map(|(y, w)| y - w)
        .collect();
    for (vl, t) in v.iter_mut().zip(gram.phi.tr_mul_vec(&term)?) {
        *vl += t;
    }
    gram.solve_in_place(&mut v)?;
    Ok(v)
}

/// Proximity operator of `τ ‖· − r‖₁`: `r + soft(x − r, τ)` entrywise.
pub fn prox_shifted_l1(x: &[f64], r: f64, tau: f64) -> Vec<f64> {
    x.iter().map(|&v| shifted_soft(v, r, tau)).collect()
}

#[inline]
fn shifted_soft(v: f64, r: f64, tau: f64) -> f64 {
    let d = v - r;
    r + d.signum() * (d.abs() - tau).max(0.0)
}

/// Projection onto the unit ∞-norm ball.
pub fn project_box(x: &[f64]) -> Vec<f64> {
    x.iter().map(|v| v.clamp(-1.0, 1.0)).collect()
}

/// Projection onto the singleton `{−ζ}`.
pub fn project_terminal(_x: &[f64], zeta: &[f64]) -> Vec<f64> {
    zeta.iter().map(|z| -z).collect()
}

/// Solves with a freshly built Gram factorization.
pub fn solve(problem: &DiscreteProblem, params: &AdmmParams) -> Result<SolveResult> {
    params.validate()?;
    let gram = GramFactor::new(problem, params.resolved_scale(problem))?;
    solve_with(problem, params, &gram)
}

/// Runs ADMM from a cold or warm start until both residuals are below
/// tolerance or `max_iter` is reached.
///
/// Stopping rule: `‖Ψz − y‖ ≤ ε_p √N₂` and `‖γ⁻¹ Ψᵀ(y⁺ − y)‖ ≤ ε_d √N₁`,
/// with `z` inside the box to `ε_p` and `‖Φz + ζ‖ ≤ n ε_p`.
/// The terminal scale is the one `gram` was built with.
pub fn solve_with(
    problem: &DiscreteProblem,
    params: &AdmmParams,
    gram: &GramFactor,
) -> Result<SolveResult> {
    params.validate()?;
    gram.check(problem)?;
    let layout = Layout::of(problem);
    let mut state = match &params.warm_start {
        Some(warm) => AdmmState::from_warm(problem, warm)?,
        None => AdmmState::cold(problem),
    };
    let n1 = layout.nu as f64;
    let n2 = layout.total() as f64;
    let primal_tol = params.eps_primal * n2.sqrt();
    let dual_tol = params.eps_dual * n1.sqrt();
    let gamma = params.gamma;
    let neg_zeta: Vec<f64> = problem.zeta.iter().map(|z| -z * gram.sigma).collect();
    state.y[layout.terminal()].copy_from_slice(&neg_zeta);

    let mut y_old = vec![0.0; layout.total()];
    let mut converged = false;
    for iter in 1..=params.max_iter {
        let z = z_update(&state, problem, gram)?;
        if z.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence { iteration: iter });
        }
        let phi_z = gram.phi.mul_vec(&z)?;
        y_old.copy_from_slice(&state.y);

        let mut primal_sq = 0.0;
        // cost blocks
        for i in 0..layout.shifts {
            let (r, tau) = (problem.r[i], gamma * problem.p[i]);
            let range = layout.block(i);
            for ((y, w), &zl) in state.y[range.clone()]
                .iter_mut()
                .zip(&mut state.w[range])
                .zip(&z)
            {
                let ynew = shifted_soft(zl + *w, r, tau);
                let diff = zl - ynew;
                *w += diff;
                *y = ynew;
                primal_sq += diff * diff;
            }
        }
        // box block
        let range = layout.block(layout.shifts);
        for ((y, w), &zl) in state.y[range.clone()]
            .iter_mut()
            .zip(&mut state.w[range])
            .zip(&z)
        {
            let ynew = (zl + *w).clamp(-1.0, 1.0);
            let diff = zl - ynew;
            *w += diff;
            *y = ynew;
            primal_sq += diff * diff;
        }
        // terminal block
        let range = layout.terminal();
        for (((y, w), &pz), &target) in state.y[range.clone()]
            .iter_mut()
            .zip(&mut state.w[range])
            .zip(&phi_z)
            .zip(&neg_zeta)
        {
            let diff = pz - target;
            *w += diff;
            *y = target;
            primal_sq += diff * diff;
        }

        // Ψᵀ(y⁺ − y)
        let mut dual = vec![0.0; layout.nu];
        for i in 0..=layout.shifts {
            let range = layout.block(i);
            for ((d, yn), yo) in dual.iter_mut().zip(&state.y[range.clone()]).zip(&y_old[range]) {
                *d += yn - yo;
            }
        }
        let range = layout.terminal();
        let dy_term: Vec<f64> = state.y[range.clone()]
            .iter()
            .zip(&y_old[range])
            .map(|(a, b)| a - b)
            .collect();
        for (d, t) in dual.iter_mut().zip(gram.phi.tr_mul_vec(&dy_term)?) {
            *d += t;
        }
        let primal = primal_sq.sqrt();
        let dual = norm2(&dual) / gamma;
        if !primal.is_finite() || !dual.is_finite() {
            return Err(Error::Divergence { iteration: iter });
        }
        let accepted = primal <= primal_tol && dual <= dual_tol && {
            // the reported z must itself meet the box and terminal guarantees
            let in_box = z.iter().all(|v| v.abs() <= 1.0 + params.eps_primal);
            let miss: f64 = phi_z.iter().zip(&neg_zeta).map(|(a, b)| (a - b).powi(2)).sum();
            in_box && miss.sqrt() / gram.sigma <= layout.n as f64 * params.eps_primal
        };
        state.z = z;
        state.iteration = iter;
        state.history.push((primal, dual));
        if accepted {
            converged = true;
            break;
        }
    }

    let status = if converged {
        SolveStatus::Converged
    } else if plateaued(&state.history, 1e3 * primal_tol) {
        SolveStatus::InfeasibleSuspected
    } else {
        SolveStatus::MaxIter
    };
    let objective = problem.h * problem.program_objective(&state.z);
    let terminal_residual = norm2(&problem.terminal_state(&state.z)?);
    Ok(SolveResult {
        objective,
        terminal_residual,
        iterations: state.iteration,
        converged,
        status,
        warm: Some(WarmStart {
            y: state.y,
            w: state.w,
        }),
        residuals: state.history,
        z: state.z,
    })
}

/// Fewest iterations in the final quarter before a plateau is judged.
const PLATEAU_WINDOW: usize = 50;

/// Primal residual stayed above `threshold` over the final quarter of the
/// run without halving.
fn plateaued(history: &[(f64, f64)], threshold: f64) -> bool {
    if history.len() / 4 < PLATEAU_WINDOW {
        return false;
    }
    let tail = &history[history.len() - history.len() / 4..];
    let first = tail[0].0;
    let min = tail.iter().map(|h| h.0).fold(f64::INFINITY, f64::min);
    min > threshold && min > 0.5 * first
}

/// Dense `Ψ` (`N₂ × ν`) for terminal scale `sigma`, for tests and
/// diagnostics.
pub fn stacked_operator(problem: &DiscreteProblem, sigma: f64) -> Matrix {
    let layout = Layout::of(problem);
    let mut psi = Matrix::zeros(layout.total(), layout.nu);
    for i in 0..=layout.shifts {
        for l in 0..layout.nu {
            psi[(i * layout.nu + l, l)] = 1.0;
        }
    }
    let start = layout.terminal().start;
    for k in 0..layout.n {
        for l in 0..layout.nu {
            psi[(start + k, l)] = sigma * problem.phi[(k, l)];
        }
    }
    psi
}

/// Shifts `(y, w)` forward by `applied` samples for the next receding-
/// horizon solve, repeating each block's last entry. The terminal `y`
/// block is set to `−ζ` of the next problem; the solver rescales it.
pub fn shift_warm_start(warm: &WarmStart, next: &DiscreteProblem, applied: usize) -> WarmStart {
    let layout = Layout::of(next);
    let shift = |v: &[f64]| -> Vec<f64> {
        let mut out = Vec::with_capacity(v.len());
        for i in 0..=layout.shifts {
            let block = &v[layout.block(i)];
            let last = *block.last().unwrap_or(&0.0);
            out.extend(block.iter().skip(applied).copied());
            out.extend(std::iter::repeat_n(last, applied.min(layout.nu)));
        }
        out.extend_from_slice(&v[layout.terminal()]);
        out
    };
    let mut y = shift(&warm.y);
    for (yi, z) in y[layout.terminal()].iter_mut().zip(&next.zeta) {
        *yi = -z;
    }
    WarmStart {
        y,
        w: shift(&warm.w),
    }
}
