//! Reference LP route for the discretized SOAV program.
//!
//! Two linear-program encodings are provided:
//!
//! * [`reformulate`] is the textbook epigraph form: variables `(z, s_1..s_L)`
//!   with `s_i ≥ |z − r_i|` written as equalities with surplus slacks.
//! * [`segment_form`] writes each sample as `z_l = −1 + Σ_k d_{l,k}` over the
//!   segments between consecutive breakpoints. The per-sample cost is convex
//!   piecewise linear, so segment slopes are strictly increasing and the LP
//!   fills segments in order. Only the `n` terminal rows remain, which keeps
//!   the tableau small at realistic grid sizes.
//!
//! Both feed the same bounded-variable dense two-phase simplex.

use log::debug;

use crate::admm::{SolveResult, SolveStatus};
use crate::error::{invalid, Error, Result};
use crate::numerics::{norm2, Lu, Matrix};
use crate::plant::DiscreteProblem;

/// `min cᵀx` subject to `A x = b`, `lower ≤ x ≤ upper`. Infinite bounds
/// are allowed.
#[derive(Debug, Clone)]
pub struct StandardLp {
    pub c: Vec<f64>,
    pub a_eq: Matrix,
    pub b_eq: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl StandardLp {
    pub fn num_vars(&self) -> usize {
        self.c.len()
    }

    pub fn num_rows(&self) -> usize {
        self.b_eq.len()
    }

    fn validate(&self) -> Result<()> {
        let nv = self.c.len();
        if self.a_eq.cols() != nv || self.a_eq.rows() != self.b_eq.len() {
            return invalid(format!(
                "LP shape mismatch: A is {}x{}, c has {nv}, b has {}",
                self.a_eq.rows(),
                self.a_eq.cols(),
                self.b_eq.len()
            ));
        }
        if self.lower.len() != nv || self.upper.len() != nv {
            return invalid("LP bound vectors must match the variable count");
        }
        if self.c.iter().chain(&self.b_eq).any(|v| !v.is_finite()) || !self.a_eq.is_finite() {
            return invalid("LP data must be finite");
        }
        if self.lower.contains(&f64::INFINITY)
            || self.upper.contains(&f64::NEG_INFINITY)
            || self.lower.iter().chain(&self.upper).any(|v| v.is_nan())
        {
            return invalid("LP bounds must not be NaN or point the wrong way");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone)]
pub struct LpResult {
    pub status: LpStatus,
    pub value: f64,
    pub x: Vec<f64>,
    pub iterations: usize,
    /// Objective after every phase-2 iteration.
    pub phase2_objectives: Vec<f64>,
}

/// Epigraph encoding: variables `z` (ν, boxed), `s_i` (Lν, ≥ 0), and two
/// surplus slacks per absolute-value inequality (2Lν, ≥ 0). Rows are
/// `s_il − z_l − e⁺ = −r_i`, `s_il + z_l − e⁻ = r_i`, then `Φ z = −ζ`.
pub fn reformulate(problem: &DiscreteProblem) -> StandardLp {
    let nu = problem.nu;
    let l = problem.num_shifts();
    let n = problem.state_dim();
    let structural = nu * (1 + l);
    let nv = structural + 2 * l * nu;
    let rows = 2 * l * nu + n;
    let mut a = Matrix::zeros(rows, nv);
    let mut b = vec![0.0; rows];
    let mut c = vec![0.0; nv];
    let mut lower = vec![0.0; nv];
    let mut upper = vec![f64::INFINITY; nv];
    for k in 0..nu {
        lower[k] = -1.0;
        upper[k] = 1.0;
    }
    let s_idx = |i: usize, k: usize| nu + i * nu + k;
    for i in 0..l {
        for k in 0..nu {
            c[s_idx(i, k)] = problem.p[i];
            let row = 2 * (i * nu + k);
            let slack = structural + row;
            a[(row, s_idx(i, k))] = 1.0;
            a[(row, k)] = -1.0;
            a[(row, slack)] = -1.0;
            b[row] = -problem.r[i];
            a[(row + 1, s_idx(i, k))] = 1.0;
            a[(row + 1, k)] = 1.0;
            a[(row + 1, slack + 1)] = -1.0;
            b[row + 1] = problem.r[i];
        }
    }
    for j in 0..n {
        let row = 2 * l * nu + j;
        for k in 0..nu {
            a[(row, k)] = problem.phi[(j, k)];
        }
        b[row] = -problem.zeta[j];
    }
    StandardLp {
        c,
        a_eq: a,
        b_eq: b,
        lower,
        upper,
    }
}

/// Segment encoding of the same program together with what is needed to
/// map a solution back to `z`.
#[derive(Debug, Clone)]
pub struct SegmentLp {
    pub lp: StandardLp,
    /// Segment lengths (one set per sample, shared by all samples).
    pub lengths: Vec<f64>,
    /// Per-sample cost at `z_l = −1`.
    pub base_cost: f64,
    knots: Vec<f64>,
    nu: usize,
}

/// Fill closer than this to a segment end is read as the end itself.
const FILL_TOL: f64 = 1e-11;

impl SegmentLp {
    pub fn segments(&self) -> usize {
        self.lengths.len()
    }

    /// Recovers `z` from the segment fills. Fills are read in order from
    /// `−1`, so a sample resting on a breakpoint reproduces it exactly.
    pub fn control(&self, x: &[f64]) -> Vec<f64> {
        let k = self.segments();
        (0..self.nu)
            .map(|l| {
                let fills = &x[l * k..(l + 1) * k];
                let summed = -1.0 + fills.iter().sum::<f64>();
                let open = fills.iter().zip(&self.lengths).position(|(d, len)| *d < len - FILL_TOL);
                let ordered = match open {
                    None => 1.0,
                    Some(s) if fills[s] <= FILL_TOL => self.knots[s],
                    Some(s) => self.knots[s] + fills[s],
                };
                if (ordered - summed).abs() <= 1e-9 {
                    ordered
                } else {
                    summed
                }
            })
            .collect()
    }

    /// Unscaled program objective from an LP objective value.
    pub fn program_value(&self, lp_value: f64) -> f64 {
        lp_value + self.base_cost * self.nu as f64
    }
}

pub fn segment_form(problem: &DiscreteProblem) -> SegmentLp {
    let mut points: Vec<(f64, f64)> = Vec::new();
    for (&r, &p) in problem.r.iter().zip(&problem.p) {
        let r = if r == 0.0 { 0.0 } else { r };
        match points.iter_mut().find(|(x, _)| *x == r) {
            Some(pt) => pt.1 += p,
            None => points.push((r, p)),
        }
    }
    points.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite breakpoints"));
    // breakpoints inside the box, with -1 and 1 always present
    let mut knots: Vec<f64> = vec![-1.0];
    knots.extend(points.iter().map(|pt| pt.0).filter(|&x| x > -1.0 && x < 1.0));
    knots.push(1.0);
    let lengths: Vec<f64> = knots.windows(2).map(|w| w[1] - w[0]).collect();
    // slope on (knots[k], knots[k+1]) = Σ_{r_i ≤ knots[k]} p_i − Σ_{r_i > knots[k]} p_i
    let slopes: Vec<f64> = knots[..knots.len() - 1]
        .iter()
        .map(|&x| {
            points
                .iter()
                .map(|&(r, p)| if r <= x { p } else { -p })
                .sum()
        })
        .collect();
    let base_cost: f64 = problem.r.iter().zip(&problem.p).map(|(r, p)| p * (1.0 + r).abs()).sum();

    let nu = problem.nu;
    let k = lengths.len();
    let n = problem.state_dim();
    let nv = nu * k;
    let mut a = Matrix::zeros(n, nv);
    let mut b = vec![0.0; n];
    for j in 0..n {
        let mut row_sum = 0.0;
        for l in 0..nu {
            let phi = problem.phi[(j, l)];
            row_sum += phi;
            for s in 0..k {
                a[(j, l * k + s)] = phi;
            }
        }
        // Φ(−1 + Σd) = −ζ
        b[j] = -problem.zeta[j] + row_sum;
    }
    let mut c = Vec::with_capacity(nv);
    let mut upper = Vec::with_capacity(nv);
    for _ in 0..nu {
        c.extend_from_slice(&slopes);
        upper.extend_from_slice(&lengths);
    }
    SegmentLp {
        lp: StandardLp {
            c,
            a_eq: a,
            b_eq: b,
            lower: vec![0.0; nv],
            upper,
        },
        lengths,
        base_cost,
        knots,
        nu,
    }
}

/// Solves the discretized program exactly through [`segment_form`].
pub fn solve_reference(problem: &DiscreteProblem) -> Result<SolveResult> {
    let seg = segment_form(problem);
    let res = simplex(&seg.lp)?;
    match res.status {
        LpStatus::Optimal => {
            let z: Vec<f64> = seg.control(&res.x).into_iter().map(|v| v.clamp(-1.0, 1.0)).collect();
            let objective = problem.h * problem.program_objective(&z);
            let terminal_residual = norm2(&problem.terminal_state(&z)?);
            Ok(SolveResult {
                z,
                objective,
                terminal_residual,
                iterations: res.iterations,
                converged: true,
                status: SolveStatus::Converged,
                warm: None,
                residuals: Vec::new(),
            })
        }
        LpStatus::Infeasible => Ok(SolveResult {
            z: vec![0.0; problem.nu],
            objective: f64::NAN,
            terminal_residual: f64::NAN,
            iterations: res.iterations,
            converged: false,
            status: SolveStatus::Infeasible,
            warm: None,
            residuals: Vec::new(),
        }),
        LpStatus::Unbounded => Err(Error::Validation(
            "SOAV program reported unbounded; the box makes this impossible".into(),
        )),
    }
}

// ---------------------------------------------------------------------------
// Simplex

const PIVOT_TOL: f64 = 1e-9;
const COST_TOL: f64 = 1e-10;
const PHASE1_TOL: f64 = 1e-8;
const DEGENERATE_GUARD: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq)]
enum VarStatus {
    Basic,
    AtLower,
    AtUpper,
}

/// How an original variable maps onto the internal nonnegative ones.
#[derive(Debug, Clone, Copy)]
enum Mapping {
    /// `x = offset + x'`
    Shift { idx: usize, offset: f64 },
    /// `x = offset − x'`
    Flip { idx: usize, offset: f64 },
    /// `x = x'₊ − x'₋`
    Split { pos: usize, neg: usize },
}

struct Tableau {
    m: usize,
    ncols: usize,
    /// `B⁻¹A`, row-major `m × ncols`.
    t: Vec<f64>,
    beta: Vec<f64>,
    basis: Vec<usize>,
    status: Vec<VarStatus>,
    upper: Vec<f64>,
    /// Columns allowed to enter the basis.
    enterable: Vec<bool>,
    /// `±1` per row, chosen so the initial right-hand side is nonnegative.
    row_sign: Vec<f64>,
    iterations: usize,
    budget: usize,
}

enum PhaseOutcome {
    Optimal,
    Unbounded,
}

impl Tableau {
    fn value_of(&self, j: usize) -> f64 {
        match self.status[j] {
            VarStatus::AtLower => 0.0,
            VarStatus::AtUpper => self.upper[j],
            VarStatus::Basic => {
                let r = self.basis.iter().position(|&b| b == j).expect("basic var in basis");
                self.beta[r]
            }
        }
    }

    fn reduced_costs(&self, cost: &[f64]) -> Vec<f64> {
        let mut d = cost.to_vec();
        for (r, &bj) in self.basis.iter().enumerate() {
            let cb = cost[bj];
            if cb == 0.0 {
                continue;
            }
            let row = &self.t[r * self.ncols..(r + 1) * self.ncols];
            for (dj, a) in d.iter_mut().zip(row) {
                *dj -= cb * a;
            }
        }
        d
    }

    fn objective(&self, cost: &[f64]) -> f64 {
        let mut v: f64 = self.basis.iter().zip(&self.beta).map(|(&j, b)| cost[j] * b).sum();
        for j in 0..self.ncols {
            if self.status[j] == VarStatus::AtUpper {
                v += cost[j] * self.upper[j];
            }
        }
        v
    }

    fn run_phase(&mut self, cost: &[f64], trace: Option<&mut Vec<f64>>) -> Result<PhaseOutcome> {
        let mut trace = trace;
        let mut d = self.reduced_costs(cost);
        let mut degenerate_run = 0usize;
        let mut bland = false;
        loop {
            if self.iterations >= self.budget {
                return Err(Error::Cycling { budget: self.budget });
            }
            // periodic refresh keeps the reduced costs from drifting
            if self.iterations % 200 == 199 {
                d = self.reduced_costs(cost);
            }
            let mut entering: Option<(usize, f64)> = None;
            for j in 0..self.ncols {
                if !self.enterable[j] || self.status[j] == VarStatus::Basic {
                    continue;
                }
                let improving = match self.status[j] {
                    VarStatus::AtLower => d[j] < -COST_TOL,
                    VarStatus::AtUpper => d[j] > COST_TOL && self.upper[j] > 0.0,
                    VarStatus::Basic => false,
                };
                if !improving {
                    continue;
                }
                if bland {
                    entering = Some((j, d[j]));
                    break;
                }
                if entering.is_none_or(|(_, best)| d[j].abs() > best.abs()) {
                    entering = Some((j, d[j]));
                }
            }
            let Some((q, dq)) = entering else {
                return Ok(PhaseOutcome::Optimal);
            };
            let dir = if self.status[q] == VarStatus::AtLower { 1.0 } else { -1.0 };

            // ratio test
            let mut step = self.upper[q];
            let mut leave: Option<(usize, bool)> = None; // (row, hits upper)
            let mut leave_alpha = 0.0f64;
            for r in 0..self.m {
                let alpha = self.t[r * self.ncols + q] * dir;
                if alpha.abs() <= PIVOT_TOL {
                    continue;
                }
                let bj = self.basis[r];
                let (limit, hits_upper) = if alpha > 0.0 {
                    (self.beta[r].max(0.0) / alpha, false)
                } else if self.upper[bj].is_finite() {
                    ((self.upper[bj] - self.beta[r]).max(0.0) / -alpha, true)
                } else {
                    continue;
                };
                let better = match leave {
                    None => limit < step,
                    Some((lr, _)) => {
                        limit < step - 1e-12
                            || (limit <= step + 1e-12
                                && if bland {
                                    bj < self.basis[lr]
                                } else {
                                    alpha.abs() > leave_alpha.abs()
                                })
                    }
                };
                if better {
                    step = step.min(limit);
                    leave = Some((r, hits_upper));
                    leave_alpha = alpha;
                }
            }
            if !step.is_finite() {
                return Ok(PhaseOutcome::Unbounded);
            }
            self.iterations += 1;
            if step <= 1e-12 {
                degenerate_run += 1;
                if degenerate_run > DEGENERATE_GUARD && !bland {
                    debug!("simplex: degenerate run, switching to Bland's rule");
                    bland = true;
                }
            } else {
                degenerate_run = 0;
            }

            for r in 0..self.m {
                let alpha = self.t[r * self.ncols + q];
                if alpha != 0.0 {
                    self.beta[r] -= dir * step * alpha;
                }
            }
            match leave {
                None => {
                    // bound flip of the entering variable
                    self.status[q] = if dir > 0.0 {
                        VarStatus::AtUpper
                    } else {
                        VarStatus::AtLower
                    };
                }
                Some((r, hits_upper)) => {
                    let old = self.basis[r];
                    let entering_value = if dir > 0.0 { step } else { self.upper[q] - step };
                    self.status[old] = if hits_upper {
                        VarStatus::AtUpper
                    } else {
                        VarStatus::AtLower
                    };
                    self.pivot(r, q);
                    self.beta[r] = entering_value;
                    self.status[q] = VarStatus::Basic;
                    let factor = dq;
                    let row = &self.t[r * self.ncols..(r + 1) * self.ncols];
                    for (dj, a) in d.iter_mut().zip(row) {
                        *dj -= factor * a;
                    }
                    d[q] = 0.0;
                }
            }
            for r in 0..self.m {
                let bj = self.basis[r];
                if self.beta[r] < 0.0 && self.beta[r] > -1e-11 {
                    self.beta[r] = 0.0;
                }
                if self.beta[r] > self.upper[bj] && self.beta[r] < self.upper[bj] + 1e-11 {
                    self.beta[r] = self.upper[bj];
                }
            }
            if let Some(tr) = trace.as_deref_mut() {
                tr.push(self.objective(cost));
            }
        }
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let nc = self.ncols;
        let piv = self.t[r * nc + q];
        for v in &mut self.t[r * nc..(r + 1) * nc] {
            *v /= piv;
        }
        let pivot_row: Vec<f64> = self.t[r * nc..(r + 1) * nc].to_vec();
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.t[i * nc + q];
            if f == 0.0 {
                continue;
            }
            for (v, p) in self.t[i * nc..(i + 1) * nc].iter_mut().zip(&pivot_row) {
                *v -= f * p;
            }
            self.t[i * nc + q] = 0.0;
        }
        self.basis[r] = q;
    }
}

/// Dense bounded-variable two-phase simplex.
///
/// Pricing is Dantzig's rule; after a run of degenerate pivots the phase
/// falls back to Bland's smallest-index rule. Phase 1 minimizes the sum of
/// artificials and declares infeasibility above `1e-8·max(1, ‖b‖∞)`.
pub fn simplex(lp: &StandardLp) -> Result<LpResult> {
    lp.validate()?;
    let m = lp.num_rows();
    let nv = lp.num_vars();

    // map original variables to internal x' ≥ 0 with optional upper bound
    let mut maps = Vec::with_capacity(nv);
    let mut cols: Vec<(Vec<f64>, f64, f64)> = Vec::new(); // (column, cost, upper)
    let mut b = lp.b_eq.clone();
    let mut const_obj = 0.0;
    for j in 0..nv {
        let (lo, hi) = (lp.lower[j], lp.upper[j]);
        let col = lp.a_eq.column(j);
        if lo > hi {
            return Ok(LpResult {
                status: LpStatus::Infeasible,
                value: f64::NAN,
                x: vec![f64::NAN; nv],
                iterations: 0,
                phase2_objectives: Vec::new(),
            });
        }
        if lo.is_finite() {
            for (bi, a) in b.iter_mut().zip(&col) {
                *bi -= a * lo;
            }
            const_obj += lp.c[j] * lo;
            maps.push(Mapping::Shift { idx: cols.len(), offset: lo });
            cols.push((col, lp.c[j], hi - lo));
        } else if hi.is_finite() {
            for (bi, a) in b.iter_mut().zip(&col) {
                *bi -= a * hi;
            }
            const_obj += lp.c[j] * hi;
            maps.push(Mapping::Flip { idx: cols.len(), offset: hi });
            cols.push((col.iter().map(|v| -v).collect(), -lp.c[j], f64::INFINITY));
        } else {
            let neg: Vec<f64> = col.iter().map(|v| -v).collect();
            maps.push(Mapping::Split { pos: cols.len(), neg: cols.len() + 1 });
            cols.push((col, lp.c[j], f64::INFINITY));
            cols.push((neg, -lp.c[j], f64::INFINITY));
        }
    }
    let ns = cols.len();
    let ncols = ns + m;
    let mut t = vec![0.0; m * ncols];
    let mut status = vec![VarStatus::AtLower; ncols];
    // crash start: bounded columns with negative cost begin at their upper bound
    let mut residual = b.clone();
    for (j, col) in cols.iter().enumerate() {
        if col.1 < 0.0 && col.2.is_finite() {
            status[j] = VarStatus::AtUpper;
            for (r, a) in residual.iter_mut().zip(&col.0) {
                *r -= a * col.2;
            }
        }
    }
    let row_sign: Vec<f64> = residual.iter().map(|&v| if v < 0.0 { -1.0 } else { 1.0 }).collect();
    for i in 0..m {
        let sign = row_sign[i];
        for (j, col) in cols.iter().enumerate() {
            t[i * ncols + j] = sign * col.0[i];
        }
        t[i * ncols + ns + i] = 1.0;
        b[i] *= sign;
        residual[i] *= sign;
    }
    let mut upper: Vec<f64> = cols.iter().map(|c| c.2).collect();
    upper.extend(std::iter::repeat_n(f64::INFINITY, m));
    for i in 0..m {
        status[ns + i] = VarStatus::Basic;
    }
    let mut tab = Tableau {
        m,
        ncols,
        t,
        beta: residual,
        basis: (ns..ns + m).collect(),
        status,
        upper,
        enterable: (0..ncols).map(|j| j < ns).collect(),
        row_sign,
        iterations: 0,
        budget: 50 * (m + ncols) + 10_000,
    };

    // phase 1
    let mut cost1 = vec![0.0; ncols];
    for c in &mut cost1[ns..] {
        *c = 1.0;
    }
    tab.run_phase(&cost1, None)?;
    let infeas = tab.objective(&cost1);
    let scale = b.iter().fold(1.0f64, |s, v| s.max(v.abs()));
    if infeas > PHASE1_TOL * scale {
        debug!("simplex: phase 1 residual {infeas:e}, infeasible");
        return Ok(LpResult {
            status: LpStatus::Infeasible,
            value: f64::NAN,
            x: vec![f64::NAN; nv],
            iterations: tab.iterations,
            phase2_objectives: Vec::new(),
        });
    }
    // artificials are pinned at zero from here on
    for j in ns..ncols {
        tab.upper[j] = 0.0;
        if tab.status[j] == VarStatus::AtUpper {
            tab.status[j] = VarStatus::AtLower;
        }
    }

    // phase 2
    let mut cost2: Vec<f64> = cols.iter().map(|c| c.1).collect();
    cost2.extend(std::iter::repeat_n(0.0, m));
    let mut trace = Vec::new();
    let outcome = tab.run_phase(&cost2, Some(&mut trace))?;
    if let PhaseOutcome::Unbounded = outcome {
        return Ok(LpResult {
            status: LpStatus::Unbounded,
            value: f64::NEG_INFINITY,
            x: vec![f64::NAN; nv],
            iterations: tab.iterations,
            phase2_objectives: trace,
        });
    }

    let mut internal: Vec<f64> = (0..ns).map(|j| tab.value_of(j)).collect();
    refine_basic_values(&tab, &cols, &b, &mut internal);
    let x: Vec<f64> = maps
        .iter()
        .map(|m| match *m {
            Mapping::Shift { idx, offset } => offset + internal[idx],
            Mapping::Flip { idx, offset } => offset - internal[idx],
            Mapping::Split { pos, neg } => internal[pos] - internal[neg],
        })
        .collect();
    let value = lp.c.iter().zip(&x).map(|(c, x)| c * x).sum::<f64>();
    debug!(
        "simplex: optimal after {} iterations, value {value} (shift {const_obj})",
        tab.iterations
    );
    Ok(LpResult {
        status: LpStatus::Optimal,
        value,
        x,
        iterations: tab.iterations,
        phase2_objectives: trace,
    })
}

/// Recomputes basic values from the original columns with a fresh LU of
/// the basis, which removes drift accumulated by tableau updates.
fn refine_basic_values(tab: &Tableau, cols: &[(Vec<f64>, f64, f64)], b: &[f64], x: &mut [f64]) {
    let m = tab.m;
    let ns = cols.len();
    if m == 0 || m > 1000 || tab.basis.iter().any(|&j| j >= ns) {
        return;
    }
    let mut rhs = b.to_vec();
    for (j, col) in cols.iter().enumerate() {
        if tab.status[j] == VarStatus::Basic || x[j] == 0.0 {
            continue;
        }
        for i in 0..m {
            rhs[i] -= tab.row_sign[i] * col.0[i] * x[j];
        }
    }
    let mut basis_mat = Matrix::zeros(m, m);
    for (r, &j) in tab.basis.iter().enumerate() {
        for i in 0..m {
            basis_mat[(i, r)] = tab.row_sign[i] * cols[j].0[i];
        }
    }
    let Ok(lu) = Lu::factor(&basis_mat) else {
        return;
    };
    let Ok(xb) = lu.solve(&rhs) else {
        return;
    };
    for (r, &j) in tab.basis.iter().enumerate() {
        let ub = cols[j].2;
        x[j] = xb[r].clamp(0.0, ub);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plant::{discretize, Alphabet, Plant};

    fn lp(c: Vec<f64>, rows: &[&[f64]], b: Vec<f64>, lower: Vec<f64>, upper: Vec<f64>) -> StandardLp {
        let a = if rows.is_empty() {
            Matrix::zeros(0, c.len())
        } else {
            Matrix::from_rows(rows).unwrap()
        };
        StandardLp {
            c,
            a_eq: a,
            b_eq: b,
            lower,
            upper,
        }
    }

    #[test]
    fn textbook_bounded() {
        // min −x, 0 ≤ x ≤ 1
        let res = simplex(&lp(vec![-1.0], &[], vec![], vec![0.0], vec![1.0])).unwrap();
        assert_eq!(res.status, LpStatus::Optimal);
        assert!((res.x[0] - 1.0).abs() < 1e-12 && (res.value + 1.0).abs() < 1e-12);
        // same with the bound written as a row: x + s = 1
        let res = simplex(&lp(
            vec![-1.0, 0.0],
            &[&[1.0, 1.0]],
            vec![1.0],
            vec![0.0, 0.0],
            vec![f64::INFINITY; 2],
        ))
        .unwrap();
        assert!((res.x[0] - 1.0).abs() < 1e-12 && (res.value + 1.0).abs() < 1e-12);
    }

    #[test]
    fn contradictory_constraints_are_infeasible() {
        let res = simplex(&lp(vec![1.0], &[], vec![], vec![2.0], vec![1.0])).unwrap();
        assert_eq!(res.status, LpStatus::Infeasible);
        // x − s1 = 2 (x ≥ 2), x + s2 = 1 (x ≤ 1)
        let res = simplex(&lp(
            vec![1.0, 0.0, 0.0],
            &[&[1.0, -1.0, 0.0], &[1.0, 0.0, 1.0]],
            vec![2.0, 1.0],
            vec![0.0; 3],
            vec![f64::INFINITY; 3],
        ))
        .unwrap();
        assert_eq!(res.status, LpStatus::Infeasible);
    }

    #[test]
    fn unbounded_detected() {
        let res = simplex(&lp(
            vec![-1.0, 0.0],
            &[&[1.0, -1.0]],
            vec![0.0],
            vec![0.0, 0.0],
            vec![f64::INFINITY; 2],
        ))
        .unwrap();
        assert_eq!(res.status, LpStatus::Unbounded);
    }

    #[test]
    fn free_and_upper_only_variables() {
        // min x − y  s.t. x + y = 1, x free, y ≤ 3  → y = 3, x = −2
        let res = simplex(&lp(
            vec![1.0, -1.0],
            &[&[1.0, 1.0]],
            vec![1.0],
            vec![f64::NEG_INFINITY, f64::NEG_INFINITY],
            vec![f64::INFINITY, 3.0],
        ))
        .unwrap();
        assert_eq!(res.status, LpStatus::Optimal);
        assert!((res.x[0] + 2.0).abs() < 1e-12 && (res.x[1] - 3.0).abs() < 1e-12);
    }

    fn tiny_problem(levels: Vec<f64>, weights: Vec<f64>) -> DiscreteProblem {
        let plant = Plant::new(Matrix::zeros(1, 1), vec![0.0]).unwrap();
        let alpha = Alphabet::new(levels, weights).unwrap();
        discretize(&plant, &alpha, 1.0, 1, &[0.0]).unwrap()
    }

    #[test]
    fn one_dimensional_hand_minimum() {
        // r = (−1, 1), p = (0.5, 0.5): 0.5(|z+1| + |z−1|) = 1 on [−1, 1]
        let prob = tiny_problem(vec![1.0, 2.0], vec![0.5, 0.5]);
        let mut prob = prob;
        prob.r = vec![-1.0, 1.0];
        prob.p = vec![0.5, 0.5];
        let res = simplex(&reformulate(&prob)).unwrap();
        assert_eq!(res.status, LpStatus::Optimal);
        assert!((res.value - 1.0).abs() < 1e-12);
        let seg = segment_form(&prob);
        let res = simplex(&seg.lp).unwrap();
        assert!((seg.program_value(res.value) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn epigraph_counts() {
        let plant = Plant::new(
            Matrix::from_rows(&[[0.0, 1.0], [-2.0, -1.0]]).unwrap(),
            vec![0.0, 1.0],
        )
        .unwrap();
        let alpha = Alphabet::new(vec![0.0, 0.2, 0.6, 1.0], vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let prob = discretize(&plant, &alpha, 5.0, 7, &[1.0, 1.0]).unwrap();
        let lp = reformulate(&prob);
        let (nu, l, n) = (7, 8, 2);
        assert_eq!(lp.num_vars() - 2 * l * nu, nu * (1 + l));
        assert_eq!(lp.num_rows(), 2 * l * nu + n);
    }

    #[test]
    fn zero_problem_value() {
        let alpha = Alphabet::new(vec![0.0, 0.2, 0.6, 1.0], vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let plant = Plant::new(Matrix::zeros(2, 2), vec![0.0, 0.0]).unwrap();
        let prob = discretize(&plant, &alpha, 5.0, 5, &[0.0, 0.0]).unwrap();
        assert_eq!(prob.phi, Matrix::zeros(2, 5));
        let want: f64 = prob.r.iter().zip(&prob.p).map(|(r, p)| p * r.abs()).sum::<f64>() * 5.0;
        let res = simplex(&reformulate(&prob)).unwrap();
        assert!((res.value - want).abs() < 1e-10);
        assert!(res.x[..5].iter().all(|z| z.abs() < 1e-10));
        let sol = solve_reference(&prob).unwrap();
        assert!(sol.z.iter().all(|z| z.abs() < 1e-12));
        assert!((sol.objective - prob.h * want).abs() < 1e-12);
    }
}
