//! Continuous-time plant, control alphabet, and zero-order-hold
//! discretization into the finite-dimensional program data.

use log::warn;

use crate::error::{invalid, Result};
use crate::numerics::{self, expm, Lu, Matrix};

/// Single-input LTI plant `ẋ = A x + B u`.
#[derive(Debug, Clone, PartialEq)]
pub struct Plant {
    a: Matrix,
    b: Vec<f64>,
}

impl Plant {
    pub fn new(a: Matrix, b: Vec<f64>) -> Result<Self> {
        if !a.is_square() {
            return invalid(format!("A must be square, got {}x{}", a.rows(), a.cols()));
        }
        if a.rows() == 0 {
            return invalid("A must have at least one row");
        }
        if b.len() != a.rows() {
            return invalid(format!(
                "B must have {} entries to match A, got {}",
                a.rows(),
                b.len()
            ));
        }
        if !a.is_finite() || b.iter().any(|v| !v.is_finite()) {
            return invalid("plant entries must be finite");
        }
        Ok(Plant { a, b })
    }

    pub fn a(&self) -> &Matrix {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn dim(&self) -> usize {
        self.a.rows()
    }

    /// Controllability matrix `[B, AB, …, A^{n-1}B]`.
    pub fn controllability_matrix(&self) -> Matrix {
        let n = self.dim();
        let mut c = Matrix::zeros(n, n);
        let mut col = self.b.clone();
        for j in 0..n {
            c.set_column(j, &col);
            col = self.a.mul_vec(&col).expect("square A");
        }
        c
    }

    pub fn is_controllable(&self) -> bool {
        numerics::rank(&self.controllability_matrix(), 1e-10) == self.dim()
    }

    pub fn is_nonsingular(&self) -> bool {
        numerics::rank(&self.a, 1e-12) == self.dim()
    }

    /// Nonsingular `A` and controllable `(A, B)`: the hypothesis under which
    /// optimal controls are discrete, unique, and have bounded switching.
    pub fn is_normal(&self) -> bool {
        self.is_nonsingular() && self.is_controllable()
    }
}

/// Symmetric finite alphabet `{±U_1, …, ±U_N}` with cost weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Alphabet {
    levels: Vec<f64>,
    weights: Vec<f64>,
}

impl Alphabet {
    /// Checks ordering and positivity; does not normalize.
    pub fn new(levels: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if levels.len() < 2 {
            return invalid(format!("need at least 2 levels, got {}", levels.len()));
        }
        if levels.len() != weights.len() {
            return invalid(format!(
                "{} levels but {} weights",
                levels.len(),
                weights.len()
            ));
        }
        if levels.iter().chain(&weights).any(|v| !v.is_finite()) {
            return invalid("levels and weights must be finite");
        }
        if levels[0] < 0.0 {
            return invalid(format!("levels must be nonnegative, got {}", levels[0]));
        }
        for (k, pair) in levels.windows(2).enumerate() {
            if pair[1] == pair[0] {
                return invalid(format!("duplicate level {} at positions {k} and {}", pair[0], k + 1));
            }
            if pair[1] < pair[0] {
                return invalid(format!(
                    "levels must be strictly increasing: {} then {}",
                    pair[0], pair[1]
                ));
            }
        }
        if let Some((i, w)) = weights.iter().enumerate().find(|(_, w)| **w <= 0.0) {
            return invalid(format!("weight {i} must be positive, got {w}"));
        }
        Ok(Alphabet { levels, weights })
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Number of nonnegative levels N.
    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn u_min(&self) -> f64 {
        self.levels[0]
    }

    pub fn u_max(&self) -> f64 {
        *self.levels.last().expect("nonempty")
    }

    pub fn is_normalized(&self) -> bool {
        let wsum: f64 = self.weights.iter().sum();
        (self.u_max() - 1.0).abs() <= 1e-12 && (wsum - 1.0).abs() <= 1e-12
    }

    /// Every admissible value `±U_i`, ascending, zero listed once.
    pub fn symmetric_levels(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self
            .levels
            .iter()
            .rev()
            .filter(|u| **u > 0.0)
            .map(|u| -u)
            .collect();
        if self.u_min() == 0.0 {
            out.push(0.0);
        }
        out.extend(self.levels.iter().copied().filter(|u| *u > 0.0));
        out
    }

    /// Shift/weight lists of the discretized cost `Σ p_i ‖z − r_i‖₁`:
    /// `r = (−U_N, …, −U_1, U_1, …, U_N)` and `p = (w_N, …, w_1, w_1, …, w_N)`.
    /// `±U_1` both appear even when `U_1 = 0`.
    pub fn shifts(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.len();
        let mut r = Vec::with_capacity(2 * n);
        let mut p = Vec::with_capacity(2 * n);
        for i in (0..n).rev() {
            r.push(-self.levels[i]);
            p.push(self.weights[i]);
        }
        for i in 0..n {
            r.push(self.levels[i]);
            p.push(self.weights[i]);
        }
        (r, p)
    }
}

/// Outcome of [`normalize`]: the rescaled plant and alphabet plus any
/// warnings raised on the way.
#[derive(Debug, Clone)]
pub struct Normalized {
    pub plant: Plant,
    pub alphabet: Alphabet,
    pub warnings: Vec<String>,
}

/// Rescales so that `U_N = 1` (folding `U_N` into `B`) and the weights sum
/// to one.
pub fn normalize(plant: &Plant, alphabet: &Alphabet) -> Result<Normalized> {
    let alphabet = Alphabet::new(alphabet.levels.clone(), alphabet.weights.clone())?;
    let u_max = alphabet.u_max();
    if u_max <= 0.0 {
        return invalid("largest level must be positive");
    }
    let mut warnings = Vec::new();
    let b: Vec<f64> = plant.b.iter().map(|v| v * u_max).collect();
    let levels: Vec<f64> = alphabet.levels.iter().map(|u| u / u_max).collect();
    let wsum: f64 = alphabet.weights.iter().sum();
    let weights = if (wsum - 1.0).abs() > 1e-12 {
        let msg = format!("weights summed to {wsum}; rescaled to sum to 1");
        warn!("{msg}");
        warnings.push(msg);
        alphabet.weights.iter().map(|w| w / wsum).collect()
    } else {
        alphabet.weights.clone()
    };
    Ok(Normalized {
        plant: Plant::new(plant.a.clone(), b)?,
        alphabet: Alphabet::new(levels, weights)?,
        warnings,
    })
}

/// Zero-order-hold pair `(A_d, B_d)` for step `h`, read off the top blocks
/// of `exp([[A, B], [0, 0]]·h)`.
pub fn zoh(plant: &Plant, h: f64) -> Result<(Matrix, Vec<f64>)> {
    let n = plant.dim();
    let mut aug = Matrix::zeros(n + 1, n + 1);
    for i in 0..n {
        for j in 0..n {
            aug[(i, j)] = plant.a[(i, j)] * h;
        }
        aug[(i, n)] = plant.b[i] * h;
    }
    let e = expm(&aug)?;
    Ok((e.block(0, 0, n, n), e.block(0, n, n, 1).column(0)))
}

/// Time-discretized program: minimize `Σ p_i ‖z − r_i‖₁` subject to
/// `‖z‖_∞ ≤ 1` and `Φ z + ζ = 0`.
#[derive(Debug, Clone)]
pub struct DiscreteProblem {
    pub a_d: Matrix,
    pub b_d: Vec<f64>,
    /// `A_d^ν`, kept so the initial state can be swapped cheaply.
    pub a_d_pow: Matrix,
    /// `n × ν`; column `l` is `A_d^{ν−1−l} B_d`.
    pub phi: Matrix,
    pub zeta: Vec<f64>,
    pub xi: Vec<f64>,
    pub h: f64,
    pub horizon: f64,
    pub nu: usize,
    pub r: Vec<f64>,
    pub p: Vec<f64>,
}

/// Builds the discretized program for initial state `xi` over `[0, T]`
/// split into `nu` steps.
pub fn discretize(
    plant: &Plant,
    alphabet: &Alphabet,
    horizon: f64,
    nu: usize,
    xi: &[f64],
) -> Result<DiscreteProblem> {
    if !(horizon > 0.0) || !horizon.is_finite() {
        return invalid(format!("horizon T must be positive, got {horizon}"));
    }
    if nu == 0 {
        return invalid("grid count nu must be at least 1");
    }
    let n = plant.dim();
    if xi.len() != n {
        return invalid(format!("initial state has {} entries, plant has {n}", xi.len()));
    }
    if xi.iter().any(|v| !v.is_finite()) {
        return invalid("initial state must be finite");
    }
    let h = horizon / nu as f64;
    let (a_d, b_d) = zoh(plant, h)?;
    let mut phi = Matrix::zeros(n, nu);
    let mut col = b_d.clone();
    for l in (0..nu).rev() {
        phi.set_column(l, &col);
        if l > 0 {
            col = a_d.mul_vec(&col)?;
        }
    }
    let a_d_pow = a_d.powi(nu)?;
    let zeta = a_d_pow.mul_vec(xi)?;
    let (r, p) = alphabet.shifts();
    Ok(DiscreteProblem {
        a_d,
        b_d,
        a_d_pow,
        phi,
        zeta,
        xi: xi.to_vec(),
        h,
        horizon,
        nu,
        r,
        p,
    })
}

impl DiscreteProblem {
    pub fn state_dim(&self) -> usize {
        self.phi.rows()
    }

    /// Number of shifted-ℓ1 terms, `L = 2N`.
    pub fn num_shifts(&self) -> usize {
        self.r.len()
    }

    /// Same grid and plant, new initial state.
    pub fn with_initial_state(&self, xi: &[f64]) -> Result<DiscreteProblem> {
        if xi.len() != self.state_dim() {
            return invalid(format!(
                "initial state has {} entries, plant has {}",
                xi.len(),
                self.state_dim()
            ));
        }
        if xi.iter().any(|v| !v.is_finite()) {
            return invalid("initial state must be finite");
        }
        let mut out = self.clone();
        out.zeta = self.a_d_pow.mul_vec(xi)?;
        out.xi = xi.to_vec();
        Ok(out)
    }

    /// `x_d[ν] = ζ + Φ z`.
    pub fn terminal_state(&self, z: &[f64]) -> Result<Vec<f64>> {
        let phi_z = self.phi.mul_vec(z)?;
        Ok(phi_z.iter().zip(&self.zeta).map(|(a, b)| a + b).collect())
    }

    /// Unscaled objective `Σ p_i ‖z − r_i‖₁`.
    pub fn program_objective(&self, z: &[f64]) -> f64 {
        self.r
            .iter()
            .zip(&self.p)
            .map(|(r, p)| p * z.iter().map(|zl| (zl - r).abs()).sum::<f64>())
            .sum()
    }

    /// Forward simulation `x_d[l+1] = A_d x_d[l] + B_d z_l` from `xi`.
    pub fn simulate(&self, z: &[f64]) -> Result<Vec<Vec<f64>>> {
        simulate(&self.a_d, &self.b_d, &self.xi, z)
    }

    /// Initial state that `z` steers exactly to the origin, found by
    /// running the recursion backwards from `x_d[ν] = 0`.
    pub fn initial_state_steered_by(&self, z: &[f64]) -> Result<Vec<f64>> {
        if z.len() != self.nu {
            return invalid(format!("control has {} samples, grid has {}", z.len(), self.nu));
        }
        let lu = Lu::factor(&self.a_d)?;
        let mut x = vec![0.0; self.state_dim()];
        for &u in z.iter().rev() {
            let rhs: Vec<f64> = x.iter().zip(&self.b_d).map(|(xi, b)| xi - b * u).collect();
            x = lu.solve(&rhs)?;
        }
        Ok(x)
    }
}

pub fn simulate(a_d: &Matrix, b_d: &[f64], x0: &[f64], z: &[f64]) -> Result<Vec<Vec<f64>>> {
    let mut states = Vec::with_capacity(z.len() + 1);
    states.push(x0.to_vec());
    for &u in z {
        let last = states.last().expect("nonempty");
        let mut next = a_d.mul_vec(last)?;
        for (x, b) in next.iter_mut().zip(b_d) {
            *x += b * u;
        }
        states.push(next);
    }
    Ok(states)
}
