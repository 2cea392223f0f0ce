//! SOAV cost machinery: the integrand `L(u) = Σ w_i(|u−U_i| + |u+U_i|)`,
//! its piecewise-linear breakpoints, the global floor `J_min`, discrete cost
//! evaluation, the pointwise Hamiltonian minimizer, and switching analysis.

use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};
use crate::numerics::eigenvalues;
use crate::plant::{Alphabet, Plant};

/// Breakpoint data of the integrand for a normalized alphabet.
///
/// On `[U_k, U_{k+1}]` the integrand is `a_k u + b_k` with
/// `a_k = 2 Σ_{i≤k} w_i` and `b_k = 2 Σ_{i>k} w_i U_i`; on `[−U_1, U_1]` it
/// is flat at `2 Σ w_i U_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct CostProfile {
    alphabet: Alphabet,
    slopes: Vec<f64>,
    offsets: Vec<f64>,
    plateau: f64,
}

impl CostProfile {
    pub fn new(alphabet: &Alphabet) -> Result<Self> {
        if !alphabet.is_normalized() {
            return invalid("cost profile needs a normalized alphabet (U_N = 1, Σw = 1)");
        }
        let u = alphabet.levels();
        let w = alphabet.weights();
        let n = u.len();
        let mut slopes = Vec::with_capacity(n - 1);
        let mut offsets = Vec::with_capacity(n - 1);
        for k in 1..n {
            slopes.push(2.0 * w[..k].iter().sum::<f64>());
            offsets.push(2.0 * (k..n).map(|i| w[i] * u[i]).sum::<f64>());
        }
        let plateau = 2.0 * u.iter().zip(w).map(|(u, w)| u * w).sum::<f64>();
        Ok(CostProfile {
            alphabet: alphabet.clone(),
            slopes,
            offsets,
            plateau,
        })
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    /// `a_1 … a_{N−1}`.
    pub fn slopes(&self) -> &[f64] {
        &self.slopes
    }

    /// `b_1 … b_{N−1}`.
    pub fn offsets(&self) -> &[f64] {
        &self.offsets
    }

    /// Flat minimum value `2 Σ w_i U_i` of the integrand.
    pub fn plateau(&self) -> f64 {
        self.plateau
    }

    /// The integrand summed directly from its definition.
    pub fn integrand(&self, u: f64) -> Result<f64> {
        if !(u.abs() <= 1.0) {
            return Err(Error::Domain(format!("integrand needs |u| <= 1, got {u}")));
        }
        Ok(self.integrand_unchecked(u))
    }

    fn integrand_unchecked(&self, u: f64) -> f64 {
        let a = &self.alphabet;
        a.levels()
            .iter()
            .zip(a.weights())
            .map(|(lv, w)| w * ((u - lv).abs() + (u + lv).abs()))
            .sum()
    }

    /// The integrand evaluated through its piecewise-linear breakpoint form.
    pub fn integrand_piecewise(&self, u: f64) -> Result<f64> {
        if !(u.abs() <= 1.0) {
            return Err(Error::Domain(format!("integrand needs |u| <= 1, got {u}")));
        }
        let levels = self.alphabet.levels();
        let m = u.abs();
        if m <= levels[0] {
            return Ok(self.plateau);
        }
        let k = (1..levels.len())
            .find(|&k| m <= levels[k])
            .unwrap_or(levels.len() - 1);
        Ok(self.slopes[k - 1] * m + self.offsets[k - 1])
    }

    /// Global floor `2 T Σ w_i U_i` of the SOAV cost over box-feasible
    /// controls on `[0, T]`.
    pub fn jmin(&self, horizon: f64) -> f64 {
        self.plateau * horizon
    }

    /// Discrete cost `h Σ_i p_i ‖z − r_i‖₁`.
    pub fn cost(&self, z: &[f64], h: f64) -> Result<f64> {
        check_box(z)?;
        let (r, p) = self.alphabet.shifts();
        Ok(h * r
            .iter()
            .zip(&p)
            .map(|(r, p)| p * z.iter().map(|zl| (zl - r).abs()).sum::<f64>())
            .sum::<f64>())
    }

    /// Same cost summed as `h Σ_i w_i (‖z − U_i‖₁ + ‖z + U_i‖₁)`.
    pub fn cost_by_levels(&self, z: &[f64], h: f64) -> Result<f64> {
        check_box(z)?;
        Ok(h * z.iter().map(|&zl| self.integrand_unchecked(zl)).sum::<f64>())
    }

    /// Minimizer over `|u| ≤ 1` of `L(u) + q u`.
    ///
    /// Away from the thresholds `{0, ±a_k}` the answer is a single alphabet
    /// level. Exactly on a threshold the minimizer set is an interval; the
    /// returned value is its endpoint of larger magnitude (the positive end
    /// at `q = 0`) and the interval is reported in `tie`.
    pub fn pointwise_minimizer(&self, q: f64) -> PointwiseMin {
        let levels = self.alphabet.levels();
        let a = &self.slopes;
        let m = q.abs();
        let sign = if q > 0.0 { -1.0 } else { 1.0 };
        if m == 0.0 {
            let u1 = levels[0];
            return PointwiseMin {
                value: u1,
                tie: Some((-u1, u1)),
            };
        }
        if let Some(k) = a.iter().position(|&ak| ak == m) {
            // flat on [U_{k+1}, U_{k+2}] (1-based k+1) mirrored by the sign of q
            let (lo, hi) = (levels[k], levels[k + 1]);
            let tie = if sign > 0.0 { (lo, hi) } else { (-hi, -lo) };
            return PointwiseMin {
                value: sign * hi,
                tie: Some(tie),
            };
        }
        // number of thresholds (including 0) strictly below |q|
        let j = 1 + a.iter().filter(|&&ak| ak < m).count();
        PointwiseMin {
            value: sign * levels[j - 1],
            tie: None,
        }
    }

    /// Largest switching count permitted for a normal plant:
    /// `2n(N−1)(1+ΩT/π)` when `U_1 = 0`, else `n(2N−1)(1+ΩT/π)`.
    pub fn switching_bound(&self, n: usize, omega: f64, horizon: f64) -> f64 {
        let big_n = self.alphabet.len() as f64;
        let factor = 1.0 + omega * horizon / PI;
        if self.alphabet.u_min() == 0.0 {
            2.0 * n as f64 * (big_n - 1.0) * factor
        } else {
            n as f64 * (2.0 * big_n - 1.0) * factor
        }
    }
}

fn check_box(z: &[f64]) -> Result<()> {
    if let Some((l, v)) = z.iter().enumerate().find(|(_, v)| !(v.abs() <= 1.0 + 1e-9)) {
        return Err(Error::Domain(format!(
            "control sample {l} = {v} violates the unit box"
        )));
    }
    Ok(())
}

/// Result of the pointwise Hamiltonian minimization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointwiseMin {
    pub value: f64,
    /// Minimizer interval when `q` sits exactly on a threshold.
    pub tie: Option<(f64, f64)>,
}

/// Largest imaginary part among the eigenvalues of `A` (zero for real
/// spectra).
pub fn omega(plant: &Plant) -> Result<f64> {
    let ev = eigenvalues(plant.a())?;
    Ok(ev.iter().fold(0.0f64, |m, e| m.max(e.im)))
}

/// Snaps `v` to the nearest alphabet value if it lies within `tol`.
pub fn snap(v: f64, symmetric_levels: &[f64], tol: f64) -> Option<f64> {
    let (best, dist) = nearest_level(v, symmetric_levels);
    (dist <= tol).then_some(best)
}

pub(crate) fn nearest_level(v: f64, symmetric_levels: &[f64]) -> (f64, f64) {
    symmetric_levels
        .iter()
        .map(|&lv| (lv, (v - lv).abs()))
        .fold((f64::NAN, f64::INFINITY), |best, cur| {
            if cur.1 < best.1 {
                cur
            } else {
                best
            }
        })
}

pub const DEFAULT_SNAP_TOL: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct SwitchReport {
    /// Level changes between consecutive on-alphabet samples.
    pub count: usize,
    pub bound: f64,
    /// Whether the plant satisfies the hypotheses behind `bound`.
    pub bound_applies: bool,
    pub omega: f64,
    /// Grid indices where a new level starts.
    pub switch_indices: Vec<usize>,
    /// `(level, samples)` for every value in `{±U_i}`.
    pub histogram: Vec<(f64, usize)>,
    pub off_alphabet: usize,
}

/// Counts level switches in `z` after snapping and computes the switching
/// bound. `omega` overrides the eigenvalue computation when given.
pub fn switch_analysis(
    z: &[f64],
    profile: &CostProfile,
    plant: &Plant,
    horizon: f64,
    snap_tol: f64,
    omega_override: Option<f64>,
) -> Result<SwitchReport> {
    if z.iter().any(|v| !v.is_finite()) {
        return invalid("control samples must be finite");
    }
    let levels = profile.alphabet().symmetric_levels();
    let omega = match omega_override {
        Some(w) => w,
        None => omega(plant)?,
    };
    let mut histogram: Vec<(f64, usize)> = levels.iter().map(|&l| (l, 0)).collect();
    let mut off_alphabet = 0;
    let mut switch_indices = Vec::new();
    let mut previous: Option<f64> = None;
    for (l, &v) in z.iter().enumerate() {
        match snap(v, &levels, snap_tol) {
            Some(level) => {
                if let Some(slot) = histogram.iter_mut().find(|(lv, _)| *lv == level) {
                    slot.1 += 1;
                }
                if previous.is_some_and(|p| p != level) {
                    switch_indices.push(l);
                }
                previous = Some(level);
            }
            None => off_alphabet += 1,
        }
    }
    Ok(SwitchReport {
        count: switch_indices.len(),
        bound: profile.switching_bound(plant.dim(), omega, horizon),
        bound_applies: plant.is_normal(),
        omega,
        switch_indices,
        histogram,
        off_alphabet,
    })
}
