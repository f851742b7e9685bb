// Copyright 2026 The itree Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

//! Step amplitudes in the original and decoupled spin bases.
//!
//! A step maps an initial spin to a superposition of (move, final spin)
//! pairs. For each move `h` the amplitudes form a real 2x2 transfer matrix
//! `M_h[final][initial]`, so `M_R` is exactly the all-right step matrix used
//! by the exact oracles.
//!
//! In the decouplable subset both transfer matrices are diagonal in the
//! basis `|↓'⟩ = cos λ|↓⟩ − sin λ|↑⟩`, `|↑'⟩ = sin λ|↓⟩ + cos λ|↑⟩`, i.e.
//! `M_h = Rᵀ · diag(h↓, h↑) · R` with `R = [[cos λ, −sin λ], [sin λ, cos λ]]`.
//! This is the operator the circuit realizes: `R` on the spin, the
//! spin-controlled path rotations, then `R†`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Real 2x2 matrix stored row-major.
pub type Mat2 = [[f64; 2]; 2];

/// Tolerance for row unitarity and decouplability of input amplitudes.
pub const UNITARITY_TOL: f64 = 1e-12;
/// Tolerance for the rotation-equation residuals and closed-form checks.
pub const SOLVER_TOL: f64 = 1e-9;

pub fn mat_vec(m: &Mat2, v: [f64; 2]) -> [f64; 2] {
    [
        m[0][0] * v[0] + m[0][1] * v[1],
        m[1][0] * v[0] + m[1][1] * v[1],
    ]
}

pub fn mat_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[0.0; 2]; 2];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, x) in row.iter_mut().enumerate() {
            *x = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

pub fn transpose(m: &Mat2) -> Mat2 {
    [[m[0][0], m[1][0]], [m[0][1], m[1][1]]]
}

/// The basis rotation `R(λ)`.
pub fn rotation(lambda: f64) -> Mat2 {
    let (s, c) = lambda.sin_cos();
    [[c, -s], [s, c]]
}

/// The eight original-basis amplitudes of one step.
///
/// Field `a{move}{initial}{final}`: `l`/`r` for the move, `d`/`u` for spin
/// down/up.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepAmplitudes {
    #[serde(rename = "aLdd")]
    pub a_l_dd: f64,
    #[serde(rename = "aLdu")]
    pub a_l_du: f64,
    #[serde(rename = "aLud")]
    pub a_l_ud: f64,
    #[serde(rename = "aLuu")]
    pub a_l_uu: f64,
    #[serde(rename = "aRdd")]
    pub a_r_dd: f64,
    #[serde(rename = "aRdu")]
    pub a_r_du: f64,
    #[serde(rename = "aRud")]
    pub a_r_ud: f64,
    #[serde(rename = "aRuu")]
    pub a_r_uu: f64,
}

/// Outcome of [`StepAmplitudes::validate_unitarity`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitarityReport {
    pub pass: bool,
    /// `|rowSum − 1|` for an initial down spin and an initial up spin.
    pub residuals: [f64; 2],
}

impl StepAmplitudes {
    /// Assemble amplitudes from transfer matrices indexed `[final][initial]`.
    pub fn from_matrices(left: &Mat2, right: &Mat2) -> Self {
        StepAmplitudes {
            a_l_dd: left[0][0],
            a_l_du: left[1][0],
            a_l_ud: left[0][1],
            a_l_uu: left[1][1],
            a_r_dd: right[0][0],
            a_r_du: right[1][0],
            a_r_ud: right[0][1],
            a_r_uu: right[1][1],
        }
    }

    pub fn left_matrix(&self) -> Mat2 {
        [[self.a_l_dd, self.a_l_ud], [self.a_l_du, self.a_l_uu]]
    }

    pub fn right_matrix(&self) -> Mat2 {
        [[self.a_r_dd, self.a_r_ud], [self.a_r_du, self.a_r_uu]]
    }

    fn values(&self) -> [f64; 8] {
        [
            self.a_l_dd,
            self.a_l_du,
            self.a_l_ud,
            self.a_l_uu,
            self.a_r_dd,
            self.a_r_du,
            self.a_r_ud,
            self.a_r_uu,
        ]
    }

    pub fn check_finite(&self) -> Result<()> {
        if self.values().iter().all(|x| x.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFinite("step amplitudes"))
        }
    }

    /// Check that each initial spin evolves into a normalized state.
    pub fn validate_unitarity(&self) -> UnitarityReport {
        let down =
            self.a_l_dd.powi(2) + self.a_l_du.powi(2) + self.a_r_dd.powi(2) + self.a_r_du.powi(2);
        let up =
            self.a_l_uu.powi(2) + self.a_l_ud.powi(2) + self.a_r_uu.powi(2) + self.a_r_ud.powi(2);
        let residuals = [(down - 1.0).abs(), (up - 1.0).abs()];
        UnitarityReport {
            pass: residuals.iter().all(|r| *r <= UNITARITY_TOL),
            residuals,
        }
    }

    pub fn is_decouplable(&self) -> bool {
        (self.a_l_du - self.a_l_ud).abs() <= UNITARITY_TOL
            && (self.a_r_du - self.a_r_ud).abs() <= UNITARITY_TOL
    }

    fn left_block(&self) -> Block {
        Block::new(self.a_l_dd, self.a_l_uu, self.a_l_du, self.a_l_ud)
    }

    fn right_block(&self) -> Block {
        Block::new(self.a_r_dd, self.a_r_uu, self.a_r_du, self.a_r_ud)
    }
}

/// One symmetric transfer matrix, as seen by the rotation equation.
#[derive(Debug, Clone, Copy)]
struct Block {
    dd: f64,
    uu: f64,
    off: f64,
}

impl Block {
    fn new(dd: f64, uu: f64, du: f64, ud: f64) -> Self {
        Block {
            dd,
            uu,
            off: 0.5 * (du + ud),
        }
    }

    fn diff(&self) -> f64 {
        self.dd - self.uu
    }

    /// Eigenvalue gap; the rotation equation carries no information at zero gap.
    fn gap(&self) -> f64 {
        (4.0 * self.off * self.off + self.diff() * self.diff()).sqrt()
    }

    /// `cos λ sin λ (dd − uu) + cos 2λ · off`.
    fn residual(&self, lambda: f64) -> f64 {
        let (s, c) = lambda.sin_cos();
        c * s * self.diff() + (2.0 * lambda).cos() * self.off
    }

    /// Diagonal of `R · M · Rᵀ`, from the paired linear equations for the
    /// rotated amplitudes.
    fn rotate_linear(&self, lambda: f64) -> (f64, f64, f64) {
        let (s, c) = lambda.sin_cos();
        let down = c * c * self.dd - 2.0 * s * c * self.off + s * s * self.uu;
        let up = s * s * self.dd + 2.0 * s * c * self.off + c * c * self.uu;
        let cross = s * c * (self.dd - self.uu) + (c * c - s * s) * self.off;
        (down, up, cross)
    }

    /// Closed-form decoupled amplitudes, returned as `(down, up)` for a
    /// rotation angle with `cos 2λ > 0`. The two published expressions swap
    /// roles when `cos 2λ < 0`.
    fn closed_form(&self, lambda: f64) -> Result<(f64, f64)> {
        let d = self.diff();
        if d.abs() <= UNITARITY_TOL * self.off.abs().max(1.0) {
            return Err(Error::DegenerateDenominator);
        }
        let a2 = self.off * self.off;
        let root = (4.0 * a2 * d * d + d.powi(4)).sqrt();
        let lower = self.dd - (root + d * d) / (2.0 * d);
        let upper = self.dd + 2.0 * a2 * d / (root + d * d);
        if !(lower.is_finite() && upper.is_finite()) {
            return Err(Error::DegenerateDenominator);
        }
        if (2.0 * lambda).cos() >= 0.0 {
            Ok((upper, lower))
        } else {
            Ok((lower, upper))
        }
    }
}

/// Reduce an angle to the principal branch `(−π/4, π/4]`.
pub fn principal_branch(lambda: f64) -> f64 {
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};
    let mut l = lambda % FRAC_PI_2;
    if l > FRAC_PI_4 {
        l -= FRAC_PI_2;
    } else if l <= -FRAC_PI_4 {
        l += FRAC_PI_2;
    }
    l
}

/// Solve `cos λ sin λ (A↓↓ − A↑↑) + cos 2λ · A = 0` for the rotation angle.
///
/// The equation is taken from whichever move has the larger eigenvalue gap
/// and the other move's residual must vanish to [`SOLVER_TOL`]. When both
/// blocks are proportional to the identity every angle works and `0` is
/// returned.
pub fn solve_rotation_angle(amps: &StepAmplitudes) -> Result<f64> {
    amps.check_finite()?;
    if !amps.is_decouplable() {
        return Err(Error::NotDecouplable(format!(
            "aLdu - aLud = {:e}, aRdu - aRud = {:e}",
            amps.a_l_du - amps.a_l_ud,
            amps.a_r_du - amps.a_r_ud
        )));
    }
    let (left, right) = (amps.left_block(), amps.right_block());
    let (primary, other) = if left.gap() >= right.gap() {
        (left, right)
    } else {
        (right, left)
    };
    if primary.gap() <= UNITARITY_TOL {
        return Ok(0.0);
    }
    let lambda = principal_branch(0.5 * (-2.0 * primary.off).atan2(primary.diff()));
    let residual = other.residual(lambda).abs();
    if residual > SOLVER_TOL {
        return Err(Error::InconsistentAmplitudes { residual });
    }
    Ok(lambda)
}

/// Decoupled amplitudes of one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecoupledAmplitudes {
    pub left_down: f64,
    pub left_up: f64,
    pub right_down: f64,
    pub right_up: f64,
}

impl DecoupledAmplitudes {
    pub fn theta_down(&self) -> f64 {
        self.right_down.atan2(self.left_down)
    }

    pub fn theta_up(&self) -> f64 {
        self.right_up.atan2(self.left_up)
    }
}

fn decouple_block(block: &Block, lambda: f64) -> Result<(f64, f64)> {
    let (down, up, cross) = block.rotate_linear(lambda);
    if cross.abs() > SOLVER_TOL {
        return Err(Error::InconsistentAmplitudes {
            residual: cross.abs(),
        });
    }
    match block.closed_form(lambda) {
        Ok((cf_down, cf_up)) => {
            let residual = (cf_down - down).abs().max((cf_up - up).abs());
            if residual > SOLVER_TOL {
                return Err(Error::InconsistentAmplitudes { residual });
            }
            Ok((cf_down, cf_up))
        }
        Err(Error::DegenerateDenominator) => Ok((down, up)),
        Err(e) => Err(e),
    }
}

/// Closed-form decoupled left amplitudes `(down, up)`; fails with
/// [`Error::DegenerateDenominator`] when `A_L↓↓ = A_L↑↑`.
pub fn closed_form_left(amps: &StepAmplitudes, lambda: f64) -> Result<(f64, f64)> {
    amps.left_block().closed_form(lambda)
}

/// Rotate a decouplable step into the basis defined by `lambda`.
///
/// Uses the closed form where it is defined and checks it against the
/// linear-equation route; falls back to the linear route when the closed
/// form is singular.
pub fn decouple(amps: &StepAmplitudes, lambda: f64) -> Result<DecoupledAmplitudes> {
    amps.check_finite()?;
    if !lambda.is_finite() {
        return Err(Error::NonFinite("lambda"));
    }
    if !amps.is_decouplable() {
        return Err(Error::NotDecouplable(
            "off-diagonal amplitudes are not symmetric".into(),
        ));
    }
    let (left_down, left_up) = decouple_block(&amps.left_block(), lambda)?;
    let (right_down, right_up) = decouple_block(&amps.right_block(), lambda)?;
    Ok(DecoupledAmplitudes {
        left_down,
        left_up,
        right_down,
        right_up,
    })
}

/// Rotation angle plus per-step decoupled angles.
///
/// In step `n` the decoupled left amplitudes are `cos θ↓(n)`, `cos θ↑(n)`
/// and the right amplitudes `sin θ↓(n)`, `sin θ↑(n)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecoupledParams {
    pub lambda: f64,
    pub theta_down: Vec<f64>,
    pub theta_up: Vec<f64>,
}

/// Left and right transfer matrices of one step, indexed `[final][initial]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepMatrices {
    pub left: Mat2,
    pub right: Mat2,
}

impl StepMatrices {
    pub fn get(&self, left: bool) -> &Mat2 {
        if left {
            &self.left
        } else {
            &self.right
        }
    }
}

impl DecoupledParams {
    pub fn new(lambda: f64, theta_down: Vec<f64>, theta_up: Vec<f64>) -> Result<Self> {
        if theta_down.is_empty() {
            return Err(Error::OutOfRange {
                what: "n_steps",
                value: 0.0,
            });
        }
        if theta_down.len() != theta_up.len() {
            return Err(Error::LengthMismatch {
                expected: theta_down.len(),
                got: theta_up.len(),
            });
        }
        if !lambda.is_finite() {
            return Err(Error::NonFinite("lambda"));
        }
        if !theta_down.iter().chain(&theta_up).all(|t| t.is_finite()) {
            return Err(Error::NonFinite("theta"));
        }
        Ok(DecoupledParams {
            lambda,
            theta_down,
            theta_up,
        })
    }

    /// Same angles at every one of `n` steps.
    pub fn uniform(lambda: f64, theta_down: f64, theta_up: f64, n: usize) -> Result<Self> {
        Self::new(lambda, vec![theta_down; n], vec![theta_up; n])
    }

    pub fn n_steps(&self) -> usize {
        self.theta_down.len()
    }

    /// Decoupled amplitudes of step `step` (0-based).
    pub fn amplitudes(&self, step: usize) -> DecoupledAmplitudes {
        let (sd, cd) = self.theta_down[step].sin_cos();
        let (su, cu) = self.theta_up[step].sin_cos();
        DecoupledAmplitudes {
            left_down: cd,
            left_up: cu,
            right_down: sd,
            right_up: su,
        }
    }

    /// Original-basis transfer matrices `Rᵀ · diag · R` of step `step`
    /// (0-based). Off-diagonal entries are computed once so the result is
    /// exactly symmetric.
    pub fn recouple(&self, step: usize) -> StepMatrices {
        let amp = self.amplitudes(step);
        let (s, c) = self.lambda.sin_cos();
        let conj = |down: f64, up: f64| -> Mat2 {
            let off = s * c * (up - down);
            [
                [down * c * c + up * s * s, off],
                [off, down * s * s + up * c * c],
            ]
        };
        StepMatrices {
            left: conj(amp.left_down, amp.left_up),
            right: conj(amp.right_down, amp.right_up),
        }
    }

    pub fn step_amplitudes(&self, step: usize) -> StepAmplitudes {
        let m = self.recouple(step);
        StepAmplitudes::from_matrices(&m.left, &m.right)
    }

    pub fn transfer_matrices(&self) -> Vec<StepMatrices> {
        (0..self.n_steps()).map(|n| self.recouple(n)).collect()
    }

    /// Recover decoupled parameters for one step from original-basis amplitudes.
    pub fn from_step_amplitudes(amps: &StepAmplitudes) -> Result<Self> {
        let lambda = solve_rotation_angle(amps)?;
        let dec = decouple(amps, lambda)?;
        Self::new(lambda, vec![dec.theta_down()], vec![dec.theta_up()])
    }
}

/// Angle with `cos²θ = p`, taken in `[0, π/2]`.
pub fn theta_from_probability(p: f64) -> f64 {
    p.sqrt().clamp(0.0, 1.0).acos()
}

/// A full run configuration: tree depth, rotation angle, per-step left
/// probabilities in the decoupled basis, initial spin and RNG seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub n_steps: usize,
    pub lambda: f64,
    pub p_down: Vec<f64>,
    pub p_up: Vec<f64>,
    /// Initial spin `a|↓⟩ + √(1−a²)|↑⟩`.
    pub initial_a: f64,
    pub seed: u64,
}

fn check_probability(what: &'static str, p: f64) -> Result<()> {
    if !p.is_finite() {
        return Err(Error::NonFinite(what));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::OutOfRange { what, value: p });
    }
    Ok(())
}

fn broadcast(values: &[f64], n: usize) -> Result<Vec<f64>> {
    match values.len() {
        1 => Ok(vec![values[0]; n]),
        len if len == n => Ok(values.to_vec()),
        len => Err(Error::LengthMismatch {
            expected: n,
            got: len,
        }),
    }
}

impl ModelConfig {
    /// Build and validate a configuration. Probability slices of length one
    /// are broadcast to all `n_steps` steps.
    pub fn from_probabilities(
        n_steps: usize,
        lambda: f64,
        p_down: &[f64],
        p_up: &[f64],
        initial_a: f64,
        seed: u64,
    ) -> Result<Self> {
        if n_steps == 0 {
            return Err(Error::OutOfRange {
                what: "n_steps",
                value: 0.0,
            });
        }
        if !lambda.is_finite() {
            return Err(Error::NonFinite("lambda"));
        }
        let p_down = broadcast(p_down, n_steps)?;
        let p_up = broadcast(p_up, n_steps)?;
        for &p in &p_down {
            check_probability("p_down", p)?;
        }
        for &p in &p_up {
            check_probability("p_up", p)?;
        }
        if !initial_a.is_finite() {
            return Err(Error::NonFinite("initial_a"));
        }
        if initial_a.abs() > 1.0 {
            return Err(Error::OutOfRange {
                what: "initial_a",
                value: initial_a,
            });
        }
        Ok(ModelConfig {
            n_steps,
            lambda,
            p_down,
            p_up,
            initial_a,
            seed,
        })
    }

    /// Constant-probability configuration.
    pub fn uniform(
        n_steps: usize,
        lambda: f64,
        p_down: f64,
        p_up: f64,
        initial_a: f64,
        seed: u64,
    ) -> Result<Self> {
        Self::from_probabilities(n_steps, lambda, &[p_down], &[p_up], initial_a, seed)
    }

    /// Re-run the constructor checks, e.g. after deserialization.
    pub fn validate(&self) -> Result<()> {
        Self::from_probabilities(
            self.n_steps,
            self.lambda,
            &self.p_down,
            &self.p_up,
            self.initial_a,
            self.seed,
        )
        .map(|_| ())
    }

    pub fn with_lambda(&self, lambda: f64) -> Self {
        ModelConfig {
            lambda,
            ..self.clone()
        }
    }

    pub fn params(&self) -> DecoupledParams {
        DecoupledParams {
            lambda: self.lambda,
            theta_down: self
                .p_down
                .iter()
                .map(|&p| theta_from_probability(p))
                .collect(),
            theta_up: self
                .p_up
                .iter()
                .map(|&p| theta_from_probability(p))
                .collect(),
        }
    }

    /// Initial spin amplitudes `(down, up)`.
    pub fn initial_spin(&self) -> [f64; 2] {
        let a = self.initial_a;
        [a, (1.0 - a * a).max(0.0).sqrt()]
    }

    pub fn transfer_matrices(&self) -> Vec<StepMatrices> {
        self.params().transfer_matrices()
    }

    /// Parse the JSON config document; `p_down`/`p_up` may be scalars or arrays.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: ConfigFile =
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        Self::from_probabilities(
            file.n_steps,
            file.lambda,
            file.p_down.as_slice(),
            file.p_up.as_slice(),
            file.initial_a,
            file.seed,
        )
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum ScalarOrVec {
    Scalar(f64),
    Vec(Vec<f64>),
}

impl ScalarOrVec {
    fn as_slice(&self) -> &[f64] {
        match self {
            ScalarOrVec::Scalar(x) => std::slice::from_ref(x),
            ScalarOrVec::Vec(v) => v,
        }
    }
}

fn default_a() -> f64 {
    1.0
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    n_steps: usize,
    lambda: f64,
    p_down: ScalarOrVec,
    p_up: ScalarOrVec,
    #[serde(default = "default_a")]
    initial_a: f64,
    #[serde(default)]
    seed: u64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    fn reference_params(lambda: f64) -> DecoupledParams {
        DecoupledParams::uniform(
            lambda,
            theta_from_probability(0.8),
            theta_from_probability(0.5),
            1,
        )
        .unwrap()
    }

    #[test]
    fn degenerate_row_fails_second_row() {
        let amps = StepAmplitudes::from_matrices(&[[1.0, 0.0], [0.0, 0.0]], &[[0.0; 2]; 2]);
        let report = amps.validate_unitarity();
        assert!(!report.pass);
        assert_eq!(report.residuals, [0.0, 1.0]);
    }

    #[test]
    fn recoupled_step_is_unitary() {
        let amps = reference_params(0.3).step_amplitudes(0);
        let report = amps.validate_unitarity();
        assert!(report.pass, "{:?}", report);
        assert!(amps.is_decouplable());
    }

    #[test]
    fn uniform_amplitudes() {
        // Four squares of 1/2 per row sum to one.
        let halves = StepAmplitudes::from_matrices(&[[0.5; 2]; 2], &[[0.5; 2]; 2]);
        assert!(halves.validate_unitarity().pass);
        // Four squares of 1/√2 per row sum to two.
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let report = StepAmplitudes::from_matrices(&[[h; 2]; 2], &[[h; 2]; 2]).validate_unitarity();
        assert!(!report.pass);
        assert_abs_diff_eq!(report.residuals[0], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(report.residuals[1], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn already_decoupled_gives_zero() {
        let amps = reference_params(0.0).step_amplitudes(0);
        assert_eq!(amps.a_l_du, 0.0);
        assert_eq!(solve_rotation_angle(&amps).unwrap(), 0.0);

        // Reversed ordering of the diagonal still reduces to zero.
        let swapped = DecoupledParams::uniform(0.0, 1.2, 0.4, 1)
            .unwrap()
            .step_amplitudes(0);
        assert_eq!(solve_rotation_angle(&swapped).unwrap(), 0.0);
    }

    #[test]
    fn equal_diagonal_forces_quarter_turn() {
        let amps = reference_params(FRAC_PI_4).step_amplitudes(0);
        assert_abs_diff_eq!(amps.a_l_dd, amps.a_l_uu, epsilon = 1e-15);
        let amps = StepAmplitudes {
            a_l_uu: amps.a_l_dd,
            ..amps
        };
        assert_abs_diff_eq!(
            solve_rotation_angle(&amps).unwrap(),
            FRAC_PI_4,
            epsilon = 1e-12
        );
    }

    #[test]
    fn solver_round_trip_reference_angles() {
        let params = reference_params(0.5);
        let amps = params.step_amplitudes(0);
        let lambda = solve_rotation_angle(&amps).unwrap();
        assert_abs_diff_eq!(lambda, 0.5, epsilon = 1e-9);
        let dec = decouple(&amps, lambda).unwrap();
        assert_abs_diff_eq!(dec.theta_down(), params.theta_down[0], epsilon = 1e-9);
        assert_abs_diff_eq!(dec.theta_up(), params.theta_up[0], epsilon = 1e-9);
    }

    #[test]
    fn not_decouplable_is_rejected() {
        let mut amps = reference_params(0.5).step_amplitudes(0);
        amps.a_l_du += 1e-6;
        assert!(matches!(
            solve_rotation_angle(&amps),
            Err(Error::NotDecouplable(_))
        ));
        assert!(matches!(
            decouple(&amps, 0.5),
            Err(Error::NotDecouplable(_))
        ));
    }

    #[test]
    fn inconsistent_equations_are_rejected() {
        // Left block diagonal (forces λ = 0), right block is not.
        let amps =
            StepAmplitudes::from_matrices(&[[0.8, 0.0], [0.0, 0.2]], &[[0.3, 0.1], [0.1, 0.4]]);
        assert!(matches!(
            solve_rotation_angle(&amps),
            Err(Error::InconsistentAmplitudes { .. })
        ));
    }

    #[test]
    fn identity_rotation_decouple() {
        let amps = reference_params(0.0).step_amplitudes(0);
        let dec = decouple(&amps, 0.0).unwrap();
        assert_eq!(dec.left_down, amps.a_l_dd);
        assert_eq!(dec.left_up, amps.a_l_uu);
        assert_eq!(dec.right_down, amps.a_r_dd);
        assert_eq!(dec.right_up, amps.a_r_uu);
    }

    #[test]
    fn symmetric_input_decouples_by_hand() {
        // Ldd = Luu = 0.5, A_L = 0.2: the hand solution of the linear
        // equations at λ = π/4 is (0.5 - 0.2, 0.5 + 0.2).
        let params =
            DecoupledParams::new(FRAC_PI_4, vec![0.3f64.acos()], vec![0.7f64.acos()]).unwrap();
        let amps = params.step_amplitudes(0);
        assert_abs_diff_eq!(amps.a_l_dd, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(amps.a_l_du, 0.2, epsilon = 1e-15);
        assert!(matches!(
            closed_form_left(&amps, FRAC_PI_4),
            Err(Error::DegenerateDenominator)
        ));
        let dec = decouple(&amps, FRAC_PI_4).unwrap();
        assert_abs_diff_eq!(dec.left_down, amps.a_l_dd - amps.a_l_du, epsilon = 1e-15);
        assert_abs_diff_eq!(dec.left_up, amps.a_l_dd + amps.a_l_du, epsilon = 1e-15);
        assert_abs_diff_eq!(dec.left_down, 0.3, epsilon = 1e-12);
    }

    #[test]
    fn closed_form_matches_linear_route() {
        for &lambda in &[-0.7, -0.3, 0.1, 0.5, 0.78] {
            let params = DecoupledParams::new(lambda, vec![0.4], vec![1.1]).unwrap();
            let amps = params.step_amplitudes(0);
            let (down, up) = closed_form_left(&amps, lambda).unwrap();
            assert_abs_diff_eq!(down, 0.4f64.cos(), epsilon = 1e-12);
            assert_abs_diff_eq!(up, 1.1f64.cos(), epsilon = 1e-12);
        }
    }

    #[test]
    fn decoupled_output_is_normalized() {
        let amps = reference_params(0.37).step_amplitudes(0);
        let lambda = solve_rotation_angle(&amps).unwrap();
        let dec = decouple(&amps, lambda).unwrap();
        assert_abs_diff_eq!(
            dec.left_down.powi(2) + dec.right_down.powi(2),
            1.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            dec.left_up.powi(2) + dec.right_up.powi(2),
            1.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn recouple_zero_angle_is_diagonal() {
        let params = reference_params(0.0);
        let m = params.recouple(0);
        assert_eq!(m.left, [[0.8f64.sqrt(), 0.0], [0.0, 0.5f64.sqrt()]]);
        assert_eq!(m.right[0][1], 0.0);
        assert_eq!(m.right[1][0], 0.0);
    }

    #[test]
    fn recouple_half_turn_swaps_diagonal() {
        let params = reference_params(FRAC_PI_2);
        let m = params.recouple(0);
        // Direct conjugation with explicit matrix products.
        let r = rotation(FRAC_PI_2);
        let d = [[0.8f64.sqrt(), 0.0], [0.0, 0.5f64.sqrt()]];
        let direct = mat_mul(&transpose(&r), &mat_mul(&d, &r));
        for (row, expected) in m.left.iter().zip(&direct) {
            for (x, y) in row.iter().zip(expected) {
                assert_abs_diff_eq!(*x, *y, epsilon = 1e-15);
            }
        }
        assert_abs_diff_eq!(m.left[0][1], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(m.left[0][0], 0.5f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(m.left[1][1], 0.8f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn rotation_is_orthogonal() {
        for k in -20..=20 {
            let r = rotation(k as f64 * 0.37);
            let p = mat_mul(&r, &transpose(&r));
            assert_abs_diff_eq!(p[0][0], 1.0, epsilon = 1e-14);
            assert_abs_diff_eq!(p[1][1], 1.0, epsilon = 1e-14);
            assert_abs_diff_eq!(p[0][1], 0.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn config_reference_experiment() {
        let cfg = ModelConfig::uniform(20, 0.5, 0.8, 0.5, 1.0, 7).unwrap();
        assert_eq!(cfg.p_down.len(), 20);
        assert_eq!(cfg.initial_spin(), [1.0, 0.0]);
        let p = cfg.params();
        assert_abs_diff_eq!(p.theta_up[3], FRAC_PI_4, epsilon = 1e-15);
        assert_abs_diff_eq!(p.theta_down[0].cos().powi(2), 0.8, epsilon = 1e-15);
    }

    #[test]
    fn config_extremes() {
        let cfg = ModelConfig::uniform(1, 0.0, 1.0, 0.5, 1.0, 0).unwrap();
        let p = cfg.params();
        assert_eq!(p.theta_down[0], 0.0);
        assert_eq!(p.amplitudes(0).left_down, 1.0);
        assert_abs_diff_eq!(p.theta_up[0], FRAC_PI_4, epsilon = 1e-15);
    }

    #[test]
    fn config_rejects_bad_values() {
        assert!(matches!(
            ModelConfig::uniform(3, 0.0, 1.2, 0.5, 1.0, 0),
            Err(Error::OutOfRange { what: "p_down", .. })
        ));
        assert!(matches!(
            ModelConfig::uniform(3, 0.0, 0.2, 0.5, -1.5, 0),
            Err(Error::OutOfRange {
                what: "initial_a",
                ..
            })
        ));
        assert!(ModelConfig::uniform(0, 0.0, 0.2, 0.5, 1.0, 0).is_err());
        assert!(matches!(
            ModelConfig::from_probabilities(3, 0.0, &[0.1, 0.2], &[0.5], 1.0, 0),
            Err(Error::LengthMismatch {
                expected: 3,
                got: 2
            })
        ));
    }

    #[test]
    fn config_json_scalar_and_array() {
        let cfg = ModelConfig::from_json(
            r#"{"n_steps": 3, "lambda": 0.5, "p_down": 0.8, "p_up": [0.5, 0.4, 0.3], "seed": 11}"#,
        )
        .unwrap();
        assert_eq!(cfg.p_down, vec![0.8; 3]);
        assert_eq!(cfg.p_up, vec![0.5, 0.4, 0.3]);
        assert_eq!(cfg.initial_a, 1.0);
        assert_eq!(cfg.seed, 11);
        let back: ModelConfig = serde_json::from_str(&cfg.to_json()).unwrap();
        assert_eq!(back, cfg);
        assert!(ModelConfig::from_json(
            r#"{"n_steps": 3, "lambda": 0.5, "p_down": 1.5, "p_up": 0.5}"#
        )
        .is_err());
    }

    #[test]
    fn amplitude_json_uses_field_names() {
        let amps = reference_params(0.5).step_amplitudes(0);
        let text = serde_json::to_string(&amps).unwrap();
        assert!(text.contains("\"aLdu\""));
        let back: StepAmplitudes = serde_json::from_str(&text).unwrap();
        assert_eq!(back, amps);
    }
}
