//! Linear dynamical systems realizing one step of each gradient method on a
//! bilinear game, plus simulation, empirical rate estimation and the
//! splitting-form cross check.
//!
//! Gauss-Seidel systems are built by sequential substitution: the second
//! player's update sees the first player's fresh iterate, so the composed
//! one-step matrices are obtained by substituting the x-rows into the
//! y-rows. The equivalent `(I - L)^{-1}` form is used only for verification.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::Path;

use crate::error::{Error, Result};
use crate::game::BilinearGame;
use crate::linalg::{norm, Matrix};
use crate::util::fmt_g17;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlgorithmKind {
    Gd,
    Eg,
    Ogd,
    Momentum,
    Pp,
}

impl AlgorithmKind {
    pub const ALL: [AlgorithmKind; 5] = [
        AlgorithmKind::Gd,
        AlgorithmKind::Eg,
        AlgorithmKind::Ogd,
        AlgorithmKind::Momentum,
        AlgorithmKind::Pp,
    ];

    /// Number of past states one update step consumes.
    pub fn step_count(&self) -> usize {
        match self {
            AlgorithmKind::Ogd | AlgorithmKind::Momentum => 2,
            _ => 1,
        }
    }
}

impl fmt::Display for AlgorithmKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            AlgorithmKind::Gd => "gd",
            AlgorithmKind::Eg => "eg",
            AlgorithmKind::Ogd => "ogd",
            AlgorithmKind::Momentum => "momentum",
            AlgorithmKind::Pp => "pp",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UpdateStyle {
    Jacobi,
    #[serde(rename = "gs", alias = "gauss-seidel", alias = "gauss_seidel")]
    GaussSeidel,
}

impl fmt::Display for UpdateStyle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            UpdateStyle::Jacobi => f.write_str("jacobi"),
            UpdateStyle::GaussSeidel => f.write_str("gs"),
        }
    }
}

/// One of the five gradient methods with its update style and parameters.
///
/// `beta1`/`beta2` are the extra-gradient products (`beta1 = alpha2*gamma1`,
/// `beta2 = alpha1*gamma2`), the OGD past-gradient weights, or the momentum
/// coefficients; they are unused for GD and PP.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmSpec {
    pub kind: AlgorithmKind,
    pub style: UpdateStyle,
    pub alpha1: f64,
    pub alpha2: f64,
    #[serde(default)]
    pub beta1: f64,
    #[serde(default)]
    pub beta2: f64,
}

impl AlgorithmSpec {
    pub fn new(
        kind: AlgorithmKind,
        style: UpdateStyle,
        alpha1: f64,
        alpha2: f64,
        beta1: f64,
        beta2: f64,
    ) -> Result<Self> {
        let spec = AlgorithmSpec { kind, style, alpha1, alpha2, beta1, beta2 };
        spec.validate()?;
        Ok(spec)
    }

    /// Symmetric step sizes `alpha1 = alpha2 = alpha`.
    pub fn symmetric(
        kind: AlgorithmKind,
        style: UpdateStyle,
        alpha: f64,
        beta1: f64,
        beta2: f64,
    ) -> Result<Self> {
        AlgorithmSpec::new(kind, style, alpha, alpha, beta1, beta2)
    }

    /// Extra-gradient given the half-step sizes `gamma1`, `gamma2`.
    pub fn eg_with_gammas(
        style: UpdateStyle,
        alpha1: f64,
        alpha2: f64,
        gamma1: f64,
        gamma2: f64,
    ) -> Result<Self> {
        AlgorithmSpec::new(AlgorithmKind::Eg, style, alpha1, alpha2, alpha2 * gamma1, alpha1 * gamma2)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha1 > 0.0 && self.alpha2 > 0.0)
            || !self.alpha1.is_finite()
            || !self.alpha2.is_finite()
        {
            return Err(Error::InvalidSpec(format!(
                "step sizes must be positive, got alpha1={}, alpha2={}",
                self.alpha1, self.alpha2
            )));
        }
        if !self.beta1.is_finite() || !self.beta2.is_finite() {
            return Err(Error::InvalidSpec("beta parameters must be finite".into()));
        }
        if self.kind == AlgorithmKind::Pp && self.style == UpdateStyle::GaussSeidel {
            return Err(Error::InvalidSpec("proximal point has no Gauss-Seidel variant".into()));
        }
        Ok(())
    }

    pub fn step_count(&self) -> usize {
        self.kind.step_count()
    }

    /// Applies the scaling symmetry to make the step sizes equal:
    /// `(alpha1, alpha2) -> (t*alpha1, alpha2/t)` leaves the spectrum
    /// unchanged (for OGD the betas scale along), so any spec can be
    /// normalized to `alpha1 = alpha2 = sqrt(alpha1*alpha2)`.
    pub fn normalized(&self) -> AlgorithmSpec {
        let t = (self.alpha2 / self.alpha1).sqrt();
        let alpha = (self.alpha1 * self.alpha2).sqrt();
        let (beta1, beta2) = match self.kind {
            AlgorithmKind::Ogd => (self.beta1 * t, self.beta2 / t),
            _ => (self.beta1, self.beta2),
        };
        AlgorithmSpec { alpha1: alpha, alpha2: alpha, beta1, beta2, ..*self }
    }
}

/// k-step affine recurrence `z(t) = sum_i A_i z(t-i) + d` over the
/// augmented state `z = (x, y)`.
#[derive(Clone, Debug)]
pub struct LinearDynamicalSystem {
    matrices: Vec<Matrix>,
    offset: Vec<f64>,
}

impl LinearDynamicalSystem {
    pub fn new(matrices: Vec<Matrix>, offset: Vec<f64>) -> Self {
        assert!(!matrices.is_empty());
        let dim = matrices[0].rows();
        assert!(matrices.iter().all(|m| m.rows() == dim && m.cols() == dim));
        assert_eq!(offset.len(), dim);
        LinearDynamicalSystem { matrices, offset }
    }

    pub fn step_count(&self) -> usize {
        self.matrices.len()
    }

    pub fn dim(&self) -> usize {
        self.matrices[0].rows()
    }

    pub fn matrices(&self) -> &[Matrix] {
        &self.matrices
    }

    pub fn offset(&self) -> &[f64] {
        &self.offset
    }

    /// Evaluates the recurrence once. `history` is ordered most recent
    /// first: `history[i] = z(t-1-i)`.
    pub fn step(&self, history: &[Vec<f64>]) -> Result<Vec<f64>> {
        if history.len() != self.step_count() {
            return Err(Error::HistoryLength {
                expected: self.step_count(),
                found: history.len(),
            });
        }
        let mut z = self.offset.clone();
        for (a, h) in self.matrices.iter().zip(history) {
            if h.len() != self.dim() {
                return Err(Error::DimensionMismatch(format!(
                    "state length {} does not match system dimension {}",
                    h.len(),
                    self.dim()
                )));
            }
            let av = a.matvec(h);
            for (zi, vi) in z.iter_mut().zip(av) {
                *zi += vi;
            }
        }
        Ok(z)
    }
}

/// Builds the one-step (or two-step) system for a spec on a game.
pub fn build_lds(spec: &AlgorithmSpec, game: &BilinearGame) -> Result<LinearDynamicalSystem> {
    spec.validate()?;
    let (mats, d) = jacobi_system(spec, game)?;
    let (mats, d) = match spec.style {
        UpdateStyle::Jacobi => (mats, d),
        UpdateStyle::GaussSeidel => gauss_seidel_compose(game.rows(), &mats, &d),
    };
    Ok(LinearDynamicalSystem::new(mats, d))
}

/// The Jacobi update matrices of each method, from the gradient equations
/// applied to `f = x^T E y + b^T x + c^T y`.
fn jacobi_system(spec: &AlgorithmSpec, game: &BilinearGame) -> Result<(Vec<Matrix>, Vec<f64>)> {
    let e = game.matrix();
    let et = e.transpose();
    let (m, n) = (game.rows(), game.cols());
    let dim = m + n;
    let (a1, a2, b1, b2) = (spec.alpha1, spec.alpha2, spec.beta1, spec.beta2);
    let b = game.b();
    let c = game.c();

    let mut d = vec![0.0; dim];
    let mats = match spec.kind {
        AlgorithmKind::Gd => {
            let mut a = Matrix::identity(dim);
            a.set_block(0, m, &e.scale(-a1));
            a.set_block(m, 0, &et.scale(a2));
            for i in 0..m {
                d[i] = -a1 * b[i];
            }
            for j in 0..n {
                d[m + j] = a2 * c[j];
            }
            vec![a]
        }
        AlgorithmKind::Eg => {
            let mut a = Matrix::zeros(dim, dim);
            a.set_block(0, 0, &Matrix::identity(m).sub(&e.matmul(&et).scale(b2)));
            a.set_block(0, m, &e.scale(-a1));
            a.set_block(m, 0, &et.scale(a2));
            a.set_block(m, m, &Matrix::identity(n).sub(&et.matmul(e).scale(b1)));
            let ec = e.matvec(c);
            let etb = et.matvec(b);
            for i in 0..m {
                d[i] = -a1 * b[i] - b2 * ec[i];
            }
            for j in 0..n {
                d[m + j] = a2 * c[j] - b1 * etb[j];
            }
            vec![a]
        }
        AlgorithmKind::Ogd => {
            let mut first = Matrix::identity(dim);
            first.set_block(0, m, &e.scale(-a1));
            first.set_block(m, 0, &et.scale(a2));
            let mut second = Matrix::zeros(dim, dim);
            second.set_block(0, m, &e.scale(b1));
            second.set_block(m, 0, &et.scale(-b2));
            for i in 0..m {
                d[i] = (b1 - a1) * b[i];
            }
            for j in 0..n {
                d[m + j] = (a2 - b2) * c[j];
            }
            vec![first, second]
        }
        AlgorithmKind::Momentum => {
            let mut first = Matrix::zeros(dim, dim);
            first.set_block(0, 0, &Matrix::identity(m).scale(1.0 + b1));
            first.set_block(0, m, &e.scale(-a1));
            first.set_block(m, 0, &et.scale(a2));
            first.set_block(m, m, &Matrix::identity(n).scale(1.0 + b2));
            let mut second = Matrix::zeros(dim, dim);
            second.set_block(0, 0, &Matrix::identity(m).scale(-b1));
            second.set_block(m, m, &Matrix::identity(n).scale(-b2));
            for i in 0..m {
                d[i] = -a1 * b[i];
            }
            for j in 0..n {
                d[m + j] = a2 * c[j];
            }
            vec![first, second]
        }
        AlgorithmKind::Pp => {
            // implicit update: K z(t+1) = z(t) + (-a1 b, a2 c)
            let mut k = Matrix::identity(dim);
            k.set_block(0, m, &e.scale(a1));
            k.set_block(m, 0, &et.scale(-a2));
            // K = I + skew scaling, provably nonsingular for positive steps
            let a = k.inverse().expect("proximal point system matrix is nonsingular");
            let mut rhs = vec![0.0; dim];
            for i in 0..m {
                rhs[i] = -a1 * b[i];
            }
            for j in 0..n {
                rhs[m + j] = a2 * c[j];
            }
            d = a.matvec(&rhs);
            vec![a]
        }
    };
    Ok((mats, d))
}

/// Substitutes the x-rows into the y-rows: with `A_i = L_i + U_i` split at
/// row block `m`, the Gauss-Seidel matrices are
/// `A'_i = (I + L_1)(L_{i+1} + U_i)` and the offset gains `L_1 d`.
fn gauss_seidel_compose(m: usize, mats: &[Matrix], d: &[f64]) -> (Vec<Matrix>, Vec<f64>) {
    let dim = mats[0].rows();
    let k = mats.len();
    let yx = |a: &Matrix| a.block(m, 0, dim - m, m); // lower-left block
    let a1_yx = yx(&mats[0]);

    let mut out = Vec::with_capacity(k);
    for i in 0..k {
        let mut composed = mats[i].clone();
        // y-rows: A1_yx * (x-rows of A_i) + (y-rows of L_{i+1} + U_i)
        let xx = mats[i].block(0, 0, m, m);
        let xy = mats[i].block(0, m, m, dim - m);
        let next_yx = if i + 1 < k { yx(&mats[i + 1]) } else { Matrix::zeros(dim - m, m) };
        let yy = mats[i].block(m, m, dim - m, dim - m);
        composed.set_block(m, 0, &a1_yx.matmul(&xx).add(&next_yx));
        composed.set_block(m, m, &a1_yx.matmul(&xy).add(&yy));
        out.push(composed);
    }
    let mut d_out = d.to_vec();
    let dx = &d[..m];
    let extra = a1_yx.matvec(dx);
    for (i, v) in extra.iter().enumerate() {
        d_out[m + i] += v;
    }
    (out, d_out)
}

/// Simulated states with their norms and, when a game is attached, the
/// squared saddle distances.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub states: Vec<Vec<f64>>,
    pub norms: Vec<f64>,
    pub delta_sq: Option<Vec<f64>>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn empirical_rate(&self, tail_fraction: f64) -> EmpiricalRate {
        empirical_rate(&self.norms, tail_fraction)
    }

    /// Rate of the saddle-distance sequence `Delta_t = sqrt(delta_sq)`.
    pub fn empirical_delta_rate(&self, tail_fraction: f64) -> Option<EmpiricalRate> {
        let deltas: Vec<f64> = self.delta_sq.as_ref()?.iter().map(|d| d.sqrt()).collect();
        Some(empirical_rate(&deltas, tail_fraction))
    }

    /// CSV with columns `t,norm,delta_sq` (blank when no game is attached)
    /// and optionally one column per state component, all at 17 significant
    /// digits.
    pub fn write_csv(&self, path: &Path, include_state: bool) -> Result<()> {
        std::fs::write(path, self.to_csv(include_state))?;
        Ok(())
    }

    pub fn to_csv(&self, include_state: bool) -> String {
        let mut out = String::from("t,norm,delta_sq");
        if include_state {
            let dim = self.states.first().map_or(0, |s| s.len());
            for i in 0..dim {
                out.push_str(&format!(",z{i}"));
            }
        }
        out.push('\n');
        for (t, state) in self.states.iter().enumerate() {
            out.push_str(&t.to_string());
            out.push(',');
            out.push_str(&fmt_g17(self.norms[t]));
            out.push(',');
            if let Some(d) = &self.delta_sq {
                out.push_str(&fmt_g17(d[t]));
            }
            if include_state {
                for v in state {
                    out.push(',');
                    out.push_str(&fmt_g17(*v));
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Runs the recurrence for `steps` new states. `initial` must hold `k`
/// states in chronological order (oldest first); the returned trajectory
/// includes them, so its length is `steps + k`.
pub fn simulate(
    lds: &LinearDynamicalSystem,
    initial: &[Vec<f64>],
    steps: usize,
    game: Option<&BilinearGame>,
) -> Result<Trajectory> {
    let k = lds.step_count();
    if initial.len() != k {
        return Err(Error::HistoryLength { expected: k, found: initial.len() });
    }
    let mut states: Vec<Vec<f64>> = initial.to_vec();
    for _ in 0..steps {
        let hist: Vec<Vec<f64>> = (0..k).map(|i| states[states.len() - 1 - i].clone()).collect();
        states.push(lds.step(&hist)?);
    }
    let norms = states.iter().map(|s| norm(s)).collect();
    let delta_sq = match game {
        Some(g) => Some(
            states
                .iter()
                .map(|s| g.saddle_distance_z(s).map(|d| d.delta_sq))
                .collect::<Result<Vec<f64>>>()?,
        ),
        None => None,
    };
    Ok(Trajectory { states, norms, delta_sq })
}

/// Convenience wrapper duplicating `z0` as the full initial history, the
/// convention used for the two-step methods throughout.
pub fn simulate_from(
    lds: &LinearDynamicalSystem,
    z0: &[f64],
    steps: usize,
    game: Option<&BilinearGame>,
) -> Result<Trajectory> {
    let initial = vec![z0.to_vec(); lds.step_count()];
    simulate(lds, &initial, steps, game)
}

/// Estimated per-step contraction factor.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum EmpiricalRate {
    Rate(f64),
    /// The tail of the trajectory reached numerical zero.
    ConvergedExactly,
}

impl EmpiricalRate {
    pub fn rate(&self) -> Option<f64> {
        match self {
            EmpiricalRate::Rate(r) => Some(*r),
            EmpiricalRate::ConvergedExactly => None,
        }
    }
}

/// Least-squares fit of `log value` against `t` over the final window;
/// the exponent of the fit is the estimated rate. Per-step ratios oscillate
/// under complex eigenvalues, which the regression averages out.
pub fn empirical_rate(values: &[f64], tail_fraction: f64) -> EmpiricalRate {
    assert!(tail_fraction > 0.0 && tail_fraction <= 1.0);
    let len = values.len();
    let window = ((len as f64 * tail_fraction).ceil() as usize).clamp(2, len);
    let tail = &values[len - window..];
    if tail.iter().any(|v| *v < 1e-290) {
        return EmpiricalRate::ConvergedExactly;
    }
    let logs: Vec<f64> = tail.iter().map(|v| v.ln()).collect();
    let n = logs.len() as f64;
    let t_mean = (logs.len() - 1) as f64 / 2.0;
    let y_mean = logs.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (i, y) in logs.iter().enumerate() {
        let dt = i as f64 - t_mean;
        num += dt * (y - y_mean);
        den += dt * dt;
    }
    EmpiricalRate::Rate((num / den).exp())
}

/// Splitting form `S = M - N - P` of the saddle-point system
/// `S z = (-b, c)`, with the iteration `z+ = M^{-1}N z + M^{-1}P z- + M^{-1}d`.
#[derive(Clone, Debug)]
pub struct SplittingForm {
    pub m: Matrix,
    pub n: Matrix,
    pub p: Matrix,
    /// Right-hand side `(-b, c)` of the saddle equations.
    pub rhs: Vec<f64>,
}

/// The block matrix `S = [[0, E], [-E^T, 0]]`.
pub fn saddle_matrix(game: &BilinearGame) -> Matrix {
    let (m, n) = (game.rows(), game.cols());
    let mut s = Matrix::zeros(m + n, m + n);
    s.set_block(0, m, game.matrix());
    s.set_block(m, 0, &game.matrix().transpose().scale(-1.0));
    s
}

/// Splitting matrices for a spec. For the one-step methods `P = 0`; the OGD
/// splitting requires `alpha_i != beta_i` (the entries carry
/// `1/(alpha_i - beta_i)`).
pub fn splitting_form(spec: &AlgorithmSpec, game: &BilinearGame) -> Result<SplittingForm> {
    spec.validate()?;
    let e = game.matrix();
    let et = e.transpose();
    let (m, n) = (game.rows(), game.cols());
    let dim = m + n;
    let (a1, a2, b1, b2) = (spec.alpha1, spec.alpha2, spec.beta1, spec.beta2);
    let s = saddle_matrix(game);
    let gs = spec.style == UpdateStyle::GaussSeidel;

    let id_m = Matrix::identity(m);
    let id_n = Matrix::identity(n);
    let zero = Matrix::zeros(dim, dim);

    let (mm, p) = match spec.kind {
        AlgorithmKind::Gd => {
            let mut mm = Matrix::zeros(dim, dim);
            mm.set_block(0, 0, &id_m.scale(1.0 / a1));
            mm.set_block(m, m, &id_n.scale(1.0 / a2));
            if gs {
                mm.set_block(m, 0, &et.scale(-1.0));
            }
            (mm, zero)
        }
        AlgorithmKind::Eg => {
            // assembled as M^{-1}; the beta that scales E E^T in the x-row
            // is beta2 = alpha1*gamma2, matching the update matrix
            let mut minv = Matrix::zeros(dim, dim);
            minv.set_block(0, 0, &id_m.scale(a1));
            minv.set_block(0, m, &e.scale(-b2));
            if gs {
                minv.set_block(m, 0, &et.scale(b1 + a1 * a2));
                minv.set_block(m, m, &id_n.sub(&et.matmul(e).scale(b2)).scale(a2));
            } else {
                minv.set_block(m, 0, &et.scale(b1));
                minv.set_block(m, m, &id_n.scale(a2));
            }
            let mm = minv
                .inverse()
                .map_err(|_| Error::UndefinedSplitting("extra-gradient M is singular".into()))?;
            (mm, zero)
        }
        AlgorithmKind::Ogd => {
            if (a1 - b1).abs() < 1e-14 || (a2 - b2).abs() < 1e-14 {
                return Err(Error::UndefinedSplitting(
                    "OGD splitting needs alpha_i != beta_i".into(),
                ));
            }
            let mut mm = Matrix::zeros(dim, dim);
            mm.set_block(0, 0, &id_m.scale(1.0 / (a1 - b1)));
            mm.set_block(m, m, &id_n.scale(1.0 / (a2 - b2)));
            if gs {
                mm.set_block(m, 0, &et.scale(-a2 / (a2 - b2)));
            }
            let mut p = Matrix::zeros(dim, dim);
            p.set_block(0, m, &e.scale(b1 / (a1 - b1)));
            if !gs {
                p.set_block(m, 0, &et.scale(-b2 / (a2 - b2)));
            }
            (mm, p)
        }
        AlgorithmKind::Momentum => {
            let mut mm = Matrix::zeros(dim, dim);
            mm.set_block(0, 0, &id_m.scale(1.0 / a1));
            mm.set_block(m, m, &id_n.scale(1.0 / a2));
            if gs {
                mm.set_block(m, 0, &et.scale(-1.0));
            }
            let mut p = Matrix::zeros(dim, dim);
            p.set_block(0, 0, &id_m.scale(-b1 / a1));
            p.set_block(m, m, &id_n.scale(-b2 / a2));
            (mm, p)
        }
        AlgorithmKind::Pp => {
            // implicit method: M carries the whole coupling
            let mut mm = Matrix::zeros(dim, dim);
            mm.set_block(0, 0, &id_m.scale(1.0 / a1));
            mm.set_block(0, m, e);
            mm.set_block(m, 0, &et.scale(-1.0));
            mm.set_block(m, m, &id_n.scale(1.0 / a2));
            (mm, zero)
        }
    };

    let nn = mm.sub(&s).sub(&p);
    let rhs: Vec<f64> =
        game.b().iter().map(|v| -v).chain(game.c().iter().copied()).collect();
    Ok(SplittingForm { m: mm, n: nn, p, rhs })
}

/// Maximum elementwise deviation between `(A_1, A_2, d)` of the LDS and
/// `(M^{-1}N, M^{-1}P, M^{-1}d)` of the splitting.
pub fn verify_splitting(lds: &LinearDynamicalSystem, sf: &SplittingForm) -> Result<f64> {
    let m_inv_n = sf.m.solve_many(&sf.n)?;
    let mut dev = lds.matrices()[0].max_abs_diff(&m_inv_n);
    if lds.step_count() == 2 {
        let m_inv_p = sf.m.solve_many(&sf.p)?;
        dev = dev.max(lds.matrices()[1].max_abs_diff(&m_inv_p));
    } else {
        dev = dev.max(sf.p.max_abs());
    }
    let m_inv_d = sf.m.solve(&sf.rhs)?;
    for (a, b) in lds.offset().iter().zip(&m_inv_d) {
        dev = dev.max((a - b).abs());
    }
    Ok(dev)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::BilinearGame;
    use crate::linalg::Matrix;
    use crate::rng::SplitMix64;
    use AlgorithmKind::*;

    fn scalar_game() -> BilinearGame {
        BilinearGame::from_matrix(Matrix::diag(&[1.0])).unwrap()
    }

    #[test]
    fn gd_jacobi_unit_matrix() {
        let spec = AlgorithmSpec::new(Gd, UpdateStyle::Jacobi, 1.0, 1.0, 0.0, 0.0).unwrap();
        let lds = build_lds(&spec, &scalar_game()).unwrap();
        let a = &lds.matrices()[0];
        assert_eq!(a[(0, 0)], 1.0);
        assert_eq!(a[(0, 1)], -1.0);
        assert_eq!(a[(1, 0)], 1.0);
        assert_eq!(a[(1, 1)], 1.0);
    }

    #[test]
    fn gd_gs_unit_matrix() {
        // x' = x - y, y' = y + x' = x: A = [[1,-1],[1,0]]
        let spec = AlgorithmSpec::new(Gd, UpdateStyle::GaussSeidel, 1.0, 1.0, 0.0, 0.0).unwrap();
        let lds = build_lds(&spec, &scalar_game()).unwrap();
        let a = &lds.matrices()[0];
        assert_eq!(a[(0, 0)], 1.0);
        assert_eq!(a[(0, 1)], -1.0);
        assert_eq!(a[(1, 0)], 1.0);
        assert_eq!(a[(1, 1)], 0.0);
    }

    #[test]
    fn eg_one_step_exact() {
        // alpha ~ 0, beta1 = beta2 = 1/sigma^2 kills the state in one step
        let game = BilinearGame::from_matrix(Matrix::diag(&[2.0])).unwrap();
        let spec = AlgorithmSpec::new(Eg, UpdateStyle::Jacobi, 1e-300, 1e-300, 0.25, 0.25).unwrap();
        let lds = build_lds(&spec, &game).unwrap();
        let a = &lds.matrices()[0];
        assert!(a[(0, 0)].abs() < 1e-12);
        assert!(a[(1, 1)].abs() < 1e-12);
    }

    #[test]
    fn pp_rejects_gs() {
        assert!(AlgorithmSpec::new(Pp, UpdateStyle::GaussSeidel, 1.0, 1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn step_identity() {
        let lds = LinearDynamicalSystem::new(vec![Matrix::identity(2)], vec![0.0, 0.0]);
        let z = lds.step(&[vec![1.0, 2.0]]).unwrap();
        assert_eq!(z, vec![1.0, 2.0]);
    }

    #[test]
    fn step_two_cycle() {
        // k=2, A1 = 0, A2 = I cycles the initial pair
        let lds = LinearDynamicalSystem::new(
            vec![Matrix::zeros(2, 2), Matrix::identity(2)],
            vec![0.0, 0.0],
        );
        let z0 = vec![1.0, 0.0];
        let z1 = vec![0.0, 1.0];
        let traj = simulate(&lds, &[z0.clone(), z1.clone()], 4, None).unwrap();
        assert_eq!(traj.states[2], z0);
        assert_eq!(traj.states[3], z1);
        assert_eq!(traj.states[4], z0);
    }

    #[test]
    fn step_history_mismatch() {
        let lds = LinearDynamicalSystem::new(vec![Matrix::identity(2)], vec![0.0, 0.0]);
        assert!(lds.step(&[vec![1.0, 0.0], vec![0.0, 1.0]]).is_err());
    }

    #[test]
    fn gd_jacobi_norm_growth() {
        // each step multiplies the norm by sqrt(1 + alpha^2 sigma^2)
        let spec = AlgorithmSpec::new(Gd, UpdateStyle::Jacobi, 1.0, 1.0, 0.0, 0.0).unwrap();
        let lds = build_lds(&spec, &scalar_game()).unwrap();
        let z1 = lds.step(&[vec![1.0, 0.0]]).unwrap();
        assert_eq!(z1, vec![1.0, 1.0]);
        let z2 = lds.step(&[z1]).unwrap();
        assert_eq!(z2, vec![0.0, 2.0]);
        let traj = simulate_from(&lds, &[1.0, 0.0], 50, None).unwrap();
        let rate = traj.empirical_rate(0.5).rate().unwrap();
        assert!((rate - 2.0f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn empirical_rate_pure_geometric() {
        let values: Vec<f64> = (0..200).map(|t| 0.5f64.powi(t) * 2.0f64.sqrt()).collect();
        match empirical_rate(&values, 0.5) {
            EmpiricalRate::Rate(r) => assert!((r - 0.5).abs() < 1e-9),
            _ => panic!("expected a rate"),
        }
    }

    #[test]
    fn gs_gd_limit_cycle_rate_one() {
        let spec = AlgorithmSpec::new(Gd, UpdateStyle::GaussSeidel, 1.0, 1.0, 0.0, 0.0).unwrap();
        let lds = build_lds(&spec, &scalar_game()).unwrap();
        let traj = simulate_from(&lds, &[0.7, -0.3], 2000, None).unwrap();
        let rate = traj.empirical_rate(0.5).rate().unwrap();
        assert!((rate - 1.0).abs() < 1e-3, "rate {rate}");
    }

    #[test]
    fn gs_ogd_superlinear_flags_exact_convergence() {
        // alpha = sqrt(2), beta1 = 1/sqrt(2), beta2 = 0 at sigma = 1:
        // all roots vanish and the iterates hit numerical zero
        let spec = AlgorithmSpec::new(
            Ogd,
            UpdateStyle::GaussSeidel,
            2.0f64.sqrt(),
            2.0f64.sqrt(),
            1.0 / 2.0f64.sqrt(),
            0.0,
        )
        .unwrap();
        let lds = build_lds(&spec, &scalar_game()).unwrap();
        let traj = simulate_from(&lds, &[0.9, 0.4], 2000, None).unwrap();
        assert_eq!(traj.empirical_rate(0.5), EmpiricalRate::ConvergedExactly);
    }

    #[test]
    fn one_analytic_step_matches_lds() {
        // hand-evaluated updates on f = x^T E y for every method
        let mut rng = SplitMix64::new(21);
        let e = Matrix::from_fn(2, 3, |_, _| rng.uniform(-1.0, 1.0));
        let game = BilinearGame::from_matrix(e.clone()).unwrap();
        let x0: Vec<f64> = (0..2).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let y0: Vec<f64> = (0..3).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let z0: Vec<f64> = x0.iter().chain(&y0).copied().collect();
        let et = e.transpose();
        let (a1, a2, b1, b2) = (0.31, 0.47, 0.13, -0.21);

        let grad_x = |y: &[f64]| e.matvec(y);
        let grad_y = |x: &[f64]| et.matvec(x);

        for kind in [Gd, Eg, Ogd, Momentum] {
            for style in [UpdateStyle::Jacobi, UpdateStyle::GaussSeidel] {
                let spec = AlgorithmSpec::new(kind, style, a1, a2, b1, b2).unwrap();
                let lds = build_lds(&spec, &game).unwrap();
                let initial = vec![z0.clone(); lds.step_count()];
                let z1 = simulate(&lds, &initial, 1, None).unwrap().states.last().unwrap().clone();

                // analytic x-update (identical for Jacobi and GS)
                let x1: Vec<f64> = match kind {
                    Gd => x0.iter().zip(grad_x(&y0)).map(|(x, g)| x - a1 * g).collect(),
                    Eg => {
                        let gamma2 = b2 / a1;
                        let yhalf: Vec<f64> =
                            y0.iter().zip(grad_y(&x0)).map(|(y, g)| y + gamma2 * g).collect();
                        x0.iter().zip(grad_x(&yhalf)).map(|(x, g)| x - a1 * g).collect()
                    }
                    // previous gradient equals current at the duplicated start
                    Ogd => x0
                        .iter()
                        .zip(grad_x(&y0))
                        .map(|(x, g)| x - a1 * g + b1 * g)
                        .collect(),
                    // x(-1) = x(0): momentum term vanishes on the first step
                    Momentum => x0.iter().zip(grad_x(&y0)).map(|(x, g)| x - a1 * g).collect(),
                    Pp => unreachable!(),
                };

                let x_for_y: &[f64] = if style == UpdateStyle::GaussSeidel { &x1 } else { &x0 };
                let y1: Vec<f64> = match kind {
                    Gd => y0.iter().zip(grad_y(x_for_y)).map(|(y, g)| y + a2 * g).collect(),
                    Eg => {
                        let gamma1 = b1 / a2;
                        let xhalf: Vec<f64> = x_for_y
                            .iter()
                            .zip(grad_x(&y0))
                            .map(|(x, g)| x - gamma1 * g)
                            .collect();
                        y0.iter().zip(grad_y(&xhalf)).map(|(y, g)| y + a2 * g).collect()
                    }
                    // the "previous" y-gradient at the duplicated start is
                    // taken at x(0) for both styles
                    Ogd => {
                        let prev = grad_y(&x0);
                        y0.iter()
                            .zip(grad_y(x_for_y))
                            .zip(prev)
                            .map(|((y, g), gp)| y + a2 * g - b2 * gp)
                            .collect()
                    }
                    Momentum => y0.iter().zip(grad_y(x_for_y)).map(|(y, g)| y + a2 * g).collect(),
                    Pp => unreachable!(),
                };

                let expected: Vec<f64> = x1.iter().chain(&y1).copied().collect();
                for (a, b) in z1.iter().zip(&expected) {
                    assert!(
                        (a - b).abs() <= 1e-12,
                        "{kind:?} {style:?}: {z1:?} vs {expected:?}"
                    );
                }
            }
        }
    }

    #[test]
    fn gs_matches_inverse_form() {
        // (I - L1)^{-1} (L_{i+1} + U_i) must equal the composed matrices
        let mut rng = SplitMix64::new(33);
        let e = Matrix::from_fn(3, 2, |_, _| rng.uniform(-1.0, 1.0));
        let game = BilinearGame::from_matrix(e).unwrap();
        for kind in [Gd, Eg, Ogd, Momentum] {
            let spec = AlgorithmSpec::new(kind, UpdateStyle::GaussSeidel, 0.4, 0.9, 0.2, -0.3).unwrap();
            let gs = build_lds(&spec, &game).unwrap();
            let jac =
                build_lds(&AlgorithmSpec { style: UpdateStyle::Jacobi, ..spec }, &game).unwrap();
            let dim = gs.dim();
            let m = game.rows();
            let k = jac.step_count();
            let lower = |a: &Matrix| {
                let mut l = Matrix::zeros(dim, dim);
                l.set_block(m, 0, &a.block(m, 0, dim - m, m));
                l
            };
            let upper = |a: &Matrix| a.sub(&lower(a));
            let il1 = Matrix::identity(dim).sub(&lower(&jac.matrices()[0]));
            let inv = il1.inverse().unwrap();
            for i in 0..k {
                let next = if i + 1 < k {
                    lower(&jac.matrices()[i + 1])
                } else {
                    Matrix::zeros(dim, dim)
                };
                let expect = inv.matmul(&next.add(&upper(&jac.matrices()[i])));
                assert!(
                    expect.max_abs_diff(&gs.matrices()[i]) < 1e-12,
                    "{kind:?} step {i}"
                );
            }
        }
    }

    #[test]
    fn splitting_identity_holds() {
        let mut rng = SplitMix64::new(55);
        let e = Matrix::from_fn(3, 3, |_, _| rng.uniform(-1.0, 1.0));
        let game = BilinearGame::from_matrix(e).unwrap();
        let s = saddle_matrix(&game);
        for kind in [Gd, Eg, Ogd, Momentum, Pp] {
            for style in [UpdateStyle::Jacobi, UpdateStyle::GaussSeidel] {
                if kind == Pp && style == UpdateStyle::GaussSeidel {
                    continue;
                }
                let spec = AlgorithmSpec::new(kind, style, 0.7, 0.5, 0.25, -0.15).unwrap();
                let sf = splitting_form(&spec, &game).unwrap();
                let resid = sf.m.sub(&sf.n).sub(&sf.p).max_abs_diff(&s);
                assert!(resid < 1e-10, "{kind:?} {style:?}: {resid}");
            }
        }
    }

    #[test]
    fn splitting_reproduces_lds() {
        let mut rng = SplitMix64::new(77);
        for trial in 0..5 {
            let e = Matrix::from_fn(3, 3, |_, _| rng.uniform(-1.0, 1.0));
            // random feasible linear terms via b = E b', c = E^T c'
            let bp: Vec<f64> = (0..3).map(|_| rng.uniform(-0.5, 0.5)).collect();
            let cp: Vec<f64> = (0..3).map(|_| rng.uniform(-0.5, 0.5)).collect();
            let b = e.matvec(&bp);
            let c = e.transpose().matvec(&cp);
            let game = BilinearGame::new(e, b, c).unwrap();
            for kind in [Gd, Eg, Ogd, Momentum, Pp] {
                for style in [UpdateStyle::Jacobi, UpdateStyle::GaussSeidel] {
                    if kind == Pp && style == UpdateStyle::GaussSeidel {
                        continue;
                    }
                    let spec =
                        AlgorithmSpec::new(kind, style, 0.6, 0.45, 0.2, -0.1).unwrap();
                    let lds = build_lds(&spec, &game).unwrap();
                    let sf = splitting_form(&spec, &game).unwrap();
                    let dev = verify_splitting(&lds, &sf).unwrap();
                    assert!(dev <= 1e-9, "{kind:?} {style:?} trial {trial}: {dev}");
                }
            }
        }
    }

    #[test]
    fn ogd_alpha_equals_beta_is_undefined() {
        let game = scalar_game();
        let spec = AlgorithmSpec::new(Ogd, UpdateStyle::Jacobi, 0.5, 0.5, 0.5, 0.1).unwrap();
        assert!(matches!(
            splitting_form(&spec, &game),
            Err(Error::UndefinedSplitting(_))
        ));
    }

    #[test]
    fn normalized_preserves_spectrum() {
        use crate::charpoly::char_poly_spec;
        use crate::spectral::spectral_radius;
        let spec = AlgorithmSpec::new(Ogd, UpdateStyle::Jacobi, 0.3, 1.2, 0.2, -0.4).unwrap();
        let norm_spec = spec.normalized();
        assert!((norm_spec.alpha1 - norm_spec.alpha2).abs() < 1e-15);
        for sigma in [0.5, 1.0, 2.0] {
            let r1 = spectral_radius(&char_poly_spec(&spec, sigma).unwrap()).unwrap();
            let r2 = spectral_radius(&char_poly_spec(&norm_spec, sigma).unwrap()).unwrap();
            assert!((r1 - r2).abs() < 1e-10);
        }
    }
}
