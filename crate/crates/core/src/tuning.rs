//! Optimal parameter choices: closed forms for extra-gradient and the two
//! tractable OGD specializations, the radius-equalizing step size for
//! Gauss-Seidel momentum, and exhaustive grid search.
//!
//! All rates depend on the extreme singular values only, through the
//! condition number `kappa = sigma1 / sigman`.

use rayon::prelude::*;
use serde::Serialize;

use crate::charpoly;
use crate::dynamics::{AlgorithmKind, UpdateStyle};
use crate::error::{Error, Result};
use crate::spectral;
use crate::stability::{Axis, ParamGrid};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TuningMethod {
    ClosedForm,
    Search,
}

/// A tuned parameter triple with its predicted convergence exponent.
#[derive(Clone, Debug, Serialize)]
pub struct TuningResult {
    pub kind: AlgorithmKind,
    pub style: UpdateStyle,
    pub alpha: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub predicted_rate: f64,
    /// Large-kappa expansion of the rate, when the theory gives one.
    pub asymptotic_rate: Option<f64>,
    pub method: TuningMethod,
}

impl TuningResult {
    /// Spectral radius of the characteristic polynomial at the tuned
    /// parameters and the given singular value.
    pub fn realized_radius(&self, sigma: f64) -> Result<f64> {
        let p = charpoly::char_poly(
            self.kind, self.style, self.alpha, self.alpha, self.beta1, self.beta2, sigma,
        )?;
        spectral::spectral_radius(&p)
    }
}

fn check_sigmas(sigma1: f64, sigman: f64) -> Result<()> {
    if !(sigma1 >= sigman && sigman > 0.0) || !sigma1.is_finite() {
        return Err(Error::InvalidSpec(format!(
            "need sigma1 >= sigman > 0, got sigma1={sigma1}, sigman={sigman}"
        )));
    }
    Ok(())
}

/// Optimal extra-gradient: rate `(kappa^2-1)/(kappa^2+1)` at
/// `beta1 = beta2 = 2/(sigma1^2 + sigman^2)` in the limit of vanishing
/// step size. The limit is represented by the finite proxy
/// `alpha = 1e-6 * sigman` (an exactly zero step would freeze both
/// players); the reported rate is the analytic limit value.
///
/// The same parameters are optimal for both Jacobi and Gauss-Seidel.
pub fn eg_optimal(sigma1: f64, sigman: f64, style: UpdateStyle) -> Result<TuningResult> {
    check_sigmas(sigma1, sigman)?;
    let kappa2 = (sigma1 / sigman) * (sigma1 / sigman);
    let beta = 2.0 / (sigma1 * sigma1 + sigman * sigman);
    let rate = (kappa2 - 1.0) / (kappa2 + 1.0);
    Ok(TuningResult {
        kind: AlgorithmKind::Eg,
        style,
        alpha: 1e-6 * sigman,
        beta1: beta,
        beta2: beta,
        predicted_rate: rate,
        asymptotic_rate: Some(1.0 - 2.0 / kappa2),
        method: TuningMethod::ClosedForm,
    })
}

/// Optimal Jacobi OGD in the classic `alpha = 2*beta`, `beta1 = beta2`
/// family. Requires `sigma1 > sigman`; the equal-singular-value case is
/// routed to [`grid_search`].
pub fn jacobi_ogd_optimal(sigma1: f64, sigman: f64) -> Result<TuningResult> {
    check_sigmas(sigma1, sigman)?;
    if sigma1 - sigman <= 1e-12 * sigma1 {
        // the case split behind the closed form degenerates
        return grid_search(
            AlgorithmKind::Ogd,
            UpdateStyle::Jacobi,
            sigma1,
            &ParamGrid {
                alpha: Axis::new(0.05 / sigma1, 2.0 / sigma1, 0.05 / sigma1),
                beta1: Axis::new(-2.0 / sigma1, 2.0 / sigma1, 0.05 / sigma1),
                beta2: Axis::new(-2.0 / sigma1, 2.0 / sigma1, 0.05 / sigma1),
            },
        );
    }
    let s1 = sigma1 * sigma1;
    let sn = sigman * sigman;
    let kappa2 = s1 / sn;
    let root = ((s1 - sn) * (9.0 * s1 - sn)).sqrt();
    let r_sq = 0.5
        + ((s1 - sn) * (5.0 * s1 - sn + root)).sqrt() / (4.0 * 2.0f64.sqrt() * s1);
    let beta = (1.0 / (4.0 * 2.0f64.sqrt()))
        * ((3.0 * s1 * s1 - (s1 - sn).powf(1.5) * (9.0 * s1 - sn).sqrt() + 6.0 * s1 * sn
            - sn * sn)
            / (s1 * s1 * sn))
            .sqrt();
    Ok(TuningResult {
        kind: AlgorithmKind::Ogd,
        style: UpdateStyle::Jacobi,
        alpha: 2.0 * beta,
        beta1: beta,
        beta2: beta,
        predicted_rate: r_sq.sqrt(),
        asymptotic_rate: Some(1.0 - 1.0 / (6.0 * kappa2)),
        method: TuningMethod::ClosedForm,
    })
}

/// Optimal Gauss-Seidel OGD with `beta2 = 0`: rate
/// `sqrt((kappa^2-1)/(kappa^2+1))` at `alpha = sqrt(2)/sigma1` and
/// `beta1 = sqrt(2)*sigma1/(sigma1^2+sigman^2)`. The two betas can be
/// interchanged.
pub fn gs_ogd_optimal(sigma1: f64, sigman: f64) -> Result<TuningResult> {
    check_sigmas(sigma1, sigman)?;
    let kappa2 = (sigma1 / sigman) * (sigma1 / sigman);
    Ok(TuningResult {
        kind: AlgorithmKind::Ogd,
        style: UpdateStyle::GaussSeidel,
        alpha: 2.0f64.sqrt() / sigma1,
        beta1: 2.0f64.sqrt() * sigma1 / (sigma1 * sigma1 + sigman * sigman),
        beta2: 0.0,
        predicted_rate: ((kappa2 - 1.0) / (kappa2 + 1.0)).sqrt(),
        asymptotic_rate: Some(1.0 - 1.0 / kappa2),
        method: TuningMethod::ClosedForm,
    })
}

/// Roots of the Gauss-Seidel momentum cubic
/// `(lambda + 1/2)(lambda - 1)^2 + t^2 lambda^2` at `t = alpha * sigma`:
/// one real root in `(-1, -1/2]` and a conjugate pair. Returns
/// `(|real root|, pair modulus)`.
fn gs_momentum_radii(t: f64) -> Result<(f64, f64)> {
    let p = charpoly::RealPolynomial::new(vec![1.0, t * t - 1.5, 0.0, 0.5])?;
    let roots = spectral::roots(&p)?;
    let mut real_abs = None;
    let mut pair = None;
    for r in &roots {
        if r.im.abs() < 1e-9 && r.re < 0.0 {
            real_abs = Some(r.re.abs());
        } else if r.im > 0.0 {
            pair = Some(r.norm());
        }
    }
    match (real_abs, pair) {
        (Some(a), Some(b)) => Ok((a, b)),
        _ => Err(Error::BracketingFailure(format!(
            "unexpected root structure of the momentum cubic at t={t}: {roots:?}"
        ))),
    }
}

/// Optimal Gauss-Seidel momentum with `beta1 = -1/2`, `beta2 = 0`.
///
/// The step size equalizes the dominant moduli at the extreme singular
/// values: the real cubic root at `sigma1` against the complex-pair modulus
/// at `sigman`. The real root grows and the pair modulus shrinks in `t`, so
/// bisection on `alpha` over `(0, sqrt(2)/sigma1)` finds the crossing.
pub fn gs_momentum_optimal(sigma1: f64, sigman: f64) -> Result<TuningResult> {
    check_sigmas(sigma1, sigman)?;
    let kappa2 = (sigma1 / sigman) * (sigma1 / sigman);
    let mut lo = 0.0f64;
    let mut hi = 2.0f64.sqrt() / sigma1;
    // g(alpha) = pair(alpha*sigman) - real(alpha*sigma1), decreasing
    let g = |alpha: f64| -> Result<f64> {
        let (real1, _) = gs_momentum_radii(alpha * sigma1)?;
        let (_, pairn) = gs_momentum_radii(alpha * sigman)?;
        Ok(pairn - real1)
    };
    let g_hi = g(hi * (1.0 - 1e-12))?;
    if g_hi > 0.0 {
        return Err(Error::BracketingFailure(
            "momentum equalization does not bracket".into(),
        ));
    }
    while hi - lo > 1e-10 {
        let mid = 0.5 * (lo + hi);
        if g(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let alpha = 0.5 * (lo + hi);
    let (real1, _) = gs_momentum_radii(alpha * sigma1)?;
    Ok(TuningResult {
        kind: AlgorithmKind::Momentum,
        style: UpdateStyle::GaussSeidel,
        alpha,
        beta1: -0.5,
        beta2: 0.0,
        predicted_rate: real1,
        asymptotic_rate: Some(1.0 - 2.0 / (9.0 * kappa2)),
        method: TuningMethod::Search,
    })
}

/// Exhaustive spectral-radius minimization on a sampled box, ties broken by
/// lexicographic parameter order.
pub fn grid_search(
    kind: AlgorithmKind,
    style: UpdateStyle,
    sigma: f64,
    grid: &ParamGrid,
) -> Result<TuningResult> {
    if sigma.is_nan() || sigma <= 0.0 {
        return Err(Error::InvalidSpec(format!("sigma must be positive, got {sigma}")));
    }
    if kind == AlgorithmKind::Pp && style == UpdateStyle::GaussSeidel {
        return Err(Error::InvalidSpec("proximal point has no Gauss-Seidel variant".into()));
    }
    let points = grid.points();
    if points.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let best = points
        .par_iter()
        .map(|&[a, b1, b2]| {
            let p = charpoly::char_poly_unchecked(kind, style, a, a, b1, b2, sigma);
            let radius = spectral::spectral_radius(&p).unwrap_or(f64::INFINITY);
            (radius, a, b1, b2)
        })
        .min_by(|x, y| x.partial_cmp(y).expect("finite radii"))
        .expect("nonempty grid");
    Ok(TuningResult {
        kind,
        style,
        alpha: best.1,
        beta1: best.2,
        beta2: best.3,
        predicted_rate: best.0,
        asymptotic_rate: None,
        method: TuningMethod::Search,
    })
}
