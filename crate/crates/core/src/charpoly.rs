//! Per-singular-value characteristic polynomials of the gradient methods,
//! the Jacobi-to-Gauss-Seidel polynomial transform, and the numeric
//! characteristic polynomial of a whole linear dynamical system.
//!
//! For a bilinear game the spectrum of every method's iteration decomposes
//! over the singular values sigma of `E`. Each method contributes a fixed
//! low-degree polynomial template in `lambda` with coefficients depending on
//! the step sizes. The Gauss-Seidel variant of a template is obtained from
//! the Jacobi one by multiplying the part contributed by the second player's
//! coupling block by an extra factor of `lambda`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::{AlgorithmKind, AlgorithmSpec, LinearDynamicalSystem, UpdateStyle};
use crate::error::{Error, Result};
use crate::game::BilinearGame;
use crate::linalg::complex_det;
use crate::spectral::{self, SigmaSpectrum, SpectralReport};

/// Real polynomial stored leading-coefficient first.
///
/// The leading coefficient is nonzero; trailing zeros are permitted and
/// correspond to roots at the origin.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RealPolynomial {
    coeffs: Vec<f64>,
}

impl RealPolynomial {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() || coeffs[0] == 0.0 {
            return Err(Error::DegenerateLeadingCoefficient);
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("polynomial coefficient"));
        }
        Ok(RealPolynomial { coeffs })
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Divides through by the leading coefficient.
    pub fn monic(&self) -> RealPolynomial {
        let lead = self.coeffs[0];
        RealPolynomial { coeffs: self.coeffs.iter().map(|c| c / lead).collect() }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().fold(0.0, |acc, c| acc * x + c)
    }

    pub fn eval_complex(&self, z: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .fold(Complex64::new(0.0, 0.0), |acc, c| acc * z + c)
    }

    /// Coefficients of `p(r * lambda)`; used by the r-Schur rescaling.
    pub fn scale_lambda(&self, r: f64) -> RealPolynomial {
        let n = self.degree();
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| c * r.powi((n - i) as i32))
            .collect();
        RealPolynomial { coeffs }
    }

    /// Multiplies by `lambda^k`.
    pub fn shift_up(&self, k: usize) -> RealPolynomial {
        let mut coeffs = self.coeffs.clone();
        coeffs.resize(coeffs.len() + k, 0.0);
        RealPolynomial { coeffs }
    }

    pub fn mul(&self, other: &RealPolynomial) -> RealPolynomial {
        let mut coeffs = vec![0.0; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        RealPolynomial { coeffs }
    }

    /// Monic polynomial with the given roots; conjugate pairs must both be
    /// listed so the imaginary parts cancel.
    pub fn from_roots(roots: &[Complex64]) -> RealPolynomial {
        let mut coeffs = vec![Complex64::new(1.0, 0.0)];
        for r in roots {
            let mut next = vec![Complex64::new(0.0, 0.0); coeffs.len() + 1];
            for (i, c) in coeffs.iter().enumerate() {
                next[i] += c;
                next[i + 1] -= c * r;
            }
            coeffs = next;
        }
        RealPolynomial { coeffs: coeffs.iter().map(|c| c.re).collect() }
    }
}

/// Adds two leading-first coefficient vectors, aligning constant terms.
fn add_desc(a: &[f64], b: &[f64]) -> Vec<f64> {
    let n = a.len().max(b.len());
    let mut out = vec![0.0; n];
    for (i, &v) in a.iter().enumerate() {
        out[n - a.len() + i] += v;
    }
    for (i, &v) in b.iter().enumerate() {
        out[n - b.len() + i] += v;
    }
    out
}

/// Splits the Jacobi characteristic polynomial into `f + g`, where `g`
/// collects the terms produced by the second player's coupling block.
/// The Jacobi polynomial is `f + g` and the Gauss-Seidel one is
/// `f + lambda * g`.
fn char_poly_parts(
    kind: AlgorithmKind,
    a1: f64,
    a2: f64,
    b1: f64,
    b2: f64,
    sigma: f64,
) -> (Vec<f64>, Vec<f64>) {
    let s2 = sigma * sigma;
    match kind {
        AlgorithmKind::Gd => {
            // (lambda - 1)^2 + a1*a2*s2
            (vec![1.0, -2.0, 1.0], vec![a1 * a2 * s2])
        }
        AlgorithmKind::Eg => {
            // (lambda-1)^2 + (b1+b2)s2(lambda-1) + b1*b2*s2^2  +  a1*a2*s2
            let f = add_desc(
                &[1.0, -2.0, 1.0],
                &add_desc(&[(b1 + b2) * s2, -(b1 + b2) * s2], &[b1 * b2 * s2 * s2]),
            );
            (f, vec![a1 * a2 * s2])
        }
        AlgorithmKind::Ogd => {
            // lambda^2 (lambda-1)^2  +  (lambda a1 - b1)(lambda a2 - b2) s2
            let f = vec![1.0, -2.0, 1.0, 0.0, 0.0];
            let g = vec![a1 * a2 * s2, -(a1 * b2 + a2 * b1) * s2, b1 * b2 * s2];
            (f, g)
        }
        AlgorithmKind::Momentum => {
            // (lambda-1)^2 (lambda-b1)(lambda-b2)  +  a1*a2*s2*lambda^2
            let sq = RealPolynomial { coeffs: vec![1.0, -2.0, 1.0] };
            let betas = RealPolynomial { coeffs: vec![1.0, -(b1 + b2), b1 * b2] };
            let f = sq.mul(&betas).coeffs;
            let g = vec![a1 * a2 * s2, 0.0, 0.0];
            (f, g)
        }
        AlgorithmKind::Pp => {
            // (1/lambda - 1)^2 + a1*a2*s2 = 0, cleared to a quadratic
            (vec![1.0 + a1 * a2 * s2, -2.0, 1.0], vec![])
        }
    }
}

fn validate_params(kind: AlgorithmKind, style: UpdateStyle, a1: f64, a2: f64, sigma: f64) -> Result<()> {
    if sigma.is_nan() || sigma <= 0.0 || !sigma.is_finite() {
        return Err(Error::InvalidSpec(format!("sigma must be positive, got {sigma}")));
    }
    if a1.is_nan() || a2.is_nan() || a1 <= 0.0 || a2 <= 0.0 || !a1.is_finite() || !a2.is_finite() {
        return Err(Error::InvalidSpec(format!(
            "step sizes must be positive, got alpha1={a1}, alpha2={a2}"
        )));
    }
    if kind == AlgorithmKind::Pp && style == UpdateStyle::GaussSeidel {
        return Err(Error::InvalidSpec("proximal point has no Gauss-Seidel variant".into()));
    }
    Ok(())
}

/// Characteristic polynomial of one algorithm at a single singular value.
///
/// Degrees: GD, EG and PP give quadratics; Jacobi OGD and momentum give
/// quartics; Gauss-Seidel OGD is returned as the reduced cubic (its quartic
/// form always carries a root at the origin, which is factored out).
pub fn char_poly(
    kind: AlgorithmKind,
    style: UpdateStyle,
    alpha1: f64,
    alpha2: f64,
    beta1: f64,
    beta2: f64,
    sigma: f64,
) -> Result<RealPolynomial> {
    validate_params(kind, style, alpha1, alpha2, sigma)?;
    Ok(char_poly_unchecked(kind, style, alpha1, alpha2, beta1, beta2, sigma))
}

/// Same as [`char_poly`] but without parameter validation, so heat maps can
/// sample the closure of the parameter region (e.g. alpha = 0).
pub fn char_poly_unchecked(
    kind: AlgorithmKind,
    style: UpdateStyle,
    alpha1: f64,
    alpha2: f64,
    beta1: f64,
    beta2: f64,
    sigma: f64,
) -> RealPolynomial {
    let (f, g) = char_poly_parts(kind, alpha1, alpha2, beta1, beta2, sigma);
    let coeffs = match style {
        UpdateStyle::Jacobi => add_desc(&f, &g),
        UpdateStyle::GaussSeidel => {
            let mut shifted = g;
            shifted.push(0.0);
            let mut coeffs = add_desc(&f, &shifted);
            if kind == AlgorithmKind::Ogd {
                // the quartic has an exact root at the origin; drop it
                debug_assert_eq!(coeffs.pop(), Some(0.0));
            }
            coeffs
        }
    };
    RealPolynomial { coeffs }
}

/// Convenience wrapper taking an [`AlgorithmSpec`].
pub fn char_poly_spec(spec: &AlgorithmSpec, sigma: f64) -> Result<RealPolynomial> {
    char_poly(spec.kind, spec.style, spec.alpha1, spec.alpha2, spec.beta1, spec.beta2, sigma)
}

/// Transforms a Jacobi characteristic polynomial into its Gauss-Seidel
/// counterpart.
///
/// Realized by the per-algorithm substitution (`alpha2 -> lambda*alpha2` for
/// GD, EG and momentum; `(alpha2, beta2) -> (lambda*alpha2, lambda*beta2)`
/// for OGD), which amounts to multiplying the coupling part of the
/// polynomial by `lambda`. The output coefficients are identical to
/// `char_poly(kind, GaussSeidel, ...)`.
pub fn jacobi_to_gs(
    kind: AlgorithmKind,
    alpha1: f64,
    alpha2: f64,
    beta1: f64,
    beta2: f64,
    sigma: f64,
) -> Result<RealPolynomial> {
    if kind == AlgorithmKind::Pp {
        return Err(Error::InvalidSpec("proximal point has no Gauss-Seidel variant".into()));
    }
    char_poly(kind, UpdateStyle::GaussSeidel, alpha1, alpha2, beta1, beta2, sigma)
}

/// Characteristic polynomial `det(sum_i A_i lambda^(k-i))` (with `A_0 = -I`)
/// of a linear dynamical system, via determinant evaluation at sample points
/// on a circle of radius 2 followed by interpolation.
///
/// The leading coefficient of the determinant is `det(-I) = +-1`; the result
/// is normalized to a leading coefficient of exactly `+1`.
pub fn lds_char_poly(lds: &LinearDynamicalSystem) -> RealPolynomial {
    let dim = lds.dim();
    let k = lds.step_count();
    let degree = k * dim;
    let n_samples = degree + 1;
    let radius = 2.0;

    // values[j] = det(sum_i A_i lambda_j^{k-i}) at lambda_j = R * w^j
    let mut values = Vec::with_capacity(n_samples);
    for j in 0..n_samples {
        let theta = 2.0 * std::f64::consts::PI * j as f64 / n_samples as f64;
        let lambda = Complex64::from_polar(radius, theta);
        let mut m = vec![Complex64::new(0.0, 0.0); dim * dim];
        // A_0 = -I contributes -lambda^k on the diagonal
        let lk = lambda.powu(k as u32);
        for i in 0..dim {
            m[i * dim + i] = -lk;
        }
        for (step, a) in lds.matrices().iter().enumerate() {
            let factor = lambda.powu((k - step - 1) as u32);
            for r in 0..dim {
                for c in 0..dim {
                    m[r * dim + c] += factor * a[(r, c)];
                }
            }
        }
        values.push(complex_det(&mut m, dim));
    }

    // inverse DFT: c_d * R^d = (1/N) * sum_j values[j] * w^{-jd}
    let mut coeffs = vec![0.0; n_samples];
    for d in 0..n_samples {
        let mut acc = Complex64::new(0.0, 0.0);
        for (j, v) in values.iter().enumerate() {
            let theta = -2.0 * std::f64::consts::PI * (j * d % n_samples) as f64
                / n_samples as f64;
            acc += v * Complex64::from_polar(1.0, theta);
        }
        let c = acc / n_samples as f64 / radius.powi(d as i32);
        coeffs[degree - d] = c.re;
    }

    let lead = coeffs[0];
    debug_assert!((lead.abs() - 1.0).abs() < 1e-6, "leading coefficient {lead}");
    RealPolynomial { coeffs: coeffs.iter().map(|c| c / lead).collect() }
}

/// Aggregates the per-singular-value spectra of an algorithm on a game.
///
/// The overall spectral radius is the maximum over singular values; the
/// system converges from any initialization iff it is below one.
pub fn full_spectrum(spec: &AlgorithmSpec, game: &BilinearGame) -> Result<SpectralReport> {
    let singular = game.singular_data()?;
    let mut per_sigma = Vec::new();
    for &sigma in singular.values() {
        let poly = char_poly_spec(spec, sigma)?;
        let roots = spectral::roots(&poly)?;
        let radius = roots.iter().fold(0.0f64, |m, r| m.max(r.norm()));
        per_sigma.push(SigmaSpectrum { sigma, roots, radius });
    }
    Ok(SpectralReport::from_per_sigma(per_sigma))
}
