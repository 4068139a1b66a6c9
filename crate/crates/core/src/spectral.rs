//! Polynomial root finding, spectral radii and heat-map rasterization.
//!
//! Roots are found by Aberth-Ehrlich simultaneous iteration; eigenvalues of
//! the companion matrix (complex shifted-QR) are kept as a fallback and as a
//! verification path.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use std::io::Write;
use std::path::Path;

use crate::charpoly::{self, RealPolynomial};
use crate::dynamics::{AlgorithmKind, UpdateStyle};
use crate::error::{Error, Result};
use crate::util::fmt_g17;

/// Margin below one at which a spectral radius still counts as convergent.
pub const CONVERGENCE_MARGIN: f64 = 1e-9;

/// All roots of a real polynomial, including multiplicities and exact zeros
/// from trailing zero coefficients.
pub fn roots(p: &RealPolynomial) -> Result<Vec<Complex64>> {
    if p.degree() == 0 {
        return Err(Error::UnsupportedDegree(0));
    }
    let monic = p.monic();
    let mut coeffs = monic.coeffs().to_vec();
    let mut zeros = 0usize;
    while coeffs.len() > 1 && *coeffs.last().unwrap() == 0.0 {
        coeffs.pop();
        zeros += 1;
    }
    let mut out = vec![Complex64::new(0.0, 0.0); zeros];
    let d = coeffs.len() - 1;
    if d == 0 {
        return Ok(out);
    }
    let reduced = RealPolynomial::new(coeffs)?;
    let mut found = match d {
        1 => vec![Complex64::new(-reduced.coeffs()[1], 0.0)],
        2 => quadratic_roots(reduced.coeffs()[1], reduced.coeffs()[2]),
        _ => match aberth(&reduced) {
            Some(r) => r,
            None => companion_eigenvalues(&reduced),
        },
    };
    out.append(&mut found);
    Ok(out)
}

/// Maximum root modulus.
pub fn spectral_radius(p: &RealPolynomial) -> Result<f64> {
    Ok(roots(p)?.iter().fold(0.0f64, |m, r| m.max(r.norm())))
}

/// Roots of the monic quadratic `x^2 + a x + b`, complex-safe.
fn quadratic_roots(a: f64, b: f64) -> Vec<Complex64> {
    let disc = a * a - 4.0 * b;
    if disc >= 0.0 {
        let sq = disc.sqrt();
        // avoid cancellation: compute the large-magnitude root first
        let q = -0.5 * (a + a.signum() * sq);
        let r1 = if a == 0.0 { Complex64::new(sq / 2.0, 0.0) } else { Complex64::new(q, 0.0) };
        let r2 = if r1.re != 0.0 {
            Complex64::new(b / r1.re, 0.0)
        } else {
            Complex64::new(-a - r1.re, 0.0)
        };
        vec![r1, r2]
    } else {
        let re = -a / 2.0;
        let im = (-disc).sqrt() / 2.0;
        vec![Complex64::new(re, im), Complex64::new(re, -im)]
    }
}

/// Aberth-Ehrlich simultaneous iteration on a monic polynomial with nonzero
/// constant term. Returns `None` if it fails to converge in 200 iterations.
fn aberth(p: &RealPolynomial) -> Option<Vec<Complex64>> {
    let d = p.degree();
    let coeffs = p.coeffs();
    let radius = 1.0 + coeffs.iter().skip(1).fold(0.0f64, |m, c| m.max(c.abs()));
    let mut z: Vec<Complex64> = (0..d)
        .map(|j| {
            let theta = 2.0 * std::f64::consts::PI * j as f64 / d as f64 + 0.4;
            Complex64::from_polar(radius, theta)
        })
        .collect();

    let deriv: Vec<f64> = coeffs[..d]
        .iter()
        .enumerate()
        .map(|(i, c)| c * (d - i) as f64)
        .collect();
    let eval = |cs: &[f64], x: Complex64| -> Complex64 {
        cs.iter().fold(Complex64::new(0.0, 0.0), |acc, c| acc * x + c)
    };

    for _ in 0..200 {
        let mut max_step = 0.0f64;
        for j in 0..d {
            let pj = eval(coeffs, z[j]);
            let dj = eval(&deriv, z[j]);
            if !pj.is_finite() || !dj.is_finite() {
                return None;
            }
            let newton = if dj.norm_sqr() == 0.0 {
                Complex64::new(1e-12, 1e-12)
            } else {
                pj / dj
            };
            let mut repulsion = Complex64::new(0.0, 0.0);
            for (k, zk) in z.iter().enumerate() {
                if k != j {
                    let diff = z[j] - zk;
                    if diff.norm_sqr() == 0.0 {
                        return None;
                    }
                    repulsion += diff.inv();
                }
            }
            let denom = Complex64::new(1.0, 0.0) - newton * repulsion;
            let step = if denom.norm_sqr() == 0.0 { newton } else { newton / denom };
            z[j] -= step;
            max_step = max_step.max(step.norm() / (1.0 + z[j].norm()));
        }
        if max_step <= 1e-12 {
            let max_coeff = coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
            let ok = z.iter().all(|&r| {
                let residual = eval(coeffs, r).norm();
                residual <= 1e-8 * max_coeff * (1.0 + r.norm()).powi(d as i32)
            });
            return if ok { Some(z) } else { None };
        }
    }
    None
}

/// Eigenvalues of the companion matrix by complex shifted QR on the
/// Hessenberg form. Fallback path for polynomials where Aberth stalls.
fn companion_eigenvalues(p: &RealPolynomial) -> Vec<Complex64> {
    let d = p.degree();
    let coeffs = p.coeffs();
    let mut h = vec![Complex64::new(0.0, 0.0); d * d];
    for j in 0..d {
        h[j] = Complex64::new(-coeffs[j + 1], 0.0);
    }
    for i in 1..d {
        h[i * d + (i - 1)] = Complex64::new(1.0, 0.0);
    }
    hessenberg_eigenvalues(h, d)
}

/// Eigenvalues of a dense complex matrix: Householder reduction to upper
/// Hessenberg form followed by the shifted-QR sweep.
pub fn matrix_eigenvalues(matrix: &[Complex64], d: usize) -> Vec<Complex64> {
    assert_eq!(matrix.len(), d * d);
    let mut h = matrix.to_vec();
    // Householder reduction to Hessenberg form, column by column
    for k in 0..d.saturating_sub(2) {
        let mut norm_sq = 0.0;
        for i in k + 1..d {
            norm_sq += h[i * d + k].norm_sqr();
        }
        let pivot = h[(k + 1) * d + k];
        if norm_sq - pivot.norm_sqr() <= 0.0 {
            continue;
        }
        let norm = norm_sq.sqrt();
        let alpha = if pivot.norm() == 0.0 {
            Complex64::new(-norm, 0.0)
        } else {
            -pivot / pivot.norm() * norm
        };
        // v = x - alpha e1, H = I - 2 v v^H / |v|^2
        let mut v = vec![Complex64::new(0.0, 0.0); d];
        for i in k + 1..d {
            v[i] = h[i * d + k];
        }
        v[k + 1] -= alpha;
        let vnorm_sq: f64 = v.iter().map(|x| x.norm_sqr()).sum();
        if vnorm_sq == 0.0 {
            continue;
        }
        // H A: rows k+1.. updated
        for j in 0..d {
            let mut dot = Complex64::new(0.0, 0.0);
            for i in k + 1..d {
                dot += v[i].conj() * h[i * d + j];
            }
            let scale = 2.0 * dot / vnorm_sq;
            for i in k + 1..d {
                let sub = scale * v[i];
                h[i * d + j] -= sub;
            }
        }
        // A H: columns k+1.. updated
        for i in 0..d {
            let mut dot = Complex64::new(0.0, 0.0);
            for j in k + 1..d {
                dot += h[i * d + j] * v[j];
            }
            let scale = 2.0 * dot / vnorm_sq;
            for j in k + 1..d {
                let sub = scale * v[j].conj();
                h[i * d + j] -= sub;
            }
        }
        for i in k + 2..d {
            h[i * d + k] = Complex64::new(0.0, 0.0);
        }
    }
    hessenberg_eigenvalues(h, d)
}

fn hessenberg_eigenvalues(mut h: Vec<Complex64>, d: usize) -> Vec<Complex64> {
    let mut eigs = Vec::with_capacity(d);
    let mut n = d;
    let mut iters = 0usize;
    while n > 0 {
        if n == 1 {
            eigs.push(h[0]);
            break;
        }
        // deflation check on the active n x n block
        let mut deflated = false;
        for i in (1..n).rev() {
            let sub = h[i * d + i - 1].norm();
            let diag = h[(i - 1) * d + i - 1].norm() + h[i * d + i].norm();
            if sub <= 1e-14 * (diag + 1e-300) {
                if i == n - 1 {
                    eigs.push(h[(n - 1) * d + n - 1]);
                    n -= 1;
                    deflated = true;
                }
                break;
            }
        }
        if deflated {
            continue;
        }
        iters += 1;
        if iters > 200 * d {
            // give up on the rest; report the diagonal
            for i in 0..n {
                eigs.push(h[i * d + i]);
            }
            break;
        }
        // Wilkinson shift from the trailing 2x2 block
        let a = h[(n - 2) * d + n - 2];
        let b = h[(n - 2) * d + n - 1];
        let c = h[(n - 1) * d + n - 2];
        let dd = h[(n - 1) * d + n - 1];
        let tr = a + dd;
        let det = a * dd - b * c;
        let disc = (tr * tr - 4.0 * det).sqrt();
        let mu1 = (tr + disc) / 2.0;
        let mu2 = (tr - disc) / 2.0;
        let mu = if (mu1 - dd).norm() < (mu2 - dd).norm() { mu1 } else { mu2 };

        // implicit single-shift QR sweep via Givens rotations
        let mut rot = Vec::with_capacity(n - 1);
        for i in 0..n {
            h[i * d + i] -= mu;
        }
        for i in 0..n - 1 {
            let x = h[i * d + i];
            let y = h[(i + 1) * d + i];
            let r = (x.norm_sqr() + y.norm_sqr()).sqrt();
            let (cs, sn) = if r == 0.0 {
                (Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0))
            } else {
                (x.conj() / r, y.conj() / r)
            };
            for j in i..n {
                let hi = h[i * d + j];
                let hj = h[(i + 1) * d + j];
                h[i * d + j] = cs * hi + sn * hj;
                h[(i + 1) * d + j] = -sn.conj() * hi + cs.conj() * hj;
            }
            rot.push((cs, sn));
        }
        for (i, (cs, sn)) in rot.iter().enumerate() {
            let hi_max = (i + 2).min(n);
            for r in 0..hi_max {
                let h1 = h[r * d + i];
                let h2 = h[r * d + i + 1];
                h[r * d + i] = h1 * cs.conj() + h2 * sn.conj();
                h[r * d + i + 1] = -h1 * *sn + h2 * *cs;
            }
        }
        for i in 0..n {
            h[i * d + i] += mu;
        }
    }
    eigs
}

/// Eigenvalues of the block-companion matrix of a linear dynamical system;
/// this is the root multiset of its characteristic polynomial, computed
/// without going through interpolated coefficients (root extraction from
/// high-degree coefficients is ill-conditioned for clustered roots).
pub fn lds_spectrum(lds: &crate::dynamics::LinearDynamicalSystem) -> Vec<Complex64> {
    let dim = lds.dim();
    let k = lds.step_count();
    let n = k * dim;
    let mut companion = vec![Complex64::new(0.0, 0.0); n * n];
    for (step, a) in lds.matrices().iter().enumerate() {
        for r in 0..dim {
            for c in 0..dim {
                companion[r * n + step * dim + c] = Complex64::new(a[(r, c)], 0.0);
            }
        }
    }
    for i in dim..n {
        companion[i * n + (i - dim)] = Complex64::new(1.0, 0.0);
    }
    matrix_eigenvalues(&companion, n)
}

/// Sorts roots lexicographically by real then imaginary part, treating
/// real parts within `eps` as equal. Use before comparing two root
/// multisets: conjugate pairs have (numerically) tied real parts, so a
/// plain lexicographic sort can order them inconsistently between lists.
pub fn sort_roots(roots: &mut [Complex64], eps: f64) {
    roots.sort_by(|a, b| {
        if (a.re - b.re).abs() <= eps {
            a.im.partial_cmp(&b.im).unwrap()
        } else {
            a.re.partial_cmp(&b.re).unwrap()
        }
    });
}

/// Maximum pairwise distance after fuzzy sorting; `None` when the lists
/// have different lengths.
pub fn root_multiset_distance(a: &[Complex64], b: &[Complex64]) -> Option<f64> {
    if a.len() != b.len() {
        return None;
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    sort_roots(&mut a, 1e-9);
    sort_roots(&mut b, 1e-9);
    Some(
        a.iter()
            .zip(&b)
            .fold(0.0f64, |m, (x, y)| m.max((x - y).norm())),
    )
}

/// Spectrum of one per-singular-value polynomial.
#[derive(Clone, Debug, Serialize)]
pub struct SigmaSpectrum {
    pub sigma: f64,
    pub roots: Vec<Complex64>,
    pub radius: f64,
}

/// Roots and spectral radius aggregated over the singular values of a game.
#[derive(Clone, Debug, Serialize)]
pub struct SpectralReport {
    pub roots: Vec<Complex64>,
    pub radius: f64,
    pub converges: bool,
    pub per_sigma: Vec<SigmaSpectrum>,
}

impl SpectralReport {
    pub fn from_per_sigma(per_sigma: Vec<SigmaSpectrum>) -> Self {
        let radius = per_sigma.iter().fold(0.0f64, |m, s| m.max(s.radius));
        let roots = per_sigma.iter().flat_map(|s| s.roots.iter().copied()).collect();
        SpectralReport { roots, radius, converges: radius < 1.0 - CONVERGENCE_MARGIN, per_sigma }
    }
}

/// Inclusive linearly spaced axis.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct AxisSpec {
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl AxisSpec {
    pub fn new(min: f64, max: f64, steps: usize) -> Self {
        assert!(steps >= 2 && max > min);
        AxisSpec { min, max, steps }
    }

    pub fn value(&self, i: usize) -> f64 {
        self.min + (self.max - self.min) * i as f64 / (self.steps - 1) as f64
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.steps).map(|i| self.value(i)).collect()
    }
}

/// Raster of spectral radii over a step-size/parameter rectangle, with
/// `beta1 = beta2 = beta` linked as in the density plots.
#[derive(Clone, Debug, Serialize)]
pub struct HeatmapGrid {
    pub kind: AlgorithmKind,
    pub style: UpdateStyle,
    pub sigmas: Vec<f64>,
    pub alpha_axis: AxisSpec,
    pub beta_axis: AxisSpec,
    pub cap: f64,
    /// Row-major, rows indexed by beta (ascending), columns by alpha.
    pub values: Vec<f64>,
}

impl HeatmapGrid {
    pub fn value(&self, beta_idx: usize, alpha_idx: usize) -> f64 {
        self.values[beta_idx * self.alpha_axis.steps + alpha_idx]
    }
}

/// Computes the radius surface for `beta1 = beta2 = beta`. Radii are clamped
/// to `cap` (default 2) since divergent cells need no resolution.
pub fn radius_surface(
    kind: AlgorithmKind,
    style: UpdateStyle,
    sigmas: &[f64],
    alpha_axis: AxisSpec,
    beta_axis: AxisSpec,
    cap: f64,
) -> Result<HeatmapGrid> {
    if kind == AlgorithmKind::Pp && style == UpdateStyle::GaussSeidel {
        return Err(Error::InvalidSpec("proximal point has no Gauss-Seidel variant".into()));
    }
    if sigmas.is_empty() || sigmas.iter().any(|s| *s <= 0.0) {
        return Err(Error::InvalidSpec("need at least one positive sigma".into()));
    }
    let betas = beta_axis.values();
    let alphas = alpha_axis.values();
    let values: Vec<f64> = betas
        .par_iter()
        .flat_map_iter(|&beta| {
            let alphas = alphas.clone();
            alphas.into_iter().map(move |alpha| {
                let mut radius = 0.0f64;
                for &sigma in sigmas {
                    let p = charpoly::char_poly_unchecked(kind, style, alpha, alpha, beta, beta, sigma);
                    let r = spectral_radius(&p).unwrap_or(f64::INFINITY);
                    radius = radius.max(r);
                }
                radius.min(cap)
            })
        })
        .collect();
    Ok(HeatmapGrid {
        kind,
        style,
        sigmas: sigmas.to_vec(),
        alpha_axis,
        beta_axis,
        cap,
        values,
    })
}

/// Writes `(alpha, beta, radius)` triplets, row-major in ascending beta.
pub fn write_heatmap_csv(grid: &HeatmapGrid, path: &Path) -> Result<()> {
    let mut out = String::from("alpha,beta,radius\n");
    for (bi, beta) in grid.beta_axis.values().iter().enumerate() {
        for (ai, alpha) in grid.alpha_axis.values().iter().enumerate() {
            out.push_str(&format!(
                "{},{},{}\n",
                fmt_g17(*alpha),
                fmt_g17(*beta),
                fmt_g17(grid.value(bi, ai))
            ));
        }
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Writes an 8-bit binary PGM. Radius 0 maps to white (255), radius >= cap
/// to black (0). The top image row corresponds to the largest beta.
pub fn write_heatmap_pgm(grid: &HeatmapGrid, path: &Path) -> Result<()> {
    let w = grid.alpha_axis.steps;
    let h = grid.beta_axis.steps;
    let mut file = std::fs::File::create(path)?;
    write!(file, "P5\n{} {}\n255\n", w, h)?;
    let mut bytes = Vec::with_capacity(w * h);
    for bi in (0..h).rev() {
        for ai in 0..w {
            let r = grid.value(bi, ai).clamp(0.0, grid.cap);
            let v = (255.0 * (1.0 - r / grid.cap)).round() as u8;
            bytes.push(v);
        }
    }
    file.write_all(&bytes)?;
    Ok(())
}
