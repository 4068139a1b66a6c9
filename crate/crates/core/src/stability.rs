//! Schur stability tests, exact convergence conditions, region comparisons
//! between Jacobi and Gauss-Seidel updates, and the shrinking-radius search
//! for the optimal convergence rate.
//!
//! All conditions are open inequalities; each test reports the signed slack
//! of every inequality so callers can recognize boundary cases. Verdicts
//! with `|margin| <= 1e-8` are treated as undecidable at double precision.

use rayon::prelude::*;
use serde::Serialize;

use crate::charpoly::{self, RealPolynomial};
use crate::dynamics::{AlgorithmKind, UpdateStyle};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::spectral;

/// Slack window inside which a verdict counts as a boundary case.
pub const BOUNDARY_TOL: f64 = 1e-8;

#[derive(Clone, Debug, Serialize)]
pub struct Margin {
    pub name: String,
    pub value: f64,
}

/// Outcome of a stability test: stable iff every margin is strictly
/// positive.
#[derive(Clone, Debug, Serialize)]
pub struct StabilityVerdict {
    pub stable: bool,
    pub failing_condition: Option<String>,
    pub margins: Vec<Margin>,
}

impl StabilityVerdict {
    fn from_margins(margins: Vec<Margin>) -> Self {
        // NaN margins count as failures
        let failing = margins.iter().find(|m| m.value.is_nan() || m.value <= 0.0);
        StabilityVerdict {
            stable: failing.is_none(),
            failing_condition: failing.map(|m| m.name.clone()),
            margins,
        }
    }

    pub fn min_margin(&self) -> f64 {
        self.margins.iter().fold(f64::INFINITY, |m, x| m.min(x.value))
    }

    /// True when the smallest slack cannot be trusted at double precision.
    pub fn is_boundary(&self) -> bool {
        self.margins.iter().any(|m| m.value.abs() <= BOUNDARY_TOL)
    }

    /// Stable with a slack clear of the boundary window.
    pub fn clearly_stable(&self) -> bool {
        self.stable && !self.is_boundary()
    }

    /// Unstable with a slack clear of the boundary window.
    pub fn clearly_unstable(&self) -> bool {
        !self.stable && self.margins.iter().any(|m| m.value < -BOUNDARY_TOL)
    }
}

fn margin(name: impl Into<String>, value: f64) -> Margin {
    Margin { name: name.into(), value }
}

/// Schur's determinant test: all roots lie in the open unit disk iff
/// `det(P_k P_k^T - Q_k^T Q_k) > 0` for `k = 1..n`, where `P_k` is the
/// lower-triangular and `Q_k` the upper-triangular coefficient band matrix.
pub fn schur_general(p: &RealPolynomial) -> StabilityVerdict {
    let a = p.coeffs();
    let n = p.degree();
    let mut margins = Vec::with_capacity(n);
    for k in 1..=n {
        let pk = Matrix::from_fn(k, k, |i, j| if i >= j { a[i - j] } else { 0.0 });
        let qk = Matrix::from_fn(k, k, |i, j| if i <= j { a[n - (j - i)] } else { 0.0 });
        let d = pk.matmul(&pk.transpose()).sub(&qk.transpose().matmul(&qk));
        margins.push(margin(format!("det{k}"), det(&d)));
    }
    StabilityVerdict::from_margins(margins)
}

fn det(m: &Matrix) -> f64 {
    // LU with partial pivoting; small sizes only
    let n = m.rows();
    let mut lu = m.clone();
    let mut sign = 1.0;
    for k in 0..n {
        let (piv, piv_val) = (k..n)
            .map(|i| (i, lu[(i, k)].abs()))
            .fold((k, -1.0), |acc, cur| if cur.1 > acc.1 { cur } else { acc });
        if piv_val == 0.0 {
            return 0.0;
        }
        if piv != k {
            for j in 0..n {
                let tmp = lu[(k, j)];
                lu[(k, j)] = lu[(piv, j)];
                lu[(piv, j)] = tmp;
            }
            sign = -sign;
        }
        for i in k + 1..n {
            let f = lu[(i, k)] / lu[(k, k)];
            for j in k + 1..n {
                lu[(i, j)] -= f * lu[(k, j)];
            }
        }
    }
    (0..n).fold(sign, |acc, i| acc * lu[(i, i)])
}

/// Closed-form Schur conditions for monic quadratic, cubic and quartic
/// polynomials. The input is normalized to monic form first.
pub fn schur_closed(p: &RealPolynomial) -> Result<StabilityVerdict> {
    let monic = p.monic();
    let c = monic.coeffs();
    let margins = match p.degree() {
        2 => {
            let (a, b) = (c[1], c[2]);
            vec![margin("b<1", 1.0 - b), margin("|a|<1+b", 1.0 + b - a.abs())]
        }
        3 => {
            let (a, b, cc) = (c[1], c[2], c[3]);
            vec![
                margin("|c|<1", 1.0 - cc.abs()),
                margin("|a+c|<1+b", 1.0 + b - (a + cc).abs()),
                margin("b-ac<1-c^2", 1.0 - cc * cc - (b - a * cc)),
            ]
        }
        4 => {
            let (a, b, cc, d) = (c[1], c[2], c[3], c[4]);
            let dm1 = (d - 1.0) * (d - 1.0);
            let third = if dm1 == 0.0 {
                f64::NEG_INFINITY
            } else {
                (1.0 + d) + (cc - a * d) * (a - cc) / dm1 - b
            };
            vec![
                margin("|c-ad|<1-d^2", 1.0 - d * d - (cc - a * d).abs()),
                margin("|a+c|<b+d+1", b + d + 1.0 - (a + cc).abs()),
                margin("b<(1+d)+(c-ad)(a-c)/(d-1)^2", third),
            ]
        }
        deg => return Err(Error::UnsupportedDegree(deg)),
    };
    Ok(StabilityVerdict::from_margins(margins))
}

/// Alternative quartic Schur test (the four-inequality form).
pub fn schur_quartic_alt(p: &RealPolynomial) -> Result<StabilityVerdict> {
    if p.degree() != 4 {
        return Err(Error::UnsupportedDegree(p.degree()));
    }
    let monic = p.monic();
    let c = monic.coeffs();
    let (a, b, cc, d) = (c[1], c[2], c[3], c[4]);
    let q = (1.0 - d) * (1.0 - d) * b + cc * cc
        - a * (1.0 + d) * cc
        - (1.0 + d) * (1.0 - d) * (1.0 - d)
        + a * a * d;
    let margins = vec![
        margin("|d|<1", 1.0 - d.abs()),
        margin("|a|<d+3", d + 3.0 - a.abs()),
        margin("|a+c|<b+d+1", b + d + 1.0 - (a + cc).abs()),
        margin("q<0", -q),
    ];
    Ok(StabilityVerdict::from_margins(margins))
}

/// r-Schur test: all roots strictly inside the disk of radius `r`.
/// Implemented by substituting `lambda -> r*lambda` (coefficient rescale
/// `a_i -> a_i r^{n-i}`) and applying the unit-disk test.
pub fn r_schur(p: &RealPolynomial, r: f64) -> Result<StabilityVerdict> {
    if r.is_nan() || r <= 0.0 || !r.is_finite() {
        return Err(Error::InvalidSpec(format!("r must be positive, got {r}")));
    }
    let scaled = p.scale_lambda(r).monic();
    match scaled.degree() {
        2..=4 => schur_closed(&scaled),
        _ => Ok(schur_general(&scaled)),
    }
}

/// Exact convergence conditions of the normalized (`alpha1 = alpha2`)
/// methods at one singular value, with one margin per printed inequality.
///
/// GD never converges (the relevant slack is never positive); Jacobi
/// momentum carries an inequality that is unsatisfiable for any parameters.
/// PP has no inequality to test (it always converges) and is rejected.
pub fn exact_condition(
    kind: AlgorithmKind,
    style: UpdateStyle,
    alpha: f64,
    beta1: f64,
    beta2: f64,
    sigma: f64,
) -> Result<StabilityVerdict> {
    let s2 = sigma * sigma;
    let (a, b1, b2) = (alpha, beta1, beta2);
    let margins = match (kind, style) {
        (AlgorithmKind::Gd, UpdateStyle::Jacobi) => {
            // constant coefficient 1 + a^2 s^2 is never below 1
            vec![margin("b<1", -(a * a * s2))]
        }
        (AlgorithmKind::Gd, UpdateStyle::GaussSeidel) => {
            // constant coefficient is exactly 1: boundary for every alpha
            vec![margin("b<1", 0.0)]
        }
        (AlgorithmKind::Eg, UpdateStyle::Jacobi) => {
            let prod = (1.0 - b1 * s2) * (1.0 - b2 * s2);
            vec![
                margin(
                    "|b1s2+b2s2-2|<1+(1-b1s2)(1-b2s2)+a2s2",
                    1.0 + prod + a * a * s2 - (b1 * s2 + b2 * s2 - 2.0).abs(),
                ),
                margin("(1-b1s2)(1-b2s2)+a2s2<1", 1.0 - (prod + a * a * s2)),
            ]
        }
        (AlgorithmKind::Eg, UpdateStyle::GaussSeidel) => {
            let prod = (1.0 - b1 * s2) * (1.0 - b2 * s2);
            vec![
                margin(
                    "|(b1+b2+a2)s2-2|<1+(1-b1s2)(1-b2s2)",
                    1.0 + prod - ((b1 + b2 + a * a) * s2 - 2.0).abs(),
                ),
                margin("(1-b1s2)(1-b2s2)<1", 1.0 - prod),
            ]
        }
        (AlgorithmKind::Ogd, UpdateStyle::Jacobi) => {
            vec![
                margin("|b1b2s2|<1", 1.0 - (b1 * b2 * s2).abs()),
                margin("(a-b1)(a-b2)>0", (a - b1) * (a - b2)),
                margin("4+(a+b1)(a+b2)s2>0", 4.0 + (a + b1) * (a + b2) * s2),
                margin(
                    "a2(b1^2s2+1)(b2^2s2+1)<(b1b2s2+1)(2a(b1+b2)+b1b2(b1b2s2-3))",
                    (b1 * b2 * s2 + 1.0)
                        * (2.0 * a * (b1 + b2) + b1 * b2 * (b1 * b2 * s2 - 3.0))
                        - a * a * (b1 * b1 * s2 + 1.0) * (b2 * b2 * s2 + 1.0),
                ),
            ]
        }
        (AlgorithmKind::Ogd, UpdateStyle::GaussSeidel) => {
            // |b1 b2 s2| < 1 is the cubic Schur condition |c| < 1; the
            // other three are the printed inequalities
            vec![
                margin("|b1b2s2|<1", 1.0 - (b1 * b2 * s2).abs()),
                margin("(a-b1)(a-b2)>0", (a - b1) * (a - b2)),
                margin("(a+b1)(a+b2)s2<4", 4.0 - (a + b1) * (a + b2) * s2),
                margin(
                    "(ab1s2+1)(ab2s2+1)>(1+b1b2s2)^2",
                    (a * b1 * s2 + 1.0) * (a * b2 * s2 + 1.0)
                        - (1.0 + b1 * b2 * s2) * (1.0 + b1 * b2 * s2),
                ),
            ]
        }
        (AlgorithmKind::Momentum, UpdateStyle::Jacobi) => {
            // the final inequality requires a^2 s^2 (b1 b2 - 1)^2 < 0,
            // impossible: Jacobi momentum never converges
            vec![
                margin("|b1b2|<1", 1.0 - (b1 * b2).abs()),
                margin("|2+b1+b2|<3+b1b2", 3.0 + b1 * b2 - (2.0 + b1 + b2).abs()),
                margin("a2s2+4(1+b1)(1+b2)>0", a * a * s2 + 4.0 * (1.0 + b1) * (1.0 + b2)),
                margin(
                    "a2s2(b1b2-1)^2<0",
                    -(a * a * s2 * (b1 * b2 - 1.0) * (b1 * b2 - 1.0)),
                ),
            ]
        }
        (AlgorithmKind::Momentum, UpdateStyle::GaussSeidel) => {
            vec![
                margin("|b1b2|<1", 1.0 - (b1 * b2).abs()),
                margin(
                    "|-a2s2+b1+b2+2|<b1b2+3",
                    b1 * b2 + 3.0 - (-(a * a * s2) + b1 + b2 + 2.0).abs(),
                ),
                margin("4(b1+1)(b2+1)>a2s2", 4.0 * (b1 + 1.0) * (b2 + 1.0) - a * a * s2),
                margin(
                    "a2s2b1b2<(1-b1b2)(2b1b2-b1-b2)",
                    (1.0 - b1 * b2) * (2.0 * b1 * b2 - b1 - b2) - a * a * s2 * b1 * b2,
                ),
            ]
        }
        (AlgorithmKind::Pp, _) => {
            return Err(Error::InvalidSpec(
                "proximal point always converges; no exact condition to test".into(),
            ))
        }
    };
    Ok(StabilityVerdict::from_margins(margins))
}

/// Convergence classification of a parameterized method on a set of
/// singular values.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    Converges,
    Diverges,
    LimitCyclePossible,
}

#[derive(Clone, Debug, Serialize)]
pub struct SigmaVerdict {
    pub sigma: f64,
    pub radius: f64,
    pub verdict: StabilityVerdict,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceReport {
    pub per_sigma: Vec<SigmaVerdict>,
    pub overall_stable: bool,
    pub radius: f64,
    pub classification: Classification,
}

/// Tolerance for "on the unit circle" when classifying limit cycles.
const UNIT_CIRCLE_TOL: f64 = 1e-9;
/// Two on-circle roots closer than this count as a repeated root.
const ROOT_DISTINCT_TOL: f64 = 1e-6;

fn classify_roots(roots: &[num_complex::Complex64]) -> Classification {
    let radius = roots.iter().fold(0.0f64, |m, r| m.max(r.norm()));
    if radius > 1.0 + UNIT_CIRCLE_TOL {
        return Classification::Diverges;
    }
    let on_circle: Vec<_> = roots
        .iter()
        .filter(|r| (r.norm() - 1.0).abs() <= UNIT_CIRCLE_TOL)
        .collect();
    if on_circle.is_empty() {
        return Classification::Converges;
    }
    for (i, a) in on_circle.iter().enumerate() {
        for b in &on_circle[i + 1..] {
            if (*a - *b).norm() < ROOT_DISTINCT_TOL {
                // repeated unit root: polynomial growth
                return Classification::Diverges;
            }
        }
    }
    Classification::LimitCyclePossible
}

/// Per-singular-value stability verdicts, spectral radii and the combined
/// classification for a method with general step sizes.
pub fn convergence_report(
    kind: AlgorithmKind,
    style: UpdateStyle,
    alpha1: f64,
    alpha2: f64,
    beta1: f64,
    beta2: f64,
    sigmas: &[f64],
) -> Result<ConvergenceReport> {
    if sigmas.is_empty() {
        return Err(Error::InvalidSpec("need at least one singular value".into()));
    }
    let mut per_sigma = Vec::with_capacity(sigmas.len());
    let mut classification = Classification::Converges;
    let mut radius = 0.0f64;
    for &sigma in sigmas {
        let poly = charpoly::char_poly(kind, style, alpha1, alpha2, beta1, beta2, sigma)?;
        let verdict = match poly.degree() {
            2..=4 => schur_closed(&poly)?,
            _ => schur_general(&poly),
        };
        let roots = spectral::roots(&poly)?;
        let r = roots.iter().fold(0.0f64, |m, z| m.max(z.norm()));
        radius = radius.max(r);
        match classify_roots(&roots) {
            Classification::Diverges => classification = Classification::Diverges,
            Classification::LimitCyclePossible => {
                if classification != Classification::Diverges {
                    classification = Classification::LimitCyclePossible;
                }
            }
            Classification::Converges => {}
        }
        per_sigma.push(SigmaVerdict { sigma, radius: r, verdict });
    }
    let overall_stable = per_sigma.iter().all(|s| s.verdict.stable);
    Ok(ConvergenceReport { per_sigma, overall_stable, radius, classification })
}

/// Inclusive sampling axis `min, min+step, ..., max`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

impl Axis {
    pub fn new(min: f64, max: f64, step: f64) -> Self {
        assert!(step > 0.0 && max >= min);
        Axis { min, max, step }
    }

    pub fn values(&self) -> Vec<f64> {
        let count = ((self.max - self.min) / self.step + 0.5).floor() as usize + 1;
        (0..count)
            .map(|i| self.min + i as f64 * self.step)
            .filter(|v| *v <= self.max + 1e-12 * self.step)
            .collect()
    }

    pub fn single(value: f64) -> Self {
        Axis { min: value, max: value, step: 1.0 }
    }
}

/// Sampled box over `(alpha, beta1, beta2)`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ParamGrid {
    pub alpha: Axis,
    pub beta1: Axis,
    pub beta2: Axis,
}

impl ParamGrid {
    /// The grid from the single-singular-value searches: alpha positive up
    /// to 2, betas in [-2, 2], step 0.05.
    pub fn standard(step: f64) -> Self {
        ParamGrid {
            alpha: Axis::new(step, 2.0, step),
            beta1: Axis::new(-2.0, 2.0, step),
            beta2: Axis::new(-2.0, 2.0, step),
        }
    }

    pub fn points(&self) -> Vec<[f64; 3]> {
        let mut pts = Vec::new();
        for &a in &self.alpha.values() {
            if a <= 0.0 {
                continue; // step sizes are positive
            }
            for &b1 in &self.beta1.values() {
                for &b2 in &self.beta2.values() {
                    pts.push([a, b1, b2]);
                }
            }
        }
        pts
    }
}

/// Counts of grid points stable under one style but not the other.
#[derive(Clone, Debug, Serialize)]
pub struct RegionReport {
    pub kind: AlgorithmKind,
    pub sigma: f64,
    pub total: usize,
    pub both: usize,
    pub jacobi_only: usize,
    pub gs_only: usize,
    pub neither: usize,
    /// Points skipped because a verdict sat within the boundary window.
    pub boundary: usize,
    /// For EG: `jacobi_only` restricted to `beta1 + beta2 + alpha^2 < 2/sigma^2`,
    /// the regime where the theorem guarantees inclusion.
    pub jacobi_only_restricted: Option<usize>,
    /// Up to 16 sample points that were Jacobi-stable but GS-unstable.
    pub jacobi_only_examples: Vec<[f64; 3]>,
}

/// Compares Jacobi and Gauss-Seidel stability point-by-point on a grid.
pub fn region_inclusion_check(
    kind: AlgorithmKind,
    sigma: f64,
    grid: &ParamGrid,
) -> Result<RegionReport> {
    if kind == AlgorithmKind::Pp {
        return Err(Error::InvalidSpec("proximal point has no Gauss-Seidel variant".into()));
    }
    let points = grid.points();
    if points.is_empty() {
        return Err(Error::EmptyGrid);
    }
    #[derive(Default)]
    struct Acc {
        both: usize,
        jacobi_only: usize,
        gs_only: usize,
        neither: usize,
        boundary: usize,
        restricted: usize,
        examples: Vec<[f64; 3]>,
    }
    let acc = points
        .par_iter()
        .fold(Acc::default, |mut acc, &[a, b1, b2]| {
            let jp = charpoly::char_poly_unchecked(kind, UpdateStyle::Jacobi, a, a, b1, b2, sigma);
            let gp =
                charpoly::char_poly_unchecked(kind, UpdateStyle::GaussSeidel, a, a, b1, b2, sigma);
            let jv = schur_closed(&jp).expect("template degree");
            let gv = schur_closed(&gp).expect("template degree");
            if jv.is_boundary() || gv.is_boundary() {
                acc.boundary += 1;
                return acc;
            }
            match (jv.stable, gv.stable) {
                (true, true) => acc.both += 1,
                (true, false) => {
                    acc.jacobi_only += 1;
                    if b1 + b2 + a * a < 2.0 / (sigma * sigma) {
                        acc.restricted += 1;
                    }
                    if acc.examples.len() < 16 {
                        acc.examples.push([a, b1, b2]);
                    }
                }
                (false, true) => acc.gs_only += 1,
                (false, false) => acc.neither += 1,
            }
            acc
        })
        .reduce(Acc::default, |mut a, b| {
            a.both += b.both;
            a.jacobi_only += b.jacobi_only;
            a.gs_only += b.gs_only;
            a.neither += b.neither;
            a.boundary += b.boundary;
            a.restricted += b.restricted;
            for e in b.examples {
                if a.examples.len() < 16 {
                    a.examples.push(e);
                }
            }
            a
        });
    Ok(RegionReport {
        kind,
        sigma,
        total: points.len(),
        both: acc.both,
        jacobi_only: acc.jacobi_only,
        gs_only: acc.gs_only,
        neither: acc.neither,
        boundary: acc.boundary,
        jacobi_only_restricted: (kind == AlgorithmKind::Eg).then_some(acc.restricted),
        jacobi_only_examples: acc.examples,
    })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct RateSearchConfig {
    /// Geometric shrink factor per iteration.
    pub shrink: f64,
    /// Bisection tolerance on the final radius.
    pub bisect_tol: f64,
    /// Radius below which the search stops and reports superlinear
    /// convergence at the witness.
    pub r_floor: f64,
    /// Local refinement rounds around the witness (0 = plain grid search).
    pub refine_rounds: usize,
}

impl Default for RateSearchConfig {
    fn default() -> Self {
        RateSearchConfig { shrink: 0.99, bisect_tol: 1e-4, r_floor: 1e-9, refine_rounds: 0 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RateSearchResult {
    pub r_star: f64,
    pub witness: [f64; 3],
    /// The region never emptied before the radius floor: the witness gives
    /// (numerically) superlinear convergence.
    pub superlinear: bool,
}

/// Shrinking-radius search for the optimal convergence rate on a sampled
/// parameter box: while some sampled point is `r`-Schur stable at every
/// singular value, shrink `r` geometrically; then bisect between the last
/// nonempty and first empty radii.
pub fn optimal_rate_search(
    kind: AlgorithmKind,
    style: UpdateStyle,
    grid: &ParamGrid,
    sigmas: &[f64],
    config: &RateSearchConfig,
) -> Result<RateSearchResult> {
    if sigmas.is_empty() || sigmas.iter().any(|s| *s <= 0.0) {
        return Err(Error::InvalidSpec("need positive singular values".into()));
    }
    if !(config.shrink > 0.0 && config.shrink < 1.0) {
        return Err(Error::InvalidSpec(format!("shrink must be in (0,1), got {}", config.shrink)));
    }
    let mut result = search_on_grid(kind, style, grid, sigmas, config)?;
    let mut step = [grid.alpha.step, grid.beta1.step, grid.beta2.step];
    let mut round = 0;
    while round < config.refine_rounds && !result.superlinear {
        let w = result.witness;
        let fine = ParamGrid {
            alpha: Axis::new((w[0] - step[0]).max(1e-12), w[0] + step[0], step[0] / 10.0),
            beta1: Axis::new(w[1] - step[1], w[1] + step[1], step[1] / 10.0),
            beta2: Axis::new(w[2] - step[2], w[2] + step[2], step[2] / 10.0),
        };
        result = search_on_grid(kind, style, &fine, sigmas, config)?;
        step = [step[0] / 10.0, step[1] / 10.0, step[2] / 10.0];
        round += 1;
    }
    Ok(result)
}

fn search_on_grid(
    kind: AlgorithmKind,
    style: UpdateStyle,
    grid: &ParamGrid,
    sigmas: &[f64],
    config: &RateSearchConfig,
) -> Result<RateSearchResult> {
    let points = grid.points();
    if points.is_empty() {
        return Err(Error::EmptyGrid);
    }
    // precompute the per-sigma polynomials once per point
    let polys: Vec<(usize, Vec<RealPolynomial>)> = points
        .par_iter()
        .enumerate()
        .map(|(i, &[a, b1, b2])| {
            let ps = sigmas
                .iter()
                .map(|&s| charpoly::char_poly_unchecked(kind, style, a, a, b1, b2, s))
                .collect();
            (i, ps)
        })
        .collect();

    let stable_at = |ps: &[RealPolynomial], r: f64| {
        ps.iter().all(|p| r_schur(p, r).map(|v| v.stable).unwrap_or(false))
    };

    let mut r = 1.0;
    let mut survivors: Vec<&(usize, Vec<RealPolynomial>)> = polys
        .par_iter()
        .filter(|(_, ps)| stable_at(ps, r))
        .collect();
    if survivors.is_empty() {
        return Err(Error::InitialRegionEmpty(1.0));
    }

    // geometric shrink until the region empties or the floor is reached
    loop {
        let next = r * config.shrink;
        if next < config.r_floor {
            let idx = survivors.iter().map(|(i, _)| *i).min().unwrap();
            return Ok(RateSearchResult {
                r_star: next,
                witness: points[idx],
                superlinear: true,
            });
        }
        let still: Vec<&(usize, Vec<RealPolynomial>)> = survivors
            .iter()
            .filter(|(_, ps)| stable_at(ps, next))
            .copied()
            .collect();
        if still.is_empty() {
            // bisect inside (next, r]
            let mut lo = next;
            let mut hi = r;
            while hi - lo > config.bisect_tol {
                let mid = 0.5 * (lo + hi);
                let any = survivors.iter().any(|(_, ps)| stable_at(ps, mid));
                if any {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            let idx = survivors
                .iter()
                .filter(|(_, ps)| stable_at(ps, hi))
                .map(|(i, _)| *i)
                .min()
                .ok_or_else(|| Error::BracketingFailure("no witness at final radius".into()))?;
            return Ok(RateSearchResult { r_star: hi, witness: points[idx], superlinear: false });
        }
        survivors = still;
        r = next;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;
    use AlgorithmKind::*;

    fn poly(coeffs: &[f64]) -> RealPolynomial {
        RealPolynomial::new(coeffs.to_vec()).unwrap()
    }

    #[test]
    fn pure_lambda_squared_stable() {
        let v = schur_general(&poly(&[1.0, 0.0, 0.0]));
        assert!(v.stable);
    }

    #[test]
    fn root_at_one_unstable() {
        let v = schur_general(&poly(&[1.0, -2.0, 1.0]));
        assert!(!v.stable);
    }

    #[test]
    fn closed_quadratic_stable_case() {
        let v = schur_closed(&poly(&[1.0, 0.0, 0.5])).unwrap();
        assert!(v.stable);
        assert!(v.failing_condition.is_none());
    }

    #[test]
    fn quartic_best_jacobi_ogd_point() {
        // alpha = 0.7, beta1 = 0.1, beta2 = 0.6 at sigma = 1 is stable
        let p = charpoly::char_poly(Ogd, UpdateStyle::Jacobi, 0.7, 0.7, 0.1, 0.6, 1.0).unwrap();
        assert!(schur_closed(&p).unwrap().stable);
        assert!(schur_quartic_alt(&p).unwrap().stable);
    }

    #[test]
    fn gs_momentum_cubic_unstable_case() {
        // beta1 = -1/2, beta2 = 0, alpha^2 sigma^2 = 5 violates
        // a^2 s^2 < 4 (1 + b1)(1 + b2) = 2
        let v = exact_condition(
            Momentum,
            UpdateStyle::GaussSeidel,
            5.0f64.sqrt(),
            -0.5,
            0.0,
            1.0,
        )
        .unwrap();
        assert!(!v.stable);
        // schur on the characteristic polynomial agrees
        let p = charpoly::char_poly(
            Momentum,
            UpdateStyle::GaussSeidel,
            5.0f64.sqrt(),
            5.0f64.sqrt(),
            -0.5,
            0.0,
            1.0,
        )
        .unwrap();
        assert!(!schur_closed(&p).unwrap().stable);
    }

    #[test]
    fn quartic_alt_trivial_cases() {
        assert!(schur_quartic_alt(&poly(&[1.0, 0.0, 0.0, 0.0, 0.0])).unwrap().stable);
        // d = 1 violates |d| < 1
        let v = schur_quartic_alt(&poly(&[1.0, 0.0, 0.0, 0.0, 1.0])).unwrap();
        assert!(!v.stable);
    }

    #[test]
    fn r_schur_linear_cases() {
        let p = poly(&[1.0, -0.5]);
        assert!(r_schur(&p, 0.6).unwrap().stable);
        assert!(!r_schur(&p, 0.4).unwrap().stable);
    }

    #[test]
    fn r_schur_quadratic_closed_form_agrees() {
        // b < r^2 and |a| < r + b/r against rescale-then-test
        let mut rng = SplitMix64::new(123);
        for _ in 0..2000 {
            let a = rng.uniform(-2.0, 2.0);
            let b = rng.uniform(-2.0, 2.0);
            let r = rng.uniform(0.1, 2.0);
            let closed = b < r * r && a.abs() < r + b / r;
            let v = r_schur(&poly(&[1.0, a, b]), r).unwrap();
            if v.is_boundary() {
                continue;
            }
            assert_eq!(v.stable, closed, "a={a} b={b} r={r}");
        }
    }

    #[test]
    fn r_schur_matches_root_moduli() {
        let mut rng = SplitMix64::new(7);
        for _ in 0..2000 {
            let coeffs: Vec<f64> =
                std::iter::once(1.0).chain((0..3).map(|_| rng.uniform(-2.0, 2.0))).collect();
            let p = poly(&coeffs);
            let r = rng.uniform(0.2, 2.0);
            let v = r_schur(&p, r).unwrap();
            if v.is_boundary() {
                continue;
            }
            let radius = crate::spectral::spectral_radius(&p).unwrap();
            if (radius - r).abs() <= 1e-8 {
                continue;
            }
            assert_eq!(v.stable, radius < r, "{coeffs:?} r={r} radius={radius}");
        }
    }

    #[test]
    fn r_schur_monotone_in_r() {
        let mut rng = SplitMix64::new(99);
        for _ in 0..500 {
            let coeffs: Vec<f64> =
                std::iter::once(1.0).chain((0..4).map(|_| rng.uniform(-1.5, 1.5))).collect();
            let p = poly(&coeffs);
            let r = rng.uniform(0.2, 1.5);
            let v = r_schur(&p, r).unwrap();
            if v.stable {
                for factor in [1.1, 1.5, 3.0] {
                    assert!(
                        r_schur(&p, r * factor).unwrap().stable,
                        "{coeffs:?} stable at {r} but not {}",
                        r * factor
                    );
                }
            }
        }
    }

    #[test]
    fn eg_symmetric_beta_condition() {
        // beta1 = beta2 = beta: stable iff a^2 s^2 + (b s^2 - 1)^2 < 1
        let mut rng = SplitMix64::new(31);
        for _ in 0..500 {
            let a = rng.uniform(0.01, 2.0);
            let b = rng.uniform(-2.0, 2.0);
            let s = 1.3;
            let s2 = s * s;
            let closed = a * a * s2 + (b * s2 - 1.0) * (b * s2 - 1.0) < 1.0;
            let v = exact_condition(Eg, UpdateStyle::Jacobi, a, b, b, s).unwrap();
            if v.is_boundary() {
                continue;
            }
            assert_eq!(v.stable, closed, "a={a} b={b}");
        }
    }

    #[test]
    fn eg_gs_symmetric_beta_condition() {
        // beta1 = beta2 = beta: stable iff 0 < beta s^2 < 2 and
        // |alpha s| < 2 - beta s^2
        let mut rng = SplitMix64::new(41);
        for _ in 0..500 {
            let a = rng.uniform(0.01, 2.5);
            let b = rng.uniform(-2.0, 2.5);
            let s = 0.9;
            let s2 = s * s;
            let closed = b * s2 > 0.0 && b * s2 < 2.0 && (a * s).abs() < 2.0 - b * s2;
            let v = exact_condition(Eg, UpdateStyle::GaussSeidel, a, b, b, s).unwrap();
            if v.is_boundary() {
                continue;
            }
            assert_eq!(v.stable, closed, "a={a} b={b}");
        }
    }

    #[test]
    fn momentum_positive_betas_never_converge() {
        for a in [0.05, 0.2, 0.5, 1.0, 1.9] {
            let v =
                exact_condition(Momentum, UpdateStyle::GaussSeidel, a, 0.1, 0.1, 1.0).unwrap();
            assert!(!v.stable, "alpha={a}");
        }
    }

    #[test]
    fn momentum_gs_beta2_zero_condition() {
        // stable iff -1 < b1 < 0 and a^2 s^2 < 4 (1 + b1)
        let mut rng = SplitMix64::new(57);
        for _ in 0..500 {
            let a = rng.uniform(0.01, 2.0);
            let b1 = rng.uniform(-1.5, 1.0);
            let closed = b1 > -1.0 && b1 < 0.0 && a * a < 4.0 * (1.0 + b1);
            let v = exact_condition(Momentum, UpdateStyle::GaussSeidel, a, b1, 0.0, 1.0).unwrap();
            if v.is_boundary() {
                continue;
            }
            assert_eq!(v.stable, closed, "a={a} b1={b1}");
        }
    }

    #[test]
    fn ogd_region_inclusion_small_grid() {
        let grid = ParamGrid {
            alpha: Axis::new(0.1, 2.0, 0.1),
            beta1: Axis::new(-2.0, 2.0, 0.1),
            beta2: Axis::new(-2.0, 2.0, 0.1),
        };
        let report = region_inclusion_check(Ogd, 1.0, &grid).unwrap();
        assert_eq!(report.jacobi_only, 0, "examples: {:?}", report.jacobi_only_examples);
        assert!(report.gs_only > 0);
    }

    #[test]
    fn eg_counterexample_beta_three_halves() {
        // beta1 s^2 = beta2 s^2 = 3/2: Jacobi stable iff a^2 s^2 < 3/4,
        // GS stable iff a^2 s^2 < 1/4
        let s = 1.0;
        for (a2s2, expect_j, expect_gs) in
            [(0.1, true, true), (0.5, true, false), (0.8, false, false)]
        {
            let a = (a2s2f(a2s2)).sqrt();
            let jv = exact_condition(Eg, UpdateStyle::Jacobi, a, 1.5, 1.5, s).unwrap();
            let gv = exact_condition(Eg, UpdateStyle::GaussSeidel, a, 1.5, 1.5, s).unwrap();
            assert_eq!(jv.stable, expect_j, "a^2={a2s2}");
            assert_eq!(gv.stable, expect_gs, "a^2={a2s2}");
        }
        fn a2s2f(x: f64) -> f64 {
            x
        }
    }

    #[test]
    fn eg_gs_only_direction() {
        // beta = alpha^2 / 3 with alpha small: GS stable, Jacobi unstable
        let a = 0.01;
        let b = a * a / 3.0;
        let jv = exact_condition(Eg, UpdateStyle::Jacobi, a, b, b, 1.0).unwrap();
        let gv = exact_condition(Eg, UpdateStyle::GaussSeidel, a, b, b, 1.0).unwrap();
        assert!(!jv.stable);
        assert!(gv.stable);
    }

    #[test]
    fn gd_classifications() {
        // Jacobi GD diverges for every alpha; GS GD limit-cycles for
        // alpha^2 sigma^2 < 4 and diverges beyond
        for a in [0.1, 0.5, 1.0, 1.9] {
            let rep =
                convergence_report(Gd, UpdateStyle::Jacobi, a, a, 0.0, 0.0, &[1.0]).unwrap();
            assert_eq!(rep.classification, Classification::Diverges);
            assert!((rep.radius - (1.0 + a * a).sqrt()).abs() < 1e-9);
        }
        let rep = convergence_report(Gd, UpdateStyle::GaussSeidel, 1.0, 1.0, 0.0, 0.0, &[1.0])
            .unwrap();
        assert_eq!(rep.classification, Classification::LimitCyclePossible);
        assert!((rep.radius - 1.0).abs() < 1e-9);
        let rep = convergence_report(Gd, UpdateStyle::GaussSeidel, 2.5, 2.5, 0.0, 0.0, &[1.0])
            .unwrap();
        assert_eq!(rep.classification, Classification::Diverges);
    }

    #[test]
    fn rate_search_superlinear_box() {
        // box centered on the exact-convergence point of GS OGD
        let grid = ParamGrid {
            alpha: Axis::new(2.0f64.sqrt() - 0.1, 2.0f64.sqrt() + 0.1, 0.05),
            beta1: Axis::new(1.0 / 2.0f64.sqrt() - 0.1, 1.0 / 2.0f64.sqrt() + 0.1, 0.05),
            beta2: Axis::new(0.0, 0.0001, 0.05),
        };
        let res = optimal_rate_search(
            Ogd,
            UpdateStyle::GaussSeidel,
            &grid,
            &[1.0],
            &RateSearchConfig::default(),
        )
        .unwrap();
        assert!(res.superlinear, "r_star = {}", res.r_star);
        assert!(res.r_star < 1e-8);
    }

    #[test]
    fn rate_search_initially_empty() {
        // Jacobi momentum is unstable everywhere
        let grid = ParamGrid {
            alpha: Axis::new(0.1, 1.0, 0.1),
            beta1: Axis::new(-0.9, 0.9, 0.3),
            beta2: Axis::new(-0.9, 0.9, 0.3),
        };
        let err = optimal_rate_search(
            Momentum,
            UpdateStyle::Jacobi,
            &grid,
            &[1.0],
            &RateSearchConfig::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::InitialRegionEmpty(_)));
    }

    #[test]
    fn axis_values_inclusive() {
        let ax = Axis::new(-2.0, 2.0, 0.05);
        let vs = ax.values();
        assert_eq!(vs.len(), 81);
        assert!((vs[0] + 2.0).abs() < 1e-12);
        assert!((vs[80] - 2.0).abs() < 1e-9);
    }
}
