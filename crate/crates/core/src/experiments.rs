//! Reproducible desk-scale experiments: bilinear convergence curves,
//! Jacobi/Gauss-Seidel comparisons, the extra-gradient scaling study, and a
//! two-dimensional WGAN that learns the mean of a Gaussian.
//!
//! Every run is driven by a serializable config plus a seed; identical
//! inputs produce byte-identical CSV output. Randomness flows through the
//! counter-based generator in [`crate::rng`].

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::Path;

use crate::dynamics::{
    build_lds, simulate_from, AlgorithmKind, AlgorithmSpec, EmpiricalRate, Trajectory, UpdateStyle,
};
use crate::error::{Error, Result};
use crate::game::{BilinearGame, GameFile};
use crate::linalg::Matrix;
use crate::rng::SplitMix64;
use crate::stability::{self, Classification};
use crate::util::fmt_g17;

/// Where the game matrix of an experiment comes from.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum GameSource {
    /// Explicit matrix (and optional linear terms).
    Explicit(GameFile),
    /// Random orthogonal bases around a prescribed singular spectrum.
    RandomSpectrum { rows: usize, cols: usize, singular_values: Vec<f64> },
    /// The local bilinear game of the WGAN toy at its saddle: `E = -I/4`.
    WganLocal,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AlgoConfig {
    pub name: String,
    pub spec: AlgorithmSpec,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub game: GameSource,
    pub algorithms: Vec<AlgoConfig>,
    pub steps: usize,
    pub seed: u64,
}

/// Orthogonal matrix from Gram-Schmidt on a seeded Gaussian matrix.
fn random_orthogonal(n: usize, rng: &mut SplitMix64) -> Matrix {
    let mut q = Matrix::from_fn(n, n, |_, _| rng.standard_normal());
    for j in 0..n {
        for _ in 0..2 {
            for k in 0..j {
                let proj: f64 = (0..n).map(|i| q[(i, j)] * q[(i, k)]).sum();
                for i in 0..n {
                    q[(i, j)] -= proj * q[(i, k)];
                }
            }
        }
        let norm: f64 = (0..n).map(|i| q[(i, j)] * q[(i, j)]).sum::<f64>().sqrt();
        for i in 0..n {
            q[(i, j)] /= norm;
        }
    }
    q
}

/// Materializes a game source, consuming randomness from `rng` when needed.
pub fn realize_game(source: &GameSource, rng: &mut SplitMix64) -> Result<BilinearGame> {
    match source {
        GameSource::Explicit(gf) => {
            let e = Matrix::from_rows(&gf.e)?;
            let b = gf.b.clone().unwrap_or_else(|| vec![0.0; e.rows()]);
            let c = gf.c.clone().unwrap_or_else(|| vec![0.0; e.cols()]);
            BilinearGame::new(e, b, c)
        }
        GameSource::RandomSpectrum { rows, cols, singular_values } => {
            let r = singular_values.len();
            if r > *rows || r > *cols {
                return Err(Error::DimensionMismatch(format!(
                    "{r} singular values do not fit a {rows}x{cols} matrix"
                )));
            }
            let u = random_orthogonal(*rows, rng);
            let v = random_orthogonal(*cols, rng);
            let mut sigma = Matrix::zeros(*rows, *cols);
            for (i, s) in singular_values.iter().enumerate() {
                sigma[(i, i)] = *s;
            }
            BilinearGame::from_matrix(u.matmul(&sigma).matmul(&v.transpose()))
        }
        GameSource::WganLocal => {
            BilinearGame::from_matrix(Matrix::diag(&[-0.25, -0.25]))
        }
    }
}

/// Uniform initial state on `[-1, 1]^dim`.
pub fn random_initial_state(dim: usize, rng: &mut SplitMix64) -> Vec<f64> {
    (0..dim).map(|_| rng.uniform(-1.0, 1.0)).collect()
}

/// One simulated algorithm with its analysis attached.
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub name: String,
    pub spec: AlgorithmSpec,
    pub trajectory: Trajectory,
    pub empirical_rate: EmpiricalRate,
    pub spectral_radius: f64,
    pub classification: Classification,
}

fn run_one(
    name: &str,
    spec: &AlgorithmSpec,
    game: &BilinearGame,
    z0: &[f64],
    steps: usize,
) -> Result<RunOutcome> {
    let lds = build_lds(spec, game)?;
    let trajectory = simulate_from(&lds, z0, steps, Some(game))?;
    let empirical_rate = trajectory.empirical_rate(0.5);
    let sd = game.singular_data()?;
    let report = stability::convergence_report(
        spec.kind, spec.style, spec.alpha1, spec.alpha2, spec.beta1, spec.beta2, sd.values(),
    )?;
    Ok(RunOutcome {
        name: name.to_string(),
        spec: *spec,
        trajectory,
        empirical_rate,
        spectral_radius: report.radius,
        classification: report.classification,
    })
}

/// Runs every configured algorithm on the same game from the same seeded
/// initial point.
pub fn run_bilinear(config: &ExperimentConfig) -> Result<Vec<RunOutcome>> {
    let mut rng = SplitMix64::new(config.seed);
    let game = realize_game(&config.game, &mut rng)?;
    let z0 = random_initial_state(game.rows() + game.cols(), &mut rng);
    config
        .algorithms
        .iter()
        .map(|alg| run_one(&alg.name, &alg.spec, &game, &z0, config.steps))
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct ManifestEntry {
    pub name: String,
    pub spec: AlgorithmSpec,
    pub csv: String,
    pub empirical_rate: Option<f64>,
    pub converged_exactly: bool,
    pub spectral_radius: f64,
    pub classification: Classification,
}

#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub config: ExperimentConfig,
    pub config_hash: String,
    pub curves: Vec<ManifestEntry>,
}

pub fn config_hash(config: &ExperimentConfig) -> Result<String> {
    let json = serde_json::to_string(config)?;
    let mut hasher = Sha256::new();
    hasher.update(json.as_bytes());
    Ok(format!("{:x}", hasher.finalize()))
}

fn sanitize(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

/// Runs the experiment and writes one CSV per curve plus `manifest.json`
/// into `dir`. Returns the manifest.
pub fn run_bilinear_to_dir(config: &ExperimentConfig, dir: &Path) -> Result<Manifest> {
    std::fs::create_dir_all(dir)?;
    let outcomes = run_bilinear(config)?;
    let mut curves = Vec::new();
    for outcome in &outcomes {
        let file = format!("{}.csv", sanitize(&outcome.name));
        outcome.trajectory.write_csv(&dir.join(&file), false)?;
        curves.push(ManifestEntry {
            name: outcome.name.clone(),
            spec: outcome.spec,
            csv: file,
            empirical_rate: outcome.empirical_rate.rate(),
            converged_exactly: outcome.empirical_rate == EmpiricalRate::ConvergedExactly,
            spectral_radius: outcome.spectral_radius,
            classification: outcome.classification,
        });
    }
    let manifest = Manifest {
        config: config.clone(),
        config_hash: config_hash(config)?,
        curves,
    };
    std::fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
    Ok(manifest)
}

/// Paired Jacobi/Gauss-Seidel runs with identical parameters, game and
/// initial point.
pub fn compare_styles(
    kind: AlgorithmKind,
    alpha: f64,
    beta1: f64,
    beta2: f64,
    game: &BilinearGame,
    steps: usize,
    seed: u64,
) -> Result<(RunOutcome, RunOutcome)> {
    let mut rng = SplitMix64::new(seed);
    let z0 = random_initial_state(game.rows() + game.cols(), &mut rng);
    let jac = AlgorithmSpec::symmetric(kind, UpdateStyle::Jacobi, alpha, beta1, beta2)?;
    let gs = AlgorithmSpec::symmetric(kind, UpdateStyle::GaussSeidel, alpha, beta1, beta2)?;
    Ok((
        run_one("jacobi", &jac, game, &z0, steps)?,
        run_one("gs", &gs, game, &z0, steps)?,
    ))
}

/// Extra-gradient with and without scaling at the same product
/// `beta = alpha * gamma`: `(alpha, gamma) = (0.02, 2.0)` against
/// `(0.2, 0.2)` by default. Simultaneous updates: the full-step size only
/// enters the Jacobi radius, so that is where scaling pays off.
pub fn eg_scaling_comparison(
    game: &BilinearGame,
    scaled: (f64, f64),
    unscaled: (f64, f64),
    steps: usize,
    seed: u64,
) -> Result<(RunOutcome, RunOutcome)> {
    let beta_scaled = scaled.0 * scaled.1;
    let beta_unscaled = unscaled.0 * unscaled.1;
    if (beta_scaled - beta_unscaled).abs() > 1e-12 * beta_scaled.abs().max(1.0) {
        return Err(Error::InvalidSpec(format!(
            "the two settings must share beta = alpha*gamma, got {beta_scaled} vs {beta_unscaled}"
        )));
    }
    let mut rng = SplitMix64::new(seed);
    let z0 = random_initial_state(game.rows() + game.cols(), &mut rng);
    let spec_scaled =
        AlgorithmSpec::eg_with_gammas(UpdateStyle::Jacobi, scaled.0, scaled.0, scaled.1, scaled.1)?;
    let spec_unscaled = AlgorithmSpec::eg_with_gammas(
        UpdateStyle::Jacobi,
        unscaled.0,
        unscaled.0,
        unscaled.1,
        unscaled.1,
    )?;
    Ok((
        run_one("eg-scaled", &spec_scaled, game, &z0, steps)?,
        run_one("eg-unscaled", &spec_unscaled, game, &z0, steps)?,
    ))
}

// ---------------------------------------------------------------------------
// WGAN toy: learning the mean of a Gaussian

fn sigmoid(u: f64) -> f64 {
    1.0 / (1.0 + (-u).exp())
}

/// Derivative of the sigmoid, `s'(u) = s(u)(1 - s(u))`; `s'(0) = 1/4`.
pub fn sigmoid_deriv(u: f64) -> f64 {
    let s = sigmoid(u);
    s * (1.0 - s)
}

/// Two-dimensional WGAN learning a Gaussian mean: the generator shifts
/// noise by `phi`, the discriminator is a sigmoid readout along `theta`.
/// Near the saddle `(theta, phi) = (0, v)` the game is locally bilinear
/// with cross-Hessian `-I/4`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WganToy {
    pub target_mean: [f64; 2],
    /// Standard deviation of both the data and the generator noise.
    pub noise: f64,
    pub batch: usize,
    pub phi: [f64; 2],
    pub theta: [f64; 2],
}

impl WganToy {
    pub fn new(target_mean: [f64; 2], noise: f64, batch: usize) -> Self {
        WganToy { target_mean, noise, batch, phi: [0.0; 2], theta: [0.0; 2] }
    }

    /// Draws the initial parameters uniformly on `[-1, 1]^2`.
    pub fn with_random_init(mut self, rng: &mut SplitMix64) -> Self {
        self.phi = [rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)];
        self.theta = [rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)];
        self
    }

    /// One-batch stochastic gradients at `(phi, theta)`. Samples `batch`
    /// data points and `batch` generator draws; derivatives of the sigmoid
    /// are evaluated in closed form.
    pub fn gradients(
        &self,
        phi: [f64; 2],
        theta: [f64; 2],
        rng: &mut SplitMix64,
    ) -> ([f64; 2], [f64; 2]) {
        let mut g_theta = [0.0f64; 2];
        let mut g_phi_scale = 0.0f64;
        for _ in 0..self.batch {
            let x = [
                self.target_mean[0] + self.noise * rng.standard_normal(),
                self.target_mean[1] + self.noise * rng.standard_normal(),
            ];
            let z = [self.noise * rng.standard_normal(), self.noise * rng.standard_normal()];
            let sx = sigmoid_deriv(theta[0] * x[0] + theta[1] * x[1]);
            let gz = [z[0] + phi[0], z[1] + phi[1]];
            let sz = sigmoid_deriv(theta[0] * gz[0] + theta[1] * gz[1]);
            g_theta[0] += sx * x[0] - sz * gz[0];
            g_theta[1] += sx * x[1] - sz * gz[1];
            g_phi_scale -= sz;
        }
        let inv = 1.0 / self.batch as f64;
        (
            [g_phi_scale * theta[0] * inv, g_phi_scale * theta[1] * inv],
            [g_theta[0] * inv, g_theta[1] * inv],
        )
    }
}

/// Monte-Carlo finite-difference estimate of the cross-Hessian block
/// `d^2 f / d phi_i d theta_j` with per-entry standard errors.
#[derive(Clone, Debug, Serialize)]
pub struct HessianEstimate {
    pub entries: [[f64; 2]; 2],
    pub std_err: [[f64; 2]; 2],
}

/// Central differences in `phi` of the theta-gradient, with common random
/// numbers (one frozen sample set reused for both sides) and antithetic
/// pairs. At the saddle the per-sample integrand is linear in `phi`, so the
/// estimate is exact there and the standard error collapses.
pub fn wgan_local_hessian(toy: &WganToy, seed: u64, h: f64) -> HessianEstimate {
    let mut rng = SplitMix64::new(seed);
    let pairs = toy.batch / 2;
    let theta = toy.theta;
    let mut entries = [[0.0f64; 2]; 2];
    let mut sq_sums = [[0.0f64; 2]; 2];
    let n_samples = (2 * pairs) as f64;
    for _ in 0..pairs {
        let z_base = [toy.noise * rng.standard_normal(), toy.noise * rng.standard_normal()];
        for z in [z_base, [-z_base[0], -z_base[1]]] {
            // per-sample contribution of the generator term to grad_theta:
            // -s'(theta . (z + phi)) (z + phi); the data term has no phi
            // dependence and cancels in the difference.
            for i in 0..2 {
                for j in 0..2 {
                    let mut plus = toy.phi;
                    plus[i] += h;
                    let mut minus = toy.phi;
                    minus[i] -= h;
                    let gp = {
                        let g = [z[0] + plus[0], z[1] + plus[1]];
                        -sigmoid_deriv(theta[0] * g[0] + theta[1] * g[1]) * g[j]
                    };
                    let gm = {
                        let g = [z[0] + minus[0], z[1] + minus[1]];
                        -sigmoid_deriv(theta[0] * g[0] + theta[1] * g[1]) * g[j]
                    };
                    let fd = (gp - gm) / (2.0 * h);
                    entries[i][j] += fd;
                    sq_sums[i][j] += fd * fd;
                }
            }
        }
    }
    let mut std_err = [[0.0f64; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            entries[i][j] /= n_samples;
            let var = (sq_sums[i][j] / n_samples - entries[i][j] * entries[i][j]).max(0.0);
            std_err[i][j] = (var / n_samples).sqrt();
        }
    }
    HessianEstimate { entries, std_err }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WganMode {
    /// Sampled batches and stochastic gradients.
    Stochastic,
    /// Infinite-batch expectation of the local linearization: the exact
    /// bilinear dynamics on `E = -I/4` around the saddle.
    DeterministicLocal,
}

/// Squared distance `|phi - v|^2` along the run, including the start.
pub fn wgan_simulate(
    toy: &WganToy,
    spec: &AlgorithmSpec,
    steps: usize,
    seed: u64,
    mode: WganMode,
) -> Result<Vec<f64>> {
    spec.validate()?;
    if spec.kind == AlgorithmKind::Pp {
        return Err(Error::InvalidSpec("implicit proximal steps are not defined on the toy".into()));
    }
    match mode {
        WganMode::DeterministicLocal => {
            let game = BilinearGame::from_matrix(Matrix::diag(&[-0.25, -0.25]))?;
            let lds = build_lds(spec, &game)?;
            let z0 = vec![
                toy.phi[0] - toy.target_mean[0],
                toy.phi[1] - toy.target_mean[1],
                toy.theta[0],
                toy.theta[1],
            ];
            let traj = simulate_from(&lds, &z0, steps, None)?;
            Ok(traj
                .states
                .iter()
                .skip(lds.step_count() - 1)
                .map(|z| z[0] * z[0] + z[1] * z[1])
                .collect())
        }
        WganMode::Stochastic => stochastic_wgan(toy, spec, steps, seed),
    }
}

fn add2(a: [f64; 2], b: [f64; 2], s: f64) -> [f64; 2] {
    [a[0] + s * b[0], a[1] + s * b[1]]
}

fn stochastic_wgan(
    toy: &WganToy,
    spec: &AlgorithmSpec,
    steps: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let mut rng = SplitMix64::new(seed);
    let gs = spec.style == UpdateStyle::GaussSeidel;
    let (a1, a2, b1, b2) = (spec.alpha1, spec.alpha2, spec.beta1, spec.beta2);
    let mut phi = toy.phi;
    let mut theta = toy.theta;
    let v = toy.target_mean;
    let dist = |p: [f64; 2]| (p[0] - v[0]).powi(2) + (p[1] - v[1]).powi(2);
    let mut out = Vec::with_capacity(steps + 1);
    out.push(dist(phi));

    // per-method history, initialized by the duplicated-start convention
    let (init_gphi, init_gtheta) = toy.gradients(phi, theta, &mut rng);
    let mut prev_gphi = init_gphi;
    let mut prev_gtheta = init_gtheta;
    let mut prev_phi = phi;
    let mut prev_theta = theta;

    for _ in 0..steps {
        match spec.kind {
            AlgorithmKind::Gd => {
                if gs {
                    let (gp, _) = toy.gradients(phi, theta, &mut rng);
                    let new_phi = add2(phi, gp, -a1);
                    let (_, gt) = toy.gradients(new_phi, theta, &mut rng);
                    phi = new_phi;
                    theta = add2(theta, gt, a2);
                } else {
                    let (gp, gt) = toy.gradients(phi, theta, &mut rng);
                    phi = add2(phi, gp, -a1);
                    theta = add2(theta, gt, a2);
                }
            }
            AlgorithmKind::Eg => {
                let gamma1 = b1 / a2;
                let gamma2 = b2 / a1;
                let half = |p: [f64; 2], t: [f64; 2], rng: &mut SplitMix64| {
                    let (gp, gt) = toy.gradients(p, t, rng);
                    (add2(p, gp, -gamma1), add2(t, gt, gamma2))
                };
                if gs {
                    let (ph, th) = half(phi, theta, &mut rng);
                    let (gp, _) = toy.gradients(ph, th, &mut rng);
                    let new_phi = add2(phi, gp, -a1);
                    let (ph2, th2) = half(new_phi, theta, &mut rng);
                    let (_, gt) = toy.gradients(ph2, th2, &mut rng);
                    phi = new_phi;
                    theta = add2(theta, gt, a2);
                } else {
                    let (ph, th) = half(phi, theta, &mut rng);
                    let (gp, gt) = toy.gradients(ph, th, &mut rng);
                    phi = add2(phi, gp, -a1);
                    theta = add2(theta, gt, a2);
                }
            }
            AlgorithmKind::Ogd => {
                if gs {
                    let (gp, _) = toy.gradients(phi, theta, &mut rng);
                    let new_phi = add2(add2(phi, gp, -a1), prev_gphi, b1);
                    prev_gphi = gp;
                    let (_, gt) = toy.gradients(new_phi, theta, &mut rng);
                    phi = new_phi;
                    theta = add2(add2(theta, gt, a2), prev_gtheta, -b2);
                    prev_gtheta = gt;
                } else {
                    let (gp, gt) = toy.gradients(phi, theta, &mut rng);
                    phi = add2(add2(phi, gp, -a1), prev_gphi, b1);
                    theta = add2(add2(theta, gt, a2), prev_gtheta, -b2);
                    prev_gphi = gp;
                    prev_gtheta = gt;
                }
            }
            AlgorithmKind::Momentum => {
                if gs {
                    let (gp, _) = toy.gradients(phi, theta, &mut rng);
                    let new_phi = add2(add2(phi, gp, -a1), [phi[0] - prev_phi[0], phi[1] - prev_phi[1]], b1);
                    prev_phi = phi;
                    let (_, gt) = toy.gradients(new_phi, theta, &mut rng);
                    let new_theta =
                        add2(add2(theta, gt, a2), [theta[0] - prev_theta[0], theta[1] - prev_theta[1]], b2);
                    prev_theta = theta;
                    phi = new_phi;
                    theta = new_theta;
                } else {
                    let (gp, gt) = toy.gradients(phi, theta, &mut rng);
                    let new_phi = add2(add2(phi, gp, -a1), [phi[0] - prev_phi[0], phi[1] - prev_phi[1]], b1);
                    let new_theta =
                        add2(add2(theta, gt, a2), [theta[0] - prev_theta[0], theta[1] - prev_theta[1]], b2);
                    prev_phi = phi;
                    prev_theta = theta;
                    phi = new_phi;
                    theta = new_theta;
                }
            }
            AlgorithmKind::Pp => unreachable!(),
        }
        out.push(dist(phi));
    }
    Ok(out)
}

/// Writes a squared-distance curve as CSV with columns `t,dist_sq`.
pub fn write_distance_csv(values: &[f64], path: &Path) -> Result<()> {
    let mut out = String::from("t,dist_sq\n");
    for (t, v) in values.iter().enumerate() {
        out.push_str(&format!("{},{}\n", t, fmt_g17(*v)));
    }
    std::fs::write(path, out)?;
    Ok(())
}
