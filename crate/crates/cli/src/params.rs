//! Parameter resolution (defaults < config file < explicit flags), the
//! subcommand bodies, and manifest writing. All numeric work happens in the
//! library; this module only marshals arguments and files.

use serde::{de::DeserializeOwned, Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

use bilingame::dynamics::{self, AlgorithmKind, AlgorithmSpec, UpdateStyle};
use bilingame::error::{Error, Result};
use bilingame::experiments::{self, WganMode, WganToy};
use bilingame::game::{self, BilinearGame};
use bilingame::rng::SplitMix64;
use bilingame::spectral::{self, AxisSpec};
use bilingame::stability::{self, Axis, Classification, ParamGrid, RateSearchConfig};
use bilingame::tuning;
use bilingame::Matrix;

use crate::CommandArgs;

fn parse_alg(s: &str) -> Result<AlgorithmKind> {
    match s {
        "gd" => Ok(AlgorithmKind::Gd),
        "eg" => Ok(AlgorithmKind::Eg),
        "ogd" => Ok(AlgorithmKind::Ogd),
        "momentum" => Ok(AlgorithmKind::Momentum),
        "pp" => Ok(AlgorithmKind::Pp),
        other => Err(Error::InvalidSpec(format!(
            "unknown algorithm {other:?} (expected gd|eg|ogd|momentum|pp)"
        ))),
    }
}

fn parse_style(s: &str) -> Result<UpdateStyle> {
    match s {
        "jacobi" => Ok(UpdateStyle::Jacobi),
        "gs" | "gauss-seidel" => Ok(UpdateStyle::GaussSeidel),
        other => Err(Error::InvalidSpec(format!(
            "unknown style {other:?} (expected jacobi|gs)"
        ))),
    }
}

/// Loads `Params` from the config file (a bare params object or a manifest
/// with a `params` field), falling back to defaults.
fn load_config<P: DeserializeOwned + Default>(path: &Option<PathBuf>) -> Result<P> {
    let Some(path) = path else { return Ok(P::default()) };
    let text = std::fs::read_to_string(path)?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    let params_value = match value.get("params") {
        Some(inner) => inner.clone(),
        None => value,
    };
    Ok(serde_json::from_value(params_value)?)
}

fn override_opt<T: Copy>(slot: &mut T, flag: Option<T>) {
    if let Some(v) = flag {
        *slot = v;
    }
}

/// Writes the manifest next to the primary output (or to `--manifest`).
fn write_manifest<P: Serialize>(
    subcommand: &str,
    args: &CommandArgs,
    params: &P,
    outputs: &[String],
) -> Result<PathBuf> {
    let params_json = serde_json::to_value(params)?;
    let mut hasher = Sha256::new();
    hasher.update(serde_json::to_string(&params_json)?.as_bytes());
    let manifest = json!({
        "subcommand": subcommand,
        "params": params_json,
        "config_hash": format!("{:x}", hasher.finalize()),
        "outputs": outputs,
    });
    let path = args.manifest.clone().unwrap_or_else(|| {
        args.out
            .as_ref()
            .map(|o| o.with_extension("manifest.json"))
            .or_else(|| args.out_dir.as_ref().map(|d| d.join("manifest.json")))
            .unwrap_or_else(|| PathBuf::from(format!("bilingame_{subcommand}_manifest.json")))
    });
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    std::fs::write(&path, serde_json::to_string_pretty(&manifest)?)?;
    Ok(path)
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

// ---------------------------------------------------------------------------
// shared spec/sigma resolution

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct SpecParams {
    pub alg: AlgorithmKind,
    pub style: UpdateStyle,
    pub alpha1: f64,
    pub alpha2: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub sigmas: Vec<f64>,
    pub game: Option<PathBuf>,
}

impl Default for SpecParams {
    fn default() -> Self {
        SpecParams {
            alg: AlgorithmKind::Gd,
            style: UpdateStyle::Jacobi,
            alpha1: 0.1,
            alpha2: 0.1,
            beta1: 0.0,
            beta2: 0.0,
            sigmas: vec![1.0],
            game: None,
        }
    }
}

impl SpecParams {
    fn apply_flags(&mut self, args: &CommandArgs) -> Result<()> {
        if let Some(alg) = &args.alg {
            self.alg = parse_alg(alg)?;
        }
        if let Some(style) = &args.style {
            self.style = parse_style(style)?;
        }
        if let Some(a) = args.alpha {
            self.alpha1 = a;
            self.alpha2 = a;
        }
        override_opt(&mut self.alpha1, args.alpha1);
        override_opt(&mut self.alpha2, args.alpha2);
        override_opt(&mut self.beta1, args.beta1);
        override_opt(&mut self.beta2, args.beta2);
        if let Some(gamma) = args.gamma {
            if self.alg != AlgorithmKind::Eg {
                return Err(Error::InvalidSpec("--gamma only applies to eg".into()));
            }
            self.beta1 = self.alpha2 * gamma;
            self.beta2 = self.alpha1 * gamma;
        }
        if !args.sigmas.is_empty() {
            self.sigmas = args.sigmas.clone();
        }
        if let Some(g) = &args.game {
            self.game = Some(g.clone());
        }
        Ok(())
    }

    fn spec(&self) -> Result<AlgorithmSpec> {
        AlgorithmSpec::new(self.alg, self.style, self.alpha1, self.alpha2, self.beta1, self.beta2)
    }

    /// The game to act on: an explicit file, or diag(sigmas).
    fn load_game(&self) -> Result<BilinearGame> {
        match &self.game {
            Some(path) => game::load_game(&std::fs::read_to_string(path)?),
            None => BilinearGame::from_matrix(Matrix::diag(&self.sigmas)),
        }
    }

    /// Singular values to analyze: from the game file when given.
    fn resolve_sigmas(&self) -> Result<Vec<f64>> {
        match &self.game {
            Some(path) => {
                let g = game::load_game(&std::fs::read_to_string(path)?)?;
                Ok(g.singular_data()?.values().to_vec())
            }
            None => {
                if self.sigmas.is_empty() || self.sigmas.iter().any(|s| *s <= 0.0) {
                    return Err(Error::InvalidSpec("need positive --sigma values".into()));
                }
                Ok(self.sigmas.clone())
            }
        }
    }
}

// ---------------------------------------------------------------------------
// analyze

pub fn run_analyze(args: &CommandArgs) -> Result<u8> {
    let mut params: SpecParams = load_config(&args.config)?;
    params.apply_flags(args)?;
    params.spec()?;
    let sigmas = params.resolve_sigmas()?;
    let report = stability::convergence_report(
        params.alg,
        params.style,
        params.alpha1,
        params.alpha2,
        params.beta1,
        params.beta2,
        &sigmas,
    )?;
    print_json(&report)?;
    write_manifest("analyze", args, &params, &[])?;
    Ok(match report.classification {
        Classification::Converges => 0,
        Classification::Diverges => 10,
        Classification::LimitCyclePossible => 11,
    })
}

// ---------------------------------------------------------------------------
// simulate

#[derive(Clone, Debug, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct SimulateParams {
    #[serde(flatten)]
    pub spec: SpecParams,
    pub steps: usize,
    pub seed: u64,
    pub include_state: bool,
}

pub fn run_simulate(args: &CommandArgs) -> Result<u8> {
    if let Some(exp_path) = &args.experiment {
        let config: experiments::ExperimentConfig =
            serde_json::from_str(&std::fs::read_to_string(exp_path)?)?;
        let dir = args.out_dir.clone().unwrap_or_else(|| PathBuf::from("experiment_out"));
        let manifest = experiments::run_bilinear_to_dir(&config, &dir)?;
        print_json(&manifest)?;
        return Ok(0);
    }
    let mut params: SimulateParams = load_config(&args.config)?;
    if params.steps == 0 {
        params.steps = 2000;
    }
    params.spec.apply_flags(args)?;
    override_opt(&mut params.steps, args.steps);
    override_opt(&mut params.seed, args.seed);
    if args.state {
        params.include_state = true;
    }
    let spec = params.spec.spec()?;
    let game = params.spec.load_game()?;
    let lds = dynamics::build_lds(&spec, &game)?;
    let mut rng = SplitMix64::new(params.seed);
    let z0 = experiments::random_initial_state(game.rows() + game.cols(), &mut rng);
    let traj = dynamics::simulate_from(&lds, &z0, params.steps, Some(&game))?;
    let mut outputs = Vec::new();
    if let Some(out) = &args.out {
        traj.write_csv(out, params.include_state)?;
        outputs.push(out.display().to_string());
    }
    let sigmas = game.singular_data()?.values().to_vec();
    let report = stability::convergence_report(
        params.spec.alg,
        params.spec.style,
        params.spec.alpha1,
        params.spec.alpha2,
        params.spec.beta1,
        params.spec.beta2,
        &sigmas,
    )?;
    // fit the saddle distance: it equals the state norm on full-rank games
    // and ignores the frozen null-space components on singular ones
    let rate = traj.empirical_delta_rate(0.5).unwrap_or_else(|| traj.empirical_rate(0.5));
    print_json(&json!({
        "empirical_rate": rate.rate(),
        "converged_exactly": rate == dynamics::EmpiricalRate::ConvergedExactly,
        "spectral_radius": report.radius,
        "classification": report.classification,
        "final_delta_sq": traj.delta_sq.as_ref().and_then(|d| d.last()),
        "steps": params.steps,
    }))?;
    write_manifest("simulate", args, &params, &outputs)?;
    Ok(0)
}

// ---------------------------------------------------------------------------
// heatmap

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct HeatmapParams {
    pub alg: AlgorithmKind,
    pub style: UpdateStyle,
    pub sigmas: Vec<f64>,
    pub amin: f64,
    pub amax: f64,
    pub asteps: usize,
    pub bmin: f64,
    pub bmax: f64,
    pub bsteps: usize,
    pub cap: f64,
}

impl Default for HeatmapParams {
    fn default() -> Self {
        // the standard density-plot window: alpha in [0,2], beta in [-2,2]
        HeatmapParams {
            alg: AlgorithmKind::Eg,
            style: UpdateStyle::Jacobi,
            sigmas: vec![1.0],
            amin: 0.0,
            amax: 2.0,
            asteps: 81,
            bmin: -2.0,
            bmax: 2.0,
            bsteps: 161,
            cap: 2.0,
        }
    }
}

pub fn run_heatmap(args: &CommandArgs) -> Result<u8> {
    let mut params: HeatmapParams = load_config(&args.config)?;
    if let Some(alg) = &args.alg {
        params.alg = parse_alg(alg)?;
    }
    if let Some(style) = &args.style {
        params.style = parse_style(style)?;
    }
    if !args.sigmas.is_empty() {
        params.sigmas = args.sigmas.clone();
    }
    override_opt(&mut params.amin, args.amin);
    override_opt(&mut params.amax, args.amax);
    override_opt(&mut params.asteps, args.asteps);
    override_opt(&mut params.bmin, args.bmin);
    override_opt(&mut params.bmax, args.bmax);
    override_opt(&mut params.bsteps, args.bsteps);
    override_opt(&mut params.cap, args.cap);
    let grid = spectral::radius_surface(
        params.alg,
        params.style,
        &params.sigmas,
        AxisSpec::new(params.amin, params.amax, params.asteps),
        AxisSpec::new(params.bmin, params.bmax, params.bsteps),
        params.cap,
    )?;
    let mut outputs = Vec::new();
    if let Some(out) = &args.out {
        spectral::write_heatmap_csv(&grid, out)?;
        outputs.push(out.display().to_string());
    }
    if let Some(pgm) = &args.pgm {
        spectral::write_heatmap_pgm(&grid, pgm)?;
        outputs.push(pgm.display().to_string());
    }
    let stable = grid.values.iter().filter(|v| **v < 1.0 - 1e-9).count();
    let min_radius = grid.values.iter().cloned().fold(f64::INFINITY, f64::min);
    print_json(&json!({
        "cells": grid.values.len(),
        "stable_cells": stable,
        "min_radius": min_radius,
    }))?;
    write_manifest("heatmap", args, &params, &outputs)?;
    Ok(0)
}

// ---------------------------------------------------------------------------
// tune

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct TuneParams {
    pub alg: AlgorithmKind,
    pub style: UpdateStyle,
    pub sigma1: f64,
    pub sigman: f64,
    /// When set, run an exhaustive grid search at sigma = sigma1 instead of
    /// the closed form.
    pub grid_step: Option<f64>,
}

impl Default for TuneParams {
    fn default() -> Self {
        TuneParams {
            alg: AlgorithmKind::Eg,
            style: UpdateStyle::Jacobi,
            sigma1: 1.0,
            sigman: 1.0,
            grid_step: None,
        }
    }
}

pub fn run_tune(args: &CommandArgs) -> Result<u8> {
    let mut params: TuneParams = load_config(&args.config)?;
    if let Some(alg) = &args.alg {
        params.alg = parse_alg(alg)?;
    }
    if let Some(style) = &args.style {
        params.style = parse_style(style)?;
    }
    override_opt(&mut params.sigma1, args.sigma1);
    override_opt(&mut params.sigman, args.sigman);
    if args.grid_step.is_some() {
        params.grid_step = args.grid_step;
    }
    let result = match params.grid_step {
        Some(step) => tuning::grid_search(
            params.alg,
            params.style,
            params.sigma1,
            &ParamGrid::standard(step),
        )?,
        None => match (params.alg, params.style) {
            (AlgorithmKind::Eg, style) => {
                tuning::eg_optimal(params.sigma1, params.sigman, style)?
            }
            (AlgorithmKind::Ogd, UpdateStyle::Jacobi) => {
                tuning::jacobi_ogd_optimal(params.sigma1, params.sigman)?
            }
            (AlgorithmKind::Ogd, UpdateStyle::GaussSeidel) => {
                tuning::gs_ogd_optimal(params.sigma1, params.sigman)?
            }
            (AlgorithmKind::Momentum, UpdateStyle::GaussSeidel) => {
                tuning::gs_momentum_optimal(params.sigma1, params.sigman)?
            }
            (kind, style) => {
                return Err(Error::InvalidSpec(format!(
                    "no tuned rate for {kind} with {style} updates"
                )))
            }
        },
    };
    print_json(&result)?;
    write_manifest("tune", args, &params, &[])?;
    Ok(0)
}

// ---------------------------------------------------------------------------
// search

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchParams {
    pub alg: AlgorithmKind,
    pub style: UpdateStyle,
    pub sigmas: Vec<f64>,
    pub amin: f64,
    pub amax: f64,
    pub bmin: f64,
    pub bmax: f64,
    pub step: f64,
    pub shrink: f64,
    pub refine: usize,
}

impl Default for SearchParams {
    fn default() -> Self {
        SearchParams {
            alg: AlgorithmKind::Ogd,
            style: UpdateStyle::GaussSeidel,
            sigmas: vec![1.0],
            amin: 0.0,
            amax: 2.0,
            bmin: -2.0,
            bmax: 2.0,
            step: 0.05,
            shrink: 0.99,
            refine: 4,
        }
    }
}

pub fn run_search(args: &CommandArgs) -> Result<u8> {
    let mut params: SearchParams = load_config(&args.config)?;
    if let Some(alg) = &args.alg {
        params.alg = parse_alg(alg)?;
    }
    if let Some(style) = &args.style {
        params.style = parse_style(style)?;
    }
    if !args.sigmas.is_empty() {
        params.sigmas = args.sigmas.clone();
    }
    override_opt(&mut params.amin, args.amin);
    override_opt(&mut params.amax, args.amax);
    override_opt(&mut params.bmin, args.bmin);
    override_opt(&mut params.bmax, args.bmax);
    override_opt(&mut params.step, args.step);
    override_opt(&mut params.shrink, args.shrink);
    override_opt(&mut params.refine, args.refine);
    let grid = ParamGrid {
        alpha: Axis::new(params.amin.max(params.step), params.amax, params.step),
        beta1: Axis::new(params.bmin, params.bmax, params.step),
        beta2: Axis::new(params.bmin, params.bmax, params.step),
    };
    let config = RateSearchConfig {
        shrink: params.shrink,
        refine_rounds: params.refine,
        ..RateSearchConfig::default()
    };
    let result =
        stability::optimal_rate_search(params.alg, params.style, &grid, &params.sigmas, &config)?;
    print_json(&result)?;
    write_manifest("search", args, &params, &[])?;
    Ok(0)
}

// ---------------------------------------------------------------------------
// region

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct RegionParams {
    pub alg: AlgorithmKind,
    pub sigma: f64,
    pub amin: f64,
    pub amax: f64,
    pub bmin: f64,
    pub bmax: f64,
    pub step: f64,
}

impl Default for RegionParams {
    fn default() -> Self {
        RegionParams {
            alg: AlgorithmKind::Ogd,
            sigma: 1.0,
            amin: 0.0,
            amax: 2.0,
            bmin: -2.0,
            bmax: 2.0,
            step: 0.05,
        }
    }
}

pub fn run_region(args: &CommandArgs) -> Result<u8> {
    let mut params: RegionParams = load_config(&args.config)?;
    if let Some(alg) = &args.alg {
        params.alg = parse_alg(alg)?;
    }
    if let Some(s) = args.sigmas.first() {
        params.sigma = *s;
    }
    override_opt(&mut params.amin, args.amin);
    override_opt(&mut params.amax, args.amax);
    override_opt(&mut params.bmin, args.bmin);
    override_opt(&mut params.bmax, args.bmax);
    override_opt(&mut params.step, args.step);
    let grid = ParamGrid {
        alpha: Axis::new(params.amin.max(params.step), params.amax, params.step),
        beta1: Axis::new(params.bmin, params.bmax, params.step),
        beta2: Axis::new(params.bmin, params.bmax, params.step),
    };
    let report = stability::region_inclusion_check(params.alg, params.sigma, &grid)?;
    let mut outputs = Vec::new();
    if let Some(dir) = &args.out_dir {
        std::fs::create_dir_all(dir)?;
        for style in [UpdateStyle::Jacobi, UpdateStyle::GaussSeidel] {
            let path = dir.join(format!("{style}.csv"));
            write_region_csv(params.alg, style, params.sigma, &grid, &path)?;
            outputs.push(path.display().to_string());
        }
    }
    print_json(&report)?;
    write_manifest("region", args, &params, &outputs)?;
    Ok(0)
}

/// CSV columns: alpha, beta1, beta2, radius, stable.
fn write_region_csv(
    kind: AlgorithmKind,
    style: UpdateStyle,
    sigma: f64,
    grid: &ParamGrid,
    path: &Path,
) -> Result<()> {
    use bilingame::charpoly::char_poly_unchecked;
    use std::fmt::Write as _;
    let mut out = String::from("alpha,beta1,beta2,radius,stable\n");
    for &[a, b1, b2] in &grid.points() {
        let p = char_poly_unchecked(kind, style, a, a, b1, b2, sigma);
        let radius = spectral::spectral_radius(&p)?;
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            fmt17(a),
            fmt17(b1),
            fmt17(b2),
            fmt17(radius),
            radius < 1.0 - 1e-9
        );
    }
    std::fs::write(path, out)?;
    Ok(())
}

fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

// ---------------------------------------------------------------------------
// wgan

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct WganParams {
    pub alg: AlgorithmKind,
    pub style: UpdateStyle,
    pub alpha: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub steps: usize,
    pub seed: u64,
    pub batch: usize,
    pub noise: f64,
    pub target: [f64; 2],
    pub mode: String,
    pub hessian: bool,
}

impl Default for WganParams {
    fn default() -> Self {
        WganParams {
            alg: AlgorithmKind::Eg,
            style: UpdateStyle::GaussSeidel,
            alpha: 0.02,
            beta1: 0.004,
            beta2: 0.004,
            steps: 15000,
            seed: 0,
            batch: 256,
            noise: 1.0,
            target: [0.5, -0.5],
            mode: "stochastic".into(),
            hessian: false,
        }
    }
}

pub fn run_wgan(args: &CommandArgs) -> Result<u8> {
    let mut params: WganParams = load_config(&args.config)?;
    if let Some(alg) = &args.alg {
        params.alg = parse_alg(alg)?;
    }
    if let Some(style) = &args.style {
        params.style = parse_style(style)?;
    }
    override_opt(&mut params.alpha, args.alpha);
    override_opt(&mut params.beta1, args.beta1);
    override_opt(&mut params.beta2, args.beta2);
    if let Some(gamma) = args.gamma {
        params.beta1 = params.alpha * gamma;
        params.beta2 = params.alpha * gamma;
    }
    override_opt(&mut params.steps, args.steps);
    override_opt(&mut params.seed, args.seed);
    override_opt(&mut params.batch, args.batch);
    override_opt(&mut params.noise, args.noise);
    if let Some(t) = &args.target {
        params.target = [t[0], t[1]];
    }
    if let Some(mode) = &args.mode {
        params.mode = mode.clone();
    }
    if args.hessian {
        params.hessian = true;
    }
    let mode = match params.mode.as_str() {
        "stochastic" => WganMode::Stochastic,
        "deterministic" => WganMode::DeterministicLocal,
        other => {
            return Err(Error::InvalidSpec(format!(
                "unknown mode {other:?} (expected stochastic|deterministic)"
            )))
        }
    };
    let mut rng = SplitMix64::new(params.seed);
    let toy = WganToy::new(params.target, params.noise, params.batch).with_random_init(&mut rng);
    let spec = AlgorithmSpec::symmetric(
        params.alg,
        params.style,
        params.alpha,
        params.beta1,
        params.beta2,
    )?;
    let dists = experiments::wgan_simulate(&toy, &spec, params.steps, params.seed, mode)?;
    let mut outputs = Vec::new();
    if let Some(out) = &args.out {
        experiments::write_distance_csv(&dists, out)?;
        outputs.push(out.display().to_string());
    }
    let hessian = params.hessian.then(|| {
        let mut saddle = toy.clone();
        saddle.phi = params.target;
        saddle.theta = [0.0, 0.0];
        let mut at = saddle;
        at.batch = at.batch.max(100_000);
        experiments::wgan_local_hessian(&at, params.seed, 2.0f64.powi(-10))
    });
    print_json(&json!({
        "initial_dist_sq": dists.first(),
        "final_dist_sq": dists.last(),
        "min_dist_sq": dists.iter().cloned().fold(f64::INFINITY, f64::min),
        "hessian": hessian,
    }))?;
    write_manifest("wgan", args, &params, &outputs)?;
    Ok(0)
}
