//! Region-wide upper bound on a cost surrogate by projected gradient ascent.
//!
//! Each restart starts from a random point of the load region and repeats
//! `ℓ <- Proj(ℓ + β ∇f(ℓ))`. The bound is the largest surrogate value seen on
//! any iterate of any restart.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netcase::LoadVector;
use crate::predictor::MlpModel;
use crate::screening::LoadRegion;

/// Differentiable scalar function of the load vector.
pub trait CostSurrogate: Sync {
    fn dim(&self) -> usize;
    fn value(&self, load: &[f64]) -> Result<f64>;
    fn gradient(&self, load: &[f64]) -> Result<Vec<f64>>;
}

impl CostSurrogate for MlpModel {
    fn dim(&self) -> usize {
        self.input_dim()
    }

    fn value(&self, load: &[f64]) -> Result<f64> {
        self.predict(load)
    }

    fn gradient(&self, load: &[f64]) -> Result<Vec<f64>> {
        self.input_gradient(load)
    }
}

/// Euclidean projection onto `{lo <= x <= hi, Σx = level}`.
///
/// The solution has the form `x_i = clip(v_i - λ, lo_i, hi_i)`; `λ` is found
/// by bisection on the monotone map `λ -> Σ x_i(λ)` and then solved exactly
/// on the resulting free set.
pub fn project_box_level(v: &[f64], lo: &[f64], hi: &[f64], level: f64) -> Result<Vec<f64>> {
    let n = v.len();
    if lo.len() != n || hi.len() != n {
        return Err(Error::Dimension {
            what: "projection bounds",
            expected: n,
            got: lo.len().min(hi.len()),
        });
    }
    let sum_lo: f64 = lo.iter().sum();
    let sum_hi: f64 = hi.iter().sum();
    let tol = 1e-9 * level.abs().max(1.0);
    if level < sum_lo - tol || level > sum_hi + tol || lo.iter().zip(hi).any(|(l, h)| l > h) {
        return Err(Error::EmptyRegion(format!(
            "level {level} outside [{sum_lo}, {sum_hi}]"
        )));
    }
    let at = |lambda: f64| -> Vec<f64> {
        v.iter()
            .zip(lo.iter().zip(hi))
            .map(|(x, (l, h))| (x - lambda).clamp(*l, *h))
            .collect()
    };
    let total = |x: &[f64]| x.iter().sum::<f64>();

    // Σ x(λ) decreases in λ; it equals Σhi at `a` and Σlo at `b`.
    let mut a = v.iter().zip(hi).map(|(x, h)| x - h).fold(f64::INFINITY, f64::min);
    let mut b = v.iter().zip(lo).map(|(x, l)| x - l).fold(f64::NEG_INFINITY, f64::max);
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut x = at(0.5 * (a + b));
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        x = at(mid);
        let s = total(&x);
        if (s - level).abs() <= tol * 1e-3 || b - a <= f64::EPSILON * mid.abs().max(1.0) {
            break;
        }
        if s > level {
            a = mid;
        } else {
            b = mid;
        }
    }

    // Exact multiplier on the free set of the bisection point.
    let free: Vec<usize> = (0..n).filter(|&i| x[i] > lo[i] && x[i] < hi[i]).collect();
    if !free.is_empty() {
        let clipped: f64 = (0..n).filter(|i| !free.contains(i)).map(|i| x[i]).sum();
        let free_v: f64 = free.iter().map(|&i| v[i]).sum();
        let lambda = (free_v + clipped - level) / free.len() as f64;
        let mut polished = x.clone();
        for &i in &free {
            polished[i] = (v[i] - lambda).clamp(lo[i], hi[i]);
        }
        if (total(&polished) - level).abs() <= (total(&x) - level).abs() {
            x = polished;
        }
    }
    if (total(&x) - level).abs() > tol {
        return Err(Error::Numerical(format!(
            "projection missed the load level: {} vs {level}",
            total(&x)
        )));
    }
    Ok(x)
}

/// Closest point of `region` to `v`.
pub fn project_region(v: &[f64], region: &LoadRegion) -> Result<LoadVector> {
    if v.len() != region.dim() {
        return Err(Error::Dimension {
            what: "projected vector",
            expected: region.dim(),
            got: v.len(),
        });
    }
    let (lo, hi) = region.box_bounds();
    let x = project_box_level(v, &lo, &hi, region.level)?;
    // Box clipping keeps every entry >= (1 - r) ℓ̄ >= 0.
    LoadVector::new(x)
}

/// Uniform draw from the region's box, projected onto its load level.
pub fn sample_region<R: Rng>(region: &LoadRegion, rng: &mut R) -> Result<LoadVector> {
    let (lo, hi) = region.box_bounds();
    let raw: Vec<f64> = lo
        .iter()
        .zip(&hi)
        .map(|(&l, &h)| if h > l { rng.gen_range(l..h) } else { l })
        .collect();
    project_region(&raw, region)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PgaConfig {
    /// Defaults to `0.05 * max(ℓ̄)`.
    pub step_size: Option<f64>,
    pub max_iters: usize,
    /// Defaults to `1e-6 * max(ℓ̄)`.
    pub tol_converge: Option<f64>,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for PgaConfig {
    fn default() -> Self {
        Self {
            step_size: None,
            max_iters: 1000,
            tol_converge: None,
            restarts: 10,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PgaResult {
    pub bound: f64,
    pub argmax_load: LoadVector,
    /// Ascent steps taken over all restarts.
    pub iterates: usize,
    /// Best surrogate value reached by each restart.
    pub restart_traces: Vec<f64>,
    /// Surrogate value at every iterate of the winning restart.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub winning_trajectory: Vec<f64>,
}

struct Ascent {
    best: f64,
    argmax: Vec<f64>,
    steps: usize,
    trajectory: Vec<f64>,
}

fn ascend<S: CostSurrogate + ?Sized>(
    model: &S,
    region: &LoadRegion,
    start: Vec<f64>,
    step: f64,
    tol: f64,
    max_iters: usize,
) -> Result<Ascent> {
    let mut load = start;
    let mut best = model.value(&load)?;
    let mut argmax = load.clone();
    let mut trajectory = vec![best];
    let mut steps = 0;
    while steps < max_iters {
        let grad = model.gradient(&load)?;
        let moved: Vec<f64> = load.iter().zip(&grad).map(|(l, g)| l + step * g).collect();
        let next = project_region(&moved, region)?.into_inner();
        steps += 1;
        let value = model.value(&next)?;
        trajectory.push(value);
        if value > best {
            best = value;
            argmax.clone_from(&next);
        }
        let delta = next
            .iter()
            .zip(&load)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        load = next;
        if delta < tol {
            break;
        }
    }
    Ok(Ascent {
        best,
        argmax,
        steps,
        trajectory,
    })
}

pub fn run_pga<S: CostSurrogate + ?Sized>(
    model: &S,
    region: &LoadRegion,
    config: &PgaConfig,
) -> Result<PgaResult> {
    run_pga_from(model, region, config, &[])
}

/// [`run_pga`] with extra starting points ascended before the random restarts.
pub fn run_pga_from<S: CostSurrogate + ?Sized>(
    model: &S,
    region: &LoadRegion,
    config: &PgaConfig,
    warm_starts: &[LoadVector],
) -> Result<PgaResult> {
    if model.dim() != region.dim() {
        return Err(Error::Dimension {
            what: "surrogate input",
            expected: region.dim(),
            got: model.dim(),
        });
    }
    if config.max_iters == 0 || config.restarts == 0 {
        return Err(Error::Config("PGA needs max_iters >= 1 and restarts >= 1".into()));
    }
    let scale = region
        .nominal
        .as_slice()
        .iter()
        .fold(0.0_f64, |a, b| a.max(b.abs()));
    let step = config.step_size.unwrap_or(0.05 * scale);
    let tol = config.tol_converge.unwrap_or(1e-6 * scale);
    if (step.is_nan() || step <= 0.0) && scale > 0.0 {
        return Err(Error::Config(format!("PGA step size must be > 0, got {step}")));
    }

    let mut starts = Vec::with_capacity(warm_starts.len() + config.restarts);
    for w in warm_starts {
        starts.push(project_region(w.as_slice(), region)?.into_inner());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    for _ in 0..config.restarts {
        starts.push(sample_region(region, &mut rng)?.into_inner());
    }

    let runs = starts
        .into_par_iter()
        .map(|s| ascend(model, region, s, step, tol, config.max_iters))
        .collect::<Vec<_>>()
        .into_iter()
        .collect::<Result<Vec<_>>>()?;

    let winner = runs
        .iter()
        .enumerate()
        .fold(0, |w, (i, r)| if r.best > runs[w].best { i } else { w });
    let best = &runs[winner];
    Ok(PgaResult {
        bound: best.best,
        argmax_load: LoadVector::new(best.argmax.clone())?,
        iterates: runs.iter().map(|r| r.steps).sum(),
        restart_traces: runs.iter().map(|r| r.best).collect(),
        winning_trajectory: best.trajectory.clone(),
    })
}
