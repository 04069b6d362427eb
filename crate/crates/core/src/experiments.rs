//! Dataset generation and the screening evaluation harness.

use std::fmt;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formulation::{binding_mask, build_formulation, solve_uc_problem, UcFormulation, UcInstance};
use crate::netcase::{LoadVector, NetworkCase};
use crate::pga::{run_pga_from, sample_region, PgaConfig, PgaResult};
use crate::predictor::{knn_screen, mlp_train, Dataset, KnnRule, MlpModel, Sample, TrainConfig, TrainReport};
use crate::screening::{
    reduce_instance, screen_all_or_keep, CostBound, LoadRegion, ScreeningContext, ScreeningReport,
};

/// Relative cost differences at or below this are reported as exactly zero.
pub const COST_ZERO_TOL: f64 = 1e-9;

/// A UC solve of one load with its timing.
#[derive(Debug, Clone)]
pub struct SolvedLoad {
    pub sample: Sample,
    pub solve_time: f64,
}

fn solve_load(form: &UcFormulation, load: &LoadVector) -> Result<Option<SolvedLoad>> {
    let (sol, stats) = solve_uc_problem(form, &form.assemble_uc(load)?)?;
    if !sol.is_optimal() {
        return Ok(None);
    }
    Ok(Some(SolvedLoad {
        sample: Sample {
            load: load.clone(),
            cost: sol.cost,
            binding: binding_mask(form, &sol.f),
        },
        solve_time: stats.wall_time,
    }))
}

/// Draw `count` loads from `region` and solve each; loads without a feasible
/// commitment are replaced by fresh draws. Output order is the draw order, so
/// results do not depend on the thread count.
pub fn solve_region_samples(
    form: &UcFormulation,
    region: &LoadRegion,
    count: usize,
    seed: u64,
) -> Result<Vec<SolvedLoad>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    let mut attempts = 0usize;
    let max_attempts = 100 * count + 100;
    while out.len() < count {
        let need = count - out.len();
        let batch = (0..need)
            .map(|_| sample_region(region, &mut rng))
            .collect::<Result<Vec<_>>>()?;
        attempts += need;
        let solved = batch
            .par_iter()
            .map(|l| solve_load(form, l))
            .collect::<Vec<_>>();
        for s in solved {
            match s? {
                Some(s) => out.push(s),
                None => log::debug!("resampling infeasible load"),
            }
        }
        if out.len() < count && attempts >= max_attempts {
            return Err(Error::InfeasibleSample { attempts });
        }
    }
    Ok(out)
}

pub fn generate_dataset(case: &NetworkCase, region: &LoadRegion, count: usize, seed: u64) -> Result<Dataset> {
    let form = build_formulation(case)?;
    let samples = solve_region_samples(&form, region, count, seed)?
        .into_iter()
        .map(|s| s.sample)
        .collect();
    Ok(Dataset {
        samples,
        seed: Some(seed),
        region: Some(region.clone()),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Aware,
    Agnostic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Benchmark(Mode),
    CostAware(Mode),
    Knn(usize),
    /// Ground truth: only constraints binding at the full optimum are kept.
    Actual(Mode),
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mode = |m: &Mode| match m {
            Mode::Aware => "aware",
            Mode::Agnostic => "agnostic",
        };
        match self {
            Method::Benchmark(m) => write!(f, "benchmark-{}", mode(m)),
            Method::CostAware(m) => write!(f, "costaware-{}", mode(m)),
            Method::Knn(k) => write!(f, "knn{k}"),
            Method::Actual(m) => write!(f, "actual-{}", mode(m)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub method: Method,
    pub range: f64,
    /// Percent of bound-sides removed.
    pub pct_reduced: f64,
    /// Mean relative cost error of the reduced problem, percent.
    pub rel_cost_error: f64,
    /// Total reduced solve time over total full solve time, percent.
    pub rel_solution_time: f64,
    /// Seconds spent screening (summed over samples for per-sample methods).
    pub screen_time_s: f64,
}

pub const METRICS_HEADER: &str =
    "method,range,pct_reduced,rel_cost_error,rel_solution_time,screen_time_s";

/// Metrics CSV; `with_timing = false` blanks the two timing columns.
pub fn metrics_csv(rows: &[MetricsRow], with_timing: bool) -> String {
    let mut out = String::from(METRICS_HEADER);
    out.push('\n');
    for r in rows {
        let (t, s) = if with_timing {
            (format!("{:.3}", r.rel_solution_time), format!("{:.6}", r.screen_time_s))
        } else {
            (String::new(), String::new())
        };
        out.push_str(&format!(
            "{},{},{:.4},{:.6},{},{}\n",
            r.method, r.range, r.pct_reduced, r.rel_cost_error, t, s
        ));
    }
    out
}

/// Outcome of one method on one validation load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleEval {
    pub method: Method,
    pub range: f64,
    pub index: usize,
    /// Fraction of bound-sides removed for this load.
    pub reduced_fraction: f64,
    pub cost_full: f64,
    pub cost_reduced: f64,
    pub rel_cost_error: f64,
    pub time_full: f64,
    pub time_reduced: f64,
    /// False when a cost-bounded screening LP was infeasible and the fallback kept lines.
    pub bound_feasible: bool,
    pub kept: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionPair {
    pub range: f64,
    pub index: usize,
    pub actual: f64,
    pub predicted: f64,
}

pub fn predictions_csv(pairs: &[PredictionPair]) -> String {
    let mut out = String::from("range,sample,actual,predicted\n");
    for p in pairs {
        out.push_str(&format!("{},{},{:.6},{:.6}\n", p.range, p.index, p.actual, p.predicted));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Seeds {
    pub data: u64,
    pub train: u64,
    pub validate: u64,
    pub pga: u64,
}

impl Default for Seeds {
    fn default() -> Self {
        Self {
            data: 1,
            train: 2,
            validate: 3,
            pga: 4,
        }
    }
}

fn default_ranges() -> Vec<f64> {
    vec![0.0, 0.25, 0.5, 0.75, 1.0]
}

fn default_knn() -> Vec<usize> {
    vec![5, 10]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    /// Case file path, resolved relative to the spec file by the CLI.
    pub case: String,
    #[serde(default = "default_ranges")]
    pub variation_ranges: Vec<f64>,
    /// Total load L̄; defaults to the nominal total.
    #[serde(default)]
    pub load_level: Option<f64>,
    pub n_train: usize,
    #[serde(default = "default_n_validate")]
    pub n_validate: usize,
    pub epsilon: f64,
    #[serde(default)]
    pub seeds: Seeds,
    #[serde(default = "default_knn")]
    pub knn_k: Vec<usize>,
    #[serde(default)]
    pub knn_rule: KnnRule,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub pga: PgaConfig,
}

fn default_n_validate() -> usize {
    100
}

impl ExperimentSpec {
    pub fn check(&self) -> Result<()> {
        if self.variation_ranges.is_empty()
            || self.variation_ranges.iter().any(|r| !(0.0..=1.0).contains(r))
        {
            return Err(Error::Config("variation ranges must lie in [0, 1]".into()));
        }
        if self.n_train == 0 || self.n_validate == 0 {
            return Err(Error::Config("n_train and n_validate must be >= 1".into()));
        }
        if self.epsilon.is_nan() || self.epsilon < 0.0 {
            return Err(Error::Config("epsilon must be >= 0".into()));
        }
        if let Some(&k) = self.knn_k.iter().find(|&&k| k == 0 || k > self.n_train) {
            return Err(Error::Config(format!("knn k = {k} needs 1 <= k <= n_train")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RangeSummary {
    pub range: f64,
    pub pga: PgaResult,
    pub cost_cap: f64,
    pub agnostic_benchmark: ScreeningReport,
    pub agnostic_costaware: ScreeningReport,
    pub max_validation_cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub rows: Vec<MetricsRow>,
    pub samples: Vec<SampleEval>,
    pub predictions: Vec<PredictionPair>,
    pub ranges: Vec<RangeSummary>,
    pub train_report: TrainReport,
    pub model: MlpModel,
}

fn rel_error(full: f64, reduced: f64) -> f64 {
    let e = (reduced - full).abs() / full.abs().max(1e-12);
    if e <= COST_ZERO_TOL { 0.0 } else { e }
}

fn reduced_fraction(kept: &[bool]) -> f64 {
    kept.iter().filter(|k| !**k).count() as f64 / kept.len().max(1) as f64
}

struct Validation<'a> {
    form: &'a UcFormulation,
    range: f64,
    loads: &'a [SolvedLoad],
}

impl Validation<'_> {
    fn eval_masks(
        &self,
        method: Method,
        masks: Vec<(Vec<bool>, bool)>,
    ) -> Result<Vec<SampleEval>> {
        masks
            .into_par_iter()
            .enumerate()
            .map(|(i, (kept, bound_feasible))| {
                let solved = &self.loads[i];
                let p = self.form.assemble_uc_masked(&solved.sample.load, &kept)?;
                let (sol, stats) = solve_uc_problem(self.form, &p)?;
                let cost_reduced = if sol.is_optimal() { sol.cost } else { f64::NAN };
                Ok(SampleEval {
                    method,
                    range: self.range,
                    index: i,
                    reduced_fraction: reduced_fraction(&kept),
                    cost_full: solved.sample.cost,
                    cost_reduced,
                    rel_cost_error: rel_error(solved.sample.cost, cost_reduced),
                    time_full: solved.solve_time,
                    time_reduced: stats.wall_time,
                    bound_feasible,
                    kept,
                })
            })
            .collect::<Vec<_>>()
            .into_iter()
            .collect()
    }

    fn eval_report(&self, method: Method, report: &ScreeningReport) -> Result<Vec<SampleEval>> {
        // Reduce through the report so region membership is enforced.
        for s in self.loads {
            let inst = UcInstance::new(self.form.clone(), s.sample.load.clone())?;
            reduce_instance(&inst, report)?;
        }
        let fallback = report.verdicts.iter().any(|v| v.fallback);
        let masks = vec![(report.kept_mask(), !fallback); self.loads.len()];
        self.eval_masks(method, masks)
    }
}

fn row(method: Method, range: f64, evals: &[SampleEval], pct: f64, screen_time: f64) -> MetricsRow {
    let n = evals.len().max(1) as f64;
    let err = evals.iter().map(|e| e.rel_cost_error).sum::<f64>() / n;
    let full: f64 = evals.iter().map(|e| e.time_full).sum();
    let reduced: f64 = evals.iter().map(|e| e.time_reduced).sum();
    MetricsRow {
        method,
        range,
        pct_reduced: 100.0 * pct,
        rel_cost_error: 100.0 * err,
        rel_solution_time: if full > 0.0 { 100.0 * reduced / full } else { 0.0 },
        screen_time_s: screen_time,
    }
}

fn mean_reduced(evals: &[SampleEval]) -> f64 {
    evals.iter().map(|e| e.reduced_fraction).sum::<f64>() / evals.len().max(1) as f64
}

/// Run every screening method over each variation range of `spec`.
///
/// One cost model is trained on samples from the widest range; since every
/// narrower region is contained in it, the same surrogate serves all ranges,
/// and each range's bound search is warm-started from the previous range's
/// maximizer so the cost cap never shrinks as the region grows.
pub fn evaluate(case: &NetworkCase, spec: &ExperimentSpec) -> Result<Evaluation> {
    evaluate_with_model(case, spec, None)
}

pub fn evaluate_with_model(
    case: &NetworkCase,
    spec: &ExperimentSpec,
    model: Option<MlpModel>,
) -> Result<Evaluation> {
    spec.check()?;
    let form = build_formulation(case)?;
    let level = spec.load_level.unwrap_or_else(|| case.nominal_load.total());
    let mut ranges = spec.variation_ranges.clone();
    ranges.sort_by(f64::total_cmp);
    ranges.dedup();
    let widest = *ranges.last().unwrap();

    let train_region = LoadRegion::new(case.nominal_load.clone(), widest, level)?;
    let train_set = Dataset {
        samples: solve_region_samples(&form, &train_region, spec.n_train, spec.seeds.data)?
            .into_iter()
            .map(|s| s.sample)
            .collect(),
        seed: Some(spec.seeds.data),
        region: Some(train_region),
    };
    let (model, train_report) = match model {
        Some(m) => {
            m.check()?;
            let report = TrainReport {
                final_train_loss: f64::NAN,
                val_relative_error: f64::NAN,
                epochs: 0,
                best_epoch: 0,
                loss_history: Vec::new(),
                n_train: 0,
                n_test: 0,
            };
            (m, report)
        }
        None => {
            let cfg = TrainConfig {
                seed: spec.seeds.train,
                ..spec.train.clone()
            };
            mlp_train(&train_set, &cfg)?
        }
    };

    let mut rows = Vec::new();
    let mut samples = Vec::new();
    let mut predictions = Vec::new();
    let mut summaries = Vec::new();
    let mut warm: Vec<LoadVector> = Vec::new();
    let mut prev_bound = f64::NEG_INFINITY;

    for (ri, &r) in ranges.iter().enumerate() {
        let region = LoadRegion::new(case.nominal_load.clone(), r, level)?;
        let loads = solve_region_samples(
            &form,
            &region,
            spec.n_validate,
            spec.seeds.validate.wrapping_add(ri as u64),
        )?;
        let val = Validation {
            form: &form,
            range: r,
            loads: &loads,
        };
        for (i, s) in loads.iter().enumerate() {
            predictions.push(PredictionPair {
                range: r,
                index: i,
                actual: s.sample.cost,
                predicted: model.predict(s.sample.load.as_slice())?,
            });
        }

        // Sample-agnostic benchmark.
        let t0 = Instant::now();
        let agn_ctx = ScreeningContext::sample_agnostic(region.clone());
        let agn_bench = screen_all_or_keep(&form, &agn_ctx)?;
        let t_bench = t0.elapsed().as_secs_f64();
        let ev = val.eval_report(Method::Benchmark(Mode::Agnostic), &agn_bench)?;
        rows.push(row(Method::Benchmark(Mode::Agnostic), r, &ev, agn_bench.pct_reduced, t_bench));
        samples.extend(ev);

        // Sample-agnostic with the surrogate's region-wide bound.
        let t0 = Instant::now();
        let pga_cfg = PgaConfig {
            seed: spec.seeds.pga.wrapping_add(ri as u64),
            ..spec.pga.clone()
        };
        let pga = run_pga_from(&model, &region, &pga_cfg, &warm)?;
        debug_assert!(pga.bound >= prev_bound - 1e-9 * prev_bound.abs());
        let cap = pga.bound.max(prev_bound).max(0.0);
        prev_bound = cap;
        warm = vec![pga.argmax_load.clone()];
        let agn_cost_ctx = agn_ctx.clone().with_cost_bound(CostBound::new(cap, spec.epsilon)?);
        let agn_cost = screen_all_or_keep(&form, &agn_cost_ctx)?;
        let t_cost = t0.elapsed().as_secs_f64();
        let ev = val.eval_report(Method::CostAware(Mode::Agnostic), &agn_cost)?;
        rows.push(row(Method::CostAware(Mode::Agnostic), r, &ev, agn_cost.pct_reduced, t_cost));
        samples.extend(ev);

        // KNN on the training set.
        for &k in &spec.knn_k {
            let t0 = Instant::now();
            let masks = loads
                .iter()
                .map(|s| Ok((knn_screen(&train_set, s.sample.load.as_slice(), k, spec.knn_rule)?, true)))
                .collect::<Result<Vec<_>>>()?;
            let t_knn = t0.elapsed().as_secs_f64();
            let ev = val.eval_masks(Method::Knn(k), masks)?;
            rows.push(row(Method::Knn(k), r, &ev, mean_reduced(&ev), t_knn));
            samples.extend(ev);
        }

        // Agnostic ground truth: union of binding sets over the validation loads.
        let mut union = vec![false; 2 * form.n_lines()];
        for s in &loads {
            for (u, b) in union.iter_mut().zip(&s.sample.binding) {
                *u |= *b;
            }
        }
        let ev = val.eval_masks(Method::Actual(Mode::Agnostic), vec![(union.clone(), true); loads.len()])?;
        rows.push(row(Method::Actual(Mode::Agnostic), r, &ev, reduced_fraction(&union), 0.0));
        samples.extend(ev);

        // Sample-aware methods, one screening per validation load.
        let t0 = Instant::now();
        let aware_bench = loads
            .par_iter()
            .map(|s| {
                let rep = screen_all_or_keep(&form, &ScreeningContext::sample_aware(s.sample.load.clone()))?;
                Ok((rep.kept_mask(), true))
            })
            .collect::<Vec<_>>()
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
        let t_ab = t0.elapsed().as_secs_f64();
        let ev = val.eval_masks(Method::Benchmark(Mode::Aware), aware_bench)?;
        rows.push(row(Method::Benchmark(Mode::Aware), r, &ev, mean_reduced(&ev), t_ab));
        samples.extend(ev);

        let t0 = Instant::now();
        let aware_cost = loads
            .par_iter()
            .map(|s| {
                let pred = model.predict(s.sample.load.as_slice())?.max(0.0);
                let ctx = ScreeningContext::sample_aware(s.sample.load.clone())
                    .with_cost_bound(CostBound::new(pred, spec.epsilon)?);
                let rep = screen_all_or_keep(&form, &ctx)?;
                let feasible = rep.verdicts.iter().all(|v| !v.fallback);
                Ok((rep.kept_mask(), feasible))
            })
            .collect::<Vec<_>>()
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
        let t_ac = t0.elapsed().as_secs_f64();
        let ev = val.eval_masks(Method::CostAware(Mode::Aware), aware_cost)?;
        rows.push(row(Method::CostAware(Mode::Aware), r, &ev, mean_reduced(&ev), t_ac));
        samples.extend(ev);

        let masks = loads.iter().map(|s| (s.sample.binding.clone(), true)).collect();
        let ev = val.eval_masks(Method::Actual(Mode::Aware), masks)?;
        rows.push(row(Method::Actual(Mode::Aware), r, &ev, mean_reduced(&ev), 0.0));
        samples.extend(ev);

        summaries.push(RangeSummary {
            range: r,
            pga,
            cost_cap: cap,
            agnostic_benchmark: agn_bench,
            agnostic_costaware: agn_cost,
            max_validation_cost: loads.iter().map(|s| s.sample.cost).fold(f64::NEG_INFINITY, f64::max),
        });
    }

    Ok(Evaluation {
        rows,
        samples,
        predictions,
        ranges: summaries,
        train_report,
        model,
    })
}
