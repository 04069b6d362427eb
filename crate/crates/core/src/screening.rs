//! Line-flow constraint screening.
//!
//! Each bound-side of each line is tested by maximizing (or minimizing) the
//! line flow over the LP relaxation of the UC feasible set with that line's
//! own limits removed. If the extremal flow stays strictly inside the limit
//! the side is redundant and can be dropped from the UC problem.
//!
//! A context fixes either one load vector (sample-aware) or a whole
//! [`LoadRegion`] (sample-agnostic), and may carry a cost cap
//! `cᵀx <= C̄ (1 + ε)` that restricts the search to economical dispatches.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formulation::{side_index, Side, UcFormulation, UcInstance};
use crate::lp::{solve_lp, LpStatus, Sense};
use crate::milp::MilpProblem;
use crate::netcase::LoadVector;

/// Relative tolerance: a side is redundant only if its extremal flow stays
/// more than `TOL_SCREEN * f̄` inside the limit.
pub const TOL_SCREEN: f64 = 1e-6;

/// Box `(1-r) ℓ̄ <= ℓ <= (1+r) ℓ̄` intersected with `Σ ℓ = L̄`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadRegion {
    pub nominal: LoadVector,
    pub variation: f64,
    pub level: f64,
}

impl LoadRegion {
    pub fn new(nominal: LoadVector, variation: f64, level: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&variation) {
            return Err(Error::EmptyRegion(format!(
                "variation ratio {variation} outside [0, 1]"
            )));
        }
        let total = nominal.total();
        let (lo, hi) = ((1.0 - variation) * total, (1.0 + variation) * total);
        let slack = 1e-9 * total.max(1.0);
        if !(level >= lo - slack && level <= hi + slack) {
            return Err(Error::EmptyRegion(format!(
                "load level {level} outside [{lo}, {hi}]"
            )));
        }
        Ok(Self {
            nominal,
            variation,
            level,
        })
    }

    /// Region with the load level pinned to the nominal total.
    pub fn around(nominal: LoadVector, variation: f64) -> Result<Self> {
        let level = nominal.total();
        Self::new(nominal, variation, level)
    }

    pub fn dim(&self) -> usize {
        self.nominal.len()
    }

    pub fn box_bounds(&self) -> (Vec<f64>, Vec<f64>) {
        let r = self.variation;
        let lo = self.nominal.as_slice().iter().map(|v| (1.0 - r) * v).collect();
        let hi = self.nominal.as_slice().iter().map(|v| (1.0 + r) * v).collect();
        (lo, hi)
    }

    /// Membership with absolute box tolerance `tol` and level tolerance `tol * max(L̄, 1)`.
    pub fn contains(&self, load: &[f64], tol: f64) -> bool {
        if load.len() != self.dim() {
            return false;
        }
        let (lo, hi) = self.box_bounds();
        let in_box = load
            .iter()
            .zip(lo.iter().zip(&hi))
            .all(|(v, (l, h))| *v >= l - tol && *v <= h + tol);
        let sum: f64 = load.iter().sum();
        in_box && (sum - self.level).abs() <= tol * self.level.max(1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostBound {
    /// Predicted cost cap C̄ before relaxation.
    pub value: f64,
    pub epsilon: f64,
}

impl CostBound {
    pub fn new(value: f64, epsilon: f64) -> Result<Self> {
        if !(value >= 0.0 && value.is_finite()) {
            return Err(Error::Config(format!("cost bound must be >= 0, got {value}")));
        }
        if !(epsilon >= 0.0 && epsilon.is_finite()) {
            return Err(Error::Config(format!("epsilon must be >= 0, got {epsilon}")));
        }
        Ok(Self { value, epsilon })
    }

    /// Right-hand side actually imposed: `C̄ (1 + ε)`.
    pub fn effective(&self) -> f64 {
        self.value * (1.0 + self.epsilon)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LoadMode {
    SampleAware(LoadVector),
    SampleAgnostic(LoadRegion),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScreeningContext {
    pub mode: LoadMode,
    pub cost_bound: Option<CostBound>,
}

impl ScreeningContext {
    pub fn sample_aware(load: LoadVector) -> Self {
        Self {
            mode: LoadMode::SampleAware(load),
            cost_bound: None,
        }
    }

    pub fn sample_agnostic(region: LoadRegion) -> Self {
        Self {
            mode: LoadMode::SampleAgnostic(region),
            cost_bound: None,
        }
    }

    pub fn with_cost_bound(mut self, bound: CostBound) -> Self {
        self.cost_bound = Some(bound);
        self
    }

    /// Whether screening results for this context apply to `load`.
    pub fn covers(&self, load: &LoadVector) -> bool {
        match &self.mode {
            LoadMode::SampleAware(l) => {
                l.len() == load.len()
                    && l
                        .as_slice()
                        .iter()
                        .zip(load.as_slice())
                        .all(|(a, b)| (a - b).abs() <= 1e-9 * a.abs().max(1.0))
            }
            LoadMode::SampleAgnostic(region) => region.contains(load.as_slice(), 1e-9),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineVerdict {
    pub line: usize,
    pub upper_redundant: bool,
    pub lower_redundant: bool,
    pub max_flow: f64,
    pub min_flow: f64,
    /// Set when the screening LP was infeasible and the line was kept by policy.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub fallback: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScreeningReport {
    pub context: ScreeningContext,
    pub verdicts: Vec<LineVerdict>,
    /// Fraction of the `2m` bound-sides found redundant.
    pub pct_reduced: f64,
    /// Fraction of lines with both sides redundant.
    pub line_pct_reduced: f64,
}

impl ScreeningReport {
    pub fn new(context: ScreeningContext, verdicts: Vec<LineVerdict>) -> Self {
        let m = verdicts.len();
        let sides = verdicts
            .iter()
            .map(|v| v.upper_redundant as usize + v.lower_redundant as usize)
            .sum::<usize>();
        let lines = verdicts
            .iter()
            .filter(|v| v.upper_redundant && v.lower_redundant)
            .count();
        let (pct_reduced, line_pct_reduced) = if m == 0 {
            (0.0, 0.0)
        } else {
            (sides as f64 / (2 * m) as f64, lines as f64 / m as f64)
        };
        Self {
            context,
            verdicts,
            pct_reduced,
            line_pct_reduced,
        }
    }

    /// Bound-sides that must stay in the UC problem, indexed by [`side_index`].
    pub fn kept_mask(&self) -> Vec<bool> {
        let mut mask = vec![true; 2 * self.verdicts.len()];
        for v in &self.verdicts {
            mask[side_index(v.line, Side::Upper)] = !v.upper_redundant;
            mask[side_index(v.line, Side::Lower)] = !v.lower_redundant;
        }
        mask
    }

    pub fn fallback_lines(&self) -> Vec<usize> {
        self.verdicts
            .iter()
            .filter(|v| v.fallback)
            .map(|v| v.line)
            .collect()
    }
}

fn extremal_flow(form: &UcFormulation, ctx: &ScreeningContext, line: usize, dir: Sense) -> Result<f64> {
    let sol = solve_lp(&form.assemble_screening(ctx, line, dir)?)?;
    match sol.status {
        LpStatus::Optimal => Ok(sol.objective_value),
        LpStatus::Infeasible => Err(Error::ScreeningInfeasible { line }),
        LpStatus::Unbounded => Ok(match dir {
            Sense::Max => f64::MAX,
            Sense::Min => f64::MIN,
        }),
    }
}

pub fn screen_line(form: &UcFormulation, ctx: &ScreeningContext, line: usize) -> Result<LineVerdict> {
    let max_flow = extremal_flow(form, ctx, line, Sense::Max)?;
    let min_flow = extremal_flow(form, ctx, line, Sense::Min)?;
    let limit = form.f_max[line];
    let tol = TOL_SCREEN * limit;
    Ok(LineVerdict {
        line,
        upper_redundant: max_flow < limit - tol,
        lower_redundant: min_flow > -limit + tol,
        max_flow,
        min_flow,
        fallback: false,
    })
}

/// Screen every line; fails with the lowest-index infeasible line.
pub fn screen_all(form: &UcFormulation, ctx: &ScreeningContext) -> Result<ScreeningReport> {
    let verdicts = (0..form.n_lines())
        .into_par_iter()
        .map(|j| screen_line(form, ctx, j))
        .collect::<Vec<_>>()
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    Ok(ScreeningReport::new(ctx.clone(), verdicts))
}

/// Like [`screen_all`], but lines whose screening LP is infeasible are kept
/// (both sides) and flagged instead of failing the whole report.
pub fn screen_all_or_keep(form: &UcFormulation, ctx: &ScreeningContext) -> Result<ScreeningReport> {
    let verdicts = (0..form.n_lines())
        .into_par_iter()
        .map(|j| match screen_line(form, ctx, j) {
            Err(Error::ScreeningInfeasible { line }) => {
                log::warn!("screening LP infeasible for line {line}; keeping its limits");
                Ok(LineVerdict {
                    line,
                    upper_redundant: false,
                    lower_redundant: false,
                    max_flow: form.f_max[line],
                    min_flow: -form.f_max[line],
                    fallback: true,
                })
            }
            other => other,
        })
        .collect::<Vec<_>>()
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    Ok(ScreeningReport::new(ctx.clone(), verdicts))
}

/// UC MILP for `instance` without the bound-sides `report` found redundant.
pub fn reduce_instance(instance: &UcInstance, report: &ScreeningReport) -> Result<MilpProblem> {
    if !report.context.covers(&instance.load) {
        return Err(Error::ContextMismatch(
            "instance load is not covered by the screening context".into(),
        ));
    }
    if report.verdicts.len() != instance.formulation.n_lines() {
        return Err(Error::Dimension {
            what: "screening verdicts",
            expected: instance.formulation.n_lines(),
            got: report.verdicts.len(),
        });
    }
    instance
        .formulation
        .assemble_uc_masked(&instance.load, &report.kept_mask())
}
