//! DC network operators and UC / screening problem assembly.
//!
//! Line flows are parameterized by the reduced phase-angle vector `f`
//! (slack angle fixed at zero), so `K f` gives every line flow and
//! `x + Ā f = ℓ` is the DC nodal balance.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::{Constraint, LpProblem, LpSolution, LpStatus, Relation, Sense};
use crate::milp::{solve_milp, BnbStats, MilpProblem};
use crate::netcase::{LoadVector, NetworkCase};
use crate::screening::{LoadMode, ScreeningContext};

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }
}

/// Which side of a line's symmetric flow bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    Upper,
    Lower,
}

/// Index of a bound-side in the `2m` masks used throughout: `2j` is the
/// upper side of line `j`, `2j + 1` the lower side.
pub fn side_index(line: usize, side: Side) -> usize {
    match side {
        Side::Upper => 2 * line,
        Side::Lower => 2 * line + 1,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UcFormulation {
    pub k: Matrix,
    pub a_bar: Matrix,
    pub f_max: Vec<f64>,
    pub gen_cost: Vec<f64>,
    pub gen_min: Vec<f64>,
    pub gen_max: Vec<f64>,
    pub gen_bus: Vec<usize>,
    pub slack_bus: usize,
}

/// Column positions of the decision variables.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VarLayout {
    pub n_gen: usize,
    pub n_flow: usize,
    pub n_load: usize,
}

impl VarLayout {
    pub fn u(&self, i: usize) -> usize {
        i
    }
    pub fn x(&self, i: usize) -> usize {
        self.n_gen + i
    }
    pub fn f(&self, k: usize) -> usize {
        2 * self.n_gen + k
    }
    pub fn load(&self, b: usize) -> usize {
        2 * self.n_gen + self.n_flow + b
    }
    pub fn width(&self) -> usize {
        2 * self.n_gen + self.n_flow + self.n_load
    }
}

impl UcFormulation {
    pub fn n_buses(&self) -> usize {
        self.a_bar.rows
    }

    pub fn n_lines(&self) -> usize {
        self.k.rows
    }

    pub fn n_generators(&self) -> usize {
        self.gen_cost.len()
    }

    pub fn layout(&self, with_load: bool) -> VarLayout {
        VarLayout {
            n_gen: self.n_generators(),
            n_flow: self.k.cols,
            n_load: if with_load { self.n_buses() } else { 0 },
        }
    }

    pub fn line_flows(&self, f: &[f64]) -> Vec<f64> {
        self.k.mul_vec(f)
    }

    /// Per-bus sum of generator output.
    pub fn aggregate(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_buses()];
        for (&b, &v) in self.gen_bus.iter().zip(x) {
            out[b] += v;
        }
        out
    }

    pub fn dispatch_cost(&self, x: &[f64]) -> f64 {
        self.gen_cost.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    fn check_load(&self, load: &LoadVector) -> Result<()> {
        if load.len() != self.n_buses() {
            return Err(Error::Dimension {
                what: "load vector",
                expected: self.n_buses(),
                got: load.len(),
            });
        }
        Ok(())
    }

    fn generator_rows(&self, layout: &VarLayout, rows: &mut Vec<Constraint>) {
        let w = layout.width();
        for i in 0..self.n_generators() {
            let mut up = vec![0.0; w];
            up[layout.x(i)] = 1.0;
            up[layout.u(i)] = -self.gen_max[i];
            rows.push(Constraint::new(up, Relation::Le, 0.0).named(format!("gen_max_{i}")));
            let mut lo = vec![0.0; w];
            lo[layout.x(i)] = 1.0;
            lo[layout.u(i)] = -self.gen_min[i];
            rows.push(Constraint::new(lo, Relation::Ge, 0.0).named(format!("gen_min_{i}")));
        }
    }

    /// The row `K_j f <= f̄_j` (upper) or `K_j f >= -f̄_j` (lower).
    pub fn flow_row(&self, layout: &VarLayout, line: usize, side: Side) -> Constraint {
        let mut coeffs = vec![0.0; layout.width()];
        for (k, &a) in self.k.row(line).iter().enumerate() {
            coeffs[layout.f(k)] = a;
        }
        match side {
            Side::Upper => Constraint::new(coeffs, Relation::Le, self.f_max[line])
                .named(format!("flow_up_{line}")),
            Side::Lower => Constraint::new(coeffs, Relation::Ge, -self.f_max[line])
                .named(format!("flow_dn_{line}")),
        }
    }

    fn balance_rows(&self, layout: &VarLayout, load: Option<&LoadVector>, rows: &mut Vec<Constraint>) {
        let w = layout.width();
        for b in 0..self.n_buses() {
            let mut coeffs = vec![0.0; w];
            for (i, &gb) in self.gen_bus.iter().enumerate() {
                if gb == b {
                    coeffs[layout.x(i)] = 1.0;
                }
            }
            for (k, &a) in self.a_bar.row(b).iter().enumerate() {
                coeffs[layout.f(k)] = a;
            }
            let rhs = match load {
                Some(l) => l.as_slice()[b],
                None => {
                    coeffs[layout.load(b)] = -1.0;
                    0.0
                }
            };
            rows.push(Constraint::new(coeffs, Relation::Eq, rhs).named(format!("balance_{b}")));
        }
    }

    fn base_bounds(&self, layout: &VarLayout) -> Vec<(f64, f64)> {
        let mut bounds = vec![(0.0, f64::INFINITY); layout.width()];
        for i in 0..layout.n_gen {
            bounds[layout.u(i)] = (0.0, 1.0);
        }
        for k in 0..layout.n_flow {
            bounds[layout.f(k)] = (f64::NEG_INFINITY, f64::INFINITY);
        }
        bounds
    }

    fn names(&self, layout: &VarLayout) -> Vec<String> {
        let mut names = Vec::with_capacity(layout.width());
        names.extend((0..layout.n_gen).map(|i| format!("u{i}")));
        names.extend((0..layout.n_gen).map(|i| format!("x{i}")));
        names.extend((0..layout.n_flow).map(|k| format!("f{k}")));
        names.extend((0..layout.n_load).map(|b| format!("l{b}")));
        names
    }

    /// UC MILP keeping only the bound-sides flagged in `kept` (length `2m`).
    pub fn assemble_uc_masked(&self, load: &LoadVector, kept: &[bool]) -> Result<MilpProblem> {
        self.check_load(load)?;
        if kept.len() != 2 * self.n_lines() {
            return Err(Error::Dimension {
                what: "bound-side mask",
                expected: 2 * self.n_lines(),
                got: kept.len(),
            });
        }
        let layout = self.layout(false);
        let mut objective = vec![0.0; layout.width()];
        for i in 0..layout.n_gen {
            objective[layout.x(i)] = self.gen_cost[i];
        }
        let mut rows = Vec::new();
        self.generator_rows(&layout, &mut rows);
        for j in 0..self.n_lines() {
            for side in [Side::Upper, Side::Lower] {
                if kept[side_index(j, side)] {
                    rows.push(self.flow_row(&layout, j, side));
                }
            }
        }
        self.balance_rows(&layout, Some(load), &mut rows);
        let base = LpProblem {
            sense: Sense::Min,
            objective,
            constraints: rows,
            bounds: self.base_bounds(&layout),
            names: self.names(&layout),
        };
        Ok(MilpProblem {
            base,
            binary_vars: (0..layout.n_gen).map(|i| layout.u(i)).collect(),
        })
    }

    pub fn assemble_uc(&self, load: &LoadVector) -> Result<MilpProblem> {
        self.assemble_uc_masked(load, &vec![true; 2 * self.n_lines()])
    }

    /// Relaxed max/min of the flow on `line`, with that line's own bounds
    /// dropped and every other line bound kept.
    pub fn assemble_screening(
        &self,
        context: &ScreeningContext,
        line: usize,
        direction: Sense,
    ) -> Result<LpProblem> {
        let m = self.n_lines();
        if line >= m {
            return Err(Error::Index { index: line, len: m });
        }
        let (with_load, fixed_load) = match &context.mode {
            LoadMode::SampleAware(l) => {
                self.check_load(l)?;
                (false, Some(l))
            }
            LoadMode::SampleAgnostic(region) => {
                self.check_load(&region.nominal)?;
                (true, None)
            }
        };
        let layout = self.layout(with_load);
        let w = layout.width();

        let mut objective = vec![0.0; w];
        for (k, &a) in self.k.row(line).iter().enumerate() {
            objective[layout.f(k)] = a;
        }
        let mut bounds = self.base_bounds(&layout);
        let mut rows = Vec::new();
        self.generator_rows(&layout, &mut rows);
        for j in (0..m).filter(|&j| j != line) {
            rows.push(self.flow_row(&layout, j, Side::Upper));
            rows.push(self.flow_row(&layout, j, Side::Lower));
        }
        self.balance_rows(&layout, fixed_load, &mut rows);
        if let LoadMode::SampleAgnostic(region) = &context.mode {
            let (lo, hi) = region.box_bounds();
            let mut total = vec![0.0; w];
            for b in 0..self.n_buses() {
                bounds[layout.load(b)] = (lo[b], hi[b]);
                total[layout.load(b)] = 1.0;
            }
            rows.push(Constraint::new(total, Relation::Eq, region.level).named("load_level"));
        }
        if let Some(cb) = &context.cost_bound {
            let mut coeffs = vec![0.0; w];
            for i in 0..layout.n_gen {
                coeffs[layout.x(i)] = self.gen_cost[i];
            }
            rows.push(Constraint::new(coeffs, Relation::Le, cb.effective()).named("cost_bound"));
        }
        Ok(LpProblem {
            sense: direction,
            objective,
            constraints: rows,
            bounds,
            names: self.names(&layout),
        })
    }
}

pub fn build_formulation(case: &NetworkCase) -> Result<UcFormulation> {
    let n = case.n_buses();
    let m = case.n_lines();
    if n == 0 || !case.is_connected() {
        return Err(Error::Disconnected);
    }
    let slack = 0;
    let reduced = |b: usize| -> Option<usize> {
        match b.cmp(&slack) {
            std::cmp::Ordering::Less => Some(b),
            std::cmp::Ordering::Equal => None,
            std::cmp::Ordering::Greater => Some(b - 1),
        }
    };

    let mut k = Matrix::zeros(m, n - 1);
    let mut a_bar = Matrix::zeros(n, n - 1);
    for (j, line) in case.lines.iter().enumerate() {
        let b = line.susceptance;
        // Row j of A_r: +1 at from, -1 at to, slack column dropped.
        let mut entries = Vec::with_capacity(2);
        if let Some(c) = reduced(line.from_bus) {
            entries.push((c, 1.0));
        }
        if let Some(c) = reduced(line.to_bus) {
            entries.push((c, -1.0));
        }
        for &(c, a) in &entries {
            k.set(j, c, b * a);
            // Ā = -A_fullᵀ D A_r
            let from = line.from_bus;
            let to = line.to_bus;
            a_bar.set(from, c, a_bar.get(from, c) - b * a);
            a_bar.set(to, c, a_bar.get(to, c) + b * a);
        }
    }

    Ok(UcFormulation {
        k,
        a_bar,
        f_max: case.lines.iter().map(|l| l.flow_limit).collect(),
        gen_cost: case.generators.iter().map(|g| g.cost).collect(),
        gen_min: case.generators.iter().map(|g| g.p_min).collect(),
        gen_max: case.generators.iter().map(|g| g.p_max).collect(),
        gen_bus: case.generators.iter().map(|g| g.bus).collect(),
        slack_bus: slack,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum UcStatus {
    Optimal,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UcSolution {
    pub u: Vec<bool>,
    pub x: Vec<f64>,
    pub f: Vec<f64>,
    pub cost: f64,
    pub status: UcStatus,
}

/// A UC problem for one load vector.
#[derive(Debug, Clone, PartialEq)]
pub struct UcInstance {
    pub formulation: UcFormulation,
    pub load: LoadVector,
}

impl UcInstance {
    pub fn new(formulation: UcFormulation, load: LoadVector) -> Result<Self> {
        formulation.check_load(&load)?;
        Ok(Self { formulation, load })
    }

    pub fn assemble(&self) -> Result<MilpProblem> {
        self.formulation.assemble_uc(&self.load)
    }
}

impl UcSolution {
    /// Decode a MILP solution of an `assemble_uc*` problem.
    pub fn from_milp(formulation: &UcFormulation, sol: &LpSolution) -> Self {
        let layout = formulation.layout(false);
        if sol.status != LpStatus::Optimal {
            return Self {
                u: vec![false; layout.n_gen],
                x: vec![f64::NAN; layout.n_gen],
                f: vec![f64::NAN; layout.n_flow],
                cost: f64::NAN,
                status: UcStatus::Infeasible,
            };
        }
        let x: Vec<f64> = (0..layout.n_gen).map(|i| sol.x[layout.x(i)]).collect();
        Self {
            u: (0..layout.n_gen).map(|i| sol.x[layout.u(i)] > 0.5).collect(),
            cost: formulation.dispatch_cost(&x),
            x,
            f: (0..layout.n_flow).map(|k| sol.x[layout.f(k)]).collect(),
            status: UcStatus::Optimal,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == UcStatus::Optimal
    }
}

/// Bound-sides attained at `f`: `|K_j f ∓ f̄_j| <= 1e-6 f̄_j`.
pub fn binding_mask(formulation: &UcFormulation, f: &[f64]) -> Vec<bool> {
    let flows = formulation.line_flows(f);
    let mut mask = vec![false; 2 * flows.len()];
    for (j, (&flow, &limit)) in flows.iter().zip(&formulation.f_max).enumerate() {
        let tol = 1e-6 * limit;
        mask[side_index(j, Side::Upper)] = (flow - limit).abs() <= tol;
        mask[side_index(j, Side::Lower)] = (flow + limit).abs() <= tol;
    }
    mask
}

/// Solve a (possibly reduced) UC MILP and decode the result.
pub fn solve_uc_problem(formulation: &UcFormulation, p: &MilpProblem) -> Result<(UcSolution, BnbStats)> {
    let (sol, stats) = solve_milp(p)?;
    Ok((UcSolution::from_milp(formulation, &sol), stats))
}

pub fn solve_uc(formulation: &UcFormulation, load: &LoadVector) -> Result<(UcSolution, BnbStats)> {
    solve_uc_problem(formulation, &formulation.assemble_uc(load)?)
}
