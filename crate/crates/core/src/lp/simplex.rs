use log::warn;

use super::{LpProblem, LpSolution, LpStatus, Relation, Sense, TOL_FEAS, TOL_PIVOT};
use crate::error::{Error, Result};

/// Reduced costs above `-TOL_OPT` are treated as nonnegative.
const TOL_OPT: f64 = 1e-9;

/// How an original variable is expressed through nonnegative tableau columns.
#[derive(Debug, Clone, Copy)]
enum VarMap {
    Fixed(f64),
    /// `x = lo + y`
    Shift { col: usize, lo: f64 },
    /// `x = hi - y`
    Mirror { col: usize, hi: f64 },
    /// `x = y_pos - y_neg`
    Split { pos: usize, neg: usize },
}

impl VarMap {
    fn value(&self, y: &[f64]) -> f64 {
        match *self {
            VarMap::Fixed(v) => v,
            VarMap::Shift { col, lo } => lo + y[col],
            VarMap::Mirror { col, hi } => hi - y[col],
            VarMap::Split { pos, neg } => y[pos] - y[neg],
        }
    }

    /// Adds `coef * x` to a row over columns and returns the constant part.
    fn expand(&self, coef: f64, row: &mut [f64]) -> f64 {
        match *self {
            VarMap::Fixed(v) => coef * v,
            VarMap::Shift { col, lo } => {
                row[col] += coef;
                coef * lo
            }
            VarMap::Mirror { col, hi } => {
                row[col] -= coef;
                coef * hi
            }
            VarMap::Split { pos, neg } => {
                row[pos] += coef;
                row[neg] -= coef;
                0.0
            }
        }
    }
}

struct StandardRow {
    coeffs: Vec<f64>,
    relation: Relation,
    rhs: f64,
}

struct Tableau {
    rows: usize,
    width: usize,
    data: Vec<f64>,
    /// Reduced costs; the last entry holds minus the current objective.
    obj: Vec<f64>,
    basis: Vec<usize>,
    iterations: usize,
    bland_after: usize,
    max_iterations: usize,
}

enum Outcome {
    Optimal,
    Unbounded,
}

impl Tableau {
    fn rhs_col(&self) -> usize {
        self.width - 1
    }

    fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.width + c]
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let w = self.width;
        let p = self.data[r * w + c];
        for v in &mut self.data[r * w..(r + 1) * w] {
            *v /= p;
        }
        let (before, rest) = self.data.split_at_mut(r * w);
        let (prow, after) = rest.split_at_mut(w);
        for row in before.chunks_exact_mut(w).chain(after.chunks_exact_mut(w)) {
            let f = row[c];
            if f != 0.0 {
                for (v, pv) in row.iter_mut().zip(prow.iter()) {
                    *v -= f * pv;
                }
                row[c] = 0.0;
            }
        }
        let f = self.obj[c];
        if f != 0.0 {
            for (v, pv) in self.obj.iter_mut().zip(prow.iter()) {
                *v -= f * pv;
            }
            self.obj[c] = 0.0;
        }
        self.basis[r] = c;
    }

    fn run(&mut self, allowed: &dyn Fn(usize) -> bool) -> Result<Outcome> {
        let rhs = self.rhs_col();
        loop {
            if self.iterations >= self.max_iterations {
                return Err(Error::Numerical(format!(
                    "simplex exceeded {} pivots",
                    self.max_iterations
                )));
            }
            let bland = self.iterations >= self.bland_after;

            let mut entering = None;
            let mut best = -TOL_OPT;
            for c in 0..rhs {
                if !allowed(c) {
                    continue;
                }
                let d = self.obj[c];
                if d < best {
                    entering = Some(c);
                    if bland {
                        break;
                    }
                    best = d;
                }
            }
            let Some(c) = entering else {
                return Ok(Outcome::Optimal);
            };

            let mut leaving: Option<(usize, f64)> = None;
            for r in 0..self.rows {
                let a = self.at(r, c);
                if a <= TOL_PIVOT {
                    continue;
                }
                let ratio = self.at(r, rhs).max(0.0) / a;
                leaving = match leaving {
                    None => Some((r, ratio)),
                    Some((lr, lratio)) => {
                        let tie = (ratio - lratio).abs() <= 1e-12 * (1.0 + lratio.abs());
                        let better = if tie {
                            if bland {
                                self.basis[r] < self.basis[lr]
                            } else {
                                a > self.at(lr, c)
                            }
                        } else {
                            ratio < lratio
                        };
                        if better {
                            Some((r, ratio))
                        } else {
                            Some((lr, lratio))
                        }
                    }
                };
            }
            let Some((r, _)) = leaving else {
                return Ok(Outcome::Unbounded);
            };
            self.pivot(r, c);
            self.iterations += 1;
        }
    }
}

pub(super) fn solve(p: &LpProblem) -> Result<LpSolution> {
    let n = p.n_vars();
    let mut maps = Vec::with_capacity(n);
    let mut ncols = 0usize;
    let mut upper_rows = Vec::new();
    for &(lo, hi) in &p.bounds {
        let map = if lo.is_finite() && hi.is_finite() && hi <= lo {
            VarMap::Fixed(lo)
        } else if lo.is_finite() {
            if hi.is_finite() {
                upper_rows.push((ncols, hi - lo));
            }
            ncols += 1;
            VarMap::Shift { col: ncols - 1, lo }
        } else if hi.is_finite() {
            ncols += 1;
            VarMap::Mirror { col: ncols - 1, hi }
        } else {
            ncols += 2;
            VarMap::Split {
                pos: ncols - 2,
                neg: ncols - 1,
            }
        };
        maps.push(map);
    }

    let sign = match p.sense {
        Sense::Min => 1.0,
        Sense::Max => -1.0,
    };
    let mut cost = vec![0.0; ncols];
    for (map, &c) in maps.iter().zip(&p.objective) {
        map.expand(sign * c, &mut cost);
    }

    let mut rows = Vec::with_capacity(p.constraints.len() + upper_rows.len());
    for con in &p.constraints {
        let mut coeffs = vec![0.0; ncols];
        let mut constant = 0.0;
        for (map, &a) in maps.iter().zip(&con.coeffs) {
            if a != 0.0 {
                constant += map.expand(a, &mut coeffs);
            }
        }
        let rhs = con.rhs - constant;
        if coeffs.iter().all(|&a| a == 0.0) {
            let ok = match con.relation {
                Relation::Le => rhs >= -TOL_FEAS,
                Relation::Ge => rhs <= TOL_FEAS,
                Relation::Eq => rhs.abs() <= TOL_FEAS,
            };
            if !ok {
                return Ok(infeasible(n));
            }
            continue;
        }
        rows.push(StandardRow {
            coeffs,
            relation: con.relation,
            rhs,
        });
    }
    for (col, ub) in upper_rows {
        let mut coeffs = vec![0.0; ncols];
        coeffs[col] = 1.0;
        rows.push(StandardRow {
            coeffs,
            relation: Relation::Le,
            rhs: ub,
        });
    }
    for row in &mut rows {
        if row.rhs < 0.0 {
            row.rhs = -row.rhs;
            for a in &mut row.coeffs {
                *a = -*a;
            }
            row.relation = match row.relation {
                Relation::Le => Relation::Ge,
                Relation::Ge => Relation::Le,
                Relation::Eq => Relation::Eq,
            };
        }
    }

    let m = rows.len();
    let n_slack = rows.iter().filter(|r| r.relation != Relation::Eq).count();
    let n_art = rows.iter().filter(|r| r.relation != Relation::Le).count();
    let art_start = ncols + n_slack;
    let total = art_start + n_art;
    let width = total + 1;

    let mut data = vec![0.0; m * width];
    let mut basis = vec![0; m];
    let mut next_slack = ncols;
    let mut next_art = art_start;
    let rhs_scale = rows.iter().map(|r| r.rhs).fold(1.0, f64::max);
    for (r, row) in rows.iter().enumerate() {
        let line = &mut data[r * width..(r + 1) * width];
        line[..ncols].copy_from_slice(&row.coeffs);
        line[total] = row.rhs;
        match row.relation {
            Relation::Le => {
                line[next_slack] = 1.0;
                basis[r] = next_slack;
                next_slack += 1;
            }
            Relation::Ge => {
                line[next_slack] = -1.0;
                next_slack += 1;
                line[next_art] = 1.0;
                basis[r] = next_art;
                next_art += 1;
            }
            Relation::Eq => {
                line[next_art] = 1.0;
                basis[r] = next_art;
                next_art += 1;
            }
        }
    }

    let mut tab = Tableau {
        rows: m,
        width,
        data,
        obj: vec![0.0; width],
        basis,
        iterations: 0,
        bland_after: 2 * (m + total),
        max_iterations: 50 * (m + total) + 10_000,
    };

    if n_art > 0 {
        for c in art_start..total {
            tab.obj[c] = 1.0;
        }
        for r in 0..m {
            if tab.basis[r] >= art_start {
                for c in 0..width {
                    tab.obj[c] -= tab.data[r * width + c];
                }
            }
        }
        tab.run(&|_| true)?;
        let infeasibility = -tab.obj[total];
        if infeasibility > TOL_FEAS * rhs_scale {
            return Ok(infeasible(n));
        }
        for r in 0..m {
            if tab.basis[r] < art_start {
                continue;
            }
            let mut best: Option<(usize, f64)> = None;
            for c in 0..art_start {
                let a = tab.at(r, c).abs();
                if a > TOL_PIVOT && best.is_none_or(|(_, b)| a > b) {
                    best = Some((c, a));
                }
            }
            if let Some((c, _)) = best {
                tab.pivot(r, c);
            }
        }
    }

    tab.obj.iter_mut().for_each(|v| *v = 0.0);
    tab.obj[..ncols].copy_from_slice(&cost);
    for r in 0..m {
        let b = tab.basis[r];
        let cb = if b < ncols { cost[b] } else { 0.0 };
        if cb != 0.0 {
            for c in 0..width {
                tab.obj[c] -= cb * tab.data[r * width + c];
            }
        }
    }
    let outcome = tab.run(&|c| c < art_start)?;

    let mut y = vec![0.0; ncols];
    for r in 0..m {
        let b = tab.basis[r];
        if b < ncols {
            y[b] = tab.at(r, total).max(0.0);
        }
    }
    let x: Vec<f64> = maps.iter().map(|m| m.value(&y)).collect();
    let status = match outcome {
        Outcome::Optimal => LpStatus::Optimal,
        Outcome::Unbounded => LpStatus::Unbounded,
    };
    if status == LpStatus::Optimal {
        let viol = p.max_violation(&x);
        if viol > 1e-6 * rhs_scale {
            warn!("simplex solution violates constraints by {viol:e}");
        }
    }
    let objective_value = match status {
        LpStatus::Optimal => p.objective_value(&x),
        _ => match p.sense {
            Sense::Max => f64::INFINITY,
            Sense::Min => f64::NEG_INFINITY,
        },
    };
    Ok(LpSolution {
        status,
        x,
        objective_value,
        iterations: tab.iterations,
    })
}

fn infeasible(n: usize) -> LpSolution {
    LpSolution {
        status: LpStatus::Infeasible,
        x: vec![f64::NAN; n],
        objective_value: f64::NAN,
        iterations: 0,
    }
}
