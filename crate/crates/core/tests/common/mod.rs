//! Brute-force reference implementations shared by the integration tests.
#![allow(dead_code)]

use rand::Rng;
use uc_screen_core::formulation::UcFormulation;
use uc_screen_core::lp::{solve_lp, Constraint, LpProblem, LpStatus, Relation, Sense};
use uc_screen_core::netcase::{load_case, NetworkCase};
use uc_screen_core::{LoadVector, MlpModel};

/// Solve the square system `a x = b` by Gaussian elimination with partial
/// pivoting; `None` when a pivot falls below `1e-12` — treated as singular.
pub fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let factor = a[r][col] / a[col][col];
            if factor != 0.0 {
                let (head, tail) = a.split_at_mut(r);
                for (x, p) in tail[0][col..].iter_mut().zip(&head[col][col..]) {
                    *x -= factor * p;
                }
                b[r] -= factor * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

fn combinations(n: usize, k: usize, f: &mut impl FnMut(&[usize])) {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
        if cur.len() == k {
            f(cur);
            return;
        }
        for i in start..=n - (k - cur.len()) {
            cur.push(i);
            go(i + 1, n, k, cur, f);
            cur.pop();
        }
    }
    go(0, n, k, &mut Vec::with_capacity(k), f);
}

/// Optimum of a bounded LP by enumerating every vertex of its feasible set.
/// `None` means no vertex is feasible (the LP is infeasible).
pub fn vertex_enumeration(p: &LpProblem) -> Option<f64> {
    let n = p.n_vars();
    let mut planes: Vec<(Vec<f64>, f64)> = p.constraints.iter().map(|c| (c.coeffs.clone(), c.rhs)).collect();
    for (i, &(lo, hi)) in p.bounds.iter().enumerate() {
        assert!(lo.is_finite() && hi.is_finite(), "oracle needs a bounded box");
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        planes.push((e.clone(), lo));
        planes.push((e, hi));
    }
    let feasible = |x: &[f64]| {
        p.constraints.iter().all(|c| {
            let scale = 1.0 + c.rhs.abs() + c.coeffs.iter().map(|a| a.abs()).sum::<f64>();
            c.violation(x) <= 1e-9 * scale
        }) && x
            .iter()
            .zip(&p.bounds)
            .all(|(v, (lo, hi))| *v >= lo - 1e-9 * (1.0 + lo.abs()) && *v <= hi + 1e-9 * (1.0 + hi.abs()))
    };
    let mut best: Option<f64> = None;
    combinations(planes.len(), n, &mut |idx| {
        let a = idx.iter().map(|&i| planes[i].0.clone()).collect();
        let b = idx.iter().map(|&i| planes[i].1).collect();
        if let Some(x) = gauss_solve(a, b) {
            if feasible(&x) {
                let v = p.objective_value(&x);
                best = Some(match (best, p.sense) {
                    (None, _) => v,
                    (Some(b), Sense::Max) => b.max(v),
                    (Some(b), Sense::Min) => b.min(v),
                });
            }
        }
    });
    best
}

/// A random LP over a finite box with at most `max_vars` variables.
pub fn random_lp<R: Rng>(rng: &mut R, max_vars: usize) -> LpProblem {
    let n = rng.gen_range(1..=max_vars);
    let m = rng.gen_range(1..=5);
    let sense = if rng.gen_bool(0.5) { Sense::Max } else { Sense::Min };
    let objective = (0..n).map(|_| rng.gen_range(-10.0..10.0)).collect();
    let mut p = LpProblem::new(sense, objective);
    p.bounds = (0..n)
        .map(|_| {
            let lo = *[0.0, 0.0, -3.0, 1.5].get(rng.gen_range(0..4)).unwrap();
            (lo, lo + rng.gen_range(1.0..10.0))
        })
        .collect();
    for _ in 0..m {
        let coeffs = (0..n)
            .map(|_| if rng.gen_bool(0.2) { 0.0 } else { rng.gen_range(-5.0..5.0) })
            .collect();
        let relation = match rng.gen_range(0..10) {
            0 | 1 => Relation::Ge,
            2 => Relation::Eq,
            _ => Relation::Le,
        };
        p.constraints.push(Constraint::new(coeffs, relation, rng.gen_range(-5.0..20.0)));
    }
    p
}

pub fn agrees(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol || (a - b).abs() <= tol * a.abs().max(b.abs())
}

/// A random connected network with `1..=max_gens` generators.
pub fn random_case<R: Rng>(rng: &mut R, max_gens: usize) -> NetworkCase {
    let n = rng.gen_range(2..=5);
    let mut lines = Vec::new();
    for b in 1..n {
        lines.push((rng.gen_range(0..b), b));
    }
    for _ in 0..rng.gen_range(0..=2) {
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        if a != b {
            lines.push((a, b));
        }
    }
    let g = rng.gen_range(1..=max_gens);
    let gens: Vec<String> = (0..g)
        .map(|_| {
            let p_min = if rng.gen_bool(0.5) { 0.0 } else { rng.gen_range(1.0..15.0) };
            format!(
                r#"{{"bus": {}, "cost": {:.3}, "p_min": {:.3}, "p_max": {:.3}}}"#,
                rng.gen_range(0..n),
                rng.gen_range(5.0..50.0),
                p_min,
                p_min + rng.gen_range(10.0..60.0)
            )
        })
        .collect();
    let capacity: f64 = gens
        .iter()
        .map(|s| serde_json::from_str::<serde_json::Value>(s).unwrap()["p_max"].as_f64().unwrap())
        .sum();
    let loads: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..30.0)).collect();
    let total: f64 = loads.iter().sum();
    let scale = if total > 0.9 * capacity { 0.9 * capacity / total } else { 1.0 };
    let loads: Vec<String> = loads.iter().map(|l| format!("{:.4}", l * scale)).collect();
    let lines: Vec<String> = lines
        .iter()
        .map(|(a, b)| {
            format!(
                r#"{{"from": {a}, "to": {b}, "susceptance": {:.3}, "flow_limit": {:.3}}}"#,
                rng.gen_range(1.0..10.0),
                rng.gen_range(8.0..60.0)
            )
        })
        .collect();
    let buses: Vec<String> = (0..n).map(|b| format!(r#"{{"id": {b}}}"#)).collect();
    let text = format!(
        r#"{{"buses": [{}], "lines": [{}], "generators": [{}], "nominal_load": [{}]}}"#,
        buses.join(","),
        lines.join(","),
        gens.join(","),
        loads.join(",")
    );
    load_case(&text).expect("random case is valid")
}

/// Minimum UC cost by solving the dispatch LP for every commitment.
pub fn commitment_enumeration(form: &UcFormulation, load: &LoadVector) -> Option<f64> {
    let p = form.assemble_uc(load).unwrap();
    let g = p.binary_vars.len();
    let mut best: Option<f64> = None;
    for mask in 0u32..(1 << g) {
        let mut lp = p.base.clone();
        for (bit, &v) in p.binary_vars.iter().enumerate() {
            let on = f64::from((mask >> bit) & 1);
            lp.bounds[v] = (on, on);
        }
        let sol = solve_lp(&lp).unwrap();
        if sol.status == LpStatus::Optimal {
            best = Some(best.map_or(sol.objective_value, |b: f64| b.min(sol.objective_value)));
        }
    }
    best
}

/// Line flows from nodal injections by solving the reduced susceptance
/// system `B θ = p` (slack bus 0, θ₀ = 0).
pub fn dc_power_flow(case: &NetworkCase, injections: &[f64]) -> Vec<f64> {
    let n = case.n_buses();
    let mut b = vec![vec![0.0; n]; n];
    for l in &case.lines {
        let (i, j, s) = (l.from_bus, l.to_bus, l.susceptance);
        b[i][i] += s;
        b[j][j] += s;
        b[i][j] -= s;
        b[j][i] -= s;
    }
    let reduced: Vec<Vec<f64>> = b[1..].iter().map(|row| row[1..].to_vec()).collect();
    let theta_r = gauss_solve(reduced, injections[1..].to_vec()).expect("connected network");
    let mut theta = vec![0.0];
    theta.extend(theta_r);
    case.lines
        .iter()
        .map(|l| l.susceptance * (theta[l.from_bus] - theta[l.to_bus]))
        .collect()
}

/// Euclidean projection onto `{lo <= x <= hi, sum x = level}` by trying every
/// assignment of coordinates to {at lower, at upper, free}.
pub fn projection_by_enumeration(v: &[f64], lo: &[f64], hi: &[f64], level: f64) -> Option<Vec<f64>> {
    let n = v.len();
    let mut best: Option<(f64, Vec<f64>)> = None;
    let total = 3usize.pow(n as u32);
    for code in 0..total {
        let mut c = code;
        let mut state = vec![0u8; n];
        for s in state.iter_mut() {
            *s = (c % 3) as u8;
            c /= 3;
        }
        let fixed: f64 = (0..n)
            .map(|i| match state[i] {
                0 => lo[i],
                1 => hi[i],
                _ => 0.0,
            })
            .sum();
        let free: Vec<usize> = (0..n).filter(|&i| state[i] == 2).collect();
        let mut x: Vec<f64> = (0..n).map(|i| if state[i] == 1 { hi[i] } else { lo[i] }).collect();
        if free.is_empty() {
            if (fixed - level).abs() > 1e-9 * (1.0 + level.abs()) {
                continue;
            }
        } else {
            let lambda = (free.iter().map(|&i| v[i]).sum::<f64>() + fixed - level) / free.len() as f64;
            for &i in &free {
                x[i] = v[i] - lambda;
            }
            if free.iter().any(|&i| x[i] < lo[i] - 1e-12 || x[i] > hi[i] + 1e-12) {
                continue;
            }
        }
        let d: f64 = x.iter().zip(v).map(|(a, b)| (a - b).powi(2)).sum();
        if best.as_ref().is_none_or(|(bd, _)| d < *bd) {
            best = Some((d, x));
        }
    }
    best.map(|(_, x)| x)
}

/// Central finite-difference gradient of the model's prediction.
pub fn finite_difference_gradient(model: &MlpModel, x: &[f64], h: f64) -> Vec<f64> {
    (0..x.len())
        .map(|i| {
            let mut up = x.to_vec();
            let mut dn = x.to_vec();
            up[i] += h;
            dn[i] -= h;
            (model.predict(&up).unwrap() - model.predict(&dn).unwrap()) / (2.0 * h)
        })
        .collect()
}

/// Smallest |pre-activation| over all hidden units, in normalized units.
pub fn min_hidden_margin(model: &MlpModel, x: &[f64]) -> f64 {
    let mut a = model.normalize(x);
    let mut margin = f64::INFINITY;
    let last = model.layers.len() - 1;
    for (li, layer) in model.layers.iter().enumerate() {
        let z: Vec<f64> = (0..layer.outputs)
            .map(|o| {
                layer.biases[o]
                    + layer.weights[o * layer.inputs..(o + 1) * layer.inputs]
                        .iter()
                        .zip(&a)
                        .map(|(w, v)| w * v)
                        .sum::<f64>()
            })
            .collect();
        if li < last {
            margin = z.iter().fold(margin, |m, v| m.min(v.abs()));
            a = z.into_iter().map(|v| v.max(0.0)).collect();
        }
    }
    margin
}
