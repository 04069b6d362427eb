//! CPLEX LP-format text export, for cross-checking against external solvers.

use std::fmt::Write;

use super::{LpProblem, Relation, Sense};

fn var_name(p: &LpProblem, j: usize) -> String {
    p.names.get(j).cloned().unwrap_or_else(|| format!("x{j}"))
}

fn write_expr(out: &mut String, p: &LpProblem, coeffs: &[f64]) {
    let mut first = true;
    for (j, &a) in coeffs.iter().enumerate() {
        if a == 0.0 {
            continue;
        }
        let sign = if a < 0.0 { '-' } else { '+' };
        if first {
            if a < 0.0 {
                out.push_str(" -");
            }
        } else {
            let _ = write!(out, " {sign}");
        }
        let _ = write!(out, " {} {}", a.abs(), var_name(p, j));
        first = false;
    }
    if first {
        out.push_str(" 0");
    }
}

/// Render `p` in CPLEX LP format. `binaries` lists variables to declare binary.
pub fn to_lp_format(p: &LpProblem, binaries: &[usize]) -> String {
    let mut out = String::new();
    out.push_str(match p.sense {
        Sense::Max => "Maximize\n",
        Sense::Min => "Minimize\n",
    });
    out.push_str(" obj:");
    write_expr(&mut out, p, &p.objective);
    out.push_str("\nSubject To\n");
    for (i, c) in p.constraints.iter().enumerate() {
        match &c.name {
            Some(name) => {
                let _ = write!(out, " {name}:");
            }
            None => {
                let _ = write!(out, " c{i}:");
            }
        }
        write_expr(&mut out, p, &c.coeffs);
        let rel = match c.relation {
            Relation::Le => "<=",
            Relation::Eq => "=",
            Relation::Ge => ">=",
        };
        let _ = writeln!(out, " {rel} {}", c.rhs);
    }
    out.push_str("Bounds\n");
    for (j, &(lo, hi)) in p.bounds.iter().enumerate() {
        let name = var_name(p, j);
        let _ = match (lo.is_finite(), hi.is_finite()) {
            (false, false) => writeln!(out, " {name} free"),
            (true, true) => writeln!(out, " {lo} <= {name} <= {hi}"),
            (true, false) => writeln!(out, " {name} >= {lo}"),
            (false, true) => writeln!(out, " -inf <= {name} <= {hi}"),
        };
    }
    if !binaries.is_empty() {
        out.push_str("Binaries\n");
        for &j in binaries {
            let _ = writeln!(out, " {}", var_name(p, j));
        }
    }
    out.push_str("End\n");
    out
}
