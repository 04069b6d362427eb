//! Power-network case files: parsing, validation and the in-memory case.
//!
//! A case is a single JSON document with buses, lines, generators and the
//! nominal per-bus load. Bus identifiers in the file are arbitrary integers;
//! they are mapped to contiguous indices `0..n` in file order at load time,
//! and the original labels are kept for reporting and re-serialization.

use std::collections::{HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Bus {
    /// Contiguous 0-based index.
    pub id: usize,
    /// Identifier as written in the case file.
    pub label: i64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Line {
    pub from_bus: usize,
    pub to_bus: usize,
    pub susceptance: f64,
    /// Thermal limit in MW, applied symmetrically to both flow directions.
    pub flow_limit: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Generator {
    pub bus: usize,
    /// Linear cost in $/MWh.
    pub cost: f64,
    pub p_min: f64,
    pub p_max: f64,
}

/// Per-bus demand in MW.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LoadVector(Vec<f64>);

impl LoadVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some((i, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || **v < 0.0)
        {
            return Err(Error::Validation(vec![format!(
                "load at bus {i} must be finite and nonnegative, got {v}"
            )]));
        }
        Ok(Self(values))
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl AsRef<[f64]> for LoadVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkCase {
    pub name: Option<String>,
    pub notes: Option<String>,
    pub buses: Vec<Bus>,
    pub lines: Vec<Line>,
    pub generators: Vec<Generator>,
    pub nominal_load: LoadVector,
}

impl NetworkCase {
    pub fn n_buses(&self) -> usize {
        self.buses.len()
    }

    pub fn n_lines(&self) -> usize {
        self.lines.len()
    }

    pub fn n_generators(&self) -> usize {
        self.generators.len()
    }

    pub fn total_capacity(&self) -> f64 {
        self.generators.iter().map(|g| g.p_max).sum()
    }

    pub fn is_connected(&self) -> bool {
        components(self.n_buses(), &self.lines) <= 1
    }

    /// Canonical JSON form of the case, using the original bus labels.
    pub fn to_json(&self) -> String {
        let doc = CaseDoc::from(self);
        serde_json::to_string_pretty(&doc).expect("case document serializes")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BusDoc {
    id: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LineDoc {
    from: i64,
    to: i64,
    susceptance: f64,
    flow_limit: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GeneratorDoc {
    bus: i64,
    cost: f64,
    p_min: f64,
    p_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CaseDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    notes: Option<String>,
    buses: Vec<BusDoc>,
    lines: Vec<LineDoc>,
    generators: Vec<GeneratorDoc>,
    nominal_load: Vec<f64>,
}

impl From<&NetworkCase> for CaseDoc {
    fn from(case: &NetworkCase) -> Self {
        let label = |i: usize| case.buses.get(i).map_or(i as i64, |b| b.label);
        CaseDoc {
            name: case.name.clone(),
            notes: case.notes.clone(),
            buses: case.buses.iter().map(|b| BusDoc { id: b.label }).collect(),
            lines: case
                .lines
                .iter()
                .map(|l| LineDoc {
                    from: label(l.from_bus),
                    to: label(l.to_bus),
                    susceptance: l.susceptance,
                    flow_limit: l.flow_limit,
                })
                .collect(),
            generators: case
                .generators
                .iter()
                .map(|g| GeneratorDoc {
                    bus: label(g.bus),
                    cost: g.cost,
                    p_min: g.p_min,
                    p_max: g.p_max,
                })
                .collect(),
            nominal_load: case.nominal_load.as_slice().to_vec(),
        }
    }
}

/// Parse and validate a case document.
pub fn load_case(text: &str) -> Result<NetworkCase> {
    let doc: CaseDoc = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;

    let mut index = HashMap::with_capacity(doc.buses.len());
    let mut problems = Vec::new();
    for (i, b) in doc.buses.iter().enumerate() {
        if index.insert(b.id, i).is_some() {
            problems.push(format!("duplicate bus id {}", b.id));
        }
    }
    let mut resolve = |label: i64, what: String| match index.get(&label) {
        Some(&i) => i,
        None => {
            problems.push(format!("{what} references unknown bus {label}"));
            usize::MAX
        }
    };

    let lines: Vec<Line> = doc
        .lines
        .iter()
        .enumerate()
        .map(|(j, l)| Line {
            from_bus: resolve(l.from, format!("line {j}")),
            to_bus: resolve(l.to, format!("line {j}")),
            susceptance: l.susceptance,
            flow_limit: l.flow_limit,
        })
        .collect();
    let generators: Vec<Generator> = doc
        .generators
        .iter()
        .enumerate()
        .map(|(g, gen)| Generator {
            bus: resolve(gen.bus, format!("generator {g}")),
            cost: gen.cost,
            p_min: gen.p_min,
            p_max: gen.p_max,
        })
        .collect();
    if !problems.is_empty() {
        return Err(Error::Validation(problems));
    }

    let case = NetworkCase {
        name: doc.name,
        notes: doc.notes,
        buses: doc
            .buses
            .iter()
            .enumerate()
            .map(|(i, b)| Bus { id: i, label: b.id })
            .collect(),
        lines,
        generators,
        nominal_load: LoadVector(doc.nominal_load),
    };
    let violations = validate_case(&case);
    if violations.is_empty() {
        Ok(case)
    } else {
        Err(Error::Validation(violations))
    }
}

/// Every invariant violated by `case`, one description per violation.
pub fn validate_case(case: &NetworkCase) -> Vec<String> {
    let n = case.n_buses();
    let mut out = Vec::new();

    if n == 0 {
        out.push("case has no buses".to_string());
    }
    for (i, b) in case.buses.iter().enumerate() {
        if b.id != i {
            out.push(format!("bus {} has index {} (expected {i})", b.label, b.id));
        }
    }
    for (j, l) in case.lines.iter().enumerate() {
        if l.from_bus >= n || l.to_bus >= n {
            out.push(format!("line {j} references a bus outside 0..{n}"));
        } else if l.from_bus == l.to_bus {
            out.push(format!("line {j} is a self-loop at bus {}", l.from_bus));
        }
        if !(l.susceptance > 0.0 && l.susceptance.is_finite()) {
            out.push(format!("line {j} susceptance must be positive, got {}", l.susceptance));
        }
        if !(l.flow_limit > 0.0 && l.flow_limit.is_finite()) {
            out.push(format!("line {j} flow limit must be positive, got {}", l.flow_limit));
        }
    }
    for (g, gen) in case.generators.iter().enumerate() {
        if gen.bus >= n {
            out.push(format!("generator {g} is at unknown bus {}", gen.bus));
        }
        if !(gen.cost >= 0.0 && gen.cost.is_finite()) {
            out.push(format!("generator {g} cost must be nonnegative, got {}", gen.cost));
        }
        if !(gen.p_min >= 0.0 && gen.p_min <= gen.p_max && gen.p_max.is_finite()) {
            out.push(format!(
                "generator {g} needs 0 <= p_min <= p_max, got [{}, {}]",
                gen.p_min, gen.p_max
            ));
        }
    }
    let load = case.nominal_load.as_slice();
    if load.len() != n {
        out.push(format!("nominal_load has {} entries for {n} buses", load.len()));
    }
    for (i, v) in load.iter().enumerate() {
        if !(*v >= 0.0 && v.is_finite()) {
            out.push(format!("nominal load at bus {i} must be nonnegative, got {v}"));
        }
    }
    let endpoints_ok = case.lines.iter().all(|l| l.from_bus < n && l.to_bus < n);
    if n > 0 && endpoints_ok {
        let parts = components(n, &case.lines);
        if parts > 1 {
            out.push(format!("network is disconnected ({parts} components)"));
        }
    }
    let demand = case.nominal_load.total();
    let capacity = case.total_capacity();
    if capacity < demand {
        out.push(format!(
            "capacity shortfall: total p_max {capacity} < total nominal load {demand}"
        ));
    }
    out
}

fn components(n: usize, lines: &[Line]) -> usize {
    let mut adj = vec![Vec::new(); n];
    for l in lines {
        if l.from_bus < n && l.to_bus < n {
            adj[l.from_bus].push(l.to_bus);
            adj[l.to_bus].push(l.from_bus);
        }
    }
    let mut seen = vec![false; n];
    let mut count = 0;
    for start in 0..n {
        if seen[start] {
            continue;
        }
        count += 1;
        seen[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(b) = queue.pop_front() {
            for &nb in &adj[b] {
                if !seen[nb] {
                    seen[nb] = true;
                    queue.push_back(nb);
                }
            }
        }
    }
    count
}

/// Cases shipped with the crate.
pub mod bundled {
    use super::{load_case, NetworkCase};

    pub const CASE3_JSON: &str = include_str!("../../../fixtures/case3.json");
    pub const CASE14_JSON: &str = include_str!("../../../fixtures/case14.json");

    /// Three-bus triangle with two generators.
    pub fn case3() -> NetworkCase {
        load_case(CASE3_JSON).expect("bundled case3 is valid")
    }

    /// IEEE 14-bus topology and reactances with documented synthetic costs and limits.
    pub fn case14() -> NetworkCase {
        load_case(CASE14_JSON).expect("bundled case14 is valid")
    }
}
