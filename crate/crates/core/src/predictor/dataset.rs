use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netcase::LoadVector;
use crate::screening::LoadRegion;

/// One solved UC instance: the load, its optimal cost and which of the `2m`
/// bound-sides were attained at the optimum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub load: LoadVector,
    pub cost: f64,
    pub binding: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub samples: Vec<Sample>,
    /// Seed and region the loads were drawn from, when known.
    pub seed: Option<u64>,
    pub region: Option<LoadRegion>,
}

impl Dataset {
    /// A dataset of unknown provenance, e.g. read back from JSON lines.
    pub fn from_samples(samples: Vec<Sample>) -> Self {
        Self {
            samples,
            seed: None,
            region: None,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn input_dim(&self) -> Option<usize> {
        self.samples.first().map(|s| s.load.len())
    }

    /// JSON-lines text, one sample per line.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for s in &self.samples {
            out.push_str(&serde_json::to_string(s).expect("sample serializes"));
            out.push('\n');
        }
        out
    }

    pub fn parse_jsonl(text: &str) -> Result<Vec<Sample>> {
        text.lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| {
                serde_json::from_str(l).map_err(|e| Error::Parse(format!("line {}: {e}", i + 1)))
            })
            .collect()
    }
}
