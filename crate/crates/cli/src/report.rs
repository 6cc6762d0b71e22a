use std::collections::BTreeMap;

use serde::Serialize;

use zkti::float::Float;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Default, Serialize)]
pub struct QSummary {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
}

impl QSummary {
    pub fn of(q: &[Float]) -> Option<Self> {
        if q.is_empty() {
            return None;
        }
        let xs: Vec<f64> = q.iter().map(Float::to_f64).collect();
        Some(QSummary {
            min: xs.iter().copied().fold(f64::INFINITY, f64::min),
            max: xs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            mean: xs.iter().sum::<f64>() / xs.len() as f64,
        })
    }
}

/// Constraint counts of one float operation, next to the reference figure.
#[derive(Debug, Serialize)]
pub struct OpRow {
    pub w: u32,
    pub op: &'static str,
    pub constraints: usize,
    pub reference: Option<usize>,
    pub delta_pct: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct CircuitRow {
    pub w: u32,
    pub alg: &'static str,
    pub n: usize,
    pub m: usize,
    pub constraints_total: usize,
    pub constraints_by_region: BTreeMap<String, usize>,
    pub reference: Option<usize>,
    pub delta_pct: Option<f64>,
}

/// One JSON report per command; fields a command does not produce are omitted.
#[derive(Debug, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub command: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alg: Option<&'static str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub l: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub w: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub constraints_total: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub constraints_by_region: Option<BTreeMap<String, usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prove_ms: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verify_ms: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bundle_bytes: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bundles: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub accuracy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub converged: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q_summary: Option<QSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<u32>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verdict: Option<&'static str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason_code: Option<&'static str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub files: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ops: Option<Vec<OpRow>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub circuits: Option<Vec<CircuitRow>>,
}

impl Report {
    pub fn new(command: &'static str) -> Self {
        Report {
            schema_version: SCHEMA_VERSION,
            command,
            alg: None,
            n: None,
            m: None,
            l: None,
            w: None,
            seed: None,
            constraints_total: None,
            constraints_by_region: None,
            prove_ms: None,
            verify_ms: None,
            bundle_bytes: None,
            bundles: None,
            accuracy: None,
            iterations: None,
            converged: None,
            q_summary: None,
            labels: None,
            verdict: None,
            reason: None,
            reason_code: None,
            files: None,
            ops: None,
            circuits: None,
        }
    }
}

pub fn delta_pct(got: usize, reference: usize) -> f64 {
    let pct = 100.0 * (got as f64 - reference as f64) / reference as f64;
    (pct * 10.0).round() / 10.0
}
