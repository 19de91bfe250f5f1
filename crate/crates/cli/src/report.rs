use std::collections::BTreeMap;
use std::io::Write;

use relusolve_core::NetworkStats;
use serde::{Deserialize, Serialize};

pub const TOOL: &str = "relusolve";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub method: Option<String>,
    pub problem: String,
    pub n: usize,
    pub eta: usize,
    pub lambda: f64,
    #[serde(rename = "Lambda")]
    pub lambda_max: f64,
    pub kappa: f64,
    pub epsilon: Option<f64>,
    pub c_sc: Option<f64>,
    pub m: Option<usize>,
    pub seed: u64,
    pub samples: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub depth: usize,
    pub weights: usize,
    pub max_width: usize,
    pub input_dim: usize,
    pub output_dim: usize,
    pub per_layer: Vec<usize>,
}

impl From<&NetworkStats> for Stats {
    fn from(s: &NetworkStats) -> Self {
        Self {
            depth: s.depth,
            weights: s.weights,
            max_width: s.max_width,
            input_dim: s.input_dim,
            output_dim: s.output_dim,
            per_layer: s.per_layer.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub index: usize,
    pub rhs_norm: f64,
    /// `||r||_2 / lambda`.
    pub c_sc_realized: f64,
    pub error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditRow {
    pub method: String,
    pub n: usize,
    pub eta: usize,
    pub kappa: f64,
    pub eps: f64,
    pub m: usize,
    #[serde(rename = "L")]
    pub depth: usize,
    #[serde(rename = "M")]
    pub weights: usize,
    #[serde(rename = "ratio_L")]
    pub ratio_depth: f64,
    #[serde(rename = "ratio_M")]
    pub ratio_weights: f64,
    #[serde(rename = "flag_L")]
    pub flag_depth: bool,
    #[serde(rename = "flag_M")]
    pub flag_weights: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub params: Params,
    pub stats: Option<Stats>,
    pub audit: Vec<AuditRow>,
    pub samples: Vec<Sample>,
    pub max_error: Option<f64>,
    pub zero_rhs_error: Option<f64>,
    pub passed: Option<bool>,
    /// Wall-clock seconds per phase.
    pub durations: BTreeMap<String, f64>,
}

impl RunReport {
    pub fn new(command: &str, params: Params) -> Self {
        Self {
            tool: TOOL.into(),
            version: VERSION.into(),
            command: command.into(),
            params,
            ..Self::default()
        }
    }

    pub fn write_json(&self, w: &mut dyn Write) -> std::io::Result<()> {
        serde_json::to_writer_pretty(&mut *w, self)?;
        w.write_all(b"\n")
    }

    /// Audit reports become the audit table; everything else one row per
    /// sample (or a single summary row) with the parameters repeated.
    pub fn write_csv(&self, w: &mut dyn Write) -> std::io::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        if self.command == "audit" {
            for row in &self.audit {
                out.serialize(row)?;
            }
            return out.flush();
        }
        out.write_record([
            "tool", "version", "command", "method", "problem", "n", "eta", "lambda", "Lambda", "kappa",
            "epsilon", "c_sc", "m", "seed", "depth", "weights", "sample", "rhs_norm", "c_sc_realized",
            "error", "max_error", "zero_rhs_error", "passed",
        ])?;
        let p = &self.params;
        let opt = |v: Option<String>| v.unwrap_or_default();
        let head = vec![
            self.tool.clone(),
            self.version.clone(),
            self.command.clone(),
            opt(p.method.clone()),
            p.problem.clone(),
            p.n.to_string(),
            p.eta.to_string(),
            p.lambda.to_string(),
            p.lambda_max.to_string(),
            p.kappa.to_string(),
            opt(p.epsilon.map(|v| v.to_string())),
            opt(p.c_sc.map(|v| v.to_string())),
            opt(p.m.map(|v| v.to_string())),
            p.seed.to_string(),
            opt(self.stats.as_ref().map(|s| s.depth.to_string())),
            opt(self.stats.as_ref().map(|s| s.weights.to_string())),
        ];
        let tail = vec![
            opt(self.max_error.map(|v| v.to_string())),
            opt(self.zero_rhs_error.map(|v| v.to_string())),
            opt(self.passed.map(|v| v.to_string())),
        ];
        let mut rows: Vec<Vec<String>> = self
            .samples
            .iter()
            .map(|s| {
                vec![
                    s.index.to_string(),
                    s.rhs_norm.to_string(),
                    s.c_sc_realized.to_string(),
                    s.error.to_string(),
                ]
            })
            .collect();
        if rows.is_empty() {
            rows.push(vec![String::new(); 4]);
        }
        for mid in rows {
            out.write_record(head.iter().chain(&mid).chain(&tail))?;
        }
        out.flush()
    }
}
