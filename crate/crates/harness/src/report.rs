use crate::config::{CheckId, ExperimentConfig};
use crate::json;
use logkant::Family;
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    /// The check does not apply, e.g. a C2 check on a kinked function.
    Skip,
    /// A measurement with no acceptance criterion attached.
    Info,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Verdict {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Skip => "skip",
            Verdict::Info => "info",
        }
    }
}

/// One measurement. How `value` is compared with `bound` and `tolerance`
/// depends on the metric; the README lists each one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub check: CheckId,
    pub family: Option<Family>,
    pub n: Option<u64>,
    pub mu: f64,
    pub function: Option<String>,
    pub metric: String,
    pub value: Option<f64>,
    pub bound: Option<f64>,
    pub tolerance: f64,
    pub verdict: Verdict,
    /// Seconds spent on the task that produced this record.
    pub wall_time: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub config_hash: String,
    pub version: String,
    pub timestamp: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub metadata: Metadata,
    pub config: ExperimentConfig,
    pub records: Vec<Record>,
}

#[derive(Serialize)]
struct CsvRow<'a> {
    check: &'static str,
    family: Option<&'static str>,
    n: Option<u64>,
    mu: f64,
    function: Option<&'a str>,
    metric: &'a str,
    value: Option<f64>,
    bound: Option<f64>,
    verdict: &'static str,
}

impl ExperimentReport {
    pub fn failures(&self) -> usize {
        self.records.iter().filter(|r| r.verdict == Verdict::Fail).count()
    }

    pub fn to_json(&self) -> String {
        json::to_pretty(self).expect("reports serialize")
    }

    pub fn from_json(text: &str) -> serde_json::Result<ExperimentReport> {
        serde_json::from_str(text)
    }

    pub fn load(path: &Path) -> anyhow::Result<ExperimentReport> {
        use anyhow::Context;
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        ExperimentReport::from_json(&text).with_context(|| format!("parsing {}", path.display()))
    }

    /// One row per record with the fixed column set
    /// `check,family,n,mu,function,metric,value,bound,verdict`.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        if self.records.is_empty() {
            w.write_record(["check", "family", "n", "mu", "function", "metric", "value", "bound", "verdict"])
                .expect("in-memory write");
        }
        for r in &self.records {
            w.serialize(CsvRow {
                check: r.check.name(),
                family: r.family.map(Family::name),
                n: r.n,
                mu: r.mu,
                function: r.function.as_deref(),
                metric: &r.metric,
                value: r.value,
                bound: r.bound,
                verdict: r.verdict.name(),
            })
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv writes UTF-8")
    }

    /// The report with the timestamp and wall times cleared, for comparing
    /// runs.
    pub fn normalized(&self) -> ExperimentReport {
        let mut r = self.clone();
        r.metadata.timestamp.clear();
        for rec in &mut r.records {
            rec.wall_time = 0.0;
        }
        r
    }
}
