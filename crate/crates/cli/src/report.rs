//! Session reports and their text and JSON renderings.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use diffiety_core::geometry::{write_combination, OneForm};
use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Inconclusive,
    Fail,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Inconclusive => "inconclusive",
            Verdict::Fail => "fail",
        }
    }

    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }
}

/// One case split taken while answering a query.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForkEntry {
    pub query: String,
    pub pivot: String,
    pub taken: String,
    pub site: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QueryResult {
    pub query: String,
    pub verdict: Verdict,
    pub window: usize,
    pub assumptions: Vec<String>,
    pub stable: bool,
    #[serde(flatten)]
    pub data: BTreeMap<String, Value>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub system: String,
    pub window: usize,
    pub assumptions: Vec<String>,
    pub results: Vec<QueryResult>,
    pub forks: Vec<ForkEntry>,
    pub stable: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Text,
    Json,
}

impl Report {
    /// Worst verdict over all results.
    pub fn verdict(&self) -> Verdict {
        self.results.iter().map(|r| r.verdict).max().unwrap_or(Verdict::Pass)
    }

    /// 0 when everything passes, 2 on any failure, 3 when inconclusive.
    pub fn exit_code(&self) -> i32 {
        match self.verdict() {
            Verdict::Pass => 0,
            Verdict::Fail => 2,
            Verdict::Inconclusive => 3,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    pub fn from_json(s: &str) -> serde_json::Result<Report> {
        serde_json::from_str(s)
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => self.to_json() + "\n",
            Format::Text => self.to_text(),
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let yes = |b: bool| if b { "yes" } else { "no" };
        let _ = writeln!(out, "system {}  window {}  stable {}", self.system, self.window, yes(self.stable));
        if !self.assumptions.is_empty() {
            let _ = writeln!(out, "assume nonzero: {}", self.assumptions.join("; "));
        }
        for r in &self.results {
            let _ = writeln!(
                out,
                "[{}] {}  L={}  stable {}",
                r.verdict.as_str(),
                r.query,
                r.window,
                yes(r.stable)
            );
            for (k, v) in &r.data {
                text_value(&mut out, k, v);
            }
        }
        for f in &self.forks {
            let _ = writeln!(out, "fork ({}) {}: {} {}", f.query, f.site, f.pivot, f.taken);
        }
        out
    }
}

fn text_value(out: &mut String, key: &str, v: &Value) {
    match v {
        Value::Array(items) => {
            if items.iter().all(|i| !i.is_array() && !i.is_object()) {
                let parts: Vec<String> = items.iter().map(scalar).collect();
                if parts.iter().all(|p| p.len() <= 12) {
                    let _ = writeln!(out, "  {key} = [{}]", parts.join(", "));
                    return;
                }
            }
            for (i, item) in items.iter().enumerate() {
                text_value(out, &format!("{key}[{i}]"), item);
            }
        }
        Value::Object(map) => {
            for (k, item) in map {
                text_value(out, &format!("{key}.{k}"), item);
            }
        }
        other => {
            let _ = writeln!(out, "  {key} = {}", scalar(other));
        }
    }
}

fn scalar(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// A contact form written in the basis `c' = ω_c` of the chart, so that
/// `dw1_0 - F'(w2_1) dw2_0 + (...) dx` prints as `w1_0' - F'(w2_1)*w2_0'`.
pub fn omega_text(phi: &OneForm) -> String {
    struct Omega<'a>(&'a OneForm);
    impl std::fmt::Display for Omega<'_> {
        fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
            write_combination(
                f,
                self.0
                    .terms()
                    .filter(|(c, _)| !c.is_indep())
                    .map(|(c, e)| (format!("{c}'"), e)),
            )
        }
    }
    Omega(phi).to_string()
}
