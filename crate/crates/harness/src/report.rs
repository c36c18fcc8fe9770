//! Summary table over finished runs.

use std::path::{Path, PathBuf};

use cidlab_core::models::ModelTag;
use cidlab_core::series::format_real;

use crate::run::{DiagnosticRecord, RunManifest};

pub const INCOMPLETE: &str = "incomplete";

/// One row per (experiment, diagnostic).
#[derive(Clone, Debug, PartialEq)]
pub struct ReportRow {
    pub experiment: String,
    pub model: String,
    pub diagnostic: String,
    pub final_value: Option<f64>,
    pub trend: Option<f64>,
    pub verdict: String,
    pub expected: String,
    pub tag: String,
}

/// Theorem a diagnostic speaks to, given the model it ran on.
pub fn theorem_tag(model: ModelTag, diagnostic: &str) -> &'static str {
    match (model, diagnostic) {
        (ModelTag::Singular, _) => "Ex3",
        (ModelTag::GaussConj, "tv_curve") => "T1",
        (_, "tv_curve" | "atom_sup_gap" | "empirical_gap") => "T2",
        _ => "T3",
    }
}

fn incomplete(experiment: String, model: String, diagnostic: String) -> ReportRow {
    ReportRow {
        experiment,
        model,
        diagnostic,
        final_value: None,
        trend: None,
        verdict: INCOMPLETE.into(),
        expected: String::new(),
        tag: String::new(),
    }
}

/// Rows for every diagnostic of every manifest, in order. Unreadable
/// manifests or verdict files give rows marked incomplete.
pub fn report(manifests: &[PathBuf]) -> Vec<ReportRow> {
    let mut rows = Vec::new();
    for path in manifests {
        let Ok(manifest) = RunManifest::read(path) else {
            rows.push(incomplete(path.display().to_string(), String::new(), String::new()));
            continue;
        };
        let dir = path.parent().unwrap_or(Path::new("."));
        for v in &manifest.verdicts {
            let file = dir.join(format!("{}.json", v.label));
            let record: Option<DiagnosticRecord> = std::fs::read_to_string(&file)
                .ok()
                .and_then(|t| serde_json::from_str(&t).ok());
            rows.push(match record {
                Some(r) => ReportRow {
                    experiment: r.experiment,
                    model: r.model.to_string(),
                    diagnostic: r.label,
                    final_value: r.value,
                    trend: r.trend,
                    verdict: r.verdict.to_string(),
                    expected: r.expected_verdict.to_string(),
                    tag: theorem_tag(r.model, &r.name).into(),
                },
                None => incomplete(
                    manifest.experiment.clone(),
                    manifest.model.to_string(),
                    v.label.clone(),
                ),
            });
        }
    }
    rows
}

const HEADER: [&str; 8] = [
    "experiment",
    "model",
    "diagnostic",
    "final_value",
    "trend",
    "verdict",
    "expected",
    "tag",
];

fn cells(row: &ReportRow) -> [String; 8] {
    let num = |x: Option<f64>| x.map_or_else(String::new, format_real);
    [
        row.experiment.clone(),
        row.model.clone(),
        row.diagnostic.clone(),
        num(row.final_value),
        num(row.trend),
        row.verdict.clone(),
        row.expected.clone(),
        row.tag.clone(),
    ]
}

pub fn to_csv(rows: &[ReportRow]) -> String {
    let mut out = HEADER.join(",");
    out.push('\n');
    for row in rows {
        out.push_str(&cells(row).join(","));
        out.push('\n');
    }
    out
}

/// Plain-text table with space-aligned columns.
pub fn to_table(rows: &[ReportRow]) -> String {
    let body: Vec<[String; 8]> = rows.iter().map(cells).collect();
    let mut widths = HEADER.map(str::len);
    for r in &body {
        for (w, c) in widths.iter_mut().zip(r) {
            *w = (*w).max(c.len());
        }
    }
    let line = |cols: Vec<&str>| {
        let padded: Vec<String> = cols
            .iter()
            .zip(widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect();
        padded.join("  ").trim_end().to_string() + "\n"
    };
    let mut out = line(HEADER.to_vec());
    for r in &body {
        out.push_str(&line(r.iter().map(String::as_str).collect()));
    }
    out
}
