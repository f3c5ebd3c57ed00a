//! Human-readable and JSON renderings of evaluation reports, training logs
//! and corpus statistics.
//!
//! Every reported measure is rounded to four decimals once, as a string;
//! the text report prints that string and the JSON report stores the number
//! it parses to, so the two always agree.

use pertcrf_core::corpus::PosStatsRow;
use pertcrf_core::tasks::{EvalReport, ReportKind, TrainingLog};
use serde_json::{json, Map, Value};

/// Renders a measure with four decimals.
pub fn fmt4(x: f64) -> String {
    format!("{x:.4}")
}

fn fmt_delta(x: f64) -> String {
    format!("{x:+.4}")
}

fn num(text: &str) -> Value {
    let x: f64 = text.parse().expect("formatted number parses");
    // -0.0000 is reported as 0.
    json!(if x == 0.0 { 0.0 } else { x })
}

/// One named evaluation inside a report.
#[derive(Debug, Clone)]
pub struct Section {
    /// Heading, e.g. `test` or `test/pos`.
    pub name: String,
    /// The evaluation.
    pub report: EvalReport,
}

/// A complete evaluation document.
#[derive(Debug, Clone, Default)]
pub struct Report {
    /// Provenance: settings and input paths.
    pub header: Vec<(String, String)>,
    /// Evaluations.
    pub sections: Vec<Section>,
    /// Per-tag F1 change against a baseline, largest first.
    pub delta: Option<Vec<(String, f64)>>,
}

impl Report {
    /// Text rendering.
    pub fn to_text(&self) -> String {
        let mut out = String::from("pertcrf evaluation report\n");
        for (k, v) in &self.header {
            out.push_str(&format!("{k}: {v}\n"));
        }
        for s in &self.sections {
            out.push_str(&section_text(s));
        }
        if let Some(delta) = &self.delta {
            out.push_str("\n[delta]\ntag\tdelta_f1\n");
            for (tag, d) in delta {
                out.push_str(&format!("{tag}\t{}\n", fmt_delta(*d)));
            }
        }
        out
    }

    /// JSON rendering.
    pub fn to_json(&self) -> String {
        let header: Map<String, Value> = self.header.iter().map(|(k, v)| (k.clone(), json!(v))).collect();
        let sections: Vec<Value> = self.sections.iter().map(section_json).collect();
        let mut doc = json!({ "header": header, "sections": sections });
        if let Some(delta) = &self.delta {
            doc["delta"] =
                Value::Array(delta.iter().map(|(t, d)| json!({ "tag": t, "delta_f1": num(&fmt_delta(*d)) })).collect());
        }
        let mut text = serde_json::to_string_pretty(&doc).expect("report serializes");
        text.push('\n');
        text
    }
}

fn kind_text(kind: &ReportKind) -> String {
    match kind {
        ReportKind::Binary { positive } => format!("binary (positive class {positive})"),
        ReportKind::Macro => "macro average over observed tags".into(),
    }
}

fn section_text(s: &Section) -> String {
    let r = &s.report;
    let m = &r.metrics;
    let mut out = format!("\n[{}]\nkind: {}\ntokens: {}\n", s.name, kind_text(&r.kind), r.tokens);
    out.push_str(&format!(
        "precision: {}\nrecall: {}\nf1: {}\naccuracy: {}\n",
        fmt4(m.precision),
        fmt4(m.recall),
        fmt4(m.f1),
        fmt4(m.accuracy)
    ));
    out.push_str("\nper_tag:\ntag\tprecision\trecall\tf1\tsupport\tpredicted\n");
    for t in &r.per_tag {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\n",
            t.tag,
            fmt4(t.precision),
            fmt4(t.recall),
            fmt4(t.f1),
            t.support,
            t.predicted
        ));
    }
    if let Some(per_pos) = &r.ezafe_f1_per_pos {
        out.push_str("\nezafe_f1_per_pos:\npos\tf1\n");
        for (pos, f1) in &per_pos.entries {
            out.push_str(&format!("{pos}\t{}\n", fmt4(*f1)));
        }
        out.push_str(&format!("macro_mean (unweighted over listed POS): {}\n", fmt4(per_pos.macro_mean)));
    }
    out
}

fn section_json(s: &Section) -> Value {
    let r = &s.report;
    let m = &r.metrics;
    let per_tag: Vec<Value> = r
        .per_tag
        .iter()
        .map(|t| {
            json!({
                "tag": t.tag,
                "precision": num(&fmt4(t.precision)),
                "recall": num(&fmt4(t.recall)),
                "f1": num(&fmt4(t.f1)),
                "support": t.support,
                "predicted": t.predicted,
            })
        })
        .collect();
    let (per_pos, mean) = match &r.ezafe_f1_per_pos {
        Some(p) => (
            Value::Object(p.entries.iter().map(|(pos, f)| (pos.clone(), num(&fmt4(*f)))).collect()),
            num(&fmt4(p.macro_mean)),
        ),
        None => (Value::Null, Value::Null),
    };
    let (kind, positive) = match &r.kind {
        ReportKind::Binary { positive } => ("binary", json!(positive)),
        ReportKind::Macro => ("macro", Value::Null),
    };
    json!({
        "name": s.name,
        "kind": kind,
        "positive": positive,
        "tokens": r.tokens,
        "precision": num(&fmt4(m.precision)),
        "recall": num(&fmt4(m.recall)),
        "f1": num(&fmt4(m.f1)),
        "accuracy": num(&fmt4(m.accuracy)),
        "per_tag": per_tag,
        "ezafe_f1_per_pos": per_pos,
        "macro_mean": mean,
    })
}

/// Training log: one line per iteration with the objective and, at snapshot
/// points, the validation F1; a final comment names the kept iteration.
pub fn render_log(log: &TrainingLog) -> String {
    let mut out = String::from("iteration\tobjective\tvalid_f1\n");
    for e in &log.entries {
        let f1 = e.valid_f1.map_or("-".to_string(), |f| format!("{f:?}"));
        out.push_str(&format!("{}\t{:?}\t{}\n", e.iteration, e.objective, f1));
    }
    out.push_str(&format!("# selected iteration {} (stop: {:?})\n", log.selected_iteration, log.stop));
    out
}

/// Per-tag statistics table.
pub fn render_stats(rows: &[PosStatsRow]) -> String {
    let mut out = String::from("pos\tezafe_pct\tfreq_pct\tH\n");
    for r in rows {
        out.push_str(&format!("{}\t{:.2}\t{:.2}\t{:.3}\n", r.pos, r.ezafe_pct, r.freq_pct, r.diversity));
    }
    out
}
