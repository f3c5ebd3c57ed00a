//! HMM specification files for the synthetic corpus generator.
//!
//! ```text
//! STATES
//! N ADJ V
//! START
//! 0.5 0.2 0.3
//! TRANS
//! N   0.3 0.4 0.3
//! ADJ 0.2 0.2 0.6
//! V   0.5 0.3 0.2
//! EMIT
//! ketāb xub raft          (vocabulary)
//! N   0.8 0.2 0.0
//! ...
//! EZAFE
//! N   0.1 0.9 0.0
//! ...
//! ```
//!
//! Cells are separated by any whitespace; `#` starts a comment. Rows of
//! `TRANS`, `EMIT` and `EZAFE` are labeled with their state and may come in
//! any order, but every state needs exactly one row per section.

use std::fmt::Write as _;

use pertcrf_core::datagen::HmmSpec;

use super::{line_error, FormatError};

const SECTIONS: [&str; 5] = ["STATES", "START", "TRANS", "EMIT", "EZAFE"];

struct Line<'a> {
    number: usize,
    cells: Vec<&'a str>,
}

fn numbers(line: &Line<'_>, cells: &[&str]) -> Result<Vec<f64>, FormatError> {
    cells
        .iter()
        .map(|c| c.parse::<f64>().map_err(|_| line_error(line.number, format!("{c:?} is not a number"))))
        .collect()
}

fn labeled_rows(
    section: &str,
    lines: &[Line<'_>],
    states: &[String],
) -> Result<Vec<Vec<f64>>, FormatError> {
    let mut rows: Vec<Option<Vec<f64>>> = vec![None; states.len()];
    for line in lines {
        let name = line.cells[0];
        let s = states
            .iter()
            .position(|st| st == name)
            .ok_or_else(|| line_error(line.number, format!("{section} row for unknown state {name:?}")))?;
        if rows[s].is_some() {
            return Err(line_error(line.number, format!("duplicate {section} row for {name}")));
        }
        rows[s] = Some(numbers(line, &line.cells[1..])?);
    }
    rows.into_iter()
        .zip(states)
        .map(|(r, st)| r.ok_or_else(|| FormatError::Truncated(format!("{section} has no row for {st}"))))
        .collect()
}

/// Parses and validates an HMM specification.
pub fn parse_hmm(text: &str) -> Result<HmmSpec, FormatError> {
    let mut sections: Vec<(&str, usize, Vec<Line<'_>>)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let content = raw.split('#').next().unwrap_or("");
        let cells: Vec<&str> = content.split_whitespace().collect();
        if cells.is_empty() {
            continue;
        }
        let number = i + 1;
        if cells.len() == 1 && SECTIONS.contains(&cells[0]) {
            if sections.iter().any(|(name, _, _)| *name == cells[0]) {
                return Err(line_error(number, format!("duplicate section {}", cells[0])));
            }
            sections.push((cells[0], number, Vec::new()));
            continue;
        }
        match sections.last_mut() {
            Some((_, _, lines)) => lines.push(Line { number, cells }),
            None => return Err(line_error(number, "content before the first section header")),
        }
    }
    let take = |name: &str| -> Result<&Vec<Line<'_>>, FormatError> {
        sections
            .iter()
            .find(|(n, _, _)| *n == name)
            .map(|(_, _, lines)| lines)
            .ok_or_else(|| FormatError::Truncated(format!("missing section {name}")))
    };
    let single = |name: &str| -> Result<&Line<'_>, FormatError> {
        let lines = take(name)?;
        match lines.as_slice() {
            [one] => Ok(one),
            [] => Err(FormatError::Truncated(format!("section {name} is empty"))),
            [_, extra, ..] => Err(line_error(extra.number, format!("section {name} takes one line"))),
        }
    };

    let states: Vec<String> = single("STATES")?.cells.iter().map(|s| s.to_string()).collect();
    let start_line = single("START")?;
    let start = numbers(start_line, &start_line.cells)?;
    let trans = labeled_rows("TRANS", take("TRANS")?, &states)?;
    let emit_lines = take("EMIT")?;
    let (vocab_line, emit_rows) =
        emit_lines.split_first().ok_or_else(|| FormatError::Truncated("section EMIT is empty".into()))?;
    let vocab: Vec<String> = vocab_line.cells.iter().map(|s| s.to_string()).collect();
    let emit = labeled_rows("EMIT", emit_rows, &states)?;
    let ezafe = labeled_rows("EZAFE", take("EZAFE")?, &states)?;
    Ok(HmmSpec::new(states, start, trans, vocab, emit, ezafe)?)
}

fn push_row(out: &mut String, label: Option<&str>, values: &[f64]) {
    let mut first = true;
    if let Some(l) = label {
        out.push_str(l);
        first = false;
    }
    for v in values {
        if !first {
            out.push('\t');
        }
        let _ = write!(out, "{v:?}");
        first = false;
    }
    out.push('\n');
}

/// Renders a specification; [`parse_hmm`] reads it back exactly.
pub fn write_hmm(spec: &HmmSpec) -> String {
    let mut out = String::from("STATES\n");
    out.push_str(&spec.states().join("\t"));
    out.push_str("\nSTART\n");
    push_row(&mut out, None, spec.start());
    out.push_str("TRANS\n");
    for (s, row) in spec.states().iter().zip(spec.trans()) {
        push_row(&mut out, Some(s), row);
    }
    out.push_str("EMIT\n");
    out.push_str(&spec.vocab().join("\t"));
    out.push('\n');
    for (s, row) in spec.states().iter().zip(spec.emit()) {
        push_row(&mut out, Some(s), row);
    }
    out.push_str("EZAFE\n");
    for (s, row) in spec.states().iter().zip(spec.ezafe()) {
        push_row(&mut out, Some(s), row);
    }
    out
}
