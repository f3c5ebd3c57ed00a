//! Model files.
//!
//! ```text
//! PERTCRF v1 <template-id> <L> <F>
//! <label 0><TAB>...<TAB><label L-1>
//! F<TAB><feature><TAB><w_0><TAB>...<TAB><w_L-1>      (F lines)
//! T<TAB><from label><TAB><w_0><TAB>...<TAB><w_L-1>   (L lines)
//! ```
//!
//! Weights are written in the shortest decimal form that parses back to the
//! same `f64`.

use std::fmt::Write as _;

use pertcrf_core::{CrfModel, FeatureIndex, FeatureTemplate};

use super::{line_error, FormatError};

const MAGIC: &str = "PERTCRF";
const VERSION: &str = "v1";

fn push_weights(out: &mut String, weights: &[f64]) {
    for w in weights {
        // `Debug` is the shortest round-trip rendering.
        let _ = write!(out, "\t{w:?}");
    }
    out.push('\n');
}

/// Serializes a model.
pub fn save_model(model: &CrfModel) -> String {
    let labels = model.labels();
    let l = labels.len();
    let index = model.feature_index();
    let mut out = format!("{MAGIC} {VERSION} {} {} {}\n", model.template().file_id(), l, index.len());
    out.push_str(&labels.join("\t"));
    out.push('\n');
    for (f, key) in index.keys().iter().enumerate() {
        out.push_str("F\t");
        out.push_str(key);
        push_weights(&mut out, &model.emission_weights()[f * l..(f + 1) * l]);
    }
    for (a, label) in labels.iter().enumerate() {
        out.push_str("T\t");
        out.push_str(label);
        push_weights(&mut out, &model.transition_weights()[a * l..(a + 1) * l]);
    }
    out
}

fn parse_weights(cells: &[&str], expected: usize, line: usize) -> Result<Vec<f64>, FormatError> {
    if cells.len() != expected {
        return Err(line_error(line, format!("expected {expected} weights, got {}", cells.len())));
    }
    cells
        .iter()
        .map(|c| {
            c.parse::<f64>()
                .ok()
                .filter(|w| w.is_finite())
                .ok_or_else(|| line_error(line, format!("invalid weight {c:?}")))
        })
        .collect()
}

/// Parses a model file.
pub fn load_model(text: &str) -> Result<CrfModel, FormatError> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| FormatError::Truncated("missing header".into()))?;
    let fields: Vec<&str> = header.split(' ').collect();
    if fields.first() != Some(&MAGIC) {
        return Err(line_error(1, "not a model file"));
    }
    if fields.len() != 5 {
        return Err(line_error(1, "header must be `PERTCRF v1 <template> <L> <F>`"));
    }
    if fields[1] != VERSION {
        return Err(FormatError::UnsupportedVersion(fields[1].to_string()));
    }
    let template = FeatureTemplate::from_file_id(fields[2]).map_err(|e| line_error(1, e.to_string()))?;
    let count = |s: &str, what: &str| s.parse::<usize>().map_err(|_| line_error(1, format!("bad {what} {s:?}")));
    let l = count(fields[3], "label count")?;
    let f = count(fields[4], "feature count")?;

    let labels_line = lines.next().ok_or_else(|| FormatError::Truncated("missing label line".into()))?;
    let labels: Vec<String> = labels_line.split('\t').map(String::from).collect();
    if labels.len() != l {
        return Err(line_error(2, format!("header declares {l} labels, found {}", labels.len())));
    }

    let mut keys = Vec::with_capacity(f);
    let mut emission = Vec::with_capacity(f * l);
    for i in 0..f {
        let number = i + 3;
        let line = lines
            .next()
            .ok_or_else(|| FormatError::Truncated(format!("expected {f} feature lines, found {i}")))?;
        let cells: Vec<&str> = line.split('\t').collect();
        if cells.len() < 2 || cells[0] != "F" {
            return Err(line_error(number, "expected a feature line"));
        }
        keys.push(cells[1].to_string());
        emission.extend(parse_weights(&cells[2..], l, number)?);
    }
    let mut transition = Vec::with_capacity(l * l);
    for (a, label) in labels.iter().enumerate() {
        let number = f + a + 3;
        let line = lines
            .next()
            .ok_or_else(|| FormatError::Truncated(format!("expected {l} transition lines, found {a}")))?;
        let cells: Vec<&str> = line.split('\t').collect();
        if cells.len() < 2 || cells[0] != "T" {
            return Err(line_error(number, "expected a transition line"));
        }
        if cells[1] != label {
            return Err(line_error(number, format!("transition row for {:?}, expected {label:?}", cells[1])));
        }
        transition.extend(parse_weights(&cells[2..], l, number)?);
    }
    if let Some(extra) = lines.next() {
        if !extra.is_empty() {
            return Err(line_error(f + l + 3, "unexpected trailing content"));
        }
    }
    let index = FeatureIndex::from_keys(keys)?;
    Ok(CrfModel::new(labels, index, template, emission, transition)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use pertcrf_core::TemplateId;

    fn sample() -> CrfModel {
        let index = FeatureIndex::from_keys(vec!["w[0]=ketāb".into(), "suf1=b".into()]).unwrap();
        CrfModel::new(
            vec!["N".into(), "ADJ".into()],
            index,
            FeatureTemplate::with_ezafe_input(TemplateId::Crf2),
            vec![0.1, -0.0, 1e-300, 123456.789],
            vec![0.0, 1.0 / 3.0, -2.5, 7e22],
        )
        .unwrap()
    }

    #[test]
    fn round_trip_is_exact() {
        let m = sample();
        let text = save_model(&m);
        let back = load_model(&text).unwrap();
        assert_eq!(back, m);
        assert_eq!(save_model(&back), text);
        for (a, b) in back.emission_weights().iter().zip(m.emission_weights()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn hand_written_file() {
        let text = "PERTCRF v1 CRF1 2 1\n0\t1\nF\tw[0]=a\t0.5\t-1.25\nT\t0\t0.0\t2.0\nT\t1\t-3.0\t0.125\n";
        let m = load_model(text).unwrap();
        assert_eq!(m.labels(), ["0", "1"]);
        assert_eq!(m.emission_weights(), [0.5, -1.25]);
        assert_eq!(m.transition_weights(), [0.0, 2.0, -3.0, 0.125]);
        assert_eq!(m.template(), FeatureTemplate::new(TemplateId::Crf1));
    }

    #[test]
    fn load_errors() {
        let text = save_model(&sample());
        let v99 = text.replacen("v1", "v99", 1);
        let e = load_model(&v99).unwrap_err();
        assert!(e.to_string().contains("unsupported version"), "{e}");
        let cut: String = text.lines().take(4).map(|l| format!("{l}\n")).collect();
        assert!(matches!(load_model(&cut), Err(FormatError::Truncated(_))));
        let unknown = text.replacen("CRF2+EZ", "CRF9", 1);
        assert!(matches!(load_model(&unknown), Err(FormatError::Line { line: 1, .. })));
        assert!(matches!(load_model(""), Err(FormatError::Truncated(_))));
    }
}
