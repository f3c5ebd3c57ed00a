//! Precision, recall, F1 and accuracy at binary, per-tag and macro level.
//!
//! A ratio whose denominator is zero is defined as 0, and F1 is 0 whenever
//! `P + R = 0`.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::errors::{Error, Result};

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Harmonic mean of precision and recall, 0 when both are 0.
pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    }
}

/// Counts of (gold, predicted) tag pairs over a declared tag set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionTable {
    tags: Vec<String>,
    counts: Vec<u64>,
}

impl ConfusionTable {
    /// Empty table over `tags`.
    pub fn new(tags: Vec<String>) -> Self {
        let n = tags.len();
        Self { tags, counts: vec![0; n * n] }
    }

    /// Declared tags.
    pub fn tags(&self) -> &[String] {
        &self.tags
    }

    fn tag_index(&self, tag: &str) -> Result<usize> {
        self.tags
            .iter()
            .position(|t| t == tag)
            .ok_or_else(|| Error::UnknownTag(tag.into()))
    }

    /// Count of tokens with gold tag `gold` predicted as `pred`.
    pub fn count(&self, gold: usize, pred: usize) -> u64 {
        self.counts[gold * self.tags.len() + pred]
    }

    /// Records one token.
    pub fn add(&mut self, gold: &str, pred: &str) -> Result<()> {
        let g = self.tag_index(gold)?;
        let p = self.tag_index(pred)?;
        let n = self.tags.len();
        self.counts[g * n + p] += 1;
        Ok(())
    }

    /// Number of evaluated tokens.
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Sum of the diagonal.
    pub fn correct(&self) -> u64 {
        (0..self.tags.len()).map(|i| self.count(i, i)).sum()
    }

    /// Micro accuracy `trace / total`.
    pub fn accuracy(&self) -> f64 {
        ratio(self.correct(), self.total())
    }

    fn gold_total(&self, tag: usize) -> u64 {
        (0..self.tags.len()).map(|p| self.count(tag, p)).sum()
    }

    fn pred_total(&self, tag: usize) -> u64 {
        (0..self.tags.len()).map(|g| self.count(g, tag)).sum()
    }

    /// One-vs-rest scores of one tag.
    pub fn tag_scores(&self, tag: usize) -> TagScore {
        let tp = self.count(tag, tag);
        let support = self.gold_total(tag);
        let predicted = self.pred_total(tag);
        let precision = ratio(tp, predicted);
        let recall = ratio(tp, support);
        TagScore {
            tag: self.tags[tag].clone(),
            precision,
            recall,
            f1: f1_score(precision, recall),
            support,
            predicted,
        }
    }
}

/// Aggregate measures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    /// Precision.
    pub precision: f64,
    /// Recall.
    pub recall: f64,
    /// F1 score.
    pub f1: f64,
    /// Token accuracy.
    pub accuracy: f64,
}

/// One-vs-rest scores of a single tag.
#[derive(Debug, Clone, PartialEq)]
pub struct TagScore {
    /// Tag symbol.
    pub tag: String,
    /// Precision.
    pub precision: f64,
    /// Recall.
    pub recall: f64,
    /// F1 score.
    pub f1: f64,
    /// Gold occurrences.
    pub support: u64,
    /// Predicted occurrences.
    pub predicted: u64,
}

/// Tabulates aligned gold and predicted tag sequences.
pub fn confusion<G, P>(gold: &[Vec<G>], pred: &[Vec<P>], tagset: &[String]) -> Result<ConfusionTable>
where
    G: AsRef<str>,
    P: AsRef<str>,
{
    if gold.len() != pred.len() {
        return Err(Error::Alignment {
            sentence: gold.len().min(pred.len()),
            detail: format!("{} gold sentences but {} predicted", gold.len(), pred.len()),
        });
    }
    let mut table = ConfusionTable::new(tagset.to_vec());
    for (i, (g, p)) in gold.iter().zip(pred).enumerate() {
        if g.len() != p.len() {
            return Err(Error::Alignment {
                sentence: i,
                detail: format!("{} gold tokens but {} predicted", g.len(), p.len()),
            });
        }
        for (g, p) in g.iter().zip(p) {
            table.add(g.as_ref(), p.as_ref())?;
        }
    }
    Ok(table)
}

/// Measures on the `positive` class of a two-tag table.
pub fn binary_metrics(table: &ConfusionTable, positive: &str) -> Result<Metrics> {
    if table.tags.len() != 2 {
        return Err(Error::InvalidConfig(format!(
            "binary metrics need exactly 2 tags, table has {}",
            table.tags.len()
        )));
    }
    let pos = table.tag_index(positive)?;
    let s = table.tag_scores(pos);
    Ok(Metrics { precision: s.precision, recall: s.recall, f1: s.f1, accuracy: table.accuracy() })
}

/// Per-tag scores for every tag seen in gold or predictions, in tag-set
/// order.
pub fn per_tag(table: &ConfusionTable) -> Vec<TagScore> {
    (0..table.tags.len())
        .map(|i| table.tag_scores(i))
        .filter(|s| s.support > 0 || s.predicted > 0)
        .collect()
}

/// Unweighted means of per-tag precision, recall and F1 over the tags that
/// occur in gold or predictions, with micro accuracy.
pub fn macro_metrics(table: &ConfusionTable) -> Metrics {
    let scores = per_tag(table);
    let n = scores.len() as f64;
    let mean = |f: fn(&TagScore) -> f64| {
        if scores.is_empty() {
            0.0
        } else {
            scores.iter().map(f).sum::<f64>() / n
        }
    };
    Metrics {
        precision: mean(|s| s.precision),
        recall: mean(|s| s.recall),
        f1: mean(|s| s.f1),
        accuracy: table.accuracy(),
    }
}

/// Ezafe F1 inside each gold POS bucket.
#[derive(Debug, Clone, PartialEq)]
pub struct PerPosF1 {
    /// `(pos, f1)` sorted by descending F1, then tag.
    pub entries: Vec<(String, f64)>,
    /// Unweighted mean over the listed buckets.
    pub macro_mean: f64,
}

/// Positive-class ezafe F1 per gold POS tag. Buckets without gold or
/// predicted ezafe are left out.
pub fn ezafe_f1_per_pos<S: AsRef<str>>(
    gold_ezafe: &[Vec<u8>],
    pred_ezafe: &[Vec<u8>],
    gold_pos: &[Vec<S>],
) -> Result<PerPosF1> {
    if gold_ezafe.len() != pred_ezafe.len() || gold_ezafe.len() != gold_pos.len() {
        return Err(Error::Alignment {
            sentence: gold_ezafe.len().min(pred_ezafe.len()).min(gold_pos.len()),
            detail: "sequence lists differ in length".into(),
        });
    }
    // (tp, gold positives, predicted positives)
    let mut buckets: BTreeMap<&str, (u64, u64, u64)> = BTreeMap::new();
    for (i, ((g, p), pos)) in gold_ezafe.iter().zip(pred_ezafe).zip(gold_pos).enumerate() {
        if g.len() != p.len() || g.len() != pos.len() {
            return Err(Error::Alignment {
                sentence: i,
                detail: format!("lengths gold {}, predicted {}, pos {}", g.len(), p.len(), pos.len()),
            });
        }
        for ((&g, &p), pos) in g.iter().zip(p).zip(pos) {
            let b = buckets.entry(pos.as_ref()).or_default();
            b.0 += u64::from(g == 1 && p == 1);
            b.1 += u64::from(g == 1);
            b.2 += u64::from(p == 1);
        }
    }
    let mut entries: Vec<(String, f64)> = buckets
        .into_iter()
        .filter(|(_, (_, gp, pp))| gp + pp > 0)
        .map(|(pos, (tp, gp, pp))| (pos.into(), f1_score(ratio(tp, pp), ratio(tp, gp))))
        .collect();
    entries.sort_by(|a, b| match b.1.total_cmp(&a.1) {
        Ordering::Equal => a.0.cmp(&b.0),
        o => o,
    });
    let macro_mean = if entries.is_empty() {
        0.0
    } else {
        entries.iter().map(|e| e.1).sum::<f64>() / entries.len() as f64
    };
    Ok(PerPosF1 { entries, macro_mean })
}

/// `after - before` per tag, sorted by descending delta, then tag.
pub fn delta_report(before: &[(String, f64)], after: &[(String, f64)]) -> Result<Vec<(String, f64)>> {
    let b: BTreeMap<&str, f64> = before.iter().map(|(k, v)| (k.as_str(), *v)).collect();
    let a: BTreeMap<&str, f64> = after.iter().map(|(k, v)| (k.as_str(), *v)).collect();
    if b.len() != before.len() || a.len() != after.len() {
        return Err(Error::KeyMismatch("duplicate tag".into()));
    }
    if let Some(k) = a.keys().find(|k| !b.contains_key(*k)) {
        return Err(Error::KeyMismatch(format!("{k:?} only in the second map")));
    }
    if let Some(k) = b.keys().find(|k| !a.contains_key(*k)) {
        return Err(Error::KeyMismatch(format!("{k:?} only in the first map")));
    }
    let mut out: Vec<(String, f64)> = a.iter().map(|(k, v)| ((*k).into(), v - b[k])).collect();
    out.sort_by(|x, y| match y.1.total_cmp(&x.1) {
        Ordering::Equal => x.0.cmp(&y.0),
        o => o,
    });
    Ok(out)
}
