//! Feature templates and the string-keyed feature dictionary.
//!
//! Key grammar (stable across versions):
//!
//! * `w[k]=<form>` for `k` in `-5..=5`, with `__BOS__`/`__EOS__` for
//!   positions before the start or past the end of the sentence;
//! * `pre1=`..`pre3=` and `suf1=`..`suf3=` (CRF2 only), counted in Unicode
//!   scalars and omitted when the form is shorter than the affix;
//! * `BOS` / `EOS` (CRF2 only), emitted only on the first / last token;
//! * `ez[k]=<0|1|_>` for `k` in `-5..=5` when the template takes ezafe input.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use hashbrown::HashMap;

use crate::corpus::{Corpus, Sentence};
use crate::errors::{Error, Result};

/// Context radius of both templates.
pub const WINDOW: usize = 5;

/// Sentinel form before the sentence start.
pub const BOS_FORM: &str = "__BOS__";
/// Sentinel form after the sentence end.
pub const EOS_FORM: &str = "__EOS__";
/// Sentinel ezafe value outside the sentence.
pub const NO_EZAFE: &str = "_";

/// Which feature set a template emits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TemplateId {
    /// Focus word plus five words on either side.
    Crf1,
    /// CRF1 plus 1-3 character affixes and sentence-boundary booleans.
    Crf2,
}

impl TemplateId {
    /// Canonical upper-case name.
    pub fn as_str(self) -> &'static str {
        match self {
            TemplateId::Crf1 => "CRF1",
            TemplateId::Crf2 => "CRF2",
        }
    }
}

impl fmt::Display for TemplateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TemplateId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "CRF1" => Ok(TemplateId::Crf1),
            "CRF2" => Ok(TemplateId::Crf2),
            _ => Err(Error::InvalidModel(format!("unknown template id {s:?}"))),
        }
    }
}

/// A feature template: base feature set plus optional ezafe input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FeatureTemplate {
    /// Base feature set.
    pub id: TemplateId,
    /// Whether `ez[k]` features are emitted from an [`EzafeAnnotation`].
    pub ezafe_input: bool,
}

impl FeatureTemplate {
    /// Template without ezafe input.
    pub const fn new(id: TemplateId) -> Self {
        Self { id, ezafe_input: false }
    }

    /// Template with ezafe input.
    pub const fn with_ezafe_input(id: TemplateId) -> Self {
        Self { id, ezafe_input: true }
    }

    /// Context radius.
    pub const fn window(&self) -> usize {
        WINDOW
    }

    /// Identifier used in model files: `CRF1`, `CRF2`, `CRF1+EZ` or `CRF2+EZ`.
    pub fn file_id(&self) -> String {
        if self.ezafe_input {
            format!("{}+EZ", self.id)
        } else {
            format!("{}", self.id)
        }
    }

    /// Inverse of [`FeatureTemplate::file_id`].
    pub fn from_file_id(s: &str) -> Result<Self> {
        match s.strip_suffix("+EZ") {
            Some(base) if base.to_ascii_uppercase() == base => Ok(Self::with_ezafe_input(base.parse()?)),
            None if s.to_ascii_uppercase() == s => Ok(Self::new(s.parse()?)),
            _ => Err(Error::InvalidModel(format!("unknown template id {s:?}"))),
        }
    }
}

impl fmt::Display for FeatureTemplate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.file_id())
    }
}

/// Predicted (or gold) ezafe flags for one sentence.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EzafeAnnotation {
    flags: Vec<u8>,
}

impl EzafeAnnotation {
    /// Flags must all be 0 or 1.
    pub fn new(flags: Vec<u8>) -> Result<Self> {
        if let Some(&bad) = flags.iter().find(|&&f| f > 1) {
            return Err(Error::InvalidFlag(bad));
        }
        Ok(Self { flags })
    }

    /// Gold flags of a sentence.
    pub fn gold(sentence: &Sentence) -> Self {
        Self { flags: sentence.ezafe_flags() }
    }

    /// The flags.
    pub fn flags(&self) -> &[u8] {
        &self.flags
    }

    /// Number of flags.
    pub fn len(&self) -> usize {
        self.flags.len()
    }

    /// True when there are no flags.
    pub fn is_empty(&self) -> bool {
        self.flags.is_empty()
    }
}

/// Feature keys active at one position.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FeatureVector {
    keys: Vec<String>,
}

impl FeatureVector {
    /// Wraps a list of distinct keys.
    pub fn from_keys(keys: Vec<String>) -> Self {
        Self { keys }
    }

    /// The keys in emission order.
    pub fn keys(&self) -> &[String] {
        &self.keys
    }

    /// Number of keys.
    pub fn len(&self) -> usize {
        self.keys.len()
    }

    /// True when no key is active.
    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    /// Whether `key` is active.
    pub fn contains(&self, key: &str) -> bool {
        self.keys.iter().any(|k| k == key)
    }
}

fn check_annotation(
    sentence: &Sentence,
    template: &FeatureTemplate,
    ezafe: Option<&EzafeAnnotation>,
) -> Result<()> {
    match (template.ezafe_input, ezafe) {
        (true, None) => Err(Error::AnnotationMismatch {
            template: template.file_id(),
            detail: "requires an ezafe annotation",
        }),
        (false, Some(_)) => Err(Error::AnnotationMismatch {
            template: template.file_id(),
            detail: "does not take an ezafe annotation",
        }),
        (true, Some(a)) if a.len() != sentence.len() => Err(Error::AnnotationLength {
            expected: sentence.len(),
            got: a.len(),
        }),
        _ => Ok(()),
    }
}

fn affix(form: &str, n: usize, suffix: bool) -> Option<&str> {
    let scalars = form.chars().count();
    if scalars < n {
        return None;
    }
    if suffix {
        let start = form.char_indices().nth(scalars - n).map_or(0, |(i, _)| i);
        Some(&form[start..])
    } else {
        let end = form.char_indices().nth(n).map_or(form.len(), |(i, _)| i);
        Some(&form[..end])
    }
}

fn push_position_features(
    forms: &[&str],
    position: usize,
    template: &FeatureTemplate,
    ezafe: Option<&EzafeAnnotation>,
    out: &mut Vec<String>,
) {
    let len = forms.len() as isize;
    let radius = WINDOW as isize;
    for k in -radius..=radius {
        let t = position as isize + k;
        let form = if t < 0 {
            BOS_FORM
        } else if t >= len {
            EOS_FORM
        } else {
            forms[t as usize]
        };
        out.push(format!("w[{k}]={form}"));
    }
    if template.id == TemplateId::Crf2 {
        let focus = forms[position];
        for n in 1..=3 {
            if let Some(p) = affix(focus, n, false) {
                out.push(format!("pre{n}={p}"));
            }
        }
        for n in 1..=3 {
            if let Some(s) = affix(focus, n, true) {
                out.push(format!("suf{n}={s}"));
            }
        }
        if position == 0 {
            out.push("BOS".into());
        }
        if position + 1 == forms.len() {
            out.push("EOS".into());
        }
    }
    if let Some(annotation) = ezafe {
        let flags = annotation.flags();
        for k in -radius..=radius {
            let t = position as isize + k;
            if t < 0 || t >= len {
                out.push(format!("ez[{k}]={NO_EZAFE}"));
            } else {
                out.push(format!("ez[{k}]={}", flags[t as usize]));
            }
        }
    }
}

/// Features active at `position` of `sentence` under `template`.
pub fn extract_features(
    sentence: &Sentence,
    position: usize,
    template: &FeatureTemplate,
    ezafe: Option<&EzafeAnnotation>,
) -> Result<FeatureVector> {
    if position >= sentence.len() {
        return Err(Error::PositionOutOfRange { position, len: sentence.len() });
    }
    check_annotation(sentence, template, ezafe)?;
    let forms: Vec<&str> = sentence.forms().collect();
    let mut keys = Vec::with_capacity(2 * (2 * WINDOW + 1) + 8);
    push_position_features(&forms, position, template, ezafe, &mut keys);
    Ok(FeatureVector { keys })
}

/// Features of every position of a sentence of surface forms.
pub fn extract_forms(
    forms: &[&str],
    template: &FeatureTemplate,
    ezafe: Option<&EzafeAnnotation>,
) -> Result<Vec<FeatureVector>> {
    match (template.ezafe_input, ezafe) {
        (true, None) | (false, Some(_)) => {
            return Err(Error::AnnotationMismatch {
                template: template.file_id(),
                detail: if template.ezafe_input {
                    "requires an ezafe annotation"
                } else {
                    "does not take an ezafe annotation"
                },
            })
        }
        (true, Some(a)) if a.len() != forms.len() => {
            return Err(Error::AnnotationLength { expected: forms.len(), got: a.len() })
        }
        _ => {}
    }
    Ok((0..forms.len())
        .map(|t| {
            let mut keys = Vec::new();
            push_position_features(forms, t, template, ezafe, &mut keys);
            FeatureVector { keys }
        })
        .collect())
}

/// Features of every position of a sentence.
pub fn extract_sentence(
    sentence: &Sentence,
    template: &FeatureTemplate,
    ezafe: Option<&EzafeAnnotation>,
) -> Result<Vec<FeatureVector>> {
    let forms: Vec<&str> = sentence.forms().collect();
    extract_forms(&forms, template, ezafe)
}

/// An unlabeled sentence as seen by a tagger: surface forms and, for
/// templates that take it, an ezafe annotation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Observation {
    /// Surface forms.
    pub forms: Vec<String>,
    /// Ezafe input flags.
    pub ezafe: Option<EzafeAnnotation>,
}

impl Observation {
    /// Forms only.
    pub fn new(forms: Vec<String>) -> Self {
        Self { forms, ezafe: None }
    }

    /// Forms of a corpus sentence, optionally with its gold ezafe flags.
    pub fn from_sentence(sentence: &Sentence, gold_ezafe: bool) -> Self {
        Self {
            forms: sentence.forms().map(String::from).collect(),
            ezafe: gold_ezafe.then(|| EzafeAnnotation::gold(sentence)),
        }
    }

    /// Number of tokens.
    pub fn len(&self) -> usize {
        self.forms.len()
    }

    /// True when there are no tokens.
    pub fn is_empty(&self) -> bool {
        self.forms.is_empty()
    }

    /// Feature vectors for every position.
    pub fn features(&self, template: &FeatureTemplate) -> Result<Vec<FeatureVector>> {
        let forms: Vec<&str> = self.forms.iter().map(String::as_str).collect();
        extract_forms(&forms, template, self.ezafe.as_ref())
    }
}

/// Immutable bijection between retained feature strings and dense indices.
#[derive(Debug, Clone, Default)]
pub struct FeatureIndex {
    keys: Vec<String>,
    lookup: HashMap<String, u32>,
}

impl PartialEq for FeatureIndex {
    fn eq(&self, other: &Self) -> bool {
        self.keys == other.keys
    }
}

impl FeatureIndex {
    /// Builds an index from keys in index order. Duplicates are rejected.
    pub fn from_keys(keys: Vec<String>) -> Result<Self> {
        let mut lookup = HashMap::with_capacity(keys.len());
        for (i, key) in keys.iter().enumerate() {
            if lookup.insert(key.clone(), i as u32).is_some() {
                return Err(Error::InvalidModel(format!("duplicate feature {key:?}")));
            }
        }
        Ok(Self { keys, lookup })
    }

    /// Index of a feature string, if retained.
    pub fn get(&self, key: &str) -> Option<u32> {
        self.lookup.get(key).copied()
    }

    /// Feature string at `index`.
    pub fn key(&self, index: u32) -> &str {
        &self.keys[index as usize]
    }

    /// Feature strings in index order.
    pub fn keys(&self) -> &[String] {
        &self.keys
    }

    /// Number of retained features.
    pub fn len(&self) -> usize {
        self.keys.len()
    }

    /// True when no feature is retained.
    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    /// Maps a feature vector to retained indices, dropping unknown keys.
    pub fn encode(&self, features: &FeatureVector) -> Vec<u32> {
        features.keys.iter().filter_map(|k| self.get(k)).collect()
    }
}

/// Collects every feature string occurring at least `min_count` times,
/// indexed in first-occurrence order.
///
/// `annotations` supplies one [`EzafeAnnotation`] per sentence and must be
/// given exactly when the template takes ezafe input.
pub fn build_feature_index(
    corpus: &Corpus,
    template: &FeatureTemplate,
    annotations: Option<&[EzafeAnnotation]>,
    min_count: usize,
) -> Result<FeatureIndex> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    if let Some(a) = annotations {
        if a.len() != corpus.len() {
            return Err(Error::AnnotationLength { expected: corpus.len(), got: a.len() });
        }
    }
    let observations: Vec<Observation> = corpus
        .sentences()
        .iter()
        .enumerate()
        .map(|(i, s)| Observation {
            forms: s.forms().map(String::from).collect(),
            ezafe: annotations.map(|a| a[i].clone()),
        })
        .collect();
    index_observations(&observations, template, min_count)
}

/// [`build_feature_index`] over already-prepared observations.
pub fn index_observations(
    observations: &[Observation],
    template: &FeatureTemplate,
    min_count: usize,
) -> Result<FeatureIndex> {
    if observations.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut order: Vec<String> = Vec::new();
    let mut counts: HashMap<String, usize> = HashMap::new();
    for obs in observations {
        for fv in obs.features(template)? {
            for key in fv.keys {
                match counts.get_mut(&key) {
                    Some(c) => *c += 1,
                    None => {
                        counts.insert(key.clone(), 1);
                        order.push(key);
                    }
                }
            }
        }
    }
    let keys = order.into_iter().filter(|k| counts[k] >= min_count).collect();
    FeatureIndex::from_keys(keys)
}
