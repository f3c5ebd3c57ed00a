//! Experiment orchestration: ezafe recognition, POS tagging with and
//! without ezafe input, joint (POS, ezafe) tagging, and the two-stage
//! pipeline.
//!
//! Validation-based checkpointing: the validation set is scored every
//! `snapshot_every` iterations and after the last one, and the weights with
//! the best validation F1 are kept (the earliest wins a tie).

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::corpus::{Corpus, Sentence, Token};
use crate::crf::{self, CrfModel, GradientEvaluator, StopReason, TrainConfig, TrainingSet};
use crate::errors::{Error, Result};
use crate::features::{EzafeAnnotation, FeatureTemplate, Observation, TemplateId};
use crate::metrics::{self, ConfusionTable, Metrics, PerPosF1, TagScore};

/// Label of a token without ezafe.
pub const NO_EZAFE_LABEL: &str = "0";
/// Label of a token with ezafe (the positive class).
pub const EZAFE_LABEL: &str = "1";
/// Separator between the POS and ezafe halves of a joint label.
pub const JOINT_SEPARATOR: char = '|';

/// The experiment families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Task {
    /// Binary ezafe recognition.
    Ezafe,
    /// POS tagging from words only.
    Pos,
    /// POS tagging with ezafe flags as input features.
    PosEzInput,
    /// Tagging with the (POS, ezafe) product label space.
    Joint,
}

impl Task {
    /// Command-line spelling.
    pub fn as_str(self) -> &'static str {
        match self {
            Task::Ezafe => "ezafe",
            Task::Pos => "pos",
            Task::PosEzInput => "pos-ez-input",
            Task::Joint => "joint",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "ezafe" => Ok(Task::Ezafe),
            "pos" => Ok(Task::Pos),
            "pos-ez-input" => Ok(Task::PosEzInput),
            "joint" => Ok(Task::Joint),
            _ => Err(Error::InvalidConfig(format!("unknown task {s:?}"))),
        }
    }
}

/// Source of the ezafe flags fed to a POS tagger.
#[derive(Debug, Clone, Copy)]
pub enum EzafeMode<'a> {
    /// No ezafe input.
    None,
    /// Gold flags from the corpus, for training and evaluation.
    Gold,
    /// Flags decoded by an ezafe model, for training and evaluation.
    Predicted(&'a CrfModel),
}

impl EzafeMode<'_> {
    /// `none`, `gold` or `predicted`.
    pub fn name(&self) -> &'static str {
        match self {
            EzafeMode::None => "none",
            EzafeMode::Gold => "gold",
            EzafeMode::Predicted(_) => "predicted",
        }
    }
}

/// What a trained model predicts, read off its labels and template.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    /// Labels `0`/`1`.
    Ezafe,
    /// POS labels.
    Pos,
    /// `POS|flag` labels.
    Joint,
}

impl ModelKind {
    /// Classifies a model.
    pub fn of(model: &CrfModel) -> Self {
        let labels = model.labels();
        if !model.template().ezafe_input
            && labels.len() <= 2
            && labels.iter().all(|l| l == NO_EZAFE_LABEL || l == EZAFE_LABEL)
        {
            ModelKind::Ezafe
        } else if labels.iter().all(|l| split_joint(l).is_some()) {
            ModelKind::Joint
        } else {
            ModelKind::Pos
        }
    }
}

/// Training settings shared by every experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSettings {
    /// Base feature template.
    pub template: TemplateId,
    /// Optimizer settings.
    pub train: TrainConfig,
    /// Validation scoring interval in iterations.
    pub snapshot_every: usize,
    /// Minimum feature frequency.
    pub min_count: usize,
}

impl Default for RunSettings {
    fn default() -> Self {
        Self { template: TemplateId::Crf1, train: TrainConfig::default(), snapshot_every: 10, min_count: 1 }
    }
}

/// One logged training iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogEntry {
    /// Iteration number, 0 for the starting point.
    pub iteration: usize,
    /// Full objective.
    pub objective: f64,
    /// Validation F1 when the iteration was a snapshot point.
    pub valid_f1: Option<f64>,
}

/// Per-iteration training record and the selected checkpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingLog {
    /// Entries in iteration order.
    pub entries: Vec<LogEntry>,
    /// Iteration whose weights were kept.
    pub selected_iteration: usize,
    /// Why the optimizer stopped.
    pub stop: StopReason,
}

impl TrainingLog {
    /// Best logged validation F1 and its iteration (earliest on ties).
    pub fn best_snapshot(&self) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        for e in &self.entries {
            if let Some(f) = e.valid_f1 {
                if best.is_none_or(|(_, b)| f > b) {
                    best = Some((e.iteration, f));
                }
            }
        }
        best
    }
}

/// Whether a report uses positive-class or macro-averaged measures.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ReportKind {
    /// Positive-class measures.
    Binary {
        /// The positive label.
        positive: String,
    },
    /// Macro-averaged measures.
    Macro,
}

/// Evaluation of one model on one corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    /// Binary or macro.
    pub kind: ReportKind,
    /// Headline measures.
    pub metrics: Metrics,
    /// One-vs-rest scores of every observed tag.
    pub per_tag: Vec<TagScore>,
    /// Ezafe F1 per gold POS (ezafe reports only).
    pub ezafe_f1_per_pos: Option<PerPosF1>,
    /// Number of evaluated tokens.
    pub tokens: u64,
}

impl EvalReport {
    /// `(tag, f1)` pairs, the input shape of [`metrics::delta_report`].
    pub fn per_tag_f1(&self) -> Vec<(String, f64)> {
        self.per_tag.iter().map(|s| (s.tag.clone(), s.f1)).collect()
    }

    /// The score used for checkpoint selection.
    pub fn selection_f1(&self) -> f64 {
        self.metrics.f1
    }
}

fn tagset_with(labels: &[String], gold: &[Vec<String>]) -> Vec<String> {
    let mut tags = labels.to_vec();
    for g in gold.iter().flatten() {
        if !tags.contains(g) {
            tags.push(g.clone());
        }
    }
    tags
}

fn ezafe_labels() -> Vec<String> {
    vec![NO_EZAFE_LABEL.into(), EZAFE_LABEL.into()]
}

fn flag_label(flag: u8) -> String {
    if flag == 1 { EZAFE_LABEL } else { NO_EZAFE_LABEL }.into()
}

fn label_flag(label: &str) -> u8 {
    u8::from(label == EZAFE_LABEL)
}

/// `POS|flag` label of a token.
pub fn joint_label(pos: &str, ezafe: u8) -> String {
    format!("{pos}{JOINT_SEPARATOR}{ezafe}")
}

/// Splits a joint label into its POS tag and ezafe flag.
pub fn split_joint(label: &str) -> Option<(&str, u8)> {
    let (pos, flag) = label.rsplit_once(JOINT_SEPARATOR)?;
    match flag {
        "0" if !pos.is_empty() => Some((pos, 0)),
        "1" if !pos.is_empty() => Some((pos, 1)),
        _ => None,
    }
}

fn gold_ezafe_labels(corpus: &Corpus) -> Vec<Vec<String>> {
    corpus
        .sentences()
        .iter()
        .map(|s| s.tokens().iter().map(|t| flag_label(t.ezafe_flag())).collect())
        .collect()
}

fn gold_pos_labels(corpus: &Corpus) -> Vec<Vec<String>> {
    corpus.sentences().iter().map(Sentence::pos_tags).collect()
}

fn gold_joint_labels(corpus: &Corpus) -> Vec<Vec<String>> {
    corpus
        .sentences()
        .iter()
        .map(|s| s.tokens().iter().map(|t| joint_label(t.pos(), t.ezafe_flag())).collect())
        .collect()
}

fn plain_observations(corpus: &Corpus) -> Vec<Observation> {
    corpus.sentences().iter().map(|s| Observation::from_sentence(s, false)).collect()
}

fn check_ezafe_model(model: &CrfModel) -> Result<()> {
    if ModelKind::of(model) != ModelKind::Ezafe {
        return Err(Error::IncompatibleModels(format!(
            "expected an ezafe model, got labels {:?} with template {}",
            model.labels(),
            model.template()
        )));
    }
    Ok(())
}

/// Decodes ezafe flags for every sentence with an ezafe model.
pub fn annotate_ezafe(model: &CrfModel, observations: &[Observation]) -> Result<Vec<EzafeAnnotation>> {
    check_ezafe_model(model)?;
    observations
        .iter()
        .map(|obs| {
            let plain = Observation { forms: obs.forms.clone(), ezafe: None };
            let tags = model.tag(&plain)?;
            EzafeAnnotation::new(tags.into_iter().map(label_flag).collect())
        })
        .collect()
}

/// Observations for a POS tagger under an ezafe mode.
pub fn pos_observations(corpus: &Corpus, mode: EzafeMode<'_>) -> Result<Vec<Observation>> {
    match mode {
        EzafeMode::None => Ok(plain_observations(corpus)),
        EzafeMode::Gold => Ok(corpus.sentences().iter().map(|s| Observation::from_sentence(s, true)).collect()),
        EzafeMode::Predicted(model) => {
            let mut obs = plain_observations(corpus);
            let flags = annotate_ezafe(model, &obs)?;
            for (o, f) in obs.iter_mut().zip(flags) {
                o.ezafe = Some(f);
            }
            Ok(obs)
        }
    }
}

/// Decodes every observation into label strings.
pub fn decode_all(model: &CrfModel, observations: &[Observation]) -> Result<Vec<Vec<String>>> {
    observations
        .iter()
        .map(|o| Ok(model.tag(o)?.into_iter().map(String::from).collect()))
        .collect()
}

fn binary_report(gold: &[Vec<String>], pred: &[Vec<String>], gold_pos: &[Vec<String>]) -> Result<EvalReport> {
    let table = metrics::confusion(gold, pred, &ezafe_labels())?;
    let m = metrics::binary_metrics(&table, EZAFE_LABEL)?;
    let to_flags = |v: &[Vec<String>]| -> Vec<Vec<u8>> {
        v.iter().map(|s| s.iter().map(|l| label_flag(l)).collect()).collect()
    };
    let per_pos = metrics::ezafe_f1_per_pos(&to_flags(gold), &to_flags(pred), gold_pos)?;
    Ok(EvalReport {
        kind: ReportKind::Binary { positive: EZAFE_LABEL.into() },
        metrics: m,
        per_tag: metrics::per_tag(&table),
        ezafe_f1_per_pos: Some(per_pos),
        tokens: table.total(),
    })
}

fn macro_report(table: &ConfusionTable) -> EvalReport {
    EvalReport {
        kind: ReportKind::Macro,
        metrics: metrics::macro_metrics(table),
        per_tag: metrics::per_tag(table),
        ezafe_f1_per_pos: None,
        tokens: table.total(),
    }
}

/// Ezafe-recognition report of `model` on `corpus`.
pub fn evaluate_ezafe(model: &CrfModel, corpus: &Corpus) -> Result<EvalReport> {
    check_ezafe_model(model)?;
    let pred = decode_all(model, &plain_observations(corpus))?;
    binary_report(&gold_ezafe_labels(corpus), &pred, &gold_pos_labels(corpus))
}

/// POS report of `model` on `corpus` with ezafe input from `mode`.
pub fn evaluate_pos(model: &CrfModel, corpus: &Corpus, mode: EzafeMode<'_>) -> Result<EvalReport> {
    if model.template().ezafe_input == matches!(mode, EzafeMode::None) {
        return Err(Error::IncompatibleModels(format!(
            "template {} does not match ezafe mode {}",
            model.template(),
            mode.name()
        )));
    }
    let pred = decode_all(model, &pos_observations(corpus, mode)?)?;
    let gold = gold_pos_labels(corpus);
    let table = metrics::confusion(&gold, &pred, &tagset_with(model.labels(), &gold))?;
    Ok(macro_report(&table))
}

/// Projects joint label sequences onto POS and ezafe sequences.
pub fn project_joint(labels: &[Vec<String>]) -> Result<(Vec<Vec<String>>, Vec<Vec<String>>)> {
    let mut pos = Vec::with_capacity(labels.len());
    let mut ez = Vec::with_capacity(labels.len());
    for seq in labels {
        let mut p = Vec::with_capacity(seq.len());
        let mut e = Vec::with_capacity(seq.len());
        for l in seq {
            let (tag, flag) = split_joint(l).ok_or_else(|| Error::UnknownLabel(l.clone()))?;
            p.push(tag.to_string());
            e.push(flag_label(flag));
        }
        pos.push(p);
        ez.push(e);
    }
    Ok((pos, ez))
}

/// POS and ezafe reports of a joint model.
pub fn evaluate_joint(model: &CrfModel, corpus: &Corpus) -> Result<(EvalReport, EvalReport)> {
    let pred = decode_all(model, &plain_observations(corpus))?;
    let (pred_pos, pred_ez) = project_joint(&pred)?;
    let gold_pos = gold_pos_labels(corpus);
    let model_pos: Vec<String> = model
        .labels()
        .iter()
        .filter_map(|l| split_joint(l).map(|(p, _)| p.to_string()))
        .fold(Vec::new(), |mut acc, p| {
            if !acc.contains(&p) {
                acc.push(p);
            }
            acc
        });
    let table = metrics::confusion(&gold_pos, &pred_pos, &tagset_with(&model_pos, &gold_pos))?;
    let pos_report = macro_report(&table);
    let ez_report = binary_report(&gold_ezafe_labels(corpus), &pred_ez, &gold_pos)?;
    Ok((pos_report, ez_report))
}

/// Trains with checkpoint selection on an optional validation scorer.
fn fit<V>(
    set: &TrainingSet,
    settings: &RunSettings,
    evaluator: &mut dyn GradientEvaluator,
    mut validate: Option<V>,
) -> Result<(CrfModel, TrainingLog)>
where
    V: FnMut(&CrfModel) -> Result<f64>,
{
    if settings.snapshot_every == 0 {
        return Err(Error::InvalidConfig("snapshot interval must be positive".into()));
    }
    let mut entries = Vec::new();
    let mut best: Option<(usize, f64, Vec<f64>)> = None;
    let mut failure: Option<Error> = None;
    let mut last_scored = None;
    let mut last_iteration = 0;
    let trained = crf::train_with(set, &settings.train, evaluator, |cp| {
        last_iteration = cp.iteration;
        let mut valid_f1 = None;
        if let Some(v) = validate.as_mut() {
            if cp.iteration % settings.snapshot_every == 0 && failure.is_none() {
                match set.model(cp.params).and_then(|m| v(&m)) {
                    Ok(f) => {
                        valid_f1 = Some(f);
                        last_scored = Some(cp.iteration);
                        if best.as_ref().is_none_or(|(_, b, _)| f > *b) {
                            best = Some((cp.iteration, f, cp.params.to_vec()));
                        }
                    }
                    Err(e) => failure = Some(e),
                }
            }
        }
        entries.push(LogEntry { iteration: cp.iteration, objective: cp.objective, valid_f1 });
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    entries.insert(0, LogEntry { iteration: 0, objective: trained.history[0], valid_f1: None });

    let Some(v) = validate.as_mut() else {
        let log = TrainingLog { entries, selected_iteration: last_iteration, stop: trained.reason };
        return Ok((trained.model, log));
    };
    if last_scored != Some(last_iteration) {
        let f = v(&trained.model)?;
        if let Some(e) = entries.iter_mut().find(|e| e.iteration == last_iteration) {
            e.valid_f1 = Some(f);
        }
        if best.as_ref().is_none_or(|(_, b, _)| f > *b) {
            best = Some((last_iteration, f, trained.model.params()));
        }
    }
    let (iteration, _, params) = best.expect("at least one snapshot is scored");
    let model = if iteration == last_iteration { trained.model } else { set.model(&params)? };
    Ok((model, TrainingLog { entries, selected_iteration: iteration, stop: trained.reason }))
}

/// Output of an ezafe or POS experiment.
#[derive(Debug, Clone)]
pub struct RunResult {
    /// Selected model.
    pub model: CrfModel,
    /// Training record.
    pub log: TrainingLog,
    /// Report on the validation corpus.
    pub valid: EvalReport,
    /// Report on the test corpus.
    pub test: EvalReport,
}

/// Output of a joint experiment.
#[derive(Debug, Clone)]
pub struct JointResult {
    /// Selected model.
    pub model: CrfModel,
    /// Training record.
    pub log: TrainingLog,
    /// POS and ezafe reports on the validation corpus.
    pub valid: (EvalReport, EvalReport),
    /// POS and ezafe reports on the test corpus.
    pub test: (EvalReport, EvalReport),
}

fn require_train(train: &Corpus) -> Result<()> {
    if train.is_empty() {
        Err(Error::EmptyCorpus)
    } else {
        Ok(())
    }
}

/// Trains an ezafe model (labels `0`/`1`) with validation checkpointing.
pub fn train_ezafe(
    train: &Corpus,
    valid: Option<&Corpus>,
    settings: &RunSettings,
    evaluator: &mut dyn GradientEvaluator,
) -> Result<(CrfModel, TrainingLog)> {
    require_train(train)?;
    let template = FeatureTemplate::new(settings.template);
    let set = TrainingSet::build(
        &plain_observations(train),
        &gold_ezafe_labels(train),
        ezafe_labels(),
        template,
        settings.min_count,
    )?;
    let validate = valid.map(|v| move |m: &CrfModel| Ok(evaluate_ezafe(m, v)?.selection_f1()));
    fit(&set, settings, evaluator, validate)
}

/// Ezafe recognition experiment.
pub fn run_ezafe(
    train: &Corpus,
    valid: &Corpus,
    test: &Corpus,
    settings: &RunSettings,
    evaluator: &mut dyn GradientEvaluator,
) -> Result<RunResult> {
    let (model, log) = train_ezafe(train, Some(valid), settings, evaluator)?;
    Ok(RunResult {
        valid: evaluate_ezafe(&model, valid)?,
        test: evaluate_ezafe(&model, test)?,
        model,
        log,
    })
}

/// Trains a POS model; the template takes ezafe input unless `mode` is
/// [`EzafeMode::None`].
pub fn train_pos(
    train: &Corpus,
    valid: Option<&Corpus>,
    mode: EzafeMode<'_>,
    settings: &RunSettings,
    evaluator: &mut dyn GradientEvaluator,
) -> Result<(CrfModel, TrainingLog)> {
    require_train(train)?;
    let template = match mode {
        EzafeMode::None => FeatureTemplate::new(settings.template),
        _ => FeatureTemplate::with_ezafe_input(settings.template),
    };
    let set = TrainingSet::build(
        &pos_observations(train, mode)?,
        &gold_pos_labels(train),
        train.tag_inventory().to_vec(),
        template,
        settings.min_count,
    )?;
    let validate = match valid {
        Some(v) => {
            let obs = pos_observations(v, mode)?;
            let gold = gold_pos_labels(v);
            Some(move |m: &CrfModel| {
                let pred = decode_all(m, &obs)?;
                let table = metrics::confusion(&gold, &pred, &tagset_with(m.labels(), &gold))?;
                Ok(metrics::macro_metrics(&table).f1)
            })
        }
        None => None,
    };
    fit(&set, settings, evaluator, validate)
}

/// POS tagging experiment.
pub fn run_pos(
    train: &Corpus,
    valid: &Corpus,
    test: &Corpus,
    mode: EzafeMode<'_>,
    settings: &RunSettings,
    evaluator: &mut dyn GradientEvaluator,
) -> Result<RunResult> {
    let (model, log) = train_pos(train, Some(valid), mode, settings, evaluator)?;
    Ok(RunResult {
        valid: evaluate_pos(&model, valid, mode)?,
        test: evaluate_pos(&model, test, mode)?,
        model,
        log,
    })
}

/// Labels of a joint model: observed (POS, ezafe) pairs in first-occurrence
/// order.
pub fn joint_label_space(train: &Corpus) -> Vec<String> {
    let mut labels: Vec<String> = Vec::new();
    for t in train.sentences().iter().flat_map(|s| s.tokens()) {
        let l = joint_label(t.pos(), t.ezafe_flag());
        if !labels.contains(&l) {
            labels.push(l);
        }
    }
    labels
}

/// Trains a joint model; checkpoints are selected by POS macro F1.
pub fn train_joint(
    train: &Corpus,
    valid: Option<&Corpus>,
    settings: &RunSettings,
    evaluator: &mut dyn GradientEvaluator,
) -> Result<(CrfModel, TrainingLog)> {
    require_train(train)?;
    if let Some(bad) = train.tag_inventory().iter().find(|t| t.contains(JOINT_SEPARATOR)) {
        return Err(Error::InvalidTag(format!("{bad} (contains the joint separator)")));
    }
    let set = TrainingSet::build(
        &plain_observations(train),
        &gold_joint_labels(train),
        joint_label_space(train),
        FeatureTemplate::new(settings.template),
        settings.min_count,
    )?;
    let validate = valid.map(|v| move |m: &CrfModel| Ok(evaluate_joint(m, v)?.0.selection_f1()));
    fit(&set, settings, evaluator, validate)
}

/// Joint tagging experiment.
pub fn run_joint(
    train: &Corpus,
    valid: &Corpus,
    test: &Corpus,
    settings: &RunSettings,
    evaluator: &mut dyn GradientEvaluator,
) -> Result<JointResult> {
    let (model, log) = train_joint(train, Some(valid), settings, evaluator)?;
    Ok(JointResult {
        valid: evaluate_joint(&model, valid)?,
        test: evaluate_joint(&model, test)?,
        model,
        log,
    })
}

/// Tags raw sentences in two stages: ezafe flags first, then POS with those
/// flags as input. Returns a corpus of predicted annotations.
pub fn pipeline_tag<S: AsRef<str>>(
    sentences: &[Vec<S>],
    ezafe_model: &CrfModel,
    pos_model: &CrfModel,
) -> Result<Corpus> {
    check_ezafe_model(ezafe_model)?;
    if !pos_model.template().ezafe_input || ModelKind::of(pos_model) != ModelKind::Pos {
        return Err(Error::IncompatibleModels(format!(
            "POS model template {} does not take ezafe input",
            pos_model.template()
        )));
    }
    let mut observations: Vec<Observation> = sentences
        .iter()
        .map(|s| Observation::new(s.iter().map(|w| w.as_ref().to_string()).collect()))
        .collect();
    let flags = annotate_ezafe(ezafe_model, &observations)?;
    for (o, f) in observations.iter_mut().zip(flags) {
        o.ezafe = Some(f);
    }
    observations
        .iter()
        .map(|obs| {
            let tags = pos_model.tag(obs)?;
            let flags = obs.ezafe.as_ref().expect("annotated above").flags();
            let tokens = obs
                .forms
                .iter()
                .zip(tags)
                .zip(flags)
                .map(|((form, pos), &ez)| Token::new(form.as_str(), pos, ez == 1))
                .collect::<Result<Vec<_>>>()?;
            Sentence::new(tokens)
        })
        .collect::<Result<Vec<_>>>()
        .map(Corpus::new)
}
