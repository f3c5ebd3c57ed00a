//! Command-line interface: argument definitions and subcommand bodies.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pertcrf_core::corpus::{self, DEFAULT_MAX_LEN, DEFAULT_SEED};
use pertcrf_core::crf::{GradientEvaluator, SequentialEvaluator};
use pertcrf_core::datagen::{self, HmmSpec, LengthDist};
use pertcrf_core::metrics;
use pertcrf_core::tasks::{self, EvalReport, EzafeMode, ModelKind, RunSettings, Task, TrainingLog};
use pertcrf_core::{Corpus, CrfModel, Fraction, Sentence, SplitSpec, TemplateId, Token, TrainConfig};

use crate::error::{CliError, CliResult};
use crate::format::config::{parse_config, EzafeSource, ExperimentConfig};
use crate::format::corpus::{parse_corpus, write_corpus};
use crate::format::hmm::{parse_hmm, write_hmm};
use crate::format::model::{load_model, save_model};
use crate::fsio::{read_text, write_all_atomic, write_atomic};
use crate::parallel::ParallelEvaluator;
use crate::report::{render_log, render_stats, Report, Section};

/// CRF ezafe recognition and POS tagging.
#[derive(Debug, Parser)]
#[command(name = "pertcrf", version, about)]
pub struct Cli {
    /// Worker threads for gradient accumulation (1 = sequential and
    /// bit-reproducible).
    #[arg(long, global = true, default_value_t = 1)]
    pub threads: usize,
    /// Subcommand.
    #[command(subcommand)]
    pub command: Command,
}

/// Subcommands.
#[derive(Debug, Subcommand)]
pub enum Command {
    /// Shuffle a corpus and write test, validation and train parts.
    Split(SplitArgs),
    /// Per-tag ezafe rate, frequency and lexical diversity.
    Stats(StatsArgs),
    /// Generate a synthetic corpus from an HMM specification.
    Synth(SynthArgs),
    /// Train a model.
    Train(TrainArgs),
    /// Tag raw text (one sentence per line, tokens separated by spaces).
    Tag(TagArgs),
    /// Evaluate a model on an annotated corpus.
    Eval(EvalArgs),
    /// Run an experiment described by a configuration file.
    Experiment(ExperimentArgs),
}

/// Arguments of `split`.
#[derive(Debug, Args)]
pub struct SplitArgs {
    /// Input corpus.
    pub input: PathBuf,
    /// Directory receiving train.tsv, valid.tsv and test.tsv.
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Shuffle seed.
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Test fraction (decimal).
    #[arg(long, default_value = "0.1")]
    pub test: String,
    /// Validation fraction (decimal).
    #[arg(long, default_value = "0.1")]
    pub valid: String,
    /// Drop sentences longer than this from every part after splitting.
    #[arg(long, default_value_t = DEFAULT_MAX_LEN)]
    pub max_len: usize,
}

/// Arguments of `stats`.
#[derive(Debug, Args)]
pub struct StatsArgs {
    /// Input corpus.
    pub input: PathBuf,
    /// Output TSV (standard output when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Built-in generator specifications.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    /// Four tags, 200 words, about 22% ezafe.
    Tagging,
    /// Two tags with identical emissions that differ only in ezafe.
    Homograph,
}

/// Arguments of `synth`.
#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Built-in specification.
    #[arg(long, conflicts_with = "spec", required_unless_present = "spec")]
    pub preset: Option<Preset>,
    /// Specification file.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Number of sentences.
    #[arg(long, default_value_t = 1000)]
    pub sentences: usize,
    /// Generator seed.
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Shortest sentence.
    #[arg(long, default_value_t = 3)]
    pub min_len: usize,
    /// Longest sentence.
    #[arg(long, default_value_t = 40)]
    pub max_len: usize,
    /// Geometric length parameter.
    #[arg(long, default_value_t = 0.1)]
    pub length_p: f64,
    /// Output corpus.
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the specification used.
    #[arg(long)]
    pub write_spec: Option<PathBuf>,
}

/// Task selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TaskArg {
    /// Ezafe recognition.
    Ezafe,
    /// POS tagging.
    Pos,
    /// POS tagging with ezafe flags as input.
    PosEzInput,
    /// Joint POS and ezafe labels.
    Joint,
}

impl From<TaskArg> for Task {
    fn from(t: TaskArg) -> Self {
        match t {
            TaskArg::Ezafe => Task::Ezafe,
            TaskArg::Pos => Task::Pos,
            TaskArg::PosEzInput => Task::PosEzInput,
            TaskArg::Joint => Task::Joint,
        }
    }
}

/// Feature template selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TemplateArg {
    /// Word window.
    Crf1,
    /// Word window plus affixes and boundary flags.
    Crf2,
}

impl From<TemplateArg> for TemplateId {
    fn from(t: TemplateArg) -> Self {
        match t {
            TemplateArg::Crf1 => TemplateId::Crf1,
            TemplateArg::Crf2 => TemplateId::Crf2,
        }
    }
}

/// Ezafe input source selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EzafeModeArg {
    /// Decode flags with `--ezafe-model`.
    Predicted,
    /// Use the corpus flags.
    Gold,
}

impl From<EzafeModeArg> for EzafeSource {
    fn from(m: EzafeModeArg) -> Self {
        match m {
            EzafeModeArg::Predicted => EzafeSource::Predicted,
            EzafeModeArg::Gold => EzafeSource::Gold,
        }
    }
}

/// Arguments of `train`.
#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Training corpus.
    #[arg(long)]
    pub train: PathBuf,
    /// Validation corpus for checkpoint selection.
    #[arg(long)]
    pub valid: Option<PathBuf>,
    /// What to learn.
    #[arg(long, value_enum)]
    pub task: TaskArg,
    /// Feature template.
    #[arg(long, value_enum, default_value = "crf1")]
    pub template: TemplateArg,
    /// L1 coefficient.
    #[arg(long, default_value_t = 0.1)]
    pub l1: f64,
    /// L2 coefficient.
    #[arg(long, default_value_t = 0.1)]
    pub l2: f64,
    /// Iteration cap.
    #[arg(long, default_value_t = 100)]
    pub max_iter: usize,
    /// Ezafe model providing input flags (pos-ez-input).
    #[arg(long)]
    pub ezafe_model: Option<PathBuf>,
    /// Source of ezafe input flags (pos-ez-input).
    #[arg(long, value_enum, default_value = "predicted")]
    pub ezafe_mode: EzafeModeArg,
    /// Validation interval in iterations.
    #[arg(long, default_value_t = 10)]
    pub snapshot_every: usize,
    /// Drop features seen fewer times than this.
    #[arg(long, default_value_t = 1)]
    pub min_count: usize,
    /// Output model file.
    #[arg(long)]
    pub out: PathBuf,
    /// Training log (default: model path plus `.log`).
    #[arg(long)]
    pub log: Option<PathBuf>,
}

/// Arguments of `tag`.
#[derive(Debug, Args)]
pub struct TagArgs {
    /// Model to apply.
    #[arg(long)]
    pub model: PathBuf,
    /// Ezafe model: input flags for a pos-ez-input model, or the ezafe
    /// column next to a plain POS model.
    #[arg(long)]
    pub ezafe_model: Option<PathBuf>,
    /// Raw text.
    pub input: PathBuf,
    /// Output corpus (standard output when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Arguments of `eval`.
#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Model to evaluate.
    #[arg(long)]
    pub model: PathBuf,
    /// Annotated corpus.
    #[arg(long)]
    pub corpus: PathBuf,
    /// Ezafe model providing input flags for a pos-ez-input model.
    #[arg(long)]
    pub ezafe_model: Option<PathBuf>,
    /// Source of ezafe input flags for a pos-ez-input model.
    #[arg(long, value_enum, default_value = "predicted")]
    pub ezafe_mode: EzafeModeArg,
    /// POS model to compare against: adds per-tag F1 deltas.
    #[arg(long)]
    pub baseline: Option<PathBuf>,
    /// Report path prefix; writes `<prefix>.txt` and `<prefix>.json`.
    #[arg(long)]
    pub report: PathBuf,
}

/// Arguments of `experiment`.
#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// Configuration file.
    #[arg(long)]
    pub config: PathBuf,
}

fn load_corpus(path: &Path) -> CliResult<Corpus> {
    parse_corpus(&read_text(path)?).map_err(|e| CliError::format(path, e))
}

fn load_model_file(path: &Path) -> CliResult<CrfModel> {
    load_model(&read_text(path)?).map_err(|e| CliError::format(path, e))
}

fn evaluator(threads: usize) -> CliResult<Box<dyn GradientEvaluator>> {
    match threads {
        0 => Err(CliError::Usage("--threads must be at least 1".into())),
        1 => Ok(Box::new(SequentialEvaluator)),
        n => Ok(Box::new(ParallelEvaluator::new(n).map_err(|e| CliError::Usage(e.to_string()))?)),
    }
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

/// Runs a parsed command line; returns what should go to standard output.
pub fn run(cli: Cli) -> CliResult<String> {
    match cli.command {
        Command::Split(a) => cmd_split(&a),
        Command::Stats(a) => cmd_stats(&a),
        Command::Synth(a) => cmd_synth(&a),
        Command::Train(a) => cmd_train(&a, cli.threads),
        Command::Tag(a) => cmd_tag(&a),
        Command::Eval(a) => cmd_eval(&a),
        Command::Experiment(a) => cmd_experiment(&a, cli.threads),
    }
}

fn split_spec(seed: u64, test: &str, valid: &str) -> CliResult<SplitSpec> {
    let parse = |flag: &str, v: &str| {
        Fraction::parse_decimal(v).map_err(|e| CliError::Usage(format!("--{flag} {v}: {e}")))
    };
    SplitSpec::new(seed, parse("test", test)?, parse("valid", valid)?).map_err(|e| CliError::Usage(e.to_string()))
}

fn split_filtered(corpus: &Corpus, spec: &SplitSpec, max_len: usize) -> CliResult<corpus::Split> {
    let split = corpus::shuffle_split(corpus, spec).map_err(CliError::Data)?;
    Ok(corpus::Split {
        train: corpus::filter_long(&split.train, max_len),
        valid: corpus::filter_long(&split.valid, max_len),
        test: corpus::filter_long(&split.test, max_len),
    })
}

fn cmd_split(a: &SplitArgs) -> CliResult<String> {
    if a.max_len == 0 {
        return Err(CliError::Usage("--max-len must be positive".into()));
    }
    let spec = split_spec(a.seed, &a.test, &a.valid)?;
    let corpus = load_corpus(&a.input)?;
    let split = split_filtered(&corpus, &spec, a.max_len)?;
    let parts = [("test", &split.test), ("valid", &split.valid), ("train", &split.train)];
    let files: Vec<(PathBuf, String)> =
        parts.iter().map(|(name, c)| (a.out_dir.join(format!("{name}.tsv")), write_corpus(c))).collect();
    write_all_atomic(&files)?;
    let mut out = String::from("part\tsentences\ttokens\n");
    for (name, c) in parts {
        out.push_str(&format!("{name}\t{}\t{}\n", c.len(), c.token_count()));
    }
    let kept: usize = parts.iter().map(|(_, c)| c.len()).sum();
    out.push_str(&format!(
        "total\t{}\t{}\n# {} sentences longer than {} tokens dropped after splitting\n",
        kept,
        parts.iter().map(|(_, c)| c.token_count()).sum::<usize>(),
        corpus.len() - kept,
        a.max_len
    ));
    Ok(out)
}

fn cmd_stats(a: &StatsArgs) -> CliResult<String> {
    let corpus = load_corpus(&a.input)?;
    let table = render_stats(&corpus::corpus_stats(&corpus)?);
    match &a.out {
        Some(path) => {
            write_atomic(path, &table)?;
            Ok(String::new())
        }
        None => Ok(table),
    }
}

fn cmd_synth(a: &SynthArgs) -> CliResult<String> {
    let spec: HmmSpec = match (&a.preset, &a.spec) {
        (Some(Preset::Tagging), _) => datagen::tagging_benchmark(),
        (Some(Preset::Homograph), _) => datagen::homograph(),
        (None, Some(path)) => parse_hmm(&read_text(path)?).map_err(|e| CliError::format(path, e))?,
        (None, None) => return Err(CliError::Usage("give --preset or --spec".into())),
    };
    let lengths = LengthDist::Geometric { p: a.length_p, min: a.min_len, max: a.max_len };
    lengths.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let corpus = datagen::generate(&spec, a.sentences, &lengths, a.seed)?;
    let mut files = vec![(a.out.clone(), write_corpus(&corpus))];
    if let Some(path) = &a.write_spec {
        files.push((path.clone(), write_hmm(&spec)));
    }
    write_all_atomic(&files)?;
    let ezafe = corpus.sentences().iter().flat_map(Sentence::tokens).filter(|t| t.ezafe()).count();
    Ok(format!(
        "{} sentences, {} tokens, ezafe rate {} (expected {})\n",
        corpus.len(),
        corpus.token_count(),
        crate::report::fmt4(ezafe as f64 / corpus.token_count().max(1) as f64),
        crate::report::fmt4(spec.expected_ezafe_rate(&lengths))
    ))
}

/// Trains one model for `task`, returning it with its log.
fn train_task(
    task: Task,
    source: EzafeSource,
    ezafe_model: Option<&CrfModel>,
    train: &Corpus,
    valid: Option<&Corpus>,
    settings: &RunSettings,
    evaluator: &mut dyn GradientEvaluator,
) -> CliResult<(CrfModel, TrainingLog)> {
    let result = match task {
        Task::Ezafe => tasks::train_ezafe(train, valid, settings, evaluator),
        Task::Pos => tasks::train_pos(train, valid, EzafeMode::None, settings, evaluator),
        Task::PosEzInput => {
            let mode = ezafe_mode(source, ezafe_model)?;
            tasks::train_pos(train, valid, mode, settings, evaluator)
        }
        Task::Joint => tasks::train_joint(train, valid, settings, evaluator),
    };
    result.map_err(CliError::from_training)
}

fn ezafe_mode(source: EzafeSource, model: Option<&CrfModel>) -> CliResult<EzafeMode<'_>> {
    match (source, model) {
        (EzafeSource::Gold, _) => Ok(EzafeMode::Gold),
        (EzafeSource::Predicted, Some(m)) => Ok(EzafeMode::Predicted(m)),
        (EzafeSource::Predicted, None) => {
            Err(CliError::Usage("predicted ezafe input needs --ezafe-model (or use --ezafe-mode gold)".into()))
        }
    }
}

fn cmd_train(a: &TrainArgs, threads: usize) -> CliResult<String> {
    let task = Task::from(a.task);
    let source = EzafeSource::from(a.ezafe_mode);
    if task == Task::PosEzInput && source == EzafeSource::Predicted && a.ezafe_model.is_none() {
        return Err(CliError::Usage("--task pos-ez-input requires --ezafe-model".into()));
    }
    let settings = RunSettings {
        template: a.template.into(),
        train: TrainConfig { l1: a.l1, l2: a.l2, max_iterations: a.max_iter, ..TrainConfig::default() },
        snapshot_every: a.snapshot_every,
        min_count: a.min_count.max(1),
    };
    settings.train.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    if settings.snapshot_every == 0 {
        return Err(CliError::Usage("--snapshot-every must be positive".into()));
    }
    let mut ev = evaluator(threads)?;
    let ez_model = a.ezafe_model.as_deref().map(load_model_file).transpose()?;
    let train = load_corpus(&a.train)?;
    let valid = a.valid.as_deref().map(load_corpus).transpose()?;
    let started = Instant::now();
    let (model, log) =
        train_task(task, source, ez_model.as_ref(), &train, valid.as_ref(), &settings, ev.as_mut())?;
    let log_path = a.log.clone().unwrap_or_else(|| with_suffix(&a.out, ".log"));
    write_all_atomic(&[(a.out.clone(), save_model(&model)), (log_path, render_log(&log))])?;
    Ok(format!(
        "{task} model: {} labels, {} features, {} iterations, kept iteration {}, stop {:?}, {:.1}s\n",
        model.labels().len(),
        model.feature_index().len(),
        log.entries.last().map_or(0, |e| e.iteration),
        log.selected_iteration,
        log.stop,
        started.elapsed().as_secs_f64()
    ))
}

fn read_raw_sentences(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .map(|l| l.split_whitespace().map(String::from).collect::<Vec<_>>())
        .filter(|s| !s.is_empty())
        .collect()
}

fn tag_with(model: &CrfModel, forms: &[String]) -> CliResult<Vec<String>> {
    let obs = pertcrf_core::features::Observation::new(forms.to_vec());
    Ok(model.tag(&obs)?.into_iter().map(String::from).collect())
}

/// Placeholder written in the POS column by ezafe-only tagging.
const NO_POS: &str = "_";

fn cmd_tag(a: &TagArgs) -> CliResult<String> {
    let model = load_model_file(&a.model)?;
    let ez_model = a.ezafe_model.as_deref().map(load_model_file).transpose()?;
    let sentences = read_raw_sentences(&read_text(&a.input)?);
    let kind = ModelKind::of(&model);
    let corpus = if kind == ModelKind::Pos && model.template().ezafe_input {
        let ez = ez_model.as_ref().ok_or_else(|| {
            CliError::Usage("this POS model takes ezafe input; give --ezafe-model".into())
        })?;
        tasks::pipeline_tag(&sentences, ez, &model)?
    } else {
        let mut out = Vec::with_capacity(sentences.len());
        for forms in &sentences {
            let (pos, flags): (Vec<String>, Vec<u8>) = match kind {
                ModelKind::Ezafe => {
                    let flags = tag_with(&model, forms)?.iter().map(|l| u8::from(l == tasks::EZAFE_LABEL)).collect();
                    (vec![NO_POS.to_string(); forms.len()], flags)
                }
                ModelKind::Joint => {
                    let labels = tag_with(&model, forms)?;
                    let (pos, ez) = tasks::project_joint(&[labels])?;
                    let flags = ez[0].iter().map(|l| u8::from(l == tasks::EZAFE_LABEL)).collect();
                    (pos.into_iter().next().unwrap_or_default(), flags)
                }
                ModelKind::Pos => {
                    let flags = match &ez_model {
                        Some(ez) => tag_with(ez, forms)?.iter().map(|l| u8::from(l == tasks::EZAFE_LABEL)).collect(),
                        None => vec![0; forms.len()],
                    };
                    (tag_with(&model, forms)?, flags)
                }
            };
            let tokens = forms
                .iter()
                .zip(pos)
                .zip(flags)
                .map(|((f, p), e)| Token::new(f.as_str(), p, e == 1))
                .collect::<pertcrf_core::Result<Vec<_>>>()?;
            out.push(Sentence::new(tokens)?);
        }
        Corpus::new(out)
    };
    let text = write_corpus(&corpus);
    match &a.out {
        Some(path) => {
            write_atomic(path, &text)?;
            Ok(String::new())
        }
        None => Ok(text),
    }
}

/// Evaluates any model kind; joint models yield a POS and an ezafe section.
fn evaluate_model(
    model: &CrfModel,
    corpus: &Corpus,
    source: EzafeSource,
    ez_model: Option<&CrfModel>,
    name: &str,
) -> CliResult<Vec<Section>> {
    let section = |suffix: &str, report: EvalReport| Section {
        name: if suffix.is_empty() { name.to_string() } else { format!("{name}/{suffix}") },
        report,
    };
    Ok(match ModelKind::of(model) {
        ModelKind::Ezafe => vec![section("", tasks::evaluate_ezafe(model, corpus)?)],
        ModelKind::Pos => {
            let mode = if model.template().ezafe_input { ezafe_mode(source, ez_model)? } else { EzafeMode::None };
            vec![section("", tasks::evaluate_pos(model, corpus, mode)?)]
        }
        ModelKind::Joint => {
            let (pos, ez) = tasks::evaluate_joint(model, corpus)?;
            vec![section("pos", pos), section("ezafe", ez)]
        }
    })
}

fn pos_section(sections: &[Section]) -> Option<&Section> {
    sections.iter().find(|s| matches!(s.report.kind, tasks::ReportKind::Macro))
}

fn cmd_eval(a: &EvalArgs) -> CliResult<String> {
    let model = load_model_file(&a.model)?;
    let ez_model = a.ezafe_model.as_deref().map(load_model_file).transpose()?;
    let corpus = load_corpus(&a.corpus)?;
    let source = EzafeSource::from(a.ezafe_mode);
    let sections = evaluate_model(&model, &corpus, source, ez_model.as_ref(), "eval")?;
    let kind = ModelKind::of(&model);
    let mut header = vec![
        ("model".to_string(), a.model.display().to_string()),
        ("corpus".to_string(), a.corpus.display().to_string()),
        ("model_kind".to_string(), format!("{kind:?}").to_lowercase()),
        ("template".to_string(), model.template().file_id()),
    ];
    if model.template().ezafe_input {
        header.push(("ezafe_mode".into(), source.as_str().into()));
        if let Some(p) = &a.ezafe_model {
            header.push(("ezafe_model".into(), p.display().to_string()));
        }
    }
    let delta = match &a.baseline {
        Some(path) => {
            let base = load_model_file(path)?;
            let base_sections = evaluate_model(&base, &corpus, source, ez_model.as_ref(), "baseline")?;
            let (Some(before), Some(after)) = (pos_section(&base_sections), pos_section(&sections)) else {
                return Err(CliError::Usage("--baseline compares POS models only".into()));
            };
            header.push(("baseline".into(), path.display().to_string()));
            Some(metrics::delta_report(&before.report.per_tag_f1(), &after.report.per_tag_f1())?)
        }
        None => None,
    };
    let report = Report { header, sections, delta };
    let text = report.to_text();
    write_all_atomic(&[(with_suffix(&a.report, ".txt"), text.clone()), (with_suffix(&a.report, ".json"), report.to_json())])?;
    Ok(text)
}

fn cmd_experiment(a: &ExperimentArgs, threads: usize) -> CliResult<String> {
    let config: ExperimentConfig =
        parse_config(&read_text(&a.config)?).map_err(|e| CliError::format(&a.config, e))?;
    run_experiment(&config, threads)
}

/// Runs a configured experiment and writes `model.crf`, `train.log`,
/// `report.txt` and `report.json` into the output directory.
pub fn run_experiment(config: &ExperimentConfig, threads: usize) -> CliResult<String> {
    let settings = RunSettings {
        template: config.template,
        train: config.train_config(),
        ..RunSettings::default()
    };
    settings.train.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let mut ev = evaluator(threads)?;
    let ez_model = match (config.task, config.ezafe_mode, &config.ezafe_model) {
        (Task::PosEzInput, EzafeSource::Predicted, Some(p)) => Some(load_model_file(p)?),
        _ => None,
    };
    let (train, valid, test) = match (&config.valid, &config.test) {
        (Some(v), Some(t)) => (load_corpus(&config.train)?, load_corpus(v)?, load_corpus(t)?),
        _ => {
            let spec = SplitSpec::new(config.seed, Fraction::new(1, 10)?, Fraction::new(1, 10)?)?;
            let split = split_filtered(&load_corpus(&config.train)?, &spec, DEFAULT_MAX_LEN)?;
            (split.train, split.valid, split.test)
        }
    };
    let started = Instant::now();
    let (model, log) = train_task(
        config.task,
        config.ezafe_mode,
        ez_model.as_ref(),
        &train,
        Some(&valid),
        &settings,
        ev.as_mut(),
    )?;
    let mut sections = evaluate_model(&model, &valid, config.ezafe_mode, ez_model.as_ref(), "valid")?;
    sections.extend(evaluate_model(&model, &test, config.ezafe_mode, ez_model.as_ref(), "test")?);
    let mut header = config.entries();
    header.push(("selected_iteration".into(), log.selected_iteration.to_string()));
    header.push(("stop".into(), format!("{:?}", log.stop)));
    header.push(("train_sentences".into(), train.len().to_string()));
    header.push(("valid_sentences".into(), valid.len().to_string()));
    header.push(("test_sentences".into(), test.len().to_string()));
    let report = Report { header, sections, delta: None };
    let text = report.to_text();
    write_all_atomic(&[
        (config.out.join("model.crf"), save_model(&model)),
        (config.out.join("train.log"), render_log(&log)),
        (config.out.join("report.txt"), text.clone()),
        (config.out.join("report.json"), report.to_json()),
    ])?;
    Ok(format!("{text}\n# wall-clock training and evaluation: {:.1}s\n", started.elapsed().as_secs_f64()))
}
