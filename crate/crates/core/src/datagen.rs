//! Synthetic annotated corpora drawn from a hidden Markov model whose states
//! are POS tags, with ezafe sampled per (state, next state) pair.
//!
//! The generating model is known exactly, so posterior decoding under it
//! ([`bayes_decode`]) gives an accuracy ceiling for any trained tagger.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use hashbrown::HashMap;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Corpus, Sentence, Token};
use crate::crf::lattice::{backward, forward, marginals, Lattice};
use crate::errors::{Error, Result};

const STOCHASTIC_TOL: f64 = 1e-12;

/// A generative tagging model.
///
/// The ezafe matrix gives, for a token in state `a` followed by a token in
/// state `b`, the probability that the first token carries ezafe. The last
/// token of a sentence never carries ezafe.
#[derive(Debug, Clone, PartialEq)]
pub struct HmmSpec {
    states: Vec<String>,
    start: Vec<f64>,
    trans: Vec<Vec<f64>>,
    vocab: Vec<String>,
    emit: Vec<Vec<f64>>,
    ezafe: Vec<Vec<f64>>,
    word_ids: HashMap<String, usize>,
}

fn check_distribution(name: &str, row: &[f64], width: usize) -> Result<()> {
    if row.len() != width {
        return Err(Error::InvalidSpec(format!("{name}: expected {width} entries, got {}", row.len())));
    }
    if let Some(p) = row.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
        return Err(Error::InvalidSpec(format!("{name}: entry {p} is not a probability")));
    }
    let sum: f64 = row.iter().sum();
    if libm::fabs(sum - 1.0) > STOCHASTIC_TOL {
        return Err(Error::InvalidSpec(format!("{name}: entries sum to {sum}, not 1")));
    }
    Ok(())
}

impl HmmSpec {
    /// Validates and assembles a spec. `emit[s][w]` is the probability of
    /// word `vocab[w]` in state `s`; `ezafe[a][b]` a probability in `[0, 1]`.
    pub fn new(
        states: Vec<String>,
        start: Vec<f64>,
        trans: Vec<Vec<f64>>,
        vocab: Vec<String>,
        emit: Vec<Vec<f64>>,
        ezafe: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let s = states.len();
        if s == 0 {
            return Err(Error::InvalidSpec("no states".into()));
        }
        for (i, st) in states.iter().enumerate() {
            if Token::new("x", st.as_str(), false).is_err() || states[..i].contains(st) {
                return Err(Error::InvalidSpec(format!("state {st:?} is invalid or repeated")));
            }
        }
        if vocab.is_empty() {
            return Err(Error::InvalidSpec("empty vocabulary".into()));
        }
        let mut word_ids = HashMap::with_capacity(vocab.len());
        for (i, w) in vocab.iter().enumerate() {
            if Token::new(w.as_str(), "X", false).is_err() {
                return Err(Error::InvalidSpec(format!("word {w:?} is not a valid token form")));
            }
            if word_ids.insert(w.clone(), i).is_some() {
                return Err(Error::InvalidSpec(format!("word {w:?} is repeated")));
            }
        }
        check_distribution("START", &start, s)?;
        let rows = |name: &str, m: &[Vec<f64>]| -> Result<()> {
            if m.len() != s {
                return Err(Error::InvalidSpec(format!("{name}: expected {s} rows, got {}", m.len())));
            }
            Ok(())
        };
        rows("TRANS", &trans)?;
        rows("EMIT", &emit)?;
        rows("EZAFE", &ezafe)?;
        for (i, row) in trans.iter().enumerate() {
            check_distribution(&format!("TRANS row {}", states[i]), row, s)?;
        }
        for (i, row) in emit.iter().enumerate() {
            check_distribution(&format!("EMIT row {}", states[i]), row, vocab.len())?;
        }
        for (i, row) in ezafe.iter().enumerate() {
            if row.len() != s || row.iter().any(|p| !(0.0..=1.0).contains(p)) {
                return Err(Error::InvalidSpec(format!(
                    "EZAFE row {}: need {s} probabilities in [0, 1]",
                    states[i]
                )));
            }
        }
        Ok(Self { states, start, trans, vocab, emit, ezafe, word_ids })
    }

    /// State (tag) names.
    pub fn states(&self) -> &[String] {
        &self.states
    }

    /// Initial state distribution.
    pub fn start(&self) -> &[f64] {
        &self.start
    }

    /// Transition matrix rows.
    pub fn trans(&self) -> &[Vec<f64>] {
        &self.trans
    }

    /// Vocabulary.
    pub fn vocab(&self) -> &[String] {
        &self.vocab
    }

    /// Emission rows, one per state.
    pub fn emit(&self) -> &[Vec<f64>] {
        &self.emit
    }

    /// Ezafe probabilities per (state, next state).
    pub fn ezafe(&self) -> &[Vec<f64>] {
        &self.ezafe
    }

    /// Index of a vocabulary word.
    pub fn word_id(&self, word: &str) -> Option<usize> {
        self.word_ids.get(word).copied()
    }

    /// Expected fraction of tokens carrying ezafe under `lengths`
    /// (ratio of expectations, the limit of the empirical rate).
    pub fn expected_ezafe_rate(&self, lengths: &LengthDist) -> f64 {
        let s = self.states.len();
        let probs = lengths.probabilities();
        let max_len = probs.len() - 1;
        let mut marginal = self.start.clone();
        // ezafe_at[t]: expected ezafe at t given a next token exists.
        let mut ezafe_at = Vec::with_capacity(max_len);
        for _ in 0..max_len {
            let mut e = 0.0;
            let mut next = vec![0.0; s];
            for a in 0..s {
                for b in 0..s {
                    let p = marginal[a] * self.trans[a][b];
                    e += p * self.ezafe[a][b];
                    next[b] += p;
                }
            }
            ezafe_at.push(e);
            marginal = next;
        }
        let mut ez = 0.0;
        let mut tokens = 0.0;
        for (len, &p) in probs.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            tokens += p * len as f64;
            ez += p * ezafe_at[..len - 1].iter().sum::<f64>();
        }
        ez / tokens
    }
}

/// Sentence length distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LengthDist {
    /// Every sentence has this length.
    Fixed(usize),
    /// `P(min + k) ∝ (1 - p)^k` for `min + k <= max`.
    Geometric {
        /// Success probability.
        p: f64,
        /// Shortest length.
        min: usize,
        /// Longest length.
        max: usize,
    },
}

impl Default for LengthDist {
    fn default() -> Self {
        LengthDist::Geometric { p: 0.1, min: 3, max: 40 }
    }
}

impl LengthDist {
    /// Checks the parameters.
    pub fn validate(&self) -> Result<()> {
        match *self {
            LengthDist::Fixed(0) => Err(Error::InvalidSpec("sentence length must be positive".into())),
            LengthDist::Geometric { p, min, max } if !(p > 0.0 && p <= 1.0) || min == 0 || max < min => {
                Err(Error::InvalidSpec(format!("bad geometric length parameters p={p} min={min} max={max}")))
            }
            _ => Ok(()),
        }
    }

    /// `probs[n]` is the probability of length `n`.
    pub fn probabilities(&self) -> Vec<f64> {
        match *self {
            LengthDist::Fixed(n) => {
                let mut v = vec![0.0; n + 1];
                v[n] = 1.0;
                v
            }
            LengthDist::Geometric { p, min, max } => {
                let mut v = vec![0.0; max + 1];
                let mut w = 1.0;
                for slot in &mut v[min..=max] {
                    *slot = w;
                    w *= 1.0 - p;
                }
                let total: f64 = v.iter().sum();
                v.iter_mut().for_each(|x| *x /= total);
                v
            }
        }
    }
}

fn sample(rng: &mut ChaCha8Rng, probs: &[f64]) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            acc += p;
            last = i;
            if u < acc {
                return i;
            }
        }
    }
    last
}

/// Draws sentence `index` of the corpus generated with `seed`. Each
/// sentence has its own random stream, so sentences are independent of
/// how many others are drawn.
pub fn generate_sentence(spec: &HmmSpec, lengths: &LengthDist, seed: u64, index: u64) -> Sentence {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let len = sample(&mut rng, &lengths.probabilities());
    let mut states = Vec::with_capacity(len);
    let mut state = sample(&mut rng, &spec.start);
    states.push(state);
    for _ in 1..len {
        state = sample(&mut rng, &spec.trans[state]);
        states.push(state);
    }
    let mut tokens = Vec::with_capacity(len);
    for t in 0..len {
        let s = states[t];
        let word = sample(&mut rng, &spec.emit[s]);
        let ezafe = match states.get(t + 1) {
            Some(&next) => rng.random::<f64>() < spec.ezafe[s][next],
            None => false,
        };
        tokens.push(
            Token::new(spec.vocab[word].as_str(), spec.states[s].as_str(), ezafe)
                .expect("spec symbols are validated"),
        );
    }
    Sentence::new(tokens).expect("lengths are positive")
}

/// Draws `n_sentences` independent sentences.
pub fn generate(spec: &HmmSpec, n_sentences: usize, lengths: &LengthDist, seed: u64) -> Result<Corpus> {
    lengths.validate()?;
    Ok((0..n_sentences as u64)
        .map(|i| generate_sentence(spec, lengths, seed, i))
        .collect())
}

/// Per-token argmax of the posterior state marginals under `spec`, ties to
/// the lower state index. Returns state indices.
pub fn bayes_decode<S: AsRef<str>>(spec: &HmmSpec, words: &[S]) -> Result<Vec<usize>> {
    if words.is_empty() {
        return Ok(Vec::new());
    }
    let s = spec.states.len();
    let ids = words
        .iter()
        .map(|w| spec.word_id(w.as_ref()).ok_or_else(|| Error::OutOfVocabulary(w.as_ref().to_string())))
        .collect::<Result<Vec<_>>>()?;
    let mut emission = Vec::with_capacity(ids.len() * s);
    for (t, &w) in ids.iter().enumerate() {
        for st in 0..s {
            let mut score = libm::log(spec.emit[st][w]);
            if t == 0 {
                score += libm::log(spec.start[st]);
            }
            emission.push(score);
        }
    }
    let transition = spec.trans.iter().flat_map(|row| row.iter().map(|&p| libm::log(p))).collect();
    let lattice = Lattice::new(s, emission, transition);
    let (alphas, log_z) = forward(&lattice);
    let (betas, _) = backward(&lattice);
    let m = marginals(&lattice, &alphas, &betas, log_z);
    Ok((0..ids.len())
        .map(|t| {
            let p = m.unary(t);
            let mut best = 0;
            for y in 1..s {
                if p[y] > p[best] {
                    best = y;
                }
            }
            best
        })
        .collect())
}

/// [`bayes_decode`] returning state names.
pub fn bayes_tags<S: AsRef<str>>(spec: &HmmSpec, words: &[S]) -> Result<Vec<String>> {
    Ok(bayes_decode(spec, words)?
        .into_iter()
        .map(|i| spec.states[i].clone())
        .collect())
}

fn zipf(n: usize, exponent: f64) -> Vec<f64> {
    let raw: Vec<f64> = (1..=n).map(|r| 1.0 / libm::pow(r as f64, exponent)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / total).collect()
}

fn normalize_rows(rows: &mut [Vec<f64>]) {
    for row in rows {
        let total: f64 = row.iter().sum();
        row.iter_mut().for_each(|x| *x /= total);
    }
}

/// Pronounceable pseudo-word for index `i` with a fixed ending.
fn pseudo_word(i: usize, ending: &str) -> String {
    const ONSETS: [&str; 10] = ["b", "d", "k", "m", "n", "r", "s", "t", "z", "š"];
    const VOWELS: [&str; 4] = ["a", "e", "o", "ā"];
    let mut w = String::new();
    let mut k = i;
    loop {
        w.push_str(ONSETS[k % ONSETS.len()]);
        k /= ONSETS.len();
        w.push_str(VOWELS[k % VOWELS.len()]);
        k /= VOWELS.len();
        if k == 0 {
            break;
        }
    }
    w.push_str(ending);
    w
}

/// Four-state benchmark: `N`, `ADJ`, `P`, `V` over a 200-word vocabulary.
///
/// Each state owns 40 words with a characteristic ending and shares 40
/// ambiguous words with the others, so both context and affixes matter.
/// Ezafe follows noun-phrase structure (mostly on `N` before `N`/`ADJ` and
/// on `ADJ` before `ADJ`), at an overall rate near 22%.
pub fn tagging_benchmark() -> HmmSpec {
    let states: Vec<String> = ["N", "ADJ", "P", "V"].iter().map(|s| s.to_string()).collect();
    let endings = ["ān", "i", "", "ad"];
    let own = 40;
    let shared = 40;
    let mut vocab = Vec::with_capacity(4 * own + shared);
    for (s, ending) in endings.iter().enumerate() {
        for i in 0..own {
            vocab.push(pseudo_word(s * own + i, ending));
        }
    }
    for i in 0..shared {
        vocab.push(pseudo_word(1000 + i, "e"));
    }
    let own_mass = [0.75, 0.7, 0.8, 0.7];
    let own_dist = zipf(own, 1.0);
    let shared_dist = zipf(shared, 0.8);
    let mut emit = vec![vec![0.0; vocab.len()]; 4];
    for s in 0..4 {
        for i in 0..own {
            emit[s][s * own + i] = own_mass[s] * own_dist[i];
        }
        for i in 0..shared {
            // Each state ranks the shared words differently.
            let rank = (i * (2 * s + 3) + 7 * s) % shared;
            emit[s][4 * own + i] = (1.0 - own_mass[s]) * shared_dist[rank];
        }
    }
    normalize_rows(&mut emit);
    let trans = vec![
        vec![0.30, 0.35, 0.15, 0.20],
        vec![0.30, 0.20, 0.20, 0.30],
        vec![0.65, 0.15, 0.05, 0.15],
        vec![0.40, 0.10, 0.35, 0.15],
    ];
    let ezafe = vec![
        vec![0.6, 0.9, 0.05, 0.0],
        vec![0.2, 0.45, 0.0, 0.0],
        vec![0.15, 0.0, 0.0, 0.0],
        vec![0.0, 0.0, 0.0, 0.0],
    ];
    HmmSpec::new(states, vec![0.4, 0.1, 0.3, 0.2], trans, vocab, emit, ezafe).expect("benchmark spec is valid")
}

/// Homograph construction: `N` and `ADJ` emit from the same distribution
/// and have the same transition behavior, but only `N` carries ezafe (and
/// always does before another nominal). Without ezafe the two tags are
/// separable only by chance; with it, most `N` tokens are identified.
pub fn homograph() -> HmmSpec {
    let states: Vec<String> = ["N", "ADJ", "V", "DELM"].iter().map(|s| s.to_string()).collect();
    let nominal = 60;
    let verbs = 30;
    let mut vocab = Vec::new();
    for i in 0..nominal {
        vocab.push(pseudo_word(i, ""));
    }
    for i in 0..verbs {
        vocab.push(pseudo_word(500 + i, "ad"));
    }
    vocab.extend([".", "،", "؟"].iter().map(|s| s.to_string()));
    let mut emit = vec![vec![0.0; vocab.len()]; 4];
    let nominal_dist = zipf(nominal, 0.9);
    for s in 0..2 {
        emit[s][..nominal].copy_from_slice(&nominal_dist);
    }
    let verb_dist = zipf(verbs, 0.9);
    emit[2][nominal..nominal + verbs].copy_from_slice(&verb_dist);
    emit[3][nominal + verbs..].copy_from_slice(&[0.7, 0.2, 0.1]);
    normalize_rows(&mut emit);
    let trans = vec![
        vec![0.30, 0.30, 0.25, 0.15],
        vec![0.30, 0.30, 0.25, 0.15],
        vec![0.35, 0.35, 0.05, 0.25],
        vec![0.45, 0.45, 0.10, 0.0],
    ];
    let ezafe = vec![
        vec![1.0, 1.0, 0.0, 0.0],
        vec![0.0, 0.0, 0.0, 0.0],
        vec![0.0, 0.0, 0.0, 0.0],
        vec![0.0, 0.0, 0.0, 0.0],
    ];
    HmmSpec::new(states, vec![0.4, 0.4, 0.2, 0.0], trans, vocab, emit, ezafe).expect("homograph spec is valid")
}
