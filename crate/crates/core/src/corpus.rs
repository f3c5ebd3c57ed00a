//! Annotated corpora: tokens, sentences, the shuffle/split/filter protocol
//! and per-tag corpus statistics.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::errors::{Error, Result};

/// Seed used by the reference data protocol.
pub const DEFAULT_SEED: u64 = 17;

/// Sentences longer than this are set aside by [`filter_long`] in the
/// reference protocol.
pub const DEFAULT_MAX_LEN: usize = 512;

fn valid_symbol(s: &str) -> bool {
    !s.is_empty() && !s.chars().any(char::is_whitespace)
}

/// A word form with its gold part-of-speech tag and ezafe flag.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Token {
    form: String,
    pos: String,
    ezafe: bool,
}

impl Token {
    /// Creates a token. The form and tag must be non-empty and free of
    /// whitespace.
    pub fn new(form: impl Into<String>, pos: impl Into<String>, ezafe: bool) -> Result<Self> {
        let form = form.into();
        let pos = pos.into();
        if !valid_symbol(&form) {
            return Err(Error::InvalidForm(form));
        }
        if !valid_symbol(&pos) {
            return Err(Error::InvalidTag(pos));
        }
        Ok(Self { form, pos, ezafe })
    }

    /// Surface form.
    pub fn form(&self) -> &str {
        &self.form
    }

    /// Gold POS tag.
    pub fn pos(&self) -> &str {
        &self.pos
    }

    /// Whether the word carries ezafe.
    pub fn ezafe(&self) -> bool {
        self.ezafe
    }

    /// Ezafe flag as `0` or `1`.
    pub fn ezafe_flag(&self) -> u8 {
        u8::from(self.ezafe)
    }
}

/// A non-empty sequence of tokens.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Sentence {
    tokens: Vec<Token>,
}

impl Sentence {
    /// Wraps a token list, rejecting empty ones.
    pub fn new(tokens: Vec<Token>) -> Result<Self> {
        if tokens.is_empty() {
            return Err(Error::EmptySentence);
        }
        Ok(Self { tokens })
    }

    /// Tokens in order.
    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    /// Number of tokens (always at least one).
    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    /// Iterator over surface forms.
    pub fn forms(&self) -> impl Iterator<Item = &str> + '_ {
        self.tokens.iter().map(Token::form)
    }

    /// Gold POS tags.
    pub fn pos_tags(&self) -> Vec<String> {
        self.tokens.iter().map(|t| t.pos.clone()).collect()
    }

    /// Gold ezafe flags.
    pub fn ezafe_flags(&self) -> Vec<u8> {
        self.tokens.iter().map(Token::ezafe_flag).collect()
    }
}

/// Ordered sentences plus the tag inventory in first-occurrence order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Corpus {
    sentences: Vec<Sentence>,
    tag_inventory: Vec<String>,
}

impl Corpus {
    /// Builds a corpus and discovers its tag inventory.
    pub fn new(sentences: Vec<Sentence>) -> Self {
        let mut tag_inventory: Vec<String> = Vec::new();
        {
            let mut seen = hashbrown::HashSet::new();
            for token in sentences.iter().flat_map(|s| s.tokens.iter()) {
                if seen.insert(token.pos.as_str()) {
                    tag_inventory.push(token.pos.clone());
                }
            }
        }
        Self { sentences, tag_inventory }
    }

    /// Sentences in order.
    pub fn sentences(&self) -> &[Sentence] {
        &self.sentences
    }

    /// Distinct POS tags in first-occurrence order.
    pub fn tag_inventory(&self) -> &[String] {
        &self.tag_inventory
    }

    /// Number of sentences.
    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    /// True when the corpus has no sentences.
    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    /// Total number of tokens.
    pub fn token_count(&self) -> usize {
        self.sentences.iter().map(Sentence::len).sum()
    }

    /// Consumes the corpus and returns its sentences.
    pub fn into_sentences(self) -> Vec<Sentence> {
        self.sentences
    }
}

impl FromIterator<Sentence> for Corpus {
    fn from_iter<I: IntoIterator<Item = Sentence>>(iter: I) -> Self {
        Self::new(iter.into_iter().collect())
    }
}

/// An exact non-negative rational, used for split fractions so that
/// `floor(n * fraction)` has no floating-point surprises.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Fraction {
    num: u64,
    den: u64,
}

impl Fraction {
    /// `num / den`; `den` must be positive.
    pub fn new(num: u64, den: u64) -> Result<Self> {
        if den == 0 {
            return Err(Error::InvalidSplit("zero denominator".into()));
        }
        Ok(Self { num, den })
    }

    /// Parses a plain decimal such as `0.1` or `.25` exactly.
    pub fn parse_decimal(text: &str) -> Result<Self> {
        let bad = || Error::InvalidSplit(format!("not a decimal fraction: {text:?}"));
        let (int_part, frac_part) = match text.split_once('.') {
            Some((i, f)) => (i, f),
            None => (text, ""),
        };
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(bad());
        }
        let all_digits = |s: &str| s.bytes().all(|b| b.is_ascii_digit());
        if !all_digits(int_part) || !all_digits(frac_part) || frac_part.len() > 18 {
            return Err(bad());
        }
        let den = 10u64.pow(frac_part.len() as u32);
        let int_val: u64 = if int_part.is_empty() { 0 } else { int_part.parse().map_err(|_| bad())? };
        let frac_val: u64 = if frac_part.is_empty() { 0 } else { frac_part.parse().map_err(|_| bad())? };
        let num = int_val
            .checked_mul(den)
            .and_then(|v| v.checked_add(frac_val))
            .ok_or_else(bad)?;
        Self::new(num, den)
    }

    /// `floor(n * self)`.
    pub fn floor_mul(&self, n: usize) -> usize {
        ((n as u128 * self.num as u128) / self.den as u128) as usize
    }

    /// True when strictly between zero and one.
    pub fn is_proper(&self) -> bool {
        self.num > 0 && self.num < self.den
    }

    /// Approximate value.
    pub fn to_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    fn add_lt_one(&self, other: &Self) -> bool {
        let lhs = self.num as u128 * other.den as u128 + other.num as u128 * self.den as u128;
        lhs < self.den as u128 * other.den as u128
    }
}

impl core::fmt::Display for Fraction {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

/// Seed and fractions of a shuffle/split run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitSpec {
    seed: u64,
    test: Fraction,
    valid: Fraction,
}

impl SplitSpec {
    /// Both fractions must lie in (0, 1) and sum to less than one.
    pub fn new(seed: u64, test: Fraction, valid: Fraction) -> Result<Self> {
        if !test.is_proper() || !valid.is_proper() {
            return Err(Error::InvalidSplit(format!(
                "fractions must lie strictly between 0 and 1 (test {test}, valid {valid})"
            )));
        }
        if !test.add_lt_one(&valid) {
            return Err(Error::InvalidSplit(format!(
                "test fraction {test} plus valid fraction {valid} must be below 1"
            )));
        }
        Ok(Self { seed, test, valid })
    }

    /// Shuffle seed.
    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Fraction of sentences placed in the test part.
    pub fn test_fraction(&self) -> Fraction {
        self.test
    }

    /// Fraction of sentences placed in the validation part.
    pub fn valid_fraction(&self) -> Fraction {
        self.valid
    }

    /// Part sizes `(train, valid, test)` for a corpus of `n` sentences.
    pub fn sizes(&self, n: usize) -> (usize, usize, usize) {
        let test = self.test.floor_mul(n);
        let valid = self.valid.floor_mul(n);
        (n - test - valid, valid, test)
    }
}

impl Default for SplitSpec {
    fn default() -> Self {
        let tenth = Fraction { num: 1, den: 10 };
        Self { seed: DEFAULT_SEED, test: tenth, valid: tenth }
    }
}

/// The three parts of a split corpus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    /// Training part (the remainder after test and validation).
    pub train: Corpus,
    /// Validation part.
    pub valid: Corpus,
    /// Test part.
    pub test: Corpus,
}

/// In-place seeded Fisher–Yates shuffle.
pub fn fisher_yates<T>(items: &mut [T], seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in (1..items.len()).rev() {
        let j = rng.random_range(0..=i);
        items.swap(i, j);
    }
}

/// Shuffles sentences and cuts the result into test, validation and train
/// parts, in that order.
pub fn shuffle_split(corpus: &Corpus, spec: &SplitSpec) -> Result<Split> {
    let n = corpus.len();
    if n < 3 {
        return Err(Error::InvalidSplit(format!("need at least 3 sentences, got {n}")));
    }
    let (n_train, n_valid, n_test) = spec.sizes(n);
    if n_train == 0 || n_valid == 0 || n_test == 0 {
        return Err(Error::InvalidSplit(format!(
            "{n} sentences give an empty part (train {n_train}, valid {n_valid}, test {n_test})"
        )));
    }
    let mut sentences = corpus.sentences.clone();
    fisher_yates(&mut sentences, spec.seed);
    let train = sentences.split_off(n_test + n_valid);
    let valid = sentences.split_off(n_test);
    Ok(Split {
        train: Corpus::new(train),
        valid: Corpus::new(valid),
        test: Corpus::new(sentences),
    })
}

/// Drops every sentence with more than `max_len` tokens, keeping order.
pub fn filter_long(corpus: &Corpus, max_len: usize) -> Corpus {
    corpus
        .sentences
        .iter()
        .filter(|s| s.len() <= max_len)
        .cloned()
        .collect()
}

/// Shannon diversity index `H = -Σ p ln p` (nats) of a frequency table.
pub fn shannon_index<I>(counts: I) -> Result<f64>
where
    I: IntoIterator<Item = u64>,
{
    let counts: Vec<u64> = counts.into_iter().collect();
    if counts.is_empty() {
        return Err(Error::InvalidCounts("no entries".into()));
    }
    if counts.contains(&0) {
        return Err(Error::InvalidCounts("counts must be positive".into()));
    }
    let total = counts.iter().sum::<u64>() as f64;
    let h = -counts
        .iter()
        .map(|&c| {
            let p = c as f64 / total;
            p * libm::log(p)
        })
        .sum::<f64>();
    Ok(h.max(0.0))
}

/// One row of the per-tag statistics table.
#[derive(Debug, Clone, PartialEq)]
pub struct PosStatsRow {
    /// Tag symbol.
    pub pos: String,
    /// Percentage of this tag's tokens that carry ezafe.
    pub ezafe_pct: f64,
    /// Percentage of all tokens that have this tag.
    pub freq_pct: f64,
    /// Shannon index of this tag's word-form distribution, in nats.
    pub diversity: f64,
}

/// Per-tag ezafe rate, frequency and lexical diversity, sorted by
/// descending ezafe rate and then by tag symbol.
pub fn corpus_stats(corpus: &Corpus) -> Result<Vec<PosStatsRow>> {
    let total = corpus.token_count();
    if total == 0 {
        return Err(Error::EmptyCorpus);
    }
    struct Acc<'a> {
        tokens: u64,
        ezafe: u64,
        forms: BTreeMap<&'a str, u64>,
    }
    let mut per_tag: BTreeMap<&str, Acc<'_>> = BTreeMap::new();
    for token in corpus.sentences.iter().flat_map(|s| s.tokens.iter()) {
        let acc = per_tag
            .entry(token.pos.as_str())
            .or_insert_with(|| Acc { tokens: 0, ezafe: 0, forms: BTreeMap::new() });
        acc.tokens += 1;
        acc.ezafe += u64::from(token.ezafe);
        *acc.forms.entry(token.form.as_str()).or_insert(0) += 1;
    }
    let mut rows = corpus
        .tag_inventory
        .iter()
        .map(|tag| {
            let acc = &per_tag[tag.as_str()];
            Ok(PosStatsRow {
                pos: tag.to_string(),
                ezafe_pct: 100.0 * acc.ezafe as f64 / acc.tokens as f64,
                freq_pct: 100.0 * acc.tokens as f64 / total as f64,
                diversity: shannon_index(acc.forms.values().copied())?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| match b.ezafe_pct.total_cmp(&a.ezafe_pct) {
        Ordering::Equal => a.pos.cmp(&b.pos),
        other => other,
    });
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn sent(spec: &[(&str, &str, bool)]) -> Sentence {
        Sentence::new(spec.iter().map(|&(f, p, e)| Token::new(f, p, e).unwrap()).collect()).unwrap()
    }

    fn numbered(n: usize) -> Corpus {
        (0..n)
            .map(|i| sent(&[(&format!("w{i}"), "N", false)]))
            .collect()
    }

    #[test]
    fn token_rejects_whitespace() {
        assert!(Token::new("a b", "N", false).is_err());
        assert!(Token::new("ab", "N\t", false).is_err());
        assert!(Token::new("", "N", false).is_err());
        assert!(Sentence::new(vec![]).is_err());
    }

    #[test]
    fn inventory_in_first_occurrence_order() {
        let c = Corpus::new(vec![sent(&[
            ("pesar", "N", true),
            ("xošhāl", "ADJ", false),
            ("'āmad", "V", false),
            (".", "DELM", false),
        ])]);
        assert_eq!(c.tag_inventory(), ["N", "ADJ", "V", "DELM"]);
    }

    #[test]
    fn fractions_parse_exactly() {
        let f = Fraction::parse_decimal("0.1").unwrap();
        assert_eq!(f.floor_mul(335_925), 33_592);
        assert_eq!(Fraction::parse_decimal(".25").unwrap().floor_mul(8), 2);
        assert!(Fraction::parse_decimal("abc").is_err());
        assert!(Fraction::parse_decimal("-0.1").is_err());
        assert!(Fraction::parse_decimal(".").is_err());
    }

    #[test]
    fn split_spec_validation() {
        let p = |s| Fraction::parse_decimal(s).unwrap();
        assert!(SplitSpec::new(17, p("0.6"), p("0.5")).is_err());
        assert!(SplitSpec::new(17, p("0.5"), p("0.5")).is_err());
        assert!(SplitSpec::new(17, p("0"), p("0.5")).is_err());
        assert!(SplitSpec::new(17, p("0.1"), p("0.1")).is_ok());
    }

    #[test]
    fn split_sizes_use_floor() {
        let spec = SplitSpec::default();
        assert_eq!(spec.sizes(10), (8, 1, 1));
        // Reference corpus counts: floor gives 33,592 for both held-out parts.
        assert_eq!(spec.sizes(335_925), (268_741, 33_592, 33_592));
        let split = shuffle_split(&numbered(10), &spec).unwrap();
        assert_eq!((split.train.len(), split.valid.len(), split.test.len()), (8, 1, 1));
    }

    #[test]
    fn split_is_deterministic_partition() {
        let c = numbered(57);
        let spec = SplitSpec::default();
        let a = shuffle_split(&c, &spec).unwrap();
        let b = shuffle_split(&c, &spec).unwrap();
        assert_eq!(a, b);
        let mut all: Vec<_> = a
            .test
            .sentences()
            .iter()
            .chain(a.valid.sentences())
            .chain(a.train.sentences())
            .cloned()
            .collect();
        assert_ne!(all, c.sentences().to_vec(), "seed 17 should move something");
        all.sort_by(|x, y| x.tokens()[0].form().cmp(y.tokens()[0].form()));
        let mut orig = c.sentences().to_vec();
        orig.sort_by(|x, y| x.tokens()[0].form().cmp(y.tokens()[0].form()));
        assert_eq!(all, orig);
    }

    #[test]
    fn split_rejects_empty_parts() {
        assert!(shuffle_split(&numbered(2), &SplitSpec::default()).is_err());
        // 5 * 0.1 floors to zero.
        assert!(shuffle_split(&numbered(5), &SplitSpec::default()).is_err());
    }

    #[test]
    fn filter_long_threshold_is_strict() {
        let long = |n: usize| {
            Sentence::new((0..n).map(|_| Token::new("x", "N", false).unwrap()).collect()).unwrap()
        };
        let c = Corpus::new(vec![long(3), long(513), long(512)]);
        let out = filter_long(&c, 512);
        assert_eq!(out.len(), 2);
        assert_eq!(out.sentences()[1].len(), 512);
        let short = Corpus::new(vec![long(3), long(5)]);
        assert_eq!(filter_long(&short, 512), short);
    }

    #[test]
    fn shannon_examples() {
        assert_eq!(shannon_index([42]).unwrap(), 0.0);
        assert!((shannon_index([5; 8]).unwrap() - libm::log(8.0)).abs() < 1e-12);
        // -(0.25 ln 0.25 + 0.25 ln 0.25 + 0.5 ln 0.5), evaluated by hand.
        let expected = 1.039_720_770_839_917_9;
        assert!((shannon_index([1, 1, 2]).unwrap() - expected).abs() < 1e-12);
        assert!(shannon_index(Vec::<u64>::new()).is_err());
        assert!(shannon_index([1, 0]).is_err());
    }

    #[test]
    fn stats_rows() {
        let c = Corpus::new(vec![sent(&[
            ("a", "N", true),
            ("b", "N", false),
            ("c", "ADJ", false),
            ("d", "V", false),
        ])]);
        let rows = corpus_stats(&c).unwrap();
        assert_eq!(rows[0].pos, "N");
        assert_eq!(rows[0].ezafe_pct, 50.0);
        assert_eq!(rows[0].freq_pct, 50.0);
        // Zero-ezafe tags follow in lexicographic order.
        assert_eq!(rows[1].pos, "ADJ");
        assert_eq!(rows[2].pos, "V");
        let total: f64 = rows.iter().map(|r| r.freq_pct).sum();
        assert!((total - 100.0).abs() < 0.01);
        assert!(corpus_stats(&Corpus::default()).is_err());
    }

    #[test]
    fn all_ezafe_nouns_give_full_rate() {
        let c = Corpus::new(vec![sent(&[("a", "N", true), ("b", "N", true), ("c", "V", false)])]);
        let rows = corpus_stats(&c).unwrap();
        assert_eq!(rows[0].pos, "N");
        assert_eq!(rows[0].ezafe_pct, 100.0);
    }
}
