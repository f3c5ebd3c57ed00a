//! Canonical corpus files: one `form<TAB>pos<TAB>ezafe` line per token,
//! sentences separated by exactly one blank line, no trailing blank line.

use pertcrf_core::{Corpus, Sentence, Token};

use super::{line_error, FormatError};

/// Parses a canonical corpus. Errors name the 1-based line.
pub fn parse_corpus(text: &str) -> Result<Corpus, FormatError> {
    let mut sentences = Vec::new();
    let mut tokens = Vec::new();
    let mut lines = text.split('\n').enumerate().peekable();
    while let Some((i, line)) = lines.next() {
        let number = i + 1;
        if line.is_empty() {
            // The final newline of the file yields one empty piece.
            if lines.peek().is_none() {
                break;
            }
            if tokens.is_empty() {
                return Err(line_error(number, "empty sentence"));
            }
            sentences.push(Sentence::new(std::mem::take(&mut tokens))?);
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        let [form, pos, flag] = cols[..] else {
            return Err(line_error(number, format!("expected 3 tab-separated columns, got {}", cols.len())));
        };
        let ezafe = match flag {
            "0" => false,
            "1" => true,
            other => return Err(line_error(number, format!("ezafe flag {other:?} is not 0 or 1"))),
        };
        let token = Token::new(form, pos, ezafe).map_err(|e| line_error(number, e.to_string()))?;
        tokens.push(token);
    }
    if !tokens.is_empty() {
        sentences.push(Sentence::new(tokens)?);
    }
    Ok(Corpus::new(sentences))
}

/// Renders a corpus in canonical form.
pub fn write_corpus(corpus: &Corpus) -> String {
    let mut out = String::new();
    for (i, sentence) in corpus.sentences().iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        for t in sentence.tokens() {
            out.push_str(t.form());
            out.push('\t');
            out.push_str(t.pos());
            out.push('\t');
            out.push(if t.ezafe() { '1' } else { '0' });
            out.push('\n');
        }
    }
    out
}
