//! Shared string handling: character spans, case folding, word tokenisation
//! and edit distance.
//!
//! All spans are half-open ranges of `char` offsets, not byte offsets.
//! Case folding maps each char to the first char of its lowercase form, so a
//! folded string always has the same char count as its source and spans stay
//! valid across folding.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Span { start, end }
    }

    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

pub fn fold_char(c: char) -> char {
    c.to_lowercase().next().unwrap_or(c)
}

pub fn fold(s: &str) -> String {
    s.chars().map(fold_char).collect()
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric()
}

fn is_joiner(c: char) -> bool {
    matches!(c, '-' | '\'' | '\u{2019}')
}

/// A word occurrence: folded form plus its span in the original text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WordToken {
    pub form: String,
    pub span: Span,
}

/// Split text into word forms. A word is a maximal run of alphanumeric chars,
/// where a hyphen or apostrophe is kept when it sits between two alphanumerics.
pub fn word_tokens(text: &str) -> Vec<WordToken> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        if !is_word_char(chars[i]) {
            i += 1;
            continue;
        }
        let start = i;
        while i < chars.len() {
            let joined = is_joiner(chars[i]) && i + 1 < chars.len() && is_word_char(chars[i + 1]);
            if is_word_char(chars[i]) || joined {
                i += 1;
            } else {
                break;
            }
        }
        out.push(WordToken {
            form: chars[start..i].iter().copied().map(fold_char).collect(),
            span: Span::new(start, i),
        });
    }
    out
}

pub fn whitespace_token_count(text: &str) -> usize {
    text.split_whitespace().count()
}

pub fn char_len(s: &str) -> usize {
    s.chars().count()
}

pub fn char_slice(s: &str, span: Span) -> Option<&str> {
    if span.start > span.end {
        return None;
    }
    let mut indices = s.char_indices().map(|(i, _)| i).chain(std::iter::once(s.len()));
    let start = indices.nth(span.start)?;
    let end = if span.end == span.start {
        start
    } else {
        indices.nth(span.end - span.start - 1)?
    };
    Some(&s[start..end])
}

/// Check that `span` addresses `word` inside `sentence` (compared after folding).
pub fn check_span(sentence: &str, word: &str, span: Span) -> Result<()> {
    let len = char_len(sentence);
    if span.start > span.end || span.end > len {
        return Err(Error::SpanOutOfBounds {
            start: span.start,
            end: span.end,
            len,
        });
    }
    let found = char_slice(sentence, span).unwrap_or_default();
    if fold(found) != fold(word) {
        return Err(Error::SpanMismatch {
            expected: word.to_string(),
            found: found.to_string(),
        });
    }
    Ok(())
}

/// First occurrence of `word` in `sentence` on word boundaries, after folding.
pub fn find_word(sentence: &str, word: &str) -> Option<Span> {
    let hay: Vec<char> = sentence.chars().map(fold_char).collect();
    let needle: Vec<char> = word.chars().map(fold_char).collect();
    if needle.is_empty() || needle.len() > hay.len() {
        return None;
    }
    (0..=hay.len() - needle.len()).find_map(|i| {
        let end = i + needle.len();
        let left_ok = i == 0 || !is_word_char(hay[i - 1]);
        let right_ok = end == hay.len() || !is_word_char(hay[end]);
        (left_ok && right_ok && hay[i..end] == needle[..]).then(|| Span::new(i, end))
    })
}

/// Replace the chars under `span` and return the new text with the span of
/// the inserted replacement.
pub fn replace_span(sentence: &str, span: Span, replacement: &str) -> (String, Span) {
    let mut out = String::with_capacity(sentence.len() + replacement.len());
    let mut inserted = false;
    for (i, c) in sentence.chars().enumerate() {
        if i == span.start {
            out.push_str(replacement);
            inserted = true;
        }
        if i < span.start || i >= span.end {
            out.push(c);
        }
    }
    if !inserted {
        out.push_str(replacement);
    }
    (
        out,
        Span::new(span.start, span.start + char_len(replacement)),
    )
}

/// Normalise a raw generated string into a single case-folded word, or `None`
/// when it is empty or spans more than one whitespace-delimited token.
pub fn normalize_candidate(raw: &str) -> Option<String> {
    let trimmed = raw.trim_matches(|c: char| c.is_whitespace() || !c.is_alphanumeric());
    if trimmed.is_empty() || trimmed.chars().any(char::is_whitespace) {
        return None;
    }
    Some(fold(trimmed))
}

pub fn has_alphanumeric(s: &str) -> bool {
    s.chars().any(char::is_alphanumeric)
}

/// Levenshtein distance over chars.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.is_empty() {
        return b.len();
    }
    let mut row: Vec<usize> = (0..=b.len()).collect();
    for (i, ca) in a.iter().enumerate() {
        let mut diag = row[0];
        row[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let above = row[j + 1];
            let cost = usize::from(ca != cb);
            row[j + 1] = (above + 1).min(row[j] + 1).min(diag + cost);
            diag = above;
        }
    }
    row[b.len()]
}

/// `1 - levenshtein / max(len)` on folded forms; two empty strings are identical.
pub fn edit_similarity(a: &str, b: &str) -> f64 {
    let (a, b) = (fold(a), fold(b));
    let longest = char_len(&a).max(char_len(&b));
    if longest == 0 {
        return 1.0;
    }
    1.0 - levenshtein(&a, &b) as f64 / longest as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokens_keep_internal_hyphen() {
        let toks = word_tokens("A well-known, up-to-date cat's toy -- ok.");
        let forms: Vec<_> = toks.iter().map(|t| t.form.as_str()).collect();
        assert_eq!(forms, ["a", "well-known", "up-to-date", "cat's", "toy", "ok"]);
        assert_eq!(char_slice("A well-known", toks[1].span), Some("well-known"));
    }

    #[test]
    fn find_word_respects_boundaries() {
        let s = "The category of Cat lovers";
        assert_eq!(find_word(s, "cat"), Some(Span::new(16, 19)));
        assert_eq!(find_word(s, "dog"), None);
        assert_eq!(find_word("cat", "cat"), Some(Span::new(0, 3)));
    }

    #[test]
    fn span_checks() {
        assert!(check_span("the cat sat", "cat", Span::new(4, 7)).is_ok());
        assert!(matches!(
            check_span("the cat sat", "cat", Span::new(4, 20)),
            Err(Error::SpanOutOfBounds { .. })
        ));
        assert!(matches!(
            check_span("the cat sat", "cat", Span::new(0, 3)),
            Err(Error::SpanMismatch { .. })
        ));
    }

    #[test]
    fn replace_span_handles_multibyte() {
        let (s, span) = replace_span("café noir", Span::new(0, 4), "thé");
        assert_eq!(s, "thé noir");
        assert_eq!(char_slice(&s, span), Some("thé"));
        let (s, span) = replace_span("go home", Span::new(3, 7), "[MASK]");
        assert_eq!(s, "go [MASK]");
        assert_eq!(span, Span::new(3, 9));
    }

    #[test]
    fn candidate_normalisation() {
        assert_eq!(normalize_candidate("  Class. "), Some("class".into()));
        assert_eq!(normalize_candidate("upper class"), None);
        assert_eq!(normalize_candidate("well-off"), Some("well-off".into()));
        assert_eq!(normalize_candidate("..."), None);
    }

    #[test]
    fn edit_similarity_values() {
        assert_eq!(levenshtein("extend", "extensions"), 5);
        assert!((edit_similarity("extend", "extensions") - 0.5).abs() < 1e-12);
        assert_eq!(edit_similarity("Extend", "extend"), 1.0);
        assert_eq!(levenshtein("", "abc"), 3);
        assert_eq!(levenshtein("kitten", "sitting"), 3);
    }
}
