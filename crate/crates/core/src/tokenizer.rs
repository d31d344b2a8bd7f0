//! Merge-rank inference: applying a trained model to words and corpora.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use dashmap::DashMap;
use rayon::prelude::*;

use crate::corpus::{PretokenConfig, Word, WordFrequencyTable};
use crate::error::Result;
use crate::model::{BpeModel, TokenId};

/// Subword-nmt continuation marker appended to non-final tokens of a word.
pub const CONTINUATION: &str = "@@";

/// Tokens of one word. Symbols missing from the model's alphabet pass through
/// as single tokens and are flagged as unknown.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct TokenSequence {
    tokens: Vec<String>,
    unknown: Vec<bool>,
}

impl TokenSequence {
    pub fn new() -> Self {
        Self::default()
    }

    /// All tokens known.
    pub fn from_tokens<I, S>(tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let tokens: Vec<String> = tokens.into_iter().map(Into::into).collect();
        let unknown = vec![false; tokens.len()];
        Self { tokens, unknown }
    }

    pub fn push(&mut self, token: impl Into<String>, unknown: bool) {
        self.tokens.push(token.into());
        self.unknown.push(unknown);
    }

    pub fn extend(&mut self, other: TokenSequence) {
        self.tokens.extend(other.tokens);
        self.unknown.extend(other.unknown);
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = (&str, bool)> {
        self.tokens
            .iter()
            .zip(&self.unknown)
            .map(|(t, &u)| (t.as_str(), u))
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn is_unknown(&self, i: usize) -> bool {
        self.unknown[i]
    }

    pub fn has_unknown(&self) -> bool {
        self.unknown.iter().any(|&u| u)
    }

    /// Concatenated token strings.
    pub fn surface(&self) -> String {
        self.tokens.concat()
    }

    /// Subword-nmt rendering: `@@` after every non-final token and the
    /// end-of-word marker removed from the last one.
    pub fn render(&self, marker: &str, out: &mut String) {
        let n = self.tokens.len();
        for (i, t) in self.tokens.iter().enumerate() {
            if i + 1 < n {
                out.push_str(t);
                out.push_str(CONTINUATION);
                out.push(' ');
            } else {
                out.push_str(t.strip_suffix(marker).unwrap_or(t));
            }
        }
    }
}

/// Anything that maps a word to subword tokens.
pub trait Tokenize: Sync {
    fn tokenize_word(&self, word: &Word) -> TokenSequence;

    fn tokenize_line(&self, line: &str, config: &PretokenConfig) -> Result<Vec<TokenSequence>> {
        Ok(config
            .words(line)?
            .iter()
            .map(|w| self.tokenize_word(w))
            .collect())
    }

    /// Number of tokens emitted for a line.
    fn count_line(&self, line: &str, config: &PretokenConfig) -> Result<usize> {
        Ok(self
            .tokenize_line(line, config)?
            .iter()
            .map(TokenSequence::len)
            .sum())
    }
}

impl<T: Tokenize + ?Sized> Tokenize for &T {
    fn tokenize_word(&self, word: &Word) -> TokenSequence {
        (**self).tokenize_word(word)
    }
}

/// A line in subword-nmt output format.
pub fn render_line(words: &[TokenSequence], marker: &str) -> String {
    let mut out = String::new();
    for (i, w) in words.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        w.render(marker, &mut out);
    }
    out
}

/// Undoes the `@@` continuation convention.
pub fn join_subwords(line: &str) -> String {
    let joined = line.replace("@@ ", "");
    joined
        .strip_suffix(CONTINUATION)
        .unwrap_or(&joined)
        .to_string()
}

#[derive(Debug, Clone, Copy)]
pub(crate) enum Piece<'w> {
    Known(TokenId),
    Unknown(&'w str),
}

impl BpeModel {
    /// Applies the merge list to one word, lowest rank first. When a rule
    /// applies at several positions the leftmost one is merged first.
    pub(crate) fn encode<'w>(&self, word: &'w Word) -> Vec<Piece<'w>> {
        let mut pieces: Vec<Piece<'w>> = word
            .symbols()
            .iter()
            .map(|s| match self.id(s) {
                Some(id) if self.is_atomic_id(id) => Piece::Known(id),
                _ => Piece::Unknown(s.as_str()),
            })
            .collect();
        loop {
            let mut best: Option<(u32, usize, TokenId)> = None;
            for i in 1..pieces.len() {
                if let (Piece::Known(l), Piece::Known(r)) = (pieces[i - 1], pieces[i]) {
                    if let Some((rank, merged)) = self.rule(l, r) {
                        if best.is_none_or(|(b, _, _)| rank < b) {
                            best = Some((rank, i - 1, merged));
                        }
                    }
                }
            }
            let Some((_, pos, merged)) = best else { break };
            pieces[pos] = Piece::Known(merged);
            pieces.remove(pos + 1);
        }
        pieces
    }

    pub(crate) fn pieces_to_sequence(&self, pieces: &[Piece<'_>]) -> TokenSequence {
        let mut seq = TokenSequence::new();
        for p in pieces {
            match *p {
                Piece::Known(id) => seq.push(self.token(id), false),
                Piece::Unknown(s) => seq.push(s, true),
            }
        }
        seq
    }
}

impl Tokenize for BpeModel {
    fn tokenize_word(&self, word: &Word) -> TokenSequence {
        self.pieces_to_sequence(&self.encode(word))
    }
}

/// Memoizes another tokenizer per word. Safe to share across threads; every
/// thread sees the same value for a word since the inner tokenizer is pure.
pub struct CachedTokenizer<T> {
    inner: T,
    cache: DashMap<Word, TokenSequence>,
}

impl<T: Tokenize> CachedTokenizer<T> {
    pub fn new(inner: T) -> Self {
        Self {
            inner,
            cache: DashMap::new(),
        }
    }

    pub fn inner(&self) -> &T {
        &self.inner
    }

    pub fn cached_words(&self) -> usize {
        self.cache.len()
    }
}

impl<T: Tokenize> Tokenize for CachedTokenizer<T> {
    fn tokenize_word(&self, word: &Word) -> TokenSequence {
        if let Some(hit) = self.cache.get(word) {
            return hit.clone();
        }
        let seq = self.inner.tokenize_word(word);
        self.cache.entry(word.clone()).or_insert(seq).clone()
    }
}

/// Tokenizes each distinct word of a table once.
pub fn tokenize_corpus<T: Tokenize + ?Sized>(
    tokenizer: &T,
    table: &WordFrequencyTable,
) -> BTreeMap<Word, TokenSequence> {
    let words: Vec<&Word> = table.iter().map(|(w, _)| w).collect();
    words
        .into_par_iter()
        .map(|w| (w.clone(), tokenizer.tokenize_word(w)))
        .collect()
}

/// Occurrences `c_v` of each vocabulary token in the tokenized corpus.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TokenCounts(BTreeMap<String, u64>);

impl TokenCounts {
    pub fn from_map(map: BTreeMap<String, u64>) -> Self {
        Self(map)
    }

    pub fn get(&self, token: &str) -> Option<u64> {
        self.0.get(token).copied()
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = (&str, u64)> {
        self.0.iter().map(|(t, &c)| (t.as_str(), c))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Sum of all counts.
    pub fn total(&self) -> u64 {
        self.0.values().sum()
    }

    pub fn max_count(&self) -> u64 {
        self.0.values().copied().max().unwrap_or(0)
    }

    pub fn as_map(&self) -> &BTreeMap<String, u64> {
        &self.0
    }
}

/// `c_v` for every token of the model's vocabulary, zero included.
///
/// Unknown passthrough symbols are not vocabulary tokens and are not counted.
pub fn token_counts(model: &BpeModel, table: &WordFrequencyTable) -> TokenCounts {
    let entries: Vec<(&Word, u64)> = table.iter().collect();
    let per_id = entries
        .par_iter()
        .fold(
            || vec![0u64; model.vocab_size()],
            |mut acc, (word, count)| {
                for p in model.encode(word) {
                    if let Piece::Known(id) = p {
                        acc[id as usize] += count;
                    }
                }
                acc
            },
        )
        .reduce(
            || vec![0u64; model.vocab_size()],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                a
            },
        );
    TokenCounts(
        model
            .vocab()
            .zip(per_id)
            .map(|(t, c)| (t.to_string(), c))
            .collect(),
    )
}

/// Renders a whole text with `tokenizer`, one output line per input line.
pub fn render_text<T: Tokenize + ?Sized>(
    tokenizer: &T,
    text: &str,
    config: &PretokenConfig,
) -> Result<String> {
    let mut out = String::new();
    for line in text.lines() {
        let words = tokenizer.tokenize_line(line, config)?;
        let _ = writeln!(out, "{}", render_line(&words, &config.end_of_word_marker));
    }
    Ok(out)
}
