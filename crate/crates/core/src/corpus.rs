//! Corpus ingestion: raw text lines reduced to a word-frequency table.
//!
//! Words are whitespace-delimited and split into characters. The end-of-word
//! marker is fused onto the final character (`low` becomes `l o w</w>`), which
//! is the convention of version 0.2 merge files.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::io::{BufRead, Write};

use rayon::prelude::*;

use crate::error::{Error, Result};

pub const DEFAULT_END_OF_WORD: &str = "</w>";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WhitespaceRule {
    /// Split on any Unicode `White_Space` codepoint.
    #[default]
    UnicodeWhitespace,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PretokenConfig {
    pub lowercase: bool,
    pub end_of_word_marker: String,
    pub whitespace: WhitespaceRule,
}

impl Default for PretokenConfig {
    fn default() -> Self {
        Self {
            lowercase: false,
            end_of_word_marker: DEFAULT_END_OF_WORD.to_string(),
            whitespace: WhitespaceRule::UnicodeWhitespace,
        }
    }
}

impl PretokenConfig {
    pub fn validate(&self) -> Result<()> {
        if self.end_of_word_marker.is_empty() {
            return Err(Error::InvalidArgument(
                "end-of-word marker must be non-empty".into(),
            ));
        }
        Ok(())
    }

    /// Raw words of one line, before case folding.
    pub fn split_line<'a>(&self, line: &'a str) -> impl Iterator<Item = &'a str> {
        match self.whitespace {
            WhitespaceRule::UnicodeWhitespace => line.split_whitespace(),
        }
    }

    /// Turns one raw word into its symbol sequence.
    pub fn word(&self, raw: &str) -> Result<Word> {
        let folded;
        let raw = if self.lowercase {
            folded = raw.to_lowercase();
            folded.as_str()
        } else {
            raw
        };
        if raw.contains(self.end_of_word_marker.as_str()) {
            return Err(Error::MarkerInWord {
                word: raw.to_string(),
                marker: self.end_of_word_marker.clone(),
            });
        }
        Word::from_chars(raw, &self.end_of_word_marker)
            .ok_or_else(|| Error::InvalidArgument("empty word".into()))
    }

    pub fn words(&self, line: &str) -> Result<Vec<Word>> {
        self.split_line(line).map(|w| self.word(w)).collect()
    }
}

/// A word as a sequence of atomic symbols; the last symbol carries the
/// end-of-word marker.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word(Vec<String>);

impl Word {
    /// Returns `None` for an empty string.
    pub fn from_chars(raw: &str, marker: &str) -> Option<Word> {
        let mut symbols: Vec<String> = raw.chars().map(String::from).collect();
        symbols.last_mut()?.push_str(marker);
        Some(Word(symbols))
    }

    pub fn from_symbols<I, S>(symbols: I) -> Word
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Word(symbols.into_iter().map(Into::into).collect())
    }

    pub fn symbols(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Concatenated symbol strings, marker included.
    pub fn surface(&self) -> String {
        self.0.concat()
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.0 {
            f.write_str(s)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WordFrequencyTable {
    config: PretokenConfig,
    entries: BTreeMap<Word, u64>,
    total_words: u64,
    alphabet: BTreeSet<String>,
}

impl WordFrequencyTable {
    pub fn empty(config: PretokenConfig) -> Self {
        Self {
            config,
            entries: BTreeMap::new(),
            total_words: 0,
            alphabet: BTreeSet::new(),
        }
    }

    /// Reads a line stream. An empty stream gives an empty table; callers that
    /// need data (training, length statistics) reject it there.
    pub fn ingest<R: BufRead>(reader: R, config: PretokenConfig) -> Result<Self> {
        config.validate()?;
        let mut table = Self::empty(config);
        for line in reader.lines() {
            let line = line?;
            for raw in table.config.split_line(&line) {
                let word = table.config.word(raw)?;
                table.add(word, 1);
            }
        }
        Ok(table)
    }

    pub fn from_text(text: &str, config: PretokenConfig) -> Result<Self> {
        Self::ingest(text.as_bytes(), config)
    }

    /// Same result as [`ingest`](Self::ingest), counting lines on the rayon pool.
    pub fn from_lines_par<S>(lines: &[S], config: PretokenConfig) -> Result<Self>
    where
        S: AsRef<str> + Sync,
    {
        config.validate()?;
        let counts = lines
            .par_iter()
            .try_fold(HashMap::<Word, u64>::new, |mut acc, line| {
                for raw in config.split_line(line.as_ref()) {
                    *acc.entry(config.word(raw)?).or_default() += 1;
                }
                Ok::<_, Error>(acc)
            })
            .try_reduce(HashMap::new, |mut a, b| {
                for (w, c) in b {
                    *a.entry(w).or_default() += c;
                }
                Ok(a)
            })?;
        Self::from_counts(counts, config)
    }

    /// Builds a table from explicit counts. Zero counts are dropped.
    pub fn from_counts<I>(counts: I, config: PretokenConfig) -> Result<Self>
    where
        I: IntoIterator<Item = (Word, u64)>,
    {
        config.validate()?;
        let mut table = Self::empty(config);
        for (word, count) in counts {
            if word.is_empty() {
                return Err(Error::InvalidArgument("empty word".into()));
            }
            if count > 0 {
                table.add(word, count);
            }
        }
        Ok(table)
    }

    fn add(&mut self, word: Word, count: u64) {
        for s in word.symbols() {
            if !self.alphabet.contains(s) {
                self.alphabet.insert(s.clone());
            }
        }
        *self.entries.entry(word).or_default() += count;
        self.total_words += count;
    }

    /// Sums counts per word over tables built with the same configuration.
    pub fn concat(tables: &[WordFrequencyTable]) -> Result<Self> {
        let first = tables
            .first()
            .ok_or_else(|| Error::InvalidArgument("no tables to concatenate".into()))?;
        let mut joint = Self::empty(first.config.clone());
        for t in tables {
            if t.config != first.config {
                return Err(Error::ConfigMismatch(format!(
                    "{:?} vs {:?}",
                    first.config, t.config
                )));
            }
            for (w, &c) in &t.entries {
                joint.add(w.clone(), c);
            }
        }
        Ok(joint)
    }

    /// Every count multiplied by `factor`.
    pub fn scaled(&self, factor: u64) -> Self {
        let mut out = self.clone();
        for c in out.entries.values_mut() {
            *c *= factor;
        }
        out.total_words *= factor;
        out
    }

    pub fn config(&self) -> &PretokenConfig {
        &self.config
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = (&Word, u64)> {
        self.entries.iter().map(|(w, &c)| (w, c))
    }

    pub fn count(&self, word: &Word) -> u64 {
        self.entries.get(word).copied().unwrap_or(0)
    }

    /// Number of distinct words.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total_words(&self) -> u64 {
        self.total_words
    }

    pub fn alphabet(&self) -> &BTreeSet<String> {
        &self.alphabet
    }

    /// Debug dump, `word<TAB>count` per line in word order.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> Result<()> {
        for (w, c) in &self.entries {
            writeln!(out, "{w}\t{c}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cfg() -> PretokenConfig {
        PretokenConfig::default()
    }

    fn w(symbols: &[&str]) -> Word {
        Word::from_symbols(symbols.iter().copied())
    }

    #[test]
    fn empty_input_gives_empty_table() {
        let t = WordFrequencyTable::from_text("", cfg()).unwrap();
        assert!(t.is_empty());
        assert!(t.alphabet().is_empty());
        assert_eq!(t.total_words(), 0);
    }

    #[test]
    fn repeated_word_is_counted() {
        let t = WordFrequencyTable::from_text("low low\nlow", cfg()).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t.count(&w(&["l", "o", "w</w>"])), 3);
        let alpha: Vec<_> = t.alphabet().iter().map(String::as_str).collect();
        assert_eq!(alpha, ["l", "o", "w</w>"]);
    }

    #[test]
    fn single_character_words() {
        let t = WordFrequencyTable::from_text("a b a", cfg()).unwrap();
        assert_eq!(t.count(&w(&["a</w>"])), 2);
        assert_eq!(t.count(&w(&["b</w>"])), 1);
        assert_eq!(t.total_words(), 3);
    }

    #[test]
    fn lowercase_flag() {
        let c = PretokenConfig {
            lowercase: true,
            ..cfg()
        };
        let t = WordFrequencyTable::from_text("Low LOW low", c).unwrap();
        assert_eq!(t.count(&w(&["l", "o", "w</w>"])), 3);
    }

    #[test]
    fn punctuation_stays_attached() {
        let t = WordFrequencyTable::from_text("end.", cfg()).unwrap();
        assert_eq!(t.count(&w(&["e", "n", "d", ".</w>"])), 1);
    }

    #[test]
    fn marker_inside_word_is_rejected() {
        let err = WordFrequencyTable::from_text("a</w>b", cfg()).unwrap_err();
        assert!(matches!(err, Error::MarkerInWord { .. }));
    }

    #[test]
    fn empty_marker_is_rejected() {
        let c = PretokenConfig {
            end_of_word_marker: String::new(),
            ..cfg()
        };
        assert!(WordFrequencyTable::from_text("a", c).is_err());
    }

    #[test]
    fn concat_sums_and_unions() {
        let a = WordFrequencyTable::from_text("a", cfg()).unwrap();
        let b = WordFrequencyTable::from_text("a a", cfg()).unwrap();
        let j = WordFrequencyTable::concat(&[a.clone(), b]).unwrap();
        assert_eq!(j.count(&w(&["a</w>"])), 3);
        assert_eq!(WordFrequencyTable::concat(std::slice::from_ref(&a)).unwrap(), a);
    }

    #[test]
    fn concat_joint_alphabet_is_union() {
        let de = WordFrequencyTable::from_text("haus maus", cfg()).unwrap();
        let en = WordFrequencyTable::from_text("house mouse", cfg()).unwrap();
        let j = WordFrequencyTable::concat(&[de.clone(), en.clone()]).unwrap();
        let union: BTreeSet<String> = de.alphabet().union(en.alphabet()).cloned().collect();
        assert_eq!(j.alphabet(), &union);
        assert_eq!(j.total_words(), 4);
    }

    #[test]
    fn concat_rejects_mismatched_configs() {
        let a = WordFrequencyTable::from_text("a", cfg()).unwrap();
        let b = WordFrequencyTable::from_text(
            "a",
            PretokenConfig {
                lowercase: true,
                ..cfg()
            },
        )
        .unwrap();
        assert!(matches!(
            WordFrequencyTable::concat(&[a, b]),
            Err(Error::ConfigMismatch(_))
        ));
        assert!(WordFrequencyTable::concat(&[]).is_err());
    }

    #[test]
    fn tsv_dump() {
        let t = WordFrequencyTable::from_text("b a a", cfg()).unwrap();
        let mut out = Vec::new();
        t.write_tsv(&mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "a</w>\t2\nb</w>\t1\n");
    }

    fn lines_strategy() -> impl Strategy<Value = Vec<String>> {
        prop::collection::vec("[abc é]{0,12}", 0..12)
    }

    proptest! {
        #[test]
        fn split_at_line_boundary_is_additive(lines in lines_strategy(), cut in 0usize..12) {
            let cut = cut.min(lines.len());
            let whole = WordFrequencyTable::from_text(&lines.join("\n"), cfg()).unwrap();
            let p1 = WordFrequencyTable::from_text(&lines[..cut].join("\n"), cfg()).unwrap();
            let p2 = WordFrequencyTable::from_text(&lines[cut..].join("\n"), cfg()).unwrap();
            prop_assert_eq!(&whole, &WordFrequencyTable::concat(&[p1, p2]).unwrap());
            let par = WordFrequencyTable::from_lines_par(&lines, cfg()).unwrap();
            prop_assert_eq!(&whole, &par);
        }

        #[test]
        fn table_invariants(lines in lines_strategy()) {
            let t = WordFrequencyTable::from_text(&lines.join("\n"), cfg()).unwrap();
            let sum: u64 = t.iter().map(|(_, c)| c).sum();
            prop_assert_eq!(sum, t.total_words());
            for (w, c) in t.iter() {
                prop_assert!(c > 0);
                for s in w.symbols() {
                    prop_assert!(t.alphabet().contains(s));
                }
            }
        }
    }
}
