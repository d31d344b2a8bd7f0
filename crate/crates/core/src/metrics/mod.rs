//! Tokenization-side measurements: effective vocabulary, sequence length,
//! count percentiles, the vocabulary-size heuristic, embedding parameter
//! share and rare-subword sentence subsets.

use std::io::BufRead;

use rayon::prelude::*;

use crate::corpus::{PretokenConfig, WordFrequencyTable};
use crate::error::{Error, Result};
use crate::tokenizer::{token_counts, CachedTokenizer, TokenCounts, Tokenize};
use crate::trainer::learn;
use crate::trimmer::TrimmedModel;

mod report;

pub use report::{build_report, ReportSettings, SideInput, SideReport, TrimReport};

/// `(|V_s'|, |V_t'|)`.
pub fn effective_sizes(source: &TrimmedModel, target: &TrimmedModel) -> (usize, usize) {
    (source.effective_vocab_size(), target.effective_vocab_size())
}

/// Token and line totals of a tokenized corpus.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SequenceLength {
    pub tokens: u64,
    pub lines: u64,
}

impl SequenceLength {
    /// Average tokens per line.
    pub fn mean(&self) -> f64 {
        self.tokens as f64 / self.lines as f64
    }
}

/// Tokens per line over a line stream. Blank lines count as lines.
pub fn avg_sequence_length<T, R>(
    tokenizer: &T,
    reader: R,
    config: &PretokenConfig,
) -> Result<SequenceLength>
where
    T: Tokenize + ?Sized,
    R: BufRead,
{
    let lines = reader.lines().collect::<std::io::Result<Vec<_>>>()?;
    sequence_length(tokenizer, &lines, config)
}

/// Same as [`avg_sequence_length`] over lines already in memory; lines are
/// tokenized in parallel through a shared word cache.
pub fn sequence_length<T, S>(
    tokenizer: &T,
    lines: &[S],
    config: &PretokenConfig,
) -> Result<SequenceLength>
where
    T: Tokenize + ?Sized,
    S: AsRef<str> + Sync,
{
    if lines.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let cached = CachedTokenizer::new(tokenizer);
    let tokens = lines
        .par_iter()
        .map(|l| cached.count_line(l.as_ref(), config).map(|n| n as u64))
        .try_reduce(|| 0, |a, b| Ok(a + b))?;
    Ok(SequenceLength {
        tokens,
        lines: lines.len() as u64,
    })
}

/// `100 * (trimmed - base) / base`.
pub fn relative_delta(base: f64, trimmed: f64) -> f64 {
    100.0 * (trimmed - base) / base
}

/// Fraction of vocabulary tokens (atomic symbols included) with a count above
/// `count_floor`. Empty counts give 0.
pub fn frequency_percentile(counts: &TokenCounts, count_floor: u64) -> f64 {
    pooled_frequency_percentile(&[counts], count_floor)
}

/// [`frequency_percentile`] over the union of several vocabularies, each token
/// occurrence counted once per vocabulary.
pub fn pooled_frequency_percentile(counts: &[&TokenCounts], count_floor: u64) -> f64 {
    let total: usize = counts.iter().map(|c| c.len()).sum();
    if total == 0 {
        return 0.0;
    }
    let above: usize = counts
        .iter()
        .map(|c| c.iter().filter(|&(_, n)| n > count_floor).count())
        .sum();
    above as f64 / total as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SearchMode {
    /// Train once at the largest candidate and truncate its merge list.
    #[default]
    MergePrefix,
    /// Train separately for every candidate.
    FullRetrain,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CandidateEval {
    pub requested: usize,
    pub vocab_size: usize,
    pub percentile: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeuristicChoice {
    pub chosen: usize,
    /// False when no candidate qualified and the smallest was returned.
    pub qualified: bool,
    pub evaluations: Vec<CandidateEval>,
}

/// Picks the largest candidate size whose trained model has more than
/// `percentile` of its tokens occurring more than `count_floor` times.
pub fn heuristic_vocab_search(
    table: &WordFrequencyTable,
    candidates: &[usize],
    percentile: f64,
    count_floor: u64,
    mode: SearchMode,
) -> Result<HeuristicChoice> {
    let (&largest, &smallest) = match (candidates.last(), candidates.first()) {
        (Some(l), Some(s)) => (l, s),
        _ => return Err(Error::InvalidArgument("no candidate sizes".into())),
    };
    if candidates.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument(
            "candidate sizes must be strictly ascending".into(),
        ));
    }
    let maximal = match mode {
        SearchMode::MergePrefix => Some(learn(table, largest)?),
        SearchMode::FullRetrain => None,
    };
    let mut evaluations = Vec::with_capacity(candidates.len());
    for &size in candidates {
        let model = match &maximal {
            Some(m) => {
                if size < table.alphabet().len() {
                    return Err(Error::InvalidSize {
                        target: size,
                        alphabet: table.alphabet().len(),
                    });
                }
                m.truncated(size)
            }
            None => learn(table, size)?,
        };
        let counts = token_counts(&model, table);
        evaluations.push(CandidateEval {
            requested: size,
            vocab_size: model.vocab_size(),
            percentile: frequency_percentile(&counts, count_floor),
        });
    }
    let best = evaluations
        .iter()
        .rev()
        .find(|e| e.percentile > percentile)
        .map(|e| e.requested);
    if best.is_none() {
        log::warn!("no candidate size reaches the requested percentile; using {smallest}");
    }
    Ok(HeuristicChoice {
        chosen: best.unwrap_or(smallest),
        qualified: best.is_some(),
        evaluations,
    })
}

/// Share of parameters, in percent, held by embedding and output layers:
/// `100 * (s + t) * d / (core + (s + t) * d)`.
pub fn param_fraction(eff_src: usize, eff_tgt: usize, embed_dim: usize, core_params: u64) -> f64 {
    let embed = (eff_src + eff_tgt) as f64 * embed_dim as f64;
    100.0 * embed / (core_params as f64 + embed)
}

/// Base and trimmed tokenizer for one side of a sentence-pair corpus.
#[derive(Clone, Copy)]
pub struct SideTokenizers<'a> {
    pub base: &'a dyn Tokenize,
    pub trimmed: &'a dyn Tokenize,
    pub config: &'a PretokenConfig,
}

impl SideTokenizers<'_> {
    fn differs(&self, line: &str) -> Result<bool> {
        Ok(self.base.tokenize_line(line, self.config)?
            != self.trimmed.tokenize_line(line, self.config)?)
    }
}

/// Indices into the test set for each subset. A pair is mismatched on a side
/// when trimming changes the tokenization of that side's sentence.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RareSentenceSplit {
    pub source_mismatch: Vec<usize>,
    pub source_match: Vec<usize>,
    pub target_mismatch: Vec<usize>,
    pub target_match: Vec<usize>,
    pub both_mismatch: Vec<usize>,
}

impl RareSentenceSplit {
    pub const NAMES: [&'static str; 5] = [
        "source-mismatch",
        "source-match",
        "target-mismatch",
        "target-match",
        "both-mismatch",
    ];

    /// Subsets in [`NAMES`](Self::NAMES) order.
    pub fn subsets(&self) -> [&[usize]; 5] {
        [
            &self.source_mismatch,
            &self.source_match,
            &self.target_mismatch,
            &self.target_match,
            &self.both_mismatch,
        ]
    }
}

pub fn rare_sentence_split<S: AsRef<str> + Sync>(
    pairs: &[(S, S)],
    source: SideTokenizers<'_>,
    target: SideTokenizers<'_>,
) -> Result<RareSentenceSplit> {
    let flags = pairs
        .par_iter()
        .map(|(s, t)| Ok((source.differs(s.as_ref())?, target.differs(t.as_ref())?)))
        .collect::<Result<Vec<_>>>()?;
    let mut split = RareSentenceSplit::default();
    for (i, (src, tgt)) in flags.into_iter().enumerate() {
        if src {
            split.source_mismatch.push(i);
        } else {
            split.source_match.push(i);
        }
        if tgt {
            split.target_mismatch.push(i);
        } else {
            split.target_match.push(i);
        }
        if src && tgt {
            split.both_mismatch.push(i);
        }
    }
    Ok(split)
}
