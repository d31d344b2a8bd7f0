//! Threshold vocabulary trimming.
//!
//! Non-atomic tokens occurring at most `threshold` times in the tokenized
//! training corpus are removed from the vocabulary. At inference each removed
//! token is replaced by the recursive decomposition of its origin pair, so the
//! merge list itself is left untouched.

use std::collections::{BTreeSet, HashMap};

use crate::corpus::{Word, WordFrequencyTable};
use crate::error::{Error, Result};
use crate::model::{BpeModel, TokenId};
use crate::tokenizer::{Piece, TokenCounts, TokenSequence, Tokenize};

/// Trimming parameters. A threshold of 0 means no trimming at all, so zero-count
/// intermediate tokens are only removed once the threshold is at least 1.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct TrimSpec {
    pub threshold: u64,
    /// Keep tokens that are neither half of any merge rule, whatever their count.
    pub preserve_terminals: bool,
}

impl TrimSpec {
    pub fn new(threshold: u64, preserve_terminals: bool) -> Self {
        Self {
            threshold,
            preserve_terminals,
        }
    }
}

/// All non-atomic tokens with `c_v <= threshold` (none when the threshold is
/// 0), minus structural terminals when `preserve_terminals` is set.
pub fn compute_trim_set(
    model: &BpeModel,
    counts: &TokenCounts,
    spec: TrimSpec,
) -> Result<BTreeSet<String>> {
    let mut removed = BTreeSet::new();
    for (id, token) in model.vocab().enumerate() {
        let count = counts
            .get(token)
            .ok_or_else(|| Error::Inconsistent(format!("token {token:?} has no count")))?;
        let id = id as TokenId;
        if spec.threshold == 0 || model.is_atomic_id(id) || count > spec.threshold {
            continue;
        }
        if spec.preserve_terminals && model.is_terminal_id(id) {
            continue;
        }
        removed.insert(token.to_string());
    }
    Ok(removed)
}

/// A base model plus the set of tokens removed from its vocabulary.
#[derive(Debug, Clone)]
pub struct TrimmedModel {
    base: BpeModel,
    spec: TrimSpec,
    removed: BTreeSet<String>,
    removed_ids: Vec<bool>,
    // removed id -> effective-vocabulary ids, computed eagerly
    decomposition: HashMap<TokenId, Vec<TokenId>>,
}

impl PartialEq for TrimmedModel {
    fn eq(&self, other: &Self) -> bool {
        self.base == other.base && self.spec == other.spec && self.removed == other.removed
    }
}

impl Eq for TrimmedModel {}

impl TrimmedModel {
    pub fn trim(base: BpeModel, counts: &TokenCounts, spec: TrimSpec) -> Result<Self> {
        let removed = compute_trim_set(&base, counts, spec)?;
        Self::from_removed(base, spec, removed)
    }

    /// Trims with counts taken from `table` tokenized by `base`.
    pub fn trim_on(base: BpeModel, table: &WordFrequencyTable, spec: TrimSpec) -> Result<Self> {
        let counts = crate::tokenizer::token_counts(&base, table);
        Self::trim(base, &counts, spec)
    }

    /// A trimmed model with nothing removed.
    pub fn untrimmed(base: BpeModel) -> Self {
        Self::from_removed(base, TrimSpec::default(), std::iter::empty::<String>())
            .expect("empty removed set is always valid")
    }

    /// Builds a trimmed model from an explicit removed set, e.g. one read back
    /// from a manifest.
    pub fn from_removed<I, S>(base: BpeModel, spec: TrimSpec, removed: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut removed_ids = vec![false; base.vocab_size()];
        let mut set = BTreeSet::new();
        for token in removed {
            let token = token.into();
            let id = base.id(&token).ok_or_else(|| {
                Error::Inconsistent(format!("removed token {token:?} is not in the vocabulary"))
            })?;
            if base.is_atomic_id(id) {
                return Err(Error::Inconsistent(format!(
                    "atomic symbol {token:?} cannot be removed"
                )));
            }
            removed_ids[id as usize] = true;
            set.insert(token);
        }

        // Origin halves always have smaller ids, so ascending order sees every
        // dependency before it is needed.
        let mut decomposition: HashMap<TokenId, Vec<TokenId>> = HashMap::new();
        for id in (0..base.vocab_size() as TokenId).filter(|&i| removed_ids[i as usize]) {
            let (l, r) = base
                .origin_id(id)
                .expect("non-atomic tokens have an origin pair");
            let mut parts = Vec::new();
            for half in [l, r] {
                match decomposition.get(&half) {
                    Some(d) => parts.extend_from_slice(d),
                    None => parts.push(half),
                }
            }
            decomposition.insert(id, parts);
        }

        Ok(Self {
            base,
            spec,
            removed: set,
            removed_ids,
            decomposition,
        })
    }

    pub fn base(&self) -> &BpeModel {
        &self.base
    }

    pub fn spec(&self) -> TrimSpec {
        self.spec
    }

    /// `X_{B,T}`.
    pub fn removed(&self) -> &BTreeSet<String> {
        &self.removed
    }

    pub fn is_removed(&self, token: &str) -> bool {
        self.base
            .id(token)
            .is_some_and(|id| self.removed_ids[id as usize])
    }

    /// `V \ X`, in id order.
    pub fn effective_vocab(&self) -> impl Iterator<Item = &str> {
        self.base
            .vocab()
            .enumerate()
            .filter(|(id, _)| !self.removed_ids[*id])
            .map(|(_, t)| t)
    }

    pub fn effective_vocab_size(&self) -> usize {
        self.base.vocab_size() - self.removed.len()
    }

    /// Recursive decomposition of a single token. Tokens that are kept, and
    /// strings outside the vocabulary, come back unchanged.
    pub fn dec(&self, token: &str) -> TokenSequence {
        match self.base.id(token) {
            Some(id) => {
                let mut seq = TokenSequence::new();
                self.push_decomposed(id, &mut seq);
                seq
            }
            None => {
                let mut seq = TokenSequence::new();
                seq.push(token, true);
                seq
            }
        }
    }

    fn push_decomposed(&self, id: TokenId, out: &mut TokenSequence) {
        match self.decomposition.get(&id) {
            Some(parts) => {
                for &p in parts {
                    out.push(self.base.token(p), false);
                }
            }
            None => out.push(self.base.token(id), false),
        }
    }

    /// Applies `dec` to every token of an already tokenized sequence.
    pub fn decompose(&self, seq: &TokenSequence) -> TokenSequence {
        let mut out = TokenSequence::new();
        for (tok, unknown) in seq.iter() {
            match self.base.id(tok) {
                Some(id) if !unknown => self.push_decomposed(id, &mut out),
                _ => out.push(tok, unknown),
            }
        }
        out
    }

    /// `c_v` over the trimmed tokenization of `table`, for every token of the
    /// effective vocabulary.
    pub fn token_counts(&self, table: &WordFrequencyTable) -> TokenCounts {
        let mut per_id = vec![0u64; self.base.vocab_size()];
        for (word, count) in table.iter() {
            for p in self.base.encode(word) {
                if let Piece::Known(id) = p {
                    match self.decomposition.get(&id) {
                        Some(parts) => parts.iter().for_each(|&q| per_id[q as usize] += count),
                        None => per_id[id as usize] += count,
                    }
                }
            }
        }
        TokenCounts::from_map(
            self.base
                .vocab()
                .zip(per_id)
                .enumerate()
                .filter(|(id, _)| !self.removed_ids[*id])
                .map(|(_, (t, c))| (t.to_string(), c))
                .collect(),
        )
    }
}

impl Tokenize for TrimmedModel {
    /// `B'(z) = dec(B(z))`.
    fn tokenize_word(&self, word: &Word) -> TokenSequence {
        let mut out = TokenSequence::new();
        for p in self.base.encode(word) {
            match p {
                Piece::Known(id) => self.push_decomposed(id, &mut out),
                Piece::Unknown(s) => out.push(s, true),
            }
        }
        out
    }
}

/// For each language, the tokens of the joint model that occur at least once
/// in that language's tokenized corpus.
pub fn per_language_effective_vocab(
    model: &BpeModel,
    counts_per_language: &[TokenCounts],
) -> Result<Vec<BTreeSet<String>>> {
    if counts_per_language.is_empty() {
        return Err(Error::InvalidArgument(
            "need counts for at least one language".into(),
        ));
    }
    counts_per_language
        .iter()
        .map(|counts| {
            model
                .vocab()
                .map(|t| match counts.get(t) {
                    Some(c) => Ok((t, c)),
                    None => Err(Error::Inconsistent(format!("token {t:?} has no count"))),
                })
                .filter_map(|r| match r {
                    Ok((t, c)) if c >= 1 => Some(Ok(t.to_string())),
                    Ok(_) => None,
                    Err(e) => Some(Err(e)),
                })
                .collect()
        })
        .collect()
}

/// Effective vocabulary of one side in the joint setting: tokens the trimmed
/// model actually emits on that side's corpus.
pub fn joint_side_vocab(trimmed: &TrimmedModel, table: &WordFrequencyTable) -> BTreeSet<String> {
    trimmed
        .token_counts(table)
        .iter()
        .filter(|(_, c)| *c >= 1)
        .map(|(t, _)| t.to_string())
        .collect()
}
