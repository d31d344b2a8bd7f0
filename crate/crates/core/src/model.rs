//! The trained BPE model: atomic alphabet, ordered merge list and the
//! vocabulary they induce.

use std::collections::{BTreeSet, HashMap};

use crate::corpus::DEFAULT_END_OF_WORD;
use crate::error::{Error, Result};

pub type TokenId = u32;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MergeRule {
    pub rank: usize,
    pub left: String,
    pub right: String,
    pub merged: String,
}

/// A BPE tokenizer `(V, M)`.
///
/// Token ids are dense: the alphabet comes first in sorted order, then each
/// newly created token in merge order. Because a rule can only use tokens that
/// already exist, both halves of an origin pair always have smaller ids than
/// the token they build.
#[derive(Debug, Clone)]
pub struct BpeModel {
    marker: String,
    alphabet: BTreeSet<String>,
    merges: Vec<MergeRule>,

    surfaces: Vec<String>,
    ids: HashMap<String, TokenId>,
    origin: Vec<Option<(TokenId, TokenId)>>,
    rules: HashMap<(TokenId, TokenId), (u32, TokenId)>,
    // ids that appear as the left or right half of some rule
    in_rule: Vec<bool>,
}

impl PartialEq for BpeModel {
    fn eq(&self, other: &Self) -> bool {
        self.marker == other.marker
            && self.alphabet == other.alphabet
            && self.merges == other.merges
    }
}

impl Eq for BpeModel {}

impl BpeModel {
    /// Builds a model from an alphabet and `(left, right)` pairs in rank order.
    ///
    /// Every rule must reference tokens that are atomic or produced by an
    /// earlier rule, and no pair may appear twice.
    pub fn new<A, P>(alphabet: A, pairs: P, marker: &str) -> Result<Self>
    where
        A: IntoIterator<Item = String>,
        P: IntoIterator<Item = (String, String)>,
    {
        let alphabet: BTreeSet<String> = alphabet.into_iter().collect();
        let mut model = BpeModel {
            marker: marker.to_string(),
            alphabet: BTreeSet::new(),
            merges: Vec::new(),
            surfaces: Vec::with_capacity(alphabet.len()),
            ids: HashMap::with_capacity(alphabet.len()),
            origin: Vec::new(),
            rules: HashMap::new(),
            in_rule: Vec::new(),
        };
        for sym in &alphabet {
            if sym.is_empty() {
                return Err(Error::InvalidArgument("empty atomic symbol".into()));
            }
            model.intern(sym.clone(), None);
        }
        model.alphabet = alphabet;
        for (left, right) in pairs {
            model.push_rule(left, right)?;
        }
        Ok(model)
    }

    fn intern(&mut self, surface: String, origin: Option<(TokenId, TokenId)>) -> TokenId {
        if let Some(&id) = self.ids.get(&surface) {
            return id;
        }
        let id = self.surfaces.len() as TokenId;
        self.ids.insert(surface.clone(), id);
        self.surfaces.push(surface);
        self.origin.push(origin);
        self.in_rule.push(false);
        id
    }

    fn push_rule(&mut self, left: String, right: String) -> Result<()> {
        let lookup = |s: &str| {
            self.ids
                .get(s)
                .copied()
                .ok_or_else(|| Error::Inconsistent(format!("merge uses undefined token {s:?}")))
        };
        let l = lookup(&left)?;
        let r = lookup(&right)?;
        if self.rules.contains_key(&(l, r)) {
            return Err(Error::Inconsistent(format!(
                "pair ({left}, {right}) merged twice"
            )));
        }
        let merged = format!("{left}{right}");
        let rank = self.merges.len();
        // a surface that already exists keeps its first origin pair
        let m = self.intern(merged.clone(), Some((l, r)));
        self.rules.insert((l, r), (rank as u32, m));
        self.in_rule[l as usize] = true;
        self.in_rule[r as usize] = true;
        self.merges.push(MergeRule {
            rank,
            left,
            right,
            merged,
        });
        Ok(())
    }

    /// A model without merges.
    pub fn from_alphabet<A: IntoIterator<Item = String>>(alphabet: A) -> Result<Self> {
        Self::new(alphabet, std::iter::empty(), DEFAULT_END_OF_WORD)
    }

    /// Same merges over a larger alphabet.
    pub fn with_alphabet<A: IntoIterator<Item = String>>(&self, extra: A) -> Result<Self> {
        let alphabet = self.alphabet.iter().cloned().chain(extra);
        Self::new(alphabet, self.pairs(), &self.marker)
    }

    /// The prefix of the merge list a training run stopping at `target_size`
    /// tokens would have produced.
    pub fn truncated(&self, target_size: usize) -> Self {
        let mut model = Self::new(
            self.alphabet.iter().cloned(),
            std::iter::empty(),
            &self.marker,
        )
        .expect("alphabet already validated");
        for (left, right) in self.pairs() {
            if model.vocab_size() >= target_size {
                break;
            }
            model
                .push_rule(left, right)
                .expect("prefix of a valid merge list");
        }
        model
    }

    fn pairs(&self) -> impl Iterator<Item = (String, String)> + '_ {
        self.merges
            .iter()
            .map(|m| (m.left.clone(), m.right.clone()))
    }

    pub fn marker(&self) -> &str {
        &self.marker
    }

    pub fn alphabet(&self) -> &BTreeSet<String> {
        &self.alphabet
    }

    pub fn merges(&self) -> &[MergeRule] {
        &self.merges
    }

    /// `|V|`, atomic symbols included.
    pub fn vocab_size(&self) -> usize {
        self.surfaces.len()
    }

    /// Tokens in id order.
    pub fn vocab(&self) -> impl ExactSizeIterator<Item = &str> {
        self.surfaces.iter().map(String::as_str)
    }

    pub fn contains(&self, token: &str) -> bool {
        self.ids.contains_key(token)
    }

    pub fn id(&self, token: &str) -> Option<TokenId> {
        self.ids.get(token).copied()
    }

    pub fn token(&self, id: TokenId) -> &str {
        &self.surfaces[id as usize]
    }

    pub fn is_atomic(&self, token: &str) -> bool {
        self.alphabet.contains(token)
    }

    pub fn is_atomic_id(&self, id: TokenId) -> bool {
        (id as usize) < self.alphabet.len()
    }

    /// The `(left, right)` pair that first produced `token`.
    pub fn origin(&self, token: &str) -> Option<(&str, &str)> {
        let (l, r) = self.origin_id(self.id(token)?)?;
        Some((self.token(l), self.token(r)))
    }

    pub fn origin_id(&self, id: TokenId) -> Option<(TokenId, TokenId)> {
        self.origin[id as usize]
    }

    pub(crate) fn rule(&self, left: TokenId, right: TokenId) -> Option<(u32, TokenId)> {
        self.rules.get(&(left, right)).copied()
    }

    /// A token that is not the left or right half of any merge rule.
    pub fn is_terminal(&self, token: &str) -> bool {
        self.id(token).is_some_and(|id| !self.in_rule[id as usize])
    }

    pub(crate) fn is_terminal_id(&self, id: TokenId) -> bool {
        !self.in_rule[id as usize]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(x: &str) -> String {
        x.to_string()
    }

    fn toy() -> BpeModel {
        BpeModel::new(
            ["a", "b", "c</w>"].map(s),
            [(s("a"), s("b")), (s("ab"), s("c</w>"))],
            DEFAULT_END_OF_WORD,
        )
        .unwrap()
    }

    #[test]
    fn vocab_is_alphabet_plus_merged() {
        let m = toy();
        assert_eq!(
            m.vocab().collect::<Vec<_>>(),
            ["a", "b", "c</w>", "ab", "abc</w>"]
        );
        assert_eq!(m.origin("abc</w>"), Some(("ab", "c</w>")));
        assert_eq!(m.origin("a"), None);
        assert!(m.is_atomic("b") && !m.is_atomic("ab"));
        assert_eq!(m.merges()[1].rank, 1);
    }

    #[test]
    fn terminals_are_structural() {
        let m = toy();
        assert!(m.is_terminal("abc</w>"));
        assert!(!m.is_terminal("ab"));
        assert!(!m.is_terminal("a"));
        assert!(!m.is_terminal("zzz"));
    }

    #[test]
    fn undefined_token_is_rejected() {
        let err = BpeModel::new(["a"].map(s), [(s("a"), s("q"))], "</w>").unwrap_err();
        assert!(matches!(err, Error::Inconsistent(_)));
    }

    #[test]
    fn duplicate_pair_is_rejected() {
        let err = BpeModel::new(["a"].map(s), [(s("a"), s("a")), (s("a"), s("a"))], "</w>");
        assert!(err.is_err());
    }

    #[test]
    fn same_surface_from_two_routes_keeps_first_origin() {
        let m = BpeModel::new(
            ["a", "b", "c"].map(s),
            [
                (s("a"), s("b")),
                (s("b"), s("c")),
                (s("ab"), s("c")),
                (s("a"), s("bc")),
            ],
            "</w>",
        )
        .unwrap();
        assert_eq!(m.vocab_size(), 6);
        assert_eq!(m.merges().len(), 4);
        assert_eq!(m.origin("abc"), Some(("ab", "c")));
    }

    #[test]
    fn truncation_counts_tokens() {
        let m = toy();
        assert_eq!(m.truncated(3).merges().len(), 0);
        assert_eq!(m.truncated(4).merges().len(), 1);
        assert_eq!(m.truncated(100), m);
    }

    #[test]
    fn extending_alphabet_keeps_merges() {
        let m = toy().with_alphabet([s("z")]).unwrap();
        assert_eq!(m.merges(), toy().merges());
        assert!(m.is_atomic("z"));
        assert_eq!(m.vocab_size(), 6);
    }
}
