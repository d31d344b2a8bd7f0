//! BPE vocabulary construction.
//!
//! Each step merges the adjacent pair with the highest corpus frequency
//! (weighted by word counts). Ties go to the lexicographically smallest
//! `(left, right)` pair of surface strings. Training stops once the vocabulary
//! holds `target_size` tokens or the best pair occurs fewer than
//! [`MIN_PAIR_COUNT`] times.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap, HashSet};
use std::rc::Rc;

use crate::corpus::WordFrequencyTable;
use crate::error::{Error, Result};
use crate::model::BpeModel;

pub const MIN_PAIR_COUNT: u64 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    ReachedTarget,
    /// No pair left with at least [`MIN_PAIR_COUNT`] occurrences.
    Exhausted,
}

/// A trained model together with the pair frequency each merge was chosen at.
#[derive(Debug, Clone)]
pub struct Training {
    pub model: BpeModel,
    pub merge_counts: Vec<u64>,
    pub stop: StopReason,
}

pub fn learn(table: &WordFrequencyTable, target_size: usize) -> Result<BpeModel> {
    learn_traced(table, target_size).map(|t| t.model)
}

/// Trains one model on the concatenation of several corpora.
pub fn learn_joint(tables: &[WordFrequencyTable], target_size: usize) -> Result<BpeModel> {
    learn(&WordFrequencyTable::concat(tables)?, target_size)
}

fn check_args(table: &WordFrequencyTable, target_size: usize) -> Result<()> {
    if table.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    if target_size < table.alphabet().len() {
        return Err(Error::InvalidSize {
            target: target_size,
            alphabet: table.alphabet().len(),
        });
    }
    Ok(())
}

type Pair = (u32, u32);

#[derive(Debug, PartialEq, Eq)]
struct Candidate {
    count: u64,
    left: Rc<str>,
    right: Rc<str>,
    pair: Pair,
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.count
            .cmp(&other.count)
            .then_with(|| other.left.cmp(&self.left))
            .then_with(|| other.right.cmp(&self.right))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

struct State {
    surfaces: Vec<Rc<str>>,
    ids: HashMap<Rc<str>, u32>,
    words: Vec<Vec<u32>>,
    counts: Vec<u64>,
    pair_counts: HashMap<Pair, u64>,
    occurs_in: HashMap<Pair, HashSet<usize>>,
    heap: BinaryHeap<Candidate>,
}

impl State {
    fn new(table: &WordFrequencyTable) -> Self {
        let mut st = State {
            surfaces: Vec::new(),
            ids: HashMap::new(),
            words: Vec::with_capacity(table.len()),
            counts: Vec::with_capacity(table.len()),
            pair_counts: HashMap::new(),
            occurs_in: HashMap::new(),
            heap: BinaryHeap::new(),
        };
        for sym in table.alphabet() {
            st.intern(sym);
        }
        for (idx, (word, count)) in table.iter().enumerate() {
            let ids: Vec<u32> = word.symbols().iter().map(|s| st.ids[s.as_str()]).collect();
            for p in ids.windows(2) {
                let pair = (p[0], p[1]);
                *st.pair_counts.entry(pair).or_default() += count;
                st.occurs_in.entry(pair).or_default().insert(idx);
            }
            st.words.push(ids);
            st.counts.push(count);
        }
        let pairs: Vec<(Pair, u64)> = st.pair_counts.iter().map(|(&p, &c)| (p, c)).collect();
        for (pair, count) in pairs {
            st.push(pair, count);
        }
        st
    }

    fn intern(&mut self, s: &str) -> u32 {
        if let Some(&id) = self.ids.get(s) {
            return id;
        }
        let id = self.surfaces.len() as u32;
        let rc: Rc<str> = Rc::from(s);
        self.surfaces.push(rc.clone());
        self.ids.insert(rc, id);
        id
    }

    fn push(&mut self, pair: Pair, count: u64) {
        self.heap.push(Candidate {
            count,
            left: self.surfaces[pair.0 as usize].clone(),
            right: self.surfaces[pair.1 as usize].clone(),
            pair,
        });
    }

    /// Best live candidate; stale heap entries are discarded on the way.
    fn pop_best(&mut self) -> Option<Candidate> {
        while let Some(c) = self.heap.pop() {
            if self.pair_counts.get(&c.pair) == Some(&c.count) {
                return Some(c);
            }
        }
        None
    }

    fn apply(&mut self, pair: Pair, merged: u32) {
        let Some(mut targets) = self.occurs_in.remove(&pair).map(Vec::from_iter) else {
            return;
        };
        targets.sort_unstable();
        let mut delta: HashMap<Pair, i128> = HashMap::new();
        for idx in targets {
            let old = &self.words[idx];
            if !old.windows(2).any(|w| (w[0], w[1]) == pair) {
                continue;
            }
            let new = merge_ids(old, pair, merged);
            let count = self.counts[idx] as i128;
            for w in old.windows(2) {
                *delta.entry((w[0], w[1])).or_default() -= count;
            }
            for w in new.windows(2) {
                let p = (w[0], w[1]);
                *delta.entry(p).or_default() += count;
                if p != pair {
                    self.occurs_in.entry(p).or_default().insert(idx);
                }
            }
            self.words[idx] = new;
        }
        let mut changed: Vec<(Pair, u64)> = Vec::new();
        for (p, d) in delta {
            if d == 0 {
                continue;
            }
            let cur = self.pair_counts.get(&p).copied().unwrap_or(0) as i128 + d;
            debug_assert!(cur >= 0);
            if cur == 0 {
                self.pair_counts.remove(&p);
            } else {
                self.pair_counts.insert(p, cur as u64);
                changed.push((p, cur as u64));
            }
        }
        debug_assert!(!self.pair_counts.contains_key(&pair));
        for (p, c) in changed {
            self.push(p, c);
        }
    }
}

/// Replaces non-overlapping occurrences of `pair`, scanning left to right.
fn merge_ids(word: &[u32], pair: Pair, merged: u32) -> Vec<u32> {
    let mut out = Vec::with_capacity(word.len());
    let mut i = 0;
    while i < word.len() {
        if i + 1 < word.len() && (word[i], word[i + 1]) == pair {
            out.push(merged);
            i += 2;
        } else {
            out.push(word[i]);
            i += 1;
        }
    }
    out
}

/// Incremental trainer: pair counts are maintained across merges and the best
/// pair is drawn from a lazily invalidated max-heap.
pub fn learn_traced(table: &WordFrequencyTable, target_size: usize) -> Result<Training> {
    check_args(table, target_size)?;
    let mut st = State::new(table);
    let mut vocab_size = st.surfaces.len();
    let mut pairs = Vec::new();
    let mut merge_counts = Vec::new();
    let mut stop = StopReason::ReachedTarget;

    while vocab_size < target_size {
        let best = match st.pop_best() {
            Some(c) if c.count >= MIN_PAIR_COUNT => c,
            _ => {
                stop = StopReason::Exhausted;
                break;
            }
        };
        let merged = format!("{}{}", best.left, best.right);
        let before = st.surfaces.len();
        let merged_id = st.intern(&merged);
        if st.surfaces.len() > before {
            vocab_size += 1;
        }
        st.apply(best.pair, merged_id);
        pairs.push((best.left.to_string(), best.right.to_string()));
        merge_counts.push(best.count);
        if pairs.len() % 1000 == 0 {
            log::debug!("{} merges, vocab {}", pairs.len(), vocab_size);
        }
    }

    let model = BpeModel::new(
        table.alphabet().iter().cloned(),
        pairs,
        &table.config().end_of_word_marker,
    )?;
    Ok(Training {
        model,
        merge_counts,
        stop,
    })
}

/// Full-recount trainer: every step recounts all pairs over the whole table.
///
/// Quadratic and only meant as a reference for checking [`learn_traced`].
pub fn learn_reference(table: &WordFrequencyTable, target_size: usize) -> Result<Training> {
    use std::collections::{BTreeMap, BTreeSet};

    check_args(table, target_size)?;
    let mut words: Vec<(Vec<String>, u64)> = table
        .iter()
        .map(|(w, c)| (w.symbols().to_vec(), c))
        .collect();
    let mut vocab: BTreeSet<String> = table.alphabet().clone();
    let mut pairs = Vec::new();
    let mut merge_counts = Vec::new();
    let mut stop = StopReason::ReachedTarget;

    while vocab.len() < target_size {
        let mut counts: BTreeMap<(&str, &str), u64> = BTreeMap::new();
        for (w, c) in &words {
            for p in w.windows(2) {
                *counts.entry((p[0].as_str(), p[1].as_str())).or_default() += c;
            }
        }
        // BTreeMap iterates smallest pair first, so a strict `>` keeps the
        // smallest pair among equal counts.
        let mut best: Option<((&str, &str), u64)> = None;
        for (&p, &c) in &counts {
            if best.is_none_or(|(_, bc)| c > bc) {
                best = Some((p, c));
            }
        }
        let ((l, r), c) = match best {
            Some(b) if b.1 >= MIN_PAIR_COUNT => b,
            _ => {
                stop = StopReason::Exhausted;
                break;
            }
        };
        let (l, r) = (l.to_string(), r.to_string());
        let merged = format!("{l}{r}");
        for (w, _) in words.iter_mut() {
            let mut out = Vec::with_capacity(w.len());
            let mut i = 0;
            while i < w.len() {
                if i + 1 < w.len() && w[i] == l && w[i + 1] == r {
                    out.push(merged.clone());
                    i += 2;
                } else {
                    out.push(std::mem::take(&mut w[i]));
                    i += 1;
                }
            }
            *w = out;
        }
        vocab.insert(merged);
        pairs.push((l, r));
        merge_counts.push(c);
    }

    let model = BpeModel::new(
        table.alphabet().iter().cloned(),
        pairs,
        &table.config().end_of_word_marker,
    )?;
    Ok(Training {
        model,
        merge_counts,
        stop,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{PretokenConfig, Word};
    use proptest::prelude::*;

    fn table(text: &str) -> WordFrequencyTable {
        WordFrequencyTable::from_text(text, PretokenConfig::default()).unwrap()
    }

    fn sennrich() -> WordFrequencyTable {
        let mut text = String::new();
        for (w, n) in [("low", 5), ("lower", 2), ("newest", 6), ("widest", 3)] {
            for _ in 0..n {
                text.push_str(w);
                text.push('\n');
            }
        }
        table(&text)
    }

    fn rule_pairs(m: &BpeModel) -> Vec<(&str, &str)> {
        m.merges()
            .iter()
            .map(|r| (r.left.as_str(), r.right.as_str()))
            .collect()
    }

    #[test]
    fn alphabet_already_at_target() {
        let t = table("a a a");
        let m = learn(&t, 1).unwrap();
        assert!(m.merges().is_empty());
        assert_eq!(m.vocab_size(), 1);
    }

    #[test]
    fn target_below_alphabet_is_rejected() {
        let t = table("ab");
        assert!(matches!(
            learn(&t, 1),
            Err(Error::InvalidSize {
                target: 1,
                alphabet: 2
            })
        ));
    }

    #[test]
    fn empty_table_is_rejected() {
        assert!(matches!(learn(&table(""), 5), Err(Error::EmptyCorpus)));
    }

    #[test]
    fn first_merge_on_sennrich_corpus() {
        // pair counts by hand: (e,s)=9, (s,t</w>)=9, (w,e)=8, (l,o)=7, (o,w)=7 ...
        let t = sennrich();
        let alpha = t.alphabet().len();
        let tr = learn_traced(&t, alpha + 1).unwrap();
        assert_eq!(rule_pairs(&tr.model), [("e", "s")]);
        assert_eq!(tr.merge_counts, [9]);
    }

    #[test]
    fn sennrich_full_run() {
        // after three merges (n,e), (e,w) and (w,est</w>) tie at 6
        let t = sennrich();
        let tr = learn_traced(&t, 100).unwrap();
        assert_eq!(tr.stop, StopReason::Exhausted);
        assert_eq!(
            rule_pairs(&tr.model)[..4],
            [("e", "s"), ("es", "t</w>"), ("l", "o"), ("e", "w")]
        );
        let reference = learn_reference(&t, 100).unwrap();
        assert_eq!(tr.model, reference.model);
        assert_eq!(tr.merge_counts, reference.merge_counts);
    }

    #[test]
    fn hapax_pairs_are_not_merged() {
        let t = table("ab cd");
        let tr = learn_traced(&t, 10).unwrap();
        assert!(tr.model.merges().is_empty());
        assert_eq!(tr.stop, StopReason::Exhausted);
    }

    #[test]
    fn overlapping_pairs_merge_left_to_right() {
        // a a a a</w>: (a,a) counted at two overlapping positions, merged once
        // at position 0, leaving aa a a</w> with (aa,a)=2 and (a,a</w>)=2
        let t = table("aaaa aaaa");
        let tr = learn_traced(&t, 10).unwrap();
        assert_eq!(rule_pairs(&tr.model)[..2], [("a", "a"), ("a", "a</w>")]);
        assert_eq!(tr.merge_counts[..2], [4, 2]);
    }

    #[test]
    fn joint_is_learn_on_concat() {
        let a = table("haus haus maus");
        let b = table("house mouse mouse");
        let j = learn_joint(&[a.clone(), b.clone()], 40).unwrap();
        let c = learn(&WordFrequencyTable::concat(&[a.clone(), b]).unwrap(), 40).unwrap();
        assert_eq!(j, c);
        assert_eq!(
            learn_joint(std::slice::from_ref(&a), 20).unwrap(),
            learn(&a, 20).unwrap()
        );
    }

    fn arb_table() -> impl Strategy<Value = WordFrequencyTable> {
        prop::collection::vec(("[abcd]{1,8}", 1u64..6), 1..20).prop_map(|entries| {
            let cfg = PretokenConfig::default();
            let words = entries
                .into_iter()
                .map(|(w, c)| (Word::from_chars(&w, "</w>").unwrap(), c));
            WordFrequencyTable::from_counts(words, cfg).unwrap()
        })
    }

    proptest! {
        #[test]
        fn incremental_matches_reference(t in arb_table(), extra in 0usize..30) {
            let target = t.alphabet().len() + extra;
            let fast = learn_traced(&t, target).unwrap();
            let slow = learn_reference(&t, target).unwrap();
            prop_assert_eq!(&fast.model, &slow.model);
            prop_assert_eq!(&fast.merge_counts, &slow.merge_counts);
            prop_assert_eq!(fast.stop, slow.stop);
        }

        #[test]
        fn vocab_size_hits_target_unless_exhausted(t in arb_table(), extra in 0usize..30) {
            let target = t.alphabet().len() + extra;
            let tr = learn_traced(&t, target).unwrap();
            match tr.stop {
                StopReason::ReachedTarget => prop_assert_eq!(tr.model.vocab_size(), target),
                StopReason::Exhausted => prop_assert!(tr.model.vocab_size() <= target),
            }
        }

        #[test]
        fn scaling_counts_keeps_merges_as_prefix(t in arb_table(), k in 2u64..5, extra in 0usize..30) {
            let target = t.alphabet().len() + extra;
            let base = learn_traced(&t, target).unwrap();
            let scaled = learn_traced(&t.scaled(k), target).unwrap();
            let n = base.model.merges().len();
            // the stop-at-count-1 rule is not scale invariant, so only the
            // merges made before the base run stopped have to agree
            prop_assert_eq!(&scaled.model.merges()[..n], base.model.merges());
            if base.stop == StopReason::ReachedTarget {
                prop_assert_eq!(&scaled.model, &base.model);
            }
        }

        #[test]
        fn merge_prefix_equals_smaller_run(t in arb_table(), a in 0usize..15, b in 0usize..15) {
            let alpha = t.alphabet().len();
            let (small, big) = (alpha + a.min(b), alpha + a.max(b));
            let full = learn(&t, big).unwrap();
            prop_assert_eq!(full.truncated(small), learn(&t, small).unwrap());
        }
    }
}
