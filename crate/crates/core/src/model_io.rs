//! Plain-text artifact formats.
//!
//! * merges file: `#version: 0.2` then one `left right` rule per line in rank
//!   order, as written by subword-nmt;
//! * vocabulary count file: `token count` per line, highest count first, ties
//!   by token;
//! * trim manifest: a fixed header block followed by one removed token per
//!   line, sorted.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::io::{BufRead, Write};

use crate::error::{Error, ParseErrorKind, Result};
use crate::model::BpeModel;
use crate::tokenizer::TokenCounts;
use crate::trimmer::{TrimSpec, TrimmedModel};

pub const MERGES_HEADER: &str = "#version: 0.2";
pub const MANIFEST_HEADER: &str = "#trim-manifest: 1";

pub fn write_merges<W: Write>(model: &BpeModel, mut out: W) -> Result<()> {
    writeln!(out, "{MERGES_HEADER}")?;
    for rule in model.merges() {
        writeln!(out, "{} {}", rule.left, rule.right)?;
    }
    out.flush()?;
    Ok(())
}

/// Reads a merges file. The alphabet is every atomic-shaped symbol the rules
/// mention: a single character, optionally followed by `marker`. Symbols that
/// never take part in a merge are not recorded in the file; add them with
/// [`BpeModel::with_alphabet`].
pub fn read_merges<R: BufRead>(reader: R, marker: &str) -> Result<BpeModel> {
    let mut lines = reader.lines();
    match lines.next() {
        None => return Err(Error::parse(1, ParseErrorKind::MissingHeader)),
        Some(first) => {
            let first = first?;
            let first = first.trim_end_matches('\r');
            if first != MERGES_HEADER {
                let kind = if first.starts_with("#version") {
                    ParseErrorKind::UnknownHeader(first.to_string())
                } else {
                    ParseErrorKind::MissingHeader
                };
                return Err(Error::parse(1, kind));
            }
        }
    }

    let is_atomic = |t: &str| {
        let base = t.strip_suffix(marker).unwrap_or(t);
        let mut chars = base.chars();
        chars.next().is_some() && chars.next().is_none()
    };

    let mut alphabet = BTreeSet::new();
    let mut produced: HashSet<String> = HashSet::new();
    let mut seen_pairs: HashSet<(String, String)> = HashSet::new();
    let mut pairs = Vec::new();
    for (i, line) in lines.enumerate() {
        let lineno = i + 2;
        let line = line?;
        let line = line.trim_end_matches('\r');
        let mut parts = line.split(' ');
        let (left, right) = match (parts.next(), parts.next(), parts.next()) {
            (Some(l), Some(r), None) if !l.is_empty() && !r.is_empty() => (l, r),
            _ => {
                return Err(Error::parse(
                    lineno,
                    ParseErrorKind::MalformedLine(line.to_string()),
                ))
            }
        };
        for tok in [left, right] {
            if produced.contains(tok) {
                continue;
            }
            if is_atomic(tok) {
                alphabet.insert(tok.to_string());
            } else {
                return Err(Error::parse(
                    lineno,
                    ParseErrorKind::UndefinedToken(tok.to_string()),
                ));
            }
        }
        let pair = (left.to_string(), right.to_string());
        if !seen_pairs.insert(pair.clone()) {
            return Err(Error::parse(
                lineno,
                ParseErrorKind::DuplicateEntry(line.to_string()),
            ));
        }
        produced.insert(format!("{left}{right}"));
        pairs.push(pair);
    }
    BpeModel::new(alphabet, pairs, marker)
}

pub fn write_counts<W: Write>(counts: &TokenCounts, mut out: W) -> Result<()> {
    let mut rows: Vec<(&str, u64)> = counts.iter().collect();
    rows.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    for (t, c) in rows {
        writeln!(out, "{t} {c}")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_counts<R: BufRead>(reader: R) -> Result<TokenCounts> {
    let mut map = BTreeMap::new();
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line?;
        let line = line.trim_end_matches('\r');
        let (tok, n) = match line.split_once(' ') {
            Some((t, n)) if !t.is_empty() && !n.contains(' ') => (t, n),
            _ => {
                return Err(Error::parse(
                    lineno,
                    ParseErrorKind::MalformedLine(line.to_string()),
                ))
            }
        };
        let n: u64 = n
            .parse()
            .map_err(|_| Error::parse(lineno, ParseErrorKind::BadNumber(n.to_string())))?;
        if map.insert(tok.to_string(), n).is_some() {
            return Err(Error::parse(
                lineno,
                ParseErrorKind::DuplicateEntry(tok.to_string()),
            ));
        }
    }
    Ok(TokenCounts::from_map(map))
}

pub fn write_trim_manifest<W: Write>(trimmed: &TrimmedModel, mut out: W) -> Result<()> {
    let spec = trimmed.spec();
    writeln!(out, "{MANIFEST_HEADER}")?;
    writeln!(out, "threshold: {}", spec.threshold)?;
    writeln!(out, "preserve_terminals: {}", spec.preserve_terminals)?;
    writeln!(out, "removed: {}", trimmed.removed().len())?;
    for t in trimmed.removed() {
        writeln!(out, "{t}")?;
    }
    out.flush()?;
    Ok(())
}

/// Reads a manifest and applies it to `base`.
pub fn read_trim_manifest<R: BufRead>(reader: R, base: BpeModel) -> Result<TrimmedModel> {
    let mut lines = reader.lines().enumerate().map(|(i, l)| (i + 1, l));
    let mut next = || -> Result<(usize, String)> {
        match lines.next() {
            Some((n, l)) => Ok((n, l?.trim_end_matches('\r').to_string())),
            None => Err(Error::parse(0, ParseErrorKind::UnexpectedEof)),
        }
    };
    let (n, header) = next().map_err(|_| Error::parse(1, ParseErrorKind::MissingHeader))?;
    if header != MANIFEST_HEADER {
        return Err(Error::parse(n, ParseErrorKind::UnknownHeader(header)));
    }
    let mut field = |name: &str| -> Result<(usize, String)> {
        let (n, l) = next()?;
        match l.strip_prefix(name).and_then(|r| r.strip_prefix(": ")) {
            Some(v) => Ok((n, v.to_string())),
            None => Err(Error::parse(n, ParseErrorKind::MalformedLine(l))),
        }
    };
    let (n, threshold) = field("threshold")?;
    let threshold: u64 = threshold
        .parse()
        .map_err(|_| Error::parse(n, ParseErrorKind::BadNumber(threshold)))?;
    let (n, preserve) = field("preserve_terminals")?;
    let preserve_terminals = match preserve.as_str() {
        "true" => true,
        "false" => false,
        _ => return Err(Error::parse(n, ParseErrorKind::MalformedLine(preserve))),
    };
    let (n, count) = field("removed")?;
    let count: usize = count
        .parse()
        .map_err(|_| Error::parse(n, ParseErrorKind::BadNumber(count)))?;

    let mut removed = BTreeSet::new();
    for _ in 0..count {
        let (n, tok) = next()?;
        if tok.is_empty() || tok.contains(' ') {
            return Err(Error::parse(n, ParseErrorKind::MalformedLine(tok)));
        }
        if !removed.insert(tok.clone()) {
            return Err(Error::parse(n, ParseErrorKind::DuplicateEntry(tok)));
        }
    }
    if let Ok((n, extra)) = next() {
        return Err(Error::parse(n, ParseErrorKind::MalformedLine(extra)));
    }
    TrimmedModel::from_removed(base, TrimSpec::new(threshold, preserve_terminals), removed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{PretokenConfig, WordFrequencyTable};
    use crate::tokenizer::token_counts;
    use crate::trainer::learn;
    use proptest::prelude::*;

    fn s(x: &str) -> String {
        x.to_string()
    }

    fn written(model: &BpeModel) -> String {
        let mut out = Vec::new();
        write_merges(model, &mut out).unwrap();
        String::from_utf8(out).unwrap()
    }

    fn parse_err(text: &str) -> (usize, ParseErrorKind) {
        match read_merges(text.as_bytes(), "</w>") {
            Err(Error::Parse { line, kind }) => (line, kind),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn empty_merge_list_is_header_only() {
        let m = BpeModel::from_alphabet(["a"].map(s)).unwrap();
        assert_eq!(written(&m), "#version: 0.2\n");
        let back = read_merges(written(&m).as_bytes(), "</w>").unwrap();
        assert!(back.merges().is_empty());
    }

    #[test]
    fn merges_parse_errors() {
        assert_eq!(parse_err("").0, 1);
        assert_eq!(parse_err("a b\n"), (1, ParseErrorKind::MissingHeader));
        assert!(matches!(
            parse_err("#version: 0.1\n"),
            (1, ParseErrorKind::UnknownHeader(_))
        ));
        assert!(matches!(
            parse_err("#version: 0.2\na b\nab\n"),
            (3, ParseErrorKind::MalformedLine(_))
        ));
        assert!(matches!(
            parse_err("#version: 0.2\na b c\n"),
            (2, ParseErrorKind::MalformedLine(_))
        ));
        assert_eq!(
            parse_err("#version: 0.2\na b\nab cd\n"),
            (3, ParseErrorKind::UndefinedToken(s("cd")))
        );
        assert!(matches!(
            parse_err("#version: 0.2\na b\na b\n"),
            (3, ParseErrorKind::DuplicateEntry(_))
        ));
    }

    #[test]
    fn counts_file_order_and_round_trip() {
        let c = TokenCounts::from_map(BTreeMap::from([
            (s("b"), 3),
            (s("a"), 3),
            (s("c"), 7),
            (s("z"), 0),
        ]));
        let mut out = Vec::new();
        write_counts(&c, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text, "c 7\na 3\nb 3\nz 0\n");
        assert_eq!(read_counts(text.as_bytes()).unwrap(), c);
        assert!(matches!(
            read_counts("a 1\nb x\n".as_bytes()),
            Err(Error::Parse {
                line: 2,
                kind: ParseErrorKind::BadNumber(_)
            })
        ));
        assert!(matches!(
            read_counts("a 1\na 2\n".as_bytes()),
            Err(Error::Parse {
                line: 2,
                kind: ParseErrorKind::DuplicateEntry(_)
            })
        ));
    }

    fn fig2_model() -> BpeModel {
        let alphabet = ["t", "o", "k", "e", "n", "i", "z", "a", "n</w>"].map(s);
        let pairs = [
            ("t", "o"),
            ("to", "k"),
            ("tok", "e"),
            ("toke", "n"),
            ("i", "z"),
            ("a", "t"),
            ("at", "i"),
            ("ati", "o"),
            ("atio", "n</w>"),
            ("iz", "ation</w>"),
        ];
        BpeModel::new(alphabet, pairs.map(|(l, r)| (s(l), s(r))), "</w>").unwrap()
    }

    fn manifest(t: &TrimmedModel) -> String {
        let mut out = Vec::new();
        write_trim_manifest(t, &mut out).unwrap();
        String::from_utf8(out).unwrap()
    }

    #[test]
    fn manifest_round_trips() {
        let m = fig2_model();
        let empty = TrimmedModel::untrimmed(m.clone());
        assert_eq!(
            manifest(&empty),
            "#trim-manifest: 1\nthreshold: 0\npreserve_terminals: false\nremoved: 0\n"
        );
        assert_eq!(
            read_trim_manifest(manifest(&empty).as_bytes(), m.clone()).unwrap(),
            empty
        );

        let fig2 =
            TrimmedModel::from_removed(m.clone(), TrimSpec::new(100, false), ["ization</w>", "iz"])
                .unwrap();
        let text = manifest(&fig2);
        assert_eq!(
            text,
            "#trim-manifest: 1\nthreshold: 100\npreserve_terminals: false\nremoved: 2\niz\nization</w>\n"
        );
        assert_eq!(read_trim_manifest(text.as_bytes(), m).unwrap(), fig2);
    }

    #[test]
    fn manifest_errors() {
        let m = fig2_model();
        let bad_token =
            "#trim-manifest: 1\nthreshold: 1\npreserve_terminals: false\nremoved: 1\nqq\n";
        assert!(matches!(
            read_trim_manifest(bad_token.as_bytes(), m.clone()),
            Err(Error::Inconsistent(_))
        ));
        let short = "#trim-manifest: 1\nthreshold: 1\npreserve_terminals: false\nremoved: 2\niz\n";
        assert!(matches!(
            read_trim_manifest(short.as_bytes(), m.clone()),
            Err(Error::Parse {
                kind: ParseErrorKind::UnexpectedEof,
                ..
            })
        ));
        let bad_threshold = "#trim-manifest: 1\nthreshold: -1\n";
        assert!(matches!(
            read_trim_manifest(bad_threshold.as_bytes(), m.clone()),
            Err(Error::Parse {
                line: 2,
                kind: ParseErrorKind::BadNumber(_)
            })
        ));
        assert!(matches!(
            read_trim_manifest("nope\n".as_bytes(), m),
            Err(Error::Parse {
                line: 1,
                kind: ParseErrorKind::UnknownHeader(_)
            })
        ));
    }

    fn arb_model() -> impl Strategy<Value = (BpeModel, WordFrequencyTable)> {
        (prop::collection::vec("[abcdé]{1,9}", 1..25), 0usize..40).prop_map(|(words, extra)| {
            let t =
                WordFrequencyTable::from_text(&words.join(" "), PretokenConfig::default()).unwrap();
            let m = learn(&t, t.alphabet().len() + extra).unwrap();
            (m, t)
        })
    }

    proptest! {
        #[test]
        fn merges_round_trip((model, _) in arb_model()) {
            let text = written(&model);
            let back = read_merges(text.as_bytes(), "</w>").unwrap();
            prop_assert_eq!(written(&back), text);
            prop_assert_eq!(back.with_alphabet(model.alphabet().iter().cloned()).unwrap(), model);
        }

        #[test]
        fn manifest_and_counts_round_trip((model, table) in arb_model(), threshold in 0u64..6, preserve: bool) {
            let counts = token_counts(&model, &table);
            let mut out = Vec::new();
            write_counts(&counts, &mut out).unwrap();
            prop_assert_eq!(read_counts(out.as_slice()).unwrap(), counts.clone());

            let t = TrimmedModel::trim(model.clone(), &counts, TrimSpec::new(threshold, preserve)).unwrap();
            let text = manifest(&t);
            let back = read_trim_manifest(text.as_bytes(), model).unwrap();
            prop_assert_eq!(manifest(&back), text);
            prop_assert_eq!(back, t);
        }
    }
}
