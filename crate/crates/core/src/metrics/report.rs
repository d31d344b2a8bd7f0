//! Key-value trim report.
//!
//! One `key = value` line per field in a fixed order. Floats are written with
//! six decimals so equal inputs always give byte-identical files.

use std::fmt::Write as _;

use crate::corpus::WordFrequencyTable;
use crate::error::{Error, ParseErrorKind, Result};
use crate::tokenizer::token_counts;
use crate::trimmer::{joint_side_vocab, TrimmedModel};

use super::{
    frequency_percentile, param_fraction, pooled_frequency_percentile, relative_delta,
    sequence_length,
};

#[derive(Debug, Clone, PartialEq)]
pub struct SideReport {
    pub threshold: u64,
    pub base_vocab: usize,
    pub removed: usize,
    pub effective_vocab: usize,
    pub base_seq_len: f64,
    pub trimmed_seq_len: f64,
    pub seq_len_delta_pct: f64,
    pub freq_percentile: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrimReport {
    pub joint: bool,
    pub preserve_terminals: bool,
    pub count_floor: u64,
    pub embed_dim: usize,
    pub core_params: u64,
    pub source: SideReport,
    pub target: SideReport,
    pub freq_percentile_overall: f64,
    pub param_fraction_pct: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReportSettings {
    pub joint: bool,
    pub count_floor: u64,
    pub embed_dim: usize,
    pub core_params: u64,
}

impl Default for ReportSettings {
    fn default() -> Self {
        Self {
            joint: false,
            count_floor: 100,
            embed_dim: 512,
            core_params: 31_500_000,
        }
    }
}

/// One side of the corpus: its trimmed model, the training table the counts
/// come from and the lines used for sequence length.
pub struct SideInput<'a, S> {
    pub model: &'a TrimmedModel,
    pub train: &'a WordFrequencyTable,
    pub test_lines: &'a [S],
}

impl<S> Clone for SideInput<'_, S> {
    fn clone(&self) -> Self {
        *self
    }
}

impl<S> Copy for SideInput<'_, S> {}

impl TrimReport {
    pub fn effective_vocab_sizes(&self) -> (usize, usize) {
        (self.source.effective_vocab, self.target.effective_vocab)
    }

    pub fn avg_seq_len(&self) -> (f64, f64) {
        (self.source.trimmed_seq_len, self.target.trimmed_seq_len)
    }

    pub fn rel_seq_len_delta(&self) -> (f64, f64) {
        (self.source.seq_len_delta_pct, self.target.seq_len_delta_pct)
    }

    pub fn to_kv(&self) -> String {
        let mut out = String::new();
        let mut line = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        line("joint", self.joint.to_string());
        line("preserve_terminals", self.preserve_terminals.to_string());
        line("count_floor", self.count_floor.to_string());
        line("embed_dim", self.embed_dim.to_string());
        line("core_params", self.core_params.to_string());
        for (name, side) in [("source", &self.source), ("target", &self.target)] {
            line(&format!("{name}.threshold"), side.threshold.to_string());
            line(&format!("{name}.base_vocab"), side.base_vocab.to_string());
            line(&format!("{name}.removed"), side.removed.to_string());
            line(
                &format!("{name}.effective_vocab"),
                side.effective_vocab.to_string(),
            );
            line(&format!("{name}.base_seq_len"), fixed(side.base_seq_len));
            line(
                &format!("{name}.trimmed_seq_len"),
                fixed(side.trimmed_seq_len),
            );
            line(
                &format!("{name}.seq_len_delta_pct"),
                fixed(side.seq_len_delta_pct),
            );
            line(
                &format!("{name}.freq_percentile"),
                fixed(side.freq_percentile),
            );
        }
        line(
            "freq_percentile_overall",
            fixed(self.freq_percentile_overall),
        );
        line("param_fraction_pct", fixed(self.param_fraction_pct));
        out
    }

    /// Reads back the output of [`to_kv`](Self::to_kv). Keys must appear in
    /// the written order.
    pub fn from_kv(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let mut next = |key: &str| -> Result<(usize, String)> {
            let (i, l) = lines
                .next()
                .ok_or(Error::parse(0, ParseErrorKind::UnexpectedEof))?;
            let lineno = i + 1;
            match l.split_once(" = ") {
                Some((k, v)) if k == key => Ok((lineno, v.to_string())),
                _ => Err(Error::parse(
                    lineno,
                    ParseErrorKind::MalformedLine(l.to_string()),
                )),
            }
        };
        fn num<T: std::str::FromStr>((line, v): (usize, String)) -> Result<T> {
            v.parse()
                .map_err(|_| Error::parse(line, ParseErrorKind::BadNumber(v)))
        }
        let joint = num(next("joint")?)?;
        let preserve_terminals = num(next("preserve_terminals")?)?;
        let count_floor = num(next("count_floor")?)?;
        let embed_dim = num(next("embed_dim")?)?;
        let core_params = num(next("core_params")?)?;
        let mut side = |name: &str| -> Result<SideReport> {
            Ok(SideReport {
                threshold: num(next(&format!("{name}.threshold"))?)?,
                base_vocab: num(next(&format!("{name}.base_vocab"))?)?,
                removed: num(next(&format!("{name}.removed"))?)?,
                effective_vocab: num(next(&format!("{name}.effective_vocab"))?)?,
                base_seq_len: num(next(&format!("{name}.base_seq_len"))?)?,
                trimmed_seq_len: num(next(&format!("{name}.trimmed_seq_len"))?)?,
                seq_len_delta_pct: num(next(&format!("{name}.seq_len_delta_pct"))?)?,
                freq_percentile: num(next(&format!("{name}.freq_percentile"))?)?,
            })
        };
        let source = side("source")?;
        let target = side("target")?;
        Ok(TrimReport {
            joint,
            preserve_terminals,
            count_floor,
            embed_dim,
            core_params,
            source,
            target,
            freq_percentile_overall: num(next("freq_percentile_overall")?)?,
            param_fraction_pct: num(next("param_fraction_pct")?)?,
        })
    }
}

fn fixed(x: f64) -> String {
    // avoid "-0.000000"
    let s = format!("{x:.6}");
    if s == "-0.000000" {
        "0.000000".into()
    } else {
        s
    }
}

/// Measures both sides. In the joint setting vocabulary sizes only count
/// tokens that the respective tokenizer actually emits on its own corpus.
pub fn build_report<S: AsRef<str> + Sync>(
    source: SideInput<'_, S>,
    target: SideInput<'_, S>,
    settings: ReportSettings,
) -> Result<TrimReport> {
    if source.model.spec().preserve_terminals != target.model.spec().preserve_terminals {
        log::warn!(
            "source and target disagree on terminal preservation; reporting the source flag"
        );
    }
    let mut base_counts = Vec::with_capacity(2);
    let mut sides = Vec::with_capacity(2);
    for side in [source, target] {
        let base = side.model.base();
        let counts = token_counts(base, side.train);
        let (base_vocab, effective_vocab) = if settings.joint {
            let present = counts.iter().filter(|(_, c)| *c >= 1).count();
            (present, joint_side_vocab(side.model, side.train).len())
        } else {
            (base.vocab_size(), side.model.effective_vocab_size())
        };
        let config = side.train.config();
        let base_len = sequence_length(base, side.test_lines, config)?.mean();
        let trimmed_len = sequence_length(side.model, side.test_lines, config)?.mean();
        sides.push(SideReport {
            threshold: side.model.spec().threshold,
            base_vocab,
            removed: side.model.removed().len(),
            effective_vocab,
            base_seq_len: base_len,
            trimmed_seq_len: trimmed_len,
            seq_len_delta_pct: relative_delta(base_len, trimmed_len),
            freq_percentile: frequency_percentile(&counts, settings.count_floor),
        });
        base_counts.push(counts);
    }
    let target_side = sides.pop().expect("two sides");
    let source_side = sides.pop().expect("two sides");
    Ok(TrimReport {
        joint: settings.joint,
        preserve_terminals: source.model.spec().preserve_terminals,
        count_floor: settings.count_floor,
        embed_dim: settings.embed_dim,
        core_params: settings.core_params,
        freq_percentile_overall: pooled_frequency_percentile(
            &[&base_counts[0], &base_counts[1]],
            settings.count_floor,
        ),
        param_fraction_pct: param_fraction(
            source_side.effective_vocab,
            target_side.effective_vocab,
            settings.embed_dim,
            settings.core_params,
        ),
        source: source_side,
        target: target_side,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::PretokenConfig;
    use crate::trainer::learn;
    use crate::trimmer::TrimSpec;

    fn side_table(text: &str) -> WordFrequencyTable {
        WordFrequencyTable::from_text(text, PretokenConfig::default()).unwrap()
    }

    #[test]
    fn zero_threshold_report() {
        let text = "low lower newest widest\nlow low newest\nwidest lowest";
        let lines: Vec<&str> = text.lines().collect();
        let t = side_table(text);
        let m = learn(&t, 30).unwrap();
        let tm = TrimmedModel::trim_on(m.clone(), &t, TrimSpec::new(0, false)).unwrap();
        let side = SideInput {
            model: &tm,
            train: &t,
            test_lines: &lines,
        };
        let r = build_report(side, side, ReportSettings::default()).unwrap();
        assert_eq!(r.source.removed, 0);
        assert_eq!(r.source.seq_len_delta_pct, 0.0);
        assert_eq!(r.effective_vocab_sizes(), (m.vocab_size(), m.vocab_size()));
        let kv = r.to_kv();
        assert!(kv.contains("source.seq_len_delta_pct = 0.000000\n"));
        let back = TrimReport::from_kv(&kv).unwrap();
        assert_eq!(back.to_kv(), kv);
    }

    #[test]
    fn trimming_lengthens_sequences() {
        let text = "low lower newest widest\nlow low newest\nwidest lowest";
        let lines: Vec<&str> = text.lines().collect();
        let t = side_table(text);
        let m = learn(&t, 40).unwrap();
        let tm = TrimmedModel::trim_on(m, &t, TrimSpec::new(2, false)).unwrap();
        let side = SideInput {
            model: &tm,
            train: &t,
            test_lines: &lines,
        };
        let r = build_report(side, side, ReportSettings::default()).unwrap();
        assert!(r.source.removed > 0);
        assert!(r.source.seq_len_delta_pct > 0.0);
        assert!(r.source.effective_vocab < r.source.base_vocab);
    }

    #[test]
    fn kv_parse_errors_carry_line_numbers() {
        let err = TrimReport::from_kv("joint = false\npreserve_terminals = maybe\n").unwrap_err();
        assert!(matches!(
            err,
            Error::Parse {
                line: 2,
                kind: ParseErrorKind::BadNumber(_)
            }
        ));
        let err = TrimReport::from_kv("joint = false\nwhatever = 1\n").unwrap_err();
        assert!(matches!(
            err,
            Error::Parse {
                line: 2,
                kind: ParseErrorKind::MalformedLine(_)
            }
        ));
    }
}
