use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(
    name = "bpetrim",
    version,
    about = "BPE training, application and vocabulary trimming"
)]
pub struct Cli {
    /// Lowercase words before splitting them into symbols.
    #[arg(long, global = true)]
    pub lowercase: bool,

    /// More log output on stderr (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Learn a merges file from a training corpus.
    Learn(LearnArgs),
    /// Learn one merges file from several corpora and per-language counts.
    LearnJoint(LearnJointArgs),
    /// Tokenize text, optionally with a trim manifest.
    Apply(ApplyArgs),
    /// Compute trim manifests for both sides and report their effect.
    Trim(TrimArgs),
    /// Report on existing models and (optional) manifests.
    Stats(StatsArgs),
    /// Pick the largest vocabulary size whose tokens are frequent enough.
    Heuristic(HeuristicArgs),
    /// Split a test set by whether trimming changes each sentence.
    SplitRare(SplitRareArgs),
}

#[derive(Debug, Args)]
pub struct LearnArgs {
    /// Training corpus, one sentence per line.
    #[arg(long)]
    pub input: PathBuf,
    /// Merges file to write.
    #[arg(long)]
    pub output: PathBuf,
    /// Target vocabulary size, atomic symbols included.
    #[arg(long)]
    pub vocab_size: usize,
    /// Also write token counts on the training corpus.
    #[arg(long)]
    pub counts_output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LearnJointArgs {
    /// Training corpus per language (repeat for each language).
    #[arg(long, required = true)]
    pub input: Vec<PathBuf>,
    /// Joint merges file to write.
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long)]
    pub vocab_size: usize,
    /// Token counts per language, one per --input and in the same order.
    #[arg(long, required = true)]
    pub counts_output: Vec<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ApplyArgs {
    #[arg(long)]
    pub merges: PathBuf,
    /// Trim manifest computed against the same merges file.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long)]
    pub input: PathBuf,
    /// Defaults to stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

/// Merges files for both sides. `--merges` names one joint model for both.
#[derive(Debug, Args)]
pub struct ModelArgs {
    #[arg(long, conflicts_with_all = ["src_merges", "tgt_merges"])]
    pub merges: Option<PathBuf>,
    #[arg(long)]
    pub src_merges: Option<PathBuf>,
    #[arg(long)]
    pub tgt_merges: Option<PathBuf>,
}

impl ModelArgs {
    pub fn resolve(&self) -> CliResult<(PathBuf, PathBuf)> {
        match (&self.merges, &self.src_merges, &self.tgt_merges) {
            (Some(m), _, _) => Ok((m.clone(), m.clone())),
            (None, Some(s), Some(t)) => Ok((s.clone(), t.clone())),
            _ => Err(CliError::Usage(
                "give --merges, or both --src-merges and --tgt-merges".into(),
            )),
        }
    }
}

#[derive(Debug, Args)]
pub struct CorpusArgs {
    /// Source training corpus; token counts come from here.
    #[arg(long)]
    pub src_train: PathBuf,
    #[arg(long)]
    pub tgt_train: PathBuf,
    /// Source test corpus; sequence lengths are measured here.
    #[arg(long)]
    pub src_test: PathBuf,
    #[arg(long)]
    pub tgt_test: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Count vocabulary sizes per language under a joint model.
    #[arg(long)]
    pub joint: bool,
    #[arg(long, default_value_t = 100)]
    pub count_floor: u64,
    #[arg(long, default_value_t = 512)]
    pub embed_dim: usize,
    /// Parameters outside the embedding and output layers.
    #[arg(long, default_value_t = 31_500_000)]
    pub core_params: u64,
    /// Report file; defaults to stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrimArgs {
    #[command(flatten)]
    pub models: ModelArgs,
    #[command(flatten)]
    pub corpora: CorpusArgs,
    #[command(flatten)]
    pub report: ReportArgs,
    /// Remove source tokens seen at most this often; 0 keeps everything.
    #[arg(long)]
    pub src_threshold: u64,
    #[arg(long)]
    pub tgt_threshold: u64,
    /// Never remove tokens that are not part of a later merge.
    #[arg(long)]
    pub preserve_terminals: bool,
    /// Precomputed source counts; checked against the training corpus.
    #[arg(long)]
    pub src_counts: Option<PathBuf>,
    #[arg(long)]
    pub tgt_counts: Option<PathBuf>,
    #[arg(long)]
    pub src_manifest_output: PathBuf,
    #[arg(long)]
    pub tgt_manifest_output: PathBuf,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[command(flatten)]
    pub models: ModelArgs,
    #[command(flatten)]
    pub corpora: CorpusArgs,
    #[command(flatten)]
    pub report: ReportArgs,
    /// Source trim manifest; without it the source side is untrimmed.
    #[arg(long)]
    pub src_manifest: Option<PathBuf>,
    #[arg(long)]
    pub tgt_manifest: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct HeuristicArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Candidate sizes, strictly ascending, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub vocab_size: Vec<usize>,
    /// Fraction of tokens that must occur more than --count-floor times.
    #[arg(long)]
    pub percentile: f64,
    #[arg(long, default_value_t = 100)]
    pub count_floor: u64,
    /// Train every candidate from scratch instead of truncating one model.
    #[arg(long)]
    pub full_retrain: bool,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SplitRareArgs {
    #[command(flatten)]
    pub models: ModelArgs,
    #[arg(long)]
    pub src_manifest: PathBuf,
    #[arg(long)]
    pub tgt_manifest: PathBuf,
    /// Source side of the test set.
    #[arg(long)]
    pub src_test: PathBuf,
    #[arg(long)]
    pub tgt_test: PathBuf,
    /// Directory for the subset files and summary.
    #[arg(long)]
    pub output: PathBuf,
}

pub fn existing_file(path: &Path) -> CliResult<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::Usage(format!("{}: no such file", path.display())))
    }
}

/// The directory a new file would be created in must exist.
pub fn writable_target(path: &Path) -> CliResult<()> {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() && !p.is_dir() => Err(CliError::Usage(format!(
            "{}: directory does not exist",
            p.display()
        ))),
        _ if path.is_dir() => Err(CliError::Usage(format!(
            "{}: is a directory",
            path.display()
        ))),
        _ => Ok(()),
    }
}

pub fn positive(name: &str, value: usize) -> CliResult<()> {
    if value == 0 {
        Err(CliError::Usage(format!("{name} must be positive")))
    } else {
        Ok(())
    }
}

impl LearnArgs {
    pub fn validate(&self) -> CliResult<()> {
        positive("--vocab-size", self.vocab_size)?;
        existing_file(&self.input)?;
        writable_target(&self.output)?;
        self.counts_output
            .as_deref()
            .map_or(Ok(()), writable_target)
    }
}

impl LearnJointArgs {
    pub fn validate(&self) -> CliResult<()> {
        positive("--vocab-size", self.vocab_size)?;
        if self.counts_output.len() != self.input.len() {
            return Err(CliError::Usage(format!(
                "{} --input files but {} --counts-output files",
                self.input.len(),
                self.counts_output.len()
            )));
        }
        self.input.iter().try_for_each(|p| existing_file(p))?;
        writable_target(&self.output)?;
        self.counts_output
            .iter()
            .try_for_each(|p| writable_target(p))
    }
}

impl ApplyArgs {
    pub fn validate(&self) -> CliResult<()> {
        existing_file(&self.merges)?;
        existing_file(&self.input)?;
        self.manifest.as_deref().map_or(Ok(()), existing_file)?;
        self.output.as_deref().map_or(Ok(()), writable_target)
    }
}

impl CorpusArgs {
    fn validate(&self) -> CliResult<()> {
        [
            &self.src_train,
            &self.tgt_train,
            &self.src_test,
            &self.tgt_test,
        ]
        .into_iter()
        .try_for_each(|p| existing_file(p))
    }
}

impl ReportArgs {
    fn validate(&self) -> CliResult<()> {
        positive("--embed-dim", self.embed_dim)?;
        positive("--core-params", self.core_params as usize)?;
        self.output.as_deref().map_or(Ok(()), writable_target)
    }
}

impl TrimArgs {
    pub fn validate(&self) -> CliResult<(PathBuf, PathBuf)> {
        let (src, tgt) = self.models.resolve()?;
        self.report.validate()?;
        existing_file(&src)?;
        existing_file(&tgt)?;
        self.corpora.validate()?;
        for p in [&self.src_counts, &self.tgt_counts].into_iter().flatten() {
            existing_file(p)?;
        }
        writable_target(&self.src_manifest_output)?;
        writable_target(&self.tgt_manifest_output)?;
        Ok((src, tgt))
    }
}

impl StatsArgs {
    pub fn validate(&self) -> CliResult<(PathBuf, PathBuf)> {
        let (src, tgt) = self.models.resolve()?;
        self.report.validate()?;
        existing_file(&src)?;
        existing_file(&tgt)?;
        self.corpora.validate()?;
        for p in [&self.src_manifest, &self.tgt_manifest]
            .into_iter()
            .flatten()
        {
            existing_file(p)?;
        }
        Ok((src, tgt))
    }
}

impl HeuristicArgs {
    pub fn validate(&self) -> CliResult<()> {
        if !(0.0..=1.0).contains(&self.percentile) {
            return Err(CliError::Usage("--percentile must lie in [0, 1]".into()));
        }
        self.vocab_size
            .iter()
            .try_for_each(|&v| positive("--vocab-size", v))?;
        if self.vocab_size.windows(2).any(|w| w[0] >= w[1]) {
            return Err(CliError::Usage(
                "--vocab-size candidates must be strictly ascending".into(),
            ));
        }
        existing_file(&self.input)?;
        self.output.as_deref().map_or(Ok(()), writable_target)
    }
}

impl SplitRareArgs {
    pub fn validate(&self) -> CliResult<(PathBuf, PathBuf)> {
        let (src, tgt) = self.models.resolve()?;
        for p in [
            &src,
            &tgt,
            &self.src_manifest,
            &self.tgt_manifest,
            &self.src_test,
            &self.tgt_test,
        ] {
            existing_file(p)?;
        }
        if !self.output.is_dir() {
            return Err(CliError::Usage(format!(
                "{}: output directory does not exist",
                self.output.display()
            )));
        }
        Ok((src, tgt))
    }
}
