use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use bpetrim::metrics::{
    build_report, heuristic_vocab_search, rare_sentence_split, ReportSettings, SideInput,
};
use bpetrim::model_io::{
    read_counts, read_merges, read_trim_manifest, write_counts, write_merges, write_trim_manifest,
};
use bpetrim::tokenizer::render_line;
use bpetrim::{
    learn, learn_joint, token_counts, BpeModel, CachedTokenizer, PretokenConfig, RareSentenceSplit,
    SearchMode, SideTokenizers, Tokenize, TrimSpec, TrimmedModel, WordFrequencyTable,
};

use crate::args::{
    ApplyArgs, CorpusArgs, HeuristicArgs, LearnArgs, LearnJointArgs, ReportArgs, SplitRareArgs,
    StatsArgs, TrimArgs,
};
use crate::error::{CliError, CliResult};

fn read_lines(path: &Path) -> CliResult<Vec<String>> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    BufReader::new(file)
        .lines()
        .collect::<io::Result<Vec<_>>>()
        .map_err(|e| CliError::io(path, e))
}

fn load_table(path: &Path, config: &PretokenConfig) -> CliResult<WordFrequencyTable> {
    let lines = read_lines(path)?;
    let table = WordFrequencyTable::from_lines_par(&lines, config.clone())
        .map_err(|e| CliError::in_file(path, e))?;
    log::info!(
        "{}: {} lines, {} distinct words",
        path.display(),
        lines.len(),
        table.len()
    );
    Ok(table)
}

fn load_model(path: &Path, config: &PretokenConfig) -> CliResult<BpeModel> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    read_merges(BufReader::new(file), &config.end_of_word_marker)
        .map_err(|e| CliError::in_file(path, e))
}

fn load_trimmed(manifest: Option<&Path>, base: BpeModel) -> CliResult<TrimmedModel> {
    match manifest {
        None => Ok(TrimmedModel::untrimmed(base)),
        Some(path) => {
            let file = File::open(path).map_err(|e| CliError::io(path, e))?;
            read_trim_manifest(BufReader::new(file), base).map_err(|e| CliError::in_file(path, e))
        }
    }
}

/// Runs `body` against a buffered writer on `path`, or stdout when absent.
fn write_to<F>(path: Option<&Path>, body: F) -> CliResult<()>
where
    F: FnOnce(&mut dyn Write) -> bpetrim::Result<()>,
{
    let shown = path.map_or("<stdout>".into(), |p| p.display().to_string());
    let wrap = |e: bpetrim::Error| CliError::in_file(Path::new(&shown), e);
    match path {
        Some(p) => {
            let mut out = BufWriter::new(File::create(p).map_err(|e| CliError::io(p, e))?);
            body(&mut out).map_err(wrap)?;
            out.flush().map_err(|e| CliError::io(p, e))
        }
        None => {
            let mut out = io::stdout().lock();
            body(&mut out).map_err(wrap)?;
            out.flush().map_err(|e| CliError::Io(e.to_string()))
        }
    }
}

pub fn learn_cmd(args: &LearnArgs, config: &PretokenConfig) -> CliResult<()> {
    args.validate()?;
    let table = load_table(&args.input, config)?;
    let model = learn(&table, args.vocab_size)?;
    log::info!(
        "learned {} merges, vocabulary {}",
        model.merges().len(),
        model.vocab_size()
    );
    write_to(Some(&args.output), |w| write_merges(&model, w))?;
    if let Some(path) = &args.counts_output {
        let counts = token_counts(&model, &table);
        write_to(Some(path), |w| write_counts(&counts, w))?;
    }
    Ok(())
}

pub fn learn_joint_cmd(args: &LearnJointArgs, config: &PretokenConfig) -> CliResult<()> {
    args.validate()?;
    let tables = args
        .input
        .iter()
        .map(|p| load_table(p, config))
        .collect::<CliResult<Vec<_>>>()?;
    let model = learn_joint(&tables, args.vocab_size)?;
    log::info!(
        "learned {} joint merges, vocabulary {}",
        model.merges().len(),
        model.vocab_size()
    );
    write_to(Some(&args.output), |w| write_merges(&model, w))?;
    for (table, path) in tables.iter().zip(&args.counts_output) {
        let counts = token_counts(&model, table);
        write_to(Some(path), |w| write_counts(&counts, w))?;
    }
    Ok(())
}

pub fn apply_cmd(args: &ApplyArgs, config: &PretokenConfig) -> CliResult<()> {
    args.validate()?;
    let model = load_model(&args.merges, config)?;
    let trimmed = load_trimmed(args.manifest.as_deref(), model)?;
    let tokenizer = CachedTokenizer::new(trimmed);
    let lines = read_lines(&args.input)?;
    let marker = &config.end_of_word_marker;
    write_to(args.output.as_deref(), |w| {
        for line in &lines {
            let words = tokenizer.tokenize_line(line, config)?;
            writeln!(w, "{}", render_line(&words, marker))?;
        }
        Ok(())
    })
}

/// Both sides' training tables, models with the training alphabets added,
/// and test lines.
struct Sides {
    tables: [WordFrequencyTable; 2],
    models: [BpeModel; 2],
    tests: [Vec<String>; 2],
}

fn load_sides(
    merges: (&Path, &Path),
    corpora: &CorpusArgs,
    joint: bool,
    config: &PretokenConfig,
) -> CliResult<Sides> {
    let tables = [
        load_table(&corpora.src_train, config)?,
        load_table(&corpora.tgt_train, config)?,
    ];
    let union: Vec<String> = tables[0]
        .alphabet()
        .union(tables[1].alphabet())
        .cloned()
        .collect();
    let mut models = Vec::with_capacity(2);
    for (path, table) in [merges.0, merges.1].into_iter().zip(&tables) {
        let model = load_model(path, config)?;
        let extra: Vec<String> = if joint {
            union.clone()
        } else {
            table.alphabet().iter().cloned().collect()
        };
        models.push(
            model
                .with_alphabet(extra)
                .map_err(|e| CliError::in_file(path, e))?,
        );
    }
    let [src, tgt]: [BpeModel; 2] = models.try_into().expect("two models");
    Ok(Sides {
        tables,
        models: [src, tgt],
        tests: [
            read_lines(&corpora.src_test)?,
            read_lines(&corpora.tgt_test)?,
        ],
    })
}

fn report(sides: &Sides, trimmed: &[TrimmedModel; 2], args: &ReportArgs) -> CliResult<()> {
    let side = |i: usize| SideInput {
        model: &trimmed[i],
        train: &sides.tables[i],
        test_lines: &sides.tests[i],
    };
    let settings = ReportSettings {
        joint: args.joint,
        count_floor: args.count_floor,
        embed_dim: args.embed_dim,
        core_params: args.core_params,
    };
    let report = build_report(side(0), side(1), settings)?;
    write_to(args.output.as_deref(), |w| {
        Ok(w.write_all(report.to_kv().as_bytes())?)
    })
}

pub fn trim_cmd(args: &TrimArgs, config: &PretokenConfig) -> CliResult<()> {
    let (src, tgt) = args.validate()?;
    let sides = load_sides((&src, &tgt), &args.corpora, args.report.joint, config)?;
    let thresholds = [args.src_threshold, args.tgt_threshold];
    let given = [&args.src_counts, &args.tgt_counts];
    let manifests = [&args.src_manifest_output, &args.tgt_manifest_output];
    let mut trimmed = Vec::with_capacity(2);
    for i in 0..2 {
        let counts = token_counts(&sides.models[i], &sides.tables[i]);
        if let Some(path) = given[i] {
            let file = File::open(path).map_err(|e| CliError::io(path, e))?;
            let read = read_counts(BufReader::new(file)).map_err(|e| CliError::in_file(path, e))?;
            if read != counts {
                return Err(CliError::Data(format!(
                    "{}: counts do not match the model on the training corpus",
                    path.display()
                )));
            }
        }
        let spec = TrimSpec::new(thresholds[i], args.preserve_terminals);
        let t = TrimmedModel::trim(sides.models[i].clone(), &counts, spec)?;
        log::info!(
            "removed {} of {} tokens",
            t.removed().len(),
            t.base().vocab_size()
        );
        write_to(Some(manifests[i]), |w| write_trim_manifest(&t, w))?;
        trimmed.push(t);
    }
    let trimmed: [TrimmedModel; 2] = trimmed.try_into().expect("two sides");
    report(&sides, &trimmed, &args.report)
}

pub fn stats_cmd(args: &StatsArgs, config: &PretokenConfig) -> CliResult<()> {
    let (src, tgt) = args.validate()?;
    let sides = load_sides((&src, &tgt), &args.corpora, args.report.joint, config)?;
    let trimmed = [
        load_trimmed(args.src_manifest.as_deref(), sides.models[0].clone())?,
        load_trimmed(args.tgt_manifest.as_deref(), sides.models[1].clone())?,
    ];
    report(&sides, &trimmed, &args.report)
}

pub fn heuristic_cmd(args: &HeuristicArgs, config: &PretokenConfig) -> CliResult<()> {
    args.validate()?;
    let table = load_table(&args.input, config)?;
    let mode = if args.full_retrain {
        SearchMode::FullRetrain
    } else {
        SearchMode::MergePrefix
    };
    let choice = heuristic_vocab_search(
        &table,
        &args.vocab_size,
        args.percentile,
        args.count_floor,
        mode,
    )?;
    let mut out = String::new();
    let mode_name = match mode {
        SearchMode::MergePrefix => "merge-prefix",
        SearchMode::FullRetrain => "full-retrain",
    };
    out.push_str(&format!("mode = {mode_name}\n"));
    out.push_str(&format!("percentile = {:.6}\n", args.percentile));
    out.push_str(&format!("count_floor = {}\n", args.count_floor));
    out.push_str(&format!("chosen = {}\n", choice.chosen));
    out.push_str(&format!("qualified = {}\n", choice.qualified));
    for e in &choice.evaluations {
        out.push_str(&format!(
            "candidate.{}.vocab_size = {}\n",
            e.requested, e.vocab_size
        ));
        out.push_str(&format!(
            "candidate.{}.percentile = {:.6}\n",
            e.requested, e.percentile
        ));
    }
    write_to(args.output.as_deref(), |w| Ok(w.write_all(out.as_bytes())?))
}

pub fn split_rare_cmd(args: &SplitRareArgs, config: &PretokenConfig) -> CliResult<()> {
    let (src, tgt) = args.validate()?;
    let src_trim = load_trimmed(Some(&args.src_manifest), load_model(&src, config)?)?;
    let tgt_trim = load_trimmed(Some(&args.tgt_manifest), load_model(&tgt, config)?)?;
    let src_lines = read_lines(&args.src_test)?;
    let tgt_lines = read_lines(&args.tgt_test)?;
    if src_lines.len() != tgt_lines.len() {
        return Err(CliError::Data(format!(
            "test sides differ in length: {} vs {} lines",
            src_lines.len(),
            tgt_lines.len()
        )));
    }
    let pairs: Vec<(&str, &str)> = src_lines
        .iter()
        .map(String::as_str)
        .zip(tgt_lines.iter().map(String::as_str))
        .collect();
    let split = rare_sentence_split(
        &pairs,
        SideTokenizers {
            base: src_trim.base(),
            trimmed: &src_trim,
            config,
        },
        SideTokenizers {
            base: tgt_trim.base(),
            trimmed: &tgt_trim,
            config,
        },
    )?;
    let mut summary = format!("pairs = {}\n", pairs.len());
    for (name, subset) in RareSentenceSplit::NAMES.iter().zip(split.subsets()) {
        let path = args.output.join(format!("{name}.pairs"));
        write_to(Some(&path), |w| {
            for &i in subset {
                writeln!(w, "{} ||| {}", pairs[i].0, pairs[i].1)?;
            }
            Ok(())
        })?;
        summary.push_str(&format!("{name} = {}\n", subset.len()));
    }
    write_to(Some(&args.output.join("summary.txt")), |w| {
        Ok(w.write_all(summary.as_bytes())?)
    })?;
    print!("{summary}");
    Ok(())
}
