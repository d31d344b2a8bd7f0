//! Byte-pair-encoding training and inference with threshold vocabulary
//! trimming.
//!
//! The pipeline is: ingest text into a [`WordFrequencyTable`], [`learn`] a
//! [`BpeModel`], count token occurrences with [`token_counts`], then build a
//! [`TrimmedModel`] that drops rare non-atomic tokens and decomposes them at
//! inference time. [`metrics`] measures what trimming did.
//!
//! ```
//! use bpetrim::{learn, token_counts, PretokenConfig, Tokenize, TrimSpec, TrimmedModel, WordFrequencyTable};
//!
//! let table = WordFrequencyTable::from_text("low lower newest widest newest", PretokenConfig::default())?;
//! let model = learn(&table, 30)?;
//! let counts = token_counts(&model, &table);
//! let trimmed = TrimmedModel::trim(model, &counts, TrimSpec::new(1, false))?;
//! let word = table.config().word("newest")?;
//! assert_eq!(trimmed.tokenize_word(&word).surface(), "newest</w>");
//! # Ok::<(), bpetrim::Error>(())
//! ```

pub mod corpus;
pub mod error;
pub mod metrics;
pub mod model;
pub mod model_io;
pub mod tokenizer;
pub mod trainer;
pub mod trimmer;

pub use corpus::{PretokenConfig, WhitespaceRule, Word, WordFrequencyTable, DEFAULT_END_OF_WORD};
pub use error::{Error, ParseErrorKind, Result};
pub use metrics::{RareSentenceSplit, SearchMode, SideTokenizers, TrimReport};
pub use model::{BpeModel, MergeRule, TokenId};
pub use tokenizer::{
    token_counts, tokenize_corpus, CachedTokenizer, TokenCounts, TokenSequence, Tokenize,
};
pub use trainer::{learn, learn_joint, learn_reference, learn_traced, StopReason, Training};
pub use trimmer::{compute_trim_set, per_language_effective_vocab, TrimSpec, TrimmedModel};
