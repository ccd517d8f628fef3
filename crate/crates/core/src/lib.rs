//! Pointer–generator models for morphological inflection, with
//! source-language pretraining, target-language fine-tuning and an
//! automatic stem/affix error taxonomy.
//!
//! The crate is organized bottom-up:
//!
//! - [`data`]: corpus files, joint vocabularies, language profiles.
//! - [`nn`]: a small reverse-mode autodiff tape with LSTM, attention and Adam.
//! - [`model`]: the dual-encoder pointer–generator network.
//! - [`train`]: training loops, pretraining/fine-tuning and checkpoints.
//! - [`taxonomy`]: alignment-based classification of prediction errors.
//! - [`experiment`]: source × target grids and table rendering.

pub mod data;
pub mod experiment;
pub mod model;
pub mod nn;
pub mod taxonomy;
pub mod train;

use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

/// Crate-level error.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Corpus {
        path: PathBuf,
        source: data::corpus::CorpusError,
    },
    #[error("{path}: {source}")]
    Profile {
        path: PathBuf,
        source: data::profile::ProfileError,
    },
    #[error(transparent)]
    Vocab(#[from] data::vocab::VocabError),
    #[error(transparent)]
    Nn(#[from] nn::NnError),
    #[error(transparent)]
    Train(#[from] train::TrainError),
    #[error(transparent)]
    Checkpoint(#[from] train::checkpoint::CheckpointError),
    #[error("{0}")]
    Invalid(String),
}

impl Error {
    pub fn io(path: &Path, source: io::Error) -> Self {
        Error::Io {
            path: path.to_owned(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
