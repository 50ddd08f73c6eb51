use std::path::PathBuf;

use rfdsa_core::dsa::DsaError;
use rfdsa_core::nnet::NnetError;
use rfdsa_core::outlier::OutlierError;
use rfdsa_core::separation::SeparationError;
use rfdsa_core::sigsynth::SynthError;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("config: {0}")]
    Config(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(transparent)]
    Nnet(#[from] NnetError),
    #[error(transparent)]
    Outlier(#[from] OutlierError),
    #[error(transparent)]
    Separation(#[from] SeparationError),
    #[error(transparent)]
    Dsa(#[from] DsaError),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Error {
    let path = path.into();
    move |source| Error::Io { path, source }
}
