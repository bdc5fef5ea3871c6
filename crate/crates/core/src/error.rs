use std::path::PathBuf;

use stylebench_chess::{ChessError, PgnError};
use stylebench_neural::NeuralError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Chess(#[from] ChessError),
    #[error(transparent)]
    Pgn(#[from] PgnError),
    #[error(transparent)]
    Neural(#[from] NeuralError),
    #[error("player `{player}` is not White or Black in game {game}")]
    PlayerNotInGame { player: String, game: u32 },
    #[error("move label {0} out of range (must be < 20480)")]
    LabelOutOfRange(u32),
    #[error("empty input: {0}")]
    Empty(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("no legal moves in position {0}")]
    NoLegalMoves(String),
    #[error("dataset cache: {0}")]
    Cache(String),
    #[error("degenerate projection: component {component} has zero variance")]
    DegenerateVariance { component: usize },
    #[error("point ({x}, {y}) lies outside the histogram bounds")]
    OutOfBounds { x: f64, y: f64 },
    #[error("histograms are not on the same grid")]
    GridMismatch,
    #[error("missing artifact {}", .0.display())]
    MissingArtifact(PathBuf),
    #[error("config: {0}")]
    Config(String),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
