use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ChessError {
    #[error("invalid FEN `{fen}`: {reason}")]
    BadFen { fen: String, reason: String },
    #[error("invalid position: {0}")]
    InvalidPosition(String),
    #[error("invalid UCI move `{0}`")]
    BadUci(String),
    #[error("illegal move {0}")]
    IllegalMove(String),
    #[error("cannot parse SAN `{san}`: {reason}")]
    BadSan { san: String, reason: String },
}
