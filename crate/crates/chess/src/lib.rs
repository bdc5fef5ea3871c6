//! Chess rules substrate: positions, legal moves, FEN/SAN/PGN and the
//! 18-plane binary encoding used by the learning components.

mod board;
mod encode;
mod error;
mod movegen;
mod outcome;
mod pgn;
mod san;
mod types;

pub use board::{BoardState, CastlingRights, START_FEN};
pub use encode::{encode_position, EncodedPosition, ENCODED_LEN, PLANES};
pub use error::ChessError;
pub use movegen::{in_check, is_attacked, legal_moves, perft, pseudo_legal_moves};
pub use outcome::{termination, PositionHistory, Termination};
pub use pgn::{parse_pgn, parse_pgn_strict, PgnError, PgnGame};
pub use san::{parse_san, to_san};
pub use types::{
    file_of, parse_square, rank_of, square, square_name, Color, Move, Piece, PieceKind, Promotion,
    Square,
};

/// Plays a legal move; free-function form of [`BoardState::apply_move`].
pub fn apply_move(state: &BoardState, mv: Move) -> Result<BoardState, ChessError> {
    state.apply_move(mv)
}
