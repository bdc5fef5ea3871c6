use crate::board::BoardState;
use crate::movegen::legal_moves;
use crate::types::Color;

/// Why a position ends the game.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Termination {
    /// The side to move is mated.
    Checkmate { winner: Color },
    Stalemate,
    FiftyMoveRule,
    ThreefoldRepetition,
}

impl Termination {
    /// Score from the perspective of the side to move in the terminal
    /// position: -1 when mated, 0 for every draw.
    pub fn value_for_side_to_move(&self) -> f64 {
        match self {
            Termination::Checkmate { .. } => -1.0,
            _ => 0.0,
        }
    }

    pub fn result_tag(&self) -> &'static str {
        match self {
            Termination::Checkmate { winner: Color::White } => "1-0",
            Termination::Checkmate { winner: Color::Black } => "0-1",
            _ => "1/2-1/2",
        }
    }
}

/// Position keys of the game so far, for repetition counting.
#[derive(Clone, Debug, Default)]
pub struct PositionHistory {
    keys: Vec<u64>,
}

impl PositionHistory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, state: &BoardState) {
        self.keys.push(state.position_key());
    }

    pub fn pop(&mut self) {
        self.keys.pop();
    }

    pub fn keys(&self) -> &[u64] {
        &self.keys
    }

    pub fn occurrences(&self, key: u64) -> usize {
        self.keys.iter().filter(|&&k| k == key).count()
    }
}

/// Terminal status of `state`. `history` holds the keys of positions
/// reached so far, including `state` itself.
pub fn termination(state: &BoardState, history: &PositionHistory) -> Option<Termination> {
    if legal_moves(state).is_empty() {
        return Some(if state.is_check() {
            Termination::Checkmate {
                winner: state.side_to_move.opposite(),
            }
        } else {
            Termination::Stalemate
        });
    }
    if state.halfmove_clock >= 100 {
        return Some(Termination::FiftyMoveRule);
    }
    if history.occurrences(state.position_key()) >= 3 {
        return Some(Termination::ThreefoldRepetition);
    }
    None
}
