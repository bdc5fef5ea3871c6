//! Legal move generation on the mailbox board.
//!
//! Pseudo-legal moves are generated per piece and filtered by playing each
//! one and testing whether the mover's king is left attacked.

use crate::board::BoardState;
use crate::types::{file_of, rank_of, Color, Move, Piece, PieceKind, Promotion, Square};

const KNIGHT_STEPS: [(i8, i8); 8] = [
    (1, 2),
    (2, 1),
    (2, -1),
    (1, -2),
    (-1, -2),
    (-2, -1),
    (-2, 1),
    (-1, 2),
];
const KING_STEPS: [(i8, i8); 8] = [
    (1, 0),
    (1, 1),
    (0, 1),
    (-1, 1),
    (-1, 0),
    (-1, -1),
    (0, -1),
    (1, -1),
];
const ROOK_DIRS: [(i8, i8); 4] = [(1, 0), (-1, 0), (0, 1), (0, -1)];
const BISHOP_DIRS: [(i8, i8); 4] = [(1, 1), (1, -1), (-1, 1), (-1, -1)];

#[inline]
fn offset(sq: Square, df: i8, dr: i8) -> Option<Square> {
    let f = file_of(sq) as i8 + df;
    let r = rank_of(sq) as i8 + dr;
    ((0..8).contains(&f) && (0..8).contains(&r)).then(|| (r * 8 + f) as Square)
}

/// True when `sq` is attacked by any piece of color `by`.
pub fn is_attacked(state: &BoardState, sq: Square, by: Color) -> bool {
    let is = |s: Square, kind: PieceKind| state.squares[s as usize] == Some(Piece::new(by, kind));

    // a pawn of color `by` attacks diagonally forward, so look backward from sq
    let pawn_dr = match by {
        Color::White => -1,
        Color::Black => 1,
    };
    for df in [-1, 1] {
        if let Some(s) = offset(sq, df, pawn_dr) {
            if is(s, PieceKind::Pawn) {
                return true;
            }
        }
    }
    for (df, dr) in KNIGHT_STEPS {
        if let Some(s) = offset(sq, df, dr) {
            if is(s, PieceKind::Knight) {
                return true;
            }
        }
    }
    for (df, dr) in KING_STEPS {
        if let Some(s) = offset(sq, df, dr) {
            if is(s, PieceKind::King) {
                return true;
            }
        }
    }
    for (dirs, other) in [(ROOK_DIRS, PieceKind::Rook), (BISHOP_DIRS, PieceKind::Bishop)] {
        for (df, dr) in dirs {
            let mut cur = sq;
            while let Some(s) = offset(cur, df, dr) {
                if let Some(p) = state.squares[s as usize] {
                    if p.color == by && (p.kind == other || p.kind == PieceKind::Queen) {
                        return true;
                    }
                    break;
                }
                cur = s;
            }
        }
    }
    false
}

pub fn in_check(state: &BoardState, color: Color) -> bool {
    match state.king_square(color) {
        Some(k) => is_attacked(state, k, color.opposite()),
        None => false,
    }
}

fn push_pawn_move(out: &mut Vec<Move>, from: Square, to: Square, promotes: bool) {
    if promotes {
        for p in Promotion::ALL {
            out.push(Move::with_promotion(from, to, p));
        }
    } else {
        out.push(Move::new(from, to));
    }
}

/// Pseudo-legal moves: obey piece movement rules but may leave the king in
/// check. Castling is only emitted when the king's path is safe.
pub fn pseudo_legal_moves(state: &BoardState) -> Vec<Move> {
    let us = state.side_to_move;
    let them = us.opposite();
    let mut out = Vec::with_capacity(48);
    let empty = |s: Square| state.squares[s as usize].is_none();
    let enemy = |s: Square| matches!(state.squares[s as usize], Some(p) if p.color == them);

    for from in 0..64u8 {
        let piece = match state.squares[from as usize] {
            Some(p) if p.color == us => p,
            _ => continue,
        };
        match piece.kind {
            PieceKind::Pawn => {
                let (dr, start_rank, last_rank) = match us {
                    Color::White => (1i8, 1u8, 7u8),
                    Color::Black => (-1, 6, 0),
                };
                if let Some(one) = offset(from, 0, dr) {
                    if empty(one) {
                        push_pawn_move(&mut out, from, one, rank_of(one) == last_rank);
                        if rank_of(from) == start_rank {
                            let two = offset(one, 0, dr).expect("double push stays on board");
                            if empty(two) {
                                out.push(Move::new(from, two));
                            }
                        }
                    }
                }
                for df in [-1, 1] {
                    if let Some(to) = offset(from, df, dr) {
                        if enemy(to) {
                            push_pawn_move(&mut out, from, to, rank_of(to) == last_rank);
                        } else if Some(to) == state.en_passant {
                            out.push(Move::new(from, to));
                        }
                    }
                }
            }
            PieceKind::Knight | PieceKind::King => {
                let steps = if piece.kind == PieceKind::Knight {
                    &KNIGHT_STEPS
                } else {
                    &KING_STEPS
                };
                for &(df, dr) in steps {
                    if let Some(to) = offset(from, df, dr) {
                        if empty(to) || enemy(to) {
                            out.push(Move::new(from, to));
                        }
                    }
                }
            }
            PieceKind::Bishop | PieceKind::Rook | PieceKind::Queen => {
                let dirs: &[(i8, i8)] = match piece.kind {
                    PieceKind::Bishop => &BISHOP_DIRS,
                    PieceKind::Rook => &ROOK_DIRS,
                    _ => &[
                        (1, 0),
                        (-1, 0),
                        (0, 1),
                        (0, -1),
                        (1, 1),
                        (1, -1),
                        (-1, 1),
                        (-1, -1),
                    ],
                };
                for &(df, dr) in dirs {
                    let mut cur = from;
                    while let Some(to) = offset(cur, df, dr) {
                        if empty(to) {
                            out.push(Move::new(from, to));
                        } else {
                            if enemy(to) {
                                out.push(Move::new(from, to));
                            }
                            break;
                        }
                        cur = to;
                    }
                }
            }
        }
    }

    // castling
    let home = match us {
        Color::White => 4u8,
        Color::Black => 60u8,
    };
    if state.squares[home as usize] == Some(Piece::new(us, PieceKind::King))
        && (state.castling.king_side(us) || state.castling.queen_side(us))
        && !is_attacked(state, home, them)
    {
        if state.castling.king_side(us)
            && empty(home + 1)
            && empty(home + 2)
            && !is_attacked(state, home + 1, them)
            && !is_attacked(state, home + 2, them)
        {
            out.push(Move::new(home, home + 2));
        }
        if state.castling.queen_side(us)
            && empty(home - 1)
            && empty(home - 2)
            && empty(home - 3)
            && !is_attacked(state, home - 1, them)
            && !is_attacked(state, home - 2, them)
        {
            out.push(Move::new(home, home - 2));
        }
    }
    out
}

/// All legal moves, sorted by `(from, to, promotion)`.
pub fn legal_moves(state: &BoardState) -> Vec<Move> {
    let us = state.side_to_move;
    let mut moves: Vec<Move> = pseudo_legal_moves(state)
        .into_iter()
        .filter(|&m| !in_check(&state.apply_unchecked(m), us))
        .collect();
    moves.sort_unstable();
    moves
}

/// Leaf count of the legal move tree at `depth`.
pub fn perft(state: &BoardState, depth: u32) -> u64 {
    if depth == 0 {
        return 1;
    }
    let moves = legal_moves(state);
    if depth == 1 {
        return moves.len() as u64;
    }
    moves
        .iter()
        .map(|&m| perft(&state.apply_unchecked(m), depth - 1))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fen(s: &str) -> BoardState {
        s.parse().unwrap()
    }

    #[test]
    fn start_has_twenty_moves() {
        assert_eq!(legal_moves(&BoardState::start()).len(), 20);
    }

    #[test]
    fn stalemate_has_no_moves() {
        // black king a8, white queen b6, white king c7
        let s = fen("k7/2K5/1Q6/8/8/8/8/8 b - - 0 1");
        assert!(!s.is_check());
        assert!(legal_moves(&s).is_empty());
    }

    #[test]
    fn single_escape_from_check() {
        // rook checks along the first rank; a2 is blocked by the pawn
        let s = fen("4k3/8/8/8/8/8/P7/K6r w - - 0 1");
        assert!(s.is_check());
        let moves = legal_moves(&s);
        assert_eq!(moves, vec!["a1b2".parse::<Move>().unwrap()]);
    }

    #[test]
    fn pinned_piece_cannot_leave_line() {
        let s = fen("4k3/4r3/8/8/8/8/4N3/4K3 w - - 0 1");
        assert!(legal_moves(&s).iter().all(|m| m.from != 12));
    }

    #[test]
    fn castling_through_check_is_illegal() {
        let s = fen("4kr2/8/8/8/8/8/8/R3K2R w KQ - 0 1");
        let moves = legal_moves(&s);
        assert!(!moves.contains(&Move::new(4, 6)));
        assert!(moves.contains(&Move::new(4, 2)));
    }

    #[test]
    fn ordering_is_sorted_and_stable() {
        let s = fen("r3k2r/p1ppqpb1/bn2pnp1/3PN3/1p2P3/2N2Q1p/PPPBBPPP/R3K2R w KQkq - 0 1");
        let a = legal_moves(&s);
        let b = legal_moves(&s);
        assert_eq!(a, b);
        assert!(a.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn perft_depth_zero_and_mate() {
        assert_eq!(perft(&BoardState::start(), 0), 1);
        let mate = fen("rnb1kbnr/pppp1ppp/8/4p3/6Pq/5P2/PPPPP2P/RNBQKBNR w KQkq - 1 3");
        assert_eq!(perft(&mate, 1), 0);
    }

    #[test]
    fn perft_shallow_start() {
        let s = BoardState::start();
        assert_eq!(perft(&s, 1), 20);
        assert_eq!(perft(&s, 2), 400);
        assert_eq!(perft(&s, 3), 8902);
    }

    // Reference counts for well-known perft positions.
    #[test]
    fn perft_kiwipete() {
        let s = fen("r3k2r/p1ppqpb1/bn2pnp1/3PN3/1p2P3/2N2Q1p/PPPBBPPP/R3K2R w KQkq - 0 1");
        assert_eq!(perft(&s, 1), 48);
        assert_eq!(perft(&s, 2), 2039);
        assert_eq!(perft(&s, 3), 97862);
    }

    #[test]
    fn perft_position_3_and_4() {
        let p3 = fen("8/2p5/3p4/KP5r/1R3p1k/8/4P1P1/8 w - - 0 1");
        assert_eq!(perft(&p3, 4), 43238);
        let p4 = fen("r3k2r/Pppp1ppp/1b3nbN/nP6/BBP1P3/q4N2/Pp1P2PP/R2Q1RK1 w kq - 0 1");
        assert_eq!(perft(&p4, 3), 9467);
        let p5 = fen("rnbq1k1r/pp1Pbppp/2p5/8/2B5/8/PPP1NnPP/RNBQK2R w KQ - 1 8");
        assert_eq!(perft(&p5, 3), 62379);
    }
}
