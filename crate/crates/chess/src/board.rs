use std::fmt;
use std::str::FromStr;

use crate::error::ChessError;
use crate::movegen;
use crate::types::{
    file_of, parse_square, rank_of, square, square_name, Color, Move, Piece, PieceKind, Square,
};

pub const START_FEN: &str = "rnbqkbnr/pppppppp/8/8/8/8/PPPPPPPP/RNBQKBNR w KQkq - 0 1";

/// Castling availability, one flag per side and wing.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct CastlingRights {
    pub white_king: bool,
    pub white_queen: bool,
    pub black_king: bool,
    pub black_queen: bool,
}

impl CastlingRights {
    pub const ALL: CastlingRights = CastlingRights {
        white_king: true,
        white_queen: true,
        black_king: true,
        black_queen: true,
    };

    pub const NONE: CastlingRights = CastlingRights {
        white_king: false,
        white_queen: false,
        black_king: false,
        black_queen: false,
    };

    /// Flags in encoding order: WK, WQ, BK, BQ.
    pub fn as_array(&self) -> [bool; 4] {
        [
            self.white_king,
            self.white_queen,
            self.black_king,
            self.black_queen,
        ]
    }

    pub fn king_side(&self, color: Color) -> bool {
        match color {
            Color::White => self.white_king,
            Color::Black => self.black_king,
        }
    }

    pub fn queen_side(&self, color: Color) -> bool {
        match color {
            Color::White => self.white_queen,
            Color::Black => self.black_queen,
        }
    }

    fn clear_color(&mut self, color: Color) {
        match color {
            Color::White => {
                self.white_king = false;
                self.white_queen = false;
            }
            Color::Black => {
                self.black_king = false;
                self.black_queen = false;
            }
        }
    }

    /// Drop the right tied to a rook home square, if any.
    fn clear_rook_square(&mut self, sq: Square) {
        match sq {
            0 => self.white_queen = false,
            7 => self.white_king = false,
            56 => self.black_queen = false,
            63 => self.black_king = false,
            _ => {}
        }
    }

    fn fen(&self) -> String {
        let mut s = String::new();
        for (flag, c) in self.as_array().into_iter().zip(['K', 'Q', 'k', 'q']) {
            if flag {
                s.push(c);
            }
        }
        if s.is_empty() {
            s.push('-');
        }
        s
    }
}

/// A complete chess position.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct BoardState {
    pub squares: [Option<Piece>; 64],
    pub side_to_move: Color,
    pub castling: CastlingRights,
    pub en_passant: Option<Square>,
    pub halfmove_clock: u32,
    pub fullmove_number: u32,
}

impl Default for BoardState {
    fn default() -> Self {
        Self::start()
    }
}

impl BoardState {
    pub fn start() -> Self {
        START_FEN.parse().expect("start FEN is valid")
    }

    pub fn from_fen(fen: &str) -> Result<Self, ChessError> {
        fen.parse()
    }

    #[inline]
    pub fn piece_at(&self, sq: Square) -> Option<Piece> {
        self.squares[sq as usize]
    }

    pub fn king_square(&self, color: Color) -> Option<Square> {
        (0..64u8).find(|&sq| self.squares[sq as usize] == Some(Piece::new(color, PieceKind::King)))
    }

    pub fn piece_count(&self) -> usize {
        self.squares.iter().flatten().count()
    }

    /// Checks the structural invariants of a position: one king per side,
    /// a plausible en-passant square and castling rights backed by pieces on
    /// their home squares.
    pub fn validate(&self) -> Result<(), ChessError> {
        for color in [Color::White, Color::Black] {
            let kings = self
                .squares
                .iter()
                .filter(|p| **p == Some(Piece::new(color, PieceKind::King)))
                .count();
            if kings != 1 {
                return Err(ChessError::InvalidPosition(format!(
                    "{color:?} has {kings} kings"
                )));
            }
        }
        for sq in (0..8).chain(56..64) {
            if matches!(self.squares[sq], Some(p) if p.kind == PieceKind::Pawn) {
                return Err(ChessError::InvalidPosition(format!(
                    "pawn on back rank at {}",
                    square_name(sq as Square)
                )));
            }
        }
        if let Some(ep) = self.en_passant {
            let expected = match self.side_to_move {
                Color::Black => 2,
                Color::White => 5,
            };
            if rank_of(ep) != expected {
                return Err(ChessError::InvalidPosition(format!(
                    "en-passant square {} on wrong rank",
                    square_name(ep)
                )));
            }
        }
        let has = |sq: Square, color: Color, kind: PieceKind| {
            self.squares[sq as usize] == Some(Piece::new(color, kind))
        };
        let checks = [
            (self.castling.white_king, 4, 7, Color::White, "K"),
            (self.castling.white_queen, 4, 0, Color::White, "Q"),
            (self.castling.black_king, 60, 63, Color::Black, "k"),
            (self.castling.black_queen, 60, 56, Color::Black, "q"),
        ];
        for (flag, king, rook, color, name) in checks {
            if flag && !(has(king, color, PieceKind::King) && has(rook, color, PieceKind::Rook)) {
                return Err(ChessError::InvalidPosition(format!(
                    "castling right {name} without king and rook on home squares"
                )));
            }
        }
        if self.fullmove_number < 1 {
            return Err(ChessError::InvalidPosition("fullmove number is 0".into()));
        }
        Ok(())
    }

    pub fn to_fen(&self) -> String {
        let mut out = String::with_capacity(90);
        for rank in (0..8u8).rev() {
            let mut empty = 0;
            for file in 0..8u8 {
                match self.squares[square(file, rank) as usize] {
                    None => empty += 1,
                    Some(p) => {
                        if empty > 0 {
                            out.push(char::from(b'0' + empty));
                            empty = 0;
                        }
                        out.push(p.fen_char());
                    }
                }
            }
            if empty > 0 {
                out.push(char::from(b'0' + empty));
            }
            if rank > 0 {
                out.push('/');
            }
        }
        let stm = match self.side_to_move {
            Color::White => 'w',
            Color::Black => 'b',
        };
        let ep = self.en_passant.map_or_else(|| "-".to_string(), square_name);
        format!(
            "{out} {stm} {} {ep} {} {}",
            self.castling.fen(),
            self.halfmove_clock,
            self.fullmove_number
        )
    }

    pub fn is_check(&self) -> bool {
        movegen::in_check(self, self.side_to_move)
    }

    /// Plays `mv` after confirming it is legal here.
    pub fn apply_move(&self, mv: Move) -> Result<BoardState, ChessError> {
        if !self.is_legal(mv) {
            return Err(ChessError::IllegalMove(format!("{mv} in {}", self.to_fen())));
        }
        Ok(self.apply_unchecked(mv))
    }

    pub fn is_legal(&self, mv: Move) -> bool {
        movegen::legal_moves(self).binary_search(&mv).is_ok()
    }

    /// Plays a move known to be at least pseudo-legal. Skips the legality
    /// check; the caller is responsible for it.
    pub fn apply_unchecked(&self, mv: Move) -> BoardState {
        let mut next = *self;
        let us = self.side_to_move;
        let piece = self.squares[mv.from as usize].expect("move from an empty square");
        let captured = self.squares[mv.to as usize];
        let mut is_capture = captured.is_some();

        next.squares[mv.from as usize] = None;
        let placed = match mv.promotion {
            Some(p) => Piece::new(us, p.kind()),
            None => piece,
        };
        next.squares[mv.to as usize] = Some(placed);
        next.en_passant = None;

        match piece.kind {
            PieceKind::Pawn => {
                if Some(mv.to) == self.en_passant && captured.is_none() && file_of(mv.from) != file_of(mv.to) {
                    let victim = match us {
                        Color::White => mv.to - 8,
                        Color::Black => mv.to + 8,
                    };
                    next.squares[victim as usize] = None;
                    is_capture = true;
                }
                if mv.from.abs_diff(mv.to) == 16 {
                    next.en_passant = Some((mv.from + mv.to) / 2);
                }
            }
            PieceKind::King => {
                next.castling.clear_color(us);
                if mv.from.abs_diff(mv.to) == 2 {
                    let (rook_from, rook_to) = if mv.to > mv.from {
                        (mv.from + 3, mv.from + 1)
                    } else {
                        (mv.from - 4, mv.from - 1)
                    };
                    next.squares[rook_to as usize] = next.squares[rook_from as usize].take();
                }
            }
            _ => {}
        }
        next.castling.clear_rook_square(mv.from);
        next.castling.clear_rook_square(mv.to);

        next.halfmove_clock = if piece.kind == PieceKind::Pawn || is_capture {
            0
        } else {
            self.halfmove_clock + 1
        };
        if us == Color::Black {
            next.fullmove_number += 1;
        }
        next.side_to_move = us.opposite();
        next
    }

    /// A 64-bit key over placement, side to move, castling and en passant;
    /// used for repetition detection. Clocks are excluded.
    pub fn position_key(&self) -> u64 {
        const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
        const PRIME: u64 = 0x0000_0100_0000_01b3;
        let mut h = OFFSET;
        let mut feed = |b: u8| {
            h ^= b as u64;
            h = h.wrapping_mul(PRIME);
        };
        for p in self.squares.iter() {
            feed(match p {
                None => 0,
                Some(p) => 1 + p.kind.index() as u8 + 6 * p.color.index() as u8,
            });
        }
        feed(self.side_to_move as u8);
        for flag in self.castling.as_array() {
            feed(flag as u8);
        }
        feed(self.en_passant.map_or(255, |s| s));
        h
    }
}

impl FromStr for BoardState {
    type Err = ChessError;

    fn from_str(fen: &str) -> Result<Self, Self::Err> {
        let bad = |reason: &str| ChessError::BadFen {
            fen: fen.to_string(),
            reason: reason.to_string(),
        };
        let fields: Vec<&str> = fen.split_whitespace().collect();
        if fields.len() != 6 && fields.len() != 4 {
            return Err(bad("expected 6 fields"));
        }

        let mut squares = [None; 64];
        let ranks: Vec<&str> = fields[0].split('/').collect();
        if ranks.len() != 8 {
            return Err(bad("placement must have 8 ranks"));
        }
        for (i, row) in ranks.iter().enumerate() {
            let rank = 7 - i as u8;
            let mut file = 0u8;
            for c in row.chars() {
                if let Some(d) = c.to_digit(10) {
                    if !(1..=8).contains(&d) {
                        return Err(bad("bad empty-square count"));
                    }
                    file += d as u8;
                } else {
                    let p = Piece::from_fen_char(c).ok_or_else(|| bad("bad piece letter"))?;
                    if file >= 8 {
                        return Err(bad("rank overflows 8 files"));
                    }
                    squares[square(file, rank) as usize] = Some(p);
                    file += 1;
                }
                if file > 8 {
                    return Err(bad("rank overflows 8 files"));
                }
            }
            if file != 8 {
                return Err(bad("rank does not cover 8 files"));
            }
        }

        let side_to_move = match fields[1] {
            "w" => Color::White,
            "b" => Color::Black,
            _ => return Err(bad("side to move must be w or b")),
        };

        let mut castling = CastlingRights::NONE;
        if fields[2] != "-" {
            for c in fields[2].chars() {
                match c {
                    'K' => castling.white_king = true,
                    'Q' => castling.white_queen = true,
                    'k' => castling.black_king = true,
                    'q' => castling.black_queen = true,
                    _ => return Err(bad("bad castling field")),
                }
            }
        }

        let en_passant = match fields[3] {
            "-" => None,
            s => Some(parse_square(s).ok_or_else(|| bad("bad en-passant square"))?),
        };

        let (halfmove_clock, fullmove_number) = if fields.len() == 6 {
            (
                fields[4].parse().map_err(|_| bad("bad halfmove clock"))?,
                fields[5].parse().map_err(|_| bad("bad fullmove number"))?,
            )
        } else {
            (0, 1)
        };

        let state = BoardState {
            squares,
            side_to_move,
            castling,
            en_passant,
            halfmove_clock,
            fullmove_number,
        };
        state.validate().map_err(|e| bad(&e.to_string()))?;
        if movegen::in_check(&state, side_to_move.opposite()) {
            return Err(bad("side not to move is in check"));
        }
        Ok(state)
    }
}

impl fmt::Display for BoardState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_fen())
    }
}
