//! 8x8x18 binary plane encoding of a position.
//!
//! Plane layout (each plane is 64 squares indexed `rank * 8 + file`):
//!
//! | planes | content |
//! |--------|---------|
//! | 0-5    | white pawn, knight, bishop, rook, queen, king |
//! | 6-11   | black pawn, knight, bishop, rook, queen, king |
//! | 12     | all ones iff white to move |
//! | 13-16  | castling rights WK, WQ, BK, BQ broadcast over the plane |
//! | 17     | one-hot en-passant target square |
//!
//! Flattened index is `plane * 64 + square`.

use crate::board::BoardState;
use crate::types::{Color, Square};

pub const PLANES: usize = 18;
pub const ENCODED_LEN: usize = PLANES * 64;

pub const SIDE_TO_MOVE_PLANE: usize = 12;
pub const CASTLING_PLANE: usize = 13;
pub const EN_PASSANT_PLANE: usize = 17;

/// A position encoded as 18 bit-planes. Every value is 0 or 1, so each plane
/// is stored as a 64-bit mask.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct EncodedPosition {
    planes: [u64; PLANES],
}

impl EncodedPosition {
    pub fn plane(&self, index: usize) -> u64 {
        self.planes[index]
    }

    #[inline]
    pub fn get(&self, index: usize) -> bool {
        (self.planes[index / 64] >> (index % 64)) & 1 == 1
    }

    pub fn count_ones(&self) -> u32 {
        self.planes.iter().map(|p| p.count_ones()).sum()
    }

    /// Flattened indices of the nonzero entries, ascending.
    pub fn active_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.planes.iter().enumerate().flat_map(|(p, &bits)| {
            let mut rest = bits;
            std::iter::from_fn(move || {
                if rest == 0 {
                    return None;
                }
                let sq = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                Some(p * 64 + sq)
            })
        })
    }

    /// Writes the 1152 values into `out`, which must have exactly that length.
    pub fn write_dense(&self, out: &mut [f64]) {
        assert_eq!(out.len(), ENCODED_LEN);
        out.fill(0.0);
        for i in self.active_indices() {
            out[i] = 1.0;
        }
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut v = vec![0.0; ENCODED_LEN];
        self.write_dense(&mut v);
        v
    }
}

pub fn encode_position(state: &BoardState) -> EncodedPosition {
    let mut planes = [0u64; PLANES];
    for (sq, piece) in state.squares.iter().enumerate() {
        if let Some(p) = piece {
            planes[p.color.index() * 6 + p.kind.index()] |= 1u64 << sq;
        }
    }
    if state.side_to_move == Color::White {
        planes[SIDE_TO_MOVE_PLANE] = u64::MAX;
    }
    for (i, flag) in state.castling.as_array().into_iter().enumerate() {
        if flag {
            planes[CASTLING_PLANE + i] = u64::MAX;
        }
    }
    if let Some(ep) = state.en_passant {
        planes[EN_PASSANT_PLANE] = 1u64 << (ep as Square);
    }
    EncodedPosition { planes }
}
