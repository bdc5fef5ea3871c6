use stylebench_chess::{apply_move, encode_position, BoardState, EncodedPosition, Move, ENCODED_LEN};

use crate::dataset::StateActionPair;
use crate::error::Result;

pub const TRANSITION_LEN: usize = 2 * ENCODED_LEN;

/// Before and after encodings of one move, 2304 binary values.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct TransitionVector {
    pub before: EncodedPosition,
    pub after: EncodedPosition,
}

impl TransitionVector {
    pub fn from_pair(pair: &StateActionPair) -> Result<Self> {
        transition_vector(&pair.state, pair.mv)
    }

    pub fn count_ones(&self) -> u32 {
        self.before.count_ones() + self.after.count_ones()
    }

    /// `out` must hold exactly [`TRANSITION_LEN`] values.
    pub fn write_dense(&self, out: &mut [f64]) {
        self.before.write_dense(&mut out[..ENCODED_LEN]);
        self.after.write_dense(&mut out[ENCODED_LEN..]);
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut v = vec![0.0; TRANSITION_LEN];
        self.write_dense(&mut v);
        v
    }
}

pub fn transition_vector(state: &BoardState, mv: Move) -> Result<TransitionVector> {
    let next = apply_move(state, mv)?;
    Ok(TransitionVector {
        before: encode_position(state),
        after: encode_position(&next),
    })
}
