//! Policy output space: one label per (from, to, promotion) triple.

use stylebench_chess::{Move, Promotion};

use crate::error::{Error, Result};

pub const LABEL_SPACE: usize = 64 * 64 * 5;

/// `((from * 64) + to) * 5 + promo`, promo 0 for none, 1..=4 for N, B, R, Q.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MoveLabel(pub u16);

impl MoveLabel {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

pub fn move_label(mv: Move) -> MoveLabel {
    let promo = mv.promotion.map_or(0, Promotion::code) as u16;
    MoveLabel((mv.from as u16 * 64 + mv.to as u16) * 5 + promo)
}

pub fn label_move(label: u32) -> Result<Move> {
    if label as usize >= LABEL_SPACE {
        return Err(Error::LabelOutOfRange(label));
    }
    let promo = label % 5;
    let pair = label / 5;
    let promotion = match promo {
        0 => None,
        p => Some(Promotion::ALL[p as usize - 1]),
    };
    Ok(Move {
        from: (pair / 64) as u8,
        to: (pair % 64) as u8,
        promotion,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use stylebench_chess::{legal_moves, BoardState};

    #[test]
    fn reference_labels() {
        assert_eq!(move_label("e2e4".parse().unwrap()), MoveLabel(3980));
        assert_eq!(move_label("e7e8q".parse().unwrap()), MoveLabel(16944));
        assert_eq!(LABEL_SPACE, 20480);
    }

    #[test]
    fn out_of_range() {
        assert!(label_move(20480).is_err());
        assert!(label_move(20479).is_ok());
    }

    #[test]
    fn round_trip_on_random_legal_moves() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut count = 0;
        let mut s = BoardState::start();
        while count < 1000 {
            let moves = legal_moves(&s);
            if moves.is_empty() || s.halfmove_clock > 60 {
                s = BoardState::start();
                continue;
            }
            let m = *moves.choose(&mut rng).unwrap();
            assert_eq!(label_move(move_label(m).0 as u32).unwrap(), m);
            s = s.apply_unchecked(m);
            count += 1;
        }
    }

    #[test]
    fn label_order_matches_move_order() {
        let moves = legal_moves(&BoardState::start());
        let labels: Vec<MoveLabel> = moves.iter().map(|&m| move_label(m)).collect();
        assert!(labels.windows(2).all(|w| w[0] < w[1]));
    }
}
