//! Standard algebraic notation.

use crate::board::BoardState;
use crate::error::ChessError;
use crate::movegen::legal_moves;
use crate::types::{
    file_of, parse_square, rank_of, square_name, Move, PieceKind, Promotion,
};

fn san_error(san: &str, reason: &str) -> ChessError {
    ChessError::BadSan {
        san: san.to_string(),
        reason: reason.to_string(),
    }
}

/// Cheap shape test used by the PGN tokenizer to tell moves from garbage.
pub fn looks_like_san(token: &str) -> bool {
    let t = token.trim_end_matches(['+', '#', '!', '?']);
    if matches!(t, "O-O" | "O-O-O" | "0-0" | "0-0-0") {
        return true;
    }
    !t.is_empty()
        && t.len() <= 8
        && t.chars().any(|c| ('1'..='8').contains(&c))
        && t
            .chars()
            .all(|c| "abcdefgh12345678NBRQKx=".contains(c))
}

/// Resolves a SAN token to the legal move it denotes in `state`.
pub fn parse_san(state: &BoardState, san: &str) -> Result<Move, ChessError> {
    let core = san.trim_end_matches(['+', '#', '!', '?']);
    let legal = legal_moves(state);

    if matches!(core, "O-O" | "0-0" | "O-O-O" | "0-0-0") {
        let king = state
            .king_square(state.side_to_move)
            .ok_or_else(|| san_error(san, "no king"))?;
        let to = if core.len() == 3 { king + 2 } else { king.wrapping_sub(2) };
        return legal
            .into_iter()
            .find(|m| {
                m.from == king
                    && m.to == to
                    && matches!(state.piece_at(king), Some(p) if p.kind == PieceKind::King)
            })
            .ok_or_else(|| san_error(san, "castling not legal"));
    }

    let mut body = core;
    let mut promotion = None;
    if let Some(idx) = body.find('=') {
        let letter = body[idx + 1..]
            .chars()
            .next()
            .ok_or_else(|| san_error(san, "missing promotion piece"))?;
        promotion = Some(
            PieceKind::from_letter(letter)
                .and_then(Promotion::from_kind)
                .ok_or_else(|| san_error(san, "bad promotion piece"))?,
        );
        body = &body[..idx];
    } else if let Some(last) = body.chars().last() {
        // tolerate "e8Q"
        if body.len() >= 3 && "NBRQ".contains(last) {
            promotion = PieceKind::from_letter(last).and_then(Promotion::from_kind);
            body = &body[..body.len() - 1];
        }
    }

    let (kind, rest) = match body.chars().next() {
        Some(c) if "NBRQK".contains(c) => (PieceKind::from_letter(c).unwrap(), &body[1..]),
        Some(_) => (PieceKind::Pawn, body),
        None => return Err(san_error(san, "empty move")),
    };
    if rest.len() < 2 || !rest.is_ascii() {
        return Err(san_error(san, "missing destination"));
    }
    let to = parse_square(&rest[rest.len() - 2..])
        .ok_or_else(|| san_error(san, "bad destination square"))?;
    let disamb = rest[..rest.len() - 2].trim_end_matches('x');
    let mut from_file = None;
    let mut from_rank = None;
    for c in disamb.chars() {
        match c {
            'a'..='h' => from_file = Some(c as u8 - b'a'),
            '1'..='8' => from_rank = Some(c as u8 - b'1'),
            _ => return Err(san_error(san, "bad disambiguation")),
        }
    }

    let mut candidates = legal.into_iter().filter(|m| {
        m.to == to
            && m.promotion == promotion
            && matches!(state.piece_at(m.from), Some(p) if p.kind == kind)
            && from_file.map_or(true, |f| file_of(m.from) == f)
            && from_rank.map_or(true, |r| rank_of(m.from) == r)
    });
    let first = candidates
        .next()
        .ok_or_else(|| san_error(san, "no legal move matches"))?;
    if candidates.next().is_some() {
        return Err(san_error(san, "ambiguous"));
    }
    Ok(first)
}

/// Formats a legal move in SAN, including check and mate suffixes.
pub fn to_san(state: &BoardState, mv: Move) -> Result<String, ChessError> {
    let legal = legal_moves(state);
    if legal.binary_search(&mv).is_err() {
        return Err(ChessError::IllegalMove(mv.to_string()));
    }
    let piece = state.piece_at(mv.from).expect("legal move has a piece");
    let mut out = String::new();
    if piece.kind == PieceKind::King && mv.from.abs_diff(mv.to) == 2 {
        out.push_str(if mv.to > mv.from { "O-O" } else { "O-O-O" });
    } else {
        let is_capture = state.piece_at(mv.to).is_some()
            || (piece.kind == PieceKind::Pawn && file_of(mv.from) != file_of(mv.to));
        if piece.kind == PieceKind::Pawn {
            if is_capture {
                out.push((b'a' + file_of(mv.from)) as char);
            }
        } else {
            out.push(piece.kind.letter());
            let rivals: Vec<&Move> = legal
                .iter()
                .filter(|m| {
                    m.to == mv.to
                        && m.from != mv.from
                        && state.piece_at(m.from) == Some(piece)
                })
                .collect();
            if !rivals.is_empty() {
                let same_file = rivals.iter().any(|m| file_of(m.from) == file_of(mv.from));
                let same_rank = rivals.iter().any(|m| rank_of(m.from) == rank_of(mv.from));
                if !same_file {
                    out.push((b'a' + file_of(mv.from)) as char);
                } else if !same_rank {
                    out.push((b'1' + rank_of(mv.from)) as char);
                } else {
                    out.push_str(&square_name(mv.from));
                }
            }
        }
        if is_capture {
            out.push('x');
        }
        out.push_str(&square_name(mv.to));
        if let Some(p) = mv.promotion {
            out.push('=');
            out.push(p.kind().letter());
        }
    }
    let next = state.apply_unchecked(mv);
    if next.is_check() {
        out.push(if legal_moves(&next).is_empty() { '#' } else { '+' });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fen(s: &str) -> BoardState {
        s.parse().unwrap()
    }

    #[test]
    fn parses_basic_moves() {
        let s = BoardState::start();
        assert_eq!(parse_san(&s, "e4").unwrap(), "e2e4".parse().unwrap());
        assert_eq!(parse_san(&s, "Nf3").unwrap(), "g1f3".parse().unwrap());
        assert!(parse_san(&s, "e5").is_err());
        assert!(parse_san(&s, "Ke2").is_err());
    }

    #[test]
    fn disambiguation_and_promotion() {
        let rooks = fen("4k3/8/8/8/8/8/4K3/R6R w - - 0 1");
        assert_eq!(parse_san(&rooks, "Rad1").unwrap(), "a1d1".parse().unwrap());
        assert_eq!(parse_san(&rooks, "Rhd1").unwrap(), "h1d1".parse().unwrap());
        assert!(parse_san(&rooks, "Rd1").is_err());
        assert_eq!(to_san(&rooks, "a1d1".parse().unwrap()).unwrap(), "Rad1");

        let s = fen("4k3/P7/8/8/8/8/8/R3K2R w KQ - 0 1");
        assert_eq!(parse_san(&s, "a8=Q+").unwrap(), "a7a8q".parse().unwrap());
        assert_eq!(parse_san(&s, "O-O").unwrap(), "e1g1".parse().unwrap());
        assert_eq!(parse_san(&s, "0-0-0").unwrap(), "e1c1".parse().unwrap());
        assert_eq!(to_san(&s, "a7a8q".parse().unwrap()).unwrap(), "a8=Q+");
        assert_eq!(to_san(&s, "e1c1".parse().unwrap()).unwrap(), "O-O-O");
    }

    #[test]
    fn san_round_trips_over_all_legal_moves() {
        for f in [
            "r3k2r/p1ppqpb1/bn2pnp1/3PN3/1p2P3/2N2Q1p/PPPBBPPP/R3K2R w KQkq - 0 1",
            "rnbq1k1r/pp1Pbppp/2p5/8/2B5/8/PPP1NnPP/RNBQK2R w KQ - 1 8",
            "8/2p5/3p4/KP5r/1R3p1k/8/4P1P1/8 w - - 0 1",
        ] {
            let s = fen(f);
            for m in legal_moves(&s) {
                let san = to_san(&s, m).unwrap();
                assert_eq!(parse_san(&s, &san).unwrap(), m, "{san} in {f}");
            }
        }
    }

    #[test]
    fn mate_suffix() {
        let s = fen("rnbqkbnr/pppp1ppp/8/4p3/6P1/5P2/PPPPP2P/RNBQKBNR b KQkq - 0 2");
        assert_eq!(to_san(&s, "d8h4".parse().unwrap()).unwrap(), "Qh4#");
    }
}
