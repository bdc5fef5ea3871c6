//! Per-player state-action datasets.
//!
//! Only the target player's plies become pairs; the opponent's moves just
//! advance the board. Train/test splits are made over whole games.
//!
//! Cache file layout (little-endian):
//!
//! ```text
//! magic "SBD1" | version u32 | player (u32 length + UTF-8) | pair count u32
//! per pair: game id u32 | ply u16 | FEN (u32 length + UTF-8) | move label u16
//! outcome block: one i8 per pair (+1 win, -1 loss, 0 draw/unknown for the mover)
//! ```
//!
//! The outcome block trails the pair records, so a reader that stops after
//! the last pair sees the plain record layout.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use stylebench_chess::{encode_position, parse_pgn, BoardState, Color, EncodedPosition, Move, PgnGame};

use crate::error::{Error, Result};
use crate::labels::{label_move, move_label, MoveLabel};

pub const CACHE_MAGIC: &[u8; 4] = b"SBD1";
pub const CACHE_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct StateActionPair {
    pub state: BoardState,
    pub mv: Move,
    pub player: String,
    pub game_id: u32,
    pub ply: u16,
    /// Final result from the mover's point of view: 1, -1 or 0.
    pub outcome: i8,
}

impl StateActionPair {
    pub fn position(&self) -> EncodedPosition {
        encode_position(&self.state)
    }

    pub fn label(&self) -> MoveLabel {
        move_label(self.mv)
    }
}

fn outcome_for(result: &str, mover: Color) -> i8 {
    let white = match result {
        "1-0" => 1,
        "0-1" => -1,
        _ => 0,
    };
    match mover {
        Color::White => white,
        Color::Black => -white,
    }
}

/// One pair per ply at which `player` is to move, in ply order. A player
/// named on both sides (self-play) owns every ply.
pub fn extract_pairs(game: &PgnGame, game_id: u32, player: &str) -> Result<Vec<StateActionPair>> {
    let plays_white = game.white() == Some(player);
    let plays_black = game.black() == Some(player);
    if !plays_white && !plays_black {
        return Err(Error::PlayerNotInGame {
            player: player.to_string(),
            game: game_id,
        });
    }
    let mut out = Vec::new();
    let mut state = game.start;
    for (ply, &mv) in game.moves.iter().enumerate() {
        let mover = state.side_to_move;
        if (mover == Color::White && plays_white) || (mover == Color::Black && plays_black) {
            out.push(StateActionPair {
                state,
                mv,
                player: player.to_string(),
                game_id,
                ply: ply as u16,
                outcome: outcome_for(&game.result, mover),
            });
        }
        state = state.apply_unchecked(mv);
    }
    Ok(out)
}

/// Seeded shuffle, then the first `ceil(ratio * n)` items train and the
/// rest test.
pub fn split_games<T: Clone>(games: &[T], ratio: f64, seed: u64) -> Result<(Vec<T>, Vec<T>)> {
    if games.is_empty() {
        return Err(Error::Empty("cannot split an empty game list".into()));
    }
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "split ratio must lie in (0, 1), got {ratio}"
        )));
    }
    let mut order: Vec<usize> = (0..games.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    // the epsilon keeps 0.8 * 10 from rounding up to 9
    let n_train = ((ratio * games.len() as f64) - 1e-9).ceil() as usize;
    let n_train = n_train.clamp(1, games.len());
    let train = order[..n_train].iter().map(|&i| games[i].clone()).collect();
    let test = order[n_train..].iter().map(|&i| games[i].clone()).collect();
    Ok((train, test))
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlayerDataset {
    pub player: String,
    pub train: Vec<StateActionPair>,
    pub test: Vec<StateActionPair>,
    pub train_games: usize,
    pub test_games: usize,
}

impl PlayerDataset {
    /// Selects `player`'s games from `corpus` (game id = corpus index),
    /// splits them by game and extracts pairs.
    pub fn build(corpus: &[PgnGame], player: &str, ratio: f64, seed: u64) -> Result<Self> {
        let ids: Vec<u32> = corpus
            .iter()
            .enumerate()
            .filter(|(_, g)| g.white() == Some(player) || g.black() == Some(player))
            .map(|(i, _)| i as u32)
            .collect();
        if ids.is_empty() {
            return Err(Error::Empty(format!("no games found for player `{player}`")));
        }
        let (mut train_ids, mut test_ids) = split_games(&ids, ratio, seed)?;
        train_ids.sort_unstable();
        test_ids.sort_unstable();
        let extract = |ids: &[u32]| -> Result<Vec<StateActionPair>> {
            let per_game: Vec<Vec<StateActionPair>> = ids
                .par_iter()
                .map(|&id| extract_pairs(&corpus[id as usize], id, player))
                .collect::<Result<_>>()?;
            Ok(per_game.into_iter().flatten().collect())
        };
        Ok(PlayerDataset {
            player: player.to_string(),
            train: extract(&train_ids)?,
            test: extract(&test_ids)?,
            train_games: train_ids.len(),
            test_games: test_ids.len(),
        })
    }
}

/// Reads every `*.pgn` file under `dir` in file-name order. Games that fail
/// to parse are skipped with a warning.
pub fn load_pgn_dir(dir: &Path) -> Result<Vec<PgnGame>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(format!("reading {}", dir.display()), e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("pgn")))
        .collect();
    files.sort();
    let mut games = Vec::new();
    for path in files {
        let text = fs::read_to_string(&path)
            .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        for parsed in parse_pgn(&text) {
            match parsed {
                Ok(g) => games.push(g),
                Err(e) => log::warn!("{}: skipping {e}", path.display()),
            }
        }
    }
    Ok(games)
}

fn put_str(out: &mut Vec<u8>, s: &str) {
    out.extend_from_slice(&(s.len() as u32).to_le_bytes());
    out.extend_from_slice(s.as_bytes());
}

pub fn encode_cache(player: &str, pairs: &[StateActionPair]) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + pairs.len() * 72);
    out.extend_from_slice(CACHE_MAGIC);
    out.extend_from_slice(&CACHE_VERSION.to_le_bytes());
    put_str(&mut out, player);
    out.extend_from_slice(&(pairs.len() as u32).to_le_bytes());
    for p in pairs {
        out.extend_from_slice(&p.game_id.to_le_bytes());
        out.extend_from_slice(&p.ply.to_le_bytes());
        put_str(&mut out, &p.state.to_fen());
        out.extend_from_slice(&p.label().0.to_le_bytes());
    }
    out.extend(pairs.iter().map(|p| p.outcome as u8));
    out
}

struct Reader<'a> {
    buf: &'a [u8],
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        if self.buf.len() < n {
            return Err(Error::Cache("truncated file".into()));
        }
        let (head, rest) = self.buf.split_at(n);
        self.buf = rest;
        Ok(head)
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn string(&mut self) -> Result<String> {
        let n = self.u32()? as usize;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|_| Error::Cache("invalid UTF-8".into()))
    }
}

pub fn decode_cache(bytes: &[u8]) -> Result<(String, Vec<StateActionPair>)> {
    let mut r = Reader { buf: bytes };
    if r.take(4)? != CACHE_MAGIC {
        return Err(Error::Cache("bad magic".into()));
    }
    let version = r.u32()?;
    if version != CACHE_VERSION {
        return Err(Error::Cache(format!("unsupported version {version}")));
    }
    let player = r.string()?;
    let count = r.u32()? as usize;
    let mut pairs = Vec::with_capacity(count);
    for _ in 0..count {
        let game_id = r.u32()?;
        let ply = r.u16()?;
        let fen = r.string()?;
        let label = r.u16()?;
        let state: BoardState = fen.parse()?;
        let mv = label_move(label as u32)?;
        if !state.is_legal(mv) {
            return Err(Error::Cache(format!("move {mv} is illegal in {fen}")));
        }
        pairs.push(StateActionPair {
            state,
            mv,
            player: player.clone(),
            game_id,
            ply,
            outcome: 0,
        });
    }
    // older writers may omit the outcome block
    if r.buf.len() >= count {
        for (p, &b) in pairs.iter_mut().zip(r.buf) {
            p.outcome = b as i8;
        }
    }
    Ok((player, pairs))
}

pub fn write_cache(path: &Path, player: &str, pairs: &[StateActionPair]) -> Result<()> {
    let bytes = encode_cache(player, pairs);
    let mut f = fs::File::create(path).map_err(|e| Error::io(format!("creating {}", path.display()), e))?;
    f.write_all(&bytes)
        .map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

pub fn read_cache(path: &Path) -> Result<(String, Vec<StateActionPair>)> {
    let mut bytes = Vec::new();
    fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::MissingArtifact(path.to_path_buf()),
            _ => Error::io(format!("reading {}", path.display()), e),
        })?;
    decode_cache(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use stylebench_chess::{legal_moves, parse_pgn_strict};

    fn game(text: &str) -> PgnGame {
        parse_pgn_strict(text).unwrap().remove(0)
    }

    #[test]
    fn pairs_follow_the_target_side() {
        let g = game("[White \"A\"]\n[Black \"B\"]\n1. e4 e5 2. Nf3 *");
        let white = extract_pairs(&g, 0, "A").unwrap();
        assert_eq!(white.len(), 2);
        assert_eq!(white[0].state, BoardState::start());
        assert_eq!(white[1].mv, "g1f3".parse().unwrap());
        assert_eq!(white[1].ply, 2);
        let black = extract_pairs(&g, 0, "B").unwrap();
        assert_eq!(black.len(), 1);
        assert_eq!(black[0].mv, "e7e5".parse().unwrap());
        assert!(matches!(
            extract_pairs(&g, 0, "C"),
            Err(Error::PlayerNotInGame { .. })
        ));
    }

    #[test]
    fn empty_game_has_no_pairs() {
        let g = game("[White \"A\"]\n[Black \"B\"]\n*");
        assert!(extract_pairs(&g, 0, "A").unwrap().is_empty());
    }

    #[test]
    fn outcome_is_from_the_movers_view() {
        let g = game("[White \"A\"]\n[Black \"B\"]\n[Result \"0-1\"]\n1. e4 e5 0-1");
        assert_eq!(extract_pairs(&g, 0, "A").unwrap()[0].outcome, -1);
        assert_eq!(extract_pairs(&g, 0, "B").unwrap()[0].outcome, 1);
    }

    #[test]
    fn split_sizes_and_determinism() {
        let games: Vec<u32> = (0..10).collect();
        let (tr, te) = split_games(&games, 0.8, 7).unwrap();
        assert_eq!((tr.len(), te.len()), (8, 2));
        assert_eq!(split_games(&games, 0.8, 7).unwrap(), (tr.clone(), te.clone()));
        let mut all: Vec<u32> = tr.iter().chain(&te).copied().collect();
        all.sort();
        assert_eq!(all, games);
        let five: Vec<u32> = (0..5).collect();
        let (tr, te) = split_games(&five, 0.8, 1).unwrap();
        assert_eq!((tr.len(), te.len()), (4, 1));
        assert!(split_games::<u32>(&[], 0.8, 0).is_err());
        assert!(split_games(&five, 1.0, 0).is_err());
    }

    #[test]
    fn cache_round_trip() {
        let g = game("[White \"A\"]\n[Black \"B\"]\n[Result \"1-0\"]\n1. e4 e5 2. Nf3 Nc6 3. Bb5 a6 4. Bxc6 dxc6 5. O-O 1-0");
        let pairs = extract_pairs(&g, 3, "A").unwrap();
        let bytes = encode_cache("A", &pairs);
        assert_eq!(&bytes[..4], b"SBD1");
        let (player, back) = decode_cache(&bytes).unwrap();
        assert_eq!(player, "A");
        assert_eq!(back, pairs);
        for p in &back {
            assert!(legal_moves(&p.state).contains(&p.mv));
        }
        assert!(decode_cache(&bytes[..bytes.len() - pairs.len() - 1]).is_err());
    }
}
