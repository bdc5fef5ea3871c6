//! Scripted players with fixed, distinct move preferences, used as
//! synthetic "champions" whose style is known in advance.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use stylebench_chess::{
    is_attacked, legal_moves, termination, BoardState, Move, PgnGame, PositionHistory, START_FEN,
};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScriptedPolicy {
    /// Any legal move with equal probability.
    UniformRandom,
    /// Largest material gain, then most enemy material attacked; avoids
    /// leaving the moved piece en prise.
    MaterialGreedy,
    /// Destination closest to the four center squares.
    CenterControl,
    /// Always the first move in `(from, to, promotion)` order.
    FirstLegal,
}

impl ScriptedPolicy {
    pub const STYLES: [ScriptedPolicy; 3] = [
        ScriptedPolicy::UniformRandom,
        ScriptedPolicy::MaterialGreedy,
        ScriptedPolicy::CenterControl,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScriptedPolicy::UniformRandom => "uniform-random",
            ScriptedPolicy::MaterialGreedy => "material-greedy",
            ScriptedPolicy::CenterControl => "center-control",
            ScriptedPolicy::FirstLegal => "first-legal",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        [Self::UniformRandom, Self::MaterialGreedy, Self::CenterControl, Self::FirstLegal]
            .into_iter()
            .find(|p| p.name() == name)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown scripted policy `{name}`")))
    }

    /// Picks among the legal moves of a non-terminal `state`; equal scores
    /// are broken uniformly at random.
    pub fn choose(self, state: &BoardState, moves: &[Move], rng: &mut ChaCha8Rng) -> Move {
        let score: Box<dyn Fn(Move) -> i32> = match self {
            ScriptedPolicy::UniformRandom => return *moves.choose(rng).expect("non-empty"),
            ScriptedPolicy::FirstLegal => return moves[0],
            ScriptedPolicy::MaterialGreedy => Box::new(|m| greedy_score(state, m)),
            ScriptedPolicy::CenterControl => Box::new(|m| center_score(m)),
        };
        let scores: Vec<i32> = moves.iter().map(|&m| score(m)).collect();
        let best = *scores.iter().max().expect("non-empty");
        let top: Vec<Move> = moves
            .iter()
            .zip(&scores)
            .filter(|(_, &s)| s == best)
            .map(|(&m, _)| m)
            .collect();
        *top.choose(rng).expect("non-empty")
    }
}

fn greedy_score(state: &BoardState, m: Move) -> i32 {
    let captured = match state.piece_at(m.to) {
        Some(p) => p.kind.material() as i32,
        None if state.en_passant == Some(m.to)
            && state.piece_at(m.from).map(|p| p.kind) == Some(stylebench_chess::PieceKind::Pawn) =>
        {
            1
        }
        None => 0,
    };
    let promo = m.promotion.map_or(0, |p| p.kind().material() as i32 - 1);
    let mover = state.piece_at(m.from).expect("move from occupied square");
    let next = state.apply_unchecked(m);
    let hanging = if is_attacked(&next, m.to, mover.color.opposite()) {
        m.promotion.map_or(mover.kind.material(), |p| p.kind().material()) as i32
    } else {
        0
    };
    let threatened: i32 = (0..64u8)
        .filter_map(|sq| next.piece_at(sq).map(|p| (sq, p)))
        .filter(|(_, p)| p.color != mover.color)
        .filter(|&(sq, _)| is_attacked(&next, sq, mover.color))
        .map(|(_, p)| p.kind.material() as i32)
        .sum();
    100 * (captured + promo) - 10 * hanging + threatened
}

/// Negated Chebyshev distance of the destination to the center block,
/// doubled so center squares clearly win.
fn center_score(m: Move) -> i32 {
    let f = (m.to % 8) as i32;
    let r = (m.to / 8) as i32;
    let df = (3 - f).max(f - 4).max(0);
    let dr = (3 - r).max(r - 4).max(0);
    -(df.max(dr)) * 2 - (df + dr)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub games_per_policy: usize,
    /// Games still running after this many recorded plies end with "*".
    pub max_plies: usize,
    /// Uniformly random plies played before recording starts, so games
    /// begin from varied positions.
    pub opening_plies: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            games_per_policy: 200,
            max_plies: 40,
            opening_plies: 0,
            seed: 0,
        }
    }
}

fn policy_stream(policy: ScriptedPolicy) -> u64 {
    match policy {
        ScriptedPolicy::UniformRandom => 1,
        ScriptedPolicy::MaterialGreedy => 2,
        ScriptedPolicy::CenterControl => 3,
        ScriptedPolicy::FirstLegal => 4,
    }
}

/// One self-play game; the policy is named as both White and Black.
pub fn play_game(policy: ScriptedPolicy, index: usize, cfg: &SynthConfig) -> PgnGame {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream((policy_stream(policy) << 32) | index as u64);
    let mut state = BoardState::start();
    let mut history = PositionHistory::new();
    history.push(&state);
    for _ in 0..cfg.opening_plies {
        let moves = legal_moves(&state);
        if moves.is_empty() || termination(&state, &history).is_some() {
            break;
        }
        state = state.apply_unchecked(moves[rng.gen_range(0..moves.len())]);
        history.push(&state);
    }
    let start = state;
    let mut moves_played = Vec::new();
    let mut result = "*".to_string();
    loop {
        if let Some(t) = termination(&state, &history) {
            result = t.result_tag().to_string();
            break;
        }
        if moves_played.len() >= cfg.max_plies {
            break;
        }
        let moves = legal_moves(&state);
        let m = policy.choose(&state, &moves, &mut rng);
        moves_played.push(m);
        state = state.apply_unchecked(m);
        history.push(&state);
    }
    let mut headers = vec![
        ("Event".to_string(), "synthetic".to_string()),
        ("Round".to_string(), (index + 1).to_string()),
        ("White".to_string(), policy.name().to_string()),
        ("Black".to_string(), policy.name().to_string()),
        ("Result".to_string(), result.clone()),
    ];
    let fen = start.to_fen();
    if fen != START_FEN {
        headers.push(("SetUp".to_string(), "1".to_string()));
        headers.push(("FEN".to_string(), fen));
    }
    PgnGame {
        headers,
        start,
        moves: moves_played,
        result,
    }
}

/// `cfg.games_per_policy` games for each policy, grouped by policy in the
/// given order. Games are generated in parallel; each has its own stream.
pub fn generate_corpus(policies: &[ScriptedPolicy], cfg: &SynthConfig) -> Vec<PgnGame> {
    let jobs: Vec<(ScriptedPolicy, usize)> = policies
        .iter()
        .flat_map(|&p| (0..cfg.games_per_policy).map(move |i| (p, i)))
        .collect();
    jobs.par_iter().map(|&(p, i)| play_game(p, i, cfg)).collect()
}

pub fn corpus_to_pgn(games: &[PgnGame]) -> String {
    games.iter().map(PgnGame::to_pgn).collect()
}
