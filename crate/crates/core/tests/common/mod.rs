#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stylebench::dataset::{PlayerDataset, StateActionPair};
use stylebench::synthetic::{generate_corpus, ScriptedPolicy, SynthConfig};
use stylebench_chess::{legal_moves, BoardState, PgnGame};

pub fn synth(policies: &[ScriptedPolicy], games: usize, max_plies: usize, opening: usize, seed: u64) -> Vec<PgnGame> {
    let cfg = SynthConfig {
        games_per_policy: games,
        max_plies,
        opening_plies: opening,
        seed,
    };
    generate_corpus(policies, &cfg)
}

pub fn dataset(corpus: &[PgnGame], policy: ScriptedPolicy, seed: u64) -> PlayerDataset {
    PlayerDataset::build(corpus, policy.name(), 0.8, seed).unwrap()
}

/// Non-terminal positions reached by uniformly random play.
pub fn random_positions(n: usize, seed: u64) -> Vec<BoardState> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let mut s = BoardState::start();
        let plies = rng.gen_range(0..60);
        for _ in 0..plies {
            let moves = legal_moves(&s);
            if moves.is_empty() {
                break;
            }
            s = s.apply_unchecked(moves[rng.gen_range(0..moves.len())]);
        }
        if !legal_moves(&s).is_empty() {
            out.push(s);
        }
    }
    out
}

pub fn pairs_of(d: &PlayerDataset) -> Vec<StateActionPair> {
    d.train.iter().chain(&d.test).cloned().collect()
}
