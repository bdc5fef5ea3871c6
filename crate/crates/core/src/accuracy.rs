//! Move selection by a model variant and agreement with recorded moves.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use stylebench_chess::{BoardState, Move, PositionHistory};

use crate::dataset::StateActionPair;
use crate::error::{Error, Result};
use crate::mcts::{run_search, select_most_visited, PolicyEvaluator, SearchConfig};
use crate::policy::PolicyModel;

pub const ACCURACY_RESAMPLES: usize = 100;

#[derive(Clone, Debug, PartialEq)]
pub enum Selector {
    /// Highest-probability policy move.
    ArgmaxPolicy,
    /// Most visited root move after a search.
    MostVisited(SearchConfig),
}

impl Selector {
    pub fn select(&self, model: &PolicyModel, embedding: &[f64], state: &BoardState) -> Result<Move> {
        match self {
            Selector::ArgmaxPolicy => Ok(model.predict(embedding, state)?.argmax()),
            Selector::MostVisited(cfg) => {
                let eval = PolicyEvaluator { model, embedding };
                let r = run_search(state, &PositionHistory::new(), &eval, cfg)?;
                select_most_visited(&r.visit_distribution())
            }
        }
    }
}

/// One selected move per pair, in pair order.
pub fn select_moves(
    model: &PolicyModel,
    embedding: &[f64],
    pairs: &[StateActionPair],
    selector: &Selector,
) -> Result<Vec<Move>> {
    pairs
        .par_iter()
        .map(|p| selector.select(model, embedding, &p.state))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Accuracy {
    pub mean: f64,
    /// Bootstrap standard deviation over resampled pairs.
    pub std: f64,
    pub n: usize,
}

/// Fraction of hits with a seeded bootstrap standard deviation.
pub fn accuracy_from_hits(hits: &[bool], resamples: usize, seed: u64) -> Result<Accuracy> {
    if hits.is_empty() {
        return Err(Error::Empty("no test pairs".into()));
    }
    let n = hits.len();
    let mean = hits.iter().filter(|&&h| h).count() as f64 / n as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let means: Vec<f64> = (0..resamples)
        .map(|_| (0..n).filter(|_| hits[rng.gen_range(0..n)]).count() as f64 / n as f64)
        .collect();
    Ok(Accuracy {
        mean,
        std: crate::style::sample_std(&means),
        n,
    })
}

pub fn move_accuracy(
    model: &PolicyModel,
    embedding: &[f64],
    pairs: &[StateActionPair],
    selector: &Selector,
    seed: u64,
) -> Result<Accuracy> {
    if pairs.is_empty() {
        return Err(Error::Empty("no test pairs".into()));
    }
    let chosen = select_moves(model, embedding, pairs, selector)?;
    let hits: Vec<bool> = chosen.iter().zip(pairs).map(|(m, p)| *m == p.mv).collect();
    accuracy_from_hits(&hits, ACCURACY_RESAMPLES, seed)
}
