//! PUCT search over the policy model with prior-threshold pruning.

use serde::{Deserialize, Serialize};
use stylebench_chess::{termination, BoardState, Move, PositionHistory};

use crate::error::{Error, Result};
use crate::labels::move_label;
use crate::policy::PolicyModel;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchConfig {
    pub simulations: u32,
    pub c: f64,
    pub eta: f64,
    /// Recorded for provenance; the search itself has no random choices.
    pub seed: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            simulations: 100,
            c: 1.5,
            eta: 0.01,
            seed: 0,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.simulations == 0 {
            return Err(Error::InvalidArgument("simulations must be >= 1".into()));
        }
        if !(self.c >= 0.0) {
            return Err(Error::InvalidArgument(format!("c must be >= 0, got {}", self.c)));
        }
        if !(0.0..1.0).contains(&self.eta) {
            return Err(Error::InvalidArgument(format!("eta must be in [0, 1), got {}", self.eta)));
        }
        Ok(())
    }
}

/// `q + c * p * sqrt(N) / (1 + n)`.
pub fn puct_score(q: f64, p: f64, parent_visits: u32, child_visits: u32, c: f64) -> f64 {
    q + c * p * (parent_visits as f64).sqrt() / (1.0 + child_visits as f64)
}

/// Priors over the legal moves of a state and its value for the side to move.
pub struct Evaluation {
    /// Legal moves in `(from, to, promotion)` order.
    pub moves: Vec<Move>,
    pub priors: Vec<f64>,
    pub value: f64,
}

pub trait Evaluator {
    fn evaluate(&self, state: &BoardState) -> Result<Evaluation>;
}

pub struct PolicyEvaluator<'a> {
    pub model: &'a PolicyModel,
    pub embedding: &'a [f64],
}

impl Evaluator for PolicyEvaluator<'_> {
    fn evaluate(&self, state: &BoardState) -> Result<Evaluation> {
        let p = self.model.predict(self.embedding, state)?;
        Ok(Evaluation {
            moves: p.moves,
            priors: p.probs,
            value: p.value,
        })
    }
}

#[derive(Clone, Debug)]
struct Edge {
    mv: Move,
    prior: f64,
    visits: u32,
    total: f64,
    child: Option<usize>,
}

impl Edge {
    fn q(&self) -> f64 {
        if self.visits == 0 {
            0.0
        } else {
            self.total / self.visits as f64
        }
    }
}

#[derive(Clone, Debug)]
struct Node {
    state: BoardState,
    /// Value for the side to move when the node is terminal.
    terminal: Option<f64>,
    edges: Vec<Edge>,
    expanded: bool,
}

/// Root statistics after a search.
#[derive(Clone, Debug, PartialEq)]
pub struct SearchResult {
    /// Retained root moves in label order.
    pub moves: Vec<Move>,
    pub priors: Vec<f64>,
    pub visits: Vec<u32>,
    pub q: Vec<f64>,
    /// Every value propagated through an edge, for range checks.
    pub max_abs_backup: f64,
    /// Number of nodes the model was queried for (root included).
    pub expansions: usize,
}

impl SearchResult {
    pub fn visit_distribution(&self) -> Vec<(Move, u32)> {
        self.moves.iter().copied().zip(self.visits.iter().copied()).collect()
    }

    pub fn total_visits(&self) -> u32 {
        self.visits.iter().sum()
    }
}

/// Keeps priors `>= eta` (or the single best when none survive) and
/// renormalizes them.
fn prune(moves: Vec<Move>, priors: Vec<f64>, eta: f64) -> Vec<Edge> {
    let mut kept: Vec<(Move, f64)> = moves
        .iter()
        .zip(&priors)
        .filter(|(_, &p)| p >= eta)
        .map(|(&m, &p)| (m, p))
        .collect();
    if kept.is_empty() {
        let mut best = 0;
        for i in 1..priors.len() {
            if priors[i] > priors[best] {
                best = i;
            }
        }
        kept.push((moves[best], priors[best]));
    }
    let sum: f64 = kept.iter().map(|(_, p)| p).sum();
    let n = kept.len() as f64;
    kept.into_iter()
        .map(|(mv, p)| Edge {
            mv,
            prior: if sum > 0.0 { p / sum } else { 1.0 / n },
            visits: 0,
            total: 0.0,
            child: None,
        })
        .collect()
}

/// Argmax PUCT; ties go to the lowest label, i.e. the first edge.
fn select(node: &Node, c: f64) -> usize {
    let parent: u32 = node.edges.iter().map(|e| e.visits).sum();
    let mut best = 0;
    let mut best_score = f64::NEG_INFINITY;
    for (i, e) in node.edges.iter().enumerate() {
        let s = puct_score(e.q(), e.prior, parent, e.visits, c);
        if s > best_score {
            best = i;
            best_score = s;
        }
    }
    best
}

fn expand<E: Evaluator + ?Sized>(node: &mut Node, eval: &E, eta: f64) -> Result<f64> {
    let e = eval.evaluate(&node.state)?;
    if e.moves.is_empty() {
        return Err(Error::NoLegalMoves(node.state.to_fen()));
    }
    debug_assert!(e.moves.windows(2).all(|w| move_label(w[0]) < move_label(w[1])));
    node.edges = prune(e.moves, e.priors, eta);
    node.expanded = true;
    Ok(e.value.clamp(-1.0, 1.0))
}

/// Runs `config.simulations` select/expand/backup iterations from `root`.
///
/// `history` holds the keys of positions before the root (the root itself
/// is added here) so repetitions inside the tree are detected.
pub fn run_search<E: Evaluator + ?Sized>(
    root: &BoardState,
    history: &PositionHistory,
    eval: &E,
    config: &SearchConfig,
) -> Result<SearchResult> {
    config.validate()?;
    let mut hist = history.clone();
    hist.push(root);
    if let Some(t) = termination(root, &hist) {
        return Err(Error::InvalidArgument(format!(
            "search root is terminal ({}): {}",
            t.result_tag(),
            root.to_fen()
        )));
    }
    let mut arena = vec![Node {
        state: root.clone(),
        terminal: None,
        edges: Vec::new(),
        expanded: false,
    }];
    expand(&mut arena[0], eval, config.eta)?;
    let mut expansions = 1;
    let mut max_abs_backup: f64 = 0.0;
    let base_len = hist.keys().len();

    for _ in 0..config.simulations {
        let mut path: Vec<(usize, usize)> = Vec::new();
        let mut cur = 0;
        let leaf_value = loop {
            let node = &arena[cur];
            if let Some(v) = node.terminal {
                break v;
            }
            if !node.expanded {
                expansions += 1;
                break expand(&mut arena[cur], eval, config.eta)?;
            }
            let ei = select(node, config.c);
            path.push((cur, ei));
            cur = match node.edges[ei].child {
                Some(c) => {
                    hist.push(&arena[c].state);
                    c
                }
                None => {
                    let state = node.state.apply_unchecked(node.edges[ei].mv);
                    hist.push(&state);
                    let terminal = termination(&state, &hist).map(|t| t.value_for_side_to_move());
                    arena.push(Node {
                        state,
                        terminal,
                        edges: Vec::new(),
                        expanded: false,
                    });
                    let id = arena.len() - 1;
                    arena[path.last().unwrap().0].edges[ei].child = Some(id);
                    id
                }
            };
        };
        // leaf value is for the side to move at the leaf; each edge stores
        // values from the perspective of the side choosing it
        let mut v = leaf_value;
        for &(n, e) in path.iter().rev() {
            v = -v;
            max_abs_backup = max_abs_backup.max(v.abs());
            let edge = &mut arena[n].edges[e];
            edge.visits += 1;
            edge.total += v;
        }
        while hist.keys().len() > base_len {
            hist.pop();
        }
    }

    let root = &arena[0];
    Ok(SearchResult {
        moves: root.edges.iter().map(|e| e.mv).collect(),
        priors: root.edges.iter().map(|e| e.prior).collect(),
        visits: root.edges.iter().map(|e| e.visits).collect(),
        q: root.edges.iter().map(Edge::q).collect(),
        max_abs_backup,
        expansions,
    })
}

/// Most visited move; ties go to the lowest label.
pub fn select_most_visited(visits: &[(Move, u32)]) -> Result<Move> {
    visits
        .iter()
        .min_by_key(|(m, n)| (std::cmp::Reverse(*n), move_label(*m)))
        .map(|(m, _)| *m)
        .ok_or_else(|| Error::Empty("visit distribution".into()))
}
