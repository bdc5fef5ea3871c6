//! The three experiments: move accuracy, train/test divergence matrix and
//! stylistic alignment against each player's training distribution.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use stylebench_chess::Move;

use crate::accuracy::{accuracy_from_hits, Accuracy, Selector, ACCURACY_RESAMPLES};
use crate::dataset::{PlayerDataset, StateActionPair};
use crate::error::{Error, Result};
use crate::harness::config::{ExperimentConfig, Variant};
use crate::harness::seeds::SeedSet;
use crate::mcts::{run_search, PolicyEvaluator, SearchConfig};
use crate::policy::{finetune_embedding, prepare, pretrain_backbone, PlayerEmbedding, PolicyModel, TrainReport};
use crate::style::{
    bootstrap_jsd_std, build_histogram, jensen_shannon, train_autoencoder, AeConfig, AeTrainReport,
    AutoEncoder, GridBounds, PcaProjector, Projector, TransitionVector,
};
use stylebench_chess::PositionHistory;

/// Builds one dataset per configured player from a parsed corpus.
pub fn build_datasets(cfg: &ExperimentConfig, corpus: &[stylebench_chess::PgnGame]) -> Result<Vec<PlayerDataset>> {
    let split = cfg.seeds().split;
    cfg.players
        .iter()
        .map(|p| PlayerDataset::build(corpus, p, cfg.split_ratio, SeedSet::child(split, p)))
        .collect()
}

fn transitions(pairs: &[StateActionPair]) -> Result<Vec<TransitionVector>> {
    pairs.par_iter().map(TransitionVector::from_pair).collect()
}

/// Shared autoencoder and projector for one evaluation run.
#[derive(Clone, Debug)]
pub struct StyleSpace {
    pub ae: AutoEncoder,
    pub ae_report: AeTrainReport,
    pub projector: PcaProjector,
}

impl StyleSpace {
    pub fn project(&self, vectors: &[TransitionVector]) -> Result<Vec<(f64, f64)>> {
        let z = self.ae.encode_transitions(vectors)?;
        self.projector.project_rows(z.view())
    }

    pub fn project_pairs(&self, pairs: &[StateActionPair]) -> Result<Vec<(f64, f64)>> {
        self.project(&transitions(pairs)?)
    }
}

/// Trains the autoencoder on the pooled train and test transitions of every
/// player, then fits the projector on their latents.
pub fn fit_style_space(
    ae_cfg: &AeConfig,
    projector: &str,
    datasets: &[PlayerDataset],
) -> Result<StyleSpace> {
    let ae = train_autoencoder_on(ae_cfg, datasets)?;
    fit_projector_on(ae.0, ae.1, projector, datasets)
}

pub fn train_autoencoder_on(
    ae_cfg: &AeConfig,
    datasets: &[PlayerDataset],
) -> Result<(AutoEncoder, AeTrainReport)> {
    let pooled = pooled_transitions(datasets)?;
    train_autoencoder(&pooled, ae_cfg)
}

pub fn fit_projector_on(
    ae: AutoEncoder,
    ae_report: AeTrainReport,
    projector: &str,
    datasets: &[PlayerDataset],
) -> Result<StyleSpace> {
    if projector != "pca" {
        return Err(Error::Config(format!("unknown projector `{projector}` (available: pca)")));
    }
    let pooled = pooled_transitions(datasets)?;
    let latents: Array2<f64> = ae.encode_transitions(&pooled)?;
    let projector = PcaProjector::fit(latents.view())?;
    Ok(StyleSpace {
        ae,
        ae_report,
        projector,
    })
}

fn pooled_transitions(datasets: &[PlayerDataset]) -> Result<Vec<TransitionVector>> {
    let mut pooled = Vec::new();
    for d in datasets {
        pooled.extend(transitions(&d.train)?);
        pooled.extend(transitions(&d.test)?);
    }
    if pooled.is_empty() {
        return Err(Error::Empty("no transitions in any dataset".into()));
    }
    Ok(pooled)
}

/// Projected train and test transitions of one player.
#[derive(Clone, Debug, PartialEq)]
pub struct PlayerPoints {
    pub player: String,
    pub train: Vec<(f64, f64)>,
    pub test: Vec<(f64, f64)>,
}

pub fn player_points(space: &StyleSpace, datasets: &[PlayerDataset]) -> Result<Vec<PlayerPoints>> {
    datasets
        .iter()
        .map(|d| {
            if d.train.is_empty() || d.test.is_empty() {
                return Err(Error::Empty(format!(
                    "player `{}` needs both train and test transitions",
                    d.player
                )));
            }
            Ok(PlayerPoints {
                player: d.player.clone(),
                train: space.project_pairs(&d.train)?,
                test: space.project_pairs(&d.test)?,
            })
        })
        .collect()
}

/// Train-vs-test jsd for every ordered player pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DivergenceMatrix {
    pub players: Vec<String>,
    /// `values[i][j] = jsd(train_i, test_j)`.
    pub values: Vec<Vec<f64>>,
}

impl DivergenceMatrix {
    pub fn max_diagonal(&self) -> f64 {
        (0..self.players.len()).map(|i| self.values[i][i]).fold(0.0, f64::max)
    }

    pub fn min_off_diagonal(&self) -> f64 {
        let n = self.players.len();
        (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| self.values[i][j])
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().flatten().copied().fold(0.0, f64::max)
    }
}

/// Min/max over every point set of the run.
pub fn run_bounds<'a>(sets: impl IntoIterator<Item = &'a [(f64, f64)]>) -> Result<GridBounds> {
    GridBounds::from_points(sets.into_iter().flatten())
}

pub fn divergence_matrix(points: &[PlayerPoints], bounds: &GridBounds, grid: usize) -> Result<DivergenceMatrix> {
    let train: Vec<_> = points
        .iter()
        .map(|p| build_histogram(&p.train, bounds, grid))
        .collect::<Result<_>>()?;
    let test: Vec<_> = points
        .iter()
        .map(|p| build_histogram(&p.test, bounds, grid))
        .collect::<Result<_>>()?;
    let values = train
        .iter()
        .map(|a| test.iter().map(|b| Ok(jensen_shannon(a, b)?.0)).collect::<Result<Vec<f64>>>())
        .collect::<Result<_>>()?;
    Ok(DivergenceMatrix {
        players: points.iter().map(|p| p.player.clone()).collect(),
        values,
    })
}

/// Trained policy artifacts for one run.
#[derive(Clone, Debug)]
pub struct PolicyArtifacts {
    pub model: PolicyModel,
    pub pretrain_report: TrainReport,
    pub embeddings: Vec<PlayerEmbedding>,
    pub finetune_reports: Vec<TrainReport>,
}

impl PolicyArtifacts {
    pub fn embedding(&self, player: &str) -> Result<&PlayerEmbedding> {
        self.embeddings
            .iter()
            .find(|e| e.player == player)
            .ok_or_else(|| Error::Config(format!("no embedding for player `{player}`")))
    }
}

pub fn pretrain_pooled(cfg: &ExperimentConfig, datasets: &[PlayerDataset]) -> Result<(PolicyModel, TrainReport)> {
    let populations = datasets
        .iter()
        .map(|d| prepare(&d.train))
        .collect::<Result<Vec<_>>>()?;
    pretrain_backbone(&cfg.policy.arch, &populations, &cfg.policy.pretrain)
}

/// Per-player fine-tuning; players run concurrently against the shared
/// read-only model.
pub fn finetune_all(
    cfg: &ExperimentConfig,
    model: &PolicyModel,
    datasets: &[PlayerDataset],
) -> Result<Vec<(PlayerEmbedding, TrainReport)>> {
    datasets
        .par_iter()
        .map(|d| {
            let samples = prepare(&d.train)?;
            let mut tc = cfg.policy.finetune.clone();
            tc.seed = SeedSet::child(tc.seed, &d.player);
            finetune_embedding(model, &d.player, &samples, &tc)
        })
        .collect()
}

pub fn train_policies(cfg: &ExperimentConfig, datasets: &[PlayerDataset]) -> Result<PolicyArtifacts> {
    let (model, pretrain_report) = pretrain_pooled(cfg, datasets)?;
    let tuned = finetune_all(cfg, &model, datasets)?;
    let (embeddings, finetune_reports) = tuned.into_iter().unzip();
    Ok(PolicyArtifacts {
        model,
        pretrain_report,
        embeddings,
        finetune_reports,
    })
}

fn variant_setup<'a>(
    variant: Variant,
    arts: &'a PolicyArtifacts,
    player: &str,
    search: &SearchConfig,
) -> Result<(&'a [f64], Selector)> {
    Ok(match variant {
        Variant::Base => (&arts.model.generic, Selector::ArgmaxPolicy),
        Variant::Finetuned => (&arts.embedding(player)?.values, Selector::ArgmaxPolicy),
        Variant::FinetunedMcts => (
            &arts.embedding(player)?.values,
            Selector::MostVisited(search.clone()),
        ),
    })
}

/// Moves produced by one variant on one player's test positions.
#[derive(Clone, Debug, PartialEq)]
pub struct VariantMoves {
    pub player: String,
    pub variant: Variant,
    /// One selected move per test pair.
    pub selected: Vec<Move>,
    /// `(pair index, move)` used for alignment; equals `selected` when one
    /// sample per position is requested.
    pub alignment: Vec<(usize, Move)>,
}

/// Draws from `weights` (non-negative, not all zero).
fn sample_index(weights: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let total: f64 = weights.iter().sum();
    let mut x = rng.gen_range(0.0..total);
    for (i, &w) in weights.iter().enumerate() {
        if x < w {
            return i;
        }
        x -= w;
    }
    weights.len() - 1
}

pub fn generate_moves(
    cfg: &ExperimentConfig,
    arts: &PolicyArtifacts,
    datasets: &[PlayerDataset],
) -> Result<Vec<VariantMoves>> {
    let jobs: Vec<(&PlayerDataset, Variant)> = datasets
        .iter()
        .flat_map(|d| cfg.variants.iter().map(move |&v| (d, v)))
        .collect();
    let samples = cfg.metric.samples;
    jobs.iter()
        .map(|&(d, variant)| {
            let (emb, selector) = variant_setup(variant, arts, &d.player, &cfg.mcts)?;
            let per_pair: Vec<(Move, Vec<Move>)> = d
                .test
                .par_iter()
                .enumerate()
                .map(|(i, p)| {
                    let (moves, weights, chosen) = match &selector {
                        Selector::ArgmaxPolicy => {
                            let pred = arts.model.predict(emb, &p.state)?;
                            let best = pred.argmax();
                            (pred.moves, pred.probs, best)
                        }
                        Selector::MostVisited(sc) => {
                            let eval = PolicyEvaluator { model: &arts.model, embedding: emb };
                            let r = run_search(&p.state, &PositionHistory::new(), &eval, sc)?;
                            let best = crate::mcts::select_most_visited(&r.visit_distribution())?;
                            (r.moves, r.visits.iter().map(|&v| v as f64).collect(), best)
                        }
                    };
                    let extra = if samples > 1 {
                        let seed = SeedSet::child(
                            cfg.seeds().search,
                            &format!("{}/{}/{i}", d.player, variant),
                        );
                        let mut rng = ChaCha8Rng::seed_from_u64(seed);
                        (0..samples).map(|_| moves[sample_index(&weights, &mut rng)]).collect()
                    } else {
                        vec![chosen]
                    };
                    Ok((chosen, extra))
                })
                .collect::<Result<_>>()?;
            Ok(VariantMoves {
                player: d.player.clone(),
                variant,
                selected: per_pair.iter().map(|(m, _)| *m).collect(),
                alignment: per_pair
                    .iter()
                    .enumerate()
                    .flat_map(|(i, (_, ms))| ms.iter().map(move |&m| (i, m)))
                    .collect(),
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AccuracyRow {
    pub player: String,
    pub cells: Vec<Accuracy>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AccuracyTable {
    pub variants: Vec<Variant>,
    pub rows: Vec<AccuracyRow>,
}

impl AccuracyTable {
    /// Column means of accuracy and of its std over players.
    pub fn average(&self) -> Vec<(f64, f64)> {
        let n = self.rows.len() as f64;
        (0..self.variants.len())
            .map(|k| {
                let m = self.rows.iter().map(|r| r.cells[k].mean).sum::<f64>() / n;
                let s = self.rows.iter().map(|r| r.cells[k].std).sum::<f64>() / n;
                (m, s)
            })
            .collect()
    }
}

pub fn eval_accuracy_table(
    cfg: &ExperimentConfig,
    datasets: &[PlayerDataset],
    moves: &[VariantMoves],
) -> Result<AccuracyTable> {
    let bootstrap = cfg.seeds().bootstrap;
    let rows = datasets
        .iter()
        .map(|d| {
            let cells = cfg
                .variants
                .iter()
                .map(|&v| {
                    let vm = moves
                        .iter()
                        .find(|m| m.player == d.player && m.variant == v)
                        .ok_or_else(|| Error::Config(format!("no moves for {} / {v}", d.player)))?;
                    let hits: Vec<bool> = vm.selected.iter().zip(&d.test).map(|(m, p)| *m == p.mv).collect();
                    let seed = SeedSet::child(bootstrap, &format!("accuracy/{}/{v}", d.player));
                    accuracy_from_hits(&hits, ACCURACY_RESAMPLES, seed)
                })
                .collect::<Result<_>>()?;
            Ok(AccuracyRow {
                player: d.player.clone(),
                cells,
            })
        })
        .collect::<Result<_>>()?;
    Ok(AccuracyTable {
        variants: cfg.variants.clone(),
        rows,
    })
}

/// Projected transitions induced by each variant's moves.
pub fn variant_points(
    space: &StyleSpace,
    datasets: &[PlayerDataset],
    moves: &[VariantMoves],
) -> Result<Vec<Vec<(f64, f64)>>> {
    moves
        .iter()
        .map(|vm| {
            let d = datasets
                .iter()
                .find(|d| d.player == vm.player)
                .expect("moves come from these datasets");
            let t: Vec<TransitionVector> = vm
                .alignment
                .par_iter()
                .map(|&(i, m)| crate::style::transition_vector(&d.test[i].state, m))
                .collect::<Result<_>>()?;
            space.project(&t)
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JsdCell {
    pub jsd: f64,
    pub std: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlignmentRow {
    pub player: String,
    pub test: JsdCell,
    pub cells: Vec<JsdCell>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlignmentTable {
    pub variants: Vec<Variant>,
    pub rows: Vec<AlignmentRow>,
}

impl AlignmentTable {
    /// Column means (test column first).
    pub fn average(&self) -> Vec<JsdCell> {
        let n = self.rows.len() as f64;
        let col = |f: &dyn Fn(&AlignmentRow) -> JsdCell| JsdCell {
            jsd: self.rows.iter().map(|r| f(r).jsd).sum::<f64>() / n,
            std: self.rows.iter().map(|r| f(r).std).sum::<f64>() / n,
        };
        let mut out = vec![col(&|r| r.test)];
        for k in 0..self.variants.len() {
            out.push(col(&|r| r.cells[k]));
        }
        out
    }
}

fn jsd_cell(
    train: &[(f64, f64)],
    other: &[(f64, f64)],
    bounds: &GridBounds,
    cfg: &ExperimentConfig,
    label: &str,
) -> Result<JsdCell> {
    let grid = cfg.metric.grid;
    let a = build_histogram(train, bounds, grid)?;
    let b = build_histogram(other, bounds, grid)?;
    let (jsd, _) = jensen_shannon(&a, &b)?;
    let seed = SeedSet::child(cfg.seeds().bootstrap, label);
    let std = bootstrap_jsd_std(train, other, bounds, grid, cfg.metric.bootstrap_resamples, seed)?;
    Ok(JsdCell { jsd, std })
}

pub fn alignment_table(
    cfg: &ExperimentConfig,
    points: &[PlayerPoints],
    moves: &[VariantMoves],
    generated: &[Vec<(f64, f64)>],
    bounds: &GridBounds,
) -> Result<AlignmentTable> {
    let rows = points
        .par_iter()
        .map(|p| {
            let test = jsd_cell(&p.train, &p.test, bounds, cfg, &format!("align/{}/test", p.player))?;
            let cells = cfg
                .variants
                .iter()
                .map(|&v| {
                    let k = moves
                        .iter()
                        .position(|m| m.player == p.player && m.variant == v)
                        .ok_or_else(|| Error::Config(format!("no moves for {} / {v}", p.player)))?;
                    jsd_cell(&p.train, &generated[k], bounds, cfg, &format!("align/{}/{v}", p.player))
                })
                .collect::<Result<_>>()?;
            Ok(AlignmentRow {
                player: p.player.clone(),
                test,
                cells,
            })
        })
        .collect::<Result<_>>()?;
    Ok(AlignmentTable {
        variants: cfg.variants.clone(),
        rows,
    })
}

/// Outputs of a complete run.
#[derive(Clone, Debug)]
pub struct ExperimentResults {
    pub matrix: DivergenceMatrix,
    pub bounds: GridBounds,
    pub accuracy: Option<AccuracyTable>,
    pub alignment: Option<AlignmentTable>,
    pub points: Vec<PlayerPoints>,
}

/// Style-only run: divergence matrix on bounds pooled over train and test.
pub fn run_divergence(cfg: &ExperimentConfig, space: &StyleSpace, datasets: &[PlayerDataset]) -> Result<ExperimentResults> {
    let points = player_points(space, datasets)?;
    let bounds = run_bounds(points.iter().flat_map(|p| [&p.train[..], &p.test[..]]))?;
    let matrix = divergence_matrix(&points, &bounds, cfg.metric.grid)?;
    Ok(ExperimentResults {
        matrix,
        bounds,
        accuracy: None,
        alignment: None,
        points,
    })
}

/// Full run: bounds pool train, test and every variant's generated
/// transitions, so the alignment "Test" column equals the matrix diagonal.
pub fn run_full(
    cfg: &ExperimentConfig,
    space: &StyleSpace,
    arts: &PolicyArtifacts,
    datasets: &[PlayerDataset],
) -> Result<ExperimentResults> {
    let points = player_points(space, datasets)?;
    let moves = generate_moves(cfg, arts, datasets)?;
    let generated = variant_points(space, datasets, &moves)?;
    let bounds = run_bounds(
        points
            .iter()
            .flat_map(|p| [&p.train[..], &p.test[..]])
            .chain(generated.iter().map(|g| &g[..])),
    )?;
    let matrix = divergence_matrix(&points, &bounds, cfg.metric.grid)?;
    let accuracy = eval_accuracy_table(cfg, datasets, &moves)?;
    let alignment = alignment_table(cfg, &points, &moves, &generated, &bounds)?;
    Ok(ExperimentResults {
        matrix,
        bounds,
        accuracy: Some(accuracy),
        alignment: Some(alignment),
        points,
    })
}
