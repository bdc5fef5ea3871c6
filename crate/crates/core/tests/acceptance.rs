//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
//! failure. Criteria 6-9 share two end-to-end runs of the synthetic
//! three-policy experiment.

use std::time::{Duration, Instant};

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stylebench::dataset::PlayerDataset;
use stylebench::harness::report::{accuracy_csv, alignment_csv, matrix_csv};
use stylebench::harness::{
    build_datasets, fit_style_space, run_full, train_policies, ExperimentConfig, ExperimentResults,
    PolicyArtifacts, StyleSpace, Variant,
};
use stylebench::mcts::{puct_score, run_search, Evaluation, Evaluator, PolicyEvaluator, SearchConfig};
use stylebench::policy::{finetune_embedding, prepare, PolicyGradProbe};
use stylebench::style::{jsd_distributions, Projector, TransitionVector, LATENT_DIM, TRANSITION_LEN};
use stylebench::synthetic::{generate_corpus, ScriptedPolicy};
use stylebench_chess::{legal_moves, perft, BoardState, PositionHistory};
use stylebench_neural::{gradient_check, MlpMseProbe};

const ROOT_SEED: u64 = 2026;

struct Suite {
    failed: Vec<u32>,
}

impl Suite {
    fn record(&mut self, n: u32, name: &str, pass: bool, detail: String) {
        println!("[{}] criterion {n} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
        if !pass {
            self.failed.push(n);
        }
    }
}

struct Run {
    datasets: Vec<PlayerDataset>,
    space: StyleSpace,
    arts: PolicyArtifacts,
    results: ExperimentResults,
    csv: Vec<(&'static str, String)>,
    elapsed: Duration,
}

fn config() -> ExperimentConfig {
    ExperimentConfig {
        seed: ROOT_SEED,
        players: ScriptedPolicy::STYLES.iter().map(|p| p.name().to_string()).collect(),
        variants: Variant::ALL.to_vec(),
        ..ExperimentConfig::default()
    }
    .resolved()
}

fn end_to_end(cfg: &ExperimentConfig) -> Run {
    let t = Instant::now();
    let corpus = generate_corpus(&ScriptedPolicy::STYLES, &cfg.synthetic);
    let datasets = build_datasets(cfg, &corpus).unwrap();
    let space = fit_style_space(&cfg.autoencoder, "pca", &datasets).unwrap();
    let arts = train_policies(cfg, &datasets).unwrap();
    let results = run_full(cfg, &space, &arts, &datasets).unwrap();
    let csv = vec![
        ("divergence.csv", matrix_csv(&results.matrix)),
        ("accuracy.csv", accuracy_csv(results.accuracy.as_ref().unwrap())),
        ("alignment.csv", alignment_csv(results.alignment.as_ref().unwrap())),
    ];
    Run {
        datasets,
        space,
        arts,
        results,
        csv,
        elapsed: t.elapsed(),
    }
}

fn criterion_1(s: &mut Suite) {
    let expected = [20u64, 400, 8902, 197281, 4865609];
    let start = BoardState::start();
    let t = Instant::now();
    let got: Vec<u64> = (1..=5).map(|d| perft(&start, d)).collect();
    let secs = t.elapsed().as_secs_f64();
    s.record(
        1,
        "perft",
        got == expected && secs < 60.0,
        format!("depths 1-5 = {got:?} (want {expected:?}) in {secs:.2}s single-threaded (limit 60s)"),
    );
}

fn criterion_2(s: &mut Suite, run: &Run) {
    let mut model = run.arts.model.clone();
    let samples = prepare(&run.datasets[1].test[..8]).unwrap();
    let emb = run.arts.embeddings[1].values.clone();
    let mut probe = PolicyGradProbe::new(&mut model, emb, samples);
    let policy = gradient_check(&mut probe, 400, ROOT_SEED).unwrap();

    let mut ae = run.space.ae.clone();
    let vectors: Vec<TransitionVector> = run.datasets[0].test[..4]
        .iter()
        .map(|p| TransitionVector::from_pair(p).unwrap())
        .collect();
    let mut x = Array2::zeros((vectors.len(), TRANSITION_LEN));
    for (row, v) in x.rows_mut().into_iter().zip(&vectors) {
        v.write_dense(row.into_slice().unwrap());
    }
    let mut probe = MlpMseProbe {
        net: &mut ae.net,
        input: x.clone(),
        target: x,
    };
    let autoencoder = gradient_check(&mut probe, 400, ROOT_SEED).unwrap();
    let worst = policy.max_relative_error.max(autoencoder.max_relative_error);
    s.record(
        2,
        "gradient fidelity",
        worst < 1e-4,
        format!(
            "max relative error policy {:.2e} ({} params), autoencoder {:.2e} ({} params); limit 1e-4, h = 1e-5",
            policy.max_relative_error, policy.checked, autoencoder.max_relative_error, autoencoder.checked
        ),
    );
}

fn random_dist(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..n)
        .map(|_| if rng.gen_bool(0.3) { 0.0 } else { rng.gen::<f64>() })
        .collect();
    let z: f64 = w.iter().sum::<f64>().max(f64::MIN_POSITIVE);
    w.iter().map(|x| x / z).collect()
}

fn criterion_3(s: &mut Suite) {
    let mut rng = ChaCha8Rng::seed_from_u64(ROOT_SEED);
    let jsd = |p: &[f64], q: &[f64]| jsd_distributions(p, q).unwrap();
    let mut symmetric = true;
    let mut self_zero = true;
    let mut triangle = 0;
    for _ in 0..1000 {
        let n = 225;
        let (p, q, r) = (random_dist(&mut rng, n), random_dist(&mut rng, n), random_dist(&mut rng, n));
        symmetric &= jsd(&p, &q).to_bits() == jsd(&q, &p).to_bits();
        self_zero &= jsd(&p, &p) == 0.0;
        if jsd(&p, &r).sqrt() <= jsd(&p, &q).sqrt() + jsd(&q, &r).sqrt() + 1e-12 {
            triangle += 1;
        }
    }
    let disjoint = jsd(&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]);
    let hand = jsd(&[0.5, 0.5], &[1.0, 0.0]);
    let pass = symmetric && self_zero && triangle == 1000 && (disjoint - 1.0).abs() < 1e-12 && (hand - 0.31128).abs() < 1e-5;
    s.record(
        3,
        "JSD",
        pass,
        format!(
            "symmetric {symmetric}, jsd(P,P)=0 {self_zero}, disjoint {disjoint:.12} (1 +- 1e-12), \
             hand case {hand:.6} (0.31128 +- 1e-5), triangle inequality {triangle}/1000"
        ),
    );
}

/// Priors {0.6, 0.3, 0.1} wherever exactly three moves are legal.
struct FixedPriors;

impl Evaluator for FixedPriors {
    fn evaluate(&self, state: &BoardState) -> stylebench::Result<Evaluation> {
        let moves = legal_moves(state);
        let priors = if moves.len() == 3 {
            vec![0.6, 0.3, 0.1]
        } else {
            vec![1.0 / moves.len() as f64; moves.len()]
        };
        Ok(Evaluation {
            moves,
            priors,
            value: 0.0,
        })
    }
}

fn criterion_4(s: &mut Suite, run: &Run) {
    let cases = [
        puct_score(0.0, 0.5, 4, 1, 1.5) - 0.75,
        puct_score(0.2, 0.1, 100, 9, 1.5) - 0.35,
        puct_score(0.3, 0.1, 100, 9, 1.5) - 0.45,
    ];
    let units = cases.iter().all(|d| d.abs() <= 1e-12);

    let cfg = SearchConfig::default();
    let mut conserved = 0;
    let positions: Vec<&BoardState> = run.datasets.iter().flat_map(|d| d.test.iter().take(40)).map(|p| &p.state).collect();
    for (k, state) in positions.iter().enumerate() {
        let d = &run.datasets[k * run.datasets.len() / positions.len()];
        let eval = PolicyEvaluator {
            model: &run.arts.model,
            embedding: &run.arts.embedding(&d.player).unwrap().values,
        };
        let r = run_search(state, &PositionHistory::new(), &eval, &cfg).unwrap();
        if r.total_visits() == cfg.simulations {
            conserved += 1;
        }
    }

    let root = BoardState::from_fen("k7/8/8/8/8/8/8/K7 w - - 0 1").unwrap();
    let pruned = run_search(
        &root,
        &PositionHistory::new(),
        &FixedPriors,
        &SearchConfig {
            eta: 0.5,
            ..SearchConfig::default()
        },
    )
    .unwrap();
    let best = legal_moves(&root)[0];
    let single = pruned.moves == vec![best] && pruned.visits == vec![100];
    s.record(
        4,
        "PUCT mechanics",
        units && conserved == positions.len() && single,
        format!(
            "unit cases 0.75/0.35/0.45 within 1e-12: {units}; visit sum = 100 on {conserved}/{} searched positions; \
             eta = 0.5 over priors (0.6, 0.3, 0.1) visits {:?}",
            positions.len(),
            pruned.visits
        ),
    );
}

fn criterion_5(s: &mut Suite, cfg: &ExperimentConfig, run: &Run) {
    let model = &run.arts.model;
    let before: Vec<u64> = model.frozen_params().map(f64::to_bits).collect();
    let checksum = model.frozen_checksum();
    let samples = prepare(&run.datasets[2].train).unwrap();
    let (emb, _) = finetune_embedding(model, &run.datasets[2].player, &samples, &cfg.policy.finetune).unwrap();
    let frozen_changed = model.frozen_params().zip(&before).filter(|(a, b)| a.to_bits() != **b).count();
    let emb_changed = emb.values.iter().zip(&model.generic).filter(|(a, b)| a.to_bits() != b.to_bits()).count();
    let same = checksum == model.frozen_checksum();
    s.record(
        5,
        "freeze contract",
        same && frozen_changed == 0 && frozen_changed + emb_changed == 64,
        format!(
            "checksum unchanged {same} ({}...); shared values changed {frozen_changed}, embedding values changed {emb_changed} (want 64 total)",
            &checksum[..12]
        ),
    );
}

fn criterion_6(s: &mut Suite, run: &Run) {
    let m = &run.results.matrix;
    let (diag, off) = (m.max_diagonal(), m.min_off_diagonal());
    let mins = run.elapsed.as_secs_f64() / 60.0;
    s.record(
        6,
        "synthetic separation",
        diag < off && mins < 30.0,
        format!("max same-policy jsd {diag:.4} < min cross-policy jsd {off:.4}; full pipeline {mins:.1} min (limit 30)"),
    );
}

fn criterion_7(s: &mut Suite, run: &Run) {
    let table = run.results.alignment.as_ref().unwrap();
    let col = |v: Variant| table.variants.iter().position(|&x| x == v).unwrap();
    let (b, f, m) = (col(Variant::Base), col(Variant::Finetuned), col(Variant::FinetunedMcts));
    let mut better = 0;
    let mut parts = Vec::new();
    for row in &table.rows {
        let (base, ft, mcts) = (row.cells[b].jsd, row.cells[f].jsd, row.cells[m].jsd);
        if ft <= base {
            better += 1;
        }
        parts.push(format!("{} {base:.4} -> {ft:.4} (+mcts {mcts:.4})", row.player));
    }
    s.record(
        7,
        "fine-tuning direction",
        better >= 2,
        format!("fine-tuned <= base for {better}/3 players (need 2): {}", parts.join("; ")),
    );
}

fn criterion_8(s: &mut Suite, a: &Run, b: &Run) {
    let same: Vec<String> = a
        .csv
        .iter()
        .zip(&b.csv)
        .map(|((name, x), (_, y))| format!("{name} {}", if x.as_bytes() == y.as_bytes() { "identical" } else { "DIFFERS" }))
        .collect();
    let pass = a.csv.iter().zip(&b.csv).all(|(x, y)| x.1.as_bytes() == y.1.as_bytes());
    s.record(8, "determinism", pass, format!("two runs at seed {ROOT_SEED}: {}", same.join(", ")));
}

fn criterion_9(s: &mut Suite, run: &Run) {
    let loss = &run.space.ae_report.epoch_loss;
    let (first, last) = (loss[0], *loss.last().unwrap());
    let pair = &run.datasets[0].test[0];
    let z = run.space.ae.encode_latent(&TransitionVector::from_pair(pair).unwrap().to_dense()).unwrap();
    let dims = [LATENT_DIM, run.space.ae.latent_dim(), z.len(), run.space.projector.mean.len()];
    let projected = run.space.projector.project(&z).is_ok();
    s.record(
        9,
        "autoencoder training",
        last < first && dims.iter().all(|&d| d == 128) && projected,
        format!(
            "reconstruction MSE epoch 1 {first:.5} -> epoch {} {last:.5} over {} transitions; latent dims {dims:?}",
            loss.len(),
            run.space.ae_report.samples_used
        ),
    );
}

fn print_tables(cfg: &ExperimentConfig, run: &Run) {
    println!("synthetic corpus: {} games per policy, root seed {}", cfg.synthetic.games_per_policy, cfg.seed);
    for (name, text) in &run.csv {
        println!("--- {name}\n{}", text.trim_end());
    }
    for (d, e) in run.datasets.iter().zip(&run.arts.embeddings) {
        let test = prepare(&d.test).unwrap();
        let generic = run.arts.model.cross_entropy(&run.arts.model.generic, &test).unwrap();
        let tuned = run.arts.model.cross_entropy(&e.values, &test).unwrap();
        println!("held-out cross-entropy {}: generic {generic:.4}, fine-tuned {tuned:.4}", d.player);
    }
}

fn main() {
    let cfg = config();
    let mut s = Suite { failed: Vec::new() };

    criterion_1(&mut s);
    criterion_3(&mut s);
    let first = end_to_end(&cfg);
    let second = end_to_end(&cfg);
    criterion_2(&mut s, &first);
    criterion_4(&mut s, &first);
    criterion_5(&mut s, &cfg, &first);
    criterion_6(&mut s, &first);
    criterion_7(&mut s, &first);
    criterion_8(&mut s, &first, &second);
    criterion_9(&mut s, &first);
    print_tables(&cfg, &first);

    if s.failed.is_empty() {
        println!("acceptance: all 9 criteria pass");
    } else {
        println!("acceptance: failed criteria {:?}", s.failed);
        std::process::exit(1);
    }
}
