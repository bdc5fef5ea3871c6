mod common;

use common::{dataset, random_positions, synth};
use proptest::prelude::*;
use stylebench::accuracy::{move_accuracy, Selector};
use stylebench::policy::{
    finetune_embedding, prepare, pretrain_backbone, PolicyArch, PolicyGradProbe, PolicyModel, PreparedSample,
    Provenance, TrainConfig,
};
use stylebench::synthetic::ScriptedPolicy;
use stylebench_chess::{legal_moves, BoardState};
use stylebench_neural::gradient_check;

fn small_arch() -> PolicyArch {
    PolicyArch {
        embed_dim: 64,
        hidden: vec![32, 16],
    }
}

fn cfg(epochs: usize, lr: f64, seed: u64) -> TrainConfig {
    TrainConfig {
        epochs,
        lr,
        batch_size: 64,
        seed,
        ..TrainConfig::pretrain()
    }
}

fn samples(policy: ScriptedPolicy, games: usize, seed: u64) -> (Vec<PreparedSample>, Vec<PreparedSample>) {
    let corpus = synth(&[policy], games, 30, 6, seed);
    let d = dataset(&corpus, policy, seed);
    (prepare(&d.train).unwrap(), prepare(&d.test).unwrap())
}

#[test]
fn gradient_check_full_loss() {
    let (train, _) = samples(ScriptedPolicy::MaterialGreedy, 4, 1);
    let mut model = PolicyModel::new(&PolicyArch::default(), 7);
    let emb: Vec<f64> = (0..64).map(|i| ((i * 37 % 11) as f64 - 5.0) * 0.05).collect();
    let batch = train[..6].to_vec();
    let mut probe = PolicyGradProbe::new(&mut model, emb, batch);
    let r = gradient_check(&mut probe, 300, 3).unwrap();
    assert!(r.max_relative_error < 1e-4, "{r:?}");
}

#[test]
fn pretraining_loss_falls() {
    let (train, _) = samples(ScriptedPolicy::CenterControl, 20, 2);
    let (_, report) = pretrain_backbone(&small_arch(), &[train], &cfg(4, 1e-3, 5)).unwrap();
    let total = report.epoch_total();
    assert!(total.last().unwrap() < total.first().unwrap(), "{total:?}");
}

#[test]
fn singleton_is_memorized() {
    let state = BoardState::start();
    let target = legal_moves(&state)[13];
    let one = PreparedSample::new(&state, target, 0.0).unwrap();
    let (model, _) = pretrain_backbone(&small_arch(), &[vec![one; 32]], &cfg(20, 1e-2, 1)).unwrap();
    assert_eq!(model.predict(&model.generic, &state).unwrap().argmax(), target);
    let pairs = vec![stylebench::dataset::StateActionPair {
        state,
        mv: target,
        player: "solo".into(),
        game_id: 0,
        ply: 0,
        outcome: 0,
    }];
    let acc = move_accuracy(&model, &model.generic, &pairs, &Selector::ArgmaxPolicy, 0).unwrap();
    assert_eq!(acc.mean, 1.0);
}

#[test]
fn first_legal_player_is_learned() {
    let policy = ScriptedPolicy::FirstLegal;
    let corpus = synth(&[policy], 150, 30, 10, 4);
    let d = dataset(&corpus, policy, 4);
    let train = prepare(&d.train).unwrap();
    let (model, _) = pretrain_backbone(&PolicyArch::default(), &[train], &cfg(6, 1e-3, 9)).unwrap();
    let acc = move_accuracy(&model, &model.generic, &d.test, &Selector::ArgmaxPolicy, 0).unwrap();
    assert!(acc.mean >= 0.9, "held-out accuracy {:.3} over {} pairs", acc.mean, acc.n);
}

#[test]
fn pretraining_is_bit_deterministic() {
    let (train, _) = samples(ScriptedPolicy::UniformRandom, 6, 3);
    let run = || {
        let (m, _) = pretrain_backbone(&small_arch(), &[train.clone()], &cfg(2, 1e-3, 11)).unwrap();
        m.to_weight_file().to_bytes()
    };
    assert_eq!(run(), run());
}

#[test]
fn finetuning_touches_only_the_embedding() {
    let (train, _) = samples(ScriptedPolicy::CenterControl, 10, 5);
    let (model, _) = pretrain_backbone(&small_arch(), &[train.clone()], &cfg(2, 1e-3, 2)).unwrap();
    let before = model.frozen_checksum();
    let frozen: Vec<f64> = model.frozen_params().collect();
    let ft = TrainConfig {
        freeze_backbone: true,
        ..cfg(3, 1e-2, 4)
    };
    let (emb, _) = finetune_embedding(&model, "cc", &train, &ft).unwrap();
    assert_eq!(model.frozen_checksum(), before);
    assert!(model.frozen_params().zip(&frozen).all(|(a, b)| a.to_bits() == b.to_bits()));
    let changed = emb.values.iter().zip(&model.generic).filter(|(a, b)| a != b).count();
    assert_eq!(changed, 64);
    assert_eq!(emb.provenance, Provenance::FineTuned);
}

#[test]
fn zero_epochs_copies_the_generic_embedding() {
    let (train, _) = samples(ScriptedPolicy::CenterControl, 3, 6);
    let model = PolicyModel::new(&small_arch(), 3);
    let ft = TrainConfig {
        freeze_backbone: true,
        ..cfg(0, 1e-2, 4)
    };
    let (emb, _) = finetune_embedding(&model, "cc", &train, &ft).unwrap();
    assert_eq!(emb.values, model.generic);
    assert_eq!(emb.provenance, Provenance::GenericCopy);
}

#[test]
fn finetuning_rejects_unfrozen_or_empty_input() {
    let model = PolicyModel::new(&small_arch(), 3);
    let (train, _) = samples(ScriptedPolicy::CenterControl, 2, 6);
    assert!(finetune_embedding(&model, "x", &train, &cfg(1, 1e-2, 0)).is_err());
    let ft = TrainConfig {
        freeze_backbone: true,
        ..cfg(1, 1e-2, 0)
    };
    assert!(finetune_embedding(&model, "x", &[], &ft).is_err());
}

#[test]
fn distinct_embeddings_change_some_argmax() {
    let corpus = synth(&[ScriptedPolicy::CenterControl, ScriptedPolicy::MaterialGreedy], 60, 30, 6, 8);
    let cc = prepare(&dataset(&corpus, ScriptedPolicy::CenterControl, 1).train).unwrap();
    let mg = prepare(&dataset(&corpus, ScriptedPolicy::MaterialGreedy, 1).train).unwrap();
    let (model, _) = pretrain_backbone(&PolicyArch::default(), &[cc.clone(), mg.clone()], &cfg(2, 5e-4, 3)).unwrap();
    let ft = TrainConfig {
        freeze_backbone: true,
        ..cfg(10, 1e-2, 5)
    };
    let (a, _) = finetune_embedding(&model, "cc", &cc, &ft).unwrap();
    let (b, _) = finetune_embedding(&model, "mg", &mg, &ft).unwrap();
    let dist = a.values.iter().zip(&b.values).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    assert!(dist >= 1.0, "embeddings only {dist:.3} apart");
    let differs = random_positions(200, 12).iter().any(|s| {
        model.predict(&a.values, s).unwrap().argmax() != model.predict(&b.values, s).unwrap().argmax()
    });
    assert!(differs);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn predictions_are_distributions_over_legal_moves(seed in any::<u64>()) {
        let model = PolicyModel::new(&small_arch(), seed);
        let emb: Vec<f64> = (0..64).map(|i| ((seed >> (i % 60)) & 7) as f64 - 3.5).collect();
        for s in random_positions(125, seed) {
            let p = model.predict(&emb, &s).unwrap();
            prop_assert_eq!(&p.moves, &legal_moves(&s));
            prop_assert!((p.probs.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            prop_assert!(p.probs.iter().all(|&x| x >= 0.0));
            prop_assert!((-1.0..=1.0).contains(&p.value));
        }
    }
}
