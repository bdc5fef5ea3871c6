mod common;

use ndarray::Array2;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stylebench::style::{
    bootstrap_jsd_std, build_histogram, jensen_shannon, jsd_distributions, train_autoencoder, transition_vector,
    AeConfig, AutoEncoder, GridBounds, PcaProjector, Projector, TransitionVector, LATENT_DIM, TRANSITION_LEN,
};
use stylebench::synthetic::ScriptedPolicy;
use stylebench_chess::{legal_moves, BoardState, Move};
use stylebench_neural::{gradient_check, MlpMseProbe};

/// Natural-log entropy form: H(M) - (H(P) + H(Q)) / 2, rescaled to bits.
fn jsd_oracle(p: &[f64], q: &[f64]) -> f64 {
    let ent = |d: &[f64]| -> f64 { d.iter().filter(|&&x| x > 0.0).map(|&x| -x * x.ln()).sum() };
    let m: Vec<f64> = p.iter().zip(q).map(|(a, b)| (a + b) / 2.0).collect();
    (ent(&m) - 0.5 * (ent(p) + ent(q))) / std::f64::consts::LN_2
}

fn random_dist(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    // sparse on purpose: about a third of the bins are empty
    let w: Vec<f64> = (0..n)
        .map(|_| if rng.gen_bool(0.35) { 0.0 } else { rng.gen::<f64>() })
        .collect();
    let z: f64 = w.iter().sum::<f64>().max(f64::MIN_POSITIVE);
    w.iter().map(|x| x / z).collect()
}

fn transitions(n: usize, seed: u64) -> Vec<TransitionVector> {
    let corpus = common::synth(&ScriptedPolicy::STYLES, 20, 30, 4, seed);
    corpus
        .iter()
        .flat_map(|g| g.positions().into_iter().zip(g.moves.clone()))
        .take(n)
        .map(|(s, m)| transition_vector(&s, m).unwrap())
        .collect()
}

#[test]
fn transition_counts_follow_the_encoding() {
    let s = BoardState::start();
    let e4 = Move::from_uci("e2e4").unwrap();
    let t = transition_vector(&s, e4).unwrap();
    assert_eq!(t.count_ones(), 641);
    assert_eq!(t.to_dense().len(), TRANSITION_LEN);
    let moves = legal_moves(&s);
    assert_ne!(transition_vector(&s, moves[0]).unwrap(), transition_vector(&s, moves[1]).unwrap());
    assert!(transition_vector(&s, Move::from_uci("e2e5").unwrap()).is_err());
}

#[test]
fn jsd_hand_cases() {
    let (j, d) = {
        let j = jsd_distributions(&[0.5, 0.5], &[1.0, 0.0]).unwrap();
        (j, j.sqrt())
    };
    assert!((j - 0.31128).abs() < 1e-5);
    assert!((d - 0.55792).abs() < 1e-5);
    assert!((jsd_distributions(&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]).unwrap() - 1.0).abs() < 1e-12);
    assert_eq!(jsd_distributions(&[0.2, 0.8], &[0.2, 0.8]).unwrap(), 0.0);
    assert!(jsd_distributions(&[1.0], &[0.5, 0.5]).is_err());
}

#[test]
fn jsd_matches_the_entropy_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..500 {
        let p = random_dist(&mut rng, 225);
        let q = random_dist(&mut rng, 225);
        assert!((jsd_distributions(&p, &q).unwrap() - jsd_oracle(&p, &q)).abs() < 1e-12);
    }
}

#[test]
fn distance_obeys_the_triangle_inequality() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..1000 {
        let n = rng.gen_range(2..=225);
        let (p, q, r) = (random_dist(&mut rng, n), random_dist(&mut rng, n), random_dist(&mut rng, n));
        let d = |a: &[f64], b: &[f64]| jsd_distributions(a, b).unwrap().sqrt();
        assert!(d(&p, &r) <= d(&p, &q) + d(&q, &r) + 1e-12);
    }
}

#[test]
fn histogram_binning_clamps_the_upper_edge() {
    let b = GridBounds::new(0.0, 1.0, 0.0, 1.0).unwrap();
    let h = build_histogram(&[(0.0, 0.0), (1.0, 1.0)], &b, 15).unwrap();
    assert_eq!(h.get(0, 0), 0.5);
    assert_eq!(h.get(14, 14), 0.5);
    let one = build_histogram(&[(0.3, 0.7)], &b, 15).unwrap();
    assert_eq!(one.get(4, 10), 1.0);
    assert!(build_histogram(&[(1.5, 0.0)], &b, 15).is_err());
    let other = build_histogram(&[(0.3, 0.7)], &GridBounds::new(0.0, 2.0, 0.0, 1.0).unwrap(), 15).unwrap();
    assert!(jensen_shannon(&one, &other).is_err());
}

#[test]
fn bootstrap_std_is_seeded() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let a: Vec<(f64, f64)> = (0..200).map(|_| (rng.gen(), rng.gen())).collect();
    let b: Vec<(f64, f64)> = (0..150).map(|_| (rng.gen::<f64>().powi(2), rng.gen())).collect();
    let bounds = GridBounds::from_points(a.iter().chain(&b)).unwrap();
    let s1 = bootstrap_jsd_std(&a, &b, &bounds, 15, 100, 9).unwrap();
    assert_eq!(s1, bootstrap_jsd_std(&a, &b, &bounds, 15, 100, 9).unwrap());
    assert!(s1 > 0.0 && s1 < 0.2);
}

/// Leading eigenpairs by power iteration with deflation.
fn power_pca(x: &Array2<f64>) -> Vec<(f64, Vec<f64>)> {
    let n = x.nrows() as f64;
    let mean = x.mean_axis(ndarray::Axis(0)).unwrap();
    let c = x - &mean;
    let mut cov = c.t().dot(&c) / (n - 1.0);
    let d = cov.nrows();
    let mut out = Vec::new();
    for _ in 0..2 {
        let mut v = ndarray::Array1::from_elem(d, 1.0 / (d as f64).sqrt());
        v[0] += 0.1;
        for _ in 0..5000 {
            let w = cov.dot(&v);
            let norm = w.dot(&w).sqrt();
            v = w / norm;
        }
        let lambda = v.dot(&cov.dot(&v));
        let vv = v.clone().insert_axis(ndarray::Axis(1));
        cov = &cov - &(vv.dot(&vv.t()) * lambda);
        out.push((lambda, v.to_vec()));
    }
    out
}

#[test]
fn pca_agrees_with_power_iteration() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let scales = [5.0, 3.0, 1.0, 0.5, 0.2, 0.1];
    let x = Array2::from_shape_fn((300, 6), |(_, j)| scales[j] * (rng.gen::<f64>() - 0.5) + j as f64);
    let pca = PcaProjector::fit(x.view()).unwrap();
    for (k, (lambda, v)) in power_pca(&x).into_iter().enumerate() {
        assert!((pca.variances[k] - lambda).abs() < 1e-8 * lambda.max(1.0));
        let dot: f64 = pca.components[k].iter().zip(&v).map(|(a, b)| a * b).sum();
        assert!((dot.abs() - 1.0).abs() < 1e-8, "component {k}: |cos| = {}", dot.abs());
    }
    let c = &pca.components;
    assert!(c[0].iter().zip(&c[1]).map(|(a, b)| a * b).sum::<f64>().abs() < 1e-9);
    for comp in c {
        assert!((comp.iter().map(|a| a * a).sum::<f64>() - 1.0).abs() < 1e-9);
        assert!(comp.iter().find(|v| v.abs() > 1e-12).unwrap() > &0.0);
    }
    assert!(pca.variances[0] >= pca.variances[1]);
    let (px, py) = pca.project(&pca.mean).unwrap();
    assert!(px.abs() < 1e-12 && py.abs() < 1e-12);
}

#[test]
fn pca_on_a_line_and_degenerate_input() {
    let line = Array2::from_shape_fn((20, 4), |(i, j)| i as f64 * [1.0, 2.0, -1.0, 0.5][j]);
    let pca = PcaProjector::fit(line.view()).unwrap();
    for r in line.rows() {
        assert!(pca.project(&r.to_vec()).unwrap().1.abs() < 1e-9);
    }
    assert!(PcaProjector::fit(Array2::from_elem((5, 3), 2.0).view()).is_err());
    assert!(PcaProjector::fit(Array2::zeros((2, 3)).view()).is_err());
}

#[test]
fn autoencoder_gradient_check() {
    let cfg = AeConfig {
        hidden: vec![24, 12],
        latent: 6,
        seed: 5,
        ..AeConfig::default()
    };
    let mut ae = AutoEncoder::new(&cfg);
    let data = transitions(5, 1);
    let mut x = Array2::zeros((data.len(), TRANSITION_LEN));
    for (row, t) in x.rows_mut().into_iter().zip(&data) {
        t.write_dense(row.into_slice().unwrap());
    }
    let mut probe = MlpMseProbe {
        net: &mut ae.net,
        input: x.clone(),
        target: x,
    };
    let r = gradient_check(&mut probe, 400, 6).unwrap();
    assert!(r.max_relative_error < 1e-4, "{r:?}");
}

#[test]
fn autoencoder_trains_and_is_deterministic() {
    let data = transitions(1200, 2);
    assert!(data.len() >= 1000);
    let cfg = AeConfig {
        hidden: vec![64, 32],
        latent: LATENT_DIM,
        epochs: 4,
        batch_size: 64,
        seed: 3,
        ..AeConfig::default()
    };
    let (ae, report) = train_autoencoder(&data, &cfg).unwrap();
    assert!(report.epoch_loss.last().unwrap() < report.epoch_loss.first().unwrap());
    let z = ae.encode_transitions(&data).unwrap();
    assert_eq!(z.ncols(), LATENT_DIM);
    assert!(z.iter().all(|v| v.is_finite()));
    let (again, _) = train_autoencoder(&data, &cfg).unwrap();
    assert_eq!(ae.to_weight_file().to_bytes(), again.to_weight_file().to_bytes());
    assert!(ae.encode_latent(&[0.0; 10]).is_err());
    assert!(train_autoencoder(&[], &cfg).is_err());
}

#[test]
fn zero_encoder_gives_zero_latent() {
    let mut ae = AutoEncoder::new(&AeConfig::default());
    for l in &mut ae.net.layers[..ae.encoder_layers] {
        l.weight.fill(0.0);
        l.bias.fill(0.0);
    }
    let t = transitions(1, 3)[0].to_dense();
    let z = ae.encode_latent(&t).unwrap();
    assert_eq!(z.len(), LATENT_DIM);
    assert!(z.iter().all(|&v| v == 0.0));
}

proptest! {
    #[test]
    fn jsd_is_symmetric_and_bounded(seed in any::<u64>(), n in 1usize..64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_dist(&mut rng, n);
        let q = random_dist(&mut rng, n);
        let a = jsd_distributions(&p, &q).unwrap();
        prop_assert_eq!(a.to_bits(), jsd_distributions(&q, &p).unwrap().to_bits());
        prop_assert!((0.0..=1.0).contains(&a));
        prop_assert!(jsd_distributions(&p, &p).unwrap().abs() < 1e-12);
        if a < 1e-12 {
            prop_assert!(p.iter().zip(&q).all(|(x, y)| (x - y).abs() < 1e-6));
        }
    }

    #[test]
    fn histograms_sum_to_one(seed in any::<u64>(), n in 1usize..300, grid in 1usize..20) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pts: Vec<(f64, f64)> = (0..n).map(|_| (rng.gen_range(-3.0..3.0), rng.gen_range(0.0..1.0))).collect();
        let b = GridBounds::from_points(&pts).unwrap();
        let h = build_histogram(&pts, &b, grid).unwrap();
        prop_assert!((h.bins.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert_eq!(h.bins.len(), grid * grid);
    }
}
