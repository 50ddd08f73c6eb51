use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use proptest::prelude::*;
use rand::Rng as _;

use super::*;
use crate::rng;

fn labels(m: usize) -> Vec<String> {
    (0..m).map(|i| i.to_string()).collect()
}

fn randomize(model: &mut NeuralModel, seed: u64, scale: f64) {
    let mut r = rng::stream(seed, &[99]);
    for p in model.params_mut() {
        *p = r.random_range(-scale..scale);
    }
}

fn random_inputs(n: usize, size: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut r = rng::stream(seed, &[98]);
    (0..n)
        .map(|_| (0..size).map(|_| rng::normal(&mut r)).collect())
        .collect()
}

/// pad -> conv(3, k3, SELU) -> pool -> dense(4, SELU) -> dense(3): 67 parameters.
fn small_conv() -> NeuralModel {
    let layers = vec![
        LayerSpec::ZeroPad { pad: 1 },
        LayerSpec::Conv1d {
            filters: 3,
            kernel: 3,
            stride: 1,
            activation: Activation::Selu,
        },
        LayerSpec::MaxPool { size: 2, stride: 2 },
        LayerSpec::Dense {
            units: 4,
            activation: Activation::Selu,
        },
        LayerSpec::Dense {
            units: 3,
            activation: Activation::Linear,
        },
    ];
    NeuralModel::new(Shape::new(8, 2), layers, labels(3), SeluConfig::default()).unwrap()
}

fn linear(inputs: usize, outputs: usize) -> NeuralModel {
    let layers = vec![LayerSpec::Dense {
        units: outputs,
        activation: Activation::Linear,
    }];
    NeuralModel::new(Shape::new(1, inputs), layers, labels(outputs), SeluConfig::default()).unwrap()
}

fn numeric_gradient(model: &NeuralModel, batch: &[Vec<f64>], labels: &[usize], h: f64) -> Vec<f64> {
    let mut m = model.clone();
    (0..model.param_count())
        .map(|i| {
            let orig = m.params()[i];
            m.params_mut()[i] = orig + h;
            let up = loss(&m, batch, labels).unwrap();
            m.params_mut()[i] = orig - h;
            let down = loss(&m, batch, labels).unwrap();
            m.params_mut()[i] = orig;
            (up - down) / (2.0 * h)
        })
        .collect()
}

fn rel_err(a: f64, n: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(1e-8)
}

#[test]
fn zero_parameters_give_uniform_scores() {
    let m = NeuralModel::new(FRAME_SHAPE, ArchConfig::default().layers(4), labels(4), SeluConfig::default()).unwrap();
    let x = random_inputs(3, FRAME_SHAPE.size(), 1);
    let out = forward(&m, &x, false, None).unwrap();
    for row in &out.probs {
        for p in row {
            assert!((p - 0.25).abs() < 1e-15);
        }
    }
}

#[test]
fn inference_is_deterministic_and_dropout_free() {
    let mut m = NeuralModel::reduced(&ArchConfig::default(), labels(4), 3).unwrap();
    randomize(&mut m, 4, 0.1);
    let x = random_inputs(2, FRAME_SHAPE.size(), 5);
    let a = forward(&m, &x, false, None).unwrap();
    let mut r = rng::stream(1, &[]);
    let b = forward(&m, &x, false, Some(&mut r)).unwrap();
    assert_eq!(a, b);
    let c = forward(&m, &x, true, Some(&mut r)).unwrap();
    assert_ne!(a.logits, c.logits);
}

#[test]
fn dense_layer_matches_hand_computation() {
    let mut m = linear(2, 2);
    // W = [[1, 2], [3, 4]], b = [0.5, -1]
    m.set_params(&[1.0, 2.0, 3.0, 4.0, 0.5, -1.0]).unwrap();
    let out = forward(&m, &[vec![1.0, -1.0]], false, None).unwrap();
    assert_eq!(out.logits[0], vec![-0.5, -2.0]);
    let e = [(-0.5f64).exp(), (-2.0f64).exp()];
    assert!((out.probs[0][0] - e[0] / (e[0] + e[1])).abs() < 1e-15);
}

#[test]
fn shape_mismatch_is_reported() {
    let m = linear(2, 2);
    assert!(matches!(
        forward(&m, &[vec![1.0; 3]], false, None),
        Err(NnetError::ShapeMismatch { expected: 2, got: 3 })
    ));
}

#[test]
fn cross_entropy_closed_forms() {
    assert_eq!(cross_entropy(&[vec![0.0, 1.0, 0.0]], &[1]), 0.0);
    let u = cross_entropy(&[vec![0.25; 4]], &[2]);
    assert!((u - 4f64.ln()).abs() < 1e-15);
    let h = cross_entropy(&[vec![0.5, 0.5]], &[0]);
    assert!((h - 2f64.ln()).abs() < 1e-15);
    let z = cross_entropy(&[vec![1.0, 0.0]], &[1]);
    assert!((z + LOG_CLAMP.ln()).abs() < 1e-9 && z.is_finite());
}

#[test]
fn zero_parameter_linear_gradient_matches_finite_differences() {
    let m = linear(3, 2);
    let x = random_inputs(4, 3, 7);
    let y = vec![0, 1, 1, 0];
    let a = gradient(&m, &x, &y).unwrap();
    let n = numeric_gradient(&m, &x, &y, 1e-5);
    for (a, n) in a.iter().zip(&n) {
        assert!(rel_err(*a, *n) < 1e-4, "{a} vs {n}");
    }
}

#[test]
fn conv_gradient_matches_finite_differences() {
    for seed in 0..5 {
        let mut m = small_conv();
        assert!(m.param_count() <= 500);
        randomize(&mut m, seed, 0.7);
        let x = random_inputs(3, 16, seed + 100);
        let y = vec![0, 2, 1];
        let a = gradient(&m, &x, &y).unwrap();
        let n = numeric_gradient(&m, &x, &y, 1e-5);
        let good = a.iter().zip(&n).filter(|(a, n)| rel_err(**a, **n) < 1e-4).count();
        assert!(good * 100 >= 99 * a.len(), "seed {seed}: {good}/{}", a.len());
    }
}

#[test]
fn reduced_model_gradient_spot_check() {
    let mut m = NeuralModel::reduced(&ArchConfig::default(), labels(4), 11).unwrap();
    let x = random_inputs(2, FRAME_SHAPE.size(), 12);
    let y = vec![1, 3];
    let a = gradient(&m, &x, &y).unwrap();
    let mut r = rng::stream(13, &[]);
    let h = 1e-5;
    let mut good = 0;
    let picks = 60;
    for _ in 0..picks {
        let i = r.random_range(0..m.param_count());
        let orig = m.params()[i];
        m.params_mut()[i] = orig + h;
        let up = loss(&m, &x, &y).unwrap();
        m.params_mut()[i] = orig - h;
        let down = loss(&m, &x, &y).unwrap();
        m.params_mut()[i] = orig;
        let n = (up - down) / (2.0 * h);
        if rel_err(a[i], n) < 1e-4 || (a[i] - n).abs() < 1e-9 {
            good += 1;
        }
    }
    assert!(good >= picks - 1, "{good}/{picks}");
}

#[test]
fn duplicated_sample_gradient_equals_single() {
    let mut m = small_conv();
    randomize(&mut m, 21, 0.5);
    let x = random_inputs(1, 16, 22);
    let single = gradient(&m, &x, &[2]).unwrap();
    let double = gradient(&m, &[x[0].clone(), x[0].clone()], &[2, 2]).unwrap();
    for (s, d) in single.iter().zip(&double) {
        assert!((s - d).abs() <= 1e-15 * s.abs().max(1.0));
    }
}

fn separable(n: usize, seed: u64) -> LabeledSet {
    let mut r = rng::stream(seed, &[]);
    let mut set = LabeledSet::default();
    for i in 0..n {
        let label = i % 2;
        let sign = if label == 0 { -1.0 } else { 1.0 };
        let x = (0..4).map(|_| sign * 1.5 + 0.5 * rng::normal(&mut r)).collect();
        set.push(x, label);
    }
    set
}

#[test]
fn separable_toy_problem_trains() {
    let data = separable(400, 31);
    let cfg = TrainConfig {
        learning_rate: 1e-2,
        max_epochs: 50,
        batch_size: 16,
        seed: 32,
        ..TrainConfig::default()
    };
    let (model, hist) = train(linear(4, 2), &data, &cfg).unwrap();
    assert!(hist.records.len() <= 50);
    assert!(hist.best().unwrap().val_acc >= 0.99);
    for (i, r) in hist.records.iter().enumerate() {
        assert_eq!(r.epoch, i + 1);
    }
    assert!(accuracy(&model, &data).unwrap() >= 0.99);
}

#[test]
fn converged_separable_problem_has_small_gradient() {
    let data = separable(40, 33);
    let cfg = TrainConfig {
        learning_rate: 0.1,
        max_epochs: 3000,
        patience: 3000,
        batch_size: 40,
        seed: 34,
        ..TrainConfig::default()
    };
    let val = data.clone();
    let (model, _) = train_with_validation(linear(4, 2), &data, &val, &cfg, None, &mut |_, _| {}).unwrap();
    let g = gradient(&model, &data.inputs, &data.labels).unwrap();
    let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
    assert!(norm < 1e-3, "gradient norm {norm}");
}

#[test]
fn training_input_errors() {
    let cfg = TrainConfig::default();
    assert_eq!(
        train(linear(2, 2), &LabeledSet::default(), &cfg).unwrap_err(),
        NnetError::EmptyDataset
    );
    let one = LabeledSet::new(vec![vec![0.0, 1.0]; 5], vec![1; 5]);
    assert_eq!(train(linear(2, 2), &one, &cfg).unwrap_err(), NnetError::SingleClass);
}

#[test]
fn early_stopping_restores_first_epoch() {
    // Validation labels are the opposite of the training labels, so every
    // epoch of progress on training makes validation worse.
    let tr = separable(40, 41);
    let mut va = tr.clone();
    va.labels.iter_mut().for_each(|l| *l = 1 - *l);
    let cfg = TrainConfig {
        learning_rate: 1e-2,
        patience: 1,
        max_epochs: 20,
        batch_size: 8,
        seed: 42,
        ..TrainConfig::default()
    };
    let mut snaps = Vec::new();
    let (model, hist) = train_with_validation(linear(4, 2), &tr, &va, &cfg, None, &mut |_, m| {
        snaps.push(m.params().to_vec())
    })
    .unwrap();
    assert_eq!(hist.records.len(), 2);
    assert!(hist.records[1].val_loss > hist.records[0].val_loss);
    assert!(hist.stopped_early);
    assert_eq!(hist.best_epoch, 1);
    assert_eq!(model.params(), &snaps[0][..]);
}

#[test]
fn fisher_is_zero_for_dead_parameter() {
    let layers = vec![
        LayerSpec::Dense {
            units: 3,
            activation: Activation::Selu,
        },
        LayerSpec::Dense {
            units: 2,
            activation: Activation::Linear,
        },
    ];
    let mut m = NeuralModel::new(Shape::new(1, 4), layers, labels(2), SeluConfig::default()).unwrap();
    randomize(&mut m, 51, 0.5);
    // Output weights from hidden unit 0 are zero, so nothing upstream of it
    // reaches the loss.
    let head = m.layer_params(1);
    m.params_mut()[head.start] = 0.0;
    m.params_mut()[head.start + 3] = 0.0;
    let x = random_inputs(20, 4, 52);
    let y: Vec<usize> = (0..20).map(|i| i % 2).collect();
    let f = fisher_diagonal(&m, &x, &y).unwrap();
    for j in 0..4 {
        assert_eq!(f.values()[j], 0.0);
    }
    assert_eq!(f.values()[12], 0.0);
    assert!(f.values().iter().filter(|v| **v > 0.0).count() > 10);
    assert_eq!(f.anchor(), m.params());
}

#[test]
fn fisher_is_repeatable_and_linear_in_samples() {
    let mut m = small_conv();
    randomize(&mut m, 61, 0.5);
    let x = random_inputs(20, 16, 62);
    let y: Vec<usize> = (0..20).map(|i| i % 3).collect();
    let a = fisher_diagonal(&m, &x, &y).unwrap();
    assert_eq!(a, fisher_diagonal(&m, &x, &y).unwrap());
    let f1 = fisher_diagonal(&m, &x[..10], &y[..10]).unwrap();
    let f2 = fisher_diagonal(&m, &x[10..], &y[10..]).unwrap();
    for i in 0..a.values().len() {
        let mean = 0.5 * (f1.values()[i] + f2.values()[i]);
        assert!((a.values()[i] - mean).abs() <= 1e-12 * mean.max(1e-12));
    }
    assert_eq!(fisher_diagonal(&m, &[], &[]).unwrap_err(), NnetError::EmptySamples);
}

#[test]
fn ewc_penalty_closed_forms() {
    let mut m = small_conv();
    randomize(&mut m, 71, 0.5);
    let x = random_inputs(5, 16, 72);
    let y = vec![0, 1, 2, 0, 1];
    let f = fisher_diagonal(&m, &x, &y).unwrap();
    // At the anchor the penalty vanishes.
    assert_eq!(ewc_loss(&m, &x, &y, &f).unwrap(), loss(&m, &x, &y).unwrap());

    let anchor = m.params().to_vec();
    randomize(&mut m, 73, 0.5);
    let f0 = f.clone().with_lambda(0.0);
    assert_eq!(
        ewc_loss(&m, &x, &y, &f0).unwrap().to_bits(),
        loss(&m, &x, &y).unwrap().to_bits()
    );

    let ones = FisherDiag::new(vec![1.0; anchor.len()], anchor.clone(), 2.0).unwrap();
    let dist2: f64 = m.params().iter().zip(&anchor).map(|(a, b)| (a - b) * (a - b)).sum();
    let pen = ewc_loss(&m, &x, &y, &ones).unwrap() - loss(&m, &x, &y).unwrap();
    assert!((pen - dist2).abs() < 1e-10 * dist2);
}

#[test]
fn ewc_gradient_matches_finite_differences() {
    let mut m = small_conv();
    randomize(&mut m, 81, 0.5);
    let x = random_inputs(3, 16, 82);
    let y = vec![2, 0, 1];
    let f = fisher_diagonal(&m, &x, &y).unwrap().with_lambda(50.0);
    randomize(&mut m, 83, 0.5);
    let a = ewc_gradient(&m, &x, &y, &f).unwrap();
    let h = 1e-5;
    let mut mm = m.clone();
    let mut good = 0;
    for i in 0..a.len() {
        let orig = mm.params()[i];
        mm.params_mut()[i] = orig + h;
        let up = ewc_loss(&mm, &x, &y, &f).unwrap();
        mm.params_mut()[i] = orig - h;
        let down = ewc_loss(&mm, &x, &y, &f).unwrap();
        mm.params_mut()[i] = orig;
        if rel_err(a[i], (up - down) / (2.0 * h)) < 1e-4 {
            good += 1;
        }
    }
    assert!(good * 100 >= 99 * a.len());
}

#[test]
fn proximal_step_cases() {
    // lr * lambda * F = 1: halfway from 2 toward the anchor at 0.
    let f = FisherDiag::new(vec![1.0, 0.0, 1e12], vec![0.0, 0.0, 5.0], 1.0).unwrap();
    let mut p = vec![2.0, 2.0, -3.0];
    f.proximal_sgd_step(&mut p, &[0.0, 1.0, 7.0], 1.0);
    assert_eq!(p[0], 1.0);
    // No Fisher weight: a plain SGD step.
    assert_eq!(p[1], 1.0);
    // Stiff coordinate lands on the anchor instead of overshooting.
    assert!((p[2] - 5.0).abs() < 1e-9);
}

#[test]
fn misaligned_fisher_is_rejected() {
    let m = linear(2, 2);
    let f = FisherDiag::new(vec![0.0; 3], vec![0.0; 3], 1.0).unwrap();
    assert!(matches!(
        ewc_loss(&m, &[vec![0.0, 0.0]], &[0], &f),
        Err(NnetError::ParamMismatch { .. })
    ));
    assert!(FisherDiag::new(vec![-1.0], vec![0.0], 1.0).is_err());
}

#[test]
fn score_vector_argmax_and_ties() {
    let s = ScoreVector::new([0.7, 0.1, 0.1, 0.1]).unwrap();
    assert_eq!(s.argmax(), SignalClass::Idle);
    assert_eq!(ScoreVector::uniform().argmax(), SignalClass::Idle);
    let s = ScoreVector::new([0.1, 0.2, 0.35, 0.35]).unwrap();
    assert_eq!(s.argmax(), SignalClass::Jammer);
    assert!(ScoreVector::new([0.5, 0.6, 0.0, 0.0]).is_err());
    assert!(ScoreVector::new([1.2, -0.2, 0.0, 0.0]).is_err());
}

#[test]
fn confusion_matrix_cases() {
    let truth = [0, 1, 2, 3, 1];
    let c = Confusion::from_predictions(4, &truth, &truth).unwrap();
    let n = c.normalized();
    for i in 0..4 {
        for j in 0..4 {
            assert_eq!(n[i][j], if i == j { 1.0 } else { 0.0 });
        }
    }
    let one = Confusion::from_predictions(4, &[2], &[1]).unwrap();
    let nonzero = one.counts().iter().flatten().filter(|&&v| v > 0).count();
    assert_eq!(nonzero, 1);
    assert_eq!(one.counts()[2][1], 1);
    assert!(Confusion::from_predictions(4, &[], &[]).is_err());
}

#[test]
fn random_predictions_fill_confusion_evenly() {
    // Each row has 1000 draws; a cell's standard deviation is
    // sqrt(0.25 * 0.75 / 1000) ~ 0.0137, so 0.03 is about 2.2 sigma per cell.
    // The seed is fixed, so this is a deterministic check.
    let mut r = rng::stream(91, &[]);
    let truth: Vec<usize> = (0..4000).map(|i| i % 4).collect();
    let pred: Vec<usize> = (0..4000).map(|_| r.random_range(0..4)).collect();
    let c = Confusion::from_predictions(4, &truth, &pred).unwrap();
    for row in c.normalized() {
        assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for v in row {
            assert!((v - 0.25).abs() < 0.03, "{v}");
        }
    }
}

#[test]
fn feature_length_matches_conv_output() {
    let m = NeuralModel::reduced(&ArchConfig::default(), labels(4), 1).unwrap();
    // 128 -> 64 -> 32 -> 16 positions, 32 channels.
    assert_eq!(m.feature_len(), 16 * 32);
    let x = random_inputs(1, FRAME_SHAPE.size(), 2);
    let f = m.features(&x[0]).unwrap();
    assert_eq!(f.len(), 512);
    assert_eq!(f, m.features(&x[0]).unwrap());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn softmax_rows_are_distributions(seed in 0u64..1000, scale in 0.01f64..5.0) {
        let mut m = small_conv();
        randomize(&mut m, seed, scale);
        let x = random_inputs(4, 16, seed ^ 0xabc);
        let out = forward(&m, &x, false, None).unwrap();
        for row in out.probs {
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            prop_assert!(row.iter().all(|p| (0.0..=1.0).contains(p)));
        }
    }
}
