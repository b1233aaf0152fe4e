use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use texsem::autodiff::Tensor;
use texsem::gan::*;
use texsem::io::{load_checkpoint, Checkpoint};
use texsem::synth::{synthesize, SemanticVector};
use texsem::Error;

fn dataset(n: usize, seed: u64, size: usize) -> GanDataset {
    GanDataset::from_samples(&synthesize(n, seed, size).unwrap()).unwrap()
}

fn small_joint(seed: u64) -> (GanDataset, GanState) {
    let data = dataset(40, 5, 16);
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let f = PerceptualNet::new(Capacity::Small, 16, &mut rng).unwrap();
    let config = JointConfig {
        batch_size: 4,
        seed,
        ..JointConfig::default()
    };
    (data, GanState::joint(&config, f).unwrap())
}

#[test]
fn memorizes_eight_pairs() {
    let data = dataset(8, 3, 32);
    let config = PerceptualConfig {
        steps: 5000,
        batch_size: 8,
        ..PerceptualConfig::default()
    };
    let (_, log) = pretrain_perceptual(&data, None, &config).unwrap();
    let first = log.step_losses.iter().position(|&l| l <= 1e-3);
    assert!(first.is_some(), "best loss {:?}", log.step_losses.iter().cloned().fold(f64::INFINITY, f64::min));
}

#[test]
fn untrained_regressor_sits_at_zero_output_distance() {
    let data = dataset(30, 4, 32);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let f = PerceptualNet::new(Capacity::Small, 32, &mut rng).unwrap();
    let y = data.semantics();
    let zero_dist = y.data().iter().map(|&v| (v as f64).powi(2)).sum::<f64>() / (2.0 * data.len() as f64);
    let err = perceptual_error(&f, &data).unwrap();
    let out = f.predict(data.images()).unwrap();
    assert!(out.data().iter().all(|v| v.abs() < 0.25));
    assert!((err - zero_dist).abs() < 0.1 * zero_dist, "{err} vs {zero_dist}");
}

#[test]
fn pretraining_reduces_smoothed_loss() {
    let data = dataset(300, 8, 32);
    for seed in 0..3 {
        let config = PerceptualConfig {
            steps: 500,
            seed,
            ..PerceptualConfig::default()
        };
        let (_, log) = pretrain_perceptual(&data, Some(&data), &config).unwrap();
        let head: f64 = log.step_losses[..50].iter().sum::<f64>() / 50.0;
        let tail: f64 = log.step_losses[450..].iter().sum::<f64>() / 50.0;
        assert!(tail < head, "seed {seed}: {head} -> {tail}");
        assert!(!log.epochs.is_empty());
        assert!(log.epochs.iter().all(|e| e.validation_quadratic.is_some()));
    }
}

#[test]
fn joint_training_keeps_contracts() {
    let (data, mut state) = small_joint(1);
    let frozen = state.perceptual.clone().unwrap();
    let records = train(&mut state, &data, 100, None).unwrap();
    assert_eq!(state.perceptual.as_ref().unwrap(), &frozen);
    let bits = |p: &PerceptualNet| -> Vec<u32> {
        p.mlp.params.iter().flat_map(|(_, t)| t.data().iter().map(|v| v.to_bits())).collect::<Vec<_>>()
    };
    assert_eq!(bits(state.perceptual.as_ref().unwrap()), bits(&frozen));
    assert_eq!((state.d_updates, state.g_updates), (100, 200));
    for r in &records {
        assert!((r.g_loss - (r.g_loss_d + state.alpha * r.g_loss_f)).abs() <= 1e-12);
        assert!(r.d_loss.is_finite() && r.g_loss_f >= 0.0);
    }
    assert_eq!(records.last().unwrap().step, 100);
}

#[test]
fn fixed_seed_gives_identical_trace() {
    let run = || {
        let (data, mut state) = small_joint(7);
        train(&mut state, &data, 15, None).unwrap()
    };
    assert_eq!(format_trace(&run()), format_trace(&run()));
    let (data, mut other) = small_joint(8);
    assert_ne!(run(), train(&mut other, &data, 15, None).unwrap());
}

#[test]
fn resumed_training_matches_uninterrupted() {
    let (data, mut full) = small_joint(3);
    let expected = train(&mut full, &data, 10, None).unwrap();

    let (_, mut first) = small_joint(3);
    let mut records = train(&mut first, &data, 4, None).unwrap();
    let bytes = first.to_checkpoint().encode().unwrap();
    let mut resumed = GanState::from_checkpoint(&Checkpoint::decode(&bytes).unwrap()).unwrap();
    assert_eq!(resumed, first);
    records.extend(train(&mut resumed, &data, 6, None).unwrap());
    assert_eq!(records, expected);
    assert_eq!(resumed, full);
}

#[test]
fn non_finite_step_preserves_last_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("state.txl");
    let (data, mut state) = small_joint(4);
    let plan = CheckpointPlan { path: &path, every: 2 };
    train(&mut state, &data, 4, Some(plan)).unwrap();
    let saved = std::fs::read(&path).unwrap();

    let w = state.generator.mlp.params.get_mut("l0.weight").unwrap();
    w.data_mut()[0] = f32::NAN;
    let err = train(&mut state, &data, 3, Some(plan)).unwrap_err();
    assert!(matches!(err, Error::NonFinite(_)), "{err:?}");
    assert_eq!(std::fs::read(&path).unwrap(), saved);
    assert_eq!(load_checkpoint(&path).unwrap().meta("iteration").unwrap(), "4");
}

#[test]
fn dcgan_schedule_is_one_to_one() {
    let data = dataset(20, 6, 16);
    let config = DcganConfig {
        batch_size: 4,
        iterations: 12,
        ..DcganConfig::default()
    };
    let (state, records) = dcgan_train(&data, &config).unwrap();
    assert_eq!(state.d_updates, state.g_updates);
    assert_eq!(state.d_updates, 12);
    assert!(!state.is_conditional());
    assert!(records.iter().all(|r| r.g_loss_f == 0.0 && r.g_loss == r.g_loss_d));
    let z = Tensor::from_fn(&[3, config.noise_dim], |i| ((i as f32) * 0.37).sin());
    let images = state.generator.generate_batch(None, &z).unwrap();
    assert!(images.data().iter().all(|v| v.abs() < 1.0));
}

#[test]
fn trace_file_has_header_and_rows() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("trace.tsv");
    let (data, mut state) = small_joint(2);
    let records = train(&mut state, &data, 3, None).unwrap();
    write_trace(&records, &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], TRACE_HEADER);
    assert_eq!(lines.len(), 4);
    assert!(lines[3].starts_with("3\t"));
}

#[test]
fn generate_rejects_wrong_noise_length() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let g = GeneratorNet::<f32>::new(true, 64, 32, &mut rng).unwrap();
    let image = g.generate(&SemanticVector::zeros(), &noise_from_seed(1, 64)).unwrap();
    assert_eq!((image.height(), image.width()), (32, 32));
    assert!(matches!(
        g.generate(&SemanticVector::zeros(), &[0.0; 10]),
        Err(Error::DimensionMismatch { expected: 64, got: 10 })
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn generated_images_stay_in_range(
        seed in any::<u64>(),
        scale in prop::sample::select(vec![1.0f32, 10.0, 1e3]),
        y in prop::collection::vec(-1.0f64..1.0, 94),
        z in prop::collection::vec(-4.0f64..4.0, 8),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut g = GeneratorNet::<f32>::new(true, 8, 16, &mut rng).unwrap();
        for (_, t) in g.mlp.params.iter_mut() {
            for v in t.data_mut() {
                *v *= scale;
            }
        }
        let yt = Tensor::from_rows(&[y]).unwrap();
        let zt = Tensor::from_rows(&[z]).unwrap();
        let out = g.generate_batch(Some(&yt), &zt).unwrap();
        if scale == 1.0 {
            prop_assert!(out.data().iter().all(|v| v.abs() < 1.0));
        } else {
            prop_assert!(out.data().iter().all(|v| v.abs() <= 1.0));
        }
    }

    #[test]
    fn generator_loss_identity(
        d in prop::collection::vec(0.0f64..=1.0, 1..8),
        f in prop::collection::vec(-1.0f64..1.0, 16),
        y in prop::collection::vec(-1.0f64..1.0, 16),
        alpha in 0.01f64..100.0,
    ) {
        let n = d.len().min(4);
        let f: Vec<Vec<f64>> = f.chunks(4).take(n).map(|c| c.to_vec()).collect();
        let y: Vec<Vec<f64>> = y.chunks(4).take(n).map(|c| c.to_vec()).collect();
        let l = generator_loss(&d[..n], &f, &y, alpha).unwrap();
        prop_assert!((l.total - (l.adversarial + alpha * l.perceptual)).abs() <= 1e-12);
    }
}
