use proptest::prelude::*;

use texsem::autodiff::{finite_difference_check, GradCheckOptions, Tensor};
use texsem::ldl::{measure, LabelDistribution, MeasureKind};
use texsem::learn::{
    bp_fit, kl_loss, maxent_fit, maxent_fit_traced, pearson_correlation, BpConfig, BpNetModel, KnnModel,
    MaxEntConfig, MaxEntModel, TrainingSet,
};

fn separable_set() -> TrainingSet {
    let mut features = Vec::new();
    let mut targets = Vec::new();
    for i in 0..10 {
        let class = i % 2;
        let mut x = vec![0.0, 0.0];
        x[class] = 1.0;
        features.push(x.clone());
        targets.push(LabelDistribution::new(x).unwrap());
    }
    TrainingSet::new(features, targets).unwrap()
}

fn mean_kl(train: &TrainingSet, predict: impl Fn(&[f64]) -> LabelDistribution) -> f64 {
    let total: f64 = train
        .features()
        .iter()
        .zip(train.targets())
        .map(|(x, d)| measure(MeasureKind::KullbackLeibler, d, &predict(x)).unwrap())
        .sum();
    total / train.len() as f64
}

/// Fixed small-step gradient ascent on the log-likelihood, run for a long horizon.
fn reference_gradient_ascent(train: &TrainingSet, step: f64, iterations: usize) -> MaxEntModel {
    let (c, m) = (train.label_dim(), train.feature_dim());
    let mut theta = vec![0.0; c * m];
    for _ in 0..iterations {
        let mut grad = vec![0.0; c * m];
        for (x, d) in train.features().iter().zip(train.targets()) {
            let logits: Vec<f64> = (0..c).map(|j| (0..m).map(|k| theta[j * m + k] * x[k]).sum()).collect();
            let z: f64 = logits.iter().map(|l| l.exp()).sum();
            for j in 0..c {
                let r = d.values()[j] - logits[j].exp() / z;
                for k in 0..m {
                    grad[j * m + k] += r * x[k];
                }
            }
        }
        theta.iter_mut().zip(&grad).for_each(|(t, g)| *t += step * g);
    }
    MaxEntModel::new(theta, c, m).unwrap()
}

#[test]
fn separable_two_class_set_is_learned() {
    let train = separable_set();
    let oracle = reference_gradient_ascent(&train, 0.01, 20_000);
    let oracle_kl = mean_kl(&train, |x| oracle.predict(x).unwrap());
    for config in [MaxEntConfig::sa_bfgs(), MaxEntConfig::sa_iis()] {
        let model = maxent_fit(&train, &config).unwrap();
        let kl = mean_kl(&train, |x| model.predict(x).unwrap());
        assert!(kl <= 1e-2, "{kl}");
        assert!(kl <= oracle_kl + 1e-9, "{kl} vs reference {oracle_kl}");
    }
}

#[test]
fn objective_trace_is_monotone() {
    let train = TrainingSet::new(
        (0..12).map(|i| vec![(i as f64 * 0.7).sin(), (i as f64 * 1.3).cos(), 1.0]).collect(),
        (0..12)
            .map(|i| {
                let a = 0.5 + 0.4 * (i as f64).sin();
                LabelDistribution::new(vec![a * 0.5, a * 0.5, 1.0 - a]).unwrap()
            })
            .collect(),
    )
    .unwrap();
    for config in [MaxEntConfig::sa_bfgs(), MaxEntConfig::sa_iis()] {
        let (_, report) = maxent_fit_traced(&train, &config).unwrap();
        assert!(report.trace.windows(2).all(|w| w[1] <= w[0]));
    }
}

#[test]
fn bp_gradient_matches_finite_differences() {
    let model = BpNetModel::new(4, 3, 5, 11).unwrap();
    let x = Tensor::from_rows(&[vec![0.3, -0.8, 1.2, 0.1], vec![-0.5, 0.4, 0.0, 0.9]]).unwrap();
    let d = Tensor::from_rows(&[vec![0.2, 0.3, 0.5], vec![0.0, 1.0, 0.0]]).unwrap();
    let report = finite_difference_check(
        &model.net.params,
        |g, p, trainable| {
            let mut net = model.net.clone();
            net.params = p.clone();
            kl_loss(g, &net, &x, &d, trainable)
        },
        &GradCheckOptions::default(),
    )
    .unwrap();
    assert!(report.max_relative_error <= 1e-5, "{report:?}");
    assert_eq!(report.checked, model.net.params.numel());
}

fn arb_set() -> impl Strategy<Value = TrainingSet> {
    (1usize..6, 1usize..4, 2usize..5).prop_flat_map(|(n, m, c)| {
        (
            prop::collection::vec(prop::collection::vec(-3.0f64..3.0, m), n),
            prop::collection::vec(prop::collection::vec(0.0f64..1.0, c), n),
        )
            .prop_map(|(features, raw)| {
                let targets = raw
                    .into_iter()
                    .map(|mut r| {
                        r[0] += 1e-3;
                        let s: f64 = r.iter().sum();
                        LabelDistribution::new(r.iter().map(|v| v / s).collect()).unwrap()
                    })
                    .collect();
                TrainingSet::new(features, targets).unwrap()
            })
    })
}

fn is_distribution(d: &LabelDistribution) -> bool {
    d.values().iter().all(|v| (0.0..=1.0).contains(v)) && (d.values().iter().sum::<f64>() - 1.0).abs() < 1e-9
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn learners_emit_valid_distributions(train in arb_set(), probe in prop::collection::vec(-1e3f64..1e3, 3)) {
        let x = &probe[..train.feature_dim()];
        let maxent = maxent_fit(&train, &MaxEntConfig::sa_bfgs()).unwrap();
        prop_assert!(is_distribution(&maxent.predict(x).unwrap()));
        let knn = KnnModel::fit(&train, 1).unwrap();
        prop_assert!(is_distribution(&knn.predict(x).unwrap()));
        let bp = bp_fit(&train, &BpConfig { steps: 20, hidden: 4, ..BpConfig::default() }).unwrap();
        prop_assert!(is_distribution(&bp.predict(x).unwrap()));
    }

    #[test]
    fn maxent_never_loses_to_zero_theta(train in arb_set()) {
        let fitted = maxent_fit(&train, &MaxEntConfig::sa_bfgs()).unwrap();
        let zero = MaxEntModel::zeros(train.label_dim(), train.feature_dim()).unwrap();
        prop_assert!(fitted.log_likelihood(&train) >= zero.log_likelihood(&train));
    }

    #[test]
    fn knn_with_all_neighbors_is_the_global_mean(train in arb_set(), probe in prop::collection::vec(-5.0f64..5.0, 3)) {
        let knn = KnnModel::fit(&train, train.len()).unwrap();
        let p = knn.predict(&probe[..train.feature_dim()]).unwrap();
        for j in 0..train.label_dim() {
            let mean = train.targets().iter().map(|t| t.values()[j]).sum::<f64>() / train.len() as f64;
            prop_assert!((p.values()[j] - mean).abs() < 1e-12);
        }
    }

    #[test]
    fn pearson_is_affine_invariant(
        a in prop::collection::vec(-10.0f64..10.0, 3..20),
        scale in 0.1f64..10.0,
        shift in -5.0f64..5.0,
    ) {
        let b: Vec<f64> = a.iter().enumerate().map(|(i, v)| v * v + i as f64).collect();
        let base = match pearson_correlation(&a, &b) {
            Ok(r) => r,
            Err(_) => return Ok(()),
        };
        let a2: Vec<f64> = a.iter().map(|v| scale * v + shift).collect();
        let b2: Vec<f64> = b.iter().map(|v| scale * v - shift).collect();
        prop_assert!((pearson_correlation(&a2, &b).unwrap() - base).abs() <= 1e-12);
        prop_assert!((pearson_correlation(&a, &b2).unwrap() - base).abs() <= 1e-12);
    }
}
