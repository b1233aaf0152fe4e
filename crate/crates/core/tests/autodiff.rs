use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use texsem::autodiff::{adam_step, Activation, AdamState, Mlp};
use texsem::{AdamConfig, Graph, ParamSet, Tensor};

fn pair(a: f64, b: f64) -> ParamSet<f64> {
    let mut p = ParamSet::new();
    p.insert("w", Tensor::new(vec![2], vec![a, b]).unwrap());
    p
}

#[test]
fn adam_matches_reference_trajectory() {
    // Reference values from an independent scalar transcription of the update rule.
    let expect = [
        [0.400000001, -0.9000000005],
        [0.37336629737090316, -0.8427465433289555],
        [0.30631624121656786, -0.7984894550672699],
    ];
    let grads = [[1.0, -2.0], [-0.5, 0.25], [3.0, 0.0]];
    let mut p = pair(0.5, -1.0);
    let mut state = AdamState::new(AdamConfig::default().with_learning_rate(0.1), &p);
    for (g, e) in grads.iter().zip(expect) {
        adam_step(&mut p, &pair(g[0], g[1]), &mut state).unwrap();
        let w = p.get("w").unwrap().data();
        assert!((w[0] - e[0]).abs() < 1e-14 && (w[1] - e[1]).abs() < 1e-14, "{w:?} vs {e:?}");
    }
    assert_eq!(state.step, 3);
}

#[test]
fn adam_rejects_mismatched_gradients() {
    let mut p = pair(0.0, 0.0);
    let mut state = AdamState::new(AdamConfig::default(), &p);
    let mut wrong = ParamSet::new();
    wrong.insert("w", Tensor::scalar(1.0));
    assert!(adam_step(&mut p, &wrong, &mut state).is_err());
    assert_eq!(state.step, 0);
}

fn arb_matrix() -> impl Strategy<Value = (usize, usize, Vec<f64>)> {
    (1usize..6, 1usize..9).prop_flat_map(|(r, c)| (Just(r), Just(c), prop::collection::vec(-50.0f64..50.0, r * c)))
}

proptest! {
    #[test]
    fn softmax_rows_sum_to_one((rows, cols, data) in arb_matrix()) {
        let mut g = Graph::<f64>::new();
        let x = g.input(Tensor::new(vec![rows, cols], data).unwrap()).unwrap();
        let s = g.softmax(x).unwrap();
        let out = g.value(s);
        for r in 0..rows {
            let row = out.row(r);
            prop_assert!(row.iter().all(|&v| (0.0..=1.0).contains(&v)));
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        }
    }

    #[test]
    fn forward_is_referentially_transparent(seed in any::<u64>(), (rows, data) in (1usize..5).prop_flat_map(|r| (Just(r), prop::collection::vec(-3.0f64..3.0, r * 4)))) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let net = Mlp::<f64>::new(&[4, 7, 3], Activation::LeakyRelu, Activation::Tanh, &mut rng).unwrap();
        let x = Tensor::new(vec![rows, 4], data).unwrap();
        let run = || {
            let mut g = Graph::new();
            let xi = g.input(x.clone()).unwrap();
            let y = net.forward(&mut g, xi, true).unwrap();
            g.value(y).clone()
        };
        let a = run();
        let b = run();
        prop_assert_eq!(a.shape(), &[rows, 3]);
        prop_assert!(a.data().iter().zip(b.data()).all(|(p, q)| p.to_bits() == q.to_bits()));
        let c = net.predict(&x).unwrap();
        prop_assert!(a.data().iter().zip(c.data()).all(|(p, q)| p.to_bits() == q.to_bits()));
    }
}
