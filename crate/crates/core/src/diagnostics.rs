//! Finite-difference checks of every graph op and of each trained network under its loss.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::autodiff::{finite_difference_check, GradCheckOptions, GradCheckReport, Graph, ParamSet, Tensor, Var};
use crate::error::Result;
use crate::gan::{
    adversarial_loss_graph, bce_loss_graph, perceptual_loss_graph, quadratic_loss_graph, Capacity, CosineMode,
    DiscriminatorNet, GeneratorNet, PerceptualNet,
};
use crate::learn::{kl_loss, BpNetModel};

/// Default bound on the maximum relative error.
pub const TOLERANCE: f64 = 1e-5;

/// Seed of the parameter and input draws used by the tests and the CLI default.
pub const DEFAULT_SEED: u64 = 31;

/// Result of checking one op or network.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientCase {
    pub name: &'static str,
    pub report: GradCheckReport,
}

type OpFn = fn(&mut Graph<f64>, Var, Var) -> Result<Var>;

fn uniform(rng: &mut ChaCha8Rng, shape: &[usize], lo: f64, hi: f64) -> Tensor<f64> {
    Tensor::from_fn(shape, |_| rng.random_range(lo..hi))
}

/// Magnitudes in `lo..hi` with random sign, keeping entries away from zero.
fn signed(rng: &mut ChaCha8Rng, shape: &[usize], lo: f64, hi: f64) -> Tensor<f64> {
    Tensor::from_fn(shape, |_| {
        let v: f64 = rng.random_range(lo..hi);
        if rng.random::<bool>() {
            v
        } else {
            -v
        }
    })
}

/// Non-scalar op outputs are reduced against fixed random weights.
fn op_case(a: Tensor<f64>, b: Tensor<f64>, op: OpFn, weights_seed: u64) -> Result<GradCheckReport> {
    let mut params = ParamSet::new();
    params.insert("a", a);
    params.insert("b", b);
    let build = move |g: &mut Graph<f64>, p: &ParamSet<f64>, trainable: bool| {
        let vars = g.params(p, trainable)?;
        let out = op(g, vars[0], vars[1])?;
        if g.value(out).len() == 1 {
            return Ok(out);
        }
        let shape = g.value(out).shape().to_vec();
        let mut wr = ChaCha8Rng::seed_from_u64(weights_seed);
        let w = g.input(uniform(&mut wr, &shape, -1.0, 1.0))?;
        let prod = g.mul(out, w)?;
        g.sum(prod)
    };
    finite_difference_check(&params, build, &GradCheckOptions::default())
}

/// One case per differentiable op, at random points away from kinks and poles.
pub fn op_cases(seed: u64) -> Result<Vec<GradientCase>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = &mut rng;
    let m = [2, 3];
    let one = [1];
    let specs: Vec<(&'static str, Tensor<f64>, Tensor<f64>, OpFn)> = vec![
        ("matmul", uniform(r, &m, -1.0, 1.0), uniform(r, &[3, 4], -1.0, 1.0), |g, a, b| g.matmul(a, b)),
        ("add", uniform(r, &m, -1.0, 1.0), uniform(r, &m, -1.0, 1.0), |g, a, b| g.add(a, b)),
        ("sub", uniform(r, &m, -1.0, 1.0), uniform(r, &m, -1.0, 1.0), |g, a, b| g.sub(a, b)),
        ("mul", uniform(r, &m, -1.0, 1.0), uniform(r, &m, -1.0, 1.0), |g, a, b| g.mul(a, b)),
        ("div", uniform(r, &m, -1.0, 1.0), signed(r, &m, 0.5, 2.0), |g, a, b| g.div(a, b)),
        ("add_bias", uniform(r, &m, -1.0, 1.0), uniform(r, &[3], -1.0, 1.0), |g, a, b| g.add_bias(a, b)),
        ("scale", uniform(r, &m, -1.0, 1.0), uniform(r, &one, -1.0, 1.0), |g, a, _| g.scale(a, -1.7)),
        ("add_scalar", uniform(r, &m, -1.0, 1.0), uniform(r, &one, -1.0, 1.0), |g, a, _| g.add_scalar(a, 0.3)),
        ("tanh", uniform(r, &m, -2.0, 2.0), uniform(r, &one, -1.0, 1.0), |g, a, _| g.tanh(a)),
        ("sigmoid", uniform(r, &m, -3.0, 3.0), uniform(r, &one, -1.0, 1.0), |g, a, _| g.sigmoid(a)),
        ("leaky_relu", signed(r, &m, 0.1, 2.0), uniform(r, &one, -1.0, 1.0), |g, a, _| g.leaky_relu(a)),
        ("ln", uniform(r, &m, 0.2, 3.0), uniform(r, &one, -1.0, 1.0), |g, a, _| g.ln(a)),
        ("sqrt", uniform(r, &m, 0.2, 3.0), uniform(r, &one, -1.0, 1.0), |g, a, _| g.sqrt(a)),
        ("square", uniform(r, &m, -2.0, 2.0), uniform(r, &one, -1.0, 1.0), |g, a, _| g.square(a)),
        (
            "clamp",
            Tensor::new(vec![2, 3], vec![-0.9, -0.2, 0.1, 0.45, 0.8, 1.3])?,
            uniform(r, &one, -1.0, 1.0),
            |g, a, _| g.clamp(a, -0.5, 0.5),
        ),
        ("softmax", uniform(r, &m, -2.0, 2.0), uniform(r, &one, -1.0, 1.0), |g, a, _| g.softmax(a)),
        ("mean", uniform(r, &m, -1.0, 1.0), uniform(r, &one, -1.0, 1.0), |g, a, _| g.mean(a)),
        ("sum", uniform(r, &m, -1.0, 1.0), uniform(r, &one, -1.0, 1.0), |g, a, _| g.sum(a)),
        ("sum_last_axis", uniform(r, &m, -1.0, 1.0), uniform(r, &one, -1.0, 1.0), |g, a, _| g.sum_last_axis(a)),
        ("concat", uniform(r, &m, -1.0, 1.0), uniform(r, &[2, 2], -1.0, 1.0), |g, a, b| g.concat(a, b)),
        ("reshape", uniform(r, &m, -1.0, 1.0), uniform(r, &one, -1.0, 1.0), |g, a, _| g.reshape(a, &[3, 2])),
    ];
    let mut out = Vec::with_capacity(specs.len());
    for (name, a, b, op) in specs {
        let weights_seed: u64 = r.random();
        out.push(GradientCase {
            name,
            report: op_case(a, b, op, weights_seed)?,
        });
    }
    Ok(out)
}

/// Networks sum thousands of terms per output, so rounding noise swamps a 1e-5
/// difference step; 1e-4 keeps both truncation and rounding error small. Central
/// differences then resolve about 1e-10 absolute, so entries below 1e-4 are held
/// to |analytic - numeric| <= 1e-9 instead of a relative bound.
fn sampled() -> GradCheckOptions {
    GradCheckOptions {
        step: 1e-4,
        floor: 1e-4,
        max_entries_per_tensor: Some(24),
        seed: 0,
    }
}

fn semantics_batch(rng: &mut ChaCha8Rng, n: usize) -> Tensor<f64> {
    Tensor::from_fn(&[n, 94], |i| if i % 94 == 0 { 1.0 } else { rng.random_range(-0.5..0.5) })
}

/// Perceptual regressor under its pretraining loss (quadratic plus cosine term).
pub fn perceptual_case(seed: u64) -> Result<GradCheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let net = PerceptualNet::<f64>::new(Capacity::Small, 32, &mut rng)?;
    let x = uniform(&mut rng, &[2, 3072], -1.0, 1.0);
    let y = semantics_batch(&mut rng, 2);
    finite_difference_check(
        &net.mlp.params,
        |g, p, trainable| {
            let mut f = net.clone();
            f.mlp.params = p.clone();
            let xv = g.input(x.clone())?;
            let yv = g.input(y.clone())?;
            let pred = f.forward(g, xv, trainable)?;
            perceptual_loss_graph(g, pred, yv, 1.0, CosineMode::PerSample)
        },
        &sampled(),
    )
}

/// Generator under the joint objective with frozen discriminator and regressor.
pub fn generator_case(seed: u64) -> Result<GradCheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gen = GeneratorNet::<f64>::new(true, 64, 32, &mut rng)?;
    let disc = DiscriminatorNet::<f64>::new(true, 32, &mut rng)?;
    let f = PerceptualNet::<f64>::new(Capacity::Small, 32, &mut rng)?;
    let y = semantics_batch(&mut rng, 2);
    let z = uniform(&mut rng, &[2, 64], -1.5, 1.5);
    finite_difference_check(
        &gen.mlp.params,
        |g, p, trainable| {
            let mut gn = gen.clone();
            gn.mlp.params = p.clone();
            let yv = g.input(y.clone())?;
            let zv = g.input(z.clone())?;
            let fake = gn.forward(g, Some(yv), zv, trainable)?;
            let d = disc.forward(g, fake, Some(yv), false)?;
            let adv = adversarial_loss_graph(g, d)?;
            let pred = f.forward(g, fake, false)?;
            let perc = quadratic_loss_graph(g, pred, yv)?;
            let weighted = g.scale(perc, 10.0)?;
            g.add(adv, weighted)
        },
        &sampled(),
    )
}

/// Discriminator under binary cross-entropy on a stacked real/fake batch.
pub fn discriminator_case(seed: u64) -> Result<GradCheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let disc = DiscriminatorNet::<f64>::new(true, 32, &mut rng)?;
    let x = uniform(&mut rng, &[4, 3072], -1.0, 1.0);
    let y = semantics_batch(&mut rng, 4);
    let q = Tensor::new(vec![4, 1], vec![1.0, 1.0, 0.0, 0.0])?;
    finite_difference_check(
        &disc.mlp.params,
        |g, p, trainable| {
            let mut d = disc.clone();
            d.mlp.params = p.clone();
            let xv = g.input(x.clone())?;
            let yv = g.input(y.clone())?;
            let out = d.forward(g, xv, Some(yv), trainable)?;
            bce_loss_graph(g, out, &q)
        },
        &sampled(),
    )
}

/// Backprop label-distribution network under its KL loss, every entry.
pub fn bp_case(seed: u64) -> Result<GradCheckReport> {
    let model = BpNetModel::new(6, 4, 8, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = uniform(&mut rng, &[3, 6], -1.0, 1.0);
    let d = Tensor::from_rows(&[
        vec![0.1, 0.2, 0.3, 0.4],
        vec![0.0, 0.5, 0.5, 0.0],
        vec![1.0, 0.0, 0.0, 0.0],
    ])?;
    finite_difference_check(
        &model.net.params,
        |g, p, trainable| {
            let mut net = model.net.clone();
            net.params = p.clone();
            kl_loss(g, &net, &x, &d, trainable)
        },
        &GradCheckOptions::default(),
    )
}

pub fn network_cases(seed: u64) -> Result<Vec<GradientCase>> {
    Ok(vec![
        GradientCase {
            name: "perceptual",
            report: perceptual_case(seed)?,
        },
        GradientCase {
            name: "generator",
            report: generator_case(seed.wrapping_add(1))?,
        },
        GradientCase {
            name: "discriminator",
            report: discriminator_case(seed.wrapping_add(2))?,
        },
        GradientCase {
            name: "bp_net",
            report: bp_case(seed.wrapping_add(3))?,
        },
    ])
}

/// Every op case followed by every network case.
pub fn gradient_suite(seed: u64) -> Result<Vec<GradientCase>> {
    let mut cases = op_cases(seed)?;
    cases.extend(network_cases(seed)?);
    Ok(cases)
}
