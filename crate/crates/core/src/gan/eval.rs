use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::autodiff::Tensor;
use crate::error::{Error, Result};
use crate::gan::losses::cosine_similarities;
use crate::gan::nets::{GeneratorNet, PerceptualNet};
use crate::synth::semantics::{BRIGHT, COLORFUL, REPETITIVE};
use crate::synth::{SemanticVector, TextureImage};

/// Attribute sweeps included in every report: `(word, semantic index, values)`.
pub const RESPONSE_SWEEPS: [(&str, usize, [f64; 2]); 3] = [
    ("bright", BRIGHT, [-0.2, 0.2]),
    ("colorful", COLORFUL, [0.4, 1.0]),
    ("repetitive", REPETITIVE, [0.4, 1.0]),
];

/// Standard normal noise vector determined by `seed`.
pub fn noise_from_seed(seed: u64, dim: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..dim).map(|_| rng.sample(rand_distr::StandardNormal)).collect()
}

/// One attribute swept over a few values with everything else held fixed.
///
/// Each entry averages over all base semantics and noise seeds of the report.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseCurve {
    pub attribute: String,
    pub index: usize,
    pub values: Vec<f64>,
    /// Mean regressor output at `index`.
    pub perceived: Vec<f64>,
    pub mean_luminance: Vec<f64>,
    pub mean_chroma: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedReport {
    /// Number of (semantics, noise) pairs evaluated.
    pub samples: usize,
    /// Mean of `½‖F(G(y, z)) - y‖²`.
    pub mean_quadratic: f64,
    /// Mean cosine similarity between `F(G(y, z))` and `y`.
    pub mean_cosine: f64,
    /// `mean_quadratic` of a constant mid-gray image in place of every generated one.
    pub constant_floor: f64,
    pub curves: Vec<ResponseCurve>,
}

struct Scored {
    quadratic: Vec<f64>,
    cosine: Vec<f64>,
    predictions: Tensor<f32>,
    images: Tensor<f32>,
}

fn rows_tensor(rows: &[&[f64]]) -> Result<Tensor<f32>> {
    Tensor::from_rows(rows)
}

fn score(perceptual: &PerceptualNet<f32>, images: Tensor<f32>, targets: &[Vec<f64>]) -> Result<Scored> {
    let predictions = perceptual.predict(&images)?;
    let pred: Vec<Vec<f64>> = (0..predictions.rows())
        .map(|i| predictions.row(i).iter().map(|&v| v as f64).collect())
        .collect();
    let quadratic = pred
        .iter()
        .zip(targets)
        .map(|(p, t)| 0.5 * p.iter().zip(t).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
        .collect();
    let cosine = cosine_similarities(&pred, targets)?;
    Ok(Scored {
        quadratic,
        cosine,
        predictions,
        images,
    })
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Generates one image per (semantics, seed) pair, row order semantics-major.
fn generate_grid(gen: &GeneratorNet<f32>, semantics: &[Vec<f64>], noise_seeds: &[u64]) -> Result<Tensor<f32>> {
    let mut ys: Vec<&[f64]> = Vec::new();
    let noises: Vec<Vec<f64>> = noise_seeds.iter().map(|&s| noise_from_seed(s, gen.noise_dim)).collect();
    let mut zs: Vec<&[f64]> = Vec::new();
    for y in semantics {
        for z in &noises {
            ys.push(y);
            zs.push(z);
        }
    }
    let y = rows_tensor(&ys)?;
    let z = rows_tensor(&zs)?;
    gen.generate_batch(Some(&y), &z)
}

fn image_of(gen: &GeneratorNet<f32>, row: &[f32]) -> Result<TextureImage> {
    TextureImage::from_flat(gen.image_size, gen.image_size, row)
}

/// Perceptual agreement of generated images with their conditioning semantics.
///
/// Unconditional generators ignore the semantics but are scored against them
/// all the same, which makes reports of both kinds comparable.
pub fn evaluate_generated(
    gen: &GeneratorNet<f32>,
    perceptual: &PerceptualNet<f32>,
    semantics: &[SemanticVector],
    noise_seeds: &[u64],
) -> Result<GeneratedReport> {
    if semantics.is_empty() || noise_seeds.is_empty() {
        return Err(Error::EmptyInput);
    }
    if gen.image_size != perceptual.image_size {
        return Err(Error::DimensionMismatch {
            expected: perceptual.image_size,
            got: gen.image_size,
        });
    }
    let base: Vec<Vec<f64>> = semantics.iter().map(|s| s.values().to_vec()).collect();
    let repeat = |rows: &[Vec<f64>]| -> Vec<Vec<f64>> {
        rows.iter()
            .flat_map(|r| std::iter::repeat_n(r.clone(), noise_seeds.len()))
            .collect()
    };

    let main = score(perceptual, generate_grid(gen, &base, noise_seeds)?, &repeat(&base))?;
    let gray = Tensor::zeros(&[base.len(), main.images.last_dim()]);
    let floor = score(perceptual, gray, &base)?;

    let mut curves = Vec::new();
    for (word, index, values) in RESPONSE_SWEEPS {
        let mut curve = ResponseCurve {
            attribute: word.to_string(),
            index,
            values: values.to_vec(),
            perceived: Vec::new(),
            mean_luminance: Vec::new(),
            mean_chroma: Vec::new(),
        };
        for v in values {
            let swept: Vec<Vec<f64>> = base
                .iter()
                .map(|r| {
                    let mut r = r.clone();
                    r[index] = v;
                    r
                })
                .collect();
            let s = score(perceptual, generate_grid(gen, &swept, noise_seeds)?, &repeat(&swept))?;
            let n = s.predictions.rows();
            curve
                .perceived
                .push((0..n).map(|i| s.predictions.row(i)[index] as f64).sum::<f64>() / n as f64);
            let mut lum = 0.0;
            let mut chroma = 0.0;
            for i in 0..n {
                let im = image_of(gen, s.images.row(i))?;
                lum += im.mean_luminance();
                chroma += im.mean_chroma();
            }
            curve.mean_luminance.push(lum / n as f64);
            curve.mean_chroma.push(chroma / n as f64);
        }
        curves.push(curve);
    }

    Ok(GeneratedReport {
        samples: main.quadratic.len(),
        mean_quadratic: mean(&main.quadratic),
        mean_cosine: mean(&main.cosine),
        constant_floor: mean(&floor.quadratic),
        curves,
    })
}

/// Fraction of noise seeds for which `bright = high` renders with higher mean
/// luminance than `bright = low`. Seed `i` is paired with `bases[i % bases.len()]`.
pub fn brightness_order_rate(
    gen: &GeneratorNet<f32>,
    bases: &[SemanticVector],
    noise_seeds: &[u64],
    low: f64,
    high: f64,
) -> Result<f64> {
    if bases.is_empty() || noise_seeds.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut wins = 0usize;
    for (i, &seed) in noise_seeds.iter().enumerate() {
        let z = noise_from_seed(seed, gen.noise_dim);
        let base = &bases[i % bases.len()];
        let lo = gen.generate(&base.clone().with(BRIGHT, low)?, &z)?;
        let hi = gen.generate(&base.clone().with(BRIGHT, high)?, &z)?;
        if hi.mean_luminance() > lo.mean_luminance() {
            wins += 1;
        }
    }
    Ok(wins as f64 / noise_seeds.len() as f64)
}
