//! Losses of the perceptual regressor, the discriminator and the generator, in a
//! plain-number form for reporting and a graph form for training.

use std::fmt;
use std::str::FromStr;

use crate::autodiff::{Graph, Scalar, Tensor, Var};
use crate::error::{Error, Result};

/// Probabilities are clamped into `[PROB_CLAMP, 1 - PROB_CLAMP]` before logs.
pub const PROB_CLAMP: f64 = 1e-7;
/// Added to squared prediction norms before the square root in the graph cosine.
pub const NORM_EPS: f64 = 1e-12;

/// How the cosine term of the perceptual loss is formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CosineMode {
    /// `+ β (1 - mean_i cos(pred_i, target_i))`.
    #[default]
    PerSample,
    /// `+ β cos(pred, target)` with both batches flattened to one vector.
    Literal,
}

impl fmt::Display for CosineMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CosineMode::PerSample => "per-sample",
            CosineMode::Literal => "cosine-literal",
        })
    }
}

impl FromStr for CosineMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "per-sample" => Ok(CosineMode::PerSample),
            "cosine-literal" | "literal" => Ok(CosineMode::Literal),
            _ => Err(Error::Config(format!("unknown cosine mode {s:?}"))),
        }
    }
}

fn check_batches(op: &'static str, a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<()> {
    if a.is_empty() {
        return Err(Error::EmptyInput);
    }
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    for (x, y) in a.iter().zip(b) {
        if x.len() != y.len() {
            return Err(Error::ShapeMismatch {
                op,
                detail: format!("row widths {} and {}", x.len(), y.len()),
            });
        }
    }
    Ok(())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `(1/2n) Σ ‖pred_i - target_i‖²`.
pub fn quadratic_loss(pred: &[Vec<f64>], target: &[Vec<f64>]) -> Result<f64> {
    check_batches("quadratic_loss", pred, target)?;
    let total: f64 = pred
        .iter()
        .zip(target)
        .map(|(p, t)| p.iter().zip(t).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
        .sum();
    Ok(total / (2.0 * pred.len() as f64))
}

/// Per-sample cosine similarities; a zero prediction has similarity 0.
pub fn cosine_similarities(pred: &[Vec<f64>], target: &[Vec<f64>]) -> Result<Vec<f64>> {
    check_batches("cosine_similarities", pred, target)?;
    pred.iter()
        .zip(target)
        .enumerate()
        .map(|(i, (p, t))| {
            let nt = dot(t, t).sqrt();
            if nt == 0.0 {
                return Err(Error::ZeroNorm(i));
            }
            let np = dot(p, p).sqrt();
            Ok(if np == 0.0 { 0.0 } else { dot(p, t) / (np * nt) })
        })
        .collect()
}

/// Quadratic regression loss plus a cosine-similarity term weighted by `beta`.
pub fn perceptual_loss(pred: &[Vec<f64>], target: &[Vec<f64>], beta: f64, mode: CosineMode) -> Result<f64> {
    let quad = quadratic_loss(pred, target)?;
    let cos = cosine_similarities(pred, target)?;
    let term = match mode {
        CosineMode::PerSample => 1.0 - cos.iter().sum::<f64>() / cos.len() as f64,
        CosineMode::Literal => {
            let pp: f64 = pred.iter().map(|p| dot(p, p)).sum();
            let tt: f64 = target.iter().map(|t| dot(t, t)).sum();
            let pt: f64 = pred.iter().zip(target).map(|(p, t)| dot(p, t)).sum();
            if pp == 0.0 {
                0.0
            } else {
                pt / (pp.sqrt() * tt.sqrt())
            }
        }
    };
    Ok(quad + beta * term)
}

fn clamp_prob(d: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&d) {
        return Err(Error::Domain(d));
    }
    Ok(d.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP))
}

/// Mean binary cross-entropy of discriminator outputs against 0/1 labels.
pub fn discriminator_loss(d_out: &[f64], q: &[f64]) -> Result<f64> {
    if d_out.is_empty() {
        return Err(Error::EmptyInput);
    }
    if d_out.len() != q.len() {
        return Err(Error::LengthMismatch {
            left: d_out.len(),
            right: q.len(),
        });
    }
    let mut total = 0.0;
    for (&d, &q) in d_out.iter().zip(q) {
        if q != 0.0 && q != 1.0 {
            return Err(Error::Domain(q));
        }
        let d = clamp_prob(d)?;
        total += q * d.ln() + (1.0 - q) * (1.0 - d).ln();
    }
    Ok(-total / d_out.len() as f64)
}

/// The generator objective and its two parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneratorLoss {
    pub total: f64,
    pub adversarial: f64,
    pub perceptual: f64,
}

impl GeneratorLoss {
    /// Combines the parts so that `total == adversarial + alpha * perceptual`.
    pub fn from_parts(adversarial: f64, perceptual: f64, alpha: f64) -> Self {
        Self {
            total: adversarial + alpha * perceptual,
            adversarial,
            perceptual,
        }
    }
}

/// `-(1/n) Σ ln D(G(y, z), y)` plus `alpha` times `(1/2n) Σ ‖F(G(y, z)) - y‖²`.
pub fn generator_loss(d_on_fake: &[f64], f_on_fake: &[Vec<f64>], y: &[Vec<f64>], alpha: f64) -> Result<GeneratorLoss> {
    if d_on_fake.len() != f_on_fake.len() {
        return Err(Error::LengthMismatch {
            left: d_on_fake.len(),
            right: f_on_fake.len(),
        });
    }
    let perceptual = quadratic_loss(f_on_fake, y)?;
    let mut total = 0.0;
    for &d in d_on_fake {
        total += clamp_prob(d)?.ln();
    }
    let adversarial = -total / d_on_fake.len() as f64;
    Ok(GeneratorLoss::from_parts(adversarial, perceptual, alpha))
}

/// Graph form of [`quadratic_loss`].
pub fn quadratic_loss_graph<T: Scalar>(g: &mut Graph<T>, pred: Var, target: Var) -> Result<Var> {
    let n = g.value(pred).rows();
    let diff = g.sub(pred, target)?;
    let sq = g.square(diff)?;
    let total = g.sum(sq)?;
    g.scale(total, 0.5 / n as f64)
}

/// Graph form of [`perceptual_loss`]. Target norms are checked up front.
pub fn perceptual_loss_graph<T: Scalar>(
    g: &mut Graph<T>,
    pred: Var,
    target: Var,
    beta: f64,
    mode: CosineMode,
) -> Result<Var> {
    let quad = quadratic_loss_graph(g, pred, target)?;
    if beta == 0.0 {
        return Ok(quad);
    }
    let t = g.value(target).clone();
    let width = t.last_dim();
    for i in 0..t.rows() {
        if t.row(i).iter().all(|v| *v == T::zero()) {
            return Err(Error::ZeroNorm(i));
        }
    }
    let pt = g.mul(pred, target)?;
    let pp = g.square(pred)?;
    let cos_term = match mode {
        CosineMode::PerSample => {
            let n = t.rows();
            let dots = g.sum_last_axis(pt)?;
            let pnorm2 = g.sum_last_axis(pp)?;
            let pnorm2 = g.add_scalar(pnorm2, NORM_EPS)?;
            let pnorm = g.sqrt(pnorm2)?;
            let tnorm = Tensor::from_fn(&[n], |i| {
                let r = &t.data()[i * width..(i + 1) * width];
                r.iter().fold(T::zero(), |acc, &v| acc + v * v).sqrt()
            });
            let tnorm = g.input(tnorm)?;
            let denom = g.mul(pnorm, tnorm)?;
            let cos = g.div(dots, denom)?;
            let mean = g.mean(cos)?;
            let neg = g.scale(mean, -1.0)?;
            g.add_scalar(neg, 1.0)?
        }
        CosineMode::Literal => {
            let dot = g.sum(pt)?;
            let pnorm2 = g.sum(pp)?;
            let pnorm2 = g.add_scalar(pnorm2, NORM_EPS)?;
            let pnorm = g.sqrt(pnorm2)?;
            let tnorm = t.data().iter().fold(T::zero(), |acc, &v| acc + v * v).sqrt();
            let scaled = g.div(dot, pnorm)?;
            g.scale(scaled, 1.0 / tnorm.as_f64())?
        }
    };
    let weighted = g.scale(cos_term, beta)?;
    g.add(quad, weighted)
}

/// Graph form of [`discriminator_loss`] with constant labels `q`.
pub fn bce_loss_graph<T: Scalar>(g: &mut Graph<T>, d_out: Var, q: &Tensor<T>) -> Result<Var> {
    if g.value(d_out).shape() != q.shape() {
        return Err(Error::ShapeMismatch {
            op: "bce_loss",
            detail: format!("{:?} vs {:?}", g.value(d_out).shape(), q.shape()),
        });
    }
    let d = g.clamp(d_out, PROB_CLAMP, 1.0 - PROB_CLAMP)?;
    let ln_d = g.ln(d)?;
    let neg = g.scale(d, -1.0)?;
    let one_minus = g.add_scalar(neg, 1.0)?;
    let ln_1md = g.ln(one_minus)?;
    let qv = g.input(q.clone())?;
    let q1 = g.input(q.map(|v| T::one() - v))?;
    let a = g.mul(qv, ln_d)?;
    let b = g.mul(q1, ln_1md)?;
    let s = g.add(a, b)?;
    let m = g.mean(s)?;
    g.scale(m, -1.0)
}

/// Graph form of the adversarial generator term `-(1/n) Σ ln D`.
pub fn adversarial_loss_graph<T: Scalar>(g: &mut Graph<T>, d_on_fake: Var) -> Result<Var> {
    let d = g.clamp(d_on_fake, PROB_CLAMP, 1.0 - PROB_CLAMP)?;
    let l = g.ln(d)?;
    let m = g.mean(l)?;
    g.scale(m, -1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perceptual_examples() {
        let t = vec![vec![0.3, -0.2, 0.9]];
        assert!(perceptual_loss(&t, &t, 1.0, CosineMode::PerSample).unwrap().abs() < 1e-15);
        let p = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let q = vec![vec![0.0, 1.0], vec![-1.0, 0.0]];
        for beta in [0.0, 1.0, 2.5] {
            let l = perceptual_loss(&p, &q, beta, CosineMode::PerSample).unwrap();
            assert!((l - (1.0 + beta)).abs() < 1e-15);
        }
        assert_eq!(
            perceptual_loss(&p, &q, 0.0, CosineMode::PerSample).unwrap(),
            quadratic_loss(&p, &q).unwrap()
        );
        let z = vec![vec![1.0, 0.0], vec![0.0, 0.0]];
        assert!(matches!(
            perceptual_loss(&p, &z, 1.0, CosineMode::PerSample),
            Err(Error::ZeroNorm(1))
        ));
    }

    #[test]
    fn literal_mode_adds_raw_cosine() {
        let t = vec![vec![0.5, 0.5]];
        assert!((perceptual_loss(&t, &t, 2.0, CosineMode::Literal).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn discriminator_examples() {
        let ln2 = std::f64::consts::LN_2;
        assert!((discriminator_loss(&[0.5; 4], &[1.0, 0.0, 1.0, 1.0]).unwrap() - ln2).abs() < 1e-15);
        assert!(discriminator_loss(&[1.0, 0.0], &[1.0, 0.0]).unwrap() < 1e-6);
        let l = discriminator_loss(&[0.9, 0.1], &[1.0, 0.0]).unwrap();
        assert!((l - (-0.9f64.ln())).abs() < 1e-15);
        assert!((l - 0.1054).abs() < 1e-4);
        assert!(matches!(discriminator_loss(&[1.2], &[1.0]), Err(Error::Domain(_))));
        assert!(matches!(discriminator_loss(&[f64::NAN], &[1.0]), Err(Error::Domain(_))));
    }

    #[test]
    fn generator_examples() {
        let y = vec![vec![0.2, -0.4], vec![1.0, 0.0]];
        let l = generator_loss(&[0.5, 0.5], &y, &y, 10.0).unwrap();
        assert!((l.total - std::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(l.perceptual, 0.0);
        let l = GeneratorLoss::from_parts(0.7, 0.02, 10.0);
        assert!((l.total - 0.9).abs() < 1e-12);
    }

    #[test]
    fn graph_forms_match_numeric() {
        let pred = vec![vec![0.1, -0.3, 0.5], vec![0.7, 0.2, -0.1]];
        let target = vec![vec![0.0, 1.0, 0.5], vec![0.3, 0.0, 0.0]];
        for mode in [CosineMode::PerSample, CosineMode::Literal] {
            let mut g = Graph::<f64>::new();
            let p = g.input(Tensor::from_rows(&pred).unwrap()).unwrap();
            let t = g.input(Tensor::from_rows(&target).unwrap()).unwrap();
            let l = perceptual_loss_graph(&mut g, p, t, 0.7, mode).unwrap();
            let want = perceptual_loss(&pred, &target, 0.7, mode).unwrap();
            assert!((g.value(l).item().unwrap() - want).abs() < 1e-9);
        }
        let mut g = Graph::<f64>::new();
        let d = g.input(Tensor::new(vec![3, 1], vec![0.9, 0.2, 0.6]).unwrap()).unwrap();
        let q = Tensor::new(vec![3, 1], vec![1.0, 0.0, 1.0]).unwrap();
        let l = bce_loss_graph(&mut g, d, &q).unwrap();
        let want = discriminator_loss(&[0.9, 0.2, 0.6], &[1.0, 0.0, 1.0]).unwrap();
        assert!((g.value(l).item().unwrap() - want).abs() < 1e-15);
        let a = adversarial_loss_graph(&mut g, d).unwrap();
        let want = -(0.9f64.ln() + 0.2f64.ln() + 0.6f64.ln()) / 3.0;
        assert!((g.value(a).item().unwrap() - want).abs() < 1e-15);
    }
}
