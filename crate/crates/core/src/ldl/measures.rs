use std::fmt;

use crate::error::{Error, Result};
use crate::ldl::LabelDistribution;

/// Floor applied to predicted degrees before the KL logarithm.
pub const KL_FLOOR: f64 = 1e-10;

/// The six distribution distance/similarity measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MeasureKind {
    Chebyshev,
    Clark,
    Canberra,
    KullbackLeibler,
    Cosine,
    Intersection,
}

impl MeasureKind {
    pub const ALL: [MeasureKind; 6] = [
        MeasureKind::Chebyshev,
        MeasureKind::Clark,
        MeasureKind::Canberra,
        MeasureKind::KullbackLeibler,
        MeasureKind::Cosine,
        MeasureKind::Intersection,
    ];

    /// Distances are smaller-is-better, similarities larger-is-better.
    pub fn is_distance(self) -> bool {
        !matches!(self, MeasureKind::Cosine | MeasureKind::Intersection)
    }

    pub fn name(self) -> &'static str {
        match self {
            MeasureKind::Chebyshev => "Chebyshev",
            MeasureKind::Clark => "Clark",
            MeasureKind::Canberra => "Canberra",
            MeasureKind::KullbackLeibler => "KL",
            MeasureKind::Cosine => "Cosine",
            MeasureKind::Intersection => "Intersection",
        }
    }

    /// True when `a` is a better score than `b` under this measure's polarity.
    pub fn better(self, a: f64, b: f64) -> bool {
        if self.is_distance() {
            a < b
        } else {
            a > b
        }
    }
}

impl fmt::Display for MeasureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// How terms that are undefined without a convention are treated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MeasureMode {
    /// 0/0 terms of Clark/Canberra contribute 0; KL uses a floored, renormalized prediction.
    #[default]
    Lenient,
    /// 0/0 terms and log-of-zero raise [`Error::UndefinedTerm`]; KL is unsmoothed.
    Strict,
}

pub fn measure(kind: MeasureKind, d: &LabelDistribution, d_hat: &LabelDistribution) -> Result<f64> {
    measure_with(kind, d, d_hat, MeasureMode::Lenient)
}

pub fn measure_with(
    kind: MeasureKind,
    d: &LabelDistribution,
    d_hat: &LabelDistribution,
    mode: MeasureMode,
) -> Result<f64> {
    let (d, e) = (d.values(), d_hat.values());
    if d.len() != e.len() {
        return Err(Error::LengthMismatch {
            left: d.len(),
            right: e.len(),
        });
    }
    let pairs = || d.iter().zip(e).map(|(&a, &b)| (a, b));
    let value = match kind {
        MeasureKind::Chebyshev => pairs().map(|(a, b)| (a - b).abs()).fold(0.0, f64::max),
        MeasureKind::Clark => {
            let mut acc = 0.0;
            for (a, b) in pairs() {
                let s = a + b;
                if s == 0.0 {
                    if mode == MeasureMode::Strict {
                        return Err(Error::UndefinedTerm("Clark"));
                    }
                    continue;
                }
                acc += (a - b) * (a - b) / (s * s);
            }
            acc.sqrt()
        }
        MeasureKind::Canberra => {
            let mut acc = 0.0;
            for (a, b) in pairs() {
                let s = a + b;
                if s == 0.0 {
                    if mode == MeasureMode::Strict {
                        return Err(Error::UndefinedTerm("Canberra"));
                    }
                    continue;
                }
                acc += (a - b).abs() / s;
            }
            acc
        }
        MeasureKind::KullbackLeibler => match mode {
            MeasureMode::Lenient => {
                let norm: f64 = e.iter().map(|&b| b.max(KL_FLOOR)).sum();
                pairs()
                    .filter(|&(a, _)| a > 0.0)
                    .map(|(a, b)| a * (a / (b.max(KL_FLOOR) / norm)).ln())
                    .sum::<f64>()
            }
            MeasureMode::Strict => {
                let mut acc = 0.0;
                for (a, b) in pairs().filter(|&(a, _)| a > 0.0) {
                    if b == 0.0 {
                        return Err(Error::UndefinedTerm("KL"));
                    }
                    acc += a * (a / b).ln();
                }
                acc
            }
        },
        MeasureKind::Cosine => {
            let dot: f64 = pairs().map(|(a, b)| a * b).sum();
            let na = d.iter().map(|a| a * a).sum::<f64>().sqrt();
            let nb = e.iter().map(|b| b * b).sum::<f64>().sqrt();
            dot / (na * nb)
        }
        MeasureKind::Intersection => pairs().map(|(a, b)| a.min(b)).sum(),
    };
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dist(v: &[f64]) -> LabelDistribution {
        LabelDistribution::new(v.to_vec()).unwrap()
    }

    #[test]
    fn identical_pair() {
        let d = dist(&[0.5, 0.5]);
        let expect = [0.0, 0.0, 0.0, 0.0, 1.0, 1.0];
        for (kind, e) in MeasureKind::ALL.into_iter().zip(expect) {
            assert!((measure(kind, &d, &d).unwrap() - e).abs() < 1e-15, "{kind}");
        }
    }

    #[test]
    fn hand_derived_pair() {
        // Values from an independent Python transcription of the formulas.
        let d = dist(&[0.7, 0.3]);
        let e = dist(&[0.4, 0.6]);
        let expect = [
            0.3,
            0.430686981925815,
            0.606060606060606,
            0.18378689738681217,
            0.8376105968386142,
            0.7,
        ];
        for (kind, x) in MeasureKind::ALL.into_iter().zip(expect) {
            let got = measure(kind, &d, &e).unwrap();
            assert!((got - x).abs() < 1e-9, "{kind}: {got} vs {x}");
        }
    }

    #[test]
    fn disjoint_support() {
        let d = dist(&[1.0, 0.0]);
        let e = dist(&[0.0, 1.0]);
        for mode in [MeasureMode::Lenient, MeasureMode::Strict] {
            let clark = measure_with(MeasureKind::Clark, &d, &e, mode).unwrap();
            let canberra = measure_with(MeasureKind::Canberra, &d, &e, mode).unwrap();
            assert!((clark - 2f64.sqrt()).abs() < 1e-12);
            assert!((canberra - 2.0).abs() < 1e-12);
        }
        assert!(matches!(
            measure_with(MeasureKind::KullbackLeibler, &d, &e, MeasureMode::Strict),
            Err(Error::UndefinedTerm("KL"))
        ));
        let kl = measure(MeasureKind::KullbackLeibler, &d, &e).unwrap();
        assert!(kl.is_finite() && kl > 20.0);
    }

    #[test]
    fn both_zero_terms() {
        let d = dist(&[0.5, 0.5, 0.0]);
        let e = dist(&[0.25, 0.75, 0.0]);
        let lenient = measure(MeasureKind::Canberra, &d, &e).unwrap();
        assert!((lenient - (0.25 / 0.75 + 0.25 / 1.25)).abs() < 1e-12);
        assert!(matches!(
            measure_with(MeasureKind::Clark, &d, &e, MeasureMode::Strict),
            Err(Error::UndefinedTerm("Clark"))
        ));
        assert!(measure_with(MeasureKind::Chebyshev, &d, &e, MeasureMode::Strict).is_ok());
    }

    #[test]
    fn length_mismatch() {
        let d = dist(&[0.5, 0.5]);
        let e = dist(&[0.2, 0.3, 0.5]);
        assert!(matches!(
            measure(MeasureKind::Cosine, &d, &e),
            Err(Error::LengthMismatch { left: 2, right: 3 })
        ));
    }

    #[test]
    fn kl_is_asymmetric() {
        let d = dist(&[0.9, 0.1]);
        let e = dist(&[0.5, 0.5]);
        let ab = measure(MeasureKind::KullbackLeibler, &d, &e).unwrap();
        let ba = measure(MeasureKind::KullbackLeibler, &e, &d).unwrap();
        assert!((ab - ba).abs() > 1e-3);
    }
}
