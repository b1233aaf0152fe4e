use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::autodiff::graph::{Graph, Var};
use crate::autodiff::params::ParamSet;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckOptions {
    /// Central-difference half step.
    pub step: f64,
    /// Check at most this many randomly chosen entries per tensor (all when `None`).
    pub max_entries_per_tensor: Option<usize>,
    /// Denominator floor of the relative error, so entries whose true gradient is
    /// zero are compared absolutely.
    pub floor: f64,
    pub seed: u64,
}

impl Default for GradCheckOptions {
    fn default() -> Self {
        Self {
            step: 1e-5,
            max_entries_per_tensor: None,
            floor: 1e-6,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_relative_error: f64,
    pub checked: usize,
    /// Entries left out because the difference stencil straddles a kink.
    pub kinks: usize,
    /// Parameter name and flat index of the worst entry.
    pub worst: Option<(String, usize)>,
}

/// Relative error above which an entry is re-probed for a kink.
const KINK_SUSPICION: f64 = 1e-3;

pub fn relative_error(analytic: f64, numeric: f64, floor: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(floor)
}

/// Compares reverse-mode gradients against central differences.
///
/// `build` must append a scalar-valued computation of `params` to the graph it is
/// given, registering the parameters as trainable when the flag is set.
pub fn finite_difference_check<F>(params: &ParamSet<f64>, build: F, opts: &GradCheckOptions) -> Result<GradCheckReport>
where
    F: Fn(&mut Graph<f64>, &ParamSet<f64>, bool) -> Result<Var>,
{
    let eval = |p: &ParamSet<f64>| -> Result<f64> {
        let mut g = Graph::new();
        let out = build(&mut g, p, false)?;
        g.value(out)
            .item()
            .ok_or_else(|| Error::NotScalarOutput(g.value(out).shape().to_vec()))
    };

    let mut g = Graph::new();
    let out = build(&mut g, params, true)?;
    let grads = g.backward(out)?;
    let analytic = g.param_grads(&grads);

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut report = GradCheckReport {
        max_relative_error: 0.0,
        checked: 0,
        kinks: 0,
        worst: None,
    };
    let f0 = eval(params)?;
    let mut probe = params.clone();
    for (name, tensor) in params.iter() {
        let n = tensor.len();
        let indices: Vec<usize> = match opts.max_entries_per_tensor {
            Some(k) if k < n => sample(&mut rng, n, k).into_vec(),
            _ => (0..n).collect(),
        };
        for idx in indices {
            let base = tensor.data()[idx];
            let mut at = |h: f64| -> Result<(f64, f64)> {
                probe.get_mut(name).unwrap().data_mut()[idx] = base + h;
                let plus = eval(&probe)?;
                probe.get_mut(name).unwrap().data_mut()[idx] = base - h;
                let minus = eval(&probe)?;
                probe.get_mut(name).unwrap().data_mut()[idx] = base;
                Ok((plus, minus))
            };
            let (plus, minus) = at(opts.step)?;
            let numeric = (plus - minus) / (2.0 * opts.step);
            let a = analytic.get(name).map_or(0.0, |t| t.data()[idx]);
            let err = relative_error(a, numeric, opts.floor);
            if err > KINK_SUSPICION {
                // Near a kink the central difference moves with the step, or the one-sided
                // slopes keep a fixed gap; on smooth functions that gap is about h * f''
                // and halves with the step.
                let (plus2, minus2) = at(opts.step / 2.0)?;
                let numeric2 = (plus2 - minus2) / opts.step;
                let gap = ((plus - f0) - (f0 - minus)) / opts.step;
                let gap2 = ((plus2 - f0) - (f0 - minus2)) / (opts.step / 2.0);
                let scale = a.abs().max(numeric.abs()).max(opts.floor);
                let shifts = (numeric - numeric2).abs() > 0.5 * (numeric - a).abs();
                let persists = gap.abs() > KINK_SUSPICION * scale && gap2.abs() > 0.75 * gap.abs();
                if shifts || persists {
                    report.kinks += 1;
                    continue;
                }
            }
            report.checked += 1;
            if err > report.max_relative_error || report.worst.is_none() {
                report.max_relative_error = report.max_relative_error.max(err);
                report.worst = Some((name.to_string(), idx));
            }
        }
    }
    Ok(report)
}
