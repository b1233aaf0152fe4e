use rand::Rng;

use crate::autodiff::graph::{Graph, Var};
use crate::autodiff::params::ParamSet;
use crate::autodiff::tensor::{Scalar, Tensor};
use crate::error::{Error, Result};

/// Gain applied to the output layer's initial weights so fresh networks start near
/// the center of their output activation.
pub const OUTPUT_INIT_GAIN: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Identity,
    Tanh,
    Sigmoid,
    LeakyRelu,
    Softmax,
}

impl Activation {
    pub fn apply<T: Scalar>(self, g: &mut Graph<T>, x: Var) -> Result<Var> {
        match self {
            Activation::Identity => Ok(x),
            Activation::Tanh => g.tanh(x),
            Activation::Sigmoid => g.sigmoid(x),
            Activation::LeakyRelu => g.leaky_relu(x),
            Activation::Softmax => g.softmax(x),
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            Activation::Identity => "identity",
            Activation::Tanh => "tanh",
            Activation::Sigmoid => "sigmoid",
            Activation::LeakyRelu => "leaky_relu",
            Activation::Softmax => "softmax",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        [
            Activation::Identity,
            Activation::Tanh,
            Activation::Sigmoid,
            Activation::LeakyRelu,
            Activation::Softmax,
        ]
        .into_iter()
        .find(|a| a.tag() == tag)
    }
}

/// Fully connected network with parameters `l{i}.weight` (`in x out`) and `l{i}.bias`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp<T> {
    sizes: Vec<usize>,
    hidden: Activation,
    output: Activation,
    pub params: ParamSet<T>,
}

impl<T: Scalar> Mlp<T> {
    /// Glorot-uniform weights, zero biases.
    pub fn new<R: Rng + ?Sized>(sizes: &[usize], hidden: Activation, output: Activation, rng: &mut R) -> Result<Self> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(Error::Config(format!("invalid layer sizes {sizes:?}")));
        }
        let mut params = ParamSet::new();
        let layers = sizes.len() - 1;
        for (i, w) in sizes.windows(2).enumerate() {
            let (fan_in, fan_out) = (w[0], w[1]);
            let gain = if i + 1 == layers { OUTPUT_INIT_GAIN } else { 1.0 };
            let limit = gain * (6.0 / (fan_in + fan_out) as f64).sqrt();
            let weight = Tensor::from_fn(&[fan_in, fan_out], |_| T::from_real(rng.random_range(-limit..limit)));
            params.insert(&format!("l{i}.weight"), weight);
            params.insert(&format!("l{i}.bias"), Tensor::zeros(&[fan_out]));
        }
        Ok(Self {
            sizes: sizes.to_vec(),
            hidden,
            output,
            params,
        })
    }

    /// Rebuilds a network from stored parameters, checking every expected shape.
    pub fn from_params(sizes: &[usize], hidden: Activation, output: Activation, params: ParamSet<T>) -> Result<Self> {
        if sizes.len() < 2 {
            return Err(Error::Config(format!("invalid layer sizes {sizes:?}")));
        }
        let mut ordered = ParamSet::new();
        for (i, w) in sizes.windows(2).enumerate() {
            for (name, shape) in [
                (format!("l{i}.weight"), vec![w[0], w[1]]),
                (format!("l{i}.bias"), vec![w[1]]),
            ] {
                let t = params
                    .get(&name)
                    .ok_or_else(|| Error::Config(format!("missing parameter {name}")))?;
                if t.shape() != shape.as_slice() {
                    return Err(Error::ShapeMismatch {
                        op: "mlp",
                        detail: format!("{name}: {:?} vs {shape:?}", t.shape()),
                    });
                }
                ordered.insert(&name, t.clone());
            }
        }
        Ok(Self {
            sizes: sizes.to_vec(),
            hidden,
            output,
            params: ordered,
        })
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    pub fn hidden_activation(&self) -> Activation {
        self.hidden
    }

    pub fn output_activation(&self) -> Activation {
        self.output
    }

    /// Appends the network to `g`. With `trainable == false` the parameters enter as
    /// constants, so gradients still flow to `x` but not into the weights.
    pub fn forward(&self, g: &mut Graph<T>, x: Var, trainable: bool) -> Result<Var> {
        let width = g.value(x).last_dim();
        if width != self.input_dim() || g.value(x).shape().len() != 2 {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                got: width,
            });
        }
        let vars = g.params(&self.params, trainable)?;
        let layers = self.sizes.len() - 1;
        let mut h = x;
        for i in 0..layers {
            h = g.matmul(h, vars[2 * i])?;
            h = g.add_bias(h, vars[2 * i + 1])?;
            let act = if i + 1 == layers { self.output } else { self.hidden };
            h = act.apply(g, h)?;
        }
        Ok(h)
    }

    /// Forward pass without recording gradients.
    pub fn predict(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        let mut g = Graph::new();
        let xv = g.input(x.clone())?;
        let y = self.forward(&mut g, xv, false)?;
        Ok(g.value(y).clone())
    }

    pub fn cast<U: Scalar>(&self) -> Mlp<U> {
        Mlp {
            sizes: self.sizes.clone(),
            hidden: self.hidden,
            output: self.output,
            params: self.params.cast(),
        }
    }
}
