//! Define-by-run reverse-mode differentiation over dense tensors.
//!
//! Every operation appends a node whose inputs are earlier nodes, so the node list
//! is always a valid topological order. [`Graph::backward`] walks it in reverse.

use crate::autodiff::params::ParamSet;
use crate::autodiff::tensor::{matmul_into, Scalar, Tensor};
use crate::error::{Error, Result};

/// Slope of the leaky rectifier for negative inputs.
pub const LEAKY_SLOPE: f64 = 0.2;

/// Handle to a node in a [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

#[derive(Debug, Clone)]
enum Op {
    Input,
    Param(String),
    MatMul(usize, usize),
    Add(usize, usize),
    AddBias(usize, usize),
    Sub(usize, usize),
    Mul(usize, usize),
    Div(usize, usize),
    Scale(usize, f64),
    AddScalar(usize),
    Tanh(usize),
    Sigmoid(usize),
    LeakyRelu(usize),
    Softmax(usize),
    Ln(usize),
    Sqrt(usize),
    Square(usize),
    Clamp(usize, f64, f64),
    Mean(usize),
    Sum(usize),
    SumLastAxis(usize),
    Concat(usize, usize),
    Reshape(usize),
}

#[derive(Debug, Clone)]
struct Node<T> {
    op: Op,
    value: Tensor<T>,
    requires_grad: bool,
}

#[derive(Debug, Clone, Default)]
pub struct Graph<T> {
    nodes: Vec<Node<T>>,
}

/// Gradients of a scalar output with respect to every node that required them.
#[derive(Debug, Clone)]
pub struct Gradients<T> {
    grads: Vec<Option<Tensor<T>>>,
}

impl<T: Scalar> Gradients<T> {
    pub fn get(&self, v: Var) -> Option<&Tensor<T>> {
        self.grads.get(v.0).and_then(|g| g.as_ref())
    }
}

fn same_shape<T: Scalar>(op: &'static str, a: &Tensor<T>, b: &Tensor<T>) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::ShapeMismatch {
            op,
            detail: format!("{:?} vs {:?}", a.shape(), b.shape()),
        });
    }
    Ok(())
}

fn zip_map<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>, f: impl Fn(T, T) -> T) -> Tensor<T> {
    let data = a.data().iter().zip(b.data()).map(|(&x, &y)| f(x, y)).collect();
    Tensor::new(a.shape().to_vec(), data).expect("shapes checked")
}

fn add_into<T: Scalar>(slot: &mut Option<Tensor<T>>, g: Tensor<T>) {
    match slot {
        Some(acc) => {
            for (a, b) in acc.data_mut().iter_mut().zip(g.data()) {
                *a = *a + *b;
            }
        }
        None => *slot = Some(g),
    }
}

impl<T: Scalar> Graph<T> {
    pub fn new() -> Self {
        Self { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Tensor<T> {
        &self.nodes[v.0].value
    }

    fn push(&mut self, op: Op, value: Tensor<T>, requires_grad: bool, name: &'static str) -> Result<Var> {
        let leaf = matches!(op, Op::Input | Op::Param(_));
        if !leaf && !value.all_finite() {
            return Err(Error::NonFinite(name));
        }
        self.nodes.push(Node {
            op,
            value,
            requires_grad,
        });
        Ok(Var(self.nodes.len() - 1))
    }

    fn rg(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    /// A constant leaf; no gradient flows into it.
    pub fn input(&mut self, value: Tensor<T>) -> Result<Var> {
        self.push(Op::Input, value, false, "input")
    }

    /// A named trainable leaf.
    pub fn param(&mut self, name: &str, value: Tensor<T>) -> Result<Var> {
        self.push(Op::Param(name.to_string()), value, true, "param")
    }

    /// Registers every tensor of `set` as a trainable leaf (or constant when `trainable` is false).
    pub fn params(&mut self, set: &ParamSet<T>, trainable: bool) -> Result<Vec<Var>> {
        set.iter()
            .map(|(name, t)| {
                if trainable {
                    self.param(name, t.clone())
                } else {
                    self.input(t.clone())
                }
            })
            .collect()
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ta, tb) = (self.value(a), self.value(b));
        let (sa, sb) = (ta.shape(), tb.shape());
        if sa.len() != 2 || sb.len() != 2 || sa[1] != sb[0] {
            return Err(Error::ShapeMismatch {
                op: "matmul",
                detail: format!("{sa:?} x {sb:?}"),
            });
        }
        let (m, k, n) = (sa[0], sa[1], sb[1]);
        let mut out = Tensor::zeros(&[m, n]);
        matmul_into(ta.data(), false, tb.data(), false, m, k, n, out.data_mut(), false);
        let rg = self.rg(a) || self.rg(b);
        self.push(Op::MatMul(a.0, b.0), out, rg, "matmul")
    }

    fn binary(&mut self, a: Var, b: Var, name: &'static str, op: Op, f: impl Fn(T, T) -> T) -> Result<Var> {
        same_shape(name, self.value(a), self.value(b))?;
        let out = zip_map(self.value(a), self.value(b), f);
        let rg = self.rg(a) || self.rg(b);
        self.push(op, out, rg, name)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(a, b, "add", Op::Add(a.0, b.0), |x, y| x + y)
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(a, b, "sub", Op::Sub(a.0, b.0), |x, y| x - y)
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(a, b, "mul", Op::Mul(a.0, b.0), |x, y| x * y)
    }

    pub fn div(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(a, b, "div", Op::Div(a.0, b.0), |x, y| x / y)
    }

    /// Adds a vector of length `last_dim(a)` to every row of `a`.
    pub fn add_bias(&mut self, a: Var, bias: Var) -> Result<Var> {
        let (ta, tb) = (self.value(a), self.value(bias));
        let w = ta.last_dim();
        if tb.len() != w || ta.shape().is_empty() {
            return Err(Error::ShapeMismatch {
                op: "add_bias",
                detail: format!("{:?} + {:?}", ta.shape(), tb.shape()),
            });
        }
        let mut out = ta.clone();
        for row in out.data_mut().chunks_mut(w) {
            for (x, &b) in row.iter_mut().zip(tb.data()) {
                *x = *x + b;
            }
        }
        let rg = self.rg(a) || self.rg(bias);
        self.push(Op::AddBias(a.0, bias.0), out, rg, "add_bias")
    }

    fn unary(&mut self, a: Var, name: &'static str, op: Op, f: impl Fn(T) -> T) -> Result<Var> {
        let out = self.value(a).map(f);
        let rg = self.rg(a);
        self.push(op, out, rg, name)
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Result<Var> {
        let k = T::from_real(c);
        self.unary(a, "scale", Op::Scale(a.0, c), |x| x * k)
    }

    pub fn add_scalar(&mut self, a: Var, c: f64) -> Result<Var> {
        let k = T::from_real(c);
        self.unary(a, "add_scalar", Op::AddScalar(a.0), |x| x + k)
    }

    pub fn tanh(&mut self, a: Var) -> Result<Var> {
        self.unary(a, "tanh", Op::Tanh(a.0), |x| x.tanh())
    }

    pub fn sigmoid(&mut self, a: Var) -> Result<Var> {
        self.unary(a, "sigmoid", Op::Sigmoid(a.0), |x| T::one() / (T::one() + (-x).exp()))
    }

    pub fn leaky_relu(&mut self, a: Var) -> Result<Var> {
        let s = T::from_real(LEAKY_SLOPE);
        self.unary(a, "leaky_relu", Op::LeakyRelu(a.0), |x| if x > T::zero() { x } else { x * s })
    }

    pub fn ln(&mut self, a: Var) -> Result<Var> {
        self.unary(a, "ln", Op::Ln(a.0), |x| x.ln())
    }

    pub fn sqrt(&mut self, a: Var) -> Result<Var> {
        self.unary(a, "sqrt", Op::Sqrt(a.0), |x| x.sqrt())
    }

    pub fn square(&mut self, a: Var) -> Result<Var> {
        self.unary(a, "square", Op::Square(a.0), |x| x * x)
    }

    /// Clamps into `[lo, hi]`; the gradient is zero wherever the clamp is active.
    pub fn clamp(&mut self, a: Var, lo: f64, hi: f64) -> Result<Var> {
        let (l, h) = (T::from_real(lo), T::from_real(hi));
        self.unary(a, "clamp", Op::Clamp(a.0, lo, hi), |x| x.max(l).min(h))
    }

    /// Softmax over the last axis.
    pub fn softmax(&mut self, a: Var) -> Result<Var> {
        let ta = self.value(a);
        let w = ta.last_dim();
        let mut out = ta.clone();
        for row in out.data_mut().chunks_mut(w) {
            let max = row.iter().fold(T::neg_infinity(), |m, &x| m.max(x));
            let mut sum = T::zero();
            for x in row.iter_mut() {
                *x = (*x - max).exp();
                sum = sum + *x;
            }
            for x in row.iter_mut() {
                *x = *x / sum;
            }
        }
        let rg = self.rg(a);
        self.push(Op::Softmax(a.0), out, rg, "softmax")
    }

    /// Mean of all entries, as a scalar.
    pub fn mean(&mut self, a: Var) -> Result<Var> {
        let ta = self.value(a);
        let s = ta.data().iter().fold(T::zero(), |acc, &x| acc + x) / T::from_real(ta.len() as f64);
        let rg = self.rg(a);
        self.push(Op::Mean(a.0), Tensor::scalar(s), rg, "mean")
    }

    /// Sum of all entries, as a scalar.
    pub fn sum(&mut self, a: Var) -> Result<Var> {
        let s = self.value(a).data().iter().fold(T::zero(), |acc, &x| acc + x);
        let rg = self.rg(a);
        self.push(Op::Sum(a.0), Tensor::scalar(s), rg, "sum")
    }

    /// Sums over the last axis, dropping it.
    pub fn sum_last_axis(&mut self, a: Var) -> Result<Var> {
        let ta = self.value(a);
        if ta.shape().is_empty() {
            return Err(Error::ShapeMismatch {
                op: "sum_last_axis",
                detail: "scalar input".into(),
            });
        }
        let w = ta.last_dim();
        let data = ta
            .data()
            .chunks(w)
            .map(|r| r.iter().fold(T::zero(), |acc, &x| acc + x))
            .collect();
        let shape = ta.shape()[..ta.shape().len() - 1].to_vec();
        let out = Tensor::new(shape, data)?;
        let rg = self.rg(a);
        self.push(Op::SumLastAxis(a.0), out, rg, "sum_last_axis")
    }

    /// Concatenates along the last axis; leading axes must agree.
    pub fn concat(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ta, tb) = (self.value(a), self.value(b));
        let (sa, sb) = (ta.shape(), tb.shape());
        if sa.is_empty() || sa.len() != sb.len() || sa[..sa.len() - 1] != sb[..sb.len() - 1] {
            return Err(Error::ShapeMismatch {
                op: "concat",
                detail: format!("{sa:?} ++ {sb:?}"),
            });
        }
        let (wa, wb) = (ta.last_dim(), tb.last_dim());
        let mut data = Vec::with_capacity(ta.len() + tb.len());
        for (ra, rb) in ta.data().chunks(wa.max(1)).zip(tb.data().chunks(wb.max(1))) {
            data.extend_from_slice(ra);
            data.extend_from_slice(rb);
        }
        let mut shape = sa.to_vec();
        *shape.last_mut().unwrap() = wa + wb;
        let out = Tensor::new(shape, data)?;
        let rg = self.rg(a) || self.rg(b);
        self.push(Op::Concat(a.0, b.0), out, rg, "concat")
    }

    pub fn reshape(&mut self, a: Var, shape: &[usize]) -> Result<Var> {
        let out = self.value(a).clone().reshaped(shape.to_vec())?;
        let rg = self.rg(a);
        self.push(Op::Reshape(a.0), out, rg, "reshape")
    }

    /// Reverse-mode gradients of the scalar `output`.
    pub fn backward(&self, output: Var) -> Result<Gradients<T>> {
        let out = self.value(output);
        if out.len() != 1 {
            return Err(Error::NotScalarOutput(out.shape().to_vec()));
        }
        let mut grads: Vec<Option<Tensor<T>>> = vec![None; self.nodes.len()];
        grads[output.0] = Some(Tensor::full(out.shape(), T::one()));

        for i in (0..=output.0).rev() {
            let node = &self.nodes[i];
            if !node.requires_grad {
                continue;
            }
            let Some(g) = grads[i].take() else { continue };
            if !g.all_finite() {
                return Err(Error::NonFinite("backward"));
            }
            self.propagate(i, &g, &mut grads);
            grads[i] = Some(g);
        }
        Ok(Gradients { grads })
    }

    fn propagate(&self, i: usize, g: &Tensor<T>, grads: &mut [Option<Tensor<T>>]) {
        let node = &self.nodes[i];
        let y = &node.value;
        let val = |j: usize| &self.nodes[j].value;
        let needs = |j: usize| self.nodes[j].requires_grad;
        match node.op {
            Op::Input | Op::Param(_) => {}
            Op::MatMul(a, b) => {
                let (ta, tb) = (val(a), val(b));
                let (m, k, n) = (ta.shape()[0], ta.shape()[1], tb.shape()[1]);
                if needs(a) {
                    let mut ga = Tensor::zeros(&[m, k]);
                    matmul_into(g.data(), false, tb.data(), true, m, n, k, ga.data_mut(), false);
                    add_into(&mut grads[a], ga);
                }
                if needs(b) {
                    let mut gb = Tensor::zeros(&[k, n]);
                    matmul_into(ta.data(), true, g.data(), false, k, m, n, gb.data_mut(), false);
                    add_into(&mut grads[b], gb);
                }
            }
            Op::Add(a, b) => {
                if needs(a) {
                    add_into(&mut grads[a], g.clone());
                }
                if needs(b) {
                    add_into(&mut grads[b], g.clone());
                }
            }
            Op::Sub(a, b) => {
                if needs(a) {
                    add_into(&mut grads[a], g.clone());
                }
                if needs(b) {
                    add_into(&mut grads[b], g.map(|x| -x));
                }
            }
            Op::Mul(a, b) => {
                if needs(a) {
                    add_into(&mut grads[a], zip_map(g, val(b), |gi, bi| gi * bi));
                }
                if needs(b) {
                    add_into(&mut grads[b], zip_map(g, val(a), |gi, ai| gi * ai));
                }
            }
            Op::Div(a, b) => {
                if needs(a) {
                    add_into(&mut grads[a], zip_map(g, val(b), |gi, bi| gi / bi));
                }
                if needs(b) {
                    // d(a/b)/db = -y/b
                    let t = zip_map(g, y, |gi, yi| gi * yi);
                    add_into(&mut grads[b], zip_map(&t, val(b), |ti, bi| -ti / bi));
                }
            }
            Op::AddBias(a, bias) => {
                if needs(a) {
                    add_into(&mut grads[a], g.clone());
                }
                if needs(bias) {
                    let tb = val(bias);
                    let w = tb.len();
                    let mut gb = Tensor::zeros(tb.shape());
                    for row in g.data().chunks(w) {
                        for (acc, &x) in gb.data_mut().iter_mut().zip(row) {
                            *acc = *acc + x;
                        }
                    }
                    add_into(&mut grads[bias], gb);
                }
            }
            Op::Scale(a, c) => {
                let k = T::from_real(c);
                add_into(&mut grads[a], g.map(|x| x * k));
            }
            Op::AddScalar(a) | Op::Reshape(a) => {
                let ga = Tensor::new(val(a).shape().to_vec(), g.data().to_vec()).expect("same size");
                add_into(&mut grads[a], ga);
            }
            Op::Tanh(a) => add_into(&mut grads[a], zip_map(g, y, |gi, yi| gi * (T::one() - yi * yi))),
            Op::Sigmoid(a) => add_into(&mut grads[a], zip_map(g, y, |gi, yi| gi * yi * (T::one() - yi))),
            Op::LeakyRelu(a) => {
                let s = T::from_real(LEAKY_SLOPE);
                add_into(
                    &mut grads[a],
                    zip_map(g, val(a), |gi, xi| if xi > T::zero() { gi } else { gi * s }),
                );
            }
            Op::Ln(a) => add_into(&mut grads[a], zip_map(g, val(a), |gi, xi| gi / xi)),
            Op::Sqrt(a) => {
                let two = T::from_real(2.0);
                add_into(&mut grads[a], zip_map(g, y, |gi, yi| gi / (two * yi)));
            }
            Op::Square(a) => {
                let two = T::from_real(2.0);
                add_into(&mut grads[a], zip_map(g, val(a), |gi, xi| two * gi * xi));
            }
            Op::Clamp(a, lo, hi) => {
                let (l, h) = (T::from_real(lo), T::from_real(hi));
                add_into(
                    &mut grads[a],
                    zip_map(g, val(a), |gi, xi| if xi > l && xi < h { gi } else { T::zero() }),
                );
            }
            Op::Softmax(a) => {
                let w = y.last_dim();
                let mut ga = y.clone();
                for ((gr, yr), out) in g.data().chunks(w).zip(y.data().chunks(w)).zip(ga.data_mut().chunks_mut(w)) {
                    let dot = gr.iter().zip(yr).fold(T::zero(), |acc, (&gi, &yi)| acc + gi * yi);
                    for ((o, &gi), &yi) in out.iter_mut().zip(gr).zip(yr) {
                        *o = yi * (gi - dot);
                    }
                }
                add_into(&mut grads[a], ga);
            }
            Op::Mean(a) => {
                let n = val(a).len();
                let gi = g.data()[0] / T::from_real(n as f64);
                add_into(&mut grads[a], Tensor::full(val(a).shape(), gi));
            }
            Op::Sum(a) => add_into(&mut grads[a], Tensor::full(val(a).shape(), g.data()[0])),
            Op::SumLastAxis(a) => {
                let ta = val(a);
                let w = ta.last_dim();
                let mut ga = Tensor::zeros(ta.shape());
                for (row, &gi) in ga.data_mut().chunks_mut(w).zip(g.data()) {
                    row.fill(gi);
                }
                add_into(&mut grads[a], ga);
            }
            Op::Concat(a, b) => {
                let (wa, wb) = (val(a).last_dim(), val(b).last_dim());
                let rows = g.len() / (wa + wb);
                if needs(a) {
                    let mut ga = Vec::with_capacity(rows * wa);
                    for r in g.data().chunks(wa + wb) {
                        ga.extend_from_slice(&r[..wa]);
                    }
                    add_into(&mut grads[a], Tensor::new(val(a).shape().to_vec(), ga).expect("split"));
                }
                if needs(b) {
                    let mut gb = Vec::with_capacity(rows * wb);
                    for r in g.data().chunks(wa + wb) {
                        gb.extend_from_slice(&r[wa..]);
                    }
                    add_into(&mut grads[b], Tensor::new(val(b).shape().to_vec(), gb).expect("split"));
                }
            }
        }
    }

    /// Collects the gradient of every trainable leaf, keyed by parameter name.
    ///
    /// Parameters that did not influence the output get a zero gradient.
    pub fn param_grads(&self, grads: &Gradients<T>) -> ParamSet<T> {
        let mut out = ParamSet::new();
        for (i, node) in self.nodes.iter().enumerate() {
            if let Op::Param(name) = &node.op {
                let g = grads.grads[i]
                    .clone()
                    .unwrap_or_else(|| Tensor::zeros(node.value.shape()));
                out.insert(name, g);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(shape: &[usize], v: &[f64]) -> Tensor<f64> {
        Tensor::new(shape.to_vec(), v.to_vec()).unwrap()
    }

    #[test]
    fn identity_graph_returns_input() {
        let mut g = Graph::new();
        let x = t(&[2, 2], &[1.0, -2.0, 3.5, 0.0]);
        let v = g.input(x.clone()).unwrap();
        assert_eq!(g.value(v), &x);
    }

    #[test]
    fn tanh_of_zero_and_uniform_softmax() {
        let mut g = Graph::<f64>::new();
        let z = g.input(Tensor::zeros(&[3, 4])).unwrap();
        let th = g.tanh(z).unwrap();
        assert!(g.value(th).data().iter().all(|&v| v == 0.0));
        let sm = g.softmax(z).unwrap();
        assert!(g.value(sm).data().iter().all(|&v| (v - 0.25).abs() < 1e-15));
    }

    #[test]
    fn square_gradient() {
        let mut g = Graph::new();
        let w = g.param("w", Tensor::scalar(3.0f64)).unwrap();
        let y = g.square(w).unwrap();
        let grads = g.backward(y).unwrap();
        assert_eq!(grads.get(w).unwrap().item(), Some(6.0));
    }

    #[test]
    fn tanh_gradient_at_zero() {
        let mut g = Graph::new();
        let w = g.param("w", Tensor::scalar(0.0f64)).unwrap();
        let y = g.tanh(w).unwrap();
        let grads = g.backward(y).unwrap();
        assert_eq!(grads.get(w).unwrap().item(), Some(1.0));
    }

    #[test]
    fn non_scalar_backward_is_rejected() {
        let mut g = Graph::new();
        let w = g.param("w", Tensor::<f64>::zeros(&[2])).unwrap();
        assert!(matches!(g.backward(w), Err(Error::NotScalarOutput(_))));
    }

    #[test]
    fn non_finite_forward_is_an_error() {
        let mut g = Graph::new();
        let x = g.input(t(&[2], &[1.0, 0.0])).unwrap();
        assert!(matches!(g.ln(x), Err(Error::NonFinite("ln"))));
    }

    #[test]
    fn shape_errors() {
        let mut g = Graph::<f64>::new();
        let a = g.input(Tensor::zeros(&[2, 3])).unwrap();
        let b = g.input(Tensor::zeros(&[2, 3])).unwrap();
        assert!(matches!(g.matmul(a, b), Err(Error::ShapeMismatch { .. })));
        let c = g.input(Tensor::zeros(&[3])).unwrap();
        assert!(g.add(a, c).is_err());
        assert!(g.add_bias(a, c).is_ok());
        let d = g.input(Tensor::zeros(&[3, 1])).unwrap();
        assert!(g.concat(a, d).is_err());
    }

    #[test]
    fn constants_receive_no_gradient() {
        let mut g = Graph::new();
        let w = g.param("w", t(&[1, 2], &[1.0, 2.0])).unwrap();
        let x = g.input(t(&[2, 1], &[3.0, 4.0])).unwrap();
        let y = g.matmul(w, x).unwrap();
        let s = g.sum(y).unwrap();
        let grads = g.backward(s).unwrap();
        assert_eq!(grads.get(w).unwrap().data(), &[3.0, 4.0]);
        assert!(grads.get(x).is_none());
        let pg = g.param_grads(&grads);
        assert_eq!(pg.get("w").unwrap().data(), &[3.0, 4.0]);
    }

    #[test]
    fn softmax_rows_sum_to_one() {
        let mut g = Graph::new();
        let x = g
            .input(t(&[2, 3], &[100.0, -3.0, 0.5, 1e-3, 7.0, -40.0]))
            .unwrap();
        let s = g.softmax(x).unwrap();
        for r in 0..2 {
            let sum: f64 = g.value(s).row(r).iter().sum();
            assert!((sum - 1.0).abs() < 1e-12);
        }
    }
}
