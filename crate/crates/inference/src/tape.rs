//! Expression tape with reverse-mode gradients.
//!
//! A [`Tape`] records scalar operations during a forward evaluation; a single
//! backward sweep then yields the gradient with respect to every input. The
//! tape is rebuilt per evaluation, so concurrent evaluations never share
//! mutable state.

use std::cell::RefCell;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::rc::Rc;

use statrs::function::gamma::{digamma, ln_gamma};

#[derive(Clone, Copy, Debug, PartialEq)]
enum UnOp {
    Neg,
    Exp,
    Ln,
    Sqrt,
    Sin,
    Cos,
    Tanh,
    Sigmoid,
    /// ln(1 + e^x), the softplus.
    Ln1pExp,
    LnGamma,
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    /// a^b for a > 0.
    Pow,
}

enum Node {
    /// Leaf value: either a differentiated input or a constant.
    Leaf,
    Unary { op: UnOp, a: u32 },
    Binary { op: BinOp, a: u32, b: u32 },
    /// The `k`-th output of the custom block at `block`.
    CustomOut { block: u32, k: u32 },
}

/// A multi-input, multi-output operation with a hand-written backward pass.
///
/// Used for blocks like the Cholesky-based latent GP where recording every
/// scalar would be prohibitively slow.
pub trait CustomOp {
    /// Compute outputs from inputs. Non-finite outputs poison the evaluation
    /// (the caller maps them to a -inf density).
    fn forward(&self, inputs: &[f64]) -> Vec<f64>;
    /// Given adjoints of the outputs, return adjoints of the inputs.
    /// `outputs` is the cached forward result.
    fn backward(&self, inputs: &[f64], outputs: &[f64], out_adj: &[f64]) -> Vec<f64>;
}

struct CustomBlock {
    op: Rc<dyn CustomOp>,
    inputs: Vec<u32>,
    input_vals: Vec<f64>,
    outputs: Vec<f64>,
    first_out: u32,
}

struct TapeInner {
    nodes: Vec<Node>,
    values: Vec<f64>,
    blocks: Vec<CustomBlock>,
}

/// Records a single forward evaluation.
pub struct Tape {
    inner: RefCell<TapeInner>,
}

/// A value on a [`Tape`]. Cheap to copy; all arithmetic is recorded.
#[derive(Clone, Copy)]
pub struct Var<'t> {
    tape: &'t Tape,
    idx: u32,
}

impl Default for Tape {
    fn default() -> Self {
        Self::new()
    }
}

impl Tape {
    pub fn new() -> Self {
        Tape {
            inner: RefCell::new(TapeInner {
                nodes: Vec::new(),
                values: Vec::new(),
                blocks: Vec::new(),
            }),
        }
    }

    fn push(&self, node: Node, value: f64) -> Var<'_> {
        let mut inner = self.inner.borrow_mut();
        let idx = inner.nodes.len() as u32;
        inner.nodes.push(node);
        inner.values.push(value);
        Var { tape: self, idx }
    }

    /// A differentiated input. Gradients are reported in creation order.
    pub fn input(&self, value: f64) -> Var<'_> {
        self.push(Node::Leaf, value)
    }

    /// A constant; contributes no gradient.
    pub fn constant(&self, value: f64) -> Var<'_> {
        self.push(Node::Leaf, value)
    }

    /// Record a custom block. Returns one `Var` per output.
    pub fn custom(&self, op: Rc<dyn CustomOp>, inputs: &[Var<'_>]) -> Vec<Var<'_>> {
        let input_idx: Vec<u32> = inputs.iter().map(|v| v.idx).collect();
        let input_vals: Vec<f64> = inputs.iter().map(|v| v.value()).collect();
        let outputs = op.forward(&input_vals);
        let mut inner = self.inner.borrow_mut();
        let block = inner.blocks.len() as u32;
        let first_out = inner.nodes.len() as u32;
        let mut vars = Vec::with_capacity(outputs.len());
        for (k, &out) in outputs.iter().enumerate() {
            inner.nodes.push(Node::CustomOut { block, k: k as u32 });
            inner.values.push(out);
            vars.push(Var {
                tape: self,
                idx: first_out + k as u32,
            });
        }
        inner.blocks.push(CustomBlock {
            op,
            inputs: input_idx,
            input_vals,
            outputs,
            first_out,
        });
        vars
    }

    /// Backward sweep from `root`; returns adjoints of the first `n_inputs`
    /// nodes (the inputs, in creation order).
    pub fn gradient(&self, root: Var<'_>, n_inputs: usize) -> Vec<f64> {
        let inner = self.inner.borrow();
        let n = inner.nodes.len();
        let mut adj = vec![0.0; n];
        adj[root.idx as usize] = 1.0;
        for i in (0..n).rev() {
            let a_i = adj[i];
            match inner.nodes[i] {
                Node::Leaf => {}
                Node::Unary { op, a } => {
                    if a_i != 0.0 {
                        let x = inner.values[a as usize];
                        let y = inner.values[i];
                        let d = match op {
                            UnOp::Neg => -1.0,
                            UnOp::Exp => y,
                            UnOp::Ln => 1.0 / x,
                            UnOp::Sqrt => 0.5 / y,
                            UnOp::Sin => x.cos(),
                            UnOp::Cos => -x.sin(),
                            UnOp::Tanh => 1.0 - y * y,
                            UnOp::Sigmoid => y * (1.0 - y),
                            UnOp::Ln1pExp => sigmoid(x),
                            UnOp::LnGamma => digamma(x),
                        };
                        adj[a as usize] += a_i * d;
                    }
                }
                Node::Binary { op, a, b } => {
                    if a_i != 0.0 {
                        let x = inner.values[a as usize];
                        let y = inner.values[b as usize];
                        match op {
                            BinOp::Add => {
                                adj[a as usize] += a_i;
                                adj[b as usize] += a_i;
                            }
                            BinOp::Sub => {
                                adj[a as usize] += a_i;
                                adj[b as usize] -= a_i;
                            }
                            BinOp::Mul => {
                                adj[a as usize] += a_i * y;
                                adj[b as usize] += a_i * x;
                            }
                            BinOp::Div => {
                                adj[a as usize] += a_i / y;
                                adj[b as usize] -= a_i * x / (y * y);
                            }
                            BinOp::Pow => {
                                let v = inner.values[i];
                                adj[a as usize] += a_i * y * v / x;
                                adj[b as usize] += a_i * v * x.ln();
                            }
                        }
                    }
                }
                Node::CustomOut { block, k } => {
                    // Process the whole block once, at its first output; every
                    // consumer has a higher index so all output adjoints are
                    // final by then.
                    if k == 0 {
                        let blk = &inner.blocks[block as usize];
                        let n_out = blk.outputs.len();
                        let out_adj: Vec<f64> = (0..n_out)
                            .map(|j| adj[(blk.first_out as usize) + j])
                            .collect();
                        if out_adj.iter().any(|&v| v != 0.0) {
                            let in_adj = blk.op.backward(&blk.input_vals, &blk.outputs, &out_adj);
                            debug_assert_eq!(in_adj.len(), blk.inputs.len());
                            for (ii, &g) in blk.inputs.iter().zip(in_adj.iter()) {
                                adj[*ii as usize] += g;
                            }
                        }
                    }
                }
            }
        }
        adj.truncate(n_inputs);
        adj
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn ln_1p_exp(x: f64) -> f64 {
    // Stable softplus.
    if x > 33.0 {
        x
    } else if x < -33.0 {
        x.exp()
    } else {
        x.exp().ln_1p()
    }
}

impl<'t> Var<'t> {
    pub fn value(self) -> f64 {
        self.tape.inner.borrow().values[self.idx as usize]
    }

    fn unary(self, op: UnOp, value: f64) -> Var<'t> {
        self.tape.push(Node::Unary { op, a: self.idx }, value)
    }

    fn binary(self, op: BinOp, rhs: Var<'t>, value: f64) -> Var<'t> {
        debug_assert!(std::ptr::eq(self.tape, rhs.tape));
        self.tape.push(
            Node::Binary {
                op,
                a: self.idx,
                b: rhs.idx,
            },
            value,
        )
    }

    pub fn exp(self) -> Var<'t> {
        self.unary(UnOp::Exp, self.value().exp())
    }
    pub fn ln(self) -> Var<'t> {
        self.unary(UnOp::Ln, self.value().ln())
    }
    pub fn sqrt(self) -> Var<'t> {
        self.unary(UnOp::Sqrt, self.value().sqrt())
    }
    pub fn sin(self) -> Var<'t> {
        self.unary(UnOp::Sin, self.value().sin())
    }
    pub fn cos(self) -> Var<'t> {
        self.unary(UnOp::Cos, self.value().cos())
    }
    pub fn tanh(self) -> Var<'t> {
        self.unary(UnOp::Tanh, self.value().tanh())
    }
    /// logit^-1
    pub fn sigmoid(self) -> Var<'t> {
        self.unary(UnOp::Sigmoid, sigmoid(self.value()))
    }
    pub fn ln_1p_exp(self) -> Var<'t> {
        self.unary(UnOp::Ln1pExp, ln_1p_exp(self.value()))
    }
    pub fn ln_gamma(self) -> Var<'t> {
        self.unary(UnOp::LnGamma, ln_gamma(self.value()))
    }
    /// self^p for positive self.
    pub fn pow(self, p: Var<'t>) -> Var<'t> {
        self.binary(BinOp::Pow, p, self.value().powf(p.value()))
    }
    pub fn powi(self, n: i32) -> Var<'t> {
        let p = self.tape.constant(n as f64);
        self.pow(p)
    }
    pub fn lit(self, v: f64) -> Var<'t> {
        self.tape.constant(v)
    }
    pub fn tape(self) -> &'t Tape {
        self.tape
    }
}

impl<'t> Add for Var<'t> {
    type Output = Var<'t>;
    fn add(self, rhs: Var<'t>) -> Var<'t> {
        self.binary(BinOp::Add, rhs, self.value() + rhs.value())
    }
}
impl<'t> Sub for Var<'t> {
    type Output = Var<'t>;
    fn sub(self, rhs: Var<'t>) -> Var<'t> {
        self.binary(BinOp::Sub, rhs, self.value() - rhs.value())
    }
}
impl<'t> Mul for Var<'t> {
    type Output = Var<'t>;
    fn mul(self, rhs: Var<'t>) -> Var<'t> {
        self.binary(BinOp::Mul, rhs, self.value() * rhs.value())
    }
}
impl<'t> Div for Var<'t> {
    type Output = Var<'t>;
    fn div(self, rhs: Var<'t>) -> Var<'t> {
        self.binary(BinOp::Div, rhs, self.value() / rhs.value())
    }
}
impl<'t> Neg for Var<'t> {
    type Output = Var<'t>;
    fn neg(self) -> Var<'t> {
        self.unary(UnOp::Neg, -self.value())
    }
}

macro_rules! var_f64_ops {
    ($($trait:ident, $method:ident);+ $(;)?) => {$(
        impl<'t> $trait<f64> for Var<'t> {
            type Output = Var<'t>;
            fn $method(self, rhs: f64) -> Var<'t> {
                let c = self.tape.constant(rhs);
                $trait::$method(self, c)
            }
        }
        impl<'t> $trait<Var<'t>> for f64 {
            type Output = Var<'t>;
            fn $method(self, rhs: Var<'t>) -> Var<'t> {
                let c = rhs.tape.constant(self);
                $trait::$method(c, rhs)
            }
        }
    )+};
}
var_f64_ops! {
    Add, add;
    Sub, sub;
    Mul, mul;
    Div, div;
}

/// Numerically stable log-sum-exp of tape values.
pub fn log_sum_exp<'t>(xs: &[Var<'t>]) -> Var<'t> {
    assert!(!xs.is_empty());
    let m = xs
        .iter()
        .map(|v| v.value())
        .fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        // All -inf (or a NaN): the sum collapses; return the first term so the
        // non-finite value propagates.
        return xs[0];
    }
    let mut acc = (xs[0] - m).exp();
    for &x in &xs[1..] {
        acc = acc + (x - m).exp();
    }
    acc.ln() + m
}

/// Common scalar surface shared by `f64` and [`Var`], so density formulas are
/// written once and used both on and off the tape.
pub trait Scalar:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    /// A constant in the same evaluation context as `self`.
    fn lit(self, v: f64) -> Self;
    fn val(self) -> f64;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn sqrt(self) -> Self;
    fn sin(self) -> Self;
    fn tanh(self) -> Self;
    fn sigmoid(self) -> Self;
    fn ln_1p_exp(self) -> Self;
    fn ln_gamma(self) -> Self;
    fn pow(self, p: Self) -> Self;
}

impl Scalar for f64 {
    fn lit(self, v: f64) -> f64 {
        v
    }
    fn val(self) -> f64 {
        self
    }
    fn exp(self) -> f64 {
        f64::exp(self)
    }
    fn ln(self) -> f64 {
        f64::ln(self)
    }
    fn sqrt(self) -> f64 {
        f64::sqrt(self)
    }
    fn sin(self) -> f64 {
        f64::sin(self)
    }
    fn tanh(self) -> f64 {
        f64::tanh(self)
    }
    fn sigmoid(self) -> f64 {
        sigmoid(self)
    }
    fn ln_1p_exp(self) -> f64 {
        ln_1p_exp(self)
    }
    fn ln_gamma(self) -> f64 {
        ln_gamma(self)
    }
    fn pow(self, p: f64) -> f64 {
        self.powf(p)
    }
}

impl<'t> Scalar for Var<'t> {
    fn lit(self, v: f64) -> Var<'t> {
        self.tape.constant(v)
    }
    fn val(self) -> f64 {
        self.value()
    }
    fn exp(self) -> Var<'t> {
        Var::exp(self)
    }
    fn ln(self) -> Var<'t> {
        Var::ln(self)
    }
    fn sqrt(self) -> Var<'t> {
        Var::sqrt(self)
    }
    fn sin(self) -> Var<'t> {
        Var::sin(self)
    }
    fn tanh(self) -> Var<'t> {
        Var::tanh(self)
    }
    fn sigmoid(self) -> Var<'t> {
        Var::sigmoid(self)
    }
    fn ln_1p_exp(self) -> Var<'t> {
        Var::ln_1p_exp(self)
    }
    fn ln_gamma(self) -> Var<'t> {
        Var::ln_gamma(self)
    }
    fn pow(self, p: Var<'t>) -> Var<'t> {
        Var::pow(self, p)
    }
}
