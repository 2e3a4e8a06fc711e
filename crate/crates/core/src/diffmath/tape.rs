//! Reverse-mode tape over a fixed operator set.
//!
//! A [`Tape`] records one forward pass. Every operation appends a node holding
//! its value; [`Tape::backward`] walks the nodes in reverse, accumulating
//! adjoints, and adds parameter gradients into the [`ParamStore`] the
//! parameters were read from. Operations outside the built-in set (the
//! unrolled Sinkhorn solver) register a [`CustomBackward`] closure.

use std::rc::Rc;

use ndarray::{s, Array2, Axis};

use super::{check_same_shape, ParamId, ParamStore, Tensor2};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

/// Maps the output adjoint to one adjoint per custom-op input, in order.
pub type CustomBackward = Box<dyn Fn(&Tensor2) -> Vec<Tensor2>>;

/// Constant block-diagonal left operand for graph propagation.
///
/// Blocks are laid out along the diagonal in order; rows of the right operand
/// are partitioned accordingly. A single block is an ordinary dense matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockDiagonal {
    blocks: Vec<Tensor2>,
}

impl BlockDiagonal {
    pub fn new(blocks: Vec<Tensor2>) -> Result<Self> {
        for (i, b) in blocks.iter().enumerate() {
            if b.nrows() != b.ncols() {
                return Err(Error::Shape(format!(
                    "block {i} must be square, got {}x{}",
                    b.nrows(),
                    b.ncols()
                )));
            }
        }
        Ok(Self { blocks })
    }

    pub fn dense(matrix: Tensor2) -> Result<Self> {
        Self::new(vec![matrix])
    }

    pub fn dim(&self) -> usize {
        self.blocks.iter().map(|b| b.nrows()).sum()
    }

    pub fn blocks(&self) -> &[Tensor2] {
        &self.blocks
    }

    pub fn to_dense(&self) -> Tensor2 {
        let n = self.dim();
        let mut out = Array2::zeros((n, n));
        let mut off = 0;
        for b in &self.blocks {
            let k = b.nrows();
            out.slice_mut(s![off..off + k, off..off + k]).assign(b);
            off += k;
        }
        out
    }

    fn apply_impl(&self, x: &Tensor2, transpose: bool) -> Result<Tensor2> {
        if x.nrows() != self.dim() {
            return Err(Error::Shape(format!(
                "propagate: operator {}x{} vs input {}x{}",
                self.dim(),
                self.dim(),
                x.nrows(),
                x.ncols()
            )));
        }
        let mut out = Array2::zeros(x.dim());
        let mut off = 0;
        for b in &self.blocks {
            let k = b.nrows();
            let rows = x.slice(s![off..off + k, ..]);
            let prod = if transpose { b.t().dot(&rows) } else { b.dot(&rows) };
            out.slice_mut(s![off..off + k, ..]).assign(&prod);
            off += k;
        }
        Ok(out)
    }

    pub fn apply(&self, x: &Tensor2) -> Result<Tensor2> {
        self.apply_impl(x, false)
    }

    pub fn apply_transpose(&self, x: &Tensor2) -> Result<Tensor2> {
        self.apply_impl(x, true)
    }
}

enum Op {
    Input,
    Param(ParamId),
    MatMul(Var, Var),
    Propagate(Rc<BlockDiagonal>, Var),
    AddBias(Var, Var),
    Relu(Var),
    Mul(Var, Var),
    Add(Var, Var),
    Scale(Var, f64),
    SumAll(Var),
    MaskedMse {
        pred: Var,
        target: Rc<Tensor2>,
        mask: Rc<Tensor2>,
        denom: f64,
    },
    RowNorms(Var),
    ConcatRows(Vec<Var>),
    SliceRows(Var, usize),
    Custom(Vec<Var>, CustomBackward),
}

struct Node {
    value: Tensor2,
    op: Op,
}

#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

/// Adjoints of the leaves (inputs and parameters) reached by a backward pass.
pub struct Gradients {
    adjoints: Vec<Option<Tensor2>>,
}

impl Gradients {
    /// Gradient with respect to the leaf `v`; `None` when `v` did not influence the loss.
    pub fn wrt(&self, v: Var) -> Option<&Tensor2> {
        self.adjoints.get(v.0).and_then(|a| a.as_ref())
    }
}

fn shape(t: &Tensor2) -> String {
    format!("{}x{}", t.nrows(), t.ncols())
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    fn push(&mut self, value: Tensor2, op: Op) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Tensor2 {
        &self.nodes[v.0].value
    }

    /// Value of a 1×1 node.
    pub fn scalar(&self, v: Var) -> f64 {
        let t = self.value(v);
        debug_assert_eq!(t.dim(), (1, 1));
        t[[0, 0]]
    }

    pub fn input(&mut self, value: Tensor2) -> Var {
        self.push(value, Op::Input)
    }

    pub fn constant_scalar(&mut self, value: f64) -> Var {
        self.input(Array2::from_elem((1, 1), value))
    }

    pub fn param(&mut self, store: &ParamStore, id: ParamId) -> Var {
        self.push(store.value(id).clone(), Op::Param(id))
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (av, bv) = (self.value(a), self.value(b));
        if av.ncols() != bv.nrows() {
            return Err(Error::Shape(format!("matmul: {} · {}", shape(av), shape(bv))));
        }
        let out = av.dot(bv);
        Ok(self.push(out, Op::MatMul(a, b)))
    }

    /// `P · x` for a constant block-diagonal `P`.
    pub fn propagate(&mut self, p: &Rc<BlockDiagonal>, x: Var) -> Result<Var> {
        let out = p.apply(self.value(x))?;
        Ok(self.push(out, Op::Propagate(Rc::clone(p), x)))
    }

    /// Adds a 1×c bias row to every row of `x`.
    pub fn add_bias(&mut self, x: Var, bias: Var) -> Result<Var> {
        let (xv, bv) = (self.value(x), self.value(bias));
        if bv.nrows() != 1 || bv.ncols() != xv.ncols() {
            return Err(Error::Shape(format!("add_bias: {} + {}", shape(xv), shape(bv))));
        }
        let out = xv + bv;
        Ok(self.push(out, Op::AddBias(x, bias)))
    }

    pub fn relu(&mut self, x: Var) -> Var {
        let out = self.value(x).mapv(|v| v.max(0.0));
        self.push(out, Op::Relu(x))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        check_same_shape("mul", self.value(a), self.value(b))?;
        let out = self.value(a) * self.value(b);
        Ok(self.push(out, Op::Mul(a, b)))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        check_same_shape("add", self.value(a), self.value(b))?;
        let out = self.value(a) + self.value(b);
        Ok(self.push(out, Op::Add(a, b)))
    }

    pub fn scale(&mut self, x: Var, c: f64) -> Var {
        let out = self.value(x) * c;
        self.push(out, Op::Scale(x, c))
    }

    pub fn sum_all(&mut self, x: Var) -> Var {
        let out = Array2::from_elem((1, 1), self.value(x).sum());
        self.push(out, Op::SumAll(x))
    }

    /// Masked mean squared error against a constant target; differentiable in `pred`.
    pub fn masked_mse(&mut self, pred: Var, target: &Rc<Tensor2>, mask: &Rc<Tensor2>) -> Result<Var> {
        let value = super::masked_mse(self.value(pred), target, mask)?;
        let denom = mask.sum().max(1.0);
        Ok(self.push(
            Array2::from_elem((1, 1), value),
            Op::MaskedMse {
                pred,
                target: Rc::clone(target),
                mask: Rc::clone(mask),
                denom,
            },
        ))
    }

    /// Euclidean norm of each row, as an n×1 column.
    pub fn row_norms(&mut self, x: Var) -> Var {
        let out = self
            .value(x)
            .map_axis(Axis(1), |row| row.dot(&row).sqrt())
            .insert_axis(Axis(1));
        self.push(out, Op::RowNorms(x))
    }

    pub fn concat_rows(&mut self, parts: &[Var]) -> Result<Var> {
        let views: Vec<_> = parts.iter().map(|&p| self.value(p).view()).collect();
        let out = ndarray::concatenate(Axis(0), &views)
            .map_err(|e| Error::Shape(format!("concat_rows: {e}")))?;
        Ok(self.push(out, Op::ConcatRows(parts.to_vec())))
    }

    /// Rows `start..end` of `x`.
    pub fn slice_rows(&mut self, x: Var, start: usize, end: usize) -> Result<Var> {
        let xv = self.value(x);
        if start > end || end > xv.nrows() {
            return Err(Error::Shape(format!("slice_rows {start}..{end} of {}", shape(xv))));
        }
        let out = xv.slice(s![start..end, ..]).to_owned();
        Ok(self.push(out, Op::SliceRows(x, start)))
    }

    /// Records an operation whose backward is supplied by the caller.
    pub fn custom(&mut self, inputs: &[Var], value: Tensor2, backward: CustomBackward) -> Var {
        self.push(value, Op::Custom(inputs.to_vec(), backward))
    }

    /// Back-propagates from a 1×1 `loss`, adding parameter gradients into `store`.
    pub fn backward(&self, loss: Var, store: &mut ParamStore) -> Result<Gradients> {
        if self.value(loss).dim() != (1, 1) {
            return Err(Error::Shape(format!("backward needs a 1x1 loss, got {}", shape(self.value(loss)))));
        }
        let mut adj: Vec<Option<Tensor2>> = (0..self.nodes.len()).map(|_| None).collect();
        adj[loss.0] = Some(Array2::ones((1, 1)));

        for idx in (0..=loss.0).rev() {
            let node = &self.nodes[idx];
            match &node.op {
                Op::Input => continue,
                Op::Param(id) => {
                    if let Some(g) = &adj[idx] {
                        *store.grad_mut(*id) += g;
                    }
                    continue;
                }
                _ => {}
            }
            // intermediate adjoints are released once consumed
            let Some(g) = adj[idx].take() else { continue };
            match &node.op {
                Op::Input | Op::Param(_) => unreachable!(),
                Op::MatMul(a, b) => {
                    let ga = g.dot(&self.value(*b).t());
                    let gb = self.value(*a).t().dot(&g);
                    accumulate(&mut adj, *a, ga);
                    accumulate(&mut adj, *b, gb);
                }
                Op::Propagate(p, x) => {
                    accumulate(&mut adj, *x, p.apply_transpose(&g)?);
                }
                Op::AddBias(x, b) => {
                    let gb = g.sum_axis(Axis(0)).insert_axis(Axis(0));
                    accumulate(&mut adj, *b, gb);
                    accumulate(&mut adj, *x, g);
                }
                Op::Relu(x) => {
                    let mut gx = g;
                    gx.zip_mut_with(self.value(*x), |gv, &xv| {
                        if xv <= 0.0 {
                            *gv = 0.0;
                        }
                    });
                    accumulate(&mut adj, *x, gx);
                }
                Op::Mul(a, b) => {
                    let ga = &g * self.value(*b);
                    let gb = &g * self.value(*a);
                    accumulate(&mut adj, *a, ga);
                    accumulate(&mut adj, *b, gb);
                }
                Op::Add(a, b) => {
                    accumulate(&mut adj, *a, g.clone());
                    accumulate(&mut adj, *b, g);
                }
                Op::Scale(x, c) => {
                    accumulate(&mut adj, *x, g * *c);
                }
                Op::SumAll(x) => {
                    let gx = Array2::from_elem(self.value(*x).dim(), g[[0, 0]]);
                    accumulate(&mut adj, *x, gx);
                }
                Op::MaskedMse {
                    pred,
                    target,
                    mask,
                    denom,
                } => {
                    let c = 2.0 * g[[0, 0]] / denom;
                    let mut gp = self.value(*pred) - &**target;
                    gp.zip_mut_with(mask, |v, &m| *v *= c * m * m);
                    accumulate(&mut adj, *pred, gp);
                }
                Op::RowNorms(x) => {
                    let xv = self.value(*x);
                    let mut gx = xv.clone();
                    for (i, mut row) in gx.axis_iter_mut(Axis(0)).enumerate() {
                        let norm = node.value[[i, 0]];
                        let f = if norm > 0.0 { g[[i, 0]] / norm } else { 0.0 };
                        row.mapv_inplace(|v| v * f);
                    }
                    accumulate(&mut adj, *x, gx);
                }
                Op::ConcatRows(parts) => {
                    let mut off = 0;
                    for &p in parts {
                        let k = self.value(p).nrows();
                        accumulate(&mut adj, p, g.slice(s![off..off + k, ..]).to_owned());
                        off += k;
                    }
                }
                Op::SliceRows(x, start) => {
                    let mut gx = Array2::zeros(self.value(*x).dim());
                    gx.slice_mut(s![*start..*start + g.nrows(), ..]).assign(&g);
                    accumulate(&mut adj, *x, gx);
                }
                Op::Custom(inputs, backward) => {
                    let grads = backward(&g);
                    if grads.len() != inputs.len() {
                        return Err(Error::Shape(format!(
                            "custom op returned {} gradients for {} inputs",
                            grads.len(),
                            inputs.len()
                        )));
                    }
                    for (&v, gv) in inputs.iter().zip(grads) {
                        check_same_shape("custom op gradient", self.value(v), &gv)?;
                        accumulate(&mut adj, v, gv);
                    }
                }
            }
        }
        Ok(Gradients { adjoints: adj })
    }
}

fn accumulate(adj: &mut [Option<Tensor2>], v: Var, g: Tensor2) {
    match &mut adj[v.0] {
        Some(existing) => *existing += &g,
        slot @ None => *slot = Some(g),
    }
}
