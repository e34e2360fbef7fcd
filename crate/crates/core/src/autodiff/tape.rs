//! Wengert-list tape. Every op appends a node whose inputs precede it, so the
//! node order is a topological order and backward simply walks it in reverse.

use super::kernels;
use super::Tensor;
use crate::error::{Error, Result};
use crate::rng::{uniform, SeededRng};
use crate::scalar::Scalar;

/// Lower clamp on probabilities before taking a logarithm.
pub const PROB_FLOOR: f64 = 1e-12;

/// Handle to a value recorded on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

enum Op<T> {
    Leaf,
    MatMul(Var, Var),
    Add(Var, Var),
    AddRow(Var, Var),
    Mul(Var, Var),
    Scale(Var, T),
    Transpose(Var),
    Softmax(Var),
    Gelu(Var),
    LayerNorm {
        x: Var,
        gain: Var,
        bias: Var,
        xhat: Vec<T>,
        inv_std: Vec<T>,
    },
    Mask {
        x: Var,
        mask: Vec<T>,
    },
    SliceCols {
        x: Var,
        start: usize,
    },
    ConcatCols(Vec<Var>),
    SliceRows {
        x: Var,
        start: usize,
    },
    ConcatRows(Vec<Var>),
    Log {
        x: Var,
        floor: T,
    },
    Sum(Var),
    SoftmaxCrossEntropy {
        logits: Var,
        probs: Var,
        targets: Vec<T>,
    },
    CrossEntropy {
        probs: Var,
        targets: Vec<T>,
    },
    Map {
        x: Var,
        derivative: fn(T) -> T,
    },
}

struct Node<T> {
    value: Tensor<T>,
    op: Op<T>,
    /// True when a trainable leaf is upstream of this node.
    tracked: bool,
}

/// Gradients produced by [`Tape::backward`], indexed by [`Var`].
pub struct Gradients<T> {
    grads: Vec<Option<Vec<T>>>,
}

impl<T: Scalar> Gradients<T> {
    pub fn get(&self, var: Var) -> Option<&[T]> {
        self.grads.get(var.0).and_then(|g| g.as_deref())
    }
}

#[derive(Default)]
pub struct Tape<T> {
    nodes: Vec<Node<T>>,
}

fn matrix_dims(shape: &[usize], op: &'static str) -> Result<(usize, usize)> {
    match *shape {
        [n] => Ok((1, n)),
        [r, c] => Ok((r, c)),
        _ => Err(Error::shape(op, format!("expected rank 1 or 2, got {shape:?}"))),
    }
}

impl<T: Scalar> Tape<T> {
    pub fn new() -> Self {
        Tape { nodes: Vec::new() }
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

    fn tracked(&self, v: Var) -> bool {
        self.nodes[v.0].tracked
    }

    fn push(&mut self, value: Tensor<T>, op: Op<T>, tracked: bool, name: &'static str) -> Result<Var> {
        if !value.is_finite() {
            return Err(Error::NonFinite(name));
        }
        self.nodes.push(Node { value, op, tracked });
        Ok(Var(self.nodes.len() - 1))
    }

    /// Records a trainable leaf; its gradient is reported by `backward`.
    pub fn param(&mut self, t: &Tensor<T>) -> Var {
        self.nodes.push(Node {
            value: t.detached(),
            op: Op::Leaf,
            tracked: true,
        });
        Var(self.nodes.len() - 1)
    }

    /// Records a constant leaf (no gradient).
    pub fn constant(&mut self, t: Tensor<T>) -> Var {
        self.nodes.push(Node {
            value: t,
            op: Op::Leaf,
            tracked: false,
        });
        Var(self.nodes.len() - 1)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (m, k) = matrix_dims(self.value(a).shape(), "matmul")?;
        let (k2, n) = matrix_dims(self.value(b).shape(), "matmul")?;
        if self.value(a).rank() != 2 || self.value(b).rank() != 2 || k != k2 {
            return Err(Error::shape(
                "matmul",
                format!("{:?} x {:?}", self.value(a).shape(), self.value(b).shape()),
            ));
        }
        let out = kernels::matmul(self.value(a).data(), self.value(b).data(), m, k, n);
        let tracked = self.tracked(a) || self.tracked(b);
        self.push(Tensor::from_parts(vec![m, n], out), Op::MatMul(a, b), tracked, "matmul")
    }

    fn zip_with(&mut self, a: Var, b: Var, name: &'static str, f: impl Fn(T, T) -> T) -> Result<Vec<T>> {
        let (ta, tb) = (self.value(a), self.value(b));
        if ta.shape() != tb.shape() {
            return Err(Error::shape(name, format!("{:?} vs {:?}", ta.shape(), tb.shape())));
        }
        Ok(ta.data().iter().zip(tb.data()).map(|(&x, &y)| f(x, y)).collect())
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let out = self.zip_with(a, b, "add", |x, y| x + y)?;
        let shape = self.value(a).shape().to_vec();
        let tracked = self.tracked(a) || self.tracked(b);
        self.push(Tensor::from_parts(shape, out), Op::Add(a, b), tracked, "add")
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let out = self.zip_with(a, b, "mul", |x, y| x * y)?;
        let shape = self.value(a).shape().to_vec();
        let tracked = self.tracked(a) || self.tracked(b);
        self.push(Tensor::from_parts(shape, out), Op::Mul(a, b), tracked, "mul")
    }

    /// Adds a length-`n` vector to every last-axis slice of `a`.
    pub fn add_row(&mut self, a: Var, row: Var) -> Result<Var> {
        let n = self.value(a).last_dim();
        if self.value(row).numel() != n {
            return Err(Error::shape(
                "add_row",
                format!("{:?} + {:?}", self.value(a).shape(), self.value(row).shape()),
            ));
        }
        let r = self.value(row).data();
        let out: Vec<T> = self
            .value(a)
            .data()
            .chunks_exact(n)
            .flat_map(|chunk| chunk.iter().zip(r).map(|(&x, &y)| x + y))
            .collect();
        let shape = self.value(a).shape().to_vec();
        let tracked = self.tracked(a) || self.tracked(row);
        self.push(Tensor::from_parts(shape, out), Op::AddRow(a, row), tracked, "add_row")
    }

    pub fn scale(&mut self, a: Var, factor: T) -> Result<Var> {
        let t = self.value(a);
        let out = t.data().iter().map(|&x| x * factor).collect();
        let shape = t.shape().to_vec();
        let tracked = self.tracked(a);
        self.push(Tensor::from_parts(shape, out), Op::Scale(a, factor), tracked, "scale")
    }

    pub fn transpose(&mut self, a: Var) -> Result<Var> {
        let t = self.value(a);
        let (r, c) = match *t.shape() {
            [r, c] => (r, c),
            _ => return Err(Error::shape("transpose", format!("{:?}", t.shape()))),
        };
        let out = kernels::transpose(t.data(), r, c);
        let tracked = self.tracked(a);
        self.push(Tensor::from_parts(vec![c, r], out), Op::Transpose(a), tracked, "transpose")
    }

    /// Softmax over the last axis.
    pub fn softmax(&mut self, a: Var) -> Result<Var> {
        let t = self.value(a);
        let out = kernels::softmax_rows(t.data(), t.last_dim());
        let shape = t.shape().to_vec();
        let tracked = self.tracked(a);
        self.push(Tensor::from_parts(shape, out), Op::Softmax(a), tracked, "softmax")
    }

    /// Exact GELU, `x * Phi(x)`.
    pub fn gelu(&mut self, a: Var) -> Result<Var> {
        let t = self.value(a);
        let out = t.data().iter().map(|&x| x * kernels::std_normal_cdf(x)).collect();
        let shape = t.shape().to_vec();
        let tracked = self.tracked(a);
        self.push(Tensor::from_parts(shape, out), Op::Gelu(a), tracked, "gelu")
    }

    /// Normalizes each last-axis slice with population variance, then applies gain and bias.
    pub fn layernorm(&mut self, x: Var, gain: Var, bias: Var, epsilon: T) -> Result<Var> {
        let n = self.value(x).last_dim();
        if self.value(gain).numel() != n || self.value(bias).numel() != n {
            return Err(Error::shape(
                "layernorm",
                format!(
                    "slice width {n}, gain {:?}, bias {:?}",
                    self.value(gain).shape(),
                    self.value(bias).shape()
                ),
            ));
        }
        let nf = T::from_usize(n).unwrap();
        let (g, b) = (self.value(gain).data(), self.value(bias).data());
        let src = self.value(x).data();
        let mut xhat = Vec::with_capacity(src.len());
        let mut inv_std = Vec::with_capacity(src.len() / n);
        let mut out = Vec::with_capacity(src.len());
        for row in src.chunks_exact(n) {
            // a constant row centres to exactly zero; the rounded mean might not
            let mean = if row.iter().all(|&v| v == row[0]) {
                row[0]
            } else {
                row.iter().copied().sum::<T>() / nf
            };
            let var = row.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>() / nf;
            let inv = T::one() / (var + epsilon).sqrt();
            inv_std.push(inv);
            for (i, &v) in row.iter().enumerate() {
                let h = (v - mean) * inv;
                xhat.push(h);
                out.push(h * g[i] + b[i]);
            }
        }
        let shape = self.value(x).shape().to_vec();
        let tracked = self.tracked(x) || self.tracked(gain) || self.tracked(bias);
        self.push(
            Tensor::from_parts(shape, out),
            Op::LayerNorm {
                x,
                gain,
                bias,
                xhat,
                inv_std,
            },
            tracked,
            "layernorm",
        )
    }

    /// Inverted dropout. Identity (no node recorded) when not training or `rate == 0`.
    pub fn dropout(&mut self, x: Var, rate: f64, training: bool, rng: &mut SeededRng) -> Result<Var> {
        if !(0.0..1.0).contains(&rate) {
            return Err(Error::contract(format!("dropout rate {rate} outside [0, 1)")));
        }
        if !training || rate == 0.0 {
            return Ok(x);
        }
        let keep = T::lit(1.0 / (1.0 - rate));
        let t = self.value(x);
        let mask: Vec<T> = (0..t.numel())
            .map(|_| if uniform(rng) < rate { T::zero() } else { keep })
            .collect();
        let out = t.data().iter().zip(&mask).map(|(&v, &m)| v * m).collect();
        let shape = t.shape().to_vec();
        let tracked = self.tracked(x);
        self.push(Tensor::from_parts(shape, out), Op::Mask { x, mask }, tracked, "dropout")
    }

    /// Columns `start..start+len` of a matrix.
    pub fn slice_cols(&mut self, x: Var, start: usize, len: usize) -> Result<Var> {
        let (r, c) = matrix_dims(self.value(x).shape(), "slice_cols")?;
        if len == 0 || start + len > c {
            return Err(Error::shape("slice_cols", format!("{start}..{} of {c}", start + len)));
        }
        let src = self.value(x).data();
        let out: Vec<T> = (0..r)
            .flat_map(|i| src[i * c + start..i * c + start + len].iter().copied())
            .collect();
        let tracked = self.tracked(x);
        self.push(Tensor::from_parts(vec![r, len], out), Op::SliceCols { x, start }, tracked, "slice_cols")
    }

    /// Rows `start..start+len` of a matrix.
    pub fn slice_rows(&mut self, x: Var, start: usize, len: usize) -> Result<Var> {
        let (r, c) = matrix_dims(self.value(x).shape(), "slice_rows")?;
        if len == 0 || start + len > r {
            return Err(Error::shape("slice_rows", format!("{start}..{} of {r}", start + len)));
        }
        let out = self.value(x).data()[start * c..(start + len) * c].to_vec();
        let tracked = self.tracked(x);
        self.push(Tensor::from_parts(vec![len, c], out), Op::SliceRows { x, start }, tracked, "slice_rows")
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var> {
        let dims = parts
            .iter()
            .map(|&p| matrix_dims(self.value(p).shape(), "concat_cols"))
            .collect::<Result<Vec<_>>>()?;
        let rows = dims.first().map(|d| d.0).ok_or_else(|| Error::shape("concat_cols", "no inputs"))?;
        if dims.iter().any(|d| d.0 != rows) {
            return Err(Error::shape("concat_cols", format!("row counts {dims:?}")));
        }
        let total: usize = dims.iter().map(|d| d.1).sum();
        let mut out = Vec::with_capacity(rows * total);
        for i in 0..rows {
            for (&p, &(_, c)) in parts.iter().zip(&dims) {
                out.extend_from_slice(&self.value(p).data()[i * c..(i + 1) * c]);
            }
        }
        let tracked = parts.iter().any(|&p| self.tracked(p));
        self.push(
            Tensor::from_parts(vec![rows, total], out),
            Op::ConcatCols(parts.to_vec()),
            tracked,
            "concat_cols",
        )
    }

    /// Stacks matrices (or vectors, as single rows) vertically.
    pub fn concat_rows(&mut self, parts: &[Var]) -> Result<Var> {
        let dims = parts
            .iter()
            .map(|&p| matrix_dims(self.value(p).shape(), "concat_rows"))
            .collect::<Result<Vec<_>>>()?;
        let cols = dims.first().map(|d| d.1).ok_or_else(|| Error::shape("concat_rows", "no inputs"))?;
        if dims.iter().any(|d| d.1 != cols) {
            return Err(Error::shape("concat_rows", format!("column counts {dims:?}")));
        }
        let rows: usize = dims.iter().map(|d| d.0).sum();
        let mut out = Vec::with_capacity(rows * cols);
        for &p in parts {
            out.extend_from_slice(self.value(p).data());
        }
        let tracked = parts.iter().any(|&p| self.tracked(p));
        self.push(
            Tensor::from_parts(vec![rows, cols], out),
            Op::ConcatRows(parts.to_vec()),
            tracked,
            "concat_rows",
        )
    }

    /// Natural log of `max(x, floor)`.
    pub fn log(&mut self, x: Var, floor: T) -> Result<Var> {
        let t = self.value(x);
        let out = t.data().iter().map(|&v| v.max(floor).ln()).collect();
        let shape = t.shape().to_vec();
        let tracked = self.tracked(x);
        self.push(Tensor::from_parts(shape, out), Op::Log { x, floor }, tracked, "log")
    }

    pub fn sum(&mut self, x: Var) -> Result<Var> {
        let total = self.value(x).data().iter().copied().sum();
        let tracked = self.tracked(x);
        self.push(Tensor::scalar(total), Op::Sum(x), tracked, "sum")
    }

    pub fn mean(&mut self, x: Var) -> Result<Var> {
        let n = T::from_usize(self.value(x).numel()).unwrap();
        let s = self.sum(x)?;
        self.scale(s, T::one() / n)
    }

    /// Elementwise `f` with a caller-supplied derivative rule.
    pub fn map(&mut self, x: Var, f: fn(T) -> T, derivative: fn(T) -> T) -> Result<Var> {
        let t = self.value(x);
        let out = t.data().iter().map(|&v| f(v)).collect();
        let shape = t.shape().to_vec();
        let tracked = self.tracked(x);
        self.push(Tensor::from_parts(shape, out), Op::Map { x, derivative }, tracked, "map")
    }

    fn check_targets(&self, probs: Var, targets: &Tensor<T>) -> Result<(usize, usize)> {
        let p = self.value(probs);
        let (batch, k) = match *p.shape() {
            [b, k] => (b, k),
            [k] => (1, k),
            _ => return Err(Error::shape("cross_entropy", format!("{:?}", p.shape()))),
        };
        if targets.numel() != batch * k {
            return Err(Error::shape(
                "cross_entropy",
                format!("probabilities {:?} vs targets {:?}", p.shape(), targets.shape()),
            ));
        }
        for (i, row) in targets.data().chunks_exact(k).enumerate() {
            let ones = row.iter().filter(|&&v| v == T::one()).count();
            let zeros = row.iter().filter(|&&v| v == T::zero()).count();
            if ones != 1 || zeros != k - 1 {
                return Err(Error::contract(format!("target row {i} is not one-hot")));
            }
        }
        for (i, row) in p.data().chunks_exact(k).enumerate() {
            let s: f64 = row.iter().map(|v| v.as_f64()).sum();
            if (s - 1.0).abs() > 1e-6 {
                return Err(Error::contract(format!("probability row {i} sums to {s}")));
            }
        }
        Ok((batch, k))
    }

    /// Mean categorical cross-entropy of `probs` ([batch × k]) against one-hot `targets`.
    ///
    /// When `probs` came straight from [`Tape::softmax`], the gradient skips the
    /// softmax node and lands on its logits as `(p - t) / batch`.
    pub fn cross_entropy(&mut self, probs: Var, targets: &Tensor<T>) -> Result<Var> {
        let (batch, _) = self.check_targets(probs, targets)?;
        let floor = T::lit(PROB_FLOOR);
        let p = self.value(probs).data();
        let total: T = p
            .iter()
            .zip(targets.data())
            .filter(|(_, &t)| t == T::one())
            .map(|(&v, _)| -v.max(floor).ln())
            .sum();
        let loss = Tensor::scalar(total / T::from_usize(batch).unwrap());
        let targets = targets.data().to_vec();
        let op = match self.nodes[probs.0].op {
            Op::Softmax(logits) => Op::SoftmaxCrossEntropy {
                logits,
                probs,
                targets,
            },
            _ => Op::CrossEntropy { probs, targets },
        };
        let tracked = self.tracked(probs);
        self.push(loss, op, tracked, "cross_entropy")
    }

    /// Reverse sweep from a scalar `loss`.
    pub fn backward(&self, loss: Var) -> Result<Gradients<T>> {
        if self.value(loss).numel() != 1 {
            return Err(Error::contract(format!(
                "backward needs a scalar loss, got shape {:?}",
                self.value(loss).shape()
            )));
        }
        let mut grads: Vec<Option<Vec<T>>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[loss.0] = Some(vec![T::one()]);

        for idx in (0..=loss.0).rev() {
            let Some(g) = grads[idx].take() else { continue };
            let node = &self.nodes[idx];
            if node.tracked {
                self.propagate(node, &g, &mut grads);
            }
            grads[idx] = Some(g);
        }
        if grads.iter().any(|g| g.as_ref().is_some_and(|g| g.iter().any(|v| !v.is_finite()))) {
            return Err(Error::NonFinite("backward"));
        }
        Ok(Gradients { grads })
    }

    fn propagate(&self, node: &Node<T>, g: &[T], grads: &mut [Option<Vec<T>>]) {
        let acc = |v: Var, grads: &mut [Option<Vec<T>>], f: &mut dyn FnMut(&mut [T])| {
            if !self.tracked(v) {
                return;
            }
            let slot = grads[v.0].get_or_insert_with(|| vec![T::zero(); self.value(v).numel()]);
            f(slot);
        };
        match &node.op {
            Op::Leaf => {}
            &Op::MatMul(a, b) => {
                let (m, k) = matrix_dims(self.value(a).shape(), "matmul").unwrap();
                let n = self.value(b).shape()[1];
                let (av, bv) = (self.value(a).data(), self.value(b).data());
                acc(a, grads, &mut |s| kernels::matmul_nt_acc(g, bv, m, n, k, s));
                acc(b, grads, &mut |s| kernels::matmul_tn_acc(av, g, m, k, n, s));
            }
            &Op::Add(a, b) => {
                for v in [a, b] {
                    acc(v, grads, &mut |s| s.iter_mut().zip(g).for_each(|(x, &y)| *x += y));
                }
            }
            &Op::AddRow(a, row) => {
                acc(a, grads, &mut |s| s.iter_mut().zip(g).for_each(|(x, &y)| *x += y));
                let n = self.value(row).numel();
                acc(row, grads, &mut |s| {
                    for chunk in g.chunks_exact(n) {
                        s.iter_mut().zip(chunk).for_each(|(x, &y)| *x += y);
                    }
                });
            }
            &Op::Mul(a, b) => {
                let (av, bv) = (self.value(a).data(), self.value(b).data());
                acc(a, grads, &mut |s| {
                    for i in 0..s.len() {
                        s[i] += g[i] * bv[i];
                    }
                });
                acc(b, grads, &mut |s| {
                    for i in 0..s.len() {
                        s[i] += g[i] * av[i];
                    }
                });
            }
            &Op::Scale(a, factor) => {
                acc(a, grads, &mut |s| s.iter_mut().zip(g).for_each(|(x, &y)| *x += y * factor));
            }
            &Op::Transpose(a) => {
                let shape = node.value.shape();
                let back = kernels::transpose(g, shape[0], shape[1]);
                acc(a, grads, &mut |s| s.iter_mut().zip(&back).for_each(|(x, &y)| *x += y));
            }
            &Op::Softmax(a) => {
                let y = node.value.data();
                let n = node.value.last_dim();
                acc(a, grads, &mut |s| {
                    for ((srow, yrow), grow) in s.chunks_exact_mut(n).zip(y.chunks_exact(n)).zip(g.chunks_exact(n)) {
                        let dot: T = yrow.iter().zip(grow).map(|(&p, &q)| p * q).sum();
                        for i in 0..n {
                            srow[i] += yrow[i] * (grow[i] - dot);
                        }
                    }
                });
            }
            &Op::Gelu(a) => {
                let x = self.value(a).data();
                acc(a, grads, &mut |s| {
                    for i in 0..s.len() {
                        let d = kernels::std_normal_cdf(x[i]) + x[i] * kernels::std_normal_pdf(x[i]);
                        s[i] += g[i] * d;
                    }
                });
            }
            Op::LayerNorm {
                x,
                gain,
                bias,
                xhat,
                inv_std,
            } => {
                let n = node.value.last_dim();
                let nf = T::from_usize(n).unwrap();
                let gv = self.value(*gain).data();
                acc(*gain, grads, &mut |s| {
                    for (hrow, grow) in xhat.chunks_exact(n).zip(g.chunks_exact(n)) {
                        for i in 0..n {
                            s[i] += grow[i] * hrow[i];
                        }
                    }
                });
                acc(*bias, grads, &mut |s| {
                    for grow in g.chunks_exact(n) {
                        s.iter_mut().zip(grow).for_each(|(x, &y)| *x += y);
                    }
                });
                acc(*x, grads, &mut |s| {
                    for (r, (hrow, grow)) in xhat.chunks_exact(n).zip(g.chunks_exact(n)).enumerate() {
                        let mut sum_d = T::zero();
                        let mut sum_dh = T::zero();
                        for i in 0..n {
                            let d = grow[i] * gv[i];
                            sum_d += d;
                            sum_dh += d * hrow[i];
                        }
                        let scale = inv_std[r] / nf;
                        for i in 0..n {
                            let d = grow[i] * gv[i];
                            s[r * n + i] += scale * (nf * d - sum_d - hrow[i] * sum_dh);
                        }
                    }
                });
            }
            Op::Mask { x, mask } => {
                acc(*x, grads, &mut |s| {
                    for i in 0..s.len() {
                        s[i] += g[i] * mask[i];
                    }
                });
            }
            &Op::SliceCols { x, start } => {
                let (r, len) = (node.value.shape()[0], node.value.shape()[1]);
                let c = self.value(x).last_dim();
                acc(x, grads, &mut |s| {
                    for i in 0..r {
                        for j in 0..len {
                            s[i * c + start + j] += g[i * len + j];
                        }
                    }
                });
            }
            &Op::SliceRows { x, start } => {
                let c = node.value.shape()[1];
                acc(x, grads, &mut |s| {
                    s[start * c..start * c + g.len()]
                        .iter_mut()
                        .zip(g)
                        .for_each(|(x, &y)| *x += y);
                });
            }
            Op::ConcatCols(parts) => {
                let rows = node.value.shape()[0];
                let total = node.value.shape()[1];
                let mut offset = 0;
                for &p in parts {
                    let c = self.value(p).numel() / rows;
                    acc(p, grads, &mut |s| {
                        for i in 0..rows {
                            for j in 0..c {
                                s[i * c + j] += g[i * total + offset + j];
                            }
                        }
                    });
                    offset += c;
                }
            }
            Op::ConcatRows(parts) => {
                let mut offset = 0;
                for &p in parts {
                    let len = self.value(p).numel();
                    acc(p, grads, &mut |s| {
                        s.iter_mut().zip(&g[offset..offset + len]).for_each(|(x, &y)| *x += y);
                    });
                    offset += len;
                }
            }
            &Op::Log { x, floor } => {
                let xv = self.value(x).data();
                acc(x, grads, &mut |s| {
                    for i in 0..s.len() {
                        if xv[i] > floor {
                            s[i] += g[i] / xv[i];
                        }
                    }
                });
            }
            &Op::Sum(x) => {
                acc(x, grads, &mut |s| s.iter_mut().for_each(|v| *v += g[0]));
            }
            Op::SoftmaxCrossEntropy {
                logits,
                probs,
                targets,
            } => {
                let p = self.value(*probs).data();
                let batch = T::from_usize(p.len() / self.value(*probs).last_dim()).unwrap();
                let scale = g[0] / batch;
                acc(*logits, grads, &mut |s| {
                    for i in 0..s.len() {
                        s[i] += (p[i] - targets[i]) * scale;
                    }
                });
            }
            Op::CrossEntropy { probs, targets } => {
                let p = self.value(*probs).data();
                let batch = T::from_usize(p.len() / self.value(*probs).last_dim()).unwrap();
                let floor = T::lit(PROB_FLOOR);
                acc(*probs, grads, &mut |s| {
                    for i in 0..s.len() {
                        if targets[i] != T::zero() && p[i] > floor {
                            s[i] -= g[0] * targets[i] / (p[i] * batch);
                        }
                    }
                });
            }
            &Op::Map { x, derivative } => {
                let xv = self.value(x).data();
                acc(x, grads, &mut |s| {
                    for i in 0..s.len() {
                        s[i] += g[i] * derivative(xv[i]);
                    }
                });
            }
        }
    }
}
