//! Reverse-mode differentiation over matrix-valued operations.
//!
//! A [`Tape`] records every operation of one forward pass together with its
//! value. [`Tape::backward`] walks the record once in reverse, accumulating
//! adjoints, and adds parameter gradients into the [`ParamSet`].
//!
//! Batched tensors are `B×n` matrices with one row per example. Sequences
//! of batches are stacked time-major into `T·B×n` matrices, so row
//! `t·B + b` holds step `t` of example `b`.

use std::collections::HashMap;

use super::float::Float;
use super::matrix::{gemm, Matrix};
use super::param::{ParamId, ParamSet};
use super::NnError;

/// Handle to a recorded value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

#[derive(Debug)]
enum Op<F> {
    Input,
    Param(ParamId),
    MatMulT { x: Var, w: Var },
    AddRow { x: Var, bias: Var },
    Add { a: Var, b: Var },
    Mul { a: Var, b: Var },
    Scale { x: Var, c: F },
    Sigmoid(Var),
    Tanh(Var),
    ConcatCols(Vec<Var>),
    SliceCols { x: Var, start: usize },
    StackRows(Vec<Var>),
    SliceRows { x: Var, start: usize },
    Gather { table: Var, ids: Vec<usize> },
    MulConst { x: Var, mask: Vec<F> },
    Select { take_a: Vec<bool>, a: Var, b: Var },
    LstmCell { z: Var, prev: Var, acts: Vec<F>, tanh_c: Vec<F> },
    AttnScores { proj: Var, query: Var, v: Var, act: Vec<F> },
    Softmax { x: Var },
    WeightedSum { weights: Var, states: Var },
    CopyDist { weights: Var, ids: Vec<usize>, include: Vec<bool>, norm: Vec<F> },
    Mix { alpha: Var, a: Var, b: Var },
    Nll { probs: Var, targets: Vec<usize>, weights: Vec<F>, floor: F },
    Sum(Vec<Var>),
    SumAll(Var),
}

#[derive(Debug)]
struct Node<F> {
    value: Matrix<F>,
    op: Op<F>,
}

/// Probability assigned to a target that is treated as zero by [`Tape::nll`].
pub const PROB_FLOOR: f64 = 1e-12;

fn grad_slot<'a, F: Float>(grads: &'a mut [Option<Matrix<F>>], nodes: &[Node<F>], v: Var) -> &'a mut Matrix<F> {
    let (r, c) = nodes[v.0].value.shape();
    grads[v.0].get_or_insert_with(|| Matrix::zeros(r, c))
}

fn total<F: Float>(it: impl Iterator<Item = F>) -> F {
    it.fold(F::zero(), |a, b| a + b)
}

fn sigmoid<F: Float>(x: F) -> F {
    F::one() / (F::one() + (-x).exp())
}

#[derive(Debug, Default)]
pub struct Tape<F> {
    nodes: Vec<Node<F>>,
    param_vars: HashMap<ParamId, Var>,
    floored: usize,
}

impl<F: Float> Tape<F> {
    pub fn new() -> Self {
        Self {
            nodes: Vec::new(),
            param_vars: HashMap::new(),
            floored: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Matrix<F> {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> (usize, usize) {
        self.nodes[v.0].value.shape()
    }

    /// Number of target probabilities clamped to [`PROB_FLOOR`] so far.
    pub fn floored_targets(&self) -> usize {
        self.floored
    }

    fn push(&mut self, value: Matrix<F>, op: Op<F>) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    pub fn input(&mut self, value: Matrix<F>) -> Var {
        self.push(value, Op::Input)
    }

    pub fn zeros(&mut self, rows: usize, cols: usize) -> Var {
        self.input(Matrix::zeros(rows, cols))
    }

    /// Records a parameter leaf. Repeated calls for the same id return the
    /// same handle.
    pub fn param(&mut self, params: &ParamSet<F>, id: ParamId) -> Var {
        if let Some(&v) = self.param_vars.get(&id) {
            return v;
        }
        let v = self.push(params.value(id).clone(), Op::Param(id));
        self.param_vars.insert(id, v);
        v
    }

    /// `x · wᵀ` for `x: B×I`, `w: O×I`.
    pub fn matmul_t(&mut self, x: Var, w: Var) -> Var {
        let (b, i) = self.shape(x);
        let (o, i2) = self.shape(w);
        assert_eq!(i, i2, "matmul_t: x has {i} columns, w has {i2}");
        let mut y = Matrix::zeros(b, o);
        gemm(F::one(), self.value(x), false, self.value(w), true, F::zero(), &mut y);
        self.push(y, Op::MatMulT { x, w })
    }

    /// Adds a `1×C` row to every row of `x`.
    pub fn add_row(&mut self, x: Var, bias: Var) -> Var {
        let (r, c) = self.shape(x);
        assert_eq!(self.shape(bias), (1, c), "add_row: bias shape");
        let mut y = self.value(x).clone();
        let bv = self.value(bias).data().to_vec();
        for row in 0..r {
            for (yv, &bb) in y.row_mut(row).iter_mut().zip(&bv) {
                *yv += bb;
            }
        }
        self.push(y, Op::AddRow { x, bias })
    }

    /// `x · wᵀ + bias`.
    pub fn linear(&mut self, x: Var, w: Var, bias: Var) -> Var {
        let y = self.matmul_t(x, w);
        self.add_row(y, bias)
    }

    fn zip_map(&self, a: Var, b: Var, f: impl Fn(F, F) -> F) -> Matrix<F> {
        let (va, vb) = (self.value(a), self.value(b));
        assert_eq!(va.shape(), vb.shape(), "elementwise shape mismatch");
        let data = va.data().iter().zip(vb.data()).map(|(&x, &y)| f(x, y)).collect();
        Matrix::from_vec(va.rows(), va.cols(), data)
    }

    fn map(&self, x: Var, f: impl Fn(F) -> F) -> Matrix<F> {
        let v = self.value(x);
        Matrix::from_vec(v.rows(), v.cols(), v.data().iter().map(|&e| f(e)).collect())
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let y = self.zip_map(a, b, |x, y| x + y);
        self.push(y, Op::Add { a, b })
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        let y = self.zip_map(a, b, |x, y| x * y);
        self.push(y, Op::Mul { a, b })
    }

    pub fn scale(&mut self, x: Var, c: F) -> Var {
        let y = self.map(x, |e| e * c);
        self.push(y, Op::Scale { x, c })
    }

    pub fn sigmoid(&mut self, x: Var) -> Var {
        let y = self.map(x, sigmoid);
        self.push(y, Op::Sigmoid(x))
    }

    pub fn tanh(&mut self, x: Var) -> Var {
        let y = self.map(x, F::tanh);
        self.push(y, Op::Tanh(x))
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Var {
        assert!(!parts.is_empty(), "concat of nothing");
        let rows = self.shape(parts[0]).0;
        let cols: usize = parts.iter().map(|&p| self.shape(p).1).sum();
        let mut y = Matrix::zeros(rows, cols);
        for r in 0..rows {
            let mut off = 0;
            for &p in parts {
                let v = self.value(p);
                assert_eq!(v.rows(), rows, "concat_cols: row mismatch");
                let w = v.cols();
                y.row_mut(r)[off..off + w].copy_from_slice(v.row(r));
                off += w;
            }
        }
        self.push(y, Op::ConcatCols(parts.to_vec()))
    }

    pub fn slice_cols(&mut self, x: Var, start: usize, len: usize) -> Var {
        let v = self.value(x);
        assert!(start + len <= v.cols(), "slice_cols out of range");
        let mut y = Matrix::zeros(v.rows(), len);
        for r in 0..v.rows() {
            y.row_mut(r).copy_from_slice(&v.row(r)[start..start + len]);
        }
        self.push(y, Op::SliceCols { x, start })
    }

    pub fn stack_rows(&mut self, parts: &[Var]) -> Var {
        assert!(!parts.is_empty(), "stack of nothing");
        let cols = self.shape(parts[0]).1;
        let mut data = Vec::new();
        for &p in parts {
            let v = self.value(p);
            assert_eq!(v.cols(), cols, "stack_rows: column mismatch");
            data.extend_from_slice(v.data());
        }
        let rows = data.len() / cols.max(1);
        self.push(Matrix::from_vec(rows, cols, data), Op::StackRows(parts.to_vec()))
    }

    pub fn slice_rows(&mut self, x: Var, start: usize, len: usize) -> Var {
        let v = self.value(x);
        assert!(start + len <= v.rows(), "slice_rows out of range");
        let c = v.cols();
        let y = Matrix::from_vec(len, c, v.data()[start * c..(start + len) * c].to_vec());
        self.push(y, Op::SliceRows { x, start })
    }

    /// Row lookup: output row `r` is `table[ids[r]]`.
    pub fn gather(&mut self, table: Var, ids: &[usize]) -> Var {
        let t = self.value(table);
        let mut y = Matrix::zeros(ids.len(), t.cols());
        for (r, &id) in ids.iter().enumerate() {
            assert!(id < t.rows(), "gather index {id} out of range");
            y.row_mut(r).copy_from_slice(t.row(id));
        }
        self.push(
            y,
            Op::Gather {
                table,
                ids: ids.to_vec(),
            },
        )
    }

    /// Elementwise product with a constant (e.g. a dropout mask).
    pub fn mul_const(&mut self, x: Var, mask: Vec<F>) -> Var {
        let v = self.value(x);
        assert_eq!(v.len(), mask.len(), "mask length");
        let data = v.data().iter().zip(&mask).map(|(&a, &m)| a * m).collect();
        let y = Matrix::from_vec(v.rows(), v.cols(), data);
        self.push(y, Op::MulConst { x, mask })
    }

    /// Row-wise choice: row `r` comes from `a` if `take_a[r]`, else from `b`.
    pub fn select_rows(&mut self, take_a: &[bool], a: Var, b: Var) -> Var {
        let (va, vb) = (self.value(a), self.value(b));
        assert_eq!(va.shape(), vb.shape(), "select_rows shape");
        assert_eq!(take_a.len(), va.rows(), "select_rows mask length");
        let mut y = vb.clone();
        for (r, &t) in take_a.iter().enumerate() {
            if t {
                y.row_mut(r).copy_from_slice(va.row(r));
            }
        }
        self.push(
            y,
            Op::Select {
                take_a: take_a.to_vec(),
                a,
                b,
            },
        )
    }

    /// Fused LSTM update. `z: B×4H` holds gate pre-activations in the order
    /// input, forget, candidate, output; `prev: B×2H` is `[h | c]` of the
    /// previous step. Returns `[h | c]` of this step.
    pub fn lstm_cell(&mut self, z: Var, prev: Var) -> Var {
        let (b, h4) = self.shape(z);
        let h = h4 / 4;
        assert_eq!(h4, 4 * h, "lstm_cell: z width must be 4H");
        assert_eq!(self.shape(prev), (b, 2 * h), "lstm_cell: prev must be B×2H");
        let zv = self.value(z);
        let pv = self.value(prev);
        let mut acts = vec![F::zero(); b * h4];
        let mut tanh_c = vec![F::zero(); b * h];
        let mut y = Matrix::zeros(b, 2 * h);
        for r in 0..b {
            let zr = zv.row(r);
            let c_prev = &pv.row(r)[h..];
            let a = &mut acts[r * h4..(r + 1) * h4];
            for k in 0..h {
                a[k] = sigmoid(zr[k]);
                a[h + k] = sigmoid(zr[h + k]);
                a[2 * h + k] = zr[2 * h + k].tanh();
                a[3 * h + k] = sigmoid(zr[3 * h + k]);
            }
            let yr = y.row_mut(r);
            for k in 0..h {
                let c = a[h + k] * c_prev[k] + a[k] * a[2 * h + k];
                let tc = c.tanh();
                tanh_c[r * h + k] = tc;
                yr[k] = a[3 * h + k] * tc;
                yr[h + k] = c;
            }
        }
        self.push(y, Op::LstmCell { z, prev, acts, tanh_c })
    }

    /// Gate activations (input, forget, candidate, output) recorded by an
    /// [`lstm_cell`](Self::lstm_cell) node.
    pub fn lstm_gates(&self, v: Var) -> Option<&[F]> {
        match &self.nodes[v.0].op {
            Op::LstmCell { acts, .. } => Some(acts),
            _ => None,
        }
    }

    /// Additive attention scores: `score[b,t] = v · tanh(proj[t·B+b] + query[b])`.
    /// `proj: T·B×A`, `query: B×A`, `v: 1×A`; result `B×T`.
    pub fn attn_scores(&mut self, proj: Var, query: Var, v: Var) -> Var {
        let (b, a) = self.shape(query);
        let (tb, a2) = self.shape(proj);
        assert_eq!(a, a2, "attn_scores: width mismatch");
        assert_eq!(self.shape(v), (1, a), "attn_scores: v shape");
        assert!(b > 0 && tb % b == 0, "attn_scores: rows not a multiple of batch");
        let steps = tb / b;
        let (pv, qv, vv) = (self.value(proj), self.value(query), self.value(v));
        let mut act = vec![F::zero(); tb * a];
        let mut y = Matrix::zeros(b, steps);
        for t in 0..steps {
            for r in 0..b {
                let row = t * b + r;
                let (p, q) = (pv.row(row), qv.row(r));
                let out = &mut act[row * a..(row + 1) * a];
                let mut s = F::zero();
                for k in 0..a {
                    let e = (p[k] + q[k]).tanh();
                    out[k] = e;
                    s += vv.data()[k] * e;
                }
                y.set(r, t, s);
            }
        }
        self.push(y, Op::AttnScores { proj, query, v, act })
    }

    /// Row-wise softmax.
    pub fn softmax(&mut self, x: Var) -> Var {
        self.softmax_masked(x, None)
    }

    /// Row-wise softmax where entries with `mask == false` get probability 0.
    /// Every row must keep at least one entry.
    pub fn softmax_masked(&mut self, x: Var, mask: Option<&[bool]>) -> Var {
        let v = self.value(x);
        let (rows, cols) = v.shape();
        if let Some(m) = mask {
            assert_eq!(m.len(), rows * cols, "softmax mask length");
        }
        let keep = |i: usize| mask.is_none_or(|m| m[i]);
        let mut y = Matrix::zeros(rows, cols);
        for r in 0..rows {
            let xr = v.row(r);
            let mx = (0..cols)
                .filter(|&c| keep(r * cols + c))
                .map(|c| xr[c])
                .reduce(|a, b| if b > a { b } else { a })
                .unwrap_or_else(|| panic!("softmax row {r} fully masked"));
            let yr = y.row_mut(r);
            let mut z = F::zero();
            for c in 0..cols {
                if keep(r * cols + c) {
                    yr[c] = (xr[c] - mx).exp();
                    z += yr[c];
                }
            }
            for e in yr.iter_mut() {
                *e = *e / z;
            }
        }
        self.push(y, Op::Softmax { x })
    }

    /// `out[b] = Σ_t weights[b,t] · states[t·B+b]`.
    pub fn weighted_sum(&mut self, weights: Var, states: Var) -> Var {
        let (b, steps) = self.shape(weights);
        let (tb, d) = self.shape(states);
        assert_eq!(tb, b * steps, "weighted_sum: states must be T·B rows");
        let (wv, sv) = (self.value(weights), self.value(states));
        let mut y = Matrix::zeros(b, d);
        for t in 0..steps {
            for r in 0..b {
                let w = wv.get(r, t);
                if w == F::zero() {
                    continue;
                }
                let s = sv.row(t * b + r);
                for (o, &x) in y.row_mut(r).iter_mut().zip(s) {
                    *o += w * x;
                }
            }
        }
        self.push(y, Op::WeightedSum { weights, states })
    }

    /// Scatters attention weights onto vocabulary entries: with
    /// `ids: B×T` (row-major) and `include: B×T`, output row `b` puts
    /// `weights[b,t] / Z_b` on column `ids[b,t]` for included positions,
    /// where `Z_b` renormalizes over included positions.
    pub fn copy_distribution(
        &mut self,
        weights: Var,
        ids: &[usize],
        include: &[bool],
        vocab: usize,
    ) -> Var {
        let (b, steps) = self.shape(weights);
        assert_eq!(ids.len(), b * steps, "copy_distribution: ids length");
        assert_eq!(include.len(), b * steps, "copy_distribution: include length");
        let wv = self.value(weights);
        let mut y = Matrix::zeros(b, vocab);
        let mut norm = vec![F::zero(); b];
        for r in 0..b {
            let mut z = F::zero();
            for t in 0..steps {
                if include[r * steps + t] {
                    z += wv.get(r, t);
                }
            }
            assert!(z > F::zero(), "copy_distribution: no copyable position in row {r}");
            norm[r] = z;
            for t in 0..steps {
                let i = r * steps + t;
                if include[i] {
                    assert!(ids[i] < vocab, "copy_distribution: id out of range");
                    let cur = y.get(r, ids[i]);
                    y.set(r, ids[i], cur + wv.get(r, t) / z);
                }
            }
        }
        self.push(
            y,
            Op::CopyDist {
                weights,
                ids: ids.to_vec(),
                include: include.to_vec(),
                norm,
            },
        )
    }

    /// `alpha·a + (1 − alpha)·b` with `alpha: B×1`.
    pub fn mix(&mut self, alpha: Var, a: Var, b: Var) -> Var {
        let (rows, _) = self.shape(a);
        assert_eq!(self.shape(alpha), (rows, 1), "mix: alpha must be B×1");
        let (av, bv, al) = (self.value(a), self.value(b), self.value(alpha));
        assert_eq!(av.shape(), bv.shape(), "mix: shapes differ");
        let mut y = av.clone();
        for r in 0..rows {
            let g = al.get(r, 0);
            for (o, &x) in y.row_mut(r).iter_mut().zip(bv.row(r)) {
                *o = g * *o + (F::one() - g) * x;
            }
        }
        self.push(y, Op::Mix { alpha, a, b })
    }

    /// Weighted negative log-likelihood `−Σ_b weights[b] · ln p[b, targets[b]]`,
    /// with probabilities clamped below at [`PROB_FLOOR`].
    pub fn nll(&mut self, probs: Var, targets: &[usize], weights: &[F]) -> Var {
        let p = self.value(probs);
        assert_eq!(targets.len(), p.rows(), "nll: one target per row");
        assert_eq!(weights.len(), p.rows(), "nll: one weight per row");
        let floor = F::from_f64_lossy(PROB_FLOOR);
        let mut loss = F::zero();
        let mut floored = 0;
        for (r, (&t, &w)) in targets.iter().zip(weights).enumerate() {
            if w == F::zero() {
                continue;
            }
            let pt = p.get(r, t);
            if pt <= floor {
                floored += 1;
            }
            loss -= w * pt.max(floor).ln();
        }
        self.floored += floored;
        self.push(
            Matrix::filled(1, 1, loss),
            Op::Nll {
                probs,
                targets: targets.to_vec(),
                weights: weights.to_vec(),
                floor,
            },
        )
    }

    /// Elementwise sum of equally shaped values.
    pub fn sum(&mut self, parts: &[Var]) -> Var {
        assert!(!parts.is_empty(), "sum of nothing");
        let mut y = self.value(parts[0]).clone();
        for &p in &parts[1..] {
            y.add_assign(self.value(p));
        }
        self.push(y, Op::Sum(parts.to_vec()))
    }

    /// Sum of all entries, as a `1×1` value.
    pub fn sum_all(&mut self, x: Var) -> Var {
        let s = total(self.value(x).data().iter().copied());
        self.push(Matrix::filled(1, 1, s), Op::SumAll(x))
    }

    /// Back-propagates from the scalar `loss`, adding parameter gradients
    /// into `params`. Each recorded node is visited once, newest first.
    pub fn backward(&self, loss: Var, params: &mut ParamSet<F>) -> Result<(), NnError> {
        if self.shape(loss) != (1, 1) {
            return Err(NnError::Contract(format!(
                "backward needs a scalar loss, got shape {:?}",
                self.shape(loss)
            )));
        }
        let mut grads: Vec<Option<Matrix<F>>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[loss.0] = Some(Matrix::filled(1, 1, F::one()));
        for i in (0..=loss.0).rev() {
            let Some(dy) = grads[i].take() else { continue };
            self.backprop_node(i, &dy, &mut grads, params);
        }
        Ok(())
    }

    fn backprop_node(
        &self,
        i: usize,
        dy: &Matrix<F>,
        grads: &mut [Option<Matrix<F>>],
        params: &mut ParamSet<F>,
    ) {
        let node = &self.nodes[i];
        let y = &node.value;
        let nodes = &self.nodes;
        macro_rules! acc {
            ($v:expr) => {
                grad_slot(grads, nodes, $v)
            };
        }
        match &node.op {
            Op::Input => {}
            Op::Param(id) => params.get_mut(*id).grad.add_assign(dy),
            Op::MatMulT { x, w } => {
                let (xv, wv) = (self.value(*x), self.value(*w));
                gemm(F::one(), dy, false, wv, false, F::one(), acc!(*x));
                gemm(F::one(), dy, true, xv, false, F::one(), acc!(*w));
            }
            Op::AddRow { x, bias } => {
                acc!(*x).add_assign(dy);
                let db = acc!(*bias);
                for r in 0..dy.rows() {
                    for (g, &d) in db.data_mut().iter_mut().zip(dy.row(r)) {
                        *g += d;
                    }
                }
            }
            Op::Add { a, b } => {
                acc!(*a).add_assign(dy);
                acc!(*b).add_assign(dy);
            }
            Op::Mul { a, b } => {
                let (av, bv) = (self.value(*a), self.value(*b));
                for ((g, &d), &o) in acc!(*a).data_mut().iter_mut().zip(dy.data()).zip(bv.data()) {
                    *g += d * o;
                }
                for ((g, &d), &o) in acc!(*b).data_mut().iter_mut().zip(dy.data()).zip(av.data()) {
                    *g += d * o;
                }
            }
            Op::Scale { x, c } => {
                for (g, &d) in acc!(*x).data_mut().iter_mut().zip(dy.data()) {
                    *g += d * *c;
                }
            }
            Op::Sigmoid(x) => {
                for ((g, &d), &s) in acc!(*x).data_mut().iter_mut().zip(dy.data()).zip(y.data()) {
                    *g += d * s * (F::one() - s);
                }
            }
            Op::Tanh(x) => {
                for ((g, &d), &t) in acc!(*x).data_mut().iter_mut().zip(dy.data()).zip(y.data()) {
                    *g += d * (F::one() - t * t);
                }
            }
            Op::ConcatCols(parts) => {
                let mut off = 0;
                for &p in parts {
                    let w = nodes[p.0].value.cols();
                    let g = acc!(p);
                    for r in 0..dy.rows() {
                        for (o, &d) in g.row_mut(r).iter_mut().zip(&dy.row(r)[off..off + w]) {
                            *o += d;
                        }
                    }
                    off += w;
                }
            }
            Op::SliceCols { x, start } => {
                let w = dy.cols();
                let g = acc!(*x);
                for r in 0..dy.rows() {
                    for (o, &d) in g.row_mut(r)[*start..*start + w].iter_mut().zip(dy.row(r)) {
                        *o += d;
                    }
                }
            }
            Op::StackRows(parts) => {
                let mut off = 0;
                for &p in parts {
                    let n = nodes[p.0].value.len();
                    let g = acc!(p);
                    for (o, &d) in g.data_mut().iter_mut().zip(&dy.data()[off..off + n]) {
                        *o += d;
                    }
                    off += n;
                }
            }
            Op::SliceRows { x, start } => {
                let c = dy.cols();
                let g = acc!(*x);
                let dst = &mut g.data_mut()[start * c..start * c + dy.len()];
                for (o, &d) in dst.iter_mut().zip(dy.data()) {
                    *o += d;
                }
            }
            Op::Gather { table, ids } => {
                let g = acc!(*table);
                for (r, &id) in ids.iter().enumerate() {
                    for (o, &d) in g.row_mut(id).iter_mut().zip(dy.row(r)) {
                        *o += d;
                    }
                }
            }
            Op::MulConst { x, mask } => {
                for ((g, &d), &m) in acc!(*x).data_mut().iter_mut().zip(dy.data()).zip(mask) {
                    *g += d * m;
                }
            }
            Op::Select { take_a, a, b } => {
                for (r, &t) in take_a.iter().enumerate() {
                    let g = acc!(if t { *a } else { *b });
                    for (o, &d) in g.row_mut(r).iter_mut().zip(dy.row(r)) {
                        *o += d;
                    }
                }
            }
            Op::LstmCell {
                z,
                prev,
                acts,
                tanh_c,
            } => {
                let (b, h2) = y.shape();
                let h = h2 / 2;
                let pv = self.value(*prev);
                let mut dz = Matrix::zeros(b, 4 * h);
                let mut dprev = Matrix::zeros(b, 2 * h);
                for r in 0..b {
                    let a = &acts[r * 4 * h..(r + 1) * 4 * h];
                    let dyr = dy.row(r);
                    let c_prev = &pv.row(r)[h..];
                    let dzr = dz.row_mut(r);
                    let mut dcp = vec![F::zero(); h];
                    for k in 0..h {
                        let (ig, fg, gg, og) = (a[k], a[h + k], a[2 * h + k], a[3 * h + k]);
                        let tc = tanh_c[r * h + k];
                        let dh = dyr[k];
                        let dc = dyr[h + k] + dh * og * (F::one() - tc * tc);
                        dzr[k] = dc * gg * ig * (F::one() - ig);
                        dzr[h + k] = dc * c_prev[k] * fg * (F::one() - fg);
                        dzr[2 * h + k] = dc * ig * (F::one() - gg * gg);
                        dzr[3 * h + k] = dh * tc * og * (F::one() - og);
                        dcp[k] = dc * fg;
                    }
                    dprev.row_mut(r)[h..].copy_from_slice(&dcp);
                }
                acc!(*z).add_assign(&dz);
                acc!(*prev).add_assign(&dprev);
            }
            Op::AttnScores { proj, query, v, act } => {
                let (b, a) = self.shape(*query);
                let steps = dy.cols();
                let vv = self.value(*v).data().to_vec();
                let mut dproj = Matrix::zeros(b * steps, a);
                let mut dq = Matrix::zeros(b, a);
                let mut dv = vec![F::zero(); a];
                for t in 0..steps {
                    for r in 0..b {
                        let g = dy.get(r, t);
                        if g == F::zero() {
                            continue;
                        }
                        let row = t * b + r;
                        let e = &act[row * a..(row + 1) * a];
                        let dp = dproj.row_mut(row);
                        for k in 0..a {
                            dv[k] += g * e[k];
                            dp[k] = g * vv[k] * (F::one() - e[k] * e[k]);
                        }
                        let dpr = dproj.row(row).to_vec();
                        for (o, d) in dq.row_mut(r).iter_mut().zip(dpr) {
                            *o += d;
                        }
                    }
                }
                acc!(*proj).add_assign(&dproj);
                acc!(*query).add_assign(&dq);
                for (o, d) in acc!(*v).data_mut().iter_mut().zip(dv) {
                    *o += d;
                }
            }
            Op::Softmax { x } => {
                let g = acc!(*x);
                for r in 0..y.rows() {
                    let (yr, dr) = (y.row(r), dy.row(r));
                    let dot = total(yr.iter().zip(dr).map(|(&a, &b)| a * b));
                    for ((o, &p), &d) in g.row_mut(r).iter_mut().zip(yr).zip(dr) {
                        *o += p * (d - dot);
                    }
                }
            }
            Op::WeightedSum { weights, states } => {
                let (wv, sv) = (self.value(*weights), self.value(*states));
                let (b, steps) = wv.shape();
                let mut dw = Matrix::zeros(b, steps);
                {
                    let ds = acc!(*states);
                    for t in 0..steps {
                        for r in 0..b {
                            let row = t * b + r;
                            let d = dy.row(r);
                            let s = sv.row(row);
                            dw.set(r, t, total(d.iter().zip(s).map(|(&x, &y)| x * y)));
                            let w = wv.get(r, t);
                            if w != F::zero() {
                                for (o, &x) in ds.row_mut(row).iter_mut().zip(d) {
                                    *o += w * x;
                                }
                            }
                        }
                    }
                }
                acc!(*weights).add_assign(&dw);
            }
            Op::CopyDist {
                weights,
                ids,
                include,
                norm,
            } => {
                let (b, steps) = self.shape(*weights);
                let g = acc!(*weights);
                for (r, &norm_r) in norm.iter().enumerate().take(b) {
                    let dot = total(y.row(r).iter().zip(dy.row(r)).map(|(&p, &d)| p * d));
                    for t in 0..steps {
                        let i = r * steps + t;
                        if include[i] {
                            let cur = g.get(r, t);
                            g.set(r, t, cur + (dy.get(r, ids[i]) - dot) / norm_r);
                        }
                    }
                }
            }
            Op::Mix { alpha, a, b } => {
                let (av, bv, al) = (self.value(*a), self.value(*b), self.value(*alpha));
                let rows = av.rows();
                let mut dalpha = Matrix::zeros(rows, 1);
                for r in 0..rows {
                    let s = total(
                        dy
                        .row(r)
                        .iter()
                        .zip(av.row(r).iter().zip(bv.row(r)))
                        .map(|(&d, (&x, &z))| d * (x - z))
                        ,
                    );
                    dalpha.set(r, 0, s);
                }
                {
                    let ga = acc!(*a);
                    for r in 0..rows {
                        let g = al.get(r, 0);
                        for (o, &d) in ga.row_mut(r).iter_mut().zip(dy.row(r)) {
                            *o += g * d;
                        }
                    }
                }
                {
                    let gb = acc!(*b);
                    for r in 0..rows {
                        let g = F::one() - al.get(r, 0);
                        for (o, &d) in gb.row_mut(r).iter_mut().zip(dy.row(r)) {
                            *o += g * d;
                        }
                    }
                }
                acc!(*alpha).add_assign(&dalpha);
            }
            Op::Nll {
                probs,
                targets,
                weights,
                floor,
            } => {
                let p = self.value(*probs);
                let d = dy.scalar();
                let g = acc!(*probs);
                for (r, (&t, &w)) in targets.iter().zip(weights).enumerate() {
                    let pt = p.get(r, t);
                    if w != F::zero() && pt > *floor {
                        let cur = g.get(r, t);
                        g.set(r, t, cur - d * w / pt);
                    }
                }
            }
            Op::Sum(parts) => {
                for &p in parts {
                    acc!(p).add_assign(dy);
                }
            }
            Op::SumAll(x) => {
                let d = dy.scalar();
                for o in acc!(*x).data_mut() {
                    *o += d;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::param::Init;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(11)
    }

    #[test]
    fn sum_gives_ones() {
        let mut ps = ParamSet::<f64>::new();
        let id = ps.add("x", 1, 5, Init::Glorot, &mut rng());
        let mut tape = Tape::new();
        let x = tape.param(&ps, id);
        let loss = tape.sum_all(x);
        tape.backward(loss, &mut ps).unwrap();
        assert_eq!(ps.grad(id).data(), &[1.0; 5]);
    }

    #[test]
    fn square_at_three() {
        let mut ps = ParamSet::<f64>::new();
        let id = ps.insert("x", Matrix::from_f64(1, 1, &[3.0]));
        let mut tape = Tape::new();
        let x = tape.param(&ps, id);
        let sq = tape.mul(x, x);
        tape.backward(sq, &mut ps).unwrap();
        assert_eq!(ps.grad(id).scalar(), 6.0);
    }

    #[test]
    fn non_scalar_backward_rejected() {
        let mut ps = ParamSet::<f64>::new();
        let mut tape = Tape::new();
        let x = tape.zeros(2, 2);
        assert!(matches!(tape.backward(x, &mut ps), Err(NnError::Contract(_))));
    }

    #[test]
    fn masked_softmax_zeroes_masked_entries() {
        let mut tape = Tape::<f64>::new();
        let x = tape.input(Matrix::from_f64(1, 3, &[1.0, 5.0, 2.0]));
        let y = tape.softmax_masked(x, Some(&[true, false, true]));
        let v = tape.value(y);
        assert_eq!(v.get(0, 1), 0.0);
        assert!((v.get(0, 0) + v.get(0, 2) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn copy_distribution_sums_duplicates() {
        let mut tape = Tape::<f64>::new();
        // positions: BOS a b a EOS
        let w = tape.input(Matrix::from_f64(1, 5, &[0.1, 0.2, 0.5, 0.1, 0.1]));
        let ids = [1, 4, 5, 4, 2];
        let include = [false, true, true, true, false];
        let p = tape.copy_distribution(w, &ids, &include, 6);
        let v = tape.value(p);
        assert!((v.get(0, 4) - 0.3 / 0.8).abs() < 1e-12);
        assert!((v.get(0, 5) - 0.5 / 0.8).abs() < 1e-12);
        assert_eq!(v.get(0, 1), 0.0);
    }
}
