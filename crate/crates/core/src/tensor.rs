//! Dense 2-D tensor engine with tape-based reverse-mode differentiation.
//!
//! Every value is a row-major f64 matrix (scalars are 1x1). Operations are
//! recorded on a [`Tape`] when any input requires gradients; `backward`
//! replays the tape in reverse and accumulates exact chain-rule gradients
//! on the leaves. This is all the machinery the GCN/GAT encoders and the
//! contrastive / regression losses need: no broadcasting, no GPU, no
//! higher-order derivatives.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(rows * cols, data.len(), "shape/data length mismatch");
        Tensor { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Tensor::new(rows, cols, vec![0.0; rows * cols])
    }

    pub fn scalar(v: f64) -> Self {
        Tensor::new(1, 1, vec![v])
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = if r == 0 { 0 } else { rows[0].len() };
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Tensor::new(r, c, data)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// Operation kinds recordable on the tape.
///
/// `LeakyRelu` is not in the minimal kernel list but GAT attention scoring
/// needs it; it follows the same elementwise pattern as `Relu`.
#[derive(Debug, Clone)]
pub enum Op {
    Leaf,
    MatMul,
    Add,
    Mul,
    Relu,
    LeakyRelu(f64),
    Exp,
    Log,
    Sum,
    MeanRows,
    L2NormalizeRows,
    SoftmaxRows,
    Transpose,
    Scale(f64),
    ConcatCols,
    GatherRows(Vec<usize>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TensorId(usize);

struct Node {
    op: Op,
    inputs: Vec<TensorId>,
    value: Tensor,
    requires_grad: bool,
    grad: Option<Tensor>,
}

/// Records a forward computation; replayable backward exactly once per pass.
#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

fn matmul(a: &Tensor, b: &Tensor) -> Tensor {
    let (m, k, n) = (a.rows, a.cols, b.cols);
    let mut out = vec![0.0; m * n];
    for i in 0..m {
        for p in 0..k {
            let av = a.data[i * k + p];
            if av == 0.0 {
                continue;
            }
            let brow = &b.data[p * n..(p + 1) * n];
            let orow = &mut out[i * n..(i + 1) * n];
            for j in 0..n {
                orow[j] += av * brow[j];
            }
        }
    }
    Tensor::new(m, n, out)
}

fn transpose(a: &Tensor) -> Tensor {
    let mut out = Tensor::zeros(a.cols, a.rows);
    for i in 0..a.rows {
        for j in 0..a.cols {
            out.set(j, i, a.get(i, j));
        }
    }
    out
}

impl Tape {
    pub fn new() -> Self {
        Tape::default()
    }

    pub fn leaf(&mut self, value: Tensor, requires_grad: bool) -> TensorId {
        self.nodes.push(Node {
            op: Op::Leaf,
            inputs: vec![],
            value,
            requires_grad,
            grad: None,
        });
        TensorId(self.nodes.len() - 1)
    }

    pub fn constant(&mut self, value: Tensor) -> TensorId {
        self.leaf(value, false)
    }

    pub fn value(&self, id: TensorId) -> &Tensor {
        &self.nodes[id.0].value
    }

    pub fn grad(&self, id: TensorId) -> Option<&Tensor> {
        self.nodes[id.0].grad.as_ref()
    }

    /// Gradient of a leaf, zero-filled if unreachable from the loss.
    pub fn grad_or_zero(&self, id: TensorId) -> Tensor {
        let n = &self.nodes[id.0];
        n.grad
            .clone()
            .unwrap_or_else(|| Tensor::zeros(n.value.rows, n.value.cols))
    }

    fn shape_err(op: &'static str, detail: String) -> Error {
        Error::Dimension { op, detail }
    }

    pub fn apply(&mut self, op: Op, inputs: &[TensorId]) -> Result<TensorId> {
        let value = self.eval(&op, inputs)?;
        if !value.all_finite() {
            return Err(Error::DegenerateInput(format!(
                "non-finite output from {op:?}"
            )));
        }
        let requires_grad = inputs.iter().any(|&i| self.nodes[i.0].requires_grad);
        self.nodes.push(Node {
            op,
            inputs: inputs.to_vec(),
            value,
            requires_grad,
            grad: None,
        });
        Ok(TensorId(self.nodes.len() - 1))
    }

    fn unary<'a>(&'a self, op: &'static str, inputs: &[TensorId]) -> Result<&'a Tensor> {
        if inputs.len() != 1 {
            return Err(Self::shape_err(op, format!("expected 1 input, got {}", inputs.len())));
        }
        Ok(&self.nodes[inputs[0].0].value)
    }

    fn binary<'a>(
        &'a self,
        op: &'static str,
        inputs: &[TensorId],
    ) -> Result<(&'a Tensor, &'a Tensor)> {
        if inputs.len() != 2 {
            return Err(Self::shape_err(op, format!("expected 2 inputs, got {}", inputs.len())));
        }
        Ok((&self.nodes[inputs[0].0].value, &self.nodes[inputs[1].0].value))
    }

    fn eval(&self, op: &Op, inputs: &[TensorId]) -> Result<Tensor> {
        match op {
            Op::Leaf => Err(Error::Contract("cannot apply Leaf".into())),
            Op::MatMul => {
                let (a, b) = self.binary("matmul", inputs)?;
                if a.cols != b.rows {
                    return Err(Self::shape_err(
                        "matmul",
                        format!("{}x{} @ {}x{}", a.rows, a.cols, b.rows, b.cols),
                    ));
                }
                Ok(matmul(a, b))
            }
            Op::Add => {
                let (a, b) = self.binary("add", inputs)?;
                if a.rows != b.rows || a.cols != b.cols {
                    return Err(Self::shape_err(
                        "add",
                        format!("{}x{} + {}x{}", a.rows, a.cols, b.rows, b.cols),
                    ));
                }
                let data = a.data.iter().zip(&b.data).map(|(x, y)| x + y).collect();
                Ok(Tensor::new(a.rows, a.cols, data))
            }
            Op::Mul => {
                let (a, b) = self.binary("mul", inputs)?;
                if a.rows != b.rows || a.cols != b.cols {
                    return Err(Self::shape_err(
                        "mul",
                        format!("{}x{} * {}x{}", a.rows, a.cols, b.rows, b.cols),
                    ));
                }
                let data = a.data.iter().zip(&b.data).map(|(x, y)| x * y).collect();
                Ok(Tensor::new(a.rows, a.cols, data))
            }
            Op::Relu => {
                let a = self.unary("relu", inputs)?;
                let data = a.data.iter().map(|&x| if x > 0.0 { x } else { 0.0 }).collect();
                Ok(Tensor::new(a.rows, a.cols, data))
            }
            Op::LeakyRelu(slope) => {
                let a = self.unary("leaky_relu", inputs)?;
                let data = a
                    .data
                    .iter()
                    .map(|&x| if x > 0.0 { x } else { slope * x })
                    .collect();
                Ok(Tensor::new(a.rows, a.cols, data))
            }
            Op::Exp => {
                let a = self.unary("exp", inputs)?;
                Ok(Tensor::new(a.rows, a.cols, a.data.iter().map(|x| x.exp()).collect()))
            }
            Op::Log => {
                let a = self.unary("log", inputs)?;
                if a.data.iter().any(|&x| x <= 0.0) {
                    return Err(Error::DegenerateInput("log of non-positive value".into()));
                }
                Ok(Tensor::new(a.rows, a.cols, a.data.iter().map(|x| x.ln()).collect()))
            }
            Op::Sum => {
                let a = self.unary("sum", inputs)?;
                Ok(Tensor::scalar(a.data.iter().sum()))
            }
            Op::MeanRows => {
                let a = self.unary("mean_rows", inputs)?;
                if a.rows == 0 {
                    return Err(Self::shape_err("mean_rows", "empty input".into()));
                }
                let mut out = vec![0.0; a.cols];
                for i in 0..a.rows {
                    for j in 0..a.cols {
                        out[j] += a.get(i, j);
                    }
                }
                for v in &mut out {
                    *v /= a.rows as f64;
                }
                Ok(Tensor::new(1, a.cols, out))
            }
            Op::L2NormalizeRows => {
                let a = self.unary("l2_normalize_rows", inputs)?;
                let mut out = a.clone();
                for i in 0..a.rows {
                    let norm = a.row(i).iter().map(|x| x * x).sum::<f64>().sqrt();
                    if norm <= 1e-12 {
                        return Err(Error::DegenerateInput(format!(
                            "row {i} has norm {norm:.3e} under l2_normalize_rows"
                        )));
                    }
                    for j in 0..a.cols {
                        out.set(i, j, a.get(i, j) / norm);
                    }
                }
                Ok(out)
            }
            Op::SoftmaxRows => {
                let a = self.unary("softmax_rows", inputs)?;
                let mut out = a.clone();
                for i in 0..a.rows {
                    let row = a.row(i);
                    let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                    let mut denom = 0.0;
                    for j in 0..a.cols {
                        let e = (row[j] - max).exp();
                        out.set(i, j, e);
                        denom += e;
                    }
                    for j in 0..a.cols {
                        out.set(i, j, out.get(i, j) / denom);
                    }
                }
                Ok(out)
            }
            Op::Transpose => {
                let a = self.unary("transpose", inputs)?;
                Ok(transpose(a))
            }
            Op::Scale(c) => {
                let a = self.unary("scale", inputs)?;
                Ok(Tensor::new(a.rows, a.cols, a.data.iter().map(|x| x * c).collect()))
            }
            Op::ConcatCols => {
                let (a, b) = self.binary("concat_cols", inputs)?;
                if a.rows != b.rows {
                    return Err(Self::shape_err(
                        "concat_cols",
                        format!("{} rows vs {} rows", a.rows, b.rows),
                    ));
                }
                let mut out = Tensor::zeros(a.rows, a.cols + b.cols);
                for i in 0..a.rows {
                    for j in 0..a.cols {
                        out.set(i, j, a.get(i, j));
                    }
                    for j in 0..b.cols {
                        out.set(i, a.cols + j, b.get(i, j));
                    }
                }
                Ok(out)
            }
            Op::GatherRows(idx) => {
                let a = self.unary("gather_rows", inputs)?;
                let mut out = Tensor::zeros(idx.len(), a.cols);
                for (k, &i) in idx.iter().enumerate() {
                    if i >= a.rows {
                        return Err(Self::shape_err(
                            "gather_rows",
                            format!("row index {i} out of {}", a.rows),
                        ));
                    }
                    for j in 0..a.cols {
                        out.set(k, j, a.get(i, j));
                    }
                }
                Ok(out)
            }
        }
    }

    /// Reverse pass from a scalar loss. Leaves unreachable from the loss keep
    /// a `None` grad (read back as zero via [`Tape::grad_or_zero`]).
    pub fn backward(&mut self, loss: TensorId) -> Result<()> {
        if self.nodes[loss.0].value.len() != 1 {
            return Err(Error::Contract(format!(
                "backward requires scalar loss, got {}x{}",
                self.nodes[loss.0].value.rows, self.nodes[loss.0].value.cols
            )));
        }
        for n in &mut self.nodes {
            n.grad = None;
        }
        self.nodes[loss.0].grad = Some(Tensor::scalar(1.0));

        for i in (0..=loss.0).rev() {
            let Some(g) = self.nodes[i].grad.clone() else {
                continue;
            };
            if !self.nodes[i].requires_grad || matches!(self.nodes[i].op, Op::Leaf) {
                continue;
            }
            let op = self.nodes[i].op.clone();
            let inputs = self.nodes[i].inputs.clone();
            let value = self.nodes[i].value.clone();
            self.propagate(&op, &inputs, &value, &g);
        }
        Ok(())
    }

    fn accumulate(&mut self, id: TensorId, delta: Tensor) {
        if !self.nodes[id.0].requires_grad {
            return;
        }
        match &mut self.nodes[id.0].grad {
            Some(g) => {
                for (a, b) in g.data.iter_mut().zip(&delta.data) {
                    *a += b;
                }
            }
            None => self.nodes[id.0].grad = Some(delta),
        }
    }

    fn propagate(&mut self, op: &Op, inputs: &[TensorId], y: &Tensor, g: &Tensor) {
        match op {
            Op::Leaf => {}
            Op::MatMul => {
                let a = self.nodes[inputs[0].0].value.clone();
                let b = self.nodes[inputs[1].0].value.clone();
                self.accumulate(inputs[0], matmul(g, &transpose(&b)));
                self.accumulate(inputs[1], matmul(&transpose(&a), g));
            }
            Op::Add => {
                self.accumulate(inputs[0], g.clone());
                self.accumulate(inputs[1], g.clone());
            }
            Op::Mul => {
                let a = self.nodes[inputs[0].0].value.clone();
                let b = self.nodes[inputs[1].0].value.clone();
                let da = Tensor::new(g.rows, g.cols, g.data.iter().zip(&b.data).map(|(x, y)| x * y).collect());
                let db = Tensor::new(g.rows, g.cols, g.data.iter().zip(&a.data).map(|(x, y)| x * y).collect());
                self.accumulate(inputs[0], da);
                self.accumulate(inputs[1], db);
            }
            Op::Relu => {
                let x = &self.nodes[inputs[0].0].value;
                // Subgradient at 0 is 0.
                let d = Tensor::new(
                    g.rows,
                    g.cols,
                    g.data
                        .iter()
                        .zip(&x.data)
                        .map(|(gv, xv)| if *xv > 0.0 { *gv } else { 0.0 })
                        .collect(),
                );
                self.accumulate(inputs[0], d);
            }
            Op::LeakyRelu(slope) => {
                let x = &self.nodes[inputs[0].0].value;
                let s = *slope;
                let d = Tensor::new(
                    g.rows,
                    g.cols,
                    g.data
                        .iter()
                        .zip(&x.data)
                        .map(|(gv, xv)| if *xv > 0.0 { *gv } else { s * gv })
                        .collect(),
                );
                self.accumulate(inputs[0], d);
            }
            Op::Exp => {
                let d = Tensor::new(g.rows, g.cols, g.data.iter().zip(&y.data).map(|(gv, yv)| gv * yv).collect());
                self.accumulate(inputs[0], d);
            }
            Op::Log => {
                let x = &self.nodes[inputs[0].0].value;
                let d = Tensor::new(g.rows, g.cols, g.data.iter().zip(&x.data).map(|(gv, xv)| gv / xv).collect());
                self.accumulate(inputs[0], d);
            }
            Op::Sum => {
                let x = &self.nodes[inputs[0].0].value;
                let d = Tensor::new(x.rows, x.cols, vec![g.data[0]; x.len()]);
                self.accumulate(inputs[0], d);
            }
            Op::MeanRows => {
                let x = &self.nodes[inputs[0].0].value;
                let m = x.rows as f64;
                let mut d = Tensor::zeros(x.rows, x.cols);
                for i in 0..x.rows {
                    for j in 0..x.cols {
                        d.set(i, j, g.get(0, j) / m);
                    }
                }
                self.accumulate(inputs[0], d);
            }
            Op::L2NormalizeRows => {
                let x = self.nodes[inputs[0].0].value.clone();
                let mut d = Tensor::zeros(x.rows, x.cols);
                for i in 0..x.rows {
                    let norm = x.row(i).iter().map(|v| v * v).sum::<f64>().sqrt();
                    let dot: f64 = (0..x.cols).map(|j| g.get(i, j) * y.get(i, j)).sum();
                    for j in 0..x.cols {
                        d.set(i, j, (g.get(i, j) - dot * y.get(i, j)) / norm);
                    }
                }
                self.accumulate(inputs[0], d);
            }
            Op::SoftmaxRows => {
                let mut d = Tensor::zeros(y.rows, y.cols);
                for i in 0..y.rows {
                    let dot: f64 = (0..y.cols).map(|j| g.get(i, j) * y.get(i, j)).sum();
                    for j in 0..y.cols {
                        d.set(i, j, y.get(i, j) * (g.get(i, j) - dot));
                    }
                }
                self.accumulate(inputs[0], d);
            }
            Op::Transpose => {
                self.accumulate(inputs[0], transpose(g));
            }
            Op::Scale(c) => {
                let d = Tensor::new(g.rows, g.cols, g.data.iter().map(|v| v * c).collect());
                self.accumulate(inputs[0], d);
            }
            Op::ConcatCols => {
                let a_cols = self.nodes[inputs[0].0].value.cols;
                let b_cols = self.nodes[inputs[1].0].value.cols;
                let mut da = Tensor::zeros(g.rows, a_cols);
                let mut db = Tensor::zeros(g.rows, b_cols);
                for i in 0..g.rows {
                    for j in 0..a_cols {
                        da.set(i, j, g.get(i, j));
                    }
                    for j in 0..b_cols {
                        db.set(i, j, g.get(i, a_cols + j));
                    }
                }
                self.accumulate(inputs[0], da);
                self.accumulate(inputs[1], db);
            }
            Op::GatherRows(idx) => {
                let x = &self.nodes[inputs[0].0].value;
                let mut d = Tensor::zeros(x.rows, x.cols);
                for (k, &i) in idx.iter().enumerate() {
                    for j in 0..x.cols {
                        d.set(i, j, d.get(i, j) + g.get(k, j));
                    }
                }
                self.accumulate(inputs[0], d);
            }
        }
    }
}

/// Central finite-difference check of a tape-built scalar function.
///
/// `forward` receives a fresh tape plus leaf ids for `params` (in order) and
/// returns the loss id. Returns the max over all parameter coordinates of
/// `|analytic - numeric| / max(|analytic|, |numeric|, 1e-6)`; the floor keeps
/// finite-difference roundoff on dead (zero-gradient) coordinates from
/// registering as huge relative errors.
pub fn gradient_check<F>(mut forward: F, params: &[Tensor], h: f64) -> Result<f64>
where
    F: FnMut(&mut Tape, &[TensorId]) -> Result<TensorId>,
{
    // Analytic pass.
    let mut tape = Tape::new();
    let ids: Vec<TensorId> = params.iter().map(|p| tape.leaf(p.clone(), true)).collect();
    let loss = forward(&mut tape, &ids)?;
    tape.backward(loss)?;
    let analytic: Vec<Tensor> = ids.iter().map(|&id| tape.grad_or_zero(id)).collect();

    let eval = |ps: &[Tensor], forward: &mut F| -> Result<f64> {
        let mut t = Tape::new();
        let ids: Vec<TensorId> = ps.iter().map(|p| t.leaf(p.clone(), false)).collect();
        let loss = forward(&mut t, &ids)?;
        let v = t.value(loss).data[0];
        if !v.is_finite() {
            return Err(Error::DegenerateInput("non-finite forward value".into()));
        }
        Ok(v)
    };

    let mut max_err: f64 = 0.0;
    let mut work: Vec<Tensor> = params.to_vec();
    for (pi, p) in params.iter().enumerate() {
        for ci in 0..p.len() {
            let orig = work[pi].data[ci];
            work[pi].data[ci] = orig + h;
            let fp = eval(&work, &mut forward)?;
            work[pi].data[ci] = orig - h;
            let fm = eval(&work, &mut forward)?;
            work[pi].data[ci] = orig;
            let numeric = (fp - fm) / (2.0 * h);
            let a = analytic[pi].data[ci];
            let err = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-6);
            max_err = max_err.max(err);
        }
    }
    Ok(max_err)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    #[test]
    fn relu_definition() {
        let mut t = Tape::new();
        let x = t.constant(Tensor::new(1, 3, vec![-1.0, 0.0, 2.0]));
        let y = t.apply(Op::Relu, &[x]).unwrap();
        assert_eq!(t.value(y).data, vec![0.0, 0.0, 2.0]);
    }

    #[test]
    fn l2_normalize_hand_oracle() {
        // 5 = sqrt(9 + 16)
        let mut t = Tape::new();
        let x = t.constant(Tensor::new(1, 2, vec![3.0, 4.0]));
        let y = t.apply(Op::L2NormalizeRows, &[x]).unwrap();
        assert_close(t.value(y).data[0], 0.6, 1e-12);
        assert_close(t.value(y).data[1], 0.8, 1e-12);
    }

    #[test]
    fn l2_normalize_zero_row_rejected() {
        let mut t = Tape::new();
        let x = t.constant(Tensor::new(1, 2, vec![0.0, 0.0]));
        assert!(matches!(
            t.apply(Op::L2NormalizeRows, &[x]),
            Err(Error::DegenerateInput(_))
        ));
    }

    #[test]
    fn softmax_symmetry() {
        let mut t = Tape::new();
        let x = t.constant(Tensor::new(1, 2, vec![0.0, 0.0]));
        let y = t.apply(Op::SoftmaxRows, &[x]).unwrap();
        assert_eq!(t.value(y).data, vec![0.5, 0.5]);
    }

    #[test]
    fn softmax_rows_sum_to_one_and_shift_invariant() {
        let mut rng = Rng::new(11);
        for _ in 0..20 {
            let data: Vec<f64> = (0..12).map(|_| rng.uniform(-5.0, 5.0)).collect();
            let shifted: Vec<f64> = data.iter().map(|v| v + 3.7).collect();
            let mut t = Tape::new();
            let a = t.constant(Tensor::new(3, 4, data));
            let b = t.constant(Tensor::new(3, 4, shifted));
            let ya = t.apply(Op::SoftmaxRows, &[a]).unwrap();
            let yb = t.apply(Op::SoftmaxRows, &[b]).unwrap();
            for i in 0..3 {
                let s: f64 = t.value(ya).row(i).iter().sum();
                assert_close(s, 1.0, 1e-12);
            }
            for (x, y) in t.value(ya).data.iter().zip(&t.value(yb).data) {
                assert_close(*x, *y, 1e-12);
            }
        }
    }

    #[test]
    fn backward_sum_is_ones() {
        let mut t = Tape::new();
        let x = t.leaf(Tensor::new(1, 3, vec![1.0, 2.0, 3.0]), true);
        let loss = t.apply(Op::Sum, &[x]).unwrap();
        t.backward(loss).unwrap();
        assert_eq!(t.grad(x).unwrap().data, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn backward_square() {
        let mut t = Tape::new();
        let x = t.leaf(Tensor::scalar(2.0), true);
        let sq = t.apply(Op::Mul, &[x, x]).unwrap();
        let loss = t.apply(Op::Sum, &[sq]).unwrap();
        t.backward(loss).unwrap();
        assert_eq!(t.grad(x).unwrap().data, vec![4.0]);
    }

    #[test]
    fn backward_rejects_non_scalar_loss() {
        let mut t = Tape::new();
        let x = t.leaf(Tensor::new(1, 2, vec![1.0, 2.0]), true);
        assert!(matches!(t.backward(x), Err(Error::Contract(_))));
    }

    #[test]
    fn unreachable_leaf_gets_zero_grad() {
        let mut t = Tape::new();
        let x = t.leaf(Tensor::scalar(1.0), true);
        let z = t.leaf(Tensor::scalar(5.0), true);
        let loss = t.apply(Op::Sum, &[x]).unwrap();
        t.backward(loss).unwrap();
        assert_eq!(t.grad_or_zero(z).data, vec![0.0]);
    }

    #[test]
    fn mse_of_normalized_matches_finite_differences() {
        // loss = || normalize([3,4]) - [1,0] ||^2
        let f = |t: &mut Tape, ids: &[TensorId]| -> Result<TensorId> {
            let y = t.apply(Op::L2NormalizeRows, &[ids[0]])?;
            let target = t.constant(Tensor::new(1, 2, vec![1.0, 0.0]));
            let neg = t.apply(Op::Scale(-1.0), &[target])?;
            let diff = t.apply(Op::Add, &[y, neg])?;
            let sq = t.apply(Op::Mul, &[diff, diff])?;
            t.apply(Op::Sum, &[sq])
        };
        let err = gradient_check(f, &[Tensor::new(1, 2, vec![3.0, 4.0])], 1e-5).unwrap();
        assert!(err < 1e-4, "rel error {err}");
    }

    #[test]
    fn gradient_check_square_polynomial() {
        let f = |t: &mut Tape, ids: &[TensorId]| -> Result<TensorId> {
            let sq = t.apply(Op::Mul, &[ids[0], ids[0]])?;
            t.apply(Op::Sum, &[sq])
        };
        let err = gradient_check(f, &[Tensor::scalar(3.0)], 1e-5).unwrap();
        assert!(err < 1e-6, "rel error {err}");
    }

    #[test]
    fn dead_relu_agrees_with_numeric_zero() {
        let f = |t: &mut Tape, ids: &[TensorId]| -> Result<TensorId> {
            let y = t.apply(Op::Relu, &[ids[0]])?;
            t.apply(Op::Sum, &[y])
        };
        let err = gradient_check(f, &[Tensor::scalar(-1.0)], 1e-5).unwrap();
        assert_eq!(err, 0.0);
    }

    /// Every op kind: analytic backward vs central differences on random
    /// inputs, resampling away from ReLU kinks.
    #[test]
    fn all_ops_match_finite_differences() {
        let mut rng = Rng::new(99);
        let rand_tensor = |rng: &mut Rng, r: usize, c: usize, avoid_kink: bool| loop {
            let data: Vec<f64> = (0..r * c).map(|_| rng.uniform(-2.0, 2.0)).collect();
            if !avoid_kink || data.iter().all(|v| v.abs() > 1e-3) {
                return Tensor::new(r, c, data);
            }
        };
        type Builder = Box<dyn Fn(&mut Tape, &[TensorId]) -> Result<TensorId>>;
        let cases: Vec<(&str, bool, Builder)> = vec![
            ("matmul", false, Box::new(|t, ids| {
                let m = t.apply(Op::MatMul, &[ids[0], ids[1]])?;
                t.apply(Op::Sum, &[m])
            })),
            ("add_mul", false, Box::new(|t, ids| {
                let s = t.apply(Op::Add, &[ids[0], ids[1]])?;
                let p = t.apply(Op::Mul, &[s, ids[1]])?;
                t.apply(Op::Sum, &[p])
            })),
            ("relu", true, Box::new(|t, ids| {
                let y = t.apply(Op::Relu, &[ids[0]])?;
                let sq = t.apply(Op::Mul, &[y, y])?;
                t.apply(Op::Sum, &[sq])
            })),
            ("leaky_relu", true, Box::new(|t, ids| {
                let y = t.apply(Op::LeakyRelu(0.2), &[ids[0]])?;
                let sq = t.apply(Op::Mul, &[y, y])?;
                t.apply(Op::Sum, &[sq])
            })),
            ("exp", false, Box::new(|t, ids| {
                let y = t.apply(Op::Exp, &[ids[0]])?;
                t.apply(Op::Sum, &[y])
            })),
            ("log_of_exp", false, Box::new(|t, ids| {
                let e = t.apply(Op::Exp, &[ids[0]])?;
                let y = t.apply(Op::Log, &[e])?;
                let sq = t.apply(Op::Mul, &[y, y])?;
                t.apply(Op::Sum, &[sq])
            })),
            ("mean_rows", false, Box::new(|t, ids| {
                let y = t.apply(Op::MeanRows, &[ids[0]])?;
                let sq = t.apply(Op::Mul, &[y, y])?;
                t.apply(Op::Sum, &[sq])
            })),
            ("l2_normalize_rows", false, Box::new(|t, ids| {
                let y = t.apply(Op::L2NormalizeRows, &[ids[0]])?;
                let c = t.constant(Tensor::new(3, 4, (0..12).map(|i| i as f64 * 0.1).collect()));
                let p = t.apply(Op::Mul, &[y, c])?;
                t.apply(Op::Sum, &[p])
            })),
            ("softmax_rows", false, Box::new(|t, ids| {
                let y = t.apply(Op::SoftmaxRows, &[ids[0]])?;
                let sq = t.apply(Op::Mul, &[y, y])?;
                t.apply(Op::Sum, &[sq])
            })),
            ("transpose_scale", false, Box::new(|t, ids| {
                let y = t.apply(Op::Transpose, &[ids[0]])?;
                let s = t.apply(Op::Scale(1.7), &[y])?;
                let sq = t.apply(Op::Mul, &[s, s])?;
                t.apply(Op::Sum, &[sq])
            })),
            ("concat_cols", false, Box::new(|t, ids| {
                let y = t.apply(Op::ConcatCols, &[ids[0], ids[1]])?;
                let sq = t.apply(Op::Mul, &[y, y])?;
                t.apply(Op::Sum, &[sq])
            })),
            ("gather_rows", false, Box::new(|t, ids| {
                let y = t.apply(Op::GatherRows(vec![2, 0, 2]), &[ids[0]])?;
                let sq = t.apply(Op::Mul, &[y, y])?;
                t.apply(Op::Sum, &[sq])
            })),
        ];
        for (name, avoid_kink, build) in &cases {
            for trial in 0..10 {
                let params = match *name {
                    "matmul" => vec![
                        rand_tensor(&mut rng, 3, 2, false),
                        rand_tensor(&mut rng, 2, 4, false),
                    ],
                    "add_mul" | "concat_cols" => vec![
                        rand_tensor(&mut rng, 3, 4, false),
                        rand_tensor(&mut rng, 3, 4, false),
                    ],
                    _ => vec![rand_tensor(&mut rng, 3, 4, *avoid_kink)],
                };
                let err = gradient_check(|t, ids| build(t, ids), &params, 1e-5).unwrap();
                assert!(err < 1e-4, "{name} trial {trial}: rel error {err}");
            }
        }
    }
}
