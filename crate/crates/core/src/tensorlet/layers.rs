use super::init::{seeded_init, InitScheme};
use super::{Matrix, TensorError};

/// Affine layer `y = x Wᵀ + b` with `W` stored `out x in`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearLayer {
    pub weight: Matrix,
    pub bias: Vec<f64>,
    pub grad_weight: Matrix,
    pub grad_bias: Vec<f64>,
    cached_input: Option<Matrix>,
}

impl LinearLayer {
    pub fn new(weight: Matrix, bias: Vec<f64>) -> Result<Self, TensorError> {
        if bias.len() != weight.rows() {
            return Err(TensorError::Shape {
                op: "linear bias",
                left: weight.shape(),
                right: (1, bias.len()),
            });
        }
        let (out, inp) = weight.shape();
        Ok(Self {
            weight,
            grad_weight: Matrix::zeros(out, inp),
            grad_bias: vec![0.0; out],
            bias,
            cached_input: None,
        })
    }

    /// Glorot-uniform weights, zero bias.
    pub fn init(in_dim: usize, out_dim: usize, seed: u64) -> Self {
        let w = seeded_init(out_dim, in_dim, seed, InitScheme::GlorotUniform);
        Self::new(w, vec![0.0; out_dim]).expect("shapes agree by construction")
    }

    pub fn in_dim(&self) -> usize {
        self.weight.cols()
    }

    pub fn out_dim(&self) -> usize {
        self.weight.rows()
    }

    /// Forward pass without touching the cache.
    pub fn apply(&self, x: &Matrix) -> Result<Matrix, TensorError> {
        if x.cols() != self.in_dim() {
            return Err(TensorError::Shape {
                op: "linear forward",
                left: x.shape(),
                right: self.weight.shape(),
            });
        }
        let mut y = x.matmul(&self.weight.transpose())?;
        for r in 0..y.rows() {
            for (v, b) in y.row_mut(r).iter_mut().zip(&self.bias) {
                *v += b;
            }
        }
        Ok(y)
    }

    pub fn forward(&mut self, x: &Matrix) -> Result<Matrix, TensorError> {
        let y = self.apply(x)?;
        self.cached_input = Some(x.clone());
        Ok(y)
    }

    /// Returns `dL/dx` and adds `dL/dW`, `dL/db` into the gradient buffers.
    pub fn backward(&mut self, grad_out: &Matrix) -> Result<Matrix, TensorError> {
        let x = self
            .cached_input
            .take()
            .ok_or(TensorError::BackwardBeforeForward)?;
        let r = self.backward_from(&x, grad_out);
        self.cached_input = Some(x);
        r
    }

    /// As [`Self::backward`] with the forward input supplied by the caller.
    pub fn backward_from(&mut self, x: &Matrix, grad_out: &Matrix) -> Result<Matrix, TensorError> {
        if x.cols() != self.in_dim() {
            return Err(TensorError::Shape {
                op: "linear backward input",
                left: x.shape(),
                right: self.weight.shape(),
            });
        }
        if grad_out.shape() != (x.rows(), self.out_dim()) {
            return Err(TensorError::Shape {
                op: "linear backward",
                left: grad_out.shape(),
                right: (x.rows(), self.out_dim()),
            });
        }
        let gw = grad_out.transpose().matmul(x)?;
        self.grad_weight.add_assign(&gw)?;
        for (g, s) in self.grad_bias.iter_mut().zip(grad_out.column_sums()) {
            *g += s;
        }
        grad_out.matmul(&self.weight)
    }

    pub fn zero_grad(&mut self) {
        self.grad_weight = Matrix::zeros(self.out_dim(), self.in_dim());
        self.grad_bias = vec![0.0; self.out_dim()];
    }

    /// Plain gradient-descent step.
    pub fn step(&mut self, learning_rate: f64) {
        for (w, g) in self.weight.data_mut().iter_mut().zip(self.grad_weight.data()) {
            *w -= learning_rate * g;
        }
        for (b, g) in self.bias.iter_mut().zip(&self.grad_bias) {
            *b -= learning_rate * g;
        }
    }
}

/// Lookup table of `vocab` rows of width `dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    pub table: Matrix,
    pub grad: Matrix,
}

impl EmbeddingTable {
    pub fn new(table: Matrix) -> Self {
        let grad = Matrix::zeros(table.rows(), table.cols());
        Self { table, grad }
    }

    pub fn vocab(&self) -> usize {
        self.table.rows()
    }

    pub fn dim(&self) -> usize {
        self.table.cols()
    }

    pub fn lookup(&self, ids: &[usize]) -> Result<Matrix, TensorError> {
        let mut out = Matrix::zeros(ids.len(), self.dim());
        for (t, &id) in ids.iter().enumerate() {
            if id >= self.vocab() {
                return Err(TensorError::Index {
                    index: id,
                    vocab: self.vocab(),
                });
            }
            out.row_mut(t).copy_from_slice(self.table.row(id));
        }
        Ok(out)
    }

    /// Scatter-adds `grad_out` rows into the rows that produced them.
    pub fn backward(&mut self, ids: &[usize], grad_out: &Matrix) -> Result<(), TensorError> {
        if grad_out.shape() != (ids.len(), self.dim()) {
            return Err(TensorError::Shape {
                op: "embedding backward",
                left: grad_out.shape(),
                right: (ids.len(), self.dim()),
            });
        }
        for (t, &id) in ids.iter().enumerate() {
            if id >= self.vocab() {
                return Err(TensorError::Index {
                    index: id,
                    vocab: self.vocab(),
                });
            }
            for (g, v) in self.grad.row_mut(id).iter_mut().zip(grad_out.row(t)) {
                *g += v;
            }
        }
        Ok(())
    }

    pub fn zero_grad(&mut self) {
        self.grad = Matrix::zeros(self.vocab(), self.dim());
    }

    pub fn step(&mut self, learning_rate: f64) {
        for (w, g) in self.table.data_mut().iter_mut().zip(self.grad.data()) {
            *w -= learning_rate * g;
        }
    }
}

pub fn relu(x: &Matrix) -> Matrix {
    x.map(|v| v.max(0.0))
}

/// Gradient through relu given the pre-activation input. The kink at 0 takes
/// the zero branch.
pub fn relu_backward(input: &Matrix, grad_out: &Matrix) -> Result<Matrix, TensorError> {
    if input.shape() != grad_out.shape() {
        return Err(TensorError::Shape {
            op: "relu backward",
            left: input.shape(),
            right: grad_out.shape(),
        });
    }
    let data = input
        .data()
        .iter()
        .zip(grad_out.data())
        .map(|(&x, &g)| if x > 0.0 { g } else { 0.0 })
        .collect();
    Matrix::new(input.rows(), input.cols(), data)
}

/// Row-wise softmax, max-shifted.
pub fn softmax_rows(x: &Matrix) -> Result<Matrix, TensorError> {
    if x.rows() == 0 || x.cols() == 0 {
        return Err(TensorError::Empty("softmax_rows"));
    }
    let mut out = x.clone();
    for r in 0..out.rows() {
        let row = out.row_mut(r);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
    Ok(out)
}

/// Gradient through softmax given its output `y`: `y ⊙ (g - <g, y>)` per row.
pub fn softmax_backward(y: &Matrix, grad_out: &Matrix) -> Result<Matrix, TensorError> {
    if y.shape() != grad_out.shape() {
        return Err(TensorError::Shape {
            op: "softmax backward",
            left: y.shape(),
            right: grad_out.shape(),
        });
    }
    let mut out = Matrix::zeros(y.rows(), y.cols());
    for r in 0..y.rows() {
        let (yr, gr) = (y.row(r), grad_out.row(r));
        let dot: f64 = yr.iter().zip(gr).map(|(a, b)| a * b).sum();
        for ((o, &yv), &gv) in out.row_mut(r).iter_mut().zip(yr).zip(gr) {
            *o = yv * (gv - dot);
        }
    }
    Ok(out)
}

/// Mean squared error over all entries, and its gradient w.r.t. `pred`.
pub fn mse_loss(pred: &Matrix, target: &Matrix) -> Result<(f64, Matrix), TensorError> {
    if pred.shape() != target.shape() {
        return Err(TensorError::Shape {
            op: "mse",
            left: pred.shape(),
            right: target.shape(),
        });
    }
    let n = pred.data().len();
    if n == 0 {
        return Err(TensorError::Empty("mse_loss"));
    }
    let diff = pred.sub(target)?;
    let loss = diff.data().iter().map(|d| d * d).sum::<f64>() / n as f64;
    Ok((loss, diff.scale(2.0 / n as f64)))
}
