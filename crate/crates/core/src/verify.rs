//! Finite-difference checks for every layer and the end-to-end renderer loss.

use std::fmt;

use crate::renderer::{loss_and_gradients, Batch, RendererConfig, RendererParams};
use crate::tensorlet::rng::SplitMix64;
use crate::tensorlet::{
    finite_difference_check, mse_loss, relu, relu_backward, softmax_backward, softmax_rows, EmbeddingTable,
    LinearLayer, Matrix, TensorError,
};

pub const TOLERANCE: f64 = 1e-4;
pub const STEP: f64 = 1e-5;

pub const COMPONENTS: [&str; 7] = ["linear", "embedding", "relu", "softmax", "mse", "predictor", "renderer"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dims {
    Small,
    Default,
}

impl Dims {
    fn sizes(self) -> (usize, usize, usize) {
        // (batch rows, input width, output width)
        match self {
            Dims::Small => (3, 3, 2),
            Dims::Default => (5, 8, 6),
        }
    }

    fn renderer(self) -> RendererConfig {
        match self {
            Dims::Small => RendererConfig {
                vocab: 4,
                embed_dim: 2,
                intensity_dim: 2,
                hidden_dim: 3,
                mel_channels: 2,
                max_duration: 50,
            },
            Dims::Default => RendererConfig {
                vocab: 8,
                embed_dim: 4,
                intensity_dim: 4,
                hidden_dim: 8,
                mel_channels: 8,
                max_duration: 50,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub component: &'static str,
    pub max_relative_error: f64,
}

impl CheckResult {
    pub fn passed(&self) -> bool {
        self.max_relative_error < TOLERANCE
    }
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.passed() { "ok" } else { "FAIL" };
        write!(f, "{:<10} {:.3e} {verdict}", self.component, self.max_relative_error)
    }
}

fn random(rows: usize, cols: usize, rng: &mut SplitMix64, lo: f64, hi: f64) -> Matrix {
    let data = (0..rows * cols).map(|_| rng.uniform(lo, hi)).collect();
    Matrix::new(rows, cols, data).expect("finite")
}

/// `sum(y * r)`, a loss whose gradient with respect to `y` is `r`.
fn weighted_sum(y: &Matrix, r: &Matrix) -> f64 {
    y.data().iter().zip(r.data()).map(|(a, b)| a * b).sum()
}

fn flatten(parts: &[&[f64]]) -> Vec<f64> {
    parts.iter().flat_map(|p| p.iter().copied()).collect()
}

struct Problem {
    params: Vec<f64>,
    analytic: Vec<f64>,
    objective: Box<dyn FnMut(&[f64]) -> f64>,
}

fn linear_problem(dims: Dims, rng: &mut SplitMix64) -> Result<Problem, TensorError> {
    let (n, i, o) = dims.sizes();
    let mut layer = LinearLayer::init(i, o, rng.next_u64());
    layer.bias = (0..o).map(|_| rng.uniform(-0.5, 0.5)).collect();
    let x = random(n, i, rng, -1.0, 1.0);
    let r = random(n, o, rng, -1.0, 1.0);
    layer.forward(&x)?;
    let gx = layer.backward(&r)?;
    let params = flatten(&[x.data(), layer.weight.data(), &layer.bias]);
    let analytic = flatten(&[gx.data(), layer.grad_weight.data(), &layer.grad_bias]);
    let objective = move |p: &[f64]| {
        let (px, rest) = p.split_at(n * i);
        let (pw, pb) = rest.split_at(o * i);
        let l = LinearLayer::new(Matrix::new(o, i, pw.to_vec()).unwrap(), pb.to_vec()).unwrap();
        weighted_sum(&l.apply(&Matrix::new(n, i, px.to_vec()).unwrap()).unwrap(), &r)
    };
    Ok(Problem {
        params,
        analytic,
        objective: Box::new(objective),
    })
}

fn embedding_problem(dims: Dims, rng: &mut SplitMix64) -> Result<Problem, TensorError> {
    let (n, v, d) = dims.sizes();
    let mut table = EmbeddingTable::new(random(v, d, rng, -1.0, 1.0));
    // repeated ids exercise gradient accumulation
    let ids: Vec<usize> = (0..n + 2).map(|k| k % v).collect();
    let r = random(ids.len(), d, rng, -1.0, 1.0);
    table.backward(&ids, &r)?;
    let params = table.table.data().to_vec();
    let analytic = table.grad.data().to_vec();
    let objective = move |p: &[f64]| {
        let t = EmbeddingTable::new(Matrix::new(v, d, p.to_vec()).unwrap());
        weighted_sum(&t.lookup(&ids).unwrap(), &r)
    };
    Ok(Problem {
        params,
        analytic,
        objective: Box::new(objective),
    })
}

fn relu_problem(dims: Dims, rng: &mut SplitMix64) -> Result<Problem, TensorError> {
    let (n, d, _) = dims.sizes();
    // keep inputs away from the kink
    let x = random(n, d, rng, 0.1, 1.0);
    let signs = random(n, d, rng, -1.0, 1.0);
    let x = Matrix::new(
        n,
        d,
        x.data().iter().zip(signs.data()).map(|(v, s)| if *s < 0.0 { -v } else { *v }).collect(),
    )?;
    let r = random(n, d, rng, -1.0, 1.0);
    let analytic = relu_backward(&x, &r)?.into_data();
    let objective = move |p: &[f64]| weighted_sum(&relu(&Matrix::new(n, d, p.to_vec()).unwrap()), &r);
    Ok(Problem {
        params: x.into_data(),
        analytic,
        objective: Box::new(objective),
    })
}

fn softmax_problem(dims: Dims, rng: &mut SplitMix64) -> Result<Problem, TensorError> {
    let (n, d, _) = dims.sizes();
    let x = random(n, d, rng, -2.0, 2.0);
    let r = random(n, d, rng, -1.0, 1.0);
    let y = softmax_rows(&x)?;
    let analytic = softmax_backward(&y, &r)?.into_data();
    let objective = move |p: &[f64]| weighted_sum(&softmax_rows(&Matrix::new(n, d, p.to_vec()).unwrap()).unwrap(), &r);
    Ok(Problem {
        params: x.into_data(),
        analytic,
        objective: Box::new(objective),
    })
}

fn mse_problem(dims: Dims, rng: &mut SplitMix64) -> Result<Problem, TensorError> {
    let (n, d, _) = dims.sizes();
    let pred = random(n, d, rng, -1.0, 1.0);
    let target = random(n, d, rng, -1.0, 1.0);
    let (_, g) = mse_loss(&pred, &target)?;
    let objective = move |p: &[f64]| mse_loss(&Matrix::new(n, d, p.to_vec()).unwrap(), &target).unwrap().0;
    Ok(Problem {
        params: pred.into_data(),
        analytic: g.into_data(),
        objective: Box::new(objective),
    })
}

fn predictor_problem(dims: Dims, rng: &mut SplitMix64) -> Result<Problem, TensorError> {
    let (n, i, h) = dims.sizes();
    let mut hidden = LinearLayer::init(i, h, rng.next_u64());
    hidden.bias = (0..h).map(|_| rng.uniform(-0.2, 0.2)).collect();
    let mut out = LinearLayer::init(h, 1, rng.next_u64());
    out.bias = vec![rng.uniform(-0.2, 0.2)];
    let x = random(n, i, rng, -1.0, 1.0);
    let target = random(n, 1, rng, -1.0, 1.0);
    let pre = hidden.forward(&x)?;
    let y = out.forward(&relu(&pre))?;
    let (_, g) = mse_loss(&y, &target)?;
    let g_hidden = out.backward(&g)?;
    hidden.backward(&relu_backward(&pre, &g_hidden)?)?;
    let params = flatten(&[hidden.weight.data(), &hidden.bias, out.weight.data(), &out.bias]);
    let analytic = flatten(&[
        hidden.grad_weight.data(),
        &hidden.grad_bias,
        out.grad_weight.data(),
        &out.grad_bias,
    ]);
    let objective = move |p: &[f64]| {
        let (hw, rest) = p.split_at(h * i);
        let (hb, rest) = rest.split_at(h);
        let (ow, ob) = rest.split_at(h);
        let hl = LinearLayer::new(Matrix::new(h, i, hw.to_vec()).unwrap(), hb.to_vec()).unwrap();
        let ol = LinearLayer::new(Matrix::new(1, h, ow.to_vec()).unwrap(), ob.to_vec()).unwrap();
        let y = ol.apply(&relu(&hl.apply(&x).unwrap())).unwrap();
        mse_loss(&y, &target).unwrap().0
    };
    Ok(Problem {
        params,
        analytic,
        objective: Box::new(objective),
    })
}

fn renderer_problem(dims: Dims, rng: &mut SplitMix64) -> Result<Problem, TensorError> {
    let config = dims.renderer();
    let mut params = RendererParams::init(&config, rng.next_u64()).expect("valid config");
    let mut perturb = SplitMix64::new(rng.next_u64());
    params.visit_mut(|name, w, _| {
        if name.ends_with(".bias") {
            w.iter_mut().for_each(|v| *v = perturb.uniform(-0.3, 0.3));
        }
    });
    let duration = vec![2, 1, 3];
    let frames: usize = duration.iter().sum();
    let batch = Batch {
        ids: vec![0, 3, 1],
        intensity: vec![0.1, 0.5, 0.9],
        pitch: vec![0.5, -0.2, 1.1],
        energy: vec![-0.4, 0.3, 0.6],
        duration,
        mel: Some(random(frames, config.mel_channels, rng, -1.0, 1.0)),
    };
    loss_and_gradients(&mut params, &batch).map_err(|e| TensorError::Argument(e.to_string()))?;
    let analytic = params.flat_grads();
    let theta = params.flat_params();
    let mut probe = params;
    let objective = move |p: &[f64]| {
        probe.set_flat_params(p);
        loss_and_gradients(&mut probe, &batch).map(|l| l.total()).unwrap_or(f64::NAN)
    };
    Ok(Problem {
        params: theta,
        analytic,
        objective: Box::new(objective),
    })
}

/// Runs every component check. With `fault` set to a component name, that
/// component's analytic gradient is corrupted before comparison.
pub fn run_gradcheck(dims: Dims, seed: u64, fault: Option<&str>) -> Result<Vec<CheckResult>, TensorError> {
    if let Some(f) = fault {
        if !COMPONENTS.contains(&f) {
            return Err(TensorError::Argument(format!("unknown component {f:?}")));
        }
    }
    let mut rng = SplitMix64::new(seed);
    let builders: [fn(Dims, &mut SplitMix64) -> Result<Problem, TensorError>; 7] = [
        linear_problem,
        embedding_problem,
        relu_problem,
        softmax_problem,
        mse_problem,
        predictor_problem,
        renderer_problem,
    ];
    let mut results = Vec::with_capacity(COMPONENTS.len());
    for (component, build) in COMPONENTS.into_iter().zip(builders) {
        let mut problem = build(dims, &mut SplitMix64::new(rng.next_u64()))?;
        if fault == Some(component) {
            for g in problem.analytic.iter_mut() {
                *g = *g * 1.5 + 0.1;
            }
        }
        let err = finite_difference_check(problem.objective, &problem.params, &problem.analytic, STEP)?;
        results.push(CheckResult {
            component,
            max_relative_error: err,
        });
    }
    Ok(results)
}
