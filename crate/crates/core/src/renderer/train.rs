use super::forward::{length_regulate_backward, trace, Trace};
use super::{length_regulate, Predictor, RenderError, RendererConfig, RendererParams, TargetNorm};
use crate::tensorlet::rng::SplitMix64;
use crate::tensorlet::{mse_loss, relu, relu_backward, LinearLayer, Matrix};

/// One synthetic utterance with per-phoneme variance targets.
#[derive(Debug, Clone, PartialEq)]
pub struct ToyUtterance {
    pub ids: Vec<usize>,
    pub intensity: Vec<f64>,
    pub pitch: Vec<f64>,
    pub energy: Vec<f64>,
    pub duration: Vec<usize>,
}

/// Noise-free pitch target.
pub(crate) fn base_pitch(i: f64) -> f64 {
    100.0 + 60.0 * i
}

pub(crate) fn base_energy(i: f64) -> f64 {
    0.3 + 0.5 * i
}

pub(crate) fn base_duration(i: f64) -> usize {
    5 + (4.0 * i).round() as usize
}

/// Deterministic toy corpus whose targets are affine in intensity:
/// pitch `100 + 60 i + e`, energy `0.3 + 0.5 i + e` with `e ~ U(-2, 2)`, and
/// duration `5 + round(4 i) + j` with `j` in `{-1, 0, 1}`.
///
/// Draw order per utterance: length in `3..=8`, then for each phoneme its id,
/// intensity, pitch noise, energy noise and duration jitter.
pub fn synth_corpus(
    seed: u64,
    n_utts: usize,
    config: &RendererConfig,
) -> Result<Vec<ToyUtterance>, RenderError> {
    if n_utts == 0 {
        return Err(RenderError::Config("need at least one utterance".into()));
    }
    config.validate()?;
    let mut rng = SplitMix64::new(seed);
    let corpus = (0..n_utts)
        .map(|_| {
            let len = 3 + rng.below(6) as usize;
            let mut u = ToyUtterance {
                ids: Vec::with_capacity(len),
                intensity: Vec::with_capacity(len),
                pitch: Vec::with_capacity(len),
                energy: Vec::with_capacity(len),
                duration: Vec::with_capacity(len),
            };
            for _ in 0..len {
                u.ids.push(rng.below(config.vocab as u64) as usize);
                let i = rng.next_f64();
                u.intensity.push(i);
                u.pitch.push(base_pitch(i) + rng.uniform(-2.0, 2.0));
                u.energy.push(base_energy(i) + rng.uniform(-2.0, 2.0));
                let jitter = rng.below(3) as usize;
                u.duration.push(base_duration(i) + jitter - 1);
            }
            u
        })
        .collect();
    Ok(corpus)
}

/// A flat training batch. Every stage before the length regulator is
/// row-wise and the regulator is block-wise, so concatenating utterances
/// gives the same result as processing them one by one.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub ids: Vec<usize>,
    pub intensity: Vec<f64>,
    pub pitch: Vec<f64>,
    pub energy: Vec<f64>,
    pub duration: Vec<usize>,
    /// Optional frame-level mel target (`sum(duration) x mel_channels`).
    pub mel: Option<Matrix>,
}

impl Batch {
    pub fn from_corpus(corpus: &[ToyUtterance]) -> Self {
        let mut b = Batch {
            ids: Vec::new(),
            intensity: Vec::new(),
            pitch: Vec::new(),
            energy: Vec::new(),
            duration: Vec::new(),
            mel: None,
        };
        for u in corpus {
            b.ids.extend(&u.ids);
            b.intensity.extend(&u.intensity);
            b.pitch.extend(&u.pitch);
            b.energy.extend(&u.energy);
            b.duration.extend(&u.duration);
        }
        b
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossBreakdown {
    pub pitch: f64,
    pub energy: f64,
    pub duration: f64,
    pub mel: f64,
}

impl LossBreakdown {
    pub fn total(&self) -> f64 {
        self.pitch + self.energy + self.duration + self.mel
    }
}

fn predictor_backward(
    p: &mut Predictor,
    input: &Matrix,
    pre: &Matrix,
    grad_out: &Matrix,
) -> Result<Matrix, RenderError> {
    let g_hidden = p.out.backward_from(&relu(pre), grad_out)?;
    let g_pre = relu_backward(pre, &g_hidden)?;
    Ok(p.hidden.backward_from(input, &g_pre)?)
}

fn projection_backward(layer: &mut LinearLayer, input: &Matrix, grad: &Matrix) -> Result<Matrix, RenderError> {
    Ok(layer.backward_from(input, grad)?)
}

/// Summed MSE of standardized pitch, standardized energy and log-duration
/// (plus mel when the batch carries a mel target). Gradients are written
/// into the parameter gradient buffers, which are zeroed first.
///
/// Durations are teacher-forced from the batch for the length regulator.
pub fn loss_and_gradients(params: &mut RendererParams, batch: &Batch) -> Result<LossBreakdown, RenderError> {
    params.zero_grad();
    let Trace {
        accented,
        pitch_pre,
        pitch_raw,
        energy_pre,
        energy_raw,
        duration_pre,
        duration_raw,
        augmented,
    } = trace(&batch.ids, &batch.intensity, params)?;
    let n = batch.ids.len();
    for (len, what) in [
        (batch.pitch.len(), "pitch"),
        (batch.energy.len(), "energy"),
        (batch.duration.len(), "duration"),
    ] {
        if len != n {
            return Err(RenderError::Config(format!("{what} targets: {len} for {n} phonemes")));
        }
    }
    let pitch_target = Matrix::column(
        &batch.pitch.iter().map(|&v| params.pitch_norm.standardize(v)).collect::<Vec<_>>(),
    );
    let energy_target = Matrix::column(
        &batch.energy.iter().map(|&v| params.energy_norm.standardize(v)).collect::<Vec<_>>(),
    );
    let duration_target =
        Matrix::column(&batch.duration.iter().map(|&d| (d as f64).ln()).collect::<Vec<_>>());
    let (pitch_loss, mut g_pitch) = mse_loss(&pitch_raw, &pitch_target)?;
    let (energy_loss, mut g_energy) = mse_loss(&energy_raw, &energy_target)?;
    let (duration_loss, g_duration) = mse_loss(&duration_raw, &duration_target)?;

    let d = accented.cols();
    let mut mel_loss = 0.0;
    let mut g_augmented = Matrix::zeros(n, d);
    if let Some(mel_target) = &batch.mel {
        let frames = length_regulate(&augmented, &batch.duration)?;
        let mel = params.decoder.apply(&frames)?;
        let (l, g_mel) = mse_loss(&mel, mel_target)?;
        mel_loss = l;
        let g_frames = params.decoder.backward_from(&frames, &g_mel)?;
        g_augmented = length_regulate_backward(&g_frames, &batch.duration);
    }

    // augmented = accented + proj_p(pitch_raw) + proj_e(energy_raw)
    let mut g_accented = g_augmented.clone();
    g_pitch.add_assign(&projection_backward(&mut params.pitch_projection, &pitch_raw, &g_augmented)?)?;
    g_energy.add_assign(&projection_backward(&mut params.energy_projection, &energy_raw, &g_augmented)?)?;
    g_accented.add_assign(&predictor_backward(&mut params.pitch_predictor, &accented, &pitch_pre, &g_pitch)?)?;
    g_accented.add_assign(&predictor_backward(&mut params.energy_predictor, &accented, &energy_pre, &g_energy)?)?;
    g_accented.add_assign(&predictor_backward(
        &mut params.duration_predictor,
        &accented,
        &duration_pre,
        &g_duration,
    )?)?;

    let d_ph = params.embedding.dim();
    params.embedding.backward(&batch.ids, &g_accented.slice_cols(0, d_ph))?;
    params
        .intensity_encoder
        .backward_from(&Matrix::column(&batch.intensity), &g_accented.slice_cols(d_ph, d))?;

    Ok(LossBreakdown {
        pitch: pitch_loss,
        energy: energy_loss,
        duration: duration_loss,
        mel: mel_loss,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub params: RendererParams,
    /// Mean per-utterance loss over each epoch.
    pub losses: Vec<f64>,
}

/// Plain gradient descent, one step per utterance in corpus order. There is
/// no optimizer state and no shuffling, so a run is a pure function of its
/// arguments.
///
/// Before the first epoch the pitch and energy standardization statistics are
/// taken from the corpus; with zero epochs the seeded initialization comes
/// back untouched.
pub fn train_toy(
    corpus: &[ToyUtterance],
    config: &RendererConfig,
    epochs: usize,
    learning_rate: f64,
    seed: u64,
) -> Result<TrainOutcome, RenderError> {
    let mut params = RendererParams::init(config, seed)?;
    let mut losses = Vec::with_capacity(epochs);
    if epochs == 0 {
        return Ok(TrainOutcome { params, losses });
    }
    let batch = Batch::from_corpus(corpus);
    params.pitch_norm = TargetNorm::from_values(&batch.pitch);
    params.energy_norm = TargetNorm::from_values(&batch.energy);
    let batches: Vec<Batch> = corpus.iter().map(|u| Batch::from_corpus(std::slice::from_ref(u))).collect();
    for epoch in 0..epochs {
        let mut sum = 0.0;
        for b in &batches {
            let loss = loss_and_gradients(&mut params, b)?.total();
            if !loss.is_finite() {
                return Err(RenderError::Diverged(epoch));
            }
            sum += loss;
            params.step(learning_rate);
        }
        losses.push(sum / batches.len() as f64);
        if !params.flat_params().iter().all(|v| v.is_finite()) {
            return Err(RenderError::Diverged(epoch));
        }
    }
    Ok(TrainOutcome { params, losses })
}

fn ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut out = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            out[k] = avg;
        }
        i = j + 1;
    }
    out
}

/// Spearman rank correlation with average ranks for ties. Returns 0 when
/// either side is constant.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len(), "spearman needs paired samples");
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return 0.0;
    }
    sxy / (sxx * syy).sqrt()
}
