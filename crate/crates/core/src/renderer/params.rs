use super::RenderError;
use crate::tensorlet::rng::SplitMix64;
use crate::tensorlet::{relu, seeded_init, EmbeddingTable, InitScheme, LinearLayer, Matrix, TensorError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RendererConfig {
    pub vocab: usize,
    pub embed_dim: usize,
    pub intensity_dim: usize,
    pub hidden_dim: usize,
    pub mel_channels: usize,
    pub max_duration: usize,
}

impl RendererConfig {
    /// Full-width defaults: 256-d phoneme and intensity embeddings, 64 hidden
    /// units per predictor, 80 mel channels, durations capped at 50 frames.
    pub fn new(vocab: usize) -> Self {
        Self {
            vocab,
            embed_dim: 256,
            intensity_dim: 256,
            hidden_dim: 64,
            mel_channels: 80,
            max_duration: 50,
        }
    }

    /// Narrow configuration used by the toy trainer and the CLI.
    pub fn toy() -> Self {
        Self {
            vocab: 12,
            embed_dim: 16,
            intensity_dim: 16,
            hidden_dim: 32,
            mel_channels: 8,
            max_duration: 50,
        }
    }

    /// Width of the concatenated phoneme + intensity embedding.
    pub fn model_dim(&self) -> usize {
        self.embed_dim + self.intensity_dim
    }

    pub fn validate(&self) -> Result<(), RenderError> {
        let fields = [
            ("vocab", self.vocab),
            ("embed_dim", self.embed_dim),
            ("intensity_dim", self.intensity_dim),
            ("hidden_dim", self.hidden_dim),
            ("mel_channels", self.mel_channels),
            ("max_duration", self.max_duration),
        ];
        for (name, v) in fields {
            if v == 0 {
                return Err(RenderError::Config(format!("{name} must be positive")));
            }
        }
        Ok(())
    }
}

/// Two-layer perceptron `in -> hidden -> relu -> 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Predictor {
    pub hidden: LinearLayer,
    pub out: LinearLayer,
}

impl Predictor {
    pub fn init(in_dim: usize, hidden_dim: usize, rng: &mut SplitMix64) -> Self {
        Self {
            hidden: LinearLayer::init(in_dim, hidden_dim, rng.next_u64()),
            out: LinearLayer::init(hidden_dim, 1, rng.next_u64()),
        }
    }

    /// Returns the hidden pre-activation and the `n x 1` output.
    pub fn apply(&self, x: &Matrix) -> Result<(Matrix, Matrix), TensorError> {
        let pre = self.hidden.apply(x)?;
        let y = self.out.apply(&relu(&pre))?;
        Ok((pre, y))
    }
}

/// Mean and standard deviation used to standardize a predicted quantity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetNorm {
    pub mean: f64,
    pub std: f64,
}

impl TargetNorm {
    pub const IDENTITY: TargetNorm = TargetNorm { mean: 0.0, std: 1.0 };

    pub fn from_values(values: &[f64]) -> Self {
        if values.is_empty() {
            return Self::IDENTITY;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let std = if var > 0.0 { var.sqrt() } else { 1.0 };
        Self { mean, std }
    }

    pub fn standardize(&self, v: f64) -> f64 {
        (v - self.mean) / self.std
    }

    pub fn restore(&self, z: f64) -> f64 {
        self.mean + self.std * z
    }
}

/// Every weight of the renderer.
///
/// The pitch and energy predictors output standardized values; `pitch_norm`
/// and `energy_norm` map them back to target units. The projections take the
/// standardized prediction as input.
#[derive(Debug, Clone, PartialEq)]
pub struct RendererParams {
    pub embedding: EmbeddingTable,
    pub intensity_encoder: LinearLayer,
    pub pitch_predictor: Predictor,
    pub energy_predictor: Predictor,
    pub duration_predictor: Predictor,
    pub pitch_projection: LinearLayer,
    pub energy_projection: LinearLayer,
    pub decoder: LinearLayer,
    pub pitch_norm: TargetNorm,
    pub energy_norm: TargetNorm,
    pub max_duration: usize,
}

impl RendererParams {
    /// Seeded initialization. Linear weights and the embedding table are
    /// Glorot-uniform, biases zero; each tensor gets its own sub-seed drawn
    /// from `SplitMix64::new(seed)` in declaration order.
    pub fn init(config: &RendererConfig, seed: u64) -> Result<Self, RenderError> {
        config.validate()?;
        let mut rng = SplitMix64::new(seed);
        let d = config.model_dim();
        let embedding = EmbeddingTable::new(seeded_init(
            config.vocab,
            config.embed_dim,
            rng.next_u64(),
            InitScheme::GlorotUniform,
        ));
        Ok(Self {
            embedding,
            intensity_encoder: LinearLayer::init(1, config.intensity_dim, rng.next_u64()),
            pitch_predictor: Predictor::init(d, config.hidden_dim, &mut rng),
            energy_predictor: Predictor::init(d, config.hidden_dim, &mut rng),
            duration_predictor: Predictor::init(d, config.hidden_dim, &mut rng),
            pitch_projection: LinearLayer::init(1, d, rng.next_u64()),
            energy_projection: LinearLayer::init(1, d, rng.next_u64()),
            decoder: LinearLayer::init(d, config.mel_channels, rng.next_u64()),
            pitch_norm: TargetNorm::IDENTITY,
            energy_norm: TargetNorm::IDENTITY,
            max_duration: config.max_duration,
        })
    }

    pub fn config(&self) -> RendererConfig {
        RendererConfig {
            vocab: self.embedding.vocab(),
            embed_dim: self.embedding.dim(),
            intensity_dim: self.intensity_encoder.out_dim(),
            hidden_dim: self.pitch_predictor.hidden.out_dim(),
            mel_channels: self.decoder.out_dim(),
            max_duration: self.max_duration,
        }
    }

    /// Checks every tensor shape against the derived config.
    pub fn check_shapes(&self) -> Result<(), RenderError> {
        let c = self.config();
        c.validate()?;
        let d = c.model_dim();
        let expect = |name: &str, layer: &LinearLayer, inp: usize, out: usize| {
            if layer.in_dim() == inp && layer.out_dim() == out && layer.bias.len() == out {
                Ok(())
            } else {
                Err(RenderError::Params(format!(
                    "{name} is {}x{}, expected {out}x{inp}",
                    layer.out_dim(),
                    layer.in_dim()
                )))
            }
        };
        expect("intensity_encoder", &self.intensity_encoder, 1, c.intensity_dim)?;
        for (name, p) in self.predictors() {
            expect(name, &p.hidden, d, c.hidden_dim)?;
            expect(name, &p.out, c.hidden_dim, 1)?;
        }
        expect("pitch_projection", &self.pitch_projection, 1, d)?;
        expect("energy_projection", &self.energy_projection, 1, d)?;
        expect("decoder", &self.decoder, d, c.mel_channels)?;
        Ok(())
    }

    pub fn predictors(&self) -> [(&'static str, &Predictor); 3] {
        [
            ("pitch_predictor", &self.pitch_predictor),
            ("energy_predictor", &self.energy_predictor),
            ("duration_predictor", &self.duration_predictor),
        ]
    }

    /// Visits every trainable tensor as `(name, values, gradients)` in a
    /// fixed order.
    pub fn visit_mut(&mut self, mut f: impl FnMut(&str, &mut [f64], &mut [f64])) {
        f("embedding", self.embedding.table.data_mut(), self.embedding.grad.data_mut());
        let mut linear = |name: &str, l: &mut LinearLayer| {
            f(&format!("{name}.weight"), l.weight.data_mut(), l.grad_weight.data_mut());
            f(&format!("{name}.bias"), &mut l.bias, &mut l.grad_bias);
        };
        linear("intensity_encoder", &mut self.intensity_encoder);
        linear("pitch_predictor.hidden", &mut self.pitch_predictor.hidden);
        linear("pitch_predictor.out", &mut self.pitch_predictor.out);
        linear("energy_predictor.hidden", &mut self.energy_predictor.hidden);
        linear("energy_predictor.out", &mut self.energy_predictor.out);
        linear("duration_predictor.hidden", &mut self.duration_predictor.hidden);
        linear("duration_predictor.out", &mut self.duration_predictor.out);
        linear("pitch_projection", &mut self.pitch_projection);
        linear("energy_projection", &mut self.energy_projection);
        linear("decoder", &mut self.decoder);
    }

    pub fn zero_grad(&mut self) {
        self.visit_mut(|_, _, g| g.fill(0.0));
    }

    pub fn step(&mut self, learning_rate: f64) {
        self.visit_mut(|_, w, g| {
            for (w, g) in w.iter_mut().zip(g.iter()) {
                *w -= learning_rate * g;
            }
        });
    }

    pub fn flat_params(&mut self) -> Vec<f64> {
        let mut out = Vec::new();
        self.visit_mut(|_, w, _| out.extend_from_slice(w));
        out
    }

    pub fn flat_grads(&mut self) -> Vec<f64> {
        let mut out = Vec::new();
        self.visit_mut(|_, _, g| out.extend_from_slice(g));
        out
    }

    /// Overwrites all trainable values from a vector laid out like
    /// [`Self::flat_params`].
    pub fn set_flat_params(&mut self, values: &[f64]) {
        let mut offset = 0;
        self.visit_mut(|_, w, _| {
            w.copy_from_slice(&values[offset..offset + w.len()]);
            offset += w.len();
        });
        assert_eq!(offset, values.len(), "parameter vector length mismatch");
    }
}
