use super::{RenderError, RendererParams};
use crate::tensorlet::{Matrix, TensorError};

/// Everything produced by one render.
#[derive(Debug, Clone, PartialEq)]
pub struct RenderOutput {
    /// Predicted pitch per phoneme, in target units.
    pub pitch: Vec<f64>,
    pub energy: Vec<f64>,
    /// Frames per phoneme, in `[1, max_duration]`.
    pub durations: Vec<usize>,
    /// Phoneme embedding concatenated with the intensity embedding.
    pub accented: Matrix,
    /// `accented` plus the pitch and energy embeddings.
    pub augmented: Matrix,
    /// `augmented` expanded to frame level by the length regulator.
    pub frames: Matrix,
    pub mel: Matrix,
}

impl RenderOutput {
    pub fn num_frames(&self) -> usize {
        self.frames.rows()
    }
}

pub fn encode_phonemes(ids: &[usize], params: &RendererParams) -> Result<Matrix, RenderError> {
    params.embedding.lookup(ids).map_err(|e| match e {
        TensorError::Index { index, vocab } => RenderError::PhonemeOutOfRange { id: index, vocab },
        other => other.into(),
    })
}

pub fn encode_intensity(scores: &[f64], params: &RendererParams) -> Result<Matrix, RenderError> {
    if let Some(&bad) = scores.iter().find(|s| !(0.0..=1.0).contains(*s)) {
        return Err(RenderError::IntensityOutOfRange(bad));
    }
    Ok(params.intensity_encoder.apply(&Matrix::column(scores))?)
}

/// Repeats row `t` of `rows` `durations[t]` times, in order.
pub fn length_regulate(rows: &Matrix, durations: &[usize]) -> Result<Matrix, RenderError> {
    if durations.len() != rows.rows() {
        return Err(RenderError::LengthMismatch {
            ids: rows.rows(),
            scores: durations.len(),
        });
    }
    if let Some((index, &duration)) = durations.iter().enumerate().find(|(_, &d)| d == 0) {
        return Err(RenderError::Duration { index, duration });
    }
    let total: usize = durations.iter().sum();
    let mut data = Vec::with_capacity(total * rows.cols());
    for (t, &d) in durations.iter().enumerate() {
        for _ in 0..d {
            data.extend_from_slice(rows.row(t));
        }
    }
    Ok(Matrix::new(total, rows.cols(), data)?)
}

/// Sum of the `durations` row blocks of `grad`: the adjoint of
/// [`length_regulate`].
pub(crate) fn length_regulate_backward(grad: &Matrix, durations: &[usize]) -> Matrix {
    let mut out = Matrix::zeros(durations.len(), grad.cols());
    let mut frame = 0;
    for (t, &d) in durations.iter().enumerate() {
        for _ in 0..d {
            for (o, g) in out.row_mut(t).iter_mut().zip(grad.row(frame)) {
                *o += g;
            }
            frame += 1;
        }
    }
    out
}

/// Intermediate values of one pass, kept for the backward pass.
pub(crate) struct Trace {
    pub accented: Matrix,
    pub pitch_pre: Matrix,
    pub pitch_raw: Matrix,
    pub energy_pre: Matrix,
    pub energy_raw: Matrix,
    pub duration_pre: Matrix,
    pub duration_raw: Matrix,
    pub augmented: Matrix,
}

pub(crate) fn trace(
    ids: &[usize],
    scores: &[f64],
    params: &RendererParams,
) -> Result<Trace, RenderError> {
    if ids.len() != scores.len() {
        return Err(RenderError::LengthMismatch {
            ids: ids.len(),
            scores: scores.len(),
        });
    }
    let accented = encode_phonemes(ids, params)?.concat_cols(&encode_intensity(scores, params)?)?;
    let (pitch_pre, pitch_raw) = params.pitch_predictor.apply(&accented)?;
    let (energy_pre, energy_raw) = params.energy_predictor.apply(&accented)?;
    let (duration_pre, duration_raw) = params.duration_predictor.apply(&accented)?;
    let pitch_emb = params.pitch_projection.apply(&pitch_raw)?;
    let energy_emb = params.energy_projection.apply(&energy_raw)?;
    let augmented = accented.add(&pitch_emb)?.add(&energy_emb)?;
    Ok(Trace {
        accented,
        pitch_pre,
        pitch_raw,
        energy_pre,
        energy_raw,
        duration_pre,
        duration_raw,
        augmented,
    })
}

/// Frames for a predicted log-duration: `clamp(round(exp(raw)), 1, cap)`.
pub(crate) fn frames_for(raw: f64, cap: usize) -> usize {
    let d = raw.exp().round();
    if d >= cap as f64 {
        cap
    } else if d >= 1.0 {
        d as usize
    } else {
        1
    }
}

/// Renders one utterance with a per-phoneme intensity in `[0, 1]`.
pub fn render(ids: &[usize], scores: &[f64], params: &RendererParams) -> Result<RenderOutput, RenderError> {
    let t = trace(ids, scores, params)?;
    let durations: Vec<usize> = t
        .duration_raw
        .data()
        .iter()
        .map(|&raw| frames_for(raw, params.max_duration))
        .collect();
    let frames = length_regulate(&t.augmented, &durations)?;
    let mel = params.decoder.apply(&frames)?;
    Ok(RenderOutput {
        pitch: t.pitch_raw.data().iter().map(|&z| params.pitch_norm.restore(z)).collect(),
        energy: t.energy_raw.data().iter().map(|&z| params.energy_norm.restore(z)).collect(),
        durations,
        accented: t.accented,
        augmented: t.augmented,
        frames,
        mel,
    })
}

/// Utterance-level control: one intensity shared by every phoneme.
pub fn render_uniform(ids: &[usize], score: f64, params: &RendererParams) -> Result<RenderOutput, RenderError> {
    render(ids, &vec![score; ids.len()], params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::renderer::RendererConfig;
    use crate::tensorlet::LinearLayer;

    fn params() -> RendererParams {
        RendererParams::init(&RendererConfig::toy(), 21).unwrap()
    }

    #[test]
    fn phoneme_lookup() {
        let p = params();
        let h = encode_phonemes(&[0, 0], &p).unwrap();
        assert_eq!(h.row(0), h.row(1));
        let h = encode_phonemes(&[0, 1], &p).unwrap();
        assert_eq!(h.row(0), p.embedding.table.row(0));
        assert_eq!(h.row(1), p.embedding.table.row(1));
        assert!(matches!(
            encode_phonemes(&[12], &p),
            Err(RenderError::PhonemeOutOfRange { id: 12, vocab: 12 })
        ));
    }

    #[test]
    fn intensity_encoding() {
        let mut p = params();
        p.intensity_encoder.bias.fill(0.0);
        let h = encode_intensity(&[0.0], &p).unwrap();
        assert!(h.data().iter().all(|&v| v == 0.0));
        let h = encode_intensity(&[0.0, 0.5, 1.0], &p).unwrap();
        for c in 0..16 {
            assert_eq!(h.get(1, c), (h.get(0, c) + h.get(2, c)) / 2.0);
        }
        p.intensity_encoder.bias = (0..16).map(|i| i as f64 * 0.1 - 0.5).collect();
        let h = encode_intensity(&[0.3, 0.3], &p).unwrap();
        assert_eq!(h.row(0), h.row(1));
        let h = encode_intensity(&[0.0, 0.5, 1.0], &p).unwrap();
        for c in 0..16 {
            assert!((h.get(1, c) - (h.get(0, c) + h.get(2, c)) / 2.0).abs() < 1e-15);
        }
        assert!(encode_intensity(&[1.5], &p).is_err());
        assert!(encode_intensity(&[f64::NAN], &p).is_err());
    }

    #[test]
    fn length_regulator() {
        let rows = Matrix::from_rows(&[vec![0.0, 0.5], vec![1.0, 1.5], vec![2.0, 2.5]]).unwrap();
        let out = length_regulate(&rows, &[2, 1, 3]).unwrap();
        assert_eq!(out.rows(), 6);
        let firsts: Vec<f64> = (0..6).map(|r| out.get(r, 0)).collect();
        assert_eq!(firsts, [0.0, 0.0, 1.0, 2.0, 2.0, 2.0]);
        assert_eq!(length_regulate(&rows, &[1, 1, 1]).unwrap(), rows);
        assert!(matches!(
            length_regulate(&rows, &[1, 0, 1]),
            Err(RenderError::Duration { index: 1, .. })
        ));
        assert!(length_regulate(&rows, &[1, 1]).is_err());
    }

    #[test]
    fn regulator_adjoint() {
        let g = Matrix::from_rows(&[vec![1.0], vec![2.0], vec![3.0]]).unwrap();
        assert_eq!(length_regulate_backward(&g, &[2, 1]).data(), &[3.0, 3.0]);
    }

    #[test]
    fn empty_utterance() {
        let out = render(&[], &[], &params()).unwrap();
        assert!(out.pitch.is_empty() && out.durations.is_empty());
        assert_eq!(out.num_frames(), 0);
        assert_eq!(out.mel.shape(), (0, 8));
    }

    #[test]
    fn zero_projections_leave_accented_untouched() {
        let mut p = params();
        p.pitch_projection = LinearLayer::new(Matrix::zeros(32, 1), vec![0.0; 32]).unwrap();
        p.energy_projection = LinearLayer::new(Matrix::zeros(32, 1), vec![0.0; 32]).unwrap();
        let out = render(&[1, 2, 3], &[0.1, 0.5, 0.9], &p).unwrap();
        assert_eq!(out.augmented, out.accented);
    }

    #[test]
    fn broadcast_matches_per_phoneme() {
        let p = params();
        let ids = [4, 1, 1, 7];
        assert_eq!(
            render_uniform(&ids, 0.5, &p).unwrap(),
            render(&ids, &[0.5; 4], &p).unwrap()
        );
    }

    #[test]
    fn shapes() {
        let p = params();
        let out = render(&[0, 5, 11], &[0.0, 0.4, 1.0], &p).unwrap();
        assert_eq!(out.accented.shape(), (3, 32));
        let total: usize = out.durations.iter().sum();
        assert_eq!(out.frames.rows(), total);
        assert_eq!(out.mel.shape(), (total, 8));
        assert!(out.durations.iter().all(|&d| (1..=50).contains(&d)));
        assert!(render(&[0, 1], &[0.5], &p).is_err());
    }

    #[test]
    fn duration_rounding() {
        assert_eq!(frames_for(-10.0, 50), 1);
        assert_eq!(frames_for(0.0, 50), 1);
        assert_eq!(frames_for(2.0f64.ln(), 50), 2);
        assert_eq!(frames_for(100.0, 50), 50);
        assert_eq!(frames_for(1000.0, 50), 50);
    }
}
