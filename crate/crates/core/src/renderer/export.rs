use std::collections::HashMap;

use super::{RenderError, RenderOutput, RendererConfig, RendererParams, TargetNorm};
use crate::io::format_real;
use crate::tensorlet::{parse_checkpoint, write_checkpoint, LinearLayer, Matrix};

fn linear_tensors(out: &mut Vec<(String, Matrix)>, name: &str, l: &LinearLayer) {
    out.push((format!("{name}.weight"), l.weight.clone()));
    out.push((format!("{name}.bias"), Matrix::new(1, l.bias.len(), l.bias.clone()).expect("bias row")));
}

/// Named tensors in the same order as [`RendererParams::visit_mut`], then
/// `target_norm` (rows: pitch, energy; columns: mean, std) and
/// `max_duration`.
fn named_tensors(p: &RendererParams) -> Vec<(String, Matrix)> {
    let mut out = vec![("embedding".to_string(), p.embedding.table.clone())];
    linear_tensors(&mut out, "intensity_encoder", &p.intensity_encoder);
    for (name, pred) in p.predictors() {
        linear_tensors(&mut out, &format!("{name}.hidden"), &pred.hidden);
        linear_tensors(&mut out, &format!("{name}.out"), &pred.out);
    }
    linear_tensors(&mut out, "pitch_projection", &p.pitch_projection);
    linear_tensors(&mut out, "energy_projection", &p.energy_projection);
    linear_tensors(&mut out, "decoder", &p.decoder);
    let norms = vec![p.pitch_norm.mean, p.pitch_norm.std, p.energy_norm.mean, p.energy_norm.std];
    out.push(("target_norm".into(), Matrix::new(2, 2, norms).expect("2x2")));
    out.push((
        "max_duration".into(),
        Matrix::new(1, 1, vec![p.max_duration as f64]).expect("1x1"),
    ));
    out
}

pub fn save_params(params: &RendererParams) -> String {
    let tensors = named_tensors(params);
    write_checkpoint(tensors.iter().map(|(n, m)| (n.as_str(), m)))
}

pub fn load_params(text: &str) -> Result<RendererParams, RenderError> {
    let mut tensors: HashMap<String, Matrix> = parse_checkpoint(text)?.into_iter().collect();
    let dims = |t: &HashMap<String, Matrix>, name: &str| {
        t.get(name)
            .map(Matrix::shape)
            .ok_or_else(|| RenderError::Params(format!("missing tensor {name}")))
    };
    let (vocab, embed_dim) = dims(&tensors, "embedding")?;
    let (intensity_dim, _) = dims(&tensors, "intensity_encoder.weight")?;
    let (hidden_dim, _) = dims(&tensors, "pitch_predictor.hidden.weight")?;
    let (mel_channels, _) = dims(&tensors, "decoder.weight")?;
    let cap = tensors
        .get("max_duration")
        .filter(|m| m.shape() == (1, 1))
        .map(|m| m.get(0, 0))
        .ok_or_else(|| RenderError::Params("max_duration must be a 1x1 tensor".into()))?;
    if !(cap >= 1.0 && cap.fract() == 0.0 && cap <= u32::MAX as f64) {
        return Err(RenderError::Params(format!("max_duration {cap} is not a positive integer")));
    }
    let config = RendererConfig {
        vocab,
        embed_dim,
        intensity_dim,
        hidden_dim,
        mel_channels,
        max_duration: cap as usize,
    };
    let mut params = RendererParams::init(&config, 0)?;
    for (name, expected) in named_tensors(&params) {
        let got = tensors
            .get(&name)
            .ok_or_else(|| RenderError::Params(format!("missing tensor {name}")))?;
        if got.shape() != expected.shape() {
            return Err(RenderError::Params(format!(
                "{name} is {:?}, expected {:?}",
                got.shape(),
                expected.shape()
            )));
        }
    }
    let norm = tensors.remove("target_norm").expect("checked");
    for (what, row) in [("pitch", 0), ("energy", 1)] {
        if norm.get(row, 1) <= 0.0 {
            return Err(RenderError::Params(format!("{what} std must be positive")));
        }
    }
    params.pitch_norm = TargetNorm {
        mean: norm.get(0, 0),
        std: norm.get(0, 1),
    };
    params.energy_norm = TargetNorm {
        mean: norm.get(1, 0),
        std: norm.get(1, 1),
    };
    tensors.remove("max_duration");
    params.visit_mut(|name, w, _| {
        let m = tensors.remove(name).expect("checked");
        w.copy_from_slice(m.data());
    });
    if let Some(extra) = tensors.keys().min() {
        return Err(RenderError::Params(format!("unexpected tensor {extra}")));
    }
    Ok(params)
}

/// One row per phoneme: `index,phone_id,intensity,pitch,energy,duration`.
pub fn phoneme_csv(ids: &[usize], scores: &[f64], out: &RenderOutput) -> String {
    let mut s = String::from("index,phone_id,intensity,pitch,energy,duration\n");
    for k in 0..ids.len() {
        s.push_str(&format!(
            "{k},{},{},{},{},{}\n",
            ids[k],
            format_real(scores[k]),
            format_real(out.pitch[k]),
            format_real(out.energy[k]),
            out.durations[k]
        ));
    }
    s
}

/// One row per frame: the owning phoneme, its pitch and energy, then the
/// mel channels.
pub fn frame_csv(out: &RenderOutput) -> String {
    let mut s = String::from("frame,phoneme_index,pitch,energy");
    for c in 0..out.mel.cols() {
        s.push_str(&format!(",mel_{c}"));
    }
    s.push('\n');
    let mut frame = 0;
    for (k, &d) in out.durations.iter().enumerate() {
        for _ in 0..d {
            s.push_str(&format!(
                "{frame},{k},{},{}",
                format_real(out.pitch[k]),
                format_real(out.energy[k])
            ));
            for v in out.mel.row(frame) {
                s.push(',');
                s.push_str(&format_real(*v));
            }
            s.push('\n');
            frame += 1;
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::renderer::render;

    #[test]
    fn checkpoint_round_trip_is_exact() {
        let mut p = RendererParams::init(&RendererConfig::toy(), 8).unwrap();
        p.pitch_norm = TargetNorm { mean: 130.1, std: 17.3 };
        p.decoder.bias[2] = -0.1;
        let q = load_params(&save_params(&p)).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn load_rejects_bad_files() {
        let p = RendererParams::init(&RendererConfig::toy(), 8).unwrap();
        let text = save_params(&p);
        let dropped: String = {
            let tensors = parse_checkpoint(&text).unwrap();
            write_checkpoint(tensors.iter().filter(|(n, _)| n != "decoder.bias").map(|(n, m)| (n.as_str(), m)))
        };
        assert!(matches!(load_params(&dropped), Err(RenderError::Params(_))));
        let mut tensors = parse_checkpoint(&text).unwrap();
        let extra = Matrix::zeros(1, 1);
        tensors.push(("stray".into(), extra));
        let t = write_checkpoint(tensors.iter().map(|(n, m)| (n.as_str(), m)));
        assert!(load_params(&t).is_err());
        assert!(load_params("TENSORLET 2\n").is_err());
    }

    #[test]
    fn csv_layout() {
        let p = RendererParams::init(&RendererConfig::toy(), 8).unwrap();
        let ids = [1, 2];
        let out = render(&ids, &[0.25, 1.0], &p).unwrap();
        let pc = phoneme_csv(&ids, &[0.25, 1.0], &out);
        let lines: Vec<&str> = pc.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("0,1,0.250000,"));
        let fc = frame_csv(&out);
        let lines: Vec<&str> = fc.lines().collect();
        assert_eq!(lines.len(), 1 + out.num_frames());
        assert_eq!(lines[0].split(',').count(), 4 + 8);
    }
}
