use thiserror::Error;

use super::{fields, numbered_lines, syntax, valid_label, ParseError};
use crate::tensorlet::rng::SplitMix64;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub utt_id: String,
    pub posteriors: String,
    pub has_alignment: bool,
}

/// Ordered corpus listing. Line format: `utt_id<TAB>posterior_path<TAB>0|1`,
/// `#` comments allowed, no header.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CorpusManifest {
    pub entries: Vec<ManifestEntry>,
}

impl CorpusManifest {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

pub fn parse_manifest(text: &str) -> Result<CorpusManifest, ParseError> {
    let mut entries: Vec<ManifestEntry> = Vec::new();
    for (n, line) in numbered_lines(text) {
        if line.starts_with('#') {
            continue;
        }
        let parts = fields(n, line, '\t')?;
        let [utt_id, path, flag] = parts[..] else {
            return Err(syntax(n, "expected `utt_id<TAB>posterior_path<TAB>0|1`"));
        };
        if !valid_label(utt_id) {
            return Err(syntax(n, format!("invalid utterance id {utt_id:?}")));
        }
        let has_alignment = match flag {
            "0" => false,
            "1" => true,
            other => return Err(syntax(n, format!("alignment flag must be 0 or 1, got {other:?}"))),
        };
        if entries.iter().any(|e| e.utt_id == utt_id) {
            return Err(syntax(n, format!("duplicate utterance id {utt_id}")));
        }
        entries.push(ManifestEntry {
            utt_id: utt_id.to_string(),
            posteriors: path.to_string(),
            has_alignment,
        });
    }
    Ok(CorpusManifest { entries })
}

pub fn write_manifest(manifest: &CorpusManifest) -> String {
    manifest
        .entries
        .iter()
        .map(|e| format!("{}\t{}\t{}\n", e.utt_id, e.posteriors, u8::from(e.has_alignment)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SplitError {
    #[error("cannot split an empty manifest")]
    EmptyManifest,
    #[error("split ratios must be positive and finite, got {0:?}")]
    InvalidRatios([f64; 3]),
}

/// Largest-remainder apportionment of `n` items over `ratios`. Ties in the
/// fractional part go to the earlier bucket.
pub fn apportion(n: usize, ratios: [f64; 3]) -> [usize; 3] {
    let total: f64 = ratios.iter().sum();
    let quotas = ratios.map(|r| n as f64 * r / total);
    let mut sizes = quotas.map(|q| q.floor() as usize);
    let mut left = n - sizes.iter().sum::<usize>();
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| {
        let (fa, fb) = (quotas[a] - quotas[a].floor(), quotas[b] - quotas[b].floor());
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    for &k in order.iter().cycle() {
        if left == 0 {
            break;
        }
        sizes[k] += 1;
        left -= 1;
    }
    sizes
}

/// Seeded train/validation/test split.
///
/// A Fisher-Yates shuffle driven by [`SplitMix64`] (index `i` swaps with
/// `below(i + 1)`, from the last position down) picks which entries land in
/// which bucket; within each bucket entries keep manifest order.
pub fn split_corpus(
    manifest: &CorpusManifest,
    ratios: [f64; 3],
    seed: u64,
) -> Result<(CorpusManifest, CorpusManifest, CorpusManifest), SplitError> {
    if ratios.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
        return Err(SplitError::InvalidRatios(ratios));
    }
    if manifest.is_empty() {
        return Err(SplitError::EmptyManifest);
    }
    let n = manifest.len();
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = SplitMix64::new(seed);
    for i in (1..n).rev() {
        let j = rng.below(i as u64 + 1) as usize;
        order.swap(i, j);
    }
    let [n_train, n_val, _] = apportion(n, ratios);
    let mut bucket = vec![2u8; n];
    for &i in &order[..n_train] {
        bucket[i] = 0;
    }
    for &i in &order[n_train..n_train + n_val] {
        bucket[i] = 1;
    }
    let pick = |b: u8| CorpusManifest {
        entries: manifest
            .entries
            .iter()
            .zip(&bucket)
            .filter(|(_, &k)| k == b)
            .map(|(e, _)| e.clone())
            .collect(),
    };
    Ok((pick(0), pick(1), pick(2)))
}
