//! Goodness-of-pronunciation scoring.
//!
//! For a canonical phone `p` aligned to frames `[t_s, t_e]`:
//!
//! ```text
//! P(q | o_t) = sum of P(s | o_t) over the senones s of phone q
//! LPP(q)     = mean over t in [t_s, t_e] of ln P(q | o_t)
//! GOP(p)     = ln( LPP(p) / max_q LPP(q) )
//! ```
//!
//! Every phone probability is clamped into `[prob_floor, prob_ceiling]`
//! before the log, so every LPP is strictly negative and the ratio is at
//! least 1. GOP is therefore `>= 0`, and exactly 0 when `p` attains the
//! maximum LPP. Batch GOP values are then min-max normalized (optionally
//! between percentiles) into an accent intensity in `[0, 1]`.

use rayon::prelude::*;
use thiserror::Error;

use crate::types::{
    validate_corpus, AlignmentSegment, AlignmentSet, IntensityCategory, IntensityRecord,
    PhonemeInventory, PosteriorMatrix, PosteriorSet, Violation,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GopError {
    #[error("unknown phone {0}")]
    UnknownPhone(String),
    #[error("span [{t_s}, {t_e}] out of range for {frames} frames")]
    SpanOutOfRange { t_s: usize, t_e: usize, frames: usize },
    #[error("row has {got} senones, inventory has {expected}")]
    RowLength { expected: usize, got: usize },
    #[error("invalid quantizer config: {0}")]
    Config(String),
    #[error("corpus failed validation: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    Validation(Vec<Violation>),
    #[error("normalization bounds must satisfy lo <= hi, got lo={lo} hi={hi}")]
    Bounds { lo: f64, hi: f64 },
    #[error("intensity {0} outside [0, 1]")]
    IntensityOutOfRange(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantizerConfig {
    pub prob_floor: f64,
    pub prob_ceiling: f64,
    /// Percentile of the batch GOP values mapped to intensity 0.
    pub clip_low_pct: f64,
    /// Percentile of the batch GOP values mapped to intensity 1.
    pub clip_high_pct: f64,
}

impl Default for QuantizerConfig {
    fn default() -> Self {
        Self {
            prob_floor: 1e-8,
            prob_ceiling: 1.0 - 1e-8,
            clip_low_pct: 0.0,
            clip_high_pct: 100.0,
        }
    }
}

impl QuantizerConfig {
    pub fn with_clip(mut self, low_pct: f64, high_pct: f64) -> Self {
        self.clip_low_pct = low_pct;
        self.clip_high_pct = high_pct;
        self
    }

    pub fn validate(&self) -> Result<(), GopError> {
        if !(0.0 < self.prob_floor && self.prob_floor < self.prob_ceiling && self.prob_ceiling < 1.0) {
            return Err(GopError::Config(format!(
                "need 0 < prob_floor < prob_ceiling < 1, got {} and {}",
                self.prob_floor, self.prob_ceiling
            )));
        }
        if !(0.0 <= self.clip_low_pct
            && self.clip_low_pct < self.clip_high_pct
            && self.clip_high_pct <= 100.0)
        {
            return Err(GopError::Config(format!(
                "need 0 <= clip_low_pct < clip_high_pct <= 100, got {} and {}",
                self.clip_low_pct, self.clip_high_pct
            )));
        }
        Ok(())
    }

    fn clamp(&self, p: f64) -> f64 {
        p.clamp(self.prob_floor, self.prob_ceiling)
    }
}

fn check_span(matrix: &PosteriorMatrix, segment: &AlignmentSegment) -> Result<(), GopError> {
    if segment.t_s > segment.t_e || segment.t_e >= matrix.frames() {
        return Err(GopError::SpanOutOfRange {
            t_s: segment.t_s,
            t_e: segment.t_e,
            frames: matrix.frames(),
        });
    }
    Ok(())
}

fn marginal(row: &[f64], senones: &[usize], config: &QuantizerConfig) -> f64 {
    config.clamp(senones.iter().map(|&s| row[s]).sum())
}

fn lpp_of_senones(
    matrix: &PosteriorMatrix,
    segment: &AlignmentSegment,
    senones: &[usize],
    config: &QuantizerConfig,
) -> f64 {
    let total: f64 = (segment.t_s..=segment.t_e)
        .map(|t| marginal(matrix.row(t), senones, config).ln())
        .sum();
    total / segment.len() as f64
}

/// `P(phone | o_t)`: the senone posteriors of `phone` summed, then clamped.
pub fn frame_phone_posterior(
    row: &[f64],
    inventory: &PhonemeInventory,
    phone: &str,
    config: &QuantizerConfig,
) -> Result<f64, GopError> {
    let senones = inventory
        .senones_of(phone)
        .ok_or_else(|| GopError::UnknownPhone(phone.to_string()))?;
    if row.len() != inventory.num_senones() {
        return Err(GopError::RowLength {
            expected: inventory.num_senones(),
            got: row.len(),
        });
    }
    Ok(marginal(row, senones, config))
}

/// Frame-averaged log posterior of `phone` over the segment's span, in nats.
pub fn lpp(
    matrix: &PosteriorMatrix,
    segment: &AlignmentSegment,
    inventory: &PhonemeInventory,
    phone: &str,
    config: &QuantizerConfig,
) -> Result<f64, GopError> {
    check_span(matrix, segment)?;
    let senones = inventory
        .senones_of(phone)
        .ok_or_else(|| GopError::UnknownPhone(phone.to_string()))?;
    if matrix.senones() != inventory.num_senones() {
        return Err(GopError::RowLength {
            expected: inventory.num_senones(),
            got: matrix.senones(),
        });
    }
    Ok(lpp_of_senones(matrix, segment, senones, config))
}

/// LPP of the canonical phone and its GOP.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentScore {
    pub lpp: f64,
    pub gop: f64,
}

/// Scores one segment against every phone of the inventory.
pub fn score_segment(
    matrix: &PosteriorMatrix,
    segment: &AlignmentSegment,
    inventory: &PhonemeInventory,
    config: &QuantizerConfig,
) -> Result<SegmentScore, GopError> {
    let canonical = lpp(matrix, segment, inventory, &segment.phone, config)?;
    let best = (0..inventory.phones().len())
        .map(|q| lpp_of_senones(matrix, segment, inventory.senones_at(q), config))
        .fold(f64::NEG_INFINITY, f64::max);
    // ln(a / b) written as ln_1p((a - b) / b): same value, but exactly 0
    // only when a == b, even when the two LPPs are adjacent floats.
    let gop = if canonical >= best {
        0.0
    } else {
        ((canonical - best) / best).ln_1p()
    };
    Ok(SegmentScore {
        lpp: canonical,
        gop,
    })
}

/// GOP of the segment's canonical phone, in nats, `>= 0`.
pub fn gop(
    matrix: &PosteriorMatrix,
    segment: &AlignmentSegment,
    inventory: &PhonemeInventory,
    config: &QuantizerConfig,
) -> Result<f64, GopError> {
    score_segment(matrix, segment, inventory, config).map(|s| s.gop)
}

/// Linear-interpolation percentile of already sorted values.
fn percentile(sorted: &[f64], pct: f64) -> f64 {
    let pos = pct / 100.0 * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + frac * (sorted[hi] - sorted[lo])
    }
}

/// Normalization bounds: `lo` maps to intensity 0, `hi` to 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub lo: f64,
    pub hi: f64,
}

impl Bounds {
    pub fn new(lo: f64, hi: f64) -> Result<Self, GopError> {
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(GopError::Bounds { lo, hi });
        }
        Ok(Self { lo, hi })
    }

    /// Percentile bounds of a batch. An empty batch gets `[0, 0]`.
    pub fn from_batch(gops: &[f64], low_pct: f64, high_pct: f64) -> Self {
        if gops.is_empty() {
            return Self { lo: 0.0, hi: 0.0 };
        }
        let mut sorted = gops.to_vec();
        sorted.sort_by(f64::total_cmp);
        Self {
            lo: percentile(&sorted, low_pct),
            hi: percentile(&sorted, high_pct),
        }
    }

    /// Clamp into `[lo, hi]` then rescale to `[0, 1]`. A zero-width range
    /// carries no accent information and maps everything to 0.
    pub fn normalize(&self, gop: f64) -> f64 {
        if self.hi <= self.lo {
            return 0.0;
        }
        ((gop.clamp(self.lo, self.hi) - self.lo) / (self.hi - self.lo)).clamp(0.0, 1.0)
    }
}

/// Records plus the bounds used to normalize them.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreReport {
    pub records: Vec<IntensityRecord>,
    pub bounds: Bounds,
}

/// Scores every aligned segment and normalizes over the batch.
///
/// Records come out in posterior-file utterance order, then segment order.
pub fn score_corpus(
    posteriors: &PosteriorSet,
    alignments: &AlignmentSet,
    inventory: &PhonemeInventory,
    config: &QuantizerConfig,
) -> Result<ScoreReport, GopError> {
    score_corpus_with_bounds(posteriors, alignments, inventory, config, None)
}

/// As [`score_corpus`]; `frozen` replaces the batch percentiles with fixed
/// bounds, e.g. ones measured on a training split.
pub fn score_corpus_with_bounds(
    posteriors: &PosteriorSet,
    alignments: &AlignmentSet,
    inventory: &PhonemeInventory,
    config: &QuantizerConfig,
    frozen: Option<Bounds>,
) -> Result<ScoreReport, GopError> {
    config.validate()?;
    let violations = validate_corpus(posteriors, alignments, inventory);
    if !violations.is_empty() {
        return Err(GopError::Validation(violations));
    }
    let matrices: Vec<&PosteriorMatrix> = posteriors.iter().collect();
    let per_utt: Vec<Vec<(&AlignmentSegment, SegmentScore)>> = matrices
        .par_iter()
        .map(|m| {
            alignments
                .get(m.utt_id())
                .unwrap_or(&[])
                .iter()
                .map(|seg| score_segment(m, seg, inventory, config).map(|s| (seg, s)))
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<_, _>>()?;
    let scored: Vec<(&AlignmentSegment, SegmentScore)> = per_utt.into_iter().flatten().collect();
    let gops: Vec<f64> = scored.iter().map(|(_, s)| s.gop).collect();
    let bounds = match frozen {
        Some(b) => b,
        None => Bounds::from_batch(&gops, config.clip_low_pct, config.clip_high_pct),
    };
    let records = scored
        .into_iter()
        .map(|(seg, s)| IntensityRecord {
            utt_id: seg.utt_id.clone(),
            index: seg.index,
            phone: seg.phone.clone(),
            t_s: seg.t_s,
            t_e: seg.t_e,
            lpp: s.lpp,
            gop: s.gop,
            intensity: bounds.normalize(s.gop),
        })
        .collect();
    Ok(ScoreReport { records, bounds })
}

/// Slight below 0.35, average below 0.65, strong up to 1.
pub fn categorize(intensity: f64) -> Result<IntensityCategory, GopError> {
    if !(0.0..=1.0).contains(&intensity) {
        return Err(GopError::IntensityOutOfRange(intensity));
    }
    Ok(if intensity < 0.35 {
        IntensityCategory::Slight
    } else if intensity < 0.65 {
        IntensityCategory::Average
    } else {
        IntensityCategory::Strong
    })
}
