#![allow(dead_code)]

use std::collections::BTreeMap;

use accentkit::io::{CorpusManifest, ManifestEntry};
use accentkit::tensorlet::rng::SplitMix64;
use accentkit::types::{
    AlignmentSegment, AlignmentSet, IntensityRecord, PhonemeInventory, PosteriorMatrix, PosteriorSet,
};

pub struct Corpus {
    pub inventory: PhonemeInventory,
    pub senone_phone: Vec<String>,
    pub posteriors: PosteriorSet,
    pub alignments: AlignmentSet,
}

pub fn phone_label(k: usize) -> String {
    ["a", "b", "ch", "dh", "e", "f"][k].to_string()
}

/// Random valid corpus: up to `max_senones` senones, up to `max_phones`
/// phones, utterances of up to `max_frames` frames tiled by non-overlapping
/// segments with gaps.
pub fn random_corpus(rng: &mut SplitMix64, max_frames: usize, max_senones: usize, max_phones: usize) -> Corpus {
    let senones = 2 + rng.below(max_senones as u64 - 1) as usize;
    let phones = 1 + rng.below(max_phones.min(senones) as u64) as usize;
    let mut senone_phone: Vec<String> = (0..senones)
        .map(|s| {
            if s < phones {
                phone_label(s)
            } else {
                phone_label(rng.below(phones as u64) as usize)
            }
        })
        .collect();
    // shuffle so phone order is not always senone order
    for i in (1..senones).rev() {
        let j = rng.below(i as u64 + 1) as usize;
        senone_phone.swap(i, j);
    }
    let map: BTreeMap<usize, String> = senone_phone.iter().cloned().enumerate().collect();
    let inventory = PhonemeInventory::from_senone_map(map);

    let mut posteriors = PosteriorSet::new();
    let mut alignments = AlignmentSet::new();
    let n_utts = 1 + rng.below(3) as usize;
    for u in 0..n_utts {
        let utt = format!("utt{u}");
        let frames = 1 + rng.below(max_frames as u64) as usize;
        let mut data = Vec::with_capacity(frames * senones);
        for _ in 0..frames {
            // occasionally peaky rows, occasionally an exact zero
            let row: Vec<f64> = (0..senones)
                .map(|_| match rng.below(10) {
                    0 => 0.0,
                    1 => rng.uniform(5.0, 20.0),
                    _ => rng.uniform(0.01, 1.0),
                })
                .collect();
            let mut row = row;
            if row.iter().all(|&v| v == 0.0) {
                row[0] = 1.0;
            }
            let total: f64 = row.iter().sum();
            data.extend(row.iter().map(|v| v / total));
        }
        posteriors
            .insert(PosteriorMatrix::new(utt.clone(), frames, senones, data).unwrap())
            .unwrap();
        let mut t = rng.below(2) as usize;
        while t < frames {
            let len = 1 + rng.below(3) as usize;
            let t_e = (t + len - 1).min(frames - 1);
            alignments.push(AlignmentSegment {
                utt_id: utt.clone(),
                index: 0,
                phone: phone_label(rng.below(phones as u64) as usize),
                t_s: t,
                t_e,
            });
            t = t_e + 1 + rng.below(2) as usize;
        }
    }
    Corpus {
        inventory,
        senone_phone,
        posteriors,
        alignments,
    }
}

/// Direct evaluation: per frame, sum the senone posteriors whose senone maps
/// to each phone, clamp, take logs, average over the span; then the log
/// ratio of the canonical phone's average to the best one.
pub fn brute_force(corpus: &Corpus, seg: &AlignmentSegment) -> (f64, f64) {
    let m = corpus.posteriors.get(&seg.utt_id).unwrap();
    let mut labels: Vec<&String> = corpus.senone_phone.iter().collect();
    labels.sort();
    labels.dedup();
    let lpp_of = |phone: &str| {
        let mut acc = 0.0;
        for t in seg.t_s..=seg.t_e {
            let mut p = 0.0;
            for (s, label) in corpus.senone_phone.iter().enumerate() {
                if label == phone {
                    p += m.row(t)[s];
                }
            }
            acc += p.clamp(1e-8, 1.0 - 1e-8).ln();
        }
        acc / (seg.t_e - seg.t_s + 1) as f64
    };
    let own = lpp_of(&seg.phone);
    let best = labels.iter().map(|q| lpp_of(q)).fold(f64::NEG_INFINITY, f64::max);
    let gop = if own == best { 0.0 } else { ((own - best) / best).ln_1p() };
    (own, gop)
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    a == b || (a - b).abs() <= tol * a.abs().max(b.abs())
}

/// Uniform value on the 6-decimal grid in `[lo, hi]` (in micro-units).
pub fn grid(rng: &mut SplitMix64, lo_micro: i64, hi_micro: i64) -> f64 {
    let span = (hi_micro - lo_micro) as u64 + 1;
    (lo_micro + rng.below(span) as i64) as f64 / 1e6
}

/// Row of `n` grid probabilities summing to exactly one million micro-units.
pub fn grid_row(rng: &mut SplitMix64, n: usize) -> Vec<f64> {
    let mut cuts: Vec<u64> = (0..n - 1).map(|_| rng.below(1_000_001)).collect();
    cuts.sort_unstable();
    let mut prev = 0;
    let mut row = Vec::with_capacity(n);
    for c in cuts.into_iter().chain([1_000_000]) {
        row.push((c - prev) as f64 / 1e6);
        prev = c;
    }
    row
}

pub fn grid_posteriors(rng: &mut SplitMix64) -> PosteriorSet {
    let mut set = PosteriorSet::new();
    let senones = 2 + rng.below(6) as usize;
    for u in 0..1 + rng.below(4) {
        let frames = 1 + rng.below(12) as usize;
        let data: Vec<f64> = (0..frames).flat_map(|_| grid_row(rng, senones)).collect();
        set.insert(PosteriorMatrix::new(format!("spk{u}_utt"), frames, senones, data).unwrap())
            .unwrap();
    }
    set
}

pub fn random_records(rng: &mut SplitMix64) -> Vec<IntensityRecord> {
    (0..rng.below(20))
        .map(|k| {
            let t_s = rng.below(50) as usize;
            IntensityRecord {
                utt_id: format!("u{}", rng.below(3)),
                index: k as usize,
                phone: phone_label(rng.below(6) as usize),
                t_s,
                t_e: t_s + rng.below(5) as usize,
                lpp: grid(rng, -20_000_000, 0),
                gop: grid(rng, 0, 20_000_000),
                intensity: grid(rng, 0, 1_000_000),
            }
        })
        .collect()
}

pub fn random_manifest(rng: &mut SplitMix64) -> CorpusManifest {
    CorpusManifest {
        entries: (0..rng.below(30))
            .map(|k| ManifestEntry {
                utt_id: format!("utt{k:03}"),
                posteriors: format!("post/part {}.apost", rng.below(5)),
                has_alignment: rng.below(2) == 1,
            })
            .collect(),
    }
}
