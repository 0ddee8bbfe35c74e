//! Domain types shared by the whole pipeline, plus structural validation.
//!
//! Everything here is immutable once built. Validation never fails; it
//! returns the list of problems it found so callers can report all of them
//! at once.

use std::collections::BTreeMap;
use std::fmt;

use indexmap::IndexMap;
use thiserror::Error;

/// Absolute tolerance on the sum of every posterior row.
pub const ROW_SUM_TOLERANCE: f64 = 1e-3;

/// The phone set together with the senone -> phone map.
///
/// The number of senones `S` is one past the largest senone index present in
/// the map, so a gap in the indexes shows up as a missing senone.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhonemeInventory {
    phones: Vec<String>,
    senone_to_phone: BTreeMap<usize, String>,
    // senones owned by each entry of `phones`, ascending
    phone_senones: Vec<Vec<usize>>,
}

impl PhonemeInventory {
    /// Builds an inventory from an explicit phone list and map. No checks are
    /// made; run [`validate_inventory`] on the result.
    pub fn new(phones: Vec<String>, senone_to_phone: BTreeMap<usize, String>) -> Self {
        let phone_senones = phones
            .iter()
            .map(|p| {
                senone_to_phone
                    .iter()
                    .filter(|(_, q)| *q == p)
                    .map(|(s, _)| *s)
                    .collect()
            })
            .collect();
        Self {
            phones,
            senone_to_phone,
            phone_senones,
        }
    }

    /// Builds an inventory whose phone list is derived from the map, ordered
    /// by each phone's lowest senone index.
    pub fn from_senone_map(senone_to_phone: BTreeMap<usize, String>) -> Self {
        let mut phones: Vec<String> = Vec::new();
        for phone in senone_to_phone.values() {
            if !phones.contains(phone) {
                phones.push(phone.clone());
            }
        }
        Self::new(phones, senone_to_phone)
    }

    pub fn phones(&self) -> &[String] {
        &self.phones
    }

    pub fn senone_to_phone(&self) -> &BTreeMap<usize, String> {
        &self.senone_to_phone
    }

    pub fn num_senones(&self) -> usize {
        self.senone_to_phone
            .keys()
            .next_back()
            .map_or(0, |max| max + 1)
    }

    pub fn phone_index(&self, phone: &str) -> Option<usize> {
        self.phones.iter().position(|p| p == phone)
    }

    pub fn contains(&self, phone: &str) -> bool {
        self.phone_index(phone).is_some()
    }

    /// Senones belonging to `phone`, ascending. `None` for an unknown phone.
    pub fn senones_of(&self, phone: &str) -> Option<&[usize]> {
        self.phone_index(phone).map(|i| self.phone_senones[i].as_slice())
    }

    /// Senones belonging to the phone at position `index` of [`Self::phones`].
    pub fn senones_at(&self, index: usize) -> &[usize] {
        &self.phone_senones[index]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ShapeError {
    #[error("posterior matrix for {utt_id} needs at least 1 frame, got 0")]
    NoFrames { utt_id: String },
    #[error("posterior matrix for {utt_id} needs at least 2 senones, got {senones}")]
    TooFewSenones { utt_id: String, senones: usize },
    #[error("posterior matrix for {utt_id}: {frames}x{senones} needs {expected} values, got {got}")]
    DataLength {
        utt_id: String,
        frames: usize,
        senones: usize,
        expected: usize,
        got: usize,
    },
}

/// Frame posteriors `P(s | o_t)` of one utterance, `T` rows by `S` columns.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorMatrix {
    utt_id: String,
    frames: usize,
    senones: usize,
    data: Vec<f64>,
}

impl PosteriorMatrix {
    /// Checks shape only. Probability-level problems are reported by
    /// [`PosteriorMatrix::violations`].
    pub fn new(
        utt_id: impl Into<String>,
        frames: usize,
        senones: usize,
        data: Vec<f64>,
    ) -> Result<Self, ShapeError> {
        let utt_id = utt_id.into();
        if frames == 0 {
            return Err(ShapeError::NoFrames { utt_id });
        }
        if senones < 2 {
            return Err(ShapeError::TooFewSenones { utt_id, senones });
        }
        if data.len() != frames * senones {
            return Err(ShapeError::DataLength {
                utt_id,
                frames,
                senones,
                expected: frames * senones,
                got: data.len(),
            });
        }
        Ok(Self {
            utt_id,
            frames,
            senones,
            data,
        })
    }

    /// Convenience constructor from row vectors.
    pub fn from_rows(utt_id: impl Into<String>, rows: &[Vec<f64>]) -> Result<Self, ShapeError> {
        let senones = rows.first().map_or(0, Vec::len);
        let data: Vec<f64> = rows.iter().flatten().copied().collect();
        Self::new(utt_id, rows.len(), senones, data)
    }

    pub fn utt_id(&self) -> &str {
        &self.utt_id
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn senones(&self) -> usize {
        self.senones
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.data[t * self.senones..(t + 1) * self.senones]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.senones)
    }

    /// Entry range and row-sum problems, in frame order.
    pub fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        for (t, row) in self.rows().enumerate() {
            for (s, &v) in row.iter().enumerate() {
                if !(0.0..=1.0).contains(&v) {
                    out.push(Violation::EntryOutOfRange {
                        utt_id: self.utt_id.clone(),
                        frame: t,
                        senone: s,
                        value: v,
                    });
                }
            }
            let sum: f64 = row.iter().sum();
            if !((sum - 1.0).abs() <= ROW_SUM_TOLERANCE) {
                out.push(Violation::RowSum {
                    utt_id: self.utt_id.clone(),
                    frame: t,
                    sum,
                });
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("duplicate utterance id {0}")]
pub struct DuplicateUtterance(pub String);

/// Posterior matrices keyed by utterance id, in insertion (file) order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PosteriorSet {
    matrices: IndexMap<String, PosteriorMatrix>,
}

impl PosteriorSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, matrix: PosteriorMatrix) -> Result<(), DuplicateUtterance> {
        if self.matrices.contains_key(matrix.utt_id()) {
            return Err(DuplicateUtterance(matrix.utt_id().to_string()));
        }
        self.matrices.insert(matrix.utt_id().to_string(), matrix);
        Ok(())
    }

    pub fn get(&self, utt_id: &str) -> Option<&PosteriorMatrix> {
        self.matrices.get(utt_id)
    }

    pub fn iter(&self) -> impl Iterator<Item = &PosteriorMatrix> {
        self.matrices.values()
    }

    pub fn len(&self) -> usize {
        self.matrices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrices.is_empty()
    }
}

impl FromIterator<PosteriorMatrix> for Result<PosteriorSet, DuplicateUtterance> {
    fn from_iter<I: IntoIterator<Item = PosteriorMatrix>>(iter: I) -> Self {
        let mut set = PosteriorSet::new();
        for m in iter {
            set.insert(m)?;
        }
        Ok(set)
    }
}

/// One canonical phone with its inclusive frame span `[t_s, t_e]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlignmentSegment {
    pub utt_id: String,
    pub index: usize,
    pub phone: String,
    pub t_s: usize,
    pub t_e: usize,
}

impl AlignmentSegment {
    pub fn len(&self) -> usize {
        self.t_e + 1 - self.t_s
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Segments grouped per utterance, each group sorted by start frame.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AlignmentSet {
    utterances: IndexMap<String, Vec<AlignmentSegment>>,
}

impl AlignmentSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a segment to its utterance; the group is kept sorted by `t_s` and
    /// re-indexed. Overlap checks belong to the parser and to
    /// [`validate_corpus`].
    pub fn push(&mut self, mut segment: AlignmentSegment) {
        let group = self.utterances.entry(segment.utt_id.clone()).or_default();
        let pos = group.partition_point(|s| s.t_s <= segment.t_s);
        segment.index = pos;
        group.insert(pos, segment);
        for (i, s) in group.iter_mut().enumerate().skip(pos) {
            s.index = i;
        }
    }

    pub fn get(&self, utt_id: &str) -> Option<&[AlignmentSegment]> {
        self.utterances.get(utt_id).map(Vec::as_slice)
    }

    pub fn utterances(&self) -> impl Iterator<Item = (&str, &[AlignmentSegment])> {
        self.utterances
            .iter()
            .map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    pub fn segments(&self) -> impl Iterator<Item = &AlignmentSegment> {
        self.utterances.values().flatten()
    }

    pub fn num_segments(&self) -> usize {
        self.utterances.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.utterances.is_empty()
    }
}

/// Per-phoneme scoring result.
#[derive(Debug, Clone, PartialEq)]
pub struct IntensityRecord {
    pub utt_id: String,
    pub index: usize,
    pub phone: String,
    pub t_s: usize,
    pub t_e: usize,
    /// Log phoneme posterior of the canonical phone, nats, `<= 0`.
    pub lpp: f64,
    /// Goodness of pronunciation, nats, `>= 0`; 0 is native-like.
    pub gop: f64,
    /// Normalized accent intensity in `[0, 1]`, 1 is the strongest accent.
    pub intensity: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum IntensityCategory {
    Slight,
    Average,
    Strong,
}

impl IntensityCategory {
    pub const ALL: [IntensityCategory; 3] = [Self::Slight, Self::Average, Self::Strong];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Slight => "slight",
            Self::Average => "average",
            Self::Strong => "strong",
        }
    }
}

impl fmt::Display for IntensityCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A single structural problem found by validation.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    MissingSenone(usize),
    UnknownPhone(String),
    OrphanPhone(String),
    InvalidPhoneLabel(String),
    DuplicatePhoneLabel(String),
    SenoneCountMismatch {
        utt_id: String,
        expected: usize,
        got: usize,
    },
    EntryOutOfRange {
        utt_id: String,
        frame: usize,
        senone: usize,
        value: f64,
    },
    RowSum {
        utt_id: String,
        frame: usize,
        sum: f64,
    },
    UnknownUtterance(String),
    SpanOutOfRange {
        utt_id: String,
        index: usize,
        t_s: usize,
        t_e: usize,
        frames: usize,
    },
    SegmentOrder {
        utt_id: String,
        index: usize,
    },
    SegmentUnknownPhone {
        utt_id: String,
        index: usize,
        phone: String,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::MissingSenone(s) => write!(f, "missing-senone({s})"),
            Self::UnknownPhone(p) => write!(f, "unknown-phone({p})"),
            Self::OrphanPhone(p) => write!(f, "orphan-phone({p}): owns no senone"),
            Self::InvalidPhoneLabel(p) => write!(f, "invalid-phone-label({p:?})"),
            Self::DuplicatePhoneLabel(p) => write!(f, "duplicate-phone-label({p})"),
            Self::SenoneCountMismatch {
                utt_id,
                expected,
                got,
            } => write!(
                f,
                "senone-count-mismatch({utt_id}): inventory has {expected}, matrix has {got}"
            ),
            Self::EntryOutOfRange {
                utt_id,
                frame,
                senone,
                value,
            } => write!(
                f,
                "entry-out-of-range({utt_id}, frame {frame}, senone {senone}): {value}"
            ),
            Self::RowSum { utt_id, frame, sum } => write!(
                f,
                "row-sum-violation({utt_id}, frame {frame}): sum {sum}, |sum-1| > {ROW_SUM_TOLERANCE:e}"
            ),
            Self::UnknownUtterance(u) => write!(f, "unknown-utterance({u})"),
            Self::SpanOutOfRange {
                utt_id,
                index,
                t_s,
                t_e,
                frames,
            } => write!(
                f,
                "span-out-of-range({utt_id}#{index}): [{t_s}, {t_e}] with {frames} frames"
            ),
            Self::SegmentOrder { utt_id, index } => {
                write!(f, "segment-order({utt_id}#{index}): unsorted or overlapping")
            }
            Self::SegmentUnknownPhone {
                utt_id,
                index,
                phone,
            } => write!(f, "unknown-phone({phone}) in segment {utt_id}#{index}"),
        }
    }
}

fn label_is_valid(label: &str) -> bool {
    !label.is_empty() && !label.chars().any(char::is_whitespace)
}

/// Checks every inventory invariant. Empty result iff the inventory is sound.
pub fn validate_inventory(inventory: &PhonemeInventory) -> Vec<Violation> {
    let mut out = Vec::new();
    let map = inventory.senone_to_phone();
    for s in 0..inventory.num_senones() {
        if !map.contains_key(&s) {
            out.push(Violation::MissingSenone(s));
        }
    }
    let mut reported = Vec::new();
    for phone in map.values() {
        if !inventory.contains(phone) && !reported.contains(&phone) {
            reported.push(phone);
            out.push(Violation::UnknownPhone(phone.clone()));
        }
    }
    for (i, phone) in inventory.phones().iter().enumerate() {
        if !label_is_valid(phone) {
            out.push(Violation::InvalidPhoneLabel(phone.clone()));
        }
        if inventory.phones()[..i].contains(phone) {
            out.push(Violation::DuplicatePhoneLabel(phone.clone()));
        } else if inventory.senones_at(i).is_empty() {
            out.push(Violation::OrphanPhone(phone.clone()));
        }
    }
    out
}

/// Checks that posteriors, alignments and inventory fit together. A corpus
/// with no violations is accepted by all scoring operations.
pub fn validate_corpus(
    posteriors: &PosteriorSet,
    alignments: &AlignmentSet,
    inventory: &PhonemeInventory,
) -> Vec<Violation> {
    let mut out = validate_inventory(inventory);
    let senones = inventory.num_senones();
    for matrix in posteriors.iter() {
        if matrix.senones() != senones {
            out.push(Violation::SenoneCountMismatch {
                utt_id: matrix.utt_id().to_string(),
                expected: senones,
                got: matrix.senones(),
            });
        }
        out.extend(matrix.violations());
    }
    for (utt_id, segments) in alignments.utterances() {
        let matrix = posteriors.get(utt_id);
        if matrix.is_none() {
            out.push(Violation::UnknownUtterance(utt_id.to_string()));
        }
        let mut prev_end: Option<usize> = None;
        for seg in segments {
            if !inventory.contains(&seg.phone) {
                out.push(Violation::SegmentUnknownPhone {
                    utt_id: utt_id.to_string(),
                    index: seg.index,
                    phone: seg.phone.clone(),
                });
            }
            let out_of_range = seg.t_s > seg.t_e || matrix.is_some_and(|m| seg.t_e >= m.frames());
            if out_of_range {
                out.push(Violation::SpanOutOfRange {
                    utt_id: utt_id.to_string(),
                    index: seg.index,
                    t_s: seg.t_s,
                    t_e: seg.t_e,
                    frames: matrix.map_or(0, PosteriorMatrix::frames),
                });
            }
            if prev_end.is_some_and(|e| seg.t_s <= e) {
                out.push(Violation::SegmentOrder {
                    utt_id: utt_id.to_string(),
                    index: seg.index,
                });
            }
            prev_end = Some(prev_end.map_or(seg.t_e, |e| e.max(seg.t_e)));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map(entries: &[(usize, &str)]) -> BTreeMap<usize, String> {
        entries.iter().map(|(s, p)| (*s, p.to_string())).collect()
    }

    fn phones(list: &[&str]) -> Vec<String> {
        list.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn minimal_inventory_is_valid() {
        let inv = PhonemeInventory::new(phones(&["A", "B"]), map(&[(0, "A"), (1, "A"), (2, "B")]));
        assert!(validate_inventory(&inv).is_empty());
        assert_eq!(inv.senones_of("A"), Some(&[0, 1][..]));
    }

    #[test]
    fn senone_gap_is_reported() {
        let inv = PhonemeInventory::new(phones(&["A", "B"]), map(&[(0, "A"), (2, "B")]));
        assert_eq!(inv.num_senones(), 3);
        assert_eq!(validate_inventory(&inv), vec![Violation::MissingSenone(1)]);
    }

    #[test]
    fn referential_integrity() {
        let inv = PhonemeInventory::new(phones(&["A", "B"]), map(&[(0, "A"), (1, "C")]));
        assert_eq!(
            validate_inventory(&inv),
            vec![
                Violation::UnknownPhone("C".into()),
                Violation::OrphanPhone("B".into())
            ]
        );
    }

    #[test]
    fn bad_labels() {
        let inv = PhonemeInventory::new(phones(&["A B", "A B"]), map(&[(0, "A B"), (1, "A B")]));
        let v = validate_inventory(&inv);
        assert!(v.contains(&Violation::InvalidPhoneLabel("A B".into())));
        assert!(v.contains(&Violation::DuplicatePhoneLabel("A B".into())));
    }

    fn corpus(rows: &[Vec<f64>], segs: &[(&str, usize, usize)]) -> (PosteriorSet, AlignmentSet) {
        let mut post = PosteriorSet::new();
        post.insert(PosteriorMatrix::from_rows("u1", rows).unwrap())
            .unwrap();
        let mut align = AlignmentSet::new();
        for (phone, t_s, t_e) in segs {
            align.push(AlignmentSegment {
                utt_id: "u1".into(),
                index: 0,
                phone: phone.to_string(),
                t_s: *t_s,
                t_e: *t_e,
            });
        }
        (post, align)
    }

    fn abc() -> PhonemeInventory {
        PhonemeInventory::from_senone_map(map(&[(0, "A"), (1, "B"), (2, "C")]))
    }

    #[test]
    fn consistent_corpus() {
        let (p, a) = corpus(
            &[vec![0.7, 0.2, 0.1], vec![0.5, 0.3, 0.2]],
            &[("A", 0, 0), ("B", 1, 1)],
        );
        assert!(validate_corpus(&p, &a, &abc()).is_empty());
    }

    #[test]
    fn span_end_equal_to_frame_count() {
        let (p, a) = corpus(&[vec![0.7, 0.2, 0.1], vec![0.5, 0.3, 0.2]], &[("A", 0, 2)]);
        let v = validate_corpus(&p, &a, &abc());
        assert!(matches!(v.as_slice(), [Violation::SpanOutOfRange { t_e: 2, frames: 2, .. }]));
    }

    #[test]
    fn row_sum_boundary() {
        let (p, a) = corpus(&[vec![0.6, 0.2, 0.1]], &[("A", 0, 0)]);
        let v = validate_corpus(&p, &a, &abc());
        assert_eq!(v.len(), 1);
        match &v[0] {
            Violation::RowSum { sum, .. } => assert!(((sum - 0.9) as f64).abs() < 1e-12),
            other => panic!("unexpected {other:?}"),
        }
        // inside the tolerance
        let (p, a) = corpus(&[vec![0.7005, 0.2, 0.1]], &[("A", 0, 0)]);
        assert!(validate_corpus(&p, &a, &abc()).is_empty());
    }

    #[test]
    fn unknown_utterance_and_phone() {
        let (p, _) = corpus(&[vec![0.7, 0.2, 0.1]], &[]);
        let mut a = AlignmentSet::new();
        a.push(AlignmentSegment {
            utt_id: "u2".into(),
            index: 0,
            phone: "Z".into(),
            t_s: 0,
            t_e: 0,
        });
        let v = validate_corpus(&p, &a, &abc());
        assert!(v.contains(&Violation::UnknownUtterance("u2".into())));
        assert!(v.iter().any(|x| matches!(x, Violation::SegmentUnknownPhone { .. })));
    }

    #[test]
    fn overlap_detected_in_memory() {
        let (p, a) = corpus(&vec![vec![0.7, 0.2, 0.1]; 4], &[("A", 0, 2), ("B", 2, 3)]);
        let v = validate_corpus(&p, &a, &abc());
        assert_eq!(v, vec![Violation::SegmentOrder { utt_id: "u1".into(), index: 1 }]);
    }

    #[test]
    fn gaps_between_segments_are_legal() {
        let (p, a) = corpus(&vec![vec![0.7, 0.2, 0.1]; 6], &[("A", 0, 1), ("B", 4, 5)]);
        assert!(validate_corpus(&p, &a, &abc()).is_empty());
    }

    #[test]
    fn validation_is_pure() {
        let (p, a) = corpus(&[vec![0.6, 0.2, 0.1]], &[("Q", 0, 3)]);
        let inv = abc();
        let first = validate_corpus(&p, &a, &inv);
        assert_eq!(first, validate_corpus(&p, &a, &inv));
        assert_eq!(first.len(), 3);
    }

    #[test]
    fn shape_errors() {
        assert!(PosteriorMatrix::new("u", 0, 3, vec![]).is_err());
        assert!(PosteriorMatrix::new("u", 1, 1, vec![1.0]).is_err());
        assert!(PosteriorMatrix::new("u", 2, 2, vec![1.0, 0.0]).is_err());
    }

    #[test]
    fn alignment_push_keeps_order() {
        let mut a = AlignmentSet::new();
        for (phone, t_s) in [("B", 5), ("A", 0), ("C", 9)] {
            a.push(AlignmentSegment {
                utt_id: "u".into(),
                index: 99,
                phone: phone.into(),
                t_s,
                t_e: t_s + 1,
            });
        }
        let segs = a.get("u").unwrap();
        let order: Vec<_> = segs.iter().map(|s| (s.index, s.phone.as_str())).collect();
        assert_eq!(order, vec![(0, "A"), (1, "B"), (2, "C")]);
    }
}
