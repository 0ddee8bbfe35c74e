use indexmap::IndexMap;

use super::{err, fields, numbered_lines, parse_usize, syntax, valid_label, ParseError, ParseErrorKind};
use crate::types::{AlignmentSegment, AlignmentSet};

/// Reads `utt_id phone_label start_frame end_frame` lines (spans inclusive).
/// Lines starting with `#` are comments. Utterances may be interleaved; each
/// one's segments are sorted by start frame and indexed from 0.
///
/// Frame bounds against the posterior matrix are checked later by
/// [`crate::types::validate_corpus`].
pub fn parse_alignments(text: &str) -> Result<AlignmentSet, ParseError> {
    let mut groups: IndexMap<String, Vec<(usize, AlignmentSegment)>> = IndexMap::new();
    for (n, line) in numbered_lines(text) {
        if line.starts_with('#') {
            continue;
        }
        let parts = fields(n, line, ' ')?;
        let [utt_id, phone, start, end] = parts[..] else {
            return Err(syntax(
                n,
                format!("expected `utt_id phone start end`, got {line:?}"),
            ));
        };
        if !valid_label(utt_id) || !valid_label(phone) {
            return Err(syntax(n, format!("invalid label in {line:?}")));
        }
        let t_s = parse_usize(n, start, "start frame")?;
        let t_e = parse_usize(n, end, "end frame")?;
        if t_s > t_e {
            return Err(err(n, ParseErrorKind::InvertedSpan { start: t_s, end: t_e }));
        }
        groups.entry(utt_id.to_string()).or_default().push((
            n,
            AlignmentSegment {
                utt_id: utt_id.to_string(),
                index: 0,
                phone: phone.to_string(),
                t_s,
                t_e,
            },
        ));
    }
    let mut set = AlignmentSet::new();
    for (utt_id, mut segs) in groups {
        segs.sort_by_key(|(n, s)| (s.t_s, *n));
        for pair in segs.windows(2) {
            let (prev, (n, next)) = (&pair[0].1, &pair[1]);
            if next.t_s <= prev.t_e {
                return Err(err(
                    *n,
                    ParseErrorKind::Overlap {
                        utt_id,
                        frame: next.t_s,
                    },
                ));
            }
        }
        for (_, seg) in segs {
            set.push(seg);
        }
    }
    Ok(set)
}

pub fn write_alignments(set: &AlignmentSet) -> String {
    let mut out = String::new();
    for seg in set.segments() {
        out.push_str(&format!("{} {} {} {}\n", seg.utt_id, seg.phone, seg.t_s, seg.t_e));
    }
    out
}
