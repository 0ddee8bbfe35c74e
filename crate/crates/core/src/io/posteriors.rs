use super::{err, fields, format_real, numbered_lines, parse_real, parse_usize, syntax, valid_label, ParseError, ParseErrorKind};
use crate::types::{PosteriorMatrix, PosteriorSet, ROW_SUM_TOLERANCE};

const HEADER: &str = "APOST 1";

/// Reads an `APOST 1` file. Each utterance starts with `utt <id> <T> <S>`
/// followed by `T` rows of `S` probabilities.
pub fn parse_posteriors(text: &str) -> Result<PosteriorSet, ParseError> {
    let mut lines = numbered_lines(text).peekable();
    match lines.next() {
        Some((_, HEADER)) => {}
        other => {
            let (n, got) = other.unwrap_or((1, ""));
            return Err(err(
                n,
                ParseErrorKind::Header {
                    expected: HEADER.into(),
                    got: got.into(),
                },
            ));
        }
    }
    let mut set = PosteriorSet::new();
    while let Some((n, line)) = lines.next() {
        let parts = fields(n, line, ' ')?;
        let ["utt", utt_id, frames, senones] = parts[..] else {
            return Err(syntax(n, format!("expected `utt <id> <T> <S>`, got {line:?}")));
        };
        if !valid_label(utt_id) {
            return Err(syntax(n, format!("invalid utterance id {utt_id:?}")));
        }
        let frames = parse_usize(n, frames, "frame count")?;
        let senones = parse_usize(n, senones, "senone count")?;
        if frames == 0 || senones < 2 {
            return Err(err(
                n,
                ParseErrorKind::Shape(format!("need T >= 1 and S >= 2, got T={frames} S={senones}")),
            ));
        }
        if set.get(utt_id).is_some() {
            return Err(err(n, ParseErrorKind::DuplicateUtterance(utt_id.into())));
        }
        let mut data = Vec::with_capacity(frames.saturating_mul(senones).min(1 << 20));
        for t in 0..frames {
            let Some((rn, row)) = lines.next() else {
                return Err(err(
                    n,
                    ParseErrorKind::UnexpectedEof(format!(
                        "{utt_id} declares {frames} frames, found {t}"
                    )),
                ));
            };
            let toks = fields(rn, row, ' ')?;
            if toks.len() != senones {
                return Err(err(
                    rn,
                    ParseErrorKind::RowLength {
                        expected: senones,
                        got: toks.len(),
                    },
                ));
            }
            let mut sum = 0.0;
            for tok in toks {
                let v = parse_real(rn, tok, "posterior")?;
                if !(0.0..=1.0).contains(&v) {
                    return Err(err(rn, ParseErrorKind::Probability(v)));
                }
                sum += v;
                data.push(v);
            }
            if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                return Err(err(rn, ParseErrorKind::RowSum { sum }));
            }
        }
        let matrix = PosteriorMatrix::new(utt_id, frames, senones, data)
            .map_err(|e| err(n, ParseErrorKind::Shape(e.to_string())))?;
        set.insert(matrix)
            .map_err(|e| err(n, ParseErrorKind::DuplicateUtterance(e.0)))?;
    }
    Ok(set)
}

pub fn write_posteriors(set: &PosteriorSet) -> String {
    let mut out = String::from(HEADER);
    out.push('\n');
    for m in set.iter() {
        out.push_str(&format!("utt {} {} {}\n", m.utt_id(), m.frames(), m.senones()));
        for row in m.rows() {
            let cells: Vec<String> = row.iter().map(|&v| format_real(v)).collect();
            out.push_str(&cells.join(" "));
            out.push('\n');
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_utterance() {
        let set = parse_posteriors("APOST 1\nutt u1 2 3\n0.7 0.2 0.1\n0.5 0.3 0.2\n").unwrap();
        let m = set.get("u1").unwrap();
        assert_eq!((m.frames(), m.senones()), (2, 3));
        assert_eq!(m.row(1), &[0.5, 0.3, 0.2]);
    }

    #[test]
    fn short_row() {
        let e = parse_posteriors("APOST 1\nutt u1 1 3\n0.7 0.2\n").unwrap_err();
        assert_eq!(e, err(3, ParseErrorKind::RowLength { expected: 3, got: 2 }));
    }

    #[test]
    fn row_sum() {
        let e = parse_posteriors("APOST 1\nutt u1 1 3\n0.5 0.5 0.5\n").unwrap_err();
        assert_eq!(e.line, 3);
        assert!(matches!(e.kind, ParseErrorKind::RowSum { sum } if (sum - 1.5).abs() < 1e-12));
    }

    #[test]
    fn duplicate_utterance() {
        let text = "APOST 1\nutt u1 1 2\n0.5 0.5\nutt u1 1 2\n0.5 0.5\n";
        assert_eq!(
            parse_posteriors(text).unwrap_err(),
            err(4, ParseErrorKind::DuplicateUtterance("u1".into()))
        );
    }

    #[test]
    fn truncated_and_overlong() {
        let e = parse_posteriors("APOST 1\nutt u1 2 2\n0.5 0.5\n").unwrap_err();
        assert!(matches!(e.kind, ParseErrorKind::UnexpectedEof(_)));
        let e = parse_posteriors("APOST 1\nutt u1 1 2\n0.5 0.5\n0.5 0.5\n").unwrap_err();
        assert_eq!(e.line, 4);
    }

    #[test]
    fn multiple_utterances_keep_order() {
        let text = "APOST 1\nutt b 1 2\n0.5 0.5\nutt a 1 2\n1.0 0.0\n";
        let set = parse_posteriors(text).unwrap();
        let ids: Vec<_> = set.iter().map(|m| m.utt_id()).collect();
        assert_eq!(ids, ["b", "a"]);
        assert_eq!(parse_posteriors(&write_posteriors(&set)).unwrap(), set);
        assert_eq!(
            write_posteriors(&set),
            "APOST 1\nutt b 1 2\n0.500000 0.500000\nutt a 1 2\n1.000000 0.000000\n"
        );
    }
}
