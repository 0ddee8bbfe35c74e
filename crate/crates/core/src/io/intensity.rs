use super::{err, format_real, numbered_lines, parse_real, parse_usize, syntax, valid_label, ParseError, ParseErrorKind};
use crate::gop::categorize;
use crate::types::IntensityRecord;

pub const INTENSITY_HEADER: &str = "utt_id\tindex\tphone\tt_s\tt_e\tlpp\tgop\tintensity";

fn push_record(out: &mut String, r: &IntensityRecord) {
    out.push_str(&format!(
        "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
        r.utt_id,
        r.index,
        r.phone,
        r.t_s,
        r.t_e,
        format_real(r.lpp),
        format_real(r.gop),
        format_real(r.intensity)
    ));
}

/// Intensity table, tab separated, reals with six decimals.
pub fn write_intensity_records(records: &[IntensityRecord]) -> String {
    let mut out = String::from(INTENSITY_HEADER);
    out.push('\n');
    for r in records {
        push_record(&mut out, r);
        out.push('\n');
    }
    out
}

/// Same table with a trailing `category` column.
///
/// Panics if a record's intensity lies outside `[0, 1]`; records coming out
/// of [`parse_intensity_records`] or scoring never do.
pub fn write_categorized_records(records: &[IntensityRecord]) -> String {
    let mut out = String::from(INTENSITY_HEADER);
    out.push_str("\tcategory\n");
    for r in records {
        push_record(&mut out, r);
        let cat = categorize(r.intensity).expect("intensity checked on construction");
        out.push('\t');
        out.push_str(cat.as_str());
        out.push('\n');
    }
    out
}

pub fn parse_intensity_records(text: &str) -> Result<Vec<IntensityRecord>, ParseError> {
    let mut lines = numbered_lines(text);
    match lines.next() {
        Some((_, INTENSITY_HEADER)) => {}
        other => {
            let (n, got) = other.unwrap_or((1, ""));
            return Err(err(
                n,
                ParseErrorKind::Header {
                    expected: INTENSITY_HEADER.into(),
                    got: got.into(),
                },
            ));
        }
    }
    let mut out = Vec::new();
    for (n, line) in lines {
        let parts: Vec<&str> = line.split('\t').collect();
        let [utt_id, index, phone, t_s, t_e, lpp, gop, intensity] = parts[..] else {
            return Err(syntax(n, format!("expected 8 tab-separated fields, got {}", parts.len())));
        };
        if !valid_label(utt_id) || !valid_label(phone) {
            return Err(syntax(n, "empty or whitespace-bearing label"));
        }
        let record = IntensityRecord {
            utt_id: utt_id.to_string(),
            index: parse_usize(n, index, "index")?,
            phone: phone.to_string(),
            t_s: parse_usize(n, t_s, "t_s")?,
            t_e: parse_usize(n, t_e, "t_e")?,
            lpp: parse_real(n, lpp, "lpp")?,
            gop: parse_real(n, gop, "gop")?,
            intensity: parse_real(n, intensity, "intensity")?,
        };
        if record.t_s > record.t_e {
            return Err(err(n, ParseErrorKind::InvertedSpan { start: record.t_s, end: record.t_e }));
        }
        if !(record.lpp <= 0.0) || !(record.gop >= 0.0) || !(0.0..=1.0).contains(&record.intensity) {
            return Err(err(
                n,
                ParseErrorKind::Record("need lpp <= 0, gop >= 0 and intensity in [0, 1]".into()),
            ));
        }
        out.push(record);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(intensity: f64) -> IntensityRecord {
        IntensityRecord {
            utt_id: "u1".into(),
            index: 0,
            phone: "B".into(),
            t_s: 0,
            t_e: 1,
            lpp: -1.406713,
            gop: 0.985751,
            intensity,
        }
    }

    #[test]
    fn one_record() {
        let text = write_intensity_records(&[rec(1.0)]);
        assert_eq!(
            text,
            format!("{INTENSITY_HEADER}\nu1\t0\tB\t0\t1\t-1.406713\t0.985751\t1.000000\n")
        );
        assert_eq!(parse_intensity_records(&text).unwrap(), vec![rec(1.0)]);
    }

    #[test]
    fn empty_is_header_only() {
        assert_eq!(write_intensity_records(&[]), format!("{INTENSITY_HEADER}\n"));
        assert!(parse_intensity_records(&format!("{INTENSITY_HEADER}\n")).unwrap().is_empty());
    }

    #[test]
    fn zero_formatting() {
        assert!(write_intensity_records(&[rec(0.0)]).ends_with("\t0.000000\n"));
    }

    #[test]
    fn rejects_bad_rows() {
        let bad = format!("{INTENSITY_HEADER}\nu1\t0\tB\t0\t1\t-1.0\t0.5\t1.5\n");
        assert_eq!(parse_intensity_records(&bad).unwrap_err().line, 2);
        let bad = format!("{INTENSITY_HEADER}\nu1\t0\tB\t0\t1\t-1.0\t0.5\n");
        assert_eq!(parse_intensity_records(&bad).unwrap_err().line, 2);
        assert!(parse_intensity_records("utt_id\tindex\n").is_err());
    }

    #[test]
    fn categorized_column() {
        let text = write_categorized_records(&[rec(0.2), rec(0.5), rec(0.9)]);
        let cats: Vec<_> = text.lines().skip(1).map(|l| l.rsplit('\t').next().unwrap()).collect();
        assert_eq!(cats, ["slight", "average", "strong"]);
        assert!(text.starts_with(&format!("{INTENSITY_HEADER}\tcategory\n")));
    }
}
