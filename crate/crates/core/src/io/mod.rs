//! Line-oriented text formats: posterior dumps (`APOST 1`), senone maps
//! (`PHONEMAP 1`), alignments, intensity tables and corpus manifests.
//!
//! Fields are separated by exactly one space (one tab for the TSV and
//! manifest formats). Readers are strict about separators so that a damaged
//! file is rejected rather than silently re-interpreted. A trailing newline
//! at the end of the file is optional.

mod alignments;
mod intensity;
mod manifest;
mod phonemap;
mod posteriors;

pub use alignments::{parse_alignments, write_alignments};
pub use intensity::{
    parse_intensity_records, write_categorized_records, write_intensity_records, INTENSITY_HEADER,
};
pub use manifest::{parse_manifest, split_corpus, write_manifest, CorpusManifest, ManifestEntry, SplitError};
pub use phonemap::{parse_phone_map, write_phone_map};
pub use posteriors::{parse_posteriors, write_posteriors};

use thiserror::Error;

/// A parse failure with its 1-based line number.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("line {line}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseErrorKind {
    #[error("header mismatch: expected {expected:?}, got {got:?}")]
    Header { expected: String, got: String },
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("duplicate-senone({0})")]
    DuplicateSenone(usize),
    #[error("invalid inventory: {0}")]
    Inventory(String),
    #[error("row-length(expected {expected}, got {got})")]
    RowLength { expected: usize, got: usize },
    #[error("row-sum({sum}): must be within 1e-3 of 1")]
    RowSum { sum: f64 },
    #[error("probability {0} outside [0, 1]")]
    Probability(f64),
    #[error("duplicate utterance id {0}")]
    DuplicateUtterance(String),
    #[error("{0}")]
    Shape(String),
    #[error("unexpected end of file: {0}")]
    UnexpectedEof(String),
    #[error("inverted-span: start {start} > end {end}")]
    InvertedSpan { start: usize, end: usize },
    #[error("overlap in {utt_id}: frame {frame} claimed by two segments")]
    Overlap { utt_id: String, frame: usize },
    #[error("invalid record: {0}")]
    Record(String),
}

pub(crate) fn err(line: usize, kind: ParseErrorKind) -> ParseError {
    ParseError { line, kind }
}

pub(crate) fn syntax(line: usize, msg: impl Into<String>) -> ParseError {
    err(line, ParseErrorKind::Syntax(msg.into()))
}

/// Numbered lines, 1-based, with one optional trailing newline removed.
pub(crate) fn numbered_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    let body = text.strip_suffix('\n').unwrap_or(text);
    let empty = body.is_empty() && text.len() <= 1;
    body.split('\n')
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(move |_| !empty)
}

/// Splits on a single separator, rejecting empty fields.
pub(crate) fn fields(line_no: usize, line: &str, sep: char) -> Result<Vec<&str>, ParseError> {
    let parts: Vec<&str> = line.split(sep).collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(syntax(
            line_no,
            format!("empty field in {line:?} (fields are separated by exactly one {sep:?})"),
        ));
    }
    Ok(parts)
}

pub(crate) fn parse_usize(line_no: usize, tok: &str, what: &str) -> Result<usize, ParseError> {
    if !tok.bytes().all(|b| b.is_ascii_digit()) {
        return Err(syntax(line_no, format!("{what}: expected an unsigned integer, got {tok:?}")));
    }
    tok.parse()
        .map_err(|_| syntax(line_no, format!("{what}: integer {tok:?} out of range")))
}

/// Accepts plain decimal notation only (optional sign, digits, optional
/// fraction, optional exponent); rejects `inf`, `nan` and friends.
pub(crate) fn parse_real(line_no: usize, tok: &str, what: &str) -> Result<f64, ParseError> {
    let plain = tok
        .bytes()
        .all(|b| b.is_ascii_digit() || matches!(b, b'-' | b'+' | b'.' | b'e' | b'E'));
    let value = if plain { tok.parse::<f64>().ok() } else { None };
    match value {
        Some(v) if v.is_finite() => Ok(v),
        _ => Err(syntax(line_no, format!("{what}: expected a finite decimal, got {tok:?}"))),
    }
}

/// Six decimal places. Exact binary ties round half to even, which is what
/// the standard formatter does.
pub fn format_real(value: f64) -> String {
    format!("{value:.6}")
}

pub(crate) fn valid_label(label: &str) -> bool {
    !label.is_empty() && !label.chars().any(char::is_whitespace)
}
