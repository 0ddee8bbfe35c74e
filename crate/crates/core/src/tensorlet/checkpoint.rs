//! `TENSORLET 1` parameter files: a header line, then for each tensor a
//! `name rows cols` line followed by `rows` lines of `cols` values. Values
//! use the shortest exponent form that parses back to the same bits.

use super::{Matrix, TensorError};

pub const CHECKPOINT_HEADER: &str = "TENSORLET 1";

pub fn write_checkpoint<'a, I>(tensors: I) -> String
where
    I: IntoIterator<Item = (&'a str, &'a Matrix)>,
{
    let mut out = String::from(CHECKPOINT_HEADER);
    out.push('\n');
    for (name, m) in tensors {
        out.push_str(&format!("{name} {} {}\n", m.rows(), m.cols()));
        for r in 0..m.rows() {
            let cells: Vec<String> = m.row(r).iter().map(|v| format!("{v:e}")).collect();
            out.push_str(&cells.join(" "));
            out.push('\n');
        }
    }
    out
}

fn bad(line: usize, msg: impl Into<String>) -> TensorError {
    TensorError::Checkpoint {
        line,
        msg: msg.into(),
    }
}

pub fn parse_checkpoint(text: &str) -> Result<Vec<(String, Matrix)>, TensorError> {
    let body = text.strip_suffix('\n').unwrap_or(text);
    let mut lines = body.split('\n').enumerate().map(|(i, l)| (i + 1, l));
    match lines.next() {
        Some((_, CHECKPOINT_HEADER)) => {}
        _ => return Err(bad(1, format!("expected header {CHECKPOINT_HEADER:?}"))),
    }
    let mut out: Vec<(String, Matrix)> = Vec::new();
    while let Some((n, line)) = lines.next() {
        let parts: Vec<&str> = line.split(' ').collect();
        let [name, rows, cols] = parts[..] else {
            return Err(bad(n, "expected `name rows cols`"));
        };
        if name.is_empty() || out.iter().any(|(k, _)| k == name) {
            return Err(bad(n, format!("empty or duplicate tensor name {name:?}")));
        }
        let rows: usize = rows.parse().map_err(|_| bad(n, "bad row count"))?;
        let cols: usize = cols.parse().map_err(|_| bad(n, "bad column count"))?;
        if cols == 0 {
            return Err(bad(n, "tensors need at least one column"));
        }
        let mut data = Vec::with_capacity(rows.saturating_mul(cols).min(1 << 24));
        for _ in 0..rows {
            let (rn, row) = lines
                .next()
                .ok_or_else(|| bad(n, format!("tensor {name} truncated")))?;
            let vals: Vec<&str> = row.split(' ').collect();
            if vals.len() != cols {
                return Err(bad(rn, format!("expected {cols} values, got {}", vals.len())));
            }
            for v in vals {
                let x: f64 = v.parse().map_err(|_| bad(rn, format!("bad value {v:?}")))?;
                if !x.is_finite() {
                    return Err(bad(rn, "non-finite value"));
                }
                data.push(x);
            }
        }
        let m = Matrix::new(rows, cols, data).map_err(|e| bad(n, e.to_string()))?;
        out.push((name.to_string(), m));
    }
    Ok(out)
}
