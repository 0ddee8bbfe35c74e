use std::collections::BTreeMap;

use super::{err, fields, numbered_lines, parse_usize, syntax, valid_label, ParseError, ParseErrorKind};
use crate::types::{validate_inventory, PhonemeInventory};

const HEADER: &str = "PHONEMAP 1";

/// Reads a `PHONEMAP 1` file: one `senone_index phone_label` line per
/// senone, indexes `0..S-1` in any order. Phones are ordered by their lowest
/// senone index.
pub fn parse_phone_map(text: &str) -> Result<PhonemeInventory, ParseError> {
    let mut lines = numbered_lines(text);
    match lines.next() {
        Some((_, HEADER)) => {}
        Some((n, got)) => {
            return Err(err(
                n,
                ParseErrorKind::Header {
                    expected: HEADER.into(),
                    got: got.into(),
                },
            ))
        }
        None => {
            return Err(err(
                1,
                ParseErrorKind::Header {
                    expected: HEADER.into(),
                    got: String::new(),
                },
            ))
        }
    }
    let mut map = BTreeMap::new();
    let mut last = 1;
    for (n, line) in lines {
        last = n;
        let parts = fields(n, line, ' ')?;
        let [index, label] = parts[..] else {
            return Err(syntax(n, format!("expected `senone_index phone_label`, got {line:?}")));
        };
        let index = parse_usize(n, index, "senone index")?;
        if !valid_label(label) {
            return Err(syntax(n, format!("invalid phone label {label:?}")));
        }
        if map.insert(index, label.to_string()).is_some() {
            return Err(err(n, ParseErrorKind::DuplicateSenone(index)));
        }
    }
    let inventory = PhonemeInventory::from_senone_map(map);
    let violations = validate_inventory(&inventory);
    if !violations.is_empty() {
        let msg: Vec<String> = violations.iter().map(ToString::to_string).collect();
        return Err(err(last, ParseErrorKind::Inventory(msg.join(", "))));
    }
    if inventory.num_senones() < 2 {
        return Err(err(last, ParseErrorKind::Inventory("need at least 2 senones".into())));
    }
    Ok(inventory)
}

/// Writes senones in index order.
pub fn write_phone_map(inventory: &PhonemeInventory) -> String {
    let mut out = String::from(HEADER);
    out.push('\n');
    for (s, p) in inventory.senone_to_phone() {
        out.push_str(&format!("{s} {p}\n"));
    }
    out
}
