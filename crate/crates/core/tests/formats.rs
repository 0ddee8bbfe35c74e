mod common;

use std::collections::BTreeMap;

use accentkit::io::{
    parse_alignments, parse_intensity_records, parse_manifest, parse_phone_map, parse_posteriors,
    write_alignments, write_intensity_records, write_manifest, write_phone_map, write_posteriors,
};
use accentkit::renderer::{load_params, save_params, RendererConfig, RendererParams};
use accentkit::tensorlet::rng::SplitMix64;
use accentkit::tensorlet::{parse_checkpoint, write_checkpoint, Matrix};
use accentkit::types::{IntensityRecord, PhonemeInventory};
use common::{grid_posteriors, random_corpus, random_manifest, random_records};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn posteriors_round_trip(seed in any::<u64>()) {
        let set = grid_posteriors(&mut SplitMix64::new(seed));
        let text = write_posteriors(&set);
        let back = parse_posteriors(&text).unwrap();
        prop_assert_eq!(&back, &set);
        prop_assert_eq!(write_posteriors(&back), text);
    }

    #[test]
    fn phone_maps_round_trip(seed in any::<u64>()) {
        let c = random_corpus(&mut SplitMix64::new(seed), 4, 6, 4);
        let text = write_phone_map(&c.inventory);
        prop_assert_eq!(parse_phone_map(&text).unwrap(), c.inventory);
    }

    #[test]
    fn alignments_round_trip(seed in any::<u64>()) {
        let c = random_corpus(&mut SplitMix64::new(seed), 30, 4, 4);
        let text = write_alignments(&c.alignments);
        prop_assert_eq!(parse_alignments(&text).unwrap(), c.alignments);
    }

    #[test]
    fn intensity_tables_round_trip(seed in any::<u64>()) {
        let records = random_records(&mut SplitMix64::new(seed));
        let text = write_intensity_records(&records);
        prop_assert_eq!(parse_intensity_records(&text).unwrap(), records);
    }

    #[test]
    fn manifests_round_trip(seed in any::<u64>()) {
        let m = random_manifest(&mut SplitMix64::new(seed));
        prop_assert_eq!(parse_manifest(&write_manifest(&m)).unwrap(), m);
    }

    #[test]
    fn checkpoints_round_trip_bit_exact(values in prop::collection::vec(
        prop_oneof![any::<f64>().prop_filter("finite", |v| v.is_finite()), -1e3f64..1e3], 1..40),
        cols in 1usize..5) {
        let rows = values.len() / cols;
        let m = Matrix::new(rows, cols, values[..rows * cols].to_vec()).unwrap();
        let text = write_checkpoint([("w", &m)]);
        let back = parse_checkpoint(&text).unwrap();
        let bits = |m: &Matrix| m.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        prop_assert_eq!(bits(&back[0].1), bits(&m));
    }

    #[test]
    fn renderer_params_round_trip(seed in any::<u64>()) {
        let mut p = RendererParams::init(&RendererConfig::toy(), seed).unwrap();
        let mut rng = SplitMix64::new(seed ^ 1);
        p.visit_mut(|_, w, _| w.iter_mut().for_each(|v| *v += rng.uniform(-1e-3, 1e-3)));
        prop_assert_eq!(load_params(&save_params(&p)).unwrap(), p);
    }

    /// Damaged files never panic the readers and errors point at a line that
    /// exists.
    #[test]
    fn mutated_files_fail_cleanly(seed in any::<u64>(), edit in 0usize..6, pick in any::<usize>()) {
        let mut rng = SplitMix64::new(seed);
        let c = random_corpus(&mut rng, 8, 5, 3);
        let sources = [
            write_posteriors(&c.posteriors),
            write_phone_map(&c.inventory),
            write_alignments(&c.alignments),
            write_intensity_records(&random_records(&mut rng)),
            write_manifest(&random_manifest(&mut rng)),
        ];
        for text in &sources {
            let mut lines: Vec<String> = text.lines().map(str::to_string).collect();
            if lines.is_empty() {
                continue;
            }
            let k = pick % lines.len();
            match edit {
                0 => { lines.remove(k); }
                1 => { let l = lines[k].clone(); lines.insert(k, l); }
                2 => lines[k] = lines[k].replacen(' ', "  ", 1).replacen('\t', "\t\t", 1),
                3 => lines[k].push_str(" 0.5"),
                4 => lines[k] = lines[k].chars().rev().collect(),
                _ => lines.truncate(k),
            }
            let damaged = lines.join("\n");
            let n_lines = damaged.lines().count().max(1);
            let check = |r: Result<(), accentkit::io::ParseError>| match r {
                Ok(()) => true,
                Err(e) => e.line >= 1 && e.line <= n_lines + 1,
            };
            prop_assert!(check(parse_posteriors(&damaged).map(drop)));
            prop_assert!(check(parse_phone_map(&damaged).map(drop)));
            prop_assert!(check(parse_alignments(&damaged).map(drop)));
            prop_assert!(check(parse_intensity_records(&damaged).map(drop)));
            prop_assert!(check(parse_manifest(&damaged).map(drop)));
            let _ = parse_checkpoint(&damaged);
            let _ = load_params(&damaged);
        }
    }
}

#[test]
fn phone_order_follows_lowest_senone() {
    let map: BTreeMap<usize, String> = [(0, "b"), (1, "a"), (2, "b")]
        .into_iter()
        .map(|(k, v)| (k, v.to_string()))
        .collect();
    let inv = PhonemeInventory::from_senone_map(map);
    assert_eq!(inv.phones(), ["b", "a"]);
    let back = parse_phone_map(&write_phone_map(&inv)).unwrap();
    assert_eq!(back, inv);
}

#[test]
fn off_grid_values_are_rounded_once() {
    let records = vec![IntensityRecord {
        utt_id: "u".into(),
        index: 0,
        phone: "a".into(),
        t_s: 0,
        t_e: 1,
        lpp: -0.123_456_789,
        gop: 0.1,
        intensity: 1.0 / 3.0,
    }];
    let once = write_intensity_records(&records);
    let twice = write_intensity_records(&parse_intensity_records(&once).unwrap());
    assert_eq!(once, twice);
    assert!(once.contains("-0.123457\t0.100000\t0.333333"));
}
