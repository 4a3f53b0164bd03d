use std::collections::BTreeSet;

use dualmark::attacks::{attack_add, attack_delete, attack_select, AlterMode, AttackKind, AttackSpec, SplitMix64};
use dualmark::codec::{bits_to_image, decode_ss, encode_ss, get_lsb, image_to_bits, set_lsb, ChannelBit};
use dualmark::embed::embed;
use dualmark::extract::{extract_phase1, extract_phase2, fuse_and_match, majority, verify, Extraction};
use dualmark::model::{
    ensure_primary_key, pk_to_int, Cell, Column, ColumnKind, Date, DateTime, Decimal, MarkConfig, Relation,
    SecretKeys, TimeValue, Tuple, WatermarkBits,
};
use proptest::prelude::*;

/// Small relation with a key, two numeric columns (scales 0 and 2), two
/// datetime columns, and a text column. Roughly one cell in ten is NULL.
fn small_relation(n: usize, seed: u64) -> Relation {
    let mut rng = SplitMix64::new(seed);
    let mut r = Relation::new(vec![
        Column::new("id", ColumnKind::Key),
        Column::new("a", ColumnKind::Numeric { scale: 0 }),
        Column::new("b", ColumnKind::Numeric { scale: 2 }),
        Column::new("t1", ColumnKind::DateTime),
        Column::new("t2", ColumnKind::DateTime),
        Column::new("note", ColumnKind::Other),
    ])
    .unwrap();
    let mut pks: Vec<u64> = (0..200).collect();
    for i in 0..n {
        let j = i + rng.below((pks.len() - i) as u64) as usize;
        pks.swap(i, j);
    }
    for &pk in pks.iter().take(n) {
        let maybe = |cell: Cell, rng: &mut SplitMix64| if rng.below(10) == 0 { Cell::Null } else { cell };
        let a = Cell::Number(Decimal::new(rng.coin(), rng.below(1000), 0));
        let b = Cell::Number(Decimal::new(rng.coin(), rng.below(100_000), 2));
        let dt = |rng: &mut SplitMix64| {
            Cell::DateTime(DateTime {
                date: Date::new(2020, 1 + rng.below(12) as u8, 1 + rng.below(28) as u8).unwrap(),
                time: TimeValue::new(rng.below(24) as u8, rng.below(60) as u8, rng.below(60) as u8).unwrap(),
            })
        };
        let t1 = dt(&mut rng);
        let t2 = dt(&mut rng);
        let cells = vec![
            Cell::text(pk.to_string()),
            maybe(a, &mut rng),
            maybe(b, &mut rng),
            maybe(t1, &mut rng),
            maybe(t2, &mut rng),
            Cell::text(format!("row{pk}")),
        ];
        r.push(Tuple::new(cells)).unwrap();
    }
    r
}

fn small_config() -> MarkConfig {
    MarkConfig::new(
        "id",
        vec![("a".into(), 0), ("b".into(), 2)],
        vec!["t1".into(), "t2".into()],
    )
    .unwrap()
}

fn wm_strategy() -> impl Strategy<Value = WatermarkBits> {
    (1usize..=4, 1usize..=4).prop_flat_map(|(w, h)| {
        proptest::collection::vec(any::<bool>(), w * h).prop_map(move |bits| WatermarkBits::new(w, h, bits).unwrap())
    })
}

fn keys_strategy() -> impl Strategy<Value = SecretKeys> {
    (1i64..=31, 0i64..=15).prop_map(|(k1, k2)| SecretKeys::new(k1, k2).unwrap())
}

fn numeric(cell: &Cell) -> Option<Decimal> {
    match cell {
        Cell::Number(d) => Some(*d),
        _ => None,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn lsb_round_trip_and_distortion(v in -1.0e6f64..1.0e6, d in 0u32..=6, b in any::<bool>()) {
        let marked = set_lsb(v, d, b).unwrap();
        prop_assert_eq!(get_lsb(marked, d).unwrap(), b);
        let bound = 10f64.powi(-(d as i32));
        // float slack for the / 10^d division
        prop_assert!((marked - v).abs() <= bound * (1.0 + 1e-9) + 1e-9 * v.abs().max(1.0) * bound,
            "v={} d={} b={} marked={}", v, d, b, marked);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn image_round_trip(w in 1usize..=16, h in 1usize..=16, seed in any::<u64>()) {
        let mut rng = SplitMix64::new(seed);
        let image: Vec<Vec<bool>> = (0..h).map(|_| (0..w).map(|_| rng.coin()).collect()).collect();
        let bits = image_to_bits(&image).unwrap();
        prop_assert_eq!(bits.len(), w * h);
        prop_assert_eq!(bits_to_image(bits.bits(), w, h).unwrap(), image);
    }

    #[test]
    fn ensure_primary_key_always_valid(keys in proptest::collection::vec(proptest::option::of(0u8..6), 0..30)) {
        let mut r = Relation::new(vec![
            Column::new("id", ColumnKind::Key),
            Column::new("x", ColumnKind::Other),
        ]).unwrap();
        for (i, k) in keys.iter().enumerate() {
            let pk = k.map(|k| Cell::text(k.to_string())).unwrap_or(Cell::Null);
            r.push(Tuple::new(vec![pk, Cell::text(i.to_string())])).unwrap();
        }
        let out = ensure_primary_key(r.clone(), "id");
        prop_assert!(out.has_valid_key());
        prop_assert_eq!(out.len(), r.len());
        for (a, b) in r.tuples().iter().zip(out.tuples()) {
            prop_assert_eq!(&a.cells[..], &b.cells[..a.cells.len()]);
        }
    }

    #[test]
    fn pk_to_int_deterministic(s in ".{0,12}", n in any::<u64>()) {
        prop_assert_eq!(pk_to_int(&s), pk_to_int(&s.clone()));
        prop_assert_eq!(pk_to_int(&n.to_string()), n);
    }

    #[test]
    fn embed_properties(n in 0usize..=20, seed in any::<u64>(), keys in keys_strategy(), wm in wm_strategy()) {
        let r = small_relation(n, seed);
        let config = small_config();
        let (marked, stats) = embed(&r, &keys, &wm, &config).unwrap();
        let (again, _) = embed(&r, &keys, &wm, &config).unwrap();
        prop_assert_eq!(&marked, &again);
        let (twice, _) = embed(&marked, &keys, &wm, &config).unwrap();
        prop_assert_eq!(&twice, &marked);
        prop_assert!(stats.modified_cells <= stats.marked_tuples * 4);

        // brute force: enumerate the expected changed positions directly
        let (k1, k2) = (u64::from(keys.k1()), keys.k2());
        let mut expected = BTreeSet::new();
        for (row, t) in r.tuples().iter().enumerate() {
            let pk: u64 = match &t.cells[0] { Cell::Text(s) => s.parse().unwrap(), _ => unreachable!() };
            if !pk.is_multiple_of(k1) {
                continue;
            }
            let bit = wm.bits()[((pk / k1) as usize) % wm.len()];
            for col in [1, 2] {
                if let Some(d) = numeric(&t.cells[col]) {
                    if (d.units % 2 == 1) != bit {
                        expected.insert((row, col));
                    }
                }
            }
            for col in [3, 4] {
                if let Cell::DateTime(dt) = &t.cells[col] {
                    let ss = 2 * k2 + u8::from(bit);
                    if u64::from(dt.time.mm()) % k1 == 0 && dt.time.ss() != ss {
                        expected.insert((row, col));
                    }
                }
            }
        }
        let mut actual = BTreeSet::new();
        for (row, (a, b)) in r.tuples().iter().zip(marked.tuples()).enumerate() {
            for (col, (x, y)) in a.cells.iter().zip(&b.cells).enumerate() {
                if x != y {
                    actual.insert((row, col));
                }
                match (x, y) {
                    (Cell::Number(p), Cell::Number(q)) => {
                        prop_assert_eq!(p.negative, q.negative);
                        prop_assert!(p.units.abs_diff(q.units) <= 1);
                    }
                    (Cell::DateTime(p), Cell::DateTime(q)) => {
                        prop_assert_eq!(p.date, q.date);
                        prop_assert_eq!((p.time.hh(), p.time.mm()), (q.time.hh(), q.time.mm()));
                    }
                    _ => prop_assert_eq!(x, y),
                }
            }
        }
        prop_assert_eq!(actual.len(), stats.modified_cells);
        prop_assert_eq!(actual, expected);
    }

    #[test]
    fn round_trip_when_covered(n in 1usize..=60, seed in any::<u64>(), keys in keys_strategy(), wm in wm_strategy()) {
        let r = small_relation(n, seed);
        let config = small_config();
        let (marked, stats) = embed(&r, &keys, &wm, &config).unwrap();
        let ex = Extraction::run(&marked, &keys, &config, wm.len()).unwrap();
        for i in 0..wm.len() {
            if stats.channel1_carriers[i] > 0 {
                prop_assert!(ex.wm1[i].matches(wm.bit(i)));
            } else {
                prop_assert!(ex.wm1[i].is_erased());
            }
        }
        if stats.channel1_carriers.iter().all(|&c| c > 0) {
            prop_assert_eq!(verify(&marked, &keys, &config, &wm).unwrap().rate, 100.0);
        }
        if stats.uncovered_bits().is_empty() {
            prop_assert_eq!(ex.recovered(), wm.bits().to_vec());
        }
    }

    #[test]
    fn wrong_k2_erases_channel2(seed in any::<u64>(), k2 in 0i64..=15, wrong in 0i64..=15, wm in wm_strategy()) {
        prop_assume!(k2 != wrong);
        // k1 = 1: every datetime cell is a carrier
        let r = small_relation(20, seed);
        let config = small_config();
        let keys = SecretKeys::new(1, k2).unwrap();
        let (marked, _) = embed(&r, &keys, &wm, &config).unwrap();
        let bad = SecretKeys::new(1, wrong).unwrap();
        let wm2 = extract_phase2(&marked, &bad, &config, wm.len()).unwrap();
        prop_assert!(wm2.iter().all(|b| b.is_erased()));
    }

    #[test]
    fn fusion_is_monotone(bits in proptest::collection::vec((any::<bool>(), 0u8..3, 0u8..3), 1..40)) {
        let ch = |v: u8| match v { 0 => ChannelBit::Zero, 1 => ChannelBit::One, _ => ChannelBit::Erased };
        let wm = WatermarkBits::new(bits.len(), 1, bits.iter().map(|b| b.0).collect()).unwrap();
        let wm1: Vec<_> = bits.iter().map(|b| ch(b.1)).collect();
        let wm2: Vec<_> = bits.iter().map(|b| ch(b.2)).collect();
        let none = vec![ChannelBit::Erased; bits.len()];
        let fused = fuse_and_match(&wm, &wm1, &wm2).unwrap();
        let only1 = fuse_and_match(&wm, &wm1, &none).unwrap();
        let only2 = fuse_and_match(&wm, &none, &wm2).unwrap();
        prop_assert!(fused.rate >= only1.rate.max(only2.rate));
        prop_assert!(fused.matchcount <= fused.totalcount);
        prop_assert_eq!(fused.totalcount, bits.len());
    }

    #[test]
    fn majority_is_correct_when_most_votes_are(truth in any::<bool>(), good in 1usize..50, bad in 0usize..50) {
        prop_assume!(good > bad);
        let mut votes = vec![truth; good];
        votes.extend(std::iter::repeat_n(!truth, bad));
        let mut rng = SplitMix64::new((good * 31 + bad) as u64);
        for i in (1..votes.len()).rev() {
            votes.swap(i, rng.below(i as u64 + 1) as usize);
        }
        prop_assert!(majority(&votes).matches(truth));
    }

    #[test]
    fn attacks_are_deterministic_and_non_destructive(seed in any::<u64>(), n in 0usize..=40, f in 0.0f64..=1.0) {
        let r = small_relation(n, seed);
        for kind in AttackKind::ALL {
            let fraction = if kind == AttackKind::Select { f.max(0.01) } else { f };
            let spec = AttackSpec::new(kind, fraction, seed ^ 1).with_alter_mode(AlterMode::Both);
            let a = spec.apply(&r).unwrap();
            prop_assert_eq!(&a, &spec.apply(&r).unwrap());
            let expected_len = match kind {
                AttackKind::Add => n + (fraction * n as f64).round() as usize,
                AttackKind::Delete => n - (fraction * n as f64).round() as usize,
                AttackKind::Select => (fraction * n as f64).round() as usize,
                AttackKind::Alter => n,
            };
            prop_assert_eq!(a.len(), expected_len);
            match kind {
                AttackKind::Add => prop_assert_eq!(&a.tuples()[..n], r.tuples()),
                AttackKind::Delete | AttackKind::Select => {
                    // survivors form an unmodified subsequence
                    let mut it = r.tuples().iter();
                    for t in a.tuples() {
                        prop_assert!(it.any(|o| o == t));
                    }
                }
                AttackKind::Alter => {
                    for (o, t) in r.tuples().iter().zip(a.tuples()) {
                        prop_assert_eq!(&o.cells[0], &t.cells[0]);
                        prop_assert_eq!(&o.cells[5], &t.cells[5]);
                    }
                }
            }
        }
        let added = attack_add(&r, f * 2.0, seed).unwrap();
        prop_assert!(added.has_valid_key());
    }
}

#[test]
fn select_matches_delete_complement_in_size() {
    let base = dualmark::bench::gen_dataset(5000, &Default::default(), 1).unwrap();
    for i in 1..=20 {
        let f = f64::from(i) / 20.0;
        for seed in 0..5 {
            let s = attack_select(&base, f, seed).unwrap();
            let d = attack_delete(&base, 1.0 - f, seed + 100).unwrap();
            assert_eq!(s.len(), d.len(), "f = {f}");
        }
    }
}

#[test]
fn extraction_signatures_take_no_original() {
    type Extractor = fn(&Relation, &SecretKeys, &MarkConfig, usize) -> dualmark::Result<Vec<ChannelBit>>;
    let _: Extractor = extract_phase1;
    let _: Extractor = extract_phase2;
    let _: fn(&Relation, &SecretKeys, &MarkConfig, usize) -> dualmark::Result<Vec<bool>> = dualmark::recover;
}

#[test]
fn ss_channel_exhaustive() {
    for k2 in 0..=15u8 {
        for bit in [false, true] {
            let ss = encode_ss(bit, k2);
            assert!(ss <= 31);
            assert!(decode_ss(ss, k2).matches(bit));
        }
    }
}

#[test]
fn randomized_seconds_above_31_erase_everything() {
    let r = small_relation(20, 5);
    let config = small_config();
    let keys = SecretKeys::new(1, 15).unwrap();
    let wm = WatermarkBits::new(2, 2, vec![true, false, true, true]).unwrap();
    let (marked, _) = embed(&r, &keys, &wm, &config).unwrap();
    let mut rng = SplitMix64::new(9);
    let mut scrambled = Relation::new(marked.columns().to_vec()).unwrap();
    for t in marked.tuples() {
        let mut t = t.clone();
        for c in [3, 4] {
            if let Cell::DateTime(dt) = &mut t.cells[c] {
                dt.time = dt.time.with_ss(32 + rng.below(28) as u8);
            }
        }
        scrambled.push(t).unwrap();
    }
    for k2 in 0..=15 {
        let keys = SecretKeys::new(1, k2).unwrap();
        let wm2 = extract_phase2(&scrambled, &keys, &config, 4).unwrap();
        assert!(wm2.iter().all(|b| b.is_erased()));
    }
    let wm1 = extract_phase1(&scrambled, &keys, &config, 4).unwrap();
    assert!(wm1.iter().any(|b| !b.is_erased()));
}
