mod common;

use std::fs;

use bitsyn::bitio::{BitSink, BitSource, ByteOrder};
use bitsyn::engine::object_to_doc;
use bitsyn::frontend::{parse_source, pretty, tokenize, TokenKind};
use bitsyn::vlcmap::{verify_prefix_free, DecisionDag};
use bitsyn::{BitReader, BitWriter};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use common::codes::{brute_force_violations, inject_prefix, random_code, TreeDecoder};

fn field() -> impl Strategy<Value = (u32, ByteOrder, u64)> {
    prop_oneof![(1u32..=64).prop_map(|w| (w, ByteOrder::Big)), (1u32..=8).prop_map(|b| (b * 8, ByteOrder::Little)),]
        .prop_flat_map(|(w, o)| (Just(w), Just(o), any::<u64>().prop_map(move |v| v & bitsyn::bitio::mask(w))))
}

proptest! {
    #[test]
    fn written_fields_read_back(fields in prop::collection::vec(field(), 1..64)) {
        let mut w = BitWriter::new();
        for &(n, o, v) in &fields {
            w.write_uint(n, v, o).unwrap();
        }
        let total: u64 = fields.iter().map(|f| f.0 as u64).sum();
        prop_assert_eq!(w.position(), total);
        let data = w.into_bytes();
        prop_assert_eq!(data.len() as u64, total.div_ceil(8));
        let mut r = BitReader::new(&data);
        for &(n, o, v) in &fields {
            prop_assert_eq!(r.read_uint(n, o).unwrap(), v);
        }
    }

    #[test]
    fn signed_fields_read_back(n in 1u32..=64, raw in any::<u64>()) {
        let v = bitsyn::bitio::sign_extend(raw, n);
        let mut w = BitWriter::new();
        w.write_int(n, v, ByteOrder::Big).unwrap();
        let data = w.into_bytes();
        prop_assert_eq!(BitReader::new(&data).read_int(n, ByteOrder::Big).unwrap(), v);
    }

    #[test]
    fn peek_does_not_move(data in prop::collection::vec(any::<u8>(), 1..32), pos in 0u64..256, n in 1u32..=64) {
        let mut r = BitReader::new(&data);
        r.rewind_to(pos);
        let at = r.position();
        let a = r.peek_raw(n).unwrap();
        prop_assert_eq!(r.peek_raw(n).unwrap(), a);
        prop_assert_eq!(r.position(), at);
        prop_assert!(a.available as u64 == (n as u64).min(r.remaining()));
    }

    #[test]
    fn align_is_idempotent(data in prop::collection::vec(any::<u8>(), 1..32), pos in 0u64..256, a in 1u32..=32) {
        let mut r = BitReader::new(&data);
        r.rewind_to(pos);
        if r.align(a).is_ok() {
            let p = r.position();
            prop_assert_eq!(p % a as u64, 0);
            prop_assert_eq!(r.align(a).unwrap(), 0);
            prop_assert_eq!(r.position(), p);
        }
    }

    #[test]
    fn bitstring_literal_lengths(digits in "[01]{1,64}", dots in prop::collection::vec(any::<bool>(), 64)) {
        // periods may separate groups of four digits
        let mut text = String::from("0b");
        for (i, c) in digits.chars().enumerate() {
            if i > 0 && i % 4 == 0 && dots[i / 4] {
                text.push('.');
            }
            text.push(c);
        }
        let toks = tokenize(&text, 0).unwrap();
        match &toks[0].kind {
            TokenKind::Bits { value, len, .. } => {
                prop_assert_eq!(*len as usize, digits.len());
                prop_assert_eq!(*value, u64::from_str_radix(&digits, 2).unwrap());
            }
            k => prop_assert!(false, "{text} lexed as {k:?}"),
        }
    }

    #[test]
    fn dag_matches_tree_on_small_codes(seed in any::<u64>(), step in 1u32..=8) {
        let mut rng = StdRng::seed_from_u64(seed);
        let code = random_code(&mut rng, 64);
        let tree = TreeDecoder::new(&code);
        let dag = DecisionDag::build(&code, step).unwrap();
        let data: Vec<u8> = (0..16).map(|_| rng.gen()).collect();
        for start in 0..64 {
            let mut r = BitReader::new(&data);
            r.rewind_to(start);
            prop_assert_eq!(dag.decode(&mut r).ok(), tree.decode(&data, start, 128));
        }
    }

    #[test]
    fn injected_prefix_is_found(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let code = random_code(&mut rng, 200);
        prop_assert!(verify_prefix_free(&code).is_ok());
        let (bad, at) = inject_prefix(&mut rng, &code);
        let v = verify_prefix_free(&bad).unwrap_err();
        prop_assert!(v.first.0 == at || v.second.0 == at);
        prop_assert!(brute_force_violations(&bad).contains(&(v.first.0, v.second.0)));
    }

    #[test]
    fn documents_round_trip(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        for case in common::docs::cases() {
            let spec = common::load(case.file);
            let doc = (case.gen)(&mut rng);
            let bytes = common::generate(&spec, case.class, &doc).unwrap();
            let p = common::parse(&spec, case.class, &bytes).unwrap();
            common::check_accounting(&p).unwrap();
            let back = object_to_doc(&p.obj);
            prop_assert!(common::json_subset(&doc, &back), "{} {doc} -> {back}", case.file);
            prop_assert_eq!(common::generate(&spec, case.class, &back).unwrap(), bytes);
        }
    }
}

#[test]
fn fixtures_survive_pretty_printing() {
    for entry in fs::read_dir(common::fixture("")).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "fl") {
            let text = fs::read_to_string(&path).unwrap();
            let ast = parse_source(&text, 0).unwrap_or_else(|d| panic!("{}: {d:?}", path.display()));
            let again = parse_source(&pretty(&ast), 0).unwrap();
            assert_eq!(again, ast, "{}", path.display());
        }
    }
}
