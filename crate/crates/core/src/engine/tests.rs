use serde_json::json;

use super::*;
use crate::bitio::{BitReader, BitWriter};
use crate::frontend::parse_source;
use crate::sema::{analyze, AnalyzeOptions};

fn spec(src: &str) -> SyntaxSpec {
    let ast = parse_source(src, 0).unwrap();
    match analyze(&ast, &AnalyzeOptions::default()) {
        Ok(s) => s,
        Err(d) => panic!("{d:#?}"),
    }
}

fn parse(s: &SyntaxSpec, class: &str, bytes: &[u8]) -> Result<(ObjectValue, Vec<TraceEvent>), EngineError> {
    parse_object(s, class, &mut BitReader::new(bytes), &[], &SessionOptions::default())
}

fn generate(s: &SyntaxSpec, class: &str, doc: serde_json::Value) -> Result<Vec<u8>, EngineError> {
    let mut w = BitWriter::new();
    generate_object(s, class, &doc, &mut w, &[], &SessionOptions::default())?;
    Ok(w.into_bytes())
}

const HELLO: &str = "class HelloBits { unsigned int(8) Bits; }";

#[test]
fn hello_bits() {
    let s = spec(HELLO);
    let (o, t) = parse(&s, "HelloBits", &[0xAB]).unwrap();
    assert_eq!(o.get_i128("Bits"), Some(171));
    assert_eq!(o.bits, 8);
    assert_eq!(render_trace(&t), "Bits = 171 (8 bits @ 0)\n");
    assert_eq!(generate(&s, "HelloBits", json!({"Bits": 171})).unwrap(), vec![0xAB]);
}

#[test]
fn truncated_input_fails_at_read_start() {
    let s = spec("class T { unsigned int(8) a; unsigned int(8) b; }");
    let e = parse(&s, "T", &[1]).unwrap_err();
    assert_eq!((e.kind, e.position, e.message.as_str()), (ErrorKind::EndOfStream, 8, "end of stream"));
}

#[test]
fn little_endian_branch() {
    let s = spec(
        "class C { int a = 1;
           if (a == 1) { little int(16) b; } else { little int(24) b; } }",
    );
    let (o, _) = parse(&s, "C", &[0x34, 0x12]).unwrap();
    assert_eq!(o.get_i128("b"), Some(0x1234));
    assert_eq!(o.fields["b"].last().unwrap().len, 16);
}

#[test]
fn lengthof_follows_parse_size_side_effects() {
    let s = spec("class L { int i = 1; int(i++) a[5]; int n = lengthof(a[4]); }");
    let (o, _) = parse(&s, "L", &[0xFF, 0xFF, 0x05]).unwrap();
    let a = o.get("a").unwrap().as_array().unwrap();
    let lens: Vec<u64> = a.elems.iter().map(|e| e.as_ref().unwrap().len).collect();
    assert_eq!(lens, vec![1, 2, 3, 4, 5]);
    assert_eq!(o.get_i128("i"), Some(6));
    assert_eq!(o.get_i128("n"), Some(5));
    assert!(o.accounting_holds());
}

#[test]
fn alignment_counts_for_enclosing_object() {
    let s = spec("class P { int(5) x; aligned int(3) a = 2; int l = lengthof(a); }");
    let bytes = generate(&s, "P", json!({"x": 1})).unwrap();
    assert_eq!(bytes, vec![0b0000_1000, 0b0100_0000]);
    let (o, t) = parse(&s, "P", &bytes).unwrap();
    assert_eq!(o.align_bits, 3);
    assert_eq!(o.bits, 11);
    assert_eq!(o.get_i128("l"), Some(3));
    assert_eq!(o.get_i128("a"), Some(2));
    assert!(o.accounting_holds());
    assert!(render_trace(&t).contains("align +3\n"));
}

#[test]
fn expected_value_mismatch() {
    let s = spec("class M { unsigned int(8) m = 0x47; }");
    let e = parse(&s, "M", &[0x48]).unwrap_err();
    assert_eq!(e.kind, ErrorKind::Mismatch);
    let opts = SessionOptions { on_mismatch: MismatchPolicy::Warn, ..Default::default() };
    let mut seen = Vec::new();
    {
        let mut sess = Session::new(&s, opts).with_hook(|r: &Report| seen.push(r.kind));
        let o = sess.parse("M", &mut BitReader::new(&[0x48]), &[]).unwrap();
        assert_eq!(o.get_i128("m"), Some(0x48));
        assert_eq!(sess.trace_text(), "MISMATCH m expected 71 got 72 @ 0\nm = 72 (8 bits @ 0)\n");
    }
    assert_eq!(seen, vec![ReportKind::Mismatch]);
}

const FAMILY: &str = "
class A : bit(1) id = 0 { unsigned int(3) a; }
class B extends A : bit(1) id = 1 { unsigned int(3) b; }";

#[test]
fn id_dispatch_and_generation() {
    let s = spec(FAMILY);
    let bytes = generate(&s, "A", json!({"_class": "B", "a": 2, "b": 5})).unwrap();
    assert_eq!(bytes, vec![0b1010_1010]);
    let (o, t) = parse(&s, "A", &bytes).unwrap();
    assert_eq!(o.class, "B");
    assert_eq!((o.get_i128("a"), o.get_i128("b"), o.get_i128("id")), (Some(2), Some(5), Some(1)));
    assert!(render_trace(&t).starts_with("id-dispatch -> B\nid = 1 (1 bits @ 0)\n"));
    assert_eq!(dispatch_id(&s, "A", &BitReader::new(&[0x00])).unwrap(), Some("A"));
    assert_eq!(dispatch_id(&s, "B", &BitReader::new(&[0x00])).unwrap(), None);
    let e = parse(&s, "B", &[0x00]).unwrap_err();
    assert_eq!(e.kind, ErrorKind::NoIdMatch);
}

#[test]
fn missing_field_is_reported() {
    let s = spec(FAMILY);
    let e = generate(&s, "A", json!({"_class": "B", "a": 1})).unwrap_err();
    assert_eq!((e.kind, e.message.as_str()), (ErrorKind::MissingField, "missing field b"));
}

#[test]
fn isidof_loop_with_lookahead() {
    let s = spec(
        "class A : unsigned int(8) id = 1 .. 2 { unsigned int(8) v; }
         class S {
           unsigned int(8)* id;
           while (isidof(A, id) == 1) { A a; unsigned int(8)* id; }
           unsigned int(8) end = 0xFF;
         }",
    );
    let bytes = [1, 10, 2, 20, 0xFF];
    let (o, t) = parse(&s, "S", &bytes).unwrap();
    let doc = object_to_doc(&o);
    assert_eq!(doc["a"]["_repeat"].as_array().unwrap().len(), 2);
    assert_eq!(generate(&s, "S", doc).unwrap(), bytes.to_vec());
    assert!(o.accounting_holds());
    let text = render_trace(&t);
    assert!(text.contains("id-dispatch -> A\n+A @16\n  id = 2 (8 bits @ 16)\n"), "{text}");
}

#[test]
fn partial_arrays() {
    let s = spec("class P { int(2) A[[3]] = 1; int(4) B[[2]][3]; int x = A[3]; }");
    let (o, _) = parse(&s, "P", &[0b0100_0100, 0b1000_1100]).unwrap();
    assert_eq!(o.get_i128("x"), Some(1));
    let b = o.get("B").unwrap().as_array().unwrap();
    assert!(b.sparse && b.get(0).is_none());
    let row = b.get(2).unwrap().value.as_array().unwrap();
    assert_eq!(row.elems.len(), 3);
    let doc = object_to_doc(&o);
    assert_eq!(doc["A"], json!({"_sparse": {"3": 1}}));
    assert!(o.accounting_holds());

    let s = spec("class Q { int(2) A[[3]]; int y = A[1]; }");
    let e = parse(&s, "Q", &[0]).unwrap_err();
    assert_eq!(e.kind, ErrorKind::Unpopulated);
}

#[test]
fn array_cap_is_enforced() {
    let s = spec("class C { unsigned int(8) n; unsigned int(1) a[n * 8]; }");
    let e = parse(&s, "C", &[200]).unwrap_err();
    assert_eq!(e.kind, ErrorKind::ArrayCap);
    let s = spec("class C { unsigned int(8) n;\n%pragma array=4096\nunsigned int(1) a[n * 8]; }");
    let mut bytes = vec![200];
    bytes.extend(vec![0; 200]);
    assert!(parse(&s, "C", &bytes).is_ok());
}

#[test]
fn maps_decode_and_encode() {
    let s = spec(
        "map M(int) { 0b0, 1, 0b10, 2, 0b11, int(5) }
         class V { int(M) x; int(M) y; int(M) z; }",
    );
    // 0 | 10 | 11 00111
    let bytes = generate(&s, "V", json!({"x": 1, "y": 2, "z": 7})).unwrap();
    assert_eq!(bytes, vec![0b0101_1001, 0b1100_0000]);
    let (o, _) = parse(&s, "V", &bytes).unwrap();
    assert_eq!((o.get_i128("x"), o.get_i128("y"), o.get_i128("z")), (Some(1), Some(2), Some(7)));
    assert_eq!(o.fields["z"].last().unwrap().len, 7);
}

#[test]
fn vlc_failure_is_reported_once() {
    let s = spec("map M(int) { 0b0, 1, 0b10, 2 } class V { int(M) x; }");
    let mut n = 0;
    {
        let mut sess = Session::new(&s, SessionOptions::default()).with_hook(|_: &Report| n += 1);
        let e = sess.parse("V", &mut BitReader::new(&[0xC0]), &[]).unwrap_err();
        assert_eq!(e.kind, ErrorKind::Vlc);
    }
    assert_eq!(n, 1);
}

#[test]
fn params_and_nested_objects() {
    let s = spec(
        "class S(int i[2]) { int(3) a = i[0]; unsigned int(4) b = i[1]; }
         class T { int(2) v[2]; S s(v); }",
    );
    let bytes = generate(&s, "T", json!({"v": [1, 2], "s": {}})).unwrap();
    // 01 10 | 001 0010
    assert_eq!(bytes, vec![0b0110_0010_u8, 0b0100_0000]);
    let (o, t) = parse(&s, "T", &bytes).unwrap();
    let inner = o.get("s").unwrap().as_object().unwrap();
    assert_eq!(inner.get_i128("b"), Some(2));
    assert_eq!(
        render_trace(&t),
        "v = [1, 2] (4 bits @ 0)\n+S @4\n  a = 1 (3 bits @ 4)\n  b = 2 (4 bits @ 7)\n-S (7 bits)\n"
    );
}

#[test]
fn noput_rejects_generation() {
    let s = spec("%pragma noput\nclass N { unsigned int(8) x; }");
    let e = generate(&s, "N", json!({"x": 1})).unwrap_err();
    assert_eq!(e.kind, ErrorKind::Usage);
    assert!(parse(&s, "N", &[1]).is_ok());
}

#[test]
fn runtime_division_by_zero() {
    let s = spec("class D { unsigned int(8) n; int q = 10 / n; }");
    let e = parse(&s, "D", &[0]).unwrap_err();
    assert_eq!(e.kind, ErrorKind::Runtime);
    assert!(e.message.contains("division by zero"));
}

#[test]
fn unrepresentable_values() {
    let s = spec("class U { int(3) a; signed int(3) b; }");
    assert_eq!(generate(&s, "U", json!({"a": 8, "b": 0})).unwrap_err().kind, ErrorKind::Unrepresentable);
    assert_eq!(generate(&s, "U", json!({"a": -1, "b": 0})).unwrap_err().kind, ErrorKind::Unrepresentable);
    let bytes = generate(&s, "U", json!({"a": 7, "b": -4})).unwrap();
    let (o, _) = parse(&s, "U", &bytes).unwrap();
    assert_eq!((o.get_i128("a"), o.get_i128("b")), (Some(7), Some(-4)));
}

#[test]
fn char_arrays_render_as_text() {
    let s = spec("class G { char(8) sig[6] = \"GIF87a\"; }");
    let (o, t) = parse(&s, "G", b"GIF87a").unwrap();
    assert_eq!(render_trace(&t), "sig = \"GIF87a\" (48 bits @ 0)\n");
    assert_eq!(object_to_doc(&o), json!({"_class": "G", "sig": "GIF87a"}));
    assert_eq!(generate(&s, "G", json!({})).unwrap(), b"GIF87a".to_vec());
}

#[test]
fn switch_and_loops() {
    let s = spec(
        "class W {
           unsigned int(8) k;
           int t = 0;
           switch (k) { case 1: t = 10; case 2: t += 1; break; default: t = 99; }
           int s = 0;
           int i;
           for (i = 0; i < 4; i++) { if (i == 2) continue; s += i; }
           do { s++; } while (s < 10);
         }",
    );
    let (o, _) = parse(&s, "W", &[1]).unwrap();
    assert_eq!(o.get_i128("t"), Some(11));
    assert_eq!(o.get_i128("s"), Some(10));
    let (o, _) = parse(&s, "W", &[5]).unwrap();
    assert_eq!(o.get_i128("t"), Some(99));
}

#[test]
fn zero_parse_size_uses_default() {
    let s = spec("class Z { unsigned int(8) n; int(n) a = 3; int(n) b; }");
    let (o, _) = parse(&s, "Z", &[0]).unwrap();
    assert_eq!((o.get_i128("a"), o.get_i128("b")), (Some(3), Some(0)));
    assert_eq!(o.bits, 8);
}

#[test]
fn floats_round_trip() {
    let s = spec("class F { float(32) f; little double(64) d; }");
    let bytes = generate(&s, "F", json!({"f": 0.15625, "d": -2.5})).unwrap();
    assert_eq!(&bytes[..4], &0.15625f32.to_bits().to_be_bytes());
    assert_eq!(&bytes[4..], &(-2.5f64).to_bits().to_le_bytes());
    let (o, _) = parse(&s, "F", &bytes).unwrap();
    assert_eq!(o.get("f"), Some(&Value::Float(0.15625)));
    assert_eq!(o.get("d"), Some(&Value::Float(-2.5)));
}
