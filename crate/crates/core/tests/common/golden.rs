//! Worked examples from the language description, checked end to end.
//! Expected bytes are assembled bit by bit with [`bits`], independently of
//! the writer under test.

use bitsyn::diag::Code;
use bitsyn::engine::{dispatch_id, object_to_doc, value_to_json, ErrorKind};
use bitsyn::frontend::{parse_source, pretty};
use bitsyn::{BitReader, ObjectValue};
use serde_json::{json, Value as Json};

use super::{bits, check_accounting, generate, load, parse, reparse_identical, try_load, Parsed};

pub type Check = fn() -> Result<(), String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn expect_eq<T: PartialEq + std::fmt::Debug>(what: &str, got: T, want: T) -> Result<(), String> {
    ensure!(got == want, "{what}: got {got:?}, want {want:?}");
    Ok(())
}

fn member(o: &ObjectValue, name: &str) -> Json {
    o.get(name).map(value_to_json).unwrap_or(Json::Null)
}

fn ok_parse(spec: &bitsyn::SyntaxSpec, class: &str, bytes: &[u8]) -> Result<Parsed, String> {
    let p = parse(spec, class, bytes).map_err(|e| format!("{class}: parse failed @ {}: {e}", e.position))?;
    check_accounting(&p)?;
    Ok(p)
}

fn fails_with(spec: &bitsyn::SyntaxSpec, class: &str, bytes: &[u8], kind: ErrorKind, at: u64) -> Result<(), String> {
    match parse(spec, class, bytes) {
        Ok(_) => Err(format!("{class}: parse of {bytes:02x?} should fail")),
        Err(e) => {
            expect_eq(&format!("{class} error kind"), e.kind, kind)?;
            expect_eq(&format!("{class} error position"), e.position, at)
        }
    }
}

pub fn all() -> Vec<(&'static str, Check)> {
    vec![
        ("hello_bits", hello_bits),
        ("parsable_aligned", parsable_aligned),
        ("parsable_lookahead", parsable_lookahead),
        ("parsable_expected", parsable_expected),
        ("conditional_little_endian", conditional_little_endian),
        ("array_dynamic_size", array_dynamic_size),
        ("array_initialized", array_initialized),
        ("array_partial", array_partial),
        ("class_simple", class_simple),
        ("class_params", class_params),
        ("inheritance", inheritance),
        ("inheritance_ids", inheritance_ids),
        ("id_range", id_range),
        ("map_class_output", map_class_output),
        ("map_not_prefix_free", map_not_prefix_free),
        ("map_escape", map_escape),
        ("isidof_loop", isidof_loop),
        ("lengthof_simple", lengthof_simple),
        ("lengthof_growing", lengthof_growing),
        ("scoping_errors", scoping_errors),
        ("include_directive", include_directive),
        ("import_directive", import_directive),
        ("pragmas", pragmas),
        ("verbatim_blocks", verbatim_blocks),
    ]
}

pub fn hello_bits() -> Result<(), String> {
    let s = load("hello_bits.fl");
    let p = ok_parse(&s, "HelloBits", &[0xAB])?;
    expect_eq("Bits", p.obj.get_i128("Bits"), Some(171))?;
    expect_eq("bits", p.obj.bits, 8)?;
    expect_eq("trace", p.trace.as_str(), "Bits = 171 (8 bits @ 0)\n")?;
    expect_eq("generated", generate(&s, "HelloBits", &json!({"Bits": 171})).map_err(|e| e.to_string())?, vec![0xAB])?;
    fails_with(&s, "HelloBits", &[], ErrorKind::EndOfStream, 0)
}

pub fn parsable_aligned() -> Result<(), String> {
    let s = load("parsable.fl");
    let p = ok_parse(&s, "Aligned", &bits("10101 000 011"))?;
    expect_eq("lead", p.obj.get_i128("lead"), Some(21))?;
    expect_eq("a", p.obj.get_i128("a"), Some(3))?;
    expect_eq("a offset", p.obj.fields["a"].last().map(|i| i.offset), Some(8))?;
    expect_eq("align bits", p.obj.align_bits, 3)?;
    expect_eq("bits", p.obj.bits, 11)?;
    expect_eq("trace", p.trace.as_str(), "lead = 21 (5 bits @ 0)\nalign +3\na = 3 (3 bits @ 8)\n")?;
    Ok(())
}

pub fn parsable_lookahead() -> Result<(), String> {
    let s = load("parsable.fl");
    let p = ok_parse(&s, "Peek", &bits("101 00000"))?;
    expect_eq("a", p.obj.get_i128("a"), Some(5))?;
    expect_eq("whole", p.obj.get_i128("whole"), Some(0xA0))?;
    expect_eq("bits", p.obj.bits, 8)?;
    expect_eq("trace", p.trace.as_str(), "a = 5 (3 bits @ 0)\nwhole = 160 (8 bits @ 0)\n")?;
    // look-ahead fields write nothing
    expect_eq("generated", generate(&s, "Peek", &json!({"whole": 0xA0})).map_err(|e| e.to_string())?, vec![0xA0])
}

pub fn parsable_expected() -> Result<(), String> {
    let s = load("parsable.fl");
    // 5 bits of lead, 3 zero pad bits, then 010
    let want = bits("10101 000 010");
    expect_eq("generated", generate(&s, "Expected", &json!({"lead": 21})).map_err(|e| e.to_string())?, want.clone())?;
    let p = ok_parse(&s, "Expected", &want)?;
    expect_eq("a", p.obj.get_i128("a"), Some(2))?;
    fails_with(&s, "Expected", &bits("10101 000 011"), ErrorKind::Mismatch, 8)
}

pub fn conditional_little_endian() -> Result<(), String> {
    let s = load("conditional.fl");
    let p = ok_parse(&s, "Little", &[0x34, 0x12])?;
    expect_eq("b", p.obj.get_i128("b"), Some(u16::from_le_bytes([0x34, 0x12]) as i128))?;
    let p = ok_parse(&s, "Either", &[0x02, 0x56, 0x34, 0x12])?;
    expect_eq("b", p.obj.get_i128("b"), Some(u32::from_le_bytes([0x56, 0x34, 0x12, 0]) as i128))?;
    expect_eq("b length", p.obj.fields["b"].last().map(|i| i.len), Some(24))?;
    Ok(())
}

pub fn array_dynamic_size() -> Result<(), String> {
    let s = load("arrays.fl");
    let p = reparse_identical(&s, "Dynamic", &bits("00011 01 10 11"))?;
    expect_eq("A", member(&p.obj, "A"), json!([1, 2, 3]))?;
    expect_eq("trace", p.trace.as_str(), "a = 3 (5 bits @ 0)\nA = [1, 2, 3] (6 bits @ 5)\n")
}

pub fn array_initialized() -> Result<(), String> {
    let s = load("arrays.fl");
    let p = ok_parse(&s, "Initialized", &bits("1000"))?;
    expect_eq("A", member(&p.obj, "A"), json!([1, 2]))?;
    expect_eq("B", member(&p.obj, "B"), json!([5, 5, 5]))?;
    expect_eq("sum", p.obj.get_i128("sum"), Some(8))?;
    fails_with(&s, "Initialized", &bits("0111"), ErrorKind::Mismatch, 0)
}

pub fn array_partial() -> Result<(), String> {
    let s = load("arrays.fl");
    let p = reparse_identical(&s, "Partial", &bits("01 0001 0010 0011"))?;
    expect_eq("A", member(&p.obj, "A"), json!({"_sparse": {"3": 1}}))?;
    expect_eq("B", member(&p.obj, "B"), json!({"_sparse": {"2": [1, 2, 3]}}))?;
    expect_eq("trace", p.trace.as_str(), "A[3] = 1 (2 bits @ 0)\nB[2] = [1, 2, 3] (12 bits @ 2)\n")
}

pub fn class_simple() -> Result<(), String> {
    let s = load("class_simple.fl");
    let p = reparse_identical(&s, "Pair", &bits("101 1001 0 010 1111"))?;
    let first = p.obj.get("first").and_then(|v| v.as_object()).ok_or("first missing")?;
    expect_eq("first", (first.get_i128("a"), first.get_i128("b")), (Some(5), Some(9)))?;
    expect_eq("parent align bits", p.obj.align_bits, 1)?;
    let want = "+SimpleClass @0\n  a = 5 (3 bits @ 0)\n  b = 9 (4 bits @ 3)\n-SimpleClass (7 bits)\nalign +1\n\
                +SimpleClass @8\n  a = 2 (3 bits @ 8)\n  b = 15 (4 bits @ 11)\n-SimpleClass (7 bits)\n";
    expect_eq("trace", p.trace.as_str(), want)
}

pub fn class_params() -> Result<(), String> {
    let s = load("class_params.fl");
    let p = reparse_identical(&s, "Holder", &bits("10 11 010 0011"))?;
    let a = p.obj.get("a").and_then(|v| v.as_object()).ok_or("a missing")?;
    expect_eq("a", (a.get_i128("a"), a.get_i128("b")), (Some(2), Some(3)))?;
    // the members are checked against the actual parameter values
    fails_with(&s, "Holder", &bits("10 11 011 0011"), ErrorKind::Mismatch, 4)
}

pub fn inheritance() -> Result<(), String> {
    let s = load("inherit.fl");
    let p = reparse_identical(&s, "B", &bits("10 101"))?;
    expect_eq("B members", (p.obj.get_i128("a"), p.obj.get_i128("b")), (Some(2), Some(5)))?;
    expect_eq("trace", p.trace.as_str(), "a = 2 (2 bits @ 0)\nb = 5 (3 bits @ 2)\n")
}

pub fn inheritance_ids() -> Result<(), String> {
    let s = load("inherit_ids.fl");
    expect_eq("next bit 1", dispatch_id(&s, "A", &BitReader::new(&bits("1"))).ok().flatten(), Some("B"))?;
    expect_eq("next bit 0", dispatch_id(&s, "A", &BitReader::new(&bits("0"))).ok().flatten(), Some("A"))?;
    let bytes = bits("1 10 101 0 01");
    let p = reparse_identical(&s, "Holder", &bytes)?;
    let classes: Vec<String> = ["first", "second"]
        .iter()
        .map(|m| p.obj.get(m).and_then(|v| v.as_object()).map_or(String::new(), |o| o.class.clone()))
        .collect();
    expect_eq("classes", classes, vec!["B".to_string(), "A".to_string()])?;
    ensure!(p.trace.starts_with("id-dispatch -> B\n+B @0\n  id = 1 (1 bits @ 0)\n"), "trace:\n{}", p.trace);
    let doc = json!({"first": {"_class": "B", "a": 2, "b": 5}, "second": {"_class": "A", "a": 1}});
    expect_eq("generated", generate(&s, "Holder", &doc).map_err(|e| e.to_string())?, bytes)?;
    // the ID is implied by the class
    expect_eq(
        "B alone",
        generate(&s, "A", &json!({"_class": "B", "a": 2, "b": 5})).map_err(|e| e.to_string())?,
        bits("1 10 101"),
    )?;
    Ok(())
}

pub fn id_range() -> Result<(), String> {
    let s = load("id_range.fl");
    let peek = |code: u32| dispatch_id(&s, "slice", &BitReader::new(&code.to_be_bytes())).ok().flatten();
    expect_eq("0x1AF", peek(0x1AF), Some("slice"))?;
    expect_eq("0x101", peek(0x101), Some("slice"))?;
    expect_eq("0x1B0", peek(0x1B0), None)?;
    expect_eq("0x100", peek(0x100), None)?;
    let p = reparse_identical(&s, "Slices", &bits("101 00000 0000_0000_0000_0000_0000_0001_1010_1111 10001"))?;
    let sl = p.obj.get("s").and_then(|v| v.as_object()).ok_or("s missing")?;
    expect_eq("start code", sl.get_i128("slice_start_code"), Some(0x1AF))?;
    expect_eq("slice bits", sl.bits, 42)?;
    fails_with(&s, "Slices", &bits("101 00000 0000_0000_0000_0000_0000_0001_1011_0000 10001"), ErrorKind::NoIdMatch, 3)
}

pub fn map_class_output() -> Result<(), String> {
    let s = load("map_blocks.fl");
    let p = reparse_identical(&s, "Chroma", &bits("01"))?;
    expect_eq(
        "chroma_format",
        member(&p.obj, "chroma_format"),
        json!({"_class": "YUVblocks", "Yblocks": 4, "Ublocks": 2, "Vblocks": 2}),
    )?;
    expect_eq("consumed", p.obj.fields["chroma_format"].last().map(|i| i.consumed), Some(2))?;
    expect_eq("total", p.obj.get_i128("total"), Some(8))?;
    let doc = json!({"chroma_format": {"Yblocks": 4, "Ublocks": 4, "Vblocks": 4}});
    expect_eq("encoded", generate(&s, "Chroma", &doc).map_err(|e| e.to_string())?, bits("10"))?;
    fails_with(&s, "Chroma", &bits("11"), ErrorKind::Vlc, 0)
}

pub fn map_not_prefix_free() -> Result<(), String> {
    let diags = try_load("map_prefix.fl").err().ok_or("schema should be rejected")?;
    let found: Vec<(Code, u32)> = diags.iter().map(|d| (d.code, d.loc.line)).collect();
    expect_eq("diagnostics", found, vec![(Code::PrefixViolation, 3)])
}

pub fn map_escape() -> Result<(), String> {
    let s = load("map_escape.fl");
    let p = reparse_identical(&s, "Escaped", &bits("11 00111 0 10"))?;
    let got: Vec<_> = ["first", "second", "third"]
        .iter()
        .map(|m| (p.obj.get_i128(m), p.obj.fields[*m].last().map(|i| i.consumed)))
        .collect();
    expect_eq("values", got, vec![(Some(7), Some(7)), (Some(1), Some(1)), (Some(2), Some(2))])?;
    let doc = json!({"first": 7, "second": 1, "third": 31});
    expect_eq("encoded", generate(&s, "Escaped", &doc).map_err(|e| e.to_string())?, bits("11 00111 0 11 11111"))
}

pub fn isidof_loop() -> Result<(), String> {
    let s = load("isidof.fl");
    let bytes = [0x01, 0x12, 0x02, 0x33, 0x03, 0x44, 0xFF];
    let p = reparse_identical(&s, "Sequence", &bytes)?;
    let doc = object_to_doc(&p.obj);
    let classes: Vec<&str> = (0..3).filter_map(|i| doc["a"]["_sparse"][i.to_string()]["_class"].as_str()).collect();
    expect_eq("classes", classes, vec!["A1", "A2", "A2"])?;
    expect_eq("look-ahead ids", doc.get("id").is_some(), true)?;
    ensure!(p.trace.contains("id = 2 (8 bits @ 16)\nid-dispatch -> A2\n+A2 @16\n"), "trace:\n{}", p.trace);
    ensure!(p.trace.ends_with("id = 255 (8 bits @ 48)\nterminator = 255 (8 bits @ 48)\n"), "trace:\n{}", p.trace);
    Ok(())
}

pub fn lengthof_simple() -> Result<(), String> {
    let s = load("lengthof.fl");
    let p = reparse_identical(&s, "Simple", &bits("00011 101"))?;
    expect_eq("j", p.obj.get_i128("j"), Some(5))
}

pub fn lengthof_growing() -> Result<(), String> {
    let s = load("lengthof.fl");
    // element k is k+1 bits long
    let stream: String = (1..=5).map(|k| "1".repeat(k)).collect();
    let p = reparse_identical(&s, "Growing", &bits(&stream))?;
    expect_eq("j", p.obj.get_i128("j"), Some(5))?;
    let lens: Vec<u64> = p
        .obj
        .get("a")
        .and_then(|v| v.as_array())
        .map(|a| a.elems.iter().flatten().map(|e| e.len).collect())
        .unwrap_or_default();
    expect_eq("element lengths", lens, vec![1, 2, 3, 4, 5])?;
    expect_eq("i", p.obj.get_i128("i"), Some(6))
}

pub fn scoping_errors() -> Result<(), String> {
    let diags = try_load("scoping.fl").err().ok_or("schema should be rejected")?;
    let found: Vec<(Code, u32)> = diags.iter().map(|d| (d.code, d.loc.line)).collect();
    expect_eq("diagnostics", found, vec![(Code::HidesParsable, 7), (Code::NotMember, 12)])
}

pub fn include_directive() -> Result<(), String> {
    directive("include_main.fl", bitsyn::frontend::ast::Origin::Included)
}

pub fn import_directive() -> Result<(), String> {
    directive("import_main.fl", bitsyn::frontend::ast::Origin::Imported)
}

fn directive(file: &str, origin: bitsyn::frontend::ast::Origin) -> Result<(), String> {
    use bitsyn::frontend::ast::ItemKind;
    let loaded = bitsyn::resolve_includes(&super::fixture(file), &[]).map_err(|e| format!("{:?}", e.diagnostics))?;
    let origins: Vec<_> =
        loaded.ast.items.iter().filter(|i| matches!(i.kind, ItemKind::Decl(_))).map(|i| i.origin).collect();
    expect_eq("constant origin", origins, vec![origin])?;
    let s = load(file);
    expect_eq("a", s.constants.get("a").and_then(|v| v.as_i128()), Some(4))?;
    let p = reparse_identical(&s, "Test", &bits("1010"))?;
    expect_eq("t", p.obj.get_i128("t"), Some(10))?;
    expect_eq("t length", p.obj.fields["t"].last().map(|i| i.len), Some(4))
}

pub fn pragmas() -> Result<(), String> {
    let s = load("pragma.fl");
    // 200 elements: above the 128 limit in force around the class, within
    // the 1024 set just before the array
    let n = 200usize;
    let stream = format!("{n:010b}{}", "011".repeat(n));
    let p = ok_parse(&s, "Example", &bits(&stream))?;
    expect_eq("length", p.obj.get_i128("length"), Some(n as i128))?;
    expect_eq("bits", p.obj.bits, 10 + 3 * n as u64)?;
    match generate(&s, "Example", &object_to_doc(&p.obj)) {
        Ok(_) => Err("noput class generated output".into()),
        Err(e) => expect_eq("noput error", e.kind, ErrorKind::Usage),
    }
}

pub fn verbatim_blocks() -> Result<(), String> {
    let loaded =
        bitsyn::resolve_includes(&super::fixture("gif87a.fl"), &[]).map_err(|e| format!("{:?}", e.diagnostics))?;
    let v = loaded.ast.verbatims();
    expect_eq("verbatim count", v.len(), 3)?;
    ensure!(v.iter().all(|(class, _)| *class == Some("GIF87a")), "verbatim blocks outside GIF87a");
    // pretty-printing keeps them byte for byte
    let again = parse_source(&pretty(&loaded.ast), 0).map_err(|d| d.message)?;
    expect_eq("re-parsed verbatim", again.verbatims(), v)
}
