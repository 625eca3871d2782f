//! Helpers shared by the integration tests and the acceptance runner.
#![allow(dead_code)]

pub mod codes;
pub mod docs;
pub mod golden;

use std::path::PathBuf;

use bitsyn::bitio::BitSource;
use bitsyn::engine::{object_to_doc, EngineError};
use bitsyn::{
    analyze, resolve_includes, AnalyzeOptions, BitReader, BitWriter, Diagnostic, ObjectValue, Session, SessionOptions,
    SyntaxSpec, Value,
};
use serde_json::Value as Json;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

/// Loads and checks a fixture schema, panicking on diagnostics.
pub fn load(name: &str) -> SyntaxSpec {
    try_load(name).unwrap_or_else(|d| panic!("{name}: {d:?}"))
}

pub fn try_load(name: &str) -> Result<SyntaxSpec, Vec<Diagnostic>> {
    let loaded = resolve_includes(&fixture(name), &[]).map_err(|e| e.diagnostics)?;
    analyze(&loaded.ast, &AnalyzeOptions::default())
}

pub struct Parsed {
    pub obj: ObjectValue,
    pub trace: String,
    /// Reader position after the parse.
    pub end: u64,
}

pub fn parse(spec: &SyntaxSpec, class: &str, bytes: &[u8]) -> Result<Parsed, EngineError> {
    let mut r = BitReader::new(bytes);
    let mut s = Session::new(spec, SessionOptions::default());
    let obj = s.parse(class, &mut r, &[])?;
    Ok(Parsed { obj, trace: s.trace_text(), end: r.position() })
}

pub fn generate(spec: &SyntaxSpec, class: &str, doc: &Json) -> Result<Vec<u8>, EngineError> {
    let mut w = BitWriter::new();
    let mut s = Session::new(spec, SessionOptions { trace: false, ..SessionOptions::default() });
    s.generate(class, doc, &mut w, &[])?;
    Ok(w.into_bytes())
}

/// Field lengths plus alignment equal each object's span, nested objects
/// span exactly what their member consumed, and the entry object's span
/// equals how far the reader moved.
pub fn check_accounting(p: &Parsed) -> Result<(), String> {
    object_accounting(&p.obj)?;
    if p.obj.bits != p.end {
        return Err(format!("{}: object spans {} bits but the reader moved {}", p.obj.class, p.obj.bits, p.end));
    }
    Ok(())
}

fn object_accounting(o: &ObjectValue) -> Result<(), String> {
    let mut sum = o.align_bits;
    for (name, f) in &o.fields {
        for inst in &f.instances {
            sum += inst.consumed;
            if let Value::Object(inner) = &inst.value {
                // a map-decoded object is one codeword, not a parsed object
                if !inner.fields.values().any(|f| f.parsable) {
                    continue;
                }
                if inner.bits != inst.consumed {
                    return Err(format!(
                        "{}.{name}: object spans {} bits, member consumed {}",
                        o.class, inner.bits, inst.consumed
                    ));
                }
            }
            value_accounting(&inst.value)?;
        }
    }
    if sum != o.bits {
        return Err(format!("{}: fields and alignment sum to {sum} bits, object spans {}", o.class, o.bits));
    }
    Ok(())
}

fn value_accounting(v: &Value) -> Result<(), String> {
    match v {
        Value::Object(o) => object_accounting(o),
        Value::Array(a) => a.elems.iter().flatten().try_for_each(|e| value_accounting(&e.value)),
        _ => Ok(()),
    }
}

/// Parses, checks accounting and regenerates; the regenerated bytes must
/// equal the input.
pub fn reparse_identical(spec: &SyntaxSpec, class: &str, bytes: &[u8]) -> Result<Parsed, String> {
    let p = parse(spec, class, bytes).map_err(|e| format!("{class}: parse failed @ {}: {e}", e.position))?;
    check_accounting(&p)?;
    let again =
        generate(spec, class, &object_to_doc(&p.obj)).map_err(|e| format!("{class}: regeneration failed: {e}"))?;
    if again != bytes {
        return Err(format!("{class}: regenerated {again:02x?}, parsed {bytes:02x?}"));
    }
    Ok(p)
}

/// True if every value in `want` appears in `got` with the same value.
/// Numbers compare numerically.
pub fn json_subset(want: &Json, got: &Json) -> bool {
    match (want, got) {
        (Json::Object(w), Json::Object(g)) => w.iter().all(|(k, v)| g.get(k).is_some_and(|x| json_subset(v, x))),
        (Json::Array(w), Json::Array(g)) => w.len() == g.len() && w.iter().zip(g).all(|(a, b)| json_subset(a, b)),
        (Json::Number(a), Json::Number(b)) => match (a.as_i64(), b.as_i64()) {
            (Some(x), Some(y)) => x == y,
            _ => a.as_f64() == b.as_f64(),
        },
        (a, b) => a == b,
    }
}

/// Packs a string of '0'/'1' (other characters ignored) MSB first,
/// zero-padding the last byte.
pub fn bits(s: &str) -> Vec<u8> {
    let digits: Vec<u8> = s.bytes().filter(|c| *c == b'0' || *c == b'1').map(|c| c - b'0').collect();
    digits.chunks(8).map(|c| c.iter().enumerate().fold(0u8, |acc, (i, b)| acc | (b << (7 - i)))).collect()
}
