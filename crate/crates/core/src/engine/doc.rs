//! JSON value documents.
//!
//! An object is `{"_class": "B", "b": 5}`. A member whose declaration ran
//! several times is `{"_repeat": [v0, v1, ...]}`, partial arrays are
//! `{"_sparse": {"3": v}}` and char arrays may be given as strings.

use serde_json::{Map, Number, Value as Json};

use crate::value::{ArrayValue, ObjectValue, ScalarType, Value};
use crate::vlcmap::OutputType;

pub type JsonMap = Map<String, Json>;

/// A document position: a JSON node, or one byte of a string.
#[derive(Debug, Clone, Copy)]
pub(crate) enum DocRef<'a> {
    Json(&'a Json),
    Byte(u8),
}

impl<'a> DocRef<'a> {
    pub fn index(self, i: usize) -> Option<DocRef<'a>> {
        match self {
            DocRef::Json(Json::Array(v)) => v.get(i).filter(|x| !x.is_null()).map(DocRef::Json),
            // C strings: bytes past the text read as NUL
            DocRef::Json(Json::String(s)) => Some(DocRef::Byte(s.as_bytes().get(i).copied().unwrap_or(0))),
            DocRef::Json(Json::Object(m)) => m.get("_sparse")?.as_object()?.get(&i.to_string()).map(DocRef::Json),
            _ => None,
        }
    }

    pub fn object(self) -> Option<&'a JsonMap> {
        match self {
            DocRef::Json(Json::Object(m)) => Some(m),
            _ => None,
        }
    }

    pub fn class_name(self) -> Option<&'a str> {
        self.object()?.get("_class")?.as_str()
    }
}

pub(crate) fn doc_scalar(d: DocRef<'_>, t: ScalarType) -> Result<Value, String> {
    let v = match d {
        DocRef::Byte(b) => Value::Int(b as i64),
        DocRef::Json(j) => match j {
            Json::Number(n) => {
                if let Some(i) = n.as_i64() {
                    Value::Int(i)
                } else if let Some(u) = n.as_u64() {
                    Value::UInt(u)
                } else {
                    let f = n.as_f64().unwrap_or(f64::NAN);
                    if t.is_float() {
                        Value::Float(f)
                    } else {
                        return Err(format!("expected an integer, found {n}"));
                    }
                }
            }
            Json::Bool(b) => Value::Int(*b as i64),
            Json::String(s) if s.len() == 1 && !t.is_float() => Value::Int(s.as_bytes()[0] as i64),
            Json::String(s) if t.is_float() => match s.as_str() {
                "nan" => Value::Float(f64::NAN),
                "inf" => Value::Float(f64::INFINITY),
                "-inf" => Value::Float(f64::NEG_INFINITY),
                _ => return Err(format!("expected a number, found \"{s}\"")),
            },
            other => return Err(format!("expected a number, found {other}")),
        },
    };
    t.coerce(&v).map_err(|e| e.to_string())
}

pub(crate) fn doc_map_value(d: DocRef<'_>, out: &OutputType) -> Result<Value, String> {
    match out {
        OutputType::Scalar(t) => doc_scalar(d, *t),
        OutputType::Class { name, fields } => {
            let m = d.object().ok_or_else(|| format!("expected an object of class {name}"))?;
            let mut obj = ObjectValue::new(name.clone());
            for (f, t) in fields {
                let v = m.get(f).ok_or_else(|| format!("missing field {f}"))?;
                obj.set_member(f, doc_scalar(DocRef::Json(v), *t)?, false, false);
            }
            Ok(Value::Object(Box::new(obj)))
        }
        OutputType::Array { elem, len } => {
            let mut vals = Vec::with_capacity(*len);
            for i in 0..*len {
                let e = d.index(i).ok_or_else(|| format!("missing array element {i}"))?;
                vals.push(doc_scalar(e, *elem)?);
            }
            let mut a = ArrayValue::dense(vals);
            a.char_elems = matches!(elem, ScalarType::Char { .. });
            Ok(Value::Array(a))
        }
    }
}

/// Document holding the parsable members of `o`, suitable as input to
/// generation.
pub fn object_to_doc(o: &ObjectValue) -> Json {
    let mut m = JsonMap::new();
    m.insert("_class".into(), Json::String(o.class.clone()));
    // map-produced objects carry only plain members
    let all = !o.fields.values().any(|f| f.parsable);
    for (name, f) in &o.fields {
        if !(f.parsable || all) {
            continue;
        }
        match f.instances.as_slice() {
            [] => {}
            [one] => {
                m.insert(name.clone(), value_to_json(&one.value));
            }
            many => {
                let list = many.iter().map(|i| value_to_json(&i.value)).collect();
                let mut rep = JsonMap::new();
                rep.insert("_repeat".into(), Json::Array(list));
                m.insert(name.clone(), Json::Object(rep));
            }
        }
    }
    Json::Object(m)
}

pub fn value_to_json(v: &Value) -> Json {
    match v {
        Value::Int(i) => Json::from(*i),
        Value::UInt(u) => Json::from(*u),
        Value::Float(f) => match Number::from_f64(*f) {
            Some(n) => Json::Number(n),
            None if f.is_nan() => Json::String("nan".into()),
            None if *f > 0.0 => Json::String("inf".into()),
            None => Json::String("-inf".into()),
        },
        Value::Array(a) => {
            if let Some(s) = a.as_text() {
                return Json::String(s);
            }
            if a.sparse {
                let mut m = JsonMap::new();
                for (i, e) in a.elems.iter().enumerate() {
                    if let Some(e) = e {
                        m.insert(i.to_string(), value_to_json(&e.value));
                    }
                }
                let mut outer = JsonMap::new();
                outer.insert("_sparse".into(), Json::Object(m));
                return Json::Object(outer);
            }
            Json::Array(a.elems.iter().map(|e| e.as_ref().map_or(Json::Null, |e| value_to_json(&e.value))).collect())
        }
        Value::Object(o) => object_to_doc(o),
    }
}
