//! Variable-length code maps: unique-decodability check, hybrid lookup
//! decoder, and symbol encode/decode.

mod bitstring;
mod dag;
mod prefix;

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

pub use bitstring::BitString;
pub use dag::{DagError, DecisionDag, NoMatch, Node, Outcome, MAX_NODE_WIDTH};
pub use prefix::{verify_prefix_free, PrefixViolation};

use crate::bitio::{BitError, BitSink, BitSource, ByteOrder};
use crate::value::{ObjectValue, ScalarType, Value, ValueKey};

pub const DEFAULT_STEP: u32 = 4;

/// What a map produces.
#[derive(Debug, Clone, PartialEq)]
pub enum OutputType {
    Scalar(ScalarType),
    /// A (non-parsable) class; entries give one value per field, in order.
    Class {
        name: String,
        fields: Vec<(String, ScalarType)>,
    },
    Array {
        elem: ScalarType,
        len: usize,
    },
}

impl OutputType {
    pub fn arity(&self) -> Option<usize> {
        match self {
            OutputType::Scalar(_) => None,
            OutputType::Class { fields, .. } => Some(fields.len()),
            OutputType::Array { len, .. } => Some(*len),
        }
    }

    /// Builds a typed value from an entry's literal components.
    pub fn build(&self, parts: &[Value]) -> Result<Value, String> {
        match self {
            OutputType::Scalar(t) => match parts {
                [v] => t.coerce(v).map_err(|e| e.to_string()),
                _ => Err(format!("expected a single value, found {}", parts.len())),
            },
            OutputType::Class { name, fields } => {
                if parts.len() != fields.len() {
                    return Err(format!("class {name} has {} fields, entry gives {}", fields.len(), parts.len()));
                }
                let mut obj = ObjectValue::new(name.clone());
                for ((fname, t), v) in fields.iter().zip(parts) {
                    obj.set_member(fname, t.coerce(v).map_err(|e| e.to_string())?, false, false);
                }
                Ok(Value::Object(Box::new(obj)))
            }
            OutputType::Array { elem, len } => {
                if parts.len() != *len {
                    return Err(format!("array has {len} elements, entry gives {}", parts.len()));
                }
                let vals = parts.iter().map(|v| elem.coerce(v)).collect::<Result<Vec<_>, _>>();
                let mut a = crate::value::ArrayValue::dense(vals.map_err(|e| e.to_string())?);
                a.char_elems = matches!(elem, ScalarType::Char { .. });
                Ok(Value::Array(a))
            }
        }
    }

    /// Normalizes a caller-supplied value to the map's representation.
    pub fn normalize(&self, v: &Value) -> Option<Value> {
        match (self, v) {
            (OutputType::Scalar(t), v) if v.is_scalar() => t.coerce(v).ok(),
            (OutputType::Class { fields, .. }, Value::Object(o)) => {
                let parts = fields.iter().map(|(n, _)| o.get(n).cloned()).collect::<Option<Vec<_>>>()?;
                self.build(&parts).ok()
            }
            (OutputType::Array { .. }, Value::Array(a)) => {
                let parts = a.elems.iter().map(|e| e.as_ref().map(|e| e.value.clone())).collect::<Option<Vec<_>>>()?;
                self.build(&parts).ok()
            }
            _ => None,
        }
    }
}

/// Width of an escape extension.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExtSize {
    Bits(u32),
    /// Cascade into another map of the same [`MapSet`].
    Map(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Extension {
    pub ty: ScalarType,
    pub size: ExtSize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    Direct(Value),
    Escape(Extension),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MapEntry {
    pub codeword: BitString,
    pub payload: Payload,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CompileError {
    #[error("codeword {} (entry {}) is a prefix of {} (entry {})", .0.first.1, .0.first.0, .0.second.1, .0.second.0)]
    NotPrefixFree(PrefixViolation),
    #[error(transparent)]
    Dag(#[from] DagError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MapError {
    #[error("VLC lookup failed in map {map}")]
    NoMatch { map: String, position: u64 },
    #[error("value {value} cannot be encoded by map {map}")]
    Unencodable { map: String, value: String },
    #[error(transparent)]
    Bit(#[from] BitError),
}

/// A checked map with its decoder and encoder index.
#[derive(Debug, Clone)]
pub struct CompiledMap {
    pub name: String,
    pub output: OutputType,
    pub entries: Vec<MapEntry>,
    pub decoder: DecisionDag,
    encoder_index: HashMap<ValueKey, usize>,
}

impl CompiledMap {
    pub fn new(
        name: impl Into<String>,
        output: OutputType,
        entries: Vec<MapEntry>,
        step: u32,
    ) -> Result<Self, CompileError> {
        let codes: Vec<BitString> = entries.iter().map(|e| e.codeword).collect();
        verify_prefix_free(&codes).map_err(CompileError::NotPrefixFree)?;
        let decoder = DecisionDag::build(&codes, step)?;
        let mut encoder_index = HashMap::new();
        for (i, e) in entries.iter().enumerate() {
            if let Payload::Direct(v) = &e.payload {
                if let Some(k) = ValueKey::of(v) {
                    // first declaration wins for duplicate values
                    encoder_index.entry(k).or_insert(i);
                }
            }
        }
        Ok(CompiledMap { name: name.into(), output, entries, decoder, encoder_index })
    }

    /// Entry index whose direct value equals `v`.
    pub fn direct_entry(&self, v: &Value) -> Option<usize> {
        let v = self.output.normalize(v)?;
        self.encoder_index.get(&ValueKey::of(&v)?).copied()
    }

    pub fn direct_count(&self) -> usize {
        self.encoder_index.len()
    }

    pub fn stats(&self) -> MapStats {
        MapStats {
            name: self.name.clone(),
            entries: self.entries.len(),
            min_len: self.entries.iter().map(|e| e.codeword.len()).min().unwrap_or(0),
            max_len: self.entries.iter().map(|e| e.codeword.len()).max().unwrap_or(0),
            nodes: self.decoder.nodes().len(),
            slots: self.decoder.slot_count(),
            depth: self.decoder.depth(),
        }
    }
}

/// Size statistics for one compiled map.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MapStats {
    pub name: String,
    pub entries: usize,
    pub min_len: u32,
    pub max_len: u32,
    pub nodes: usize,
    pub slots: usize,
    pub depth: u32,
}

impl fmt::Display for MapStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} entries={} minlen={} maxlen={} nodes={} slots={} depth={}",
            self.name, self.entries, self.min_len, self.max_len, self.nodes, self.slots, self.depth
        )
    }
}

/// All maps of a schema. Escape extensions refer to other maps by index.
#[derive(Debug, Clone, Default)]
pub struct MapSet {
    maps: Vec<CompiledMap>,
    by_name: HashMap<String, usize>,
}

impl MapSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, map: CompiledMap) -> usize {
        let id = self.maps.len();
        self.by_name.insert(map.name.clone(), id);
        self.maps.push(map);
        id
    }

    pub fn get(&self, id: usize) -> &CompiledMap {
        &self.maps[id]
    }

    pub fn id(&self, name: &str) -> Option<usize> {
        self.by_name.get(name).copied()
    }

    pub fn by_name(&self, name: &str) -> Option<&CompiledMap> {
        self.id(name).map(|i| &self.maps[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = &CompiledMap> {
        self.maps.iter()
    }

    pub fn len(&self) -> usize {
        self.maps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.maps.is_empty()
    }

    /// Decodes one symbol of map `id`. Returns the value and the bits consumed
    /// (codeword plus any escape extension).
    pub fn decode_symbol<S: BitSource + ?Sized>(&self, id: usize, src: &mut S) -> Result<(Value, u64), MapError> {
        let map = &self.maps[id];
        let start = src.position();
        let (entry, len) =
            map.decoder.decode(src).map_err(|e| MapError::NoMatch { map: map.name.clone(), position: e.position })?;
        match &map.entries[entry as usize].payload {
            Payload::Direct(v) => Ok((v.clone(), len as u64)),
            Payload::Escape(ext) => {
                let raw = match ext.size {
                    ExtSize::Bits(w) if ext.ty.is_float() => Value::Float(src.read_float(w, ByteOrder::Big)?),
                    ExtSize::Bits(w) if ext.ty.reads_signed() => Value::Int(src.read_int(w, ByteOrder::Big)?),
                    ExtSize::Bits(w) => Value::UInt(src.read_uint(w, ByteOrder::Big)?),
                    ExtSize::Map(inner) => self.decode_symbol(inner, src)?.0,
                };
                let v = match &map.output {
                    OutputType::Scalar(t) => {
                        t.coerce(&raw).map_err(|_| MapError::NoMatch { map: map.name.clone(), position: start })?
                    }
                    _ => raw,
                };
                Ok((v, src.position() - start))
            }
        }
    }

    /// Whether `v` can be written by map `id`.
    pub fn can_encode(&self, id: usize, v: &Value) -> bool {
        let map = &self.maps[id];
        map.direct_entry(v).is_some() || map.entries.iter().any(|e| self.escape_fits(&e.payload, v))
    }

    fn escape_fits(&self, payload: &Payload, v: &Value) -> bool {
        let Payload::Escape(ext) = payload else { return false };
        match ext.size {
            ExtSize::Bits(w) if ext.ty.is_float() => v.is_scalar() && (w == 32 || w == 64),
            ExtSize::Bits(w) => {
                let Some(x) = v.as_i128() else { return false };
                if ext.ty.reads_signed() {
                    let half = 1i128 << (w - 1);
                    (-half..half).contains(&x)
                } else {
                    x >= 0 && x < (1i128 << w)
                }
            }
            ExtSize::Map(inner) => self.can_encode(inner, v),
        }
    }

    /// Writes `v` through map `id`. Direct entries take precedence; otherwise
    /// the first declared escape able to represent `v` is used.
    pub fn encode_symbol<W: BitSink + ?Sized>(&self, id: usize, v: &Value, sink: &mut W) -> Result<u64, MapError> {
        let map = &self.maps[id];
        let start = sink.position();
        if let Some(i) = map.direct_entry(v) {
            let cw = map.entries[i].codeword;
            sink.write_uint(cw.len(), cw.value(), ByteOrder::Big)?;
            return Ok(cw.len() as u64);
        }
        let entry = map
            .entries
            .iter()
            .find(|e| self.escape_fits(&e.payload, v))
            .ok_or_else(|| MapError::Unencodable { map: map.name.clone(), value: v.to_string() })?;
        let Payload::Escape(ext) = &entry.payload else { unreachable!() };
        sink.write_uint(entry.codeword.len(), entry.codeword.value(), ByteOrder::Big)?;
        match ext.size {
            ExtSize::Bits(w) if ext.ty.is_float() => sink.write_float(w, v.as_f64().unwrap_or(0.0), ByteOrder::Big)?,
            ExtSize::Bits(w) if ext.ty.reads_signed() => {
                sink.write_int(w, v.as_i128().unwrap_or(0) as i64, ByteOrder::Big)?
            }
            ExtSize::Bits(w) => sink.write_uint(w, v.as_i128().unwrap_or(0) as u64, ByteOrder::Big)?,
            ExtSize::Map(inner) => {
                self.encode_symbol(inner, v, sink)?;
            }
        }
        Ok(sink.position() - start)
    }
}
