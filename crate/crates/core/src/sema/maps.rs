//! Map declarations: output types, entry values, escapes and compilation.

use std::collections::HashSet;

use crate::diag::Code;
use crate::frontend::ast::{ItemKind, MapDecl, MapValue, TypeName};
use crate::frontend::Ast;
use crate::value::ScalarType;
use crate::vlcmap::{CompileError, CompiledMap, DagError, ExtSize, Extension, MapEntry, MapSet, OutputType, Payload};

use super::check::{scalar_type, Analyzer, BodyCx};
use super::{MemberKind, VarType, MAX_FIELD_BITS};

impl Analyzer<'_> {
    pub(super) fn compile_maps(&mut self, ast: &Ast) -> MapSet {
        // first declaration of each name, matching the ids assigned at registration
        let mut seen = HashSet::new();
        let decls: Vec<&MapDecl> = ast
            .items
            .iter()
            .filter_map(|i| match &i.kind {
                ItemKind::Map(m) if seen.insert(m.name.as_str()) => Some(m),
                _ => None,
            })
            .collect();

        self.map_outputs = decls.iter().map(|m| self.map_output(m)).collect();
        let cyclic = self.map_cycles(&decls);

        let mut set = MapSet::new();
        for (i, m) in decls.iter().enumerate() {
            if cyclic[i] {
                continue;
            }
            let Some(out) = self.map_outputs[i].clone() else { continue };
            let n = self.diags.len();
            let entries = self.map_entries(m, &out);
            if self.diags.len() > n {
                continue;
            }
            match CompiledMap::new(m.name.clone(), out, entries, self.opts.step) {
                Ok(c) => {
                    set.push(c);
                }
                Err(CompileError::NotPrefixFree(v)) => {
                    let loc = m.entries[v.second.0].loc;
                    self.err(
                        Code::PrefixViolation,
                        loc,
                        format!(
                            "map {} is not uniquely decodable: codeword {} is a prefix of {}",
                            m.name, v.first.1, v.second.1
                        ),
                    );
                }
                Err(CompileError::Dag(DagError::Empty)) => {
                    self.err(Code::MapArity, m.loc, format!("map {} has no entries", m.name))
                }
                Err(CompileError::Dag(e)) => self.err(Code::MapTooWide, m.loc, format!("map {}: {e}", m.name)),
            }
        }
        set
    }

    fn map_output(&mut self, m: &MapDecl) -> Option<OutputType> {
        let cx = BodyCx::global();
        match &m.output {
            TypeName::Class(n) => {
                let Some(&k) = self.class_ids.get(n) else {
                    self.err(Code::UnknownType, m.loc, format!("unknown type {n}"));
                    return None;
                };
                if m.output_len.is_some() {
                    self.err(Code::MapTypeMismatch, m.loc, "map output arrays need a built-in element type");
                    return None;
                }
                if self.classes[k].parsable || !self.classes[k].params.is_empty() {
                    self.err(
                        Code::MapTypeMismatch,
                        m.loc,
                        format!("map output class {n} must be non-parsable and take no parameters"),
                    );
                    return None;
                }
                let mut fields = Vec::new();
                for c in self.lineage(k) {
                    for mem in &self.classes[c].members {
                        if mem.kind != MemberKind::Plain {
                            continue;
                        }
                        match (mem.ty, mem.dims) {
                            (VarType::Scalar(t), 0) => fields.push((mem.name.clone(), t)),
                            _ => {
                                let msg = format!("field {} of map output class {n} is not a scalar", mem.name);
                                self.err(Code::MapTypeMismatch, m.loc, msg);
                                return None;
                            }
                        }
                    }
                }
                Some(OutputType::Class { name: n.clone(), fields })
            }
            t => {
                let st = scalar_type(t)?;
                match &m.output_len {
                    None => Some(OutputType::Scalar(st)),
                    Some(e) => {
                        let v = self.require_const(e, &cx, Code::NonConstant, "map output array size")?;
                        match v.as_index() {
                            Some(n) if n > 0 => Some(OutputType::Array { elem: st, len: n as usize }),
                            _ => {
                                self.err(Code::MapArity, e.loc, format!("map output array size {v} must be positive"));
                                None
                            }
                        }
                    }
                }
            }
        }
    }

    /// Marks maps that reach themselves through escape extensions.
    fn map_cycles(&mut self, decls: &[&MapDecl]) -> Vec<bool> {
        let edges: Vec<Vec<usize>> = decls
            .iter()
            .map(|m| {
                m.entries
                    .iter()
                    .filter_map(|e| match &e.value {
                        MapValue::Extension { size, .. } => size.as_name().and_then(|n| self.map_ids.get(n).copied()),
                        _ => None,
                    })
                    .collect()
            })
            .collect();
        let mut cyclic = vec![false; decls.len()];
        for start in 0..decls.len() {
            let mut path = vec![start];
            if let Some(cycle) = find_cycle(start, &edges, &mut path) {
                cyclic[start] = true;
                let names: Vec<&str> = cycle.iter().map(|&i| decls[i].name.as_str()).collect();
                self.err(Code::MapCycle, decls[start].loc, format!("map escape cycle: {}", names.join(" -> ")));
            }
        }
        cyclic
    }

    fn map_entries(&mut self, m: &MapDecl, out: &OutputType) -> Vec<MapEntry> {
        let cx = BodyCx::global();
        let mut entries = Vec::new();
        for e in &m.entries {
            let payload = match &e.value {
                MapValue::Expr(x) => {
                    let Some(v) = self.require_const(x, &cx, Code::NonConstant, "map value") else { continue };
                    match out.build(&[v]) {
                        Ok(v) => Payload::Direct(v),
                        Err(msg) => {
                            self.err(Code::MapArity, e.loc, format!("map {}: {msg}", m.name));
                            continue;
                        }
                    }
                }
                MapValue::List(xs) => {
                    let vals: Option<Vec<_>> =
                        xs.iter().map(|x| self.require_const(x, &cx, Code::NonConstant, "map value")).collect();
                    let Some(vals) = vals else { continue };
                    match out.build(&vals) {
                        Ok(v) => Payload::Direct(v),
                        Err(msg) => {
                            self.err(Code::MapArity, e.loc, format!("map {}: {msg}", m.name));
                            continue;
                        }
                    }
                }
                MapValue::Extension { ty, size } => {
                    let OutputType::Scalar(ot) = out else {
                        self.err(Code::MapEscape, e.loc, format!("map {}: escapes need a scalar output type", m.name));
                        continue;
                    };
                    let Some(et) = scalar_type(ty) else {
                        self.err(Code::MapEscape, e.loc, "escape type must be a built-in type");
                        continue;
                    };
                    if et.is_float() != ot.is_float() {
                        self.err(
                            Code::MapTypeMismatch,
                            e.loc,
                            format!("escape type {} does not match map {}", et.keyword(), m.name),
                        );
                        continue;
                    }
                    let nested = size.as_name().and_then(|n| self.map_ids.get(n).copied());
                    let size = match nested {
                        Some(k) => {
                            let matches = matches!(self.map_outputs.get(k), Some(Some(OutputType::Scalar(t))) if t.is_float() == et.is_float());
                            if !matches {
                                self.err(Code::MapTypeMismatch, e.loc, "nested map must produce the escape type");
                                continue;
                            }
                            ExtSize::Map(k)
                        }
                        None => {
                            let Some(v) = self.require_const(size, &cx, Code::NonConstant, "escape size") else {
                                continue;
                            };
                            match v.as_i128() {
                                Some(n) if (1..=MAX_FIELD_BITS as i128).contains(&n) => {
                                    let n = n as u32;
                                    let want = match et {
                                        ScalarType::Float => Some(32),
                                        ScalarType::Double => Some(64),
                                        _ => None,
                                    };
                                    if want.is_some_and(|w| w != n) {
                                        self.err(
                                            Code::FloatSize,
                                            size.loc,
                                            format!("{} escape must be {} bits", et.keyword(), want.unwrap()),
                                        );
                                        continue;
                                    }
                                    ExtSize::Bits(n)
                                }
                                _ => {
                                    self.err(
                                        Code::ParseSizeRange,
                                        size.loc,
                                        format!("escape size {v} outside 1..={MAX_FIELD_BITS}"),
                                    );
                                    continue;
                                }
                            }
                        }
                    };
                    Payload::Escape(Extension { ty: et, size })
                }
            };
            entries.push(MapEntry { codeword: e.codeword, payload });
        }
        entries
    }
}

fn find_cycle(node: usize, edges: &[Vec<usize>], path: &mut Vec<usize>) -> Option<Vec<usize>> {
    for &next in &edges[node] {
        if next == path[0] {
            let mut c = path.clone();
            c.push(next);
            return Some(c);
        }
        if path.contains(&next) {
            continue;
        }
        path.push(next);
        if let Some(c) = find_cycle(next, edges, path) {
            return Some(c);
        }
        path.pop();
    }
    None
}
