//! The interpreter shared by get and put.

use std::collections::HashMap;

use serde_json::Value as Json;

use crate::bitio::{mask, sign_extend, swap_bytes, BitError, BitSink, BitSource, ByteOrder};
use crate::frontend::ast::{Expr, ExprKind};
use crate::sema::ir::{Align, Decl, InitSpec, Label, ParseSize, Stmt, StmtKind};
use crate::sema::{ClassId, IdInfo, SyntaxSpec, VarType};
use crate::value::{
    binary, unary, ArrayValue, BinOp, Element, Field, Instance, ObjectValue, OpError, ScalarType, Value,
};
use crate::vlcmap::MapError;

use super::doc::{doc_map_value, doc_scalar, DocRef, JsonMap};
use super::trace::{TraceEvent, TraceKind};
use super::{EngineError, ErrorKind, MismatchPolicy, Report, ReportKind, SessionOptions};

type Res<T> = Result<T, EngineError>;

pub(crate) enum Io<'a> {
    Get(&'a mut dyn BitSource),
    Put(&'a mut dyn BitSink),
}

impl Io<'_> {
    fn position(&self) -> u64 {
        match self {
            Io::Get(s) => s.position(),
            Io::Put(s) => s.position(),
        }
    }

    fn align(&mut self, n: u32) -> Result<u32, BitError> {
        match self {
            Io::Get(s) => s.align(n),
            Io::Put(s) => s.align(n),
        }
    }
}

struct Slot {
    value: Value,
    ty: VarType,
}

/// One object under construction.
struct Frame<'a> {
    class: ClassId,
    obj: ObjectValue,
    scopes: Vec<HashMap<&'a str, Slot>>,
    doc: Option<&'a JsonMap>,
    /// Executions so far of each parsable declaration, indexing `_repeat`.
    uses: HashMap<&'a str, usize>,
    trace: bool,
}

enum Flow {
    Normal,
    Break,
    Continue,
}

#[derive(Clone, Copy)]
enum InitRef<'a> {
    Spec(&'a InitSpec),
    Byte(u8),
}

impl<'a> InitRef<'a> {
    fn index(self, i: usize) -> Option<InitRef<'a>> {
        match self {
            InitRef::Spec(InitSpec::List(v)) => v.get(i).map(InitRef::Spec),
            InitRef::Spec(InitSpec::Str(s)) => Some(InitRef::Byte(s.get(i).copied().unwrap_or(0))),
            // a scalar initializer applies to every element
            other => Some(other),
        }
    }
}

#[derive(Clone, Copy)]
enum Size {
    Zero,
    Bits(u32),
    Map(usize),
}

struct Piece {
    value: Value,
    offset: u64,
    len: u64,
    consumed: u64,
}

enum Step<'a> {
    Idx(usize),
    Field(&'a str),
}

pub(crate) struct Exec<'a> {
    spec: &'a SyntaxSpec,
    opts: &'a SessionOptions,
    io: Io<'a>,
    hook: &'a mut dyn FnMut(&Report),
    frames: Vec<Frame<'a>>,
    events: Vec<TraceEvent>,
    reports: Vec<Report>,
}

impl<'a> Exec<'a> {
    pub fn new(spec: &'a SyntaxSpec, opts: &'a SessionOptions, io: Io<'a>, hook: &'a mut dyn FnMut(&Report)) -> Self {
        Exec { spec, opts, io, hook, frames: Vec::new(), events: Vec::new(), reports: Vec::new() }
    }

    pub fn finish(self) -> (Vec<TraceEvent>, Vec<Report>) {
        (self.events, self.reports)
    }

    pub fn entry(&mut self, class: &str, args: Vec<Value>, doc: Option<&'a Json>) -> Res<ObjectValue> {
        let spec = self.spec;
        let Some(k) = spec.class_id(class) else {
            return Err(self.err(ErrorKind::Usage, format!("unknown class {class}")));
        };
        if !spec.classes[k].parsable {
            return Err(self.err(ErrorKind::Usage, format!("class {class} is not parsable")));
        }
        let doc = doc.map(DocRef::Json);
        if doc.is_some_and(|d| d.object().is_none()) {
            return Err(self.err(ErrorKind::BadDocument, "value document must be a JSON object"));
        }
        let start = self.pos();
        let mut pad = 0;
        if let Some(a) = spec.classes[k].align {
            pad = self.io.align(a).map_err(|e| EngineError::bit(e, start))? as u64;
            if pad > 0 && self.opts.trace {
                let mut ev = TraceEvent::new(TraceKind::Align, "", 0);
                ev.len = pad;
                self.events.push(ev);
            }
        }
        let concrete = self.choose_class(k, doc)?;
        let mut obj = self.run_object(concrete, args, doc)?;
        obj.start = start;
        obj.bits += pad;
        obj.align_bits += pad;
        Ok(obj)
    }

    fn pos(&self) -> u64 {
        self.io.position()
    }

    fn put(&self) -> bool {
        matches!(self.io, Io::Put(_))
    }

    fn frame(&self) -> &Frame<'a> {
        self.frames.last().expect("no object under construction")
    }

    fn frame_mut(&mut self) -> &mut Frame<'a> {
        self.frames.last_mut().expect("no object under construction")
    }

    fn tracing(&self) -> bool {
        self.frames.last().map_or(self.opts.trace, |f| f.trace)
    }

    fn depth(&self) -> usize {
        self.frames.len().saturating_sub(1)
    }

    fn err(&self, kind: ErrorKind, msg: impl Into<String>) -> EngineError {
        EngineError::new(kind, self.pos(), msg)
    }

    fn op_err(&self, e: OpError) -> EngineError {
        self.err(ErrorKind::Runtime, e.to_string())
    }

    fn report(&mut self, kind: ReportKind, position: u64, message: String) {
        let r = Report { kind, position, message };
        (self.hook)(&r);
        self.reports.push(r);
    }

    fn mismatch(&mut self, label: &str, expected: String, got: &Value, offset: u64) -> Res<()> {
        let msg = format!("{label} expected {expected} got {got}");
        self.report(ReportKind::Mismatch, offset, msg.clone());
        if self.tracing() {
            let mut ev = TraceEvent::new(TraceKind::Mismatch, label, self.depth());
            ev.offset = offset;
            ev.value = got.to_string();
            ev.expected = expected;
            self.events.push(ev);
        }
        match self.opts.on_mismatch {
            MismatchPolicy::Abort => {
                Err(EngineError::new(ErrorKind::Mismatch, offset, format!("expected value mismatch: {msg}")))
            }
            MismatchPolicy::Warn => Ok(()),
        }
    }

    fn field_event(&mut self, label: &str, p: &Piece) {
        if self.tracing() {
            let mut ev = TraceEvent::new(TraceKind::Field, label, self.depth());
            ev.offset = p.offset;
            ev.len = p.len;
            ev.value = p.value.to_string();
            self.events.push(ev);
        }
    }

    fn align_to(&mut self, n: u32) -> Res<()> {
        let pos = self.pos();
        let k = self.io.align(n).map_err(|e| EngineError::bit(e, pos))?;
        if k > 0 {
            self.frame_mut().obj.align_bits += k as u64;
            if self.tracing() {
                let mut ev = TraceEvent::new(TraceKind::Align, "", self.depth());
                ev.offset = pos;
                ev.len = k as u64;
                self.events.push(ev);
            }
        }
        Ok(())
    }

    fn eval_align(&mut self, a: &'a Align) -> Res<u32> {
        match a {
            Align::Fixed(n) => Ok(*n),
            Align::Dynamic(e) => {
                let v = self.eval(e)?;
                match v.as_index() {
                    Some(n) if n > 0 && n <= u32::MAX as u64 => Ok(n as u32),
                    _ => Err(self.err(ErrorKind::Runtime, format!("alignment {v} must be positive"))),
                }
            }
        }
    }

    /// Concrete class for a `declared` object: ID dispatch when parsing,
    /// the document's `_class` when generating.
    fn choose_class(&mut self, declared: ClassId, doc: Option<DocRef<'a>>) -> Res<ClassId> {
        let spec = self.spec;
        let info = &spec.classes[declared];
        let pos = self.pos();
        let chosen = if info.family.is_none() {
            declared
        } else {
            match &self.io {
                Io::Get(src) => {
                    let id = spec.effective_id(declared).expect("family without ID");
                    let v = peek_id(&**src, id).map_err(|e| EngineError::bit(e, pos))?;
                    match v.and_then(|v| spec.class_for_id(declared, v)) {
                        Some(c) => c,
                        None => {
                            let shown = v.map_or_else(|| "at end of stream".to_string(), |v| v.to_string());
                            let msg = format!("no class derived from {} has ID {shown}", info.name);
                            self.report(ReportKind::NoIdMatch, pos, msg.clone());
                            return Err(EngineError::new(ErrorKind::NoIdMatch, pos, msg));
                        }
                    }
                }
                Io::Put(_) => match doc.and_then(|d| d.class_name()) {
                    None => declared,
                    Some(n) => {
                        let Some(c) = spec.class_id(n) else {
                            return Err(self.err(ErrorKind::BadDocument, format!("unknown class {n}")));
                        };
                        if !spec.derives_from(c, declared) {
                            let msg = format!("class {n} does not derive from {}", info.name);
                            return Err(self.err(ErrorKind::BadDocument, msg));
                        }
                        if spec.classes[c].id.is_none() {
                            let msg = format!("class {n} has no ID of its own and cannot be selected");
                            return Err(self.err(ErrorKind::BadDocument, msg));
                        }
                        c
                    }
                },
            }
        };
        if spec.classes[chosen].is_abstract {
            let msg = format!("abstract class {} cannot be instantiated", spec.classes[chosen].name);
            return Err(self.err(ErrorKind::Runtime, msg));
        }
        if info.family.is_some() && self.tracing() {
            self.events.push(TraceEvent::new(TraceKind::IdDispatch, spec.classes[chosen].name.clone(), self.depth()));
        }
        Ok(chosen)
    }

    fn run_object(&mut self, class: ClassId, args: Vec<Value>, doc: Option<DocRef<'a>>) -> Res<ObjectValue> {
        let spec = self.spec;
        let info = &spec.classes[class];
        if info.parsable {
            if self.put() && !info.flags.put {
                return Err(
                    self.err(ErrorKind::Usage, format!("class {} does not support generation (noput)", info.name))
                );
            }
            if !self.put() && !info.flags.get {
                return Err(self.err(ErrorKind::Usage, format!("class {} does not support parsing (noget)", info.name)));
            }
        }
        if args.len() != info.params.len() {
            let msg = format!("class {} takes {} arguments, got {}", info.name, info.params.len(), args.len());
            return Err(self.err(ErrorKind::Usage, msg));
        }
        let doc_map = doc.and_then(DocRef::object);
        if self.put() && info.parsable && doc.is_some() && doc_map.is_none() {
            return Err(self.err(ErrorKind::BadDocument, format!("expected an object for class {}", info.name)));
        }
        let trace = info.parsable && info.flags.trace && self.tracing();
        let start = self.pos();
        if trace && !self.frames.is_empty() {
            let mut ev = TraceEvent::new(TraceKind::Enter, info.name.clone(), self.depth());
            ev.offset = start;
            self.events.push(ev);
        }
        let mut obj = ObjectValue::new(info.name.clone());
        obj.start = start;
        for (p, a) in info.params.iter().zip(args) {
            let v = match p.ty {
                VarType::Scalar(t) if p.dims == 0 => t.coerce(&a).map_err(|e| self.op_err(e))?,
                _ => a,
            };
            obj.set_member(&p.name, v, false, true);
        }
        self.frames.push(Frame { class, obj, scopes: Vec::new(), doc: doc_map, uses: HashMap::new(), trace });
        if let Some(id) = spec.effective_id(class) {
            self.id_field(id)?;
        }
        for c in spec.lineage(class) {
            for s in &spec.classes[c].body {
                self.exec(s)?;
            }
        }
        let mut frame = self.frames.pop().expect("frame pushed above");
        frame.obj.bits = self.pos() - start;
        if trace && !self.frames.is_empty() {
            let mut ev = TraceEvent::new(TraceKind::Leave, info.name.clone(), self.depth());
            ev.offset = start;
            ev.len = frame.obj.bits;
            self.events.push(ev);
        }
        Ok(frame.obj)
    }

    fn id_field(&mut self, id: &'a IdInfo) -> Res<()> {
        if let Some(a) = id.align {
            self.align_to(a)?;
        }
        let offset = self.pos();
        let range = if id.lo == id.hi { id.lo.to_string() } else { format!("{} .. {}", id.lo, id.hi) };
        let value = match &mut self.io {
            Io::Get(src) => {
                let raw = src.read_uint(id.size, id.order).map_err(|e| EngineError::bit(e, offset))?;
                from_bits(id.ty, raw, id.size)
            }
            Io::Put(_) => match self.doc_field(&id.name, true) {
                Some(d) => doc_scalar(d, id.ty)
                    .map_err(|m| EngineError::new(ErrorKind::BadDocument, offset, format!("field {}: {m}", id.name)))?,
                None => id.ty.coerce(&int_value(id.lo)).map_err(|e| self.op_err(e))?,
            },
        };
        if !value.as_i128().is_some_and(|v| id.contains(v)) {
            self.mismatch(&id.name, range, &value, offset)?;
        }
        if let Io::Put(sink) = &mut self.io {
            let raw = to_bits(id.ty, &value, id.size)
                .map_err(|m| EngineError::new(ErrorKind::Unrepresentable, offset, format!("{}: {m}", id.name)))?;
            sink.write_uint(id.size, raw, id.order).map_err(|e| EngineError::bit(e, offset))?;
        }
        let n = id.size as u64;
        let p = Piece { value, offset, len: n, consumed: n };
        self.field_event(&id.name, &p);
        self.store(&id.name, p);
        Ok(())
    }

    /// Document node for the next execution of a parsable declaration.
    fn doc_field(&mut self, name: &'a str, advance: bool) -> Option<DocRef<'a>> {
        let f = self.frames.last_mut()?;
        let doc = f.doc?;
        let count = f.uses.entry(name).or_insert(0);
        let k = *count;
        if advance {
            *count += 1;
        }
        let v = doc.get(name)?;
        if let Some(rep) = v.as_object().and_then(|m| m.get("_repeat")) {
            return rep.as_array()?.get(k).filter(|x| !x.is_null()).map(DocRef::Json);
        }
        (!v.is_null()).then_some(DocRef::Json(v))
    }

    fn push_scope(&mut self) {
        self.frame_mut().scopes.push(HashMap::new());
    }

    fn pop_scope(&mut self) {
        self.frame_mut().scopes.pop();
    }

    fn scoped(&mut self, s: &'a Stmt) -> Res<Flow> {
        self.push_scope();
        let f = self.exec(s);
        self.pop_scope();
        f
    }

    fn tick(&self, n: &mut u64) -> Res<()> {
        *n += 1;
        if *n > self.opts.max_loop_iterations {
            let msg = format!("loop exceeded {} iterations", self.opts.max_loop_iterations);
            return Err(self.err(ErrorKind::LoopLimit, msg));
        }
        Ok(())
    }

    fn exec(&mut self, s: &'a Stmt) -> Res<Flow> {
        match &s.kind {
            StmtKind::Decl(d) => {
                self.decl(d)?;
                Ok(Flow::Normal)
            }
            StmtKind::If { cond, then, els } => {
                if self.truthy(cond)? {
                    self.scoped(then)
                } else if let Some(e) = els {
                    self.scoped(e)
                } else {
                    Ok(Flow::Normal)
                }
            }
            StmtKind::Switch { scrutinee, arms } => {
                let v = self.eval(scrutinee)?.as_i128();
                let start = arms
                    .iter()
                    .position(|a| a.labels.iter().any(|l| matches!(l, Label::Case(c) if Some(*c) == v)))
                    .or_else(|| arms.iter().position(|a| a.labels.contains(&Label::Default)));
                let Some(start) = start else { return Ok(Flow::Normal) };
                self.push_scope();
                let mut flow = Flow::Normal;
                'arms: for arm in &arms[start..] {
                    for st in &arm.body {
                        match self.exec(st)? {
                            Flow::Normal => {}
                            Flow::Break => break 'arms,
                            Flow::Continue => {
                                flow = Flow::Continue;
                                break 'arms;
                            }
                        }
                    }
                }
                self.pop_scope();
                Ok(flow)
            }
            StmtKind::For { init, cond, step, body } => {
                for e in init {
                    self.eval(e)?;
                }
                let mut n = 0;
                loop {
                    if let Some(c) = cond {
                        if !self.truthy(c)? {
                            break;
                        }
                    }
                    self.tick(&mut n)?;
                    if let Flow::Break = self.scoped(body)? {
                        break;
                    }
                    for e in step {
                        self.eval(e)?;
                    }
                }
                Ok(Flow::Normal)
            }
            StmtKind::While { cond, body } => {
                let mut n = 0;
                while self.truthy(cond)? {
                    self.tick(&mut n)?;
                    if let Flow::Break = self.scoped(body)? {
                        break;
                    }
                }
                Ok(Flow::Normal)
            }
            StmtKind::DoWhile { body, cond } => {
                let mut n = 0;
                loop {
                    self.tick(&mut n)?;
                    if let Flow::Break = self.scoped(body)? {
                        break;
                    }
                    if !self.truthy(cond)? {
                        break;
                    }
                }
                Ok(Flow::Normal)
            }
            StmtKind::Expr(e) => {
                self.eval(e)?;
                Ok(Flow::Normal)
            }
            StmtKind::Block(stmts) => {
                self.push_scope();
                for st in stmts {
                    match self.exec(st) {
                        Ok(Flow::Normal) => {}
                        other => {
                            self.pop_scope();
                            return other;
                        }
                    }
                }
                self.pop_scope();
                Ok(Flow::Normal)
            }
            StmtKind::Break => Ok(Flow::Break),
            StmtKind::Continue => Ok(Flow::Continue),
            StmtKind::Empty => Ok(Flow::Normal),
        }
    }

    fn decl(&mut self, d: &'a Decl) -> Res<()> {
        if !d.parsable {
            return self.plain_decl(d);
        }
        let init = d.init.as_ref().map(InitRef::Spec);
        if d.dims.is_empty() {
            let doc = if self.put() { self.doc_field(&d.name, true) } else { None };
            let p = self.element(d, &d.name, init, doc, true)?;
            self.store(&d.name, p);
            return Ok(());
        }
        let sizes = self.dims(d)?;
        let partial = d.dims.iter().take_while(|x| x.partial).count();
        let (idx, full) = sizes.split_at(partial);
        let mut doc = if self.put() { self.doc_field(&d.name, partial == 0) } else { None };
        let mut init = init;
        let mut label = d.name.clone();
        for &i in idx {
            doc = doc.and_then(|x| x.index(i as usize));
            init = init.and_then(|x| x.index(i as usize));
            label.push_str(&format!("[{i}]"));
        }
        let p = if full.is_empty() {
            self.element(d, &label, init, doc, true)?
        } else {
            let p = self.array(d, &label, full, init, doc)?;
            if matches!(d.ty, VarType::Scalar(_)) {
                self.field_event(&label, &p);
            }
            p
        };
        if partial == 0 {
            self.store(&d.name, p);
            Ok(())
        } else {
            self.store_partial(&d.name, idx, p)
        }
    }

    /// Evaluates array sizes and partial indices, in order, once.
    fn dims(&mut self, d: &'a Decl) -> Res<Vec<u64>> {
        let mut out = Vec::with_capacity(d.dims.len());
        for dim in &d.dims {
            let v = self.eval(&dim.size)?;
            let Some(n) = v.as_index() else {
                return Err(self.err(ErrorKind::Runtime, format!("array size {v} of {} is not a valid size", d.name)));
            };
            if dim.partial && n >= d.array_cap {
                let msg = format!("index {n} of {} exceeds the array limit {}", d.name, d.array_cap);
                return Err(self.err(ErrorKind::ArrayCap, msg));
            }
            if !dim.partial && n > d.array_cap {
                let msg = format!("array {} has {n} elements, more than the limit {}", d.name, d.array_cap);
                return Err(self.err(ErrorKind::ArrayCap, msg));
            }
            out.push(n);
        }
        Ok(out)
    }

    fn array(
        &mut self,
        d: &'a Decl,
        label: &str,
        dims: &[u64],
        init: Option<InitRef<'a>>,
        doc: Option<DocRef<'a>>,
    ) -> Res<Piece> {
        let n = dims[0] as usize;
        let mut a = ArrayValue {
            elems: Vec::with_capacity(n),
            sparse: false,
            char_elems: dims.len() == 1 && matches!(d.ty, VarType::Scalar(ScalarType::Char { .. })),
        };
        let (mut len, mut consumed, mut offset) = (0, 0, None);
        for i in 0..n {
            let init_i = init.and_then(|x| x.index(i));
            let doc_i = doc.and_then(|x| x.index(i));
            let label_i = format!("{label}[{i}]");
            let p = if dims.len() == 1 {
                self.element(d, &label_i, init_i, doc_i, false)?
            } else {
                self.array(d, &label_i, &dims[1..], init_i, doc_i)?
            };
            offset.get_or_insert(p.offset);
            len += p.len;
            consumed += p.consumed;
            a.elems.push(Some(Element { value: p.value, len: p.len }));
        }
        let offset = offset.unwrap_or_else(|| self.pos());
        Ok(Piece { value: Value::Array(a), offset, len, consumed })
    }

    fn element(
        &mut self,
        d: &'a Decl,
        label: &str,
        init: Option<InitRef<'a>>,
        doc: Option<DocRef<'a>>,
        emit: bool,
    ) -> Res<Piece> {
        let map_coded = matches!(d.parse.as_ref().map(|p| &p.size), Some(ParseSize::Map(_)));
        match d.ty {
            VarType::Class(k) if !map_coded => self.object_element(d, k, doc),
            _ => self.scalar_element(d, label, init, doc, emit),
        }
    }

    fn object_element(&mut self, d: &'a Decl, k: ClassId, doc: Option<DocRef<'a>>) -> Res<Piece> {
        match &d.align {
            Some(a) => {
                let n = self.eval_align(a)?;
                self.align_to(n)?;
            }
            None => {
                if let Some(n) = self.spec.classes[k].align {
                    self.align_to(n)?;
                }
            }
        }
        let mut args = Vec::with_capacity(d.args.len());
        for e in &d.args {
            args.push(self.eval(e)?);
        }
        let c = self.choose_class(k, doc)?;
        let obj = self.run_object(c, args, doc)?;
        let bits = obj.bits;
        Ok(Piece { offset: obj.start, len: bits, consumed: bits, value: Value::Object(Box::new(obj)) })
    }

    fn scalar_element(
        &mut self,
        d: &'a Decl,
        label: &str,
        init: Option<InitRef<'a>>,
        doc: Option<DocRef<'a>>,
        emit: bool,
    ) -> Res<Piece> {
        if let Some(a) = &d.align {
            let n = self.eval_align(a)?;
            self.align_to(n)?;
        }
        let parse = d.parse.as_ref().expect("parsable scalar without parse size");
        // parse size first, then the initializer
        let size = match &parse.size {
            ParseSize::Zero | ParseSize::Fixed(0) => Size::Zero,
            ParseSize::Fixed(n) => Size::Bits(*n),
            ParseSize::Dynamic(e) => {
                let v = self.eval(e)?;
                match v.as_index() {
                    Some(0) => Size::Zero,
                    Some(n) if n <= 64 => Size::Bits(n as u32),
                    _ => return Err(self.err(ErrorKind::Runtime, format!("parse size {v} of {label} outside 0..=64"))),
                }
            }
            ParseSize::Map(m) => Size::Map(*m),
        };
        let ty = match d.ty {
            VarType::Scalar(t) => Some(t),
            VarType::Class(_) => None,
        };
        let expected = match init {
            Some(i) => Some(self.eval_init(i, ty, label)?),
            None => None,
        };
        let offset = self.pos();
        let (value, len, consumed) = if self.put() {
            self.put_scalar(d, label, size, parse.lookahead, expected.as_ref(), doc)?
        } else {
            self.get_scalar(d, label, size, parse.lookahead, expected.as_ref())?
        };
        let p = Piece { value, offset, len, consumed };
        if emit {
            self.field_event(label, &p);
        }
        Ok(p)
    }

    fn get_scalar(
        &mut self,
        d: &'a Decl,
        label: &str,
        size: Size,
        lookahead: bool,
        expected: Option<&Value>,
    ) -> Res<(Value, u64, u64)> {
        let pos = self.pos();
        let t = match d.ty {
            VarType::Scalar(t) => t,
            VarType::Class(_) => ScalarType::UInt,
        };
        let Io::Get(src) = &mut self.io else { unreachable!("get in put mode") };
        let (v, len, consumed) = match size {
            Size::Zero => return Ok((expected.cloned().unwrap_or_else(|| t.default_value()), 0, 0)),
            Size::Bits(n) if lookahead => {
                let p = src.peek_uint(n, d.order).map_err(|e| EngineError::bit(e, pos))?;
                (from_bits(t, p.value, n), n as u64, 0)
            }
            Size::Bits(n) => {
                let raw = src.read_uint(n, d.order).map_err(|e| EngineError::bit(e, pos))?;
                (from_bits(t, raw, n), n as u64, n as u64)
            }
            Size::Map(m) => match self.spec.maps.decode_symbol(m, &mut **src) {
                Ok((v, bits)) => (v, bits, bits),
                Err(MapError::NoMatch { map, position }) => {
                    let msg = format!("VLC lookup failed in map {map}");
                    self.report(ReportKind::VlcFailure, position, msg.clone());
                    return Err(EngineError::new(ErrorKind::Vlc, position, msg));
                }
                Err(MapError::Bit(e)) => return Err(EngineError::bit(e, pos)),
                Err(e) => return Err(EngineError::new(ErrorKind::Vlc, pos, e.to_string())),
            },
        };
        if let Some(e) = expected {
            if !v.loosely_equals(e) {
                self.mismatch(label, e.to_string(), &v, pos)?;
            }
        }
        Ok((v, len, consumed))
    }

    fn put_scalar(
        &mut self,
        d: &'a Decl,
        label: &str,
        size: Size,
        lookahead: bool,
        expected: Option<&Value>,
        doc: Option<DocRef<'a>>,
    ) -> Res<(Value, u64, u64)> {
        let pos = self.pos();
        let spec = self.spec;
        let t = match d.ty {
            VarType::Scalar(t) => t,
            VarType::Class(_) => ScalarType::UInt,
        };
        let supplied = match doc {
            None => None,
            Some(dr) => {
                let v = match size {
                    Size::Map(m) => doc_map_value(dr, &spec.maps.get(m).output),
                    _ => doc_scalar(dr, t),
                };
                Some(v.map_err(|m| EngineError::new(ErrorKind::BadDocument, pos, format!("field {label}: {m}")))?)
            }
        };
        let value = match (supplied, expected) {
            (Some(v), Some(e)) => {
                if !v.loosely_equals(e) {
                    self.mismatch(label, e.to_string(), &v, pos)?;
                }
                v
            }
            (Some(v), None) => v,
            (None, Some(e)) => e.clone(),
            (None, None) if lookahead || matches!(size, Size::Zero) => t.default_value(),
            (None, None) => {
                return Err(EngineError::new(ErrorKind::MissingField, pos, format!("missing field {label}")))
            }
        };
        let Io::Put(sink) = &mut self.io else { unreachable!("put in get mode") };
        match size {
            Size::Zero => Ok((value, 0, 0)),
            Size::Bits(n) if lookahead => Ok((value, n as u64, 0)),
            Size::Bits(n) => {
                let raw = to_bits(t, &value, n)
                    .map_err(|m| EngineError::new(ErrorKind::Unrepresentable, pos, format!("{label}: {m}")))?;
                sink.write_uint(n, raw, d.order).map_err(|e| EngineError::bit(e, pos))?;
                Ok((value, n as u64, n as u64))
            }
            Size::Map(m) => match spec.maps.encode_symbol(m, &value, &mut **sink) {
                Ok(bits) => Ok((value, bits, bits)),
                Err(MapError::Unencodable { map, value }) => {
                    let msg = format!("value {value} cannot be encoded by map {map}");
                    self.report(ReportKind::VlcFailure, pos, msg.clone());
                    Err(EngineError::new(ErrorKind::Vlc, pos, msg))
                }
                Err(MapError::Bit(e)) => Err(EngineError::bit(e, pos)),
                Err(e) => Err(EngineError::new(ErrorKind::Vlc, pos, e.to_string())),
            },
        }
    }

    fn eval_init(&mut self, i: InitRef<'a>, ty: Option<ScalarType>, label: &str) -> Res<Value> {
        let v = match i {
            InitRef::Byte(b) => Value::Int(b as i64),
            InitRef::Spec(InitSpec::Expr(e)) => self.eval(e)?,
            InitRef::Spec(_) => {
                return Err(self.err(ErrorKind::Runtime, format!("initializer of {label} does not match its shape")))
            }
        };
        match ty {
            Some(t) if v.is_scalar() => t.coerce(&v).map_err(|e| self.op_err(e)),
            _ => Ok(v),
        }
    }

    fn store(&mut self, name: &str, p: Piece) {
        let f = self.frame_mut();
        let field = f.obj.fields.entry(name.to_string()).or_insert_with(|| Field {
            parsable: true,
            read_only: false,
            instances: Vec::new(),
        });
        field.parsable = true;
        field.instances.push(Instance { value: p.value, offset: p.offset, len: p.len, consumed: p.consumed });
    }

    /// Fills one slot of a partial array, creating the array on first use.
    fn store_partial(&mut self, name: &str, idx: &[u64], p: Piece) -> Res<()> {
        let pos = self.pos();
        let f = self.frame_mut();
        let field = f.obj.fields.entry(name.to_string()).or_insert_with(|| Field {
            parsable: true,
            read_only: false,
            instances: Vec::new(),
        });
        if !matches!(field.instances.last(), Some(Instance { value: Value::Array(_), .. })) {
            let empty = Value::Array(ArrayValue { sparse: true, ..Default::default() });
            field.instances.push(Instance { value: empty, offset: p.offset, len: 0, consumed: 0 });
        }
        let inst = field.instances.last_mut().expect("instance pushed above");
        inst.len = p.len;
        inst.consumed += p.consumed;
        let mut arr = match &mut inst.value {
            Value::Array(a) => a,
            _ => unreachable!("partial field holds an array"),
        };
        let mut value = Some(p.value);
        for (k, &i) in idx.iter().enumerate() {
            let i = i as usize;
            if k + 1 == idx.len() {
                arr.set(i, Element { value: value.take().expect("set once"), len: p.len });
                break;
            }
            if arr.get(i).is_none() {
                let row = Value::Array(ArrayValue { sparse: true, ..Default::default() });
                arr.set(i, Element { value: row, len: 0 });
            }
            arr = match &mut arr.get_mut(i).expect("row set above").value {
                Value::Array(a) => a,
                _ => return Err(EngineError::new(ErrorKind::Runtime, pos, format!("{name}[{i}] is not an array"))),
            };
        }
        Ok(())
    }

    fn plain_decl(&mut self, d: &'a Decl) -> Res<()> {
        let init = d.init.as_ref().map(InitRef::Spec);
        let value = if d.dims.is_empty() {
            self.plain_value(d, init)?
        } else {
            let sizes = self.dims(d)?;
            self.plain_array(d, &sizes, init)?
        };
        let f = self.frame_mut();
        match f.scopes.last_mut() {
            Some(s) if !d.member => {
                s.insert(&d.name, Slot { value, ty: d.ty });
            }
            _ => f.obj.set_member(&d.name, value, false, false),
        }
        Ok(())
    }

    fn plain_value(&mut self, d: &'a Decl, init: Option<InitRef<'a>>) -> Res<Value> {
        match d.ty {
            VarType::Scalar(t) => match init {
                Some(i) => self.eval_init(i, Some(t), &d.name),
                None => Ok(t.default_value()),
            },
            VarType::Class(k) => {
                let mut args = Vec::with_capacity(d.args.len());
                for e in &d.args {
                    args.push(self.eval(e)?);
                }
                let obj = self.run_object(k, args, None)?;
                Ok(Value::Object(Box::new(obj)))
            }
        }
    }

    fn plain_array(&mut self, d: &'a Decl, sizes: &[u64], init: Option<InitRef<'a>>) -> Res<Value> {
        let n = sizes[0] as usize;
        let mut vals = Vec::with_capacity(n);
        for i in 0..n {
            let ii = init.and_then(|x| x.index(i));
            vals.push(if sizes.len() == 1 { self.plain_value(d, ii)? } else { self.plain_array(d, &sizes[1..], ii)? });
        }
        let mut a = ArrayValue::dense(vals);
        a.char_elems = sizes.len() == 1 && matches!(d.ty, VarType::Scalar(ScalarType::Char { .. }));
        Ok(Value::Array(a))
    }

    fn truthy(&mut self, e: &'a Expr) -> Res<bool> {
        let v = self.eval(e)?;
        v.truthy().map_err(|e| self.op_err(e))
    }

    fn eval(&mut self, e: &'a Expr) -> Res<Value> {
        match &e.kind {
            ExprKind::Const(v) => Ok(v.clone()),
            ExprKind::Lit(l) => l.value().ok_or_else(|| self.err(ErrorKind::Runtime, "string literal used as a value")),
            ExprKind::Index(b, i) if b.root_name().is_none() => {
                let base = self.eval(b)?;
                let ix = self.index_value(i)?;
                let v = follow(&base, &[Step::Idx(ix)]).map_err(|(k, m)| self.err(k, m))?;
                Ok(v.clone())
            }
            ExprKind::Name(_) | ExprKind::Index(..) | ExprKind::Member(..) => {
                let (root, steps) = self.resolve(e)?;
                self.read(root, &steps)
            }
            ExprKind::Unary(op, x) => {
                let v = self.eval(x)?;
                unary(*op, &v).map_err(|e| self.op_err(e))
            }
            ExprKind::Binary(BinOp::And, a, b) => Ok(Value::bool(self.truthy(a)? && self.truthy(b)?)),
            ExprKind::Binary(BinOp::Or, a, b) => Ok(Value::bool(self.truthy(a)? || self.truthy(b)?)),
            ExprKind::Binary(op, a, b) => {
                let x = self.eval(a)?;
                let y = self.eval(b)?;
                binary(*op, &x, &y).map_err(|e| self.op_err(e))
            }
            ExprKind::Assign(op, target, rhs) => {
                let (root, steps) = self.resolve(target)?;
                let r = self.eval(rhs)?;
                let (_, new) = self.write(root, &steps, |old| match op {
                    None => Ok(r),
                    Some(op) => binary(*op, old, &r),
                })?;
                Ok(new)
            }
            ExprKind::IncDec { prefix, increment, target } => {
                let (root, steps) = self.resolve(target)?;
                let op = if *increment { BinOp::Add } else { BinOp::Sub };
                let (old, new) = self.write(root, &steps, |old| binary(op, old, &Value::Int(1)))?;
                Ok(if *prefix { new } else { old })
            }
            ExprKind::Ternary(c, a, b) => {
                if self.truthy(c)? {
                    self.eval(a)
                } else {
                    self.eval(b)
                }
            }
            ExprKind::Lengthof(t) => self.lengthof(t),
            ExprKind::Isidof(c, x) => {
                let v = self.eval(x)?;
                let spec = self.spec;
                let Some(k) = spec.class_id(c) else {
                    return Err(self.err(ErrorKind::Runtime, format!("unknown class {c}")));
                };
                Ok(Value::bool(v.as_i128().is_some_and(|v| spec.isidof(k, v))))
            }
        }
    }

    fn index_value(&mut self, i: &'a Expr) -> Res<usize> {
        let v = self.eval(i)?;
        match v.as_index() {
            Some(n) if n <= usize::MAX as u64 => Ok(n as usize),
            _ => Err(self.err(ErrorKind::Runtime, format!("array index {v} is not a valid index"))),
        }
    }

    /// Splits a variable reference into its root name and evaluated steps.
    fn resolve(&mut self, e: &'a Expr) -> Res<(&'a str, Vec<Step<'a>>)> {
        match &e.kind {
            ExprKind::Name(n) => Ok((n.as_str(), Vec::new())),
            ExprKind::Index(b, i) => {
                let (r, mut s) = self.resolve(b)?;
                s.push(Step::Idx(self.index_value(i)?));
                Ok((r, s))
            }
            ExprKind::Member(b, f) => {
                let (r, mut s) = self.resolve(b)?;
                s.push(Step::Field(f.as_str()));
                Ok((r, s))
            }
            _ => Err(self.err(ErrorKind::Runtime, "expression is not a variable")),
        }
    }

    fn read(&self, root: &str, steps: &[Step<'_>]) -> Res<Value> {
        let f = self.frame();
        let base = f
            .scopes
            .iter()
            .rev()
            .find_map(|s| s.get(root).map(|sl| &sl.value))
            .or_else(|| f.obj.get(root))
            .or_else(|| self.spec.constants.get(root));
        let Some(base) = base else {
            return Err(self.err(ErrorKind::Runtime, format!("{root} has no value yet")));
        };
        follow(base, steps).cloned().map_err(|(k, m)| self.err(k, format!("{}: {m}", path_label(root, steps))))
    }

    fn write(
        &mut self,
        root: &str,
        steps: &[Step<'_>],
        f: impl FnOnce(&Value) -> Result<Value, OpError>,
    ) -> Res<(Value, Value)> {
        let spec = self.spec;
        let pos = self.pos();
        let fail = |k: ErrorKind, m: String| EngineError::new(k, pos, format!("{}: {m}", path_label(root, steps)));
        let fr = self.frames.last_mut().expect("no object under construction");
        let class = fr.class;
        let (mut cur, mut ty) = if let Some(sl) = fr.scopes.iter_mut().rev().find_map(|s| s.get_mut(root)) {
            (&mut sl.value, Some(sl.ty))
        } else if let Some(inst) = fr.obj.fields.get_mut(root).and_then(Field::last_mut) {
            (&mut inst.value, spec.find_member(class, root).map(|(_, m)| m.ty))
        } else {
            return Err(fail(ErrorKind::Runtime, "cannot be assigned here".into()));
        };
        for s in steps {
            cur = match (s, cur) {
                (Step::Idx(i), Value::Array(a)) => match a.get_mut(*i) {
                    Some(e) => &mut e.value,
                    None => return Err(fail(ErrorKind::Runtime, format!("index {i} out of range"))),
                },
                (Step::Field(n), Value::Object(o)) => {
                    ty = spec.class_id(&o.class).and_then(|k| spec.find_member(k, n)).map(|(_, m)| m.ty);
                    match o.fields.get_mut(*n).and_then(Field::last_mut) {
                        Some(i) => &mut i.value,
                        None => return Err(fail(ErrorKind::Runtime, format!("no member {n}"))),
                    }
                }
                (_, v) => return Err(fail(ErrorKind::Runtime, format!("cannot step into a {}", v.kind_name()))),
            };
        }
        let old = cur.clone();
        let mut new = f(&old).map_err(|e| EngineError::new(ErrorKind::Runtime, pos, e.to_string()))?;
        if let Some(VarType::Scalar(t)) = ty {
            if new.is_scalar() {
                new = t.coerce(&new).map_err(|e| EngineError::new(ErrorKind::Runtime, pos, e.to_string()))?;
            }
        }
        *cur = new.clone();
        Ok((old, new))
    }

    fn lengthof(&mut self, t: &'a Expr) -> Res<Value> {
        let (root, steps) = self.resolve(t)?;
        let fail = |me: &Self, k: ErrorKind, m: &str| me.err(k, format!("lengthof({}): {m}", path_label(root, &steps)));
        let f = self.frame();
        let Some(inst) = f.obj.fields.get(root).and_then(Field::last) else {
            return Err(fail(self, ErrorKind::Runtime, "not parsed on this path"));
        };
        let (mut len, mut cur) = (inst.len, &inst.value);
        for s in &steps {
            match (s, cur) {
                (Step::Idx(i), Value::Array(a)) => {
                    let Some(e) = a.get(*i) else {
                        return Err(fail(self, ErrorKind::Unpopulated, "element never parsed"));
                    };
                    len = e.len;
                    cur = &e.value;
                }
                (Step::Field(n), Value::Object(o)) => {
                    let Some(i) = o.fields.get(*n).and_then(Field::last) else {
                        return Err(fail(self, ErrorKind::Runtime, "member never parsed"));
                    };
                    len = i.len;
                    cur = &i.value;
                }
                _ => return Err(fail(self, ErrorKind::Runtime, "not a parsed variable")),
            }
        }
        Ok(Value::Int(len as i64))
    }
}

fn follow<'v>(base: &'v Value, steps: &[Step<'_>]) -> Result<&'v Value, (ErrorKind, String)> {
    let mut cur = base;
    for s in steps {
        cur = match (s, cur) {
            (Step::Idx(i), Value::Array(a)) => match a.elems.get(*i) {
                Some(Some(e)) => &e.value,
                None if !a.sparse => {
                    return Err((ErrorKind::Runtime, format!("index {i} out of range for {} elements", a.elems.len())))
                }
                _ => return Err((ErrorKind::Unpopulated, format!("element {i} was never parsed"))),
            },
            (Step::Field(n), Value::Object(o)) => match o.get(n) {
                Some(v) => v,
                None => return Err((ErrorKind::Runtime, format!("no member {n}"))),
            },
            (_, v) => return Err((ErrorKind::Runtime, format!("cannot step into a {}", v.kind_name()))),
        };
    }
    Ok(cur)
}

fn path_label(root: &str, steps: &[Step<'_>]) -> String {
    let mut s = root.to_string();
    for st in steps {
        match st {
            Step::Idx(i) => s.push_str(&format!("[{i}]")),
            Step::Field(f) => {
                s.push('.');
                s.push_str(f);
            }
        }
    }
    s
}

fn int_value(v: i128) -> Value {
    match i64::try_from(v) {
        Ok(i) => Value::Int(i),
        Err(_) => Value::UInt(v as u64),
    }
}

fn from_bits(t: ScalarType, raw: u64, n: u32) -> Value {
    match t {
        ScalarType::Float => Value::Float(f32::from_bits(raw as u32) as f64),
        ScalarType::Double => Value::Float(f64::from_bits(raw)),
        t if t.reads_signed() => t.coerce(&Value::Int(sign_extend(raw, n))).unwrap_or(Value::Int(sign_extend(raw, n))),
        t => t.coerce(&Value::UInt(raw)).unwrap_or(Value::UInt(raw)),
    }
}

fn to_bits(t: ScalarType, v: &Value, n: u32) -> Result<u64, String> {
    match t {
        ScalarType::Float => Ok((v.as_f64().map_err(|e| e.to_string())? as f32).to_bits() as u64),
        ScalarType::Double => Ok(v.as_f64().map_err(|e| e.to_string())?.to_bits()),
        t => {
            let x = v.as_i128().ok_or_else(|| format!("{v} is not an integer"))?;
            let (lo, hi) = if t.reads_signed() { (-(1i128 << (n - 1)), 1i128 << (n - 1)) } else { (0, 1i128 << n) };
            if x < lo || x >= hi {
                return Err(format!("value {x} does not fit in {n} bits"));
            }
            Ok((x as i64 as u64) & mask(n))
        }
    }
}

fn peek_id(src: &dyn BitSource, id: &IdInfo) -> Result<Option<i128>, BitError> {
    let gap = id.align.map_or(0, |a| src.align_gap(a));
    let total = gap + id.size;
    if total > 64 {
        return Err(BitError::InvalidWidth(total));
    }
    let p = src.peek_raw(total)?;
    if !p.complete(total) {
        return Ok(None);
    }
    let mut raw = p.value & mask(id.size);
    if id.order == ByteOrder::Little {
        raw = swap_bytes(raw, id.size);
    }
    Ok(Some(if id.ty.reads_signed() { sign_extend(raw, id.size) as i128 } else { raw as i128 }))
}

/// Class of the `class` family whose ID matches the next bits of `src`,
/// without consuming them. `None` when nothing matches or too few bits remain.
pub fn dispatch_id<'s>(spec: &'s SyntaxSpec, class: &str, src: &dyn BitSource) -> Result<Option<&'s str>, BitError> {
    let Some(k) = spec.class_id(class) else { return Ok(None) };
    let Some(id) = spec.effective_id(k) else { return Ok(None) };
    Ok(peek_id(src, id)?.and_then(|v| spec.class_for_id(k, v)).map(|c| spec.classes[c].name.as_str()))
}
