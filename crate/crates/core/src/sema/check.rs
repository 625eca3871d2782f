//! The analyzer: declarations, scoping, expression typing and lowering.

use std::collections::{HashMap, HashSet};
use std::mem;

use indexmap::IndexMap;

use crate::bitio::ByteOrder;
use crate::diag::{self, Code, Diagnostic};
use crate::frontend::ast::{
    self, Alignment, ClassDecl, Expr, ExprKind, IdDecl, IdValue, Init, ItemKind, Literal, PragmaSetting, PragmaValue,
    Prim, Sign, TypeName, VarDecl,
};
use crate::frontend::{type_str, Ast};
use crate::source::Loc;
use crate::value::{binary, unary, ArrayValue, BinOp, OpError, ScalarType, UnOp, Value};
use crate::vlcmap::OutputType;

use super::ids;
use super::ir::{self, Align, DimSpec, InitSpec, Label, Parse, ParseSize};
use super::{
    AnalyzeOptions, ClassFlags, ClassId, ClassInfo, IdInfo, Member, MemberKind, ParamInfo, SyntaxSpec, VarType,
    MAX_FIELD_BITS,
};

/// Static type of an expression.
#[derive(Debug, Clone, PartialEq)]
pub(super) enum Ty {
    Num {
        float: bool,
    },
    Bool,
    Class(ClassId),
    Array(Box<Ty>, usize),
    /// Unknown after an earlier error; accepted everywhere.
    Any,
}

impl Ty {
    fn numeric(&self) -> bool {
        matches!(self, Ty::Num { .. } | Ty::Bool | Ty::Any)
    }

    fn integer(&self) -> bool {
        matches!(self, Ty::Num { float: false } | Ty::Bool | Ty::Any)
    }

    fn float(&self) -> bool {
        matches!(self, Ty::Num { float: true })
    }
}

fn var_ty(ty: VarType, dims: usize) -> Ty {
    let base = match ty {
        VarType::Scalar(s) => Ty::Num { float: s.is_float() },
        VarType::Class(c) => Ty::Class(c),
    };
    if dims == 0 {
        base
    } else {
        Ty::Array(Box::new(base), dims)
    }
}

pub(super) fn scalar_type(t: &TypeName) -> Option<ScalarType> {
    let TypeName::Prim { prim, sign, .. } = *t else { return None };
    Some(match prim {
        Prim::Int | Prim::Bit => match sign {
            Sign::Signed => ScalarType::Int { sign_extend: true },
            Sign::Unsigned => ScalarType::UInt,
            Sign::Default if prim == Prim::Bit => ScalarType::UInt,
            Sign::Default => ScalarType::Int { sign_extend: false },
        },
        Prim::Char => ScalarType::Char { signed: sign == Sign::Signed },
        Prim::Float => ScalarType::Float,
        Prim::Double => ScalarType::Double,
    })
}

#[derive(Debug, Clone)]
struct PragmaState {
    get: bool,
    put: bool,
    trace: bool,
    trace_name: Option<String>,
    array: u64,
}

impl PragmaState {
    fn flags(&self) -> ClassFlags {
        ClassFlags { get: self.get, put: self.put, trace: self.trace, trace_name: self.trace_name.clone() }
    }
}

#[derive(Debug, Clone)]
struct Local {
    ty: Ty,
    is_const: bool,
}

pub(super) struct BodyCx {
    class: Option<ClassId>,
    scopes: Vec<HashMap<String, Local>>,
    /// Own top-level non-parsable members declared so far.
    declared: HashSet<String>,
    loops: u32,
    breakable: u32,
}

impl BodyCx {
    pub(super) fn global() -> Self {
        BodyCx { class: None, scopes: Vec::new(), declared: HashSet::new(), loops: 0, breakable: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum PlaceKind {
    Local,
    Member(MemberKind),
    Global,
}

#[derive(Debug, Clone)]
struct Place {
    name: String,
    kind: PlaceKind,
    is_const: bool,
}

struct Typed {
    e: Expr,
    ty: Ty,
    place: Option<Place>,
}

enum Res {
    Local(Ty, bool),
    Member(MemberKind, Ty, bool),
    Global(Value),
}

pub(super) struct Analyzer<'o> {
    pub(super) opts: &'o AnalyzeOptions,
    pub(super) diags: Vec<Diagnostic>,
    pub(super) constants: IndexMap<String, Value>,
    pub(super) classes: Vec<ClassInfo>,
    pub(super) class_ids: HashMap<String, ClassId>,
    pub(super) map_ids: HashMap<String, usize>,
    pub(super) map_outputs: Vec<Option<OutputType>>,
    pragma: PragmaState,
}

impl<'o> Analyzer<'o> {
    pub(super) fn new(opts: &'o AnalyzeOptions) -> Self {
        Analyzer {
            opts,
            diags: Vec::new(),
            constants: IndexMap::new(),
            classes: Vec::new(),
            class_ids: HashMap::new(),
            map_ids: HashMap::new(),
            map_outputs: Vec::new(),
            pragma: PragmaState { get: true, put: true, trace: true, trace_name: None, array: opts.array_cap },
        }
    }

    pub(super) fn err(&mut self, code: Code, loc: Loc, msg: impl Into<String>) {
        self.diags.push(Diagnostic::error(code, loc, msg));
    }

    pub(super) fn run(mut self, ast: &Ast) -> Result<SyntaxSpec, Vec<Diagnostic>> {
        let decls = self.register(ast);
        for item in &ast.items {
            if let ItemKind::Decl(d) = &item.kind {
                self.global_const(d);
            }
        }
        self.headers(&decls);
        let id_index = ids::build_families(&mut self.classes);
        let id_diags = ids::check_families(&self.classes, &id_index);
        self.diags.extend(id_diags);
        self.members(&decls);
        let maps = self.compile_maps(ast);
        for item in &ast.items {
            match &item.kind {
                ItemKind::Pragma(p) => self.pragma(p, item.loc),
                ItemKind::Class(d) => {
                    let c = self.class_ids[&d.name];
                    if !std::ptr::eq(decls[c], d) {
                        continue;
                    }
                    let mut cx = BodyCx { class: Some(c), ..BodyCx::global() };
                    let body = d.body.iter().map(|s| self.stmt(s, &mut cx)).collect();
                    self.classes[c].body = body;
                    self.classes[c].flags = self.pragma.flags();
                }
                _ => {}
            }
        }
        let mut diags = mem::take(&mut self.diags);
        diag::sort_by_location(&mut diags);
        if diag::has_errors(&diags) {
            return Err(diags);
        }
        Ok(SyntaxSpec {
            classes: self.classes,
            class_ids: self.class_ids,
            maps,
            constants: self.constants,
            id_index,
            warnings: diags,
        })
    }

    fn register<'a>(&mut self, ast: &'a Ast) -> Vec<&'a ClassDecl> {
        let mut decls = Vec::new();
        for item in &ast.items {
            match &item.kind {
                ItemKind::Class(d) => {
                    if self.class_ids.contains_key(&d.name) {
                        self.err(Code::DuplicateClass, d.loc, format!("class {} is already declared", d.name));
                        continue;
                    }
                    self.class_ids.insert(d.name.clone(), decls.len());
                    decls.push(d);
                    self.classes.push(ClassInfo {
                        name: d.name.clone(),
                        loc: d.loc,
                        parent: None,
                        is_abstract: d.is_abstract,
                        align: None,
                        params: Vec::new(),
                        id: None,
                        members: Vec::new(),
                        parsable: false,
                        flags: self.pragma.flags(),
                        family: None,
                        body: Vec::new(),
                    });
                }
                ItemKind::Map(m) => {
                    if self.map_ids.contains_key(&m.name) {
                        self.err(Code::DuplicateMap, m.loc, format!("map {} is already declared", m.name));
                        continue;
                    }
                    let n = self.map_ids.len();
                    self.map_ids.insert(m.name.clone(), n);
                }
                _ => {}
            }
        }
        decls
    }

    fn pragma(&mut self, settings: &[PragmaSetting], loc: Loc) {
        for s in settings {
            let p = &mut self.pragma;
            match (s.name.as_str(), &s.value) {
                ("get", None) => p.get = true,
                ("noget", None) => p.get = false,
                ("put", None) => p.put = true,
                ("noput", None) => p.put = false,
                ("trace", None) => p.trace = true,
                ("trace", Some(PragmaValue::Str(n))) => {
                    p.trace = true;
                    p.trace_name = Some(n.clone());
                }
                ("notrace", None) => p.trace = false,
                ("array", Some(PragmaValue::Int(n))) if *n > 0 => p.array = *n as u64,
                ("array", _) => self.diags.push(Diagnostic::warning(
                    Code::UnknownPragma,
                    loc,
                    format!("'{s}': array expects a positive integer"),
                )),
                _ => self.diags.push(Diagnostic::warning(
                    Code::UnknownPragma,
                    loc,
                    format!("unknown pragma setting '{s}'"),
                )),
            }
        }
    }

    // ---- constants -------------------------------------------------------

    fn global_const(&mut self, d: &VarDecl) {
        if d.parse.is_some() {
            self.err(
                Code::GlobalNonConst,
                d.loc,
                format!("parsable variable {} cannot be declared at global scope", d.name),
            );
            return;
        }
        if !d.is_const {
            self.err(Code::GlobalNonConst, d.loc, format!("global variable {} must be const", d.name));
            return;
        }
        let Some(st) = scalar_type(&d.ty) else {
            self.err(Code::TypeError, d.loc, format!("constant {} must have a built-in type", d.name));
            return;
        };
        if self.constants.contains_key(&d.name) {
            self.err(Code::Redeclared, d.loc, format!("constant {} is already declared", d.name));
            return;
        }
        let Some(init) = &d.init else {
            self.err(Code::BadInitializer, d.loc, format!("constant {} needs an initializer", d.name));
            return;
        };
        let cx = BodyCx::global();
        let value = if d.dims.is_empty() {
            match init {
                Init::Expr(e) => self
                    .require_const(e, &cx, Code::NonConstant, "constant initializer")
                    .and_then(|v| st.coerce(&v).map_err(|e| self.err(Code::TypeError, d.loc, e.to_string())).ok()),
                Init::List(_) => {
                    self.err(Code::BadInitializer, d.loc, format!("brace initializer for non-array {}", d.name));
                    None
                }
            }
        } else {
            let mut sizes = Vec::new();
            for dim in &d.dims {
                if dim.partial {
                    self.err(Code::BadPartial, dim.size.loc, "partial arrays apply to parsable variables only");
                    return;
                }
                let n = self.require_const(&dim.size, &cx, Code::NonConstant, "array size of a constant");
                match n.and_then(|v| v.as_index()) {
                    Some(n) => sizes.push(n as usize),
                    None => return,
                }
            }
            self.const_array(st, &sizes, init, d.loc, &cx)
        };
        if let Some(v) = value {
            self.constants.insert(d.name.clone(), v);
        }
    }

    fn const_array(&mut self, st: ScalarType, dims: &[usize], init: &Init, loc: Loc, cx: &BodyCx) -> Option<Value> {
        let n = dims[0];
        let is_char = matches!(st, ScalarType::Char { .. });
        let mut vals = Vec::with_capacity(n);
        match init {
            Init::Expr(Expr { kind: ExprKind::Lit(Literal::Str(s)), .. }) if dims.len() == 1 && is_char => {
                if n != s.len() && n != s.len() + 1 {
                    self.err(
                        Code::StringInit,
                        loc,
                        format!("string of length {} does not fit an array of {n}", s.len()),
                    );
                    return None;
                }
                vals.extend(s.iter().map(|&b| Value::UInt(b as u64)));
                vals.resize(n, Value::UInt(0));
            }
            Init::Expr(e) => {
                let v = self.require_const(e, cx, Code::NonConstant, "constant initializer")?;
                let v = if dims.len() == 1 {
                    st.coerce(&v).ok()?
                } else {
                    self.const_array(st, &dims[1..], init, loc, cx)?
                };
                vals.resize(n, v);
            }
            Init::List(items) => {
                if items.len() > n {
                    self.err(Code::BadInitializer, loc, format!("{} values for an array of {n}", items.len()));
                    return None;
                }
                for it in items {
                    let v = if dims.len() == 1 {
                        match it {
                            Init::Expr(e) => st
                                .coerce(&self.require_const(e, cx, Code::NonConstant, "constant initializer")?)
                                .ok()?,
                            Init::List(_) => {
                                self.err(Code::BadInitializer, loc, "too many braces in initializer");
                                return None;
                            }
                        }
                    } else {
                        self.const_array(st, &dims[1..], it, loc, cx)?
                    };
                    vals.push(v);
                }
                let fill = if dims.len() == 1 { st.default_value() } else { zero_array(st, &dims[1..]) };
                vals.resize(n, fill);
            }
        }
        let mut a = ArrayValue::dense(vals);
        a.char_elems = is_char && dims.len() == 1;
        Some(Value::Array(a))
    }

    /// Lowers `e` and demands a constant result.
    pub(super) fn require_const(&mut self, e: &Expr, cx: &BodyCx, code: Code, what: &str) -> Option<Value> {
        let n = self.diags.len();
        let t = self.expr(e, cx);
        if self.diags.len() > n {
            return None;
        }
        match t.e.kind {
            ExprKind::Const(v) => Some(v),
            _ => {
                match const_error(&t.e) {
                    Some(OpError::DivisionByZero) => {
                        self.err(Code::DivByZero, e.loc, format!("division by zero in {what}"))
                    }
                    Some(err) => self.err(Code::TypeError, e.loc, err.to_string()),
                    None => self.err(code, e.loc, format!("{what} must be a constant expression")),
                }
                None
            }
        }
    }

    // ---- class headers ---------------------------------------------------

    fn resolve_type(&mut self, t: &TypeName, loc: Loc) -> Option<VarType> {
        match t {
            TypeName::Class(n) => match self.class_ids.get(n) {
                Some(&c) => Some(VarType::Class(c)),
                None => {
                    self.err(Code::UnknownType, loc, format!("unknown type {n}"));
                    None
                }
            },
            _ => scalar_type(t).map(VarType::Scalar),
        }
    }

    fn quiet_type(&self, t: &TypeName) -> Option<VarType> {
        match t {
            TypeName::Class(n) => self.class_ids.get(n).map(|&c| VarType::Class(c)),
            _ => scalar_type(t).map(VarType::Scalar),
        }
    }

    fn headers(&mut self, decls: &[&ClassDecl]) {
        let cx = BodyCx::global();
        for (c, d) in decls.iter().enumerate() {
            if let Some(p) = &d.parent {
                match self.class_ids.get(p) {
                    Some(&k) if k == c => {
                        self.err(Code::BadParent, d.loc, format!("class {} cannot extend itself", d.name))
                    }
                    Some(&k) => self.classes[c].parent = Some(k),
                    None => self.err(Code::UnknownType, d.loc, format!("unknown base class {p}")),
                }
            }
            if let Some(a) = &d.aligned {
                self.classes[c].align = self.const_alignment(a, d.loc, &cx);
            }
            let mut params = Vec::new();
            for p in &d.params {
                if params.iter().any(|q: &ParamInfo| q.name == p.name) {
                    self.err(Code::DuplicateParam, p.loc, format!("duplicate parameter {}", p.name));
                    continue;
                }
                if let Some(ty) = self.resolve_type(&p.ty, p.loc) {
                    params.push(ParamInfo { name: p.name.clone(), ty, dims: p.dims.len() });
                }
            }
            self.classes[c].params = params;
            if let Some(id) = &d.id {
                self.classes[c].id = self.id_decl(id, &cx);
            }
        }
        let n = self.classes.len();
        for c in 0..n {
            let mut k = self.classes[c].parent;
            let mut steps = 0;
            while let Some(x) = k {
                steps += 1;
                if x == c || steps > n {
                    let name = self.classes[c].name.clone();
                    self.err(Code::BadParent, self.classes[c].loc, format!("inheritance cycle through class {name}"));
                    self.classes[c].parent = None;
                    break;
                }
                k = self.classes[x].parent;
            }
        }
        for c in 0..n {
            if let Some(p) = self.classes[c].parent {
                if !self.classes[p].params.is_empty() {
                    let msg = format!("base class {} takes parameters and cannot be extended", self.classes[p].name);
                    self.err(Code::BadParent, self.classes[c].loc, msg);
                }
            }
        }
    }

    fn const_alignment(&mut self, a: &Alignment, loc: Loc, cx: &BodyCx) -> Option<u32> {
        let Some(e) = &a.length else { return Some(8) };
        let v = self.require_const(e, cx, Code::NonConstant, "class alignment")?;
        positive_u32(&v).or_else(|| {
            self.err(Code::ParseSizeRange, loc, format!("alignment {v} must be a positive bit count"));
            None
        })
    }

    fn id_decl(&mut self, d: &IdDecl, cx: &BodyCx) -> Option<IdInfo> {
        let ty = match scalar_type(&d.ty) {
            Some(t) if t.is_integer() => t,
            _ => {
                self.err(Code::IdType, d.loc, format!("ID {} must have a built-in integer type", d.name));
                return None;
            }
        };
        let size = self.require_const(&d.size, cx, Code::IdNonConstant, "ID parse size")?;
        let size = match size.as_i128() {
            Some(n) if (1..=MAX_FIELD_BITS as i128).contains(&n) => n as u32,
            _ => {
                self.err(
                    Code::ParseSizeRange,
                    d.size.loc,
                    format!("ID parse size {size} outside 1..={MAX_FIELD_BITS}"),
                );
                return None;
            }
        };
        let (lo_e, hi_e) = match &d.value {
            IdValue::Single(e) => (e, e),
            IdValue::Range(a, b) => (a, b),
        };
        let lo = self.require_const(lo_e, cx, Code::IdNonConstant, "ID value")?.as_i128()?;
        let hi = self.require_const(hi_e, cx, Code::IdNonConstant, "ID value")?.as_i128()?;
        if lo > hi {
            self.err(Code::IdRange, d.loc, format!("empty ID range {lo} .. {hi}"));
            return None;
        }
        let (min, max) = if ty.reads_signed() {
            (-(1i128 << (size - 1)), (1i128 << (size - 1)) - 1)
        } else {
            (0, (1i128 << size) - 1)
        };
        if lo < min || hi > max {
            self.err(Code::IdRange, d.loc, format!("ID value does not fit in {size} bits"));
            return None;
        }
        let order = d.byte_order.unwrap_or(ByteOrder::Big);
        if order == ByteOrder::Little && size % 8 != 0 {
            self.err(
                Code::LittleEndianWidth,
                d.loc,
                format!("little-endian ID needs a multiple of 8 bits, not {size}"),
            );
        }
        let align = match &d.aligned {
            Some(a) => Some(self.const_alignment(a, d.loc, cx)?),
            None => None,
        };
        Some(IdInfo { name: d.name.clone(), ty, size, align, order, lo, hi, loc: d.loc })
    }

    fn effective_id_name(&self, c: ClassId) -> Option<String> {
        let mut k = Some(c);
        let mut steps = 0;
        while let Some(x) = k {
            if let Some(id) = &self.classes[x].id {
                return Some(id.name.clone());
            }
            k = self.classes[x].parent;
            steps += 1;
            if steps > self.classes.len() {
                break;
            }
        }
        None
    }

    pub(super) fn lineage(&self, c: ClassId) -> Vec<ClassId> {
        let mut out = vec![c];
        let mut k = self.classes[c].parent;
        while let Some(x) = k {
            if out.contains(&x) {
                break;
            }
            out.push(x);
            k = self.classes[x].parent;
        }
        out.reverse();
        out
    }

    fn derives(&self, c: ClassId, base: ClassId) -> bool {
        self.lineage(c).contains(&base)
    }

    fn find_member(&self, c: ClassId, name: &str) -> Option<(ClassId, &Member)> {
        self.lineage(c).into_iter().rev().find_map(|k| self.classes[k].member(name).map(|m| (k, m)))
    }

    // ---- members ---------------------------------------------------------

    fn members(&mut self, decls: &[&ClassDecl]) {
        let mut state = vec![0u8; decls.len()];
        for c in 0..decls.len() {
            self.parsable_of(c, decls, &mut state);
        }
        for (c, d) in decls.iter().enumerate() {
            self.collect_members(c, d);
        }
    }

    fn parsable_of(&mut self, c: ClassId, decls: &[&ClassDecl], state: &mut [u8]) -> bool {
        match state[c] {
            1 | 2 => return false,
            3 => return true,
            _ => {}
        }
        state[c] = 1;
        let mut p = decls[c].id.is_some();
        let mut nested = Vec::new();
        walk_decls(&decls[c].body, 0, &mut |d, _| {
            if d.parse.is_some() {
                p = true;
            } else if let TypeName::Class(n) = &d.ty {
                nested.push(n.clone());
            }
        });
        if let Some(k) = self.classes[c].parent {
            p |= self.parsable_of(k, decls, state);
        }
        for n in nested {
            if let Some(&k) = self.class_ids.get(&n) {
                p |= self.parsable_of(k, decls, state);
            }
        }
        state[c] = if p { 3 } else { 2 };
        self.classes[c].parsable = p;
        p
    }

    fn decl_parsable(&self, d: &VarDecl) -> bool {
        d.parse.is_some()
            || matches!(&d.ty, TypeName::Class(n) if self.class_ids.get(n).is_some_and(|&k| self.classes[k].parsable))
    }

    fn collect_members(&mut self, c: ClassId, d: &ClassDecl) {
        let mut members: Vec<Member> = Vec::new();
        let id_name = self.effective_id_name(c);
        for p in self.classes[c].params.clone() {
            if id_name.as_deref() == Some(p.name.as_str()) {
                self.err(Code::IdRedeclared, d.loc, format!("parameter {} hides the object ID", p.name));
            }
            members.push(Member {
                name: p.name,
                kind: MemberKind::Param,
                ty: p.ty,
                dims: p.dims,
                is_const: false,
                loc: d.loc,
            });
        }
        if let Some(id) = &self.classes[c].id {
            members.push(Member {
                name: id.name.clone(),
                kind: MemberKind::Id,
                ty: VarType::Scalar(id.ty),
                dims: 0,
                is_const: false,
                loc: id.loc,
            });
        }
        let mut own_parsables = HashSet::new();
        walk_decls(&d.body, 0, &mut |v, _| {
            if self.decl_parsable(v) {
                own_parsables.insert(v.name.clone());
            }
        });
        let mut found = Vec::new();
        walk_decls(&d.body, 0, &mut |v, depth| found.push((v, depth)));
        for (v, depth) in found {
            let parsable = self.decl_parsable(v);
            if id_name.as_deref() == Some(v.name.as_str()) {
                self.err(
                    Code::IdRedeclared,
                    v.loc,
                    format!("object ID {} cannot be redeclared in the class body", v.name),
                );
                continue;
            }
            if !parsable && own_parsables.contains(&v.name) {
                self.err(Code::HidesParsable, v.loc, format!("{} hides the parsable variable {}", v.name, v.name));
                continue;
            }
            if !parsable && depth > 0 {
                continue;
            }
            let Some(ty) = self.quiet_type(&v.ty) else { continue };
            match members.iter_mut().find(|m| m.name == v.name) {
                Some(m) if m.kind == MemberKind::Param => {
                    self.err(Code::Redeclared, v.loc, format!("{} is already declared as a parameter", v.name));
                }
                Some(m) if parsable => {
                    if m.ty != ty || m.dims != v.dims.len() {
                        self.err(
                            Code::BadParsableRedecl,
                            v.loc,
                            format!("parsable {} redeclared with a different type", v.name),
                        );
                    } else if m.is_const {
                        self.err(
                            Code::BadParsableRedecl,
                            v.loc,
                            format!("const parsable {} cannot be redeclared", v.name),
                        );
                    }
                }
                Some(_) => self.err(Code::Redeclared, v.loc, format!("{} is already declared", v.name)),
                None => members.push(Member {
                    name: v.name.clone(),
                    kind: if parsable { MemberKind::Parsable } else { MemberKind::Plain },
                    ty,
                    dims: v.dims.len(),
                    is_const: v.is_const,
                    loc: v.loc,
                }),
            }
        }
        self.classes[c].members = members;
    }

    // ---- statements ------------------------------------------------------

    fn scoped(&mut self, s: &ast::Stmt, cx: &mut BodyCx) -> ir::Stmt {
        cx.scopes.push(HashMap::new());
        let out = self.stmt(s, cx);
        cx.scopes.pop();
        out
    }

    fn stmt(&mut self, s: &ast::Stmt, cx: &mut BodyCx) -> ir::Stmt {
        use ast::StmtKind as A;
        use ir::StmtKind as I;
        let kind = match &s.kind {
            A::Decl(d) => I::Decl(Box::new(self.decl(d, cx))),
            A::If { cond, then, els } => {
                let cond = self.cond(cond, cx);
                let then = Box::new(self.scoped(then, cx));
                let els = els.as_ref().map(|e| Box::new(self.scoped(e, cx)));
                I::If { cond, then, els }
            }
            A::Switch { scrutinee, arms } => {
                let t = self.expr(scrutinee, cx);
                if !t.ty.integer() {
                    self.err(Code::TypeError, scrutinee.loc, "switch needs an integer expression");
                }
                cx.breakable += 1;
                cx.scopes.push(HashMap::new());
                let mut seen = HashSet::new();
                let mut out = Vec::new();
                for arm in arms {
                    let mut labels = Vec::new();
                    for l in &arm.labels {
                        match l {
                            ast::CaseLabel::Default => {
                                if !seen.insert(None) {
                                    self.err(Code::SwitchLabel, s.loc, "duplicate default label");
                                }
                                labels.push(Label::Default);
                            }
                            ast::CaseLabel::Case(e) => {
                                let v = self.require_const(e, cx, Code::SwitchLabel, "case label");
                                match v.as_ref().and_then(|v| {
                                    matches!(v, Value::Int(_) | Value::UInt(_)).then(|| v.as_i128()).flatten()
                                }) {
                                    Some(k) => {
                                        if !seen.insert(Some(k)) {
                                            self.err(Code::SwitchLabel, e.loc, format!("duplicate case label {k}"));
                                        }
                                        labels.push(Label::Case(k));
                                    }
                                    None if v.is_some() => {
                                        self.err(Code::SwitchLabel, e.loc, "case label must be an integer constant")
                                    }
                                    None => {}
                                }
                            }
                        }
                    }
                    let body = arm.body.iter().map(|b| self.stmt(b, cx)).collect();
                    out.push(ir::Arm { labels, body });
                }
                cx.scopes.pop();
                cx.breakable -= 1;
                I::Switch { scrutinee: t.e, arms: out }
            }
            A::For { init, cond, step, body } => {
                let init = init.iter().map(|e| self.expr(e, cx).e).collect();
                let cond = cond.as_ref().map(|c| self.cond(c, cx));
                let step = step.iter().map(|e| self.expr(e, cx).e).collect();
                let body = Box::new(self.loop_body(body, cx));
                I::For { init, cond, step, body }
            }
            A::While { cond, body } => {
                let cond = self.cond(cond, cx);
                I::While { cond, body: Box::new(self.loop_body(body, cx)) }
            }
            A::DoWhile { body, cond } => {
                let body = Box::new(self.loop_body(body, cx));
                I::DoWhile { body, cond: self.cond(cond, cx) }
            }
            A::Expr(e) => I::Expr(self.expr(e, cx).e),
            A::Block(b) => {
                cx.scopes.push(HashMap::new());
                let out = b.iter().map(|x| self.stmt(x, cx)).collect();
                cx.scopes.pop();
                I::Block(out)
            }
            A::Break => {
                if cx.loops + cx.breakable == 0 {
                    self.err(Code::BreakOutside, s.loc, "break outside a loop or switch");
                }
                I::Break
            }
            A::Continue => {
                if cx.loops == 0 {
                    self.err(Code::BreakOutside, s.loc, "continue outside a loop");
                }
                I::Continue
            }
            A::Pragma(p) => {
                self.pragma(p, s.loc);
                I::Empty
            }
            A::Empty | A::Verbatim(_) => I::Empty,
        };
        ir::Stmt { kind, loc: s.loc }
    }

    fn loop_body(&mut self, body: &ast::Stmt, cx: &mut BodyCx) -> ir::Stmt {
        cx.loops += 1;
        let out = self.scoped(body, cx);
        cx.loops -= 1;
        out
    }

    fn cond(&mut self, e: &Expr, cx: &BodyCx) -> Expr {
        let t = self.expr(e, cx);
        if !matches!(t.ty, Ty::Bool | Ty::Any) {
            self.err(Code::NotBoolean, e.loc, "condition must be a boolean expression");
        }
        t.e
    }

    // ---- declarations ----------------------------------------------------

    fn decl(&mut self, d: &VarDecl, cx: &mut BodyCx) -> ir::Decl {
        let ty = self.resolve_type(&d.ty, d.loc);
        let known = ty.is_some();
        let ty = ty.unwrap_or(VarType::Scalar(ScalarType::Int { sign_extend: false }));
        let parsable = self.decl_parsable(d);
        let member = parsable || cx.scopes.is_empty();

        if let VarType::Class(k) = ty {
            if self.classes[k].is_abstract && self.classes[k].family.is_none() {
                let msg =
                    format!("abstract class {} has no object IDs and cannot be instantiated", self.classes[k].name);
                self.err(Code::AbstractInstance, d.loc, msg);
            }
        }

        let order = d.byte_order.unwrap_or(ByteOrder::Big);
        let parse = d.parse.as_ref().and_then(|p| self.parse_spec(p, d, ty, order, cx));
        if let Some(p) = &parse {
            if p.lookahead && (matches!(p.size, ParseSize::Map(_)) || !d.dims.is_empty()) {
                self.err(Code::BadLookahead, d.loc, "look-ahead applies to scalar fields with a numeric parse size");
            }
        }
        let align = d.aligned.as_ref().and_then(|a| {
            if !parsable {
                self.err(Code::TypeError, d.loc, format!("alignment applies to parsable variables only ({})", d.name));
                return None;
            }
            match &a.length {
                None => Some(Align::Fixed(8)),
                Some(e) => {
                    let t = self.expr(e, cx);
                    if !t.ty.integer() {
                        self.err(Code::TypeError, e.loc, "alignment must be an integer");
                    }
                    match &t.e.kind {
                        ExprKind::Const(v) => match positive_u32(v) {
                            Some(n) => Some(Align::Fixed(n)),
                            None => {
                                self.err(
                                    Code::ParseSizeRange,
                                    e.loc,
                                    format!("alignment {v} must be a positive bit count"),
                                );
                                None
                            }
                        },
                        _ => Some(Align::Dynamic(t.e)),
                    }
                }
            }
        });

        let mut dims = Vec::new();
        for (i, dim) in d.dims.iter().enumerate() {
            let t = self.expr(&dim.size, cx);
            if !t.ty.integer() {
                self.err(Code::TypeError, dim.size.loc, "array size must be an integer");
            }
            if let ExprKind::Const(v) = &t.e.kind {
                if v.as_i128().is_some_and(|n| n < 0) && !dim.partial {
                    self.err(Code::TypeError, dim.size.loc, format!("negative array size {v}"));
                }
            }
            if dim.partial && !parsable {
                self.err(Code::BadPartial, dim.size.loc, "partial arrays apply to parsable variables only");
            } else if dim.partial && i > 0 && !d.dims[i - 1].partial {
                self.err(Code::BadPartial, dim.size.loc, "partial dimensions must precede full ones");
            }
            dims.push(DimSpec { size: t.e, partial: dim.partial });
        }

        let args = self.args(d, ty, cx);
        let init = self.init(d, ty, parsable, &dims, cx);

        if !member {
            let scope = cx.scopes.last_mut().expect("nested scope");
            if scope.contains_key(&d.name) {
                self.err(Code::Redeclared, d.loc, format!("{} is already declared in this scope", d.name));
            } else {
                scope.insert(
                    d.name.clone(),
                    Local { ty: if known { var_ty(ty, d.dims.len()) } else { Ty::Any }, is_const: d.is_const },
                );
            }
        } else if !parsable {
            cx.declared.insert(d.name.clone());
        }

        ir::Decl {
            name: d.name.clone(),
            ty,
            member,
            parsable,
            is_const: d.is_const,
            parse,
            align,
            order,
            dims,
            args,
            init,
            array_cap: self.pragma.array,
            loc: d.loc,
        }
    }

    fn parse_spec(
        &mut self,
        p: &ast::ParseSpec,
        d: &VarDecl,
        ty: VarType,
        order: ByteOrder,
        cx: &BodyCx,
    ) -> Option<Parse> {
        if let Some(n) = p.size.as_name() {
            if let (None, Some(&m)) = (self.resolve(n, cx), self.map_ids.get(n)) {
                self.check_map_type(m, n, ty, d);
                return Some(Parse { size: ParseSize::Map(m), lookahead: p.lookahead });
            }
        }
        if let VarType::Class(k) = ty {
            let msg = format!("object {} of class {} can only take a map as parse size", d.name, self.classes[k].name);
            self.err(Code::TypeError, p.size.loc, msg);
            return None;
        }
        let VarType::Scalar(st) = ty else { unreachable!() };
        let t = self.expr(&p.size, cx);
        if !t.ty.integer() {
            self.err(Code::TypeError, p.size.loc, "parse size must be an integer");
            return None;
        }
        let size = match &t.e.kind {
            ExprKind::Const(v) => {
                let n = v.as_i128().unwrap_or(-1);
                if !(0..=MAX_FIELD_BITS as i128).contains(&n) {
                    self.err(Code::ParseSizeRange, p.size.loc, format!("parse size {v} outside 0..={MAX_FIELD_BITS}"));
                    return None;
                }
                let n = n as u32;
                let want = match st {
                    ScalarType::Float => Some(32),
                    ScalarType::Double => Some(64),
                    _ => None,
                };
                if let Some(w) = want {
                    if n != 0 && n != w {
                        self.err(
                            Code::FloatSize,
                            p.size.loc,
                            format!("{} parse size must be {w}, not {n}", st.keyword()),
                        );
                        return None;
                    }
                }
                if order == ByteOrder::Little && !n.is_multiple_of(8) {
                    self.err(
                        Code::LittleEndianWidth,
                        d.loc,
                        format!("little-endian field needs a multiple of 8 bits, not {n}"),
                    );
                }
                if n == 0 {
                    ParseSize::Zero
                } else {
                    ParseSize::Fixed(n)
                }
            }
            _ if st.is_float() => {
                self.err(Code::FloatSize, p.size.loc, format!("{} parse size must be a constant", st.keyword()));
                return None;
            }
            _ => ParseSize::Dynamic(t.e),
        };
        Some(Parse { size, lookahead: p.lookahead })
    }

    fn check_map_type(&mut self, m: usize, name: &str, ty: VarType, d: &VarDecl) {
        let Some(out) = self.map_outputs.get(m).cloned().flatten() else { return };
        let ok = match (&out, ty) {
            (OutputType::Scalar(o), VarType::Scalar(v)) | (OutputType::Array { elem: o, .. }, VarType::Scalar(v)) => {
                o.is_float() == v.is_float()
            }
            (OutputType::Class { name: o, .. }, VarType::Class(k)) => *o == self.classes[k].name,
            _ => false,
        };
        if !ok {
            let vt = type_str(&d.ty);
            self.err(Code::MapTypeMismatch, d.loc, format!("{} of type {vt} cannot hold values of map {name}", d.name));
        }
    }

    fn args(&mut self, d: &VarDecl, ty: VarType, cx: &BodyCx) -> Vec<Expr> {
        let given = d.args.as_deref().unwrap_or_default();
        let VarType::Class(k) = ty else {
            if d.args.is_some() {
                self.err(Code::ParamMismatch, d.loc, format!("{} is not an object and takes no arguments", d.name));
            }
            return Vec::new();
        };
        let params = self.classes[k].params.clone();
        let cname = self.classes[k].name.clone();
        let typed: Vec<Typed> = given.iter().map(|a| self.expr(a, cx)).collect();
        if typed.len() != params.len() {
            self.err(
                Code::ParamMismatch,
                d.loc,
                format!("class {cname} expects {} arguments, found {}", params.len(), typed.len()),
            );
            return typed.into_iter().map(|t| t.e).collect();
        }
        for (i, (t, p)) in typed.iter().zip(&params).enumerate() {
            if !self.param_compatible(&t.ty, p) {
                self.err(
                    Code::ParamMismatch,
                    given[i].loc,
                    format!("argument {} of {cname} does not match parameter {}", i + 1, p.name),
                );
            }
        }
        typed.into_iter().map(|t| t.e).collect()
    }

    fn param_compatible(&self, t: &Ty, p: &ParamInfo) -> bool {
        let elem_ok = |t: &Ty| match (t, p.ty) {
            (Ty::Any, _) => true,
            (Ty::Num { .. } | Ty::Bool, VarType::Scalar(_)) => true,
            (Ty::Class(a), VarType::Class(b)) => self.derives(*a, b),
            _ => false,
        };
        match t {
            Ty::Any => true,
            Ty::Array(el, n) => p.dims == *n && elem_ok(el),
            _ => p.dims == 0 && elem_ok(t),
        }
    }

    fn init(&mut self, d: &VarDecl, ty: VarType, parsable: bool, dims: &[DimSpec], cx: &BodyCx) -> Option<InitSpec> {
        let Some(init) = &d.init else {
            if d.is_const {
                self.err(Code::BadInitializer, d.loc, format!("const {} needs an initializer", d.name));
            }
            return None;
        };
        if let VarType::Class(_) = ty {
            self.err(Code::BadInitializer, d.loc, format!("object {} cannot have an initializer", d.name));
            return None;
        }
        let is_char = matches!(ty, VarType::Scalar(ScalarType::Char { .. }));
        let partial = dims.iter().any(|x| x.partial);
        match init {
            Init::Expr(Expr { kind: ExprKind::Lit(Literal::Str(s)), loc }) => {
                if !is_char || dims.len() != 1 || partial {
                    self.err(Code::StringInit, *loc, "string initializer needs a one-dimensional char array");
                    return None;
                }
                if let Some(n) = const_size(&dims[0]) {
                    if n != s.len() as u64 && n != s.len() as u64 + 1 {
                        self.err(
                            Code::StringInit,
                            *loc,
                            format!("string of length {} does not fit an array of {n}", s.len()),
                        );
                    }
                }
                Some(InitSpec::Str(s.clone()))
            }
            Init::Expr(e) => {
                let t = self.expr(e, cx);
                if !t.ty.numeric() {
                    self.err(Code::TypeError, e.loc, "initializer must be a number");
                }
                Some(InitSpec::Expr(t.e))
            }
            Init::List(items) => {
                if dims.is_empty() || partial {
                    self.err(Code::BadInitializer, d.loc, format!("brace initializer needs a full array ({})", d.name));
                    return None;
                }
                self.init_list(items, dims, parsable, is_char, d.loc, cx)
            }
        }
    }

    fn init_list(
        &mut self,
        items: &[Init],
        dims: &[DimSpec],
        parsable: bool,
        is_char: bool,
        loc: Loc,
        cx: &BodyCx,
    ) -> Option<InitSpec> {
        if let Some(n) = const_size(&dims[0]) {
            let m = items.len() as u64;
            if (parsable && m != n) || m > n {
                self.err(Code::BadInitializer, loc, format!("{m} values for an array of {n}"));
            }
        }
        let mut out = Vec::new();
        for it in items {
            let x = match it {
                Init::List(sub) if dims.len() > 1 => self.init_list(sub, &dims[1..], parsable, is_char, loc, cx)?,
                Init::List(_) => {
                    self.err(Code::BadInitializer, loc, "too many braces in initializer");
                    return None;
                }
                Init::Expr(Expr { kind: ExprKind::Lit(Literal::Str(s)), .. }) if dims.len() == 2 && is_char => {
                    InitSpec::Str(s.clone())
                }
                Init::Expr(e) if dims.len() == 1 => {
                    let t = self.expr(e, cx);
                    if !t.ty.numeric() {
                        self.err(Code::TypeError, e.loc, "initializer must be a number");
                    }
                    InitSpec::Expr(t.e)
                }
                Init::Expr(e) => {
                    self.err(Code::BadInitializer, e.loc, "nested array rows need braces");
                    return None;
                }
            };
            out.push(x);
        }
        Some(InitSpec::List(out))
    }

    // ---- expressions -----------------------------------------------------

    fn resolve(&self, name: &str, cx: &BodyCx) -> Option<Res> {
        for s in cx.scopes.iter().rev() {
            if let Some(l) = s.get(name) {
                return Some(Res::Local(l.ty.clone(), l.is_const));
            }
        }
        if let Some(c) = cx.class {
            if let Some((owner, m)) = self.find_member(c, name) {
                let visible = owner != c || m.kind != MemberKind::Plain || cx.declared.contains(name);
                if visible {
                    return Some(Res::Member(m.kind, var_ty(m.ty, m.dims), m.is_const));
                }
            }
        }
        self.constants.get(name).map(|v| Res::Global(v.clone()))
    }

    fn value_ty(&self, v: &Value) -> Ty {
        match v {
            Value::Int(_) | Value::UInt(_) => Ty::Num { float: false },
            Value::Float(_) => Ty::Num { float: true },
            Value::Array(a) => {
                let el = a
                    .elems
                    .iter()
                    .flatten()
                    .next()
                    .map(|e| self.value_ty(&e.value))
                    .unwrap_or(Ty::Num { float: false });
                match el {
                    Ty::Array(b, n) => Ty::Array(b, n + 1),
                    t => Ty::Array(Box::new(t), 1),
                }
            }
            Value::Object(o) => self.class_ids.get(&o.class).map_or(Ty::Any, |&c| Ty::Class(c)),
        }
    }

    fn check_assignable(&mut self, t: &Typed, loc: Loc) {
        let Some(p) = &t.place else {
            if t.ty != Ty::Any {
                self.err(Code::NotLvalue, loc, "expression cannot be assigned");
            }
            return;
        };
        match p.kind {
            PlaceKind::Member(MemberKind::Parsable | MemberKind::Id) => {
                self.err(Code::ParsableAssigned, loc, format!("parsable variable {} cannot be assigned", p.name))
            }
            PlaceKind::Member(MemberKind::Param) => {
                self.err(Code::ConstAssigned, loc, format!("parameter {} is read-only", p.name))
            }
            PlaceKind::Global => self.err(Code::ConstAssigned, loc, format!("constant {} cannot be assigned", p.name)),
            _ if p.is_const => self.err(Code::ConstAssigned, loc, format!("const {} cannot be assigned", p.name)),
            _ => {
                if matches!(t.ty, Ty::Array(..) | Ty::Class(_)) {
                    self.err(Code::TypeError, loc, format!("cannot assign to array or object {}", p.name));
                }
            }
        }
    }

    fn expr(&mut self, e: &Expr, cx: &BodyCx) -> Typed {
        let loc = e.loc;
        let mk = |kind| Expr::new(kind, loc);
        let mut out = match &e.kind {
            ExprKind::Lit(Literal::Str(_)) => {
                self.err(Code::StringInit, loc, "string literals are only allowed as char array initializers");
                Typed { e: e.clone(), ty: Ty::Any, place: None }
            }
            ExprKind::Lit(l) => {
                let v = l.value().expect("scalar literal");
                let ty = match l {
                    Literal::Bool(_) => Ty::Bool,
                    _ => self.value_ty(&v),
                };
                Typed { e: mk(ExprKind::Const(v)), ty, place: None }
            }
            ExprKind::Const(v) => Typed { e: e.clone(), ty: self.value_ty(v), place: None },
            ExprKind::Name(n) => match self.resolve(n, cx) {
                Some(Res::Global(v)) => Typed {
                    ty: self.value_ty(&v),
                    e: mk(ExprKind::Const(v)),
                    place: Some(Place { name: n.clone(), kind: PlaceKind::Global, is_const: true }),
                },
                Some(Res::Local(ty, c)) => Typed {
                    e: e.clone(),
                    ty,
                    place: Some(Place { name: n.clone(), kind: PlaceKind::Local, is_const: c }),
                },
                Some(Res::Member(k, ty, c)) => Typed {
                    e: e.clone(),
                    ty,
                    place: Some(Place { name: n.clone(), kind: PlaceKind::Member(k), is_const: c }),
                },
                None => {
                    if self.map_ids.contains_key(n) {
                        self.err(Code::TypeError, loc, format!("map {n} cannot be used as a value"));
                    } else if self.class_ids.contains_key(n) {
                        self.err(Code::TypeError, loc, format!("class {n} cannot be used as a value"));
                    } else {
                        self.err(Code::Undefined, loc, format!("{n} is not declared"));
                    }
                    Typed { e: e.clone(), ty: Ty::Any, place: None }
                }
            },
            ExprKind::Index(b, i) => {
                let tb = self.expr(b, cx);
                let ti = self.expr(i, cx);
                if !ti.ty.integer() {
                    self.err(Code::TypeError, i.loc, "array index must be an integer");
                }
                let ty = match &tb.ty {
                    Ty::Array(el, 1) => (**el).clone(),
                    Ty::Array(el, n) => Ty::Array(el.clone(), n - 1),
                    Ty::Any => Ty::Any,
                    _ => {
                        self.err(Code::TypeError, loc, "indexing a value that is not an array");
                        Ty::Any
                    }
                };
                Typed { e: mk(ExprKind::Index(Box::new(tb.e), Box::new(ti.e))), ty, place: tb.place }
            }
            ExprKind::Member(b, f) => {
                let tb = self.expr(b, cx);
                let (ty, place) = match &tb.ty {
                    Ty::Class(k) => match self.find_member(*k, f) {
                        Some((_, m)) => (
                            var_ty(m.ty, m.dims),
                            Some(Place { name: f.clone(), kind: PlaceKind::Member(m.kind), is_const: m.is_const }),
                        ),
                        None => {
                            let cname = self.classes[*k].name.clone();
                            self.err(Code::NotMember, loc, format!("{f} not a class member of {cname}"));
                            (Ty::Any, None)
                        }
                    },
                    Ty::Any => (Ty::Any, None),
                    _ => {
                        self.err(Code::TypeError, loc, format!("member access .{f} on a value that is not an object"));
                        (Ty::Any, None)
                    }
                };
                Typed { e: mk(ExprKind::Member(Box::new(tb.e), f.clone())), ty, place }
            }
            ExprKind::Unary(op, x) => {
                let tx = self.expr(x, cx);
                let ty = match op {
                    UnOp::Not => {
                        if !tx.ty.numeric() {
                            self.err(Code::TypeError, loc, "'!' needs a numeric operand");
                        }
                        Ty::Bool
                    }
                    UnOp::BitNot => {
                        if !tx.ty.integer() {
                            self.err(Code::TypeError, loc, "'~' needs an integer operand");
                        }
                        Ty::Num { float: false }
                    }
                    UnOp::Neg | UnOp::Plus => {
                        if !tx.ty.numeric() {
                            self.err(Code::TypeError, loc, format!("'{}' needs a numeric operand", op.symbol()));
                        }
                        Ty::Num { float: tx.ty.float() }
                    }
                };
                Typed { e: mk(ExprKind::Unary(*op, Box::new(tx.e))), ty, place: None }
            }
            ExprKind::IncDec { prefix, increment, target } => {
                let t = self.expr(target, cx);
                self.check_assignable(&t, loc);
                if !t.ty.numeric() {
                    self.err(Code::TypeError, loc, "increment needs a numeric variable");
                }
                let ty = t.ty.clone();
                Typed {
                    e: mk(ExprKind::IncDec { prefix: *prefix, increment: *increment, target: Box::new(t.e) }),
                    ty,
                    place: None,
                }
            }
            ExprKind::Binary(op, a, b) => {
                let ta = self.expr(a, cx);
                let tb = self.expr(b, cx);
                let ty = self.binary_ty(*op, &ta.ty, &tb.ty, loc);
                Typed { e: mk(ExprKind::Binary(*op, Box::new(ta.e), Box::new(tb.e))), ty, place: None }
            }
            ExprKind::Assign(op, l, r) => {
                let tl = self.expr(l, cx);
                let tr = self.expr(r, cx);
                self.check_assignable(&tl, loc);
                if !tr.ty.numeric() {
                    self.err(Code::TypeError, r.loc, "only numbers can be assigned");
                }
                if let Some(op) = op {
                    self.binary_ty(*op, &tl.ty, &tr.ty, loc);
                }
                let ty = tl.ty.clone();
                Typed { e: mk(ExprKind::Assign(*op, Box::new(tl.e), Box::new(tr.e))), ty, place: None }
            }
            ExprKind::Ternary(c, a, b) => {
                let tc = self.expr(c, cx);
                if !tc.ty.numeric() {
                    self.err(Code::TypeError, c.loc, "condition must be numeric");
                }
                let ta = self.expr(a, cx);
                let tb = self.expr(b, cx);
                let ty = match (&ta.ty, &tb.ty) {
                    (Ty::Bool, Ty::Bool) => Ty::Bool,
                    (x, y) if x.numeric() && y.numeric() => Ty::Num { float: x.float() || y.float() },
                    (x, _) => x.clone(),
                };
                Typed { e: mk(ExprKind::Ternary(Box::new(tc.e), Box::new(ta.e), Box::new(tb.e))), ty, place: None }
            }
            ExprKind::Lengthof(t) => {
                let tt = self.expr(t, cx);
                let path = matches!(t.kind, ExprKind::Name(_) | ExprKind::Index(..) | ExprKind::Member(..));
                let ok = path
                    && matches!(
                        tt.place.as_ref().map(|p| p.kind),
                        Some(PlaceKind::Member(MemberKind::Parsable | MemberKind::Id))
                    );
                if !ok && tt.ty != Ty::Any {
                    self.err(Code::LengthofTarget, loc, "lengthof needs a parsable variable");
                }
                Typed { e: mk(ExprKind::Lengthof(Box::new(tt.e))), ty: Ty::Num { float: false }, place: None }
            }
            ExprKind::Isidof(cn, x) => {
                let tx = self.expr(x, cx);
                if !tx.ty.integer() {
                    self.err(Code::TypeError, x.loc, "isidof needs an integer value");
                }
                match self.class_ids.get(cn) {
                    None => self.err(Code::UnknownType, loc, format!("unknown class {cn}")),
                    Some(&k) if self.classes[k].family.is_none() => {
                        self.err(Code::IsidofNoIds, loc, format!("class {cn} has no object IDs"))
                    }
                    _ => {}
                }
                Typed { e: mk(ExprKind::Isidof(cn.clone(), Box::new(tx.e))), ty: Ty::Num { float: false }, place: None }
            }
        };
        fold_node(&mut out.e);
        out
    }

    fn binary_ty(&mut self, op: BinOp, a: &Ty, b: &Ty, loc: Loc) -> Ty {
        use BinOp::*;
        if !a.numeric() || !b.numeric() {
            self.err(Code::TypeError, loc, format!("'{}' needs numeric operands", op.symbol()));
            return Ty::Any;
        }
        match op {
            _ if op.is_boolean() => Ty::Bool,
            Rem | Shl | Shr | BitAnd | BitOr | BitXor => {
                if !a.integer() || !b.integer() {
                    self.err(Code::TypeError, loc, format!("'{}' needs integer operands", op.symbol()));
                }
                Ty::Num { float: false }
            }
            _ => Ty::Num { float: a.float() || b.float() },
        }
    }
}

fn zero_array(st: ScalarType, dims: &[usize]) -> Value {
    let vals: Vec<Value> =
        (0..dims[0]).map(|_| if dims.len() == 1 { st.default_value() } else { zero_array(st, &dims[1..]) }).collect();
    let mut a = ArrayValue::dense(vals);
    a.char_elems = dims.len() == 1 && matches!(st, ScalarType::Char { .. });
    Value::Array(a)
}

fn positive_u32(v: &Value) -> Option<u32> {
    v.as_i128().filter(|&n| n > 0 && n <= u32::MAX as i128).map(|n| n as u32)
}

fn const_size(d: &DimSpec) -> Option<u64> {
    match &d.size.kind {
        ExprKind::Const(v) => v.as_index(),
        _ => None,
    }
}

/// Calls `f` on every declaration with its nesting depth (0 = top-level).
pub(super) fn walk_decls<'a>(stmts: &'a [ast::Stmt], depth: usize, f: &mut dyn FnMut(&'a VarDecl, usize)) {
    for s in stmts {
        walk_stmt(s, depth, f);
    }
}

fn walk_stmt<'a>(s: &'a ast::Stmt, depth: usize, f: &mut dyn FnMut(&'a VarDecl, usize)) {
    if let ast::StmtKind::Decl(d) = &s.kind {
        f(d, depth);
    }
    s.for_each_child(&mut |c| walk_stmt(c, depth + 1, f));
}

/// The operator error that kept a constant subtree from folding.
fn const_error(e: &Expr) -> Option<OpError> {
    let is_const = |x: &Expr| matches!(x.kind, ExprKind::Const(_));
    match &e.kind {
        ExprKind::Unary(op, x) => match &x.kind {
            ExprKind::Const(v) => unary(*op, v).err(),
            _ => const_error(x),
        },
        ExprKind::Binary(op, a, b) => {
            if let (ExprKind::Const(x), ExprKind::Const(y)) = (&a.kind, &b.kind) {
                return binary(*op, x, y).err();
            }
            const_error(a).or_else(|| if is_const(a) || !is_const(b) { const_error(b) } else { None })
        }
        ExprKind::Ternary(c, a, b) => const_error(c).or_else(|| const_error(a)).or_else(|| const_error(b)),
        ExprKind::Index(a, i) => const_error(a).or_else(|| const_error(i)),
        _ => None,
    }
}

/// Folds `e` if its children are constants.
pub(super) fn fold_node(e: &mut Expr) {
    if let ExprKind::Ternary(c, _, _) = &e.kind {
        if let ExprKind::Const(v) = &c.kind {
            if let Ok(t) = v.truthy() {
                let ExprKind::Ternary(_, a, b) = mem::replace(&mut e.kind, ExprKind::Const(Value::Int(0))) else {
                    unreachable!()
                };
                *e = if t { *a } else { *b };
            }
        }
        return;
    }
    let folded = match &e.kind {
        ExprKind::Lit(l) => l.value(),
        ExprKind::Unary(op, x) => match &x.kind {
            ExprKind::Const(v) => unary(*op, v).ok(),
            _ => None,
        },
        ExprKind::Binary(op, a, b) => match (&a.kind, &b.kind) {
            (ExprKind::Const(x), ExprKind::Const(y)) => binary(*op, x, y).ok(),
            (ExprKind::Const(x), _) if *op == BinOp::And && x.truthy() == Ok(false) => Some(Value::bool(false)),
            (ExprKind::Const(x), _) if *op == BinOp::Or && x.truthy() == Ok(true) => Some(Value::bool(true)),
            _ => None,
        },
        ExprKind::Index(a, i) => match (&a.kind, &i.kind) {
            (ExprKind::Const(Value::Array(arr)), ExprKind::Const(iv)) => {
                iv.as_index().and_then(|k| arr.get(k as usize)).map(|el| el.value.clone())
            }
            _ => None,
        },
        _ => None,
    };
    if let Some(v) = folded {
        e.kind = ExprKind::Const(v);
    }
}

pub(super) fn fold_expr(e: &mut Expr) {
    match &mut e.kind {
        ExprKind::Index(a, b) | ExprKind::Binary(_, a, b) | ExprKind::Assign(_, a, b) => {
            fold_expr(a);
            fold_expr(b);
        }
        ExprKind::Member(a, _) | ExprKind::Unary(_, a) | ExprKind::Lengthof(a) | ExprKind::Isidof(_, a) => fold_expr(a),
        ExprKind::IncDec { target, .. } => fold_expr(target),
        ExprKind::Ternary(c, a, b) => {
            fold_expr(c);
            fold_expr(a);
            fold_expr(b);
        }
        _ => {}
    }
    fold_node(e);
}

pub(super) fn fold_stmt(s: &mut ir::Stmt) {
    use ir::StmtKind as I;
    match &mut s.kind {
        I::Decl(d) => {
            if let Some(Parse { size: ParseSize::Dynamic(e), .. }) = &mut d.parse {
                fold_expr(e);
            }
            if let Some(Align::Dynamic(e)) = &mut d.align {
                fold_expr(e);
            }
            d.dims.iter_mut().for_each(|x| fold_expr(&mut x.size));
            d.args.iter_mut().for_each(fold_expr);
            if let Some(i) = &mut d.init {
                fold_init(i);
            }
        }
        I::If { cond, then, els } => {
            fold_expr(cond);
            fold_stmt(then);
            if let Some(e) = els {
                fold_stmt(e);
            }
        }
        I::Switch { scrutinee, arms } => {
            fold_expr(scrutinee);
            arms.iter_mut().flat_map(|a| &mut a.body).for_each(fold_stmt);
        }
        I::For { init, cond, step, body } => {
            init.iter_mut().chain(step.iter_mut()).chain(cond.iter_mut()).for_each(fold_expr);
            fold_stmt(body);
        }
        I::While { cond, body } | I::DoWhile { body, cond } => {
            fold_expr(cond);
            fold_stmt(body);
        }
        I::Expr(e) => fold_expr(e),
        I::Block(b) => b.iter_mut().for_each(fold_stmt),
        I::Break | I::Continue | I::Empty => {}
    }
}

fn fold_init(i: &mut InitSpec) {
    match i {
        InitSpec::Expr(e) => fold_expr(e),
        InitSpec::List(l) => l.iter_mut().for_each(fold_init),
        InitSpec::Str(_) => {}
    }
}
