//! Syntax tree produced by the parser.
//!
//! Every node carries a [`Loc`], which is ignored by equality, so trees
//! produced from differently formatted but equivalent sources compare equal.

use crate::bitio::ByteOrder;
use crate::source::Loc;
use crate::value::{BinOp, UnOp, Value};
use crate::vlcmap::BitString;

pub use super::lexer::{Lang, Placement, PragmaSetting, PragmaValue, Radix, Verbatim};

/// Which file a top-level item came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Origin {
    Main,
    Included,
    Imported,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Ast {
    pub items: Vec<Item>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Item {
    pub kind: ItemKind,
    pub origin: Origin,
    pub loc: Loc,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ItemKind {
    /// Global declaration; only constants pass semantic analysis.
    Decl(VarDecl),
    Class(ClassDecl),
    Map(MapDecl),
    Pragma(Vec<PragmaSetting>),
    Verbatim(Verbatim),
    /// Unresolved `%include`; replaced by the included items during
    /// include resolution.
    Include(String),
    Import(String),
}

impl Ast {
    pub fn constants(&self) -> impl Iterator<Item = &VarDecl> {
        self.items.iter().filter_map(|i| match &i.kind {
            ItemKind::Decl(d) => Some(d),
            _ => None,
        })
    }

    pub fn classes(&self) -> impl Iterator<Item = &ClassDecl> {
        self.items.iter().filter_map(|i| match &i.kind {
            ItemKind::Class(c) => Some(c),
            _ => None,
        })
    }

    pub fn maps(&self) -> impl Iterator<Item = &MapDecl> {
        self.items.iter().filter_map(|i| match &i.kind {
            ItemKind::Map(m) => Some(m),
            _ => None,
        })
    }

    /// Every pragma in lexical order, including those inside class bodies.
    pub fn pragma_events(&self) -> Vec<(Loc, &PragmaSetting)> {
        fn walk<'a>(s: &'a Stmt, out: &mut Vec<(Loc, &'a PragmaSetting)>) {
            s.for_each_child(&mut |c| walk(c, out));
            if let StmtKind::Pragma(p) = &s.kind {
                out.extend(p.iter().map(|x| (s.loc, x)));
            }
        }
        let mut out = Vec::new();
        for item in &self.items {
            match &item.kind {
                ItemKind::Pragma(p) => out.extend(p.iter().map(|x| (item.loc, x))),
                ItemKind::Class(c) => c.body.iter().for_each(|s| walk(s, &mut out)),
                _ => {}
            }
        }
        out
    }

    /// Verbatim blocks with the class they appear in (`None` for global).
    pub fn verbatims(&self) -> Vec<(Option<&str>, &Verbatim)> {
        fn walk<'a>(class: &'a str, s: &'a Stmt, out: &mut Vec<(Option<&'a str>, &'a Verbatim)>) {
            s.for_each_child(&mut |c| walk(class, c, out));
            if let StmtKind::Verbatim(v) = &s.kind {
                out.push((Some(class), v));
            }
        }
        let mut out = Vec::new();
        for item in &self.items {
            match &item.kind {
                ItemKind::Verbatim(v) => out.push((None, v)),
                ItemKind::Class(c) => c.body.iter().for_each(|s| walk(&c.name, s, &mut out)),
                _ => {}
            }
        }
        out
    }

    /// Name of the last class declared in the main file.
    pub fn last_main_class(&self) -> Option<&str> {
        self.items.iter().rev().find_map(|i| match &i.kind {
            ItemKind::Class(c) if i.origin == Origin::Main => Some(c.name.as_str()),
            _ => None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Prim {
    Int,
    Char,
    Float,
    Double,
    Bit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Sign {
    #[default]
    Default,
    Signed,
    Unsigned,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Width {
    #[default]
    Normal,
    Short,
    Long,
    LongLong,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum TypeName {
    Prim { prim: Prim, sign: Sign, width: Width },
    Class(String),
}

impl TypeName {
    pub fn prim(prim: Prim) -> Self {
        TypeName::Prim { prim, sign: Sign::Default, width: Width::Normal }
    }

    pub fn is_class(&self) -> bool {
        matches!(self, TypeName::Class(_))
    }
}

/// `aligned` or `aligned(n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Alignment {
    pub length: Option<Expr>,
}

/// Parse length `(size)` with optional look-ahead `*`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParseSpec {
    pub size: Expr,
    pub lookahead: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dim {
    pub size: Expr,
    /// `[[i]]`: declares only element (or row) `i`.
    pub partial: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Init {
    Expr(Expr),
    List(Vec<Init>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarDecl {
    pub aligned: Option<Alignment>,
    pub byte_order: Option<ByteOrder>,
    pub is_const: bool,
    pub ty: TypeName,
    pub parse: Option<ParseSpec>,
    pub name: String,
    pub dims: Vec<Dim>,
    /// Actual parameters for class-typed variables: `SimpleClass a(v)`.
    pub args: Option<Vec<Expr>>,
    pub init: Option<Init>,
    pub loc: Loc,
}

impl VarDecl {
    pub fn is_parsable(&self) -> bool {
        self.parse.is_some()
    }

    pub fn has_partial(&self) -> bool {
        self.dims.iter().any(|d| d.partial)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub ty: TypeName,
    pub name: String,
    /// Declared dimensions; sizes are optional and irrelevant for matching.
    pub dims: Vec<Option<Expr>>,
    pub loc: Loc,
}

#[derive(Debug, Clone, PartialEq)]
pub enum IdValue {
    Single(Expr),
    /// Inclusive range `lo .. hi`.
    Range(Expr, Expr),
}

/// Object identifier declared after the class header.
#[derive(Debug, Clone, PartialEq)]
pub struct IdDecl {
    pub aligned: Option<Alignment>,
    pub byte_order: Option<ByteOrder>,
    pub ty: TypeName,
    pub size: Expr,
    pub name: String,
    pub value: IdValue,
    pub loc: Loc,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassDecl {
    pub aligned: Option<Alignment>,
    pub is_abstract: bool,
    pub name: String,
    pub params: Vec<Param>,
    pub parent: Option<String>,
    pub id: Option<IdDecl>,
    pub body: Vec<Stmt>,
    pub loc: Loc,
}

#[derive(Debug, Clone, PartialEq)]
pub enum MapValue {
    Expr(Expr),
    List(Vec<Expr>),
    /// Escape: parse a further field of the given type and size (which may
    /// name another map).
    Extension {
        ty: TypeName,
        size: Expr,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct MapEntryDecl {
    pub codeword: BitString,
    pub radix: Radix,
    pub value: MapValue,
    pub loc: Loc,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MapDecl {
    pub name: String,
    pub output: TypeName,
    /// Constant element count for array outputs: `map M(int[3])`.
    pub output_len: Option<Expr>,
    pub entries: Vec<MapEntryDecl>,
    pub loc: Loc,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stmt {
    pub kind: StmtKind,
    pub loc: Loc,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CaseLabel {
    Case(Expr),
    Default,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SwitchArm {
    pub labels: Vec<CaseLabel>,
    pub body: Vec<Stmt>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StmtKind {
    Decl(VarDecl),
    If { cond: Expr, then: Box<Stmt>, els: Option<Box<Stmt>> },
    Switch { scrutinee: Expr, arms: Vec<SwitchArm> },
    For { init: Vec<Expr>, cond: Option<Expr>, step: Vec<Expr>, body: Box<Stmt> },
    While { cond: Expr, body: Box<Stmt> },
    DoWhile { body: Box<Stmt>, cond: Expr },
    Expr(Expr),
    Block(Vec<Stmt>),
    Break,
    Continue,
    Empty,
    Pragma(Vec<PragmaSetting>),
    Verbatim(Verbatim),
}

impl Stmt {
    /// Calls `f` on each directly nested statement.
    pub fn for_each_child<'a>(&'a self, f: &mut dyn FnMut(&'a Stmt)) {
        match &self.kind {
            StmtKind::If { then, els, .. } => {
                f(then);
                if let Some(e) = els {
                    f(e);
                }
            }
            StmtKind::Switch { arms, .. } => arms.iter().flat_map(|a| &a.body).for_each(f),
            StmtKind::For { body, .. } | StmtKind::While { body, .. } | StmtKind::DoWhile { body, .. } => f(body),
            StmtKind::Block(b) => b.iter().for_each(f),
            _ => {}
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Literal {
    Int { value: u64, unsigned: bool },
    Bits { value: u64, len: u32, radix: Radix },
    Float(f64),
    Char(u8),
    Str(Vec<u8>),
    Bool(bool),
}

impl Literal {
    /// Runtime value of a scalar literal. String literals have none.
    pub fn value(&self) -> Option<Value> {
        Some(match *self {
            Literal::Int { value, unsigned } => {
                if unsigned || value > i64::MAX as u64 {
                    Value::UInt(value)
                } else {
                    Value::Int(value as i64)
                }
            }
            Literal::Bits { value, .. } if value > i64::MAX as u64 => Value::UInt(value),
            Literal::Bits { value, .. } => Value::Int(value as i64),
            Literal::Float(f) => Value::Float(f),
            Literal::Char(c) => Value::Int(c as i64),
            Literal::Bool(b) => Value::bool(b),
            Literal::Str(_) => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    pub kind: ExprKind,
    pub loc: Loc,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Lit(Literal),
    Name(String),
    Index(Box<Expr>, Box<Expr>),
    Member(Box<Expr>, String),
    Unary(UnOp, Box<Expr>),
    IncDec {
        prefix: bool,
        increment: bool,
        target: Box<Expr>,
    },
    Binary(BinOp, Box<Expr>, Box<Expr>),
    /// `a = b` (op `None`) or a compound assignment such as `a += b`.
    Assign(Option<BinOp>, Box<Expr>, Box<Expr>),
    Ternary(Box<Expr>, Box<Expr>, Box<Expr>),
    Lengthof(Box<Expr>),
    Isidof(String, Box<Expr>),
    /// A value computed by constant folding.
    Const(Value),
}

impl Expr {
    pub fn new(kind: ExprKind, loc: Loc) -> Self {
        Expr { kind, loc }
    }

    pub fn as_name(&self) -> Option<&str> {
        match &self.kind {
            ExprKind::Name(n) => Some(n),
            _ => None,
        }
    }

    /// Root variable name of an lvalue-like path (`a`, `a[i]`, `a.b`).
    pub fn root_name(&self) -> Option<&str> {
        match &self.kind {
            ExprKind::Name(n) => Some(n),
            ExprKind::Index(b, _) | ExprKind::Member(b, _) => b.root_name(),
            _ => None,
        }
    }
}
