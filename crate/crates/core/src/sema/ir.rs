//! Checked, executable form of class bodies.
//!
//! Expressions stay [`Expr`] trees; global constants are substituted and
//! constant subexpressions folded into [`ExprKind::Const`](crate::frontend::ast::ExprKind::Const).

use crate::bitio::ByteOrder;
use crate::frontend::ast::Expr;
use crate::source::Loc;
use crate::value::ScalarType;

pub type ClassId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarType {
    Scalar(ScalarType),
    Class(ClassId),
}

#[derive(Debug, Clone, PartialEq)]
pub enum ParseSize {
    /// `type(0)`: assign the default without bitstream traffic.
    Zero,
    Fixed(u32),
    Dynamic(Expr),
    /// Index into the schema's [`MapSet`](crate::vlcmap::MapSet).
    Map(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Parse {
    pub size: ParseSize,
    pub lookahead: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Align {
    Fixed(u32),
    Dynamic(Expr),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DimSpec {
    pub size: Expr,
    pub partial: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitSpec {
    Expr(Expr),
    List(Vec<InitSpec>),
    Str(Vec<u8>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decl {
    pub name: String,
    pub ty: VarType,
    /// Class member (parsable, or non-parsable at top-level class scope).
    pub member: bool,
    /// Reads or writes bits: has a parse size, or is an object of a
    /// parsable class.
    pub parsable: bool,
    pub is_const: bool,
    pub parse: Option<Parse>,
    pub align: Option<Align>,
    pub order: ByteOrder,
    pub dims: Vec<DimSpec>,
    pub args: Vec<Expr>,
    pub init: Option<InitSpec>,
    /// Array size cap in effect at this declaration.
    pub array_cap: u64,
    pub loc: Loc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Label {
    Case(i128),
    Default,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Arm {
    pub labels: Vec<Label>,
    pub body: Vec<Stmt>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stmt {
    pub kind: StmtKind,
    pub loc: Loc,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StmtKind {
    Decl(Box<Decl>),
    If { cond: Expr, then: Box<Stmt>, els: Option<Box<Stmt>> },
    Switch { scrutinee: Expr, arms: Vec<Arm> },
    For { init: Vec<Expr>, cond: Option<Expr>, step: Vec<Expr>, body: Box<Stmt> },
    While { cond: Expr, body: Box<Stmt> },
    DoWhile { body: Box<Stmt>, cond: Expr },
    Expr(Expr),
    Block(Vec<Stmt>),
    Break,
    Continue,
    Empty,
}
