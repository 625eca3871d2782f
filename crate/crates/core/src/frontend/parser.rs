//! Recursive-descent parser from tokens to [`Ast`].

use crate::bitio::ByteOrder;
use crate::diag::{Code, Diagnostic};
use crate::source::Loc;
use crate::value::{BinOp, UnOp};
use crate::vlcmap::BitString;

use super::ast::*;
use super::lexer::{Keyword as K, Punct as P, Token, TokenKind as T};

/// Limit on statement and expression nesting.
pub const MAX_DEPTH: u32 = 256;

type PResult<T> = Result<T, Diagnostic>;

pub struct Parser {
    toks: Vec<Token>,
    pos: usize,
    depth: u32,
    origin: Origin,
}

fn binop_for(p: P) -> Option<BinOp> {
    Some(match p {
        P::OrOr => BinOp::Or,
        P::AndAnd => BinOp::And,
        P::Pipe => BinOp::BitOr,
        P::Caret => BinOp::BitXor,
        P::Amp => BinOp::BitAnd,
        P::EqEq => BinOp::Eq,
        P::Ne => BinOp::Ne,
        P::Lt => BinOp::Lt,
        P::Gt => BinOp::Gt,
        P::Le => BinOp::Le,
        P::Ge => BinOp::Ge,
        P::Shl => BinOp::Shl,
        P::Shr => BinOp::Shr,
        P::Plus => BinOp::Add,
        P::Minus => BinOp::Sub,
        P::Star => BinOp::Mul,
        P::Slash => BinOp::Div,
        P::Percent => BinOp::Rem,
        _ => return None,
    })
}

fn assign_op(p: P) -> Option<Option<BinOp>> {
    Some(match p {
        P::Assign => None,
        P::PlusAssign => Some(BinOp::Add),
        P::MinusAssign => Some(BinOp::Sub),
        P::StarAssign => Some(BinOp::Mul),
        P::SlashAssign => Some(BinOp::Div),
        P::PercentAssign => Some(BinOp::Rem),
        P::ShlAssign => Some(BinOp::Shl),
        P::ShrAssign => Some(BinOp::Shr),
        P::AmpAssign => Some(BinOp::BitAnd),
        P::PipeAssign => Some(BinOp::BitOr),
        P::CaretAssign => Some(BinOp::BitXor),
        _ => return None,
    })
}

fn describe(t: &Token) -> String {
    match &t.kind {
        T::Eof => "end of file".into(),
        _ => format!("'{}'", t.text),
    }
}

impl Parser {
    pub fn new(toks: Vec<Token>, origin: Origin) -> Self {
        Parser { toks, pos: 0, depth: 0, origin }
    }

    fn peek(&self) -> &Token {
        &self.toks[self.pos.min(self.toks.len() - 1)]
    }

    fn peek_at(&self, k: usize) -> &Token {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)]
    }

    fn loc(&self) -> Loc {
        self.peek().loc
    }

    fn bump(&mut self) -> Token {
        let t = self.peek().clone();
        if self.pos < self.toks.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn at_punct(&self, p: P) -> bool {
        self.peek().is_punct(p)
    }

    fn at_kw(&self, k: K) -> bool {
        self.peek().is_keyword(k)
    }

    fn eat_punct(&mut self, p: P) -> bool {
        if self.at_punct(p) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, k: K) -> bool {
        if self.at_kw(k) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn error(&self, msg: impl Into<String>) -> Diagnostic {
        Diagnostic::error(Code::Syntax, self.loc(), msg)
    }

    fn expect_punct(&mut self, p: P) -> PResult<()> {
        if self.eat_punct(p) {
            Ok(())
        } else {
            Err(self.error(format!("expected '{}', found {}", p.as_str(), describe(self.peek()))))
        }
    }

    fn expect_ident(&mut self, what: &str) -> PResult<String> {
        match &self.peek().kind {
            T::Ident(s) => {
                let s = s.clone();
                self.bump();
                Ok(s)
            }
            _ => Err(self.error(format!("expected {what}, found {}", describe(self.peek())))),
        }
    }

    fn enter(&mut self) -> PResult<()> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return Err(Diagnostic::error(
                Code::TooDeep,
                self.loc(),
                format!("nesting deeper than {MAX_DEPTH} levels"),
            ));
        }
        Ok(())
    }

    fn leave(&mut self) {
        self.depth -= 1;
    }

    pub fn parse_unit(mut self) -> PResult<Ast> {
        let mut items = Vec::new();
        while self.peek().kind != T::Eof {
            items.push(self.item()?);
        }
        Ok(Ast { items })
    }

    fn item(&mut self) -> PResult<Item> {
        let loc = self.loc();
        let kind = match &self.peek().kind {
            T::Pragma(p) => {
                let p = p.clone();
                self.bump();
                ItemKind::Pragma(p)
            }
            T::Verbatim(v) => {
                let v = v.clone();
                self.bump();
                ItemKind::Verbatim(v)
            }
            T::Include(f) => {
                let f = f.clone();
                self.bump();
                ItemKind::Include(f)
            }
            T::Import(f) => {
                let f = f.clone();
                self.bump();
                ItemKind::Import(f)
            }
            T::Keyword(K::Map) => ItemKind::Map(self.map_decl()?),
            _ if self.class_ahead() => ItemKind::Class(self.class_decl()?),
            _ => {
                let d = self.var_decl()?;
                self.expect_punct(P::Semi)?;
                ItemKind::Decl(d)
            }
        };
        Ok(Item { kind, origin: self.origin, loc })
    }

    /// Whether the upcoming tokens are `[abstract] [aligned[(..)]] class`.
    fn class_ahead(&self) -> bool {
        let mut i = 0;
        loop {
            let t = self.peek_at(i);
            match &t.kind {
                T::Keyword(K::Class) => return true,
                T::Keyword(K::Abstract) => i += 1,
                T::Keyword(K::Aligned) => {
                    i += 1;
                    if self.peek_at(i).is_punct(P::LParen) {
                        let mut depth = 0;
                        loop {
                            let t = self.peek_at(i);
                            if t.is_punct(P::LParen) {
                                depth += 1;
                            } else if t.is_punct(P::RParen) {
                                depth -= 1;
                                if depth == 0 {
                                    i += 1;
                                    break;
                                }
                            } else if t.kind == T::Eof {
                                return false;
                            }
                            i += 1;
                        }
                    }
                }
                _ => return false,
            }
        }
    }

    fn alignment(&mut self) -> PResult<Option<Alignment>> {
        if !self.eat_kw(K::Aligned) {
            return Ok(None);
        }
        let length = if self.eat_punct(P::LParen) {
            let e = self.expr()?;
            self.expect_punct(P::RParen)?;
            Some(e)
        } else {
            None
        };
        Ok(Some(Alignment { length }))
    }

    fn class_decl(&mut self) -> PResult<ClassDecl> {
        let loc = self.loc();
        let mut is_abstract = false;
        let mut aligned = None;
        loop {
            if self.eat_kw(K::Abstract) {
                is_abstract = true;
            } else if self.at_kw(K::Aligned) {
                aligned = self.alignment()?;
            } else {
                break;
            }
        }
        if !self.eat_kw(K::Class) {
            return Err(self.error("expected 'class'"));
        }
        let name = self.expect_ident("a class name")?;
        let mut params = Vec::new();
        if self.eat_punct(P::LParen) {
            if !self.at_punct(P::RParen) {
                loop {
                    params.push(self.param()?);
                    if !self.eat_punct(P::Comma) {
                        break;
                    }
                }
            }
            self.expect_punct(P::RParen)?;
        }
        let parent = if self.eat_kw(K::Extends) { Some(self.expect_ident("a base class name")?) } else { None };
        let id = if self.eat_punct(P::Colon) { Some(self.id_decl()?) } else { None };
        self.expect_punct(P::LBrace)?;
        let mut body = Vec::new();
        while !self.at_punct(P::RBrace) {
            if self.peek().kind == T::Eof {
                return Err(self.error(format!("missing '}}' to close class {name}")));
            }
            body.push(self.stmt()?);
        }
        self.bump();
        self.eat_punct(P::Semi);
        Ok(ClassDecl { aligned, is_abstract, name, params, parent, id, body, loc })
    }

    fn param(&mut self) -> PResult<Param> {
        let loc = self.loc();
        let ty = self.type_name()?;
        let name = self.expect_ident("a parameter name")?;
        let mut dims = Vec::new();
        while self.eat_punct(P::LBracket) {
            if self.eat_punct(P::RBracket) {
                dims.push(None);
            } else {
                dims.push(Some(self.expr()?));
                self.expect_punct(P::RBracket)?;
            }
        }
        Ok(Param { ty, name, dims, loc })
    }

    fn byte_order(&mut self) -> Option<ByteOrder> {
        if self.eat_kw(K::Little) {
            Some(ByteOrder::Little)
        } else if self.eat_kw(K::Big) {
            Some(ByteOrder::Big)
        } else {
            None
        }
    }

    fn id_decl(&mut self) -> PResult<IdDecl> {
        let loc = self.loc();
        let mut aligned = None;
        let mut byte_order = None;
        loop {
            if self.at_kw(K::Aligned) {
                aligned = self.alignment()?;
            } else if let Some(o) = self.byte_order() {
                byte_order = Some(o);
            } else if self.at_kw(K::Const) {
                // IDs are constant anyway
                self.bump();
            } else {
                break;
            }
        }
        let ty = self.type_name()?;
        if !self.eat_punct(P::LParen) {
            return Err(self.error("an object identifier needs a parse size"));
        }
        let size = self.expr()?;
        self.expect_punct(P::RParen)?;
        let name = self.expect_ident("an identifier name")?;
        if !self.eat_punct(P::Assign) {
            return Err(self.error("an object identifier needs a value"));
        }
        let lo = self.ternary()?;
        let value = if self.eat_punct(P::DotDot) { IdValue::Range(lo, self.ternary()?) } else { IdValue::Single(lo) };
        Ok(IdDecl { aligned, byte_order, ty, size, name, value, loc })
    }

    fn at_prim_start(&self) -> bool {
        matches!(
            self.peek().kind,
            T::Keyword(K::Int | K::Char | K::Float | K::Double | K::Bit | K::Signed | K::Unsigned | K::Short | K::Long)
        )
    }

    fn type_name(&mut self) -> PResult<TypeName> {
        if let T::Ident(name) = &self.peek().kind {
            let name = name.clone();
            self.bump();
            return Ok(TypeName::Class(name));
        }
        let loc = self.loc();
        let mut sign = Sign::Default;
        let mut width = Width::Normal;
        let mut prim = None;
        loop {
            match self.peek().kind {
                T::Keyword(K::Signed) if sign == Sign::Default => sign = Sign::Signed,
                T::Keyword(K::Unsigned) if sign == Sign::Default => sign = Sign::Unsigned,
                T::Keyword(K::Short) if width == Width::Normal => width = Width::Short,
                T::Keyword(K::Long) if width == Width::Normal => width = Width::Long,
                T::Keyword(K::Long) if width == Width::Long => width = Width::LongLong,
                T::Keyword(k @ (K::Int | K::Char | K::Float | K::Double | K::Bit)) if prim.is_none() => {
                    prim = Some(match k {
                        K::Int => Prim::Int,
                        K::Char => Prim::Char,
                        K::Float => Prim::Float,
                        K::Double => Prim::Double,
                        _ => Prim::Bit,
                    })
                }
                _ => break,
            }
            self.bump();
        }
        if prim.is_none() && sign == Sign::Default && width == Width::Normal {
            return Err(Diagnostic::error(
                Code::Syntax,
                loc,
                format!("expected a type, found {}", describe(self.peek())),
            ));
        }
        let prim = prim.unwrap_or(Prim::Int);
        let ok = match prim {
            Prim::Int => true,
            Prim::Char => width == Width::Normal,
            Prim::Float | Prim::Bit => sign == Sign::Default && width == Width::Normal,
            Prim::Double => sign == Sign::Default && matches!(width, Width::Normal | Width::Long),
        };
        if !ok {
            return Err(Diagnostic::error(Code::Syntax, loc, "invalid combination of type modifiers"));
        }
        Ok(TypeName::Prim { prim, sign, width })
    }

    fn map_decl(&mut self) -> PResult<MapDecl> {
        let loc = self.loc();
        self.bump();
        let name = self.expect_ident("a map name")?;
        self.expect_punct(P::LParen)?;
        let output = self.type_name()?;
        let output_len = if self.eat_punct(P::LBracket) {
            let e = self.expr()?;
            self.expect_punct(P::RBracket)?;
            Some(e)
        } else {
            None
        };
        self.expect_punct(P::RParen)?;
        self.expect_punct(P::LBrace)?;
        let mut entries = Vec::new();
        while !self.at_punct(P::RBrace) {
            let eloc = self.loc();
            let (codeword, radix) = match self.peek().kind {
                T::Bits { value, len, radix } => {
                    self.bump();
                    (BitString::new(value, len).expect("lexer bounds bit strings"), radix)
                }
                _ => {
                    return Err(Diagnostic::error(
                        Code::CodewordNotBits,
                        eloc,
                        format!("map codeword must be a bit string literal, found {}", describe(self.peek())),
                    ))
                }
            };
            self.expect_punct(P::Comma)?;
            let value = if self.eat_punct(P::LBrace) {
                let mut list = Vec::new();
                if !self.at_punct(P::RBrace) {
                    loop {
                        list.push(self.ternary()?);
                        if !self.eat_punct(P::Comma) {
                            break;
                        }
                    }
                }
                self.expect_punct(P::RBrace)?;
                MapValue::List(list)
            } else if self.at_prim_start() {
                let ty = self.type_name()?;
                self.expect_punct(P::LParen)?;
                let size = self.expr()?;
                self.expect_punct(P::RParen)?;
                MapValue::Extension { ty, size }
            } else {
                MapValue::Expr(self.ternary()?)
            };
            entries.push(MapEntryDecl { codeword, radix, value, loc: eloc });
            if !self.eat_punct(P::Comma) {
                break;
            }
        }
        self.expect_punct(P::RBrace)?;
        self.eat_punct(P::Semi);
        Ok(MapDecl { name, output, output_len, entries, loc })
    }

    fn decl_ahead(&self) -> bool {
        match &self.peek().kind {
            T::Keyword(
                K::Aligned
                | K::Little
                | K::Big
                | K::Const
                | K::Int
                | K::Char
                | K::Float
                | K::Double
                | K::Bit
                | K::Signed
                | K::Unsigned
                | K::Short
                | K::Long,
            ) => true,
            T::Ident(_) => matches!(self.peek_at(1).kind, T::Ident(_) | T::Punct(P::LParen)),
            _ => false,
        }
    }

    fn var_decl(&mut self) -> PResult<VarDecl> {
        let loc = self.loc();
        let mut aligned = None;
        let mut byte_order = None;
        let mut is_const = false;
        loop {
            if self.at_kw(K::Aligned) {
                aligned = self.alignment()?;
            } else if let Some(o) = self.byte_order() {
                byte_order = Some(o);
            } else if self.eat_kw(K::Const) {
                is_const = true;
            } else {
                break;
            }
        }
        let ty = self.type_name()?;
        let parse = if self.eat_punct(P::LParen) {
            let size = self.expr()?;
            self.expect_punct(P::RParen)?;
            let lookahead = self.eat_punct(P::Star);
            Some(ParseSpec { size, lookahead })
        } else {
            None
        };
        let name = self.expect_ident("a variable name")?;
        let mut dims = Vec::new();
        while self.at_punct(P::LBracket) {
            let partial = self.peek_at(1).is_punct(P::LBracket);
            self.bump();
            if partial {
                self.bump();
            }
            let size = self.expr()?;
            self.expect_punct(P::RBracket)?;
            if partial {
                self.expect_punct(P::RBracket)?;
            }
            dims.push(Dim { size, partial });
        }
        let args = if self.at_punct(P::LParen) {
            let ploc = self.loc();
            self.bump();
            let mut args = Vec::new();
            if !self.at_punct(P::RParen) {
                loop {
                    if self.decl_ahead() {
                        return Err(Diagnostic::error(
                            Code::MethodDecl,
                            ploc,
                            format!("'{name}' looks like a method; methods are not part of the language"),
                        ));
                    }
                    args.push(self.ternary()?);
                    if !self.eat_punct(P::Comma) {
                        break;
                    }
                }
            }
            self.expect_punct(P::RParen)?;
            if self.at_punct(P::LBrace) {
                return Err(Diagnostic::error(
                    Code::MethodDecl,
                    ploc,
                    format!("'{name}' looks like a method; methods are not part of the language"),
                ));
            }
            Some(args)
        } else {
            None
        };
        let init = if self.eat_punct(P::Assign) { Some(self.init()?) } else { None };
        Ok(VarDecl { aligned, byte_order, is_const, ty, parse, name, dims, args, init, loc })
    }

    fn init(&mut self) -> PResult<Init> {
        if self.eat_punct(P::LBrace) {
            self.enter()?;
            let mut list = Vec::new();
            if !self.at_punct(P::RBrace) {
                loop {
                    list.push(self.init()?);
                    if !self.eat_punct(P::Comma) || self.at_punct(P::RBrace) {
                        break;
                    }
                }
            }
            self.expect_punct(P::RBrace)?;
            self.leave();
            Ok(Init::List(list))
        } else {
            Ok(Init::Expr(self.assignment()?))
        }
    }

    fn no_decl_in_header(&self) -> PResult<()> {
        if self.decl_ahead() {
            return Err(self.error("declarations are not allowed in flow-control headers"));
        }
        Ok(())
    }

    fn paren_cond(&mut self) -> PResult<Expr> {
        self.expect_punct(P::LParen)?;
        self.no_decl_in_header()?;
        let e = self.expr()?;
        self.expect_punct(P::RParen)?;
        Ok(e)
    }

    fn stmt(&mut self) -> PResult<Stmt> {
        self.enter()?;
        let s = self.stmt_inner();
        self.leave();
        s
    }

    fn stmt_inner(&mut self) -> PResult<Stmt> {
        let loc = self.loc();
        let kind = match &self.peek().kind {
            T::Punct(P::LBrace) => {
                self.bump();
                let mut body = Vec::new();
                while !self.at_punct(P::RBrace) {
                    if self.peek().kind == T::Eof {
                        return Err(self.error("missing '}'"));
                    }
                    body.push(self.stmt()?);
                }
                self.bump();
                StmtKind::Block(body)
            }
            T::Punct(P::Semi) => {
                self.bump();
                StmtKind::Empty
            }
            T::Pragma(p) => {
                let p = p.clone();
                self.bump();
                StmtKind::Pragma(p)
            }
            T::Verbatim(v) => {
                let v = v.clone();
                self.bump();
                StmtKind::Verbatim(v)
            }
            T::Include(_) | T::Import(_) => {
                return Err(self.error("%include and %import are only allowed at global scope"));
            }
            T::Keyword(K::If) => {
                self.bump();
                let cond = self.paren_cond()?;
                let then = Box::new(self.stmt()?);
                let els = if self.eat_kw(K::Else) { Some(Box::new(self.stmt()?)) } else { None };
                StmtKind::If { cond, then, els }
            }
            T::Keyword(K::While) => {
                self.bump();
                let cond = self.paren_cond()?;
                StmtKind::While { cond, body: Box::new(self.stmt()?) }
            }
            T::Keyword(K::Do) => {
                self.bump();
                let body = Box::new(self.stmt()?);
                if !self.eat_kw(K::While) {
                    return Err(self.error("expected 'while' after do body"));
                }
                let cond = self.paren_cond()?;
                self.expect_punct(P::Semi)?;
                StmtKind::DoWhile { body, cond }
            }
            T::Keyword(K::For) => {
                self.bump();
                self.expect_punct(P::LParen)?;
                self.no_decl_in_header()?;
                let init = self.expr_list(P::Semi)?;
                self.expect_punct(P::Semi)?;
                let cond = if self.at_punct(P::Semi) { None } else { Some(self.expr()?) };
                self.expect_punct(P::Semi)?;
                let step = self.expr_list(P::RParen)?;
                self.expect_punct(P::RParen)?;
                StmtKind::For { init, cond, step, body: Box::new(self.stmt()?) }
            }
            T::Keyword(K::Switch) => {
                self.bump();
                let scrutinee = self.paren_cond()?;
                self.expect_punct(P::LBrace)?;
                let mut arms: Vec<SwitchArm> = Vec::new();
                while !self.at_punct(P::RBrace) {
                    let label = if self.eat_kw(K::Case) {
                        let e = self.ternary()?;
                        CaseLabel::Case(e)
                    } else if self.eat_kw(K::Default) {
                        CaseLabel::Default
                    } else if arms.is_empty() {
                        return Err(self.error("expected 'case' or 'default'"));
                    } else {
                        let s = self.stmt()?;
                        arms.last_mut().unwrap().body.push(s);
                        continue;
                    };
                    self.expect_punct(P::Colon)?;
                    match arms.last_mut() {
                        Some(a) if a.body.is_empty() => a.labels.push(label),
                        _ => arms.push(SwitchArm { labels: vec![label], body: Vec::new() }),
                    }
                }
                self.bump();
                StmtKind::Switch { scrutinee, arms }
            }
            T::Keyword(K::Break) => {
                self.bump();
                self.expect_punct(P::Semi)?;
                StmtKind::Break
            }
            T::Keyword(K::Continue) => {
                self.bump();
                self.expect_punct(P::Semi)?;
                StmtKind::Continue
            }
            T::Keyword(K::Class | K::Abstract) => {
                return Err(Diagnostic::error(Code::NestedClass, loc, "classes cannot be nested"));
            }
            T::Keyword(K::Aligned) if self.class_ahead() => {
                return Err(Diagnostic::error(Code::NestedClass, loc, "classes cannot be nested"));
            }
            T::Keyword(K::Map) => {
                return Err(self.error("maps may only be declared at global scope"));
            }
            _ if self.decl_ahead() => {
                let d = self.var_decl()?;
                self.expect_punct(P::Semi)?;
                StmtKind::Decl(d)
            }
            _ => {
                let e = self.expr()?;
                self.expect_punct(P::Semi)?;
                StmtKind::Expr(e)
            }
        };
        Ok(Stmt { kind, loc })
    }

    fn expr_list(&mut self, end: P) -> PResult<Vec<Expr>> {
        let mut out = Vec::new();
        if self.at_punct(end) {
            return Ok(out);
        }
        loop {
            out.push(self.expr()?);
            if !self.eat_punct(P::Comma) {
                return Ok(out);
            }
        }
    }

    pub fn expr(&mut self) -> PResult<Expr> {
        self.assignment()
    }

    fn assignment(&mut self) -> PResult<Expr> {
        self.enter()?;
        let lhs = self.ternary()?;
        let r = if let T::Punct(p) = self.peek().kind {
            if let Some(op) = assign_op(p) {
                let loc = self.loc();
                self.bump();
                let rhs = self.assignment()?;
                Ok(Expr::new(ExprKind::Assign(op, Box::new(lhs), Box::new(rhs)), loc))
            } else {
                Ok(lhs)
            }
        } else {
            Ok(lhs)
        };
        self.leave();
        r
    }

    fn ternary(&mut self) -> PResult<Expr> {
        let cond = self.binary(1)?;
        if self.at_punct(P::Question) {
            let loc = self.loc();
            self.bump();
            self.enter()?;
            let a = self.assignment()?;
            self.expect_punct(P::Colon)?;
            let b = self.ternary()?;
            self.leave();
            return Ok(Expr::new(ExprKind::Ternary(Box::new(cond), Box::new(a), Box::new(b)), loc));
        }
        Ok(cond)
    }

    fn binary(&mut self, min_prec: u8) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        while let Some(op) = match self.peek().kind {
            T::Punct(p) => binop_for(p).filter(|op| op.precedence() >= min_prec),
            _ => None,
        } {
            let loc = self.loc();
            self.bump();
            self.enter()?;
            let rhs = self.binary(op.precedence() + 1)?;
            self.leave();
            lhs = Expr::new(ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)), loc);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Expr> {
        let loc = self.loc();
        let op = match self.peek().kind {
            T::Punct(P::Minus) => Some(UnOp::Neg),
            T::Punct(P::Plus) => Some(UnOp::Plus),
            T::Punct(P::Bang) => Some(UnOp::Not),
            T::Punct(P::Tilde) => Some(UnOp::BitNot),
            _ => None,
        };
        if let Some(op) = op {
            self.bump();
            self.enter()?;
            let e = self.unary()?;
            self.leave();
            return Ok(Expr::new(ExprKind::Unary(op, Box::new(e)), loc));
        }
        if self.at_punct(P::PlusPlus) || self.at_punct(P::MinusMinus) {
            let increment = self.bump().is_punct(P::PlusPlus);
            self.enter()?;
            let e = self.unary()?;
            self.leave();
            return Ok(Expr::new(ExprKind::IncDec { prefix: true, increment, target: Box::new(e) }, loc));
        }
        self.postfix()
    }

    fn postfix(&mut self) -> PResult<Expr> {
        let mut e = self.primary()?;
        loop {
            let loc = self.loc();
            if self.at_punct(P::LBracket) {
                if self.peek_at(1).is_punct(P::LBracket) {
                    return Err(Diagnostic::error(
                        Code::BadPartial,
                        loc,
                        "partial array brackets are only allowed in declarations",
                    ));
                }
                self.bump();
                let idx = self.expr()?;
                self.expect_punct(P::RBracket)?;
                e = Expr::new(ExprKind::Index(Box::new(e), Box::new(idx)), loc);
            } else if self.eat_punct(P::Dot) {
                let name = self.expect_ident("a member name")?;
                e = Expr::new(ExprKind::Member(Box::new(e), name), loc);
            } else if self.at_punct(P::PlusPlus) || self.at_punct(P::MinusMinus) {
                let increment = self.bump().is_punct(P::PlusPlus);
                e = Expr::new(ExprKind::IncDec { prefix: false, increment, target: Box::new(e) }, loc);
            } else {
                return Ok(e);
            }
        }
    }

    fn primary(&mut self) -> PResult<Expr> {
        let loc = self.loc();
        let t = self.bump();
        let kind = match t.kind {
            T::Int { value, unsigned } => ExprKind::Lit(Literal::Int { value, unsigned }),
            T::Bits { value, len, radix } => ExprKind::Lit(Literal::Bits { value, len, radix }),
            T::Float(f) => ExprKind::Lit(Literal::Float(f)),
            T::Char(c) => ExprKind::Lit(Literal::Char(c)),
            T::Str(s) => ExprKind::Lit(Literal::Str(s)),
            T::Keyword(K::True) => ExprKind::Lit(Literal::Bool(true)),
            T::Keyword(K::False) => ExprKind::Lit(Literal::Bool(false)),
            T::Ident(name) => {
                if self.at_punct(P::LParen) {
                    return Err(Diagnostic::error(
                        Code::Syntax,
                        loc,
                        format!("'{name}(...)' is not an expression; only lengthof and isidof may be called"),
                    ));
                }
                ExprKind::Name(name)
            }
            T::Punct(P::LParen) => {
                let e = self.expr()?;
                self.expect_punct(P::RParen)?;
                return Ok(e);
            }
            T::Keyword(K::Lengthof) => {
                self.expect_punct(P::LParen)?;
                let e = self.expr()?;
                self.expect_punct(P::RParen)?;
                ExprKind::Lengthof(Box::new(e))
            }
            T::Keyword(K::Isidof) => {
                self.expect_punct(P::LParen)?;
                let class = self.expect_ident("a class name")?;
                self.expect_punct(P::Comma)?;
                let e = self.expr()?;
                self.expect_punct(P::RParen)?;
                ExprKind::Isidof(class, Box::new(e))
            }
            _ => {
                return Err(Diagnostic::error(
                    Code::Syntax,
                    loc,
                    format!("expected an expression, found {}", describe(&t)),
                ))
            }
        };
        Ok(Expr::new(kind, loc))
    }
}
