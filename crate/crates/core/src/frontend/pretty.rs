//! Canonical source rendering of an [`Ast`].
//!
//! Only items that came from the main file are printed; directives for
//! included files are re-emitted as directives.

use std::fmt::Write;

use crate::bitio::ByteOrder;
use crate::value::{UnOp, Value};

use super::ast::*;
use super::lexer::escape_str;

pub fn pretty(ast: &Ast) -> String {
    let mut p = Printer { out: String::new(), indent: 0 };
    for item in ast.items.iter().filter(|i| i.origin == Origin::Main) {
        p.item(item);
    }
    p.out
}

pub fn pretty_expr(e: &Expr) -> String {
    expr_str(e)
}

struct Printer {
    out: String,
    indent: usize,
}

impl Printer {
    fn line(&mut self, s: &str) {
        for _ in 0..self.indent {
            self.out.push_str("    ");
        }
        self.out.push_str(s);
        self.out.push('\n');
    }

    fn item(&mut self, item: &Item) {
        match &item.kind {
            ItemKind::Decl(d) => self.line(&format!("{};", decl_str(d))),
            ItemKind::Class(c) => self.class(c),
            ItemKind::Map(m) => self.map(m),
            ItemKind::Pragma(p) => self.line(&pragma_str(p)),
            ItemKind::Verbatim(v) => self.line(&verbatim_str(v)),
            ItemKind::Include(f) => self.line(&format!("%include \"{}\"", escape_str(f.as_bytes()))),
            ItemKind::Import(f) => self.line(&format!("%import \"{}\"", escape_str(f.as_bytes()))),
        }
    }

    fn class(&mut self, c: &ClassDecl) {
        let mut head = String::new();
        if c.is_abstract {
            head.push_str("abstract ");
        }
        if let Some(a) = &c.aligned {
            head.push_str(&align_str(a));
            head.push(' ');
        }
        write!(head, "class {}", c.name).unwrap();
        if !c.params.is_empty() {
            let ps: Vec<String> = c
                .params
                .iter()
                .map(|p| {
                    let dims: String =
                        p.dims.iter().map(|d| format!("[{}]", d.as_ref().map(expr_str).unwrap_or_default())).collect();
                    format!("{} {}{}", type_str(&p.ty), p.name, dims)
                })
                .collect();
            write!(head, "({})", ps.join(", ")).unwrap();
        }
        if let Some(parent) = &c.parent {
            write!(head, " extends {parent}").unwrap();
        }
        if let Some(id) = &c.id {
            head.push_str(" : ");
            if let Some(a) = &id.aligned {
                head.push_str(&align_str(a));
                head.push(' ');
            }
            head.push_str(order_str(id.byte_order));
            write!(head, "{}({}) {} = ", type_str(&id.ty), expr_str(&id.size), id.name).unwrap();
            match &id.value {
                IdValue::Single(v) => head.push_str(&expr_at(v, 2)),
                IdValue::Range(lo, hi) => write!(head, "{} .. {}", expr_at(lo, 2), expr_at(hi, 2)).unwrap(),
            }
        }
        head.push_str(" {");
        self.line(&head);
        self.indent += 1;
        for s in &c.body {
            self.stmt(s);
        }
        self.indent -= 1;
        self.line("}");
    }

    fn map(&mut self, m: &MapDecl) {
        let len = m.output_len.as_ref().map(|e| format!("[{}]", expr_str(e))).unwrap_or_default();
        self.line(&format!("map {}({}{}) {{", m.name, type_str(&m.output), len));
        self.indent += 1;
        let n = m.entries.len();
        for (i, e) in m.entries.iter().enumerate() {
            let value = match &e.value {
                MapValue::Expr(x) => expr_at(x, 2),
                MapValue::List(l) => format!("{{{}}}", l.iter().map(|x| expr_at(x, 2)).collect::<Vec<_>>().join(", ")),
                MapValue::Extension { ty, size } => format!("{}({})", type_str(ty), expr_str(size)),
            };
            let sep = if i + 1 < n { "," } else { "" };
            let lit = Literal::Bits { value: e.codeword.value(), len: e.codeword.len(), radix: e.radix };
            self.line(&format!("{}, {}{}", lit_str(&lit), value, sep));
        }
        self.indent -= 1;
        self.line("}");
    }

    fn stmt(&mut self, s: &Stmt) {
        match &s.kind {
            StmtKind::Decl(d) => self.line(&format!("{};", decl_str(d))),
            StmtKind::Expr(e) => self.line(&format!("{};", expr_str(e))),
            StmtKind::Empty => self.line(";"),
            StmtKind::Break => self.line("break;"),
            StmtKind::Continue => self.line("continue;"),
            StmtKind::Pragma(p) => self.line(&pragma_str(p)),
            StmtKind::Verbatim(v) => self.line(&verbatim_str(v)),
            StmtKind::Block(b) => {
                self.line("{");
                self.body(b);
                self.line("}");
            }
            StmtKind::If { cond, then, els } => {
                self.line(&format!("if ({})", expr_str(cond)));
                self.nested(then);
                if let Some(e) = els {
                    self.line("else");
                    self.nested(e);
                }
            }
            StmtKind::While { cond, body } => {
                self.line(&format!("while ({})", expr_str(cond)));
                self.nested(body);
            }
            StmtKind::DoWhile { body, cond } => {
                self.line("do");
                self.nested(body);
                self.line(&format!("while ({});", expr_str(cond)));
            }
            StmtKind::For { init, cond, step, body } => {
                let list = |v: &[Expr]| v.iter().map(expr_str).collect::<Vec<_>>().join(", ");
                let c = cond.as_ref().map(expr_str).unwrap_or_default();
                self.line(&format!("for ({}; {}; {})", list(init), c, list(step)));
                self.nested(body);
            }
            StmtKind::Switch { scrutinee, arms } => {
                self.line(&format!("switch ({}) {{", expr_str(scrutinee)));
                for arm in arms {
                    for l in &arm.labels {
                        match l {
                            CaseLabel::Case(e) => self.line(&format!("case {}:", expr_at(e, 2))),
                            CaseLabel::Default => self.line("default:"),
                        }
                    }
                    self.body(&arm.body);
                }
                self.line("}");
            }
        }
    }

    fn body(&mut self, b: &[Stmt]) {
        self.indent += 1;
        for s in b {
            self.stmt(s);
        }
        self.indent -= 1;
    }

    fn nested(&mut self, s: &Stmt) {
        if matches!(s.kind, StmtKind::Block(_)) {
            self.stmt(s);
        } else {
            self.body(std::slice::from_ref(s));
        }
    }
}

fn pragma_str(p: &[PragmaSetting]) -> String {
    format!("%pragma {}", p.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(", "))
}

fn verbatim_str(v: &Verbatim) -> String {
    let tag = v.tag();
    format!("%{tag}{{{}%{tag}}}", v.text)
}

fn align_str(a: &Alignment) -> String {
    match &a.length {
        Some(e) => format!("aligned({})", expr_str(e)),
        None => "aligned".into(),
    }
}

fn order_str(o: Option<ByteOrder>) -> &'static str {
    match o {
        Some(ByteOrder::Little) => "little ",
        Some(ByteOrder::Big) => "big ",
        None => "",
    }
}

pub fn type_str(t: &TypeName) -> String {
    match t {
        TypeName::Class(n) => n.clone(),
        TypeName::Prim { prim, sign, width } => {
            let mut s = String::new();
            match sign {
                Sign::Signed => s.push_str("signed "),
                Sign::Unsigned => s.push_str("unsigned "),
                Sign::Default => {}
            }
            match width {
                Width::Short => s.push_str("short "),
                Width::Long => s.push_str("long "),
                Width::LongLong => s.push_str("long long "),
                Width::Normal => {}
            }
            s.push_str(match prim {
                Prim::Int => "int",
                Prim::Char => "char",
                Prim::Float => "float",
                Prim::Double => "double",
                Prim::Bit => "bit",
            });
            s
        }
    }
}

fn decl_str(d: &VarDecl) -> String {
    let mut s = String::new();
    if let Some(a) = &d.aligned {
        s.push_str(&align_str(a));
        s.push(' ');
    }
    s.push_str(order_str(d.byte_order));
    if d.is_const {
        s.push_str("const ");
    }
    s.push_str(&type_str(&d.ty));
    if let Some(p) = &d.parse {
        write!(s, "({})", expr_str(&p.size)).unwrap();
        if p.lookahead {
            s.push('*');
        }
    }
    write!(s, " {}", d.name).unwrap();
    for dim in &d.dims {
        if dim.partial {
            write!(s, "[[{}]]", expr_str(&dim.size)).unwrap();
        } else {
            write!(s, "[{}]", expr_str(&dim.size)).unwrap();
        }
    }
    if let Some(args) = &d.args {
        write!(s, "({})", args.iter().map(|a| expr_at(a, 2)).collect::<Vec<_>>().join(", ")).unwrap();
    }
    if let Some(init) = &d.init {
        write!(s, " = {}", init_str(init)).unwrap();
    }
    s
}

fn init_str(i: &Init) -> String {
    match i {
        Init::Expr(e) => expr_str(e),
        Init::List(l) => format!("{{{}}}", l.iter().map(init_str).collect::<Vec<_>>().join(", ")),
    }
}

fn lit_str(l: &Literal) -> String {
    match l {
        Literal::Int { value, unsigned: false } => value.to_string(),
        Literal::Int { value, unsigned: true } => format!("{value}u"),
        Literal::Bits { value, len, radix } => match radix {
            Radix::Bin => format!("0b{:0w$b}", value, w = *len as usize),
            Radix::Hex => format!("0x{:0w$X}", value, w = (*len / 4) as usize),
            Radix::Oct => format!("0{:0w$o}", value, w = (*len / 3) as usize),
        },
        Literal::Float(f) => format!("{f:?}"),
        Literal::Char(c) => format!("'{}'", escape_str(&[*c])),
        Literal::Str(s) => format!("\"{}\"", escape_str(s)),
        Literal::Bool(b) => b.to_string(),
    }
}

fn value_str(v: &Value) -> String {
    match v {
        Value::Int(i) => i.to_string(),
        Value::UInt(u) => format!("{u}u"),
        Value::Float(f) => format!("{f:?}"),
        other => other.to_string(),
    }
}

// Precedence scale: assignment 1, ternary 2, binary 3..=12, prefix 13,
// postfix 14, atoms 15.
fn prec(e: &Expr) -> u8 {
    match &e.kind {
        ExprKind::Assign(..) => 1,
        ExprKind::Ternary(..) => 2,
        ExprKind::Binary(op, ..) => op.precedence() + 2,
        ExprKind::Unary(..) | ExprKind::IncDec { prefix: true, .. } => 13,
        ExprKind::IncDec { prefix: false, .. } | ExprKind::Index(..) | ExprKind::Member(..) => 14,
        ExprKind::Const(Value::Int(i)) if *i < 0 => 13,
        ExprKind::Const(Value::Float(f)) if f.is_sign_negative() => 13,
        _ => 15,
    }
}

fn expr_at(e: &Expr, min: u8) -> String {
    let s = expr_str(e);
    if prec(e) < min {
        format!("({s})")
    } else {
        s
    }
}

fn expr_str(e: &Expr) -> String {
    match &e.kind {
        ExprKind::Lit(l) => lit_str(l),
        ExprKind::Const(v) => value_str(v),
        ExprKind::Name(n) => n.clone(),
        ExprKind::Index(b, i) => format!("{}[{}]", expr_at(b, 14), expr_str(i)),
        ExprKind::Member(b, n) => format!("{}.{}", expr_at(b, 14), n),
        ExprKind::Unary(op, x) => {
            let inner = expr_at(x, 13);
            let sym = op.symbol();
            let clash = matches!(op, UnOp::Neg | UnOp::Plus) && inner.starts_with(sym);
            if clash {
                format!("{sym}({inner})")
            } else {
                format!("{sym}{inner}")
            }
        }
        ExprKind::IncDec { prefix, increment, target } => {
            let sym = if *increment { "++" } else { "--" };
            if *prefix {
                let inner = expr_at(target, 13);
                if inner.starts_with('+') || inner.starts_with('-') {
                    format!("{sym}({inner})")
                } else {
                    format!("{sym}{inner}")
                }
            } else {
                format!("{}{sym}", expr_at(target, 14))
            }
        }
        ExprKind::Binary(op, l, r) => {
            let p = op.precedence() + 2;
            format!("{} {} {}", expr_at(l, p), op.symbol(), expr_at(r, p + 1))
        }
        ExprKind::Assign(op, l, r) => {
            let sym = op.map(|o| format!("{}=", o.symbol())).unwrap_or_else(|| "=".into());
            format!("{} {} {}", expr_at(l, 13), sym, expr_at(r, 1))
        }
        ExprKind::Ternary(c, a, b) => format!("{} ? {} : {}", expr_at(c, 3), expr_at(a, 1), expr_at(b, 2)),
        ExprKind::Lengthof(x) => format!("lengthof({})", expr_str(x)),
        ExprKind::Isidof(c, x) => format!("isidof({c}, {})", expr_str(x)),
    }
}
