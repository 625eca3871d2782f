//! Tokenizer for `.fl` source.

use std::fmt;

use crate::diag::{Code, Diagnostic};
use crate::source::{FileId, Loc};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Keyword {
    Abstract,
    Aligned,
    Big,
    Bit,
    Break,
    Case,
    Char,
    Class,
    Const,
    Continue,
    Default,
    Do,
    Double,
    Else,
    Extends,
    False,
    Float,
    For,
    If,
    Int,
    Isidof,
    Lengthof,
    Little,
    Long,
    Map,
    Short,
    Signed,
    Switch,
    True,
    Unsigned,
    While,
}

const KEYWORDS: &[(&str, Keyword)] = &[
    ("abstract", Keyword::Abstract),
    ("aligned", Keyword::Aligned),
    ("big", Keyword::Big),
    ("bit", Keyword::Bit),
    ("break", Keyword::Break),
    ("case", Keyword::Case),
    ("char", Keyword::Char),
    ("class", Keyword::Class),
    ("const", Keyword::Const),
    ("continue", Keyword::Continue),
    ("default", Keyword::Default),
    ("do", Keyword::Do),
    ("double", Keyword::Double),
    ("else", Keyword::Else),
    ("extends", Keyword::Extends),
    ("false", Keyword::False),
    ("float", Keyword::Float),
    ("for", Keyword::For),
    ("if", Keyword::If),
    ("int", Keyword::Int),
    ("isidof", Keyword::Isidof),
    ("lengthof", Keyword::Lengthof),
    ("little", Keyword::Little),
    ("long", Keyword::Long),
    ("map", Keyword::Map),
    ("short", Keyword::Short),
    ("signed", Keyword::Signed),
    ("switch", Keyword::Switch),
    ("true", Keyword::True),
    ("unsigned", Keyword::Unsigned),
    ("while", Keyword::While),
];

/// C++ and Java keywords that have no meaning in the language but may not be
/// used as names.
const RESERVED: &[&str] = &[
    "asm",
    "assert",
    "auto",
    "bool",
    "boolean",
    "byte",
    "catch",
    "const_cast",
    "delete",
    "dynamic_cast",
    "enum",
    "explicit",
    "export",
    "extern",
    "final",
    "finally",
    "friend",
    "goto",
    "implements",
    "import",
    "inline",
    "instanceof",
    "interface",
    "mutable",
    "namespace",
    "native",
    "new",
    "null",
    "operator",
    "package",
    "private",
    "protected",
    "public",
    "register",
    "reinterpret_cast",
    "return",
    "sizeof",
    "static",
    "static_cast",
    "strictfp",
    "struct",
    "super",
    "synchronized",
    "template",
    "this",
    "throw",
    "throws",
    "transient",
    "try",
    "typedef",
    "typeid",
    "typename",
    "union",
    "using",
    "virtual",
    "void",
    "volatile",
    "wchar_t",
];

impl Keyword {
    pub fn lookup(s: &str) -> Option<Keyword> {
        KEYWORDS.iter().find(|(k, _)| *k == s).map(|(_, kw)| *kw)
    }

    pub fn as_str(self) -> &'static str {
        KEYWORDS.iter().find(|(_, kw)| *kw == self).map(|(k, _)| *k).unwrap()
    }
}

pub fn is_reserved(s: &str) -> bool {
    RESERVED.contains(&s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Radix {
    Bin,
    Oct,
    Hex,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Punct {
    LBrace,
    RBrace,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Semi,
    Comma,
    Dot,
    DotDot,
    Colon,
    Question,
    Plus,
    Minus,
    Star,
    Slash,
    Percent,
    PlusPlus,
    MinusMinus,
    Shl,
    Shr,
    Lt,
    Gt,
    Le,
    Ge,
    EqEq,
    Ne,
    Amp,
    Pipe,
    Caret,
    Tilde,
    Bang,
    AndAnd,
    OrOr,
    Assign,
    PlusAssign,
    MinusAssign,
    StarAssign,
    SlashAssign,
    PercentAssign,
    ShlAssign,
    ShrAssign,
    AmpAssign,
    PipeAssign,
    CaretAssign,
}

// longest first so that greedy matching works
const PUNCTS: &[(&str, Punct)] = &[
    ("<<=", Punct::ShlAssign),
    (">>=", Punct::ShrAssign),
    ("..", Punct::DotDot),
    ("++", Punct::PlusPlus),
    ("--", Punct::MinusMinus),
    ("<<", Punct::Shl),
    (">>", Punct::Shr),
    ("<=", Punct::Le),
    (">=", Punct::Ge),
    ("==", Punct::EqEq),
    ("!=", Punct::Ne),
    ("&&", Punct::AndAnd),
    ("||", Punct::OrOr),
    ("+=", Punct::PlusAssign),
    ("-=", Punct::MinusAssign),
    ("*=", Punct::StarAssign),
    ("/=", Punct::SlashAssign),
    ("%=", Punct::PercentAssign),
    ("&=", Punct::AmpAssign),
    ("|=", Punct::PipeAssign),
    ("^=", Punct::CaretAssign),
    ("{", Punct::LBrace),
    ("}", Punct::RBrace),
    ("(", Punct::LParen),
    (")", Punct::RParen),
    ("[", Punct::LBracket),
    ("]", Punct::RBracket),
    (";", Punct::Semi),
    (",", Punct::Comma),
    (".", Punct::Dot),
    (":", Punct::Colon),
    ("?", Punct::Question),
    ("+", Punct::Plus),
    ("-", Punct::Minus),
    ("*", Punct::Star),
    ("/", Punct::Slash),
    ("%", Punct::Percent),
    ("<", Punct::Lt),
    (">", Punct::Gt),
    ("&", Punct::Amp),
    ("|", Punct::Pipe),
    ("^", Punct::Caret),
    ("~", Punct::Tilde),
    ("!", Punct::Bang),
    ("=", Punct::Assign),
];

impl Punct {
    pub fn as_str(self) -> &'static str {
        PUNCTS.iter().find(|(_, p)| *p == self).map(|(s, _)| *s).unwrap()
    }
}

/// Where a verbatim block's text belongs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Placement {
    /// `%{`: class (or global) declaration scope.
    Decl,
    /// `%g{`
    Get,
    /// `%p{`
    Put,
    /// `%*{`
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Lang {
    C,
    Java,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verbatim {
    pub placement: Placement,
    pub lang: Option<Lang>,
    pub text: String,
}

impl Verbatim {
    /// The delimiter tag between `%` and the brace, e.g. `g.j`.
    pub fn tag(&self) -> String {
        let mut s = String::from(match self.placement {
            Placement::Decl => "",
            Placement::Get => "g",
            Placement::Put => "p",
            Placement::Both => "*",
        });
        match self.lang {
            Some(Lang::C) => s.push_str(".c"),
            Some(Lang::Java) => s.push_str(".j"),
            None => {}
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PragmaValue {
    Int(i64),
    Str(String),
    Ident(String),
}

/// One `name` or `name=value` item of a `%pragma` line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PragmaSetting {
    pub name: String,
    pub value: Option<PragmaValue>,
}

impl fmt::Display for PragmaSetting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)?;
        match &self.value {
            None => Ok(()),
            Some(PragmaValue::Int(v)) => write!(f, "={v}"),
            Some(PragmaValue::Ident(v)) => write!(f, "={v}"),
            Some(PragmaValue::Str(v)) => write!(f, "=\"{}\"", escape_str(v.as_bytes())),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TokenKind {
    Ident(String),
    Keyword(Keyword),
    /// Decimal integer; `unsigned` records a `u` suffix.
    Int {
        value: u64,
        unsigned: bool,
    },
    /// `0b`, `0x` or leading-zero octal literal, which carries a bit length.
    Bits {
        value: u64,
        len: u32,
        radix: Radix,
    },
    Float(f64),
    Char(u8),
    Str(Vec<u8>),
    Punct(Punct),
    Include(String),
    Import(String),
    Pragma(Vec<PragmaSetting>),
    Verbatim(Verbatim),
    Eof,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    pub text: String,
    pub loc: Loc,
}

impl Token {
    /// Bit count conveyed by the literal, if it is a bit string.
    pub fn bit_length(&self) -> Option<u32> {
        match self.kind {
            TokenKind::Bits { len, .. } => Some(len),
            _ => None,
        }
    }

    pub fn is_punct(&self, p: Punct) -> bool {
        self.kind == TokenKind::Punct(p)
    }

    pub fn is_keyword(&self, k: Keyword) -> bool {
        self.kind == TokenKind::Keyword(k)
    }
}

pub fn escape_str(bytes: &[u8]) -> String {
    let mut s = String::new();
    for &b in bytes {
        match b {
            b'\n' => s.push_str("\\n"),
            b'\t' => s.push_str("\\t"),
            b'\r' => s.push_str("\\r"),
            0 => s.push_str("\\0"),
            b'\\' => s.push_str("\\\\"),
            b'"' => s.push_str("\\\""),
            b'\'' => s.push_str("\\'"),
            0x20..=0x7e => s.push(b as char),
            _ => s.push_str(&format!("\\x{b:02x}")),
        }
    }
    s
}

struct Lexer<'a> {
    src: &'a [u8],
    text: &'a str,
    pos: usize,
    line: u32,
    col: u32,
    file: FileId,
    tokens: Vec<Token>,
}

type LexResult<T> = Result<T, Diagnostic>;

fn is_ident_start(c: u8) -> bool {
    c.is_ascii_alphabetic() || c == b'_'
}

fn is_ident_char(c: u8) -> bool {
    c.is_ascii_alphanumeric() || c == b'_'
}

impl<'a> Lexer<'a> {
    fn peek(&self) -> u8 {
        self.peek_at(0)
    }

    fn peek_at(&self, k: usize) -> u8 {
        self.src.get(self.pos + k).copied().unwrap_or(0)
    }

    fn at_end(&self) -> bool {
        self.pos >= self.src.len()
    }

    fn bump(&mut self) -> u8 {
        let c = self.src[self.pos];
        self.pos += 1;
        if c == b'\n' {
            self.line += 1;
            self.col = 1;
        } else if c & 0xC0 != 0x80 {
            self.col += 1;
        }
        c
    }

    fn loc(&self) -> Loc {
        Loc::new(self.file, self.line, self.col)
    }

    fn err(&self, loc: Loc, msg: impl Into<String>) -> Diagnostic {
        Diagnostic::error(Code::Lex, loc, msg)
    }

    fn starts_with(&self, s: &str) -> bool {
        self.src[self.pos..].starts_with(s.as_bytes())
    }

    fn push(&mut self, kind: TokenKind, start: usize, loc: Loc) {
        let text = self.text[start..self.pos].to_string();
        self.tokens.push(Token { kind, text, loc });
    }

    fn skip_trivia(&mut self) -> LexResult<()> {
        loop {
            match (self.peek(), self.peek_at(1)) {
                (c, _) if c.is_ascii_whitespace() => {
                    self.bump();
                }
                (b'/', b'/') => {
                    while !self.at_end() && self.peek() != b'\n' {
                        self.bump();
                    }
                }
                (b'/', b'*') => {
                    let loc = self.loc();
                    self.bump();
                    self.bump();
                    loop {
                        if self.at_end() {
                            return Err(self.err(loc, "unterminated comment"));
                        }
                        if self.starts_with("*/") {
                            self.bump();
                            self.bump();
                            break;
                        }
                        self.bump();
                    }
                }
                _ => return Ok(()),
            }
        }
    }

    fn run(mut self) -> LexResult<Vec<Token>> {
        loop {
            self.skip_trivia()?;
            if self.at_end() {
                let loc = self.loc();
                self.tokens.push(Token { kind: TokenKind::Eof, text: String::new(), loc });
                return Ok(self.tokens);
            }
            let start = self.pos;
            let loc = self.loc();
            let c = self.peek();
            if is_ident_start(c) {
                self.ident(start, loc)?;
            } else if c.is_ascii_digit() || (c == b'.' && self.peek_at(1).is_ascii_digit()) {
                self.number(start, loc)?;
            } else if c == b'\'' {
                self.char_lit(start, loc)?;
            } else if c == b'"' {
                let s = self.string_body(loc)?;
                self.push(TokenKind::Str(s), start, loc);
            } else if c == b'%' && self.directive(start, loc)? {
                // handled
            } else if let Some(&(s, p)) = PUNCTS.iter().find(|(s, _)| self.starts_with(s)) {
                for _ in 0..s.len() {
                    self.bump();
                }
                self.push(TokenKind::Punct(p), start, loc);
            } else {
                let ch = self.text[self.pos..].chars().next().unwrap_or('?');
                return Err(self.err(loc, format!("unexpected character '{ch}'")));
            }
        }
    }

    fn ident(&mut self, start: usize, loc: Loc) -> LexResult<()> {
        while is_ident_char(self.peek()) {
            self.bump();
        }
        let word = &self.text[start..self.pos];
        let kind = match Keyword::lookup(word) {
            Some(kw) => TokenKind::Keyword(kw),
            None if is_reserved(word) => {
                return Err(self.err(loc, format!("'{word}' is a reserved keyword")));
            }
            None => TokenKind::Ident(word.to_string()),
        };
        self.push(kind, start, loc);
        Ok(())
    }

    fn number(&mut self, start: usize, loc: Loc) -> LexResult<()> {
        let (c0, c1) = (self.peek(), self.peek_at(1) | 0x20);
        if c0 == b'0' && c1 == b'b' && matches!(self.peek_at(2), b'0' | b'1') {
            self.bump();
            self.bump();
            let mut digits = String::new();
            loop {
                match self.peek() {
                    d @ (b'0' | b'1') => {
                        digits.push(self.bump() as char);
                        let _ = d;
                    }
                    b'.' if matches!(self.peek_at(1), b'0' | b'1') => {
                        self.bump();
                    }
                    _ => break,
                }
            }
            return self.bits(start, loc, &digits, 2, 1, Radix::Bin);
        }
        if c0 == b'0' && c1 == b'x' && self.peek_at(2).is_ascii_hexdigit() {
            self.bump();
            self.bump();
            let mut digits = String::new();
            while self.peek().is_ascii_hexdigit() {
                digits.push(self.bump() as char);
            }
            return self.bits(start, loc, &digits, 16, 4, Radix::Hex);
        }
        let mut digits = String::new();
        while self.peek().is_ascii_digit() {
            digits.push(self.bump() as char);
        }
        let mut is_float = false;
        if self.peek() == b'.' && self.peek_at(1) != b'.' && !is_ident_start(self.peek_at(1)) {
            is_float = true;
            self.bump();
            while self.peek().is_ascii_digit() {
                self.bump();
            }
        }
        if matches!(self.peek(), b'e' | b'E')
            && (self.peek_at(1).is_ascii_digit()
                || (matches!(self.peek_at(1), b'+' | b'-') && self.peek_at(2).is_ascii_digit()))
        {
            is_float = true;
            self.bump();
            if matches!(self.peek(), b'+' | b'-') {
                self.bump();
            }
            while self.peek().is_ascii_digit() {
                self.bump();
            }
        }
        if is_float {
            let body = self.text[start..self.pos].to_string();
            if matches!(self.peek(), b'f' | b'F' | b'd' | b'D') {
                self.bump();
            }
            let v: f64 = body.parse().map_err(|_| self.err(loc, format!("malformed number '{body}'")))?;
            self.push(TokenKind::Float(v), start, loc);
            return self.no_trailing_ident(loc);
        }
        if digits.len() > 1 && digits.starts_with('0') {
            if let Some(bad) = digits.chars().find(|c| !('0'..='7').contains(c)) {
                return Err(self.err(loc, format!("invalid digit '{bad}' in octal literal")));
            }
            let digits = digits[1..].to_string();
            return self.bits(start, loc, &digits, 8, 3, Radix::Oct);
        }
        let value: u64 =
            digits.parse().map_err(|_| self.err(loc, format!("integer literal {digits} does not fit in 64 bits")))?;
        let mut unsigned = false;
        loop {
            match self.peek() {
                b'u' | b'U' if !unsigned => {
                    unsigned = true;
                    self.bump();
                }
                b'l' | b'L' => {
                    self.bump();
                }
                _ => break,
            }
        }
        self.push(TokenKind::Int { value, unsigned }, start, loc);
        self.no_trailing_ident(loc)
    }

    fn bits(&mut self, start: usize, loc: Loc, digits: &str, radix: u32, per_digit: u32, r: Radix) -> LexResult<()> {
        let len = digits.len() as u32 * per_digit;
        if len > 64 {
            return Err(self.err(loc, format!("bit string of {len} bits exceeds 64 bits")));
        }
        let value = u64::from_str_radix(digits, radix).map_err(|_| self.err(loc, "malformed literal"))?;
        self.push(TokenKind::Bits { value, len, radix: r }, start, loc);
        self.no_trailing_ident(loc)
    }

    fn no_trailing_ident(&self, loc: Loc) -> LexResult<()> {
        if is_ident_char(self.peek()) {
            return Err(self.err(loc, "malformed number literal"));
        }
        Ok(())
    }

    fn escape(&mut self, loc: Loc) -> LexResult<u8> {
        let c = self.bump();
        Ok(match c {
            b'n' => b'\n',
            b't' => b'\t',
            b'r' => b'\r',
            b'0' => 0,
            b'a' => 7,
            b'b' => 8,
            b'f' => 12,
            b'v' => 11,
            b'\\' | b'\'' | b'"' | b'?' => c,
            b'x' => {
                let mut v: u32 = 0;
                let mut n = 0;
                while self.peek().is_ascii_hexdigit() && n < 2 {
                    v = v * 16 + (self.bump() as char).to_digit(16).unwrap();
                    n += 1;
                }
                if n == 0 {
                    return Err(self.err(loc, "malformed \\x escape"));
                }
                v as u8
            }
            _ => return Err(self.err(loc, format!("unknown escape '\\{}'", c as char))),
        })
    }

    fn char_lit(&mut self, start: usize, loc: Loc) -> LexResult<()> {
        self.bump();
        let c = match self.peek() {
            b'\\' => {
                self.bump();
                self.escape(loc)?
            }
            b'\'' | b'\n' | 0 => return Err(self.err(loc, "malformed character literal")),
            _ => self.bump(),
        };
        if self.peek() != b'\'' {
            return Err(self.err(loc, "unterminated character literal"));
        }
        self.bump();
        self.push(TokenKind::Char(c), start, loc);
        Ok(())
    }

    fn string_body(&mut self, loc: Loc) -> LexResult<Vec<u8>> {
        self.bump();
        let mut out = Vec::new();
        loop {
            if self.at_end() || self.peek() == b'\n' {
                return Err(self.err(loc, "unterminated string literal"));
            }
            match self.bump() {
                b'"' => return Ok(out),
                b'\\' => out.push(self.escape(loc)?),
                c => out.push(c),
            }
        }
    }

    /// Handles a `%` directive. Returns false if `%` is the modulo operator.
    fn directive(&mut self, start: usize, loc: Loc) -> LexResult<bool> {
        if let Some((placement, lang, open_len)) = self.verbatim_open() {
            for _ in 0..open_len {
                self.bump();
            }
            let tag = self.text[start + 1..self.pos - 1].to_string();
            let body_start = self.pos;
            loop {
                if self.at_end() {
                    return Err(self.err(loc, "unterminated verbatim block"));
                }
                if self.peek() == b'%' {
                    let close = format!("%{tag}}}");
                    if self.starts_with(&close) || self.starts_with("%}") {
                        let body = self.text[body_start..self.pos].to_string();
                        let n = if self.starts_with(&close) { close.len() } else { 2 };
                        for _ in 0..n {
                            self.bump();
                        }
                        let v = Verbatim { placement, lang, text: body };
                        self.push(TokenKind::Verbatim(v), start, loc);
                        return Ok(true);
                    }
                }
                self.bump();
            }
        }
        let word_len = self.src[self.pos + 1..].iter().take_while(|c| is_ident_char(**c)).count();
        let word = &self.text[self.pos + 1..self.pos + 1 + word_len];
        match word {
            "include" | "import" => {
                for _ in 0..=word_len {
                    self.bump();
                }
                while matches!(self.peek(), b' ' | b'\t') {
                    self.bump();
                }
                if self.peek() != b'"' {
                    return Err(self.err(loc, format!("expected a quoted file name after %{word}")));
                }
                let name = String::from_utf8_lossy(&self.string_body(loc)?).into_owned();
                let kind = if word == "include" { TokenKind::Include(name) } else { TokenKind::Import(name) };
                self.push(kind, start, loc);
                Ok(true)
            }
            "pragma" => {
                for _ in 0..=word_len {
                    self.bump();
                }
                let line_start = self.pos;
                while !self.at_end() && self.peek() != b'\n' {
                    self.bump();
                }
                let line = &self.text[line_start..self.pos];
                let settings = parse_pragma_line(line).map_err(|m| self.err(loc, m))?;
                let text = self.text[start..line_start].to_string() + line;
                self.tokens.push(Token { kind: TokenKind::Pragma(settings), text, loc });
                Ok(true)
            }
            _ => Ok(false),
        }
    }

    fn verbatim_open(&self) -> Option<(Placement, Option<Lang>, usize)> {
        let rest = &self.src[self.pos + 1..];
        let (placement, mut i) = match rest.first() {
            Some(b'p') => (Placement::Put, 1),
            Some(b'g') => (Placement::Get, 1),
            Some(b'*') => (Placement::Both, 1),
            _ => (Placement::Decl, 0),
        };
        let mut lang = None;
        if rest.get(i) == Some(&b'.') {
            lang = match rest.get(i + 1) {
                Some(b'c') => Some(Lang::C),
                Some(b'j') => Some(Lang::Java),
                _ => return None,
            };
            i += 2;
        }
        (rest.get(i) == Some(&b'{')).then_some((placement, lang, i + 2))
    }
}

/// Parses the settings after `%pragma` on one line.
fn parse_pragma_line(line: &str) -> Result<Vec<PragmaSetting>, String> {
    // strip a trailing // comment that is not inside a string
    let mut in_str = false;
    let bytes = line.as_bytes();
    let mut end = bytes.len();
    let mut i = 0;
    while i < bytes.len() {
        match bytes[i] {
            b'"' => in_str = !in_str,
            b'\\' if in_str => i += 1,
            b'/' if !in_str && bytes.get(i + 1) == Some(&b'/') => {
                end = i;
                break;
            }
            _ => {}
        }
        i += 1;
    }
    let line = &line[..end];
    let mut settings = Vec::new();
    for item in split_outside_quotes(line) {
        let item = item.trim();
        if item.is_empty() {
            return Err("empty pragma setting".into());
        }
        let (name, value) = match item.split_once('=') {
            Some((n, v)) => (n.trim(), Some(v.trim())),
            None => (item, None),
        };
        if name.is_empty() || !name.bytes().all(is_ident_char) || !is_ident_start(name.as_bytes()[0]) {
            return Err(format!("malformed pragma setting '{item}'"));
        }
        let value = match value {
            None => None,
            Some(v) if v.len() >= 2 && v.starts_with('"') && v.ends_with('"') => {
                Some(PragmaValue::Str(v[1..v.len() - 1].to_string()))
            }
            Some(v) if v.bytes().all(|c| c.is_ascii_digit()) && !v.is_empty() => {
                Some(PragmaValue::Int(v.parse().map_err(|_| format!("pragma value {v} out of range"))?))
            }
            Some(v) if !v.is_empty() && v.bytes().all(|c| is_ident_char(c) || c == b'.') => {
                Some(PragmaValue::Ident(v.to_string()))
            }
            Some(v) => return Err(format!("malformed pragma value '{v}'")),
        };
        settings.push(PragmaSetting { name: name.to_string(), value });
    }
    Ok(settings)
}

fn split_outside_quotes(s: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut in_str = false;
    let mut start = 0;
    for (i, c) in s.char_indices() {
        match c {
            '"' => in_str = !in_str,
            ',' if !in_str => {
                out.push(&s[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push(&s[start..]);
    out
}

/// Splits `source` into tokens. The last token is always [`TokenKind::Eof`].
pub fn tokenize(source: &str, file: FileId) -> Result<Vec<Token>, Diagnostic> {
    Lexer { src: source.as_bytes(), text: source, pos: 0, line: 1, col: 1, file, tokens: Vec::new() }.run()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str) -> Vec<TokenKind> {
        tokenize(src, 0).unwrap().into_iter().map(|t| t.kind).filter(|k| *k != TokenKind::Eof).collect()
    }

    #[test]
    fn binary_literals() {
        assert_eq!(kinds("0b011"), vec![TokenKind::Bits { value: 3, len: 3, radix: Radix::Bin }]);
        assert_eq!(kinds("0b0010.01"), vec![TokenKind::Bits { value: 9, len: 6, radix: Radix::Bin }]);
    }

    #[test]
    fn hex_and_octal_lengths() {
        assert_eq!(kinds("0x000001AF"), vec![TokenKind::Bits { value: 0x1AF, len: 32, radix: Radix::Hex }]);
        assert_eq!(kinds("017"), vec![TokenKind::Bits { value: 0o17, len: 6, radix: Radix::Oct }]);
        assert_eq!(kinds("0"), vec![TokenKind::Int { value: 0, unsigned: false }]);
    }

    #[test]
    fn comments_are_dropped() {
        assert_eq!(kinds("// note\nint"), vec![TokenKind::Keyword(Keyword::Int)]);
        assert_eq!(kinds("/* a /* b */ int"), vec![TokenKind::Keyword(Keyword::Int)]);
        assert!(tokenize("/* open", 0).is_err());
    }

    #[test]
    fn ranges_and_floats() {
        assert_eq!(
            kinds("1..5"),
            vec![
                TokenKind::Int { value: 1, unsigned: false },
                TokenKind::Punct(Punct::DotDot),
                TokenKind::Int { value: 5, unsigned: false }
            ]
        );
        assert_eq!(kinds("1.5e2"), vec![TokenKind::Float(150.0)]);
    }

    #[test]
    fn reserved_words_rejected() {
        let err = tokenize("int(8) new;", 0).unwrap_err();
        assert_eq!(err.code, Code::Lex);
        assert!(err.message.contains("reserved"));
    }

    #[test]
    fn chars_and_strings() {
        assert_eq!(kinds("','"), vec![TokenKind::Char(b',')]);
        assert_eq!(kinds(r#""GIF\n""#), vec![TokenKind::Str(b"GIF\n".to_vec())]);
        assert!(tokenize("\"abc", 0).is_err());
    }

    #[test]
    fn pragma_line() {
        let k = kinds("%pragma put, get, trace, array=128 // note\nint");
        assert_eq!(
            k[0],
            TokenKind::Pragma(vec![
                PragmaSetting { name: "put".into(), value: None },
                PragmaSetting { name: "get".into(), value: None },
                PragmaSetting { name: "trace".into(), value: None },
                PragmaSetting { name: "array".into(), value: Some(PragmaValue::Int(128)) },
            ])
        );
        assert_eq!(k[1], TokenKind::Keyword(Keyword::Int));
        let k = kinds("%pragma trace=\"Tracer.trace\"");
        assert_eq!(
            k[0],
            TokenKind::Pragma(vec![PragmaSetting {
                name: "trace".into(),
                value: Some(PragmaValue::Str("Tracer.trace".into()))
            }])
        );
    }

    #[test]
    fn verbatim_blocks() {
        let k = kinds("%g{ print(); %g} %.c{\nvoid print() { }\n%.c} a % b");
        assert_eq!(
            k[0],
            TokenKind::Verbatim(Verbatim { placement: Placement::Get, lang: None, text: " print(); ".into() })
        );
        assert_eq!(
            k[1],
            TokenKind::Verbatim(Verbatim {
                placement: Placement::Decl,
                lang: Some(Lang::C),
                text: "\nvoid print() { }\n".into()
            })
        );
        assert_eq!(k[3], TokenKind::Punct(Punct::Percent));
        assert!(tokenize("%*{ never closed", 0).is_err());
    }

    #[test]
    fn include_directive() {
        assert_eq!(kinds("%include \"other.fl\""), vec![TokenKind::Include("other.fl".into())]);
        assert_eq!(kinds("%import \"other.fl\""), vec![TokenKind::Import("other.fl".into())]);
    }

    #[test]
    fn locations() {
        let t = tokenize("class\n  A", 0).unwrap();
        assert_eq!(t[1].loc.key(), (0, 2, 3));
    }
}
