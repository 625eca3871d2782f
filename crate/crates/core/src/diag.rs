//! Diagnostics shared by the frontend and semantic analysis.

use std::fmt;

use crate::source::{Loc, SourceMap};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Severity {
    Error,
    Warning,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Error => "error",
            Severity::Warning => "warning",
        })
    }
}

/// Stable diagnostic codes. Each violated rule has its own code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Code {
    // frontend
    Lex,
    Syntax,
    NestedClass,
    MethodDecl,
    IncludeNotFound,
    IncludeCycle,
    TooDeep,
    // names and scoping
    Undefined,
    NotMember,
    HidesParsable,
    Redeclared,
    BadParsableRedecl,
    ParsableAssigned,
    ConstAssigned,
    GlobalNonConst,
    NotLvalue,
    // types
    FloatSize,
    ParseSizeRange,
    NotBoolean,
    UnknownType,
    DuplicateClass,
    ParamMismatch,
    DuplicateParam,
    BadParent,
    MapTypeMismatch,
    NonConstant,
    DivByZero,
    AbstractInstance,
    SwitchLabel,
    LengthofTarget,
    IsidofNoIds,
    BreakOutside,
    StringInit,
    LittleEndianWidth,
    BadLookahead,
    BadInitializer,
    BadPartial,
    TypeError,
    // object ids
    IdMismatch,
    IdOverlap,
    IdRedeclared,
    IdNonConstant,
    IdType,
    IdRange,
    // maps
    PrefixViolation,
    CodewordNotBits,
    MapArity,
    MapCycle,
    DuplicateMap,
    MapEscape,
    MapTooWide,
    // pragmas
    UnknownPragma,
}

impl Code {
    pub fn as_str(self) -> &'static str {
        use Code::*;
        match self {
            Lex => "E0001",
            Syntax => "E0002",
            NestedClass => "E0003",
            MethodDecl => "E0004",
            IncludeNotFound => "E0005",
            IncludeCycle => "E0006",
            TooDeep => "E0007",
            Undefined => "E0101",
            NotMember => "E0102",
            HidesParsable => "E0103",
            Redeclared => "E0104",
            BadParsableRedecl => "E0105",
            ParsableAssigned => "E0106",
            ConstAssigned => "E0107",
            GlobalNonConst => "E0108",
            NotLvalue => "E0109",
            FloatSize => "E0110",
            ParseSizeRange => "E0111",
            NotBoolean => "E0112",
            UnknownType => "E0113",
            DuplicateClass => "E0114",
            ParamMismatch => "E0115",
            DuplicateParam => "E0116",
            BadParent => "E0117",
            MapTypeMismatch => "E0118",
            NonConstant => "E0119",
            DivByZero => "E0120",
            AbstractInstance => "E0121",
            SwitchLabel => "E0122",
            LengthofTarget => "E0123",
            IsidofNoIds => "E0124",
            BreakOutside => "E0125",
            StringInit => "E0126",
            LittleEndianWidth => "E0127",
            BadLookahead => "E0128",
            BadInitializer => "E0129",
            BadPartial => "E0130",
            TypeError => "E0131",
            IdMismatch => "E0201",
            IdOverlap => "E0202",
            IdRedeclared => "E0203",
            IdNonConstant => "E0204",
            IdType => "E0205",
            IdRange => "E0206",
            PrefixViolation => "E0301",
            CodewordNotBits => "E0302",
            MapArity => "E0303",
            MapCycle => "E0304",
            DuplicateMap => "E0305",
            MapEscape => "E0306",
            MapTooWide => "E0307",
            UnknownPragma => "W0401",
        }
    }
}

impl fmt::Display for Code {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub code: Code,
    pub message: String,
    pub loc: Loc,
}

impl Diagnostic {
    pub fn error(code: Code, loc: Loc, message: impl Into<String>) -> Self {
        Diagnostic { severity: Severity::Error, code, message: message.into(), loc }
    }

    pub fn warning(code: Code, loc: Loc, message: impl Into<String>) -> Self {
        Diagnostic { severity: Severity::Warning, code, message: message.into(), loc }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }

    /// `file:line:col: severity[code]: message`
    pub fn render(&self, sources: &SourceMap) -> String {
        if self.loc.line == 0 {
            // no source position, e.g. an unreadable entry file
            return format!("{}[{}]: {}", self.severity, self.code, self.message);
        }
        format!("{}: {}[{}]: {}", sources.display(self.loc), self.severity, self.code, self.message)
    }
}

/// Sorts diagnostics by location, keeping emission order for ties.
pub fn sort_by_location(diags: &mut [Diagnostic]) {
    diags.sort_by_key(|d| d.loc.key());
}

pub fn has_errors(diags: &[Diagnostic]) -> bool {
    diags.iter().any(Diagnostic::is_error)
}
