//! Trace events and their text form.

use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceKind {
    Enter,
    Leave,
    Field,
    Align,
    IdDispatch,
    Mismatch,
}

/// One line of a parse or generation trace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceEvent {
    pub kind: TraceKind,
    /// Class name for enter, leave and dispatch events; field label otherwise.
    pub name: String,
    pub offset: u64,
    pub len: u64,
    /// Rendered value; the value found for mismatches.
    pub value: String,
    /// Rendered expected value, mismatches only.
    pub expected: String,
    pub depth: usize,
}

impl TraceEvent {
    pub(crate) fn new(kind: TraceKind, name: impl Into<String>, depth: usize) -> Self {
        TraceEvent { kind, name: name.into(), offset: 0, len: 0, value: String::new(), expected: String::new(), depth }
    }
}

impl fmt::Display for TraceEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for _ in 0..self.depth {
            f.write_str("  ")?;
        }
        match self.kind {
            TraceKind::Enter => write!(f, "+{} @{}", self.name, self.offset),
            TraceKind::Leave => write!(f, "-{} ({} bits)", self.name, self.len),
            TraceKind::Field => write!(f, "{} = {} ({} bits @ {})", self.name, self.value, self.len, self.offset),
            TraceKind::Align => write!(f, "align +{}", self.len),
            TraceKind::IdDispatch => write!(f, "id-dispatch -> {}", self.name),
            TraceKind::Mismatch => {
                write!(f, "MISMATCH {} expected {} got {} @ {}", self.name, self.expected, self.value, self.offset)
            }
        }
    }
}

/// One event per line, each terminated by a newline.
pub fn render_trace(events: &[TraceEvent]) -> String {
    let mut out = String::new();
    for e in events {
        out.push_str(&e.to_string());
        out.push('\n');
    }
    out
}
