//! Get (parse) and put (generate) over a [`SyntaxSpec`].
//!
//! Both directions run the same interpreter over the class bodies; only the
//! handling of parsable fields differs. Parsing reads the bitstream and fills
//! an [`ObjectValue`]. Generation takes member values from a JSON document
//! (see [`object_to_doc`] for the shape) and writes them out.

mod doc;
mod exec;
mod trace;

use thiserror::Error;

use crate::bitio::{BitError, BitSink, BitSource};
use crate::sema::SyntaxSpec;
use crate::value::Value;

pub use crate::value::ObjectValue;
pub use doc::{object_to_doc, value_to_json, JsonMap};
pub use exec::dispatch_id;
pub use trace::{render_trace, TraceEvent, TraceKind};

/// What to do after an expected-value mismatch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MismatchPolicy {
    #[default]
    Abort,
    /// Report and continue with the value found.
    Warn,
}

#[derive(Debug, Clone)]
pub struct SessionOptions {
    pub on_mismatch: MismatchPolicy,
    pub trace: bool,
    /// Iterations allowed per loop execution before giving up.
    pub max_loop_iterations: u64,
}

impl Default for SessionOptions {
    fn default() -> Self {
        SessionOptions { on_mismatch: MismatchPolicy::Abort, trace: true, max_loop_iterations: 1 << 24 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportKind {
    Mismatch,
    VlcFailure,
    NoIdMatch,
}

/// A problem delivered to the session hook.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Report {
    pub kind: ReportKind,
    pub position: u64,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    EndOfStream,
    Mismatch,
    Vlc,
    NoIdMatch,
    MissingField,
    Unrepresentable,
    ArrayCap,
    Unpopulated,
    BadDocument,
    /// Entry class unusable: unknown, not parsable, abstract or disabled by
    /// pragma, or wrong argument count.
    Usage,
    LoopLimit,
    Runtime,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{message}")]
pub struct EngineError {
    pub position: u64,
    pub kind: ErrorKind,
    pub message: String,
}

impl EngineError {
    pub(crate) fn new(kind: ErrorKind, position: u64, message: impl Into<String>) -> Self {
        EngineError { position, kind, message: message.into() }
    }

    pub(crate) fn bit(e: BitError, position: u64) -> Self {
        match e {
            BitError::EndOfStream { position, .. } => {
                EngineError::new(ErrorKind::EndOfStream, position, "end of stream")
            }
            BitError::OutOfRange { .. } => EngineError::new(ErrorKind::Unrepresentable, position, e.to_string()),
            e => EngineError::new(ErrorKind::Runtime, position, e.to_string()),
        }
    }
}

type Hook<'s> = Box<dyn FnMut(&Report) + 's>;

/// A reusable interpreter over one schema. Holds the trace and reports of the
/// most recent call.
pub struct Session<'s> {
    spec: &'s SyntaxSpec,
    opts: SessionOptions,
    hook: Option<Hook<'s>>,
    events: Vec<TraceEvent>,
    reports: Vec<Report>,
}

impl<'s> Session<'s> {
    pub fn new(spec: &'s SyntaxSpec, opts: SessionOptions) -> Self {
        Session { spec, opts, hook: None, events: Vec::new(), reports: Vec::new() }
    }

    /// Installs a callback that sees every mismatch and lookup failure as it
    /// happens.
    pub fn with_hook(mut self, hook: impl FnMut(&Report) + 's) -> Self {
        self.hook = Some(Box::new(hook));
        self
    }

    pub fn parse(&mut self, class: &str, src: &mut dyn BitSource, args: &[Value]) -> Result<ObjectValue, EngineError> {
        let spec = self.spec;
        let mut noop = |_: &Report| {};
        let hook: &mut dyn FnMut(&Report) = match &mut self.hook {
            Some(h) => h.as_mut(),
            None => &mut noop,
        };
        let mut ex = exec::Exec::new(spec, &self.opts, exec::Io::Get(src), hook);
        let r = ex.entry(class, args.to_vec(), None);
        (self.events, self.reports) = ex.finish();
        r
    }

    /// Writes the object described by `doc`; returns the generated object,
    /// whose `bits` is the number of bits written.
    pub fn generate(
        &mut self,
        class: &str,
        doc: &serde_json::Value,
        sink: &mut dyn BitSink,
        args: &[Value],
    ) -> Result<ObjectValue, EngineError> {
        let spec = self.spec;
        let mut noop = |_: &Report| {};
        let hook: &mut dyn FnMut(&Report) = match &mut self.hook {
            Some(h) => h.as_mut(),
            None => &mut noop,
        };
        let mut ex = exec::Exec::new(spec, &self.opts, exec::Io::Put(sink), hook);
        let r = ex.entry(class, args.to_vec(), Some(doc));
        (self.events, self.reports) = ex.finish();
        r
    }

    pub fn events(&self) -> &[TraceEvent] {
        &self.events
    }

    pub fn take_events(&mut self) -> Vec<TraceEvent> {
        std::mem::take(&mut self.events)
    }

    pub fn reports(&self) -> &[Report] {
        &self.reports
    }

    pub fn trace_text(&self) -> String {
        render_trace(&self.events)
    }
}

/// Parses one `class` object from `src`.
pub fn parse_object(
    spec: &SyntaxSpec,
    class: &str,
    src: &mut dyn BitSource,
    args: &[Value],
    opts: &SessionOptions,
) -> Result<(ObjectValue, Vec<TraceEvent>), EngineError> {
    let mut s = Session::new(spec, opts.clone());
    let obj = s.parse(class, src, args)?;
    Ok((obj, s.take_events()))
}

/// Generates one `class` object described by `doc` into `sink`.
pub fn generate_object(
    spec: &SyntaxSpec,
    class: &str,
    doc: &serde_json::Value,
    sink: &mut dyn BitSink,
    args: &[Value],
    opts: &SessionOptions,
) -> Result<(ObjectValue, Vec<TraceEvent>), EngineError> {
    let mut s = Session::new(spec, opts.clone());
    let obj = s.generate(class, doc, sink, args)?;
    Ok((obj, s.take_events()))
}

#[cfg(test)]
mod tests;
