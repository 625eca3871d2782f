//! Interpreter toolkit for declarative bitstream syntax descriptions.
//!
//! A schema (`.fl` source) describes the bit-level layout of a media format as
//! C++/Java-like classes whose members carry a parse length. The pipeline is:
//!
//! ```text
//! source --frontend--> Ast --sema--> SyntaxSpec --engine--> ObjectValue / bytes
//! ```
//!
//! [`frontend`] tokenizes and parses the source and resolves `%include` and
//! `%import`. [`sema`] applies the scoping and typing rules and compiles maps
//! through [`vlcmap`]. [`engine`] then parses (`get`) or generates (`put`)
//! bitstreams over the cursors in [`bitio`].

pub mod bitio;
pub mod cli;
pub mod diag;
pub mod engine;
pub mod frontend;
pub mod sema;
pub mod source;
pub mod value;
pub mod vlcmap;

pub use bitio::{BitReader, BitSink, BitSource, BitWriter, ByteOrder};
pub use diag::{Diagnostic, Severity};
pub use engine::{generate_object, parse_object, ObjectValue, Session, SessionOptions};
pub use frontend::{parse_source, resolve_includes, Ast};
pub use sema::{analyze, AnalyzeOptions, SyntaxSpec};
pub use source::{Loc, SourceMap};
pub use value::Value;
