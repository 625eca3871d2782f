use std::fmt;
use std::path::{Path, PathBuf};

/// Identifies a source file inside a [`SourceMap`].
pub type FileId = u32;

/// A position in a source file (1-based line and column).
///
/// Locations never take part in structural equality: two ASTs that differ
/// only in where their nodes came from compare equal. Use [`Loc::key`] when an
/// ordering by position is needed.
#[derive(Debug, Clone, Copy, Default, Eq)]
pub struct Loc {
    pub file: FileId,
    pub line: u32,
    pub col: u32,
}

impl PartialEq for Loc {
    fn eq(&self, _other: &Self) -> bool {
        true
    }
}

impl std::hash::Hash for Loc {
    fn hash<H: std::hash::Hasher>(&self, _state: &mut H) {}
}

impl Loc {
    pub fn new(file: FileId, line: u32, col: u32) -> Self {
        Loc { file, line, col }
    }

    pub fn key(&self) -> (FileId, u32, u32) {
        (self.file, self.line, self.col)
    }
}

/// File names by id, for rendering locations.
#[derive(Debug, Clone, Default)]
pub struct SourceMap {
    files: Vec<PathBuf>,
}

impl SourceMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, path: impl Into<PathBuf>) -> FileId {
        self.files.push(path.into());
        (self.files.len() - 1) as FileId
    }

    pub fn path(&self, id: FileId) -> Option<&Path> {
        self.files.get(id as usize).map(|p| p.as_path())
    }

    pub fn len(&self) -> usize {
        self.files.len()
    }

    pub fn is_empty(&self) -> bool {
        self.files.is_empty()
    }

    pub fn display(&self, loc: Loc) -> LocDisplay<'_> {
        LocDisplay { map: self, loc }
    }
}

pub struct LocDisplay<'a> {
    map: &'a SourceMap,
    loc: Loc,
}

impl fmt::Display for LocDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.map.path(self.loc.file) {
            Some(p) => write!(f, "{}:{}:{}", p.display(), self.loc.line, self.loc.col),
            None => write!(f, "<input>:{}:{}", self.loc.line, self.loc.col),
        }
    }
}
