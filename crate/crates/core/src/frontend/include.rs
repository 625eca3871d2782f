//! `%include` / `%import` resolution.

use std::collections::HashSet;
use std::io;
use std::path::{Path, PathBuf};

use crate::diag::{Code, Diagnostic};
use crate::source::{Loc, SourceMap};

use super::ast::{Ast, Item, ItemKind, Origin};
use super::parse_unit;

/// A fully loaded translation unit.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub ast: Ast,
    pub sources: SourceMap,
}

/// Load failure. `sources` is returned so diagnostics can be rendered.
#[derive(Debug, Clone)]
pub struct LoadError {
    pub diagnostics: Vec<Diagnostic>,
    pub sources: SourceMap,
}

impl LoadError {
    /// True if the failure was a missing or unreadable file rather than a
    /// problem in the source text.
    pub fn is_io(&self) -> bool {
        self.diagnostics.iter().any(|d| d.code == Code::IncludeNotFound)
    }
}

struct Resolver<'a> {
    search: &'a [PathBuf],
    read: &'a dyn Fn(&Path) -> io::Result<String>,
    sources: SourceMap,
    /// Files currently being expanded, outermost first.
    stack: Vec<PathBuf>,
    done: HashSet<PathBuf>,
}

fn normalize(p: &Path) -> PathBuf {
    std::fs::canonicalize(p).unwrap_or_else(|_| p.to_path_buf())
}

impl Resolver<'_> {
    fn locate(&self, name: &str, from: &Path) -> Option<PathBuf> {
        let dir = from.parent().unwrap_or_else(|| Path::new(""));
        std::iter::once(dir.join(name)).chain(self.search.iter().map(|s| s.join(name))).find(|c| (self.read)(c).is_ok())
    }

    fn load(&mut self, path: &Path, origin: Origin, at: Loc) -> Result<Vec<Item>, Diagnostic> {
        let key = normalize(path);
        if let Some(i) = self.stack.iter().position(|p| normalize(p) == key) {
            let chain: Vec<String> = self.stack[i..]
                .iter()
                .chain(std::iter::once(&path.to_path_buf()))
                .map(|p| p.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default())
                .collect();
            return Err(Diagnostic::error(Code::IncludeCycle, at, format!("inclusion cycle: {}", chain.join(" -> "))));
        }
        if !self.done.insert(key) {
            // already merged through another path
            return Ok(Vec::new());
        }
        let text = (self.read)(path).map_err(|e| {
            Diagnostic::error(Code::IncludeNotFound, at, format!("cannot read {}: {e}", path.display()))
        })?;
        let file = self.sources.add(path);
        let ast = parse_unit(&text, file, origin)?;
        self.stack.push(path.to_path_buf());
        let mut out = Vec::new();
        for item in ast.items {
            let nested = match &item.kind {
                ItemKind::Include(n) => Some((n.clone(), Origin::Included)),
                ItemKind::Import(n) => Some((n.clone(), Origin::Imported)),
                _ => None,
            };
            let loc = item.loc;
            out.push(item);
            if let Some((name, kind)) = nested {
                let target = self.locate(&name, path).ok_or_else(|| {
                    Diagnostic::error(Code::IncludeNotFound, loc, format!("cannot find '{name}' on the search path"))
                })?;
                out.extend(self.load(&target, kind, loc)?);
            }
        }
        self.stack.pop();
        Ok(out)
    }
}

/// Loads `entry` and merges every file it includes or imports, in place of
/// the directive. Included items keep an origin flag; a file reached twice
/// is merged only once. Files are looked up next to the including file
/// first, then in `search` in order.
pub fn resolve_includes(entry: &Path, search: &[PathBuf]) -> Result<Loaded, LoadError> {
    resolve_includes_with(entry, search, &|p| std::fs::read_to_string(p))
}

/// Like [`resolve_includes`] with a custom file reader.
pub fn resolve_includes_with(
    entry: &Path,
    search: &[PathBuf],
    read: &dyn Fn(&Path) -> io::Result<String>,
) -> Result<Loaded, LoadError> {
    let mut r = Resolver { search, read, sources: SourceMap::new(), stack: Vec::new(), done: HashSet::new() };
    match r.load(entry, Origin::Main, Loc::default()) {
        Ok(items) => Ok(Loaded { ast: Ast { items }, sources: r.sources }),
        Err(d) => Err(LoadError { diagnostics: vec![d], sources: r.sources }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    fn fs(files: &[(&str, &str)]) -> impl Fn(&Path) -> io::Result<String> {
        let m: HashMap<PathBuf, String> = files.iter().map(|(p, s)| (PathBuf::from(p), s.to_string())).collect();
        move |p: &Path| m.get(p).cloned().ok_or_else(|| io::Error::from(io::ErrorKind::NotFound))
    }

    #[test]
    fn include_merges_constants() {
        let read =
            fs(&[("main.fl", "%include \"other.fl\"\nclass Test { int(a) t; }"), ("other.fl", "const int a = 4;")]);
        let l = resolve_includes_with(Path::new("main.fl"), &[], &read).unwrap();
        let origins: Vec<Origin> = l.ast.items.iter().map(|i| i.origin).collect();
        assert_eq!(origins, vec![Origin::Main, Origin::Included, Origin::Main]);
        assert_eq!(l.ast.constants().next().unwrap().name, "a");
    }

    #[test]
    fn import_sets_origin() {
        let read =
            fs(&[("main.fl", "%import \"other.fl\"\nclass Test { int(a) t; }"), ("other.fl", "const int a = 4;")]);
        let l = resolve_includes_with(Path::new("main.fl"), &[], &read).unwrap();
        assert_eq!(l.ast.items[1].origin, Origin::Imported);
    }

    #[test]
    fn cycle_reports_chain() {
        let read = fs(&[("a.fl", "%include \"b.fl\""), ("b.fl", "%include \"a.fl\"")]);
        let e = resolve_includes_with(Path::new("a.fl"), &[], &read).unwrap_err();
        assert_eq!(e.diagnostics[0].code, Code::IncludeCycle);
        assert!(e.diagnostics[0].message.contains("a.fl -> b.fl -> a.fl"), "{}", e.diagnostics[0].message);
    }

    #[test]
    fn missing_file_is_io() {
        let read = fs(&[("a.fl", "%include \"nowhere.fl\"")]);
        let e = resolve_includes_with(Path::new("a.fl"), &[], &read).unwrap_err();
        assert!(e.is_io());
    }

    #[test]
    fn search_path_and_diamond() {
        let read = fs(&[
            ("src/main.fl", "%include \"l.fl\"\n%include \"r.fl\""),
            ("lib/l.fl", "%include \"base.fl\""),
            ("lib/r.fl", "%include \"base.fl\""),
            ("lib/base.fl", "const int k = 1;"),
        ]);
        let l = resolve_includes_with(Path::new("src/main.fl"), &[PathBuf::from("lib")], &read).unwrap();
        assert_eq!(l.ast.constants().count(), 1);
    }
}
