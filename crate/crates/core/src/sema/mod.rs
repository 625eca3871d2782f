//! Name resolution, scoping and type checks, object ID validation and
//! constant folding. Produces the [`SyntaxSpec`] the engine executes.

mod check;
mod ids;
pub mod ir;
mod maps;

use std::collections::HashMap;

use indexmap::IndexMap;

use crate::bitio::ByteOrder;
use crate::diag::Diagnostic;
use crate::frontend::Ast;
use crate::source::Loc;
use crate::value::{ScalarType, Value};
use crate::vlcmap::{MapSet, DEFAULT_STEP};

pub use ids::check_ids;
pub use ir::{ClassId, VarType};

/// Default for the array size cap.
pub const DEFAULT_ARRAY_CAP: u64 = 1024;

/// Largest parse size in bits.
pub const MAX_FIELD_BITS: u32 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AnalyzeOptions {
    /// Initial array size cap; `%pragma array=N` overrides it per site.
    pub array_cap: u64,
    /// Decoder step size used when compiling maps.
    pub step: u32,
}

impl Default for AnalyzeOptions {
    fn default() -> Self {
        AnalyzeOptions { array_cap: DEFAULT_ARRAY_CAP, step: DEFAULT_STEP }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MemberKind {
    Param,
    Id,
    Parsable,
    Plain,
}

/// A class member as seen from outside the class.
#[derive(Debug, Clone, PartialEq)]
pub struct Member {
    pub name: String,
    pub kind: MemberKind,
    pub ty: VarType,
    pub dims: usize,
    pub is_const: bool,
    pub loc: Loc,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamInfo {
    pub name: String,
    pub ty: VarType,
    pub dims: usize,
}

/// A class's own object identifier.
#[derive(Debug, Clone, PartialEq)]
pub struct IdInfo {
    pub name: String,
    pub ty: ScalarType,
    pub size: u32,
    pub align: Option<u32>,
    pub order: ByteOrder,
    /// Inclusive bounds; equal for a single value.
    pub lo: i128,
    pub hi: i128,
    pub loc: Loc,
}

impl IdInfo {
    pub fn contains(&self, v: i128) -> bool {
        self.lo <= v && v <= self.hi
    }
}

/// Pragma settings in effect at the end of a class body.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassFlags {
    pub get: bool,
    pub put: bool,
    pub trace: bool,
    /// `trace="..."`; recorded only.
    pub trace_name: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassInfo {
    pub name: String,
    pub loc: Loc,
    pub parent: Option<ClassId>,
    pub is_abstract: bool,
    /// `aligned class`: alignment applied before each object.
    pub align: Option<u32>,
    pub params: Vec<ParamInfo>,
    pub id: Option<IdInfo>,
    /// Parameters, own ID, then parsable and top-level non-parsable members
    /// in declaration order. Inherited members are not repeated.
    pub members: Vec<Member>,
    pub parsable: bool,
    pub flags: ClassFlags,
    /// Topmost ancestor (or self) declaring an ID.
    pub family: Option<ClassId>,
    pub body: Vec<ir::Stmt>,
}

impl ClassInfo {
    pub fn member(&self, name: &str) -> Option<&Member> {
        self.members.iter().find(|m| m.name == name)
    }

    /// Can be selected by ID dispatch.
    pub fn dispatchable(&self) -> bool {
        self.id.is_some()
    }
}

/// One ID value or range of a polymorphic family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IdEntry {
    pub lo: i128,
    pub hi: i128,
    pub class: ClassId,
}

/// The checked description of one bitstream language.
#[derive(Debug, Clone)]
pub struct SyntaxSpec {
    pub classes: Vec<ClassInfo>,
    class_ids: HashMap<String, ClassId>,
    pub maps: MapSet,
    pub constants: IndexMap<String, Value>,
    /// Per family root, the IDs of every class in the family.
    pub id_index: HashMap<ClassId, Vec<IdEntry>>,
    pub warnings: Vec<Diagnostic>,
}

impl SyntaxSpec {
    pub fn class_id(&self, name: &str) -> Option<ClassId> {
        self.class_ids.get(name).copied()
    }

    pub fn class(&self, name: &str) -> Option<&ClassInfo> {
        self.class_id(name).map(|i| &self.classes[i])
    }

    /// `id` and its ancestors, base first.
    pub fn lineage(&self, id: ClassId) -> Vec<ClassId> {
        let mut out = vec![id];
        let mut c = id;
        while let Some(p) = self.classes[c].parent {
            out.push(p);
            c = p;
        }
        out.reverse();
        out
    }

    pub fn derives_from(&self, class: ClassId, base: ClassId) -> bool {
        let mut c = Some(class);
        while let Some(k) = c {
            if k == base {
                return true;
            }
            c = self.classes[k].parent;
        }
        false
    }

    /// Nearest ID declaration for `class`, own or inherited.
    pub fn effective_id(&self, class: ClassId) -> Option<&IdInfo> {
        let mut c = Some(class);
        while let Some(k) = c {
            if let Some(id) = &self.classes[k].id {
                return Some(id);
            }
            c = self.classes[k].parent;
        }
        None
    }

    /// Member lookup through the inheritance chain, nearest first.
    pub fn find_member(&self, class: ClassId, name: &str) -> Option<(ClassId, &Member)> {
        let mut c = Some(class);
        while let Some(k) = c {
            if let Some(m) = self.classes[k].member(name) {
                return Some((k, m));
            }
            c = self.classes[k].parent;
        }
        None
    }

    /// ID entries of `class` and every descendant declaring an ID.
    pub fn dispatch_candidates(&self, class: ClassId) -> Vec<IdEntry> {
        let Some(root) = self.classes[class].family else {
            return Vec::new();
        };
        self.id_index
            .get(&root)
            .map(|v| v.iter().filter(|e| self.derives_from(e.class, class)).copied().collect())
            .unwrap_or_default()
    }

    /// Class among the candidates of `class` whose ID covers `value`.
    pub fn class_for_id(&self, class: ClassId, value: i128) -> Option<ClassId> {
        self.dispatch_candidates(class).iter().find(|e| e.lo <= value && value <= e.hi).map(|e| e.class)
    }

    /// `isidof(class, value)`.
    pub fn isidof(&self, class: ClassId, value: i128) -> bool {
        self.class_for_id(class, value).is_some()
    }
}

/// Checks `ast` and builds its [`SyntaxSpec`]. On failure every diagnostic
/// found is returned, warnings included, ordered by location.
pub fn analyze(ast: &Ast, opts: &AnalyzeOptions) -> Result<SyntaxSpec, Vec<Diagnostic>> {
    check::Analyzer::new(opts).run(ast)
}

/// Folds every constant subexpression in the class bodies of `spec`.
/// [`analyze`] already does this; the function is idempotent.
pub fn fold_consts(mut spec: SyntaxSpec) -> SyntaxSpec {
    for c in &mut spec.classes {
        for s in &mut c.body {
            check::fold_stmt(s);
        }
    }
    spec
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diag::Code;
    use crate::frontend::ast::ExprKind;
    use crate::frontend::parse_source;

    fn spec(src: &str) -> SyntaxSpec {
        let ast = parse_source(src, 0).unwrap();
        match analyze(&ast, &AnalyzeOptions::default()) {
            Ok(s) => s,
            Err(d) => panic!("{d:#?}"),
        }
    }

    fn codes(src: &str) -> Vec<Code> {
        let ast = parse_source(src, 0).unwrap();
        match analyze(&ast, &AnalyzeOptions::default()) {
            Ok(s) => s.warnings.iter().map(|d| d.code).collect(),
            Err(d) => d.iter().map(|d| d.code).collect(),
        }
    }

    fn first_decl(s: &SyntaxSpec, class: &str) -> ir::Decl {
        s.class(class)
            .unwrap()
            .body
            .iter()
            .find_map(|st| match &st.kind {
                ir::StmtKind::Decl(d) => Some((**d).clone()),
                _ => None,
            })
            .unwrap()
    }

    const FIG9: &str = "class A {
        int i = 1;
        int(2) a;
        if (a == 2) {
            int j = i;
            int i = 2;
            int a;
        }
    }
    class B {
        A a;
        a.j = 1;
        int j = a.a + 1;
        j = a.i + 2;
        int(3) b;
    }";

    #[test]
    fn scoping_errors() {
        let ast = parse_source(FIG9, 0).unwrap();
        let d = analyze(&ast, &AnalyzeOptions::default()).unwrap_err();
        let got: Vec<(Code, u32)> = d.iter().map(|d| (d.code, d.loc.line)).collect();
        assert_eq!(got, vec![(Code::HidesParsable, 7), (Code::NotMember, 12)]);
        assert!(d[1].message.contains("not a class member"));
    }

    #[test]
    fn member_sets() {
        let s = spec("class P(int n) { int k = n; if (k == 1) { int(4) x; int tmp; } else { int(8) y; } int(2) z; }");
        let names: Vec<&str> = s.class("P").unwrap().members.iter().map(|m| m.name.as_str()).collect();
        assert_eq!(names, vec!["n", "k", "x", "y", "z"]);
        assert!(s.class("P").unwrap().parsable);
    }

    #[test]
    fn float_sizes() {
        assert_eq!(codes("class F { float(16) x; }"), vec![Code::FloatSize]);
        assert_eq!(codes("class F { float(32) x; double(64) y; }"), vec![]);
        assert_eq!(codes("class F { double(32) y; }"), vec![Code::FloatSize]);
    }

    #[test]
    fn constants_fold() {
        let s = spec("const int a = 4; const int z = 8/2; class T { int(a) t; int(z + 1) u; }");
        assert_eq!(s.constants["z"], Value::Int(4));
        let d = first_decl(&s, "T");
        assert_eq!(d.parse.unwrap().size, ir::ParseSize::Fixed(4));
        assert_eq!(codes("const int z = 1/0;"), vec![Code::DivByZero]);
        assert_eq!(codes("int g;"), vec![Code::GlobalNonConst]);
        assert_eq!(codes("const int(3) g = 1;"), vec![Code::GlobalNonConst]);
    }

    #[test]
    fn zero_parse_size() {
        let s = spec("class Z { int(0) a = 3; }");
        assert_eq!(first_decl(&s, "Z").parse.unwrap().size, ir::ParseSize::Zero);
    }

    #[test]
    fn parsables_are_not_lvalues() {
        assert_eq!(codes("class C { int(3) a; a = 1; }"), vec![Code::ParsableAssigned]);
        assert_eq!(codes("class C { int(3) a; a++; }"), vec![Code::ParsableAssigned]);
        assert_eq!(codes("class C { const int k = 1; k = 2; }"), vec![Code::ConstAssigned]);
        assert_eq!(codes("class C { int k; (k + 1) = 2; }"), vec![Code::NotLvalue]);
    }

    #[test]
    fn boolean_conditions() {
        assert_eq!(codes("class C { int(3) a; if (a) { int(1) b; } }"), vec![Code::NotBoolean]);
        assert_eq!(codes("class C { int(3) a; while (!(a > 2) && true) { int(1) b; } }"), vec![]);
    }

    #[test]
    fn parameter_checks() {
        let base = "class S(int n, int v[]) { int(n) x; }";
        assert_eq!(codes(&format!("{base} class U {{ int t[2]; S s(3, t); }}")), vec![]);
        assert_eq!(codes(&format!("{base} class U {{ int t[2][2]; S s(3, t); }}")), vec![Code::ParamMismatch]);
        assert_eq!(codes(&format!("{base} class U {{ int t[2]; S s(3); }}")), vec![Code::ParamMismatch]);
        assert_eq!(codes("class D(int a, int a) { int(1) x; }"), vec![Code::DuplicateParam]);
    }

    #[test]
    fn redeclaration_rules() {
        assert_eq!(codes("class C { int(3) a; if (a == 1) { int(4) a; } }"), vec![]);
        assert_eq!(codes("class C { int(3) a; char(4) a; }"), vec![Code::BadParsableRedecl]);
        assert_eq!(codes("class C { const int(3) a = 1; int(4) a; }"), vec![Code::BadParsableRedecl]);
        assert_eq!(codes("class C { int k; int k; }"), vec![Code::Redeclared]);
        assert_eq!(codes("class C { int k; { int k; int k; } }"), vec![Code::Redeclared]);
        assert_eq!(codes("class A { int(2) a; } class B extends A { int a; }"), vec![]);
        assert_eq!(codes("class C { int(2) a; int a; }"), vec![Code::HidesParsable]);
    }

    #[test]
    fn id_families() {
        let s = spec("class A : int(1) id = 0 { int(2) a; } class B extends A : int(1) id = 1 { int(3) b; }");
        let a = s.class_id("A").unwrap();
        let b = s.class_id("B").unwrap();
        assert_eq!(s.id_index[&a].len(), 2);
        assert_eq!(s.class_for_id(a, 1), Some(b));
        assert_eq!(s.class_for_id(b, 0), None);
        assert!(s.isidof(a, 0));
        assert_eq!(
            codes("class A : int(4) id = 0 { } class B extends A : int(4) id = 3 { } class C extends A : int(4) id = 3 { }"),
            vec![Code::IdOverlap]
        );
        assert_eq!(
            codes("class S : int(32) c = 0x101 .. 0x1AF { } class T extends S : int(32) c = 0x1A0 .. 0x1FF { }"),
            vec![Code::IdOverlap]
        );
        assert_eq!(codes("class A : int(4) id = 0 { } class B extends A : int(5) id = 1 { }"), vec![Code::IdMismatch]);
        assert_eq!(codes("class A : int(4) id = 0 { int(2) id; }"), vec![Code::IdRedeclared]);
        assert_eq!(codes("const int k = 2; class A : int(4) id = 2*k { }"), vec![]);
        assert_eq!(codes("class A : int(4) id = 2 { } class B { int k = 1; int(4) x = 2; }"), vec![]);
        assert_eq!(codes("class A : int(4) id = 2*k { }"), vec![Code::Undefined]);
        assert_eq!(codes("class A : int(4) id = 16 { }"), vec![Code::IdRange]);
        assert_eq!(codes("class A { int(8) x; int y = isidof(A, x); }"), vec![Code::IsidofNoIds]);
    }

    #[test]
    fn ranges_inclusive() {
        let s = spec("class S : aligned bit(32) c = 0x101 .. 0x1AF { } class T : const int(8) d = 1 { }");
        let c = s.class_id("S").unwrap();
        assert!(s.isidof(c, 0x101));
        assert!(s.isidof(c, 0x1AF));
        assert!(!s.isidof(c, 0x1B0));
    }

    #[test]
    fn map_type_checks() {
        let m = "map M(int) { 0b0, 1, 0b1, 2 }";
        assert_eq!(codes(&format!("{m} class C {{ int(M) x; }}")), vec![]);
        assert_eq!(codes(&format!("{m} class C {{ float(M) x; }}")), vec![Code::MapTypeMismatch]);
        assert_eq!(codes("map A(int) { 0b0, 1, 0b01, 2 }"), vec![Code::PrefixViolation]);
        let s = spec(
            "class YUVblocks { int Yblocks; int Ublocks; int Vblocks; }
             map blocks_per_component (YUVblocks) { 0b00, {4, 1, 1}, 0b01, {4, 2, 2}, 0b10, {4, 4, 4} }
             class F { YUVblocks(blocks_per_component) chroma_format; int k = chroma_format.Ublocks; }",
        );
        assert!(s.class("F").unwrap().parsable);
        assert!(!s.class("YUVblocks").unwrap().parsable);
        assert_eq!(s.maps.by_name("blocks_per_component").unwrap().entries.len(), 3);
        assert_eq!(
            codes("map A(int) { 0b0, 1, 0b1, int(B) } map B(int) { 0b0, 1, 0b1, int(A) }"),
            vec![Code::MapCycle, Code::MapCycle]
        );
    }

    #[test]
    fn misc_errors() {
        assert_eq!(codes("class C { int k; int j = lengthof(k); }"), vec![Code::LengthofTarget]);
        assert_eq!(codes("class C { int(5) i; int(3) j = lengthof(i); }"), vec![]);
        assert_eq!(codes("class C { int k; break; }"), vec![Code::BreakOutside]);
        assert_eq!(codes("class C { X x; }"), vec![Code::UnknownType]);
        assert_eq!(codes("class C { int(65) x; }"), vec![Code::ParseSizeRange]);
        assert_eq!(codes("class C { little int(12) x; }"), vec![Code::LittleEndianWidth]);
        assert_eq!(codes("class C { char(8) s[4] = \"GIF87a\"; }"), vec![Code::StringInit]);
        assert_eq!(codes("class C { int(8)* x[2]; }"), vec![Code::BadLookahead]);
        assert_eq!(codes("class C { int x[[2]]; }"), vec![Code::BadPartial]);
        assert_eq!(codes("abstract class A { int(1) x; } class B { A a; }"), vec![Code::AbstractInstance]);
        assert_eq!(codes("class C { int(2) x; switch (x) { case 1: case 1: break; } }"), vec![Code::SwitchLabel]);
        assert_eq!(codes("class C { %pragma bogus\n int(2) x; }"), vec![Code::UnknownPragma]);
    }

    #[test]
    fn pragmas_per_site() {
        let s = spec(
            "%pragma put, get, trace, array=128
             class Example {
                 %pragma noput
                 unsigned int(10) length;
                 %pragma array=1024
                 char(3) data[length];
                 %pragma array=128
                 %pragma trace=\"Tracer.trace\"
             }",
        );
        let c = s.class("Example").unwrap();
        assert!(!c.flags.put && c.flags.get && c.flags.trace);
        assert_eq!(c.flags.trace_name.as_deref(), Some("Tracer.trace"));
        let caps: Vec<u64> = c
            .body
            .iter()
            .filter_map(|s| match &s.kind {
                ir::StmtKind::Decl(d) => Some(d.array_cap),
                _ => None,
            })
            .collect();
        assert_eq!(caps, vec![128, 1024]);
    }

    #[test]
    fn fold_is_idempotent() {
        let s = spec("const int a = 3; class C { int(8) x; int y = (a + 1) * x; }");
        let before = s.classes[0].body.clone();
        let s = fold_consts(s);
        assert_eq!(s.classes[0].body, before);
        let ir::StmtKind::Decl(d) = &before[1].kind else { panic!() };
        let Some(ir::InitSpec::Expr(e)) = &d.init else { panic!() };
        let ExprKind::Binary(_, l, _) = &e.kind else { panic!() };
        assert_eq!(l.kind, ExprKind::Const(Value::Int(4)));
    }
}
