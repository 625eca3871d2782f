//! Polymorphic object ID families.

use std::collections::HashMap;

use crate::diag::{Code, Diagnostic};

use super::{ClassId, ClassInfo, IdEntry, SyntaxSpec};

/// Sets `family` on every class and returns the per-root ID index.
pub(super) fn build_families(classes: &mut [ClassInfo]) -> HashMap<ClassId, Vec<IdEntry>> {
    let mut index: HashMap<ClassId, Vec<IdEntry>> = HashMap::new();
    for c in 0..classes.len() {
        let mut root = None;
        let mut k = Some(c);
        let mut guard = 0;
        while let Some(x) = k {
            if classes[x].id.is_some() {
                root = Some(x);
            }
            k = classes[x].parent;
            guard += 1;
            if guard > classes.len() {
                break;
            }
        }
        classes[c].family = root;
    }
    for (c, info) in classes.iter().enumerate() {
        if let (Some(id), Some(root)) = (&info.id, info.family) {
            index.entry(root).or_default().push(IdEntry { lo: id.lo, hi: id.hi, class: c });
        }
    }
    index
}

/// Family consistency: each derived ID matches its base's ID in name, type
/// and parse size, and the values of one family are pairwise disjoint.
pub(super) fn check_families(classes: &[ClassInfo], index: &HashMap<ClassId, Vec<IdEntry>>) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    for info in classes {
        let Some(id) = &info.id else { continue };
        let mut p = info.parent;
        let mut guard = 0;
        while let Some(k) = p {
            if let Some(base) = &classes[k].id {
                if base.name != id.name || base.ty != id.ty || base.size != id.size {
                    diags.push(Diagnostic::error(
                        Code::IdMismatch,
                        id.loc,
                        format!(
                            "ID of {} must match the ID of {} in name, type and size ({} {}({}))",
                            info.name,
                            classes[k].name,
                            base.ty.keyword(),
                            base.size,
                            base.name
                        ),
                    ));
                }
                break;
            }
            p = classes[k].parent;
            guard += 1;
            if guard > classes.len() {
                break;
            }
        }
    }
    let mut roots: Vec<&ClassId> = index.keys().collect();
    roots.sort();
    for root in roots {
        let entries = &index[root];
        for (j, b) in entries.iter().enumerate() {
            if let Some(a) = entries[..j].iter().find(|a| a.lo <= b.hi && b.lo <= a.hi) {
                let loc = classes[b.class].id.as_ref().map(|i| i.loc).unwrap_or(classes[b.class].loc);
                diags.push(Diagnostic::error(
                    Code::IdOverlap,
                    loc,
                    format!(
                        "ID {} of class {} overlaps ID {} of class {}",
                        show(b),
                        classes[b.class].name,
                        show(a),
                        classes[a.class].name
                    ),
                ));
            }
        }
    }
    diags
}

fn show(e: &IdEntry) -> String {
    if e.lo == e.hi {
        e.lo.to_string()
    } else {
        format!("{} .. {}", e.lo, e.hi)
    }
}

/// Re-runs the family checks over an analyzed schema.
pub fn check_ids(spec: &SyntaxSpec) -> Vec<Diagnostic> {
    check_families(&spec.classes, &spec.id_index)
}
