use std::collections::HashSet;
use std::fmt;

use serde::Serialize;

use super::{Category, Registry, Standard, StandardKind};
use crate::text::{is_slug, normalize};

/// One violated rule, naming the offending field.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub standard_id: String,
    pub field: String,
    pub rule: String,
}

impl Diagnostic {
    fn new(s: &Standard, field: impl Into<String>, rule: impl Into<String>) -> Self {
        Self {
            standard_id: s.id.clone(),
            field: field.into(),
            rule: rule.into(),
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}: {}", self.standard_id, self.field, self.rule)
    }
}

/// Checks a standard against its own invariants and against the registry it
/// belongs to. An empty result means the standard is well formed.
pub fn validate_standard(s: &Standard, registry: &Registry) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    if !is_slug(&s.id) {
        out.push(Diagnostic::new(s, "id", "must be a non-empty lowercase slug"));
    }
    if s.name.trim().is_empty() {
        out.push(Diagnostic::new(s, "name", "must not be empty"));
    }
    if s.version.trim().is_empty() {
        out.push(Diagnostic::new(s, "version", "must not be empty"));
    }
    if s.kind != StandardKind::Supplement && s.count(Category::Essential) == 0 {
        out.push(Diagnostic::new(s, "attributes", "no essential attributes"));
    }
    if s.kind == StandardKind::General && registry.general_id() != s.id {
        out.push(Diagnostic::new(
            s,
            "kind",
            format!(
                "registry designates `{}` as the General Standard",
                registry.general_id()
            ),
        ));
    }

    let general_texts: HashSet<String> = match registry.general() {
        Some(g) if g.id != s.id => g.attributes.iter().map(|a| normalize(&a.text)).collect(),
        _ => HashSet::new(),
    };
    let mut ids = HashSet::new();
    let mut texts = HashSet::new();
    for item in &s.attributes {
        let field = format!("attributes.{}", item.item_id);
        if !is_slug(&item.item_id) {
            out.push(Diagnostic::new(s, &field, "item id must be a lowercase slug"));
        }
        if !ids.insert(item.item_id.as_str()) {
            out.push(Diagnostic::new(s, &field, "duplicate item id"));
        }
        let norm = normalize(&item.text);
        if norm.is_empty() {
            out.push(Diagnostic::new(s, &field, "item text must not be empty"));
        } else if !texts.insert(norm.clone()) {
            out.push(Diagnostic::new(s, &field, "duplicate item text within standard"));
        }
        if general_texts.contains(&norm) {
            out.push(Diagnostic::new(s, &field, "duplicates General Standard item"));
        }
        match (&item.followup_tree_ref, item.category) {
            (Some(tree), Category::Essential) => {
                if !registry.has_tree(tree) {
                    out.push(Diagnostic::new(
                        s,
                        &field,
                        format!("follow-up tree `{tree}` does not resolve"),
                    ));
                }
            }
            (Some(_), _) => out.push(Diagnostic::new(
                s,
                &field,
                "only essential attributes may carry a follow-up tree",
            )),
            (None, _) => {}
        }
    }
    if s.kind != StandardKind::General && !s.initial_checks.is_empty() {
        out.push(Diagnostic::new(
            s,
            "initial_checks",
            "only the General Standard lists initial checks",
        ));
    }
    out
}
