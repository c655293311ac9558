//! Assembles the standards that apply to a submission into one deduplicated
//! review form and the matching author checklist.

use std::collections::HashMap;
use std::fmt::Write;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::standard::{Category, Registry, Standard, StandardKind};
use crate::text::{normalize, slugify, SLUG_WORDS};

/// Provenance id used for triager-authored items.
pub const ADHOC_SOURCE: &str = "adhoc";
const FORM_EXPORT_HEADER: &str = "# review-form v1";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ComposeError {
    #[error("unknown standard id `{0}`")]
    UnknownStandardId(String),
    #[error("`{id}` is a {actual} standard, expected {expected}")]
    WrongStandardKind {
        id: String,
        expected: StandardKind,
        actual: StandardKind,
    },
    #[error("`{0}` is declared more than once")]
    DuplicateDeclaration(String),
    #[error("item `{text}` is {first} in {first_source} but {second} in {second_source}")]
    CategoryConflict {
        text: String,
        first_source: String,
        first: Category,
        second_source: String,
        second: Category,
    },
    #[error("item `{text}` uses different follow-up trees in {first_source} and {second_source}")]
    FollowUpConflict {
        text: String,
        first_source: String,
        second_source: String,
    },
    #[error("ad-hoc items must not be empty")]
    EmptyAdhocItem,
}

/// The research methods and cross-cutting supplements an author declares.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MethodDeclaration {
    #[serde(default)]
    pub method_ids: Vec<String>,
    #[serde(default)]
    pub supplement_ids: Vec<String>,
}

impl MethodDeclaration {
    pub fn new<M, S>(methods: impl IntoIterator<Item = M>, supplements: impl IntoIterator<Item = S>) -> Self
    where
        M: Into<String>,
        S: Into<String>,
    {
        Self {
            method_ids: methods.into_iter().map(Into::into).collect(),
            supplement_ids: supplements.into_iter().map(Into::into).collect(),
        }
    }

    /// Ids that do not resolve in `registry`.
    pub fn unknown_ids<'a>(&'a self, registry: &'a Registry) -> impl Iterator<Item = &'a str> {
        self.method_ids
            .iter()
            .chain(&self.supplement_ids)
            .map(String::as_str)
            .filter(|id| registry.get(id).is_none())
    }

    /// A copy with every id unknown to `registry` removed.
    pub fn known_only(&self, registry: &Registry) -> Self {
        let keep = |ids: &[String]| ids.iter().filter(|id| registry.get(id).is_some()).cloned().collect();
        Self {
            method_ids: keep(&self.method_ids),
            supplement_ids: keep(&self.supplement_ids),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Provenance {
    pub standard_id: String,
    pub item_id: String,
}

impl Provenance {
    fn key(&self) -> String {
        format!("{}/{}", self.standard_id, self.item_id)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormItem {
    pub key: String,
    pub text: String,
    pub category: Category,
    pub provenance: Vec<Provenance>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub followup_tree_ref: Option<String>,
    /// Authored at triage because no standard covers a declared method.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub adhoc: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceStandard {
    pub id: String,
    pub version: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReviewForm {
    pub form_id: String,
    pub items: Vec<FormItem>,
    pub source_standards: Vec<SourceStandard>,
}

impl ReviewForm {
    pub fn item(&self, key: &str) -> Option<&FormItem> {
        self.items.iter().find(|i| i.key == key)
    }

    pub fn essential_items(&self) -> impl Iterator<Item = &FormItem> {
        self.items.iter().filter(|i| i.category == Category::Essential)
    }

    /// Appends triager-authored essential items. Items whose text matches an
    /// existing essential item are merged into it.
    pub fn with_adhoc_items(mut self, texts: &[String]) -> Result<Self, ComposeError> {
        let mut index: HashMap<String, usize> = self
            .items
            .iter()
            .enumerate()
            .map(|(i, it)| (normalize(&it.text), i))
            .collect();
        for text in texts {
            let text = text.trim();
            if text.is_empty() {
                return Err(ComposeError::EmptyAdhocItem);
            }
            let base = match slugify(text, SLUG_WORDS) {
                s if s.is_empty() => "item".to_string(),
                s => s,
            };
            let mut slug = base.clone();
            let mut n = 2;
            while self.items.iter().any(|i| i.key == format!("{ADHOC_SOURCE}/{slug}")) {
                slug = format!("{base}-{n}");
                n += 1;
            }
            let prov = Provenance {
                standard_id: ADHOC_SOURCE.to_string(),
                item_id: slug,
            };
            let norm = normalize(text);
            if let Some(&i) = index.get(&norm) {
                let existing = &mut self.items[i];
                if existing.category != Category::Essential {
                    return Err(ComposeError::CategoryConflict {
                        text: text.to_string(),
                        first_source: existing.provenance[0].key(),
                        first: existing.category,
                        second_source: prov.key(),
                        second: Category::Essential,
                    });
                }
                existing.provenance.push(prov);
                existing.adhoc = true;
                continue;
            }
            index.insert(norm, self.items.len());
            self.items.push(FormItem {
                key: prov.key(),
                text: text.to_string(),
                category: Category::Essential,
                provenance: vec![prov],
                followup_tree_ref: None,
                adhoc: true,
            });
        }
        self.form_id = form_id(&self.items, &self.source_standards);
        Ok(self)
    }

    /// Versioned plain-text export, one item per line:
    /// `key | category | text | provenance-list`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{FORM_EXPORT_HEADER}");
        let _ = writeln!(out, "form: {}", self.form_id);
        out.push_str(&export_body(&self.items, &self.source_standards));
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("form serializes")
    }
}

fn export_body(items: &[FormItem], sources: &[SourceStandard]) -> String {
    let mut out = String::new();
    let sources: Vec<String> = sources.iter().map(|s| format!("{}@{}", s.id, s.version)).collect();
    let _ = writeln!(out, "sources: {}", sources.join(" "));
    for item in items {
        let prov: Vec<String> = item.provenance.iter().map(Provenance::key).collect();
        let _ = writeln!(
            out,
            "{} | {} | {} | {}",
            item.key,
            item.category.heading().to_lowercase(),
            item.text.replace('|', "\\|"),
            prov.join(",")
        );
    }
    out
}

/// Content hash of the composed items; equal registries and declarations
/// give equal ids.
fn form_id(items: &[FormItem], sources: &[SourceStandard]) -> String {
    let digest = Sha256::digest(export_body(items, sources).as_bytes());
    format!("f-{}", &hex::encode(digest)[..16])
}

/// One row of the author's pre-submission checklist.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChecklistEntry {
    pub key: String,
    pub text: String,
    pub category: Category,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuthorChecklist {
    pub form_id: String,
    pub entries: Vec<ChecklistEntry>,
}

impl AuthorChecklist {
    pub fn to_text(&self) -> String {
        let mut out = format!("Pre-submission checklist for form {}\n", self.form_id);
        for category in Category::ALL {
            let entries: Vec<_> = self.entries.iter().filter(|e| e.category == category).collect();
            if entries.is_empty() {
                continue;
            }
            let _ = writeln!(out, "\n{category}");
            for e in entries {
                let _ = writeln!(out, "- [ ] {}", e.text);
            }
        }
        out
    }
}

/// Orders the applicable standards: General first, then the declared
/// methods and supplements in declaration order.
pub fn resolve_standards<'r>(
    decl: &MethodDeclaration,
    registry: &'r Registry,
) -> Result<Vec<&'r Standard>, ComposeError> {
    let general = registry
        .general()
        .ok_or_else(|| ComposeError::UnknownStandardId(registry.general_id().to_string()))?;
    let mut out = vec![general];
    let groups = [
        (&decl.method_ids, StandardKind::MethodSpecific),
        (&decl.supplement_ids, StandardKind::Supplement),
    ];
    for (ids, expected) in groups {
        for id in ids {
            let s = registry
                .get(id)
                .ok_or_else(|| ComposeError::UnknownStandardId(id.clone()))?;
            if s.kind != expected {
                return Err(ComposeError::WrongStandardKind {
                    id: id.clone(),
                    expected,
                    actual: s.kind,
                });
            }
            if out.iter().any(|o| o.id == s.id) {
                return Err(ComposeError::DuplicateDeclaration(id.clone()));
            }
            out.push(s);
        }
    }
    Ok(out)
}

/// Merges all attribute items of the applicable standards. Items with equal
/// normalized text collapse into the first occurrence and accumulate
/// provenance; their categories and follow-up trees must agree.
pub fn compose_form(decl: &MethodDeclaration, registry: &Registry) -> Result<ReviewForm, ComposeError> {
    let standards = resolve_standards(decl, registry)?;
    let mut items: Vec<FormItem> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    for s in &standards {
        for attr in &s.attributes {
            let prov = Provenance {
                standard_id: s.id.clone(),
                item_id: attr.item_id.clone(),
            };
            let norm = normalize(&attr.text);
            if let Some(&i) = index.get(&norm) {
                let existing = &mut items[i];
                if existing.category != attr.category {
                    return Err(ComposeError::CategoryConflict {
                        text: attr.text.clone(),
                        first_source: existing.provenance[0].key(),
                        first: existing.category,
                        second_source: prov.key(),
                        second: attr.category,
                    });
                }
                if existing.followup_tree_ref != attr.followup_tree_ref {
                    return Err(ComposeError::FollowUpConflict {
                        text: attr.text.clone(),
                        first_source: existing.provenance[0].key(),
                        second_source: prov.key(),
                    });
                }
                existing.provenance.push(prov);
                continue;
            }
            index.insert(norm, items.len());
            items.push(FormItem {
                key: prov.key(),
                text: attr.text.clone(),
                category: attr.category,
                provenance: vec![prov],
                followup_tree_ref: attr.followup_tree_ref.clone(),
                adhoc: false,
            });
        }
    }
    let sources: Vec<SourceStandard> = standards
        .iter()
        .map(|s| SourceStandard {
            id: s.id.clone(),
            version: s.version.clone(),
        })
        .collect();
    Ok(ReviewForm {
        form_id: form_id(&items, &sources),
        items,
        source_standards: sources,
    })
}

pub fn author_checklist(form: &ReviewForm) -> AuthorChecklist {
    AuthorChecklist {
        form_id: form.form_id.clone(),
        entries: form
            .items
            .iter()
            .map(|i| ChecklistEntry {
                key: i.key.clone(),
                text: i.text.clone(),
                category: i.category,
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::standard::parse_standard;

    fn doc(id: &str, kind: &str, items: &[(&str, &str)]) -> String {
        let mut s = format!("---\nid: {id}\nkind: {kind}\n---\n# {id}\n\n## Specific Attributes\n");
        for (cat, text) in items {
            s.push_str(&format!("\n### {cat}\n- [ ] {text}\n"));
        }
        s
    }

    fn registry() -> Registry {
        let docs = [
            doc(
                "general",
                "general",
                &[
                    ("Essential", "states a clear research question"),
                    ("Desirable", "has a title"),
                ],
            ),
            doc(
                "alpha",
                "method-specific",
                &[
                    ("Essential", "States a clear research question."),
                    ("Essential", "does alpha"),
                ],
            ),
            doc(
                "beta",
                "method-specific",
                &[("Essential", "does beta"), ("Desirable", "does alpha")],
            ),
            doc("supp", "supplement", &[("Extraordinary", "has pictures")]),
        ];
        Registry::new(docs.iter().map(|d| parse_standard(d).unwrap()), "general", []).unwrap()
    }

    #[test]
    fn general_only() {
        let r = registry();
        let form = compose_form(&MethodDeclaration::default(), &r).unwrap();
        let keys: Vec<_> = form.items.iter().map(|i| i.key.as_str()).collect();
        assert_eq!(
            keys,
            ["general/states-a-clear-research-question", "general/has-a-title"]
        );
    }

    #[test]
    fn duplicate_text_merges() {
        let r = registry();
        let form = compose_form(&MethodDeclaration::new(["alpha"], ["supp"]), &r).unwrap();
        assert_eq!(form.items.len(), 4);
        assert_eq!(form.items[0].provenance.len(), 2);
        assert_eq!(form.items[0].provenance[1].standard_id, "alpha");
        assert_eq!(form.items[3].key, "supp/has-pictures");
    }

    #[test]
    fn category_conflict() {
        let r = registry();
        let err = compose_form(&MethodDeclaration::new(["alpha", "beta"], Vec::<String>::new()), &r).unwrap_err();
        assert!(matches!(
            err,
            ComposeError::CategoryConflict {
                first: Category::Essential,
                second: Category::Desirable,
                ..
            }
        ));
    }

    #[test]
    fn declaration_errors() {
        let r = registry();
        let none: Vec<String> = vec![];
        assert_eq!(
            compose_form(&MethodDeclaration::new(["nope"], none.clone()), &r),
            Err(ComposeError::UnknownStandardId("nope".into()))
        );
        assert!(matches!(
            compose_form(&MethodDeclaration::new(["supp"], none.clone()), &r),
            Err(ComposeError::WrongStandardKind { .. })
        ));
        assert_eq!(
            compose_form(&MethodDeclaration::new(["alpha", "alpha"], none), &r),
            Err(ComposeError::DuplicateDeclaration("alpha".into()))
        );
    }

    #[test]
    fn form_id_is_content_hash() {
        let r = registry();
        let a = compose_form(&MethodDeclaration::new(["alpha"], Vec::<String>::new()), &r).unwrap();
        let b = compose_form(&MethodDeclaration::new(["alpha"], Vec::<String>::new()), &r).unwrap();
        let c = compose_form(&MethodDeclaration::default(), &r).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.form_id, c.form_id);
        assert!(a.to_text().starts_with("# review-form v1\nform: f-"));
    }

    #[test]
    fn adhoc_items() {
        let r = registry();
        let form = compose_form(&MethodDeclaration::default(), &r).unwrap();
        let id0 = form.form_id.clone();
        let form = form
            .with_adhoc_items(&[
                "validates the instrument".into(),
                "states a clear research question".into(),
            ])
            .unwrap();
        assert_ne!(form.form_id, id0);
        assert_eq!(form.items.len(), 3);
        assert!(form.items[0].adhoc);
        assert_eq!(form.items[2].key, "adhoc/validates-the-instrument");
        assert_eq!(form.items[2].category, Category::Essential);
        assert_eq!(
            form.clone().with_adhoc_items(&["  ".into()]),
            Err(ComposeError::EmptyAdhocItem)
        );
        assert!(matches!(
            form.with_adhoc_items(&["has a title".into()]),
            Err(ComposeError::CategoryConflict { .. })
        ));
    }

    #[test]
    fn checklist_mirrors_form() {
        let r = registry();
        let form = compose_form(&MethodDeclaration::new(["alpha"], ["supp"]), &r).unwrap();
        let list = author_checklist(&form);
        assert_eq!(list.entries.len(), form.items.len());
        for (e, i) in list.entries.iter().zip(&form.items) {
            assert_eq!((&e.key, &e.text, e.category), (&i.key, &i.text, i.category));
        }
        let empty = ReviewForm {
            form_id: "f-empty".into(),
            items: vec![],
            source_standards: vec![],
        };
        assert!(author_checklist(&empty).entries.is_empty());
    }
}
