use std::fmt::Write;

use super::{Section, Standard, StandardKind};

/// Renders a standard back into its markdown document form.
///
/// Every item gets an explicit id anchor so ids survive the trip. Items keep
/// their order; a category heading is emitted at every change of category.
pub fn serialize_standard(s: &Standard) -> String {
    let mut out = String::new();
    out.push_str("---\n");
    let _ = writeln!(out, "id: {}", s.id);
    let _ = writeln!(out, "kind: {}", s.kind);
    let _ = writeln!(out, "version: {}", s.version);
    for item in &s.attributes {
        if let Some(tree) = &item.followup_tree_ref {
            let _ = writeln!(out, "followup: {} = {}", item.item_id, tree);
        }
    }
    for check in &s.initial_checks {
        let _ = writeln!(out, "initial_check: {check}");
    }
    out.push_str("---\n\n");

    let _ = writeln!(out, "# {}\n", s.name);
    if !s.definition.is_empty() {
        let _ = writeln!(out, "{}\n", s.definition);
    }
    let _ = writeln!(out, "## {}\n", Section::Application.heading());
    if !s.application.is_empty() {
        let _ = writeln!(out, "{}\n", s.application);
    }

    if !s.attributes.is_empty() || s.kind != StandardKind::Supplement {
        let _ = writeln!(out, "## {}\n", Section::SpecificAttributes.heading());
        let mut current = None;
        for item in &s.attributes {
            if current != Some(item.category) {
                let _ = writeln!(out, "### {}\n", item.category.heading());
                current = Some(item.category);
            }
            if item.tags.is_empty() {
                let _ = writeln!(out, "<!-- id: {} -->", item.item_id);
            } else {
                let _ = writeln!(out, "<!-- id: {}; tags: {} -->", item.item_id, item.tags.join(", "));
            }
            let _ = writeln!(out, "- [ ] {}\n", item.text);
        }
    }

    let lists = [
        (Section::QualityCriteria, &s.quality_criteria),
        (Section::AcceptableDeviations, &s.acceptable_deviations),
        (Section::Antipatterns, &s.antipatterns),
        (Section::InvalidCriticisms, &s.invalid_criticisms),
        (Section::SuggestedReadings, &s.suggested_readings),
        (Section::Exemplars, &s.exemplars),
    ];
    for (section, entries) in lists {
        if entries.is_empty() {
            continue;
        }
        let _ = writeln!(out, "## {}\n", section.heading());
        for e in entries {
            let _ = writeln!(out, "- {e}");
        }
        out.push('\n');
    }
    if !s.notes.is_empty() {
        let _ = writeln!(out, "## {}\n\n{}", Section::Notes.heading(), s.notes);
    }
    while out.ends_with("\n\n") {
        out.pop();
    }
    out
}
