use std::collections::BTreeSet;

use proptest::prelude::*;
use stdreview_core::builtin_registry;
use stdreview_core::compose::{author_checklist, compose_form, resolve_standards, MethodDeclaration};
use stdreview_core::standard::StandardKind;
use stdreview_core::text::normalize;

fn ids(kind: StandardKind) -> Vec<String> {
    builtin_registry()
        .standards()
        .filter(|s| s.kind == kind)
        .map(|s| s.id.clone())
        .collect()
}

fn declaration() -> impl Strategy<Value = MethodDeclaration> {
    let methods = ids(StandardKind::MethodSpecific);
    let supplements = ids(StandardKind::Supplement);
    (
        prop::sample::subsequence(methods.clone(), 0..=methods.len()).prop_shuffle(),
        prop::sample::subsequence(supplements.clone(), 0..=supplements.len()).prop_shuffle(),
    )
        .prop_map(|(m, s)| MethodDeclaration::new(m, s))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn general_items_first_and_no_duplicates(decl in declaration()) {
        let reg = builtin_registry();
        let form = compose_form(&decl, &reg).unwrap();
        let general = reg.general().unwrap();
        for (item, attr) in form.items.iter().zip(&general.attributes) {
            prop_assert_eq!(&item.key, &format!("{}/{}", general.id, attr.item_id));
        }
        let texts: BTreeSet<String> = form.items.iter().map(|i| normalize(&i.text)).collect();
        prop_assert_eq!(texts.len(), form.items.len());
    }

    #[test]
    fn every_source_item_is_represented(decl in declaration()) {
        let reg = builtin_registry();
        let form = compose_form(&decl, &reg).unwrap();
        for s in resolve_standards(&decl, &reg).unwrap() {
            for attr in &s.attributes {
                let item = form.items.iter().find(|i| normalize(&i.text) == normalize(&attr.text));
                prop_assert!(item.is_some(), "{}/{} missing", s.id, attr.item_id);
                let item = item.unwrap();
                prop_assert!(item.provenance.iter().any(|p| p.standard_id == s.id && p.item_id == attr.item_id));
                prop_assert_eq!(item.category, attr.category);
            }
        }
    }

    #[test]
    fn composition_is_deterministic(decl in declaration()) {
        let reg = builtin_registry();
        let a = compose_form(&decl, &reg).unwrap();
        let b = compose_form(&decl, &reg).unwrap();
        prop_assert_eq!(a.to_text(), b.to_text());
        prop_assert_eq!(a.form_id, b.form_id);
    }

    #[test]
    fn adding_a_standard_only_adds_items(decl in declaration()) {
        let reg = builtin_registry();
        let smaller = MethodDeclaration::new(decl.method_ids.iter().skip(1).cloned(), decl.supplement_ids.clone());
        let small = compose_form(&smaller, &reg).unwrap();
        let big = compose_form(&decl, &reg).unwrap();
        let texts = |f: &stdreview_core::ReviewForm| f.items.iter().map(|i| normalize(&i.text)).collect::<BTreeSet<_>>();
        prop_assert!(texts(&small).is_subset(&texts(&big)));
    }

    #[test]
    fn checklist_mirrors_form(decl in declaration()) {
        let form = compose_form(&decl, &builtin_registry()).unwrap();
        let checklist = author_checklist(&form);
        prop_assert_eq!(checklist.entries.len(), form.items.len());
        for (e, i) in checklist.entries.iter().zip(&form.items) {
            prop_assert_eq!(&e.key, &i.key);
            prop_assert_eq!(&e.text, &i.text);
            prop_assert_eq!(e.category, i.category);
        }
    }
}

#[test]
fn shipped_duplicates_merge() {
    let reg = builtin_registry();
    let form = compose_form(
        &MethodDeclaration::new(["experiment"], ["information-visualization"]),
        &reg,
    )
    .unwrap();
    let merged = form
        .items
        .iter()
        .find(|i| normalize(&i.text) == "provides the task materials")
        .unwrap();
    assert_eq!(merged.provenance.len(), 2);
    assert_eq!(merged.key, "experiment/task-materials");
}
