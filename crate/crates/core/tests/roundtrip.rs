use proptest::prelude::*;
use stdreview_core::fixtures::DOCUMENTS;
use stdreview_core::standard::{parse_standard, serialize_standard, AttributeItem, Category, Standard, StandardKind};

#[test]
fn shipped_fixtures_round_trip() {
    assert!(DOCUMENTS.len() >= 8);
    for (name, text) in DOCUMENTS {
        let first = parse_standard(text).unwrap_or_else(|e| panic!("{name}: {e}"));
        let printed = serialize_standard(&first);
        let second = parse_standard(&printed).unwrap_or_else(|e| panic!("{name} reprinted: {e}"));
        assert_eq!(first, second, "{name}");
        assert_eq!(printed, serialize_standard(&second), "{name}");
    }
}

const WORDS: &[&str] = &[
    "reports",
    "the",
    "sample",
    "size",
    "describes",
    "analysis",
    "data",
    "threats",
    "validity",
    "states",
    "clear",
    "question",
    "uses",
    "random",
    "assignment",
    "provides",
    "materials",
    "participants",
    "effect",
    "design",
];

fn sentence(min: usize, max: usize) -> impl Strategy<Value = String> {
    prop::collection::vec(prop::sample::select(WORDS), min..=max).prop_map(|w| w.join(" "))
}

fn slug() -> impl Strategy<Value = String> {
    prop::collection::vec(prop::sample::select(WORDS), 1..=3).prop_map(|w| w.join("-"))
}

fn category() -> impl Strategy<Value = Category> {
    prop::sample::select(Category::ALL.to_vec())
}

fn kind() -> impl Strategy<Value = StandardKind> {
    prop::sample::select(vec![
        StandardKind::General,
        StandardKind::MethodSpecific,
        StandardKind::Supplement,
    ])
}

fn items() -> impl Strategy<Value = Vec<AttributeItem>> {
    prop::collection::vec(
        (
            sentence(1, 8),
            category(),
            prop::collection::vec(slug(), 0..3),
            any::<bool>(),
        ),
        0..10,
    )
    .prop_map(|raw| {
        raw.into_iter()
            .enumerate()
            .map(|(i, (text, cat, tags, tree))| {
                let mut item = AttributeItem::new(format!("item-{i}"), text, cat);
                item.tags = tags;
                if tree && cat == Category::Essential {
                    item.followup_tree_ref = Some(format!("tree-{i}"));
                }
                item
            })
            .collect()
    })
}

fn list() -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec(sentence(1, 6), 0..3)
}

prop_compose! {
    fn standard()(
        id in slug(),
        name in sentence(1, 3),
        kind in kind(),
        version in "[0-9]\\.[0-9]\\.[0-9]",
        definition in sentence(0, 12),
        application in sentence(0, 12),
        attributes in items(),
        lists in (list(), list(), list(), list(), list(), list()),
        notes in sentence(0, 10),
        checks in list(),
    ) -> Standard {
        Standard {
            id,
            name,
            kind,
            version,
            definition,
            application,
            attributes,
            quality_criteria: lists.0,
            acceptable_deviations: lists.1,
            antipatterns: lists.2,
            invalid_criticisms: lists.3,
            suggested_readings: lists.4,
            exemplars: lists.5,
            notes,
            initial_checks: checks,
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn generated_documents_round_trip(s in standard()) {
        let printed = serialize_standard(&s);
        let parsed = parse_standard(&printed).map_err(|e| TestCaseError::fail(format!("{e}\n{printed}")))?;
        prop_assert_eq!(&parsed, &s);
        prop_assert_eq!(serialize_standard(&parsed), printed);
    }

    #[test]
    fn item_ids_survive_whitespace_edits(s in standard(), pad in 1usize..4) {
        let printed = serialize_standard(&s);
        let padded: String = printed
            .lines()
            .map(|l| if l.starts_with("- [ ]") { format!("{l}{}", " ".repeat(pad)) } else { l.to_string() })
            .collect::<Vec<_>>()
            .join("\n\n");
        let parsed = parse_standard(&padded).map_err(|e| TestCaseError::fail(e.to_string()))?;
        let ids = |s: &Standard| s.attributes.iter().map(|i| i.item_id.clone()).collect::<Vec<_>>();
        prop_assert_eq!(ids(&parsed), ids(&s));
    }
}
