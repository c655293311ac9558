//! The standards and follow-up trees shipped with the crate.

use crate::standard::{Registry, RegistryError};

macro_rules! fixture {
    ($name:literal) => {
        ($name, include_str!(concat!("../fixtures/standards/", $name)))
    };
}

pub const MANIFEST: &str = include_str!("../fixtures/standards/registry.toml");

pub const DOCUMENTS: &[(&str, &str)] = &[
    fixture!("general.md"),
    fixture!("experiment.md"),
    fixture!("case-study.md"),
    fixture!("questionnaire-survey.md"),
    fixture!("systematic-review.md"),
    fixture!("qualitative-survey.md"),
    fixture!("information-visualization.md"),
    fixture!("multi-methodology.md"),
    fixture!("sampling.md"),
];

pub const TREES: &[(&str, &str)] = &[fixture!("random-assignment.tree"), fixture!("data-sharing.tree")];

/// Registry over the shipped fixtures.
pub fn builtin_registry() -> Registry {
    try_builtin().expect("shipped fixtures are valid")
}

fn try_builtin() -> Result<Registry, RegistryError> {
    Registry::from_sources(MANIFEST, DOCUMENTS.iter().copied(), TREES.iter().copied())
}
