//! Typed model of an empirical standard and its markdown document form.
//!
//! A standard document looks like this:
//!
//! ```text
//! ---
//! id: experiment
//! kind: method-specific
//! version: 1.0.0
//! followup: uses-random-assignment = random-assignment
//! ---
//!
//! # Experiment
//!
//! A study in which researchers manipulate an independent variable.
//!
//! ## Application
//!
//! Applies to controlled experiments with human participants.
//!
//! ## Specific Attributes
//!
//! ### Essential
//!
//! <!-- id: uses-random-assignment; tags: design -->
//! - [ ] uses random assignment
//!
//! ### Desirable
//!
//! - [ ] reports a pilot study
//! ```
//!
//! followed by the optional list sections (`## General Quality Criteria`,
//! `## Examples of Acceptable Deviations`, `## Antipatterns`,
//! `## Invalid Criticisms`, `## Suggested Readings`, `## Exemplars`) and a
//! free-text `## Notes` section, in that order.

mod parse;
mod registry;
mod serialize;
mod validate;

pub use parse::{parse_standard, ParseError};
pub use registry::{Registry, RegistryError, MANIFEST_FILE};
pub use serialize::serialize_standard;
pub use validate::{validate_standard, Diagnostic};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Which of the three kinds of standard a document is.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StandardKind {
    General,
    MethodSpecific,
    Supplement,
}

impl StandardKind {
    pub fn as_str(self) -> &'static str {
        match self {
            StandardKind::General => "general",
            StandardKind::MethodSpecific => "method-specific",
            StandardKind::Supplement => "supplement",
        }
    }
}

impl fmt::Display for StandardKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StandardKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "general" => Ok(StandardKind::General),
            "method-specific" => Ok(StandardKind::MethodSpecific),
            "supplement" => Ok(StandardKind::Supplement),
            other => Err(format!("unknown standard kind `{other}`")),
        }
    }
}

/// Attribute category. Essential attributes are necessary conditions for
/// publication, desirable ones are recommended, extraordinary ones mark
/// award-quality work.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Essential,
    Desirable,
    Extraordinary,
}

impl Category {
    pub const ALL: [Category; 3] = [Category::Essential, Category::Desirable, Category::Extraordinary];

    /// Heading text used under `## Specific Attributes`.
    pub fn heading(self) -> &'static str {
        match self {
            Category::Essential => "Essential",
            Category::Desirable => "Desirable",
            Category::Extraordinary => "Extraordinary",
        }
    }

    pub fn from_heading(s: &str) -> Option<Self> {
        Category::ALL.into_iter().find(|c| c.heading() == s)
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.heading())
    }
}

/// One checklist attribute of a standard.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributeItem {
    pub item_id: String,
    pub text: String,
    pub category: Category,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tags: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub followup_tree_ref: Option<String>,
}

impl AttributeItem {
    pub fn new(item_id: impl Into<String>, text: impl Into<String>, category: Category) -> Self {
        Self {
            item_id: item_id.into(),
            text: text.into(),
            category,
            tags: Vec::new(),
            followup_tree_ref: None,
        }
    }
}

/// A parsed empirical standard.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Standard {
    pub id: String,
    pub name: String,
    pub kind: StandardKind,
    pub version: String,
    pub definition: String,
    pub application: String,
    pub attributes: Vec<AttributeItem>,
    pub quality_criteria: Vec<String>,
    pub acceptable_deviations: Vec<String>,
    pub antipatterns: Vec<String>,
    pub invalid_criticisms: Vec<String>,
    pub suggested_readings: Vec<String>,
    pub exemplars: Vec<String>,
    pub notes: String,
    /// Triage checks; only meaningful on the General Standard.
    pub initial_checks: Vec<String>,
}

impl Standard {
    pub fn item(&self, item_id: &str) -> Option<&AttributeItem> {
        self.attributes.iter().find(|a| a.item_id == item_id)
    }

    pub fn items_in(&self, category: Category) -> impl Iterator<Item = &AttributeItem> {
        self.attributes.iter().filter(move |a| a.category == category)
    }

    pub fn count(&self, category: Category) -> usize {
        self.items_in(category).count()
    }
}

/// Fixed order of the level-two sections of a standard document.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub(crate) enum Section {
    Application,
    SpecificAttributes,
    QualityCriteria,
    AcceptableDeviations,
    Antipatterns,
    InvalidCriticisms,
    SuggestedReadings,
    Exemplars,
    Notes,
}

impl Section {
    pub(crate) const ALL: [Section; 9] = [
        Section::Application,
        Section::SpecificAttributes,
        Section::QualityCriteria,
        Section::AcceptableDeviations,
        Section::Antipatterns,
        Section::InvalidCriticisms,
        Section::SuggestedReadings,
        Section::Exemplars,
        Section::Notes,
    ];

    pub(crate) fn heading(self) -> &'static str {
        match self {
            Section::Application => "Application",
            Section::SpecificAttributes => "Specific Attributes",
            Section::QualityCriteria => "General Quality Criteria",
            Section::AcceptableDeviations => "Examples of Acceptable Deviations",
            Section::Antipatterns => "Antipatterns",
            Section::InvalidCriticisms => "Invalid Criticisms",
            Section::SuggestedReadings => "Suggested Readings",
            Section::Exemplars => "Exemplars",
            Section::Notes => "Notes",
        }
    }

    pub(crate) fn from_heading(s: &str) -> Option<Self> {
        Section::ALL.into_iter().find(|sec| sec.heading() == s)
    }
}
