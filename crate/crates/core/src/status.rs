use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Reduced outcome of one essential item, ordered from best to worst.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StatusKind {
    /// The attribute is present.
    Met,
    /// Absent, but the deviation makes sense for this study.
    JustifiedDeviation,
    /// Absent, fixable by modest editing (camera-ready level).
    FixableMinor,
    /// Absent, fixable without repeating data collection.
    FixableRevision,
    /// Absent and not fixable without new data collection.
    Fatal,
}

impl StatusKind {
    pub const ALL: [StatusKind; 5] = [
        StatusKind::Met,
        StatusKind::JustifiedDeviation,
        StatusKind::FixableMinor,
        StatusKind::FixableRevision,
        StatusKind::Fatal,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            StatusKind::Met => "met",
            StatusKind::JustifiedDeviation => "justified-deviation",
            StatusKind::FixableMinor => "fixable-minor",
            StatusKind::FixableRevision => "fixable-revision",
            StatusKind::Fatal => "fatal",
        }
    }

    /// Statuses that do not block acceptance.
    pub fn is_acceptable(self) -> bool {
        self <= StatusKind::FixableMinor
    }
}

impl fmt::Display for StatusKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StatusKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        StatusKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown item status `{s}`"))
    }
}

/// Status of an essential item plus the reviewer text captured on the way
/// to it. `Met` never carries a note.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ItemStatus {
    pub kind: StatusKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl ItemStatus {
    pub fn met() -> Self {
        Self {
            kind: StatusKind::Met,
            note: None,
        }
    }

    pub fn new(kind: StatusKind, note: Option<String>) -> Self {
        let note = if kind == StatusKind::Met { None } else { note };
        Self { kind, note }
    }
}
