//! Venue rules file and service settings.
//!
//! The rules file holds one `key = value` pair per line; `#` starts a
//! comment. Recognized keys, all optional:
//!
//! ```text
//! kind = journal              # journal | conference
//! reviewers = 2
//! metric = kappa              # kappa | alpha | percent | none
//! threshold = 0.6
//! scope = root-answers        # root-answers | statuses
//! scope_items = general/limitations, general/research-question
//! degenerate_pass = true
//! nomination_threshold = 3
//! aggregation = worst-case    # worst-case | majority
//! ```

use std::path::{Path, PathBuf};

use stdreview_core::agreement::{Metric, ThresholdPolicy};
use stdreview_core::decision::VenueRules;
use stdreview_core::VenueKind;
use thiserror::Error;

pub const ENV_STORE: &str = "STDREVIEW_STORE";
pub const ENV_ADDR: &str = "STDREVIEW_ADDR";
pub const ENV_STANDARDS: &str = "STDREVIEW_STANDARDS";

pub const DEFAULT_STORE: &str = "stdreview-store";
pub const DEFAULT_ADDR: &str = "127.0.0.1:8080";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("{0}")]
    Invalid(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub fn parse_rules(text: &str) -> Result<VenueRules, ConfigError> {
    let mut kind = VenueKind::Journal;
    let mut reviewers = None;
    let mut metric: Option<Option<Metric>> = None;
    let mut threshold = None;
    let mut scope = None;
    let mut scope_items = Vec::new();
    let mut degenerate_pass = None;
    let mut nomination = None;
    let mut aggregation = None;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let err = |message: String| ConfigError::Syntax { line, message };
        let (key, value) = content
            .split_once('=')
            .map(|(k, v)| (k.trim(), v.trim()))
            .ok_or_else(|| err(format!("expected `key = value`, got `{content}`")))?;
        let int = |v: &str| {
            v.parse::<usize>()
                .map_err(|_| err(format!("`{key}` needs a whole number, got `{v}`")))
        };
        match key {
            "kind" => kind = value.parse().map_err(err)?,
            "reviewers" => reviewers = Some(int(value)?),
            "metric" => {
                metric = Some(match value {
                    "none" => None,
                    other => Some(other.parse().map_err(err)?),
                })
            }
            "threshold" => {
                threshold = Some(
                    value
                        .parse::<f64>()
                        .map_err(|_| err(format!("`threshold` needs a number, got `{value}`")))?,
                )
            }
            "scope" => scope = Some(value.parse().map_err(err)?),
            "scope_items" => {
                scope_items = value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(str::to_string)
                    .collect()
            }
            "degenerate_pass" => {
                degenerate_pass = Some(
                    value
                        .parse::<bool>()
                        .map_err(|_| err(format!("`degenerate_pass` needs true or false, got `{value}`")))?,
                )
            }
            "nomination_threshold" => nomination = Some(int(value)?),
            "aggregation" => aggregation = Some(value.parse().map_err(err)?),
            other => return Err(err(format!("unknown key `{other}`"))),
        }
    }

    let mut rules = VenueRules::new(kind);
    if let Some(r) = reviewers {
        rules.reviewers_required = r;
    }
    if let Some(n) = nomination {
        rules.nomination_threshold = n;
    }
    if let Some(a) = aggregation {
        rules.aggregation = a;
    }
    rules.agreement_policy = match metric {
        Some(None) => None,
        Some(Some(m)) => Some(ThresholdPolicy {
            metric: m,
            ..ThresholdPolicy::default()
        }),
        None => Some(ThresholdPolicy::default()),
    };
    if let Some(p) = rules.agreement_policy.as_mut() {
        if let Some(t) = threshold {
            p.threshold = t;
        }
        if let Some(s) = scope {
            p.scope.basis = s;
        }
        p.scope.items = scope_items;
        if let Some(d) = degenerate_pass {
            p.treat_degenerate_as_pass = d;
        }
    }
    rules.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
    Ok(rules)
}

pub fn load_rules(path: &Path) -> Result<VenueRules, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_rules(&text)
}

/// Renders rules in the file format accepted by [`parse_rules`].
pub fn render_rules(rules: &VenueRules) -> String {
    let mut out = format!(
        "kind = {}\nreviewers = {}\nnomination_threshold = {}\naggregation = {}\n",
        rules.venue_kind, rules.reviewers_required, rules.nomination_threshold, rules.aggregation
    );
    match &rules.agreement_policy {
        None => out.push_str("metric = none\n"),
        Some(p) => {
            let metric = match p.metric {
                Metric::PercentAgreement => "percent",
                Metric::CohenKappa => "kappa",
                Metric::KrippendorffAlpha => "alpha",
            };
            let scope = match p.scope.basis {
                stdreview_core::agreement::ScopeBasis::RootAnswers => "root-answers",
                stdreview_core::agreement::ScopeBasis::Statuses => "statuses",
            };
            out.push_str(&format!(
                "metric = {metric}\nthreshold = {}\nscope = {scope}\ndegenerate_pass = {}\n",
                p.threshold, p.treat_degenerate_as_pass
            ));
            if !p.scope.items.is_empty() {
                out.push_str(&format!("scope_items = {}\n", p.scope.items.join(", ")));
            }
        }
    }
    out
}

/// Where the server keeps its data and listens, after environment
/// overrides.
#[derive(Debug, Clone, PartialEq)]
pub struct ServerSettings {
    pub store: PathBuf,
    pub addr: String,
    pub standards: Option<PathBuf>,
}

impl ServerSettings {
    /// Flag values win over environment variables, which win over defaults.
    pub fn resolve(store: Option<PathBuf>, addr: Option<String>, standards: Option<PathBuf>) -> Self {
        Self::resolve_with(store, addr, standards, |k| std::env::var(k).ok())
    }

    pub fn resolve_with(
        store: Option<PathBuf>,
        addr: Option<String>,
        standards: Option<PathBuf>,
        env: impl Fn(&str) -> Option<String>,
    ) -> Self {
        Self {
            store: store
                .or_else(|| env(ENV_STORE).map(PathBuf::from))
                .unwrap_or_else(|| PathBuf::from(DEFAULT_STORE)),
            addr: addr
                .or_else(|| env(ENV_ADDR))
                .unwrap_or_else(|| DEFAULT_ADDR.to_string()),
            standards: standards.or_else(|| env(ENV_STANDARDS).map(PathBuf::from)),
        }
    }
}
