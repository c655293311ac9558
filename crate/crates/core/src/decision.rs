//! Venue decision rules: aggregate reviewers' item statuses, derive the
//! verdict and produce the decision letter.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agreement::ThresholdPolicy;
use crate::compose::ReviewForm;
use crate::session::{DynamicForm, Session, SessionState};
use crate::status::{ItemStatus, StatusKind};
use crate::tree::VenueKind;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DecisionError {
    #[error("invalid venue rules: {0}")]
    InvalidRules(String),
    #[error("{required} completed sessions required, got {got}")]
    TooFewSessions { required: usize, got: usize },
    #[error("session `{0}` was answered against a different form")]
    FormMismatch(String),
    #[error("session `{0}` is not complete")]
    IncompleteSession(String),
    #[error("reviewer `{0}` appears in more than one session")]
    DuplicateReviewer(String),
    #[error("rules are for a {actual} but a {expected} decision was requested")]
    WrongVenueKind { expected: VenueKind, actual: VenueKind },
    #[error("verdict does not match the consensus: {0}")]
    ConsensusMismatch(String),
    #[error("letter is not a revision to-do list")]
    NotTodoList,
    #[error("`{0}` is not on the to-do list")]
    UnknownItemKey(String),
}

/// How differing per-reviewer statuses combine.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Aggregation {
    /// The worst status any reviewer gave.
    #[default]
    WorstCase,
    /// The most frequent status; ties go to the worse one.
    Majority,
}

impl FromStr for Aggregation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "worst-case" => Ok(Aggregation::WorstCase),
            "majority" => Ok(Aggregation::Majority),
            other => Err(format!("unknown aggregation `{other}`")),
        }
    }
}

impl fmt::Display for Aggregation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Aggregation::WorstCase => "worst-case",
            Aggregation::Majority => "majority",
        })
    }
}

/// Decision configuration set by a venue.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VenueRules {
    pub venue_kind: VenueKind,
    pub reviewers_required: usize,
    /// `None` disables third-reviewer escalation.
    pub agreement_policy: Option<ThresholdPolicy>,
    /// Unanimously present desirable/extraordinary attributes needed for a
    /// distinguished-paper nomination.
    pub nomination_threshold: usize,
    pub aggregation: Aggregation,
}

impl VenueRules {
    pub fn new(venue_kind: VenueKind) -> Self {
        Self {
            venue_kind,
            reviewers_required: 2,
            agreement_policy: Some(ThresholdPolicy::default()),
            nomination_threshold: 3,
            aggregation: Aggregation::WorstCase,
        }
    }

    pub fn validate(&self) -> Result<(), DecisionError> {
        if self.reviewers_required < 1 {
            return Err(DecisionError::InvalidRules(
                "reviewers_required must be at least 1".into(),
            ));
        }
        if self.nomination_threshold < 1 {
            return Err(DecisionError::InvalidRules(
                "nomination_threshold must be at least 1".into(),
            ));
        }
        if let Some(p) = &self.agreement_policy {
            p.validate().map_err(|e| DecisionError::InvalidRules(e.to_string()))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConsensusItem {
    pub item_key: String,
    pub status: StatusKind,
    pub per_reviewer: BTreeMap<String, ItemStatus>,
    pub disputed: bool,
}

impl ConsensusItem {
    /// Distinct notes of the reviewers whose status equals the consensus.
    pub fn notes(&self) -> Vec<String> {
        let mut seen = BTreeSet::new();
        self.per_reviewer
            .values()
            .filter(|s| s.kind == self.status)
            .filter_map(|s| s.note.clone())
            .filter(|n| seen.insert(n.clone()))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    Accept,
    InviteRevision,
    Reject,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::Accept => "accept",
            Outcome::InviteRevision => "invite-revision",
            Outcome::Reject => "reject",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BasisEntry {
    pub item_key: String,
    pub status: StatusKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub venue_kind: VenueKind,
    pub outcome: Outcome,
    /// Distinguished-paper nomination; conferences only.
    pub nominated: bool,
    /// The items that determined the outcome.
    pub basis: Vec<BasisEntry>,
}

/// Combines per-reviewer statuses of one item.
pub fn combine(statuses: &[StatusKind], aggregation: Aggregation) -> Option<StatusKind> {
    match aggregation {
        Aggregation::WorstCase => statuses.iter().copied().max(),
        Aggregation::Majority => {
            let mut counts: BTreeMap<StatusKind, usize> = BTreeMap::new();
            for s in statuses {
                *counts.entry(*s).or_default() += 1;
            }
            // max_by_key returns the last maximum, and the map iterates best to
            // worst, so ties resolve to the worse status.
            counts.into_iter().max_by_key(|(_, n)| *n).map(|(s, _)| s)
        }
    }
}

/// One consensus entry per essential item of the form.
pub fn aggregate(
    form: &DynamicForm,
    sessions: &[Session],
    rules: &VenueRules,
) -> Result<Vec<ConsensusItem>, DecisionError> {
    rules.validate()?;
    if sessions.len() < rules.reviewers_required {
        return Err(DecisionError::TooFewSessions {
            required: rules.reviewers_required,
            got: sessions.len(),
        });
    }
    let mut reviewers = BTreeSet::new();
    for s in sessions {
        if s.form_id != form.form_id() {
            return Err(DecisionError::FormMismatch(s.session_id.clone()));
        }
        if s.state() != SessionState::Complete {
            return Err(DecisionError::IncompleteSession(s.session_id.clone()));
        }
        if !reviewers.insert(s.reviewer_id.as_str()) {
            return Err(DecisionError::DuplicateReviewer(s.reviewer_id.clone()));
        }
    }

    let mut out = Vec::new();
    for item in form.form().essential_items() {
        let mut per_reviewer = BTreeMap::new();
        for s in sessions {
            let status = s
                .item_status(form, &item.key)
                .ok()
                .flatten()
                .ok_or_else(|| DecisionError::IncompleteSession(s.session_id.clone()))?;
            per_reviewer.insert(s.reviewer_id.clone(), status);
        }
        let kinds: Vec<StatusKind> = per_reviewer.values().map(|s| s.kind).collect();
        let status = combine(&kinds, rules.aggregation).expect("at least one session");
        let disputed = kinds.iter().any(|k| *k != kinds[0]);
        out.push(ConsensusItem {
            item_key: item.key.clone(),
            status,
            per_reviewer,
            disputed,
        });
    }
    Ok(out)
}

fn basis(consensus: &[ConsensusItem], pick: impl Fn(StatusKind) -> bool) -> Vec<BasisEntry> {
    consensus
        .iter()
        .filter(|c| pick(c.status))
        .map(|c| BasisEntry {
            item_key: c.item_key.clone(),
            status: c.status,
        })
        .collect()
}

fn expect_venue(rules: &VenueRules, expected: VenueKind) -> Result<(), DecisionError> {
    if rules.venue_kind != expected {
        return Err(DecisionError::WrongVenueKind {
            expected,
            actual: rules.venue_kind,
        });
    }
    Ok(())
}

/// Multi-stage (journal) rules: accept when every problem is justified or
/// trivially fixed, invite a revision when the rest can be fixed without new
/// data collection, reject otherwise.
pub fn decide_journal(consensus: &[ConsensusItem], rules: &VenueRules) -> Result<Verdict, DecisionError> {
    expect_venue(rules, VenueKind::Journal)?;
    let (outcome, basis) = if consensus.iter().all(|c| c.status.is_acceptable()) {
        (Outcome::Accept, basis(consensus, |s| s != StatusKind::Met))
    } else if consensus.iter().all(|c| c.status != StatusKind::Fatal) {
        (
            Outcome::InviteRevision,
            basis(consensus, |s| s == StatusKind::FixableRevision),
        )
    } else {
        (Outcome::Reject, basis(consensus, |s| s == StatusKind::Fatal))
    };
    Ok(Verdict {
        venue_kind: VenueKind::Journal,
        outcome,
        nominated: false,
        basis,
    })
}

/// Items every session marked present.
pub fn unanimous_marks(sessions: &[Session]) -> Vec<String> {
    let Some(first) = sessions.first() else {
        return Vec::new();
    };
    first
        .desirable_marks()
        .iter()
        .filter(|(_, present)| **present)
        .map(|(k, _)| k)
        .filter(|k| sessions.iter().all(|s| s.desirable_marks().get(*k) == Some(&true)))
        .cloned()
        .collect()
}

/// Single-stage (conference) rules: accept when every problem is justified or
/// fixable by modest editing, reject otherwise. Accepted papers that need no
/// edits and show enough unanimous desirable/extraordinary attributes are
/// nominated.
pub fn decide_conference(
    consensus: &[ConsensusItem],
    sessions: &[Session],
    rules: &VenueRules,
) -> Result<Verdict, DecisionError> {
    expect_venue(rules, VenueKind::Conference)?;
    rules.validate()?;
    let accept = consensus.iter().all(|c| c.status.is_acceptable());
    let (outcome, basis) = if accept {
        (Outcome::Accept, basis(consensus, |s| s != StatusKind::Met))
    } else {
        (Outcome::Reject, basis(consensus, |s| !s.is_acceptable()))
    };
    let no_edits = consensus.iter().all(|c| c.status <= StatusKind::JustifiedDeviation);
    let nominated = accept && no_edits && unanimous_marks(sessions).len() >= rules.nomination_threshold;
    Ok(Verdict {
        venue_kind: VenueKind::Conference,
        outcome,
        nominated,
        basis,
    })
}

/// Dispatches on the venue kind of `rules`.
pub fn decide(consensus: &[ConsensusItem], sessions: &[Session], rules: &VenueRules) -> Result<Verdict, DecisionError> {
    match rules.venue_kind {
        VenueKind::Journal => decide_journal(consensus, rules),
        VenueKind::Conference => decide_conference(consensus, sessions, rules),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LetterKind {
    ReviewSummary,
    RevisionTodoList,
    RejectionReasons,
}

impl LetterKind {
    pub fn for_outcome(outcome: Outcome) -> Self {
        match outcome {
            Outcome::Accept => LetterKind::ReviewSummary,
            Outcome::InviteRevision => LetterKind::RevisionTodoList,
            Outcome::Reject => LetterKind::RejectionReasons,
        }
    }

    fn title(self) -> &'static str {
        match self {
            LetterKind::ReviewSummary => "REVIEW SUMMARY",
            LetterKind::RevisionTodoList => "REVISION TO-DO LIST",
            LetterKind::RejectionReasons => "REASONS FOR REJECTION",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LetterEntry {
    pub item_key: String,
    pub text: String,
    pub status: StatusKind,
    pub notes: Vec<String>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub adhoc: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReviewerComment {
    pub reviewer_id: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecisionLetter {
    pub kind: LetterKind,
    pub preamble: String,
    pub entries: Vec<LetterEntry>,
    /// Non-binding; never part of the decision.
    pub comments: Vec<ReviewerComment>,
}

impl DecisionLetter {
    /// Plain-text rendering with a stable layout.
    pub fn to_text(&self) -> String {
        let mut out = format!("{}\n\n{}\n", self.kind.title(), self.preamble);
        for (i, e) in self.entries.iter().enumerate() {
            let adhoc = if e.adhoc { " (ad-hoc criterion)" } else { "" };
            let _ = write!(
                out,
                "\n{}. {}{}\n   item: {}\n   status: {}\n",
                i + 1,
                e.text,
                adhoc,
                e.item_key,
                e.status
            );
            for n in &e.notes {
                let _ = writeln!(out, "   note: {n}");
            }
        }
        if !self.comments.is_empty() {
            out.push_str("\n--- Reviewer comments (non-binding) ---\n");
            for c in &self.comments {
                let _ = writeln!(out, "[{}] {}", c.reviewer_id, c.text);
            }
        }
        out
    }
}

fn check_consistency(verdict: &Verdict, consensus: &[ConsensusItem]) -> Result<(), DecisionError> {
    let by_key: BTreeMap<&str, StatusKind> = consensus.iter().map(|c| (c.item_key.as_str(), c.status)).collect();
    for b in &verdict.basis {
        match by_key.get(b.item_key.as_str()) {
            Some(s) if *s == b.status => {}
            _ => return Err(DecisionError::ConsensusMismatch(format!("basis item `{}`", b.item_key))),
        }
    }
    let acceptable = consensus.iter().all(|c| c.status.is_acceptable());
    let fatal = consensus.iter().any(|c| c.status == StatusKind::Fatal);
    let consistent = match verdict.outcome {
        Outcome::Accept => acceptable,
        Outcome::InviteRevision => verdict.venue_kind == VenueKind::Journal && !acceptable && !fatal,
        Outcome::Reject => !acceptable,
    };
    if !consistent {
        return Err(DecisionError::ConsensusMismatch(format!("outcome {}", verdict.outcome)));
    }
    Ok(())
}

/// Builds the letter for `verdict`: a summary of every item on accept, the
/// fixable-revision items on a revision invitation, and the blocking items
/// on rejection. Session comments are attached separately and verbatim.
pub fn generate_letter(
    form: &ReviewForm,
    verdict: &Verdict,
    consensus: &[ConsensusItem],
    sessions: &[Session],
) -> Result<DecisionLetter, DecisionError> {
    check_consistency(verdict, consensus)?;
    let kind = LetterKind::for_outcome(verdict.outcome);
    let listed: BTreeSet<&str> = verdict.basis.iter().map(|b| b.item_key.as_str()).collect();
    let entries = consensus
        .iter()
        .filter(|c| kind == LetterKind::ReviewSummary || listed.contains(c.item_key.as_str()))
        .map(|c| {
            let item = form.item(&c.item_key);
            LetterEntry {
                item_key: c.item_key.clone(),
                text: item.map(|i| i.text.clone()).unwrap_or_default(),
                status: c.status,
                notes: c.notes(),
                adhoc: item.is_some_and(|i| i.adhoc),
            }
        })
        .collect::<Vec<_>>();

    let preamble = match kind {
        LetterKind::ReviewSummary => {
            let mut p = String::from("The submission meets the venue's decision rules and is accepted.");
            if entries.iter().any(|e| e.status != StatusKind::Met) {
                p.push_str(" Deviations noted below are justified or can be corrected in the final version.");
            }
            if verdict.nominated {
                p.push_str(" The submission is nominated for a distinguished paper award.");
            }
            p
        }
        LetterKind::RevisionTodoList => format!(
            "A revision is invited. Address each of the {} item(s) below; one checker will confirm the list is complete, with no further round of review.",
            entries.len()
        ),
        LetterKind::RejectionReasons => format!(
            "The submission is rejected. The {} item(s) below cannot be fixed under the venue's rules.",
            entries.len()
        ),
    };
    let comments = sessions
        .iter()
        .filter(|s| !s.comments().trim().is_empty())
        .map(|s| ReviewerComment {
            reviewer_id: s.reviewer_id.clone(),
            text: s.comments().to_string(),
        })
        .collect();
    Ok(DecisionLetter {
        kind,
        preamble,
        entries,
        comments,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "result", content = "open", rename_all = "kebab-case")]
pub enum RevisionCheck {
    Accept,
    StillOpen(Vec<String>),
}

/// Accepts once every to-do entry is marked done; unmarked entries count as
/// open.
pub fn verify_revision(todo: &DecisionLetter, marks: &BTreeMap<String, bool>) -> Result<RevisionCheck, DecisionError> {
    if todo.kind != LetterKind::RevisionTodoList {
        return Err(DecisionError::NotTodoList);
    }
    if let Some(unknown) = marks.keys().find(|k| !todo.entries.iter().any(|e| &e.item_key == *k)) {
        return Err(DecisionError::UnknownItemKey(unknown.clone()));
    }
    let open: Vec<String> = todo
        .entries
        .iter()
        .filter(|e| marks.get(&e.item_key) != Some(&true))
        .map(|e| e.item_key.clone())
        .collect();
    Ok(if open.is_empty() {
        RevisionCheck::Accept
    } else {
        RevisionCheck::StillOpen(open)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use StatusKind::*;

    fn consensus(statuses: &[StatusKind]) -> Vec<ConsensusItem> {
        statuses
            .iter()
            .enumerate()
            .map(|(i, s)| ConsensusItem {
                item_key: format!("i{i}"),
                status: *s,
                per_reviewer: BTreeMap::from([("a".to_string(), ItemStatus::new(*s, Some(format!("note {i}"))))]),
                disputed: false,
            })
            .collect()
    }

    fn journal(statuses: &[StatusKind]) -> Verdict {
        decide_journal(&consensus(statuses), &VenueRules::new(VenueKind::Journal)).unwrap()
    }

    fn conference(statuses: &[StatusKind]) -> Verdict {
        decide_conference(&consensus(statuses), &[], &VenueRules::new(VenueKind::Conference)).unwrap()
    }

    #[test]
    fn worst_case_and_majority() {
        assert_eq!(combine(&[Met, Fatal], Aggregation::WorstCase), Some(Fatal));
        assert_eq!(combine(&[Met, Met, FixableRevision], Aggregation::Majority), Some(Met));
        assert_eq!(
            combine(&[Met, FixableRevision], Aggregation::Majority),
            Some(FixableRevision)
        );
        assert_eq!(combine(&[], Aggregation::Majority), None);
    }

    #[test]
    fn journal_table() {
        assert_eq!(journal(&[Met, Met, JustifiedDeviation]).outcome, Outcome::Accept);
        let v = journal(&[Met, FixableRevision]);
        assert_eq!(v.outcome, Outcome::InviteRevision);
        assert_eq!(
            v.basis,
            vec![BasisEntry {
                item_key: "i1".into(),
                status: FixableRevision
            }]
        );
        let v = journal(&[FixableRevision, Fatal]);
        assert_eq!(v.outcome, Outcome::Reject);
        assert!(v.basis.iter().any(|b| b.status == Fatal));
        assert_eq!(journal(&[]).outcome, Outcome::Accept);
    }

    #[test]
    fn conference_table() {
        assert_eq!(conference(&[Met, FixableMinor]).outcome, Outcome::Accept);
        assert_eq!(conference(&[Met, FixableRevision]).outcome, Outcome::Reject);
        assert!(!conference(&[Met]).nominated);
    }

    #[test]
    fn wrong_venue() {
        let c = consensus(&[Met]);
        assert!(matches!(
            decide_journal(&c, &VenueRules::new(VenueKind::Conference)),
            Err(DecisionError::WrongVenueKind { .. })
        ));
        assert!(matches!(
            decide_conference(&c, &[], &VenueRules::new(VenueKind::Journal)),
            Err(DecisionError::WrongVenueKind { .. })
        ));
    }

    #[test]
    fn rules_validation() {
        let mut r = VenueRules::new(VenueKind::Journal);
        r.reviewers_required = 0;
        assert!(r.validate().is_err());
        let mut r = VenueRules::new(VenueKind::Journal);
        r.nomination_threshold = 0;
        assert!(r.validate().is_err());
    }

    fn form_for(c: &[ConsensusItem]) -> ReviewForm {
        ReviewForm {
            form_id: "f".into(),
            items: c
                .iter()
                .map(|c| crate::compose::FormItem {
                    key: c.item_key.clone(),
                    text: format!("text {}", c.item_key),
                    category: crate::standard::Category::Essential,
                    provenance: vec![],
                    followup_tree_ref: None,
                    adhoc: false,
                })
                .collect(),
            source_standards: vec![],
        }
    }

    #[test]
    fn letters_follow_outcome() {
        let c = consensus(&[Met, FixableRevision]);
        let v = decide_journal(&c, &VenueRules::new(VenueKind::Journal)).unwrap();
        let l = generate_letter(&form_for(&c), &v, &c, &[]).unwrap();
        assert_eq!(l.kind, LetterKind::RevisionTodoList);
        assert_eq!(l.entries.len(), 1);
        assert_eq!(l.entries[0].notes, vec!["note 1"]);
        assert_eq!(l.entries[0].text, "text i1");

        let c = consensus(&[Met, Met]);
        let v = decide_journal(&c, &VenueRules::new(VenueKind::Journal)).unwrap();
        let l = generate_letter(&form_for(&c), &v, &c, &[]).unwrap();
        assert_eq!(l.kind, LetterKind::ReviewSummary);
        assert!(l.entries.iter().all(|e| e.status == Met));
        assert!(!l.to_text().contains("non-binding"));

        let c = consensus(&[Fatal, Met, Fatal]);
        let v = decide_journal(&c, &VenueRules::new(VenueKind::Journal)).unwrap();
        let l = generate_letter(&form_for(&c), &v, &c, &[]).unwrap();
        assert_eq!(l.kind, LetterKind::RejectionReasons);
        assert_eq!(l.entries.len(), 2);
    }

    #[test]
    fn letter_rejects_mismatched_verdict() {
        let c = consensus(&[Met, Fatal]);
        let v = journal(&[Met, Met]);
        assert!(matches!(
            generate_letter(&form_for(&c), &v, &c, &[]),
            Err(DecisionError::ConsensusMismatch(_))
        ));
    }

    #[test]
    fn revision_verification() {
        let c = consensus(&[FixableRevision, FixableRevision, FixableRevision]);
        let v = journal(&[FixableRevision, FixableRevision, FixableRevision]);
        let l = generate_letter(&form_for(&c), &v, &c, &[]).unwrap();
        let all: BTreeMap<_, _> = ["i0", "i1", "i2"].iter().map(|k| (k.to_string(), true)).collect();
        assert_eq!(verify_revision(&l, &all), Ok(RevisionCheck::Accept));
        let mut some = all.clone();
        some.insert("i1".into(), false);
        assert_eq!(
            verify_revision(&l, &some),
            Ok(RevisionCheck::StillOpen(vec!["i1".into()]))
        );
        let mut bad = all;
        bad.insert("zz".into(), true);
        assert_eq!(
            verify_revision(&l, &bad),
            Err(DecisionError::UnknownItemKey("zz".into()))
        );

        let empty = DecisionLetter {
            kind: LetterKind::RevisionTodoList,
            preamble: String::new(),
            entries: vec![],
            comments: vec![],
        };
        assert_eq!(verify_revision(&empty, &BTreeMap::new()), Ok(RevisionCheck::Accept));
        let summary = DecisionLetter {
            kind: LetterKind::ReviewSummary,
            ..empty
        };
        assert_eq!(
            verify_revision(&summary, &BTreeMap::new()),
            Err(DecisionError::NotTodoList)
        );
    }
}
