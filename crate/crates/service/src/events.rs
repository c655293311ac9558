//! The submission event stream and the state folded from it.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use stdreview_core::agreement::AgreementReport;
use stdreview_core::compose::{compose_form, ComposeError, MethodDeclaration};
use stdreview_core::decision::{ConsensusItem, DecisionLetter, RevisionCheck, VenueRules, Verdict};
use stdreview_core::session::{start_session, DynamicForm, LogHeader, LogRecord, Session, SessionLog, SessionState};
use stdreview_core::Registry;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SubmissionStatus {
    Submitted,
    Triaged,
    UnderReview,
    AwaitingThird,
    Decided,
    RevisionInvited,
    RevisionVerified,
}

impl fmt::Display for SubmissionStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SubmissionStatus::Submitted => "submitted",
            SubmissionStatus::Triaged => "triaged",
            SubmissionStatus::UnderReview => "under-review",
            SubmissionStatus::AwaitingThird => "awaiting-third",
            SubmissionStatus::Decided => "decided",
            SubmissionStatus::RevisionInvited => "revision-invited",
            SubmissionStatus::RevisionVerified => "revision-verified",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckResult {
    pub check: String,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    pub reviewer_id: String,
    pub session_id: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Event {
    SubmissionCreated {
        title: String,
        declaration: MethodDeclaration,
        #[serde(default)]
        adhoc: bool,
        rules: VenueRules,
    },
    TriageFailed {
        triager_id: String,
        checks: Vec<CheckResult>,
    },
    Triaged {
        triager_id: String,
        checks: Vec<CheckResult>,
        declaration: MethodDeclaration,
        /// The author's declaration when the triager changed it.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        corrected_from: Option<MethodDeclaration>,
        #[serde(default)]
        adhoc_items: Vec<String>,
        form_id: String,
    },
    ReviewersAssigned {
        assignments: Vec<Assignment>,
        #[serde(default)]
        third: bool,
    },
    SessionUpdated {
        session_id: String,
        record: LogRecord,
    },
    AgreementEscalated {
        report: AgreementReport,
    },
    Decided {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        agreement: Option<AgreementReport>,
        consensus: Vec<ConsensusItem>,
        verdict: Verdict,
        letter: DecisionLetter,
    },
    RevisionChecked {
        checker_id: String,
        marks: BTreeMap<String, bool>,
        result: RevisionCheck,
    },
}

impl Event {
    pub fn kind(&self) -> &'static str {
        match self {
            Event::SubmissionCreated { .. } => "submission_created",
            Event::TriageFailed { .. } => "triage_failed",
            Event::Triaged { .. } => "triaged",
            Event::ReviewersAssigned { .. } => "reviewers_assigned",
            Event::SessionUpdated { .. } => "session_updated",
            Event::AgreementEscalated { .. } => "agreement_escalated",
            Event::Decided { .. } => "decided",
            Event::RevisionChecked { .. } => "revision_checked",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoredEvent {
    /// 1-based position in the stream.
    pub version: u64,
    pub at: u64,
    #[serde(flatten)]
    pub event: Event,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TriageRecord {
    pub triager_id: String,
    pub checks: Vec<CheckResult>,
    pub declaration: MethodDeclaration,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub corrected_from: Option<MethodDeclaration>,
    pub adhoc_items: Vec<String>,
    pub form_id: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReviewerSlot {
    pub reviewer_id: String,
    pub session_id: String,
    pub third: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Decision {
    pub agreement: Option<AgreementReport>,
    pub consensus: Vec<ConsensusItem>,
    pub verdict: Verdict,
    pub letter: DecisionLetter,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RevisionCheckRecord {
    pub checker_id: String,
    pub marks: BTreeMap<String, bool>,
    pub result: RevisionCheck,
}

/// Submission state rebuilt from its events.
#[derive(Debug, Clone, Serialize)]
pub struct Submission {
    pub submission_id: String,
    pub title: String,
    pub declaration: MethodDeclaration,
    pub adhoc: bool,
    pub rules: VenueRules,
    pub status: SubmissionStatus,
    pub failed_triages: Vec<Vec<CheckResult>>,
    pub triage: Option<TriageRecord>,
    pub reviewers: Vec<ReviewerSlot>,
    pub sessions: BTreeMap<String, Session>,
    pub escalation: Option<AgreementReport>,
    pub decision: Option<Decision>,
    pub revision_checks: Vec<RevisionCheckRecord>,
    /// Number of events folded so far.
    pub version: u64,
    #[serde(skip)]
    pub logs: BTreeMap<String, SessionLog>,
    #[serde(skip)]
    pub form: Option<DynamicForm>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ReplayError {
    #[error("event {version}: {message}")]
    Invalid { version: u64, message: String },
    #[error("event {version}: form no longer composes: {source}")]
    Compose {
        version: u64,
        #[source]
        source: ComposeError,
    },
}

impl Submission {
    pub fn form_id(&self) -> Option<&str> {
        self.triage.as_ref().map(|t| t.form_id.as_str())
    }

    pub fn slot(&self, session_id: &str) -> Option<&ReviewerSlot> {
        self.reviewers.iter().find(|r| r.session_id == session_id)
    }

    pub fn has_third(&self) -> bool {
        self.reviewers.iter().any(|r| r.third)
    }

    /// Sessions in assignment order.
    pub fn ordered_sessions(&self) -> Vec<&Session> {
        self.reviewers
            .iter()
            .filter_map(|r| self.sessions.get(&r.session_id))
            .collect()
    }

    pub fn incomplete_sessions(&self) -> Vec<String> {
        self.ordered_sessions()
            .into_iter()
            .filter(|s| s.state() != SessionState::Complete)
            .map(|s| s.session_id.clone())
            .collect()
    }

    /// Folds a whole stream. The registry rebuilds the review form at triage.
    pub fn replay(submission_id: &str, events: &[StoredEvent], registry: &Registry) -> Result<Self, ReplayError> {
        let mut iter = events.iter();
        let first = iter.next().ok_or(ReplayError::Invalid {
            version: 1,
            message: "empty stream".into(),
        })?;
        let Event::SubmissionCreated {
            title,
            declaration,
            adhoc,
            rules,
        } = &first.event
        else {
            return Err(ReplayError::Invalid {
                version: first.version,
                message: format!("stream starts with {}", first.event.kind()),
            });
        };
        let mut s = Submission {
            submission_id: submission_id.to_string(),
            title: title.clone(),
            declaration: declaration.clone(),
            adhoc: *adhoc,
            rules: rules.clone(),
            status: SubmissionStatus::Submitted,
            failed_triages: Vec::new(),
            triage: None,
            reviewers: Vec::new(),
            sessions: BTreeMap::new(),
            escalation: None,
            decision: None,
            revision_checks: Vec::new(),
            version: 1,
            logs: BTreeMap::new(),
            form: None,
        };
        for e in iter {
            s.apply(e, registry)?;
        }
        Ok(s)
    }

    pub fn apply(&mut self, stored: &StoredEvent, registry: &Registry) -> Result<(), ReplayError> {
        let version = stored.version;
        let invalid = |message: String| ReplayError::Invalid { version, message };
        if version != self.version + 1 {
            return Err(invalid(format!("expected version {}", self.version + 1)));
        }
        match &stored.event {
            Event::SubmissionCreated { .. } => return Err(invalid("duplicate creation".into())),
            Event::TriageFailed { checks, .. } => self.failed_triages.push(checks.clone()),
            Event::Triaged {
                triager_id,
                checks,
                declaration,
                corrected_from,
                adhoc_items,
                form_id,
            } => {
                let form = compose_form(declaration, registry)
                    .and_then(|f| f.with_adhoc_items(adhoc_items))
                    .map_err(|source| ReplayError::Compose { version, source })?;
                if &form.form_id != form_id {
                    return Err(invalid(format!(
                        "form id {} does not match recorded {form_id}",
                        form.form_id
                    )));
                }
                let dynamic =
                    DynamicForm::new(form, self.rules.venue_kind, registry).map_err(|e| invalid(e.to_string()))?;
                self.form = Some(dynamic);
                self.triage = Some(TriageRecord {
                    triager_id: triager_id.clone(),
                    checks: checks.clone(),
                    declaration: declaration.clone(),
                    corrected_from: corrected_from.clone(),
                    adhoc_items: adhoc_items.clone(),
                    form_id: form_id.clone(),
                });
                self.status = SubmissionStatus::Triaged;
            }
            Event::ReviewersAssigned { assignments, third } => {
                let form = self
                    .form
                    .as_ref()
                    .ok_or_else(|| invalid("reviewers before triage".into()))?;
                let triage = self.triage.as_ref().expect("form implies triage");
                for a in assignments {
                    self.sessions
                        .insert(a.session_id.clone(), start_session(form, &a.session_id, &a.reviewer_id));
                    self.logs.insert(
                        a.session_id.clone(),
                        SessionLog::new(LogHeader {
                            session_id: a.session_id.clone(),
                            form_id: triage.form_id.clone(),
                            reviewer_id: a.reviewer_id.clone(),
                            venue: self.rules.venue_kind,
                            declaration: triage.declaration.clone(),
                            adhoc_items: triage.adhoc_items.clone(),
                        }),
                    );
                    self.reviewers.push(ReviewerSlot {
                        reviewer_id: a.reviewer_id.clone(),
                        session_id: a.session_id.clone(),
                        third: *third,
                    });
                }
                if !*third {
                    self.status = SubmissionStatus::UnderReview;
                }
            }
            Event::SessionUpdated { session_id, record } => {
                let form = self
                    .form
                    .as_ref()
                    .ok_or_else(|| invalid("session before triage".into()))?;
                let session = self
                    .sessions
                    .get(session_id)
                    .ok_or_else(|| invalid(format!("unknown session {session_id}")))?;
                let next = session
                    .apply(form, &record.action)
                    .map_err(|e| invalid(e.to_string()))?;
                self.sessions.insert(session_id.clone(), next);
                self.logs
                    .get_mut(session_id)
                    .expect("log per session")
                    .records
                    .push(record.clone());
            }
            Event::AgreementEscalated { report } => {
                self.escalation = Some(report.clone());
                self.status = SubmissionStatus::AwaitingThird;
            }
            Event::Decided {
                agreement,
                consensus,
                verdict,
                letter,
            } => {
                self.status = match verdict.outcome {
                    stdreview_core::decision::Outcome::InviteRevision => SubmissionStatus::RevisionInvited,
                    _ => SubmissionStatus::Decided,
                };
                self.decision = Some(Decision {
                    agreement: agreement.clone(),
                    consensus: consensus.clone(),
                    verdict: verdict.clone(),
                    letter: letter.clone(),
                });
            }
            Event::RevisionChecked {
                checker_id,
                marks,
                result,
            } => {
                if *result == RevisionCheck::Accept {
                    self.status = SubmissionStatus::RevisionVerified;
                }
                self.revision_checks.push(RevisionCheckRecord {
                    checker_id: checker_id.clone(),
                    marks: marks.clone(),
                    result: result.clone(),
                });
            }
        }
        self.version = version;
        Ok(())
    }
}
