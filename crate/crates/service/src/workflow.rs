//! The venue workflow: submission, triage, review, escalation, decision and
//! revision check, each step persisted as an event.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::RwLock;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use stdreview_core::agreement::{
    evaluate_threshold, ratings_from_sessions, AgreementError, AgreementReport, Recommendation, ThresholdPolicy,
};
use stdreview_core::compose::{
    author_checklist, compose_form, AuthorChecklist, ComposeError, MethodDeclaration, ReviewForm,
};
use stdreview_core::decision::{
    aggregate, decide, generate_letter, verify_revision, DecisionError, DecisionLetter, RevisionCheck, VenueRules,
    Verdict,
};
use stdreview_core::session::{DynamicForm, LogRecord, Session, SessionAction, SessionError, SessionLog, SessionState};
use stdreview_core::standard::{Category, Registry};
use stdreview_core::status::ItemStatus;
use stdreview_core::text::{is_slug, normalize};
use stdreview_core::tree::{Answer, AnswerKind, FollowUpTree, VenueKind, ROOT_NODE};
use thiserror::Error;

use crate::clock::Clock;
use crate::events::{
    Assignment, CheckResult, Event, ReplayError, ReviewerSlot, StoredEvent, Submission, SubmissionStatus, TriageRecord,
};
use crate::store::{EventStore, StoreError};

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("{kind} `{id}` not found")]
    NotFound { kind: &'static str, id: String },
    #[error("`{0}` is not a valid id (lowercase letters, digits and hyphens)")]
    InvalidId(String),
    #[error("submission `{0}` already exists")]
    DuplicateSubmission(String),
    #[error("unknown standard `{0}`; flag the submission as ad-hoc to review it without one")]
    UnknownStandardId(String),
    #[error(transparent)]
    Compose(#[from] ComposeError),
    #[error("initial checks not reported: {0:?}")]
    MissingChecks(Vec<String>),
    #[error("initial checks failed, submission returned to authors: {0:?}")]
    ChecksFailed(Vec<String>),
    #[error("no standard covers the declared method; ad-hoc essential items are required")]
    AdhocItemsRequired,
    #[error("cannot {operation} while the submission is {status}")]
    WrongState {
        operation: &'static str,
        status: SubmissionStatus,
    },
    #[error("{expected} reviewer(s) required, got {got}")]
    WrongReviewerCount { expected: usize, got: usize },
    #[error("reviewer `{0}` is already assigned")]
    DuplicateReviewer(String),
    #[error(transparent)]
    Session(#[from] SessionError),
    #[error("sessions not complete: {0:?}")]
    SessionsIncomplete(Vec<String>),
    #[error("agreement is below the threshold; assign a third reviewer")]
    AwaitingThirdReviewer,
    #[error(transparent)]
    Decision(#[from] DecisionError),
    #[error(transparent)]
    Agreement(#[from] AgreementError),
    #[error("revision is being checked by `{expected}`, not `{got}`")]
    CheckerMismatch { expected: String, got: String },
    #[error("{0}")]
    InvalidInput(String),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Replay(#[from] ReplayError),
}

pub type Result<T, E = ServiceError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct NewSubmission {
    /// Generated when absent.
    #[serde(default)]
    pub submission_id: Option<String>,
    pub title: String,
    #[serde(default)]
    pub declaration: MethodDeclaration,
    /// Allows methods no standard covers; the triager then supplies
    /// essential items.
    #[serde(default)]
    pub adhoc: bool,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct TriageRequest {
    pub triager_id: String,
    pub checks: Vec<CheckResult>,
    #[serde(default)]
    pub corrected: Option<MethodDeclaration>,
    #[serde(default)]
    pub adhoc_items: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgreementView {
    /// False when the venue does not escalate on disagreement; the report
    /// then uses the default policy for information only.
    pub gating: bool,
    pub policy: ThresholdPolicy,
    pub report: AgreementReport,
    pub disputed: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FinalizeResult {
    pub status: SubmissionStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub agreement: Option<AgreementReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verdict: Option<Verdict>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub letter: Option<DecisionLetter>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RevisionOutcome {
    pub status: SubmissionStatus,
    pub result: RevisionCheck,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FormView {
    pub venue: VenueKind,
    pub form: ReviewForm,
    /// Follow-up tree per essential item key.
    pub trees: BTreeMap<String, FollowUpTree>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PromptView {
    pub node_id: String,
    pub prompt: String,
    pub answer_kind: AnswerKind,
    /// Allowed answers for yes/no and choice prompts.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub options: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub answer: Option<Answer>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ItemView {
    pub key: String,
    pub text: String,
    pub category: Category,
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub adhoc: bool,
    /// Revealed prompts in path order; essential items only.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub prompts: Vec<PromptView>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub status: Option<ItemStatus>,
    /// Presence mark; desirable and extraordinary items only.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub present: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SessionView {
    pub session_id: String,
    pub submission_id: String,
    pub reviewer_id: String,
    pub form_id: String,
    pub state: SessionState,
    pub items: Vec<ItemView>,
    pub comments: String,
    pub open_items: Vec<String>,
}

impl SessionView {
    pub fn new(submission_id: &str, form: &DynamicForm, session: &Session) -> Self {
        let items = form
            .form()
            .items
            .iter()
            .map(|item| {
                let mut view = ItemView {
                    key: item.key.clone(),
                    text: item.text.clone(),
                    category: item.category,
                    adhoc: item.adhoc,
                    prompts: Vec::new(),
                    status: None,
                    present: None,
                };
                if item.category != Category::Essential {
                    view.present = session.desirable_marks().get(&item.key).copied();
                    return view;
                }
                let answers = session.answers_for(&item.key);
                let tree = form.tree_for(&item.key);
                for node_id in session.revealed(&item.key) {
                    let (kind, options) = if node_id == ROOT_NODE {
                        (AnswerKind::YesNo, vec!["yes".to_string(), "no".to_string()])
                    } else {
                        let node = tree.and_then(|t| t.node(node_id)).expect("revealed nodes exist");
                        let kind = node.answer_kind.expect("revealed nodes are questions");
                        let options = match kind {
                            AnswerKind::FreeText => Vec::new(),
                            _ => node.edges.keys().cloned().collect(),
                        };
                        (kind, options)
                    };
                    view.prompts.push(PromptView {
                        node_id: node_id.clone(),
                        prompt: form.prompt(&item.key, node_id).unwrap_or_default().to_string(),
                        answer_kind: kind,
                        options,
                        answer: answers.and_then(|a| a.get(node_id)).cloned(),
                    });
                }
                view.status = session.item_status(form, &item.key).ok().flatten();
                view
            })
            .collect();
        Self {
            session_id: session.session_id.clone(),
            submission_id: submission_id.to_string(),
            reviewer_id: session.reviewer_id.clone(),
            form_id: session.form_id.clone(),
            state: session.state(),
            items,
            comments: session.comments().to_string(),
            open_items: session.open_items(form),
        }
    }
}

/// Everything a replay must reproduce, in a canonical serialization.
#[derive(Debug, Clone, Serialize)]
pub struct SubmissionExport {
    pub submission: Submission,
    pub session_logs: BTreeMap<String, String>,
}

impl SubmissionExport {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("export serializes")
    }

    pub fn sha256(&self) -> String {
        hex::encode(Sha256::digest(self.to_json().as_bytes()))
    }
}

#[derive(Debug, Clone)]
struct FormSpec {
    declaration: MethodDeclaration,
    adhoc_items: Vec<String>,
    venue: VenueKind,
}

pub struct VenueService {
    store: Box<dyn EventStore>,
    clock: Box<dyn Clock>,
    registry: Registry,
    rules: VenueRules,
    session_index: RwLock<HashMap<String, String>>,
    form_index: RwLock<HashMap<String, FormSpec>>,
}

impl VenueService {
    /// Opens the service over `store`, indexing the sessions and forms of
    /// every persisted submission.
    pub fn open(
        store: Box<dyn EventStore>,
        clock: Box<dyn Clock>,
        registry: Registry,
        rules: VenueRules,
    ) -> Result<Self> {
        rules.validate()?;
        let service = Self {
            store,
            clock,
            registry,
            rules,
            session_index: RwLock::new(HashMap::new()),
            form_index: RwLock::new(HashMap::new()),
        };
        for id in service.store.streams()? {
            let s = service.submission(&id)?;
            service.index(&s);
        }
        Ok(service)
    }

    pub fn registry(&self) -> &Registry {
        &self.registry
    }

    pub fn rules(&self) -> &VenueRules {
        &self.rules
    }

    fn index(&self, s: &Submission) {
        let mut sessions = self.session_index.write().expect("index lock");
        for r in &s.reviewers {
            sessions.insert(r.session_id.clone(), s.submission_id.clone());
        }
        if let Some(t) = &s.triage {
            self.form_index
                .write()
                .expect("index lock")
                .entry(t.form_id.clone())
                .or_insert(FormSpec {
                    declaration: t.declaration.clone(),
                    adhoc_items: t.adhoc_items.clone(),
                    venue: s.rules.venue_kind,
                });
        }
    }

    fn append(&self, s: &Submission, event: Event) -> Result<Submission> {
        let stored = StoredEvent {
            version: s.version + 1,
            at: self.clock.now_ms(),
            event,
        };
        self.store
            .append(&s.submission_id, s.version, std::slice::from_ref(&stored))?;
        let mut next = s.clone();
        next.apply(&stored, &self.registry)?;
        self.index(&next);
        Ok(next)
    }

    pub fn events(&self, submission_id: &str) -> Result<Vec<StoredEvent>> {
        let events = self.store.load(submission_id)?;
        if events.is_empty() {
            return Err(ServiceError::NotFound {
                kind: "submission",
                id: submission_id.to_string(),
            });
        }
        Ok(events)
    }

    pub fn submission(&self, submission_id: &str) -> Result<Submission> {
        Ok(Submission::replay(
            submission_id,
            &self.events(submission_id)?,
            &self.registry,
        )?)
    }

    pub fn submission_ids(&self) -> Result<Vec<String>> {
        Ok(self.store.streams()?)
    }

    pub fn initial_checks(&self) -> Vec<String> {
        self.registry
            .general()
            .map(|g| g.initial_checks.clone())
            .unwrap_or_default()
    }

    pub fn ingest_submission(&self, req: NewSubmission) -> Result<Submission> {
        if let Some(unknown) = req.declaration.unknown_ids(&self.registry).next() {
            if !req.adhoc {
                return Err(ServiceError::UnknownStandardId(unknown.to_string()));
            }
        }
        compose_form(&req.declaration.known_only(&self.registry), &self.registry)?;
        if req.title.trim().is_empty() {
            return Err(ServiceError::InvalidInput("title must not be empty".into()));
        }
        let event = || StoredEvent {
            version: 1,
            at: self.clock.now_ms(),
            event: Event::SubmissionCreated {
                title: req.title.clone(),
                declaration: req.declaration.clone(),
                adhoc: req.adhoc,
                rules: self.rules.clone(),
            },
        };
        let id = match &req.submission_id {
            Some(id) => {
                if !is_slug(id) {
                    return Err(ServiceError::InvalidId(id.clone()));
                }
                match self.store.append(id, 0, &[event()]) {
                    Err(StoreError::Conflict { .. }) => return Err(ServiceError::DuplicateSubmission(id.clone())),
                    other => other?,
                };
                id.clone()
            }
            None => {
                let mut n = self.store.streams()?.len() + 1;
                loop {
                    let id = format!("sub-{n:04}");
                    match self.store.append(&id, 0, &[event()]) {
                        Ok(_) => break id,
                        Err(StoreError::Conflict { .. }) => n += 1,
                        Err(e) => return Err(e.into()),
                    }
                }
            }
        };
        self.submission(&id)
    }

    /// The author's pre-submission checklist: from the triaged form once it
    /// exists, otherwise from the declared standards.
    pub fn checklist(&self, submission_id: &str) -> Result<AuthorChecklist> {
        let s = self.submission(submission_id)?;
        let form = match &s.form {
            Some(f) => f.form().clone(),
            None => compose_form(&s.declaration.known_only(&self.registry), &self.registry)?,
        };
        Ok(author_checklist(&form))
    }

    pub fn run_triage(&self, submission_id: &str, req: TriageRequest) -> Result<TriageRecord> {
        let s = self.submission(submission_id)?;
        if s.status != SubmissionStatus::Submitted {
            return Err(ServiceError::WrongState {
                operation: "triage",
                status: s.status,
            });
        }
        if req.triager_id.trim().is_empty() {
            return Err(ServiceError::InvalidInput("triager_id must not be empty".into()));
        }
        let reported: BTreeSet<String> = req.checks.iter().map(|c| normalize(&c.check)).collect();
        let missing: Vec<String> = self
            .initial_checks()
            .into_iter()
            .filter(|c| !reported.contains(&normalize(c)))
            .collect();
        if !missing.is_empty() {
            return Err(ServiceError::MissingChecks(missing));
        }
        let failed: Vec<String> = req
            .checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.check.clone())
            .collect();
        if !failed.is_empty() {
            self.append(
                &s,
                Event::TriageFailed {
                    triager_id: req.triager_id,
                    checks: req.checks,
                },
            )?;
            return Err(ServiceError::ChecksFailed(failed));
        }

        let requested = req.corrected.clone().unwrap_or_else(|| s.declaration.clone());
        let unknown: Vec<String> = requested.unknown_ids(&self.registry).map(str::to_string).collect();
        if !s.adhoc {
            if let Some(u) = unknown.first() {
                return Err(ServiceError::UnknownStandardId(u.clone()));
            }
            if !req.adhoc_items.is_empty() {
                return Err(ServiceError::InvalidInput(
                    "ad-hoc items need a submission flagged ad-hoc".into(),
                ));
            }
        } else if !unknown.is_empty() && req.adhoc_items.is_empty() {
            return Err(ServiceError::AdhocItemsRequired);
        }
        let declaration = requested.known_only(&self.registry);
        let form = compose_form(&declaration, &self.registry)?.with_adhoc_items(&req.adhoc_items)?;
        let corrected_from = req
            .corrected
            .as_ref()
            .filter(|c| **c != s.declaration)
            .map(|_| s.declaration.clone());
        let next = self.append(
            &s,
            Event::Triaged {
                triager_id: req.triager_id,
                checks: req.checks,
                declaration,
                corrected_from,
                adhoc_items: req.adhoc_items,
                form_id: form.form_id,
            },
        )?;
        Ok(next.triage.expect("triaged"))
    }

    /// Assigns the initial reviewers after triage, or the single third
    /// reviewer after an agreement escalation.
    pub fn open_reviews(&self, submission_id: &str, reviewer_ids: &[String]) -> Result<Vec<ReviewerSlot>> {
        let s = self.submission(submission_id)?;
        let third = match s.status {
            SubmissionStatus::Triaged => false,
            SubmissionStatus::AwaitingThird if !s.has_third() => true,
            status => {
                return Err(ServiceError::WrongState {
                    operation: "assign reviewers",
                    status,
                })
            }
        };
        let expected = if third { 1 } else { s.rules.reviewers_required };
        if reviewer_ids.len() != expected {
            return Err(ServiceError::WrongReviewerCount {
                expected,
                got: reviewer_ids.len(),
            });
        }
        let mut seen: BTreeSet<&str> = s.reviewers.iter().map(|r| r.reviewer_id.as_str()).collect();
        for id in reviewer_ids {
            if id.trim().is_empty() {
                return Err(ServiceError::InvalidInput("reviewer ids must not be empty".into()));
            }
            if !seen.insert(id) {
                return Err(ServiceError::DuplicateReviewer(id.clone()));
            }
        }
        let assignments = reviewer_ids
            .iter()
            .enumerate()
            .map(|(i, r)| Assignment {
                reviewer_id: r.clone(),
                session_id: format!("{}-s{}", s.submission_id, s.reviewers.len() + i + 1),
            })
            .collect();
        let next = self.append(&s, Event::ReviewersAssigned { assignments, third })?;
        Ok(next.reviewers[s.reviewers.len()..].to_vec())
    }

    pub fn form(&self, form_id: &str) -> Result<DynamicForm> {
        let spec = self
            .form_index
            .read()
            .expect("index lock")
            .get(form_id)
            .cloned()
            .ok_or_else(|| ServiceError::NotFound {
                kind: "form",
                id: form_id.to_string(),
            })?;
        let form = compose_form(&spec.declaration, &self.registry)?.with_adhoc_items(&spec.adhoc_items)?;
        Ok(DynamicForm::new(form, spec.venue, &self.registry)?)
    }

    pub fn form_view(&self, form_id: &str) -> Result<FormView> {
        let form = self.form(form_id)?;
        let trees = form
            .form()
            .essential_items()
            .filter_map(|i| form.tree_for(&i.key).map(|t| (i.key.clone(), t.clone())))
            .collect();
        Ok(FormView {
            venue: form.venue(),
            form: form.form().clone(),
            trees,
        })
    }

    fn session_owner(&self, session_id: &str) -> Result<Submission> {
        let owner = self
            .session_index
            .read()
            .expect("index lock")
            .get(session_id)
            .cloned()
            .ok_or_else(|| ServiceError::NotFound {
                kind: "session",
                id: session_id.to_string(),
            })?;
        self.submission(&owner)
    }

    pub fn session(&self, session_id: &str) -> Result<SessionView> {
        let s = self.session_owner(session_id)?;
        Ok(SessionView::new(
            &s.submission_id,
            s.form.as_ref().expect("sessions imply a form"),
            &s.sessions[session_id],
        ))
    }

    pub fn session_log(&self, session_id: &str) -> Result<SessionLog> {
        let s = self.session_owner(session_id)?;
        Ok(s.logs[session_id].clone())
    }

    /// Applies one reviewer action. Sessions stay editable until the
    /// decision is made.
    pub fn session_action(&self, session_id: &str, action: SessionAction) -> Result<SessionView> {
        let s = self.session_owner(session_id)?;
        if !matches!(
            s.status,
            SubmissionStatus::UnderReview | SubmissionStatus::AwaitingThird
        ) {
            return Err(ServiceError::WrongState {
                operation: "change a review session",
                status: s.status,
            });
        }
        let form = s.form.as_ref().expect("sessions imply a form");
        s.sessions[session_id].apply(form, &action)?;
        let record = LogRecord {
            seq: s.logs[session_id].records.len() as u64 + 1,
            at: self.clock.now_ms(),
            action,
        };
        let next = self.append(
            &s,
            Event::SessionUpdated {
                session_id: session_id.to_string(),
                record,
            },
        )?;
        Ok(SessionView::new(
            &next.submission_id,
            next.form.as_ref().expect("form"),
            &next.sessions[session_id],
        ))
    }

    fn initial_report(&self, s: &Submission, policy: &ThresholdPolicy) -> Result<AgreementReport> {
        let form = s.form.as_ref().expect("sessions imply a form");
        let initial: Vec<Session> = s
            .reviewers
            .iter()
            .filter(|r| !r.third)
            .map(|r| s.sessions[&r.session_id].clone())
            .collect();
        let ratings = ratings_from_sessions(form, &initial, &policy.scope)?;
        Ok(evaluate_threshold(&ratings, policy)?)
    }

    /// Agreement of the initial reviewers, computed on demand.
    pub fn agreement(&self, submission_id: &str) -> Result<AgreementView> {
        let s = self.submission(submission_id)?;
        if s.reviewers.is_empty() {
            return Err(ServiceError::WrongState {
                operation: "compute agreement",
                status: s.status,
            });
        }
        let incomplete = s.incomplete_sessions();
        if !incomplete.is_empty() {
            return Err(ServiceError::SessionsIncomplete(incomplete));
        }
        let policy = s.rules.agreement_policy.clone();
        let gating = policy.is_some();
        let policy = policy.unwrap_or_default();
        let report = self.initial_report(&s, &policy)?;
        let sessions: Vec<Session> = s.ordered_sessions().into_iter().cloned().collect();
        let mut rules = s.rules.clone();
        rules.reviewers_required = 1;
        let disputed = aggregate(s.form.as_ref().expect("form"), &sessions, &rules)?
            .into_iter()
            .filter(|c| c.disputed)
            .map(|c| c.item_key)
            .collect();
        Ok(AgreementView {
            gating,
            policy,
            report,
            disputed,
        })
    }

    /// Escalates on insufficient agreement, otherwise aggregates, decides and
    /// writes the letter. Always ends in a definite verdict unless a third
    /// reviewer is needed.
    pub fn finalize_decision(&self, submission_id: &str) -> Result<FinalizeResult> {
        let s = self.submission(submission_id)?;
        if !matches!(
            s.status,
            SubmissionStatus::UnderReview | SubmissionStatus::AwaitingThird
        ) {
            return Err(ServiceError::WrongState {
                operation: "decide",
                status: s.status,
            });
        }
        let incomplete = s.incomplete_sessions();
        if !incomplete.is_empty() {
            return Err(ServiceError::SessionsIncomplete(incomplete));
        }
        if s.status == SubmissionStatus::AwaitingThird && !s.has_third() {
            return Err(ServiceError::AwaitingThirdReviewer);
        }
        let mut agreement = None;
        if let (Some(policy), false) = (&s.rules.agreement_policy, s.has_third()) {
            let report = self.initial_report(&s, policy)?;
            if report.recommendation == Recommendation::RecruitThirdReviewer {
                self.append(&s, Event::AgreementEscalated { report: report.clone() })?;
                return Ok(FinalizeResult {
                    status: SubmissionStatus::AwaitingThird,
                    agreement: Some(report),
                    verdict: None,
                    letter: None,
                });
            }
            agreement = Some(report);
        }
        let form = s.form.as_ref().expect("sessions imply a form");
        let sessions: Vec<Session> = s.ordered_sessions().into_iter().cloned().collect();
        let consensus = aggregate(form, &sessions, &s.rules)?;
        let verdict = decide(&consensus, &sessions, &s.rules)?;
        let letter = generate_letter(form.form(), &verdict, &consensus, &sessions)?;
        let next = self.append(
            &s,
            Event::Decided {
                agreement: agreement.clone(),
                consensus,
                verdict: verdict.clone(),
                letter: letter.clone(),
            },
        )?;
        Ok(FinalizeResult {
            status: next.status,
            agreement,
            verdict: Some(verdict),
            letter: Some(letter),
        })
    }

    /// One checker confirms the to-do list; all entries done ends the
    /// process with acceptance.
    pub fn verify_revision_completion(
        &self,
        submission_id: &str,
        checker_id: &str,
        marks: &BTreeMap<String, bool>,
    ) -> Result<RevisionOutcome> {
        let s = self.submission(submission_id)?;
        if s.status != SubmissionStatus::RevisionInvited {
            return Err(ServiceError::WrongState {
                operation: "check a revision",
                status: s.status,
            });
        }
        if checker_id.trim().is_empty() {
            return Err(ServiceError::InvalidInput("checker_id must not be empty".into()));
        }
        if let Some(first) = s.revision_checks.first() {
            if first.checker_id != checker_id {
                return Err(ServiceError::CheckerMismatch {
                    expected: first.checker_id.clone(),
                    got: checker_id.to_string(),
                });
            }
        }
        let letter = &s.decision.as_ref().expect("revision implies a decision").letter;
        let result = verify_revision(letter, marks)?;
        let next = self.append(
            &s,
            Event::RevisionChecked {
                checker_id: checker_id.to_string(),
                marks: marks.clone(),
                result: result.clone(),
            },
        )?;
        Ok(RevisionOutcome {
            status: next.status,
            result,
        })
    }

    pub fn letter(&self, submission_id: &str) -> Result<DecisionLetter> {
        let s = self.submission(submission_id)?;
        s.decision.map(|d| d.letter).ok_or_else(|| ServiceError::NotFound {
            kind: "letter",
            id: submission_id.to_string(),
        })
    }

    pub fn export(&self, submission_id: &str) -> Result<SubmissionExport> {
        let submission = self.submission(submission_id)?;
        let session_logs = submission.logs.iter().map(|(k, v)| (k.clone(), v.to_jsonl())).collect();
        Ok(SubmissionExport {
            submission,
            session_logs,
        })
    }
}
