//! One reviewer's pass over a dynamic review form.
//!
//! Each essential item starts with a single yes/no prompt (node
//! [`ROOT_NODE`]). "Yes" resolves it as met. "No" reveals the root of the
//! item's follow-up tree, and each further answer reveals at most one more
//! prompt until a leaf status is reached. Desirable and extraordinary items
//! are only marked present or absent.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::compose::{MethodDeclaration, ReviewForm};
use crate::standard::{Category, Registry};
use crate::status::ItemStatus;
use crate::tree::{default_tree, default_tree_id, Answer, FollowUpTree, TransitionError, VenueKind, ROOT_NODE};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SessionError {
    #[error("unknown item `{0}`")]
    UnknownItem(String),
    #[error("prompt `{node}` of item `{item}` has not been revealed")]
    NotRevealed { item: String, node: String },
    #[error(transparent)]
    Answer(#[from] TransitionError),
    #[error("session is complete and no longer accepts changes")]
    SessionClosed,
    #[error("item `{item}` is {category}; {hint}")]
    WrongCategory {
        item: String,
        category: Category,
        hint: &'static str,
    },
    #[error("follow-up tree `{0}` is not available")]
    UnknownTree(String),
    #[error("session belongs to form `{session}`, not `{form}`")]
    FormMismatch { session: String, form: String },
    #[error("session is incomplete: {0:?} still open")]
    Incomplete(Vec<String>),
}

/// A review form bound to the follow-up trees its essential items use.
#[derive(Debug, Clone, PartialEq)]
pub struct DynamicForm {
    form: ReviewForm,
    venue: VenueKind,
    trees: BTreeMap<String, FollowUpTree>,
}

impl DynamicForm {
    /// Resolves custom trees from `registry`; items without one get the
    /// default tree for `venue`.
    pub fn new(form: ReviewForm, venue: VenueKind, registry: &Registry) -> Result<Self, SessionError> {
        let trees = registry.trees().cloned().collect::<Vec<_>>();
        Self::with_trees(form, venue, trees)
    }

    pub fn with_trees(
        form: ReviewForm,
        venue: VenueKind,
        trees: impl IntoIterator<Item = FollowUpTree>,
    ) -> Result<Self, SessionError> {
        let mut available: BTreeMap<String, FollowUpTree> =
            trees.into_iter().map(|t| (t.tree_id().to_string(), t)).collect();
        let default = default_tree(venue);
        available.insert(default.tree_id().to_string(), default);
        let mut used = BTreeMap::new();
        for item in form.essential_items() {
            let id = item.followup_tree_ref.as_deref().unwrap_or(default_tree_id(venue));
            let tree = available
                .get(id)
                .ok_or_else(|| SessionError::UnknownTree(id.to_string()))?;
            used.insert(id.to_string(), tree.clone());
        }
        Ok(Self {
            form,
            venue,
            trees: used,
        })
    }

    pub fn form(&self) -> &ReviewForm {
        &self.form
    }

    pub fn form_id(&self) -> &str {
        &self.form.form_id
    }

    pub fn venue(&self) -> VenueKind {
        self.venue
    }

    /// The follow-up tree of an essential item.
    pub fn tree_for(&self, item_key: &str) -> Option<&FollowUpTree> {
        let item = self.form.item(item_key)?;
        if item.category != Category::Essential {
            return None;
        }
        let id = item.followup_tree_ref.as_deref().unwrap_or(default_tree_id(self.venue));
        self.trees.get(id)
    }

    /// Prompt text shown for a node. The item's own prompt is its checklist
    /// sentence.
    pub fn prompt(&self, item_key: &str, node_id: &str) -> Option<&str> {
        if node_id == ROOT_NODE {
            return self.form.item(item_key).map(|i| i.text.as_str());
        }
        self.tree_for(item_key)?.node(node_id).map(|n| n.prompt.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SessionState {
    Open,
    Complete,
}

/// One reviewer's answer state. Transitions return a new value and leave the
/// receiver untouched.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Session {
    pub session_id: String,
    pub form_id: String,
    pub reviewer_id: String,
    /// item key -> node id -> answer
    answers: BTreeMap<String, BTreeMap<String, Answer>>,
    /// item key -> revealed prompts, in the order they were revealed
    revealed: BTreeMap<String, Vec<String>>,
    desirable_marks: BTreeMap<String, bool>,
    comments: String,
    state: SessionState,
}

struct Trace {
    path: Vec<String>,
    status: Option<ItemStatus>,
}

pub fn start_session(form: &DynamicForm, session_id: impl Into<String>, reviewer_id: impl Into<String>) -> Session {
    Session {
        session_id: session_id.into(),
        form_id: form.form_id().to_string(),
        reviewer_id: reviewer_id.into(),
        answers: BTreeMap::new(),
        revealed: form
            .form
            .essential_items()
            .map(|i| (i.key.clone(), vec![ROOT_NODE.to_string()]))
            .collect(),
        desirable_marks: BTreeMap::new(),
        comments: String::new(),
        state: SessionState::Open,
    }
}

impl Session {
    pub fn state(&self) -> SessionState {
        self.state
    }

    pub fn comments(&self) -> &str {
        &self.comments
    }

    pub fn desirable_marks(&self) -> &BTreeMap<String, bool> {
        &self.desirable_marks
    }

    pub fn answers_for(&self, item_key: &str) -> Option<&BTreeMap<String, Answer>> {
        self.answers.get(item_key)
    }

    /// Revealed prompts of an item, in path order.
    pub fn revealed(&self, item_key: &str) -> &[String] {
        self.revealed.get(item_key).map(Vec::as_slice).unwrap_or_default()
    }

    pub fn revealed_all(&self) -> &BTreeMap<String, Vec<String>> {
        &self.revealed
    }

    /// The root answer of an essential item, if given.
    pub fn root_answer(&self, item_key: &str) -> Option<&Answer> {
        self.answers.get(item_key)?.get(ROOT_NODE)
    }

    fn check_form(&self, form: &DynamicForm) -> Result<(), SessionError> {
        if self.form_id != form.form_id() {
            return Err(SessionError::FormMismatch {
                session: self.form_id.clone(),
                form: form.form_id().to_string(),
            });
        }
        Ok(())
    }

    fn check_open(&self) -> Result<(), SessionError> {
        match self.state {
            SessionState::Open => Ok(()),
            SessionState::Complete => Err(SessionError::SessionClosed),
        }
    }

    fn essential_tree<'f>(&self, form: &'f DynamicForm, item_key: &str) -> Result<&'f FollowUpTree, SessionError> {
        let item = form
            .form
            .item(item_key)
            .ok_or_else(|| SessionError::UnknownItem(item_key.to_string()))?;
        if item.category != Category::Essential {
            return Err(SessionError::WrongCategory {
                item: item_key.to_string(),
                category: item.category,
                hint: "mark it present or absent instead",
            });
        }
        form.tree_for(item_key)
            .ok_or_else(|| SessionError::UnknownTree(item.followup_tree_ref.clone().unwrap_or_default()))
    }

    /// Records an answer to a revealed prompt. Changing an earlier answer
    /// drops every answer and prompt below it.
    pub fn answer(
        &self,
        form: &DynamicForm,
        item_key: &str,
        node_id: &str,
        answer: Answer,
    ) -> Result<Self, SessionError> {
        self.check_form(form)?;
        self.check_open()?;
        let tree = self.essential_tree(form, item_key)?;
        if !self.revealed(item_key).iter().any(|n| n == node_id) {
            return Err(SessionError::NotRevealed {
                item: item_key.to_string(),
                node: node_id.to_string(),
            });
        }
        if node_id == ROOT_NODE {
            if !matches!(answer, Answer::Yes | Answer::No) {
                return Err(TransitionError::WrongAnswerKind {
                    node: ROOT_NODE.to_string(),
                    expected: "yes/no",
                }
                .into());
            }
        } else {
            tree.next(node_id, &answer)?;
        }

        let mut next = self.clone();
        let item_answers = next.answers.entry(item_key.to_string()).or_default();
        item_answers.insert(node_id.to_string(), answer);
        let trace = trace(tree, item_answers);
        item_answers.retain(|node, _| trace.path.contains(node));
        next.revealed.insert(item_key.to_string(), trace.path);
        Ok(next)
    }

    /// Status reached by the recorded answers, or `None` while the path is
    /// incomplete. Desirable and extraordinary items never have one.
    pub fn item_status(&self, form: &DynamicForm, item_key: &str) -> Result<Option<ItemStatus>, SessionError> {
        let item = form
            .form
            .item(item_key)
            .ok_or_else(|| SessionError::UnknownItem(item_key.to_string()))?;
        if item.category != Category::Essential {
            return Ok(None);
        }
        let tree = self.essential_tree(form, item_key)?;
        Ok(self.answers.get(item_key).and_then(|a| trace(tree, a).status))
    }

    /// Statuses of every essential item, in form order.
    pub fn statuses(&self, form: &DynamicForm) -> Vec<(String, Option<ItemStatus>)> {
        form.form
            .essential_items()
            .map(|i| (i.key.clone(), self.item_status(form, &i.key).ok().flatten()))
            .collect()
    }

    pub fn mark_attribute(&self, form: &DynamicForm, item_key: &str, present: bool) -> Result<Self, SessionError> {
        self.check_form(form)?;
        self.check_open()?;
        let item = form
            .form
            .item(item_key)
            .ok_or_else(|| SessionError::UnknownItem(item_key.to_string()))?;
        if item.category == Category::Essential {
            return Err(SessionError::WrongCategory {
                item: item_key.to_string(),
                category: item.category,
                hint: "answer its prompt instead",
            });
        }
        let mut next = self.clone();
        next.desirable_marks.insert(item_key.to_string(), present);
        Ok(next)
    }

    /// Replaces the free-form comments. They never influence statuses.
    pub fn set_comments(&self, text: impl Into<String>) -> Result<Self, SessionError> {
        self.check_open()?;
        let mut next = self.clone();
        next.comments = text.into();
        Ok(next)
    }

    /// Items that still need an answer or a mark.
    pub fn open_items(&self, form: &DynamicForm) -> Vec<String> {
        form.form
            .items
            .iter()
            .filter(|i| match i.category {
                Category::Essential => !matches!(self.item_status(form, &i.key), Ok(Some(_))),
                _ => !self.desirable_marks.contains_key(&i.key),
            })
            .map(|i| i.key.clone())
            .collect()
    }

    pub fn is_complete(&self, form: &DynamicForm) -> bool {
        self.open_items(form).is_empty()
    }

    /// Finalizes the session; requires every item to be resolved.
    pub fn complete(&self, form: &DynamicForm) -> Result<Self, SessionError> {
        self.check_form(form)?;
        self.check_open()?;
        let open = self.open_items(form);
        if !open.is_empty() {
            return Err(SessionError::Incomplete(open));
        }
        let mut next = self.clone();
        next.state = SessionState::Complete;
        Ok(next)
    }

    /// Makes a completed session editable again.
    pub fn reopen(&self) -> Self {
        let mut next = self.clone();
        next.state = SessionState::Open;
        next
    }

    pub fn apply(&self, form: &DynamicForm, action: &SessionAction) -> Result<Self, SessionError> {
        match action {
            SessionAction::Answer {
                item_key,
                node_id,
                answer,
            } => self.answer(form, item_key, node_id, answer.clone()),
            SessionAction::Mark { item_key, present } => self.mark_attribute(form, item_key, *present),
            SessionAction::Comment { text } => self.set_comments(text.clone()),
            SessionAction::Complete => self.complete(form),
            SessionAction::Reopen => Ok(self.reopen()),
        }
    }
}

fn trace(tree: &FollowUpTree, answers: &BTreeMap<String, Answer>) -> Trace {
    let mut path = vec![ROOT_NODE.to_string()];
    match answers.get(ROOT_NODE) {
        Some(Answer::Yes) => {
            return Trace {
                path,
                status: Some(ItemStatus::met()),
            }
        }
        Some(Answer::No) => {}
        _ => return Trace { path, status: None },
    }
    let mut node = tree.root();
    path.push(node.node_id.clone());
    let mut note = None;
    while let Some(answer) = answers.get(&node.node_id) {
        let Ok(next) = tree.next(&node.node_id, answer) else {
            break;
        };
        if node.capture_text {
            if let Answer::Text(t) = answer {
                note = Some(t.clone());
            }
        }
        if let Some(kind) = next.leaf_status {
            return Trace {
                path,
                status: Some(ItemStatus::new(kind, note)),
            };
        }
        node = next;
        path.push(node.node_id.clone());
    }
    Trace { path, status: None }
}

/// A state change recorded in a session log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case")]
pub enum SessionAction {
    Answer {
        item_key: String,
        node_id: String,
        answer: Answer,
    },
    Mark {
        item_key: String,
        present: bool,
    },
    Comment {
        text: String,
    },
    Complete,
    Reopen,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogRecord {
    pub seq: u64,
    /// Milliseconds since the Unix epoch.
    pub at: u64,
    #[serde(flatten)]
    pub action: SessionAction,
}

/// Everything needed to rebuild the form a session was answered against.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogHeader {
    pub session_id: String,
    pub form_id: String,
    pub reviewer_id: String,
    pub venue: VenueKind,
    pub declaration: MethodDeclaration,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub adhoc_items: Vec<String>,
}

#[derive(Debug, Error)]
pub enum LogError {
    #[error("line {line}: {source}")]
    Json {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("session log is empty")]
    Empty,
    #[error("record {seq} is out of sequence")]
    Sequence { seq: u64 },
    #[error("record {seq}: {source}")]
    Replay {
        seq: u64,
        #[source]
        source: SessionError,
    },
    #[error("log header names form `{header}` but the rebuilt form is `{form}`")]
    FormMismatch { header: String, form: String },
}

/// Append-only answer log of one session: a header line followed by one JSON
/// record per line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionLog {
    pub header: LogHeader,
    pub records: Vec<LogRecord>,
}

impl SessionLog {
    pub fn new(header: LogHeader) -> Self {
        Self {
            header,
            records: Vec::new(),
        }
    }

    /// Applies `action` to `session` and, on success, appends it.
    pub fn record(
        &mut self,
        form: &DynamicForm,
        session: &Session,
        at: u64,
        action: SessionAction,
    ) -> Result<Session, SessionError> {
        let next = session.apply(form, &action)?;
        self.records.push(LogRecord {
            seq: self.records.len() as u64 + 1,
            at,
            action,
        });
        Ok(next)
    }

    /// Rebuilds the session by applying every record in order.
    pub fn replay(&self, form: &DynamicForm) -> Result<Session, LogError> {
        if self.header.form_id != form.form_id() {
            return Err(LogError::FormMismatch {
                header: self.header.form_id.clone(),
                form: form.form_id().to_string(),
            });
        }
        let mut session = start_session(form, &self.header.session_id, &self.header.reviewer_id);
        for (i, rec) in self.records.iter().enumerate() {
            if rec.seq != i as u64 + 1 {
                return Err(LogError::Sequence { seq: rec.seq });
            }
            session = session
                .apply(form, &rec.action)
                .map_err(|source| LogError::Replay { seq: rec.seq, source })?;
        }
        Ok(session)
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = serde_json::to_string(&self.header).expect("header serializes");
        out.push('\n');
        for rec in &self.records {
            out.push_str(&serde_json::to_string(rec).expect("record serializes"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Self, LogError> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, first) = lines.next().ok_or(LogError::Empty)?;
        let header = serde_json::from_str(first).map_err(|source| LogError::Json { line: 1, source })?;
        let records = lines
            .map(|(i, l)| serde_json::from_str(l).map_err(|source| LogError::Json { line: i + 1, source }))
            .collect::<Result<_, _>>()?;
        Ok(Self { header, records })
    }
}
