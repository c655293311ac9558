//! Follow-up decision trees revealed when a reviewer marks an essential
//! attribute as missing.
//!
//! A tree starts *below* the item's own yes/no prompt: answering that prompt
//! "yes" resolves the item as met, answering "no" reveals the tree root.
//!
//! Tree definition files are plain text:
//!
//! ```text
//! tree: random-assignment
//! root: justified
//!
//! [justified]
//! prompt: Is there a reasonable justification for the lack of random assignment?
//! kind: yes-no
//! yes -> ok
//! no -> why
//!
//! [why]
//! prompt: Explain why the design cannot support its conclusions.
//! kind: free-text
//! * -> fatal
//!
//! [ok]
//! leaf: justified-deviation
//!
//! [fatal]
//! leaf: fatal
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::status::StatusKind;

/// Node id of every essential item's own yes/no prompt.
pub const ROOT_NODE: &str = "root";
/// Edge label of the single outgoing edge of a free-text node.
pub const ANY_TEXT: &str = "*";
/// Upper bound on captured reviewer text, in characters.
pub const MAX_NOTE_CHARS: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VenueKind {
    Journal,
    Conference,
}

impl VenueKind {
    pub fn as_str(self) -> &'static str {
        match self {
            VenueKind::Journal => "journal",
            VenueKind::Conference => "conference",
        }
    }
}

impl fmt::Display for VenueKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for VenueKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "journal" => Ok(VenueKind::Journal),
            "conference" => Ok(VenueKind::Conference),
            other => Err(format!("unknown venue kind `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AnswerKind {
    YesNo,
    Choice,
    FreeText,
}

impl AnswerKind {
    pub fn as_str(self) -> &'static str {
        match self {
            AnswerKind::YesNo => "yes-no",
            AnswerKind::Choice => "choice",
            AnswerKind::FreeText => "free-text",
        }
    }
}

impl FromStr for AnswerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "yes-no" => Ok(AnswerKind::YesNo),
            "choice" => Ok(AnswerKind::Choice),
            "free-text" => Ok(AnswerKind::FreeText),
            other => Err(format!("unknown answer kind `{other}`")),
        }
    }
}

/// A reviewer's answer to one prompt.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Answer {
    Yes,
    No,
    Choice(String),
    Text(String),
}

impl Answer {
    pub fn kind(&self) -> AnswerKind {
        match self {
            Answer::Yes | Answer::No => AnswerKind::YesNo,
            Answer::Choice(_) => AnswerKind::Choice,
            Answer::Text(_) => AnswerKind::FreeText,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FollowUpNode {
    pub node_id: String,
    #[serde(default)]
    pub prompt: String,
    /// `None` on leaves.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub answer_kind: Option<AnswerKind>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub edges: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub leaf_status: Option<StatusKind>,
    #[serde(default)]
    pub capture_text: bool,
}

impl FollowUpNode {
    pub fn is_leaf(&self) -> bool {
        self.leaf_status.is_some()
    }

    fn question(id: &str, prompt: &str, yes: &str, no: &str) -> Self {
        Self {
            node_id: id.into(),
            prompt: prompt.into(),
            answer_kind: Some(AnswerKind::YesNo),
            edges: BTreeMap::from([("yes".to_string(), yes.to_string()), ("no".to_string(), no.to_string())]),
            leaf_status: None,
            capture_text: false,
        }
    }

    fn free_text(id: &str, prompt: &str, next: &str) -> Self {
        Self {
            node_id: id.into(),
            prompt: prompt.into(),
            answer_kind: Some(AnswerKind::FreeText),
            edges: BTreeMap::from([(ANY_TEXT.to_string(), next.to_string())]),
            leaf_status: None,
            capture_text: true,
        }
    }

    fn leaf(id: &str, status: StatusKind) -> Self {
        Self {
            node_id: id.into(),
            prompt: String::new(),
            answer_kind: None,
            edges: BTreeMap::new(),
            leaf_status: Some(status),
            capture_text: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TreeError {
    #[error("tree `{tree}`: root node `{root}` does not exist")]
    MissingRoot { tree: String, root: String },
    #[error("tree `{tree}`: root node must ask a question")]
    LeafRoot { tree: String },
    #[error("tree `{tree}`: node id `{ROOT_NODE}` is reserved")]
    ReservedNodeId { tree: String },
    #[error("tree `{tree}`, node `{node}`: {rule}")]
    InvalidNode { tree: String, node: String, rule: String },
    #[error("tree `{tree}`, node `{node}`: edge `{label}` points to unknown node `{target}`")]
    DanglingEdge {
        tree: String,
        node: String,
        label: String,
        target: String,
    },
    #[error("tree `{tree}`: cycle through node `{node}`")]
    Cycle { tree: String, node: String },
    #[error("tree `{tree}`: node `{node}` is unreachable from the root")]
    Unreachable { tree: String, node: String },
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
}

/// Errors raised when an answer is applied to a node.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TransitionError {
    #[error("node `{node}` expects a {expected} answer")]
    WrongAnswerKind { node: String, expected: &'static str },
    #[error("node `{node}` has no option `{choice}`")]
    InvalidChoice { node: String, choice: String },
    #[error("captured text must not be empty")]
    EmptyNote,
    #[error("captured text exceeds {MAX_NOTE_CHARS} characters")]
    NoteTooLong,
    #[error("node `{0}` is a leaf")]
    LeafNode(String),
}

/// A validated follow-up tree.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawTree", into = "RawTree")]
pub struct FollowUpTree {
    tree_id: String,
    root: String,
    nodes: BTreeMap<String, FollowUpNode>,
}

#[derive(Serialize, Deserialize)]
struct RawTree {
    tree_id: String,
    root: String,
    nodes: BTreeMap<String, FollowUpNode>,
}

impl TryFrom<RawTree> for FollowUpTree {
    type Error = TreeError;

    fn try_from(raw: RawTree) -> Result<Self, Self::Error> {
        FollowUpTree::new(raw.tree_id, raw.root, raw.nodes.into_values())
    }
}

impl From<FollowUpTree> for RawTree {
    fn from(t: FollowUpTree) -> Self {
        RawTree {
            tree_id: t.tree_id,
            root: t.root,
            nodes: t.nodes,
        }
    }
}

impl FollowUpTree {
    pub fn new(
        tree_id: impl Into<String>,
        root: impl Into<String>,
        nodes: impl IntoIterator<Item = FollowUpNode>,
    ) -> Result<Self, TreeError> {
        let tree = Self {
            tree_id: tree_id.into(),
            root: root.into(),
            nodes: nodes.into_iter().map(|n| (n.node_id.clone(), n)).collect(),
        };
        tree.check()?;
        Ok(tree)
    }

    pub fn tree_id(&self) -> &str {
        &self.tree_id
    }

    pub fn root(&self) -> &FollowUpNode {
        &self.nodes[&self.root]
    }

    pub fn node(&self, id: &str) -> Option<&FollowUpNode> {
        self.nodes.get(id)
    }

    pub fn nodes(&self) -> impl Iterator<Item = &FollowUpNode> {
        self.nodes.values()
    }

    /// Nodes that ask a yes/no or multiple-choice question.
    pub fn decision_nodes(&self) -> impl Iterator<Item = &FollowUpNode> {
        self.nodes
            .values()
            .filter(|n| matches!(n.answer_kind, Some(AnswerKind::YesNo | AnswerKind::Choice)))
    }

    pub fn leaves(&self) -> impl Iterator<Item = &FollowUpNode> {
        self.nodes.values().filter(|n| n.is_leaf())
    }

    /// Follows the edge selected by `answer` out of `node_id`.
    pub fn next(&self, node_id: &str, answer: &Answer) -> Result<&FollowUpNode, TransitionError> {
        let node = self
            .nodes
            .get(node_id)
            .ok_or_else(|| TransitionError::LeafNode(node_id.to_string()))?;
        let label = edge_label(node, answer)?;
        let target = &node.edges[label];
        Ok(&self.nodes[target])
    }

    fn check(&self) -> Result<(), TreeError> {
        let tree = || self.tree_id.clone();
        let invalid = |node: &str, rule: &str| TreeError::InvalidNode {
            tree: tree(),
            node: node.to_string(),
            rule: rule.to_string(),
        };
        let root = self.nodes.get(&self.root).ok_or_else(|| TreeError::MissingRoot {
            tree: tree(),
            root: self.root.clone(),
        })?;
        if root.is_leaf() {
            return Err(TreeError::LeafRoot { tree: tree() });
        }
        for (id, node) in &self.nodes {
            if id == ROOT_NODE {
                return Err(TreeError::ReservedNodeId { tree: tree() });
            }
            if id != &node.node_id {
                return Err(invalid(id, "node id does not match its key"));
            }
            match (node.leaf_status, node.answer_kind) {
                (Some(_), _) if !node.edges.is_empty() => {
                    return Err(invalid(id, "a leaf must not have outgoing edges"))
                }
                (Some(_), Some(_)) => return Err(invalid(id, "a leaf must not declare an answer kind")),
                (Some(StatusKind::Met), _) => {
                    return Err(invalid(id, "`met` is reached only by answering the item prompt yes"))
                }
                (Some(_), None) if node.capture_text => return Err(invalid(id, "a leaf cannot capture text")),
                (Some(_), None) => {}
                (None, None) => return Err(invalid(id, "an internal node needs an answer kind")),
                (None, Some(_)) if node.edges.is_empty() => {
                    return Err(invalid(id, "an internal node needs outgoing edges or a leaf status"))
                }
                (None, Some(AnswerKind::YesNo)) => {
                    if node.edges.len() != 2 || !node.edges.contains_key("yes") || !node.edges.contains_key("no") {
                        return Err(invalid(id, "a yes-no node needs exactly the edges `yes` and `no`"));
                    }
                }
                (None, Some(AnswerKind::Choice)) => {
                    if node.edges.len() < 2 || node.edges.keys().any(|k| k.trim().is_empty() || k == ANY_TEXT) {
                        return Err(invalid(id, "a choice node needs at least two named options"));
                    }
                }
                (None, Some(AnswerKind::FreeText)) => {
                    if node.edges.len() != 1 || !node.edges.contains_key(ANY_TEXT) {
                        return Err(invalid(id, "a free-text node needs exactly one `*` edge"));
                    }
                }
            }
            if node.capture_text && node.answer_kind != Some(AnswerKind::FreeText) {
                return Err(invalid(id, "only free-text nodes capture text"));
            }
            if !node.is_leaf() && node.prompt.trim().is_empty() {
                return Err(invalid(id, "a question needs a prompt"));
            }
            for (label, target) in &node.edges {
                let Some(t) = self.nodes.get(target) else {
                    return Err(TreeError::DanglingEdge {
                        tree: tree(),
                        node: id.clone(),
                        label: label.clone(),
                        target: target.clone(),
                    });
                };
                if matches!(t.leaf_status, Some(StatusKind::FixableRevision | StatusKind::Fatal))
                    && !(node.answer_kind == Some(AnswerKind::FreeText) && node.capture_text)
                {
                    return Err(invalid(
                        id,
                        "revision and fatal leaves must be reached through a capturing free-text node",
                    ));
                }
            }
        }

        // Depth-first walk with an explicit on-path set to find cycles.
        let mut visited = BTreeSet::new();
        let mut on_path = BTreeSet::new();
        self.visit(&self.root, &mut visited, &mut on_path)?;
        if let Some(orphan) = self.nodes.keys().find(|k| !visited.contains(k.as_str())) {
            return Err(TreeError::Unreachable {
                tree: tree(),
                node: orphan.clone(),
            });
        }
        Ok(())
    }

    fn visit<'a>(
        &'a self,
        id: &'a str,
        visited: &mut BTreeSet<&'a str>,
        on_path: &mut BTreeSet<&'a str>,
    ) -> Result<(), TreeError> {
        if on_path.contains(id) {
            return Err(TreeError::Cycle {
                tree: self.tree_id.clone(),
                node: id.to_string(),
            });
        }
        if !visited.insert(id) {
            return Ok(());
        }
        on_path.insert(id);
        for target in self.nodes[id].edges.values() {
            self.visit(target, visited, on_path)?;
        }
        on_path.remove(id);
        Ok(())
    }

    /// Parses a tree definition file.
    pub fn parse(text: &str) -> Result<Self, TreeError> {
        let syntax = |line: usize, message: String| TreeError::Syntax { line, message };
        let mut tree_id = None;
        let mut root = None;
        let mut nodes: Vec<FollowUpNode> = Vec::new();
        let mut seen = BTreeSet::new();

        for (idx, raw) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(id) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                let id = id.trim().to_string();
                if !seen.insert(id.clone()) {
                    return Err(syntax(lineno, format!("duplicate node `{id}`")));
                }
                nodes.push(FollowUpNode {
                    node_id: id,
                    prompt: String::new(),
                    answer_kind: None,
                    edges: BTreeMap::new(),
                    leaf_status: None,
                    capture_text: false,
                });
                continue;
            }
            let keyed = ["tree", "root", "prompt", "kind", "capture", "leaf"]
                .iter()
                .find_map(|k| {
                    line.strip_prefix(k)
                        .and_then(|r| r.trim_start().strip_prefix(':'))
                        .map(|v| (*k, v.trim()))
                });
            let Some(node) = nodes.last_mut() else {
                match keyed {
                    Some(("tree", v)) => tree_id = Some(v.to_string()),
                    Some(("root", v)) => root = Some(v.to_string()),
                    _ => return Err(syntax(lineno, format!("unexpected `{line}` before the first node"))),
                }
                continue;
            };
            match keyed {
                Some(("prompt", v)) => node.prompt = v.to_string(),
                Some(("kind", v)) => {
                    let kind: AnswerKind = v.parse().map_err(|e| syntax(lineno, e))?;
                    node.answer_kind = Some(kind);
                    if kind == AnswerKind::FreeText {
                        node.capture_text = true;
                    }
                }
                Some(("capture", v)) => {
                    node.capture_text = v
                        .parse()
                        .map_err(|_| syntax(lineno, format!("expected true/false, got `{v}`")))?
                }
                Some(("leaf", v)) => node.leaf_status = Some(v.parse().map_err(|e| syntax(lineno, e))?),
                Some((k, _)) => return Err(syntax(lineno, format!("`{k}` is only allowed in the header"))),
                None => {
                    let (label, target) = line
                        .split_once("->")
                        .ok_or_else(|| syntax(lineno, format!("expected `<answer> -> <node>`, got `{line}`")))?;
                    let label = label.trim().to_string();
                    if node.edges.insert(label.clone(), target.trim().to_string()).is_some() {
                        return Err(syntax(lineno, format!("duplicate edge `{label}`")));
                    }
                }
            }
        }
        let tree_id = tree_id.ok_or_else(|| syntax(1, "missing `tree:` header".into()))?;
        let root = root.ok_or_else(|| syntax(1, "missing `root:` header".into()))?;
        Self::new(tree_id, root, nodes)
    }

    /// Renders the tree in the definition-file format, root node first.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "tree: {}\nroot: {}", self.tree_id, self.root);
        let order = std::iter::once(self.root()).chain(self.nodes.values().filter(|n| n.node_id != self.root));
        for node in order {
            let _ = writeln!(out, "\n[{}]", node.node_id);
            if !node.prompt.is_empty() {
                let _ = writeln!(out, "prompt: {}", node.prompt);
            }
            if let Some(kind) = node.answer_kind {
                let _ = writeln!(out, "kind: {}", kind.as_str());
                if kind == AnswerKind::FreeText && !node.capture_text {
                    out.push_str("capture: false\n");
                }
            }
            if let Some(status) = node.leaf_status {
                let _ = writeln!(out, "leaf: {status}");
            }
            for (label, target) in &node.edges {
                let _ = writeln!(out, "{label} -> {target}");
            }
        }
        out
    }
}

fn edge_label<'a>(node: &'a FollowUpNode, answer: &'a Answer) -> Result<&'a str, TransitionError> {
    let wrong = |expected| TransitionError::WrongAnswerKind {
        node: node.node_id.clone(),
        expected,
    };
    match (node.answer_kind, answer) {
        (None, _) => Err(TransitionError::LeafNode(node.node_id.clone())),
        (Some(AnswerKind::YesNo), Answer::Yes) => Ok("yes"),
        (Some(AnswerKind::YesNo), Answer::No) => Ok("no"),
        (Some(AnswerKind::YesNo), _) => Err(wrong("yes/no")),
        (Some(AnswerKind::Choice), Answer::Choice(c)) => {
            if node.edges.contains_key(c) {
                Ok(c.as_str())
            } else {
                Err(TransitionError::InvalidChoice {
                    node: node.node_id.clone(),
                    choice: c.clone(),
                })
            }
        }
        (Some(AnswerKind::Choice), _) => Err(wrong("choice")),
        (Some(AnswerKind::FreeText), Answer::Text(t)) => {
            check_note(t)?;
            Ok(ANY_TEXT)
        }
        (Some(AnswerKind::FreeText), _) => Err(wrong("free-text")),
    }
}

/// Captured text must be non-blank and at most [`MAX_NOTE_CHARS`] long.
pub fn check_note(text: &str) -> Result<(), TransitionError> {
    if text.trim().is_empty() {
        Err(TransitionError::EmptyNote)
    } else if text.chars().count() > MAX_NOTE_CHARS {
        Err(TransitionError::NoteTooLong)
    } else {
        Ok(())
    }
}

/// The canonical deviation tree used for essential items without a custom
/// tree. Journals add a third question separating revisable problems from
/// fatal ones; conferences have no revision stage.
pub fn default_tree(venue: VenueKind) -> FollowUpTree {
    let mut nodes = vec![
        FollowUpNode::question(
            "justified",
            "Is this deviation justified in the context of this study?",
            "deviation-ok",
            "easy-fix",
        ),
        FollowUpNode::leaf("deviation-ok", StatusKind::JustifiedDeviation),
        FollowUpNode::leaf("minor", StatusKind::FixableMinor),
        FollowUpNode::leaf("fatal", StatusKind::Fatal),
    ];
    match venue {
        VenueKind::Journal => {
            nodes.extend([
                FollowUpNode::question(
                    "easy-fix",
                    "Would this problem be easy to fix in the camera-ready copy?",
                    "minor",
                    "no-new-data",
                ),
                FollowUpNode::question(
                    "no-new-data",
                    "Can this problem be fixed without repeating data collection?",
                    "what-is-missing",
                    "why-fatal",
                ),
                FollowUpNode::free_text(
                    "what-is-missing",
                    "State exactly what is incorrect or missing.",
                    "revision",
                ),
                FollowUpNode::leaf("revision", StatusKind::FixableRevision),
                FollowUpNode::free_text(
                    "why-fatal",
                    "Explain why this cannot be fixed without repeating data collection.",
                    "fatal",
                ),
            ]);
        }
        VenueKind::Conference => {
            nodes.extend([
                FollowUpNode::question(
                    "easy-fix",
                    "Would this problem be easy to fix in the camera-ready copy?",
                    "minor",
                    "why-fatal",
                ),
                FollowUpNode::free_text(
                    "why-fatal",
                    "Explain why this cannot be fixed by modest editing alone.",
                    "fatal",
                ),
            ]);
        }
    }
    FollowUpTree::new(default_tree_id(venue), "justified", nodes).expect("default tree is well formed")
}

pub fn default_tree_id(venue: VenueKind) -> &'static str {
    match venue {
        VenueKind::Journal => "default-journal",
        VenueKind::Conference => "default-conference",
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Walks `answers` from the tree root; returns the leaf status if reached.
    fn walk(tree: &FollowUpTree, answers: &[Answer]) -> Option<StatusKind> {
        let mut node = tree.root();
        for a in answers {
            node = tree.next(&node.node_id, a).ok()?;
            if let Some(s) = node.leaf_status {
                return Some(s);
            }
        }
        None
    }

    #[test]
    fn journal_tree_shape() {
        let t = default_tree(VenueKind::Journal);
        assert_eq!(t.decision_nodes().count(), 3);
        assert_eq!(t.leaves().count(), 4);
        let leaves: BTreeSet<_> = t.leaves().filter_map(|n| n.leaf_status).collect();
        assert_eq!(
            leaves,
            BTreeSet::from([
                StatusKind::JustifiedDeviation,
                StatusKind::FixableMinor,
                StatusKind::FixableRevision,
                StatusKind::Fatal
            ])
        );
    }

    #[test]
    fn conference_tree_shape() {
        let t = default_tree(VenueKind::Conference);
        assert_eq!(t.decision_nodes().count(), 2);
        assert_eq!(t.leaves().count(), 3);
        assert!(t.leaves().all(|n| n.leaf_status != Some(StatusKind::FixableRevision)));
    }

    #[test]
    fn transitions() {
        let txt = || Answer::Text("reason".into());
        for venue in [VenueKind::Journal, VenueKind::Conference] {
            let t = default_tree(venue);
            assert_eq!(walk(&t, &[Answer::Yes]), Some(StatusKind::JustifiedDeviation));
            assert_eq!(walk(&t, &[Answer::No, Answer::Yes]), Some(StatusKind::FixableMinor));
        }
        let c = default_tree(VenueKind::Conference);
        assert_eq!(walk(&c, &[Answer::No, Answer::No, txt()]), Some(StatusKind::Fatal));
        let j = default_tree(VenueKind::Journal);
        assert_eq!(
            walk(&j, &[Answer::No, Answer::No, Answer::Yes, txt()]),
            Some(StatusKind::FixableRevision)
        );
        assert_eq!(
            walk(&j, &[Answer::No, Answer::No, Answer::No, txt()]),
            Some(StatusKind::Fatal)
        );
    }

    #[test]
    fn answer_kind_checks() {
        let t = default_tree(VenueKind::Journal);
        assert!(matches!(
            t.next("justified", &Answer::Text("x".into())),
            Err(TransitionError::WrongAnswerKind { .. })
        ));
        assert_eq!(
            t.next("what-is-missing", &Answer::Text("  ".into())),
            Err(TransitionError::EmptyNote)
        );
        let long = "x".repeat(MAX_NOTE_CHARS + 1);
        assert_eq!(
            t.next("what-is-missing", &Answer::Text(long)),
            Err(TransitionError::NoteTooLong)
        );
        assert!(t
            .next("what-is-missing", &Answer::Text("x".repeat(MAX_NOTE_CHARS)))
            .is_ok());
    }

    #[test]
    fn text_format_round_trip() {
        for venue in [VenueKind::Journal, VenueKind::Conference] {
            let t = default_tree(venue);
            assert_eq!(FollowUpTree::parse(&t.to_text()).unwrap(), t);
        }
    }

    #[test]
    fn rejects_cycles_and_dangling_edges() {
        let cyc = "tree: c\nroot: a\n[a]\nprompt: a?\nkind: yes-no\nyes -> b\nno -> b\n[b]\nprompt: b?\nkind: yes-no\nyes -> a\nno -> l\n[l]\nleaf: fixable-minor\n";
        assert!(matches!(FollowUpTree::parse(cyc), Err(TreeError::Cycle { .. })));
        let dangling =
            "tree: d\nroot: a\n[a]\nprompt: a?\nkind: yes-no\nyes -> l\nno -> nowhere\n[l]\nleaf: fixable-minor\n";
        assert!(matches!(
            FollowUpTree::parse(dangling),
            Err(TreeError::DanglingEdge { .. })
        ));
    }

    #[test]
    fn fatal_leaf_requires_capture() {
        let bad = "tree: f\nroot: a\n[a]\nprompt: a?\nkind: yes-no\nyes -> ok\nno -> dead\n[ok]\nleaf: justified-deviation\n[dead]\nleaf: fatal\n";
        assert!(matches!(FollowUpTree::parse(bad), Err(TreeError::InvalidNode { .. })));
    }

    #[test]
    fn choice_nodes() {
        let src = "tree: ch\nroot: how\n[how]\nprompt: How?\nkind: choice\nnone -> why\nsome -> ok\n[why]\nprompt: Why?\nkind: free-text\n* -> dead\n[ok]\nleaf: fixable-minor\n[dead]\nleaf: fatal\n";
        let t = FollowUpTree::parse(src).unwrap();
        assert_eq!(
            t.next("how", &Answer::Choice("some".into())).unwrap().leaf_status,
            Some(StatusKind::FixableMinor)
        );
        assert!(matches!(
            t.next("how", &Answer::Choice("all".into())),
            Err(TransitionError::InvalidChoice { .. })
        ));
        assert!(matches!(
            t.next("how", &Answer::Yes),
            Err(TransitionError::WrongAnswerKind { .. })
        ));
    }

    #[test]
    fn json_rejects_invalid_tree() {
        let json = r#"{"tree_id":"x","root":"missing","nodes":{}}"#;
        assert!(serde_json::from_str::<FollowUpTree>(json).is_err());
        let t = default_tree(VenueKind::Journal);
        let back: FollowUpTree = serde_json::from_str(&serde_json::to_string(&t).unwrap()).unwrap();
        assert_eq!(back, t);
    }
}
