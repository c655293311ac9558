use std::collections::{BTreeMap, HashSet};

use thiserror::Error;

use super::{AttributeItem, Category, Section, Standard, StandardKind};
use crate::text::{is_slug, slugify, SLUG_WORDS};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("document is empty")]
    EmptyDocument,
    #[error("line {line}: malformed front matter: {message}")]
    MalformedFrontMatter { line: usize, message: String },
    #[error("line {line}: expected a `# <name>` title")]
    MissingTitle { line: usize },
    #[error("missing `## {0}` section")]
    MissingSection(String),
    #[error("line {line}: unknown section `{heading}`")]
    UnknownSection { line: usize, heading: String },
    #[error("line {line}: section `{heading}` is out of order")]
    SectionOutOfOrder { line: usize, heading: String },
    #[error("line {line}: unknown category heading `{heading}`")]
    UnknownCategoryHeading { line: usize, heading: String },
    #[error("line {line}: attribute item appears before any category heading")]
    ItemOutsideCategory { line: usize },
    #[error("line {line}: duplicate item id `{id}`")]
    DuplicateItemId { line: usize, id: String },
    #[error("line {line}: invalid item id `{id}`")]
    InvalidItemId { line: usize, id: String },
    #[error("line {line}: id anchor is not followed by an attribute item")]
    DanglingAnchor { line: usize },
    #[error("line {line}: empty item text")]
    EmptyItem { line: usize },
    #[error("line {line}: unexpected content `{content}`")]
    UnexpectedLine { line: usize, content: String },
    #[error("follow-up reference names unknown item `{0}`")]
    UnknownFollowUpItem(String),
}

#[derive(Default)]
struct FrontMatter {
    id: Option<String>,
    kind: Option<StandardKind>,
    version: Option<String>,
    followups: Vec<(String, String)>,
    initial_checks: Vec<String>,
}

struct Anchor {
    line: usize,
    id: Option<String>,
    tags: Vec<String>,
}

struct RawItem {
    line: usize,
    explicit_id: Option<String>,
    tags: Vec<String>,
    text: String,
    category: Category,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Block {
    Definition,
    Section(Section),
}

/// Parses one standard document.
///
/// Attribute order follows the document. Items carry the id of their
/// `<!-- id: ... -->` anchor when present, otherwise a slug of the first six
/// words of their text (suffixed `-2`, `-3`, ... on collision).
pub fn parse_standard(text: &str) -> Result<Standard, ParseError> {
    if text.trim().is_empty() {
        return Err(ParseError::EmptyDocument);
    }
    let lines: Vec<&str> = text.lines().map(|l| l.trim_end_matches('\r')).collect();
    let mut pos = skip_blank(&lines, 0);

    let mut front = FrontMatter::default();
    if lines.get(pos).map(|l| l.trim()) == Some("---") {
        pos = parse_front_matter(&lines, pos, &mut front)?;
        pos = skip_blank(&lines, pos);
    }

    let name = match lines.get(pos).and_then(|l| l.strip_prefix("# ")) {
        Some(name) if !name.trim().is_empty() => name.trim().to_string(),
        _ => return Err(ParseError::MissingTitle { line: pos + 1 }),
    };
    pos += 1;

    let mut block = Block::Definition;
    let mut seen: Vec<Section> = Vec::new();
    let mut text_blocks: BTreeMap<Option<Section>, Vec<&str>> = BTreeMap::new();
    let mut lists: BTreeMap<Section, Vec<String>> = BTreeMap::new();
    let mut raw_items: Vec<RawItem> = Vec::new();
    let mut category: Option<Category> = None;
    let mut anchor: Option<Anchor> = None;

    for (idx, &line) in lines.iter().enumerate().skip(pos) {
        let lineno = idx + 1;
        if let Some(heading) = line.strip_prefix("## ") {
            let heading = heading.trim();
            let section = Section::from_heading(heading).ok_or_else(|| ParseError::UnknownSection {
                line: lineno,
                heading: heading.to_string(),
            })?;
            if seen.last().is_some_and(|last| *last >= section) {
                return Err(ParseError::SectionOutOfOrder {
                    line: lineno,
                    heading: heading.to_string(),
                });
            }
            if let Some(a) = anchor.take() {
                return Err(ParseError::DanglingAnchor { line: a.line });
            }
            seen.push(section);
            block = Block::Section(section);
            continue;
        }

        match block {
            Block::Definition => text_blocks.entry(None).or_default().push(line),
            Block::Section(s @ (Section::Application | Section::Notes)) => {
                text_blocks.entry(Some(s)).or_default().push(line)
            }
            Block::Section(Section::SpecificAttributes) => {
                let trimmed = line.trim();
                if trimmed.is_empty() {
                    continue;
                }
                if let Some(heading) = trimmed.strip_prefix("### ") {
                    if let Some(a) = anchor.take() {
                        return Err(ParseError::DanglingAnchor { line: a.line });
                    }
                    let heading = heading.trim();
                    category =
                        Some(
                            Category::from_heading(heading).ok_or_else(|| ParseError::UnknownCategoryHeading {
                                line: lineno,
                                heading: heading.to_string(),
                            })?,
                        );
                } else if let Some(body) = trimmed.strip_prefix("<!--").and_then(|b| b.strip_suffix("-->")) {
                    if let Some(a) = anchor.take() {
                        return Err(ParseError::DanglingAnchor { line: a.line });
                    }
                    anchor = Some(parse_anchor(body, lineno)?);
                } else if let Some(rest) = trimmed
                    .strip_prefix("- ")
                    .or(if trimmed == "-" { Some("") } else { None })
                {
                    let Some(cat) = category else {
                        return Err(ParseError::ItemOutsideCategory { line: lineno });
                    };
                    let rest = rest.trim_start();
                    let text = rest
                        .strip_prefix("[ ]")
                        .or_else(|| rest.strip_prefix("[x]"))
                        .unwrap_or(rest)
                        .trim();
                    if text.is_empty() {
                        return Err(ParseError::EmptyItem { line: lineno });
                    }
                    let a = anchor.take();
                    raw_items.push(RawItem {
                        line: a.as_ref().map_or(lineno, |a| a.line),
                        explicit_id: a.as_ref().and_then(|a| a.id.clone()),
                        tags: a.map(|a| a.tags).unwrap_or_default(),
                        text: text.to_string(),
                        category: cat,
                    });
                } else {
                    return Err(ParseError::UnexpectedLine {
                        line: lineno,
                        content: trimmed.to_string(),
                    });
                }
            }
            Block::Section(s) => {
                let trimmed = line.trim();
                if trimmed.is_empty() {
                    continue;
                }
                let entries = lists.entry(s).or_default();
                if let Some(rest) = trimmed
                    .strip_prefix("- ")
                    .or(if trimmed == "-" { Some("") } else { None })
                {
                    let rest = rest.trim();
                    if rest.is_empty() {
                        return Err(ParseError::EmptyItem { line: lineno });
                    }
                    entries.push(rest.to_string());
                } else if line.starts_with(char::is_whitespace) && !entries.is_empty() {
                    let last = entries.last_mut().expect("non-empty");
                    last.push(' ');
                    last.push_str(trimmed);
                } else {
                    return Err(ParseError::UnexpectedLine {
                        line: lineno,
                        content: trimmed.to_string(),
                    });
                }
            }
        }
    }
    if let Some(a) = anchor {
        return Err(ParseError::DanglingAnchor { line: a.line });
    }

    let kind = front.kind.unwrap_or(StandardKind::MethodSpecific);
    if kind != StandardKind::Supplement && !seen.contains(&Section::SpecificAttributes) {
        return Err(ParseError::MissingSection(
            Section::SpecificAttributes.heading().to_string(),
        ));
    }

    let mut attributes = assign_ids(raw_items)?;
    let mut assigned: HashSet<String> = HashSet::new();
    for (item_id, tree_id) in front.followups {
        if !assigned.insert(item_id.clone()) {
            return Err(ParseError::MalformedFrontMatter {
                line: 1,
                message: format!("item `{item_id}` has more than one follow-up tree"),
            });
        }
        let item = attributes
            .iter_mut()
            .find(|a| a.item_id == item_id)
            .ok_or(ParseError::UnknownFollowUpItem(item_id))?;
        item.followup_tree_ref = Some(tree_id);
    }

    let mut take_text = |key: Option<Section>| -> String {
        text_blocks
            .remove(&key)
            .map(|ls| ls.join("\n").trim().to_string())
            .unwrap_or_default()
    };
    let definition = take_text(None);
    let application = take_text(Some(Section::Application));
    let notes = take_text(Some(Section::Notes));
    let mut take_list = |s: Section| lists.remove(&s).unwrap_or_default();

    Ok(Standard {
        id: front.id.unwrap_or_else(|| slugify(&name, usize::MAX)),
        name,
        kind,
        version: front.version.unwrap_or_else(|| "1.0.0".to_string()),
        definition,
        application,
        attributes,
        quality_criteria: take_list(Section::QualityCriteria),
        acceptable_deviations: take_list(Section::AcceptableDeviations),
        antipatterns: take_list(Section::Antipatterns),
        invalid_criticisms: take_list(Section::InvalidCriticisms),
        suggested_readings: take_list(Section::SuggestedReadings),
        exemplars: take_list(Section::Exemplars),
        notes,
        initial_checks: front.initial_checks,
    })
}

fn skip_blank(lines: &[&str], mut pos: usize) -> usize {
    while lines.get(pos).is_some_and(|l| l.trim().is_empty()) {
        pos += 1;
    }
    pos
}

fn parse_front_matter(lines: &[&str], start: usize, front: &mut FrontMatter) -> Result<usize, ParseError> {
    let malformed = |line: usize, message: String| ParseError::MalformedFrontMatter { line, message };
    let mut pos = start + 1;
    loop {
        let Some(line) = lines.get(pos) else {
            return Err(malformed(start + 1, "unterminated front matter".into()));
        };
        let lineno = pos + 1;
        pos += 1;
        let line = line.trim();
        if line == "---" {
            return Ok(pos);
        }
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once(':')
            .ok_or_else(|| malformed(lineno, format!("expected `key: value`, got `{line}`")))?;
        let (key, value) = (key.trim(), value.trim());
        let once = |slot: &mut Option<String>| {
            if slot.is_some() {
                Err(malformed(lineno, format!("duplicate key `{key}`")))
            } else {
                *slot = Some(value.to_string());
                Ok(())
            }
        };
        match key {
            "id" => once(&mut front.id)?,
            "version" => once(&mut front.version)?,
            "kind" => {
                if front.kind.is_some() {
                    return Err(malformed(lineno, "duplicate key `kind`".into()));
                }
                front.kind = Some(value.parse().map_err(|e| malformed(lineno, e))?);
            }
            "followup" => {
                let (item, tree) = value
                    .split_once('=')
                    .ok_or_else(|| malformed(lineno, "expected `followup: <item-id> = <tree-id>`".into()))?;
                front.followups.push((item.trim().to_string(), tree.trim().to_string()));
            }
            "initial_check" => front.initial_checks.push(value.to_string()),
            other => return Err(malformed(lineno, format!("unknown key `{other}`"))),
        }
    }
}

fn parse_anchor(body: &str, line: usize) -> Result<Anchor, ParseError> {
    let mut anchor = Anchor {
        line,
        id: None,
        tags: Vec::new(),
    };
    for part in body.split(';') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let Some((key, value)) = part.split_once(':') else {
            return Err(ParseError::UnexpectedLine {
                line,
                content: body.trim().to_string(),
            });
        };
        match key.trim() {
            "id" => {
                let id = value.trim();
                if !is_slug(id) {
                    return Err(ParseError::InvalidItemId {
                        line,
                        id: id.to_string(),
                    });
                }
                anchor.id = Some(id.to_string());
            }
            "tags" => {
                anchor.tags = value
                    .split(',')
                    .map(str::trim)
                    .filter(|t| !t.is_empty())
                    .map(str::to_string)
                    .collect()
            }
            _ => {
                return Err(ParseError::UnexpectedLine {
                    line,
                    content: body.trim().to_string(),
                })
            }
        }
    }
    Ok(anchor)
}

fn assign_ids(raw: Vec<RawItem>) -> Result<Vec<AttributeItem>, ParseError> {
    let mut used: HashSet<String> = HashSet::new();
    for item in &raw {
        if let Some(id) = &item.explicit_id {
            if !used.insert(id.clone()) {
                return Err(ParseError::DuplicateItemId {
                    line: item.line,
                    id: id.clone(),
                });
            }
        }
    }
    let mut out = Vec::with_capacity(raw.len());
    for item in raw {
        let item_id = match item.explicit_id {
            Some(id) => id,
            None => {
                let base = match slugify(&item.text, SLUG_WORDS) {
                    s if s.is_empty() => "item".to_string(),
                    s => s,
                };
                let mut candidate = base.clone();
                let mut n = 2;
                while used.contains(&candidate) {
                    candidate = format!("{base}-{n}");
                    n += 1;
                }
                used.insert(candidate.clone());
                candidate
            }
        };
        out.push(AttributeItem {
            item_id,
            text: item.text,
            category: item.category,
            tags: item.tags,
            followup_tree_ref: None,
        });
    }
    Ok(out)
}
