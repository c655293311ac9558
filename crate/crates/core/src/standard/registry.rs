use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use super::{parse_standard, Category, ParseError, Standard, StandardKind};
use crate::tree::{default_tree_id, FollowUpTree, TreeError, VenueKind};

/// Name of the manifest file inside a standards directory.
pub const MANIFEST_FILE: &str = "registry.toml";

#[derive(Debug, Error)]
pub enum RegistryError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{file}: {source}")]
    Parse {
        file: String,
        #[source]
        source: ParseError,
    },
    #[error("{file}: {source}")]
    Tree {
        file: String,
        #[source]
        source: TreeError,
    },
    #[error("manifest: {0}")]
    Manifest(String),
    #[error("duplicate standard id `{0}`")]
    DuplicateStandard(String),
    #[error("duplicate follow-up tree id `{0}`")]
    DuplicateTree(String),
    #[error("General Standard `{0}` is not in the registry")]
    UnknownGeneral(String),
    #[error("expected exactly one General Standard, found {0}")]
    GeneralCount(usize),
    #[error("`{0}` is designated General but is not of kind general")]
    NotGeneral(String),
    #[error("{standard}/{item}: follow-up tree `{tree}` does not resolve")]
    UnresolvedTree {
        standard: String,
        item: String,
        tree: String,
    },
    #[error("{standard}/{item}: only essential attributes may carry a follow-up tree")]
    TreeOnNonEssential { standard: String, item: String },
}

#[derive(Deserialize)]
struct Manifest {
    general: String,
}

/// A set of standards with one designated General Standard, plus the custom
/// follow-up trees their essential items refer to.
#[derive(Debug, Clone, PartialEq)]
pub struct Registry {
    standards: BTreeMap<String, Standard>,
    general_id: String,
    trees: BTreeMap<String, FollowUpTree>,
}

impl Registry {
    pub fn new(
        standards: impl IntoIterator<Item = Standard>,
        general_id: impl Into<String>,
        trees: impl IntoIterator<Item = FollowUpTree>,
    ) -> Result<Self, RegistryError> {
        let general_id = general_id.into();
        let mut by_id = BTreeMap::new();
        for s in standards {
            if let Some(prev) = by_id.insert(s.id.clone(), s) {
                return Err(RegistryError::DuplicateStandard(prev.id));
            }
        }
        let mut tree_map = BTreeMap::new();
        for t in trees {
            let id = t.tree_id().to_string();
            let reserved = [VenueKind::Journal, VenueKind::Conference].map(default_tree_id);
            if reserved.contains(&id.as_str()) || tree_map.insert(id.clone(), t).is_some() {
                return Err(RegistryError::DuplicateTree(id));
            }
        }
        let general = by_id
            .get(&general_id)
            .ok_or_else(|| RegistryError::UnknownGeneral(general_id.clone()))?;
        if general.kind != StandardKind::General {
            return Err(RegistryError::NotGeneral(general_id));
        }
        let generals = by_id.values().filter(|s| s.kind == StandardKind::General).count();
        if generals != 1 {
            return Err(RegistryError::GeneralCount(generals));
        }
        for s in by_id.values() {
            for item in &s.attributes {
                let Some(tree) = &item.followup_tree_ref else { continue };
                if item.category != Category::Essential {
                    return Err(RegistryError::TreeOnNonEssential {
                        standard: s.id.clone(),
                        item: item.item_id.clone(),
                    });
                }
                if !tree_map.contains_key(tree) {
                    return Err(RegistryError::UnresolvedTree {
                        standard: s.id.clone(),
                        item: item.item_id.clone(),
                        tree: tree.clone(),
                    });
                }
            }
        }
        Ok(Self {
            standards: by_id,
            general_id,
            trees: tree_map,
        })
    }

    /// Builds a registry from in-memory sources: the manifest text, standard
    /// documents and tree definitions, each paired with a display name used in
    /// error messages.
    pub fn from_sources<'a>(
        manifest: &str,
        documents: impl IntoIterator<Item = (&'a str, &'a str)>,
        trees: impl IntoIterator<Item = (&'a str, &'a str)>,
    ) -> Result<Self, RegistryError> {
        let manifest: Manifest = toml::from_str(manifest).map_err(|e| RegistryError::Manifest(e.to_string()))?;
        let standards = documents
            .into_iter()
            .map(|(file, text)| {
                parse_standard(text).map_err(|source| RegistryError::Parse {
                    file: file.to_string(),
                    source,
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let trees = trees
            .into_iter()
            .map(|(file, text)| {
                FollowUpTree::parse(text).map_err(|source| RegistryError::Tree {
                    file: file.to_string(),
                    source,
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(standards, manifest.general, trees)
    }

    /// Loads `registry.toml`, every `*.md` standard and every `*.tree`
    /// definition found directly inside `dir`.
    pub fn load_dir(dir: impl AsRef<Path>) -> Result<Self, RegistryError> {
        let dir = dir.as_ref();
        let read = |path: PathBuf| fs::read_to_string(&path).map_err(|source| RegistryError::Io { path, source });
        let manifest = read(dir.join(MANIFEST_FILE))?;
        let mut entries: Vec<PathBuf> = fs::read_dir(dir)
            .map_err(|source| RegistryError::Io {
                path: dir.to_path_buf(),
                source,
            })?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .collect();
        entries.sort();
        let mut docs = Vec::new();
        let mut trees = Vec::new();
        for path in entries {
            let name = path
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default();
            match path.extension().and_then(|e| e.to_str()) {
                Some("md") => docs.push((name, read(path)?)),
                Some("tree") => trees.push((name, read(path)?)),
                _ => {}
            }
        }
        Self::from_sources(
            &manifest,
            docs.iter().map(|(n, t)| (n.as_str(), t.as_str())),
            trees.iter().map(|(n, t)| (n.as_str(), t.as_str())),
        )
    }

    pub fn get(&self, id: &str) -> Option<&Standard> {
        self.standards.get(id)
    }

    pub fn general_id(&self) -> &str {
        &self.general_id
    }

    pub fn general(&self) -> Option<&Standard> {
        self.standards.get(&self.general_id)
    }

    /// Standards ordered by id.
    pub fn standards(&self) -> impl Iterator<Item = &Standard> {
        self.standards.values()
    }

    pub fn has_tree(&self, id: &str) -> bool {
        self.trees.contains_key(id)
    }

    pub fn tree(&self, id: &str) -> Option<&FollowUpTree> {
        self.trees.get(id)
    }

    pub fn trees(&self) -> impl Iterator<Item = &FollowUpTree> {
        self.trees.values()
    }
}
