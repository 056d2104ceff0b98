//! Built-in test MDPs.
//!
//! The JSON files under `gallery/` at the workspace root are compiled into
//! the library; [`Gallery::from_dir`] loads a replacement set from disk.

use std::path::{Path, PathBuf};

use super::model::{MdpFile, Policy, TabularMDP};
use crate::error::{Error, Result};

const EMBEDDED: &[(&str, &str)] = &[
    ("chain3", include_str!("../../../../gallery/chain3.json")),
    ("rare4", include_str!("../../../../gallery/rare4.json")),
    ("random10", include_str!("../../../../gallery/random10.json")),
    ("ring5", include_str!("../../../../gallery/ring5.json")),
    ("slowmix2", include_str!("../../../../gallery/slowmix2.json")),
    ("twostate", include_str!("../../../../gallery/twostate.json")),
];

/// A named MDP with its evaluation policy.
#[derive(Debug, Clone, PartialEq)]
pub struct GalleryEntry {
    pub name: String,
    pub mdp: TabularMDP,
    pub policy: Policy,
}

impl GalleryEntry {
    pub fn parse(name: &str, json: &str) -> Result<Self> {
        let file: MdpFile = serde_json::from_str(json)
            .map_err(|e| Error::Gallery(format!("{name}: {e}")))?;
        let (mdp, policy) = file
            .build()
            .map_err(|e| Error::Gallery(format!("{name}: {e}")))?;
        Ok(Self {
            name: file.name,
            mdp,
            policy,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let json = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&path.display().to_string(), &json)
    }
}

/// A set of gallery entries sorted by name.
#[derive(Debug, Clone)]
pub struct Gallery {
    entries: Vec<GalleryEntry>,
}

impl Gallery {
    pub fn embedded() -> Self {
        let entries = EMBEDDED
            .iter()
            .map(|(name, json)| GalleryEntry::parse(name, json).expect("embedded gallery is valid"))
            .collect();
        Self { entries }
    }

    /// Every `*.json` file in `dir`.
    pub fn from_dir(dir: &Path) -> Result<Self> {
        let read = std::fs::read_dir(dir).map_err(|source| Error::Io {
            path: dir.display().to_string(),
            source,
        })?;
        let mut paths: Vec<PathBuf> = read
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        paths.sort();
        if paths.is_empty() {
            return Err(Error::Gallery(format!("no .json files in {}", dir.display())));
        }
        let mut entries = paths
            .iter()
            .map(|p| GalleryEntry::load(p))
            .collect::<Result<Vec<_>>>()?;
        entries.sort_by(|a, b| a.name.cmp(&b.name));
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[GalleryEntry] {
        &self.entries
    }

    pub fn names(&self) -> Vec<&str> {
        self.entries.iter().map(|e| e.name.as_str()).collect()
    }

    pub fn get(&self, name: &str) -> Result<&GalleryEntry> {
        self.entries
            .iter()
            .find(|e| e.name == name)
            .ok_or_else(|| Error::Gallery(format!("no gallery entry named `{name}` (have {:?})", self.names())))
    }
}
