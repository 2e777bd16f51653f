//! Sets as thimacs: persistent tuple stores with new-version semantics.
//!
//! Every mutation returns a fresh [`TupleStore`] with a higher version; the
//! input value is never touched. Extension order is immaterial for equality
//! but insertion order is kept so retrieval and dumps are deterministic.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::ir::{ModelIndex, Thimac, ThimacId};
use crate::validate::{Rule, Violation};

/// Tuple component. Domains are strings and integers only.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Scalar {
    Int(i64),
    Str(String),
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Int(i) => write!(f, "{i}"),
            Scalar::Str(s) => write!(f, "{s:?}"),
        }
    }
}

impl From<i64> for Scalar {
    fn from(v: i64) -> Self {
        Scalar::Int(v)
    }
}

impl From<&str> for Scalar {
    fn from(v: &str) -> Self {
        Scalar::Str(v.to_owned())
    }
}

pub type Tuple = Vec<Scalar>;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SetError {
    #[error("tuple has {found} components but `{store}` has arity {arity}")]
    Arity { store: ThimacId, arity: usize, found: usize },
    #[error("tuple {tuple} is already a member of `{store}`")]
    Duplicate { store: ThimacId, tuple: DisplayTuple },
}

/// Wrapper so errors can print tuples as `(a, b)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DisplayTuple(pub Tuple);

impl fmt::Display for DisplayTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, s) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{s}")?;
        }
        f.write_str(")")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RetrievePolicy {
    /// Earliest inserted match (sequential search).
    First,
    All,
}

/// Retrieval outcome. Absence is a value, not an error.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Retrieved<'s> {
    NotFound,
    Found(Vec<&'s Tuple>),
}

impl Retrieved<'_> {
    pub fn is_found(&self) -> bool {
        matches!(self, Retrieved::Found(_))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TupleStore {
    pub owner: ThimacId,
    pub columns: Vec<String>,
    pub version: u64,
    /// Insertion-ordered, duplicate-free.
    #[serde(rename = "tuples")]
    extension: Vec<Tuple>,
}

impl TupleStore {
    pub fn new(owner: ThimacId, columns: Vec<String>) -> Self {
        TupleStore { owner, columns, version: 0, extension: Vec::new() }
    }

    /// Build a store from seed tuples. Seeding is construction, not a
    /// sequence of versions, so the result stays at version 0.
    pub fn with_tuples(owner: ThimacId, columns: Vec<String>, tuples: Vec<Tuple>) -> Result<Self, SetError> {
        let mut store = TupleStore::new(owner, columns);
        for t in tuples {
            store.check(&t)?;
            store.extension.push(t);
        }
        Ok(store)
    }

    pub fn arity(&self) -> usize {
        self.columns.len()
    }

    pub fn len(&self) -> usize {
        self.extension.len()
    }

    pub fn is_empty(&self) -> bool {
        self.extension.is_empty()
    }

    pub fn contains(&self, tuple: &[Scalar]) -> bool {
        self.extension.iter().any(|t| t.as_slice() == tuple)
    }

    pub fn tuples(&self) -> &[Tuple] {
        &self.extension
    }

    /// Extension as an unordered set.
    pub fn as_set(&self) -> BTreeSet<&Tuple> {
        self.extension.iter().collect()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    fn check(&self, tuple: &[Scalar]) -> Result<(), SetError> {
        if tuple.len() != self.arity() {
            return Err(SetError::Arity { store: self.owner.clone(), arity: self.arity(), found: tuple.len() });
        }
        if self.contains(tuple) {
            return Err(SetError::Duplicate { store: self.owner.clone(), tuple: DisplayTuple(tuple.to_vec()) });
        }
        Ok(())
    }

    /// A new version whose extension is `self ∪ {tuple}`.
    pub fn add_member(&self, tuple: Tuple) -> Result<TupleStore, SetError> {
        self.check(&tuple)?;
        let mut next = self.clone();
        next.version += 1;
        next.extension.push(tuple);
        Ok(next)
    }

    pub fn retrieve_member<F>(&self, selector: F, policy: RetrievePolicy) -> Retrieved<'_>
    where
        F: Fn(&Tuple) -> bool,
    {
        let mut hits = self.extension.iter().filter(|t| selector(t));
        let found: Vec<&Tuple> = match policy {
            RetrievePolicy::First => hits.next().into_iter().collect(),
            RetrievePolicy::All => hits.collect(),
        };
        if found.is_empty() {
            Retrieved::NotFound
        } else {
            Retrieved::Found(found)
        }
    }

    /// Open an empty successor, insert `first`, then copy the old records in
    /// retrieval order.
    pub fn new_version_copy(&self, first: Tuple) -> Result<TupleStore, SetError> {
        let mut builder = VersionBuilder::open(self);
        builder.insert(first)?;
        Ok(builder.copy_old())
    }

    /// Insertion-ordered dump of the extension.
    pub fn export_extension(&self) -> Vec<Tuple> {
        self.extension.clone()
    }
}

/// Step-wise construction of a new store version: open empty, fill with
/// fresh records, then copy the old records across.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VersionBuilder {
    old: TupleStore,
    new: TupleStore,
}

impl VersionBuilder {
    pub fn open(old: &TupleStore) -> Self {
        let mut new = TupleStore::new(old.owner.clone(), old.columns.clone());
        new.version = old.version + 1;
        VersionBuilder { old: old.clone(), new }
    }

    /// Insert into the new version. Rejects tuples already present in the
    /// old version too, since the copy would duplicate them.
    pub fn insert(&mut self, tuple: Tuple) -> Result<(), SetError> {
        self.new.check(&tuple)?;
        if self.old.contains(&tuple) {
            return Err(SetError::Duplicate { store: self.old.owner.clone(), tuple: DisplayTuple(tuple) });
        }
        self.new.extension.push(tuple);
        Ok(())
    }

    pub fn copy_old(mut self) -> TupleStore {
        for t in self.old.extension {
            if !self.new.contains(&t) {
                self.new.extension.push(t);
            }
        }
        self.new
    }

    pub fn pending(&self) -> &TupleStore {
        &self.new
    }
}

const SET_PARTS: [&str; 3] = ["member", "extension", "transformation"];

/// A `role=set` thimac must own member, extension, and transformation
/// sub-thimacs (matched on local name, case-insensitively).
pub fn check_set_structure(idx: &ModelIndex<'_>, set: &Thimac) -> Vec<Violation> {
    let names: Vec<String> =
        set.children.iter().filter_map(|c| idx.thimac(c.as_str())).map(|c| c.id.local().to_ascii_lowercase()).collect();
    SET_PARTS
        .iter()
        .filter(|part| !names.iter().any(|n| n == *part))
        .map(|part| {
            Violation::error(Rule::SetStructureMissing, set.id.as_str(), format!("set has no `{part}` sub-thimac"))
        })
        .collect()
}
