//! Finite structures and their JSON documents.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::logic::Signature;
use crate::relation::NAryRelation;

/// A finite universe `{0, …, m-1}` with an interpretation for every
/// relation symbol of its signature.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Structure {
    universe_size: usize,
    signature: Signature,
    interpretation: BTreeMap<String, NAryRelation>,
}

impl Structure {
    pub fn new(
        universe_size: usize,
        signature: Signature,
        interpretation: BTreeMap<String, NAryRelation>,
    ) -> Result<Self> {
        if universe_size == 0 {
            return Err(Error::Schema("universe_size must be at least 1".into()));
        }
        for (name, arity) in signature.iter() {
            let rel = interpretation
                .get(name)
                .ok_or_else(|| Error::Schema(format!("relation `{name}` is declared but not interpreted")))?;
            if rel.arity() != arity {
                return Err(Error::ArityMismatch {
                    name: name.to_string(),
                    expected: arity,
                    found: rel.arity(),
                });
            }
            if rel.universe_size() != universe_size {
                return Err(Error::Schema(format!(
                    "relation `{name}` is over a universe of size {}, structure has {universe_size}",
                    rel.universe_size()
                )));
            }
        }
        if let Some(extra) = interpretation.keys().find(|k| !signature.contains(k)) {
            return Err(Error::Schema(format!(
                "relation `{extra}` is interpreted but not declared"
            )));
        }
        Ok(Structure {
            universe_size,
            signature,
            interpretation,
        })
    }

    /// Convenience constructor; the signature is read off the relations.
    pub fn from_relations<S: Into<String>>(
        universe_size: usize,
        relations: impl IntoIterator<Item = (S, NAryRelation)>,
    ) -> Result<Self> {
        let mut signature = Signature::new();
        let mut interpretation = BTreeMap::new();
        for (name, rel) in relations {
            let name = name.into();
            signature.declare(name.clone(), rel.arity())?;
            interpretation.insert(name, rel);
        }
        Structure::new(universe_size, signature, interpretation)
    }

    pub fn universe_size(&self) -> usize {
        self.universe_size
    }

    pub fn signature(&self) -> &Signature {
        &self.signature
    }

    pub fn relation(&self, name: &str) -> Option<&NAryRelation> {
        self.interpretation.get(name)
    }

    pub fn relations(&self) -> impl Iterator<Item = (&str, &NAryRelation)> {
        self.interpretation.iter().map(|(k, v)| (k.as_str(), v))
    }

    /// A copy with `name` added or reinterpreted.
    pub fn with_relation(&self, name: &str, rel: NAryRelation) -> Result<Self> {
        let mut signature = self.signature.clone();
        match signature.arity(name) {
            Some(k) if k != rel.arity() => {
                return Err(Error::ArityMismatch {
                    name: name.to_string(),
                    expected: k,
                    found: rel.arity(),
                })
            }
            Some(_) => {}
            None => signature.declare(name, rel.arity())?,
        }
        if rel.universe_size() != self.universe_size {
            return Err(Error::Schema(format!(
                "relation `{name}` is over a universe of size {}, structure has {}",
                rel.universe_size(),
                self.universe_size
            )));
        }
        let mut interpretation = self.interpretation.clone();
        interpretation.insert(name.to_string(), rel);
        Ok(Structure {
            universe_size: self.universe_size,
            signature,
            interpretation,
        })
    }

    /// The isomorphic copy obtained by renaming element `a` to `perm[a]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        Structure {
            universe_size: self.universe_size,
            signature: self.signature.clone(),
            interpretation: self
                .interpretation
                .iter()
                .map(|(k, v)| (k.clone(), v.permuted(perm)))
                .collect(),
        }
    }

    pub fn to_document(&self) -> StructureDocument {
        StructureDocument {
            universe_size: self.universe_size,
            signature: self.signature.iter().map(|(k, v)| (k.to_string(), v)).collect(),
            relations: self
                .interpretation
                .iter()
                .map(|(k, v)| (k.clone(), RelationDocument::from_relation(v)))
                .collect(),
        }
    }

    pub fn from_document(doc: &StructureDocument) -> Result<Self> {
        if doc.universe_size == 0 {
            return Err(Error::Schema("universe_size must be at least 1".into()));
        }
        let signature = Signature::from_pairs(doc.signature.iter().map(|(k, v)| (k.clone(), *v)))?;
        let mut interpretation = BTreeMap::new();
        for (name, rel) in &doc.relations {
            let declared = signature
                .arity(name)
                .ok_or_else(|| Error::Schema(format!("relation `{name}` is not in the signature")))?;
            if declared != rel.arity {
                return Err(Error::ArityMismatch {
                    name: name.clone(),
                    expected: declared,
                    found: rel.arity,
                });
            }
            interpretation.insert(name.clone(), rel.to_relation(doc.universe_size)?);
        }
        Structure::new(doc.universe_size, signature, interpretation)
    }
}

/// `{ "universe_size": int, "signature": {name: arity}, "relations": {name: {"arity", "tuples"}} }`
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StructureDocument {
    pub universe_size: usize,
    pub signature: BTreeMap<String, usize>,
    pub relations: BTreeMap<String, RelationDocument>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelationDocument {
    pub arity: usize,
    pub tuples: Vec<Vec<usize>>,
}

impl RelationDocument {
    pub fn from_relation(rel: &NAryRelation) -> Self {
        RelationDocument {
            arity: rel.arity(),
            tuples: rel.tuples(),
        }
    }

    pub fn to_relation(&self, universe_size: usize) -> Result<NAryRelation> {
        NAryRelation::from_tuples(self.arity, universe_size, &self.tuples)
    }
}

pub fn load_structure(text: &str) -> Result<Structure> {
    let doc: StructureDocument = serde_json::from_str(text)?;
    Structure::from_document(&doc)
}

pub fn save_structure(structure: &Structure) -> String {
    serde_json::to_string_pretty(&structure.to_document()).expect("structure documents always serialize")
}

pub fn read_structure(path: impl AsRef<Path>) -> Result<Structure> {
    load_structure(&std::fs::read_to_string(path)?)
}

pub fn write_structure(path: impl AsRef<Path>, structure: &Structure) -> Result<()> {
    std::fs::write(path, save_structure(structure) + "\n")?;
    Ok(())
}

pub fn load_relation(text: &str, universe_size: usize) -> Result<NAryRelation> {
    let doc: RelationDocument = serde_json::from_str(text)?;
    doc.to_relation(universe_size)
}
