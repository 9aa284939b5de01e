//! Atoms with stable identities.
//!
//! Atom sets of flow and base polytopes can be exponentially large, so atoms are
//! never indexed densely. Instead every point an oracle returns is interned by the
//! canonical bit pattern of its coordinates, and the same point found again later
//! maps to the same [`AtomId`].

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct AtomId(pub u64);

impl fmt::Display for AtomId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Clone, Debug)]
pub struct Atom {
    pub id: AtomId,
    pub point: Arc<[f64]>,
}

impl Atom {
    pub fn dim(&self) -> usize {
        self.point.len()
    }
}

impl PartialEq for Atom {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id
    }
}

/// Interning table for atoms of one problem.
#[derive(Default, Debug, Clone)]
pub struct AtomStore {
    ids: HashMap<Vec<u64>, AtomId>,
    atoms: Vec<Atom>,
    dim: Option<usize>,
}

fn canonical_key(point: &[f64]) -> Vec<u64> {
    // -0.0 and 0.0 must intern to the same atom
    point
        .iter()
        .map(|&v| if v == 0.0 { 0u64 } else { v.to_bits() })
        .collect()
}

impl AtomStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns the atom for `point`, allocating a fresh id on first sight.
    ///
    /// Panics if `point` has a different dimension than previously interned atoms.
    pub fn intern(&mut self, point: &[f64]) -> Atom {
        match self.dim {
            Some(d) => assert_eq!(d, point.len(), "atom dimension mismatch"),
            None => self.dim = Some(point.len()),
        }
        let key = canonical_key(point);
        if let Some(id) = self.ids.get(&key) {
            return self.atoms[id.0 as usize].clone();
        }
        let id = AtomId(self.atoms.len() as u64);
        let atom = Atom {
            id,
            point: point.iter().map(|&v| if v == 0.0 { 0.0 } else { v }).collect(),
        };
        self.ids.insert(key, id);
        self.atoms.push(atom.clone());
        atom
    }

    pub fn get(&self, id: AtomId) -> Option<&Atom> {
        self.atoms.get(id.0 as usize)
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }
}
