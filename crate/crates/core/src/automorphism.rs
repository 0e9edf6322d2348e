//! Automorphism enumeration by backtracking.
//!
//! Candidate images of an element are restricted to its sort. Passing the
//! whole universe as a single sort gives the unrestricted search over all
//! `m!` permutations.

use crate::error::{Error, Result};
use crate::relation::NAryRelation;
use crate::structure::Structure;

/// All permutations `p` of the universe (`p[a]` is the image of `a`) that map
/// each sort onto itself and preserve every relation exactly. Sorted
/// lexicographically, so the identity comes first.
pub fn automorphisms(structure: &Structure, fixed_sorts: &[NAryRelation]) -> Result<Vec<Vec<usize>>> {
    let m = structure.universe_size();
    let mut sort_of = vec![usize::MAX; m];
    for (k, sort) in fixed_sorts.iter().enumerate() {
        if sort.arity() != 1 || sort.universe_size() != m {
            return Err(Error::SortsNotPartition(format!(
                "sort {k} is not a unary relation over {m} elements"
            )));
        }
        for a in sort.iter_cells() {
            if sort_of[a] != usize::MAX {
                return Err(Error::SortsNotPartition(format!(
                    "element {a} lies in sorts {} and {k}",
                    sort_of[a]
                )));
            }
            sort_of[a] = k;
        }
    }
    if let Some(a) = sort_of.iter().position(|&s| s == usize::MAX) {
        return Err(Error::SortsNotPartition(format!("element {a} is in no sort")));
    }

    let relations: Vec<&NAryRelation> = structure.relations().map(|(_, r)| r).collect();
    let mut search = Search {
        m,
        sort_of,
        relations,
        image: vec![usize::MAX; m],
        used: vec![false; m],
        found: Vec::new(),
    };
    search.extend(0);
    Ok(search.found)
}

/// Unrestricted search over all permutations.
pub fn all_automorphisms(structure: &Structure) -> Vec<Vec<usize>> {
    let m = structure.universe_size();
    let everything = NAryRelation::full(1, m);
    automorphisms(structure, &[everything]).expect("a single full sort is a partition")
}

/// Whether `perm` preserves every relation exactly.
pub fn is_automorphism(structure: &Structure, perm: &[usize]) -> bool {
    structure.relations().all(|(_, r)| &r.permuted(perm) == r)
}

struct Search<'a> {
    m: usize,
    sort_of: Vec<usize>,
    relations: Vec<&'a NAryRelation>,
    image: Vec<usize>,
    used: Vec<bool>,
    found: Vec<Vec<usize>>,
}

impl Search<'_> {
    fn extend(&mut self, a: usize) {
        if a == self.m {
            self.found.push(self.image.clone());
            return;
        }
        for b in 0..self.m {
            if self.used[b] || self.sort_of[b] != self.sort_of[a] {
                continue;
            }
            self.image[a] = b;
            self.used[b] = true;
            if self.consistent(a) {
                self.extend(a + 1);
            }
            self.used[b] = false;
        }
        self.image[a] = usize::MAX;
    }

    /// Checks every tuple over `{0, …, a}` that mentions `a`.
    fn consistent(&self, a: usize) -> bool {
        let mut tuple = Vec::new();
        let mut mapped = Vec::new();
        for rel in &self.relations {
            let k = rel.arity();
            tuple.clear();
            tuple.resize(k, 0);
            mapped.resize(k, 0);
            loop {
                if tuple.contains(&a) {
                    for (slot, &x) in mapped.iter_mut().zip(tuple.iter()) {
                        *slot = self.image[x];
                    }
                    if rel.contains(&tuple) != rel.contains(&mapped) {
                        return false;
                    }
                }
                let mut pos = k;
                loop {
                    if pos == 0 {
                        break;
                    }
                    pos -= 1;
                    tuple[pos] += 1;
                    if tuple[pos] <= a {
                        break;
                    }
                    tuple[pos] = 0;
                }
                if tuple.iter().all(|&x| x == 0) {
                    break;
                }
            }
        }
        true
    }
}
