//! Generators and independent oracles shared by the integration tests.
#![allow(dead_code)]

use beth_core::{Formula, NAryRelation, Signature, Structure};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::Rng;

/// Relation names used by random structures. `E` is avoided on purpose so
/// that rendered formulas never depend on the quantifier/relation overlap.
pub const RANDOM_SIGNATURE: [(&str, usize); 3] = [("P", 1), ("Q", 2), ("R", 3)];

pub fn random_relation(rng: &mut StdRng, arity: usize, m: usize) -> NAryRelation {
    let cells = m.pow(arity as u32);
    let density: f64 = rng.gen_range(0.1..0.7);
    NAryRelation::from_cells(arity, m, (0..cells).filter(|_| rng.gen_bool(density)))
}

pub fn random_structure(rng: &mut StdRng, m: usize, signature: &[(&str, usize)]) -> Structure {
    let rels: Vec<(&str, NAryRelation)> = signature
        .iter()
        .map(|&(name, arity)| (name, random_relation(rng, arity, m)))
        .collect();
    Structure::from_relations(m, rels).unwrap()
}

/// A nonempty random sub-signature of [`RANDOM_SIGNATURE`].
pub fn random_signature(rng: &mut StdRng) -> Vec<(&'static str, usize)> {
    loop {
        let picked: Vec<_> = RANDOM_SIGNATURE.iter().copied().filter(|_| rng.gen_bool(0.6)).collect();
        if !picked.is_empty() {
            return picked;
        }
    }
}

pub fn random_atomic(rng: &mut StdRng, structure: &Structure, n: usize) -> Formula {
    let sig: Vec<(String, usize)> = structure.signature().iter().map(|(s, k)| (s.to_string(), k)).collect();
    if sig.is_empty() || rng.gen_bool(0.2) {
        return Formula::eq(rng.gen_range(0..n), rng.gen_range(0..n));
    }
    let (name, arity) = &sig[rng.gen_range(0..sig.len())];
    Formula::atom(name.clone(), (0..*arity).map(|_| rng.gen_range(0..n)))
}

/// Random formula in the primitive connectives plus sugar, nesting depth at
/// most `depth`.
pub fn random_formula(rng: &mut StdRng, structure: &Structure, n: usize, depth: usize) -> Formula {
    if depth == 0 || rng.gen_bool(0.2) {
        return random_atomic(rng, structure, n);
    }
    let d = depth - 1;
    match rng.gen_range(0..8) {
        0 => random_formula(rng, structure, n, d).not(),
        1 | 2 => random_formula(rng, structure, n, d).and(random_formula(rng, structure, n, d)),
        3 | 4 => Formula::exists(rng.gen_range(0..n), random_formula(rng, structure, n, d)),
        5 => random_formula(rng, structure, n, d).or(random_formula(rng, structure, n, d)),
        6 => Formula::forall(rng.gen_range(0..n), random_formula(rng, structure, n, d)),
        _ => random_formula(rng, structure, n, d).implies(random_formula(rng, structure, n, d)),
    }
}

pub fn signature_of(pairs: &[(&str, usize)]) -> Signature {
    Signature::from_pairs(pairs.iter().copied()).unwrap()
}

// ---------------------------------------------------------------------------
// proptest strategies

pub fn arb_atomic(n: usize) -> BoxedStrategy<Formula> {
    let vars = proptest::collection::vec(0..n, 3);
    prop_oneof![
        (0..n, 0..n).prop_map(|(i, j)| Formula::eq(i, j)),
        (0..RANDOM_SIGNATURE.len(), vars).prop_map(|(k, vs)| {
            let (name, arity) = RANDOM_SIGNATURE[k];
            Formula::atom(name, vs[..arity].to_vec())
        }),
    ]
    .boxed()
}

/// Formulas over [`RANDOM_SIGNATURE`] with nesting depth at most `depth`.
pub fn arb_formula(n: usize, depth: u32) -> BoxedStrategy<Formula> {
    arb_atomic(n)
        .prop_recursive(depth, 64, 2, move |inner| {
            prop_oneof![
                inner.clone().prop_map(Formula::not),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| a.and(b)),
                (0..n, inner.clone()).prop_map(|(v, a)| Formula::exists(v, a)),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| a.or(b)),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| a.implies(b)),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| a.iff(b)),
                (0..n, inner).prop_map(|(v, a)| Formula::forall(v, a)),
            ]
        })
        .boxed()
}

pub fn arb_structure(max_m: usize) -> BoxedStrategy<Structure> {
    (1..=max_m)
        .prop_flat_map(|m| {
            let tables = RANDOM_SIGNATURE
                .iter()
                .map(|&(_, k)| proptest::collection::vec(any::<bool>(), m.pow(k as u32)))
                .collect::<Vec<_>>();
            (Just(m), tables)
        })
        .prop_map(|(m, tables)| {
            let rels: Vec<(&str, NAryRelation)> = RANDOM_SIGNATURE
                .iter()
                .zip(tables)
                .map(|(&(name, k), bits)| {
                    (
                        name,
                        NAryRelation::from_cells(k, m, bits.iter().enumerate().filter(|b| *b.1).map(|b| b.0)),
                    )
                })
                .collect();
            Structure::from_relations(m, rels).unwrap()
        })
        .boxed()
}

// ---------------------------------------------------------------------------
// A set-based oracle for n = 2 that shares no code with the library's
// evaluator: a meaning is a bitmask over the m² pairs (a, b), bit a·m + b.

pub struct PairSpace {
    pub m: usize,
}

impl PairSpace {
    pub fn bit(&self, a: usize, b: usize) -> u32 {
        1 << (a * self.m + b)
    }

    pub fn full(&self) -> u32 {
        (1u32 << (self.m * self.m)) - 1
    }

    pub fn exists(&self, coord: usize, x: u32) -> u32 {
        let mut out = 0;
        for a in 0..self.m {
            for b in 0..self.m {
                if x & self.bit(a, b) != 0 {
                    for c in 0..self.m {
                        out |= if coord == 0 { self.bit(c, b) } else { self.bit(a, c) };
                    }
                }
            }
        }
        out
    }

    /// Meanings of every atomic formula in `v0, v1`.
    pub fn atomic_meanings(&self, structure: &Structure) -> Vec<u32> {
        let mut out = Vec::new();
        for (i, j) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            out.push(self.mask(|t| t[i] == t[j]));
        }
        for (_, rel) in structure.relations() {
            let k = rel.arity();
            for choice in 0..1usize << k {
                let vars: Vec<usize> = (0..k).map(|p| choice >> (k - 1 - p) & 1).collect();
                let tuples: Vec<Vec<usize>> = rel.tuples();
                out.push(self.mask(|t| {
                    let probe: Vec<usize> = vars.iter().map(|&v| t[v]).collect();
                    tuples.contains(&probe)
                }));
            }
        }
        out
    }

    pub fn mask(&self, pred: impl Fn([usize; 2]) -> bool) -> u32 {
        let mut out = 0;
        for a in 0..self.m {
            for b in 0..self.m {
                if pred([a, b]) {
                    out |= self.bit(a, b);
                }
            }
        }
        out
    }

    /// Meanings of all formulas of nesting depth at most `depth`, plus the
    /// depth at which the family stopped growing (if it did).
    pub fn meanings_to_depth(&self, structure: &Structure, depth: usize) -> (Vec<u32>, Option<usize>) {
        let mut seen = vec![false; 1 << (self.m * self.m)];
        let mut family: Vec<u32> = Vec::new();
        for x in self.atomic_meanings(structure) {
            if !seen[x as usize] {
                seen[x as usize] = true;
                family.push(x);
            }
        }
        let mut saturated = None;
        for level in 1..=depth {
            let mut next = Vec::new();
            let mut add = |x: u32, next: &mut Vec<u32>| {
                if !seen[x as usize] {
                    seen[x as usize] = true;
                    next.push(x);
                }
            };
            for &x in &family {
                add(!x & self.full(), &mut next);
                add(self.exists(0, x), &mut next);
                add(self.exists(1, x), &mut next);
            }
            for (k, &x) in family.iter().enumerate() {
                for &y in &family[k..] {
                    add(x & y, &mut next);
                }
            }
            if next.is_empty() {
                saturated = Some(level - 1);
                break;
            }
            family.extend(next);
        }
        family.sort_unstable();
        (family, saturated)
    }
}

/// Converts a library relation over `M²` into the oracle's bitmask.
pub fn to_mask(space: &PairSpace, rel: &NAryRelation) -> u32 {
    let mut out = 0;
    for t in rel.tuples() {
        out |= space.bit(t[0], t[1]);
    }
    out
}

/// Every union of the given disjoint masks.
pub fn all_unions(atoms: &[u32]) -> Vec<u32> {
    let mut out: Vec<u32> = (0..1u64 << atoms.len())
        .map(|pick| {
            atoms
                .iter()
                .enumerate()
                .filter(|(k, _)| pick >> k & 1 == 1)
                .fold(0, |acc, (_, a)| acc | a)
        })
        .collect();
    out.sort_unstable();
    out.dedup();
    out
}
