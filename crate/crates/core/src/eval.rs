//! Meanings of formulas as subsets of `M^n`.
//!
//! [`evaluate`] works bottom-up with set operations on dense tables:
//! complement, intersection, cylindrification along a coordinate, and
//! reindexing of base relations. [`evaluate_naive`] is an independent
//! assignment-by-assignment satisfaction check used as an oracle.

use std::collections::HashMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::logic::{Formula, Var};
use crate::relation::{cell_count, NAryRelation};
use crate::structure::Structure;

/// The ambient space `M^n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct CylindricSpace {
    dimension: usize,
    universe_size: usize,
}

impl CylindricSpace {
    pub fn new(dimension: usize, universe_size: usize) -> Self {
        assert!(dimension >= 1 && universe_size >= 1, "space needs n ≥ 1 and m ≥ 1");
        CylindricSpace {
            dimension,
            universe_size,
        }
    }

    pub fn for_structure(dimension: usize, structure: &Structure) -> Self {
        Self::new(dimension, structure.universe_size())
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn universe_size(&self) -> usize {
        self.universe_size
    }

    pub fn cells(&self) -> usize {
        cell_count(self.universe_size, self.dimension)
    }

    /// Distance in cell index between tuples differing by one at `coord`.
    pub fn stride(&self, coord: usize) -> usize {
        cell_count(self.universe_size, self.dimension - 1 - coord)
    }

    pub fn coordinate(&self, cell: usize, coord: usize) -> usize {
        (cell / self.stride(coord)) % self.universe_size
    }

    pub fn empty(&self) -> NAryRelation {
        NAryRelation::empty(self.dimension, self.universe_size)
    }

    pub fn full(&self) -> NAryRelation {
        NAryRelation::full(self.dimension, self.universe_size)
    }

    pub fn check(&self, rel: &NAryRelation) -> Result<()> {
        if rel.arity() == self.dimension && rel.universe_size() == self.universe_size {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: format!("arity {} over {}", self.dimension, self.universe_size),
                found: format!("arity {} over {}", rel.arity(), rel.universe_size()),
            })
        }
    }

    fn check_coord(&self, coord: usize) -> Result<()> {
        if coord < self.dimension {
            Ok(())
        } else {
            Err(Error::CoordinateOutOfRange {
                coordinate: coord,
                dimension: self.dimension,
            })
        }
    }

    /// Calls `f` for every cell whose coordinates agree with `fixed`
    /// wherever `fixed` is `Some`.
    pub(crate) fn for_each_extension(&self, fixed: &[Option<usize>], mut f: impl FnMut(usize)) {
        let base: usize = fixed
            .iter()
            .enumerate()
            .filter_map(|(c, v)| v.map(|v| v * self.stride(c)))
            .sum();
        let free: Vec<usize> = (0..self.dimension)
            .filter(|&c| fixed[c].is_none())
            .map(|c| self.stride(c))
            .collect();
        let mut digits = vec![0usize; free.len()];
        let mut offset = 0usize;
        loop {
            f(base + offset);
            let mut pos = free.len();
            loop {
                if pos == 0 {
                    return;
                }
                pos -= 1;
                digits[pos] += 1;
                offset += free[pos];
                if digits[pos] < self.universe_size {
                    break;
                }
                offset -= free[pos] * self.universe_size;
                digits[pos] = 0;
            }
        }
    }
}

pub fn complement(space: &CylindricSpace, x: &NAryRelation) -> Result<NAryRelation> {
    space.check(x)?;
    Ok(x.complement())
}

pub fn intersect(space: &CylindricSpace, x: &NAryRelation, y: &NAryRelation) -> Result<NAryRelation> {
    space.check(x)?;
    space.check(y)?;
    x.intersect(y)
}

pub fn union(space: &CylindricSpace, x: &NAryRelation, y: &NAryRelation) -> Result<NAryRelation> {
    space.check(x)?;
    space.check(y)?;
    x.union(y)
}

/// `C_i X`: tuples that agree with some member of `X` off coordinate `i`.
pub fn cylindrify(space: &CylindricSpace, coord: usize, x: &NAryRelation) -> Result<NAryRelation> {
    space.check(x)?;
    space.check_coord(coord)?;
    Ok(cylindrify_unchecked(space, coord, x))
}

pub(crate) fn cylindrify_unchecked(space: &CylindricSpace, coord: usize, x: &NAryRelation) -> NAryRelation {
    let m = space.universe_size;
    let stride = space.stride(coord);
    let block = stride * m;
    let mut out = space.empty();
    let words = x.words();
    let bit = |c: usize| words[c >> 6] >> (c & 63) & 1 == 1;
    for base in (0..space.cells()).step_by(block) {
        for lo in 0..stride {
            let start = base + lo;
            if (0..m).any(|k| bit(start + k * stride)) {
                for k in 0..m {
                    out.insert_cell(start + k * stride);
                }
            }
        }
    }
    out
}

/// `d_ij`: tuples whose `i`-th and `j`-th coordinates coincide.
pub fn diagonal(space: &CylindricSpace, i: usize, j: usize) -> Result<NAryRelation> {
    space.check_coord(i)?;
    space.check_coord(j)?;
    let mut out = space.empty();
    let mut fixed = vec![None; space.dimension];
    for a in 0..space.universe_size {
        fixed[i] = Some(a);
        fixed[j] = Some(a);
        space.for_each_extension(&fixed, |c| out.insert_cell(c));
    }
    Ok(out)
}

/// Meaning of `P(v_{i_1}, …, v_{i_k})`: cells whose coordinates at the
/// listed variables form a tuple of `rel`. Repeated and permuted variables
/// are handled by reindexing.
pub fn reindexed_atom(space: &CylindricSpace, rel: &NAryRelation, args: &[Var]) -> Result<NAryRelation> {
    if rel.arity() != args.len() {
        return Err(Error::TupleLength {
            arity: rel.arity(),
            found: args.len(),
        });
    }
    if rel.universe_size() != space.universe_size {
        return Err(Error::DimensionMismatch {
            expected: format!("universe {}", space.universe_size),
            found: format!("universe {}", rel.universe_size()),
        });
    }
    for v in args {
        space.check_coord(v.0)?;
    }
    let mut out = space.empty();
    let mut fixed = vec![None; space.dimension];
    'tuples: for cell in rel.iter_cells() {
        fixed.iter_mut().for_each(|f| *f = None);
        let t = rel.tuple_of(cell);
        for (v, &a) in args.iter().zip(&t) {
            match fixed[v.0] {
                Some(b) if b != a => continue 'tuples,
                _ => fixed[v.0] = Some(a),
            }
        }
        space.for_each_extension(&fixed, |c| out.insert_cell(c));
    }
    Ok(out)
}

fn check_formula(structure: &Structure, formula: &Formula, space: &CylindricSpace) -> Result<()> {
    if structure.universe_size() != space.universe_size {
        return Err(Error::DimensionMismatch {
            expected: format!("universe {}", space.universe_size),
            found: format!("universe {}", structure.universe_size()),
        });
    }
    let span = formula.variable_span();
    if span > space.dimension {
        return Err(Error::SpanExceedsDimension {
            span,
            dimension: space.dimension,
        });
    }
    formula.check_signature(structure.signature())
}

/// Compositional evaluator with a memo table keyed on subformula identity.
///
/// The memo survives across calls, so meanings of shared subformulas are
/// reused; call [`Evaluator::retain`] or [`Evaluator::clear`] when the
/// structure changes.
pub struct Evaluator {
    space: CylindricSpace,
    memo: HashMap<*const Formula, (Arc<Formula>, NAryRelation)>,
}

impl Evaluator {
    pub fn new(space: CylindricSpace) -> Self {
        Evaluator {
            space,
            memo: HashMap::new(),
        }
    }

    pub fn space(&self) -> &CylindricSpace {
        &self.space
    }

    pub fn clear(&mut self) {
        self.memo.clear();
    }

    /// Keeps only memo entries whose formula satisfies `keep`.
    pub fn retain(&mut self, mut keep: impl FnMut(&Formula) -> bool) {
        self.memo.retain(|_, (f, _)| keep(f));
    }

    pub fn evaluate(&mut self, structure: &Structure, formula: &Formula) -> Result<NAryRelation> {
        check_formula(structure, formula, &self.space)?;
        Ok(self.node(structure, formula))
    }

    fn child(&mut self, structure: &Structure, f: &Arc<Formula>) -> NAryRelation {
        let key = Arc::as_ptr(f);
        if let Some((_, rel)) = self.memo.get(&key) {
            return rel.clone();
        }
        let rel = self.node(structure, f);
        self.memo.insert(key, (f.clone(), rel.clone()));
        rel
    }

    fn node(&mut self, structure: &Structure, f: &Formula) -> NAryRelation {
        let space = self.space;
        match f {
            Formula::Atom { relation, args } => {
                let rel = structure.relation(relation).expect("signature checked");
                reindexed_atom(&space, rel, args).expect("arity and span checked")
            }
            Formula::Eq(a, b) => diagonal(&space, a.0, b.0).expect("span checked"),
            Formula::Not(p) => {
                let mut rel = self.child(structure, p);
                rel.complement_in_place();
                rel
            }
            Formula::And(p, q) => {
                let mut rel = self.child(structure, p);
                if !rel.is_empty() {
                    rel.intersect_in_place(&self.child(structure, q));
                }
                rel
            }
            Formula::Exists(v, p) => {
                let rel = self.child(structure, p);
                cylindrify_unchecked(&space, v.0, &rel)
            }
        }
    }
}

/// `mn(φ)`: the set of `n`-tuples satisfying `formula`.
pub fn evaluate(structure: &Structure, formula: &Formula, space: &CylindricSpace) -> Result<NAryRelation> {
    Evaluator::new(*space).evaluate(structure, formula)
}

/// Universal closure holds: the meaning is all of `M^n`.
pub fn sentence_holds(structure: &Structure, formula: &Formula, space: &CylindricSpace) -> Result<bool> {
    Ok(evaluate(structure, formula, space)?.is_full())
}

/// Oracle: checks satisfaction separately under each of the `m^n` assignments.
pub fn evaluate_naive(structure: &Structure, formula: &Formula, space: &CylindricSpace) -> Result<NAryRelation> {
    check_formula(structure, formula, space)?;
    let n = space.dimension;
    let m = space.universe_size;
    let mut out = space.empty();
    let mut assignment = vec![0usize; n];
    for cell in 0..space.cells() {
        let mut rest = cell;
        for slot in assignment.iter_mut().rev() {
            *slot = rest % m;
            rest /= m;
        }
        if satisfies(structure, formula, &mut assignment, m) {
            out.insert_cell(cell);
        }
    }
    Ok(out)
}

fn satisfies(structure: &Structure, f: &Formula, assignment: &mut [usize], m: usize) -> bool {
    match f {
        Formula::Atom { relation, args } => {
            let rel = structure.relation(relation).expect("signature checked");
            let values: Vec<usize> = args.iter().map(|v| assignment[v.0]).collect();
            rel.contains(&values)
        }
        Formula::Eq(a, b) => assignment[a.0] == assignment[b.0],
        Formula::Not(p) => !satisfies(structure, p, assignment, m),
        Formula::And(p, q) => satisfies(structure, p, assignment, m) && satisfies(structure, q, assignment, m),
        Formula::Exists(v, p) => {
            let saved = assignment[v.0];
            let mut found = false;
            for a in 0..m {
                assignment[v.0] = a;
                if satisfies(structure, p, assignment, m) {
                    found = true;
                    break;
                }
            }
            assignment[v.0] = saved;
            found
        }
    }
}
