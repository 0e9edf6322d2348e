//! The atomic algebra of definable `n`-ary relations of a finite structure.
//!
//! The algebra generated by the meanings of all atomic formulas under
//! complement, intersection and the cylindrifications `C_i` is finite, so
//! it is determined by its atoms. We compute them as the coarsest partition
//! of `M^n` that refines every generator and is stable under the `C_i`:
//! for every block `b` and coordinate `i`, each block lies entirely inside
//! or entirely outside `C_i b`. A worklist of `(block, coordinate)`
//! splitters drives the refinement; every block created by a split is
//! (re)queued for every coordinate.
//!
//! Each block carries a witness formula that is extended on every split:
//! the part inside a splitter gets `w ∧ φ`, the rest `w ∧ ¬φ`, where `φ` is
//! the generating atomic formula or `∃v_i w(b)`.

use std::collections::VecDeque;
use std::sync::Arc;

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

use crate::error::{Error, Result};
use crate::eval::{cylindrify_unchecked, diagonal, reindexed_atom, CylindricSpace};
use crate::logic::Formula;
use crate::relation::NAryRelation;
use crate::structure::Structure;

/// One atom of the algebra: a minimal nonempty definable relation.
#[derive(Clone, Debug)]
pub struct Atom {
    pub id: usize,
    /// Member cells in ascending order.
    pub cells: Vec<u32>,
    pub witness: Formula,
}

#[derive(Clone, Debug)]
pub struct AlgebraClosure {
    space: CylindricSpace,
    atom_of: Vec<u32>,
    atoms: Vec<Atom>,
    generators: Vec<Formula>,
}

/// Refinement order controls. The result does not depend on them; they
/// exist so that independence can be tested.
#[derive(Clone, Copy, Debug, Default)]
pub struct CloseOptions {
    /// When set, generators are shuffled and splitters are drawn from the
    /// worklist at random, both from this seed.
    pub shuffle_seed: Option<u64>,
}

/// All atomic formulas over the signature and equality with variables
/// drawn from `v_0 … v_{n-1}`, in a fixed order.
pub fn atomic_formulas(structure: &Structure, dimension: usize) -> Vec<Formula> {
    let mut out = Vec::new();
    for (name, arity) in structure.signature().iter() {
        let total = dimension.pow(arity as u32);
        for code in 0..total {
            let mut args = vec![0usize; arity];
            let mut rest = code;
            for slot in args.iter_mut().rev() {
                *slot = rest % dimension;
                rest /= dimension;
            }
            out.push(Formula::atom(name, args));
        }
    }
    for i in 0..dimension {
        for j in i + 1..dimension {
            out.push(Formula::eq(i, j));
        }
    }
    out
}

struct Block {
    start: usize,
    end: usize,
    marked: usize,
    witness: Arc<Formula>,
}

struct Refiner {
    elems: Vec<u32>,
    pos: Vec<u32>,
    block_of: Vec<u32>,
    blocks: Vec<Block>,
    touched: Vec<u32>,
}

impl Refiner {
    fn new(cells: usize) -> Self {
        Refiner {
            elems: (0..cells as u32).collect(),
            pos: (0..cells as u32).collect(),
            block_of: vec![0; cells],
            blocks: vec![Block {
                start: 0,
                end: cells,
                marked: 0,
                witness: Arc::new(Formula::truth()),
            }],
            touched: Vec::new(),
        }
    }

    /// Moves `cell` into the marked prefix of its block. Each cell may be
    /// marked at most once between calls to `split`.
    fn mark(&mut self, cell: u32) {
        let b = self.block_of[cell as usize] as usize;
        let block = &mut self.blocks[b];
        if block.marked == 0 {
            self.touched.push(b as u32);
        }
        let target = block.start + block.marked;
        block.marked += 1;
        let p = self.pos[cell as usize] as usize;
        let other = self.elems[target];
        self.elems.swap(p, target);
        self.pos[cell as usize] = target as u32;
        self.pos[other as usize] = p as u32;
    }

    /// Splits every touched block into its marked and unmarked parts and
    /// returns the ids of blocks whose content changed.
    fn split(&mut self, by: &Arc<Formula>) -> Vec<usize> {
        let mut changed = Vec::new();
        let negated = Arc::new(Formula::Not(by.clone()));
        for b in std::mem::take(&mut self.touched) {
            let b = b as usize;
            let (start, end, marked) = {
                let blk = &self.blocks[b];
                (blk.start, blk.end, blk.marked)
            };
            self.blocks[b].marked = 0;
            if marked == end - start {
                continue;
            }
            let new_id = self.blocks.len();
            let parent = self.blocks[b].witness.clone();
            self.blocks.push(Block {
                start,
                end: start + marked,
                marked: 0,
                witness: Arc::new(Formula::And(parent.clone(), by.clone())),
            });
            self.blocks[b].start = start + marked;
            self.blocks[b].witness = Arc::new(Formula::And(parent, negated.clone()));
            for &cell in &self.elems[start..start + marked] {
                self.block_of[cell as usize] = new_id as u32;
            }
            changed.push(b);
            changed.push(new_id);
        }
        changed
    }

    fn block_cells(&self, b: usize) -> &[u32] {
        let blk = &self.blocks[b];
        &self.elems[blk.start..blk.end]
    }
}

/// Computes the atoms of the algebra of definable relations of `structure`
/// in dimension `space.dimension()`.
pub fn close(structure: &Structure, space: &CylindricSpace) -> Result<AlgebraClosure> {
    close_with(structure, space, CloseOptions::default())
}

pub fn close_with(structure: &Structure, space: &CylindricSpace, options: CloseOptions) -> Result<AlgebraClosure> {
    if structure.universe_size() != space.universe_size() {
        return Err(Error::DimensionMismatch {
            expected: format!("universe {}", space.universe_size()),
            found: format!("universe {}", structure.universe_size()),
        });
    }
    let n = space.dimension();
    let m = space.universe_size();
    let cells = space.cells();
    if cells > u32::MAX as usize {
        return Err(Error::UnsupportedDimension {
            n,
            reason: format!("{cells} cells exceed the addressable range"),
        });
    }
    let mut rng = options.shuffle_seed.map(StdRng::seed_from_u64);

    let generators = atomic_formulas(structure, n);
    let mut order: Vec<usize> = (0..generators.len()).collect();
    if let Some(rng) = rng.as_mut() {
        order.shuffle(rng);
    }

    let mut refiner = Refiner::new(cells);
    for &g in &order {
        let formula = &generators[g];
        let meaning = generator_meaning(structure, space, formula)?;
        if meaning.is_empty() || meaning.is_full() {
            continue;
        }
        for c in meaning.iter_cells() {
            refiner.mark(c as u32);
        }
        refiner.split(&Arc::new(formula.clone()));
    }

    let mut queued: Vec<Vec<bool>> = Vec::new();
    let mut worklist: VecDeque<(usize, usize)> = VecDeque::new();
    let enqueue = |b: usize, queued: &mut Vec<Vec<bool>>, worklist: &mut VecDeque<(usize, usize)>| {
        if queued.len() <= b {
            queued.resize(b + 1, vec![false; n]);
        }
        for (i, seen) in queued[b].iter_mut().enumerate() {
            if !*seen {
                *seen = true;
                worklist.push_back((b, i));
            }
        }
    };
    for b in 0..refiner.blocks.len() {
        enqueue(b, &mut queued, &mut worklist);
    }

    // Marks lines (cells with coordinate i zeroed) already visited for the
    // current splitter.
    let mut line_stamp: Vec<u32> = vec![u32::MAX; cells];
    let mut round: u32 = 0;
    let mut lines: Vec<usize> = Vec::new();

    loop {
        let next = match rng.as_mut() {
            Some(rng) if !worklist.is_empty() => {
                let k = rng.gen_range(0..worklist.len());
                worklist.swap_remove_back(k)
            }
            _ => worklist.pop_front(),
        };
        let Some((b, i)) = next else { break };
        queued[b][i] = false;

        let stride = space.stride(i);
        lines.clear();
        for &cell in refiner.block_cells(b) {
            let cell = cell as usize;
            let line = cell - ((cell / stride) % m) * stride;
            if line_stamp[line] != round {
                line_stamp[line] = round;
                lines.push(line);
            }
        }
        round = round.wrapping_add(1);
        if round == u32::MAX {
            line_stamp.iter_mut().for_each(|s| *s = u32::MAX);
            round = 0;
        }
        for &line in &lines {
            for k in 0..m {
                refiner.mark((line + k * stride) as u32);
            }
        }
        let splitter = Arc::new(Formula::Exists(crate::logic::Var(i), refiner.blocks[b].witness.clone()));
        for changed in refiner.split(&splitter) {
            enqueue(changed, &mut queued, &mut worklist);
        }
    }

    Ok(finish(space, refiner, generators))
}

fn generator_meaning(structure: &Structure, space: &CylindricSpace, formula: &Formula) -> Result<NAryRelation> {
    match formula {
        Formula::Atom { relation, args } => {
            let rel = structure
                .relation(relation)
                .ok_or_else(|| Error::UnknownRelation(relation.clone()))?;
            reindexed_atom(space, rel, args)
        }
        Formula::Eq(a, b) => diagonal(space, a.0, b.0),
        _ => unreachable!("generators are atomic"),
    }
}

/// Renumbers atoms by their least cell so the result is independent of
/// refinement order.
fn finish(space: &CylindricSpace, refiner: Refiner, generators: Vec<Formula>) -> AlgebraClosure {
    let mut live: Vec<(u32, usize)> = (0..refiner.blocks.len())
        .filter(|&b| refiner.blocks[b].end > refiner.blocks[b].start)
        .map(|b| (*refiner.block_cells(b).iter().min().unwrap(), b))
        .collect();
    live.sort_unstable();
    let mut atom_of = vec![0u32; space.cells()];
    let atoms = live
        .into_iter()
        .enumerate()
        .map(|(id, (_, b))| {
            let mut cells = refiner.block_cells(b).to_vec();
            cells.sort_unstable();
            for &c in &cells {
                atom_of[c as usize] = id as u32;
            }
            Atom {
                id,
                cells,
                witness: (*refiner.blocks[b].witness).clone(),
            }
        })
        .collect();
    AlgebraClosure {
        space: *space,
        atom_of,
        atoms,
        generators,
    }
}

impl AlgebraClosure {
    pub fn space(&self) -> &CylindricSpace {
        &self.space
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    /// Atom id for every cell of `M^n`.
    pub fn atom_of(&self) -> &[u32] {
        &self.atom_of
    }

    pub fn atom_containing(&self, cell: usize) -> usize {
        self.atom_of[cell] as usize
    }

    /// The atomic formulas whose meanings generate the algebra.
    pub fn generators(&self) -> &[Formula] {
        &self.generators
    }

    pub fn atom_relation(&self, id: usize) -> NAryRelation {
        NAryRelation::from_cells(
            self.space.dimension(),
            self.space.universe_size(),
            self.atoms[id].cells.iter().map(|&c| c as usize),
        )
    }

    /// Ids of the atoms meeting `x`, or `None` if `x` is not a union of atoms.
    pub fn decompose(&self, x: &NAryRelation) -> Result<Option<Vec<usize>>> {
        self.space.check(x)?;
        let mut hits = vec![0usize; self.atoms.len()];
        for c in x.iter_cells() {
            hits[self.atom_of[c] as usize] += 1;
        }
        let mut ids = Vec::new();
        for (id, &h) in hits.iter().enumerate() {
            if h == 0 {
                continue;
            }
            if h != self.atoms[id].cells.len() {
                return Ok(None);
            }
            ids.push(id);
        }
        Ok(Some(ids))
    }

    /// Whether `x` is definable, with a witness formula when it is.
    pub fn is_definable(&self, x: &NAryRelation) -> Result<(bool, Option<Formula>)> {
        Ok(match self.decompose(x)? {
            None => (false, None),
            Some(ids) => (
                true,
                Some(Formula::or_all(
                    ids.into_iter().map(|id| self.atoms[id].witness.clone()),
                )),
            ),
        })
    }

    /// Classes of elements that occur together at coordinate 0 of some atom.
    /// A set `V` has `V × M^{n-1}` definable iff it is a union of classes.
    pub fn unary_classes(&self) -> Vec<NAryRelation> {
        let m = self.space.universe_size();
        let stride = self.space.stride(0);
        let mut parent: Vec<usize> = (0..m).collect();
        fn root(parent: &mut [usize], mut a: usize) -> usize {
            while parent[a] != a {
                parent[a] = parent[parent[a]];
                a = parent[a];
            }
            a
        }
        for atom in &self.atoms {
            let first = atom.cells[0] as usize / stride;
            for &c in &atom.cells[1..] {
                let a = root(&mut parent, first);
                let b = root(&mut parent, c as usize / stride);
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
        let mut classes: Vec<NAryRelation> = Vec::new();
        let mut class_of_root = vec![usize::MAX; m];
        for a in 0..m {
            let r = root(&mut parent, a);
            if class_of_root[r] == usize::MAX {
                class_of_root[r] = classes.len();
                classes.push(NAryRelation::empty(1, m));
            }
            classes[class_of_root[r]].insert_cell(a);
        }
        classes
    }

    /// Every `V ⊆ M` with `V × M^{n-1}` definable, ascending by bit value.
    pub fn definable_unary_relations(&self) -> Vec<NAryRelation> {
        let m = self.space.universe_size();
        let classes = self.unary_classes();
        let masks: Vec<u64> = classes
            .iter()
            .map(|c| c.iter_cells().map(|a| 1u64 << a).sum())
            .collect();
        let mut values: Vec<u64> = (0u64..1 << classes.len())
            .map(|pick| {
                masks
                    .iter()
                    .enumerate()
                    .filter(|(k, _)| pick >> k & 1 == 1)
                    .map(|(_, m)| m)
                    .sum()
            })
            .collect();
        values.sort_unstable();
        values
            .into_iter()
            .map(|v| NAryRelation::from_cells(1, m, (0..m).filter(|a| v >> a & 1 == 1)))
            .collect()
    }

    /// Atom report document.
    pub fn report(&self) -> AtomReport {
        AtomReport {
            n: self.space.dimension(),
            universe_size: self.space.universe_size(),
            atom_count: self.atoms.len(),
            atoms: self
                .atoms
                .iter()
                .map(|a| {
                    let rel = NAryRelation::empty(self.space.dimension(), self.space.universe_size());
                    AtomEntry {
                        id: a.id,
                        size: a.cells.len(),
                        witness: a.witness.to_string(),
                        tuples: a.cells.iter().map(|&c| rel.tuple_of(c as usize)).collect(),
                    }
                })
                .collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomReport {
    pub n: usize,
    pub universe_size: usize,
    pub atom_count: usize,
    pub atoms: Vec<AtomEntry>,
}

#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomEntry {
    pub id: usize,
    pub size: usize,
    pub witness: String,
    pub tuples: Vec<Vec<usize>>,
}

/// Whether `blocks` partition `M^n`, refine every generator, and are
/// stable under every cylindrification.
pub fn is_stable_partition(space: &CylindricSpace, blocks: &[NAryRelation], generators: &[NAryRelation]) -> bool {
    let mut owner = vec![usize::MAX; space.cells()];
    for (k, b) in blocks.iter().enumerate() {
        if b.is_empty() {
            return false;
        }
        for c in b.iter_cells() {
            if owner[c] != usize::MAX {
                return false;
            }
            owner[c] = k;
        }
    }
    if owner.contains(&usize::MAX) {
        return false;
    }
    let is_union = |x: &NAryRelation| {
        let mut hits = vec![0usize; blocks.len()];
        for c in x.iter_cells() {
            hits[owner[c]] += 1;
        }
        hits.iter().zip(blocks).all(|(&h, b)| h == 0 || h == b.count())
    };
    generators.iter().all(is_union)
        && blocks
            .iter()
            .all(|b| (0..space.dimension()).all(|i| is_union(&cylindrify_unchecked(space, i, b))))
}
