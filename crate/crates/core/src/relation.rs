//! Dense bit tables for subsets of `M^k`.
//!
//! The cell index of `<a_0, …, a_{k-1}>` is `Σ a_i · m^(k-1-i)`: coordinate 0
//! is the most significant digit. Serialization and ordering rely on this.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct NAryRelation {
    arity: usize,
    universe_size: usize,
    len: usize,
    words: Vec<u64>,
}

impl fmt::Debug for NAryRelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NAryRelation")
            .field("arity", &self.arity)
            .field("universe_size", &self.universe_size)
            .field("count", &self.count())
            .finish()
    }
}

pub(crate) fn cell_count(universe_size: usize, arity: usize) -> usize {
    universe_size.pow(arity as u32)
}

impl NAryRelation {
    pub fn empty(arity: usize, universe_size: usize) -> Self {
        assert!(
            arity >= 1 && universe_size >= 1,
            "relations need arity and universe ≥ 1"
        );
        let len = cell_count(universe_size, arity);
        NAryRelation {
            arity,
            universe_size,
            len,
            words: vec![0; len.div_ceil(64)],
        }
    }

    pub fn full(arity: usize, universe_size: usize) -> Self {
        let mut rel = Self::empty(arity, universe_size);
        rel.words.iter_mut().for_each(|w| *w = !0);
        rel.clear_tail();
        rel
    }

    pub fn from_cells(arity: usize, universe_size: usize, cells: impl IntoIterator<Item = usize>) -> Self {
        let mut rel = Self::empty(arity, universe_size);
        for c in cells {
            rel.insert_cell(c);
        }
        rel
    }

    /// Builds a relation from explicit tuples. Duplicates are tolerated.
    pub fn from_tuples<T: AsRef<[usize]>>(
        arity: usize,
        universe_size: usize,
        tuples: impl IntoIterator<Item = T>,
    ) -> Result<Self> {
        if arity == 0 || universe_size == 0 {
            return Err(Error::Schema(format!(
                "relation needs arity ≥ 1 and universe ≥ 1 (got arity {arity}, universe {universe_size})"
            )));
        }
        let mut rel = Self::empty(arity, universe_size);
        for t in tuples {
            let t = t.as_ref();
            let cell = rel.checked_index(t)?;
            rel.insert_cell(cell);
        }
        Ok(rel)
    }

    fn clear_tail(&mut self) {
        let rem = self.len % 64;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn universe_size(&self) -> usize {
        self.universe_size
    }

    /// Number of cells, `m^k`.
    pub fn cells(&self) -> usize {
        self.len
    }

    pub fn checked_index(&self, tuple: &[usize]) -> Result<usize> {
        if tuple.len() != self.arity {
            return Err(Error::TupleLength {
                arity: self.arity,
                found: tuple.len(),
            });
        }
        let mut idx = 0;
        for &a in tuple {
            if a >= self.universe_size {
                return Err(Error::TupleOutOfRange {
                    entry: a,
                    universe_size: self.universe_size,
                });
            }
            idx = idx * self.universe_size + a;
        }
        Ok(idx)
    }

    pub fn index_of(&self, tuple: &[usize]) -> usize {
        debug_assert_eq!(tuple.len(), self.arity);
        tuple.iter().fold(0, |idx, &a| idx * self.universe_size + a)
    }

    pub fn tuple_of(&self, mut cell: usize) -> Vec<usize> {
        let mut t = vec![0; self.arity];
        for slot in t.iter_mut().rev() {
            *slot = cell % self.universe_size;
            cell /= self.universe_size;
        }
        t
    }

    #[inline]
    pub fn contains_cell(&self, cell: usize) -> bool {
        self.words[cell >> 6] >> (cell & 63) & 1 == 1
    }

    pub fn contains(&self, tuple: &[usize]) -> bool {
        self.contains_cell(self.index_of(tuple))
    }

    #[inline]
    pub fn insert_cell(&mut self, cell: usize) {
        debug_assert!(cell < self.len);
        self.words[cell >> 6] |= 1 << (cell & 63);
    }

    #[inline]
    pub fn remove_cell(&mut self, cell: usize) {
        self.words[cell >> 6] &= !(1 << (cell & 63));
    }

    pub fn insert(&mut self, tuple: &[usize]) {
        let c = self.index_of(tuple);
        self.insert_cell(c);
    }

    pub fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn is_full(&self) -> bool {
        self.count() == self.len
    }

    /// Set cells in ascending order.
    pub fn iter_cells(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut bits = w;
            std::iter::from_fn(move || {
                if bits == 0 {
                    return None;
                }
                let b = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(wi * 64 + b)
            })
        })
    }

    /// Member tuples in normative order.
    pub fn tuples(&self) -> Vec<Vec<usize>> {
        self.iter_cells().map(|c| self.tuple_of(c)).collect()
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.arity == other.arity && self.universe_size == other.universe_size
    }

    fn check_shape(&self, other: &Self) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: format!("arity {} over {}", self.arity, self.universe_size),
                found: format!("arity {} over {}", other.arity, other.universe_size),
            })
        }
    }

    pub fn complement(&self) -> Self {
        let mut out = self.clone();
        out.words.iter_mut().for_each(|w| *w = !*w);
        out.clear_tail();
        out
    }

    pub fn intersect(&self, other: &Self) -> Result<Self> {
        self.check_shape(other)?;
        let mut out = self.clone();
        out.words.iter_mut().zip(&other.words).for_each(|(a, b)| *a &= b);
        Ok(out)
    }

    pub fn union(&self, other: &Self) -> Result<Self> {
        self.check_shape(other)?;
        let mut out = self.clone();
        out.words.iter_mut().zip(&other.words).for_each(|(a, b)| *a |= b);
        Ok(out)
    }

    pub fn difference(&self, other: &Self) -> Result<Self> {
        self.check_shape(other)?;
        let mut out = self.clone();
        out.words.iter_mut().zip(&other.words).for_each(|(a, b)| *a &= !b);
        Ok(out)
    }

    pub(crate) fn intersect_in_place(&mut self, other: &Self) {
        debug_assert!(self.same_shape(other));
        self.words.iter_mut().zip(&other.words).for_each(|(a, b)| *a &= b);
    }

    pub(crate) fn complement_in_place(&mut self) {
        self.words.iter_mut().for_each(|w| *w = !*w);
        self.clear_tail();
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.same_shape(other) && self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }

    pub fn is_disjoint(&self, other: &Self) -> bool {
        self.words.iter().zip(&other.words).all(|(a, b)| a & b == 0)
    }

    /// The set of values taken by coordinate `coord` (a unary relation).
    pub fn projection(&self, coord: usize) -> Result<Self> {
        if coord >= self.arity {
            return Err(Error::CoordinateOutOfRange {
                coordinate: coord,
                dimension: self.arity,
            });
        }
        let stride = cell_count(self.universe_size, self.arity - 1 - coord);
        let mut out = Self::empty(1, self.universe_size);
        for c in self.iter_cells() {
            out.insert_cell((c / stride) % self.universe_size);
        }
        Ok(out)
    }

    /// `V_0 × V_1 × …` for unary factors over a common universe.
    pub fn product(factors: &[&NAryRelation]) -> Result<Self> {
        let Some(first) = factors.first() else {
            return Err(Error::Schema("empty product".into()));
        };
        let m = first.universe_size;
        for f in factors {
            if f.arity != 1 || f.universe_size != m {
                return Err(Error::DimensionMismatch {
                    expected: format!("unary over {m}"),
                    found: format!("arity {} over {}", f.arity, f.universe_size),
                });
            }
        }
        let mut out = Self::empty(factors.len(), m);
        let members: Vec<Vec<usize>> = factors.iter().map(|f| f.iter_cells().collect()).collect();
        let mut idx = vec![0usize; factors.len()];
        if members.iter().any(|v| v.is_empty()) {
            return Ok(out);
        }
        'outer: loop {
            let t: Vec<usize> = idx.iter().zip(&members).map(|(&i, v)| v[i]).collect();
            out.insert(&t);
            for pos in (0..idx.len()).rev() {
                idx[pos] += 1;
                if idx[pos] < members[pos].len() {
                    continue 'outer;
                }
                idx[pos] = 0;
            }
            break;
        }
        Ok(out)
    }

    /// Applies a permutation of the universe to every tuple.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let mut out = Self::empty(self.arity, self.universe_size);
        for t in self.tuples() {
            let image: Vec<usize> = t.iter().map(|&a| perm[a]).collect();
            out.insert(&image);
        }
        out
    }

    /// Lifts to arity `dim` by placing this relation on the leading
    /// coordinates and leaving the rest unconstrained.
    pub fn cylinder(&self, dim: usize) -> Result<Self> {
        if dim < self.arity {
            return Err(Error::DimensionMismatch {
                expected: format!("arity ≤ {dim}"),
                found: format!("arity {}", self.arity),
            });
        }
        let tail = cell_count(self.universe_size, dim - self.arity);
        let mut out = Self::empty(dim, self.universe_size);
        for c in self.iter_cells() {
            for lo in 0..tail {
                out.insert_cell(c * tail + lo);
            }
        }
        Ok(out)
    }

    pub(crate) fn words(&self) -> &[u64] {
        &self.words
    }
}
