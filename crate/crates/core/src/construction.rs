//! The counterexample to the weak Beth property for `n`-variable logic.
//!
//! For `n ≥ 3` the model has `2n + 1` elements split into carriers
//! `U_0 = {a0, a1, a2}` and two-element `U_1 … U_{n-1}`. `R` cuts the
//! rectangular hull `T = U_0 × … × U_{n-1}` by a parity rule and `S` is a
//! 3-cycle on `U_0`. The theory pins this model down up to isomorphism,
//! `Σ(D)` forces `D = {a0}`, yet `{a0} × M^{n-1}` is not a union of atoms of
//! the algebra of `n`-variable definable relations.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use crate::automorphism::automorphisms;
use crate::closure::{close, AlgebraClosure};
use crate::error::{Error, Result};
use crate::eval::{evaluate, CylindricSpace, Evaluator};
use crate::implicit::{solutions_of_implicit_definition, ImplicitDefinitionProblem};
use crate::logic::Formula;
use crate::relation::NAryRelation;
use crate::structure::Structure;

pub const REL_R: &str = "R";
pub const REL_S: &str = "S";
pub const REL_D: &str = "D";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ConstructionOptions {
    /// Include the 3-cycle `S` and axiomatize `|U_0| = 3` through it. When
    /// false (only allowed for `n ≥ 4`) the signature is `{R}` and
    /// `|U_0| = 3` is stated directly with four variables.
    pub include_s: bool,
}

impl Default for ConstructionOptions {
    fn default() -> Self {
        ConstructionOptions { include_s: true }
    }
}

fn check_n(n: usize) -> Result<()> {
    if n < 3 {
        return Err(Error::UnsupportedDimension {
            n,
            reason: "the construction needs n ≥ 3".into(),
        });
    }
    Ok(())
}

fn check_options(n: usize, options: ConstructionOptions) -> Result<()> {
    check_n(n)?;
    if !options.include_s && n < 4 {
        return Err(Error::UnsupportedDimension {
            n,
            reason: "|U_0| = 3 needs four variables without S".into(),
        });
    }
    Ok(())
}

#[derive(Clone, Debug)]
pub struct PaperModel {
    pub n: usize,
    pub options: ConstructionOptions,
    pub structure: Structure,
    /// Element names: `a0 a1 a2`, then `b0 b1 c0 c1` at `n = 3` or `u<i>_<k>`
    /// for the `k`-th element of `U_i` otherwise.
    pub labels: BTreeMap<String, usize>,
    /// `U_0 … U_{n-1}` as unary tables.
    pub carriers: Vec<NAryRelation>,
    /// `T = U_0 × … × U_{n-1}`.
    pub hull: NAryRelation,
}

fn carrier_label(n: usize, i: usize, k: usize) -> String {
    match (n, i) {
        (_, 0) => format!("a{k}"),
        (3, 1) => format!("b{k}"),
        (3, 2) => format!("c{k}"),
        _ => format!("u{i}_{k}"),
    }
}

pub fn build_model(n: usize) -> Result<PaperModel> {
    build_model_with(n, ConstructionOptions::default())
}

pub fn build_model_with(n: usize, options: ConstructionOptions) -> Result<PaperModel> {
    check_options(n, options)?;
    let m = 2 * n + 1;
    let mut labels = BTreeMap::new();
    let mut carriers = Vec::with_capacity(n);
    for i in 0..n {
        let members: Vec<usize> = if i == 0 {
            vec![0, 1, 2]
        } else {
            vec![2 * i + 1, 2 * i + 2]
        };
        for (k, &a) in members.iter().enumerate() {
            labels.insert(carrier_label(n, i, k), a);
        }
        carriers.push(NAryRelation::from_cells(1, m, members));
    }
    let factors: Vec<&NAryRelation> = carriers.iter().collect();
    let hull = NAryRelation::product(&factors)?;

    // <s_0, …> ∈ R iff (s_0 = a0 and the U_i-indices sum to even) or
    // (s_0 ∈ {a1, a2} and they sum to odd).
    let mut r = NAryRelation::empty(n, m);
    for cell in hull.iter_cells() {
        let s = hull.tuple_of(cell);
        let parity = (1..n).map(|i| s[i] - (2 * i + 1)).sum::<usize>() % 2;
        if (s[0] == 0) == (parity == 0) {
            r.insert_cell(cell);
        }
    }
    let mut relations = vec![(REL_R, r)];
    if options.include_s {
        relations.push((REL_S, NAryRelation::from_tuples(2, m, [[0, 1], [1, 2], [2, 0]])?));
    }
    Ok(PaperModel {
        n,
        options,
        structure: Structure::from_relations(m, relations)?,
        labels,
        carriers,
        hull,
    })
}

impl PaperModel {
    pub fn universe_size(&self) -> usize {
        self.structure.universe_size()
    }

    pub fn element(&self, label: &str) -> usize {
        self.labels[label]
    }

    pub fn label_of(&self, element: usize) -> String {
        self.labels
            .iter()
            .find(|(_, &a)| a == element)
            .map_or_else(|| element.to_string(), |(k, _)| k.clone())
    }

    pub fn carrier_of(&self, element: usize) -> usize {
        self.carriers
            .iter()
            .position(|c| c.contains_cell(element))
            .expect("carriers partition M")
    }

    pub fn relation_r(&self) -> &NAryRelation {
        self.structure.relation(REL_R).expect("R is always interpreted")
    }

    pub fn space(&self) -> CylindricSpace {
        CylindricSpace::new(self.n, self.universe_size())
    }

    /// The isomorphic copy with element `a` renamed to `perm[a]`.
    pub fn permuted(&self, perm: &[usize]) -> PaperModel {
        PaperModel {
            n: self.n,
            options: self.options,
            structure: self.structure.permuted(perm),
            labels: self.labels.iter().map(|(k, &a)| (k.clone(), perm[a])).collect(),
            carriers: self.carriers.iter().map(|c| c.permuted(perm)).collect(),
            hull: self.hull.permuted(perm),
        }
    }

    /// The same model with `R` reinterpreted.
    pub fn with_r(&self, r: NAryRelation) -> Result<PaperModel> {
        Ok(PaperModel {
            structure: self.structure.with_relation(REL_R, r)?,
            ..self.clone()
        })
    }

    fn set_label(&self, set: &NAryRelation) -> String {
        let names: Vec<String> = set.iter_cells().map(|a| self.label_of(a)).collect();
        format!("{{{}}}", names.join(", "))
    }
}

/// `R(v0, …, v_{n-1})`
pub fn r_atom(n: usize) -> Formula {
    Formula::atom(REL_R, 0..n)
}

/// `U_i(v_i)`: the `i`-th projection of `R`, `∃(all v_j, j ≠ i) R`.
pub fn carrier_formula(n: usize, i: usize) -> Formula {
    Formula::exists_many((0..n).filter(|&j| j != i), r_atom(n))
}

/// `U_i` applied to `v_var`, moved there by Tarski substitution
/// `∃v_i(v_var = v_i ∧ U_i(v_i))` when `var ≠ i`.
pub fn carrier_at(n: usize, i: usize, var: usize) -> Formula {
    if var == i {
        carrier_formula(n, i)
    } else {
        Formula::exists(i, Formula::eq(var, i).and(carrier_formula(n, i)))
    }
}

/// `T = U_0(v0) ∧ … ∧ U_{n-1}(v_{n-1})`
pub fn hull_formula(n: usize) -> Formula {
    Formula::and_all((0..n).map(|i| carrier_formula(n, i)))
}

/// `∃v_i R ↔ ∃v_i(T ∧ ¬R)`
pub fn big_r_conjunct(n: usize, i: usize) -> Formula {
    Formula::exists(i, r_atom(n)).iff(Formula::exists(i, hull_formula(n).and(r_atom(n).not())))
}

pub fn big_r(n: usize) -> Formula {
    Formula::and_all((0..n).map(|i| big_r_conjunct(n, i)))
}

/// A labeled axiom. `literal` records the printed form when the emitted
/// formula departs from it.
#[derive(Clone, Debug)]
pub struct Axiom {
    pub label: String,
    pub formula: Formula,
    pub literal: Option<String>,
}

fn axiom(label: impl Into<String>, formula: Formula) -> Axiom {
    Axiom {
        label: label.into(),
        formula,
        literal: None,
    }
}

fn pairwise_distinct(vars: &[usize]) -> Formula {
    let mut parts = Vec::new();
    for (k, &x) in vars.iter().enumerate() {
        for &y in &vars[k + 1..] {
            parts.push(Formula::eq(x, y).not());
        }
    }
    Formula::and_all(parts)
}

fn all_in_carrier(n: usize, i: usize, vars: &[usize]) -> Formula {
    Formula::and_all(vars.iter().map(|&v| carrier_at(n, i, v)))
}

pub fn build_theory(n: usize) -> Result<Vec<Axiom>> {
    build_theory_with(n, ConstructionOptions::default())
}

pub fn build_theory_with(n: usize, options: ConstructionOptions) -> Result<Vec<Axiom>> {
    check_options(n, options)?;
    let (x, y, z) = (0, 1, 2);
    let mut th = Vec::new();

    th.push(axiom(
        "partition: cover",
        Formula::forall(x, Formula::or_all((0..n).map(|i| carrier_at(n, i, x)))),
    ));
    for i in 0..n {
        for j in 0..n {
            if i != j {
                th.push(axiom(
                    format!("partition: U{i} ∩ U{j} = ∅"),
                    Formula::forall(x, carrier_at(n, i, x).implies(carrier_at(n, j, x).not())),
                ));
            }
        }
    }

    for i in 1..n {
        let at_most = Formula::exists_many(
            [x, y, z],
            pairwise_distinct(&[x, y, z]).and(all_in_carrier(n, i, &[x, y, z])),
        )
        .not();
        let at_least = Formula::exists_many([x, y], pairwise_distinct(&[x, y]).and(all_in_carrier(n, i, &[x, y])));
        th.push(Axiom {
            label: format!("|U{i}| = 2"),
            formula: at_least.and(at_most),
            literal: Some("|U_i| ≤ 2 is printed with x≠y ∧ x≠y ∧ y≠z; emitted as x≠y ∧ x≠z ∧ y≠z".into()),
        });
    }

    if options.include_s {
        let s = |a: usize, b: usize| Formula::atom(REL_S, [a, b]);
        th.push(Axiom {
            label: "S total on U0".into(),
            formula: Formula::forall(x, carrier_at(n, 0, x).implies(Formula::exists(y, s(x, y)))),
            literal: Some("printed as ∀x∃y S(x,y), which fails outside U0; relativized to U0".into()),
        });
        th.push(axiom("S functional", s(x, y).and(s(x, z)).implies(Formula::eq(y, z))));
        th.push(axiom(
            "S irreflexive on U0",
            s(x, y).implies(
                carrier_at(n, 0, x)
                    .and(carrier_at(n, 0, y))
                    .and(Formula::eq(x, y).not()),
            ),
        ));
        th.push(axiom(
            "S is a 3-cycle",
            s(x, y).iff(Formula::exists(z, s(y, z).and(s(z, x)))),
        ));
        th.push(Axiom {
            label: "S connected on U0".into(),
            formula: carrier_at(n, 0, x)
                .and(carrier_at(n, 0, y))
                .implies(s(x, y).or(s(y, x)).or(Formula::eq(x, y))),
            literal: Some("printed as S(x,y) ∨ S(y,x) ∨ x=y, which fails outside U0; relativized to U0".into()),
        });
    } else {
        let w = 3;
        let at_least = Formula::exists_many(
            [x, y, z],
            pairwise_distinct(&[x, y, z]).and(all_in_carrier(n, 0, &[x, y, z])),
        );
        let at_most = Formula::exists_many(
            [x, y, z, w],
            pairwise_distinct(&[x, y, z, w]).and(all_in_carrier(n, 0, &[x, y, z, w])),
        )
        .not();
        th.push(axiom("|U0| = 3", at_least.and(at_most)));
    }

    th.push(axiom("big(R)", big_r(n)));
    Ok(th)
}

pub fn d_atom(var: usize) -> Formula {
    Formula::atom(REL_D, [var])
}

pub fn build_sigma(n: usize) -> Result<Vec<Axiom>> {
    check_n(n)?;
    let x = 0;
    let t = hull_formula(n);
    let off_d = t.clone().and(d_atom(x).not());
    let r = r_atom(n);
    // D(v1) by Tarski substitution, so that every atom keeps its variables in order.
    let d_at_y = Formula::exists(x, Formula::eq(x, 1).and(d_atom(x)));
    Ok(vec![
        axiom(
            "Σ: R constant on T − D (positive)",
            off_d
                .clone()
                .and(r.clone())
                .implies(Formula::forall(x, off_d.clone().implies(r.clone()))),
        ),
        axiom(
            "Σ: R constant on T − D (negative)",
            off_d
                .clone()
                .and(r.clone().not())
                .implies(Formula::forall(x, off_d.implies(r.not()))),
        ),
        axiom("Σ: D ⊆ U0", d_atom(x).implies(carrier_at(n, 0, x))),
        axiom(
            "Σ: |D| = 1",
            Formula::exists(x, d_atom(x)).and(Formula::forall_many(
                [0, 1],
                d_atom(x).and(d_at_y).implies(Formula::eq(0, 1)),
            )),
        ),
    ])
}

pub const SIGMA_CARDINALITY: &str = "Σ: |D| = 1";

pub fn implicit_problem(theory: &[Axiom], sigma: &[Axiom]) -> ImplicitDefinitionProblem {
    ImplicitDefinitionProblem {
        theory: theory.iter().map(|a| a.formula.clone()).collect(),
        sigma: sigma.iter().map(|a| a.formula.clone()).collect(),
        target: REL_D.into(),
    }
}

// ---------------------------------------------------------------------------
// Predicted atom family for n = 3
// ---------------------------------------------------------------------------

/// The binary partitions `Rel_ij` of `U_i × U_j`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum BinaryBlock {
    S,
    SInverse,
    Identity(usize),
    Diversity(usize),
    Product(usize, usize),
}

impl BinaryBlock {
    fn name(self) -> String {
        match self {
            BinaryBlock::S => "S".into(),
            BinaryBlock::SInverse => "S̄".into(),
            BinaryBlock::Identity(i) => format!("id{i}"),
            BinaryBlock::Diversity(i) => format!("di{i}"),
            BinaryBlock::Product(i, j) => format!("U{i}×U{j}"),
        }
    }

    fn contains(self, model: &PaperModel, a: usize, b: usize) -> bool {
        let s = model.structure.relation(REL_S);
        let (ca, cb) = (model.carrier_of(a), model.carrier_of(b));
        match self {
            BinaryBlock::S => s.is_some_and(|s| s.contains(&[a, b])),
            BinaryBlock::SInverse => s.is_some_and(|s| s.contains(&[b, a])),
            BinaryBlock::Identity(i) => ca == i && a == b,
            BinaryBlock::Diversity(i) => ca == i && cb == i && a != b,
            BinaryBlock::Product(i, j) => ca == i && cb == j,
        }
    }
}

pub fn binary_partition(i: usize, j: usize) -> Vec<BinaryBlock> {
    match (i, j) {
        (0, 0) => vec![BinaryBlock::S, BinaryBlock::SInverse, BinaryBlock::Identity(0)],
        (i, j) if i == j => vec![BinaryBlock::Diversity(i), BinaryBlock::Identity(i)],
        (i, j) => vec![BinaryBlock::Product(i, j)],
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Choice {
    R,
    NotR,
    Blocks {
        first: BinaryBlock,
        second: BinaryBlock,
        /// Constraint between coordinates 0 and 2; only set for `(i, j, i)`
        /// shapes in diagonal-refined mode.
        outer: Option<BinaryBlock>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyMode {
    AsWritten,
    DiagonalRefined,
}

impl FamilyMode {
    pub fn name(self) -> &'static str {
        match self {
            FamilyMode::AsWritten => "as-written",
            FamilyMode::DiagonalRefined => "diagonal-refined",
        }
    }
}

#[derive(Clone, Debug)]
pub struct AtomDescriptor {
    pub sorts: [usize; 3],
    pub choice: Choice,
    pub cells: NAryRelation,
}

impl AtomDescriptor {
    pub fn name(&self) -> String {
        let ijk: String = self.sorts.iter().map(|s| s.to_string()).collect();
        match &self.choice {
            Choice::R => format!("X({ijk},r)"),
            Choice::NotR => format!("X({ijk},-r)"),
            Choice::Blocks { first, second, outer } => match outer {
                None => format!("X({ijk},<{},{}>)", first.name(), second.name()),
                Some(o) => format!("X({ijk},<{},{}>;{})", first.name(), second.name(), o.name()),
            },
        }
    }
}

/// Shape of a sort triple `ijk`.
pub fn sort_shape(sorts: [usize; 3]) -> &'static str {
    let [i, j, k] = sorts;
    if i != j && j != k && i != k {
        "permutation"
    } else if i == k && i != j {
        "iji"
    } else {
        "repeated"
    }
}

/// The predicted family `B` of atoms for the `n = 3` model, with cell sets
/// computed from the model. Empty descriptors are kept.
pub fn predicted_atoms(model: &PaperModel, mode: FamilyMode) -> Result<Vec<AtomDescriptor>> {
    if model.n != 3 {
        return Err(Error::UnsupportedDimension {
            n: model.n,
            reason: "the predicted atom family is only described for n = 3".into(),
        });
    }
    let m = model.universe_size();
    let r = model.relation_r();
    let mut out = Vec::new();
    for code in 0..27 {
        let sorts = [code / 9, (code / 3) % 3, code % 3];
        let boxed: Vec<&NAryRelation> = sorts.iter().map(|&s| &model.carriers[s]).collect();
        let cell_box = NAryRelation::product(&boxed)?;
        if sort_shape(sorts) == "permutation" {
            let mut in_r = NAryRelation::empty(3, m);
            for cell in cell_box.iter_cells() {
                let t = cell_box.tuple_of(cell);
                let mut s = [0usize; 3];
                for p in 0..3 {
                    s[sorts[p]] = t[p];
                }
                if r.contains(&s) {
                    in_r.insert_cell(cell);
                }
            }
            let not_r = cell_box.difference(&in_r)?;
            out.push(AtomDescriptor {
                sorts,
                choice: Choice::R,
                cells: in_r,
            });
            out.push(AtomDescriptor {
                sorts,
                choice: Choice::NotR,
                cells: not_r,
            });
            continue;
        }
        let [i, j, k] = sorts;
        let outers: Vec<Option<BinaryBlock>> = if mode == FamilyMode::DiagonalRefined && i == k && i != j {
            binary_partition(i, i).into_iter().map(Some).collect()
        } else {
            vec![None]
        };
        for first in binary_partition(i, j) {
            for second in binary_partition(j, k) {
                for &outer in &outers {
                    let mut cells = NAryRelation::empty(3, m);
                    for cell in cell_box.iter_cells() {
                        let t = cell_box.tuple_of(cell);
                        if first.contains(model, t[0], t[1])
                            && second.contains(model, t[1], t[2])
                            && outer.is_none_or(|o| o.contains(model, t[0], t[2]))
                        {
                            cells.insert_cell(cell);
                        }
                    }
                    out.push(AtomDescriptor {
                        sorts,
                        choice: Choice::Blocks { first, second, outer },
                        cells,
                    });
                }
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct BoxComparison {
    pub sorts: [usize; 3],
    pub shape: &'static str,
    pub predicted: usize,
    pub computed: usize,
    pub agree: bool,
    /// Predicted blocks that are not computed atoms.
    pub unmatched: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct FamilyComparison {
    pub mode: FamilyMode,
    pub computed_atoms: usize,
    pub predicted_blocks: usize,
    pub empty_descriptors: Vec<String>,
    pub agree_outside_iji: bool,
    pub exact_match: bool,
    pub boxes: Vec<BoxComparison>,
}

/// Compares the computed atoms of the `n = 3` model with the predicted
/// family, box by box.
pub fn compare_family(model: &PaperModel, closure: &AlgebraClosure, mode: FamilyMode) -> Result<FamilyComparison> {
    let predicted = predicted_atoms(model, mode)?;
    let empty_descriptors: Vec<String> = predicted
        .iter()
        .filter(|d| d.cells.is_empty())
        .map(|d| d.name())
        .collect();

    let box_of = |cell: usize| -> [usize; 3] {
        let space = closure.space();
        [0, 1, 2].map(|p| model.carrier_of(space.coordinate(cell, p)))
    };
    let mut computed_by_box: BTreeMap<[usize; 3], Vec<Vec<u32>>> = BTreeMap::new();
    for atom in closure.atoms() {
        computed_by_box
            .entry(box_of(atom.cells[0] as usize))
            .or_default()
            .push(atom.cells.clone());
    }

    let mut boxes = Vec::new();
    for code in 0..27 {
        let sorts = [code / 9, (code / 3) % 3, code % 3];
        let computed = computed_by_box.get(&sorts).cloned().unwrap_or_default();
        let mut unmatched = Vec::new();
        let mut count = 0;
        for d in predicted.iter().filter(|d| d.sorts == sorts && !d.cells.is_empty()) {
            count += 1;
            let cells: Vec<u32> = d.cells.iter_cells().map(|c| c as u32).collect();
            if !computed.contains(&cells) {
                unmatched.push(d.name());
            }
        }
        boxes.push(BoxComparison {
            sorts,
            shape: sort_shape(sorts),
            predicted: count,
            computed: computed.len(),
            agree: unmatched.is_empty() && count == computed.len(),
            unmatched,
        });
    }
    let agree_outside_iji = boxes.iter().filter(|b| b.shape != "iji").all(|b| b.agree);
    let exact_match = boxes.iter().all(|b| b.agree) && empty_descriptors.is_empty();
    Ok(FamilyComparison {
        mode,
        computed_atoms: closure.atom_count(),
        predicted_blocks: predicted.len(),
        empty_descriptors,
        agree_outside_iji,
        exact_match,
        boxes,
    })
}

// ---------------------------------------------------------------------------
// Verification
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mutation {
    /// Reinterpret `R` as the whole hull `T`.
    RelationIsHull,
    /// Remove `|D| = 1` from `Σ(D)`.
    DropSigmaCardinality,
}

#[derive(Clone, Copy, Debug)]
pub struct VerifyOptions {
    pub mode: FamilyMode,
    pub construction: ConstructionOptions,
    pub mutation: Option<Mutation>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            mode: FamilyMode::DiagonalRefined,
            construction: ConstructionOptions::default(),
            mutation: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Check {
    pub id: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub n: usize,
    pub checks: Vec<Check>,
    pub atom_comparison: Option<FamilyComparison>,
    pub overall: bool,
}

pub const CHECK_THEORY: &str = "theory-holds";
pub const CHECK_SIGMA: &str = "sigma-unique";
pub const CHECK_NOT_DEFINABLE: &str = "d-not-definable";
pub const CHECK_DICHOTOMY: &str = "domain-dichotomy";
pub const CHECK_RIGIDITY: &str = "rigidity";
pub const CHECK_FAMILY: &str = "atom-family";
pub const CHECK_RESTRICTED: &str = "restricted-axioms";

/// Checks that decide the overall verdict.
pub const DECIDING_CHECKS: [&str; 5] = [
    CHECK_THEORY,
    CHECK_SIGMA,
    CHECK_NOT_DEFINABLE,
    CHECK_DICHOTOMY,
    CHECK_RIGIDITY,
];

pub const SCOPE_NOTE: &str = "Categoricity of Th over all structures is not enumerated; \
the report checks the constructed model, uniqueness of D within it, rigidity of a0 \
under automorphisms, and mutation sensitivity.";

pub fn verify_theorem(n: usize) -> Result<Report> {
    verify_theorem_with(n, VerifyOptions::default())
}

pub fn verify_theorem_with(n: usize, options: VerifyOptions) -> Result<Report> {
    let mut model = build_model_with(n, options.construction)?;
    if options.mutation == Some(Mutation::RelationIsHull) {
        model = model.with_r(model.hull.clone())?;
    }
    verify_model(&model, options)
}

/// Runs every check against `model`. Failures are report entries, not errors.
pub fn verify_model(model: &PaperModel, options: VerifyOptions) -> Result<Report> {
    let n = model.n;
    let space = model.space();
    let theory = build_theory_with(n, model.options)?;
    let mut sigma = build_sigma(n)?;
    if options.mutation == Some(Mutation::DropSigmaCardinality) {
        sigma.retain(|a| a.label != SIGMA_CARDINALITY);
    }
    let a0 = model.element("a0");
    let m = model.universe_size();
    let mut checks = Vec::new();

    // 1. Th holds.
    let mut evaluator = Evaluator::new(space);
    let mut failing = Vec::new();
    for ax in &theory {
        if !evaluator.evaluate(&model.structure, &ax.formula)?.is_full() {
            failing.push(ax.label.clone());
        }
    }
    let mut notes: Vec<String> = Vec::new();
    for note in theory.iter().filter_map(|a| a.literal.clone()) {
        if !notes.contains(&note) {
            notes.push(note);
        }
    }
    checks.push(Check {
        id: CHECK_THEORY.into(),
        pass: failing.is_empty(),
        detail: if failing.is_empty() {
            format!("all {} axioms hold. Notes: {}", theory.len(), notes.join("; "))
        } else {
            format!(
                "{} of {} axioms fail: {}",
                failing.len(),
                theory.len(),
                failing.join(", ")
            )
        },
    });

    // 2. Σ(D) has exactly the solution {a0}.
    let problem = implicit_problem(&theory, &sigma);
    let expected = NAryRelation::from_cells(1, m, [a0]);
    checks.push(
        match solutions_of_implicit_definition(&problem, &model.structure, &space) {
            Ok(solutions) => {
                let names: Vec<String> = solutions.iter().map(|s| model.set_label(s)).collect();
                Check {
                    id: CHECK_SIGMA.into(),
                    pass: solutions == [expected.clone()],
                    detail: format!(
                        "{} of {} unary candidates satisfy Σ(D): [{}]",
                        solutions.len(),
                        1u64 << m,
                        names.join(", ")
                    ),
                }
            }
            Err(e) => Check {
                id: CHECK_SIGMA.into(),
                pass: false,
                detail: format!("not solved: {e}"),
            },
        },
    );

    // 3. mn(D) = {a0} × M^{n-1} is not definable.
    let closure = close(&model.structure, &space)?;
    let mn_d = expected.cylinder(n)?;
    let (definable, _) = closure.is_definable(&mn_d)?;
    checks.push(Check {
        id: CHECK_NOT_DEFINABLE.into(),
        pass: !definable,
        detail: format!(
            "{} atoms over {} cells; {{a0}} × M^{} is {}",
            closure.atom_count(),
            space.cells(),
            n - 1,
            if definable {
                "a union of atoms"
            } else {
                "not a union of atoms"
            }
        ),
    });

    // 4. Every atom's first coordinate contains U0 or avoids it. U_i are
    // taken from their defining formulas, not from the labels.
    let derived: Vec<NAryRelation> = (0..n)
        .map(|i| evaluate(&model.structure, &carrier_at(n, i, 0), &space).and_then(|r| r.projection(0)))
        .collect::<Result<_>>()?;
    let u0 = &derived[0];
    let split: Vec<usize> = closure
        .atoms()
        .iter()
        .filter(|atom| {
            let domain = closure.atom_relation(atom.id).projection(0).expect("dimension ≥ 1");
            !(u0.is_subset(&domain) || u0.is_disjoint(&domain))
        })
        .map(|a| a.id)
        .collect();
    checks.push(Check {
        id: CHECK_DICHOTOMY.into(),
        pass: split.is_empty() && u0.count() == 3,
        detail: format!(
            "U0 = {}; {} of {} atoms have a first projection meeting U0 properly",
            model.set_label(u0),
            split.len(),
            closure.atom_count()
        ),
    });

    // 5. Rigidity of a0.
    checks.push(match automorphisms(&model.structure, &derived) {
        Ok(auts) => {
            let moving = auts.iter().filter(|p| p[a0] != a0).count();
            Check {
                id: CHECK_RIGIDITY.into(),
                pass: moving == 0 && !auts.is_empty(),
                detail: format!(
                    "{} sort-preserving automorphisms, {} move a0. {SCOPE_NOTE}",
                    auts.len(),
                    moving
                ),
            }
        }
        Err(e) => Check {
            id: CHECK_RIGIDITY.into(),
            pass: false,
            detail: format!("derived carriers unusable as sorts: {e}"),
        },
    });

    // 6. Predicted family (n = 3 only).
    let mut atom_comparison = None;
    if n == 3 {
        let as_written = compare_family(model, &closure, FamilyMode::AsWritten)?;
        let refined = compare_family(model, &closure, FamilyMode::DiagonalRefined)?;
        let residual: Vec<String> = as_written
            .boxes
            .iter()
            .filter(|b| !b.agree)
            .map(|b| {
                format!(
                    "{}{}{} ({} predicted, {} computed)",
                    b.sorts[0], b.sorts[1], b.sorts[2], b.predicted, b.computed
                )
            })
            .collect();
        checks.push(Check {
            id: CHECK_FAMILY.into(),
            pass: as_written.agree_outside_iji && refined.exact_match,
            detail: format!(
                "computed {} atoms; as-written family has {} blocks, agreement outside (i,j,i) shapes: {}, \
                 disagreeing boxes: [{}]; diagonal-refined family has {} blocks, exact match: {}",
                closure.atom_count(),
                as_written.predicted_blocks,
                as_written.agree_outside_iji,
                residual.join(", "),
                refined.predicted_blocks,
                refined.exact_match
            ),
        });
        atom_comparison = Some(match options.mode {
            FamilyMode::AsWritten => as_written,
            FamilyMode::DiagonalRefined => refined,
        });
    } else {
        checks.push(Check {
            id: CHECK_FAMILY.into(),
            pass: true,
            detail: format!("not applicable: the predicted family is described for n = 3 only (n = {n})"),
        });
    }

    // 7. Restrictedness of the axioms as emitted.
    let mut unrestricted = Vec::new();
    for ax in theory.iter().chain(&sigma) {
        let atoms = ax.formula.substituted_atoms();
        if !atoms.is_empty() {
            let shown: Vec<String> = atoms.iter().map(|a| a.to_string()).collect();
            unrestricted.push(format!("{} [{}]", ax.label, shown.join(", ")));
        }
    }
    let total = theory.len() + sigma.len();
    checks.push(Check {
        id: CHECK_RESTRICTED.into(),
        pass: unrestricted.is_empty(),
        detail: if unrestricted.is_empty() {
            format!("all {total} axioms are restricted")
        } else {
            format!(
                "{} of {total} axioms are restricted; substituted atoms in: {}",
                total - unrestricted.len(),
                unrestricted.join("; ")
            )
        },
    });

    let overall = checks
        .iter()
        .filter(|c| DECIDING_CHECKS.contains(&c.id.as_str()))
        .all(|c| c.pass);
    Ok(Report {
        n,
        checks,
        atom_comparison,
        overall,
    })
}

impl Report {
    pub fn check(&self, id: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.id == id)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports always serialize")
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "Weak Beth counterexample, n = {} ({} elements)",
            self.n,
            2 * self.n + 1
        );
        let _ = writeln!(out, "Scope: {SCOPE_NOTE}");
        for (k, c) in self.checks.iter().enumerate() {
            let tag = if DECIDING_CHECKS.contains(&c.id.as_str()) {
                if c.pass {
                    "PASS"
                } else {
                    "FAIL"
                }
            } else if c.pass {
                "ok  "
            } else {
                "note"
            };
            let _ = writeln!(out, "  [{tag}] {}. {}: {}", k + 1, c.id, c.detail);
        }
        if let Some(cmp) = &self.atom_comparison {
            let _ = writeln!(
                out,
                "Atom family ({}): {} computed atoms, {} predicted blocks, exact match: {}",
                cmp.mode.name(),
                cmp.computed_atoms,
                cmp.predicted_blocks,
                cmp.exact_match
            );
            for b in cmp.boxes.iter().filter(|b| !b.agree) {
                let _ = writeln!(
                    out,
                    "    box {}{}{} ({}): {} predicted vs {} computed; not atoms: {}",
                    b.sorts[0],
                    b.sorts[1],
                    b.sorts[2],
                    b.shape,
                    b.predicted,
                    b.computed,
                    b.unmatched.join(", ")
                );
            }
            if !cmp.empty_descriptors.is_empty() {
                let _ = writeln!(out, "    empty descriptors: {}", cmp.empty_descriptors.join(", "));
            }
        }
        let _ = writeln!(out, "Overall: {}", if self.overall { "PASS" } else { "FAIL" });
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn model_sizes() {
        let m3 = build_model(3).unwrap();
        assert_eq!(m3.universe_size(), 7);
        assert_eq!(m3.relation_r().count(), 6);
        assert_eq!(m3.hull.count(), 12);
        let m4 = build_model(4).unwrap();
        assert_eq!(m4.universe_size(), 9);
        assert_eq!(m4.hull.count(), 24);
        assert_eq!(m4.relation_r().count(), 12);
        assert!(build_model(2).is_err());
        assert!(build_model_with(3, ConstructionOptions { include_s: false }).is_err());
    }

    #[test]
    fn labels_follow_the_naming_convention() {
        let m = build_model(3).unwrap();
        for (name, id) in [
            ("a0", 0),
            ("a1", 1),
            ("a2", 2),
            ("b0", 3),
            ("b1", 4),
            ("c0", 5),
            ("c1", 6),
        ] {
            assert_eq!(m.element(name), id);
        }
        // X = {u ∈ U0 : <u, b0, c0> ∈ R} = {a0}
        let r = m.relation_r();
        assert!(r.contains(&[0, 3, 5]));
        assert!(!r.contains(&[1, 3, 5]) && !r.contains(&[2, 3, 5]));
        let s = m.structure.relation(REL_S).unwrap();
        assert_eq!(s.tuples(), vec![vec![0, 1], vec![1, 2], vec![2, 0]]);
    }

    #[test]
    fn axioms_fit_in_n_variables() {
        for n in 3..=5 {
            for ax in build_theory(n).unwrap().iter().chain(&build_sigma(n).unwrap()) {
                assert!(ax.formula.variable_span() <= n, "{} at n = {n}", ax.label);
            }
        }
        for ax in build_theory_with(4, ConstructionOptions { include_s: false }).unwrap() {
            assert!(ax.formula.variable_span() <= 4);
        }
    }

    #[test]
    fn family_sizes() {
        let model = build_model(3).unwrap();
        let written = predicted_atoms(&model, FamilyMode::AsWritten).unwrap();
        let expected: usize = 12
            + (0..27)
                .map(|c| [c / 9, (c / 3) % 3, c % 3])
                .filter(|s| sort_shape(*s) != "permutation")
                .map(|[i, j, k]| binary_partition(i, j).len() * binary_partition(j, k).len())
                .sum::<usize>();
        assert_eq!(written.len(), expected);
        let refined = predicted_atoms(&model, FamilyMode::DiagonalRefined).unwrap();
        assert!(refined.len() > written.len());
        assert!(predicted_atoms(&build_model(4).unwrap(), FamilyMode::AsWritten).is_err());
    }
}
