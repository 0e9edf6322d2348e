use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// A variable `v_i` of the n-variable fragment, identified by its index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var(pub usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.0)
    }
}

/// Relation names with their arities.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Signature {
    arities: BTreeMap<String, usize>,
}

impl Signature {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs<I, S>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, usize)>,
        S: Into<String>,
    {
        let mut sig = Signature::new();
        for (name, arity) in pairs {
            sig.declare(name, arity)?;
        }
        Ok(sig)
    }

    /// Adds a relation symbol. Names must be unique and arities positive.
    pub fn declare(&mut self, name: impl Into<String>, arity: usize) -> Result<()> {
        let name = name.into();
        if arity == 0 {
            return Err(Error::InvalidSignature(format!("relation `{name}` has arity 0")));
        }
        if !is_identifier(&name) {
            return Err(Error::InvalidSignature(format!(
                "`{name}` is not a valid relation name"
            )));
        }
        if self.arities.contains_key(&name) {
            return Err(Error::InvalidSignature(format!("relation `{name}` declared twice")));
        }
        self.arities.insert(name, arity);
        Ok(())
    }

    pub fn arity(&self, name: &str) -> Option<usize> {
        self.arities.get(name).copied()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.arities.contains_key(name)
    }

    /// Relations in name order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, usize)> {
        self.arities.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn len(&self) -> usize {
        self.arities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arities.is_empty()
    }

    pub fn max_arity(&self) -> usize {
        self.arities.values().copied().max().unwrap_or(0)
    }
}

fn is_identifier(name: &str) -> bool {
    if crate::logic::parse::var_index(name).is_some() {
        return false;
    }
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// A formula of the n-variable fragment over the primitive connectives.
///
/// Subformulas are reference counted so that large formulas built by the
/// definability engine can share structure; evaluation memoizes on node
/// identity.
#[derive(Clone, Debug)]
pub enum Formula {
    Atom { relation: String, args: Vec<Var> },
    Eq(Var, Var),
    Not(Arc<Formula>),
    And(Arc<Formula>, Arc<Formula>),
    Exists(Var, Arc<Formula>),
}

impl PartialEq for Formula {
    fn eq(&self, other: &Self) -> bool {
        use Formula::*;
        match (self, other) {
            (Atom { relation: r1, args: a1 }, Atom { relation: r2, args: a2 }) => r1 == r2 && a1 == a2,
            (Eq(a, b), Eq(c, d)) => a == c && b == d,
            (Not(p), Not(q)) => Arc::ptr_eq(p, q) || p == q,
            (And(p1, q1), And(p2, q2)) => (Arc::ptr_eq(p1, p2) || p1 == p2) && (Arc::ptr_eq(q1, q2) || q1 == q2),
            (Exists(v, p), Exists(w, q)) => v == w && (Arc::ptr_eq(p, q) || p == q),
            _ => false,
        }
    }
}

impl Eq for Formula {}

impl Formula {
    pub fn atom(relation: impl Into<String>, args: impl IntoIterator<Item = usize>) -> Self {
        Formula::Atom {
            relation: relation.into(),
            args: args.into_iter().map(Var).collect(),
        }
    }

    pub fn eq(i: usize, j: usize) -> Self {
        Formula::Eq(Var(i), Var(j))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(self) -> Self {
        Formula::Not(Arc::new(self))
    }

    pub fn and(self, other: Formula) -> Self {
        Formula::And(Arc::new(self), Arc::new(other))
    }

    pub fn exists(var: usize, body: Formula) -> Self {
        Formula::Exists(Var(var), Arc::new(body))
    }

    /// `~(~p & ~q)`
    pub fn or(self, other: Formula) -> Self {
        self.not().and(other.not()).not()
    }

    /// `~(p & ~q)`
    pub fn implies(self, other: Formula) -> Self {
        self.and(other.not()).not()
    }

    pub fn iff(self, other: Formula) -> Self {
        self.clone().implies(other.clone()).and(other.implies(self))
    }

    /// `~E v ~p`
    pub fn forall(var: usize, body: Formula) -> Self {
        Formula::exists(var, body.not()).not()
    }

    /// Existentially quantifies each variable in turn, innermost last.
    pub fn exists_many(vars: impl IntoIterator<Item = usize>, body: Formula) -> Self {
        let vars: Vec<usize> = vars.into_iter().collect();
        vars.into_iter().rev().fold(body, |acc, v| Formula::exists(v, acc))
    }

    pub fn forall_many(vars: impl IntoIterator<Item = usize>, body: Formula) -> Self {
        let vars: Vec<usize> = vars.into_iter().collect();
        vars.into_iter().rev().fold(body, |acc, v| Formula::forall(v, acc))
    }

    /// `v0 = v0`
    pub fn truth() -> Self {
        Formula::eq(0, 0)
    }

    /// `~v0 = v0`
    pub fn falsity() -> Self {
        Formula::truth().not()
    }

    /// Left-nested conjunction; `truth()` when empty.
    pub fn and_all(items: impl IntoIterator<Item = Formula>) -> Self {
        let mut iter = items.into_iter();
        match iter.next() {
            None => Formula::truth(),
            Some(first) => iter.fold(first, Formula::and),
        }
    }

    /// `~(~p1 & … & ~pk)`; the single item itself, `falsity()` when empty.
    pub fn or_all(items: impl IntoIterator<Item = Formula>) -> Self {
        let mut items: Vec<Formula> = items.into_iter().collect();
        match items.len() {
            0 => Formula::falsity(),
            1 => items.pop().unwrap(),
            _ => Formula::and_all(items.into_iter().map(Formula::not)).not(),
        }
    }

    /// Calls `visit` once per distinct node (shared subformulas are visited once).
    pub fn for_each_node(&self, mut visit: impl FnMut(&Formula)) {
        let mut seen: HashSet<*const Formula> = HashSet::new();
        let mut stack: Vec<&Formula> = vec![self];
        while let Some(node) = stack.pop() {
            visit(node);
            match node {
                Formula::Atom { .. } | Formula::Eq(..) => {}
                Formula::Not(p) | Formula::Exists(_, p) => {
                    if seen.insert(Arc::as_ptr(p)) {
                        stack.push(p);
                    }
                }
                Formula::And(p, q) => {
                    for child in [p, q] {
                        if seen.insert(Arc::as_ptr(child)) {
                            stack.push(child);
                        }
                    }
                }
            }
        }
    }

    /// 1 + the largest variable index occurring free or bound.
    pub fn variable_span(&self) -> usize {
        let mut span = 0;
        self.for_each_node(|node| {
            let top = match node {
                Formula::Atom { args, .. } => args.iter().map(|v| v.0 + 1).max().unwrap_or(0),
                Formula::Eq(a, b) => a.0.max(b.0) + 1,
                Formula::Exists(v, _) => v.0 + 1,
                Formula::Not(_) | Formula::And(..) => 0,
            };
            span = span.max(top);
        });
        span
    }

    /// True iff every relational atom is of the form `P(v0, …, v_{k-1})`.
    /// Equality atoms are unconstrained.
    pub fn is_restricted(&self) -> bool {
        let mut restricted = true;
        self.for_each_node(|node| {
            if let Formula::Atom { args, .. } = node {
                if args.iter().enumerate().any(|(pos, v)| v.0 != pos) {
                    restricted = false;
                }
            }
        });
        restricted
    }

    /// The relational atoms that break restrictedness, in first-seen order.
    pub fn substituted_atoms(&self) -> Vec<Formula> {
        let mut found: Vec<Formula> = Vec::new();
        self.for_each_node(|node| {
            if let Formula::Atom { args, .. } = node {
                if args.iter().enumerate().any(|(pos, v)| v.0 != pos) && !found.contains(node) {
                    found.push(node.clone());
                }
            }
        });
        found
    }

    pub fn mentions(&self, relation: &str) -> bool {
        let mut hit = false;
        self.for_each_node(|node| {
            if let Formula::Atom { relation: r, .. } = node {
                hit |= r == relation;
            }
        });
        hit
    }

    /// Checks every atom against `signature`.
    pub fn check_signature(&self, signature: &Signature) -> Result<()> {
        let mut err = None;
        self.for_each_node(|node| {
            if err.is_some() {
                return;
            }
            if let Formula::Atom { relation, args } = node {
                match signature.arity(relation) {
                    None => err = Some(Error::UnknownRelation(relation.clone())),
                    Some(k) if k != args.len() => {
                        err = Some(Error::ArityMismatch {
                            name: relation.clone(),
                            expected: k,
                            found: args.len(),
                        })
                    }
                    Some(_) => {}
                }
            }
        });
        err.map_or(Ok(()), Err)
    }

    /// Number of distinct nodes.
    pub fn dag_size(&self) -> usize {
        let mut count = 0;
        self.for_each_node(|_| count += 1);
        count
    }
}

/// Renders in the concrete syntax accepted by [`crate::logic::parse`].
impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_formula(self, f)
    }
}

pub fn render(formula: &Formula) -> String {
    formula.to_string()
}

fn write_formula(formula: &Formula, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match formula {
        Formula::Exists(v, body) => {
            write!(f, "E {v} ")?;
            write_formula(body, f)
        }
        Formula::And(l, r) => {
            write_conjunct(l, false, f)?;
            f.write_str(" & ")?;
            write_conjunct(r, true, f)
        }
        _ => write_unary(formula, f),
    }
}

fn write_conjunct(formula: &Formula, right: bool, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match formula {
        Formula::And(..) if !right => write_formula(formula, f),
        Formula::And(..) | Formula::Exists(..) => {
            f.write_str("(")?;
            write_formula(formula, f)?;
            f.write_str(")")
        }
        _ => write_unary(formula, f),
    }
}

fn write_unary(formula: &Formula, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match formula {
        Formula::Atom { relation, args } => {
            write!(f, "{relation}(")?;
            for (k, v) in args.iter().enumerate() {
                if k > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{v}")?;
            }
            f.write_str(")")
        }
        Formula::Eq(a, b) => write!(f, "{a} = {b}"),
        Formula::Not(body) => {
            f.write_str("~")?;
            write_unary(body, f)
        }
        Formula::And(..) | Formula::Exists(..) => {
            f.write_str("(")?;
            write_formula(formula, f)?;
            f.write_str(")")
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn render_examples() {
        assert_eq!(Formula::eq(0, 0).to_string(), "v0 = v0");
        assert_eq!(
            Formula::exists(1, Formula::atom("R", [0, 1, 2])).to_string(),
            "E v1 R(v0, v1, v2)"
        );
        assert_eq!(Formula::eq(0, 1).not().to_string(), "~v0 = v1");
    }

    #[test]
    fn span_examples() {
        assert_eq!(Formula::eq(0, 0).variable_span(), 1);
        assert_eq!(Formula::atom("R", [0, 1, 2]).variable_span(), 3);
        assert_eq!(Formula::exists(2, Formula::eq(0, 2)).variable_span(), 3);
        assert_eq!(Formula::exists(4, Formula::eq(0, 0)).variable_span(), 5);
    }

    #[test]
    fn restricted_examples() {
        assert!(Formula::atom("R", [0, 1, 2]).is_restricted());
        assert!(!Formula::atom("R", [0, 2, 1]).is_restricted());
        assert!(!Formula::atom("S", [1, 0]).is_restricted());
        assert!(Formula::eq(2, 1).and(Formula::atom("S", [0, 1])).is_restricted());
        let tarski = Formula::exists(0, Formula::eq(0, 1).and(Formula::atom("D", [0])));
        assert!(tarski.is_restricted());
    }

    #[test]
    fn signature_rejects_bad_declarations() {
        let mut sig = Signature::new();
        sig.declare("R", 3).unwrap();
        assert!(sig.declare("R", 2).is_err());
        assert!(sig.declare("Z", 0).is_err());
        assert!(sig.declare("1x", 1).is_err());
        assert!(sig.declare("v3", 1).is_err());
        assert_eq!(sig.arity("R"), Some(3));
    }

    #[test]
    fn shared_nodes_visited_once() {
        let leaf = Arc::new(Formula::atom("P", [0]));
        let mut f = Formula::Not(leaf.clone());
        for _ in 0..60 {
            let shared = Arc::new(f);
            f = Formula::And(shared.clone(), shared);
        }
        assert_eq!(f.dag_size(), 62);
        assert_eq!(f.variable_span(), 1);
    }
}
