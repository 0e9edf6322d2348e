//! Brute-force solving of implicit definitions of a unary relation.

use crate::error::{Error, Result};
use crate::eval::{CylindricSpace, Evaluator};
use crate::logic::Formula;
use crate::relation::NAryRelation;
use crate::structure::Structure;

/// A base theory together with axioms `Σ(D)` constraining a new unary
/// symbol `D`.
#[derive(Clone, Debug)]
pub struct ImplicitDefinitionProblem {
    pub theory: Vec<Formula>,
    pub sigma: Vec<Formula>,
    pub target: String,
}

fn short(f: &Formula) -> String {
    let text = f.to_string();
    if text.len() > 120 {
        format!("{}…", &text[..120])
    } else {
        text
    }
}

/// Every unary `D ⊆ M` for which all of `Σ(D)` hold in the expansion of
/// `structure`, ascending by bit value (element `a` weighs `2^a`).
///
/// Fails if some theory axiom does not hold in `structure`.
pub fn solutions_of_implicit_definition(
    problem: &ImplicitDefinitionProblem,
    structure: &Structure,
    space: &CylindricSpace,
) -> Result<Vec<NAryRelation>> {
    let m = structure.universe_size();
    if m > 24 {
        return Err(Error::UnsupportedDimension {
            n: space.dimension(),
            reason: format!("2^{m} candidate relations is beyond brute force"),
        });
    }
    let mut evaluator = Evaluator::new(*space);
    for axiom in &problem.theory {
        if !evaluator.evaluate(structure, axiom)?.is_full() {
            return Err(Error::TheoryNotSatisfied(short(axiom)));
        }
    }
    evaluator.clear();

    let target = problem.target.as_str();
    let mut solutions = Vec::new();
    for mask in 0u64..1 << m {
        let d = NAryRelation::from_cells(1, m, (0..m).filter(|a| mask >> a & 1 == 1));
        let expanded = structure.with_relation(target, d.clone())?;
        let mut holds = true;
        for axiom in &problem.sigma {
            if !evaluator.evaluate(&expanded, axiom)?.is_full() {
                holds = false;
                break;
            }
        }
        // Meanings not involving the target carry over to the next candidate.
        evaluator.retain(|f| !f.mentions(target));
        if holds {
            solutions.push(d);
        }
    }
    Ok(solutions)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::parse;

    #[test]
    fn trivial_sigma_accepts_every_subset() {
        let p = NAryRelation::from_tuples(1, 4, [[1]]).unwrap();
        let s = Structure::from_relations(4, [("P", p)]).unwrap();
        let problem = ImplicitDefinitionProblem {
            theory: vec![],
            sigma: vec![Formula::truth()],
            target: "D".into(),
        };
        let sols = solutions_of_implicit_definition(&problem, &s, &CylindricSpace::new(2, 4)).unwrap();
        assert_eq!(sols.len(), 16);
        assert!(sols[0].is_empty());
        assert_eq!(sols[1].tuples(), vec![vec![0]]);
        assert_eq!(sols[15].count(), 4);
    }

    #[test]
    fn explicit_copy_has_one_solution() {
        let p = NAryRelation::from_tuples(1, 4, [[1], [3]]).unwrap();
        let s = Structure::from_relations(4, [("P", p.clone())]).unwrap();
        let mut sig = s.signature().clone();
        sig.declare("D", 1).unwrap();
        let problem = ImplicitDefinitionProblem {
            theory: vec![],
            sigma: vec![parse("D(v0) <-> P(v0)", &sig).unwrap()],
            target: "D".into(),
        };
        let sols = solutions_of_implicit_definition(&problem, &s, &CylindricSpace::new(1, 4)).unwrap();
        assert_eq!(sols, vec![p]);
    }

    #[test]
    fn unsatisfied_theory_is_an_error() {
        let p = NAryRelation::from_tuples(1, 2, [[1]]).unwrap();
        let s = Structure::from_relations(2, [("P", p)]).unwrap();
        let problem = ImplicitDefinitionProblem {
            theory: vec![Formula::atom("P", [0])],
            sigma: vec![],
            target: "D".into(),
        };
        assert!(matches!(
            solutions_of_implicit_definition(&problem, &s, &CylindricSpace::new(1, 2)),
            Err(Error::TheoryNotSatisfied(_))
        ));
    }
}
