mod common;

use beth_core::closure::close;
use beth_core::CylindricSpace;
use common::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

#[test]
fn definable_family_matches_formula_enumeration() {
    let mut rng = StdRng::seed_from_u64(8);
    let mut most_atoms = 0;
    for _ in 0..50 {
        let m = rng.gen_range(1..=3);
        let sig = random_signature(&mut rng);
        let structure = random_structure(&mut rng, m, &sig);
        let space = CylindricSpace::new(2, m);
        let closure = close(&structure, &space).unwrap();
        let oracle = PairSpace { m };
        let atoms: Vec<u32> = (0..closure.atom_count())
            .map(|id| to_mask(&oracle, &closure.atom_relation(id)))
            .collect();
        let (enumerated, saturated) = oracle.meanings_to_depth(&structure, 6);
        most_atoms = most_atoms.max(atoms.len());
        assert_eq!(
            all_unions(&atoms),
            enumerated,
            "m = {m}, sig = {sig:?}, saturated = {saturated:?}"
        );
    }
    // guard against a generator that only produces trivial algebras
    assert!(most_atoms >= 6, "largest algebra had {most_atoms} atoms");
}
