use std::sync::OnceLock;

use crate::chemgraph::{mol_weight, parse_smiles, Element, MolGraph, H_WEIGHT};

/// A named building block and the atoms it may bond through.
#[derive(Debug, Clone)]
pub struct Fragment {
    pub name: &'static str,
    pub smiles: &'static str,
    pub graph: MolGraph,
    pub attach_atoms: Vec<usize>,
}

impl Fragment {
    fn new(name: &'static str, smiles: &'static str, attach: Attach) -> Fragment {
        let graph = parse_smiles(smiles).expect("library SMILES parse");
        let attach_atoms = match attach {
            Attach::Atom(i) => vec![i],
            Attach::RingWithH => (0..graph.atom_count())
                .filter(|&i| graph.atom(i).ring_member && graph.atom(i).implicit_h > 0)
                .collect(),
        };
        assert!(
            attach_atoms.iter().all(|&i| graph.atom(i).implicit_h > 0),
            "{name}: attachment atom without hydrogen"
        );
        Fragment { name, smiles, graph, attach_atoms }
    }

    /// Weight added when this fragment replaces one hydrogen.
    pub fn weight_increment(&self) -> f64 {
        mol_weight(&self.graph) - 2.0 * H_WEIGHT
    }

    /// Atoms (heavy and hydrogen) added when this fragment replaces one
    /// hydrogen.
    pub fn atom_increment(&self, count_hydrogens: bool) -> usize {
        if count_hydrogens {
            self.graph.total_atom_count() - 2
        } else {
            self.graph.atom_count()
        }
    }
}

enum Attach {
    Atom(usize),
    RingWithH,
}

pub const CYCLIC_NAMES: [&str; 5] = ["cyclohexane", "cyclopentane", "benzene", "toluene", "naphthalene"];
pub const FUNCTIONAL_GROUP_NAMES: [&str; 4] = ["carboxylic_acid", "methyl_ester", "methyl_ketone", "hydroxyl"];

fn library() -> &'static [Fragment] {
    static LIB: OnceLock<Vec<Fragment>> = OnceLock::new();
    LIB.get_or_init(|| {
        vec![
            Fragment::new("cyclohexane", "C1CCCCC1", Attach::RingWithH),
            Fragment::new("cyclopentane", "C1CCCC1", Attach::RingWithH),
            Fragment::new("benzene", "c1ccccc1", Attach::RingWithH),
            Fragment::new("toluene", "Cc1ccccc1", Attach::RingWithH),
            Fragment::new("naphthalene", "c1ccc2ccccc2c1", Attach::RingWithH),
            // carbonyl carbon bonds to the molecule in each acyl group
            Fragment::new("carboxylic_acid", "C(=O)O", Attach::Atom(0)),
            Fragment::new("methyl_ester", "C(=O)OC", Attach::Atom(0)),
            Fragment::new("methyl_ketone", "C(=O)C", Attach::Atom(0)),
            Fragment::new("hydroxyl", "O", Attach::Atom(0)),
        ]
    })
}

pub fn fragment(name: &str) -> Option<&'static Fragment> {
    library().iter().find(|f| f.name == name)
}

/// Linear alkane of `n` carbons bonded through a terminal carbon.
pub fn alkyl_chain(n: usize) -> MolGraph {
    let atoms = vec![(Element::C, false); n];
    let bonds: Vec<_> = (1..n).map(|i| (i - 1, i, crate::chemgraph::BondOrder::Single)).collect();
    MolGraph::from_parts(&atoms, &bonds).expect("alkane chain is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn library_attachment_sites() {
        assert_eq!(fragment("cyclohexane").unwrap().attach_atoms.len(), 6);
        // methyl carbon is not a ring atom
        assert_eq!(fragment("toluene").unwrap().attach_atoms, vec![2, 3, 4, 5, 6]);
        assert_eq!(fragment("naphthalene").unwrap().attach_atoms.len(), 8);
        for name in CYCLIC_NAMES.iter().chain(&FUNCTIONAL_GROUP_NAMES) {
            assert!(fragment(name).is_some(), "{name}");
        }
        assert!(fragment("fluoro").is_none());
    }

    #[test]
    fn chain_weights() {
        let c3 = alkyl_chain(3);
        assert_eq!(c3.total_atom_count(), 11);
        assert!((mol_weight(&c3) - 44.097).abs() < 1e-3);
    }
}
