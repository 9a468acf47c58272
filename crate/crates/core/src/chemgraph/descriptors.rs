use std::collections::VecDeque;

use super::{BondOrder, Element, MolGraph, H_WEIGHT};

/// Element-set category of a molecule, named by its nonzero elements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Category {
    HC,
    HCO,
    HCF,
    CF,
    HCOF,
    Other,
}

impl Category {
    pub fn label(self) -> &'static str {
        match self {
            Category::HC => "H/C",
            Category::HCO => "H/C/O",
            Category::HCF => "H/C/F",
            Category::CF => "C/F",
            Category::HCOF => "H/C/O/F",
            Category::Other => "other",
        }
    }

    pub fn is_allowed(self) -> bool {
        self != Category::Other
    }
}

impl std::fmt::Display for Category {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Composition {
    pub carbon: usize,
    pub hydrogen: usize,
    pub oxygen: usize,
    pub fluorine: usize,
    pub category: Category,
}

pub fn composition(mol: &MolGraph) -> Composition {
    let count = |e: Element| mol.atoms().iter().filter(|a| a.element == e).count();
    let (carbon, oxygen, fluorine) = (count(Element::C), count(Element::O), count(Element::F));
    let hydrogen = mol.implicit_h_total();
    let category = match (hydrogen > 0, carbon > 0, oxygen > 0, fluorine > 0) {
        (true, true, false, false) => Category::HC,
        (true, true, true, false) => Category::HCO,
        (true, true, false, true) => Category::HCF,
        (false, true, false, true) => Category::CF,
        (true, true, true, true) => Category::HCOF,
        _ => Category::Other,
    };
    Composition {
        carbon,
        hydrogen,
        oxygen,
        fluorine,
        category,
    }
}

/// Molecular weight in amu including implicit hydrogens.
pub fn mol_weight(mol: &MolGraph) -> f64 {
    let heavy: f64 = mol.atoms().iter().map(|a| a.element.weight()).sum();
    heavy + mol.implicit_h_total() as f64 * H_WEIGHT
}

/// Column names of [`static_descriptors`], in output order.
pub const DESCRIPTOR_NAMES: [&str; 12] = [
    "mol_weight",
    "count_C",
    "count_H",
    "count_O",
    "count_F",
    "heavy_atoms",
    "rings",
    "aromatic_atoms",
    "branch_index",
    "longest_chain",
    "hbond_donors",
    "rotatable_bonds",
];

/// Graph-only descriptor vector in [`DESCRIPTOR_NAMES`] order.
///
/// `branch_index` counts heavy atoms of degree >= 3, `longest_chain` is the
/// topological diameter in atoms, `hbond_donors` counts O-H oxygens and
/// `rotatable_bonds` counts acyclic single bonds between non-terminal atoms.
pub fn static_descriptors(mol: &MolGraph) -> Vec<f64> {
    let comp = composition(mol);
    let n = mol.atom_count();
    let aromatic = mol.atoms().iter().filter(|a| a.aromatic).count();
    let branch = (0..n).filter(|&i| mol.degree(i) >= 3).count();
    let donors = mol
        .atoms()
        .iter()
        .filter(|a| a.element == Element::O && a.implicit_h > 0)
        .count();
    let rotatable = mol
        .bonds()
        .iter()
        .filter(|b| {
            b.order == BondOrder::Single
                && !(mol.atom(b.a).ring_member && mol.atom(b.b).ring_member && in_same_ring(mol, b.a, b.b))
                && mol.degree(b.a) >= 2
                && mol.degree(b.b) >= 2
        })
        .count();
    vec![
        mol_weight(mol),
        comp.carbon as f64,
        comp.hydrogen as f64,
        comp.oxygen as f64,
        comp.fluorine as f64,
        n as f64,
        mol.ring_count() as f64,
        aromatic as f64,
        branch as f64,
        diameter(mol) as f64 + 1.0,
        donors as f64,
        rotatable as f64,
    ]
}

/// A bond between two ring atoms is a ring bond unless removing it
/// disconnects its endpoints.
fn in_same_ring(mol: &MolGraph, a: usize, b: usize) -> bool {
    let mut seen = vec![false; mol.atom_count()];
    let mut stack = vec![a];
    seen[a] = true;
    while let Some(u) = stack.pop() {
        for &(v, _) in mol.neighbors(u) {
            if (u == a && v == b) || (u == b && v == a) {
                continue;
            }
            if v == b {
                return true;
            }
            if !seen[v] {
                seen[v] = true;
                stack.push(v);
            }
        }
    }
    false
}

fn diameter(mol: &MolGraph) -> usize {
    let n = mol.atom_count();
    let mut best = 0;
    let mut dist = vec![usize::MAX; n];
    for s in 0..n {
        dist.iter_mut().for_each(|d| *d = usize::MAX);
        dist[s] = 0;
        let mut q = VecDeque::from([s]);
        while let Some(u) = q.pop_front() {
            best = best.max(dist[u]);
            for &(v, _) in mol.neighbors(u) {
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    q.push_back(v);
                }
            }
        }
    }
    best
}
