//! Hydrogen-implicit molecular graphs over the C/O/F element set.
//!
//! A [`MolGraph`] is always valid: connected, free of self-loops and parallel
//! bonds, and every atom has its valence exactly satisfied by bonds plus
//! implicit hydrogens. All constructors funnel through
//! [`MolGraph::from_parts`], which performs ring perception and validation.

mod canon;
mod descriptors;
mod fingerprint;
mod iso;
mod smiles;

pub use canon::canonical_ranks;
pub use descriptors::{composition, mol_weight, static_descriptors, Category, Composition, DESCRIPTOR_NAMES};
pub use fingerprint::{bit_similarity, morgan_fingerprint, similarity, Fingerprint, SimilarityMetric};
pub use iso::is_isomorphic;
pub use smiles::{parse_smiles, read_smiles_lines, to_smiles};

use thiserror::Error;

/// Standard atomic weight of hydrogen in amu.
pub const H_WEIGHT: f64 = 1.008;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ChemError {
    #[error("empty SMILES string")]
    Empty,
    #[error("unsupported token {token:?} at position {pos}")]
    UnsupportedToken { pos: usize, token: String },
    #[error("unsupported element {symbol:?} at position {pos}")]
    UnsupportedElement { pos: usize, symbol: String },
    #[error("valence exceeded at atom {atom} ({element})")]
    ValenceError { atom: usize, element: Element },
    #[error("ring closure {0} never closed")]
    UnclosedRing(u32),
    #[error("unbalanced parenthesis")]
    UnbalancedParenthesis,
    #[error("molecule is not connected")]
    Disconnected,
    #[error("bond from atom {0} to itself")]
    SelfLoop(usize),
    #[error("duplicate bond between atoms {0} and {1}")]
    DuplicateBond(usize, usize),
    #[error("atom index {0} out of range")]
    AtomIndex(usize),
    #[error("invalid aromatic system at atom {0}")]
    InvalidAromaticity(usize),
    #[error("atom {0} has no hydrogen to replace")]
    NoHydrogenAtSite(usize),
    #[error("fingerprint width {0} must be a power of two >= 64")]
    InvalidWidth(usize),
    #[error("fingerprint widths differ ({0} vs {1})")]
    WidthMismatch(usize, usize),
    #[error("malformed fingerprint hex string")]
    InvalidHex,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Element {
    C,
    O,
    F,
}

impl Element {
    pub fn valence(self) -> u8 {
        match self {
            Element::C => 4,
            Element::O => 2,
            Element::F => 1,
        }
    }

    pub fn weight(self) -> f64 {
        match self {
            Element::C => 12.011,
            Element::O => 15.999,
            Element::F => 18.998,
        }
    }

    pub fn atomic_number(self) -> u8 {
        match self {
            Element::C => 6,
            Element::O => 8,
            Element::F => 9,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Element::C => "C",
            Element::O => "O",
            Element::F => "F",
        }
    }
}

impl std::fmt::Display for Element {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.symbol())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BondOrder {
    Single,
    Double,
    Triple,
    Aromatic,
}

impl BondOrder {
    /// Stable small-integer code used by hashing and canonical ranking.
    pub fn code(self) -> u8 {
        match self {
            BondOrder::Single => 1,
            BondOrder::Double => 2,
            BondOrder::Triple => 3,
            BondOrder::Aromatic => 4,
        }
    }

    fn integral_order(self) -> u8 {
        match self {
            BondOrder::Single => 1,
            BondOrder::Double => 2,
            BondOrder::Triple => 3,
            BondOrder::Aromatic => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Atom {
    pub element: Element,
    pub aromatic: bool,
    pub ring_member: bool,
    pub implicit_h: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Bond {
    pub a: usize,
    pub b: usize,
    pub order: BondOrder,
}

impl Bond {
    pub fn other(&self, atom: usize) -> usize {
        if self.a == atom {
            self.b
        } else {
            self.a
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MolGraph {
    atoms: Vec<Atom>,
    bonds: Vec<Bond>,
    // (neighbor, bond index) per atom
    adjacency: Vec<Vec<(usize, usize)>>,
}

impl MolGraph {
    /// Builds and validates a graph from heavy atoms and bonds. Implicit
    /// hydrogens and ring membership are derived.
    ///
    /// Aromatic atoms must sit in rings and carry at least two aromatic
    /// bonds. An aromatic carbon donates one extra valence unit to its
    /// aromatic system (benzene CH: 2 + 1 + H = 4, ring-fusion C: 3 + 1 = 4);
    /// an aromatic oxygen donates none (furan-type O).
    pub fn from_parts(
        atoms: &[(Element, bool)],
        bonds: &[(usize, usize, BondOrder)],
    ) -> Result<MolGraph, ChemError> {
        if atoms.is_empty() {
            return Err(ChemError::Empty);
        }
        let n = atoms.len();
        let mut adjacency = vec![Vec::new(); n];
        let mut bond_list = Vec::with_capacity(bonds.len());
        for (idx, &(a, b, order)) in bonds.iter().enumerate() {
            if a >= n {
                return Err(ChemError::AtomIndex(a));
            }
            if b >= n {
                return Err(ChemError::AtomIndex(b));
            }
            if a == b {
                return Err(ChemError::SelfLoop(a));
            }
            if adjacency[a].iter().any(|&(nb, _)| nb == b) {
                return Err(ChemError::DuplicateBond(a.min(b), a.max(b)));
            }
            adjacency[a].push((b, idx));
            adjacency[b].push((a, idx));
            bond_list.push(Bond { a, b, order });
        }

        if !is_connected(&adjacency) {
            return Err(ChemError::Disconnected);
        }

        let ring_bond = ring_bonds(&adjacency, bond_list.len());
        let mut out = Vec::with_capacity(n);
        for (i, &(element, aromatic)) in atoms.iter().enumerate() {
            let ring_member = adjacency[i].iter().any(|&(_, bi)| ring_bond[bi]);
            let mut aromatic_bonds = 0u8;
            let mut used = 0u8;
            for &(nb, bi) in &adjacency[i] {
                let bond = bond_list[bi];
                if bond.order == BondOrder::Aromatic {
                    if !aromatic || !atoms[nb].1 || !ring_bond[bi] {
                        return Err(ChemError::InvalidAromaticity(i));
                    }
                    aromatic_bonds += 1;
                }
                used += bond.order.integral_order();
            }
            if aromatic {
                if !ring_member || aromatic_bonds < 2 {
                    return Err(ChemError::InvalidAromaticity(i));
                }
                if element == Element::C {
                    used += 1;
                } else if element == Element::F {
                    return Err(ChemError::InvalidAromaticity(i));
                }
            }
            let valence = element.valence();
            if used > valence {
                return Err(ChemError::ValenceError { atom: i, element });
            }
            out.push(Atom {
                element,
                aromatic,
                ring_member,
                implicit_h: valence - used,
            });
        }

        Ok(MolGraph {
            atoms: out,
            bonds: bond_list,
            adjacency,
        })
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn bonds(&self) -> &[Bond] {
        &self.bonds
    }

    pub fn atom(&self, i: usize) -> &Atom {
        &self.atoms[i]
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    pub fn bond_count(&self) -> usize {
        self.bonds.len()
    }

    /// Neighbors of atom `i` as (neighbor index, bond index) pairs.
    pub fn neighbors(&self, i: usize) -> &[(usize, usize)] {
        &self.adjacency[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adjacency[i].len()
    }

    pub fn bond_between(&self, a: usize, b: usize) -> Option<&Bond> {
        self.adjacency[a]
            .iter()
            .find(|&&(nb, _)| nb == b)
            .map(|&(_, bi)| &self.bonds[bi])
    }

    pub fn implicit_h_total(&self) -> usize {
        self.atoms.iter().map(|a| a.implicit_h as usize).sum()
    }

    /// Heavy atoms plus implicit hydrogens.
    pub fn total_atom_count(&self) -> usize {
        self.atoms.len() + self.implicit_h_total()
    }

    /// Cyclomatic number of the (connected) heavy-atom graph.
    pub fn ring_count(&self) -> usize {
        self.bonds.len() + 1 - self.atoms.len()
    }

    /// Decomposes the graph back into the inputs of [`MolGraph::from_parts`].
    pub fn to_parts(&self) -> (Vec<(Element, bool)>, Vec<(usize, usize, BondOrder)>) {
        let atoms = self.atoms.iter().map(|a| (a.element, a.aromatic)).collect();
        let bonds = self.bonds.iter().map(|b| (b.a, b.b, b.order)).collect();
        (atoms, bonds)
    }

    /// Joins `fragment` onto this molecule with a single bond between `site`
    /// and the fragment's `attach` atom. Each endpoint gives up one implicit
    /// hydrogen. Fragment atoms are appended after the existing atoms.
    pub fn attach(&self, site: usize, fragment: &MolGraph, attach: usize) -> Result<MolGraph, ChemError> {
        if site >= self.atoms.len() {
            return Err(ChemError::AtomIndex(site));
        }
        if attach >= fragment.atoms.len() {
            return Err(ChemError::AtomIndex(attach));
        }
        if self.atoms[site].implicit_h == 0 {
            return Err(ChemError::NoHydrogenAtSite(site));
        }
        if fragment.atoms[attach].implicit_h == 0 {
            return Err(ChemError::NoHydrogenAtSite(attach));
        }
        let offset = self.atoms.len();
        let (mut atoms, mut bonds) = self.to_parts();
        let (frag_atoms, frag_bonds) = fragment.to_parts();
        atoms.extend(frag_atoms);
        bonds.extend(frag_bonds.into_iter().map(|(a, b, o)| (a + offset, b + offset, o)));
        bonds.push((site, attach + offset, BondOrder::Single));
        MolGraph::from_parts(&atoms, &bonds)
    }

    /// Relabels atoms so that new atom `i` is old atom `order[i]`.
    pub fn permuted(&self, order: &[usize]) -> Result<MolGraph, ChemError> {
        let n = self.atoms.len();
        let mut new_index = vec![usize::MAX; n];
        for (new, &old) in order.iter().enumerate() {
            if old >= n || new_index[old] != usize::MAX {
                return Err(ChemError::AtomIndex(old));
            }
            new_index[old] = new;
        }
        if order.len() != n {
            return Err(ChemError::AtomIndex(order.len()));
        }
        let atoms: Vec<_> = order.iter().map(|&old| (self.atoms[old].element, self.atoms[old].aromatic)).collect();
        let bonds: Vec<_> = self
            .bonds
            .iter()
            .map(|b| (new_index[b.a], new_index[b.b], b.order))
            .collect();
        MolGraph::from_parts(&atoms, &bonds)
    }
}

fn is_connected(adjacency: &[Vec<(usize, usize)>]) -> bool {
    let n = adjacency.len();
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    let mut count = 1;
    while let Some(u) = stack.pop() {
        for &(v, _) in &adjacency[u] {
            if !seen[v] {
                seen[v] = true;
                count += 1;
                stack.push(v);
            }
        }
    }
    count == n
}

/// Marks every bond that lies on a cycle (i.e. is not a bridge).
fn ring_bonds(adjacency: &[Vec<(usize, usize)>], n_bonds: usize) -> Vec<bool> {
    let n = adjacency.len();
    let mut disc = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut is_bridge = vec![false; n_bonds];
    let mut timer = 0;
    // iterative Tarjan: (node, parent bond, next neighbor position)
    for root in 0..n {
        if disc[root] != usize::MAX {
            continue;
        }
        let mut stack: Vec<(usize, usize, usize)> = vec![(root, usize::MAX, 0)];
        disc[root] = timer;
        low[root] = timer;
        timer += 1;
        while let Some(&mut (u, parent_bond, ref mut pos)) = stack.last_mut() {
            if *pos < adjacency[u].len() {
                let (v, bi) = adjacency[u][*pos];
                *pos += 1;
                if bi == parent_bond {
                    continue;
                }
                if disc[v] == usize::MAX {
                    disc[v] = timer;
                    low[v] = timer;
                    timer += 1;
                    stack.push((v, bi, 0));
                } else {
                    low[u] = low[u].min(disc[v]);
                }
            } else {
                stack.pop();
                if let Some(&(p, _, _)) = stack.last() {
                    low[p] = low[p].min(low[u]);
                    if low[u] > disc[p] {
                        is_bridge[parent_bond] = true;
                    }
                }
            }
        }
    }
    is_bridge.into_iter().map(|b| !b).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ring_membership_in_fused_and_chain_atoms() {
        let m = parse_smiles("CCc1ccc2ccccc2c1").unwrap();
        assert!(!m.atom(0).ring_member);
        assert!(!m.atom(1).ring_member);
        assert!(m.atoms()[2..].iter().all(|a| a.ring_member));
        assert_eq!(m.ring_count(), 2);
        // fusion carbons carry no hydrogen
        let fusion: Vec<_> = m.atoms().iter().filter(|a| a.aromatic && a.implicit_h == 0).collect();
        assert_eq!(fusion.len(), 3);
    }

    #[test]
    fn rejects_disconnected_and_self_loops() {
        let atoms = [(Element::C, false), (Element::C, false)];
        assert_eq!(MolGraph::from_parts(&atoms, &[]), Err(ChemError::Disconnected));
        assert_eq!(
            MolGraph::from_parts(&atoms, &[(0, 0, BondOrder::Single), (0, 1, BondOrder::Single)]),
            Err(ChemError::SelfLoop(0))
        );
        assert_eq!(
            MolGraph::from_parts(&atoms, &[(0, 1, BondOrder::Single), (1, 0, BondOrder::Double)]),
            Err(ChemError::DuplicateBond(0, 1))
        );
    }

    #[test]
    fn aromatic_atom_outside_ring_is_rejected() {
        let atoms = [(Element::C, true), (Element::C, true)];
        let err = MolGraph::from_parts(&atoms, &[(0, 1, BondOrder::Aromatic)]).unwrap_err();
        assert!(matches!(err, ChemError::InvalidAromaticity(_)));
    }

    #[test]
    fn attach_consumes_one_hydrogen_each_side() {
        let hexane = parse_smiles("CCCCCC").unwrap();
        let methyl = parse_smiles("C").unwrap();
        let heptane = hexane.attach(5, &methyl, 0).unwrap();
        assert!(is_isomorphic(&heptane, &parse_smiles("CCCCCCC").unwrap()));
        assert_eq!(heptane.implicit_h_total(), 16);
    }

    #[test]
    fn attach_to_fluorine_fails() {
        let m = parse_smiles("CF").unwrap();
        let methyl = parse_smiles("C").unwrap();
        assert_eq!(m.attach(1, &methyl, 0), Err(ChemError::NoHydrogenAtSite(1)));
    }

    #[test]
    fn cyclopentanol_weight() {
        let ring = parse_smiles("C1CCCC1").unwrap();
        let water = parse_smiles("O").unwrap();
        let m = ring.attach(0, &water, 0).unwrap();
        let c = composition(&m);
        assert_eq!((c.carbon, c.hydrogen, c.oxygen), (5, 10, 1));
        // 5 x 12.011 + 10 x 1.008 + 15.999
        assert!((mol_weight(&m) - 86.134).abs() < 1e-9);
    }
}
