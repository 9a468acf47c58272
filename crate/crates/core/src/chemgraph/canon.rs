use super::MolGraph;

/// Per-atom invariant used to seed ranking and fingerprinting.
pub(crate) fn atom_invariant(mol: &MolGraph, i: usize) -> [u8; 5] {
    let a = mol.atom(i);
    [
        a.element.atomic_number(),
        mol.degree(i) as u8,
        a.implicit_h,
        a.aromatic as u8,
        a.ring_member as u8,
    ]
}

/// Dense ranks (0..k) of `keys` in sorted order; equal keys share a rank.
fn dense_ranks<K: Ord>(keys: &[K]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..keys.len()).collect();
    idx.sort_by(|&a, &b| keys[a].cmp(&keys[b]));
    let mut ranks = vec![0; keys.len()];
    let mut r = 0;
    for w in 0..idx.len() {
        if w > 0 && keys[idx[w]] != keys[idx[w - 1]] {
            r += 1;
        }
        ranks[idx[w]] = r;
    }
    ranks
}

fn class_count(ranks: &[usize]) -> usize {
    ranks.iter().max().map_or(0, |m| m + 1)
}

/// Iterative neighborhood refinement until the partition stops splitting.
pub(crate) fn refine(mol: &MolGraph, mut ranks: Vec<usize>) -> Vec<usize> {
    loop {
        let before = class_count(&ranks);
        let keys: Vec<(usize, Vec<(u8, usize)>)> = (0..mol.atom_count())
            .map(|i| {
                let mut nb: Vec<(u8, usize)> = mol
                    .neighbors(i)
                    .iter()
                    .map(|&(v, bi)| (mol.bonds()[bi].order.code(), ranks[v]))
                    .collect();
                nb.sort_unstable();
                (ranks[i], nb)
            })
            .collect();
        ranks = dense_ranks(&keys);
        if class_count(&ranks) == before {
            return ranks;
        }
    }
}

/// Refined equivalence classes before any tie breaking.
pub(crate) fn refined_classes(mol: &MolGraph) -> Vec<usize> {
    let init: Vec<[u8; 5]> = (0..mol.atom_count()).map(|i| atom_invariant(mol, i)).collect();
    refine(mol, dense_ranks(&init))
}

/// Canonical atom ranking: a permutation of `0..n`.
///
/// Starts from atom invariants, refines by sorted (bond order, neighbor rank)
/// lists, and while ties remain, splits the lowest tied class by promoting
/// its smallest-index member and refining again.
pub fn canonical_ranks(mol: &MolGraph) -> Vec<usize> {
    let n = mol.atom_count();
    let mut ranks = refined_classes(mol);
    while class_count(&ranks) < n {
        let mut counts = vec![0usize; n];
        for &r in &ranks {
            counts[r] += 1;
        }
        let tied = (0..n).find(|&r| counts[r] > 1).expect("a tied class exists");
        let chosen = (0..n).find(|&i| ranks[i] == tied).unwrap();
        let keys: Vec<(usize, u8)> = (0..n)
            .map(|i| (ranks[i], if i == chosen { 0 } else { 1 }))
            .collect();
        ranks = refine(mol, dense_ranks(&keys));
    }
    ranks
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chemgraph::parse_smiles;

    #[test]
    fn ranks_are_a_permutation() {
        for smi in ["C", "CCCCCC", "c1ccc2ccccc2c1", "CC(C)(C)C"] {
            let m = parse_smiles(smi).unwrap();
            let mut r = canonical_ranks(&m);
            r.sort_unstable();
            assert_eq!(r, (0..m.atom_count()).collect::<Vec<_>>());
        }
    }

    #[test]
    fn symmetric_hexane_has_three_classes() {
        let m = parse_smiles("CCCCCC").unwrap();
        let classes = refined_classes(&m);
        assert_eq!(class_count(&classes), 3);
        assert_eq!(classes[0], classes[5]);
        assert_eq!(classes[1], classes[4]);
    }
}
