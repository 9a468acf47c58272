use super::MolGraph;

/// Exact graph isomorphism test on heavy-atom graphs (element, aromatic flag
/// and bond order must all match). Backtracking over refined equivalence
/// classes; fine for molecules of a few hundred atoms.
pub fn is_isomorphic(a: &MolGraph, b: &MolGraph) -> bool {
    let n = a.atom_count();
    if n != b.atom_count() || a.bond_count() != b.bond_count() {
        return false;
    }
    // Refinement is run on the disjoint union so class ids are comparable.
    let ca = union_classes(a, b);
    let (class_a, class_b) = ca.split_at(n);
    let mut hist_a = class_a.to_vec();
    let mut hist_b = class_b.to_vec();
    hist_a.sort_unstable();
    hist_b.sort_unstable();
    if hist_a != hist_b {
        return false;
    }

    // visit atoms of `a` in BFS order so each new atom is adjacent to a mapped one
    let mut order = Vec::with_capacity(n);
    let mut seen = vec![false; n];
    seen[0] = true;
    order.push(0);
    let mut head = 0;
    while head < order.len() {
        let u = order[head];
        head += 1;
        for &(v, _) in a.neighbors(u) {
            if !seen[v] {
                seen[v] = true;
                order.push(v);
            }
        }
    }

    let mut map_ab = vec![usize::MAX; n];
    let mut used_b = vec![false; n];
    extend(a, b, class_a, class_b, &order, 0, &mut map_ab, &mut used_b)
}

fn union_classes(a: &MolGraph, b: &MolGraph) -> Vec<usize> {
    let n = a.atom_count();
    let (mut atoms, mut bonds) = a.to_parts();
    let (atoms_b, bonds_b) = b.to_parts();
    atoms.extend(atoms_b);
    bonds.extend(bonds_b.into_iter().map(|(x, y, o)| (x + n, y + n, o)));
    let adjacency = {
        let mut adj = vec![Vec::new(); atoms.len()];
        for (i, &(x, y, o)) in bonds.iter().enumerate() {
            adj[x].push((y, i, o));
            adj[y].push((x, i, o));
        }
        adj
    };
    let init: Vec<[u8; 5]> = (0..atoms.len())
        .map(|i| {
            let atom = if i < n { a.atom(i) } else { b.atom(i - n) };
            [
                atom.element.atomic_number(),
                adjacency[i].len() as u8,
                atom.implicit_h,
                atom.aromatic as u8,
                atom.ring_member as u8,
            ]
        })
        .collect();
    let mut ranks = dense(&init);
    loop {
        let before = ranks.iter().max().map_or(0, |m| m + 1);
        let keys: Vec<(usize, Vec<(u8, usize)>)> = (0..atoms.len())
            .map(|i| {
                let mut nb: Vec<(u8, usize)> = adjacency[i].iter().map(|&(v, _, o)| (o.code(), ranks[v])).collect();
                nb.sort_unstable();
                (ranks[i], nb)
            })
            .collect();
        ranks = dense(&keys);
        if ranks.iter().max().map_or(0, |m| m + 1) == before {
            return ranks;
        }
    }
}

fn dense<K: Ord>(keys: &[K]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..keys.len()).collect();
    idx.sort_by(|&x, &y| keys[x].cmp(&keys[y]));
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

#[allow(clippy::too_many_arguments)]
fn extend(
    a: &MolGraph,
    b: &MolGraph,
    class_a: &[usize],
    class_b: &[usize],
    order: &[usize],
    depth: usize,
    map_ab: &mut Vec<usize>,
    used_b: &mut Vec<bool>,
) -> bool {
    if depth == order.len() {
        return true;
    }
    let u = order[depth];
    for cand in 0..b.atom_count() {
        if used_b[cand] || class_b[cand] != class_a[u] {
            continue;
        }
        let consistent = a.neighbors(u).iter().all(|&(v, bi)| {
            let mv = map_ab[v];
            if mv == usize::MAX {
                return true;
            }
            match b.bond_between(cand, mv) {
                Some(bond) => bond.order == a.bonds()[bi].order,
                None => false,
            }
        });
        if !consistent {
            continue;
        }
        map_ab[u] = cand;
        used_b[cand] = true;
        if extend(a, b, class_a, class_b, order, depth + 1, map_ab, used_b) {
            return true;
        }
        map_ab[u] = usize::MAX;
        used_b[cand] = false;
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chemgraph::parse_smiles;

    #[test]
    fn distinguishes_isomers() {
        let hexane = parse_smiles("CCCCCC").unwrap();
        let isohexane = parse_smiles("CC(C)CCC").unwrap();
        assert!(!is_isomorphic(&hexane, &isohexane));
        assert!(is_isomorphic(&isohexane, &parse_smiles("CCCC(C)C").unwrap()));
    }

    #[test]
    fn bond_order_matters() {
        let a = parse_smiles("C=CCC").unwrap();
        let b = parse_smiles("CC=CC").unwrap();
        assert!(!is_isomorphic(&a, &b));
    }

    #[test]
    fn regular_graphs() {
        let decalin = parse_smiles("C1CCC2CCCCC2C1").unwrap();
        let spiro_like = parse_smiles("C1CCC2(CC1)CCCC2").unwrap();
        assert!(!is_isomorphic(&decalin, &spiro_like));
        assert!(is_isomorphic(&decalin, &parse_smiles("C1CC2CCCCC2CC1").unwrap()));
    }
}
