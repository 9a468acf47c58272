use std::collections::BTreeMap;

use super::canon::canonical_ranks;
use super::{BondOrder, ChemError, Element, MolGraph};

/// Parses the supported SMILES subset: organic atoms `C O F c o`, branches,
/// ring closures (`0`-`9` and `%nn`), and explicit `-`, `=`, `#` bonds.
pub fn parse_smiles(text: &str) -> Result<MolGraph, ChemError> {
    let text = text.trim();
    if text.is_empty() {
        return Err(ChemError::Empty);
    }
    let chars: Vec<char> = text.chars().collect();

    let mut atoms: Vec<(Element, bool)> = Vec::new();
    let mut bonds: Vec<(usize, usize, Option<BondOrder>)> = Vec::new();
    let mut branch_stack: Vec<usize> = Vec::new();
    let mut prev: Option<usize> = None;
    let mut pending: Option<BondOrder> = None;
    let mut open_rings: BTreeMap<u32, (usize, Option<BondOrder>)> = BTreeMap::new();

    let unsupported = |pos: usize, token: &str| ChemError::UnsupportedToken {
        pos,
        token: token.to_string(),
    };

    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        match c {
            'C' | 'O' | 'F' | 'c' | 'o' => {
                if c == 'C' && chars.get(i + 1) == Some(&'l') {
                    return Err(ChemError::UnsupportedElement {
                        pos: i,
                        symbol: "Cl".into(),
                    });
                }
                let atom = match c {
                    'C' => (Element::C, false),
                    'O' => (Element::O, false),
                    'F' => (Element::F, false),
                    'c' => (Element::C, true),
                    _ => (Element::O, true),
                };
                atoms.push(atom);
                let idx = atoms.len() - 1;
                if let Some(p) = prev {
                    bonds.push((p, idx, pending.take()));
                } else if pending.is_some() {
                    return Err(unsupported(i, &c.to_string()));
                }
                prev = Some(idx);
            }
            'B' if chars.get(i + 1) == Some(&'r') => {
                return Err(ChemError::UnsupportedElement {
                    pos: i,
                    symbol: "Br".into(),
                })
            }
            'N' | 'S' | 'P' | 'I' | 'B' | 'n' | 's' | 'p' | 'b' => {
                return Err(ChemError::UnsupportedElement {
                    pos: i,
                    symbol: c.to_string(),
                })
            }
            '(' => match prev {
                Some(p) if pending.is_none() => branch_stack.push(p),
                _ => return Err(ChemError::UnbalancedParenthesis),
            },
            ')' => {
                if pending.is_some() {
                    return Err(unsupported(i, ")"));
                }
                prev = Some(branch_stack.pop().ok_or(ChemError::UnbalancedParenthesis)?);
            }
            '-' | '=' | '#' => {
                if pending.is_some() || prev.is_none() {
                    return Err(unsupported(i, &c.to_string()));
                }
                pending = Some(match c {
                    '-' => BondOrder::Single,
                    '=' => BondOrder::Double,
                    _ => BondOrder::Triple,
                });
            }
            '0'..='9' | '%' => {
                let (label, width) = if c == '%' {
                    let d1 = chars.get(i + 1).and_then(|d| d.to_digit(10));
                    let d2 = chars.get(i + 2).and_then(|d| d.to_digit(10));
                    match (d1, d2) {
                        (Some(a), Some(b)) => (a * 10 + b, 3),
                        _ => return Err(unsupported(i, "%")),
                    }
                } else {
                    (c.to_digit(10).unwrap(), 1)
                };
                let here = prev.ok_or_else(|| unsupported(i, &c.to_string()))?;
                let order = pending.take();
                match open_rings.remove(&label) {
                    Some((other, open_order)) => {
                        if other == here {
                            return Err(ChemError::SelfLoop(here));
                        }
                        let order = match (open_order, order) {
                            (Some(a), Some(b)) if a != b => return Err(unsupported(i, &c.to_string())),
                            (a, b) => a.or(b),
                        };
                        bonds.push((other, here, order));
                    }
                    None => {
                        open_rings.insert(label, (here, order));
                    }
                }
                i += width;
                continue;
            }
            other => return Err(unsupported(i, &other.to_string())),
        }
        i += 1;
    }

    if pending.is_some() {
        return Err(unsupported(chars.len(), "dangling bond"));
    }
    if let Some((&label, _)) = open_rings.iter().next() {
        return Err(ChemError::UnclosedRing(label));
    }
    if !branch_stack.is_empty() {
        return Err(ChemError::UnbalancedParenthesis);
    }

    let resolved: Vec<_> = bonds
        .into_iter()
        .map(|(a, b, order)| {
            let order = order.unwrap_or(if atoms[a].1 && atoms[b].1 {
                BondOrder::Aromatic
            } else {
                BondOrder::Single
            });
            (a, b, order)
        })
        .collect();
    MolGraph::from_parts(&atoms, &resolved)
}

/// Writes a canonical SMILES string. Atoms are ordered by
/// [`canonical_ranks`]; the traversal starts at rank 0 and visits neighbors
/// in ascending rank, so isomorphic inputs produce identical strings.
pub fn to_smiles(mol: &MolGraph) -> String {
    let ranks = canonical_ranks(mol);
    let n = mol.atom_count();
    let start = (0..n).min_by_key(|&i| ranks[i]).unwrap_or(0);

    // pass 1: spanning tree and ring-closure bonds in DFS order
    let mut visited = vec![false; n];
    let mut bond_used = vec![false; mol.bond_count()];
    let mut children: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    let mut opens: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut closes: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut order: Vec<usize> = Vec::with_capacity(n);

    let sorted_neighbors = |u: usize| {
        let mut nb: Vec<(usize, usize)> = mol.neighbors(u).to_vec();
        nb.sort_by_key(|&(v, _)| ranks[v]);
        nb
    };

    let mut stack: Vec<(usize, Vec<(usize, usize)>, usize)> = Vec::new();
    visited[start] = true;
    order.push(start);
    stack.push((start, sorted_neighbors(start), 0));
    while let Some((u, nbrs, pos)) = stack.last_mut() {
        if *pos >= nbrs.len() {
            stack.pop();
            continue;
        }
        let (v, bi) = nbrs[*pos];
        *pos += 1;
        let u = *u;
        if bond_used[bi] {
            continue;
        }
        bond_used[bi] = true;
        if visited[v] {
            opens[v].push(bi);
            closes[u].push(bi);
        } else {
            visited[v] = true;
            order.push(v);
            children[u].push((v, bi));
            stack.push((v, sorted_neighbors(v), 0));
        }
    }

    // pass 2: emit
    let mut out = String::new();
    let mut digit_of_bond: BTreeMap<usize, u32> = BTreeMap::new();
    let mut in_use: Vec<bool> = Vec::new();
    write_atom(mol, start, None, &children, &opens, &closes, &mut digit_of_bond, &mut in_use, &mut out);
    out
}

#[allow(clippy::too_many_arguments)]
fn write_atom(
    mol: &MolGraph,
    u: usize,
    via: Option<usize>,
    children: &[Vec<(usize, usize)>],
    opens: &[Vec<usize>],
    closes: &[Vec<usize>],
    digit_of_bond: &mut BTreeMap<usize, u32>,
    in_use: &mut Vec<bool>,
    out: &mut String,
) {
    if let Some(bi) = via {
        out.push_str(bond_symbol(mol, bi));
    }
    let atom = mol.atom(u);
    let symbol = match (atom.element, atom.aromatic) {
        (Element::C, true) => "c",
        (Element::O, true) => "o",
        (e, false) => e.symbol(),
        (Element::F, true) => unreachable!("aromatic fluorine rejected at construction"),
    };
    out.push_str(symbol);

    for &bi in &closes[u] {
        let d = digit_of_bond.remove(&bi).expect("ring opened before closing");
        in_use[d as usize] = false;
        push_ring_label(out, d);
    }
    for &bi in &opens[u] {
        let d = match in_use.iter().position(|&b| !b) {
            Some(p) => p,
            None => {
                in_use.push(false);
                in_use.len() - 1
            }
        };
        in_use[d] = true;
        digit_of_bond.insert(bi, d as u32);
        out.push_str(bond_symbol(mol, bi));
        push_ring_label(out, d as u32);
    }

    let kids = &children[u];
    for (k, &(v, bi)) in kids.iter().enumerate() {
        let last = k + 1 == kids.len();
        if !last {
            out.push('(');
        }
        write_atom(mol, v, Some(bi), children, opens, closes, digit_of_bond, in_use, out);
        if !last {
            out.push(')');
        }
    }
}

fn push_ring_label(out: &mut String, d: u32) {
    // digits are handed out from 1 so that "C1CC1" style output is produced
    let label = d + 1;
    if label < 10 {
        out.push(char::from_digit(label, 10).unwrap());
    } else {
        out.push_str(&format!("%{label:02}"));
    }
}

fn bond_symbol(mol: &MolGraph, bi: usize) -> &'static str {
    let bond = mol.bonds()[bi];
    let both_aromatic = mol.atom(bond.a).aromatic && mol.atom(bond.b).aromatic;
    match bond.order {
        BondOrder::Single if both_aromatic => "-",
        BondOrder::Single | BondOrder::Aromatic => "",
        BondOrder::Double => "=",
        BondOrder::Triple => "#",
    }
}

/// Reads a SMILES line file: one molecule per line, blank lines and lines
/// starting with `#` ignored. Only the first whitespace-separated token of a
/// line is parsed. Returns (1-based line number, parse result) pairs.
pub fn read_smiles_lines(text: &str) -> Vec<(usize, String, Result<MolGraph, ChemError>)> {
    text.lines()
        .enumerate()
        .filter_map(|(i, line)| {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                return None;
            }
            let token = line.split_whitespace().next().unwrap_or("");
            Some((i + 1, token.to_string(), parse_smiles(token)))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chemgraph::{composition, is_isomorphic, mol_weight, Category};

    #[test]
    fn cyclopentane() {
        let m = parse_smiles("C1CCCC1").unwrap();
        assert_eq!(m.atom_count(), 5);
        assert_eq!(m.implicit_h_total(), 10);
        assert!(m.atoms().iter().all(|a| a.ring_member));
    }

    #[test]
    fn hexane_chain() {
        let m = parse_smiles("CCCCCC").unwrap();
        assert_eq!(m.atom_count(), 6);
        assert_eq!(m.bond_count(), 5);
        assert_eq!(composition(&m).category, Category::HC);
    }

    #[test]
    fn methyl_acetate() {
        let m = parse_smiles("CC(=O)OC").unwrap();
        let oxygens = m.atoms().iter().filter(|a| a.element == Element::O).count();
        assert_eq!(oxygens, 2);
        let doubles = m.bonds().iter().filter(|b| b.order == BondOrder::Double).count();
        assert_eq!(doubles, 1);
        assert!((mol_weight(&m) - 74.079).abs() < 1e-9);
    }

    #[test]
    fn error_kinds() {
        assert!(matches!(parse_smiles("CN"), Err(ChemError::UnsupportedElement { .. })));
        assert!(matches!(parse_smiles("CCl"), Err(ChemError::UnsupportedElement { .. })));
        assert!(matches!(parse_smiles("C[C@H]O"), Err(ChemError::UnsupportedToken { .. })));
        assert!(matches!(parse_smiles("C/C=C/C"), Err(ChemError::UnsupportedToken { .. })));
        assert!(matches!(parse_smiles("CC.C"), Err(ChemError::UnsupportedToken { .. })));
        assert_eq!(parse_smiles("C1CC"), Err(ChemError::UnclosedRing(1)));
        assert_eq!(parse_smiles("CC(C"), Err(ChemError::UnbalancedParenthesis));
        assert_eq!(parse_smiles("CC)C"), Err(ChemError::UnbalancedParenthesis));
        assert!(matches!(parse_smiles("C(C)(C)(C)(C)C"), Err(ChemError::ValenceError { .. })));
        assert!(matches!(parse_smiles("O=O=O"), Err(ChemError::ValenceError { .. })));
        assert!(matches!(parse_smiles("FF F"), Err(ChemError::UnsupportedToken { .. })));
        assert_eq!(parse_smiles("  "), Err(ChemError::Empty));
    }

    #[test]
    fn ring_closure_bond_orders() {
        let m = parse_smiles("C=1CCCCC=1").unwrap();
        assert_eq!(m.bonds().iter().filter(|b| b.order == BondOrder::Double).count(), 1);
        let m2 = parse_smiles("C1CCCCC=1").unwrap();
        assert!(is_isomorphic(&m, &m2));
        assert!(parse_smiles("C=1CCCCC#1").is_err());
    }

    #[test]
    fn writes_single_carbon() {
        assert_eq!(to_smiles(&parse_smiles("C").unwrap()), "C");
    }

    #[test]
    fn isomorphic_orderings_write_identically() {
        let a = parse_smiles("CCCCCC").unwrap();
        let b = parse_smiles("C(CC)CCC").unwrap();
        let c = a.permuted(&[3, 0, 5, 1, 4, 2]).unwrap();
        let s = to_smiles(&a);
        assert_eq!(s, to_smiles(&b));
        assert_eq!(s, to_smiles(&c));
        assert_eq!(s, "CCCCCC");
    }

    #[test]
    fn round_trips_ring_systems() {
        for smi in [
            "C1CCCC1",
            "c1ccccc1",
            "Cc1ccccc1",
            "c1ccc2ccccc2c1",
            "c1ccoc1",
            "C1CC2CCC1CC2",
            "c1ccc(-c2ccccc2)cc1",
            "CC(C)(C)C(=O)OCC#C",
            "OC(=O)C1CCC(CC1)C(F)(F)F",
        ] {
            let m = parse_smiles(smi).unwrap();
            let out = to_smiles(&m);
            let back = parse_smiles(&out).unwrap_or_else(|e| panic!("{smi} -> {out}: {e}"));
            assert!(is_isomorphic(&m, &back), "{smi} -> {out}");
            assert_eq!(to_smiles(&back), out);
        }
    }

    #[test]
    fn line_file_skips_comments() {
        let text = "# header\nCCCCCC hexane\n\n  # indented comment\nC1CCCC1\nCN\n";
        let rows = read_smiles_lines(text);
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[0].0, 2);
        assert_eq!(rows[0].1, "CCCCCC");
        assert!(rows[2].2.is_err());
    }
}
