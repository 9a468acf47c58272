use super::canon::atom_invariant;
use super::{ChemError, MolGraph};

use crate::hashing::fnv1a;

/// Fixed-width bit vector produced by [`morgan_fingerprint`].
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Fingerprint {
    words: Vec<u64>,
    nbits: usize,
    radius: u32,
}

impl Fingerprint {
    pub fn zeros(nbits: usize, radius: u32) -> Result<Fingerprint, ChemError> {
        if nbits < 64 || !nbits.is_power_of_two() {
            return Err(ChemError::InvalidWidth(nbits));
        }
        Ok(Fingerprint {
            words: vec![0; nbits / 64],
            nbits,
            radius,
        })
    }

    pub fn nbits(&self) -> usize {
        self.nbits
    }

    pub fn radius(&self) -> u32 {
        self.radius
    }

    pub fn set(&mut self, bit: usize) {
        self.words[bit / 64] |= 1 << (bit % 64);
    }

    pub fn get(&self, bit: usize) -> bool {
        self.words[bit / 64] >> (bit % 64) & 1 == 1
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Bits as hex, least significant word first, each word big-endian.
    pub fn to_hex(&self) -> String {
        self.words.iter().map(|w| format!("{w:016x}")).collect()
    }

    pub fn from_hex(text: &str, radius: u32) -> Result<Fingerprint, ChemError> {
        if text.len() % 16 != 0 || !text.is_ascii() {
            return Err(ChemError::InvalidHex);
        }
        let mut fp = Fingerprint::zeros(text.len() * 4, radius)?;
        for (i, chunk) in text.as_bytes().chunks(16).enumerate() {
            let s = std::str::from_utf8(chunk).map_err(|_| ChemError::InvalidHex)?;
            fp.words[i] = u64::from_str_radix(s, 16).map_err(|_| ChemError::InvalidHex)?;
        }
        Ok(fp)
    }

    /// Returns (n11, n10 + n01, n00).
    fn counts(&self, other: &Fingerprint) -> Result<(usize, usize, usize), ChemError> {
        if self.nbits != other.nbits {
            return Err(ChemError::WidthMismatch(self.nbits, other.nbits));
        }
        let (mut n11, mut mismatch) = (0usize, 0usize);
        for (a, b) in self.words.iter().zip(&other.words) {
            n11 += (a & b).count_ones() as usize;
            mismatch += (a ^ b).count_ones() as usize;
        }
        Ok((n11, mismatch, self.nbits - n11 - mismatch))
    }

    /// Rogers-Tanimoto similarity (n11 + n00) / (n11 + n00 + 2 (n10 + n01)).
    pub fn rogers_tanimoto(&self, other: &Fingerprint) -> Result<f64, ChemError> {
        let (n11, mismatch, n00) = self.counts(other)?;
        let agree = (n11 + n00) as f64;
        Ok(agree / (agree + 2.0 * mismatch as f64))
    }

    /// Jaccard/Tanimoto similarity n11 / (n11 + n10 + n01); two empty
    /// fingerprints are defined as identical.
    pub fn tanimoto(&self, other: &Fingerprint) -> Result<f64, ChemError> {
        let (n11, mismatch, _) = self.counts(other)?;
        if n11 + mismatch == 0 {
            return Ok(1.0);
        }
        Ok(n11 as f64 / (n11 + mismatch) as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum SimilarityMetric {
    #[default]
    RogersTanimoto,
    Tanimoto,
}

impl SimilarityMetric {
    pub fn name(self) -> &'static str {
        match self {
            SimilarityMetric::RogersTanimoto => "rogers-tanimoto",
            SimilarityMetric::Tanimoto => "tanimoto",
        }
    }
}

impl std::str::FromStr for SimilarityMetric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "rogers-tanimoto" | "rogerstanimoto" => Ok(SimilarityMetric::RogersTanimoto),
            "tanimoto" | "jaccard" => Ok(SimilarityMetric::Tanimoto),
            other => Err(format!("unknown similarity metric {other:?}")),
        }
    }
}

/// Similarity of two equal-length bit slices of any width.
pub fn bit_similarity(a: &[bool], b: &[bool], metric: SimilarityMetric) -> Result<f64, ChemError> {
    if a.len() != b.len() {
        return Err(ChemError::WidthMismatch(a.len(), b.len()));
    }
    let n11 = a.iter().zip(b).filter(|(x, y)| **x && **y).count();
    let mismatch = a.iter().zip(b).filter(|(x, y)| x != y).count();
    let n00 = a.len() - n11 - mismatch;
    Ok(match metric {
        SimilarityMetric::RogersTanimoto => {
            let agree = (n11 + n00) as f64;
            agree / (agree + 2.0 * mismatch as f64)
        }
        SimilarityMetric::Tanimoto if n11 + mismatch == 0 => 1.0,
        SimilarityMetric::Tanimoto => n11 as f64 / (n11 + mismatch) as f64,
    })
}

pub fn similarity(a: &Fingerprint, b: &Fingerprint, metric: SimilarityMetric) -> Result<f64, ChemError> {
    match metric {
        SimilarityMetric::RogersTanimoto => a.rogers_tanimoto(b),
        SimilarityMetric::Tanimoto => a.tanimoto(b),
    }
}

/// Circular (Morgan-style) fingerprint.
///
/// Round 0 hashes each atom's (atomic number, degree, implicit H, aromatic,
/// ring member) invariant. Round r hashes the atom's previous identifier, r,
/// and its neighbors' (bond order, previous identifier) pairs sorted. Every
/// identifier from rounds 0..=radius sets bit `id % nbits`.
pub fn morgan_fingerprint(mol: &MolGraph, radius: u32, nbits: usize) -> Result<Fingerprint, ChemError> {
    let mut fp = Fingerprint::zeros(nbits, radius)?;
    let n = mol.atom_count();
    let mut ids: Vec<u64> = (0..n).map(|i| fnv1a(&atom_invariant(mol, i))).collect();
    for &id in &ids {
        fp.set((id % nbits as u64) as usize);
    }
    let mut buf = Vec::new();
    for round in 1..=radius {
        let next: Vec<u64> = (0..n)
            .map(|i| {
                let mut env: Vec<(u8, u64)> = mol
                    .neighbors(i)
                    .iter()
                    .map(|&(v, bi)| (mol.bonds()[bi].order.code(), ids[v]))
                    .collect();
                env.sort_unstable();
                buf.clear();
                buf.extend_from_slice(&ids[i].to_le_bytes());
                buf.extend_from_slice(&round.to_le_bytes());
                for (code, id) in env {
                    buf.push(code);
                    buf.extend_from_slice(&id.to_le_bytes());
                }
                fnv1a(&buf)
            })
            .collect();
        ids = next;
        for &id in &ids {
            fp.set((id % nbits as u64) as usize);
        }
    }
    Ok(fp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chemgraph::parse_smiles;

    fn bits(width: usize, set: &[usize]) -> Fingerprint {
        let mut fp = Fingerprint::zeros(width.max(64), 0).unwrap();
        for &b in set {
            fp.set(b);
        }
        fp
    }

    #[test]
    fn width_validation() {
        assert_eq!(Fingerprint::zeros(100, 2), Err(ChemError::InvalidWidth(100)));
        assert_eq!(Fingerprint::zeros(32, 2), Err(ChemError::InvalidWidth(32)));
        let m = parse_smiles("CC").unwrap();
        assert!(morgan_fingerprint(&m, 2, 1000).is_err());
    }

    #[test]
    fn hexane_radius_zero_has_two_environments() {
        let m = parse_smiles("CCCCCC").unwrap();
        let fp = morgan_fingerprint(&m, 0, 2048).unwrap();
        assert!(fp.count_ones() <= 2 && fp.count_ones() >= 1);
    }

    #[test]
    fn hexane_and_perfluorohexane_disjoint() {
        let a = morgan_fingerprint(&parse_smiles("CCCCCC").unwrap(), 1, 2048).unwrap();
        let b = morgan_fingerprint(
            &parse_smiles("FC(F)(F)C(F)(F)C(F)(F)C(F)(F)C(F)(F)C(F)(F)F").unwrap(),
            1,
            2048,
        )
        .unwrap();
        let shared = (0..2048).filter(|&i| a.get(i) && b.get(i)).count();
        assert_eq!(shared, 0);
    }

    #[test]
    fn hand_counted_rogers_tanimoto() {
        let x = [true, true, false, false];
        let y = [true, false, true, false];
        let s = bit_similarity(&x, &y, SimilarityMetric::RogersTanimoto).unwrap();
        assert!((s - 1.0 / 3.0).abs() < 1e-15);
        // same pattern inside 64 bits: n11 = 1, mismatches = 2, n00 = 61
        let a = bits(64, &[0, 1]);
        let b = bits(64, &[0, 2]);
        assert!((a.rogers_tanimoto(&b).unwrap() - 62.0 / 66.0).abs() < 1e-15);
        assert!((a.tanimoto(&b).unwrap() - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn complements_have_zero_similarity() {
        let a = bits(64, &(0..32).collect::<Vec<_>>());
        let b = bits(64, &(32..64).collect::<Vec<_>>());
        assert_eq!(a.rogers_tanimoto(&b).unwrap(), 0.0);
        assert_eq!(a.rogers_tanimoto(&a).unwrap(), 1.0);
    }

    #[test]
    fn width_mismatch() {
        let a = Fingerprint::zeros(64, 0).unwrap();
        let b = Fingerprint::zeros(128, 0).unwrap();
        assert_eq!(a.rogers_tanimoto(&b), Err(ChemError::WidthMismatch(64, 128)));
    }

    #[test]
    fn hex_round_trip() {
        let fp = morgan_fingerprint(&parse_smiles("CC(=O)OC").unwrap(), 2, 256).unwrap();
        let hex = fp.to_hex();
        assert_eq!(hex.len(), 64);
        assert_eq!(Fingerprint::from_hex(&hex, 2).unwrap(), fp);
        assert_eq!(Fingerprint::from_hex("xyz", 2), Err(ChemError::InvalidHex));
    }
}
