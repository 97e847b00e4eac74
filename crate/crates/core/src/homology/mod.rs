//! Bigraded integer homology of a chain complex whose differentials preserve
//! the quantum grading.

pub mod snf;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rayon::prelude::*;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::cube::{ChainComplex, DSquaredWitness};
use crate::poly::LaurentPolynomial;

pub use snf::{rank, smith_normal_form, SmithForm};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HomologyError {
    #[error(transparent)]
    DSquared(#[from] DSquaredWitness),
    #[error("d^{degree} sends basis element {column} (q-degree {from}) to {row} (q-degree {to})")]
    NotHomogeneous {
        degree: i32,
        column: usize,
        row: usize,
        from: i32,
        to: i32,
    },
    #[error("torsion coefficient {0} at {1:?} does not fit in 64 bits")]
    TorsionTooLarge(String, (i32, i32)),
}

/// One group `ℤ^rank ⊕ ⊕ ℤ/t`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Group {
    pub rank: usize,
    pub torsion: Vec<u64>,
}

impl Group {
    pub fn is_zero(&self) -> bool {
        self.rank == 0 && self.torsion.is_empty()
    }
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        match self.rank {
            0 => {}
            1 => parts.push("Z".to_string()),
            r => parts.push(format!("Z^{r}")),
        }
        for t in &self.torsion {
            parts.push(format!("Z/{t}"));
        }
        if parts.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", parts.join(" + "))
        }
    }
}

/// `H^{i,j}`, keyed by `(i, j)`; zero groups are absent.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BigradedHomology {
    groups: BTreeMap<(i32, i32), Group>,
}

impl BigradedHomology {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts a group, dropping it if zero. Torsion is sorted.
    pub fn insert(&mut self, i: i32, j: i32, mut g: Group) {
        g.torsion.sort_unstable();
        if g.is_zero() {
            self.groups.remove(&(i, j));
        } else {
            self.groups.insert((i, j), g);
        }
    }

    pub fn get(&self, i: i32, j: i32) -> Option<&Group> {
        self.groups.get(&(i, j))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(i32, i32), &Group)> {
        self.groups.iter()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn has_torsion(&self) -> bool {
        self.groups.values().any(|g| !g.torsion.is_empty())
    }

    /// Ranks over ℚ, zero entries dropped.
    pub fn rational_ranks(&self) -> BTreeMap<(i32, i32), usize> {
        self.groups
            .iter()
            .filter(|(_, g)| g.rank > 0)
            .map(|(&k, g)| (k, g.rank))
            .collect()
    }

    /// Cohomological degrees with a nonzero group.
    pub fn degrees(&self) -> BTreeSet<i32> {
        self.groups.keys().map(|&(i, _)| i).collect()
    }

    /// A plain-text table, one row per bidegree.
    pub fn table(&self) -> String {
        let mut out = String::from("i\tj\tgroup\n");
        for (&(i, j), g) in &self.groups {
            out.push_str(&format!("{i}\t{j}\t{g}\n"));
        }
        out
    }
}

impl Serialize for BigradedHomology {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let map: BTreeMap<String, &Group> = self
            .groups
            .iter()
            .map(|(&(i, j), g)| (format!("{i},{j}"), g))
            .collect();
        map.serialize(s)
    }
}

impl<'de> Deserialize<'de> for BigradedHomology {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let map = BTreeMap::<String, Group>::deserialize(d)?;
        let mut h = BigradedHomology::new();
        for (key, g) in map {
            let (i, j) = key
                .split_once(',')
                .ok_or_else(|| D::Error::custom(format!("bad key {key:?}")))?;
            let i = i.trim().parse().map_err(D::Error::custom)?;
            let j = j.trim().parse().map_err(D::Error::custom)?;
            h.insert(i, j, g);
        }
        Ok(h)
    }
}

/// Basis indices of each group, bucketed by quantum degree.
fn buckets(c: &ChainComplex) -> BTreeMap<i32, BTreeMap<i32, Vec<usize>>> {
    c.groups
        .iter()
        .map(|(&i, g)| {
            let mut by_j: BTreeMap<i32, Vec<usize>> = BTreeMap::new();
            for (idx, &j) in g.gradings.iter().enumerate() {
                by_j.entry(j).or_default().push(idx);
            }
            (i, by_j)
        })
        .collect()
}

fn check_homogeneous(c: &ChainComplex) -> Result<(), HomologyError> {
    for (&i, d) in &c.differentials {
        let src = &c.groups[&i].gradings;
        let dst = &c.groups[&(i + 1)].gradings;
        for (row, column, _) in d.triplets() {
            if src[column] != dst[row] {
                return Err(HomologyError::NotHomogeneous {
                    degree: i,
                    column,
                    row,
                    from: src[column],
                    to: dst[row],
                });
            }
        }
    }
    Ok(())
}

/// Computes `H^{i,j}` for every bidegree by splitting each differential into
/// quantum-degree blocks and taking Smith forms.
pub fn homology_of(c: &ChainComplex) -> Result<BigradedHomology, HomologyError> {
    c.check_d_squared()?;
    check_homogeneous(c)?;
    let buckets = buckets(c);
    let empty = Vec::new();

    // Smith form of every block d^{i}|_j
    let blocks: Vec<(i32, i32)> = c
        .differentials
        .keys()
        .flat_map(|&i| buckets[&i].keys().map(move |&j| (i, j)))
        .collect();
    let forms: BTreeMap<(i32, i32), SmithForm> = blocks
        .par_iter()
        .map(|&(i, j)| {
            let cols = &buckets[&i][&j];
            let rows = buckets.get(&(i + 1)).and_then(|b| b.get(&j)).unwrap_or(&empty);
            let block = c.differentials[&i].submatrix(rows, cols);
            ((i, j), smith_normal_form(&block))
        })
        .collect();

    let mut h = BigradedHomology::new();
    for (&i, by_j) in &buckets {
        for (&j, basis) in by_j {
            let out_rank = forms.get(&(i, j)).map_or(0, SmithForm::rank);
            let incoming = forms.get(&(i - 1, j));
            let in_rank = incoming.map_or(0, SmithForm::rank);
            let torsion = incoming
                .map(|f| {
                    f.torsion()
                        .iter()
                        .map(|t| {
                            snf::factor_to_u64(t)
                                .ok_or_else(|| HomologyError::TorsionTooLarge(t.to_string(), (i, j)))
                        })
                        .collect::<Result<Vec<_>, _>>()
                })
                .transpose()?
                .unwrap_or_default();
            h.insert(
                i,
                j,
                Group {
                    rank: basis.len() - out_rank - in_rank,
                    torsion,
                },
            );
        }
    }
    Ok(h)
}

/// `Σ (−1)^i q^j rank H^{i,j}`.
pub fn graded_euler(h: &BigradedHomology) -> LaurentPolynomial {
    let mut p = LaurentPolynomial::zero();
    for (&(i, j), g) in h.iter() {
        let sign = if i.rem_euclid(2) == 0 { 1 } else { -1 };
        p.add_term(sign * g.rank as i64, j);
    }
    p
}

/// One bidegree where two homologies differ.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mismatch {
    pub i: i32,
    pub j: i32,
    pub left: Group,
    pub right: Group,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Comparison {
    pub mismatches: Vec<Mismatch>,
}

impl Comparison {
    pub fn equal(&self) -> bool {
        self.mismatches.is_empty()
    }
}

pub fn equal_bigraded(a: &BigradedHomology, b: &BigradedHomology) -> Comparison {
    let keys: BTreeSet<(i32, i32)> = a.groups.keys().chain(b.groups.keys()).copied().collect();
    let mismatches = keys
        .into_iter()
        .filter_map(|(i, j)| {
            let left = a.get(i, j).cloned().unwrap_or_default();
            let right = b.get(i, j).cloned().unwrap_or_default();
            (left != right).then_some(Mismatch { i, j, left, right })
        })
        .collect();
    Comparison { mismatches }
}

/// Compares ℚ-ranks only.
pub fn equal_ranks(a: &BigradedHomology, b: &BigradedHomology) -> Comparison {
    let strip = |h: &BigradedHomology| {
        let mut out = BigradedHomology::new();
        for (&(i, j), g) in h.iter() {
            out.insert(i, j, Group { rank: g.rank, torsion: Vec::new() });
        }
        out
    };
    equal_bigraded(&strip(a), &strip(b))
}

/// ℚ-ranks reindexed by `(i, j) ↦ (−i, −j)`.
pub fn dual_ranks(h: &BigradedHomology) -> BigradedHomology {
    let mut out = BigradedHomology::new();
    for (&(i, j), g) in h.iter() {
        out.insert(-i, -j, Group { rank: g.rank, torsion: Vec::new() });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cube::ChainGroup;
    use crate::matrix::SparseMatrix;
    use crate::resolution::CrossingSet;
    use proptest::prelude::*;

    fn complex(groups: &[(i32, Vec<i32>)], diffs: &[(i32, Vec<Vec<i64>>)]) -> ChainComplex {
        ChainComplex {
            groups: groups
                .iter()
                .map(|(i, g)| {
                    (
                        *i,
                        ChainGroup {
                            gradings: g.clone(),
                            summands: vec![(CrossingSet::empty(), 0, g.len())],
                        },
                    )
                })
                .collect(),
            differentials: diffs
                .iter()
                .map(|(i, d)| (*i, SparseMatrix::from_dense(d)))
                .collect(),
        }
    }

    #[test]
    fn acyclic_two_term() {
        let c = complex(&[(0, vec![0, 2]), (1, vec![0, 2])], &[(0, vec![vec![1, 0], vec![0, 1]])]);
        assert!(homology_of(&c).unwrap().is_empty());
    }

    #[test]
    fn torsion_appears() {
        let c = complex(&[(0, vec![4]), (1, vec![4])], &[(0, vec![vec![2]])]);
        let h = homology_of(&c).unwrap();
        assert_eq!(h.get(1, 4), Some(&Group { rank: 0, torsion: vec![2] }));
        assert_eq!(h.get(0, 4), None);
        assert_eq!(graded_euler(&h), LaurentPolynomial::zero());
    }

    #[test]
    fn unknot_like_json() {
        let c = complex(&[(0, vec![-1, 1])], &[]);
        let h = homology_of(&c).unwrap();
        assert_eq!(graded_euler(&h), LaurentPolynomial::quantum_integer(2));
        let s = serde_json::to_string(&h).unwrap();
        assert_eq!(s, r#"{"0,-1":{"rank":1,"torsion":[]},"0,1":{"rank":1,"torsion":[]}}"#);
        let back: BigradedHomology = serde_json::from_str(&s).unwrap();
        assert_eq!(back, h);
    }

    #[test]
    fn nonzero_square_is_reported() {
        let c = complex(
            &[(0, vec![0]), (1, vec![0]), (2, vec![0])],
            &[(0, vec![vec![1]]), (1, vec![vec![1]])],
        );
        assert!(matches!(homology_of(&c), Err(HomologyError::DSquared(_))));
    }

    #[test]
    fn inhomogeneous_differential_is_reported() {
        let c = complex(&[(0, vec![0]), (1, vec![2])], &[(0, vec![vec![1]])]);
        assert!(matches!(homology_of(&c), Err(HomologyError::NotHomogeneous { .. })));
    }

    #[test]
    fn comparisons() {
        let mut a = BigradedHomology::new();
        a.insert(0, 1, Group { rank: 1, torsion: vec![] });
        let mut b = a.clone();
        assert!(equal_bigraded(&a, &b).equal());
        b.insert(0, 1, Group { rank: 2, torsion: vec![] });
        let cmp = equal_bigraded(&a, &b);
        assert_eq!(cmp.mismatches.len(), 1);
        assert_eq!((cmp.mismatches[0].i, cmp.mismatches[0].j), (0, 1));

        let mut t = a.clone();
        t.insert(0, 1, Group { rank: 1, torsion: vec![2] });
        assert!(!equal_bigraded(&a, &t).equal());
        assert!(equal_ranks(&a, &t).equal());
    }

    /// Random complex `0 -> Z^a -> Z^b -> Z^c -> 0` with `d1 d0 = 0`, built as
    /// `d0 = K · X`, `d1 = Y · L` where `L K = 0`.
    fn random_complex(x: Vec<Vec<i64>>, y: Vec<Vec<i64>>) -> ChainComplex {
        // K = [1, -1, 0]^T spans the kernel of L = [[1, 1, 0], [0, 0, 1]]
        let k = SparseMatrix::from_dense(&[vec![1], vec![-1], vec![0]]);
        let l = SparseMatrix::from_dense(&[vec![1, 1, 0], vec![0, 0, 1]]);
        let d0 = k.mul(&SparseMatrix::from_dense(&x));
        let d1 = SparseMatrix::from_dense(&y).mul(&l);
        let mut c = complex(&[(0, vec![0; 2]), (1, vec![0; 3]), (2, vec![0; 2])], &[]);
        c.differentials.insert(0, d0);
        c.differentials.insert(1, d1);
        c
    }

    /// A unimodular matrix as a product of elementary operations, with its
    /// inverse.
    fn unimodular(dim: usize, ops: &[(usize, usize, i64)]) -> (SparseMatrix, SparseMatrix) {
        let mut p = SparseMatrix::identity(dim);
        let mut inv = SparseMatrix::identity(dim);
        for &(r, s, f) in ops {
            let (r, s) = (r % dim, s % dim);
            if r == s {
                continue;
            }
            let mut e = SparseMatrix::identity(dim);
            e.add_entry(r, s, f);
            let mut e_inv = SparseMatrix::identity(dim);
            e_inv.add_entry(r, s, -f);
            p = e.mul(&p);
            inv = inv.mul(&e_inv);
        }
        (p, inv)
    }

    proptest! {
        #[test]
        fn basis_change_invariance(
            x in prop::collection::vec(prop::collection::vec(-3i64..4, 2), 1),
            y in prop::collection::vec(prop::collection::vec(-3i64..4, 2), 2),
            ops in prop::collection::vec((0usize..3, 0usize..3, -2i64..3), 0..6),
        ) {
            let c = random_complex(x, y);
            let h = homology_of(&c).unwrap();
            let mut bases = BTreeMap::new();
            for (i, dim) in [(0, 2), (1, 3), (2, 2)] {
                bases.insert(i, unimodular(dim, &ops));
            }
            let c2 = c.conjugate(&bases);
            prop_assert!(c2.check_d_squared().is_ok());
            prop_assert_eq!(homology_of(&c2).unwrap(), h);
        }

        #[test]
        fn euler_of_homology_matches_chain_groups(
            x in prop::collection::vec(prop::collection::vec(-3i64..4, 2), 1),
            y in prop::collection::vec(prop::collection::vec(-3i64..4, 2), 2),
        ) {
            let c = random_complex(x, y);
            let h = homology_of(&c).unwrap();
            // all gradings are 0: Euler characteristic is 2 - 3 + 2
            prop_assert_eq!(graded_euler(&h), LaurentPolynomial::monomial(1, 0));
        }
    }
}
