//! Commutative and skew-commutative cubes of free graded modules and their
//! total complexes.
//!
//! Vertices are indexed by subsets of the index set `0..dim` (bitmasks); each
//! vertex is a free module given by the gradings of its basis. Edge maps are
//! integer matrices in those bases.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix::SparseMatrix;
use crate::resolution::CrossingSet;

#[derive(Debug, Error, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum CubeError {
    #[error("face ({subset:?}, {a}, {b}) fails to {relation}; first differing column {column}")]
    Face {
        subset: CrossingSet,
        a: usize,
        b: usize,
        /// Basis element of `V(subset)` witnessing the failure.
        column: usize,
        relation: FaceRelation,
    },
    #[error("edge map ({subset:?}, {a}) has shape {got:?}, expected {expected:?}")]
    Shape {
        subset: CrossingSet,
        a: usize,
        got: (usize, usize),
        expected: (usize, usize),
    },
    #[error("edge map ({subset:?}, {a}) sends basis element {column} (grading {from}) to {row} (grading {to})")]
    Grading {
        subset: CrossingSet,
        a: usize,
        column: usize,
        row: usize,
        from: i32,
        to: i32,
    },
    #[error("edge map ({subset:?}, {a}) is missing")]
    MissingEdge { subset: CrossingSet, a: usize },
    #[error("cohomological degree jumps by {jump} along ({subset:?}, {a}); expected +1")]
    DegreeJump {
        subset: CrossingSet,
        a: usize,
        jump: i32,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FaceRelation {
    Commute,
    Anticommute,
}

impl std::fmt::Display for FaceRelation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FaceRelation::Commute => write!(f, "commute"),
            FaceRelation::Anticommute => write!(f, "anticommute"),
        }
    }
}

/// Shape and data shared by both kinds of cube.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cube {
    pub dim: usize,
    /// Basis gradings of `V(X)`, indexed by the bitmask of `X`.
    pub vertices: Vec<Vec<i32>>,
    /// `ξ_a(X): V(X) -> V(Xa)`, keyed by `(X, a)` with `a ∉ X`.
    pub edges: BTreeMap<(CrossingSet, usize), SparseMatrix>,
}

impl Cube {
    pub fn vertex(&self, x: CrossingSet) -> &[i32] {
        &self.vertices[x.0 as usize]
    }

    pub fn edge(&self, x: CrossingSet, a: usize) -> Result<&SparseMatrix, CubeError> {
        self.edges
            .get(&(x, a))
            .ok_or(CubeError::MissingEdge { subset: x, a })
    }

    pub fn subsets(&self) -> impl Iterator<Item = CrossingSet> {
        (0..1u64 << self.dim).map(CrossingSet)
    }

    /// All faces `(X, a, b)` with `a < b`, both outside `X`.
    pub fn faces(&self) -> Vec<(CrossingSet, usize, usize)> {
        let mut out = Vec::new();
        for x in self.subsets() {
            for a in 0..self.dim {
                for b in a + 1..self.dim {
                    if !x.contains(a) && !x.contains(b) {
                        out.push((x, a, b));
                    }
                }
            }
        }
        out
    }

    pub fn check_shapes(&self) -> Result<(), CubeError> {
        for x in self.subsets() {
            for a in (0..self.dim).filter(|&a| !x.contains(a)) {
                let m = self.edge(x, a)?;
                let expected = (self.vertex(x.with(a)).len(), self.vertex(x).len());
                if (m.rows(), m.cols()) != expected {
                    return Err(CubeError::Shape {
                        subset: x,
                        a,
                        got: (m.rows(), m.cols()),
                        expected,
                    });
                }
            }
        }
        Ok(())
    }

    /// Every nonzero entry joins basis elements of equal grading.
    pub fn check_gradings(&self) -> Result<(), CubeError> {
        for (&(x, a), m) in &self.edges {
            let src = self.vertex(x);
            let dst = self.vertex(x.with(a));
            for (row, column, _) in m.triplets() {
                if src[column] != dst[row] {
                    return Err(CubeError::Grading {
                        subset: x,
                        a,
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

    /// Checks one face for `ξ_b(Xa)ξ_a(X) = ± ξ_a(Xb)ξ_b(X)`.
    pub fn check_face(
        &self,
        x: CrossingSet,
        a: usize,
        b: usize,
        relation: FaceRelation,
    ) -> Result<(), CubeError> {
        let via_a = self.edge(x.with(a), b)?.mul(self.edge(x, a)?);
        let via_b = self.edge(x.with(b), a)?.mul(self.edge(x, b)?);
        let other = match relation {
            FaceRelation::Commute => via_b.scale(-1),
            FaceRelation::Anticommute => via_b,
        };
        let diff = via_a.add(&other);
        if diff.is_zero() {
            return Ok(());
        }
        let column = (0..diff.cols())
            .find(|&c| !diff.column(c).is_empty())
            .unwrap_or(0);
        Err(CubeError::Face {
            subset: x,
            a,
            b,
            column,
            relation,
        })
    }

    /// The first failing face in face order, if any.
    pub fn first_face_failure(&self, relation: FaceRelation) -> Option<CubeError> {
        self.faces()
            .into_par_iter()
            .find_map_first(|(x, a, b)| self.check_face(x, a, b, relation).err())
    }

    /// All failing faces, in face order.
    pub fn face_failures(&self, relation: FaceRelation) -> Vec<CubeError> {
        self.faces()
            .into_par_iter()
            .filter_map(|(x, a, b)| self.check_face(x, a, b, relation).err())
            .collect()
    }
}

/// A cube whose square faces commute.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CommutativeCube(Cube);

/// A cube whose square faces anticommute.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SkewCube(Cube);

impl CommutativeCube {
    pub fn new(cube: Cube) -> Result<Self, CubeError> {
        cube.check_shapes()?;
        if let Some(e) = cube.face_failures(FaceRelation::Commute).into_iter().next() {
            return Err(e);
        }
        Ok(Self(cube))
    }

    pub fn inner(&self) -> &Cube {
        &self.0
    }
}

impl SkewCube {
    pub fn new(cube: Cube) -> Result<Self, CubeError> {
        cube.check_shapes()?;
        if let Some(e) = cube.face_failures(FaceRelation::Anticommute).into_iter().next() {
            return Err(e);
        }
        Ok(Self(cube))
    }

    pub fn inner(&self) -> &Cube {
        &self.0
    }
}

/// `ε(X, a) = (−1)^{#{b ∈ X : b < a}}`.
pub fn twist_sign(x: CrossingSet, a: usize) -> i64 {
    if x.count_below(a) % 2 == 0 {
        1
    } else {
        -1
    }
}

/// Multiplies every edge map by `ε(X, a)`. Commutativity is checked first.
pub fn skew_twist(v: &Cube) -> Result<SkewCube, CubeError> {
    let v = CommutativeCube::new(v.clone())?;
    Ok(SkewCube(twist_unchecked(&v.0)))
}

/// The sign twist without the commutativity check, for diagnostics on cubes
/// that may fail it.
pub fn twist_unchecked(v: &Cube) -> Cube {
    Cube {
        dim: v.dim,
        vertices: v.vertices.clone(),
        edges: v
            .edges
            .iter()
            .map(|(&(x, a), m)| ((x, a), m.scale(twist_sign(x, a))))
            .collect(),
    }
}

/// One cohomological degree of a total complex.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainGroup {
    /// Quantum grading of every basis element.
    pub gradings: Vec<i32>,
    /// Summands `(X, offset, len)` in subset order.
    pub summands: Vec<(CrossingSet, usize, usize)>,
}

impl ChainGroup {
    pub fn dim(&self) -> usize {
        self.gradings.len()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainComplex {
    pub groups: BTreeMap<i32, ChainGroup>,
    /// `d^i: C^i -> C^{i+1}` as a `dim C^{i+1} × dim C^i` matrix.
    pub differentials: BTreeMap<i32, SparseMatrix>,
}

/// A basis element of `C^i` on which `d^{i+1} d^i` is nonzero.
#[derive(Debug, Error, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[error("d∘d is nonzero on basis element {column} of degree {degree}")]
pub struct DSquaredWitness {
    pub degree: i32,
    pub column: usize,
}

impl ChainComplex {
    pub fn group(&self, i: i32) -> Option<&ChainGroup> {
        self.groups.get(&i)
    }

    /// `d^i`, or a zero matrix of the right shape.
    pub fn differential(&self, i: i32) -> SparseMatrix {
        match self.differentials.get(&i) {
            Some(d) => d.clone(),
            None => SparseMatrix::zeros(
                self.groups.get(&(i + 1)).map_or(0, ChainGroup::dim),
                self.groups.get(&i).map_or(0, ChainGroup::dim),
            ),
        }
    }

    pub fn check_d_squared(&self) -> Result<(), DSquaredWitness> {
        for (&i, d) in &self.differentials {
            if let Some(next) = self.differentials.get(&(i + 1)) {
                let dd = next.mul(d);
                if let Some(column) = (0..dd.cols()).find(|&c| !dd.column(c).is_empty()) {
                    return Err(DSquaredWitness { degree: i, column });
                }
            }
        }
        Ok(())
    }

    /// Applies an invertible change of basis `P_i` to each group, replacing
    /// `d^i` by `P_{i+1} d^i P_i^{-1}`. Gradings are not tracked; callers
    /// supply grading-preserving bases.
    pub fn conjugate(&self, bases: &BTreeMap<i32, (SparseMatrix, SparseMatrix)>) -> Self {
        let mut out = self.clone();
        for (&i, d) in &self.differentials {
            let mut m = d.clone();
            if let Some((_, inv)) = bases.get(&i) {
                m = m.mul(inv);
            }
            if let Some((p, _)) = bases.get(&(i + 1)) {
                m = p.mul(&m);
            }
            out.differentials.insert(i, m);
        }
        out
    }
}

/// The total complex: `C^i = ⊕_{degree_of(X) = i} V(X)` with
/// `d^i x = Σ_{a ∉ X} ξ_a(X) x`.
pub fn total_complex<F>(w: &SkewCube, degree_of: F) -> Result<ChainComplex, CubeError>
where
    F: Fn(CrossingSet) -> i32 + Sync,
{
    assemble(&w.0, degree_of)
}

/// Assembly without the skew-commutativity precondition.
pub fn assemble<F>(cube: &Cube, degree_of: F) -> Result<ChainComplex, CubeError>
where
    F: Fn(CrossingSet) -> i32 + Sync,
{
    for x in cube.subsets() {
        for a in (0..cube.dim).filter(|&a| !x.contains(a)) {
            let jump = degree_of(x.with(a)) - degree_of(x);
            if jump != 1 {
                return Err(CubeError::DegreeJump { subset: x, a, jump });
            }
        }
    }
    cube.check_shapes()?;

    let mut groups: BTreeMap<i32, ChainGroup> = BTreeMap::new();
    let mut position: Vec<usize> = vec![0; 1 << cube.dim];
    for x in cube.subsets() {
        let g = groups.entry(degree_of(x)).or_default();
        let basis = cube.vertex(x);
        position[x.0 as usize] = g.gradings.len();
        g.summands.push((x, g.gradings.len(), basis.len()));
        g.gradings.extend_from_slice(basis);
    }

    let degrees: Vec<i32> = groups.keys().copied().collect();
    let differentials: BTreeMap<i32, SparseMatrix> = degrees
        .par_iter()
        .filter_map(|&i| {
            let target = groups.get(&(i + 1))?;
            let source = &groups[&i];
            let mut triplets = Vec::new();
            for &(x, col_off, _) in &source.summands {
                for a in (0..cube.dim).filter(|&a| !x.contains(a)) {
                    let m = &cube.edges[&(x, a)];
                    let row_off = position[x.with(a).0 as usize];
                    for (r, c, v) in m.triplets() {
                        triplets.push((row_off + r, col_off + c, v));
                    }
                }
            }
            Some((
                i,
                SparseMatrix::from_triplets(target.dim(), source.dim(), triplets),
            ))
        })
        .collect();

    Ok(ChainComplex {
        groups,
        differentials,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// A cube with one-dimensional vertices and scalar edge maps
    /// `ξ_a(X) = c_a`, which always commutes.
    fn scalar_cube(coeffs: &[i64]) -> Cube {
        let dim = coeffs.len();
        let mut edges = BTreeMap::new();
        for x in 0..1u64 << dim {
            let x = CrossingSet(x);
            for (a, &c) in coeffs.iter().enumerate() {
                if !x.contains(a) {
                    edges.insert((x, a), SparseMatrix::from_dense(&[vec![c]]));
                }
            }
        }
        Cube {
            dim,
            vertices: vec![vec![0]; 1 << dim],
            edges,
        }
    }

    #[test]
    fn twist_signs() {
        assert_eq!(twist_sign(CrossingSet::empty(), 0), 1);
        assert_eq!(twist_sign(CrossingSet::from_ids([0]), 1), -1);
        assert_eq!(twist_sign(CrossingSet::from_ids([0, 1]), 2), 1);
        assert_eq!(twist_sign(CrossingSet::from_ids([3]), 1), 1);
        // one-element index set: every sign is +1
        let w = skew_twist(&scalar_cube(&[5])).unwrap();
        assert_eq!(w.inner().edges[&(CrossingSet::empty(), 0)].get(0, 0), 5);
    }

    #[test]
    fn empty_index_set() {
        let cube = Cube {
            dim: 0,
            vertices: vec![vec![1, -1, 3]],
            edges: BTreeMap::new(),
        };
        let c = total_complex(&skew_twist(&cube).unwrap(), |x| x.len() as i32).unwrap();
        assert_eq!(c.groups.len(), 1);
        assert_eq!(c.groups[&0].dim(), 3);
        assert!(c.differentials.is_empty());
    }

    #[test]
    fn one_crossing_two_term_complex() {
        let c = total_complex(&skew_twist(&scalar_cube(&[3])).unwrap(), |x| x.len() as i32)
            .unwrap();
        assert_eq!(c.groups.keys().copied().collect::<Vec<_>>(), vec![0, 1]);
        assert_eq!(c.differential(0).to_dense(), vec![vec![3]]);
    }

    #[test]
    fn non_commuting_face_reported() {
        let mut cube = scalar_cube(&[1, 1]);
        cube.edges
            .insert((CrossingSet::from_ids([0]), 1), SparseMatrix::from_dense(&[vec![2]]));
        match skew_twist(&cube) {
            Err(CubeError::Face { subset, a, b, .. }) => {
                assert_eq!((subset, a, b), (CrossingSet::empty(), 0, 1))
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn degree_condition_enforced() {
        let w = skew_twist(&scalar_cube(&[1, 1])).unwrap();
        let err = total_complex(&w, |x| if x.contains(0) { 2 } else { 0 }).unwrap_err();
        assert!(matches!(err, CubeError::DegreeJump { .. }));
    }

    /// Random commutative cube: vertex `X` is `Z^{k}`; `ξ_a(X) = A_a`, a fixed
    /// random matrix per direction drawn from a commuting family (powers and
    /// polynomials of one matrix).
    fn commuting_cube(base: &[Vec<i64>], polys: &[(i64, i64)]) -> Cube {
        let k = base.len();
        let b = SparseMatrix::from_dense(base);
        let id = SparseMatrix::identity(k);
        let maps: Vec<SparseMatrix> = polys
            .iter()
            .map(|&(c0, c1)| id.scale(c0).add(&b.scale(c1)))
            .collect();
        let dim = polys.len();
        let mut edges = BTreeMap::new();
        for x in 0..1u64 << dim {
            let x = CrossingSet(x);
            for (a, m) in maps.iter().enumerate() {
                if !x.contains(a) {
                    edges.insert((x, a), m.clone());
                }
            }
        }
        Cube {
            dim,
            vertices: vec![vec![0; k]; 1 << dim],
            edges,
        }
    }

    proptest! {
        #[test]
        fn twisted_commutative_cubes_square_to_zero(
            base in prop::collection::vec(prop::collection::vec(-3i64..4, 3), 3),
            polys in prop::collection::vec((-2i64..3, -2i64..3), 1..=4),
        ) {
            let cube = commuting_cube(&base, &polys);
            let w = skew_twist(&cube).unwrap();
            prop_assert!(w.inner().face_failures(FaceRelation::Anticommute).is_empty());
            let c = total_complex(&w, |x| x.len() as i32).unwrap();
            prop_assert!(c.check_d_squared().is_ok());
        }
    }
}
