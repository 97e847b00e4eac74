//! The colored graph space `C(G)`: the free abelian group on the states of a
//! resolved graph, graded by `gr`.

use std::collections::HashMap;

use crate::poly::LaurentPolynomial;
use crate::resolution::{ResolvedGraph, SingularEdge};
use crate::statesum::{enumerate_states, pattern, rotation_term, validate, ColoredState, StateError};

/// Degree of a state at a singular edge: `+1`, `0` or `−1`.
pub fn deg_singular(e: &SingularEdge, s: &ColoredState) -> Result<i32, StateError> {
    Ok(pattern(e, s)?.exponent())
}

/// `gr(σ)` without the global shift `N0+ − N1− − n·wr`.
pub fn local_grade(g: &ResolvedGraph, s: &ColoredState, n: u32) -> Result<i32, StateError> {
    validate(g, s)?;
    let edges: i32 = g
        .singular_edges
        .iter()
        .map(|e| deg_singular(e, s))
        .sum::<Result<i32, _>>()?;
    Ok(edges + rotation_term(g, s, n))
}

/// `gr(σ) = N0+ − N1− − n·wr + Σ_E deg(E) + Σ_C (2σ(C) − n − 1)·rot(C)`.
pub fn grade(g: &ResolvedGraph, s: &ColoredState, n: u32) -> Result<i32, StateError> {
    Ok(local_grade(g, s, n)? + g.grading_shift(n))
}

#[derive(Clone, Debug)]
pub struct GradedStateModule {
    pub graph: ResolvedGraph,
    pub n: u32,
    pub basis: Vec<ColoredState>,
    /// Unshifted gradings, parallel to `basis`.
    local: Vec<i32>,
    /// The shift `{k}` applied to every basis element.
    pub shift: i32,
    index: HashMap<ColoredState, usize>,
}

impl GradedStateModule {
    pub fn new(graph: ResolvedGraph, n: u32) -> Self {
        let basis = enumerate_states(&graph, n);
        let local = basis
            .iter()
            .map(|s| local_grade(&graph, s, n).expect("enumerated states are valid"))
            .collect();
        let index = basis.iter().cloned().enumerate().map(|(i, s)| (s, i)).collect();
        let shift = graph.grading_shift(n);
        Self {
            graph,
            n,
            basis,
            local,
            shift,
            index,
        }
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn index_of(&self, s: &ColoredState) -> Option<usize> {
        self.index.get(s).copied()
    }

    pub fn grading(&self, i: usize) -> i32 {
        self.local[i] + self.shift
    }

    pub fn gradings(&self) -> Vec<i32> {
        self.local.iter().map(|g| g + self.shift).collect()
    }

    /// `Σ_σ q^{gr(σ)}`.
    pub fn graded_dimension(&self) -> LaurentPolynomial {
        let mut p = LaurentPolynomial::zero();
        for i in 0..self.dim() {
            p.add_term(1, self.grading(i));
        }
        p
    }
}
