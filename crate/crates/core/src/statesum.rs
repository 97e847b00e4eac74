//! MOY states, their weights, and the quantum sl(n) state sum.
//!
//! A state colors every normal edge with an element of `1..=n`; at each
//! singular edge the two legs carry distinct colors and the heads carry the
//! same two colors. The two vertex weights of a singular edge are always
//! multiplied together, so all exponents stay integral.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diagram::LinkDiagram;
use crate::poly::LaurentPolynomial;
use crate::resolution::{all_resolutions, ResolvedGraph, SingularEdge};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StateError {
    #[error("state violates the singular edge at crossing {crossing}: legs {legs:?}, heads {heads:?}")]
    InvalidAtSingular {
        crossing: usize,
        legs: (u8, u8),
        heads: (u8, u8),
    },
    #[error("state has {got} colors but the graph has {expected} normal edges")]
    WrongLength { expected: usize, got: usize },
}

/// Colors of the normal edges, indexed by edge id. Colors are `1..=n`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ColoredState(pub Vec<u8>);

impl ColoredState {
    pub fn color(&self, edge: usize) -> u8 {
        self.0[edge]
    }

    pub fn legs(&self, e: &SingularEdge) -> (u8, u8) {
        (self.0[e.legs.0], self.0[e.legs.1])
    }

    pub fn heads(&self, e: &SingularEdge) -> (u8, u8) {
        (self.0[e.heads.0], self.0[e.heads.1])
    }
}

/// Local pattern of a state at one singular edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EdgePattern {
    /// Colors pass straight, left color smaller.
    StraightAscending,
    /// Colors swap sides.
    Crossed,
    /// Colors pass straight, left color larger.
    StraightDescending,
}

impl EdgePattern {
    /// Exponent of the singular-edge weight; also its degree.
    pub fn exponent(self) -> i32 {
        match self {
            EdgePattern::StraightAscending => 1,
            EdgePattern::Crossed => 0,
            EdgePattern::StraightDescending => -1,
        }
    }
}

pub fn pattern(e: &SingularEdge, s: &ColoredState) -> Result<EdgePattern, StateError> {
    let (l1, l2) = s.legs(e);
    let (h1, h2) = s.heads(e);
    let err = || StateError::InvalidAtSingular {
        crossing: e.crossing,
        legs: (l1, l2),
        heads: (h1, h2),
    };
    if l1 == l2 {
        return Err(err());
    }
    if (l1, l2) == (h1, h2) {
        Ok(if l1 < l2 {
            EdgePattern::StraightAscending
        } else {
            EdgePattern::StraightDescending
        })
    } else if (l1, l2) == (h2, h1) {
        Ok(EdgePattern::Crossed)
    } else {
        Err(err())
    }
}

pub fn validate(g: &ResolvedGraph, s: &ColoredState) -> Result<(), StateError> {
    if s.0.len() != g.normal_edges.len() {
        return Err(StateError::WrongLength {
            expected: g.normal_edges.len(),
            got: s.0.len(),
        });
    }
    for e in &g.singular_edges {
        pattern(e, s)?;
    }
    Ok(())
}

/// All valid states, sorted lexicographically by color vector.
///
/// Colors are chosen on the bottom edge of every column and propagated
/// upward; at each singular edge the only choice is straight or crossed.
pub fn enumerate_states(g: &ResolvedGraph, n: u32) -> Vec<ColoredState> {
    let n = n as u8;
    let m = g.strands;
    let mut out = Vec::new();
    if n == 0 {
        return out;
    }
    let singular: Vec<&SingularEdge> = g.singular_in_height_order().collect();
    let mut colors = vec![0u8; g.normal_edges.len()];
    let mut bottom = vec![1u8; m];
    loop {
        colors.iter_mut().for_each(|c| *c = 0);
        for (col, &e) in g.bottom_edges.iter().enumerate() {
            colors[e] = bottom[col];
        }
        sweep(&singular, 0, &mut colors, &mut out);

        // odometer over bottom colors
        let mut i = 0;
        while i < m && bottom[i] == n {
            bottom[i] = 1;
            i += 1;
        }
        if i == m {
            break;
        }
        bottom[i] += 1;
    }
    out.sort();
    out
}

fn sweep(
    singular: &[&SingularEdge],
    idx: usize,
    colors: &mut Vec<u8>,
    out: &mut Vec<ColoredState>,
) {
    let Some(e) = singular.get(idx) else {
        out.push(ColoredState(colors.clone()));
        return;
    };
    let (a, b) = (colors[e.legs.0], colors[e.legs.1]);
    debug_assert!(a != 0 && b != 0);
    if a == b {
        return;
    }
    for (h1, h2) in [(a, b), (b, a)] {
        let (e1, e2) = e.heads;
        let prev = (colors[e1], colors[e2]);
        // bottom edges are pre-colored; heads elsewhere are fresh
        if (prev.0 != 0 && prev.0 != h1) || (prev.1 != 0 && prev.1 != h2) {
            continue;
        }
        colors[e1] = h1;
        colors[e2] = h2;
        sweep(singular, idx + 1, colors, out);
        colors[e1] = prev.0;
        colors[e2] = prev.1;
    }
}

/// The weight `wt(E)` of a singular edge: `q`, `1`, or `q^{-1}`.
pub fn edge_weight(e: &SingularEdge, s: &ColoredState) -> Result<LaurentPolynomial, StateError> {
    Ok(LaurentPolynomial::monomial(1, pattern(e, s)?.exponent()))
}

/// A closed curve of the collapsed state.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColoredCircle {
    pub color: u8,
    pub rot: i32,
    pub edges: Vec<usize>,
}

/// The normal edge that follows `edge` on its colored circle.
pub fn successor(g: &ResolvedGraph, s: &ColoredState, edge: usize) -> usize {
    let e = &g.normal_edges[edge];
    let Some(site) = e.end else {
        return edge;
    };
    let sing = g
        .singular_at(site)
        .expect("normal edges end at singular edges");
    let c = s.color(edge);
    if s.color(sing.heads.0) == c {
        sing.heads.0
    } else {
        sing.heads.1
    }
}

/// Deletes every singular edge and joins each leg to the head of the same
/// color. Circles are listed by smallest member edge; members in traversal
/// order starting from that edge.
pub fn collapse(g: &ResolvedGraph, s: &ColoredState) -> Vec<ColoredCircle> {
    let mut seen = vec![false; g.normal_edges.len()];
    let mut out = Vec::new();
    for start in 0..g.normal_edges.len() {
        if seen[start] {
            continue;
        }
        let mut edges = Vec::new();
        let mut rot = 0;
        let mut e = start;
        while !seen[e] {
            seen[e] = true;
            edges.push(e);
            rot += g.normal_edges[e].closure_arcs as i32;
            e = successor(g, s, e);
        }
        out.push(ColoredCircle {
            color: s.color(start),
            rot,
            edges,
        });
    }
    out
}

/// Whitney turning number of a collapsed circle, computed from the planar
/// embedding of its edges. Column `p` sits at `x = p + 1`, crossing `t` at
/// `y = t + 1`, and the closure arc of column `p` runs around the left at
/// distance `p + 1` from the braid box. Collapsed singular edges are the
/// points midway between their two columns.
pub fn turning_number(g: &ResolvedGraph, circle: &ColoredCircle) -> i32 {
    use crate::resolution::{Level, Segment};
    let top = g.crossing_count() as f64 + 1.0;
    let y_of = |l: Level, leaving: bool| match l {
        Level::Bottom => 0.0,
        Level::Top => top,
        Level::Site(t) if leaving => t as f64 + 1.25,
        Level::Site(t) => t as f64 + 0.75,
    };
    let mut pts: Vec<(f64, f64)> = Vec::new();
    for &id in &circle.edges {
        let e = &g.normal_edges[id];
        if let Some(t) = e.start {
            let col = g.site_columns[t] as f64;
            pts.push((col + 1.5, t as f64 + 1.0));
        }
        for seg in &e.segments {
            match *seg {
                Segment::Strand { column, from, to } => {
                    let x = column as f64 + 1.0;
                    pts.push((x, y_of(from, true)));
                    pts.push((x, y_of(to, false)));
                }
                Segment::Closure { column } => {
                    let (x, r) = (column as f64 + 1.0, column as f64 + 1.0);
                    pts.push((x, top + r));
                    pts.push((-r, top + r));
                    pts.push((-r, -r));
                    pts.push((x, -r));
                }
            }
        }
    }
    pts.dedup();
    let k = pts.len();
    let mut total = 0.0;
    for i in 0..k {
        let (a, b, c) = (pts[i], pts[(i + 1) % k], pts[(i + 2) % k]);
        let d1 = (b.0 - a.0, b.1 - a.1);
        let d2 = (c.0 - b.0, c.1 - b.1);
        let cross = d1.0 * d2.1 - d1.1 * d2.0;
        let dot = d1.0 * d2.0 + d1.1 * d2.1;
        total += cross.atan2(dot);
    }
    (total / std::f64::consts::TAU).round() as i32
}

/// `Σ_C (2σ(C) − n − 1)·rot(C)` over the collapsed circles.
pub fn rotation_term(g: &ResolvedGraph, s: &ColoredState, n: u32) -> i32 {
    collapse(g, s)
        .iter()
        .map(|c| (2 * c.color as i32 - n as i32 - 1) * c.rot)
        .sum()
}

/// Sum of singular-edge weight exponents of a valid state.
pub fn weight_exponent(g: &ResolvedGraph, s: &ColoredState) -> Result<i32, StateError> {
    g.singular_edges
        .iter()
        .map(|e| pattern(e, s).map(EdgePattern::exponent))
        .sum()
}

/// `⟨G⟩_n`: sum over states of the singular-edge weights times `q^{rot(σ)}`.
pub fn graph_bracket(g: &ResolvedGraph, n: u32) -> LaurentPolynomial {
    let mut p = LaurentPolynomial::zero();
    for s in enumerate_states(g, n) {
        let w = weight_exponent(g, &s).expect("enumerated states are valid");
        p.add_term(1, w + rotation_term(g, &s, n));
    }
    p
}

/// The alternating resolution sum with the `(−1)^{#cr}` sign:
/// `q^{−n·wr} Σ_cr (−1)^{#cr} q^{N0+ − N1−} ⟨D(cr)⟩_n`.
///
/// This is invariant only up to the sign `(−1)^{#negative crossings}`; see
/// [`diagram_bracket`] for the normalized invariant.
pub fn resolution_sum(d: &LinkDiagram, n: u32) -> LaurentPolynomial {
    let mut total = LaurentPolynomial::zero();
    for (cr, g) in all_resolutions(d) {
        let sign = if cr.len() % 2 == 0 { 1 } else { -1 };
        let shift = g.counts.n0_plus as i32 - g.counts.n1_minus as i32;
        total += &graph_bracket(&g, n).shift(shift).scale(sign);
    }
    total.shift(-(n as i32) * d.writhe)
}

/// The quantum sl(n) invariant `⟨D⟩_n`.
///
/// Equals [`resolution_sum`] times `(−1)^{#negative crossings}`, i.e. each
/// resolution is weighted by `(−1)^{N1+ + N0−}`, the parity of its
/// cohomological degree.
pub fn diagram_bracket(d: &LinkDiagram, n: u32) -> LaurentPolynomial {
    let sign = if d.negative_count() % 2 == 0 { 1 } else { -1 };
    resolution_sum(d, n).scale(sign)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagram::{closure, parse_braid};
    use crate::resolution::{resolve, CrossingSet};

    type P = LaurentPolynomial;

    fn graph(s: &str, ids: &[usize]) -> ResolvedGraph {
        let d = closure(&parse_braid(s).unwrap());
        resolve(&d, CrossingSet::from_ids(ids.iter().copied())).unwrap()
    }

    /// Every raw coloring, filtered by the singular-edge constraints.
    fn brute_force_states(g: &ResolvedGraph, n: u8) -> Vec<ColoredState> {
        let k = g.normal_edges.len();
        let mut out = Vec::new();
        let total = (n as usize).pow(k as u32);
        for mut code in 0..total {
            let mut colors = vec![0u8; k];
            for c in colors.iter_mut() {
                *c = (code % n as usize) as u8 + 1;
                code /= n as usize;
            }
            let s = ColoredState(colors);
            if validate(g, &s).is_ok() {
                out.push(s);
            }
        }
        out.sort();
        out
    }

    #[test]
    fn state_counts() {
        assert_eq!(enumerate_states(&graph("B1:", &[]), 3).len(), 3);
        assert!(enumerate_states(&graph("B2: 1", &[0]), 1).is_empty());
        let states = enumerate_states(&graph("B2: 1", &[0]), 2);
        assert_eq!(states, vec![ColoredState(vec![1, 2]), ColoredState(vec![2, 1])]);
    }

    #[test]
    fn enumeration_matches_brute_force() {
        for (s, ids) in [
            ("B2: 1 1 1", &[0, 2][..]),
            ("B3: 1 -2 1", &[0][..]),
            ("B3: 1 2 1 2", &[0, 1, 3][..]),
            ("B3: -1 -2 -1", &[][..]),
        ] {
            let g = graph(s, ids);
            for n in 1..=3 {
                assert_eq!(enumerate_states(&g, n), brute_force_states(&g, n as u8));
            }
        }
    }

    #[test]
    fn singular_weights() {
        let g = graph("B3: 1 1", &[0, 1]);
        let e = &g.singular_edges[0];
        let mut colors = vec![0u8; g.normal_edges.len()];
        let mut set = |legs: (u8, u8), heads: (u8, u8)| {
            colors[e.legs.0] = legs.0;
            colors[e.legs.1] = legs.1;
            colors[e.heads.0] = heads.0;
            colors[e.heads.1] = heads.1;
            edge_weight(e, &ColoredState(colors.clone()))
        };
        assert_eq!(set((1, 2), (1, 2)).unwrap(), P::q());
        assert_eq!(set((1, 2), (2, 1)).unwrap(), P::one());
        assert_eq!(set((2, 1), (2, 1)).unwrap(), P::monomial(1, -1));
        assert!(set((1, 1), (1, 1)).is_err());
        assert!(set((1, 2), (1, 3)).is_err());
    }

    #[test]
    fn collapse_examples() {
        let g = graph("B1:", &[]);
        let circles = collapse(&g, &ColoredState(vec![2]));
        assert_eq!(circles.len(), 1);
        assert_eq!((circles[0].color, circles[0].rot), (2, 1));

        let g = graph("B2: 1", &[0]);
        let circles = collapse(&g, &ColoredState(vec![1, 2]));
        assert_eq!(circles.len(), 2);
        assert!(circles.iter().all(|c| c.rot == 1));

        // two crossed edges send each color across and back
        let g = graph("B2: 1 1", &[0, 1]);
        let states = enumerate_states(&g, 2);
        let crossed = states
            .iter()
            .find(|s| pattern(&g.singular_edges[0], s).unwrap() == EdgePattern::Crossed)
            .unwrap();
        let circles = collapse(&g, crossed);
        assert_eq!(circles.len(), 2);
        assert!(circles.iter().all(|c| c.rot == 1 && c.edges.len() == 2));

        // equal colors never meet at a singular edge, so they cannot trade
        // columns: every collapsed circle of a braid closure winds once
        let g = graph("B3: 1 2 1 2", &[0, 1, 2, 3]);
        for s in enumerate_states(&g, 3) {
            let circles = collapse(&g, &s);
            assert_eq!(circles.len(), 3);
            assert!(circles.iter().all(|c| c.rot == 1));
        }
    }

    #[test]
    fn closure_arc_rule_matches_turning_angles() {
        for (s, n) in [("B2: 1 1 1", 3), ("B3: 1 2 1 2", 3), ("B3: -1 2 -1 2", 2), ("B4: 1 2 3 -1 2", 2)] {
            let d = closure(&parse_braid(s).unwrap());
            for (_, g) in crate::resolution::all_resolutions(&d) {
                for st in enumerate_states(&g, n) {
                    for c in collapse(&g, &st) {
                        assert_eq!(turning_number(&g, &c), c.rot, "{s} {:?}", st);
                    }
                }
            }
        }
    }

    #[test]
    fn rotation_terms() {
        let g = graph("B1:", &[]);
        for a in 1..=4u8 {
            assert_eq!(rotation_term(&g, &ColoredState(vec![a]), 4), 2 * a as i32 - 5);
        }
        assert_eq!(rotation_term(&g, &ColoredState(vec![1]), 2), -1);
        let g = graph("B2: 1", &[]);
        assert_eq!(rotation_term(&g, &ColoredState(vec![1, 2]), 2), 0);
    }

    #[test]
    fn unknot_bracket_is_quantum_integer() {
        for n in 1..=5 {
            assert_eq!(graph_bracket(&graph("B1:", &[]), n), P::quantum_integer(n));
            let d = closure(&parse_braid("B1:").unwrap());
            assert_eq!(diagram_bracket(&d, n), P::quantum_integer(n));
        }
    }

    #[test]
    fn singular_graph_with_one_color_vanishes() {
        assert!(graph_bracket(&graph("B2: 1", &[0]), 1).is_zero());
    }

    #[test]
    fn digon_removal_identity() {
        // circle through one singular edge vs the circle without it
        for n in 2..=4 {
            let gamma = graph("B2: 1 1", &[0, 1]);
            let gamma_prime = graph("B2: 1 1", &[0]);
            let q2 = P::quantum_integer(2);
            assert_eq!(graph_bracket(&gamma, n), &q2 * &graph_bracket(&gamma_prime, n));
        }
    }

    #[test]
    fn one_crossing_unknots() {
        for n in 1..=4 {
            for s in ["B2: 1", "B2: -1"] {
                let d = closure(&parse_braid(s).unwrap());
                assert_eq!(diagram_bracket(&d, n), P::quantum_integer(n));
            }
            // the raw resolution sum carries the negative-crossing sign
            let d = closure(&parse_braid("B2: -1").unwrap());
            assert_eq!(resolution_sum(&d, n), -P::quantum_integer(n));
        }
    }

    #[test]
    fn two_component_unlink_at_one() {
        for n in 1..=4u32 {
            let d = closure(&parse_braid("B2: 1 -1").unwrap());
            let p = diagram_bracket(&d, n);
            assert_eq!(p, P::quantum_integer(n).pow(2));
            assert_eq!(p.eval_one(), (n * n) as i64);
        }
    }

    #[test]
    fn weights_match_vertex_products() {
        // wt(v) = q^{1/2 − π(left, right)} at each vertex; compare doubled exponents
        let pi = |a: u8, b: u8| if a > b { 1 } else { 0 };
        let g = graph("B3: 1 2 1 -2", &[0, 1, 2]);
        for s in enumerate_states(&g, 3) {
            for e in &g.singular_edges {
                let (l1, l2) = s.legs(e);
                let (h1, h2) = s.heads(e);
                let doubled = (1 - 2 * pi(l1, l2)) + (1 - 2 * pi(h1, h2));
                assert_eq!(doubled, 2 * pattern(e, &s).unwrap().exponent());
            }
        }
    }
}
