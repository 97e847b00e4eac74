//! Resolved trivalent graphs `D(cr)` of a braid closure.
//!
//! Every crossing is replaced by either a singular edge or a pair of parallel
//! normal edges. Positive crossings: 0-resolution is parallel, 1-resolution
//! singular. Negative crossings: 0-resolution singular, 1-resolution parallel.
//!
//! Normal edges never change column: they run upward from the head of one
//! singular edge to the leg of the next singular edge on the same column,
//! wrapping through the closure arc when they pass the top of the braid. A
//! column without singular edges is a single closed normal edge.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diagram::{LinkDiagram, Sign};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ResolutionError {
    #[error("crossing subset {subset:#b} refers to crossings beyond the {count} of the diagram")]
    UnknownCrossing { subset: u64, count: usize },
}

/// A subset of crossing ids, bit `i` set for crossing `i`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CrossingSet(pub u64);

impl CrossingSet {
    pub fn empty() -> Self {
        Self(0)
    }

    pub fn contains(self, i: usize) -> bool {
        self.0 >> i & 1 == 1
    }

    pub fn with(self, i: usize) -> Self {
        Self(self.0 | 1 << i)
    }

    pub fn without(self, i: usize) -> Self {
        Self(self.0 & !(1 << i))
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = usize> {
        (0..64).filter(move |&i| self.contains(i))
    }

    /// Number of elements of the set smaller than `i`.
    pub fn count_below(self, i: usize) -> usize {
        (self.0 & ((1u64 << i) - 1)).count_ones() as usize
    }

    pub fn from_ids<I: IntoIterator<Item = usize>>(ids: I) -> Self {
        ids.into_iter().fold(Self::empty(), Self::with)
    }
}

/// Vertical position on a column.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Level {
    Bottom,
    Site(usize),
    Top,
}

/// A piece of a normal edge's planar embedding.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Segment {
    Strand { column: usize, from: Level, to: Level },
    /// The closure arc joining the top of `column` to its bottom, drawn on
    /// the left of the braid.
    Closure { column: usize },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormalEdge {
    pub id: usize,
    pub column: usize,
    /// Crossing whose head this edge is; `None` for a closed column.
    pub start: Option<usize>,
    /// Crossing whose leg this edge is; `None` for a closed column.
    pub end: Option<usize>,
    pub segments: Vec<Segment>,
    pub closure_arcs: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SingularEdge {
    /// (left, right) incoming normal edges.
    pub legs: (usize, usize),
    /// (left, right) outgoing normal edges.
    pub heads: (usize, usize),
    pub crossing: usize,
    pub sign: Sign,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParallelPair {
    /// (left, right) normal edges running through the crossing site.
    pub edges: (usize, usize),
    pub crossing: usize,
    pub sign: Sign,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResolutionCounts {
    pub n0_plus: usize,
    pub n1_plus: usize,
    pub n0_minus: usize,
    pub n1_minus: usize,
}

/// What a crossing site became in a resolution.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SiteKind {
    /// Index into `singular_edges`.
    Singular(usize),
    /// Index into `parallel_pairs`.
    Parallel(usize),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResolvedGraph {
    pub strands: usize,
    pub writhe: i32,
    pub subset: CrossingSet,
    pub normal_edges: Vec<NormalEdge>,
    pub singular_edges: Vec<SingularEdge>,
    pub parallel_pairs: Vec<ParallelPair>,
    pub counts: ResolutionCounts,
    /// Indexed by crossing id.
    pub sites: Vec<SiteKind>,
    /// Column of each crossing site (left column).
    pub site_columns: Vec<usize>,
    /// For each column, the normal edge crossing the bottom of the braid.
    pub bottom_edges: Vec<usize>,
}

/// Whether crossing `sign` resolved with bit `one` is a singular edge.
pub fn is_singular(sign: Sign, one: bool) -> bool {
    match sign {
        Sign::Positive => one,
        Sign::Negative => !one,
    }
}

pub fn resolve(d: &LinkDiagram, cr: CrossingSet) -> Result<ResolvedGraph, ResolutionError> {
    let c = d.crossing_count();
    if c < 64 && cr.0 >> c != 0 {
        return Err(ResolutionError::UnknownCrossing {
            subset: cr.0,
            count: c,
        });
    }
    Ok(build(d, cr))
}

fn build(d: &LinkDiagram, cr: CrossingSet) -> ResolvedGraph {
    let m = d.strands();
    let mut counts = ResolutionCounts::default();
    let singular: Vec<bool> = d
        .crossings
        .iter()
        .map(|x| {
            let one = cr.contains(x.id);
            match (x.sign, one) {
                (Sign::Positive, false) => counts.n0_plus += 1,
                (Sign::Positive, true) => counts.n1_plus += 1,
                (Sign::Negative, false) => counts.n0_minus += 1,
                (Sign::Negative, true) => counts.n1_minus += 1,
            }
            is_singular(x.sign, one)
        })
        .collect();

    // singular crossing heights touching each column, bottom to top
    let mut events: Vec<Vec<usize>> = vec![Vec::new(); m];
    for x in &d.crossings {
        if singular[x.id] {
            events[x.column].push(x.id);
            events[x.column + 1].push(x.id);
        }
    }

    let mut normal_edges = Vec::new();
    // (column, crossing) -> edge leaving upward / arriving from below
    let mut head_of = std::collections::HashMap::new();
    let mut leg_of = std::collections::HashMap::new();
    let mut bottom_edges = vec![0; m];
    for (col, ev) in events.iter().enumerate() {
        if ev.is_empty() {
            let id = normal_edges.len();
            normal_edges.push(NormalEdge {
                id,
                column: col,
                start: None,
                end: None,
                segments: vec![
                    Segment::Strand {
                        column: col,
                        from: Level::Bottom,
                        to: Level::Top,
                    },
                    Segment::Closure { column: col },
                ],
                closure_arcs: 1,
            });
            bottom_edges[col] = id;
            continue;
        }
        for (i, &from) in ev.iter().enumerate() {
            let id = normal_edges.len();
            let wraps = i + 1 == ev.len();
            let to = if wraps { ev[0] } else { ev[i + 1] };
            let segments = if wraps {
                vec![
                    Segment::Strand {
                        column: col,
                        from: Level::Site(from),
                        to: Level::Top,
                    },
                    Segment::Closure { column: col },
                    Segment::Strand {
                        column: col,
                        from: Level::Bottom,
                        to: Level::Site(to),
                    },
                ]
            } else {
                vec![Segment::Strand {
                    column: col,
                    from: Level::Site(from),
                    to: Level::Site(to),
                }]
            };
            normal_edges.push(NormalEdge {
                id,
                column: col,
                start: Some(from),
                end: Some(to),
                segments,
                closure_arcs: wraps as u32,
            });
            head_of.insert((col, from), id);
            leg_of.insert((col, to), id);
            if wraps {
                bottom_edges[col] = id;
            }
        }
    }

    // edge occupying a column just above a given height
    let edge_above = |col: usize, height: usize| -> usize {
        let ev = &events[col];
        if ev.is_empty() {
            return bottom_edges[col];
        }
        match ev.iter().rposition(|&h| h <= height) {
            Some(i) => head_of[&(col, ev[i])],
            None => bottom_edges[col],
        }
    };

    let mut singular_edges = Vec::new();
    let mut parallel_pairs = Vec::new();
    let mut sites = Vec::with_capacity(d.crossing_count());
    for x in &d.crossings {
        let (l, r) = x.columns();
        if singular[x.id] {
            sites.push(SiteKind::Singular(singular_edges.len()));
            singular_edges.push(SingularEdge {
                legs: (leg_of[&(l, x.id)], leg_of[&(r, x.id)]),
                heads: (head_of[&(l, x.id)], head_of[&(r, x.id)]),
                crossing: x.id,
                sign: x.sign,
            });
        } else {
            sites.push(SiteKind::Parallel(parallel_pairs.len()));
            parallel_pairs.push(ParallelPair {
                edges: (edge_above(l, x.height), edge_above(r, x.height)),
                crossing: x.id,
                sign: x.sign,
            });
        }
    }

    ResolvedGraph {
        strands: m,
        writhe: d.writhe,
        subset: cr,
        normal_edges,
        singular_edges,
        parallel_pairs,
        counts,
        sites,
        site_columns: d.crossings.iter().map(|x| x.column).collect(),
        bottom_edges,
    }
}

impl ResolvedGraph {
    pub fn crossing_count(&self) -> usize {
        self.sites.len()
    }

    pub fn singular_at(&self, crossing: usize) -> Option<&SingularEdge> {
        match self.sites.get(crossing)? {
            SiteKind::Singular(i) => Some(&self.singular_edges[*i]),
            SiteKind::Parallel(_) => None,
        }
    }

    pub fn parallel_at(&self, crossing: usize) -> Option<&ParallelPair> {
        match self.sites.get(crossing)? {
            SiteKind::Parallel(i) => Some(&self.parallel_pairs[*i]),
            SiteKind::Singular(_) => None,
        }
    }

    /// Singular edges in crossing (height) order.
    pub fn singular_in_height_order(&self) -> impl Iterator<Item = &SingularEdge> {
        self.sites.iter().filter_map(|s| match s {
            SiteKind::Singular(i) => Some(&self.singular_edges[*i]),
            SiteKind::Parallel(_) => None,
        })
    }

    /// The normal edge on `column` just above crossing height `height`.
    pub fn edge_above(&self, column: usize, height: usize) -> usize {
        let mut edge = self.bottom_edges[column];
        for (id, site) in self.sites.iter().enumerate().take(height + 1) {
            if let SiteKind::Singular(i) = site {
                let s = &self.singular_edges[*i];
                let col = self.site_columns[id];
                if col == column {
                    edge = s.heads.0;
                } else if col + 1 == column {
                    edge = s.heads.1;
                }
            }
        }
        edge
    }

    /// The shift `N0+ - N1- - n·wr` applied to every grading of `D(cr)`.
    pub fn grading_shift(&self, n: u32) -> i32 {
        self.counts.n0_plus as i32 - self.counts.n1_minus as i32 - n as i32 * self.writhe
    }
}

/// All `2^c` resolutions in binary-counter order over the crossing ids.
pub fn all_resolutions(
    d: &LinkDiagram,
) -> impl Iterator<Item = (CrossingSet, ResolvedGraph)> + '_ {
    let c = d.crossing_count();
    (0..1u64 << c).map(move |mask| {
        let cr = CrossingSet(mask);
        (cr, build(d, cr))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagram::{closure, parse_braid};

    fn diagram(s: &str) -> LinkDiagram {
        closure(&parse_braid(s).unwrap())
    }

    #[test]
    fn unknot_no_crossings() {
        let g = resolve(&diagram("B1:"), CrossingSet::empty()).unwrap();
        assert_eq!(g.normal_edges.len(), 1);
        assert!(g.singular_edges.is_empty());
        assert_eq!(g.normal_edges[0].closure_arcs, 1);
    }

    #[test]
    fn positive_crossing_resolutions() {
        let d = diagram("B2: 1");
        let g = resolve(&d, CrossingSet::from_ids([0])).unwrap();
        assert_eq!(g.singular_edges.len(), 1);
        assert!(g.parallel_pairs.is_empty());
        assert_eq!(g.counts.n1_plus, 1);
        let e = &g.singular_edges[0];
        // each column closes up on itself: leg and head are the same edge
        assert_eq!(e.legs, e.heads);
        assert_ne!(e.legs.0, e.legs.1);

        let g = resolve(&d, CrossingSet::empty()).unwrap();
        assert_eq!(g.parallel_pairs.len(), 1);
        assert_eq!(g.counts.n0_plus, 1);
        assert!(g.singular_edges.is_empty());
    }

    #[test]
    fn negative_crossing_resolutions() {
        let d = diagram("B2: -1");
        let g = resolve(&d, CrossingSet::empty()).unwrap();
        assert_eq!(g.singular_edges.len(), 1);
        assert_eq!(g.counts.n0_minus, 1);
        let g = resolve(&d, CrossingSet::from_ids([0])).unwrap();
        assert_eq!(g.parallel_pairs.len(), 1);
        assert_eq!(g.counts.n1_minus, 1);
    }

    #[test]
    fn unknown_crossing_rejected() {
        let d = diagram("B2: 1");
        assert!(resolve(&d, CrossingSet::from_ids([1])).is_err());
    }

    #[test]
    fn enumeration_order_and_size() {
        assert_eq!(all_resolutions(&diagram("B1:")).count(), 1);
        assert_eq!(all_resolutions(&diagram("B2: 1 1 1")).count(), 8);
        let subsets: Vec<u64> = all_resolutions(&diagram("B2: 1 -1"))
            .map(|(cr, _)| cr.0)
            .collect();
        assert_eq!(subsets, vec![0b00, 0b01, 0b10, 0b11]);
    }

    fn check_structure(g: &ResolvedGraph, d: &LinkDiagram) {
        let c = &g.counts;
        assert_eq!(c.n0_plus + c.n1_plus, d.positive_count());
        assert_eq!(c.n0_minus + c.n1_minus, d.negative_count());
        assert_eq!(
            g.singular_edges.len() + g.parallel_pairs.len(),
            d.crossing_count()
        );
        assert_eq!(g.singular_edges.len(), c.n1_plus + c.n0_minus);
        // every edge is a head exactly once and a leg exactly once, unless closed
        let mut as_head = vec![0; g.normal_edges.len()];
        let mut as_leg = vec![0; g.normal_edges.len()];
        for s in &g.singular_edges {
            as_leg[s.legs.0] += 1;
            as_leg[s.legs.1] += 1;
            as_head[s.heads.0] += 1;
            as_head[s.heads.1] += 1;
        }
        for e in &g.normal_edges {
            let closed = e.start.is_none();
            assert_eq!(as_head[e.id], (!closed) as i32);
            assert_eq!(as_leg[e.id], (!closed) as i32);
        }
        // closure arcs: exactly one per column
        let arcs: u32 = g.normal_edges.iter().map(|e| e.closure_arcs).sum();
        assert_eq!(arcs as usize, g.strands);
        for p in &g.parallel_pairs {
            assert_ne!(p.edges.0, p.edges.1);
        }
    }

    #[test]
    fn structural_invariants_on_small_braids() {
        for s in ["B2: 1 1 1", "B3: 1 -2 1 -2", "B3: 1 2 1", "B4: 1 3 -2 1", "B2: 1 -1"] {
            let d = diagram(s);
            for (_, g) in all_resolutions(&d) {
                check_structure(&g, &d);
                for col in 0..g.strands {
                    for h in 0..d.crossing_count() {
                        let e = g.edge_above(col, h);
                        assert_eq!(g.normal_edges[e].column, col);
                    }
                }
            }
        }
    }

    #[test]
    fn crossing_set_helpers() {
        let s = CrossingSet::from_ids([0, 2, 5]);
        assert_eq!(s.len(), 3);
        assert_eq!(s.count_below(5), 2);
        assert_eq!(s.count_below(0), 0);
        assert_eq!(s.iter().collect::<Vec<_>>(), vec![0, 2, 5]);
        assert!(!s.with(1).without(1).contains(1));
    }
}
