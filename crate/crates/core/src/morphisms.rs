//! The structure morphisms `χ0` (parallel to singular, positive crossings)
//! and `χ1` (singular to parallel, negative crossings), built from colour
//! exchanges along distinguished circles, and the cube they span.
//!
//! States are handled through their fine colouring: one colour per column
//! on each slot between consecutive crossing heights. Every collapsed circle
//! of a braid closure meets each height exactly once, so the two paths of a
//! distinguished circle run over the same window of heights and an exchange
//! swaps two colours on that window.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cube::{assemble, twist_unchecked, ChainComplex, CommutativeCube, Cube, CubeError, FaceRelation};
use crate::diagram::{LinkDiagram, Sign};
use crate::graphspace::{grade, GradedStateModule};
use crate::matrix::SparseMatrix;
use crate::resolution::{resolve, CrossingSet, ResolvedGraph, SiteKind};
use crate::statesum::ColoredState;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MorphismError {
    #[error("crossing {0} is not a singular edge in the source resolution")]
    NotSingular(usize),
    #[error("crossing {0} is not a parallel pair in the source resolution")]
    NotParallel(usize),
    #[error("crossing {crossing} is {found:?}-resolved in the target resolution")]
    TargetMismatch { crossing: usize, found: SiteKind },
    #[error("basis index {0} out of range")]
    BadIndex(usize),
}

/// Readings of the side conditions on distinguished circles.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MorphismRules {
    /// Colour exchanges along distinguished circles.
    pub exchanges: bool,
    /// The simple-loop recolouring terms.
    pub loops: bool,
    /// Allow a circle whose source and target coincide.
    pub closed_windows: bool,
    /// Other circles may meet the paths only at degree-0 singular edges.
    pub crossed_intersections: bool,
    /// Source and target must not be positive type.
    pub endpoints_not_positive: bool,
    /// How the exchange must move the degrees of source and target.
    pub endpoint_shift: EndpointShift,
    /// Degree the anchor singular edge must reach when it is an endpoint.
    pub anchor_endpoint: Option<i32>,
    /// `χ1` on a degree −1 edge also sums exchange terms.
    pub exchanges_at_negative: bool,
    /// Coefficients count how many circles produce a term (otherwise 1).
    pub multiplicity: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EndpointShift {
    /// No condition.
    Any,
    /// +1 for each endpoint role, so +2 when source and target coincide.
    PerRole,
    /// +1, whether or not source and target coincide.
    Once,
}

impl MorphismRules {
    /// Conditions taken word for word: the anchor drops to −1, endpoints
    /// rise once, `χ1` is the identity on degree −1 states.
    pub fn literal() -> Self {
        Self {
            exchanges: true,
            loops: true,
            closed_windows: true,
            crossed_intersections: true,
            endpoints_not_positive: true,
            endpoint_shift: EndpointShift::Once,
            anchor_endpoint: Some(-1),
            exchanges_at_negative: false,
            multiplicity: true,
        }
    }

    /// Only the gr-preserving identity terms, no exchange or loop.
    pub fn direct() -> Self {
        Self {
            exchanges: false,
            loops: false,
            ..Self::literal()
        }
    }
}

/// The reading that agrees with Khovanov's maps at `n = 2` on every
/// two-strand closure: the anchor rises to +1 and every endpoint role adds
/// one.
impl Default for MorphismRules {
    fn default() -> Self {
        Self {
            endpoint_shift: EndpointShift::PerRole,
            anchor_endpoint: Some(1),
            exchanges_at_negative: true,
            multiplicity: false,
            ..Self::literal()
        }
    }
}

/// A singular edge, or the dotted circle drawn around the parallel pair that
/// is about to become singular.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Junction {
    Singular(usize),
    Dotted(usize),
}

impl Junction {
    pub fn crossing(self) -> usize {
        match self {
            Junction::Singular(c) | Junction::Dotted(c) => c,
        }
    }
}

/// Colours of every column on every slot. Slot `k` lies just below crossing
/// `k`; slot 0 also holds the closure arcs.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FineColoring(pub Vec<Vec<u8>>);

/// Two coloured paths from `source` to `target` on the two circles leaving
/// the source.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DistinguishedCircle {
    pub source: Junction,
    pub target: Junction,
    /// Slots `(row, column)` of each path, in travel order.
    pub paths: (Vec<(usize, usize)>, Vec<(usize, usize)>),
    /// Colours of the two paths before the exchange.
    pub colors: (u8, u8),
    /// Singular edges met by both paths.
    pub shared: Vec<usize>,
    /// Singular edges met by one path only.
    pub touched: Vec<usize>,
}

impl DistinguishedCircle {
    pub fn meets(&self, crossing: usize) -> bool {
        self.source.crossing() == crossing
            || self.target.crossing() == crossing
            || self.shared.contains(&crossing)
            || self.touched.contains(&crossing)
    }

    /// Endpoints that are real singular edges.
    fn singular_endpoints(&self) -> Vec<usize> {
        let mut out = Vec::new();
        for j in [self.source, self.target] {
            if let Junction::Singular(c) = j {
                if !out.contains(&c) {
                    out.push(c);
                }
            }
        }
        out
    }
}

/// `Σ coefficient · basis[index]`, sorted by index, no zero coefficients.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormalSum {
    pub terms: Vec<(i64, usize)>,
}

impl FormalSum {
    fn from_map(m: BTreeMap<usize, i64>) -> Self {
        Self {
            terms: m.into_iter().filter(|&(_, c)| c != 0).map(|(i, c)| (c, i)).collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
}

fn rows(g: &ResolvedGraph) -> usize {
    g.crossing_count().max(1)
}

fn above(g: &ResolvedGraph, k: usize) -> usize {
    (k + 1) % rows(g)
}

/// The normal edge holding each slot.
pub fn slot_edges(g: &ResolvedGraph) -> Vec<Vec<usize>> {
    (0..rows(g))
        .map(|k| {
            (0..g.strands)
                .map(|p| {
                    if k == 0 {
                        g.bottom_edges[p]
                    } else {
                        g.edge_above(p, k - 1)
                    }
                })
                .collect()
        })
        .collect()
}

pub fn fine(g: &ResolvedGraph, s: &ColoredState) -> FineColoring {
    fine_in(&slot_edges(g), s)
}

fn fine_in(slots: &[Vec<usize>], s: &ColoredState) -> FineColoring {
    FineColoring(slots.iter().map(|row| row.iter().map(|&e| s.color(e)).collect()).collect())
}

/// The state of `g` with this fine colouring, if every edge is monochrome.
pub fn coarse(g: &ResolvedGraph, f: &FineColoring) -> Option<ColoredState> {
    coarse_in(g, &slot_edges(g), f)
}

fn coarse_in(g: &ResolvedGraph, slots: &[Vec<usize>], f: &FineColoring) -> Option<ColoredState> {
    let mut colors = vec![0u8; g.normal_edges.len()];
    for (k, row) in slots.iter().enumerate() {
        for (p, &e) in row.iter().enumerate() {
            let c = f.0[k][p];
            if colors[e] == 0 {
                colors[e] = c;
            } else if colors[e] != c {
                return None;
            }
        }
    }
    Some(ColoredState(colors))
}

/// Degree of a site read as a singular edge in a fine colouring, or `None`
/// if the colours are not a valid singular pattern.
pub fn site_degree(g: &ResolvedGraph, f: &FineColoring, k: usize) -> Option<i32> {
    let l = g.site_columns[k];
    let legs = (f.0[k][l], f.0[k][l + 1]);
    let up = above(g, k);
    let heads = (f.0[up][l], f.0[up][l + 1]);
    if legs.0 == legs.1 {
        None
    } else if legs == heads {
        Some(if legs.0 < legs.1 { 1 } else { -1 })
    } else if legs == (heads.1, heads.0) {
        Some(0)
    } else {
        None
    }
}

fn is_straight(g: &ResolvedGraph, f: &FineColoring, k: usize) -> bool {
    let l = g.site_columns[k];
    let up = above(g, k);
    f.0[k][l] == f.0[up][l] && f.0[k][l + 1] == f.0[up][l + 1]
}

/// Junctions of `g` for a morphism anchored at `anchor`.
fn junctions(g: &ResolvedGraph, anchor: usize) -> Vec<Junction> {
    (0..g.crossing_count())
        .filter_map(|k| match g.sites[k] {
            SiteKind::Singular(_) => Some(Junction::Singular(k)),
            SiteKind::Parallel(_) if k == anchor => Some(Junction::Dotted(k)),
            SiteKind::Parallel(_) => None,
        })
        .collect()
}

/// Follows the two circles leaving `s` up to `t`, recording the singular
/// edges they meet. `None` if the colours agree or the circles do not both
/// reach `t`.
pub fn trace(g: &ResolvedGraph, f: &FineColoring, s: Junction, t: Junction, anchor: usize) -> Option<DistinguishedCircle> {
    let (sk, tk) = (s.crossing(), t.crossing());
    let l = g.site_columns[sk];
    let mut pos = [l, l + 1];
    let mut k = above(g, sk);
    let colors = (f.0[k][l], f.0[k][l + 1]);
    if colors.0 == colors.1 {
        return None;
    }
    if !arrives(g, f, pos, k, tk) {
        return None;
    }
    let cap = rows(g) + 1;
    let mut paths = (Vec::with_capacity(cap), Vec::with_capacity(cap));
    let mut shared = Vec::new();
    let mut touched = Vec::new();
    loop {
        paths.0.push((k, pos[0]));
        paths.1.push((k, pos[1]));
        if k == tk {
            break;
        }
        let singular = matches!(g.sites[k], SiteKind::Singular(_));
        if singular || k == anchor {
            let lk = g.site_columns[k];
            match pos.iter().filter(|&&p| p == lk || p == lk + 1).count() {
                0 => {}
                1 => touched.push(k),
                _ => shared.push(k),
            }
            if singular && site_degree(g, f, k) == Some(0) {
                for p in pos.iter_mut() {
                    if *p == lk {
                        *p = lk + 1;
                    } else if *p == lk + 1 {
                        *p = lk;
                    }
                }
            }
        }
        k = above(g, k);
    }
    let lt = g.site_columns[tk];
    let mut arrived = pos;
    arrived.sort_unstable();
    if arrived != [lt, lt + 1] {
        return None;
    }
    Some(DistinguishedCircle {
        source: s,
        target: t,
        paths,
        colors,
        shared,
        touched,
    })
}

/// Whether two paths starting at `pos` on slot `k` end on the legs of `tk`.
fn arrives(g: &ResolvedGraph, f: &FineColoring, mut pos: [usize; 2], mut k: usize, tk: usize) -> bool {
    while k != tk {
        if matches!(g.sites[k], SiteKind::Singular(_)) && site_degree(g, f, k) == Some(0) {
            let lk = g.site_columns[k];
            for p in pos.iter_mut() {
                if *p == lk {
                    *p = lk + 1;
                } else if *p == lk + 1 {
                    *p = lk;
                }
            }
        }
        k = above(g, k);
    }
    let lt = g.site_columns[tk];
    pos.sort_unstable();
    pos == [lt, lt + 1]
}

/// Singular edges met by both paths and by one path, as bit sets, for a
/// window that arrives.
fn walk(g: &ResolvedGraph, f: &FineColoring, s: Junction, t: Junction, anchor: usize) -> Option<(u64, u64)> {
    let (sk, tk) = (s.crossing(), t.crossing());
    let l = g.site_columns[sk];
    let mut pos = [l, l + 1];
    let mut k = above(g, sk);
    if f.0[k][l] == f.0[k][l + 1] {
        return None;
    }
    let (mut shared, mut touched) = (0u64, 0u64);
    while k != tk {
        let singular = matches!(g.sites[k], SiteKind::Singular(_));
        if singular || k == anchor {
            let lk = g.site_columns[k];
            match pos.iter().filter(|&&p| p == lk || p == lk + 1).count() {
                0 => {}
                1 => touched |= 1 << k,
                _ => shared |= 1 << k,
            }
            if singular && site_degree(g, f, k) == Some(0) {
                for p in pos.iter_mut() {
                    if *p == lk {
                        *p = lk + 1;
                    } else if *p == lk + 1 {
                        *p = lk;
                    }
                }
            }
        }
        k = above(g, k);
    }
    let lt = g.site_columns[tk];
    pos.sort_unstable();
    (pos == [lt, lt + 1]).then_some((shared, touched))
}

#[cfg(test)]
fn bits(v: &[usize]) -> u64 {
    v.iter().fold(0, |m, &k| m | 1 << k)
}

/// The side conditions that do not depend on the exchanged colouring.
#[cfg(test)]
fn admissible(g: &ResolvedGraph, f: &FineColoring, c: &DistinguishedCircle, anchor: usize, rules: &MorphismRules) -> bool {
    admissible_parts(g, f, (c.source, c.target), (bits(&c.shared), bits(&c.touched)), anchor, rules)
}

fn admissible_parts(
    g: &ResolvedGraph,
    f: &FineColoring,
    (source, target): (Junction, Junction),
    (shared, touched): (u64, u64),
    anchor: usize,
    rules: &MorphismRules,
) -> bool {
    let a = 1u64 << anchor;
    if source == target && !rules.closed_windows {
        return false;
    }
    if shared & !a != 0 {
        return false;
    }
    if rules.crossed_intersections {
        let mut rest = touched & !a;
        while rest != 0 {
            let k = rest.trailing_zeros() as usize;
            if site_degree(g, f, k) != Some(0) {
                return false;
            }
            rest &= rest - 1;
        }
    }
    if rules.endpoints_not_positive {
        let positive = |j: Junction| match j {
            Junction::Singular(k) if k != anchor => site_degree(g, f, k) == Some(1),
            _ => false,
        };
        if positive(source) || positive(target) {
            return false;
        }
    }
    source.crossing() == anchor || target.crossing() == anchor || (shared | touched) & a != 0
}

/// Distinguished circles of `σ` that pass through the anchor crossing.
pub fn find_distinguished(
    g: &ResolvedGraph,
    s: &ColoredState,
    anchor: usize,
    rules: &MorphismRules,
) -> Vec<DistinguishedCircle> {
    distinguished_in(g, &fine(g, s), anchor, rules)
}

fn distinguished_in(g: &ResolvedGraph, f: &FineColoring, anchor: usize, rules: &MorphismRules) -> Vec<DistinguishedCircle> {
    if g.crossing_count() == 0 {
        return Vec::new();
    }
    let js = junctions(g, anchor);
    let mut out = Vec::new();
    for &src in &js {
        for &tgt in &js {
            // walk first, so rejected windows never allocate
            let Some(masks) = walk(g, f, src, tgt, anchor) else { continue };
            if admissible_parts(g, f, (src, tgt), masks, anchor, rules) {
                out.extend(trace(g, f, src, tgt, anchor));
            }
        }
    }
    out
}

/// Every pair of paths between junctions, before any side condition.
pub fn all_windows(g: &ResolvedGraph, f: &FineColoring, anchor: usize) -> Vec<DistinguishedCircle> {
    if g.crossing_count() == 0 {
        return Vec::new();
    }
    let js = junctions(g, anchor);
    let mut out = Vec::new();
    for &src in &js {
        for &tgt in &js {
            out.extend(trace(g, f, src, tgt, anchor));
        }
    }
    out
}

/// Swaps the two colours along the paths of the circle.
pub fn color_exchange(g: &ResolvedGraph, s: &ColoredState, circle: &DistinguishedCircle) -> FineColoring {
    exchange(&fine(g, s), circle)
}

fn exchange(f: &FineColoring, circle: &DistinguishedCircle) -> FineColoring {
    // slot by slot, so a second exchange undoes the first
    let mut out = f.clone();
    for (&(k, p), &(k1, p1)) in circle.paths.0.iter().zip(&circle.paths.1) {
        out.0[k][p] = f.0[k1][p1];
        out.0[k1][p1] = f.0[k][p];
    }
    out
}

/// Whether the exchanged colouring changes singular-edge degrees only as
/// allowed.
fn degrees_ok(
    g: &ResolvedGraph,
    before: &FineColoring,
    after: &FineColoring,
    circle: &DistinguishedCircle,
    anchor: usize,
    rules: &MorphismRules,
) -> bool {
    let endpoints = circle.singular_endpoints();
    let roles = |k: usize| [circle.source, circle.target].iter().filter(|j| j.crossing() == k).count() as i32;
    for e in &g.singular_edges {
        let k = e.crossing;
        let old = site_degree(g, before, k);
        let new = site_degree(g, after, k);
        if k == anchor {
            if endpoints.contains(&k) && rules.anchor_endpoint.is_some() && new != rules.anchor_endpoint {
                return false;
            }
            continue;
        }
        if endpoints.contains(&k) {
            let (Some(old), Some(new)) = (old, new) else { return false };
            let ok = match rules.endpoint_shift {
                EndpointShift::Any => true,
                EndpointShift::PerRole => new == old + roles(k),
                EndpointShift::Once => new == old + 1,
            };
            if !ok {
                return false;
            }
            continue;
        }
        if new != old {
            return false;
        }
    }
    true
}

/// Columns at the anchor that form a simple loop: no singular edge other
/// than the anchor itself on that column.
fn loop_columns(g: &ResolvedGraph, anchor: usize) -> Vec<usize> {
    let l = g.site_columns[anchor];
    [l, l + 1]
        .into_iter()
        .filter(|&p| {
            g.singular_edges
                .iter()
                .all(|e| e.crossing == anchor || (g.site_columns[e.crossing] != p && g.site_columns[e.crossing] + 1 != p))
        })
        .collect()
}

fn recolor_column(f: &FineColoring, p: usize, c: u8) -> FineColoring {
    let mut out = f.clone();
    for row in out.0.iter_mut() {
        row[p] = c;
    }
    out
}

struct Edge<'a> {
    src: &'a GradedStateModule,
    dst: &'a GradedStateModule,
    src_slots: Vec<Vec<usize>>,
    dst_slots: Vec<Vec<usize>>,
    anchor: usize,
    rules: &'a MorphismRules,
}

impl<'a> Edge<'a> {
    fn new(src: &'a GradedStateModule, dst: &'a GradedStateModule, anchor: usize, rules: &'a MorphismRules) -> Self {
        Self {
            src,
            dst,
            src_slots: slot_edges(&src.graph),
            dst_slots: slot_edges(&dst.graph),
            anchor,
            rules,
        }
    }

    /// Adds the target state of a fine colouring, if it is a gr-preserving
    /// basis element of the target module.
    fn emit(&self, f: &FineColoring, gr: i32, acc: &mut BTreeMap<usize, i64>, seen: &mut Vec<usize>) {
        let Some(state) = coarse_in(&self.dst.graph, &self.dst_slots, f) else {
            return;
        };
        let Some(idx) = self.dst.index_of(&state) else {
            return;
        };
        if self.dst.grading(idx) != gr {
            return;
        }
        if !self.rules.multiplicity && seen.contains(&idx) {
            return;
        }
        seen.push(idx);
        *acc.entry(idx).or_insert(0) += 1;
    }

    fn exchange_terms(&self, before: &FineColoring, gr: i32, acc: &mut BTreeMap<usize, i64>, seen: &mut Vec<usize>, ok: impl Fn(&FineColoring) -> bool) {
        if !self.rules.exchanges {
            return;
        }
        let g = &self.src.graph;
        for c in distinguished_in(g, before, self.anchor, self.rules) {
            let after = exchange(before, &c);
            if degrees_ok(g, before, &after, &c, self.anchor, self.rules) && ok(&after) {
                self.emit(&after, gr, acc, seen);
            }
        }
    }

    fn loop_terms(&self, before: &FineColoring, gr: i32, acc: &mut BTreeMap<usize, i64>, seen: &mut Vec<usize>) {
        if !self.rules.loops {
            return;
        }
        let g = &self.src.graph;
        for p in loop_columns(g, self.anchor) {
            let current = before.0[0][p];
            for c in (1..=self.src.n as u8).filter(|&c| c != current) {
                self.emit(&recolor_column(before, p, c), gr, acc, seen);
            }
        }
    }
}

fn check_target(dst: &ResolvedGraph, a: usize, singular: bool) -> Result<(), MorphismError> {
    let found = dst.sites.get(a).copied().ok_or(MorphismError::NotParallel(a))?;
    match (found, singular) {
        (SiteKind::Singular(_), true) | (SiteKind::Parallel(_), false) => Ok(()),
        _ => Err(MorphismError::TargetMismatch { crossing: a, found }),
    }
}

impl Edge<'_> {
    fn chi1_at(&self, idx: usize) -> FormalSum {
        let (g, a) = (&self.src.graph, self.anchor);
        let f = fine_in(&self.src_slots, &self.src.basis[idx]);
        let gr = self.src.grading(idx);
        let deg = site_degree(g, &f, a).expect("valid state");
        let mut acc = BTreeMap::new();
        let mut seen = Vec::new();
        if deg == -1 {
            self.emit(&f, gr, &mut acc, &mut seen);
            if self.rules.exchanges_at_negative {
                self.exchange_terms(&f, gr, &mut acc, &mut seen, |after| is_straight(g, after, a));
            }
        } else {
            self.exchange_terms(&f, gr, &mut acc, &mut seen, |after| is_straight(g, after, a));
            if deg == 1 {
                self.loop_terms(&f, gr, &mut acc, &mut seen);
            }
        }
        FormalSum::from_map(acc)
    }

    fn chi0_at(&self, idx: usize) -> FormalSum {
        let g = &self.src.graph;
        let f = fine_in(&self.src_slots, &self.src.basis[idx]);
        let gr = self.src.grading(idx);
        let a = self.anchor;
        let l = g.site_columns[a];
        let (i, j) = (f.0[a][l], f.0[a][l + 1]);
        let mut acc = BTreeMap::new();
        let mut seen = Vec::new();
        if i < j {
            self.emit(&f, gr, &mut acc, &mut seen);
        } else {
            self.exchange_terms(&f, gr, &mut acc, &mut seen, |_| true);
            self.loop_terms(&f, gr, &mut acc, &mut seen);
        }
        FormalSum::from_map(acc)
    }
}

fn chi1_edge<'a>(
    src: &'a GradedStateModule,
    dst: &'a GradedStateModule,
    a: usize,
    rules: &'a MorphismRules,
) -> Result<Edge<'a>, MorphismError> {
    if src.graph.singular_at(a).is_none() {
        return Err(MorphismError::NotSingular(a));
    }
    check_target(&dst.graph, a, false)?;
    Ok(Edge::new(src, dst, a, rules))
}

fn chi0_edge<'a>(
    src: &'a GradedStateModule,
    dst: &'a GradedStateModule,
    a: usize,
    rules: &'a MorphismRules,
) -> Result<Edge<'a>, MorphismError> {
    if src.graph.parallel_at(a).is_none() {
        return Err(MorphismError::NotParallel(a));
    }
    check_target(&dst.graph, a, true)?;
    Ok(Edge::new(src, dst, a, rules))
}

/// `χ1` on one basis element of a resolution where `a` is singular.
pub fn chi1(
    src: &GradedStateModule,
    dst: &GradedStateModule,
    idx: usize,
    a: usize,
    rules: &MorphismRules,
) -> Result<FormalSum, MorphismError> {
    let edge = chi1_edge(src, dst, a, rules)?;
    if idx >= src.dim() {
        return Err(MorphismError::BadIndex(idx));
    }
    Ok(edge.chi1_at(idx))
}

/// `χ0` on one basis element of a resolution where `a` is a parallel pair.
pub fn chi0(
    src: &GradedStateModule,
    dst: &GradedStateModule,
    idx: usize,
    a: usize,
    rules: &MorphismRules,
) -> Result<FormalSum, MorphismError> {
    let edge = chi0_edge(src, dst, a, rules)?;
    if idx >= src.dim() {
        return Err(MorphismError::BadIndex(idx));
    }
    Ok(edge.chi0_at(idx))
}

/// The matrix of the edge map `D(X) -> D(Xa)`.
pub fn edge_matrix(
    d: &LinkDiagram,
    src: &GradedStateModule,
    dst: &GradedStateModule,
    a: usize,
    rules: &MorphismRules,
) -> Result<SparseMatrix, MorphismError> {
    let positive = d.crossings[a].sign == Sign::Positive;
    let edge = if positive { chi0_edge(src, dst, a, rules)? } else { chi1_edge(src, dst, a, rules)? };
    let mut triplets = Vec::new();
    for idx in 0..src.dim() {
        let sum = if positive { edge.chi0_at(idx) } else { edge.chi1_at(idx) };
        for (c, r) in sum.terms {
            triplets.push((r, idx, c));
        }
    }
    Ok(SparseMatrix::from_triplets(dst.dim(), src.dim(), triplets))
}

/// Cohomological degree of `D(cr)`: `#(cr ∩ positive) − #(negative ∖ cr)`.
pub fn cohomological_degree(d: &LinkDiagram, cr: CrossingSet) -> i32 {
    d.crossings
        .iter()
        .map(|x| match (x.sign, cr.contains(x.id)) {
            (Sign::Positive, true) => 1,
            (Sign::Negative, false) => -1,
            _ => 0,
        })
        .sum()
}

/// Modules and edge maps of the cube of resolutions, before any check.
#[derive(Clone, Debug)]
pub struct CubeBuild {
    pub modules: Vec<GradedStateModule>,
    pub cube: Cube,
}

impl CubeBuild {
    /// Faces that fail to commute.
    pub fn face_failures(&self) -> Vec<CubeError> {
        self.cube.face_failures(FaceRelation::Commute)
    }

    /// Total complex of the twisted cube, whether or not faces commute.
    pub fn complex(&self, d: &LinkDiagram) -> ChainComplex {
        assemble(&twist_unchecked(&self.cube), |x| cohomological_degree(d, x))
            .expect("cohomological degree rises by one along every edge")
    }
}

pub fn build_cube_unchecked(d: &LinkDiagram, n: u32, rules: &MorphismRules) -> CubeBuild {
    let c = d.crossing_count();
    let modules: Vec<GradedStateModule> = (0..1u64 << c)
        .into_par_iter()
        .map(|x| {
            let g = resolve(d, CrossingSet(x)).expect("subset within range");
            GradedStateModule::new(g, n)
        })
        .collect();
    let jobs: Vec<(CrossingSet, usize)> = (0..1u64 << c)
        .map(CrossingSet)
        .flat_map(|x| (0..c).filter(move |&a| !x.contains(a)).map(move |a| (x, a)))
        .collect();
    let edges: BTreeMap<(CrossingSet, usize), SparseMatrix> = jobs
        .into_par_iter()
        .map(|(x, a)| {
            let src = &modules[x.0 as usize];
            let dst = &modules[x.with(a).0 as usize];
            let m = edge_matrix(d, src, dst, a, rules).expect("sites resolved as the cube requires");
            ((x, a), m)
        })
        .collect();
    let vertices = modules.iter().map(GradedStateModule::gradings).collect();
    CubeBuild {
        modules,
        cube: Cube {
            dim: c,
            vertices,
            edges,
        },
    }
}

/// The commutative cube of resolutions; a non-commuting face is an error.
pub fn build_cube(d: &LinkDiagram, n: u32, rules: &MorphismRules) -> Result<CommutativeCube, CubeError> {
    CommutativeCube::new(build_cube_unchecked(d, n, rules).cube)
}

/// Checks that every output term of a state has its grading.
pub fn grading_preserved(build: &CubeBuild) -> Result<(), CubeError> {
    build.cube.check_gradings()
}

/// `gr` of a fine colouring read as a state of `g`.
pub fn fine_grade(g: &ResolvedGraph, f: &FineColoring, n: u32) -> Option<i32> {
    grade(g, &coarse(g, f)?, n).ok()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagram::{closure, parse_braid};
    use proptest::prelude::*;

    fn diagram(b: &str) -> LinkDiagram {
        closure(&parse_braid(b).unwrap())
    }

    fn module(b: &str, cr: &[usize], n: u32) -> GradedStateModule {
        GradedStateModule::new(resolve(&diagram(b), CrossingSet::from_ids(cr.iter().copied())).unwrap(), n)
    }

    #[test]
    fn one_crossing_cube() {
        let d = diagram("B2: 1");
        let build = build_cube_unchecked(&d, 2, &MorphismRules::default());
        assert_eq!(build.cube.vertices.len(), 2);
        assert_eq!(build.cube.edges.len(), 1);
        assert!(grading_preserved(&build).is_ok());
        assert!(build_cube(&d, 2, &MorphismRules::default()).is_ok());
    }

    #[test]
    fn two_crossing_squares_commute() {
        for rules in [MorphismRules::default(), MorphismRules::literal()] {
            let build = build_cube_unchecked(&diagram("B2: 1 1"), 2, &rules);
            assert_eq!(build.cube.vertices.len(), 4);
            assert!(build.face_failures().is_empty());
            assert!(build.complex(&diagram("B2: 1 1")).check_d_squared().is_ok());
        }
    }

    #[test]
    fn chi0_increasing_colors_replace_directly() {
        let src = module("B2: 1", &[], 2);
        let dst = module("B2: 1", &[0], 2);
        let g = &src.graph;
        for idx in 0..src.dim() {
            let f = fine(g, &src.basis[idx]);
            let l = g.site_columns[0];
            if f.0[0][l] < f.0[0][l + 1] {
                let sum = chi0(&src, &dst, idx, 0, &MorphismRules::default()).unwrap();
                let target = dst.index_of(&coarse(&dst.graph, &f).unwrap()).unwrap();
                assert_eq!(sum.terms, vec![(1, target)]);
                assert_eq!(site_degree(&dst.graph, &f, 0), Some(1));
            }
        }
    }

    #[test]
    fn chi0_equal_colors_without_circle_vanish() {
        // B2: 1 1 with crossing 1 singular; crossing 0 parallel, colours (1,1)
        let src = module("B2: 1 1", &[1], 2);
        let dst = module("B2: 1 1", &[0, 1], 2);
        let rules = MorphismRules { loops: false, ..MorphismRules::default() };
        for idx in 0..src.dim() {
            let f = fine(&src.graph, &src.basis[idx]);
            let l = src.graph.site_columns[0];
            if f.0[0][l] == f.0[0][l + 1] {
                assert!(chi0(&src, &dst, idx, 0, &rules).unwrap().is_zero());
            }
        }
    }

    #[test]
    fn wrong_site_kind_is_a_domain_error() {
        let par = module("B2: 1", &[], 2);
        let sing = module("B2: 1", &[0], 2);
        let rules = MorphismRules::default();
        assert_eq!(chi1(&par, &sing, 0, 0, &rules), Err(MorphismError::NotSingular(0)));
        assert_eq!(chi0(&sing, &par, 0, 0, &rules), Err(MorphismError::NotParallel(0)));
        assert!(matches!(chi0(&par, &par, 0, 0, &rules), Err(MorphismError::TargetMismatch { crossing: 0, .. })));
        assert_eq!(chi0(&par, &sing, 99, 0, &rules), Err(MorphismError::BadIndex(99)));
    }

    #[test]
    fn chi1_negative_degree_is_an_injection() {
        // literal reading: the degree −1 part is the straight replacement
        let rules = MorphismRules::literal();
        for (b, cr) in [("B2: -1", vec![]), ("B2: -1 -1", vec![1]), ("B3: -1 2 -1", vec![2])] {
            let src = module(b, &cr, 3);
            let dst = module(b, &[cr.as_slice(), &[0]].concat(), 3);
            let mut targets = Vec::new();
            for idx in 0..src.dim() {
                let f = fine(&src.graph, &src.basis[idx]);
                if site_degree(&src.graph, &f, 0) == Some(-1) {
                    let sum = chi1(&src, &dst, idx, 0, &rules).unwrap();
                    assert_eq!(sum.terms.len(), 1, "{b} state {idx}");
                    assert_eq!(sum.terms[0].0, 1);
                    targets.push(sum.terms[0].1);
                }
            }
            let count = targets.len();
            targets.sort_unstable();
            targets.dedup();
            assert_eq!(targets.len(), count);
            assert!(count > 0);
        }
    }

    #[test]
    fn simple_loop_has_no_distinguished_circle() {
        // a single singular edge on two strands: heads and legs close up
        let m = module("B2: -1", &[], 2);
        for s in &m.basis {
            assert!(find_distinguished(&m.graph, s, 0, &MorphismRules::default())
                .iter()
                .all(|c| c.source == c.target));
        }
        assert_eq!(loop_columns(&m.graph, 0), vec![0, 1]);
    }

    #[test]
    fn two_singular_edges_give_one_circle() {
        // two stacked singular edges; a state where both have degree 0
        let m = module("B2: 1 1", &[0, 1], 2);
        let rules = MorphismRules::default();
        let mut found = false;
        for s in &m.basis {
            let f = fine(&m.graph, s);
            if site_degree(&m.graph, &f, 0) == Some(0) && site_degree(&m.graph, &f, 1) == Some(0) {
                let open: Vec<_> = all_windows(&m.graph, &f, 0)
                    .into_iter()
                    .filter(|c| c.source != c.target && c.meets(0) && c.meets(1))
                    .collect();
                assert!(!open.is_empty());
                assert!(open.iter().all(|c| c.colors.0 != c.colors.1));
                let _ = find_distinguished(&m.graph, s, 0, &rules);
                found = true;
            }
        }
        assert!(found);
    }

    #[test]
    fn exchange_is_an_involution() {
        let m = module("B3: 1 -2 1", &[0, 2], 3);
        for s in &m.basis {
            let f = fine(&m.graph, s);
            for c in all_windows(&m.graph, &f, 0) {
                let once = color_exchange(&m.graph, s, &c);
                assert_ne!(once, f);
                assert_eq!(exchange(&once, &c), f);
            }
        }
    }

    #[test]
    fn walk_filter_matches_full_trace() {
        let rules = MorphismRules::default();
        for (b, cr) in [("B3: 1 -2 1 2", vec![0, 2]), ("B3: -1 -2 -1", vec![0, 1, 2]), ("B2: 1 1 -1", vec![1, 2])] {
            let m = module(b, &cr, 3);
            for anchor in 0..m.graph.crossing_count() {
                for s in &m.basis {
                    let f = fine(&m.graph, s);
                    let slow: Vec<_> = all_windows(&m.graph, &f, anchor)
                        .into_iter()
                        .filter(|c| admissible(&m.graph, &f, c, anchor, &rules))
                        .collect();
                    assert_eq!(find_distinguished(&m.graph, s, anchor, &rules), slow);
                }
            }
        }
    }

    #[test]
    fn fine_and_coarse_round_trip() {
        let m = module("B3: 1 2 -1", &[1], 3);
        for s in &m.basis {
            assert_eq!(coarse(&m.graph, &fine(&m.graph, s)).as_ref(), Some(s));
            assert_eq!(fine_grade(&m.graph, &fine(&m.graph, s), 3), grade(&m.graph, s, 3).ok());
        }
    }

    #[test]
    fn cohomological_degrees() {
        let d = diagram("B3: 1 -2 1");
        assert_eq!(cohomological_degree(&d, CrossingSet::empty()), -1);
        assert_eq!(cohomological_degree(&d, CrossingSet::from_ids([1])), 0);
        assert_eq!(cohomological_degree(&d, CrossingSet::from_ids([0, 1, 2])), 2);
    }

    #[test]
    fn two_strand_cubes_commute_at_n2() {
        for len in 1..=5 {
            for b in crate::diagram::all_braids(2, len) {
                let d = closure(&b);
                let build = build_cube_unchecked(&d, 2, &MorphismRules::default());
                assert!(build.face_failures().is_empty(), "{b}");
            }
        }
    }

    fn arb_braid() -> impl Strategy<Value = LinkDiagram> {
        (2usize..4).prop_flat_map(|m| {
            let letter = (1..m as i32).prop_flat_map(|k| prop_oneof![Just(k), Just(-k)]);
            prop::collection::vec(letter, 0..5)
                .prop_map(move |letters| closure(&crate::diagram::BraidWord::new(m, letters).unwrap()))
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn every_entry_preserves_grading(d in arb_braid(), n in 2u32..4) {
            for rules in [MorphismRules::default(), MorphismRules::literal()] {
                let build = build_cube_unchecked(&d, n, &rules);
                prop_assert!(grading_preserved(&build).is_ok());
                prop_assert!(build.cube.edges.values().all(|m| m.triplets().iter().all(|&(_, _, v)| v > 0)));
            }
        }

        #[test]
        fn direct_terms_always_commute(d in arb_braid(), n in 2u32..4) {
            let build = build_cube_unchecked(&d, n, &MorphismRules::direct());
            prop_assert!(build.face_failures().is_empty());
        }
    }
}
