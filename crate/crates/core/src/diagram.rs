//! Braid words, their closures, and Markov-move variants.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DiagramError {
    #[error("braid text must look like `B<strands>: <letters>`, got `{0}`")]
    Malformed(String),
    #[error("invalid strand count `{0}`")]
    BadStrands(String),
    #[error("invalid braid letter `{0}`")]
    BadLetter(String),
    #[error("generator `{token}` out of range for {strands} strands")]
    OutOfRange { token: String, strands: usize },
}

/// Crossing sign.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    Positive,
    Negative,
}

impl Sign {
    pub fn of(letter: i32) -> Self {
        if letter > 0 {
            Sign::Positive
        } else {
            Sign::Negative
        }
    }

    pub fn value(self) -> i32 {
        match self {
            Sign::Positive => 1,
            Sign::Negative => -1,
        }
    }
}

/// An element of the braid group on `strands` strands. Letter `k` is the
/// generator σ_k crossing strands `k` and `k+1` (1-based); `-k` its inverse.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BraidWord {
    strands: usize,
    letters: Vec<i32>,
}

impl BraidWord {
    pub fn new(strands: usize, letters: Vec<i32>) -> Result<Self, DiagramError> {
        if strands == 0 {
            return Err(DiagramError::BadStrands("0".into()));
        }
        for &l in &letters {
            if l == 0 || l.unsigned_abs() as usize >= strands {
                return Err(DiagramError::OutOfRange {
                    token: l.to_string(),
                    strands,
                });
            }
        }
        Ok(Self { strands, letters })
    }

    pub fn strands(&self) -> usize {
        self.strands
    }

    pub fn letters(&self) -> &[i32] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    /// The braid with every crossing switched.
    pub fn mirror(&self) -> Self {
        Self {
            strands: self.strands,
            letters: self.letters.iter().map(|l| -l).collect(),
        }
    }

    /// The group inverse: reversed word, every letter inverted.
    pub fn inverse(&self) -> Self {
        Self {
            strands: self.strands,
            letters: self.letters.iter().rev().map(|l| -l).collect(),
        }
    }

    /// The reversed word. Its closure is the closure of `self` with every
    /// component's orientation reversed (after a half-turn of the plane).
    pub fn reversed(&self) -> Self {
        Self {
            strands: self.strands,
            letters: self.letters.iter().rev().copied().collect(),
        }
    }

    pub fn closure(&self) -> LinkDiagram {
        closure(self)
    }
}

impl fmt::Display for BraidWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "B{}:", self.strands)?;
        for l in &self.letters {
            write!(f, " {l}")?;
        }
        Ok(())
    }
}

impl FromStr for BraidWord {
    type Err = DiagramError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_braid(s)
    }
}

/// Parses `B<strands>: <signed ints separated by whitespace>`.
pub fn parse_braid(text: &str) -> Result<BraidWord, DiagramError> {
    let text = text.trim();
    let rest = text
        .strip_prefix('B')
        .ok_or_else(|| DiagramError::Malformed(text.to_string()))?;
    let (head, body) = rest
        .split_once(':')
        .ok_or_else(|| DiagramError::Malformed(text.to_string()))?;
    let strands: usize = head
        .trim()
        .parse()
        .map_err(|_| DiagramError::BadStrands(head.to_string()))?;
    if strands == 0 {
        return Err(DiagramError::BadStrands(head.to_string()));
    }
    let mut letters = Vec::new();
    for token in body.split_whitespace() {
        let l: i32 = token
            .parse()
            .map_err(|_| DiagramError::BadLetter(token.to_string()))?;
        if l == 0 {
            return Err(DiagramError::BadLetter(token.to_string()));
        }
        if l.unsigned_abs() as usize >= strands {
            return Err(DiagramError::OutOfRange {
                token: token.to_string(),
                strands,
            });
        }
        letters.push(l);
    }
    Ok(BraidWord { strands, letters })
}

/// One crossing of a braid closure.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Crossing {
    pub id: usize,
    pub sign: Sign,
    /// Position in the braid word, counted from the bottom.
    pub height: usize,
    /// 0-based left column; the crossing involves columns `column` and `column + 1`.
    pub column: usize,
}

impl Crossing {
    pub fn columns(&self) -> (usize, usize) {
        (self.column, self.column + 1)
    }
}

/// The closure of a braid, oriented upward, with closure arcs on the left.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkDiagram {
    pub source: BraidWord,
    pub crossings: Vec<Crossing>,
    pub writhe: i32,
}

impl LinkDiagram {
    pub fn strands(&self) -> usize {
        self.source.strands
    }

    pub fn crossing_count(&self) -> usize {
        self.crossings.len()
    }

    pub fn positive_count(&self) -> usize {
        self.crossings
            .iter()
            .filter(|c| c.sign == Sign::Positive)
            .count()
    }

    pub fn negative_count(&self) -> usize {
        self.crossing_count() - self.positive_count()
    }

    /// Number of link components: cycles of the braid permutation.
    pub fn components(&self) -> usize {
        let m = self.strands();
        let mut perm: Vec<usize> = (0..m).collect();
        for c in &self.crossings {
            perm.swap(c.column, c.column + 1);
        }
        let mut seen = vec![false; m];
        let mut count = 0;
        for start in 0..m {
            if seen[start] {
                continue;
            }
            count += 1;
            let mut p = start;
            while !seen[p] {
                seen[p] = true;
                p = perm[p];
            }
        }
        count
    }
}

pub fn closure(b: &BraidWord) -> LinkDiagram {
    let crossings: Vec<Crossing> = b
        .letters
        .iter()
        .enumerate()
        .map(|(i, &l)| Crossing {
            id: i,
            sign: Sign::of(l),
            height: i,
            column: l.unsigned_abs() as usize - 1,
        })
        .collect();
    let writhe = crossings.iter().map(|c| c.sign.value()).sum();
    LinkDiagram {
        source: b.clone(),
        crossings,
        writhe,
    }
}

/// How a variant relates to its source braid.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MoveKind {
    Rotation,
    Conjugation,
    Stabilization,
    BraidRelation,
    FarCommutation,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Variant {
    pub kind: MoveKind,
    pub braid: BraidWord,
}

/// Braids whose closures are isotopic to the closure of `b`: cyclic
/// rotations, conjugates by every generator and its inverse, positive and
/// negative stabilizations, and single applications of the braid relations.
pub fn markov_variants(b: &BraidWord) -> Vec<Variant> {
    let m = b.strands;
    let w = &b.letters;
    let mut out = Vec::new();
    let mut push = |kind, strands, letters| {
        out.push(Variant {
            kind,
            braid: BraidWord { strands, letters },
        })
    };

    for r in 1..w.len() {
        let mut letters = w[r..].to_vec();
        letters.extend_from_slice(&w[..r]);
        push(MoveKind::Rotation, m, letters);
    }
    if w.len() == 1 {
        push(MoveKind::Rotation, m, w.clone());
    }

    for k in 1..m as i32 {
        for g in [k, -k] {
            let mut letters = vec![g];
            letters.extend_from_slice(w);
            letters.push(-g);
            push(MoveKind::Conjugation, m, letters);
        }
    }

    for s in [m as i32, -(m as i32)] {
        let mut letters = w.clone();
        letters.push(s);
        push(MoveKind::Stabilization, m + 1, letters);
    }

    for i in 0..w.len().saturating_sub(2) {
        let (a, b2, c) = (w[i], w[i + 1], w[i + 2]);
        let same_sign = a.signum() == b2.signum() && b2.signum() == c.signum();
        if same_sign && a == c && (a.abs() - b2.abs()).abs() == 1 {
            let mut letters = w.clone();
            letters[i] = b2;
            letters[i + 1] = a;
            letters[i + 2] = b2;
            push(MoveKind::BraidRelation, m, letters);
        }
    }

    for i in 0..w.len().saturating_sub(1) {
        if (w[i].abs() - w[i + 1].abs()).abs() >= 2 {
            let mut letters = w.clone();
            letters.swap(i, i + 1);
            push(MoveKind::FarCommutation, m, letters);
        }
    }
    out
}

/// All braid words on `strands` strands with exactly `len` letters.
pub fn all_braids(strands: usize, len: usize) -> Vec<BraidWord> {
    let gens: Vec<i32> = (1..strands as i32).flat_map(|k| [k, -k]).collect();
    let mut out = vec![Vec::new()];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|w: Vec<i32>| {
                gens.iter().map(move |&g| {
                    let mut w = w.clone();
                    w.push(g);
                    w
                })
            })
            .collect();
    }
    if strands == 1 && len > 0 {
        return Vec::new();
    }
    out.into_iter()
        .map(|letters| BraidWord { strands, letters })
        .collect()
}
