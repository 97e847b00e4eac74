//! Smith normal form over the integers by sparse elimination.
//!
//! Pivots are chosen by least absolute value. The elimination runs in `i64`
//! with checked arithmetic and restarts in arbitrary precision on overflow.

use std::collections::BTreeSet;
use std::fmt::Debug;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{CheckedMul, CheckedSub, One, Signed, ToPrimitive, Zero};

use crate::matrix::SparseMatrix;

/// Invariant factors `d_1 | d_2 | ... | d_r` (all positive) of a matrix of
/// rank `r`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SmithForm {
    pub invariant_factors: Vec<BigInt>,
}

impl SmithForm {
    pub fn rank(&self) -> usize {
        self.invariant_factors.len()
    }

    /// Invariant factors greater than one.
    pub fn torsion(&self) -> Vec<BigInt> {
        self.invariant_factors
            .iter()
            .filter(|d| !d.is_one())
            .cloned()
            .collect()
    }
}

trait Entry: Clone + Debug + Integer + Signed + CheckedMul + CheckedSub {}
impl<T: Clone + Debug + Integer + Signed + CheckedMul + CheckedSub> Entry for T {}

struct Overflow;

pub fn smith_normal_form(m: &SparseMatrix) -> SmithForm {
    let diagonal = match eliminate::<i64>(m) {
        Ok(d) => d.into_iter().map(BigInt::from).collect(),
        Err(Overflow) => eliminate::<BigInt>(m).unwrap_or_else(|_| unreachable!()),
    };
    SmithForm {
        invariant_factors: normalize_diagonal(diagonal),
    }
}

pub fn rank(m: &SparseMatrix) -> usize {
    smith_normal_form(m).rank()
}

/// Turns a list of nonzero diagonal entries into a divisibility chain with
/// the same product structure, replacing pairs by (gcd, lcm).
pub fn normalize_diagonal(mut d: Vec<BigInt>) -> Vec<BigInt> {
    for x in d.iter_mut() {
        *x = x.abs();
    }
    let k = d.len();
    for i in 0..k {
        for j in i + 1..k {
            if !(&d[j] % &d[i]).is_zero() {
                let g = d[i].gcd(&d[j]);
                let l = d[i].lcm(&d[j]);
                d[i] = g;
                d[j] = l;
            }
        }
    }
    d.sort();
    d
}

fn from_i64<T: Entry>(v: i64) -> T
where
    T: From<i64>,
{
    T::from(v)
}

struct Work<T> {
    rows: Vec<Vec<(usize, T)>>,
    col_rows: Vec<BTreeSet<usize>>,
}

impl<T: Entry> Work<T> {
    fn get(&self, r: usize, c: usize) -> Option<&T> {
        let row = &self.rows[r];
        row.binary_search_by_key(&c, |(col, _)| *col)
            .ok()
            .map(|i| &row[i].1)
    }

    /// row[target] -= factor * row[source]
    fn axpy(&mut self, target: usize, source: usize, factor: &T) -> Result<(), Overflow> {
        let src = std::mem::take(&mut self.rows[source]);
        let tgt = std::mem::take(&mut self.rows[target]);
        let mut out = Vec::with_capacity(src.len() + tgt.len());
        let (mut i, mut j) = (0, 0);
        while i < src.len() || j < tgt.len() {
            let take_src = j >= tgt.len() || (i < src.len() && src[i].0 < tgt[j].0);
            let take_tgt = i >= src.len() || (j < tgt.len() && tgt[j].0 < src[i].0);
            if take_src {
                let (c, v) = &src[i];
                let prod = v.checked_mul(factor).ok_or(Overflow)?;
                let nv = T::zero().checked_sub(&prod).ok_or(Overflow)?;
                self.col_rows[*c].insert(target);
                out.push((*c, nv));
                i += 1;
            } else if take_tgt {
                out.push(tgt[j].clone());
                j += 1;
            } else {
                let c = src[i].0;
                let prod = src[i].1.checked_mul(factor).ok_or(Overflow)?;
                let nv = tgt[j].1.checked_sub(&prod).ok_or(Overflow)?;
                if nv.is_zero() {
                    self.col_rows[c].remove(&target);
                } else {
                    out.push((c, nv));
                }
                i += 1;
                j += 1;
            }
        }
        self.rows[source] = src;
        self.rows[target] = out;
        Ok(())
    }
}

fn eliminate<T: Entry + From<i64>>(m: &SparseMatrix) -> Result<Vec<T>, Overflow> {
    let mut w = Work::<T> {
        rows: vec![Vec::new(); m.rows()],
        col_rows: vec![BTreeSet::new(); m.cols()],
    };
    for (r, c, v) in m.triplets() {
        w.rows[r].push((c, from_i64(v)));
        w.col_rows[c].insert(r);
    }
    for row in w.rows.iter_mut() {
        row.sort_by_key(|(c, _)| *c);
    }

    let mut diagonal = Vec::new();
    loop {
        // global least-magnitude pivot, ties broken by sparsity
        let mut best: Option<(usize, usize, T, usize)> = None;
        for (r, row) in w.rows.iter().enumerate() {
            for (c, v) in row {
                let a = v.abs();
                let cost = row.len() * w.col_rows[*c].len();
                let better = match &best {
                    None => true,
                    Some((_, _, b, bc)) => a < *b || (a == *b && cost < *bc),
                };
                if better {
                    best = Some((r, *c, a, cost));
                }
            }
        }
        let Some((mut pr, mut pc, _, _)) = best else {
            break;
        };

        loop {
            let p = w.get(pr, pc).cloned().expect("pivot present");
            // clear the pivot column with row operations
            let others: Vec<usize> = w.col_rows[pc].iter().copied().filter(|&r| r != pr).collect();
            let mut remainder_row = None;
            for r in others {
                let v = w.get(r, pc).cloned().expect("indexed entry");
                let q = v.div_floor(&p);
                if !q.is_zero() {
                    w.axpy(r, pr, &q)?;
                }
                if let Some(rem) = w.get(r, pc) {
                    let better = match &remainder_row {
                        None => true,
                        Some((_, b)) => rem.abs() < *b,
                    };
                    if better {
                        remainder_row = Some((r, rem.abs()));
                    }
                }
            }
            if let Some((r, _)) = remainder_row {
                pr = r;
                continue;
            }

            // the column holds only the pivot, so column operations touch this row alone
            let mut remainder_col: Option<(usize, T)> = None;
            let row = std::mem::take(&mut w.rows[pr]);
            let mut kept = Vec::with_capacity(1);
            for (c, v) in row {
                if c == pc {
                    kept.push((c, v));
                    continue;
                }
                let rem = v.mod_floor(&p);
                if rem.is_zero() {
                    w.col_rows[c].remove(&pr);
                } else {
                    let better = match &remainder_col {
                        None => true,
                        Some((_, b)) => rem.abs() < *b,
                    };
                    if better {
                        remainder_col = Some((c, rem.abs()));
                    }
                    kept.push((c, rem));
                }
            }
            w.rows[pr] = kept;
            if let Some((c, _)) = remainder_col {
                pc = c;
                continue;
            }

            diagonal.push(p.abs());
            w.rows[pr].clear();
            w.col_rows[pc].clear();
            break;
        }
    }
    Ok(diagonal)
}

/// Converts an invariant factor to `u64` if it fits.
pub fn factor_to_u64(d: &BigInt) -> Option<u64> {
    d.to_u64()
}
