//! Betti numbers over a prime field from boundary-matrix ranks.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::nerve::SimplicialComplex;

/// Coefficient field `F_p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FieldSpec {
    p: u32,
}

impl Default for FieldSpec {
    fn default() -> Self {
        Self { p: 2 }
    }
}

impl FieldSpec {
    pub fn new(p: u32) -> Result<Self> {
        if p >= 1 << 31 {
            return Err(Error::param(format!("field characteristic {p} is too large")));
        }
        if p < 2 || (2..).take_while(|d| d * d <= p).any(|d| p % d == 0) {
            return Err(Error::param(format!("field characteristic {p} is not prime")));
        }
        Ok(Self { p })
    }

    pub fn characteristic(&self) -> u32 {
        self.p
    }

    fn neg_one(&self) -> u32 {
        self.p - 1
    }
}

/// Sparse boundary matrix `∂_d` with rows indexed by `(d-1)`-simplices and
/// columns by `d`-simplices, both in lexicographic order.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryMatrix {
    pub field: FieldSpec,
    pub rows: usize,
    pub cols: usize,
    /// Per column, `(row, value)` pairs with nonzero values, ascending rows.
    pub columns: Vec<Vec<(usize, u32)>>,
}

impl BoundaryMatrix {
    pub fn get(&self, row: usize, col: usize) -> u32 {
        self.columns[col]
            .iter()
            .find(|&&(r, _)| r == row)
            .map_or(0, |&(_, v)| v)
    }

    pub fn dense(&self) -> Vec<Vec<u32>> {
        let mut out = vec![vec![0; self.cols]; self.rows];
        for (c, col) in self.columns.iter().enumerate() {
            for &(r, v) in col {
                out[r][c] = v;
            }
        }
        out
    }

    pub fn rank(&self) -> usize {
        if self.rows == 0 || self.cols == 0 {
            return 0;
        }
        if self.field.p == 2 {
            rank_gf2(self)
        } else {
            rank_fp(self)
        }
    }
}

/// `∂_d` for `1 <= d <= dmax`. Deleting vertex `i` contributes `(-1)^i mod p`.
pub fn boundary_matrix(complex: &SimplicialComplex, d: usize, field: FieldSpec) -> Result<BoundaryMatrix> {
    if d == 0 || d > complex.dmax() {
        return Err(Error::param(format!(
            "boundary dimension {d} outside 1..={}",
            complex.dmax()
        )));
    }
    let cols = complex.simplices(d);
    let columns = cols
        .iter()
        .map(|s| {
            let mut col: Vec<(usize, u32)> = crate::nerve::faces(s)
                .enumerate()
                .map(|(i, face)| {
                    let row = complex
                        .index_of(&face)
                        .expect("complex is downward closed");
                    let v = if i % 2 == 0 { 1 } else { field.neg_one() };
                    (row, v)
                })
                .collect();
            col.sort_unstable();
            col
        })
        .collect();
    Ok(BoundaryMatrix {
        field,
        rows: complex.simplices(d - 1).len(),
        cols: cols.len(),
        columns,
    })
}

/// Rank over `F_2` with columns packed into 64-bit words; each new column is
/// reduced against the pivots found so far (keyed by lowest set row).
fn rank_gf2(m: &BoundaryMatrix) -> usize {
    let words = m.rows.div_ceil(64);
    let mut pivots: Vec<Option<Box<[u64]>>> = vec![None; m.rows];
    let mut rank = 0;
    let mut col = vec![0u64; words];
    for entries in &m.columns {
        col.iter_mut().for_each(|w| *w = 0);
        for &(r, _) in entries {
            col[r / 64] ^= 1u64 << (r % 64);
        }
        let mut start = 0;
        loop {
            let Some(w) = (start..words).find(|&w| col[w] != 0) else {
                break;
            };
            start = w;
            let low = w * 64 + col[w].trailing_zeros() as usize;
            match &pivots[low] {
                Some(p) => {
                    for (a, b) in col[w..].iter_mut().zip(&p[w..]) {
                        *a ^= b;
                    }
                }
                None => {
                    pivots[low] = Some(col.clone().into_boxed_slice());
                    rank += 1;
                    break;
                }
            }
        }
    }
    rank
}

fn pow_mod(mut base: u64, mut exp: u64, p: u64) -> u64 {
    let mut acc = 1;
    base %= p;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * base % p;
        }
        base = base * base % p;
        exp >>= 1;
    }
    acc
}

/// Dense Gaussian elimination over `F_p`.
fn rank_fp(m: &BoundaryMatrix) -> usize {
    let p = m.field.p as u64;
    let mut a: Vec<Vec<u64>> = m
        .dense()
        .into_iter()
        .map(|row| row.into_iter().map(u64::from).collect())
        .collect();
    let mut rank = 0;
    for c in 0..m.cols {
        let Some(pr) = (rank..m.rows).find(|&r| a[r][c] != 0) else {
            continue;
        };
        a.swap(rank, pr);
        let inv = pow_mod(a[rank][c], p - 2, p);
        for v in a[rank][c..].iter_mut() {
            *v = *v * inv % p;
        }
        let (top, rest) = a.split_at_mut(rank + 1);
        let pivot_row = &top[rank];
        for row in rest.iter_mut() {
            let f = row[c];
            if f != 0 {
                for (x, &y) in row[c..].iter_mut().zip(&pivot_row[c..]) {
                    *x = (*x + (p - f) * y) % p;
                }
            }
        }
        rank += 1;
    }
    rank
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BettiProfile {
    pub b: Vec<usize>,
    pub field: FieldSpec,
}

impl BettiProfile {
    pub fn euler_characteristic(&self) -> i64 {
        alternating_sum(&self.b)
    }
}

pub fn alternating_sum(values: &[usize]) -> i64 {
    values
        .iter()
        .enumerate()
        .map(|(d, &v)| if d % 2 == 0 { v as i64 } else { -(v as i64) })
        .sum()
}

/// Ranks of `∂_1, ..., ∂_dmax` (index 0 holds `rank ∂_0 = 0`).
pub fn boundary_ranks(complex: &SimplicialComplex, field: FieldSpec) -> Vec<usize> {
    let dmax = complex.dmax();
    let mut ranks = vec![0];
    ranks.extend(
        (1..=dmax)
            .into_par_iter()
            .map(|d| {
                boundary_matrix(complex, d, field)
                    .expect("dimension in range")
                    .rank()
            })
            .collect::<Vec<_>>(),
    );
    ranks
}

/// `b_d = t_d - rank ∂_d - rank ∂_{d+1}`, with `∂_{dmax+1}` taken as zero.
pub fn betti(complex: &SimplicialComplex, field: FieldSpec) -> BettiProfile {
    let t = complex.counts();
    let ranks = boundary_ranks(complex, field);
    let b = (0..t.len())
        .map(|d| t[d] - ranks[d] - ranks.get(d + 1).copied().unwrap_or(0))
        .collect();
    BettiProfile { b, field }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BettiMatch {
    pub matched: bool,
    pub computed: Vec<usize>,
    pub truth: Vec<usize>,
}

/// Componentwise equality over the common prefix; entries beyond it must be
/// zero on whichever side is longer.
pub fn betti_match(profile: &BettiProfile, truth: &[usize]) -> BettiMatch {
    let (a, b) = (&profile.b, truth);
    let common = a.len().min(b.len());
    let matched = a[..common] == b[..common]
        && a[common..].iter().all(|&v| v == 0)
        && b[common..].iter().all(|&v| v == 0);
    BettiMatch {
        matched,
        computed: a.clone(),
        truth: truth.to_vec(),
    }
}
