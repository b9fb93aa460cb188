//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::HashSet;

use embolic::nerve::SimplicialComplex;
use embolic::space::MetricMeasureSpace;
use rand::Rng;

/// Ball volume by a plain filter over the row, ascending index.
pub fn oracle_volume(space: &MetricMeasureSpace, p: usize, radius: f64) -> f64 {
    (0..space.len())
        .filter(|&x| space.dist(p, x) <= radius)
        .map(|x| space.weights()[x])
        .sum()
}

pub fn oracle_growth_ok(space: &MetricMeasureSpace, p: usize, radius: f64, alpha: f64) -> bool {
    oracle_volume(space, p, 5.0 * radius) <= alpha * oracle_volume(space, p, radius)
}

/// Candidate radii at `p`, ascending: every distinct positive distance up
/// to `r0`, `r0` itself, and `d_min / 6` when it does not exceed `r0`.
pub fn oracle_candidates(space: &MetricMeasureSpace, p: usize, r0: f64) -> Vec<f64> {
    let mut out: Vec<f64> = space
        .row(p)
        .iter()
        .copied()
        .filter(|&d| d > 0.0 && d <= r0)
        .collect();
    out.push(r0);
    if let Some(dmin) = space.row(p).iter().copied().filter(|&d| d > 0.0).reduce(f64::min) {
        if dmin / 6.0 <= r0 {
            out.push(dmin / 6.0);
        }
    }
    out.sort_by(f64::total_cmp);
    out.dedup();
    out
}

/// Boundary of `d`-simplices as bitmasks over the `(d-1)`-simplices.
fn boundary_masks(complex: &SimplicialComplex, d: usize) -> Vec<u64> {
    let lower = complex.simplices(d - 1);
    complex
        .simplices(d)
        .iter()
        .map(|s| {
            let mut mask = 0u64;
            for skip in 0..s.len() {
                let face: Vec<usize> = s
                    .iter()
                    .enumerate()
                    .filter(|&(i, _)| i != skip)
                    .map(|(_, &v)| v)
                    .collect();
                let pos = lower.iter().position(|f| *f == face).expect("face present");
                mask ^= 1 << pos;
            }
            mask
        })
        .collect()
}

/// Every F2 combination of `columns` (2^len of them), via a Gray-code walk.
fn all_combinations(columns: &[u64], mut visit: impl FnMut(u64)) {
    let mut acc = 0u64;
    visit(acc);
    for step in 1u64..(1u64 << columns.len()) {
        acc ^= columns[step.trailing_zeros() as usize];
        visit(acc);
    }
}

/// Betti numbers over F2 by enumerating cycles and boundaries outright:
/// `b_d = log2 |ker ∂_d| - log2 |im ∂_{d+1}|`. Needs every `t_d <= 20`.
pub fn brute_force_betti_f2(complex: &SimplicialComplex) -> Vec<usize> {
    let dmax = complex.dmax();
    (0..=dmax)
        .map(|d| {
            let t = complex.simplices(d).len();
            assert!(t <= 20, "oracle limited to 20 simplices per dimension");
            let kernel = if d == 0 {
                1usize << t
            } else {
                let cols = boundary_masks(complex, d);
                let mut zeros = 0usize;
                all_combinations(&cols, |v| zeros += usize::from(v == 0));
                zeros
            };
            let image = if d == dmax {
                1
            } else {
                let cols = boundary_masks(complex, d + 1);
                assert!(cols.len() <= 20);
                let mut seen = HashSet::new();
                all_combinations(&cols, |v| {
                    seen.insert(v);
                });
                seen.len()
            };
            (kernel.trailing_zeros() - image.trailing_zeros()) as usize
        })
        .collect()
}

/// A random downward-closed complex on at most `max_vertices` vertices,
/// generated as the closure of a few random simplices.
pub fn random_complex(rng: &mut impl Rng, max_vertices: usize, dmax: usize) -> SimplicialComplex {
    let v = rng.gen_range(1..=max_vertices);
    let generators = rng.gen_range(1..=6);
    let mut gens: Vec<Vec<usize>> = (0..v).map(|i| vec![i]).collect();
    for _ in 0..generators {
        let size = rng.gen_range(1..=(dmax + 2).min(v));
        let mut s: Vec<usize> = rand::seq::index::sample(rng, v, size).into_vec();
        s.sort_unstable();
        gens.push(s);
    }
    SimplicialComplex::closure(dmax, gens)
}
