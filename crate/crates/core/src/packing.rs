//! Greedy maximal system of disjoint good balls, the doubled-ball cover it
//! induces, and numerical checks of the counting argument that bounds the
//! number of pairwise intersections in that cover.

use std::collections::BTreeSet;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::goodballs::GoodBall;
use crate::space::{MetricMeasureSpace, RowProfile};

/// Selected good balls in selection order: radii nonincreasing, ties by
/// ascending center index.
#[derive(Debug, Clone, PartialEq)]
pub struct Packing {
    pub selected: Vec<GoodBall>,
}

impl Packing {
    pub fn len(&self) -> usize {
        self.selected.len()
    }

    pub fn is_empty(&self) -> bool {
        self.selected.is_empty()
    }

    pub fn max_scale_index(&self) -> u32 {
        self.selected.iter().map(|b| b.scale_index).max().unwrap_or(0)
    }

    /// Indices of the doubled balls `B(p_j, 2 R_j)` containing point `x`.
    pub fn cover_set(&self, space: &MetricMeasureSpace, x: usize) -> Vec<usize> {
        self.selected
            .iter()
            .enumerate()
            .filter(|(_, b)| space.dist(b.center, x) <= 2.0 * b.radius)
            .map(|(j, _)| j)
            .collect()
    }
}

/// Greedy selection by decreasing radius: a ball joins iff its closed
/// `R`-ball is disjoint from every ball already selected, i.e.
/// `dist(p, q) > R_p + R_q`.
pub fn build_packing(space: &MetricMeasureSpace, good_balls: &[GoodBall]) -> Result<Packing> {
    if good_balls.len() != space.len() {
        return Err(Error::param(format!(
            "{} good balls for {} points",
            good_balls.len(),
            space.len()
        )));
    }
    let mut order: Vec<&GoodBall> = good_balls.iter().collect();
    order.sort_by(|a, b| b.radius.total_cmp(&a.radius).then(a.center.cmp(&b.center)));

    let mut selected: Vec<GoodBall> = Vec::new();
    for cand in order {
        let disjoint = selected
            .iter()
            .all(|s| space.dist(s.center, cand.center) > s.radius + cand.radius);
        if disjoint {
            selected.push(*cand);
        }
    }
    let packing = Packing { selected };
    let report = check_packing(space, &packing);
    if !report.passed() {
        return Err(Error::Internal(format!("packing invariants violated: {report:?}")));
    }
    Ok(packing)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PackingReport {
    /// Positions `j` with `R_j < R_{j+1}`.
    pub order_violations: Vec<usize>,
    /// Selected pairs `(i, j)` whose closed `R`-balls meet.
    pub overlap_violations: Vec<(usize, usize)>,
    /// Sample points outside every doubled ball.
    pub uncovered: Vec<usize>,
}

impl PackingReport {
    pub fn passed(&self) -> bool {
        self.order_violations.is_empty()
            && self.overlap_violations.is_empty()
            && self.uncovered.is_empty()
    }
}

/// Checks ordering, pairwise disjointness and coverage of a packing.
pub fn check_packing(space: &MetricMeasureSpace, packing: &Packing) -> PackingReport {
    let sel = &packing.selected;
    let order_violations = sel
        .windows(2)
        .enumerate()
        .filter(|(_, w)| w[0].radius < w[1].radius)
        .map(|(j, _)| j)
        .collect();
    let overlap_violations = (0..sel.len())
        .into_par_iter()
        .flat_map_iter(|i| {
            (i + 1..sel.len())
                .filter(move |&j| {
                    space.dist(sel[i].center, sel[j].center) <= sel[i].radius + sel[j].radius
                })
                .map(move |j| (i, j))
        })
        .collect();
    let uncovered = (0..space.len())
        .into_par_iter()
        .filter(|&x| {
            !sel
                .iter()
                .any(|b| space.dist(b.center, x) <= 2.0 * b.radius)
        })
        .collect();
    PackingReport {
        order_violations,
        overlap_violations,
        uncovered,
    }
}

/// Pairwise intersections of the doubled-ball cover, each unordered pair
/// attributed to its larger-radius (smaller-index) member.
#[derive(Debug, Clone, PartialEq)]
pub struct IntersectionTable {
    /// `neighbors[j]`: ascending indices `i > j` with a sample point in
    /// both `B(p_j, 2R_j)` and `B(p_i, 2R_i)`.
    pub neighbors: Vec<Vec<usize>>,
    /// Number of witnessed pairs.
    pub t: usize,
    /// Number of pairs with `dist(p_i, p_j) <= 2R_i + 2R_j`.
    pub t_center_distance: usize,
    /// Witnessed pairs that fail the center-distance test; always empty for
    /// a genuine metric.
    pub witness_not_metric: Vec<(usize, usize)>,
}

impl IntersectionTable {
    pub fn build(space: &MetricMeasureSpace, packing: &Packing) -> Self {
        let sel = &packing.selected;
        let pairs: BTreeSet<(usize, usize)> = (0..space.len())
            .into_par_iter()
            .map(|x| {
                let s = packing.cover_set(space, x);
                let mut out = Vec::new();
                for (a, &j) in s.iter().enumerate() {
                    for &i in &s[a + 1..] {
                        out.push((j, i));
                    }
                }
                out
            })
            .flatten_iter()
            .collect();
        let mut neighbors = vec![Vec::new(); sel.len()];
        for &(j, i) in &pairs {
            neighbors[j].push(i);
        }
        let mut t_center_distance = 0;
        for j in 0..sel.len() {
            for i in j + 1..sel.len() {
                if space.dist(sel[j].center, sel[i].center)
                    <= 2.0 * sel[j].radius + 2.0 * sel[i].radius
                {
                    t_center_distance += 1;
                }
            }
        }
        let witness_not_metric = pairs
            .iter()
            .copied()
            .filter(|&(j, i)| {
                space.dist(sel[j].center, sel[i].center) > 2.0 * sel[j].radius + 2.0 * sel[i].radius
            })
            .collect();
        Self {
            t: pairs.len(),
            neighbors,
            t_center_distance,
            witness_not_metric,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FiveBallReport {
    pub pairs_checked: usize,
    /// `(j, i, x)`: member `x` of `B(p_i, R_i)` outside `B(p_j, 5R_j)`.
    pub violations: Vec<(usize, usize, usize)>,
    /// Pairs for which the tighter inclusion `B(p_i, R_i) ⊆ B(p_j, 5R_i)`
    /// fails. Informational only; it does not follow from the triangle
    /// inequality.
    pub small_radius_form_failures: Vec<(usize, usize)>,
    /// Neighbor pairs of some `j` whose `R`-balls meet.
    pub disjointness_violations: Vec<(usize, usize, usize)>,
}

impl FiveBallReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty() && self.disjointness_violations.is_empty()
    }
}

/// For every intersecting pair `j < i` (so `R_j >= R_i`), verifies by member
/// enumeration that `B(p_i, R_i) ⊆ B(p_j, 5R_j)`.
pub fn five_ball_check(
    space: &MetricMeasureSpace,
    packing: &Packing,
    table: &IntersectionTable,
) -> FiveBallReport {
    let sel = &packing.selected;
    let per_j: Vec<FiveBallReport> = (0..sel.len())
        .into_par_iter()
        .map(|j| {
            let big = &sel[j];
            let mut rep = FiveBallReport::default();
            let nbrs = &table.neighbors[j];
            for &i in nbrs {
                let small = &sel[i];
                rep.pairs_checked += 1;
                let mut small_form_ok = true;
                for (x, &d) in space.row(small.center).iter().enumerate() {
                    if d > small.radius {
                        continue;
                    }
                    let to_big = space.dist(big.center, x);
                    if to_big > 5.0 * big.radius {
                        rep.violations.push((j, i, x));
                    }
                    if to_big > 5.0 * small.radius {
                        small_form_ok = false;
                    }
                }
                if !small_form_ok {
                    rep.small_radius_form_failures.push((j, i));
                }
            }
            for (a, &i1) in nbrs.iter().enumerate() {
                for &i2 in &nbrs[a + 1..] {
                    if space.dist(sel[i1].center, sel[i2].center) <= sel[i1].radius + sel[i2].radius {
                        rep.disjointness_violations.push((j, i1, i2));
                    }
                }
            }
            rep
        })
        .collect();
    per_j.into_iter().fold(FiveBallReport::default(), |mut acc, r| {
        acc.pairs_checked += r.pairs_checked;
        acc.violations.extend(r.violations);
        acc.small_radius_form_failures.extend(r.small_radius_form_failures);
        acc.disjointness_violations.extend(r.disjointness_violations);
        acc
    })
}

/// Outcome of one link of the counting chain.
#[derive(Debug, Clone, PartialEq)]
pub struct Link {
    pub name: &'static str,
    pub ok: bool,
    /// First offending selected-ball index, when the link is per-ball.
    pub offending: Option<usize>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainReport {
    pub links: Vec<Link>,
    pub volume: f64,
    pub packed_volume: f64,
    /// Whether `vol(M) > Σ vol B(p_j, R_j)` holds strictly.
    pub packed_strict: bool,
    pub t: usize,
    pub bound_t: f64,
    pub k_max_scale: u32,
}

impl ChainReport {
    pub fn passed(&self) -> bool {
        self.links.iter().all(|l| l.ok)
    }

    pub fn failed_links(&self) -> Vec<&Link> {
        self.links.iter().filter(|l| !l.ok).collect()
    }
}

/// Relative slack allowed when comparing two sums of the same weights
/// accumulated in different orders.
const SUM_SLACK: f64 = 1e-12;

/// Checks each link of the volume-counting chain:
///
/// * (a) `vol(M) >= Σ_j vol B(p_j, R_j)`, strictness recorded separately;
/// * (b) `vol B(p_j, 5R_j) <= alpha vol B(p_j, R_j)`;
/// * (c) `Σ_{i in nbrs(j)} vol B(p_i, R_i) <= vol B(p_j, 5R_j)`;
/// * (d) `vol B(p_j, R_j) >= beta_n R_j^n`;
/// * (e) `T <= rho_hat 5^(n + (n+1) sqrt(log_5 rho_hat))`, `rho_hat = vol / (beta_n R0^n)`.
pub fn counting_chain_check(
    space: &MetricMeasureSpace,
    packing: &Packing,
    table: &IntersectionTable,
    alpha: f64,
    beta_n: f64,
    r0: f64,
) -> ChainReport {
    let sel = &packing.selected;
    let n = space.dim();
    let volume = space.volume();

    let small_vols: Vec<f64> = sel.iter().map(|b| b.vol_r).collect();
    let packed_volume: f64 = small_vols.iter().sum();
    let link_a = Link {
        name: "a",
        ok: packed_volume <= volume * (1.0 + SUM_SLACK),
        offending: None,
        detail: format!("vol(M) = {volume}, packed volume = {packed_volume}"),
    };

    let first_bad = |pred: &dyn Fn(usize) -> bool| (0..sel.len()).find(|&j| !pred(j));

    let growth = |j: usize| sel[j].vol_5r <= alpha * sel[j].vol_r;
    let bad_b = first_bad(&growth);
    let link_b = Link {
        name: "b",
        ok: bad_b.is_none(),
        offending: bad_b,
        detail: bad_b.map_or_else(
            || "growth condition holds on every selected ball".into(),
            |j| format!("ball {j}: vol(5R) = {} > alpha vol(R) = {}", sel[j].vol_5r, alpha * sel[j].vol_r),
        ),
    };

    // Volumes of the 5R_j balls from the same ordered prefix sums as the good-ball search.
    let vol_5r: Vec<f64> = sel
        .par_iter()
        .map(|b| RowProfile::new(space, b.center).volume_within(5.0 * b.radius))
        .collect();
    let inside = |j: usize| {
        let s: f64 = table.neighbors[j].iter().map(|&i| small_vols[i]).sum();
        s <= vol_5r[j] * (1.0 + SUM_SLACK)
    };
    let bad_c = first_bad(&inside);
    let link_c = Link {
        name: "c",
        ok: bad_c.is_none(),
        offending: bad_c,
        detail: bad_c.map_or_else(
            || "neighbor volumes fit inside every 5R_j ball".into(),
            |j| format!("ball {j}: neighbor volume exceeds vol(5R_j) = {}", vol_5r[j]),
        ),
    };

    let croke = |j: usize| sel[j].vol_r >= beta_n * sel[j].radius.powi(n as i32);
    let bad_d = first_bad(&croke);
    let link_d = Link {
        name: "d",
        ok: bad_d.is_none(),
        offending: bad_d,
        detail: bad_d.map_or_else(
            || format!("vol(B(p_j, R_j)) >= {beta_n} R_j^{n} on every selected ball"),
            |j| {
                format!(
                    "ball {j}: vol = {} < beta R^n = {}",
                    sel[j].vol_r,
                    beta_n * sel[j].radius.powi(n as i32)
                )
            },
        ),
    };

    let rho_hat = volume / (beta_n * r0.powi(n as i32));
    let bound_t = crate::bounds::theorem13_bound(rho_hat, n).bound_t;
    let link_e = Link {
        name: "e",
        ok: (table.t as f64) <= bound_t,
        offending: None,
        detail: format!("T = {}, bound = {bound_t}", table.t),
    };

    ChainReport {
        links: vec![link_a, link_b, link_c, link_d, link_e],
        volume,
        packed_volume,
        packed_strict: packed_volume < volume,
        t: table.t,
        bound_t,
        k_max_scale: packing.max_scale_index(),
    }
}
