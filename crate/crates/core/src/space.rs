//! Finite metric-measure spaces, closed-ball queries and ground-truth
//! generators for manifolds with known topology.

use std::f64::consts::{PI, TAU};

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Relative triangle-inequality tolerance, scaled by the space diameter.
pub const VALIDATION_RELATIVE_TOLERANCE: f64 = 1e-9;

/// A finite point set with a dense geodesic distance matrix and per-point
/// volume weights.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricMeasureSpace {
    dim: usize,
    inj: f64,
    dist: Vec<f64>,
    weight: Vec<f64>,
    labels: Option<Vec<String>>,
    truth: Option<Vec<usize>>,
}

impl MetricMeasureSpace {
    /// Builds a space from a row-major `m x m` distance matrix.
    ///
    /// Only structural requirements are checked here (shape, finite entries,
    /// positive weights, positive `inj`). Metric axioms are the job of
    /// [`validate`].
    pub fn new(dim: usize, inj: f64, dist: Vec<f64>, weight: Vec<f64>) -> Result<Self> {
        let m = weight.len();
        if m == 0 {
            return Err(Error::MalformedSpace("space has no points".into()));
        }
        if dim == 0 {
            return Err(Error::MalformedSpace("dimension must be positive".into()));
        }
        if !(inj > 0.0 && inj.is_finite()) {
            return Err(Error::MalformedSpace(format!(
                "injectivity radius must be positive, got {inj}"
            )));
        }
        if dist.len() != m * m {
            return Err(Error::MalformedSpace(format!(
                "distance matrix has {} entries, expected {}",
                dist.len(),
                m * m
            )));
        }
        if let Some(i) = weight.iter().position(|w| !(*w > 0.0 && w.is_finite())) {
            return Err(Error::MalformedSpace(format!(
                "weight {i} is not a positive finite number: {}",
                weight[i]
            )));
        }
        if let Some(k) = dist.iter().position(|d| !d.is_finite()) {
            return Err(Error::MalformedSpace(format!(
                "distance ({}, {}) is not finite",
                k / m,
                k % m
            )));
        }
        Ok(Self {
            dim,
            inj,
            dist,
            weight,
            labels: None,
            truth: None,
        })
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.len() {
            return Err(Error::MalformedSpace(format!(
                "{} labels for {} points",
                labels.len(),
                self.len()
            )));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    /// Attaches ground-truth Betti numbers of the underlying manifold.
    pub fn with_truth(mut self, betti: Vec<usize>) -> Self {
        self.truth = Some(betti);
        self
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.weight.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.weight.is_empty()
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn inj(&self) -> f64 {
        self.inj
    }

    #[inline]
    pub fn dist(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.len() + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        let m = self.len();
        &self.dist[i * m..(i + 1) * m]
    }

    pub fn distances(&self) -> &[f64] {
        &self.dist
    }

    pub fn weights(&self) -> &[f64] {
        &self.weight
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn truth(&self) -> Option<&[usize]> {
        self.truth.as_deref()
    }

    /// Total volume, summed in ascending index order.
    pub fn volume(&self) -> f64 {
        self.weight.iter().sum()
    }

    pub fn diameter(&self) -> f64 {
        self.dist.iter().copied().fold(0.0, f64::max)
    }

    /// Smallest positive distance from `p` to another point, `None` when
    /// every other point coincides with `p` (or the space is a single point).
    pub fn nearest_neighbor_distance(&self, p: usize) -> Option<f64> {
        self.row(p)
            .iter()
            .enumerate()
            .filter(|&(q, &d)| q != p && d > 0.0)
            .map(|(_, &d)| d)
            .min_by(f64::total_cmp)
    }

    /// Largest nearest-neighbor distance over all points (sampling spacing).
    pub fn max_nearest_neighbor_distance(&self) -> f64 {
        (0..self.len())
            .into_par_iter()
            .filter_map(|p| self.nearest_neighbor_distance(p))
            .reduce(|| 0.0, f64::max)
    }

    fn check_index(&self, p: usize) -> Result<()> {
        if p < self.len() {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange {
                index: p,
                len: self.len(),
            })
        }
    }
}

/// Closed ball `{x : dist(center, x) <= radius}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ball {
    pub center: usize,
    pub radius: f64,
    pub members: Vec<usize>,
    pub volume: f64,
}

pub fn ball(space: &MetricMeasureSpace, p: usize, radius: f64) -> Result<Ball> {
    space.check_index(p)?;
    if !(radius >= 0.0) {
        return Err(Error::param(format!("ball radius must be nonnegative, got {radius}")));
    }
    let members: Vec<usize> = space
        .row(p)
        .iter()
        .enumerate()
        .filter(|&(_, &d)| d <= radius)
        .map(|(x, _)| x)
        .collect();
    let volume = members.iter().map(|&x| space.weight[x]).sum();
    Ok(Ball {
        center: p,
        radius,
        members,
        volume,
    })
}

/// Volume of the closed ball, summed in ascending index order.
pub fn ball_volume(space: &MetricMeasureSpace, p: usize, radius: f64) -> f64 {
    space
        .row(p)
        .iter()
        .zip(&space.weight)
        .filter(|&(&d, _)| d <= radius)
        .map(|(_, &w)| w)
        .sum()
}

/// The distance row of one point sorted by `(distance, index)`, with
/// cumulative weights in that order. Answers ball-volume queries in
/// `O(log m)`.
#[derive(Debug, Clone)]
pub struct RowProfile {
    center: usize,
    sorted_dist: Vec<f64>,
    order: Vec<u32>,
    cumulative: Vec<f64>,
}

impl RowProfile {
    pub fn new(space: &MetricMeasureSpace, p: usize) -> Self {
        let row = space.row(p);
        let mut order: Vec<u32> = (0..row.len() as u32).collect();
        order.sort_by(|&a, &b| {
            row[a as usize]
                .total_cmp(&row[b as usize])
                .then(a.cmp(&b))
        });
        let sorted_dist: Vec<f64> = order.iter().map(|&i| row[i as usize]).collect();
        let mut acc = 0.0;
        let cumulative = order
            .iter()
            .map(|&i| {
                acc += space.weight[i as usize];
                acc
            })
            .collect();
        Self {
            center: p,
            sorted_dist,
            order,
            cumulative,
        }
    }

    pub fn center(&self) -> usize {
        self.center
    }

    /// Number of points within the closed ball of the given radius.
    pub fn count_within(&self, radius: f64) -> usize {
        self.sorted_dist.partition_point(|&d| d <= radius)
    }

    pub fn volume_within(&self, radius: f64) -> f64 {
        match self.count_within(radius) {
            0 => 0.0,
            c => self.cumulative[c - 1],
        }
    }

    /// Member indices of the closed ball, in distance order.
    pub fn members_within(&self, radius: f64) -> impl Iterator<Item = usize> + '_ {
        self.order[..self.count_within(radius)]
            .iter()
            .map(|&i| i as usize)
    }

    /// Distinct distances from the center lying in the half-open interval
    /// `(lo, hi]`, ascending.
    pub fn distinct_radii(&self, lo: f64, hi: f64) -> Vec<f64> {
        let start = self.sorted_dist.partition_point(|&d| d <= lo);
        let end = self.sorted_dist.partition_point(|&d| d <= hi);
        let mut out: Vec<f64> = Vec::new();
        for &d in &self.sorted_dist[start..end] {
            if out.last() != Some(&d) {
                out.push(d);
            }
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NonzeroDiagonal { i: usize, value: f64 },
    Asymmetric { i: usize, j: usize, defect: f64 },
    Negative { i: usize, j: usize, value: f64 },
    /// `dist(i, k) > dist(i, j) + dist(j, k) + tolerance`.
    Triangle { i: usize, j: usize, k: usize, defect: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub tolerance: f64,
    pub violations: Vec<Violation>,
    /// Worst triangle defect observed, whether or not it exceeds the tolerance.
    pub worst_triangle: Option<(usize, usize, usize, f64)>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn summary(&self) -> String {
        if self.passed() {
            return "pass".into();
        }
        let shown: Vec<String> = self
            .violations
            .iter()
            .take(5)
            .map(|v| match v {
                Violation::NonzeroDiagonal { i, value } => {
                    format!("dist[{i}][{i}] = {value} is not zero")
                }
                Violation::Asymmetric { i, j, defect } => {
                    format!("dist[{i}][{j}] and dist[{j}][{i}] differ by {defect}")
                }
                Violation::Negative { i, j, value } => format!("dist[{i}][{j}] = {value} < 0"),
                Violation::Triangle { i, j, k, defect } => {
                    format!("triangle inequality fails at ({i}, {j}, {k}) by {defect}")
                }
            })
            .collect();
        let more = self.violations.len().saturating_sub(shown.len());
        if more > 0 {
            format!("{} (and {more} more)", shown.join("; "))
        } else {
            shown.join("; ")
        }
    }
}

/// Checks the metric axioms, with the triangle inequality tested up to
/// `1e-9 x diameter`.
///
/// The triangle scan is exhaustive over all ordered triples and reports the
/// single worst offending triple (ties go to the lexicographically smallest).
pub fn validate(space: &MetricMeasureSpace) -> ValidationReport {
    let m = space.len();
    let tolerance = VALIDATION_RELATIVE_TOLERANCE * space.diameter();
    let mut violations = Vec::new();

    for i in 0..m {
        let d = space.dist(i, i);
        if d != 0.0 {
            violations.push(Violation::NonzeroDiagonal { i, value: d });
        }
        for j in 0..m {
            let dij = space.dist(i, j);
            if dij < 0.0 {
                violations.push(Violation::Negative { i, j, value: dij });
            }
            if i < j {
                let defect = (dij - space.dist(j, i)).abs();
                if defect > 0.0 {
                    violations.push(Violation::Asymmetric { i, j, defect });
                }
            }
        }
    }

    let worst = (0..m)
        .into_par_iter()
        .map(|i| {
            let mut best: Option<(usize, usize, usize, f64)> = None;
            for j in i + 1..m {
                // max and min over k of d(i,k) - d(j,k) cover both (i, j, k) and (j, i, k).
                let (hi, lo) = diff_extremes(space.row(i), space.row(j));
                let dij = space.dist(i, j);
                for (a, b, target) in [(i, j, hi), (j, i, -lo)] {
                    let defect = target - dij;
                    if best.is_none_or(|w| defect > w.3) {
                        let (ra, rb) = (space.row(a), space.row(b));
                        let k = (0..m)
                            .find(|&k| ra[k] - rb[k] == target)
                            .expect("extreme is attained");
                        best = Some((a, b, k, defect));
                    }
                }
            }
            best
        })
        .reduce(
            || None,
            |a, b| match (a, b) {
                (None, x) | (x, None) => x,
                (Some(a), Some(b)) => {
                    if b.3 > a.3 || (b.3 == a.3 && (b.0, b.1, b.2) < (a.0, a.1, a.2)) {
                        Some(b)
                    } else {
                        Some(a)
                    }
                }
            },
        );

    if let Some((i, j, k, defect)) = worst {
        if defect > tolerance {
            violations.push(Violation::Triangle { i, j, k, defect });
        }
    }

    ValidationReport {
        tolerance,
        violations,
        worst_triangle: worst,
    }
}

/// `(max_k a[k] - b[k], min_k a[k] - b[k])`, accumulated in independent
/// lanes so the loop vectorizes.
fn diff_extremes(a: &[f64], b: &[f64]) -> (f64, f64) {
    const LANES: usize = 8;
    let mut hi = [f64::NEG_INFINITY; LANES];
    let mut lo = [f64::INFINITY; LANES];
    let chunks_a = a.chunks_exact(LANES);
    let chunks_b = b.chunks_exact(LANES);
    let (tail_a, tail_b) = (chunks_a.remainder(), chunks_b.remainder());
    for (ca, cb) in chunks_a.zip(chunks_b) {
        for l in 0..LANES {
            let d = ca[l] - cb[l];
            hi[l] = if d > hi[l] { d } else { hi[l] };
            lo[l] = if d < lo[l] { d } else { lo[l] };
        }
    }
    let mut h = hi.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut l = lo.iter().copied().fold(f64::INFINITY, f64::min);
    for (x, y) in tail_a.iter().zip(tail_b) {
        h = h.max(x - y);
        l = l.min(x - y);
    }
    (h, l)
}

// ---------------------------------------------------------------------------
// Generators
// ---------------------------------------------------------------------------

fn matrix_from_fn(m: usize, f: impl Fn(usize, usize) -> f64 + Sync) -> Vec<f64> {
    let mut dist = vec![0.0; m * m];
    dist.par_chunks_mut(m).enumerate().for_each(|(i, row)| {
        for (j, d) in row.iter_mut().enumerate() {
            *d = if i == j { 0.0 } else { f(i.min(j), i.max(j)) };
        }
    });
    dist
}

/// `m` equally spaced points on the unit circle with arc-length distances.
pub fn circle_space(m: usize) -> Result<MetricMeasureSpace> {
    if m < 3 {
        return Err(Error::param(format!("circle needs at least 3 points, got {m}")));
    }
    let step = TAU / m as f64;
    let dist = matrix_from_fn(m, |i, j| {
        let k = j - i;
        k.min(m - k) as f64 * step
    });
    let space = MetricMeasureSpace::new(1, PI, dist, vec![step; m])?;
    Ok(space.with_truth(vec![1, 1]))
}

/// Great-circle distance between two unit vectors.
pub fn great_circle_distance(a: [f64; 3], b: [f64; 3]) -> f64 {
    let dot = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
    dot.clamp(-1.0, 1.0).acos()
}

/// Fibonacci-lattice points on the unit sphere.
pub fn fibonacci_sphere(m: usize) -> Vec<[f64; 3]> {
    let golden_angle = PI * (3.0 - 5f64.sqrt());
    (0..m)
        .map(|i| {
            let z = 1.0 - (2 * i + 1) as f64 / m as f64;
            let r = (1.0 - z * z).max(0.0).sqrt();
            let phi = golden_angle * i as f64;
            [r * phi.cos(), r * phi.sin(), z]
        })
        .collect()
}

/// `m` Fibonacci-lattice points on the round unit 2-sphere.
pub fn sphere2_space(m: usize) -> Result<MetricMeasureSpace> {
    if m < 4 {
        return Err(Error::param(format!("sphere needs at least 4 points, got {m}")));
    }
    let points = fibonacci_sphere(m);
    let dist = matrix_from_fn(m, |i, j| great_circle_distance(points[i], points[j]));
    let space = MetricMeasureSpace::new(2, PI, dist, vec![4.0 * PI / m as f64; m])?;
    Ok(space.with_truth(vec![1, 0, 1]))
}

/// Distance on the flat torus `R^2 / (aZ x bZ)`.
pub fn torus_distance(a: f64, b: f64, p: [f64; 2], q: [f64; 2]) -> f64 {
    let wrap = |delta: f64, period: f64| {
        let d = delta.abs().rem_euclid(period);
        d.min(period - d)
    };
    let dx = wrap(p[0] - q[0], a);
    let dy = wrap(p[1] - q[1], b);
    (dx * dx + dy * dy).sqrt()
}

/// An `m1 x m2` grid on the flat torus `R^2 / (aZ x bZ)`. Point `(i, j)` sits
/// at `(a i / m1, b j / m2)` and has index `i * m2 + j`.
pub fn flat_torus_space(a: f64, b: f64, m1: usize, m2: usize) -> Result<MetricMeasureSpace> {
    if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
        return Err(Error::param(format!("torus periods must be positive, got a={a}, b={b}")));
    }
    if m1 < 3 || m2 < 3 {
        return Err(Error::param(format!(
            "torus grid needs at least 3 points per side, got {m1} x {m2}"
        )));
    }
    let m = m1 * m2;
    let (hx, hy) = (a / m1 as f64, b / m2 as f64);
    // Wrapped offsets from integer differences keep the matrix exactly symmetric.
    let dist = matrix_from_fn(m, |p, q| {
        let (pi, pj) = (p / m2, p % m2);
        let (qi, qj) = (q / m2, q % m2);
        let di = pi.abs_diff(qi);
        let dj = pj.abs_diff(qj);
        let dx = di.min(m1 - di) as f64 * hx;
        let dy = dj.min(m2 - dj) as f64 * hy;
        (dx * dx + dy * dy).sqrt()
    });
    let space = MetricMeasureSpace::new(2, a.min(b) / 2.0, dist, vec![a * b / m as f64; m])?;
    Ok(space.with_truth(vec![1, 2, 1]))
}

/// Disjoint union with every cross-component distance equal to `separation`.
///
/// Ground-truth Betti numbers add componentwise when every component carries
/// them; otherwise the union has none.
pub fn disjoint_union(
    spaces: &[MetricMeasureSpace],
    separation: f64,
) -> Result<MetricMeasureSpace> {
    let first = spaces
        .first()
        .ok_or_else(|| Error::param("disjoint union of zero spaces"))?;
    if let Some(s) = spaces.iter().find(|s| s.dim() != first.dim()) {
        return Err(Error::param(format!(
            "mismatched dimensions in union: {} and {}",
            first.dim(),
            s.dim()
        )));
    }
    let max_diameter = spaces.iter().map(|s| s.diameter()).fold(0.0, f64::max);
    if !(separation > 2.0 * max_diameter) {
        return Err(Error::param(format!(
            "separation {separation} must exceed twice the largest component diameter {max_diameter}"
        )));
    }
    if spaces.len() == 1 {
        return Ok(first.clone());
    }

    let offsets: Vec<usize> = spaces
        .iter()
        .scan(0, |acc, s| {
            let start = *acc;
            *acc += s.len();
            Some(start)
        })
        .collect();
    let m: usize = spaces.iter().map(|s| s.len()).sum();
    let mut dist = vec![separation; m * m];
    for (s, &off) in spaces.iter().zip(&offsets) {
        for i in 0..s.len() {
            let dst = (off + i) * m + off;
            dist[dst..dst + s.len()].copy_from_slice(s.row(i));
        }
    }
    let weight: Vec<f64> = spaces.iter().flat_map(|s| s.weights().iter().copied()).collect();
    let inj = spaces.iter().map(|s| s.inj()).fold(f64::INFINITY, f64::min);
    let mut union = MetricMeasureSpace::new(first.dim(), inj, dist, weight)?;

    if spaces.iter().all(|s| s.truth().is_some()) {
        let len = spaces.iter().map(|s| s.truth().unwrap().len()).max().unwrap_or(0);
        let mut betti = vec![0; len];
        for s in spaces {
            for (acc, b) in betti.iter_mut().zip(s.truth().unwrap()) {
                *acc += b;
            }
        }
        union = union.with_truth(betti);
    }
    Ok(union)
}
