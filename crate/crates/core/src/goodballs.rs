//! Balls satisfying the volume-growth condition
//! `vol B(p, 5R) <= alpha * vol B(p, R)` with `alpha = 5^(n + theta)`, and
//! the largest such radius per point.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::space::{ball_volume, MetricMeasureSpace, RowProfile};

/// Radius cap `R0`, growth exponent `theta` and the growth factor
/// `alpha = 5^(n + theta)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GoodBallParams {
    pub r0: f64,
    pub theta: f64,
    pub alpha: f64,
}

impl GoodBallParams {
    pub fn new(dim: usize, r0: f64, theta: f64) -> Result<Self> {
        if !(r0 > 0.0 && r0.is_finite()) {
            return Err(Error::param(format!("R0 must be positive, got {r0}")));
        }
        if !(theta >= 0.0 && theta.is_finite()) {
            return Err(Error::param(format!("theta must be nonnegative, got {theta}")));
        }
        Ok(Self {
            r0,
            theta,
            alpha: growth_factor(dim, theta),
        })
    }

    /// Rejects caps above half the injectivity radius.
    pub fn check_against(&self, space: &MetricMeasureSpace) -> Result<()> {
        if self.r0 > space.inj() / 2.0 {
            return Err(Error::param(format!(
                "R0 = {} exceeds inj/2 = {}",
                self.r0,
                space.inj() / 2.0
            )));
        }
        Ok(())
    }
}

/// `5^(n + theta)`.
pub fn growth_factor(dim: usize, theta: f64) -> f64 {
    5f64.powi(dim as i32) * 5f64.powf(theta)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GoodBall {
    pub center: usize,
    pub radius: f64,
    pub vol_r: f64,
    pub vol_5r: f64,
    pub scale_index: u32,
    /// Set for the trivial ball of a single-point space.
    pub degenerate: bool,
}

pub fn growth_ok(space: &MetricMeasureSpace, p: usize, radius: f64, alpha: f64) -> bool {
    ball_volume(space, p, 5.0 * radius) <= alpha * ball_volume(space, p, radius)
}

/// Candidate radii for the good-ball search at `p`, descending: `R0`, every
/// distinct distance from `p` in `(0, R0]`, and the fallback
/// `d_min(p) / 6` when it does not exceed `R0`.
pub fn candidate_radii(profile: &RowProfile, d_min: Option<f64>, r0: f64) -> Vec<f64> {
    let mut radii = profile.distinct_radii(0.0, r0);
    if radii.last() != Some(&r0) {
        radii.push(r0);
    }
    if let Some(fallback) = d_min.map(|d| d / 6.0).filter(|&f| f > 0.0 && f <= r0) {
        if let Err(pos) = radii.binary_search_by(|r| r.total_cmp(&fallback)) {
            radii.insert(pos, fallback);
        }
    }
    radii.reverse();
    radii
}

/// The largest candidate radius at `p` whose ball passes the growth test.
pub fn find_good_ball(
    space: &MetricMeasureSpace,
    p: usize,
    params: &GoodBallParams,
) -> Result<GoodBall> {
    if p >= space.len() {
        return Err(Error::IndexOutOfRange {
            index: p,
            len: space.len(),
        });
    }
    let profile = RowProfile::new(space, p);
    find_with_profile(space, &profile, params)
}

fn find_with_profile(
    space: &MetricMeasureSpace,
    profile: &RowProfile,
    params: &GoodBallParams,
) -> Result<GoodBall> {
    let p = profile.center();
    let d_min = space.nearest_neighbor_distance(p);
    let make = |radius: f64, degenerate: bool| -> Result<GoodBall> {
        Ok(GoodBall {
            center: p,
            radius,
            vol_r: profile.volume_within(radius),
            vol_5r: profile.volume_within(5.0 * radius),
            scale_index: scale_index(radius, params.r0)?,
            degenerate,
        })
    };
    if space.len() == 1 {
        return make(params.r0, true);
    }
    for radius in candidate_radii(profile, d_min, params.r0) {
        if profile.volume_within(5.0 * radius) <= params.alpha * profile.volume_within(radius) {
            return make(radius, false);
        }
    }
    Err(Error::Internal(format!(
        "no candidate radius at point {p} passes the growth test (alpha = {})",
        params.alpha
    )))
}

/// One good ball per point, in point-index order.
pub fn good_ball_table(space: &MetricMeasureSpace, params: &GoodBallParams) -> Result<Vec<GoodBall>> {
    (0..space.len())
        .into_par_iter()
        .map(|p| find_with_profile(space, &RowProfile::new(space, p), params))
        .collect()
}

/// `0` for `radius == r0`, otherwise the unique `k >= 1` with
/// `r0 / 5^k < radius <= r0 / 5^(k-1)`.
pub fn scale_index(radius: f64, r0: f64) -> Result<u32> {
    if !(radius > 0.0 && radius <= r0) {
        return Err(Error::param(format!(
            "radius {radius} outside (0, R0 = {r0}]"
        )));
    }
    if radius == r0 {
        return Ok(0);
    }
    let mut k = 1u32;
    while !(radius > r0 / 5f64.powi(k as i32)) {
        k += 1;
    }
    Ok(k)
}
