//! Closed-form quantities of the covering argument: the empirical local
//! volume constant, the growth exponent, the simplex-count bound, the
//! explicit dimensional constants and the per-run verdict assembled from
//! them.

use std::f64::consts::LN_2;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::homology::BettiProfile;
use crate::nerve::SimplexCounts;
use crate::packing::{IntersectionTable, Packing};
use crate::space::{MetricMeasureSpace, RowProfile};

pub fn log5(x: f64) -> f64 {
    x.ln() / 5f64.ln()
}

/// Minimum of `vol B(p, R) / R^n` over all points and radii in `(r_floor, R0]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CrokeEstimate {
    pub beta: f64,
    pub r_floor: f64,
    pub argmin_point: usize,
    pub argmin_radius: f64,
}

/// Empirical local volume constant. Candidate radii are the distinct
/// distances from each point in `(r_floor, R0]` together with `R0`, where
/// `r_floor` is three times the largest nearest-neighbor spacing.
pub fn croke_estimate(space: &MetricMeasureSpace, r0: f64) -> Result<CrokeEstimate> {
    if !(r0 > 0.0) || r0 > space.inj() / 2.0 {
        return Err(Error::param(format!(
            "R0 = {r0} must lie in (0, inj/2 = {}]",
            space.inj() / 2.0
        )));
    }
    let r_floor = 3.0 * space.max_nearest_neighbor_distance();
    if r0 <= r_floor {
        return Err(Error::ResolutionInsufficient { r0, r_floor });
    }
    let n = space.dim() as i32;
    let best = (0..space.len())
        .into_par_iter()
        .map(|p| {
            let profile = RowProfile::new(space, p);
            let mut radii = profile.distinct_radii(r_floor, r0);
            if radii.last() != Some(&r0) {
                radii.push(r0);
            }
            radii
                .into_iter()
                .map(|r| (profile.volume_within(r) / r.powi(n), p, r))
                .min_by(|a, b| a.0.total_cmp(&b.0).then(a.2.total_cmp(&b.2)))
                .expect("R0 is always a candidate")
        })
        .reduce_with(|a, b| {
            if b.0 < a.0 || (b.0 == a.0 && b.1 < a.1) {
                b
            } else {
                a
            }
        })
        .expect("space is nonempty");
    Ok(CrokeEstimate {
        beta: best.0,
        r_floor,
        argmin_point: best.1,
        argmin_radius: best.2,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Theta {
    pub value: f64,
    /// `rho_hat < 1`, so the square root was clamped to zero.
    pub clamped: bool,
}

/// `theta = sqrt(log_5 rho_hat)`, clamped to 0 below `rho_hat = 1`.
pub fn compute_theta(rho_hat: f64) -> Result<Theta> {
    if !(rho_hat > 0.0 && rho_hat.is_finite()) {
        return Err(Error::param(format!("rho_hat must be positive, got {rho_hat}")));
    }
    if rho_hat < 1.0 {
        return Ok(Theta { value: 0.0, clamped: true });
    }
    Ok(Theta {
        value: log5(rho_hat).sqrt(),
        clamped: false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScaleBoundReport {
    pub k_max: u32,
    pub theta: f64,
    /// `k_max < theta + 1`, equivalently `k_max <= ceil(theta)`.
    pub ok: bool,
    /// The strict form `k_max < theta`.
    pub strict: bool,
    /// Passed only through the `+1` allowance.
    pub boundary: bool,
}

pub fn scale_bound_check(packing: &Packing, theta: f64) -> ScaleBoundReport {
    let k_max = packing.max_scale_index();
    let k = k_max as f64;
    let ok = k < theta + 1.0;
    let strict = k < theta;
    ScaleBoundReport {
        k_max,
        theta,
        ok,
        strict,
        boundary: ok && !strict,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Theorem13 {
    /// `2 rho_hat 5^(n + (n+1) sqrt(log_5 rho_hat))`.
    pub bound_tk: f64,
    /// The same without the factor 2: the bound on pairwise intersections.
    pub bound_t: f64,
    pub clamped: bool,
}

pub fn theorem13_bound(rho_hat: f64, n: usize) -> Theorem13 {
    let clamped = rho_hat < 1.0;
    let root = if clamped { 0.0 } else { log5(rho_hat).sqrt() };
    let bound_t = rho_hat * 5f64.powi(n as i32) * 5f64.powf((n + 1) as f64 * root);
    Theorem13 {
        bound_tk: 2.0 * bound_t,
        bound_t,
        clamped,
    }
}

/// Smallest `x` with `theorem13_bound(x, n).bound_tk >= target`. The bound is
/// continuous and strictly increasing in `x`, linear below `x = 1`.
pub fn invert_theorem13(target: f64, n: usize) -> f64 {
    let at_one = theorem13_bound(1.0, n).bound_tk;
    if target <= at_one {
        return target / at_one;
    }
    let (mut lo, mut hi) = (1.0, target.max(1.0));
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if theorem13_bound(mid, n).bound_tk >= target {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    hi
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExplicitConstants {
    pub cn: f64,
    pub cn_prime: f64,
    /// `2^n / beta_n < 1`: the inner square root was clamped at 0.
    pub clamped: bool,
    /// `D_n = 2 C_n`, the simplex-count constant in terms of `vol / inj^n`.
    pub dn: f64,
    pub dn_prime: f64,
}

/// `C_n = (2^n / beta_n) 5^(2n + (n+1) sqrt(log_5(2^n / beta_n)))` and
/// `C_n' = (n+1) sqrt(ln 5)`.
pub fn explicit_constants(n: usize, beta_n: f64) -> Result<ExplicitConstants> {
    if !(beta_n > 0.0 && beta_n.is_finite()) {
        return Err(Error::param(format!("beta_n must be positive, got {beta_n}")));
    }
    let ratio = (n as f64 * LN_2).exp() / beta_n;
    let clamped = ratio < 1.0;
    let root = if clamped { 0.0 } else { log5(ratio).sqrt() };
    let cn = ratio * 5f64.powi(2 * n as i32) * 5f64.powf((n + 1) as f64 * root);
    let cn_prime = (n + 1) as f64 * 5f64.ln().sqrt();
    Ok(ExplicitConstants {
        cn,
        cn_prime,
        clamped,
        dn: 2.0 * cn,
        dn_prime: cn_prime,
    })
}

/// One dimension of the forward check `b_k <= t_k <= theorem13_bound`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Theorem11Check {
    pub k: usize,
    pub b_k: usize,
    pub t_k: usize,
    /// `b_k = 0`: nothing to check.
    pub skipped: bool,
    pub b_le_t: bool,
    pub t_le_bound: bool,
    pub ok: bool,
    /// `C_n b_k / exp(C_n' sqrt(ln b_k))`, informational.
    pub literal_rhs: f64,
    /// Lower bound on `vol / inj^n` obtained by inverting the simplex-count
    /// bound at `b_k`, informational.
    pub inverted_lower_bound: f64,
}

pub struct Theorem11Inputs<'a> {
    pub rho: f64,
    pub rho_hat: f64,
    pub b: &'a [usize],
    pub t: &'a [usize],
    pub n: usize,
    pub beta_n: f64,
    pub r0: f64,
    pub inj: f64,
}

pub fn verify_theorem11(inputs: &Theorem11Inputs<'_>) -> Result<Vec<Theorem11Check>> {
    let consts = explicit_constants(inputs.n, inputs.beta_n)?;
    let bound = theorem13_bound(inputs.rho_hat, inputs.n).bound_tk;
    let n = inputs.n as i32;
    Ok(inputs
        .b
        .iter()
        .enumerate()
        .map(|(k, &b_k)| {
            let t_k = inputs.t.get(k).copied().unwrap_or(0);
            let skipped = b_k == 0;
            let b_le_t = b_k <= t_k;
            let t_le_bound = (t_k as f64) <= bound;
            let bf = b_k as f64;
            let (literal_rhs, inverted_lower_bound) = if skipped {
                (0.0, 0.0)
            } else {
                let literal = consts.cn * bf / (consts.cn_prime * bf.ln().sqrt()).exp();
                // rho_hat = rho (inj / R0)^n / beta_n
                let x = invert_theorem13(bf, inputs.n);
                (literal, x * inputs.beta_n * (inputs.r0 / inputs.inj).powi(n))
            };
            Theorem11Check {
                k,
                b_k,
                t_k,
                skipped,
                b_le_t,
                t_le_bound,
                ok: skipped || (b_le_t && t_le_bound),
                literal_rhs,
                inverted_lower_bound,
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BetaProvenance {
    Empirical,
    User,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BetaValue {
    pub value: f64,
    pub provenance: BetaProvenance,
}

/// Every evaluated quantity of a run. Serialized keys follow the field names.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub n: usize,
    pub vol: f64,
    pub inj: f64,
    pub rho: f64,
    pub rho_hat: f64,
    pub beta_n: f64,
    pub beta_n_provenance: BetaProvenance,
    #[serde(rename = "R0")]
    pub r0: f64,
    pub theta: f64,
    pub theta_clamped: bool,
    pub alpha: f64,
    pub k_max_scale: u32,
    pub scale_bound_ok: bool,
    pub scale_bound_strict: bool,
    #[serde(rename = "N")]
    pub n_balls: usize,
    #[serde(rename = "T")]
    pub t_pairs: usize,
    #[serde(rename = "T_center_distance")]
    pub t_pairs_center_distance: usize,
    pub t: Vec<usize>,
    pub b: Vec<usize>,
    pub field: u32,
    #[serde(rename = "bound_T")]
    pub bound_t: f64,
    pub bound_tk: f64,
    pub bound_clamped: bool,
    #[serde(rename = "Cn")]
    pub cn: f64,
    #[serde(rename = "Cnprime")]
    pub cn_prime: f64,
    #[serde(rename = "Cn_clamped")]
    pub cn_clamped: bool,
    #[serde(rename = "Dn")]
    pub dn: f64,
    #[serde(rename = "Dnprime")]
    pub dn_prime: f64,
    /// `D_n rho exp(D_n' sqrt(ln rho))`; comparable with `t_k` when `R0 = inj/2`.
    pub corollary_bound: f64,
    /// Per `k`: `b_k <= t_k <= bound_tk`, `None` where `b_k = 0`.
    pub main_inequality_ok: Vec<Option<bool>>,
    pub theorem11_literal_rhs: Vec<Option<f64>>,
    pub emb_lower_bound_inverted: Vec<Option<f64>>,
    pub claim_t0_le_2t1: Option<bool>,
    pub claim_ti_le_t1: Option<bool>,
}

/// Outputs of the earlier stages, any of which may be missing.
#[derive(Default)]
pub struct ReportInputs<'a> {
    pub space: Option<&'a MetricMeasureSpace>,
    pub r0: Option<f64>,
    pub beta: Option<BetaValue>,
    pub theta: Option<Theta>,
    pub alpha: Option<f64>,
    pub packing: Option<&'a Packing>,
    pub table: Option<&'a IntersectionTable>,
    pub counts: Option<&'a SimplexCounts>,
    pub betti: Option<&'a BettiProfile>,
}

pub fn assemble_report(inputs: &ReportInputs<'_>) -> Result<BoundReport> {
    let space = inputs.space.ok_or(Error::MissingStage("space"))?;
    let r0 = inputs.r0.ok_or(Error::MissingStage("R0"))?;
    let beta = inputs.beta.ok_or(Error::MissingStage("croke_estimate"))?;
    let theta = inputs.theta.ok_or(Error::MissingStage("compute_theta"))?;
    let alpha = inputs.alpha.ok_or(Error::MissingStage("good_balls"))?;
    let packing = inputs.packing.ok_or(Error::MissingStage("packing"))?;
    let table = inputs.table.ok_or(Error::MissingStage("intersection_table"))?;
    let counts = inputs.counts.ok_or(Error::MissingStage("nerve"))?;
    let betti = inputs.betti.ok_or(Error::MissingStage("homology"))?;

    let n = space.dim();
    let vol = space.volume();
    let inj = space.inj();
    let rho = vol / inj.powi(n as i32);
    let rho_hat = vol / (beta.value * r0.powi(n as i32));
    let t13 = theorem13_bound(rho_hat, n);
    let consts = explicit_constants(n, beta.value)?;
    let scale = scale_bound_check(packing, theta.value);
    let checks = verify_theorem11(&Theorem11Inputs {
        rho,
        rho_hat,
        b: &betti.b,
        t: &counts.t,
        n,
        beta_n: beta.value,
        r0,
        inj,
    })?;
    let corollary_bound =
        consts.dn * rho * (consts.dn_prime * rho.ln().max(0.0).sqrt()).exp();

    Ok(BoundReport {
        n,
        vol,
        inj,
        rho,
        rho_hat,
        beta_n: beta.value,
        beta_n_provenance: beta.provenance,
        r0,
        theta: theta.value,
        theta_clamped: theta.clamped,
        alpha,
        k_max_scale: scale.k_max,
        scale_bound_ok: scale.ok,
        scale_bound_strict: scale.strict,
        n_balls: packing.len(),
        t_pairs: table.t,
        t_pairs_center_distance: table.t_center_distance,
        t: counts.t.clone(),
        b: betti.b.clone(),
        field: betti.field.characteristic(),
        bound_t: t13.bound_t,
        bound_tk: t13.bound_tk,
        bound_clamped: t13.clamped,
        cn: consts.cn,
        cn_prime: consts.cn_prime,
        cn_clamped: consts.clamped,
        dn: consts.dn,
        dn_prime: consts.dn_prime,
        corollary_bound,
        main_inequality_ok: checks.iter().map(|c| (!c.skipped).then_some(c.ok)).collect(),
        theorem11_literal_rhs: checks
            .iter()
            .map(|c| (!c.skipped).then_some(c.literal_rhs))
            .collect(),
        emb_lower_bound_inverted: checks
            .iter()
            .map(|c| (!c.skipped).then_some(c.inverted_lower_bound))
            .collect(),
        claim_t0_le_2t1: counts.t0_le_2t1,
        claim_ti_le_t1: counts.ti_le_t1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{circle_space, flat_torus_space};
    use std::f64::consts::PI;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn theta_values() {
        assert!((compute_theta(5f64.powi(9)).unwrap().value - 3.0).abs() < 1e-12);
        assert_eq!(compute_theta(1.0).unwrap(), Theta { value: 0.0, clamped: false });
        assert!((compute_theta(5f64.powf(0.25)).unwrap().value - 0.5).abs() < 1e-12);
        assert_eq!(compute_theta(0.5).unwrap(), Theta { value: 0.0, clamped: true });
        assert!(compute_theta(0.0).is_err());
        assert!(compute_theta(-1.0).is_err());
    }

    #[test]
    fn theorem13_values() {
        assert_eq!(theorem13_bound(1.0, 1).bound_tk, 10.0);
        assert_eq!(theorem13_bound(1.0, 1).bound_t, 5.0);
        assert!(rel(theorem13_bound(5.0, 1).bound_tk, 1250.0) < 1e-12);
        let expected = 50.0 * 5f64.powf(2.0 + 3.0 * 2f64.sqrt());
        assert!(rel(theorem13_bound(25.0, 2).bound_tk, expected) < 1e-12);
        let low = theorem13_bound(0.5, 2);
        assert!(low.clamped);
        assert_eq!(low.bound_tk, 25.0);
    }

    #[test]
    fn inversion_roundtrip() {
        for n in 1..=3 {
            for target in [1.0, 3.0, 2.0 * 5f64.powi(n as i32), 1e4, 1e9] {
                let x = invert_theorem13(target, n);
                let back = theorem13_bound(x, n).bound_tk;
                assert!(rel(back, target) < 1e-9, "n={n} target={target} back={back}");
            }
        }
    }

    #[test]
    fn explicit_constant_values() {
        let c = explicit_constants(1, 2.0).unwrap();
        assert!(rel(c.cn, 25.0) < 1e-15);
        assert!(rel(c.cn_prime, 2.0 * 5f64.ln().sqrt()) < 1e-15);
        assert!(!c.clamped);
        let c = explicit_constants(2, PI).unwrap();
        let expected = 4.0 / PI * 5f64.powf(4.0 + 3.0 * log5(4.0 / PI).sqrt());
        assert!(rel(c.cn, expected) < 1e-12);
        // 3 sqrt(ln 5) = 3.805908723538...
        assert!((c.cn_prime - 3.805_908_723_538_558).abs() < 1e-12);
        assert!(explicit_constants(1, 4.0).unwrap().clamped);
        assert!(explicit_constants(1, 0.0).is_err());
    }

    #[test]
    fn croke_on_circle_and_torus() {
        let c = circle_space(2000).unwrap();
        let est = croke_estimate(&c, PI / 2.0).unwrap();
        let spacing = 2.0 * PI / 2000.0;
        assert!(est.beta >= 2.0 && est.beta - 2.0 <= 2.0 * spacing / (PI / 2.0) + 1e-12);

        let t = flat_torus_space(1.0, 1.0, 60, 60).unwrap();
        let est = croke_estimate(&t, 0.25).unwrap();
        assert!((est.beta - PI).abs() < 0.3, "beta = {}", est.beta);
    }

    #[test]
    fn croke_resolution_error() {
        let c = circle_space(20).unwrap();
        let err = croke_estimate(&c, 0.5).unwrap_err();
        assert!(matches!(err, Error::ResolutionInsufficient { .. }));
        assert!(croke_estimate(&c, 2.0).is_err());
    }

    #[test]
    fn missing_stage_is_named() {
        let err = assemble_report(&ReportInputs::default()).unwrap_err();
        assert!(matches!(err, Error::MissingStage("space")));
    }
}
