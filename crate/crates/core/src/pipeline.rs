//! End-to-end run: validate, estimate the local volume constant, choose the
//! growth exponent, find good balls, pack, build the nerve, compute homology
//! and evaluate every bound.

use serde::Serialize;

use crate::bounds::{
    assemble_report, compute_theta, croke_estimate, BetaProvenance, BetaValue, BoundReport,
    CrokeEstimate, ReportInputs, Theta,
};
use crate::error::{Error, Result};
use crate::goodballs::{good_ball_table, GoodBall, GoodBallParams};
use crate::homology::{betti, betti_match, BettiMatch, BettiProfile, FieldSpec};
use crate::nerve::{build_nerve, simplex_counts, SimplexCounts, SimplicialComplex, DEFAULT_MULTIPLICITY_CAP};
use crate::packing::{
    build_packing, counting_chain_check, five_ball_check, ChainReport, FiveBallReport,
    IntersectionTable, Packing,
};
use crate::space::{validate, MetricMeasureSpace, ValidationReport};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum R0Policy {
    /// `R0 = inj / 2`.
    HalfInj,
    /// `R0 = f * inj`.
    InjFraction(f64),
    Explicit(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThetaPolicy {
    /// `theta = sqrt(log_5 rho_hat)`.
    Auto,
    Explicit(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BetaPolicy {
    Empirical,
    User(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub r0: R0Policy,
    pub theta: ThetaPolicy,
    pub beta: BetaPolicy,
    pub field: FieldSpec,
    /// Defaults to `n + 1`.
    pub dmax: Option<usize>,
    pub multiplicity_cap: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            r0: R0Policy::HalfInj,
            theta: ThetaPolicy::Auto,
            beta: BetaPolicy::Empirical,
            field: FieldSpec::default(),
            dmax: None,
            multiplicity_cap: DEFAULT_MULTIPLICITY_CAP,
        }
    }
}

/// A stage failure, carrying the stage name.
#[derive(Debug, thiserror::Error)]
#[error("stage {stage}: {source}")]
pub struct StageError {
    pub stage: &'static str,
    #[source]
    pub source: Error,
}

fn at<T>(stage: &'static str, r: Result<T>) -> Result<T, StageError> {
    r.map_err(|source| StageError { stage, source })
}

/// Outcome of the checks that decide the exit status of a run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MandatoryChecks {
    pub packing: bool,
    pub five_ball: bool,
    pub counting_chain: bool,
    pub main_inequality: bool,
    /// `None` without ground truth.
    pub betti_match: Option<bool>,
}

impl MandatoryChecks {
    pub fn passed(&self) -> bool {
        self.packing
            && self.five_ball
            && self.counting_chain
            && self.main_inequality
            && self.betti_match != Some(false)
    }

    pub fn failures(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        if !self.packing {
            out.push("packing");
        }
        if !self.five_ball {
            out.push("five_ball");
        }
        if !self.counting_chain {
            out.push("counting_chain");
        }
        if !self.main_inequality {
            out.push("main_inequality");
        }
        if self.betti_match == Some(false) {
            out.push("betti_match");
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub validation: ValidationReport,
    pub croke: Option<CrokeEstimate>,
    pub theta: Theta,
    pub params: GoodBallParams,
    pub good_balls: Vec<GoodBall>,
    pub packing: Packing,
    pub table: IntersectionTable,
    pub five_ball: FiveBallReport,
    pub chain: ChainReport,
    pub complex: SimplicialComplex,
    pub max_multiplicity: usize,
    pub counts: SimplexCounts,
    pub betti: BettiProfile,
    pub betti_match: Option<BettiMatch>,
    pub bounds: BoundReport,
    pub checks: MandatoryChecks,
}

pub fn run_pipeline(space: &MetricMeasureSpace, config: &PipelineConfig) -> Result<RunOutput, StageError> {
    let validation = validate(space);
    if !validation.passed() {
        return Err(StageError {
            stage: "validate",
            source: Error::Validation(validation.summary()),
        });
    }

    let n = space.dim();
    let r0 = match config.r0 {
        R0Policy::HalfInj => space.inj() / 2.0,
        R0Policy::InjFraction(f) => f * space.inj(),
        R0Policy::Explicit(r) => r,
    };
    if !(r0 > 0.0) || r0 > space.inj() / 2.0 {
        return Err(StageError {
            stage: "config",
            source: Error::param(format!("R0 = {r0} must lie in (0, inj/2 = {}]", space.inj() / 2.0)),
        });
    }

    let (beta, croke) = match config.beta {
        BetaPolicy::Empirical => {
            let est = at("croke_estimate", croke_estimate(space, r0))?;
            (
                BetaValue {
                    value: est.beta,
                    provenance: BetaProvenance::Empirical,
                },
                Some(est),
            )
        }
        BetaPolicy::User(value) => {
            if !(value > 0.0 && value.is_finite()) {
                return Err(StageError {
                    stage: "config",
                    source: Error::param(format!("beta_n must be positive, got {value}")),
                });
            }
            (
                BetaValue {
                    value,
                    provenance: BetaProvenance::User,
                },
                None,
            )
        }
    };

    let rho_hat = space.volume() / (beta.value * r0.powi(n as i32));
    let theta = match config.theta {
        ThetaPolicy::Auto => at("compute_theta", compute_theta(rho_hat))?,
        ThetaPolicy::Explicit(value) => Theta { value, clamped: false },
    };
    let params = at("good_balls", GoodBallParams::new(n, r0, theta.value))?;
    let good_balls = at("good_balls", good_ball_table(space, &params))?;

    let packing = at("packing", build_packing(space, &good_balls))?;
    let table = IntersectionTable::build(space, &packing);
    let five_ball = five_ball_check(space, &packing, &table);
    let chain = counting_chain_check(space, &packing, &table, params.alpha, beta.value, r0);

    let dmax = config.dmax.unwrap_or(n + 1);
    let nerve = at("nerve", build_nerve(space, &packing, dmax, config.multiplicity_cap))?;
    let counts = simplex_counts(&nerve.complex);
    let profile = betti(&nerve.complex, config.field);
    let matched = space.truth().map(|truth| betti_match(&profile, truth));

    let bounds = at(
        "bounds",
        assemble_report(&ReportInputs {
            space: Some(space),
            r0: Some(r0),
            beta: Some(beta),
            theta: Some(theta),
            alpha: Some(params.alpha),
            packing: Some(&packing),
            table: Some(&table),
            counts: Some(&counts),
            betti: Some(&profile),
        }),
    )?;

    if table.t != counts.t.get(1).copied().unwrap_or(0) {
        return Err(StageError {
            stage: "nerve",
            source: Error::Internal(format!(
                "pair count T = {} differs from the nerve's t_1 = {:?}",
                table.t,
                counts.t.get(1)
            )),
        });
    }

    let checks = MandatoryChecks {
        packing: true,
        five_ball: five_ball.passed(),
        counting_chain: chain.passed(),
        main_inequality: bounds.main_inequality_ok.iter().all(|c| *c != Some(false)),
        betti_match: matched.as_ref().map(|m| m.matched),
    };

    Ok(RunOutput {
        validation,
        croke,
        theta,
        params,
        good_balls,
        packing,
        table,
        five_ball,
        chain,
        complex: nerve.complex,
        max_multiplicity: nerve.max_multiplicity,
        counts,
        betti: profile,
        betti_match: matched,
        bounds,
        checks,
    })
}

#[derive(Serialize)]
struct GoodBallRow {
    center: usize,
    radius: f64,
    scale_index: u32,
    vol_r: f64,
    vol_5r: f64,
}

#[derive(Serialize)]
struct LinkRow {
    link: &'static str,
    ok: bool,
    offending: Option<usize>,
    detail: String,
}

/// The serialized run report: every `BoundReport` key plus the stage
/// details.
#[derive(Serialize)]
pub struct RunReport<'a> {
    #[serde(flatten)]
    bounds: &'a BoundReport,
    m: usize,
    validation: String,
    validation_tolerance: f64,
    croke: Option<&'a CrokeEstimate>,
    dmax: usize,
    max_multiplicity: usize,
    five_ball_ok: bool,
    five_ball_pairs: usize,
    five_ball_violations: usize,
    five_ball_small_radius_failures: usize,
    chain: Vec<LinkRow>,
    packed_volume: f64,
    packed_strict: bool,
    betti_truth: Option<&'a [usize]>,
    betti_match: Option<bool>,
    checks: &'a MandatoryChecks,
    mandatory_ok: bool,
    packing: Vec<GoodBallRow>,
    good_balls: Vec<GoodBallRow>,
}

fn rows(balls: &[GoodBall]) -> Vec<GoodBallRow> {
    balls
        .iter()
        .map(|b| GoodBallRow {
            center: b.center,
            radius: b.radius,
            scale_index: b.scale_index,
            vol_r: b.vol_r,
            vol_5r: b.vol_5r,
        })
        .collect()
}

impl RunOutput {
    pub fn report<'a>(&'a self, space: &'a MetricMeasureSpace) -> RunReport<'a> {
        RunReport {
            bounds: &self.bounds,
            m: space.len(),
            validation: self.validation.summary(),
            validation_tolerance: self.validation.tolerance,
            croke: self.croke.as_ref(),
            dmax: self.complex.dmax(),
            max_multiplicity: self.max_multiplicity,
            five_ball_ok: self.five_ball.passed(),
            five_ball_pairs: self.five_ball.pairs_checked,
            five_ball_violations: self.five_ball.violations.len(),
            five_ball_small_radius_failures: self.five_ball.small_radius_form_failures.len(),
            chain: self
                .chain
                .links
                .iter()
                .map(|l| LinkRow {
                    link: l.name,
                    ok: l.ok,
                    offending: l.offending,
                    detail: l.detail.clone(),
                })
                .collect(),
            packed_volume: self.chain.packed_volume,
            packed_strict: self.chain.packed_strict,
            betti_truth: space.truth(),
            betti_match: self.betti_match.as_ref().map(|m| m.matched),
            checks: &self.checks,
            mandatory_ok: self.checks.passed(),
            packing: rows(&self.packing.selected),
            good_balls: rows(&self.good_balls),
        }
    }
}
