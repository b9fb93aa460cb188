//! Acceptance criteria, one test per criterion. Each prints a single
//! `[PASS]` / `[FAIL]` line before asserting. Run with
//! `cargo test -p embolic --test acceptance -- --nocapture --test-threads 1`.

mod common;

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use embolic::bounds::{compute_theta, explicit_constants, log5, theorem13_bound};
use embolic::cli::{cmd_run, RunArgs, EXIT_OK};
use embolic::goodballs::{good_ball_table, GoodBallParams};
use embolic::homology::{betti, boundary_matrix, FieldSpec};
use embolic::io::write_space_binary;
use embolic::packing::build_packing;
use embolic::pipeline::{run_pipeline, PipelineConfig, R0Policy, RunOutput};
use embolic::space::{circle_space, disjoint_union, flat_torus_space, sphere2_space, MetricMeasureSpace};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// R0 used where a criterion leaves it open: doubled balls of radius
/// `0.48 inj` stay geodesically convex, which `inj / 2` does not guarantee.
const CONVEX_FRACTION: f64 = 0.24;

fn verdict(criterion: u32, ok: bool, detail: impl AsRef<str>) {
    println!(
        "[{}] criterion {criterion}: {}",
        if ok { "PASS" } else { "FAIL" },
        detail.as_ref()
    );
    assert!(ok, "criterion {criterion} failed: {}", detail.as_ref());
}

fn single_threaded<T: Send>(f: impl FnOnce() -> T + Send) -> (T, Duration) {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let start = Instant::now();
    let out = pool.install(f);
    (out, start.elapsed())
}

fn run(space: &MetricMeasureSpace, r0: R0Policy) -> (RunOutput, Duration) {
    let config = PipelineConfig {
        r0,
        ..Default::default()
    };
    let start = Instant::now();
    let out = run_pipeline(space, &config).unwrap_or_else(|e| panic!("pipeline failed: {e}"));
    (out, start.elapsed())
}

/// Equality up to trailing zeros from the truncated top dimension.
fn same_betti(got: &[usize], want: &[usize]) -> bool {
    let n = got.len().max(want.len());
    (0..n).all(|i| got.get(i).copied().unwrap_or(0) == want.get(i).copied().unwrap_or(0))
}

fn tk_within_bound(out: &RunOutput) -> bool {
    out.counts.t.iter().all(|&t| t as f64 <= out.bounds.bound_tk)
}

#[test]
fn criterion_1_circle_end_to_end() {
    let space = circle_space(2000).unwrap();
    let config = PipelineConfig {
        r0: R0Policy::Explicit(PI / 2.0),
        ..Default::default()
    };
    let (result, elapsed) = single_threaded(|| run_pipeline(&space, &config));
    let out = result.unwrap_or_else(|e| panic!("pipeline failed: {e}"));
    let b2 = betti(&out.complex, FieldSpec::new(2).unwrap()).b;
    let b3 = betti(&out.complex, FieldSpec::new(3).unwrap()).b;
    let beta = out.bounds.beta_n;
    let checks = [
        ("exit 0", out.checks.passed()),
        ("Betti F2 = (1,1)", same_betti(&b2, &[1, 1])),
        ("Betti F3 = (1,1)", same_betti(&b3, &[1, 1])),
        ("T = t_1", out.table.t == out.counts.t[1]),
        ("t_k <= bound", tk_within_bound(&out)),
        ("beta = 2 +- 0.01", (beta - 2.0).abs() <= 0.01),
        ("< 30 s", elapsed < Duration::from_secs(30)),
    ];
    let failed: Vec<&str> = checks.iter().filter(|c| !c.1).map(|c| c.0).collect();
    verdict(
        1,
        failed.is_empty(),
        format!(
            "circle(2000) R0=pi/2: N={} t={:?} b_F2={:?} b_F3={:?} beta={beta:.5} \
             bound_tk={:.4e} {:.2?}; failed: {failed:?}",
            out.packing.len(),
            out.counts.t,
            b2,
            b3,
            out.bounds.bound_tk,
            elapsed
        ),
    );
}

/// Same circle with the convex-cover radius; reported alongside criterion 1.
#[test]
fn criterion_1_supplement_convex_radius() {
    let space = circle_space(2000).unwrap();
    let (out, elapsed) = run(&space, R0Policy::InjFraction(CONVEX_FRACTION));
    let b3 = betti(&out.complex, FieldSpec::new(3).unwrap()).b;
    let ok = out.checks.passed()
        && same_betti(&out.betti.b, &[1, 1])
        && same_betti(&b3, &[1, 1])
        && out.table.t == out.counts.t[1]
        && tk_within_bound(&out);
    println!(
        "[{}] criterion 1 (supplement, R0=0.24 inj): t={:?} b={:?} beta={:.5} {:.2?}",
        if ok { "PASS" } else { "FAIL" },
        out.counts.t,
        out.betti.b,
        out.bounds.beta_n,
        elapsed
    );
    assert!(ok);
}

#[test]
fn criterion_2_sphere_end_to_end() {
    let space = sphere2_space(2000).unwrap();
    let (out, elapsed) = run(&space, R0Policy::InjFraction(CONVEX_FRACTION));
    let ok = same_betti(&out.betti.b, &[1, 0, 1])
        && out.five_ball.passed()
        && out.chain.passed()
        && out.chain.links.len() == 5
        && elapsed < Duration::from_secs(120);
    verdict(
        2,
        ok,
        format!(
            "sphere2(2000): b={:?} five-ball pairs={} violations={} chain={:?} {:.2?}",
            out.betti.b,
            out.five_ball.pairs_checked,
            out.five_ball.violations.len(),
            out.chain.links.iter().map(|l| (l.name, l.ok)).collect::<Vec<_>>(),
            elapsed
        ),
    );
}

#[test]
fn criterion_3_flat_torus_end_to_end() {
    let space = flat_torus_space(1.0, 1.0, 50, 50).unwrap();
    let (out, elapsed) = run(&space, R0Policy::InjFraction(CONVEX_FRACTION));
    let k_max = out.packing.max_scale_index();
    let ceil_theta = out.theta.value.ceil() as u32;
    let ok = same_betti(&out.betti.b, &[1, 2, 1])
        && k_max <= ceil_theta
        && out.bounds.claim_t0_le_2t1.is_some();
    verdict(
        3,
        ok,
        format!(
            "flat torus 50x50: b={:?} k_max={k_max} ceil(theta)={ceil_theta} \
             claim_t0_le_2t1={:?} t={:?} {:.2?}",
            out.betti.b, out.bounds.claim_t0_le_2t1, out.counts.t, elapsed
        ),
    );
}

#[test]
fn criterion_4_betti_scaling() {
    let sphere = sphere2_space(500).unwrap();
    let mut lines = Vec::new();
    let mut ok = true;
    for c in [1usize, 2, 5] {
        let space = disjoint_union(&vec![sphere.clone(); c], 100.0).unwrap();
        let (out, _) = run(&space, R0Policy::InjFraction(CONVEX_FRACTION));
        let b2 = out.betti.b[2];
        let t2 = out.counts.t[2];
        let bound = out.bounds.bound_tk;
        ok &= b2 == c && b2 <= t2 && (t2 as f64) <= bound;
        lines.push(format!("c={c}: b2={b2} t2={t2} bound={bound:.4e}"));
    }
    verdict(4, ok, lines.join("; "));
}

#[test]
fn criterion_5_homology_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let (mut agree, mut dd_zero, mut tested) = (0, 0, 0);
    let mut first_mismatch = None;
    while tested < 200 {
        let dmax = rng.gen_range(1..=3);
        let complex = common::random_complex(&mut rng, 8, dmax);
        if complex.counts().iter().any(|&t| t > 16) {
            continue;
        }
        tested += 1;
        let got = betti(&complex, FieldSpec::default()).b;
        let want = common::brute_force_betti_f2(&complex);
        if got == want {
            agree += 1;
        } else if first_mismatch.is_none() {
            first_mismatch = Some((complex.to_text(), got, want));
        }
        let mut zero = true;
        for d in 2..=dmax {
            let outer = boundary_matrix(&complex, d, FieldSpec::default()).unwrap().dense();
            let inner = boundary_matrix(&complex, d - 1, FieldSpec::default()).unwrap().dense();
            for col in 0..outer.first().map_or(0, Vec::len) {
                for row in 0..inner.len() {
                    let s: u32 = (0..outer.len()).map(|k| inner[row][k] * outer[k][col]).sum();
                    zero &= s % 2 == 0;
                }
            }
        }
        dd_zero += usize::from(zero);
    }
    verdict(
        5,
        agree == 200 && dd_zero == 200,
        format!("{agree}/200 agree with enumeration, {dd_zero}/200 with d∘d = 0; {first_mismatch:?}"),
    );
}

fn random_space(rng: &mut impl Rng) -> (String, MetricMeasureSpace) {
    match rng.gen_range(0..4) {
        0 => {
            let m = rng.gen_range(10..400);
            (format!("circle:{m}"), circle_space(m).unwrap())
        }
        1 => {
            let m = rng.gen_range(10..400);
            (format!("sphere2:{m}"), sphere2_space(m).unwrap())
        }
        2 => {
            let (a, b) = (rng.gen_range(0.5..2.0), rng.gen_range(0.5..2.0));
            let (m1, m2) = (rng.gen_range(3..20), rng.gen_range(3..20));
            (
                format!("flat-torus:{a:.3},{b:.3},{m1},{m2}"),
                flat_torus_space(a, b, m1, m2).unwrap(),
            )
        }
        _ => {
            let c = rng.gen_range(2..4);
            let m = rng.gen_range(10..120);
            let part = if rng.gen_bool(0.5) {
                circle_space(m).unwrap()
            } else {
                sphere2_space(m).unwrap()
            };
            let sep = 2.0 * part.diameter() + rng.gen_range(0.1..10.0);
            (format!("union:{c}x{m}"), disjoint_union(&vec![part; c], sep).unwrap())
        }
    }
}

#[test]
fn criterion_6_packing_properties() {
    let mut violations = 0usize;
    let mut balls = 0usize;
    let mut details = Vec::new();
    for seed in 0..50u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (name, space) = random_space(&mut rng);
        let r0 = rng.gen_range(0.02..=0.5) * space.inj();
        let theta = rng.gen_range(0.0..2.0);
        let params = GoodBallParams::new(space.dim(), r0, theta).unwrap();
        let table = good_ball_table(&space, &params).unwrap();
        let packing = build_packing(&space, &table).unwrap();
        let sel = &packing.selected;
        balls += sel.len();
        let mut v = 0;
        for i in 0..sel.len() {
            for j in i + 1..sel.len() {
                if space.dist(sel[i].center, sel[j].center) <= sel[i].radius + sel[j].radius {
                    v += 1;
                }
            }
        }
        v += sel.windows(2).filter(|w| w[0].radius < w[1].radius).count();
        v += (0..space.len())
            .filter(|&x| !sel.iter().any(|b| space.dist(b.center, x) <= 2.0 * b.radius))
            .count();
        if v > 0 {
            details.push(format!("seed {seed} {name}: {v}"));
        }
        violations += v;
    }
    verdict(
        6,
        violations == 0,
        format!("50 seeds, {balls} selected balls, {violations} violations {details:?}"),
    );
}

#[test]
fn criterion_7_good_ball_contract() {
    // Uniform samples pass the growth test at R0 almost everywhere; the
    // lumpy-weight circle forces the search down the candidate list.
    let circle = circle_space(500).unwrap();
    let lumpy_weights = (0..500).map(|i| if i % 100 == 0 { 100.0 } else { 0.01 }).collect();
    let lumpy = MetricMeasureSpace::new(1, PI, circle.distances().to_vec(), lumpy_weights).unwrap();
    let spaces = [
        ("circle(500)", circle, PI / 2.0),
        ("flat torus 30x30", flat_torus_space(1.0, 1.0, 30, 30).unwrap(), 0.25),
        ("lumpy circle(500)", lumpy, PI / 10.0),
    ];
    let mut lines = Vec::new();
    let mut ok = true;
    for (name, space, r0) in &spaces {
        let r0 = *r0;
        for theta in [0.0, 0.5, 1.0] {
            let params = GoodBallParams::new(space.dim(), r0, theta).unwrap();
            let table = good_ball_table(space, &params).unwrap();
            let mut bad = 0;
            let mut shrunk = 0;
            for (p, ball) in table.iter().enumerate() {
                let cands = common::oracle_candidates(space, p, r0);
                let returned_ok = cands.contains(&ball.radius)
                    && common::oracle_growth_ok(space, p, ball.radius, params.alpha);
                let larger_fail = cands
                    .iter()
                    .filter(|&&r| r > ball.radius)
                    .all(|&r| !common::oracle_growth_ok(space, p, r, params.alpha));
                bad += usize::from(!(returned_ok && larger_fail));
                shrunk += usize::from(ball.radius < r0);
            }
            ok &= bad == 0;
            lines.push(format!("{name} theta={theta}: {bad} bad, {shrunk} below R0"));
        }
    }
    verdict(7, ok, lines.join("; "));
}

#[test]
fn criterion_8_formula_identities() {
    let mut worst_theta = 0f64;
    let mut rho_values = vec![1.0, 1.5, 7.9583, 123.456, 1e6];
    for space in [circle_space(400).unwrap(), sphere2_space(400).unwrap()] {
        let (out, _) = run(&space, R0Policy::InjFraction(CONVEX_FRACTION));
        rho_values.push(out.bounds.rho_hat);
    }
    for &rho in &rho_values {
        let theta = compute_theta(rho).unwrap().value;
        let want = log5(rho);
        let rel = if want == 0.0 {
            theta * theta
        } else {
            (theta * theta - want).abs() / want
        };
        worst_theta = worst_theta.max(rel);
    }

    let mut worst_exp = 0f64;
    for n in 1..=3usize {
        let cn_prime = explicit_constants(n, 1.0).unwrap().cn_prime;
        for x in [2.0f64, 10.0, 100.0] {
            let power = 5f64.powf((n + 1) as f64 * log5(x).sqrt());
            let exp_form = (cn_prime * x.ln().sqrt()).exp();
            let via_bound = theorem13_bound(x, n).bound_t / (x * 5f64.powi(n as i32));
            worst_exp = worst_exp
                .max((power - exp_form).abs() / exp_form)
                .max((via_bound - exp_form).abs() / exp_form);
        }
    }

    let exact = (1..=3).all(|n| theorem13_bound(1.0, n).bound_tk == 2.0 * 5f64.powi(n as i32));
    verdict(
        8,
        worst_theta <= 1e-12 && worst_exp <= 5e-13 && exact,
        format!(
            "theta^2 vs log5 rho worst rel {worst_theta:.2e}; 5-power vs exp worst rel \
             {worst_exp:.2e}; theorem13(1,n) = 2*5^n exact: {exact}"
        ),
    );
}

#[test]
fn criterion_9_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("sphere.space");
    let space = sphere2_space(800).unwrap();
    write_space_binary(&space, std::fs::File::create(&input).unwrap()).unwrap();
    let mut reports = Vec::new();
    for threads in [1usize, 8] {
        let out = dir.path().join(format!("report-{threads}.json"));
        let args = RunArgs {
            input: Some(input.clone()),
            r0: Some(format!("{CONVEX_FRACTION}inj")),
            threads: Some(threads),
            out: Some(out.clone()),
            ..Default::default()
        };
        let (mut so, mut se) = (Vec::new(), Vec::new());
        let code = cmd_run(args, &mut so, &mut se);
        assert_eq!(code, EXIT_OK, "{}", String::from_utf8_lossy(&se));
        reports.push((
            std::fs::read(&out).unwrap(),
            std::fs::read(out.with_extension("complex")).unwrap(),
        ));
    }
    let same = reports[0] == reports[1];
    verdict(
        9,
        same,
        format!(
            "threads 1 vs 8: report {} bytes, complex {} bytes, identical: {same}",
            reports[0].0.len(),
            reports[0].1.len()
        ),
    );
}
