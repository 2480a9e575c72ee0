//! Acceptance suite. Runs every criterion at its stated tolerance, prints one
//! PASS/FAIL line per criterion and exits nonzero if any failed.

use std::path::PathBuf;
use std::sync::Mutex;
use std::time::Instant;

use aloe_core::benchmarks::{run_highdim, run_polygon, HighDimSpec, PolygonSpec};
use aloe_core::estimator::{
    estimate_with, interval_bound, interval_product_moment, lemma_bound, moment_identity_check,
    plain_monte_carlo, product_moment, AloeEstimate, EstimateOptions,
};
use aloe_core::events::{EventSystem, HalfSpaceProblem};
use aloe_core::grid::{to_halfspace_problem, GridCase, GridModel};
use aloe_core::stats::ks::{ks_p_value, ks_statistic};
use aloe_core::stats::{
    normal_cdf, normal_sf, sample_halfspace_conditional, sample_upper_truncated_normal,
    RandomStream,
};
use nalgebra::DVector;
use rand::Rng;
use rand_distr::StandardNormal;

const SEED: u64 = 20_170_301;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

/// Every estimate produced by the suite, checked against `μ̄/J ≤ μ̂ ≤ μ̄`.
struct HardRange {
    runs: usize,
    violations: Vec<String>,
}

static HARD_RANGE: Mutex<HardRange> = Mutex::new(HardRange {
    runs: 0,
    violations: Vec::new(),
});

fn record<E: EventSystem>(system: &E, e: &AloeEstimate, label: &str) {
    let mu_bar = system.union_bound();
    let j = system.num_active() as f64;
    let ok = e.mu_hat <= mu_bar && e.mu_hat >= mu_bar / j;
    let mut h = HARD_RANGE.lock().unwrap();
    h.runs += 1;
    if !ok {
        h.violations.push(format!(
            "{label}: {} not in [{}, {mu_bar}]",
            e.mu_hat,
            mu_bar / j
        ));
    }
}

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

fn opts() -> EstimateOptions {
    EstimateOptions::default()
}

const EXPECTED_REL_MSE: [(f64, f64); 7] = [
    (2.0, 0.000399),
    (3.0, 0.000451),
    (4.0, 0.000549),
    (5.0, 0.000600),
    (6.0, 0.000543),
    (7.0, 0.000559),
    (8.0, 0.000540),
];

fn polygon_mse() -> Outcome {
    let start = Instant::now();
    let (n, reps) = (1000, 100);
    let mut passed = true;
    let mut parts = Vec::new();
    for (tau, expected) in EXPECTED_REL_MSE {
        let spec = PolygonSpec::full(360, tau);
        let row = run_polygon(
            &spec,
            n,
            reps,
            RandomStream::new(SEED, 100 + tau as u64 * 1000),
            &opts(),
        )
        .unwrap();
        let problem = aloe_core::benchmarks::make_polygon(&spec).unwrap();
        for e in &row.runs {
            record(&problem, e, &format!("polygon tau={tau}"));
        }
        let mu = (-tau * tau / 2.0).exp();
        let mse = row
            .rep_estimates
            .iter()
            .map(|m| (m / mu - 1.0).powi(2))
            .sum::<f64>()
            / reps as f64;
        let planning = (row.mu_bar / mu - 1.0) / n as f64;
        let ok = mse <= 3.0 * expected && mse >= expected / 3.0 && mse <= planning;
        passed &= ok;
        parts.push(format!("tau {tau}: {mse:.3e} (bound {planning:.3e})"));
    }
    let secs = start.elapsed().as_secs_f64();
    passed &= secs < 120.0;
    outcome(passed, format!("{}; {secs:.1}s", parts.join(", ")))
}

fn hard_range() -> Outcome {
    let h = HARD_RANGE.lock().unwrap();
    let detail = if h.violations.is_empty() {
        format!("0 violations in {} runs", h.runs)
    } else {
        format!(
            "{} violations in {} runs, first: {}",
            h.violations.len(),
            h.runs,
            h.violations[0]
        )
    };
    outcome(h.violations.is_empty() && h.runs > 0, detail)
}

fn closed_form_pair() -> Outcome {
    let problem =
        HalfSpaceProblem::new(2, vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![2.0, 2.0]).unwrap();
    let p = normal_cdf(-2.0);
    let mu = 2.0 * p - p * p;
    let mu_bar = problem.union_bound();
    let (runs, n) = (200u64, 10_000u64);
    let stream = RandomStream::new(SEED, 3);
    let values: Vec<f64> = (0..runs)
        .map(|r| {
            let e = estimate_with(&problem, n, stream.substream(r * 7919), &opts()).unwrap();
            record(&problem, &e, "orthogonal pair");
            e.mu_hat
        })
        .collect();
    let mean = values.iter().sum::<f64>() / runs as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (runs - 1) as f64;
    let se = (var / runs as f64).sqrt();
    let bound = mu * (mu_bar - mu) / n as f64;
    let z = (mean - mu) / se;
    outcome(
        z.abs() <= 4.0 && var <= 1.2 * bound,
        format!("z = {z:.2}, variance {var:.3e} vs bound {bound:.3e}"),
    )
}

fn lemma_suite() -> Outcome {
    let mut rng = RandomStream::new(SEED, 4).rng();
    let mut worst: f64 = 0.0;
    let mut violations = 0;
    for j in [2usize, 5, 10, 50] {
        let bound = lemma_bound(j).unwrap();
        for trial in 0..10_000 {
            let p: Vec<f64> = (0..j)
                .map(|_| {
                    let e: f64 = -rng.random::<f64>().ln();
                    // Sparse draws reach the extremes more often.
                    if trial % 2 == 0 && rng.random::<f64>() < 0.7 {
                        0.0
                    } else {
                        e
                    }
                })
                .collect();
            if p.iter().sum::<f64>() == 0.0 {
                continue;
            }
            let (_, _, prod) = product_moment(&p).unwrap();
            worst = worst.max(prod / bound);
            if prod > bound * (1.0 + 1e-12) {
                violations += 1;
            }
        }
    }
    let mut attain_err: f64 = 0.0;
    for j in [2usize, 5, 10, 50] {
        let mut p = vec![0.0; j];
        p[0] = 0.5;
        p[j - 1] = 0.5;
        let (_, _, prod) = product_moment(&p).unwrap();
        attain_err = attain_err.max((prod - lemma_bound(j).unwrap()).abs());
    }
    let mut interval_violations = 0;
    for _ in 0..10_000 {
        let a = (rng.random::<f64>() * 6.0 - 3.0).exp();
        let b = a * (1.0 + rng.random::<f64>() * 20.0);
        let k = rng.random_range(1..8);
        let support: Vec<f64> = (0..k).map(|_| a + (b - a) * rng.random::<f64>()).collect();
        let p: Vec<f64> = (0..k).map(|_| rng.random::<f64>() + 1e-3).collect();
        let (_, _, prod) = interval_product_moment(&support, &p).unwrap();
        if prod > interval_bound(a, b) * (1.0 + 1e-12) {
            interval_violations += 1;
        }
        let (_, _, two) = interval_product_moment(&[a, b], &[0.5, 0.5]).unwrap();
        attain_err = attain_err.max((two - interval_bound(a, b)).abs() / interval_bound(a, b));
    }
    outcome(
        violations == 0 && interval_violations == 0 && attain_err <= 1e-12,
        format!(
            "{violations} discrete and {interval_violations} interval violations, \
             worst ratio {worst:.6}, attainment error {attain_err:.1e}"
        ),
    )
}

fn moment_identity() -> Outcome {
    let problem = HalfSpaceProblem::new(
        2,
        vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![0.6, 0.8]],
        vec![1.5, 2.0, 1.8],
    )
    .unwrap();
    let counts =
        plain_monte_carlo(&problem, 10_000_000, RandomStream::new(SEED, 50), &opts()).unwrap();
    let stream = RandomStream::new(SEED, 51);
    let e = estimate_with(&problem, 1_000_000, stream, &opts()).unwrap();
    record(&problem, &e, "moment problem");
    let mut passed = true;
    let mut parts = Vec::new();
    for k in 1..=3 {
        let check =
            moment_identity_check(&problem, k, 1_000_000, stream, &opts(), &counts).unwrap();
        let z = check.z_score();
        passed &= z.abs() <= 4.0;
        parts.push(format!("k={k}: z = {z:.2}"));
    }
    outcome(passed, parts.join(", "))
}

fn truncated_sampler() -> Outcome {
    let mut rng = RandomStream::new(SEED, 6).rng();
    let d = 6;
    let mut passed = true;
    let mut parts = Vec::new();
    for tau in [0.0, 1.0, 3.0, 6.0] {
        let mut omega: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let norm = omega.iter().map(|v| v * v).sum::<f64>().sqrt();
        omega.iter_mut().for_each(|v| *v /= norm);
        let tail = normal_sf(tau);
        let cdf = |y: f64| 1.0 - normal_sf(y) / tail;
        let mut draw = |count: usize| -> Vec<f64> {
            (0..count)
                .map(|_| {
                    let x = sample_halfspace_conditional(&omega, tau, &mut rng).unwrap();
                    x.iter().zip(&omega).map(|(a, b)| a * b).sum()
                })
                .collect()
        };
        let mut proj = draw(100_000);
        let ks = ks_statistic(&mut proj, cdf);
        let mut large = draw(1_000_000);
        let ks_large = ks_statistic(&mut large, cdf);
        passed &= ks < 0.002;
        parts.push(format!(
            "tau {tau}: D {ks:.5} (p {:.2}), D at 1e6 {ks_large:.5}",
            ks_p_value(ks, 100_000)
        ));
    }
    let mut bad = 0;
    for step in 0..=76 {
        let tau = step as f64 * 0.5;
        for u in [
            f64::MIN_POSITIVE,
            1e-300,
            0.25,
            0.5,
            0.999_999,
            1.0 - f64::EPSILON / 2.0,
        ] {
            match sample_upper_truncated_normal(tau, u) {
                Ok(y) if y.is_finite() && y >= tau => {}
                _ => bad += 1,
            }
        }
        let omega = [0.6, -0.8];
        for _ in 0..200 {
            let x = sample_halfspace_conditional(&omega, tau, &mut rng).unwrap();
            let proj = omega[0] * x[0] + omega[1] * x[1];
            if !x.iter().all(|v| v.is_finite()) || proj < tau {
                bad += 1;
            }
        }
    }
    passed &= bad == 0;
    outcome(
        passed,
        format!("{}; {bad} bad draws for tau up to 38", parts.join(", ")),
    )
}

#[derive(serde::Deserialize)]
struct Reference {
    mu: f64,
    se: f64,
}

fn grid_pipeline() -> Outcome {
    let refs: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(fixture("grid_reference.json")).unwrap())
            .unwrap();
    let mut passed = true;
    let mut parts = Vec::new();
    for (k, name) in ["three_bus", "ten_bus"].into_iter().enumerate() {
        let case = GridCase::load(&fixture(&format!("{name}.json"))).unwrap();
        let model = GridModel::new(case).unwrap();
        let cs = model.assemble();
        let gp = to_halfspace_problem(&cs).unwrap();

        let b = model.laplacian();
        let bp = model.pseudo_inverse();
        let r1 = (b * bp * b - b).amax() / b.amax();
        let r2 = (bp * b * bp - bp).amax() / bp.amax();

        // Draws spread three times wider than the case so that many land
        // outside the feasible set.
        let nr = model.num_random();
        let sigma = cs.sigma.clone();
        let chol = sigma.cholesky().unwrap().l() * 3.0;
        let eta = DVector::from_column_slice(&cs.eta_r);
        let mut rng = RandomStream::new(SEED, 70 + k as u64).rng();
        let mut mismatches = 0;
        let mut infeasible = 0;
        for _ in 0..1000 {
            let z = DVector::from_fn(nr, |_, _| rng.sample::<f64, _>(StandardNormal));
            let p_r: Vec<f64> = (&eta + &chol * z).iter().copied().collect();
            let physical = model.physical_check(&p_r);
            if !physical.feasible() {
                infeasible += 1;
            }
            if cs.is_feasible(&p_r) != physical.feasible() && physical.min_margin.abs() > 1e-9 {
                mismatches += 1;
            }
            let x: Vec<f64> = (0..nr).map(|_| rng.sample(StandardNormal)).collect();
            let p_w = gp.to_injections(&x);
            let hit = gp.problem.event_count(&x) > 0;
            let phys = model.physical_check(&p_w);
            if hit == phys.feasible() && phys.min_margin.abs() > 1e-9 {
                mismatches += 1;
            }
        }

        let e = estimate_with(
            &gp.problem,
            100_000,
            RandomStream::new(SEED, 80 + k as u64),
            &opts(),
        )
        .unwrap();
        record(&gp.problem, &e, name);
        let r: Reference = serde_json::from_value(refs[name].clone()).unwrap();
        let z = (e.mu_hat - r.mu) / (e.se * e.se + r.se * r.se).sqrt();

        let ok = r1 <= 1e-8 && r2 <= 1e-8 && mismatches == 0 && z.abs() <= 4.0;
        passed &= ok;
        parts.push(format!(
            "{name}: penrose {:.1e}, {mismatches} mismatches ({infeasible} infeasible draws), \
             mu_hat {:.4e} vs {:.4e}, z = {z:.2}",
            r1.max(r2),
            e.mu_hat,
            r.mu
        ));
    }
    outcome(passed, parts.join("; "))
}

static WARNINGS: Mutex<Vec<String>> = Mutex::new(Vec::new());

struct Capture;

impl log::Log for Capture {
    fn enabled(&self, metadata: &log::Metadata) -> bool {
        metadata.level() <= log::Level::Warn
    }

    fn log(&self, record: &log::Record) {
        if self.enabled(record.metadata()) {
            WARNINGS.lock().unwrap().push(record.args().to_string());
        }
    }

    fn flush(&self) {}
}

static CAPTURE: Capture = Capture;

fn signatures() -> Outcome {
    let dominated = HalfSpaceProblem::new(
        2,
        vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![-0.6, 0.8]],
        vec![3.0, 6.0, 6.5],
    )
    .unwrap();
    let e = estimate_with(&dominated, 10_000, RandomStream::new(SEED, 90), &opts()).unwrap();
    record(&dominated, &e, "dominated");
    let gap = (e.union_bound - e.lower_bound) / e.union_bound;
    let off = (e.mu_hat / e.union_bound - 1.0).abs();
    let dominated_ok = gap < 1e-3 && off < 1e-3;

    let disjoint = HalfSpaceProblem::new(
        2,
        vec![vec![1.0, 0.0], vec![-1.0, 0.0], vec![0.0, 1.0]],
        vec![4.0, 4.0, 5.0],
    )
    .unwrap();
    WARNINGS.lock().unwrap().clear();
    let d = estimate_with(&disjoint, 10_000, RandomStream::new(SEED, 91), &opts()).unwrap();
    record(&disjoint, &d, "disjoint");
    let warned = WARNINGS
        .lock()
        .unwrap()
        .iter()
        .any(|w| w.contains("standard error is 0"));
    let disjoint_ok = d.se == 0.0 && d.degenerate_se && warned && d.mu_hat == d.union_bound;
    outcome(
        dominated_ok && disjoint_ok,
        format!(
            "dominated: (mu_bar - mu_lower)/mu_bar {gap:.1e}, |mu_hat/mu_bar - 1| {off:.1e}; \
             disjoint: se {}, warning {}",
            d.se,
            if warned { "logged" } else { "missing" }
        ),
    )
}

fn highdim() -> Outcome {
    let start = Instant::now();
    let mut rng = RandomStream::new(SEED, 9).rng();
    let mut worst_ratio: f64 = 1.0;
    let mut worst_multi: f64 = 0.0;
    let mut passed = true;
    for case in 0..20u64 {
        let spec = HighDimSpec::sample_from(&[20, 50], &mut rng);
        let row = run_highdim(&spec, 1000, RandomStream::new(SEED, 900 + case), &opts()).unwrap();
        record(&row.problem.problem, &row.estimate, "highdim");
        let multi = row.estimate.multi_event_fraction();
        passed &= (0.98..=1.0).contains(&row.ratio_to_union_bound) && multi < 0.05;
        worst_ratio = worst_ratio.min(row.ratio_to_union_bound);
        worst_multi = worst_multi.max(multi);
    }
    let secs = start.elapsed().as_secs_f64();
    passed &= secs < 60.0;
    outcome(
        passed,
        format!(
            "min mu_hat/mu_bar {worst_ratio:.5}, max S>=2 fraction {worst_multi:.4}; {secs:.1}s"
        ),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    log::set_logger(&CAPTURE).unwrap();
    log::set_max_level(log::LevelFilter::Warn);

    let criteria: [Criterion; 9] = [
        ("polygon-relative-mse", polygon_mse),
        ("closed-form-pair", closed_form_pair),
        ("product-moment-bound", lemma_suite),
        ("moment-identity", moment_identity),
        ("truncated-sampler", truncated_sampler),
        ("grid-pipeline", grid_pipeline),
        ("dominated-and-disjoint", signatures),
        ("high-dimensional", highdim),
        // Last, so that it sees every run above.
        ("hard-range", hard_range),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let o = run();
        println!(
            "{} {name}: {}",
            if o.passed { "PASS" } else { "FAIL" },
            o.detail
        );
        if !o.passed {
            failed += 1;
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
