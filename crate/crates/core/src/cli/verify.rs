//! The invariant suite behind `aloe verify`.

use rand::Rng;
use serde::Serialize;

use crate::benchmarks::{make_polygon, PolygonSpec};
use crate::estimator::{
    estimate_subevent, estimate_with, interval_bound, interval_product_moment, lemma_bound,
    product_moment, theoretical_variance, EstimateOptions,
};
use crate::events::{whiten_with_transform, GeneralGaussianSpec, HalfSpaceProblem};
use crate::grid::{to_halfspace_problem, Bus, BusRole, GridCase, GridModel, Line};
use crate::stats::{
    dot, normal_cdf, normal_quantile, sample_upper_truncated_normal, RandomStream, StreamRng,
};

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &str, passed: bool, detail: String) -> Check {
    Check {
        name: name.to_string(),
        passed,
        detail,
    }
}

/// Runs every check; `grid` adds checks on a user case next to the built-in
/// one.
pub fn run_checks(seed: u64, grid: Option<&GridCase>) -> Vec<Check> {
    let base = RandomStream::new(seed, 0);
    let mut out = vec![
        normal_tail(),
        truncated_range(),
        single_event_exact(base.substream(1)),
        hard_range(base.substream(2)),
        orthogonal_pair(base.substream(3)),
        block_invariance(base.substream(4)),
        subevent_identity(base.substream(5)),
        variance_identity(&mut base.substream(6).rng()),
        lemma(&mut base.substream(7).rng()),
        whitening(&mut base.substream(8).rng()),
    ];
    out.extend(grid_checks(
        "builtin",
        &builtin_grid(),
        &mut base.substream(9).rng(),
    ));
    if let Some(case) = grid {
        out.extend(grid_checks("case", case, &mut base.substream(10).rng()));
    }
    out
}

fn normal_tail() -> Check {
    let reference = 9.865876450376982e-10;
    let cdf_err = (normal_cdf(-6.0) / reference - 1.0).abs();
    let mut worst: f64 = 0.0;
    let mut e = -300;
    while e < 0 {
        let p = 10f64.powi(e);
        if let Ok(x) = normal_quantile(p) {
            worst = worst.max((normal_cdf(x) / p - 1.0).abs());
        } else {
            worst = f64::INFINITY;
        }
        e += 7;
    }
    check(
        "normal-tail",
        cdf_err < 1e-13 && worst < 1e-10,
        format!("Phi(-6) rel err {cdf_err:.2e}; quantile round trip worst {worst:.2e}"),
    )
}

fn truncated_range() -> Check {
    let mut bad = 0;
    let mut tau = -5.0;
    while tau <= 38.0 {
        for u in [1e-15, 1e-6, 0.5, 1.0 - 1e-12] {
            match sample_upper_truncated_normal(tau, u) {
                Ok(y) if y.is_finite() && y >= tau => {}
                _ => bad += 1,
            }
        }
        tau += 0.5;
    }
    check(
        "truncated-sampler-range",
        bad == 0,
        format!("{bad} bad draws for tau in [-5, 38]"),
    )
}

fn single_event_exact(stream: RandomStream) -> Check {
    let p = HalfSpaceProblem::new(2, vec![vec![0.6, 0.8]], vec![3.0]).expect("valid problem");
    match estimate_with(&p, 1000, stream, &EstimateOptions::default()) {
        Ok(e) => check(
            "single-event-exact",
            e.mu_hat == normal_cdf(-3.0) && e.se == 0.0,
            format!("mu_hat {:e}, se {}", e.mu_hat, e.se),
        ),
        Err(e) => check("single-event-exact", false, e.to_string()),
    }
}

fn random_problem(d: usize, j: usize, rng: &mut StreamRng) -> HalfSpaceProblem {
    let normals: Vec<Vec<f64>> = (0..j)
        .map(|_| crate::benchmarks::random_unit_vector(d, rng))
        .collect();
    let taus = (0..j).map(|_| rng.random_range(0.5..4.0)).collect();
    HalfSpaceProblem::new(d, normals, taus).expect("valid problem")
}

fn hard_range(stream: RandomStream) -> Check {
    let mut rng = stream.derive(1).rng();
    let mut problems = vec![make_polygon(&PolygonSpec::full(36, 3.0)).expect("valid polygon")];
    for k in 0..5 {
        problems.push(random_problem(2 + k, 3 + 2 * k, &mut rng));
    }
    let mut violations = 0;
    let mut runs = 0;
    for (i, p) in problems.iter().enumerate() {
        for r in 0..4 {
            runs += 1;
            match estimate_with(
                p,
                500,
                stream.substream((i * 4 + r) as u64),
                &EstimateOptions::default(),
            ) {
                Ok(e) if e.contains_estimate() && e.hard_range[0] > 0.0 => {}
                _ => violations += 1,
            }
        }
    }
    check(
        "hard-range",
        violations == 0,
        format!("{violations} violations in {runs} runs"),
    )
}

fn orthogonal_pair(stream: RandomStream) -> Check {
    let p = HalfSpaceProblem::new(2, vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![2.0, 2.0])
        .expect("valid");
    let q = normal_cdf(-2.0);
    let mu = 2.0 * q - q * q;
    match estimate_with(&p, 100_000, stream, &EstimateOptions::default()) {
        Ok(e) => {
            let z = (e.mu_hat - mu) / e.se;
            check(
                "closed-form-pair",
                z.abs() < 4.0,
                format!("mu_hat {:e} vs {mu:e}, z = {z:.2}", e.mu_hat),
            )
        }
        Err(e) => check("closed-form-pair", false, e.to_string()),
    }
}

fn block_invariance(stream: RandomStream) -> Check {
    let p = make_polygon(&PolygonSpec::full(12, 1.5)).expect("valid polygon");
    let a = estimate_with(&p, 5000, stream, &EstimateOptions { block_size: 1 });
    let b = estimate_with(&p, 5000, stream, &EstimateOptions { block_size: 4096 });
    let same = matches!((&a, &b), (Ok(x), Ok(y)) if x == y);
    check("block-invariance", same, "block sizes 1 and 4096".into())
}

fn subevent_identity(stream: RandomStream) -> Check {
    let p = make_polygon(&PolygonSpec::full(8, 2.0)).expect("valid polygon");
    let opts = EstimateOptions::default();
    match (
        estimate_with(&p, 5000, stream, &opts),
        estimate_subevent(&p, |_| 1.0, 5000, stream, &opts),
    ) {
        (Ok(e), Ok(s)) => {
            let rel = (s.estimate / e.mu_hat - 1.0).abs();
            check(
                "subevent-identity",
                rel < 1e-12,
                format!("relative difference {rel:.1e}"),
            )
        }
        _ => check("subevent-identity", false, "estimation failed".into()),
    }
}

fn random_distribution(j: usize, rng: &mut StreamRng) -> Vec<f64> {
    let raw: Vec<f64> = (0..j).map(|_| rng.random::<f64>().powi(3)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / total).collect()
}

fn variance_identity(rng: &mut StreamRng) -> Check {
    let mut worst: f64 = 0.0;
    let mut above_bound = 0;
    for _ in 0..500 {
        let j = rng.random_range(1..20);
        let scale = 10f64.powf(-rng.random_range(1.0..10.0));
        let t: Vec<f64> = random_distribution(j, rng)
            .into_iter()
            .map(|v| v * scale)
            .collect();
        let mu_bar: f64 = t.iter().enumerate().map(|(i, v)| (i + 1) as f64 * v).sum();
        match theoretical_variance(&t, mu_bar) {
            Ok(v) => {
                worst = worst.max((v.variance - v.product_moment).abs() / (v.mu * v.mu));
                if v.variance > v.upper_bound * (1.0 + 1e-12) {
                    above_bound += 1;
                }
            }
            Err(_) => worst = f64::INFINITY,
        }
    }
    check(
        "variance-identity",
        worst < 1e-12 && above_bound == 0,
        format!("worst relative disagreement {worst:.1e}; {above_bound} above mu(mu_bar - mu)"),
    )
}

fn lemma(rng: &mut StreamRng) -> Check {
    let mut violations = 0;
    for &j in &[2usize, 5, 10, 50] {
        let bound = lemma_bound(j).expect("positive J");
        for _ in 0..500 {
            let p = random_distribution(j, rng);
            let (_, _, prod) = product_moment(&p).expect("valid distribution");
            if prod > bound * (1.0 + 1e-12) {
                violations += 1;
            }
        }
        let mut extreme = vec![0.0; j];
        extreme[0] = 0.5;
        extreme[j - 1] = 0.5;
        let (_, _, prod) = product_moment(&extreme).expect("valid distribution");
        if (prod - bound).abs() > 1e-12 * bound {
            violations += 1;
        }
    }
    for _ in 0..500 {
        let a = rng.random_range(0.01..10.0);
        let b = a * rng.random_range(1.0..100.0);
        let k = rng.random_range(2..8);
        let support: Vec<f64> = (0..k).map(|_| rng.random_range(a..=b)).collect();
        let p = random_distribution(k, rng);
        let (_, _, prod) = interval_product_moment(&support, &p).expect("valid distribution");
        if prod > interval_bound(a, b) * (1.0 + 1e-12) {
            violations += 1;
        }
    }
    check(
        "lemma-bound",
        violations == 0,
        format!("{violations} violations"),
    )
}

fn whitening(rng: &mut StreamRng) -> Check {
    use rand_distr::StandardNormal;
    let d = 3;
    let a: Vec<Vec<f64>> = (0..d)
        .map(|_| (0..d).map(|_| rng.sample(StandardNormal)).collect())
        .collect();
    let sigma: Vec<Vec<f64>> = (0..d)
        .map(|i| {
            (0..d)
                .map(|k| {
                    (0..d).map(|m| a[i][m] * a[k][m]).sum::<f64>() + if i == k { 0.1 } else { 0.0 }
                })
                .collect()
        })
        .collect();
    let spec = GeneralGaussianSpec {
        eta: (0..d).map(|_| rng.sample(StandardNormal)).collect(),
        sigma,
        gamma: (0..4)
            .map(|_| (0..d).map(|_| rng.sample(StandardNormal)).collect())
            .collect(),
        kappa: (0..4).map(|_| rng.random_range(1.0..3.0)).collect(),
    };
    let w = match whiten_with_transform(&spec) {
        Ok(w) => w,
        Err(e) => return check("whitening-equivalence", false, e.to_string()),
    };
    let mut mismatches = 0;
    for _ in 0..1000 {
        let x: Vec<f64> = (0..d)
            .map(|_| 2.0 * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let y = w.to_original(&x);
        for j in 0..4 {
            let lhs = dot(w.problem.normal(j), &x) - w.problem.thresholds()[j];
            let rhs = dot(&spec.gamma[j], &y) - spec.kappa[j];
            if lhs.abs() > 1e-9 && (lhs >= 0.0) != (rhs >= 0.0) {
                mismatches += 1;
            }
        }
    }
    check(
        "whitening-equivalence",
        mismatches == 0,
        format!("{mismatches} mismatches in 4000 comparisons"),
    )
}

/// A four-bus meshed network used when no case file is given.
pub(crate) fn builtin_grid() -> GridCase {
    let bus = |id, role, lim: Option<f64>, eta| Bus {
        id,
        role,
        p_min: lim.map(|l| -l),
        p_max: lim,
        eta,
    };
    GridCase {
        name: Some("builtin".into()),
        busses: vec![
            bus(1, BusRole::Slack, Some(3.0), 0.0),
            bus(2, BusRole::Random, Some(1.5), 0.4),
            bus(3, BusRole::Random, Some(1.5), -0.2),
            bus(4, BusRole::Fixed, None, -0.5),
        ],
        lines: vec![
            Line {
                from: 1,
                to: 2,
                b: 2.0,
            },
            Line {
                from: 2,
                to: 3,
                b: 1.0,
            },
            Line {
                from: 3,
                to: 4,
                b: 1.5,
            },
            Line {
                from: 4,
                to: 1,
                b: 1.0,
            },
            Line {
                from: 1,
                to: 3,
                b: 0.5,
            },
        ],
        sigma: vec![vec![0.09, 0.02], vec![0.02, 0.04]],
        theta_bar: 0.35,
    }
}

fn grid_checks(tag: &str, case: &GridCase, rng: &mut StreamRng) -> Vec<Check> {
    use nalgebra::DVector;
    use rand_distr::StandardNormal;
    let model = match GridModel::new(case.clone()) {
        Ok(m) => m,
        Err(e) => return vec![check(&format!("grid-{tag}"), false, e.to_string())],
    };
    let b = model.laplacian();
    let p = model.pseudo_inverse();
    let scale = b.amax().max(p.amax());
    let r1 = (b * p * b - b).amax() / b.amax();
    let r2 = (p * b * p - p).amax() / p.amax();
    let penrose = check(
        &format!("grid-{tag}-penrose"),
        r1 < 1e-8 && r2 < 1e-8 && scale.is_finite(),
        format!("BB+B residual {r1:.1e}, B+BB+ residual {r2:.1e}"),
    );
    let cs = model.assemble();
    let nr = model.num_random();
    let expected_rows = 2 * nr + 2 + 2 * case.lines.len();
    let rows = check(
        &format!("grid-{tag}-row-count"),
        cs.num_rows() == expected_rows,
        format!("{} rows, expected {expected_rows}", cs.num_rows()),
    );
    let root = {
        let s = cs.sigma.clone().symmetric_eigen();
        let v = &s.eigenvectors;
        v * nalgebra::DMatrix::from_diagonal(&s.eigenvalues.map(|l| l.max(0.0).sqrt()))
            * v.transpose()
    };
    let eta = DVector::from_column_slice(&cs.eta_r);
    let mut mismatches = 0;
    let mut infeasible = 0;
    let mut worst_balance: f64 = 0.0;
    for _ in 0..1000 {
        let z = DVector::from_fn(nr, |_, _| 3.0 * rng.sample::<f64, _>(StandardNormal));
        let p_r: Vec<f64> = (&eta + &root * z).iter().copied().collect();
        let direct = model.physical_check(&p_r);
        worst_balance = worst_balance.max(direct.injections.iter().sum::<f64>().abs());
        let slack = cs.min_slack(&p_r);
        if !direct.feasible() {
            infeasible += 1;
        }
        let near_boundary = slack.abs() < 1e-9 || direct.min_margin.abs() < 1e-9;
        if !near_boundary && direct.feasible() != cs.is_feasible(&p_r) {
            mismatches += 1;
        }
    }
    let equivalence = check(
        &format!("grid-{tag}-equivalence"),
        mismatches == 0 && worst_balance < 1e-10,
        format!("{mismatches} mismatches in 1000 draws ({infeasible} infeasible); balance {worst_balance:.1e}"),
    );
    let whitened = match to_halfspace_problem(&cs) {
        Ok(gp) => {
            let mut mismatches = 0;
            for _ in 0..1000 {
                let x: Vec<f64> = (0..nr)
                    .map(|_| 3.0 * rng.sample::<f64, _>(StandardNormal))
                    .collect();
                let direct = model.physical_check(&gp.to_injections(&x));
                let hit = gp.problem.event_count(&x) > 0;
                if direct.min_margin.abs() >= 1e-9 && hit == direct.feasible() {
                    mismatches += 1;
                }
            }
            check(
                &format!("grid-{tag}-whitened"),
                mismatches == 0,
                format!(
                    "{mismatches} mismatches in 1000 draws; {} deterministic rows",
                    gp.deterministic_rows.len()
                ),
            )
        }
        Err(e) => check(&format!("grid-{tag}-whitened"), false, e.to_string()),
    };
    vec![penrose, rows, equivalence, whitened]
}
