use aloe_core::stats::{log_normal_cdf, normal_cdf, normal_quantile, normal_quantile_from_log};
use serde::Deserialize;

#[derive(Deserialize)]
struct CdfPoint {
    x: f64,
    cdf: f64,
}

#[derive(Deserialize)]
struct QuantilePoint {
    p: f64,
    x: f64,
}

#[derive(Deserialize)]
struct Reference {
    cdf: Vec<CdfPoint>,
    quantile: Vec<QuantilePoint>,
}

fn reference() -> Reference {
    let path = concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/tests/fixtures/normal_reference.json"
    );
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn cdf_matches_high_precision_values() {
    for pt in reference().cdf {
        let rel = (normal_cdf(pt.x) - pt.cdf).abs() / pt.cdf;
        assert!(
            rel < 1e-13,
            "x = {}: {} vs {}",
            pt.x,
            normal_cdf(pt.x),
            pt.cdf
        );
        let log_err = (log_normal_cdf(pt.x) - pt.cdf.ln()).abs() / pt.cdf.ln().abs().max(1.0);
        assert!(log_err < 1e-13, "log at x = {}", pt.x);
    }
}

#[test]
fn quantile_matches_high_precision_values() {
    for pt in reference().quantile {
        let x = normal_quantile(pt.p).unwrap();
        assert!(
            (x - pt.x).abs() <= 1e-10 * pt.x.abs().max(1.0),
            "p = {}: {x} vs {}",
            pt.p,
            pt.x
        );
        let round = normal_cdf(x);
        assert!(
            (round - pt.p).abs() / pt.p < 1e-10,
            "round trip at p = {}",
            pt.p
        );
    }
}

#[test]
fn log_domain_quantile_reaches_far_below_double_range() {
    for log_p in [-700.0, -2000.0, -1e5] {
        let x = normal_quantile_from_log(log_p).unwrap();
        assert!(x.is_finite() && x < -37.0);
        assert!((log_normal_cdf(x) - log_p).abs() <= 1e-10 * log_p.abs());
    }
}

#[test]
fn underflow_is_exact_zero() {
    assert_eq!(normal_cdf(-40.0), 0.0);
    assert_eq!(normal_cdf(f64::NEG_INFINITY), 0.0);
    assert_eq!(normal_cdf(f64::INFINITY), 1.0);
}
