use fraclap_web::{operator_check, potential_curve, solve_curve};

#[test]
fn operator_check_recovers_the_eigen_pair() {
    let c = operator_check(3, 1.0, 256).unwrap();
    assert!((c.lambda() - 0.5).abs() <= 1e-12);
    assert!(c.max_error() <= 1e-3, "{}", c.max_error());
    assert!(c.constant_residual() <= 1e-8);
    assert_eq!(c.r().len(), c.ratio().len());
}

#[test]
fn potential_curve_reports_the_regime_and_slope() {
    let c = potential_curve(1.0, 5.0, 2.0, 512, 256.0).unwrap();
    assert_eq!(c.regime(), "TauGreaterN");
    assert!((c.slope() + 2.0).abs() <= 0.15, "{}", c.slope());
    assert!(c.w().iter().all(|&v| v > 0.0));
    assert!(potential_curve(1.0, 0.5, 2.0, 256, 128.0).unwrap_err().contains("tau"));
}

#[test]
fn solve_curve_stays_between_the_bounds() {
    let c = solve_curve(0.5, 2.0, 2.0, 1, 256).unwrap();
    for i in 0..c.r().len() {
        assert!(c.sub()[i] - 1e-8 <= c.u()[i] && c.u()[i] <= c.sup()[i] + 1e-8);
    }
    assert!(c.theta() > 0.0 && c.iterations() <= 200);
    assert!((c.limit() - 0.5).abs() <= 1e-2);
    assert!(solve_curve(1.5, 2.0, 2.0, 1, 256).is_err());
    assert!(solve_curve(0.5, 2.0, 2.0, 1, 8).is_err());
}
