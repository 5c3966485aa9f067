use hmprate::entropy::entropy_rate_terms;
use hmprate::family::ParametrizedFamily;
use hmprate::{
    default_burn_in, entropy_derivative_mc, lsr_derivative, measure_property_check, EstimatorResult, MarkovChain, Matrix, PolynomialFamily,
    SeedRecord,
};
use proptest::prelude::*;

fn bsc_family(p00: f64, p11: f64) -> PolynomialFamily {
    PolynomialFamily::bsc(MarkovChain::two_state(p00, p11).unwrap(), &[0, 1]).unwrap()
}

/// Central difference of the path entropy with both ends driven by the same random numbers.
fn crn_difference(family: &PolynomialFamily, theta: f64, h: f64, n: usize, seed: u64) -> EstimatorResult {
    let lo = family.model_at(theta - h).unwrap();
    let hi = family.model_at(theta + h).unwrap();
    let burn = default_burn_in(&lo).max(default_burn_in(&hi));
    let a = entropy_rate_terms(&hi, n, burn, seed).unwrap();
    let b = entropy_rate_terms(&lo, n, burn, seed).unwrap();
    let d: Vec<f64> = a.iter().zip(&b).map(|(x, y)| (x - y) / (2.0 * h)).collect();
    EstimatorResult::batch_means(&d, SeedRecord::new(seed))
}

#[test]
fn blackwell_derivative_matches_coupled_difference() {
    let family = bsc_family(0.9, 0.5);
    for theta in [0.1, 0.15] {
        let mc = entropy_derivative_mc(&family, theta, 40_000, None, 7).unwrap();
        let fd = crn_difference(&family, theta, 0.01, 1_000_000, 3);
        let sigma = mc.std_error.hypot(fd.std_error);
        assert!((mc.estimate - fd.estimate).abs() <= 3.0 * sigma, "theta {theta}: {} vs {} (σ {sigma})", mc.estimate, fd.estimate);
    }
}

#[test]
fn derivative_error_shrinks_like_root_n() {
    let family = bsc_family(0.9, 0.5);
    let small = entropy_derivative_mc(&family, 0.1, 10_000, None, 1).unwrap();
    let large = entropy_derivative_mc(&family, 0.1, 40_000, None, 1).unwrap();
    let ratio = small.std_error / large.std_error;
    assert!((1.7..2.3).contains(&ratio), "ratio {ratio}");
}

#[test]
fn measure_identities_hold() {
    let family = bsc_family(0.8, 0.3);
    let model = family.model_at(0.2).unwrap();
    let derivs = family.derivatives(0.2).unwrap();
    let report = measure_property_check(&model, Some(&derivs), 100_000, None, 5).unwrap();
    assert_eq!(report.identities.len(), 5);
    assert!(report.holds(3.0), "{report:?}");
}

#[test]
fn measure_identities_vanish_when_outputs_are_uninformative() {
    let family = bsc_family(0.8, 0.3);
    let model = family.model_at(0.0).unwrap();
    let derivs = family.derivatives(0.0).unwrap();
    let report = measure_property_check(&model, Some(&derivs), 1000, None, 5).unwrap();
    assert!(report.identities.iter().all(|r| r.max_abs() == 0.0), "{report:?}");
}

fn spectral_radius(m: &Matrix) -> f64 {
    let n = m.rows();
    let mut v = vec![1.0; n];
    let mut rho = 0.0;
    for _ in 0..10_000 {
        let w = m.mul_vec(&v);
        let s: f64 = w.iter().sum();
        let next = w.iter().map(|x| x / s).collect::<Vec<_>>();
        let delta: f64 = next.iter().zip(&v).map(|(a, b)| (a - b).abs()).sum();
        let total: f64 = v.iter().sum();
        rho = s / total;
        v = next;
        if delta < 1e-15 {
            break;
        }
    }
    rho
}

fn positive_pair(n: usize) -> impl Strategy<Value = (Matrix, Matrix)> {
    (prop::collection::vec(0.05f64..1.0, n * n), prop::collection::vec(-1.0f64..1.0, n * n))
        .prop_map(move |(a, b)| (Matrix::from_vec(n, n, a), Matrix::from_vec(n, n, b)))
}

fn check_lsr(m: &Matrix, d: &Matrix) -> std::result::Result<(), TestCaseError> {
    let h = 1e-4;
    let at = |t: f64| spectral_radius(&m.add(&d.scale(t))).ln();
    let r1 = (at(h) - at(-h)) / (2.0 * h);
    let r2 = (at(h / 2.0) - at(-h / 2.0)) / h;
    let fd = (4.0 * r2 - r1) / 3.0;
    let got = lsr_derivative(m, d).unwrap();
    prop_assert!((got - fd).abs() < 1e-6, "{} vs {}", got, fd);
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn lsr_matches_difference_3x3((m, d) in positive_pair(3)) {
        check_lsr(&m, &d)?;
    }

    #[test]
    fn lsr_matches_difference_5x5((m, d) in positive_pair(5)) {
        check_lsr(&m, &d)?;
    }
}

#[test]
fn factorized_model_derivative_is_single_letter() {
    // At the high-noise point the Blackwell measures are point masses at (π, 1).
    let family = bsc_family(0.7, 0.4);
    let est = entropy_derivative_mc(&family, 0.0, 200, None, 9).unwrap();
    assert_eq!(est.std_error, 0.0);
    assert!(est.estimate.abs() < 1e-12);
}
