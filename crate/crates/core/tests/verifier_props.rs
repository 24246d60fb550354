use proptest::prelude::*;

use contraction::entropy::WeightedParameterSet;
use contraction::verifier::shell::concentration_only;
use contraction::verifier::{
    check_shell_condition, decide, fit_slope, Estimate, ShellParams, Verdict,
};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn slope_fitter_recovers_slope(s in -2.0f64..2.0, a in -5.0f64..5.0, noise in prop::collection::vec(-1.0f64..1.0, 8)) {
        let x: Vec<f64> = (0..8).map(|i| (64.0 * 2f64.powi(i)).ln()).collect();
        let y: Vec<f64> = x.iter().zip(&noise).map(|(x, e)| a + s * x + 0.01 * e).collect();
        let fit = fit_slope(&x, &y, 0.95).unwrap();
        prop_assert!((fit.slope - s).abs() <= 0.01, "{fit:?}");
        prop_assert!(fit.lower <= fit.slope && fit.slope <= fit.upper);
    }

    #[test]
    fn verdict_rule(est in 0.0f64..1.0, stderr in prop_oneof![Just(0.0), 0.0f64..0.1], rhs in 0.0f64..1.0, slack in 0.0f64..5.0) {
        let v = decide(Estimate { estimate: est, stderr }, rhs, slack);
        let allowance = if stderr == 0.0 { 1e-12 } else { slack * stderr };
        prop_assert_eq!(v == Verdict::Pass, est <= rhs + allowance);
    }

    #[test]
    fn k3_zero_is_pure_concentration(
        pts in prop::collection::vec(0.0f64..3.0, 1..10),
        mass in 1e-6f64..1.0,
        c1 in 0.01f64..1.0,
        alpha in 0.05f64..0.95,
        n in 1usize..200,
        eps in 0.02f64..0.5,
    ) {
        let w = vec![1.0 / pts.len() as f64; pts.len()];
        let set = WeightedParameterSet::from_metric((0..pts.len()).collect(), w, |i, j| (pts[i] - pts[j]).abs()).unwrap();
        let params = ShellParams { epsilon_n: eps, n, alpha, k3: 0.0, c1, radius_factor: 1.0, neighborhood_mass: mass };
        let report = check_shell_condition(&set, |i| pts[i], params, 6).unwrap();
        // C⁰ = 1 even for an empty shell, so every row is the concentration inequality
        for row in &report.rows {
            prop_assert_eq!(row.pass, concentration_only(&params, row.j), "{:?}", row);
        }
    }
}
