use proptest::prelude::*;

use contraction::models::autoregression::{cell_masses, SmoothFn};
use contraction::models::{ar_design, ArModel, RegressionFn};
use contraction::verifier::rate::ar_epsilon;
use contraction::verifier::{ball_quotient, calibrate_gauss_seq_c, weight_quotient_rows};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Scaling about β₀ ∈ cube nests the draws, so clipping never raises the quotient.
    #[test]
    fn clipped_quotient_is_at_most_the_volume_ratio(
        raw in prop::collection::vec((-0.9f64..0.9, 0.05f64..1.0), 1..=4),
        amplitude in 0.5f64..3.0,
        inner in 0.01f64..1.0,
        stretch in 1.0f64..20.0,
        seed in 0u64..1000,
    ) {
        let beta0: Vec<f64> = raw.iter().map(|(b, _)| b * amplitude).collect();
        let masses: Vec<f64> = raw.iter().map(|(_, m)| *m).collect();
        let q = ball_quotient(&beta0, &masses, amplitude, inner * stretch, inner, 2000, seed).unwrap();
        prop_assert!(q.log_quotient <= q.log_volume_ratio + 1e-12);
        if q.exact {
            prop_assert!((q.log_quotient - beta0.len() as f64 * stretch.ln()).abs() < 1e-9);
        }
    }
}

/// On the AR design with M = 2 the admissible b₁ is ≈ 1e-4, and the quotient
/// carries a (6/b₁)^K factor that the j^{2K} envelope does not have.
#[test]
fn ar_weight_quotient_against_stated_envelope() {
    let m = 2.0;
    let f0 = SmoothFn::scaled_tanh(0.5 * m);
    let model = ArModel::new(RegressionFn::Smooth(f0.clone()), m).unwrap();
    let b1 = model.admissible_b1();
    let eps = ar_epsilon(1000);
    let js: Vec<usize> = (1..=12).collect();
    for k in 1..=4 {
        let d = ar_design(eps, f0.lipschitz, b1, |x| f0.eval(x), Some(k)).unwrap();
        let masses = cell_masses(d.half_width, d.cells);
        let rows = weight_quotient_rows(&d.beta0, &masses, m, eps, b1, &js, 20_000, 1).unwrap();
        for r in &rows {
            let kf = k as f64;
            assert!((r.quotient.log_volume_ratio - kf * (6.0 * r.j as f64 / b1).ln()).abs() < 1e-9);
            assert!(r.quotient.log_quotient <= r.quotient.log_volume_ratio + 1e-12);
            // clipping removes at most a bounded factor: the quotient stays above b₁^{−K}
            assert!(r.quotient.log_quotient > kf * (1.0 / b1).ln());
            assert!(!r.within_stated, "K={k} j={}", r.j);
        }
    }
}

/// With b₁ of order one and an unclipped outer ball, j^{2K} holds once j ≥ 6/b₁.
#[test]
fn stated_envelope_holds_for_large_j_when_unclipped() {
    let beta0 = [0.0, 0.0];
    let masses = [0.25, 0.25];
    let rows =
        weight_quotient_rows(&beta0, &masses, 1e6, 0.01, 1.0, &[2, 5, 6, 7, 20], 100, 1).unwrap();
    let verdicts: Vec<(usize, bool)> = rows.iter().map(|r| (r.j, r.within_stated)).collect();
    assert!(rows.iter().all(|r| r.quotient.exact));
    assert_eq!(
        verdicts,
        vec![(2, false), (5, false), (6, true), (7, true), (20, true)]
    );
}

/// Independent oracle: forward partial sums of i^{−2(γ+1)} from i = k + 1.
fn required_k(n: usize, gamma: f64) -> usize {
    let half = (n as f64).powf(-2.0 * gamma / (2.0 * gamma + 1.0)) / 2.0;
    (0..=n)
        .find(|&k| {
            ((k + 1)..=n)
                .map(|i| (i as f64).powf(-2.0 * (gamma + 1.0)))
                .sum::<f64>()
                <= half
        })
        .unwrap()
}

#[test]
fn gauss_seq_calibration_matches_oracle() {
    let grid = [64, 256, 1024, 4096, 16384];
    for gamma in [0.5, 1.0, 2.0] {
        let cal = calibrate_gauss_seq_c(gamma, 1.0, 1.0, &grid).unwrap();
        let mut c_star = 0.0f64;
        for r in &cal.rows {
            assert_eq!(
                r.k_required,
                required_k(r.n, gamma),
                "gamma={gamma} n={}",
                r.n
            );
            c_star = c_star.max(r.k_required as f64 / (r.n as f64).powf(1.0 / (2.0 * gamma + 1.0)));
        }
        assert!((cal.c_calibrated - c_star).abs() < 1e-12);
        assert!(!cal.flagged, "gamma={gamma}");
    }
    // frozen: γ = 1 is bound at n = 64 (k ≥ 2, n^{1/3} = 4)
    let cal = calibrate_gauss_seq_c(1.0, 1.0, 1.0, &grid).unwrap();
    assert!((cal.c_calibrated - 0.5).abs() < 1e-12);
    assert!(
        calibrate_gauss_seq_c(1.0, 1.0, 0.45, &grid)
            .unwrap()
            .flagged
    );
}
