use proptest::prelude::*;

use contraction::entropy::{covering_number, hausdorff_constant, WeightedParameterSet};

fn instance(max: usize) -> impl Strategy<Value = (Vec<(f64, f64)>, Vec<f64>)> {
    (1usize..=max).prop_flat_map(|m| {
        (
            prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), m),
            prop::collection::vec(0.01f64..1.0, m),
        )
    })
}

fn build(pts: &[(f64, f64)], w: &[f64]) -> WeightedParameterSet {
    let s: f64 = w.iter().sum();
    let w: Vec<f64> = w.iter().map(|x| x / s).collect();
    WeightedParameterSet::from_metric((0..pts.len()).collect(), w, |i, j| {
        ((pts[i].0 - pts[j].0).powi(2) + (pts[i].1 - pts[j].1).powi(2)).sqrt()
    })
    .unwrap()
}

fn constant(set: &WeightedParameterSet, assignment: &[usize], pieces: usize, alpha: f64) -> f64 {
    let mut mass = vec![0.0; pieces];
    for (p, &b) in assignment.iter().enumerate() {
        mass[b] += set.weights()[p];
    }
    mass.iter().map(|m: &f64| m.powf(alpha)).sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn exact_sandwich((pts, w) in instance(12), delta in 0.05f64..0.8, alpha in 0.05f64..0.95) {
        let set = build(&pts, &w);
        let c = hausdorff_constant(&set, delta, alpha).unwrap();
        prop_assert!(c.exact);
        prop_assert!(c.sandwich_holds(1e-12), "{c:?}");
        prop_assert!(c.is_valid_for(&set));
    }

    #[test]
    fn hausdorff_non_increasing_in_delta((pts, w) in instance(12), d1 in 0.05f64..0.8, d2 in 0.05f64..0.8, alpha in 0.05f64..0.95) {
        let set = build(&pts, &w);
        let (lo, hi) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
        let a = hausdorff_constant(&set, lo, alpha).unwrap().hausdorff_constant.unwrap();
        let b = hausdorff_constant(&set, hi, alpha).unwrap().hausdorff_constant.unwrap();
        prop_assert!(b <= a * (1.0 + 1e-12));
    }

    #[test]
    fn exact_below_any_cover_partition((pts, w) in instance(12), delta in 0.05f64..0.8, alpha in 0.05f64..0.95) {
        let set = build(&pts, &w);
        let exact = hausdorff_constant(&set, delta, alpha).unwrap().hausdorff_constant.unwrap();
        let cover = covering_number(&set, delta).unwrap();
        let coarse = constant(&set, &cover.assignment, cover.covering_number, alpha);
        prop_assert!(exact <= coarse * (1.0 + 1e-12));
    }

    #[test]
    fn covering_number_monotone((pts, w) in instance(20), d1 in 0.02f64..0.8, d2 in 0.02f64..0.8) {
        let set = build(&pts, &w);
        let (lo, hi) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
        let a = covering_number(&set, lo).unwrap();
        let b = covering_number(&set, hi).unwrap();
        prop_assert!(a.covering_number >= b.covering_number);
        prop_assert!(a.is_valid_for(&set) && b.is_valid_for(&set));
    }

    #[test]
    fn greedy_not_below_exact((pts, w) in instance(12), delta in 0.05f64..0.8, alpha in 0.05f64..0.95) {
        // Beyond the exact limit the greedy path runs; embedding the same
        // points among far-away zero-ish-mass copies must not beat the exact value.
        let set = build(&pts, &w);
        let exact = hausdorff_constant(&set, delta, alpha).unwrap();
        let mut big_pts = pts.clone();
        let mut big_w = w.clone();
        let s: f64 = w.iter().sum();
        for i in 0..(13usize.saturating_sub(pts.len()).max(1)) {
            big_pts.push((100.0 + 10.0 * i as f64, 100.0));
            big_w.push(1e-300 * s);
        }
        let big = build(&big_pts, &big_w);
        let greedy = hausdorff_constant(&big, delta, alpha).unwrap();
        prop_assert!(!greedy.exact);
        let g = greedy.hausdorff_constant.unwrap();
        prop_assert!(g >= exact.hausdorff_constant.unwrap() * (1.0 - 1e-9), "{g} vs {:?}", exact.hausdorff_constant);
        prop_assert!(greedy.covering_number >= exact.covering_number);
    }
}
