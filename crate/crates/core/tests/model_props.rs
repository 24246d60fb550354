use proptest::prelude::*;

use contraction::neighborhoods::{member, NeighborhoodKind, NeighborhoodSpec};
use contraction::posterior::{posterior_exact, pseudoposterior_exact};
use contraction::priors::PriorSpec;
use contraction::verifier::FiniteModel;
use contraction::{DiscreteExperiment, Experiment, ParameterId, PmfTable};

fn normalise(v: Vec<f64>) -> Vec<f64> {
    let s: f64 = v.iter().sum();
    v.into_iter().map(|x| x / s).collect()
}

/// i.n.i.d. experiment: `tables` tables, `params` parameters, `b` outcomes,
/// every pmf strictly positive.
fn experiment() -> impl Strategy<Value = DiscreteExperiment> {
    (1usize..=3, 2usize..=5, 2usize..=3).prop_flat_map(|(tables, params, b)| {
        (
            prop::collection::vec(
                prop::collection::vec(prop::collection::vec(0.05f64..1.0, b), params),
                tables,
            ),
            0..params,
        )
            .prop_map(|(raw, truth)| {
                let tables = raw
                    .into_iter()
                    .map(|rows| PmfTable::new(rows.into_iter().map(normalise).collect()).unwrap())
                    .collect();
                DiscreteExperiment::new("random", tables, ParameterId(truth)).unwrap()
            })
    })
}

fn prior(p: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01f64..1.0, p).prop_map(normalise)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn likelihood_ratio_has_unit_mean(exp in experiment(), n in 1usize..=6) {
        let atoms = exp.atoms(n).unwrap().unwrap();
        for t in 0..exp.num_params() {
            let m: f64 = atoms.iter().map(|a| a.prob * a.log_ratios[t].exp()).sum();
            prop_assert!((m - 1.0).abs() <= 1e-12, "E R = {m}");
        }
    }

    #[test]
    fn sampling_is_seed_deterministic(exp in experiment(), n in 1usize..50, seed in any::<u64>()) {
        let a = exp.sample_truth(n, seed).unwrap();
        let b = exp.sample_truth(n, seed).unwrap();
        prop_assert_eq!(a.values().iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
                        b.values().iter().map(|v| v.to_bits()).collect::<Vec<_>>());
    }

    #[test]
    fn wbar_inside_w(exp in experiment(), n in 1usize..40, eps in 0.01f64..1.0) {
        let wbar = NeighborhoodSpec::new(NeighborhoodKind::WBar, eps, n).unwrap();
        let w = NeighborhoodSpec::new(NeighborhoodKind::W, eps, n).unwrap();
        for t in 0..exp.num_params() {
            let p = ParameterId(t);
            if member(&wbar, &exp, &p).unwrap() {
                prop_assert!(member(&w, &exp, &p).unwrap());
            }
        }
    }

    #[test]
    fn neighbourhoods_grow_with_epsilon(exp in experiment(), n in 1usize..40, e1 in 0.01f64..1.0, e2 in 0.01f64..1.0) {
        let (lo, hi) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
        for kind in [NeighborhoodKind::W, NeighborhoodKind::WBar, NeighborhoodKind::B] {
            let small = NeighborhoodSpec::new(kind, lo, n).unwrap();
            let big = NeighborhoodSpec::new(kind, hi, n).unwrap();
            for t in 0..exp.num_params() {
                let p = ParameterId(t);
                if member(&small, &exp, &p).unwrap() {
                    prop_assert!(member(&big, &exp, &p).unwrap(), "{kind:?}");
                }
            }
        }
    }

    #[test]
    fn posterior_invariants((exp, w) in experiment().prop_flat_map(|e| { let p = e.num_params(); (Just(e), prior(p)) }),
                            n in 1usize..8, seed in any::<u64>(), beta in 0.05f64..1.0) {
        let points: Vec<ParameterId> = (0..exp.num_params()).map(ParameterId).collect();
        let x = exp.sample_truth(n, seed).unwrap();
        let post = posterior_exact(&exp, &points, &w, &x).unwrap();
        prop_assert!((post.total_mass() - 1.0).abs() <= 1e-10);

        let same = pseudoposterior_exact(&exp, &points, &w, &x, 1.0).unwrap();
        prop_assert_eq!(&post, &same);
        let pseudo = pseudoposterior_exact(&exp, &points, &w, &x, beta).unwrap();
        prop_assert!((pseudo.total_mass() - 1.0).abs() <= 1e-10);

        // evidence against the direct sum Σ Π(θ) Π_i p_θ(x_i)/p_θ₀(x_i)
        let t0 = *exp.truth();
        let direct: f64 = points.iter().zip(&w).map(|(p, wt)| {
            wt * x.values().iter().enumerate().map(|(i, v)| exp.pmf(*p, i)[*v as usize] / exp.pmf(t0, i)[*v as usize]).product::<f64>()
        }).sum();
        prop_assert!((post.log_evidence.exp() - direct).abs() <= 1e-10 * direct);

        // relabelling the support leaves the masses unchanged
        let rev: Vec<ParameterId> = points.iter().rev().copied().collect();
        let wrev: Vec<f64> = w.iter().rev().copied().collect();
        let post_rev = posterior_exact(&exp, &rev, &wrev, &x).unwrap();
        for (a, b) in post.weights().iter().zip(post_rev.weights().iter().rev()) {
            prop_assert!((a - b).abs() <= 1e-14);
        }
    }

    #[test]
    fn partition_union_mass(k in 1usize..30, pick in prop::collection::vec(any::<prop::sample::Index>(), 0..30)) {
        let cells: Vec<Vec<usize>> = (0..k).map(|c| vec![2 * c, 2 * c + 1]).collect();
        let reps: Vec<usize> = (0..k).map(|c| 2 * c).collect();
        let prior = PriorSpec::partition_uniform(cells, reps).unwrap();
        let mut ids: Vec<usize> = pick.iter().map(|i| i.index(k)).collect();
        let m = prior.union_mass(&ids).unwrap();
        ids.sort_unstable();
        ids.dedup();
        prop_assert_eq!(m, ids.len() as f64 / k as f64);
    }

    #[test]
    fn gauss_seq_prior_condition_c(k in 1usize..64, gamma in 0.5f64..2.0, alpha in prop::collection::vec(-1.0f64..1.0, 64)) {
        let prior = PriorSpec::gauss_seq(k, gamma).unwrap();
        let ratio = prior.condition_c_ratio(&alpha[..k], gamma).unwrap();
        prop_assert!(ratio <= 1.0 + 1e-12);
    }
}
