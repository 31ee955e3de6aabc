use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use radviz3d::overlap::{pair_seed, ScaledOverlap};
use radviz3d::{generalized_overlap, overlap_matrix, GaussianComponent, OverlapMatrix};

const DRAWS: usize = 100_000;

fn spd(entries: &[f64], p: usize, scale: f64) -> DMatrix<f64> {
    let b = DMatrix::from_row_slice(p, p, entries);
    (&b * b.transpose() + DMatrix::identity(p, p) * 0.1) * scale
}

/// Random K-component mixtures in 3 dimensions with moderate overlap.
fn mixture() -> impl Strategy<Value = Vec<GaussianComponent>> {
    (2usize..=3).prop_flat_map(|k| {
        prop::collection::vec(
            (prop::collection::vec(0.0..1.0f64, 3), prop::collection::vec(-1.0..1.0f64, 9), 0.02..0.2f64),
            k,
        )
        .prop_map(move |parts| {
            parts
                .into_iter()
                .map(|(mean, b, s)| {
                    GaussianComponent::new(DVector::from_vec(mean), spd(&b, 3, s), 1.0 / k as f64).unwrap()
                })
                .collect()
        })
    })
}

fn inflate(components: &[GaussianComponent], c: f64) -> Vec<GaussianComponent> {
    components.iter().map(|g| g.with_scaled_covariance(c).unwrap()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    // Every entry's standard error is below sqrt(0.5 / DRAWS) ~ 0.0022 and
    // both estimates share seeds, so a drop beyond 0.01 is not noise.
    #[test]
    fn inflating_covariances_never_decreases_generalized_overlap(
        components in mixture(),
        c in 1.5..4.0f64,
        seed in any::<u64>(),
    ) {
        let before = overlap_matrix(&components, DRAWS, seed).unwrap().generalized().unwrap();
        let after = overlap_matrix(&inflate(&components, c), DRAWS, seed).unwrap().generalized().unwrap();
        prop_assert!(after >= before - 0.01, "before {before}, after {after}, c {c}");
    }

    #[test]
    fn overlap_matrix_is_symmetric_with_zero_diagonal(components in mixture(), seed in any::<u64>()) {
        let omega = overlap_matrix(&components, 20_000, seed).unwrap();
        let k = omega.k();
        for i in 0..k {
            prop_assert_eq!(omega.get(i, i), 0.0);
            for j in 0..k {
                prop_assert_eq!(omega.get(i, j), omega.get(j, i));
                prop_assert!((0.0..=2.0).contains(&omega.get(i, j)));
            }
        }
        let g = omega.generalized().unwrap();
        prop_assert!((0.0..=1.0 + 1e-12).contains(&g));
    }

    #[test]
    fn generalized_overlap_within_unit_interval(entries in prop::collection::vec(0.0..1.0f64, 10)) {
        // symmetric 5x5 from the strict lower triangle
        let mut omega = DMatrix::zeros(5, 5);
        let mut it = entries.iter();
        for i in 1..5 {
            for j in 0..i {
                let v = *it.next().unwrap();
                omega[(i, j)] = v;
                omega[(j, i)] = v;
            }
        }
        let g = generalized_overlap(&OverlapMatrix::new(omega, 1, 0).unwrap()).unwrap();
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&g));
    }
}

#[test]
fn schedule_does_not_change_estimates() {
    let components: Vec<GaussianComponent> = (0..4)
        .map(|k| {
            let mean = DVector::from_vec(vec![k as f64 * 0.3, 0.1 * k as f64, 0.0]);
            GaussianComponent::new(mean, DMatrix::identity(3, 3) * 0.05, 0.25).unwrap()
        })
        .collect();
    let serial = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let wide = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
    let a = serial.install(|| overlap_matrix(&components, 50_000, 11).unwrap());
    let b = wide.install(|| overlap_matrix(&components, 50_000, 11).unwrap());
    assert_eq!(a, b);
}

#[test]
fn pair_seeds_ignore_argument_order_and_differ_across_pairs() {
    assert_eq!(pair_seed(5, 1, 3), pair_seed(5, 3, 1));
    let seeds: std::collections::HashSet<u64> =
        (0..20).flat_map(|i| (i + 1..20).map(move |j| pair_seed(5, i, j))).collect();
    assert_eq!(seeds.len(), 190);
}

#[test]
fn scaled_evaluator_matches_rescaled_matrix() {
    let components: Vec<GaussianComponent> = (0..3)
        .map(|k| {
            let b: Vec<f64> = (0..9).map(|t| ((t * 7 + k * 3) % 5) as f64 / 5.0 - 0.4).collect();
            let mean = DVector::from_vec(vec![0.2 * k as f64, 0.5, 0.1 * (k * k) as f64]);
            GaussianComponent::new(mean, spd(&b, 3, 0.05), 1.0 / 3.0).unwrap()
        })
        .collect();
    let scaled = ScaledOverlap::new(&components, 30_000, 9).unwrap();
    for c in [0.3, 1.0, 2.5] {
        let direct = overlap_matrix(&inflate(&components, c), 30_000, 9).unwrap();
        let fast = scaled.omega_at(c);
        // the two evaluate the same draws up to rounding in the boundary test
        assert!((direct.omega.clone() - fast).amax() <= 2.0 / 30_000.0, "c = {c}");
    }
}
