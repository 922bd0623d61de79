use proptest::prelude::*;

use sirsim::analytics::{
    bdp_extinction_cdf_exact, classify_case, hit_prob_immig_death, hit_prob_linear_bdp, integral_laplace,
    AsymptoticLaw, LambdaGap, LawShape, PowerLaw, R0Scaling, ScalingSpec,
};
use sirsim::model::{bdi_system, sirs_system};
use sirsim::montecarlo::{ecdf_sorted, ks_two_sample};
use sirsim::ssa::simulate_trajectory;
use sirsim::tau::simulate_tau_to_stop;
use sirsim::{BdiParams, Recording, RngStream, SirsParams, StopCondition, TauConfig};

fn shape() -> impl Strategy<Value = LawShape> {
    prop_oneof![
        (1u64..50).prop_map(|i0| LawShape::Case11Finite { i0 }),
        Just(LawShape::Case11Growing),
        (0.01f64..5.0, 1u64..50).prop_map(|(a, i0)| LawShape::Case12Finite { a, i0 }),
        (0.01f64..5.0).prop_map(|a| LawShape::Case12Growing { a }),
        Just(LawShape::Gumbel),
    ]
}

fn exponent() -> impl Strategy<Value = f64> {
    (0u32..12).prop_map(|k| k as f64 / 12.0)
}

fn scaling() -> impl Strategy<Value = ScalingSpec> {
    (
        prop_oneof![Just(1i8), Just(-1i8)],
        exponent(),
        exponent(),
        exponent().prop_filter("i0 exponent < 1", |u| *u < 1.0),
        prop_oneof![
            exponent()
                .prop_filter("r0 exponent < 1", |v| *v < 1.0)
                .prop_map(|v| R0Scaling::Power {
                    coeff: 1.0,
                    exponent: sirsim::analytics::Exponent(v)
                }),
            (0.05f64..0.95).prop_map(|fraction| R0Scaling::Fraction { fraction }),
        ],
    )
        .prop_map(|(sign, p, q, u, r0)| ScalingSpec {
            lambda_gap: LambdaGap::power(sign, 1.0, p),
            gamma: PowerLaw::new(1.0, q),
            i0: PowerLaw::new(1.0, u),
            r0,
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn law_cdf_is_a_distribution(shape in shape(), scale in 0.1f64..10.0, shift in -3.0f64..3.0,
                                 mut ws in prop::collection::vec(-20.0f64..200.0, 2..40)) {
        let law = AsymptoticLaw::new(shape, scale, shift).unwrap();
        ws.sort_by(f64::total_cmp);
        let values: Vec<f64> = ws.iter().map(|&t| law.cdf(t)).collect();
        prop_assert!(values.iter().all(|v| (0.0..=1.0).contains(v)));
        prop_assert!(values.windows(2).all(|p| p[0] <= p[1]));
    }

    #[test]
    fn quantile_inverts_cdf(shape in shape(), p in 0.001f64..0.999) {
        let w = shape.quantile(p);
        prop_assert!((shape.cdf(w) - p).abs() < 1e-9, "w={w}");
    }

    #[test]
    fn exact_bdp_cdf_is_monotone(beta in 0.0f64..3.0, mu in 0.1f64..3.0, l0 in 0u64..30,
                                 t in 0.0f64..50.0, dt in 0.0f64..5.0) {
        let a = bdp_extinction_cdf_exact(beta, mu, l0, t).unwrap();
        let b = bdp_extinction_cdf_exact(beta, mu, l0, t + dt).unwrap();
        prop_assert!((0.0..=1.0).contains(&a));
        prop_assert!(a <= b + 1e-15);
        if l0 == 0 {
            prop_assert_eq!(a, 1.0);
        }
    }

    #[test]
    fn linear_bdp_hitting_is_a_monotone_probability(beta in 0.05f64..4.0, k in 1u64..80) {
        let hs: Vec<f64> = (0..=k).map(|i| hit_prob_linear_bdp(beta, i, k).unwrap()).collect();
        prop_assert_eq!(hs[0], 0.0);
        prop_assert!((hs[k as usize] - 1.0).abs() < 1e-15);
        prop_assert!(hs.iter().all(|h| (0.0..=1.0).contains(h)));
        prop_assert!(hs.windows(2).all(|p| p[0] <= p[1] + 1e-15));
    }

    #[test]
    fn immigration_death_hitting_decreases_in_ratio(r in 0.01f64..20.0, dr in 0.01f64..5.0, l in 1u64..40) {
        let a = hit_prob_immig_death(1.0, r, l).unwrap();
        let b = hit_prob_immig_death(1.0, r + dr, l).unwrap();
        prop_assert!(a > 0.0 && a < 1.0);
        prop_assert!(b <= a + 1e-15);
    }

    #[test]
    fn laplace_transform_is_a_decreasing_probability(beta in 0.0f64..1.0, gap in 0.01f64..2.0,
                                                     l in 1u64..20, a in 0.0f64..10.0) {
        let mu = beta + gap;
        let h0 = integral_laplace(beta, mu, l, 0.0).unwrap();
        prop_assert!((h0 - 1.0).abs() < 1e-12);
        let h = integral_laplace(beta, mu, l, a).unwrap();
        let h2 = integral_laplace(beta, mu, l, a + 0.5).unwrap();
        prop_assert!(h > 0.0 && h <= 1.0 && h2 <= h);
    }

    #[test]
    fn classification_is_total_and_deterministic(spec in scaling()) {
        prop_assert_eq!(classify_case(&spec), classify_case(&spec));
    }

    #[test]
    fn two_sample_ks_is_a_symmetric_distance(mut a in prop::collection::vec(0.0f64..10.0, 1..60),
                                             mut b in prop::collection::vec(0.0f64..10.0, 1..60)) {
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        let d = ks_two_sample(&a, &b);
        prop_assert!((0.0..=1.0).contains(&d));
        prop_assert_eq!(d, ks_two_sample(&b, &a));
        prop_assert_eq!(ks_two_sample(&a, &a), 0.0);
    }

    #[test]
    fn ecdf_is_right_continuous(mut xs in prop::collection::vec(0.0f64..10.0, 1..60), k in 0usize..60) {
        xs.sort_by(f64::total_cmp);
        let x = xs[k % xs.len()];
        let at = ecdf_sorted(&xs, x);
        prop_assert!(at >= ecdf_sorted(&xs, x - 1e-9));
        prop_assert_eq!(at, xs.iter().filter(|&&v| v <= x).count() as f64 / xs.len() as f64);
        prop_assert!(at > 0.0);
    }

    #[test]
    fn derived_streams_are_reproducible(seed in any::<u64>(), k in 0u32..100, j in 0u32..1000) {
        let mut a = RngStream::derive(seed, k, j);
        let mut b = RngStream::derive(seed, k, j);
        let mut c = RngStream::derive(seed, k, j + 1);
        let xa: Vec<u64> = (0..4).map(|_| a.next_u64()).collect();
        let xb: Vec<u64> = (0..4).map(|_| b.next_u64()).collect();
        let xc: Vec<u64> = (0..4).map(|_| c.next_u64()).collect();
        prop_assert_eq!(&xa, &xb);
        prop_assert_ne!(xa, xc);
    }

    #[test]
    fn poisson_draws_are_plausible(mean in 0.0f64..500.0, seed in any::<u64>()) {
        let mut rng = RngStream::from_seed(seed);
        let x = rng.poisson(mean) as f64;
        // beyond 12 standard deviations is a failure, not chance
        prop_assert!((x - mean).abs() <= 12.0 * mean.sqrt().max(1.0), "{x} for mean {mean}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn sirs_trajectories_are_valid(n in 20u64..400, lambda in 0.1f64..3.0, gamma in 0.01f64..3.0,
                                   i0 in 0u64..20, r0 in 0u64..20, seed in any::<u64>()) {
        let i0 = i0.min(n);
        let r0 = r0.min(n - i0);
        let params = SirsParams::new(n, lambda, gamma).unwrap();
        let system = sirs_system(params);
        let stop = StopCondition::component_zero(0).with_event_cap(Some(20_000)).unwrap();
        let mut rng = RngStream::from_seed(seed);
        let traj = simulate_trajectory(&system, &[i0 as i64, r0 as i64], &stop, &mut rng, Recording::AllEvents).unwrap();
        prop_assert!(traj.times.windows(2).all(|w| w[0] < w[1]));
        let allowed = [[1i64, 0], [0, -1], [-1, 1]];
        let states: Vec<&[i64]> = traj.states().collect();
        for w in states.windows(2) {
            let d = [w[1][0] - w[0][0], w[1][1] - w[0][1]];
            prop_assert!(allowed.contains(&d), "jump {d:?}");
            prop_assert!(w[1][0] >= 0 && w[1][1] >= 0 && w[1][0] + w[1][1] <= n as i64);
        }
    }

    #[test]
    fn tau_final_states_are_feasible(n in 100u64..5000, lambda in 0.1f64..4.0, gamma in 0.01f64..3.0,
                                     fi in 0.0f64..1.0, fr in 0.0f64..1.0, n_c in 1u64..50,
                                     epsilon in 0.01f64..0.5, seed in any::<u64>()) {
        let i0 = ((n as f64 * fi) as u64).max(1);
        let r0 = ((n - i0) as f64 * fr) as u64;
        let params = SirsParams::new(n, lambda, gamma).unwrap();
        let system = sirs_system(params);
        let cfg = TauConfig { n_c, epsilon, ..Default::default() };
        let stop = StopCondition::time_horizon(2.0).unwrap();
        let mut rng = RngStream::from_seed(seed);
        let (_, last) = simulate_tau_to_stop(&system, &[i0 as i64, r0 as i64], &stop, &cfg, &mut rng).unwrap();
        prop_assert!(last[0] >= 0 && last[1] >= 0 && last[0] + last[1] <= n as i64, "{last:?}");
    }

    #[test]
    fn bdp_paths_never_go_negative(beta in 0.0f64..2.0, mu in 0.1f64..2.0, alpha in 0.0f64..2.0,
                                   l0 in 0i64..30, seed in any::<u64>()) {
        let system = bdi_system(BdiParams::new(beta, mu, alpha, false).unwrap());
        let stop = StopCondition::time_horizon(3.0).unwrap();
        let mut rng = RngStream::from_seed(seed);
        let traj = simulate_trajectory(&system, &[l0], &stop, &mut rng, Recording::AllEvents).unwrap();
        prop_assert!(traj.states().all(|s| s[0] >= 0));
    }
}
