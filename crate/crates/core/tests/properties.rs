use proptest::prelude::*;

use renewal_coupling::bounds::poly_constant;
use renewal_coupling::coupling::{build_coupling, coupling_epoch, evaluate_state, EventKind, Horizon};
use renewal_coupling::decomposition::decompose;
use renewal_coupling::distributions::DistributionSpec;
use renewal_coupling::sampling::{sample_xi_pair, UniformStream};

fn spec_strategy() -> impl Strategy<Value = DistributionSpec> {
    prop_oneof![
        (0.1f64..5.0).prop_map(|rate| DistributionSpec::exponential(rate).unwrap()),
        (0.0f64..2.0, 0.1f64..3.0).prop_map(|(a, w)| DistributionSpec::uniform(a, a + w).unwrap()),
        (1.5f64..6.0, 0.2f64..3.0).prop_map(|(shape, scale)| DistributionSpec::lomax(shape, scale).unwrap()),
        (0.2f64..0.9, 0.1f64..3.0, 0.1f64..4.0).prop_map(|(w, loc, rate)| {
            DistributionSpec::atom_mixture(Some(DistributionSpec::exponential(rate).unwrap()), w, &[(loc, 1.0 - w)])
                .unwrap()
        }),
        (0.2f64..0.8, 1.0f64..3.0).prop_map(|(w, b)| {
            DistributionSpec::weighted_mixture(vec![
                (w, DistributionSpec::uniform(0.0, b).unwrap()),
                (1.0 - w, DistributionSpec::exponential(1.0).unwrap()),
            ])
            .unwrap()
        }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn quantile_is_a_generalized_inverse(spec in spec_strategy(), y in 0.0f64..0.999) {
        let q = spec.quantile(y).unwrap();
        prop_assert!(spec.cdf(q) >= y - 1e-10);
        prop_assert!(spec.cdf_left(q) <= y + 1e-10);
        prop_assert!(spec.quantile(1.0).is_err());
    }

    #[test]
    fn decomposition_parts_add_up(spec in spec_strategy(), xs in prop::collection::vec(0.0f64..20.0, 1..12)) {
        let d = decompose(&spec).unwrap();
        prop_assert!(d.kappa() > 0.0 && d.kappa() <= 1.0);
        prop_assert!((d.kappa() + d.kappa_bar() - 1.0).abs() < 1e-12);
        for &s in &xs {
            let f = spec.cdf(s);
            let ft = spec.equilibrium_cdf(s).unwrap();
            prop_assert!((d.phi(s) + d.psi(s) - f).abs() < 1e-9, "s={} {} + {} vs {}", s, d.phi(s), d.psi(s), f);
            prop_assert!((d.phi(s) + d.psi_tilde(s) - ft).abs() < 1e-9);
        }
    }

    #[test]
    fn decomposition_parts_are_monotone(spec in spec_strategy()) {
        let d = decompose(&spec).unwrap();
        let mut pts = d.breakpoints();
        let extra: Vec<f64> = pts.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        pts.extend(extra);
        pts.extend([0.0, 0.5, 1.0, 10.0, 100.0]);
        pts.retain(|p| p.is_finite());
        pts.sort_by(f64::total_cmp);
        for w in pts.windows(2) {
            prop_assert!(d.phi(w[1]) >= d.phi(w[0]) - 1e-14);
            prop_assert!(d.psi(w[1]) >= d.psi(w[0]) - 1e-14);
            prop_assert!(d.psi_tilde(w[1]) >= d.psi_tilde(w[0]) - 1e-14);
        }
        prop_assert!(d.phi(1e12) <= d.kappa() + 1e-12);
    }

    #[test]
    fn residual_at_zero_is_the_lifetime_law(spec in spec_strategy(), s in 0.0f64..10.0) {
        prop_assert!((spec.residual_cdf(0.0, s).unwrap() - spec.cdf(s)).abs() < 1e-12);
    }

    #[test]
    fn poly_constant_is_monotone(
        k in 1.0f64..4.0,
        mu0 in 0.0f64..5.0,
        mu in 0.1f64..5.0,
        kappa in 0.05f64..0.95,
        bump in 0.01f64..1.0,
    ) {
        let base = poly_constant(k, mu0, mu, kappa).unwrap().constant;
        prop_assert!(poly_constant(k, mu0 + bump, mu, kappa).unwrap().constant >= base);
        prop_assert!(poly_constant(k, mu0, mu + bump, kappa).unwrap().constant >= base);
        let better = (kappa + bump * (1.0 - kappa)).min(1.0);
        prop_assert!(poly_constant(k, mu0, mu, better).unwrap().constant <= base * (1.0 + 1e-12));
    }

    #[test]
    fn poly_constant_order_one_closed_form(mu0 in 0.0f64..10.0, mu in 0.01f64..10.0, kappa in 0.01f64..1.0) {
        let got = poly_constant(1.0, mu0, mu, kappa).unwrap().constant;
        let exact = mu0 + mu * (2.0 - kappa) / kappa;
        prop_assert!((got - exact).abs() <= 1e-10 * exact);
    }

    #[test]
    fn xi_pair_invariants(spec in spec_strategy(), u in 0.0f64..1.0, u1 in 0.0f64..1.0, u2 in 0.0f64..1.0) {
        let d = decompose(&spec).unwrap();
        let p = sample_xi_pair(&d, u, u1, u2);
        prop_assert_eq!(p.coincident, u < d.kappa());
        if p.coincident {
            prop_assert_eq!(p.xi, p.xi_tilde);
        }
        prop_assert!(p.xi >= 0.0 && p.xi.is_finite());
        prop_assert!(p.xi_tilde >= 0.0 && p.xi_tilde.is_finite());
    }

    #[test]
    fn coupling_traces_are_consistent(spec in spec_strategy(), seed in any::<u64>(), r_frac in 0.0f64..0.9) {
        let d = decompose(&spec).unwrap();
        let r = spec.quantile(r_frac * 0.5).unwrap();
        prop_assume!(spec.survival(r) > 1e-6);
        let mut stream = UniformStream::new(seed, 0);
        let trace = build_coupling(&d, r, &mut stream, Horizon::EpochAndTime { t: 15.0 }).unwrap();
        let (epoch, nu) = coupling_epoch(&trace).unwrap();
        prop_assert!(nu >= 1 && epoch >= 0.0);
        prop_assert!(trace.events.windows(2).all(|w| w[0].time <= w[1].time));
        prop_assert!(trace.theta.windows(2).all(|w| w[0] <= w[1]));
        prop_assert_eq!(
            trace.events.iter().filter(|e| e.kind == EventKind::CommonRenewal).map(|e| e.time).next(),
            Some(epoch)
        );
        for i in 0..30 {
            let t = (trace.horizon * f64::from(i) / 29.0).min(trace.horizon);
            let (z, zt) = evaluate_state(&trace, t).unwrap();
            prop_assert!(z >= 0.0 && z <= t + r + 1e-12);
            prop_assert!(zt >= 0.0);
            if t >= epoch {
                prop_assert_eq!(z, zt);
            }
        }
    }
}
