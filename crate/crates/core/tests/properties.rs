use gkdv_core::nonlinearity::PowerTerm;
use gkdv_core::profile::identity_residuals;
use gkdv_core::{Nonlinearity, SolitonProfile};
use proptest::prelude::*;

fn nonlinearity() -> impl Strategy<Value = Nonlinearity> {
    prop::collection::vec((0.1f64..2.0, 0.1f64..3.9), 1..=3).prop_filter_map(
        "exponents must be separated",
        |mut t| {
            t.sort_by(|a, b| a.1.total_cmp(&b.1));
            if t.windows(2).any(|w| w[1].1 - w[0].1 < 0.05) {
                return None;
            }
            let terms = t.into_iter().map(|(c, q)| PowerTerm::new(c, q)).collect();
            Nonlinearity::power_sum(terms, 100.0).ok()
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn derivatives_match_finite_differences(nl in nonlinearity(), u in 0.05f64..20.0) {
        let h = 1e-5 * u;
        let fd = |f: &dyn Fn(f64) -> f64| (f(u + h) - f(u - h)) / (2.0 * h);
        let g = |v| nl.g(v);
        let gp = |v| nl.g_prime(v);
        let g1 = |v| nl.g1(v);
        prop_assert!((fd(&g) - nl.g_prime(u)).abs() <= 1e-6 * nl.g_prime(u).abs().max(1.0));
        prop_assert!((fd(&gp) - nl.g_second(u)).abs() <= 1e-6 * nl.g_second(u).abs().max(1.0));
        prop_assert!((fd(&g1) - nl.g1_prime(u)).abs() <= 1e-6 * nl.g1_prime(u).abs().max(1.0));
        prop_assert!((nl.g2(u) - (nl.g(u) - u * nl.g_prime(u))).abs() <= 1e-12 * nl.g(u).abs().max(1.0) * 10.0);
        prop_assert!((nl.g(u) - u * u * nl.g1(u)).abs() <= 1e-12 * nl.g(u).max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn profiles_are_even_decreasing_and_satisfy_identities(nl in nonlinearity(), a in 0.2f64..30.0) {
        let p = SolitonProfile::solve(&nl, a).unwrap();
        let n = p.omega.len();
        for i in 0..n / 2 {
            prop_assert!((p.omega[i] - p.omega[n - 1 - i]).abs() <= 1e-13);
        }
        prop_assert!(p.omega[n / 2..].windows(2).all(|w| w[1] <= w[0]));
        prop_assert!((p.omega[n / 2] - 1.0).abs() <= 1e-14);
        let r = identity_residuals(&nl, a, &p.moments(&nl).unwrap());
        prop_assert!(r.max() <= 1e-6, "{:?}", r);
    }
}
