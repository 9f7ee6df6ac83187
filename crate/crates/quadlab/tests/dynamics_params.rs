use proptest::prelude::*;
use quadlab::dynamics::transversality_sum;
use quadlab::params::{build_returning_pair, certify_misiurewicz, find_superattracting, gamma_scale};
use quadlab::UnimodalFamily;

fn cheb() -> UnimodalFamily {
    UnimodalFamily::quadratic(-2.0).unwrap()
}

proptest! {
    #[test]
    fn invariant_interval_is_invariant(t in 0.0f64..0.05, s in 0.0f64..=1.0) {
        let f = cheb();
        let dom = f.interval(t);
        let y = f.value(t, dom.lerp(s));
        prop_assert!(dom.lo - 1e-12 <= y && y <= dom.hi + 1e-12);
    }

    #[test]
    fn normalized_family_lives_on_the_unit_interval(t in 0.0f64..0.05, s in 0.0f64..=1.0) {
        let f = UnimodalFamily::normalized(-2.0).unwrap();
        let dom = f.interval(t);
        let y = f.value(t, dom.lerp(s));
        prop_assert!(dom.contains_closed(y) || (y - dom.hi).abs() < 1e-12 || (y - dom.lo).abs() < 1e-12);
    }
}

#[test]
fn chebyshev_base_is_certified() {
    let c = certify_misiurewicz(&cheb(), 64, 1e-9, 1.0).unwrap();
    assert!(c.passed);
    assert_eq!((c.preperiod, c.period), (1, 1));
    assert!((c.cycle_multiplier.abs() - 4.0).abs() < 1e-12);
}

#[test]
fn transversality_limit() {
    let r = transversality_sum(&cheb(), 60, 1e-10).unwrap();
    assert!((r.limit_estimate - 2.0 / 3.0).abs() < 1e-10);
}

#[test]
fn superattracting_parameters_sit_below_their_scale() {
    let f = cheb();
    let mut prev = f64::INFINITY;
    for n in 5..=9 {
        let s = find_superattracting(&f, n, 3, 0.2, 1e-15).unwrap();
        assert!(0.0 < s.t_n && s.t_n <= s.gamma_n, "{s:?}");
        assert!((s.gamma_n - gamma_scale(&f, n, 1.0).unwrap()).abs() <= 1e-12 * s.gamma_n);
        assert!(s.t_n < prev);
        assert!(s.p_n > n && s.p_n <= n + 3);
        assert!(s.residual < 1e-10, "{s:?}");
        prev = s.t_n;
    }
}

#[test]
fn returning_pairs_are_nested() {
    let f = cheb();
    for t in [0.0, 1e-6, 1e-5] {
        let p = build_returning_pair(&f, t, 0.2, 2000).unwrap();
        assert!(p.u0.contains_interval(&p.u1));
        assert!(p.u1.contains(0.0));
    }
}

#[test]
fn small_theta_edge_does_not_survive_large_t() {
    // the U_1 edge is continued only while t stays well below its scale
    let f = cheb();
    assert!(build_returning_pair(&f, 0.0, 0.05, 2000).is_ok());
    assert!(build_returning_pair(&f, 1e-5, 0.05, 2000).is_err());
}
