use quadlab::inducing::ClassifyCaps;
use quadlab::params::build_returning_pair;
use quadlab::stats::experiments::superattracting_setup;
use quadlab::stats::Observable;
use quadlab::tower::{
    dyadic_grid, maximal_moment_sweep, tau_concentration_sweep, verify_induced_contract, FullMap, InducedMapSpec,
    MuYSampling, TowerHandle,
};
use quadlab::UnimodalFamily;

fn light() -> MuYSampling {
    MuYSampling {
        replicas: 16,
        burn_in: 1000,
    }
}

fn chebyshev_scheme() -> InducedMapSpec {
    let f = UnimodalFamily::quadratic(-2.0).unwrap();
    let pair = build_returning_pair(&f, 0.0, 0.2, 10_000).unwrap();
    InducedMapSpec::from_scheme(&f, 0.0, &pair, None, ClassifyCaps::default(), 2000, 1, (2.0, 1.0, 1.0)).unwrap()
}

#[test]
fn doubling_ratio_test() {
    // the norm at 4k is twice the norm at k for the geometric return time
    let s = InducedMapSpec::doubling_first_return(50).unwrap();
    let r = tau_concentration_sweep(&s, &[64, 256], 4096, light(), 3).unwrap();
    let q = r.ratio(64, 256).unwrap();
    assert!((q - 2.0).abs() < 0.15, "{q}");
}

#[test]
fn doubling_maximal_moment_ratio() {
    let r = maximal_moment_sweep(&FullMap::Doubling, &Observable::Coordinate, 0.5, &[64, 1024], 4000, 4).unwrap();
    let q = r.ratio(64, 1024).unwrap();
    assert!((q - 4.0).abs() < 0.4, "{q}");
}

#[test]
fn chebyshev_scheme_satisfies_the_contract() {
    let s = chebyshev_scheme();
    let r = verify_induced_contract(&s, 5).unwrap();
    assert!(r.check("expansion").unwrap().worst >= 2.0);
}

#[test]
fn chebyshev_tower_projects_onto_the_map() {
    let s = chebyshev_scheme();
    let h = TowerHandle::new(&s, light(), 500, 2).unwrap();
    let c = h.check_semiconjugacy(2, 3000, 5).unwrap();
    assert_eq!(c.mismatches, 0, "{c:?}");
    let d = h.density_histogram(8, 2000, 6).unwrap();
    let (lo, hi) = d.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
    assert!(lo > 0.5 && hi < 2.0, "{d:?}");
}

#[test]
fn chebyshev_level_masses_match_the_tail() {
    let s = chebyshev_scheme();
    let h = TowerHandle::new(&s, light(), 500, 2).unwrap();
    for m in h.level_masses(60, 20_000, 8).unwrap().iter().step_by(10) {
        assert!(m.z().abs() < 4.0, "{m:?}");
    }
}

#[test]
fn superattracting_tau_concentration() {
    let f = UnimodalFamily::quadratic(-2.0).unwrap();
    let su = superattracting_setup(&f, 10, None, 0.2).unwrap();
    let s = InducedMapSpec::from_scheme(
        &f,
        su.param.t_n,
        &su.pair,
        Some(su.geometry.v),
        ClassifyCaps::default(),
        500,
        1,
        (2.0, 1.0, 1.0),
    )
    .unwrap();
    let r = tau_concentration_sweep(&s, &dyadic_grid(4, 8), 128, light(), 9).unwrap();
    let e = r.exponent().unwrap();
    assert!((0.4..=0.6).contains(&e), "{e}");
}
