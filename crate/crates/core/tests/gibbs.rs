mod common;

use std::sync::Arc;

use common::{rel_close, test_field, Brute};
use proptest::prelude::*;
use rfim_core::gibbs::audit::{perturbed_gap, TwoZoneAudit};
use rfim_core::gibbs::quadrature::{gauss_legendre, gl16_unit, integrate_unit};
use rfim_core::gibbs::{
    conditional_marginal, free_energy_derivative_check, log_partition, magnetization_sum,
    strip_log_z, ConfigPredicate, ExactGibbs, GibbsSpec, Monotonicity,
};
use rfim_core::ground_state::{boundary_from_fn, ground_state_values, uniform_boundary};
use rfim_core::rng::KeyedRng;
use rfim_core::{BoxRegion, LabError, RegionGraph, Site, SiteSet};

fn rect(x0: i32, y0: i32, w: i32, h: i32) -> SiteSet {
    (y0..y0 + h)
        .flat_map(|y| (x0..x0 + w).map(move |x| Site::new(x, y)))
        .collect()
}

fn spec_on(
    region: &SiteSet,
    seed: u64,
    eps: f64,
    bc: impl Fn(Site) -> i8,
    beta: f64,
) -> (GibbsSpec<f64>, Brute) {
    let g = Arc::new(RegionGraph::new(region));
    let f = test_field(seed, eps);
    let h: Vec<f64> = g.sites().iter().map(|&s| f(s)).collect();
    let tau = boundary_from_fn(&g, &bc);
    let brute = Brute::new(region, &f, &bc);
    (GibbsSpec::new(g, tau, h, beta).unwrap(), brute)
}

fn random_bc(seed: u64) -> impl Fn(Site) -> i8 {
    move |s| {
        if rfim_core::field::standard_normal_at(seed ^ 0x55, s) > 0.0 {
            1
        } else {
            -1
        }
    }
}

#[test]
fn single_site_plus_boundary() {
    let region: SiteSet = [Site::ORIGIN].into_iter().collect();
    for beta in [0.1, 0.5, 2.0] {
        let (spec, _) = spec_on(&region, 0, 0.0, |_| 1, beta);
        let f = log_partition(&spec, None).unwrap();
        let want = ((4.0 * beta).exp() + (-4.0 * beta).exp()).ln() / beta;
        assert!(rel_close(f, want, 1e-13));
    }
}

#[test]
fn full_restriction_matches_unrestricted() {
    let (spec, _) = spec_on(&rect(0, 0, 3, 3), 7, 1.0, random_bc(7), 0.7);
    let a = log_partition(&spec, None).unwrap();
    let b = log_partition(&spec, Some(&ConfigPredicate::full())).unwrap();
    assert!(rel_close(a, b, 1e-14));
}

#[test]
fn log_partition_matches_direct_summation() {
    for seed in 0..10 {
        let (spec, brute) = spec_on(&rect(-1, -1, 3, 3), seed, 1.0, random_bc(seed), 0.5);
        let f = log_partition(&spec, None).unwrap();
        let want = brute.log_z(0.5, |_| true) / 0.5;
        assert!(rel_close(f, want, 1e-12), "{f} vs {want}");
        let pred =
            ConfigPredicate::new("first-plus", Monotonicity::Increasing, |s: &[i8]| s[0] == 1);
        let fr = log_partition(&spec, Some(&pred)).unwrap();
        let i0 = brute.index(spec.graph().site(0));
        let wr = brute.log_z(0.5, |s| s[i0] == 1) / 0.5;
        assert!(rel_close(fr, wr, 1e-12));
    }
}

#[test]
fn empty_restriction_and_zero_beta_are_errors() {
    let (spec, _) = spec_on(&rect(0, 0, 2, 2), 1, 1.0, |_| 1, 1.0);
    let never = ConfigPredicate::new("never", Monotonicity::Unspecified, |_| false);
    assert!(matches!(
        log_partition(&spec, Some(&never)),
        Err(LabError::EmptyRestriction(_))
    ));
    let (spec0, _) = spec_on(&rect(0, 0, 2, 2), 1, 1.0, |_| 1, 0.0);
    assert!(matches!(
        log_partition(&spec0, None),
        Err(LabError::InvalidParameter(_))
    ));
}

#[test]
fn transfer_matrix_matches_enumeration() {
    for (w, h) in [(1, 1), (3, 5), (5, 3), (4, 6), (6, 4), (2, 7)] {
        let (spec, _) = spec_on(
            &rect(2, -3, w, h),
            (w * 10 + h) as u64,
            1.3,
            random_bc(w as u64),
            0.8,
        );
        let exact = ExactGibbs::new(&spec).unwrap().log_z();
        let tm = strip_log_z(&spec, &vec![None; spec.len()]).unwrap();
        assert!(rel_close(tm, exact, 1e-12), "{w}x{h}: {tm} vs {exact}");
    }
}

#[test]
fn transfer_matrix_pins_match_enumeration() {
    let (spec, brute) = spec_on(&rect(0, 0, 4, 4), 3, 1.0, random_bc(3), 0.9);
    let mut pins = vec![None; spec.len()];
    pins[5] = Some(1);
    pins[10] = Some(-1);
    let tm = strip_log_z(&spec, &pins).unwrap();
    let (a, b) = (
        brute.index(spec.graph().site(5)),
        brute.index(spec.graph().site(10)),
    );
    let want = brute.log_z(0.9, |s| s[a] == 1 && s[b] == -1);
    assert!(rel_close(tm, want, 1e-12));
}

#[test]
fn transfer_matrix_large_strip_is_symmetric_under_transpose() {
    let f = test_field(11, 1.0);
    let region = rect(0, 0, 6, 9);
    let g = Arc::new(RegionGraph::new(&region));
    let h: Vec<f64> = g.sites().iter().map(|&s| f(s)).collect();
    let spec = GibbsSpec::new(g.clone(), uniform_boundary(&g, 1), h, 0.6).unwrap();
    let gt = Arc::new(RegionGraph::new(&rect(0, 0, 9, 6)));
    let ht: Vec<f64> = gt.sites().iter().map(|&s| f(Site::new(s.y, s.x))).collect();
    let spec_t = GibbsSpec::new(gt.clone(), uniform_boundary(&gt, 1), ht, 0.6).unwrap();
    let a = log_partition(&spec, None).unwrap();
    let b = log_partition(&spec_t, None).unwrap();
    assert!(spec.len() > 24);
    assert!(rel_close(a, b, 1e-12));
}

#[test]
fn capacity_error_for_large_irregular_region() {
    let mut region = rect(0, 0, 13, 13);
    region.remove(Site::new(0, 0));
    let (spec, _) = spec_on(&region, 1, 1.0, |_| 1, 1.0);
    assert!(matches!(
        log_partition(&spec, None),
        Err(LabError::Capacity(_))
    ));
}

#[test]
fn isolated_free_site_is_fair() {
    let region: SiteSet = [Site::ORIGIN].into_iter().collect();
    let (spec, _) = spec_on(&region, 0, 0.0, |_| 0, 1.3);
    let p = conditional_marginal(&spec, &[], Site::ORIGIN).unwrap();
    assert!((p - 0.5).abs() < 1e-15);
}

#[test]
fn conditioned_neighbors_give_single_site_formula() {
    let (spec, _) = spec_on(&rect(-1, -1, 3, 3), 4, 1.0, random_bc(4), 0.7);
    let o = Site::ORIGIN;
    let cond: Vec<(Site, i8)> = o.neighbors4().into_iter().map(|s| (s, 1)).collect();
    let h = spec.field()[spec.graph().index_of(o).unwrap()];
    let p = conditional_marginal(&spec, &cond, o).unwrap();
    let a = 0.7 * (4.0 + h);
    let want = a.exp() / (a.exp() + (-a).exp());
    assert!(rel_close(p, want, 1e-12));
}

#[test]
fn conditional_marginal_matches_enumeration() {
    for seed in 0..5 {
        let (spec, brute) = spec_on(&rect(0, 0, 3, 3), seed, 1.0, random_bc(seed), 1.0);
        let cond = [(Site::new(0, 0), 1i8), (Site::new(2, 1), -1i8)];
        let target = Site::new(1, 2);
        let p = conditional_marginal(&spec, &cond, target).unwrap();
        let (a, b, t) = (
            brute.index(cond[0].0),
            brute.index(cond[1].0),
            brute.index(target),
        );
        let d = brute.distribution(1.0);
        let den: f64 = d
            .iter()
            .filter(|(s, _)| s[a] == 1 && s[b] == -1)
            .map(|p| p.1)
            .sum();
        let num: f64 = d
            .iter()
            .filter(|(s, _)| s[a] == 1 && s[b] == -1 && s[t] == 1)
            .map(|p| p.1)
            .sum();
        assert!(rel_close(p, num / den, 1e-12));
    }
    let (spec, _) = spec_on(&rect(0, 0, 3, 3), 0, 1.0, |_| 1, 1.0);
    assert!(conditional_marginal(&spec, &[(Site::new(9, 9), 1)], Site::ORIGIN).is_err());
    assert!(conditional_marginal(
        &spec,
        &[(Site::ORIGIN, 1), (Site::ORIGIN, -1)],
        Site::new(1, 1)
    )
    .is_err());
}

#[test]
fn magnetization_examples() {
    let (spec0, _) = spec_on(&rect(0, 0, 3, 3), 0, 0.0, |_| 1, 0.0);
    let all = rect(0, 0, 3, 3);
    assert!(magnetization_sum(&spec0, None, &all).unwrap().abs() < 1e-14);
    let (spec, brute) = spec_on(&rect(0, 0, 3, 3), 8, 1.0, random_bc(8), 0.9);
    assert_eq!(
        magnetization_sum(&spec, None, &SiteSet::new()).unwrap(),
        0.0
    );
    let row = rect(0, 1, 3, 1);
    let m = magnetization_sum(&spec, None, &row).unwrap();
    let d = brute.distribution(0.9);
    let want: f64 = row
        .iter()
        .map(|s| {
            let i = brute.index(s);
            d.iter().map(|(c, p)| c[i] as f64 * p).sum::<f64>()
        })
        .sum();
    assert!(rel_close(m, want, 1e-12));
}

#[test]
fn magnetization_on_strip_matches_enumeration() {
    let (spec, _) = spec_on(&rect(0, 0, 4, 5), 21, 1.0, random_bc(21), 0.8);
    let win = rect(1, 1, 2, 3);
    let ex = ExactGibbs::new(&spec).unwrap();
    let m = ex.mean_spins(None, &|_| 0.0).unwrap();
    let want: f64 = win
        .iter()
        .map(|s| m[spec.graph().index_of(s).unwrap()])
        .sum();
    let got = magnetization_sum(&spec, None, &win).unwrap();
    assert!(rel_close(got, want, 1e-12));
}

#[test]
fn derivative_check_examples() {
    let (spec, _) = spec_on(&rect(-1, -1, 3, 3), 5, 1.0, random_bc(5), 0.5);
    let zone = rect(-1, 0, 3, 1);
    let zero = free_energy_derivative_check(&spec, &zone, 0.0, 0.3, None).unwrap();
    assert_eq!(zero.analytic, 0.0);
    assert!(zero.finite_difference.abs() < 1e-9);
    let c = free_energy_derivative_check(&spec, &zone, 0.1, 0.5, None).unwrap();
    assert!(c.relative_error() <= 1e-6, "{c:?}");
    let (sym, _) = spec_on(&rect(-1, -1, 3, 3), 0, 0.0, |_| 0, 0.5);
    let s = free_energy_derivative_check(&sym, &zone, 0.1, 0.0, None).unwrap();
    assert!(s.analytic.abs() < 1e-12 && s.finite_difference.abs() < 1e-6);
    let pred = ConfigPredicate::new("corner-plus", Monotonicity::Increasing, |s: &[i8]| {
        s[0] == 1
    });
    let r = free_energy_derivative_check(&spec, &zone, 0.1, 0.5, Some(&pred)).unwrap();
    assert!(r.relative_error() <= 1e-6, "{r:?}");
}

#[test]
fn large_beta_argmax_is_ground_state() {
    for seed in 0..20 {
        let (spec, _) = spec_on(&rect(-1, -1, 3, 3), 100 + seed, 1.5, random_bc(seed), 50.0);
        let ex = ExactGibbs::new(&spec).unwrap();
        let gs = ground_state_values(spec.graph(), spec.field(), spec.boundary()).unwrap();
        if gs.degenerate {
            continue;
        }
        assert_eq!(ex.spins_of(ex.argmax()), gs.upper.spins);
    }
}

fn ring_predicates() -> (ConfigPredicate, ConfigPredicate) {
    let plus = ConfigPredicate::new("ring-plus", Monotonicity::Increasing, |s: &[i8]| {
        [0, 1, 2, 3, 5, 6, 7, 8].iter().all(|&i| s[i] == 1)
    });
    let minus = ConfigPredicate::new("ring-minus", Monotonicity::Decreasing, |s: &[i8]| {
        [0, 1, 2, 3, 5, 6, 7, 8].iter().all(|&i| s[i] == -1)
    });
    (plus, minus)
}

#[test]
fn predicate_spot_check() {
    let (p, m) = ring_predicates();
    assert!(p.spot_check(9, 200, 1));
    assert!(m.spot_check(9, 200, 2));
    let wrong = ConfigPredicate::new("mislabelled", Monotonicity::Increasing, |s: &[i8]| {
        s[0] == -1
    });
    assert!(!wrong.spot_check(9, 200, 3));
}

#[test]
fn fkg_boundary_monotonicity_and_step_bound() {
    let (op, om) = ring_predicates();
    for seed in 0..10 {
        for beta in [0.3, 1.0, 3.0] {
            let (spec, _) = spec_on(&rect(-1, -1, 3, 3), seed, 1.0, random_bc(seed), beta);
            let g = spec.graph().clone();
            let minus = spec.boundary().to_vec();
            let plus: Vec<i8> = minus
                .iter()
                .enumerate()
                .map(|(k, &t)| if k % 3 == 0 { 1 } else { t })
                .collect();
            let sp = spec.with_boundary(plus.clone()).unwrap();
            let ep = ExactGibbs::new(&sp).unwrap();
            let em = ExactGibbs::new(&spec).unwrap();
            let z = |_| 0.0;
            let a = ep.mean_spins(Some(&ep.mask(&op)), &z).unwrap();
            let b = ep.mean_spins(None, &z).unwrap();
            let c = em.mean_spins(None, &z).unwrap();
            let d = em.mean_spins(Some(&em.mask(&om)), &z).unwrap();
            for i in 0..g.len() {
                assert!(a[i] >= b[i] - 1e-12 && b[i] >= c[i] - 1e-12 && c[i] >= d[i] - 1e-12);
            }
            let diff = plus.iter().zip(&minus).filter(|(p, m)| p != m).count() as f64;
            let gap = ep.free_energy(None).unwrap() - em.free_energy(None).unwrap();
            assert!(gap.abs() <= 8.0 * diff + 1e-9);
        }
    }
}

#[test]
fn gauss_legendre_is_exact_to_degree_31() {
    let (x, w) = gauss_legendre(16);
    assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    assert!(x.windows(2).all(|p| p[0] < p[1]));
    assert!((x[0] + 0.989_400_934_991_649_9).abs() < 1e-14);
    for k in 0..32 {
        let got: f64 = gl16_unit().iter().map(|&(t, w)| w * t.powi(k)).sum();
        assert!((got - 1.0 / (k as f64 + 1.0)).abs() < 1e-13, "degree {k}");
    }
    let v = integrate_unit(|t| Ok::<_, ()>(t.exp())).unwrap();
    assert!((v - (std::f64::consts::E - 1.0)).abs() < 1e-14);
}

#[test]
fn two_zone_audit_trivial_case() {
    let (spec, _) = spec_on(&rect(-1, -1, 3, 3), 2, 1.0, random_bc(2), 1.0);
    let full_inc = ConfigPredicate::new("full", Monotonicity::Increasing, |_| true);
    let full_dec = ConfigPredicate::new("full", Monotonicity::Decreasing, |_| true);
    let zone: SiteSet = [Site::ORIGIN].into_iter().collect();
    let r = TwoZoneAudit {
        spec: &spec,
        tau_plus: spec.boundary(),
        tau_minus: spec.boundary(),
        omega_plus: &full_inc,
        omega_minus: &full_dec,
        delta_outer: 0.2,
        delta: 0.5,
        zone: &zone,
        window: &zone,
    }
    .run()
    .unwrap();
    assert_eq!(r.rhs, 0.0);
    assert!(r.lhs.abs() < 1e-12 && r.holds && r.ordering_holds);
}

#[test]
fn two_zone_audit_random_instances() {
    let region = rect(-2, -2, 4, 4);
    let outer: Vec<usize> = {
        let g = RegionGraph::new(&region);
        (0..16)
            .filter(|&i| {
                let s = g.site(i);
                s.x == -2 || s.x == 1 || s.y == -2 || s.y == 1
            })
            .collect()
    };
    let o1 = outer.clone();
    let o2 = outer.clone();
    let op = ConfigPredicate::new("outer-plus", Monotonicity::Increasing, move |s: &[i8]| {
        o1.iter().filter(|&&i| s[i] == 1).count() >= 9
    });
    let om = ConfigPredicate::new(
        "outer-minus",
        Monotonicity::Decreasing,
        move |s: &[i8]| o2.iter().filter(|&&i| s[i] == -1).count() >= 9,
    );
    let zone = rect(-1, -1, 2, 2);
    let window: SiteSet = [Site::new(0, 0), Site::new(-1, -1)].into_iter().collect();
    let mut violations = 0;
    for k in 0..50u64 {
        for beta in [0.3, 1.0, 3.0] {
            let (spec, _) = spec_on(&region, 1000 + k, 1.0, random_bc(k), beta);
            let mut rng = KeyedRng::new(k);
            let minus = spec.boundary().to_vec();
            let plus: Vec<i8> = minus
                .iter()
                .map(|&t| if rng.bernoulli(0.3) { 1 } else { t })
                .collect();
            let r = TwoZoneAudit {
                spec: &spec,
                tau_plus: &plus,
                tau_minus: &minus,
                omega_plus: &op,
                omega_minus: &om,
                delta_outer: 0.3,
                delta: 0.4,
                zone: &zone,
                window: &window,
            }
            .run()
            .unwrap();
            let diff = plus.iter().zip(&minus).filter(|(p, m)| p != m).count() as f64;
            assert!(r.ordering_holds);
            assert!(r.step_change <= 16.0 * diff + 1e-9);
            if !r.holds {
                violations += 1;
            }
        }
    }
    assert_eq!(violations, 0);
}

#[test]
fn perturbed_gap_identity() {
    let (spec, _) = spec_on(&rect(-1, -1, 4, 3), 9, 1.0, random_bc(9), 0.8);
    let minus = spec.boundary().to_vec();
    let plus: Vec<i8> = minus.iter().map(|_| 1).collect();
    let zone = rect(-1, -1, 4, 1);
    let gap = perturbed_gap(&spec, &plus, &minus, &zone, 0.6).unwrap();
    assert!((gap.direct - gap.integral).abs() < 1e-9, "{gap:?}");
    assert!(gap.direct >= -1e-12);
}

#[test]
fn boundary_region_box_matches_rect_helper() {
    let b = BoxRegion::centered(1);
    assert_eq!(b.to_set(), rect(-1, -1, 3, 3));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn raising_inputs_raises_every_mean_spin(seed in 0u64..10_000, beta in 0.05f64..3.0, bump in 0.0f64..1.0) {
        let (spec, _) = spec_on(&rect(0, 0, 3, 3), seed, 1.0, random_bc(seed), beta);
        let tau_up: Vec<i8> = spec.boundary().iter().enumerate().map(|(k, &t)| if k % 2 == 0 { 1 } else { t }).collect();
        let h_up: Vec<f64> = spec.field().iter().enumerate().map(|(k, &h)| if k % 3 == 0 { h + bump } else { h }).collect();
        let up = GibbsSpec::new(spec.graph().clone(), tau_up, h_up, beta).unwrap();
        prop_assert!(spec.precedes(&up));
        let a = ExactGibbs::new(&spec).unwrap().mean_spins(None, &|_| 0.0).unwrap();
        let b = ExactGibbs::new(&up).unwrap().mean_spins(None, &|_| 0.0).unwrap();
        for i in 0..a.len() {
            prop_assert!(b[i] >= a[i] - 1e-12);
        }
    }

    #[test]
    fn derivative_matches_finite_difference(seed in 0u64..10_000, t in 0.0f64..1.0, delta in 0.0f64..0.5) {
        let (spec, _) = spec_on(&rect(0, 0, 3, 3), seed, 1.0, random_bc(seed), 0.5);
        let zone = rect(0, 0, 3, 2);
        let c = free_energy_derivative_check(&spec, &zone, delta, t, None).unwrap();
        prop_assert!(c.relative_error() <= 1e-6);
    }
}
