use std::sync::Arc;

use rfim_core::cftp::CftpOptions;
use rfim_core::couplings::audit::{
    at_step, disagreement_mask, percolation_property_holds, random_tuples, replay_trace,
    stopping_set_conditional_audit, table_one_patterns_hold, HatSetting,
};
use rfim_core::couplings::policy::{
    BreadthFirstPolicy, FixedOrderPolicy, MultiPhaseParams, RasterPolicy,
};
use rfim_core::couplings::{
    annulus_shifted, breadth_first_coupling, hat_transform, multi_phase_exploration,
    AdaptiveCoupler, BoundaryRow, CouplingMode, CouplingTrace, Family,
};
use rfim_core::field::standard_normal_at;
use rfim_core::gibbs::{ExactGibbs, GibbsSpec};
use rfim_core::ground_state::uniform_boundary;
use rfim_core::stats::chi_square_gof;
use rfim_core::{BoxRegion, LabError, RegionGraph, Site, SiteSet};

fn box_graph(n: u32) -> Arc<RegionGraph> {
    Arc::new(RegionGraph::from_box(&BoxRegion::centered(n)))
}

fn field(g: &RegionGraph, seed: u64, eps: f64) -> Vec<f64> {
    g.sites()
        .iter()
        .map(|&s| eps * standard_normal_at(seed, s))
        .collect()
}

fn state_of(c: &[i8]) -> usize {
    ExactGibbs::<f64>::state_of(c)
}

fn marginal_p(spec: &GibbsSpec<f64>, draws: &[Vec<i8>]) -> f64 {
    let ex = ExactGibbs::new(spec).unwrap();
    let mut counts = vec![0u64; ex.states()];
    for d in draws {
        counts[state_of(d)] += 1;
    }
    let probs: Vec<f64> = (0..ex.states()).map(|s| ex.probability(s)).collect();
    chi_square_gof(&counts, &probs).unwrap().p_value
}

#[test]
fn single_chain_is_exact_sequential_sampling() {
    let g = box_graph(1);
    let spec = GibbsSpec::new(g.clone(), uniform_boundary(&g, 1), field(&g, 3, 1.0), 0.8).unwrap();
    let fam = Family::new(vec![spec.clone()]).unwrap();
    let mut coupler = AdaptiveCoupler::new(&fam, CouplingMode::Exact).unwrap();
    let draws: Vec<Vec<i8>> = (0..40_000)
        .map(|s| {
            coupler
                .run(&mut RasterPolicy::new(), s)
                .unwrap()
                .configs
                .remove(0)
        })
        .collect();
    assert!(marginal_p(&spec, &draws) > 0.001);
}

#[test]
fn plus_minus_marginals_and_order() {
    let g = box_graph(1);
    let fam = Family::plus_minus(g.clone(), field(&g, 4, 1.0), 1.0).unwrap();
    assert_eq!(fam.order(), &[(1, 0)]);
    let mut coupler = AdaptiveCoupler::new(&fam, CouplingMode::Exact).unwrap();
    let mut plus = Vec::new();
    let mut minus = Vec::new();
    for s in 0..40_000 {
        let out = coupler
            .run(
                &mut FixedOrderPolicy::new(vec![4, 0, 8, 2, 6, 1, 3, 5, 7], 2),
                s,
            )
            .unwrap();
        assert!(fam.admissible(&out.configs));
        plus.push(out.configs[0].clone());
        minus.push(out.configs[1].clone());
    }
    assert!(marginal_p(&fam.specs()[0], &plus) > 0.001);
    assert!(marginal_p(&fam.specs()[1], &minus) > 0.001);
}

#[test]
fn equal_family_gives_identical_configurations() {
    let g = box_graph(1);
    let h = field(&g, 5, 1.0);
    let a = GibbsSpec::new(g.clone(), uniform_boundary(&g, 1), h.clone(), 0.7).unwrap();
    let fam = Family::new(vec![a.clone(), a]).unwrap();
    for mode in [
        CouplingMode::Exact,
        CouplingMode::LockstepCftp,
        CouplingMode::Auto,
    ] {
        let mut coupler = AdaptiveCoupler::new(&fam, mode).unwrap();
        for s in 0..200 {
            let out = coupler.run(&mut RasterPolicy::new(), s).unwrap();
            assert_eq!(out.configs[0], out.configs[1]);
        }
    }
}

#[test]
fn lockstep_and_auto_modes_have_exact_marginals() {
    let g = box_graph(1);
    let fam = Family::plus_minus(g.clone(), field(&g, 6, 1.0), 0.6).unwrap();
    for mode in [CouplingMode::LockstepCftp, CouplingMode::Auto] {
        let mut coupler = AdaptiveCoupler::new(&fam, mode).unwrap();
        let mut plus = Vec::new();
        for s in 0..20_000 {
            let out = coupler
                .run(&mut FixedOrderPolicy::new((0..9).collect(), 4), s)
                .unwrap();
            assert!(fam.admissible(&out.configs));
            plus.push(out.configs[0].clone());
        }
        assert!(marginal_p(&fam.specs()[0], &plus) > 0.001, "{mode:?}");
    }
}

#[test]
fn exact_mode_rejects_large_regions() {
    let g = box_graph(2);
    let fam = Family::plus_minus(g.clone(), field(&g, 1, 1.0), 1.0).unwrap();
    assert!(matches!(
        AdaptiveCoupler::new(&fam, CouplingMode::Exact),
        Err(LabError::Capacity(_))
    ));
}

#[test]
fn four_chain_patterns_are_admissible_rows() {
    let g = box_graph(1);
    let h = field(&g, 7, 1.0);
    let ht = annulus_shifted(&g, &h, 1, 0.5);
    let fam = Family::four(g, h, ht, 1.0).unwrap();
    let mut coupler = AdaptiveCoupler::new(&fam, CouplingMode::Exact).unwrap();
    for s in 0..2000 {
        let out = coupler.run(&mut RasterPolicy::new(), s).unwrap();
        assert!(fam.admissible(&out.configs));
        assert!(table_one_patterns_hold(&out.configs));
    }
}

#[test]
fn trace_roundtrip_and_replay() {
    let g = box_graph(1);
    let fam = Family::plus_minus(g.clone(), field(&g, 8, 1.0), 1.0).unwrap();
    let out = AdaptiveCoupler::new(&fam, CouplingMode::Exact)
        .unwrap()
        .run(&mut BreadthFirstPolicy::plus_minus(1), 9)
        .unwrap();
    let json = out.trace.to_json().unwrap();
    let back = CouplingTrace::from_json(&json).unwrap();
    assert_eq!(back, out.trace);
    assert_eq!(back.final_spins(), out.configs);
    let rep = replay_trace(&back);
    assert!(rep.ok(), "{rep:?}");
    let bad = json.replace("trace_v1", "trace_v0");
    assert!(CouplingTrace::from_json(&bad).is_err());
}

#[test]
fn breadth_first_percolation_property() {
    let g = box_graph(2);
    let mut disagreeing = 0;
    for s in 0..300u64 {
        let h = field(&g, 100 + s, 1.0);
        let out = breadth_first_coupling(2, &h, 1.0, CouplingMode::Auto, s).unwrap();
        let c = disagreement_mask(&out.configs, &[(0, 1)]);
        if c.iter().any(|x| *x) {
            disagreeing += 1;
        }
        assert!(out.configs[0]
            .iter()
            .zip(&out.configs[1])
            .all(|(p, m)| p >= m));
        for &o in g.sites() {
            assert!(percolation_property_holds(&g, &c, o));
        }
        assert!(replay_trace(&out.trace).ok());
    }
    assert!(disagreeing > 0);
}

#[test]
fn percolation_check_detects_isolated_disagreement() {
    let g = box_graph(2);
    let mut c = vec![false; g.len()];
    c[g.index_of(Site::ORIGIN).unwrap()] = true;
    assert!(!percolation_property_holds(&g, &c, Site::ORIGIN));
    for x in 0..=2 {
        c[g.index_of(Site::new(x, 0)).unwrap()] = true;
    }
    assert!(percolation_property_holds(&g, &c, Site::ORIGIN));
}

fn n8_params() -> MultiPhaseParams {
    MultiPhaseParams::from_exponents(8, 0.9, 1.5).with_overrides(Some(6), Some(1), Some(1))
}

#[test]
fn multi_phase_parameter_validation() {
    let raw = MultiPhaseParams::from_exponents(8, 0.9, 1.5);
    assert_eq!((raw.step, raw.phases, raw.k_max), (6, 0, 16));
    assert!(raw.with_overrides(None, Some(1), None).validate().is_err());
    assert!(n8_params().validate().is_ok());
    let p = MultiPhaseParams::from_exponents(1024, 0.9, 1.5);
    assert_eq!(p.step, 512);
    assert_eq!(p.phases, 0);
}

#[test]
fn multi_phase_high_field_stops_at_first_stage() {
    let g = box_graph(8);
    let h = vec![10.0; g.len()];
    let out =
        multi_phase_exploration(n8_params(), &h, 0.1, 1.0, CouplingMode::LockstepCftp, 1).unwrap();
    let first = &out.trace.stages[0];
    assert_eq!((first.phase, first.stage, first.empty), (1, 1, true));
    assert!(out.configs.iter().all(|c| c.iter().all(|&v| v == 1)));
}

#[test]
fn multi_phase_frontiers_replay() {
    let g = box_graph(8);
    let mut nontrivial = 0;
    for s in 0..6u64 {
        let h = field(&g, 40 + s, 0.6);
        let out =
            multi_phase_exploration(n8_params(), &h, 0.05, 0.6, CouplingMode::LockstepCftp, s)
                .unwrap();
        let rep = replay_trace(&out.trace);
        assert!(rep.ok(), "{rep:?}");
        assert!(out
            .trace
            .stages
            .iter()
            .all(|st| !(st.empty && st.reached_inner)));
        if out.trace.stages.iter().any(|st| !st.frontier.is_empty()) {
            nontrivial += 1;
        }
        let fam_ok = out.configs[1]
            .iter()
            .zip(&out.configs[0])
            .all(|(m, p)| m <= p)
            && out.configs[0]
                .iter()
                .zip(&out.configs[2])
                .all(|(a, b)| a <= b);
        assert!(fam_ok);
        assert!(table_one_patterns_hold(&out.configs));
    }
    assert!(nontrivial > 0);
}

#[test]
fn hat_table_reproduction() {
    let want = [
        ([-1, -1, -1, -1], [-1, -1, -1, -1]),
        ([-1, -1, 1, -1], [-1, -1, -1, -1]),
        ([-1, -1, 1, 1], [1, 1, 1, 1]),
        ([1, 1, 1, 1], [1, 1, 1, 1]),
        ([1, -1, 1, 1], [1, 1, 1, 1]),
        ([1, -1, 1, -1], [1, -1, 1, -1]),
    ];
    let hat = hat_transform(&want.iter().map(|p| p.0).collect::<Vec<_>>()).unwrap();
    for (k, (_, out)) in want.iter().enumerate() {
        assert_eq!(hat.tuples[k], *out);
    }
    assert_eq!(hat.rows, BoundaryRow::ALL.to_vec());
    assert!(matches!(
        hat_transform(&[[1, 1, -1, -1]]),
        Err(LabError::Inadmissible(_))
    ));
    for r in BoundaryRow::ALL {
        let [p, m, tp, tm] = r.tuple();
        let [hp, hm, htp, htm] = r.hat();
        assert!(
            hp >= hm
                && hm >= m
                && tp >= htp
                && htp >= htm
                && htp == hp
                && hp >= p
                && htm == hm
                && hm == tm
        );
        assert_eq!(
            BoundaryRow::is_full_disagreement(r.tuple()),
            BoundaryRow::is_full_disagreement(r.hat())
        );
    }
}

#[test]
fn hat_inclusion_and_bounds_on_small_region() {
    let g = box_graph(1);
    for k in 0..4u64 {
        let setting = HatSetting {
            graph: g.clone(),
            h: field(&g, 60 + k, 1.0),
            zone: g.site_set().filter(|s| s != Site::ORIGIN),
            delta: 0.4,
            beta: 1.0,
            tuples: random_tuples(g.boundary_sites().len(), k),
        };
        let rep = setting.audit(1500, k, CftpOptions::default()).unwrap();
        assert!(rep.passes(), "{rep:?}");
        assert!((rep.middle - rep.middle_integral).abs() < 1e-8);
    }
}

#[test]
fn hat_corollary_without_full_disagreement() {
    let g = box_graph(1);
    let tuples: Vec<[i8; 4]> = (0..12).map(|i| BoundaryRow::ALL[i % 5].tuple()).collect();
    let setting = HatSetting {
        graph: g.clone(),
        h: field(&g, 3, 0.5),
        zone: g.site_set(),
        delta: 0.3,
        beta: 1.0,
        tuples,
    };
    let rep = setting.audit(500, 1, CftpOptions::default()).unwrap();
    assert_eq!(rep.full_disagreements_on_boundary, 0);
    assert_eq!(rep.corollary_violations, 0);
    assert!(rep.middle.abs() < 1e-9 && rep.lower == 0.0);
}

#[test]
fn stopping_set_audit_rules() {
    let g = box_graph(1);
    let fam = Family::plus_minus(g.clone(), field(&g, 11, 1.0), 1.0).unwrap();
    let mut coupler = AdaptiveCoupler::new(&fam, CouplingMode::Exact).unwrap();
    let runs: Vec<_> = (0..60_000)
        .map(|s| coupler.run(&mut RasterPolicy::new(), s).unwrap())
        .collect();
    let empty = stopping_set_conditional_audit(&fam, &runs, &at_step(0), 500, 0.001).unwrap();
    assert_eq!(empty.bins, 1);
    assert!(empty.passes(), "{empty:?}");
    let all = stopping_set_conditional_audit(&fam, &runs, &at_step(9), 500, 0.001).unwrap();
    assert!(all.vacuous);
    let row = stopping_set_conditional_audit(&fam, &runs, &at_step(3), 500, 0.001).unwrap();
    assert!(row.tested_bins > 0 && row.passes(), "{row:?}");
    let _: SiteSet = runs[0].trace.explored_after(3);
}
