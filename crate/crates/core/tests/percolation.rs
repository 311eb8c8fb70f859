use std::collections::HashMap;

use proptest::prelude::*;
use rfim_core::field::sample_field;
use rfim_core::lattice::{intrinsic_distance, Enlargement};
use rfim_core::percolation::lemmas::{percolation_to_boundary, perturbation_incompatibility};
use rfim_core::percolation::scan::{coarse_grain_scan, OpenDefinition, ScanParams};
use rfim_core::percolation::{
    animal_sizes, cross_annulus_easy, cross_annulus_hard, cross_rectangle, duality_holds,
    largest_lattice_animal, outermost_plus_contour, BoxGrid, CrossingMode, CrossingQuery,
    CrossingShape,
};
use rfim_core::rng::KeyedRng;
use rfim_core::{Annulus, BoxRegion, Distance, LabError, Rectangle, Site, SiteSet};

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra] = rb;
        }
    }
}

fn bitmap(sites: impl Iterator<Item = Site>, p: f64, seed: u64) -> SiteSet {
    let mut rng = KeyedRng::new(seed);
    sites.filter(|_| rng.bernoulli(p)).collect()
}

/// Union-find labels of `set` under the given neighbor offsets.
fn labels(set: &SiteSet, offsets: &[(i32, i32)]) -> HashMap<Site, usize> {
    let sites = set.to_vec();
    let index: HashMap<Site, usize> = sites.iter().enumerate().map(|(i, &s)| (s, i)).collect();
    let mut uf = UnionFind::new(sites.len());
    for (i, s) in sites.iter().enumerate() {
        for &(dx, dy) in offsets {
            if let Some(&j) = index.get(&Site::new(s.x + dx, s.y + dy)) {
                uf.union(i, j);
            }
        }
    }
    sites
        .iter()
        .enumerate()
        .map(|(i, &s)| (s, uf.find(i)))
        .collect()
}

const FOUR: [(i32, i32); 2] = [(1, 0), (0, 1)];
const EIGHT: [(i32, i32); 4] = [(1, 0), (0, 1), (1, 1), (1, -1)];

#[test]
fn rectangle_trivial_carriers() {
    let r = Rectangle::axis_aligned(0, 0, 19, 3);
    let all: SiteSet = r.sites().into_iter().collect();
    assert!(cross_rectangle(&r, &all).unwrap());
    assert!(!cross_rectangle(&r, &SiteSet::new()).unwrap());
}

#[test]
fn rectangle_degenerate_is_an_error() {
    let r = Rectangle::axis_aligned(0, 0, 19, 0);
    assert!(matches!(
        cross_rectangle(&r, &SiteSet::new()),
        Err(LabError::Geometry(_))
    ));
}

#[test]
fn rectangle_matches_union_find_oracle() {
    let r = Rectangle::axis_aligned(-10, -2, 9, 1);
    let mut positives = 0;
    for seed in 0..400 {
        let carrier = bitmap(r.sites().into_iter(), 0.8, seed);
        let lab = labels(&carrier, &FOUR);
        let left: Vec<usize> = lab
            .iter()
            .filter(|(s, _)| s.x == -10)
            .map(|p| *p.1)
            .collect();
        let expect = lab.iter().any(|(s, l)| s.x == 9 && left.contains(l));
        let got = cross_rectangle(&r, &carrier).unwrap();
        assert_eq!(got, expect, "seed {seed}");
        positives += got as usize;
    }
    assert!(positives > 20 && positives < 380);
}

#[test]
fn annulus_trivial_carriers() {
    let a = Annulus::centered(6, 2).unwrap();
    let full = a.to_set();
    assert!(cross_annulus_easy(&a, &full).unwrap());
    assert!(cross_annulus_hard(&a, &full).unwrap());
    let ring: SiteSet = a.sites().filter(|s| s.linf(Site::ORIGIN) == 4).collect();
    assert!(cross_annulus_hard(&a, &ring).unwrap());
    assert!(!cross_annulus_easy(&a, &ring).unwrap());
    let mut cut = ring.clone();
    cut.remove(Site::new(4, 0));
    assert!(!cross_annulus_hard(&a, &cut).unwrap());
}

#[test]
fn diagonal_circuit_counts_as_hard() {
    let a = Annulus::centered(3, 0).unwrap();
    let diamond: SiteSet = a.sites().filter(|s| s.l1(Site::ORIGIN) == 2).collect();
    assert!(cross_annulus_hard(&a, &diamond).unwrap());
    assert!(!cross_annulus_easy(&a, &SiteSet::new()).unwrap());
}

#[test]
fn annulus_geometry_errors() {
    let bad = Annulus {
        outer: BoxRegion::centered(3),
        inner: BoxRegion::centered(3),
    };
    assert!(cross_annulus_easy(&bad, &SiteSet::new()).is_err());
    let q = CrossingQuery {
        shape: CrossingShape::Annulus(Annulus::centered(3, 1).unwrap()),
        carrier: SiteSet::new(),
        mode: CrossingMode::RectangleShortSides,
    };
    assert!(q.evaluate().is_err());
}

/// Plane flooding: the carrier separates when no 4-path of non-carrier sites joins the
/// inner box to the outside of the outer box.
fn separates_oracle(a: &Annulus, carrier: &SiteSet) -> bool {
    let r = a.outer.radius as i32 + 1;
    let open =
        |s: Site| s.linf(Site::ORIGIN) as i32 <= r && !(a.contains(s) && carrier.contains(s));
    let mut seen = SiteSet::new();
    let mut stack = vec![Site::ORIGIN];
    seen.insert(Site::ORIGIN);
    while let Some(s) = stack.pop() {
        if s.linf(Site::ORIGIN) as i32 == r {
            return false;
        }
        for n in s.neighbors4() {
            if open(n) && seen.insert(n) {
                stack.push(n);
            }
        }
    }
    true
}

#[test]
fn hard_crossing_exhaustive_on_small_annulus() {
    let a = Annulus::centered(2, 1).unwrap();
    let sites: Vec<Site> = a.sites().collect();
    assert_eq!(sites.len(), 16);
    for mask in 0u32..(1 << 16) {
        let carrier: SiteSet = sites
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1)
            .map(|p| *p.1)
            .collect();
        assert_eq!(
            cross_annulus_hard(&a, &carrier).unwrap(),
            separates_oracle(&a, &carrier),
            "mask {mask:#x}"
        );
    }
}

#[test]
fn duality_on_random_bitmaps() {
    let a = Annulus::centered(16, 8).unwrap();
    let mut hard = 0;
    for seed in 0..500u64 {
        let p = 0.45 + 0.3 * (seed % 7) as f64 / 6.0;
        let carrier = bitmap(a.sites(), p, seed);
        assert!(duality_holds(&a, &carrier).unwrap(), "seed {seed}");
        hard += cross_annulus_hard(&a, &carrier).unwrap() as usize;
    }
    assert!(hard > 0 && hard < 500);
}

fn outside_flood(a: &Annulus, plus: &SiteSet) -> SiteSet {
    let r = a.outer.radius as i32 + 1;
    let mut seen = SiteSet::new();
    let mut stack: Vec<Site> = BoxRegion::centered(r as u32)
        .sites()
        .filter(|s| s.linf(Site::ORIGIN) as i32 == r)
        .collect();
    for &s in &stack {
        seen.insert(s);
    }
    while let Some(s) = stack.pop() {
        for n in s.neighbors4() {
            if a.contains(n) && !plus.contains(n) && seen.insert(n) {
                stack.push(n);
            }
        }
    }
    seen
}

/// Union-find components of the plus sites; the surrounding one facing the exterior flood.
fn contour_oracle(a: &Annulus, plus: &SiteSet) -> Option<Vec<Site>> {
    let open: SiteSet = a.sites().filter(|s| plus.contains(*s)).collect();
    let ext = outside_flood(a, &open);
    let lab = labels(&open, &EIGHT);
    let facing = |s: &Site| s.neighbors4().iter().any(|n| ext.contains(*n));
    let mut groups: HashMap<usize, Vec<Site>> = HashMap::new();
    for (s, l) in &lab {
        groups.entry(*l).or_default().push(*s);
    }
    for comp in groups.values() {
        let set: SiteSet = comp.iter().copied().collect();
        if separates_oracle(a, &set) && comp.iter().any(facing) {
            let mut out: Vec<Site> = comp.iter().copied().filter(facing).collect();
            out.sort_by_key(|s| (s.y, s.x));
            return Some(out);
        }
    }
    None
}

#[test]
fn contour_trivial_configurations() {
    let a = Annulus::centered(6, 2).unwrap();
    let all = a.to_set();
    let c = outermost_plus_contour(&all, &a).unwrap();
    let ring: Vec<Site> = a.outer_layer().iter().collect();
    assert_eq!(c.sites.len(), ring.len());
    assert!(ring.iter().all(|s| c.sites.contains(s)));
    assert_eq!(c.interior.len(), a.len() - ring.len());
    assert!(outermost_plus_contour(&SiteSet::new(), &a).is_none());
}

#[test]
fn contour_matches_oracle_and_ignores_interior() {
    let a = Annulus::centered(12, 3).unwrap();
    let mut found = 0;
    for seed in 0..200u64 {
        let plus = bitmap(a.sites(), 0.55 + 0.1 * (seed % 3) as f64, seed);
        let got = outermost_plus_contour(&plus, &a);
        assert_eq!(
            got.as_ref().map(|c| c.sites.clone()),
            contour_oracle(&a, &plus),
            "seed {seed}"
        );
        let Some(c) = got else { continue };
        found += 1;
        let wall: SiteSet = c.sites.iter().copied().collect();
        assert!(cross_annulus_hard(&a, &wall).unwrap());
        let inside: SiteSet = c.interior.iter().copied().collect();
        for k in 0..5u64 {
            let noise = bitmap(a.sites(), 0.5, 1000 * seed + k);
            let mixed: SiteSet = a
                .sites()
                .filter(|s| {
                    if inside.contains(*s) {
                        noise.contains(*s)
                    } else {
                        plus.contains(*s)
                    }
                })
                .collect();
            assert_eq!(
                outermost_plus_contour(&mixed, &a).unwrap().sites,
                c.sites,
                "seed {seed} k {k}"
            );
        }
    }
    assert!(found > 20);
}

#[test]
fn animals_trivial_grids() {
    let mut g = BoxGrid::new(16, 4).unwrap();
    assert_eq!(g.per_side, 8);
    assert_eq!(largest_lattice_animal(&g), 0);
    g.open.iter_mut().for_each(|o| *o = true);
    assert_eq!(largest_lattice_animal(&g), 64);
}

#[test]
fn box_grid_tiles_from_the_lower_left() {
    let g = BoxGrid::new(8, 4).unwrap();
    assert_eq!(g.per_side, 4);
    let mut cover = SiteSet::new();
    for b in g.blocks() {
        for s in b.sites() {
            assert!(BoxRegion::centered(8).contains(s));
            assert!(cover.insert(s), "boxes overlap");
        }
    }
    assert_eq!(cover.len(), 16 * 16);
    assert_eq!(g.block(0).x0, -8);
    assert!(BoxGrid::new(2, 8).is_err());
}

#[test]
fn animals_match_union_find() {
    for seed in 0..200u64 {
        let mut g = BoxGrid::new(40, 3).unwrap();
        let mut rng = KeyedRng::new(seed);
        let p = 0.1 + 0.5 * (seed % 5) as f64 / 4.0;
        g.open.iter_mut().for_each(|o| *o = rng.bernoulli(p));
        let w = g.per_side as i32;
        let set: SiteSet = (0..g.len())
            .filter(|&k| g.open[k])
            .map(|k| Site::new(k as i32 % w, k as i32 / w))
            .collect();
        let lab = labels(&set, &EIGHT);
        let mut counts: HashMap<usize, usize> = HashMap::new();
        for l in lab.values() {
            *counts.entry(*l).or_default() += 1;
        }
        let mut expect: Vec<usize> = counts.into_values().collect();
        expect.sort_unstable_by(|a, b| b.cmp(a));
        assert_eq!(animal_sizes(&g), expect);
    }
}

#[test]
fn scan_always_false_and_tail() {
    let params = |open| ScanParams {
        n: 16,
        side: 4,
        open,
        enlargement: Enlargement::Doubled,
        epsilon: 1.0,
    };
    let seeds: Vec<u64> = (0..12).collect();
    let r = coarse_grain_scan(&params(OpenDefinition::AlwaysFalse), &seeds).unwrap();
    assert!(r.instances.iter().all(|i| i.largest == 0));
    assert_eq!(r.summary.p_hat, 0.0);
    let r = coarse_grain_scan(&params(OpenDefinition::NonemptyDisagreement), &seeds).unwrap();
    assert!(r.summary.p_hat > 0.0);
    assert!(r.summary.p_lo <= r.summary.p_hat && r.summary.p_hat <= r.summary.p_hi);
    assert!(r.summary.tail.windows(2).all(|w| w[0].1 >= w[1].1));
    let d = coarse_grain_scan(
        &params(OpenDefinition::DistanceBased { alpha: 1.5 }),
        &seeds,
    )
    .unwrap();
    assert!(d.summary.p_hat <= 1.0);
    let again = coarse_grain_scan(&params(OpenDefinition::NonemptyDisagreement), &seeds).unwrap();
    assert_eq!(again, r);
}

#[test]
fn scan_high_disorder_opens_few_boxes() {
    let p = ScanParams {
        n: 16,
        side: 4,
        open: OpenDefinition::NonemptyDisagreement,
        enlargement: Enlargement::Doubled,
        epsilon: 100.0,
    };
    let r = coarse_grain_scan(&p, &[1, 2, 3]).unwrap();
    assert_eq!(r.summary.open_boxes, 0);
}

#[test]
fn scan_geometry_errors() {
    let p = ScanParams {
        n: 4,
        side: 16,
        open: OpenDefinition::NonemptyDisagreement,
        enlargement: Enlargement::Big,
        epsilon: 1.0,
    };
    assert!(matches!(
        coarse_grain_scan(&p, &[0]),
        Err(LabError::Geometry(_))
    ));
    let odd = ScanParams { n: 8, side: 3, ..p };
    assert!(matches!(
        coarse_grain_scan(&odd, &[0]),
        Err(LabError::Geometry(_))
    ));
}

#[test]
fn incompatibility_holds_and_edges() {
    for seed in 0..40u64 {
        let f = sample_field(BoxRegion::centered(8), 1.0, seed).unwrap();
        for (delta, k) in [(0.05, 2.0), (0.5, 2.0), (0.01, 1.0), (0.2, f64::INFINITY)] {
            let r = perturbation_incompatibility(&f, delta, k).unwrap();
            assert!(!r.violated(), "seed {seed} Δ {delta} K {k}: {r:?}");
        }
        let zero = perturbation_incompatibility(&f, 0.0, 2.0).unwrap();
        assert!(!zero.cond_b);
    }
    let f = sample_field(BoxRegion::centered(6), 1.0, 0).unwrap();
    assert!(perturbation_incompatibility(&f, 0.1, 2.0).is_err());
}

#[test]
fn zero_field_has_full_disagreement_and_long_distance() {
    let f = rfim_core::Field::constant(BoxRegion::centered(8), 0.0);
    let r = perturbation_incompatibility(&f, 0.0, 2.0).unwrap();
    assert_eq!(r.disagreements, 17 * 17);
    assert_eq!(r.distance, Distance::Finite(2));
    assert!(r.cond_a && !r.cond_b);
}

#[test]
fn boundary_reach_with_random_increase() {
    for seed in 0..40u64 {
        let f = sample_field(BoxRegion::centered(8), 1.0, seed).unwrap();
        let mut rng = KeyedRng::new(seed ^ 0xabc);
        let x: Vec<f64> = (0..f.region.len()).map(|_| rng.uniform() * 0.5).collect();
        assert!(
            percolation_to_boundary(&f, &x).unwrap().holds(),
            "seed {seed}"
        );
    }
    let f = sample_field(BoxRegion::centered(4), 1.0, 0).unwrap();
    assert!(percolation_to_boundary(&f, &vec![-1.0; 81]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn intrinsic_distance_dominates_l1(seed in any::<u64>(), p in 0.4f64..0.9) {
        let b = BoxRegion::centered(8);
        let carrier = bitmap(b.sites(), p, seed);
        let a1 = BoxRegion::centered(2).boundary();
        let a2 = BoxRegion::centered(5).boundary();
        if let Distance::Finite(d) = intrinsic_distance(&carrier, &a1, &a2) {
            let l1 = a1.iter().flat_map(|u| a2.iter().map(move |v| u.l1(v))).min().unwrap();
            prop_assert!(d >= l1);
        }
    }

    #[test]
    fn rotated_rectangle_matches_oracle(seed in any::<u64>(), angle in 0.0f64..3.1) {
        let r = Rectangle::new((0.3, -0.2), (7.0, 2.5), angle);
        let carrier = bitmap(r.sites().into_iter(), 0.7, seed);
        let [(p0, q0), (p1, q1)] = r.short_sides();
        let lab = labels(&carrier, &FOUR);
        let near = |s: &Site, p: (f64, f64), q: (f64, f64)| rfim_core::lattice::linf_near_segment(*s, p, q);
        let left: Vec<usize> = lab.iter().filter(|(s, _)| near(s, p0, q0)).map(|p| *p.1).collect();
        let expect = lab.iter().any(|(s, l)| near(s, p1, q1) && left.contains(l));
        prop_assert_eq!(cross_rectangle(&r, &carrier).unwrap(), expect);
    }

    #[test]
    fn hard_crossing_is_monotone(seed in any::<u64>()) {
        let a = Annulus::centered(8, 3).unwrap();
        let small = bitmap(a.sites(), 0.6, seed);
        let big: SiteSet = small.union(&bitmap(a.sites(), 0.3, seed ^ 1));
        if cross_annulus_hard(&a, &small).unwrap() {
            prop_assert!(cross_annulus_hard(&a, &big).unwrap());
        }
        if cross_annulus_easy(&a, &small).unwrap() {
            prop_assert!(cross_annulus_easy(&a, &big).unwrap());
        }
    }
}
