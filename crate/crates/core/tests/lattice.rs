use std::collections::{HashSet, VecDeque};

use proptest::prelude::*;
use rfim_core::lattice::{
    boundary, components4, cover_annulus, edge_set, enlarge, intrinsic_distance, Enlargement,
    Shape,
};
use rfim_core::rng::KeyedRng;
use rfim_core::{Annulus, BoxRegion, Distance, Rectangle, RegionGraph, Site, SiteSet};

fn random_set(b: &BoxRegion, p: f64, seed: u64) -> SiteSet {
    let mut r = KeyedRng::new(seed);
    b.sites().filter(|_| r.bernoulli(p)).collect()
}

/// Plain BFS over a hash set, 4-adjacency.
fn bfs_distance(carrier: &HashSet<Site>, from: &[Site], to: &HashSet<Site>) -> Option<u32> {
    let mut seen: HashSet<Site> = HashSet::new();
    let mut q = VecDeque::new();
    for &s in from {
        if carrier.contains(&s) && seen.insert(s) {
            q.push_back((s, 0));
        }
    }
    while let Some((s, d)) = q.pop_front() {
        if to.contains(&s) {
            return Some(d);
        }
        for (dx, dy) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
            let n = Site::new(s.x + dx, s.y + dy);
            if carrier.contains(&n) && seen.insert(n) {
                q.push_back((n, d + 1));
            }
        }
    }
    None
}

#[test]
fn box_site_counts() {
    for n in 0..6u32 {
        let b = BoxRegion::centered(n);
        assert_eq!(b.len(), ((2 * n + 1) * (2 * n + 1)) as usize);
        assert_eq!(b.sites().count(), b.len());
        assert!(b.contains(Site::new(n as i32, -(n as i32))));
        assert!(!b.contains(Site::new(n as i32 + 1, 0)));
    }
}

#[test]
fn boundary_examples() {
    let o: SiteSet = [Site::ORIGIN].into_iter().collect();
    let b = boundary(&o);
    assert_eq!(b.len(), 4);
    for n in Site::ORIGIN.neighbors4() {
        assert!(b.contains(n));
    }
    for n in 1..=2u32 {
        let b = boundary(&BoxRegion::centered(n).to_set());
        assert_eq!(b.len(), (4 * (2 * n + 1)) as usize);
        let corner = Site::new(n as i32 + 1, n as i32 + 1);
        assert!(!b.contains(corner));
    }
}

#[test]
fn region_graph_counts_edges() {
    let g = RegionGraph::from_box(&BoxRegion::centered(1));
    assert_eq!(g.len(), 9);
    assert_eq!(g.edges().len(), 12);
    assert_eq!(g.boundary_edges().len(), 12);
    assert_eq!(g.boundary_sites().len(), 12);
    assert!(g.is_connected());
}

#[test]
fn edge_set_is_ordered() {
    let a = BoxRegion::centered(1).to_set();
    let b = boundary(&a);
    let e = edge_set(&a, &b);
    assert_eq!(e.len(), 12);
    assert!(e.iter().all(|(u, v)| a.contains(*u) && b.contains(*v) && u.l1(*v) == 1));
    assert_eq!(edge_set(&b, &a).len(), 12);
}

#[test]
fn intrinsic_distance_examples() {
    for n in 1..5u32 {
        let b = BoxRegion::centered(n);
        let full = b.to_set();
        let m = n as i32;
        let left: SiteSet = (-m..=m).map(|y| Site::new(-m, y)).collect();
        let right: SiteSet = (-m..=m).map(|y| Site::new(m, y)).collect();
        assert_eq!(intrinsic_distance(&full, &left, &right), Distance::Finite(2 * n));
    }
    let a: SiteSet = [Site::ORIGIN].into_iter().collect();
    assert_eq!(intrinsic_distance(&SiteSet::new(), &a, &a), Distance::Infinite);
}

#[test]
fn intrinsic_distance_matches_bfs_oracle() {
    let b = BoxRegion::centered(8);
    let a1: SiteSet = [Site::new(-8, 0)].into_iter().collect();
    let a2: SiteSet = [Site::new(8, 0)].into_iter().collect();
    let target: HashSet<Site> = a2.iter().collect();
    let mut finite = 0;
    for seed in 0..200 {
        let c = random_set(&b, 0.6, seed);
        let hs: HashSet<Site> = c.iter().collect();
        let expect = bfs_distance(&hs, &[Site::new(-8, 0)], &target);
        let got = intrinsic_distance(&c, &a1, &a2);
        assert_eq!(got.finite(), expect, "seed {seed}");
        finite += usize::from(expect.is_some());
    }
    assert!(finite > 0);
}

#[test]
fn enlarge_examples() {
    let r = Rectangle::axis_aligned(-2, -1, 2, 1);
    assert_eq!(r.longer_side(), 4.0);
    let big = enlarge(&Shape::Rect(r), Enlargement::Large);
    assert_eq!((big.center, big.radius), (Site::ORIGIN, 64));
    for s in 1..6u32 {
        let b = BoxRegion::new(Site::new(3, -2), s);
        let d = enlarge(&Shape::Box(b), Enlargement::Doubled);
        assert_eq!((d.center, d.radius), (b.center, 2 * s));
    }
    let rot = Rectangle::new((0.0, 0.0), (5.0, 2.0), 0.7);
    let big = enlarge(&Shape::Rect(rot), Enlargement::Big);
    assert_eq!((big.center, 2 * big.radius), (Site::ORIGIN, 40));
}

#[test]
fn rectangle_aspect_ratio() {
    let r = Rectangle::new((0.5, 0.5), (1.0, 3.0), 1.2);
    assert_eq!(r.aspect_ratio(), 3.0);
    assert!(Rectangle::new((0.0, 0.0), (0.0, 1.0), 0.0).is_degenerate());
}

#[test]
fn annulus_requires_nested_radii() {
    assert!(Annulus::centered(2, 2).is_err());
    assert!(Annulus::centered(1, 3).is_err());
    let a = Annulus::centered(3, 1).unwrap();
    assert_eq!(a.len(), 49 - 9);
    assert!(!a.contains(Site::ORIGIN));
    assert!(a.contains(Site::new(3, 3)));
}

#[test]
fn cover_annulus_n32_geometry() {
    let tiles = cover_annulus(32, 1).unwrap();
    assert!(tiles.len() >= 16);
    let outer = BoxRegion::centered(32);
    let band = Annulus::centered(16, 8).unwrap();
    let core = BoxRegion::centered(4).to_set();
    let mut covered = HashSet::new();
    for t in &tiles {
        let big = enlarge(&Shape::Box(*t), Enlargement::Big);
        assert_eq!(2 * big.radius, 8);
        assert!(big.sites().all(|s| outer.contains(s)));
        assert!(big.sites().all(|s| !core.contains(s)));
        covered.extend(t.sites());
    }
    assert!(band.sites().all(|s| covered.contains(&s)));
    assert!(cover_annulus(24, 1).is_err());
    assert!(cover_annulus(64, 0).is_err());
}

#[test]
fn components_partition_the_set() {
    let c = random_set(&BoxRegion::centered(6), 0.5, 3);
    let comps = components4(&c);
    let total: usize = comps.iter().map(Vec::len).sum();
    assert_eq!(total, c.len());
    for (i, a) in comps.iter().enumerate() {
        for b in &comps[i + 1..] {
            assert!(a.iter().all(|u| b.iter().all(|v| u.l1(*v) > 1)));
        }
    }
}

proptest! {
    #[test]
    fn boundary_of_nested_box_lies_outside(r in 0u32..6, dx in -3i32..3, dy in -3i32..3) {
        let b = BoxRegion::new(Site::new(dx, dy), r).to_set();
        let bd = boundary(&b);
        prop_assert!(bd.is_disjoint(&b));
        for s in bd.iter() {
            prop_assert!(s.neighbors4().iter().any(|n| b.contains(*n)));
        }
    }

    #[test]
    fn intrinsic_distance_symmetric_and_triangle(seed in any::<u64>(), p in 0.5f64..0.95) {
        let b = BoxRegion::centered(5);
        let c = random_set(&b, p, seed);
        let pts: Vec<Site> = c.iter().take(3).collect();
        prop_assume!(pts.len() == 3);
        let one = |s: Site| -> SiteSet { [s].into_iter().collect() };
        let d = |a: Site, z: Site| intrinsic_distance(&c, &one(a), &one(z));
        prop_assert_eq!(d(pts[0], pts[1]), d(pts[1], pts[0]));
        if let (Some(ab), Some(bc)) = (d(pts[0], pts[1]).finite(), d(pts[1], pts[2]).finite()) {
            let ac = d(pts[0], pts[2]).finite().expect("connected through the middle");
            prop_assert!(ac <= ab + bc);
        }
        if let Some(ab) = d(pts[0], pts[1]).finite() {
            prop_assert!(ab >= pts[0].l1(pts[1]));
        }
    }

    #[test]
    fn enlarge_contains_shape(cx in -5.0f64..5.0, cy in -5.0f64..5.0, a in 0.5f64..4.0,
                              b in 0.5f64..4.0, angle in 0.0f64..3.2) {
        let r = Rectangle::new((cx, cy), (a, b), angle);
        for f in [Enlargement::Large, Enlargement::Big, Enlargement::Doubled] {
            let e = enlarge(&Shape::Rect(r), f);
            prop_assert!(r.sites().iter().all(|s| e.contains(*s)));
        }
    }
}
