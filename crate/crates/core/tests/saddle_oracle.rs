mod common;

use common::{brute_force_holonomies, holonomy_multiset};
use flatflow_core::bundled;
use flatflow_core::geodesic::{is_local_geodesic, GeodesicPath};
use flatflow_core::saddle::{enumerate_cylinders, enumerate_saddle_connections, validate_cylinder, SaddleCatalog};

fn compare(name: &str, s: &flatflow_core::FlatSurface, max_len: f64) {
    let found = enumerate_saddle_connections(s, max_len).unwrap();
    let oracle = brute_force_holonomies(s, max_len);
    assert_eq!(oracle.len(), 2 * found.len(), "{name}: oriented oracle count");
    let mut want = holonomy_multiset(oracle);
    for v in want.values_mut() {
        assert_eq!(*v % 2, 0);
        *v /= 2;
    }
    let got = holonomy_multiset(found.iter().map(|c| (c.holonomy.x, c.holonomy.y)));
    assert_eq!(got, want, "{name}");
}

#[test]
fn l3_matches_unfolding() {
    compare("l3", &bundled::l3(), 6.0);
}

#[test]
fn octagon_matches_unfolding() {
    compare("octagon", &bundled::octagon(), 5.0);
}

#[test]
fn l3_counts_follow_primitive_vectors() {
    // all square corners are the single cone point, so every primitive
    // integer vector is the holonomy of exactly three oriented connections
    let s = bundled::l3();
    let found = enumerate_saddle_connections(&s, 4.0).unwrap();
    let mut primitive = 0;
    for x in -4i64..=4 {
        for y in -4i64..=4 {
            let g = num_gcd(x.abs(), y.abs());
            if g == 1 && x * x + y * y <= 16 {
                primitive += 1;
            }
        }
    }
    assert_eq!(found.len(), 3 * primitive / 2);
    assert_eq!(found.len(), 48);
}

fn num_gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a
    } else {
        num_gcd(b, a % b)
    }
}

#[test]
fn connections_are_local_geodesics_and_sorted() {
    for s in [bundled::l3(), bundled::octagon()] {
        let list = enumerate_saddle_connections(&s, 4.0).unwrap();
        assert!(list.windows(2).all(|w| w[0].length <= w[1].length + 1e-12));
        for c in &list {
            assert!(is_local_geodesic(&s, &GeodesicPath::from_saddle(c)).unwrap());
            assert!((c.holonomy.norm() - c.length).abs() < 1e-9);
        }
    }
}

#[test]
fn catalog_reverse_is_consistent() {
    let s = bundled::octagon();
    let cat = SaddleCatalog::build(&s, 4.0).unwrap();
    for (i, o) in cat.oriented.iter().enumerate() {
        let r = &cat.oriented[cat.reverse[i]];
        assert_eq!(cat.reverse[cat.reverse[i]], i);
        assert_eq!((r.start, r.end), (o.end, o.start));
        assert!((r.length - o.length).abs() < 1e-12);
        assert_eq!(cat.lookup(o.start, o.depart), Some(i));
    }
}

#[test]
fn cylinders_are_valid_and_bounded_by_connections() {
    for s in [bundled::l3(), bundled::octagon()] {
        let cyl = enumerate_cylinders(&s, 5.0).unwrap();
        assert!(!cyl.is_empty());
        for c in &cyl {
            assert!(validate_cylinder(&s, c));
            assert!(c.height > 0.0 && c.circumference <= 5.0 + 1e-9);
        }
    }
}

#[test]
fn l3_horizontal_cylinders() {
    // rows of the L: one cylinder of circumference 1 and one of 2
    let s = bundled::l3();
    let cyl = enumerate_cylinders(&s, 2.0).unwrap();
    let horizontal: Vec<_> = cyl.iter().filter(|c| c.direction.y.abs() < 1e-9).collect();
    let mut circ: Vec<f64> = horizontal.iter().map(|c| c.circumference).collect();
    circ.sort_by(f64::total_cmp);
    assert_eq!(circ.len(), 2);
    assert!((circ[0] - 1.0).abs() < 1e-9 && (circ[1] - 2.0).abs() < 1e-9);
    assert!(horizontal.iter().all(|c| (c.height - 1.0).abs() < 1e-9));
}
