mod common;

use common::random_point;
use flatflow_core::cover::{develop_patch, distance_and_path};
use flatflow_core::entropy::{fit_line, orbit_counts, radius_grid};
use flatflow_core::flow::{scaling_regression, ArcFrequency, FrequencyReport};
use flatflow_core::geodesic::is_local_geodesic;
use flatflow_core::io::format::{parse_surface_file, serialize_surface_spec};
use flatflow_core::io::report::fmt_real;
use flatflow_core::saddle::enumerate_saddle_connections;
use flatflow_core::{build_surface, bundled, gauss_bonnet_check, SurfacePoint, SurfaceSpec};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn transformed(text: &str, scale: f64, dx: f64, dy: f64) -> SurfaceSpec {
    let mut spec = parse_surface_file(text.as_bytes()).unwrap();
    for poly in &mut spec.polygons {
        for p in poly.iter_mut() {
            p.x = p.x * scale + dx;
            p.y = p.y * scale + dy;
        }
    }
    spec
}

fn angles(spec: &SurfaceSpec) -> Vec<u32> {
    let s = build_surface(spec).unwrap();
    let mut k: Vec<u32> = s.cone_points.iter().map(|c| c.k).collect();
    k.sort();
    k
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fmt_real_keeps_twelve_digits(x in -1e30f64..1e30, e in -40i32..40) {
        let v = x * 10f64.powi(e);
        let back: f64 = fmt_real(v).parse().unwrap();
        prop_assert!((back - v).abs() <= 1e-11 * v.abs());
    }

    #[test]
    fn regression_recovers_exact_exponentials(rate in 0.1f64..5.0, shift in -3.0f64..3.0) {
        let arcs = (0..40)
            .map(|i| {
                let l = 0.5 + 0.1 * i as f64;
                ArcFrequency { arc_id: i, length: l, ext_length: l, capped: false, passes: 1, total_length: 1.0, lambda_hat: (shift - rate * l).exp(), ci_half: 0.0 }
            })
            .collect();
        let r = scaling_regression(&FrequencyReport { samples: 1, total_length: 1.0, arcs }, 30).unwrap();
        prop_assert!((r.slope + rate).abs() < 1e-9);
        prop_assert!((r.intercept - shift).abs() < 1e-9);
    }

    #[test]
    fn fit_line_is_exact_on_lines(a in -10.0f64..10.0, b in -10.0f64..10.0) {
        let xs: Vec<f64> = (0..20).map(|i| i as f64 * 0.3).collect();
        let ys: Vec<f64> = xs.iter().map(|x| a * x + b).collect();
        let (slope, icpt) = fit_line(&xs, &ys);
        prop_assert!((slope - a).abs() < 1e-9 && (icpt - b).abs() < 1e-9);
    }

    #[test]
    fn similar_surfaces_keep_their_cones(scale in 0.25f64..4.0, dx in -5.0f64..5.0, dy in -5.0f64..5.0, oct in any::<bool>()) {
        let text = if oct { bundled::OCTAGON_SURF } else { bundled::L3_SURF };
        let base = parse_surface_file(text.as_bytes()).unwrap();
        let spec = transformed(text, scale, dx, dy);
        prop_assert_eq!(angles(&spec), angles(&base));
        let s = build_surface(&spec).unwrap();
        prop_assert!(gauss_bonnet_check(&s) < 1e-9);
        let orig = build_surface(&base).unwrap();
        prop_assert!((s.area - scale * scale * orig.area).abs() < 1e-9 * s.area);
        let a = enumerate_saddle_connections(&orig, 2.5).unwrap();
        let b = enumerate_saddle_connections(&s, 2.5 * scale).unwrap();
        prop_assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x.length * scale - y.length).abs() < 1e-9 * y.length.max(1.0));
        }
    }

    #[test]
    fn serialized_surfaces_parse_back(scale in 0.5f64..2.0, oct in any::<bool>()) {
        let text = if oct { bundled::OCTAGON_SURF } else { bundled::L3_SURF };
        let spec = transformed(text, scale, 0.0, 0.0);
        let again = parse_surface_file(serialize_surface_spec(&spec).as_bytes()).unwrap();
        prop_assert_eq!(again, spec);
    }

    #[test]
    fn random_pairs_are_symmetric_geodesics(seed in any::<u64>(), x in 0.05f64..0.95, y in 0.05f64..0.95) {
        let s = bundled::l3();
        let patch = develop_patch(&s, &SurfacePoint::new(0, x, y), 6.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_point(&patch, &mut rng, 3.0);
        let q = random_point(&patch, &mut rng, 3.0);
        let pq = distance_and_path(&patch, &p, &q).unwrap();
        let qp = distance_and_path(&patch, &q, &p).unwrap();
        prop_assert!(is_local_geodesic(&s, &pq).unwrap());
        prop_assert!((pq.length() - qp.length()).abs() < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn count_brackets_are_ordered_and_monotone(x in 0.0f64..1.0, y in 0.0f64..1.0, r in 2.0f64..6.0) {
        let s = bundled::l3();
        let patch = develop_patch(&s, &SurfacePoint::new(0, x, y), r).unwrap();
        let c = orbit_counts(&patch, &radius_grid(r, 12), 400).unwrap();
        for i in 0..c.radii.len() {
            prop_assert!(c.lower[i] <= c.counts[i] && c.counts[i] <= c.upper[i]);
            if i > 0 {
                prop_assert!(c.lower[i - 1] <= c.lower[i] && c.upper[i - 1] <= c.upper[i]);
            }
        }
    }
}
