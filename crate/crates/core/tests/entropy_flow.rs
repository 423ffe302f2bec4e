use flatflow_core::bundled;
use flatflow_core::cover::develop_patch;
use flatflow_core::entropy::{
    estimate_entropy, orbit_counts, orbit_counts_exact, poincare_series, radius_grid, shadow_ratio_extremes_exact,
    shadow_ratio_survey, PsModel, DEFAULT_SURVEY_CELLS,
};
use flatflow_core::flow::{count_passages, frequency_report, FlowSampler};
use flatflow_core::geodesic::is_local_geodesic;
use flatflow_core::SurfacePoint;

#[test]
fn octagon_brackets_contain_the_exact_counts() {
    let s = bundled::octagon();
    for base in [SurfacePoint::new(0, 0.0, 0.0), SurfacePoint::new(0, 0.2, 0.35)] {
        let patch = develop_patch(&s, &base, 5.0).unwrap();
        let radii = radius_grid(5.0, 4);
        let exact = orbit_counts_exact(&patch, &radii, 2_000_000).unwrap();
        let dp = orbit_counts(&patch, &radii, 1500).unwrap();
        for i in 0..radii.len() {
            assert!(dp.lower[i] <= exact.counts[i] + 1e-6, "r={} lower {} exact {}", radii[i], dp.lower[i], exact.counts[i]);
            assert!(dp.upper[i] >= exact.counts[i] - 1e-6, "r={} upper {} exact {}", radii[i], dp.upper[i], exact.counts[i]);
        }
    }
}

#[test]
fn counts_are_monotone_in_the_radius() {
    let s = bundled::l3();
    let patch = develop_patch(&s, &SurfacePoint::new(0, 0.0, 0.0), 8.0).unwrap();
    let c = orbit_counts(&patch, &radius_grid(8.0, 24), 1200).unwrap();
    for w in c.counts.windows(2) {
        assert!(w[0] <= w[1]);
    }
    let e = estimate_entropy(&c).unwrap();
    assert!(e.e_hat > 1.5 && e.e_hat < 3.5, "{}", e.e_hat);
}

#[test]
fn poincare_series_tail_is_small_above_the_exponent() {
    let s = bundled::l3();
    let patch = develop_patch(&s, &SurfacePoint::new(0, 0.0, 0.0), 8.0).unwrap();
    let e = estimate_entropy(&orbit_counts(&patch, &radius_grid(8.0, 24), 1200).unwrap()).unwrap();
    let a = poincare_series(&patch, 1.5 * e.e_hat, 8.0, e.e_hat, 1200).unwrap();
    let b = poincare_series(&patch, 2.0 * e.e_hat, 8.0, e.e_hat, 1200).unwrap();
    assert!(a.value > b.value && b.value > 1.0);
    assert!(a.bracket.lower <= a.value && a.value <= a.bracket.upper);
}

#[test]
fn octagon_survey_equals_the_exact_walk() {
    let s = bundled::octagon();
    let patch = develop_patch(&s, &SurfacePoint::new(0, 0.15, 0.05), 5.0).unwrap();
    let m = PsModel::new(&patch, 3.0, 3.15, 5.0, 1000).unwrap();
    let sv = shadow_ratio_survey(&m, DEFAULT_SURVEY_CELLS).unwrap();
    let (_, lo, hi) = shadow_ratio_extremes_exact(&m, 2_000_000).unwrap();
    assert!((sv.min_r_hat / lo - 1.0).abs() < 1e-12);
    assert!((sv.max_r_hat / hi - 1.0).abs() < 1e-12);
    assert!(sv.spread >= 1.0);
}

#[test]
fn passages_decrease_under_extension() {
    let s = bundled::l3();
    let patch = develop_patch(&s, &SurfacePoint::new(0, 0.0, 0.0), 7.0).unwrap();
    let sampler = FlowSampler::new(&patch, 2.5, 2.625, 7.0, 800).unwrap();
    let samples = sampler.sample_many(4, 60).unwrap();
    let mut checked = 0;
    for g in &samples {
        let t = &g.trimmed;
        let n = t.vertices.len();
        for i in 1..n.saturating_sub(3) {
            let c = t.sub_path(i, i + 2);
            let cc = t.sub_path(i, i + 3);
            assert!(is_local_geodesic(&s, &cc).unwrap());
            let mut a = 0;
            let mut b = 0;
            for h in &samples {
                a += count_passages(&s, h, &c).unwrap();
                b += count_passages(&s, h, &cc).unwrap();
            }
            assert!(a >= b && b >= 1);
            checked += 1;
        }
    }
    assert!(checked > 10);
    let arcs: Vec<_> = samples.iter().filter(|g| g.trimmed.vertices.len() >= 4).map(|g| g.trimmed.sub_path(1, 3)).collect();
    let r = frequency_report(&s, &arcs, &samples, 4.0).unwrap();
    assert!(r.arcs.iter().all(|a| a.lambda_hat > 0.0 && a.ci_half >= 0.0));
}

#[test]
fn sampling_ignores_the_thread_count() {
    let s = bundled::octagon();
    let patch = develop_patch(&s, &SurfacePoint::new(0, 0.0, 0.0), 6.0).unwrap();
    let sampler = FlowSampler::new(&patch, 3.0, 3.15, 6.0, 800).unwrap();
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let three = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
    let a = one.install(|| sampler.sample_many(21, 40).unwrap());
    let b = three.install(|| sampler.sample_many(21, 40).unwrap());
    assert_eq!(a, b);
    for g in &a {
        assert!(is_local_geodesic(&s, &g.path).unwrap());
        assert!(g.trimmed_length > 0.0);
        assert!(g.turning_excess[0] >= -1e-9 && g.turning_excess[1] >= -1e-9);
    }
}
