mod common;

use adasplat_core::calibration::{calibrate, count_partition, snap_means, CalibConfig};
use adasplat_core::complexity::ComplexityConfig;
use adasplat_core::gaussians::{eval_gaussian, GaussianGeom};
use adasplat_core::imageio::{gradient_map, G_MAX};
use adasplat_core::partition::{partition_image, PartitionConfig};
use common::*;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn partition_matches_reference(seed in 0u64..10_000, wq in 2u32..9, hq in 2u32..9,
                                   l in 1usize..24, lambda in prop::sample::select(vec![0.0, 0.5, 2.5])) {
        let img = seeded_image(seed, wq * 6, hq * 6, 1);
        let mut cfg = PartitionConfig::new(l);
        cfg.complexity = ComplexityConfig::with_lambda(lambda);
        let e = gradient_map(&img).unwrap();
        let want = reference_partition(&e, l, lambda, cfg.s_min, G_MAX);
        match partition_image(&img, &cfg, None) {
            Ok(got) => prop_assert_eq!(Some(got.regions.iter().map(rect_of).collect::<Vec<_>>()), want),
            Err(_) => prop_assert!(want.is_none()),
        }
    }

    #[test]
    fn calibration_matches_reference(pts in prop::collection::vec((-4.0f64..70.0, -4.0f64..70.0), 1..20),
                                     s_min in prop::sample::select(vec![2u32, 4, 8])) {
        let cfg = CalibConfig::new(s_min, 64, 64).unwrap();
        let geoms: Vec<GaussianGeom<f64>> = pts.iter().map(|&(x, y)| GaussianGeom::new(1.0, 1.0, 0.0, x, y)).collect();
        let snapped = snap_means(&geoms, &cfg).unwrap();
        prop_assert_eq!(&snapped, &reference_snap(&pts, s_min, 64, 64));
        for &(x, y) in &snapped {
            prop_assert!(x % s_min == 0 && y % s_min == 0 && x < 64 && y < 64);
        }
        let (regions, _) = count_partition(&snapped, &cfg, pts.len()).unwrap();
        let want = reference_count_partition(&snapped, s_min, 64, 64).unwrap();
        prop_assert_eq!(regions.iter().map(rect_of).collect::<Vec<_>>(), want);
        let cal = calibrate(&geoms, &cfg).unwrap();
        prop_assert_eq!(cal.geoms.len(), pts.len());
        prop_assert!(cal.geoms.iter().all(|g| g.rho == 0.0 && g.sigma_x > 0.0 && g.sigma_y > 0.0));
    }

    #[test]
    fn gaussian_matches_closed_form(sx in 0.2f64..10.0, sy in 0.2f64..10.0, rho in -0.95f64..0.95,
                                    mx in -5.0f64..20.0, my in -5.0f64..20.0, px in 0u32..16, py in 0u32..16) {
        let g = GaussianGeom::new(sx, sy, rho, mx, my);
        let got = eval_gaussian(&g, f64::from(px) + 0.5, f64::from(py) + 0.5, 5.0);
        let want = reference_weight(g.as_array(), 5.0, px, py);
        prop_assert!((got - want).abs() <= 1e-12 * want.max(1.0));
    }
}

#[test]
fn count_partition_example_matches_reference() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(6);
    let pts: Vec<(f64, f64)> = (0..6).map(|_| (rng.gen_range(0.0..64.0), rng.gen_range(0.0..64.0))).collect();
    let cfg = CalibConfig::new(4, 64, 64).unwrap();
    let geoms: Vec<GaussianGeom<f32>> =
        pts.iter().map(|&(x, y)| GaussianGeom::new(2.0, 2.0, 0.0, x as f32, y as f32)).collect();
    let cal = calibrate(&geoms, &cfg).unwrap();
    let means: Vec<(f64, f64)> = geoms.iter().map(|g| (f64::from(g.mu_x), f64::from(g.mu_y))).collect();
    let want = reference_calibrate(&means, 4, 64, 64).unwrap();
    let got: Vec<[f32; 5]> = cal.geoms.iter().map(|g| g.as_array()).collect();
    let want: Vec<[f32; 5]> = want.iter().map(|g| g.map(|v| v as f32)).collect();
    assert_eq!(got, want);
}
