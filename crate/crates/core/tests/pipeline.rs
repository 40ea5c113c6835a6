mod common;

use adasplat_core::encoder::{fit, render_image, FitConfig};
use adasplat_core::gaussians::{init_from_image, GaussianGeom, Token, TokenSet};
use adasplat_core::partition::{partition_image, PartitionConfig};
use adasplat_core::quality::psnr;
use adasplat_core::renderer::render;
use adasplat_core::synthetic::gradient_with_checkerboard;
use adasplat_core::tokenstore::{decode_tokens, encode_tokens};
use adasplat_core::{RasterImage, TokenSetF32};

fn adaptive_init(img: &RasterImage, l: usize) -> TokenSetF32 {
    let part = partition_image(img, &PartitionConfig::new(l), None).unwrap();
    init_from_image(&part.regions, img, 5.0).unwrap()
}

#[test]
fn self_consistent_target_is_stationary() {
    let tokens = vec![
        Token::new(GaussianGeom::new(4.0, 3.0, 0.2, 10.0, 12.0), vec![0.4, 0.2, 0.1]),
        Token::new(GaussianGeom::new(2.5, 5.0, -0.3, 22.0, 8.0), vec![0.3, 0.5, 0.2]),
        Token::new(GaussianGeom::new(6.0, 6.0, 0.0, 16.0, 24.0), vec![0.1, 0.3, 0.6]),
    ];
    let ts = TokenSet::new(tokens, 32, 32, 5.0f64).unwrap();
    let map = render(&ts, 3);
    assert!(map.data.iter().all(|v| (0.0..=1.0).contains(v)));
    let target = render_image(&ts, 3).unwrap();
    let (out, report) = fit(&target, &ts, &FitConfig::default()).unwrap();
    assert!(report.loss_curve[0] <= 1e-10, "{}", report.loss_curve[0]);
    assert!(*report.loss_curve.last().unwrap() <= 1e-10);
    for (a, b) in out.tokens.iter().zip(&ts.tokens) {
        for (p, q) in a.geom.as_array().iter().zip(b.geom.as_array()) {
            assert!((p - q).abs() <= 1e-6);
        }
        for (p, q) in a.f.iter().zip(&b.f) {
            assert!((p - q).abs() <= 1e-6);
        }
    }
}

#[test]
fn fitting_beats_initialization() {
    let img = gradient_with_checkerboard(64, 64);
    let init = adaptive_init(&img, 64);
    let before = psnr(&img, &render_image(&init, 3).unwrap()).unwrap();
    let (_, report) = fit(&img, &init, &FitConfig::default()).unwrap();
    assert_eq!(report.iterations_run, 500);
    assert!(report.final_psnr > before, "{} vs {before}", report.final_psnr);
    assert!(report.loss_curve.iter().all(|l| l.is_finite()));
    assert!(report.loss_curve[1] <= report.loss_curve[0]);
}

#[test]
fn more_tokens_fit_better() {
    let img = gradient_with_checkerboard(64, 64);
    let cfg = FitConfig::default();
    let (_, small) = fit(&img, &adaptive_init(&img, 32), &cfg).unwrap();
    let (_, large) = fit(&img, &adaptive_init(&img, 128), &cfg).unwrap();
    assert!(large.final_psnr > small.final_psnr, "{} vs {}", large.final_psnr, small.final_psnr);
}

#[test]
fn fitted_tokens_survive_storage() {
    let img = common::seeded_image(21, 32, 32, 3);
    let init = adaptive_init(&img, 16);
    let cfg = FitConfig {
        iters: 40,
        geom_freeze_iters: 10,
        ..FitConfig::default()
    };
    let (ts, report) = fit(&img, &init, &cfg).unwrap();
    let back = decode_tokens(&encode_tokens(&ts).unwrap()).unwrap();
    assert_eq!(back, ts);
    let rendered = render_image(&back, 3).unwrap();
    assert!((psnr(&img, &rendered).unwrap() - report.final_psnr).abs() < 1e-9);
}

#[test]
fn report_serializes_expected_keys() {
    let img = common::seeded_image(2, 16, 16, 1);
    let init = adaptive_init(&img, 4);
    let cfg = FitConfig {
        iters: 3,
        geom_freeze_iters: 1,
        ..FitConfig::default()
    };
    let (_, report) = fit(&img, &init, &cfg).unwrap();
    let v = serde_json::to_value(&report).unwrap();
    for key in ["loss_curve", "final_psnr", "wall_time", "iterations_run"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["loss_curve"].as_array().unwrap().len(), 3);
}
