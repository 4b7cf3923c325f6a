use hydroptic::dataset::{restore_from_provenance, Provenance};
use hydroptic::fixtures::synthetic_scene;
use hydroptic::imaging::{degrade_with_geometry, restore_with_geometry, RestoreParams, SceneGeometry};
use hydroptic::metrics::{evaluate_dirs, psnr, SsimMode};
use hydroptic::site::{write_synthetic_site, Site};
use hydroptic::spectral::{total_attenuation_with_step, CurveKind, IntegrationBounds, Normalization, SpectralCurve};

#[test]
fn site_files_round_trip_through_the_water_column() {
    let dir = tempfile::tempdir().unwrap();
    let site = Site::load(&write_synthetic_site(dir.path(), "e2e").unwrap()).unwrap();
    let p = site
        .channel_attenuation(IntegrationBounds::default(), Normalization::WeightedMean)
        .unwrap();
    let [r, g, b] = p.to_array();
    assert!(r > g && g > b, "red should attenuate fastest: {r} {g} {b}");

    let scene = synthetic_scene(48, 48, 1, 0.05).unwrap().quantized();
    let geometry = SceneGeometry::new(3.0, 7.0).unwrap();
    let observed = degrade_with_geometry(&scene, &p, &geometry).unwrap().quantized();
    let params = RestoreParams {
        keep_range: (0, 255),
        rescale: false,
        ..RestoreParams::default()
    };
    let (restored, medium) = restore_with_geometry(&observed, &p, &geometry, &params).unwrap();
    assert!(medium.transmission.iter().all(|&t| t >= params.t0));
    assert!(psnr(&restored, &scene).unwrap() > 40.0);
}

#[test]
fn literal_integral_scales_with_band_width() {
    let beta = SpectralCurve::new([(350.0, 0.2), (800.0, 0.2)], CurveKind::Attenuation).unwrap();
    let flat = SpectralCurve::new([(350.0, 1.0), (800.0, 1.0)], CurveKind::SensorResponse).unwrap();
    let bounds = IntegrationBounds::new(400.0, 750.0).unwrap();
    let lit = total_attenuation_with_step(&beta, &flat, bounds, Normalization::Literal, 1.0).unwrap();
    let mean = total_attenuation_with_step(&beta, &flat, bounds, Normalization::WeightedMean, 1.0).unwrap();
    assert!((lit - 70.0).abs() < 1e-9);
    assert!((mean - 0.2).abs() < 1e-12);
}

#[test]
fn provenance_survives_a_move_of_the_output() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    write_synthetic_site(&root.join("sites/a"), "a").unwrap();
    synthetic_scene(24, 24, 2, 0.05).unwrap().save_png(&root.join("raw/x.png")).unwrap();
    std::fs::write(
        root.join("records.json"),
        r#"[{"path":"raw/x.png","site_id":"a","dive_depth_m":6.0,"distance_m":2.0,"quality":"good"},
            {"path":"raw/x.png","site_id":"a","dive_depth_m":6.0,"quality":"low"}]"#,
    )
    .unwrap();
    let records = hydroptic::dataset::load_records(&root.join("records.json")).unwrap();
    let (sites, _) = hydroptic::dataset::SiteSet::load_from_root(root, ["a"]);
    let out = hydroptic::dataset::restore_batch(root, &records, &sites, &Default::default());
    assert_eq!(out.restored.len(), 1);
    let prov = Provenance::load(&Provenance::sidecar_path(&root.join("restored/x.png"))).unwrap();
    let bytes = restore_from_provenance(root, &prov).unwrap();
    assert_eq!(bytes, std::fs::read(root.join("restored/x.png")).unwrap());

    std::fs::write(root.join("raw/x.png"), b"tampered").unwrap();
    assert!(restore_from_provenance(root, &prov).is_err());
}

#[test]
fn evaluating_a_directory_against_itself() {
    let dir = tempfile::tempdir().unwrap();
    for i in 0..3 {
        synthetic_scene(20, 20, i, 0.0).unwrap().save_png(&dir.path().join(format!("{i}.png"))).unwrap();
    }
    let e = evaluate_dirs(dir.path(), dir.path(), SsimMode::Luma).unwrap();
    assert_eq!(e.count, 3);
    assert!(e.rows.iter().all(|r| r.report.mse == 0.0 && r.report.ssim == 1.0 && r.report.psnr_inf));
}
