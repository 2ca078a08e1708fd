use panoscene::Grid;
use panoscene_web::demo::{colorize, fusion_demo, ramp, rig_coverage, room_depth, RoomParams};

#[test]
fn room_depth_matches_walls_and_is_opaque() {
    let p = RoomParams::default();
    let (depth, image) = room_depth(&p, 32).unwrap();
    assert_eq!((image.width, image.height), (64, 32));
    assert_eq!(image.rgba.len(), 64 * 32 * 4);
    assert!(image.rgba.chunks(4).all(|px| px[3] == 255));
    let min = depth.as_slice().iter().copied().fold(f64::INFINITY, f64::min);
    // Nearest surface is the ceiling (1.1 m) seen by the top row.
    assert!((1.1 - 1e-9..1.2).contains(&min));

    let bad = RoomParams { observer_x: 9.0, ..p };
    assert!(room_depth(&bad, 32).is_err());
}

#[test]
fn ramp_and_colorize_endpoints() {
    assert_eq!(ramp(0.0), [13, 8, 135]);
    assert_eq!(ramp(1.0), [240, 249, 33]);
    let d = Grid::from_vec(1, 3, vec![1.0, 3.0, f64::INFINITY]).unwrap();
    let img = colorize(&d, 1.0, 3.0);
    assert_eq!(&img.rgba[0..4], &[240, 249, 33, 255]);
    assert_eq!(&img.rgba[4..8], &[13, 8, 135, 255]);
    assert_eq!(&img.rgba[8..12], &[0, 0, 0, 255]);
}

#[test]
fn noiseless_fusion_recovers_distortions() {
    let r = fusion_demo(0.0, 7, 32).unwrap();
    assert_eq!(r.coefficients.len(), 16);
    assert_eq!((r.image.width, r.image.height), (64, 96));
    assert!(
        r.fused_rmse < 0.2 * r.coarse_rmse,
        "{} vs {}",
        r.fused_rmse,
        r.coarse_rmse
    );
    for [m, o, s, t] in &r.coefficients {
        assert!((m - s).abs() < 0.1 * m && (o - t).abs() < 0.2, "{m} {o} vs {s} {t}");
    }
}

#[test]
fn fusion_is_deterministic_per_seed() {
    let a = fusion_demo(0.05, 3, 32).unwrap();
    let b = fusion_demo(0.05, 3, 32).unwrap();
    assert_eq!(a.image, b.image);
    assert_eq!(a.loss, b.loss);
}

#[test]
fn rig_covers_all_but_the_poles() {
    let (total, image) = rig_coverage(32).unwrap();
    assert_eq!(image.rgba.len(), 64 * 32 * 4);
    let middle = total.rows().skip(4).take(24);
    assert!(middle.flatten().all(|&t| t > 0.0));
}
