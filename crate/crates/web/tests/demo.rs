use ugsos_web::{round_demo, step_curve};

#[test]
fn step_curve_tracks_threshold() {
    let c = step_curve(0.5, 0.1, 0.2, 101).unwrap();
    assert!(c.passed);
    assert_eq!(c.xs.len(), 101);
    for ((x, p), t) in c.xs.iter().zip(&c.poly).zip(&c.target) {
        if (x - 0.5).abs() >= 0.2 {
            assert!((p - t).abs() <= 0.1);
        }
    }
}

#[test]
fn round_demo_on_noiseless_cube() {
    let r = round_demo(2, 2, 0.0, 1).unwrap();
    assert_eq!(r.planted_value, 1.0);
    assert_eq!(r.rounded_value, 1.0);
    assert!(r.sdp_value >= r.optimum - 1e-5);
}

#[test]
fn round_demo_rejects_large_inputs() {
    assert!(round_demo(5, 2, 0.1, 0).is_err());
}
