use trackbench_demo::{frame_rgba, max_coefficient_trace, variance_curve, Session};

#[test]
fn session_steps_to_the_end() {
    let mut s = Session::new("translation", "RR", 1.0, 120, 0).unwrap();
    assert_eq!(s.frame_index(), 0);
    let mut worst: f64 = 0.0;
    while s.step().unwrap() {
        worst = worst.max(s.cle());
    }
    assert!(s.is_finished());
    assert_eq!(s.frame_index() + 1, s.frame_count());
    assert!(worst < 6.0, "worst CLE {worst}");
    assert!(!s.step().unwrap());
}

#[test]
fn session_rejects_unknown_names() {
    assert!(Session::new("nowhere", "RR", 1.0, 50, 0).is_err());
    assert!(Session::new("translation", "KCF", 1.0, 50, 0).is_err());
    assert!(Session::new("translation", "RR", -1.0, 50, 0).is_err());
}

#[test]
fn rgba_has_opaque_grey_pixels() {
    let s = Session::new("clutter", "L1_APG", 0.0, 20, 1).unwrap();
    let px = frame_rgba(s.frame());
    assert_eq!(px.len(), s.frame().width() * s.frame().height() * 4);
    assert!(px.chunks(4).all(|p| p[0] == p[1] && p[1] == p[2] && p[3] == 255));
}

#[test]
fn ridge_variance_decreases_and_stays_below_ols() {
    let lambdas = [0.01, 0.1, 1.0, 10.0];
    let v = variance_curve(5, 40, 8, 0.05, &lambdas).unwrap();
    assert_eq!(v.len(), 5);
    assert!(v[1..].windows(2).all(|w| w[1] < w[0]));
    assert!(v[1] < v[0]);
    let colinear = variance_curve(5, 40, 8, 0.0, &lambdas).unwrap();
    assert!(colinear[0].is_infinite() && colinear[1].is_finite());
    assert!(variance_curve(5, 1, 8, 0.1, &lambdas).is_err());
}

#[test]
fn unregularized_coefficients_explode_on_colinear_scene() {
    let raw = max_coefficient_trace(0.0, 12, 40).unwrap();
    let ridge = max_coefficient_trace(1.0, 12, 40).unwrap();
    assert_eq!(ridge.len(), 12);
    let peak = |v: &[f64]| v.iter().cloned().fold(0.0, f64::max);
    assert!(peak(&raw) > 1e6, "{}", peak(&raw));
    assert!(peak(&ridge) < 10.0, "{}", peak(&ridge));
}
