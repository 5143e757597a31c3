use gapscope_wasm::{butterfly_bands, ids_points, lyapunov_points};

#[test]
fn butterfly_records_are_triples_inside_the_hull() {
    let v = butterfly_bands(1.0, 5, 2).unwrap();
    assert_eq!(v.len() % 3, 0);
    for r in v.chunks(3) {
        assert!((0.0..=1.0).contains(&r[0]));
        assert!(r[1] <= r[2] && r[1] >= -4.0 - 1e-9 && r[2] <= 4.0 + 1e-9);
    }
    // α = 0/1 gives the single band [−2 − 2λ, 2 + 2λ].
    assert_eq!(&v[..1], &[0.0]);
    assert!((v[1] + 4.0).abs() < 1e-9 && (v[2] - 4.0).abs() < 1e-9);
}

#[test]
fn ids_curve_is_monotone_from_zero_to_one() {
    let v = ids_points(0.5, "golden", 500, 2, 50).unwrap();
    let n: Vec<f64> = v.chunks(2).map(|r| r[1]).collect();
    assert_eq!(n.first(), Some(&0.0));
    assert_eq!(n.last(), Some(&1.0));
    assert!(n.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn lyapunov_curve_has_floor_ln_lambda() {
    let v = lyapunov_points(2.0, "silver", 5000, 4, 20).unwrap();
    assert!(v.chunks(2).all(|r| r[1] > 2f64.ln() - 0.02));
}

#[test]
fn bad_inputs_are_rejected() {
    assert!(butterfly_bands(1.0, 61, 1).is_err());
    assert!(ids_points(-1.0, "golden", 100, 1, 10).is_err());
    assert!(lyapunov_points(1.0, "pi", 100, 1, 10).is_err());
}
