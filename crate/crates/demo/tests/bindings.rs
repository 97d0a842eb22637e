use sinc_pint_demo::{cond_points, spectrum_of, z_curve_points};

#[test]
fn z_curve_stays_in_half_open_interval() {
    let pts = z_curve_points(16, 50, -6.0, 12.0).unwrap();
    assert_eq!(pts.len(), 100);
    for pair in pts.chunks(2) {
        assert!(pair[0] > 0.0);
        assert!(
            (0.0..2.0).contains(&pair[1]),
            "z({}) = {}",
            pair[0],
            pair[1]
        );
    }
    assert!((pts[0] - 1e-6).abs() <= 1e-18 && (pts[98] - 1e12).abs() <= 1e-3);
}

#[test]
fn heat_and_wave_spectra_pass() {
    // The wave model carries displacement and velocity, so twice the unknowns.
    for (problem, omega, n) in [
        ("heat", 1.0, 16),
        ("heat", 0.1, 16),
        ("wave", 0.1, 32),
        ("wave", 0.5, 32),
    ] {
        let s = spectrum_of(problem, 4, omega).unwrap();
        assert!(s.passed(), "{problem} {omega}: {}", s.verdict());
        assert_eq!(s.re().len(), 9 * n);
        assert_eq!(s.im().len(), s.re().len());
        assert!(s.verdict().starts_with("PASS"));
    }
    assert!(spectrum_of("burgers", 4, 0.1).is_err());
}

#[test]
fn undamped_condition_matches_closed_form() {
    let pts = cond_points(1.0, 64).unwrap();
    let ms: Vec<f64> = pts.chunks(2).map(|p| p[0]).collect();
    assert_eq!(ms, [4.0, 8.0, 16.0, 32.0, 64.0]);
    for p in pts.chunks(2) {
        let m = p[0];
        let h = (std::f64::consts::PI * std::f64::consts::FRAC_PI_2 / m).sqrt();
        let closed = (m * h / 2.0).exp() * (1.0 + (-m * h).exp()) / 2.0;
        assert!(
            (p[1] - closed).abs() <= 1e-8 * closed,
            "M={m}: {} vs {closed}",
            p[1]
        );
    }
}

#[test]
fn damping_raises_condition() {
    let strong = cond_points(1e-3, 32).unwrap();
    let weak = cond_points(1e-6, 32).unwrap();
    for (a, b) in strong
        .chunks(2)
        .zip(weak.chunks(2))
        .filter(|(a, _)| a[0] >= 16.0)
    {
        assert!(b[1] > a[1], "M={}: {} vs {}", a[0], b[1], a[1]);
    }
}
