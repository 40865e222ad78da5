use statrs::function::gamma::ln_gamma;
use std::f64::consts::PI;
use torsion_lab::zeta::{circle_log_det, circle_log_det_mellin, circle_torsion};

/// Hurwitz oracle: for the spectrum (n + a)^2, n in Z, the zeta function is
/// zeta_H(2s, a) + zeta_H(2s, 1 - a), and zeta_H'(0, a) = ln Gamma(a) - ln(2 pi)/2.
fn hurwitz_log_det(a: f64) -> f64 {
    -2.0 * (ln_gamma(a) + ln_gamma(1.0 - a) - (2.0 * PI).ln())
}

#[test]
fn closed_form_and_mellin_match_gamma_oracle() {
    for k in 1..20 {
        let a = k as f64 / 20.0;
        let oracle = hurwitz_log_det(a);
        assert!((circle_log_det(a, 2.0 * PI) - oracle).abs() < 1e-12, "a {a}");
        assert!((circle_log_det_mellin(a, 2.0 * PI) - oracle).abs() < 1e-9, "a {a}");
        // Twisted determinants do not depend on the length.
        assert!((circle_log_det_mellin(a, 5.0) - oracle).abs() < 1e-9, "a {a}");
    }
}

#[test]
fn torsion_is_periodic_and_symmetric_in_the_twist() {
    for a in [0.1, 0.37, 0.5] {
        assert!((circle_torsion(a, 1.0) - circle_torsion(1.0 - a, 1.0)).abs() < 1e-14);
        assert!((circle_torsion(a + 3.0, 1.0) - circle_torsion(a, 1.0)).abs() < 1e-12);
    }
}
