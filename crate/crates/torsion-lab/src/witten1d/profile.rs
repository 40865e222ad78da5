//! The odd interface profile `p_A`.
//!
//! On `[0, r]` the profile is `A (r s - s^2/2)`. Near the origin it is
//! replaced by an odd quintic so that the function is odd and C^2. Near
//! `s = r` a short polynomial cutoff brings `p'` and `p''` to zero while
//! keeping `p(r) = A r^2 / 2` exactly. Past `r` the profile is constant.

use super::WittenError;
use nalgebra::{Matrix3, Matrix4, Vector3, Vector4};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PProfile {
    pub amplitude: f64,
    pub r: f64,
    /// End of the odd polynomial core.
    pub s0: f64,
    /// Width of the cutoff below `r`.
    pub w: f64,
    odd: [f64; 3],
    phi: [f64; 4],
    /// `min p' / A` on `[0, s0]`.
    pub c1: f64,
}

impl PProfile {
    pub fn new(amplitude: f64, r: f64) -> Result<Self, WittenError> {
        if !(amplitude >= 0.0) || !amplitude.is_finite() {
            return Err(WittenError::Infeasible(format!("amplitude must be >= 0, got {amplitude}")));
        }
        if !(r > 0.0) {
            return Err(WittenError::Infeasible(format!("radius must be > 0, got {r}")));
        }
        let s0 = 0.02 * r;
        let w = (r * (-amplitude * amplitude).exp()).max(r * 1e-6).min(0.5 * r);
        // Odd core in scaled unknowns b_k = a_k s0^k.
        let lhs = Matrix3::new(1.0, 1.0, 1.0, 1.0, 3.0, 5.0, 0.0, 6.0, 20.0);
        let rhs = Vector3::new(r * s0 - 0.5 * s0 * s0, s0 * (r - s0), -s0 * s0);
        let b = lhs.lu().solve(&rhs).ok_or_else(|| WittenError::Infeasible("odd core system singular".into()))?;
        let odd = [b[0] / s0, b[1] / s0.powi(3), b[2] / s0.powi(5)];
        // Cutoff shape phi(x) = x^3 (a + b x + c x^2 + d x^3) with
        // phi(1) = 1, phi'(1) = 1, phi''(1) = 0, int_0^1 phi = 1/2.
        let m = Matrix4::new(
            1.0, 1.0, 1.0, 1.0, //
            3.0, 4.0, 5.0, 6.0, //
            6.0, 12.0, 20.0, 30.0, //
            0.25, 0.2, 1.0 / 6.0, 1.0 / 7.0,
        );
        let sol = m
            .lu()
            .solve(&Vector4::new(1.0, 1.0, 0.0, 0.5))
            .ok_or_else(|| WittenError::Infeasible("cutoff system singular".into()))?;
        let phi = [sol[0], sol[1], sol[2], sol[3]];
        let mut prof = PProfile { amplitude, r, s0, w, odd, phi, c1: r };
        let samples = 2000;
        let mut lo = f64::INFINITY;
        let mut hi: f64 = 0.0;
        for i in 0..=samples {
            let s = s0 * i as f64 / samples as f64;
            let d = prof.core(s)[1];
            lo = lo.min(d);
            hi = hi.max(d);
        }
        prof.c1 = lo;
        if !(lo > 0.0 && hi <= 2.0 * lo) {
            return Err(WittenError::Infeasible(format!(
                "derivative window C1 A <= p' <= 2 C1 A fails on [0, s0]: min {lo}, max {hi}"
            )));
        }
        for i in 0..=samples {
            let x = i as f64 / samples as f64;
            if prof.phi_eval(x)[0] < -1e-12 {
                return Err(WittenError::Infeasible("cutoff is not monotone".into()));
            }
        }
        Ok(prof)
    }

    fn phi_eval(&self, x: f64) -> [f64; 3] {
        let [a, b, c, d] = self.phi;
        let v = x.powi(3) * (a + x * (b + x * (c + x * d)));
        let d1 = x * x * (3.0 * a + x * (4.0 * b + x * (5.0 * c + 6.0 * d * x)));
        let integral = x.powi(4) * (a / 4.0 + x * (b / 5.0 + x * (c / 6.0 + x * d / 7.0)));
        [v, d1, integral]
    }

    /// Shape for `A = 1` at `s >= 0`: value, first and second derivative.
    fn core(&self, s: f64) -> [f64; 3] {
        let r = self.r;
        if s <= self.s0 {
            let [a1, a3, a5] = self.odd;
            [
                s * (a1 + s * s * (a3 + s * s * a5)),
                a1 + s * s * (3.0 * a3 + 5.0 * a5 * s * s),
                s * (6.0 * a3 + 20.0 * a5 * s * s),
            ]
        } else if s <= r - self.w {
            [r * s - 0.5 * s * s, r - s, -1.0]
        } else if s < r {
            let x = (r - s) / self.w;
            let [v, d1, integral] = self.phi_eval(x);
            [0.5 * r * r - self.w * self.w * integral, self.w * v, -d1]
        } else {
            [0.5 * r * r, 0.0, 0.0]
        }
    }

    /// `(p, p', p'')` at `s`.
    pub fn eval(&self, s: f64) -> [f64; 3] {
        let [v, d1, d2] = self.core(s.abs());
        let a = self.amplitude;
        if s < 0.0 {
            [-a * v, a * d1, -a * d2]
        } else {
            [a * v, a * d1, a * d2]
        }
    }

    /// Plateau value `A r^2 / 2`.
    pub fn plateau(&self) -> f64 {
        0.5 * self.amplitude * self.r * self.r
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_amplitude_vanishes() {
        let p = PProfile::new(0.0, 0.3).unwrap();
        for i in -100..=100 {
            assert_eq!(p.eval(i as f64 * 0.006)[0], 0.0);
        }
    }

    #[test]
    fn plateau_and_oddness() {
        for a in [0.5, 3.0, 40.0] {
            let p = PProfile::new(a, 0.2).unwrap();
            assert!((p.eval(0.3)[0] - a * 0.02).abs() < 1e-15);
            for i in 0..1000 {
                let s = -0.4 + 0.0008 * i as f64;
                let (x, y) = (p.eval(s), p.eval(-s));
                assert!((x[0] + y[0]).abs() <= 1e-14 * (1.0 + a));
            }
        }
    }

    #[test]
    fn c2_across_breakpoints() {
        let p = PProfile::new(2.0, 0.25).unwrap();
        for b in [p.s0, p.r - p.w, p.r] {
            let e = 1e-12;
            let (l, r) = (p.eval(b - e), p.eval(b + e));
            for k in 0..3 {
                assert!((l[k] - r[k]).abs() < 1e-7, "break {b} order {k}: {} vs {}", l[k], r[k]);
            }
        }
    }
}
