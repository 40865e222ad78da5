//! Radial shaping profiles `eta`, `eta_tilde` and `q_A`.
//!
//! `eta` and `eta_tilde` are built from C^1 derivative profiles: piecewise
//! constant slopes joined by quintic smoothstep blends, so the profiles
//! themselves are C^2. `q_A` is two quadratic caps joined through cubic
//! Hermite slope ramps to a band of constant slope.

use super::{BirthDeathError, ModelParams};
use serde::{Deserialize, Serialize};

fn smoothstep(t: f64) -> [f64; 3] {
    // P, P', integral of P from 0.
    let t = t.clamp(0.0, 1.0);
    [t * t * t * (10.0 - 15.0 * t + 6.0 * t * t), 30.0 * t * t * (1.0 - t) * (1.0 - t), t.powi(4) * (2.5 - 3.0 * t + t * t)]
}

/// One segment of a slope profile: on `[a, b]` the derivative blends from
/// `m0` to `m1` through a smoothstep (constant when `m0 == m1`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct SlopeSegment {
    a: f64,
    b: f64,
    m0: f64,
    m1: f64,
    /// Profile value at `a`.
    v0: f64,
}

impl SlopeSegment {
    fn eval(&self, s: f64) -> [f64; 3] {
        let len = self.b - self.a;
        let t = (s - self.a) / len;
        let [p, dp, ip] = smoothstep(t);
        let dm = self.m1 - self.m0;
        [self.v0 + self.m0 * (s - self.a) + dm * len * ip, self.m0 + dm * p, dm * dp / len]
    }

    fn end_value(&self) -> f64 {
        self.eval(self.b)[0]
    }
}

fn chain(knots: &[(f64, f64)]) -> Vec<SlopeSegment> {
    let mut segments = Vec::with_capacity(knots.len());
    let mut v = 0.0;
    for w in knots.windows(2) {
        let seg = SlopeSegment { a: w[0].0, b: w[1].0, m0: w[0].1, m1: w[1].1, v0: v };
        v = seg.end_value();
        segments.push(seg);
    }
    segments
}

fn eval_chain(segments: &[SlopeSegment], s: f64) -> [f64; 3] {
    if s <= segments[0].a {
        return [0.0, 0.0, 0.0];
    }
    for seg in segments {
        if s <= seg.b {
            return seg.eval(s);
        }
    }
    let last = segments.last().unwrap();
    [last.end_value(), 0.0, 0.0]
}

/// Compactly supported C^2 profile on `[0, inf)`. Left of `split` it is
/// integrated forward from zero; right of `split` it is integrated backward
/// from zero at the far end, so both ends vanish exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeProfile {
    rise: Vec<SlopeSegment>,
    fall: Vec<SlopeSegment>,
    split: f64,
    end: f64,
}

impl SlopeProfile {
    /// `rise` and `fall` are `(position, slope)` knots; between consecutive
    /// knots the slope blends smoothly from one value to the next. The
    /// profile vanishes left of the first rise knot and right of the last
    /// fall knot; the last rise knot must coincide with the first fall knot.
    fn from_knots(rise: &[(f64, f64)], fall: &[(f64, f64)]) -> Self {
        let split = rise.last().unwrap().0;
        let end = fall.last().unwrap().0;
        let mirrored: Vec<(f64, f64)> = fall.iter().rev().map(|&(s, m)| (end - s, -m)).collect();
        SlopeProfile { rise: chain(rise), fall: chain(&mirrored), split, end }
    }

    /// `(value, first derivative, second derivative)`.
    pub fn eval(&self, s: f64) -> [f64; 3] {
        if s <= self.split {
            eval_chain(&self.rise, s)
        } else {
            let [v, d1, d2] = eval_chain(&self.fall, self.end - s);
            [v, -d1, d2]
        }
    }
}

/// `q_A` on `[0, inf)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QProfile {
    pub amplitude: f64,
    pub r1: f64,
    pub r2: f64,
    /// Slope on the middle band, divided by `A`.
    pub c1: f64,
    /// Bound on `|q''| / A`.
    pub c2: f64,
    /// `2 e^{A^2}`, or infinity once it overflows.
    kappa: f64,
}

const RAMP_FRACTION: f64 = 0.125;

impl QProfile {
    pub fn new(amplitude: f64, r1: f64, r2: f64) -> Self {
        let d = r2 - r1;
        let w = RAMP_FRACTION * d;
        // Solve for the band slope S (per unit A) so that the rise to the
        // midpoint is exactly d^2/4 (per unit A).
        let cap = d * d / 32.0;
        let ramp_fixed = w * (0.25 * d) / 2.0 + w * w / 12.0;
        let band = 0.5 * d - 0.25 * d - w;
        let c1 = (0.25 * d * d - cap - ramp_fixed) / (w / 2.0 + band);
        let kappa = if amplitude * amplitude > 700.0 { f64::INFINITY } else { 2.0 * (amplitude * amplitude).exp() };
        let mut q = QProfile { amplitude, r1, r2, c1, c2: 0.0, kappa };
        // The ramp curvature is a quadratic in t, so its maximum sits at an
        // end or at the vertex; the cutoff layer is sampled on its support.
        let (h0, m0, h1) = (0.25 * d, w, c1);
        let der = |t: f64| (h0 * (6.0 * t * t - 6.0 * t) + m0 * (3.0 * t * t - 4.0 * t + 1.0) + h1 * (-6.0 * t * t + 6.0 * t)) / w;
        let denom = 12.0 * h0 + 6.0 * m0 - 12.0 * h1;
        let vertex = if denom != 0.0 { (6.0 * h0 + 4.0 * m0 - 6.0 * h1) / denom } else { 0.0 };
        let mut c2 = [0.0, 1.0, vertex.clamp(0.0, 1.0)].iter().map(|&t| der(t).abs()).fold(1.0f64, f64::max);
        if kappa.is_finite() {
            let lo = d / (8.0 * kappa);
            c2 = (0..=4000).map(|k| q.rising(lo * (1.0 + k as f64 / 4000.0))[2].abs()).fold(c2, f64::max);
        }
        q.c2 = c2;
        q
    }

    fn cutoff(&self, z: f64) -> [f64; 3] {
        // phi(z) = 0 below d/8, 1 above d/4, quintic smoothstep between.
        let d = self.r2 - self.r1;
        let lo = d / 8.0;
        let t = (z - lo) / lo;
        if t <= 0.0 {
            return [0.0, 0.0, 0.0];
        }
        if t >= 1.0 {
            return [1.0, 0.0, 0.0];
        }
        let p = t * t * t * (10.0 - 15.0 * t + 6.0 * t * t);
        let dp = 30.0 * t * t * (1.0 - t) * (1.0 - t) / lo;
        let ddp = 60.0 * t * (1.0 - t) * (1.0 - 2.0 * t) / (lo * lo);
        [p, dp, ddp]
    }

    /// Per-unit-`A` rise `g(x) = q(r1 + x)/A + d^2/2` on `[0, d/2]`.
    fn rising(&self, x: f64) -> [f64; 3] {
        let d = self.r2 - self.r1;
        let quarter = 0.25 * d;
        let w = RAMP_FRACTION * d;
        if x <= quarter {
            if self.kappa.is_infinite() {
                return [0.5 * x * x, x, 1.0];
            }
            let k = self.kappa;
            let [p, dp, ddp] = self.cutoff(k * x);
            let h = 0.5 * x * x;
            return [p * h, k * dp * h + p * x, k * k * ddp * h + 2.0 * k * dp * x + p];
        }
        let g_quarter = 0.5 * quarter * quarter;
        if x <= quarter + w {
            let t = (x - quarter) / w;
            let (h0, m0, h1) = (quarter, w, self.c1);
            let t2 = t * t;
            let t3 = t2 * t;
            let t4 = t3 * t;
            let val = h0 * (2.0 * t3 - 3.0 * t2 + 1.0) + m0 * (t3 - 2.0 * t2 + t) + h1 * (-2.0 * t3 + 3.0 * t2);
            let der = h0 * (6.0 * t2 - 6.0 * t) + m0 * (3.0 * t2 - 4.0 * t + 1.0) + h1 * (-6.0 * t2 + 6.0 * t);
            let int = h0 * (0.5 * t4 - t3 + t) + m0 * (0.25 * t4 - 2.0 * t3 / 3.0 + 0.5 * t2) + h1 * (-0.5 * t4 + t3);
            return [g_quarter + w * int, val, der / w];
        }
        let g_ramp = g_quarter + w * (0.5 * (quarter + self.c1) + w / 12.0);
        [g_ramp + self.c1 * (x - quarter - w), self.c1, 0.0]
    }

    /// `(q, q', q'')` at radius `s`.
    pub fn eval(&self, s: f64) -> [f64; 3] {
        let a = self.amplitude;
        let d = self.r2 - self.r1;
        if a == 0.0 || s >= self.r2 {
            return [0.0, 0.0, 0.0];
        }
        if s <= self.r1 {
            return [-0.5 * a * d * d, 0.0, 0.0];
        }
        let x = s - self.r1;
        let g = if x <= 0.5 * d {
            self.rising(x)
        } else {
            let [v, d1, d2] = self.rising(d - x);
            [0.5 * d * d - v, d1, -d2]
        };
        [a * (g[0] - 0.5 * d * d), a * g[1], a * g[2]]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapingProfiles {
    pub eta: SlopeProfile,
    pub eta_tilde: SlopeProfile,
    pub q: QProfile,
}

/// Builds `eta`, `eta_tilde` and `q_A` and verifies every clause on a dense
/// sample.
pub fn build_profiles(p: &ModelParams) -> Result<ShapingProfiles, BirthDeathError> {
    let (r1, r2, delta) = (p.r1, p.r2, p.delta);
    let (lo, hi) = (r1 / 6.0, 2.5 * r2);
    // Rise of eta on [r1/6, r1]: ramp to slope m, hold, ramp to delta.
    let len_in = r1 - lo;
    let m_in = delta * (r1 - len_in / 8.0) / (0.75 * len_in);
    // Fall on [r2, 5 r2 / 2]: ramp from delta to -m, hold, ramp to 0.
    let len_out = hi - r2;
    let m_out = delta * (r2 + len_out / 8.0) / (0.75 * len_out);
    let eta = SlopeProfile::from_knots(
        &[(lo, 0.0), (lo + 0.25 * len_in, m_in), (r1 - 0.25 * len_in, m_in), (r1, delta), (r2, delta)],
        &[(r2, delta), (r2 + 0.25 * len_out, -m_out), (hi - 0.25 * len_out, -m_out), (hi, 0.0)],
    );
    // eta_tilde rises over [r1/6, r1] and falls over [r2, 5 r2 / 2].
    let t_in = 1.0 / (0.75 * len_in);
    let t_out = 1.0 / (0.75 * len_out);
    let eta_tilde = SlopeProfile::from_knots(
        &[(lo, 0.0), (lo + 0.25 * len_in, t_in), (r1 - 0.25 * len_in, t_in), (r1, 0.0), (r2, 0.0)],
        &[(r2, 0.0), (r2 + 0.25 * len_out, -t_out), (hi - 0.25 * len_out, -t_out), (hi, 0.0)],
    );
    let profiles = ShapingProfiles { eta, eta_tilde, q: QProfile::new(p.amplitude, r1, r2) };
    verify_profiles(p, &profiles, 10_000)?;
    Ok(profiles)
}

/// Samples every profile clause at `samples` points per clause.
pub fn verify_profiles(p: &ModelParams, prof: &ShapingProfiles, samples: usize) -> Result<(), BirthDeathError> {
    let (r1, r2, delta, a) = (p.r1, p.r2, p.delta, p.amplitude);
    let fail = |clause: &str| Err(BirthDeathError::Infeasible(clause.to_string()));
    let grid = |lo: f64, hi: f64| (0..samples).map(move |k| lo + (hi - lo) * (k as f64 + 0.5) / samples as f64);
    let top = 4.0 * r2;
    for s in grid(0.0, top) {
        let [e, de, _] = prof.eta.eval(s);
        if e < 0.0 {
            return fail("eta >= 0");
        }
        if de.abs() >= 2.0 * delta {
            return fail("|eta'| < 2 delta");
        }
        if (s <= r1 / 6.0 || s >= 2.5 * r2) && e != 0.0 {
            return fail("eta vanishes on [0, r1/6] and [5 r2/2, inf)");
        }
        if s > r1 / 6.0 && s < 2.5 * r2 && e <= 0.0 {
            return fail("eta > 0 on (r1/6, 5 r2/2)");
        }
        let [t, dt, _] = prof.eta_tilde.eval(s);
        if !(0.0..=1.0 + 1e-15).contains(&t) {
            return fail("0 <= eta_tilde <= 1");
        }
        if dt.abs() > 2.0 / r1 {
            return fail("|eta_tilde'| <= 2/r1");
        }
        if (s <= r1 / 6.0 || s >= 2.5 * r2) && t != 0.0 {
            return fail("eta_tilde vanishes on [0, r1/6] and [5 r2/2, inf)");
        }
    }
    for s in grid(r1, r2) {
        if (prof.eta.eval(s)[0] - delta * s).abs() > 1e-14 * delta * s.max(1.0) {
            return fail("eta(s) = delta s on (r1, r2)");
        }
        if (prof.eta_tilde.eval(s)[0] - 1.0).abs() > 1e-14 {
            return fail("eta_tilde = 1 on the plateau");
        }
    }
    let q = &prof.q;
    let d = r2 - r1;
    for s in grid(0.0, top) {
        let [v, dv, ddv] = q.eval(s);
        if a == 0.0 && v != 0.0 {
            return fail("q_0 = 0");
        }
        if s <= r1 && v != -0.5 * a * d * d {
            return fail("q_A = -A (r2 - r1)^2 / 2 on [0, r1]");
        }
        if s > r2 && v != 0.0 {
            return fail("q_A = 0 on (r2, inf)");
        }
        if dv < 0.0 || ddv.abs() > q.c2 * a * (1.0 + 1e-12) {
            return fail("q_A monotone with |q''| <= C2 A");
        }
    }
    let mid = 0.5 * (r1 + r2);
    if (q.eval(mid)[0] + 0.25 * a * d * d).abs() > 1e-13 * a.max(1.0) * d * d {
        return fail("q_A((r1 + r2)/2) = -A (r1 - r2)^2 / 4");
    }
    for s in grid(r1 + 0.49 * d, r1 + 0.51 * d) {
        let dv = q.eval(s)[1];
        if a > 0.0 && !(dv >= q.c1 * a * (1.0 - 1e-12) && dv <= 2.0 * q.c1 * a) {
            return fail("C1 A <= q_A' <= 2 C1 A on the middle band");
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn q_profile_is_c2_and_symmetric() {
        let q = QProfile::new(3.0, 0.04, 0.06);
        let d = 0.02;
        let mid = 0.05;
        for k in 1..200 {
            let x = d * 0.5 * k as f64 / 200.0;
            let (l, r) = (q.eval(mid - x), q.eval(mid + x));
            assert!((l[0] + r[0] + 0.5 * 3.0 * d * d).abs() < 1e-15);
            assert!((l[1] - r[1]).abs() < 1e-12);
        }
        for b in [0.04 + d / 4.0, 0.04 + 3.0 * d / 8.0, 0.06 - d / 4.0] {
            let e = 1e-11;
            let (l, r) = (q.eval(b - e), q.eval(b + e));
            for k in 0..3 {
                assert!((l[k] - r[k]).abs() < 1e-6 * (1.0 + l[k].abs()), "break {b} order {k}: {l:?} {r:?}");
            }
        }
    }

    #[test]
    fn slope_profile_derivatives_match_differences() {
        let p = SlopeProfile::from_knots(&[(0.0, 0.0), (1.0, 2.0), (2.0, 2.0)], &[(2.0, 2.0), (3.0, -4.0), (4.0, 0.0)]);
        for k in 1..400 {
            let s = 0.01 * k as f64;
            let h = 1e-6;
            let fd = (p.eval(s + h)[0] - p.eval(s - h)[0]) / (2.0 * h);
            let fd2 = (p.eval(s + h)[1] - p.eval(s - h)[1]) / (2.0 * h);
            assert!((fd - p.eval(s)[1]).abs() < 1e-8);
            assert!((fd2 - p.eval(s)[2]).abs() < 1e-6);
        }
    }
}
