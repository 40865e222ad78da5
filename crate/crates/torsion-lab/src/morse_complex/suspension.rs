//! Double suspension bookkeeping, the Gaussian normalisation probe and the
//! rank table of a suspended complex with a ball removed.

use super::{MorseError, Result};
use crate::graded_complex::{EulerData, GradedComplex};
use crate::linalg::{self, CMat};
use crate::quadrature::gauss_legendre;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone)]
pub struct SuspendedComplex {
    pub n: usize,
    pub t: f64,
    pub original: EulerData,
    /// The complex moved up by `n` degrees (degrees below `n` are zero).
    pub complex: GradedComplex,
    /// Predicted torsion change from the reindexing rule.
    pub torsion_shift: f64,
    /// `(2 pi T)^{-N/2}`, the prefactor of the stated closed-form map.
    pub power_factor: f64,
    /// `(2T/pi)^{N/2}`, the prefactor making the Gaussian a probability density.
    pub probability_factor: f64,
}

impl SuspendedComplex {
    pub fn shift_index(&self, index: usize) -> usize {
        index + self.n
    }

    pub fn euler(&self) -> EulerData {
        self.complex.euler()
    }

    /// `chi' + N chi` of the original, evaluated in integers.
    pub fn predicted_euler(&self) -> EulerData {
        let n = self.n as i64;
        EulerData { chi: self.original.chi, chi_prime: self.original.chi_prime + n * self.original.chi }
    }
}

fn check_even(n: usize) -> Result<()> {
    if n < 2 || n % 2 == 1 {
        return Err(MorseError::OddSuspension(n));
    }
    Ok(())
}

/// Prepends `n` zero degrees to `cx`.
fn shifted(cx: &GradedComplex, n: usize) -> Result<GradedComplex> {
    let mut ranks = vec![0; n];
    ranks.extend_from_slice(cx.ranks());
    let mut diffs: Vec<CMat> = (0..n).map(|k| linalg::zeros(ranks[k + 1], ranks[k])).collect();
    diffs.extend(cx.differentials().iter().cloned());
    let mut metrics: Vec<CMat> = (0..n).map(|_| linalg::zeros(0, 0)).collect();
    metrics.extend(cx.metrics().iter().cloned());
    Ok(GradedComplex::new(ranks, diffs, metrics)?)
}

/// Reindexing `k -> k + N` turns `(1/2) sum (-1)^k k L_k` into the same sum
/// plus `(N/2) sum (-1)^k L_k` for even `N`, where `L_k = log det' Delta_k`.
pub fn torsion_shift_rule(cx: &GradedComplex, n: usize) -> Result<f64> {
    let mut alt = 0.0;
    for (k, s) in cx.spectra()?.iter().enumerate() {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        alt += sign * s.nonzero().iter().map(|l| l.ln()).sum::<f64>();
    }
    Ok(0.5 * n as f64 * alt)
}

pub fn suspend(cx: &GradedComplex, n: usize, t: f64) -> Result<SuspendedComplex> {
    check_even(n)?;
    if !(t > 0.0) {
        return Err(MorseError::InvalidModel(format!("T must be positive, got {t}")));
    }
    let half = 0.5 * n as f64;
    Ok(SuspendedComplex {
        n,
        t,
        original: cx.euler(),
        complex: shifted(cx, n)?,
        torsion_shift: torsion_shift_rule(cx, n)?,
        power_factor: (2.0 * PI * t).powf(-half),
        probability_factor: (2.0 * t / PI).powf(half),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianProbe {
    pub n: usize,
    pub t: f64,
    pub t_prime: f64,
    /// Integral of the Gaussian representative at `T` and `T'` with the
    /// `(2 pi T)^{-N/2}` prefactor.
    pub power: [f64; 2],
    pub power_ratio: f64,
    /// The same with the `(2T/pi)^{N/2}` prefactor.
    pub probability: [f64; 2],
    pub probability_ratio: f64,
    /// Whether the ratio is 1 to `1e-10`, for each normalisation.
    pub power_t_independent: bool,
    pub probability_t_independent: bool,
}

/// `int_{R^N} e^{-2T|x|^2} dx` by Gauss-Legendre in the radius.
pub fn gaussian_integral(n: usize, t: f64) -> f64 {
    let half = 0.5 * n as f64;
    let sphere = 2.0 * PI.powf(half) / (1..n / 2).map(|k| k as f64).product::<f64>();
    let r_max = 9.0 / (2.0 * t).sqrt();
    let (x, w) = gauss_legendre(96, 0.0, r_max);
    let radial: f64 = x.iter().zip(&w).map(|(&r, &w)| w * (-2.0 * t * r * r).exp() * r.powi(n as i32 - 1)).sum();
    sphere * radial
}

pub fn gaussian_normalization_probe(n: usize, t: f64, t_prime: f64) -> Result<GaussianProbe> {
    check_even(n)?;
    if !(t > 0.0 && t_prime > 0.0) {
        return Err(MorseError::InvalidModel("T and T' must be positive".into()));
    }
    let half = 0.5 * n as f64;
    let raw = [gaussian_integral(n, t), gaussian_integral(n, t_prime)];
    let power = [raw[0] * (2.0 * PI * t).powf(-half), raw[1] * (2.0 * PI * t_prime).powf(-half)];
    let probability = [raw[0] * (2.0 * t / PI).powf(half), raw[1] * (2.0 * t_prime / PI).powf(half)];
    let power_ratio = power[0] / power[1];
    let probability_ratio = probability[0] / probability[1];
    Ok(GaussianProbe {
        n,
        t,
        t_prime,
        power,
        power_ratio,
        probability,
        probability_ratio,
        power_t_independent: (power_ratio - 1.0).abs() <= 1e-10,
        probability_t_independent: (probability_ratio - 1.0).abs() <= 1e-10,
    })
}

/// The birth-death pair that survives the ball removal, placed in degrees
/// `degree` and `degree + 1` and joined by `c * I`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BallPair {
    pub degree: usize,
    pub c: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankTable {
    pub n: usize,
    pub m: usize,
    /// Cohomology ranks of the modified complex.
    pub computed: Vec<usize>,
    /// The three-case prediction: suspended `H^l` for `l >= N`, zero for
    /// `1 < l < N`, `m` at `l = 1` (zero everywhere below `N` without a ball).
    pub expected: Vec<usize>,
}

impl RankTable {
    pub fn matches(&self) -> bool {
        self.computed == self.expected
    }
}

/// Cohomology of `suspend(cx) + C^m[1] + (F_{v} -> F_{w})`, where the
/// index-one generator carries the zero differential and the pair is
/// acyclic. With `ball = None` this is the plain suspension.
pub fn ball_removed_ranks(cx: &GradedComplex, m: usize, n: usize, ball: Option<BallPair>) -> Result<RankTable> {
    check_even(n)?;
    let base = cx.betti()?;
    let sus = shifted(cx, n)?;
    let mut ranks = sus.ranks().to_vec();
    if let Some(b) = ball {
        if b.degree < n {
            return Err(MorseError::InvalidModel(format!("the pair must sit in degree >= N = {n}, got {}", b.degree)));
        }
        if b.c == 0.0 {
            return Err(MorseError::InvalidModel("the pair coupling c must be nonzero".into()));
        }
        if ranks.len() < b.degree + 2 {
            ranks.resize(b.degree + 2, 0);
        }
    }
    let top = ranks.len();
    let mut extra = vec![0usize; top];
    if let Some(b) = ball {
        extra[1] += m;
        extra[b.degree] += m;
        extra[b.degree + 1] += m;
    }
    let total: Vec<usize> = ranks.iter().zip(&extra).map(|(a, b)| a + b).collect();
    let mut diffs = Vec::with_capacity(top - 1);
    for k in 0..top - 1 {
        let mut d = linalg::zeros(total[k + 1], total[k]);
        if k < sus.differentials().len() {
            let s = sus.differential(k);
            d.view_mut((0, 0), (s.nrows(), s.ncols())).copy_from(s);
        }
        if let Some(b) = ball {
            if k == b.degree {
                // The pair occupies the last m slots of both degrees.
                let (r0, c0) = (total[k + 1] - m, total[k] - m);
                let mut view = d.view_mut((r0, c0), (m, m));
                view += linalg::eye(m) * linalg::c(b.c, 0.0);
            }
        }
        diffs.push(d);
    }
    let computed = GradedComplex::standard(total, diffs)?.betti()?;
    let expected = (0..top)
        .map(|l| {
            if l >= n {
                base.get(l - n).copied().unwrap_or(0)
            } else if l == 1 && ball.is_some() {
                m
            } else {
                0
            }
        })
        .collect();
    Ok(RankTable { n, m, computed, expected })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn circle_trivial() -> GradedComplex {
        GradedComplex::standard(vec![1, 1], vec![linalg::zeros(1, 1)]).unwrap()
    }

    #[test]
    fn odd_suspension_rejected() {
        assert_eq!(suspend(&circle_trivial(), 3, 1.0).unwrap_err(), MorseError::OddSuspension(3));
        assert!(gaussian_normalization_probe(0, 1.0, 1.0).is_err());
    }

    #[test]
    fn gaussian_integral_closed_form() {
        for n in [2, 4, 6] {
            for t in [0.3, 1.0, 7.0] {
                let exact = (PI / (2.0 * t)).powf(0.5 * n as f64);
                assert!((gaussian_integral(n, t) / exact - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn index_of_minimum_moves_up() {
        let s = suspend(&circle_trivial(), 4, 1.0).unwrap();
        assert_eq!(s.shift_index(0), 4);
        assert_eq!(s.complex.betti().unwrap(), vec![0, 0, 0, 0, 1, 1]);
    }
}
