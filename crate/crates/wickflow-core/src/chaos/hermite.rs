//! Hermite polynomials, L2-orthonormal Hermite functions, and the canonical
//! Brownian-motion / white-noise expansions built from them.
//!
//! Polynomials are the probabilists' family `h_{n+1}(x) = x h_n(x) - n h_{n-1}(x)`.
//! Functions `xi_n`, n >= 1, are the Gaussian-weighted physicists' family
//! normalized in L2(R), evaluated through the stable orthonormal recurrence.

use crate::chaos::{ChaosExpansion, Coeff, Kind};
use crate::multiindex::MultiIndex;
use crate::quad::adaptive_simpson;

/// Probabilists' Hermite polynomial `h_n(x)`, n >= 0.
pub fn hermite_poly(n: u32, x: f64) -> f64 {
    let mut prev = 1.0;
    if n == 0 {
        return prev;
    }
    let mut cur = x;
    for k in 1..n {
        let next = x * cur - k as f64 * prev;
        prev = cur;
        cur = next;
    }
    cur
}

// phi_k, k >= 0: orthonormal Hermite function of degree k.
// phi_{k+1} = x sqrt(2/(k+1)) phi_k - sqrt(k/(k+1)) phi_{k-1}.
fn phi_upto(deg: usize, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(deg + 1);
    let phi0 = std::f64::consts::PI.powf(-0.25) * (-0.5 * x * x).exp();
    out.push(phi0);
    if deg == 0 {
        return out;
    }
    out.push(std::f64::consts::SQRT_2 * x * phi0);
    for k in 1..deg {
        let kf = k as f64;
        let next = x * (2.0 / (kf + 1.0)).sqrt() * out[k] - (kf / (kf + 1.0)).sqrt() * out[k - 1];
        out.push(next);
    }
    out
}

/// Hermite function `xi_n(x)`, n >= 1 (so `xi_n` has polynomial degree n-1).
pub fn hermite_fn(n: u32, x: f64) -> f64 {
    assert!(n >= 1, "Hermite functions are indexed from 1");
    phi_upto(n as usize - 1, x)[n as usize - 1]
}

/// First derivative of `xi_n`, via `phi_k' = sqrt(k/2) phi_{k-1} - sqrt((k+1)/2) phi_{k+1}`.
pub fn hermite_fn_deriv(n: u32, x: f64) -> f64 {
    assert!(n >= 1);
    let k = n as usize - 1;
    let phis = phi_upto(k + 1, x);
    let lower = if k == 0 { 0.0 } else { (k as f64 / 2.0).sqrt() * phis[k - 1] };
    lower - ((k as f64 + 1.0) / 2.0).sqrt() * phis[k + 1]
}

/// Evaluation context for a fixed range of degrees and modes.
#[derive(Clone, Debug)]
pub struct HermiteBasis {
    pub max_degree: u32,
    pub max_mode: u32,
}

impl HermiteBasis {
    pub fn new(max_degree: u32, max_mode: u32) -> Self {
        HermiteBasis { max_degree, max_mode }
    }

    /// All `xi_1(x) .. xi_max_mode(x)` in one recurrence pass.
    pub fn functions_at(&self, x: f64) -> Vec<f64> {
        phi_upto(self.max_mode as usize - 1, x)
    }

    /// Gram matrix of `xi_1..xi_max_mode` by composite quadrature on a
    /// truncated line; the functions decay like exp(-x^2/2) outside the
    /// classical turning points.
    pub fn gram_matrix(&self) -> nalgebra::DMatrix<f64> {
        let m = self.max_mode as usize;
        let half_width = (2.0 * (self.max_mode as f64 + 1.0)).sqrt() + 10.0;
        let steps = (half_width * 2.0 / 0.01).ceil() as usize;
        let h = 2.0 * half_width / steps as f64;
        let mut gram = nalgebra::DMatrix::zeros(m, m);
        // trapezoid is spectrally accurate here: smooth, rapidly decaying
        for s in 0..=steps {
            let x = -half_width + s as f64 * h;
            let w = if s == 0 || s == steps { 0.5 * h } else { h };
            let vals = self.functions_at(x);
            for i in 0..m {
                for j in i..m {
                    gram[(i, j)] += w * vals[i] * vals[j];
                }
            }
        }
        for i in 0..m {
            for j in 0..i {
                gram[(i, j)] = gram[(j, i)];
            }
        }
        gram
    }
}

/// Chaos coefficients of Brownian motion at time `t`:
/// coefficient `int_0^t xi_k(s) ds` at `eps_k`, k = 1..modes.
pub fn brownian_coeffs(t: f64, modes: u32) -> ChaosExpansion {
    assert!(t >= 0.0);
    let mut e = ChaosExpansion::new(Kind::Scalar);
    for k in 1..=modes {
        let c = adaptive_simpson(&|s| hermite_fn(k, s), 0.0, t, 1e-12);
        e.set(MultiIndex::unit(k as usize), Coeff::Scalar(c)).unwrap();
    }
    e
}

/// Chaos coefficients of white noise at time `t`: `xi_k(t)` at `eps_k`.
pub fn white_noise_coeffs(t: f64, modes: u32) -> ChaosExpansion {
    let mut e = ChaosExpansion::new(Kind::Scalar);
    let phis = phi_upto(modes as usize - 1, t);
    for k in 1..=modes as usize {
        e.set(MultiIndex::unit(k), Coeff::Scalar(phis[k - 1])).unwrap();
    }
    e
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chaos::KondratievNorm;
    use crate::quad::gauss_legendre;

    #[test]
    fn poly_recurrence_values() {
        // h_2(x) = x^2 - 1
        assert_eq!(hermite_poly(2, 2.0), 3.0);
        assert_eq!(hermite_poly(0, 5.0), 1.0);
        assert_eq!(hermite_poly(1, -1.5), -1.5);
        // h_3(x) = x^3 - 3x
        assert!((hermite_poly(3, 2.0) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn functions_normalized() {
        let sq = |x: f64| hermite_fn(1, x).powi(2);
        let v = gauss_legendre(&sq, -12.0, 12.0, 48);
        assert!((v - 1.0).abs() < 1e-10);
    }

    #[test]
    fn functions_orthogonal() {
        let prod = |x: f64| hermite_fn(1, x) * hermite_fn(2, x);
        let v = gauss_legendre(&prod, -12.0, 12.0, 48);
        assert!(v.abs() < 1e-10);
    }

    #[test]
    fn gram_is_identity() {
        let basis = HermiteBasis::new(16, 16);
        let g = basis.gram_matrix();
        for i in 0..16 {
            for j in 0..16 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!(
                    (g[(i, j)] - expect).abs() < 1e-8,
                    "gram[{i}][{j}] = {}",
                    g[(i, j)]
                );
            }
        }
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let h = 1e-6;
        for n in [1u32, 2, 5, 12] {
            for &x in &[-1.3, 0.0, 0.7, 2.4] {
                let fd = (hermite_fn(n, x + h) - hermite_fn(n, x - h)) / (2.0 * h);
                assert!((hermite_fn_deriv(n, x) - fd).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn brownian_examples() {
        let b0 = brownian_coeffs(0.0, 8);
        assert!(b0.is_empty());

        let b = brownian_coeffs(1.0, 64);
        assert!(b.expectation().is_none());
        // Parseval: the coefficients are the xi-basis coefficients of the
        // indicator of [0, 1], so their squared sum increases to t = 1.
        // The tail decays slowly (like modes^{-1/2}), hence the loose band.
        let var = |e: &ChaosExpansion| -> f64 {
            e.iter().map(|(_, c)| c.as_scalar().unwrap().powi(2)).sum()
        };
        let v64 = var(&b);
        let v256 = var(&brownian_coeffs(1.0, 256));
        assert!(v64 < v256 && v256 < 1.0, "not increasing: {v64} {v256}");
        assert!((v64 - 1.0).abs() < 0.06, "variance {v64}");
        assert!((v256 - 1.0).abs() < 0.03, "variance {v256}");
    }

    #[test]
    fn white_noise_examples() {
        let w = white_noise_coeffs(0.0, 128);
        // support is exactly the first-order indices with nonzero xi_k(0)
        for a in w.support() {
            assert_eq!(a.length(), 1);
        }
        assert!(w.expectation().is_none());
        // the weighted norm stays bounded as modes grow, for p >= 5/6
        let n64 = white_noise_coeffs(0.0, 64)
            .kondratiev_norm_sq(KondratievNorm::distribution(5.0 / 6.0))
            .unwrap();
        let n128 = w.kondratiev_norm_sq(KondratievNorm::distribution(5.0 / 6.0)).unwrap();
        assert!(n128.is_finite());
        assert!(n128 - n64 < 0.05, "tail growth {}", n128 - n64);
    }
}
