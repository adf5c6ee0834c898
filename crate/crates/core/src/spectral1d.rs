//! Spectral fractional Laplacian with zero Dirichlet data on `[0, lambda]`
//! and its extension to the half strip.
//!
//! Functions are expanded in the orthonormal basis
//! `zeta_k(s) = sqrt(2/lambda) sin(k pi s / lambda)` with eigenvalues
//! `mu_k = (k pi / lambda)^2`.

use std::f64::consts::PI;

use crate::error::{domain, invalid, Result};
use crate::numerics::Dst1;
use crate::specfun::{c_alpha, neumann_trace, ExtensionProfile};

/// Coefficients `a_1..a_K` of a function on `[0, lambda]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SineExpansion {
    pub lambda: f64,
    pub coeffs: Vec<f64>,
}

impl SineExpansion {
    pub fn new(lambda: f64, coeffs: Vec<f64>) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return domain(format!("interval length must be positive, got {lambda}"));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return invalid("non-finite sine coefficient");
        }
        Ok(Self { lambda, coeffs })
    }

    /// `mu_k = (k pi / lambda)^2` for `k = 1..=K`.
    pub fn eigenvalue(&self, k: usize) -> f64 {
        let r = k as f64 * PI / self.lambda;
        r * r
    }

    /// `zeta_k(s)`.
    pub fn basis(&self, k: usize, s: f64) -> f64 {
        (2.0 / self.lambda).sqrt() * (k as f64 * PI * s / self.lambda).sin()
    }

    /// Point evaluation of the expansion.
    pub fn eval(&self, s: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(i, a)| a * self.basis(i + 1, s))
            .sum()
    }

    /// Sum of squared coefficients (the `L^2` norm squared).
    pub fn norm_sq(&self) -> f64 {
        self.coeffs.iter().map(|a| a * a).sum()
    }
}

fn endpoint_scale(samples: &[f64]) -> f64 {
    samples.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE)
}

/// Expands samples `u(s_j)`, `s_j = j lambda / N`, `j = 0..=N`, into `N - 1` modes.
///
/// The endpoint samples must vanish (relative to the sup of the samples).
pub fn analyze(lambda: f64, samples: &[f64]) -> Result<SineExpansion> {
    if samples.len() < 3 {
        return invalid("need at least three samples");
    }
    let n = samples.len() - 1;
    let scale = endpoint_scale(samples);
    if samples[0].abs() > 1e-12 * scale || samples[n].abs() > 1e-12 * scale {
        return invalid("samples do not vanish at the endpoints");
    }
    let mut interior = samples[1..n].to_vec();
    Dst1::new(n).apply(&mut interior);
    let factor = lambda / n as f64 * (2.0 / lambda).sqrt();
    for c in &mut interior {
        *c *= factor;
    }
    SineExpansion::new(lambda, interior)
}

/// Samples of the expansion on the uniform grid with `N` intervals.
pub fn synthesize_uniform(exp: &SineExpansion, n: usize) -> Vec<f64> {
    let mut interior = vec![0.0; n - 1];
    for (dst, a) in interior.iter_mut().zip(&exp.coeffs) {
        *dst = *a;
    }
    Dst1::new(n).apply(&mut interior);
    let factor = (2.0 / exp.lambda).sqrt();
    let mut out = Vec::with_capacity(n + 1);
    out.push(0.0);
    out.extend(interior.iter().map(|v| v * factor));
    out.push(0.0);
    out
}

/// Samples of the expansion at arbitrary points.
pub fn synthesize(exp: &SineExpansion, s_grid: &[f64]) -> Vec<f64> {
    s_grid.iter().map(|&s| exp.eval(s)).collect()
}

/// `(-Delta)^alpha`: multiplies `a_k` by `mu_k^alpha`.
pub fn frac_laplacian(exp: &SineExpansion, alpha: f64) -> Result<SineExpansion> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return domain(format!("alpha={alpha} outside (0,1)"));
    }
    let coeffs = exp
        .coeffs
        .iter()
        .enumerate()
        .map(|(i, a)| a * exp.eigenvalue(i + 1).powf(alpha))
        .collect();
    Ok(SineExpansion { lambda: exp.lambda, coeffs })
}

/// Values of the `alpha`-harmonic extension at height `y` and positions `s_grid`.
pub fn extend(exp: &SineExpansion, alpha: f64, y: f64, s_grid: &[f64]) -> Result<Vec<f64>> {
    if !(y >= 0.0) {
        return domain(format!("height must be nonnegative, got {y}"));
    }
    let profile = ExtensionProfile::decaying(alpha)?;
    let damped = exp
        .coeffs
        .iter()
        .enumerate()
        .map(|(i, a)| Ok(a * profile.value(exp.eigenvalue(i + 1).sqrt() * y)?))
        .collect::<Result<Vec<f64>>>()?;
    let ext = SineExpansion { lambda: exp.lambda, coeffs: damped };
    Ok(synthesize(&ext, s_grid))
}

/// `-(1/c_alpha) lim_{y->0} y^{1-2 alpha} d/dy` of the extension, mode by mode.
///
/// Each mode contributes `mu_k^alpha` times the extrapolated weighted
/// derivative of the profile at the origin, divided by `c_alpha`.
pub fn neumann_derivative(exp: &SineExpansion, alpha: f64) -> Result<SineExpansion> {
    let trace = neumann_trace(alpha)?.value;
    let c = c_alpha(alpha)?;
    let coeffs = exp
        .coeffs
        .iter()
        .enumerate()
        .map(|(i, a)| {
            // y^{1-2a} d/dy phi(sqrt(mu) y) = mu^a z^{1-2a} phi'(z), z = sqrt(mu) y
            a * exp.eigenvalue(i + 1).powf(alpha) * trace / c
        })
        .collect();
    Ok(SineExpansion { lambda: exp.lambda, coeffs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid(lambda: f64, n: usize) -> Vec<f64> {
        (0..=n).map(|j| lambda * j as f64 / n as f64).collect()
    }

    #[test]
    fn single_mode_coefficient() {
        let lambda = 4.0;
        let s = grid(lambda, 64);
        let u: Vec<f64> = s.iter().map(|&s| (PI * s / lambda).sin()).collect();
        let e = analyze(lambda, &u).unwrap();
        assert!((e.coeffs[0] - (lambda / 2.0).sqrt()).abs() < 1e-13);
        assert!(e.coeffs[1..].iter().all(|c| c.abs() < 1e-13));
        let z = analyze(lambda, &vec![0.0; 65]).unwrap();
        assert!(z.coeffs.iter().all(|&c| c == 0.0));
    }

    #[test]
    fn rejects_nonzero_endpoints() {
        let u = vec![1.0, 0.5, 0.2, 0.0];
        assert!(analyze(1.0, &u).is_err());
    }

    #[test]
    fn random_band_limited_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let lambda = 2.5;
        let n = 96;
        let coeffs: Vec<f64> = (0..n - 1)
            .map(|k| if k < 30 { rng.gen_range(-1.0..1.0) } else { 0.0 })
            .collect();
        let e = SineExpansion::new(lambda, coeffs).unwrap();
        let u = synthesize_uniform(&e, n);
        let direct = synthesize(&e, &grid(lambda, n));
        let back = analyze(lambda, &u).unwrap();
        for (a, b) in back.coeffs.iter().zip(&e.coeffs) {
            assert!((a - b).abs() < 1e-12);
        }
        for (a, b) in u.iter().zip(&direct) {
            assert!((a - b).abs() < 1e-12);
        }
        // Parseval against the discrete L^2 norm
        let h = lambda / n as f64;
        let l2: f64 = u.iter().map(|v| v * v * h).sum();
        assert!((l2 - e.norm_sq()).abs() < 1e-11 * l2);
    }

    #[test]
    fn fractional_laplacian_on_modes() {
        let lambda = 3.0;
        let s = grid(lambda, 48);
        let u: Vec<f64> = s
            .iter()
            .map(|&s| (PI * s / lambda).sin() + (2.0 * PI * s / lambda).sin())
            .collect();
        for alpha in [0.25, 0.5, 0.8] {
            let lu = synthesize(&frac_laplacian(&analyze(lambda, &u).unwrap(), alpha).unwrap(), &s);
            for (i, &si) in s.iter().enumerate() {
                let exact = (PI / lambda).powf(2.0 * alpha) * (PI * si / lambda).sin()
                    + (2.0 * PI / lambda).powf(2.0 * alpha) * (2.0 * PI * si / lambda).sin();
                assert!((lu[i] - exact).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn extension_of_first_mode() {
        let lambda = 4.0;
        let s = grid(lambda, 32);
        let u: Vec<f64> = s.iter().map(|&s| (PI * s / lambda).sin()).collect();
        let e = analyze(lambda, &u).unwrap();
        for y in [0.0, 0.3, 1.0, 4.0] {
            let v = extend(&e, 0.5, y, &s).unwrap();
            for (i, &si) in s.iter().enumerate() {
                let exact = (PI * si / lambda).sin() * (-PI * y / lambda).exp();
                assert!((v[i] - exact).abs() < 1e-12, "y={y}");
            }
        }
        let v0 = extend(&e, 0.3, 0.0, &s).unwrap();
        for (a, b) in v0.iter().zip(&u) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn extension_solves_weighted_equation_at_second_order() {
        // Five-point residual of div(y^{1-2a} grad v) at a fixed interior point.
        let alpha = 0.3;
        let lambda = 3.0;
        let e = SineExpansion::new(lambda, vec![1.0, 0.4, -0.2]).unwrap();
        let (s0, y0) = (1.1, 0.7);
        let v = |s: f64, y: f64| extend(&e, alpha, y, &[s]).unwrap()[0];
        let w = |y: f64| y.powf(1.0 - 2.0 * alpha);
        let residual = |h: f64| {
            let lap_s = w(y0) * (v(s0 + h, y0) - 2.0 * v(s0, y0) + v(s0 - h, y0)) / (h * h);
            let up = w(y0 + 0.5 * h) * (v(s0, y0 + h) - v(s0, y0));
            let down = w(y0 - 0.5 * h) * (v(s0, y0) - v(s0, y0 - h));
            lap_s + (up - down) / (h * h)
        };
        let r1 = residual(0.04).abs();
        let r2 = residual(0.02).abs();
        assert!(r1 < 1e-2);
        let order = (r1 / r2).log2();
        assert!(order > 1.8, "order {order}");
    }

    #[test]
    fn neumann_matches_fractional_laplacian() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let coeffs: Vec<f64> = (0..8).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let e = SineExpansion::new(5.0, coeffs).unwrap();
        for alpha in [0.25, 0.5, 0.75] {
            let a = neumann_derivative(&e, alpha).unwrap();
            let b = frac_laplacian(&e, alpha).unwrap();
            for (x, y) in a.coeffs.iter().zip(&b.coeffs) {
                assert!((x - y).abs() < 1e-10 * y.abs().max(1.0));
            }
        }
        let zero = SineExpansion::new(5.0, vec![0.0; 4]).unwrap();
        assert!(neumann_derivative(&zero, 0.5).unwrap().coeffs.iter().all(|&c| c == 0.0));
    }

    proptest! {
        #[test]
        fn half_powers_compose(alpha in 0.05f64..0.95, c in prop::collection::vec(-1.0f64..1.0, 1..10)) {
            let e = SineExpansion::new(2.0, c).unwrap();
            let twice = frac_laplacian(&frac_laplacian(&e, alpha / 2.0).unwrap(), alpha / 2.0).unwrap();
            let once = frac_laplacian(&e, alpha).unwrap();
            for (a, b) in twice.coeffs.iter().zip(&once.coeffs) {
                prop_assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
            }
        }

        #[test]
        fn synthesized_samples_vanish_at_ends(c in prop::collection::vec(-1.0f64..1.0, 1..20)) {
            let e = SineExpansion::new(1.7, c).unwrap();
            let u = synthesize(&e, &[0.0, 1.7]);
            prop_assert!(u[0].abs() < 1e-12 && u[1].abs() < 1e-12);
        }
    }
}
