//! Principal-value quadrature of
//! `H_E(x0) = PV int (chi_E - chi_{E^c})(x) / |x - x0|^{3 + 2 alpha} dx`.
//!
//! The integral is taken over spherical shells `delta <= |x - x0| <= rho_max`.
//! Each shell is cut into horizontal rings; on a ring the arcs inside `E` are
//! located by bisection on the classifier, so a ring contributes its exact
//! signed arc length up to the bisection tolerance. Rings are integrated in
//! the axial coordinate and shells in `log rho`, both adaptively.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use super::kronrod::{integrate, Integral};
use super::{check_alpha, norm, symmetry_map, Region, RegionLabel, ScrewSurface};
use crate::error::{domain, Error, Result};
use crate::numerics::{compensated_sum, gauss_legendre_on};

/// Resolution and truncation of the principal-value quadrature.
#[derive(Debug, Clone, PartialEq)]
pub struct PVQuadrature {
    /// Exclusion radii, strictly decreasing.
    pub deltas: Vec<f64>,
    pub rho_max: f64,
    /// Classifier samples per ring before bisection; each ring is sampled
    /// at twice this density and compared against this one.
    pub ring_samples: usize,
    /// Absolute tolerance for the axial integral of one shell.
    pub shell_tol: f64,
    /// Absolute tolerance for the radial integral.
    pub radial_tol: f64,
    /// Azimuthal offset of the ring samples, as a fraction of their spacing.
    pub jitter: f64,
    /// Axial Gauss nodes per hemisphere for the paired sum.
    pub paired_axial: usize,
}

impl PVQuadrature {
    pub fn new(deltas: Vec<f64>, rho_max: f64) -> Self {
        Self {
            deltas,
            rho_max,
            ring_samples: 64,
            shell_tol: 1e-6,
            radial_tol: 1e-5,
            jitter: 0.618_033_988_749_894_8,
            paired_axial: 24,
        }
    }

    /// Radii `0.1 / 2^k`, `k = 0..4`, and `rho_max = 12 max(1, |x0|)`.
    pub fn default_for(x0_norm: f64) -> Self {
        Self::new(vec![0.1, 0.05, 0.025, 0.0125], 12.0 * x0_norm.max(1.0))
    }

    fn check(&self, x0_norm: f64) -> Result<()> {
        let d = &self.deltas;
        if d.len() < 2 {
            return domain("need at least two exclusion radii");
        }
        if !d.iter().all(|&v| v > 0.0 && v.is_finite()) || d.windows(2).any(|w| w[1] >= w[0]) {
            return domain("exclusion radii must be positive and strictly decreasing");
        }
        if !(self.rho_max > 10.0 * x0_norm.max(1.0)) || !self.rho_max.is_finite() {
            return domain(format!("rho_max = {} must exceed 10 max(1, |x0|)", self.rho_max));
        }
        if !(d[0] < self.rho_max) {
            return domain("largest exclusion radius must be below rho_max");
        }
        if self.ring_samples < 8 || !(self.shell_tol > 0.0 && self.radial_tol > 0.0) {
            return domain("invalid quadrature resolution");
        }
        if !(0.0..1.0).contains(&self.jitter) {
            return domain("jitter must lie in [0, 1)");
        }
        Ok(())
    }
}

/// Principal value with its error budget.
#[derive(Debug, Clone, PartialEq)]
pub struct NmcEstimate {
    /// Extrapolated to `delta -> 0`, truncated at `rho_max`.
    pub value: f64,
    /// Difference between the two highest extrapolation orders.
    pub pv_extrapolation_error: f64,
    /// Integration error estimate propagated through the extrapolation,
    /// including a rounding floor.
    pub quadrature_error: f64,
    /// Bound on the neglected integral over `|x - x0| > rho_max`.
    pub tail_bound: f64,
    /// Classifier evaluations.
    pub node_count: usize,
    pub deltas: Vec<f64>,
    /// Integral over `delta_i <= |x - x0| <= rho_max` for each radius.
    pub truncated: Vec<f64>,
    pub rho_max: f64,
}

impl NmcEstimate {
    /// Extrapolation plus quadrature error; the truncation bound is separate.
    pub fn numerical_error(&self) -> f64 {
        self.pv_extrapolation_error + self.quadrature_error
    }
}

const AXIAL_SPLIT: f64 = 0.137_2;

struct Rings<'a, R: Region + ?Sized> {
    region: &'a R,
    x0: [f64; 3],
    samples: usize,
    offset: f64,
}

impl<R: Region + ?Sized> Rings<'_, R> {
    fn sign_at(&self, rc: f64, h: f64, phi: f64) -> f64 {
        let (s, c) = phi.sin_cos();
        self.region.label([self.x0[0] + rc * c, self.x0[1] + rc * s, self.x0[2] + h]).sign()
    }

    /// `int_0^{2 pi} (chi_E - chi_{E^c})` on the ring at radius `rc`, height `h`,
    /// its discrepancy against every other sample, and classifier calls.
    ///
    /// An arc shorter than the sample spacing can be missed; halving the
    /// samples shows how much such arcs contribute.
    fn ring(&self, rc: f64, h: f64) -> (f64, f64, usize) {
        if rc == 0.0 {
            return (2.0 * PI * self.sign_at(0.0, h, 0.0), 0.0, 1);
        }
        let m = 2 * self.samples;
        let dphi = 2.0 * PI / m as f64;
        let phis: Vec<f64> = (0..=m).map(|i| self.offset + dphi * i as f64).collect();
        let mut signs: Vec<f64> = phis[..m].iter().map(|&p| self.sign_at(rc, h, p)).collect();
        signs.push(signs[0]);
        let mut calls = m;
        let mut arcs = Vec::with_capacity(m);
        for i in 0..m {
            let (la, lb) = (signs[i], signs[i + 1]);
            if la == lb {
                arcs.push(la * dphi);
                continue;
            }
            let (mut a, mut b) = (phis[i], phis[i + 1]);
            while b - a > 1e-13 {
                let c = 0.5 * (a + b);
                let lc = self.sign_at(rc, h, c);
                calls += 1;
                if lc == la {
                    a = c;
                } else if lc == lb {
                    b = c;
                } else {
                    // inside the boundary band: the crossing is here
                    a = c;
                    b = c;
                }
            }
            let cut = 0.5 * (a + b);
            arcs.push(la * (cut - phis[i]) + lb * (phis[i + 1] - cut));
        }
        let (mut fine, mut coarse) = (0.0, 0.0);
        for i in (0..m).step_by(2) {
            let pair = arcs[i] + arcs[i + 1];
            fine += pair;
            coarse += if signs[i] == signs[i + 2] { signs[i] * 2.0 * dphi } else { pair };
        }
        (fine, (fine - coarse).abs(), calls)
    }

    /// `A(rho) = int_{S^2} (chi_E - chi_{E^c})(x0 + rho w) dw` and its error.
    fn shell(&self, rho: f64, tol: f64) -> Integral {
        let f = |z: f64| {
            let rc = rho * (1.0 - z * z).max(0.0).sqrt();
            self.ring(rc, rho * z)
        };
        // Split off-center: with panels symmetric about z = 0 an integrand odd
        // in z would cancel node by node, whatever the resolution.
        let lower = integrate(&f, -1.0, AXIAL_SPLIT, tol * (1.0 + AXIAL_SPLIT) / 2.0, 30, false);
        let upper = integrate(&f, AXIAL_SPLIT, 1.0, tol * (1.0 - AXIAL_SPLIT) / 2.0, 30, false);
        Integral { value: lower.value + upper.value, error: lower.error + upper.error, calls: lower.calls + upper.calls }
    }
}

/// Weights `c` with `sum c_i V_i` the value at `delta = 0` of the fit
/// `V(delta) = V0 + sum_k a_k delta^{k - 2 alpha}` through all given points.
fn extrapolation_weights(deltas: &[f64], alpha: f64) -> Result<Vec<f64>> {
    let n = deltas.len();
    let m = DMatrix::from_fn(n, n, |i, k| if k == 0 { 1.0 } else { deltas[i].powf(k as f64 - 2.0 * alpha) });
    let mut e1 = DVector::zeros(n);
    e1[0] = 1.0;
    let c = m
        .transpose()
        .lu()
        .solve(&e1)
        .ok_or_else(|| Error::Numerical("singular extrapolation system".into()))?;
    Ok(c.iter().copied().collect())
}

/// Nonlocal mean curvature of `E` at the surface point `x0`, with the
/// convention `chi_E - chi_{E^c}` in the numerator.
pub fn nmc_at<R: Region + ?Sized>(region: &R, x0: [f64; 3], alpha: f64, quad: &PVQuadrature) -> Result<NmcEstimate> {
    check_alpha(alpha)?;
    quad.check(norm(x0))?;
    if region.label(x0) != RegionLabel::Boundary {
        return domain(format!("{x0:?} does not lie on the surface"));
    }
    let rings = Rings {
        region,
        x0,
        samples: quad.ring_samples,
        offset: quad.jitter * 2.0 * PI / quad.ring_samples as f64,
    };
    let radial = |u: f64| {
        let rho = u.exp();
        let w = rho.powf(-2.0 * alpha);
        let s = rings.shell(rho, quad.shell_tol);
        (w * s.value, w * s.error, s.calls)
    };

    // pieces [delta_i, delta_{i-1}] and [delta_0, rho_max] in log radius
    let d = &quad.deltas;
    let (u_lo, u_hi) = (d[d.len() - 1].ln(), quad.rho_max.ln());
    let span = u_hi - u_lo;
    let piece = |a: f64, b: f64| {
        let panels = ((b - a) / std::f64::consts::LN_2).ceil().max(1.0) as usize;
        let mut out = Integral::default();
        for p in 0..panels {
            let lo = a + (b - a) * p as f64 / panels as f64;
            let hi = a + (b - a) * (p + 1) as f64 / panels as f64;
            let r = integrate(&radial, lo, hi, quad.radial_tol * (hi - lo) / span, 24, true);
            out.value += r.value;
            out.error += r.error;
            out.calls += r.calls;
        }
        out
    };
    let outer = piece(d[0].ln(), u_hi);
    let mut truncated = vec![outer.value];
    let mut error = outer.error;
    let mut calls = outer.calls;
    for w in d.windows(2) {
        let r = piece(w[1].ln(), w[0].ln());
        truncated.push(truncated.last().unwrap() + r.value);
        error += r.error;
        calls += r.calls;
    }
    // rounding floor from summing terms of size up to 4 pi rho^{-2 alpha}
    let abs_scale = 4.0 * PI * (d[d.len() - 1].powf(-2.0 * alpha) - quad.rho_max.powf(-2.0 * alpha)) / (2.0 * alpha);
    error += 64.0 * f64::EPSILON * abs_scale;

    // a principal value converges: successive increments must shrink
    let incs: Vec<f64> = truncated.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    for w in incs.windows(2) {
        if w[1] > w[0] && w[1] > 10.0 * error {
            return Err(Error::Numerical(format!(
                "principal value does not converge as delta -> 0 (increments {:.3e} -> {:.3e})",
                w[0], w[1]
            )));
        }
    }

    let n = d.len();
    let full = extrapolation_weights(d, alpha)?;
    let lower = extrapolation_weights(&d[1..], alpha)?;
    let value = compensated_sum(full.iter().zip(&truncated).map(|(c, v)| c * v));
    let lower_value = compensated_sum(lower.iter().zip(&truncated[1..]).map(|(c, v)| c * v));
    let amplification: f64 = full.iter().map(|c| c.abs()).sum();
    debug_assert_eq!(full.len(), n);
    Ok(NmcEstimate {
        value,
        pv_extrapolation_error: (value - lower_value).abs(),
        quadrature_error: amplification * error,
        tail_bound: 2.0 * PI * quad.rho_max.powf(-2.0 * alpha) / alpha,
        node_count: calls,
        deltas: d.clone(),
        truncated,
        rho_max: quad.rho_max,
    })
}

/// Result of summing integrand samples in pairs `{x, f(x)}`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedSum {
    pub value: f64,
    /// Sum of the absolute values of all paired terms.
    pub scale: f64,
    pub node_count: usize,
}

impl PairedSum {
    pub fn relative(&self) -> f64 {
        if self.scale == 0.0 {
            0.0
        } else {
            self.value.abs() / self.scale
        }
    }
}

/// Integral over `delta_min <= |x - x0| <= rho_max`, `x0 = (t0, 0, 0)`, with
/// each node `x` in the upper half-shell paired with its mirror `f(x)`: `x`
/// is classified by `plus`, `f(x)` by `image`.
pub fn symmetrized_pairing(plus: &ScrewSurface, image: &ScrewSurface, t0: f64, alpha: f64, quad: &PVQuadrature) -> Result<PairedSum> {
    check_alpha(alpha)?;
    if !(t0 >= 0.0 && t0.is_finite()) {
        return domain("t0 must be a finite nonnegative number");
    }
    quad.check(t0)?;
    let x0 = [t0, 0.0, 0.0];
    let (u_lo, u_hi) = (quad.deltas[quad.deltas.len() - 1].ln(), quad.rho_max.ln());
    let panels = ((u_hi - u_lo) / 0.5).ceil() as usize;
    let mut radial = Vec::new();
    for p in 0..panels {
        let a = u_lo + (u_hi - u_lo) * p as f64 / panels as f64;
        let b = u_lo + (u_hi - u_lo) * (p + 1) as f64 / panels as f64;
        radial.extend(gauss_legendre_on(8, a, b));
    }
    let axial = gauss_legendre_on(quad.paired_axial, 0.0, 1.0);
    let m = quad.ring_samples;
    let dphi = 2.0 * PI / m as f64;
    let offset = quad.jitter * dphi;
    let mut terms = Vec::with_capacity(radial.len() * axial.len() * m);
    let mut scale = 0.0;
    for &(u, wu) in &radial {
        let rho = u.exp();
        let wr = wu * rho.powf(-2.0 * alpha);
        for &(z, wz) in &axial {
            let rc = rho * (1.0 - z * z).sqrt();
            for i in 0..m {
                let (s, c) = (offset + dphi * i as f64).sin_cos();
                let x = [x0[0] + rc * c, x0[1] + rc * s, x0[2] + rho * z];
                let w = wr * wz * dphi;
                terms.push(w * (plus.label(x).sign() + image.label(symmetry_map(x)).sign()));
                scale += 2.0 * w;
            }
        }
    }
    Ok(PairedSum { value: compensated_sum(terms.iter().copied()), scale, node_count: 2 * terms.len() })
}

/// The paired sum for the helicoid against itself.
pub fn nmc_helicoid_symmetrized(t0: f64, lambda: f64, alpha: f64, quad: &PVQuadrature) -> Result<PairedSum> {
    let h = ScrewSurface::new(lambda)?;
    symmetrized_pairing(&h, &h, t0, alpha, quad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nmc::{screw_motion, Ball, HalfSpace};

    /// `A(rho) = -2 pi rho` for `rho < 2`, `-4 pi` beyond, so
    /// `H = -2 pi 2^{1-2a}/(1-2a) - (2 pi / a) 2^{-2a}`.
    fn unit_ball_exact(alpha: f64) -> f64 {
        -2.0 * PI * 2f64.powf(1.0 - 2.0 * alpha) / (1.0 - 2.0 * alpha) - 2.0 * PI / alpha * 2f64.powf(-2.0 * alpha)
    }

    fn ball_tail(alpha: f64, rho_max: f64) -> f64 {
        -2.0 * PI * rho_max.powf(-2.0 * alpha) / alpha
    }

    #[test]
    fn unit_ball_matches_closed_form() {
        let ball = Ball::new([0.0; 3], 1.0).unwrap();
        let x0 = [0.6, 0.0, 0.8];
        for alpha in [0.1, 0.25, 0.4] {
            let q = PVQuadrature::default_for(1.0);
            let est = nmc_at(&ball, x0, alpha, &q).unwrap();
            let exact = unit_ball_exact(alpha) - ball_tail(alpha, q.rho_max);
            assert!(est.value < 0.0);
            assert!((est.value - exact).abs() < 1e-5 * exact.abs(), "alpha {alpha}: {} vs {exact}", est.value);
            assert!((est.value - exact).abs() <= est.numerical_error() + 1e-9, "{est:?}");
            assert!(est.tail_bound >= -ball_tail(alpha, q.rho_max) * (1.0 - 1e-12));
        }
    }

    #[test]
    fn truncation_error_decays_with_order_two_alpha() {
        let ball = Ball::new([0.0; 3], 1.0).unwrap();
        let alpha = 0.25;
        let errs: Vec<(f64, f64)> = [20.0, 80.0, 320.0]
            .iter()
            .map(|&rm| {
                let est = nmc_at(&ball, [0.0, 0.0, 1.0], alpha, &PVQuadrature::new(vec![0.1, 0.05, 0.025], rm)).unwrap();
                (rm, (est.value - unit_ball_exact(alpha)).abs())
            })
            .collect();
        let slope = (errs[2].1 / errs[0].1).ln() / (errs[2].0 / errs[0].0).ln();
        assert!((slope + 2.0 * alpha).abs() < 0.02 * 2.0 * alpha, "{errs:?} slope {slope}");
    }

    #[test]
    fn half_space_vanishes() {
        let hs = HalfSpace::new([0.0, 0.0, 1.0], 0.0).unwrap();
        let est = nmc_at(&hs, [0.0; 3], 0.3, &PVQuadrature::default_for(0.0)).unwrap();
        assert!(est.value.abs() <= est.numerical_error().max(1e-12), "{est:?}");
        assert!(est.value.abs() < 1e-4);
    }

    #[test]
    fn helicoid_vanishes_within_its_error() {
        let h = ScrewSurface::new(PI).unwrap();
        let est = nmc_at(&h, [1.0, 0.0, 0.0], 0.25, &PVQuadrature::default_for(1.0)).unwrap();
        assert!(est.value.abs() <= est.numerical_error(), "{est:?}");
        assert!(est.value.abs() < 5e-3);
    }

    #[test]
    fn helicoid_vanishes_at_a_generic_surface_point() {
        let lambda = 2.0;
        let h = ScrewSurface::new(lambda).unwrap();
        let x0 = screw_motion(lambda, 0.7, [1.5, 0.0, 0.0]);
        assert_eq!(h.label(x0), RegionLabel::Boundary);
        let est = nmc_at(&h, x0, 0.3, &PVQuadrature::default_for(norm(x0))).unwrap();
        assert!(est.value.abs() <= est.numerical_error(), "{est:?}");
    }

    #[test]
    fn off_surface_points_are_rejected() {
        let h = ScrewSurface::new(1.0).unwrap();
        assert!(nmc_at(&h, [1.0, 0.0, 0.5], 0.25, &PVQuadrature::default_for(1.0)).is_err());
        assert!(nmc_at(&h, [1.0, 0.0, 0.0], 0.6, &PVQuadrature::default_for(1.0)).is_err());
        assert!(nmc_at(&h, [1.0, 0.0, 0.0], 0.25, &PVQuadrature::new(vec![0.1, 0.05], 5.0)).is_err());
        assert!(nmc_at(&h, [1.0, 0.0, 0.0], 0.25, &PVQuadrature::new(vec![0.05, 0.1], 50.0)).is_err());
    }

    #[test]
    fn extrapolation_is_exact_on_the_model() {
        let alpha = 0.3;
        let d = [0.2, 0.1, 0.05, 0.02];
        let c = extrapolation_weights(&d, alpha).unwrap();
        let model = |x: f64| 1.5 - 0.7 * x.powf(1.0 - 2.0 * alpha) + 2.0 * x.powf(3.0 - 2.0 * alpha);
        let v: f64 = c.iter().zip(&d).map(|(c, &x)| c * model(x)).sum();
        assert!((v - 1.5).abs() < 1e-12);
    }

    #[test]
    fn paired_sum_cancels_and_control_does_not() {
        let q = PVQuadrature::default_for(2.0);
        for lambda in [1.0, PI] {
            let s = nmc_helicoid_symmetrized(2.0, lambda, 0.25, &q).unwrap();
            assert!(s.value.abs() <= 1e-12 * s.scale, "{s:?}");
            let h = ScrewSurface::new(lambda).unwrap();
            let jittered = ScrewSurface::new(lambda * 1.01).unwrap();
            let c = symmetrized_pairing(&h, &jittered, 2.0, 0.25, &q).unwrap();
            assert!(c.relative() > 1e-6, "{c:?}");
        }
    }
}
