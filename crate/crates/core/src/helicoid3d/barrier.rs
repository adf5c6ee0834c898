//! Sampled verification of the upper barrier
//! `w(r, s, y) = K sin(k s) [phi_2(k y) + eps phi_1(k y) + eps (e^{k r/2} + C e^{-k r/2})]`,
//! `k = pi / lambda`, for the cylindrical operator.

use std::f64::consts::PI;

use crate::error::{domain, Result};
use crate::numerics::sin_pi;
use crate::specfun::ExtensionProfile;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarrierParams {
    /// Amplitude `K`.
    pub amplitude: f64,
    /// Axis constant `C`.
    pub axis_constant: f64,
    pub eps: f64,
}

impl BarrierParams {
    /// `K, eps > 0` and `C > 0`. `C <= e^2` is accepted so that the axis
    /// condition can be probed; see [`BarrierParams::axis_constant_admissible`].
    pub fn new(amplitude: f64, axis_constant: f64, eps: f64) -> Result<Self> {
        if !(amplitude > 0.0 && eps > 0.0 && axis_constant > 0.0) {
            return domain("K, C and eps must be positive");
        }
        if !(amplitude.is_finite() && eps.is_finite() && axis_constant.is_finite()) {
            return domain("K, C and eps must be finite");
        }
        Ok(Self { amplitude, axis_constant, eps })
    }

    /// `C > e^2`.
    pub fn axis_constant_admissible(&self) -> bool {
        self.axis_constant > std::f64::consts::E.powi(2)
    }
}

/// Sample geometry: logarithmic in `r` and `y`, midpoint-uniform in `s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarrierSample {
    pub n: usize,
    /// `r` range in units of `lambda/pi`.
    pub r_range: (f64, f64),
    /// `y` range in units of `lambda/pi`.
    pub y_range: (f64, f64),
}

impl Default for BarrierSample {
    fn default() -> Self {
        Self { n: 64, r_range: (1e-3, 20.0), y_range: (1e-3, 20.0) }
    }
}

/// Location and value of an extreme sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorstPoint {
    pub r: f64,
    pub s: f64,
    pub y: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BarrierReport {
    /// Largest value of the operator applied to `w` over the sample.
    pub max_operator: WorstPoint,
    pub superharmonic: bool,
    /// `w = 0` on `s = 0` and `s = lambda`.
    pub lateral_zero: bool,
    /// `w(r, s, 0) >= (K/2) sin(k s)`.
    pub trace_dominates: bool,
    /// `w(0, s, y) >= 0`.
    pub axis_nonnegative: bool,
    /// `e^{k r/2} - C e^{-k r/2} <= 0` for `r < lambda/pi`, the sign used near the axis.
    pub near_axis_term_nonpositive: bool,
    /// Largest value of `e^{k r/2} - C e^{-k r/2}` over sampled `r < lambda/pi`.
    pub near_axis_worst: WorstPoint,
    pub axis_constant_admissible: bool,
    pub samples: usize,
}

impl BarrierReport {
    pub fn boundary_flags(&self) -> bool {
        self.lateral_zero && self.trace_dominates && self.axis_nonnegative
    }
}

fn log_grid(n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n)
        .map(|i| lo * (hi / lo).powf(i as f64 / (n - 1).max(1) as f64))
        .collect()
}

/// Evaluates the operator
/// `w_rr + w_r/r + (1 + lambda^2/(pi^2 r^2)) w_ss + w_yy + (1-2a)/y w_y`
/// on `w` at every sample point, term by term from the factor derivatives.
pub fn barrier_check(params: &BarrierParams, alpha: f64, lambda: f64, sample: &BarrierSample) -> Result<BarrierReport> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return domain("lambda must be positive");
    }
    if sample.n < 2 || !(0.0 < sample.r_range.0 && sample.r_range.0 < sample.r_range.1) {
        return domain("invalid r sample");
    }
    if !(0.0 < sample.y_range.0 && sample.y_range.0 < sample.y_range.1) {
        return domain("invalid y sample");
    }
    let p2 = ExtensionProfile::decaying(alpha)?;
    let p1 = ExtensionProfile::growing(alpha)?;
    let k = PI / lambda;
    let len = 1.0 / k;
    let (kk, c, eps) = (params.amplitude, params.axis_constant, params.eps);
    let q = 1.0 - 2.0 * alpha;

    let rs = log_grid(sample.n, sample.r_range.0 * len, sample.r_range.1 * len);
    let ys = log_grid(sample.n, sample.y_range.0 * len, sample.y_range.1 * len);
    let ss: Vec<f64> = (0..sample.n).map(|m| lambda * (m as f64 + 0.5) / sample.n as f64).collect();

    // radial factor g(r) = e^{kr/2} + C e^{-kr/2} and its derivatives
    let radial: Vec<(f64, f64, f64)> = rs
        .iter()
        .map(|&r| {
            let (ep, em) = ((0.5 * k * r).exp(), c * (-0.5 * k * r).exp());
            (ep + em, 0.5 * k * (ep - em), 0.25 * k * k * (ep + em))
        })
        .collect();
    // y factor h(y) = phi_2(ky) + eps phi_1(ky) with derivatives
    let vertical = ys
        .iter()
        .map(|&y| {
            let t = k * y;
            let v = p2.value(t)? + eps * p1.value(t)?;
            let d = k * (p2.derivative(t)? + eps * p1.derivative(t)?);
            let dd = k * k * (p2.second_derivative(t)? + eps * p1.second_derivative(t)?);
            Ok((v, d, dd))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut worst = WorstPoint { r: 0.0, s: 0.0, y: 0.0, value: f64::NEG_INFINITY };
    for (&r, &(g, dg, ddg)) in rs.iter().zip(&radial) {
        for &s in &ss {
            let sn = (k * s).sin();
            for (&y, &(h, dh, ddh)) in ys.iter().zip(&vertical) {
                let w = kk * sn * (h + eps * g);
                let w_r = kk * sn * eps * dg;
                let w_rr = kk * sn * eps * ddg;
                let w_ss = -k * k * w;
                let w_y = kk * sn * dh;
                let w_yy = kk * sn * ddh;
                let op = w_rr + w_r / r + (1.0 + 1.0 / (k * k * r * r)) * w_ss + w_yy + q / y * w_y;
                if op > worst.value {
                    worst = WorstPoint { r, s, y, value: op };
                }
            }
        }
    }

    let mut lateral_zero = true;
    let mut trace_dominates = true;
    let mut axis_nonnegative = true;
    for &(h, _, _) in &vertical {
        for &(g, _, _) in &radial {
            // s = 0 and s = lambda: sin(pi * 0) and sin(pi * 1) are exact zeros
            for frac in [0.0, 1.0] {
                let w = kk * sin_pi(frac) * (h + eps * g);
                lateral_zero &= w == 0.0;
            }
        }
        for &s in &ss {
            let w_axis = kk * (k * s).sin() * (h + eps * (1.0 + c));
            axis_nonnegative &= w_axis >= 0.0;
        }
    }
    for &(g, _, _) in &radial {
        for &s in &ss {
            let sn = (k * s).sin();
            let w0 = kk * sn * (p2.value(0.0)? + eps * p1.value(0.0)? + eps * g);
            trace_dominates &= w0 >= 0.5 * kk * sn;
        }
    }
    let mut near = WorstPoint { r: 0.0, s: lambda / 2.0, y: 0.0, value: f64::NEG_INFINITY };
    for &r in rs.iter().filter(|&&r| r < len) {
        let v = (0.5 * k * r).exp() - c * (-0.5 * k * r).exp();
        if v > near.value {
            near = WorstPoint { r, s: lambda / 2.0, y: 0.0, value: v };
        }
    }

    Ok(BarrierReport {
        superharmonic: worst.value <= 1e-10,
        max_operator: worst,
        lateral_zero,
        trace_dominates,
        axis_nonnegative,
        near_axis_term_nonpositive: near.value <= 0.0,
        near_axis_worst: near,
        axis_constant_admissible: params.axis_constant_admissible(),
        samples: sample.n.pow(3),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn admissible_barrier_is_superharmonic() {
        let p = BarrierParams::new(10.0, 8.0, 0.01).unwrap();
        let rep = barrier_check(&p, 0.5, PI, &BarrierSample::default()).unwrap();
        assert!(rep.superharmonic, "{rep:?}");
        assert!(rep.boundary_flags());
        assert!(rep.near_axis_term_nonpositive);
        assert!(rep.axis_constant_admissible);
        assert_eq!(rep.samples, 64 * 64 * 64);
    }

    /// Closed form at `alpha = 1/2`: `phi_2 = e^{-y}`, `phi_1 = sqrt(2/pi) sinh(y)`, and
    /// the operator equals `K sin(ks)[-3/4 eps k^2 g + eps k/(2r)(e^+ - C e^-)] - w/r^2`.
    #[test]
    fn matches_closed_form_at_half_order() {
        let (lambda, kk, c, eps) = (2.0, 3.0, 9.0, 0.05);
        let p = BarrierParams::new(kk, c, eps).unwrap();
        let sample = BarrierSample { n: 9, r_range: (0.01, 5.0), y_range: (0.01, 5.0) };
        let rep = barrier_check(&p, 0.5, lambda, &sample).unwrap();
        let k = PI / lambda;
        let WorstPoint { r, s, y, value } = rep.max_operator;
        let sn = (k * s).sin();
        let (ep, em) = ((0.5 * k * r).exp(), c * (-0.5 * k * r).exp());
        let w = kk * sn * ((-k * y).exp() + eps * (2.0 / PI).sqrt() * (k * y).sinh() + eps * (ep + em));
        let expect = kk * sn * (-0.75 * eps * k * k * (ep + em) + eps * k / (2.0 * r) * (ep - em)) - w / (r * r);
        assert!((value - expect).abs() < 1e-9 * expect.abs().max(1.0), "{value} vs {expect}");
    }

    #[test]
    fn small_axis_constant_breaks_the_near_axis_sign() {
        let p = BarrierParams::new(10.0, 2.0, 0.01).unwrap();
        let rep = barrier_check(&p, 0.5, PI, &BarrierSample::default()).unwrap();
        assert!(!rep.axis_constant_admissible);
        assert!(!rep.near_axis_term_nonpositive);
        let kr = rep.near_axis_worst.r * 1.0;
        assert!(kr > 2f64.ln() && kr < 1.0);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(BarrierParams::new(-1.0, 8.0, 0.01).is_err());
        assert!(BarrierParams::new(1.0, 8.0, 0.0).is_err());
        let p = BarrierParams::new(1.0, 8.0, 0.1).unwrap();
        assert!(barrier_check(&p, 0.5, -1.0, &BarrierSample::default()).is_err());
        assert!(barrier_check(&p, 1.5, 1.0, &BarrierSample::default()).is_err());
    }
}
