//! Modified Bessel functions of fractional order and the extension profiles
//! built from them.
//!
//! `I_nu` uses the ascending series up to `y_switch` and the large-argument
//! expansion beyond it. `K_nu` uses the reflection formula on `(0, 2]`,
//! Steed's continued fraction on `(2, y_switch]` and the large-argument
//! expansion beyond.

use std::f64::consts::PI;

use crate::error::{domain, Error, Result};
use crate::numerics::{richardson_diagonal, ridders_first, ridders_second};

/// Gamma function.
#[inline]
pub fn gamma(x: f64) -> f64 {
    libm::tgamma(x)
}

/// Evaluation thresholds for the Bessel routines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BesselConfig {
    /// Switch from the series / continued fraction to the asymptotic expansion.
    pub y_switch: f64,
    /// Largest argument for which `I` is evaluated.
    pub y_max: f64,
}

impl Default for BesselConfig {
    fn default() -> Self {
        Self { y_switch: 12.0, y_max: 700.0 }
    }
}

/// Below this argument the profiles return their limits at `y = 0`.
pub const Y_MIN: f64 = 1e-8;

fn check_order(nu: f64) -> Result<()> {
    if !(nu > -1.0 && nu < 1.0) || nu == 0.0 {
        return domain(format!("Bessel order {nu} outside (-1,1)\\{{0}}"));
    }
    Ok(())
}

fn check_arg(y: f64) -> Result<()> {
    if !(y > 0.0) || !y.is_finite() {
        return domain(format!("Bessel argument must be positive and finite, got {y}"));
    }
    Ok(())
}

/// Coefficients `a_k(nu)` of the large-argument expansions, summed up to the
/// smallest term. Returns `sum sign^k a_k / y^k`.
fn hankel_sum(nu: f64, y: f64, alternate: bool) -> f64 {
    let m = 4.0 * nu * nu;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut prev = f64::INFINITY;
    for k in 1..200 {
        let kf = k as f64;
        let odd = 2.0 * kf - 1.0;
        term *= (m - odd * odd) / (kf * 8.0 * y);
        if term.abs() >= prev {
            break;
        }
        prev = term.abs();
        sum += if alternate && k % 2 == 1 { -term } else { term };
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

fn i_series(nu: f64, y: f64) -> f64 {
    let q = 0.25 * y * y;
    let mut term = (0.5 * y).powf(nu) / gamma(nu + 1.0);
    let mut sum = term;
    for k in 0..1000 {
        let kf = k as f64;
        term *= q / ((kf + 1.0) * (kf + 1.0 + nu));
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

fn i_asymptotic(nu: f64, y: f64) -> f64 {
    y.exp() / (2.0 * PI * y).sqrt() * hankel_sum(nu, y, true)
}

fn k_asymptotic(nu: f64, y: f64) -> f64 {
    (PI / (2.0 * y)).sqrt() * (-y).exp() * hankel_sum(nu, y, false)
}

/// `(K_mu, K_{mu+1})` for `|mu| <= 1/2`, `x >= 2`, by Steed's continued fraction.
fn k_steed(mu: f64, x: f64) -> (f64, f64) {
    const EPS: f64 = 1e-16;
    let mut b = 2.0 * (1.0 + x);
    let mut d = 1.0 / b;
    let mut h = d;
    let mut delh = d;
    let mut q1 = 0.0;
    let mut q2 = 1.0;
    let a1 = 0.25 - mu * mu;
    let mut q = a1;
    let mut c = a1;
    let mut a = -a1;
    let mut s = 1.0 + q * delh;
    for i in 1..100_000 {
        let fi = i as f64;
        a -= 2.0 * fi;
        c = -a * c / (fi + 1.0);
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh *= b * d - 1.0;
        h += delh;
        let dels = q * delh;
        s += dels;
        if (dels / s).abs() < EPS {
            break;
        }
    }
    let h = a1 * h;
    let kmu = (PI / (2.0 * x)).sqrt() * (-x).exp() / s;
    let kmu1 = kmu * (mu + x + 0.5 - h) / x;
    (kmu, kmu1)
}

/// Modified Bessel function of the first kind `I_nu(y)` for `nu` in `(-1, 1)`.
pub fn bessel_i_with(nu: f64, y: f64, cfg: &BesselConfig) -> Result<f64> {
    check_order(nu)?;
    check_arg(y)?;
    if y > cfg.y_max {
        return Err(Error::Overflow(format!("I_{nu}({y}) exceeds y_max={}", cfg.y_max)));
    }
    Ok(if y <= cfg.y_switch { i_series(nu, y) } else { i_asymptotic(nu, y) })
}

/// Modified Bessel function of the second kind `K_nu(y)` for `nu` in `(-1, 1)`.
pub fn bessel_k_with(nu: f64, y: f64, cfg: &BesselConfig) -> Result<f64> {
    check_order(nu)?;
    check_arg(y)?;
    let nu = nu.abs();
    Ok(if y <= 2.0 {
        PI / (2.0 * (PI * nu).sin()) * (i_series(-nu, y) - i_series(nu, y))
    } else if y <= cfg.y_switch {
        if nu <= 0.5 {
            k_steed(nu, y).0
        } else {
            k_steed(nu - 1.0, y).1
        }
    } else {
        k_asymptotic(nu, y)
    })
}

/// `I_alpha(y)` with the default thresholds.
pub fn bessel_i(alpha: f64, y: f64) -> Result<f64> {
    bessel_i_with(alpha, y, &BesselConfig::default())
}

/// `K_alpha(y)` with the default thresholds (written `Z_alpha` in some texts).
pub fn bessel_z(alpha: f64, y: f64) -> Result<f64> {
    bessel_k_with(alpha, y, &BesselConfig::default())
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return domain(format!("alpha={alpha} outside (0,1)"));
    }
    Ok(())
}

/// Trace constant `2^{1-2 alpha} Gamma(1-alpha) / Gamma(alpha)`.
pub fn c_alpha(alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    Ok((1.0 - 2.0 * alpha).exp2() * gamma(1.0 - alpha) / gamma(alpha))
}

/// Which solution of `phi'' + (1-2a)/y phi' = phi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProfileKind {
    /// `phi_2`: equals 1 at the origin and decays.
    Decaying,
    /// `phi_1 = y^a I_a(y)`: vanishes at the origin and grows.
    Growing,
}

/// One of the two extension profiles for a fixed order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtensionProfile {
    pub alpha: f64,
    pub kind: ProfileKind,
    /// Divisor applied to `y^a K_a(y)` (or 1 for the growing profile).
    pub normalization: f64,
    pub cfg: BesselConfig,
}

impl ExtensionProfile {
    pub fn new(alpha: f64, kind: ProfileKind) -> Result<Self> {
        check_alpha(alpha)?;
        let normalization = match kind {
            ProfileKind::Decaying => (alpha - 1.0).exp2() * gamma(alpha),
            ProfileKind::Growing => 1.0,
        };
        Ok(Self { alpha, kind, normalization, cfg: BesselConfig::default() })
    }

    pub fn decaying(alpha: f64) -> Result<Self> {
        Self::new(alpha, ProfileKind::Decaying)
    }

    pub fn growing(alpha: f64) -> Result<Self> {
        Self::new(alpha, ProfileKind::Growing)
    }

    /// Profile value; the limit at the origin below [`Y_MIN`].
    pub fn value(&self, y: f64) -> Result<f64> {
        if y < 0.0 || y.is_nan() {
            return domain(format!("profile argument must be nonnegative, got {y}"));
        }
        let a = self.alpha;
        match self.kind {
            ProfileKind::Decaying => {
                if y < Y_MIN {
                    return Ok(1.0);
                }
                if y.is_infinite() {
                    return Ok(0.0);
                }
                Ok(y.powf(a) * bessel_k_with(a, y, &self.cfg)? / self.normalization)
            }
            ProfileKind::Growing => {
                if y < Y_MIN {
                    return Ok(0.0);
                }
                Ok(y.powf(a) * bessel_i_with(a, y, &self.cfg)?)
            }
        }
    }

    /// First derivative, for `y > 0`.
    pub fn derivative(&self, y: f64) -> Result<f64> {
        check_arg(y)?;
        let a = self.alpha;
        Ok(match self.kind {
            ProfileKind::Decaying => {
                -y.powf(a) * bessel_k_with(1.0 - a, y, &self.cfg)? / self.normalization
            }
            ProfileKind::Growing => y.powf(a) * self.i_lower(y)?,
        })
    }

    /// Second derivative, for `y > 0`.
    pub fn second_derivative(&self, y: f64) -> Result<f64> {
        check_arg(y)?;
        let a = self.alpha;
        let ya = y.powf(a);
        Ok(match self.kind {
            ProfileKind::Decaying => {
                (ya * bessel_k_with(a, y, &self.cfg)?
                    + (1.0 - 2.0 * a) * ya / y * bessel_k_with(1.0 - a, y, &self.cfg)?)
                    / self.normalization
            }
            ProfileKind::Growing => {
                ya * bessel_i_with(a, y, &self.cfg)? + (2.0 * a - 1.0) * ya / y * self.i_lower(y)?
            }
        })
    }

    /// `I_{a-1}`; at `a = 1/2` this is `I_{-1/2}`, still inside the supported range.
    fn i_lower(&self, y: f64) -> Result<f64> {
        bessel_i_with(self.alpha - 1.0, y, &self.cfg)
    }

    /// `phi'' + (1-2a)/y phi' - phi` from finite differences of profile values.
    pub fn ode_residual(&self, y: f64) -> Result<f64> {
        check_arg(y)?;
        let f = |t: f64| self.value(t).unwrap_or(f64::NAN);
        Ok(ode_residual_of(self.alpha, y, f))
    }
}

fn fd_step(y: f64) -> f64 {
    0.2 * y.min(1.0)
}

fn ode_residual_of<F: Fn(f64) -> f64>(alpha: f64, y: f64, f: F) -> f64 {
    let h = fd_step(y);
    let (d1, _) = ridders_first(&f, y, h);
    let (d2, _) = ridders_second(&f, y, h);
    d2 + (1.0 - 2.0 * alpha) / y * d1 - f(y)
}

/// `phi_2(y)`.
pub fn phi2(alpha: f64, y: f64) -> Result<f64> {
    ExtensionProfile::decaying(alpha)?.value(y)
}

/// `phi_1(y) = y^alpha I_alpha(y)`.
pub fn phi1(alpha: f64, y: f64) -> Result<f64> {
    ExtensionProfile::growing(alpha)?.value(y)
}

/// Result of extrapolating the weighted Neumann derivative at the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct NeumannTrace {
    pub value: f64,
    /// Difference between the last two extrapolation levels.
    pub error_estimate: f64,
    pub samples: Vec<(f64, f64)>,
}

/// Extrapolates `-lim_{y->0} y^{1-2a} phi_2'(y)` from samples at
/// `y = 0.1 * 2^{-k}`, `k = 0..8`.
pub fn neumann_trace(alpha: f64) -> Result<NeumannTrace> {
    let profile = ExtensionProfile::decaying(alpha)?;
    let heights: Vec<f64> = (0..9).map(|k| 0.1 * 0.5f64.powi(k)).collect();
    let mut samples = Vec::with_capacity(heights.len());
    for &y in &heights {
        let g = -y.powf(1.0 - 2.0 * alpha) * profile.derivative(y)?;
        samples.push((y, g));
    }
    let values: Vec<f64> = samples.iter().map(|s| s.1).collect();
    let nu = 1.0 - alpha;
    let exponents = [2.0 * nu, 2.0, 2.0 * nu + 2.0, 4.0, 2.0 * nu + 4.0, 6.0];
    let diag = richardson_diagonal(&heights, &values, &exponents);
    let n = diag.len();
    let value = diag[n - 1];
    let error_estimate = (diag[n - 1] - diag[n - 2]).abs();
    if !value.is_finite() || error_estimate > 1e-6 * value.abs().max(1.0) {
        return Err(Error::Numerical(format!(
            "Neumann trace extrapolation did not settle: levels {diag:?}"
        )));
    }
    Ok(NeumannTrace { value, error_estimate, samples })
}

/// Residual of `d/dy (y^{1-2a} d/dy f(mu y)) - y^{1-2a} mu^2 f(mu y)` by
/// finite differences, for an arbitrary `f`.
pub fn rescaled_residual_of<F: Fn(f64) -> f64>(alpha: f64, mu: f64, y: f64, f: F) -> Result<f64> {
    check_alpha(alpha)?;
    if !(mu > 0.0) {
        return domain("rescaling factor must be positive");
    }
    check_arg(y)?;
    let g = |t: f64| f(mu * t);
    let w = y.powf(1.0 - 2.0 * alpha);
    Ok(w * (ode_residual_of(alpha, y, g) + g(y) - mu * mu * g(y)))
}

/// [`rescaled_residual_of`] for one of the two profiles.
pub fn rescaled_profile_residual(alpha: f64, mu: f64, y: f64, kind: ProfileKind) -> Result<f64> {
    let p = ExtensionProfile::new(alpha, kind)?;
    rescaled_residual_of(alpha, mu, y, |t| p.value(t).unwrap_or(f64::NAN))
}
