//! Energy of the competitor `W(r, s, y) = eta(r) xi(y) v_0(s, y)` on the
//! cylinder of radius `R` and height `R^b`.
//!
//! `v_0` is read as a bilinear function on its strip grid and extended by
//! zero above the strip. Radial integrals are exact for the polynomial
//! cutoff; `y` integrals use Gauss-Legendre after removing the power weight
//! on the first cell.

use std::f64::consts::PI;

use crate::error::{domain, invalid, Result};
use crate::numerics::gauss_legendre_on;
use crate::potential::DoubleWellPotential;
use crate::strip1d::{StripField, StripGrid};

/// Exponents `1/2 < a < b` and the radius `R`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompetitorParams {
    pub a: f64,
    pub b: f64,
    pub r_max: f64,
}

impl CompetitorParams {
    pub fn new(a: f64, b: f64, r_max: f64) -> Result<Self> {
        if !(0.5 < a && a < b && b < 1.0) {
            return domain(format!("need 1/2 < a < b < 1, got a = {a}, b = {b}"));
        }
        if !(r_max >= 2.0 && r_max.is_finite()) {
            return domain(format!("need R >= 2, got {r_max}"));
        }
        Ok(Self { a, b, r_max })
    }

    /// Checks `b < 1/(2(1 - alpha))`.
    pub fn check_alpha(&self, alpha: f64) -> Result<()> {
        let cap = 1.0 / (2.0 * (1.0 - alpha));
        if !(self.b < cap) {
            return domain(format!("need b < 1/(2(1-alpha)) = {cap}, got b = {}", self.b));
        }
        Ok(())
    }

    pub fn height(&self) -> f64 {
        self.r_max.powf(self.b)
    }

    /// `2 - max(1 + 2b(1-a), 2 + 2b(1-a) - 2a)` for order `alpha`.
    pub fn epsilon(&self, alpha: f64) -> f64 {
        let t = 2.0 * self.b * (1.0 - alpha);
        2.0 - (1.0 + t).max(2.0 + t - 2.0 * self.a)
    }
}

fn smoothstep(t: f64) -> (f64, f64) {
    let t = t.clamp(0.0, 1.0);
    (t * t * t * (10.0 + t * (-15.0 + 6.0 * t)), 30.0 * t * t * (1.0 - t) * (1.0 - t))
}

/// Radial cutoff: `0` on `[0, 1/2]` and `[R - 1/2, R]`, `1` on `[1, R - 1]`,
/// quintic smoothstep in between.
pub fn eta(r: f64, r_max: f64) -> f64 {
    eta_with_derivative(r, r_max).0
}

fn eta_with_derivative(r: f64, r_max: f64) -> (f64, f64) {
    if r <= 0.5 || r >= r_max - 0.5 {
        (0.0, 0.0)
    } else if r < 1.0 {
        let (s, ds) = smoothstep(2.0 * (r - 0.5));
        (s, 2.0 * ds)
    } else if r <= r_max - 1.0 {
        (1.0, 0.0)
    } else {
        let (s, ds) = smoothstep(2.0 * (r_max - 0.5 - r));
        (s, -2.0 * ds)
    }
}

/// Logarithmic cutoff in `y` with its derivative.
fn xi(y: f64, top: f64, knee: f64) -> (f64, f64) {
    if y <= knee {
        (1.0, 0.0)
    } else if y >= top {
        (0.0, 0.0)
    } else {
        let d = (top / knee).ln();
        ((top / y).ln() / d, -1.0 / (y * d))
    }
}

/// Total energy and its split against `(R^2/2) E_0(v_0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CompetitorEnergy {
    pub r_max: f64,
    pub height: f64,
    pub total: f64,
    /// Same total by composite quadrature of the full radial integrand.
    pub direct_total: f64,
    /// `E_0(v_0)` under the same reading of `v_0`.
    pub e0: f64,
    /// `(R^2/2) E_0(v_0)`.
    pub bulk: f64,
    /// Dirichlet energy from `eta'`.
    pub eta_cost: f64,
    /// Extra `lambda^2/(pi^2 r^2)` stiffness in `s`.
    pub angular_cost: f64,
    /// Change of the strip Dirichlet energy caused by `xi`.
    pub xi_cost: f64,
    /// Loss of bulk energy where `eta < 1`.
    pub edge_cost: f64,
    /// `(1/2c) int eta'^2 r dr * lambda int_0^{R^b} y^{1-2a} dy`, using `|xi v_0| <= 1`.
    pub eta_bound: f64,
    /// `(1/2c)(R^2/2) lambda int y^{1-2a} xi'^2 dy`.
    pub xi_bound: f64,
}

impl CompetitorEnergy {
    /// `(E(W) - (R^2/2) E_0(v_0)) / R^2`.
    pub fn excess_per_area(&self) -> f64 {
        (self.total - self.bulk) / (self.r_max * self.r_max)
    }
}

/// `int_a^b y^q f(y) dy` with a singularity-free rule on `[0, b]`.
fn weighted_nodes(a: f64, b: f64, q: f64) -> Vec<(f64, f64)> {
    if a == 0.0 {
        let p = q + 1.0;
        gauss_legendre_on(12, 0.0, 1.0)
            .into_iter()
            .map(|(u, w)| (b * u.powf(1.0 / p), w * b.powf(p) / p))
            .collect()
    } else {
        gauss_legendre_on(12, a, b)
            .into_iter()
            .map(|(y, w)| (y, w * y.powf(q)))
            .collect()
    }
}

/// `int f g ds` for piecewise linear `f`, `g` on a uniform grid of step `h`.
fn pl_inner(f: &[f64], g: &[f64], h: f64) -> f64 {
    f.windows(2)
        .zip(g.windows(2))
        .map(|(a, b)| h / 6.0 * (2.0 * a[0] * b[0] + a[0] * b[1] + a[1] * b[0] + 2.0 * a[1] * b[1]))
        .sum()
}

/// `(S1, S2, S3) = int y^{1-2a} (g^2, g_s^2, g_y^2)` for `g = xi v_0`.
fn strip_integrals(grid: &StripGrid, v0: &StripField, cutoff: Option<(f64, f64)>) -> (f64, f64, f64) {
    let q = 1.0 - 2.0 * grid.alpha;
    let h = grid.h();
    let ns = grid.ns;
    let top = cutoff.map_or(grid.height, |(t, _)| t.min(grid.height));
    let (mut s1, mut s2, mut s3) = (0.0, 0.0, 0.0);
    let mut v = vec![0.0; ns + 1];
    let mut vy = vec![0.0; ns + 1];
    for j in 0..grid.ny {
        let (y0, y1) = (grid.y[j], grid.y[j + 1]);
        if y0 >= top {
            break;
        }
        let mut cuts = vec![y0, y1.min(top)];
        if let Some((_, knee)) = cutoff {
            if knee > y0 && knee < cuts[1] {
                cuts.insert(1, knee);
            }
        }
        for seg in cuts.windows(2) {
            for (y, w) in weighted_nodes(seg[0], seg[1], q) {
                let t = (y - y0) / (y1 - y0);
                for i in 0..=ns {
                    let (a, b) = (v0.get(i, j), v0.get(i, j + 1));
                    v[i] = a + t * (b - a);
                    vy[i] = (b - a) / (y1 - y0);
                }
                let (x, dx) = cutoff.map_or((1.0, 0.0), |(t, k)| xi(y, t, k));
                let vv = pl_inner(&v, &v, h);
                let ds: f64 = v.windows(2).map(|p| (p[1] - p[0]).powi(2) / h).sum();
                s1 += w * x * x * vv;
                s2 += w * x * x * ds;
                s3 += w * (dx * dx * vv + 2.0 * x * dx * pl_inner(&v, &vy, h) + x * x * pl_inner(&vy, &vy, h));
            }
        }
    }
    (s1, s2, s3)
}

/// Radial segments of the cutoff with panels refined geometrically on `[1, R-1]`.
fn radial_panels(r_max: f64) -> Vec<(f64, f64)> {
    let mut out = vec![(0.0, 0.5), (0.5, 1.0)];
    let mut a = 1.0;
    while a < r_max - 1.0 {
        let b = (2.0 * a).min(r_max - 1.0);
        out.push((a, b));
        a = b;
    }
    out.push((r_max - 1.0, r_max - 0.5));
    out.push((r_max - 0.5, r_max));
    out.retain(|(a, b)| b > a);
    out
}

pub fn competitor_energy(
    params: &CompetitorParams,
    grid: &StripGrid,
    v0: &StripField,
    potential: &DoubleWellPotential,
) -> Result<CompetitorEnergy> {
    params.check_alpha(grid.alpha)?;
    if v0.ns != grid.ns || v0.ny != grid.ny || v0.values.len() != grid.len() {
        return invalid("strip field does not match its grid");
    }
    if v0.values.iter().any(|v| !v.is_finite() || v.abs() > 1.0) {
        return invalid("v_0 must be finite with |v_0| <= 1");
    }
    let alpha = grid.alpha;
    let lambda = grid.lambda;
    let r_max = params.r_max;
    let top = params.height();
    let knee = top - r_max.powf(params.a);
    let c = grid.c_alpha;
    let k2 = (lambda / PI).powi(2);
    let h = grid.h();

    let (s1, s2, s3) = strip_integrals(grid, v0, Some((top, knee)));
    let (_, s2v, s3v) = strip_integrals(grid, v0, None);
    let trace: Vec<f64> = (0..=grid.ns).map(|i| v0.get(i, 0)).collect();
    let trap = |f: &dyn Fn(f64) -> f64| -> f64 {
        trace
            .iter()
            .enumerate()
            .map(|(i, &t)| if i == 0 || i == grid.ns { 0.5 * h * f(t) } else { h * f(t) })
            .sum()
    };
    let pot_v0 = trap(&|t| potential.f(t));
    let quad_v0 = 0.5 / c * (s2v + s3v);
    let e0 = quad_v0 + pot_v0;

    // radial pieces: closed forms where eta = 1, exact Gauss-Legendre on the ramps
    let ramps = [(0.5, 1.0), (r_max - 1.0, r_max - 0.5)];
    let (mut i_deta, mut i_eta2, mut i_ang, mut pot) = (0.0, 0.0, 0.0, 0.0);
    for &(a, b) in &ramps {
        for (r, w) in gauss_legendre_on(16, a, b) {
            let (e, de) = eta_with_derivative(r, r_max);
            i_deta += w * de * de * r;
            i_eta2 += w * e * e * r;
            i_ang += w * e * e * k2 / r;
            pot += w * r * trap(&|t| potential.f(e * t));
        }
    }
    let inner = 0.5 * ((r_max - 1.0).powi(2) - 1.0);
    i_eta2 += inner;
    i_ang += k2 * (r_max - 1.0).ln();
    pot += inner * pot_v0;
    let dead = 0.5 * 0.25 + 0.5 * (r_max * r_max - (r_max - 0.5).powi(2));
    pot += dead * lambda * potential.f(0.0);

    let total = 0.5 / c * (i_deta * s1 + i_eta2 * (s2 + s3) + i_ang * s2) + pot;
    let area = 0.5 * r_max * r_max;
    let bulk = area * e0;
    let eta_cost = 0.5 / c * i_deta * s1;
    let angular_cost = 0.5 / c * i_ang * s2;
    let xi_cost = i_eta2 * 0.5 / c * ((s2 + s3) - (s2v + s3v));
    let edge_cost = (i_eta2 - area) * quad_v0 + (pot - area * pot_v0);

    // independent route: one composite rule over the whole radial integrand
    let mut direct = 0.0;
    for (a, b) in radial_panels(r_max) {
        for (r, w) in gauss_legendre_on(24, a, b) {
            let (e, de) = eta_with_derivative(r, r_max);
            let dirichlet = 0.5 / c * (de * de * s1 + e * e * (1.0 + k2 / (r * r)) * s2 + e * e * s3);
            direct += w * r * (dirichlet + trap(&|t| potential.f(e * t)));
        }
    }

    let q = 1.0 - 2.0 * alpha;
    let y_weight = top.powf(q + 1.0) / (q + 1.0);
    let eta_bound = 0.5 / c * i_deta * lambda * y_weight;
    let d = (top / knee).ln();
    let xi_weight = (knee.powf(q - 1.0) - top.powf(q - 1.0)) / ((1.0 - q) * d * d);
    let xi_bound = 0.5 / c * area * lambda * xi_weight;

    Ok(CompetitorEnergy {
        r_max,
        height: top,
        total,
        direct_total: direct,
        e0,
        bulk,
        eta_cost,
        angular_cost,
        xi_cost,
        edge_cost,
        eta_bound,
        xi_bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::helicoid3d::{energy_cyl, CylGrid, ReducedField};
    use crate::strip1d::{energy_e0, minimize_strip};
    use crate::optimize::LbfgsOptions;

    fn v0_on(lambda: f64, alpha: f64) -> (StripGrid, StripField) {
        let g = StripGrid::new(lambda, alpha, 24, 32, 12.0 * lambda / PI).unwrap();
        let init = StripField::first_mode(&g, 0.1).unwrap();
        let sol = minimize_strip(&g, &DoubleWellPotential::standard(), &init, &LbfgsOptions::default()).unwrap();
        (g, sol.field)
    }

    #[test]
    fn exponent_window_is_enforced() {
        assert!(CompetitorParams::new(0.4, 0.9, 10.0).is_err());
        assert!(CompetitorParams::new(0.8, 0.7, 10.0).is_err());
        let p = CompetitorParams::new(0.6, 0.7, 10.0).unwrap();
        assert!(p.check_alpha(0.25).is_err());
        assert!(p.check_alpha(0.5).is_ok());
        assert!((CompetitorParams::new(0.7, 0.9, 10.0).unwrap().epsilon(0.5) - 0.1).abs() < 1e-14);
    }

    #[test]
    fn cutoff_shape() {
        assert_eq!(eta(0.3, 10.0), 0.0);
        assert_eq!(eta(5.0, 10.0), 1.0);
        assert_eq!(eta(9.7, 10.0), 0.0);
        assert!((eta(0.75, 10.0) - 0.5).abs() < 1e-15);
        let (x, _) = xi(5.0, 10.0, 6.0);
        assert_eq!(x, 1.0);
        assert!(xi(10.0, 10.0, 6.0).0.abs() < 1e-15);
    }

    #[test]
    fn decomposition_adds_up_to_direct_quadrature() {
        let (g, v0) = v0_on(4.0, 0.5);
        for r in [2.0, 7.0, 20.0] {
            let p = CompetitorParams::new(0.7, 0.9, r).unwrap();
            let e = competitor_energy(&p, &g, &v0, &DoubleWellPotential::standard()).unwrap();
            let parts = e.bulk + e.eta_cost + e.angular_cost + e.xi_cost + e.edge_cost;
            assert!((parts - e.total).abs() <= 1e-12 * e.total.abs(), "{e:?}");
            assert!((e.direct_total - e.total).abs() <= 1e-8 * e.total.abs(), "{e:?}");
        }
    }

    #[test]
    fn zero_profile_gives_trivial_energy() {
        let (g, v0) = v0_on(4.0, 0.5);
        let z = StripField::zeros(&g);
        let p = CompetitorParams::new(0.7, 0.9, 10.0).unwrap();
        let e = competitor_energy(&p, &g, &z, &DoubleWellPotential::standard()).unwrap();
        let exact = 0.5 * 4.0 * 0.25 * 100.0;
        assert!((e.total - exact).abs() < 1e-12 * exact);
        assert_eq!(v0.ns, z.ns);
    }

    /// `E_0` under the bilinear reading converges to the finite-volume value.
    #[test]
    fn e0_readings_agree() {
        let (g, v0) = v0_on(4.0, 0.5);
        let p = CompetitorParams::new(0.7, 0.9, 10.0).unwrap();
        let e = competitor_energy(&p, &g, &v0, &DoubleWellPotential::standard()).unwrap();
        let fv = energy_e0(&g, &v0, &DoubleWellPotential::standard()).unwrap();
        assert!((e.e0 - fv).abs() < 2e-2 * fv, "{} vs {fv}", e.e0);
    }

    #[test]
    fn minimizer_beats_discrete_competitor() {
        let (lambda, alpha) = (4.0, 0.5);
        let cg = CylGrid::new(lambda, alpha, 6.0, 12.0 * lambda / PI, 16, 12, 16).unwrap();
        let sg = cg.strip().unwrap();
        let pot = DoubleWellPotential::standard();
        let init = StripField::first_mode(&sg, 0.1).unwrap();
        let v0 = minimize_strip(&sg, &pot, &init, &LbfgsOptions::default()).unwrap().field;
        let radial: Vec<f64> = cg.r.iter().map(|&r| eta(r, cg.r_max)).collect();
        let w = ReducedField::from_product(&cg, &radial, &v0).unwrap();
        let ew = energy_cyl(&cg, &w, &pot).unwrap();
        let start = ReducedField::initial_guess(&cg, 0.1).unwrap();
        let sol = crate::helicoid3d::minimize_cyl(&cg, &pot, &start, &LbfgsOptions::default()).unwrap();
        assert!(sol.energy <= ew, "{} > {ew}", sol.energy);
        let trivial = 0.5 * lambda * 0.25 * 36.0;
        assert!(sol.energy <= trivial);
    }
}
