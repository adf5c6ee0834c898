use std::f64::consts::PI;

use super::{CylGrid, ReducedField};
use crate::error::{domain, Error, Result};

/// First positive zero of `J_1`.
const J1_FIRST_ZERO: f64 = 3.831_705_970_207_512_3;

/// Exponential rate in `y` of the field along the midline `s = lambda/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayFit {
    pub rate: f64,
    /// Standard error of the fitted slope.
    pub std_error: f64,
    pub y_lo: f64,
    pub y_hi: f64,
    pub points: usize,
    /// `pi / lambda`, the rate of the barrier profile.
    pub pi_over_lambda: f64,
    /// Rate of the slowest mode on the disk of radius `R` with a Dirichlet wall:
    /// `sqrt((pi/lambda)^2 + (j_{1,1}/R)^2)`.
    pub confined_rate: f64,
}

impl DecayFit {
    /// `|rate - pi/lambda| / (pi/lambda)`.
    pub fn rel_to_pi_over_lambda(&self) -> f64 {
        (self.rate - self.pi_over_lambda).abs() / self.pi_over_lambda
    }

    /// `|rate - 1|`, against the unit rate of `phi_2(y)`.
    pub fn rel_to_unit_rate(&self) -> f64 {
        (self.rate - 1.0).abs()
    }

    pub fn rel_to_confined(&self) -> f64 {
        (self.rate - self.confined_rate).abs() / self.confined_rate
    }
}

/// Fit over `y in [L/2, 0.8 L]`, clear of the Dirichlet face at `y = L`.
pub fn decay_rate(grid: &CylGrid, field: &ReducedField) -> Result<DecayFit> {
    decay_rate_window(grid, field, 0.5 * grid.height, 0.8 * grid.height)
}

/// Least-squares slope of `log(P(y) / y^{a - 1/2})` on `[y_lo, y_hi]`, where
/// `P(y) = int V(r, lambda/2, y) r dr` is the radial projection on the midline.
pub fn decay_rate_window(grid: &CylGrid, field: &ReducedField, y_lo: f64, y_hi: f64) -> Result<DecayFit> {
    field.check(grid)?;
    if !(0.0 < y_lo && y_lo < y_hi && y_hi < grid.height) {
        return domain("need 0 < y_lo < y_hi < L");
    }
    let mid = |i: usize, j: usize| {
        if grid.ns.is_multiple_of(2) {
            field.get(i, grid.ns / 2, j)
        } else {
            0.5 * (field.get(i, grid.ns / 2, j) + field.get(i, grid.ns / 2 + 1, j))
        }
    };
    let scale = field.sup_norm();
    let mut pts = Vec::new();
    for j in 0..grid.ny {
        let y = grid.y[j];
        if y < y_lo || y > y_hi {
            continue;
        }
        let p: f64 = (1..grid.nr).map(|i| grid.rmass[i] * mid(i, j)).sum();
        if !(p > 1e-280 && p > 1e-14 * scale) {
            return Err(Error::Numerical(format!("field too small to fit a decay rate at y = {y}")));
        }
        pts.push((y, p.ln() - (grid.alpha - 0.5) * y.ln()));
    }
    if pts.len() < 3 {
        return Err(Error::Numerical("field too small or window too narrow to fit a decay rate".into()));
    }
    let n = pts.len() as f64;
    let (mx, my) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x / n, b + y / n));
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let sse: f64 = pts.iter().map(|(x, y)| (y - my - slope * (x - mx)).powi(2)).sum();
    let std_error = (sse / (n - 2.0) / sxx).sqrt();
    let k = PI / grid.lambda;
    Ok(DecayFit {
        rate: -slope,
        std_error,
        y_lo,
        y_hi,
        points: pts.len(),
        pi_over_lambda: k,
        confined_rate: (k * k + (J1_FIRST_ZERO / grid.r_max).powi(2)).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::ExtensionProfile;

    #[test]
    fn separated_mode_decays_at_pi_over_lambda() {
        for alpha in [0.3, 0.5, 0.7] {
            let g = CylGrid::new(4.0, alpha, 6.0, 15.0, 8, 16, 200).unwrap();
            let k = PI / 4.0;
            let p = ExtensionProfile::decaying(alpha).unwrap();
            let f = ReducedField::from_fn(&g, |r, s, y| r * (6.0 - r) * (k * s).sin() * p.value(k * y).unwrap());
            let fit = decay_rate(&g, &f).unwrap();
            assert!(fit.rel_to_pi_over_lambda() < 1e-2, "alpha {alpha}: {fit:?}");
        }
    }

    #[test]
    fn zero_field_is_rejected() {
        let g = CylGrid::new(4.0, 0.5, 6.0, 15.0, 8, 16, 40).unwrap();
        let err = decay_rate(&g, &ReducedField::zeros(&g)).unwrap_err();
        assert!(err.to_string().contains("too small"));
    }

    #[test]
    fn confined_rate_tends_to_pi_over_lambda() {
        let g = CylGrid::new(4.0, 0.5, 400.0, 15.0, 4, 4, 8).unwrap();
        let f = ReducedField::from_fn(&g, |_, _, y| (-y).exp());
        let fit = decay_rate_window(&g, &f, 1.0, 10.0).unwrap();
        assert!((fit.confined_rate - PI / 4.0).abs() < 1e-4);
    }
}
