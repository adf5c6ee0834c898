use std::f64::consts::PI;

use super::{CylGrid, ReducedField};
use crate::error::{domain, Result};

/// Index `i` with `nodes[i] <= x <= nodes[i+1]` and the local coordinate in `[0, 1]`.
fn locate(nodes: &[f64], x: f64) -> (usize, f64) {
    let n = nodes.len() - 1;
    let i = nodes.partition_point(|&t| t <= x).clamp(1, n) - 1;
    let t = (x - nodes[i]) / (nodes[i + 1] - nodes[i]);
    (i, t.clamp(0.0, 1.0))
}

/// Trilinear interpolation of `V` at `(r, s, y)` inside the fundamental domain.
fn interpolate(grid: &CylGrid, field: &ReducedField, r: f64, s: f64, y: f64) -> f64 {
    let (i, tr) = locate(&grid.r, r);
    let ks = (s / grid.hs()).floor().clamp(0.0, (grid.ns - 1) as f64) as usize;
    let ts = (s / grid.hs() - ks as f64).clamp(0.0, 1.0);
    let (j, ty) = locate(&grid.y, y);
    let mut acc = 0.0;
    for (di, wr) in [(0, 1.0 - tr), (1, tr)] {
        for (dk, ws) in [(0, 1.0 - ts), (1, ts)] {
            for (dj, wy) in [(0, 1.0 - ty), (1, ty)] {
                let w = wr * ws * wy;
                if w != 0.0 {
                    acc += w * field.get(i + di, ks + dk, j + dj);
                }
            }
        }
    }
    acc
}

/// Screw-reduced coordinate `s - (lambda/pi) theta` folded into `[-lambda, lambda)`.
pub(crate) fn reduced_s(lambda: f64, x: [f64; 3]) -> f64 {
    let theta = x[1].atan2(x[0]);
    let s = x[2] - lambda / PI * theta;
    let period = 2.0 * lambda;
    s - period * ((s + lambda) / period).floor()
}

/// Value of the extended solution `v(x, y)` rebuilt from the reduced field by
/// screw invariance, `2 lambda` periodicity and odd reflection in `s`;
/// `y = 0` gives `u(x)`.
pub fn reconstruct3d(grid: &CylGrid, field: &ReducedField, x: [f64; 3], y: f64) -> Result<f64> {
    field.check(grid)?;
    let r = x[0].hypot(x[1]);
    if !(r <= grid.r_max) {
        return domain(format!("point at radius {r} lies outside the solved cylinder R = {}", grid.r_max));
    }
    if !(0.0..=grid.height).contains(&y) {
        return domain(format!("y = {y} outside [0, {}]", grid.height));
    }
    if r == 0.0 {
        return Ok(0.0);
    }
    let s = reduced_s(grid.lambda, x);
    Ok(if s >= 0.0 {
        interpolate(grid, field, r, s, y)
    } else {
        -interpolate(grid, field, r, -s, y)
    })
}

/// Comparison of the sign changes of `u` along vertical lines with the
/// crossings of the helicoid `x3 = (lambda/pi)(phi + n pi)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RaySummary {
    pub rays: usize,
    /// Helicoid crossings inside the sampled segments.
    pub expected_crossings: usize,
    /// Sign changes of `u` found on those segments.
    pub found_crossings: usize,
    /// Largest distance in `x3` from a sign change to the nearest crossing.
    pub max_offset: f64,
    /// Grid cell size in `s`, the tolerance unit.
    pub cell: f64,
    /// Smallest `|u|` at samples farther than one cell from the helicoid.
    pub min_off_surface: f64,
}

impl RaySummary {
    pub fn localized(&self) -> bool {
        self.found_crossings == self.expected_crossings && self.max_offset <= self.cell && self.min_off_surface > 0.0
    }
}

/// Samples `u` on `rays` vertical segments of length `2 lambda` at radii in
/// `[r_lo, r_hi]` and angles from a low-discrepancy sequence.
pub fn zero_set_rays(grid: &CylGrid, field: &ReducedField, rays: usize, r_lo: f64, r_hi: f64) -> Result<RaySummary> {
    field.check(grid)?;
    if !(0.0 < r_lo && r_lo < r_hi && r_hi <= grid.r_max) {
        return domain("need 0 < r_lo < r_hi <= R");
    }
    let lambda = grid.lambda;
    let cell = grid.hs();
    let samples = 16 * grid.ns;
    let golden = 0.5 * (5f64.sqrt() - 1.0);
    let (mut expected, mut found) = (0, 0);
    let mut max_offset = 0.0f64;
    let mut min_off = f64::INFINITY;
    for n in 0..rays {
        let r = r_lo + (r_hi - r_lo) * ((n as f64 + 0.5) / rays as f64);
        let phi = 2.0 * PI * ((n as f64 * golden).fract()) - PI;
        let (x1, x2) = (r * phi.cos(), r * phi.sin());
        // crossings at x3 = (lambda/pi) phi + m lambda
        let base = lambda / PI * phi;
        let z0 = base + 0.3137 * lambda;
        let dz = 2.0 * lambda / samples as f64;
        let zs: Vec<f64> = (0..=samples).map(|m| z0 + m as f64 * dz).collect();
        let us = zs
            .iter()
            .map(|&z| reconstruct3d(grid, field, [x1, x2, z], 0.0))
            .collect::<Result<Vec<_>>>()?;
        let nearest = |z: f64| {
            let m = ((z - base) / lambda).round();
            (z - base - m * lambda).abs()
        };
        expected += (1..=2).filter(|m| base + *m as f64 * lambda < zs[samples]).count();
        for m in 0..samples {
            if nearest(zs[m]) > cell {
                min_off = min_off.min(us[m].abs());
            }
            if us[m] * us[m + 1] < 0.0 || us[m + 1] == 0.0 {
                found += 1;
                // locate the zero by bisection on the sampled bracket
                let (mut a, mut b) = (zs[m], zs[m + 1]);
                let ua = us[m];
                for _ in 0..60 {
                    let c = 0.5 * (a + b);
                    let uc = reconstruct3d(grid, field, [x1, x2, c], 0.0)?;
                    if uc == 0.0 {
                        a = c;
                        b = c;
                        break;
                    }
                    if (uc > 0.0) == (ua > 0.0) {
                        a = c;
                    } else {
                        b = c;
                    }
                }
                max_offset = max_offset.max(nearest(0.5 * (a + b)));
            }
        }
    }
    Ok(RaySummary {
        rays,
        expected_crossings: expected,
        found_crossings: found,
        max_offset,
        cell,
        min_off_surface: min_off,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample_field() -> (CylGrid, ReducedField) {
        let g = CylGrid::new(3.0, 0.5, 4.0, 6.0, 16, 12, 12).unwrap();
        let f = ReducedField::from_fn(&g, |r, s, y| (PI * s / 3.0).sin() * (r * (4.0 - r) / 4.0) * (-y).exp());
        (g, f)
    }

    #[test]
    fn vanishes_on_the_helicoid() {
        let (g, f) = sample_field();
        for &(t, th) in &[(1.0, 0.3), (-2.0, 1.1), (3.5, -2.0), (0.5, 7.0)] {
            let x = [t * f64::cos(th), t * f64::sin(th), 3.0 / PI * th];
            let u = reconstruct3d(&g, &f, x, 0.0).unwrap();
            assert!(u.abs() < 1e-12, "{u}");
        }
    }

    #[test]
    fn rejects_points_outside_the_cylinder() {
        let (g, f) = sample_field();
        assert!(reconstruct3d(&g, &f, [4.5, 0.0, 1.0], 0.0).is_err());
        assert!(reconstruct3d(&g, &f, [1.0, 0.0, 1.0], 7.0).is_err());
    }

    #[test]
    fn interpolation_reproduces_nodes() {
        let (g, f) = sample_field();
        let (i, k, j) = (5, 4, 3);
        let x = [g.r[i], 0.0, g.s(k)];
        let u = reconstruct3d(&g, &f, x, g.y[j]).unwrap();
        assert!((u - f.get(i, k, j)).abs() < 1e-14);
    }

    #[test]
    fn rays_of_a_positive_field_cross_exactly_at_the_helicoid() {
        let (g, f) = sample_field();
        let sum = zero_set_rays(&g, &f, 20, 0.5, 3.5).unwrap();
        assert!(sum.localized(), "{sum:?}");
        assert_eq!(sum.expected_crossings, 40);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn screw_invariance(r in 0.1f64..3.9, th in -3.0f64..3.0, z in -5.0f64..5.0, beta in -6.0f64..6.0, y in 0.0f64..5.0) {
            let (g, f) = sample_field();
            let a = reconstruct3d(&g, &f, [r * th.cos(), r * th.sin(), z], y).unwrap();
            let x = [r * (th + beta).cos(), r * (th + beta).sin(), z + 3.0 / PI * beta];
            let b = reconstruct3d(&g, &f, x, y).unwrap();
            prop_assert!((a - b).abs() < 1e-9);
        }

        #[test]
        fn odd_under_reflection(r in 0.1f64..3.9, z in -5.0f64..5.0) {
            let (g, f) = sample_field();
            let a = reconstruct3d(&g, &f, [r, 0.0, z], 0.0).unwrap();
            let b = reconstruct3d(&g, &f, [r, 0.0, -z], 0.0).unwrap();
            prop_assert!((a + b).abs() < 1e-9);
        }
    }
}
