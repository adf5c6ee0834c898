//! Regions bounded by helicoids, the reflection that swaps them, and
//! singular-integral quadrature for nonlocal mean curvature and fractional
//! perimeter.

use std::f64::consts::PI;

use crate::error::{domain, Result};

mod kronrod;
mod perimeter;
mod pv;

pub use perimeter::{
    fractional_perimeter, interaction_l, interaction_l_1d, Aabb, Ball, Complement, EmptySet, HalfSpace,
    PerimeterEstimate, PerimeterQuadrature, RaySet,
};
pub use pv::{nmc_at, nmc_helicoid_symmetrized, symmetrized_pairing, NmcEstimate, PVQuadrature, PairedSum};

/// Width of the band around `g in {0, pi}` treated as the surface.
pub const BOUNDARY_BAND: f64 = 1e-12;

/// Side of a surface a point lies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RegionLabel {
    Plus,
    Minus,
    Boundary,
}

impl RegionLabel {
    /// `+1`, `-1` or `0`.
    pub fn sign(self) -> f64 {
        match self {
            RegionLabel::Plus => 1.0,
            RegionLabel::Minus => -1.0,
            RegionLabel::Boundary => 0.0,
        }
    }
}

/// A set `E` given by a point classifier: `Plus` inside, `Minus` in the
/// complement, `Boundary` on the separating surface.
pub trait Region: Sync {
    fn label(&self, x: [f64; 3]) -> RegionLabel;
}

/// The helicoid `x3 = (lambda/pi) theta` with its two complementary regions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScrewSurface {
    lambda: f64,
}

impl ScrewSurface {
    pub fn new(lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return domain("lambda must be positive and finite");
        }
        Ok(Self { lambda })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Phase `g = (pi x3 / lambda - atan2(x2, x1)) mod 2 pi`, `None` on the axis.
    pub fn phase(&self, x: [f64; 3]) -> Option<f64> {
        if x[0] == 0.0 && x[1] == 0.0 {
            return None;
        }
        let phi = x[1].atan2(x[0]);
        Some((PI * x[2] / self.lambda - phi).rem_euclid(2.0 * PI))
    }
}

impl Region for ScrewSurface {
    fn label(&self, x: [f64; 3]) -> RegionLabel {
        classify(x, self)
    }
}

/// `Plus` for `g in (0, pi)`, `Minus` for `g in (pi, 2 pi)`, `Boundary` within
/// [`BOUNDARY_BAND`] of `{0, pi}` and on the axis.
pub fn classify(x: [f64; 3], surface: &ScrewSurface) -> RegionLabel {
    let Some(g) = surface.phase(x) else {
        return RegionLabel::Boundary;
    };
    if g < BOUNDARY_BAND || (g - PI).abs() < BOUNDARY_BAND || 2.0 * PI - g < BOUNDARY_BAND {
        RegionLabel::Boundary
    } else if g < PI {
        RegionLabel::Plus
    } else {
        RegionLabel::Minus
    }
}

/// Rotation by `pi` about the `x1` axis: `(x1, x2, x3) -> (x1, -x2, -x3)`.
///
/// Maps `E+` onto `E-`, fixes the helicoid and every point `(t0, 0, 0)`.
pub fn symmetry_map(x: [f64; 3]) -> [f64; 3] {
    [x[0], -x[1], -x[2]]
}

/// Screw motion `sigma^beta`: rotation by `beta` about the `x3` axis
/// followed by the translation `lambda beta / pi` along it.
pub fn screw_motion(lambda: f64, beta: f64, x: [f64; 3]) -> [f64; 3] {
    let (s, c) = beta.sin_cos();
    [c * x[0] - s * x[1], s * x[0] + c * x[1], x[2] + lambda * beta / PI]
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 0.5) {
        return domain(format!("alpha = {alpha} must lie in (0, 1/2)"));
    }
    Ok(())
}

pub(crate) fn norm(x: [f64; 3]) -> f64 {
    (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn labels_of_reference_points() {
        for lambda in [1.0, PI, 7.5] {
            let h = ScrewSurface::new(lambda).unwrap();
            assert_eq!(classify([1.0, 0.0, lambda / 2.0], &h), RegionLabel::Plus);
            assert_eq!(classify([1.0, 0.0, 0.0], &h), RegionLabel::Boundary);
            assert_eq!(classify([1.0, 0.0, -lambda / 2.0], &h), RegionLabel::Minus);
            assert_eq!(classify([0.0, 0.0, 0.3], &h), RegionLabel::Boundary);
            // theta = pi/2 on the helicoid, both sheets through the axis
            assert_eq!(classify([0.0, 2.0, lambda / 2.0], &h), RegionLabel::Boundary);
            assert_eq!(classify([0.0, -2.0, lambda / 2.0], &h), RegionLabel::Boundary);
        }
        assert!(ScrewSurface::new(0.0).is_err());
    }

    #[test]
    fn reflection_preserves_distance_to_axis_points() {
        let x = [1.0, 0.0, 0.5];
        let x0 = [2.0, 0.0, 0.0];
        let d = |a: [f64; 3], b: [f64; 3]| norm([a[0] - b[0], a[1] - b[1], a[2] - b[2]]);
        assert_eq!(d(symmetry_map(x), x0), d(x, x0));
    }

    #[test]
    fn plus_points_map_to_minus() {
        let h = ScrewSurface::new(PI).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut plus = 0;
        for _ in 0..100_000 {
            let x = [rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)];
            if classify(x, &h) == RegionLabel::Plus {
                plus += 1;
                assert_eq!(classify(symmetry_map(x), &h), RegionLabel::Minus, "{x:?}");
            }
        }
        assert!(plus > 40_000);
    }

    /// Equal volume of `E+` in a box and of `E-` in its image, by independent samples.
    #[test]
    fn reflection_preserves_volume() {
        let h = ScrewSurface::new(1.3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (lo, hi) = ([0.2, 0.5, -0.3], [1.7, 1.4, 0.9]);
        let n = 200_000;
        let mut frac = |minus_in_image: bool| {
            let mut count = 0;
            for _ in 0..n {
                let p = [0, 1, 2].map(|a| rng.gen_range(lo[a]..hi[a]));
                let hit = if minus_in_image {
                    classify(symmetry_map(p), &h) == RegionLabel::Minus
                } else {
                    classify(p, &h) == RegionLabel::Plus
                };
                count += hit as usize;
            }
            count as f64 / n as f64
        };
        let (a, b) = (frac(false), frac(true));
        // binomial standard deviation is below 1.2e-3
        assert!((a - b).abs() < 6e-3, "{a} vs {b}");
    }

    proptest! {
        #[test]
        fn screw_invariant(x in prop::array::uniform3(-4.0f64..4.0), beta in -9.0f64..9.0, lambda in 0.3f64..5.0) {
            let h = ScrewSurface::new(lambda).unwrap();
            let g = h.phase(x).unwrap();
            // stay away from the band so rounding in the motion cannot flip the label
            prop_assume!(g.min((g - PI).abs()).min(2.0 * PI - g) > 1e-9);
            prop_assert_eq!(classify(screw_motion(lambda, beta, x), &h), classify(x, &h));
        }

        #[test]
        fn reflection_swaps_sides(x in prop::array::uniform3(-4.0f64..4.0), lambda in 0.3f64..5.0) {
            let h = ScrewSurface::new(lambda).unwrap();
            let fx = symmetry_map(x);
            prop_assert_eq!(symmetry_map(fx), x);
            match classify(x, &h) {
                RegionLabel::Plus => prop_assert_eq!(classify(fx, &h), RegionLabel::Minus),
                RegionLabel::Minus => prop_assert_eq!(classify(fx, &h), RegionLabel::Plus),
                RegionLabel::Boundary => prop_assert_eq!(classify(fx, &h), RegionLabel::Boundary),
            }
        }
    }
}
