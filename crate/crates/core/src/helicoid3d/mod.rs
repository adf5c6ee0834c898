//! Screw-invariant solutions reduced to the half period `theta = 0`:
//! `V(r, s, y)` on the cylinder `[0, R] x [0, lambda] x [0, L]`.
//!
//! The energy has density `y^{1-2a} (V_r^2 + (1 + lambda^2/(pi^2 r^2)) V_s^2 + V_y^2)`
//! against `r dr ds dy`, plus `F(V)` on `y = 0` against `r dr ds`.

mod barrier;
mod competitor;
mod decay;
mod reconstruct;
mod solver;

pub use barrier::{barrier_check, BarrierParams, BarrierReport, BarrierSample, WorstPoint};
pub use competitor::{competitor_energy, eta, CompetitorEnergy, CompetitorParams};
pub use decay::{decay_rate, decay_rate_window, DecayFit};
pub use reconstruct::{reconstruct3d, zero_set_rays, RaySummary};
pub use solver::{energy_cyl, minimize_cyl, pde_residual, CylProblem, CylSolution};

use std::f64::consts::PI;

use crate::error::{domain, invalid, Result};
use crate::specfun::{c_alpha, ExtensionProfile};
use crate::strip1d::{weighted_cells, StripField, StripGrid};

/// Cylinder grid: uniform in `r` and `s`, graded in `y` as on the strip.
#[derive(Debug, Clone)]
pub struct CylGrid {
    pub r_max: f64,
    pub lambda: f64,
    pub height: f64,
    pub alpha: f64,
    pub nr: usize,
    pub ns: usize,
    pub ny: usize,
    pub r: Vec<f64>,
    pub y: Vec<f64>,
    /// `int y^{1-2a}` over the dual cell of `y_j`, `j < ny`.
    pub ymass: Vec<f64>,
    /// Harmonic `y` conductances of edges `(j, j+1)`.
    pub ycond: Vec<f64>,
    /// Radial conductance `r_{i+1/2} / h_r` of edges `(i, i+1)`.
    pub rcond: Vec<f64>,
    /// `int r dr` over the dual cell of `r_i` (half cells at both ends).
    pub rmass: Vec<f64>,
    /// `int (r + lambda^2/(pi^2 r)) dr` over the dual cell of `r_i`, `0 < i < nr`.
    pub ang: Vec<f64>,
    pub c_alpha: f64,
}

impl CylGrid {
    pub fn new(lambda: f64, alpha: f64, r_max: f64, height: f64, nr: usize, ns: usize, ny: usize) -> Result<Self> {
        if !(lambda > 0.0 && r_max > 0.0 && height > 0.0) {
            return domain("lambda, R and L must be positive");
        }
        if nr < 2 || ns < 2 || ny < 2 {
            return domain("need at least two intervals in each direction");
        }
        let c = c_alpha(alpha)?;
        let hr = r_max / nr as f64;
        let r: Vec<f64> = (0..=nr).map(|i| r_max * i as f64 / nr as f64).collect();
        let grading = (1.0 / (2.0 * alpha)).max(1.0);
        let y: Vec<f64> = (0..=ny)
            .map(|j| height * (j as f64 / ny as f64).powf(grading))
            .collect();
        let (ymass, ycond) = weighted_cells(&y, alpha);
        let rcond = (0..nr).map(|i| (r[i] + 0.5 * hr) / hr).collect();
        let k2 = (lambda / PI).powi(2);
        let mut rmass = vec![0.0; nr + 1];
        let mut ang = vec![0.0; nr + 1];
        for i in 0..=nr {
            let lo = (r[i] - 0.5 * hr).max(0.0);
            let hi = (r[i] + 0.5 * hr).min(r_max);
            rmass[i] = 0.5 * (hi - lo) * (hi + lo);
            if i > 0 && i < nr {
                ang[i] = rmass[i] + k2 * (hi / lo).ln();
            }
        }
        Ok(Self { r_max, lambda, height, alpha, nr, ns, ny, r, y, ymass, ycond, rcond, rmass, ang, c_alpha: c })
    }

    /// `R = 8 lambda / pi`, `L = 12 lambda / pi`.
    pub fn with_defaults(lambda: f64, alpha: f64, nr: usize, ns: usize, ny: usize) -> Result<Self> {
        Self::new(lambda, alpha, 8.0 * lambda / PI, 12.0 * lambda / PI, nr, ns, ny)
    }

    #[inline]
    pub fn hr(&self) -> f64 {
        self.r_max / self.nr as f64
    }

    #[inline]
    pub fn hs(&self) -> f64 {
        self.lambda / self.ns as f64
    }

    #[inline]
    pub fn s(&self, k: usize) -> f64 {
        self.lambda * k as f64 / self.ns as f64
    }

    #[inline]
    pub fn idx(&self, i: usize, k: usize, j: usize) -> usize {
        (i * (self.ns + 1) + k) * (self.ny + 1) + j
    }

    pub fn len(&self) -> usize {
        (self.nr + 1) * (self.ns + 1) * (self.ny + 1)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Axis, outer wall, lateral faces and top are Dirichlet.
    #[inline]
    pub fn is_dirichlet(&self, i: usize, k: usize, j: usize) -> bool {
        i == 0 || i == self.nr || k == 0 || k == self.ns || j == self.ny
    }

    /// The strip grid with the same `(s, y)` discretization.
    pub fn strip(&self) -> Result<StripGrid> {
        StripGrid::new(self.lambda, self.alpha, self.ns, self.ny, self.height)
    }
}

/// Nodal values `V[i_r][i_s][i_y]` on a [`CylGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedField {
    pub nr: usize,
    pub ns: usize,
    pub ny: usize,
    pub values: Vec<f64>,
}

impl ReducedField {
    pub fn zeros(grid: &CylGrid) -> Self {
        Self { nr: grid.nr, ns: grid.ns, ny: grid.ny, values: vec![0.0; grid.len()] }
    }

    /// Samples `f(r, s, y)` at every node, Dirichlet nodes included.
    pub fn from_fn_all<F: Fn(f64, f64, f64) -> f64>(grid: &CylGrid, f: F) -> Self {
        let mut out = Self::zeros(grid);
        for i in 0..=grid.nr {
            for k in 0..=grid.ns {
                for j in 0..=grid.ny {
                    out.values[grid.idx(i, k, j)] = f(grid.r[i], grid.s(k), grid.y[j]);
                }
            }
        }
        out
    }

    /// Samples `f(r, s, y)` at free nodes; Dirichlet nodes are zero.
    pub fn from_fn<F: Fn(f64, f64, f64) -> f64>(grid: &CylGrid, f: F) -> Self {
        let mut out = Self::zeros(grid);
        for i in 1..grid.nr {
            for k in 1..grid.ns {
                for j in 0..grid.ny {
                    out.values[grid.idx(i, k, j)] = f(grid.r[i], grid.s(k), grid.y[j]);
                }
            }
        }
        out
    }

    /// `amplitude sin(pi s/lambda) phi_2(pi y/lambda) min(r, 1)`.
    pub fn initial_guess(grid: &CylGrid, amplitude: f64) -> Result<Self> {
        let p = ExtensionProfile::decaying(grid.alpha)?;
        let k = PI / grid.lambda;
        let prof: Vec<f64> = grid.y.iter().map(|&y| p.value(k * y)).collect::<Result<_>>()?;
        let mut out = Self::zeros(grid);
        for i in 1..grid.nr {
            let rr = grid.r[i].min(1.0);
            for kk in 1..grid.ns {
                let sn = (k * grid.s(kk)).sin();
                for j in 0..grid.ny {
                    out.values[grid.idx(i, kk, j)] = amplitude * rr * sn * prof[j];
                }
            }
        }
        Ok(out)
    }

    /// `eta(r) g(s, y)` for a strip field `g` on the matching strip grid.
    pub fn from_product(grid: &CylGrid, radial: &[f64], g: &StripField) -> Result<Self> {
        if g.ns != grid.ns || g.ny != grid.ny || radial.len() != grid.nr + 1 {
            return invalid("radial factor or strip field does not match the cylinder grid");
        }
        let mut out = Self::zeros(grid);
        for i in 1..grid.nr {
            for k in 1..grid.ns {
                for j in 0..grid.ny {
                    out.values[grid.idx(i, k, j)] = radial[i] * g.get(k, j);
                }
            }
        }
        Ok(out)
    }

    #[inline]
    pub fn get(&self, i: usize, k: usize, j: usize) -> f64 {
        self.values[(i * (self.ns + 1) + k) * (self.ny + 1) + j]
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub(crate) fn check(&self, grid: &CylGrid) -> Result<()> {
        if self.nr != grid.nr || self.ns != grid.ns || self.ny != grid.ny || self.values.len() != grid.len() {
            return invalid("field does not match grid");
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return invalid("field contains non-finite values");
        }
        Ok(())
    }
}
