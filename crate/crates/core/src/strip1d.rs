//! The extended one-dimensional problem on the half strip `[0, lambda] x [0, L]`.
//!
//! The weighted Dirichlet energy is discretized by finite volumes with
//! two-point fluxes. Dual-cell masses `int y^{1-2a} dy` and harmonic
//! conductances `1 / int y^{2a-1} dy` are exact, so the degenerate weight is
//! never evaluated at `y = 0`.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{domain, invalid, Error, Result};
use crate::numerics::{compensated_sum, pow_difference, solve_tridiagonal, Dst1};
use crate::optimize::{self, Bounds, LbfgsOptions, Objective};
use crate::potential::{lambda_star, DoubleWellPotential};
use crate::specfun::{c_alpha, ExtensionProfile};

/// `int_a^b y^{q} dy` for `q > -1`, `0 <= a <= b`.
pub(crate) fn power_integral(a: f64, b: f64, q: f64) -> f64 {
    pow_difference(a, b, q + 1.0) / (q + 1.0)
}

/// Graded finite-volume grid in `y` and uniform grid in `s`.
#[derive(Debug, Clone)]
pub struct StripGrid {
    pub lambda: f64,
    pub alpha: f64,
    /// Number of intervals in `s`.
    pub ns: usize,
    /// Number of intervals in `y`.
    pub ny: usize,
    pub height: f64,
    pub grading: f64,
    /// `y_0 = 0 < ... < y_ny = L`.
    pub y: Vec<f64>,
    /// `int y^{1-2a}` over the dual cell of each node `j < ny`.
    pub mass: Vec<f64>,
    /// Harmonic conductance of the edge `(j, j+1)`.
    pub cond: Vec<f64>,
    pub c_alpha: f64,
}

impl StripGrid {
    pub fn new(lambda: f64, alpha: f64, ns: usize, ny: usize, height: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return domain(format!("lambda must be positive, got {lambda}"));
        }
        if !(height > 0.0 && height.is_finite()) {
            return domain(format!("height must be positive, got {height}"));
        }
        if ns < 2 || ny < 2 {
            return domain("need at least two intervals in each direction");
        }
        let c = c_alpha(alpha)?;
        let grading = (1.0 / (2.0 * alpha)).max(1.0);
        let y: Vec<f64> = (0..=ny)
            .map(|j| height * (j as f64 / ny as f64).powf(grading))
            .collect();
        let (mass, cond) = weighted_cells(&y, alpha);
        Ok(Self { lambda, alpha, ns, ny, height, grading, y, mass, cond, c_alpha: c })
    }

    /// `N_s = N_y = 128` and `L = 12 lambda / pi`.
    pub fn with_defaults(lambda: f64, alpha: f64) -> Result<Self> {
        Self::new(lambda, alpha, 128, 128, 12.0 * lambda / PI)
    }

    #[inline]
    pub fn h(&self) -> f64 {
        self.lambda / self.ns as f64
    }

    #[inline]
    pub fn s(&self, i: usize) -> f64 {
        self.lambda * i as f64 / self.ns as f64
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        i * (self.ny + 1) + j
    }

    pub fn len(&self) -> usize {
        (self.ns + 1) * (self.ny + 1)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn is_dirichlet(&self, i: usize, j: usize) -> bool {
        i == 0 || i == self.ns || j == self.ny
    }

    /// `(M_0 mu_h + G_0 (1 - psi_1)) / c_a` and the profile `psi` of the discrete
    /// extension of the trace `sin(pi s / lambda)`.
    pub fn discrete_first_mode(&self) -> (f64, Vec<f64>) {
        let h = self.h();
        let mu = (2.0 - 2.0 * (PI / self.ns as f64).cos()) / (h * h);
        // rows j = 1..ny-1 of the per-mode operator with psi_0 = 1, psi_ny = 0
        let m = self.ny - 1;
        let mut lower = vec![0.0; m];
        let mut diag = vec![0.0; m];
        let mut upper = vec![0.0; m];
        let mut rhs = vec![0.0; m];
        for r in 0..m {
            let j = r + 1;
            diag[r] = self.mass[j] * mu + self.cond[j] + self.cond[j - 1];
            if r > 0 {
                lower[r] = -self.cond[j - 1];
            }
            upper[r] = -self.cond[j];
        }
        rhs[0] = self.cond[0];
        let mut work = vec![0.0; m];
        solve_tridiagonal(&lower, &diag, &upper, &mut rhs, &mut work);
        let mut psi = Vec::with_capacity(self.ny + 1);
        psi.push(1.0);
        psi.extend_from_slice(&rhs);
        psi.push(0.0);
        let lam = (self.mass[0] * mu + self.cond[0] * (1.0 - psi[1])) / self.c_alpha;
        (lam, psi)
    }
}

pub(crate) fn weighted_cells(y: &[f64], alpha: f64) -> (Vec<f64>, Vec<f64>) {
    let ny = y.len() - 1;
    let mid = |j: usize| 0.5 * (y[j] + y[j + 1]);
    let mass = (0..ny)
        .map(|j| {
            let a = if j == 0 { 0.0 } else { mid(j - 1) };
            power_integral(a, mid(j), 1.0 - 2.0 * alpha)
        })
        .collect();
    let cond = (0..ny)
        .map(|j| 1.0 / power_integral(y[j], y[j + 1], 2.0 * alpha - 1.0))
        .collect();
    (mass, cond)
}

/// Nodal values `V(s_i, y_j)` with zero Dirichlet data at `s = 0, lambda` and `y = L`.
#[derive(Debug, Clone, PartialEq)]
pub struct StripField {
    pub ns: usize,
    pub ny: usize,
    pub values: Vec<f64>,
}

impl StripField {
    pub fn zeros(grid: &StripGrid) -> Self {
        Self { ns: grid.ns, ny: grid.ny, values: vec![0.0; grid.len()] }
    }

    /// Builds a field from a function of `(s, y)`, zeroing the Dirichlet nodes.
    pub fn from_fn<F: Fn(f64, f64) -> f64>(grid: &StripGrid, f: F) -> Self {
        let mut out = Self::zeros(grid);
        for i in 0..=grid.ns {
            for j in 0..=grid.ny {
                if !grid.is_dirichlet(i, j) {
                    out.values[grid.idx(i, j)] = f(grid.s(i), grid.y[j]);
                }
            }
        }
        out
    }

    /// `amplitude * sin(pi s / lambda) * phi_2(pi y / lambda)`.
    pub fn first_mode(grid: &StripGrid, amplitude: f64) -> Result<Self> {
        let p = ExtensionProfile::decaying(grid.alpha)?;
        let k = PI / grid.lambda;
        let prof: Vec<f64> = grid
            .y
            .iter()
            .map(|&y| p.value(k * y))
            .collect::<Result<_>>()?;
        let mut out = Self::zeros(grid);
        for i in 1..grid.ns {
            let sn = (k * grid.s(i)).sin();
            for j in 0..grid.ny {
                out.values[grid.idx(i, j)] = amplitude * sn * prof[j];
            }
        }
        Ok(out)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * (self.ny + 1) + j]
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Trace `V(s_i, 0)`.
    pub fn trace(&self) -> Vec<f64> {
        (0..=self.ns).map(|i| self.get(i, 0)).collect()
    }

    fn check(&self, grid: &StripGrid) -> Result<()> {
        if self.ns != grid.ns || self.ny != grid.ny || self.values.len() != grid.len() {
            return invalid("field does not match grid");
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return invalid("field contains non-finite values");
        }
        Ok(())
    }
}

/// Discrete `E_0`: weighted Dirichlet energy over `2 c_a` plus the trace potential.
pub fn energy_e0(grid: &StripGrid, field: &StripField, potential: &DoubleWellPotential) -> Result<f64> {
    field.check(grid)?;
    Ok(StripProblem::new(grid, potential).energy(&field.values))
}

/// Max over free nodes of `|dE/dV|` divided by the node's measure.
pub fn el_residual(grid: &StripGrid, field: &StripField, potential: &DoubleWellPotential) -> Result<f64> {
    field.check(grid)?;
    let prob = StripProblem::new(grid, potential);
    let mut g = vec![0.0; grid.len()];
    prob.energy_grad(&field.values, &mut g);
    Ok(prob.residual(&g))
}

/// Energy, gradient and preconditioner of the discrete problem.
pub struct StripProblem<'a> {
    grid: &'a StripGrid,
    potential: &'a DoubleWellPotential,
    dst: Dst1,
    /// Per-mode tridiagonal in `y`: `(lower, diag, upper)`, each of length `ny`.
    modes: Vec<(Vec<f64>, Vec<f64>, Vec<f64>)>,
}

impl<'a> StripProblem<'a> {
    pub fn new(grid: &'a StripGrid, potential: &'a DoubleWellPotential) -> Self {
        let h = grid.h();
        let c = grid.c_alpha;
        let ny = grid.ny;
        let modes = (1..grid.ns)
            .map(|k| {
                let mu = (2.0 - 2.0 * (PI * k as f64 / grid.ns as f64).cos()) / (h * h);
                let mut lower = vec![0.0; ny];
                let mut diag = vec![0.0; ny];
                let mut upper = vec![0.0; ny];
                for j in 0..ny {
                    let below = if j > 0 { grid.cond[j - 1] } else { 0.0 };
                    diag[j] = h * (grid.mass[j] * mu + grid.cond[j] + below) / c;
                    if j > 0 {
                        lower[j] = -h * grid.cond[j - 1] / c;
                    }
                    upper[j] = -h * grid.cond[j] / c;
                }
                (lower, diag, upper)
            })
            .collect();
        Self { grid, potential, dst: Dst1::new(grid.ns), modes }
    }

    pub fn energy(&self, v: &[f64]) -> f64 {
        let mut g = vec![0.0; v.len()];
        self.energy_grad(v, &mut g)
    }
}

impl Objective for StripProblem<'_> {
    fn dim(&self) -> usize {
        self.grid.len()
    }

    fn energy_grad(&self, v: &[f64], grad: &mut [f64]) -> f64 {
        let g = self.grid;
        let (ns, ny) = (g.ns, g.ny);
        let h = g.h();
        let inv_c = 1.0 / g.c_alpha;
        let stride = ny + 1;
        let rows: Vec<f64> = grad
            .par_chunks_mut(stride)
            .enumerate()
            .map(|(i, grow)| {
                grow.fill(0.0);
                let mut e = Vec::with_capacity(2 * ny + 1);
                // s-edge (i, i+1)
                if i < ns {
                    for j in 0..ny {
                        let d = v[(i + 1) * stride + j] - v[i * stride + j];
                        e.push(0.5 * inv_c * g.mass[j] / h * d * d);
                    }
                }
                let endpoint = i == 0 || i == ns;
                let weight = if endpoint { 0.5 * h } else { h };
                e.push(weight * self.potential.f(v[i * stride]));
                if endpoint {
                    return compensated_sum(e);
                }
                for j in 0..ny {
                    let d = v[i * stride + j + 1] - v[i * stride + j];
                    e.push(0.5 * inv_c * h * g.cond[j] * d * d);
                }
                for j in 0..ny {
                    let c = v[i * stride + j];
                    let lap_s = 2.0 * c - v[(i - 1) * stride + j] - v[(i + 1) * stride + j];
                    let mut gy = g.cond[j] * (c - v[i * stride + j + 1]);
                    if j > 0 {
                        gy += g.cond[j - 1] * (c - v[i * stride + j - 1]);
                    }
                    grow[j] = inv_c * (g.mass[j] / h * lap_s + h * gy);
                }
                grow[0] += h * self.potential.df(v[i * stride]);
                compensated_sum(e)
            })
            .collect();
        compensated_sum(rows)
    }

    fn precondition(&self, r: &[f64], out: &mut [f64]) {
        let g = self.grid;
        let (ns, ny) = (g.ns, g.ny);
        let stride = ny + 1;
        // modal[k-1][j]
        let mut modal = vec![vec![0.0; ny]; ns - 1];
        let mut buf = self.dst.make_buffer();
        let mut line = vec![0.0; ns - 1];
        for j in 0..ny {
            for i in 1..ns {
                line[i - 1] = r[i * stride + j];
            }
            self.dst.apply_with(&mut line, &mut buf);
            for k in 0..ns - 1 {
                modal[k][j] = line[k];
            }
        }
        modal.par_iter_mut().zip(&self.modes).for_each(|(col, (lo, di, up))| {
            let mut work = vec![0.0; ny];
            solve_tridiagonal(lo, di, up, col, &mut work);
        });
        out.fill(0.0);
        let scale = 2.0 / ns as f64;
        for j in 0..ny {
            for k in 0..ns - 1 {
                line[k] = modal[k][j];
            }
            self.dst.apply_with(&mut line, &mut buf);
            for i in 1..ns {
                out[i * stride + j] = scale * line[i - 1];
            }
        }
    }

    fn residual(&self, pg: &[f64]) -> f64 {
        let g = self.grid;
        let h = g.h();
        let stride = g.ny + 1;
        let mut worst = 0.0f64;
        for i in 1..g.ns {
            for j in 0..g.ny {
                let measure = h * (g.mass[j] + if j == 0 { 1.0 } else { 0.0 });
                worst = worst.max(pg[i * stride + j].abs() / measure);
            }
        }
        worst
    }
}

/// Solver outcome on the strip.
#[derive(Debug, Clone)]
pub struct StripSolution {
    pub field: StripField,
    pub energy: f64,
    pub residual: f64,
    pub iterations: usize,
    pub energy_history: Vec<f64>,
}

/// Minimizes `E_0` from `init`. Nonnegative initial data keep the iterates
/// in `[0, 1]`; otherwise they are kept in `[-1, 1]`.
pub fn minimize_strip(
    grid: &StripGrid,
    potential: &DoubleWellPotential,
    init: &StripField,
    opts: &LbfgsOptions,
) -> Result<StripSolution> {
    init.check(grid)?;
    for i in 0..=grid.ns {
        for j in 0..=grid.ny {
            if grid.is_dirichlet(i, j) && init.get(i, j) != 0.0 {
                return invalid("initial field violates the Dirichlet conditions");
            }
        }
    }
    let bounds = if init.values.iter().all(|&v| v >= 0.0) { Bounds::UNIT } else { Bounds::SYMMETRIC };
    let prob = StripProblem::new(grid, potential);
    let out = optimize::minimize(&prob, &init.values, bounds, opts)?;
    Ok(StripSolution {
        field: StripField { ns: grid.ns, ny: grid.ny, values: out.x },
        energy: out.energy,
        residual: out.residual,
        iterations: out.iterations,
        energy_history: out.energy_history,
    })
}

/// Grid resolution and truncation used for scans over `lambda`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StripConfig {
    pub ns: usize,
    pub ny: usize,
    /// `L = height_factor * lambda / pi`.
    pub height_factor: f64,
    pub init_amplitude: f64,
    pub solver: LbfgsOptions,
}

impl Default for StripConfig {
    fn default() -> Self {
        Self { ns: 128, ny: 128, height_factor: 12.0, init_amplitude: 0.1, solver: LbfgsOptions::default() }
    }
}

impl StripConfig {
    pub fn grid(&self, lambda: f64, alpha: f64) -> Result<StripGrid> {
        StripGrid::new(lambda, alpha, self.ns, self.ny, self.height_factor * lambda / PI)
    }

    /// Minimizer from `init_amplitude * w` at this `lambda`.
    pub fn solve(&self, potential: &DoubleWellPotential, alpha: f64, lambda: f64) -> Result<(StripGrid, StripSolution)> {
        let grid = self.grid(lambda, alpha)?;
        let init = StripField::first_mode(&grid, self.init_amplitude)?;
        let sol = minimize_strip(&grid, potential, &init, &self.solver)?;
        Ok((grid, sol))
    }
}

/// Sup norm separating trivial from nontrivial minimizers.
pub const TRIVIAL_SUP: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdRow {
    pub lambda: f64,
    pub sup: f64,
    pub energy: f64,
    pub trivial_energy: f64,
    pub residual: f64,
}

impl ThresholdRow {
    pub fn is_trivial(&self) -> bool {
        self.sup < TRIVIAL_SUP
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdScan {
    pub rows: Vec<ThresholdRow>,
    /// Bisected crossing, if the scan brackets one.
    pub crossing: Option<f64>,
    /// `lambda_*` from the potential, for comparison.
    pub lambda_star: f64,
}

fn threshold_row(potential: &DoubleWellPotential, alpha: f64, lambda: f64, cfg: &StripConfig) -> Result<ThresholdRow> {
    let (_, sol) = cfg.solve(potential, alpha, lambda)?;
    Ok(ThresholdRow {
        lambda,
        sup: sol.field.sup_norm(),
        energy: sol.energy,
        trivial_energy: lambda * potential.f(0.0),
        residual: sol.residual,
    })
}

/// Minimizes at each `lambda` and bisects the first trivial/nontrivial transition
/// to relative width `rel_tol`.
pub fn threshold_scan(
    potential: &DoubleWellPotential,
    alpha: f64,
    lambdas: &[f64],
    cfg: &StripConfig,
    rel_tol: f64,
) -> Result<ThresholdScan> {
    let star = lambda_star(potential, alpha)?;
    if lambdas.iter().any(|&l| !(l > 0.0)) {
        return domain("lambda values must be positive");
    }
    let mut sorted = lambdas.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rows = sorted
        .iter()
        .map(|&l| threshold_row(potential, alpha, l, cfg))
        .collect::<Result<Vec<_>>>()?;
    let bracket = rows
        .windows(2)
        .find(|w| w[0].is_trivial() && !w[1].is_trivial())
        .map(|w| (w[0].lambda, w[1].lambda));
    let crossing = match bracket {
        Some((mut lo, mut hi)) => {
            while (hi - lo) > rel_tol * hi {
                let mid = 0.5 * (lo + hi);
                if threshold_row(potential, alpha, mid, cfg)?.is_trivial() {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            Some(0.5 * (lo + hi))
        }
        None => None,
    };
    Ok(ThresholdScan { rows, crossing, lambda_star: star })
}

/// Least-squares fit of `E_0(eps w) - lambda F(0) = a eps^2 + b eps^4`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticFit {
    pub coefficient: f64,
    pub quartic: f64,
    /// `(lambda/4)((pi/lambda)^{2a} + F''(0))`.
    pub reference: f64,
    pub fit_residual: f64,
}

pub fn quadratic_expansion_check(
    grid: &StripGrid,
    potential: &DoubleWellPotential,
    eps_list: &[f64],
) -> Result<QuadraticFit> {
    if eps_list.len() < 2 {
        return invalid("need at least two amplitudes");
    }
    let w = StripField::first_mode(grid, 1.0)?;
    let base = grid.lambda * potential.f(0.0);
    let prob = StripProblem::new(grid, potential);
    let mut pts = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        let v: Vec<f64> = w.values.iter().map(|x| eps * x).collect();
        pts.push((eps * eps, prob.energy(&v) - base));
    }
    let (coefficient, quartic) = if pts.len() == 2 {
        let ((x1, y1), (x2, y2)) = (pts[0], pts[1]);
        let det = x1 * x2 * x2 - x2 * x1 * x1;
        ((y1 * x2 * x2 - y2 * x1 * x1) / det, (x1 * y2 - x2 * y1) / det)
    } else {
        // normal equations for the basis (x, x^2)
        let (mut s11, mut s12, mut s22, mut t1, mut t2) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for &(x, y) in &pts {
            s11 += x * x;
            s12 += x * x * x;
            s22 += x * x * x * x;
            t1 += x * y;
            t2 += x * x * y;
        }
        let det = s11 * s22 - s12 * s12;
        ((t1 * s22 - t2 * s12) / det, (s11 * t2 - s12 * t1) / det)
    };
    let fit_residual = pts
        .iter()
        .map(|&(x, y)| (coefficient * x + quartic * x * x - y).abs())
        .fold(0.0, f64::max);
    if !(coefficient.is_finite() && quartic.is_finite()) {
        return Err(Error::Numerical("degenerate amplitude list".into()));
    }
    let reference = grid.lambda / 4.0 * ((PI / grid.lambda).powf(2.0 * grid.alpha) + potential.ddf(0.0));
    Ok(QuadraticFit { coefficient, quartic, reference, fit_residual })
}

/// The tested identity `int w(s,0) (F'(V) + Lambda V) ds` on the trace.
#[derive(Debug, Clone, PartialEq)]
pub struct NonexistenceIdentity {
    /// With the discrete eigenvalue and the trace `sin(pi s/lambda)`.
    pub value: f64,
    /// Same integral with `(pi/lambda)^{2a}` in place of the discrete eigenvalue.
    pub continuum_value: f64,
    pub discrete_eigenvalue: f64,
    /// `int |w| d(measure)`: the identity is bounded by this times the residual.
    pub test_mass: f64,
}

pub fn nonexistence_identity(
    grid: &StripGrid,
    field: &StripField,
    potential: &DoubleWellPotential,
) -> Result<NonexistenceIdentity> {
    field.check(grid)?;
    let (lam_h, psi) = grid.discrete_first_mode();
    let lam = (PI / grid.lambda).powf(2.0 * grid.alpha);
    let h = grid.h();
    let mut a = Vec::with_capacity(grid.ns);
    let mut b = Vec::with_capacity(grid.ns);
    let mut mass = Vec::new();
    for i in 1..grid.ns {
        let w = (PI * grid.s(i) / grid.lambda).sin();
        let v = field.get(i, 0);
        let fp = potential.df(v);
        a.push(h * w * (fp + lam_h * v));
        b.push(h * w * (fp + lam * v));
        for j in 0..grid.ny {
            let m = h * (grid.mass[j] + if j == 0 { 1.0 } else { 0.0 });
            mass.push(m * (w * psi[j]).abs());
        }
    }
    Ok(NonexistenceIdentity {
        value: compensated_sum(a),
        continuum_value: compensated_sum(b),
        discrete_eigenvalue: lam_h,
        test_mass: compensated_sum(mass),
    })
}
