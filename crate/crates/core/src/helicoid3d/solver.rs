use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;

use super::{CylGrid, ReducedField};
use crate::error::{invalid, Error, Result};
use crate::numerics::{compensated_sum, solve_tridiagonal, Dst1};
use crate::optimize::{self, Bounds, LbfgsOptions, Objective};
use crate::potential::DoubleWellPotential;

/// Discrete cylinder energy: weighted Dirichlet energy over `2 c_a` plus
/// `int F(V(r, s, 0)) r dr ds`.
pub fn energy_cyl(grid: &CylGrid, field: &ReducedField, potential: &DoubleWellPotential) -> Result<f64> {
    field.check(grid)?;
    for i in 0..=grid.nr {
        for k in 0..=grid.ns {
            for j in 0..=grid.ny {
                if grid.is_dirichlet(i, k, j) && field.get(i, k, j) != 0.0 {
                    return invalid("field violates the Dirichlet conditions");
                }
            }
        }
    }
    Ok(CylProblem::new(grid, potential).energy(&field.values))
}

/// Energy, gradient and preconditioner on a [`CylGrid`].
pub struct CylProblem<'a> {
    grid: &'a CylGrid,
    potential: &'a DoubleWellPotential,
    dst: Dst1,
    /// Row-major `ny x ny` matrix `Y` with `Y^T K_y Y = diag(theta)`, `Y^T M Y = I`.
    ymodes: Vec<f64>,
    theta: Vec<f64>,
    mu: Vec<f64>,
}

impl<'a> CylProblem<'a> {
    pub fn new(grid: &'a CylGrid, potential: &'a DoubleWellPotential) -> Self {
        let ny = grid.ny;
        let inv_sqrt: Vec<f64> = grid.ymass.iter().map(|m| 1.0 / m.sqrt()).collect();
        let mut a = DMatrix::<f64>::zeros(ny, ny);
        for j in 0..ny {
            let below = if j > 0 { grid.ycond[j - 1] } else { 0.0 };
            a[(j, j)] = (grid.ycond[j] + below) * inv_sqrt[j] * inv_sqrt[j];
            if j + 1 < ny {
                let off = -grid.ycond[j] * inv_sqrt[j] * inv_sqrt[j + 1];
                a[(j, j + 1)] = off;
                a[(j + 1, j)] = off;
            }
        }
        let eig = SymmetricEigen::new(a);
        let mut ymodes = vec![0.0; ny * ny];
        for j in 0..ny {
            for m in 0..ny {
                ymodes[j * ny + m] = inv_sqrt[j] * eig.eigenvectors[(j, m)];
            }
        }
        let hs = grid.hs();
        let mu = (1..grid.ns)
            .map(|k| (2.0 - 2.0 * (PI * k as f64 / grid.ns as f64).cos()) / (hs * hs))
            .collect();
        Self {
            grid,
            potential,
            dst: Dst1::new(grid.ns),
            ymodes,
            theta: eig.eigenvalues.iter().copied().collect(),
            mu,
        }
    }

    pub fn energy(&self, v: &[f64]) -> f64 {
        let mut g = vec![0.0; v.len()];
        self.energy_grad(v, &mut g)
    }
}

impl Objective for CylProblem<'_> {
    fn dim(&self) -> usize {
        self.grid.len()
    }

    fn energy_grad(&self, v: &[f64], grad: &mut [f64]) -> f64 {
        let g = self.grid;
        let (nr, ns, ny) = (g.nr, g.ns, g.ny);
        let hs = g.hs();
        let inv_c = 1.0 / g.c_alpha;
        let sy = ny + 1;
        let slab = (ns + 1) * sy;
        let at = |i: usize, k: usize, j: usize| v[i * slab + k * sy + j];
        let slabs: Vec<f64> = grad
            .par_chunks_mut(slab)
            .enumerate()
            .map(|(i, gs)| {
                gs.fill(0.0);
                let mut e = Vec::with_capacity(4 * ns * ny + ns + 1);
                if i < nr {
                    let w = 0.5 * inv_c * hs * g.rcond[i];
                    for k in 1..ns {
                        for j in 0..ny {
                            let d = at(i + 1, k, j) - at(i, k, j);
                            e.push(w * g.ymass[j] * d * d);
                        }
                    }
                }
                let dm = g.rmass[i];
                for k in 0..=ns {
                    let wk = if k == 0 || k == ns { 0.5 * hs } else { hs };
                    e.push(wk * dm * self.potential.f(at(i, k, 0)));
                }
                if i == 0 || i == nr {
                    return compensated_sum(e);
                }
                let ws = 0.5 * inv_c * g.ang[i] / hs;
                let wy = 0.5 * inv_c * dm * hs;
                for k in 0..ns {
                    for j in 0..ny {
                        let d = at(i, k + 1, j) - at(i, k, j);
                        e.push(ws * g.ymass[j] * d * d);
                    }
                }
                for k in 1..ns {
                    for j in 0..ny {
                        let d = at(i, k, j + 1) - at(i, k, j);
                        e.push(wy * g.ycond[j] * d * d);
                    }
                }
                let (ra, rb) = (g.rcond[i - 1], g.rcond[i]);
                for k in 1..ns {
                    for j in 0..ny {
                        let c = at(i, k, j);
                        let lap_r = ra * (c - at(i - 1, k, j)) + rb * (c - at(i + 1, k, j));
                        let lap_s = 2.0 * c - at(i, k - 1, j) - at(i, k + 1, j);
                        let mut lap_y = g.ycond[j] * (c - at(i, k, j + 1));
                        if j > 0 {
                            lap_y += g.ycond[j - 1] * (c - at(i, k, j - 1));
                        }
                        gs[k * sy + j] = inv_c
                            * (hs * g.ymass[j] * lap_r + g.ang[i] * g.ymass[j] * lap_s / hs + dm * hs * lap_y);
                    }
                    gs[k * sy] += dm * hs * self.potential.df(at(i, k, 0));
                }
                compensated_sum(e)
            })
            .collect();
        compensated_sum(slabs)
    }

    fn precondition(&self, r: &[f64], out: &mut [f64]) {
        let g = self.grid;
        let (nr, ns, ny) = (g.nr, g.ns, g.ny);
        let (ni, nk) = (nr - 1, ns - 1);
        let sy = ny + 1;
        let slab = (ns + 1) * sy;
        let y = &self.ymodes;
        // t[(i-1), (k-1), m]
        let mut t = vec![0.0; ni * nk * ny];
        t.par_chunks_mut(nk * ny).enumerate().for_each(|(ii, ts)| {
            let i = ii + 1;
            for k in 1..ns {
                let src = &r[i * slab + k * sy..i * slab + k * sy + ny];
                let dst = &mut ts[(k - 1) * ny..k * ny];
                for (m, d) in dst.iter_mut().enumerate() {
                    *d = (0..ny).map(|j| y[j * ny + m] * src[j]).sum();
                }
            }
            self.dst_columns(ts, ny);
        });
        let hs = g.hs();
        let scale = hs / g.c_alpha;
        // tridiagonal in i for every (k, m)
        let solved: Vec<Vec<f64>> = (0..nk)
            .into_par_iter()
            .map(|kk| {
                let mut out = vec![0.0; ni * ny];
                let mut lower = vec![0.0; ni];
                let mut diag = vec![0.0; ni];
                let mut upper = vec![0.0; ni];
                let mut rhs = vec![0.0; ni];
                let mut work = vec![0.0; ni];
                for m in 0..ny {
                    for ii in 0..ni {
                        let i = ii + 1;
                        diag[ii] = scale
                            * (g.rcond[i - 1] + g.rcond[i] + self.mu[kk] * g.ang[i] + self.theta[m] * g.rmass[i]);
                        lower[ii] = if ii > 0 { -scale * g.rcond[i - 1] } else { 0.0 };
                        upper[ii] = -scale * g.rcond[i];
                        rhs[ii] = t[(ii * nk + kk) * ny + m];
                    }
                    solve_tridiagonal(&lower, &diag, &upper, &mut rhs, &mut work);
                    for ii in 0..ni {
                        out[ii * ny + m] = rhs[ii];
                    }
                }
                out
            })
            .collect();
        for (kk, col) in solved.iter().enumerate() {
            for ii in 0..ni {
                t[(ii * nk + kk) * ny..(ii * nk + kk + 1) * ny].copy_from_slice(&col[ii * ny..(ii + 1) * ny]);
            }
        }
        let back = 2.0 / ns as f64;
        out.fill(0.0);
        out.par_chunks_mut(slab).enumerate().for_each(|(i, os)| {
            if i == 0 || i == nr {
                return;
            }
            let ts = &mut t[(i - 1) * nk * ny..i * nk * ny].to_vec();
            self.dst_columns(ts, ny);
            for k in 1..ns {
                let z = &ts[(k - 1) * ny..k * ny];
                for j in 0..ny {
                    let row = &y[j * ny..(j + 1) * ny];
                    os[k * sy + j] = back * row.iter().zip(z).map(|(a, b)| a * b).sum::<f64>();
                }
            }
        });
    }

    fn residual(&self, pg: &[f64]) -> f64 {
        let g = self.grid;
        let hs = g.hs();
        let mut worst = 0.0f64;
        for i in 1..g.nr {
            for k in 1..g.ns {
                for j in 0..g.ny {
                    let measure = g.rmass[i] * hs * (g.ymass[j] + if j == 0 { 1.0 } else { 0.0 });
                    worst = worst.max(pg[g.idx(i, k, j)].abs() / measure);
                }
            }
        }
        worst
    }
}

impl CylProblem<'_> {
    /// In-place DST along `k` of a `(ns-1) x ny` block stored as `[k][m]`.
    fn dst_columns(&self, block: &mut [f64], ny: usize) {
        let nk = self.grid.ns - 1;
        let mut line = vec![0.0; nk];
        let mut buf = self.dst.make_buffer();
        for m in 0..ny {
            for k in 0..nk {
                line[k] = block[k * ny + m];
            }
            self.dst.apply_with(&mut line, &mut buf);
            for k in 0..nk {
                block[k * ny + m] = line[k];
            }
        }
    }
}

/// Solver outcome on the cylinder.
#[derive(Debug, Clone)]
pub struct CylSolution {
    pub field: ReducedField,
    pub energy: f64,
    pub residual: f64,
    pub iterations: usize,
    pub energy_history: Vec<f64>,
}

/// Minimizes the cylinder energy from `init`; iterates stay in `[0, 1]` for
/// nonnegative data, `[-1, 1]` otherwise.
pub fn minimize_cyl(
    grid: &CylGrid,
    potential: &DoubleWellPotential,
    init: &ReducedField,
    opts: &LbfgsOptions,
) -> Result<CylSolution> {
    energy_cyl(grid, init, potential)?;
    let bounds = if init.values.iter().all(|&v| v >= 0.0) { Bounds::UNIT } else { Bounds::SYMMETRIC };
    let prob = CylProblem::new(grid, potential);
    let out = optimize::minimize(&prob, &init.values, bounds, opts)?;
    Ok(CylSolution {
        field: ReducedField { nr: grid.nr, ns: grid.ns, ny: grid.ny, values: out.x },
        energy: out.energy,
        residual: out.residual,
        iterations: out.iterations,
        energy_history: out.energy_history,
    })
}

/// Three-point second derivative and first derivative on a nonuniform stencil.
#[inline]
fn nonuniform(hm: f64, hp: f64, fm: f64, f0: f64, fp: f64) -> (f64, f64) {
    let d1 = (hm * hm * fp - hp * hp * fm + (hp * hp - hm * hm) * f0) / (hm * hp * (hm + hp));
    let d2 = 2.0 * (hm * fp - (hm + hp) * f0 + hp * fm) / (hm * hp * (hm + hp));
    (d1, d2)
}

/// Finite-difference value of
/// `V_rr + V_r/r + (1 + lambda^2/(pi^2 r^2)) V_ss + V_yy + (1-2a)/y V_y`
/// at interior nodes (`0 < r < R`, `0 < s < lambda`, `0 < y < L`); zero elsewhere.
pub fn pde_residual(grid: &CylGrid, field: &ReducedField) -> Result<ReducedField> {
    field.check(grid)?;
    let (nr, ns, ny) = (grid.nr, grid.ns, grid.ny);
    let hr = grid.hr();
    let hs = grid.hs();
    let k2 = (grid.lambda / PI).powi(2);
    let q = 1.0 - 2.0 * grid.alpha;
    let mut out = ReducedField::zeros(grid);
    let sy = ny + 1;
    let slab = (ns + 1) * sy;
    out.values.par_chunks_mut(slab).enumerate().for_each(|(i, os)| {
        if i == 0 || i == nr {
            return;
        }
        let r = grid.r[i];
        for k in 1..ns {
            for j in 1..ny {
                let v = |a: usize, b: usize, c: usize| field.get(a, b, c);
                let c0 = v(i, k, j);
                let (vr, vrr) = nonuniform(hr, hr, v(i - 1, k, j), c0, v(i + 1, k, j));
                let vss = (v(i, k - 1, j) - 2.0 * c0 + v(i, k + 1, j)) / (hs * hs);
                let (hm, hp) = (grid.y[j] - grid.y[j - 1], grid.y[j + 1] - grid.y[j]);
                let (vy, vyy) = nonuniform(hm, hp, v(i, k, j - 1), c0, v(i, k, j + 1));
                os[k * sy + j] = vrr + vr / r + (1.0 + k2 / (r * r)) * vss + vyy + q / grid.y[j] * vy;
            }
        }
    });
    if out.values.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numerical("non-finite PDE residual".into()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::gauss_legendre_on;
    use crate::specfun::ExtensionProfile;
    use crate::strip1d::{energy_e0, StripField};

    fn quartic() -> DoubleWellPotential {
        DoubleWellPotential::standard()
    }

    #[test]
    fn zero_field_energy_is_area_times_potential() {
        let g = CylGrid::new(4.0, 0.5, 6.0, 10.0, 12, 8, 10).unwrap();
        let e = energy_cyl(&g, &ReducedField::zeros(&g), &quartic()).unwrap();
        let exact = 0.5 * 4.0 * 0.25 * 36.0;
        assert!((e - exact).abs() < 1e-13 * exact, "{e} vs {exact}");
    }

    #[test]
    fn radial_masses_tile_the_disk() {
        let g = CylGrid::new(3.0, 0.3, 5.0, 8.0, 17, 6, 6).unwrap();
        let total: f64 = g.rmass.iter().sum();
        assert!((total - 12.5).abs() < 1e-13);
        assert!(g.rmass[0] > 0.0 && g.rmass[0] < g.rmass[1]);
        assert!(g.ang[1..g.nr].iter().all(|a| a.is_finite() && *a > 0.0));
    }

    /// Oracle: for an `r`-independent profile times a radial factor, the
    /// discrete energy splits into radial sums times strip sums.
    #[test]
    fn separable_field_matches_radial_times_strip_sums() {
        let (lambda, alpha) = (3.5, 0.4);
        let g = CylGrid::new(lambda, alpha, 4.0, 9.0, 16, 12, 14).unwrap();
        let sg = g.strip().unwrap();
        let zero = DoubleWellPotential::from_fns("zero", |_| 0.0, |_| 0.0, |_| 0.0);
        let v0 = StripField::from_fn(&sg, |s, y| (PI * s / lambda).sin() * (1.0 - y / 9.0).powi(2));
        let eta: Vec<f64> = g.r.iter().map(|&r| (r * (4.0 - r)).max(0.0) / 4.0).collect();
        let w = ReducedField::from_product(&g, &eta, &v0).unwrap();
        let got = energy_cyl(&g, &w, &zero).unwrap();
        // strip pieces
        let c = g.c_alpha;
        let hs = g.hs();
        let (mut s_mass, mut s_ds, mut s_dy) = (0.0, 0.0, 0.0);
        for k in 0..=g.ns {
            for j in 0..g.ny {
                if k < g.ns {
                    let d = v0.get(k + 1, j) - v0.get(k, j);
                    s_ds += g.ymass[j] * d * d / hs;
                }
                if k > 0 && k < g.ns {
                    s_mass += hs * g.ymass[j] * v0.get(k, j).powi(2);
                    let d = v0.get(k, j + 1) - v0.get(k, j);
                    s_dy += hs * g.ycond[j] * d * d;
                }
            }
        }
        let mut exact = 0.0;
        for i in 0..g.nr {
            let d = eta[i + 1] - eta[i];
            exact += g.rcond[i] * d * d * s_mass;
        }
        for i in 1..g.nr {
            exact += eta[i] * eta[i] * (g.ang[i] * s_ds + g.rmass[i] * s_dy);
        }
        exact *= 0.5 / c;
        assert!((got - exact).abs() < 1e-12 * exact, "{got} vs {exact}");
        // the radially constant limit reproduces (R^2/2) E_0 up to the angular term
        let ones = vec![1.0; g.nr + 1];
        let ang: f64 = g.ang[1..g.nr].iter().sum::<f64>() - g.rmass[1..g.nr].iter().sum::<f64>();
        let flat = ReducedField::from_product(&g, &ones, &v0).unwrap();
        let e_flat = CylProblem::new(&g, &zero).energy(&flat.values);
        let inner: f64 = g.rmass[1..g.nr].iter().sum();
        let e0 = energy_e0(&sg, &v0, &zero).unwrap();
        let e0_ds = 0.5 / c * s_ds;
        let edges = 0.5 / c * (g.rcond[0] + g.rcond[g.nr - 1]) * s_mass;
        let expect = inner * e0 + ang * e0_ds + edges;
        assert!((e_flat - expect).abs() < 1e-12 * expect, "{e_flat} vs {expect}");
    }

    /// Oracle: angular stiffness equals `int (r + k^2/r) dr` by Gauss-Legendre.
    #[test]
    fn angular_weights_match_quadrature() {
        let g = CylGrid::new(2.0, 0.5, 3.0, 5.0, 9, 4, 4).unwrap();
        let k2 = (2.0 / PI).powi(2);
        let h = g.hr();
        for i in 1..g.nr {
            let q: f64 = gauss_legendre_on(20, g.r[i] - 0.5 * h, g.r[i] + 0.5 * h)
                .iter()
                .map(|&(x, w)| w * (x + k2 / x))
                .sum();
            assert!((q - g.ang[i]).abs() < 1e-12 * q);
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let g = CylGrid::new(3.0, 0.35, 4.0, 7.0, 8, 7, 9).unwrap();
        let f = ReducedField::from_fn(&g, |r, s, y| {
            0.4 * (PI * s / 3.0).sin() * (r * (4.0 - r) / 4.0) * (-0.3 * y).exp() + 0.02 * s * r
        });
        let pot = quartic();
        let prob = CylProblem::new(&g, &pot);
        let mut grad = vec![0.0; g.len()];
        prob.energy_grad(&f.values, &mut grad);
        for &(i, k, j) in &[(1, 1, 0), (3, 4, 0), (5, 2, 3), (7, 6, 8), (2, 3, 5)] {
            let n = g.idx(i, k, j);
            let step = 1e-6;
            let mut p = f.values.clone();
            p[n] += step;
            let mut m = f.values.clone();
            m[n] -= step;
            let fd = (prob.energy(&p) - prob.energy(&m)) / (2.0 * step);
            assert!((fd - grad[n]).abs() < 1e-7 * (1.0 + grad[n].abs()), "({i},{k},{j}) {fd} vs {}", grad[n]);
        }
    }

    #[test]
    fn preconditioner_inverts_quadratic_part() {
        let zero = DoubleWellPotential::from_fns("zero", |_| 0.0, |_| 0.0, |_| 0.0);
        let g = CylGrid::new(2.5, 0.3, 3.0, 6.0, 10, 8, 11).unwrap();
        let f = ReducedField::from_fn(&g, |r, s, y| (1.7 * s).sin() * r.cos() * (6.0 - y) * (1.0 + y).ln());
        let prob = CylProblem::new(&g, &zero);
        let mut grad = vec![0.0; g.len()];
        prob.energy_grad(&f.values, &mut grad);
        let mut back = vec![0.0; g.len()];
        prob.precondition(&grad, &mut back);
        let scale = f.sup_norm();
        for (a, b) in back.iter().zip(&f.values) {
            assert!((a - b).abs() < 1e-9 * scale, "{a} vs {b}");
        }
    }

    #[test]
    fn pde_residual_of_separated_fields() {
        let (lambda, alpha) = (4.0, 0.5);
        let g = CylGrid::new(lambda, alpha, 6.0, 10.0, 120, 120, 240).unwrap();
        let k = PI / lambda;
        let p = ExtensionProfile::decaying(alpha).unwrap();
        let mode = ReducedField::from_fn_all(&g, |_, s, y| (k * s).sin() * p.value(k * y).unwrap());
        let res = pde_residual(&g, &mode).unwrap();
        let flat = ReducedField::from_fn_all(&g, |_, _, y| p.value(y).unwrap());
        let res_flat = pde_residual(&g, &flat).unwrap();
        let mut worst: f64 = 0.0;
        let mut worst_flat: f64 = 0.0;
        for i in (10..g.nr).step_by(7) {
            for kk in (1..g.ns).step_by(5) {
                for j in (10..g.ny).step_by(9) {
                    let r = g.r[i];
                    let n = g.idx(i, kk, j);
                    worst = worst.max((res.values[n] + mode.values[n] / (r * r)).abs());
                    worst_flat = worst_flat.max((res_flat.values[n] - flat.values[n]).abs());
                }
            }
        }
        assert!(worst < 2e-3, "{worst}");
        assert!(worst_flat < 2e-3, "{worst_flat}");
        let zero = pde_residual(&g, &ReducedField::zeros(&g)).unwrap();
        assert_eq!(zero.sup_norm(), 0.0);
    }

    #[test]
    fn minimizer_below_threshold_is_trivial_and_descends() {
        let g = CylGrid::with_defaults(2.5, 0.5, 16, 12, 16).unwrap();
        let init = ReducedField::initial_guess(&g, 0.1).unwrap();
        let sol = minimize_cyl(&g, &quartic(), &init, &LbfgsOptions::default()).unwrap();
        assert!(sol.field.sup_norm() < 1e-3, "{}", sol.field.sup_norm());
        assert!(sol.energy_history.windows(2).all(|w| w[1] <= w[0] + 1e-13 * w[0].abs()));
    }
}
