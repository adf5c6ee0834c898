//! Box-constrained, preconditioned limited-memory BFGS.
//!
//! The initial inverse Hessian is the objective's preconditioner. Steps are
//! projected onto the box and accepted by an Armijo test. Once energy
//! differences fall to the rounding level of the energy itself, the Armijo
//! test uses the trapezoidal rule on the gradient along the step instead.

use std::collections::VecDeque;

use crate::error::{Error, NotConverged, Result};

/// A smooth objective on `R^n` with a symmetric positive preconditioner.
pub trait Objective: Sync {
    fn dim(&self) -> usize;

    /// Energy at `x`; writes the gradient into `grad`.
    fn energy_grad(&self, x: &[f64], grad: &mut [f64]) -> f64;

    /// Applies an approximation of the inverse Hessian.
    fn precondition(&self, r: &[f64], out: &mut [f64]);

    /// Scale-aware stationarity measure of a projected gradient.
    fn residual(&self, pg: &[f64]) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub lo: f64,
    pub hi: f64,
}

impl Bounds {
    pub const UNIT: Bounds = Bounds { lo: 0.0, hi: 1.0 };
    pub const SYMMETRIC: Bounds = Bounds { lo: -1.0, hi: 1.0 };

    #[inline]
    pub fn clamp(&self, v: f64) -> f64 {
        v.clamp(self.lo, self.hi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LbfgsOptions {
    pub memory: usize,
    pub max_iter: usize,
    /// Stop once the residual is below this...
    pub residual_tol: f64,
    /// ...and the last relative energy decrease is below this.
    pub rel_energy_tol: f64,
    pub armijo: f64,
}

impl Default for LbfgsOptions {
    fn default() -> Self {
        Self { memory: 12, max_iter: 4000, residual_tol: 1e-8, rel_energy_tol: 1e-12, armijo: 1e-4 }
    }
}

#[derive(Debug, Clone)]
pub struct Minimized {
    pub x: Vec<f64>,
    pub energy: f64,
    pub residual: f64,
    pub iterations: usize,
    /// Energy after each accepted step, starting with the initial energy.
    pub energy_history: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn projected_gradient(x: &[f64], g: &[f64], bounds: Bounds, out: &mut [f64]) {
    for ((o, &xi), &gi) in out.iter_mut().zip(x).zip(g) {
        let active = (xi <= bounds.lo && gi > 0.0) || (xi >= bounds.hi && gi < 0.0);
        *o = if active { 0.0 } else { gi };
    }
}

struct Memory {
    pairs: VecDeque<(Vec<f64>, Vec<f64>, f64)>,
    cap: usize,
}

impl Memory {
    fn push(&mut self, s: Vec<f64>, y: Vec<f64>) {
        let sy = dot(&s, &y);
        if sy <= 1e-14 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() || !sy.is_finite() {
            return;
        }
        if self.pairs.len() == self.cap {
            self.pairs.pop_front();
        }
        self.pairs.push_back((s, y, 1.0 / sy));
    }

    /// `out = H q` by the two-loop recursion with `H_0` the preconditioner.
    fn apply<O: Objective + ?Sized>(&self, obj: &O, q: &[f64], out: &mut [f64]) {
        let mut q = q.to_vec();
        let mut alphas = Vec::with_capacity(self.pairs.len());
        for (s, y, rho) in self.pairs.iter().rev() {
            let a = rho * dot(s, &q);
            for (qi, yi) in q.iter_mut().zip(y) {
                *qi -= a * yi;
            }
            alphas.push(a);
        }
        obj.precondition(&q, out);
        for ((s, y, rho), a) in self.pairs.iter().zip(alphas.iter().rev()) {
            let b = rho * dot(y, out);
            for (oi, si) in out.iter_mut().zip(s) {
                *oi += (a - b) * si;
            }
        }
    }
}

/// Minimizes `obj` over the box starting from `x0` (projected first).
pub fn minimize<O: Objective + ?Sized>(
    obj: &O,
    x0: &[f64],
    bounds: Bounds,
    opts: &LbfgsOptions,
) -> Result<Minimized> {
    let n = obj.dim();
    assert_eq!(x0.len(), n);
    let mut x: Vec<f64> = x0.iter().map(|&v| bounds.clamp(v)).collect();
    let mut g = vec![0.0; n];
    let mut energy = obj.energy_grad(&x, &mut g);
    if !energy.is_finite() {
        return Err(Error::Numerical("initial energy is not finite".into()));
    }
    let mut history = vec![energy];
    let mut mem = Memory { pairs: VecDeque::new(), cap: opts.memory };
    let mut pg = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut xn = vec![0.0; n];
    let mut gn = vec![0.0; n];
    let mut rel_decrease = f64::INFINITY;
    let mut residual = f64::INFINITY;

    for it in 0..opts.max_iter {
        projected_gradient(&x, &g, bounds, &mut pg);
        residual = obj.residual(&pg);
        if residual < opts.residual_tol && rel_decrease < opts.rel_energy_tol {
            return Ok(Minimized { x, energy, residual, iterations: it, energy_history: history });
        }

        let mut accepted = false;
        for attempt in 0..2 {
            let quasi_newton = attempt == 0 && !mem.pairs.is_empty();
            if attempt == 1 {
                mem.pairs.clear();
            }
            if quasi_newton {
                mem.apply(obj, &pg, &mut d);
            } else {
                obj.precondition(&pg, &mut d);
            }
            for (di, ((&xi, &gi), &pgi)) in d.iter_mut().zip(x.iter().zip(&g).zip(&pg)) {
                *di = -*di;
                let blocked = (xi <= bounds.lo && *di < 0.0) || (xi >= bounds.hi && *di > 0.0);
                if blocked || (pgi == 0.0 && gi != 0.0) {
                    *di = 0.0;
                }
            }
            if dot(&d, &pg) >= 0.0 {
                if quasi_newton {
                    continue;
                }
                break;
            }
            let mut t = 1.0;
            for _ in 0..40 {
                for ((xni, &xi), &di) in xn.iter_mut().zip(&x).zip(&d) {
                    *xni = bounds.clamp(xi + t * di);
                }
                let en = obj.energy_grad(&xn, &mut gn);
                if en.is_finite() {
                    let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
                    let gs = dot(&g, &s);
                    let mut diff = en - energy;
                    if diff.abs() <= 1e-10 * (energy.abs() + 1.0) {
                        diff = 0.5 * (gs + dot(&gn, &s));
                    }
                    if gs < 0.0 && diff <= opts.armijo * gs {
                        let yv: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
                        mem.push(s, yv);
                        rel_decrease = -diff / energy.abs().max(1e-300);
                        std::mem::swap(&mut x, &mut xn);
                        std::mem::swap(&mut g, &mut gn);
                        energy = en;
                        history.push(energy);
                        accepted = true;
                        break;
                    }
                }
                t *= 0.5;
            }
            if accepted {
                break;
            }
        }
        if !accepted {
            // No descent is measurable any more: accept stationarity if reached.
            if residual < opts.residual_tol {
                return Ok(Minimized { x, energy, residual, iterations: it, energy_history: history });
            }
            return Err(Error::NotConverged(Box::new(NotConverged {
                iterations: it,
                residual,
                energy,
                last_iterate: x,
            })));
        }
    }
    projected_gradient(&x, &g, bounds, &mut pg);
    residual = residual.min(obj.residual(&pg));
    Err(Error::NotConverged(Box::new(NotConverged {
        iterations: opts.max_iter,
        residual,
        energy,
        last_iterate: x,
    })))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Ill-conditioned quadratic plus a quartic, diagonal preconditioner.
    struct Toy {
        diag: Vec<f64>,
        target: Vec<f64>,
    }

    impl Objective for Toy {
        fn dim(&self) -> usize {
            self.diag.len()
        }
        fn energy_grad(&self, x: &[f64], g: &mut [f64]) -> f64 {
            let mut e = 0.0;
            for i in 0..x.len() {
                let r = x[i] - self.target[i];
                e += 0.5 * self.diag[i] * r * r + 0.25 * r.powi(4);
                g[i] = self.diag[i] * r + r.powi(3);
            }
            e
        }
        fn precondition(&self, r: &[f64], out: &mut [f64]) {
            for i in 0..r.len() {
                out[i] = r[i] / self.diag[i];
            }
        }
        fn residual(&self, pg: &[f64]) -> f64 {
            pg.iter().fold(0.0, |m, v| m.max(v.abs()))
        }
    }

    #[test]
    fn reaches_interior_and_bound_solutions() {
        let n = 50;
        let toy = Toy {
            diag: (0..n).map(|i| 10f64.powf(i as f64 / 10.0)).collect(),
            target: (0..n).map(|i| if i % 3 == 0 { 1.5 } else { 0.3 }).collect(),
        };
        let out = minimize(&toy, &vec![0.0; n], Bounds::UNIT, &LbfgsOptions::default()).unwrap();
        for i in 0..n {
            let expect = if i % 3 == 0 { 1.0 } else { 0.3 };
            assert!((out.x[i] - expect).abs() < 1e-8, "{i}: {}", out.x[i]);
        }
        assert!(out.energy_history.windows(2).all(|w| w[1] <= w[0] + 1e-15));
    }
}
