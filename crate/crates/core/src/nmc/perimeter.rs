//! Interaction functional `L(A, B) = int_A int_B |x - y|^{-n - 2 alpha}` and
//! fractional perimeter
//! `Per(E, Omega) = L(E cap Omega, E^c) + L(E \ Omega, Omega \ E)` in `R^3`.
//!
//! For a fixed outer point `x`, the inner integral is written in polar
//! coordinates around `x`: along each direction the set is a union of
//! parameter intervals and `int_a^b t^{-1 - 2 alpha} dt` is taken in closed
//! form, so unbounded sets need no truncation. Directions and outer points
//! use tanh-sinh rules, which absorb the algebraic singularities at faces.

use std::f64::consts::PI;

use rayon::prelude::*;

use super::{check_alpha, Region, RegionLabel};
use crate::error::{domain, invalid, Result};
use crate::numerics::{compensated_sum, tanh_sinh_unit};

/// Parameter intervals `[t0, t1]`, `t >= 0`, along a ray; `t1` may be infinite.
pub type Intervals = Vec<(f64, f64)>;

/// A set that can be intersected with rays.
pub trait RaySet: Sync {
    fn contains(&self, x: [f64; 3]) -> bool;
    /// Sorted disjoint intervals of `t >= 0` with `x + t d` in the set.
    fn ray(&self, x: [f64; 3], d: [f64; 3]) -> Intervals;
    /// Planes `x_axis = c` across which the set has a face; outer rules split there.
    fn planes(&self, _axis: usize) -> Vec<f64> {
        Vec::new()
    }
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// `{x : x . n < c}` with unit normal `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfSpace {
    normal: [f64; 3],
    offset: f64,
}

impl HalfSpace {
    pub fn new(normal: [f64; 3], offset: f64) -> Result<Self> {
        let len = dot(normal, normal).sqrt();
        if !(len > 0.0 && len.is_finite() && offset.is_finite()) {
            return domain("half-space needs a nonzero finite normal");
        }
        Ok(Self { normal: normal.map(|v| v / len), offset: offset / len })
    }

    fn side(&self, x: [f64; 3]) -> f64 {
        dot(x, self.normal) - self.offset
    }
}

impl RaySet for HalfSpace {
    fn contains(&self, x: [f64; 3]) -> bool {
        self.side(x) < 0.0
    }

    fn ray(&self, x: [f64; 3], d: [f64; 3]) -> Intervals {
        let (s, dn) = (self.side(x), dot(d, self.normal));
        let hit = -s / dn;
        match (s < 0.0, dn > 0.0, dn < 0.0) {
            (true, true, _) => vec![(0.0, hit)],
            (true, false, _) => vec![(0.0, f64::INFINITY)],
            (false, _, true) => vec![(hit.max(0.0), f64::INFINITY)],
            _ => Vec::new(),
        }
    }

    fn planes(&self, axis: usize) -> Vec<f64> {
        let n = self.normal;
        if n[axis].abs() == 1.0 && n[(axis + 1) % 3] == 0.0 && n[(axis + 2) % 3] == 0.0 {
            vec![self.offset * n[axis]]
        } else {
            Vec::new()
        }
    }
}

impl Region for HalfSpace {
    fn label(&self, x: [f64; 3]) -> RegionLabel {
        surface_label(self.side(x), dot(x, x).sqrt())
    }
}

fn surface_label(s: f64, scale: f64) -> RegionLabel {
    let band = 1e-14 * scale.max(1.0);
    if s < -band {
        RegionLabel::Plus
    } else if s > band {
        RegionLabel::Minus
    } else {
        RegionLabel::Boundary
    }
}

/// Open ball.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ball {
    center: [f64; 3],
    radius: f64,
}

impl Ball {
    pub fn new(center: [f64; 3], radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) || !center.iter().all(|c| c.is_finite()) {
            return domain("ball needs a finite center and positive radius");
        }
        Ok(Self { center, radius })
    }

    fn offset(&self, x: [f64; 3]) -> [f64; 3] {
        [x[0] - self.center[0], x[1] - self.center[1], x[2] - self.center[2]]
    }
}

impl RaySet for Ball {
    fn contains(&self, x: [f64; 3]) -> bool {
        let p = self.offset(x);
        dot(p, p) < self.radius * self.radius
    }

    fn ray(&self, x: [f64; 3], d: [f64; 3]) -> Intervals {
        let p = self.offset(x);
        let b = dot(p, d);
        let c = dot(p, p) - self.radius * self.radius;
        let disc = b * b - c;
        if disc <= 0.0 {
            return Vec::new();
        }
        let root = disc.sqrt();
        // stable pair of roots
        let q = -b - b.signum() * root;
        let (t1, t2) = if q == 0.0 { (-root, root) } else { let (u, v) = (q, c / q); (u.min(v), u.max(v)) };
        if t2 <= 0.0 {
            Vec::new()
        } else {
            vec![(t1.max(0.0), t2)]
        }
    }
}

impl Region for Ball {
    fn label(&self, x: [f64; 3]) -> RegionLabel {
        let p = self.offset(x);
        surface_label(dot(p, p).sqrt() - self.radius, self.radius)
    }
}

/// Axis-aligned box `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub lo: [f64; 3],
    pub hi: [f64; 3],
}

impl Aabb {
    pub fn new(lo: [f64; 3], hi: [f64; 3]) -> Result<Self> {
        if !(0..3).all(|a| lo[a] < hi[a] && lo[a].is_finite() && hi[a].is_finite()) {
            return domain("box needs lo < hi in every coordinate");
        }
        Ok(Self { lo, hi })
    }

    /// `[-s/2, s/2]^3`.
    pub fn centered_cube(side: f64) -> Result<Self> {
        Self::new([-0.5 * side; 3], [0.5 * side; 3])
    }

    pub fn volume(&self) -> f64 {
        (0..3).map(|a| self.hi[a] - self.lo[a]).product()
    }
}

impl RaySet for Aabb {
    fn contains(&self, x: [f64; 3]) -> bool {
        (0..3).all(|a| self.lo[a] < x[a] && x[a] < self.hi[a])
    }

    fn ray(&self, x: [f64; 3], d: [f64; 3]) -> Intervals {
        let (mut t0, mut t1) = (0.0f64, f64::INFINITY);
        for a in 0..3 {
            if d[a] == 0.0 {
                if !(self.lo[a] < x[a] && x[a] < self.hi[a]) {
                    return Vec::new();
                }
            } else {
                let (u, v) = ((self.lo[a] - x[a]) / d[a], (self.hi[a] - x[a]) / d[a]);
                t0 = t0.max(u.min(v));
                t1 = t1.min(u.max(v));
            }
        }
        if t0 < t1 {
            vec![(t0, t1)]
        } else {
            Vec::new()
        }
    }

    fn planes(&self, axis: usize) -> Vec<f64> {
        vec![self.lo[axis], self.hi[axis]]
    }
}

/// Complement of a set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Complement<S>(pub S);

impl<S: RaySet> RaySet for Complement<S> {
    fn contains(&self, x: [f64; 3]) -> bool {
        !self.0.contains(x)
    }

    fn ray(&self, x: [f64; 3], d: [f64; 3]) -> Intervals {
        complement(&self.0.ray(x, d))
    }

    fn planes(&self, axis: usize) -> Vec<f64> {
        self.0.planes(axis)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EmptySet;

impl RaySet for EmptySet {
    fn contains(&self, _: [f64; 3]) -> bool {
        false
    }

    fn ray(&self, _: [f64; 3], _: [f64; 3]) -> Intervals {
        Vec::new()
    }
}

fn complement(iv: &[(f64, f64)]) -> Intervals {
    let mut out = Vec::with_capacity(iv.len() + 1);
    let mut t = 0.0;
    for &(a, b) in iv {
        if a > t {
            out.push((t, a));
        }
        t = b;
    }
    if t < f64::INFINITY {
        out.push((t, f64::INFINITY));
    }
    out
}

fn intersect(a: &[(f64, f64)], b: &[(f64, f64)]) -> Intervals {
    let mut out = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        let lo = a[i].0.max(b[j].0);
        let hi = a[i].1.min(b[j].1);
        if lo < hi {
            out.push((lo, hi));
        }
        if a[i].1 < b[j].1 {
            i += 1;
        } else {
            j += 1;
        }
    }
    out
}

/// `int over intervals of t^{-1 - 2 alpha} dt`.
fn radial_kernel(iv: &[(f64, f64)], alpha: f64) -> f64 {
    let p = 2.0 * alpha;
    iv.iter()
        .map(|&(a, b)| {
            let tail = if b.is_finite() { b.powf(-p) } else { 0.0 };
            (a.powf(-p) - tail) / p
        })
        .sum()
}

/// Tanh-sinh resolution of the outer (point) and inner (direction) rules.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerimeterQuadrature {
    /// Step and half-count of the tanh-sinh rule per outer segment.
    pub outer: (f64, usize),
    /// Step and half-count of the rule in `cos(theta)` on each hemisphere.
    pub axial: (f64, usize),
    pub azimuth: usize,
}

impl Default for PerimeterQuadrature {
    fn default() -> Self {
        Self { outer: (0.35, 9), axial: (0.35, 9), azimuth: 32 }
    }
}

impl PerimeterQuadrature {
    /// Rule with roughly half the nodes per direction, for error estimates.
    pub fn coarser(&self) -> Self {
        let half = |(h, m): (f64, usize)| (h * 1.5, (m * 2 / 3).max(2));
        Self { outer: half(self.outer), axial: half(self.axial), azimuth: (self.azimuth / 2).max(4) }
    }

    fn check(&self) -> Result<()> {
        let ok = |(h, m): (f64, usize)| h > 0.0 && h.is_finite() && m >= 1;
        if !(ok(self.outer) && ok(self.axial) && self.azimuth >= 4) {
            return domain("invalid perimeter quadrature");
        }
        Ok(())
    }

    fn directions(&self) -> Vec<([f64; 3], f64)> {
        let axial = tanh_sinh_unit(self.axial.0, self.axial.1);
        let dphi = 2.0 * PI / self.azimuth as f64;
        let mut out = Vec::with_capacity(2 * axial.len() * self.azimuth);
        for node in &axial {
            for z in [node.lo, -node.lo] {
                let rc = ((1.0 - z) * (1.0 + z)).max(0.0).sqrt();
                for k in 0..self.azimuth {
                    // half-step offset: no direction lies in a coordinate plane, and the
                    // set is closed under reflections in those planes
                    let phi = dphi * (k as f64 + 0.5);
                    out.push(([rc * phi.cos(), rc * phi.sin(), z], node.weight * dphi));
                }
            }
        }
        out
    }

    /// Tensor nodes in `b`, with segments split at the given planes.
    fn points(&self, b: &Aabb, planes: [Vec<f64>; 3]) -> Vec<([f64; 3], f64)> {
        let rule = tanh_sinh_unit(self.outer.0, self.outer.1);
        let axis = |a: usize| {
            let mut cuts = vec![b.lo[a], b.hi[a]];
            cuts.extend(planes[a].iter().copied().filter(|&c| b.lo[a] < c && c < b.hi[a]));
            cuts.sort_by(f64::total_cmp);
            cuts.dedup();
            let mut nodes = Vec::new();
            for w in cuts.windows(2) {
                let len = w[1] - w[0];
                // place each node from its nearer end to keep face distances exact
                nodes.extend(rule.iter().map(|n| {
                    let x = if n.lo < n.hi { w[0] + len * n.lo } else { w[1] - len * n.hi };
                    (x, len * n.weight)
                }));
            }
            nodes
        };
        let (xs, ys, zs) = (axis(0), axis(1), axis(2));
        let mut out = Vec::with_capacity(xs.len() * ys.len() * zs.len());
        for &(x, wx) in &xs {
            for &(y, wy) in &ys {
                for &(z, wz) in &zs {
                    out.push(([x, y, z], wx * wy * wz));
                }
            }
        }
        out
    }
}

/// Sum over outer nodes of `weight(x) * sum_dirs w_d * radial(inner(x, d))`.
fn outer_integral<W, I>(points: &[([f64; 3], f64)], dirs: &[([f64; 3], f64)], alpha: f64, weight: W, inner: I) -> f64
where
    W: Fn([f64; 3]) -> bool + Sync,
    I: Fn([f64; 3], [f64; 3]) -> Intervals + Sync,
{
    let terms: Vec<f64> = points
        .par_iter()
        .map(|&(x, w)| {
            if !weight(x) {
                return 0.0;
            }
            let s = compensated_sum(dirs.iter().map(|&(d, wd)| wd * radial_kernel(&inner(x, d), alpha)));
            w * s
        })
        .collect();
    compensated_sum(terms)
}

/// `L(A, B)` in `R^3` for a box `A` and any set `B` disjoint from it.
pub fn interaction_l<B: RaySet + ?Sized>(a: &Aabb, b: &B, alpha: f64, quad: &PerimeterQuadrature) -> Result<f64> {
    check_alpha(alpha)?;
    quad.check()?;
    let planes = [0, 1, 2].map(|ax| b.planes(ax));
    let points = quad.points(a, planes);
    if points.iter().any(|&(x, _)| b.contains(x)) {
        return invalid("sets overlap in a set of positive measure");
    }
    let dirs = quad.directions();
    Ok(outer_integral(&points, &dirs, alpha, |_| true, |x, d| b.ray(x, d)))
}

/// `L(A, B)` on the line for finite unions of closed intervals, kernel
/// `|x - y|^{-1 - 2 alpha}`. The inner integral is exact; the outer one uses
/// a tanh-sinh rule on each interval of `A`.
pub fn interaction_l_1d(a: &[(f64, f64)], b: &[(f64, f64)], alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    for &(lo, hi) in a.iter().chain(b) {
        if !(lo < hi && lo.is_finite() && hi.is_finite()) {
            return domain("intervals need finite lo < hi");
        }
    }
    for &(a0, a1) in a {
        for &(b0, b1) in b {
            if a0 < b1 && b0 < a1 {
                return invalid("sets overlap in a set of positive measure");
            }
        }
    }
    let p = 2.0 * alpha;
    let rule = tanh_sinh_unit(0.05, 120);
    let mut terms = Vec::new();
    for &(a0, a1) in a {
        let len = a1 - a0;
        for n in &rule {
            for &(b0, b1) in b {
                // distances from x = a0 + len lo = a1 - len hi to the interval ends
                let (near, far) = if b0 >= a1 { ((b0 - a1) + len * n.hi, (b1 - a1) + len * n.hi) } else { ((a0 - b1) + len * n.lo, (a0 - b0) + len * n.lo) };
                terms.push(len * n.weight * (near.powf(-p) - far.powf(-p)) / p);
            }
        }
    }
    Ok(compensated_sum(terms))
}

/// Fractional perimeter with both interaction terms.
#[derive(Debug, Clone, PartialEq)]
pub struct PerimeterEstimate {
    pub value: f64,
    /// `L(E cap Omega, E^c)`.
    pub interior_term: f64,
    /// `L(E \ Omega, Omega \ E)`.
    pub exterior_term: f64,
    /// `|value - value on the coarser rule|`.
    pub quadrature_error: f64,
    /// Radial integrals are exact to infinity, so nothing is truncated.
    pub tail_bound: f64,
    pub node_count: usize,
}

fn perimeter_terms<E: RaySet + ?Sized>(e: &E, window: &Aabb, alpha: f64, quad: &PerimeterQuadrature) -> (f64, f64, usize) {
    let planes = [0, 1, 2].map(|ax| e.planes(ax));
    let points = quad.points(window, planes);
    let dirs = quad.directions();
    let interior = outer_integral(&points, &dirs, alpha, |x| e.contains(x), |x, d| complement(&e.ray(x, d)));
    let exterior = outer_integral(
        &points,
        &dirs,
        alpha,
        |y| !e.contains(y),
        |y, d| intersect(&e.ray(y, d), &complement(&window.ray(y, d))),
    );
    (interior, exterior, 2 * points.len() * dirs.len())
}

/// `Per_{2 alpha}(E, Omega)` for a box `Omega`.
pub fn fractional_perimeter<E: RaySet + ?Sized>(e: &E, window: &Aabb, alpha: f64, quad: &PerimeterQuadrature) -> Result<PerimeterEstimate> {
    check_alpha(alpha)?;
    quad.check()?;
    let (interior, exterior, n_fine) = perimeter_terms(e, window, alpha, quad);
    let (ci, ce, n_coarse) = perimeter_terms(e, window, alpha, &quad.coarser());
    let value = interior + exterior;
    Ok(PerimeterEstimate {
        value,
        interior_term: interior,
        exterior_term: exterior,
        quadrature_error: (value - ci - ce).abs(),
        tail_bound: 0.0,
        node_count: n_fine + n_coarse,
    })
}
