//! Small numerical kernels shared by the solvers: quadrature rules, finite
//! difference extrapolation, tridiagonal solves and the discrete sine transform.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0, "gauss_legendre needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi initial guess, then Newton on P_n.
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Gauss-Legendre rule mapped to `[a, b]`.
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let (x, w) = gauss_legendre(n);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    x.iter()
        .zip(&w)
        .map(|(&xi, &wi)| (mid + half * xi, half * wi))
        .collect()
}

/// One node of a rule on `[0, 1]` that clusters at both ends.
///
/// `lo` and `hi` are the distances to `0` and `1`, each computed without
/// cancellation so that endpoint singularities can be evaluated safely.
#[derive(Debug, Clone, Copy)]
pub struct EndpointNode {
    pub lo: f64,
    pub hi: f64,
    pub weight: f64,
}

/// Tanh-sinh (double exponential) rule on `[0, 1]` with step `h` and `2m+1`
/// nodes. Nodes whose distance to an endpoint underflows are dropped.
pub fn tanh_sinh_unit(h: f64, m: usize) -> Vec<EndpointNode> {
    let mut out = Vec::with_capacity(2 * m + 1);
    for k in -(m as i64)..=(m as i64) {
        let t = k as f64 * h;
        let u = 0.5 * PI * t.sinh();
        let cosh_u = u.cosh();
        // x = (1 + tanh u)/2 = e^u/(2 cosh u), 1 - x = e^{-u}/(2 cosh u)
        let lo = 0.5 * u.exp() / cosh_u;
        let hi = 0.5 * (-u).exp() / cosh_u;
        let weight = 0.5 * h * 0.5 * PI * t.cosh() / (cosh_u * cosh_u);
        if lo < 1e-300 || hi < 1e-300 || !weight.is_finite() || weight == 0.0 {
            continue;
        }
        out.push(EndpointNode { lo, hi, weight });
    }
    out
}

/// Central-difference first derivative with Ridders' extrapolation.
pub fn ridders_first<F: Fn(f64) -> f64>(f: F, x: f64, h0: f64) -> (f64, f64) {
    ridders(|h| (f(x + h) - f(x - h)) / (2.0 * h), h0)
}

/// Central-difference second derivative with Ridders' extrapolation.
pub fn ridders_second<F: Fn(f64) -> f64>(f: F, x: f64, h0: f64) -> (f64, f64) {
    let fx = f(x);
    ridders(|h| (f(x + h) - 2.0 * fx + f(x - h)) / (h * h), h0)
}

fn ridders<D: Fn(f64) -> f64>(d: D, h0: f64) -> (f64, f64) {
    const NTAB: usize = 10;
    const CON: f64 = 1.4;
    const CON2: f64 = CON * CON;
    let mut a = [[0.0f64; NTAB]; NTAB];
    let mut hh = h0;
    a[0][0] = d(hh);
    let mut err = f64::MAX;
    let mut best = a[0][0];
    for i in 1..NTAB {
        hh /= CON;
        a[0][i] = d(hh);
        let mut fac = CON2;
        for j in 1..=i {
            a[j][i] = (a[j - 1][i] * fac - a[j - 1][i - 1]) / (fac - 1.0);
            fac *= CON2;
            let errt = (a[j][i] - a[j - 1][i])
                .abs()
                .max((a[j][i] - a[j - 1][i - 1]).abs());
            if errt <= err {
                err = errt;
                best = a[j][i];
            }
        }
        if (a[i][i] - a[i - 1][i - 1]).abs() >= 2.0 * err {
            break;
        }
    }
    (best, err)
}

/// Richardson table for samples `values[i]` taken at a geometric sequence `h[i]`,
/// eliminating error terms `h^p` for each `p` in `exponents`, in order.
///
/// Returns the diagonal of the table: `diag[k]` has `k` terms removed.
pub fn richardson_diagonal(h: &[f64], values: &[f64], exponents: &[f64]) -> Vec<f64> {
    assert_eq!(h.len(), values.len());
    let n = values.len();
    let mut col: Vec<f64> = values.to_vec();
    let mut diag = vec![col[n - 1]];
    for (k, &p) in exponents.iter().enumerate() {
        if k + 1 >= n {
            break;
        }
        let mut next = vec![0.0; n];
        for i in (k + 1)..n {
            let ratio = (h[i - 1] / h[i]).powf(p);
            next[i] = col[i] + (col[i] - col[i - 1]) / (ratio - 1.0);
        }
        col = next;
        diag.push(col[n - 1]);
    }
    diag
}

/// Solves a tridiagonal system in place.
///
/// `lower[i]` couples row `i` to `i-1` (ignored for `i = 0`), `upper[i]`
/// couples row `i` to `i+1`. The right-hand side is overwritten by the
/// solution. `work` must have the same length as `rhs`.
pub fn solve_tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &mut [f64], work: &mut [f64]) {
    let n = rhs.len();
    debug_assert!(diag.len() >= n && work.len() >= n);
    let mut beta = diag[0];
    rhs[0] /= beta;
    for i in 1..n {
        work[i] = upper[i - 1] / beta;
        beta = diag[i] - lower[i] * work[i];
        rhs[i] = (rhs[i] - lower[i] * rhs[i - 1]) / beta;
    }
    for i in (0..n.saturating_sub(1)).rev() {
        rhs[i] -= work[i + 1] * rhs[i + 1];
    }
}

/// Neumaier-compensated sum; the order of summation is the iteration order.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for x in iter {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// `sin(pi * x)`, exactly zero at integers.
pub fn sin_pi(x: f64) -> f64 {
    let r = x - 2.0 * (x / 2.0).floor();
    if r == 0.0 || r == 1.0 {
        return 0.0;
    }
    if r == 0.5 {
        return 1.0;
    }
    if r == 1.5 {
        return -1.0;
    }
    (PI * r).sin()
}

/// `b^p - a^p` for `0 <= a <= b`, without cancellation when `a` is close to `b`.
pub fn pow_difference(a: f64, b: f64, p: f64) -> f64 {
    if a <= 0.0 {
        return b.powf(p);
    }
    a.powf(p) * (p * ((b - a) / a).ln_1p()).exp_m1()
}

/// Discrete sine transform of type I on the `n - 1` interior points of an
/// `n`-interval grid: `out[k-1] = sum_{j=1}^{n-1} u[j-1] sin(pi j k / n)`.
///
/// The transform is its own inverse up to the factor `2 / n`.
#[derive(Clone)]
pub struct Dst1 {
    n: usize,
    fft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Dst1 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Dst1").field("n", &self.n).finish()
    }
}

impl Dst1 {
    pub fn new(n: usize) -> Self {
        assert!(n >= 2, "DST-I needs at least two intervals");
        let fft = FftPlanner::new().plan_fft_forward(2 * n);
        Self { n, fft }
    }

    pub fn intervals(&self) -> usize {
        self.n
    }

    /// Scratch buffer of the right size for [`Dst1::apply_with`].
    pub fn make_buffer(&self) -> Vec<Complex64> {
        vec![Complex64::new(0.0, 0.0); 2 * self.n + self.fft.get_inplace_scratch_len()]
    }

    pub fn apply(&self, data: &mut [f64]) {
        let mut buf = self.make_buffer();
        self.apply_with(data, &mut buf);
    }

    /// In-place transform of `data` (length `n - 1`).
    pub fn apply_with(&self, data: &mut [f64], buf: &mut [Complex64]) {
        let n = self.n;
        assert_eq!(data.len(), n - 1);
        let (line, scratch) = buf.split_at_mut(2 * n);
        line[0] = Complex64::new(0.0, 0.0);
        line[n] = Complex64::new(0.0, 0.0);
        for j in 1..n {
            line[j] = Complex64::new(data[j - 1], 0.0);
            line[2 * n - j] = Complex64::new(-data[j - 1], 0.0);
        }
        self.fft.process_with_scratch(line, scratch);
        for k in 1..n {
            data[k - 1] = -0.5 * line[k].im;
        }
    }
}
