//! Even double-well potentials and the critical screw pitch.

use std::f64::consts::PI;
use std::fmt;
use std::path::Path;
use std::sync::Arc;

use crate::error::{domain, invalid, Error, Result};

type Callable = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A potential given by `F`, `F'` and `F''`.
#[derive(Clone)]
pub struct DoubleWellPotential {
    f: Callable,
    df: Callable,
    ddf: Callable,
    /// Coefficients of the built-in quartic family `c (1 - t^2)^2`, if any.
    pub params: Vec<f64>,
    /// Hölder exponent of `F''`; informational only.
    pub holder_gamma: Option<f64>,
    label: String,
}

impl fmt::Debug for DoubleWellPotential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DoubleWellPotential")
            .field("label", &self.label)
            .field("params", &self.params)
            .finish()
    }
}

impl DoubleWellPotential {
    /// Builds a potential from three callables.
    pub fn from_fns<F, D, DD>(label: impl Into<String>, f: F, df: D, ddf: DD) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
        D: Fn(f64) -> f64 + Send + Sync + 'static,
        DD: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            f: Arc::new(f),
            df: Arc::new(df),
            ddf: Arc::new(ddf),
            params: Vec::new(),
            holder_gamma: None,
            label: label.into(),
        }
    }

    /// `c (1 - t^2)^2`, so that `F''(0) = -4c`.
    pub fn quartic(c: f64) -> Self {
        let mut p = Self::from_fns(
            format!("quartic c={c}"),
            move |t| c * (1.0 - t * t).powi(2),
            move |t| -4.0 * c * t * (1.0 - t * t),
            move |t| c * (12.0 * t * t - 4.0),
        );
        p.params = vec![c];
        p.holder_gamma = Some(1.0);
        p
    }

    /// The standard Allen-Cahn potential `(1 - t^2)^2 / 4`.
    pub fn standard() -> Self {
        Self::quartic(0.25)
    }

    /// Tabulated potential, interpolated by cubic Hermite splines on `F` and `F'`.
    ///
    /// `F''` is interpolated linearly. Values outside the table are clamped
    /// to the end intervals by extrapolating the end cubic.
    pub fn from_table(t: Vec<f64>, f: Vec<f64>, df: Vec<f64>, ddf: Vec<f64>) -> Result<Self> {
        let n = t.len();
        if n < 2 || f.len() != n || df.len() != n || ddf.len() != n {
            return invalid("potential table needs at least two rows of t,F,dF,ddF");
        }
        if t.windows(2).any(|w| w[1] <= w[0]) {
            return invalid("potential table t column must be strictly increasing");
        }
        if [&t, &f, &df, &ddf].iter().any(|c| c.iter().any(|v| !v.is_finite())) {
            return invalid("potential table contains non-finite values");
        }
        let table = Arc::new(Table { t, f, df, ddf });
        let (a, b, c) = (table.clone(), table.clone(), table);
        Ok(Self::from_fns(
            "table",
            move |x| a.eval(x).0,
            move |x| b.eval(x).1,
            move |x| c.eval(x).2,
        ))
    }

    /// Reads a CSV with header `t,F,dF,ddF`.
    pub fn from_csv(path: &Path) -> Result<Self> {
        let mut rdr = csv::Reader::from_path(path)
            .map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?;
        let (mut t, mut f, mut df, mut ddf) = (vec![], vec![], vec![], vec![]);
        for rec in rdr.records() {
            let rec = rec.map_err(|e| Error::InvalidInput(e.to_string()))?;
            if rec.len() < 4 {
                return invalid("potential table rows need 4 columns");
            }
            let parse = |i: usize| -> Result<f64> {
                rec[i]
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| Error::InvalidInput(format!("bad number {:?}: {e}", &rec[i])))
            };
            t.push(parse(0)?);
            f.push(parse(1)?);
            df.push(parse(2)?);
            ddf.push(parse(3)?);
        }
        Self::from_table(t, f, df, ddf)
    }

    /// Parses `family=quartic c=0.25` or `family=table file=path`.
    pub fn from_spec(spec: &str) -> Result<Self> {
        let mut family = None;
        let mut c = None;
        let mut file = None;
        for tok in spec.split_whitespace() {
            let Some((k, v)) = tok.split_once('=') else {
                return invalid(format!("potential spec token {tok:?} is not key=value"));
            };
            match k {
                "family" => family = Some(v.to_string()),
                "c" => {
                    c = Some(
                        v.parse::<f64>()
                            .map_err(|e| Error::InvalidInput(format!("c={v}: {e}")))?,
                    )
                }
                "file" => file = Some(v.to_string()),
                _ => return invalid(format!("unknown potential spec key {k:?}")),
            }
        }
        match family.as_deref() {
            Some("quartic") => {
                let c = c.unwrap_or(0.25);
                if !(c.is_finite() && c > 0.0) {
                    return invalid("quartic coefficient must be positive");
                }
                Ok(Self::quartic(c))
            }
            Some("table") => {
                let file = file.ok_or_else(|| Error::InvalidInput("table family needs file=".into()))?;
                Self::from_csv(Path::new(&file))
            }
            Some(other) => invalid(format!("unknown potential family {other:?}")),
            None => invalid("potential spec needs family="),
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    #[inline]
    pub fn f(&self, t: f64) -> f64 {
        (self.f)(t)
    }

    #[inline]
    pub fn df(&self, t: f64) -> f64 {
        (self.df)(t)
    }

    #[inline]
    pub fn ddf(&self, t: f64) -> f64 {
        (self.ddf)(t)
    }
}

#[derive(Debug)]
struct Table {
    t: Vec<f64>,
    f: Vec<f64>,
    df: Vec<f64>,
    ddf: Vec<f64>,
}

impl Table {
    fn eval(&self, x: f64) -> (f64, f64, f64) {
        let n = self.t.len();
        let k = match self.t.partition_point(|&ti| ti <= x) {
            0 => 0,
            p if p >= n => n - 2,
            p => p - 1,
        };
        let (t0, t1) = (self.t[k], self.t[k + 1]);
        let h = t1 - t0;
        let u = (x - t0) / h;
        let (f0, f1, d0, d1) = (self.f[k], self.f[k + 1], self.df[k] * h, self.df[k + 1] * h);
        let h00 = (1.0 + 2.0 * u) * (1.0 - u) * (1.0 - u);
        let h10 = u * (1.0 - u) * (1.0 - u);
        let h01 = u * u * (3.0 - 2.0 * u);
        let h11 = u * u * (u - 1.0);
        let val = h00 * f0 + h10 * d0 + h01 * f1 + h11 * d1;
        let dh00 = 6.0 * u * u - 6.0 * u;
        let dh10 = 3.0 * u * u - 4.0 * u + 1.0;
        let dh01 = -dh00;
        let dh11 = 3.0 * u * u - 2.0 * u;
        let der = (dh00 * f0 + dh10 * d0 + dh01 * f1 + dh11 * d1) / h;
        let dd = self.ddf[k] + u * (self.ddf[k + 1] - self.ddf[k]);
        (val, der, dd)
    }
}

/// Outcome of [`validate`]: one entry per violated hypothesis.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<String>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn mentions(&self, needle: &str) -> bool {
        self.violations.iter().any(|v| v.contains(needle))
    }
}

pub const EVENNESS: &str = "evenness violated";
pub const WELLS: &str = "minimum at ±1 violated";
pub const CONCAVE_AT_ZERO: &str = "F″(0)<0 violated";
pub const ONE_SIDED: &str = "F″(0)·t ≤ F′(t) violated";
pub const DERIVATIVES: &str = "derivative consistency violated";

/// Checks the double-well hypotheses on a symmetric grid containing `±1`.
pub fn validate(p: &DoubleWellPotential, t_grid: &[f64]) -> Result<ValidationReport> {
    const TOL: f64 = 1e-10;
    if t_grid.is_empty() {
        return invalid("empty sample grid");
    }
    let has = |x: f64| t_grid.iter().any(|&t| (t - x).abs() <= 1e-12);
    if !has(1.0) || !has(-1.0) {
        return invalid("sample grid must contain ±1");
    }
    let mut sorted: Vec<f64> = t_grid.to_vec();
    sorted.sort_by(f64::total_cmp);
    for &t in &sorted {
        if !sorted.iter().any(|&u| (u + t).abs() <= 1e-12 * (1.0 + t.abs())) {
            return invalid("sample grid must be symmetric about 0");
        }
    }
    for &t in &sorted {
        for v in [p.f(t), p.df(t), p.ddf(t)] {
            if !v.is_finite() {
                return invalid(format!("potential is not finite at t={t}"));
            }
        }
    }

    let mut report = ValidationReport::default();
    let scale = sorted.iter().map(|&t| p.f(t).abs()).fold(1.0, f64::max);

    if sorted.iter().any(|&t| (p.f(t) - p.f(-t)).abs() > TOL * scale) {
        report.violations.push(EVENNESS.into());
    }

    let f1 = p.f(1.0);
    let wells_ok = sorted.iter().all(|&t| {
        let gap = p.f(t) - f1;
        let near_well = (t.abs() - 1.0).abs() <= 1e-6;
        gap >= -TOL * scale && (near_well || gap > TOL * scale)
    }) && (p.f(-1.0) - f1).abs() <= TOL * scale;
    if !wells_ok {
        report.violations.push(WELLS.into());
    }

    let a = p.ddf(0.0);
    if !(a < 0.0) {
        report.violations.push(CONCAVE_AT_ZERO.into());
    }
    let slope_scale = sorted.iter().map(|&t| p.df(t).abs()).fold(1.0, f64::max);
    if sorted
        .iter()
        .filter(|&&t| t >= 0.0)
        .any(|&t| a * t > p.df(t) + TOL * slope_scale)
    {
        report.violations.push(ONE_SIDED.into());
    }

    // Second-order convergence of central differences: error ratio near 4
    // under halving, or both errors at rounding level.
    let consistent = |g: &dyn Fn(f64) -> f64, dg: &dyn Fn(f64) -> f64| {
        sorted.iter().all(|&t| {
            let err = |h: f64| ((g(t + h) - g(t - h)) / (2.0 * h) - dg(t)).abs();
            let (e1, e2) = (err(1e-3), err(5e-4));
            let floor = 1e-7 * (1.0 + dg(t).abs());
            e1 <= floor || (e2 <= floor.max(e1 / 3.0))
        })
    };
    let f_ok = consistent(&|t| p.f(t), &|t| p.df(t));
    let df_ok = consistent(&|t| p.df(t), &|t| p.ddf(t));
    if !(f_ok && df_ok) {
        report.violations.push(DERIVATIVES.into());
    }
    Ok(report)
}

/// Critical pitch `pi / (-F''(0))^{1/(2 alpha)}`.
pub fn lambda_star(p: &DoubleWellPotential, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return domain(format!("alpha={alpha} outside (0,1)"));
    }
    let a = p.ddf(0.0);
    if !(a < 0.0) {
        return domain("not a double well at 0");
    }
    Ok(PI / (-a).powf(1.0 / (2.0 * alpha)))
}

/// Uniform symmetric grid on `[-m, m]` with `2k+1` points; contains `±1` when `m/k * j = 1` for some `j`.
pub fn symmetric_grid(m: f64, k: usize) -> Vec<f64> {
    (0..=2 * k)
        .map(|i| m * (i as f64 - k as f64) / k as f64)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid() -> Vec<f64> {
        symmetric_grid(2.0, 200)
    }

    #[test]
    fn quartic_is_valid() {
        let r = validate(&DoubleWellPotential::standard(), &grid()).unwrap();
        assert!(r.is_valid(), "{r:?}");
    }

    #[test]
    fn single_well_fails_concavity() {
        let p = DoubleWellPotential::from_fns("t^2", |t| t * t, |t| 2.0 * t, |_| 2.0);
        let r = validate(&p, &grid()).unwrap();
        assert!(r.mentions(CONCAVE_AT_ZERO));
    }

    #[test]
    fn odd_perturbation_fails_evenness() {
        let p = DoubleWellPotential::from_fns(
            "tilted",
            |t| 0.25 * (1.0 - t * t).powi(2) + 0.1 * t,
            |t| -t * (1.0 - t * t) + 0.1,
            |t| 3.0 * t * t - 1.0,
        );
        let r = validate(&p, &grid()).unwrap();
        assert!(r.mentions(EVENNESS));
    }

    #[test]
    fn wrong_derivative_is_caught() {
        let p = DoubleWellPotential::from_fns(
            "bad",
            |t| 0.25 * (1.0 - t * t).powi(2),
            |t| -t * (1.0 - t * t) * 1.01,
            |t| 3.0 * t * t - 1.0,
        );
        assert!(validate(&p, &grid()).unwrap().mentions(DERIVATIVES));
    }

    #[test]
    fn non_finite_is_rejected() {
        let p = DoubleWellPotential::from_fns("nan", |t| 1.0 / t.abs().min(0.0), |_| 0.0, |_| -1.0);
        assert!(validate(&p, &grid()).is_err());
    }

    #[test]
    fn lambda_star_values() {
        let q = DoubleWellPotential::standard();
        assert_eq!(q.ddf(0.0), -1.0);
        assert!((lambda_star(&q, 0.5).unwrap() - PI).abs() < 1e-15);
        for alpha in [0.1, 0.3, 0.9] {
            assert!((lambda_star(&q, alpha).unwrap() - PI).abs() < 1e-15);
        }
        let steep = DoubleWellPotential::quartic(4.0);
        assert_eq!(steep.ddf(0.0), -16.0);
        assert!((lambda_star(&steep, 0.5).unwrap() - PI / 16.0).abs() < 1e-15);
        assert!((lambda_star(&steep, 0.25).unwrap() - PI / 256.0).abs() < 1e-15);
        let single = DoubleWellPotential::from_fns("t^2", |t| t * t, |t| 2.0 * t, |_| 2.0);
        assert!(matches!(lambda_star(&single, 0.5), Err(Error::Domain(_))));
    }

    #[test]
    fn spec_parsing() {
        let p = DoubleWellPotential::from_spec("family=quartic c=0.5").unwrap();
        assert_eq!(p.params, vec![0.5]);
        assert!(DoubleWellPotential::from_spec("family=cubic").is_err());
        assert!(DoubleWellPotential::from_spec("c=1").is_err());
    }

    #[test]
    fn table_reproduces_quartic() {
        let q = DoubleWellPotential::standard();
        let t: Vec<f64> = symmetric_grid(2.0, 400);
        let tab = DoubleWellPotential::from_table(
            t.clone(),
            t.iter().map(|&x| q.f(x)).collect(),
            t.iter().map(|&x| q.df(x)).collect(),
            t.iter().map(|&x| q.ddf(x)).collect(),
        )
        .unwrap();
        for x in [-1.3, -0.2, 0.0, 0.77, 1.0] {
            assert!((tab.f(x) - q.f(x)).abs() < 1e-9);
            assert!((tab.df(x) - q.df(x)).abs() < 1e-5);
        }
        assert!((lambda_star(&tab, 0.5).unwrap() - PI).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn quartic_family_lambda_star_closed_form(c in 0.01f64..10.0) {
            let p = DoubleWellPotential::quartic(c);
            // symbolic: F''(0) = -4c
            prop_assert!((p.ddf(0.0) + 4.0 * c).abs() <= 1e-12 * c);
            let ls = lambda_star(&p, 0.5).unwrap();
            prop_assert!((ls - PI / (4.0 * c)).abs() <= 1e-12 * ls);
        }

        #[test]
        fn lambda_star_decreases_with_curvature(c1 in 0.01f64..5.0, dc in 0.01f64..5.0, alpha in 0.05f64..0.95) {
            let a = lambda_star(&DoubleWellPotential::quartic(c1), alpha).unwrap();
            let b = lambda_star(&DoubleWellPotential::quartic(c1 + dc), alpha).unwrap();
            prop_assert!(b < a);
        }

        #[test]
        fn quartic_family_validates(c in 0.05f64..5.0) {
            let r = validate(&DoubleWellPotential::quartic(c), &symmetric_grid(2.0, 100)).unwrap();
            prop_assert!(r.is_valid(), "{:?}", r);
        }
    }
}
