//! One function per subcommand: run the computation, emit the data file,
//! return the summary recorded in the manifest.

use std::f64::consts::PI;
use std::path::Path;
use std::time::Instant;

use fracscrew::helicoid3d::{
    barrier_check, competitor_energy, decay_rate, minimize_cyl, zero_set_rays, BarrierParams, BarrierSample,
    CompetitorParams, CylGrid, ReducedField, WorstPoint,
};
use fracscrew::nmc::{
    fractional_perimeter, nmc_at, nmc_helicoid_symmetrized, Aabb, Ball, HalfSpace, NmcEstimate, PVQuadrature,
    PerimeterQuadrature, Region, ScrewSurface,
};
use fracscrew::optimize::LbfgsOptions;
use fracscrew::potential::{lambda_star, symmetric_grid, validate, DoubleWellPotential};
use fracscrew::specfun::{c_alpha, neumann_trace, phi1, phi2, ExtensionProfile};
use fracscrew::spectral1d::{extend, SineExpansion};
use fracscrew::strip1d::{el_residual, minimize_strip, nonexistence_identity, threshold_scan, StripConfig, StripField, StripGrid};
use serde_json::Value;

use crate::cli::{self, NmcShape, PerimeterShape, SolverArgs};
use crate::output::{emit, json_bytes, num, obj, Emitted, Table};
use crate::CliError;

pub struct Outcome {
    pub outputs: Vec<Emitted>,
    pub results: Value,
}

fn table_out(out: Option<&Path>, t: &Table, results: Value) -> Result<Outcome, CliError> {
    Ok(Outcome { outputs: vec![emit(out, t.to_bytes()?)?], results })
}

fn json_out(out: Option<&Path>, v: Value) -> Result<Outcome, CliError> {
    let e = emit(out, json_bytes(&v))?;
    Ok(Outcome { outputs: vec![e], results: v })
}

fn lbfgs(s: &SolverArgs) -> LbfgsOptions {
    LbfgsOptions { max_iter: s.max_iter, residual_tol: s.residual_tol, ..LbfgsOptions::default() }
}

fn strict_positive(name: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(CliError::domain(format!("--{name} must be positive and finite, got {v}")))
    }
}

pub fn validate_cmd(a: &cli::Validate) -> Result<Outcome, CliError> {
    strict_positive("step", a.step)?;
    let per_unit = (1.0 / a.step).round();
    if ((1.0 / a.step) - per_unit).abs() > 1e-9 {
        return Err(CliError::domain("--step must divide 1 so that ±1 are grid nodes"));
    }
    let k = (a.tmax / a.step).round() as usize;
    let grid = symmetric_grid(k as f64 * a.step, k);
    let p = DoubleWellPotential::from_spec(&a.potential)?;
    let report = validate(&p, &grid)?;
    let star = if report.is_valid() { lambda_star(&p, a.alpha).map(num).unwrap_or(Value::Null) } else { Value::Null };
    let v = obj([
        ("potential", Value::String(p.label().to_string())),
        ("valid", Value::Bool(report.is_valid())),
        ("violations", Value::from(report.violations.clone())),
        ("samples", Value::from(grid.len())),
        ("ddf0", num(p.ddf(0.0))),
        ("lambda_star", star),
    ]);
    let out = json_out(a.out.as_deref(), v)?;
    if !report.is_valid() {
        return Err(CliError::domain(format!("potential fails: {}", report.violations.join("; "))).with_outcome(out));
    }
    Ok(out)
}

pub fn specfun(a: &cli::Specfun) -> Result<Outcome, CliError> {
    strict_positive("step", a.step)?;
    strict_positive("ymax", a.ymax)?;
    let profile = ExtensionProfile::decaying(a.alpha)?;
    let n = (a.ymax / a.step * (1.0 + 1e-12)).floor() as usize;
    let mut t = Table::new(vec!["y", "phi1", "phi2", "residual"]);
    let mut worst = 0.0f64;
    for i in 1..=n {
        let y = i as f64 * a.step;
        let r = profile.ode_residual(y)?;
        worst = worst.max(r.abs());
        t.push_f64(&[y, phi1(a.alpha, y)?, phi2(a.alpha, y)?, r]);
    }
    let trace = neumann_trace(a.alpha)?;
    let results = obj([
        ("rows", Value::from(n)),
        ("max_abs_residual", num(worst)),
        ("c_alpha", num(c_alpha(a.alpha)?)),
        ("neumann_trace", num(trace.value)),
        ("neumann_trace_error", num(trace.error_estimate)),
    ]);
    table_out(a.out.as_deref(), &t, results)
}

fn read_modes(path: &Path) -> Result<Vec<f64>, CliError> {
    let mut rd = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
    let mut pairs = Vec::new();
    for (n, rec) in rd.records().enumerate() {
        let rec = rec.map_err(|e| CliError::invalid(format!("{}: {e}", path.display())))?;
        let bad = || CliError::invalid(format!("{} row {}: expected k,coeff", path.display(), n + 1));
        if rec.len() != 2 {
            return Err(bad());
        }
        let k: usize = rec[0].parse().map_err(|_| bad())?;
        let c: f64 = rec[1].parse().map_err(|_| bad())?;
        if k == 0 {
            return Err(CliError::invalid("mode indices start at 1"));
        }
        pairs.push((k, c));
    }
    let kmax = pairs.iter().map(|p| p.0).max().ok_or_else(|| CliError::invalid("no modes given"))?;
    let mut coeffs = vec![0.0; kmax];
    for (k, c) in pairs {
        coeffs[k - 1] += c;
    }
    Ok(coeffs)
}

pub fn extend1d(a: &cli::Extend1d) -> Result<Outcome, CliError> {
    if a.samples < 2 {
        return Err(CliError::domain("--samples must be at least 2"));
    }
    let exp = SineExpansion::new(a.lambda, read_modes(&a.modes)?)?;
    let s: Vec<f64> = (0..a.samples).map(|i| a.lambda * i as f64 / (a.samples - 1) as f64).collect();
    let mut t = Table::new(vec!["y", "s", "v"]);
    for &y in &a.heights {
        for (si, vi) in s.iter().zip(extend(&exp, a.alpha, y, &s)?) {
            t.push_f64(&[y, *si, vi]);
        }
    }
    let results = obj([("modes", Value::from(exp.coeffs.len())), ("rows", Value::from(t.rows.len()))]);
    table_out(a.out.as_deref(), &t, results)
}

pub fn minimize1d(a: &cli::Minimize1d) -> Result<Outcome, CliError> {
    let pot = DoubleWellPotential::from_spec(&a.potential)?;
    let height = a.height.unwrap_or(12.0 * a.lambda / PI);
    let grid = StripGrid::new(a.lambda, a.alpha, a.ns, a.ny, height)?;
    let init = StripField::first_mode(&grid, a.solver.init_amplitude)?;
    let sol = minimize_strip(&grid, &pot, &init, &lbfgs(&a.solver))?;
    let ident = nonexistence_identity(&grid, &sol.field, &pot)?;
    let mut t = Table::new(vec!["s", "y", "v"]);
    for i in 0..=grid.ns {
        for j in 0..=grid.ny {
            t.push_f64(&[grid.s(i), grid.y[j], sol.field.get(i, j)]);
        }
    }
    let results = obj([
        ("energy", num(sol.energy)),
        ("trivial_energy", num(a.lambda * pot.f(0.0))),
        ("sup", num(sol.field.sup_norm())),
        ("residual", num(sol.residual)),
        ("iterations", Value::from(sol.iterations)),
        ("height", num(height)),
        ("lambda_star", lambda_star(&pot, a.alpha).map(num).unwrap_or(Value::Null)),
        ("nonexistence_identity", num(ident.value)),
        ("nonexistence_identity_continuum", num(ident.continuum_value)),
        ("el_residual", num(el_residual(&grid, &sol.field, &pot)?)),
    ]);
    table_out(a.out.as_deref(), &t, results)
}

pub fn threshold(a: &cli::Threshold) -> Result<Outcome, CliError> {
    if a.steps < 2 || a.lambda_min.partial_cmp(&a.lambda_max) != Some(std::cmp::Ordering::Less) {
        return Err(CliError::domain("need --steps >= 2 and --lambda-min < --lambda-max"));
    }
    let pot = DoubleWellPotential::from_spec(&a.potential)?;
    let cfg = StripConfig {
        ns: a.ns,
        ny: a.ny,
        height_factor: a.height_factor,
        init_amplitude: a.solver.init_amplitude,
        solver: lbfgs(&a.solver),
    };
    let lambdas: Vec<f64> = (0..a.steps)
        .map(|i| a.lambda_min + (a.lambda_max - a.lambda_min) * i as f64 / (a.steps - 1) as f64)
        .collect();
    let scan = threshold_scan(&pot, a.alpha, &lambdas, &cfg, a.bisect_tol)?;
    let mut t = Table::new(vec!["lambda", "sup", "energy", "trivial_energy", "residual", "trivial"]);
    for r in &scan.rows {
        let mut row: Vec<String> = [r.lambda, r.sup, r.energy, r.trivial_energy, r.residual]
            .iter()
            .map(|&v| crate::output::fmt_f64(v))
            .collect();
        row.push(u8::from(r.is_trivial()).to_string());
        t.rows.push(row);
    }
    let results = obj([
        ("crossing", scan.crossing.map(num).unwrap_or(Value::Null)),
        ("lambda_star", num(scan.lambda_star)),
        (
            "crossing_rel_error",
            scan.crossing.map(|c| num((c - scan.lambda_star).abs() / scan.lambda_star)).unwrap_or(Value::Null),
        ),
    ]);
    table_out(a.out.as_deref(), &t, results)
}

pub fn minimize3d(a: &cli::Minimize3d) -> Result<Outcome, CliError> {
    let pot = DoubleWellPotential::from_spec(&a.potential)?;
    let height = a.height.unwrap_or(12.0 * a.lambda / PI);
    let grid = CylGrid::new(a.lambda, a.alpha, a.r_max, height, a.nr, a.ns, a.ny)?;
    let init = ReducedField::initial_guess(&grid, a.solver.init_amplitude)?;
    let sol = minimize_cyl(&grid, &pot, &init, &lbfgs(&a.solver))?;
    let mut t = Table::new(vec!["r", "s", "y", "V"]);
    for i in 0..=grid.nr {
        for k in 0..=grid.ns {
            for j in 0..=grid.ny {
                t.push_f64(&[grid.r[i], grid.s(k), grid.y[j], sol.field.get(i, k, j)]);
            }
        }
    }
    // Diagnostics that need enough resolution are reported as null when unavailable.
    let rays = zero_set_rays(&grid, &sol.field, a.rays, 0.25f64.min(grid.r_max / 4.0), 0.9375 * grid.r_max).ok();
    let fit = decay_rate(&grid, &sol.field).ok();
    let results = obj([
        ("energy", num(sol.energy)),
        ("sup", num(sol.field.sup_norm())),
        ("residual", num(sol.residual)),
        ("iterations", Value::from(sol.iterations)),
        ("height", num(height)),
        (
            "zero_set",
            rays.map_or(Value::Null, |r| {
                obj([
                    ("rays", Value::from(r.rays)),
                    ("expected_crossings", Value::from(r.expected_crossings)),
                    ("found_crossings", Value::from(r.found_crossings)),
                    ("max_offset", num(r.max_offset)),
                    ("cell", num(r.cell)),
                    ("localized", Value::Bool(r.localized())),
                ])
            }),
        ),
        (
            "decay",
            fit.map_or(Value::Null, |f| {
                obj([
                    ("rate", num(f.rate)),
                    ("std_error", num(f.std_error)),
                    ("pi_over_lambda", num(f.pi_over_lambda)),
                    ("confined_rate", num(f.confined_rate)),
                    ("rel_to_pi_over_lambda", num(f.rel_to_pi_over_lambda())),
                ])
            }),
        ),
    ]);
    table_out(a.out.as_deref(), &t, results)
}

fn worst(w: &WorstPoint) -> Value {
    obj([("r", num(w.r)), ("s", num(w.s)), ("y", num(w.y)), ("value", num(w.value))])
}

pub fn barrier(a: &cli::Barrier) -> Result<Outcome, CliError> {
    let params = BarrierParams::new(a.amplitude, a.axis_constant, a.eps)?;
    let sample = BarrierSample { n: a.n, r_range: (a.r_min, a.r_max), y_range: (a.y_min, a.y_max) };
    let rep = barrier_check(&params, a.alpha, a.lambda, &sample)?;
    let v = obj([
        ("max_operator", worst(&rep.max_operator)),
        ("superharmonic", Value::Bool(rep.superharmonic)),
        ("lateral_zero", Value::Bool(rep.lateral_zero)),
        ("trace_dominates", Value::Bool(rep.trace_dominates)),
        ("axis_nonnegative", Value::Bool(rep.axis_nonnegative)),
        ("boundary_flags", Value::Bool(rep.boundary_flags())),
        ("near_axis_term_nonpositive", Value::Bool(rep.near_axis_term_nonpositive)),
        ("near_axis_worst", worst(&rep.near_axis_worst)),
        ("axis_constant_admissible", Value::Bool(rep.axis_constant_admissible)),
        ("samples", Value::from(rep.samples)),
    ]);
    json_out(a.out.as_deref(), v)
}

pub fn competitor(a: &cli::Competitor) -> Result<Outcome, CliError> {
    let pot = DoubleWellPotential::from_spec(&a.potential)?;
    let cfg = StripConfig { ns: a.ns, ny: a.ny, init_amplitude: a.solver.init_amplitude, solver: lbfgs(&a.solver), ..StripConfig::default() };
    let (grid, v0) = cfg.solve(&pot, a.alpha, a.lambda)?;
    let mut t = Table::new(vec![
        "R", "total", "direct_total", "bulk", "eta_cost", "angular_cost", "xi_cost", "edge_cost", "eta_bound", "xi_bound", "excess_per_area",
    ]);
    let mut excess = Vec::new();
    let mut eps_b = f64::NAN;
    for &r in &a.radii {
        let p = CompetitorParams::new(a.a, a.b, r)?;
        eps_b = p.epsilon(a.alpha);
        let e = competitor_energy(&p, &grid, &v0.field, &pot)?;
        excess.push((r, e.excess_per_area()));
        t.push_f64(&[
            r, e.total, e.direct_total, e.bulk, e.eta_cost, e.angular_cost, e.xi_cost, e.edge_cost, e.eta_bound, e.xi_bound,
            e.excess_per_area(),
        ]);
    }
    let slope = match (excess.first(), excess.last()) {
        (Some(&(r0, e0)), Some(&(r1, e1))) if r1 != r0 && e0 > 0.0 && e1 > 0.0 => num((e1.ln() - e0.ln()) / (r1.ln() - r0.ln())),
        _ => Value::Null,
    };
    let results = obj([
        ("e0", num(v0.energy)),
        ("v0_residual", num(v0.residual)),
        ("epsilon_b", num(eps_b)),
        ("loglog_slope", slope),
    ]);
    table_out(a.out.as_deref(), &t, results)
}

fn estimate_json(e: &NmcEstimate) -> Vec<(&'static str, Value)> {
    vec![
        ("value", num(e.value)),
        ("pv_extrapolation_error", num(e.pv_extrapolation_error)),
        ("quadrature_error", num(e.quadrature_error)),
        ("numerical_error", num(e.numerical_error())),
        ("tail_bound", num(e.tail_bound)),
        ("node_count", Value::from(e.node_count)),
        ("rho_max", num(e.rho_max)),
        ("deltas", Value::Array(e.deltas.iter().map(|&d| num(d)).collect())),
        ("truncated", Value::Array(e.truncated.iter().map(|&d| num(d)).collect())),
    ]
}

pub fn nmc(a: &cli::Nmc) -> Result<Outcome, CliError> {
    let start = Instant::now();
    let x0 = match a.shape {
        NmcShape::Helicoid | NmcShape::Halfspace => [a.t0, 0.0, 0.0],
        NmcShape::Ball => [0.0, 0.0, a.radius],
    };
    let x0_norm = x0.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut quad = PVQuadrature::default_for(x0_norm);
    if let Some(d) = &a.deltas {
        quad.deltas = d.clone();
    }
    if let Some(r) = a.rmax {
        quad.rho_max = r;
    }
    if let Some(n) = a.ring_samples {
        quad.ring_samples = n;
    }
    if let Some(t) = a.shell_tol {
        quad.shell_tol = t;
    }
    if let Some(t) = a.radial_tol {
        quad.radial_tol = t;
    }
    let region: Box<dyn Region> = match a.shape {
        NmcShape::Helicoid => Box::new(ScrewSurface::new(a.lambda)?),
        NmcShape::Ball => Box::new(Ball::new([0.0; 3], a.radius)?),
        NmcShape::Halfspace => Box::new(HalfSpace::new([0.0, 0.0, 1.0], 0.0)?),
    };
    let est = nmc_at(region.as_ref(), x0, a.alpha, &quad)?;
    let mut fields = estimate_json(&est);
    fields.push(("x0", Value::Array(x0.iter().map(|&v| num(v)).collect())));
    match a.shape {
        NmcShape::Helicoid => {
            let p = nmc_helicoid_symmetrized(a.t0, a.lambda, a.alpha, &quad)?;
            fields.push((
                "symmetrized",
                obj([("value", num(p.value)), ("scale", num(p.scale)), ("node_count", Value::from(p.node_count))]),
            ));
        }
        NmcShape::Ball => {
            // Untruncated value for the convention chi_E - chi_{E^c}; scales as radius^{-2 alpha}.
            let s = a.alpha;
            let unit = -2.0 * PI * 2f64.powf(1.0 - 2.0 * s) / (1.0 - 2.0 * s) - (2.0 * PI / s) * 2f64.powf(-2.0 * s);
            fields.push(("exact", num(unit * a.radius.powf(-2.0 * s))));
        }
        NmcShape::Halfspace => fields.push(("exact", num(0.0))),
    }
    fields.push(("wall_time", num(start.elapsed().as_secs_f64())));
    let v = Value::Object(fields.into_iter().map(|(k, v)| (k.to_string(), v)).collect());
    json_out(a.out.as_deref(), v)
}

pub fn perimeter(a: &cli::Perimeter) -> Result<Outcome, CliError> {
    let start = Instant::now();
    let window = match a.window.as_slice() {
        [side] => Aabb::centered_cube(*side)?,
        [x0, y0, z0, x1, y1, z1] => Aabb::new([*x0, *y0, *z0], [*x1, *y1, *z1])?,
        _ => return Err(CliError::invalid("--window takes one side length or six corner coordinates")),
    };
    let mut quad = PerimeterQuadrature::default();
    if let Some(h) = a.outer_h {
        quad.outer.0 = h;
    }
    if let Some(m) = a.outer_levels {
        quad.outer.1 = m;
    }
    if let Some(n) = a.azimuth {
        quad.azimuth = n;
    }
    let est = match a.shape {
        PerimeterShape::Halfspace => fractional_perimeter(&HalfSpace::new([0.0, 0.0, 1.0], 0.0)?, &window, a.alpha, &quad)?,
        PerimeterShape::Ball => fractional_perimeter(&Ball::new([0.0; 3], a.radius)?, &window, a.alpha, &quad)?,
    };
    let v = obj([
        ("value", num(est.value)),
        ("interior_term", num(est.interior_term)),
        ("exterior_term", num(est.exterior_term)),
        ("quadrature_error", num(est.quadrature_error)),
        ("tail_bound", num(est.tail_bound)),
        ("node_count", Value::from(est.node_count)),
        ("wall_time", num(start.elapsed().as_secs_f64())),
    ]);
    json_out(a.out.as_deref(), v)
}
