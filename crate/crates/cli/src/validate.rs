//! Oracle-equivalence and invariant checks for one parameter point.

use std::collections::HashMap;
use std::io::Write;

use absorbing_walks::closed_form::{Solution1D, TwoLevelSolution};
use absorbing_walks::oracles::{
    iteration_budget, mc_absorption_histogram, mc_expected_visits, truncated_fixed_point,
    uniqueness_convergence_report,
};
use absorbing_walks::quadrature::{
    axis_decay_rate, spectral_visit_sum, GreenQuadrature, QuadratureConfig,
};
use absorbing_walks::{
    recurrence_residual, LatticeState, Level, Model, Result, VisitFunction, WalkModel, WalkNDModel,
};
use clap::ValueEnum;

use crate::output::{kind_name, ModelDescriptor};
use crate::window_states;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Profile {
    Quick,
    Full,
}

impl Profile {
    fn walks(self) -> u64 {
        match self {
            Profile::Quick => 100_000,
            Profile::Full => 1_000_000,
        }
    }

    /// Half-width of the window on which the recurrence is checked.
    fn residual_window(self, dim: usize) -> usize {
        match (self, dim) {
            (Profile::Quick, 4) => 2,
            (Profile::Full, 4) => 3,
            (Profile::Quick, _) => 3,
            (Profile::Full, _) => 5,
        }
    }

    /// Largest truncation radius worth attempting per dimension.
    fn radius_cap(self, dim: usize) -> usize {
        let full = match dim {
            1 => 20_000,
            2 => 400,
            3 => 60,
            _ => 16,
        };
        match self {
            Profile::Quick => full / 2,
            Profile::Full => full,
        }
    }
}

const SOLVER_TOL: f64 = 1e-12;
const RESIDUAL_TOL: f64 = 1e-8;
const MASS_TOL: f64 = 1e-10;
/// Closed form against the truncated solver.
const EXACT_TOL: f64 = 1e-10;
/// Quadrature against the truncated solver.
const QUADRATURE_TOL: f64 = 1e-6;
const STABILITY_TOL: f64 = 1e-8;
/// Monte Carlo acceptance band, in standard errors.
const MC_SIGMAS: f64 = 4.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, outcome: Result<(bool, String)>) -> Check {
    match outcome {
        Ok((passed, detail)) => Check {
            name,
            passed,
            detail,
        },
        Err(e) => Check {
            name,
            passed: false,
            detail: e.to_string(),
        },
    }
}

/// Radius at which the truncation error, roughly `exp(-rate * (radius - span))`,
/// drops below `tol`.
fn radius_for(rate: f64, span: usize, tol: f64, cap: usize) -> usize {
    let needed = (-tol.ln() / rate).ceil();
    if needed.is_finite() && needed < cap as f64 {
        (span + needed as usize).min(cap)
    } else {
        cap
    }
}

fn max_abs(mut values: impl Iterator<Item = Result<f64>>) -> Result<f64> {
    values.try_fold(0.0, |acc: f64, v| Ok(acc.max(v?.abs())))
}

fn truncated_agreement<V: VisitFunction>(
    model: &Model,
    exact: &V,
    states: &[LatticeState],
    radius: usize,
    tol: f64,
) -> Result<(bool, String)> {
    let budget = iteration_budget(model.survival_factor(), SOLVER_TOL);
    let oracle = truncated_fixed_point(model, radius, SOLVER_TOL, budget)?;
    let worst = max_abs(states.iter().map(|s| {
        let a = exact
            .visits(s)
            .ok_or_else(|| absorbing_walks::Error::Evaluation(format!("no value at {s}")))?;
        Ok(a - oracle.get(s).unwrap_or(0.0))
    }))?;
    Ok((
        worst < tol,
        format!(
            "max difference {worst:.3e} over {} sites (radius {radius}, tolerance {tol:e})",
            states.len()
        ),
    ))
}

fn residuals<V: VisitFunction>(
    model: &Model,
    visits: &V,
    states: &[LatticeState],
) -> Result<(bool, String)> {
    let worst = max_abs(states.iter().map(|s| recurrence_residual(model, visits, s)))?;
    Ok((
        worst < RESIDUAL_TOL,
        format!("max residual {worst:.3e} over {} sites", states.len()),
    ))
}

fn mass(sum: f64, model: &Model) -> Result<(bool, String)> {
    let target = 1.0 / model.absorption_factor();
    let diff = (sum - target).abs();
    Ok((
        diff < MASS_TOL,
        format!("sum {sum:.15} vs 1/(1-beta) = {target:.15} (diff {diff:.3e})"),
    ))
}

fn convergence(model: &Model, radius: usize) -> Result<(bool, String)> {
    let radius = radius.max(3);
    let radii = [radius / 3, 2 * radius / 3, radius];
    let report = uniqueness_convergence_report(model, &radii, SOLVER_TOL)?;
    let gaps: Vec<String> = report
        .gaps
        .iter()
        .map(|g| format!("{:.3e}", g.sup_difference))
        .collect();
    Ok((
        report.converged(),
        format!(
            "radii {radii:?}: gaps [{}], strictly decreasing {}, within geometric bound {}",
            gaps.join(", "),
            report.strictly_decreasing,
            report.within_geometric_bound
        ),
    ))
}

fn monte_carlo(
    model: &Model,
    exact_origin: f64,
    profile: Profile,
    seed: u64,
) -> Result<(bool, String)> {
    let origin = model.origin();
    let walks = profile.walks();
    let visits = mc_expected_visits(model, &origin, walks, seed)?;
    let absorbed = mc_absorption_histogram(model, walks, seed, 0)?[&origin];
    let again = mc_expected_visits(model, &origin, walks, seed)?;
    let z_visits = (visits.mean - exact_origin) / visits.std_error;
    let z_absorbed =
        (absorbed.mean - model.absorption_factor() * exact_origin) / absorbed.std_error;
    let repro = again == visits;
    Ok((
        z_visits.abs() <= MC_SIGMAS && z_absorbed.abs() <= MC_SIGMAS && repro,
        format!(
            "{walks} walks, seed {seed}: visits {:.6} +- {:.1e} (z {z_visits:+.2}), absorption z {z_absorbed:+.2}, reproducible {repro}",
            visits.mean, visits.std_error
        ),
    ))
}

fn line_states(span: i64, level: Option<Level>) -> Vec<LatticeState> {
    (-span..=span)
        .map(|n| match level {
            Some(l) => LatticeState::on_level(vec![n], l),
            None => LatticeState::point(n),
        })
        .collect()
}

fn checks_1d(model: &Model, sol: Solution1D, profile: Profile, seed: u64) -> Vec<Check> {
    let roots = *sol.roots();
    let rate = (-roots.xi2.ln()).min(roots.xi1.ln());
    let radius = radius_for(rate, 20, 1e-13, profile.radius_cap(1));
    vec![
        check(
            "closed form vs truncated solver",
            truncated_agreement(model, &sol, &line_states(20, None), radius, EXACT_TOL),
        ),
        check(
            "recurrence residual",
            residuals(model, &sol, &line_states(50, None)),
        ),
        check("mass conservation", mass(roots.visit_sum(), model)),
        check("truncation convergence", convergence(model, radius)),
        check(
            "Monte Carlo at origin",
            monte_carlo(model, sol.expected_visits(0), profile, seed),
        ),
    ]
}

fn checks_two_level(
    model: &Model,
    sol: TwoLevelSolution,
    profile: Profile,
    seed: u64,
) -> Vec<Check> {
    let rate = -sol.spectrum().mu2.ln();
    let radius = radius_for(rate, 20, 1e-13, profile.radius_cap(1));
    let both = |span| {
        let mut v = line_states(span, Some(Level::Zero));
        v.extend(line_states(span, Some(Level::One)));
        v
    };
    vec![
        check(
            "closed form vs truncated solver",
            truncated_agreement(model, &sol, &both(20), radius, EXACT_TOL),
        ),
        check("recurrence residual", residuals(model, &sol, &both(50))),
        check("mass conservation", mass(sol.spectrum().visit_sum(), model)),
        check("truncation convergence", convergence(model, radius)),
        check(
            "Monte Carlo at origin",
            monte_carlo(model, sol.expected_visits(Level::Zero, 0), profile, seed),
        ),
    ]
}

/// Quadrature values on the window and its face neighbours, for residuals.
fn tabulate(quad: &GreenQuadrature, dim: usize, r: usize) -> Result<HashMap<LatticeState, f64>> {
    window_states(dim, r + 1)
        .into_iter()
        .filter(|u| {
            let edge = r as i64 + 1;
            u.coords().iter().filter(|c| c.abs() == edge).count() <= 1
        })
        .map(|u| {
            let v = quad.expected_visits(&u)?;
            Ok((u, v))
        })
        .collect()
}

fn checks_nd(model: &Model, walk: WalkNDModel, profile: Profile, seed: u64) -> Vec<Check> {
    let dim = walk.dim();
    let base = QuadratureConfig::for_dimension(dim);
    let quad = GreenQuadrature::new(walk, base);
    let Ok(quad) = quad else {
        let err = quad.unwrap_err();
        return vec![check("quadrature", Err(err))];
    };
    let rate = axis_decay_rate(&walk);
    let radius = radius_for(rate, 2, 1e-8, profile.radius_cap(dim));
    let near = window_states(dim, 2);
    let r = profile.residual_window(dim);

    let stability = || -> Result<(bool, String)> {
        let doubled = GreenQuadrature::new(
            walk,
            QuadratureConfig {
                nodes_per_axis: 2 * base.nodes_per_axis,
            },
        )?;
        let worst = max_abs(
            near.iter()
                .map(|u| Ok(quad.expected_visits(u)? - doubled.expected_visits(u)?)),
        )?;
        Ok((
            worst < STABILITY_TOL,
            format!(
                "max change {worst:.3e} from {} to {} nodes per axis",
                base.nodes_per_axis,
                doubled.config().nodes_per_axis
            ),
        ))
    };
    let residual = || -> Result<(bool, String)> {
        let config = QuadratureConfig {
            nodes_per_axis: base.nodes_per_axis.max(8 * (r + 1) + 16),
        };
        let wide = GreenQuadrature::new(walk, config)?;
        let table = tabulate(&wide, dim, r)?;
        residuals(model, &table, &window_states(dim, r))
    };
    let exact_origin = quad.expected_visits(&model.origin());

    vec![
        check(
            "quadrature vs truncated solver",
            truncated_agreement(model, &QuadValues(&quad), &near, radius, QUADRATURE_TOL),
        ),
        check("recurrence residual", residual()),
        check("mass conservation", mass(spectral_visit_sum(&walk), model)),
        check("node doubling", stability()),
        check("truncation convergence", convergence(model, radius)),
        check(
            "Monte Carlo at origin",
            exact_origin.and_then(|x| monte_carlo(model, x, profile, seed)),
        ),
    ]
}

struct QuadValues<'a>(&'a GreenQuadrature);

impl VisitFunction for QuadValues<'_> {
    fn visits(&self, state: &LatticeState) -> Option<f64> {
        self.0.expected_visits(state).ok()
    }
}

pub fn run_checks(model: &Model, profile: Profile, seed: u64) -> Vec<Check> {
    match *model {
        Model::Walk1D(m) => checks_1d(model, Solution1D::new(m), profile, seed),
        Model::WalkND(m) => checks_nd(model, m, profile, seed),
        Model::TwoLevel(m) => checks_two_level(model, TwoLevelSolution::new(m), profile, seed),
    }
}

pub fn write_report<W: Write>(
    out: &mut W,
    model: &Model,
    profile: Profile,
    checks: &[Check],
) -> std::io::Result<()> {
    let desc = ModelDescriptor::of(model);
    writeln!(
        out,
        "validate {} ({}), profile {:?}",
        kind_name(model.kind()),
        desc.params(),
        profile
    )?;
    for c in checks {
        let tag = if c.passed { "PASS" } else { "FAIL" };
        writeln!(out, "{tag} {}: {}", c.name, c.detail)?;
    }
    let passed = checks.iter().filter(|c| c.passed).count();
    writeln!(out, "{passed}/{} checks passed", checks.len())
}
