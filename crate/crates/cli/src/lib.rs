//! `abswalk`: tables of expected visits and absorption probabilities for the
//! absorbing walk models, plus oracle runs and a validation report.

pub mod output;
pub mod validate;

use std::io::Write;

use absorbing_walks::closed_form::{Solution1D, TwoLevelSolution};
use absorbing_walks::oracles::{iteration_budget, mc_window, truncated_fixed_point};
use absorbing_walks::quadrature::{GreenQuadrature, QuadratureConfig};
use absorbing_walks::{
    make_two_level, make_walk_1d, make_walk_nd, LatticeState, Level, Model, WalkModel,
};
use clap::error::ErrorKind;
use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};

use crate::output::{write_csv, write_json, Meta, Method, OutputRecord};
use crate::validate::Profile;

#[derive(Debug, Parser)]
#[command(
    name = "abswalk",
    version,
    about = "Expected visits and absorption probabilities of absorbing random walks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Closed-form table for the 1-D walk.
    Solve1d {
        #[arg(long)]
        p: f64,
        #[arg(long)]
        alpha: f64,
        #[command(flatten)]
        range: RangeArg,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Quadrature values for the n-dimensional walk.
    Solvend {
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        alpha: f64,
        #[command(flatten)]
        sites: SiteArgs,
        /// Gauss-Legendre nodes per axis [default: depends on --dim]
        #[arg(long)]
        nodes: Option<usize>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Closed-form table for the two-level walk, both levels.
    Twolevel {
        #[arg(long)]
        alpha: f64,
        #[command(flatten)]
        range: RangeArg,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Monte Carlo estimates over a sup-norm window.
    Mc {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        walks: u64,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        window: usize,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Fixed-point solution on a truncated lattice.
    Truncate {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        radius: usize,
        #[arg(long)]
        tol: f64,
        /// [default: enough iterations for --tol]
        #[arg(long)]
        max_iter: Option<usize>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Oracle-equivalence and invariant checks with a pass/fail report.
    Validate {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, value_enum, default_value_t = Profile::Quick)]
        profile: Profile,
        /// Seed for the Monte Carlo checks.
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

#[derive(Debug, Args)]
struct RangeArg {
    /// Inclusive site range LO HI.
    #[arg(long, num_args = 2, value_names = ["LO", "HI"], allow_hyphen_values = true, required = true)]
    range: Vec<i64>,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
struct SiteArgs {
    /// A single site, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    at: Option<Vec<i64>>,
    /// Every site with all |u_i| <= R.
    #[arg(long)]
    window: Option<usize>,
}

#[derive(Debug, Args)]
struct ModelArgs {
    #[arg(long, value_enum)]
    model: ModelChoice,
    /// Right-step share of the 1-D walk.
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    alpha: f64,
    /// Dimension of the n-D walk.
    #[arg(long)]
    dim: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModelChoice {
    #[value(name = "1d")]
    OneD,
    Nd,
    Twolevel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

enum Failure {
    /// Malformed or inconsistent arguments, reported by clap.
    Usage(clap::Error),
    Model(absorbing_walks::Error),
    Io(std::io::Error),
    /// A validation check failed; the report is already written.
    Checks,
}

impl From<absorbing_walks::Error> for Failure {
    fn from(e: absorbing_walks::Error) -> Self {
        Failure::Model(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e)
    }
}

fn usage(kind: ErrorKind, msg: impl std::fmt::Display) -> Failure {
    Failure::Usage(Cli::command().error(kind, msg))
}

impl ModelArgs {
    fn build(&self) -> Result<Model, Failure> {
        let stray = |flag: &str| {
            usage(
                ErrorKind::ArgumentConflict,
                format!("--{flag} does not apply to --model {:?}", self.model),
            )
        };
        match self.model {
            ModelChoice::OneD => {
                if self.dim.is_some() {
                    return Err(stray("dim"));
                }
                let p = self.p.ok_or_else(|| {
                    usage(
                        ErrorKind::MissingRequiredArgument,
                        "--model 1d requires --p",
                    )
                })?;
                Ok(make_walk_1d(p, self.alpha)?.into())
            }
            ModelChoice::Nd => {
                if self.p.is_some() {
                    return Err(stray("p"));
                }
                let dim = self.dim.ok_or_else(|| {
                    usage(
                        ErrorKind::MissingRequiredArgument,
                        "--model nd requires --dim",
                    )
                })?;
                Ok(make_walk_nd(dim, self.alpha)?.into())
            }
            ModelChoice::Twolevel => {
                if self.p.is_some() {
                    return Err(stray("p"));
                }
                if self.dim.is_some() {
                    return Err(stray("dim"));
                }
                Ok(make_two_level(self.alpha)?.into())
            }
        }
    }
}

fn range_bounds(range: &RangeArg) -> Result<(i64, i64), Failure> {
    let (lo, hi) = (range.range[0], range.range[1]);
    if lo > hi {
        return Err(Failure::Model(absorbing_walks::Error::Domain(format!(
            "empty range {lo}..{hi}"
        ))));
    }
    Ok((lo, hi))
}

/// All sites with `|u_i| <= radius`, lexicographic in the coordinates.
pub fn window_states(dim: usize, radius: usize) -> Vec<LatticeState> {
    let r = radius as i64;
    let mut coords = vec![-r; dim];
    let mut out = Vec::new();
    loop {
        out.push(LatticeState::new(coords.clone()));
        // odometer with the last coordinate fastest
        let mut axis = dim;
        loop {
            if axis == 0 {
                return out;
            }
            axis -= 1;
            if coords[axis] < r {
                coords[axis] += 1;
                break;
            }
            coords[axis] = -r;
        }
    }
}

fn emit<W: Write>(
    out: &mut W,
    format: Format,
    argv: &[String],
    seed: Option<u64>,
    records: &[OutputRecord],
) -> Result<(), Failure> {
    match format {
        Format::Csv => write_csv(out, records)?,
        Format::Json => {
            let meta = Meta {
                invocation: argv,
                seed,
                version: env!("CARGO_PKG_VERSION"),
            };
            write_json(out, &meta, records)?
        }
    }
    Ok(())
}

fn dispatch<W: Write>(command: Command, argv: &[String], out: &mut W) -> Result<(), Failure> {
    match command {
        Command::Solve1d {
            p,
            alpha,
            range,
            format,
        } => {
            let walk = make_walk_1d(p, alpha)?;
            let (lo, hi) = range_bounds(&range)?;
            let sol = Solution1D::new(walk);
            let model = Model::from(walk);
            let records: Vec<_> = (lo..=hi)
                .map(|n| {
                    let v = sol.expected_visits(n);
                    OutputRecord::analytic(&model, LatticeState::point(n), v, Method::ClosedForm)
                })
                .collect();
            emit(out, format, argv, None, &records)
        }
        Command::Solvend {
            dim,
            alpha,
            sites,
            nodes,
            format,
        } => {
            let walk = make_walk_nd(dim, alpha)?;
            let config = match nodes {
                Some(k) => QuadratureConfig::new(k)?,
                None => QuadratureConfig::for_dimension(dim),
            };
            let quad = GreenQuadrature::new(walk, config)?;
            let states = match (sites.at, sites.window) {
                (Some(at), _) => vec![LatticeState::new(at)],
                (None, Some(r)) => window_states(dim, r),
                (None, None) => unreachable!("clap enforces one of --at / --window"),
            };
            let model = Model::from(walk);
            let records = states
                .into_iter()
                .map(|u| {
                    let v = quad.expected_visits(&u)?;
                    Ok(OutputRecord::analytic(&model, u, v, Method::Quadrature))
                })
                .collect::<Result<Vec<_>, Failure>>()?;
            emit(out, format, argv, None, &records)
        }
        Command::Twolevel {
            alpha,
            range,
            format,
        } => {
            let walk = make_two_level(alpha)?;
            let (lo, hi) = range_bounds(&range)?;
            let sol = TwoLevelSolution::new(walk);
            let model = Model::from(walk);
            let records: Vec<_> = [Level::Zero, Level::One]
                .into_iter()
                .flat_map(|level| (lo..=hi).map(move |n| (level, n)))
                .map(|(level, n)| {
                    let v = sol.expected_visits(level, n);
                    let state = LatticeState::on_level(vec![n], level);
                    OutputRecord::analytic(&model, state, v, Method::ClosedForm)
                })
                .collect();
            emit(out, format, argv, None, &records)
        }
        Command::Mc {
            model,
            walks,
            seed,
            window,
            format,
        } => {
            let model = model.build()?;
            let summary = mc_window(&model, walks, seed, window)?;
            let descriptor = output::ModelDescriptor::of(&model);
            let records: Vec<_> = summary
                .states
                .iter()
                .zip(summary.visits.iter().zip(&summary.absorption))
                .map(|(state, (visits, absorbed))| OutputRecord {
                    model: descriptor.clone(),
                    state: state.clone(),
                    expected_visits: visits.mean,
                    absorption_prob: absorbed.mean,
                    method: Method::MonteCarlo,
                    error_bar: Some(visits.std_error),
                })
                .collect();
            emit(out, format, argv, Some(seed), &records)
        }
        Command::Truncate {
            model,
            radius,
            tol,
            max_iter,
            format,
        } => {
            let model = model.build()?;
            let max_iter =
                max_iter.unwrap_or_else(|| iteration_budget(model.survival_factor(), tol));
            let sol = truncated_fixed_point(&model, radius, tol, max_iter)?;
            let records: Vec<_> = sol
                .iter()
                .map(|(state, v)| OutputRecord {
                    error_bar: Some(sol.final_residual()),
                    ..OutputRecord::analytic(&model, state, v, Method::Truncated)
                })
                .collect();
            emit(out, format, argv, None, &records)
        }
        Command::Validate {
            model,
            profile,
            seed,
        } => {
            let model = model.build()?;
            let report = validate::run_checks(&model, profile, seed);
            validate::write_report(out, &model, profile, &report)?;
            if report.iter().all(|c| c.passed) {
                Ok(())
            } else {
                Err(Failure::Checks)
            }
        }
    }
}

/// Runs one invocation (`argv[0]` is the program name) and returns the exit
/// code: 0 on success, 1 on model or computation errors and failed
/// validation, 2 on malformed arguments.
pub fn run_with<W: Write, E: Write>(argv: &[String], out: &mut W, err: &mut E) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let rendered = e.render().to_string();
            let _ = if code == 0 {
                write!(out, "{rendered}")
            } else {
                write!(err, "{rendered}")
            };
            return code;
        }
    };
    match dispatch(cli.command, argv, out) {
        Ok(()) => 0,
        Err(Failure::Usage(e)) => {
            let _ = write!(err, "{}", e.render());
            2
        }
        Err(Failure::Model(e)) => {
            let _ = writeln!(err, "abswalk: {e}");
            1
        }
        Err(Failure::Io(e)) => {
            let _ = writeln!(err, "abswalk: output error: {e}");
            1
        }
        Err(Failure::Checks) => {
            let _ = writeln!(err, "abswalk: validation failed");
            1
        }
    }
}

pub fn run(argv: &[String]) -> i32 {
    let stdout = std::io::stdout();
    let mut out = std::io::BufWriter::new(stdout.lock());
    let code = run_with(argv, &mut out, &mut std::io::stderr());
    match out.flush() {
        Ok(()) => code,
        Err(_) => 1,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_is_lexicographic() {
        let states = window_states(2, 1);
        assert_eq!(states.len(), 9);
        assert!(states.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(states[0].coords(), &[-1, -1]);
        assert_eq!(states[1].coords(), &[-1, 0]);
        assert_eq!(window_states(3, 0), vec![LatticeState::new(vec![0, 0, 0])]);
    }

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }
}
