//! Truncated-lattice fixed-point solver.
//!
//! Solves `X = e_origin + T X` on the sup-norm ball of a given radius with
//! `X = 0` outside, where `T` pulls values back along the model's moves.
//! Every row of `T` sums to `beta < 1`, so simultaneous (Jacobi) sweeps from
//! `X = 0` contract in the sup norm and increase monotonically.

use rayon::prelude::*;

use super::grid::BallGrid;
use crate::error::{domain, Error, Result};
use crate::model::{LatticeState, VisitFunction, WalkModel};

const NO_SOURCE: usize = usize::MAX;

/// Site counts above this are swept in parallel.
const PARALLEL_THRESHOLD: usize = 1 << 13;

#[derive(Debug, Clone)]
pub struct TruncatedSolution {
    grid: BallGrid,
    values: Vec<f64>,
    iterations: usize,
    final_residual: f64,
    update_norms: Vec<f64>,
}

impl TruncatedSolution {
    pub fn radius(&self) -> usize {
        self.grid.radius()
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    /// Upper bound on the sup-norm distance to the exact truncated solution.
    pub fn final_residual(&self) -> f64 {
        self.final_residual
    }

    /// Sup-norm change of every sweep, in order.
    pub fn update_norms(&self) -> &[f64] {
        &self.update_norms
    }

    /// Value at a site of the ball; `None` outside it.
    pub fn get(&self, state: &LatticeState) -> Option<f64> {
        self.grid.index_of(state).map(|i| self.values[i])
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// All sites of the ball in lattice order.
    pub fn iter(&self) -> impl Iterator<Item = (LatticeState, f64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .map(|(i, &v)| (self.grid.state_at(i), v))
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }
}

/// The Dirichlet extension: zero outside the ball.
impl VisitFunction for TruncatedSolution {
    fn visits(&self, state: &LatticeState) -> Option<f64> {
        if !self.grid.fits_shape(state) {
            return None;
        }
        Some(self.get(state).unwrap_or(0.0))
    }
}

/// Sweeps guaranteed to meet the stopping rule: the k-th update is at most
/// `beta^(k-1)`.
pub fn iteration_budget(beta: f64, tol: f64) -> usize {
    let needed = (tol * (1.0 - beta) / beta).ln() / beta.ln();
    needed.max(0.0).ceil() as usize + 16
}

pub fn truncated_fixed_point<M: WalkModel + ?Sized>(
    model: &M,
    radius: usize,
    tol: f64,
    max_iter: usize,
) -> Result<TruncatedSolution> {
    if tol.is_nan() || tol <= 0.0 {
        return domain(format!("tolerance must be positive, got {tol}"));
    }
    let grid = BallGrid::new(model, radius)?;
    let moves = model.moves();
    let probs: Vec<f64> = moves.iter().map(|m| m.prob).collect();
    let fan_in = moves.len();
    let n = grid.len();

    let mut sources = vec![NO_SOURCE; n * fan_in];
    for (site, chunk) in sources.chunks_mut(fan_in).enumerate() {
        let state = grid.state_at(site);
        for (slot, mv) in chunk.iter_mut().zip(&moves) {
            if let Some(j) = grid.index_of(&state.source_of(mv)) {
                *slot = j;
            }
        }
    }
    let origin = grid
        .index_of(&model.origin())
        .expect("origin lies in every ball");

    let beta = model.survival_factor();
    let stop_below = tol * (1.0 - beta) / beta;
    let mut current = vec![0.0; n];
    let mut next = vec![0.0; n];
    let mut update_norms = Vec::new();

    let sweep = |site: usize, out: &mut f64, current: &[f64]| -> f64 {
        let mut v = if site == origin { 1.0 } else { 0.0 };
        for (&src, &p) in sources[site * fan_in..(site + 1) * fan_in]
            .iter()
            .zip(&probs)
        {
            if src != NO_SOURCE {
                v += p * current[src];
            }
        }
        let change = (v - current[site]).abs();
        *out = v;
        change
    };

    for iteration in 1..=max_iter {
        let update = if n >= PARALLEL_THRESHOLD {
            next.par_iter_mut()
                .enumerate()
                .map(|(site, out)| sweep(site, out, &current))
                .reduce(|| 0.0, f64::max)
        } else {
            next.iter_mut()
                .enumerate()
                .map(|(site, out)| sweep(site, out, &current))
                .fold(0.0, f64::max)
        };
        std::mem::swap(&mut current, &mut next);
        update_norms.push(update);
        if update < stop_below {
            return Ok(TruncatedSolution {
                grid,
                values: current,
                iterations: iteration,
                final_residual: update * beta / (1.0 - beta),
                update_norms,
            });
        }
    }
    Err(Error::Iteration {
        iterations: max_iter,
        last_update: update_norms.last().copied().unwrap_or(f64::NAN),
    })
}

/// Sup-norm gap between the solutions of two consecutive radii.
#[derive(Debug, Clone, PartialEq)]
pub struct RadiusGap {
    pub inner: usize,
    pub outer: usize,
    /// `sup |X^(inner) - X^(outer)|` over the inner ball.
    pub sup_difference: f64,
    /// A priori bound `X_origin * beta^(inner + 1) + 2 tol`: leaving the
    /// inner ball takes at least `inner + 1` surviving steps.
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub gaps: Vec<RadiusGap>,
    /// Each gap is strictly smaller than the previous one.
    pub strictly_decreasing: bool,
    /// Each gap respects its geometric a priori bound.
    pub within_geometric_bound: bool,
}

impl ConvergenceReport {
    pub fn converged(&self) -> bool {
        self.strictly_decreasing && self.within_geometric_bound
    }

    pub fn final_difference(&self) -> f64 {
        self.gaps.last().map_or(f64::NAN, |g| g.sup_difference)
    }

    /// Observed decay per unit radius between consecutive gaps.
    pub fn decay_rates(&self) -> Vec<f64> {
        self.gaps
            .windows(2)
            .map(|w| {
                (w[0].sup_difference / w[1].sup_difference).ln() / (w[1].outer - w[0].outer) as f64
            })
            .collect()
    }
}

/// Solves on each radius and compares consecutive solutions on their common
/// window. Non-monotone behaviour is reported, not raised.
pub fn uniqueness_convergence_report<M: WalkModel + ?Sized>(
    model: &M,
    radii: &[usize],
    tol: f64,
) -> Result<ConvergenceReport> {
    if radii.len() < 2 {
        return domain("need at least two radii");
    }
    if radii.windows(2).any(|w| w[0] >= w[1]) {
        return domain(format!("radii must be strictly increasing, got {radii:?}"));
    }
    let beta = model.survival_factor();
    let budget = iteration_budget(beta, tol);
    let solutions = radii
        .iter()
        .map(|&r| truncated_fixed_point(model, r, tol, budget))
        .collect::<Result<Vec<_>>>()?;
    let origin = model.origin();

    let gaps: Vec<RadiusGap> = solutions
        .windows(2)
        .map(|pair| {
            let (inner, outer) = (&pair[0], &pair[1]);
            let sup_difference = inner
                .iter()
                .map(|(s, v)| (v - outer.get(&s).unwrap_or(0.0)).abs())
                .fold(0.0, f64::max);
            let x0 = outer.get(&origin).unwrap_or(0.0);
            RadiusGap {
                inner: inner.radius(),
                outer: outer.radius(),
                sup_difference,
                bound: x0 * beta.powi(inner.radius() as i32 + 1) + 2.0 * tol,
            }
        })
        .collect();
    let strictly_decreasing = gaps
        .windows(2)
        .all(|w| w[1].sup_difference < w[0].sup_difference);
    let within_geometric_bound = gaps.iter().all(|g| g.sup_difference <= g.bound);
    Ok(ConvergenceReport {
        gaps,
        strictly_decreasing,
        within_geometric_bound,
    })
}
