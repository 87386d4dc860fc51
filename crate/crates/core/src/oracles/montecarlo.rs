//! Seeded Monte Carlo simulation of the absorbed walks.
//!
//! The randomness of walk `i` under seed `s` is ChaCha8 keyed by `s` on
//! stream `i`, so every walk is reproducible on its own and estimates do not
//! depend on how walks are scheduled across threads. Tallies are exact
//! integer counters, which makes the parallel reduction order-independent.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::grid::BallGrid;
use crate::error::{domain, Error, Result};
use crate::model::{LatticeState, Move, WalkModel};

/// Hard cap on the length of a single walk.
pub const STEP_CAP: u64 = 1_000_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateWithError {
    pub mean: f64,
    pub std_error: f64,
    pub samples: u64,
}

impl EstimateWithError {
    /// Mean and standard error (`sample std / sqrt(n)`) from integer sums.
    pub fn from_sums(sum: u64, sum_sq: u128, samples: u64) -> Self {
        assert!(samples >= 1);
        let n = samples as f64;
        let mean = sum as f64 / n;
        let std_error = if samples > 1 {
            // centred sum of squares; exact in integers before conversion
            let centred = sum_sq as f64 - (sum as f64) * mean;
            (centred.max(0.0) / (n - 1.0) / n).sqrt()
        } else {
            0.0
        };
        Self {
            mean,
            std_error,
            samples,
        }
    }

    /// Whether `value` lies within `k` standard errors of the mean.
    pub fn contains(&self, value: f64, k: f64) -> bool {
        (self.mean - value).abs() <= k * self.std_error
    }
}

/// One simulated walk. `visited` starts at the origin and ends at the
/// absorption site.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkTrajectory {
    pub visited: Vec<LatticeState>,
    pub absorbed_at: LatticeState,
}

/// Per-walk generator derived only from `(seed, walk index)`.
pub fn walk_rng(seed: u64, walk: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(walk);
    rng
}

struct Kernel {
    moves: Vec<Move>,
    cumulative: Vec<f64>,
}

impl Kernel {
    fn new<M: WalkModel + ?Sized>(model: &M) -> Self {
        let moves = model.moves();
        let cumulative = moves
            .iter()
            .scan(0.0, |acc, m| {
                *acc += m.prob;
                Some(*acc)
            })
            .collect();
        Self { moves, cumulative }
    }

    /// Runs one walk, calling `visit` on every occupied state including the
    /// start. Returns the number of occupied time steps.
    fn run<R: Rng>(
        &self,
        start: &LatticeState,
        rng: &mut R,
        mut visit: impl FnMut(&LatticeState),
    ) -> Result<(LatticeState, u64)> {
        let mut state = start.clone();
        let mut length = 1u64;
        visit(&state);
        loop {
            let u: f64 = rng.random();
            let Some(j) = self.cumulative.iter().position(|&c| u < c) else {
                return Ok((state, length));
            };
            if length >= STEP_CAP {
                return Err(Error::Simulation(format!(
                    "walk exceeded {STEP_CAP} steps without absorption"
                )));
            }
            state.step_in_place(&self.moves[j]);
            length += 1;
            visit(&state);
        }
    }
}

pub fn simulate_walk<M: WalkModel + ?Sized>(model: &M, seed: u64) -> Result<WalkTrajectory> {
    let kernel = Kernel::new(model);
    let mut rng = walk_rng(seed, 0);
    let mut visited = Vec::new();
    let (absorbed_at, _) = kernel.run(&model.origin(), &mut rng, |s| visited.push(s.clone()))?;
    Ok(WalkTrajectory {
        visited,
        absorbed_at,
    })
}

/// States whose visits and absorptions are tallied.
enum Observed {
    Ball(BallGrid),
    Single(LatticeState),
}

impl Observed {
    fn len(&self) -> usize {
        match self {
            Observed::Ball(g) => g.len(),
            Observed::Single(_) => 1,
        }
    }

    fn index_of(&self, state: &LatticeState) -> Option<usize> {
        match self {
            Observed::Ball(g) => g.index_of(state),
            Observed::Single(t) => (t == state).then_some(0),
        }
    }

    fn state_at(&self, i: usize) -> LatticeState {
        match self {
            Observed::Ball(g) => g.state_at(i),
            Observed::Single(t) => t.clone(),
        }
    }
}

struct Tally {
    visit_sum: Vec<u64>,
    visit_sq: Vec<u128>,
    absorbed: Vec<u64>,
    life_sum: u64,
    life_sq: u128,
    failure: Option<Error>,
    scratch: Vec<usize>,
}

impl Tally {
    fn new(len: usize) -> Self {
        Self {
            visit_sum: vec![0; len],
            visit_sq: vec![0; len],
            absorbed: vec![0; len],
            life_sum: 0,
            life_sq: 0,
            failure: None,
            scratch: Vec::new(),
        }
    }

    fn merge(mut self, other: Tally) -> Tally {
        for (a, b) in self.visit_sum.iter_mut().zip(other.visit_sum) {
            *a += b;
        }
        for (a, b) in self.visit_sq.iter_mut().zip(other.visit_sq) {
            *a += b;
        }
        for (a, b) in self.absorbed.iter_mut().zip(other.absorbed) {
            *a += b;
        }
        self.life_sum += other.life_sum;
        self.life_sq += other.life_sq;
        self.failure = self.failure.or(other.failure);
        self
    }
}

/// Monte Carlo estimates over a window of states.
#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloSummary {
    pub n_walks: u64,
    pub seed: u64,
    /// Window states in lattice order.
    pub states: Vec<LatticeState>,
    /// Mean visits per walk, aligned with `states`.
    pub visits: Vec<EstimateWithError>,
    /// Absorption frequency, aligned with `states`.
    pub absorption: Vec<EstimateWithError>,
    /// Number of occupied time steps per walk.
    pub lifetime: EstimateWithError,
}

fn run_walks<M: WalkModel + ?Sized>(
    model: &M,
    observed: Observed,
    n_walks: u64,
    seed: u64,
) -> Result<MonteCarloSummary> {
    if n_walks < 1 {
        return domain("need at least one walk");
    }
    let kernel = Kernel::new(model);
    let origin = model.origin();
    let len = observed.len();

    let walks = usize::try_from(n_walks)
        .map_err(|_| Error::Domain(format!("too many walks: {n_walks}")))?;
    let tally = (0..walks)
        .into_par_iter()
        .with_min_len(1024)
        .fold(
            || Tally::new(len),
            |mut t, walk| {
                if t.failure.is_some() {
                    return t;
                }
                let mut rng = walk_rng(seed, walk as u64);
                let mut hits = std::mem::take(&mut t.scratch);
                hits.clear();
                let outcome = kernel.run(&origin, &mut rng, |s| {
                    if let Some(i) = observed.index_of(s) {
                        hits.push(i);
                    }
                });
                match outcome {
                    Ok((absorbed_at, length)) => {
                        hits.sort_unstable();
                        for run in hits.chunk_by(|a, b| a == b) {
                            let c = run.len() as u64;
                            t.visit_sum[run[0]] += c;
                            t.visit_sq[run[0]] += (c as u128) * (c as u128);
                        }
                        if let Some(i) = observed.index_of(&absorbed_at) {
                            t.absorbed[i] += 1;
                        }
                        t.life_sum += length;
                        t.life_sq += (length as u128) * (length as u128);
                    }
                    Err(e) => t.failure = Some(e),
                }
                t.scratch = hits;
                t
            },
        )
        .reduce(|| Tally::new(len), Tally::merge);

    if let Some(e) = tally.failure {
        return Err(e);
    }
    let visits = (0..len)
        .map(|i| EstimateWithError::from_sums(tally.visit_sum[i], tally.visit_sq[i], n_walks))
        .collect();
    let absorption = tally
        .absorbed
        .iter()
        .map(|&c| EstimateWithError::from_sums(c, c as u128, n_walks))
        .collect();
    Ok(MonteCarloSummary {
        n_walks,
        seed,
        states: (0..len).map(|i| observed.state_at(i)).collect(),
        visits,
        absorption,
        lifetime: EstimateWithError::from_sums(tally.life_sum, tally.life_sq, n_walks),
    })
}

/// Visits and absorption frequencies for every state of the sup-norm ball.
pub fn mc_window<M: WalkModel + ?Sized>(
    model: &M,
    n_walks: u64,
    seed: u64,
    window_radius: usize,
) -> Result<MonteCarloSummary> {
    let grid = BallGrid::new(model, window_radius)?;
    run_walks(model, Observed::Ball(grid), n_walks, seed)
}

pub fn mc_expected_visits<M: WalkModel + ?Sized>(
    model: &M,
    target: &LatticeState,
    n_walks: u64,
    seed: u64,
) -> Result<EstimateWithError> {
    model.check_state(target)?;
    let summary = run_walks(model, Observed::Single(target.clone()), n_walks, seed)?;
    Ok(summary.visits[0])
}

/// Absorption frequencies inside the window. Mass absorbed outside the
/// window is not listed, so the values sum to at most 1.
pub fn mc_absorption_histogram<M: WalkModel + ?Sized>(
    model: &M,
    n_walks: u64,
    seed: u64,
    window_radius: usize,
) -> Result<BTreeMap<LatticeState, EstimateWithError>> {
    let summary = mc_window(model, n_walks, seed, window_radius)?;
    Ok(summary.states.into_iter().zip(summary.absorption).collect())
}

/// Mean number of occupied time steps per walk.
pub fn mc_lifetime<M: WalkModel + ?Sized>(
    model: &M,
    n_walks: u64,
    seed: u64,
) -> Result<EstimateWithError> {
    Ok(mc_window(model, n_walks, seed, 0)?.lifetime)
}
