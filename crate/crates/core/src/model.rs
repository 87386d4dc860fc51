//! The three walk models, their lattice states and the defining recurrences.
//!
//! Every model follows the same recipe: a base random walk whose transition
//! probabilities are scaled down so that they sum to a survival factor
//! `beta < 1`, with the remaining `1 - beta` spent on absorption in place.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use crate::error::{domain, Error, Result};

/// Level index of the two-level walk. The walk starts on [`Level::Zero`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Level {
    Zero,
    One,
}

impl Level {
    pub fn other(self) -> Level {
        match self {
            Level::Zero => Level::One,
            Level::One => Level::Zero,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Level::Zero => 0,
            Level::One => 1,
        }
    }

    pub fn from_index(index: usize) -> Result<Level> {
        match index {
            0 => Ok(Level::Zero),
            1 => Ok(Level::One),
            _ => domain(format!("level index must be 0 or 1, got {index}")),
        }
    }
}

/// A lattice site. Ordering is level-major, then lexicographic in the
/// coordinates, which is the enumeration order used for all output.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LatticeState {
    level: Option<Level>,
    coords: Vec<i64>,
}

impl LatticeState {
    pub fn new(coords: Vec<i64>) -> Self {
        Self {
            level: None,
            coords,
        }
    }

    pub fn on_level(coords: Vec<i64>, level: Level) -> Self {
        Self {
            level: Some(level),
            coords,
        }
    }

    /// Single-coordinate state of the 1-D walk.
    pub fn point(n: i64) -> Self {
        Self::new(vec![n])
    }

    pub fn coords(&self) -> &[i64] {
        &self.coords
    }

    pub fn level(&self) -> Option<Level> {
        self.level
    }

    /// Sup-norm of the coordinate vector.
    pub fn sup_norm(&self) -> i64 {
        self.coords.iter().map(|c| c.abs()).max().unwrap_or(0)
    }

    /// The state reached by applying `mv`.
    pub fn shifted(&self, mv: &Move) -> Self {
        let coords = self
            .coords
            .iter()
            .zip(&mv.delta)
            .map(|(c, d)| c + d)
            .collect();
        let level = if mv.flip_level {
            self.level.map(Level::other)
        } else {
            self.level
        };
        Self { level, coords }
    }

    pub(crate) fn step_in_place(&mut self, mv: &Move) {
        for (c, d) in self.coords.iter_mut().zip(&mv.delta) {
            *c += d;
        }
        if mv.flip_level {
            self.level = self.level.map(Level::other);
        }
    }

    /// The state from which `mv` leads to `self`.
    pub fn source_of(&self, mv: &Move) -> Self {
        let coords = self
            .coords
            .iter()
            .zip(&mv.delta)
            .map(|(c, d)| c - d)
            .collect();
        let level = if mv.flip_level {
            self.level.map(Level::other)
        } else {
            self.level
        };
        Self { level, coords }
    }
}

impl fmt::Display for LatticeState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.coords.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")?;
        if let Some(level) = self.level {
            write!(f, "@{}", level.index())?;
        }
        Ok(())
    }
}

/// One outgoing transition of a walk kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct Move {
    pub delta: Vec<i64>,
    pub flip_level: bool,
    pub prob: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    Walk1D,
    WalkND,
    TwoLevel,
}

/// Common interface of the three walk models.
pub trait WalkModel: Send + Sync {
    fn kind(&self) -> ModelKind;

    /// Number of integer coordinates of a state.
    fn dimension(&self) -> usize;

    fn has_levels(&self) -> bool {
        self.kind() == ModelKind::TwoLevel
    }

    /// Total probability of not being absorbed in one step.
    fn survival_factor(&self) -> f64;

    /// Per-step absorption probability `1 - beta`.
    fn absorption_factor(&self) -> f64 {
        1.0 - self.survival_factor()
    }

    /// Outgoing transitions; probabilities sum to the survival factor.
    fn moves(&self) -> Vec<Move>;

    fn origin(&self) -> LatticeState {
        let coords = vec![0; self.dimension()];
        if self.has_levels() {
            LatticeState::on_level(coords, Level::Zero)
        } else {
            LatticeState::new(coords)
        }
    }

    /// Rejects states of the wrong shape for this model.
    fn check_state(&self, state: &LatticeState) -> Result<()> {
        if state.coords().len() != self.dimension() {
            return domain(format!(
                "state {state} has {} coordinates, model needs {}",
                state.coords().len(),
                self.dimension()
            ));
        }
        if state.level().is_some() != self.has_levels() {
            return domain(format!(
                "state {state}: level must be present exactly for the two-level model"
            ));
        }
        Ok(())
    }
}

/// One-dimensional asymmetric walk: step +1 with probability `p*alpha`,
/// step -1 with `q*alpha`, absorption with `1 - alpha`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Walk1DModel {
    p: f64,
    q: f64,
    alpha: f64,
}

impl Walk1DModel {
    pub fn new(p: f64, alpha: f64) -> Result<Self> {
        if !(p > 0.0 && p < 1.0) {
            return domain(format!("p must lie in (0, 1), got {p}"));
        }
        if !(alpha > 0.0 && alpha < 1.0) {
            return domain(format!("alpha must lie in (0, 1), got {alpha}"));
        }
        Ok(Self {
            p,
            q: 1.0 - p,
            alpha,
        })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

impl WalkModel for Walk1DModel {
    fn kind(&self) -> ModelKind {
        ModelKind::Walk1D
    }

    fn dimension(&self) -> usize {
        1
    }

    fn survival_factor(&self) -> f64 {
        self.alpha
    }

    fn moves(&self) -> Vec<Move> {
        vec![
            Move {
                delta: vec![1],
                flip_level: false,
                prob: self.p * self.alpha,
            },
            Move {
                delta: vec![-1],
                flip_level: false,
                prob: self.q * self.alpha,
            },
        ]
    }
}

/// Symmetric walk on the n-dimensional integer lattice, `n >= 2`, stepping
/// to each of the `2n` neighbours with probability `alpha`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WalkNDModel {
    dim: usize,
    alpha: f64,
}

impl WalkNDModel {
    pub fn new(dim: usize, alpha: f64) -> Result<Self> {
        if dim < 2 {
            return domain(format!(
                "dimension must be at least 2, got {dim}; use the 1-D walk with p = 1/2"
            ));
        }
        let upper = 1.0 / (2.0 * dim as f64);
        if !(alpha > 0.0 && alpha < upper) {
            return domain(format!("alpha must lie in (0, 1/{}), got {alpha}", 2 * dim));
        }
        Ok(Self { dim, alpha })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

impl WalkModel for WalkNDModel {
    fn kind(&self) -> ModelKind {
        ModelKind::WalkND
    }

    fn dimension(&self) -> usize {
        self.dim
    }

    fn survival_factor(&self) -> f64 {
        2.0 * self.dim as f64 * self.alpha
    }

    fn moves(&self) -> Vec<Move> {
        let mut moves = Vec::with_capacity(2 * self.dim);
        for axis in 0..self.dim {
            for step in [1, -1] {
                let mut delta = vec![0; self.dim];
                delta[axis] = step;
                moves.push(Move {
                    delta,
                    flip_level: false,
                    prob: self.alpha,
                });
            }
        }
        moves
    }
}

/// Walk on two copies of the integers: left, right and cross-level moves,
/// each with probability `alpha`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoLevelModel {
    alpha: f64,
}

impl TwoLevelModel {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0 / 3.0) {
            return domain(format!("alpha must lie in (0, 1/3), got {alpha}"));
        }
        Ok(Self { alpha })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

impl WalkModel for TwoLevelModel {
    fn kind(&self) -> ModelKind {
        ModelKind::TwoLevel
    }

    fn dimension(&self) -> usize {
        1
    }

    fn survival_factor(&self) -> f64 {
        3.0 * self.alpha
    }

    fn moves(&self) -> Vec<Move> {
        vec![
            Move {
                delta: vec![1],
                flip_level: false,
                prob: self.alpha,
            },
            Move {
                delta: vec![-1],
                flip_level: false,
                prob: self.alpha,
            },
            Move {
                delta: vec![0],
                flip_level: true,
                prob: self.alpha,
            },
        ]
    }
}

/// Any of the three models, for callers that pick one at run time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Model {
    Walk1D(Walk1DModel),
    WalkND(WalkNDModel),
    TwoLevel(TwoLevelModel),
}

impl Model {
    fn inner(&self) -> &dyn WalkModel {
        match self {
            Model::Walk1D(m) => m,
            Model::WalkND(m) => m,
            Model::TwoLevel(m) => m,
        }
    }
}

impl From<Walk1DModel> for Model {
    fn from(m: Walk1DModel) -> Self {
        Model::Walk1D(m)
    }
}

impl From<WalkNDModel> for Model {
    fn from(m: WalkNDModel) -> Self {
        Model::WalkND(m)
    }
}

impl From<TwoLevelModel> for Model {
    fn from(m: TwoLevelModel) -> Self {
        Model::TwoLevel(m)
    }
}

impl WalkModel for Model {
    fn kind(&self) -> ModelKind {
        self.inner().kind()
    }

    fn dimension(&self) -> usize {
        self.inner().dimension()
    }

    fn survival_factor(&self) -> f64 {
        self.inner().survival_factor()
    }

    fn moves(&self) -> Vec<Move> {
        self.inner().moves()
    }
}

pub fn make_walk_1d(p: f64, alpha: f64) -> Result<Walk1DModel> {
    Walk1DModel::new(p, alpha)
}

pub fn make_walk_nd(dim: usize, alpha: f64) -> Result<WalkNDModel> {
    WalkNDModel::new(dim, alpha)
}

pub fn make_two_level(alpha: f64) -> Result<TwoLevelModel> {
    TwoLevelModel::new(alpha)
}

pub fn survival_factor<M: WalkModel + ?Sized>(model: &M) -> f64 {
    model.survival_factor()
}

/// Expected-visit values over lattice states. `None` means undefined.
pub trait VisitFunction {
    fn visits(&self, state: &LatticeState) -> Option<f64>;
}

impl<F> VisitFunction for F
where
    F: Fn(&LatticeState) -> Option<f64>,
{
    fn visits(&self, state: &LatticeState) -> Option<f64> {
        self(state)
    }
}

impl VisitFunction for HashMap<LatticeState, f64> {
    fn visits(&self, state: &LatticeState) -> Option<f64> {
        self.get(state).copied()
    }
}

impl VisitFunction for BTreeMap<LatticeState, f64> {
    fn visits(&self, state: &LatticeState) -> Option<f64> {
        self.get(state).copied()
    }
}

/// Left side minus right side of the model's defining equation
/// `X_s = delta(s, origin) + sum over incoming moves of prob * X_source`.
pub fn recurrence_residual<M, V>(model: &M, visits: &V, state: &LatticeState) -> Result<f64>
where
    M: WalkModel + ?Sized,
    V: VisitFunction + ?Sized,
{
    model.check_state(state)?;
    let lookup = |s: &LatticeState| {
        visits
            .visits(s)
            .ok_or_else(|| Error::Evaluation(format!("visit function undefined at {s}")))
    };
    let delta = if *state == model.origin() { 1.0 } else { 0.0 };
    let mut rhs = delta;
    for mv in model.moves() {
        rhs += mv.prob * lookup(&state.source_of(&mv))?;
    }
    Ok(lookup(state)? - rhs)
}
