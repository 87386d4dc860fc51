use crate::error::{domain, Error, Result};
use crate::model::{LatticeState, Level, WalkModel};

/// Largest number of sites a dense window may hold.
const MAX_SITES: usize = 1 << 27;

/// Dense indexing of the sup-norm ball `|c_i| <= radius`, on one or both
/// levels. Index order equals the `LatticeState` ordering.
#[derive(Debug, Clone)]
pub(crate) struct BallGrid {
    dim: usize,
    radius: i64,
    side: usize,
    per_level: usize,
    levels: usize,
}

impl BallGrid {
    pub(crate) fn new<M: WalkModel + ?Sized>(model: &M, radius: usize) -> Result<Self> {
        let dim = model.dimension();
        let side = radius
            .checked_mul(2)
            .and_then(|s| s.checked_add(1))
            .ok_or_else(|| Error::Domain(format!("radius {radius} too large")))?;
        let levels = if model.has_levels() { 2 } else { 1 };
        let per_level = (0..dim)
            .try_fold(1usize, |acc, _| acc.checked_mul(side))
            .filter(|n| n.saturating_mul(levels) <= MAX_SITES);
        let Some(per_level) = per_level else {
            return Err(Error::Capability(format!(
                "window of radius {radius} in {dim} dimensions exceeds {MAX_SITES} sites"
            )));
        };
        if radius > i64::MAX as usize / 4 {
            return domain(format!("radius {radius} too large"));
        }
        Ok(Self {
            dim,
            radius: radius as i64,
            side,
            per_level,
            levels,
        })
    }

    pub(crate) fn len(&self) -> usize {
        self.per_level * self.levels
    }

    pub(crate) fn radius(&self) -> usize {
        self.radius as usize
    }

    /// Whether `state` has this grid's coordinate count and level layout.
    pub(crate) fn fits_shape(&self, state: &LatticeState) -> bool {
        state.coords().len() == self.dim && state.level().is_some() == (self.levels == 2)
    }

    pub(crate) fn index_of(&self, state: &LatticeState) -> Option<usize> {
        let coords = state.coords();
        if coords.len() != self.dim {
            return None;
        }
        let level = match (state.level(), self.levels) {
            (None, 1) => 0,
            (Some(l), 2) => l.index(),
            _ => return None,
        };
        self.coord_index(coords).map(|i| level * self.per_level + i)
    }

    pub(crate) fn coord_index(&self, coords: &[i64]) -> Option<usize> {
        let mut idx = 0usize;
        for &c in coords {
            if c.abs() > self.radius {
                return None;
            }
            idx = idx * self.side + (c + self.radius) as usize;
        }
        Some(idx)
    }

    pub(crate) fn state_at(&self, index: usize) -> LatticeState {
        let level = index / self.per_level;
        let mut rest = index % self.per_level;
        let mut coords = vec![0i64; self.dim];
        for c in coords.iter_mut().rev() {
            *c = (rest % self.side) as i64 - self.radius;
            rest /= self.side;
        }
        if self.levels == 2 {
            let level = if level == 0 { Level::Zero } else { Level::One };
            LatticeState::on_level(coords, level)
        } else {
            LatticeState::new(coords)
        }
    }

    #[cfg(test)]
    pub(crate) fn states(&self) -> impl Iterator<Item = LatticeState> + '_ {
        (0..self.len()).map(|i| self.state_at(i))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_two_level, make_walk_nd};

    #[test]
    fn index_order_matches_state_order() {
        let m = make_walk_nd(3, 0.1).unwrap();
        let g = BallGrid::new(&m, 2).unwrap();
        assert_eq!(g.len(), 125);
        let states: Vec<_> = g.states().collect();
        assert!(states.windows(2).all(|w| w[0] < w[1]));
        for (i, s) in states.iter().enumerate() {
            assert_eq!(g.index_of(s), Some(i));
        }
        assert_eq!(g.index_of(&LatticeState::new(vec![0, 3, 0])), None);
    }

    #[test]
    fn two_level_grid_is_level_major() {
        let m = make_two_level(0.2).unwrap();
        let g = BallGrid::new(&m, 3).unwrap();
        assert_eq!(g.len(), 14);
        assert_eq!(g.state_at(0), LatticeState::on_level(vec![-3], Level::Zero));
        assert_eq!(g.state_at(7), LatticeState::on_level(vec![-3], Level::One));
        assert_eq!(g.index_of(&LatticeState::point(0)), None);
    }

    #[test]
    fn oversized_window_rejected() {
        let m = make_walk_nd(4, 0.05).unwrap();
        assert!(matches!(BallGrid::new(&m, 1000), Err(Error::Capability(_))));
    }
}
