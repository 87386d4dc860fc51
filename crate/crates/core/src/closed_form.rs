//! Exact solutions for the 1-D walk and the two-level walk.
//!
//! Both solutions are symmetric combinations of geometric modes, so each
//! value is a sum of `amplitude * root^|n|` terms with sub-unit roots.

use crate::model::{LatticeState, Level, TwoLevelModel, VisitFunction, Walk1DModel, WalkModel};

/// Roots of `q*alpha*xi^2 - xi + p*alpha = 0` and the common amplitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Roots1D {
    /// Larger root, `> 1`. Governs the decay for `n <= 0`.
    pub xi1: f64,
    /// Smaller root, in `(0, 1)`. Governs the decay for `n >= 0`.
    pub xi2: f64,
    /// Amplitude `(1 - 4 p q alpha^2)^(-1/2)`.
    pub c: f64,
}

impl Roots1D {
    /// Closed-form sum of `X_n` over all integers.
    pub fn visit_sum(&self) -> f64 {
        let left = self.xi1.recip();
        self.c * (1.0 + self.xi2 / (1.0 - self.xi2) + left / (1.0 - left))
    }
}

pub fn characteristic_roots_1d(model: &Walk1DModel) -> Roots1D {
    let (p, q, alpha) = (model.p(), model.q(), model.alpha());
    let disc = 1.0 - 4.0 * p * q * alpha * alpha;
    let root = disc.sqrt();
    let xi1 = (1.0 + root) / (2.0 * q * alpha);
    // cancellation-free form of (1 - root) / (2 q alpha)
    let xi2 = 2.0 * p * alpha / (1.0 + root);
    Roots1D {
        xi1,
        xi2,
        c: root.recip(),
    }
}

/// Closed-form solution of the 1-D walk with its roots precomputed.
#[derive(Debug, Clone, Copy)]
pub struct Solution1D {
    model: Walk1DModel,
    roots: Roots1D,
    left_ratio: f64,
}

impl Solution1D {
    pub fn new(model: Walk1DModel) -> Self {
        let roots = characteristic_roots_1d(&model);
        let (p, q, alpha) = (model.p(), model.q(), model.alpha());
        let root = (1.0 - 4.0 * p * q * alpha * alpha).sqrt();
        // 1 / xi1, written like xi2 so that p = q gives identical branches
        let left_ratio = 2.0 * q * alpha / (1.0 + root);
        Self {
            model,
            roots,
            left_ratio,
        }
    }

    pub fn model(&self) -> &Walk1DModel {
        &self.model
    }

    pub fn roots(&self) -> &Roots1D {
        &self.roots
    }

    /// Underflows to zero for very large `|n|`.
    pub fn expected_visits(&self, n: i64) -> f64 {
        let ratio = if n >= 0 {
            self.roots.xi2
        } else {
            self.left_ratio
        };
        self.roots.c * ratio.powf(n.unsigned_abs() as f64)
    }

    pub fn absorption_prob(&self, n: i64) -> f64 {
        self.model.absorption_factor() * self.expected_visits(n)
    }
}

impl VisitFunction for Solution1D {
    fn visits(&self, state: &LatticeState) -> Option<f64> {
        match (state.coords(), state.level()) {
            ([n], None) => Some(self.expected_visits(*n)),
            _ => None,
        }
    }
}

pub fn expected_visits_1d(model: &Walk1DModel, n: i64) -> f64 {
    Solution1D::new(*model).expected_visits(n)
}

pub fn absorption_prob_1d(model: &Walk1DModel, n: i64) -> f64 {
    Solution1D::new(*model).absorption_prob(n)
}

/// Expected lifetime `1 / (1 - beta)` of the geometric absorption clock,
/// which equals the total expected visits over the whole lattice.
pub fn total_expected_visits<M: WalkModel + ?Sized>(model: &M) -> f64 {
    model.absorption_factor().recip()
}

/// Characteristic roots of the two-level quartic and the mode amplitudes.
///
/// The quartic factors into `mu^2 + (1 - 1/alpha) mu + 1` (the mode in which
/// both levels move together) and `mu^2 - (1 + 1/alpha) mu + 1` (the mode in
/// which they move in opposition).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoLevelSpectrum {
    pub mu1: f64,
    pub mu2: f64,
    pub mu3: f64,
    pub mu4: f64,
    pub b: f64,
    pub d: f64,
}

impl TwoLevelSpectrum {
    /// Closed-form sum of `f_n + g_n` over all integers; the `d` modes cancel.
    pub fn visit_sum(&self) -> f64 {
        2.0 * self.b * (1.0 + self.mu2) / (1.0 - self.mu2)
    }

    /// Closed-form sum of the visits on a single level.
    pub fn level_sum(&self, level: Level) -> f64 {
        let even = self.b * (1.0 + self.mu2) / (1.0 - self.mu2);
        let odd = self.d * (1.0 + self.mu4) / (1.0 - self.mu4);
        match level {
            Level::Zero => even + odd,
            Level::One => even - odd,
        }
    }
}

/// Value of the characteristic quartic at `mu`.
pub fn two_level_quartic(alpha: f64, mu: f64) -> f64 {
    let inv = alpha.recip();
    (mu * mu + (1.0 - inv) * mu + 1.0) * (mu * mu - (1.0 + inv) * mu + 1.0)
}

pub fn two_level_spectrum(model: &TwoLevelModel) -> TwoLevelSpectrum {
    let alpha = model.alpha();
    let same = ((1.0 + alpha) * (1.0 - 3.0 * alpha)).sqrt();
    let opposite = ((1.0 - alpha) * (1.0 + 3.0 * alpha)).sqrt();
    let mu1 = (1.0 - alpha + same) / (2.0 * alpha);
    let mu3 = (1.0 + alpha + opposite) / (2.0 * alpha);
    // small roots as reciprocals: each quadratic factor has constant term 1
    let mu2 = 2.0 * alpha / (1.0 - alpha + same);
    let mu4 = 2.0 * alpha / (1.0 + alpha + opposite);
    let b = 0.5 / same;
    let d = 0.5 / opposite;
    assert!(
        b > d && mu2 > mu4,
        "two-level spectrum must keep g_n positive (alpha = {alpha})"
    );
    TwoLevelSpectrum {
        mu1,
        mu2,
        mu3,
        mu4,
        b,
        d,
    }
}

/// Closed-form solution of the two-level walk with its spectrum precomputed.
#[derive(Debug, Clone, Copy)]
pub struct TwoLevelSolution {
    model: TwoLevelModel,
    spectrum: TwoLevelSpectrum,
}

impl TwoLevelSolution {
    pub fn new(model: TwoLevelModel) -> Self {
        Self {
            model,
            spectrum: two_level_spectrum(&model),
        }
    }

    pub fn model(&self) -> &TwoLevelModel {
        &self.model
    }

    pub fn spectrum(&self) -> &TwoLevelSpectrum {
        &self.spectrum
    }

    /// `f_n` on level 0, `g_n` on level 1.
    pub fn expected_visits(&self, level: Level, n: i64) -> f64 {
        let k = n.unsigned_abs() as f64;
        let s = &self.spectrum;
        let even = s.b * s.mu2.powf(k);
        let odd = s.d * s.mu4.powf(k);
        match level {
            Level::Zero => even + odd,
            Level::One => even - odd,
        }
    }

    pub fn absorption_prob(&self, level: Level, n: i64) -> f64 {
        self.model.absorption_factor() * self.expected_visits(level, n)
    }
}

impl VisitFunction for TwoLevelSolution {
    fn visits(&self, state: &LatticeState) -> Option<f64> {
        match (state.coords(), state.level()) {
            ([n], Some(level)) => Some(self.expected_visits(level, *n)),
            _ => None,
        }
    }
}

pub fn expected_visits_two_level(model: &TwoLevelModel, level: Level, n: i64) -> f64 {
    TwoLevelSolution::new(*model).expected_visits(level, n)
}

pub fn absorption_prob_two_level(model: &TwoLevelModel, level: Level, n: i64) -> f64 {
    TwoLevelSolution::new(*model).absorption_prob(level, n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_two_level, make_walk_1d, make_walk_nd, recurrence_residual};
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    /// X_0 as the number of returning paths: sum_k C(2k, k) (p q alpha^2)^k.
    fn origin_series(p: f64, alpha: f64) -> f64 {
        let x = p * (1.0 - p) * alpha * alpha;
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..2000u32 {
            let k = k as f64;
            term *= (2.0 * k) * (2.0 * k - 1.0) / (k * k) * x;
            sum += term;
            if term < 1e-18 {
                break;
            }
        }
        sum
    }

    #[test]
    fn exact_surd_roots() {
        let m = make_walk_1d(0.7, 0.8).unwrap();
        let r = characteristic_roots_1d(&m);
        assert!(close(r.xi1, 3.5, 1e-12), "{}", r.xi1);
        assert!(close(r.xi2, 2.0 / 3.0, 1e-12), "{}", r.xi2);
        assert!(close(r.c, 25.0 / 17.0, 1e-12), "{}", r.c);
    }

    #[test]
    fn symmetric_roots_against_path_series() {
        let m = make_walk_1d(0.5, 0.5).unwrap();
        let r = characteristic_roots_1d(&m);
        assert!(close(r.xi1, 2.0 + 3f64.sqrt(), 1e-12));
        assert!(close(r.xi2, 2.0 - 3f64.sqrt(), 1e-12));
        assert!(close(r.c, 1.1547005383792517, 1e-12));
        assert!(close(r.c, origin_series(0.5, 0.5), 1e-12));
        assert!(close(
            expected_visits_1d(&make_walk_1d(0.3, 0.9).unwrap(), 0),
            origin_series(0.3, 0.9),
            1e-12
        ));
    }

    #[test]
    fn visits_and_absorption_examples() {
        let m = make_walk_1d(0.7, 0.8).unwrap();
        assert!(close(expected_visits_1d(&m, 0), 25.0 / 17.0, 1e-12));
        assert!(close(
            expected_visits_1d(&m, 1),
            25.0 / 17.0 * 2.0 / 3.0,
            1e-12
        ));
        assert!(close(expected_visits_1d(&m, -1), 25.0 / 17.0 / 3.5, 1e-12));
        assert!(close(absorption_prob_1d(&m, 0), 0.2 * 25.0 / 17.0, 1e-12));
        let m = make_walk_1d(0.5, 0.5).unwrap();
        assert!(close(absorption_prob_1d(&m, 0), 0.5773502691896258, 1e-12));
    }

    #[test]
    fn large_index_underflows_to_zero() {
        let m = make_walk_1d(0.5, 0.5).unwrap();
        assert_eq!(expected_visits_1d(&m, 100_000), 0.0);
        assert_eq!(expected_visits_1d(&m, i64::MIN), 0.0);
    }

    #[test]
    fn lifetimes() {
        assert!(close(
            total_expected_visits(&make_walk_1d(0.7, 0.8).unwrap()),
            5.0,
            1e-12
        ));
        assert!(close(
            total_expected_visits(&make_walk_nd(2, 0.2).unwrap()),
            5.0,
            1e-12
        ));
        assert!(close(
            total_expected_visits(&make_two_level(0.2).unwrap()),
            2.5,
            1e-12
        ));
    }

    #[test]
    fn two_level_surds() {
        let m = make_two_level(0.2).unwrap();
        let s = two_level_spectrum(&m);
        let b = 1.0 / (2.0 * 0.48f64.sqrt());
        let d = 1.0 / (2.0 * 1.28f64.sqrt());
        assert!(close(s.b, b, 1e-15));
        assert!(close(s.d, d, 1e-15));
        assert!(close(s.mu2, 2.0 - 3f64.sqrt(), 1e-12));
        assert!(close(s.mu4, 3.0 - 8f64.sqrt(), 1e-12));
        assert!(close(s.mu1 * s.mu2, 1.0, 1e-12));
        assert!(close(s.mu3 * s.mu4, 1.0, 1e-12));
        let sol = TwoLevelSolution::new(m);
        assert!(close(sol.expected_visits(Level::Zero, 0), b + d, 1e-12));
        assert!(close(sol.expected_visits(Level::One, 0), b - d, 1e-12));
        assert!(close(sol.expected_visits(Level::Zero, 0), 1.1636296, 1e-7));
        assert!(close(sol.expected_visits(Level::One, 0), 0.2797461, 1e-7));
        assert!(sol.expected_visits(Level::One, 0) >= 0.2);
        assert!(close(sol.expected_visits(Level::Zero, 1), 0.2692009, 1e-7));
        // f_1 from the n = 0 equation: f_0 = 1 + alpha (2 f_1 + g_0)
        let f1 = ((b + d - 1.0) / 0.2 - (b - d)) / 2.0;
        assert!(close(sol.expected_visits(Level::Zero, 1), f1, 1e-12));
        assert_eq!(
            sol.expected_visits(Level::Zero, 1),
            sol.expected_visits(Level::Zero, -1)
        );
        assert!(close(
            absorption_prob_two_level(&m, Level::Zero, 0),
            0.4654518,
            1e-7
        ));
        assert!(close(
            absorption_prob_two_level(&m, Level::One, 0),
            0.1118985,
            1e-7
        ));
        assert!(close(s.visit_sum(), 2.5, 1e-12));
        assert!(close(
            s.level_sum(Level::Zero) + s.level_sum(Level::One),
            2.5,
            1e-12
        ));
    }

    proptest! {
        #[test]
        fn roots_satisfy_vieta(p in 0.001f64..0.999, alpha in 0.001f64..0.999) {
            let m = make_walk_1d(p, alpha).unwrap();
            let r = characteristic_roots_1d(&m);
            prop_assert!(r.xi1 > 1.0 && r.xi2 > 0.0 && r.xi2 < 1.0 && r.c > 0.0);
            let q = m.q();
            // relative: p/q and 1/(q alpha) can be large
            prop_assert!((r.xi1 * r.xi2 - p / q).abs() <= 1e-12 * (p / q).max(1.0));
            let sum = 1.0 / (q * alpha);
            prop_assert!((r.xi1 + r.xi2 - sum).abs() <= 1e-12 * sum.max(1.0));
        }

        #[test]
        fn one_d_mass_conservation(p in 0.01f64..0.99, alpha in 0.01f64..0.95) {
            let m = make_walk_1d(p, alpha).unwrap();
            let r = characteristic_roots_1d(&m);
            prop_assert!((r.visit_sum() - 1.0 / (1.0 - alpha)).abs() < 1e-10);
        }

        #[test]
        fn one_d_residual_vanishes(p in 0.01f64..0.99, alpha in 0.01f64..0.99, n in -50i64..=50) {
            let m = make_walk_1d(p, alpha).unwrap();
            let sol = Solution1D::new(m);
            let r = recurrence_residual(&m, &sol, &LatticeState::point(n)).unwrap();
            prop_assert!(r.abs() < 1e-12, "residual {r}");
        }

        #[test]
        fn one_d_monotone_decay(p in 0.01f64..0.99, alpha in 0.01f64..0.99, n in 0i64..40) {
            let sol = Solution1D::new(make_walk_1d(p, alpha).unwrap());
            let (a, b) = (sol.expected_visits(n), sol.expected_visits(n + 1));
            prop_assert!(a > b || b == 0.0);
            let (a, b) = (sol.expected_visits(-n), sol.expected_visits(-n - 1));
            prop_assert!(a > b || b == 0.0);
        }

        #[test]
        fn symmetric_walk_is_even(alpha in 0.01f64..0.99, n in 0i64..200) {
            let sol = Solution1D::new(make_walk_1d(0.5, alpha).unwrap());
            prop_assert_eq!(sol.expected_visits(n), sol.expected_visits(-n));
        }

        #[test]
        fn two_level_spectrum_invariants(f in 0.001f64..0.999) {
            let alpha = f / 3.0;
            let s = two_level_spectrum(&make_two_level(alpha).unwrap());
            prop_assert!(s.mu1 > 1.0 && s.mu3 > 1.0);
            prop_assert!(s.mu2 > 0.0 && s.mu2 < 1.0 && s.mu4 > 0.0 && s.mu4 < 1.0);
            prop_assert!((s.mu1 * s.mu2 - 1.0).abs() < 1e-12);
            prop_assert!((s.mu3 * s.mu4 - 1.0).abs() < 1e-12);
            for mu in [s.mu1, s.mu2, s.mu3, s.mu4] {
                // relative to the size of the quartic's terms at mu
                let scale = (mu * mu + mu / alpha + 1.0).powi(2);
                prop_assert!(two_level_quartic(alpha, mu).abs() < 1e-10 * scale);
            }
            prop_assert!(s.b > 0.0 && s.d > 0.0);
        }

        #[test]
        fn two_level_mass_conservation(f in 0.01f64..0.95) {
            let alpha = f / 3.0;
            let s = two_level_spectrum(&make_two_level(alpha).unwrap());
            prop_assert!((s.visit_sum() - 1.0 / (1.0 - 3.0 * alpha)).abs() < 1e-10);
        }

        #[test]
        fn two_level_residual_and_parity(f in 0.01f64..0.99, n in -50i64..=50, lvl in 0usize..2) {
            let m = make_two_level(f / 3.0).unwrap();
            let sol = TwoLevelSolution::new(m);
            let level = Level::from_index(lvl).unwrap();
            let state = LatticeState::on_level(vec![n], level);
            let r = recurrence_residual(&m, &sol, &state).unwrap();
            prop_assert!(r.abs() < 1e-12, "residual {r}");
            prop_assert_eq!(sol.expected_visits(level, n), sol.expected_visits(level, -n));
            prop_assert!(sol.expected_visits(Level::One, n) >= 0.0);
        }
    }
}
