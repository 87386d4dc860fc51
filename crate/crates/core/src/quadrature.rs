//! Expected visits of the n-dimensional walk from its integral representation.
//!
//! For a site `u`, the first `n - 1` coordinates enter through `cos(u_i w_i)`
//! and are integrated over `[0, pi]`. The last coordinate is handled in closed
//! form through a hyperbolic frequency `w_n` fixed by
//!
//! ```text
//! sum_{k<n} cos(w_k) + cosh(w_n) = 1 / (2 alpha)
//! ```
//!
//! giving
//!
//! ```text
//! X_u = 1 / (2 alpha pi^(n-1)) * Int prod_i cos(u_i w_i) exp(-|u_n| w_n) / sinh(w_n)
//! ```
//!
//! The integrand is analytic on the closed cube (the right side of the
//! constraint exceeds 1 everywhere), so a tensor-product Gauss-Legendre rule
//! converges spectrally.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{domain, Error, Result};
use crate::model::{LatticeState, WalkModel, WalkNDModel};

/// Largest dimension served by the tensor-product rule.
pub const MAX_DIMENSION: usize = 4;

/// Tensor sizes above this are evaluated in parallel.
const PARALLEL_THRESHOLD: usize = 1 << 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuadratureConfig {
    pub nodes_per_axis: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self { nodes_per_axis: 64 }
    }
}

impl QuadratureConfig {
    pub fn new(nodes_per_axis: usize) -> Result<Self> {
        if nodes_per_axis < 1 {
            return domain("nodes_per_axis must be at least 1");
        }
        Ok(Self { nodes_per_axis })
    }

    /// Default node count for a given dimension.
    pub fn for_dimension(dim: usize) -> Self {
        let nodes_per_axis = match dim {
            0..=2 => 64,
            3 => 48,
            _ => 40,
        };
        Self { nodes_per_axis }
    }

    /// Largest trigonometric coordinate `|u_i|` this rule resolves.
    pub fn max_resolved_coordinate(&self) -> i64 {
        (self.nodes_per_axis as i64 - 16).div_euclid(8)
    }
}

/// Gauss-Legendre nodes and weights mapped onto `[0, pi]`, nodes ascending.
pub fn gauss_legendre_rule(k: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if k < 1 {
        return domain("Gauss-Legendre rule needs at least one node");
    }
    let mut nodes = vec![0.0; k];
    let mut weights = vec![0.0; k];
    let half = PI / 2.0;
    // roots come in +/- pairs; solve for the positive half and mirror
    for i in 0..k.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (k as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(k, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() <= 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(k, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        let (lo, hi) = (i, k - 1 - i);
        if lo == hi {
            // odd rule: centre node is exactly zero
            nodes[lo] = half;
            weights[lo] = w * half;
        } else {
            nodes[hi] = half * (1.0 + x);
            nodes[lo] = half * (1.0 - x);
            weights[hi] = w * half;
            weights[lo] = w * half;
        }
    }
    Ok((nodes, weights))
}

/// `P_k(x)` and `P_k'(x)` from the three-term recurrence.
fn legendre_with_derivative(k: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if k == 0 {
        return (1.0, 0.0);
    }
    for j in 2..=k {
        let j = j as f64;
        let p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
        p0 = p1;
        p1 = p2;
    }
    let k = k as f64;
    let dp = k * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Fixed-order pairwise summation, so results do not depend on scheduling.
pub(crate) fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= 16 {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// A point of the frequency domain satisfying the cosh constraint.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyPoint {
    omegas: Vec<f64>,
    omega_last: f64,
}

impl FrequencyPoint {
    pub fn new(model: &WalkNDModel, omegas: Vec<f64>) -> Result<Self> {
        let omega_last = omega_last(model, &omegas)?;
        Ok(Self { omegas, omega_last })
    }

    pub fn omegas(&self) -> &[f64] {
        &self.omegas
    }

    pub fn omega_last(&self) -> f64 {
        self.omega_last
    }
}

/// Right side of the cosh constraint, `1/(2 alpha) - sum cos(w_k)`.
fn cosh_target(model: &WalkNDModel, omegas: &[f64]) -> Result<f64> {
    if omegas.len() + 1 != model.dim() {
        return domain(format!(
            "expected {} trigonometric frequencies, got {}",
            model.dim() - 1,
            omegas.len()
        ));
    }
    if let Some(w) = omegas.iter().find(|w| !(0.0..=PI).contains(*w)) {
        return domain(format!("frequency {w} outside [0, pi]"));
    }
    Ok(0.5 / model.alpha() - omegas.iter().map(|w| w.cos()).sum::<f64>())
}

/// Hyperbolic frequency solving the cosh constraint. Always strictly positive.
pub fn omega_last(model: &WalkNDModel, omegas: &[f64]) -> Result<f64> {
    Ok(cosh_target(model, omegas)?.acosh())
}

/// Slowest spatial decay rate along an axis, reached at zero trigonometric
/// frequency: `arccosh(1/(2 alpha) - (n - 1))`.
pub fn axis_decay_rate(model: &WalkNDModel) -> f64 {
    (0.5 / model.alpha() - (model.dim() - 1) as f64).acosh()
}

fn check_site(model: &WalkNDModel, u: &LatticeState) -> Result<()> {
    model.check_state(u)
}

/// Integrand at one frequency point, without the `1/(2 alpha pi^(n-1))` prefactor.
pub fn integrand(model: &WalkNDModel, u: &LatticeState, omegas: &[f64]) -> Result<f64> {
    check_site(model, u)?;
    let x = cosh_target(model, omegas)?;
    let w_last = x.acosh();
    let sinh = ((x - 1.0) * (x + 1.0)).sqrt();
    let (trig, last) = u.coords().split_at(model.dim() - 1);
    let cos_product: f64 = trig
        .iter()
        .zip(omegas)
        .map(|(&ui, &w)| (ui as f64 * w).cos())
        .product();
    Ok(cos_product * (-(last[0].unsigned_abs() as f64) * w_last).exp() / sinh)
}

/// Tensor-product quadrature of the integral representation with all
/// node-dependent quantities precomputed, for evaluating many sites.
#[derive(Debug, Clone)]
pub struct GreenQuadrature {
    model: WalkNDModel,
    config: QuadratureConfig,
    nodes: Vec<f64>,
    /// Product weight of each tensor node, including the prefactor.
    weights: Vec<f64>,
    omega_last: Vec<f64>,
    inv_sinh: Vec<f64>,
}

impl GreenQuadrature {
    pub fn new(model: WalkNDModel, config: QuadratureConfig) -> Result<Self> {
        let dim = model.dim();
        if dim > MAX_DIMENSION {
            return Err(Error::Capability(format!(
                "quadrature supports dimensions up to {MAX_DIMENSION}, got {dim}"
            )));
        }
        let config = QuadratureConfig::new(config.nodes_per_axis)?;
        let k = config.nodes_per_axis;
        let (nodes, axis_weights) = gauss_legendre_rule(k)?;
        let axes = dim - 1;
        let total = k.pow(axes as u32);
        let prefactor = 1.0 / (2.0 * model.alpha() * PI.powi(axes as i32));
        let cos_nodes: Vec<f64> = nodes.iter().map(|w| w.cos()).collect();
        let target = 0.5 / model.alpha();

        let mut weights = Vec::with_capacity(total);
        let mut omega_last = Vec::with_capacity(total);
        let mut inv_sinh = Vec::with_capacity(total);
        for flat in 0..total {
            let mut rest = flat;
            let mut w = prefactor;
            let mut cos_sum = 0.0;
            for _ in 0..axes {
                let j = rest % k;
                rest /= k;
                w *= axis_weights[j];
                cos_sum += cos_nodes[j];
            }
            let x = target - cos_sum;
            weights.push(w);
            omega_last.push(x.acosh());
            inv_sinh.push(1.0 / ((x - 1.0) * (x + 1.0)).sqrt());
        }
        Ok(Self {
            model,
            config,
            nodes,
            weights,
            omega_last,
            inv_sinh,
        })
    }

    pub fn model(&self) -> &WalkNDModel {
        &self.model
    }

    pub fn config(&self) -> &QuadratureConfig {
        &self.config
    }

    /// Rejects sites whose oscillation this rule cannot resolve.
    pub fn check_resolution(&self, u: &LatticeState) -> Result<()> {
        check_site(&self.model, u)?;
        let dim = self.model.dim();
        let widest = u.coords()[..dim - 1]
            .iter()
            .map(|c| c.unsigned_abs())
            .max()
            .unwrap_or(0);
        let needed = 8 * widest as u128 + 16;
        if (self.config.nodes_per_axis as u128) < needed {
            return Err(Error::Accuracy(format!(
                "site {u} needs at least {needed} nodes per axis, have {}",
                self.config.nodes_per_axis
            )));
        }
        Ok(())
    }

    pub fn expected_visits(&self, u: &LatticeState) -> Result<f64> {
        self.check_resolution(u)?;
        let dim = self.model.dim();
        let k = self.config.nodes_per_axis;
        let axes = dim - 1;
        let coords = u.coords();
        let cos_tables: Vec<Vec<f64>> = coords[..axes]
            .iter()
            .map(|&ui| self.nodes.iter().map(|w| (ui as f64 * w).cos()).collect())
            .collect();
        let depth = coords[axes].unsigned_abs() as f64;

        let term = |flat: usize| {
            let mut rest = flat;
            let mut value = self.weights[flat] * self.inv_sinh[flat];
            for table in &cos_tables {
                value *= table[rest % k];
                rest /= k;
            }
            if depth > 0.0 {
                value *= (-depth * self.omega_last[flat]).exp();
            }
            value
        };
        let total = self.weights.len();
        let terms: Vec<f64> = if total >= PARALLEL_THRESHOLD {
            (0..total).into_par_iter().map(term).collect()
        } else {
            (0..total).map(term).collect()
        };
        Ok(pairwise_sum(&terms))
    }

    pub fn absorption_prob(&self, u: &LatticeState) -> Result<f64> {
        Ok(self.model.absorption_factor() * self.expected_visits(u)?)
    }
}

pub fn expected_visits_nd(
    model: &WalkNDModel,
    u: &LatticeState,
    config: QuadratureConfig,
) -> Result<f64> {
    check_site(model, u)?;
    let quad = GreenQuadrature::new(*model, config)?;
    quad.expected_visits(u)
}

pub fn absorption_prob_nd(
    model: &WalkNDModel,
    u: &LatticeState,
    config: QuadratureConfig,
) -> Result<f64> {
    Ok(model.absorption_factor() * expected_visits_nd(model, u, config)?)
}

/// Sum of `X_u` over the whole lattice from the integral representation.
///
/// Summing `cos(u_i w_i)` over all integers collapses each trigonometric
/// integral onto `w_i = 0`, leaving a two-sided geometric series in the last
/// coordinate: `(1/(2 alpha)) * coth(w/2) / sinh(w)` at `w = omega_last(0)`.
pub fn spectral_visit_sum(model: &WalkNDModel) -> f64 {
    let w = axis_decay_rate(model);
    let tail = (1.0 + (-w).exp()) / -(-w).exp_m1();
    tail / (2.0 * model.alpha() * w.sinh())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::make_walk_nd;
    use proptest::prelude::*;

    fn site(coords: &[i64]) -> LatticeState {
        LatticeState::new(coords.to_vec())
    }

    #[test]
    fn low_order_rules() {
        let (x, w) = gauss_legendre_rule(1).unwrap();
        assert!((x[0] - PI / 2.0).abs() < 1e-15);
        assert!((w[0] - PI).abs() < 1e-15);
        let (x, w) = gauss_legendre_rule(2).unwrap();
        let s = 1.0 / 3f64.sqrt();
        assert!((x[0] - PI / 2.0 * (1.0 - s)).abs() < 1e-15);
        assert!((x[1] - PI / 2.0 * (1.0 + s)).abs() < 1e-15);
        assert!((w[0] - PI / 2.0).abs() < 1e-15 && (w[1] - PI / 2.0).abs() < 1e-15);
        assert!(matches!(gauss_legendre_rule(0), Err(Error::Domain(_))));
    }

    #[test]
    fn rules_integrate_polynomials_exactly() {
        for k in [1usize, 2, 3, 5, 8, 17, 64, 200] {
            let (x, w) = gauss_legendre_rule(k).unwrap();
            assert!((w.iter().sum::<f64>() - PI).abs() < 1e-12, "k={k}");
            assert!(x.windows(2).all(|p| p[0] < p[1]));
            // monomial of degree 2k-1 in (w - pi/2) / (pi/2), capped for conditioning
            let deg = (2 * k - 1).min(21) as i32;
            let approx: f64 = x
                .iter()
                .zip(&w)
                .map(|(xi, wi)| wi * (2.0 * xi / PI).powi(deg))
                .sum();
            let exact = PI / 2.0 * 2f64.powi(deg + 1) / (deg + 1) as f64;
            assert!(
                (approx - exact).abs() < 1e-12 * exact,
                "k={k} {approx} {exact}"
            );
            if k >= 2 {
                let c: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.cos()).sum();
                assert!(c.abs() < 1e-12, "k={k} {c}");
            }
        }
    }

    #[test]
    fn omega_last_examples() {
        let m = make_walk_nd(2, 0.2).unwrap();
        let w = omega_last(&m, &[PI / 2.0]).unwrap();
        assert!((w - (2.5 + 5.25f64.sqrt()).ln()).abs() < 1e-12);
        assert!((w - 1.5667992).abs() < 1e-7);
        let w0 = omega_last(&m, &[0.0]).unwrap();
        assert!((w0 - (1.5 + 1.25f64.sqrt()).ln()).abs() < 1e-12);
        let wpi = omega_last(&m, &[PI]).unwrap();
        assert!((wpi - 2.0 * w0).abs() < 1e-12);
        assert!(matches!(omega_last(&m, &[-0.1]), Err(Error::Domain(_))));
        assert!(matches!(omega_last(&m, &[3.2]), Err(Error::Domain(_))));
        assert!(matches!(omega_last(&m, &[0.1, 0.2]), Err(Error::Domain(_))));
    }

    #[test]
    fn integrand_examples() {
        let m = make_walk_nd(2, 0.2).unwrap();
        let v = integrand(&m, &site(&[0, 0]), &[PI / 2.0]).unwrap();
        assert!((v - 1.0 / 5.25f64.sqrt()).abs() < 1e-12);
        let v = integrand(&m, &site(&[1, 0]), &[PI / 2.0]).unwrap();
        assert!(v.abs() < 1e-15);
        let v = integrand(&m, &site(&[0, 1]), &[0.0]).unwrap();
        let expected = 2.0 / (3.0 + 5f64.sqrt()) / 1.25f64.sqrt();
        assert!((v - expected).abs() < 1e-12);
        assert!((v - 0.3416408).abs() < 1e-7);
    }

    #[test]
    fn origin_value_two_dimensions() {
        let m = make_walk_nd(2, 0.2).unwrap();
        let x = expected_visits_nd(&m, &site(&[0, 0]), QuadratureConfig::default()).unwrap();
        assert!((x - 1.2702).abs() < 1e-4, "{x}");
        let a = absorption_prob_nd(&m, &site(&[0, 0]), QuadratureConfig::default()).unwrap();
        assert!((a - 0.2 * x).abs() < 1e-15);
    }

    #[test]
    fn axis_values_agree_across_roles() {
        let m = make_walk_nd(2, 0.2).unwrap();
        let q = GreenQuadrature::new(m, QuadratureConfig::default()).unwrap();
        let reference = q.expected_visits(&site(&[1, 0])).unwrap();
        for u in [[0, 1], [-1, 0], [0, -1]] {
            let v = q.expected_visits(&site(&u)).unwrap();
            assert!((v - reference).abs() < 1e-12, "{u:?}: {v} vs {reference}");
        }
    }

    #[test]
    fn capability_and_accuracy_limits() {
        let m = make_walk_nd(5, 0.05).unwrap();
        let err = expected_visits_nd(&m, &site(&[0; 5]), QuadratureConfig::default());
        assert!(matches!(err, Err(Error::Capability(_))));

        let m = make_walk_nd(2, 0.2).unwrap();
        let cfg = QuadratureConfig { nodes_per_axis: 32 };
        assert!(expected_visits_nd(&m, &site(&[2, 100]), cfg).is_ok());
        let err = expected_visits_nd(&m, &site(&[3, 0]), cfg);
        assert!(matches!(err, Err(Error::Accuracy(_))));
        assert_eq!(cfg.max_resolved_coordinate(), 2);

        let err = expected_visits_nd(&m, &site(&[0, 0, 0]), QuadratureConfig::default());
        assert!(matches!(err, Err(Error::Domain(_))));
        let err = expected_visits_nd(&m, &site(&[0, 0]), QuadratureConfig { nodes_per_axis: 0 });
        assert!(matches!(err, Err(Error::Domain(_))));
    }

    #[test]
    fn spectral_sum_matches_lifetime() {
        for (n, a) in [(2, 0.2), (3, 0.1), (4, 0.05)] {
            let m = make_walk_nd(n, a).unwrap();
            let total = 1.0 / (1.0 - 2.0 * n as f64 * a);
            assert!((spectral_visit_sum(&m) - total).abs() < 1e-12);
        }
    }

    #[test]
    fn pairwise_sum_matches_plain_sum() {
        let v: Vec<f64> = (0..1000).map(|i| 1.0 / (1.0 + i as f64)).collect();
        let plain: f64 = v.iter().sum();
        assert!((pairwise_sum(&v) - plain).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn constraint_residual(
            n in 2usize..=4,
            f in 0.01f64..0.99,
            raw in proptest::collection::vec(0.0f64..=PI, 3),
        ) {
            let m = make_walk_nd(n, f / (2.0 * n as f64)).unwrap();
            let omegas = &raw[..n - 1];
            let p = FrequencyPoint::new(&m, omegas.to_vec()).unwrap();
            let residual = p.omega_last().cosh() + omegas.iter().map(|w| w.cos()).sum::<f64>()
                - 0.5 / m.alpha();
            prop_assert!(residual.abs() < 1e-12 * (0.5 / m.alpha()));
            prop_assert!(p.omega_last() >= axis_decay_rate(&m) - 1e-15);
            prop_assert!(p.omega_last() > 0.0);
        }
    }
}
