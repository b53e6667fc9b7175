//! Closed-form limiting kernels and Gram-matrix assembly.
//!
//! Three kernel families are implemented:
//!
//! * [`tntk_limit`] — the limiting tangent kernel of an infinite soft-tree
//!   ensemble of depth `d` with split hardness `alpha`,
//!
//!   `Theta(x_i, x_j) = 2^d d S T^(d-1) Tdot + (2T)^d`
//!
//!   where `S = x_i . x_j`, `T` is the expected product of the two
//!   decision-function outputs under a standard-normal weight vector
//!   ([`decision_pair_expect`]) and `Tdot` the expected product of their
//!   slopes ([`decision_slope_pair_expect`]). The first term collects the
//!   contribution of the internal split weights, the second that of the
//!   leaves. Note the depth enters only through exponents: the cost of one
//!   kernel evaluation does not grow with `d`.
//!
//! * [`mlp_ntk`] — the limiting NTK of an `L`-hidden-layer perceptron,
//!   computed by the standard layer recursion; its cost is linear in `L`.
//!
//! * [`rbf`] — the Gaussian kernel baseline.

use alloc::vec;
use alloc::vec::Vec;

use crate::dataset::InputMatrix;
use crate::error::{Error, Result};
use crate::linalg::SymmetricMatrix;

/// Activation function of the MLP whose limiting NTK is being computed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Activation {
    /// The soft-split function `0.5 erf(alpha z) + 0.5`; its pair
    /// expectations are shared with the tree kernel.
    ScaledErf { alpha: f64 },
    Relu,
}

/// Tagged choice of kernel family.
#[derive(Debug, Clone, PartialEq)]
pub enum KernelSpec {
    Tntk { depth: usize, alpha: f64 },
    MlpNtk { hidden_layers: usize, activation: Activation },
    Rbf { gamma: f64 },
}

impl KernelSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            KernelSpec::Tntk { depth, alpha } => {
                if depth < 1 {
                    return Err(Error::InvalidSpec("tree depth must be >= 1"));
                }
                if !(alpha > 0.0 && alpha.is_finite()) {
                    return Err(Error::InvalidSpec("alpha must be positive and finite"));
                }
            }
            KernelSpec::MlpNtk { hidden_layers, activation } => {
                if hidden_layers < 1 {
                    return Err(Error::InvalidSpec("hidden layer count must be >= 1"));
                }
                if let Activation::ScaledErf { alpha } = activation {
                    if !(alpha > 0.0 && alpha.is_finite()) {
                        return Err(Error::InvalidSpec("alpha must be positive and finite"));
                    }
                }
            }
            KernelSpec::Rbf { gamma } => {
                if !(gamma > 0.0 && gamma.is_finite()) {
                    return Err(Error::InvalidSpec("gamma must be positive and finite"));
                }
            }
        }
        Ok(())
    }

    /// Pairwise kernel value for two feature vectors.
    pub fn eval(&self, xi: &[f64], xj: &[f64]) -> f64 {
        match *self {
            KernelSpec::Tntk { depth, alpha } => tntk_limit(xi, xj, depth, alpha),
            KernelSpec::MlpNtk { hidden_layers, activation } => {
                mlp_ntk(xi, xj, hidden_layers, activation)
            }
            KernelSpec::Rbf { gamma } => rbf(xi, xj, gamma),
        }
    }
}

/// Where a Gram matrix came from.
#[derive(Debug, Clone, PartialEq)]
pub enum Provenance {
    /// Closed-form limiting kernel.
    Limiting,
    /// Empirical tangent kernel of a finite ensemble.
    Empirical { trees: usize, seed: u64, step: usize },
}

/// Symmetric kernel matrix with its generating spec and provenance.
#[derive(Debug, Clone)]
pub struct GramMatrix {
    pub matrix: SymmetricMatrix,
    pub spec: KernelSpec,
    pub provenance: Provenance,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn clamp_unit(x: f64) -> f64 {
    x.clamp(-1.0, 1.0)
}

/// Expected product of the two decision-function outputs,
/// `E[sigma(u.x_i) sigma(u.x_j)]` for a standard-normal `u`:
///
/// `(1/2pi) asin(a^2 S_ij / sqrt((a^2 S_ii + 1/2)(a^2 S_jj + 1/2))) + 1/4`.
///
/// The arcsine argument is clamped to [-1, 1]: Cauchy-Schwarz guarantees
/// validity analytically, but the floating-point ratio can exceed 1 by
/// ~1e-16.
pub fn decision_pair_expect(dot_ij: f64, dot_ii: f64, dot_jj: f64, alpha: f64) -> f64 {
    let a2 = alpha * alpha;
    let denominator = libm::sqrt((a2 * dot_ii + 0.5) * (a2 * dot_jj + 0.5));
    let arg = clamp_unit(a2 * dot_ij / denominator);
    libm::asin(arg) / (2.0 * core::f64::consts::PI) + 0.25
}

/// Expected product of the two decision-function slopes,
/// `E[sigma'(u.x_i) sigma'(u.x_j)]`:
///
/// `(a^2/pi) / sqrt((1 + 2a^2 S_ii)(1 + 2a^2 S_jj) - 4a^4 S_ij^2)`.
///
/// The radicand is non-negative by Cauchy-Schwarz; it is floored at 1e-15
/// to absorb rounding.
pub fn decision_slope_pair_expect(dot_ij: f64, dot_ii: f64, dot_jj: f64, alpha: f64) -> f64 {
    let a2 = alpha * alpha;
    let radicand =
        ((1.0 + 2.0 * a2 * dot_ii) * (1.0 + 2.0 * a2 * dot_jj) - 4.0 * a2 * a2 * dot_ij * dot_ij)
            .max(1e-15);
    a2 / core::f64::consts::PI / libm::sqrt(radicand)
}

/// `base^exponent` for `base in [0, 1]` and `exponent >= 1` via exp/ln.
/// libm's pow shortcuts small integer exponents, which would make
/// shallow-depth kernels measurably faster and break the flat
/// time-vs-depth cost profile this kernel is supposed to have; the
/// explicit exp/ln route costs the same for every exponent. Flooring the
/// base at the smallest positive double maps `0^e` to a subnormal-or-zero
/// result instead of a NaN from `e * ln(0)`.
#[inline]
fn pow_uniform(base: f64, exponent: f64) -> f64 {
    libm::exp(exponent * libm::log(base.max(f64::MIN_POSITIVE)))
}

/// Limiting tangent kernel of an infinite soft-tree ensemble, from the
/// three input inner products.
pub fn tntk_limit_from_products(
    dot_ij: f64,
    dot_ii: f64,
    dot_jj: f64,
    depth: usize,
    alpha: f64,
) -> f64 {
    let t = decision_pair_expect(dot_ij, dot_ii, dot_jj, alpha);
    let t_dot = decision_slope_pair_expect(dot_ij, dot_ii, dot_jj, alpha);
    let d = depth as f64;
    // t^(d-1) evaluated as t^d / t so both exponentiations see an
    // exponent >= 1 and exp never takes its near-zero-argument shortcut
    // only at depth 1 (the guarded base makes the d = 1, t = 0 corner
    // come out as MIN / MIN = 1, i.e. t^0).
    let t_floor = t.max(f64::MIN_POSITIVE);
    let t_pow = pow_uniform(t_floor, d) / t_floor;
    let inner_nodes = libm::exp2(d) * d * dot_ij * t_pow * t_dot;
    let leaves = pow_uniform(2.0 * t, d);
    inner_nodes + leaves
}

/// Limiting tangent kernel for two feature vectors.
pub fn tntk_limit(xi: &[f64], xj: &[f64], depth: usize, alpha: f64) -> f64 {
    tntk_limit_from_products(dot(xi, xj), dot(xi, xi), dot(xj, xj), depth, alpha)
}

/// [`tntk_limit`] specialized to unit-norm inputs with inner product `rho`.
pub fn tntk_limit_unit(rho: f64, depth: usize, alpha: f64) -> f64 {
    tntk_limit_from_products(rho, 1.0, 1.0, depth, alpha)
}

/// Limiting NTK of an `L`-hidden-layer MLP via the layer recursion: the
/// input covariance is pushed through the activation's pair expectations
/// layer by layer and the tangent kernel accumulates the slope products.
pub fn mlp_ntk(xi: &[f64], xj: &[f64], hidden_layers: usize, activation: Activation) -> f64 {
    mlp_ntk_from_products(dot(xi, xj), dot(xi, xi), dot(xj, xj), hidden_layers, activation)
}

/// [`mlp_ntk`] from the three input inner products.
pub fn mlp_ntk_from_products(
    dot_ij: f64,
    dot_ii: f64,
    dot_jj: f64,
    hidden_layers: usize,
    activation: Activation,
) -> f64 {
    let layers = hidden_layers;
    // sig[h] for h = 0..=L; slope expectations for h = 1..=L (the output
    // layer contributes a factor of one).
    let mut sig_ij = vec![0.0; layers + 1];
    let mut sig_ii = vec![0.0; layers + 1];
    let mut sig_jj = vec![0.0; layers + 1];
    let mut sig_dot = vec![0.0; layers + 1];
    sig_ij[0] = dot_ij;
    sig_ii[0] = dot_ii;
    sig_jj[0] = dot_jj;
    for h in 1..=layers {
        let (ij, ii, jj, sdot) = match activation {
            Activation::ScaledErf { alpha } => (
                decision_pair_expect(sig_ij[h - 1], sig_ii[h - 1], sig_jj[h - 1], alpha),
                decision_pair_expect(sig_ii[h - 1], sig_ii[h - 1], sig_ii[h - 1], alpha),
                decision_pair_expect(sig_jj[h - 1], sig_jj[h - 1], sig_jj[h - 1], alpha),
                decision_slope_pair_expect(sig_ij[h - 1], sig_ii[h - 1], sig_jj[h - 1], alpha),
            ),
            Activation::Relu => {
                let (ij, sdot) = relu_pair_expect(sig_ij[h - 1], sig_ii[h - 1], sig_jj[h - 1]);
                // On the diagonal the angle is zero: E[relu(u)^2] = S/2.
                (ij, 0.5 * sig_ii[h - 1], 0.5 * sig_jj[h - 1], sdot)
            }
        };
        sig_ij[h] = ij;
        sig_ii[h] = ii;
        sig_jj[h] = jj;
        sig_dot[h] = sdot;
    }

    // Theta = sum_{h=1}^{L+1} sig[h-1] * prod_{h'=h}^{L+1} sig_dot[h'].
    let mut theta = 0.0;
    let mut suffix = 1.0;
    theta += sig_ij[layers] * suffix;
    for h in (1..=layers).rev() {
        suffix *= sig_dot[h];
        theta += sig_ij[h - 1] * suffix;
    }
    theta
}

/// Arc-cosine pair expectations for ReLU: value kernel and slope kernel.
fn relu_pair_expect(dot_ij: f64, dot_ii: f64, dot_jj: f64) -> (f64, f64) {
    let pi = core::f64::consts::PI;
    let norm = libm::sqrt(dot_ii * dot_jj);
    if norm <= 0.0 {
        return (0.0, 0.0);
    }
    let cos_angle = clamp_unit(dot_ij / norm);
    let angle = libm::acos(cos_angle);
    let value = norm / (2.0 * pi) * (libm::sin(angle) + (pi - angle) * cos_angle);
    let slope = (pi - angle) / (2.0 * pi);
    (value, slope)
}

/// Gaussian kernel `exp(-gamma ||x_i - x_j||^2)`.
pub fn rbf(xi: &[f64], xj: &[f64], gamma: f64) -> f64 {
    let sq: f64 = xi.iter().zip(xj).map(|(a, b)| (a - b) * (a - b)).sum();
    libm::exp(-gamma * sq)
}

/// Assembles the limiting Gram matrix of `spec` over the inputs. Sample
/// self-products are computed once; the upper triangle is evaluated and
/// mirrored.
pub fn gram(spec: &KernelSpec, x: &InputMatrix) -> Result<GramMatrix> {
    spec.validate()?;
    let n = x.len();
    if n == 0 {
        return Err(Error::InsufficientSamples { need: 1, have: 0 });
    }
    let self_products: Vec<f64> = x.samples().map(|s| dot(s, s)).collect();
    let matrix = SymmetricMatrix::from_upper_fn(n, |i, j| {
        let d_ij = dot(x.sample(i), x.sample(j));
        match *spec {
            KernelSpec::Tntk { depth, alpha } => {
                tntk_limit_from_products(d_ij, self_products[i], self_products[j], depth, alpha)
            }
            KernelSpec::MlpNtk { hidden_layers, activation } => mlp_ntk_from_products(
                d_ij,
                self_products[i],
                self_products[j],
                hidden_layers,
                activation,
            ),
            KernelSpec::Rbf { gamma } => {
                libm::exp(-gamma * (self_products[i] + self_products[j] - 2.0 * d_ij))
            }
        }
    });
    Ok(GramMatrix { matrix, spec: spec.clone(), provenance: Provenance::Limiting })
}

/// Normalized deep-kernel profile: for unit inputs with inner product
/// `rho`, returns `Theta(rho) / Theta(1)` per depth — the quantity whose
/// flattening with growing depth is the degeneracy phenomenon.
pub fn degeneracy_profile(depths: &[usize], alpha: f64, rho_grid: &[f64]) -> Vec<Vec<f64>> {
    depths
        .iter()
        .map(|&d| {
            let at_one = tntk_limit_unit(1.0, d, alpha);
            rho_grid.iter().map(|&rho| tntk_limit_unit(rho, d, alpha) / at_one).collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::CounterRng;

    const PI: f64 = core::f64::consts::PI;

    #[test]
    fn orthogonal_inputs_give_quarter() {
        for &alpha in &[0.5, 2.0, 8.0] {
            assert_eq!(decision_pair_expect(0.0, 1.0, 1.0, alpha), 0.25);
            assert_eq!(decision_pair_expect(0.0, 3.0, 0.2, alpha), 0.25);
        }
    }

    #[test]
    fn slope_expect_hand_values() {
        // 4 / (9 pi) for orthogonal unit inputs at alpha = 2.
        let got = decision_slope_pair_expect(0.0, 1.0, 1.0, 2.0);
        assert!((got - 4.0 / (9.0 * PI)).abs() < 1e-15, "{got}");
        // 4 / (pi sqrt(17)) for identical unit inputs at alpha = 2.
        let got = decision_slope_pair_expect(1.0, 1.0, 1.0, 2.0);
        assert!((got - 4.0 / (PI * libm::sqrt(17.0))).abs() < 1e-15, "{got}");
    }

    #[test]
    fn pair_expect_hand_value_identical_inputs() {
        // (1/2pi) asin(8/9) + 1/4 at alpha = 2.
        let got = decision_pair_expect(1.0, 1.0, 1.0, 2.0);
        let expected = libm::asin(8.0 / 9.0) / (2.0 * PI) + 0.25;
        assert!((got - expected).abs() < 1e-15);
        assert!((got - 0.4243).abs() < 1e-4);
    }

    #[test]
    fn hard_split_limit_approaches_half() {
        let got = decision_pair_expect(1.0, 1.0, 1.0, 1e3);
        assert!((got - 0.5).abs() < 1e-3, "{got}");
        assert!(got < 0.5);
    }

    #[test]
    fn vanishing_hardness_slope_limit() {
        // As alpha -> 0 the radicand tends to 1, so Tdot ~ alpha^2 / pi.
        let alpha = 0.001;
        let got = decision_slope_pair_expect(0.3, 1.0, 1.0, alpha);
        assert!((got - alpha * alpha / PI).abs() < 1e-11, "{got}");
    }

    #[test]
    fn clamp_absorbs_rounding_overshoot() {
        // An inner product 1 + 1e-16 above the norm product must not NaN.
        let v = decision_pair_expect(1.0 + 1e-16, 1.0, 1.0, 1e3);
        assert!(v.is_finite());
        let v = decision_slope_pair_expect(1.0 + 1e-16, 1.0, 1.0, 8.0);
        assert!(v.is_finite());
    }

    #[test]
    fn tntk_orthogonal_unit_inputs() {
        let xi = [1.0, 0.0];
        let xj = [0.0, 1.0];
        for depth in [1, 2, 3, 7, 29] {
            for &alpha in &[0.5, 2.0, 64.0] {
                let got = tntk_limit(&xi, &xj, depth, alpha);
                let expected = libm::exp2(-(depth as f64));
                assert!(
                    (got - expected).abs() < 1e-14 * expected.max(1.0),
                    "d={depth} alpha={alpha}: {got} vs {expected}"
                );
            }
        }
    }

    #[test]
    fn tntk_depth_one_specialization() {
        let mut rng = CounterRng::new(31);
        for _ in 0..50 {
            let xi = rng.unit_vector(4);
            let xj = rng.unit_vector(4);
            let s = dot(&xi, &xj);
            let t = decision_pair_expect(s, 1.0, 1.0, 2.0);
            let t_dot = decision_slope_pair_expect(s, 1.0, 1.0, 2.0);
            let got = tntk_limit(&xi, &xj, 1, 2.0);
            assert!((got - 2.0 * (s * t_dot + t)).abs() < 1e-14);
        }
    }

    #[test]
    fn depth_one_kernel_equals_twice_two_layer_mlp() {
        let mut rng = CounterRng::new(77);
        for _ in 0..100 {
            let xi = rng.unit_vector(5);
            let xj = rng.unit_vector(5);
            for &alpha in &[0.5, 2.0, 8.0] {
                let tree = tntk_limit(&xi, &xj, 1, alpha);
                let mlp = mlp_ntk(&xi, &xj, 1, Activation::ScaledErf { alpha });
                assert!(
                    (tree - 2.0 * mlp).abs() <= 1e-12,
                    "alpha={alpha}: {tree} vs {}",
                    2.0 * mlp
                );
            }
        }
    }

    #[test]
    fn relu_ntk_single_layer_closed_values() {
        let xi = [1.0, 0.0];
        // Identical unit inputs: Sigma Sigma_dot + Sigma^(1) = 1/2 + 1/2.
        let same = mlp_ntk(&xi, &xi, 1, Activation::Relu);
        assert!((same - 1.0).abs() < 1e-14, "{same}");
        // Orthogonal unit inputs: 0 * 1/4 + 1/(2 pi).
        let xj = [0.0, 1.0];
        let orth = mlp_ntk(&xi, &xj, 1, Activation::Relu);
        assert!((orth - 1.0 / (2.0 * PI)).abs() < 1e-14, "{orth}");
    }

    #[test]
    fn rbf_trivials() {
        let xi = [0.3, -0.4];
        assert_eq!(rbf(&xi, &xi, 2.0), 1.0);
        let xj = [0.3, 0.6]; // squared distance 1
        assert!((rbf(&xi, &xj, 2.0) - libm::exp(-2.0)).abs() < 1e-15);
    }

    #[test]
    fn gram_single_point_matches_depth_one_formula() {
        let x = InputMatrix::from_samples(&[vec![1.0, 0.0]], vec![]).unwrap();
        let g = gram(&KernelSpec::Tntk { depth: 1, alpha: 2.0 }, &x).unwrap();
        let t = decision_pair_expect(1.0, 1.0, 1.0, 2.0);
        let t_dot = decision_slope_pair_expect(1.0, 1.0, 1.0, 2.0);
        assert_eq!(g.matrix.dim(), 1);
        assert!((g.matrix.get(0, 0) - 2.0 * (t_dot + t)).abs() < 1e-14);
        assert_eq!(g.provenance, Provenance::Limiting);
    }

    #[test]
    fn gram_two_orthogonal_points_depth_one() {
        let x =
            InputMatrix::from_samples(&[vec![1.0, 0.0], vec![0.0, 1.0]], vec![]).unwrap();
        let g = gram(&KernelSpec::Tntk { depth: 1, alpha: 2.0 }, &x).unwrap();
        assert!((g.matrix.get(0, 1) - 0.5).abs() < 1e-15);
        assert_eq!(g.matrix.get(0, 1), g.matrix.get(1, 0));
    }

    #[test]
    fn gram_is_exactly_symmetric_for_all_families() {
        let mut rng = CounterRng::new(3);
        let samples: Vec<Vec<f64>> = (0..8).map(|_| rng.unit_vector(4)).collect();
        let x = InputMatrix::from_samples(&samples, vec![]).unwrap();
        for spec in [
            KernelSpec::Tntk { depth: 3, alpha: 2.0 },
            KernelSpec::MlpNtk { hidden_layers: 3, activation: Activation::Relu },
            KernelSpec::MlpNtk { hidden_layers: 2, activation: Activation::ScaledErf { alpha: 2.0 } },
            KernelSpec::Rbf { gamma: 2.0 },
        ] {
            let g = gram(&spec, &x).unwrap();
            for i in 0..8 {
                for j in 0..8 {
                    assert_eq!(g.matrix.get(i, j), g.matrix.get(j, i));
                }
            }
        }
    }

    #[test]
    fn spec_validation() {
        assert!(KernelSpec::Tntk { depth: 0, alpha: 2.0 }.validate().is_err());
        assert!(KernelSpec::Tntk { depth: 1, alpha: 0.0 }.validate().is_err());
        assert!(KernelSpec::Tntk { depth: 1, alpha: f64::INFINITY }.validate().is_err());
        assert!(KernelSpec::MlpNtk { hidden_layers: 0, activation: Activation::Relu }
            .validate()
            .is_err());
        assert!(KernelSpec::Rbf { gamma: -1.0 }.validate().is_err());
        assert!(KernelSpec::Tntk { depth: 29, alpha: 64.0 }.validate().is_ok());
    }

    #[test]
    fn degeneracy_profile_normalization_and_flattening() {
        let rho_grid: Vec<f64> = (0..=190).map(|k| -1.0 + k as f64 * 0.01).collect();
        let profiles = degeneracy_profile(&[3, 29], 2.0, &rho_grid);
        // rho = 1 normalizes to exactly 1.
        let at_one = degeneracy_profile(&[3, 29], 2.0, &[1.0]);
        assert!((at_one[0][0] - 1.0).abs() < 1e-15);
        assert!((at_one[1][0] - 1.0).abs() < 1e-15);
        // The normalized curve over rho in [-1, 0.9] is flatter at d=29.
        let spread = |vals: &[f64]| {
            let max = vals.iter().fold(f64::MIN, |a, &b| a.max(b));
            let min = vals.iter().fold(f64::MAX, |a, &b| a.min(b));
            max - min
        };
        assert!(spread(&profiles[1]) < spread(&profiles[0]));
    }

    #[test]
    fn degenerate_leaf_share_vanishes_with_depth() {
        // At rho = 0 the kernel is the pure leaf term 2^-d, and the
        // normalized value (2 * 1/4)^d / (2 T(1,1))^d dies out because
        // 2 T(1,1) ~ 0.849 > 0.5 at alpha = 2.
        let t_one = decision_pair_expect(1.0, 1.0, 1.0, 2.0);
        assert!(2.0 * t_one > 0.5 && 2.0 * t_one < 1.0);
        let profiles = degeneracy_profile(&[3, 10, 29], 2.0, &[0.0]);
        let ratio3 = profiles[0][0];
        let ratio10 = profiles[1][0];
        let ratio29 = profiles[2][0];
        assert!(ratio3 > ratio10 && ratio10 > ratio29);
        assert!(ratio29 < 1e-3, "{ratio29}");
    }
}
