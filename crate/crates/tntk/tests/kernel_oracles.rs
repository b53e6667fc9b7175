//! Monte-Carlo verification of the closed-form kernels: the pair
//! expectations behind the tree kernel, the hard-split limit, and the
//! ReLU arc-cosine expressions, all checked against direct sampling of
//! their defining expectations.

mod common;

use common::{fit_line, mc_decision_pair_expectations, random_unit_inputs};
use tntk::kernel::{
    decision_pair_expect, decision_slope_pair_expect, gram, mlp_ntk, tntk_limit, Activation,
    KernelSpec,
};
use tntk::linalg::eigh;
use tntk::CounterRng;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[test]
fn pair_expectations_match_monte_carlo_on_random_pairs() {
    let mut rng = CounterRng::new(1);
    let samples = 1_000_000;
    for pair in 0..20 {
        let xi = rng.unit_vector(5);
        let xj = rng.unit_vector(5);
        let s = dot(&xi, &xj);
        for &alpha in &[0.5, 2.0, 8.0] {
            let (value, slope) =
                mc_decision_pair_expectations(s, 1.0, 1.0, alpha, samples, 1000 + pair);
            let t = decision_pair_expect(s, 1.0, 1.0, alpha);
            let t_dot = decision_slope_pair_expect(s, 1.0, 1.0, alpha);
            assert!(
                value.within(t, 3.0),
                "pair {pair} alpha {alpha}: T {t} vs MC {} (se {:.2e})",
                value.mean,
                value.std_error
            );
            assert!(
                slope.within(t_dot, 3.0),
                "pair {pair} alpha {alpha}: Tdot {t_dot} vs MC {} (se {:.2e})",
                slope.mean,
                slope.std_error
            );
        }
    }
}

#[test]
fn identical_inputs_value_expectation_matches_monte_carlo() {
    // Frozen closed-form value asin(8/9)/(2 pi) + 1/4 = 0.42425...
    let (value, _) = mc_decision_pair_expectations(1.0, 1.0, 1.0, 2.0, 10_000_000, 5);
    let t = decision_pair_expect(1.0, 1.0, 1.0, 2.0);
    assert!((t - 0.424_260_987_636_853_27).abs() < 1e-12);
    assert!((value.mean - t).abs() < 1e-3);
}

#[test]
fn slope_expectation_hand_and_monte_carlo() {
    let (_, slope) = mc_decision_pair_expectations(0.0, 1.0, 1.0, 2.0, 10_000_000, 6);
    let t_dot = decision_slope_pair_expect(0.0, 1.0, 1.0, 2.0);
    assert!((t_dot - 4.0 / (9.0 * std::f64::consts::PI)).abs() < 1e-15);
    assert!((slope.mean - t_dot).abs() < 1e-3);

    let (_, slope) = mc_decision_pair_expectations(1.0, 1.0, 1.0, 2.0, 10_000_000, 7);
    let t_dot = decision_slope_pair_expect(1.0, 1.0, 1.0, 2.0);
    assert!((t_dot - 4.0 / (std::f64::consts::PI * 17.0_f64.sqrt())).abs() < 1e-15);
    assert!((slope.mean - t_dot).abs() < 1e-3);
}

#[test]
fn hard_split_limit_matches_step_function_probability() {
    // For alpha -> infinity the decision function becomes a step, so
    // E[sigma sigma] tends to P(z_i > 0, z_j > 0) = 1/4 + asin(rho)/(2 pi).
    let alpha = 1e3;
    for &rho in &[0.3, 0.9, 1.0] {
        let t = decision_pair_expect(rho, 1.0, 1.0, alpha);
        let orthant = 0.25 + rho.min(1.0).asin() / (2.0 * std::f64::consts::PI);
        assert!((t - orthant).abs() < 2e-3, "rho {rho}: {t} vs {orthant}");
    }
    // Step-function Monte Carlo cross-check at rho = 0.3.
    let mut rng = CounterRng::new(8);
    let samples = 2_000_000;
    let mut hits = 0u64;
    for _ in 0..samples {
        let (zi, zj) = common::bivariate_gaussian(&mut rng, 1.0, 0.3, 1.0);
        if zi > 0.0 && zj > 0.0 {
            hits += 1;
        }
    }
    let p = hits as f64 / samples as f64;
    let t = decision_pair_expect(0.3, 1.0, 1.0, alpha);
    assert!((t - p).abs() < 2e-3, "{t} vs step MC {p}");
}

#[test]
fn relu_ntk_matches_direct_weight_sampling() {
    // Sample the defining expectations E[relu(u.x_i) relu(u.x_j)] and
    // E[step(u.x_i) step(u.x_j)] over explicit Gaussian weight vectors,
    // then assemble the 1-hidden-layer NTK from them.
    let mut rng = CounterRng::new(9);
    let xi = rng.unit_vector(4);
    let xj = rng.unit_vector(4);
    let s = dot(&xi, &xj);
    let samples = 2_000_000;
    let mut value_sum = 0.0;
    let mut slope_sum = 0.0;
    for _ in 0..samples {
        let u = rng.gaussian_vec(4);
        let zi = dot(&u, &xi);
        let zj = dot(&u, &xj);
        value_sum += zi.max(0.0) * zj.max(0.0);
        slope_sum += f64::from(u8::from(zi > 0.0) & u8::from(zj > 0.0));
    }
    let mc_theta = s * (slope_sum / samples as f64) + value_sum / samples as f64;
    let closed = mlp_ntk(&xi, &xj, 1, Activation::Relu);
    assert!((closed - mc_theta).abs() < 3e-3, "{closed} vs MC {mc_theta}");
}

#[test]
fn tntk_is_symmetric_and_rotation_invariant() {
    let mut rng = CounterRng::new(10);
    for _ in 0..50 {
        let xi = rng.unit_vector(6);
        let xj = rng.unit_vector(6);
        let direction = rng.gaussian_vec(6);
        let a = tntk_limit(&xi, &xj, 3, 2.0);
        let b = tntk_limit(&xj, &xi, 3, 2.0);
        assert_eq!(a, b, "exchange symmetry");
        let ri = common::reflect(&direction, &xi);
        let rj = common::reflect(&direction, &xj);
        let c = tntk_limit(&ri, &rj, 3, 2.0);
        assert!((a - c).abs() < 1e-9 * (1.0 + a.abs()), "rotation invariance: {a} vs {c}");
    }
}

#[test]
fn limiting_kernel_is_positive_definite_on_unit_inputs() {
    // Smaller spot-check of the positive definiteness property; the full
    // (depth, alpha) grid at N = 50 runs in the acceptance suite.
    let x = random_unit_inputs(20, 5, 11);
    for &(depth, alpha) in &[(1usize, 2.0), (3, 0.5), (10, 8.0)] {
        let g = gram(&KernelSpec::Tntk { depth, alpha }, &x).unwrap();
        let eig = eigh(&g.matrix).unwrap();
        assert!(
            eig.min_eigenvalue() > 1e-10,
            "d={depth} alpha={alpha}: lambda_min = {}",
            eig.min_eigenvalue()
        );
    }
}

#[test]
fn empirical_kernel_converges_to_the_closed_form_along_the_angle_sweep() {
    // Inputs (1, 0) and (cos beta, sin beta): the finite-ensemble kernel
    // at M = 4096 must track the closed form along the whole sweep.
    let depth = 3;
    let alpha = 2.0;
    let m = 4096;
    let ens = tntk::SoftTreeEnsemble::new_random(m, depth, alpha, 2, 77).unwrap();
    let xi = vec![1.0, 0.0];
    let mut worst: f64 = 0.0;
    for k in 0..=20 {
        let beta = std::f64::consts::PI * k as f64 / 20.0;
        let xj = vec![beta.cos(), beta.sin()];
        let x = tntk::dataset::InputMatrix::from_samples(&[xi.clone(), xj.clone()], Vec::new())
            .unwrap();
        let empirical = ens.empirical_ntk(&x, 0).unwrap().matrix.get(0, 1);
        let limit = tntk_limit(&xi, &xj, depth, alpha);
        worst = worst.max((empirical - limit).abs());
    }
    // O(1/sqrt(4096)) fluctuations; 0.08 is ~3x the typical observed
    // scatter for this seed family.
    assert!(worst < 0.08, "max |empirical - limit| = {worst}");
}

#[test]
fn empirical_error_shrinks_at_the_square_root_rate() {
    // Mini version of the convergence criterion: slope of log(mean error)
    // against log(M) for two seeds over three ensemble sizes.
    let depth = 3;
    let alpha = 2.0;
    let x = random_unit_inputs(12, 5, 13);
    let limit = gram(&KernelSpec::Tntk { depth, alpha }, &x).unwrap();
    let m_values = [16usize, 128, 1024];
    let mut log_m = Vec::new();
    let mut log_err = Vec::new();
    for &m in &m_values {
        let mut err_sum = 0.0;
        let seeds = 2;
        for seed in 0..seeds {
            let ens = tntk::SoftTreeEnsemble::new_random(m, depth, alpha, 5, seed).unwrap();
            let emp = ens.empirical_ntk(&x, 0).unwrap();
            let n = x.len();
            let mut err = 0.0;
            for i in 0..n {
                for j in 0..n {
                    err += (emp.matrix.get(i, j) - limit.matrix.get(i, j)).abs();
                }
            }
            err_sum += err / (n * n) as f64;
        }
        log_m.push((m as f64).ln());
        log_err.push((err_sum / 2.0).ln());
    }
    let (slope, _) = fit_line(&log_m, &log_err);
    assert!((-0.75..=-0.25).contains(&slope), "slope {slope}");
}
