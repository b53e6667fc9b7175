//! Full-batch gradient descent on the squared loss, the closed-form
//! gradient-flow trajectory of the limiting kernel, and kernel-drift
//! measurement during training.
//!
//! The discrete descent iterates `theta <- theta - lr * J^T (f - y)`;
//! the analytic curve is the gradient-flow solution
//! `H_cross H^-1 (I - exp(-lr H tau)) y` evaluated through the
//! eigendecomposition of the train-set kernel. Overlaying the two uses
//! the step index as the flow time `tau`, i.e. flow time `step * lr`.

use alloc::vec;
use alloc::vec::Vec;

use crate::dataset::InputMatrix;
use crate::error::{Error, Result};
use crate::linalg::{eigh, Matrix, SymmetricMatrix};
use crate::tree::SoftTreeEnsemble;

/// Gradient-descent settings. Kernel constancy during training holds
/// when the learning rate stays below `2 / (lambda_min + lambda_max)`
/// of the limiting train-set kernel; that bound is the caller's to
/// honor.
#[derive(Debug, Clone, Copy)]
pub struct TrainingConfig {
    pub learning_rate: f64,
    pub steps: usize,
    /// Subtract the initialization output, so the trained function starts
    /// at zero everywhere and is directly comparable to the analytic
    /// trajectory.
    pub shift_initial_outputs: bool,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig { learning_rate: 0.1, steps: 2000, shift_initial_outputs: true }
    }
}

/// Per-step model outputs from a training run, plus the analytic
/// trajectory when one was computed, plus kernel drift at checkpoints.
#[derive(Debug, Clone, Default)]
pub struct TrajectoryResult {
    pub steps: Vec<usize>,
    /// `[step][train point]` outputs of the descending model.
    pub gd_train: Vec<Vec<f64>>,
    /// `[step][test point]`.
    pub gd_test: Vec<Vec<f64>>,
    /// Closed-form outputs on the same grids; empty unless filled by
    /// [`analytic_trajectory`].
    pub analytic_train: Vec<Vec<f64>>,
    pub analytic_test: Vec<Vec<f64>>,
    /// `(checkpoint step, sup |K_step - K_0|)` pairs.
    pub kernel_drift: Vec<(usize, f64)>,
}

/// Loss exceeding this multiple of the initial loss aborts the run.
const DIVERGENCE_FACTOR: f64 = 1e6;

fn shifted(outputs: &[f64], reference: &[f64], shift: bool) -> Vec<f64> {
    if shift {
        outputs.iter().zip(reference).map(|(o, r)| o - r).collect()
    } else {
        outputs.to_vec()
    }
}

fn squared_loss(outputs: &[f64], targets: &[f64]) -> f64 {
    0.5 * outputs.iter().zip(targets).map(|(o, t)| (o - t) * (o - t)).sum::<f64>()
}

/// One descent step on the squared loss at the ensemble's current
/// parameters, given the residuals `f - y` on the train points.
fn descend(
    ensemble: &mut SoftTreeEnsemble,
    x_train: &InputMatrix,
    residual: &[f64],
    learning_rate: f64,
) -> Result<()> {
    let mut grad = vec![0.0; ensemble.param_count()];
    for (i, sample) in x_train.samples().enumerate() {
        let row = ensemble.jacobian_row(sample)?;
        let r = residual[i];
        for (g, v) in grad.iter_mut().zip(&row) {
            *g += r * v;
        }
    }
    let mut params = ensemble.params();
    for (p, g) in params.iter_mut().zip(&grad) {
        *p -= learning_rate * g;
    }
    ensemble.set_params(&params)
}

/// Trains the ensemble by full-batch gradient descent on the squared
/// loss, recording outputs on the train and test points at every step.
/// With `shift_initial_outputs` the recorded (and fitted) function is
/// `f_step(x) - f_0(x)`.
pub fn train_gd(
    ensemble: &mut SoftTreeEnsemble,
    x_train: &InputMatrix,
    targets: &[f64],
    x_test: &InputMatrix,
    config: &TrainingConfig,
) -> Result<TrajectoryResult> {
    if targets.len() != x_train.len() {
        return Err(Error::DimensionMismatch { expected: x_train.len(), found: targets.len() });
    }
    if !(config.learning_rate >= 0.0 && config.learning_rate.is_finite()) {
        return Err(Error::InvalidArgument("learning rate must be finite and non-negative"));
    }

    let f0_train = ensemble.forward(x_train)?;
    let f0_test = ensemble.forward(x_test)?;
    let shift = config.shift_initial_outputs;

    let mut result = TrajectoryResult::default();
    let out_train = shifted(&f0_train, &f0_train, shift);
    let out_test = shifted(&f0_test, &f0_test, shift);
    let initial_loss = squared_loss(&out_train, targets);
    result.steps.push(0);
    result.gd_train.push(out_train.clone());
    result.gd_test.push(out_test);

    let mut current = out_train;
    for step in 1..=config.steps {
        let residual: Vec<f64> =
            current.iter().zip(targets).map(|(o, t)| o - t).collect();
        descend(ensemble, x_train, &residual, config.learning_rate)?;

        let raw_train = ensemble.forward(x_train)?;
        let raw_test = ensemble.forward(x_test)?;
        current = shifted(&raw_train, &f0_train, shift);
        let loss = squared_loss(&current, targets);
        if loss > DIVERGENCE_FACTOR * initial_loss.max(f64::MIN_POSITIVE) {
            return Err(Error::Diverged { step, loss, initial_loss });
        }
        result.steps.push(step);
        result.gd_train.push(current.clone());
        result.gd_test.push(shifted(&raw_test, &f0_test, shift));
    }
    Ok(result)
}

/// Closed-form gradient-flow outputs of the limiting kernel.
///
/// For each `tau` in the grid, the train-set outputs are
/// `Q diag(1 - exp(-lr lambda tau)) Q^T y` and the outputs at the test
/// points are `H_cross Q diag((1 - exp(-lr lambda tau)) / lambda) Q^T y`,
/// with the `lambda -> 0` limit `lr * tau` for the divided factor.
/// Returns `(train, test)` as per-tau output vectors.
pub fn analytic_trajectory(
    h_train: &SymmetricMatrix,
    h_cross: &Matrix,
    targets: &[f64],
    learning_rate: f64,
    tau_grid: &[f64],
) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    let n = h_train.dim();
    if targets.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: targets.len() });
    }
    if h_cross.cols() != n {
        return Err(Error::DimensionMismatch { expected: n, found: h_cross.cols() });
    }
    if tau_grid.windows(2).any(|w| w[1] < w[0]) || tau_grid.first().is_some_and(|&t| t < 0.0) {
        return Err(Error::InvalidArgument("tau grid must be ascending and non-negative"));
    }

    let eig = eigh(h_train)?;
    let projected = eig.project(targets)?;

    let mut train_curves = Vec::with_capacity(tau_grid.len());
    let mut test_curves = Vec::with_capacity(tau_grid.len());
    for &tau in tau_grid {
        let mut reached = vec![0.0; n]; // (1 - exp(-lr lambda tau)) w
        let mut divided = vec![0.0; n]; // the same over lambda
        for k in 0..n {
            let lambda = eig.eigenvalues[k];
            let decay = -libm::expm1(-learning_rate * lambda * tau);
            reached[k] = projected[k] * decay;
            divided[k] = projected[k]
                * if lambda.abs() < 1e-300 { learning_rate * tau } else { decay / lambda };
        }
        train_curves.push(eig.unproject(&reached)?);
        let dual = eig.unproject(&divided)?;
        test_curves.push(h_cross.mul_vec(&dual)?);
    }
    Ok((train_curves, test_curves))
}

/// Trains like [`train_gd`] while snapshotting the empirical kernel at the
/// given checkpoint steps; returns `(checkpoint, sup |K_tau - K_0|)` per
/// checkpoint. The kernel is probed on at most the first 50 inputs to
/// bound the cost of each snapshot.
pub fn kernel_drift(
    ensemble: &mut SoftTreeEnsemble,
    x_train: &InputMatrix,
    targets: &[f64],
    config: &TrainingConfig,
    checkpoints: &[usize],
) -> Result<Vec<(usize, f64)>> {
    if targets.len() != x_train.len() {
        return Err(Error::DimensionMismatch { expected: x_train.len(), found: targets.len() });
    }
    if checkpoints.iter().any(|&c| c > config.steps) {
        return Err(Error::InvalidArgument("checkpoints must lie within the training steps"));
    }

    let probe = if x_train.len() > 50 {
        let indices: Vec<usize> = (0..50).collect();
        x_train.subset(&indices)
    } else {
        x_train.clone()
    };
    let reference = ensemble.empirical_ntk(&probe, 0)?;

    let mut drifts = Vec::with_capacity(checkpoints.len());
    let snapshot = |ens: &SoftTreeEnsemble, step: usize, drifts: &mut Vec<(usize, f64)>| {
        if checkpoints.contains(&step) {
            let now = ens.empirical_ntk(&probe, step).unwrap_or_else(|_| reference.clone());
            let n = probe.len();
            let mut sup = 0.0_f64;
            for i in 0..n {
                for j in 0..n {
                    sup = sup.max((now.matrix.get(i, j) - reference.matrix.get(i, j)).abs());
                }
            }
            drifts.push((step, sup));
        }
    };
    snapshot(ensemble, 0, &mut drifts);

    let f0_train = ensemble.forward(x_train)?;
    let shift = config.shift_initial_outputs;
    let mut current = shifted(&f0_train, &f0_train, shift);
    let initial_loss = squared_loss(&current, targets);
    for step in 1..=config.steps {
        let residual: Vec<f64> =
            current.iter().zip(targets).map(|(o, t)| o - t).collect();
        descend(ensemble, x_train, &residual, config.learning_rate)?;
        let raw = ensemble.forward(x_train)?;
        current = shifted(&raw, &f0_train, shift);
        let loss = squared_loss(&current, targets);
        if loss > DIVERGENCE_FACTOR * initial_loss.max(f64::MIN_POSITIVE) {
            return Err(Error::Diverged { step, loss, initial_loss });
        }
        snapshot(ensemble, step, &mut drifts);
    }
    Ok(drifts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::CounterRng;

    fn random_inputs(n: usize, dim: usize, seed: u64) -> InputMatrix {
        let mut rng = CounterRng::new(seed);
        let samples: Vec<Vec<f64>> = (0..n).map(|_| rng.unit_vector(dim)).collect();
        InputMatrix::from_samples(&samples, vec![]).unwrap()
    }

    #[test]
    fn zero_learning_rate_changes_nothing() {
        let mut ens = SoftTreeEnsemble::new_random(4, 2, 2.0, 3, 1).unwrap();
        let before = ens.params();
        let x = random_inputs(5, 3, 2);
        let y = vec![1.0; 5];
        let config =
            TrainingConfig { learning_rate: 0.0, steps: 10, shift_initial_outputs: true };
        let result = train_gd(&mut ens, &x, &y, &random_inputs(2, 3, 3), &config).unwrap();
        assert_eq!(ens.params(), before);
        for step_outputs in &result.gd_train {
            for v in step_outputs {
                assert_eq!(*v, 0.0);
            }
        }
    }

    #[test]
    fn shifted_run_starts_at_zero_everywhere() {
        let mut ens = SoftTreeEnsemble::new_random(8, 3, 2.0, 4, 5).unwrap();
        let x = random_inputs(6, 4, 7);
        let y: Vec<f64> = CounterRng::new(8).gaussian_vec(6);
        let config =
            TrainingConfig { learning_rate: 0.05, steps: 3, shift_initial_outputs: true };
        let result = train_gd(&mut ens, &x, &y, &random_inputs(3, 4, 9), &config).unwrap();
        for v in result.gd_train[0].iter().chain(result.gd_test[0].iter()) {
            assert_eq!(*v, 0.0);
        }
    }

    #[test]
    fn analytic_trajectory_zero_tau_is_zero_and_infinite_tau_interpolates() {
        let mut h = SymmetricMatrix::zeros(2);
        h.set_sym(0, 0, 1.0);
        h.set_sym(1, 1, 2.0);
        h.set_sym(0, 1, 0.3);
        let cross = Matrix::from_fn(1, 2, |_, j| if j == 0 { 0.5 } else { -0.25 });
        let y = [1.0, -2.0];
        let (train, test) =
            analytic_trajectory(&h, &cross, &y, 0.1, &[0.0, 1e7]).unwrap();
        assert_eq!(train[0], vec![0.0, 0.0]);
        assert_eq!(test[0], vec![0.0]);
        // tau -> infinity reaches the ridge-less kernel regression limit.
        for (a, b) in train[1].iter().zip(&y) {
            assert!((a - b).abs() < 1e-9);
        }
        let dual = crate::linalg::cholesky_solve(&h, &y, 0.0).unwrap();
        let expected = cross.mul_vec(&dual).unwrap();
        assert!((test[1][0] - expected[0]).abs() < 1e-9);
    }

    #[test]
    fn analytic_trajectory_diagonal_hand_values() {
        // H = diag(1, 2), lr = 0.1, tau = 5: per-mode factors 1 - e^-0.5
        // and 1 - e^-1.
        let mut h = SymmetricMatrix::zeros(2);
        h.set_sym(0, 0, 1.0);
        h.set_sym(1, 1, 2.0);
        let cross = Matrix::from_fn(0, 2, |_, _| 0.0);
        let y = [1.0, 1.0];
        let (train, _) = analytic_trajectory(&h, &cross, &y, 0.1, &[0.0, 5.0]).unwrap();
        assert!((train[1][0] - 0.393_469_340_287_366_6).abs() < 1e-12);
        assert!((train[1][1] - 0.632_120_558_828_557_7).abs() < 1e-12);
    }

    #[test]
    fn tau_grid_must_ascend() {
        let h = SymmetricMatrix::identity(2);
        let cross = Matrix::zeros(1, 2);
        assert!(analytic_trajectory(&h, &cross, &[1.0, 1.0], 0.1, &[1.0, 0.5]).is_err());
        assert!(analytic_trajectory(&h, &cross, &[1.0, 1.0], 0.1, &[-1.0, 0.5]).is_err());
    }

    #[test]
    fn drift_at_step_zero_is_zero() {
        let mut ens = SoftTreeEnsemble::new_random(16, 2, 2.0, 3, 3).unwrap();
        let x = random_inputs(4, 3, 4);
        let y: Vec<f64> = CounterRng::new(5).gaussian_vec(4);
        let config =
            TrainingConfig { learning_rate: 0.1, steps: 5, shift_initial_outputs: true };
        let drifts = kernel_drift(&mut ens, &x, &y, &config, &[0, 5]).unwrap();
        assert_eq!(drifts[0], (0, 0.0));
        assert!(drifts[1].1 > 0.0);
    }

    #[test]
    fn divergent_learning_rate_is_detected() {
        let mut ens = SoftTreeEnsemble::new_random(2, 2, 2.0, 3, 6).unwrap();
        let x = random_inputs(6, 3, 7);
        let y = vec![2.0; 6];
        let config =
            TrainingConfig { learning_rate: 1e4, steps: 500, shift_initial_outputs: true };
        match train_gd(&mut ens, &x, &y, &random_inputs(1, 3, 8), &config) {
            Err(Error::Diverged { .. }) => {}
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn checkpoints_beyond_steps_are_rejected() {
        let mut ens = SoftTreeEnsemble::new_random(2, 1, 2.0, 2, 0).unwrap();
        let x = random_inputs(2, 2, 1);
        let config = TrainingConfig { learning_rate: 0.1, steps: 3, shift_initial_outputs: true };
        assert!(kernel_drift(&mut ens, &x, &[0.0, 0.0], &config, &[4]).is_err());
    }
}
