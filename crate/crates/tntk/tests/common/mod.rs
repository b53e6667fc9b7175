#![allow(dead_code)]

use tntk::special::{decision, decision_slope};
use tntk::CounterRng;

/// Monte-Carlo mean with its standard error.
#[derive(Debug, Clone, Copy)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
}

impl McEstimate {
    pub fn within(&self, target: f64, sigmas: f64) -> bool {
        (self.mean - target).abs() <= sigmas * self.std_error
    }
}

fn accumulate(samples: &[f64]) -> McEstimate {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    McEstimate { mean, std_error: (var / n).sqrt() }
}

/// Draws from the bivariate normal with covariance
/// [[c11, c12], [c12, c22]] via its Cholesky factor.
pub fn bivariate_gaussian(rng: &mut CounterRng, c11: f64, c12: f64, c22: f64) -> (f64, f64) {
    let l11 = c11.sqrt();
    let l21 = if l11 > 0.0 { c12 / l11 } else { 0.0 };
    let l22 = (c22 - l21 * l21).max(0.0).sqrt();
    let g1 = rng.next_gaussian();
    let g2 = rng.next_gaussian();
    (l11 * g1, l21 * g1 + l22 * g2)
}

/// Monte-Carlo estimates of E[sigma(z_i) sigma(z_j)] and
/// E[sigma'(z_i) sigma'(z_j)] where (z_i, z_j) are the two projections of
/// a standard-normal weight vector onto inputs with the given inner
/// products. This is the defining expectation the closed forms replace,
/// so it is an implementation-independent oracle for them.
pub fn mc_decision_pair_expectations(
    dot_ij: f64,
    dot_ii: f64,
    dot_jj: f64,
    alpha: f64,
    samples: usize,
    seed: u64,
) -> (McEstimate, McEstimate) {
    let mut rng = CounterRng::new(seed);
    let mut value_products = Vec::with_capacity(samples);
    let mut slope_products = Vec::with_capacity(samples);
    for _ in 0..samples {
        let (zi, zj) = bivariate_gaussian(&mut rng, dot_ii, dot_ij, dot_jj);
        value_products.push(decision(alpha, zi) * decision(alpha, zj));
        slope_products.push(decision_slope(alpha, zi) * decision_slope(alpha, zj));
    }
    (accumulate(&value_products), accumulate(&slope_products))
}

/// Least-squares line fit; returns (slope, intercept).
pub fn fit_line(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Householder reflection `I - 2 v v^T / (v.v)` applied to `x`; an exact
/// orthogonal map for any nonzero direction `v`.
pub fn reflect(direction: &[f64], x: &[f64]) -> Vec<f64> {
    let vv: f64 = direction.iter().map(|v| v * v).sum();
    let vx: f64 = direction.iter().zip(x).map(|(v, xi)| v * xi).sum();
    x.iter().zip(direction).map(|(xi, v)| xi - 2.0 * vx * v / vv).collect()
}

/// Random unit-norm inputs as an `InputMatrix`.
pub fn random_unit_inputs(n: usize, dim: usize, seed: u64) -> tntk::dataset::InputMatrix {
    let mut rng = CounterRng::new(seed);
    let samples: Vec<Vec<f64>> = (0..n).map(|_| rng.unit_vector(dim)).collect();
    tntk::dataset::InputMatrix::from_samples(&samples, Vec::new()).unwrap()
}
