//! Linear SVM trained by stochastic subgradient descent on the
//! L2-regularized hinge loss (Pegasos step size, averaged iterate).
//!
//! Features are standardized with the training mean and standard deviation
//! before training. The bias is carried as an extra constant-one feature.
//! There is no projection onto the `1/sqrt(lambda)` ball after each step;
//! with small `lambda` the early, very large steps made the clipped iterates
//! and their running average oscillate.

use serde::{Deserialize, Serialize};

use crate::rng::SplitMix64;

/// Per-column standardization fitted on training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Scaler {
    pub fn fit(rows: &[&[f64]]) -> Self {
        let d = rows.first().map_or(0, |r| r.len());
        let n = rows.len().max(1) as f64;
        let mut mean = vec![0.0; d];
        for r in rows {
            for (m, x) in mean.iter_mut().zip(r.iter()) {
                *m += x / n;
            }
        }
        let mut var = vec![0.0; d];
        for r in rows {
            for j in 0..d {
                var[j] += (r[j] - mean[j]).powi(2) / n;
            }
        }
        let scale = var
            .into_iter()
            .map(|v| if v > 1e-24 { v.sqrt() } else { 1.0 })
            .collect();
        Self { mean, scale }
    }

    pub fn apply(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.mean.iter().zip(&self.scale))
            .map(|(x, (m, s))| (x - m) / s)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    /// Weights in the standardized space.
    pub weights: Vec<f64>,
    pub bias: f64,
    pub scaler: Scaler,
}

impl SvmModel {
    pub fn decision(&self, row: &[f64]) -> f64 {
        let z = self.scaler.apply(row);
        z.iter().zip(&self.weights).map(|(a, b)| a * b).sum::<f64>() + self.bias
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmParams {
    pub lambda: f64,
    pub epochs: usize,
}

/// `lambda/2 * |w|^2 + mean(max(0, 1 - y (w.x + b)))`, with the bias
/// regularized along with the weights.
pub fn objective(w: &[f64], data: &[(Vec<f64>, f64)], lambda: f64) -> f64 {
    let reg = 0.5 * lambda * w.iter().map(|x| x * x).sum::<f64>();
    let hinge: f64 = data
        .iter()
        .map(|(x, y)| (1.0 - y * dot(w, x)).max(0.0))
        .sum::<f64>()
        / data.len() as f64;
    reg + hinge
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Train on rows with targets `+1.0` / `-1.0`. Returns the model and the
/// objective of the averaged iterate after each epoch.
pub fn train(
    rows: &[&[f64]],
    targets: &[f64],
    params: SvmParams,
    seed: u64,
) -> (SvmModel, Vec<f64>) {
    let scaler = Scaler::fit(rows);
    let data: Vec<(Vec<f64>, f64)> = rows
        .iter()
        .zip(targets)
        .map(|(r, &y)| {
            let mut z = scaler.apply(r);
            z.push(1.0);
            (z, y)
        })
        .collect();
    let dim = data.first().map_or(1, |(x, _)| x.len());
    let lambda = params.lambda;

    let mut rng = SplitMix64::new(seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut w = vec![0.0; dim];
    let mut avg = vec![0.0; dim];
    let mut t: u64 = 0;
    let mut trace = Vec::with_capacity(params.epochs);
    for _ in 0..params.epochs {
        rng.shuffle(&mut order);
        for &i in &order {
            t += 1;
            let (x, y) = &data[i];
            let eta = 1.0 / (lambda * t as f64);
            let margin = y * dot(&w, x);
            let shrink = 1.0 - eta * lambda;
            w.iter_mut().for_each(|v| *v *= shrink);
            if margin < 1.0 {
                for (v, xi) in w.iter_mut().zip(x) {
                    *v += eta * y * xi;
                }
            }
            let step = 1.0 / t as f64;
            for (a, v) in avg.iter_mut().zip(&w) {
                *a += (v - *a) * step;
            }
        }
        trace.push(objective(&avg, &data, lambda));
    }
    let bias = avg.pop().unwrap_or(0.0);
    (
        SvmModel {
            weights: avg,
            bias,
            scaler,
        },
        trace,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn separable() -> (Vec<Vec<f64>>, Vec<f64>) {
        (
            vec![
                vec![2.0, 2.0],
                vec![3.0, 3.5],
                vec![-2.0, -1.5],
                vec![-3.0, -1.0],
            ],
            vec![1.0, 1.0, -1.0, -1.0],
        )
    }

    #[test]
    fn separable_fixture_is_fit() {
        let (x, y) = separable();
        let rows: Vec<&[f64]> = x.iter().map(Vec::as_slice).collect();
        let (model, trace) = train(
            &rows,
            &y,
            SvmParams {
                lambda: 1e-3,
                epochs: 200,
            },
            42,
        );
        for (r, t) in x.iter().zip(&y) {
            assert!(model.decision(r) * t > 0.0);
        }
        for pair in trace.windows(2) {
            assert!(pair[1] <= pair[0] + 1e-6, "{} -> {}", pair[0], pair[1]);
        }
    }

    #[test]
    fn deterministic_for_seed() {
        let (x, y) = separable();
        let rows: Vec<&[f64]> = x.iter().map(Vec::as_slice).collect();
        let p = SvmParams {
            lambda: 1e-2,
            epochs: 20,
        };
        assert_eq!(train(&rows, &y, p, 5).0, train(&rows, &y, p, 5).0);
    }

    #[test]
    fn scaler_handles_constant_columns() {
        let rows = [[1.0, 4.0], [1.0, 6.0]];
        let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
        let s = Scaler::fit(&refs);
        assert_eq!(s.scale[0], 1.0);
        assert_eq!(s.apply(&[1.0, 5.0]), [0.0, 0.0]);
    }
}
