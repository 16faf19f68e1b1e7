//! Naive Bayes, Gaussian or multinomial.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NbVariant {
    Gaussian,
    Multinomial,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "lowercase")]
pub enum NbModel {
    Gaussian {
        log_prior: [f64; 2],
        mean: [Vec<f64>; 2],
        var: [Vec<f64>; 2],
    },
    Multinomial {
        log_prior: [f64; 2],
        /// `ln((count_cj + alpha) / (total_c + alpha * n_features))`
        feature_log_prob: [Vec<f64>; 2],
    },
}

fn log_priors(y: &[usize]) -> [f64; 2] {
    let n = y.len() as f64;
    let n1 = y.iter().filter(|&&c| c == 1).count() as f64;
    [((n - n1) / n).ln(), (n1 / n).ln()]
}

pub fn fit_gaussian(rows: &[&[f64]], y: &[usize], var_floor: f64) -> NbModel {
    let d = rows.first().map_or(0, |r| r.len());
    let mut mean = [vec![0.0; d], vec![0.0; d]];
    let mut count = [0.0f64; 2];
    for (r, &c) in rows.iter().zip(y) {
        count[c] += 1.0;
        for (m, x) in mean[c].iter_mut().zip(r.iter()) {
            *m += x;
        }
    }
    for c in 0..2 {
        mean[c].iter_mut().for_each(|m| *m /= count[c]);
    }
    let mut var = [vec![0.0; d], vec![0.0; d]];
    for (r, &c) in rows.iter().zip(y) {
        for j in 0..d {
            var[c][j] += (r[j] - mean[c][j]).powi(2);
        }
    }
    for c in 0..2 {
        var[c]
            .iter_mut()
            .for_each(|v| *v = (*v / count[c]).max(var_floor));
    }
    NbModel::Gaussian {
        log_prior: log_priors(y),
        mean,
        var,
    }
}

pub fn fit_multinomial(rows: &[&[f64]], y: &[usize], alpha: f64) -> Result<NbModel> {
    let d = rows.first().map_or(0, |r| r.len());
    let mut counts = [vec![0.0; d], vec![0.0; d]];
    for (r, &c) in rows.iter().zip(y) {
        for (acc, &x) in counts[c].iter_mut().zip(r.iter()) {
            if x < 0.0 {
                return Err(Error::Model(
                    "multinomial naive Bayes needs non-negative features".into(),
                ));
            }
            *acc += x;
        }
    }
    let feature_log_prob = counts.map(|cnt| {
        let total: f64 = cnt.iter().sum();
        let denom = total + alpha * d as f64;
        cnt.iter().map(|c| ((c + alpha) / denom).ln()).collect()
    });
    Ok(NbModel::Multinomial {
        log_prior: log_priors(y),
        feature_log_prob,
    })
}

impl NbModel {
    pub fn n_features(&self) -> usize {
        match self {
            NbModel::Gaussian { mean, .. } => mean[0].len(),
            NbModel::Multinomial {
                feature_log_prob, ..
            } => feature_log_prob[0].len(),
        }
    }

    /// Unnormalized joint log-likelihood `ln P(c) + ln P(x | c)` per class.
    pub fn joint_log_likelihood(&self, x: &[f64]) -> [f64; 2] {
        match self {
            NbModel::Gaussian {
                log_prior,
                mean,
                var,
            } => [0, 1].map(|c| {
                log_prior[c]
                    + x.iter()
                        .zip(mean[c].iter().zip(&var[c]))
                        .map(|(xi, (m, v))| {
                            -0.5 * (2.0 * std::f64::consts::PI * v).ln()
                                - (xi - m).powi(2) / (2.0 * v)
                        })
                        .sum::<f64>()
            }),
            NbModel::Multinomial {
                log_prior,
                feature_log_prob,
            } => [0, 1].map(|c| {
                log_prior[c]
                    + x.iter()
                        .zip(&feature_log_prob[c])
                        .map(|(xi, lp)| xi * lp)
                        .sum::<f64>()
            }),
        }
    }

    /// Normalized log posterior per class.
    pub fn log_posterior(&self, x: &[f64]) -> [f64; 2] {
        let j = self.joint_log_likelihood(x);
        let hi = j[0].max(j[1]);
        let norm = hi + ((j[0] - hi).exp() + (j[1] - hi).exp()).ln();
        [j[0] - norm, j[1] - norm]
    }

    /// Index of the larger joint log-likelihood; class 0 wins ties.
    pub fn predict(&self, x: &[f64]) -> usize {
        let j = self.joint_log_likelihood(x);
        usize::from(j[1] > j[0])
    }
}
