//! Principal component analysis on the column-centered sample covariance.
//!
//! The covariance is diagonalized with the cyclic Jacobi method. Components
//! are sorted by descending eigenvalue and each is signed so that its
//! largest-magnitude entry is positive.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{FeatureMatrix, Provenance};

const MAX_SWEEPS: usize = 100;

/// Eigenvalues and eigenvectors (as columns of the returned row-major
/// matrix) of a symmetric matrix, in no particular order.
#[allow(clippy::needless_range_loop)]
pub fn jacobi_eigen(sym: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = sym.len();
    let mut a: Vec<Vec<f64>> = sym.to_vec();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    let scale: f64 = a.iter().flatten().map(|x| x * x).sum();
    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off <= scale * 1e-32 || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p][q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for row in a.iter_mut() {
                    let (akp, akq) = (row[p], row[q]);
                    row[p] = c * akp - s * akq;
                    row[q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                a[p][q] = 0.0;
                a[q][p] = 0.0;
                for row in v.iter_mut() {
                    let (vkp, vkq) = (row[p], row[q]);
                    row[p] = c * vkp - s * vkq;
                    row[q] = s * vkp + c * vkq;
                }
            }
        }
    }
    ((0..n).map(|i| a[i][i]).collect(), v)
}

/// Sample covariance (denominator `n - 1`) of the columns and the column means.
#[allow(clippy::needless_range_loop)]
pub fn covariance(rows: &[&[f64]]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = rows.len();
    let d = rows.first().map_or(0, |r| r.len());
    let mut mean = vec![0.0; d];
    for r in rows {
        for (m, x) in mean.iter_mut().zip(r.iter()) {
            *m += x;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    let mut cov = vec![vec![0.0; d]; d];
    for r in rows {
        for i in 0..d {
            let ci = r[i] - mean[i];
            for j in i..d {
                cov[i][j] += ci * (r[j] - mean[j]);
            }
        }
    }
    let denom = (n.max(2) - 1) as f64;
    for i in 0..d {
        for j in i..d {
            cov[i][j] /= denom;
            cov[j][i] = cov[i][j];
        }
    }
    (mean, cov)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "mode", content = "value")]
pub enum PcaTarget {
    /// Smallest number of components whose variance reaches this fraction.
    Variance(f64),
    Components(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// Retained components, one unit vector per entry.
    pub components: Vec<Vec<f64>>,
    /// Variance along each retained component (its covariance eigenvalue).
    pub explained_variance: Vec<f64>,
    pub total_variance: f64,
    pub k: usize,
}

impl PcaModel {
    pub fn explained_ratio(&self) -> Vec<f64> {
        self.explained_variance
            .iter()
            .map(|v| {
                if self.total_variance > 0.0 {
                    v / self.total_variance
                } else {
                    0.0
                }
            })
            .collect()
    }

    pub fn transform_row(&self, row: &[f64]) -> Result<Vec<f64>> {
        if row.len() != self.mean.len() {
            return Err(Error::Model(format!(
                "pca expects {} columns, got {}",
                self.mean.len(),
                row.len()
            )));
        }
        Ok(self
            .components
            .iter()
            .map(|c| {
                c.iter()
                    .zip(row.iter().zip(&self.mean))
                    .map(|(w, (x, m))| w * (x - m))
                    .sum()
            })
            .collect())
    }

    /// Map projected coordinates back to the original space.
    pub fn inverse_row(&self, scores: &[f64]) -> Vec<f64> {
        let mut out = self.mean.clone();
        for (s, c) in scores.iter().zip(&self.components) {
            for (o, w) in out.iter_mut().zip(c) {
                *o += s * w;
            }
        }
        out
    }
}

pub fn pca_fit(matrix: &FeatureMatrix, target: PcaTarget) -> Result<PcaModel> {
    if matrix.n_rows() < 2 {
        return Err(Error::Model("pca needs at least 2 rows".into()));
    }
    if matrix.has_nan() {
        return Err(Error::Model("pca input contains non-finite values".into()));
    }
    let d = matrix.n_cols();
    if d == 0 {
        return Err(Error::Model("pca input has no columns".into()));
    }
    match target {
        PcaTarget::Variance(f) if !(f > 0.0 && f <= 1.0) => {
            return Err(Error::Model(format!("variance target {f} outside (0, 1]")))
        }
        PcaTarget::Components(k) if k == 0 || k > d => {
            return Err(Error::Model(format!("component count {k} outside 1..={d}")))
        }
        _ => {}
    }
    let rows: Vec<&[f64]> = matrix.rows().collect();
    let (mean, cov) = covariance(&rows);
    let (values, vectors) = jacobi_eigen(&cov);

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    let eigen: Vec<f64> = order.iter().map(|&i| values[i].max(0.0)).collect();
    let total: f64 = eigen.iter().sum();

    let k = match target {
        PcaTarget::Components(k) => k,
        PcaTarget::Variance(f) => {
            if total <= 0.0 {
                1
            } else {
                let goal = f * total - 1e-12 * total;
                let mut acc = 0.0;
                let mut k = d;
                for (i, v) in eigen.iter().enumerate() {
                    acc += v;
                    if acc >= goal {
                        k = i + 1;
                        break;
                    }
                }
                k
            }
        }
    };

    let components = order[..k]
        .iter()
        .map(|&col| {
            let mut c: Vec<f64> = (0..d).map(|r| vectors[r][col]).collect();
            let pivot =
                c.iter().enumerate().fold(
                    0,
                    |best, (i, x)| if x.abs() > c[best].abs() { i } else { best },
                );
            if c[pivot] < 0.0 {
                c.iter_mut().for_each(|x| *x = -*x);
            }
            c
        })
        .collect();
    Ok(PcaModel {
        mean,
        components,
        explained_variance: eigen[..k].to_vec(),
        total_variance: total,
        k,
    })
}

pub fn pca_transform(model: &PcaModel, matrix: &FeatureMatrix) -> Result<FeatureMatrix> {
    let rows = matrix
        .rows()
        .map(|r| model.transform_row(r))
        .collect::<Result<Vec<_>>>()?;
    FeatureMatrix::from_rows(
        matrix.row_ids.clone(),
        (1..=model.k).map(|i| format!("pc{i}")).collect(),
        Provenance::Pca,
        rows,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_aligned_variances() {
        // Column variances 4 and 1, zero covariance.
        let m = FeatureMatrix::from_raw(vec![
            vec![2.0, 1.0],
            vec![-2.0, 1.0],
            vec![2.0, -1.0],
            vec![-2.0, -1.0],
        ])
        .unwrap();
        let model = pca_fit(&m, PcaTarget::Components(2)).unwrap();
        let scale = 4.0 / 3.0;
        assert!((model.explained_variance[0] - 4.0 * scale).abs() < 1e-12);
        assert!((model.explained_variance[1] - scale).abs() < 1e-12);
        assert!((model.components[0][0] - 1.0).abs() < 1e-12);
        assert!(model.components[0][1].abs() < 1e-12);
        assert!((model.explained_ratio()[0] - 0.8).abs() < 1e-12);
    }

    #[test]
    fn full_variance_equals_rank() {
        // Third column is the sum of the first two: rank 2.
        let rows: Vec<Vec<f64>> = (0..8)
            .map(|i| {
                let a = (i as f64).sin() * 3.0;
                let b = (i as f64 * 0.7).cos();
                vec![a, b, a + b]
            })
            .collect();
        let m = FeatureMatrix::from_raw(rows).unwrap();
        assert_eq!(pca_fit(&m, PcaTarget::Variance(1.0)).unwrap().k, 2);
    }

    #[test]
    fn mean_row_maps_to_origin() {
        let m = FeatureMatrix::from_raw(vec![
            vec![1.0, 5.0, 2.0],
            vec![3.0, 1.0, 0.0],
            vec![2.0, 2.0, 7.0],
        ])
        .unwrap();
        let model = pca_fit(&m, PcaTarget::Variance(0.95)).unwrap();
        let z = model.transform_row(&model.mean.clone()).unwrap();
        assert!(z.iter().all(|v| v.abs() < 1e-12));
        assert!(model.transform_row(&[1.0]).is_err());
    }

    #[test]
    fn bad_targets() {
        let m = FeatureMatrix::from_raw(vec![vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        assert!(pca_fit(&m, PcaTarget::Variance(0.0)).is_err());
        assert!(pca_fit(&m, PcaTarget::Variance(1.5)).is_err());
        assert!(pca_fit(&m, PcaTarget::Components(3)).is_err());
        let one = FeatureMatrix::from_raw(vec![vec![1.0, 2.0]]).unwrap();
        assert!(pca_fit(&one, PcaTarget::Variance(0.9)).is_err());
    }

    #[test]
    fn constant_input_is_handled() {
        let m = FeatureMatrix::from_raw(vec![vec![1.0, 1.0]; 4]).unwrap();
        let model = pca_fit(&m, PcaTarget::Variance(0.95)).unwrap();
        assert_eq!(model.k, 1);
        assert_eq!(model.explained_variance, [0.0]);
    }
}
