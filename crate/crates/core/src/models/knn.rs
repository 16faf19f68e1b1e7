//! k-nearest neighbours over stored training rows.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Euclidean,
    /// `1 - cos(a, b)`; a zero vector is at distance 1 from everything.
    Cosine,
}

impl Metric {
    pub fn distance(self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Metric::Euclidean => a
                .iter()
                .zip(b)
                .map(|(x, y)| (x - y).powi(2))
                .sum::<f64>()
                .sqrt(),
            Metric::Cosine => {
                let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
                let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
                let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
                if na == 0.0 || nb == 0.0 {
                    1.0
                } else {
                    1.0 - dot / (na * nb)
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub k: usize,
    pub metric: Metric,
    pub rows: Vec<Vec<f64>>,
    pub classes: Vec<usize>,
}

fn lexicographic(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

impl KnnModel {
    /// Majority class among the `k` nearest rows. Neighbours are ordered by
    /// distance, then class, then row values, so the result does not depend
    /// on the order of the training rows. A tied vote goes to the class of
    /// the single nearest neighbour.
    pub fn predict(&self, x: &[f64]) -> usize {
        let mut scored: Vec<(f64, usize)> = self
            .rows
            .iter()
            .enumerate()
            .map(|(i, r)| (self.metric.distance(x, r), i))
            .collect();
        scored.sort_by(|a, b| {
            a.0.total_cmp(&b.0)
                .then(self.classes[a.1].cmp(&self.classes[b.1]))
                .then_with(|| lexicographic(&self.rows[a.1], &self.rows[b.1]))
        });
        let k = self.k.min(scored.len());
        let mut votes = [0usize; 2];
        for &(_, i) in &scored[..k] {
            votes[self.classes[i]] += 1;
        }
        match votes[0].cmp(&votes[1]) {
            Ordering::Greater => 0,
            Ordering::Less => 1,
            Ordering::Equal => self.classes[scored[0].1],
        }
    }
}
